//! End-to-end checks of lattice assembly and the IDS paths against
//! brute-force constructions.

use idslab_core::ensemble::{derive_seeds, run_ensemble, EnsembleSpec, PipelineSelector};
use idslab_core::ids::{
    convolve_counting, energy_grid, interacting_ids, interacting_ids_dense, lemma_agreement, noninteracting_ids,
    noninteracting_ids_direct, single_particle_ids, support_fraction, ConvolutionOptions, ModelConfig, MERGE_TOL,
};
use idslab_core::lattice::{
    interaction_field, lift_potential, sample_potential, AlloyParams, BoundaryCondition, BoxSpec, InteractionKernel,
    PotentialDescriptor,
};
use idslab_core::spectral::dense_eigenvalues;

fn alloy() -> PotentialDescriptor {
    PotentialDescriptor::Alloy(AlloyParams::default())
}

fn bump() -> InteractionKernel {
    InteractionKernel::CompactBump {
        radius: 0.5,
        height: 1.0,
    }
}

fn side_for(m: usize, h: f64) -> f64 {
    (m + 1) as f64 * h
}

#[test]
fn noninteracting_spectrum_is_all_pairwise_sums() {
    let model = ModelConfig::new(1, 2, 0.25).with_potential(alloy(), 11);
    let side = side_for(9, 0.25);
    let single = single_particle_ids(&model, side).unwrap().eigenvalues;
    let mut sums: Vec<f64> = single.iter().flat_map(|a| single.iter().map(move |b| a + b)).collect();
    sums.sort_by(f64::total_cmp);
    let op = model.many_particle_operator(side, 2, None).unwrap();
    let eigs = dense_eigenvalues(&op).unwrap();
    assert_eq!(eigs.len(), sums.len());
    for (a, b) in eigs.iter().zip(&sums) {
        assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn two_dimensional_laplacian_is_a_kronecker_sum() {
    let h = 0.5;
    let m = 7;
    let model = ModelConfig::new(2, 1, h);
    let op = model.single_particle_operator(side_for(m, h)).unwrap();
    let eigs = dense_eigenvalues(&op).unwrap();
    let one_d: Vec<f64> = (1..=m)
        .map(|k| 2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (m + 1) as f64).cos()))
        .collect();
    let mut sums: Vec<f64> = one_d.iter().flat_map(|a| one_d.iter().map(move |b| a + b)).collect();
    sums.sort_by(f64::total_cmp);
    for (a, b) in eigs.iter().zip(&sums) {
        assert!((a - b).abs() < 1e-10 * b, "{a} vs {b}");
    }
}

#[test]
fn assembled_matrix_matches_hand_built_dense() {
    let h = 0.5;
    let m = 5;
    let side = side_for(m, h);
    let kernel = InteractionKernel::Yukawa { regularization: None }.resolved(h);
    let model = ModelConfig::new(1, 2, h).with_potential(alloy(), 3);
    let op = model.many_particle_operator(side, 2, Some(&kernel)).unwrap();

    let spec1 = BoxSpec::new(1, 1, side, h, BoundaryCondition::Dirichlet).unwrap();
    let v = sample_potential(&alloy(), &spec1, 3).unwrap().values;
    let x = |s: usize| (s as f64 - (m - 1) as f64 / 2.0) * h;
    let dim = m * m;
    let mut dense = vec![0.0; dim * dim];
    for a in 0..m {
        for b in 0..m {
            let p = a * m + b;
            dense[p * dim + p] = 4.0 / (h * h) + v[a] + v[b] + kernel.eval(&[x(a) - x(b)]);
            for (na, nb) in [(a.wrapping_sub(1), b), (a + 1, b), (a, b.wrapping_sub(1)), (a, b + 1)] {
                if na < m && nb < m {
                    dense[p * dim + na * m + nb] = -1.0 / (h * h);
                }
            }
        }
    }
    let ours = op.to_dense();
    for (k, (a, b)) in ours.iter().zip(&dense).enumerate() {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "entry {k}: {a} vs {b}");
    }
}

#[test]
fn interacting_operator_commutes_with_particle_swap() {
    let h = 0.25;
    let m = 10;
    let model = ModelConfig::new(1, 2, h).with_potential(alloy(), 8);
    let op = model.many_particle_operator(side_for(m, h), 2, Some(&bump())).unwrap();
    let swap = |p: usize| (p % m) * m + p / m;
    for p in 0..m * m {
        for (q, v) in op.row(p) {
            assert_eq!(op.get(swap(p), swap(q)), Some(v));
        }
    }
}

#[test]
fn yukawa_field_is_swap_symmetric() {
    let spec = BoxSpec::new(2, 2, 2.5, 0.5, BoundaryCondition::Dirichlet).unwrap();
    let field = interaction_field(
        &InteractionKernel::Yukawa {
            regularization: Some(0.5),
        },
        &spec,
    )
    .unwrap();
    let mm = spec.single_particle_dim();
    for a in 0..mm {
        for b in 0..mm {
            assert_eq!(field[a * mm + b].to_bits(), field[b * mm + a].to_bits());
        }
    }
}

#[test]
fn three_particle_lift_matches_triple_loop() {
    let spec = BoxSpec::new(1, 3, 1.25, 0.25, BoundaryCondition::Dirichlet).unwrap();
    assert_eq!(spec.points_per_axis(), 4);
    let single = spec.with_particles(1).unwrap();
    let v1 = sample_potential(&alloy(), &single, 19).unwrap();
    let lifted = lift_potential(&v1, &spec).unwrap();
    let v = &v1.values;
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                assert_eq!(lifted[(a * 4 + b) * 4 + c], v[a] + v[b] + v[c]);
            }
        }
    }
}

#[test]
fn convolution_identity_is_exact_up_to_m_twenty() {
    let h = 0.25;
    for m in [8, 12, 16, 20] {
        let model = ModelConfig::new(1, 2, h).with_potential(alloy(), 42);
        let side = side_for(m, h);
        let conv = noninteracting_ids(&model, side, 2).unwrap();
        assert!(conv.bin_width.is_none());
        let direct = noninteracting_ids_direct(&model, side, 2).unwrap();
        let agreement = lemma_agreement(&conv.function, &direct, MERGE_TOL);
        assert!(agreement.exact(), "m={m}: {agreement:?}");
        assert_eq!(conv.function.total_raw_mass(), (m * m) as f64);
    }
}

#[test]
fn three_particle_convolution_matches_direct() {
    let model = ModelConfig::new(1, 3, 0.25).with_potential(alloy(), 4);
    let side = side_for(6, 0.25);
    let conv = noninteracting_ids(&model, side, 3).unwrap().function;
    let direct = noninteracting_ids_direct(&model, side, 3).unwrap();
    assert!(lemma_agreement(&conv, &direct, MERGE_TOL).exact());
}

#[test]
fn binned_convolution_conserves_mass() {
    let model = ModelConfig::new(1, 1, 0.25).with_potential(alloy(), 1);
    let single = single_particle_ids(&model, side_for(40, 0.25)).unwrap();
    let opts = ConvolutionOptions {
        exact_cap: 100,
        bin_width: Some(0.5),
        ..ConvolutionOptions::default()
    };
    let binned = convolve_counting(&single.counting, &single.measure, &opts).unwrap();
    assert_eq!(binned.bin_width, Some(0.5));
    assert_eq!(binned.function.total_raw_mass(), 1600.0);
    let exact = convolve_counting(&single.counting, &single.measure, &ConvolutionOptions::default()).unwrap();
    assert_eq!(exact.function.total_raw_mass(), 1600.0);
    // jumps move right, never left
    for &e in exact.function.breakpoints() {
        assert!(binned.function.raw_value(e) <= exact.function.raw_value(e));
    }
}

#[test]
fn query_path_matches_dense_interacting_spectrum() {
    let h = 0.25;
    let m = 16;
    let side = side_for(m, h);
    let model = ModelConfig::new(1, 2, h).with_potential(alloy(), 42);
    let dense = interacting_ids_dense(&model, side, 2, &bump()).unwrap();
    let grid = energy_grid((0.0, 40.0), 300).unwrap();
    let queried = interacting_ids(&model, side, 2, &bump(), &grid).unwrap();
    for (k, &e) in grid.iter().enumerate() {
        assert_eq!(queried.raw_counts()[k], dense.raw_value(e), "E={e}");
    }
}

#[test]
fn interaction_only_lowers_counts() {
    let h = 0.25;
    let model = ModelConfig::new(1, 2, h).with_potential(alloy(), 42);
    for m in [8, 12, 16] {
        let side = side_for(m, h);
        let int = interacting_ids_dense(&model, side, 2, &bump()).unwrap();
        let nonint = noninteracting_ids_direct(&model, side, 2).unwrap();
        for &e in int.breakpoints().iter().chain(nonint.breakpoints()) {
            assert!(int.raw_value(e) <= nonint.raw_value(e), "m={m} E={e}");
        }
    }
}

#[test]
fn dirichlet_neumann_gap_shrinks() {
    let mut model = ModelConfig::new(1, 1, 0.25).with_potential(alloy(), 42);
    let mut previous = f64::INFINITY;
    for side in [16.0, 32.0, 64.0] {
        model.boundary = BoundaryCondition::Dirichlet;
        let dir = single_particle_ids(&model, side).unwrap().counting;
        model.boundary = BoundaryCondition::Neumann;
        let neu = single_particle_ids(&model, side).unwrap().counting;
        let grid = energy_grid((-1.0, 10.0), 400).unwrap();
        let gap = dir.sup_distance_on(&neu, &grid);
        assert!(gap <= previous, "L={side}: {gap} > {previous}");
        // the two operators differ by rank two, so counts differ by at most 2
        assert!(gap <= 2.0 / dir.normalization() + 1e-15);
        previous = gap;
    }
}

#[test]
fn support_constant_is_stable_under_doubling() {
    let h = 0.25;
    let mut constants = Vec::new();
    let mut fractions = Vec::new();
    for side in [8.0, 16.0, 32.0, 64.0] {
        let spec = BoxSpec::new(1, 2, side, h, BoundaryCondition::Dirichlet).unwrap();
        let field = interaction_field(&bump(), &spec).unwrap();
        let s = support_fraction(&field, 0.1, &spec).unwrap();
        constants.push(s.scaled_constant);
        fractions.push(s.fraction);
    }
    let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = constants.iter().cloned().fold(0.0, f64::max);
    assert!(hi / lo <= 1.2, "{constants:?}");
    for w in fractions.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..=2.2).contains(&ratio), "{fractions:?}");
    }
}

#[test]
fn variance_of_the_mean_falls_with_more_realizations() {
    let model = ModelConfig::new(1, 1, 0.25).with_potential(alloy(), 0);
    let side = side_for(64, 0.25);
    let grid = energy_grid((0.0, 6.0), 200).unwrap();
    let run = |r: usize| {
        let spec = EnsembleSpec {
            model: model.clone(),
            realizations: r,
            master_seed: 2718,
        };
        run_ensemble(&spec, side, &PipelineSelector::SingleParticle, &grid).unwrap()
    };
    let small: f64 = run(4).variance_of_mean().iter().sum();
    let large: f64 = run(16).variance_of_mean().iter().sum();
    let ratio = small / large;
    assert!((2.0..=6.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn ensemble_reduction_is_order_independent_of_scheduling() {
    let model = ModelConfig::new(1, 2, 0.25).with_potential(alloy(), 0);
    let grid = energy_grid((0.0, 20.0), 50).unwrap();
    let mut serial = model.clone();
    serial.exec = idslab_core::Execution::Serial;
    let selector = PipelineSelector::Interacting { n: 2, kernel: bump() };
    let a = run_ensemble(
        &EnsembleSpec {
            model,
            realizations: 3,
            master_seed: 5,
        },
        4.0,
        &selector,
        &grid,
    )
    .unwrap();
    let b = run_ensemble(
        &EnsembleSpec {
            model: serial,
            realizations: 3,
            master_seed: 5,
        },
        4.0,
        &selector,
        &grid,
    )
    .unwrap();
    assert_eq!(a, b);
    assert_eq!(derive_seeds(5, 3).len(), 3);
}
