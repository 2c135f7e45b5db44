//! Built-in invariant suites for `idslab verify`. They run on small boxes
//! derived from the configured model so they finish in seconds.

use std::fmt::Write as _;

use idslab_core::ids::{
    energy_grid, interacting_ids, interacting_ids_dense, lemma_agreement, noninteracting_ids,
    noninteracting_ids_direct, noninteracting_ids_direct_on_grid, single_particle_ids, ModelConfig,
};
use idslab_core::lattice::{check_hypothesis_h2, BoundaryCondition, InteractionKernel, PotentialDescriptor};
use idslab_core::sparse::SparseSymmetricOperator;
use idslab_core::spectral::{dense_eigenvalues, inertia_count, sturm_count};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::Summary;
use crate::config::ExperimentConfig;
use crate::output::write_atomic;
use crate::{io_err, CliError};

#[derive(Debug, Default)]
struct Suite {
    name: &'static str,
    passed: usize,
    total: usize,
    notes: Vec<String>,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            name,
            ..Suite::default()
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else {
            self.notes.push(what());
        }
    }
}

fn dense_count(eigs: &[f64], e: f64) -> usize {
    eigs.partition_point(|&x| x <= e)
}

fn counting_oracle(seed: u64) -> Result<Suite, CliError> {
    let mut s = Suite::new("counting_oracle");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for instance in 0..40 {
        let dim = rng.gen_range(2..=48);
        let op = if instance % 2 == 0 {
            let diag: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let off: Vec<f64> = (1..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            SparseSymmetricOperator::from_tridiagonal(&diag, &off)?
        } else {
            let mut triplets: Vec<(usize, usize, f64)> = (0..dim).map(|i| (i, i, rng.gen_range(-4.0..4.0))).collect();
            for _ in 0..2 * dim {
                let (i, j) = (rng.gen_range(0..dim), rng.gen_range(0..dim));
                if i != j {
                    let v = rng.gen_range(-1.0..1.0);
                    triplets.push((i, j, v));
                    triplets.push((j, i, v));
                }
            }
            SparseSymmetricOperator::from_triplets(dim, &triplets)?
        };
        let eigs = dense_eigenvalues(&op)?;
        let (lo, hi) = op.gershgorin_bounds();
        for _ in 0..10 {
            let e = rng.gen_range(lo - 1.0..hi + 1.0);
            let expected = dense_count(&eigs, e);
            let got = inertia_count(&op, e)?;
            s.check(got == expected, || {
                format!("instance {instance} E={e}: inertia {got} vs dense {expected}")
            });
            if op.is_tridiagonal() {
                let got = sturm_count(&op, e)?;
                s.check(got == expected, || {
                    format!("instance {instance} E={e}: sturm {got} vs dense {expected}")
                });
            }
        }
    }
    Ok(s)
}

fn free_closed_form(h: f64) -> Result<Suite, CliError> {
    let mut s = Suite::new("free_closed_form");
    let m = 63;
    let model = ModelConfig::new(1, 1, h);
    let single = single_particle_ids(&model, (m + 1) as f64 * h)?;
    for (k, &lambda) in single.eigenvalues.iter().enumerate() {
        let theta = (k + 1) as f64 * std::f64::consts::PI / (m + 1) as f64;
        let exact = 2.0 / (h * h) * (1.0 - theta.cos());
        let rel = (lambda - exact).abs() / exact;
        s.check(rel <= 1e-9, || format!("k={} relative error {rel}", k + 1));
    }
    Ok(s)
}

/// The configured model on a box with `m` points per axis and at least two
/// particles.
fn small_model(config: &ExperimentConfig, m: usize) -> (ModelConfig, f64) {
    let mut model = config.model_config(idslab_core::Execution::Serial);
    model.n = model.n.max(2);
    (model, (m + 1) as f64 * config.model.h)
}

fn convolution_identity(config: &ExperimentConfig) -> Result<Suite, CliError> {
    let mut s = Suite::new("convolution_identity");
    for m in [4, 6, 8] {
        let (model, side) = small_model(config, m);
        if model.box_spec(side, model.n)?.dim() > model.dense_cap {
            continue;
        }
        let conv = noninteracting_ids(&model, side, model.n)?.function;
        let direct = noninteracting_ids_direct(&model, side, model.n)?;
        let a = lemma_agreement(&conv, &direct, model.convolution.merge_tol);
        s.check(a.exact(), || {
            format!("m={m}: {} of {} clusters differ", a.mismatches, a.clusters)
        });
        s.check(conv.total_raw_mass() == direct.total_raw_mass(), || {
            format!("m={m}: total mass differs")
        });
    }
    Ok(s)
}

fn domination(config: &ExperimentConfig) -> Result<Suite, CliError> {
    let mut s = Suite::new("domination");
    let kernel = config.kernel();
    let report = check_hypothesis_h2(&kernel, config.model.d, 1.0, f64::INFINITY)?;
    if !report.nonnegative {
        s.notes.push("skipped: kernel takes negative values".into());
        return Ok(s);
    }
    for m in [4, 6, 8] {
        let (model, side) = small_model(config, m);
        if model.box_spec(side, model.n)?.dim() > model.dense_cap {
            continue;
        }
        let int = interacting_ids_dense(&model, side, model.n, &kernel)?;
        let nonint = noninteracting_ids_direct(&model, side, model.n)?;
        for &e in int.breakpoints().iter().chain(nonint.breakpoints()) {
            let (a, b) = (int.raw_value(e), nonint.raw_value(e));
            s.check(a <= b, || format!("m={m} E={e}: interacting {a} > noninteracting {b}"));
        }
    }
    Ok(s)
}

fn zero_kernel_identity(config: &ExperimentConfig) -> Result<Suite, CliError> {
    let mut s = Suite::new("zero_kernel_identity");
    let (model, side) = small_model(config, 8);
    let conv = noninteracting_ids(&model, side, model.n)?.function;
    let lo = conv.breakpoints()[0] - 1.0;
    let hi = *conv.breakpoints().last().expect("nonempty spectrum") + 1.0;
    let grid = energy_grid((lo, hi), 64)?;
    let int = interacting_ids(&model, side, model.n, &InteractionKernel::Zero, &grid)?;
    let direct = noninteracting_ids_direct_on_grid(&model, side, model.n, &grid)?;
    s.check(int == direct, || "zero kernel changed the query counts".into());
    Ok(s)
}

/// Dirichlet counts never exceed Neumann counts on the same box.
fn boundary_bracketing(config: &ExperimentConfig) -> Result<Suite, CliError> {
    let mut s = Suite::new("boundary_bracketing");
    for m in [15, 31, 63] {
        let mut model = config.model_config(idslab_core::Execution::Serial);
        let side = (m + 1) as f64 * model.h;
        model.boundary = BoundaryCondition::Dirichlet;
        let dir = single_particle_ids(&model, side)?.counting;
        model.boundary = BoundaryCondition::Neumann;
        let neu = single_particle_ids(&model, side)?.counting;
        for &e in dir.breakpoints().iter().chain(neu.breakpoints()) {
            let (a, b) = (dir.raw_value(e), neu.raw_value(e));
            s.check(a <= b, || format!("m={m} E={e}: Dirichlet {a} > Neumann {b}"));
        }
    }
    Ok(s)
}

fn reproducibility(config: &ExperimentConfig) -> Result<Suite, CliError> {
    let mut s = Suite::new("reproducibility");
    let model = config.model_config(idslab_core::Execution::Serial);
    let side = 17.0 * model.h;
    let a = single_particle_ids(&model, side)?;
    let b = single_particle_ids(&model, side)?;
    s.check(a == b, || "same seed gave different spectra".into());
    if matches!(model.potential, PotentialDescriptor::Alloy(_)) {
        let mut other = model.clone();
        other.seed = model.seed.wrapping_add(1);
        let c = single_particle_ids(&other, side)?;
        s.check(a.eigenvalues != c.eigenvalues, || {
            "different seeds gave identical spectra".into()
        });
    }
    Ok(s)
}

pub(crate) fn run_suites(
    summary: &mut Summary,
    config: &ExperimentConfig,
    out: &std::path::Path,
) -> Result<(), CliError> {
    let suites = [
        counting_oracle(config.run.seed)?,
        free_closed_form(config.model.h)?,
        convolution_identity(config)?,
        domination(config)?,
        zero_kernel_identity(config)?,
        boundary_bracketing(config)?,
        reproducibility(config)?,
    ];
    let mut text = format!("# idslab verify config_hash={}\n", config.hash());
    let (mut passed, mut total) = (0, 0);
    for suite in &suites {
        passed += suite.passed;
        total += suite.total;
        let status = if suite.passed == suite.total { "PASS" } else { "FAIL" };
        let line = format!(
            "{status} {}: {}/{} checks passed",
            suite.name, suite.passed, suite.total
        );
        writeln!(text, "{line}").expect("write to string");
        for note in &suite.notes {
            writeln!(text, "  {note}").expect("write to string");
        }
        summary.lines.push(line);
    }
    let line = format!("verify: {passed}/{total} checks passed");
    writeln!(text, "{line}").expect("write to string");
    summary.lines.push(line);

    let path = out.join("verify_report.txt");
    write_atomic(&path, text.as_bytes()).map_err(io_err(&path))?;
    summary.files.push(path);
    if passed < total {
        for line in &summary.lines {
            println!("{line}");
        }
        return Err(CliError::Verification {
            failed: total - passed,
            total,
        });
    }
    Ok(())
}
