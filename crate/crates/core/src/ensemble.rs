//! Seeded ensembles of random backgrounds.

use crate::error::{IdsError, Result};
use crate::ids::{interacting_ids, noninteracting_ids, single_particle_ids, ModelConfig};
use crate::lattice::{mix64, InteractionKernel};

const SEED_STRIDE: u64 = 0x9e37_79b9_7f4a_7c15;

/// Per-realization seeds. Entry `i` depends only on `(master, i)`, so lists
/// for different `R` share a prefix; entries are distinct for `R ≤ 2⁶⁴`
/// because the odd-stride counter and the mixer are both bijective.
pub fn derive_seeds(master: u64, realizations: usize) -> Vec<u64> {
    (0..realizations as u64)
        .map(|i| mix64(master.wrapping_add(i.wrapping_add(1).wrapping_mul(SEED_STRIDE))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub model: ModelConfig,
    pub realizations: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn seeds(&self) -> Vec<u64> {
        derive_seeds(self.master_seed, self.realizations)
    }
}

/// Which counting function each realization contributes.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineSelector {
    SingleParticle,
    Noninteracting { n: usize },
    Interacting { n: usize, kernel: InteractionKernel },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    /// Unbiased sample variance across surviving realizations (zero for one).
    pub variance: Vec<f64>,
    pub survivors: usize,
    /// `(realization index, seed, error)` of excluded members.
    pub failures: Vec<(usize, u64, IdsError)>,
}

impl EnsembleResult {
    pub fn variance_of_mean(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v / self.survivors as f64).collect()
    }
}

fn realization(model: &ModelConfig, side: f64, selector: &PipelineSelector, grid: &[f64]) -> Result<Vec<f64>> {
    let f = match selector {
        PipelineSelector::SingleParticle => single_particle_ids(model, side)?.counting,
        PipelineSelector::Noninteracting { n } => noninteracting_ids(model, side, *n)?.function,
        PipelineSelector::Interacting { n, kernel } => {
            return Ok(interacting_ids(model, side, *n, kernel, grid)?.counts());
        }
    };
    Ok(grid.iter().map(|&e| f.value(e)).collect())
}

/// Pointwise mean and variance of normalized counting functions over the
/// ensemble, on a shared grid. Realizations run through `model.exec`; the
/// reduction is serial in seed order.
pub fn run_ensemble(
    spec: &EnsembleSpec,
    side: f64,
    selector: &PipelineSelector,
    grid: &[f64],
) -> Result<EnsembleResult> {
    if spec.realizations == 0 {
        return Err(IdsError::invalid("realizations", "need at least one realization"));
    }
    let seeds = spec.seeds();
    let members: Vec<(usize, u64)> = seeds.iter().copied().enumerate().collect();
    let outcomes = spec.model.exec.map(&members, |&(_, seed)| {
        let mut model = spec.model.clone();
        model.seed = seed;
        realization(&model, side, selector, grid)
    });

    let mut values = Vec::new();
    let mut failures = Vec::new();
    for ((index, seed), outcome) in members.into_iter().zip(outcomes) {
        match outcome {
            Ok(v) => values.push(v),
            Err(e) => failures.push((index, seed, e)),
        }
    }
    if values.is_empty() {
        return Err(failures
            .into_iter()
            .next()
            .map(|(_, _, e)| e)
            .expect("at least one realization ran"));
    }
    let r = values.len() as f64;
    let mut mean = vec![0.0; grid.len()];
    for v in &values {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let mut variance = vec![0.0; grid.len()];
    if values.len() > 1 {
        for v in &values {
            for ((s, x), m) in variance.iter_mut().zip(v).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        variance.iter_mut().for_each(|s| *s /= r - 1.0);
    }
    Ok(EnsembleResult {
        grid: grid.to_vec(),
        mean,
        variance,
        survivors: values.len(),
        failures,
    })
}
