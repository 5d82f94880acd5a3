//! Slice-sampler posterior inference for the four model classes.
//!
//! A cycle runs slices, allocations, label exchanges, sticks, atoms, alpha0,
//! D, lambda, a joint lambda/atom rescale and the stick regressions in that
//! order. Sticks beyond the largest occupied
//! component are dropped after the allocation step and redrawn from the
//! prior when a later slice needs them.

mod chainlog;
mod geweke;
mod sampler;
mod state;
mod summary;

pub use chainlog::{ChainLogReader, ChainLogWriter, CHAIN_LOG_MAGIC, CHAIN_LOG_VERSION};
pub use geweke::{geweke_test, GewekeReport};
pub use sampler::{covering_count, Acceptance, MoveStats, Sampler, StepSizes};
pub use state::{check_data, init_state, prior_draw, resample_observations, ChainState, ATOM_MAX};
pub use summary::{
    empirical_bayes_theta, predictive_quantile, predictive_summaries, randomized_quantile_residuals,
    Bands, JointGrid, MarginBands, PosteriorSummary, PredictiveGrid, PredictivePanel,
    ResidualReport,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{input, Result};
use crate::models::{FiniteMixture, MixtureModelSpec, MixtureWeights};
use crate::stats::{effective_sample_size, mean};

/// Burn-in iterations between two step-size adaptations.
pub const ADAPT_EVERY: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub burn_in: usize,
    pub keep: usize,
    pub thin: usize,
    pub steps: StepSizes,
    /// Tune step sizes during burn-in.
    pub adapt: bool,
    /// Fresh centering atoms sharing the leftover stick mass in a snapshot.
    pub tail_atoms: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burn_in: 5000,
            keep: 5000,
            thin: 1,
            steps: StepSizes::default(),
            adapt: true,
            tail_atoms: 20,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(input("thin must be positive"));
        }
        self.steps.validate()
    }
}

/// A kept draw reduced to what the predictive summaries need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: u64,
    pub discount: f64,
    pub lambda: f64,
    pub alpha0: Vec<f64>,
    pub occupied: u32,
    pub mixture: FiniteMixture,
}

impl Snapshot {
    /// Tail index per margin: alpha0_k / D for scale classes, the smallest
    /// active atom for the shape class.
    pub fn tail_index(&self, spec: &MixtureModelSpec) -> Vec<f64> {
        if spec.class.is_scale() {
            self.alpha0
                .iter()
                .map(|&a| crate::models::tail_index_from(a, self.discount))
                .collect()
        } else {
            vec![self.mixture.atoms.iter().copied().fold(f64::INFINITY, f64::min)]
        }
    }
}

/// Build a snapshot of the current state.
pub fn snapshot<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    st: &ChainState,
    iteration: u64,
    tail_atoms: usize,
    rng: &mut R,
) -> Result<Snapshot> {
    let terminal = st.is_terminal(spec);
    let weights = if spec.is_conditional() {
        MixtureWeights::Dependent {
            uniforms: st.sticks.clone(),
            betas: st.betas.clone(),
            terminal,
        }
    } else {
        MixtureWeights::Fixed {
            weights: st.weights(),
        }
    };
    let mut tail = Vec::new();
    if !terminal {
        for _ in 0..tail_atoms {
            tail.extend(state::draw_atom(spec, &st.alpha0, rng)?);
        }
    }
    let mut seen = vec![false; st.len()];
    st.alloc.iter().for_each(|&z| seen[z] = true);
    Ok(Snapshot {
        iteration,
        discount: st.discount,
        lambda: st.lambda,
        alpha0: st.alpha0.clone(),
        occupied: seen.iter().filter(|s| **s).count() as u32,
        mixture: FiniteMixture {
            weights,
            atoms: st.atoms.clone(),
            tail_atoms: tail,
            lambda: st.lambda,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveSizes {
    pub discount: f64,
    pub lambda: f64,
    pub alpha0: Vec<f64>,
    pub occupied: f64,
}

/// Scalar summaries of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub draws: usize,
    /// Tail-index draws per margin.
    pub tail_index: Vec<Vec<f64>>,
    pub mean_occupied: f64,
    pub ess: EffectiveSizes,
    pub acceptance: Acceptance,
    pub steps: StepSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainOutput {
    pub snapshots: Vec<Snapshot>,
    pub summary: Option<ChainSummary>,
}

pub fn summarize_chain(
    spec: &MixtureModelSpec,
    snapshots: &[Snapshot],
    acceptance: Acceptance,
    steps: StepSizes,
) -> Option<ChainSummary> {
    if snapshots.is_empty() {
        return None;
    }
    let series = |f: &dyn Fn(&Snapshot) -> f64| snapshots.iter().map(f).collect::<Vec<f64>>();
    let margins = snapshots[0].tail_index(spec).len();
    let tails: Vec<Vec<f64>> = snapshots.iter().map(|s| s.tail_index(spec)).collect();
    let occupied = series(&|s| s.occupied as f64);
    Some(ChainSummary {
        draws: snapshots.len(),
        tail_index: (0..margins).map(|k| tails.iter().map(|t| t[k]).collect()).collect(),
        mean_occupied: mean(&occupied),
        ess: EffectiveSizes {
            discount: effective_sample_size(&series(&|s| s.discount)),
            lambda: effective_sample_size(&series(&|s| s.lambda)),
            alpha0: (0..snapshots[0].alpha0.len())
                .map(|k| effective_sample_size(&series(&|s| s.alpha0[k])))
                .collect(),
            occupied: effective_sample_size(&occupied),
        },
        acceptance,
        steps,
    })
}

pub fn run_chain<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    data: &Dataset,
    config: &SamplerConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    run_chain_with(spec, data, config, rng, |_| Ok(()))
}

/// Run burn-in plus kept iterations, handing every snapshot to `on_keep`
/// as it is taken.
pub fn run_chain_with<R, F>(
    spec: &MixtureModelSpec,
    data: &Dataset,
    config: &SamplerConfig,
    rng: &mut R,
    mut on_keep: F,
) -> Result<ChainOutput>
where
    R: Rng + ?Sized,
    F: FnMut(&Snapshot) -> Result<()>,
{
    config.validate()?;
    let mut st = init_state(spec, data, rng)?;
    let mut sampler = Sampler::new(spec, data, config.steps)?;
    for it in 0..config.burn_in {
        sampler.cycle(&mut st, rng)?;
        if config.adapt && (it + 1) % ADAPT_EVERY == 0 {
            sampler.adapt();
        }
    }
    sampler.reset_stats();
    let mut snapshots = Vec::with_capacity(config.keep.div_ceil(config.thin));
    for it in 0..config.keep {
        sampler.cycle(&mut st, rng)?;
        if it % config.thin == 0 {
            let iteration = (config.burn_in + it + 1) as u64;
            let snap = snapshot(spec, &st, iteration, config.tail_atoms, rng)?;
            on_keep(&snap)?;
            snapshots.push(snap);
        }
    }
    let summary = summarize_chain(spec, &snapshots, sampler.stats, sampler.steps);
    Ok(ChainOutput { snapshots, summary })
}

#[cfg(test)]
mod tests;
