//! Joint-distribution check of the sampler: draws of parameters and data
//! from the prior are compared with a chain alternating one sampler cycle
//! and a fresh draw of the data given the parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{prior_draw, resample_observations, ChainState};
use super::{Sampler, StepSizes};
use crate::data::Dataset;
use crate::error::{input, Result};
use crate::models::{MixtureModelSpec, ModelClass};
use crate::special::logistic;
use crate::stats::{effective_sample_size, mean, variance};

/// Covariate value at which cond_scale stick functionals are read.
const X_STAR: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub names: Vec<String>,
    pub prior_means: Vec<f64>,
    pub chain_means: Vec<f64>,
    pub chain_ess: Vec<f64>,
    pub z: Vec<f64>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.z.iter().fold(0.0, |m, z| m.max(z.abs()))
    }
}

fn names(spec: &MixtureModelSpec) -> Vec<&'static str> {
    match spec.class {
        ModelClass::UniScale | ModelClass::MultiScale => vec!["D", "lambda", "alpha0", "pi_1"],
        ModelClass::CondScale => vec!["D_1(x*)", "lambda", "alpha0", "pi_1(x*)"],
        ModelClass::UniShape => vec!["D", "pi_1", "atom_1"],
    }
}

fn functionals(spec: &MixtureModelSpec, st: &ChainState) -> Vec<f64> {
    match spec.class {
        ModelClass::UniScale | ModelClass::MultiScale => {
            vec![st.discount, st.lambda, st.alpha0[0], st.sticks[0]]
        }
        ModelClass::CondScale => {
            let mut x = vec![X_STAR; spec.design_dim()];
            x[0] = 1.0;
            let eta: f64 = st.beta(spec, 0).iter().zip(&x).map(|(b, v)| b * v).sum();
            vec![
                logistic(eta),
                st.lambda,
                st.alpha0[0],
                st.fraction_at(spec, 0, &x),
            ]
        }
        ModelClass::UniShape => vec![st.discount, st.sticks[0], st.atoms[0]],
    }
}

/// Compare `prior_draws` independent prior draws with `cycles` steps of the
/// successive-conditional chain on `n` observations. The priors in `spec`
/// must be proper.
pub fn geweke_test<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    n: usize,
    covariates: Option<&[Vec<f64>]>,
    prior_draws: usize,
    cycles: usize,
    rng: &mut R,
) -> Result<GewekeReport> {
    if n == 0 || prior_draws < 2 || cycles < 2 {
        return Err(input("need observations, prior draws and cycles"));
    }
    let labels = names(spec);
    let k = labels.len();
    let mut prior: Vec<Vec<f64>> = vec![Vec::with_capacity(prior_draws); k];
    for _ in 0..prior_draws {
        let (st, _) = prior_draw(spec, n, covariates, rng)?;
        functionals(spec, &st).into_iter().enumerate().for_each(|(j, v)| prior[j].push(v));
    }
    let mut chain: Vec<Vec<f64>> = vec![Vec::with_capacity(cycles); k];
    let (mut st, mut data) = prior_draw(spec, n, covariates, rng)?;
    for _ in 0..cycles {
        {
            let mut sampler = Sampler::new(spec, &data, StepSizes::default())?;
            sampler.cycle(&mut st, rng)?;
        }
        functionals(spec, &st).into_iter().enumerate().for_each(|(j, v)| chain[j].push(v));
        let y = resample_observations(spec, &st, rng)?;
        data = Dataset::from_rows(&y, covariates)?;
    }
    let mut report = GewekeReport {
        names: labels.iter().map(|s| s.to_string()).collect(),
        prior_means: Vec::new(),
        chain_means: Vec::new(),
        chain_ess: Vec::new(),
        z: Vec::new(),
    };
    for j in 0..k {
        let (mp, mc) = (mean(&prior[j]), mean(&chain[j]));
        let ess = effective_sample_size(&chain[j]);
        let se = (variance(&prior[j]) / prior_draws as f64 + variance(&chain[j]) / ess).sqrt();
        report.prior_means.push(mp);
        report.chain_means.push(mc);
        report.chain_ess.push(ess);
        report.z.push(if se > 0.0 { (mp - mc) / se } else { 0.0 });
    }
    Ok(report)
}
