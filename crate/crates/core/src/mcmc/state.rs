use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{input, Error, Result};
use crate::models::{
    dependent_fraction, Alpha0Prior, Centering, DiscountPrior, Kernel, LambdaPrior,
    MixtureModelSpec,
};
use crate::special::{beta_variate, gamma_variate, open_unit, std_normal};

/// Kernel scales above this are clamped (centering draws) or rejected (moves).
pub const ATOM_MAX: f64 = 1e15;

/// Latent state of the slice sampler. Components are 0-based; the weight
/// of component h uses stick number h + 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub alloc: Vec<usize>,
    pub slices: Vec<f64>,
    /// Stick fractions V_h, or shared uniforms U_h for cond_scale.
    pub sticks: Vec<f64>,
    /// Row-major, `atom_dim` entries per component.
    pub atoms: Vec<f64>,
    /// Row-major, `design_dim` coefficients per component (cond_scale).
    pub betas: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub discount: f64,
    pub lambda: f64,
}

impl ChainState {
    pub fn len(&self) -> usize {
        self.sticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sticks.is_empty()
    }

    pub fn is_terminal(&self, spec: &MixtureModelSpec) -> bool {
        self.len() == spec.truncation
    }

    pub fn atom<'s>(&'s self, spec: &MixtureModelSpec, h: usize) -> &'s [f64] {
        let ad = spec.atom_dim();
        &self.atoms[h * ad..(h + 1) * ad]
    }

    pub fn beta<'s>(&'s self, spec: &MixtureModelSpec, h: usize) -> &'s [f64] {
        let p = spec.design_dim();
        &self.betas[h * p..(h + 1) * p]
    }

    /// Stick-breaking weights of the non-covariate classes.
    pub fn weights(&self) -> Vec<f64> {
        let mut rest = 1.0;
        self.sticks
            .iter()
            .map(|&v| {
                let w = v * rest;
                rest *= 1.0 - v;
                w
            })
            .collect()
    }

    /// Stick fraction h at design row x.
    pub fn fraction_at(&self, spec: &MixtureModelSpec, h: usize, x: &[f64]) -> f64 {
        if spec.is_conditional() {
            if self.is_terminal(spec) && h + 1 == self.len() {
                1.0
            } else {
                dependent_fraction(self.beta(spec, h), x, self.sticks[h], h + 1)
            }
        } else {
            self.sticks[h]
        }
    }

    /// Weights at design row x (any class).
    pub fn weights_at(&self, spec: &MixtureModelSpec, x: &[f64]) -> Vec<f64> {
        let mut rest = 1.0;
        (0..self.len())
            .map(|h| {
                let v = self.fraction_at(spec, h, x);
                let w = v * rest;
                rest *= 1.0 - v;
                w
            })
            .collect()
    }

    pub fn truncate(&mut self, spec: &MixtureModelSpec, m: usize) {
        self.sticks.truncate(m);
        self.atoms.truncate(m * spec.atom_dim());
        self.betas.truncate(m * spec.design_dim());
    }

    /// Append one stick with its atom (and coefficients) drawn from the prior.
    pub fn push_prior_stick<R: Rng + ?Sized>(
        &mut self,
        spec: &MixtureModelSpec,
        rng: &mut R,
    ) -> Result<()> {
        let h = self.len() + 1;
        let terminal = h == spec.truncation;
        if spec.is_conditional() {
            self.sticks.push(open_unit(rng));
            let s = spec.covariates.map_or(1.0, |c| c.slope_variance.sqrt());
            for _ in 0..spec.design_dim() {
                self.betas.push(s * std_normal(rng));
            }
        } else if terminal {
            self.sticks.push(1.0);
        } else {
            let (a, b) = spec.stick_law(h, self.discount);
            self.sticks.push(beta_variate(a, b, rng));
        }
        let atom = draw_atom(spec, &self.alpha0, rng)?;
        self.atoms.extend(atom);
        Ok(())
    }
}

pub(crate) fn draw_atom<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    alpha0: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut atom = spec.sample_atom(alpha0, rng)?;
    for a in atom.iter_mut() {
        *a = a.clamp(f64::MIN_POSITIVE, ATOM_MAX);
    }
    Ok(atom)
}

pub(crate) fn prior_discount_mean(spec: &MixtureModelSpec) -> f64 {
    match spec.discount {
        DiscountPrior::Fixed { value } => value,
        DiscountPrior::Beta { a, b } => a / (a + b),
    }
}

pub(crate) fn lambda_prior(spec: &MixtureModelSpec) -> Option<LambdaPrior> {
    match spec.kernel {
        Kernel::Erlang { lambda } => Some(lambda),
        Kernel::ParetoType { .. } => None,
    }
}

pub(crate) fn alpha0_prior(spec: &MixtureModelSpec) -> Option<Alpha0Prior> {
    match &spec.centering {
        Centering::ParetoII { alpha0, .. } => Some(*alpha0),
        _ => None,
    }
}

/// Check that the data fit the model's support and shape.
pub fn check_data(spec: &MixtureModelSpec, data: &Dataset) -> Result<()> {
    spec.validate()?;
    if data.n() > 0 && data.dim() != spec.dim {
        return Err(Error::Dimension {
            expected: spec.dim,
            got: data.dim(),
        });
    }
    let lower = match &spec.kernel {
        Kernel::Erlang { .. } => 0.0,
        Kernel::ParetoType { family } => family.support_lower(),
    };
    if let Some(i) = (0..data.n()).find(|&i| data.y(i).iter().any(|&v| !(v > lower) || !v.is_finite())) {
        return Err(input(format!("observation outside the kernel support (> {lower})")).at(i));
    }
    if spec.is_conditional() {
        let want = spec.design_dim() - 1;
        if data.n() > 0 && (!data.has_covariates() || data.covariate_dim() != want) {
            return Err(input(format!("cond_scale needs {want} covariate(s) per observation")));
        }
    }
    Ok(())
}

/// Initial state: everyone in component 0, one atom from the centering,
/// D and lambda at their prior means, alpha0 = 2; slices drawn and the
/// sticks extended until the slice condition holds.
pub fn init_state<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    data: &Dataset,
    rng: &mut R,
) -> Result<ChainState> {
    check_data(spec, data)?;
    let alpha0 = match alpha0_prior(spec) {
        Some(Alpha0Prior::Fixed { value }) => vec![value; spec.dim],
        Some(_) => vec![2.0; spec.dim],
        None => Vec::new(),
    };
    let lambda = match lambda_prior(spec) {
        Some(LambdaPrior::Fixed { value }) => value,
        Some(LambdaPrior::Gamma { shape, rate }) => shape / rate,
        None => 1.0,
    };
    let mut st = ChainState {
        alloc: vec![0; data.n()],
        slices: vec![0.0; data.n()],
        sticks: Vec::new(),
        atoms: Vec::new(),
        betas: Vec::new(),
        alpha0,
        discount: prior_discount_mean(spec),
        lambda,
    };
    let mut sampler = super::Sampler::new(spec, data, super::StepSizes::default())?;
    let groups = (data.n() / 20).clamp(1, 10).min(spec.truncation - 1).max(1);
    if spec.is_conditional() || groups < 2 || !matches!(spec.kernel, Kernel::Erlang { .. }) {
        st.push_prior_stick(spec, rng)?;
    } else {
        // rank groups of sum_k ln y, each atom matched to its group mean
        // through mean ~ sigma^2 / lambda
        let d = spec.dim;
        let size: Vec<f64> = (0..data.n()).map(|i| data.y(i).iter().map(|y| y.ln()).sum()).collect();
        let mut order: Vec<usize> = (0..data.n()).collect();
        order.sort_by(|&a, &b| size[a].total_cmp(&size[b]));
        for (r, &i) in order.iter().enumerate() {
            st.alloc[i] = r * groups / data.n();
        }
        for h in 0..groups {
            st.push_prior_stick(spec, rng)?;
            let members: Vec<usize> = (0..data.n()).filter(|&i| st.alloc[i] == h).collect();
            for k in 0..d {
                let mean = members.iter().map(|&i| data.y(i)[k]).sum::<f64>() / members.len() as f64;
                st.atoms[h * d + k] = (st.lambda * mean).sqrt().clamp(1e-3, ATOM_MAX);
            }
        }
        sampler.update_sticks(&mut st, rng);
    }
    sampler.update_slices(&mut st, rng)?;
    Ok(st)
}

/// A draw of (state, data) from the truncated prior, with all `truncation`
/// sticks instantiated; used by the joint-distribution tests.
pub fn prior_draw<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    n: usize,
    covariates: Option<&[Vec<f64>]>,
    rng: &mut R,
) -> Result<(ChainState, Dataset)> {
    spec.validate()?;
    let discount = match spec.discount {
        DiscountPrior::Fixed { value } => value,
        DiscountPrior::Beta { a, b } => beta_variate(a, b, rng),
    };
    let alpha0 = match alpha0_prior(spec) {
        Some(Alpha0Prior::Fixed { value }) => vec![value; spec.dim],
        Some(Alpha0Prior::Gamma { shape, rate }) => {
            (0..spec.dim).map(|_| gamma_variate(shape, rate, rng)).collect()
        }
        Some(Alpha0Prior::Jeffreys) => return Err(input("Jeffreys prior is improper")),
        None => Vec::new(),
    };
    let lambda = match lambda_prior(spec) {
        Some(LambdaPrior::Fixed { value }) => value,
        Some(LambdaPrior::Gamma { shape, rate }) => gamma_variate(shape, rate, rng),
        None => 1.0,
    };
    let mut st = ChainState {
        alloc: vec![0; n],
        slices: vec![0.0; n],
        sticks: Vec::new(),
        atoms: Vec::new(),
        betas: Vec::new(),
        alpha0,
        discount,
        lambda,
    };
    for _ in 0..spec.truncation {
        st.push_prior_stick(spec, rng)?;
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| covariates.map_or_else(Vec::new, |c| c[i].clone()))
        .collect();
    for i in 0..n {
        let design = spec.design(&rows[i]);
        let w = st.weights_at(spec, &design);
        st.alloc[i] = pick(&w, rng);
    }
    let y = resample_observations(spec, &st, rng)?;
    let data = Dataset::from_rows(&y, covariates)?;
    Ok((st, data))
}

/// Fresh observations y_i from the kernel of each allocated component.
pub fn resample_observations<R: Rng + ?Sized>(
    spec: &MixtureModelSpec,
    st: &ChainState,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    st.alloc
        .iter()
        .map(|&h| Ok(spec.component(st.atom(spec, h), st.lambda)?.sample(rng)))
        .collect()
}

pub(crate) fn pick<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (h, &p) in w.iter().enumerate() {
        acc += p;
        if u < acc {
            return h;
        }
    }
    w.len() - 1
}
