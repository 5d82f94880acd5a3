//! Model specifications for the four mixture classes and exact evaluation of
//! truncated mixtures.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dists::{
    copula_centering_sample, ErlangKernel, GumbelCopula, ParetoFamily, ParetoII, Univariate,
};
use crate::error::{domain, input, Error, Result};
use crate::measures::{weights_from_fractions, RandomMeasureDraw};
use crate::special::{beta_quantile, gamma_variate, ln_gamma_pdf, logistic, LOGIT_CLAMP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelClass {
    UniScale,
    UniShape,
    MultiScale,
    CondScale,
}

impl ModelClass {
    pub fn is_scale(&self) -> bool {
        !matches!(self, ModelClass::UniShape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscountPrior {
    Fixed { value: f64 },
    Beta { a: f64, b: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Alpha0Prior {
    Fixed { value: f64 },
    Jeffreys,
    Gamma { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaPrior {
    Fixed { value: f64 },
    Gamma { shape: f64, rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    /// Er(y; ceil(sigma), sigma / lambda) per margin.
    Erlang { lambda: LambdaPrior },
    /// Pareto-type kernel whose tail index is the mixing atom.
    ParetoType { family: ParetoFamily<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Centering {
    /// Pareto II margins on the kernel scales, joined by a Gumbel copula.
    #[serde(rename = "pareto_ii")]
    ParetoII {
        betas: Vec<f64>,
        alpha0: Alpha0Prior,
        theta: f64,
    },
    /// Gamma law on the kernel tail index.
    Gamma { shape: f64, rate: f64 },
    /// location + ParetoII(alpha0, beta) on the kernel tail index.
    #[serde(rename = "shifted_pareto_ii")]
    ShiftedParetoII { location: f64, alpha0: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    /// Number of raw covariates; an intercept column is prepended.
    pub count: usize,
    /// Prior variance s^2 of each regression coefficient.
    pub slope_variance: f64,
}

impl CovariateSpec {
    pub fn design_dim(&self) -> usize {
        self.count + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModelSpec {
    pub class: ModelClass,
    pub dim: usize,
    /// Pitman-Yor precision M.
    pub precision: f64,
    pub discount: DiscountPrior,
    pub kernel: Kernel,
    pub centering: Centering,
    pub covariates: Option<CovariateSpec>,
    /// Cap on instantiated sticks; the last stick takes all remaining mass.
    pub truncation: usize,
}

const DEFAULT_LAMBDA: LambdaPrior = LambdaPrior::Gamma {
    shape: 0.1,
    rate: 0.1,
};
const DEFAULT_DISCOUNT: DiscountPrior = DiscountPrior::Beta { a: 0.5, b: 0.5 };

impl MixtureModelSpec {
    /// Stable-law scale mixture of Erlang kernels with Pareto II centering.
    pub fn uni_scale() -> Self {
        MixtureModelSpec {
            class: ModelClass::UniScale,
            dim: 1,
            precision: 0.0,
            discount: DEFAULT_DISCOUNT,
            kernel: Kernel::Erlang {
                lambda: DEFAULT_LAMBDA,
            },
            centering: Centering::ParetoII {
                betas: vec![1.0],
                alpha0: Alpha0Prior::Jeffreys,
                theta: 1.0,
            },
            covariates: None,
            truncation: 1000,
        }
    }

    pub fn multi_scale(dim: usize, theta: f64) -> Self {
        MixtureModelSpec {
            class: ModelClass::MultiScale,
            dim,
            centering: Centering::ParetoII {
                betas: vec![1.0; dim],
                alpha0: Alpha0Prior::Fixed { value: 2.0 },
                theta,
            },
            ..Self::uni_scale()
        }
    }

    pub fn cond_scale(dim: usize, covariate_count: usize, theta: f64) -> Self {
        MixtureModelSpec {
            class: ModelClass::CondScale,
            covariates: Some(CovariateSpec {
                count: covariate_count,
                slope_variance: 100.0,
            }),
            truncation: 100,
            ..Self::multi_scale(dim, theta)
        }
    }

    pub fn uni_shape(family: ParetoFamily<f64>, centering: Centering) -> Self {
        MixtureModelSpec {
            class: ModelClass::UniShape,
            dim: 1,
            precision: 1.0,
            discount: DEFAULT_DISCOUNT,
            kernel: Kernel::ParetoType { family },
            centering,
            covariates: None,
            truncation: 1000,
        }
    }

    /// Dirichlet process Erlang scale mixture (D = 0).
    pub fn dp_erlang(precision: f64) -> Self {
        MixtureModelSpec {
            precision,
            discount: DiscountPrior::Fixed { value: 0.0 },
            ..Self::uni_scale()
        }
    }

    /// Dirichlet process mixture of Pareto kernels over a Gamma centering on
    /// the tail index.
    pub fn dp_pareto_shape(precision: f64) -> Self {
        MixtureModelSpec {
            discount: DiscountPrior::Fixed { value: 0.0 },
            precision,
            ..Self::uni_shape(
                ParetoFamily::Pareto,
                Centering::Gamma {
                    shape: 1.0,
                    rate: 1.0,
                },
            )
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(input("dimension must be positive"));
        }
        if self.truncation == 0 {
            return Err(input("truncation cap must be positive"));
        }
        match self.discount {
            DiscountPrior::Fixed { value } if !(0.0..1.0).contains(&value) => {
                return Err(domain(format!("discount {value} not in [0, 1)")))
            }
            DiscountPrior::Beta { a, b } if !(a > 0.0 && b > 0.0) => {
                return Err(domain("Beta discount prior needs positive parameters"))
            }
            _ => {}
        }
        let fixed_zero = matches!(self.discount, DiscountPrior::Fixed { value } if value == 0.0);
        if fixed_zero && !(self.precision > 0.0) {
            return Err(domain("a Dirichlet process needs positive precision"));
        }
        if !fixed_zero && self.precision < 0.0 {
            return Err(domain("negative precision is not supported with a random discount"));
        }
        if self.class.is_scale() && !fixed_zero && self.precision != 0.0 {
            return Err(domain("scale classes use a stable-law mixing measure (M = 0)"));
        }
        match (self.class, &self.kernel, &self.centering) {
            (ModelClass::UniShape, Kernel::ParetoType { .. }, Centering::Gamma { shape, rate }) => {
                if !(*shape > 0.0 && *rate > 0.0) {
                    return Err(domain("Gamma centering needs positive parameters"));
                }
            }
            (
                ModelClass::UniShape,
                Kernel::ParetoType { .. },
                Centering::ShiftedParetoII {
                    location,
                    alpha0,
                    beta,
                },
            ) => {
                if !(*location >= 0.0 && *alpha0 > 0.0 && *beta > 0.0) {
                    return Err(domain("invalid shifted Pareto II centering"));
                }
            }
            (ModelClass::UniShape, _, _) => {
                return Err(input("shape class needs a Pareto-type kernel and a tail-index centering"))
            }
            (_, Kernel::Erlang { lambda }, Centering::ParetoII { betas, alpha0, theta }) => {
                if betas.len() != self.dim {
                    return Err(Error::Dimension {
                        expected: self.dim,
                        got: betas.len(),
                    });
                }
                if betas.iter().any(|b| !(*b > 0.0)) {
                    return Err(domain("Pareto II scales must be positive"));
                }
                GumbelCopula::new(*theta)?;
                if *theta != 1.0 && self.dim != 2 {
                    return Err(domain("copula centering needs exactly two margins"));
                }
                match alpha0 {
                    Alpha0Prior::Fixed { value } if !(*value > 0.0) => {
                        return Err(domain("alpha0 must be positive"))
                    }
                    Alpha0Prior::Gamma { shape, rate } if !(*shape > 0.0 && *rate > 0.0) => {
                        return Err(domain("alpha0 Gamma prior needs positive parameters"))
                    }
                    _ => {}
                }
                match lambda {
                    LambdaPrior::Fixed { value } if !(*value > 0.0) => {
                        return Err(domain("lambda must be positive"))
                    }
                    LambdaPrior::Gamma { shape, rate } if !(*shape > 0.0 && *rate > 0.0) => {
                        return Err(domain("lambda Gamma prior needs positive parameters"))
                    }
                    _ => {}
                }
            }
            _ => return Err(input("scale classes need an Erlang kernel and Pareto II centering")),
        }
        match self.class {
            ModelClass::UniScale | ModelClass::UniShape if self.dim != 1 => {
                return Err(input("univariate classes have dimension 1"))
            }
            ModelClass::CondScale => match self.covariates {
                Some(c) if c.count >= 1 && c.slope_variance > 0.0 => {}
                _ => return Err(input("cond_scale needs at least one covariate and s^2 > 0")),
            },
            _ if self.covariates.is_some() => {
                return Err(input("covariates are only used by cond_scale"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Entries per atom: one scale per margin, or a single tail index.
    pub fn atom_dim(&self) -> usize {
        if self.class.is_scale() {
            self.dim
        } else {
            1
        }
    }

    pub fn is_conditional(&self) -> bool {
        self.class == ModelClass::CondScale
    }

    /// Covariate row with the intercept prepended.
    pub fn design(&self, x: &[f64]) -> Vec<f64> {
        let mut d = Vec::with_capacity(x.len() + 1);
        d.push(1.0);
        d.extend_from_slice(x);
        d
    }

    pub fn design_dim(&self) -> usize {
        self.covariates.map_or(0, |c| c.design_dim())
    }

    pub fn stick_law(&self, h: usize, discount: f64) -> (f64, f64) {
        (1.0 - discount, self.precision + h as f64 * discount)
    }

    pub fn copula(&self) -> GumbelCopula<f64> {
        match &self.centering {
            Centering::ParetoII { theta, .. } => {
                GumbelCopula::new(*theta).unwrap_or_else(|_| GumbelCopula::independence())
            }
            _ => GumbelCopula::independence(),
        }
    }

    pub fn pareto_margins(&self, alpha0: &[f64]) -> Result<Vec<ParetoII<f64>>> {
        match &self.centering {
            Centering::ParetoII { betas, .. } => betas
                .iter()
                .zip(alpha0)
                .map(|(&b, &a)| ParetoII::new(a, b))
                .collect(),
            _ => Err(input("centering has no Pareto II margins")),
        }
    }

    /// Draw one atom from the centering.
    pub fn sample_atom<R: Rng + ?Sized>(&self, alpha0: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        match &self.centering {
            Centering::ParetoII { .. } => {
                copula_centering_sample(&self.copula(), &self.pareto_margins(alpha0)?, rng)
            }
            Centering::Gamma { shape, rate } => Ok(vec![gamma_variate(*shape, *rate, rng)]),
            Centering::ShiftedParetoII {
                location,
                alpha0,
                beta,
            } => Ok(vec![location + ParetoII::new(*alpha0, *beta)?.sample(rng)]),
        }
    }

    /// log centering density of an atom.
    pub fn ln_centering_density(&self, atom: &[f64], alpha0: &[f64]) -> f64 {
        match &self.centering {
            Centering::ParetoII { betas, theta, .. } => {
                let mut total = 0.0;
                for k in 0..atom.len() {
                    let m = ParetoII::new(alpha0[k], betas[k]).expect("validated margins");
                    total += m.ln_pdf(atom[k]);
                }
                if *theta != 1.0 && atom.len() == 2 {
                    let c = self.copula();
                    let m0 = ParetoII::new(alpha0[0], betas[0]).expect("validated margins");
                    let m1 = ParetoII::new(alpha0[1], betas[1]).expect("validated margins");
                    total += c.ln_pdf_neg_log(m0.neg_ln_cdf(atom[0]), m1.neg_ln_cdf(atom[1]));
                }
                total
            }
            Centering::Gamma { shape, rate } => {
                if atom[0] > 0.0 {
                    ln_gamma_pdf(atom[0], *shape, *rate)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Centering::ShiftedParetoII {
                location,
                alpha0,
                beta,
            } => ParetoII::new(*alpha0, *beta)
                .expect("validated centering")
                .ln_pdf(atom[0] - location),
        }
    }

    /// Marginal kernel laws of one component.
    pub fn component(&self, atom: &[f64], lambda: f64) -> Result<Component> {
        match &self.kernel {
            Kernel::Erlang { .. } => Ok(Component::Erlang(
                atom.iter()
                    .map(|&s| ErlangKernel::from_sigma(s, lambda))
                    .collect::<Result<_>>()?,
            )),
            Kernel::ParetoType { family } => Ok(Component::Pareto(family.kernel(atom[0])?)),
        }
    }

    /// Values of the prior/fixed lambda used when the kernel has none.
    pub fn fixed_lambda(&self) -> Option<f64> {
        match self.kernel {
            Kernel::Erlang {
                lambda: LambdaPrior::Fixed { value },
            } => Some(value),
            Kernel::Erlang { .. } => None,
            Kernel::ParetoType { .. } => Some(1.0),
        }
    }
}

/// Product kernel of one mixture component.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Erlang(Vec<ErlangKernel<f64>>),
    Pareto(crate::dists::ParetoTypeKernel<f64>),
}

impl Component {
    pub fn ln_pdf(&self, y: &[f64]) -> f64 {
        match self {
            Component::Erlang(ks) => ks.iter().zip(y).map(|(k, &v)| k.ln_pdf(v)).sum(),
            Component::Pareto(k) => k.ln_pdf(y[0]),
        }
    }

    pub fn margin(&self, k: usize) -> &dyn MarginLaw {
        match self {
            Component::Erlang(ks) => &ks[k],
            Component::Pareto(p) => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Component::Erlang(ks) => ks.iter().map(|k| k.sample(rng)).collect(),
            Component::Pareto(k) => vec![k.sample(rng)],
        }
    }
}

/// Object-safe view of a univariate law, used for per-margin evaluation.
pub trait MarginLaw {
    fn pdf(&self, y: f64) -> f64;
    fn cdf(&self, y: f64) -> f64;
    fn ln_survival(&self, y: f64) -> f64;
}

impl<D: Univariate<f64>> MarginLaw for D {
    fn pdf(&self, y: f64) -> f64 {
        Univariate::pdf(self, y)
    }
    fn cdf(&self, y: f64) -> f64 {
        Univariate::cdf(self, y)
    }
    fn ln_survival(&self, y: f64) -> f64 {
        Univariate::ln_survival(self, y)
    }
}

/// Mixture weights of a truncated mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixtureWeights {
    Fixed { weights: Vec<f64> },
    /// Covariate-dependent sticks: shared uniforms and H x p coefficients.
    Dependent {
        uniforms: Vec<f64>,
        betas: Vec<f64>,
        terminal: bool,
    },
}

/// A finite mixture; `tail_atoms` share any mass the weights leave over,
/// otherwise the weights are renormalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMixture {
    pub weights: MixtureWeights,
    pub atoms: Vec<f64>,
    pub tail_atoms: Vec<f64>,
    pub lambda: f64,
}

/// Stick fraction V_h(x) = BetaQuantile(u; 1 - D_h(x), h D_h(x)).
pub fn dependent_fraction(beta_h: &[f64], x: &[f64], u: f64, h: usize) -> f64 {
    let eta: f64 = beta_h.iter().zip(x).map(|(b, v)| b * v).sum();
    let d = logistic(eta.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
    beta_quantile(u, 1.0 - d, h as f64 * d)
}

/// Covariate-dependent stick-breaking weights at design row `x`.
pub fn dependent_weights(betas: &[f64], x: &[f64], uniforms: &[f64]) -> Result<RandomMeasureDraw<()>> {
    let p = x.len();
    if p == 0 || betas.len() != uniforms.len() * p {
        return Err(Error::Dimension {
            expected: uniforms.len() * p.max(1),
            got: betas.len(),
        });
    }
    if uniforms.iter().any(|u| !(*u > 0.0 && *u < 1.0)) {
        return Err(domain("stick uniforms must lie in (0, 1)"));
    }
    let fractions: Vec<f64> = uniforms
        .iter()
        .enumerate()
        .map(|(i, &u)| dependent_fraction(&betas[i * p..(i + 1) * p], x, u, i + 1))
        .collect();
    Ok(weights_from_fractions(&fractions))
}

impl FiniteMixture {
    pub fn with_weights(weights: Vec<f64>, atoms: Vec<f64>, lambda: f64) -> Self {
        FiniteMixture {
            weights: MixtureWeights::Fixed { weights },
            atoms,
            tail_atoms: Vec::new(),
            lambda,
        }
    }

    fn check(&self, spec: &MixtureModelSpec, y: Option<&[f64]>, x: Option<&[f64]>) -> Result<()> {
        if let Some(y) = y {
            if y.len() != spec.dim {
                return Err(Error::Dimension {
                    expected: spec.dim,
                    got: y.len(),
                });
            }
        }
        match (spec.is_conditional(), x) {
            (true, None) => Err(input("covariate required for cond_scale")),
            (true, Some(x)) if x.len() + 1 != spec.design_dim() => Err(Error::Dimension {
                expected: spec.design_dim() - 1,
                got: x.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Normalised weights for atoms followed by tail atoms.
    pub fn weights_at(&self, spec: &MixtureModelSpec, x: Option<&[f64]>) -> Result<Vec<f64>> {
        let (mut w, residual) = match &self.weights {
            MixtureWeights::Fixed { weights } => {
                let s: f64 = weights.iter().sum();
                (weights.clone(), (1.0 - s).max(0.0))
            }
            MixtureWeights::Dependent {
                uniforms,
                betas,
                terminal,
            } => {
                let x = x.ok_or_else(|| input("covariate required for dependent weights"))?;
                let design = spec.design(x);
                let mut draw = dependent_weights(betas, &design, uniforms)?;
                if *terminal {
                    // the last stick takes everything left
                    if let Some(last) = draw.weights.last_mut() {
                        *last += draw.residual_mass;
                    }
                    draw.residual_mass = 0.0;
                }
                (draw.weights, draw.residual_mass)
            }
        };
        let j = self.tail_atoms.len() / spec.atom_dim();
        if j > 0 {
            w.extend(std::iter::repeat_n(residual / j as f64, j));
        } else {
            let s: f64 = w.iter().sum();
            if s > 0.0 {
                w.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(w)
    }

    pub fn components(&self, spec: &MixtureModelSpec) -> Result<Vec<Component>> {
        let ad = spec.atom_dim();
        self.atoms
            .chunks(ad)
            .chain(self.tail_atoms.chunks(ad))
            .map(|a| spec.component(a, self.lambda))
            .collect()
    }

    pub fn density(&self, spec: &MixtureModelSpec, y: &[f64], x: Option<&[f64]>) -> Result<f64> {
        self.check(spec, Some(y), x)?;
        let w = self.weights_at(spec, x)?;
        let comps = self.components(spec)?;
        Ok(w.iter()
            .zip(&comps)
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, c)| w * c.ln_pdf(y).exp())
            .sum())
    }

    /// Per-margin log survival on an increasing grid.
    pub fn log_survival(
        &self,
        spec: &MixtureModelSpec,
        grid: &[f64],
        x: Option<&[f64]>,
    ) -> Result<Vec<Vec<f64>>> {
        self.check(spec, None, x)?;
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(input("grid must be increasing"));
        }
        let w = self.weights_at(spec, x)?;
        let comps = self.components(spec)?;
        let margins = if spec.class.is_scale() { spec.dim } else { 1 };
        Ok((0..margins)
            .map(|k| {
                grid.iter()
                    .map(|&y| {
                        let terms: Vec<f64> = w
                            .iter()
                            .zip(&comps)
                            .filter(|(w, _)| **w > 0.0)
                            .map(|(w, c)| w.ln() + c.margin(k).ln_survival(y))
                            .collect();
                        crate::special::log_sum_exp(&terms)
                    })
                    .collect()
            })
            .collect())
    }

    /// Marginal density and cdf of margin k at y.
    pub fn margin_pdf_cdf(
        &self,
        spec: &MixtureModelSpec,
        k: usize,
        y: f64,
        x: Option<&[f64]>,
    ) -> Result<(f64, f64)> {
        self.check(spec, None, x)?;
        let w = self.weights_at(spec, x)?;
        let comps = self.components(spec)?;
        let mut pdf = 0.0;
        let mut cdf = 0.0;
        for (w, c) in w.iter().zip(&comps) {
            if *w > 0.0 {
                pdf += w * c.margin(k).pdf(y);
                cdf += w * c.margin(k).cdf(y);
            }
        }
        Ok((pdf, cdf))
    }

    pub fn sample<R: Rng + ?Sized>(
        &self,
        spec: &MixtureModelSpec,
        x: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let w = self.weights_at(spec, x)?;
        let ad = spec.atom_dim();
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = w.len() - 1;
        for (h, &p) in w.iter().enumerate() {
            acc += p;
            if u < acc {
                pick = h;
                break;
            }
        }
        let n_main = self.atoms.len() / ad;
        let atom = if pick < n_main {
            &self.atoms[pick * ad..(pick + 1) * ad]
        } else {
            let j = pick - n_main;
            &self.tail_atoms[j * ad..(j + 1) * ad]
        };
        Ok(spec.component(atom, self.lambda)?.sample(rng))
    }
}

/// Tail index of each margin: alpha0_k / D for scale classes (infinite for a
/// Dirichlet process), the centering's left endpoint for the shape class.
pub fn model_tail_index(spec: &MixtureModelSpec) -> Result<Vec<f64>> {
    match &spec.centering {
        Centering::ParetoII { alpha0, betas, .. } => {
            let a = match alpha0 {
                Alpha0Prior::Fixed { value } => *value,
                _ => return Err(input("alpha0 is not fixed")),
            };
            let d = match spec.discount {
                DiscountPrior::Fixed { value } => value,
                _ => return Err(input("discount is not fixed")),
            };
            Ok(vec![tail_index_from(a, d); betas.len()])
        }
        Centering::Gamma { .. } => Ok(vec![0.0]),
        Centering::ShiftedParetoII { location, .. } => Ok(vec![*location]),
    }
}

pub fn tail_index_from(alpha0: f64, discount: f64) -> f64 {
    if discount == 0.0 {
        f64::INFINITY
    } else {
        alpha0 / discount
    }
}

/// Prior mean of alpha0 / D under alpha0 ~ Gamma(a, b), D ~ Beta(a_D, b_D);
/// infinite when a_D <= 1.
pub fn induced_tail_prior_mean(a_alpha: f64, b_alpha: f64, a_d: f64, b_d: f64) -> Result<f64> {
    if !(a_alpha > 0.0 && b_alpha > 0.0 && a_d > 0.0 && b_d > 0.0) {
        return Err(domain("hyperparameters must be positive"));
    }
    if a_d <= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a_alpha * (a_d + b_d - 1.0) / (b_alpha * (a_d - 1.0)))
}
