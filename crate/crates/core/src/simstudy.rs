//! Simulation scenarios: a unit Pareto sample and bivariate log-gamma
//! mixtures joined by a Gumbel copula, optionally driven by a uniform
//! covariate.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::dists::{GumbelCopula, LogGamma, LogGammaMixture, Univariate};
use crate::error::{domain, input, Error, Result};
use crate::special::open_unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioId {
    UniPareto,
    Biv1,
    Biv2,
    Biv3,
    Cond1,
    Cond2,
    Cond3,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 7] = [
        ScenarioId::UniPareto,
        ScenarioId::Biv1,
        ScenarioId::Biv2,
        ScenarioId::Biv3,
        ScenarioId::Cond1,
        ScenarioId::Cond2,
        ScenarioId::Cond3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioId::UniPareto => "uni_pareto",
            ScenarioId::Biv1 => "biv1",
            ScenarioId::Biv2 => "biv2",
            ScenarioId::Biv3 => "biv3",
            ScenarioId::Cond1 => "cond1",
            ScenarioId::Cond2 => "cond2",
            ScenarioId::Cond3 => "cond3",
        }
    }

    pub fn params(self) -> ScenarioParams {
        scenario_table()
            .into_iter()
            .find(|s| s.id == self)
            .expect("every id is tabulated")
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| input(format!("unknown scenario {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub n: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(id: ScenarioId) -> Self {
        ScenarioSpec { id, n: 1000, seed: 0 }
    }
}

/// Coefficient c0 + c1 x of the covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub intercept: f64,
    pub slope: f64,
}

impl Linear {
    pub const fn constant(c: f64) -> Self {
        Linear {
            intercept: c,
            slope: 0.0,
        }
    }

    pub const fn new(intercept: f64, slope: f64) -> Self {
        Linear { intercept, slope }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// w LG(a1, b1) + (1 - w) LG(a2, b2) with covariate-linear shapes and rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGammaMargin {
    pub weight: f64,
    pub a1: Linear,
    pub b1: Linear,
    pub a2: Linear,
    pub b2: Linear,
}

impl LogGammaMargin {
    fn single(a: Linear, b: f64) -> Self {
        LogGammaMargin {
            weight: 1.0,
            a1: a,
            b1: Linear::constant(b),
            a2: a,
            b2: Linear::constant(b),
        }
    }

    pub fn at(&self, x: f64) -> Result<LogGammaMixture<f64>> {
        LogGammaMixture::new(
            self.weight,
            LogGamma::new(self.a1.at(x), self.b1.at(x))?,
            LogGamma::new(self.a2.at(x), self.b2.at(x))?,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Margin {
    /// Survival 1/y on (1, inf).
    UnitPareto,
    LogGamma(LogGammaMargin),
}

impl Margin {
    pub fn pdf(&self, y: f64, x: f64) -> Result<f64> {
        match self {
            Margin::UnitPareto => Ok(if y > 1.0 { 1.0 / (y * y) } else { 0.0 }),
            Margin::LogGamma(m) => Ok(m.at(x)?.pdf(y)),
        }
    }

    pub fn cdf(&self, y: f64, x: f64) -> Result<f64> {
        match self {
            Margin::UnitPareto => Ok(if y > 1.0 { 1.0 - 1.0 / y } else { 0.0 }),
            Margin::LogGamma(m) => Ok(m.at(x)?.cdf(y)),
        }
    }

    pub fn survival(&self, y: f64, x: f64) -> Result<f64> {
        match self {
            Margin::UnitPareto => Ok(if y > 1.0 { 1.0 / y } else { 1.0 }),
            Margin::LogGamma(m) => Ok(m.at(x)?.survival(y)),
        }
    }

    pub fn quantile(&self, p: f64, x: f64) -> Result<f64> {
        match self {
            Margin::UnitPareto => {
                crate::dists::check_prob(p)?;
                Ok(1.0 / (1.0 - p))
            }
            Margin::LogGamma(m) => m.at(x)?.quantile(p),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<f64> {
        match self {
            Margin::UnitPareto => Ok(1.0 / open_unit(rng)),
            Margin::LogGamma(m) => Ok(m.at(x)?.sample(rng)),
        }
    }
}

/// Fully resolved parameters of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub id: ScenarioId,
    pub margins: Vec<Margin>,
    pub theta: f64,
    pub conditional: bool,
}

/// Rate used where a single-component margin leaves it unstated.
pub const DEFAULT_RATE: f64 = 3.0;

pub fn scenario_table() -> Vec<ScenarioParams> {
    let c = Linear::constant;
    let five = Margin::LogGamma(LogGammaMargin::single(c(5.0), DEFAULT_RATE));
    let ramp = Margin::LogGamma(LogGammaMargin::single(Linear::new(1.0, 4.0), DEFAULT_RATE));
    let biv = |id, margins: Vec<Margin>, theta| ScenarioParams {
        id,
        margins,
        theta,
        conditional: false,
    };
    let cond = |id, margins: Vec<Margin>, theta| ScenarioParams {
        id,
        margins,
        theta,
        conditional: true,
    };
    vec![
        biv(ScenarioId::UniPareto, vec![Margin::UnitPareto], 1.0),
        biv(ScenarioId::Biv1, vec![five, five], 3.0),
        biv(ScenarioId::Biv2, vec![five, five], 1.0),
        biv(
            ScenarioId::Biv3,
            vec![
                Margin::LogGamma(LogGammaMargin {
                    weight: 0.4,
                    a1: c(13.0),
                    b1: c(7.0),
                    a2: c(10.0),
                    b2: c(8.0),
                }),
                Margin::LogGamma(LogGammaMargin {
                    weight: 0.4,
                    a1: c(8.0),
                    b1: c(7.0),
                    a2: c(15.0),
                    b2: c(8.0),
                }),
            ],
            1.0,
        ),
        cond(ScenarioId::Cond1, vec![ramp, ramp], 1.0),
        cond(ScenarioId::Cond2, vec![ramp, ramp], 3.0),
        cond(
            ScenarioId::Cond3,
            vec![
                Margin::LogGamma(LogGammaMargin {
                    weight: 0.4,
                    a1: Linear::new(11.0, 5.0),
                    b1: Linear::new(8.0, 5.0),
                    a2: c(7.0),
                    b2: c(7.0),
                }),
                Margin::LogGamma(LogGammaMargin {
                    weight: 0.4,
                    a1: Linear::new(6.0, 5.0),
                    b1: Linear::new(12.0, 5.0),
                    a2: c(8.0),
                    b2: c(8.0),
                }),
            ],
            1.0,
        ),
    ]
}

impl ScenarioParams {
    pub fn dim(&self) -> usize {
        self.margins.len()
    }

    pub fn copula(&self) -> GumbelCopula<f64> {
        GumbelCopula::new(self.theta).expect("tabulated theta >= 1")
    }

    fn covariate(&self, x: Option<f64>) -> Result<f64> {
        match (self.conditional, x) {
            (true, Some(x)) if (0.0..=1.0).contains(&x) => Ok(x),
            (true, Some(x)) => Err(domain(format!("covariate {x} not in [0, 1]"))),
            (true, None) => Err(input(format!("{} needs a covariate", self.id))),
            (false, None) => Ok(0.0),
            (false, Some(_)) => Err(input(format!("{} takes no covariate", self.id))),
        }
    }

    /// Joint density at `y`, given the covariate for conditional scenarios.
    pub fn true_density(&self, y: &[f64], x: Option<f64>) -> Result<f64> {
        let x = self.covariate(x)?;
        if y.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: y.len(),
            });
        }
        for (k, &v) in y.iter().enumerate() {
            if !(v > 1.0 && v.is_finite()) {
                return Err(domain(format!("y = {v} outside the support (1, inf)")).at(k));
            }
        }
        let mut dens = 1.0;
        for (m, &v) in self.margins.iter().zip(y) {
            dens *= m.pdf(v, x)?;
        }
        if self.dim() == 2 && self.theta != 1.0 {
            // -log F_k from the survival side keeps precision deep in the upper tail
            let nl = |k: usize| -> Result<f64> {
                let s = self.margins[k].survival(y[k], x)?;
                Ok(if s < 0.5 { -(-s).ln_1p() } else { -self.margins[k].cdf(y[k], x)?.ln() })
            };
            dens *= self.copula().ln_pdf_neg_log(nl(0)?, nl(1)?).exp();
        }
        Ok(dens)
    }

    /// One draw of y given the covariate.
    pub fn sample_at<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<Vec<f64>> {
        if self.dim() == 2 && self.theta != 1.0 {
            let (u, v) = self.copula().sample(rng);
            Ok(vec![
                self.margins[0].quantile(u, x)?,
                self.margins[1].quantile(v, x)?,
            ])
        } else {
            self.margins.iter().map(|m| m.sample(x, rng)).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedData {
    pub scenario: ScenarioParams,
    pub y: Vec<Vec<f64>>,
    pub x: Option<Vec<f64>>,
}

impl GeneratedData {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Dataset for fitting; covariates become single-column rows.
    pub fn dataset(&self) -> Result<Dataset> {
        let cov: Option<Vec<Vec<f64>>> = self.x.as_ref().map(|x| x.iter().map(|&v| vec![v]).collect());
        Dataset::from_rows(&self.y, cov.as_deref())
    }
}

pub fn generate<R: Rng + ?Sized>(spec: &ScenarioSpec, rng: &mut R) -> GeneratedData {
    let scenario = spec.id.params();
    let mut y = Vec::with_capacity(spec.n);
    let mut xs = scenario.conditional.then(|| Vec::with_capacity(spec.n));
    for _ in 0..spec.n {
        let x = match xs.as_mut() {
            Some(xs) => {
                let x: f64 = rng.random();
                xs.push(x);
                x
            }
            None => 0.0,
        };
        y.push(
            scenario
                .sample_at(x, rng)
                .expect("tabulated parameters are valid on [0, 1]"),
        );
    }
    GeneratedData { scenario, y, x: xs }
}
