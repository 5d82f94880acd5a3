//! Model and sampler options shared by `fit` and `replicate-study`, data
//! input, and parallel chain execution.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::Context;
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pyptail::dists::ParetoFamily;
use pyptail::mcmc::{empirical_bayes_theta, run_chain_with, ChainLogWriter, ChainOutput, SamplerConfig};
use pyptail::models::{Alpha0Prior, Centering, DiscountPrior, Kernel, LambdaPrior, MixtureModelSpec};
use pyptail::Dataset;

use crate::config::{parse_call, usage, Failure, UsageExt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelName {
    UniScale,
    MultiScale,
    CondScale,
    UniShape,
    DpErlang,
    DpParetoShape,
}

impl ModelName {
    pub fn name(self) -> &'static str {
        match self {
            ModelName::UniScale => "uni_scale",
            ModelName::MultiScale => "multi_scale",
            ModelName::CondScale => "cond_scale",
            ModelName::UniShape => "uni_shape",
            ModelName::DpErlang => "dp_erlang",
            ModelName::DpParetoShape => "dp_pareto_shape",
        }
    }

    /// Default for data of dimension `dim`, with or without covariates.
    pub fn default_for(dim: usize, covariates: bool) -> Self {
        match (dim, covariates) {
            (_, true) => ModelName::CondScale,
            (1, false) => ModelName::UniScale,
            _ => ModelName::MultiScale,
        }
    }

    fn is_shape(self) -> bool {
        matches!(self, ModelName::UniShape | ModelName::DpParetoShape)
    }
}

/// A number or a named choice, e.g. `2`, `eb`, `gamma:2,1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Num(f64),
    Name(String),
}

impl FromStr for Setting {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(s.parse::<f64>().map_or_else(|_| Setting::Name(s.to_string()), Setting::Num))
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ModelOpts {
    /// Model class; defaults from the data shape.
    #[arg(long, value_enum)]
    pub model: Option<ModelName>,
    /// Gumbel copula parameter of the centering: a number or `eb` (Kendall-tau estimate).
    #[arg(long)]
    pub theta: Option<Setting>,
    /// Centering tail index: a number (fixed), `jeffreys` or `gamma:SHAPE,RATE`.
    #[arg(long)]
    pub alpha0: Option<Setting>,
    /// Discount: a number (fixed) or `beta:A,B`.
    #[arg(long)]
    pub discount: Option<Setting>,
    /// Erlang rate: a number (fixed) or `gamma:SHAPE,RATE`.
    #[arg(long)]
    pub lambda: Option<Setting>,
    /// Precision M.
    #[arg(long)]
    pub precision: Option<f64>,
    /// Cap on instantiated sticks.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Kernel family of shape models: pareto, student_t, burr:C, f:A or gpd:SCALE.
    #[arg(long)]
    pub family: Option<String>,
    /// Centering of shape models: gamma:SHAPE,RATE or shifted_pareto:LOCATION,ALPHA0,BETA.
    #[arg(long)]
    pub shape_centering: Option<String>,
    /// Prior variance of the regression coefficients.
    #[arg(long)]
    pub slope_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ChainOpts {
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    /// Tune step sizes during burn-in.
    #[arg(long)]
    pub adapt: Option<bool>,
    /// Fresh centering atoms sharing the unallocated mass in each kept draw.
    #[arg(long)]
    pub tail_atoms: Option<usize>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl ChainOpts {
    pub fn sampler(&self, burn_in: usize, keep: usize) -> Result<SamplerConfig, Failure> {
        let d = SamplerConfig::default();
        let c = SamplerConfig {
            burn_in: self.burn_in.unwrap_or(burn_in),
            keep: self.keep.unwrap_or(keep),
            thin: self.thin.unwrap_or(d.thin),
            adapt: self.adapt.unwrap_or(d.adapt),
            tail_atoms: self.tail_atoms.unwrap_or(d.tail_atoms),
            steps: d.steps,
        };
        c.validate().usage()?;
        if c.keep == 0 {
            return Err(usage("keep must be positive"));
        }
        Ok(c)
    }
}

fn two(name: &str, args: &[f64], what: &str) -> Result<(f64, f64), Failure> {
    match args {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage(format!("{what}: {name} takes two numbers"))),
    }
}

fn alpha0_prior(s: &Setting) -> Result<Alpha0Prior, Failure> {
    match s {
        Setting::Num(v) => Ok(Alpha0Prior::Fixed { value: *v }),
        Setting::Name(n) => match parse_call(n)? {
            (name, a) if name == "jeffreys" && a.is_empty() => Ok(Alpha0Prior::Jeffreys),
            (name, a) if name == "gamma" => {
                let (shape, rate) = two(&name, &a, "alpha0")?;
                Ok(Alpha0Prior::Gamma { shape, rate })
            }
            _ => Err(usage(format!("alpha0: unknown prior {n:?}"))),
        },
    }
}

fn discount_prior(s: &Setting) -> Result<DiscountPrior, Failure> {
    match s {
        Setting::Num(v) => Ok(DiscountPrior::Fixed { value: *v }),
        Setting::Name(n) => match parse_call(n)? {
            (name, a) if name == "beta" => {
                let (a, b) = two(&name, &a, "discount")?;
                Ok(DiscountPrior::Beta { a, b })
            }
            _ => Err(usage(format!("discount: unknown prior {n:?}"))),
        },
    }
}

fn lambda_prior(s: &Setting) -> Result<LambdaPrior, Failure> {
    match s {
        Setting::Num(v) => Ok(LambdaPrior::Fixed { value: *v }),
        Setting::Name(n) => match parse_call(n)? {
            (name, a) if name == "gamma" => {
                let (shape, rate) = two(&name, &a, "lambda")?;
                Ok(LambdaPrior::Gamma { shape, rate })
            }
            _ => Err(usage(format!("lambda: unknown prior {n:?}"))),
        },
    }
}

fn family(s: &str) -> Result<ParetoFamily<f64>, Failure> {
    let (name, a) = parse_call(s)?;
    let one = |what| match a.as_slice() {
        [v] => Ok(*v),
        _ => Err(usage(format!("family {what} takes one number"))),
    };
    Ok(match name.as_str() {
        "pareto" => ParetoFamily::Pareto,
        "student_t" => ParetoFamily::StudentT,
        "burr" => ParetoFamily::Burr { c: one("burr")? },
        "f" => ParetoFamily::F { a: one("f")? },
        "gpd" => ParetoFamily::Gpd { scale: one("gpd")? },
        _ => return Err(usage(format!("unknown kernel family {s:?}"))),
    })
}

fn shape_centering(s: &str) -> Result<Centering, Failure> {
    let (name, a) = parse_call(s)?;
    match (name.as_str(), a.as_slice()) {
        ("gamma", [shape, rate]) => Ok(Centering::Gamma {
            shape: *shape,
            rate: *rate,
        }),
        ("shifted_pareto", [location, alpha0, beta]) => Ok(Centering::ShiftedParetoII {
            location: *location,
            alpha0: *alpha0,
            beta: *beta,
        }),
        _ => Err(usage(format!("unknown shape centering {s:?}"))),
    }
}

/// Resolve the model for `data`. Copula `eb` is estimated from the data.
pub fn build_spec(o: &ModelOpts, data: &Dataset) -> Result<(ModelName, MixtureModelSpec), Failure> {
    let (dim, cov) = (data.dim(), data.has_covariates());
    let name = o.model.unwrap_or_else(|| ModelName::default_for(dim, cov));
    let theta = || -> Result<f64, Failure> {
        match &o.theta {
            None => empirical_bayes_theta(data).usage(),
            Some(Setting::Name(n)) if n == "eb" => empirical_bayes_theta(data).usage(),
            Some(Setting::Num(v)) => Ok(*v),
            Some(Setting::Name(n)) => Err(usage(format!("theta must be a number or eb, got {n:?}"))),
        }
    };
    let mut spec = match name {
        ModelName::UniScale => MixtureModelSpec::uni_scale(),
        ModelName::DpErlang => MixtureModelSpec::dp_erlang(o.precision.unwrap_or(1.0)),
        ModelName::MultiScale => MixtureModelSpec::multi_scale(dim, theta()?),
        ModelName::CondScale => {
            if !cov {
                return Err(usage("cond_scale needs covariate columns"));
            }
            MixtureModelSpec::cond_scale(dim, data.covariate_dim(), theta()?)
        }
        ModelName::UniShape => MixtureModelSpec::uni_shape(
            ParetoFamily::Pareto,
            Centering::Gamma {
                shape: 1.0,
                rate: 1.0,
            },
        ),
        ModelName::DpParetoShape => MixtureModelSpec::dp_pareto_shape(o.precision.unwrap_or(1.0)),
    };
    if name.is_shape() {
        if o.alpha0.is_some() || o.lambda.is_some() || o.theta.is_some() {
            return Err(usage("alpha0, lambda and theta apply to scale models only"));
        }
        if let Some(f) = &o.family {
            spec.kernel = Kernel::ParetoType { family: family(f)? };
        }
        if let Some(c) = &o.shape_centering {
            spec.centering = shape_centering(c)?;
        }
    } else {
        if o.family.is_some() || o.shape_centering.is_some() {
            return Err(usage("family and shape_centering apply to shape models only"));
        }
        if matches!(name, ModelName::UniScale | ModelName::DpErlang) && o.theta.is_some() {
            return Err(usage("theta applies to multivariate models only"));
        }
        if let Some(a) = &o.alpha0 {
            if let Centering::ParetoII { alpha0, .. } = &mut spec.centering {
                *alpha0 = alpha0_prior(a)?;
            }
        }
        if let Some(l) = &o.lambda {
            spec.kernel = Kernel::Erlang {
                lambda: lambda_prior(l)?,
            };
        }
    }
    if let Some(d) = &o.discount {
        spec.discount = discount_prior(d)?;
    }
    if let Some(m) = o.precision {
        spec.precision = m;
    }
    if let Some(t) = o.truncation {
        spec.truncation = t;
    }
    if let (Some(v), Some(c)) = (o.slope_variance, spec.covariates.as_mut()) {
        c.slope_variance = v;
    }
    spec.validate().usage()?;
    if spec.dim != dim {
        return Err(usage(format!("{} expects {}-dimensional data, got {dim}", name.name(), spec.dim)));
    }
    Ok((name, spec))
}

/// Read a CSV of `y…` observation columns and optional `x…` covariate
/// columns; `#` lines are comments.
pub fn read_data(path: &Path) -> Result<Dataset, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))
        .usage()?;
    let header = rdr.headers().usage()?.clone();
    let ycols: Vec<usize> = (0..header.len()).filter(|&j| header[j].starts_with('y')).collect();
    let xcols: Vec<usize> = (0..header.len()).filter(|&j| header[j].starts_with('x')).collect();
    if ycols.is_empty() {
        return Err(usage(format!("{}: no y columns", path.display())));
    }
    let mut rows = Vec::new();
    let mut xs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.usage()?;
        let get = |j: usize| -> Result<f64, Failure> {
            rec[j]
                .parse::<f64>()
                .map_err(|_| usage(format!("{}: row {}: bad number {:?}", path.display(), i + 1, &rec[j])))
        };
        rows.push(ycols.iter().map(|&j| get(j)).collect::<Result<Vec<_>, _>>()?);
        if !xcols.is_empty() {
            xs.push(xcols.iter().map(|&j| get(j)).collect::<Result<Vec<_>, _>>()?);
        }
    }
    if rows.is_empty() {
        return Err(usage(format!("{}: no observations", path.display())));
    }
    let cov = (!xcols.is_empty()).then_some(xs.as_slice());
    Dataset::from_rows(&rows, cov).usage()
}

pub fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .context("starting worker threads")
        .map_err(Failure::Runtime)
}

/// Run `chains` chains in parallel; chain c draws from stream `stream + c`
/// of `seed` and, with `log_dir`, streams its draws to chain_<c+1>.bin.
pub fn run_chains(
    spec: &MixtureModelSpec,
    data: &Dataset,
    config: &SamplerConfig,
    chains: usize,
    threads: usize,
    seed: u64,
    log_dir: Option<&Path>,
) -> Result<(Vec<ChainOutput>, Vec<PathBuf>), Failure> {
    let logs: Vec<PathBuf> = match log_dir {
        Some(dir) => (1..=chains).map(|c| dir.join(format!("chain_{c}.bin"))).collect(),
        None => Vec::new(),
    };
    let run = |c: usize| -> Result<ChainOutput, Failure> {
        let mut rng = pyptail::seeded_rng(seed, c as u64);
        let out = match logs.get(c) {
            Some(path) => {
                let mut w = ChainLogWriter::create(path)?;
                run_chain_with(spec, data, config, &mut rng, |s| w.append(s))
            }
            None => pyptail::mcmc::run_chain(spec, data, config, &mut rng),
        };
        out.with_context(|| format!("chain {}", c + 1)).map_err(Failure::Runtime)
    };
    let outs = pool(threads)?.install(|| (0..chains).into_par_iter().map(run).collect::<Vec<_>>());
    Ok((outs.into_iter().collect::<Result<Vec<_>, _>>()?, logs))
}
