//! `fit` and `diagnose`.

use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};

use pyptail::mcmc::{
    predictive_quantile, predictive_summaries, randomized_quantile_residuals, ChainLogReader,
    ChainSummary, PosteriorSummary, PredictiveGrid, SamplerConfig, Snapshot,
};
use pyptail::models::MixtureModelSpec;
use pyptail::special::norm_quantile;
use pyptail::stats::{ks_pvalue, ks_statistic, mean, quantile, variance};
use pyptail::Dataset;

use crate::config::{layer, usage, Common, Failure, UsageExt};
use crate::model::{build_spec, read_data, run_chains, ChainOpts, ModelName, ModelOpts};
use crate::output::{log_grid, num, Out, Stamp};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FitOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// CSV with y1[, y2][, x] columns.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: ChainOpts,
    /// Independent chains, merged in index order.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Smallest and largest grid value (default: the data range, upper end doubled).
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Covariate values of the conditional panels.
    #[arg(long, value_delimiter = ',')]
    pub x_panels: Option<Vec<f64>>,
    /// Posterior-mean joint density on grid x grid for bivariate models.
    #[arg(long)]
    pub joint: Option<bool>,
    /// Stream kept draws to chain_<c>.bin files (needed by `diagnose`).
    #[arg(long)]
    pub chain_log: Option<bool>,
    /// Probability of the reported predictive quantiles.
    #[arg(long)]
    pub quantile: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileRow {
    pub p: f64,
    pub margin: usize,
    pub x: Option<Vec<f64>>,
    pub value: f64,
}

#[derive(Serialize)]
struct FitReport<'a> {
    model: ModelName,
    n: usize,
    spec: &'a MixtureModelSpec,
    sampler: &'a SamplerConfig,
    chains: Vec<Option<ChainSummary>>,
    chain_logs: Vec<String>,
    tail_index_mean: Vec<f64>,
    quantiles: Vec<QuantileRow>,
    posterior: &'a PosteriorSummary,
}

/// Covariate rows of the prediction panels: each panel value repeated over
/// the covariates.
pub fn panel_rows(spec: &MixtureModelSpec, panels: Option<&[f64]>) -> Vec<Vec<f64>> {
    match spec.covariates {
        Some(c) => panels
            .unwrap_or(&[0.25, 0.5, 0.75])
            .iter()
            .map(|&v| vec![v; c.count])
            .collect(),
        None => Vec::new(),
    }
}

fn data_range(data: &Dataset) -> (f64, f64) {
    data.values()
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// One row per panel, margin and grid point.
pub fn predictive_table(post: &PosteriorSummary) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "panel",
        "x",
        "margin",
        "y",
        "density_mean",
        "density_lower",
        "density_upper",
        "log_survival_mean",
        "log_survival_lower",
        "log_survival_upper",
        "log_survival_predictive",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for (p, panel) in post.panels.iter().enumerate() {
        let x = panel
            .x
            .as_ref()
            .map(|x| x.iter().map(|&v| num(v)).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        for (k, m) in panel.margins.iter().enumerate() {
            for (i, &y) in post.grid.iter().enumerate() {
                rows.push(vec![
                    (p + 1).to_string(),
                    x.clone(),
                    (k + 1).to_string(),
                    num(y),
                    num(m.density.mean[i]),
                    num(m.density.lower[i]),
                    num(m.density.upper[i]),
                    num(m.log_survival.mean[i]),
                    num(m.log_survival.lower[i]),
                    num(m.log_survival.upper[i]),
                    num(m.log_survival_predictive[i]),
                ]);
            }
        }
    }
    (header, rows)
}

pub fn cmd_fit(flags: FitOpts) -> Result<(), Failure> {
    let config = flags.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let data_path = o.data.as_deref().ok_or_else(|| usage("fit needs --data"))?;
    let data = read_data(data_path)?;
    let (name, spec) = build_spec(&o.model, &data)?;
    let sampler = o.sampler.sampler(5000, 5000)?;
    let chains = o.chains.unwrap_or(1);
    if chains == 0 {
        return Err(usage("chains must be positive"));
    }
    let q = o.quantile.unwrap_or(0.99);
    if !(q > 0.0 && q < 1.0) {
        return Err(usage(format!("quantile {q} not in (0, 1)")));
    }
    let (lo, hi) = data_range(&data);
    let (gmin, gmax) = (o.grid_min.unwrap_or(lo), o.grid_max.unwrap_or(2.0 * hi));
    let points = o.grid_points.unwrap_or(100);
    if !(gmin > 0.0 && gmax > gmin && gmax.is_finite()) || points < 2 {
        return Err(usage("grid needs 0 < grid_min < grid_max and at least two points"));
    }
    let x_rows = panel_rows(&spec, o.x_panels.as_deref());
    let grid = PredictiveGrid {
        y: log_grid(gmin, gmax, points),
        x: x_rows.clone(),
        joint: o.joint.unwrap_or(false),
    };

    let seed = o.common.seed();
    let out = Out::new(o.common.out_dir(), seed)?;
    let log_dir = o.chain_log.unwrap_or(true).then(|| out.dir().to_path_buf());
    let threads = o.sampler.threads.unwrap_or(chains);
    let (outputs, logs) = run_chains(&spec, &data, &sampler, chains, threads, seed, log_dir.as_deref())?;

    let mut snaps: Vec<Snapshot> = Vec::new();
    let mut summaries = Vec::new();
    for c in outputs {
        summaries.push(c.summary);
        snaps.extend(c.snapshots);
    }
    let post = predictive_summaries(&snaps, &spec, &grid)?;
    let margins = post.panels[0].margins.len();
    let mut quantiles = Vec::new();
    let panels: Vec<Option<&[f64]>> = if x_rows.is_empty() {
        vec![None]
    } else {
        x_rows.iter().map(|r| Some(r.as_slice())).collect()
    };
    for x in panels {
        for k in 0..margins {
            quantiles.push(QuantileRow {
                p: q,
                margin: k + 1,
                x: x.map(<[f64]>::to_vec),
                value: predictive_quantile(&snaps, &spec, q, k, x)?,
            });
        }
    }
    let report = FitReport {
        model: name,
        n: data.n(),
        spec: &spec,
        sampler: &sampler,
        chains: summaries,
        chain_logs: logs
            .iter()
            .map(|p| p.file_name().expect("chain log file").to_string_lossy().into_owned())
            .collect(),
        tail_index_mean: post.tail_index.iter().map(|t| mean(t)).collect(),
        quantiles,
        posterior: &post,
    };
    out.json("summary.json", &Stamp::new("fit", seed, report))?;
    let (header, rows) = predictive_table(&post);
    out.csv("predictive.csv", &header, rows)?;
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct DiagnoseOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Observations to diagnose (usually the fitted data).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory of a `fit` run with chain logs.
    #[arg(long)]
    pub fit_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
struct FitOnDisk {
    spec: MixtureModelSpec,
    chain_logs: Vec<String>,
}

#[derive(Serialize)]
struct QuantilePair {
    p: f64,
    normal: f64,
    empirical: f64,
}

#[derive(Serialize)]
struct MarginDiagnostics {
    margin: usize,
    mean: f64,
    sd: f64,
    ks_statistic: f64,
    ks_pvalue: f64,
    quantiles: Vec<QuantilePair>,
}

#[derive(Serialize)]
struct DiagnoseReport {
    n: usize,
    draws: usize,
    margins: Vec<MarginDiagnostics>,
    /// (margin, observation) pairs, 1-based, whose cdf value was clamped.
    clamped: Vec<(usize, usize)>,
}

fn load_fit(dir: &Path) -> Result<(MixtureModelSpec, Vec<Snapshot>), Failure> {
    let path = dir.join("summary.json");
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading {}", path.display()))
        .usage()?;
    let fit: FitOnDisk = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .usage()?;
    if fit.chain_logs.is_empty() {
        return Err(usage(format!("{}: the fit was run without chain logs", path.display())));
    }
    let mut snaps = Vec::new();
    for name in &fit.chain_logs {
        let p = dir.join(name);
        let mut r = ChainLogReader::open(&p).with_context(|| format!("opening {}", p.display()))?;
        snaps.extend(r.read_all()?);
        if r.truncated() {
            eprintln!("warning: {} ends in a partial record; using the complete ones", p.display());
        }
    }
    Ok((fit.spec, snaps))
}

pub fn cmd_diagnose(flags: DiagnoseOpts) -> Result<(), Failure> {
    let config = flags.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let data = read_data(o.data.as_deref().ok_or_else(|| usage("diagnose needs --data"))?)?;
    let (spec, snaps) = load_fit(o.fit_dir.as_deref().ok_or_else(|| usage("diagnose needs --fit-dir"))?)?;
    if snaps.is_empty() {
        return Err(usage("the chain logs hold no draws"));
    }
    let seed = o.common.seed();
    let mut rng = pyptail::seeded_rng(seed, 0);
    let rep = randomized_quantile_residuals(&snaps, &spec, &data, &mut rng).usage()?;

    let probs = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];
    let margins = rep
        .residuals
        .iter()
        .enumerate()
        .map(|(k, r)| {
            let d = ks_statistic(r, pyptail::special::norm_cdf);
            MarginDiagnostics {
                margin: k + 1,
                mean: mean(r),
                sd: variance(r).sqrt(),
                ks_statistic: d,
                ks_pvalue: ks_pvalue(d, r.len()),
                quantiles: probs
                    .iter()
                    .map(|&p| QuantilePair {
                        p,
                        normal: norm_quantile(p),
                        empirical: quantile(r, p),
                    })
                    .collect(),
            }
        })
        .collect();
    let clamped: Vec<(usize, usize)> = rep.clamped.iter().map(|&(k, i)| (k + 1, i + 1)).collect();

    let out = Out::new(o.common.out_dir(), seed)?;
    let header = ["observation", "margin", "residual", "clamped"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for (k, r) in rep.residuals.iter().enumerate() {
        for (i, &v) in r.iter().enumerate() {
            let flag = rep.clamped.contains(&(k, i));
            rows.push(vec![(i + 1).to_string(), (k + 1).to_string(), num(v), flag.to_string()]);
        }
    }
    out.csv("residuals.csv", &header, rows)?;
    let report = DiagnoseReport {
        n: data.n(),
        draws: snaps.len(),
        margins,
        clamped,
    };
    out.json("residuals.json", &Stamp::new("diagnose", seed, report))?;
    Ok(())
}
