//! `replicate-study`: repeated generate-and-fit over one scenario, with
//! Monte Carlo mean predictive curves against the truth.

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pyptail::mcmc::{predictive_summaries, run_chain, PosteriorSummary, PredictiveGrid, SamplerConfig};
use pyptail::simstudy::{generate, ScenarioId, ScenarioParams, ScenarioSpec};
use pyptail::stats::{mean, quantile};

use crate::config::{layer, usage, Common, Failure};
use crate::fit::panel_rows;
use crate::gen::parse_scenario;
use crate::model::{build_spec, pool, ChainOpts, ModelName, ModelOpts};
use crate::output::{log_grid, num, Out, Stamp};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct StudyOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Observations per replicate.
    #[arg(long)]
    pub n: Option<usize>,
    /// Models fitted to every replicate (default: uni_scale and dp_erlang for
    /// uni_pareto, else multi_scale or cond_scale).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub models: Option<Vec<ModelName>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelOpts,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampler: ChainOpts,
    #[arg(long)]
    pub grid_min: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub x_panels: Option<Vec<f64>>,
}

/// Streams per replicate: one for the data, the rest for the fits.
const STREAMS_PER_REPLICATE: u64 = 64;

#[derive(Serialize)]
struct ReplicateReport<'a> {
    replicate: usize,
    model: ModelName,
    tail_index_mean: Vec<f64>,
    posterior: &'a PosteriorSummary,
}

#[derive(Serialize)]
struct ModelTails {
    model: ModelName,
    /// Posterior-mean tail index per replicate and margin.
    tail_index_mean: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct StudyReport<'a> {
    scenario: &'a ScenarioParams,
    replicates: usize,
    n: usize,
    sampler: &'a SamplerConfig,
    grid: &'a [f64],
    models: Vec<ModelTails>,
    aggregate_file: &'a str,
}

fn default_models(id: ScenarioId, p: &ScenarioParams) -> Vec<ModelName> {
    if id == ScenarioId::UniPareto {
        vec![ModelName::UniScale, ModelName::DpErlang]
    } else {
        vec![ModelName::default_for(p.dim(), p.conditional)]
    }
}

/// Shared y-grid spanning the 0.001 and 0.999 quantiles of every margin and panel.
fn truth_range(p: &ScenarioParams, xs: &[f64]) -> Result<(f64, f64), Failure> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for m in &p.margins {
        for &x in xs {
            lo = lo.min(m.quantile(1e-3, x)?);
            hi = hi.max(m.quantile(1.0 - 1e-3, x)?);
        }
    }
    Ok((lo, hi))
}

pub fn cmd_replicate_study(flags: StudyOpts) -> Result<(), Failure> {
    let config = flags.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let id = parse_scenario(o.scenario.as_deref())?;
    let params = id.params();
    let reps = o.replicates.unwrap_or(3);
    let n = o.n.unwrap_or(200);
    if reps == 0 || n < 2 {
        return Err(usage("need at least one replicate and two observations"));
    }
    let models = o.models.clone().unwrap_or_else(|| default_models(id, &params));
    if models.is_empty() || models.len() as u64 >= STREAMS_PER_REPLICATE {
        return Err(usage("between 1 and 63 models"));
    }
    let sampler = o.sampler.sampler(1000, 1000)?;
    let seed = o.common.seed();

    let panel_x: Vec<f64> = if params.conditional {
        o.x_panels.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75])
    } else {
        vec![0.0]
    };
    let (tlo, thi) = truth_range(&params, &panel_x)?;
    let (gmin, gmax) = (o.grid_min.unwrap_or(tlo), o.grid_max.unwrap_or(thi));
    let points = o.grid_points.unwrap_or(60);
    if !(gmin > 0.0 && gmax > gmin && gmax.is_finite()) || points < 2 {
        return Err(usage("grid needs 0 < grid_min < grid_max and at least two points"));
    }
    let y = log_grid(gmin, gmax, points);

    // resolve every model once on a pilot dataset so bad options fail before sampling
    let pilot = generate(&ScenarioSpec { id, n, seed }, &mut pyptail::seeded_rng(seed, 0))
        .dataset()?;
    for &m in &models {
        build_spec(&ModelOpts { model: Some(m), ..o.model.clone() }, &pilot)?;
    }

    let job = |r: usize| -> Result<Vec<PosteriorSummary>, Failure> {
        let base = r as u64 * STREAMS_PER_REPLICATE;
        let g = generate(&ScenarioSpec { id, n, seed }, &mut pyptail::seeded_rng(seed, base));
        let data = g.dataset()?;
        let mut fits = Vec::with_capacity(models.len());
        for (j, &m) in models.iter().enumerate() {
            let (_, spec) = build_spec(&ModelOpts { model: Some(m), ..o.model.clone() }, &data)?;
            let mut rng = pyptail::seeded_rng(seed, base + 1 + j as u64);
            let chain = run_chain(&spec, &data, &sampler, &mut rng)?;
            let grid = PredictiveGrid {
                y: y.clone(),
                x: panel_rows(&spec, params.conditional.then_some(panel_x.as_slice())),
                joint: false,
            };
            fits.push(predictive_summaries(&chain.snapshots, &spec, &grid)?);
        }
        Ok(fits)
    };
    let threads = o.sampler.threads.unwrap_or(1);
    let results = pool(threads)?.install(|| (0..reps).into_par_iter().map(job).collect::<Vec<_>>());
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let out = Out::new(o.common.out_dir(), seed)?;
    for (r, fits) in results.iter().enumerate() {
        for (post, &m) in fits.iter().zip(&models) {
            let rep = ReplicateReport {
                replicate: r + 1,
                model: m,
                tail_index_mean: post.tail_index.iter().map(|t| mean(t)).collect(),
                posterior: post,
            };
            out.json(
                &format!("replicate_{:03}_{}.json", r + 1, m.name()),
                &Stamp::new("replicate-study", seed, rep),
            )?;
        }
    }

    let header = [
        "model",
        "x",
        "margin",
        "y",
        "true_density",
        "true_log_survival",
        "mean_density",
        "mean_log_survival",
        "lower_log_survival",
        "upper_log_survival",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::new();
    for (j, &m) in models.iter().enumerate() {
        for (p, &x) in panel_x.iter().enumerate() {
            for (k, margin) in params.margins.iter().enumerate() {
                for (i, &yv) in y.iter().enumerate() {
                    let curve = |f: &dyn Fn(&PosteriorSummary) -> f64| -> Vec<f64> {
                        results.iter().map(|fits| f(&fits[j])).collect()
                    };
                    let dens = curve(&|s| s.panels[p].margins[k].density.mean[i]);
                    let ls = curve(&|s| s.panels[p].margins[k].log_survival_predictive[i]);
                    rows.push(vec![
                        m.name().to_string(),
                        if params.conditional { num(x) } else { String::new() },
                        (k + 1).to_string(),
                        num(yv),
                        num(margin.pdf(yv, x)?),
                        num(margin.survival(yv, x)?.ln()),
                        num(mean(&dens)),
                        num(mean(&ls)),
                        num(quantile(&ls, 0.025)),
                        num(quantile(&ls, 0.975)),
                    ]);
                }
            }
        }
    }
    out.csv("study.csv", &header, rows)?;

    let report = StudyReport {
        scenario: &params,
        replicates: reps,
        n,
        sampler: &sampler,
        grid: &y,
        models: models
            .iter()
            .enumerate()
            .map(|(j, &m)| ModelTails {
                model: m,
                tail_index_mean: results
                    .iter()
                    .map(|fits| fits[j].tail_index.iter().map(|t| mean(t)).collect())
                    .collect(),
            })
            .collect(),
        aggregate_file: "study.csv",
    };
    out.json("study.json", &Stamp::new("replicate-study", seed, report))?;
    Ok(())
}
