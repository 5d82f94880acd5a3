//! `gen-data`: one dataset from a simulation scenario with a JSON truth sidecar.

use clap::Args;
use serde::{Deserialize, Serialize};

use pyptail::simstudy::{generate, GeneratedData, ScenarioId, ScenarioParams, ScenarioSpec};

use crate::config::{layer, usage, Common, Failure, UsageExt};
use crate::output::{num, Out, Stamp};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GenOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// uni_pareto, biv1, biv2, biv3, cond1, cond2 or cond3.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of observations.
    #[arg(long)]
    pub n: Option<usize>,
}

pub fn parse_scenario(s: Option<&str>) -> Result<ScenarioId, Failure> {
    s.unwrap_or("uni_pareto").parse::<ScenarioId>().usage()
}

/// Column names and rows of a generated dataset.
pub fn data_table(g: &GeneratedData) -> (Vec<String>, Vec<Vec<String>>) {
    let d = g.scenario.dim();
    let mut header: Vec<String> = (1..=d).map(|k| format!("y{k}")).collect();
    if g.x.is_some() {
        header.push("x".into());
    }
    let rows = g
        .y
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row: Vec<String> = r.iter().map(|&v| num(v)).collect();
            if let Some(x) = &g.x {
                row.push(num(x[i]));
            }
            row
        })
        .collect();
    (header, rows)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    scenario: &'a ScenarioParams,
    n: usize,
    columns: &'a [String],
    /// Kendall's tau of the copula, 1 - 1/theta.
    kendall_tau: f64,
    data_file: &'a str,
}

pub fn cmd_gen_data(flags: GenOpts) -> Result<(), Failure> {
    let config = flags.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let id = parse_scenario(o.scenario.as_deref())?;
    let n = o.n.unwrap_or(1000);
    if n == 0 {
        return Err(usage("n must be positive"));
    }
    let seed = o.common.seed();
    let spec = ScenarioSpec { id, n, seed };
    let g = generate(&spec, &mut pyptail::seeded_rng(seed, 0));
    let (header, rows) = data_table(&g);
    let out = Out::new(o.common.out_dir(), seed)?;
    out.csv("data.csv", &header, rows)?;
    let side = Sidecar {
        scenario: &g.scenario,
        n,
        columns: &header,
        kendall_tau: 1.0 - 1.0 / g.scenario.theta,
        data_file: "data.csv",
    };
    out.json("data.json", &Stamp::new("gen-data", seed, side))?;
    Ok(())
}
