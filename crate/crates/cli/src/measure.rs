//! `simulate-measure` and `envelopes`: tail trajectories of stable-law and
//! Dirichlet process measures with their almost-sure envelopes.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use pyptail::measures::{dp_tail_trajectory, sp_tail_trajectory};
use pyptail::tails::{ln_envelope_g_s, ln_envelope_h_r, ln_envelope_l, ln_envelope_u_r, liminf_constant};

use crate::config::{layer, usage, Common, Failure, UsageExt};
use crate::output::{log_grid, num, Out, Stamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// Stable-law process PYP(D, 0, G0).
    Sp,
    /// Dirichlet process DP(M, G0).
    Dp,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MeasureOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: Option<MeasureKind>,
    /// Discount D of the stable-law process.
    #[arg(long)]
    pub d: Option<f64>,
    /// Precision M of the Dirichlet process.
    #[arg(long)]
    pub m: Option<f64>,
    /// Centering law: `paretoA`, survival y^-A on y > 1.
    #[arg(long)]
    pub centering: Option<String>,
    /// Exponent s < 1 of the lower Dirichlet process envelope.
    #[arg(long)]
    pub s: Option<f64>,
    /// Exponent r > 1 of the upper envelope.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub y_min: Option<f64>,
    #[arg(long)]
    pub y_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SimulateOpts {
    #[command(flatten)]
    #[serde(flatten)]
    pub measure: MeasureOpts,
    /// Number of trajectories.
    #[arg(long)]
    pub paths: Option<usize>,
}

struct Resolved {
    kind: MeasureKind,
    d: f64,
    m: f64,
    alpha: f64,
    s: f64,
    r: f64,
    y: Vec<f64>,
    /// ln(1 - G0(y)) on the grid.
    ln_tail: Vec<f64>,
}

fn centering_index(name: &str) -> Result<f64, Failure> {
    let a = name
        .strip_prefix("pareto")
        .and_then(|a| a.parse::<f64>().ok())
        .ok_or_else(|| usage(format!("unknown centering {name:?}; expected paretoA, e.g. pareto1")))?;
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(usage(format!("centering tail index {a} must be positive")))
    }
}

fn resolve(o: &MeasureOpts) -> Result<Resolved, Failure> {
    let kind = o.kind.unwrap_or(MeasureKind::Sp);
    let d = o.d.unwrap_or(0.5);
    let m = o.m.unwrap_or(1.0);
    let s = o.s.unwrap_or(0.9);
    let r = o.r.unwrap_or(match kind {
        MeasureKind::Sp => 2.0,
        MeasureKind::Dp => 1.1,
    });
    let alpha = centering_index(o.centering.as_deref().unwrap_or("pareto1"))?;
    let (lo, hi, points) = (o.y_min.unwrap_or(1.5), o.y_max.unwrap_or(1e6), o.points.unwrap_or(200));
    if !(lo > 1.0 && hi > lo && hi.is_finite()) || points < 2 {
        return Err(usage("grid needs 1 < y_min < y_max and at least two points"));
    }
    match kind {
        MeasureKind::Sp if !(d > 0.0 && d < 1.0) => return Err(usage(format!("d = {d} not in (0, 1)"))),
        MeasureKind::Dp if !(m > 0.0 && m.is_finite()) => return Err(usage(format!("m = {m} must be positive"))),
        _ => {}
    }
    if !(s < 1.0 && r > 1.0) {
        return Err(usage("envelopes need s < 1 and r > 1"));
    }
    let y = log_grid(lo, hi, points);
    let ln_tail = y.iter().map(|v| -alpha * v.ln()).collect();
    Ok(Resolved {
        kind,
        d,
        m,
        alpha,
        s,
        r,
        y,
        ln_tail,
    })
}

/// Log envelopes at each grid point; NaN where the bound is not defined.
fn envelopes(p: &Resolved) -> (Vec<f64>, Vec<f64>) {
    p.ln_tail
        .iter()
        .map(|&lt| {
            let t = lt.exp();
            match p.kind {
                MeasureKind::Sp => (
                    ln_envelope_l(t, p.d).unwrap_or(f64::NAN),
                    ln_envelope_u_r(t, p.d, p.r).unwrap_or(f64::NAN),
                ),
                MeasureKind::Dp => (
                    ln_envelope_g_s(p.m * t, p.s).unwrap_or(f64::NAN),
                    ln_envelope_h_r(p.m * t, p.r).unwrap_or(f64::NAN),
                ),
            }
        })
        .unzip()
}

#[derive(Serialize)]
struct EnvelopeMeta {
    kind: MeasureKind,
    discount: Option<f64>,
    precision: Option<f64>,
    centering_tail_index: f64,
    s: Option<f64>,
    r: f64,
    /// Almost-sure lim inf of S(t)/l(t) for the stable-law process.
    liminf_constant: Option<f64>,
    points: usize,
}

fn write_envelopes(out: &Out, p: &Resolved, seed: u64) -> Result<(), Failure> {
    let (lower, upper) = envelopes(p);
    let header: Vec<String> = ["y", "log_tail", "lower", "upper"].map(String::from).to_vec();
    let rows = (0..p.y.len()).map(|i| vec![num(p.y[i]), num(p.ln_tail[i]), num(lower[i]), num(upper[i])]);
    out.csv("envelopes.csv", &header, rows)?;
    let sp = p.kind == MeasureKind::Sp;
    let meta = EnvelopeMeta {
        kind: p.kind,
        discount: sp.then_some(p.d),
        precision: (!sp).then_some(p.m),
        centering_tail_index: p.alpha,
        s: (!sp).then_some(p.s),
        r: p.r,
        liminf_constant: if sp { liminf_constant(p.d).ok() } else { None },
        points: p.y.len(),
    };
    out.json("envelopes.json", &Stamp::new("envelopes", seed, meta))?;
    Ok(())
}

pub fn cmd_envelopes(flags: MeasureOpts) -> Result<(), Failure> {
    let config = flags.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let p = resolve(&o)?;
    let out = Out::new(o.common.out_dir(), o.common.seed())?;
    write_envelopes(&out, &p, o.common.seed())
}

pub fn cmd_simulate_measure(flags: SimulateOpts) -> Result<(), Failure> {
    let config = flags.measure.common.config.clone();
    let o = layer(flags, config.as_deref())?;
    let p = resolve(&o.measure)?;
    let paths = o.paths.unwrap_or(50);
    if paths == 0 {
        return Err(usage("paths must be positive"));
    }
    let seed = o.measure.common.seed();
    let mut rng = pyptail::seeded_rng(seed, 0);
    let tail: Vec<f64> = p.ln_tail.iter().map(|l| l.exp()).collect();
    let mut columns = Vec::with_capacity(paths);
    for _ in 0..paths {
        let traj = match p.kind {
            MeasureKind::Sp => sp_tail_trajectory(p.d, &tail, &mut rng),
            MeasureKind::Dp => dp_tail_trajectory(p.m, &tail, &mut rng),
        }
        .usage()?;
        columns.push(traj.log_survival);
    }
    let (lower, upper) = envelopes(&p);
    let mut header: Vec<String> = vec!["y".into(), "log_tail".into()];
    header.extend((1..=paths).map(|j| format!("path_{j}")));
    header.extend(["envelope_lower".into(), "envelope_upper".into()]);
    let rows = (0..p.y.len()).map(|i| {
        let mut row = vec![num(p.y[i]), num(p.ln_tail[i])];
        row.extend(columns.iter().map(|c| num(c[i])));
        row.push(num(lower[i]));
        row.push(num(upper[i]));
        row
    });
    let out = Out::new(o.measure.common.out_dir(), seed)?;
    out.csv("trajectories.csv", &header, rows)?;
    write_envelopes(&out, &p, seed)
}
