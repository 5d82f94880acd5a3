use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Snapshot;
use crate::data::Dataset;
use crate::error::{input, Error, Result};
use crate::models::{Component, MixtureModelSpec};
use crate::special::{log_sum_exp, norm_quantile};
use crate::stats::{kendall_tau, quantile_sorted};

/// Evaluation points: a positive increasing grid shared by every margin and,
/// for cond_scale, the covariate rows to condition on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveGrid {
    pub y: Vec<f64>,
    #[serde(default)]
    pub x: Vec<Vec<f64>>,
    /// Joint density on y x y for bivariate models.
    #[serde(default)]
    pub joint: bool,
}

/// Pointwise posterior mean with central 50% and 95% bands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub mean: Vec<f64>,
    pub lower: Vec<f64>,
    pub lower50: Vec<f64>,
    pub upper50: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bands {
    /// Bands over columns of `rows[draw][point]`.
    fn from_draws(rows: &[Vec<f64>]) -> Bands {
        let g = rows[0].len();
        let mut b = Bands {
            mean: Vec::with_capacity(g),
            lower: Vec::with_capacity(g),
            lower50: Vec::with_capacity(g),
            upper50: Vec::with_capacity(g),
            upper: Vec::with_capacity(g),
        };
        let mut col = vec![0.0; rows.len()];
        for j in 0..g {
            col.iter_mut().zip(rows).for_each(|(c, r)| *c = r[j]);
            b.mean.push(col.iter().sum::<f64>() / col.len() as f64);
            col.sort_by(f64::total_cmp);
            b.lower.push(quantile_sorted(&col, 0.025));
            b.lower50.push(quantile_sorted(&col, 0.25));
            b.upper50.push(quantile_sorted(&col, 0.75));
            b.upper.push(quantile_sorted(&col, 0.975));
        }
        b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginBands {
    pub density: Bands,
    /// Bands of each draw's log survival.
    pub log_survival: Bands,
    /// log of the posterior-mean survival.
    pub log_survival_predictive: Vec<f64>,
}

/// Posterior-mean joint density, row-major with the first margin slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointGrid {
    pub mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictivePanel {
    pub x: Option<Vec<f64>>,
    pub margins: Vec<MarginBands>,
    pub joint: Option<JointGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub grid: Vec<f64>,
    pub panels: Vec<PredictivePanel>,
    /// Tail-index draws per margin.
    pub tail_index: Vec<Vec<f64>>,
}

struct Prepared {
    ln_w: Vec<f64>,
    comps: Vec<Component>,
}

impl Prepared {
    fn new(spec: &MixtureModelSpec, snap: &Snapshot, x: Option<&[f64]>) -> Result<Self> {
        let w = snap.mixture.weights_at(spec, x)?;
        let comps = snap.mixture.components(spec)?;
        let (ln_w, comps) = w
            .into_iter()
            .zip(comps)
            .filter(|(w, _)| *w > 0.0)
            .map(|(w, c)| (w.ln(), c))
            .unzip();
        Ok(Prepared { ln_w, comps })
    }

    fn margin_pdf(&self, k: usize, y: f64) -> f64 {
        self.ln_w
            .iter()
            .zip(&self.comps)
            .map(|(lw, c)| lw.exp() * c.margin(k).pdf(y))
            .sum()
    }

    fn margin_cdf(&self, k: usize, y: f64) -> f64 {
        self.ln_w
            .iter()
            .zip(&self.comps)
            .map(|(lw, c)| lw.exp() * c.margin(k).cdf(y))
            .sum()
    }

    fn margin_ln_survival(&self, k: usize, y: f64, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(
            self.ln_w
                .iter()
                .zip(&self.comps)
                .map(|(lw, c)| lw + c.margin(k).ln_survival(y)),
        );
        log_sum_exp(buf)
    }
}

fn check_grid(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(input("empty evaluation grid"));
    }
    if y.iter().any(|v| !(*v > 0.0 && v.is_finite())) || y.windows(2).any(|w| w[1] <= w[0]) {
        return Err(input("evaluation grid must be positive and increasing"));
    }
    Ok(())
}

fn covariate_rows<'g>(spec: &MixtureModelSpec, x: &'g [Vec<f64>]) -> Result<Vec<Option<&'g [f64]>>> {
    if spec.is_conditional() {
        if x.is_empty() {
            return Err(input("cond_scale summaries need covariate values"));
        }
        let want = spec.design_dim() - 1;
        if let Some(bad) = x.iter().find(|r| r.len() != want) {
            return Err(Error::Dimension {
                expected: want,
                got: bad.len(),
            });
        }
        Ok(x.iter().map(|r| Some(r.as_slice())).collect())
    } else if !x.is_empty() {
        Err(input("covariate values given for a model without covariates"))
    } else {
        Ok(vec![None])
    }
}

fn margins(spec: &MixtureModelSpec) -> usize {
    if spec.class.is_scale() {
        spec.dim
    } else {
        1
    }
}

/// Pointwise posterior summaries of the predictive density and log survival.
pub fn predictive_summaries(
    snapshots: &[Snapshot],
    spec: &MixtureModelSpec,
    grid: &PredictiveGrid,
) -> Result<PosteriorSummary> {
    if snapshots.is_empty() {
        return Err(input("no posterior draws to summarise"));
    }
    check_grid(&grid.y)?;
    let rows = covariate_rows(spec, &grid.x)?;
    let g = grid.y.len();
    let mut panels = Vec::with_capacity(rows.len());
    let mut buf = Vec::new();
    for x in rows {
        let prepared: Vec<Prepared> = snapshots
            .iter()
            .map(|s| Prepared::new(spec, s, x))
            .collect::<Result<_>>()?;
        let mut margin_bands = Vec::new();
        for k in 0..margins(spec) {
            let dens: Vec<Vec<f64>> = prepared
                .iter()
                .map(|p| grid.y.iter().map(|&y| p.margin_pdf(k, y)).collect())
                .collect();
            let lsurv: Vec<Vec<f64>> = prepared
                .iter()
                .map(|p| grid.y.iter().map(|&y| p.margin_ln_survival(k, y, &mut buf)).collect())
                .collect();
            let ln_n = (prepared.len() as f64).ln();
            let predictive = (0..g)
                .map(|j| {
                    let col: Vec<f64> = lsurv.iter().map(|r| r[j]).collect();
                    log_sum_exp(&col) - ln_n
                })
                .collect();
            margin_bands.push(MarginBands {
                density: Bands::from_draws(&dens),
                log_survival: Bands::from_draws(&lsurv),
                log_survival_predictive: predictive,
            });
        }
        let joint = (grid.joint && spec.dim == 2 && spec.class.is_scale()).then(|| {
            let mut mean = vec![0.0; g * g];
            for p in &prepared {
                for (lw, c) in p.ln_w.iter().zip(&p.comps) {
                    let w = lw.exp();
                    let a: Vec<f64> = grid.y.iter().map(|&y| c.margin(0).pdf(y)).collect();
                    let b: Vec<f64> = grid.y.iter().map(|&y| c.margin(1).pdf(y)).collect();
                    for (i, ai) in a.iter().enumerate() {
                        let wa = w * ai;
                        if wa == 0.0 {
                            continue;
                        }
                        for (j, bj) in b.iter().enumerate() {
                            mean[i * g + j] += wa * bj;
                        }
                    }
                }
            }
            let n = prepared.len() as f64;
            mean.iter_mut().for_each(|v| *v /= n);
            JointGrid { mean }
        });
        panels.push(PredictivePanel {
            x: x.map(<[f64]>::to_vec),
            margins: margin_bands,
            joint,
        });
    }
    let tails: Vec<Vec<f64>> = snapshots.iter().map(|s| s.tail_index(spec)).collect();
    let tail_index = (0..tails[0].len())
        .map(|k| tails.iter().map(|t| t[k]).collect())
        .collect();
    Ok(PosteriorSummary {
        grid: grid.y.clone(),
        panels,
        tail_index,
    })
}

/// p-quantile of margin k of the posterior-mean predictive distribution.
pub fn predictive_quantile(
    snapshots: &[Snapshot],
    spec: &MixtureModelSpec,
    p: f64,
    k: usize,
    x: Option<&[f64]>,
) -> Result<f64> {
    if snapshots.is_empty() {
        return Err(input("no posterior draws"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(crate::error::domain(format!("probability {p} not in (0, 1)")));
    }
    if k >= margins(spec) {
        return Err(Error::Dimension {
            expected: margins(spec),
            got: k + 1,
        });
    }
    let prepared: Vec<Prepared> = snapshots
        .iter()
        .map(|s| Prepared::new(spec, s, x))
        .collect::<Result<_>>()?;
    let ln_n = (prepared.len() as f64).ln();
    let mut buf = Vec::new();
    let mut col = Vec::with_capacity(prepared.len());
    let mut ln_surv = |t: f64| {
        let y = t.exp();
        col.clear();
        for pr in &prepared {
            col.push(pr.margin_ln_survival(k, y, &mut buf));
        }
        log_sum_exp(&col) - ln_n
    };
    let target = (-p).ln_1p();
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    while ln_surv(lo) < target {
        lo -= 2.0;
        if lo < -700.0 {
            return Ok(lo.exp());
        }
    }
    while ln_surv(hi) > target {
        hi += 2.0;
        if hi > 700.0 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_surv(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Normal-quantile residuals per margin with the list of clamped entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `residuals[k][i]` for margin k and observation i.
    pub residuals: Vec<Vec<f64>>,
    /// (margin, observation) pairs whose cdf value hit the clamp.
    pub clamped: Vec<(usize, usize)>,
}

pub const RESIDUAL_CLAMP: f64 = 1e-10;

/// r_i = Phi^{-1}(F(y_i)) with F the posterior-mean cdf (at x_i for
/// cond_scale). Cdf values outside [c, 1 - c] are moved to a uniform draw
/// inside the band of width c next to the clamp, so clamped values do not tie.
pub fn randomized_quantile_residuals<R: Rng + ?Sized>(
    snapshots: &[Snapshot],
    spec: &MixtureModelSpec,
    data: &Dataset,
    rng: &mut R,
) -> Result<ResidualReport> {
    if snapshots.is_empty() {
        return Err(input("no posterior draws"));
    }
    super::check_data(spec, data)?;
    let mk = margins(spec);
    let shared = if spec.is_conditional() {
        None
    } else {
        Some(
            snapshots
                .iter()
                .map(|s| Prepared::new(spec, s, None))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    let n_snap = snapshots.len() as f64;
    let mut residuals = vec![Vec::with_capacity(data.n()); mk];
    let mut clamped = Vec::new();
    let mut buf = Vec::new();
    for i in 0..data.n() {
        let local;
        let prepared = match &shared {
            Some(p) => p,
            None => {
                local = snapshots
                    .iter()
                    .map(|s| Prepared::new(spec, s, data.x(i)))
                    .collect::<Result<Vec<_>>>()?;
                &local
            }
        };
        for (k, res) in residuals.iter_mut().enumerate() {
            let y = data.y(i)[k];
            let mut u = prepared.iter().map(|p| p.margin_cdf(k, y)).sum::<f64>() / n_snap;
            if u > 0.5 {
                let s: f64 = prepared
                    .iter()
                    .map(|p| p.margin_ln_survival(k, y, &mut buf).exp())
                    .sum::<f64>()
                    / n_snap;
                u = 1.0 - s;
            }
            if u < RESIDUAL_CLAMP {
                u = RESIDUAL_CLAMP * (1.0 + rng.random::<f64>());
                clamped.push((k, i));
            } else if u > 1.0 - RESIDUAL_CLAMP {
                u = 1.0 - RESIDUAL_CLAMP * (1.0 + rng.random::<f64>());
                clamped.push((k, i));
            }
            res.push(norm_quantile(u));
        }
    }
    Ok(ResidualReport { residuals, clamped })
}

/// Gumbel dependence from Kendall's tau of the first two margins,
/// theta = 1 / (1 - tau), never below independence.
pub fn empirical_bayes_theta(data: &Dataset) -> Result<f64> {
    if data.dim() < 2 || data.n() < 2 {
        return Err(input("need at least two observations of two margins"));
    }
    let tau = kendall_tau(&data.column(0), &data.column(1));
    Ok((1.0 / (1.0 - tau.min(0.99))).max(1.0))
}
