//! Pitman-Yor random measures by stick-breaking and by subordinators.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::special::{beta_variate, ln_gamma_variate, log_add_exp, open_unit};

/// Default tolerance on the expected residual stick mass.
pub const DEFAULT_RESIDUAL_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PyParams {
    discount: f64,
    precision: f64,
}

impl PyParams {
    pub fn new(discount: f64, precision: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&discount) {
            return Err(domain(format!("discount {discount} not in [0, 1)")));
        }
        if !(precision > -discount) {
            return Err(domain(format!(
                "precision {precision} must exceed -discount {}",
                -discount
            )));
        }
        if discount == 0.0 && precision == 0.0 {
            return Err(domain("discount and precision both zero"));
        }
        Ok(PyParams {
            discount,
            precision,
        })
    }

    pub fn dirichlet(precision: f64) -> Result<Self> {
        Self::new(0.0, precision)
    }

    pub fn stable(discount: f64) -> Result<Self> {
        Self::new(discount, 0.0)
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn precision(&self) -> f64 {
        self.precision
    }

    /// Beta parameters of the h-th stick fraction (h counts from 1).
    pub fn stick_law(&self, h: usize) -> (f64, f64) {
        (
            1.0 - self.discount,
            self.precision + h as f64 * self.discount,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomMeasureDraw<A> {
    pub weights: Vec<f64>,
    pub atoms: Vec<A>,
    pub residual_mass: f64,
}

/// Weights and leftover mass from explicit stick fractions.
pub fn weights_from_fractions(fractions: &[f64]) -> RandomMeasureDraw<()> {
    let mut weights = Vec::with_capacity(fractions.len());
    let mut rest = 1.0;
    for &v in fractions {
        weights.push(v * rest);
        rest *= 1.0 - v;
    }
    RandomMeasureDraw {
        atoms: vec![(); weights.len()],
        weights,
        residual_mass: rest,
    }
}

pub fn draw_stick_weights<R: Rng + ?Sized>(
    params: &PyParams,
    truncation: usize,
    rng: &mut R,
) -> Result<RandomMeasureDraw<()>> {
    if truncation == 0 {
        return Err(input("truncation must be at least 1"));
    }
    let fractions: Vec<f64> = (1..=truncation)
        .map(|h| {
            let (a, b) = params.stick_law(h);
            beta_variate(a, b, rng)
        })
        .collect();
    Ok(weights_from_fractions(&fractions))
}

pub fn draw_random_measure<A, R, F>(
    params: &PyParams,
    truncation: usize,
    rng: &mut R,
    mut atom: F,
) -> Result<RandomMeasureDraw<A>>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> A,
{
    let sticks = draw_stick_weights(params, truncation, rng)?;
    let atoms = (0..truncation).map(|_| atom(rng)).collect();
    Ok(RandomMeasureDraw {
        weights: sticks.weights,
        atoms,
        residual_mass: sticks.residual_mass,
    })
}

pub fn expected_residual_mass(params: &PyParams, truncation: usize) -> f64 {
    ln_expected_residual_mass(params, truncation).exp()
}

fn ln_expected_residual_mass(params: &PyParams, truncation: usize) -> f64 {
    let (d, m) = (params.discount, params.precision);
    (1..=truncation)
        .map(|k| {
            let c = m + k as f64 * d;
            (c / (c + 1.0 - d)).ln()
        })
        .sum()
}

/// Smallest truncation whose expected residual mass is at most `eps`.
pub fn truncation_level(params: &PyParams, eps: f64) -> Result<usize> {
    const CAP: usize = 50_000_000;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain(format!("residual tolerance {eps} not in (0, 1)")));
    }
    let (d, m) = (params.discount, params.precision);
    let target = eps.ln();
    let mut acc = 0.0;
    for k in 1..=CAP {
        let c = m + k as f64 * d;
        acc += (c / (c + 1.0 - d)).ln();
        if acc <= target {
            return Ok(k);
        }
    }
    Err(domain(format!(
        "expected residual mass stays above {eps} beyond {CAP} sticks"
    )))
}

/// log of one positive D-stable variate with Laplace transform exp(-s^D)
/// (Kanter's representation, as used by Chambers, Mallows and Stuck).
pub fn ln_positive_stable<R: Rng + ?Sized>(d: f64, rng: &mut R) -> f64 {
    let u = std::f64::consts::PI * open_unit(rng);
    let e = -open_unit(rng).ln();
    (d * u).sin().ln() - (u.sin().ln()) / d + (1.0 - d) / d * (((1.0 - d) * u).sin().ln() - e.ln())
}

pub fn sample_positive_stable<R: Rng + ?Sized>(d: f64, rng: &mut R) -> Result<f64> {
    check_stable_index(d)?;
    Ok(ln_positive_stable(d, rng).exp())
}

fn check_stable_index(d: f64) -> Result<()> {
    if d > 0.0 && d < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("stable index {d} not in (0, 1)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubordinatorKind {
    /// Gamma process run at rate M, so the value at time 1 is Gamma(M, 1).
    Gamma(f64),
    Stable(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinatorSpec {
    kind: SubordinatorKind,
    killing_rate: f64,
    drift: f64,
}

impl SubordinatorSpec {
    pub fn new(kind: SubordinatorKind) -> Result<Self> {
        match kind {
            SubordinatorKind::Gamma(m) if !(m > 0.0) => {
                return Err(domain(format!("gamma process rate {m} must be positive")))
            }
            SubordinatorKind::Stable(d) => check_stable_index(d)?,
            _ => {}
        }
        Ok(SubordinatorSpec {
            kind,
            killing_rate: 0.0,
            drift: 0.0,
        })
    }

    pub fn kind(&self) -> SubordinatorKind {
        self.kind
    }

    pub fn killing_rate(&self) -> f64 {
        self.killing_rate
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    /// log of the increment over a time step of length dt.
    fn ln_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R) -> f64 {
        if dt <= 0.0 {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            SubordinatorKind::Gamma(m) => ln_gamma_variate(m * dt, rng),
            SubordinatorKind::Stable(d) => dt.ln() / d + ln_positive_stable(d, rng),
        }
    }

    /// log path values at the increasing times `times` (starting from 0).
    fn ln_path<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Vec<f64> {
        let mut acc = f64::NEG_INFINITY;
        let mut prev = 0.0;
        times
            .iter()
            .map(|&t| {
                acc = log_add_exp(acc, self.ln_increment(t - prev, rng));
                prev = t;
                acc
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorPath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn subordinator_path<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    grid: &[f64],
    rng: &mut R,
) -> Result<SubordinatorPath> {
    for (i, &t) in grid.iter().enumerate() {
        if !(0.0..=1.0).contains(&t) {
            return Err(input(format!("grid value {t} outside [0, 1]")).at(i));
        }
        if i > 0 && t <= grid[i - 1] {
            return Err(input("grid is not increasing").at(i));
        }
    }
    let values = spec.ln_path(grid, rng).into_iter().map(f64::exp).collect();
    Ok(SubordinatorPath {
        grid: grid.to_vec(),
        values,
    })
}

/// One realisation of 1 - G(y) along a y-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTrajectory {
    pub survival: Vec<f64>,
    pub log_survival: Vec<f64>,
    /// log of the normaliser: S(1) for the stable case, gamma(M) for the DP.
    pub log_total: f64,
}

impl TailTrajectory {
    /// log of the unnormalised subordinator value at each grid point.
    pub fn log_subordinator(&self) -> Vec<f64> {
        self.log_survival.iter().map(|l| l + self.log_total).collect()
    }
}

fn tail_trajectory<R: Rng + ?Sized>(
    spec: &SubordinatorSpec,
    g0_tail: &[f64],
    rng: &mut R,
) -> Result<TailTrajectory> {
    for (i, &t) in g0_tail.iter().enumerate() {
        if !(t > 0.0 && t < 1.0) {
            return Err(input(format!("tail value {t} outside (0, 1)")).at(i));
        }
        if i > 0 && t >= g0_tail[i - 1] {
            return Err(input("tail values are not strictly decreasing").at(i));
        }
    }
    let mut times: Vec<f64> = g0_tail.iter().rev().copied().collect();
    times.push(1.0);
    let ln_path = spec.ln_path(&times, rng);
    let log_total = *ln_path.last().expect("nonempty path");
    let log_survival: Vec<f64> = ln_path[..g0_tail.len()]
        .iter()
        .rev()
        .map(|l| (l - log_total).min(0.0))
        .collect();
    Ok(TailTrajectory {
        survival: log_survival.iter().map(|l| l.exp()).collect(),
        log_survival,
        log_total,
    })
}

/// 1 - G(y) for G ~ PYP(D, 0, G0), as S(1 - G0(y)) / S(1).
pub fn sp_tail_trajectory<R: Rng + ?Sized>(
    discount: f64,
    g0_tail: &[f64],
    rng: &mut R,
) -> Result<TailTrajectory> {
    let spec = SubordinatorSpec::new(SubordinatorKind::Stable(discount))?;
    tail_trajectory(&spec, g0_tail, rng)
}

/// 1 - G(y) for G ~ DP(M, G0), as gamma(M (1 - G0(y))) / gamma(M).
pub fn dp_tail_trajectory<R: Rng + ?Sized>(
    precision: f64,
    g0_tail: &[f64],
    rng: &mut R,
) -> Result<TailTrajectory> {
    let spec = SubordinatorSpec::new(SubordinatorKind::Gamma(precision))?;
    tail_trajectory(&spec, g0_tail, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use approx::assert_relative_eq;

    #[test]
    fn parameter_domain() {
        assert!(PyParams::new(0.0, 0.0).is_err());
        assert!(PyParams::new(1.0, 0.0).is_err());
        assert!(PyParams::new(0.5, -0.5).is_err());
        assert!(PyParams::new(0.5, -0.4).is_ok());
        assert!(PyParams::dirichlet(1.0).is_ok());
    }

    #[test]
    fn forced_half_sticks_are_geometric() {
        let w = weights_from_fractions(&[0.5; 6]);
        for (h, &p) in w.weights.iter().enumerate() {
            assert_relative_eq!(p, 0.5f64.powi(h as i32 + 1));
        }
        assert_relative_eq!(w.residual_mass, 0.5f64.powi(6));
    }

    #[test]
    fn expected_residual_closed_forms() {
        let dp = PyParams::dirichlet(1.0).unwrap();
        assert_relative_eq!(expected_residual_mass(&dp, 3), 0.125, max_relative = 1e-14);
        let sp = PyParams::stable(0.5).unwrap();
        assert_relative_eq!(expected_residual_mass(&sp, 1), 0.5, max_relative = 1e-14);
        assert_relative_eq!(expected_residual_mass(&sp, 2), 1.0 / 3.0, max_relative = 1e-14);
        // E prod (1 - V_k) = 1/(H + 1) for D = 1/2, M = 0
        assert_eq!(truncation_level(&sp, 1e-4).unwrap(), 9999);
    }

    #[test]
    fn residual_mass_monte_carlo() {
        let sp = PyParams::stable(0.5).unwrap();
        let mut rng = seeded_rng(11, 0);
        let n = 200_000;
        let mut s = 0.0;
        let mut s2 = 0.0;
        for _ in 0..n {
            let r = draw_stick_weights(&sp, 2, &mut rng).unwrap().residual_mass;
            s += r;
            s2 += r * r;
        }
        let m = s / n as f64;
        let se = ((s2 / n as f64 - m * m) / n as f64).sqrt();
        assert!((m - 1.0 / 3.0).abs() < 4.0 * se, "{m} +- {se}");
    }

    #[test]
    fn weights_plus_residual_is_one() {
        let mut rng = seeded_rng(3, 0);
        for &(d, m) in &[(0.5, 0.0), (0.0, 2.0), (0.3, 1.5), (0.9, 0.0)] {
            let p = PyParams::new(d, m).unwrap();
            let w = draw_stick_weights(&p, 50, &mut rng).unwrap();
            let total: f64 = w.weights.iter().sum::<f64>() + w.residual_mass;
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn first_weight_mean_is_beta_mean() {
        let p = PyParams::new(0.3, 1.0).unwrap();
        let mut rng = seeded_rng(5, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| draw_stick_weights(&p, 1, &mut rng).unwrap().weights[0])
            .collect();
        let m = crate::stats::mean(&xs);
        let se = (crate::stats::variance(&xs) / n as f64).sqrt();
        let target = 0.7 / (0.7 + 1.0 + 0.3);
        assert!((m - target).abs() < 3.0 * se);
    }

    #[test]
    fn stable_laplace_transform() {
        let mut rng = seeded_rng(7, 0);
        let n = 1_000_000;
        let (mut l1, mut l2) = (0.0, 0.0);
        for _ in 0..n {
            let s = sample_positive_stable(0.5, &mut rng).unwrap();
            l1 += (-s).exp();
            l2 += (-2.0 * s).exp();
        }
        assert!((l1 / n as f64 - (-1.0f64).exp()).abs() < 0.002);
        assert!((l2 / n as f64 - (-(2.0f64).sqrt()).exp()).abs() < 0.002);
        assert!(sample_positive_stable(1.0, &mut rng).is_err());
    }

    #[test]
    fn stable_self_similarity() {
        let mut rng = seeded_rng(8, 0);
        let spec = SubordinatorSpec::new(SubordinatorKind::Stable(0.5)).unwrap();
        let n = 40_000;
        let mut at_quarter = Vec::with_capacity(n);
        let mut at_one = Vec::with_capacity(n);
        for _ in 0..n {
            let p = subordinator_path(&spec, &[0.25], &mut rng).unwrap();
            at_quarter.push(p.values[0] / 0.25f64.powi(2));
            at_one.push(sample_positive_stable(0.5, &mut rng).unwrap());
        }
        let m1 = crate::stats::quantile(&at_quarter, 0.5);
        let m2 = crate::stats::quantile(&at_one, 0.5);
        // median of S(1) is about 1.1; two-sample KS band at 1%
        assert!(crate::stats::ks_two_sample(&at_quarter, &at_one) < 1.63 * (2.0 / n as f64).sqrt());
        assert!((m1 / m2 - 1.0).abs() < 0.05);
    }

    #[test]
    fn gamma_path_mean_and_increments() {
        let mut rng = seeded_rng(9, 0);
        let spec = SubordinatorSpec::new(SubordinatorKind::Gamma(2.5)).unwrap();
        assert_eq!(subordinator_path(&spec, &[0.0], &mut rng).unwrap().values, vec![0.0]);
        let n = 100_000;
        let mut ends = Vec::with_capacity(n);
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let p = subordinator_path(&spec, &[0.0, 0.4, 1.0], &mut rng).unwrap();
            ends.push(p.values[2]);
            a.push(p.values[1]);
            b.push(p.values[2] - p.values[1]);
            assert!(p.values.windows(2).all(|w| w[0] <= w[1]));
        }
        let m = crate::stats::mean(&ends);
        let se = (crate::stats::variance(&ends) / n as f64).sqrt();
        assert!((m - 2.5).abs() < 3.0 * se);
        let (ma, mb) = (crate::stats::mean(&a), crate::stats::mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
        let corr = cov / (crate::stats::variance(&a) * crate::stats::variance(&b)).sqrt();
        assert!(corr.abs() < 0.02);
        assert!(subordinator_path(&spec, &[0.5, 0.2], &mut rng).is_err());
    }

    #[test]
    fn tail_trajectories_are_monotone_and_unbiased() {
        let mut rng = seeded_rng(10, 0);
        let ys: Vec<f64> = (0..40).map(|i| 1.0 + 10f64.powf(i as f64 / 4.0)).collect();
        let tail: Vec<f64> = ys.iter().map(|y| 1.0 / y).collect();
        let sp = sp_tail_trajectory(0.5, &tail, &mut rng).unwrap();
        let dp = dp_tail_trajectory(1.0, &tail, &mut rng).unwrap();
        for tr in [&sp, &dp] {
            assert!(tr.survival.windows(2).all(|w| w[0] >= w[1]));
        }
        let near_one = sp_tail_trajectory(0.5, &[1.0 - 1e-12], &mut rng).unwrap();
        assert!((near_one.survival[0] - 1.0).abs() < 1e-4);
        let near_one = dp_tail_trajectory(1.0, &[1.0 - 1e-12], &mut rng).unwrap();
        assert!((near_one.survival[0] - 1.0).abs() < 1e-4);
        assert!(sp_tail_trajectory(0.5, &[0.5, 0.6], &mut rng).is_err());
        assert!(sp_tail_trajectory(0.5, &[1.5], &mut rng).is_err());

        // E[1 - G(y)] = 1 - G0(y)
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| sp_tail_trajectory(0.5, &[0.1], &mut rng).unwrap().survival[0])
            .collect();
        let m = crate::stats::mean(&xs);
        let se = (crate::stats::variance(&xs) / n as f64).sqrt();
        assert!((m - 0.1).abs() < 3.0 * se, "{m} {se}");
    }
}
