//! Tail envelopes for Dirichlet and stable-law process tails, and the Hill
//! estimator of the tail index.
//!
//! Envelope functions come in two forms: the value itself and its natural
//! log (`ln_` prefix). The log form is what the curves are emitted in and
//! stays finite far into the tail.

use serde::{Deserialize, Serialize};

use crate::error::{domain, input, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams<T> {
    pub discount: T,
    pub precision: T,
    pub s: T,
    pub r: T,
}

impl<T: Real> EnvelopeParams<T> {
    pub fn new(discount: T, precision: T, s: T, r: T) -> Result<Self> {
        check_discount(discount)?;
        if !(precision > T::zero()) {
            return Err(domain(format!("precision {precision} must be positive")));
        }
        check_s(s)?;
        check_r(r)?;
        Ok(EnvelopeParams {
            discount,
            precision,
            s,
            r,
        })
    }
}

fn check_discount<T: Real>(d: T) -> Result<()> {
    if d > T::zero() && d < T::one() {
        Ok(())
    } else {
        Err(domain(format!("discount {d} not in (0, 1)")))
    }
}

fn check_s<T: Real>(s: T) -> Result<()> {
    if s < T::one() {
        Ok(())
    } else {
        Err(domain(format!("s = {s} must be below 1")))
    }
}

fn check_r<T: Real>(r: T) -> Result<()> {
    if r > T::one() {
        Ok(())
    } else {
        Err(domain(format!("r = {r} must exceed 1")))
    }
}

fn check_unit<T: Real>(t: T) -> Result<()> {
    if t > T::zero() && t < T::one() {
        Ok(())
    } else {
        Err(domain(format!("t = {t} not in (0, 1)")))
    }
}

/// log g_s(t) = -s log|log t| / t.
pub fn ln_envelope_g_s<T: Real>(t: T, s: T) -> Result<T> {
    check_unit(t)?;
    check_s(s)?;
    if s == T::zero() {
        return Ok(T::zero());
    }
    Ok(-s * t.ln().abs().ln() / t)
}

pub fn envelope_g_s<T: Real>(t: T, s: T) -> Result<T> {
    ln_envelope_g_s(t, s).map(T::exp)
}

/// log h_r(t) = -1 / (t |log t|^r).
pub fn ln_envelope_h_r<T: Real>(t: T, r: T) -> Result<T> {
    check_unit(t)?;
    check_r(r)?;
    Ok(-T::one() / (t * t.ln().abs().powf(r)))
}

pub fn envelope_h_r<T: Real>(t: T, r: T) -> Result<T> {
    ln_envelope_h_r(t, r).map(T::exp)
}

/// log l(t) = log(t)/D + (1 - 1/D) log log|log t|, for t < 1/e.
pub fn ln_envelope_l<T: Real>(t: T, discount: T) -> Result<T> {
    check_discount(discount)?;
    let edge = (-T::one()).exp();
    if !(t > T::zero() && t < edge) {
        return Err(domain(format!("t = {t} not in (0, 1/e)")));
    }
    let inv = T::one() / discount;
    Ok(t.ln() * inv + (T::one() - inv) * t.ln().abs().ln().ln())
}

pub fn envelope_l<T: Real>(t: T, discount: T) -> Result<T> {
    ln_envelope_l(t, discount).map(T::exp)
}

/// log u_r(t) = log(t)/D + (r/D) log|log t|, for t < e^{-r}.
pub fn ln_envelope_u_r<T: Real>(t: T, discount: T, r: T) -> Result<T> {
    check_discount(discount)?;
    check_r(r)?;
    let edge = (-r).exp();
    if !(t > T::zero() && t < edge) {
        return Err(domain(format!("t = {t} not in (0, e^-r)")));
    }
    Ok((t.ln() + r * t.ln().abs().ln()) / discount)
}

pub fn envelope_u_r<T: Real>(t: T, discount: T, r: T) -> Result<T> {
    ln_envelope_u_r(t, discount, r).map(T::exp)
}

/// D (1 - D)^{(1 - D)/D}, the almost-sure lim inf of S(t)/l(t).
pub fn liminf_constant<T: Real>(discount: T) -> Result<T> {
    check_discount(discount)?;
    let one = T::one();
    Ok(discount * (one - discount).powf((one - discount) / discount))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopePair<T> {
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

impl<T: Real> EnvelopePair<T> {
    fn exp(self) -> Self {
        EnvelopePair {
            lower: self.lower.into_iter().map(T::exp).collect(),
            upper: self.upper.into_iter().map(T::exp).collect(),
        }
    }
}

fn pointwise<T: Real, F: Fn(T) -> Result<T>>(xs: &[T], f: F) -> Result<Vec<T>> {
    xs.iter()
        .enumerate()
        .map(|(i, &x)| f(x).map_err(|e| e.at(i)))
        .collect()
}

/// Stable-law process envelopes (log scale) at tail values t = 1 - G0(y).
pub fn sp_log_envelopes<T: Real>(g0_tail: &[T], discount: T, r: T) -> Result<EnvelopePair<T>> {
    Ok(EnvelopePair {
        lower: pointwise(g0_tail, |t| ln_envelope_l(t, discount))?,
        upper: pointwise(g0_tail, |t| ln_envelope_u_r(t, discount, r))?,
    })
}

pub fn sp_envelopes<T: Real>(g0_tail: &[T], discount: T, r: T) -> Result<EnvelopePair<T>> {
    sp_log_envelopes(g0_tail, discount, r).map(EnvelopePair::exp)
}

/// Dirichlet process envelopes (log scale): g_s and h_r at M (1 - G0(y)).
pub fn dp_log_envelopes<T: Real>(
    g0_tail: &[T],
    precision: T,
    s: T,
    r: T,
) -> Result<EnvelopePair<T>> {
    Ok(EnvelopePair {
        lower: pointwise(g0_tail, |t| ln_envelope_g_s(precision * t, s))?,
        upper: pointwise(g0_tail, |t| ln_envelope_h_r(precision * t, r))?,
    })
}

pub fn dp_envelopes<T: Real>(g0_tail: &[T], precision: T, s: T, r: T) -> Result<EnvelopePair<T>> {
    dp_log_envelopes(g0_tail, precision, s, r).map(EnvelopePair::exp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailIndexEstimate<T> {
    pub estimate: T,
    pub k: usize,
    pub n: usize,
}

/// Hill estimator from the k largest order statistics.
pub fn hill_estimate<T: Real>(samples: &[T], k: usize) -> Result<TailIndexEstimate<T>> {
    let n = samples.len();
    if k == 0 || k >= n {
        return Err(input(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    if let Some(i) = samples.iter().position(|&x| !(x > T::zero())) {
        return Err(input("samples must be positive").at(i));
    }
    let mut v = samples.to_vec();
    // k + 1 largest values, descending
    v.select_nth_unstable_by(k, |a, b| b.partial_cmp(a).expect("finite samples"));
    let threshold = v[k].as_f64().ln();
    let sum: f64 = v[..k].iter().map(|x| x.as_f64().ln() - threshold).sum();
    Ok(TailIndexEstimate {
        estimate: T::lit(k as f64 / sum),
        k,
        n,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn hill_is_scale_invariant(xs in prop::collection::vec(1.0f64..1e6, 20..200), c in 1e-3f64..1e3) {
            let k = xs.len() / 4;
            let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
            let (a, b) = (hill_estimate(&xs, k), hill_estimate(&scaled, k));
            match (a, b) {
                (Ok(a), Ok(b)) if a.estimate.is_finite() => {
                    prop_assert!((a.estimate / b.estimate - 1.0).abs() < 1e-6)
                }
                _ => {}
            }
        }

        #[test]
        fn upper_envelope_grows_with_r(d in 0.05f64..0.95, r in 1.01f64..4.0, lt in -600.0f64..-5.0) {
            let t = lt.exp();
            prop_assume!(t < (-(r + 0.5)).exp());
            prop_assert!(ln_envelope_u_r(t, d, r + 0.5).unwrap() > ln_envelope_u_r(t, d, r).unwrap());
            prop_assert!(ln_envelope_u_r(t, d, r).unwrap() > ln_envelope_l(t, d).unwrap());
        }
    }
}
