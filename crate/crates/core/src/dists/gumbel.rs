use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ParetoII, Univariate};
use crate::error::{domain, input, Result};
use crate::measures::ln_positive_stable;
use crate::scalar::Real;
use crate::special::open_unit;

/// Gumbel copula exp[-{(-log u)^theta + (-log v)^theta}^{1/theta}].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelCopula<T> {
    theta: T,
}

impl<T: Real> GumbelCopula<T> {
    pub fn new(theta: T) -> Result<Self> {
        if theta >= T::one() && theta.is_finite() {
            Ok(GumbelCopula { theta })
        } else {
            Err(domain(format!("Gumbel theta = {theta} must be >= 1")))
        }
    }

    pub fn independence() -> Self {
        GumbelCopula { theta: T::one() }
    }

    /// Copula from Kendall's tau, theta = 1 / (1 - tau), floored at independence.
    pub fn from_kendall_tau(tau: T) -> Self {
        let tau = tau.as_f64().clamp(0.0, 0.999);
        GumbelCopula {
            theta: T::lit(1.0 / (1.0 - tau)),
        }
    }

    pub fn theta(&self) -> T {
        self.theta
    }

    pub fn is_independence(&self) -> bool {
        self.theta == T::one()
    }

    pub fn kendall_tau(&self) -> T {
        T::one() - T::one() / self.theta
    }

    pub fn cdf(&self, u: T, v: T) -> T {
        let th = self.theta.as_f64();
        let (x, y) = (-u.as_f64().ln(), -v.as_f64().ln());
        T::lit((-(x.powf(th) + y.powf(th)).powf(1.0 / th)).exp())
    }

    /// log copula density in the coordinates x = -log u, y = -log v.
    pub fn ln_pdf_neg_log(&self, x: f64, y: f64) -> f64 {
        let th = self.theta.as_f64();
        if th == 1.0 {
            return 0.0;
        }
        let (lx, ly) = (x.ln(), y.ln());
        // A = x^theta + y^theta, evaluated in logs
        let la = crate::special::log_add_exp(th * lx, th * ly);
        let a_root = (la / th).exp();
        -a_root + x + y + (th - 1.0) * (lx + ly) + (1.0 / th - 2.0) * la + (a_root + th - 1.0).ln()
    }

    pub fn ln_pdf(&self, u: T, v: T) -> T {
        T::lit(self.ln_pdf_neg_log(-u.as_f64().ln(), -v.as_f64().ln()))
    }

    pub fn pdf(&self, u: T, v: T) -> T {
        self.ln_pdf(u, v).exp()
    }

    /// Marshall-Olkin draw: positive stable frailty with index 1/theta.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (T, T) {
        let th = self.theta.as_f64();
        if th == 1.0 {
            return (T::lit(open_unit(rng)), T::lit(open_unit(rng)));
        }
        let lv = ln_positive_stable(1.0 / th, rng);
        let mut coord = || {
            let le = (-open_unit(rng).ln()).ln();
            T::lit((-((le - lv) / th).exp()).exp())
        };
        let u = coord();
        let v = coord();
        (u, v)
    }
}

/// Draw an atom from ParetoII margins joined by the copula. More than two
/// margins are supported only under independence.
pub fn copula_centering_sample<T: Real, R: Rng + ?Sized>(
    copula: &GumbelCopula<T>,
    margins: &[ParetoII<T>],
    rng: &mut R,
) -> Result<Vec<T>> {
    if margins.is_empty() {
        return Err(input("no margins"));
    }
    if margins.len() == 2 && !copula.is_independence() {
        let (u, v) = copula.sample(rng);
        return Ok(vec![margins[0].quantile(u)?, margins[1].quantile(v)?]);
    }
    if margins.len() != 2 && !copula.is_independence() {
        return Err(domain("dependent copula centering needs exactly two margins"));
    }
    Ok(margins.iter().map(|m| m.sample(rng)).collect())
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn cdf_between_independence_and_comonotone(th in 1.0f64..10.0, u in 0.001f64..0.999, v in 0.001f64..0.999) {
            let c = GumbelCopula::new(th).unwrap().cdf(u, v);
            prop_assert!(c >= u * v - 1e-12);
            prop_assert!(c <= u.min(v) + 1e-12);
        }
    }
}
