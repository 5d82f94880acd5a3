//! Parametric building blocks. Every type is generic over the scalar; the
//! arithmetic runs in f64 and is converted at the boundary.

mod erlang;
mod gumbel;
mod loggamma;
mod pareto2;
mod pareto_type;

pub use erlang::ErlangKernel;
pub use gumbel::{copula_centering_sample, GumbelCopula};
pub use loggamma::{LogGamma, LogGammaMixture};
pub use pareto2::ParetoII;
pub use pareto_type::{ParetoFamily, ParetoTypeKernel};

use rand::Rng;

use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::open_unit;

/// A continuous univariate law.
pub trait Univariate<T: Real> {
    fn ln_pdf(&self, y: T) -> T;

    fn pdf(&self, y: T) -> T {
        self.ln_pdf(y).exp()
    }

    fn cdf(&self, y: T) -> T;

    fn survival(&self, y: T) -> T {
        T::one() - self.cdf(y)
    }

    fn ln_survival(&self, y: T) -> T {
        self.survival(y).ln()
    }

    fn quantile(&self, p: T) -> Result<T>;

    /// Open support interval.
    fn support(&self) -> (T, T);

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.quantile(T::lit(open_unit(rng)))
            .expect("probability inside (0, 1)")
    }
}

pub(crate) fn check_prob<T: Real>(p: T) -> Result<f64> {
    let p = p.as_f64();
    if p > 0.0 && p < 1.0 {
        Ok(p)
    } else {
        Err(domain(format!("probability {p} not in (0, 1)")))
    }
}

pub(crate) fn check_positive<T: Real>(name: &str, v: T) -> Result<T> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(domain(format!("{name} = {v} must be positive and finite")))
    }
}
