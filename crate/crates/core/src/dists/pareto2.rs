use serde::{Deserialize, Serialize};

use super::{check_positive, check_prob, Univariate};
use crate::error::Result;
use crate::scalar::Real;

/// Pareto type II (Lomax) law with survival (1 + x / beta)^{-alpha0}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoII<T> {
    alpha0: T,
    beta: T,
}

impl<T: Real> ParetoII<T> {
    pub fn new(alpha0: T, beta: T) -> Result<Self> {
        check_positive("alpha0", alpha0)?;
        check_positive("beta", beta)?;
        Ok(ParetoII { alpha0, beta })
    }

    pub fn alpha0(&self) -> T {
        self.alpha0
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    /// -log F(x): the Gumbel-copula coordinate of x, exact when F is near 1.
    pub fn neg_ln_cdf(&self, x: T) -> T {
        let s = self.survival(x).as_f64();
        T::lit(-(-s).ln_1p())
    }
}

impl<T: Real> Univariate<T> for ParetoII<T> {
    fn ln_pdf(&self, x: T) -> T {
        let (a, b, x) = (self.alpha0.as_f64(), self.beta.as_f64(), x.as_f64());
        if x < 0.0 {
            return T::neg_infinity();
        }
        T::lit((a / b).ln() - (a + 1.0) * (x / b).ln_1p())
    }

    fn cdf(&self, x: T) -> T {
        T::lit(-self.ln_survival(x).as_f64().exp_m1())
    }

    fn survival(&self, x: T) -> T {
        self.ln_survival(x).exp()
    }

    fn ln_survival(&self, x: T) -> T {
        let (a, b, x) = (self.alpha0.as_f64(), self.beta.as_f64(), x.as_f64());
        if x <= 0.0 {
            return T::zero();
        }
        T::lit(-a * (x / b).ln_1p())
    }

    fn quantile(&self, p: T) -> Result<T> {
        let p = check_prob(p)?;
        let (a, b) = (self.alpha0.as_f64(), self.beta.as_f64());
        Ok(T::lit(b * (-(-p).ln_1p() / a).exp_m1()))
    }

    fn support(&self) -> (T, T) {
        (T::zero(), T::infinity())
    }
}
