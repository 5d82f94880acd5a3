use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_positive, check_prob, Univariate};
use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::{gamma_p_large, gamma_quantile, gamma_variate, ln_gamma, ln_gamma_q_large};

/// Largest supported shape; integers up to here are exact in f64.
pub const MAX_SHAPE: u64 = 1 << 52;

/// Gamma law with integer shape `a` and scale `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangKernel<T> {
    shape: u64,
    scale: T,
}

impl<T: Real> ErlangKernel<T> {
    pub fn new(shape: u64, scale: T) -> Result<Self> {
        if shape == 0 {
            return Err(domain("Erlang shape must be at least 1"));
        }
        check_positive("Erlang scale", scale)?;
        Ok(ErlangKernel { shape, scale })
    }

    /// Kernel with shape ceil(sigma) and scale sigma / lambda.
    pub fn from_sigma(sigma: T, lambda: T) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("lambda", lambda)?;
        let shape = sigma.as_f64().ceil().max(1.0);
        if shape > MAX_SHAPE as f64 {
            return Err(domain(format!("sigma = {sigma} too large")));
        }
        Self::new(shape as u64, sigma / lambda)
    }

    pub fn shape(&self) -> u64 {
        self.shape
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn mean(&self) -> T {
        T::lit(self.shape as f64) * self.scale
    }
}

impl<T: Real> Univariate<T> for ErlangKernel<T> {
    fn ln_pdf(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 0.0 {
            return T::neg_infinity();
        }
        let a = self.shape as f64;
        let b = self.scale.as_f64();
        T::lit((a - 1.0) * y.ln() - y / b - a * b.ln() - ln_gamma(a))
    }

    fn cdf(&self, y: T) -> T {
        T::lit(gamma_p_large(self.shape, y.as_f64() / self.scale.as_f64()))
    }

    fn survival(&self, y: T) -> T {
        self.ln_survival(y).exp()
    }

    fn ln_survival(&self, y: T) -> T {
        T::lit(ln_gamma_q_large(self.shape, y.as_f64() / self.scale.as_f64()))
    }

    fn quantile(&self, p: T) -> Result<T> {
        let p = check_prob(p)?;
        Ok(T::lit(gamma_quantile(p, self.shape as f64, 1.0 / self.scale.as_f64())))
    }

    fn support(&self) -> (T, T) {
        (T::zero(), T::infinity())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::lit(gamma_variate(self.shape as f64, 1.0 / self.scale.as_f64(), rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::testing::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_values() {
        let e1 = ErlangKernel::new(1, 1.0).unwrap();
        assert_relative_eq!(e1.pdf(1.0), (-1.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(e1.cdf(1.0), 1.0 - (-1.0f64).exp(), max_relative = 1e-14);
        let e2 = ErlangKernel::new(2, 1.0).unwrap();
        assert_relative_eq!(e2.pdf(2.0), 2.0 * (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(e1.pdf(-1.0), 0.0);
        assert!(ErlangKernel::new(1, 0.0).is_err());
        assert!(ErlangKernel::<f64>::new(0, 1.0).is_err());
        let huge = ErlangKernel::from_sigma(3e12f64, 1.0).unwrap();
        let mid = huge.mean();
        assert!((huge.cdf(mid) - 0.5).abs() < 1e-3);
        assert!(huge.ln_survival(mid * 1.01).is_finite());
        let k = ErlangKernel::from_sigma(2.3, 0.5).unwrap();
        assert_eq!(k.shape(), 3);
        assert_relative_eq!(k.scale(), 4.6);
        let k32 = ErlangKernel::<f32>::new(2, 1.0).unwrap();
        assert!((k32.pdf(2.0) - 0.270_670_6).abs() < 1e-6);
    }

    #[test]
    fn normalization_inversion_sampling() {
        let n = 100_000;
        let band = 1.63 / (n as f64).sqrt();
        for (i, &(a, b)) in [(1, 1.0), (3, 0.5), (12, 2.0), (40, 0.1)].iter().enumerate() {
            let k = ErlangKernel::new(a, b).unwrap();
            assert!((total_mass(&k) - 1.0).abs() < 1e-6);
            assert!(max_inversion_error(&k) < 1e-10);
            assert!(ks_vs_sampler(&k, n, 100 + i as u64) < band);
        }
    }
}
