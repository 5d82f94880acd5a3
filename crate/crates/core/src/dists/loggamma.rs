use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_positive, check_prob, Univariate};
use crate::error::{domain, Result};
use crate::scalar::Real;
use crate::special::{gamma_p, gamma_q, gamma_quantile, gamma_variate, ln_gamma, solve_increasing};

/// Law of exp(G) with G ~ Gamma(shape, rate); support (1, inf).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGamma<T> {
    shape: T,
    rate: T,
}

impl<T: Real> LogGamma<T> {
    pub fn new(shape: T, rate: T) -> Result<Self> {
        check_positive("log-gamma shape", shape)?;
        check_positive("log-gamma rate", rate)?;
        Ok(LogGamma { shape, rate })
    }

    pub fn shape(&self) -> T {
        self.shape
    }

    pub fn rate(&self) -> T {
        self.rate
    }
}

impl<T: Real> Univariate<T> for LogGamma<T> {
    fn ln_pdf(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 1.0 {
            return T::neg_infinity();
        }
        let (a, b) = (self.shape.as_f64(), self.rate.as_f64());
        let ly = y.ln();
        T::lit(a * b.ln() + (a - 1.0) * ly.ln() - (b + 1.0) * ly - ln_gamma(a))
    }

    fn cdf(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 1.0 {
            return T::zero();
        }
        T::lit(gamma_p(self.shape.as_f64(), self.rate.as_f64() * y.ln()))
    }

    fn survival(&self, y: T) -> T {
        let y = y.as_f64();
        if y <= 1.0 {
            return T::one();
        }
        T::lit(gamma_q(self.shape.as_f64(), self.rate.as_f64() * y.ln()))
    }

    fn quantile(&self, p: T) -> Result<T> {
        let p = check_prob(p)?;
        Ok(T::lit(gamma_quantile(p, self.shape.as_f64(), self.rate.as_f64()).exp()))
    }

    fn support(&self) -> (T, T) {
        (T::one(), T::infinity())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        T::lit(gamma_variate(self.shape.as_f64(), self.rate.as_f64(), rng).exp())
    }
}

/// Two-component log-gamma mixture w LG(a1, b1) + (1 - w) LG(a2, b2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGammaMixture<T> {
    weight: T,
    first: LogGamma<T>,
    second: LogGamma<T>,
}

impl<T: Real> LogGammaMixture<T> {
    pub fn new(weight: T, first: LogGamma<T>, second: LogGamma<T>) -> Result<Self> {
        if !(weight >= T::zero() && weight <= T::one()) {
            return Err(domain(format!("mixture weight {weight} not in [0, 1]")));
        }
        Ok(LogGammaMixture {
            weight,
            first,
            second,
        })
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn components(&self) -> (&LogGamma<T>, &LogGamma<T>) {
        (&self.first, &self.second)
    }
}

impl<T: Real> Univariate<T> for LogGammaMixture<T> {
    fn ln_pdf(&self, y: T) -> T {
        self.pdf(y).ln()
    }

    fn pdf(&self, y: T) -> T {
        let w = self.weight;
        if w == T::one() {
            return self.first.pdf(y);
        }
        w * self.first.pdf(y) + (T::one() - w) * self.second.pdf(y)
    }

    fn cdf(&self, y: T) -> T {
        let w = self.weight;
        if w == T::one() {
            return self.first.cdf(y);
        }
        w * self.first.cdf(y) + (T::one() - w) * self.second.cdf(y)
    }

    fn survival(&self, y: T) -> T {
        let w = self.weight;
        if w == T::one() {
            return self.first.survival(y);
        }
        w * self.first.survival(y) + (T::one() - w) * self.second.survival(y)
    }

    fn quantile(&self, p: T) -> Result<T> {
        if self.weight == T::one() {
            return self.first.quantile(p);
        }
        let p = check_prob(p)?;
        // solve in z = log log y, which maps (1, inf) onto the real line
        let z = solve_increasing(
            |z| {
                let y = z.exp().exp();
                let f = self.cdf(T::lit(y)).as_f64();
                let dens = self.pdf(T::lit(y)).as_f64() * y * z.exp();
                (f, dens)
            },
            p,
            -3.0,
            2.0,
        );
        Ok(T::lit(z.exp().exp()))
    }

    fn support(&self) -> (T, T) {
        (T::one(), T::infinity())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let u: f64 = rng.random();
        if u < self.weight.as_f64() {
            self.first.sample(rng)
        } else {
            self.second.sample(rng)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::testing::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_values() {
        let unit = LogGamma::new(1.0, 1.0).unwrap();
        for &y in &[1.5, 2.0, 10.0, 1e6] {
            assert_relative_eq!(unit.survival(y), 1.0 / y, max_relative = 1e-12);
        }
        let e = std::f64::consts::E;
        assert_relative_eq!(unit.pdf(e), (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(unit.pdf(0.5), 0.0);
        let mut rng = crate::seeded_rng(4, 0);
        let lg = LogGamma::new(5.0f64, 5.0).unwrap();
        let m: f64 = (0..100_000).map(|_| lg.sample(&mut rng).ln()).sum::<f64>() / 1e5;
        assert!((m - 1.0).abs() < 0.02);
    }

    #[test]
    fn normalization_inversion_sampling() {
        let n = 100_000;
        let band = 1.63 / (n as f64).sqrt();
        let lg = LogGamma::new(13.0, 7.0).unwrap();
        assert!((total_mass(&lg) - 1.0).abs() < 1e-6);
        assert!(max_inversion_error(&lg) < 1e-10);
        assert!(ks_vs_sampler(&lg, n, 300) < band);
        let mix = LogGammaMixture::new(
            0.4,
            LogGamma::new(13.0, 7.0).unwrap(),
            LogGamma::new(10.0, 8.0).unwrap(),
        )
        .unwrap();
        assert!((total_mass(&mix) - 1.0).abs() < 1e-6);
        assert!(max_inversion_error(&mix) < 1e-10);
        assert!(ks_vs_sampler(&mix, n, 301) < band);
    }
}
