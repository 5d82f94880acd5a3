use serde::{Deserialize, Serialize};

use super::{check_positive, check_prob, Univariate};
use crate::error::Result;
use crate::scalar::Real;
use crate::special::{beta_reg, inv_beta_reg, ln_beta, ln_gamma};

/// Heavy-tailed kernels with regularly varying survival.
///
/// `F` uses the density y^{a/2-1} (a + b y)^{-(a+b)/2}, i.e. (a/b)^2 times an
/// F(a, b) variate. `Gpd` is the generalized Pareto law with shape xi > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParetoTypeKernel<T> {
    Burr { c: T, a: T },
    F { a: T, b: T },
    Gpd { xi: T, scale: T },
    Pareto { a: T },
    StudentT { a: T },
}

/// A kernel family with its tail index left free; the shape-mixture atoms
/// supply the tail index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ParetoFamily<T> {
    Burr { c: T },
    F { a: T },
    Gpd { scale: T },
    Pareto,
    StudentT,
}

impl<T: Real> ParetoFamily<T> {
    /// Member of the family with tail index `alpha`.
    pub fn kernel(&self, alpha: T) -> Result<ParetoTypeKernel<T>> {
        check_positive("tail index", alpha)?;
        match *self {
            ParetoFamily::Burr { c } => ParetoTypeKernel::burr(c, alpha / c),
            ParetoFamily::F { a } => ParetoTypeKernel::f(a, alpha + alpha),
            ParetoFamily::Gpd { scale } => ParetoTypeKernel::gpd(T::one() / alpha, scale),
            ParetoFamily::Pareto => ParetoTypeKernel::pareto(alpha),
            ParetoFamily::StudentT => ParetoTypeKernel::student_t(alpha),
        }
    }

    pub fn support_lower(&self) -> T {
        match self {
            ParetoFamily::Pareto => T::one(),
            ParetoFamily::StudentT => T::neg_infinity(),
            _ => T::zero(),
        }
    }
}

impl<T: Real> ParetoTypeKernel<T> {
    pub fn burr(c: T, a: T) -> Result<Self> {
        Ok(ParetoTypeKernel::Burr {
            c: check_positive("burr c", c)?,
            a: check_positive("burr a", a)?,
        })
    }

    pub fn f(a: T, b: T) -> Result<Self> {
        Ok(ParetoTypeKernel::F {
            a: check_positive("F a", a)?,
            b: check_positive("F b", b)?,
        })
    }

    pub fn gpd(xi: T, scale: T) -> Result<Self> {
        Ok(ParetoTypeKernel::Gpd {
            xi: check_positive("gpd shape", xi)?,
            scale: check_positive("gpd scale", scale)?,
        })
    }

    pub fn pareto(a: T) -> Result<Self> {
        Ok(ParetoTypeKernel::Pareto {
            a: check_positive("pareto a", a)?,
        })
    }

    pub fn student_t(a: T) -> Result<Self> {
        Ok(ParetoTypeKernel::StudentT {
            a: check_positive("student-t a", a)?,
        })
    }

    pub fn tail_index(&self) -> T {
        match *self {
            ParetoTypeKernel::Burr { c, a } => c * a,
            ParetoTypeKernel::F { b, .. } => b / T::lit(2.0),
            ParetoTypeKernel::Gpd { xi, .. } => T::one() / xi,
            ParetoTypeKernel::Pareto { a } => a,
            ParetoTypeKernel::StudentT { a } => a,
        }
    }

    fn ln_survival_f64(&self, y: f64) -> f64 {
        match *self {
            ParetoTypeKernel::Burr { c, a } => {
                if y <= 0.0 {
                    return 0.0;
                }
                -a.as_f64() * y.powf(c.as_f64()).ln_1p()
            }
            ParetoTypeKernel::F { .. } | ParetoTypeKernel::StudentT { .. } => {
                self.survival_f64(y).ln()
            }
            ParetoTypeKernel::Gpd { xi, scale } => {
                if y <= 0.0 {
                    return 0.0;
                }
                let xi = xi.as_f64();
                -(xi * y / scale.as_f64()).ln_1p() / xi
            }
            ParetoTypeKernel::Pareto { a } => {
                if y <= 1.0 {
                    return 0.0;
                }
                -a.as_f64() * y.ln()
            }
        }
    }

    fn survival_f64(&self, y: f64) -> f64 {
        match *self {
            ParetoTypeKernel::F { a, b } => {
                if y <= 0.0 {
                    return 1.0;
                }
                let (a, b) = (a.as_f64(), b.as_f64());
                let w = b / a * y;
                beta_reg(b / 2.0, a / 2.0, 1.0 / (1.0 + w))
            }
            ParetoTypeKernel::StudentT { a } => {
                let a = a.as_f64();
                let upper = 0.5 * beta_reg(a / 2.0, 0.5, a / (a + y * y));
                if y >= 0.0 {
                    upper
                } else {
                    1.0 - upper
                }
            }
            _ => self.ln_survival_f64(y).exp(),
        }
    }
}

impl<T: Real> Univariate<T> for ParetoTypeKernel<T> {
    fn ln_pdf(&self, y: T) -> T {
        let y = y.as_f64();
        let v = match *self {
            ParetoTypeKernel::Burr { c, a } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let (c, a) = (c.as_f64(), a.as_f64());
                    c.ln() + a.ln() + (c - 1.0) * y.ln() - (a + 1.0) * y.powf(c).ln_1p()
                }
            }
            ParetoTypeKernel::F { a, b } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let (a, b) = (a.as_f64(), b.as_f64());
                    (a / 2.0 - 1.0) * y.ln() - (a + b) / 2.0 * (a + b * y).ln()
                        + a / 2.0 * b.ln()
                        + b / 2.0 * a.ln()
                        - ln_beta(a / 2.0, b / 2.0)
                }
            }
            ParetoTypeKernel::Gpd { xi, scale } => {
                if y < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    let (xi, s) = (xi.as_f64(), scale.as_f64());
                    -s.ln() - (1.0 / xi + 1.0) * (xi * y / s).ln_1p()
                }
            }
            ParetoTypeKernel::Pareto { a } => {
                if y <= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    let a = a.as_f64();
                    a.ln() - (a + 1.0) * y.ln()
                }
            }
            ParetoTypeKernel::StudentT { a } => {
                let a = a.as_f64();
                ln_gamma((a + 1.0) / 2.0)
                    - ln_gamma(a / 2.0)
                    - 0.5 * (a * std::f64::consts::PI).ln()
                    - (a + 1.0) / 2.0 * (y * y / a).ln_1p()
            }
        };
        T::lit(v)
    }

    fn cdf(&self, y: T) -> T {
        T::one() - self.survival(y)
    }

    fn survival(&self, y: T) -> T {
        T::lit(self.survival_f64(y.as_f64()))
    }

    fn ln_survival(&self, y: T) -> T {
        T::lit(self.ln_survival_f64(y.as_f64()))
    }

    fn quantile(&self, p: T) -> Result<T> {
        let p = check_prob(p)?;
        // -log(1 - p)
        let e = -(-p).ln_1p();
        let v = match *self {
            ParetoTypeKernel::Burr { c, a } => (e / a.as_f64()).exp_m1().powf(1.0 / c.as_f64()),
            ParetoTypeKernel::F { a, b } => {
                let (a, b) = (a.as_f64(), b.as_f64());
                let z = inv_beta_reg(a / 2.0, b / 2.0, p);
                a / b * z / (1.0 - z)
            }
            ParetoTypeKernel::Gpd { xi, scale } => {
                let xi = xi.as_f64();
                scale.as_f64() / xi * (xi * e).exp_m1()
            }
            ParetoTypeKernel::Pareto { a } => (e / a.as_f64()).exp(),
            ParetoTypeKernel::StudentT { a } => {
                let a = a.as_f64();
                let q = 2.0 * p.min(1.0 - p);
                let x = inv_beta_reg(a / 2.0, 0.5, q);
                let t = (a * (1.0 - x) / x).sqrt();
                if p >= 0.5 {
                    t
                } else {
                    -t
                }
            }
        };
        Ok(T::lit(v))
    }

    fn support(&self) -> (T, T) {
        match self {
            ParetoTypeKernel::Pareto { .. } => (T::one(), T::infinity()),
            ParetoTypeKernel::StudentT { .. } => (T::neg_infinity(), T::infinity()),
            _ => (T::zero(), T::infinity()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dists::testing::*;
    use approx::assert_relative_eq;

    fn all() -> Vec<ParetoTypeKernel<f64>> {
        vec![
            ParetoTypeKernel::burr(2.0, 1.5).unwrap(),
            ParetoTypeKernel::f(4.0, 6.0).unwrap(),
            ParetoTypeKernel::gpd(0.5, 2.0).unwrap(),
            ParetoTypeKernel::pareto(1.5).unwrap(),
            ParetoTypeKernel::student_t(3.0).unwrap(),
        ]
    }

    #[test]
    fn point_values_and_tail_indices() {
        assert_relative_eq!(ParetoTypeKernel::pareto(1.0).unwrap().survival(2.0), 0.5);
        assert_relative_eq!(ParetoTypeKernel::burr(1.0, 1.0).unwrap().survival(1.0), 0.5);
        assert_relative_eq!(ParetoTypeKernel::student_t(1.0).unwrap().survival(0.0), 0.5);
        // Cauchy: P(T > 1) = 1/4
        assert_relative_eq!(ParetoTypeKernel::student_t(1.0).unwrap().survival(1.0), 0.25, max_relative = 1e-12);
        assert_eq!(ParetoTypeKernel::burr(2.0, 3.0).unwrap().tail_index(), 6.0);
        assert_eq!(ParetoTypeKernel::f(4.0, 6.0).unwrap().tail_index(), 3.0);
        assert_eq!(ParetoTypeKernel::pareto(1.5).unwrap().tail_index(), 1.5);
        assert_eq!(ParetoTypeKernel::gpd(0.25, 1.0).unwrap().tail_index(), 4.0);
        assert_eq!(ParetoTypeKernel::student_t(2.5).unwrap().tail_index(), 2.5);
        assert!(ParetoTypeKernel::pareto(0.0).is_err());
    }

    #[test]
    fn family_builds_kernel_with_requested_index() {
        let fams = [
            ParetoFamily::Burr { c: 2.0 },
            ParetoFamily::F { a: 4.0 },
            ParetoFamily::Gpd { scale: 1.0 },
            ParetoFamily::Pareto,
            ParetoFamily::StudentT,
        ];
        for f in fams {
            assert_relative_eq!(f.kernel(2.7).unwrap().tail_index(), 2.7, max_relative = 1e-14);
        }
    }

    #[test]
    fn survival_is_regularly_varying_with_stated_index() {
        for k in all() {
            let alpha = k.tail_index();
            let y = 1e6;
            let ratio = k.ln_survival(2.0 * y) - k.ln_survival(y);
            assert!((ratio / -(2f64.ln()) - alpha).abs() < 1e-3 * alpha.max(1.0), "{k:?}");
        }
    }

    #[test]
    fn normalization_inversion_sampling() {
        let n = 100_000;
        for (i, k) in all().iter().enumerate() {
            assert!((total_mass(k) - 1.0).abs() < 1e-6, "{k:?} {}", total_mass(k));
            assert!(max_inversion_error(k) < 1e-10, "{k:?}");
            assert!(ks_vs_sampler(k, n, 400 + i as u64) < 1.63 / (n as f64).sqrt(), "{k:?}");
        }
    }
}
