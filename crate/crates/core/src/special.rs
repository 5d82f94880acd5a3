//! Special functions and small numerical helpers shared across modules.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};
pub use statrs::function::gamma::ln_gamma;

/// Clamp applied to linear predictors before the logistic map.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(a, x)
    }
}

/// log Q(a, x) for integer shape, accurate far into the upper tail.
pub fn ln_gamma_q_int(a: u32, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let af = a as f64;
    if x < af {
        return (-gamma_p(af, x)).ln_1p();
    }
    if a <= 256 {
        // Q(a, x) = e^{-x} sum_{k<a} x^k / k!
        let lx = x.ln();
        let mut acc = f64::NEG_INFINITY;
        let mut term = 0.0; // log x^k / k!
        for k in 0..a {
            if k > 0 {
                term += lx - (k as f64).ln();
            }
            acc = log_add_exp(acc, term);
        }
        return acc - x;
    }
    let q = gamma_q(af, x);
    if q > 1e-280 {
        return q.ln();
    }
    // asymptotic expansion of Gamma(a, x) for x well above a
    let mut sum: f64 = 1.0;
    let mut term: f64 = 1.0;
    for j in 1..60 {
        term *= (af - j as f64) / x;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        sum += term;
    }
    (af - 1.0) * x.ln() - x - ln_gamma(af) + sum.ln()
}

/// Shapes above this use the Wilson-Hilferty normal approximation.
const WILSON_HILFERTY_SHAPE: u64 = 100_000;

fn wilson_hilferty_z(a: f64, x: f64) -> f64 {
    let c = 1.0 / (9.0 * a);
    ((x / a).cbrt() - (1.0 - c)) / c.sqrt()
}

/// log of the standard normal upper tail, finite for large arguments.
pub fn ln_norm_sf(z: f64) -> f64 {
    if z < 25.0 {
        (0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        let z2 = z * z;
        -0.5 * z2 - (z * (2.0 * std::f64::consts::PI).sqrt()).ln() + (-1.0 / z2 + 3.0 / (z2 * z2)).ln_1p()
    }
}

/// P(a, x) for integer shapes of any size.
pub fn gamma_p_large(a: u64, x: f64) -> f64 {
    if a > WILSON_HILFERTY_SHAPE {
        if x <= 0.0 {
            return 0.0;
        }
        norm_cdf(wilson_hilferty_z(a as f64, x))
    } else {
        gamma_p(a as f64, x)
    }
}

/// log Q(a, x) for integer shapes of any size.
pub fn ln_gamma_q_large(a: u64, x: f64) -> f64 {
    if a > WILSON_HILFERTY_SHAPE {
        if x <= 0.0 {
            return 0.0;
        }
        ln_norm_sf(wilson_hilferty_z(a as f64, x))
    } else {
        ln_gamma_q_int(a as u32, x)
    }
}

pub fn logistic(x: f64) -> f64 {
    let x = x.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log(1 - e^{x}) for x <= 0.
pub fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn norm_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

pub fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// log of a Gamma(shape, 1) variate; stable for very small shapes.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let g = Gamma::new(shape + 1.0, 1.0).expect("valid gamma shape");
        let x: f64 = g.sample(rng);
        x.ln() + open_unit(rng).ln() / shape
    } else {
        let g = Gamma::new(shape, 1.0).expect("valid gamma shape");
        let x: f64 = g.sample(rng);
        x.ln()
    }
}

/// Gamma(shape, rate) variate.
pub fn gamma_variate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    (ln_gamma_variate(shape, rng) - rate.ln()).exp()
}

/// Beta(a, b) variate kept strictly inside (0, 1).
pub fn beta_variate<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let la = ln_gamma_variate(a, rng);
    let lb = ln_gamma_variate(b, rng);
    let lv = la - log_add_exp(la, lb);
    clamp_unit(lv.exp())
}

pub fn clamp_unit(v: f64) -> f64 {
    v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

pub fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_beta(a, b)
}

pub fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
}

/// Beta quantile with guards for extreme shapes.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let v = inv_beta_reg(a, b, p);
    if v.is_finite() {
        clamp_unit(v)
    } else {
        clamp_unit(a / (a + b))
    }
}

/// Solve F(x) = p for an increasing F given F and its derivative, starting
/// from the bracket [lo, hi] (expanded outward until it brackets the root).
pub fn solve_increasing<F>(f: F, p: f64, mut lo: f64, mut hi: f64) -> f64
where
    F: Fn(f64) -> (f64, f64),
{
    let mut expand = 0;
    while f(lo).0 > p && expand < 200 {
        let w = hi - lo;
        hi = lo;
        lo -= 2.0 * w.max(1.0);
        expand += 1;
    }
    expand = 0;
    while f(hi).0 < p && expand < 200 {
        let w = hi - lo;
        lo = hi;
        hi += 2.0 * w.max(1.0);
        expand += 1;
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        let g = fx - p;
        if g == 0.0 {
            return x;
        }
        if g < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - g / dfx;
        let next = if dfx > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * x.abs() {
            return next;
        }
        x = next;
    }
    x
}

/// Gamma(shape, rate) quantile.
pub fn gamma_quantile(p: f64, shape: f64, rate: f64) -> f64 {
    // work in z = ln x so the bracket is scale free
    let z = solve_increasing(
        |z| {
            let x = z.exp();
            let cdf = gamma_p(shape, x);
            let ln_pdf = shape * x.ln() - x - ln_gamma(shape);
            (cdf, ln_pdf.exp())
        },
        p,
        (shape.ln() - 5.0).min(-5.0),
        shape.ln() + 5.0,
    );
    z.exp() / rate
}
