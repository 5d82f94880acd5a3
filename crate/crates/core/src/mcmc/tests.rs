use super::*;
use crate::dists::{ErlangKernel, GumbelCopula, ParetoII, Univariate};
use crate::models::{Alpha0Prior, Centering, DiscountPrior, Kernel, LambdaPrior};
use crate::quad::integrate;
use crate::seeded_rng;
use crate::special::{beta_reg, beta_variate, log_sum_exp, logistic, norm_cdf};
use crate::stats::{ks_pvalue, ks_statistic, quantile, variance};
use crate::Error;

/// Cdf of an unnormalised log density tabulated by quadrature on [lo, hi]
/// in the coordinate t, with linear interpolation between cells.
struct TabulatedCdf {
    lo: f64,
    width: f64,
    cum: Vec<f64>,
}

impl TabulatedCdf {
    fn new<F: Fn(f64) -> f64>(log_density: F, lo: f64, hi: f64, cells: usize) -> Self {
        let width = (hi - lo) / cells as f64;
        let peak = (0..=cells * 4)
            .map(|j| log_density(lo + (hi - lo) * j as f64 / (cells * 4) as f64))
            .fold(f64::NEG_INFINITY, f64::max);
        let f = |t: f64| (log_density(t) - peak).exp();
        let mut cum = vec![0.0];
        for j in 0..cells {
            let a = lo + j as f64 * width;
            let v = integrate(&f, a, a + width, 1e-13);
            cum.push(cum[j] + v);
        }
        let total = cum[cells];
        cum.iter_mut().for_each(|c| *c /= total);
        TabulatedCdf { lo, width, cum }
    }

    fn cdf(&self, t: f64) -> f64 {
        let pos = (t - self.lo) / self.width;
        if pos <= 0.0 {
            return 0.0;
        }
        let j = pos.floor() as usize;
        if j + 1 >= self.cum.len() {
            return 1.0;
        }
        let frac = pos - j as f64;
        self.cum[j] + frac * (self.cum[j + 1] - self.cum[j])
    }
}

fn fixed_uni(lambda: f64, alpha0: f64) -> MixtureModelSpec {
    MixtureModelSpec {
        kernel: Kernel::Erlang {
            lambda: LambdaPrior::Fixed { value: lambda },
        },
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Fixed { value: alpha0 },
            theta: 1.0,
        },
        ..MixtureModelSpec::uni_scale()
    }
}

fn state(alloc: Vec<usize>, sticks: Vec<f64>, atoms: Vec<f64>, alpha0: Vec<f64>) -> ChainState {
    ChainState {
        slices: vec![0.0; alloc.len()],
        alloc,
        sticks,
        atoms,
        betas: Vec::new(),
        alpha0,
        discount: 0.5,
        lambda: 1.0,
    }
}

#[test]
fn slice_coverage_examples() {
    let sticks = [0.5; 6];
    assert_eq!(covering_count(&sticks, 0.3), Some(2));
    assert_eq!(covering_count(&sticks, 0.8), Some(1));
    assert_eq!(covering_count(&sticks, 1e-6), None);
    assert_eq!(covering_count(&sticks, 1.0), Some(0));
}

#[test]
fn init_and_slices_respect_the_weights() {
    let spec = MixtureModelSpec::uni_scale();
    let data = Dataset::univariate(vec![2.5]);
    let mut rng = seeded_rng(1, 0);
    let st = init_state(&spec, &data, &mut rng).unwrap();
    assert!(st.len() >= 1);
    assert!(st.slices[0] < st.weights()[st.alloc[0]]);
    assert_eq!(st.alpha0, vec![2.0]);
    assert_eq!(st.discount, 0.5);
    assert_eq!(st.lambda, 1.0);
    let again = init_state(&spec, &data, &mut seeded_rng(1, 0)).unwrap();
    assert_eq!(st, again);

    let y: Vec<f64> = (1..=40).map(|i| 1.0 + i as f64 * 0.37).collect();
    let data = Dataset::univariate(y);
    let mut st = init_state(&spec, &data, &mut rng).unwrap();
    let mut sampler = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    for _ in 0..30 {
        sampler.cycle(&mut st, &mut rng).unwrap();
        sampler.update_slices(&mut st, &mut rng).unwrap();
        let w = st.weights();
        let min_u = st.slices.iter().copied().fold(1.0, f64::min);
        assert!(st.alloc.iter().zip(&st.slices).all(|(&z, &u)| u < w[z]));
        let rest: f64 = st.sticks.iter().map(|v| 1.0 - v).product();
        assert!(rest <= min_u || st.is_terminal(&spec));
    }

    let bad = Dataset::univariate(vec![1.0, -2.0]);
    match init_state(&spec, &bad, &mut rng) {
        Err(Error::AtIndex { index: 1, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn allocation_probabilities_and_invariant_abort() {
    let mut rng = seeded_rng(2, 0);
    let cand = [(0, 0.2f64.ln()), (1, 0.6f64.ln())];
    let n = 100_000;
    let ones = (0..n)
        .filter(|_| sampler::draw_log_weighted(&cand, &mut rng) == 1)
        .count();
    assert!((ones as f64 / n as f64 - 0.75).abs() < 0.01);
    assert_eq!(sampler::draw_log_weighted(&[(4, -3.0)], &mut rng), 4);

    // slices far below the instantiated mass: the sweep must refuse
    let spec = fixed_uni(1.0, 2.0);
    let data = Dataset::univariate(vec![1.0, 2.0]);
    let mut st = state(vec![0, 0], vec![0.5], vec![1.0], vec![2.0]);
    st.slices = vec![1e-6, 1e-6];
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    match s.update_allocations(&mut st, &mut rng) {
        Err(Error::Invariant { iteration: 0, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn conjugate_sticks() {
    let spec = MixtureModelSpec {
        discount: DiscountPrior::Fixed { value: 0.5 },
        ..fixed_uni(1.0, 2.0)
    };
    let data = Dataset::univariate(vec![1.0; 5]);
    let mut st = state(vec![0, 0, 0, 1, 1], vec![0.5, 0.5], vec![1.0, 2.0], vec![2.0]);
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    let mut rng = seeded_rng(3, 0);
    let draws: Vec<f64> = (0..10_000)
        .map(|_| {
            s.update_sticks(&mut st, &mut rng);
            st.sticks[0]
        })
        .collect();
    assert!(ks_statistic(&draws, |v| beta_reg(3.5, 2.5, v)) < 0.02);

    // no data: the prior Beta(1 - D, hD)
    let empty = Dataset::univariate(vec![]);
    let mut st = state(vec![], vec![0.5, 0.5], vec![1.0, 2.0], vec![2.0]);
    let mut s = Sampler::new(&spec, &empty, StepSizes::default()).unwrap();
    let draws: Vec<f64> = (0..10_000)
        .map(|_| {
            s.update_sticks(&mut st, &mut rng);
            st.sticks[1]
        })
        .collect();
    assert!(ks_statistic(&draws, |v| beta_reg(0.5, 1.0, v)) < 0.02);
}

#[test]
fn atom_move_matches_quadrature() {
    let spec = fixed_uni(1.0, 2.0);
    let y = 3.0;
    let data = Dataset::univariate(vec![y]);
    let mut st = state(vec![0], vec![0.5], vec![1.0], vec![2.0]);
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    let mut rng = seeded_rng(4, 0);
    let draws: Vec<f64> = (0..100_000)
        .map(|_| {
            s.update_atoms(&mut st, &mut rng).unwrap();
            st.atoms[0].ln()
        })
        .collect();
    let centering = ParetoII::new(2.0, 1.0).unwrap();
    let oracle = TabulatedCdf::new(
        |t: f64| {
            let sigma = t.exp();
            ErlangKernel::from_sigma(sigma, 1.0).unwrap().ln_pdf(y) + centering.ln_pdf(sigma) + t
        },
        -12.0,
        10.0,
        4000,
    );
    let d = ks_statistic(&draws, |t| oracle.cdf(t));
    assert!(d < 0.05, "KS {d}");
    let rate = s.stats.atom.rate().unwrap();
    assert!(rate > 0.1 && rate < 0.95);

    // unoccupied atoms come straight from the centering
    let empty = Dataset::univariate(vec![]);
    let mut st = state(vec![], vec![0.5], vec![1.0], vec![2.0]);
    let mut s = Sampler::new(&spec, &empty, StepSizes::default()).unwrap();
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            s.update_atoms(&mut st, &mut rng).unwrap();
            st.atoms[0]
        })
        .collect();
    assert!(ks_statistic(&draws, |v| centering.cdf(v)) < 0.015);
}

#[test]
fn discount_move_matches_quadrature() {
    let spec = MixtureModelSpec {
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Fixed { value: 2.0 },
            theta: 1.0,
        },
        ..MixtureModelSpec::uni_scale()
    };
    let mut rng = seeded_rng(5, 0);
    let sticks: Vec<f64> = (1..=200)
        .map(|h| beta_variate(0.5, 0.5 * h as f64, &mut rng))
        .collect();
    let empty = Dataset::univariate(vec![]);
    let mut st = state(vec![], sticks.clone(), vec![1.0; 200], vec![2.0]);
    let mut s = Sampler::new(&spec, &empty, StepSizes::default()).unwrap();
    let mut draws = Vec::new();
    for it in 0..110_000 {
        s.update_discount(&mut st, &mut rng);
        if it < 10_000 {
            if (it + 1) % 50 == 0 {
                s.adapt();
            }
        } else {
            draws.push(st.discount);
        }
    }
    let oracle = TabulatedCdf::new(
        |dd: f64| {
            let ln_prior = -0.5 * dd.ln() - 0.5 * (-dd).ln_1p();
            ln_prior
                + sticks
                    .iter()
                    .enumerate()
                    .map(|(h, &v)| {
                        let (a, b) = (1.0 - dd, (h + 1) as f64 * dd);
                        (a - 1.0) * v.ln() + (b - 1.0) * (-v).ln_1p()
                            - crate::special::ln_beta(a, b)
                    })
                    .sum::<f64>()
        },
        1e-6,
        1.0 - 1e-6,
        4000,
    );
    let d = ks_statistic(&draws, |v| oracle.cdf(v));
    assert!(d < 0.05, "KS {d}");
    let med = quantile(&draws, 0.5);
    assert!((0.4..=0.6).contains(&med), "median {med}");
}

#[test]
fn lambda_gibbs_matches_quadrature() {
    let spec = MixtureModelSpec {
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Fixed { value: 2.0 },
            theta: 1.0,
        },
        ..MixtureModelSpec::uni_scale()
    };
    let y = vec![0.8, 2.2, 5.0, 0.3, 9.1];
    let alloc = vec![0, 0, 1, 1, 1];
    let atoms = vec![0.7, 2.5];
    let data = Dataset::univariate(y.clone());
    let mut st = state(alloc.clone(), vec![0.5, 0.5], atoms.clone(), vec![2.0]);
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    let mut rng = seeded_rng(6, 0);
    let draws: Vec<f64> = (0..20_000)
        .map(|_| {
            s.update_lambda(&mut st, &mut rng);
            st.lambda.ln()
        })
        .collect();
    let oracle = TabulatedCdf::new(
        |t: f64| {
            let lam = t.exp();
            let prior = -0.9 * t - 0.1 * lam;
            let lik: f64 = y
                .iter()
                .zip(&alloc)
                .map(|(&v, &z)| ErlangKernel::from_sigma(atoms[z], lam).unwrap().ln_pdf(v))
                .sum();
            prior + lik + t
        },
        -12.0,
        6.0,
        4000,
    );
    assert!(ks_statistic(&draws, |t| oracle.cdf(t)) < 0.05);
}

#[test]
fn alpha0_gibbs_matches_quadrature() {
    let e1 = std::f64::consts::E - 1.0;
    let mut rng = seeded_rng(7, 0);
    let empty = Dataset::univariate(vec![]);
    for prior in [Alpha0Prior::Jeffreys, Alpha0Prior::Gamma { shape: 3.0, rate: 2.0 }] {
        let spec = MixtureModelSpec {
            centering: Centering::ParetoII {
                betas: vec![1.0],
                alpha0: prior,
                theta: 1.0,
            },
            ..MixtureModelSpec::uni_scale()
        };
        let mut st = state(vec![], vec![0.5, 0.5], vec![e1, e1], vec![2.0]);
        let mut s = Sampler::new(&spec, &empty, StepSizes::default()).unwrap();
        let draws: Vec<f64> = (0..10_000)
            .map(|_| {
                s.update_alpha0(&mut st, &mut rng);
                st.alpha0[0]
            })
            .collect();
        let ln_prior = move |a: f64| match prior {
            Alpha0Prior::Gamma { shape, rate } => (shape - 1.0) * a.ln() - rate * a,
            _ => -a.ln(),
        };
        let oracle = TabulatedCdf::new(
            |a: f64| ln_prior(a) + 2.0 * ParetoII::new(a, 1.0).unwrap().ln_pdf(e1),
            1e-9,
            30.0,
            6000,
        );
        let d = ks_statistic(&draws, |a| oracle.cdf(a));
        assert!(d < 0.02, "{prior:?}: KS {d}");
        if prior == Alpha0Prior::Jeffreys {
            assert!((mean(&draws) - 1.0).abs() < 0.03);
        }
    }
}

#[test]
fn alpha0_with_copula_matches_two_dimensional_quadrature() {
    let spec = MixtureModelSpec {
        centering: Centering::ParetoII {
            betas: vec![1.0, 1.0],
            alpha0: Alpha0Prior::Gamma {
                shape: 2.0,
                rate: 1.0,
            },
            theta: 2.0,
        },
        ..MixtureModelSpec::multi_scale(2, 2.0)
    };
    let atoms = vec![0.4, 0.9, 2.0, 3.5, 0.1, 0.3];
    let empty = Dataset::from_rows(&[], None).unwrap();
    let mut st = state(vec![], vec![0.3, 0.3, 0.3], atoms.clone(), vec![2.0, 2.0]);
    let mut s = Sampler::new(&spec, &empty, StepSizes::default()).unwrap();
    let mut rng = seeded_rng(8, 0);
    let draws: Vec<f64> = (0..40_000)
        .map(|_| {
            s.update_alpha0(&mut st, &mut rng);
            st.alpha0[0]
        })
        .collect();
    let cop = GumbelCopula::new(2.0).unwrap();
    let ln_joint = |a0: f64, a1: f64| {
        let m0 = ParetoII::new(a0, 1.0).unwrap();
        let m1 = ParetoII::new(a1, 1.0).unwrap();
        let mut t = a0.ln() - a0 + a1.ln() - a1;
        for h in 0..3 {
            let (x, y) = (atoms[2 * h], atoms[2 * h + 1]);
            t += m0.ln_pdf(x) + m1.ln_pdf(y) + cop.ln_pdf_neg_log(m0.neg_ln_cdf(x), m1.neg_ln_cdf(y));
        }
        t
    };
    // midpoint rule on a fine box holding essentially all the mass
    let (g, top) = (500, 20.0);
    let h = top / g as f64;
    let mut logs = Vec::with_capacity(g * g);
    let mut firsts = Vec::with_capacity(g * g);
    for i in 0..g {
        for j in 0..g {
            let (a0, a1) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
            logs.push(ln_joint(a0, a1));
            firsts.push(a0);
        }
    }
    let z = log_sum_exp(&logs);
    let oracle_mean: f64 = logs.iter().zip(&firsts).map(|(l, a)| (l - z).exp() * a).sum();
    let se = (variance(&draws) / effective_sample_size(&draws)).sqrt();
    assert!(
        (mean(&draws) - oracle_mean).abs() < 4.0 * se,
        "{} vs {oracle_mean} (se {se})",
        mean(&draws)
    );
    assert!(s.stats.alpha0.rate().unwrap() > 0.2);
}

fn cond_setup(x: &[f64]) -> (MixtureModelSpec, Dataset, ChainState) {
    let spec = MixtureModelSpec {
        kernel: Kernel::Erlang {
            lambda: LambdaPrior::Fixed { value: 1.0 },
        },
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Fixed { value: 2.0 },
            theta: 1.0,
        },
        ..MixtureModelSpec::cond_scale(1, 1, 1.0)
    };
    let rows: Vec<Vec<f64>> = x.iter().map(|_| vec![1.0]).collect();
    let cov: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
    let data = Dataset::from_rows(&rows, Some(&cov)).unwrap();
    let alloc = vec![0, 0, 1, 1, 1, 0];
    let mut st = state(alloc, vec![0.4, 0.6], vec![1.0, 1.0], vec![2.0]);
    st.betas = vec![0.3, -0.5, 0.1, 0.2];
    (spec, data, st)
}

/// Beta quantile by bisection on the regularised incomplete beta.
fn bisect_beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn stick_log_lik(beta: &[f64], u: f64, x: &[f64], alloc: &[usize], h: usize) -> f64 {
    x.iter()
        .zip(alloc)
        .filter(|(_, &z)| z >= h)
        .map(|(&xi, &z)| {
            let dd = logistic(beta[0] + beta[1] * xi);
            let v = bisect_beta_quantile(u, 1.0 - dd, (h + 1) as f64 * dd);
            if z == h {
                v.ln()
            } else {
                (-v).ln_1p()
            }
        })
        .sum()
}

#[test]
fn stick_uniform_move_matches_quadrature() {
    let x = [0.1, 0.9, 0.4, 0.5, 0.7, 0.2];
    let (spec, data, mut st) = cond_setup(&x);
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    s.refresh_fractions(&st);
    let mut rng = seeded_rng(9, 0);
    let mut draws = Vec::new();
    for it in 0..60_000 {
        s.update_sticks(&mut st, &mut rng);
        if it < 5000 {
            if (it + 1) % 50 == 0 {
                s.adapt();
            }
        } else {
            draws.push(st.sticks[0]);
        }
    }
    let alloc = st.alloc.clone();
    let beta0 = st.betas[..2].to_vec();
    let oracle = TabulatedCdf::new(
        |u: f64| stick_log_lik(&beta0, u, &x, &alloc, 0),
        1e-9,
        1.0 - 1e-9,
        800,
    );
    let d = ks_statistic(&draws, |u| oracle.cdf(u));
    assert!(d < 0.05, "KS {d}");
}

#[test]
fn regression_move_matches_quadrature() {
    // x = 0 leaves the slope to its prior and the intercept one-dimensional
    let x = [0.0; 6];
    let (spec, data, mut st) = cond_setup(&x);
    let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
    s.refresh_fractions(&st);
    let mut rng = seeded_rng(10, 0);
    let (mut b0, mut b1) = (Vec::new(), Vec::new());
    for it in 0..105_000 {
        s.update_beta(&mut st, &mut rng);
        if it < 5000 {
            if (it + 1) % 50 == 0 {
                s.adapt();
            }
        } else {
            b0.push(st.betas[0]);
            b1.push(st.betas[1]);
        }
    }
    let (u, alloc) = (st.sticks[0], st.alloc.clone());
    let oracle = TabulatedCdf::new(
        |b: f64| -b * b / 200.0 + stick_log_lik(&[b, 0.0], u, &x, &alloc, 0),
        -45.0,
        45.0,
        900,
    );
    let d = ks_statistic(&b0, |b| oracle.cdf(b));
    assert!(d < 0.05, "KS {d}");
    let se = (variance(&b1) / effective_sample_size(&b1)).sqrt();
    assert!(mean(&b1).abs() < 4.0 * se);
    assert!((variance(&b1).sqrt() - 10.0).abs() < 1.5);
}

#[test]
fn prior_reproduction_without_data() {
    let spec = MixtureModelSpec {
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Gamma {
                shape: 2.0,
                rate: 1.0,
            },
            theta: 1.0,
        },
        ..MixtureModelSpec::uni_scale()
    };
    let empty = Dataset::univariate(vec![]);
    let config = SamplerConfig {
        burn_in: 500,
        keep: 10_000,
        tail_atoms: 0,
        ..SamplerConfig::default()
    };
    let out = run_chain(&spec, &empty, &config, &mut seeded_rng(11, 0)).unwrap();
    let check = |xs: Vec<f64>, m: f64, v: f64| {
        let se = (v / effective_sample_size(&xs)).sqrt();
        assert!((mean(&xs) - m).abs() < 3.0 * se, "mean {} vs {m}", mean(&xs));
    };
    let snaps = &out.snapshots;
    check(snaps.iter().map(|s| s.discount).collect(), 0.5, 0.125);
    check(snaps.iter().map(|s| s.lambda).collect(), 1.0, 10.0);
    check(snaps.iter().map(|s| s.alpha0[0]).collect(), 2.0, 2.0);
    assert_eq!(out.summary.unwrap().acceptance.alpha0_fallbacks, 0);
}

#[test]
fn chains_are_reproducible_and_keep_zero_is_empty() {
    let spec = MixtureModelSpec::uni_scale();
    let data = Dataset::univariate((1..=30).map(|i| (i as f64).powf(1.3)).collect());
    let config = SamplerConfig {
        burn_in: 60,
        keep: 40,
        thin: 3,
        ..SamplerConfig::default()
    };
    let a = run_chain(&spec, &data, &config, &mut seeded_rng(12, 0)).unwrap();
    let b = run_chain(&spec, &data, &config, &mut seeded_rng(12, 0)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.snapshots.len(), 14);
    assert!(a.summary.as_ref().unwrap().tail_index[0].iter().all(|t| *t > 0.0));
    let c = run_chain(&spec, &data, &config, &mut seeded_rng(12, 1)).unwrap();
    assert_ne!(a, c);

    let none = SamplerConfig {
        keep: 0,
        ..config.clone()
    };
    let out = run_chain(&spec, &data, &none, &mut seeded_rng(12, 0)).unwrap();
    assert!(out.snapshots.is_empty() && out.summary.is_none());

    let mut streamed = Vec::new();
    run_chain_with(&spec, &data, &config, &mut seeded_rng(12, 0), |s| {
        streamed.push(s.clone());
        Ok(())
    })
    .unwrap();
    assert_eq!(streamed, a.snapshots);
}

#[test]
fn every_class_runs() {
    let mut rng = seeded_rng(13, 0);
    let config = SamplerConfig {
        burn_in: 50,
        keep: 20,
        ..SamplerConfig::default()
    };
    let uni = Dataset::univariate((1..=25).map(|i| 1.0 + 0.3 * i as f64).collect());
    let rows: Vec<Vec<f64>> = (1..=25).map(|i| vec![i as f64, 30.0 - i as f64]).collect();
    let cov: Vec<Vec<f64>> = (1..=25).map(|i| vec![i as f64 / 26.0]).collect();
    let multi = Dataset::from_rows(&rows, None).unwrap();
    let cond = Dataset::from_rows(&rows, Some(&cov)).unwrap();
    let shape = MixtureModelSpec::uni_shape(
        crate::dists::ParetoFamily::Pareto,
        Centering::ShiftedParetoII {
            location: 0.0,
            alpha0: 2.0,
            beta: 1.0,
        },
    );
    let cases = [
        (MixtureModelSpec::uni_scale(), &uni),
        (MixtureModelSpec::dp_erlang(1.0), &uni),
        (MixtureModelSpec::dp_pareto_shape(1.0), &uni),
        (shape, &uni),
        (MixtureModelSpec::multi_scale(2, 2.0), &multi),
        (MixtureModelSpec::cond_scale(2, 1, 2.0), &cond),
    ];
    for (spec, data) in cases {
        let out = run_chain(&spec, data, &config, &mut rng).unwrap();
        assert_eq!(out.snapshots.len(), 20, "{:?}", spec.class);
        for s in &out.snapshots {
            let x = data.x(0);
            let w = s.mixture.weights_at(&spec, x).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn short_geweke_uni_scale() {
    let spec = MixtureModelSpec {
        discount: DiscountPrior::Beta { a: 2.0, b: 2.0 },
        kernel: Kernel::Erlang {
            lambda: LambdaPrior::Gamma {
                shape: 2.0,
                rate: 2.0,
            },
        },
        centering: Centering::ParetoII {
            betas: vec![1.0],
            alpha0: Alpha0Prior::Gamma {
                shape: 20.0,
                rate: 10.0,
            },
            theta: 1.0,
        },
        truncation: 5,
        ..MixtureModelSpec::uni_scale()
    };
    let r = geweke_test(&spec, 5, None, 5000, 20_000, &mut seeded_rng(14, 0)).unwrap();
    assert!(r.max_abs_z() < 4.0, "{r:?}");
}

#[test]
fn label_exchange_keeps_prior_on_trimmed_states() {
    let spec = MixtureModelSpec {
        truncation: 5,
        ..fixed_uni(1.0, 2.0)
    };
    let mut rng = seeded_rng(15, 0);
    let (mut before, mut after) = (Vec::new(), Vec::new());
    for _ in 0..40_000 {
        let (mut st, data) = prior_draw(&spec, 5, None, &mut rng).unwrap();
        before.push(st.sticks[0]);
        let top = st.alloc.iter().max().unwrap() + 1;
        st.truncate(&spec, top);
        let mut s = Sampler::new(&spec, &data, StepSizes::default()).unwrap();
        for _ in 0..3 {
            s.update_labels(&mut st, &mut rng).unwrap();
        }
        assert!(st.len() <= spec.truncation && st.alloc.iter().all(|&z| z < st.len()));
        after.push(st.sticks[0]);
    }
    let se = (2.0 * variance(&before) / before.len() as f64).sqrt();
    assert!((mean(&after) - mean(&before)).abs() < 3.0 * se, "{} vs {}", mean(&after), mean(&before));
    // some exchanges were accepted
    assert!(before.iter().zip(&after).any(|(x, y)| x != y));
}

fn one_atom_snapshot(sigma: f64, lambda: f64) -> Snapshot {
    Snapshot {
        iteration: 1,
        discount: 0.5,
        lambda,
        alpha0: vec![2.0],
        occupied: 1,
        mixture: crate::models::FiniteMixture::with_weights(vec![1.0], vec![sigma], lambda),
    }
}

#[test]
fn summaries_collapse_nest_and_validate() {
    let spec = MixtureModelSpec::uni_scale();
    let grid = PredictiveGrid {
        y: vec![0.5, 1.0, 4.0, 20.0],
        x: Vec::new(),
        joint: false,
    };
    let one = predictive_summaries(&[one_atom_snapshot(2.0, 1.0)], &spec, &grid).unwrap();
    let m = &one.panels[0].margins[0];
    assert_eq!(m.density.lower, m.density.upper);
    assert_eq!(m.density.mean, m.density.upper);
    let k = ErlangKernel::from_sigma(2.0, 1.0).unwrap();
    for (j, &y) in grid.y.iter().enumerate() {
        assert!((m.density.mean[j] - k.pdf(y)).abs() < 1e-14);
        assert!((m.log_survival.mean[j] - k.ln_survival(y)).abs() < 1e-12);
    }
    assert_eq!(one.tail_index, vec![vec![4.0]]);

    let snaps: Vec<Snapshot> = (1..=40).map(|i| one_atom_snapshot(0.2 * i as f64, 1.0)).collect();
    let many = predictive_summaries(&snaps, &spec, &grid).unwrap();
    for b in [&many.panels[0].margins[0].density, &many.panels[0].margins[0].log_survival] {
        for j in 0..grid.y.len() {
            assert!(b.lower[j] <= b.lower50[j] && b.lower50[j] <= b.upper50[j]);
            assert!(b.upper50[j] <= b.upper[j]);
        }
    }

    let mut bad = grid.clone();
    bad.y = vec![2.0, 1.0];
    assert!(predictive_summaries(&snaps, &spec, &bad).is_err());
    bad.y = vec![1.0];
    bad.x = vec![vec![0.5]];
    assert!(predictive_summaries(&snaps, &spec, &bad).is_err());
    assert!(predictive_summaries(&[], &spec, &grid).is_err());
}

#[test]
fn predictive_quantile_of_a_single_kernel() {
    let spec = MixtureModelSpec::uni_scale();
    let snap = one_atom_snapshot(3.5, 2.0);
    let k = ErlangKernel::from_sigma(3.5, 2.0).unwrap();
    for p in [0.01, 0.5, 0.99, 0.999999] {
        let q = predictive_quantile(std::slice::from_ref(&snap), &spec, p, 0, None).unwrap();
        assert!((q / k.quantile(p).unwrap() - 1.0).abs() < 1e-9, "p = {p}");
    }
    assert!(predictive_quantile(&[snap], &spec, 1.0, 0, None).is_err());
}

#[test]
fn residuals_are_normal_under_the_fitted_model() {
    let spec = MixtureModelSpec::uni_scale();
    let snaps = vec![
        Snapshot {
            mixture: crate::models::FiniteMixture::with_weights(vec![0.6, 0.4], vec![1.5, 30.0], 1.0),
            ..one_atom_snapshot(1.0, 1.0)
        },
        Snapshot {
            mixture: crate::models::FiniteMixture::with_weights(vec![0.3, 0.7], vec![4.0, 0.2], 1.0),
            ..one_atom_snapshot(1.0, 1.0)
        },
    ];
    let mut rng = seeded_rng(15, 0);
    let y: Vec<f64> = (0..500)
        .map(|i| snaps[i % 2].mixture.sample(&spec, None, &mut rng).unwrap()[0])
        .collect();
    let data = Dataset::univariate(y.clone());
    let rep = randomized_quantile_residuals(&snaps, &spec, &data, &mut rng).unwrap();
    let d = ks_statistic(&rep.residuals[0], norm_cdf);
    assert!(ks_pvalue(d, 500) > 0.01);
    let mut pairs: Vec<(f64, f64)> = y.iter().copied().zip(rep.residuals[0].iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(pairs.windows(2).all(|w| w[1].1 >= w[0].1));

    let single = [one_atom_snapshot(2.0, 1.0)];
    let med = ErlangKernel::from_sigma(2.0, 1.0).unwrap().quantile(0.5).unwrap();
    let r = randomized_quantile_residuals(&single, &spec, &Dataset::univariate(vec![med, 1e4]), &mut rng)
        .unwrap();
    assert!(r.residuals[0][0].abs() < 1e-9);
    assert_eq!(r.clamped, vec![(0, 1)]);
    assert!(r.residuals[0][1].is_finite() && r.residuals[0][1] > 6.0);
}

#[test]
fn kendall_inversion_recovers_theta() {
    let cop = GumbelCopula::new(2.0).unwrap();
    let mut rng = seeded_rng(16, 0);
    let rows: Vec<Vec<f64>> = (0..3000)
        .map(|_| {
            let (u, v) = cop.sample(&mut rng);
            vec![u, v]
        })
        .collect();
    let th = empirical_bayes_theta(&Dataset::from_rows(&rows, None).unwrap()).unwrap();
    assert!((th - 2.0).abs() < 0.15, "{th}");
    let anti: Vec<Vec<f64>> = (1..50).map(|i| vec![i as f64, -(i as f64)]).collect();
    assert_eq!(empirical_bayes_theta(&Dataset::from_rows(&anti, None).unwrap()).unwrap(), 1.0);
    assert!(empirical_bayes_theta(&Dataset::univariate(vec![1.0, 2.0])).is_err());
}
