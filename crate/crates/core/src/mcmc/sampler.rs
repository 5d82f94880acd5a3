use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::{alpha0_prior, check_data, draw_atom, lambda_prior, ChainState, ATOM_MAX};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{
    dependent_fraction, Alpha0Prior, Centering, Component, DiscountPrior, Kernel, LambdaPrior,
    MixtureModelSpec,
};
use crate::special::{
    beta_variate, gamma_variate, ln_beta_pdf, ln_gamma, ln_gamma_pdf, log_sum_exp, logistic, logit, open_unit,
    std_normal, LOGIT_CLAMP,
};

/// Random-walk scales. Atom, stick and coefficient moves are further divided
/// by a rough posterior standard deviation from the observations informing
/// them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSizes {
    pub atom: f64,
    pub discount: f64,
    pub stick: f64,
    pub beta: f64,
    /// Joint move of lambda with every atom.
    #[serde(default = "default_rescale")]
    pub rescale: f64,
}

fn default_rescale() -> f64 {
    0.1
}

impl Default for StepSizes {
    fn default() -> Self {
        StepSizes {
            atom: 1.0,
            discount: 0.5,
            stick: 1.0,
            beta: 1.0,
            rescale: default_rescale(),
        }
    }
}

impl StepSizes {
    pub fn validate(&self) -> Result<()> {
        let all = [self.atom, self.discount, self.stick, self.beta, self.rescale];
        if all.iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(crate::error::input("step sizes must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    fn since(&self, earlier: &MoveStats) -> MoveStats {
        MoveStats {
            proposed: self.proposed - earlier.proposed,
            accepted: self.accepted - earlier.accepted,
        }
    }
}

/// Metropolis counters per update; alpha0 moves only exist with a copula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Acceptance {
    pub atom: MoveStats,
    pub discount: MoveStats,
    pub stick: MoveStats,
    pub beta: MoveStats,
    pub alpha0: MoveStats,
    /// Exchanges of adjacent components.
    pub label: MoveStats,
    #[serde(default)]
    pub rescale: MoveStats,
    /// Gibbs draws of alpha0 that fell back to Gamma(1, 1).
    pub alpha0_fallbacks: u64,
}

const TARGET_ACCEPTANCE: f64 = 0.3;

/// Per-margin Erlang terms: ln k(y) = c[0] ln y - c[1] y - c[2].
type ErlangTerms = [f64; 3];

fn erlang_terms(sigma: f64, lambda: f64) -> ErlangTerms {
    let a = sigma.ceil().max(1.0);
    let s = sigma / lambda;
    [a - 1.0, 1.0 / s, a * s.ln() + ln_gamma(a)]
}

enum KernelCache {
    Erlang(Vec<ErlangTerms>),
    Other(Component),
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    log_ratio >= 0.0 || open_unit(rng).ln() < log_ratio
}

/// One slice-sampler sweep over a fixed dataset.
pub struct Sampler<'a> {
    spec: &'a MixtureModelSpec,
    data: &'a Dataset,
    ln_y: Vec<f64>,
    designs: Vec<Vec<f64>>,
    /// cond_scale stick fractions, `fracs[h][i]` = V_h(x_i).
    fracs: Vec<Vec<f64>>,
    pub steps: StepSizes,
    pub stats: Acceptance,
    iteration: usize,
    window: Acceptance,
    adaptations: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(spec: &'a MixtureModelSpec, data: &'a Dataset, steps: StepSizes) -> Result<Self> {
        check_data(spec, data)?;
        steps.validate()?;
        let designs = if spec.is_conditional() {
            (0..data.n())
                .map(|i| spec.design(data.x(i).unwrap_or(&[])))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Sampler {
            spec,
            data,
            ln_y: data.values().iter().map(|v| v.ln()).collect(),
            designs,
            fracs: Vec::new(),
            steps,
            stats: Acceptance::default(),
            iteration: 0,
            window: Acceptance::default(),
            adaptations: 0,
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    fn invariant(&self, detail: String) -> Error {
        Error::Invariant {
            iteration: self.iteration,
            detail,
        }
    }

    /// Full update cycle in the fixed order.
    pub fn cycle<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        self.update_slices(st, rng)?;
        self.update_allocations(st, rng)?;
        self.update_labels(st, rng)?;
        self.update_sticks(st, rng);
        self.update_atoms(st, rng)?;
        self.update_alpha0(st, rng);
        self.update_discount(st, rng);
        self.update_lambda(st, rng);
        self.update_rescale(st, rng);
        self.update_beta(st, rng);
        self.iteration += 1;
        Ok(())
    }

    /// Robbins-Monro step on the log scale of every move class toward the
    /// target acceptance, using the moves since the previous call.
    pub fn adapt(&mut self) {
        self.adaptations += 1;
        let gain = 1.0 / (self.adaptations as f64).sqrt();
        let tune = |step: &mut f64, now: &MoveStats, then: &MoveStats| {
            if let Some(rate) = now.since(then).rate() {
                *step = (*step * (gain * (rate - TARGET_ACCEPTANCE)).exp()).clamp(1e-4, 1e2);
            }
        };
        tune(&mut self.steps.atom, &self.stats.atom, &self.window.atom);
        tune(&mut self.steps.discount, &self.stats.discount, &self.window.discount);
        tune(&mut self.steps.stick, &self.stats.stick, &self.window.stick);
        tune(&mut self.steps.beta, &self.stats.beta, &self.window.beta);
        tune(&mut self.steps.rescale, &self.stats.rescale, &self.window.rescale);
        self.window = self.stats;
    }

    pub fn reset_stats(&mut self) {
        self.stats = Acceptance::default();
        self.window = Acceptance::default();
    }

    fn fraction_row(&self, st: &ChainState, h: usize) -> Vec<f64> {
        self.designs
            .iter()
            .map(|x| st.fraction_at(self.spec, h, x))
            .collect()
    }

    /// Recompute the cond_scale stick fractions from the state.
    pub fn refresh_fractions(&mut self, st: &ChainState) {
        self.fracs = (0..st.len()).map(|h| self.fraction_row(st, h)).collect();
    }

    fn cond_weight(&self, i: usize, h: usize) -> f64 {
        let rest: f64 = self.fracs[..h].iter().map(|r| 1.0 - r[i]).product();
        rest * self.fracs[h][i]
    }

    /// u_i ~ U(0, pi_{z_i}(x_i)), then instantiate prior sticks until every
    /// slice clears the leftover mass or the cap is reached.
    pub fn update_slices<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let n = self.data.n();
        let cap = self.spec.truncation;
        if self.spec.is_conditional() {
            self.refresh_fractions(st);
            let mut rest = vec![1.0; n];
            for row in &self.fracs {
                rest.iter_mut().zip(row).for_each(|(r, v)| *r *= 1.0 - v);
            }
            for i in 0..n {
                st.slices[i] = open_unit(rng) * self.cond_weight(i, st.alloc[i]);
            }
            while st.len() < cap && rest.iter().zip(&st.slices).any(|(r, u)| r > u) {
                st.push_prior_stick(self.spec, rng)?;
                let row = self.fraction_row(st, st.len() - 1);
                rest.iter_mut().zip(&row).for_each(|(r, v)| *r *= 1.0 - v);
                self.fracs.push(row);
            }
        } else {
            let w = st.weights();
            for i in 0..n {
                st.slices[i] = open_unit(rng) * w[st.alloc[i]];
            }
            let min_u = st.slices.iter().copied().fold(1.0, f64::min);
            let mut rest: f64 = st.sticks.iter().map(|v| 1.0 - v).product();
            while st.len() < cap && rest > min_u {
                st.push_prior_stick(self.spec, rng)?;
                rest *= 1.0 - st.sticks[st.len() - 1];
            }
        }
        Ok(())
    }

    fn kernel_caches(&self, st: &ChainState) -> Result<Vec<KernelCache>> {
        (0..st.len())
            .map(|h| {
                let atom = st.atom(self.spec, h);
                Ok(match self.spec.kernel {
                    Kernel::Erlang { .. } => KernelCache::Erlang(
                        atom.iter().map(|&s| erlang_terms(s, st.lambda)).collect(),
                    ),
                    Kernel::ParetoType { .. } => {
                        KernelCache::Other(self.spec.component(atom, st.lambda)?)
                    }
                })
            })
            .collect()
    }

    fn ln_kernel(&self, cache: &KernelCache, i: usize) -> f64 {
        match cache {
            KernelCache::Erlang(terms) => {
                let d = terms.len();
                let y = &self.data.values()[i * d..(i + 1) * d];
                let ly = &self.ln_y[i * d..(i + 1) * d];
                terms
                    .iter()
                    .zip(y.iter().zip(ly))
                    .map(|(c, (y, ly))| c[0] * ly - c[1] * y - c[2])
                    .sum()
            }
            KernelCache::Other(c) => c.ln_pdf(self.data.y(i)),
        }
    }

    /// z_i from P(z_i = h) proportional to 1{pi_h(x_i) > u_i} k(y_i | atom_h),
    /// then drop every stick beyond the largest occupied one.
    pub fn update_allocations<R: Rng + ?Sized>(
        &mut self,
        st: &mut ChainState,
        rng: &mut R,
    ) -> Result<()> {
        let n = self.data.n();
        let caches = self.kernel_caches(st)?;
        let terminal = st.is_terminal(self.spec);
        let mut cand: Vec<(usize, f64)> = Vec::new();
        let weights = (!self.spec.is_conditional()).then(|| st.weights());
        let leftover: f64 = st.sticks.iter().map(|v| 1.0 - v).product();
        let order = weights.as_ref().map(|w| {
            let mut o: Vec<usize> = (0..w.len()).collect();
            o.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
            o
        });
        for i in 0..n {
            let u = st.slices[i];
            cand.clear();
            let rest = match (&weights, &order) {
                (Some(w), Some(o)) => {
                    for &h in o {
                        if w[h] <= u {
                            break;
                        }
                        cand.push((h, self.ln_kernel(&caches[h], i)));
                    }
                    leftover
                }
                _ => {
                    let mut rest = 1.0;
                    for (h, row) in self.fracs.iter().enumerate() {
                        if rest * row[i] > u {
                            cand.push((h, self.ln_kernel(&caches[h], i)));
                        }
                        rest *= 1.0 - row[i];
                    }
                    rest
                }
            };
            if !terminal && rest > u * (1.0 + 1e-9) {
                return Err(self.invariant(format!(
                    "slice of observation {i} not covered by {} sticks",
                    st.len()
                )));
            }
            if cand.is_empty() {
                return Err(self.invariant(format!("observation {i} has no eligible component")));
            }
            st.alloc[i] = draw_log_weighted(&cand, rng);
        }
        let m = st.alloc.iter().map(|z| z + 1).max().unwrap_or(0);
        st.truncate(self.spec, m);
        self.fracs.truncate(m);
        Ok(())
    }

    fn counts(&self, st: &ChainState) -> Vec<usize> {
        let mut c = vec![0; st.len()];
        st.alloc.iter().for_each(|&z| c[z] += 1);
        c
    }

    /// Observations sorted by allocation; those with z >= h form a suffix.
    fn by_allocation(&self, st: &ChainState) -> (Vec<usize>, Vec<usize>) {
        let mut idx: Vec<usize> = (0..self.data.n()).collect();
        idx.sort_by_key(|&i| st.alloc[i]);
        let mut start = vec![idx.len(); st.len() + 1];
        for (pos, &i) in idx.iter().enumerate().rev() {
            start[st.alloc[i]] = pos;
        }
        for h in (0..st.len()).rev() {
            start[h] = start[h].min(start[h + 1]);
        }
        (idx, start)
    }

    fn stick_loglik(row: &[f64], idx: &[usize], alloc: &[usize], h: usize) -> f64 {
        idx.iter()
            .map(|&i| {
                if alloc[i] == h {
                    row[i].ln()
                } else {
                    (-row[i]).ln_1p()
                }
            })
            .sum()
    }

    /// Metropolis exchange of adjacent components h, h + 1 together with
    /// their weights, sweeping downward so an occupied component can travel
    /// several places toward the front. The stick pair maps by the involution
    /// (V_h, V_{h+1}) -> ((1 - V_h) V_{h+1}, V_h / (1 - (1 - V_h) V_{h+1})),
    /// which leaves every weight's likelihood term unchanged; only the stick
    /// priors and the Jacobian enter the ratio. Not used for cond_scale,
    /// whose weights vary with x.
    ///
    /// A pair is tried only while h is at or below the highest occupied
    /// position, a condition the swap itself preserves; one prior stick is
    /// instantiated above the top first so the reverse of every swap is
    /// available.
    pub fn update_labels<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        if self.spec.is_conditional() || st.alloc.is_empty() {
            return Ok(());
        }
        let mut top = st.alloc.iter().copied().max().unwrap_or(0);
        while st.len() < (top + 2).min(self.spec.truncation) {
            st.push_prior_stick(self.spec, rng)?;
        }
        let m = st.len();
        let movable = if st.is_terminal(self.spec) { m - 1 } else { m };
        let ad = self.spec.atom_dim();
        let mut occupied = vec![false; m];
        st.alloc.iter().for_each(|&z| occupied[z] = true);
        // at[p]: original label now at position p
        let mut at: Vec<usize> = (0..m).collect();
        for h in (0..=top.min(movable.saturating_sub(2))).rev() {
            let (a, b) = (st.sticks[h], st.sticks[h + 1]);
            let s = 1.0 - (1.0 - a) * b;
            let (a2, b2) = ((1.0 - a) * b, a / s);
            let (pa, pb) = (self.spec.stick_law(h + 1, st.discount), self.spec.stick_law(h + 2, st.discount));
            let ratio = ln_beta_pdf(a2, pa.0, pa.1) + ln_beta_pdf(b2, pb.0, pb.1)
                - ln_beta_pdf(a, pa.0, pa.1)
                - ln_beta_pdf(b, pb.0, pb.1)
                + ((1.0 - a) / s).ln();
            let ok = a2 > 0.0 && b2 < 1.0 && ratio.is_finite() && accept(ratio, rng);
            self.stats.label.record(ok);
            if ok {
                st.sticks[h] = a2;
                st.sticks[h + 1] = b2;
                for k in 0..ad {
                    st.atoms.swap(h * ad + k, (h + 1) * ad + k);
                }
                at.swap(h, h + 1);
                occupied.swap(h, h + 1);
                top = occupied.iter().rposition(|&o| o).unwrap_or(0);
            }
        }
        let mut pos = vec![0; m];
        for (p, &orig) in at.iter().enumerate() {
            pos[orig] = p;
        }
        st.alloc.iter_mut().for_each(|z| *z = pos[*z]);
        st.truncate(self.spec, top + 1);
        Ok(())
    }

    /// Conjugate Beta draws for the sticks; for cond_scale, random-walk MH on
    /// logit U_h.
    pub fn update_sticks<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let m = st.len();
        if m == 0 {
            return;
        }
        let movable = if st.is_terminal(self.spec) { m - 1 } else { m };
        if !self.spec.is_conditional() {
            let counts = self.counts(st);
            let mut above = self.data.n();
            for h in 0..movable {
                above -= counts[h];
                let (a, b) = self.spec.stick_law(h + 1, st.discount);
                st.sticks[h] = beta_variate(a + counts[h] as f64, b + above as f64, rng);
            }
            return;
        }
        let (idx, start) = self.by_allocation(st);
        for h in 0..movable {
            let members = &idx[start[h]..];
            let scale = self.steps.stick / (1.0 + members.len() as f64).sqrt();
            let u = st.sticks[h];
            let t = logit(u) + scale * std_normal(rng);
            if t.abs() > LOGIT_CLAMP {
                self.stats.stick.record(false);
                continue;
            }
            let u_new = logistic(t);
            let mut row = self.fracs[h].clone();
            let beta = st.beta(self.spec, h).to_vec();
            for &i in members {
                row[i] = dependent_fraction(&beta, &self.designs[i], u_new, h + 1);
            }
            let ll_old = Self::stick_loglik(&self.fracs[h], members, &st.alloc, h);
            let ll_new = Self::stick_loglik(&row, members, &st.alloc, h);
            let jac = (u_new * (1.0 - u_new)).ln() - (u * (1.0 - u)).ln();
            let ok = accept(ll_new - ll_old + jac, rng);
            self.stats.stick.record(ok);
            if ok {
                st.sticks[h] = u_new;
                self.fracs[h] = row;
            }
        }
    }

    /// Random-walk MH on log atoms of occupied components; empty components
    /// are redrawn from the centering.
    pub fn update_atoms<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) -> Result<()> {
        let m = st.len();
        let ad = self.spec.atom_dim();
        let d = self.spec.dim;
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
        st.alloc.iter().enumerate().for_each(|(i, &z)| members[z].push(i));
        for h in 0..m {
            if members[h].is_empty() {
                let atom = draw_atom(self.spec, &st.alpha0, rng)?;
                st.atoms[h * ad..(h + 1) * ad].copy_from_slice(&atom);
                continue;
            }
            let nh = members[h].len() as f64;
            match self.spec.kernel {
                Kernel::Erlang { .. } => {
                    for k in 0..d {
                        let (mut sl, mut sy) = (0.0, 0.0);
                        for &i in &members[h] {
                            sl += self.ln_y[i * d + k];
                            sy += self.data.values()[i * d + k];
                        }
                        // rough posterior precision of log sigma per observation
                        let sigma_hat = (st.lambda * sy / nh).sqrt();
                        let info = 1.0 + 4.0 * (sigma_hat - 1.0).max(0.0);
                        let scale = self.steps.atom / (nh * info).sqrt();
                        let lambda = st.lambda;
                        let ll = |s: f64| {
                            let c = erlang_terms(s, lambda);
                            c[0] * sl - c[1] * sy - nh * c[2]
                        };
                        let cur = st.atoms[h * ad + k];
                        let prop = cur * (scale * std_normal(rng)).exp();
                        if !(prop > 0.0 && prop <= ATOM_MAX) {
                            self.stats.atom.record(false);
                            continue;
                        }
                        let mut atom = st.atom(self.spec, h).to_vec();
                        let lc_old = self.spec.ln_centering_density(&atom, &st.alpha0);
                        atom[k] = prop;
                        let lc_new = self.spec.ln_centering_density(&atom, &st.alpha0);
                        let ratio = ll(prop) - ll(cur) + lc_new - lc_old + (prop / cur).ln();
                        let ok = accept(ratio, rng);
                        self.stats.atom.record(ok);
                        if ok {
                            st.atoms[h * ad + k] = prop;
                        }
                    }
                }
                Kernel::ParetoType { family } => {
                    let loc = match self.spec.centering {
                        Centering::ShiftedParetoII { location, .. } => location,
                        _ => 0.0,
                    };
                    let target = |a: f64| -> f64 {
                        let Ok(kern) = family.kernel(a) else {
                            return f64::NEG_INFINITY;
                        };
                        let ll: f64 = members[h]
                            .iter()
                            .map(|&i| crate::dists::Univariate::ln_pdf(&kern, self.data.y(i)[0]))
                            .sum();
                        ll + self.spec.ln_centering_density(&[a], &st.alpha0) + (a - loc).ln()
                    };
                    let cur = st.atoms[h];
                    let scale = self.steps.atom / nh.sqrt();
                    let prop = loc + (cur - loc) * (scale * std_normal(rng)).exp();
                    if !(prop > loc && prop <= ATOM_MAX) {
                        self.stats.atom.record(false);
                        continue;
                    }
                    let ratio = target(prop) - target(cur);
                    let ok = accept(ratio, rng);
                    self.stats.atom.record(ok);
                    if ok {
                        st.atoms[h] = prop;
                    }
                }
            }
        }
        Ok(())
    }

    /// Gibbs draw of each alpha0_k from the Pareto II likelihood of the
    /// instantiated atoms; with a Gumbel copula the draw is an independence
    /// proposal corrected by the copula density.
    pub fn update_alpha0<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let prior = match alpha0_prior(self.spec) {
            None | Some(Alpha0Prior::Fixed { .. }) => return,
            Some(p) => p,
        };
        let Centering::ParetoII { betas, theta, .. } = &self.spec.centering else {
            return;
        };
        let m = st.len();
        let d = self.spec.dim;
        for k in 0..d {
            let t: f64 = (0..m).map(|h| (st.atoms[h * d + k] / betas[k]).ln_1p()).sum();
            let (mut shape, mut rate) = match prior {
                Alpha0Prior::Gamma { shape, rate } => (shape + m as f64, rate + t),
                _ => (m as f64, t),
            };
            if !(shape > 0.0 && rate > 0.0 && rate.is_finite()) {
                self.stats.alpha0_fallbacks += 1;
                (shape, rate) = (1.0, 1.0);
            }
            let prop = gamma_variate(shape, rate, rng).max(f64::MIN_POSITIVE);
            if *theta == 1.0 {
                st.alpha0[k] = prop;
                continue;
            }
            let mut alt = st.alpha0.clone();
            alt[k] = prop;
            let ratio = self.copula_ln_density(st, &alt) - self.copula_ln_density(st, &st.alpha0);
            let ok = accept(ratio, rng);
            self.stats.alpha0.record(ok);
            if ok {
                st.alpha0 = alt;
            }
        }
    }

    fn copula_ln_density(&self, st: &ChainState, alpha0: &[f64]) -> f64 {
        let Ok(margins) = self.spec.pareto_margins(alpha0) else {
            return f64::NEG_INFINITY;
        };
        let cop = self.spec.copula();
        (0..st.len())
            .map(|h| {
                let a = st.atom(self.spec, h);
                cop.ln_pdf_neg_log(margins[0].neg_ln_cdf(a[0]), margins[1].neg_ln_cdf(a[1]))
            })
            .sum()
    }

    /// Random-walk MH on logit D against the stick-breaking likelihood of the
    /// non-terminal sticks.
    pub fn update_discount<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let DiscountPrior::Beta { a, b } = self.spec.discount else {
            return;
        };
        if self.spec.is_conditional() {
            return;
        }
        let movable = if st.is_terminal(self.spec) { st.len() - 1 } else { st.len() };
        let target = |dd: f64| -> f64 {
            let sticks: f64 = st.sticks[..movable]
                .iter()
                .enumerate()
                .map(|(h, &v)| {
                    let (p, q) = self.spec.stick_law(h + 1, dd);
                    ln_beta_pdf(v, p, q)
                })
                .sum();
            a * dd.ln() + b * (-dd).ln_1p() + sticks
        };
        let t = logit(st.discount) + self.steps.discount * std_normal(rng);
        if t.abs() > LOGIT_CLAMP {
            self.stats.discount.record(false);
            return;
        }
        let prop = logistic(t);
        let ok = accept(target(prop) - target(st.discount), rng);
        self.stats.discount.record(ok);
        if ok {
            st.discount = prop;
        }
    }

    /// Conjugate Gamma draw of the Erlang rate.
    pub fn update_lambda<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let Some(LambdaPrior::Gamma { shape, rate }) = lambda_prior(self.spec) else {
            return;
        };
        let d = self.spec.dim;
        let (mut sa, mut sr) = (0.0, 0.0);
        for (i, &z) in st.alloc.iter().enumerate() {
            for k in 0..d {
                let s = st.atoms[z * d + k];
                sa += s.ceil().max(1.0);
                sr += self.data.values()[i * d + k] / s;
            }
        }
        st.lambda = gamma_variate(shape + sa, rate + sr, rng).max(f64::MIN_POSITIVE);
    }

    /// MH move along the lambda/atom ridge: lambda -> c lambda and every
    /// instantiated atom sigma -> sqrt(c) sigma, which roughly keeps each
    /// kernel mean sigma^2 / lambda in place.
    pub fn update_rescale<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let Some(LambdaPrior::Gamma { shape, rate }) = lambda_prior(self.spec) else {
            return;
        };
        let d = self.spec.dim;
        let m = st.len();
        let ln_c = self.steps.rescale * std_normal(rng);
        let root = (0.5 * ln_c).exp();
        let atoms: Vec<f64> = st.atoms.iter().map(|s| s * root).collect();
        if !atoms.iter().all(|&s| s > 0.0 && s <= ATOM_MAX) {
            self.stats.rescale.record(false);
            return;
        }
        let lambda = st.lambda * ln_c.exp();
        let target = |atoms: &[f64], lambda: f64| -> f64 {
            let terms: Vec<ErlangTerms> = atoms.iter().map(|&s| erlang_terms(s, lambda)).collect();
            let ll: f64 = st
                .alloc
                .iter()
                .enumerate()
                .flat_map(|(i, &z)| (0..d).map(move |k| (i, z, k)))
                .map(|(i, z, k)| {
                    let c = &terms[z * d + k];
                    c[0] * self.ln_y[i * d + k] - c[1] * self.data.values()[i * d + k] - c[2]
                })
                .sum();
            let centering: f64 = (0..m)
                .map(|h| self.spec.ln_centering_density(&atoms[h * d..(h + 1) * d], &st.alpha0))
                .sum();
            ll + centering + ln_gamma_pdf(lambda, shape, rate)
        };
        let jacobian = ln_c * (1.0 + 0.5 * atoms.len() as f64);
        let ratio = target(&atoms, lambda) - target(&st.atoms, st.lambda) + jacobian;
        let ok = ratio.is_finite() && accept(ratio, rng);
        self.stats.rescale.record(ok);
        if ok {
            st.atoms = atoms;
            st.lambda = lambda;
        }
    }

    /// Componentwise random-walk MH on the stick regression coefficients.
    pub fn update_beta<R: Rng + ?Sized>(&mut self, st: &mut ChainState, rng: &mut R) {
        let Some(cov) = self.spec.covariates else {
            return;
        };
        let m = st.len();
        let movable = if st.is_terminal(self.spec) { m - 1 } else { m };
        let p = self.spec.design_dim();
        let wide = cov.slope_variance.sqrt();
        let (idx, start) = self.by_allocation(st);
        for h in 0..movable {
            let members = &idx[start[h]..];
            // approximate posterior precision: prior plus logistic information
            let precision = 1.0 / cov.slope_variance + 0.25 * members.len() as f64;
            let scale = self.steps.beta / precision.sqrt();
            let mut ll_cur = Self::stick_loglik(&self.fracs[h], members, &st.alloc, h);
            for j in 0..p {
                let mut beta = st.beta(self.spec, h).to_vec();
                let old = beta[j];
                // every other proposal at the prior scale, to cross saturated regions
                let s = if rng.random::<bool>() { scale } else { wide };
                beta[j] += s * std_normal(rng);
                let mut row = self.fracs[h].clone();
                for &i in members {
                    row[i] = dependent_fraction(&beta, &self.designs[i], st.sticks[h], h + 1);
                }
                let ll_new = Self::stick_loglik(&row, members, &st.alloc, h);
                let prior = (old * old - beta[j] * beta[j]) / (2.0 * cov.slope_variance);
                let ok = accept(ll_new - ll_cur + prior, rng);
                self.stats.beta.record(ok);
                if ok {
                    st.betas[h * p + j] = beta[j];
                    self.fracs[h] = row;
                    ll_cur = ll_new;
                }
            }
        }
    }
}

/// Number of leading sticks whose leftover mass falls below `min_u`, or
/// `None` if these sticks do not suffice.
pub fn covering_count(sticks: &[f64], min_u: f64) -> Option<usize> {
    let mut rest = 1.0;
    if rest <= min_u {
        return Some(0);
    }
    for (h, v) in sticks.iter().enumerate() {
        rest *= 1.0 - v;
        if rest <= min_u {
            return Some(h + 1);
        }
    }
    None
}

/// Index drawn with probability proportional to exp of the log weights; a
/// set of all-zero weights is treated as uniform.
pub(crate) fn draw_log_weighted<R: Rng + ?Sized>(cand: &[(usize, f64)], rng: &mut R) -> usize {
    let logs: Vec<f64> = cand.iter().map(|c| c.1).collect();
    let top = log_sum_exp(&logs);
    let u: f64 = rng.random();
    if !top.is_finite() {
        return cand[((u * cand.len() as f64) as usize).min(cand.len() - 1)].0;
    }
    let mut acc = 0.0;
    for &(h, l) in cand {
        acc += (l - top).exp();
        if u < acc {
            return h;
        }
    }
    cand[cand.len() - 1].0
}
