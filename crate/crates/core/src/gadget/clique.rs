//! The complete-graph gadget `J = (β/r) 𝟙𝟙ᵀ` with `t` terminals.
//!
//! With `k` plus spins among the `r` non-terminals and terminal sum `s`, the
//! weight of the block is `C(r, k) · exp((β/2r)(2k - r + s)²)` per terminal
//! assignment, so every phase-conditioned quantity is a finite sum over `k`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{phase_bias, PhaseLabel, TerminalDistribution, TERMINAL_TABLE_CAP};
use crate::error::{Error, Result};
use crate::meanfield::solve_clique_fixed_points;
use crate::model::SymmetricInteraction;
use crate::numerics::{binary_entropy, LogFactorials, LogSumExp};

/// Largest non-terminal count accepted by the gadget-size search.
const SIZE_SEARCH_CAP: usize = 1 << 22;

#[derive(Debug, Clone)]
pub struct CliqueGadget {
    n: usize,
    t: usize,
    beta: f64,
    terminals: Vec<usize>,
    log_fact: LogFactorials,
}

impl CliqueGadget {
    /// Gadget on `n` vertices whose first `t` vertices are the terminals.
    pub fn new(n: usize, t: usize, beta: f64) -> Result<Self> {
        if t >= n {
            return Err(Error::InvalidParameter(format!(
                "terminal count {t} must be below gadget size {n}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta {beta} must be positive"
            )));
        }
        Ok(Self {
            n,
            t,
            beta,
            terminals: (0..t).collect(),
            log_fact: LogFactorials::new(n.max(t)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Number of non-terminal vertices.
    pub fn r(&self) -> usize {
        self.n - self.t
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    /// Every entry, diagonal included, equals `β/r`.
    pub fn coupling(&self) -> f64 {
        self.beta / self.r() as f64
    }

    /// Phase-dependent quantities need an odd non-terminal count.
    pub fn require_odd_core(&self) -> Result<()> {
        if self.r().is_multiple_of(2) {
            return Err(Error::EvenCore(self.r()));
        }
        Ok(())
    }

    pub fn interaction(&self) -> SymmetricInteraction {
        let w = self.coupling();
        let n = self.n;
        let entries = (0..n).flat_map(|i| (i..n).map(move |j| (i, j, w)));
        SymmetricInteraction::new(n, entries).expect("clique entries are valid")
    }

    /// `ln Z^{k/r}(τ)` for any `τ` with terminal sum `tau_sum`.
    pub fn z_alpha_tau(&self, k: usize, tau_sum: i64) -> Result<f64> {
        let r = self.r();
        if k > r {
            return Err(Error::InvalidParameter(format!("k = {k} exceeds r = {r}")));
        }
        let t = self.t as i64;
        if tau_sum.abs() > t || (tau_sum + t) % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "terminal sum {tau_sum} impossible for t = {t}"
            )));
        }
        Ok(self.log_block(k, tau_sum))
    }

    fn log_block(&self, k: usize, tau_sum: i64) -> f64 {
        let r = self.r();
        let m = (2 * k as i64 - r as i64 + tau_sum) as f64;
        self.log_fact.ln_binomial(r, k) + self.beta / (2.0 * r as f64) * m * m
    }

    fn k_range(&self, phase: Option<PhaseLabel>) -> std::ops::RangeInclusive<usize> {
        let r = self.r();
        match phase {
            None => 0..=r,
            Some(PhaseLabel::Plus) => r / 2 + 1..=r,
            Some(PhaseLabel::Minus) => 0..=(r - 1) / 2,
        }
    }

    /// `ln Σ_k Z^{k/r}(τ)` over the phase's `k` range (all `k` when `phase` is `None`).
    pub fn log_terminal_weight(&self, tau_sum: i64, phase: Option<PhaseLabel>) -> f64 {
        self.k_range(phase)
            .map(|k| self.log_block(k, tau_sum))
            .collect::<LogSumExp>()
            .value()
    }

    /// Per-configuration log weights indexed by the number of plus terminals.
    fn class_log_weights(&self, phase: Option<PhaseLabel>) -> Vec<f64> {
        let t = self.t as i64;
        (0..=t)
            .map(|j| self.log_terminal_weight(2 * j - t, phase))
            .collect()
    }

    fn log_mass(&self, weights: &[f64]) -> f64 {
        weights
            .iter()
            .enumerate()
            .map(|(j, &w)| self.log_fact.ln_binomial(self.t, j) + w)
            .collect::<LogSumExp>()
            .value()
    }

    /// `ln Z_J`.
    pub fn log_z(&self) -> f64 {
        self.log_mass(&self.class_log_weights(None))
    }

    /// `ln` of the total weight of each phase, `[plus, minus]`.
    pub fn log_phase_masses(&self) -> Result<[f64; 2]> {
        self.require_odd_core()?;
        Ok(PhaseLabel::BOTH.map(|p| self.log_mass(&self.class_log_weights(Some(p)))))
    }

    /// Probability of the plus phase.
    pub fn phase_balance(&self) -> Result<f64> {
        let [p, m] = self.log_phase_masses()?;
        Ok(1.0 / (1.0 + (m - p).exp()))
    }

    /// Conditional probability of one terminal configuration with `j` plus
    /// spins, for `j = 0..=t`.
    pub fn class_probabilities(&self, phase: PhaseLabel) -> Result<Vec<f64>> {
        self.require_odd_core()?;
        let w = self.class_log_weights(Some(phase));
        let norm = self.log_mass(&w);
        Ok(w.iter().map(|x| (x - norm).exp()).collect())
    }

    /// Exact conditional law of the terminals given the phase.
    pub fn terminal_distribution(&self, phase: PhaseLabel) -> Result<TerminalDistribution> {
        if self.t > TERMINAL_TABLE_CAP {
            return Err(Error::CapExceeded {
                what: "terminal count",
                value: self.t,
                cap: TERMINAL_TABLE_CAP,
            });
        }
        let per_class = self.class_probabilities(phase)?;
        let probabilities = (0..1usize << self.t)
            .map(|bits| per_class[bits.count_ones() as usize])
            .collect();
        let dist = TerminalDistribution {
            phase,
            t: self.t,
            probabilities,
            reference_bias: None,
            epsilon: None,
        };
        if self.beta > 1.0 {
            if let Some(q) = solve_clique_fixed_points(self.beta)?.q_plus {
                return dist.with_reference(phase_bias(q, phase));
            }
        }
        Ok(dist)
    }

    /// `max |Pr[τ | phase] / Q^{phase}(τ) - 1|` over both phases, against the
    /// product measure with plus-phase bias `q_plus`.
    pub fn epsilon_against(&self, q_plus: f64) -> Result<f64> {
        if !(q_plus > 0.0 && q_plus < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "bias {q_plus} outside (0, 1)"
            )));
        }
        let mut eps: f64 = 0.0;
        for phase in PhaseLabel::BOTH {
            let q = phase_bias(q_plus, phase);
            for (j, p) in self.class_probabilities(phase)?.into_iter().enumerate() {
                let log_q = j as f64 * q.ln() + (self.t - j) as f64 * (1.0 - q).ln();
                eps = eps.max((p / log_q.exp() - 1.0).abs());
            }
        }
        Ok(eps)
    }

    /// Deviation from the mean-field product measure; requires `β > 1`.
    pub fn epsilon(&self) -> Result<f64> {
        let q = solve_clique_fixed_points(self.beta)?
            .q_plus
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "beta {} has no separated phases (need beta > 1)",
                    self.beta
                ))
            })?;
        self.epsilon_against(q)
    }

    /// Phase masses as polynomials in `x = exp(β / 2r)` with integer coefficients.
    pub fn exact_phase_masses(&self) -> Result<ExactPhaseMasses> {
        self.require_odd_core()?;
        let r = self.r();
        let t = self.t;
        let binomials = |n: usize| {
            let mut row = vec![BigUint::one(); n + 1];
            for k in 1..=n {
                row[k] = &row[k - 1] * BigUint::from(n - k + 1) / BigUint::from(k);
            }
            row
        };
        let cr = binomials(r);
        let ct = binomials(t);
        let mut plus = BTreeMap::new();
        let mut minus = BTreeMap::new();
        for (k, ck) in cr.iter().enumerate() {
            let target = if 2 * k > r { &mut plus } else { &mut minus };
            for (j, cj) in ct.iter().enumerate() {
                let m = 2 * k as i64 - r as i64 + 2 * j as i64 - t as i64;
                let e = (m * m) as u64;
                *target.entry(e).or_insert_with(BigUint::zero) += ck * cj;
            }
        }
        Ok(ExactPhaseMasses { plus, minus })
    }
}

/// `Z_± = Σ_e coeff_e · x^e` with `x = exp(β / 2r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPhaseMasses {
    pub plus: BTreeMap<u64, BigUint>,
    pub minus: BTreeMap<u64, BigUint>,
}

impl ExactPhaseMasses {
    pub fn balanced(&self) -> bool {
        self.plus == self.minus
    }
}

/// `H(α) + (β/2)(2α - 1)²`.
pub fn f_alpha(beta: f64, alpha: f64) -> f64 {
    let m = 2.0 * alpha - 1.0;
    binary_entropy(alpha) + 0.5 * beta * m * m
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaximaReport {
    pub beta: f64,
    pub q_minus: f64,
    pub q_plus: f64,
    pub f_max: f64,
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Newton steps on `f'(α) = 0`, kept inside `(lo, hi)`.
fn newton_polish(beta: f64, mut x: f64, lo: f64, hi: f64) -> f64 {
    for _ in 0..50 {
        let g = ((1.0 - x) / x).ln() + 2.0 * beta * (2.0 * x - 1.0);
        let h = -1.0 / (x * (1.0 - x)) + 4.0 * beta;
        if h == 0.0 {
            break;
        }
        let next = x - g / h;
        if !(next > lo && next < hi) {
            break;
        }
        let done = (next - x).abs() <= 1e-16 * x.abs();
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Both maximizers of `f_alpha` for `β > 1`, found by direct maximization.
pub fn locate_maxima(beta: f64) -> Result<MaximaReport> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "f has a single maximum for beta = {beta}; need beta > 1"
        )));
    }
    let f = |a: f64| f_alpha(beta, a);
    let q_plus = newton_polish(beta, golden_max(f, 0.5, 1.0), 0.5, 1.0);
    let q_minus = newton_polish(beta, golden_max(f, 0.0, 0.5), 0.0, 0.5);
    Ok(MaximaReport {
        beta,
        q_minus,
        q_plus,
        f_max: f(q_plus),
    })
}

/// `(ln C(r, k), r·H(k/r))`, the exact log-binomial and its entropy form.
pub fn stirling_gap(r: usize, k: usize) -> (f64, f64) {
    let exact = LogFactorials::new(r).ln_binomial(r, k);
    (exact, r as f64 * binary_entropy(k as f64 / r as f64))
}

/// Smallest `n` with `n - t` odd and `n/r < (6γ+4)/(5γ+5)`.
pub fn minimal_admissible_n(gamma: f64, t: usize) -> Result<usize> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} must exceed 1"
        )));
    }
    let limit = (6.0 * gamma + 4.0) / (5.0 * gamma + 5.0);
    let estimate = (t as f64 / (limit - 1.0)).floor() as usize;
    let mut r = estimate.saturating_sub(2).max(1);
    loop {
        // Relative margin keeps exact boundary cases out despite rounding.
        if r % 2 == 1 && ((r + t) as f64) / (r as f64) < limit * (1.0 - 1e-12) {
            return Ok(r + t);
        }
        r += 1;
        if r > SIZE_SEARCH_CAP {
            return Err(Error::CapExceeded {
                what: "gadget size",
                value: r,
                cap: SIZE_SEARCH_CAP,
            });
        }
    }
}

/// Smallest admissible dense-gadget size whose measured `ε` is at most
/// `eps_target`, with `β = (1+γ)/2`.
pub fn select_gadget_size(gamma: f64, t: usize, eps_target: f64) -> Result<usize> {
    if !(eps_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon target {eps_target} must be positive"
        )));
    }
    let beta = 0.5 * (1.0 + gamma);
    let q = solve_clique_fixed_points(beta)?
        .q_plus
        .ok_or_else(|| Error::InvalidParameter(format!("beta {beta} must exceed 1")))?;
    let eps_at = |r: usize| CliqueGadget::new(r + t, t, beta)?.epsilon_against(q);
    let r_min = minimal_admissible_n(gamma, t)? - t;
    if eps_at(r_min)? <= eps_target {
        return Ok(r_min + t);
    }
    // Odd r only: index r = r_min + 2i.
    let mut lo = 0usize;
    let mut hi = 1usize;
    while eps_at(r_min + 2 * hi)? > eps_target {
        lo = hi;
        hi *= 2;
        if r_min + 2 * hi > SIZE_SEARCH_CAP {
            return Err(Error::CapExceeded {
                what: "gadget size",
                value: r_min + 2 * hi,
                cap: SIZE_SEARCH_CAP,
            });
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eps_at(r_min + 2 * mid)? > eps_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(r_min + 2 * hi + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{brute_force_log_z, log_z_by_class};
    use crate::numerics::log_sum_exp;

    fn brute_conditionals(g: &CliqueGadget) -> [Vec<f64>; 2] {
        let t = g.t();
        let r = g.r() as i64;
        let tmask = (1u64 << t) - 1;
        let logs = log_z_by_class(&g.interaction(), 2 << t, |bits| {
            let plus = i64::from((bits >> t).count_ones() as u8);
            let phase = if 2 * plus - r > 0 { 0 } else { 1 };
            Some((phase << t) | (bits & tmask) as usize)
        })
        .unwrap();
        let half = 1usize << t;
        [0, 1].map(|p| {
            let part = &logs[p * half..(p + 1) * half];
            let norm = log_sum_exp(part);
            part.iter().map(|x| (x - norm).exp()).collect()
        })
    }

    #[test]
    fn z_alpha_tau_examples() {
        let g = CliqueGadget::new(7, 0, 1.3).unwrap();
        assert!((g.z_alpha_tau(7, 0).unwrap() - 1.3 * 7.0 / 2.0).abs() < 1e-14);
        let g = CliqueGadget::new(12, 3, 1.7).unwrap();
        for k in 0..=9 {
            for s in [-3, -1, 1, 3] {
                let a = g.z_alpha_tau(k, s).unwrap();
                let b = g.z_alpha_tau(9 - k, -s).unwrap();
                assert_eq!(a, b);
            }
        }
        assert!(g.z_alpha_tau(10, 1).is_err());
        assert!(g.z_alpha_tau(3, 2).is_err());
        assert!(g.z_alpha_tau(3, 5).is_err());
    }

    #[test]
    fn block_sum_reproduces_partition_function() {
        let g = CliqueGadget::new(9, 2, 1.5).unwrap();
        let brute = brute_force_log_z(&g.interaction()).unwrap().log_z;
        assert!(((g.log_z() - brute) / brute).abs() < 1e-12);
    }

    #[test]
    fn empty_terminal_set_has_trivial_law() {
        let g = CliqueGadget::new(5, 0, 1.5).unwrap();
        let d = g.terminal_distribution(PhaseLabel::Plus).unwrap();
        assert_eq!(d.probabilities, vec![1.0]);
        assert_eq!(d.epsilon, Some(0.0));
    }

    #[test]
    fn conditionals_match_enumeration() {
        for (n, t, beta) in [(7, 2, 1.5), (10, 3, 1.2), (8, 1, 0.8)] {
            let g = CliqueGadget::new(n, t, beta).unwrap();
            let brute = brute_conditionals(&g);
            for phase in PhaseLabel::BOTH {
                let d = g.terminal_distribution(phase).unwrap();
                assert!((d.total_mass() - 1.0).abs() < 1e-12);
                for (a, b) in d.probabilities.iter().zip(&brute[phase.index()]) {
                    assert!(((a - b) / b).abs() < 1e-9, "{n} {t} {beta}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn flip_symmetry_of_conditionals() {
        let g = CliqueGadget::new(14, 3, 1.4).unwrap();
        let p = g.terminal_distribution(PhaseLabel::Plus).unwrap();
        let m = g.terminal_distribution(PhaseLabel::Minus).unwrap();
        for bits in 0..8 {
            let flipped = super::super::flipped_index(bits, 3);
            assert!((p.probabilities[bits] - m.probabilities[flipped]).abs() < 1e-12);
        }
        assert!((g.phase_balance().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn even_core_is_rejected_for_phase_operations() {
        let g = CliqueGadget::new(7, 3, 1.5).unwrap();
        assert!(matches!(g.require_odd_core(), Err(Error::EvenCore(4))));
        assert!(g.terminal_distribution(PhaseLabel::Plus).is_err());
        assert!(g.epsilon().is_err());
        assert!(g.log_z().is_finite());
        assert!(CliqueGadget::new(3, 3, 1.5).is_err());
        assert!(CliqueGadget::new(4, 1, 0.0).is_err());
    }

    #[test]
    fn exact_masses_balance() {
        for (n, t) in [(5, 0), (9, 2), (12, 3), (41, 2)] {
            let g = CliqueGadget::new(n, t, 1.5).unwrap();
            let masses = g.exact_phase_masses().unwrap();
            assert!(masses.balanced());
            let total: BigUint = masses.plus.values().chain(masses.minus.values()).sum();
            assert_eq!(total, BigUint::one() << n);
        }
    }

    // Computed independently in extended precision from the closed-form block sums.
    const EPSILON_ANCHORS: [(usize, f64); 5] = [
        (41, 0.292_001_156_640_718_6),
        (81, 0.094_202_643_503_604_98),
        (161, 0.040_436_469_280_141_156),
        (321, 0.019_079_682_875_922_13),
        (641, 0.009_289_312_848_453_57),
    ];

    #[test]
    fn epsilon_regression_anchors() {
        let mut prev = f64::INFINITY;
        for (n, want) in EPSILON_ANCHORS {
            let eps = CliqueGadget::new(n, 2, 1.5).unwrap().epsilon().unwrap();
            assert!(((eps - want) / want).abs() < 1e-9, "n={n}: {eps} vs {want}");
            assert!(eps < prev);
            prev = eps;
        }
    }

    #[test]
    fn f_alpha_examples() {
        assert!((f_alpha(1.7, 0.5) - 2f64.ln()).abs() < 1e-15);
        assert!((f_alpha(1.7, 0.0) - 0.85).abs() < 1e-15);
        assert!((f_alpha(1.7, 1.0) - 0.85).abs() < 1e-15);
    }

    #[test]
    fn maxima_match_mean_field_roots() {
        for beta in [1.1, 1.5, 2.0, 5.0] {
            let m = locate_maxima(beta).unwrap();
            let s = solve_clique_fixed_points(beta).unwrap();
            assert!((m.q_plus - s.q_plus.unwrap()).abs() < 1e-8);
            assert!((m.q_minus - s.q_minus.unwrap()).abs() < 1e-8);
            assert!(m.f_max > f_alpha(beta, 0.5));
        }
        assert!(locate_maxima(1.0).is_err());
    }

    #[test]
    fn grid_argmax_agrees() {
        let beta = 1.5;
        let steps = 1_000_000;
        let best = (0..=steps)
            .map(|i| 0.5 + 0.5 * i as f64 / steps as f64)
            .max_by(|a, b| f_alpha(beta, *a).total_cmp(&f_alpha(beta, *b)))
            .unwrap();
        assert!((best - locate_maxima(beta).unwrap().q_plus).abs() < 1e-6);
    }

    #[test]
    fn stirling_form_is_close_but_not_exact() {
        let (exact, approx) = stirling_gap(1000, 300);
        assert!(exact < approx);
        assert!(approx - exact < 5.0);
        assert_eq!(stirling_gap(10, 0), (0.0, 0.0));
    }

    #[test]
    fn admissible_sizes() {
        // r > t(5γ+5)/(γ-1), r odd.
        assert_eq!(minimal_admissible_n(1.5, 3).unwrap(), 80);
        assert_eq!(minimal_admissible_n(2.0, 3).unwrap(), 50);
        assert_eq!(minimal_admissible_n(1.2, 3).unwrap(), 170);
        assert_eq!(minimal_admissible_n(1.5, 6).unwrap(), 157);
        assert!(minimal_admissible_n(1.0, 3).is_err());
    }

    #[test]
    fn size_search_meets_target() {
        let n = select_gadget_size(1.5, 3, 0.1).unwrap();
        let beta = 1.25;
        assert!(CliqueGadget::new(n, 3, beta).unwrap().epsilon().unwrap() <= 0.1);
        assert!(
            CliqueGadget::new(n - 2, 3, beta)
                .unwrap()
                .epsilon()
                .unwrap()
                > 0.1
        );
        assert_eq!(n, 300);
    }
}
