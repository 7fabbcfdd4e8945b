//! Ratio constants, the partition-function ratio window and MaxCut bounds.

use serde::{Deserialize, Serialize};

use super::{structured_log_z, GadgetBlock, ReducedInstance};
use crate::error::{Error, Result};
use crate::gadget::{verify_regular_gadget, EXACT_VERIFY_CAP};
use crate::graph::Graph;
use crate::meanfield::solve_clique_fixed_points;
use crate::numerics::LogSumExp;

/// Largest host graph for exhaustive MaxCut.
pub const MAXCUT_CAP: usize = 24;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxCutResult {
    pub maxcut: usize,
    pub vertices: usize,
    pub edges: usize,
    /// Expected size of a uniformly random cut, `|E|/2`.
    pub random_cut_floor: f64,
    pub floor_ok: bool,
}

/// Exact maximum cut over all bipartitions, vertex `m-1` pinned to one side.
pub fn brute_force_maxcut(h: &Graph) -> Result<MaxCutResult> {
    let m = h.vertex_count();
    if m > MAXCUT_CAP {
        return Err(Error::CapExceeded {
            what: "host vertices (brute-force MaxCut)",
            value: m,
            cap: MAXCUT_CAP,
        });
    }
    let half = if m == 0 { 1 } else { 1u64 << (m - 1) };
    let maxcut = (0..half).map(|side| h.cut_size(side)).max().unwrap_or(0);
    let floor = h.edge_count() as f64 / 2.0;
    Ok(MaxCutResult {
        maxcut,
        vertices: m,
        edges: h.edge_count(),
        random_cut_floor: floor,
        floor_ok: maxcut as f64 >= floor,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioConstants {
    pub a: f64,
    pub b: f64,
    pub q_plus: f64,
    pub w_minus: f64,
    /// `ψ(x, y) = exp(c · w₋ · x · y)`.
    pub psi_c: f64,
}

impl RatioConstants {
    pub fn log_b_over_a(&self) -> f64 {
        self.b.ln() - self.a.ln()
    }
}

/// Expected matching-edge weights between equal (`A`) and opposite (`B`)
/// phases under the product measures with bias `q_plus`.
pub fn compute_ab(w_minus: f64, q_plus: f64, c: f64) -> Result<RatioConstants> {
    if !(0.5..1.0).contains(&q_plus) {
        return Err(Error::InvalidParameter(format!(
            "q_plus {q_plus} outside [1/2, 1)"
        )));
    }
    let psi = |x: f64, y: f64| (c * w_minus * x * y).exp();
    let same = q_plus * q_plus + (1.0 - q_plus) * (1.0 - q_plus);
    let mixed = 2.0 * q_plus * (1.0 - q_plus);
    Ok(RatioConstants {
        a: same * psi(1.0, 1.0) + mixed * psi(1.0, -1.0),
        b: same * psi(-1.0, 1.0) + mixed * psi(1.0, 1.0),
        q_plus,
        w_minus,
        psi_c: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentConvention {
    /// `A` raised to the number of matching edges, `m·t/2`.
    MatchCount,
    /// `A` raised to `3·m·t/2`.
    ThreeHalvesMt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma4Config {
    pub psi_c: f64,
    pub exponent: ExponentConvention,
}

impl Default for Lemma4Config {
    fn default() -> Self {
        Self {
            psi_c: 1.0,
            exponent: ExponentConvention::MatchCount,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub m: usize,
    pub t: usize,
    pub n: usize,
    pub maxcut: usize,
    pub epsilon: f64,
    pub constants: RatioConstants,
    pub convention: Lemma4Config,
    pub e_match: usize,
    pub log_z_h: f64,
    pub log_z_blocks: f64,
    pub log_ratio: f64,
    /// `e·ln A + maxcut·(t/3)·ln(B/A)`.
    pub log_center: f64,
    pub ratio_over_center: f64,
    /// `(1-4ε)^m 2^{-m}`, or 0 when `4ε >= 1`.
    pub window_lower: f64,
    /// `(1+4ε)^m`.
    pub window_upper: f64,
    pub within_window: bool,
    /// `ln(A^e · 2^{-m} Σ_Y (B/A)^{cut(Y)·t/3})`, the phase-averaged prediction.
    pub log_phase_sum_center: f64,
    pub ratio_over_phase_sum: f64,
}

/// Plus-phase bias and `ε` of the instance's gadget.
fn gadget_bias_and_epsilon(inst: &ReducedInstance) -> Result<(f64, f64)> {
    match inst.gadget() {
        GadgetBlock::Clique { .. } => {
            let g = inst.gadget().clique().expect("clique block");
            let q = solve_clique_fixed_points(g.beta())?
                .q_plus
                .ok_or_else(|| Error::InvalidParameter("gadget beta must exceed 1".into()))?;
            Ok((q, g.epsilon_against(q)?))
        }
        GadgetBlock::Regular { gadget } => {
            if gadget.n() > EXACT_VERIFY_CAP {
                return Err(Error::CapExceeded {
                    what: "gadget size (exact terminal law)",
                    value: gadget.n(),
                    cap: EXACT_VERIFY_CAP,
                });
            }
            let rep = verify_regular_gadget(gadget, 0.0, 0, 0)?;
            Ok((rep.tree_q_plus, rep.epsilon))
        }
    }
}

fn exponent(inst: &ReducedInstance, convention: ExponentConvention) -> usize {
    let m = inst.copies();
    let t = inst.gadget().t();
    match convention {
        ExponentConvention::MatchCount => inst.matchings().len(),
        ExponentConvention::ThreeHalvesMt => 3 * m * t / 2,
    }
}

/// Compares the exact ratio `Z(H^G)/Z(blocks)` with its predicted window.
pub fn lemma4_check(inst: &ReducedInstance, config: Lemma4Config) -> Result<RatioReport> {
    let host = inst
        .host()
        .ok_or_else(|| Error::InvalidInstance("ratio check needs a host graph".into()))?;
    let maxcut = brute_force_maxcut(host)?.maxcut;
    let (q, epsilon) = gadget_bias_and_epsilon(inst)?;
    let constants = compute_ab(inst.params().w_minus, q, config.psi_c)?;
    let m = inst.copies();
    let t = inst.gadget().t();
    let e = exponent(inst, config.exponent);
    let log_z_h = structured_log_z(inst, true)?;
    let log_z_blocks = structured_log_z(inst, false)?;
    let log_ratio = log_z_h - log_z_blocks;
    let per_cut = t as f64 / 3.0 * constants.log_b_over_a();
    let base = e as f64 * constants.a.ln();
    let log_center = base + maxcut as f64 * per_cut;
    let phase_sum: LogSumExp = (0..1u64 << m)
        .map(|side| host.cut_size(side) as f64 * per_cut)
        .collect();
    let log_phase_sum_center = base - m as f64 * 2f64.ln() + phase_sum.value();

    let mf = m as f64;
    let log_lower = if 4.0 * epsilon < 1.0 {
        mf * (1.0 - 4.0 * epsilon).ln() - mf * 2f64.ln()
    } else {
        f64::NEG_INFINITY
    };
    let log_upper = mf * (1.0 + 4.0 * epsilon).ln();
    let rel = log_ratio - log_center;
    Ok(RatioReport {
        m,
        t,
        n: inst.gadget().n(),
        maxcut,
        epsilon,
        constants,
        convention: config,
        e_match: e,
        log_z_h,
        log_z_blocks,
        log_ratio,
        log_center,
        ratio_over_center: rel.exp(),
        window_lower: log_lower.exp(),
        window_upper: log_upper.exp(),
        within_window: log_lower <= rel && rel <= log_upper,
        log_phase_sum_center,
        ratio_over_phase_sum: (log_ratio - log_phase_sum_center).exp(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxCutBounds {
    pub lower: f64,
    pub upper: f64,
    pub width: f64,
}

/// Interval for `maxcut(H)` from `ln(Z(H^G)/Z(blocks))`, known up to an
/// additive `slack` (zero for exact partition functions).
pub fn maxcut_bounds(
    log_z_ratio: f64,
    constants: &RatioConstants,
    epsilon: f64,
    m: usize,
    t: usize,
    e_match: usize,
    slack: f64,
) -> Result<MaxCutBounds> {
    if !(0.0..0.25).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} must lie in [0, 1/4)"
        )));
    }
    if !(constants.b > constants.a) {
        return Err(Error::InvalidParameter("bounds need B > A".into()));
    }
    let mf = m as f64;
    let scale = 3.0 / (t as f64 * constants.log_b_over_a());
    let base = e_match as f64 * constants.a.ln();
    let lower = scale * (log_z_ratio - slack - base - mf * (1.0 + 4.0 * epsilon).ln());
    let upper =
        scale * (log_z_ratio + slack - base + mf * 2f64.ln() - mf * (1.0 - 4.0 * epsilon).ln());
    Ok(MaxCutBounds {
        lower,
        upper,
        width: upper - lower,
    })
}

/// `upper - lower` in closed form, with oracle error `δ` per spin.
pub fn maxcut_interval_width(
    constants: &RatioConstants,
    epsilon: f64,
    delta: f64,
    n: usize,
    m: usize,
    t: usize,
) -> f64 {
    let inner = 2f64.ln() - (1.0 - 4.0 * epsilon).ln()
        + (1.0 + 4.0 * epsilon).ln()
        + 2.0 * delta * n as f64;
    3.0 * m as f64 * inner / (t as f64 * constants.log_b_over_a())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MaxCutEstimate {
    pub log_z_ratio: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub constants: RatioConstants,
    pub bounds: MaxCutBounds,
    pub brute_force: Option<MaxCutResult>,
    pub contains_maxcut: Option<bool>,
}

/// MaxCut interval from the exact structured partition functions; `delta`
/// widens `ln Z` by `δ·m·n` to model an approximate oracle.
pub fn maxcut_estimate(
    inst: &ReducedInstance,
    delta: f64,
    config: Lemma4Config,
) -> Result<MaxCutEstimate> {
    if !(delta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "delta {delta} must be non-negative"
        )));
    }
    let (q, epsilon) = gadget_bias_and_epsilon(inst)?;
    let constants = compute_ab(inst.params().w_minus, q, config.psi_c)?;
    let m = inst.copies();
    let t = inst.gadget().t();
    let log_z_ratio = structured_log_z(inst, true)? - structured_log_z(inst, false)?;
    let slack = delta * (m * inst.gadget().n()) as f64;
    let bounds = maxcut_bounds(
        log_z_ratio,
        &constants,
        epsilon,
        m,
        t,
        exponent(inst, config.exponent),
        slack,
    )?;
    let brute_force = match inst.host() {
        Some(h) if h.vertex_count() <= MAXCUT_CAP => Some(brute_force_maxcut(h)?),
        _ => None,
    };
    let contains_maxcut = brute_force.as_ref().map(|b| {
        let c = b.maxcut as f64;
        bounds.lower <= c && c <= bounds.upper
    });
    Ok(MaxCutEstimate {
        log_z_ratio,
        epsilon,
        delta,
        constants,
        bounds,
        brute_force,
        contains_maxcut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_maxcut(&Graph::complete(4)).unwrap().maxcut, 4);
        assert_eq!(
            brute_force_maxcut(&Graph::complete_bipartite(3, 3))
                .unwrap()
                .maxcut,
            9
        );
        assert_eq!(brute_force_maxcut(&Graph::prism(3)).unwrap().maxcut, 7);
        let p = brute_force_maxcut(&Graph::petersen()).unwrap();
        assert_eq!(p.maxcut, 12);
        assert!(p.floor_ok);
        assert!((p.random_cut_floor - 7.5).abs() < 1e-15);
    }

    #[test]
    fn constants_at_symmetric_bias_coincide() {
        let k = compute_ab(-0.1, 0.5, 1.0).unwrap();
        assert_eq!(k.a, k.b);
        assert!((k.a - 0.1f64.cosh()).abs() < 1e-15);
        assert!(compute_ab(-0.1, 0.4, 1.0).is_err());
    }

    #[test]
    fn constants_frozen_values() {
        // Independent evaluation at γ = 1.5 (β = 1.25, w₋ = -0.1).
        let k = compute_ab(-0.1, 0.855_205_891_743_935_2, 1.0).unwrap();
        assert!((k.a - 0.954_451_521_626_518_7).abs() < 1e-12);
        assert!((k.b - 1.055_556_814_485_088_5).abs() < 1e-12);
        assert!(k.b > k.a);
        let k2 = compute_ab(-0.1, 0.855_205_891_743_935_2, 2.0).unwrap();
        assert!(k2.b > k2.a);
        assert!(k2.log_b_over_a() > k.log_b_over_a());
    }

    #[test]
    fn bounds_width_matches_closed_form() {
        let k = compute_ab(-0.1, 0.9, 1.0).unwrap();
        for (eps, delta) in [(0.0, 0.0), (0.1, 0.0), (0.05, 1e-3)] {
            let n = 50;
            let b = maxcut_bounds(3.0, &k, eps, 4, 6, 12, delta * 4.0 * n as f64).unwrap();
            let w = maxcut_interval_width(&k, eps, delta, n, 4, 6);
            assert!((b.width - w).abs() < 1e-9);
        }
        let w0 = maxcut_interval_width(&k, 0.0, 0.0, 10, 4, 3);
        assert!((w0 - 12.0 * 2f64.ln() / (3.0 * k.log_b_over_a())).abs() < 1e-12);
        assert!(maxcut_bounds(0.0, &k, 0.25, 4, 3, 6, 0.0).is_err());
        let flat = compute_ab(-0.1, 0.5, 1.0).unwrap();
        assert!(maxcut_bounds(0.0, &flat, 0.1, 4, 3, 6, 0.0).is_err());
    }

    #[test]
    fn window_widens_with_epsilon() {
        let m = 4.0f64;
        let lower = |e: f64| (1.0 - 4.0 * e).powf(m) * 0.5f64.powf(m);
        let upper = |e: f64| (1.0 + 4.0 * e).powf(m);
        assert!(lower(0.1) < lower(0.05) && upper(0.1) > upper(0.05));
    }
}
