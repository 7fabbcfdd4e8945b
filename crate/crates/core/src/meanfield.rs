//! Phase biases of the clique and of the regular tree.
//!
//! The clique equation is `ln((1-α)/α) + 2β(2α-1) = 0`; for `β > 1` it has the
//! three roots `q⁻ < ½ < q⁺` with `q⁻ = 1 - q⁺`. The tree recursion is
//! `x = ((e^{2β}x + 1)/(x + e^{2β}))^{d-1}`, with non-trivial roots
//! `x̃⁺ > 1 > x̃⁻ = 1/x̃⁺` above the uniqueness threshold `β_d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::sigmoid;

/// Width of the bracketing scan for the clique root above ½.
const SCAN_POINTS: usize = 10_000;
const SCAN_EDGE: f64 = 1e-12;
/// `q⁺ - ½` below this raises the near-critical flag.
pub const NEAR_CRITICAL: f64 = 1e-4;
/// Required margin of `β` above the tree threshold.
pub const TREE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanFieldSolution {
    pub beta: f64,
    /// Sorted roots in `[0, 1]`.
    pub roots: Vec<f64>,
    pub q_minus: Option<f64>,
    pub q_plus: Option<f64>,
    pub near_critical: bool,
}

/// Derivative of the clique free entropy, `g(α) = ln((1-α)/α) + 2β(2α-1)`.
#[inline]
pub fn mean_field_residual(beta: f64, alpha: f64) -> f64 {
    (1.0 - alpha).ln() - alpha.ln() + 2.0 * beta * (2.0 * alpha - 1.0)
}

/// Bisects a sign change of `f` on `[lo, hi]` (`f(lo) > 0 >= f(hi)` or the
/// reverse) down to adjacent floating-point numbers.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let lo_positive = f(lo) > 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() <= f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Solves the clique mean-field equation.
pub fn solve_clique_fixed_points(beta: f64) -> Result<MeanFieldSolution> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if beta <= 1.0 {
        return Ok(MeanFieldSolution {
            beta,
            roots: vec![0.5],
            q_minus: None,
            q_plus: None,
            near_critical: false,
        });
    }
    let g = |a: f64| mean_field_residual(beta, a);
    let lo_edge = 0.5 + SCAN_EDGE;
    let hi_edge = 1.0 - SCAN_EDGE;
    let step = (hi_edge - lo_edge) / SCAN_POINTS as f64;
    let mut bracket = None;
    let mut prev = lo_edge;
    if g(prev) > 0.0 {
        for k in 1..=SCAN_POINTS {
            let a = if k == SCAN_POINTS {
                hi_edge
            } else {
                lo_edge + step * k as f64
            };
            if g(a) <= 0.0 {
                bracket = Some((prev, a));
                break;
            }
            prev = a;
        }
    }
    let q_plus = match bracket {
        Some((lo, hi)) => bisect(g, lo, hi),
        // β within rounding of 1: the root is indistinguishable from ½.
        None => lo_edge,
    };
    let q_minus = 1.0 - q_plus;
    Ok(MeanFieldSolution {
        beta,
        roots: vec![q_minus, 0.5, q_plus],
        q_minus: Some(q_minus),
        q_plus: Some(q_plus),
        near_critical: q_plus - 0.5 < NEAR_CRITICAL,
    })
}

/// Non-trivial fixed points of the ferromagnetic tree recursion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFixedPoint {
    pub d: usize,
    pub beta: f64,
    pub tilde_q_plus: f64,
    pub tilde_q_minus: f64,
    pub q_plus: f64,
    pub q_minus: f64,
}

/// The recursion map `x ↦ ((e^{2β}x + 1)/(x + e^{2β}))^{d-1}`.
pub fn tree_map(d: usize, beta: f64, x: f64) -> f64 {
    let e = (2.0 * beta).exp();
    ((e * x + 1.0) / (x + e)).powi(d as i32 - 1)
}

/// Log-ratio message through one edge: `ln((e^{2β}e^y + 1)/(e^y + e^{2β}))`.
#[inline]
fn edge_message(beta: f64, y: f64) -> f64 {
    2.0 * (beta.tanh() * (0.5 * y).tanh()).atanh()
}

/// Root log-odds `ln(q/(1-q))` given the incoming subtree log-ratio `y = ln x̃`.
#[inline]
fn root_log_odds(beta: f64, y: f64) -> f64 {
    y + edge_message(beta, y)
}

/// Solves the tree recursion above the uniqueness threshold `β_d`.
pub fn solve_tree_fixed_points(d: usize, beta: f64) -> Result<TreeFixedPoint> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "d must be at least 3, got {d}"
        )));
    }
    if !beta.is_finite() {
        return Err(Error::InvalidParameter("beta must be finite".into()));
    }
    let threshold = beta_d(d)?;
    if beta <= threshold + TREE_MARGIN {
        return Err(Error::NoFixedPoint(format!(
            "beta = {beta} is not above the uniqueness threshold {threshold} for d = {d}"
        )));
    }
    let branches = (d - 1) as f64;
    // In y = ln x the recursion is y = (d-1)·m(y); phi < 0 just above 0.
    let phi = |y: f64| y - branches * edge_message(beta, y);

    let mut lo = 1.0;
    let mut halvings = 0;
    while phi(lo) >= 0.0 {
        lo *= 0.5;
        halvings += 1;
        if halvings > 200 {
            return Err(Error::NonConvergence(
                "could not bracket the tree fixed point from below".into(),
            ));
        }
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while phi(hi) <= 0.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NonConvergence(
                "could not bracket the tree fixed point from above".into(),
            ));
        }
    }
    let y = bisect(phi, lo, hi);
    let tilde_q_plus = y.exp();
    let tilde_q_minus = 1.0 / tilde_q_plus;

    for x in [tilde_q_plus, tilde_q_minus] {
        let residual = (x - tree_map(d, beta, x)).abs() / x.max(1.0);
        if !(residual < 1e-10) {
            return Err(Error::NonConvergence(format!(
                "tree fixed point residual {residual:e} at x = {x}"
            )));
        }
    }

    let q_plus = sigmoid(root_log_odds(beta, tilde_q_plus.ln()));
    let q_minus = sigmoid(root_log_odds(beta, tilde_q_minus.ln()));
    Ok(TreeFixedPoint {
        d,
        beta,
        tilde_q_plus,
        tilde_q_minus,
        q_plus,
        q_minus,
    })
}

/// Tree uniqueness threshold `β_d = ½ ln(1 + 2/(d-2))`.
pub fn beta_d(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "d must be at least 3, got {d}"
        )));
    }
    Ok(0.5 * (2.0 / (d as f64 - 2.0)).ln_1p())
}

/// Friedman spectral width `λ_d = d + 2√(d-1)` of a random `d`-regular graph.
pub fn lambda_d(d: usize) -> Result<f64> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "d must be at least 3, got {d}"
        )));
    }
    Ok(d as f64 + 2.0 * (d as f64 - 1.0).sqrt())
}

/// Spectral-gap threshold `β_{d-1} λ_{d-1}` for `d`-sparse instances (`d >= 4`).
pub fn sparse_threshold(d: usize) -> Result<f64> {
    if d < 4 {
        return Err(Error::InvalidParameter(format!(
            "the sparse threshold needs d >= 4, got {d}"
        )));
    }
    Ok(beta_d(d - 1)? * lambda_d(d - 1)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConstants {
    pub d: usize,
    pub beta_d: f64,
    pub lambda_d: f64,
    /// Present for `d >= 4`.
    pub sparse_threshold: Option<f64>,
}

pub fn thresholds(d: usize) -> Result<ThresholdConstants> {
    Ok(ThresholdConstants {
        d,
        beta_d: beta_d(d)?,
        lambda_d: lambda_d(d)?,
        sparse_threshold: if d >= 4 {
            Some(sparse_threshold(d)?)
        } else {
            None
        },
    })
}
