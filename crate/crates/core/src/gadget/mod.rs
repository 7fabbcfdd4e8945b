//! Clique and random-regular gadgets with their phase-conditioned terminal laws.

mod clique;
mod regular;

pub use clique::{
    f_alpha, locate_maxima, minimal_admissible_n, select_gadget_size, stirling_gap, CliqueGadget,
    ExactPhaseMasses, MaximaReport,
};
pub use regular::{
    build_regular_gadget, random_regular_graph, verify_regular_gadget, RegularGadget,
    RegularGadgetReport, VerificationMethod, EXACT_VERIFY_CAP, REJECTION_CAP,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SpinConfiguration;

/// Largest terminal count for which a full `2^t` table is produced.
pub const TERMINAL_TABLE_CAP: usize = 20;

/// Sign of the non-terminal magnetization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseLabel {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl PhaseLabel {
    pub const BOTH: [PhaseLabel; 2] = [PhaseLabel::Plus, PhaseLabel::Minus];

    pub fn sign(self) -> i64 {
        match self {
            PhaseLabel::Plus => 1,
            PhaseLabel::Minus => -1,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            PhaseLabel::Plus => PhaseLabel::Minus,
            PhaseLabel::Minus => PhaseLabel::Plus,
        }
    }

    pub fn index(self) -> usize {
        match self {
            PhaseLabel::Plus => 0,
            PhaseLabel::Minus => 1,
        }
    }
}

/// Validates a terminal set and returns a membership mask.
pub fn terminal_mask(n: usize, terminals: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &s in terminals {
        if s >= n {
            return Err(Error::IndexOutOfRange {
                index: s,
                dimension: n,
            });
        }
        if mask[s] {
            return Err(Error::InvalidParameter(format!(
                "terminal {s} listed twice"
            )));
        }
        mask[s] = true;
    }
    let core = n - terminals.len();
    if core.is_multiple_of(2) {
        return Err(Error::EvenCore(core));
    }
    Ok(mask)
}

/// Phase of `sigma` with respect to the terminal set. The non-terminal count
/// must be odd so that no tie is possible.
pub fn phase_of(sigma: &SpinConfiguration, terminals: &[usize]) -> Result<PhaseLabel> {
    let mask = terminal_mask(sigma.len(), terminals)?;
    let sum: i64 = sigma
        .as_slice()
        .iter()
        .zip(&mask)
        .filter(|(_, &t)| !t)
        .map(|(&s, _)| i64::from(s))
        .sum();
    Ok(if sum > 0 {
        PhaseLabel::Plus
    } else {
        PhaseLabel::Minus
    })
}

/// Product measure with per-spin bias `q`: `q^{#plus} (1-q)^{#minus}`.
pub fn product_measure_prob(q: f64, tau: &[i8]) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("bias {q} outside (0, 1)")));
    }
    let mut log_p = 0.0;
    for &s in tau {
        log_p += match s {
            1 => q.ln(),
            -1 => (1.0 - q).ln(),
            _ => return Err(Error::InvalidSpin(i64::from(s))),
        };
    }
    Ok(log_p.exp())
}

/// Bias of the reference product measure for a phase, from the plus-phase bias.
pub fn phase_bias(q_plus: f64, phase: PhaseLabel) -> f64 {
    match phase {
        PhaseLabel::Plus => q_plus,
        PhaseLabel::Minus => 1.0 - q_plus,
    }
}

/// Conditional law of the terminal spins given a phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TerminalDistribution {
    pub phase: PhaseLabel,
    pub t: usize,
    /// Indexed by terminal bits; bit `k` set means terminal `k` is `+1`.
    pub probabilities: Vec<f64>,
    /// Reference bias used for `epsilon`, when one was supplied.
    pub reference_bias: Option<f64>,
    /// `max_τ |Pr[τ | phase] / Q(τ) - 1|` against the reference product measure.
    pub epsilon: Option<f64>,
}

impl TerminalDistribution {
    /// Attaches the deviation from the product measure with per-spin bias `q`.
    pub fn with_reference(mut self, q: f64) -> Result<Self> {
        let mut eps: f64 = 0.0;
        for (bits, &p) in self.probabilities.iter().enumerate() {
            let tau = SpinConfiguration::from_bits(self.t, bits as u64);
            let qp = product_measure_prob(q, tau.as_slice())?;
            eps = eps.max((p / qp - 1.0).abs());
        }
        self.reference_bias = Some(q);
        self.epsilon = Some(eps);
        Ok(self)
    }

    pub fn total_mass(&self) -> f64 {
        self.probabilities.iter().sum()
    }
}

/// Index of `-τ` in a terminal table of width `t`.
pub fn flipped_index(bits: usize, t: usize) -> usize {
    !bits & ((1usize << t) - 1)
}
