//! Exact `ln Z` of a reduced instance from per-gadget terminal weights.
//!
//! Summing out each gadget's interior leaves a function of the terminal
//! spins only, so `Z = Σ_τ Π_v W(τ_v) · exp(Σ_matching w τ_a τ_b)` with one
//! term per assignment of all `t·m` terminals.

use rayon::prelude::*;

use super::ReducedInstance;
use crate::error::{Error, Result};
use crate::gadget::PhaseLabel;
use crate::numerics::LogSumExp;

/// Largest total terminal count for the outer sum.
pub const STRUCTURED_CAP: usize = 26;
const BLOCK_BITS: usize = 20;

struct OuterSum<'a> {
    t: usize,
    /// `tables[v][bits]` = `ln W_v` at terminal bits of copy `v`.
    tables: Vec<&'a [f64]>,
    /// Matching partner and weight per terminal bit.
    partner: Vec<Option<(usize, f64)>>,
}

impl OuterSum<'_> {
    fn total_bits(&self) -> usize {
        self.t * self.tables.len()
    }

    fn spin(bits: u64, k: usize) -> f64 {
        if bits >> k & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    fn block(&self, prefix: u64, low: usize) -> LogSumExp {
        let t = self.t;
        let m = self.tables.len();
        let tmask = (1u64 << t) - 1;
        let mut bits = prefix;
        let mut local: Vec<f64> = (0..m)
            .map(|v| self.tables[v][(bits >> (v * t) & tmask) as usize])
            .collect();
        let mut gadget_sum: f64 = local.iter().sum();
        let mut coupling: f64 = 0.0;
        for (k, p) in self.partner.iter().enumerate() {
            if let Some((q, w)) = *p {
                if k < q {
                    coupling += w * Self::spin(bits, k) * Self::spin(bits, q);
                }
            }
        }
        let mut acc = LogSumExp::new();
        acc.push(gadget_sum + coupling);
        for step in 1u64..(1u64 << low) {
            let k = step.trailing_zeros() as usize;
            if let Some((q, w)) = self.partner[k] {
                coupling -= 2.0 * w * Self::spin(bits, k) * Self::spin(bits, q);
            }
            bits ^= 1 << k;
            let v = k / t;
            let fresh = self.tables[v][(bits >> (v * t) & tmask) as usize];
            gadget_sum += fresh - local[v];
            local[v] = fresh;
            acc.push(gadget_sum + coupling);
        }
        acc
    }

    fn log_z(&self) -> f64 {
        let total = self.total_bits();
        let low = total.min(BLOCK_BITS);
        let parts: Vec<LogSumExp> = (0..1u64 << (total - low))
            .into_par_iter()
            .map(|b| self.block(b << low, low))
            .collect();
        let mut acc = LogSumExp::new();
        for p in &parts {
            acc.merge(p);
        }
        acc.value()
    }
}

fn outer_sum(
    inst: &ReducedInstance,
    include_matchings: bool,
    phases: Option<&[PhaseLabel]>,
) -> Result<f64> {
    let t = inst.gadget().t();
    let n = inst.gadget().n();
    let m = inst.copies();
    if t * m > STRUCTURED_CAP {
        return Err(Error::CapExceeded {
            what: "terminal count (structured partition function)",
            value: t * m,
            cap: STRUCTURED_CAP,
        });
    }
    if let Some(p) = phases {
        if p.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: p.len(),
            });
        }
    }
    let free = inst.gadget().terminal_log_weights(None)?;
    let (plus, minus) = if phases.is_some() {
        (
            inst.gadget().terminal_log_weights(Some(PhaseLabel::Plus))?,
            inst.gadget()
                .terminal_log_weights(Some(PhaseLabel::Minus))?,
        )
    } else {
        (Vec::new(), Vec::new())
    };
    let tables = (0..m)
        .map(|v| match phases.map(|p| p[v]) {
            None => free.as_slice(),
            Some(PhaseLabel::Plus) => plus.as_slice(),
            Some(PhaseLabel::Minus) => minus.as_slice(),
        })
        .collect();
    let bit_of = |x: usize| (x / n) * t + x % n;
    let mut partner = vec![None; t * m];
    if include_matchings {
        for e in inst.matchings() {
            let (a, b) = (bit_of(e.a), bit_of(e.b));
            partner[a] = Some((b, e.w));
            partner[b] = Some((a, e.w));
        }
    }
    Ok(OuterSum { t, tables, partner }.log_z())
}

/// `ln Z` of the full instance (`include_matchings`) or of its gadget blocks alone.
pub fn structured_log_z(inst: &ReducedInstance, include_matchings: bool) -> Result<f64> {
    outer_sum(inst, include_matchings, None)
}

/// Like [`structured_log_z`] with each gadget restricted to a given phase.
pub fn structured_log_z_phases(
    inst: &ReducedInstance,
    include_matchings: bool,
    phases: &[PhaseLabel],
) -> Result<f64> {
    outer_sum(inst, include_matchings, Some(phases))
}
