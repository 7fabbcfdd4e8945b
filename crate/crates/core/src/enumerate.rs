//! Brute-force enumeration of `{±1}^N` in Gray-code order.
//!
//! Consecutive Gray-code states differ in one spin, so energy and local fields
//! update in `O(row support)` per state. The configuration space is split into
//! blocks by the high bits; blocks are independent and merged in log domain.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::SymmetricInteraction;
use crate::numerics::LogSumExp;

/// Largest dimension the enumerator accepts.
pub const BRUTE_FORCE_CAP: usize = 30;
/// Largest dimension for which the full probability table is materialized.
pub const TABLE_CAP: usize = 25;

const BLOCK_BITS: usize = 22;

/// Result of an exhaustive partition-function computation.
#[derive(Debug, Clone)]
pub struct GibbsSummary {
    pub log_z: f64,
    /// `probabilities[bits]` for every configuration, bit `k` set meaning `σ_k = +1`.
    pub probabilities: Option<Vec<f64>>,
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::CapExceeded {
            what: "spin count",
            value: n,
            cap,
        });
    }
    Ok(())
}

/// Gray-code walk over the low `low_bits` spins with the high spins fixed by `prefix`.
/// Calls `visit(bits, energy)` once per configuration.
fn walk_block<F: FnMut(u64, f64)>(
    j: &SymmetricInteraction,
    prefix: u64,
    low_bits: usize,
    mut visit: F,
) {
    let n = j.dimension();
    let mut spins: Vec<i8> = (0..n)
        .map(|k| if prefix >> k & 1 == 1 { 1 } else { -1 })
        .collect();
    let mut fields: Vec<f64> = (0..n).map(|i| j.local_field(&spins, i)).collect();
    let mut energy = j.diagonal_energy()
        + j.entries()
            .iter()
            .filter(|e| e.i != e.j)
            .map(|e| e.w * f64::from(spins[e.i] * spins[e.j]))
            .sum::<f64>();
    let mut bits = prefix;
    visit(bits, energy);
    for step in 1u64..(1u64 << low_bits) {
        let i = step.trailing_zeros() as usize;
        let old = f64::from(spins[i]);
        energy -= 2.0 * old * fields[i];
        spins[i] = -spins[i];
        let new = -old;
        for &(k, w) in j.row(i) {
            fields[k] += 2.0 * w * new;
        }
        bits ^= 1 << i;
        visit(bits, energy);
    }
}

fn block_layout(n: usize) -> (usize, u64) {
    let low = n.min(BLOCK_BITS);
    (low, 1u64 << (n - low))
}

/// Visits every configuration with its energy `½σᵀJσ`, sequentially.
pub fn for_each_state<F: FnMut(u64, f64)>(j: &SymmetricInteraction, mut visit: F) -> Result<()> {
    let n = j.dimension();
    check_cap(n, BRUTE_FORCE_CAP)?;
    let (low, blocks) = block_layout(n);
    for b in 0..blocks {
        walk_block(j, b << low, low, &mut visit);
    }
    Ok(())
}

/// `log Z_J` by exhaustive enumeration, accumulated with a running max shift.
pub fn brute_force_log_z(j: &SymmetricInteraction) -> Result<GibbsSummary> {
    let n = j.dimension();
    check_cap(n, BRUTE_FORCE_CAP)?;
    let (low, blocks) = block_layout(n);
    // Collected in block order so the merge does not depend on scheduling.
    let parts: Vec<LogSumExp> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = LogSumExp::new();
            walk_block(j, b << low, low, |_, e| acc.push(e));
            acc
        })
        .collect();
    let mut acc = LogSumExp::new();
    for p in &parts {
        acc.merge(p);
    }
    Ok(GibbsSummary {
        log_z: acc.value(),
        probabilities: None,
    })
}

/// Exhaustive enumeration that also returns the full Gibbs table (`N <= 25`).
pub fn brute_force_gibbs_table(j: &SymmetricInteraction) -> Result<GibbsSummary> {
    let n = j.dimension();
    check_cap(n, TABLE_CAP)?;
    let mut energies = vec![0.0; 1usize << n];
    let mut acc = LogSumExp::new();
    for_each_state(j, |bits, e| {
        energies[bits as usize] = e;
        acc.push(e);
    })?;
    let log_z = acc.value();
    let probabilities = energies.into_iter().map(|e| (e - log_z).exp()).collect();
    Ok(GibbsSummary {
        log_z,
        probabilities: Some(probabilities),
    })
}

/// Log partition function split by a user-supplied class label per configuration.
/// Configurations mapped to `None` are dropped.
pub fn log_z_by_class<F>(j: &SymmetricInteraction, classes: usize, classify: F) -> Result<Vec<f64>>
where
    F: Fn(u64) -> Option<usize> + Sync,
{
    let n = j.dimension();
    check_cap(n, BRUTE_FORCE_CAP)?;
    let (low, blocks) = block_layout(n);
    let parts: Vec<Vec<LogSumExp>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut accs = vec![LogSumExp::new(); classes];
            walk_block(j, b << low, low, |bits, e| {
                if let Some(c) = classify(bits) {
                    accs[c].push(e);
                }
            });
            accs
        })
        .collect();
    let mut accs = vec![LogSumExp::new(); classes];
    for part in &parts {
        for (x, y) in accs.iter_mut().zip(part) {
            x.merge(y);
        }
    }
    Ok(accs.iter().map(LogSumExp::value).collect())
}
