//! Exact partition functions over a common rational energy grid.
//!
//! When every off-diagonal weight is rational with common denominator `L`,
//! each energy is `c + k/L` for an integer `k`, and
//! `Z = e^c Σ_k count_k · e^{k/L}` with integer counts. Two such sums over the
//! same grid are equal exactly when their count maps coincide.

use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::model::SymmetricInteraction;
use crate::numerics::LogSumExp;

/// Largest dimension enumerated in exact mode.
pub const EXACT_CAP: usize = 20;

/// `Z = exp(offset) · Σ_k counts[k] · exp(k / grid)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPartition {
    pub offset: BigRational,
    pub grid: BigInt,
    pub counts: BTreeMap<i128, u64>,
}

impl ExactPartition {
    /// `ln Z` evaluated in floating point.
    pub fn ln_value(&self) -> f64 {
        let offset = self.offset.to_f64().unwrap_or(f64::NAN);
        let acc: LogSumExp = self
            .counts
            .iter()
            .map(|(&k, &c)| {
                let x = BigRational::new(BigInt::from(k), self.grid.clone())
                    .to_f64()
                    .unwrap_or(f64::NAN);
                (c as f64).ln() + x
            })
            .collect();
        offset + acc.value()
    }

    /// Total number of configurations represented.
    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Parses an exact weight: `p/q`, an integer, or a decimal with optional exponent.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::ExactModeUnavailable(format!("`{s}` is not a rational literal"));
    if s.contains('/') {
        return BigRational::from_str(s).map_err(|_| err());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((a, b)) => (a, b),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let numer =
        BigInt::from_str(&format!("{int_part}{frac_part}0")).map_err(|_| err())? / BigInt::from(10);
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

fn to_rational(w: f64, i: usize, j: usize) -> Result<BigRational> {
    BigRational::from_float(w).ok_or(Error::NonFiniteWeight { i, j })
}

/// Off-diagonal weights scaled onto the integer grid plus the diagonal offset.
struct IntegerCouplings {
    n: usize,
    offset: BigRational,
    grid: BigInt,
    rows: Vec<Vec<(usize, i128)>>,
}

impl IntegerCouplings {
    fn new(n: usize, entries: &[(usize, usize, BigRational)]) -> Result<Self> {
        if n > EXACT_CAP {
            return Err(Error::CapExceeded {
                what: "spin count (exact mode)",
                value: n,
                cap: EXACT_CAP,
            });
        }
        let mut offset = BigRational::zero();
        let mut grid = BigInt::one();
        for (i, j, w) in entries {
            if i == j {
                offset += w / BigRational::from_integer(BigInt::from(2));
            } else if !w.is_zero() {
                grid = grid.lcm(w.denom());
            }
        }
        let mut rows = vec![Vec::new(); n];
        let mut magnitude = BigInt::zero();
        for (i, j, w) in entries {
            if i == j || w.is_zero() {
                continue;
            }
            let scaled = (w * BigRational::from_integer(grid.clone())).to_integer();
            magnitude += scaled.abs();
            let v = scaled.to_i128().ok_or_else(|| {
                Error::ExactModeUnavailable("energy grid too fine for exact counting".into())
            })?;
            rows[*i].push((*j, v));
            rows[*j].push((*i, v));
        }
        // Energies and fields are bounded by Σ|w|·grid; keep them inside i128.
        if magnitude.to_i128().is_none_or(|m| m > i128::MAX / 4) {
            return Err(Error::ExactModeUnavailable(
                "energy grid too fine for exact counting".into(),
            ));
        }
        Ok(Self {
            n,
            offset,
            grid,
            rows,
        })
    }

    fn enumerate<F: FnMut(u64, i128)>(&self, mut visit: F) {
        let n = self.n;
        let mut spins = vec![-1i128; n];
        let mut fields: Vec<i128> = (0..n)
            .map(|i| self.rows[i].iter().map(|&(k, w)| w * spins[k]).sum())
            .collect();
        let mut energy: i128 = (0..n)
            .map(|i| {
                self.rows[i]
                    .iter()
                    .filter(|&&(k, _)| k > i)
                    .map(|&(k, w)| w * spins[i] * spins[k])
                    .sum::<i128>()
            })
            .sum();
        let mut bits = 0u64;
        visit(bits, energy);
        for step in 1u64..(1u64 << n) {
            let i = step.trailing_zeros() as usize;
            energy -= 2 * spins[i] * fields[i];
            spins[i] = -spins[i];
            for &(k, w) in &self.rows[i] {
                fields[k] += 2 * w * spins[i];
            }
            bits ^= 1 << i;
            visit(bits, energy);
        }
    }
}

fn entries_of(j: &SymmetricInteraction) -> Result<Vec<(usize, usize, BigRational)>> {
    j.entries()
        .iter()
        .map(|e| Ok((e.i, e.j, to_rational(e.w, e.i, e.j)?)))
        .collect()
}

/// Exact partition function from exact rational entries (`n <= 20`).
pub fn exact_partition_rational(
    n: usize,
    entries: &[(usize, usize, BigRational)],
) -> Result<ExactPartition> {
    Ok(exact_partition_classes(n, entries, 1, |_| Some(0))?.remove(0))
}

/// Exact partition function of a floating-point matrix; every finite `f64` is a
/// dyadic rational, so the conversion is exact.
pub fn exact_partition(j: &SymmetricInteraction) -> Result<ExactPartition> {
    exact_partition_rational(j.dimension(), &entries_of(j)?)
}

/// Exact partition functions restricted to configuration classes.
pub fn exact_partition_by_class<F>(
    j: &SymmetricInteraction,
    classes: usize,
    classify: F,
) -> Result<Vec<ExactPartition>>
where
    F: Fn(u64) -> Option<usize>,
{
    exact_partition_classes(j.dimension(), &entries_of(j)?, classes, classify)
}

fn exact_partition_classes<F>(
    n: usize,
    entries: &[(usize, usize, BigRational)],
    classes: usize,
    classify: F,
) -> Result<Vec<ExactPartition>>
where
    F: Fn(u64) -> Option<usize>,
{
    for (i, j, _) in entries {
        let hi = (*i).max(*j);
        if hi >= n {
            return Err(Error::IndexOutOfRange {
                index: hi,
                dimension: n,
            });
        }
    }
    let couplings = IntegerCouplings::new(n, entries)?;
    let mut counts = vec![BTreeMap::<i128, u64>::new(); classes];
    couplings.enumerate(|bits, e| {
        if let Some(c) = classify(bits) {
            *counts[c].entry(e).or_insert(0) += 1;
        }
    });
    Ok(counts
        .into_iter()
        .map(|counts| ExactPartition {
            offset: couplings.offset.clone(),
            grid: couplings.grid.clone(),
            counts,
        })
        .collect())
}
