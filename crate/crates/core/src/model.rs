//! Interaction matrices, spin configurations and single-configuration quantities.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::sigmoid;

/// One stored coupling, `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// A symmetric interaction matrix `J` stored as its upper triangle.
///
/// An off-diagonal entry `(i, j, w)` sets `J_ij = J_ji = w`; a diagonal entry
/// `(i, i, w)` sets `J_ii = w`. Rows are kept as adjacency lists so that local
/// fields cost `O(row support)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricInteraction {
    dimension: usize,
    entries: Vec<Entry>,
    rows: Vec<Vec<(usize, f64)>>,
    diagonal: Vec<f64>,
}

impl SymmetricInteraction {
    /// Builds the matrix from `(i, j, w)` triples. Either index order is accepted;
    /// `(i, j)` and `(j, i)` name the same key and may not both appear.
    pub fn new<I>(dimension: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, w) in entries {
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if j >= dimension {
                return Err(Error::IndexOutOfRange {
                    index: j,
                    dimension,
                });
            }
            if !w.is_finite() {
                return Err(Error::NonFiniteWeight { i, j });
            }
            if map.insert((i, j), w).is_some() {
                return Err(Error::DuplicateEntry { i, j });
            }
        }
        let mut rows = vec![Vec::new(); dimension];
        let mut diagonal = vec![0.0; dimension];
        let entries: Vec<Entry> = map
            .into_iter()
            .map(|((i, j), w)| Entry { i, j, w })
            .collect();
        for e in &entries {
            if e.i == e.j {
                diagonal[e.i] = e.w;
            } else if e.w != 0.0 {
                rows[e.i].push((e.j, e.w));
                rows[e.j].push((e.i, e.w));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            dimension,
            entries,
            rows,
            diagonal,
        })
    }

    /// The all-zero matrix of the given size.
    pub fn zeros(dimension: usize) -> Result<Self> {
        Self::new(dimension, std::iter::empty())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Stored entries sorted by `(i, j)` with `i <= j`.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Off-diagonal non-zeros of row `i` as `(column, weight)`, sorted by column.
    #[inline]
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    #[inline]
    pub fn diagonal(&self, i: usize) -> f64 {
        self.diagonal[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diagonal[i];
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match self.rows[a].binary_search_by_key(&b, |&(c, _)| c) {
            Ok(pos) => self.rows[a][pos].1,
            Err(_) => 0.0,
        }
    }

    /// `½ Σ_i J_ii`: the constant every energy picks up from the diagonal.
    pub fn diagonal_energy(&self) -> f64 {
        0.5 * self.diagonal.iter().sum::<f64>()
    }

    /// Number of non-zero entries per row.
    pub fn row_support(&self, include_diagonal: bool) -> Vec<usize> {
        (0..self.dimension)
            .map(|i| self.rows[i].len() + usize::from(include_diagonal && self.diagonal[i] != 0.0))
            .collect()
    }

    pub fn max_row_support(&self, include_diagonal: bool) -> usize {
        self.row_support(include_diagonal)
            .into_iter()
            .max()
            .unwrap_or(0)
    }

    /// Maximum absolute row sum `‖J‖_∞`.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.dimension)
            .map(|i| {
                self.diagonal[i].abs() + self.rows[i].iter().map(|(_, w)| w.abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dimension, self.dimension);
        for e in &self.entries {
            m[(e.i, e.j)] = e.w;
            m[(e.j, e.i)] = e.w;
        }
        m
    }

    /// `y = J x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dimension {
            let mut acc = self.diagonal[i] * x[i];
            for &(j, w) in &self.rows[i] {
                acc += w * x[j];
            }
            y[i] = acc;
        }
    }

    /// Off-diagonal local field `h_i = Σ_{j≠i} J_ij σ_j`.
    #[inline]
    pub fn local_field(&self, spins: &[i8], i: usize) -> f64 {
        self.rows[i]
            .iter()
            .map(|&(j, w)| w * f64::from(spins[j]))
            .sum()
    }
}

/// A vector of ±1 spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfiguration(Vec<i8>);

impl TryFrom<Vec<i8>> for SpinConfiguration {
    type Error = Error;

    fn try_from(spins: Vec<i8>) -> Result<Self> {
        Self::new(spins)
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(s: SpinConfiguration) -> Self {
        s.0
    }
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(i64::from(bad)));
        }
        Ok(Self(spins))
    }

    pub fn all_plus(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn all_minus(n: usize) -> Self {
        Self(vec![-1; n])
    }

    /// Bit `k` of `bits` set means spin `k` is `+1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self(
            (0..n)
                .map(|k| if bits >> k & 1 == 1 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == 1)
            .fold(0u64, |acc, (k, _)| acc | 1 << k)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| i64::from(s)).sum()
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

fn check_dimension(j: &SymmetricInteraction, sigma: &SpinConfiguration) -> Result<()> {
    if j.dimension() != sigma.len() {
        return Err(Error::DimensionMismatch {
            expected: j.dimension(),
            got: sigma.len(),
        });
    }
    Ok(())
}

/// `½ σᵀ J σ = Σ_{i<j} J_ij σ_i σ_j + ½ Σ_i J_ii`.
pub fn energy(j: &SymmetricInteraction, sigma: &SpinConfiguration) -> Result<f64> {
    check_dimension(j, sigma)?;
    let s = sigma.as_slice();
    let mut acc = j.diagonal_energy();
    for e in j.entries() {
        if e.i != e.j {
            acc += e.w * f64::from(s[e.i] * s[e.j]);
        }
    }
    Ok(acc)
}

/// Heat-bath conditional `μ_J(σ_i = +1 | σ_{-i}) = 1 / (1 + exp(-2 h_i))`.
pub fn conditional_spin_probability(
    j: &SymmetricInteraction,
    sigma: &SpinConfiguration,
    i: usize,
) -> Result<f64> {
    check_dimension(j, sigma)?;
    if i >= j.dimension() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dimension: j.dimension(),
        });
    }
    Ok(sigmoid(2.0 * j.local_field(sigma.as_slice(), i)))
}

/// Total variation distance `½ Σ |p_x - q_x|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::InvalidDistribution(format!(
            "support sizes differ: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    for (name, d) in [("p", p), ("q", q)] {
        if d.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "{name} has a negative or non-finite mass"
            )));
        }
        let total: f64 = d.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "{name} sums to {total}"
            )));
        }
    }
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(tv.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique(n: usize, w: f64) -> SymmetricInteraction {
        let entries = (0..n).flat_map(|i| (i..n).map(move |j| (i, j, w)));
        SymmetricInteraction::new(n, entries).unwrap()
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            SymmetricInteraction::new(3, [(0, 1, 1.0), (1, 0, 2.0)]),
            Err(Error::DuplicateEntry { i: 0, j: 1 })
        ));
        assert!(matches!(
            SymmetricInteraction::new(3, [(0, 3, 1.0)]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            SymmetricInteraction::new(2, [(0, 1, f64::NAN)]),
            Err(Error::NonFiniteWeight { .. })
        ));
        assert!(SymmetricInteraction::new(0, []).is_err());
    }

    #[test]
    fn dense_is_symmetric_and_supports_count() {
        let j = SymmetricInteraction::new(4, [(0, 1, 0.5), (2, 1, -1.0), (3, 3, 2.0)]).unwrap();
        let d = j.to_dense();
        assert_eq!(d, d.transpose());
        assert_eq!(j.get(1, 2), -1.0);
        assert_eq!(j.get(2, 1), -1.0);
        assert_eq!(j.row_support(true), vec![1, 2, 1, 1]);
        assert_eq!(j.row_support(false), vec![1, 2, 1, 0]);
    }

    #[test]
    fn energy_of_empty_coupling_is_zero() {
        let j = SymmetricInteraction::new(1, [(0, 0, 0.0)]).unwrap();
        assert_eq!(energy(&j, &SpinConfiguration::all_plus(1)).unwrap(), 0.0);
    }

    #[test]
    fn clique_gadget_all_plus_energy() {
        let (n, r, beta) = (10usize, 7usize, 1.5);
        let j = clique(n, beta / r as f64);
        let e = energy(&j, &SpinConfiguration::all_plus(n)).unwrap();
        let want = beta * (n * n) as f64 / (2.0 * r as f64);
        assert!((e - want).abs() < 1e-12);
    }

    #[test]
    fn energy_matches_double_sum() {
        let j = SymmetricInteraction::new(
            5,
            [
                (0, 1, 0.3),
                (0, 4, -1.2),
                (1, 3, 0.7),
                (2, 2, 0.9),
                (2, 4, 0.25),
                (3, 4, -0.4),
            ],
        )
        .unwrap();
        let dense = j.to_dense();
        for bits in 0..32u64 {
            let s = SpinConfiguration::from_bits(5, bits);
            let mut want = 0.0;
            for a in 0..5 {
                for b in 0..5 {
                    want += 0.5 * dense[(a, b)] * f64::from(s.as_slice()[a] * s.as_slice()[b]);
                }
            }
            assert!((energy(&j, &s).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn energy_dimension_mismatch() {
        let j = SymmetricInteraction::zeros(3).unwrap();
        assert!(matches!(
            energy(&j, &SpinConfiguration::all_plus(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn conditional_of_isolated_spin() {
        let j = SymmetricInteraction::new(3, [(0, 1, 1.0)]).unwrap();
        let s = SpinConfiguration::all_plus(3);
        assert_eq!(conditional_spin_probability(&j, &s, 2).unwrap(), 0.5);
        assert!(conditional_spin_probability(&j, &s, 3).is_err());
    }

    #[test]
    fn conditional_on_clique_all_plus() {
        let (n, r, beta) = (10usize, 7usize, 1.5);
        let j = clique(n, beta / r as f64);
        let p = conditional_spin_probability(&j, &SpinConfiguration::all_plus(n), 0).unwrap();
        let h = beta * (n - 1) as f64 / r as f64;
        assert!((p - sigmoid(2.0 * h)).abs() < 1e-15);
    }

    #[test]
    fn total_variation_cases() {
        assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert!((total_variation(&[0.7, 0.3], &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert!(total_variation(&[1.0], &[0.5, 0.5]).is_err());
        assert!(total_variation(&[0.6, 0.6], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn spin_configuration_validation() {
        assert!(SpinConfiguration::new(vec![1, 0]).is_err());
        let s = SpinConfiguration::from_bits(4, 0b1010);
        assert_eq!(s.as_slice(), &[-1, 1, -1, 1]);
        assert_eq!(s.to_bits(), 0b1010);
        assert_eq!(s.negated().to_bits(), 0b0101);
    }
}
