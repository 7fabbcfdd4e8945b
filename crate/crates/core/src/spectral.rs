//! Extreme eigenvalues and spectral certificates.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadget::random_regular_graph;
use crate::meanfield::lambda_d;
use crate::model::SymmetricInteraction;
use crate::reduction::{GadgetBlock, ReducedInstance};

/// Largest dimension solved with a dense symmetric eigendecomposition.
pub const DENSE_CAP: usize = 2000;
/// Default absolute tolerance, scaled by `max(1, max row sum)`.
pub const DEFAULT_TOL: f64 = 1e-10;

const LANCZOS_CHECK_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumMethod {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub gap: f64,
    /// Absolute accuracy bound on each extreme.
    pub tolerance: f64,
    pub method: SpectrumMethod,
}

fn scale_of(j: &SymmetricInteraction) -> f64 {
    j.max_abs_row_sum().max(1.0)
}

fn summary(lo: f64, hi: f64, tolerance: f64, method: SpectrumMethod) -> SpectrumSummary {
    SpectrumSummary {
        lambda_min: lo,
        lambda_max: hi,
        gap: (hi - lo).max(0.0),
        tolerance,
        method,
    }
}

/// Smallest and largest eigenvalue of a dense symmetric matrix.
pub fn dense_extremes(m: DMatrix<f64>) -> (f64, f64) {
    let ev = m.symmetric_eigenvalues();
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lanczos with full reorthogonalization. Returns `(λ_min, λ_max, residual)`
/// where the residual bounds the distance of each Ritz value to the spectrum.
pub fn lanczos_extremes(
    j: &SymmetricInteraction,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(f64, f64, f64)> {
    let n = j.dimension();
    let target = tol * scale_of(j);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|x| *x /= norm);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let cap = max_iter.min(n);
    loop {
        j.mul_vec(&q, &mut w);
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            axpy(-b, prev, &mut w);
        }
        let a = dot(&q, &w);
        axpy(-a, &q, &mut w);
        basis.push(std::mem::take(&mut q));
        alphas.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = dot(v, &w);
                axpy(-c, v, &mut w);
            }
        }
        let b = dot(&w, &w).sqrt();
        let k = alphas.len();
        let exhausted = b <= 1e-13 * scale_of(j) || k == cap;
        if exhausted || k.is_multiple_of(LANCZOS_CHECK_EVERY) {
            let mut t = DMatrix::<f64>::zeros(k, k);
            for i in 0..k {
                t[(i, i)] = alphas[i];
                if i + 1 < k {
                    t[(i, i + 1)] = betas[i];
                    t[(i + 1, i)] = betas[i];
                }
            }
            let eig = SymmetricEigen::new(t);
            let (imin, imax) = (0..k).fold((0, 0), |(lo, hi), i| {
                let v = eig.eigenvalues[i];
                (
                    if v < eig.eigenvalues[lo] { i } else { lo },
                    if v > eig.eigenvalues[hi] { i } else { hi },
                )
            });
            let residual = |i: usize| b * eig.eigenvectors[(k - 1, i)].abs();
            let res = residual(imin).max(residual(imax));
            if res <= target || b <= 1e-13 * scale_of(j) {
                return Ok((eig.eigenvalues[imin], eig.eigenvalues[imax], res));
            }
            if k == cap {
                return Err(Error::NonConvergence(format!(
                    "Lanczos residual {res:e} above {target:e} after {k} steps"
                )));
            }
        }
        betas.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
}

/// Extreme eigenvalues to absolute accuracy `tol · max(1, max row sum)`.
pub fn extreme_eigenvalues(j: &SymmetricInteraction, tol: f64) -> Result<SpectrumSummary> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    let bound = tol * scale_of(j);
    if j.dimension() <= DENSE_CAP {
        let (lo, hi) = dense_extremes(j.to_dense());
        return Ok(summary(lo, hi, bound, SpectrumMethod::Dense));
    }
    let (lo, hi, _) = lanczos_extremes(j, tol, 5000, 0)?;
    Ok(summary(lo, hi, bound, SpectrumMethod::Lanczos))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub spectrum: SpectrumSummary,
    pub gamma: f64,
    pub gap_below_gamma: bool,
    pub max_row_support: usize,
    pub row_support_limit: Option<usize>,
    pub row_support_ok: Option<bool>,
    pub pass: bool,
}

/// Checks the gap predicate and, when `d` is given, the per-row support bound.
/// Row support counts off-diagonal non-zeros.
pub fn validate_instance(
    j: &SymmetricInteraction,
    gamma: f64,
    d: Option<usize>,
    tol: f64,
) -> Result<ValidationReport> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} must be positive"
        )));
    }
    let spectrum = extreme_eigenvalues(j, tol)?;
    let support = j.max_row_support(false);
    let gap_below_gamma = spectrum.gap < gamma;
    let row_support_ok = d.map(|d| support <= d);
    Ok(ValidationReport {
        gamma,
        gap_below_gamma,
        max_row_support: support,
        row_support_limit: d,
        row_support_ok,
        pass: gap_below_gamma && row_support_ok.unwrap_or(true),
        spectrum,
    })
}

/// Weyl-type bound `gap(D + E) <= gap(D) + 2‖E‖`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeylCertificate {
    pub e_norm: f64,
    pub block_gap: f64,
    pub certified_bound: f64,
    pub measured_gap: f64,
    pub measured_e_norm: Option<f64>,
    pub bound_holds: bool,
    pub gamma: f64,
    pub bound_below_gamma: bool,
    /// Dense variant only: `n/r < (6γ+4)/(5γ+5)`.
    pub admissible: Option<bool>,
}

/// Certificate for a reduced instance. `‖E‖` is the largest matching weight,
/// exact because the matching edges are vertex-disjoint.
pub fn weyl_certificate(inst: &ReducedInstance, tol: f64) -> Result<WeylCertificate> {
    let mut seen = vec![false; inst.dimension()];
    for e in inst.matchings() {
        for v in [e.a, e.b] {
            if seen[v] {
                return Err(Error::InvalidInstance(format!(
                    "vertex {v} is covered by two matching edges"
                )));
            }
            seen[v] = true;
        }
    }
    let e_norm = inst
        .matchings()
        .iter()
        .map(|e| e.w.abs())
        .fold(0.0, f64::max);
    let block_gap = match inst.gadget() {
        GadgetBlock::Clique { n, t, beta } => beta * *n as f64 / (n - t) as f64,
        GadgetBlock::Regular { .. } => extreme_eigenvalues(&inst.gadget().interaction(), tol)?.gap,
    };
    let certified_bound = 2.0 * e_norm + block_gap;
    let measured = extreme_eigenvalues(inst.interaction(), tol)?;
    let e = inst.e_matrix();
    let measured_e_norm = if e.dimension() <= DENSE_CAP {
        let (lo, hi) = dense_extremes(e.to_dense());
        Some(lo.abs().max(hi.abs()))
    } else {
        None
    };
    let gamma = inst.params().gamma;
    Ok(WeylCertificate {
        e_norm,
        block_gap,
        certified_bound,
        measured_gap: measured.gap,
        measured_e_norm,
        bound_holds: measured.gap <= certified_bound + 1e-9,
        gamma,
        bound_below_gamma: certified_bound < gamma,
        admissible: inst.dense_admissible(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FriedmanReport {
    pub n: usize,
    pub d: usize,
    pub lambda_d: f64,
    pub slack: f64,
    pub bound: f64,
    pub seeds: Vec<u64>,
    pub gaps: Vec<f64>,
    pub passes: usize,
}

/// Adjacency gaps of seeded random `d`-regular graphs against `λ_d + slack`.
pub fn friedman_sweep(n: usize, d: usize, seeds: &[u64], slack: f64) -> Result<FriedmanReport> {
    let lambda = lambda_d(d)?;
    let bound = lambda + slack;
    let mut gaps = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let g = random_regular_graph(n, d, seed)?;
        let a = SymmetricInteraction::new(n, g.edges().iter().map(|&(u, v)| (u, v, 1.0)))?;
        gaps.push(extreme_eigenvalues(&a, DEFAULT_TOL)?.gap);
    }
    let passes = gaps.iter().filter(|&&g| g <= bound).count();
    Ok(FriedmanReport {
        n,
        d,
        lambda_d: lambda,
        slack,
        bound,
        seeds: seeds.to_vec(),
        gaps,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, density: f64, seed: u64) -> SymmetricInteraction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Vec::new();
        for i in 0..n {
            for j in i..n {
                if rng.random::<f64>() < density {
                    entries.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
        }
        SymmetricInteraction::new(n, entries).unwrap()
    }

    /// Roots of the characteristic polynomial of a 3×3 symmetric matrix by
    /// bisection on sign changes of `det(A - xI)`.
    fn cubic_roots(a: &DMatrix<f64>) -> Vec<f64> {
        let p = |x: f64| {
            let m = a - DMatrix::<f64>::identity(3, 3) * x;
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        };
        let bound = a.iter().map(|x| x.abs()).sum::<f64>() + 1.0;
        let steps = 200_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = p(prev_x);
        for s in 1..=steps {
            let x = -bound + 2.0 * bound * s as f64 / steps as f64;
            let v = p(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != v.signum() && v != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if p(mid).signum() == p(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = v;
        }
        roots
    }

    #[test]
    fn diagonal_closed_form() {
        let j = SymmetricInteraction::new(3, [(0, 0, -1.0), (2, 2, 2.0)]).unwrap();
        let s = extreme_eigenvalues(&j, 1e-12).unwrap();
        assert!((s.lambda_min + 1.0).abs() < 1e-10);
        assert!((s.lambda_max - 2.0).abs() < 1e-10);
        assert!((s.gap - 3.0).abs() < 1e-10);
    }

    #[test]
    fn rank_one_closed_form() {
        let (n, r, beta) = (12usize, 9usize, 1.4);
        let w = beta / r as f64;
        let entries = (0..n).flat_map(|i| (i..n).map(move |j| (i, j, w)));
        let j = SymmetricInteraction::new(n, entries).unwrap();
        let s = extreme_eigenvalues(&j, 1e-12).unwrap();
        assert!((s.lambda_max - beta * n as f64 / r as f64).abs() < 1e-10);
        assert!(s.lambda_min.abs() < 1e-10);
    }

    #[test]
    fn three_by_three_matches_characteristic_roots() {
        for seed in 0..5 {
            let j = random_symmetric(3, 1.0, seed);
            let roots = cubic_roots(&j.to_dense());
            assert_eq!(roots.len(), 3, "seed {seed}");
            let s = extreme_eigenvalues(&j, 1e-12).unwrap();
            assert!((s.lambda_min - roots[0]).abs() < 1e-9);
            assert!((s.lambda_max - roots[2]).abs() < 1e-9);
        }
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        for (n, seed) in [(60, 1), (300, 2), (500, 3)] {
            let j = random_symmetric(n, 0.05, seed);
            let (lo, hi) = dense_extremes(j.to_dense());
            let (llo, lhi, _) = lanczos_extremes(&j, 1e-11, n, seed).unwrap();
            assert!((lo - llo).abs() < 1e-7, "n={n}: {lo} vs {llo}");
            assert!((hi - lhi).abs() < 1e-7, "n={n}: {hi} vs {lhi}");
        }
    }

    #[test]
    fn lanczos_handles_low_rank() {
        let n = 40;
        let entries = (0..n).flat_map(|i| (i..n).map(move |j| (i, j, 0.5)));
        let j = SymmetricInteraction::new(n, entries).unwrap();
        let (lo, hi, _) = lanczos_extremes(&j, 1e-12, n, 7).unwrap();
        assert!((hi - 20.0).abs() < 1e-9);
        assert!(lo.abs() < 1e-9);
    }

    #[test]
    fn validation_examples() {
        let zero = SymmetricInteraction::zeros(5).unwrap();
        let r = validate_instance(&zero, 0.1, Some(0), 1e-12).unwrap();
        assert!(r.pass);
        assert_eq!(r.spectrum.gap, 0.0);

        let entries = (0..9).flat_map(|i| (i..9).map(move |j| (i, j, 1.5 / 7.0)));
        let clique = SymmetricInteraction::new(9, entries).unwrap();
        let r = validate_instance(&clique, 1.5, None, 1e-12).unwrap();
        assert!(!r.gap_below_gamma);
        assert!(!r.pass);
        assert!(validate_instance(&zero, 0.0, None, 1e-12).is_err());
    }

    #[test]
    fn friedman_small_sweep() {
        let rep = friedman_sweep(200, 4, &[1, 2, 3], 0.5).unwrap();
        assert_eq!(rep.gaps.len(), 3);
        for g in &rep.gaps {
            assert!(*g > 4.0 && *g <= 8.0 + 1e-9);
        }
    }
}
