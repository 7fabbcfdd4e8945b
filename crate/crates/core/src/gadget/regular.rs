//! Random `d`-regular gadgets `J = β·A(G)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{flipped_index, phase_bias, PhaseLabel};
use crate::enumerate::log_z_by_class;
use crate::error::{Error, Result};
use crate::glauber::{glauber_sweep, ChainState};
use crate::graph::Graph;
use crate::meanfield::{lambda_d, solve_tree_fixed_points};
use crate::model::{SpinConfiguration, SymmetricInteraction};
use crate::numerics::log_sum_exp;
use crate::spectral::{extreme_eigenvalues, DEFAULT_TOL};

/// Whole-graph rejections allowed before the sampler gives up.
pub const REJECTION_CAP: usize = 10_000;
/// Largest gadget verified by exhaustive enumeration.
pub const EXACT_VERIFY_CAP: usize = 24;
const TERMINAL_CAP: usize = 12;
const CHAINS_PER_PHASE: usize = 8;

/// Simple `d`-regular graph from the pairing model, rejecting any pairing with
/// a self-loop or repeated edge.
pub fn random_regular_graph(n: usize, d: usize, seed: u64) -> Result<Graph> {
    if d == 0 || n <= d {
        return Err(Error::InvalidGraph(format!(
            "need 0 < d < n for a simple d-regular graph (n = {n}, d = {d})"
        )));
    }
    if !(n * d).is_multiple_of(2) {
        return Err(Error::InvalidGraph(format!("d·n = {} is odd", n * d)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<usize> = (0..n * d).map(|p| p / d).collect();
    let mut seen = std::collections::HashSet::with_capacity(n * d / 2);
    'attempt: for _ in 0..REJECTION_CAP {
        points.shuffle(&mut rng);
        seen.clear();
        for pair in points.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
        }
        return Graph::new(n, seen.drain());
    }
    Err(Error::SamplingFailed(format!(
        "no simple {d}-regular pairing on {n} vertices within {REJECTION_CAP} attempts"
    )))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularGadget {
    pub d: usize,
    pub t: usize,
    pub beta: f64,
    pub seed: Option<u64>,
    pub graph: Graph,
}

impl RegularGadget {
    /// Terminals are the first `t` vertices; `n - t` must be odd.
    pub fn from_graph(graph: Graph, t: usize, beta: f64) -> Result<Self> {
        let n = graph.vertex_count();
        let d = graph
            .regular_degree()
            .ok_or_else(|| Error::InvalidGraph("gadget graph is not regular".into()))?;
        if t >= n {
            return Err(Error::InvalidParameter(format!(
                "terminal count {t} must be below gadget size {n}"
            )));
        }
        if (n - t).is_multiple_of(2) {
            return Err(Error::EvenCore(n - t));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta {beta} must be positive"
            )));
        }
        Ok(Self {
            d,
            t,
            beta,
            seed: None,
            graph,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn terminals(&self) -> Vec<usize> {
        (0..self.t).collect()
    }

    pub fn interaction(&self) -> SymmetricInteraction {
        let b = self.beta;
        SymmetricInteraction::new(self.n(), self.graph.edges().iter().map(|&(u, v)| (u, v, b)))
            .expect("graph edges are valid entries")
    }

    /// Exact `ln` terminal weights per phase, `[plus, minus]`, each indexed by
    /// terminal bits (`n <= 24`).
    pub fn exact_terminal_log_weights(&self) -> Result<[Vec<f64>; 2]> {
        let n = self.n();
        if n > EXACT_VERIFY_CAP {
            return Err(Error::CapExceeded {
                what: "gadget size (exact terminal weights)",
                value: n,
                cap: EXACT_VERIFY_CAP,
            });
        }
        let t = self.t;
        let r = (n - t) as i64;
        let tmask = (1u64 << t) - 1;
        let logs = log_z_by_class(&self.interaction(), 2 << t, |bits| {
            let plus = i64::from((bits >> t).count_ones());
            let phase = usize::from(2 * plus - r < 0);
            Some((phase << t) | (bits & tmask) as usize)
        })?;
        let half = 1usize << t;
        Ok([logs[..half].to_vec(), logs[half..].to_vec()])
    }
}

/// Samples a `d`-regular gadget on `n` vertices with `t` terminals.
pub fn build_regular_gadget(
    n: usize,
    d: usize,
    t: usize,
    beta: f64,
    seed: u64,
) -> Result<RegularGadget> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "gadget degree {d} must be at least 3"
        )));
    }
    let graph = random_regular_graph(n, d, seed)?;
    let mut g = RegularGadget::from_graph(graph, t, beta)?;
    g.seed = Some(seed);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerificationMethod {
    Exact,
    Glauber,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularGadgetReport {
    pub n: usize,
    pub d: usize,
    pub t: usize,
    pub beta: f64,
    pub spectral_gap: f64,
    /// `β·λ_d + epsilon_target`.
    pub spectral_bound: f64,
    pub spectral_ok: bool,
    /// Plus-phase probability; exactly ½ by the global flip when `n - t` is odd.
    pub phase_balance: f64,
    pub tree_q_plus: f64,
    pub method: VerificationMethod,
    pub samples_per_phase: Option<u64>,
    /// Conditional terminal laws indexed by terminal bits.
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    /// `max |Pr[τ | phase] / Q^{phase}(τ) - 1|` with tree biases.
    pub epsilon: f64,
    /// `max_i |Pr[σ_i = +1 | +] - q⁺|` over terminals.
    pub max_bias_deviation: f64,
    pub max_standard_error: Option<f64>,
    /// `max_τ |Pr[τ | +] - Pr[-τ | -]|`.
    pub flip_symmetry_gap: f64,
    pub epsilon_target: f64,
    pub sufficient_samples: bool,
}

fn phase_table_exact(g: &RegularGadget) -> Result<([Vec<f64>; 2], f64)> {
    let weights = g.exact_terminal_log_weights()?;
    let masses = weights.each_ref().map(|w| log_sum_exp(w));
    let tables = [0, 1].map(|p| {
        weights[p]
            .iter()
            .map(|x| (x - masses[p]).exp())
            .collect::<Vec<_>>()
    });
    let balance = 1.0 / (1.0 + (masses[1] - masses[0]).exp());
    Ok((tables, balance))
}

/// Per-phase empirical terminal tables from restricted chains, with the
/// largest standard error across chain means.
fn phase_table_sampled(
    g: &RegularGadget,
    samples: u64,
    seed: u64,
) -> Result<([Vec<f64>; 2], f64, u64)> {
    let j = g.interaction();
    let n = g.n();
    let t = g.t;
    let per_chain = samples.div_ceil(CHAINS_PER_PHASE as u64).max(1);
    let burn_in = 200;
    let mut tables = [vec![0.0; 1 << t], vec![0.0; 1 << t]];
    let mut max_se: f64 = 0.0;
    for phase in PhaseLabel::BOTH {
        let mut chain_means = Vec::with_capacity(CHAINS_PER_PHASE);
        for c in 0..CHAINS_PER_PHASE {
            let start = match phase {
                PhaseLabel::Plus => SpinConfiguration::all_plus(n),
                PhaseLabel::Minus => SpinConfiguration::all_minus(n),
            };
            let chain_seed = seed ^ ((phase.index() as u64) << 32) ^ c as u64;
            let mut state =
                ChainState::with_phase_restriction(&j, start, chain_seed, &g.terminals(), phase)?;
            for _ in 0..burn_in {
                glauber_sweep(&mut state, &j);
            }
            let mut counts = vec![0u64; 1 << t];
            for _ in 0..per_chain {
                glauber_sweep(&mut state, &j);
                let bits = (0..t)
                    .filter(|&k| state.spins()[k] == 1)
                    .fold(0usize, |b, k| b | 1 << k);
                counts[bits] += 1;
            }
            chain_means.push(
                counts
                    .iter()
                    .map(|&c| c as f64 / per_chain as f64)
                    .collect::<Vec<_>>(),
            );
        }
        let k = CHAINS_PER_PHASE as f64;
        for tau in 0..1 << t {
            let mean = chain_means.iter().map(|m| m[tau]).sum::<f64>() / k;
            let var = chain_means
                .iter()
                .map(|m| (m[tau] - mean).powi(2))
                .sum::<f64>()
                / (k - 1.0);
            max_se = max_se.max((var / k).sqrt());
            tables[phase.index()][tau] = mean;
        }
    }
    Ok((tables, max_se, per_chain * CHAINS_PER_PHASE as u64))
}

/// Checks the gadget's spectrum, phase balance and terminal conditionals
/// against the tree fixed point. Exact for `n <= 24`, sampled otherwise.
pub fn verify_regular_gadget(
    g: &RegularGadget,
    epsilon_target: f64,
    samples: u64,
    seed: u64,
) -> Result<RegularGadgetReport> {
    if g.t > TERMINAL_CAP {
        return Err(Error::CapExceeded {
            what: "terminal count",
            value: g.t,
            cap: TERMINAL_CAP,
        });
    }
    let tree = solve_tree_fixed_points(g.d, g.beta)?;
    let spectrum = extreme_eigenvalues(&g.interaction(), DEFAULT_TOL)?;
    let spectral_bound = g.beta * lambda_d(g.d)? + epsilon_target;

    let exact = g.n() <= EXACT_VERIFY_CAP;
    let (tables, balance, se, method, sample_count) = if exact {
        let (tables, balance) = phase_table_exact(g)?;
        (tables, balance, None, VerificationMethod::Exact, None)
    } else {
        let (tables, se, count) = phase_table_sampled(g, samples, seed)?;
        (
            tables,
            0.5,
            Some(se),
            VerificationMethod::Glauber,
            Some(count),
        )
    };

    let t = g.t;
    let mut epsilon: f64 = 0.0;
    let mut min_reference = f64::INFINITY;
    for phase in PhaseLabel::BOTH {
        let q = phase_bias(tree.q_plus, phase);
        for (bits, &p) in tables[phase.index()].iter().enumerate() {
            let plus = bits.count_ones() as i32;
            let reference = q.powi(plus) * (1.0 - q).powi(t as i32 - plus);
            min_reference = min_reference.min(reference);
            epsilon = epsilon.max((p / reference - 1.0).abs());
        }
    }
    let max_bias_deviation = (0..t)
        .map(|k| {
            let bias: f64 = tables[0]
                .iter()
                .enumerate()
                .filter(|(bits, _)| bits >> k & 1 == 1)
                .map(|(_, p)| p)
                .sum();
            (bias - tree.q_plus).abs()
        })
        .fold(0.0, f64::max);
    let flip_symmetry_gap = (0..1usize << t)
        .map(|b| (tables[0][b] - tables[1][flipped_index(b, t)]).abs())
        .fold(0.0, f64::max);
    // Three standard errors, relative to the smallest reference probability.
    let sufficient_samples = se.is_none_or(|s| 3.0 * s / min_reference <= epsilon_target);
    let [plus, minus] = tables;
    Ok(RegularGadgetReport {
        n: g.n(),
        d: g.d,
        t,
        beta: g.beta,
        spectral_gap: spectrum.gap,
        spectral_bound,
        spectral_ok: spectrum.gap <= spectral_bound,
        phase_balance: balance,
        tree_q_plus: tree.q_plus,
        method,
        samples_per_phase: sample_count,
        plus,
        minus,
        epsilon,
        max_bias_deviation,
        max_standard_error: se,
        flip_symmetry_gap,
        epsilon_target,
        sufficient_samples,
    })
}
