//! Random-scan heat-bath Glauber dynamics.
//!
//! Local fields `h_i = Σ_{j≠i} J_ij σ_j` are cached and updated on every flip.
//! Matrices whose off-diagonal part is a constant all-to-all coupling keep only
//! the magnetization, which makes large clique chains cheap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadget::{terminal_mask, PhaseLabel};
use crate::model::{SpinConfiguration, SymmetricInteraction};
use crate::numerics::sigmoid;

/// Sweeps between field audits in debug builds.
pub const AUDIT_INTERVAL: u64 = 1000;
/// Largest trace length kept in a [`MixingReport`].
pub const TRACE_CAP: usize = 10_000;

#[derive(Debug, Clone)]
enum Fields {
    Sparse(Vec<f64>),
    /// `h_i = w (M - σ_i)`; `table[x + n]` holds `Pr[σ_i = +1]` at `M - σ_i = x`.
    Uniform {
        magnetization: i64,
        table: Vec<f64>,
        w: f64,
    },
}

#[derive(Debug, Clone)]
struct Restriction {
    terminal: Vec<bool>,
    phase: PhaseLabel,
    core_sum: i64,
}

#[derive(Debug, Clone)]
pub struct ChainState {
    spins: Vec<i8>,
    sweeps: u64,
    rng: ChaCha8Rng,
    fields: Fields,
    restriction: Option<Restriction>,
}

/// Constant off-diagonal coupling shared by every pair, if any.
fn uniform_coupling(j: &SymmetricInteraction) -> Option<f64> {
    let n = j.dimension();
    if n < 2 {
        return None;
    }
    let mut off = j.entries().iter().filter(|e| e.i != e.j);
    let w = off.next()?.w;
    let mut count = 1usize;
    for e in off {
        if e.w != w {
            return None;
        }
        count += 1;
    }
    (count == n * (n - 1) / 2).then_some(w)
}

fn recompute_fields(j: &SymmetricInteraction, spins: &[i8]) -> Vec<f64> {
    (0..spins.len()).map(|i| j.local_field(spins, i)).collect()
}

impl ChainState {
    pub fn new(j: &SymmetricInteraction, initial: SpinConfiguration, seed: u64) -> Result<Self> {
        Self::with_rng(j, initial, ChaCha8Rng::seed_from_u64(seed))
    }

    fn with_rng(
        j: &SymmetricInteraction,
        initial: SpinConfiguration,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        let n = j.dimension();
        if initial.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: initial.len(),
            });
        }
        let spins = initial.as_slice().to_vec();
        let fields = match uniform_coupling(j) {
            Some(w) => Fields::Uniform {
                magnetization: spins.iter().map(|&s| i64::from(s)).sum(),
                table: (0..=2 * n)
                    .map(|k| sigmoid(2.0 * w * (k as f64 - n as f64)))
                    .collect(),
                w,
            },
            None => Fields::Sparse(recompute_fields(j, &spins)),
        };
        Ok(Self {
            spins,
            sweeps: 0,
            rng,
            fields,
            restriction: None,
        })
    }

    /// Chain confined to one phase: flips that would change the sign of the
    /// non-terminal magnetization are rejected.
    pub fn with_phase_restriction(
        j: &SymmetricInteraction,
        initial: SpinConfiguration,
        seed: u64,
        terminals: &[usize],
        phase: PhaseLabel,
    ) -> Result<Self> {
        let terminal = terminal_mask(j.dimension(), terminals)?;
        let mut state = Self::new(j, initial, seed)?;
        let core_sum: i64 = state
            .spins
            .iter()
            .zip(&terminal)
            .filter(|(_, &t)| !t)
            .map(|(&s, _)| i64::from(s))
            .sum();
        if core_sum.signum() != phase.sign() {
            return Err(Error::InvalidParameter(
                "initial configuration is not in the requested phase".into(),
            ));
        }
        state.restriction = Some(Restriction {
            terminal,
            phase,
            core_sum,
        });
        Ok(state)
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn sweeps(&self) -> u64 {
        self.sweeps
    }

    pub fn magnetization(&self) -> i64 {
        match &self.fields {
            Fields::Uniform { magnetization, .. } => *magnetization,
            Fields::Sparse(_) => self.spins.iter().map(|&s| i64::from(s)).sum(),
        }
    }

    /// Cached local field at site `i`.
    pub fn field(&self, i: usize) -> f64 {
        match &self.fields {
            Fields::Sparse(h) => h[i],
            Fields::Uniform {
                magnetization, w, ..
            } => w * (magnetization - i64::from(self.spins[i])) as f64,
        }
    }

    fn plus_probability(&self, i: usize) -> f64 {
        match &self.fields {
            Fields::Sparse(h) => sigmoid(2.0 * h[i]),
            Fields::Uniform {
                magnetization,
                table,
                ..
            } => {
                let n = self.spins.len() as i64;
                table[(magnetization - i64::from(self.spins[i]) + n) as usize]
            }
        }
    }

    /// Heat-bath update at site `i`. Returns whether the spin flipped.
    pub fn update_site(&mut self, j: &SymmetricInteraction, i: usize) -> bool {
        let p = self.plus_probability(i);
        let u: f64 = self.rng.random();
        let new: i8 = if u < p { 1 } else { -1 };
        if new == self.spins[i] {
            return false;
        }
        if let Some(r) = &mut self.restriction {
            if !r.terminal[i] {
                let next = r.core_sum + 2 * i64::from(new);
                if next.signum() != r.phase.sign() {
                    return false;
                }
                r.core_sum = next;
            }
        }
        self.spins[i] = new;
        match &mut self.fields {
            Fields::Sparse(h) => {
                let delta = 2.0 * f64::from(new);
                for &(k, w) in j.row(i) {
                    h[k] += delta * w;
                }
            }
            Fields::Uniform { magnetization, .. } => *magnetization += 2 * i64::from(new),
        }
        true
    }

    /// Largest gap between cached and recomputed fields.
    pub fn audit(&self, j: &SymmetricInteraction) -> f64 {
        let fresh = recompute_fields(j, &self.spins);
        (0..self.spins.len())
            .map(|i| (self.field(i) - fresh[i]).abs())
            .fold(0.0, f64::max)
    }

    fn resync(&mut self, j: &SymmetricInteraction) {
        if let Fields::Sparse(h) = &mut self.fields {
            *h = recompute_fields(j, &self.spins);
        }
    }
}

/// `N` single-site heat-bath updates at uniformly random sites.
pub fn glauber_sweep(state: &mut ChainState, j: &SymmetricInteraction) {
    let n = state.spins.len();
    for _ in 0..n {
        let i = state.rng.random_range(0..n);
        state.update_site(j, i);
    }
    state.sweeps += 1;
    if state.sweeps.is_multiple_of(AUDIT_INTERVAL) {
        if cfg!(debug_assertions) {
            let scale = j.max_abs_row_sum().max(1.0);
            let drift = state.audit(j);
            debug_assert!(drift <= 1e-9 * scale, "cached field drift {drift:e}");
        }
        state.resync(j);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartState {
    AllPlus,
    AllMinus,
    Random,
}

impl std::str::FromStr for StartState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-plus" => Ok(Self::AllPlus),
            "all-minus" => Ok(Self::AllMinus),
            "random" => Ok(Self::Random),
            other => Err(Error::InvalidParameter(format!(
                "unknown start state `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Occupancy {
    pub plus: f64,
    pub minus: f64,
    /// Sweeps ending at zero magnetization (even `N` only).
    pub zero: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingReport {
    pub n: usize,
    pub seed: u64,
    pub sweeps: u64,
    pub start: StartState,
    /// Magnetization recorded every `trace_stride` sweeps.
    pub trace_stride: u64,
    pub magnetization_trace: Vec<i64>,
    pub occupancy: Occupancy,
    /// Changes of the sign of the total magnetization, zeros skipped.
    pub sign_changes: u64,
    /// First sweep whose magnetization sign opposes the starting phase.
    pub first_escape_sweep: Option<u64>,
}

/// Runs one chain and records phase statistics after every sweep.
pub fn mixing_experiment(
    j: &SymmetricInteraction,
    start: StartState,
    sweeps: u64,
    seed: u64,
) -> Result<MixingReport> {
    if sweeps == 0 {
        return Err(Error::InvalidParameter("sweeps must be at least 1".into()));
    }
    let n = j.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial = match start {
        StartState::AllPlus => SpinConfiguration::all_plus(n),
        StartState::AllMinus => SpinConfiguration::all_minus(n),
        StartState::Random => SpinConfiguration::new(
            (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )?,
    };
    let mut state = ChainState::with_rng(j, initial, rng)?;
    let stride = sweeps.div_ceil(TRACE_CAP as u64);
    let mut trace = Vec::new();
    let (mut plus, mut minus, mut zero) = (0u64, 0u64, 0u64);
    // Sign changes are counted over the recorded sweeps only.
    let mut last_sign = 0;
    let mut start_sign = state.magnetization().signum();
    let mut sign_changes = 0u64;
    let mut first_escape = None;
    for s in 1..=sweeps {
        glauber_sweep(&mut state, j);
        let m = state.magnetization();
        let sign = m.signum();
        match sign {
            1 => plus += 1,
            -1 => minus += 1,
            _ => zero += 1,
        }
        if sign != 0 {
            if start_sign == 0 {
                start_sign = sign;
            }
            if last_sign != 0 && sign != last_sign {
                sign_changes += 1;
            }
            if first_escape.is_none() && sign == -start_sign {
                first_escape = Some(s);
            }
            last_sign = sign;
        }
        if s % stride == 0 {
            trace.push(m);
        }
    }
    let total = sweeps as f64;
    Ok(MixingReport {
        n,
        seed,
        sweeps,
        start,
        trace_stride: stride,
        magnetization_trace: trace,
        occupancy: Occupancy {
            plus: plus as f64 / total,
            minus: minus as f64 / total,
            zero: zero as f64 / total,
        },
        sign_changes,
        first_escape_sweep: first_escape,
    })
}

/// Empirical law of the chain state, recorded after every single-site update,
/// indexed by configuration bits (`N <= 20`).
pub fn empirical_distribution(
    j: &SymmetricInteraction,
    updates: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = j.dimension();
    if n > 20 {
        return Err(Error::CapExceeded {
            what: "spin count (empirical table)",
            value: n,
            cap: 20,
        });
    }
    let mut state = ChainState::new(j, SpinConfiguration::all_plus(n), seed)?;
    let mut counts = vec![0u64; 1 << n];
    let mut bits: usize = (1 << n) - 1;
    for _ in 0..updates {
        let i = state.rng.random_range(0..n);
        if state.update_site(j, i) {
            bits ^= 1 << i;
        }
        counts[bits] += 1;
    }
    Ok(counts
        .into_iter()
        .map(|c| c as f64 / updates as f64)
        .collect())
}
