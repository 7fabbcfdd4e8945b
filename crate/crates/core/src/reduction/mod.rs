//! Gadget reduction from cubic MaxCut instances to Ising interaction matrices.
//!
//! Every host vertex becomes a copy of one gadget. Its terminals are split
//! into three equal groups, one per host neighbour (neighbours in sorted
//! order), and each host edge becomes `t/3` antiferromagnetic matching edges
//! paired in index order.

mod bounds;
mod partition;

pub use bounds::{
    brute_force_maxcut, compute_ab, lemma4_check, maxcut_bounds, maxcut_estimate,
    maxcut_interval_width, ExponentConvention, Lemma4Config, MaxCutBounds, MaxCutEstimate,
    MaxCutResult, RatioConstants, RatioReport, MAXCUT_CAP,
};
pub use partition::{structured_log_z, structured_log_z_phases, STRUCTURED_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadget::{build_regular_gadget, CliqueGadget, PhaseLabel, RegularGadget};
use crate::graph::Graph;
use crate::meanfield::{beta_d, lambda_d};
use crate::model::SymmetricInteraction;
use crate::numerics::log_sum_exp;
use crate::spectral::{extreme_eigenvalues, DEFAULT_TOL};

/// Version tag written into every serialized instance.
pub const META_SCHEMA_VERSION: u32 = 1;
/// Gadget resampling attempts in the sparse variant.
const GADGET_RESAMPLE_CAP: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionParams {
    pub variant: Variant,
    pub gamma: f64,
    pub beta: f64,
    pub w_minus: f64,
    pub eta: Option<f64>,
    pub t: usize,
    pub n: usize,
    pub d: Option<usize>,
    pub seed: Option<u64>,
}

impl ReductionParams {
    /// Dense clique variant: `β = (1+γ)/2`, `w₋ = (1-γ)/5`. Without `n`, the
    /// smallest admissible gadget size is used.
    pub fn dense(gamma: f64, t: usize, n: Option<usize>) -> Result<Self> {
        if !(gamma > 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma {gamma} must exceed 1 (beta = (1+gamma)/2 must exceed 1)"
            )));
        }
        let n = match n {
            Some(n) => n,
            None => crate::gadget::minimal_admissible_n(gamma, t)?,
        };
        let p = Self {
            variant: Variant::Dense,
            gamma,
            beta: 0.5 * (1.0 + gamma),
            w_minus: (1.0 - gamma) / 5.0,
            eta: None,
            t,
            n,
            d: None,
            seed: None,
        };
        p.validate()?;
        Ok(p)
    }

    /// Default `η = min(0.01, (γ - β_{d-1}λ_{d-1}) / (λ_{d-1} + β_{d-1} + 3))`.
    pub fn default_eta(gamma: f64, d: usize) -> Result<f64> {
        let (b, l) = (beta_d(d - 1)?, lambda_d(d - 1)?);
        Ok(f64::min(0.01, (gamma - b * l) / (l + b + 3.0)))
    }

    /// Sparse variant on a `(d-1)`-regular gadget: `β = β_{d-1} + η`, `w₋ = -η`.
    pub fn sparse(
        gamma: f64,
        d: usize,
        t: usize,
        n: usize,
        eta: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        if d < 4 {
            return Err(Error::InvalidParameter(format!(
                "degree bound {d} must be at least 4"
            )));
        }
        let eta = match eta {
            Some(e) => e,
            None => Self::default_eta(gamma, d)?,
        };
        let p = Self {
            variant: Variant::Sparse,
            gamma,
            beta: beta_d(d - 1)? + eta,
            w_minus: -eta,
            eta: Some(eta),
            t,
            n,
            d: Some(d),
            seed: Some(seed),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.t == 0 || !self.t.is_multiple_of(3) {
            return bad(format!("t = {} must be a positive multiple of 3", self.t));
        }
        if self.n <= self.t {
            return bad(format!("gadget size {} must exceed t = {}", self.n, self.t));
        }
        if !(self.w_minus < 0.0) {
            return bad(format!("matching weight {} must be negative", self.w_minus));
        }
        match self.variant {
            Variant::Dense => {
                if !(self.gamma > 1.0) {
                    return bad(format!("gamma {} must exceed 1", self.gamma));
                }
                if (self.beta - 0.5 * (1.0 + self.gamma)).abs() > 1e-12 {
                    return bad("dense beta must equal (1+gamma)/2".into());
                }
            }
            Variant::Sparse => {
                let d = self.d.ok_or_else(|| {
                    Error::InvalidParameter("sparse variant needs a degree bound d".into())
                })?;
                if d < 4 {
                    return bad(format!("degree bound {d} must be at least 4"));
                }
                let eta = self.eta.unwrap_or(-self.w_minus);
                if !(eta > 0.0) {
                    return bad(format!("eta {eta} must be positive"));
                }
                let lambda = lambda_d(d - 1)? + eta;
                if !(self.beta * lambda + 2.0 * eta < self.gamma) {
                    return bad(format!(
                        "beta·lambda + 2·eta = {} is not below gamma = {}",
                        self.beta * lambda + 2.0 * eta,
                        self.gamma
                    ));
                }
                if !(self.n * (d - 1)).is_multiple_of(2) {
                    return bad(format!("n·(d-1) = {} is odd", self.n * (d - 1)));
                }
            }
        }
        Ok(())
    }

    /// `n/r < (6γ+4)/(5γ+5)` for the dense variant.
    pub fn dense_admissible(&self) -> Option<bool> {
        (self.variant == Variant::Dense).then(|| {
            let ratio = self.n as f64 / (self.n - self.t) as f64;
            ratio < (6.0 * self.gamma + 4.0) / (5.0 * self.gamma + 5.0)
        })
    }
}

/// A MaxCut host graph; the reduction needs it to be cubic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxCutInstance {
    pub graph: Graph,
    pub cubic: bool,
}

impl MaxCutInstance {
    pub fn new(graph: Graph) -> Self {
        let cubic = graph.is_regular(3);
        Self { graph, cubic }
    }
}

/// The gadget replicated at every host vertex; terminals are local vertices `0..t`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GadgetBlock {
    Clique { n: usize, t: usize, beta: f64 },
    Regular { gadget: RegularGadget },
}

impl GadgetBlock {
    pub fn n(&self) -> usize {
        match self {
            GadgetBlock::Clique { n, .. } => *n,
            GadgetBlock::Regular { gadget } => gadget.n(),
        }
    }

    pub fn t(&self) -> usize {
        match self {
            GadgetBlock::Clique { t, .. } => *t,
            GadgetBlock::Regular { gadget } => gadget.t,
        }
    }

    pub fn beta(&self) -> f64 {
        match self {
            GadgetBlock::Clique { beta, .. } => *beta,
            GadgetBlock::Regular { gadget } => gadget.beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GadgetBlock::Clique { n, t, beta } => CliqueGadget::new(*n, *t, *beta).map(|_| ()),
            GadgetBlock::Regular { gadget } => {
                RegularGadget::from_graph(gadget.graph.clone(), gadget.t, gadget.beta).map(|_| ())
            }
        }
    }

    pub fn clique(&self) -> Option<CliqueGadget> {
        match self {
            GadgetBlock::Clique { n, t, beta } => CliqueGadget::new(*n, *t, *beta).ok(),
            GadgetBlock::Regular { .. } => None,
        }
    }

    pub fn interaction(&self) -> SymmetricInteraction {
        match self {
            GadgetBlock::Clique { n, t, beta } => CliqueGadget::new(*n, *t, *beta)
                .expect("validated clique block")
                .interaction(),
            GadgetBlock::Regular { gadget } => gadget.interaction(),
        }
    }

    /// `ln W(τ)` indexed by terminal bits: the total weight of gadget
    /// configurations with terminal assignment `τ`, restricted to a phase
    /// when one is given.
    pub fn terminal_log_weights(&self, phase: Option<PhaseLabel>) -> Result<Vec<f64>> {
        let t = self.t();
        match self {
            GadgetBlock::Clique { n, beta, .. } => {
                let g = CliqueGadget::new(*n, t, *beta)?;
                if phase.is_some() {
                    g.require_odd_core()?;
                }
                let per_class: Vec<f64> = (0..=t as i64)
                    .map(|j| g.log_terminal_weight(2 * j - t as i64, phase))
                    .collect();
                Ok((0..1usize << t)
                    .map(|b| per_class[b.count_ones() as usize])
                    .collect())
            }
            GadgetBlock::Regular { gadget } => {
                let [plus, minus] = gadget.exact_terminal_log_weights()?;
                Ok(match phase {
                    Some(PhaseLabel::Plus) => plus,
                    Some(PhaseLabel::Minus) => minus,
                    None => plus
                        .iter()
                        .zip(&minus)
                        .map(|(a, b)| log_sum_exp(&[*a, *b]))
                        .collect(),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchingEdge {
    /// Global vertex indices.
    pub a: usize,
    pub b: usize,
    pub w: f64,
    /// Host edge this matching edge realizes, if any.
    pub host_edge: Option<(usize, usize)>,
}

/// Serialized form of a [`ReducedInstance`]; the matrix is rebuilt on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionMeta {
    pub schema_version: u32,
    pub params: ReductionParams,
    pub host: Option<Graph>,
    pub copies: usize,
    pub gadget: GadgetBlock,
    pub matchings: Vec<MatchingEdge>,
}

#[derive(Debug, Clone)]
pub struct ReducedInstance {
    params: ReductionParams,
    host: Option<Graph>,
    copies: usize,
    gadget: GadgetBlock,
    matchings: Vec<MatchingEdge>,
    j: SymmetricInteraction,
}

impl ReducedInstance {
    /// `copies` disjoint gadget blocks joined by the given matching edges.
    pub fn assemble(
        params: ReductionParams,
        host: Option<Graph>,
        copies: usize,
        gadget: GadgetBlock,
        matchings: Vec<MatchingEdge>,
    ) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidInstance("no gadget copies".into()));
        }
        gadget.validate()?;
        let n = gadget.n();
        let dim = n * copies;
        let block = gadget.interaction();
        let mut entries = Vec::with_capacity(block.entries().len() * copies + matchings.len());
        for v in 0..copies {
            let off = v * n;
            entries.extend(block.entries().iter().map(|e| (e.i + off, e.j + off, e.w)));
        }
        for e in &matchings {
            if e.a / n == e.b / n {
                return Err(Error::InvalidInstance(format!(
                    "matching edge ({}, {}) lies inside one gadget",
                    e.a, e.b
                )));
            }
            entries.push((e.a, e.b, e.w));
        }
        let j = SymmetricInteraction::new(dim, entries)?;
        let inst = Self {
            params,
            host,
            copies,
            gadget,
            matchings,
            j,
        };
        inst.audit()?;
        Ok(inst)
    }

    pub fn from_meta(meta: ReductionMeta) -> Result<Self> {
        if meta.schema_version != META_SCHEMA_VERSION {
            return Err(Error::InvalidInstance(format!(
                "unsupported schema version {}",
                meta.schema_version
            )));
        }
        Self::assemble(
            meta.params,
            meta.host,
            meta.copies,
            meta.gadget,
            meta.matchings,
        )
    }

    pub fn meta(&self) -> ReductionMeta {
        ReductionMeta {
            schema_version: META_SCHEMA_VERSION,
            params: self.params.clone(),
            host: self.host.clone(),
            copies: self.copies,
            gadget: self.gadget.clone(),
            matchings: self.matchings.clone(),
        }
    }

    pub fn params(&self) -> &ReductionParams {
        &self.params
    }

    pub fn host(&self) -> Option<&Graph> {
        self.host.as_ref()
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn gadget(&self) -> &GadgetBlock {
        &self.gadget
    }

    pub fn matchings(&self) -> &[MatchingEdge] {
        &self.matchings
    }

    pub fn interaction(&self) -> &SymmetricInteraction {
        &self.j
    }

    pub fn dimension(&self) -> usize {
        self.j.dimension()
    }

    /// Global vertex indices of gadget copy `v`.
    pub fn block(&self, v: usize) -> std::ops::Range<usize> {
        let n = self.gadget.n();
        v * n..(v + 1) * n
    }

    /// Terminal groups of copy `v`, one per host neighbour.
    pub fn terminal_groups(&self, v: usize) -> [Vec<usize>; 3] {
        let n = self.gadget.n();
        let s = self.gadget.t() / 3;
        [0, 1, 2].map(|i| (v * n + i * s..v * n + (i + 1) * s).collect())
    }

    /// Block-diagonal part.
    pub fn d_matrix(&self) -> SymmetricInteraction {
        let n = self.gadget.n();
        let entries = self
            .j
            .entries()
            .iter()
            .filter(|e| e.i / n == e.j / n)
            .map(|e| (e.i, e.j, e.w));
        SymmetricInteraction::new(self.dimension(), entries).expect("subset of valid entries")
    }

    /// Matching part.
    pub fn e_matrix(&self) -> SymmetricInteraction {
        SymmetricInteraction::new(
            self.dimension(),
            self.matchings.iter().map(|e| (e.a, e.b, e.w)),
        )
        .expect("matching entries are valid")
    }

    pub fn dense_admissible(&self) -> Option<bool> {
        self.params.dense_admissible()
    }

    /// Structural checks: `J = D + E`, disjoint matching edges, and for host
    /// reductions `m·t/2` matching edges covering every terminal once.
    pub fn audit(&self) -> Result<()> {
        let n = self.gadget.n();
        let t = self.gadget.t();
        let dim = self.dimension();
        let mut cover = vec![0u8; dim];
        for e in &self.matchings {
            cover[e.a] += 1;
            cover[e.b] += 1;
            if e.a % n >= t || e.b % n >= t {
                return Err(Error::InvalidInstance(format!(
                    "matching edge ({}, {}) touches a non-terminal",
                    e.a, e.b
                )));
            }
        }
        if cover.iter().any(|&c| c > 1) {
            return Err(Error::InvalidInstance(
                "matching edges are not disjoint".into(),
            ));
        }
        if let Some(h) = &self.host {
            if self.matchings.len() != self.copies * t / 2 {
                return Err(Error::InvalidInstance(format!(
                    "{} matching edges, expected m·t/2 = {}",
                    self.matchings.len(),
                    self.copies * t / 2
                )));
            }
            if h.vertex_count() != self.copies {
                return Err(Error::InvalidInstance(
                    "host size differs from copy count".into(),
                ));
            }
            let all_covered = (0..dim).all(|v| (cover[v] == 1) == (v % n < t));
            if !all_covered {
                return Err(Error::InvalidInstance(
                    "some terminal is not matched exactly once".into(),
                ));
            }
        }
        let (dm, em) = (self.d_matrix(), self.e_matrix());
        for e in self.j.entries() {
            if e.w != dm.get(e.i, e.j) + em.get(e.i, e.j) {
                return Err(Error::InvalidInstance(format!(
                    "J differs from D + E at ({}, {})",
                    e.i, e.j
                )));
            }
        }
        Ok(())
    }
}

/// Matching edges for a cubic host: terminal group `i` of `u` faces the
/// `i`-th sorted neighbour of `u`.
fn host_matchings(host: &Graph, n: usize, t: usize, w: f64) -> Vec<MatchingEdge> {
    let s = t / 3;
    let mut out = Vec::with_capacity(host.edge_count() * s);
    for &(u, v) in host.edges() {
        let iu = host
            .neighbors(u)
            .iter()
            .position(|&x| x == v)
            .expect("edge");
        let iv = host
            .neighbors(v)
            .iter()
            .position(|&x| x == u)
            .expect("edge");
        for l in 0..s {
            out.push(MatchingEdge {
                a: u * n + iu * s + l,
                b: v * n + iv * s + l,
                w,
                host_edge: Some((u, v)),
            });
        }
    }
    out
}

/// Samples the sparse gadget, resampling from successive seeds until
/// `gap(βA) <= β(λ_{d-1} + η)`.
pub fn sample_sparse_gadget(p: &ReductionParams) -> Result<RegularGadget> {
    p.validate()?;
    if p.variant != Variant::Sparse {
        return Err(Error::InvalidParameter(
            "parameters are not for the sparse variant".into(),
        ));
    }
    let d = p.d.expect("validated sparse params");
    let eta = p.eta.unwrap_or(-p.w_minus);
    let limit = p.beta * (lambda_d(d - 1)? + eta);
    let base = p.seed.unwrap_or(0);
    for k in 0..GADGET_RESAMPLE_CAP {
        let g = build_regular_gadget(p.n, d - 1, p.t, p.beta, base.wrapping_add(k))?;
        if extreme_eigenvalues(&g.interaction(), DEFAULT_TOL)?.gap <= limit {
            return Ok(g);
        }
    }
    Err(Error::SamplingFailed(format!(
        "no gadget with spectral gap <= {limit} in {GADGET_RESAMPLE_CAP} draws"
    )))
}

/// Builds the reduced instance for a cubic host graph.
pub fn build_reduction(host: &Graph, params: &ReductionParams) -> Result<ReducedInstance> {
    params.validate()?;
    if !host.is_regular(3) {
        return Err(Error::InvalidGraph("host graph must be 3-regular".into()));
    }
    let gadget = match params.variant {
        Variant::Dense => GadgetBlock::Clique {
            n: params.n,
            t: params.t,
            beta: params.beta,
        },
        Variant::Sparse => GadgetBlock::Regular {
            gadget: sample_sparse_gadget(params)?,
        },
    };
    let matchings = host_matchings(host, params.n, params.t, params.w_minus);
    ReducedInstance::assemble(
        params.clone(),
        Some(host.clone()),
        host.vertex_count(),
        gadget,
        matchings,
    )
}
