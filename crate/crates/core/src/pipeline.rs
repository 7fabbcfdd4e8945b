//! End-to-end experiment: mean field, gadget, reduction, spectral certificate,
//! exact `ln Z`, ratio window and MaxCut interval, one JSON report per stage.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gadget::{select_gadget_size, verify_regular_gadget, CliqueGadget, RegularGadgetReport};
use crate::graph::Graph;
use crate::io::{named_graph, parse_graph};
use crate::meanfield::{
    solve_clique_fixed_points, solve_tree_fixed_points, MeanFieldSolution, TreeFixedPoint,
};
use crate::reduction::{
    build_reduction, lemma4_check, maxcut_estimate, structured_log_z, GadgetBlock, Lemma4Config,
    MaxCutEstimate, RatioReport, ReducedInstance, ReductionMeta, ReductionParams,
};
use crate::spectral::{weyl_certificate, WeylCertificate, DEFAULT_TOL};

/// Version tag of every report written by the pipeline and the CLI.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub const STAGES: [&str; 7] = [
    "meanfield",
    "gadget",
    "reduction",
    "spectral",
    "exactz",
    "lemma4",
    "maxcut",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineInputs {
    /// `.graph` file for the host.
    pub host: Option<PathBuf>,
    /// Built-in host: `k4`, `k33`, `prism`, `petersen`.
    pub host_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    pub gamma: f64,
    pub t: usize,
    /// Gadget size. Dense default: smallest admissible size meeting `epsilon_target`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Degree bound; selects the sparse variant when present.
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_epsilon_target")]
    pub epsilon_target: f64,
    /// Glauber samples per phase when a regular gadget is too large to enumerate.
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Per-spin error of a simulated approximate `ln Z` oracle.
    #[serde(default)]
    pub delta: f64,
}

fn default_epsilon_target() -> f64 {
    0.1
}
fn default_samples() -> u64 {
    20_000
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOutputs {
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: String,
    #[serde(default)]
    pub inputs: PipelineInputs,
    pub params: PipelineParams,
    pub outputs: PipelineOutputs,
    #[serde(default)]
    pub conventions: Lemma4Config,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&crate::io::read(path)?)
    }

    /// Checks every parameter and resolves the host and reduction parameters.
    pub fn resolve(&self) -> Result<(Graph, ReductionParams)> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.command != "pipeline" {
            return bad(format!("unknown command `{}`", self.command));
        }
        let p = &self.params;
        if !(p.gamma > 1.0 && p.gamma.is_finite()) {
            return bad(format!(
                "gamma {} must exceed 1 (beta = (1+gamma)/2 must exceed 1)",
                p.gamma
            ));
        }
        if !(p.tol > 0.0) {
            return bad(format!("tolerance {} must be positive", p.tol));
        }
        if !(p.delta >= 0.0 && p.delta.is_finite()) {
            return bad(format!("delta {} must be non-negative", p.delta));
        }
        if !(p.epsilon_target > 0.0) {
            return bad(format!(
                "epsilon target {} must be positive",
                p.epsilon_target
            ));
        }
        if !(self.conventions.psi_c > 0.0) {
            return bad(format!(
                "psi constant {} must be positive",
                self.conventions.psi_c
            ));
        }
        let host = match (&self.inputs.host, &self.inputs.host_name) {
            (Some(path), None) => parse_graph(path)?,
            (None, Some(name)) => named_graph(name)?,
            _ => return bad("give exactly one of inputs.host and inputs.host_name".into()),
        };
        if !host.is_regular(3) {
            return Err(Error::InvalidGraph("host graph must be 3-regular".into()));
        }
        let params = match p.d {
            None => {
                if p.eta.is_some() {
                    return bad("eta applies to the sparse variant only".into());
                }
                if p.t == 0 || !p.t.is_multiple_of(3) {
                    return bad(format!("t = {} must be a positive multiple of 3", p.t));
                }
                let n = match p.n {
                    Some(n) => n,
                    None => select_gadget_size(p.gamma, p.t, p.epsilon_target)?,
                };
                ReductionParams::dense(p.gamma, p.t, Some(n))?
            }
            Some(d) => {
                let n =
                    p.n.ok_or_else(|| Error::InvalidParameter("sparse variant needs n".into()))?;
                ReductionParams::sparse(p.gamma, d, p.t, n, p.eta, p.seed)?
            }
        };
        Ok((host, params))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanFieldStage {
    pub clique: MeanFieldSolution,
    /// Sparse variant: fixed points of the `(d-1)`-regular tree recursion.
    pub tree: Option<TreeFixedPoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GadgetStage {
    Clique {
        n: usize,
        t: usize,
        r: usize,
        beta: f64,
        q_plus: f64,
        epsilon: f64,
        phase_balance: f64,
        log_z: f64,
    },
    Regular(RegularGadgetReport),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionStage {
    pub dimension: usize,
    pub copies: usize,
    pub matching_edges: usize,
    pub max_row_support: usize,
    pub dense_admissible: Option<bool>,
    pub instance: ReductionMeta,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactZStage {
    pub method: String,
    pub log_z_h: f64,
    pub log_z_blocks: f64,
    pub log_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub host_vertices: usize,
    pub host_edges: usize,
    pub params: ReductionParams,
    pub q_plus: f64,
    pub q_minus: f64,
    pub epsilon: f64,
    pub certified_gap: f64,
    pub measured_gap: f64,
    pub gap_below_gamma: bool,
    pub log_z_h: f64,
    pub log_z_blocks: f64,
    pub ratio_over_center: f64,
    pub window: [f64; 2],
    pub within_window: bool,
    pub maxcut_interval: [f64; 2],
    pub brute_force_maxcut: Option<usize>,
    pub contains_maxcut: Option<bool>,
    pub verdict: String,
}

/// Where the reports of a run went.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub stage_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    pub summary: PipelineSummary,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    schema_version: u32,
    stage: &'a str,
    report: &'a T,
}

/// Wraps a report with the schema version and stage name.
pub fn envelope<T: Serialize>(stage: &str, report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema_version: REPORT_SCHEMA_VERSION,
        stage,
        report,
    })?;
    s.push('\n');
    Ok(s)
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn stage<T: Serialize>(&mut self, index: usize, run: impl FnOnce() -> Result<T>) -> Result<T> {
        let name = STAGES[index];
        let wrap = |e: Error| Error::Stage {
            stage: name,
            source: Box::new(e),
        };
        let report = run().map_err(wrap)?;
        let path = self.dir.join(format!("{:02}-{name}.json", index + 1));
        fs::write(&path, envelope(name, &report)?).map_err(|e| wrap(e.into()))?;
        self.files.push(path);
        Ok(report)
    }
}

/// Runs every stage in order. A failing stage aborts the run; reports of the
/// stages before it stay on disk.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<PipelineRun> {
    let (host, params) = config.resolve()?;
    let dir = &config.outputs.dir;
    fs::create_dir_all(dir)?;
    let tol = config.params.tol;
    let mut w = Writer {
        dir,
        files: Vec::new(),
    };

    let meanfield = w.stage(0, || {
        let clique = solve_clique_fixed_points(params.beta)?;
        let tree = match params.d {
            Some(d) => Some(solve_tree_fixed_points(d - 1, params.beta)?),
            None => None,
        };
        Ok(MeanFieldStage { clique, tree })
    })?;

    let inst: ReducedInstance = build_reduction(&host, &params).map_err(|e| Error::Stage {
        stage: STAGES[2],
        source: Box::new(e),
    })?;

    let gadget = w.stage(1, || match inst.gadget() {
        GadgetBlock::Clique { n, t, beta } => {
            let g = CliqueGadget::new(*n, *t, *beta)?;
            let q_plus = meanfield.clique.q_plus.ok_or_else(|| {
                Error::NoFixedPoint(format!("beta = {beta} has no magnetized phase"))
            })?;
            Ok(GadgetStage::Clique {
                n: *n,
                t: *t,
                r: g.r(),
                beta: *beta,
                q_plus,
                epsilon: g.epsilon_against(q_plus)?,
                phase_balance: g.phase_balance()?,
                log_z: g.log_z(),
            })
        }
        GadgetBlock::Regular { gadget } => Ok(GadgetStage::Regular(verify_regular_gadget(
            gadget,
            config.params.epsilon_target,
            config.params.samples,
            config.params.seed,
        )?)),
    })?;

    w.stage(2, || {
        Ok(ReductionStage {
            dimension: inst.dimension(),
            copies: inst.copies(),
            matching_edges: inst.matchings().len(),
            max_row_support: inst.interaction().max_row_support(false),
            dense_admissible: inst.dense_admissible(),
            instance: inst.meta(),
        })
    })?;

    let cert: WeylCertificate = w.stage(3, || weyl_certificate(&inst, tol))?;

    let exact = w.stage(4, || {
        let log_z_h = structured_log_z(&inst, true)?;
        let log_z_blocks = structured_log_z(&inst, false)?;
        Ok(ExactZStage {
            method: "structured".into(),
            log_z_h,
            log_z_blocks,
            log_ratio: log_z_h - log_z_blocks,
        })
    })?;

    let ratio: RatioReport = w.stage(5, || lemma4_check(&inst, config.conventions))?;
    let est: MaxCutEstimate = w.stage(6, || {
        maxcut_estimate(&inst, config.params.delta, config.conventions)
    })?;

    let (q_plus, epsilon) = match &gadget {
        GadgetStage::Clique {
            q_plus, epsilon, ..
        } => (*q_plus, *epsilon),
        GadgetStage::Regular(r) => (r.tree_q_plus, r.epsilon),
    };
    let brute = est.brute_force.as_ref().map(|b| b.maxcut);
    let verdict = match (brute, est.contains_maxcut) {
        (Some(c), Some(ok)) => format!("contains maxcut={c}: {ok}"),
        _ => "maxcut not computed".to_string(),
    };
    let summary = PipelineSummary {
        host_vertices: host.vertex_count(),
        host_edges: host.edge_count(),
        params,
        q_plus,
        q_minus: 1.0 - q_plus,
        epsilon,
        certified_gap: cert.certified_bound,
        measured_gap: cert.measured_gap,
        gap_below_gamma: cert.measured_gap < cert.gamma,
        log_z_h: exact.log_z_h,
        log_z_blocks: exact.log_z_blocks,
        ratio_over_center: ratio.ratio_over_center,
        window: [ratio.window_lower, ratio.window_upper],
        within_window: ratio.within_window,
        maxcut_interval: [est.bounds.lower, est.bounds.upper],
        brute_force_maxcut: brute,
        contains_maxcut: est.contains_maxcut,
        verdict,
    };
    let summary_file = dir.join("summary.json");
    fs::write(&summary_file, envelope("summary", &summary)?)?;
    Ok(PipelineRun {
        stage_files: w.files,
        summary_file,
        summary,
    })
}
