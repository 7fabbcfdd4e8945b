use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use spectral_ising::enumerate::brute_force_log_z;
use spectral_ising::exact::exact_partition_rational;
use spectral_ising::gadget::{
    build_regular_gadget, verify_regular_gadget, CliqueGadget, PhaseLabel, RegularGadget,
};
use spectral_ising::glauber::{mixing_experiment, StartState};
use spectral_ising::graph::Graph;
use spectral_ising::io::{
    named_graph, parse_graph, parse_matrix, parse_sym_exact, write_graph, write_sym,
};
use spectral_ising::meanfield::{solve_clique_fixed_points, solve_tree_fixed_points, thresholds};
use spectral_ising::pipeline::{envelope, run_pipeline, ExperimentConfig, REPORT_SCHEMA_VERSION};
use spectral_ising::reduction::{
    brute_force_maxcut, build_reduction, lemma4_check, maxcut_estimate, structured_log_z,
    ExponentConvention, Lemma4Config, ReducedInstance, ReductionParams,
};
use spectral_ising::spectral::{extreme_eigenvalues, validate_instance, DEFAULT_TOL};
use spectral_ising::Error;

#[derive(Parser)]
#[command(
    name = "spectral-ising",
    version,
    about = "Ising partition functions, gadgets and spectral certificates"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Relative eigenvalue tolerance.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Clique (and optionally tree) fixed points at inverse temperature beta.
    Meanfield {
        #[arg(long)]
        beta: f64,
        /// Also solve the d-regular tree recursion.
        #[arg(long)]
        d: Option<usize>,
    },
    /// Uniqueness threshold, Friedman bound and sparse threshold for degree d.
    Thresholds {
        #[arg(long)]
        d: usize,
    },
    /// Build and verify clique or random-regular gadgets.
    #[command(subcommand)]
    Gadget(GadgetCommand),
    /// Extreme eigenvalues of a matrix, with optional class validation.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        /// Spectral-gap bound to validate against.
        #[arg(long)]
        gamma: Option<f64>,
        /// Row-support bound to validate against.
        #[arg(long)]
        d: Option<usize>,
    },
    /// Builds a reduced instance from a 3-regular host graph.
    Reduce {
        #[command(flatten)]
        host: HostArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Instance description (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Also write the interaction matrix as `.sym`.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// Exact ln Z.
    Exactz {
        #[arg(long, value_enum, default_value_t = ExactMethod::Brute)]
        method: ExactMethod,
        /// Matrix file (brute) or instance description (structured).
        #[arg(long)]
        input: PathBuf,
        /// Brute method: rational arithmetic on the decimal weights.
        #[arg(long)]
        exact: bool,
    },
    /// Measured ratio Z(H^G)/Z(blocks) against its predicted window.
    Lemma4 {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        convention: ConventionArgs,
    },
    /// Exact MaxCut or the interval recovered from a reduced instance.
    #[command(subcommand)]
    Maxcut(MaxcutCommand),
    /// Heat-bath Glauber run recording the magnetization.
    Glauber {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "all-plus")]
        start: StartState,
        #[arg(long, default_value_t = 1000)]
        sweeps: u64,
    },
    /// Runs every stage from a JSON experiment config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum GadgetCommand {
    /// Writes the clique gadget's interaction matrix.
    BuildClique {
        #[command(flatten)]
        shape: CliqueArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Terminal laws, phase balance and epsilon of a clique gadget.
    VerifyClique {
        #[command(flatten)]
        shape: CliqueArgs,
        /// Also compare the phase masses in exact arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Samples a random regular gadget.
    BuildRegular {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        beta: f64,
        /// Gadget description (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the gadget graph as `.graph`.
        #[arg(long)]
        graph: Option<PathBuf>,
    },
    /// Terminal laws of a regular gadget against the tree product measure.
    VerifyRegular {
        /// Gadget description from `build-regular`.
        #[arg(long)]
        gadget: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        epsilon_target: f64,
        /// Glauber samples per phase when the gadget is too large to enumerate.
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
    },
}

#[derive(Args)]
struct CliqueArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    t: usize,
    #[arg(long)]
    beta: f64,
}

#[derive(Subcommand)]
enum MaxcutCommand {
    /// Exhaustive MaxCut of a host graph.
    Brute {
        #[command(flatten)]
        host: HostArgs,
    },
    /// MaxCut interval from exact structured partition functions.
    Estimate {
        #[arg(long)]
        instance: PathBuf,
        /// Per-spin error of a simulated approximate ln Z oracle.
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[command(flatten)]
        convention: ConventionArgs,
    },
}

#[derive(Args)]
struct HostArgs {
    /// `.graph` file.
    #[arg(
        long,
        conflicts_with = "host_name",
        required_unless_present = "host_name"
    )]
    host: Option<PathBuf>,
    /// Built-in host: k4, k33, prism, petersen.
    #[arg(long)]
    host_name: Option<String>,
}

impl HostArgs {
    fn load(&self) -> Result<Graph, Error> {
        match (&self.host, &self.host_name) {
            (Some(p), _) => parse_graph(p),
            (None, Some(name)) => named_graph(name),
            (None, None) => Err(Error::InvalidParameter("no host graph given".into())),
        }
    }
}

#[derive(Args)]
struct ParamArgs {
    #[arg(long)]
    gamma: f64,
    #[arg(long)]
    t: usize,
    /// Gadget size (dense default: smallest admissible).
    #[arg(long)]
    n: Option<usize>,
    /// Degree bound; selects the sparse variant.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
}

#[derive(Args)]
struct ConventionArgs {
    /// Constant c in psi(x, y) = exp(c w xy).
    #[arg(long, default_value_t = 1.0)]
    psi_c: f64,
    #[arg(long, value_enum, default_value_t = Exponent::MatchCount)]
    exponent: Exponent,
}

#[derive(Clone, Copy, ValueEnum)]
enum Exponent {
    MatchCount,
    ThreeHalvesMt,
}

impl ConventionArgs {
    fn config(&self) -> Lemma4Config {
        Lemma4Config {
            psi_c: self.psi_c,
            exponent: match self.exponent {
                Exponent::MatchCount => ExponentConvention::MatchCount,
                Exponent::ThreeHalvesMt => ExponentConvention::ThreeHalvesMt,
            },
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExactMethod {
    Brute,
    Structured,
}

fn load_instance(path: &Path) -> Result<ReducedInstance, Error> {
    let meta = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    ReducedInstance::from_meta(meta)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(String, Value), Error> {
    let seed = cli.seed;
    let out = match &cli.command {
        Command::Meanfield { beta, d } => {
            let clique = solve_clique_fixed_points(*beta)?;
            let tree = d.map(|d| solve_tree_fixed_points(d, *beta)).transpose()?;
            ("meanfield", json!({ "clique": clique, "tree": tree }))
        }
        Command::Thresholds { d } => ("thresholds", val(&thresholds(*d)?)?),
        Command::Gadget(g) => gadget(g, seed)?,
        Command::Spectrum { input, gamma, d } => {
            let j = parse_matrix(input)?;
            let spectrum = extreme_eigenvalues(&j, cli.tol)?;
            let validation = gamma
                .map(|g| validate_instance(&j, g, *d, cli.tol))
                .transpose()?;
            (
                "spectrum",
                json!({ "spectrum": spectrum, "validation": validation }),
            )
        }
        Command::Reduce {
            host,
            params,
            out,
            matrix,
        } => {
            let h = host.load()?;
            let p = match params.d {
                None => {
                    if params.eta.is_some() {
                        return Err(Error::InvalidParameter(
                            "eta applies to the sparse variant only".into(),
                        ));
                    }
                    ReductionParams::dense(params.gamma, params.t, params.n)?
                }
                Some(d) => {
                    let n = params.n.ok_or_else(|| {
                        Error::InvalidParameter("sparse variant needs --n".into())
                    })?;
                    ReductionParams::sparse(params.gamma, d, params.t, n, params.eta, seed)?
                }
            };
            let inst = build_reduction(&h, &p)?;
            write_json(out, &inst.meta())?;
            if let Some(m) = matrix {
                write_sym(m, inst.interaction())?;
            }
            (
                "reduce",
                json!({
                    "params": p,
                    "dimension": inst.dimension(),
                    "copies": inst.copies(),
                    "matching_edges": inst.matchings().len(),
                    "max_row_support": inst.interaction().max_row_support(false),
                    "dense_admissible": inst.dense_admissible(),
                    "out": out,
                }),
            )
        }
        Command::Exactz {
            method,
            input,
            exact,
        } => match method {
            ExactMethod::Brute if *exact => {
                let (n, entries) = parse_sym_exact(input)?;
                let z = exact_partition_rational(n, &entries)?;
                let counts: Vec<Value> = z
                    .counts
                    .iter()
                    .map(|(k, c)| json!([k.to_string(), c]))
                    .collect();
                (
                    "exactz",
                    json!({
                        "method": "brute",
                        "exact": true,
                        "dimension": n,
                        "log_z": z.ln_value(),
                        "offset": z.offset.to_string(),
                        "grid": z.grid.to_string(),
                        "counts": counts,
                    }),
                )
            }
            ExactMethod::Brute => {
                let j = parse_matrix(input)?;
                let g = brute_force_log_z(&j)?;
                (
                    "exactz",
                    json!({ "method": "brute", "dimension": j.dimension(), "log_z": g.log_z }),
                )
            }
            ExactMethod::Structured => {
                if *exact {
                    return Err(Error::ExactModeUnavailable(
                        "the structured method works in floating point".into(),
                    ));
                }
                let inst = load_instance(input)?;
                let log_z = structured_log_z(&inst, true)?;
                let log_z_blocks = structured_log_z(&inst, false)?;
                (
                    "exactz",
                    json!({
                        "method": "structured",
                        "dimension": inst.dimension(),
                        "log_z": log_z,
                        "log_z_blocks": log_z_blocks,
                    }),
                )
            }
        },
        Command::Lemma4 {
            instance,
            convention,
        } => {
            let inst = load_instance(instance)?;
            ("lemma4", val(&lemma4_check(&inst, convention.config())?)?)
        }
        Command::Maxcut(MaxcutCommand::Brute { host }) => {
            ("maxcut brute", val(&brute_force_maxcut(&host.load()?)?)?)
        }
        Command::Maxcut(MaxcutCommand::Estimate {
            instance,
            delta,
            convention,
        }) => {
            let inst = load_instance(instance)?;
            (
                "maxcut estimate",
                val(&maxcut_estimate(&inst, *delta, convention.config())?)?,
            )
        }
        Command::Glauber {
            input,
            start,
            sweeps,
        } => {
            let j = parse_matrix(input)?;
            (
                "glauber",
                val(&mixing_experiment(&j, *start, *sweeps, seed)?)?,
            )
        }
        Command::Pipeline { config } => {
            let c = ExperimentConfig::load(config)?;
            let run = run_pipeline(&c)?;
            (
                "pipeline",
                json!({
                    "stage_files": run.stage_files,
                    "summary_file": run.summary_file,
                    "summary": run.summary,
                }),
            )
        }
    };
    Ok((out.0.to_string(), out.1))
}

fn gadget(cmd: &GadgetCommand, seed: u64) -> Result<(&'static str, Value), Error> {
    Ok(match cmd {
        GadgetCommand::BuildClique { shape, out } => {
            let g = CliqueGadget::new(shape.n, shape.t, shape.beta)?;
            if let Some(p) = out {
                write_sym(p, &g.interaction())?;
            }
            (
                "gadget build-clique",
                json!({
                    "n": g.n(),
                    "t": g.t(),
                    "r": g.r(),
                    "beta": g.beta(),
                    "coupling": g.coupling(),
                    "terminals": g.terminals(),
                    "out": out,
                }),
            )
        }
        GadgetCommand::VerifyClique { shape, exact } => {
            let g = CliqueGadget::new(shape.n, shape.t, shape.beta)?;
            let laws = PhaseLabel::BOTH
                .iter()
                .map(|&p| g.terminal_distribution(p))
                .collect::<Result<Vec<_>, _>>()?;
            let exact_balance = if *exact {
                Some(g.exact_phase_masses()?.balanced())
            } else {
                None
            };
            let epsilon = if g.beta() > 1.0 {
                Some(g.epsilon()?)
            } else {
                None
            };
            (
                "gadget verify-clique",
                json!({
                    "n": g.n(),
                    "t": g.t(),
                    "r": g.r(),
                    "beta": g.beta(),
                    "log_z": g.log_z(),
                    "phase_balance": g.phase_balance()?,
                    "exact_balance": exact_balance,
                    "epsilon": epsilon,
                    "terminal_laws": laws,
                }),
            )
        }
        GadgetCommand::BuildRegular {
            n,
            d,
            t,
            beta,
            out,
            graph,
        } => {
            let g = build_regular_gadget(*n, *d, *t, *beta, seed)?;
            if let Some(p) = out {
                write_json(p, &g)?;
            }
            if let Some(p) = graph {
                write_graph(p, &g.graph)?;
            }
            ("gadget build-regular", serde_json::to_value(&g)?)
        }
        GadgetCommand::VerifyRegular {
            gadget,
            epsilon_target,
            samples,
        } => {
            let g: RegularGadget = serde_json::from_str(&std::fs::read_to_string(gadget)?)?;
            let rep = verify_regular_gadget(&g, *epsilon_target, *samples, seed)?;
            ("gadget verify-regular", serde_json::to_value(&rep)?)
        }
    })
}

fn val<T: serde::Serialize>(x: &T) -> Result<Value, Error> {
    Ok(serde_json::to_value(x)?)
}

fn flatten(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        Value::Array(items) if items.iter().any(|x| x.is_object() || x.is_array()) => {
            for (k, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), x, out);
            }
        }
        other => {
            out.push_str(prefix);
            out.push_str(": ");
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}

fn error_object(e: &Error) -> Value {
    let mut body = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Stage { stage, source } = e {
        body["stage"] = json!(stage);
        body["cause"] = json!(source.kind());
    }
    json!({ "schema_version": REPORT_SCHEMA_VERSION, "error": body })
}

fn usage_error(message: String) -> Value {
    json!({
        "schema_version": REPORT_SCHEMA_VERSION,
        "error": { "kind": "usage", "message": message },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            println!("{}", usage_error(e.to_string().trim().to_string()));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            println!("{}", usage_error(e.to_string()));
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok((stage, report)) => {
            match cli.format {
                Format::Json => match envelope(&stage, &report) {
                    Ok(s) => print!("{s}"),
                    Err(e) => {
                        println!("{}", error_object(&e));
                        return ExitCode::FAILURE;
                    }
                },
                Format::Text => {
                    let mut s = format!("{stage}\n");
                    flatten("", &report, &mut s);
                    print!("{s}");
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            println!("{}", error_object(&e));
            ExitCode::FAILURE
        }
    }
}
