//! The `netident` command-line tool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSet};
use crate::higher_order::{self, LiftedSystem, NodeDynamics, COUPLING_TOL};
use crate::identifiability::certify;
use crate::io::{matrix_to_csv, parse_json, read_json, read_matrix_csv};
use crate::netsim::{self, CounterexampleClass, DiagonalMode, MarkovSequence, WeightMatrix};
use crate::reconstruct::{identify, identify_with_chronicle, ReconstructionResult};
use crate::zero_forcing::{self, derived_set, ForcingChronicle};

const GRAPH_FORMAT: &str = "Graph file: JSON {\"n\": 4, \"edges\": [[1,2],[2,3]]}, nodes numbered 1..n. \
Self-loops are dropped with a warning.";
const SET_FORMAT: &str = "Node sets: a JSON array such as [1,3], given inline or as a path to a file holding one.";
const MATRIX_FORMAT: &str = "Matrix file: CSV, first line the dimension n, then n rows of n comma-separated numbers.";
const MARKOV_FORMAT: &str = "Markov file: JSON {\"v_in\":[..],\"v_out\":[..],\"K\":k,\"data\":[[[..]]]}, \
data[k] holding N X^k M with one row per output node and one column per input node.";
const DYN_FORMAT: &str = "Dynamics file: JSON {\"A\":[[..]],\"B\":[[..]],\"C\":[[..]],\"E\":[[..]],\"K\":[[..]]}, \
row-major, A q×q, B q×r, C t×q, E q×s, K s×q.";
const CHRONICLE_FORMAT: &str = "Chronicle file: JSON {\"initial\":[..],\"forces\":[[u,v],..]}.";

#[derive(Parser, Debug)]
#[command(
    name = "netident",
    version,
    about = "Zero forcing identifiability certificates and weight recovery for undirected networks",
    after_help = "Exit status: 0 on success, 1 on domain errors (uncertified target, coupling failure, \
inconsistent data), 2 on malformed input or usage errors.\n\
NETIDENT_THREADS caps the worker threads used by the exact search."
)]
pub struct Cli {
    /// Output format; each subcommand has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Human,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Zero forcing sets and forcing chronicles.
    #[command(subcommand)]
    Zfs(ZfsCmd),
    /// Identifiability certificates and weight recovery.
    #[command(subcommand)]
    Ident(IdentCmd),
    /// Random state matrices, Markov parameters and counterexamples.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Networks of higher-order node dynamics.
    #[command(subcommand)]
    Hod(HodCmd),
}

#[derive(Args, Debug)]
pub struct GraphArg {
    /// Graph JSON file.
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Args, Debug)]
pub struct IoNodes {
    /// Input nodes V_I.
    #[arg(long = "in", value_name = "SET")]
    pub v_in: String,
    /// Output nodes V_O.
    #[arg(long = "out-nodes", visible_alias = "out", value_name = "SET")]
    pub v_out: String,
}

#[derive(Subcommand, Debug)]
pub enum ZfsCmd {
    /// Whether a set forces the whole graph. Prints {"zero_forcing":bool,"size":|Z|,"derived":[..]}.
    #[command(after_help = format!("{GRAPH_FORMAT}\n{SET_FORMAT}"))]
    Check {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_name = "SET")]
        set: String,
    },
    /// Derived set and the deterministic forcing chronicle.
    #[command(after_help = format!("{GRAPH_FORMAT}\n{SET_FORMAT}\nOutput: {{\"initial\":[..],\"forces\":[[u,v],..],\"derived\":[..]}}."))]
    Derive {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, value_name = "SET")]
        set: String,
    },
    /// Exact minimum zero forcing set. Prints {"size":k,"set":[..]}.
    #[command(after_help = format!("{GRAPH_FORMAT}\nRefuses graphs with more nodes than --cap (at most 64)."))]
    Min {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = zero_forcing::DEFAULT_SEARCH_CAP)]
        cap: usize,
    },
    /// Small zero forcing set from shortest paths; always valid, not always minimum.
    #[command(after_help = format!("{GRAPH_FORMAT}\nOutput: {{\"size\":k,\"set\":[..]}}."))]
    Heuristic {
        #[command(flatten)]
        graph: GraphArg,
    },
}

#[derive(Subcommand, Debug)]
pub enum IdentCmd {
    /// Certify which principal submatrix the Markov parameters determine.
    #[command(after_help = format!("{GRAPH_FORMAT}\n{SET_FORMAT}\nOutput: JSON report with verdict \
CERTIFIED_FULL, CERTIFIED_PARTIAL or UNCERTIFIED, W = V_I ∩ V_O, certified_nodes and the chronicle."))]
    Certify {
        #[command(flatten)]
        graph: GraphArg,
        #[command(flatten)]
        nodes: IoNodes,
    },
    /// Recover edge weights from Markov parameters.
    #[command(after_help = format!("{GRAPH_FORMAT}\n{SET_FORMAT}\n{MARKOV_FORMAT}\n{CHRONICLE_FORMAT}\n\
Output: the recovered principal submatrix as matrix CSV (rows and columns in ascending node order); \
diagnostics JSON goes to stderr or to --diagnostics. {MATRIX_FORMAT}"))]
    Recover {
        #[command(flatten)]
        graph: GraphArg,
        /// Markov sequence JSON file.
        #[arg(long)]
        markov: PathBuf,
        #[command(flatten)]
        recovery: RecoveryArgs,
        /// Replay this chronicle instead of the deterministic one.
        #[arg(long)]
        chronicle: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct RecoveryArgs {
    /// Nodes to recover; defaults to every certified node.
    #[arg(long, value_name = "SET")]
    pub target: Option<String>,
    /// Fail if a non-edge inside the target reconstructs to more than this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write diagnostics JSON here instead of stderr.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum SimCmd {
    /// Random state matrix with positive edge weights.
    #[command(after_help = format!("{GRAPH_FORMAT}\nOutput: {MATRIX_FORMAT}"))]
    Random {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Smallest edge weight.
        #[arg(long, default_value_t = netsim::DEFAULT_WEIGHT_RANGE.0)]
        lo: f64,
        /// Largest edge weight; free diagonals are drawn from [-hi, hi].
        #[arg(long, default_value_t = netsim::DEFAULT_WEIGHT_RANGE.1)]
        hi: f64,
        #[arg(long, value_enum, default_value_t = Diagonal::Free)]
        diag: Diagonal,
    },
    /// Markov parameters N X^k M for k = 0..=order.
    #[command(after_help = format!("{MATRIX_FORMAT}\n{SET_FORMAT}\nOutput: {MARKOV_FORMAT}"))]
    Markov {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        nodes: IoNodes,
        /// Highest power; defaults to 2n.
        #[arg(long)]
        order: Option<usize>,
    },
    /// A different state matrix with the same Markov parameters, when some
    /// node is neither input nor output.
    #[command(after_help = format!("{MATRIX_FORMAT}\n{SET_FORMAT}\nOutput: the second matrix as CSV; \
the hidden nodes and the Markov difference up to order 2n go to stderr."))]
    Counterexample {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        nodes: IoNodes,
        #[arg(long, value_enum, default_value_t = Class::Directed)]
        class: Class,
        /// Scaling of the hidden block; 2 for directed, -1 for sign-free.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Diagonal {
    Free,
    Laplacian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Class {
    Directed,
    SignFree,
}

#[derive(Subcommand, Debug)]
pub enum HodCmd {
    /// Check C (EK)^k B is nonzero for k = 0..=order. Exits 1 if it vanishes.
    #[command(after_help = format!("{DYN_FORMAT}\nOutput: JSON report with magnitudes and relative magnitudes \
(each divided by ‖C‖‖EK‖^k‖B‖); a power fails when its relative magnitude is at most --tol."))]
    Check {
        #[arg(long = "dyn", value_name = "FILE")]
        dynamics: PathBuf,
        /// Horizon; defaults to 2q.
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, default_value_t = COUPLING_TOL)]
        tol: f64,
    },
    /// Markov parameters of the lifted network.
    #[command(after_help = format!("{MATRIX_FORMAT}\n{DYN_FORMAT}\n{SET_FORMAT}\n{GRAPH_FORMAT}\n\
Without --graph the graph is read off the matrix pattern. Output: {MARKOV_FORMAT} Blocks are t|V_O| × r|V_I|."))]
    Markov {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long = "dyn", value_name = "FILE")]
        dynamics: PathBuf,
        #[command(flatten)]
        nodes: IoNodes,
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Highest power; defaults to 2n.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Deconvolve lifted Markov parameters, then recover edge weights.
    #[command(after_help = format!("{GRAPH_FORMAT}\n{MARKOV_FORMAT}\n{DYN_FORMAT}\n{SET_FORMAT}\n\
Output: as for `ident recover`."))]
    Recover {
        #[command(flatten)]
        graph: GraphArg,
        /// Lifted Markov sequence JSON file.
        #[arg(long)]
        markov: PathBuf,
        #[arg(long = "dyn", value_name = "FILE")]
        dynamics: PathBuf,
        #[command(flatten)]
        recovery: RecoveryArgs,
    },
}

/// A command's result in every format it supports.
struct Outcome {
    json: Value,
    csv: Option<String>,
    human: String,
    default: Format,
    /// Lines for the error stream.
    notes: Vec<String>,
    /// Nonzero for a completed run that reports a domain failure.
    status: i32,
}

impl Outcome {
    fn json(json: Value, human: String) -> Self {
        Outcome {
            json,
            csv: None,
            human,
            default: Format::Json,
            notes: Vec::new(),
            status: 0,
        }
    }
}

/// Parses `args` and runs the command; returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(outcome) => match emit(&outcome, cli.format, out, err) {
            Ok(()) => outcome.status,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                2
            }
        },
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NETIDENT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call in the same process finds the pool already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn emit(o: &Outcome, format: Option<Format>, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::InvalidInput(format!("writing output: {e}"));
    for note in &o.notes {
        writeln!(err, "{note}").map_err(io)?;
    }
    let text = match format.unwrap_or(o.default) {
        Format::Json => format!("{}\n", o.json),
        Format::Human => o.human.clone(),
        Format::Csv => o
            .csv
            .clone()
            .ok_or_else(|| Error::InvalidInput("this command has no CSV output".into()))?,
    };
    out.write_all(text.as_bytes()).map_err(io)
}

fn node_set(arg: &str) -> Result<NodeSet> {
    if arg.trim_start().starts_with('[') {
        parse_json(arg, "inline node set")
    } else {
        read_json(Path::new(arg))
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    read_json(path)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn execute(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Zfs(cmd) => zfs(cmd),
        Command::Ident(cmd) => ident(cmd),
        Command::Sim(cmd) => sim(cmd),
        Command::Hod(cmd) => hod(cmd),
    }
}

fn zfs(cmd: &ZfsCmd) -> Result<Outcome> {
    match cmd {
        ZfsCmd::Check { graph, set } => {
            let g = load_graph(&graph.graph)?;
            let z = node_set(set)?;
            let (derived, _) = derived_set(&g, &z)?;
            let forcing = derived.len() == g.n();
            let human = if forcing {
                format!("{:?} is a zero forcing set\n", z.as_slice())
            } else {
                format!(
                    "{:?} is not a zero forcing set; it derives {:?}\n",
                    z.as_slice(),
                    derived.as_slice()
                )
            };
            Ok(Outcome::json(
                json!({"zero_forcing": forcing, "size": z.len(), "derived": derived}),
                human,
            ))
        }
        ZfsCmd::Derive { graph, set } => {
            let g = load_graph(&graph.graph)?;
            let (derived, chronicle) = derived_set(&g, &node_set(set)?)?;
            let mut human = format!("initial {:?}\n", chronicle.initial.as_slice());
            for (u, v) in &chronicle.forces {
                human.push_str(&format!("{u} -> {v}\n"));
            }
            human.push_str(&format!("derived {:?}\n", derived.as_slice()));
            Ok(Outcome::json(to_value(&chronicle), human))
        }
        ZfsCmd::Min { graph, cap } => {
            let g = load_graph(&graph.graph)?;
            let z = zero_forcing::minimum_zero_forcing_set(&g, *cap)?;
            Ok(set_outcome(z, "minimum zero forcing set"))
        }
        ZfsCmd::Heuristic { graph } => {
            let g = load_graph(&graph.graph)?;
            let z = zero_forcing::zfs_heuristic(&g)?;
            Ok(set_outcome(z, "zero forcing set"))
        }
    }
}

fn set_outcome(z: NodeSet, what: &str) -> Outcome {
    let human = format!("{what} of size {}: {:?}\n", z.len(), z.as_slice());
    Outcome::json(json!({"size": z.len(), "set": z}), human)
}

fn ident(cmd: &IdentCmd) -> Result<Outcome> {
    match cmd {
        IdentCmd::Certify { graph, nodes } => {
            let g = load_graph(&graph.graph)?;
            let report = certify(&g, &node_set(&nodes.v_in)?, &node_set(&nodes.v_out)?)?;
            let mut human = format!(
                "verdict: {}\nW: {:?}\ncertified nodes: {:?}\n",
                to_value(&report.verdict).as_str().unwrap_or_default(),
                report.w.as_slice(),
                report.certified_nodes.as_slice()
            );
            for note in &report.notes {
                human.push_str(&format!("note: {note}\n"));
            }
            Ok(Outcome::json(to_value(&report), human))
        }
        IdentCmd::Recover {
            graph,
            markov,
            recovery,
            chronicle,
        } => {
            let g = load_graph(&graph.graph)?;
            let markov: MarkovSequence = read_json(markov)?;
            let target = recovery_target(&g, &markov, recovery)?;
            let result = match chronicle {
                Some(path) => {
                    let c: ForcingChronicle = read_json(path)?;
                    identify_with_chronicle(&markov, &g, &target, &c)?
                }
                None => identify(&markov, &g, &target)?,
            };
            recovery_outcome(&result, recovery)
        }
    }
}

fn recovery_target(g: &Graph, markov: &MarkovSequence, args: &RecoveryArgs) -> Result<NodeSet> {
    match &args.target {
        Some(t) => node_set(t),
        None => {
            markov.v_in.validate(g.n())?;
            markov.v_out.validate(g.n())?;
            let (derived, _) = derived_set(g, &markov.v_in.intersection(&markov.v_out))?;
            if derived.is_empty() {
                return Err(Error::UncertifiedTarget { outside: NodeSet::new() });
            }
            Ok(derived)
        }
    }
}

fn recovery_outcome(result: &ReconstructionResult, args: &RecoveryArgs) -> Result<Outcome> {
    if let Some(tol) = args.tol {
        if result.max_non_edge_residual > tol {
            return Err(Error::InconsistentData(format!(
                "a non-edge reconstructs to {:e}, above --tol {tol:e}",
                result.max_non_edge_residual
            )));
        }
    }
    let diagnostics = to_value(&result.diagnostics());
    let mut notes = Vec::new();
    match &args.diagnostics {
        Some(path) => std::fs::write(path, format!("{diagnostics}\n"))
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?,
        None => notes.push(diagnostics.to_string()),
    }
    let mut human = format!("recovered nodes {:?}\n", result.nodes.as_slice());
    for row in result.matrix.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>12.6}")).collect();
        human.push_str(&cells.join(" "));
        human.push('\n');
    }
    Ok(Outcome {
        json: json!({"nodes": result.nodes, "matrix": rows(&result.matrix), "diagnostics": diagnostics}),
        csv: Some(matrix_to_csv(&result.matrix)),
        human,
        default: Format::Csv,
        notes,
        status: 0,
    })
}

fn matrix_outcome(m: &DMatrix<f64>, notes: Vec<String>, extra: Value) -> Outcome {
    let mut json = json!({"n": m.nrows(), "matrix": rows(m)});
    if let (Value::Object(dst), Value::Object(src)) = (&mut json, extra) {
        dst.extend(src);
    }
    Outcome {
        json,
        csv: Some(matrix_to_csv(m)),
        human: format!("{m:.6}"),
        default: Format::Csv,
        notes,
        status: 0,
    }
}

fn markov_outcome(m: &MarkovSequence) -> Outcome {
    let human = m
        .data
        .iter()
        .enumerate()
        .map(|(k, block)| format!("k = {k}{block:.6}"))
        .collect();
    Outcome::json(to_value(m), human)
}

fn sim(cmd: &SimCmd) -> Result<Outcome> {
    match cmd {
        SimCmd::Random { graph, seed, lo, hi, diag } => {
            let g = load_graph(&graph.graph)?;
            let mode = match diag {
                Diagonal::Free => DiagonalMode::Free,
                Diagonal::Laplacian => DiagonalMode::Laplacian,
            };
            let x = netsim::random_weights(&g, *seed, (*lo, *hi), mode)?;
            Ok(matrix_outcome(x.entries(), Vec::new(), json!({"seed": seed})))
        }
        SimCmd::Markov { matrix, nodes, order } => {
            let x = read_matrix_csv(matrix)?;
            let order = order.unwrap_or(2 * x.nrows());
            let m = netsim::markov_parameters(&x, &node_set(&nodes.v_in)?, &node_set(&nodes.v_out)?, order)?;
            Ok(markov_outcome(&m))
        }
        SimCmd::Counterexample {
            matrix,
            nodes,
            class,
            epsilon,
        } => {
            let x = read_matrix_csv(matrix)?;
            let (v_in, v_out) = (node_set(&nodes.v_in)?, node_set(&nodes.v_out)?);
            let class = match class {
                Class::Directed => CounterexampleClass::Directed,
                Class::SignFree => CounterexampleClass::SignFree,
            };
            let eps = epsilon.unwrap_or(class.default_epsilon());
            let ce = netsim::scaling_counterexample(&x, &v_in, &v_out, class, eps)?;
            let order = 2 * x.nrows();
            let a = netsim::markov_parameters(&x, &v_in, &v_out, order)?;
            let b = netsim::markov_parameters(ce.matrix(), &v_in, &v_out, order)?;
            let diff = a.max_scaled_difference(&b).unwrap_or(f64::INFINITY);
            let kind = match &ce {
                netsim::Counterexample::Similarity { epsilon, .. } => json!({"kind": "similarity", "epsilon": epsilon}),
                netsim::Counterexample::HiddenBlockIndependent { .. } => json!({"kind": "hidden-block-shift"}),
            };
            let notes = vec![format!(
                "hidden nodes {:?}; Markov parameters agree up to order {order} within {diff:e} (scaled)",
                ce.hidden().as_slice()
            )];
            let mut extra = json!({"hidden": ce.hidden(), "markov_difference": diff, "order": order});
            if let (Value::Object(dst), Value::Object(src)) = (&mut extra, kind) {
                dst.extend(src);
            }
            Ok(matrix_outcome(ce.matrix(), notes, extra))
        }
    }
}

fn hod(cmd: &HodCmd) -> Result<Outcome> {
    match cmd {
        HodCmd::Check { dynamics, order, tol } => {
            let d: NodeDynamics = read_json(dynamics)?;
            let horizon = order.unwrap_or(2 * d.state_dim());
            let report = higher_order::coupling_condition_with_tol(&d, horizon, *tol)?;
            let human = match report.first_failure {
                None => format!("coupling condition holds for k = 0..={horizon}\n"),
                Some(k) => format!("coupling condition fails at k = {k}\n"),
            };
            let mut o = Outcome::json(to_value(&report), human);
            if let Some(k) = report.first_failure {
                o.notes.push(format!("error: C (EK)^{k} B vanishes"));
                o.status = 1;
            }
            Ok(o)
        }
        HodCmd::Markov {
            matrix,
            dynamics,
            nodes,
            graph,
            order,
        } => {
            let entries = read_matrix_csv(matrix)?;
            let x = match graph {
                Some(path) => WeightMatrix::new(load_graph(path)?, entries)?,
                None => WeightMatrix::from_pattern(entries)?,
            };
            let d: NodeDynamics = read_json(dynamics)?;
            let order = order.unwrap_or(2 * x.graph().n());
            let sys = LiftedSystem::new(x, d, node_set(&nodes.v_in)?, node_set(&nodes.v_out)?)?;
            Ok(markov_outcome(&higher_order::lifted_markov(&sys, order)))
        }
        HodCmd::Recover {
            graph,
            markov,
            dynamics,
            recovery,
        } => {
            let g = load_graph(&graph.graph)?;
            let lifted: MarkovSequence = read_json(markov)?;
            let d: NodeDynamics = read_json(dynamics)?;
            let target = recovery_target(&g, &lifted, recovery)?;
            let result = higher_order::recover(&lifted, &d, &g, &target)?;
            recovery_outcome(&result, recovery)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_tree_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn inline_sets() {
        assert_eq!(node_set("[2, 1]").unwrap(), NodeSet::from([1, 2]));
        assert!(matches!(node_set("[1,"), Err(Error::Format(_))));
    }
}
