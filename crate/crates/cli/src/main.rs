use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use liftmix::conductance::{phi_chain, phi_graph};
use liftmix::constructions::{
    bridges_to, clock_lift, diameter_mixer, diaconis_cycle_lift, four_cycle_lift, lazy_diaconis_cycle_lift,
    node_clock_lift, periodic_clock_lift, periodic_node_clock_lift, stochastic_bridge, MixerParams, MixerVariant,
};
use liftmix::graph::{diameter, Graph};
use liftmix::lift::{scenario_report, Lift, ReportOptions, ScenarioSpec};
use liftmix::markov::{stationary, Distribution, StochasticMatrix, TimeVaryingChain};
use liftmix::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "liftmix", version, about = "Build and analyze lifted Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Graph utilities.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Conductance of a chain or of a graph.
    #[command(subcommand)]
    Conductance(ConductanceCmd),
    /// Local bridge taking one distribution to another in diameter steps.
    Bridge(BridgeArgs),
    /// Build or analyze lifts.
    #[command(subcommand)]
    Lift(LiftCmd),
    /// Run a named verification suite.
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Node count and diameter.
    Stats { file: PathBuf },
}

#[derive(Subcommand)]
enum ConductanceCmd {
    /// Minimum cut conductance of a chain.
    Chain {
        #[arg(long)]
        chain: PathBuf,
        /// `uniform`, `node:K` or a distribution file; defaults to the stationary distribution.
        #[arg(long)]
        pi: Option<String>,
    },
    /// Largest conductance over chains local to a graph with stationary `pi`.
    Graph {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value = "uniform")]
        pi: String,
    },
}

#[derive(Args)]
struct BridgeArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    src: String,
    #[arg(long, default_value = "uniform")]
    dst: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Construction {
    Clock,
    PeriodicClock,
    NodeClock,
    PeriodicNodeClock,
    Diameter,
    Diaconis,
    FourCycle,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Reducible,
    Flows,
    Irreducible,
}

impl From<Variant> for MixerVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Reducible => MixerVariant::Reducible,
            Variant::Flows => MixerVariant::Flows,
            Variant::Irreducible => MixerVariant::Irreducible,
        }
    }
}

#[derive(Subcommand)]
enum LiftCmd {
    /// Write a lift bundle.
    Build(BuildArgs),
    /// Measure a lift bundle against a scenario.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    construction: Construction,
    #[arg(long, value_enum, default_value = "reducible")]
    variant: Variant,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value = "uniform")]
    pi: String,
    #[arg(long)]
    ref_chain: Option<PathBuf>,
    /// Time-varying chain for the clock constructions.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Cycle length for the Diaconis lift.
    #[arg(long)]
    n: Option<usize>,
    /// Holding probability for the lazy Diaconis lift.
    #[arg(long)]
    hold: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the reference chain of a four-cycle lift.
    #[arg(long)]
    ref_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value = "uniform")]
    pi: String,
    #[arg(long)]
    ref_chain: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long)]
    t_max: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Also write the CSV summary here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

enum Failure {
    /// Bad input: unreadable file, malformed JSON, missing option.
    Usage(String),
    /// A computation failed or a check did not pass.
    Numerical(String),
}

impl From<liftmix::Error> for Failure {
    fn from(e: liftmix::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Outcome {
    fs::write(path, contents).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize")
}

/// `uniform`, `node:K`, or a distribution file.
fn distribution(spec: &str, n: usize) -> Result<Distribution, Failure> {
    let pi = match spec {
        "uniform" => Distribution::uniform(n),
        _ => match spec.strip_prefix("node:") {
            Some(k) => {
                let k: usize = k.parse().map_err(|_| Failure::Usage(format!("bad node in {spec:?}")))?;
                if k >= n {
                    return Err(Failure::Usage(format!("node {k} out of range for {n} nodes")));
                }
                Distribution::point(n, k)
            }
            None => read_json(Path::new(spec))?,
        },
    };
    if pi.len() != n {
        return Err(Failure::Usage(format!("distribution has {} entries, expected {n}", pi.len())));
    }
    Ok(pi)
}

fn require<T>(value: Option<T>, flag: &str, construction: &str) -> Result<T, Failure> {
    value.ok_or_else(|| Failure::Usage(format!("--{flag} is required for --construction {construction}")))
}

fn graph_stats(file: &Path) -> Outcome {
    let g: Graph = read_json(file)?;
    println!("{}", to_json(&json!({ "n": g.n(), "diameter": diameter(&g)? })));
    Ok(())
}

fn conductance(cmd: ConductanceCmd) -> Outcome {
    match cmd {
        ConductanceCmd::Chain { chain, pi } => {
            let p: StochasticMatrix = read_json(&chain)?;
            let pi = match pi {
                Some(spec) => distribution(&spec, p.n())?,
                None => stationary(&p)?,
            };
            let best = phi_chain(&p, &pi)?;
            println!("{}", to_json(&json!({ "phi": best.phi, "argmin_cut": best.argmin.members() })));
        }
        ConductanceCmd::Graph { graph, pi } => {
            let g: Graph = read_json(&graph)?;
            let pi = distribution(&pi, g.n())?;
            let best = phi_graph(&g, &pi)?;
            println!("{}", to_json(&json!({ "phi": best.phi, "argmax_chain": best.chain })));
        }
    }
    Ok(())
}

fn bridge(args: BridgeArgs) -> Outcome {
    let g: Graph = read_json(&args.graph)?;
    let src = distribution(&args.src, g.n())?;
    let dst = distribution(&args.dst, g.n())?;
    let chain = stochastic_bridge(&g, &src, &dst)?;
    let text = to_json(&chain);
    match args.out {
        Some(path) => write_file(&path, &text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn build(args: BuildArgs) -> Outcome {
    let name = match args.construction {
        Construction::Clock => "clock",
        Construction::PeriodicClock => "periodic-clock",
        Construction::NodeClock => "node-clock",
        Construction::PeriodicNodeClock => "periodic-node-clock",
        Construction::Diameter => "diameter",
        Construction::Diaconis => "diaconis",
        Construction::FourCycle => "four-cycle",
    };
    let graph = || -> Result<Graph, Failure> { read_json(require(args.graph.as_ref(), "graph", name)?) };
    let lift: Lift = match args.construction {
        Construction::Clock | Construction::PeriodicClock => {
            let g = graph()?;
            let chain: TimeVaryingChain = read_json(require(args.chain.as_ref(), "chain", name)?)?;
            if matches!(args.construction, Construction::Clock) {
                clock_lift(&g, &chain)?
            } else {
                periodic_clock_lift(&g, &chain)?
            }
        }
        Construction::NodeClock => {
            let g = graph()?;
            let pi = distribution(&args.pi, g.n())?;
            node_clock_lift(&g, &bridges_to(&g, &pi)?, &pi)?
        }
        Construction::PeriodicNodeClock => {
            let g = graph()?;
            let pi = distribution(&args.pi, g.n())?;
            periodic_node_clock_lift(&g, &bridges_to(&g, &pi)?)?
        }
        Construction::Diameter => {
            let g = graph()?;
            let pi = distribution(&args.pi, g.n())?;
            let mut params = MixerParams::default();
            if let Some(gamma) = args.gamma {
                params.gamma = gamma;
            }
            if let Some(path) = &args.ref_chain {
                params.reference = Some(read_json(path)?);
            }
            diameter_mixer(&g, &pi, args.variant.into(), &params)?.lift
        }
        Construction::Diaconis => {
            let n = require(args.n, "n", name)?;
            match args.hold {
                Some(hold) => lazy_diaconis_cycle_lift(n, hold)?,
                None => diaconis_cycle_lift(n)?,
            }
        }
        Construction::FourCycle => {
            let delta = require(args.delta, "delta", name)?;
            let fc = four_cycle_lift(delta, args.gamma.unwrap_or(0.01))?;
            if let Some(path) = &args.ref_out {
                write_file(path, &to_json(&fc.reference))?;
            }
            fc.lift
        }
    };
    write_file(&args.out, &to_json(&lift))?;
    eprintln!("wrote {} ({} lifted nodes)", args.out.display(), lift.lifted_n());
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Outcome {
    let lift: Lift = read_json(&args.bundle)?;
    let spec: ScenarioSpec = args.scenario.parse().map_err(|e: liftmix::Error| Failure::Usage(e.to_string()))?;
    let pi = distribution(&args.pi, lift.base_n())?;
    let reference: Option<StochasticMatrix> = args.ref_chain.as_deref().map(read_json).transpose()?;
    let options = ReportOptions {
        eps: args.eps,
        t_max: args.t_max,
    };
    let report = scenario_report(&lift, &spec, &pi, reference.as_ref(), options)?;
    let mut out = serde_json::to_value(&report).expect("report serializes");
    out["version"] = json!(env!("CARGO_PKG_VERSION"));
    out["tolerances"] = json!(verify::tolerances());
    println!("{}", to_json(&out));
    if report.pass {
        return Ok(());
    }
    let mut failed: Vec<String> = report.bounds.iter().filter(|b| !b.holds).map(|b| b.name.clone()).collect();
    if report.invariance == Some(false) {
        failed.push("invariance".into());
    }
    if report.flows_ok == Some(false) {
        failed.push("flows".into());
    }
    if spec.irreducible && !report.irreducible {
        failed.push("irreducible".into());
    }
    if failed.is_empty() {
        failed.push("mixing".into());
    }
    Err(Failure::Numerical(format!("scenario {spec} failed: {}", failed.join(", "))))
}

#[derive(Serialize)]
struct CsvRow<'a> {
    check: &'a str,
    measured: Option<f64>,
    bound: Option<f64>,
    pass: bool,
}

fn csv_summary(report: &verify::SuiteReport) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.checks {
        w.serialize(CsvRow {
            check: &c.check,
            measured: c.measured,
            bound: c.bound,
            pass: c.pass,
        })
        .map_err(|e| Failure::Numerical(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run_verify(args: VerifyArgs) -> Outcome {
    let report = verify::run(args.suite, args.seed)?;
    let csv = csv_summary(&report)?;
    match args.format {
        Format::Json => println!("{}", to_json(&report)),
        Format::Csv => print!("{csv}"),
    }
    if let Some(path) = &args.csv {
        write_file(path, &csv)?;
    }
    let failed: Vec<&str> = report.failures().map(|c| c.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("suite {} failed: {}", args.suite, failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Graph(GraphCmd::Stats { file }) => graph_stats(&file),
        Command::Conductance(cmd) => conductance(cmd),
        Command::Bridge(args) => bridge(args),
        Command::Lift(LiftCmd::Build(args)) => build(args),
        Command::Lift(LiftCmd::Analyze(args)) => analyze(args),
        Command::Verify(args) => run_verify(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
