//! `ddalias`: run, verify and explain the alias analyses on IR files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ddalias::devirt::{devirtualize, CallResolution, DevirtReport, Metrics};
use ddalias::gen::{generate, GenConfig, Shape};
use ddalias::oracle::{
    check_demand_origin, check_mfp_vs_mop, check_precision_chain, check_soundness_of, runs_cleanly,
    OracleError, Report, Violation,
};
use ddalias::solver::{check_fixpoint, diagnostics_trace};
use ddalias::transfer::validate;
use ddalias::{
    parse_program, solve_with, Abstraction, AnalysisError, IrError, Mutation, ProgramIR,
    SolveOptions, SolveResult, Variant, VariantConfig, WorklistOrder,
};

#[derive(Parser, Debug)]
#[command(
    name = "ddalias",
    version,
    about = "Demand-driven alias analysis for a small object-oriented IR"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the demands and aliases at every node.
    Analyze(RunArgs),
    /// Check the analyses against path enumeration and concrete runs.
    Verify(VerifyArgs),
    /// Resolve the virtual calls and print the precision metrics.
    Devirt(RunArgs),
    /// Print the round-by-round table of demands and points-to edges.
    Trace(RunArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    Id,
    Cd,
    Ex,
    Jd,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum AbstractionArg {
    Tba,
    Asb,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum OrderArg {
    Fifo,
    Lifo,
    Rpo,
    /// Random extraction seeded by `--seed`.
    Shuffled,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum MutationArg {
    /// Id without demands for addresses of variables.
    NoAddrSpeculation,
}

#[derive(Args, Debug)]
struct RunArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "id")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "tba")]
    abstraction: AbstractionArg,
    /// Name objects only after their allocation is relevant (tba only).
    #[arg(long)]
    object_store: bool,
    /// Kill aliases only of pointers dereferenced on some left side.
    #[arg(long)]
    used_pointer_store: bool,
    /// Append the round table to `analyze` output.
    #[arg(long)]
    trace: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, value_enum, default_value = "fifo")]
    order: OrderArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum node visits before giving up.
    #[arg(long)]
    budget: Option<u64>,
    /// Include wall time in `devirt` output.
    #[arg(long)]
    timing: bool,
    /// Run a deliberately broken analysis.
    #[arg(long, value_enum)]
    mutate: Option<MutationArg>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Program to check; omit with `--random`.
    #[arg(required_unless_present = "random")]
    input: Option<PathBuf>,
    /// Check only this abstraction instead of both.
    #[arg(long, value_enum)]
    abstraction: Option<AbstractionArg>,
    /// Use the object store wherever the abstraction is tba.
    #[arg(long)]
    object_store: bool,
    /// Use the used-pointer store.
    #[arg(long)]
    used_pointer_store: bool,
    /// Longest enumerated path, in statements.
    #[arg(long, default_value_t = 16)]
    max_path_len: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Check this many generated acyclic programs.
    #[arg(long)]
    random: Option<usize>,
    /// First seed of the generated programs.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a deliberately broken analysis.
    #[arg(long, value_enum)]
    mutate: Option<MutationArg>,
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Parse(IrError),
    Analysis(AnalysisError),
    Oracle(OracleError),
    Violations(Report),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) | CliError::Parse(_) => 1,
            CliError::Analysis(e) | CliError::Oracle(OracleError::Analysis(e)) => match e {
                AnalysisError::JdForbidden { .. }
                | AnalysisError::InvalidConfig(_)
                | AnalysisError::Unsupported(_) => 1,
                AnalysisError::MethodNotInHierarchy { .. }
                | AnalysisError::BudgetExceeded { .. } => 2,
            },
            CliError::Oracle(_) => 2,
            CliError::Violations(_) => 3,
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Analysis(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e)
    }
}

fn variant(v: VariantArg) -> Variant {
    match v {
        VariantArg::Id => Variant::Id,
        VariantArg::Cd => Variant::Cd,
        VariantArg::Ex => Variant::Ex,
        VariantArg::Jd => Variant::Jd,
    }
}

fn abstraction(a: AbstractionArg) -> Abstraction {
    match a {
        AbstractionArg::Tba => Abstraction::Tba,
        AbstractionArg::Asb => Abstraction::Asb,
    }
}

fn mutation(m: Option<MutationArg>) -> Option<Mutation> {
    m.map(|MutationArg::NoAddrSpeculation| Mutation::NoAddrSpeculation)
}

fn load(path: &Path) -> Result<ProgramIR, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_program(&text).map_err(CliError::Parse)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

impl RunArgs {
    fn config(&self) -> VariantConfig {
        VariantConfig::new(variant(self.variant), abstraction(self.abstraction))
            .with_object_store(self.object_store)
            .with_used_pointer_store(self.used_pointer_store)
            .with_mutation(mutation(self.mutate))
    }

    fn solve(&self, p: &ProgramIR, trace: bool) -> Result<SolveResult, CliError> {
        let order = match self.order {
            OrderArg::Fifo => WorklistOrder::Fifo,
            OrderArg::Lifo => WorklistOrder::Lifo,
            OrderArg::Rpo => WorklistOrder::Rpo,
            OrderArg::Shuffled => WorklistOrder::Shuffled(self.seed),
        };
        Ok(solve_with(
            p,
            self.config(),
            SolveOptions {
                order,
                trace,
                budget: self.budget,
            },
        )?)
    }
}

#[derive(Serialize)]
struct NodeJson {
    id: String,
    din: Vec<String>,
    dout: Vec<String>,
    ain: Vec<String>,
    aout: Vec<String>,
}

#[derive(Serialize)]
struct AnalyzeJson {
    program: String,
    variant: String,
    abstraction: String,
    nodes: Vec<NodeJson>,
    calls: Vec<CallResolution>,
    metrics: Metrics,
}

fn cmd_analyze(args: &RunArgs) -> Result<String, CliError> {
    let p = load(&args.input)?;
    let r = args.solve(&p, args.trace)?;
    let names = &r.names;
    let report = devirtualize(&r, &p);
    if args.format == Format::Json {
        let texts = |d: &ddalias::DemandSet| d.iter().map(|&x| names.text(x).to_string()).collect();
        let pairs = |a: &ddalias::AliasRel| a.iter().map(|e| names.render_pair(e)).collect();
        let nodes = r
            .graph
            .ids()
            .map(|n| {
                let st = r.state(n);
                NodeJson {
                    id: r.graph.node(n).label.clone(),
                    din: texts(&r.din(n)),
                    dout: texts(&r.dout(n)),
                    ain: pairs(&st.ain),
                    aout: pairs(&st.aout),
                }
            })
            .collect();
        let out = AnalyzeJson {
            program: file_name(&args.input),
            variant: report.variant,
            abstraction: report.abstraction,
            nodes,
            calls: report.calls,
            metrics: report.metrics,
        };
        return Ok(serde_json::to_string_pretty(&out).expect("serializable") + "\n");
    }
    let mut out = String::new();
    for n in r.graph.ids() {
        let st = r.state(n);
        let label = &r.graph.node(n).label;
        let (din, dout) = if r.universal_demand() {
            ("all".to_string(), "all".to_string())
        } else {
            (names.render_set(&st.din), names.render_set(&st.dout))
        };
        out.push_str(&format!("{label} Din: {din}\n"));
        out.push_str(&format!("{label} Dout: {dout}\n"));
        out.push_str(&format!(
            "{label} Ain: {}\n",
            names.render_pairs(st.ain.iter())
        ));
        out.push_str(&format!(
            "{label} Aout: {}\n",
            names.render_pairs(st.aout.iter())
        ));
    }
    out.push_str(&report.render_text());
    if args.trace {
        out.push_str(&diagnostics_trace(&r, &p).render());
    }
    Ok(out)
}

fn cmd_devirt(args: &RunArgs) -> Result<String, CliError> {
    let p = load(&args.input)?;
    let r = args.solve(&p, false)?;
    let mut report: DevirtReport = devirtualize(&r, &p);
    report.program = file_name(&args.input);
    if !args.timing {
        report.perf.ms = None;
    }
    Ok(match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => {
            let mut out = report.render_text();
            out.push_str(&format!(
                "nodes={} visits={}",
                report.perf.nodes, report.perf.visits
            ));
            if let Some(ms) = report.perf.ms {
                out.push_str(&format!(" ms={ms:.3}"));
            }
            out.push('\n');
            out
        }
    })
}

fn cmd_trace(args: &RunArgs) -> Result<String, CliError> {
    let p = load(&args.input)?;
    let r = args.solve(&p, true)?;
    let table = diagnostics_trace(&r, &p);
    Ok(match args.format {
        Format::Json => serde_json::to_string_pretty(&table).expect("serializable") + "\n",
        Format::Text => table.render(),
    })
}

/// Runs every check on one program.
fn verify_program(p: &ProgramIR, args: &VerifyArgs) -> Result<Report, CliError> {
    let abstractions = match args.abstraction {
        Some(a) => vec![abstraction(a)],
        None => vec![Abstraction::Tba, Abstraction::Asb],
    };
    let concrete = runs_cleanly(p);
    let mut rep = Report::default();
    for &a in &abstractions {
        for v in [Variant::Id, Variant::Cd, Variant::Ex, Variant::Jd] {
            let mut cfg = VariantConfig::new(v, a)
                .with_object_store(args.object_store && a == Abstraction::Tba)
                .with_used_pointer_store(args.used_pointer_store);
            if v == Variant::Id {
                cfg = cfg.with_mutation(mutation(args.mutate));
            }
            if validate(p, &cfg).is_err() {
                continue;
            }
            let r = solve_with(p, cfg, SolveOptions::default())?;
            rep.extend(check_mfp_vs_mop(p, cfg, args.max_path_len)?);
            if concrete {
                rep.extend(check_soundness_of(p, &r)?);
            }
            if v != Variant::Ex {
                rep.extend(check_demand_origin(p, &r));
            }
            let unstable = check_fixpoint(p, &r)?;
            rep.checks_run += 1;
            rep.violations
                .extend(unstable.into_iter().map(|msg| Violation {
                    check: "fixpoint".to_string(),
                    node: msg.split(':').next().unwrap_or_default().to_string(),
                    witness: format!("{v} under {a}"),
                    expected: "no change on re-application".to_string(),
                    actual: msg,
                }));
        }
        rep.extend(check_precision_chain(p, a)?);
    }
    Ok(rep)
}

/// Verifies `count` generated programs on all available cores and merges
/// the reports in seed order.
fn verify_random(args: &VerifyArgs, count: usize) -> Result<Report, CliError> {
    let cfg = &GenConfig::small(Shape::Acyclic, 10);
    let seeds: Vec<u64> = (0..count as u64)
        .map(|k| args.seed.wrapping_add(k))
        .collect();
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(seeds.len().max(1));
    let chunk = seeds.len().div_ceil(workers).max(1);
    let results: Vec<Result<Report, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|&seed| {
                            let mut rep = verify_program(&generate(cfg, seed), args)?;
                            for v in &mut rep.violations {
                                v.witness = format!("seed {seed}: {}", v.witness);
                            }
                            Ok(rep)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut rep = Report::default();
    for r in results {
        rep.extend(r?);
    }
    Ok(rep)
}

fn cmd_verify(args: &VerifyArgs) -> Result<String, CliError> {
    let rep = match (&args.input, args.random) {
        (_, Some(n)) => verify_random(args, n)?,
        (Some(path), None) => verify_program(&load(path)?, args)?,
        (None, None) => unreachable!("clap requires an input without --random"),
    };
    if !rep.passed() {
        return Err(CliError::Violations(rep));
    }
    Ok(match args.format {
        Format::Json => rep.to_json() + "\n",
        Format::Text => format!("ok: {} checks, 0 violations\n", rep.checks_run),
    })
}

/// Writes to standard output, ignoring a reader that went away.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Devirt(a) => cmd_devirt(a),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(out) => {
            emit(&out);
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Io(msg) => eprintln!("error: {msg}"),
                CliError::Parse(err) => eprintln!("error: {err}"),
                CliError::Analysis(err) => eprintln!("error: {err}"),
                CliError::Oracle(err) => eprintln!("error: {err}"),
                CliError::Violations(rep) => {
                    emit(&(rep.to_json() + "\n"));
                    eprintln!(
                        "error: {} of {} checks failed",
                        rep.violations.len(),
                        rep.checks_run
                    );
                }
            }
            ExitCode::from(e.exit_code())
        }
    }
}
