//! `spr`: generate graphs, run the ball-growing clustering, and check or
//! analyze its output.
//!
//! Exit codes: 0 success, 1 violations found by `verify`, 2 usage or
//! argument errors, 3 I/O and format errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use spr_core::analysis::covering::CoveringCheck;
use spr_core::analysis::intervals::terminal_free_pairs;
use spr_core::analysis::{
    check_covering, failure_rate, fbound_check, reconstruct_ledgers, summarize_covering, AnalysisContext, CheckReport,
    DetourLedger,
};
use spr_core::experiment::{run_experiment, ExperimentSpec};
use spr_core::generate::GraphSpec;
use spr_core::oracle::{best_partition, compare_to_spr};
use spr_core::params::DEFAULT_DELTA;
use spr_core::verify::replay_trace;
use spr_core::{contract, preprocess_subdivide, run_and_contract, DistortionReport, InducedMinor, RunTrace, SprParams, WeightedGraph};

#[derive(Parser)]
#[command(name = "spr", version, about = "Steiner point removal by randomized ball growing")]
struct Cli {
    /// Worker threads for parallel commands (default: one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph: `spr gen grid width=4 height=3 terminals=corners`.
    Gen(GenArgs),
    /// Run the clustering and write the trace, minor and distortion report.
    Run(RunArgs),
    /// Distortion report of a trace's partition or of a minor file.
    Distort(DistortArgs),
    /// Replay a trace against its graph and check every step.
    Verify(VerifyArgs),
    /// Exhaustive best partition of a small graph.
    Oracle(OracleArgs),
    /// Rebuild interval partitions and detour ledgers for a terminal pair.
    Analyze(AnalyzeArgs),
    /// Batch runs from a JSON experiment spec.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GenArgs {
    /// path, cycle, star, complete-binary-tree, grid or random-weighted.
    family: String,
    /// Family parameters as key=value.
    params: Vec<String>,
    #[arg(long, env = "SPR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, env = "SPR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Subdivide long edges before running.
    #[arg(long)]
    subdivide: bool,
    #[arg(long)]
    max_rounds: Option<u64>,
    /// Trace path; the other outputs are written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write covering-event counts.
    #[arg(long)]
    analyze: bool,
}

#[derive(Args)]
struct DistortArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, required_unless_present = "minor", conflicts_with = "minor")]
    trace: Option<PathBuf>,
    /// Minor in graph text format, labelled with the graph's terminals.
    #[arg(long)]
    minor: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// The graph the trace was run on, before any subdivision.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Also run the clustering with this many consecutive seeds.
    #[arg(long)]
    compare: Option<u64>,
    #[arg(long, env = "SPR_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Terminal labels; the path between them is split at other terminals.
    #[arg(long, num_args = 2, value_names = ["T", "T2"], required = true)]
    pair: Vec<String>,
    /// Directory of trace JSON files; other files are skipped.
    #[arg(long)]
    traces: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the spec's base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    analyze: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Distort(a) => distort(a),
        Command::Verify(a) => verify(a),
        Command::Oracle(a) => oracle(a),
        Command::Analyze(a) => analyze(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<spr_core::Error>() {
            return match e {
                spr_core::Error::Io(_) | spr_core::Error::Json(_) | spr_core::Error::Csv(_) | spr_core::Error::Parse { .. } => 3,
                _ => 2,
            };
        }
        if cause.is::<io::Error>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return 3;
        }
    }
    2
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(p) => write_file(p, contents),
        None => {
            let mut stdout = io::stdout().lock();
            let written = stdout.write_all(contents.as_bytes()).and_then(|_| {
                if contents.ends_with('\n') {
                    Ok(())
                } else {
                    stdout.write_all(b"\n")
                }
            });
            match written {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
                r => Ok(r?),
            }
        }
    }
}

fn read_graph(path: &Path) -> Result<WeightedGraph> {
    WeightedGraph::from_text(&read_file(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_trace(path: &Path) -> Result<RunTrace> {
    RunTrace::from_json(&read_file(path)?).with_context(|| format!("parsing {}", path.display()))
}

/// `dir/stem.json` -> `dir/stem.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

/// The graph a trace ran on: subdivided again if the trace says so.
fn run_graph_for(graph: WeightedGraph, trace: &RunTrace) -> Result<WeightedGraph> {
    if !trace.params.subdivided {
        return Ok(graph);
    }
    let params = SprParams::new(graph.terminal_count(), trace.params.seed).with_delta(trace.params.delta)?;
    Ok(preprocess_subdivide(&graph, &params)?.graph)
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let mut obj = Map::new();
    obj.insert("family".into(), Value::String(a.family.clone()));
    for p in &a.params {
        let (k, v) = p.split_once('=').ok_or_else(|| anyhow!("expected key=value, got {p:?}"))?;
        obj.insert(k.replace('-', "_"), parse_value(v));
    }
    let spec: GraphSpec = serde_json::from_value(Value::Object(obj))
        .map_err(|e| spr_core::Error::InvalidArgument(format!("{} parameters: {e}", a.family)))?;
    let g = spec.generate(a.seed)?;
    emit(a.out.as_deref(), &g.to_text())?;
    Ok(ExitCode::SUCCESS)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let mut params = SprParams::new(g.terminal_count(), a.seed).with_delta(a.delta)?;
    params.max_rounds_guard = a.max_rounds;
    let sub = if a.subdivide { Some(preprocess_subdivide(&g, &params)?) } else { None };
    let run_graph = sub.as_ref().map_or(&g, |s| &s.graph);
    let mut out = run_and_contract(run_graph, &params)?;
    out.trace.params.subdivided = a.subdivide;

    write_file(&a.out, &out.trace.to_json()?)?;
    write_file(&sibling(&a.out, "minor.txt"), &out.minor.to_graph(run_graph)?.to_text())?;
    write_file(&sibling(&a.out, "distortion.json"), &out.report.to_json()?)?;
    if let Some(s) = &sub {
        write_file(&sibling(&a.out, "subdivided.txt"), &s.graph.to_text())?;
    }
    println!(
        "n = {}, k = {}, rounds = {}, max distortion {:.6}, mean {:.6}",
        run_graph.vertex_count(),
        run_graph.terminal_count(),
        out.trace.rounds,
        out.report.max_ratio(),
        out.report.mean_ratio()
    );
    if a.analyze && run_graph.terminal_count() >= 2 {
        let c = check_covering(&out.trace, run_graph, &params)?;
        let summary = covering_summary(&c);
        write_file(&sibling(&a.out, "covering.json"), &serde_json::to_string_pretty(&summary)?)?;
        println!(
            "late covers {}, early covers {}, spread violations {}",
            c.late, c.early, c.spread_violations
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn covering_summary(c: &CoveringCheck) -> Value {
    json!({
        "covers": c.covers.len(),
        "late": c.late,
        "early": c.early,
        "groups": c.groups.len(),
        "spread_violations": c.spread_violations,
        "max_spread": c.max_spread(),
    })
}

fn distortion_output(report: &DistortionReport, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(report.to_json()?),
        Format::Csv => csv_string(&report.pairs),
    }
}

fn distort(a: DistortArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let report = if let Some(t) = &a.trace {
        let trace = read_trace(t)?;
        let rg = run_graph_for(g, &trace)?;
        let p = trace.partition(rg.vertex_count(), rg.terminals())?;
        contract(&rg, &p)?.report()?
    } else {
        let path = a.minor.as_deref().expect("clap requires --trace or --minor");
        InducedMinor::from_graph(&g, &read_graph(path)?)?.report()?
    };
    emit(a.out.as_deref(), &distortion_output(&report, a.format)?)?;
    Ok(ExitCode::SUCCESS)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let trace = read_trace(&a.trace)?;
    let g = run_graph_for(read_graph(&a.graph)?, &trace)?;
    let report = replay_trace(&g, &trace)?;
    if a.format == Some(Format::Json) {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        println!(
            "{}: {} steps, {} covers replayed, {} violations",
            if report.is_clean() { "ok" } else { "FAILED" },
            report.steps_checked,
            report.covers_checked,
            report.violations.len()
        );
    }
    Ok(if report.is_clean() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let best = best_partition(&g)?;
    let comparison = match a.compare {
        Some(n) => {
            let params = SprParams::new(g.terminal_count(), a.seed).with_delta(a.delta)?;
            let seeds: Vec<u64> = (0..n).map(|i| a.seed.wrapping_add(i)).collect();
            Some(compare_to_spr(&g, &params, &seeds)?)
        }
        None => None,
    };
    let text = match (a.format, &comparison) {
        (Format::Json, _) => serde_json::to_string_pretty(&json!({ "oracle": best, "comparison": comparison }))?,
        (Format::Csv, Some(c)) => csv_string(c)?,
        (Format::Csv, None) => {
            #[derive(Serialize)]
            struct Row {
                best_distortion: f64,
                valid_partitions: u64,
                candidates: u64,
            }
            csv_string(&[Row {
                best_distortion: best.best_distortion,
                valid_partitions: best.valid_partitions,
                candidates: best.candidates,
            }])?
        }
    };
    emit(a.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn resolve_terminal(g: &WeightedGraph, label: &str) -> Result<usize> {
    g.vertex_by_label(label)
        .and_then(|v| g.terminal_index(v))
        .ok_or_else(|| spr_core::Error::InvalidArgument(format!("{label} is not a terminal of the graph")).into())
}

/// Trace files in `dir`, sorted by name. JSON files that are not traces
/// (distortion reports, for instance) are skipped.
fn load_traces(dir: &Path) -> Result<Vec<(String, RunTrace)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.sort();
    let mut out = Vec::new();
    for p in paths {
        if p.extension().is_none_or(|e| e != "json") {
            continue;
        }
        if let Ok(t) = RunTrace::from_json(&read_file(&p)?) {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), t));
        }
    }
    if out.is_empty() {
        bail!(spr_core::Error::InvalidArgument(format!("no trace files in {}", dir.display())));
    }
    Ok(out)
}

#[derive(Serialize)]
struct LedgerRow<'a> {
    trace: &'a str,
    seed: u64,
    from: usize,
    to: usize,
    length: f64,
    intervals: usize,
    detours: usize,
    surviving: usize,
    steps: usize,
    qualifying: usize,
    failures: usize,
    cost: f64,
    cost_ratio: f64,
    violations: usize,
}

fn analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let g = read_graph(&a.graph)?;
    let (from, to) = (resolve_terminal(&g, &a.pair[0])?, resolve_terminal(&g, &a.pair[1])?);
    let traces = load_traces(&a.traces)?;
    let first = &traces[0].1.params;
    if let Some((name, _)) = traces
        .iter()
        .find(|(_, t)| t.params.delta != first.delta || t.params.subdivided != first.subdivided)
    {
        bail!(spr_core::Error::InvalidArgument(format!(
            "{name} uses different delta or subdivision than {}",
            traces[0].0
        )));
    }
    let k = g.terminal_count();
    let base = SprParams::new(k, first.seed).with_delta(first.delta)?;
    let rg = run_graph_for(g, &traces[0].1)?;
    let pairs = terminal_free_pairs(&rg, from, to)?;
    let ctx = AnalysisContext::new(&rg, &base, &pairs)?;

    let mut ledgers: Vec<(usize, DetourLedger)> = Vec::new();
    let mut covering = Vec::new();
    for (i, (_, t)) in traces.iter().enumerate() {
        let params = base.with_seed(t.params.seed);
        for l in reconstruct_ledgers(t, &rg, &ctx.partitions, &params)? {
            ledgers.push((i, l));
        }
        covering.push(check_covering(t, &rg, &params)?.without_covers());
    }

    if a.format == Format::Csv {
        let rows: Vec<LedgerRow> = ledgers
            .iter()
            .map(|(i, l)| LedgerRow {
                trace: &traces[*i].0,
                seed: traces[*i].1.params.seed,
                from: l.from,
                to: l.to,
                length: l.length,
                intervals: l.interval_count,
                detours: l.detours.len(),
                surviving: l.detours.iter().filter(|d| d.alive()).count(),
                steps: l.steps.len(),
                qualifying: l.steps.iter().filter(|s| s.qualifies).count(),
                failures: l.steps.iter().filter(|s| !s.success).count(),
                cost: l.cost,
                cost_ratio: l.cost_ratio(),
                violations: l.violations.len(),
            })
            .collect();
        emit(a.out.as_deref(), &csv_string(&rows)?)?;
        return Ok(ExitCode::SUCCESS);
    }

    let all: Vec<DetourLedger> = ledgers.into_iter().map(|(_, l)| l).collect();
    let rate = failure_rate(&all);
    let fbound = fbound_check(&all);
    let cover = summarize_covering(&covering);
    let n = traces.len() as u64;
    let seed = first.seed;
    let kf = k as f64;
    let interval_violations: usize = ctx.partitions.iter().map(|p| p.violations().len()).sum();
    let ledger_violations: usize = all.iter().map(|l| l.violations.len()).sum();
    let checks = vec![
        CheckReport::at_most("interval invariants", interval_violations as f64, 0.0, 0.0, ctx.partitions.len() as u64, seed),
        CheckReport::at_most("ledger structure", ledger_violations as f64, 0.0, 0.0, all.len() as u64, seed),
        CheckReport::at_most(
            "charging failure rate",
            rate.qualifying.rate(),
            rate.bound,
            3.0 * rate.sigma,
            rate.qualifying.trials,
            seed,
        ),
        fbound.check(2.0 / (kf * kf * kf), seed),
        CheckReport::at_most("late covering rate", cover.late_rate(), 5.0 / kf, 0.0, n, seed),
        CheckReport::at_most("early covering rate", cover.early_rate(), 0.05, 0.0, n, seed),
    ];
    let partitions: Vec<Value> = ctx
        .partitions
        .iter()
        .map(|p| {
            json!({
                "from": p.from,
                "to": p.to,
                "length": p.length(),
                "edges": p.edge_count(),
                "intervals": p.intervals.len(),
                "external_sum": p.external_sum(),
            })
        })
        .collect();
    let report = json!({
        "pair": [from, to],
        "pairs": pairs,
        "traces": traces.iter().map(|(name, _)| name).collect::<Vec<_>>(),
        "partitions": partitions,
        "checks": checks,
        "failure_rate": rate,
        "fbound": fbound,
        "covering": cover,
    });
    emit(a.out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
    for c in &checks {
        eprintln!("{}", c.line());
    }
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::from_json(&read_file(&a.spec)?).with_context(|| format!("parsing {}", a.spec.display()))?;
    if let Some(s) = a.seed {
        spec.base_seed = s;
    }
    spec.analyze |= a.analyze;
    let out = run_experiment(&spec)?;
    let text = match a.format {
        Format::Csv => out.to_csv_string()?,
        Format::Json => out.to_json()?,
    };
    emit(a.out.as_deref(), &text)?;
    let failed = out.rows.iter().filter(|r| !r.error.is_empty()).count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed; see the error column", out.rows.len());
    }
    Ok(ExitCode::SUCCESS)
}
