//! Command-line front end: `eval`, `bench` and `primitives`.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{Machine, MachineConfig, Phase, WriteMode};
use crate::oracle::{oracle_eval, OracleLimits};
use crate::query::{parse_query, FractionalCover, Ghd, PlanMode, Query, SizeCheck};
use crate::relstore::{write_csv, Database, Setting};
use crate::run::{evaluate, Evaluator, RunOptions};
use crate::verify::{run_primitive, PrimitiveRun};
use crate::workloads::{generate, loglog_slope};

pub const REPORT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "pramdb", version, about = "Constant-depth PRAM query evaluation on a simulated machine")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate a query or semijoin plan over a database manifest.
    Eval(EvalArgs),
    /// Measure work, depth and space over a generated family.
    Bench(BenchArgs),
    /// Check one primitive's invariants on random input.
    Primitives(PrimArgs),
}

#[derive(Args, Debug, Clone)]
struct MachineArgs {
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Write-conflict resolution: common, arbitrary or priority.
    #[arg(long, default_value = "arbitrary")]
    mode: WriteMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl MachineArgs {
    fn config(&self) -> MachineConfig {
        MachineConfig { write_mode: self.mode, arbitrary_seed: self.seed, ..Default::default() }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Database manifest (JSON).
    manifest: PathBuf,
    /// File holding one rule or one plan.
    query: PathBuf,
    /// Override the manifest's setting.
    #[arg(long)]
    setting: Option<Setting>,
    #[command(flatten)]
    machine: MachineArgs,
    /// auto, plan, acyclic, free-connex, ghd or wcoj.
    #[arg(long, default_value = "auto")]
    evaluator: Evaluator,
    /// Plans: dictionary, ordered or naive.
    #[arg(long)]
    plan_mode: Option<PlanMode>,
    /// Attribute order for wcoj, comma separated.
    #[arg(long, value_delimiter = ',')]
    attr_order: Option<Vec<String>>,
    /// Fractional edge cover for wcoj, one weight per atom, comma separated.
    #[arg(long, value_delimiter = ',')]
    cover: Option<Vec<String>>,
    /// Decomposition (JSON).
    #[arg(long)]
    ghd: Option<PathBuf>,
    /// Compare with the sequential oracle.
    #[arg(long)]
    verify: bool,
    /// Largest relation the oracle accepts.
    #[arg(long, default_value_t = 200)]
    oracle_cap: usize,
    /// Report path; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result CSV path.
    #[arg(long)]
    result: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// uniform, skewed-join, evens-vs-odds, path or triangle.
    family: String,
    #[arg(long, value_delimiter = ',', default_value = "256,512,1024,2048")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    #[command(flatten)]
    machine: MachineArgs,
    #[arg(long, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct PrimArgs {
    /// prefix-sums, compact, padded-sort, links or schedule.
    name: String,
    #[arg(long, default_value_t = 4096)]
    n: usize,
    /// Padded sort: values lie in [0, n^c).
    #[arg(long, default_value_t = 2)]
    c: u32,
    /// Padded sort: replace the first input value.
    #[arg(long)]
    plant: Option<u64>,
    #[command(flatten)]
    machine: MachineArgs,
    #[arg(long)]
    json: bool,
}

#[derive(Serialize, Debug)]
pub struct Parameters {
    pub epsilon: String,
    pub lambda: String,
    pub write_mode: String,
    pub seed: u64,
}

#[derive(Serialize, Debug)]
pub struct ReportMetrics {
    pub work: u64,
    pub depth: u64,
    pub space: u64,
    pub rounds: u64,
}

#[derive(Serialize, Debug)]
pub struct Assertion {
    pub label: String,
    pub value: u64,
    pub bound: u64,
    pub ok: bool,
}

impl From<&SizeCheck> for Assertion {
    fn from(c: &SizeCheck) -> Self {
        Assertion { label: c.label.clone(), value: c.value, bound: c.bound, ok: c.ok() }
    }
}

#[derive(Serialize, Debug)]
pub struct RunReport {
    pub report_version: u32,
    pub query_id: String,
    pub setting: String,
    pub evaluator: String,
    pub parameters: Parameters,
    pub metrics: ReportMetrics,
    pub input_size: u64,
    pub result_cardinality: u64,
    pub oracle_match: Option<bool>,
    pub phases: Vec<Phase>,
    pub assertions: Vec<Assertion>,
    pub notes: Vec<String>,
}

fn params(m: &MachineArgs) -> Parameters {
    Parameters {
        epsilon: m.epsilon.to_string(),
        lambda: m.lambda.to_string(),
        write_mode: m.mode.to_string(),
        seed: m.seed,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes()).and_then(|_| o.flush()).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn read(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn at(p: &Path, e: Error) -> Error {
    match e {
        Error::Parse { loc, msg } => Error::Parse { loc: format!("{}:{loc}", p.display()), msg },
        Error::Decomposition(m) => Error::Decomposition(format!("{}: {m}", p.display())),
        e => e,
    }
}

/// Report and whether every check passed.
fn cmd_eval(a: &EvalArgs) -> Result<(RunReport, bool)> {
    let mut db = Database::from_manifest(&a.manifest)?;
    if let Some(s) = a.setting {
        if s != db.setting {
            db = Database::new(s, db.relations.clone())?;
        }
    }
    let query = parse_query(&read(&a.query)?).map_err(|e| at(&a.query, e))?;
    let ghd = match &a.ghd {
        Some(p) => Some(Ghd::from_json(&read(p)?).map_err(|e| at(p, e))?),
        None => None,
    };
    if let (Some(g), Query::Cq(q)) = (&ghd, &query) {
        g.verify(q).map_err(|e| at(a.ghd.as_deref().unwrap(), e))?;
    }
    let cover = match &a.cover {
        Some(c) => Some(FractionalCover::parse(&c.iter().map(String::as_str).collect::<Vec<_>>())?),
        None => None,
    };
    let opts = RunOptions {
        evaluator: a.evaluator,
        lambda: a.machine.lambda,
        epsilon: a.machine.epsilon,
        plan_mode: a.plan_mode,
        ghd,
        attr_order: a.attr_order.clone(),
        cover,
    };
    let mut m = Machine::new(a.machine.config());
    let o = evaluate(&mut m, &db, &query, &opts)?;
    let oracle_match = if a.verify {
        let lim = OracleLimits { max_tuples: a.oracle_cap, ..Default::default() };
        let want = oracle_eval(&query, &db, lim)?;
        let got: BTreeSet<Vec<String>> = o.rows.iter().cloned().collect();
        Some(got.len() == o.rows.len() && got == want.tuples)
    } else {
        None
    };
    if let Some(p) = &a.result {
        write_csv(p, &o.attrs, &o.rows)?;
    }
    let query_id = match &query {
        Query::Cq(q) => q.name.clone(),
        Query::Plan(_) => a.query.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
    };
    let e = &o.evaluation;
    let met = m.metrics();
    let report = RunReport {
        report_version: REPORT_VERSION,
        query_id,
        setting: db.setting.to_string(),
        evaluator: o.evaluator.name().to_string(),
        parameters: params(&a.machine),
        metrics: ReportMetrics { work: met.work, depth: met.depth, space: met.space, rounds: m.rounds() },
        input_size: e.input,
        result_cardinality: e.out,
        oracle_match,
        phases: met.phases,
        assertions: e.checks.iter().map(Assertion::from).collect(),
        notes: e.notes.clone(),
    };
    let ok = oracle_match != Some(false) && e.passed();
    Ok((report, ok))
}

#[derive(Serialize, Debug, Clone)]
pub struct BenchRow {
    pub n: usize,
    pub rep: usize,
    pub input: u64,
    pub output: u64,
    pub work: u64,
    pub depth: u64,
    pub space: u64,
}

#[derive(Serialize, Debug)]
pub struct BenchReport {
    pub report_version: u32,
    pub family: String,
    pub evaluator: String,
    pub parameters: Parameters,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of ln(work) over ln(input), 4 decimals.
    pub work_slope: Option<String>,
    pub depth_constant: bool,
}

/// One instance of `family` at size `n`, with the machine settings of
/// `cfg`; returns the measured row.
pub fn bench_point(family: &str, n: usize, rep: usize, cfg: MachineConfig, lambda: f64, epsilon: f64) -> Result<(BenchRow, Evaluator)> {
    let w = generate(family, n, cfg.arbitrary_seed.wrapping_add(rep as u64))?;
    let mut m = Machine::new(cfg);
    let opts = RunOptions { evaluator: w.evaluator, lambda, epsilon, ..Default::default() };
    let o = evaluate(&mut m, &w.db, &w.query, &opts)?;
    let row = BenchRow {
        n,
        rep,
        input: o.evaluation.input,
        output: o.evaluation.out,
        work: m.work(),
        depth: m.depth(),
        space: m.space(),
    };
    Ok((row, o.evaluator))
}

fn cmd_bench(a: &BenchArgs) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut ev = Evaluator::Auto;
    for &n in &a.sizes {
        let cfg = a.machine.config();
        let (l, e) = (a.machine.lambda, a.machine.epsilon);
        let fam = a.family.as_str();
        // Repetitions run on independent machines.
        let res: Vec<Result<(BenchRow, Evaluator)>> = std::thread::scope(|s| {
            let hs: Vec<_> =
                (0..a.reps).map(|rep| { let cfg = cfg.clone(); s.spawn(move || bench_point(fam, n, rep, cfg, l, e)) }).collect();
            hs.into_iter().map(|h| h.join().expect("bench thread")).collect()
        });
        for r in res {
            let (row, e) = r?;
            ev = e;
            rows.push(row);
        }
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.input as f64, r.work as f64)).collect();
    let depth_constant = rows.windows(2).all(|w| w[0].depth == w[1].depth);
    Ok(BenchReport {
        report_version: REPORT_VERSION,
        family: a.family.clone(),
        evaluator: ev.name().to_string(),
        parameters: params(&a.machine),
        rows,
        work_slope: loglog_slope(&pts).map(|s| format!("{s:.4}")),
        depth_constant,
    })
}

fn bench_csv(r: &BenchReport) -> String {
    let mut s = String::from("n,rep,input,output,work,depth,space\n");
    for x in &r.rows {
        s += &format!("{},{},{},{},{},{},{}\n", x.n, x.rep, x.input, x.output, x.work, x.depth, x.space);
    }
    s += &format!("# work_slope={} depth_constant={}\n", r.work_slope.as_deref().unwrap_or("n/a"), r.depth_constant);
    s
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable report");
    s.push('\n');
    s
}

/// Runs the CLI on `args` (program name first); returns the exit code:
/// 0 when everything passed, 1 on a failed check or oracle mismatch, 2 on
/// errors.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let res: Result<i32> = match &cli.cmd {
        Cmd::Eval(a) => cmd_eval(a).and_then(|(r, ok)| {
            emit(a.out.as_deref(), &json(&r))?;
            if !ok {
                eprintln!("pramdb: verification failed");
            }
            Ok(if ok { 0 } else { 1 })
        }),
        Cmd::Bench(a) => cmd_bench(a).and_then(|r| {
            let text = match a.format {
                Format::Json => json(&r),
                Format::Csv => bench_csv(&r),
            };
            emit(a.out.as_deref(), &text)?;
            Ok(0)
        }),
        Cmd::Primitives(a) => {
            let run = PrimitiveRun {
                n: a.n,
                lambda: a.machine.lambda,
                epsilon: a.machine.epsilon,
                seed: a.machine.seed,
                c: a.c,
                plant: a.plant,
            };
            run_primitive(&a.name, a.machine.config(), &run).and_then(|r| {
                let text = if a.json {
                    json(&r)
                } else {
                    match &r.counterexample {
                        None => format!("PASS {} n={} work={} depth={} space={}\n", r.primitive, r.n, r.work, r.depth, r.space),
                        Some(c) => format!("FAIL {} n={}: {c}\n", r.primitive, r.n),
                    }
                };
                emit(None, &text)?;
                Ok(if r.passed { 0 } else { 1 })
            })
        }
    };
    match res {
        Ok(code) => code,
        Err(e @ Error::Assertion(_)) => {
            eprintln!("pramdb: {e}");
            1
        }
        Err(e) => {
            eprintln!("pramdb: {e}");
            2
        }
    }
}
