//! Command-line driver.

use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::emit::{emit_contract, emit_json_value, emit_tr, metrics_csv, parse_json_value};
use crate::far::{far, Lexical};
use crate::gen::{random_program, random_snf, rng, MethodShape, SnfShape};
use crate::lang::{parse, typecheck, TypedProgram};
use crate::oracle::{satisfies, Domain, OracleError};
use crate::pipeline::{run_method, MethodResult, Options, Status};
use crate::refine::{dedupe_cases, prune_unsat, strip_trivial, Frame};
use crate::spec::Specification;

#[derive(Debug, Parser)]
#[command(name = "postinfer", version, about = "Infer method postconditions and compact them into readable contracts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Infer a contract for every method of the given `.imp` files or directories.
    Infer(InferArgs),
    /// Compact a specification read from an `snf-v1` JSON file.
    Far(FarArgs),
    /// Check inferred contracts against the methods on a bounded input domain.
    Verify(VerifyArgs),
    /// Write a CSV of contract sizes before and after compaction.
    Metrics(MetricsArgs),
    /// Print a random program or specification.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jml,
    Post,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dump {
    Snf,
    Passive,
}

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Keep the flat specification instead of compacting it.
    #[arg(long)]
    pub no_far: bool,
    /// Skip tautology removal, pruning and deduplication.
    #[arg(long)]
    pub no_simplify: bool,
    /// Also prune cases with no satisfying input in the bounded domain.
    #[arg(long)]
    pub deep_prune: bool,
    /// Per-method time limit in milliseconds.
    #[arg(long, default_value_t = 300_000)]
    pub timeout_ms: u64,
    /// Refuse methods whose control-flow graph has more nodes than this.
    #[arg(long, default_value_t = 500)]
    pub max_cfg: usize,
    /// Integers range over [-B, B] wherever a bounded domain is used.
    #[arg(long, default_value_t = 2)]
    pub domain_bound: i64,
    /// Methods processed in parallel; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

impl PipelineArgs {
    fn options(&self) -> Options {
        Options {
            max_cfg: self.max_cfg,
            timeout: Duration::from_millis(self.timeout_ms),
            simplify: !self.no_simplify,
            far: !self.no_far,
            deep_prune: self.deep_prune.then_some(Domain::new(self.domain_bound)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InferArgs {
    /// Source files or directories searched for `*.imp`.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Jml)]
    pub format: Format,
    /// Also print an intermediate form of every method.
    #[arg(long, value_enum)]
    pub dump: Option<Dump>,
    /// Write `<method>.spec` files here instead of printing.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Append JSON-lines telemetry here; defaults to `telemetry.jsonl` in the output directory.
    #[arg(long)]
    pub telemetry: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FarArgs {
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub no_far: bool,
    #[arg(long)]
    pub no_simplify: bool,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    /// Write the CSV here instead of printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of methods, or of specifications with `--snf`.
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    /// Print specifications as JSON lines instead of a program.
    #[arg(long)]
    pub snf: bool,
}

/// Parses the process arguments, runs the command, and returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> io::Result<i32> {
    match cli.command {
        Command::Infer(a) => cmd_infer(&a, out),
        Command::Far(a) => cmd_far(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Metrics(a) => cmd_metrics(&a, out),
        Command::Generate(a) => cmd_generate(&a, out),
    }
}

/// `.imp` files under the given paths, each directory listed in name order.
pub fn source_files(paths: &[PathBuf]) -> io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            entries.sort();
            let (dirs, plain): (Vec<PathBuf>, Vec<PathBuf>) = entries.into_iter().partition(|e| e.is_dir());
            files.extend(plain.into_iter().filter(|e| e.extension().is_some_and(|x| x == "imp")));
            files.extend(source_files(&dirs)?);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

/// One source file after the front end: either the checked program or the error text.
struct Loaded {
    path: PathBuf,
    program: Result<TypedProgram, String>,
}

fn load(path: &Path) -> io::Result<Loaded> {
    let text = fs::read_to_string(path)?;
    let program = parse(&text).map_err(|e| e.to_string()).and_then(|p| typecheck(&p).map_err(|e| e.to_string()));
    Ok(Loaded { path: path.to_path_buf(), program })
}

fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool starts")
}

/// Runs the pipeline over every method of every file; results keep source order.
fn run_all(loaded: &[Loaded], args: &PipelineArgs) -> Vec<Vec<MethodResult>> {
    let opts = args.options();
    pool(args.jobs).install(|| {
        loaded
            .iter()
            .map(|l| match &l.program {
                Ok(p) => p.methods.par_iter().map(|m| run_method(m, &opts)).collect(),
                Err(_) => Vec::new(),
            })
            .collect()
    })
}

fn render(spec: &Specification, frame: &Frame, format: Format, method: Option<&str>) -> String {
    match format {
        Format::Jml => emit_contract(spec, frame),
        Format::Post => emit_tr(spec),
        Format::Json => {
            let mut v = emit_json_value(spec);
            if let Some(m) = method {
                v["method"] = json!(m);
            }
            v["assignable"] = json!(frame.assignable);
            let mut text = serde_json::to_string_pretty(&v).expect("values serialize");
            text.push('\n');
            text
        }
    }
}

fn telemetry_record(file: &Path, r: &MethodResult) -> Value {
    json!({
        "file": file.display().to_string(),
        "method": r.method,
        "status": r.status,
        "message": r.message,
        "warnings": r.warnings,
        "timings": r.timings,
        "passes": r.passes,
        "metrics": r.metrics(),
    })
}

fn file_error_record(file: &Path, message: &str) -> Value {
    json!({
        "file": file.display().to_string(),
        "method": null,
        "status": Status::Error,
        "message": message,
    })
}

fn append_lines(path: &Path, records: &[Value]) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    for r in records {
        buf.push_str(&r.to_string());
        buf.push('\n');
    }
    f.write_all(buf.as_bytes())
}

fn cmd_infer(args: &InferArgs, out: &mut dyn Write) -> io::Result<i32> {
    let loaded: Vec<Loaded> = source_files(&args.paths)?.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let results = run_all(&loaded, &args.pipeline);
    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
    }
    let mut records = Vec::new();
    let mut failed = false;
    for (l, rs) in loaded.iter().zip(&results) {
        if let Err(msg) = &l.program {
            eprintln!("{}: {msg}", l.path.display());
            records.push(file_error_record(&l.path, msg));
            failed = true;
            continue;
        }
        for r in rs {
            records.push(telemetry_record(&l.path, r));
            for w in &r.warnings {
                eprintln!("warning: {}: {}: {w}", l.path.display(), r.method);
            }
            if let Some(d) = args.dump {
                let text = match d {
                    Dump::Passive => r.passive.to_string(),
                    Dump::Snf => match &r.raw {
                        Some(raw) => render(raw, &r.frame, Format::Json, Some(&r.method)),
                        None => String::new(),
                    },
                };
                match &args.out_dir {
                    Some(dir) => {
                        let ext = if d == Dump::Snf { "snf.json" } else { "passive" };
                        fs::write(dir.join(format!("{}.{ext}", r.method)), text)?;
                    }
                    None => write!(out, "// {} ({d:?})\n{text}", r.method)?,
                }
            }
            match (&r.status, &r.spec) {
                (Status::Inferred, Some(spec)) => {
                    let text = render(spec, &r.frame, args.format, Some(&r.method));
                    match &args.out_dir {
                        Some(dir) => fs::write(dir.join(format!("{}.spec", r.method)), text)?,
                        None => write!(out, "// {}\n{text}", r.method)?,
                    }
                }
                (status, _) => {
                    let msg = r.message.as_deref().unwrap_or("");
                    if *status == Status::Error {
                        failed = true;
                        eprintln!("error: {}: {}: {msg}", l.path.display(), r.method);
                    } else {
                        eprintln!("warning: {}: {}: {status:?}: {msg}", l.path.display(), r.method);
                    }
                }
            }
        }
    }
    let telemetry = args.telemetry.clone().or_else(|| args.out_dir.as_ref().map(|d| d.join("telemetry.jsonl")));
    if let Some(path) = telemetry {
        append_lines(&path, &records)?;
    }
    Ok(i32::from(failed))
}

fn cmd_far(args: &FarArgs, out: &mut dyn Write) -> io::Result<i32> {
    let text = fs::read_to_string(&args.input)?;
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {}: /: invalid JSON: {e}", args.input.display());
            return Ok(1);
        }
    };
    let spec = match parse_json_value(&value) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return Ok(1);
        }
    };
    let assignable: Vec<String> = value
        .get("assignable")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(|x| x.as_str().map(String::from)).collect())
        .unwrap_or_default();
    let method = value.get("method").and_then(Value::as_str);
    let frame = Frame { assignable };
    let mut spec = spec.flatten();
    if !args.no_simplify {
        spec = match prune_unsat(&strip_trivial(&spec), None) {
            Ok(s) => dedupe_cases(&s),
            Err(e) => {
                eprintln!("error: {}: {e}", args.input.display());
                return Ok(1);
            }
        };
    }
    if !args.no_far {
        spec = far(&spec, &Lexical).expect("flattened input is in normal form");
        if !args.no_simplify {
            spec = dedupe_cases(&spec);
        }
    }
    // a lone case comes back out as it went in, not wrapped in a one-way disjunction
    if let Specification::Disjunction(alts) = &spec {
        if alts.len() == 1 && matches!(alts[0], Specification::Leaf(_)) {
            spec = alts[0].clone();
        }
    }
    out.write_all(render(&spec, &frame, args.format, method).as_bytes())?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> io::Result<i32> {
    let loaded: Vec<Loaded> = source_files(&args.paths)?.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let results = run_all(&loaded, &args.pipeline);
    let domain = Domain::new(args.pipeline.domain_bound);
    let mut failed = false;
    for (l, rs) in loaded.iter().zip(&results) {
        let program = match &l.program {
            Ok(p) => p,
            Err(msg) => {
                eprintln!("{}: {msg}", l.path.display());
                failed = true;
                continue;
            }
        };
        for (m, r) in program.methods.iter().zip(rs) {
            let Some(spec) = &r.spec else {
                writeln!(out, "SKIP {} ({:?})", r.method, r.status)?;
                failed |= r.status == Status::Error;
                continue;
            };
            match satisfies(m, spec, domain) {
                Ok(rep) => writeln!(
                    out,
                    "PASS {} ({} inputs, {} skipped, {} uncovered)",
                    r.method, rep.checked, rep.skipped, rep.uncovered
                )?,
                Err(OracleError::Violation(cex)) => {
                    failed = true;
                    writeln!(out, "FAIL {}: {cex}", r.method)?;
                }
                Err(e) => writeln!(out, "SKIP {} ({e})", r.method)?,
            }
        }
    }
    Ok(i32::from(failed))
}

/// CSV over all methods that were inferred, labelled `<file stem>.<method>`.
pub fn corpus_csv(paths: &[PathBuf], args: &PipelineArgs) -> io::Result<String> {
    let loaded: Vec<Loaded> = source_files(paths)?.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let results = run_all(&loaded, args);
    let mut rows = Vec::new();
    for (l, rs) in loaded.iter().zip(&results) {
        let stem = l.path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for r in rs {
            if let Some(mut m) = r.metrics() {
                m.method = format!("{stem}.{}", m.method);
                rows.push(m);
            }
        }
    }
    Ok(metrics_csv(&rows))
}

fn cmd_metrics(args: &MetricsArgs, out: &mut dyn Write) -> io::Result<i32> {
    let csv = corpus_csv(&args.paths, &args.pipeline)?;
    match &args.out {
        Some(p) => fs::write(p, csv)?,
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(0)
}

fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> io::Result<i32> {
    let mut r = rng(args.seed);
    if args.snf {
        for _ in 0..args.count {
            let s = random_snf(&mut r, SnfShape::default());
            writeln!(out, "{}", emit_json_value(&s))?;
        }
    } else {
        out.write_all(random_program(&mut r, args.count, MethodShape::default()).as_bytes())?;
    }
    Ok(0)
}
