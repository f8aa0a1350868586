use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use toruscl::harness::{self, Cache, Format, JobSpec, Suite};
use toruscl::numfield::places::PlaceSet;

#[derive(Parser)]
#[command(name = "toruscl", version, about = "S-class groups of algebraic tori over quadratic fields")]
struct Cli {
    /// Cache directory (default: $TORUSCL_CACHE_DIR, else ./.toruscl-cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    /// Record wall-clock time in the report (makes reports differ between runs).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Class group, units, S-class group and S-units of Q(√d).
    Field {
        #[arg(long, allow_hyphen_values = true)]
        d: i64,
        #[arg(long, default_value = "inf")]
        s: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a job file.
    Torus {
        #[arg(long)]
        job: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run a verification suite over quadratic fields.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// Comma-separated radicands or fundamental discriminants, e.g. -4,-5,-23,2.
        #[arg(long, allow_hyphen_values = true)]
        fields: String,
        #[arg(long)]
        s: Option<String>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Inspect or clear the invariant cache.
    Cache {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        clear: bool,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    serde_json::from_value(Value::String(s.into())).map_err(|_| format!("unknown format '{s}' (expected json or text)"))
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse()
}

fn places(s: &str) -> Result<Value, String> {
    let set: PlaceSet = s.parse().map_err(|e: toruscl::Error| e.to_string())?;
    Ok(serde_json::to_value(set).expect("place set serializes"))
}

fn field_list(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<i64>().map_err(|_| format!("bad field entry '{t}'")))
        .collect()
}

fn input_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("toruscl: {msg}");
    ExitCode::from(1)
}

fn execute(job: JobSpec, out: &OutputArgs, cache: &Cache) -> ExitCode {
    let start = Instant::now();
    let mut report = match harness::run_job(&job, cache) {
        Ok(r) => r,
        Err(e) => return input_error(e),
    };
    if out.timing {
        report.timing_ms = Some(start.elapsed().as_millis() as u64);
    }
    let spec = job.output.as_ref();
    let format = out.format.or(spec.map(|o| o.format)).unwrap_or_default();
    let path = out.report.clone().or_else(|| spec.and_then(|o| o.path.clone()).map(PathBuf::from));
    match path {
        Some(p) => {
            if let Err(e) = harness::emit_report(&report, format, &p) {
                return input_error(format!("cannot write {}: {e}", p.display()));
            }
        }
        None => print!("{}", harness::render(&report, format)),
    }
    ExitCode::from(report.exit_code() as u8)
}

fn from_value(v: Value) -> Result<JobSpec, ExitCode> {
    harness::parse_job(&v.to_string()).map_err(input_error)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cache = match &cli.cache_dir {
        Some(d) => Cache::new(d),
        None => Cache::from_env(),
    };
    let built = match cli.command {
        Command::Cache { dir, clear } => {
            let c = dir.map(Cache::new).unwrap_or(cache);
            if clear {
                return match c.clear() {
                    Ok(n) => {
                        println!("removed {n} cache file(s) from {}", c.dir().display());
                        ExitCode::SUCCESS
                    }
                    Err(e) => input_error(format!("cannot clear {}: {e}", c.dir().display())),
                };
            }
            let n = std::fs::read_dir(c.dir()).map(|d| d.count()).unwrap_or(0);
            println!("{}: {n} file(s)", c.dir().display());
            return ExitCode::SUCCESS;
        }
        Command::Torus { job, out } => harness::load_job(&job).map_err(input_error).map(|j| (j, out)),
        Command::Field { d, s, out } => places(&s)
            .map_err(input_error)
            .and_then(|s| from_value(json!({ "format_version": harness::FORMAT_VERSION, "task": "field", "d": d, "S": s })))
            .map(|j| (j, out)),
        Command::Verify { suite, fields, s, out } => (|| {
            let fields = field_list(&fields).map_err(input_error)?;
            let mut v = json!({
                "format_version": harness::FORMAT_VERSION,
                "task": "verify_suite",
                "suite": suite,
                "fields": fields,
            });
            if let Some(s) = s {
                v["S"] = places(&s).map_err(input_error)?;
            }
            from_value(v)
        })()
        .map(|j| (j, out)),
    };
    match built {
        Ok((job, out)) => execute(job, &out, &cache),
        Err(code) => code,
    }
}
