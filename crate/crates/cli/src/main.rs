//! `frontprop`: run scenarios, verify suites, inspect FPF1 files.

mod run;
mod scenario;

use clap::{Parser, Subcommand};
use run::{Failure, RunOutcome};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "frontprop", version, about = "Nonlocal front propagation laboratory")]
struct Cli {
    /// Output directory; overrides the scenario's own setting.
    #[arg(long, global = true, env = "FRONTPROP_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and run its checks.
    Run { scenario: PathBuf },
    /// Run every scenario of a suite and write an aggregated summary.
    Verify { suite: PathBuf },
    /// Print the header of an FPF1 file.
    DumpInfo { file: PathBuf },
}

fn print_outcome(o: &RunOutcome) {
    for c in &o.checks {
        let worst = c.reports.iter().map(|r| r.worst_slack()).fold(f64::INFINITY, f64::min);
        let status = if c.pass() { "PASS" } else { "FAIL" };
        match &c.error {
            Some(e) => println!("{} {:<18} {status} ({e})", o.name, c.name),
            None => println!("{} {:<18} {status} worst slack {worst:.3e}", o.name, c.name),
        }
    }
    println!("{} outputs in {}", o.name, o.dir.display());
}

fn run(path: &Path, out: Option<&Path>, seed: u64) -> Result<bool, Failure> {
    let outcome = run::run_scenario(path, out, seed)?;
    print_outcome(&outcome);
    Ok(outcome.pass())
}

fn verify(path: &Path, out: Option<&Path>, seed: u64) -> Result<bool, Failure> {
    let suite: scenario::Suite = scenario::load(path).map_err(Failure::Parse)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("frontprop-out"));
    let mut csv = String::from("scenario,check_name,time,lhs,rhs,slack,pass\n");
    let mut pass = true;
    let mut first_failure = None;
    for s in &suite.scenarios {
        match run::run_scenario(&base.join(s), Some(&out), seed) {
            Ok(o) => {
                print_outcome(&o);
                pass &= o.pass();
                csv.push_str(&o.csv_rows());
            }
            Err(f) => {
                eprintln!("{}: {}", s.display(), f.message());
                first_failure.get_or_insert(f);
            }
        }
    }
    std::fs::create_dir_all(&out).map_err(|e| Failure::Io(e.to_string()))?;
    std::fs::write(out.join("summary.csv"), csv).map_err(|e| Failure::Io(e.to_string()))?;
    match first_failure {
        Some(f) => Err(f),
        None => Ok(pass),
    }
}

fn dump_info(path: &Path) -> Result<bool, Failure> {
    let io = |e: frontprop::Error| Failure::Io(e.to_string());
    let h = frontprop::fpf1::read_header(path).map_err(io)?;
    let field = frontprop::fpf1::read_field(path).map_err(io)?;
    let g = h.grid;
    let finite: Vec<f64> = field.values().iter().copied().filter(|v| v.is_finite() && Some(*v) != h.sentinel).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut o = std::io::stdout().lock();
    let _ = writeln!(o, "dim: {}", g.dim());
    let _ = writeln!(o, "extents: {} x {}", g.nx(), g.ny());
    let _ = writeln!(o, "origin: {} {}", g.origin()[0], g.origin()[1]);
    let _ = writeln!(o, "spacing: {}", g.spacing());
    let _ = writeln!(o, "time: {}", h.time);
    let _ = writeln!(o, "values: {}", h.value_count);
    let _ = writeln!(o, "data: {}", h.data_file);
    if let Some(s) = h.sentinel {
        let _ = writeln!(o, "sentinel: {s:e} ({} cells)", field.values().iter().filter(|v| **v == s).count());
    }
    let _ = writeln!(o, "range: {lo} .. {hi}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("frontprop: {e}");
            return ExitCode::from(3);
        }
    }
    let out = cli.out.as_deref();
    let result = match &cli.command {
        Command::Run { scenario } => run(scenario, out, cli.seed),
        Command::Verify { suite } => verify(suite, out, cli.seed),
        Command::DumpInfo { file } => dump_info(file),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(f) => {
            eprintln!("frontprop: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
