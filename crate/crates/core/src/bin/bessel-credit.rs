use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use bessel_credit::battery::{criterion, report, BatteryConfig};
use bessel_credit::cli::{error_document, execute, exit_code, Json, RunArgs};
use bessel_credit::mc::THREADS_ENV;

#[derive(Parser)]
#[command(name = "bessel-credit", about = "Stopped CEV and time-changed Bessel credit-equity pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Calls and puts on a strike and maturity grid
    Price(Run),
    /// Default probabilities on a time grid
    DefaultCurve(Run),
    /// Credit default swap fair coupon
    Cds(Run),
    /// Equity default swap fair coupon
    Eds(Run),
    /// Laplace transform, cf, density, cdf or tail of a clock
    Transform(Run),
    /// Monte Carlo paths of the stock
    Simulate(Run),
    /// Runs the acceptance battery at reduced path counts
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Full path counts
        #[arg(long)]
        full: bool,
        /// Shifts the checks whose name contains this text
        #[arg(long)]
        perturb: Option<String>,
        /// Comma-separated criterion numbers
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(clap::Args)]
struct Run {
    /// --config FILE, --set key=value, --key value, --out FILE, --csv FILE
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, num_args = 0..)]
    args: Vec<String>,
}

fn init_threads() {
    let n = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn emit(doc: &Json, out: Option<&std::path::Path>) -> std::io::Result<()> {
    let text = doc.render();
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn run(name: &str, args: &[String]) -> ExitCode {
    let run = match RunArgs::parse(args) {
        Ok(r) => r,
        Err(e) => {
            let _ = emit(&error_document(name, e.reason(), &e.to_string(), 1), None);
            return ExitCode::from(1);
        }
    };
    let res = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| execute(name, &run)));
    let (doc, code) = match res {
        Ok(Ok(doc)) => (doc, 0),
        Ok(Err(e)) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            (error_document(name, e.reason(), &e.to_string(), code), code)
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            (error_document(name, "internal", &msg.unwrap_or_else(|| "panic".into()), 3), 3)
        }
    };
    if let Err(e) = emit(&doc, run.out.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(3);
    }
    ExitCode::from(code)
}

fn selftest(seed: u64, full: bool, perturb: Option<String>, only: Vec<u8>) -> ExitCode {
    let mut cfg = if full { BatteryConfig::full(seed) } else { BatteryConfig::reduced(seed) };
    cfg.perturb = perturb;
    let ids: Vec<u8> = if only.is_empty() { (1..=8).collect() } else { only };
    let start = Instant::now();
    let mut done = Vec::new();
    for id in ids {
        let Some(c) = criterion(id, &cfg) else {
            eprintln!("error: no criterion {id}");
            return ExitCode::from(1);
        };
        eprintln!("{}", c.status_line());
        done.push(c);
    }
    print!("{}", report(&done));
    let ok = done.iter().all(|c| c.passed_except_gaps());
    eprintln!("selftest {} in {:.1} s", if ok { "passed" } else { "FAILED" }, start.elapsed().as_secs_f64());
    ExitCode::from(if ok { 0 } else { 2 })
}

fn main() -> ExitCode {
    init_threads();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Price(r) => run("price", &r.args),
        Command::DefaultCurve(r) => run("default-curve", &r.args),
        Command::Cds(r) => run("cds", &r.args),
        Command::Eds(r) => run("eds", &r.args),
        Command::Transform(r) => run("transform", &r.args),
        Command::Simulate(r) => run("simulate", &r.args),
        Command::Selftest { seed, full, perturb, only } => selftest(seed, full, perturb, only),
    }
}
