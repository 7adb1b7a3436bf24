//! `cutpoint` - cut-point analysis of binomial group testing procedures.
//!
//! Subcommands: `list`, `check`, `curve`, `ocp`, `simulate`. JSON documents
//! go to stdout; exit code 0 on success, 2 on domain or usage errors, 3 when
//! an assumption-violation report was produced (the document is still
//! emitted).
//!
//! `CUTPOINT_THREADS` caps the worker count used for curve tracing and
//! simulation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use cutpoint_core::assumptions::check_all;
use cutpoint_core::bifurcation::{scan_all_roots, trace_curve, BifurcationCurve};
use cutpoint_core::report::{
    build_report, write_curve_csv, write_curve_svg, write_multi_root_csv, ProcedureReport,
};
use cutpoint_core::simulate::{simulate, SimConfig};
use cutpoint_core::{CohortParam, CutpointError, Prevalence, Procedure};

const EXIT_DOMAIN: u8 = 2;
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cutpoint",
    version,
    about = "Optimal cut-points of binomial group testing procedures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered procedures with their domain constant and cohort law
    List,
    /// Audit assumptions (M0)-(M4) and print the JSON report
    Check {
        /// Procedure name: dorfman | md | sterrett | a2 | pt | halving
        procedure: String,
    },
    /// Trace the bifurcation curve n -> p_n and write it as CSV
    Curve {
        procedure: String,
        #[arg(long)]
        n_lo: f64,
        #[arg(long)]
        n_hi: f64,
        #[arg(long, default_value_t = 256)]
        steps: usize,
        /// Extended-domain mode: collect every root of t(n, p) = 1 per
        /// sampled n (multi-valued diagram), for any n > 0
        #[arg(long)]
        extended: bool,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
        /// Also render a minimal SVG of the curve (single-branch mode only)
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Classify the bifurcation and report the cut-point
    Ocp {
        procedure: String,
        /// Recover the discrete cut-point as well (both routes)
        #[arg(long)]
        discrete: bool,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
        /// Trace the curve to this CSV file and record it in the report
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Monte-Carlo simulation of a testing protocol, reported as JSON
    Simulate {
        procedure: String,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct SimReport {
    procedure: String,
    n: u32,
    p: f64,
    trials: u64,
    seed: u64,
    mean_tests: f64,
    std_error: f64,
    closed_form_mean: f64,
    /// `(mean - closed form) / std_error`; null for a degenerate run.
    z_score: Option<f64>,
}

fn main() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DOMAIN)
        }
    }
}

fn init_thread_pool() {
    if let Ok(raw) = std::env::var("CUTPOINT_THREADS") {
        match raw.parse::<usize>() {
            Ok(k) if k >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
            }
            _ => eprintln!("warning: ignoring invalid CUTPOINT_THREADS='{raw}'"),
        }
    }
}

fn run(command: Command) -> Result<ExitCode, CutpointError> {
    match command {
        Command::List => {
            cmd_list();
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { procedure } => cmd_check(&procedure),
        Command::Curve {
            procedure,
            n_lo,
            n_hi,
            steps,
            extended,
            out,
            svg,
        } => cmd_curve(&procedure, n_lo, n_hi, steps, extended, &out, svg.as_deref()),
        Command::Ocp {
            procedure,
            discrete,
            json,
            curve,
        } => cmd_ocp(&procedure, discrete, json, curve),
        Command::Simulate {
            procedure,
            n,
            p,
            trials,
            seed,
        } => cmd_simulate(&procedure, n, p, trials, seed),
    }
}

fn cmd_list() {
    for proc in Procedure::ALL {
        let marker = if proc.is_continuous() {
            ""
        } else {
            " integer-only"
        };
        println!(
            "{} c={} N(n)={}{marker}",
            proc.name(),
            proc.c() as i64,
            proc.cohort_law()
        );
    }
}

fn cmd_check(name: &str) -> Result<ExitCode, CutpointError> {
    let proc = Procedure::from_name(name)?;
    let report = check_all(proc)?;
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    if report.all_pass() {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VIOLATION))
    }
}

fn cmd_curve(
    name: &str,
    n_lo: f64,
    n_hi: f64,
    steps: usize,
    extended: bool,
    out: &PathBuf,
    svg: Option<&std::path::Path>,
) -> Result<ExitCode, CutpointError> {
    let proc = Procedure::from_name(name)?;
    let mut file = BufWriter::new(File::create(out)?);

    if extended {
        if svg.is_some() {
            return Err(CutpointError::Domain(
                "--svg is not supported in --extended mode".into(),
            ));
        }
        if !(n_lo > 0.0 && n_lo < n_hi && steps >= 2) {
            return Err(CutpointError::Domain(format!(
                "need 0 < n_lo < n_hi and steps >= 2, got n_lo={n_lo} n_hi={n_hi} steps={steps}"
            )));
        }
        let ratio = (n_hi / n_lo).powf(1.0 / (steps - 1) as f64);
        let mut roots_by_n = Vec::with_capacity(steps);
        let mut total = 0usize;
        for i in 0..steps {
            let n = if i == steps - 1 {
                n_hi
            } else {
                n_lo * ratio.powi(i as i32)
            };
            let roots = scan_all_roots(proc, n)?;
            total += roots.len();
            roots_by_n.push((n, roots));
        }
        write_multi_root_csv(&mut file, proc, &roots_by_n)?;
        file.flush()?;
        println!(
            "wrote {total} roots over {steps} samples of [{n_lo}, {n_hi}] to {}",
            out.display()
        );
        return Ok(ExitCode::SUCCESS);
    }

    let curve = trace_curve(proc, n_lo, n_hi, steps)?;
    write_curve_csv(&mut file, &curve)?;
    file.flush()?;
    println!("wrote {} points to {}", curve.points.len(), out.display());
    if let Some(svg_path) = svg {
        write_svg(&curve, svg_path)?;
        println!("wrote SVG to {}", svg_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn write_svg(curve: &BifurcationCurve, path: &std::path::Path) -> Result<(), CutpointError> {
    let mut file = BufWriter::new(File::create(path)?);
    write_curve_svg(&mut file, curve)?;
    file.flush()?;
    Ok(())
}

fn cmd_ocp(
    name: &str,
    discrete: bool,
    json: bool,
    curve: Option<PathBuf>,
) -> Result<ExitCode, CutpointError> {
    let proc = Procedure::from_name(name)?;

    let curve_file = match curve {
        Some(path) if proc.is_continuous() => {
            let traced = trace_curve(proc, proc.c() + 1e-6, 1e3, 512)?;
            let mut file = BufWriter::new(File::create(&path)?);
            write_curve_csv(&mut file, &traced)?;
            file.flush()?;
            Some(path.display().to_string())
        }
        Some(_) => {
            return Err(CutpointError::Domain(format!(
                "{name} has no continuous curve to trace"
            )))
        }
        None => None,
    };

    let report = build_report(proc, discrete, curve_file)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print_ocp_text(&report);
    }
    if report.is_flagged() {
        Ok(ExitCode::from(EXIT_VIOLATION))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn print_ocp_text(report: &ProcedureReport) {
    println!("procedure: {}", report.name);
    println!("c: {}", report.c);
    println!("ucp: {:.12}", report.ucp);
    if report.is_flagged() {
        println!(
            "assumptions violated: ({}); cut-point machinery inapplicable",
            report.violated_assumptions.join("),(")
        );
        return;
    }
    println!("assumptions: all pass");
    println!(
        "cocp: {:.12} (type {}{})",
        report.cocp.unwrap(),
        report.bifurcation_type.unwrap(),
        report
            .n_star
            .map(|n| format!(", n* = {n:.12}"))
            .unwrap_or_default()
    );
    println!(
        "limits: n->c+ {:.12}, n->inf {:.12}",
        report.limit_at_c.unwrap(),
        report.limit_at_infinity.unwrap()
    );
    if let (Some(docp), Some(method)) = (report.docp, report.docp_method.as_deref()) {
        let at = report
            .docp_achieving_n
            .map(|n| format!(" at n = {n}"))
            .unwrap_or_default();
        println!("docp: {docp:.12}{at} ({method})");
    }
    if let (Some(bf), Some(n)) = (report.docp_bruteforce, report.docp_bruteforce_achieving_n) {
        println!("docp bruteforce: {bf:.12} at n = {n}");
    }
    if let Some(path) = &report.curve_file {
        println!("curve: {path}");
    }
}

fn cmd_simulate(
    name: &str,
    n: u32,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<ExitCode, CutpointError> {
    let proc = Procedure::from_name(name)?;
    let prevalence = Prevalence::new(p)?;
    let cfg = SimConfig::new(trials, seed)?;
    let result = simulate(proc, n, prevalence, &cfg)?;
    let closed_form_mean = proc.mean(CohortParam::new(n as f64)?, prevalence)?;
    let z_score = (result.std_error > 0.0)
        .then(|| (result.mean_tests - closed_form_mean) / result.std_error);
    let report = SimReport {
        procedure: result.procedure,
        n,
        p,
        trials,
        seed,
        mean_tests: result.mean_tests,
        std_error: result.std_error,
        closed_form_mean,
        z_score,
    };
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(ExitCode::SUCCESS)
}
