//! `smms`: build model families, verify weighted Einstein conditions and
//! classify them from the command line.
//!
//! Exit codes: 0 when the checks pass, 2 when they fail, 1 on usage or
//! construction errors.

mod commands;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use smms_core::catalog::{FamilyId, FamilyParams};

use output::{emit, to_json, Csv};

#[derive(Debug, Parser)]
#[command(name = "smms", version, about = "Verify and classify weighted Einstein smooth metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Residual report for a family; fails when any residual or golden value is off.
    Verify(FamilyRun),
    /// Branch verdict and global case for a family.
    Classify(FamilyRun),
    /// Integrate u'' = -(2λu - κ) from u(0) = ξ, u'(0) = 0.
    Obata(ObataArgs),
    /// Finite-difference oracle against the warped-product closed forms.
    OracleCompare(FamilyRun),
    /// List the catalog families.
    List(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    output: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Check {
    #[arg(long, default_value_t = 1e-6, env = "SMMS_TOL")]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
    /// Plot data as CSV.
    #[arg(long)]
    emit_csv: Option<PathBuf>,
}

/// Parameters left unset fall back to the family's canonical values.
#[derive(Debug, Args)]
struct FamilyArgs {
    #[arg(long)]
    family: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    #[arg(long = "A", allow_negative_numbers = true)]
    a: Option<f64>,
    #[arg(long = "B", allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long = "C", allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c4: Option<f64>,
}

impl FamilyArgs {
    fn resolve(&self) -> Result<(FamilyId, FamilyParams), String> {
        let id: FamilyId = self.family.parse().map_err(|e: smms_core::SmmsError| e.to_string())?;
        let base = FamilyParams::canonical(id);
        let p = FamilyParams {
            n: self.n.or(base.n),
            m: self.m.or(base.m),
            lambda: self.lambda.or(base.lambda),
            mu: self.mu.or(base.mu),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            c: self.c.or(base.c),
            c1: self.c1.or(base.c1),
            c2: self.c2.or(base.c2),
            c3: self.c3.or(base.c3),
            c4: self.c4.or(base.c4),
        };
        Ok((id, p))
    }
}

#[derive(Debug, Args)]
struct FamilyRun {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 17)]
    samples: usize,
    #[command(flatten)]
    check: Check,
}

#[derive(Debug, Args)]
struct ObataArgs {
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, allow_negative_numbers = true)]
    kappa: f64,
    #[arg(long, allow_negative_numbers = true)]
    xi: f64,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// End of integration when u' never vanishes.
    #[arg(long, default_value_t = 10.0)]
    t_max: f64,
    #[command(flatten)]
    check: Check,
}

enum Outcome {
    Pass,
    Fail,
}

fn validate(samples: Option<usize>, tol: f64) -> Result<(), String> {
    if let Some(s) = samples {
        if s < 3 {
            return Err(format!("--samples must be at least 3, got {s}"));
        }
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(format!("--tol must be positive, got {tol}"));
    }
    Ok(())
}

fn write(out: &OutputArgs, body: &str) -> Result<(), String> {
    emit(out.out.as_deref(), body).map_err(|e| format!("cannot write report: {e}"))
}

fn write_csv(path: Option<&Path>, csv: Csv) -> Result<(), String> {
    match path {
        Some(p) => emit(Some(p), &csv.into_string()).map_err(|e| format!("cannot write {}: {e}", p.display())),
        None => Ok(()),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    to_json(value).map_err(|e| e.to_string())
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Fail
    }
}

fn run_family(run: &FamilyRun, classify: bool) -> Result<Outcome, String> {
    validate(Some(run.samples), run.check.tol)?;
    let (id, p) = run.family.resolve()?;
    let a = commands::analyze(id, &p, run.samples, run.check.tol).map_err(|e| e.to_string())?;
    let body = match run.check.output.output {
        Format::Json => json(&a.report)?,
        Format::Csv => a.samples_csv().into_string(),
        Format::Text => a.text(),
    };
    write(&run.check.output, &body)?;
    let plot = if classify { a.plot_csv(run.samples) } else { a.samples_csv() };
    write_csv(run.check.emit_csv.as_deref(), plot)?;
    Ok(outcome(if classify { a.classified() } else { a.verified(run.check.tol) }))
}

fn run_obata(args: &ObataArgs) -> Result<Outcome, String> {
    validate(None, args.check.tol)?;
    let run = commands::obata(args.lambda, args.kappa, args.xi, args.n, args.t_max).map_err(|e| e.to_string())?;
    let body = match args.check.output.output {
        Format::Json => json(&run.report)?,
        Format::Csv => run.csv().into_string(),
        Format::Text => run.text(),
    };
    write(&args.check.output, &body)?;
    write_csv(args.check.emit_csv.as_deref(), run.csv())?;
    Ok(outcome(run.passes(args.check.tol)))
}

fn run_compare(run: &FamilyRun) -> Result<Outcome, String> {
    validate(Some(run.samples), run.check.tol)?;
    let (id, p) = run.family.resolve()?;
    let report = commands::oracle_compare(id, &p, run.samples, run.check.tol).map_err(|e| e.to_string())?;
    let body = match run.check.output.output {
        Format::Json => json(&report)?,
        Format::Csv => report.csv().into_string(),
        Format::Text => report.text(),
    };
    write(&run.check.output, &body)?;
    write_csv(run.check.emit_csv.as_deref(), report.csv())?;
    Ok(outcome(report.pass))
}

#[derive(Serialize)]
struct ListEntry {
    id: &'static str,
    summary: &'static str,
}

fn run_list(out: &OutputArgs) -> Result<Outcome, String> {
    let entries: Vec<ListEntry> = FamilyId::ALL
        .into_iter()
        .map(|id| ListEntry {
            id: id.id(),
            summary: id.summary(),
        })
        .collect();
    let body = match out.output {
        Format::Json => json(&entries)?,
        Format::Csv => {
            let mut csv = Csv::new(&["id", "summary"]);
            for e in &entries {
                let summary = format!("\"{}\"", e.summary.replace('"', "\"\""));
                csv.text_row(&[e.id, &summary]);
            }
            csv.into_string()
        }
        Format::Text => entries.iter().map(|e| format!("{:<22} {}\n", e.id, e.summary)).collect(),
    };
    write(out, &body)?;
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Verify(run) => run_family(run, false),
        Command::Classify(run) => run_family(run, true),
        Command::Obata(args) => run_obata(args),
        Command::OracleCompare(run) => run_compare(run),
        Command::List(out) => run_list(out),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(2),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
