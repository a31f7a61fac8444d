//! Command-line front end: `dopf solve`, `dopf oracle` and `dopf validate`.
//!
//! Exit codes: 0 success, 1 validation found violations, 2 bad input
//! (unreadable or malformed case, bad preset, invalid options), 3 the solve
//! or oracle failed.

pub mod args;
pub mod report;
pub mod spec;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use dopf_core::admm::{run_admm_observed, CSV_HEADER};
use dopf_core::network::{parse_case_with, validate, CaseFormat, Network, ParseOptions};
use dopf_core::oracle::{grid_oracle, OracleOptions};

use args::{Cli, Command, OracleArgs, SolveArgs, ValidateArgs};
pub use report::{OracleReport, SolveSummary};
pub use spec::{resolve_solve, CaseSpec, Preset, RunSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVE: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn solve(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_SOLVE,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

/// Parse arguments, run the command, return the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn read_network(path: &Path, format: CaseFormat, opts: ParseOptions) -> Result<Network, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_case_with(&text, format, opts)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Parse the case and apply the overrides.
pub fn load_case(spec: &CaseSpec) -> Result<Network, CliError> {
    Ok(read_network(&spec.path, spec.format, spec.parse)?.with_overrides(&spec.overrides))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("cannot create {}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| CliError::input(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

enum TraceSink {
    Csv(BufWriter<File>),
    Jsonl(BufWriter<File>),
}

impl TraceSink {
    fn open(path: &Path) -> Result<Self, CliError> {
        let jsonl = matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl" | "json")
        );
        let mut w = create(path)?;
        if jsonl {
            Ok(Self::Jsonl(w))
        } else {
            writeln!(w, "{CSV_HEADER}").map_err(|e| CliError::input(e.to_string()))?;
            Ok(Self::Csv(w))
        }
    }

    fn push(&mut self, rec: &dopf_core::admm::TraceRecord) -> std::io::Result<()> {
        match self {
            Self::Csv(w) => writeln!(w, "{}", rec.csv_row()),
            Self::Jsonl(w) => {
                serde_json::to_writer(&mut *w, rec)?;
                writeln!(w)
            }
        }
    }

    fn finish(self) -> std::io::Result<()> {
        match self {
            Self::Csv(mut w) | Self::Jsonl(mut w) => w.flush(),
        }
    }
}

/// Run a resolved solve request, streaming the trace and writing the report.
pub fn execute(spec: &RunSpec, progress: usize) -> Result<SolveSummary, CliError> {
    let net = load_case(&spec.case)?;
    let mut sink = spec.trace_out.as_deref().map(TraceSink::open).transpose()?;
    let mut io_err: Option<std::io::Error> = None;
    let started = Instant::now();
    let result = run_admm_observed(&net, &spec.config, &mut |view| {
        if let Some(s) = sink.as_mut() {
            if io_err.is_none() {
                io_err = s.push(view.record).err();
            }
        }
        let r = view.record;
        if progress > 0 && r.iter % progress == 0 {
            eprintln!(
                "iter {:>6}  objective {:.6}  delta {:.3e}  epsilon {:.3e}",
                r.iter, r.objective, r.delta, r.epsilon
            );
        }
    });
    let elapsed = started.elapsed().as_secs_f64();
    if let Some(e) = io_err {
        return Err(CliError::input(format!("writing trace: {e}")));
    }
    if let Some(s) = sink {
        s.finish()
            .map_err(|e| CliError::input(format!("writing trace: {e}")))?;
    }
    let solved = result.map_err(|e| match e {
        dopf_core::error::SolveError::InvalidConfig(_)
        | dopf_core::error::SolveError::InvalidNetwork(_) => CliError::input(e.to_string()),
        _ => CliError::solve(e.to_string()),
    })?;
    let summary = SolveSummary::build(&spec.case.path, &net, &spec.config, &solved, elapsed);
    if let Some(path) = &spec.report_out {
        write_json(path, &summary)?;
    }
    Ok(summary)
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let spec = resolve_solve(a)?;
    let s = execute(&spec, a.progress)?;
    println!("case         {}", s.case);
    println!("iterations   {}", s.iterations);
    println!("objective    {:.6} $/h", s.objective);
    println!("delta        {:.3e}", s.delta);
    println!("epsilon      {:.3e}", s.epsilon);
    println!("worst DF     {:.3e} MVA", s.worst_df);
    println!("max-iter     {} of {} calls", s.totals.maxiter_stops, s.totals.calls);
    println!("feasibility  {:.3e}", s.feasibility.max());
    Ok(EXIT_OK)
}

fn cmd_oracle(a: &OracleArgs) -> Result<i32, CliError> {
    let case = spec::resolve_case_args(&a.case)?;
    let net = load_case(&case)?;
    let opts = OracleOptions {
        points_per_axis: a.points,
        bound_tol: a.bound_tol,
    };
    let started = Instant::now();
    let r = grid_oracle(&net, &opts).map_err(|e| match e {
        dopf_core::error::SolveError::InvalidNetwork(_) => CliError::input(e.to_string()),
        _ => CliError::solve(e.to_string()),
    })?;
    let rep = OracleReport::build(&case.path, &net, r, started.elapsed().as_secs_f64());
    println!("case        {}", rep.case);
    println!("objective   {:.6} $/h", rep.result.objective);
    println!(
        "grid        {} points per axis, {} evaluated, {} feasible",
        rep.result.points_per_axis, rep.result.evaluated, rep.result.feasible
    );
    if let Some(path) = &a.report_out {
        write_json(path, &rep)?;
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs) -> Result<i32, CliError> {
    let format = match a.format {
        Some(f) => f.into(),
        None => CaseFormat::from_extension(&a.case).ok_or_else(|| {
            CliError::input(format!(
                "cannot infer the format of {}; pass --format",
                a.case.display()
            ))
        })?,
    };
    let net = read_network(
        &a.case,
        format,
        ParseOptions {
            ignore_taps: a.ignore_taps,
        },
    )?;
    let violations = validate(&net);
    if violations.is_empty() {
        println!(
            "ok: {} buses, {} lines, {} generator buses",
            net.n_buses(),
            net.lines.len(),
            net.generator_count()
        );
        Ok(EXIT_OK)
    } else {
        for v in &violations {
            println!("{v}");
        }
        println!("{} violation(s)", violations.len());
        Ok(EXIT_VIOLATIONS)
    }
}
