//! Subcommand implementations.

mod calculus;
mod inner;
mod outer;
mod plotdata;

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::{self, LoadedConfig, Setup};
use crate::report::{Recorder, RunReport};
use crate::{resolve_out_dir, CliError, Command, RunArgs};

pub use plotdata::{plot_csv, REPORT_SUFFIX};

/// Runs a command; `Ok(passed)` when it completed.
pub fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Inner(args) => run_checks("inner", &args, inner::run),
        Command::Calculus(args) => run_checks("calculus", &args, calculus::run),
        Command::Outer(args) => run_checks("outer", &args, outer::run),
        Command::Plotdata(args) => plotdata::run(&args).map(|_| true),
    }
}

/// Runs the inner checks without writing anything.
pub fn cmd_inner(loaded: &LoadedConfig) -> Result<(RunReport, Artifacts), CliError> {
    execute("inner", loaded, inner::run)
}

/// Runs the calculus checks without writing anything.
pub fn cmd_calculus(loaded: &LoadedConfig) -> Result<(RunReport, Artifacts), CliError> {
    execute("calculus", loaded, calculus::run)
}

/// Runs the outer pipeline without writing anything.
pub fn cmd_outer(loaded: &LoadedConfig) -> Result<(RunReport, Artifacts), CliError> {
    execute("outer", loaded, outer::run)
}

/// Output files of a command besides the report, as `(file name, contents)`.
pub type Artifacts = Vec<(String, String)>;

type CommandFn = fn(&LoadedConfig, &Setup, &mut Recorder) -> Result<(Value, Artifacts), CliError>;

fn run_checks(name: &str, args: &RunArgs, body: CommandFn) -> Result<bool, CliError> {
    let mut loaded = config::load(&args.config)?;
    if let Some(seed) = args.seed {
        loaded.config.seed = seed;
    }
    let out_dir = resolve_out_dir(
        args.out.as_deref(),
        loaded.config.output_dir.as_deref(),
        &loaded.base_dir,
    );
    let (report, artifacts) = match args.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?
            .install(|| execute(name, &loaded, body))?,
        None => execute(name, &loaded, body)?,
    };
    write_outputs(&out_dir, name, &report, &artifacts)?;
    for v in &report.verdicts {
        println!(
            "{} {} = {:e} (tolerance {:e})",
            if v.pass { "PASS" } else { "FAIL" },
            v.check,
            v.value,
            v.tolerance
        );
    }
    Ok(report.passed())
}

fn execute(
    name: &str,
    loaded: &LoadedConfig,
    body: CommandFn,
) -> Result<(RunReport, Artifacts), CliError> {
    let mut rec = Recorder::new();
    let setup = loaded.setup()?;
    rec.phase("setup");
    let (results, artifacts) = body(loaded, &setup, &mut rec)?;
    Ok((rec.finish(name, loaded.config.clone(), results), artifacts))
}

fn write_outputs(
    out_dir: &Path,
    name: &str,
    report: &RunReport,
    artifacts: &Artifacts,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Output(format!("cannot create {}: {e}", out_dir.display())))?;
    let write = |file: PathBuf, text: &str| {
        std::fs::write(&file, text)
            .map_err(|e| CliError::Output(format!("cannot write {}: {e}", file.display())))
    };
    write(
        out_dir.join(format!("{name}{REPORT_SUFFIX}")),
        &report.to_json(),
    )?;
    for (file, text) in artifacts {
        write(out_dir.join(file), text)?;
    }
    Ok(())
}

pub(crate) fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}
