//! `corrgeom` command-line front end.
//!
//! Exit codes: 0 success or equivalent, 1 inequivalent or asymmetric,
//! 2 inconclusive, 64 usage or malformed input, 66 missing input file,
//! 70 numerical or internal failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod report;
mod source;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command, Common};
use report::{exit, CmdResult, Failure, FileDigest, Outcome, Run, RunReport};

fn main() {
    std::process::exit(run(std::env::args_os()));
}

fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let start = Instant::now();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    let (name, common) = describe(&cli.command);
    let mut run = Run::default();
    let result = validate(&common).and_then(|()| dispatch(&cli.command, &mut run));
    let (code, error, outputs) = match result.and_then(|outcome| emit(&common, outcome)) {
        Ok((code, digest)) => (code, None, vec![digest]),
        Err(f) => {
            eprintln!("corrgeom {name}: {}", f.message);
            (f.code, Some(f.message), Vec::new())
        }
    };
    let report = RunReport {
        command: name.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs: run.inputs,
        parameters: run.parameters,
        outputs,
        seed: common.seed,
        verdicts: run.verdicts,
        exit_code: code,
        error,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let text = report::to_json(&report);
    match &common.report {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                eprintln!("corrgeom {name}: cannot write report {}: {e}", path.display());
                return if code == exit::OK { exit::SOFTWARE } else { code };
            }
        }
        None => {
            let _ = std::io::stderr().lock().write_all(text.as_bytes());
        }
    }
    code
}

fn describe(command: &Command) -> (&'static str, Common) {
    match command {
        Command::Build(a) => ("build", a.common.clone()),
        Command::Compare(a) => ("compare", a.common.clone()),
        Command::GaugeCheck(a) => ("gauge-check", a.common.clone()),
        Command::DiffeoCheck(a) => ("diffeo-check", a.common.clone()),
        Command::SymmetryCheck(a) => ("symmetry-check", a.common.clone()),
        Command::Mix(a) => ("mix", a.common.clone()),
        Command::DimCheck(a) => ("dim-check", a.common.clone()),
        Command::Resolution(a) => ("resolution", a.common.clone()),
    }
}

fn validate(common: &Common) -> CmdResult<()> {
    if !(common.tol > 0.0 && common.tol.is_finite()) {
        return Err(Failure::usage(format!(
            "--tol must be positive and finite, got {}",
            common.tol
        )));
    }
    if !(common.agg_tol >= 0.0) {
        return Err(Failure::usage(format!(
            "--agg-tol must be nonnegative, got {}",
            common.agg_tol
        )));
    }
    Ok(())
}

fn dispatch(command: &Command, run: &mut Run) -> CmdResult<Outcome> {
    match command {
        Command::Build(a) => commands::build(a, run),
        Command::Compare(a) => commands::compare(a, run),
        Command::GaugeCheck(a) => commands::gauge(a, run),
        Command::DiffeoCheck(a) => commands::diffeo(a, run),
        Command::SymmetryCheck(a) => commands::symmetry(a, run),
        Command::Mix(a) => commands::mixture(a, run),
        Command::DimCheck(a) => commands::dim_check(a, run),
        Command::Resolution(a) => commands::resolution(a, run),
    }
}

fn emit(common: &Common, outcome: Outcome) -> CmdResult<(i32, FileDigest)> {
    let bytes = outcome.payload.as_bytes();
    match &common.output {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| Failure::software(format!("cannot write {}: {e}", path.display())))?;
            Ok((outcome.code, FileDigest::of(&path.display().to_string(), bytes)))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(|e| Failure::software(format!("cannot write to stdout: {e}")))?;
            Ok((outcome.code, FileDigest::of("-", bytes)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(["corrgeom"]), exit::USAGE);
        assert_eq!(run(["corrgeom", "frobnicate"]), exit::USAGE);
        assert_eq!(
            run(["corrgeom", "dim-check", "--f", "x", "--p", "1", "--q", "1"]),
            exit::USAGE
        );
        assert_eq!(run(["corrgeom", "--help"]), exit::OK);
    }

    #[test]
    fn bad_tolerances_are_usage_errors() {
        assert_eq!(
            run([
                "corrgeom",
                "dim-check",
                "--f",
                "4",
                "--p",
                "1",
                "--q",
                "1",
                "--tol",
                "-1"
            ]),
            exit::USAGE
        );
        assert_eq!(
            run([
                "corrgeom",
                "dim-check",
                "--f",
                "4",
                "--p",
                "1",
                "--q",
                "1",
                "--agg-tol",
                "NaN"
            ]),
            exit::USAGE
        );
    }

    #[test]
    fn impossible_bounds_are_usage_errors() {
        assert_eq!(
            run(["corrgeom", "dim-check", "--f", "2", "--p", "2", "--q", "1"]),
            exit::USAGE
        );
    }

    #[test]
    fn numerical_failures_exit_70() {
        let e: Failure = corrgeom::Error::NumericalFailure("x".into()).into();
        assert_eq!(e.code, exit::SOFTWARE);
        let e: Failure = corrgeom::Error::InvalidArgs("x".into()).into();
        assert_eq!(e.code, exit::USAGE);
    }
}
