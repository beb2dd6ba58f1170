//! Command-line front end. [`run`] is the whole program minus process exit,
//! so it can be driven from tests.
//!
//! Exit codes: 0 success, 1 usage error, 2 overflow or truncation, 3 I/O error.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use jacobstree::census::{self, DEFAULT_STEP_CAP};
use jacobstree::collatz::TRAJECTORY_CSV_HEADER;
use jacobstree::{
    build_tree, cell, enumerate_integer_cycles, identity_checks, k_sequence, odd_table,
    odd_trajectory, trajectory, BigUint, BranchRule, Error, MapVariant, Sign,
};
use serde_json::json;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ARITHMETIC: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "jacobstree",
    version,
    about = "Jacobsthal numbers, Jacobsthal trees and 3q±1 Collatz dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TreeFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full trajectory of one starting value
    Traj {
        #[arg(long)]
        start: u64,
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        max_steps: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Odd-compressed trajectory
    Odd {
        #[arg(long)]
        start: u64,
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        #[arg(long, default_value_t = 1_000)]
        max_tracks: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Odd-trajectory table for the odd multiples of three up to a limit
    Table {
        #[arg(long)]
        limit: u64,
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Grow a Jacobsthal tree and export it
    Tree {
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        max_power: u32,
        #[arg(long, default_value_t = 1_000)]
        max_nodes: usize,
        #[arg(long, value_enum, default_value_t = TreeFormat::Dot)]
        format: TreeFormat,
    },
    /// One four-node cell of θ·2^n
    Cell {
        #[arg(long)]
        theta: u64,
        #[arg(long, value_parser = parse_rule)]
        rule: BranchRule,
        #[arg(long, default_value_t = 0)]
        index: usize,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Terminal-cycle census of a range
    Census {
        #[arg(long, default_value_t = 1)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        /// Worker threads [default: available parallelism]
        #[arg(long, env = "JACOBSTREE_THREADS")]
        partitions: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
        /// Write one CSV row per value (q,cycle_label,steps)
        #[arg(long)]
        dump: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Enumerate integer cycles of bounded length
    Cycles {
        #[arg(long, value_parser = parse_variant)]
        variant: MapVariant,
        #[arg(long, default_value_t = 7)]
        max_tracks: usize,
        #[arg(long, default_value_t = 11)]
        max_exponent: u32,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// A row of K±(θ, n) values
    Jacob {
        #[arg(long)]
        theta: BigUint,
        #[arg(long, value_parser = parse_sign)]
        sign: Sign,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Arithmetic relations between the 3q−1 cycle minima
    Identities {
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
}

fn parse_variant(s: &str) -> Result<MapVariant, String> {
    s.parse()
}

fn parse_rule(s: &str) -> Result<BranchRule, String> {
    s.parse()
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    s.parse()
}

/// Command failure, already classified by exit code.
enum Failure {
    Lib(Error),
    Io(io::Error),
    /// Output was written but something was cut short.
    Truncated(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome = Result<(), Failure>;

fn bracket(v: u64) -> String {
    if v.is_multiple_of(3) {
        format!("[{v}]")
    } else {
        v.to_string()
    }
}

fn bracketed(values: &[u64]) -> String {
    values
        .iter()
        .map(|&v| bracket(v))
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_json(out: &mut dyn Write, v: &serde_json::Value) -> io::Result<()> {
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(v).expect("json values serialize")
    )
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    let result = dispatch(cli.command, out).and_then(|()| out.flush().map_err(Failure::Io));
    match result {
        Ok(()) => EXIT_OK,
        // downstream reader went away (e.g. `| head`)
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_overflow() {
                EXIT_ARITHMETIC
            } else {
                EXIT_USAGE
            }
        }
        Err(Failure::Truncated(msg)) => {
            let _ = writeln!(err, "warning: {msg}");
            EXIT_ARITHMETIC
        }
        Err(Failure::Io(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_IO
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Outcome {
    match command {
        Command::Traj {
            start,
            variant,
            max_steps,
            format,
        } => traj(out, start, variant, max_steps, format),
        Command::Odd {
            start,
            variant,
            max_tracks,
            format,
        } => {
            let values = odd_trajectory(start, variant, &HashSet::new(), max_tracks)?;
            match format {
                ReportFormat::Text => writeln!(out, "{}", bracketed(&values))?,
                ReportFormat::Json => print_json(
                    out,
                    &json!({ "variant": variant, "start": start, "max_tracks": max_tracks, "odd": values }),
                )?,
            }
            Ok(())
        }
        Command::Table {
            limit,
            variant,
            format,
        } => {
            let rows = odd_table(limit, variant)?;
            match format {
                ReportFormat::Text => {
                    for row in &rows {
                        writeln!(out, "{}: {}", bracket(row.seed), bracketed(&row.trajectory))?;
                    }
                }
                ReportFormat::Json => print_json(
                    out,
                    &json!({ "variant": variant, "limit": limit, "rows": rows }),
                )?,
            }
            Ok(())
        }
        Command::Tree {
            variant,
            seed,
            max_power,
            max_nodes,
            format,
        } => {
            let (tree, overflow) = match build_tree(variant, seed, max_power, max_nodes) {
                Ok(t) => (t, false),
                Err(Error::TreeOverflow(partial)) => (*partial, true),
                Err(e) => return Err(e.into()),
            };
            match format {
                TreeFormat::Dot => write!(out, "{}", tree.export_dot())?,
                TreeFormat::Json => writeln!(out, "{}", tree.export_json())?,
            }
            if overflow {
                return Err(Failure::Truncated(format!(
                    "growth stopped by u64 overflow after {} nodes",
                    tree.len()
                )));
            }
            Ok(())
        }
        Command::Cell {
            theta,
            rule,
            index,
            format,
        } => {
            let c = cell(theta, rule, index)?;
            match format {
                ReportFormat::Text => writeln!(out, "{}", c.to_text())?,
                ReportFormat::Json => {
                    print_json(out, &serde_json::to_value(&c).expect("cell serializes"))?
                }
            }
            Ok(())
        }
        Command::Census {
            lo,
            hi,
            variant,
            partitions,
            step_cap,
            dump,
            format,
        } => {
            let partitions = partitions
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let report = match dump {
                Some(path) => {
                    let (report, records) =
                        census::sweep_records(lo, hi, variant, partitions, step_cap)?;
                    let mut w = BufWriter::new(File::create(&path)?);
                    census::write_csv(&mut w, lo, &records)?;
                    w.flush()?;
                    report
                }
                None => census::sweep(lo, hi, variant, partitions, step_cap)?,
            };
            match format {
                ReportFormat::Text => write!(out, "{}", report.to_text())?,
                ReportFormat::Json => print_json(out, &report.to_json())?,
            }
            if report.truncated > 0 {
                return Err(Failure::Truncated(format!(
                    "{} values did not reach a cycle within {step_cap} steps",
                    report.truncated
                )));
            }
            Ok(())
        }
        Command::Cycles {
            variant,
            max_tracks,
            max_exponent,
            format,
        } => {
            let report = enumerate_integer_cycles(variant, max_tracks, max_exponent)?;
            match format {
                ReportFormat::Text => {
                    for s in &report.solutions {
                        let exps: Vec<String> =
                            s.spec.exponents.iter().map(u32::to_string).collect();
                        writeln!(
                            out,
                            "q = {} exponents ({}) = {}/{} {}",
                            s.q_string(),
                            exps.join(","),
                            s.numerator,
                            s.denominator,
                            if s.verified { "verified" } else { "UNVERIFIED" }
                        )?;
                    }
                    writeln!(out, "skipped (overflow): {}", report.skipped_overflow)?;
                }
                ReportFormat::Json => print_json(out, &report.to_json())?,
            }
            if report.skipped_overflow > 0 {
                return Err(Failure::Truncated(format!(
                    "{} tuples exceeded 128-bit arithmetic and were skipped",
                    report.skipped_overflow
                )));
            }
            Ok(())
        }
        Command::Jacob {
            theta,
            sign,
            count,
            format,
        } => {
            let row = k_sequence(theta, sign, count)?;
            match format {
                Format::Text => writeln!(out, "{}", row.to_text())?,
                Format::Csv => row.write_csv(&mut *out)?,
                Format::Json => print_json(out, &row.to_json())?,
            }
            Ok(())
        }
        Command::Identities { format } => {
            let checks = identity_checks();
            match format {
                ReportFormat::Text => {
                    for c in &checks {
                        let status = if c.holds { "PASS" } else { "FAIL" };
                        writeln!(out, "{status} {}: {}", c.name, c.detail)?;
                    }
                }
                ReportFormat::Json => print_json(
                    out,
                    &serde_json::to_value(&checks).expect("checks serialize"),
                )?,
            }
            if checks.iter().all(|c| c.holds) {
                Ok(())
            } else {
                Err(Failure::Truncated("an identity check failed".into()))
            }
        }
    }
}

fn traj(
    out: &mut dyn Write,
    start: u64,
    variant: MapVariant,
    max_steps: u64,
    format: Format,
) -> Outcome {
    let (t, overflow) = match trajectory(start, variant, max_steps) {
        Ok(t) => (t, false),
        Err(Error::TrajectoryOverflow(partial)) => (*partial, true),
        Err(e) => return Err(e.into()),
    };
    match format {
        Format::Text => {
            writeln!(out, "{}", bracketed(&t.steps))?;
            let terminal = t.terminal.map_or("none".to_string(), |c| c.to_string());
            writeln!(out, "terminal {terminal}, {} steps", t.step_count())?;
        }
        Format::Csv => {
            writeln!(out, "{TRAJECTORY_CSV_HEADER}")?;
            writeln!(out, "{}", t.to_csv_line())?;
        }
        Format::Json => {
            let mut v = serde_json::to_value(&t).expect("trajectory serializes");
            v["max_steps"] = json!(max_steps);
            print_json(out, &v)?;
        }
    }
    if overflow {
        Err(Failure::Truncated(format!(
            "u64 overflow after {} steps",
            t.step_count()
        )))
    } else if t.truncated {
        Err(Failure::Truncated(format!(
            "no cycle reached within {max_steps} steps"
        )))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            std::iter::once("jacobstree").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, err) = call(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("census"));
        assert!(err.is_empty());
    }

    #[test]
    fn errors_go_to_stderr() {
        let (code, out, err) = call(&["cell", "--theta", "9", "--rule", "minus"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(out.is_empty());
        assert!(err.starts_with("error: domain error"));
    }

    #[test]
    fn bracket_marks_multiples_of_three() {
        assert_eq!(bracketed(&[3, 10, 5, 0]), "[3] 10 5 [0]");
    }
}
