//! Command-line front end. Exit codes: 0 when every trial passes, 1 on a
//! certification failure (or a replay mismatch), 2 on usage or I/O errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::harness::{self, InequalityId, OutputFormat, RunConfig, TMode};
use crate::matspd::{Field, DEFAULT_TOL};
use crate::posmaps::MapKind;
use crate::scalar_young::DEFAULT_TERMS;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "opineq", version, about = "Seeded Loewner-order certification of operator mean inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify randomly generated instances.
    Run(RunArgs),
    /// Re-evaluate records of a previous run and compare slacks.
    Replay(ReplayArgs),
    /// List the registered inequality ids.
    List,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Csv,
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("tmode").args(["t_grid", "t_uniform"])))]
pub struct RunArgs {
    /// Comma-separated inequality ids (default: all).
    #[arg(long, env = "OPINEQ_IDS", value_delimiter = ',')]
    pub ids: Vec<String>,
    #[arg(long, env = "OPINEQ_DIMS", value_delimiter = ',', default_values_t = [2usize, 3, 4, 8])]
    pub dims: Vec<usize>,
    /// Trials per inequality id.
    #[arg(long, env = "OPINEQ_TRIALS", default_value_t = 100)]
    pub trials: usize,
    #[arg(long, env = "OPINEQ_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Equally spaced interior weights; without a value, the default grid.
    #[arg(long, env = "OPINEQ_T_GRID", num_args = 0..=1, default_missing_value = "0")]
    pub t_grid: Option<usize>,
    /// Uniformly random weights.
    #[arg(long, env = "OPINEQ_T_UNIFORM")]
    pub t_uniform: bool,
    /// Number of series terms.
    #[arg(long = "N", env = "OPINEQ_N", default_value_t = DEFAULT_TERMS)]
    pub n_terms: usize,
    #[arg(long, env = "OPINEQ_COND_CAP", default_value_t = 1e4)]
    pub cond_cap: f64,
    #[arg(long, env = "OPINEQ_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Comma-separated map kinds (default: all).
    #[arg(long, env = "OPINEQ_MAP_KINDS", value_delimiter = ',')]
    pub map_kinds: Vec<String>,
    /// Record file; without it only the summary is printed.
    #[arg(long, env = "OPINEQ_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "OPINEQ_FORMAT", value_enum, default_value_t = FormatArg::Jsonl)]
    pub format: FormatArg,
    /// Real symmetric instead of complex Hermitian instances.
    #[arg(long, env = "OPINEQ_REAL")]
    pub real: bool,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, clap::Args)]
pub struct ReplayArgs {
    /// JSONL file written by `run`.
    pub records: PathBuf,
    /// Replay only this zero-based line.
    #[arg(long)]
    pub line: Option<usize>,
    /// Allowed relative slack difference.
    #[arg(long, default_value_t = 1e-14)]
    pub rel_tol: f64,
}

impl RunArgs {
    pub fn to_config(&self) -> Result<RunConfig> {
        let inequality_ids = if self.ids.is_empty() {
            InequalityId::ALL.to_vec()
        } else {
            self.ids.iter().map(|s| s.trim().parse()).collect::<Result<Vec<_>>>()?
        };
        let map_kinds = if self.map_kinds.is_empty() {
            MapKind::ALL.to_vec()
        } else {
            self.map_kinds.iter().map(|s| MapKind::parse(s.trim())).collect::<Result<Vec<_>>>()?
        };
        let t_mode = match (self.t_uniform, self.t_grid) {
            (true, _) => TMode::Uniform,
            (false, Some(k)) if k > 0 => TMode::Grid(k),
            _ => TMode::DefaultGrid,
        };
        let config = RunConfig {
            inequality_ids,
            dims: self.dims.clone(),
            trials: self.trials,
            seed: self.seed,
            t_mode,
            n_terms: self.n_terms,
            cond_cap: self.cond_cap,
            tol: self.tol,
            map_kinds,
            field: if self.real { Field::Real } else { Field::Complex },
            output_path: self.out.clone(),
            format: match self.format {
                FormatArg::Jsonl => OutputFormat::Jsonl,
                FormatArg::Csv => OutputFormat::Csv,
            },
        };
        config.validate()?;
        Ok(config)
    }
}

fn run_command(args: &RunArgs) -> i32 {
    let config = match args.to_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    match harness::run(&config) {
        Ok(summary) => {
            if args.json {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            } else {
                print!("{summary}");
            }
            if summary.passed() {
                EXIT_PASS
            } else {
                eprintln!("{} certification failure(s)", summary.failures());
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn replay_command(args: &ReplayArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.records)?;
    let records = harness::read_records(&text)?;
    let selected: Vec<_> = match args.line {
        Some(i) => vec![records.get(i).ok_or_else(|| Error::MalformedRecord(format!("no line {i}")))?],
        None => records.iter().collect(),
    };
    let mut mismatches = 0;
    for rec in &selected {
        let rep = harness::replay(rec)?;
        if !harness::replay_matches(rec, &rep, args.rel_tol) {
            mismatches += 1;
            println!(
                "mismatch {} seed={} recorded={:e} replayed={:e}",
                rec.inequality_id, rec.seed, rec.slack, rep.slack
            );
        }
    }
    println!("replayed {} record(s), {} mismatch(es)", selected.len(), mismatches);
    Ok(if mismatches == 0 { EXIT_PASS } else { EXIT_FAIL })
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Replay(args) => replay_command(&args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            EXIT_USAGE
        }),
        Command::List => {
            for id in InequalityId::ALL {
                println!("{id}");
            }
            EXIT_PASS
        }
    }
}

pub fn main() -> i32 {
    main_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunArgs {
        match Cli::try_parse_from(args).unwrap().command {
            Command::Run(r) => r,
            _ => panic!("expected run"),
        }
    }

    #[test]
    fn flags_map_to_config() {
        let r = parse(&["opineq", "run", "--ids", "kitt,ando", "--dims", "3", "--trials", "5", "--t-grid", "4", "--N", "3"]);
        let c = r.to_config().unwrap();
        assert_eq!(c.inequality_ids, vec![InequalityId::Kitt, InequalityId::Ando]);
        assert_eq!(c.dims, vec![3]);
        assert_eq!(c.t_mode, TMode::Grid(4));
        assert_eq!(c.n_terms, 3);
        let c = parse(&["opineq", "run", "--t-grid"]).to_config().unwrap();
        assert_eq!(c.t_mode, TMode::DefaultGrid);
        let c = parse(&["opineq", "run", "--t-uniform", "--real"]).to_config().unwrap();
        assert_eq!((c.t_mode, c.field), (TMode::Uniform, Field::Real));
    }

    #[test]
    fn usage_errors() {
        assert!(Cli::try_parse_from(["opineq", "run", "--t-grid", "3", "--t-uniform"]).is_err());
        assert!(parse(&["opineq", "run", "--trials", "0"]).to_config().is_err());
        assert!(parse(&["opineq", "run", "--ids", "nope"]).to_config().is_err());
        assert_eq!(main_with_args(["opineq", "run", "--trials", "0"]), EXIT_USAGE);
        assert_eq!(main_with_args(["opineq", "frobnicate"]), EXIT_USAGE);
    }
}
