//! polyseries: count three-choice polygons, fit an annihilating ODE to the
//! perimeter series, analyze its singularities, and estimate asymptotic
//! amplitudes.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polyseries_core::error::Error;

use polyseries_cli::commands::{
    self, cmd_amplitudes, cmd_analyze, cmd_enumerate, cmd_fit_ode, cmd_verify_ode, AmplitudeArgs,
    EnumerateArgs, FitArgs,
};

#[derive(Parser)]
#[command(name = "polyseries", version, about)]
struct Cli {
    /// Cap the worker thread count (default: one per core)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count polygons by half-perimeter and write the c/p/t series files
    Enumerate {
        /// Largest half-perimeter to count
        #[arg(long = "max-n")]
        max_n: usize,

        /// Number of word-size primes to sweep over (0 = exact integers)
        #[arg(long, default_value_t = 0)]
        primes: usize,

        /// Bit size of the generated primes
        #[arg(long = "prime-bits", default_value_t = 30)]
        prime_bits: u32,

        /// Directory receiving c.series, p.series and t.series
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },

    /// Check that an ODE annihilates a series over their full overlap
    VerifyOde {
        /// ODE file
        ode: PathBuf,
        /// Series file (exact or modular)
        series: PathBuf,
    },

    /// Search for an annihilating equation with polynomial coefficients
    FitOde {
        /// Exact series file to fit
        series: PathBuf,

        /// Equation order to try: a single value or a range like 6..10
        #[arg(long, value_parser = parse_span, default_value = "1..10")]
        order: (usize, usize),

        /// Top-coefficient degree to try: single value or range
        #[arg(long, value_parser = parse_span, default_value = "0..12")]
        degree: (usize, usize),

        /// Write the equation here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Locate and classify the singular points of an ODE
    Analyze {
        /// ODE file (default: the shipped equation in the data directory)
        ode: Option<PathBuf>,
    },

    /// Extend a series in real arithmetic and fit its asymptotic amplitudes
    Amplitudes {
        /// ODE file supplying the recurrence (default: the shipped equation)
        #[arg(long)]
        ode: Option<PathBuf>,

        /// Exact seed series file
        #[arg(long)]
        seed: PathBuf,

        /// Number of terms to extend to
        #[arg(long, default_value_t = 50000)]
        terms: usize,

        /// Working precision in decimal digits
        #[arg(long, default_value_t = 300)]
        digits: u32,

        /// Correction depth of the fitted ansatz
        #[arg(long = "K", default_value_t = 30)]
        k: usize,

        /// Second depth for the stability comparison (default K+10)
        #[arg(long = "K2")]
        k2: Option<usize>,
    },
}

/// Parse "8" or "6..10" into an inclusive (lo, hi) pair.
fn parse_span(text: &str) -> Result<(usize, usize), String> {
    let t = text.trim();
    let (lo, hi) = match t.split_once("..") {
        Some((a, b)) => (
            a.trim().parse::<usize>().map_err(|e| e.to_string())?,
            b.trim().parse::<usize>().map_err(|e| e.to_string())?,
        ),
        None => {
            let v = t.parse::<usize>().map_err(|e| e.to_string())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Parse(_) => 2,
        Error::ResidualNonzero(_) => 1,
        _ => 3,
    }
}

fn run(command: &Command, log: &mut dyn std::io::Write) -> polyseries_core::Result<bool> {
    match command {
        Command::Enumerate {
            max_n,
            primes,
            prime_bits,
            out,
        } => {
            let args = EnumerateArgs {
                max_n: *max_n,
                primes: *primes,
                prime_bits: *prime_bits,
                out: out.clone(),
            };
            cmd_enumerate(&args, log).map(|()| true)
        }
        Command::VerifyOde { ode, series } => cmd_verify_ode(ode, series, log),
        Command::FitOde {
            series,
            order,
            degree,
            out,
        } => {
            let args = FitArgs {
                series: series.clone(),
                orders: *order,
                degrees: *degree,
                out: out.clone(),
            };
            cmd_fit_ode(&args, log).map(|()| true)
        }
        Command::Analyze { ode } => {
            let ode = ode.clone().unwrap_or_else(commands::shipped_ode);
            cmd_analyze(&ode, log)
        }
        Command::Amplitudes {
            ode,
            seed,
            terms,
            digits,
            k,
            k2,
        } => {
            let args = AmplitudeArgs {
                ode: ode.clone().unwrap_or_else(commands::shipped_ode),
                seed: seed.clone(),
                terms: *terms,
                digits: *digits,
                k: *k,
                k2: *k2,
            };
            cmd_amplitudes(&args, log).map(|()| true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        polyseries_core::par::limit_threads(jobs);
    }
    let stdout = std::io::stdout();
    let mut log = stdout.lock();
    match run(&cli.command, &mut log) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spans_parse() {
        assert_eq!(parse_span("8"), Ok((8, 8)));
        assert_eq!(parse_span("6..10"), Ok((6, 10)));
        assert_eq!(parse_span(" 0 .. 3 "), Ok((0, 3)));
        assert!(parse_span("10..6").is_err());
        assert!(parse_span("x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
