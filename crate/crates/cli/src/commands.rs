//! The pipeline commands behind the CLI subcommands.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use polyseries_core::asympt::{
    absence_test, default_absence_terms, fit_amplitudes, identify_constant, normalize_real,
    stability_report, unit_pool,
};
use polyseries_core::enumerate::{
    assemble_t, enumerate_imperfect_stats, enumerate_staircase, SweepStats,
};
use polyseries_core::error::Error;
use polyseries_core::exactarith::{generate_prime_batch_bits, IntegerSeries, ResidueSeries};
use polyseries_core::holonomic::{extend_series_real_monitored, ode_to_recurrence, SeedWindow};
use polyseries_core::odefit::{
    search_fuchsian, verify_annihilation, verify_annihilation_mod, SearchOptions,
};
use polyseries_core::par::par_map;
use polyseries_core::singular::analyze;
use polyseries_core::Result;

use crate::format::{parse_ode, parse_series, render_ode, render_series, SeriesData, SeriesFile};

/// Location of shipped data files: $POLYSERIES_DATA_DIR or ./data.
pub fn data_dir() -> PathBuf {
    std::env::var_os("POLYSERIES_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// The order-8 equation distributed with the tool.
pub fn shipped_ode() -> PathBuf {
    data_dir().join("appendix_a.ode")
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::InvalidArgument(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub struct EnumerateArgs {
    pub max_n: usize,
    /// number of word-size primes; 0 = exact integer arithmetic throughout
    pub primes: usize,
    pub prime_bits: u32,
    pub out: PathBuf,
}

/// Run the full enumeration pipeline: staircase exactly, imperfect per
/// prime (concurrently), CRT lift, assembly; writes c/p/t series files.
pub fn cmd_enumerate(args: &EnumerateArgs, log: &mut dyn std::io::Write) -> Result<()> {
    let n = args.max_n;
    let c = if n >= 2 {
        enumerate_staircase(n)?
    } else {
        let _ = writeln!(
            log,
            "warning: no polygon closes below half-perimeter 2; all counts are zero"
        );
        IntegerSeries::new(vec![rug::Integer::new(); n + 1])
    };
    let p = if n < 4 {
        if n >= 2 {
            let _ = writeln!(
                log,
                "warning: imperfect counts start at half-perimeter 4; all are zero here"
            );
        }
        IntegerSeries::new(vec![rug::Integer::new(); n + 1])
    } else if args.primes == 0 {
        let start = Instant::now();
        let p = polyseries_core::enumerate::enumerate_imperfect_exact(n)?;
        let _ = writeln!(log, "exact sweep: {:.2}s", start.elapsed().as_secs_f64());
        p
    } else {
        let primes = generate_prime_batch_bits(args.primes, args.prime_bits)?;
        // |t_n| < 4^n, so the lift is certified while 4^n < M/2
        let modulus = primes
            .iter()
            .fold(rug::Integer::from(1), |m, q| m * q.value());
        let certified = (modulus.significant_bits() as usize).saturating_sub(2) / 2;
        if certified < n {
            let _ = writeln!(
                log,
                "warning: {} primes certify coefficients only up to n = {certified}; larger ones wrap",
                args.primes
            );
        }
        let runs: Vec<Result<(ResidueSeries, SweepStats, f64)>> = par_map(primes, |q| {
            let start = Instant::now();
            let (series, stats) = enumerate_imperfect_stats(n, q)?;
            Ok((series, stats, start.elapsed().as_secs_f64()))
        });
        let mut residues = Vec::with_capacity(args.primes);
        for run in runs {
            let (series, stats, secs) = run?;
            let _ = writeln!(
                log,
                "prime {}: {:.2}s, peak {} states / {} stored coefficients",
                series.modulus.value(),
                secs,
                stats.peak_states,
                stats.peak_coeffs
            );
            residues.push(series);
        }
        IntegerSeries::crt_lift(&residues)?
    };
    let t = assemble_t(&c, &p)?;
    write_file(
        &args.out.join("c.series"),
        &render_series(&SeriesFile::exact('c', c)),
    )?;
    write_file(
        &args.out.join("p.series"),
        &render_series(&SeriesFile::exact('p', p)),
    )?;
    write_file(
        &args.out.join("t.series"),
        &render_series(&SeriesFile::exact('t', t)),
    )?;
    let _ = writeln!(log, "wrote c/p/t series to {}", args.out.display());
    Ok(())
}

/// Check that an ODE annihilates a series over their full overlap.
/// Returns Ok(false) when a residual is nonzero.
pub fn cmd_verify_ode(
    ode_path: &Path,
    series_path: &Path,
    log: &mut dyn std::io::Write,
) -> Result<bool> {
    let ode = parse_ode(&read_to_string(ode_path)?)?;
    let file = parse_series(&read_to_string(series_path)?)?;
    let outcome = match &file.data {
        SeriesData::Exact(s) => {
            let to = s
                .len()
                .checked_sub(1 + ode.order())
                .ok_or(Error::SeriesTooShort {
                    need: ode.order() + 1,
                    have: s.len(),
                })?;
            verify_annihilation(&ode, s, 0, to).map(|_| to)
        }
        SeriesData::Modular(s) => {
            let to = s
                .coeffs
                .len()
                .checked_sub(1 + ode.order())
                .ok_or(Error::SeriesTooShort {
                    need: ode.order() + 1,
                    have: s.coeffs.len(),
                })?;
            verify_annihilation_mod(&ode, s, 0, to).map(|_| to)
        }
        SeriesData::Real(_) => {
            return Err(Error::InvalidArgument(
                "verification works on exact or modular series".into(),
            ))
        }
    };
    match outcome {
        Ok(to) => {
            let _ = writeln!(log, "verified: residuals 0..={to} all vanish");
            Ok(true)
        }
        Err(Error::ResidualNonzero(n)) => {
            let _ = writeln!(log, "FAILED: residual at order {n} is nonzero");
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

pub struct FitArgs {
    pub series: PathBuf,
    pub orders: (usize, usize),
    pub degrees: (usize, usize),
    pub out: Option<PathBuf>,
}

/// Search for an annihilating ODE of the series and write it out.
pub fn cmd_fit_ode(args: &FitArgs, log: &mut dyn std::io::Write) -> Result<()> {
    let file = parse_series(&read_to_string(&args.series)?)?;
    let series = file.as_exact()?;
    let opts = SearchOptions::default();
    let outcome = search_fuchsian(
        series,
        args.orders.0..=args.orders.1,
        args.degrees.0..=args.degrees.1,
        &opts,
    )?;
    let _ = writeln!(
        log,
        "found order {} (schedule degrees {:?}, nullity {})",
        outcome.ode.order(),
        outcome.schedule.degrees,
        outcome.nullity
    );
    let _ = writeln!(
        log,
        "certificate: {} terms used, {} predicted, {} primes",
        outcome.certificate.terms_used,
        outcome.certificate.terms_predicted,
        outcome.certificate.primes_used.len()
    );
    let text = render_ode(&outcome.ode);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => {
            let _ = write!(log, "{text}");
        }
    }
    Ok(())
}

/// Full singularity analysis of an ODE file.
pub fn cmd_analyze(ode_path: &Path, log: &mut dyn std::io::Write) -> Result<bool> {
    let ode = parse_ode(&read_to_string(ode_path)?)?;
    let report = analyze(&ode)?;
    let _ = write!(log, "{report}");
    Ok(report.fuchs_pass.unwrap_or(false))
}

pub struct AmplitudeArgs {
    pub ode: PathBuf,
    pub seed: PathBuf,
    pub terms: usize,
    pub digits: u32,
    pub k: usize,
    pub k2: Option<usize>,
}

/// Extend the series in real arithmetic via the ODE's recurrence, fit the
/// amplitude ansatz, and report stability, absence checks and recognized
/// closed forms.
pub fn cmd_amplitudes(args: &AmplitudeArgs, log: &mut dyn std::io::Write) -> Result<()> {
    let ode = parse_ode(&read_to_string(&args.ode)?)?;
    let file = parse_series(&read_to_string(&args.seed)?)?;
    let seed_series = file.as_exact()?;
    if seed_series.coeffs.iter().all(|c| *c == 0) {
        return Err(Error::InvalidArgument(
            "seed series is identically zero".into(),
        ));
    }
    let rec = ode_to_recurrence(&ode);
    let seed = SeedWindow::new(&rec, seed_series.coeffs.clone())?;
    let start = Instant::now();
    let (real, drift) = extend_series_real_monitored(&rec, &seed, args.terms + 2, args.digits)?;
    let _ = writeln!(
        log,
        "extended to {} terms at {} digits in {:.2}s, monitor drift {:.3e}",
        args.terms + 2,
        args.digits,
        start.elapsed().as_secs_f64(),
        drift.to_f64()
    );
    let r = normalize_real(&real, args.digits)?;
    let model = fit_amplitudes(&r, args.k)?;
    for w in &model.warnings {
        let _ = writeln!(log, "warning: {w}");
    }
    let k2 = args.k2.unwrap_or(args.k + 10);
    let stab = stability_report(&r, args.k, k2)?;
    let units = unit_pool(args.digits);
    let describe = |value: &polyseries_core::exactarith::PrecisionReal, digits: f64| {
        let confident = digits.max(0.0) as usize;
        let shown = confident.clamp(6, value.digits() as usize);
        let text = value.as_float().to_string_radix(10, Some(shown));
        match identify_constant(value, &units) {
            Some((idx, q)) => format!("{text} [{confident} digits] = {q} * {}", units[idx].name),
            None => format!("{text} [{confident} digits]"),
        }
    };
    for (i, v) in model.a.iter().enumerate() {
        let _ = writeln!(log, "a[{i}] = {}", describe(v, stab.a[i]));
    }
    for (i, v) in model.b.iter().enumerate() {
        let _ = writeln!(log, "b[{i}] = {}", describe(v, stab.b[i]));
    }
    for (i, v) in model.c.iter().enumerate() {
        let _ = writeln!(log, "c[{i}] = {}", describe(v, stab.c[i]));
    }
    let absent = absence_test(&r, args.k, &default_absence_terms())?;
    for (term, v) in &absent {
        let _ = writeln!(
            log,
            "absent {}: fitted magnitude {:.3e}",
            term.describe(),
            v.as_float().clone().abs().to_f64()
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_dir_honours_environment() {
        // the variable is process-global; restore it afterwards
        let saved = std::env::var_os("POLYSERIES_DATA_DIR");
        std::env::set_var("POLYSERIES_DATA_DIR", "/tmp/somewhere");
        assert_eq!(data_dir(), PathBuf::from("/tmp/somewhere"));
        match saved {
            Some(v) => std::env::set_var("POLYSERIES_DATA_DIR", v),
            None => std::env::remove_var("POLYSERIES_DATA_DIR"),
        }
    }
}
