//! Discovery of a homogeneous linear ODE with polynomial coefficients
//! annihilating a given power series.
//!
//! The ansatz writes each coefficient polynomial as P_k = Q_k·S(x)^k with a
//! fixed scaffold S(x) = x·R(x); the unknown Q-coefficients are fitted by
//! requiring the series expansion of Σ_k P_k F⁽ᵏ⁾ to vanish term by term.
//! Each fit is an overdetermined linear system over a word-size prime field;
//! consistency across surplus rows and across independent primes is the
//! detection signal, and CRT plus rational reconstruction lifts the modular
//! solutions to an integer equation.

use std::ops::RangeInclusive;

use rug::ops::RemRounding;
use rug::{Integer, Rational};

use crate::error::Error;
use crate::exactarith::{
    self, generate_prime_batch_bits, rational_reconstruct, reduce_mod, IntegerSeries,
    PrimeModulus, ResidueSeries,
};
use crate::par::par_map;
use crate::poly::{self, IntPoly};
use crate::Result;

pub const DEFAULT_MARGIN: usize = 10;

/// Degree plan for one fit attempt: deg Q_k ≤ degrees[k], scaffold S = x·R.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSchedule {
    pub order: usize,
    pub degrees: Vec<usize>,
    pub scaffold_r: IntPoly,
}

impl DegreeSchedule {
    /// Degrees grow linearly toward low derivative orders:
    /// deg Q_k = top_degree + slope·(order−k).
    pub fn sloped(order: usize, top_degree: usize, slope: usize, scaffold_r: IntPoly) -> Self {
        let degrees = (0..=order)
            .map(|k| top_degree + slope * (order - k))
            .collect();
        DegreeSchedule {
            order,
            degrees,
            scaffold_r,
        }
    }

    pub fn uniform(order: usize, degree: usize, scaffold_r: IntPoly) -> Self {
        Self::sloped(order, degree, 0, scaffold_r)
    }

    /// Total number of Q-coefficient columns, including the pinned one.
    pub fn columns(&self) -> usize {
        self.degrees.iter().map(|d| d + 1).sum()
    }

    /// Free unknowns L: one coefficient is pinned to 1.
    pub fn unknowns(&self) -> usize {
        self.columns() - 1
    }
}

/// Homogeneous linear ODE Σ_{k=0}^{m} P_k(x)·F⁽ᵏ⁾(x) = 0 in canonical form:
/// the polynomials share no common polynomial factor, their integer content
/// is 1, and the leading coefficient of P_m is positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearODE {
    order: usize,
    polys: Vec<IntPoly>,
}

impl LinearODE {
    pub fn new(polys: Vec<IntPoly>) -> Result<Self> {
        if polys.is_empty() {
            return Err(Error::InvalidArgument("no coefficient polynomials".into()));
        }
        let mut polys: Vec<IntPoly> = polys
            .into_iter()
            .map(|mut p| {
                poly::trim(&mut p);
                p
            })
            .collect();
        if poly::is_zero(polys.last().unwrap()) {
            return Err(Error::InvalidArgument(
                "top-order coefficient polynomial is identically zero".into(),
            ));
        }
        // strip the common polynomial factor (same solution space away from
        // its roots), then integer content, then fix the overall sign
        let mut g: IntPoly = Vec::new();
        for p in &polys {
            g = poly::gcd(&g, p);
            if poly::deg(&g) == Some(0) {
                break;
            }
        }
        if poly::deg(&g).unwrap_or(0) >= 1 {
            for p in polys.iter_mut() {
                *p = poly::divide_exact(p, &g).expect("gcd divides");
            }
        }
        let mut content = Integer::from(0);
        for p in &polys {
            content.gcd_mut(&poly::content(p));
        }
        if poly::leading(polys.last().unwrap()) < 0 {
            content = -content;
        }
        for p in polys.iter_mut() {
            for c in p.iter_mut() {
                *c /= &content;
            }
        }
        Ok(LinearODE {
            order: polys.len() - 1,
            polys,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn polys(&self) -> &[IntPoly] {
        &self.polys
    }

    pub fn poly(&self, k: usize) -> &IntPoly {
        &self.polys[k]
    }

    /// Equality of canonical forms: same annihilator up to a constant
    /// multiple and common polynomial factors.
    pub fn equivalent(&self, other: &LinearODE) -> bool {
        self == other
    }
}

/// Evidence attached to an accepted fit.
#[derive(Clone, Debug)]
pub struct FitCertificate {
    pub terms_used: usize,
    pub terms_predicted: usize,
    pub primes_used: Vec<u64>,
}

/// Dense fit system over one prime field. Row r is the coefficient of x^r;
/// the pinned unknown (leading coefficient of Q_m) is moved to the
/// right-hand side with value 1.
#[derive(Debug)]
pub struct DesignMatrix {
    modulus: PrimeModulus,
    nrows: usize,
    ncols: usize,
    data: Vec<u64>,
    rhs: Vec<u64>,
    degenerate: bool,
}

impl DesignMatrix {
    pub fn rows(&self) -> usize {
        self.nrows
    }

    pub fn cols(&self) -> usize {
        self.ncols
    }

    /// True when the whole system vanished (e.g. the zero series), so that
    /// every vector is formally a solution.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

pub fn build_design_matrix(
    series: &ResidueSeries,
    schedule: &DegreeSchedule,
) -> Result<DesignMatrix> {
    build_design_matrix_with_margin(series, schedule, DEFAULT_MARGIN)
}

pub fn build_design_matrix_with_margin(
    series: &ResidueSeries,
    schedule: &DegreeSchedule,
    margin: usize,
) -> Result<DesignMatrix> {
    let nrows = schedule.unknowns() + 1 + margin;
    if series.len() < nrows {
        return Err(Error::SeriesTooShort {
            need: nrows,
            have: series.len(),
        });
    }
    let p = series.modulus.value();
    let t = &series.coeffs;
    let m = schedule.order;

    // g_k[r] = coefficient of x^r in S^k · F^(k)
    let mut g = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let mut gk = vec![0u64; nrows];
        let rk = poly::pow(&schedule.scaffold_r, k as u32);
        let sk: Vec<u64> = rk.iter().map(|c| reduce_mod(c, series.modulus)).collect();
        for (h, &sh) in sk.iter().enumerate() {
            if sh == 0 {
                continue;
            }
            let base = k + h;
            if base >= nrows {
                break;
            }
            let mut ff = 1u64;
            for u in 1..=k as u64 {
                ff = exactarith::mulmod(ff, u, p);
            }
            // ff tracks (j+1)…(j+k) as j advances
            for j in 0..nrows - base {
                let f = exactarith::mulmod(t[j + k], ff, p);
                gk[base + j] = exactarith::addmod(gk[base + j], exactarith::mulmod(sh, f, p), p);
                let num = (j + k + 1) as u64 % p;
                let den = (j + 1) as u64 % p;
                let inv = exactarith::invmod(den, p).expect("j+1 < p");
                ff = exactarith::mulmod(exactarith::mulmod(ff, num, p), inv, p);
            }
        }
        g.push(gk);
    }

    // columns in (k, i) order; value at row r is g_k[r − i]
    let ncols = schedule.columns() - 1;
    let mut data = vec![0u64; nrows * ncols];
    let mut rhs = vec![0u64; nrows];
    let mut col = 0;
    for k in 0..=m {
        for i in 0..=schedule.degrees[k] {
            let pinned = k == m && i == schedule.degrees[m];
            for r in i..nrows {
                let v = g[k][r - i];
                if pinned {
                    rhs[r] = (p - v) % p;
                } else {
                    data[r * ncols + col] = v;
                }
            }
            if !pinned {
                col += 1;
            }
        }
    }
    let degenerate = data.iter().all(|&v| v == 0) && rhs.iter().all(|&v| v == 0);
    Ok(DesignMatrix {
        modulus: series.modulus,
        nrows,
        ncols,
        data,
        rhs,
        degenerate,
    })
}

/// One modular solution vector in schedule column order, pinned component
/// (the last) equal to 1. `nullity` counts extra solution-space dimensions;
/// anything above 0 means the fit is not unique and deserves a warning.
#[derive(Clone, Debug)]
pub struct CandidateSolution {
    pub vector: Vec<u64>,
    pub nullity: usize,
    pub degenerate: bool,
    pub modulus: PrimeModulus,
}

/// Solve the overdetermined system; None when the surplus rows are
/// inconsistent (no annihilator of this shape exists mod p).
pub fn solve_candidate(matrix: &DesignMatrix) -> Option<CandidateSolution> {
    let p = matrix.modulus.value();
    let (nrows, ncols) = (matrix.nrows, matrix.ncols);
    let mut a = matrix.data.clone();
    let mut b = matrix.rhs.clone();

    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0usize;
    for col in 0..ncols {
        let Some(sel) = (row..nrows).find(|&r| a[r * ncols + col] != 0) else {
            continue;
        };
        if sel != row {
            for c in col..ncols {
                a.swap(row * ncols + c, sel * ncols + c);
            }
            b.swap(row, sel);
        }
        let inv = exactarith::invmod(a[row * ncols + col], p).expect("pivot invertible");
        for c in col..ncols {
            a[row * ncols + c] = exactarith::mulmod(a[row * ncols + c], inv, p);
        }
        b[row] = exactarith::mulmod(b[row], inv, p);
        for r in 0..nrows {
            if r == row {
                continue;
            }
            let f = a[r * ncols + col];
            if f == 0 {
                continue;
            }
            for c in col..ncols {
                let sub = exactarith::mulmod(f, a[row * ncols + c], p);
                a[r * ncols + c] = exactarith::submod(a[r * ncols + c], sub, p);
            }
            let sub = exactarith::mulmod(f, b[row], p);
            b[r] = exactarith::submod(b[r], sub, p);
        }
        pivots.push(col);
        row += 1;
        if row == nrows {
            break;
        }
    }
    // rows past the pivot count are zero in the coefficient part
    if (row..nrows).any(|r| b[r] != 0) {
        return None;
    }
    let mut vector = vec![0u64; ncols + 1];
    for (prow, &pcol) in pivots.iter().enumerate() {
        vector[pcol] = b[prow];
    }
    vector[ncols] = 1;
    Some(CandidateSolution {
        vector,
        nullity: ncols - pivots.len(),
        degenerate: matrix.degenerate,
        modulus: matrix.modulus,
    })
}

/// CRT-combine per-prime solutions, rationally reconstruct, clear
/// denominators, and expand Q_k·S^k into the canonical integer equation.
pub fn lift_ode(solutions: &[CandidateSolution], schedule: &DegreeSchedule) -> Result<LinearODE> {
    if solutions.is_empty() {
        return Err(Error::InvalidArgument("no solutions to lift".into()));
    }
    let ncomp = schedule.columns();
    for s in solutions {
        if s.vector.len() != ncomp {
            return Err(Error::LengthMismatch(s.vector.len(), ncomp));
        }
        if *s.vector.last().unwrap() != 1 {
            return Err(Error::PinMismatch);
        }
    }
    let mut product = Integer::from(1);
    for s in solutions {
        product *= s.modulus.value();
    }
    let mut rationals = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        let residues: Vec<(u64, PrimeModulus)> =
            solutions.iter().map(|s| (s.vector[c], s.modulus)).collect();
        let combined = exactarith::crt_combine(&residues)?;
        let residue = combined.rem_euc(&product);
        match rational_reconstruct(&residue, &product) {
            Some(q) => rationals.push(q),
            None => return Err(Error::NeedMorePrimes { component: c }),
        }
    }
    let mut den = Integer::from(1);
    for q in &rationals {
        den.lcm_mut(q.denom());
    }
    let flat: Vec<Integer> = rationals
        .iter()
        .map(|q| Rational::from(q * &den).into_numer_denom().0)
        .collect();

    let mut polys = Vec::with_capacity(schedule.order + 1);
    let mut pos = 0;
    for k in 0..=schedule.order {
        let q = &flat[pos..pos + schedule.degrees[k] + 1];
        pos += schedule.degrees[k] + 1;
        let rk = poly::pow(&schedule.scaffold_r, k as u32);
        polys.push(poly::shift_up(&poly::mul(q, &rk), k));
    }
    LinearODE::new(polys)
}

/// Exact residual check: coefficients [from, to] of Σ P_k F⁽ᵏ⁾ applied to
/// the truncated series must vanish. Residual index r consumes series terms
/// through r + order, so `to` may not exceed len − 1 − order.
pub fn verify_annihilation(
    ode: &LinearODE,
    series: &IntegerSeries,
    from: usize,
    to: usize,
) -> Result<FitCertificate> {
    if to + ode.order + 1 > series.len() {
        return Err(Error::SeriesTooShort {
            need: to + ode.order + 1,
            have: series.len(),
        });
    }
    let mut out = vec![Integer::new(); to + 1];
    for (k, pk) in ode.polys.iter().enumerate() {
        let mut ff = Integer::from(1);
        for u in 1..=k {
            ff *= u as u64;
        }
        for j in 0..=to {
            let term = Integer::from(&series.coeffs[j + k] * &ff);
            for (i, c) in pk.iter().enumerate() {
                if j + i > to {
                    break;
                }
                if *c != 0 {
                    out[j + i] += Integer::from(c * &term);
                }
            }
            ff = ff * (j + k + 1) as u64 / (j + 1) as u64;
        }
    }
    if let Some(r) = (from..=to).find(|&r| out[r] != 0) {
        return Err(Error::ResidualNonzero(r));
    }
    Ok(FitCertificate {
        terms_used: to + ode.order + 1,
        terms_predicted: to - from + 1,
        primes_used: Vec::new(),
    })
}

/// Modular residual check; same contract as the exact form.
pub fn verify_annihilation_mod(
    ode: &LinearODE,
    series: &ResidueSeries,
    from: usize,
    to: usize,
) -> Result<FitCertificate> {
    if to + ode.order + 1 > series.len() {
        return Err(Error::SeriesTooShort {
            need: to + ode.order + 1,
            have: series.len(),
        });
    }
    let p = series.modulus.value();
    let polys: Vec<Vec<u64>> = ode
        .polys
        .iter()
        .map(|pk| pk.iter().map(|c| reduce_mod(c, series.modulus)).collect())
        .collect();
    let mut out = vec![0u64; to + 1];
    for (k, pk) in polys.iter().enumerate() {
        let mut ff = 1u64;
        for u in 1..=k as u64 {
            ff = exactarith::mulmod(ff, u, p);
        }
        for j in 0..=to {
            let term = exactarith::mulmod(series.coeffs[j + k], ff, p);
            for (i, &c) in pk.iter().enumerate() {
                if j + i > to {
                    break;
                }
                if c != 0 {
                    out[j + i] =
                        exactarith::addmod(out[j + i], exactarith::mulmod(c, term, p), p);
                }
            }
            let num = (j + k + 1) as u64 % p;
            let inv = exactarith::invmod((j + 1) as u64 % p, p).expect("j+1 < p");
            ff = exactarith::mulmod(exactarith::mulmod(ff, num, p), inv, p);
        }
    }
    if let Some(r) = (from..=to).find(|&r| out[r] != 0) {
        return Err(Error::ResidualNonzero(r));
    }
    Ok(FitCertificate {
        terms_used: to + ode.order + 1,
        terms_predicted: to - from + 1,
        primes_used: vec![p],
    })
}

/// Knobs for the schedule sweep.
#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub scaffold_r: IntPoly,
    pub slope: usize,
    pub margin: usize,
    pub min_primes: usize,
    pub max_primes: usize,
    pub min_held_out: usize,
    pub prime_bits: u32,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            scaffold_r: poly::from_i64s(&[1, -4]),
            slope: 1,
            margin: DEFAULT_MARGIN,
            min_primes: 2,
            max_primes: 40,
            min_held_out: 10,
            prime_bits: 30,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub ode: LinearODE,
    pub certificate: FitCertificate,
    pub schedule: DegreeSchedule,
    /// Extra nullspace dimensions seen while solving; > 0 means the schedule
    /// admits several equations and the pinned one was chosen.
    pub nullity: usize,
}

/// Series source for one prime: must return at least `len` coefficients of
/// the target series reduced mod p.
pub type SeriesProvider<'a> = &'a (dyn Fn(PrimeModulus, usize) -> Result<ResidueSeries> + Sync);

/// Sweep (order, top-degree) schedules in increasing unknown count until a
/// candidate solves consistently over `min_primes` primes, lifts over enough
/// primes for rational reconstruction, and survives a held-out residual
/// check over every prime used.
pub fn search_fuchsian_with(
    provider: SeriesProvider,
    nterms: usize,
    orders: RangeInclusive<usize>,
    top_degrees: RangeInclusive<usize>,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let primes = generate_prime_batch_bits(opts.max_primes, opts.prime_bits)?;
    let mut grid: Vec<(usize, usize, usize)> = Vec::new();
    for m in orders.clone() {
        for q in top_degrees.clone() {
            let l = DegreeSchedule::sloped(m, q, opts.slope, opts.scaffold_r.clone()).unknowns();
            grid.push((l, m, q));
        }
    }
    grid.sort();

    let mut largest_l = 0;
    'grid: for &(l, m, q) in &grid {
        let nrows = l + 1 + opts.margin;
        if nrows + opts.min_held_out + m > nterms {
            continue;
        }
        largest_l = largest_l.max(l);
        let schedule = DegreeSchedule::sloped(m, q, opts.slope, opts.scaffold_r.clone());

        let solve_prime = |p: PrimeModulus| -> Result<Option<CandidateSolution>> {
            let series = provider(p, nrows)?;
            let matrix = build_design_matrix_with_margin(&series, &schedule, opts.margin)?;
            Ok(solve_candidate(&matrix))
        };

        let first: Vec<Result<Option<CandidateSolution>>> =
            par_map(primes[..opts.min_primes].to_vec(), |p| solve_prime(p));
        let mut solutions = Vec::with_capacity(opts.min_primes);
        for r in first {
            match r? {
                Some(s) if !s.degenerate => solutions.push(s),
                _ => continue 'grid,
            }
        }

        loop {
            match lift_ode(&solutions, &schedule) {
                Ok(ode) => {
                    let to = nterms - 1 - m;
                    let checks: Vec<Result<FitCertificate>> = par_map(
                        solutions.iter().map(|s| s.modulus).collect(),
                        |p| {
                            let series = provider(p, nterms)?;
                            verify_annihilation_mod(&ode, &series, 0, to)
                        },
                    );
                    if checks.iter().any(|c| c.is_err()) {
                        continue 'grid;
                    }
                    let nullity = solutions.iter().map(|s| s.nullity).max().unwrap_or(0);
                    let primes_used = solutions.iter().map(|s| s.modulus.value()).collect();
                    return Ok(SearchOutcome {
                        ode,
                        certificate: FitCertificate {
                            terms_used: nrows,
                            terms_predicted: nterms - m - nrows,
                            primes_used,
                        },
                        schedule,
                        nullity,
                    });
                }
                Err(Error::NeedMorePrimes { .. }) if solutions.len() < opts.max_primes => {
                    let have = solutions.len();
                    let add = (have + 4).min(opts.max_primes) - have;
                    let more: Vec<Result<Option<CandidateSolution>>> =
                        par_map(primes[have..have + add].to_vec(), |p| solve_prime(p));
                    for r in more {
                        match r? {
                            Some(s) if !s.degenerate => solutions.push(s),
                            _ => continue 'grid,
                        }
                    }
                }
                Err(_) => continue 'grid,
            }
        }
    }
    Err(Error::SearchExhausted { largest_l })
}

/// Search over an exact series; the winner is re-verified with exact
/// arithmetic on every available term.
pub fn search_fuchsian(
    series: &IntegerSeries,
    orders: RangeInclusive<usize>,
    top_degrees: RangeInclusive<usize>,
    opts: &SearchOptions,
) -> Result<SearchOutcome> {
    let provider = move |p: PrimeModulus, len: usize| -> Result<ResidueSeries> {
        if len > series.len() {
            return Err(Error::SeriesTooShort {
                need: len,
                have: series.len(),
            });
        }
        let mut reduced = series.reduce(p);
        reduced.coeffs.truncate(len);
        Ok(reduced)
    };
    let outcome = search_fuchsian_with(&provider, series.len(), orders, top_degrees, opts)?;
    verify_annihilation(
        &outcome.ode,
        series,
        0,
        series.len() - 1 - outcome.ode.order(),
    )?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_staircase;
    use crate::exactarith::generate_prime_batch;

    fn geometric_series(n: usize) -> IntegerSeries {
        IntegerSeries::new(vec![Integer::from(1); n])
    }

    /// x(1−4x)C″ − (1−2x)C′ − 2C = 0 annihilates the staircase series.
    fn staircase_ode() -> LinearODE {
        LinearODE::new(vec![
            poly::from_i64s(&[-2]),
            poly::from_i64s(&[-1, 2]),
            poly::from_i64s(&[0, 1, -4]),
        ])
        .unwrap()
    }

    #[test]
    fn schedule_counts() {
        let s = DegreeSchedule::sloped(10, 12, 1, poly::from_i64s(&[1, -4]));
        assert_eq!(s.degrees, vec![22, 21, 20, 19, 18, 17, 16, 15, 14, 13, 12]);
        assert_eq!(s.unknowns(), 197);
        let u = DegreeSchedule::uniform(2, 3, vec![Integer::from(1)]);
        assert_eq!(u.degrees, vec![3, 3, 3]);
    }

    #[test]
    fn normalization_strips_common_factors() {
        // x(1−x)F′ − xF scaled by 6(1+2x)
        let scale = poly::from_i64s(&[6, 12]);
        let ode = LinearODE::new(vec![
            poly::mul(&scale, &poly::from_i64s(&[0, -1])),
            poly::mul(&scale, &poly::from_i64s(&[0, 1, -1])),
        ])
        .unwrap();
        assert_eq!(ode.poly(0), &poly::from_i64s(&[1]));
        assert_eq!(ode.poly(1), &poly::from_i64s(&[-1, 1]));
    }

    #[test]
    fn normalization_idempotent() {
        let ode = staircase_ode();
        let again = LinearODE::new(ode.polys().to_vec()).unwrap();
        assert!(ode.equivalent(&again));
    }

    #[test]
    fn zero_top_order_rejected() {
        assert!(LinearODE::new(vec![poly::from_i64s(&[1]), Vec::new()]).is_err());
    }

    #[test]
    fn verify_staircase_annihilator() {
        let c = enumerate_staircase(60).unwrap();
        let ode = staircase_ode();
        let cert = verify_annihilation(&ode, &c, 0, 58).unwrap();
        assert_eq!(cert.terms_predicted, 59);
        let p = generate_prime_batch(1).unwrap()[0];
        verify_annihilation_mod(&ode, &c.reduce(p), 0, 58).unwrap();
    }

    #[test]
    fn verify_flags_corruption() {
        let mut c = enumerate_staircase(40).unwrap();
        c.coeffs[15] += 1;
        let err = verify_annihilation(&staircase_ode(), &c, 0, 38).unwrap_err();
        match err {
            Error::ResidualNonzero(r) => assert!((13..=15).contains(&r), "index {r}"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn design_matrix_too_short() {
        let p = generate_prime_batch(1).unwrap()[0];
        let series = geometric_series(5).reduce(p);
        let schedule = DegreeSchedule::sloped(1, 1, 1, vec![Integer::from(1)]);
        match build_design_matrix(&series, &schedule) {
            Err(Error::SeriesTooShort { need, have }) => {
                assert_eq!(need, schedule.unknowns() + 1 + DEFAULT_MARGIN);
                assert_eq!(have, 5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_series_is_degenerate() {
        let p = generate_prime_batch(1).unwrap()[0];
        let series = ResidueSeries {
            modulus: p,
            coeffs: vec![0; 40],
        };
        let schedule = DegreeSchedule::sloped(1, 1, 1, vec![Integer::from(1)]);
        let matrix = build_design_matrix(&series, &schedule).unwrap();
        assert!(matrix.is_degenerate());
        let sol = solve_candidate(&matrix).unwrap();
        assert!(sol.degenerate);
    }

    #[test]
    fn geometric_series_order_one() {
        // F = 1/(1−x), scaffold S = x: expect x(1−x)F′ − xF = 0, i.e. the
        // canonical form (x−1)F′ + F = 0 after factor stripping
        let series = geometric_series(40);
        let opts = SearchOptions {
            scaffold_r: vec![Integer::from(1)],
            ..Default::default()
        };
        let got = search_fuchsian(&series, 1..=1, 1..=1, &opts).unwrap();
        assert_eq!(got.ode.order(), 1);
        assert_eq!(got.ode.poly(0), &poly::from_i64s(&[1]));
        assert_eq!(got.ode.poly(1), &poly::from_i64s(&[-1, 1]));
        assert!(got.certificate.terms_predicted >= 10);
        assert_eq!(got.certificate.primes_used.len(), 2);
    }

    #[test]
    fn staircase_search_finds_order_two() {
        let c = enumerate_staircase(60).unwrap();
        let got = search_fuchsian(&c, 1..=2, 0..=2, &SearchOptions::default()).unwrap();
        assert_eq!(got.ode.order(), 2);
        assert!(got.ode.equivalent(&staircase_ode()));
        assert_eq!(got.nullity, 0);
    }

    #[test]
    fn random_series_exhausts() {
        // xorshift noise; almost surely not annihilated at these sizes
        let mut x = 0x2545f4914f6cdd1du64;
        let coeffs: Vec<Integer> = (0..80)
            .map(|_| {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                Integer::from(x >> 33)
            })
            .collect();
        let series = IntegerSeries::new(coeffs);
        match search_fuchsian(&series, 1..=2, 0..=3, &SearchOptions::default()) {
            Err(Error::SearchExhausted { largest_l }) => assert!(largest_l >= 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lift_rejects_mixed_pins() {
        let primes = generate_prime_batch(2).unwrap();
        let schedule = DegreeSchedule::sloped(1, 0, 0, vec![Integer::from(1)]);
        let a = CandidateSolution {
            vector: vec![1, 1],
            nullity: 0,
            degenerate: false,
            modulus: primes[0],
        };
        let mut b = a.clone();
        b.modulus = primes[1];
        b.vector = vec![1, 2];
        assert!(matches!(
            lift_ode(&[a, b], &schedule),
            Err(Error::PinMismatch)
        ));
    }
}
