//! P-recursive machinery: convert a linear ODE into the equivalent
//! polynomial-coefficient recurrence for the series coefficients, extend a
//! seeded series in exact, modular, or high-precision real arithmetic, and
//! apply ODEs to series.

use rug::{Float, Integer};

use crate::error::Error;
use crate::exactarith::{
    self, digits_to_prec, IntegerSeries, PrimeModulus, RealSeries, ResidueSeries,
};
use crate::odefit::LinearODE;
use crate::poly::{self, IntPoly};
use crate::Result;

/// Σ_{j=0}^{s} q_j(n)·t_{n+j} = 0 for all n ≥ 0, with integer polynomials
/// q_j in n and q_s not identically zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolynomialRecurrence {
    polys: Vec<IntPoly>,
}

impl PolynomialRecurrence {
    pub fn span(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn polys(&self) -> &[IntPoly] {
        &self.polys
    }

    pub fn q(&self, j: usize) -> &IntPoly {
        &self.polys[j]
    }

    pub fn q_eval(&self, j: usize, n: u64) -> Integer {
        poly::eval(&self.polys[j], &Integer::from(n))
    }

    /// Largest n in [0, horizon] with q_s(n) = 0, scanned with a modular
    /// finite-difference table and confirmed exactly. None if no root.
    pub fn largest_integer_root(&self, horizon: u64) -> Option<u64> {
        let q = self.polys.last().unwrap();
        let modulus = PrimeModulus::new((1 << 31) - 1).expect("known prime");
        let p = modulus.value();
        // difference table of q over n = 0, 1, 2, …
        let d = poly::deg(q).unwrap_or(0);
        let mut table: Vec<u64> = (0..=d as u64)
            .map(|n| exactarith::reduce_mod(&poly::eval(q, &Integer::from(n)), modulus))
            .collect();
        for level in 1..=d {
            for i in (level..=d).rev() {
                table[i] = exactarith::submod(table[i], table[i - 1], p);
            }
        }
        let mut best = None;
        for n in 0..=horizon {
            if table[0] == 0 && self.q_eval(self.span(), n) == 0 {
                best = Some(n);
            }
            for i in 0..d {
                table[i] = exactarith::addmod(table[i], table[i + 1], p);
            }
        }
        best
    }
}

/// Extract the coefficient of x^n from Σ P_k F⁽ᵏ⁾ = 0: each monomial
/// x^i·d^k sends t_{n+j} (j = E+k−i, E = max_k deg P_k − k) through a
/// falling-factorial weight, giving q_j(n) = Σ_k P_k[E+k−j]·(n+j−k+1)⋯(n+j).
/// Trailing zero polynomials are trimmed and the content is normalized.
pub fn ode_to_recurrence(ode: &LinearODE) -> PolynomialRecurrence {
    let m = ode.order();
    let e = ode
        .polys()
        .iter()
        .enumerate()
        .filter_map(|(k, pk)| poly::deg(pk).map(|d| d as i64 - k as i64))
        .max()
        .expect("nonzero ODE");
    let span = (e + m as i64) as usize;

    let mut polys: Vec<IntPoly> = Vec::with_capacity(span + 1);
    for j in 0..=span {
        let mut qj: IntPoly = Vec::new();
        for (k, pk) in ode.polys().iter().enumerate() {
            let i = e + k as i64 - j as i64;
            if i < 0 || i as usize >= pk.len() {
                continue;
            }
            let c = &pk[i as usize];
            if *c == 0 {
                continue;
            }
            // ∏_{u=1}^{k} (n + j − k + u) as a polynomial in n
            let mut ff = vec![Integer::from(1)];
            for u in 1..=k as i64 {
                ff = poly::mul(&ff, &[Integer::from(j as i64 - k as i64 + u), Integer::from(1)]);
            }
            qj = poly::add(&qj, &poly::scale(&ff, c));
        }
        polys.push(qj);
    }
    while polys.len() > 1 && poly::is_zero(polys.last().unwrap()) {
        polys.pop();
    }
    let mut content = Integer::from(0);
    for q in &polys {
        content.gcd_mut(&poly::content(q));
    }
    if content == 0 {
        content = Integer::from(1);
    }
    if poly::leading(polys.last().unwrap()) < 0 {
        content = -content;
    }
    for q in polys.iter_mut() {
        for c in q.iter_mut() {
            *c /= &content;
        }
    }
    PolynomialRecurrence { polys }
}

/// Initial coefficients t_0…t_{n0}. Construction verifies the window covers
/// the recurrence span and satisfies it on the overlap; the caller should
/// also start past the largest integer root of the leading polynomial (see
/// [`PolynomialRecurrence::largest_integer_root`]), or extension will stop
/// with an error naming the offending index.
#[derive(Clone, Debug)]
pub struct SeedWindow {
    coeffs: Vec<Integer>,
}

impl SeedWindow {
    pub fn new(rec: &PolynomialRecurrence, coeffs: Vec<Integer>) -> Result<Self> {
        let s = rec.span();
        if coeffs.len() < s + 1 {
            return Err(Error::SeriesTooShort {
                need: s + 1,
                have: coeffs.len(),
            });
        }
        for n in 0..=coeffs.len() - 1 - s {
            let mut acc = Integer::new();
            for j in 0..=s {
                acc += rec.q_eval(j, n as u64) * &coeffs[n + j];
            }
            if acc != 0 {
                return Err(Error::ResidualNonzero(n));
            }
        }
        Ok(SeedWindow { coeffs })
    }

    pub fn coeffs(&self) -> &[Integer] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Arithmetic mode for series extension.
#[derive(Clone, Copy, Debug)]
pub enum ExtendMode {
    Exact,
    Modular(PrimeModulus),
    /// decimal digits per term
    Real(u32),
}

#[derive(Clone, Debug)]
pub enum ExtendedSeries {
    Exact(IntegerSeries),
    Modular(ResidueSeries),
    Real(RealSeries),
}

impl ExtendedSeries {
    pub fn into_exact(self) -> IntegerSeries {
        match self {
            ExtendedSeries::Exact(s) => s,
            _ => panic!("not an exact series"),
        }
    }

    pub fn into_modular(self) -> ResidueSeries {
        match self {
            ExtendedSeries::Modular(s) => s,
            _ => panic!("not a modular series"),
        }
    }

    pub fn into_real(self) -> RealSeries {
        match self {
            ExtendedSeries::Real(s) => s,
            _ => panic!("not a real series"),
        }
    }
}

/// Extend the seeded series to `n_target + 1` coefficients (indices 0…N).
pub fn extend_series(
    rec: &PolynomialRecurrence,
    seed: &SeedWindow,
    n_target: usize,
    mode: ExtendMode,
) -> Result<ExtendedSeries> {
    match mode {
        ExtendMode::Exact => Ok(ExtendedSeries::Exact(IntegerSeries::new(extend_exact(
            rec, seed, n_target,
        )?))),
        ExtendMode::Modular(p) => Ok(ExtendedSeries::Modular(extend_modular(
            rec, seed, n_target, p,
        )?)),
        ExtendMode::Real(d) => Ok(ExtendedSeries::Real(extend_real(rec, seed, n_target, d)?)),
    }
}

fn extend_exact(
    rec: &PolynomialRecurrence,
    seed: &SeedWindow,
    n_target: usize,
) -> Result<Vec<Integer>> {
    let s = rec.span();
    let mut t = seed.coeffs().to_vec();
    t.reserve(n_target + 1);
    while t.len() <= n_target {
        let n = (t.len() - s) as u64;
        let lead = rec.q_eval(s, n);
        if lead == 0 {
            return Err(Error::LeadingZero(n as i64));
        }
        let mut acc = Integer::new();
        for j in 0..s {
            acc += rec.q_eval(j, n) * &t[t.len() - s + j];
        }
        let (quot, rem) = (-acc).div_rem(lead);
        if rem != 0 {
            return Err(Error::NonIntegralStep(n as i64));
        }
        t.push(quot);
    }
    t.truncate(n_target + 1);
    Ok(t)
}

fn extend_modular(
    rec: &PolynomialRecurrence,
    seed: &SeedWindow,
    n_target: usize,
    p: PrimeModulus,
) -> Result<ResidueSeries> {
    let pv = p.value();
    let s = rec.span();
    let polys: Vec<Vec<u64>> = rec
        .polys()
        .iter()
        .map(|q| q.iter().map(|c| exactarith::reduce_mod(c, p)).collect())
        .collect();
    let eval = |j: usize, n: u64| -> u64 {
        let mut acc = 0u64;
        for c in polys[j].iter().rev() {
            acc = exactarith::addmod(exactarith::mulmod(acc, n % pv, pv), *c, pv);
        }
        acc
    };
    let mut t: Vec<u64> = seed
        .coeffs()
        .iter()
        .map(|c| exactarith::reduce_mod(c, p))
        .collect();
    t.reserve(n_target + 1);
    while t.len() <= n_target {
        let n = (t.len() - s) as u64;
        let lead = eval(s, n);
        let Some(inv) = exactarith::invmod(lead, pv) else {
            return Err(Error::LeadingZero(n as i64));
        };
        let mut acc = 0u64;
        for j in 0..s {
            let qv = eval(j, n);
            acc = exactarith::addmod(acc, exactarith::mulmod(qv, t[t.len() - s + j], pv), pv);
        }
        t.push(exactarith::mulmod(exactarith::submod(0, acc, pv), inv, pv));
    }
    t.truncate(n_target + 1);
    Ok(ResidueSeries {
        modulus: p,
        coeffs: t,
    })
}

fn extend_real(
    rec: &PolynomialRecurrence,
    seed: &SeedWindow,
    n_target: usize,
    digits: u32,
) -> Result<RealSeries> {
    let prec = digits_to_prec(digits);
    let s = rec.span();
    let mut t: Vec<Float> = seed
        .coeffs()
        .iter()
        .map(|c| Float::with_val(prec, c))
        .collect();
    t.reserve(n_target + 1);
    while t.len() <= n_target {
        let n = (t.len() - s) as u64;
        let lead = rec.q_eval(s, n);
        if lead == 0 {
            return Err(Error::LeadingZero(n as i64));
        }
        let mut acc = Float::new(prec);
        for j in 0..s {
            let qv = rec.q_eval(j, n);
            if qv != 0 {
                acc += Float::with_val(prec, &qv) * &t[t.len() - s + j];
            }
        }
        acc = -acc / Float::with_val(prec, &lead);
        t.push(acc);
    }
    t.truncate(n_target + 1);
    Ok(RealSeries { digits, coeffs: t })
}

/// Real-mode extension with a second run at d+50 digits; returns the series
/// at d digits plus the largest relative deviation seen at the final term,
/// an estimate of accumulated roundoff.
pub fn extend_series_real_monitored(
    rec: &PolynomialRecurrence,
    seed: &SeedWindow,
    n_target: usize,
    digits: u32,
) -> Result<(RealSeries, Float)> {
    let lo = extend_real(rec, seed, n_target, digits)?;
    let hi = extend_real(rec, seed, n_target, digits + 50)?;
    let prec = digits_to_prec(digits + 50);
    let mut worst = Float::new(prec);
    for idx in [n_target / 2, n_target] {
        let a = Float::with_val(prec, &lo.coeffs[idx]);
        let b = &hi.coeffs[idx];
        if b.is_zero() {
            continue;
        }
        let rel = Float::with_val(prec, &a - b).abs() / Float::with_val(prec, b.abs_ref());
        if rel > worst {
            worst = rel;
        }
    }
    Ok((lo, worst))
}

/// Residual series of Σ P_k F⁽ᵏ⁾ applied to a truncated series; indices
/// 0…len−1−order are exact, so only those are returned.
pub fn apply_ode(ode: &LinearODE, series: &IntegerSeries) -> Result<IntegerSeries> {
    let m = ode.order();
    if series.len() <= m {
        return Err(Error::SeriesTooShort {
            need: m + 1,
            have: series.len(),
        });
    }
    let top = series.len() - 1 - m;
    let mut out = vec![Integer::new(); top + 1];
    for (k, pk) in ode.polys().iter().enumerate() {
        let mut ff = Integer::from(1);
        for u in 1..=k {
            ff *= u as u64;
        }
        for j in 0..=top {
            let term = Integer::from(&series.coeffs[j + k] * &ff);
            for (i, c) in pk.iter().enumerate() {
                if j + i > top {
                    break;
                }
                if *c != 0 {
                    out[j + i] += Integer::from(c * &term);
                }
            }
            ff = ff * (j + k + 1) as u64 / (j + 1) as u64;
        }
    }
    Ok(IntegerSeries::new(out))
}
