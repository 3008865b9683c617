//! Asymptotic amplitude extraction from a long coefficient series.
//!
//! The normalized sequence r_n = t_{n+2}/4^n is fitted against the ansatz
//!
//!   r_n ≈ Σ_i a_i·ln n/(√n·n^i) + Σ_i b_i/(√n·n^i)
//!       + Σ_i c_i·(−1)^n/(√n·n^{7+i}),
//!
//! a square linear system read off the last stretch of the sequence in
//! high-precision arithmetic, solved by full-pivot elimination with column
//! equilibration. Stability of each amplitude is measured by comparing
//! fits of different depth, and candidate closed forms are recognized by
//! continued fractions against a pool of unit constants.

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::Error;
use crate::exactarith::{digits_to_prec, IntegerSeries, PrecisionReal, RealSeries};
use crate::singular::recognize_rational;
use crate::Result;

/// The sequence r_n = t_{n+2}/4^n at fixed precision, indexed from n = 0.
#[derive(Clone, Debug)]
pub struct NormalizedSeries {
    digits: u32,
    values: Vec<Float>,
}

impl NormalizedSeries {
    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, n: usize) -> &Float {
        &self.values[n]
    }
}

/// Normalize an exact series: r_n = t_{n+2}/4^n rounded to `digits`.
pub fn normalize(t: &IntegerSeries, digits: u32) -> Result<NormalizedSeries> {
    if t.len() < 3 {
        return Err(Error::SeriesTooShort {
            need: 3,
            have: t.len(),
        });
    }
    let prec = digits_to_prec(digits);
    let mut values = Vec::with_capacity(t.len() - 2);
    let mut pow4 = Float::with_val(prec, 1);
    for n in 0..t.len() - 2 {
        let num = Float::with_val(prec, &t.coeffs[n + 2]);
        values.push(num / &pow4);
        pow4 *= 4u32;
    }
    Ok(NormalizedSeries { digits, values })
}

/// Normalize an already-real series at its own precision.
pub fn normalize_real(t: &RealSeries, digits: u32) -> Result<NormalizedSeries> {
    if t.coeffs.len() < 3 {
        return Err(Error::SeriesTooShort {
            need: 3,
            have: t.coeffs.len(),
        });
    }
    let prec = digits_to_prec(digits);
    let mut values = Vec::with_capacity(t.coeffs.len() - 2);
    let mut pow4 = Float::with_val(prec, 1);
    for n in 0..t.coeffs.len() - 2 {
        let num = Float::with_val(prec, &t.coeffs[n + 2]);
        values.push(num / &pow4);
        pow4 *= 4u32;
    }
    Ok(NormalizedSeries { digits, values })
}

/// One basis function ln(n)^log_power · (−1)^{n·alternating} · n^{−half_power/2}.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisTerm {
    pub log_power: u32,
    pub alternating: bool,
    /// exponent of n^{−1/2}; e.g. 1 means 1/√n, 3 means 1/(n√n)
    pub half_power: i64,
}

impl BasisTerm {
    pub fn value(&self, n: usize, prec: u32) -> Float {
        let nf = Float::with_val(prec, n as u64);
        let mut v = nf.clone().sqrt().pow(-(self.half_power as i32));
        for _ in 0..self.log_power {
            v *= nf.clone().ln();
        }
        if self.alternating && n % 2 == 1 {
            v = -v;
        }
        v
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if self.alternating {
            parts.push("(-1)^n".to_string());
        }
        match self.log_power {
            0 => {}
            1 => parts.push("ln(n)".to_string()),
            p => parts.push(format!("ln(n)^{p}")),
        }
        parts.push(format!("n^(-{}/2)", self.half_power));
        parts.join("*")
    }
}

/// The standard 4K+3 term basis: K+1 log terms, K+1 plain terms, 2K+1
/// alternating terms starting at n^{−15/2}.
pub fn standard_basis(k: usize) -> Vec<BasisTerm> {
    let mut terms = Vec::with_capacity(4 * k + 3);
    for i in 0..=k {
        terms.push(BasisTerm {
            log_power: 1,
            alternating: false,
            half_power: 1 + 2 * i as i64,
        });
    }
    for i in 0..=k {
        terms.push(BasisTerm {
            log_power: 0,
            alternating: false,
            half_power: 1 + 2 * i as i64,
        });
    }
    for i in 0..=2 * k {
        terms.push(BasisTerm {
            log_power: 0,
            alternating: true,
            half_power: 15 + 2 * i as i64,
        });
    }
    terms
}

/// Fitted amplitudes at depth K.
#[derive(Clone, Debug)]
pub struct AmplitudeModel {
    pub k: usize,
    pub digits: u32,
    /// log amplitudes a_0..a_K
    pub a: Vec<PrecisionReal>,
    /// plain amplitudes b_0..b_K
    pub b: Vec<PrecisionReal>,
    /// alternating amplitudes c_0..c_{2K}
    pub c: Vec<PrecisionReal>,
    pub warnings: Vec<String>,
}

impl AmplitudeModel {
    /// Model prediction of r_n.
    pub fn predict(&self, n: usize) -> PrecisionReal {
        let prec = digits_to_prec(self.digits);
        let mut acc = Float::new(prec);
        let basis = standard_basis(self.k);
        let amps = self.flat();
        for (term, amp) in basis.iter().zip(&amps) {
            acc += term.value(n, prec) * amp.as_float();
        }
        PrecisionReal::from_float(acc, self.digits)
    }

    fn flat(&self) -> Vec<PrecisionReal> {
        let mut v = Vec::with_capacity(4 * self.k + 3);
        v.extend(self.a.iter().cloned());
        v.extend(self.b.iter().cloned());
        v.extend(self.c.iter().cloned());
        v
    }
}

/// Solve M·x = rhs by Gaussian elimination with full pivoting and column
/// equilibration; M is consumed. Errors when a pivot vanishes.
fn solve_full_pivot(mut m: Vec<Vec<Float>>, mut rhs: Vec<Float>, prec: u32) -> Result<Vec<Float>> {
    let n = m.len();
    // equilibrate columns
    let mut col_scale = vec![Float::with_val(prec, 1); n];
    for c in 0..n {
        let mut mx = Float::new(prec);
        for row in m.iter() {
            let a = row[c].clone().abs();
            if a > mx {
                mx = a;
            }
        }
        if mx != 0 {
            for row in m.iter_mut() {
                row[c] /= &mx;
            }
            col_scale[c] = mx;
        }
    }
    let mut col_of = (0..n).collect::<Vec<usize>>();
    for step in 0..n {
        let mut best = (step, step);
        let mut best_mag = Float::new(prec);
        for r in step..n {
            for c in step..n {
                let a = m[r][c].clone().abs();
                if a > best_mag {
                    best_mag = a;
                    best = (r, c);
                }
            }
        }
        if best_mag == 0 {
            return Err(Error::SingularSystem);
        }
        m.swap(step, best.0);
        rhs.swap(step, best.0);
        if best.1 != step {
            for row in m.iter_mut() {
                row.swap(step, best.1);
            }
            col_of.swap(step, best.1);
        }
        let pivot = m[step][step].clone();
        for r in step + 1..n {
            let f = Float::with_val(prec, &m[r][step] / &pivot);
            if f == 0 {
                continue;
            }
            for c in step..n {
                let sub = Float::with_val(prec, &f * &m[step][c]);
                m[r][c] -= sub;
            }
            let sub = Float::with_val(prec, &f * &rhs[step]);
            rhs[r] -= sub;
        }
    }
    let mut x = vec![Float::new(prec); n];
    for step in (0..n).rev() {
        let mut acc = rhs[step].clone();
        for c in step + 1..n {
            acc -= Float::with_val(prec, &m[step][c] * &x[c]);
        }
        x[step] = acc / &m[step][step];
    }
    let mut out = vec![Float::new(prec); n];
    for (slot, xi) in x.into_iter().enumerate() {
        out[col_of[slot]] = xi / &col_scale[col_of[slot]];
    }
    Ok(out)
}

fn fit_against(r: &NormalizedSeries, basis: &[BasisTerm]) -> Result<Vec<Float>> {
    let count = basis.len();
    let len = r.len();
    if len < count + 2 {
        return Err(Error::SeriesTooShort {
            need: count + 2,
            have: len,
        });
    }
    let prec = digits_to_prec(r.digits);
    let mut m = Vec::with_capacity(count);
    let mut rhs = Vec::with_capacity(count);
    for row in 0..count {
        let n = len - 1 - row;
        m.push(
            basis
                .iter()
                .map(|term| term.value(n, prec))
                .collect::<Vec<Float>>(),
        );
        rhs.push(r.values[n].clone());
    }
    solve_full_pivot(m, rhs, prec)
}

/// Fit the standard basis of depth K to the last 4K+3 values of r.
pub fn fit_amplitudes(r: &NormalizedSeries, k: usize) -> Result<AmplitudeModel> {
    let mut warnings = Vec::new();
    let comfortable = 100 + 12 * k as u32;
    if r.digits < comfortable {
        warnings.push(format!(
            "precision {} digits is below the comfortable {} for depth {}; \
             trailing amplitudes will be noisy",
            r.digits, comfortable, k
        ));
    }
    let basis = standard_basis(k);
    let x = fit_against(r, &basis)?;
    let wrap = |f: &Float| PrecisionReal::from_float(f.clone(), r.digits);
    Ok(AmplitudeModel {
        k,
        digits: r.digits,
        a: x[..=k].iter().map(wrap).collect(),
        b: x[k + 1..=2 * k + 1].iter().map(wrap).collect(),
        c: x[2 * k + 2..].iter().map(wrap).collect(),
        warnings,
    })
}

/// Agreement, in decimal digits, between two values: −log10 of the
/// relative difference (capped at the working precision).
pub fn agreement_digits(x: &PrecisionReal, y: &PrecisionReal) -> f64 {
    let prec = x.as_float().prec().max(y.as_float().prec());
    let diff = Float::with_val(prec, x.as_float() - y.as_float()).abs();
    let scale = Float::with_val(prec, x.as_float().clone().abs().max(&Float::with_val(prec, 1e-300)));
    if diff == 0 {
        return x.digits().min(y.digits()) as f64;
    }
    let rel = diff / scale;
    let digits = -rel.log10().to_f64();
    digits.min(x.digits().min(y.digits()) as f64)
}

/// Per-amplitude agreement between fits of depth K1 and K2 over the
/// indices both share.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub k1: usize,
    pub k2: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

pub fn stability_report(r: &NormalizedSeries, k1: usize, k2: usize) -> Result<StabilityReport> {
    let m1 = fit_amplitudes(r, k1)?;
    let m2 = fit_amplitudes(r, k2)?;
    let pair = |u: &[PrecisionReal], v: &[PrecisionReal]| {
        u.iter()
            .zip(v.iter())
            .map(|(x, y)| agreement_digits(x, y))
            .collect::<Vec<f64>>()
    };
    Ok(StabilityReport {
        k1,
        k2,
        a: pair(&m1.a, &m2.a),
        b: pair(&m1.b, &m2.b),
        c: pair(&m1.c, &m2.c),
    })
}

/// Re-fit with extra candidate terms appended and return their fitted
/// amplitudes. Terms genuinely absent from the asymptotic expansion come
/// back many orders of magnitude below the real amplitudes.
pub fn absence_test(
    r: &NormalizedSeries,
    k: usize,
    extra: &[BasisTerm],
) -> Result<Vec<(BasisTerm, PrecisionReal)>> {
    let mut basis = standard_basis(k);
    let start = basis.len();
    basis.extend_from_slice(extra);
    let x = fit_against(r, &basis)?;
    Ok(extra
        .iter()
        .zip(&x[start..])
        .map(|(t, v)| (*t, PrecisionReal::from_float(v.clone(), r.digits)))
        .collect())
}

/// The default absence candidates: integer-power corrections (with and
/// without logs), a squared log, and an alternating log term.
pub fn default_absence_terms() -> Vec<BasisTerm> {
    vec![
        BasisTerm {
            log_power: 1,
            alternating: false,
            half_power: 2,
        },
        BasisTerm {
            log_power: 0,
            alternating: false,
            half_power: 2,
        },
        BasisTerm {
            log_power: 1,
            alternating: false,
            half_power: 4,
        },
        BasisTerm {
            log_power: 0,
            alternating: false,
            half_power: 4,
        },
        BasisTerm {
            log_power: 2,
            alternating: false,
            half_power: 1,
        },
        BasisTerm {
            log_power: 1,
            alternating: true,
            half_power: 15,
        },
    ]
}

/// A named reference constant for closed-form recognition.
#[derive(Clone, Debug)]
pub struct UnitConstant {
    pub name: String,
    pub value: PrecisionReal,
}

/// The units that appear in the amplitude closed forms: 1/(√3·π^{3/2})
/// and 1/π^{3/2}.
pub fn unit_pool(digits: u32) -> Vec<UnitConstant> {
    let pi = PrecisionReal::pi(digits);
    let pi32 = &pi.sqrt() * &pi;
    let sqrt3 = PrecisionReal::from_u64(3, digits).sqrt();
    vec![
        UnitConstant {
            name: "1/(sqrt(3)*pi^(3/2))".into(),
            value: (&pi32 * &sqrt3).recip(),
        },
        UnitConstant {
            name: "1/pi^(3/2)".into(),
            value: pi32.recip(),
        },
    ]
}

/// Recognize value = q·unit for one unit in the pool and rational q with
/// denominator ≤ 10⁹, residual below 10^{10−d}. First hit wins.
pub fn identify_constant(
    value: &PrecisionReal,
    units: &[UnitConstant],
) -> Option<(usize, Rational)> {
    let d = value.digits();
    let tol = 10f64.powi(10 - (d as i32).min(300));
    for (idx, unit) in units.iter().enumerate() {
        let ratio = value / &unit.value;
        if let Some(q) = recognize_rational(ratio.as_float(), 1_000_000_000, tol) {
            return Some((idx, q));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::{assemble_t, brute_force_t, enumerate_imperfect_exact, enumerate_staircase};

    fn synthetic_series(
        n_max: usize,
        digits: u32,
        amps: &[(BasisTerm, f64)],
    ) -> NormalizedSeries {
        let prec = digits_to_prec(digits);
        let values = (0..=n_max)
            .map(|n| {
                let mut acc = Float::new(prec);
                if n >= 1 {
                    for (term, a) in amps {
                        acc += term.value(n, prec) * Float::with_val(prec, *a);
                    }
                }
                acc
            })
            .collect();
        NormalizedSeries { digits, values }
    }

    #[test]
    fn normalize_matches_hand_values() {
        let n = 8;
        let c = enumerate_staircase(n).unwrap();
        let p = enumerate_imperfect_exact(n).unwrap();
        let t = assemble_t(&c, &p).unwrap();
        let r = normalize(&t, 50).unwrap();
        assert_eq!(r.value(0).to_f64(), 4.0);
        assert_eq!(r.value(1).to_f64(), 3.0);
        assert_eq!(r.value(2).to_f64(), 2.625);
        assert_eq!(r.value(3).to_f64(), 2.375);
        let brute = brute_force_t(n).unwrap();
        let rb = normalize(&brute, 50).unwrap();
        assert_eq!(rb.value(3).to_f64(), 2.375);
    }

    #[test]
    fn fit_recovers_synthetic_amplitudes() {
        let terms = standard_basis(0);
        let amps: Vec<(BasisTerm, f64)> = terms
            .iter()
            .cloned()
            .zip([3.0, 2.0, -5.0])
            .collect();
        let r = synthetic_series(60, 120, &amps);
        let model = fit_amplitudes(&r, 0).unwrap();
        let a0 = model.a[0].as_float().to_f64();
        let b0 = model.b[0].as_float().to_f64();
        let c0 = model.c[0].as_float().to_f64();
        assert!((a0 - 3.0).abs() < 1e-12);
        assert!((b0 - 2.0).abs() < 1e-12);
        assert!((c0 + 5.0).abs() < 1e-12);
        assert!(model.warnings.is_empty());
    }

    #[test]
    fn fit_interpolates_the_sample_window() {
        let terms = standard_basis(1);
        let amps: Vec<(BasisTerm, f64)> = terms
            .iter()
            .cloned()
            .zip([3.0, -1.25, 2.0, 0.5, -5.0, 1.0, -0.75])
            .collect();
        let digits = 120;
        let r = synthetic_series(80, digits, &amps);
        let model = fit_amplitudes(&r, 1).unwrap();
        // every sample row of the square system is reproduced essentially
        // to working precision
        let tol = Float::with_val(digits_to_prec(digits), 10f64).pow(2 - digits as i32);
        for n in (80 - 6)..=80 {
            let predicted = model.predict(n);
            let actual = r.value(n);
            let prec = digits_to_prec(digits);
            let diff = Float::with_val(prec, predicted.as_float() - actual).abs();
            let rel = diff / Float::with_val(prec, actual.clone().abs());
            assert!(rel < tol, "n={n} rel={rel}");
        }
    }

    #[test]
    fn absent_terms_come_back_tiny() {
        let terms = standard_basis(1);
        let amps: Vec<(BasisTerm, f64)> = terms
            .iter()
            .cloned()
            .zip([3.0, -1.25, 2.0, 0.5, -5.0, 1.0, -0.75])
            .collect();
        let r = synthetic_series(120, 150, &amps);
        let extra = vec![BasisTerm {
            log_power: 2,
            alternating: false,
            half_power: 1,
        }];
        let fitted = absence_test(&r, 1, &extra).unwrap();
        assert_eq!(fitted.len(), 1);
        let mag = fitted[0].1.as_float().clone().abs().to_f64();
        assert!(mag < 1e-60, "absent amplitude {mag}");
    }

    #[test]
    fn stability_improves_with_matching_depth() {
        // exact depth-1 generator: fits at depths ≥ 1 nail it, a depth-0
        // fit carries genuine truncation error, and that shows up as a
        // large gap in the agreement digits
        let terms = standard_basis(1);
        let amps: Vec<(BasisTerm, f64)> = terms
            .iter()
            .cloned()
            .zip([3.0, -1.25, 2.0, 0.5, -5.0, 1.0, -0.75])
            .collect();
        let r = synthetic_series(140, 160, &amps);
        let shallow = stability_report(&r, 0, 1).unwrap();
        let deep = stability_report(&r, 1, 2).unwrap();
        assert!(shallow.a[0] < 30.0, "{:?}", shallow.a);
        assert!(deep.a[0] > 50.0, "{:?}", deep.a);
        assert!(deep.b[0] > 50.0, "{:?}", deep.b);
        assert!(deep.c[0] > 30.0, "{:?}", deep.c);
    }

    #[test]
    fn precision_warning_when_digits_low() {
        let terms = standard_basis(0);
        let amps: Vec<(BasisTerm, f64)> = terms.iter().cloned().zip([1.0, 1.0, 1.0]).collect();
        let r = synthetic_series(40, 60, &amps);
        let model = fit_amplitudes(&r, 0).unwrap();
        assert_eq!(model.warnings.len(), 1);
        assert!(model.warnings[0].contains("below the comfortable"));
    }

    #[test]
    fn identify_rational_multiples_of_units() {
        let digits = 80;
        let units = unit_pool(digits);
        let q = Rational::from((7, 3));
        let value = &PrecisionReal::from_rational(&q, digits) * &units[1].value;
        let hit = identify_constant(&value, &units);
        // 7/(3π^{3/2}) is also (7√3/3)·(1/(√3π^{3/2})), which is not
        // rational, so the match lands on the second unit
        assert_eq!(hit, Some((1, q)));
        let pi = PrecisionReal::pi(digits);
        assert_eq!(identify_constant(&pi, &units), None);
    }

    #[test]
    fn singular_system_detected() {
        let terms = vec![
            BasisTerm {
                log_power: 0,
                alternating: false,
                half_power: 2,
            },
            BasisTerm {
                log_power: 0,
                alternating: false,
                half_power: 2,
            },
        ];
        let prec = digits_to_prec(60);
        let m: Vec<Vec<Float>> = (0..2)
            .map(|row| terms.iter().map(|t| t.value(28 + row, prec)).collect())
            .collect();
        let rhs = vec![Float::new(prec), Float::new(prec)];
        match solve_full_pivot(m, rhs, prec) {
            Err(Error::SingularSystem) => {}
            other => panic!("expected singular system, got {other:?}"),
        }
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn fit_recovers_random_dyadic_amplitudes(
            raw in proptest::collection::vec(-400i64..=400, 7),
        ) {
            // amplitudes at multiples of 1/16 are exact in binary, so the
            // square fit must reproduce them to solver precision
            let terms = standard_basis(1);
            let want: Vec<f64> = raw.iter().map(|&v| v as f64 / 16.0).collect();
            let amps: Vec<(BasisTerm, f64)> = terms.iter().cloned().zip(want.iter().copied()).collect();
            let r = synthetic_series(80, 120, &amps);
            let model = fit_amplitudes(&r, 1).unwrap();
            let got = [
                model.a[0].as_float().to_f64(),
                model.a[1].as_float().to_f64(),
                model.b[0].as_float().to_f64(),
                model.b[1].as_float().to_f64(),
                model.c[0].as_float().to_f64(),
                model.c[1].as_float().to_f64(),
                model.c[2].as_float().to_f64(),
            ];
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-60, "got {g}, want {w}");
            }
        }
    }
}
