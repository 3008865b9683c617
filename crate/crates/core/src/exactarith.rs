//! Exact arithmetic substrate: word-size prime fields, CRT and rational
//! reconstruction over arbitrary-precision integers, and real arithmetic
//! with explicit decimal-digit precision accounting.

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::Error;
use crate::Result;

/// A prime modulus fitting in a machine word.
///
/// The default family is 2³⁰−r as produced by [`generate_prime_batch`];
/// [`generate_prime_batch_bits`] exposes the bit size as a performance knob.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeModulus(u64);

impl PrimeModulus {
    /// Wrap a value after a primality check.
    pub fn new(value: u64) -> Result<Self> {
        if is_prime_u64(value) {
            Ok(PrimeModulus(value))
        } else {
            Err(Error::NotPrime(value))
        }
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Deterministic Miller-Rabin for u64 (the first twelve prime bases decide
/// primality for everything below 3.3·10²⁴).
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'base: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a % n, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

/// The `count` largest primes of the form 2³⁰−r with r < 1000, largest first.
pub fn generate_prime_batch(count: usize) -> Result<Vec<PrimeModulus>> {
    generate_prime_batch_bits(count, 30)
}

/// Primes of the form 2^bits − r with r < 1000, largest first.
pub fn generate_prime_batch_bits(count: usize, bits: u32) -> Result<Vec<PrimeModulus>> {
    if count == 0 {
        return Err(Error::InvalidArgument("prime count must be >= 1".into()));
    }
    if !(20..=62).contains(&bits) {
        return Err(Error::InvalidArgument(format!(
            "prime bit size {bits} outside supported range 20..=62"
        )));
    }
    let base = 1u64 << bits;
    let mut out = Vec::with_capacity(count);
    for r in 1..1000u64 {
        let candidate = base - r;
        if is_prime_u64(candidate) {
            out.push(PrimeModulus(candidate));
            if out.len() == count {
                return Ok(out);
            }
        }
    }
    Err(Error::PrimesExhausted {
        bits,
        limit: 1000,
        found: out.len(),
        want: count,
    })
}

/// a + b mod p for a, b < p ≤ 2^63; the wrapping min trick keeps the
/// reduction branch-free (the subtraction wraps past 2^63 exactly when
/// no reduction is due).
pub fn addmod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    s.wrapping_sub(p).min(s)
}

/// a - b mod p for a, b < p ≤ 2^63, branch-free as in addmod.
pub fn submod(a: u64, b: u64, p: u64) -> u64 {
    let d = a.wrapping_sub(b);
    d.wrapping_add(p).min(d)
}

pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Inverse of a mod m via extended Euclid; None when gcd(a, m) ≠ 1.
pub fn invmod(a: u64, m: u64) -> Option<u64> {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    if r0 != 1 {
        return None;
    }
    Some(s0.rem_euclid(m as i128) as u64)
}

/// Reduce an arbitrary-precision integer into [0, p).
pub fn reduce_mod(v: &Integer, p: PrimeModulus) -> u64 {
    let m = Integer::from(v % p.0);
    let r = m.to_i64().expect("residue fits i64");
    if r < 0 {
        (r + p.0 as i64) as u64
    } else {
        r as u64
    }
}

/// Balanced Chinese-remainder combination.
///
/// Returns the unique integer in (−P/2, P/2], P = ∏ moduli, congruent to
/// every residue. Duplicate moduli are rejected.
pub fn crt_combine(residues: &[(u64, PrimeModulus)]) -> Result<Integer> {
    if residues.is_empty() {
        return Err(Error::InvalidArgument("empty CRT batch".into()));
    }
    for (i, (_, p)) in residues.iter().enumerate() {
        if residues[i + 1..].iter().any(|(_, q)| q == p) {
            return Err(Error::DuplicateModulus(p.0));
        }
    }
    let mut x = Integer::from(residues[0].0);
    let mut modulus = Integer::from(residues[0].1 .0);
    for &(r, p) in &residues[1..] {
        let m_mod_p = reduce_mod(&modulus, p);
        let inv = invmod(m_mod_p, p.0).expect("distinct primes are coprime");
        let x_mod_p = reduce_mod(&x, p);
        let delta = mulmod(submod(r % p.0, x_mod_p, p.0), inv, p.0);
        x += &modulus * Integer::from(delta);
        modulus *= p.0;
    }
    // balance into (-P/2, P/2]
    if Integer::from(&x * 2u32) > modulus {
        x -= &modulus;
    }
    Ok(x)
}

/// Balanced rational reconstruction: find p/q with |p|, q ≤ √(m/2),
/// q invertible mod m, p ≡ q·residue (mod m). Failure is a value.
pub fn rational_reconstruct(residue: &Integer, modulus: &Integer) -> Option<Rational> {
    assert!(*residue >= 0 && residue < modulus, "residue out of range");
    let bound: Integer = Integer::from(modulus / 2u32).sqrt();
    let mut r0 = modulus.clone();
    let mut r1 = residue.clone();
    let mut s0 = Integer::from(0);
    let mut s1 = Integer::from(1);
    while r1 > bound {
        let q = Integer::from(&r0 / &r1);
        let r2 = r0 - Integer::from(&q * &r1);
        (r0, r1) = (r1, r2);
        let s2 = s0 - q * &s1;
        (s0, s1) = (s1, s2);
    }
    let den_abs = Integer::from(s1.abs_ref());
    if den_abs > bound || den_abs == 0 {
        return None;
    }
    if Integer::from(r1.gcd_ref(&den_abs)) != 1 {
        return None;
    }
    if s1 < 0 {
        Some(Rational::from((-r1, den_abs)))
    } else {
        Some(Rational::from((r1, den_abs)))
    }
}

/// Power-series coefficients as exact integers (index = exponent of x).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct IntegerSeries {
    pub coeffs: Vec<Integer>,
}

/// Power-series coefficients reduced modulo one prime (index = exponent).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueSeries {
    pub modulus: PrimeModulus,
    pub coeffs: Vec<u64>,
}

impl IntegerSeries {
    pub fn new(coeffs: Vec<Integer>) -> Self {
        IntegerSeries { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        IntegerSeries {
            coeffs: coeffs.iter().map(|&c| Integer::from(c)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn reduce(&self, p: PrimeModulus) -> ResidueSeries {
        ResidueSeries {
            modulus: p,
            coeffs: self.coeffs.iter().map(|c| reduce_mod(c, p)).collect(),
        }
    }

    /// Componentwise balanced CRT over one or more residue series.
    pub fn crt_lift(parts: &[ResidueSeries]) -> Result<IntegerSeries> {
        let Some(first) = parts.first() else {
            return Err(Error::InvalidArgument("empty CRT batch".into()));
        };
        for part in parts {
            if part.coeffs.len() != first.coeffs.len() {
                return Err(Error::LengthMismatch(part.coeffs.len(), first.coeffs.len()));
            }
        }
        let mut coeffs = Vec::with_capacity(first.coeffs.len());
        for n in 0..first.coeffs.len() {
            let residues: Vec<(u64, PrimeModulus)> =
                parts.iter().map(|s| (s.coeffs[n], s.modulus)).collect();
            coeffs.push(crt_combine(&residues)?);
        }
        Ok(IntegerSeries { coeffs })
    }
}

impl ResidueSeries {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Power-series coefficients as floats, all carrying the same decimal
/// precision (index = exponent).
#[derive(Clone, Debug)]
pub struct RealSeries {
    pub digits: u32,
    pub coeffs: Vec<Float>,
}

impl RealSeries {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Binary precision needed for d decimal digits, with guard bits.
pub fn digits_to_prec(d: u32) -> u32 {
    (d as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 8
}

/// A real number at explicit decimal precision.
///
/// The interface accounts for precision in decimal digits regardless of the
/// binary radix underneath; arithmetic propagates the larger precision of
/// the operands. Default precision is 500 digits.
#[derive(Clone, Debug)]
pub struct PrecisionReal {
    value: Float,
    digits: u32,
}

pub const DEFAULT_DIGITS: u32 = 500;

impl PrecisionReal {
    pub fn zero(digits: u32) -> Self {
        assert!(digits >= 1);
        PrecisionReal {
            value: Float::new(digits_to_prec(digits)),
            digits,
        }
    }

    pub fn from_integer(v: &Integer, digits: u32) -> Self {
        PrecisionReal {
            value: Float::with_val(digits_to_prec(digits), v),
            digits,
        }
    }

    pub fn from_rational(v: &Rational, digits: u32) -> Self {
        PrecisionReal {
            value: Float::with_val(digits_to_prec(digits), v),
            digits,
        }
    }

    pub fn from_u64(v: u64, digits: u32) -> Self {
        PrecisionReal {
            value: Float::with_val(digits_to_prec(digits), v),
            digits,
        }
    }

    pub fn from_decimal_str(s: &str, digits: u32) -> Result<Self> {
        let parsed = Float::parse(s).map_err(|e| Error::Parse(format!("bad decimal '{s}': {e}")))?;
        Ok(PrecisionReal {
            value: Float::with_val(digits_to_prec(digits), parsed),
            digits,
        })
    }

    /// Wrap an existing float, recording its decimal precision.
    pub fn from_float(value: Float, digits: u32) -> Self {
        PrecisionReal { value, digits }
    }

    pub fn pi(digits: u32) -> Self {
        PrecisionReal {
            value: Float::with_val(digits_to_prec(digits), rug::float::Constant::Pi),
            digits,
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    pub fn as_float(&self) -> &Float {
        &self.value
    }

    pub fn into_float(self) -> Float {
        self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn abs(&self) -> Self {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), self.value.abs_ref()),
            digits: self.digits,
        }
    }

    pub fn sqrt(&self) -> Self {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), self.value.sqrt_ref()),
            digits: self.digits,
        }
    }

    pub fn ln(&self) -> Self {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), self.value.ln_ref()),
            digits: self.digits,
        }
    }

    pub fn powi(&self, e: i32) -> Self {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), (&self.value).pow(e)),
            digits: self.digits,
        }
    }

    pub fn recip(&self) -> Self {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), self.value.recip_ref()),
            digits: self.digits,
        }
    }

    /// Decimal string with the stored precision's digit count.
    pub fn to_decimal(&self) -> String {
        self.value
            .to_string_radix(10, Some(self.digits as usize))
    }

    fn merge(a: &Self, b: &Self) -> u32 {
        a.digits.max(b.digits)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait for &PrecisionReal {
            type Output = PrecisionReal;
            fn $method(self, rhs: &PrecisionReal) -> PrecisionReal {
                let digits = PrecisionReal::merge(self, rhs);
                let value = Float::with_val(
                    digits_to_prec(digits),
                    std::ops::$trait::$method(&self.value, &rhs.value),
                );
                PrecisionReal { value, digits }
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl std::ops::Neg for &PrecisionReal {
    type Output = PrecisionReal;
    fn neg(self) -> PrecisionReal {
        PrecisionReal {
            value: Float::with_val(self.value.prec(), -&self.value),
            digits: self.digits,
        }
    }
}

impl PartialEq for PrecisionReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for PrecisionReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

impl Default for PrecisionReal {
    fn default() -> Self {
        PrecisionReal::zero(DEFAULT_DIGITS)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_prime_below_2_30() {
        let batch = generate_prime_batch(1).unwrap();
        assert_eq!(batch[0].value(), (1u64 << 30) - 35);
        assert_eq!(batch[0].value(), 1073741789);
    }

    #[test]
    fn batch_of_18_is_distinct_and_large() {
        let batch = generate_prime_batch(18).unwrap();
        assert_eq!(batch.len(), 18);
        for (i, p) in batch.iter().enumerate() {
            assert!(p.value() > (1u64 << 30) - 1000);
            assert!(is_prime_u64(p.value()));
            assert!(batch[i + 1..].iter().all(|q| q != p));
        }
        // largest first
        for w in batch.windows(2) {
            assert!(w[0].value() > w[1].value());
        }
    }

    #[test]
    fn zero_count_is_an_error() {
        assert!(generate_prime_batch(0).is_err());
    }

    #[test]
    fn composite_family_members_are_rejected() {
        // 2^30 - 99 and friends look plausible but are composite
        for r in [99u64, 113, 131, 191, 233, 243] {
            assert!(!is_prime_u64((1u64 << 30) - r), "2^30-{r} is composite");
        }
    }

    #[test]
    fn sixty_two_bit_batch() {
        let batch = generate_prime_batch_bits(4, 62).unwrap();
        for p in &batch {
            assert!(p.value() > (1u64 << 62) - 1000);
            assert!(is_prime_u64(p.value()));
        }
    }

    #[test]
    fn crt_small() {
        let p3 = PrimeModulus::new(3).unwrap();
        let p5 = PrimeModulus::new(5).unwrap();
        assert_eq!(crt_combine(&[(1, p3), (2, p5)]).unwrap(), 7);
    }

    #[test]
    fn crt_single_modulus_balances() {
        let p = PrimeModulus::new(101).unwrap();
        assert_eq!(crt_combine(&[(40, p)]).unwrap(), 40);
        assert_eq!(crt_combine(&[(60, p)]).unwrap(), -41);
    }

    #[test]
    fn crt_reconstructs_t6() {
        let primes = generate_prime_batch(2).unwrap();
        let t6 = 562u64;
        let residues: Vec<(u64, PrimeModulus)> =
            primes.iter().map(|&p| (t6 % p.value(), p)).collect();
        assert_eq!(crt_combine(&residues).unwrap(), 562);
    }

    #[test]
    fn crt_duplicate_modulus_rejected() {
        let p = PrimeModulus::new(7).unwrap();
        assert!(matches!(
            crt_combine(&[(1, p), (2, p)]),
            Err(Error::DuplicateModulus(7))
        ));
    }

    #[test]
    fn crt_negative_balanced() {
        let primes = generate_prime_batch(3).unwrap();
        let v = Integer::from(-123456789012345i64);
        let residues: Vec<(u64, PrimeModulus)> =
            primes.iter().map(|&p| (reduce_mod(&v, p), p)).collect();
        assert_eq!(crt_combine(&residues).unwrap(), v);
    }

    #[test]
    fn rational_reconstruct_one_third() {
        let m = Integer::from(1000003u64);
        let inv3 = invmod(3, 1000003).unwrap();
        let r = Integer::from(inv3);
        let got = rational_reconstruct(&r, &m).unwrap();
        assert_eq!(got, Rational::from((1, 3)));
    }

    #[test]
    fn rational_reconstruct_zero() {
        let m = Integer::from(97u64);
        assert_eq!(
            rational_reconstruct(&Integer::from(0), &m).unwrap(),
            Rational::from(0)
        );
    }

    #[test]
    fn rational_reconstruct_negative() {
        let m = Integer::from(1000003u64);
        // -5/7 mod m
        let inv7 = invmod(7, 1000003).unwrap();
        let r = Integer::from(mulmod(1000003 - 5, inv7, 1000003));
        assert_eq!(
            rational_reconstruct(&r, &m).unwrap(),
            Rational::from((-5, 7))
        );
    }

    #[test]
    fn rational_reconstruct_failure_is_none() {
        // residues near sqrt(m) with no small fraction representation
        let m = Integer::from(1000003u64);
        let bad = Integer::from(1001u64 * 997); // ~ m, q would exceed bound
        let r = Integer::from(&bad % &m);
        // exhaustive check: either None, or a valid small fraction
        if let Some(q) = rational_reconstruct(&r, &m) {
            let (num, den) = q.into_numer_denom();
            let lhs = Integer::from(&den * &r);
            assert_eq!(Integer::from(&lhs - &num) % &m, 0);
        }
    }

    #[test]
    fn precision_real_digits_propagate() {
        let a = PrecisionReal::from_u64(2, 50);
        let b = PrecisionReal::from_u64(3, 80);
        let c = &a + &b;
        assert_eq!(c.digits(), 80);
        assert_eq!(c.as_float().to_f64(), 5.0);
    }

    #[test]
    fn precision_real_sum_chain_error_bound() {
        // sum 1/k for k=1..1000 at 40 digits, vs 60-digit reference
        let sum = |d: u32| {
            let mut acc = PrecisionReal::zero(d);
            for k in 1..=1000u64 {
                let term = PrecisionReal::from_u64(1, d)
                    .as_float()
                    .clone()
                    / Float::with_val(digits_to_prec(d), k);
                acc = &acc + &PrecisionReal::from_float(term, d);
            }
            acc
        };
        let lo = sum(40);
        let hi = sum(60);
        let diff = (lo.as_float().clone() - hi.as_float()).abs() / hi.as_float();
        // relative error <= L * 10^(1-d) with L = 1000, d = 40
        let bound = Float::with_val(64, 1000) * Float::with_val(64, 10f64).pow(1 - 40i32);
        assert!(diff < bound);
    }

    #[test]
    fn pi_value() {
        let pi = PrecisionReal::pi(50);
        let s = pi.to_decimal();
        assert!(s.starts_with("3.141592653589793238462643383279502884197"));
    }

    #[test]
    fn series_reduce_lift_roundtrip() {
        let primes = generate_prime_batch(3).unwrap();
        let series = IntegerSeries::new(vec![
            Integer::from(0),
            Integer::from(-7),
            Integer::from_str_radix("123456789123456789123456789", 10).unwrap(),
        ]);
        let parts: Vec<ResidueSeries> = primes.iter().map(|&p| series.reduce(p)).collect();
        assert_eq!(IntegerSeries::crt_lift(&parts).unwrap(), series);
    }

    #[test]
    fn series_lift_length_mismatch() {
        let primes = generate_prime_batch(2).unwrap();
        let a = ResidueSeries {
            modulus: primes[0],
            coeffs: vec![1, 2],
        };
        let b = ResidueSeries {
            modulus: primes[1],
            coeffs: vec![1],
        };
        assert!(matches!(
            IntegerSeries::crt_lift(&[a, b]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn crt_roundtrip_random_series(
            vals in proptest::collection::vec(-3_000_000_000_000i64..=3_000_000_000_000, 1..6),
            k in 3usize..6,
        ) {
            let primes = generate_prime_batch(k).unwrap();
            let series = IntegerSeries::from_i64s(&vals);
            let parts: Vec<ResidueSeries> = primes.iter().map(|&p| series.reduce(p)).collect();
            prop_assert_eq!(IntegerSeries::crt_lift(&parts).unwrap(), series);
        }

        #[test]
        fn rational_reconstruction_roundtrip(num in -10_000i64..=10_000, den in 1i64..=10_000) {
            let primes = generate_prime_batch(4).unwrap();
            let m = primes
                .iter()
                .fold(Integer::from(1), |acc, p| acc * p.value());
            let frac = Rational::from((num, den));
            // residue of num/den mod m; den < every prime, so it is invertible
            let inv = Integer::from(frac.denom()).invert(&m).unwrap();
            let mut residue = Integer::from(frac.numer()) * inv;
            residue %= &m;
            if residue < 0 {
                residue += &m;
            }
            prop_assert_eq!(rational_reconstruct(&residue, &m), Some(frac));
        }
    }
}
