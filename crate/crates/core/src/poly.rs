//! Dense univariate polynomials over the integers (ascending coefficients),
//! with the exact operations the pipeline leans on: content/primitive split,
//! exact division, subresultant gcd, and Yun squarefree factorization.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::Error;
use crate::Result;

pub type IntPoly = Vec<Integer>;

/// Degree, or None for the zero polynomial. Trailing zeros are tolerated.
pub fn deg(p: &[Integer]) -> Option<usize> {
    p.iter().rposition(|c| *c != 0)
}

pub fn is_zero(p: &[Integer]) -> bool {
    deg(p).is_none()
}

pub fn trim(p: &mut IntPoly) {
    let n = deg(p).map_or(0, |d| d + 1);
    p.truncate(n);
}

pub fn from_i64s(coeffs: &[i64]) -> IntPoly {
    coeffs.iter().map(|&c| Integer::from(c)).collect()
}

pub fn leading(p: &[Integer]) -> Integer {
    deg(p).map_or_else(|| Integer::from(0), |d| p[d].clone())
}

pub fn add(a: &[Integer], b: &[Integer]) -> IntPoly {
    let n = a.len().max(b.len());
    let mut out = vec![Integer::from(0); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(&mut out);
    out
}

pub fn sub(a: &[Integer], b: &[Integer]) -> IntPoly {
    let n = a.len().max(b.len());
    let mut out = vec![Integer::from(0); n];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    trim(&mut out);
    out
}

pub fn neg(a: &[Integer]) -> IntPoly {
    a.iter().map(|c| Integer::from(-c)).collect()
}

pub fn mul(a: &[Integer], b: &[Integer]) -> IntPoly {
    if is_zero(a) || is_zero(b) {
        return Vec::new();
    }
    let mut out = vec![Integer::from(0); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if *ca == 0 {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += Integer::from(ca * cb);
        }
    }
    trim(&mut out);
    out
}

pub fn scale(a: &[Integer], c: &Integer) -> IntPoly {
    if *c == 0 {
        return Vec::new();
    }
    a.iter().map(|x| Integer::from(x * c)).collect()
}

/// Multiply by x^k.
pub fn shift_up(a: &[Integer], k: usize) -> IntPoly {
    if is_zero(a) {
        return Vec::new();
    }
    let mut out = vec![Integer::from(0); k];
    out.extend(a.iter().cloned());
    out
}

pub fn pow(base: &[Integer], mut e: u32) -> IntPoly {
    let mut acc = vec![Integer::from(1)];
    let mut sq = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            acc = mul(&acc, &sq);
        }
        e >>= 1;
        if e > 0 {
            sq = mul(&sq, &sq);
        }
    }
    acc
}

pub fn eval(p: &[Integer], x: &Integer) -> Integer {
    let mut acc = Integer::from(0);
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

pub fn eval_rational(p: &[Integer], x: &Rational) -> Rational {
    let mut acc = Rational::from(0);
    for c in p.iter().rev() {
        acc *= x;
        acc += c;
    }
    acc
}

pub fn derivative(p: &[Integer]) -> IntPoly {
    if p.len() <= 1 {
        return Vec::new();
    }
    let mut out: IntPoly = p[1..]
        .iter()
        .enumerate()
        .map(|(i, c)| Integer::from(c * (i + 1) as u64))
        .collect();
    trim(&mut out);
    out
}

/// Positive gcd of the coefficients; 0 for the zero polynomial.
pub fn content(p: &[Integer]) -> Integer {
    let mut g = Integer::from(0);
    for c in p {
        g.gcd_mut(c);
        if g == 1 {
            break;
        }
    }
    g
}

/// p divided by its content, sign-normalized so the leading coefficient is
/// positive. Zero maps to zero.
pub fn primitive(p: &[Integer]) -> IntPoly {
    let Some(d) = deg(p) else { return Vec::new() };
    let mut g = content(p);
    if p[d] < 0 {
        g = -g;
    }
    p[..=d].iter().map(|c| Integer::from(c / &g)).collect()
}

/// Exact division in ℤ[x]: error if b does not divide a there.
pub fn divide_exact(a: &[Integer], b: &[Integer]) -> Result<IntPoly> {
    let Some(db) = deg(b) else {
        return Err(Error::InvalidArgument("division by zero polynomial".into()));
    };
    let Some(da) = deg(a) else { return Ok(Vec::new()) };
    if da < db {
        return Err(Error::InvalidArgument("inexact polynomial division".into()));
    }
    let mut rem: Vec<Rational> = a[..=da].iter().map(Rational::from).collect();
    let lead = Rational::from(&b[db]);
    let mut q = vec![Rational::from(0); da - db + 1];
    for i in (0..q.len()).rev() {
        let c = Rational::from(&rem[db + i] / &lead);
        if c != 0 {
            for (j, bc) in b[..=db].iter().enumerate() {
                let t = Rational::from(bc * &c);
                rem[i + j] -= t;
            }
        }
        q[i] = c;
    }
    if rem.iter().any(|c| *c != 0) {
        return Err(Error::InvalidArgument("inexact polynomial division".into()));
    }
    let mut out = Vec::with_capacity(q.len());
    for c in q {
        if !c.is_integer() {
            return Err(Error::InvalidArgument("inexact polynomial division".into()));
        }
        out.push(c.into_numer_denom().0);
    }
    trim(&mut out);
    Ok(out)
}

/// Pseudo-remainder: lc(b)^(deg a − deg b + 1) · a ≡ rem (mod b).
fn pseudo_rem(a: &[Integer], b: &[Integer]) -> IntPoly {
    let da = deg(a).expect("nonzero dividend");
    let db = deg(b).expect("nonzero divisor");
    assert!(da >= db);
    let lb = &b[db];
    let mut r = a[..=da].to_vec();
    let mut steps = da - db + 1;
    while let Some(dr) = deg(&r) {
        if dr < db {
            break;
        }
        let lr = r[dr].clone();
        for c in r.iter_mut() {
            *c *= lb;
        }
        for (j, bc) in b[..=db].iter().enumerate() {
            let t = Integer::from(bc * &lr);
            r[dr - db + j] -= t;
        }
        trim(&mut r);
        steps -= 1;
    }
    if steps > 0 {
        let f = Integer::from((&*lb).pow(steps as u32));
        for c in r.iter_mut() {
            *c *= &f;
        }
    }
    r
}

/// Primitive gcd via the subresultant polynomial remainder sequence.
/// Result has positive leading coefficient; gcd(0, b) = primitive(b).
pub fn gcd(a: &[Integer], b: &[Integer]) -> IntPoly {
    if is_zero(a) {
        return primitive(b);
    }
    if is_zero(b) {
        return primitive(a);
    }
    let mut f = primitive(a);
    let mut g = primitive(b);
    if deg(&f) < deg(&g) {
        std::mem::swap(&mut f, &mut g);
    }
    let mut gc = Integer::from(1);
    let mut h = Integer::from(1);
    loop {
        let d = deg(&f).unwrap() - deg(&g).unwrap();
        let r = pseudo_rem(&f, &g);
        if is_zero(&r) {
            return primitive(&g);
        }
        if deg(&r) == Some(0) {
            return vec![Integer::from(1)];
        }
        f = g;
        let denom = Integer::from(&gc * Integer::from((&h).pow(d as u32)));
        g = r.iter().map(|c| Integer::from(c / &denom)).collect();
        trim(&mut g);
        gc = leading(&f);
        // h = gc^d / h^(d-1)
        if d == 0 {
            // h unchanged
        } else {
            let num = Integer::from((&gc).pow(d as u32));
            if d == 1 {
                h = num;
            } else {
                h = num / Integer::from((&h).pow((d - 1) as u32));
            }
        }
    }
}

/// How many times f divides p (f non-constant).
pub fn multiplicity(p: &[Integer], f: &[Integer]) -> u32 {
    assert!(deg(f).unwrap_or(0) >= 1, "factor must be non-constant");
    let mut count = 0;
    let mut cur = p.to_vec();
    while let Ok(q) = divide_exact(&cur, f) {
        count += 1;
        cur = q;
        if is_zero(&cur) {
            break;
        }
    }
    count
}

/// Yun squarefree factorization of a primitive polynomial: pairwise-coprime
/// squarefree primitive factors with multiplicities, ∏ fᵢ^mᵢ = primitive(p).
pub fn squarefree_factors(p: &[Integer]) -> Vec<(IntPoly, u32)> {
    let prim = primitive(p);
    if deg(&prim).unwrap_or(0) == 0 {
        return Vec::new();
    }
    let dp = derivative(&prim);
    let g0 = gcd(&prim, &dp);
    let mut out = Vec::new();
    let mut w = divide_exact(&prim, &g0).unwrap();
    let mut y = divide_exact(&dp, &g0).unwrap();
    let mut i = 1u32;
    loop {
        let z = sub(&y, &derivative(&w));
        if is_zero(&z) {
            if deg(&w).unwrap_or(0) >= 1 {
                out.push((primitive(&w), i));
            }
            break;
        }
        let gi = gcd(&w, &z);
        if deg(&gi).unwrap_or(0) >= 1 {
            out.push((gi.clone(), i));
        }
        w = divide_exact(&w, &gi).unwrap();
        y = divide_exact(&z, &gi).unwrap();
        i += 1;
        if deg(&w).unwrap_or(0) == 0 {
            break;
        }
    }
    out
}

/// Clear denominators: returns (integer polynomial, common denominator).
pub fn clear_denominators(p: &[Rational]) -> (IntPoly, Integer) {
    let mut l = Integer::from(1);
    for c in p {
        l.lcm_mut(c.denom());
    }
    let out = p
        .iter()
        .map(|c| {
            let scaled = Rational::from(c * &l);
            debug_assert!(scaled.is_integer());
            scaled.into_numer_denom().0
        })
        .collect();
    (out, l)
}

pub fn to_string_pretty(p: &[Integer]) -> String {
    let Some(d) = deg(p) else { return "0".into() };
    let mut parts = Vec::new();
    for (i, c) in p[..=d].iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let term = match i {
            0 => format!("{c}"),
            1 => format!("{c}*x"),
            _ => format!("{c}*x^{i}"),
        };
        parts.push(term);
    }
    parts.join(" + ").replace("+ -", "- ")
}
