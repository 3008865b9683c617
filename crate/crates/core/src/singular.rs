//! Singularity analysis of a linear ODE: locate singular points, classify
//! them, compute indicial exponents by the method of Frobenius, check the
//! global Fuchsian sum relation, decide apparent vs genuine, and construct
//! truncated local solution bases (with logarithms where forced).
//!
//! Arithmetic strategy: points whose minimal polynomial has degree ≤ 2 are
//! handled in exact rational or quadratic-extension arithmetic; higher
//! degree points use validated numerics at a fixed working precision with a
//! banded zero test (clear zero, clear nonzero, or an explicit inconclusive
//! error in between — a tolerance never silently decides a verdict).

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::Error;
use crate::exactarith::digits_to_prec;
use crate::odefit::LinearODE;
use crate::par::par_map;
use crate::poly::{self, IntPoly};
use crate::Result;

/// Working precision (decimal digits) for numeric point analysis.
const WORK_DIGITS: u32 = 80;
/// Relative magnitude below which a shifted coefficient counts as zero when
/// reading off t-adic orders at a certified numeric root.
const ORDER_EPS: f64 = 1e-45;
/// Banded zero test for resonance consistency: relative residuals below
/// ZERO_BAND are zero, above NONZERO_BAND are nonzero, in between the check
/// aborts as inconclusive.
const ZERO_BAND: f64 = 1e-30;
const NONZERO_BAND: f64 = 1e-27;
/// Tolerance for recognizing a numeric root as a rational.
const RECOGNIZE_EPS: f64 = 1e-20;

// ---------------------------------------------------------------------------
// complex floats

/// Complex number on a pair of floats (MPFR carries no complex type here).
#[derive(Clone, Debug)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn new(re: Float, im: Float) -> Self {
        Complex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Complex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        Complex {
            re: Float::with_val(prec, re),
            im: Float::with_val(prec, im),
        }
    }

    pub fn from_integer(v: &Integer, prec: u32) -> Self {
        Complex {
            re: Float::with_val(prec, v),
            im: Float::new(prec),
        }
    }

    pub fn from_rational(v: &Rational, prec: u32) -> Self {
        Complex {
            re: Float::with_val(prec, v),
            im: Float::new(prec),
        }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn add(&self, o: &Complex) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), &self.re + &o.re),
            im: Float::with_val(self.prec(), &self.im + &o.im),
        }
    }

    pub fn sub(&self, o: &Complex) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), &self.re - &o.re),
            im: Float::with_val(self.prec(), &self.im - &o.im),
        }
    }

    pub fn mul(&self, o: &Complex) -> Complex {
        let prec = self.prec();
        let re = Float::with_val(prec, &self.re * &o.re) - Float::with_val(prec, &self.im * &o.im);
        let im = Float::with_val(prec, &self.re * &o.im) + Float::with_val(prec, &self.im * &o.re);
        Complex { re, im }
    }

    pub fn div(&self, o: &Complex) -> Complex {
        let prec = self.prec();
        let d = Float::with_val(prec, o.re.square_ref()) + Float::with_val(prec, o.im.square_ref());
        let re = Float::with_val(prec, &self.re * &o.re) + Float::with_val(prec, &self.im * &o.im);
        let im = Float::with_val(prec, &self.im * &o.re) - Float::with_val(prec, &self.re * &o.im);
        Complex {
            re: re / &d,
            im: im / &d,
        }
    }

    pub fn neg(&self) -> Complex {
        Complex {
            re: Float::with_val(self.prec(), -&self.re),
            im: Float::with_val(self.prec(), -&self.im),
        }
    }

    pub fn abs(&self) -> Float {
        let prec = self.prec();
        (Float::with_val(prec, self.re.square_ref()) + Float::with_val(prec, self.im.square_ref()))
            .sqrt()
    }

    pub fn mag(&self) -> f64 {
        self.abs().to_f64()
    }
}

/// All roots of a complex-coefficient polynomial by the Aberth–Ehrlich
/// simultaneous iteration. Coefficients ascending; leading must be nonzero.
pub fn aberth_roots(coeffs: &[Complex], prec: u32) -> Vec<Complex> {
    let deg = coeffs.len() - 1;
    assert!(deg >= 1 && coeffs[deg].mag() != 0.0);
    if deg == 1 {
        return vec![coeffs[0].div(&coeffs[1]).neg()];
    }
    let deriv: Vec<Complex> = (1..=deg)
        .map(|i| coeffs[i].mul(&Complex::from_f64(i as f64, 0.0, prec)))
        .collect();
    let eval = |c: &[Complex], z: &Complex| -> Complex {
        let mut acc = Complex::zero(prec);
        for ci in c.iter().rev() {
            acc = acc.mul(z).add(ci);
        }
        acc
    };
    // initial points on a circle scaled by a Cauchy-style root bound
    let lead = coeffs[deg].mag();
    let mut radius = 0f64;
    for (i, c) in coeffs.iter().enumerate().take(deg) {
        let m = (c.mag() / lead).powf(1.0 / (deg - i) as f64);
        radius = radius.max(m);
    }
    radius = radius.max(1e-3) * 1.1;
    let mut z: Vec<Complex> = (0..deg)
        .map(|j| {
            let ang = 2.0 * std::f64::consts::PI * (j as f64 + 0.3) / deg as f64 + 0.41;
            Complex::from_f64(radius * ang.cos(), radius * ang.sin(), prec)
        })
        .collect();
    let stop = Float::with_val(prec, 2f64).pow(-(prec as i32) + 16);
    for _ in 0..200 {
        let mut moved = Float::new(prec);
        for j in 0..deg {
            let f = eval(coeffs, &z[j]);
            let fp = eval(&deriv, &z[j]);
            if f.mag() == 0.0 {
                continue;
            }
            let newton = f.div(&fp);
            let mut rep = Complex::zero(prec);
            for i in 0..deg {
                if i != j {
                    rep = rep.add(&Complex::from_f64(1.0, 0.0, prec).div(&z[j].sub(&z[i])));
                }
            }
            let denom = Complex::from_f64(1.0, 0.0, prec).sub(&newton.mul(&rep));
            let step = newton.div(&denom);
            z[j] = z[j].sub(&step);
            let rel = step.abs() / (z[j].abs() + Float::with_val(prec, 1e-30));
            if rel > moved {
                moved = rel;
            }
        }
        if moved < stop {
            break;
        }
    }
    z
}

fn aberth_roots_int(p: &[Integer], prec: u32) -> Vec<Complex> {
    let d = poly::deg(p).expect("nonzero polynomial");
    let coeffs: Vec<Complex> = p[..=d]
        .iter()
        .map(|c| Complex::from_integer(c, prec))
        .collect();
    aberth_roots(&coeffs, prec)
}

/// Newton-polish a root of an integer polynomial at the target precision.
fn refine_root_int(p: &[Integer], z0: &Complex, prec: u32) -> Complex {
    let d = poly::deg(p).unwrap();
    let coeffs: Vec<Complex> = p[..=d]
        .iter()
        .map(|c| Complex::from_integer(c, prec))
        .collect();
    let dp = poly::derivative(p);
    let dcoeffs: Vec<Complex> = dp.iter().map(|c| Complex::from_integer(c, prec)).collect();
    let eval = |c: &[Complex], z: &Complex| -> Complex {
        let mut acc = Complex::zero(prec);
        for ci in c.iter().rev() {
            acc = acc.mul(z).add(ci);
        }
        acc
    };
    let mut z = Complex {
        re: Float::with_val(prec, &z0.re),
        im: Float::with_val(prec, &z0.im),
    };
    for _ in 0..8 {
        let f = eval(&coeffs, &z);
        let fp = eval(&dcoeffs, &z);
        if fp.mag() == 0.0 {
            break;
        }
        z = z.sub(&f.div(&fp));
    }
    z
}

/// Continued-fraction recognition of a float as p/q with q ≤ max_den and
/// |x − p/q| ≤ tol.
pub fn recognize_rational(x: &Float, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let mut r0 = x.to_rational()?;
    // convergents via the Euclidean expansion of the exact binary rational
    let (mut p0, mut q0) = (Integer::from(1), Integer::from(0));
    let (mut p1, mut q1) = (Integer::from(0), Integer::from(1));
    let bound = Integer::from(max_den);
    for _ in 0..200 {
        let a = Integer::from(r0.numer() / r0.denom());
        let next_p = Integer::from(&a * &p0) + &p1;
        let next_q = Integer::from(&a * &q0) + &q1;
        if Integer::from(next_q.abs_ref()) > bound {
            break;
        }
        (p1, q1) = (p0, q0);
        (p0, q0) = (next_p, next_q);
        let frac = Rational::from(&r0 - Rational::from(a));
        if frac == 0 {
            break;
        }
        r0 = frac.recip();
    }
    if q0 == 0 {
        return None;
    }
    let cand = Rational::from((p0, q0));
    let prec = x.prec();
    let diff = Float::with_val(prec, x - Float::with_val(prec, &cand)).abs();
    if diff <= tol {
        Some(cand)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// exact quadratic extension ℚ(√d)

/// a + b√d with rational a, b and a fixed square-free integer d.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadElem {
    pub a: Rational,
    pub b: Rational,
    pub d: i64,
}

impl QuadElem {
    pub fn rational(a: Rational, d: i64) -> Self {
        QuadElem {
            a,
            b: Rational::from(0),
            d,
        }
    }

    fn add(&self, o: &QuadElem) -> QuadElem {
        QuadElem {
            a: Rational::from(&self.a + &o.a),
            b: Rational::from(&self.b + &o.b),
            d: self.d,
        }
    }

    fn sub(&self, o: &QuadElem) -> QuadElem {
        QuadElem {
            a: Rational::from(&self.a - &o.a),
            b: Rational::from(&self.b - &o.b),
            d: self.d,
        }
    }

    fn mul(&self, o: &QuadElem) -> QuadElem {
        let a = Rational::from(&self.a * &o.a) + Rational::from(&self.b * &o.b) * self.d;
        let b = Rational::from(&self.a * &o.b) + Rational::from(&self.b * &o.a);
        QuadElem { a, b, d: self.d }
    }

    fn div(&self, o: &QuadElem) -> QuadElem {
        // 1/(a+b√d) = (a−b√d)/(a²−b²d)
        let n = Rational::from(o.a.square_ref()) - Rational::from(o.b.square_ref()) * o.d;
        let conj = QuadElem {
            a: o.a.clone(),
            b: Rational::from(-&o.b),
            d: o.d,
        };
        let prod = self.mul(&conj);
        QuadElem {
            a: prod.a / &n,
            b: prod.b / &n,
            d: self.d,
        }
    }

    fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
}

// ---------------------------------------------------------------------------
// scalar abstraction for the Frobenius recursions

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ZeroClass {
    Zero,
    NonZero,
    Unsure,
}

/// The arithmetic a local Frobenius computation needs, implemented exactly
/// (Rational, QuadElem) or numerically with banded zero tests (Complex).
trait LocalScalar: Clone + std::fmt::Debug {
    fn s_zero(&self) -> Self;
    fn s_one(&self) -> Self;
    fn s_from_int(&self, v: &Integer) -> Self;
    fn s_add(&self, o: &Self) -> Self;
    fn s_sub(&self, o: &Self) -> Self;
    fn s_mul(&self, o: &Self) -> Self;
    fn s_div(&self, o: &Self) -> Self;
    fn s_neg(&self) -> Self;
    fn mag(&self) -> f64;
    /// Is this value zero, relative to the magnitude of the terms that
    /// produced it? Exact scalars ignore the scale.
    fn classify(&self, scale: f64) -> ZeroClass;
}

impl LocalScalar for Rational {
    fn s_zero(&self) -> Self {
        Rational::from(0)
    }
    fn s_one(&self) -> Self {
        Rational::from(1)
    }
    fn s_from_int(&self, v: &Integer) -> Self {
        Rational::from(v)
    }
    fn s_add(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn s_sub(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn s_mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn s_div(&self, o: &Self) -> Self {
        Rational::from(self / o)
    }
    fn s_neg(&self) -> Self {
        Rational::from(-self)
    }
    fn mag(&self) -> f64 {
        self.to_f64().abs()
    }
    fn classify(&self, _scale: f64) -> ZeroClass {
        if *self == 0 {
            ZeroClass::Zero
        } else {
            ZeroClass::NonZero
        }
    }
}

impl LocalScalar for QuadElem {
    fn s_zero(&self) -> Self {
        QuadElem::rational(Rational::from(0), self.d)
    }
    fn s_one(&self) -> Self {
        QuadElem::rational(Rational::from(1), self.d)
    }
    fn s_from_int(&self, v: &Integer) -> Self {
        QuadElem::rational(Rational::from(v), self.d)
    }
    fn s_add(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn s_sub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn s_mul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn s_div(&self, o: &Self) -> Self {
        self.div(o)
    }
    fn s_neg(&self) -> Self {
        QuadElem {
            a: Rational::from(-&self.a),
            b: Rational::from(-&self.b),
            d: self.d,
        }
    }
    fn mag(&self) -> f64 {
        let root = (self.d as f64).abs().sqrt();
        if self.d < 0 {
            let re = self.a.to_f64();
            let im = self.b.to_f64() * root;
            (re * re + im * im).sqrt()
        } else {
            (self.a.to_f64() + self.b.to_f64() * root).abs()
        }
    }
    fn classify(&self, _scale: f64) -> ZeroClass {
        if self.is_zero() {
            ZeroClass::Zero
        } else {
            ZeroClass::NonZero
        }
    }
}

impl LocalScalar for Complex {
    fn s_zero(&self) -> Self {
        Complex::zero(self.prec())
    }
    fn s_one(&self) -> Self {
        Complex::from_f64(1.0, 0.0, self.prec())
    }
    fn s_from_int(&self, v: &Integer) -> Self {
        Complex::from_integer(v, self.prec())
    }
    fn s_add(&self, o: &Self) -> Self {
        self.add(o)
    }
    fn s_sub(&self, o: &Self) -> Self {
        self.sub(o)
    }
    fn s_mul(&self, o: &Self) -> Self {
        self.mul(o)
    }
    fn s_div(&self, o: &Self) -> Self {
        self.div(o)
    }
    fn s_neg(&self) -> Self {
        self.neg()
    }
    fn mag(&self) -> f64 {
        self.mag()
    }
    fn classify(&self, scale: f64) -> ZeroClass {
        let s = if scale > 0.0 { scale } else { 1.0 };
        let rel = self.mag() / s;
        if rel < ZERO_BAND {
            ZeroClass::Zero
        } else if rel > NONZERO_BAND {
            ZeroClass::NonZero
        } else {
            ZeroClass::Unsure
        }
    }
}

// ---------------------------------------------------------------------------
// local ODE data in the shifted variable t = x − x₀

/// The ODE rewritten around one point: shifted coefficient tables
/// A_k(t) = P_k(x₀+t), the common valuation shift ν = min_k(ord A_k − k),
/// and the ψ-polynomials ψ_ℓ(θ) = Σ_k A_k[k+ν+ℓ]·θ(θ−1)⋯(θ−k+1).
/// Applying the ODE to t^θ gives Σ_ℓ ψ_ℓ(θ)·t^{θ+ν+ℓ}; ψ_0 is the
/// indicial polynomial.
struct LocalData<S: LocalScalar> {
    psi: Vec<Vec<S>>, // psi[ℓ] = power-basis coefficients of ψ_ℓ(θ)
    scale: f64,
}

fn falling_factorial_poly(k: usize) -> IntPoly {
    let mut f = vec![Integer::from(1)];
    for u in 0..k as i64 {
        f = poly::mul(&f, &[Integer::from(-u), Integer::from(1)]);
    }
    f
}

impl<S: LocalScalar> LocalData<S> {
    /// Build from shifted tables; `lmax` bounds the stored ψ index.
    fn new(order: usize, shifted: Vec<Vec<S>>, proto: &S, lmax: usize) -> Result<Self> {
        let mut scale = 0f64;
        for row in &shifted {
            for v in row {
                scale = scale.max(v.mag());
            }
        }
        // order detection uses a plain magnitude cut at the coefficient
        // scale, not the resonance bands
        let thresh = ORDER_EPS * scale;
        let mut orders = Vec::with_capacity(shifted.len());
        for row in &shifted {
            orders.push(row.iter().position(|v| v.mag() > thresh));
        }
        let nu = orders
            .iter()
            .enumerate()
            .filter_map(|(k, o)| o.map(|v| v as i64 - k as i64))
            .min()
            .ok_or_else(|| Error::InvalidArgument("zero operator".into()))?;
        let mut psi = Vec::with_capacity(lmax + 1);
        for l in 0..=lmax {
            let mut acc = vec![proto.s_zero(); order + 1];
            for (k, row) in shifted.iter().enumerate() {
                let idx = k as i64 + nu + l as i64;
                if idx < 0 || idx as usize >= row.len() {
                    continue;
                }
                let b = &row[idx as usize];
                if b.mag() == 0.0 {
                    continue;
                }
                let ff = falling_factorial_poly(k);
                for (i, c) in ff.iter().enumerate() {
                    let term = b.s_mul(&proto.s_from_int(c));
                    acc[i] = acc[i].s_add(&term);
                }
            }
            psi.push(acc);
        }
        Ok(LocalData { psi, scale })
    }

    /// r-th derivative of ψ_ℓ evaluated at θ.
    fn psi_deriv(&self, l: usize, r: usize, theta: &S) -> S {
        let p = &self.psi[l];
        let mut acc = theta.s_zero();
        for i in (r..p.len()).rev() {
            // falling factorial i·(i−1)⋯(i−r+1)
            let mut f = Integer::from(1);
            for u in 0..r {
                f *= (i - u) as u64;
            }
            let c = p[i].s_mul(&theta.s_from_int(&f));
            acc = acc.s_mul(theta).s_add(&c);
        }
        acc
    }

    fn indicial(&self) -> &[S] {
        &self.psi[0]
    }

    /// Degree of the indicial polynomial under the scale-aware zero cut.
    fn indicial_degree(&self) -> Option<usize> {
        let thresh = ORDER_EPS * self.scale;
        self.psi[0].iter().rposition(|c| c.mag() > thresh)
    }
}

/// Shift an integer polynomial to x₀ + t over any scalar type.
fn shift_poly<S: LocalScalar>(p: &[Integer], x0: &S) -> Vec<S> {
    let mut c: Vec<S> = p.iter().map(|v| x0.s_from_int(v)).collect();
    if c.is_empty() {
        return c;
    }
    let n = c.len();
    for j in 0..n {
        for i in (j..n - 1).rev() {
            let t = c[i + 1].s_mul(x0);
            c[i] = c[i].s_add(&t);
        }
    }
    c
}

fn local_data_at<S: LocalScalar>(ode: &LinearODE, x0: &S, lmax: usize) -> Result<LocalData<S>> {
    let shifted: Vec<Vec<S>> = ode.polys().iter().map(|p| shift_poly(p, x0)).collect();
    LocalData::new(ode.order(), shifted, x0, lmax)
}

// ---------------------------------------------------------------------------
// singular point location and classification

/// One singular point: its square-free integer minimal polynomial with a
/// root tag (or infinity), a certified numeric approximation, and the
/// regular/irregular classification.
#[derive(Clone, Debug)]
pub struct SingularPoint {
    /// None marks the point at infinity.
    pub min_poly: Option<IntPoly>,
    /// Index of the tagged root among the minimal polynomial's roots,
    /// sorted by (re, im).
    pub root_index: usize,
    /// Certified approximation of the tagged root (finite points).
    pub approx: Option<(f64, f64)>,
    pub regular: bool,
}

impl SingularPoint {
    pub fn is_infinity(&self) -> bool {
        self.min_poly.is_none()
    }

    /// Exact rational location, when the minimal polynomial is linear.
    pub fn rational_location(&self) -> Option<Rational> {
        let mp = self.min_poly.as_ref()?;
        if poly::deg(mp) == Some(1) {
            Some(Rational::from((
                Integer::from(-&mp[0]),
                mp[1].clone(),
            )))
        } else {
            None
        }
    }

    pub fn describe(&self) -> String {
        match &self.min_poly {
            None => "infinity".into(),
            Some(mp) => {
                let tag = format!(
                    " root {}/{}",
                    self.root_index + 1,
                    poly::deg(mp).unwrap_or(0)
                );
                format!("{}{}", poly::to_string_pretty(mp), tag)
            }
        }
    }
}

/// Split a square-free primitive polynomial into integer factors: all
/// linear and quadratic factors are recognized from certified numeric roots
/// and verified by exact division; anything left stays one block.
fn split_squarefree(f: &IntPoly) -> Vec<IntPoly> {
    let mut rest = poly::primitive(f);
    let mut out = Vec::new();
    let prec = digits_to_prec(WORK_DIGITS);
    if poly::deg(&rest).unwrap_or(0) == 0 {
        return out;
    }
    let roots = aberth_roots_int(&rest, prec);
    let tol = 1e-40;
    let mut complex_pool: Vec<Complex> = Vec::new();
    for z in roots {
        if z.im.clone().abs().to_f64() < tol * (1.0 + z.mag()) {
            if let Some(r) = recognize_rational(&z.re, 1_000_000_000, RECOGNIZE_EPS) {
                let cand = poly::primitive(&[
                    Integer::from(-r.numer()),
                    r.denom().clone(),
                ]);
                if let Ok(q) = poly::divide_exact(&rest, &cand) {
                    out.push(cand);
                    rest = q;
                    continue;
                }
            }
            complex_pool.push(z);
        } else {
            complex_pool.push(z);
        }
    }
    // conjugate pairs → candidate integer quadratics
    let mut used = vec![false; complex_pool.len()];
    for i in 0..complex_pool.len() {
        if used[i] || complex_pool[i].im.clone().abs().to_f64() < tol {
            continue;
        }
        let zi = &complex_pool[i];
        let mut best: Option<usize> = None;
        let mut best_d = f64::MAX;
        for (j, zj) in complex_pool.iter().enumerate() {
            if j == i || used[j] {
                continue;
            }
            let dre = (zi.re.to_f64() - zj.re.to_f64()).abs();
            let dim = (zi.im.to_f64() + zj.im.to_f64()).abs();
            if dre + dim < best_d {
                best_d = dre + dim;
                best = Some(j);
            }
        }
        let Some(j) = best else { continue };
        let prec_s = zi.prec();
        let s = Float::with_val(prec_s, &zi.re * 2u32); // sum of the pair
        let p = Float::with_val(prec_s, zi.re.square_ref())
            + Float::with_val(prec_s, zi.im.square_ref());
        let (Some(sr), Some(pr)) = (
            recognize_rational(&s, 1_000_000_000, RECOGNIZE_EPS),
            recognize_rational(&p, 1_000_000_000, RECOGNIZE_EPS),
        ) else {
            continue;
        };
        // monic x² − s·x + p, cleared to integer coefficients
        let rationals = vec![pr, Rational::from(-sr), Rational::from(1)];
        let (cand, _) = poly::clear_denominators(&rationals);
        let cand = poly::primitive(&cand);
        if let Ok(q) = poly::divide_exact(&rest, &cand) {
            out.push(cand);
            rest = q;
            used[i] = true;
            used[j] = true;
        }
    }
    if poly::deg(&rest).unwrap_or(0) >= 1 {
        out.push(poly::primitive(&rest));
    }
    out.sort_by_key(|p| (poly::deg(p).unwrap_or(0), p[0].clone()));
    out
}

/// Pole-order conditions for a regular singular point: for a factor f of
/// multiplicity μ in P_m, every P_k must contain f with multiplicity
/// ≥ μ − (m − k).
fn factor_is_regular(ode: &LinearODE, factor: &IntPoly, mu: u32) -> bool {
    let m = ode.order();
    for (k, pk) in ode.polys().iter().enumerate() {
        if poly::is_zero(pk) {
            continue;
        }
        let need = mu as i64 - (m - k) as i64;
        if need <= 0 {
            continue;
        }
        if (poly::multiplicity(pk, factor) as i64) < need {
            return false;
        }
    }
    true
}

/// Transform the operator through x = 1/z: (d/dx)^k becomes (−z²·d/dz)^k
/// and each P_k(1/z) is cleared by z^maxdeg, giving an integer operator in
/// z whose point z = 0 is the original point at infinity.
pub fn transform_to_infinity(ode: &LinearODE) -> LinearODE {
    let m = ode.order();
    let maxdeg = ode
        .polys()
        .iter()
        .filter_map(|p| poly::deg(p))
        .max()
        .unwrap();
    // B[k][j] with (−z²D)^k = Σ_j B[k][j](z)·D^j
    let mut b: Vec<Vec<IntPoly>> = vec![vec![Vec::new(); m + 1]; m + 1];
    b[0][0] = vec![Integer::from(1)];
    for k in 0..m {
        for j in 0..=k {
            let term = poly::add(
                &poly::derivative(&b[k][j]),
                &(if j > 0 { b[k][j - 1].clone() } else { Vec::new() }),
            );
            let shifted = poly::scale(&poly::shift_up(&term, 2), &Integer::from(-1));
            b[k + 1][j] = poly::add(&b[k + 1][j], &shifted);
        }
        // the j = k+1 term comes only from B[k][k]
        let term = poly::scale(&poly::shift_up(&b[k][k], 2), &Integer::from(-1));
        b[k + 1][k + 1] = term;
    }
    let mut out = vec![Vec::new(); m + 1];
    for (k, pk) in ode.polys().iter().enumerate() {
        if poly::is_zero(pk) {
            continue;
        }
        // z^maxdeg · P_k(1/z): reversed coefficients, shifted
        let d = poly::deg(pk).unwrap();
        let mut rev: IntPoly = pk[..=d].iter().rev().cloned().collect();
        rev = poly::shift_up(&rev, maxdeg - d);
        for (j, bk) in b[k].iter().enumerate() {
            if poly::is_zero(bk) {
                continue;
            }
            out[j] = poly::add(&out[j], &poly::mul(&rev, bk));
        }
    }
    LinearODE::new(out).expect("transformed operator is nonzero")
}

/// Square-free factorization of the leading polynomial; one point per root
/// of each factor, plus the point at infinity, each classified
/// regular/irregular by exact pole-order conditions.
pub fn find_singular_points(ode: &LinearODE) -> Result<Vec<SingularPoint>> {
    let pm = ode.polys().last().unwrap();
    let mut points = Vec::new();
    let prec = digits_to_prec(WORK_DIGITS);
    for (factor, mu) in poly::squarefree_factors(pm) {
        for piece in split_squarefree(&factor) {
            let regular = factor_is_regular(ode, &piece, mu);
            let mut roots = aberth_roots_int(&piece, prec);
            roots = roots
                .into_iter()
                .map(|z| refine_root_int(&piece, &z, prec))
                .collect();
            roots.sort_by(|a, b| {
                (a.re.to_f64(), a.im.to_f64())
                    .partial_cmp(&(b.re.to_f64(), b.im.to_f64()))
                    .unwrap()
            });
            for (idx, z) in roots.iter().enumerate() {
                points.push(SingularPoint {
                    min_poly: Some(piece.clone()),
                    root_index: idx,
                    approx: Some((z.re.to_f64(), z.im.to_f64())),
                    regular,
                });
            }
        }
    }
    // infinity via the inversion transform
    let inf_ode = transform_to_infinity(ode);
    let z_factor = poly::from_i64s(&[0, 1]);
    let mu_inf = poly::multiplicity(inf_ode.polys().last().unwrap(), &z_factor);
    let regular_inf = if mu_inf == 0 {
        // z=0 not singular for the transformed operator: infinity ordinary;
        // still reported, classified regular
        true
    } else {
        factor_is_regular(&inf_ode, &z_factor, mu_inf)
    };
    points.push(SingularPoint {
        min_poly: None,
        root_index: 0,
        approx: None,
        regular: regular_inf,
    });
    Ok(points)
}

// ---------------------------------------------------------------------------
// indicial exponents

/// One local exponent: an exact rational, or a numeric value that resisted
/// rational recognition (reported, never silently rounded).
#[derive(Clone, Debug)]
pub enum ExponentValue {
    Rational(Rational),
    Numeric(f64, f64),
}

impl ExponentValue {
    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ExponentValue::Rational(r) => Some(r),
            ExponentValue::Numeric(..) => None,
        }
    }
}

/// The multiset of indicial exponents at one regular singular point;
/// always exactly `order` entries.
#[derive(Clone, Debug)]
pub struct ExponentSet {
    pub exponents: Vec<ExponentValue>,
}

impl ExponentSet {
    pub fn rationals(&self) -> Option<Vec<Rational>> {
        self.exponents
            .iter()
            .map(|e| e.as_rational().cloned())
            .collect()
    }

    fn sorted(mut exps: Vec<ExponentValue>) -> Self {
        exps.sort_by(|x, y| {
            let key = |e: &ExponentValue| match e {
                ExponentValue::Rational(r) => (0u8, r.to_f64(), 0.0),
                ExponentValue::Numeric(re, im) => (1u8, *re, *im),
            };
            key(x).partial_cmp(&key(y)).unwrap()
        });
        ExponentSet { exponents: exps }
    }
}

/// All rational roots (with multiplicity) of a rational-coefficient
/// polynomial: numeric roots, recognition, exact verification, exact
/// deflation. Returns (roots, unrecognized numeric roots).
fn rational_roots(p: &[Rational]) -> (Vec<(Rational, u32)>, Vec<Complex>) {
    let (ip, _) = poly::clear_denominators(p);
    let ip = poly::primitive(&ip);
    let deg = poly::deg(&ip).unwrap_or(0);
    if deg == 0 {
        return (Vec::new(), Vec::new());
    }
    let prec = digits_to_prec(WORK_DIGITS);
    let numeric = aberth_roots_int(&ip, prec);
    let mut found: Vec<(Rational, u32)> = Vec::new();
    let mut rest = ip.clone();
    let mut unrecognized = Vec::new();
    for z in numeric {
        if z.im.clone().abs().to_f64() > 1e-18 {
            unrecognized.push(z);
            continue;
        }
        let Some(cand) = recognize_rational(&z.re, 1_000_000, RECOGNIZE_EPS) else {
            unrecognized.push(z);
            continue;
        };
        if found.iter().any(|(r, _)| *r == cand) {
            continue; // already deflated with full multiplicity
        }
        let lin = poly::primitive(&[Integer::from(-cand.numer()), cand.denom().clone()]);
        let mut mult = 0u32;
        while let Ok(q) = poly::divide_exact(&rest, &lin) {
            mult += 1;
            rest = q;
        }
        if mult > 0 {
            found.push((cand, mult));
        } else {
            unrecognized.push(z);
        }
    }
    // every unrecognized cluster member is still a root of `rest`; dedup by
    // keeping only deg(rest) of them
    let rest_deg = poly::deg(&rest).unwrap_or(0);
    unrecognized.truncate(rest_deg);
    (found, unrecognized)
}

/// Numeric location of a point's tagged root at working precision.
fn certified_root(point: &SingularPoint) -> Result<Complex> {
    let mp = point
        .min_poly
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("finite point expected".into()))?;
    let prec = digits_to_prec(WORK_DIGITS);
    let mut roots = aberth_roots_int(mp, prec);
    roots = roots
        .into_iter()
        .map(|z| refine_root_int(mp, &z, prec))
        .collect();
    roots.sort_by(|a, b| {
        (a.re.to_f64(), a.im.to_f64())
            .partial_cmp(&(b.re.to_f64(), b.im.to_f64()))
            .unwrap()
    });
    Ok(roots.swap_remove(point.root_index))
}

fn exponents_from_rational_indicial(
    ind: &[Rational],
    order: usize,
) -> Result<ExponentSet> {
    let (roots, unrec) = rational_roots(ind);
    let mut exps = Vec::new();
    for (r, mult) in roots {
        for _ in 0..mult {
            exps.push(ExponentValue::Rational(r.clone()));
        }
    }
    for z in unrec {
        exps.push(ExponentValue::Numeric(z.re.to_f64(), z.im.to_f64()));
    }
    if exps.len() != order {
        return Err(Error::Inconclusive(format!(
            "indicial degree {} ≠ order {}",
            exps.len(),
            order
        )));
    }
    Ok(ExponentSet::sorted(exps))
}

/// Indicial exponents at a regular point. Exact arithmetic when the minimal
/// polynomial has degree ≤ 2 (rational or quadratic-extension), validated
/// numerics with rational recognition otherwise; infinity goes through the
/// exact inversion transform.
pub fn indicial_exponents(ode: &LinearODE, point: &SingularPoint) -> Result<ExponentSet> {
    if !point.regular {
        return Err(Error::InvalidArgument(
            "indicial exponents are defined at regular points".into(),
        ));
    }
    let m = ode.order();
    let Some(mp) = &point.min_poly else {
        let inf_ode = transform_to_infinity(ode);
        let z0 = SingularPoint {
            min_poly: Some(poly::from_i64s(&[0, 1])),
            root_index: 0,
            approx: Some((0.0, 0.0)),
            regular: true,
        };
        return indicial_exponents(&inf_ode, &z0);
    };
    match poly::deg(mp).unwrap_or(0) {
        1 => {
            let x0 = Rational::from((Integer::from(-&mp[0]), mp[1].clone()));
            let data = local_data_at(ode, &x0, 0)?;
            if data.indicial_degree() != Some(m) {
                return Err(Error::Inconclusive(format!(
                    "indicial degree {:?} at rational point",
                    data.indicial_degree()
                )));
            }
            exponents_from_rational_indicial(data.indicial(), m)
        }
        2 => {
            // root of c₂x² + c₁x + c₀: x₀ = (−c₁ ± √disc)/(2c₂)
            let c0 = Rational::from(&mp[0]);
            let c1 = Rational::from(&mp[1]);
            let c2 = Rational::from(&mp[2]);
            let disc = Rational::from(c1.square_ref()) - Rational::from(4) * &c0 * &c2;
            let (d_sqfree, scale) = squarefree_part(&disc);
            let sign = if point.root_index == 0 { -1 } else { 1 };
            let a = Rational::from(-&c1) / (Rational::from(2) * &c2);
            let b = scale * Rational::from(sign) / (Rational::from(2) * &c2);
            let x0 = QuadElem { a, b, d: d_sqfree };
            let data = local_data_at(ode, &x0, 0)?;
            if data.indicial_degree() != Some(m) {
                return Err(Error::Inconclusive(
                    "indicial degree drop at quadratic point".into(),
                ));
            }
            // monicize; the result must be rational (conjugate symmetry)
            let lead = data.indicial()[m].clone();
            let mut rat = Vec::with_capacity(m + 1);
            for c in data.indicial() {
                let v = c.s_div(&lead);
                if v.b != 0 {
                    return Err(Error::Inconclusive(
                        "indicial polynomial not rational at quadratic point".into(),
                    ));
                }
                rat.push(v.a);
            }
            exponents_from_rational_indicial(&rat, m)
        }
        _ => {
            let x0 = certified_root(point)?;
            let data = local_data_at(ode, &x0, 0)?;
            if data.indicial_degree() != Some(m) {
                return Err(Error::Inconclusive(
                    "indicial degree drop at numeric point".into(),
                ));
            }
            // complex roots of the numeric indicial polynomial
            let prec = digits_to_prec(WORK_DIGITS);
            let coeffs: Vec<Complex> = data.indicial().to_vec();
            let roots = aberth_roots(&coeffs[..=m], prec);
            let mut exps = Vec::new();
            for z in roots {
                let imag = z.im.clone().abs().to_f64();
                if imag < RECOGNIZE_EPS {
                    if let Some(r) = recognize_rational(&z.re, 1000, RECOGNIZE_EPS) {
                        exps.push(ExponentValue::Rational(r));
                        continue;
                    }
                }
                exps.push(ExponentValue::Numeric(z.re.to_f64(), z.im.to_f64()));
            }
            Ok(ExponentSet::sorted(exps))
        }
    }
}

/// disc = d·scale² with d square-free: returns (d as i64, scale rational).
fn squarefree_part(disc: &Rational) -> (i64, Rational) {
    let num = disc.numer().clone();
    let den = disc.denom().clone();
    // disc = num/den = (num·den)/den²
    let mut core = num * &den;
    let mut scale = Rational::from((Integer::from(1), den));
    let neg = core < 0;
    if neg {
        core = -core;
    }
    let mut f = Integer::from(2);
    while Integer::from(&f * &f) <= core {
        while core.is_divisible(&Integer::from(&f * &f)) {
            core /= Integer::from(&f * &f);
            scale *= &f;
        }
        f += 1;
        if f > 1_000_000 {
            break; // leave any huge square factor inside d
        }
    }
    if neg {
        core = -core;
    }
    (core.to_i64().expect("small square-free part"), scale)
}

// ---------------------------------------------------------------------------
// Fuchsian sum

/// Sum of all exponents over all points vs (n−1)·m(m−1)/2 for n finite
/// singular points and order m.
pub fn fuchs_sum_check(
    sets: &[ExponentSet],
    order: usize,
    finite_points: usize,
) -> Result<(Rational, Rational, bool)> {
    let mut lhs = Rational::from(0);
    for set in sets {
        let Some(rs) = set.rationals() else {
            return Err(Error::Inconclusive(
                "non-rational exponent in Fuchs sum".into(),
            ));
        };
        for r in rs {
            lhs += r;
        }
    }
    let rhs = Rational::from((finite_points as i64 - 1) * (order * (order - 1) / 2) as i64);
    let pass = lhs == rhs;
    Ok((lhs, rhs, pass))
}

// ---------------------------------------------------------------------------
// Frobenius solutions: log-free resonance checks and local bases

/// Outcome of constructing one Frobenius solution.
enum Construct<S> {
    Ok(Vec<Vec<S>>),
    /// a resonance consistency condition failed: a logarithm is forced
    Blocked,
}

/// Build a solution y = Σ_{s,q} u[s][q]·t^{α+s}·log^q t with seed
/// u[0][q_seed] = 1, log degrees ≤ cap, s ≤ trunc. `res_mults[s]` is the
/// exact multiplicity of α+s as an indicial root (resonance structure is
/// decided from the recognized exponents, not from numeric magnitudes).
fn construct_solution<S: LocalScalar>(
    data: &LocalData<S>,
    alpha: &S,
    res_mults: &[u32],
    q_seed: usize,
    cap: usize,
    trunc: usize,
) -> Result<Construct<S>> {
    let q_max = cap;
    let mut u: Vec<Vec<S>> = vec![vec![alpha.s_zero(); q_max + 1]; trunc + 1];
    u[0][q_seed] = alpha.s_one();
    let binom = |n: usize, k: usize| -> Integer { Integer::from(n as u64).binomial(k as u32) };
    for s in 1..=trunc {
        let theta = alpha.s_add(&alpha.s_from_int(&Integer::from(s as u64)));
        let mu = *res_mults.get(s).unwrap_or(&0) as usize;
        // rhs_g and the magnitude of the largest contribution feeding it
        let mut rhs = vec![alpha.s_zero(); q_max + 1];
        let mut scale = vec![0f64; q_max + 1];
        for l in 1..=s.min(data.psi.len() - 1) {
            let sp = s - l;
            let theta_sp = alpha.s_add(&alpha.s_from_int(&Integer::from(sp as u64)));
            for qp in 0..=q_max {
                if u[sp][qp].mag() == 0.0 {
                    continue;
                }
                for g in 0..=qp {
                    let r = qp - g;
                    let c = binom(qp, r);
                    let pv = data.psi_deriv(l, r, &theta_sp);
                    let term = u[sp][qp].s_mul(&pv).s_mul(&alpha.s_from_int(&c));
                    scale[g] = scale[g].max(term.mag());
                    rhs[g] = rhs[g].s_add(&term);
                }
            }
        }
        // solve the banded triangular system: equation g determines
        // u[s][g+mu]; the top `mu` equations are pure consistency rows
        for g in (0..=q_max).rev() {
            let mut lhs = rhs[g].s_neg();
            let mut sc = scale[g];
            // contributions of already-determined u[s][q], q > g+mu
            for q in (g + mu + 1)..=q_max {
                if u[s][q].mag() == 0.0 {
                    continue;
                }
                let r = q - g;
                let c = binom(q, r);
                let pv = data.psi_deriv(0, r, &theta);
                let term = u[s][q].s_mul(&pv).s_mul(&alpha.s_from_int(&c));
                sc = sc.max(term.mag());
                lhs = lhs.s_sub(&term);
            }
            if g + mu <= q_max {
                let c = binom(g + mu, mu);
                let pivot = data.psi_deriv(0, mu, &theta).s_mul(&alpha.s_from_int(&c));
                u[s][g + mu] = lhs.s_div(&pivot);
            } else {
                // consistency row
                match lhs.classify(sc.max(data.scale)) {
                    ZeroClass::Zero => {}
                    ZeroClass::NonZero => return Ok(Construct::Blocked),
                    ZeroClass::Unsure => {
                        return Err(Error::Inconclusive(format!(
                            "resonance residual at offset {s} in the tolerance gap"
                        )))
                    }
                }
            }
        }
        // free parameters at a resonance (the lowest mu log-slots that no
        // equation determined) stay zero — they correspond to adding the
        // solutions seeded at α+s
    }
    Ok(Construct::Ok(u))
}

/// Verdict of the apparent-singularity decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Apparent,
    Genuine,
}

#[derive(Clone, Debug)]
pub struct ApparentReport {
    pub verdict: Verdict,
    /// whether any local solution is forced to carry a logarithm
    pub log_forced: bool,
}

struct PointArithmetic {
    rational: Option<Rational>,
    quad: Option<QuadElem>,
    numeric: Option<Complex>,
}

fn point_arithmetic(point: &SingularPoint) -> Result<PointArithmetic> {
    let mp = point
        .min_poly
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("finite point expected".into()))?;
    match poly::deg(mp).unwrap_or(0) {
        1 => Ok(PointArithmetic {
            rational: Some(Rational::from((Integer::from(-&mp[0]), mp[1].clone()))),
            quad: None,
            numeric: None,
        }),
        2 => {
            let c0 = Rational::from(&mp[0]);
            let c1 = Rational::from(&mp[1]);
            let c2 = Rational::from(&mp[2]);
            let disc = Rational::from(c1.square_ref()) - Rational::from(4) * &c0 * &c2;
            let (d_sqfree, scale) = squarefree_part(&disc);
            let sign = if point.root_index == 0 { -1 } else { 1 };
            let a = Rational::from(-&c1) / (Rational::from(2) * &c2);
            let b = scale * Rational::from(sign) / (Rational::from(2) * &c2);
            Ok(PointArithmetic {
                rational: None,
                quad: Some(QuadElem { a, b, d: d_sqfree }),
                numeric: None,
            })
        }
        _ => Ok(PointArithmetic {
            rational: None,
            quad: None,
            numeric: Some(certified_root(point)?),
        }),
    }
}

/// Resonance multiplicity table for a class of integer-spaced exponents:
/// res[s] = multiplicity of α+s among the exponents.
fn resonance_table(alpha: &Rational, all: &[Rational]) -> Vec<u32> {
    let mut max_s = 0i64;
    for e in all {
        let diff = Rational::from(e - alpha);
        if diff.is_integer() && diff >= 0 {
            max_s = max_s.max(diff.numer().to_i64().unwrap());
        }
    }
    let mut table = vec![0u32; (max_s + 1) as usize];
    for e in all {
        let diff = Rational::from(e - alpha);
        if diff.is_integer() && diff >= 0 {
            table[diff.numer().to_i64().unwrap() as usize] += 1;
        }
    }
    table
}

fn logfree_all_starts<S: LocalScalar>(
    data: &LocalData<S>,
    x_embed: &S,
    exps: &[Rational],
) -> Result<bool> {
    for alpha in exps {
        let res = resonance_table(alpha, exps);
        let trunc = res.len() - 1;
        if trunc == 0 {
            continue; // no resonance above this start
        }
        let alpha_s = embed_rational(x_embed, alpha);
        match construct_solution(data, &alpha_s, &res, 0, 0, trunc)? {
            Construct::Ok(_) => {}
            Construct::Blocked => return Ok(false),
        }
    }
    Ok(true)
}

fn embed_rational<S: LocalScalar>(proto: &S, r: &Rational) -> S {
    let num = proto.s_from_int(&Integer::from(r.numer()));
    let den = proto.s_from_int(&Integer::from(r.denom()));
    num.s_div(&den)
}

/// Decide apparent vs genuine at a regular point. Necessary condition: all
/// exponents are distinct non-negative integers; then the point is apparent
/// iff every resonance consistency condition holds, so that a full basis of
/// analytic log-free solutions exists.
pub fn apparent_check(ode: &LinearODE, point: &SingularPoint) -> Result<ApparentReport> {
    if !point.regular {
        return Err(Error::InvalidArgument(
            "apparent check requires a regular point".into(),
        ));
    }
    if point.is_infinity() {
        let inf_ode = transform_to_infinity(ode);
        let z0 = SingularPoint {
            min_poly: Some(poly::from_i64s(&[0, 1])),
            root_index: 0,
            approx: Some((0.0, 0.0)),
            regular: true,
        };
        return apparent_check(&inf_ode, &z0);
    }
    let set = indicial_exponents(ode, point)?;
    let Some(rs) = set.rationals() else {
        return Ok(ApparentReport {
            verdict: Verdict::Genuine,
            log_forced: false,
        });
    };
    let mut distinct = true;
    let mut integral = true;
    for (i, r) in rs.iter().enumerate() {
        if !(r.is_integer() && *r >= 0) {
            integral = false;
        }
        if rs[..i].contains(r) {
            distinct = false;
        }
    }
    if !(distinct && integral) {
        // a repeated indicial root always forces a logarithm: log-free
        // solutions are triangular in their leading exponents, so their
        // span has dimension at most the number of distinct exponents
        return Ok(ApparentReport {
            verdict: Verdict::Genuine,
            log_forced: !distinct,
        });
    }
    let m = ode.order();
    let arith = point_arithmetic(point)?;
    let consistent = if let Some(x0) = arith.rational {
        let data = local_data_at(ode, &x0, span_budget(&rs))?;
        check_degree(&data, m)?;
        logfree_all_starts(&data, &x0, &rs)?
    } else if let Some(x0) = arith.quad {
        let data = local_data_at(ode, &x0, span_budget(&rs))?;
        check_degree(&data, m)?;
        logfree_all_starts(&data, &x0, &rs)?
    } else {
        let x0 = arith.numeric.unwrap();
        let data = local_data_at(ode, &x0, span_budget(&rs))?;
        check_degree(&data, m)?;
        logfree_all_starts(&data, &x0, &rs)?
    };
    Ok(ApparentReport {
        verdict: if consistent {
            Verdict::Apparent
        } else {
            Verdict::Genuine
        },
        log_forced: !consistent,
    })
}

fn span_budget(exps: &[Rational]) -> usize {
    let mut max_gap = 0i64;
    for a in exps {
        for b in exps {
            let d = Rational::from(a - b);
            if d.is_integer() {
                max_gap = max_gap.max(d.numer().to_i64().unwrap_or(0));
            }
        }
    }
    max_gap as usize + 1
}

fn check_degree<S: LocalScalar>(data: &LocalData<S>, m: usize) -> Result<()> {
    if data.indicial_degree() != Some(m) {
        return Err(Error::Inconclusive("indicial degree drop".into()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// local bases

/// One truncated Frobenius solution
/// y = Σ_{s≤trunc, q≤log_degree} coeffs[s][q]·t^{exponent+s}·log^q t
/// (t = x − x₀, or t = 1/x at infinity).
#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub exponent: Rational,
    pub log_degree: usize,
    /// coeffs[s][q], numeric values (re, im) at working precision
    pub coeffs: Vec<Vec<(f64, f64)>>,
}

/// A full basis of m local solutions at a regular point, with logarithm
/// degrees assigned per indicial root multiplicity (higher only when a
/// resonance obstruction forces it).
pub fn local_basis(
    ode: &LinearODE,
    point: &SingularPoint,
    truncation: usize,
) -> Result<Vec<LocalSolution>> {
    if !point.regular {
        return Err(Error::InvalidArgument(
            "local basis requires a regular point".into(),
        ));
    }
    if point.is_infinity() {
        let inf_ode = transform_to_infinity(ode);
        let z0 = SingularPoint {
            min_poly: Some(poly::from_i64s(&[0, 1])),
            root_index: 0,
            approx: Some((0.0, 0.0)),
            regular: true,
        };
        return local_basis(&inf_ode, &z0, truncation);
    }
    let m = ode.order();
    let set = indicial_exponents(ode, point)?;
    let Some(rs) = set.rationals() else {
        return Err(Error::Inconclusive(
            "local basis needs rational exponents".into(),
        ));
    };
    let x0 = match point_arithmetic(point)? {
        PointArithmetic {
            numeric: Some(z), ..
        } => z,
        PointArithmetic {
            rational: Some(r), ..
        } => {
            let prec = digits_to_prec(WORK_DIGITS);
            Complex::from_rational(&r, prec)
        }
        PointArithmetic { quad: Some(q), .. } => {
            let prec = digits_to_prec(WORK_DIGITS);
            let root = Float::with_val(prec, (q.d as f64).abs()).sqrt();
            let bf = Float::with_val(prec, &q.b);
            if q.d < 0 {
                Complex {
                    re: Float::with_val(prec, &q.a),
                    im: bf * root,
                }
            } else {
                Complex {
                    re: Float::with_val(prec, &q.a) + bf * root,
                    im: Float::new(prec),
                }
            }
        }
        _ => unreachable!(),
    };
    let lmax = truncation + span_budget(&rs);
    let data = local_data_at(ode, &x0, lmax)?;
    check_degree(&data, m)?;

    // distinct roots with multiplicities, ascending
    let mut distinct: Vec<(Rational, u32)> = Vec::new();
    for r in &rs {
        if let Some(e) = distinct.iter_mut().find(|(v, _)| v == r) {
            e.1 += 1;
        } else {
            distinct.push((r.clone(), 1));
        }
    }
    distinct.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut out = Vec::with_capacity(m);
    for (alpha, mult) in &distinct {
        let res = resonance_table(alpha, &rs);
        let mut table = res.clone();
        if table.len() < truncation + 1 {
            table.resize(truncation + 1, 0);
        }
        let alpha_c = embed_rational(&x0, alpha);
        for q_seed in 0..*mult as usize {
            let mut cap = q_seed;
            let solution = loop {
                match construct_solution(&data, &alpha_c, &table, q_seed, cap, truncation)? {
                    Construct::Ok(u) => break u,
                    Construct::Blocked => {
                        cap += 1;
                        if cap >= m {
                            return Err(Error::Inconclusive(
                                "log degree exceeded the order".into(),
                            ));
                        }
                    }
                }
            };
            let log_degree = solution
                .iter()
                .flat_map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, v)| v.mag() > ORDER_EPS * data.scale.max(1.0))
                        .map(|(q, _)| q)
                })
                .max()
                .unwrap_or(0);
            out.push(LocalSolution {
                exponent: alpha.clone(),
                log_degree,
                coeffs: solution
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|v| (v.re.to_f64(), v.im.to_f64()))
                            .collect()
                    })
                    .collect(),
            });
        }
    }
    Ok(out)
}

/// Largest relative residual of the ODE applied to one local solution,
/// over the orders the truncation determines. Small values certify the
/// solution formally satisfies the equation.
pub fn local_solution_residual(
    ode: &LinearODE,
    point: &SingularPoint,
    sol: &LocalSolution,
) -> Result<f64> {
    if point.is_infinity() {
        let inf_ode = transform_to_infinity(ode);
        let z0 = SingularPoint {
            min_poly: Some(poly::from_i64s(&[0, 1])),
            root_index: 0,
            approx: Some((0.0, 0.0)),
            regular: true,
        };
        return local_solution_residual(&inf_ode, &z0, sol);
    }
    let set = indicial_exponents(ode, point)?;
    let rs = set
        .rationals()
        .ok_or_else(|| Error::Inconclusive("rational exponents required".into()))?;
    let prec = digits_to_prec(WORK_DIGITS);
    let x0 = match point_arithmetic(point)? {
        PointArithmetic {
            numeric: Some(z), ..
        } => z,
        PointArithmetic {
            rational: Some(r), ..
        } => Complex::from_rational(&r, prec),
        PointArithmetic { quad: Some(q), .. } => {
            let root = Float::with_val(prec, (q.d as f64).abs()).sqrt();
            let bf = Float::with_val(prec, &q.b);
            if q.d < 0 {
                Complex {
                    re: Float::with_val(prec, &q.a),
                    im: bf * root,
                }
            } else {
                Complex {
                    re: Float::with_val(prec, &q.a) + bf * root,
                    im: Float::new(prec),
                }
            }
        }
        _ => unreachable!(),
    };
    let trunc = sol.coeffs.len() - 1;
    let lmax = trunc + span_budget(&rs) + 1;
    let data = local_data_at(ode, &x0, lmax)?;
    let qmax = sol.coeffs[0].len() - 1;
    let u: Vec<Vec<Complex>> = sol
        .coeffs
        .iter()
        .map(|row| {
            row.iter()
                .map(|(re, im)| Complex::from_f64(*re, *im, prec))
                .collect()
        })
        .collect();
    let alpha = embed_rational(&x0, &sol.exponent);
    let binom = |n: usize, k: usize| -> Integer { Integer::from(n as u64).binomial(k as u32) };
    let mut worst = 0f64;
    for cap_s in 0..=trunc {
        for g in 0..=qmax {
            let mut acc = Complex::zero(prec);
            let mut scale = 0f64;
            for s in 0..=cap_s {
                let l = cap_s - s;
                if l >= data.psi.len() {
                    continue;
                }
                let theta = alpha.s_add(&alpha.s_from_int(&Integer::from(s as u64)));
                for q in g..=qmax {
                    if u[s][q].mag() == 0.0 {
                        continue;
                    }
                    let r = q - g;
                    let pv = data.psi_deriv(l, r, &theta);
                    let term = u[s][q].mul(&pv).mul(&Complex::from_integer(&binom(q, r), prec));
                    scale = scale.max(term.mag());
                    acc = acc.add(&term);
                }
            }
            if scale > 0.0 {
                worst = worst.max(acc.mag() / scale.max(data.scale));
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// consolidated analysis

#[derive(Clone, Debug)]
pub struct PointReport {
    pub point: SingularPoint,
    pub exponents: Option<ExponentSet>,
    pub apparent: Option<ApparentReport>,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct SingularityReport {
    pub order: usize,
    pub points: Vec<PointReport>,
    pub fuchs_lhs: Option<Rational>,
    pub fuchs_rhs: Option<Rational>,
    pub fuchs_pass: Option<bool>,
}

/// Full singularity analysis: locate, classify, compute exponents, decide
/// apparent/genuine per point (points processed in parallel), and check the
/// global sum relation.
pub fn analyze(ode: &LinearODE) -> Result<SingularityReport> {
    let points = find_singular_points(ode)?;
    let reports: Vec<PointReport> = par_map(points, |point| {
        if !point.regular {
            return PointReport {
                point,
                exponents: None,
                apparent: None,
                note: Some("irregular".into()),
            };
        }
        let exponents = indicial_exponents(ode, &point);
        let apparent = apparent_check(ode, &point);
        match (exponents, apparent) {
            (Ok(e), Ok(a)) => PointReport {
                point,
                exponents: Some(e),
                apparent: Some(a),
                note: None,
            },
            (e, a) => {
                let mut notes = Vec::new();
                let exponents = match e {
                    Ok(v) => Some(v),
                    Err(err) => {
                        notes.push(err.to_string());
                        None
                    }
                };
                let apparent = match a {
                    Ok(v) => Some(v),
                    Err(err) => {
                        notes.push(err.to_string());
                        None
                    }
                };
                PointReport {
                    point,
                    exponents,
                    apparent,
                    note: Some(notes.join("; ")),
                }
            }
        }
    });
    let finite = reports.iter().filter(|r| !r.point.is_infinity()).count();
    let all_sets: Option<Vec<ExponentSet>> =
        reports.iter().map(|r| r.exponents.clone()).collect();
    let (lhs, rhs, pass) = match all_sets {
        Some(sets) => match fuchs_sum_check(&sets, ode.order(), finite) {
            Ok((l, r, p)) => (Some(l), Some(r), Some(p)),
            Err(_) => (None, None, None),
        },
        None => (None, None, None),
    };
    Ok(SingularityReport {
        order: ode.order(),
        points: reports,
        fuchs_lhs: lhs,
        fuchs_rhs: rhs,
        fuchs_pass: pass,
    })
}

impl std::fmt::Display for SingularityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "order {}", self.order)?;
        let finite = self.points.iter().filter(|r| !r.point.is_infinity()).count();
        writeln!(f, "points {} finite + infinity", finite)?;
        for r in &self.points {
            write!(f, "point [{}]", r.point.describe())?;
            write!(
                f,
                " {}",
                if r.point.regular { "regular" } else { "irregular" }
            )?;
            if let Some(set) = &r.exponents {
                let parts: Vec<String> = set
                    .exponents
                    .iter()
                    .map(|e| match e {
                        ExponentValue::Rational(q) => q.to_string(),
                        ExponentValue::Numeric(re, im) => format!("~({re},{im})"),
                    })
                    .collect();
                write!(f, " exponents {}", parts.join(","))?;
            }
            if let Some(a) = &r.apparent {
                write!(
                    f,
                    " verdict {} log {}",
                    match a.verdict {
                        Verdict::Apparent => "apparent",
                        Verdict::Genuine => "genuine",
                    },
                    if a.log_forced { "yes" } else { "no" }
                )?;
            }
            if let Some(n) = &r.note {
                write!(f, " note {n}")?;
            }
            writeln!(f)?;
        }
        if let (Some(l), Some(rr), Some(p)) = (&self.fuchs_lhs, &self.fuchs_rhs, &self.fuchs_pass)
        {
            writeln!(
                f,
                "fuchsian sum = {}, expected = {} [{}]",
                l,
                rr,
                if *p { "pass" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::from_i64s;

    fn staircase_ode() -> LinearODE {
        LinearODE::new(vec![
            from_i64s(&[-2]),
            from_i64s(&[-1, 2]),
            from_i64s(&[0, 1, -4]),
        ])
        .unwrap()
    }

    fn rat(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn aberth_finds_known_roots() {
        let prec = digits_to_prec(50);
        // (x² + 1)(x − 3)
        let p = poly::mul(&from_i64s(&[1, 0, 1]), &from_i64s(&[-3, 1]));
        let mut roots = aberth_roots_int(&p, prec);
        roots.sort_by(|a, b| a.re.to_f64().partial_cmp(&b.re.to_f64()).unwrap());
        let vals: Vec<(f64, f64)> = roots.iter().map(|z| (z.re.to_f64(), z.im.to_f64())).collect();
        assert!((vals[2].0 - 3.0).abs() < 1e-40);
        assert!(vals[0].0.abs() < 1e-40 && (vals[0].1.abs() - 1.0).abs() < 1e-40);
    }

    #[test]
    fn recognize_simple_fractions() {
        let prec = digits_to_prec(60);
        let x = Float::with_val(prec, 13) / Float::with_val(prec, 2);
        assert_eq!(recognize_rational(&x, 1000, 1e-20), Some(rat(13, 2)));
        let y = Float::with_val(prec, 2).sqrt();
        assert_eq!(recognize_rational(&y, 1000, 1e-20), None);
    }

    #[test]
    fn split_recognizes_linear_and_quadratic() {
        // x(1−4x)(1+4x²)(1+x+7x²)(x²+x+1)(x³−x²+1): all square-free
        let f = [
            from_i64s(&[0, 1]),
            from_i64s(&[1, -4]),
            from_i64s(&[1, 0, 4]),
            from_i64s(&[1, 1, 7]),
            from_i64s(&[1, 1, 1]),
            from_i64s(&[1, 0, -1, 1]),
        ]
        .iter()
        .fold(vec![Integer::from(1)], |acc, p| poly::mul(&acc, p));
        let pieces = split_squarefree(&f);
        assert_eq!(pieces.len(), 6);
        assert!(pieces.contains(&from_i64s(&[0, 1])));
        assert!(pieces.contains(&from_i64s(&[-1, 4])) || pieces.contains(&from_i64s(&[1, -4])));
        assert!(pieces.contains(&from_i64s(&[1, 0, 4])));
        assert!(pieces.contains(&from_i64s(&[1, 1, 7])));
        assert!(pieces.contains(&from_i64s(&[1, 1, 1])));
        assert!(pieces.contains(&from_i64s(&[1, 0, -1, 1])));
    }

    #[test]
    fn geometric_ode_points() {
        // (1−x)F′ − F = 0: regular points {1, ∞}
        let ode = LinearODE::new(vec![from_i64s(&[-1]), from_i64s(&[1, -1])]).unwrap();
        let pts = find_singular_points(&ode).unwrap();
        assert_eq!(pts.len(), 2);
        let finite = &pts[0];
        assert_eq!(finite.rational_location(), Some(rat(1, 1)));
        assert!(finite.regular);
        assert!(pts[1].is_infinity());
        assert!(pts[1].regular);
        // exponent −1 at x=1 (solution 1/(1−x)), +1 at infinity
        let e1 = indicial_exponents(&ode, finite).unwrap();
        assert_eq!(e1.rationals().unwrap(), vec![rat(-1, 1)]);
        let einf = indicial_exponents(&ode, &pts[1]).unwrap();
        assert_eq!(einf.rationals().unwrap(), vec![rat(1, 1)]);
        let (lhs, rhs, pass) =
            fuchs_sum_check(&[e1, einf], 1, 1).unwrap();
        assert_eq!(lhs, 0);
        assert_eq!(rhs, 0);
        assert!(pass);
    }

    #[test]
    fn exponential_ode_irregular_at_infinity() {
        let ode = LinearODE::new(vec![from_i64s(&[-1]), from_i64s(&[1])]).unwrap();
        let pts = find_singular_points(&ode).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].is_infinity());
        assert!(!pts[0].regular);
        assert!(indicial_exponents(&ode, &pts[0]).is_err());
    }

    #[test]
    fn staircase_exponents_and_verdicts() {
        let ode = staircase_ode();
        let pts = find_singular_points(&ode).unwrap();
        assert_eq!(pts.len(), 3);
        for p in &pts {
            assert!(p.regular, "{p:?}");
        }
        let at = |loc: Option<Rational>| {
            pts.iter()
                .find(|p| p.rational_location() == loc && (loc.is_some() || p.is_infinity()))
                .unwrap()
        };
        let zero = at(Some(rat(0, 1)));
        let quarter = at(Some(rat(1, 4)));
        let e0 = indicial_exponents(&ode, zero).unwrap().rationals().unwrap();
        assert_eq!(e0, vec![rat(0, 1), rat(2, 1)]);
        let eq = indicial_exponents(&ode, quarter).unwrap().rationals().unwrap();
        assert_eq!(eq, vec![rat(0, 1), rat(1, 2)]);

        // x=0: distinct integers and consistent resonance → apparent
        let a0 = apparent_check(&ode, zero).unwrap();
        assert_eq!(a0.verdict, Verdict::Apparent);
        assert!(!a0.log_forced);
        // x=1/4: half-integer exponent → genuine, no log
        let aq = apparent_check(&ode, quarter).unwrap();
        assert_eq!(aq.verdict, Verdict::Genuine);
        assert!(!aq.log_forced);

        // Fuchs sum over all three points
        let inf = pts.iter().find(|p| p.is_infinity()).unwrap();
        let sets = vec![
            indicial_exponents(&ode, zero).unwrap(),
            indicial_exponents(&ode, quarter).unwrap(),
            indicial_exponents(&ode, inf).unwrap(),
        ];
        let (lhs, rhs, pass) = fuchs_sum_check(&sets, 2, 2).unwrap();
        assert_eq!(rhs, 1);
        assert_eq!(lhs, 1);
        assert!(pass);
    }

    #[test]
    fn double_root_forces_logarithm() {
        // x·F″ + F′ = 0: solutions 1 and log x; indicial θ² at x=0
        let ode = LinearODE::new(vec![Vec::new(), from_i64s(&[1]), from_i64s(&[0, 1])]).unwrap();
        let pts = find_singular_points(&ode).unwrap();
        let zero = pts
            .iter()
            .find(|p| p.rational_location() == Some(rat(0, 1)))
            .unwrap();
        let exps = indicial_exponents(&ode, zero).unwrap().rationals().unwrap();
        assert_eq!(exps, vec![rat(0, 1), rat(0, 1)]);
        let a = apparent_check(&ode, zero).unwrap();
        assert_eq!(a.verdict, Verdict::Genuine);
        assert!(a.log_forced);
        let basis = local_basis(&ode, zero, 8).unwrap();
        assert_eq!(basis.len(), 2);
        let degs: Vec<usize> = basis.iter().map(|s| s.log_degree).collect();
        assert!(degs.contains(&0) && degs.contains(&1), "{degs:?}");
    }

    #[test]
    fn staircase_local_basis_resubstitutes() {
        let ode = staircase_ode();
        let pts = find_singular_points(&ode).unwrap();
        for p in &pts {
            let basis = local_basis(&ode, p, 10).unwrap();
            assert_eq!(basis.len(), 2, "{p:?}");
            for sol in &basis {
                assert_eq!(sol.log_degree, 0);
                let res = local_solution_residual(&ode, p, sol).unwrap();
                assert!(res < 1e-30, "residual {res} at {p:?}");
            }
        }
    }

    #[test]
    fn quadratic_point_exponents_exact() {
        // (1+4x²)F′ − 4x·F = 0 has solution (1+4x²)^{1/2}: exponent 1/2 at
        // both roots of 1+4x², −1 at infinity
        let ode = LinearODE::new(vec![from_i64s(&[0, -4]), from_i64s(&[1, 0, 4])]).unwrap();
        let pts = find_singular_points(&ode).unwrap();
        let quads: Vec<&SingularPoint> = pts
            .iter()
            .filter(|p| {
                p.min_poly
                    .as_ref()
                    .map(|mp| poly::deg(mp) == Some(2))
                    .unwrap_or(false)
            })
            .collect();
        assert_eq!(quads.len(), 2);
        let mut sets = Vec::new();
        for p in &quads {
            let set = indicial_exponents(&ode, p).unwrap();
            assert_eq!(set.rationals().unwrap(), vec![rat(1, 2)]);
            sets.push(set);
        }
        let inf = pts.iter().find(|p| p.is_infinity()).unwrap();
        let einf = indicial_exponents(&ode, inf).unwrap();
        assert_eq!(einf.rationals().unwrap(), vec![rat(-1, 1)]);
        sets.push(einf);
        let (lhs, rhs, pass) = fuchs_sum_check(&sets, 1, 2).unwrap();
        assert_eq!(lhs, 0);
        assert_eq!(rhs, 0);
        assert!(pass);
    }

    #[test]
    fn report_renders() {
        let report = analyze(&staircase_ode()).unwrap();
        let text = format!("{report}");
        assert!(text.contains("sum = 1, expected = 1 [pass]"));
        assert!(text.contains("regular"));
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn order_two_class_is_fuchsian_with_two_exponents_per_point(
            a in 1i64..6,
            c in -5i64..6,
            r1 in -4i64..5,
            r2 in -4i64..5,
        ) {
            // x(x−a)y″ + (bx+c)y′ + d·y, with b and d chosen so the
            // exponents at infinity are the integers r1, r2; every member
            // of the family is Fuchsian
            let b = 1 + r1 + r2;
            let d = r1 * r2;
            let ode = LinearODE::new(vec![
                from_i64s(&[d]),
                from_i64s(&[c, b]),
                from_i64s(&[0, -a, 1]),
            ])
            .unwrap();
            let report = analyze(&ode).unwrap();
            prop_assert_eq!(report.fuchs_pass, Some(true));
            for pt in &report.points {
                prop_assert!(pt.point.regular);
                let count = pt.exponents.as_ref().map(|e| e.exponents.len());
                prop_assert_eq!(count, Some(2));
            }
        }
    }
}
