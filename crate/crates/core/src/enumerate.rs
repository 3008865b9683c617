//! Transfer-matrix enumeration of staircase polygons (counts c_n) and
//! imperfect staircase polygons (counts p_n), assembled into three-choice
//! polygon counts t_n = 2n·c_n + 2·p_n, plus a brute-force walk oracle.
//!
//! The enumeration sweeps a diagonal boundary line across the lattice. A
//! staircase configuration is a pair of directed walks and is tracked by the
//! gap i between their endpoints on the boundary; an imperfect configuration
//! has four boundary crossings and is tracked by the gap triple (l, m, n).
//! Weights are truncated polynomials in x (one coefficient per perimeter
//! contribution); everything past x^N is discarded, and states whose minimal
//! completion cost already exceeds the budget are pruned.

use rug::Integer;
use rustc_hash::FxHashMap;

use crate::exactarith::{IntegerSeries, PrimeModulus, ResidueSeries};
use crate::error::Error;
use crate::Result;

/// Coefficient ring for one enumeration run: exact integers for small-N
/// cross-checks, a word-size prime field for production runs.
trait Ring {
    type Elem: Clone;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add_assign(&self, a: &mut Self::Elem, b: &Self::Elem);
    fn add_assign_double(&self, a: &mut Self::Elem, b: &Self::Elem);
}

struct ExactRing;

impl Ring for ExactRing {
    type Elem = Integer;
    fn zero(&self) -> Integer {
        Integer::new()
    }
    fn one(&self) -> Integer {
        Integer::from(1)
    }
    fn add_assign(&self, a: &mut Integer, b: &Integer) {
        *a += b;
    }
    fn add_assign_double(&self, a: &mut Integer, b: &Integer) {
        *a += Integer::from(b * 2u32);
    }
}

struct ModRing {
    p: u64,
}

impl Ring for ModRing {
    type Elem = u64;
    fn zero(&self) -> u64 {
        0
    }
    fn one(&self) -> u64 {
        1 % self.p
    }
    fn add_assign(&self, a: &mut u64, b: &u64) {
        *a = crate::exactarith::addmod(*a, *b, self.p);
    }
    fn add_assign_double(&self, a: &mut u64, b: &u64) {
        let d = crate::exactarith::addmod(*b, *b, self.p);
        *a = crate::exactarith::addmod(*a, d, self.p);
    }
}

/// Staircase polygon counts c_n for n = 0…N (c_0 = c_1 = 0).
///
/// One boundary state per gap i, implicit weight x^{k+1} at diagonal k;
/// moving the boundary widens the gap, narrows it, or keeps it (twice).
/// A gap reaching zero closes a polygon of half-perimeter k+2.
pub fn enumerate_staircase(n_max: usize) -> Result<IntegerSeries> {
    if n_max < 2 {
        return Err(Error::InvalidArgument(
            "staircase enumeration needs n_max >= 2".into(),
        ));
    }
    let mut c = vec![Integer::new(); n_max + 1];
    let mut table: FxHashMap<usize, Integer> = FxHashMap::default();
    table.insert(1, Integer::from(1));
    for k in 0..n_max {
        let mut next: FxHashMap<usize, Integer> = FxHashMap::default();
        for (&i, v) in &table {
            if i + 1 <= n_max {
                *next.entry(i + 1).or_default() += v;
            }
            if i == 1 {
                if k + 2 <= n_max {
                    c[k + 2] += v;
                }
            } else {
                *next.entry(i - 1).or_default() += v;
            }
            *next.entry(i).or_default() += Integer::from(v * 2u32);
        }
        // a state of gap i at weight x^{k+2} needs at least i more steps
        next.retain(|&i, _| (k + 2) + i <= n_max);
        table = next;
    }
    Ok(IntegerSeries::new(c))
}

/// Gap triple (l, m, n) packed 21 bits a field so state maps hash a single
/// word. m ≥ 1 marks a four-crossing state; the reserved shape (gap, 0, 0)
/// holds already-connected two-walk states awaiting closure.
type GapKey = u64;

fn pack(l: usize, m: usize, n: usize) -> GapKey {
    debug_assert!(l < (1 << 21) && m < (1 << 21) && n < (1 << 21));
    ((l as u64) << 42) | ((m as u64) << 21) | n as u64
}

fn unpack(key: GapKey) -> (usize, usize, usize) {
    const MASK: u64 = (1 << 21) - 1;
    (
        (key >> 42) as usize,
        ((key >> 21) & MASK) as usize,
        (key & MASK) as usize,
    )
}

/// Weight polynomial of one state: coefficient j is the count at perimeter
/// degree off + j, where off is uniform across a generation.
type Weight<E> = Vec<E>;

/// The 16 descendants of a four-crossing state under one boundary step.
/// The repeated (0,0,0) entry realizes the doubled stay-put transition.
const DELTAS: [(i64, i64, i64); 16] = [
    (0, 0, 0),
    (0, 0, 0),
    (1, 0, 0),
    (0, 1, 0),
    (0, 0, 1),
    (-1, 0, 0),
    (0, -1, 0),
    (0, 0, -1),
    (1, -1, 0),
    (1, 0, -1),
    (-1, 1, 0),
    (0, 1, -1),
    (-1, 0, 1),
    (0, -1, 1),
    (-1, 1, -1),
    (1, -1, 1),
];

/// Size statistics of one enumeration sweep.
#[derive(Clone, Copy, Debug, Default)]
pub struct SweepStats {
    /// largest number of live state classes in any generation
    pub peak_states: usize,
    /// largest total number of stored coefficients in any generation
    pub peak_coeffs: usize,
}

struct Sweep<'r, R: Ring> {
    ring: &'r R,
    n_max: usize,
    /// harvested imperfect counts, index = half-perimeter
    p_out: Vec<R::Elem>,
    stats: SweepStats,
}

impl<'r, R: Ring> Sweep<'r, R> {
    /// Route a contribution arriving at gap triple (l, m, n); src[j] carries
    /// degree off_next + shift + j. Middle joins (m = 0 with a walk still
    /// open on either side) are rejected; l = n = 0 completes a polygon;
    /// a single closed side becomes a two-walk state keyed (l+n, 0, 0).
    #[allow(clippy::too_many_arguments)]
    fn deposit(
        &mut self,
        next: &mut FxHashMap<GapKey, Weight<R::Elem>>,
        off_next: usize,
        l: usize,
        m: usize,
        n: usize,
        src: &[R::Elem],
        shift: usize,
    ) {
        if m == 0 {
            return;
        }
        if l == 0 && n == 0 {
            for (j, v) in src.iter().enumerate() {
                let d = off_next + shift + j;
                if d <= self.n_max {
                    self.ring.add_assign(&mut self.p_out[d], v);
                }
            }
            return;
        }
        let (key, gap) = if l == 0 || n == 0 {
            (pack(l + n, 0, 0), l + n)
        } else {
            (pack(l, m, n), l + n)
        };
        self.store(next, off_next, key, gap, src, shift, false);
    }

    /// Accumulate into a state vector, truncating at degree + gap > N.
    #[allow(clippy::too_many_arguments)]
    fn store(
        &mut self,
        next: &mut FxHashMap<GapKey, Weight<R::Elem>>,
        off_next: usize,
        key: GapKey,
        gap: usize,
        src: &[R::Elem],
        shift: usize,
        double: bool,
    ) {
        let cap = (self.n_max + 1) as i64 - (gap + off_next) as i64;
        if cap <= 0 {
            return;
        }
        let cap = cap as usize;
        let tgt = next
            .entry(key)
            .or_insert_with(|| vec![self.ring.zero(); cap]);
        debug_assert_eq!(tgt.len(), cap);
        for (j, v) in src.iter().enumerate() {
            let idx = shift + j;
            if idx >= cap {
                break;
            }
            if double {
                self.ring.add_assign_double(&mut tgt[idx], v);
            } else {
                self.ring.add_assign(&mut tgt[idx], v);
            }
        }
    }

    fn run(&mut self) {
        let n_max = self.n_max;
        // staircase feeder: gap -> count, implicit weight x^{k+1}
        let mut stairs: FxHashMap<usize, R::Elem> = FxHashMap::default();
        stairs.insert(1, self.ring.one());
        // four-crossing and two-walk states; generation offset k+2 at loop top
        let mut states: FxHashMap<GapKey, Weight<R::Elem>> = FxHashMap::default();

        for k in 0..n_max {
            let off_next = k + 3;
            let mut next: FxHashMap<GapKey, Weight<R::Elem>> = FxHashMap::default();

            // (a) creation: a staircase state of gap i >= 2 sprouts a new
            // walk pair across the boundary, at cost x^2, in four ways per
            // split point j
            let creations: Vec<(usize, R::Elem)> = stairs
                .iter()
                .filter(|(&i, _)| i >= 2)
                .map(|(&i, v)| (i, v.clone()))
                .collect();
            if k + 3 <= n_max {
                for (i, cnt) in &creations {
                    let src = std::slice::from_ref(cnt);
                    for j in 1..*i {
                        for (l, n) in [
                            (j, i - j),
                            (j - 1, i - j),
                            (j, i - j - 1),
                            (j - 1, i - j - 1),
                        ] {
                            self.deposit(&mut next, off_next, l, 1, n, src, 0);
                        }
                    }
                }
            }

            let old = std::mem::take(&mut states);
            for (key, poly) in &old {
                let (l, m, n) = unpack(*key);
                if m >= 1 {
                    // (b) 16-descendant update at cost x^2 per step
                    for (dl, dm, dn) in DELTAS {
                        let nl = (l as i64 + dl) as usize;
                        let nm = (m as i64 + dm) as usize;
                        let nn = (n as i64 + dn) as usize;
                        self.deposit(&mut next, off_next, nl, nm, nn, poly, 1);
                    }
                } else {
                    // two-walk states close like a staircase, at cost x
                    let gap = l;
                    for (tl, double) in [(gap + 1, false), (gap.wrapping_sub(1), false), (gap, true)] {
                        if tl == 0 {
                            for (j, v) in poly.iter().enumerate() {
                                let d = off_next + j;
                                if d <= n_max {
                                    self.ring.add_assign(&mut self.p_out[d], v);
                                }
                            }
                        } else {
                            self.store(&mut next, off_next, pack(tl, 0, 0), tl, poly, 0, double);
                        }
                    }
                }
            }

            // staircase feeder update with its own pruning
            let mut stairs_next: FxHashMap<usize, R::Elem> = FxHashMap::default();
            for (&i, v) in &stairs {
                if (k + 2) + (i + 1) <= n_max {
                    let e = stairs_next.entry(i + 1).or_insert_with(|| self.ring.zero());
                    self.ring.add_assign(e, v);
                }
                if i >= 2 && (k + 2) + (i - 1) <= n_max {
                    let e = stairs_next.entry(i - 1).or_insert_with(|| self.ring.zero());
                    self.ring.add_assign(e, v);
                }
                if (k + 2) + i <= n_max {
                    let e = stairs_next.entry(i).or_insert_with(|| self.ring.zero());
                    self.ring.add_assign_double(e, v);
                }
            }
            stairs = stairs_next;
            states = next;
            let live = states.len() + stairs.len();
            let coeffs: usize = states.values().map(Vec::len).sum();
            self.stats.peak_states = self.stats.peak_states.max(live);
            self.stats.peak_coeffs = self.stats.peak_coeffs.max(coeffs);
        }
    }
}

fn imperfect_core<R: Ring>(n_max: usize, ring: &R) -> Result<(Vec<R::Elem>, SweepStats)> {
    if n_max < 4 {
        return Err(Error::InvalidArgument(
            "imperfect enumeration needs n_max >= 4".into(),
        ));
    }
    let mut sweep = Sweep {
        ring,
        n_max,
        p_out: vec![ring.zero(); n_max + 1],
        stats: SweepStats::default(),
    };
    sweep.run();
    Ok((sweep.p_out, sweep.stats))
}

/// Imperfect staircase polygon counts p_n mod p for n = 0…N.
pub fn enumerate_imperfect(n_max: usize, p: PrimeModulus) -> Result<ResidueSeries> {
    Ok(enumerate_imperfect_stats(n_max, p)?.0)
}

/// Modular imperfect counts together with sweep size statistics.
pub fn enumerate_imperfect_stats(
    n_max: usize,
    p: PrimeModulus,
) -> Result<(ResidueSeries, SweepStats)> {
    let ring = ModRing { p: p.value() };
    let (coeffs, stats) = imperfect_core(n_max, &ring)?;
    Ok((ResidueSeries { modulus: p, coeffs }, stats))
}

/// Exact-integer imperfect counts; cross-check mode for moderate N.
pub fn enumerate_imperfect_exact(n_max: usize) -> Result<IntegerSeries> {
    Ok(IntegerSeries::new(imperfect_core(n_max, &ExactRing)?.0))
}

/// t_n = 2n·c_n + 2·p_n.
pub fn assemble_t(c: &IntegerSeries, p: &IntegerSeries) -> Result<IntegerSeries> {
    if c.len() != p.len() {
        return Err(Error::LengthMismatch(c.len(), p.len()));
    }
    let coeffs = c
        .coeffs
        .iter()
        .zip(&p.coeffs)
        .enumerate()
        .map(|(n, (cn, pn))| Integer::from(cn * (2 * n as u64)) + Integer::from(pn * 2u32))
        .collect();
    Ok(IntegerSeries::new(coeffs))
}

const BRUTE_FORCE_LIMIT: usize = 12;

/// Exhaustive count of rooted directed three-choice walks that return to the
/// origin with no other self-intersection; the count of closed walks of
/// length 2n is exactly t_n (each staircase polygon yields 2n rooted walks,
/// each imperfect one yields 2).
pub fn brute_force_t(n_max: usize) -> Result<IntegerSeries> {
    if n_max > BRUTE_FORCE_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "brute force capped at n_max <= {BRUTE_FORCE_LIMIT}, got {n_max}"
        )));
    }
    // directions: 0=E 1=N 2=W 3=S; no right turn after a horizontal step,
    // no immediate reversal otherwise
    const ALLOWED: [&[usize]; 4] = [&[0, 1], &[1, 0, 2], &[2, 3], &[3, 0, 2]];
    const DXY: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

    let span = (2 * n_max + 2) as i64;
    let width = (2 * span + 1) as usize;
    let cell = |x: i64, y: i64| ((x + span) as usize) * width + (y + span) as usize;

    struct Dfs {
        t: Vec<u64>,
        visited: Vec<bool>,
        max_steps: usize,
        span: i64,
        width: usize,
    }
    impl Dfs {
        fn cell(&self, x: i64, y: i64) -> usize {
            ((x + self.span) as usize) * self.width + (y + self.span) as usize
        }
        fn walk(&mut self, x: i64, y: i64, last: usize, steps: usize) {
            if x.unsigned_abs() as usize + y.unsigned_abs() as usize > self.max_steps - steps {
                return;
            }
            const ALLOWED: [&[usize]; 4] = [&[0, 1], &[1, 0, 2], &[2, 3], &[3, 0, 2]];
            const DXY: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];
            for &d in ALLOWED[last] {
                let (dx, dy) = DXY[d];
                let (nx, ny) = (x + dx, y + dy);
                if nx == 0 && ny == 0 {
                    if (steps + 1) % 2 == 0 {
                        self.t[(steps + 1) / 2] += 1;
                    }
                    continue;
                }
                if steps + 1 >= self.max_steps {
                    continue;
                }
                let c = self.cell(nx, ny);
                if self.visited[c] {
                    continue;
                }
                self.visited[c] = true;
                self.walk(nx, ny, d, steps + 1);
                self.visited[c] = false;
            }
        }
    }

    let mut dfs = Dfs {
        t: vec![0; n_max + 1],
        visited: vec![false; width * width],
        max_steps: 2 * n_max,
        span,
        width,
    };
    if n_max >= 1 {
        for (d0, &(dx, dy)) in DXY.iter().enumerate() {
            let _ = ALLOWED; // same tables are used inside the walker
            let c = cell(dx, dy);
            dfs.visited[c] = true;
            dfs.walk(dx, dy, d0, 1);
            dfs.visited[c] = false;
        }
    }
    Ok(IntegerSeries::new(
        dfs.t.into_iter().map(Integer::from).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactarith::generate_prime_batch;
    use proptest::prelude::*;

    fn catalan(n: u32) -> Integer {
        Integer::from(2 * n).binomial(n) / Integer::from(n + 1)
    }

    const P_REF: [i64; 17] = [
        0, 0, 0, 0, 1, 6, 29, 130, 561, 2368, 9855, 40622, 166303, 677420, 2748952, 11122504,
        44898891,
    ];
    const T_REF: [i64; 17] = [
        0, 0, 4, 12, 42, 152, 562, 2108, 7986, 30476, 116950, 450756, 1743470, 6763152, 26299104,
        102478208, 400032822,
    ];

    #[test]
    fn staircase_is_catalan() {
        let c = enumerate_staircase(30).unwrap();
        for n in 2..=30 {
            assert_eq!(c.coeffs[n], catalan(n as u32 - 1), "c_{n}");
        }
        assert_eq!(c.coeffs[0], 0);
        assert_eq!(c.coeffs[1], 0);
        assert_eq!(c.coeffs[10], 4862);
    }

    #[test]
    fn staircase_minimal() {
        let c = enumerate_staircase(2).unwrap();
        assert_eq!(c.coeffs, vec![Integer::from(0), Integer::from(0), Integer::from(1)]);
        assert!(enumerate_staircase(1).is_err());
    }

    #[test]
    fn imperfect_exact_reference() {
        let p = enumerate_imperfect_exact(16).unwrap();
        assert_eq!(p, IntegerSeries::from_i64s(&P_REF));
    }

    #[test]
    fn imperfect_rejects_tiny() {
        assert!(enumerate_imperfect_exact(3).is_err());
    }

    #[test]
    fn assemble_reference_values() {
        let c = enumerate_staircase(16).unwrap();
        let p = enumerate_imperfect_exact(16).unwrap();
        let t = assemble_t(&c, &p).unwrap();
        assert_eq!(t, IntegerSeries::from_i64s(&T_REF));
        assert_eq!(t.coeffs[2], 4);
        assert_eq!(t.coeffs[6], 562);
    }

    #[test]
    fn assemble_length_mismatch() {
        let c = enumerate_staircase(10).unwrap();
        let p = enumerate_imperfect_exact(8).unwrap();
        assert!(assemble_t(&c, &p).is_err());
    }

    #[test]
    fn assemble_zero_imperfect() {
        let c = enumerate_staircase(6).unwrap();
        let zero = IntegerSeries::new(vec![Integer::new(); 7]);
        let t = assemble_t(&c, &zero).unwrap();
        for n in 0..=6 {
            assert_eq!(t.coeffs[n], Integer::from(2 * n as u64) * &c.coeffs[n]);
        }
    }

    #[test]
    fn modular_matches_exact() {
        let p = generate_prime_batch(1).unwrap()[0];
        let exact = enumerate_imperfect_exact(20).unwrap();
        let modular = enumerate_imperfect(20, p).unwrap();
        assert_eq!(exact.reduce(p), modular);
    }

    #[test]
    fn crt_lift_of_two_primes() {
        let primes = generate_prime_batch(2).unwrap();
        let parts: Vec<ResidueSeries> = primes
            .iter()
            .map(|&p| enumerate_imperfect(16, p).unwrap())
            .collect();
        let lifted = IntegerSeries::crt_lift(&parts).unwrap();
        assert_eq!(lifted, IntegerSeries::from_i64s(&P_REF));
    }

    #[test]
    fn brute_force_small() {
        let t = brute_force_t(7).unwrap();
        assert_eq!(t, IntegerSeries::from_i64s(&T_REF[..8]));
        assert_eq!(brute_force_t(1).unwrap().coeffs, vec![Integer::from(0); 2]);
        assert!(brute_force_t(13).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn pruning_is_sound(n in 4usize..18) {
            let small = enumerate_imperfect_exact(n).unwrap();
            let large = enumerate_imperfect_exact(n + 10).unwrap();
            prop_assert_eq!(&small.coeffs[..=n], &large.coeffs[..=n]);
        }

        #[test]
        fn modulus_independence(n in 4usize..16, which in 0usize..4) {
            let primes = generate_prime_batch(5).unwrap();
            let a = enumerate_imperfect(n, primes[which]).unwrap();
            let b = enumerate_imperfect(n, primes[which + 1]).unwrap();
            let exact = enumerate_imperfect_exact(n).unwrap();
            prop_assert_eq!(exact.reduce(primes[which]), a);
            prop_assert_eq!(exact.reduce(primes[which + 1]), b);
        }
    }
}
