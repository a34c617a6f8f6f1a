//! Offsets `a` coded by `(k, ξ)`, good-set counts by geometry and by
//! matrices, slice-dimension estimates and the conservation check.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_capacity, Error, Result};
use crate::exactgeom::{line_hits_triangle, rat, rat_int, Rational, RationalLine, SlopeSpec, TriangleCell};
use crate::matrixgen::{IntMatrix, TransitionPair};
use crate::measures::{basis, log_product, ones, WordMeasure};

pub const MAX_GEOMETRIC_DEPTH: usize = 20;
pub const MAX_UNPRUNED_DEPTH: usize = 12;
pub const MAX_INTERVAL_DYNAMICS_DEPTH: usize = 16;
/// Beyond this length matrix counts are reported in log form only.
pub const MAX_EXACT_COUNT_LENGTH: usize = 64;

/// Parses `"u/v"`, an integer, or a finite decimal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Validation(format!("cannot parse {s:?} as a rational"));
    if let Some((u, v)) = s.split_once('/') {
        let u: BigInt = u.trim().parse().map_err(|_| bad())?;
        let v: BigInt = v.trim().parse().map_err(|_| bad())?;
        if v.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(u, v));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            digits => digits.parse().map_err(|_| bad())?,
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = BigInt::from(10).pow(frac.len() as u32);
        let num = int_part * &den + frac.parse::<BigInt>().map_err(|_| bad())?;
        let x = Rational::new(num, den);
        return Ok(if negative { -x } else { x });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

fn word_string(w: &[u8]) -> String {
    w.iter().map(|b| char::from(b'0' + b)).collect()
}

/// Offset `a = 1 − (k−1)/q − (1/q)·Σ ξ_i 2^{−i}` with `ξ = prefix·period^∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyadicPointRef {
    slope: SlopeSpec,
    k: usize,
    prefix: Vec<u8>,
    period: Vec<u8>,
    value: Rational,
}

impl DyadicPointRef {
    /// An empty period means an all-zero tail.
    pub fn new(slope: &SlopeSpec, k: usize, prefix: Vec<u8>, period: Vec<u8>) -> Result<Self> {
        if k < 1 || k > slope.m() {
            return Err(Error::Validation(format!(
                "interval index {k} outside 1..={}",
                slope.m()
            )));
        }
        if prefix.iter().chain(&period).any(|&b| b > 1) {
            return Err(Error::Validation("expansion digits must be 0 or 1".into()));
        }
        let period = if period.is_empty() { vec![0] } else { period };
        let x = expansion_value(&prefix, &period);
        let q = slope.q() as i64;
        let value = rat(q - k as i64 + 1, q) - x / rat_int(q);
        Ok(DyadicPointRef {
            slope: slope.clone(),
            k,
            prefix,
            period,
            value,
        })
    }

    pub fn slope(&self) -> &SlopeSpec {
        &self.slope
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn prefix(&self) -> &[u8] {
        &self.prefix
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    /// True unless the tail is all ones.
    pub fn is_canonical(&self) -> bool {
        self.period.iter().any(|&b| b == 0)
    }

    /// First `n` digits of the expansion.
    pub fn digits(&self, n: usize) -> Vec<u8> {
        self.prefix
            .iter()
            .chain(self.period.iter().cycle())
            .take(n)
            .copied()
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.slope.p(),
            "q": self.slope.q(),
            "a": self.value.to_string(),
            "k": self.k,
            "prefix": word_string(&self.prefix),
            "period": word_string(&self.period),
        })
    }
}

fn expansion_value(prefix: &[u8], period: &[u8]) -> Rational {
    let mut x = Rational::zero();
    let mut w = rat(1, 2);
    for &b in prefix {
        if b == 1 {
            x += &w;
        }
        w /= rat_int(2);
    }
    // tail = 2^{-j} · P / (2^L − 1)
    let l = period.len() as u32;
    let p = period.iter().fold(BigInt::zero(), |acc, &b| acc * 2 + b);
    let tail = Rational::new(p, BigInt::from(2).pow(l) - 1);
    x + tail * w * rat_int(2)
}

/// Eventually periodic binary expansion of `x ∈ [0, 1)`, minimal preperiod
/// and period; a terminating expansion gets period `[0]`.
fn binary_expansion(x: &Rational) -> (Vec<u8>, Vec<u8>) {
    let den = x.denom().clone();
    let mut r = x.numer().clone();
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    let mut digits = Vec::new();
    loop {
        if let Some(&start) = seen.get(&r) {
            let period = digits.split_off(start);
            return (digits, period);
        }
        seen.insert(r.clone(), digits.len());
        r *= 2;
        if r >= den {
            digits.push(1);
            r -= &den;
        } else {
            digits.push(0);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedPoint {
    pub canonical: DyadicPointRef,
    /// The second coding of a point on a half-interval boundary.
    pub alternate: Option<DyadicPointRef>,
}

impl ExpandedPoint {
    pub fn is_boundary(&self) -> bool {
        self.alternate.is_some()
    }
}

/// Codes `a ∈ [−p/q, 1]`. The canonical coding has no all-ones tail except
/// at `a = −p/q`, where no other coding exists.
pub fn expand_point(slope: &SlopeSpec, a: &Rational) -> Result<ExpandedPoint> {
    if !slope.contains_offset(a) {
        return Err(Error::Domain(format!(
            "offset {a} outside [-{}/{}, 1]",
            slope.p(),
            slope.q()
        )));
    }
    let m = slope.m();
    let y = (rat_int(1) - a) * rat_int(slope.q() as i64);
    let fl = y.floor();
    let k = fl.to_integer().to_usize().expect("bounded") + 1;
    let x = &y - &fl;
    if k > m {
        // a = −p/q: x = 1 in the last interval
        let canonical = DyadicPointRef::new(slope, m, Vec::new(), vec![1])?;
        return Ok(ExpandedPoint {
            canonical,
            alternate: None,
        });
    }
    let (prefix, period) = binary_expansion(&x);
    let canonical = DyadicPointRef::new(slope, k, prefix.clone(), period.clone())?;
    let terminating = period == [0];
    let alternate = if !terminating {
        None
    } else if x.is_zero() {
        (k > 1).then(|| DyadicPointRef::new(slope, k - 1, Vec::new(), vec![1])).transpose()?
    } else {
        let mut alt = prefix;
        while alt.last() == Some(&0) {
            alt.pop();
        }
        *alt.last_mut().expect("nonzero expansion") = 0;
        Some(DyadicPointRef::new(slope, k, alt, vec![1])?)
    };
    Ok(ExpandedPoint {
        canonical,
        alternate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMethod {
    Geometric,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodSetCount {
    pub n: usize,
    /// Exact count when it was computed exactly.
    pub count: Option<BigUint>,
    pub log_count: f64,
    pub method: CountMethod,
}

impl GoodSetCount {
    fn exact(n: usize, count: BigUint, method: CountMethod) -> Self {
        let log_count = crate::matrixgen::big_to_f64(&count).ln();
        GoodSetCount {
            n,
            count: Some(count),
            log_count,
            method,
        }
    }
}

fn count_hits(line: &RationalLine, cell: &TriangleCell, depth_left: usize) -> u64 {
    if !line_hits_triangle(line, cell) {
        return 0;
    }
    if depth_left == 0 {
        return 1;
    }
    (0..3u8)
        .map(|b| count_hits(line, &cell.child(b).expect("ternary letter"), depth_left - 1))
        .sum()
}

/// Level-`n` cells of the right-angle gasket met by `y = a + (p/q)x`,
/// descending only into cells whose hull meets the line.
pub fn good_set_count_geometric(slope: &SlopeSpec, a: &Rational, n: usize) -> Result<GoodSetCount> {
    check_capacity("geometric descent depth", n, MAX_GEOMETRIC_DEPTH)?;
    let line = RationalLine::new(slope, a.clone())?;
    let root = TriangleCell::root();
    let total = if n == 0 {
        count_hits(&line, &root, 0)
    } else {
        (0..3u8)
            .into_par_iter()
            .map(|b| count_hits(&line, &root.child(b).expect("ternary letter"), n - 1))
            .sum()
    };
    Ok(GoodSetCount::exact(n, BigUint::from(total), CountMethod::Geometric))
}

/// Same count by testing all `3^n` cells.
pub fn good_set_count_geometric_unpruned(
    slope: &SlopeSpec,
    a: &Rational,
    n: usize,
) -> Result<GoodSetCount> {
    check_capacity("unpruned geometric depth", n, MAX_UNPRUNED_DEPTH)?;
    let line = RationalLine::new(slope, a.clone())?;
    let mut total = 0u64;
    let mut word = vec![0u8; n];
    for idx in 0..3u64.pow(n as u32) {
        let mut r = idx;
        for slot in word.iter_mut().rev() {
            *slot = (r % 3) as u8;
            r /= 3;
        }
        if line_hits_triangle(&line, &TriangleCell::from_word(&word)?) {
            total += 1;
        }
    }
    Ok(GoodSetCount::exact(n, BigUint::from(total), CountMethod::Geometric))
}

fn check_pair(tp: &TransitionPair, point: &DyadicPointRef) -> Result<()> {
    if tp.slope != *point.slope() {
        return Err(Error::Validation(format!(
            "point has slope {} but matrices are for {}",
            point.slope(),
            tp.slope
        )));
    }
    Ok(())
}

/// `e_k·A_{ξ1}⋯A_{ξn}·e` for the coding of `point`.
pub fn good_set_count_matrix(
    tp: &TransitionPair,
    point: &DyadicPointRef,
    n: usize,
) -> Result<GoodSetCount> {
    check_pair(tp, point)?;
    let word = point.digits(n);
    if n <= MAX_EXACT_COUNT_LENGTH {
        // rows of A_0, A_1 have at most two ones, so the sum at most doubles
        let mut v = vec![0u128; tp.dim()];
        v[point.k() - 1] = 1;
        let mut next = vec![0u128; tp.dim()];
        for &b in &word {
            tp.row_times(&v, b, &mut next);
            std::mem::swap(&mut v, &mut next);
        }
        let total: u128 = v.iter().sum();
        return Ok(GoodSetCount::exact(n, BigUint::from(total), CountMethod::Matrix));
    }
    let e = ones(tp.dim());
    let lv = log_product(tp, &word, &basis(tp.dim(), point.k()), &e)?;
    Ok(GoodSetCount {
        n,
        count: None,
        log_count: lv.log_value,
        method: CountMethod::Matrix,
    })
}

/// For every ternary word `i` of length `|word|`, applies the projected maps
/// `f_{i1}∘⋯∘f_{in}` to `I_j` and counts exact hits on each
/// `I_i^{word}`; entry `i−1` of the result is that count.
pub fn interval_dynamics_count(slope: &SlopeSpec, j: usize, word: &[u8]) -> Result<Vec<u64>> {
    let n = word.len();
    check_capacity("interval dynamics length", n, MAX_INTERVAL_DYNAMICS_DEPTH)?;
    let m = slope.m();
    if j < 1 || j > m {
        return Err(Error::Validation(format!("column index {j} outside 1..={m}")));
    }
    if word.iter().any(|&b| b > 1) {
        return Err(Error::Validation("binary word contains a letter other than 0, 1".into()));
    }
    // numerators over the common denominator q·2^n
    let (p, q) = (slope.p() as i64, slope.q() as i64);
    let scale = 1i64 << n;
    let hi = (q - j as i64 + 1) * scale;
    let lo = (q - j as i64) * scale;
    let shift = word
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == 1)
        .map(|(l, _)| 1i64 << (n - 1 - l))
        .sum::<i64>();
    // I_i^{word} upper end: (q − (i−1))·2^n − shift, length 1
    let targets: HashMap<i64, usize> = (1..=m)
        .map(|i| ((q - i as i64 + 1) * scale - shift, i))
        .collect();
    let mut counts = vec![0u64; m];
    fn go(
        lo: i64,
        hi: i64,
        left: usize,
        p: i64,
        q: i64,
        scale: i64,
        targets: &HashMap<i64, usize>,
        counts: &mut [u64],
    ) {
        if left == 0 {
            if hi - lo == 1 {
                if let Some(&i) = targets.get(&hi) {
                    counts[i - 1] += 1;
                }
            }
            return;
        }
        // f0(t) = t/2, f1(t) = t/2 + 1/2, f2(t) = t/2 − p/(2q)
        for offset in [0, q * scale / 2, -p * scale / 2] {
            go(lo / 2 + offset, hi / 2 + offset, left - 1, p, q, scale, targets, counts);
        }
    }
    go(lo, hi, n, p, q, scale, &targets, &mut counts);
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceDimensionEstimate {
    pub ns: Vec<usize>,
    pub estimates: Vec<f64>,
    /// Minimum and maximum over the second half of `ns`.
    pub liminf_proxy: f64,
    pub limsup_proxy: f64,
    /// Exact limit for the eventually periodic coding, from the spectral
    /// radius of the period product.
    pub periodic_limit: f64,
}

/// `ln(count)/(n log 2)` for each `n`, plus the periodic limit.
pub fn slice_dimension_estimate(
    tp: &TransitionPair,
    point: &DyadicPointRef,
    ns: &[usize],
) -> Result<SliceDimensionEstimate> {
    check_pair(tp, point)?;
    if ns.is_empty() || ns.contains(&0) {
        return Err(Error::Validation("depth list must be nonempty and positive".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    let estimates = ns
        .iter()
        .map(|&n| Ok(good_set_count_matrix(tp, point, n)?.log_count / (n as f64 * ln2)))
        .collect::<Result<Vec<f64>>>()?;
    let tail = &estimates[ns.len() / 2..];
    Ok(SliceDimensionEstimate {
        ns: ns.to_vec(),
        liminf_proxy: tail.iter().copied().fold(f64::INFINITY, f64::min),
        limsup_proxy: tail.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        estimates,
        periodic_limit: periodic_limit(tp, point)?,
    })
}

/// `ln ρ/(L log 2)` where `ρ` is the spectral radius of the period product
/// restricted to the coordinates reachable from `e_k·A_prefix`.
pub fn periodic_limit(tp: &TransitionPair, point: &DyadicPointRef) -> Result<f64> {
    check_pair(tp, point)?;
    let dim = tp.dim();
    let mut v = vec![0u128; dim];
    v[point.k() - 1] = 1;
    let mut next = vec![0u128; dim];
    for &b in point.prefix() {
        tp.row_times(&v, b, &mut next);
        std::mem::swap(&mut v, &mut next);
        // only the support matters
        v.iter_mut().for_each(|x| *x = (*x).min(1));
    }
    let mut m = IntMatrix::identity(dim);
    for &b in point.period() {
        m = m
            .checked_mul(tp.matrix(b))
            .ok_or_else(|| Error::Capacity {
                what: "period product entries",
                requested: point.period().len() as u64,
                limit: 64,
            })?;
    }
    let mut reach: Vec<bool> = v.iter().map(|&x| x > 0).collect();
    let mut stack: Vec<usize> = (0..dim).filter(|&i| reach[i]).collect();
    while let Some(i) = stack.pop() {
        for j in 0..dim {
            if m.get(i, j) > 0 && !reach[j] {
                reach[j] = true;
                stack.push(j);
            }
        }
    }
    let idx: Vec<usize> = (0..dim).filter(|&i| reach[i]).collect();
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |r, c| m.get(idx[r], idx[c]) as f64);
    let rho = sub
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if rho <= 0.0 {
        return Err(Error::Invariant(
            "period product is nilpotent on the reachable coordinates".into(),
        ));
    }
    Ok(rho.ln() / (point.period().len() as f64 * std::f64::consts::LN_2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservationReport {
    pub n: usize,
    pub local_dim: f64,
    pub box_dim: f64,
    pub deviation: f64,
    /// `(ln(1/p_min) + ln(p+q))/(n log 2)`.
    pub envelope: f64,
    /// The `e_k` row product vanished.
    pub degenerate: bool,
}

/// `ν`-local dimension and box dimension of the slice at level `n`, and how
/// far their sum is from `s`.
pub fn conservation_check(
    wm: &WordMeasure<'_>,
    point: &DyadicPointRef,
    n: usize,
) -> Result<ConservationReport> {
    let tp = wm.transition_pair();
    check_pair(tp, point)?;
    if n == 0 {
        return Err(Error::Validation("conservation depth must be >= 1".into()));
    }
    let ln2 = std::f64::consts::LN_2;
    let scale = n as f64 * ln2;
    let word = point.digits(n);
    let left = basis(tp.dim(), point.k());
    let lp = log_product(tp, &word, &left, wm.perron().values())?;
    let le = log_product(tp, &word, &left, &ones(tp.dim()))?;
    let local_dim = (n as f64 * 3f64.ln() - lp.log_value) / scale;
    let box_dim = le.log_value / scale;
    let degenerate = lp.is_zero_product() || le.is_zero_product();
    // local + box − s, with the n·ln 3 terms cancelled symbolically
    let deviation = if degenerate {
        f64::NAN
    } else {
        (le.log_value - lp.log_value) / scale
    };
    let envelope = (-wm.perron().min().ln() + (tp.dim() as f64).ln()) / scale;
    Ok(ConservationReport {
        n,
        local_dim,
        box_dim,
        deviation,
        envelope,
        degenerate,
    })
}

/// A point drawn from the natural measure on offsets: `(k, ξ)` has
/// probability `3^{-n}·e_k·A_ξ·p`. The coding is truncated to `n` digits
/// followed by zeros.
pub fn sample_natural_point(wm: &WordMeasure<'_>, n: usize, seed: u64) -> Result<DyadicPointRef> {
    let tp = wm.transition_pair();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut word = Vec::with_capacity(n);
    let rp = wm.sample_with(&mut rng, n, |b, _| word.push(b));
    let weights: Vec<f64> = rp
        .direction()
        .iter()
        .zip(wm.perron().values())
        .map(|(u, p)| u * p)
        .collect();
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    let mut k = tp.dim();
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            k = i + 1;
            break;
        }
        r -= w;
    }
    DyadicPointRef::new(&tp.slope, k, word, vec![0])
}

/// Uniformly random rational in `[−p/q, 1]` with denominator up to
/// `max_den`, avoiding dyadic boundaries (odd denominators > 1).
pub fn random_interior_offset<R: Rng + ?Sized>(
    rng: &mut R,
    slope: &SlopeSpec,
    max_den: i64,
) -> Rational {
    let (p, q) = (slope.p() as i64, slope.q() as i64);
    loop {
        let den = rng.random_range(1..=max_den) * 2 + 1;
        let d = den * q;
        let num = rng.random_range(-p * den..=q * den);
        let a = Rational::new(BigInt::from(num), BigInt::from(d));
        // a·q·2^n never an integer when the reduced denominator of a·q is odd > 1
        let aq = &a * rat_int(q);
        if aq.denom() > &BigInt::one() && aq.denom().is_odd() && slope.contains_offset(&a) {
            return a;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub point: serde_json::Value,
    pub boundary: bool,
    pub alternate: Option<serde_json::Value>,
    pub counts: Vec<(usize, Option<String>, f64)>,
    pub alternate_counts: Option<Vec<(usize, Option<String>, f64)>>,
    pub estimate: SliceDimensionEstimate,
    pub conservation: Vec<ConservationReport>,
}

/// Everything the slice subcommand prints for one offset.
pub fn slice_report(wm: &WordMeasure<'_>, a: &Rational, ns: &[usize]) -> Result<SliceReport> {
    let tp = wm.transition_pair();
    let ex = expand_point(&tp.slope, a)?;
    let counts_for = |pt: &DyadicPointRef| -> Result<Vec<(usize, Option<String>, f64)>> {
        ns.iter()
            .map(|&n| {
                let c = good_set_count_matrix(tp, pt, n)?;
                Ok((n, c.count.map(|x| x.to_string()), c.log_count))
            })
            .collect()
    };
    Ok(SliceReport {
        point: ex.canonical.to_json(),
        boundary: ex.is_boundary(),
        alternate: ex.alternate.as_ref().map(|p| p.to_json()),
        counts: counts_for(&ex.canonical)?,
        alternate_counts: ex.alternate.as_ref().map(counts_for).transpose()?,
        estimate: slice_dimension_estimate(tp, &ex.canonical, ns)?,
        conservation: ns
            .iter()
            .map(|&n| conservation_check(wm, &ex.canonical, n))
            .collect::<Result<_>>()?,
    })
}

impl ConservationReport {
    pub fn within_envelope(&self) -> bool {
        !self.degenerate && self.deviation.abs() <= self.envelope
    }
}
