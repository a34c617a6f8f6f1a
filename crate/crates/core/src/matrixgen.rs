//! Transition matrices `A_0`, `A_1` of the projected IFS.
//!
//! Indices: the public API and all reports use interval indices
//! `k = 1..=p+q` as in `I_k`; storage is 0-based (`row = i - 1`).
//!
//! Digit convention for the halves of `I_k`: digit 0 is the upper half
//! `[1 - (2k-1)/(2q), 1 - (k-1)/q]`, digit 1 the lower half. This is the
//! convention under which `a = 1 - (k-1)/q - (1/q)·Σ ξ_i 2^{-i}` reads the
//! binary digits of `a` directly.

use std::collections::{HashSet, VecDeque};
use std::fmt::{self, Write as _};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{check_capacity, Error, Result};
use crate::exactgeom::{rat, Rational, SlopeSpec};

/// Largest `p + q` accepted by the zero-pattern routines (one `u128` per row).
pub const MAX_PATTERN_DIM: usize = 128;
/// Largest word length enumerated by [`count_degenerate_words`].
pub const MAX_ENUMERATION_DEPTH: usize = 26;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        Interval { lo, hi }
    }

    pub fn length(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Rational) -> bool {
        *x >= self.lo && *x <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// `[-p/q, 1]` cut into `I_k = [1 - k/q, 1 - (k-1)/q]`, `k = 1..=p+q`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalPartition {
    pub slope: SlopeSpec,
    intervals: Vec<Interval>,
}

pub fn build_partition(slope: &SlopeSpec) -> IntervalPartition {
    let q = slope.q() as i64;
    let intervals = (1..=slope.m() as i64)
        .map(|k| Interval::new(rat(q - k, q), rat(q - k + 1, q)))
        .collect();
    IntervalPartition {
        slope: slope.clone(),
        intervals,
    }
}

impl IntervalPartition {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// `I_k`, 1-based.
    pub fn interval(&self, k: usize) -> &Interval {
        &self.intervals[k - 1]
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    /// Half `I_k^digit`; digit 0 is the upper half.
    pub fn half(&self, k: usize, digit: u8) -> Interval {
        let iv = self.interval(k);
        let mid = (&iv.lo + &iv.hi) / rat(2, 1);
        match digit {
            0 => Interval::new(mid, iv.hi.clone()),
            _ => Interval::new(iv.lo.clone(), mid),
        }
    }

    /// Finds `(k, digit)` with `I_k^digit == iv` exactly.
    pub fn locate_half(&self, iv: &Interval) -> Option<(usize, u8)> {
        (1..=self.len())
            .flat_map(|k| [(k, 0u8), (k, 1u8)])
            .find(|&(k, d)| self.half(k, d) == *iv)
    }
}

/// Square matrix of nonnegative integers, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<u64>,
}

impl IntMatrix {
    pub fn zeros(dim: usize) -> Self {
        IntMatrix {
            dim,
            entries: vec![0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds from rows; panics if not square.
    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "matrix must be square");
        IntMatrix {
            dim,
            entries: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 0-based access.
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn add_to(&mut self, row: usize, col: usize, value: u64) {
        self.entries[row * self.dim + col] += value;
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.entries.chunks(self.dim).map(<[u64]>::to_vec).collect()
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        (0..self.dim).map(|c| self.get(row, c)).sum()
    }

    pub fn col_sum(&self, col: usize) -> u64 {
        (0..self.dim).map(|r| self.get(r, col)).sum()
    }

    pub fn nonzero_in_row(&self, row: usize) -> usize {
        (0..self.dim).filter(|&c| self.get(row, c) != 0).count()
    }

    pub fn nonzero_in_col(&self, col: usize) -> usize {
        (0..self.dim).filter(|&r| self.get(r, col) != 0).count()
    }

    pub fn checked_mul(&self, rhs: &IntMatrix) -> Option<IntMatrix> {
        let n = self.dim;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let v = a.checked_mul(rhs.get(l, j))?;
                    let cur = out.get(i, j).checked_add(v)?;
                    out.set(i, j, cur);
                }
            }
        }
        Some(out)
    }

    pub fn add(&self, rhs: &IntMatrix) -> IntMatrix {
        IntMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.entries.iter().all(|&v| v > 0)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// The pair `A_0`, `A_1` with sparse views used by the hot loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionPair {
    pub slope: SlopeSpec,
    pub partition: IntervalPartition,
    matrices: [IntMatrix; 2],
    /// `col_support[b][j]`: rows `i` with `(A_b)_{ij} != 0`, repeated by multiplicity.
    #[serde(skip)]
    col_support: [Vec<Vec<usize>>; 2],
    /// `row_support[b][i]`: columns `j` with `(A_b)_{ij} != 0`, repeated by multiplicity.
    #[serde(skip)]
    row_support: [Vec<Vec<usize>>; 2],
}

fn supports(m: &IntMatrix) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let n = m.dim();
    let mut cols = vec![Vec::new(); n];
    let mut rows = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            for _ in 0..m.get(i, j) {
                cols[j].push(i);
                rows[i].push(j);
            }
        }
    }
    (cols, rows)
}

impl TransitionPair {
    pub fn new(slope: SlopeSpec, a0: IntMatrix, a1: IntMatrix) -> Result<Self> {
        let m = slope.m();
        if a0.dim() != m || a1.dim() != m {
            return Err(Error::Validation(format!(
                "matrices must be {m}x{m} for slope {slope}"
            )));
        }
        let (c0, r0) = supports(&a0);
        let (c1, r1) = supports(&a1);
        Ok(TransitionPair {
            partition: build_partition(&slope),
            slope,
            matrices: [a0, a1],
            col_support: [c0, c1],
            row_support: [r0, r1],
        })
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    pub fn matrix(&self, letter: u8) -> &IntMatrix {
        &self.matrices[letter as usize]
    }

    pub fn a0(&self) -> &IntMatrix {
        &self.matrices[0]
    }

    pub fn a1(&self) -> &IntMatrix {
        &self.matrices[1]
    }

    pub fn sum(&self) -> IntMatrix {
        self.matrices[0].add(&self.matrices[1])
    }

    pub fn col_support(&self, letter: u8) -> &[Vec<usize>] {
        &self.col_support[letter as usize]
    }

    pub fn row_support(&self, letter: u8) -> &[Vec<usize>] {
        &self.row_support[letter as usize]
    }

    /// Row vector times `A_letter`, written into `out`.
    #[inline]
    pub fn row_times<T>(&self, v: &[T], letter: u8, out: &mut [T])
    where
        T: Copy + std::ops::Add<Output = T> + Default,
    {
        for (j, rows) in self.col_support[letter as usize].iter().enumerate() {
            let mut acc = T::default();
            for &i in rows {
                acc = acc + v[i];
            }
            out[j] = acc;
        }
    }

    /// `A_letter` times column vector, written into `out`.
    #[inline]
    pub fn times_col<T>(&self, letter: u8, v: &[T], out: &mut [T])
    where
        T: Copy + std::ops::Add<Output = T> + Default,
    {
        for (i, cols) in self.row_support[letter as usize].iter().enumerate() {
            let mut acc = T::default();
            for &j in cols {
                acc = acc + v[j];
            }
            out[i] = acc;
        }
    }

    /// Exact product `A_{w1}⋯A_{wn}` (identity for the empty word).
    pub fn product(&self, word: &[u8]) -> Vec<Vec<BigUint>> {
        let n = self.dim();
        let mut acc: Vec<Vec<BigUint>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigUint::one() } else { BigUint::zero() })
                    .collect()
            })
            .collect();
        for &b in word {
            let a = self.matrix(b);
            acc = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let mut s = BigUint::zero();
                            for l in 0..n {
                                let e = a.get(l, j);
                                if e != 0 {
                                    s += &acc[i][l] * e;
                                }
                            }
                            s
                        })
                        .collect()
                })
                .collect();
        }
        acc
    }

    /// CSV export: one line per matrix row, columns `p,q,matrix,row,c1..cm`.
    pub fn to_csv(&self) -> String {
        let m = self.dim();
        let mut out = String::from("p,q,matrix,row");
        for j in 1..=m {
            let _ = write!(out, ",c{j}");
        }
        out.push('\n');
        for (name, mat) in [("A0", self.a0()), ("A1", self.a1())] {
            for (i, row) in mat.rows().iter().enumerate() {
                let _ = write!(out, "{},{},{},{}", self.slope.p(), self.slope.q(), name, i + 1);
                for v in row {
                    let _ = write!(out, ",{v}");
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.slope.p(),
            "q": self.slope.q(),
            "A0": self.a0().rows(),
            "A1": self.a1().rows(),
        })
    }
}

fn projected_map(slope: &SlopeSpec, k: u8, t: &Rational) -> Rational {
    let half = rat(1, 2);
    match k {
        0 => t * &half,
        1 => t * &half + &half,
        _ => t * &half - rat(slope.p() as i64, 2 * slope.q() as i64),
    }
}

/// Builds `A_0`, `A_1` by mapping every `I_j` through `f_0, f_1, f_2` and
/// locating the image among the half-intervals.
pub fn build_matrices_geometric(slope: &SlopeSpec) -> Result<TransitionPair> {
    let partition = build_partition(slope);
    let m = slope.m();
    let mut a = [IntMatrix::zeros(m), IntMatrix::zeros(m)];
    for j in 1..=m {
        let src = partition.interval(j);
        for k in 0..3u8 {
            let image = Interval::new(
                projected_map(slope, k, &src.lo),
                projected_map(slope, k, &src.hi),
            );
            let (i, digit) = partition.locate_half(&image).ok_or_else(|| {
                Error::Invariant(format!(
                    "f_{k}(I_{j}) = {image} is not a half-interval for slope {slope}"
                ))
            })?;
            a[digit as usize].add_to(i - 1, j - 1, 1);
        }
    }
    let [a0, a1] = a;
    TransitionPair::new(slope.clone(), a0, a1)
}

/// Residue of `x` modulo `m` in `{1, …, m}`.
fn residue(x: i64, m: i64) -> i64 {
    (x - 1).rem_euclid(m) + 1
}

/// Builds `A_0`, `A_1` from the closed-form congruences:
/// `(A_n)_{ij} = 1` iff `2i-1+n ≡ j`, or `2q+p ≥ 2i+n-1 ≥ q+1` and
/// `2i-1+n-q ≡ j` (mod `p+q`).
pub fn build_matrices_congruence(slope: &SlopeSpec) -> Result<TransitionPair> {
    let (p, q) = (slope.p() as i64, slope.q() as i64);
    let m = p + q;
    let mut a = [IntMatrix::zeros(m as usize), IntMatrix::zeros(m as usize)];
    for (n, mat) in a.iter_mut().enumerate() {
        let n = n as i64;
        for i in 1..=m {
            let base = 2 * i - 1 + n;
            for j in 1..=m {
                let first = residue(base, m) == j;
                let second = (q + 1..=2 * q + p).contains(&base) && residue(base - q, m) == j;
                if first || second {
                    mat.set((i - 1) as usize, (j - 1) as usize, 1);
                }
            }
        }
    }
    let [a0, a1] = a;
    TransitionPair::new(slope.clone(), a0, a1)
}

/// One failed structural check. Indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    EntryAboveOne { letter: u8, row: usize, col: usize, value: u64 },
    RowOnes { letter: u8, row: usize, count: usize },
    ColumnOnes { letter: u8, col: usize, count: usize },
    ColumnSum { col: usize, sum: u64 },
    NoColumnMatching { letter: u8, unmatched_col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EntryAboveOne { letter, row, col, value } => {
                write!(f, "A{letter}[{row},{col}] = {value} (expected 0 or 1)")
            }
            Violation::RowOnes { letter, row, count } => {
                write!(f, "A{letter} row {row} has {count} nonzero entries (expected 1 or 2)")
            }
            Violation::ColumnOnes { letter, col, count } => {
                write!(f, "A{letter} column {col} has {count} nonzero entries (expected 1 or 2)")
            }
            Violation::ColumnSum { col, sum } => {
                write!(f, "column {col} of A0+A1 sums to {sum} (expected 3)")
            }
            Violation::NoColumnMatching { letter, unmatched_col } => {
                write!(f, "A{letter} has no permutation submatrix (column {unmatched_col} unmatched)")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// For each letter, the matched row (1-based) of each column when a
    /// column-covering permutation exists.
    pub matchings: [Option<Vec<usize>>; 2],
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Kuhn's augmenting-path matching of columns to rows over nonzero entries.
/// Returns `match_row[col]` (0-based) or the first column left unmatched.
fn column_matching(m: &IntMatrix) -> std::result::Result<Vec<usize>, usize> {
    let n = m.dim();
    let mut row_owner: Vec<Option<usize>> = vec![None; n];

    fn augment(
        m: &IntMatrix,
        col: usize,
        seen: &mut [bool],
        row_owner: &mut [Option<usize>],
    ) -> bool {
        for row in 0..m.dim() {
            if m.get(row, col) == 0 || seen[row] {
                continue;
            }
            seen[row] = true;
            let free = match row_owner[row] {
                None => true,
                Some(other) => augment(m, other, seen, row_owner),
            };
            if free {
                row_owner[row] = Some(col);
                return true;
            }
        }
        false
    }

    for col in 0..n {
        let mut seen = vec![false; n];
        if !augment(m, col, &mut seen, &mut row_owner) {
            return Err(col);
        }
    }
    let mut match_row = vec![0; n];
    for (row, owner) in row_owner.iter().enumerate() {
        if let Some(col) = owner {
            match_row[*col] = row;
        }
    }
    Ok(match_row)
}

/// Checks the structural facts: 1–2 ones per row and column of each
/// `A_n`, column sums of `A_0 + A_1` equal to 3, and a column-covering
/// permutation submatrix in each `A_n`.
pub fn validate_structure(tp: &TransitionPair) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = tp.dim();
    for letter in 0..2u8 {
        let a = tp.matrix(letter);
        for row in 0..n {
            for col in 0..n {
                let value = a.get(row, col);
                if value > 1 {
                    report.violations.push(Violation::EntryAboveOne {
                        letter,
                        row: row + 1,
                        col: col + 1,
                        value,
                    });
                }
            }
        }
        for row in 0..n {
            let count = a.nonzero_in_row(row);
            if !(1..=2).contains(&count) {
                report.violations.push(Violation::RowOnes { letter, row: row + 1, count });
            }
        }
        for col in 0..n {
            let count = a.nonzero_in_col(col);
            if !(1..=2).contains(&count) {
                report.violations.push(Violation::ColumnOnes { letter, col: col + 1, count });
            }
        }
        match column_matching(a) {
            Ok(rows) => {
                report.matchings[letter as usize] = Some(rows.into_iter().map(|r| r + 1).collect())
            }
            Err(col) => report.violations.push(Violation::NoColumnMatching {
                letter,
                unmatched_col: col + 1,
            }),
        }
    }
    let sum = tp.sum();
    for col in 0..n {
        let s = sum.col_sum(col);
        if s != 3 {
            report.violations.push(Violation::ColumnSum { col: col + 1, sum: s });
        }
    }
    report
}

/// Zero/nonzero pattern of a `d×d` matrix, one `u128` bitmask per row.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ZeroPattern {
    rows: Vec<u128>,
}

impl ZeroPattern {
    pub fn of(m: &IntMatrix) -> Self {
        let n = m.dim();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| m.get(i, j) != 0)
                    .fold(0u128, |acc, j| acc | (1u128 << j))
            })
            .collect();
        ZeroPattern { rows }
    }

    pub fn identity(dim: usize) -> Self {
        ZeroPattern {
            rows: (0..dim).map(|i| 1u128 << i).collect(),
        }
    }

    fn full_mask(&self) -> u128 {
        let n = self.rows.len();
        if n == 128 {
            u128::MAX
        } else {
            (1u128 << n) - 1
        }
    }

    /// Pattern of `self · rhs`.
    pub fn then(&self, rhs: &ZeroPattern) -> ZeroPattern {
        let rows = self
            .rows
            .iter()
            .map(|&mask| {
                let mut out = 0u128;
                let mut bits = mask;
                while bits != 0 {
                    let l = bits.trailing_zeros() as usize;
                    out |= rhs.rows[l];
                    bits &= bits - 1;
                }
                out
            })
            .collect();
        ZeroPattern { rows }
    }

    pub fn is_positive(&self) -> bool {
        let full = self.full_mask();
        self.rows.iter().all(|&r| r == full)
    }

    pub fn zero_count(&self) -> usize {
        let n = self.rows.len();
        self.rows.iter().map(|r| n - r.count_ones() as usize).sum()
    }

    /// Zeros in column `j` (0-based).
    pub fn column_zeros(&self, j: usize) -> usize {
        self.rows.iter().filter(|&&r| r & (1u128 << j) == 0).count()
    }

    /// Zeros in row `i` (0-based).
    pub fn row_zeros(&self, i: usize) -> usize {
        self.rows.len() - self.rows[i].count_ones() as usize
    }
}

fn letter_patterns(tp: &TransitionPair) -> Result<[ZeroPattern; 2]> {
    check_capacity("p+q for zero patterns", tp.dim(), MAX_PATTERN_DIM)?;
    Ok([ZeroPattern::of(tp.a0()), ZeroPattern::of(tp.a1())])
}

/// Zero pattern of `A_{w1}⋯A_{wn}`.
pub fn word_pattern(tp: &TransitionPair, word: &[u8]) -> Result<ZeroPattern> {
    let letters = letter_patterns(tp)?;
    Ok(word
        .iter()
        .fold(ZeroPattern::identity(tp.dim()), |acc, &b| acc.then(&letters[b as usize])))
}

/// Upper bound `(p+q)(p+q-1) + 1` on the shortest primitive word.
pub fn primitive_length_bound(dim: usize) -> usize {
    dim * (dim - 1) + 1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivityCertificate {
    pub word: Vec<u8>,
    pub n0: usize,
    pub product_min_entry: BigUint,
    pub length_bound: usize,
}

/// Breadth-first search over zero patterns for a shortest word whose
/// product is entrywise positive.
pub fn find_primitive_word(tp: &TransitionPair) -> Result<PrimitivityCertificate> {
    let letters = letter_patterns(tp)?;
    let bound = primitive_length_bound(tp.dim());
    let mut seen: HashSet<ZeroPattern> = HashSet::new();
    let mut queue: VecDeque<(ZeroPattern, Vec<u8>)> = VecDeque::new();
    for b in 0..2u8 {
        let pat = letters[b as usize].clone();
        if seen.insert(pat.clone()) {
            queue.push_back((pat, vec![b]));
        }
    }
    while let Some((pat, word)) = queue.pop_front() {
        if pat.is_positive() {
            if word.len() > bound {
                break;
            }
            let product = tp.product(&word);
            let min = product
                .iter()
                .flatten()
                .min()
                .cloned()
                .unwrap_or_default();
            return Ok(PrimitivityCertificate {
                n0: word.len(),
                word,
                product_min_entry: min,
                length_bound: bound,
            });
        }
        if word.len() >= bound {
            continue;
        }
        for b in 0..2u8 {
            let next = pat.then(&letters[b as usize]);
            if seen.insert(next.clone()) {
                let mut w = word.clone();
                w.push(b);
                queue.push_back((next, w));
            }
        }
    }
    Err(Error::Invariant(format!(
        "no positive product of length <= {bound} for slope {}",
        tp.slope
    )))
}

/// `Σ_{l=0}^{(p+q-1)(p+q)-1} C(n,l)·2^l`.
pub fn degenerate_word_bound(dim: usize, n: usize) -> BigUint {
    let top = (dim * (dim - 1)).saturating_sub(1).min(n);
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for l in 0..=top {
        if l > 0 {
            binom = binom * BigUint::from(n - l + 1) / BigUint::from(l);
        }
        total += &binom << l;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateCount {
    pub n: usize,
    pub count: u64,
    pub bound: BigUint,
}

impl DegenerateCount {
    pub fn fraction(&self) -> f64 {
        self.count as f64 / 2f64.powi(self.n as i32)
    }
}

/// Exact number of binary words of length `n` whose product has a zero
/// entry, checked against [`degenerate_word_bound`].
pub fn count_degenerate_words(tp: &TransitionPair, n: usize) -> Result<DegenerateCount> {
    if n == 0 {
        return Err(Error::Validation("word length must be >= 1".into()));
    }
    check_capacity("word length", n, MAX_ENUMERATION_DEPTH)?;
    let letters = letter_patterns(tp)?;

    fn walk(pat: &ZeroPattern, depth_left: usize, letters: &[ZeroPattern; 2]) -> u64 {
        if pat.is_positive() {
            return 0;
        }
        if depth_left == 0 {
            return 1;
        }
        (0..2)
            .map(|b| walk(&pat.then(&letters[b]), depth_left - 1, letters))
            .sum()
    }

    let count = walk(&ZeroPattern::identity(tp.dim()), n, &letters);
    let bound = degenerate_word_bound(tp.dim(), n);
    if BigUint::from(count) > bound {
        return Err(Error::Invariant(format!(
            "{count} degenerate words of length {n} exceed the bound {bound}"
        )));
    }
    Ok(DegenerateCount { n, count, bound })
}

/// Fraction helper for callers that only need `f64`.
pub fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactgeom::make_slope;

    fn displayed_pair() -> (IntMatrix, IntMatrix) {
        let parse = |rows: [&str; 5]| {
            IntMatrix::from_rows(
                &rows
                    .iter()
                    .map(|r| r.bytes().map(|b| (b - b'0') as u64).collect())
                    .collect::<Vec<_>>(),
            )
        };
        (
            parse(["10000", "00100", "01001", "01010", "00010"]),
            parse(["01000", "10010", "10100", "00101", "00001"]),
        )
    }

    #[test]
    fn partition_two_thirds() {
        let part = build_partition(&make_slope(2, 3).unwrap());
        assert_eq!(part.len(), 5);
        assert_eq!(part.interval(1), &Interval::new(rat(2, 3), rat(1, 1)));
        assert_eq!(part.interval(5), &Interval::new(rat(-2, 3), rat(-1, 3)));
        for k in 1..=5 {
            assert_eq!(part.interval(k).length(), rat(1, 3));
            assert_eq!(part.half(k, 0).length(), rat(1, 6));
            assert_eq!(part.half(k, 0).hi, part.interval(k).hi);
            assert_eq!(part.half(k, 1).lo, part.interval(k).lo);
        }
    }

    #[test]
    fn partition_unit_slope() {
        let part = build_partition(&make_slope(1, 1).unwrap());
        assert_eq!(
            part.intervals(),
            &[
                Interval::new(rat(0, 1), rat(1, 1)),
                Interval::new(rat(-1, 1), rat(0, 1))
            ]
        );
    }

    #[test]
    fn partitions_tile_projection() {
        for (p, q) in [(1, 1), (2, 3), (5, 2), (1, 7)] {
            let s = make_slope(p, q).unwrap();
            let part = build_partition(&s);
            assert_eq!(part.interval(1).hi, rat(1, 1));
            assert_eq!(part.interval(part.len()).lo, s.projection_min());
            for k in 1..part.len() {
                assert_eq!(part.interval(k).lo, part.interval(k + 1).hi);
            }
        }
    }

    #[test]
    fn both_builders_reproduce_displayed_matrices() {
        let s = make_slope(2, 3).unwrap();
        let (a0, a1) = displayed_pair();
        for tp in [
            build_matrices_geometric(&s).unwrap(),
            build_matrices_congruence(&s).unwrap(),
        ] {
            assert_eq!(tp.a0(), &a0);
            assert_eq!(tp.a1(), &a1);
        }
    }

    #[test]
    fn unit_slope_matrices() {
        let s = make_slope(1, 1).unwrap();
        let a0 = IntMatrix::from_rows(&[vec![1, 0], vec![1, 1]]);
        let a1 = IntMatrix::from_rows(&[vec![1, 1], vec![0, 1]]);
        for tp in [
            build_matrices_geometric(&s).unwrap(),
            build_matrices_congruence(&s).unwrap(),
        ] {
            assert_eq!(tp.a0(), &a0);
            assert_eq!(tp.a1(), &a1);
        }
    }

    #[test]
    fn half_slope_builders_agree() {
        let s = make_slope(1, 2).unwrap();
        let g = build_matrices_geometric(&s).unwrap();
        let c = build_matrices_congruence(&s).unwrap();
        assert_eq!(g.dim(), 3);
        assert_eq!(g, c);
    }

    #[test]
    fn printed_congruence_reading_disagrees() {
        // 2i+1-n ≡ j puts the single one of row 1 of A0 in column 3
        let s = make_slope(2, 3).unwrap();
        let m = 5;
        let col = residue(2 * 1 + 1, m);
        assert_eq!(col, 3);
        let (a0, _) = displayed_pair();
        assert_eq!(a0.get(0, 2), 0);
        assert_eq!(build_matrices_congruence(&s).unwrap().a0().get(0, 0), 1);
    }

    #[test]
    fn structure_passes_on_displayed_matrices() {
        let tp = build_matrices_congruence(&make_slope(2, 3).unwrap()).unwrap();
        let report = validate_structure(&tp);
        assert!(report.is_ok(), "{:?}", report.violations);
    }

    #[test]
    fn zero_column_is_reported() {
        let s = make_slope(2, 3).unwrap();
        let tp = build_matrices_congruence(&s).unwrap();
        let mut a0 = tp.a0().clone();
        for r in 0..5 {
            a0.set(r, 3, 0);
        }
        let broken = TransitionPair::new(s, a0, tp.a1().clone()).unwrap();
        let report = validate_structure(&broken);
        assert!(report
            .violations
            .contains(&Violation::ColumnOnes { letter: 0, col: 4, count: 0 }));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::ColumnSum { col: 4, .. })));
    }

    #[test]
    fn unit_slope_matching() {
        let tp = build_matrices_congruence(&make_slope(1, 1).unwrap()).unwrap();
        let report = validate_structure(&tp);
        assert!(report.is_ok());
        assert_eq!(report.matchings[0], Some(vec![1, 2]));
    }

    #[test]
    fn primitive_word_unit_slope() {
        let tp = build_matrices_congruence(&make_slope(1, 1).unwrap()).unwrap();
        let cert = find_primitive_word(&tp).unwrap();
        assert_eq!(cert.n0, 2);
        assert!(tp.product(&[0, 1]).iter().flatten().all(|v| !v.is_zero()));
        assert_eq!(cert.product_min_entry, BigUint::one());
    }

    #[test]
    fn primitive_word_two_thirds() {
        let tp = build_matrices_congruence(&make_slope(2, 3).unwrap()).unwrap();
        let cert = find_primitive_word(&tp).unwrap();
        assert!(cert.n0 <= 21);
        assert!(cert.product_min_entry >= BigUint::one());
        assert!(word_pattern(&tp, &cert.word).unwrap().is_positive());
        // shortest: no word of length n0 - 1 is positive
        let shorter = cert.n0 - 1;
        for bits in 0..(1u32 << shorter) {
            let w: Vec<u8> = (0..shorter).map(|i| ((bits >> i) & 1) as u8).collect();
            assert!(!word_pattern(&tp, &w).unwrap().is_positive());
        }
    }

    #[test]
    fn degenerate_counts_unit_slope() {
        let tp = build_matrices_congruence(&make_slope(1, 1).unwrap()).unwrap();
        assert_eq!(count_degenerate_words(&tp, 1).unwrap().count, 2);
        assert_eq!(count_degenerate_words(&tp, 2).unwrap().count, 2);
        for n in 1..12 {
            let c = count_degenerate_words(&tp, n).unwrap();
            assert!(c.count <= 1 << n);
        }
    }

    #[test]
    fn degenerate_count_capacity() {
        let tp = build_matrices_congruence(&make_slope(1, 1).unwrap()).unwrap();
        assert!(matches!(
            count_degenerate_words(&tp, 40),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn degenerate_bound_small_cases() {
        // m = 2: sum over l = 0..=1 of C(n,l) 2^l = 1 + 2n
        assert_eq!(degenerate_word_bound(2, 5), BigUint::from(11u32));
        // bound saturates at 3^n once the top index reaches n
        assert_eq!(degenerate_word_bound(5, 4), BigUint::from(81u32));
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let tp = build_matrices_congruence(&make_slope(2, 3).unwrap()).unwrap();
        let csv = tp.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "p,q,matrix,row,c1,c2,c3,c4,c5");
        assert_eq!(lines[1], "2,3,A0,1,1,0,0,0,0");
        assert_eq!(lines[10], "2,3,A1,5,0,0,0,0,1");
        assert_eq!(lines.len(), 11);
    }
}
