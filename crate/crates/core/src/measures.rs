//! Perron vector of `A_0 + A_1`, log-scaled matrix-product functionals and
//! the shift-invariant word measure `η([w]) = 3^{-|w|}·e·A_w·p`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactgeom::Rational;
use crate::matrixgen::TransitionPair;

/// Probability vector `p > 0` with `(A_0 + A_1)·p = 3p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronVector {
    exact: Vec<Rational>,
    values: Vec<f64>,
}

impl PerronVector {
    pub fn exact(&self) -> &[Rational] {
        &self.exact
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Null space of `A_0 + A_1 - 3I`, solved exactly over the rationals.
pub fn perron_vector(tp: &TransitionPair) -> Result<PerronVector> {
    let n = tp.dim();
    let sum = tp.sum();
    let mut rows: Vec<Vec<Rational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let v = sum.get(i, j) as i64 - if i == j { 3 } else { 0 };
                    BigRational::from_integer(BigInt::from(v))
                })
                .collect()
        })
        .collect();

    // reduced row echelon form
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(pr) = (r..n).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, pr);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            *v = &*v * &inv;
        }
        for i in 0..n {
            if i != r && !rows[i][c].is_zero() {
                let factor = rows[i][c].clone();
                for j in 0..n {
                    let delta = &factor * &rows[r][j];
                    rows[i][j] = &rows[i][j] - delta;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == n {
            break;
        }
    }
    let nullity = n - pivot_cols.len();
    if nullity != 1 {
        return Err(Error::Invariant(format!(
            "eigenvalue 3 of A0+A1 has {nullity}-dimensional eigenspace for slope {}",
            tp.slope
        )));
    }
    let free = (0..n).find(|c| !pivot_cols.contains(c)).unwrap();
    let mut v = vec![Rational::zero(); n];
    v[free] = Rational::one();
    for (row, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -rows[row][free].clone();
    }
    let total: Rational = v.iter().fold(Rational::zero(), |acc, x| acc + x);
    if total.is_zero() {
        return Err(Error::Invariant("Perron vector sums to zero".into()));
    }
    let exact: Vec<Rational> = v.iter().map(|x| x / &total).collect();
    if exact.iter().any(|x| !x.is_positive()) {
        return Err(Error::Invariant(format!(
            "Perron vector for slope {} is not strictly positive",
            tp.slope
        )));
    }
    let values = exact.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    Ok(PerronVector { exact, values })
}

pub fn ones(dim: usize) -> Vec<f64> {
    vec![1.0; dim]
}

/// Standard basis vector `e_k`, 1-based.
pub fn basis(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k - 1] = 1.0;
    v
}

/// `ln(leftᵀ·A_{w1}⋯A_{wn}·right)`; `-∞` when the product vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProductValue {
    pub log_value: f64,
    pub word_length: usize,
}

impl LogProductValue {
    pub fn is_zero_product(&self) -> bool {
        self.log_value == f64::NEG_INFINITY
    }
}

/// Running row vector `leftᵀ·A_{w1}⋯A_{wk}` kept at unit 1-norm, with the
/// log of the discarded scale accumulated separately.
#[derive(Debug, Clone)]
pub struct RunningProduct<'a> {
    tp: &'a TransitionPair,
    v: Vec<f64>,
    scratch: Vec<f64>,
    log_scale: f64,
    len: usize,
}

impl<'a> RunningProduct<'a> {
    pub fn new(tp: &'a TransitionPair, left: &[f64]) -> Self {
        let mut rp = RunningProduct {
            tp,
            v: left.to_vec(),
            scratch: vec![0.0; left.len()],
            log_scale: 0.0,
            len: 0,
        };
        rp.renormalize();
        rp
    }

    fn renormalize(&mut self) {
        let s: f64 = self.v.iter().sum();
        if s > 0.0 {
            self.v.iter_mut().for_each(|x| *x /= s);
            self.log_scale += s.ln();
        } else {
            self.log_scale = f64::NEG_INFINITY;
        }
    }

    pub fn push(&mut self, letter: u8) {
        self.tp.row_times(&self.v, letter, &mut self.scratch);
        std::mem::swap(&mut self.v, &mut self.scratch);
        self.len += 1;
        if self.log_scale.is_finite() {
            self.renormalize();
        }
    }

    /// Normalized current row vector.
    pub fn direction(&self) -> &[f64] {
        &self.v
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `ln(current · right)`.
    pub fn log_dot(&self, right: &[f64]) -> f64 {
        if !self.log_scale.is_finite() {
            return f64::NEG_INFINITY;
        }
        let d: f64 = self.v.iter().zip(right).map(|(a, b)| a * b).sum();
        if d > 0.0 {
            self.log_scale + d.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

fn check_vector(name: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Validation(format!(
            "{name} vector has length {} (expected {dim})",
            v.len()
        )));
    }
    if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::Validation(format!("{name} vector must be nonnegative")));
    }
    Ok(())
}

pub fn log_product(
    tp: &TransitionPair,
    word: &[u8],
    left: &[f64],
    right: &[f64],
) -> Result<LogProductValue> {
    check_vector("left", left, tp.dim())?;
    check_vector("right", right, tp.dim())?;
    if let Some(b) = word.iter().find(|&&b| b > 1) {
        return Err(Error::Validation(format!("binary word contains letter {b}")));
    }
    let mut rp = RunningProduct::new(tp, left);
    for &b in word {
        rp.push(b);
    }
    Ok(LogProductValue {
        log_value: rp.log_dot(right),
        word_length: word.len(),
    })
}

/// `η` and its components `η_k([w]) = 3^{-|w|}·e_k·A_w·p`.
#[derive(Debug, Clone)]
pub struct WordMeasure<'a> {
    tp: &'a TransitionPair,
    perron: PerronVector,
    /// `A_b·p` for `b = 0, 1`.
    image: [Vec<f64>; 2],
}

impl<'a> WordMeasure<'a> {
    pub fn new(tp: &'a TransitionPair) -> Result<Self> {
        let perron = perron_vector(tp)?;
        let mut image = [vec![0.0; tp.dim()], vec![0.0; tp.dim()]];
        for (b, out) in image.iter_mut().enumerate() {
            tp.times_col(b as u8, perron.values(), out);
        }
        Ok(WordMeasure { tp, perron, image })
    }

    pub fn transition_pair(&self) -> &TransitionPair {
        self.tp
    }

    pub fn perron(&self) -> &PerronVector {
        &self.perron
    }

    fn weight_from(&self, left: &[f64], word: &[u8]) -> Result<f64> {
        let lp = log_product(self.tp, word, left, self.perron.values())?;
        Ok((lp.log_value - word.len() as f64 * 3f64.ln()).exp())
    }

    pub fn eta(&self, word: &[u8]) -> Result<f64> {
        self.weight_from(&ones(self.tp.dim()), word)
    }

    /// `η_k`, 1-based `k`.
    pub fn eta_k(&self, k: usize, word: &[u8]) -> Result<f64> {
        if k == 0 || k > self.tp.dim() {
            return Err(Error::Validation(format!("interval index {k} out of range")));
        }
        self.weight_from(&basis(self.tp.dim(), k), word)
    }

    /// Exact `η([w])` as a rational.
    pub fn eta_exact(&self, word: &[u8]) -> Rational {
        let prod = self.tp.product(word);
        let n = self.tp.dim();
        let mut total = Rational::zero();
        for row in &prod {
            for j in 0..n {
                let entry = BigRational::from_integer(BigInt::from(row[j].clone()));
                total += entry * &self.perron.exact()[j];
            }
        }
        total / BigRational::from_integer(BigInt::from(3).pow(word.len() as u32))
    }

    /// `P(next letter = b | prefix)` for `b = 0, 1`, given the normalized
    /// row vector `u ∝ e·A_prefix`.
    pub fn conditionals(&self, u: &[f64]) -> [f64; 2] {
        let dot = |x: &[f64]| u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let up = dot(self.perron.values());
        let p0 = dot(&self.image[0]) / (3.0 * up);
        let p1 = dot(&self.image[1]) / (3.0 * up);
        [p0, p1]
    }

    /// Draws `n` letters from `η`, feeding each letter to `visit` together
    /// with the running product `e·A_{w1}⋯A_{wk}`; returns the final
    /// running product.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        mut visit: impl FnMut(u8, &RunningProduct<'a>),
    ) -> RunningProduct<'a> {
        let mut rp = RunningProduct::new(self.tp, &ones(self.tp.dim()));
        for _ in 0..n {
            let [p0, _] = self.conditionals(rp.direction());
            let b = if rng.random::<f64>() < p0 { 0 } else { 1 };
            rp.push(b);
            visit(b, &rp);
        }
        rp
    }

    /// Word of length `n` drawn from `η`; deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<u8>> {
        if n == 0 {
            return Err(Error::Validation("sample length must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut word = Vec::with_capacity(n);
        self.sample_with(&mut rng, n, |b, _| word.push(b));
        Ok(word)
    }
}

/// Convenience wrapper: `η`-distributed word of length `n`.
pub fn sample_eta(tp: &TransitionPair, n: usize, rng_seed: u64) -> Result<Vec<u8>> {
    WordMeasure::new(tp)?.sample(n, rng_seed)
}

/// Fair-coin word of length `n` from the given generator.
pub fn fair_coin_word<R: RngCore + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    let mut word = Vec::with_capacity(n);
    let mut bits = 0u64;
    for i in 0..n {
        if i % 64 == 0 {
            bits = rng.next_u64();
        }
        word.push((bits & 1) as u8);
        bits >>= 1;
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactgeom::{make_slope, rat};
    use crate::matrixgen::build_matrices_congruence;
    use num_bigint::BigUint;

    fn pair(p: i64, q: i64) -> TransitionPair {
        build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap()
    }

    fn all_words(n: usize) -> impl Iterator<Item = Vec<u8>> {
        (0..1u32 << n).map(move |bits| (0..n).map(|i| ((bits >> (n - 1 - i)) & 1) as u8).collect())
    }

    #[test]
    fn perron_unit_slope() {
        let pv = perron_vector(&pair(1, 1)).unwrap();
        assert_eq!(pv.exact(), &[rat(1, 2), rat(1, 2)]);
    }

    #[test]
    fn perron_two_thirds_is_exact_eigenvector() {
        let tp = pair(2, 3);
        let pv = perron_vector(&tp).unwrap();
        let sum = tp.sum();
        for i in 0..5 {
            let lhs: Rational = (0..5)
                .map(|j| rat(sum.get(i, j) as i64, 1) * &pv.exact()[j])
                .fold(Rational::zero(), |a, b| a + b);
            assert_eq!(lhs, rat(3, 1) * &pv.exact()[i]);
        }
        let total = pv.exact().iter().fold(Rational::zero(), |a, b| a + b);
        assert_eq!(total, Rational::one());
    }

    #[test]
    fn perron_sums_to_one_across_slopes() {
        for (p, q) in [(1, 2), (3, 4), (5, 2), (7, 4)] {
            let pv = perron_vector(&pair(p, q)).unwrap();
            let total = pv.exact().iter().fold(Rational::zero(), |a, b| a + b);
            assert_eq!(total, Rational::one());
            assert!(pv.min() > 0.0);
        }
    }

    #[test]
    fn log_product_examples() {
        let tp = pair(1, 1);
        let e = ones(2);
        let lp = |w: &[u8]| log_product(&tp, w, &e, &e).unwrap().log_value;
        assert!((lp(&[0]) - 3f64.ln()).abs() < 1e-14);
        assert!((lp(&[0, 1]) - 5f64.ln()).abs() < 1e-14);
        assert!((lp(&[]) - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_product_signals_zero_product() {
        // e_1·A0·e_2 = 0 at p/q = 1
        let tp = pair(1, 1);
        let v = log_product(&tp, &[0], &basis(2, 1), &basis(2, 2)).unwrap();
        assert!(v.is_zero_product());
        assert!(log_product(&tp, &[2], &ones(2), &ones(2)).is_err());
        assert!(log_product(&tp, &[0], &[-1.0, 1.0], &ones(2)).is_err());
    }

    #[test]
    fn log_product_matches_big_integers() {
        for (p, q) in [(1, 1), (2, 3), (3, 5)] {
            let tp = pair(p, q);
            let e = ones(tp.dim());
            for word in all_words(10).step_by(37) {
                let exact: BigUint = tp.product(&word).iter().flatten().sum();
                let approx = log_product(&tp, &word, &e, &e).unwrap().log_value.exp();
                let exact = exact.to_f64().unwrap();
                assert!(((approx - exact) / exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn total_mass_grows_like_three() {
        // e·(A0+A1)^n·e = (p+q)·3^n
        for (p, q) in [(1, 1), (2, 3), (1, 4)] {
            let tp = pair(p, q);
            let m = tp.dim() as u64;
            for n in [1usize, 5, 12] {
                let mut v = vec![1u64; tp.dim()];
                let mut a = vec![0u64; tp.dim()];
                let mut b = vec![0u64; tp.dim()];
                let mut total = vec![0u64; tp.dim()];
                for _ in 0..n {
                    tp.row_times(&v, 0, &mut a);
                    tp.row_times(&v, 1, &mut b);
                    for j in 0..tp.dim() {
                        total[j] = a[j] + b[j];
                    }
                    std::mem::swap(&mut v, &mut total);
                }
                assert_eq!(v.iter().sum::<u64>(), m * 3u64.pow(n as u32));
            }
        }
    }

    #[test]
    fn eta_examples() {
        let tp = pair(1, 1);
        let wm = WordMeasure::new(&tp).unwrap();
        assert!((wm.eta(&[0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((wm.eta(&[0, 0]).unwrap() - 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(wm.eta_exact(&[0, 0]), rat(2, 9));
    }

    #[test]
    fn eta_is_a_probability_at_each_level() {
        for (p, q) in [(1, 1), (2, 3), (1, 2)] {
            let tp = pair(p, q);
            let wm = WordMeasure::new(&tp).unwrap();
            for n in [1usize, 4, 8] {
                let exact = all_words(n).fold(Rational::zero(), |acc, w| acc + wm.eta_exact(&w));
                assert_eq!(exact, Rational::one());
            }
            let approx: f64 = all_words(12).map(|w| wm.eta(&w).unwrap()).sum();
            assert!((approx - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_is_shift_invariant_on_cylinders() {
        for (p, q) in [(1, 1), (2, 3), (3, 1)] {
            let tp = pair(p, q);
            let wm = WordMeasure::new(&tp).unwrap();
            for n in 0..=8 {
                for w in all_words(n) {
                    let mut w0 = vec![0];
                    w0.extend(&w);
                    let mut w1 = vec![1];
                    w1.extend(&w);
                    assert_eq!(wm.eta_exact(&w0) + wm.eta_exact(&w1), wm.eta_exact(&w));
                }
            }
        }
    }

    #[test]
    fn eta_components_add_up() {
        let tp = pair(2, 3);
        let wm = WordMeasure::new(&tp).unwrap();
        for w in all_words(6).step_by(5) {
            let parts: f64 = (1..=5).map(|k| wm.eta_k(k, &w).unwrap()).sum();
            assert!((parts - wm.eta(&w).unwrap()).abs() < 1e-15);
            assert!((1..=5).all(|k| wm.eta_k(k, &w).unwrap() >= 0.0));
        }
        assert!(wm.eta_k(0, &[0]).is_err());
    }

    #[test]
    fn conditionals_sum_to_one() {
        let tp = pair(2, 3);
        let wm = WordMeasure::new(&tp).unwrap();
        let mut rp = RunningProduct::new(&tp, &ones(5));
        for &b in &[0u8, 1, 1, 0, 1, 0, 0] {
            let [a, c] = wm.conditionals(rp.direction());
            assert!((a + c - 1.0).abs() < 1e-14);
            rp.push(b);
        }
        let tp1 = pair(1, 1);
        let wm1 = WordMeasure::new(&tp1).unwrap();
        let [p0, _] = wm1.conditionals(&[0.5, 0.5]);
        assert!((p0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let tp = pair(2, 3);
        assert_eq!(sample_eta(&tp, 200, 7).unwrap(), sample_eta(&tp, 200, 7).unwrap());
        assert_ne!(sample_eta(&tp, 200, 7).unwrap(), sample_eta(&tp, 200, 8).unwrap());
        assert!(sample_eta(&tp, 0, 1).is_err());
    }

    #[test]
    fn sampled_first_letters_match_eta_marginal() {
        let tp = pair(2, 3);
        let wm = WordMeasure::new(&tp).unwrap();
        let expected = wm.eta(&[0]).unwrap();
        let trials = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut zeros = 0usize;
        let mut pairs00 = 0usize;
        for _ in 0..trials {
            let mut letters = Vec::new();
            wm.sample_with(&mut rng, 2, |b, _| letters.push(b));
            zeros += (letters[0] == 0) as usize;
            pairs00 += (letters == [0, 0]) as usize;
        }
        let freq = zeros as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        assert!((freq - expected).abs() < 3.0 * sigma, "{freq} vs {expected}");
        let e00 = wm.eta(&[0, 0]).unwrap();
        let f00 = pairs00 as f64 / trials as f64;
        let s00 = (e00 * (1.0 - e00) / trials as f64).sqrt();
        assert!((f00 - e00).abs() < 3.0 * s00, "{f00} vs {e00}");
    }
}
