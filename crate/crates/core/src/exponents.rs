//! Typical slice dimensions `α` (fair-coin offsets), `β` (offsets typical
//! for the natural measure) and the growth envelope `[b_min, b_max]`.
//!
//! All values are reported in dimension units, i.e. already divided by
//! `ln 2`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::enumeration::{fold_words, word_from_bits};
use crate::error::{Error, Result};
use crate::matrixgen::TransitionPair;
use crate::measures::{fair_coin_word, ones, RunningProduct, WordMeasure};

pub const DEFAULT_EXACT_DEPTH: usize = 20;
pub const DEFAULT_MC_LENGTH: usize = 10_000;
pub const DEFAULT_MC_TRIALS: usize = 200;

/// `log 3 / log 2`.
pub fn gasket_dimension() -> f64 {
    3f64.ln() / 2f64.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMode {
    ExactEnumeration,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// A finite-depth value known to lie on one side of the limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedBound {
    pub value: f64,
    pub kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentEstimate {
    pub value: f64,
    pub n: usize,
    pub mode: EstimateMode,
    /// Standard error of the mean (Monte Carlo with at least two trials).
    pub stderr: Option<f64>,
    pub trials: Option<usize>,
    pub bound: Option<CertifiedBound>,
    /// For `β`: the entropy form `H_n/(n log 2)` of `dim ν̃`, computed
    /// separately from the `η` weights.
    pub companion: Option<f64>,
}

impl ExponentEstimate {
    pub fn to_json(&self, tp: &TransitionPair) -> serde_json::Value {
        serde_json::json!({
            "p": tp.slope.p(),
            "q": tp.slope.q(),
            "mode": self.mode,
            "n": self.n,
            "value": self.value,
            "stderr": self.stderr,
            "trials": self.trials,
            "bound": self.bound,
            "companion": self.companion,
        })
    }
}

/// One step of Richardson extrapolation against `1/n`, from depths `n` and
/// `n/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolated {
    pub value: f64,
    pub fine: f64,
    pub coarse: f64,
    pub n_fine: usize,
    pub n_coarse: usize,
}

impl Extrapolated {
    pub fn from_pair(fine: f64, n_fine: usize, coarse: f64, n_coarse: usize) -> Self {
        debug_assert_eq!(n_fine, 2 * n_coarse);
        Extrapolated {
            value: 2.0 * fine - coarse,
            fine,
            coarse,
            n_fine,
            n_coarse,
        }
    }
}

fn check_depth(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Validation("depth must be >= 1".into()));
    }
    Ok(())
}

fn richardson_depths(n: usize) -> Result<(usize, usize)> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::Validation(format!(
            "extrapolation depth must be even and >= 2, got {n}"
        )));
    }
    Ok((n, n / 2))
}

fn sum_row(v: &[u64]) -> f64 {
    v.iter().sum::<u64>() as f64
}

/// `a_n = 2^{-n}·Σ_w ln(e·A_w·e)/(n log 2)`; an upper bound on `α`.
pub fn alpha_exact(tp: &TransitionPair, n: usize) -> Result<ExponentEstimate> {
    check_depth(n)?;
    let e = vec![1u64; tp.dim()];
    let total = fold_words(tp, n, &e, || 0.0f64, |acc, _, v| *acc += sum_row(v).ln(), |a, b| a + b)?;
    let value = total / (2f64.powi(n as i32) * n as f64 * 2f64.ln());
    Ok(ExponentEstimate {
        value,
        n,
        mode: EstimateMode::ExactEnumeration,
        stderr: None,
        trials: None,
        bound: Some(CertifiedBound {
            value,
            kind: BoundKind::Upper,
        }),
        companion: None,
    })
}

pub fn alpha_extrapolated(tp: &TransitionPair, n: usize) -> Result<Extrapolated> {
    let (nf, nc) = richardson_depths(n)?;
    let fine = alpha_exact(tp, nf)?.value;
    let coarse = alpha_exact(tp, nc)?.value;
    Ok(Extrapolated::from_pair(fine, nf, coarse, nc))
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn mean_and_stderr(samples: &[f64]) -> (f64, Option<f64>) {
    let k = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / k;
    if samples.len() < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, Some((var / k).sqrt()))
}

fn check_mc(n: usize, trials: usize) -> Result<()> {
    check_depth(n)?;
    if trials == 0 {
        return Err(Error::Validation("trials must be >= 1".into()));
    }
    Ok(())
}

/// Per-trial values in trial order; the reduction is sequential so the
/// result is independent of the thread count.
fn monte_carlo<F>(trials: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Mean of `ln(e·A_w·e)/(n log 2)` over fair-coin words.
pub fn alpha_monte_carlo(
    tp: &TransitionPair,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    check_mc(n, trials)?;
    let e = ones(tp.dim());
    let scale = n as f64 * 2f64.ln();
    let samples = monte_carlo(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let word = fair_coin_word(&mut rng, n);
        let mut rp = RunningProduct::new(tp, &e);
        for b in word {
            rp.push(b);
        }
        rp.log_dot(&e) / scale
    });
    let (value, stderr) = mean_and_stderr(&samples);
    Ok(ExponentEstimate {
        value,
        n,
        mode: EstimateMode::MonteCarlo,
        stderr,
        trials: Some(trials),
        bound: None,
        companion: None,
    })
}

/// `b_n = Σ_w η(w)·ln(e·A_w·p)/(n log 2)`; a lower bound on `β`.
pub fn beta_exact(tp: &TransitionPair, n: usize) -> Result<ExponentEstimate> {
    check_depth(n)?;
    let wm = WordMeasure::new(tp)?;
    let p = wm.perron().values().to_vec();
    let e = vec![1u64; tp.dim()];
    let norm = 3f64.powi(n as i32);
    let total = fold_words(
        tp,
        n,
        &e,
        || 0.0f64,
        |acc, _, v| {
            let x: f64 = v.iter().zip(&p).map(|(&a, b)| a as f64 * b).sum();
            *acc += x / norm * x.ln();
        },
        |a, b| a + b,
    )?;
    let scale = n as f64 * 2f64.ln();
    let value = total / scale;
    let entropy = eta_entropy(tp, &p, n)?;
    Ok(ExponentEstimate {
        value,
        n,
        mode: EstimateMode::ExactEnumeration,
        stderr: None,
        trials: None,
        bound: Some(CertifiedBound {
            value,
            kind: BoundKind::Lower,
        }),
        companion: Some(entropy / scale),
    })
}

pub fn beta_extrapolated(tp: &TransitionPair, n: usize) -> Result<Extrapolated> {
    let (nf, nc) = richardson_depths(n)?;
    let fine = beta_exact(tp, nf)?.value;
    let coarse = beta_exact(tp, nc)?.value;
    Ok(Extrapolated::from_pair(fine, nf, coarse, nc))
}

/// `H_n = -Σ_w η(w) ln η(w)`, building `A_w·p` from the right.
fn eta_entropy(tp: &TransitionPair, p: &[f64], n: usize) -> Result<f64> {
    crate::error::check_capacity("exact enumeration depth", n, crate::enumeration::MAX_EXACT_DEPTH)?;
    fn go(tp: &TransitionPair, levels: &mut [Vec<f64>], left: usize, norm: f64) -> f64 {
        if left == 0 {
            let eta = levels[0].iter().sum::<f64>() / norm;
            return if eta > 0.0 { -eta * eta.ln() } else { 0.0 };
        }
        let (cur, rest) = levels.split_first_mut().expect("level buffers");
        let mut h = 0.0;
        for b in 0..2u8 {
            tp.times_col(b, cur, &mut rest[0]);
            h += go(tp, rest, left - 1, norm);
        }
        h
    }
    let norm = 3f64.powi(n as i32);
    let split = n.min(6);
    let parts: Vec<f64> = (0..1u64 << split)
        .into_par_iter()
        .map(|suffix| {
            let mut v = p.to_vec();
            let mut next = vec![0.0; p.len()];
            for b in word_from_bits(suffix, split).into_iter().rev() {
                tp.times_col(b, &v, &mut next);
                std::mem::swap(&mut v, &mut next);
            }
            let mut levels = vec![vec![0.0; p.len()]; n - split + 1];
            levels[0] = v;
            go(tp, &mut levels, n - split, norm)
        })
        .collect();
    Ok(parts.into_iter().sum())
}

/// Mean of `ln(e·A_w·p)/(n log 2)` over `η`-distributed words.
pub fn beta_monte_carlo(
    tp: &TransitionPair,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ExponentEstimate> {
    check_mc(n, trials)?;
    let wm = WordMeasure::new(tp)?;
    let p = wm.perron().values();
    let scale = n as f64 * 2f64.ln();
    let samples = monte_carlo(trials, |i| {
        let mut rng = trial_rng(seed, i);
        let rp = wm.sample_with(&mut rng, n, |_, _| {});
        rp.log_dot(p) / scale
    });
    let (value, stderr) = mean_and_stderr(&samples);
    Ok(ExponentEstimate {
        value,
        n,
        mode: EstimateMode::MonteCarlo,
        stderr,
        trials: Some(trials),
        bound: None,
        companion: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthEnvelope {
    pub b_min_est: f64,
    pub b_max_est: f64,
    pub n: usize,
    pub min_witness: Vec<u8>,
    pub max_witness: Vec<u8>,
    /// `b_max_est` is an upper bound on `b_max`; there is no finite-depth
    /// certificate for `b_min`.
    pub b_max_bound: CertifiedBound,
}

impl GrowthEnvelope {
    pub fn to_json(&self, tp: &TransitionPair) -> serde_json::Value {
        let word = |w: &[u8]| w.iter().map(|b| char::from(b'0' + b)).collect::<String>();
        serde_json::json!({
            "p": tp.slope.p(),
            "q": tp.slope.q(),
            "n": self.n,
            "b_min": self.b_min_est,
            "b_max": self.b_max_est,
            "min_witness": word(&self.min_witness),
            "max_witness": word(&self.max_witness),
            "b_max_bound": self.b_max_bound,
        })
    }
}

#[derive(Clone, Copy)]
struct Extremes {
    min: (u64, u64),
    max: (u64, u64),
}

/// Exact extremes of `ln(e·A_w·e)/(n log 2)` over words of length `n`.
/// Ties go to the lexicographically first word.
pub fn growth_envelope(tp: &TransitionPair, n: usize) -> Result<GrowthEnvelope> {
    check_depth(n)?;
    let e = vec![1u64; tp.dim()];
    let ext = fold_words(
        tp,
        n,
        &e,
        || Extremes {
            min: (u64::MAX, 0),
            max: (0, 0),
        },
        |acc, bits, v| {
            let s: u64 = v.iter().sum();
            if s < acc.min.0 {
                acc.min = (s, bits);
            }
            if s > acc.max.0 {
                acc.max = (s, bits);
            }
        },
        |a, b| Extremes {
            min: if b.min.0 < a.min.0 { b.min } else { a.min },
            max: if b.max.0 > a.max.0 { b.max } else { a.max },
        },
    )?;
    let scale = n as f64 * 2f64.ln();
    let b_max_est = (ext.max.0 as f64).ln() / scale;
    Ok(GrowthEnvelope {
        b_min_est: (ext.min.0 as f64).ln() / scale,
        b_max_est,
        n,
        min_witness: word_from_bits(ext.min.1, n),
        max_witness: word_from_bits(ext.max.1, n),
        b_max_bound: CertifiedBound {
            value: b_max_est,
            kind: BoundKind::Upper,
        },
    })
}

/// Envelope endpoints extrapolated from depths `n` and `n/2`.
pub fn envelope_extrapolated(tp: &TransitionPair, n: usize) -> Result<(Extrapolated, Extrapolated)> {
    let (nf, nc) = richardson_depths(n)?;
    let fine = growth_envelope(tp, nf)?;
    let coarse = growth_envelope(tp, nc)?;
    Ok((
        Extrapolated::from_pair(fine.b_min_est, nf, coarse.b_min_est, nc),
        Extrapolated::from_pair(fine.b_max_est, nf, coarse.b_max_est, nc),
    ))
}
