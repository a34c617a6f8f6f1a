//! Pressure `P(t) = lim (1/n)·ln Σ_w (e·A_w·e)^t`, its derivative, and the
//! Legendre-type spectra built on it.
//!
//! Finite-depth pressures come from the exact histogram of `e·A_w·e` over
//! all words of length `n`, so any number of `t` values costs one
//! enumeration. Spectra use the extrapolated pressure `2·P_n − P_{n/2}`,
//! which removes the `O(1/n)` bias of the raw values (at `t = 1` that bias
//! is `ln(p+q)/n`).

use serde::Serialize;

use crate::enumeration::product_sum_histogram;
use crate::error::{Error, Result};
use crate::exponents::{beta_extrapolated, gasket_dimension};
use crate::matrixgen::TransitionPair;

/// How a reported value relates to the limit it approximates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Exact,
    Upper,
    Lower,
    Estimate,
}

impl ValueKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ValueKind::Exact => "exact",
            ValueKind::Upper => "upper",
            ValueKind::Lower => "lower",
            ValueKind::Estimate => "estimate",
        }
    }
}

/// Histogram of `e·A_w·e` at a fixed depth.
#[derive(Debug, Clone)]
pub struct PressureTable {
    n: usize,
    log_values: Vec<f64>,
    log_mult: Vec<f64>,
}

impl PressureTable {
    pub fn build(tp: &TransitionPair, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("pressure depth must be >= 1".into()));
        }
        let hist = product_sum_histogram(tp, n)?;
        Ok(PressureTable {
            n,
            log_values: hist.iter().map(|&(v, _)| (v as f64).ln()).collect(),
            log_mult: hist.iter().map(|&(_, c)| (c as f64).ln()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P_n(t)`; exactly `ln 2` at `t = 0`.
    pub fn pressure(&self, t: f64) -> f64 {
        if t == 0.0 {
            return std::f64::consts::LN_2;
        }
        let m = self
            .log_values
            .iter()
            .zip(&self.log_mult)
            .map(|(lv, lc)| lc + t * lv)
            .fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = self
            .log_values
            .iter()
            .zip(&self.log_mult)
            .map(|(lv, lc)| (lc + t * lv - m).exp())
            .sum();
        (m + s.ln()) / self.n as f64
    }

    /// Closed-form `P_n′(t)`: the mean of `ln(e·A_w·e)/n` under weights
    /// proportional to `(e·A_w·e)^t`.
    pub fn pressure_slope(&self, t: f64) -> f64 {
        let expo: Vec<f64> = self
            .log_values
            .iter()
            .zip(&self.log_mult)
            .map(|(lv, lc)| lc + t * lv)
            .collect();
        let m = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (x, lv) in expo.iter().zip(&self.log_values) {
            let w = (x - m).exp();
            num += w * lv;
            den += w;
        }
        num / den / self.n as f64
    }

    pub fn bound_kind(t: f64) -> ValueKind {
        if t == 0.0 {
            ValueKind::Exact
        } else if t > 0.0 {
            ValueKind::Upper
        } else {
            ValueKind::Lower
        }
    }

    /// `ln(min_w e·A_w·e)/(n log 2)` and the same for the maximum.
    pub fn growth_range(&self) -> (f64, f64) {
        let scale = self.n as f64 * std::f64::consts::LN_2;
        (
            self.log_values[0] / scale,
            self.log_values[self.log_values.len() - 1] / scale,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureValue {
    pub t: f64,
    pub value: f64,
    pub n: usize,
    pub bound_kind: ValueKind,
}

/// `P_n(t)`: an upper bound on `P(t)` for `t > 0`, a lower bound for
/// `t < 0`.
pub fn pressure_at(tp: &TransitionPair, t: f64, n: usize) -> Result<PressureValue> {
    if !t.is_finite() {
        return Err(Error::Validation(format!("t must be finite, got {t}")));
    }
    let table = PressureTable::build(tp, n)?;
    Ok(PressureValue {
        t,
        value: table.pressure(t),
        n,
        bound_kind: PressureTable::bound_kind(t),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PressureCurve {
    pub p: u64,
    pub q: u64,
    pub s: f64,
    pub samples: Vec<PressureValue>,
}

impl PressureCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,n,bound_kind\n");
        for v in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", v.t, v.value, v.n, v.bound_kind.as_str()));
        }
        out
    }
}

pub fn pressure_curve(tp: &TransitionPair, ts: &[f64], n: usize) -> Result<PressureCurve> {
    if let Some(t) = ts.iter().find(|t| !t.is_finite()) {
        return Err(Error::Validation(format!("t must be finite, got {t}")));
    }
    let table = PressureTable::build(tp, n)?;
    Ok(PressureCurve {
        p: tp.slope.p(),
        q: tp.slope.q(),
        s: gasket_dimension(),
        samples: ts
            .iter()
            .map(|&t| PressureValue {
                t,
                value: table.pressure(t),
                n,
                bound_kind: PressureTable::bound_kind(t),
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumConfig {
    /// Fine depth; the coarse depth is `n/2`.
    pub n: usize,
    pub t_max: f64,
    /// Number of grid points on each side of `t = 0`.
    pub grid: usize,
    /// Finite-difference step for `P′`.
    pub h: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            n: 24,
            t_max: 40.0,
            grid: 400,
            h: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumFlag {
    /// `δ ≤ α`, where the value is 1 by definition.
    Plateau,
    Interior,
    /// At the end of the domain; the reported value is the limit value.
    Endpoint,
    OutOfRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegendreValue {
    pub value: f64,
    /// The computed infimum, also when `value` is fixed by a flag.
    pub infimum: Option<f64>,
    pub t_star: Option<f64>,
    pub flag: SpectrumFlag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Gamma,
    Chi,
    Box,
    LocalDim,
}

impl std::str::FromStr for SpectrumKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(SpectrumKind::Gamma),
            "chi" => Ok(SpectrumKind::Chi),
            "box" => Ok(SpectrumKind::Box),
            "localdim" | "local-dim" => Ok(SpectrumKind::LocalDim),
            _ => Err(Error::Validation(format!("unknown spectrum kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumPoint {
    pub argument: f64,
    #[serde(flatten)]
    pub result: LegendreValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumCurve {
    pub kind: SpectrumKind,
    pub p: u64,
    pub q: u64,
    pub n: usize,
    pub s: f64,
    pub alpha_est: f64,
    pub beta_est: f64,
    /// Domain of the argument: `(b_min, b_max)`, reflected for `LocalDim`.
    pub endpoints: (f64, f64),
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("argument,value,n,bound_kind,flag,t_star\n");
        for pt in &self.points {
            let flag = serde_json::to_value(pt.result.flag).expect("flag serializes");
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                pt.argument,
                pt.result.value,
                self.n,
                ValueKind::Estimate.as_str(),
                flag.as_str().unwrap_or_default(),
                pt.result.t_star.map(|t| t.to_string()).unwrap_or_default()
            ));
        }
        out
    }
}

const GOLDEN_ITERS: usize = 50;

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERS {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Extrapolated pressure with the quantities that fix the spectrum domains.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    config: SpectrumConfig,
    p: u64,
    q: u64,
    fine: PressureTable,
    coarse: PressureTable,
    alpha_est: f64,
    beta_est: f64,
    b_min_est: f64,
    b_max_est: f64,
    /// `(t, P̂(t))` on `[-t_max, t_max]`, increasing in `t`.
    grid: Vec<(f64, f64)>,
    zero_index: usize,
}

impl SpectrumModel {
    pub fn new(tp: &TransitionPair, config: SpectrumConfig) -> Result<Self> {
        if config.n < 2 || config.n % 2 != 0 {
            return Err(Error::Validation(format!(
                "spectrum depth must be even and >= 2, got {}",
                config.n
            )));
        }
        if !(config.t_max > 0.0 && config.h > 0.0 && config.grid >= 2) {
            return Err(Error::Validation("invalid spectrum configuration".into()));
        }
        let fine = PressureTable::build(tp, config.n)?;
        let coarse = PressureTable::build(tp, config.n / 2)?;
        let ln2 = std::f64::consts::LN_2;
        let alpha_est = (2.0 * fine.pressure_slope(0.0) - coarse.pressure_slope(0.0)) / ln2;
        let beta_est = beta_extrapolated(tp, config.n)?.value;
        let (fmin, fmax) = fine.growth_range();
        let (cmin, cmax) = coarse.growth_range();
        let mut model = SpectrumModel {
            config,
            p: tp.slope.p(),
            q: tp.slope.q(),
            fine,
            coarse,
            alpha_est,
            beta_est,
            b_min_est: 2.0 * fmin - cmin,
            b_max_est: 2.0 * fmax - cmax,
            grid: Vec::new(),
            zero_index: config.grid,
        };
        let n = config.grid;
        let ts: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|i| {
                let u = i as f64 / n as f64;
                config.t_max * u * u.abs()
            })
            .collect();
        model.grid = ts.iter().map(|&t| (t, model.pressure(t))).collect();
        Ok(model)
    }

    pub fn config(&self) -> &SpectrumConfig {
        &self.config
    }

    /// `2·P_n(t) − P_{n/2}(t)`.
    pub fn pressure(&self, t: f64) -> f64 {
        2.0 * self.fine.pressure(t) - self.coarse.pressure(t)
    }

    pub fn fine_table(&self) -> &PressureTable {
        &self.fine
    }

    pub fn coarse_table(&self) -> &PressureTable {
        &self.coarse
    }

    pub fn alpha_est(&self) -> f64 {
        self.alpha_est
    }

    pub fn beta_est(&self) -> f64 {
        self.beta_est
    }

    pub fn b_min_est(&self) -> f64 {
        self.b_min_est
    }

    pub fn b_max_est(&self) -> f64 {
        self.b_max_est
    }

    /// `P′(t)` for `t > 0` by central differences with one Richardson step.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!(
                "pressure derivative needs t > 0, got {t}"
            )));
        }
        let h = self.config.h;
        let d = |h: f64| (self.pressure(t + h) - self.pressure(t - h)) / (2.0 * h);
        Ok((4.0 * d(h / 2.0) - d(h)) / 3.0)
    }

    /// `P′(0+)` by forward differences with one Richardson step.
    pub fn derivative_zero_plus(&self) -> f64 {
        let h = self.config.h;
        let p0 = self.pressure(0.0);
        let d = |h: f64| (self.pressure(h) - p0) / h;
        2.0 * d(h / 2.0) - d(h)
    }

    fn legendre(&self, delta: f64, range: std::ops::RangeInclusive<usize>) -> (f64, f64) {
        let ln2 = std::f64::consts::LN_2;
        let g = |t: f64| -delta * t + self.pressure(t) / ln2;
        let (lo, hi) = (*range.start(), *range.end());
        let (best, _) = self.grid[range.clone()]
            .iter()
            .enumerate()
            .map(|(i, &(t, pt))| (lo + i, -delta * t + pt / ln2))
            .fold((lo, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        let a = self.grid[best.saturating_sub(1).max(lo)].0;
        let b = self.grid[(best + 1).min(hi)].0;
        let grid_val = g(self.grid[best].0);
        let (t, v) = if b > a { golden_min(g, a, b) } else { (a, grid_val) };
        if v < grid_val {
            (t, v)
        } else {
            (self.grid[best].0, grid_val)
        }
    }

    /// `inf_{t>0} {−δt + P(t)/log 2}` without the plateau splice.
    fn positive_branch(&self, delta: f64) -> (f64, f64) {
        self.legendre(delta, self.zero_index..=self.grid.len() - 1)
    }

    fn check_argument(x: f64) -> Result<()> {
        if x.is_finite() {
            Ok(())
        } else {
            Err(Error::Validation(format!("spectrum argument must be finite, got {x}")))
        }
    }

    fn endpoint(&self, x: f64, end: f64) -> bool {
        (x - end).abs() <= 1e-12 * end.abs().max(1.0)
    }

    /// `Γ(δ)`: 1 on `[0, α]`, the Legendre transform above.
    pub fn gamma(&self, delta: f64) -> Result<LegendreValue> {
        Self::check_argument(delta)?;
        if delta < 0.0 {
            return Err(Error::Domain(format!("Γ needs δ >= 0, got {delta}")));
        }
        if delta <= self.alpha_est {
            return Ok(LegendreValue {
                value: 1.0,
                infimum: None,
                t_star: None,
                flag: SpectrumFlag::Plateau,
            });
        }
        self.chi(delta)
    }

    /// `χ(δ)` on `[α, b_max]`.
    pub fn chi(&self, delta: f64) -> Result<LegendreValue> {
        Self::check_argument(delta)?;
        let in_range = delta >= self.alpha_est - 1e-12 && delta <= self.b_max_est;
        let at_end = self.endpoint(delta, self.b_max_est);
        if !in_range && !at_end {
            return Ok(LegendreValue {
                value: 0.0,
                infimum: None,
                t_star: None,
                flag: SpectrumFlag::OutOfRange,
            });
        }
        let (t, v) = self.positive_branch(delta);
        Ok(if at_end {
            LegendreValue {
                value: 0.0,
                infimum: Some(v),
                t_star: Some(t),
                flag: SpectrumFlag::Endpoint,
            }
        } else {
            LegendreValue {
                value: v,
                infimum: Some(v),
                t_star: Some(t),
                flag: SpectrumFlag::Interior,
            }
        })
    }

    /// Box-dimension spectrum: infimum over `t` of both signs.
    pub fn box_dim(&self, a: f64) -> Result<LegendreValue> {
        Self::check_argument(a)?;
        let at_end = self.endpoint(a, self.b_min_est) || self.endpoint(a, self.b_max_est);
        if !at_end && (a < self.b_min_est || a > self.b_max_est) {
            return Ok(LegendreValue {
                value: 0.0,
                infimum: None,
                t_star: None,
                flag: SpectrumFlag::OutOfRange,
            });
        }
        let (t, v) = self.legendre(a, 0..=self.grid.len() - 1);
        Ok(LegendreValue {
            value: if at_end { 0.0 } else { v },
            infimum: Some(v),
            t_star: Some(t),
            flag: if at_end {
                SpectrumFlag::Endpoint
            } else {
                SpectrumFlag::Interior
            },
        })
    }

    /// Local-dimension spectrum, the box spectrum at `s − α′`.
    pub fn local_dim(&self, a: f64) -> Result<LegendreValue> {
        Self::check_argument(a)?;
        self.box_dim(gasket_dimension() - a)
    }

    pub fn evaluate(&self, kind: SpectrumKind, x: f64) -> Result<LegendreValue> {
        match kind {
            SpectrumKind::Gamma => self.gamma(x),
            SpectrumKind::Chi => self.chi(x),
            SpectrumKind::Box => self.box_dim(x),
            SpectrumKind::LocalDim => self.local_dim(x),
        }
    }

    pub fn domain(&self, kind: SpectrumKind) -> (f64, f64) {
        let s = gasket_dimension();
        match kind {
            SpectrumKind::Gamma => (0.0, self.b_max_est),
            SpectrumKind::Chi => (self.alpha_est, self.b_max_est),
            SpectrumKind::Box => (self.b_min_est, self.b_max_est),
            SpectrumKind::LocalDim => (s - self.b_max_est, s - self.b_min_est),
        }
    }

    /// `points` equally spaced arguments spanning the domain of `kind`.
    pub fn default_grid(&self, kind: SpectrumKind, points: usize) -> Vec<f64> {
        let (lo, hi) = self.domain(kind);
        linspace(lo, hi, points)
    }

    pub fn curve(&self, kind: SpectrumKind, grid: &[f64]) -> Result<SpectrumCurve> {
        let points = grid
            .iter()
            .map(|&x| {
                Ok(SpectrumPoint {
                    argument: x,
                    result: self.evaluate(kind, x)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let s = gasket_dimension();
        Ok(SpectrumCurve {
            kind,
            p: self.p,
            q: self.q,
            n: self.config.n,
            s,
            alpha_est: self.alpha_est,
            beta_est: self.beta_est,
            endpoints: match kind {
                SpectrumKind::LocalDim => (s - self.b_max_est, s - self.b_min_est),
                _ => (self.b_min_est, self.b_max_est),
            },
            points,
        })
    }
}

/// `points` equally spaced values from `lo` to `hi` inclusive; the last one
/// is exactly `hi`.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}
