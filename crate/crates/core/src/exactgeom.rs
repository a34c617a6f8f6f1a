//! Exact arithmetic for the right-angle gasket and rational-slope lines.
//!
//! Everything here is exact: rationals are `BigRational`, and the one
//! irrational constant that appears (√3, from the equilateral gasket) is
//! carried symbolically in [`QSqrt3`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// A reduced positive rational slope `p/q` of a line in the right-angle
/// gasket, together with the matching tangent `√3·p/(2q+p)` in the
/// equilateral gasket.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlopeSpec {
    p: u64,
    q: u64,
    /// Original input when it was not in lowest terms.
    reduced_from: Option<(u64, u64)>,
}

/// Validates `p/q` and reduces it to lowest terms.
pub fn make_slope(p: i64, q: i64) -> Result<SlopeSpec> {
    if p < 1 || q < 1 {
        return Err(Error::Validation(format!(
            "slope p/q needs p, q >= 1 (got {p}/{q})"
        )));
    }
    let (p, q) = (p as u64, q as u64);
    let g = p.gcd(&q);
    Ok(SlopeSpec {
        p: p / g,
        q: q / g,
        reduced_from: (g > 1).then_some((p, q)),
    })
}

impl SlopeSpec {
    /// Slope whose equilateral-gasket tangent is `√3·m/n`, `0 < m < n`.
    ///
    /// Inverts `m/n = p/(2q+p)`, i.e. `p/q = 2m/(n-m)`.
    pub fn from_gasket_tangent(m: i64, n: i64) -> Result<SlopeSpec> {
        if m < 1 || n <= m {
            return Err(Error::Validation(format!(
                "gasket tangent √3·{m}/{n} must lie in (0, √3)"
            )));
        }
        let spec = make_slope(2 * m, n - m)?;
        Ok(SlopeSpec {
            reduced_from: None,
            ..spec
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    /// Number of partition intervals, `p + q`.
    pub fn m(&self) -> usize {
        (self.p + self.q) as usize
    }

    pub fn was_reduced(&self) -> bool {
        self.reduced_from.is_some()
    }

    pub fn reduced_from(&self) -> Option<(u64, u64)> {
        self.reduced_from
    }

    pub fn tan_right(&self) -> Rational {
        rat(self.p as i64, self.q as i64)
    }

    /// `(p, 2q+p)`, read as the tangent `√3·p/(2q+p)`.
    pub fn tan_gasket_coeffs(&self) -> (u64, u64) {
        (self.p, 2 * self.q + self.p)
    }

    /// `p/(2q+p)` in lowest terms.
    pub fn gasket_tangent_reduced(&self) -> (u64, u64) {
        let (a, b) = self.tan_gasket_coeffs();
        let g = a.gcd(&b);
        (a / g, b / g)
    }

    pub fn tan_gasket(&self) -> QSqrt3 {
        let (a, b) = self.tan_gasket_coeffs();
        QSqrt3::new(Rational::zero(), rat(a as i64, b as i64))
    }

    pub fn tan_gasket_f64(&self) -> f64 {
        let (a, b) = self.tan_gasket_coeffs();
        3f64.sqrt() * a as f64 / b as f64
    }

    /// The parity rule "m odd ⇒ n odd" for the reduced gasket tangent `m/n`.
    ///
    /// Holds whenever `p` is odd or divisible by 4; fails for `p ≡ 2 (mod 4)`
    /// (e.g. `2/3 ↦ √3/4`) even though that angle is a valid rational
    /// direction. Reported, never enforced.
    pub fn satisfies_q_prime_parity(&self) -> bool {
        let (m, n) = self.gasket_tangent_reduced();
        m % 2 == 0 || n % 2 == 1
    }

    /// Left end `-p/q` of the projection `[-p/q, 1]`.
    pub fn projection_min(&self) -> Rational {
        -self.tan_right()
    }

    pub fn contains_offset(&self, a: &Rational) -> bool {
        *a >= self.projection_min() && *a <= Rational::one()
    }
}

impl fmt::Display for SlopeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// A number `a + b√3` with rational `a`, `b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QSqrt3 {
    pub a: Rational,
    pub b: Rational,
}

impl QSqrt3 {
    pub fn new(a: Rational, b: Rational) -> Self {
        QSqrt3 { a, b }
    }

    pub fn rational(a: Rational) -> Self {
        QSqrt3 {
            a,
            b: Rational::zero(),
        }
    }

    pub fn zero() -> Self {
        Self::rational(Rational::zero())
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    /// Exact inverse `(a - b√3)/(a² - 3b²)`; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        let norm = &self.a * &self.a - rat_int(3) * &self.b * &self.b;
        if norm.is_zero() {
            return None;
        }
        Some(QSqrt3 {
            a: &self.a / &norm,
            b: -&self.b / &norm,
        })
    }

    pub fn to_f64(&self) -> f64 {
        self.a.to_f64().unwrap_or(f64::NAN) + 3f64.sqrt() * self.b.to_f64().unwrap_or(f64::NAN)
    }
}

impl Add for &QSqrt3 {
    type Output = QSqrt3;
    fn add(self, rhs: &QSqrt3) -> QSqrt3 {
        QSqrt3::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Sub for &QSqrt3 {
    type Output = QSqrt3;
    fn sub(self, rhs: &QSqrt3) -> QSqrt3 {
        QSqrt3::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Mul for &QSqrt3 {
    type Output = QSqrt3;
    fn mul(self, rhs: &QSqrt3) -> QSqrt3 {
        QSqrt3::new(
            &self.a * &rhs.a + rat_int(3) * &self.b * &rhs.b,
            &self.a * &rhs.b + &self.b * &rhs.a,
        )
    }
}

impl Neg for &QSqrt3 {
    type Output = QSqrt3;
    fn neg(self) -> QSqrt3 {
        QSqrt3::new(-&self.a, -&self.b)
    }
}

impl fmt::Display for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}·√3", self.a, self.b)
    }
}

/// A point whose coordinates live in `Q(√3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurdPoint {
    pub x: QSqrt3,
    pub y: QSqrt3,
}

impl SurdPoint {
    pub fn new(x: QSqrt3, y: QSqrt3) -> Self {
        SurdPoint { x, y }
    }

    pub fn to_exact(&self) -> Option<ExactPoint> {
        (self.x.is_rational() && self.y.is_rational())
            .then(|| ExactPoint::new(self.x.a.clone(), self.y.a.clone()))
    }
}

/// Linear map `T = [[1, -√3/3], [0, 2√3/3]]` taking the equilateral gasket
/// onto the right-angle gasket.
pub fn transform_t(pt: &SurdPoint) -> SurdPoint {
    let minus_third = QSqrt3::new(Rational::zero(), rat(-1, 3));
    let two_thirds = QSqrt3::new(Rational::zero(), rat(2, 3));
    SurdPoint {
        x: &pt.x + &(&minus_third * &pt.y),
        y: &two_thirds * &pt.y,
    }
}

/// Inverse of [`transform_t`]: `[[1, 1/2], [0, √3/2]]`.
pub fn transform_t_inverse(pt: &SurdPoint) -> SurdPoint {
    let half = QSqrt3::rational(rat(1, 2));
    let half_sqrt3 = QSqrt3::new(Rational::zero(), rat(1, 2));
    SurdPoint {
        x: &pt.x + &(&half * &pt.y),
        y: &half_sqrt3 * &pt.y,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExactPoint {
    pub x: Rational,
    pub y: Rational,
}

impl ExactPoint {
    pub fn new(x: Rational, y: Rational) -> Self {
        ExactPoint { x, y }
    }

    pub fn from_ints(x: i64, y: i64) -> Self {
        ExactPoint::new(rat_int(x), rat_int(y))
    }
}

/// Convex hull of a level-n cylinder `F_{i1}∘…∘F_{in}(Λ)` of the right-angle
/// gasket, where `F_0 = (x/2, y/2)`, `F_1 = (x/2 + 1/2, y/2)`,
/// `F_2 = (x/2, y/2 + 1/2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangleCell {
    /// Images of `(0,0)`, `(1,0)`, `(0,1)`.
    pub vertices: [ExactPoint; 3],
    pub word: Vec<u8>,
}

impl TriangleCell {
    pub fn root() -> Self {
        TriangleCell {
            vertices: [
                ExactPoint::from_ints(0, 0),
                ExactPoint::from_ints(1, 0),
                ExactPoint::from_ints(0, 1),
            ],
            word: Vec::new(),
        }
    }

    pub fn from_word(word: &[u8]) -> Result<Self> {
        let mut cell = Self::root();
        for &letter in word {
            cell = cell.child(letter)?;
        }
        Ok(cell)
    }

    /// Cell of the word extended by `letter` on the right.
    pub fn child(&self, letter: u8) -> Result<Self> {
        let (ox, oy) = match letter {
            0 => (0, 0),
            1 => (1, 0),
            2 => (0, 1),
            _ => {
                return Err(Error::Validation(format!(
                    "ternary letter must be 0, 1 or 2 (got {letter})"
                )))
            }
        };
        let origin = &self.vertices[0];
        let ex = (&self.vertices[1].x - &origin.x, &self.vertices[1].y - &origin.y);
        let ey = (&self.vertices[2].x - &origin.x, &self.vertices[2].y - &origin.y);
        let half = rat(1, 2);
        // child origin = origin + (ox·ex + oy·ey)/2, child edges halved
        let cx = &origin.x + &half * (rat_int(ox) * &ex.0 + rat_int(oy) * &ey.0);
        let cy = &origin.y + &half * (rat_int(ox) * &ex.1 + rat_int(oy) * &ey.1);
        let new_origin = ExactPoint::new(cx, cy);
        let v1 = ExactPoint::new(&new_origin.x + &half * &ex.0, &new_origin.y + &half * &ex.1);
        let v2 = ExactPoint::new(&new_origin.x + &half * &ey.0, &new_origin.y + &half * &ey.1);
        let mut word = self.word.clone();
        word.push(letter);
        Ok(TriangleCell {
            vertices: [new_origin, v1, v2],
            word,
        })
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }
}

/// The line `y = a + slope·x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalLine {
    pub slope: Rational,
    pub intercept: Rational,
}

impl RationalLine {
    /// Line of the given slope through offset `a ∈ [-p/q, 1]`.
    pub fn new(slope: &SlopeSpec, a: Rational) -> Result<Self> {
        if !slope.contains_offset(&a) {
            return Err(Error::Domain(format!(
                "offset {a} outside the projection [-{}/{}, 1]",
                slope.p(),
                slope.q()
            )));
        }
        Ok(RationalLine {
            slope: slope.tan_right(),
            intercept: a,
        })
    }

    /// Unchecked constructor for arbitrary lines (used by tests).
    pub fn raw(slope: Rational, intercept: Rational) -> Self {
        RationalLine { slope, intercept }
    }

    /// Sign of `y - a - slope·x` at `pt`.
    pub fn side(&self, pt: &ExactPoint) -> Ordering {
        let value = &pt.y - &self.intercept - &self.slope * &pt.x;
        if value.is_positive() {
            Ordering::Greater
        } else if value.is_negative() {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

/// Closed line meets closed triangle iff the three vertex signs of
/// `y - a - slope·x` are not all strictly the same.
pub fn line_hits_triangle(line: &RationalLine, cell: &TriangleCell) -> bool {
    let signs = cell.vertices.iter().map(|v| line.side(v));
    let (mut above, mut below) = (false, false);
    for s in signs {
        match s {
            Ordering::Equal => return true,
            Ordering::Greater => above = true,
            Ordering::Less => below = true,
        }
    }
    above && below
}
