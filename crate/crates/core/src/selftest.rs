//! Fast invariant suite behind the `selftest` subcommand.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exactgeom::{make_slope, rat_int, SlopeSpec};
use crate::exponents::{alpha_exact, alpha_monte_carlo, beta_exact, gasket_dimension};
use crate::matrixgen::{
    build_matrices_congruence, build_matrices_geometric, count_degenerate_words,
    find_primitive_word, validate_structure, IntMatrix, TransitionPair,
};
use crate::measures::WordMeasure;
use crate::pressure::PressureTable;
use crate::slicer::{
    conservation_check, expand_point, good_set_count_geometric, good_set_count_geometric_unpruned,
    interval_dynamics_count, random_interior_offset,
};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Coprime `(p, q)` with `p + q ≤ max_sum`.
pub fn coprime_slopes(max_sum: u64) -> Vec<SlopeSpec> {
    let mut out = Vec::new();
    for s in 2..=max_sum {
        for p in 1..s {
            let q = s - p;
            if p.gcd(&q) == 1 {
                out.push(make_slope(p as i64, q as i64).expect("positive"));
            }
        }
    }
    out
}

/// The displayed `A_0`, `A_1` for slope `2/3`.
pub fn reference_two_thirds() -> [IntMatrix; 2] {
    [
        IntMatrix::from_rows(&[
            vec![1, 0, 0, 0, 0],
            vec![0, 0, 1, 0, 0],
            vec![0, 1, 0, 0, 1],
            vec![0, 1, 0, 1, 0],
            vec![0, 0, 0, 1, 0],
        ]),
        IntMatrix::from_rows(&[
            vec![0, 1, 0, 0, 0],
            vec![1, 0, 0, 1, 0],
            vec![1, 0, 1, 0, 0],
            vec![0, 0, 1, 0, 1],
            vec![0, 0, 0, 0, 1],
        ]),
    ]
}

fn check(name: &'static str, f: impl FnOnce() -> Result<std::result::Result<String, String>>) -> CheckResult {
    match f() {
        Ok(Ok(detail)) => CheckResult {
            name,
            passed: true,
            detail,
        },
        Ok(Err(detail)) => CheckResult {
            name,
            passed: false,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn pairs(max_sum: u64) -> Result<Vec<TransitionPair>> {
    coprime_slopes(max_sum)
        .iter()
        .map(build_matrices_congruence)
        .collect()
}

pub fn run_selftest() -> SelftestReport {
    let mut checks = Vec::new();

    checks.push(check("displayed-matrices", || {
        let s = make_slope(2, 3)?;
        let want = reference_two_thirds();
        for tp in [build_matrices_geometric(&s)?, build_matrices_congruence(&s)?] {
            if *tp.a0() != want[0] || *tp.a1() != want[1] {
                return Ok(Err(format!("builder output differs:\n{}\n{}", tp.a0(), tp.a1())));
            }
        }
        Ok(Ok("both builders reproduce the 5x5 pair".into()))
    }));

    checks.push(check("builders-and-structure", || {
        let slopes = coprime_slopes(12);
        for s in &slopes {
            let g = build_matrices_geometric(s)?;
            let c = build_matrices_congruence(s)?;
            if g.a0() != c.a0() || g.a1() != c.a1() {
                return Ok(Err(format!("builders disagree at {s}")));
            }
            let report = validate_structure(&c);
            if !report.is_ok() {
                return Ok(Err(format!("{s}: {}", report.violations[0])));
            }
        }
        Ok(Ok(format!("{} slopes", slopes.len())))
    }));

    checks.push(check("primitivity", || {
        let tps = pairs(12)?;
        for tp in &tps {
            let cert = find_primitive_word(tp)?;
            if cert.n0 > cert.length_bound || cert.product_min_entry.is_zero() {
                return Ok(Err(format!("{}: bad certificate", tp.slope)));
            }
            for n in [1, 7, 14] {
                count_degenerate_words(tp, n)?;
            }
        }
        Ok(Ok(format!("{} slopes, degenerate counts within bound", tps.len())))
    }));

    checks.push(check("interval-dynamics-oracle", || {
        for tp in pairs(7)? {
            for len in 0..=6usize {
                for bits in 0..1u32 << len {
                    let word: Vec<u8> = (0..len).map(|i| ((bits >> i) & 1) as u8).collect();
                    let prod = tp.product(&word);
                    for j in 1..=tp.dim() {
                        let col = interval_dynamics_count(&tp.slope, j, &word)?;
                        for (i, c) in col.iter().enumerate() {
                            if prod[i][j - 1] != BigUint::from(*c) {
                                return Ok(Err(format!("{} word {word:?} column {j}", tp.slope)));
                            }
                        }
                    }
                }
            }
        }
        Ok(Ok("p+q <= 7, |word| <= 6".into()))
    }));

    checks.push(check("perron-and-eta", || {
        for tp in pairs(12)? {
            let wm = WordMeasure::new(&tp)?;
            let mut total = crate::exactgeom::rat_int(0);
            for bits in 0..1u32 << 6 {
                let word: Vec<u8> = (0..6).map(|i| ((bits >> i) & 1) as u8).collect();
                total += wm.eta_exact(&word);
            }
            if total != rat_int(1) {
                return Ok(Err(format!("{}: eta mass {total}", tp.slope)));
            }
        }
        Ok(Ok("eta sums to 1 exactly at n = 6".into()))
    }));

    checks.push(check("pressure-anchors", || {
        for (p, q) in [(1, 1), (1, 2), (2, 3)] {
            let tp = build_matrices_congruence(&make_slope(p, q)?)?;
            for n in [4, 8, 12] {
                let t = PressureTable::build(&tp, n)?;
                let want = 3f64.ln() + ((p + q) as f64).ln() / n as f64;
                if t.pressure(0.0) != std::f64::consts::LN_2 || (t.pressure(1.0) - want).abs() > 1e-10 {
                    return Ok(Err(format!("{p}/{q} n={n}")));
                }
                let t2 = PressureTable::build(&tp, 2 * n)?;
                for x in [-2.0, -0.5, 0.5, 2.0] {
                    let (a, b) = (t.pressure(x), t2.pressure(x));
                    let ok = if x > 0.0 { b <= a + 1e-12 } else { b >= a - 1e-12 };
                    if !ok {
                        return Ok(Err(format!("{p}/{q} Fekete at t={x}, n={n}")));
                    }
                }
            }
        }
        Ok(Ok("P_n(0), P_n(1) and monotonicity".into()))
    }));

    checks.push(check("exponent-identities", || {
        let s = gasket_dimension();
        for (p, q) in [(1, 1), (1, 2), (2, 3)] {
            let tp = build_matrices_congruence(&make_slope(p, q)?)?;
            let (a6, a12) = (alpha_exact(&tp, 6)?.value, alpha_exact(&tp, 12)?.value);
            if a12 > a6 + 1e-12 {
                return Ok(Err(format!("{p}/{q}: alpha not monotone")));
            }
            let b = beta_exact(&tp, 10)?;
            if (s - b.value - b.companion.unwrap_or(f64::NAN)).abs() > 1e-10 || b.value <= s - 1.0 {
                return Ok(Err(format!("{p}/{q}: beta identity")));
            }
        }
        Ok(Ok("Fekete, entropy identity, beta_n > s-1".into()))
    }));

    checks.push(check("geometric-oracle", || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (p, q) in [(1, 1), (1, 2), (2, 3)] {
            let s = make_slope(p, q)?;
            let tp = build_matrices_congruence(&s)?;
            for _ in 0..3 {
                let a = random_interior_offset(&mut rng, &s, 40);
                let pt = expand_point(&s, &a)?.canonical;
                for n in 1..=6 {
                    let pruned = good_set_count_geometric(&s, &a, n)?.count;
                    if pruned != good_set_count_geometric_unpruned(&s, &a, n)?.count {
                        return Ok(Err(format!("{p}/{q} a={a} n={n}: pruning changed the count")));
                    }
                    let g = pruned.unwrap_or_default();
                    let m = crate::slicer::good_set_count_matrix(&tp, &pt, n)?.count.unwrap_or_default();
                    if g < m || g > &m * 3u32 {
                        return Ok(Err(format!("{p}/{q} a={a} n={n}: sandwich")));
                    }
                }
            }
        }
        Ok(Ok("pruning sound, counts sandwiched".into()))
    }));

    checks.push(check("conservation-envelope", || {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (p, q) in [(1, 1), (1, 2), (2, 3)] {
            let s = make_slope(p, q)?;
            let tp = build_matrices_congruence(&s)?;
            let wm = WordMeasure::new(&tp)?;
            for _ in 0..5 {
                let a = random_interior_offset(&mut rng, &s, 1000);
                let pt = expand_point(&s, &a)?.canonical;
                for n in [16, 32, 64] {
                    let r = conservation_check(&wm, &pt, n)?;
                    if !r.within_envelope() {
                        return Ok(Err(format!("{p}/{q} a={a} n={n}: deviation {}", r.deviation)));
                    }
                }
            }
        }
        Ok(Ok("deviation within O(1/n) envelope".into()))
    }));

    checks.push(check("seed-determinism", || {
        let tp = build_matrices_congruence(&make_slope(2, 3)?)?;
        let a = alpha_monte_carlo(&tp, 300, 4, 17)?;
        let b = alpha_monte_carlo(&tp, 300, 4, 17)?;
        Ok(if a.value.to_bits() == b.value.to_bits() {
            Ok("identical reruns".into())
        } else {
            Err("Monte Carlo rerun differs".into())
        })
    }));

    SelftestReport { checks }
}
