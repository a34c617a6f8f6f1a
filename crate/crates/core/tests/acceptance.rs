//! One line per acceptance criterion; exits non-zero if any fails.

use std::f64::consts::LN_2;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gasket_slices::exactgeom::make_slope;
use gasket_slices::exponents::{alpha_monte_carlo, beta_monte_carlo, gasket_dimension, ExponentEstimate};
use gasket_slices::matrixgen::{
    build_matrices_congruence, build_matrices_geometric, count_degenerate_words,
    find_primitive_word, validate_structure, IntMatrix, TransitionPair,
};
use gasket_slices::measures::WordMeasure;
use gasket_slices::pressure::{PressureTable, SpectrumConfig, SpectrumFlag, SpectrumKind, SpectrumModel};
use gasket_slices::selftest::coprime_slopes;
use gasket_slices::slicer::{
    conservation_check, expand_point, good_set_count_geometric, good_set_count_matrix,
    interval_dynamics_count, random_interior_offset,
};

type Outcome = Result<String, String>;

const SLOPES: [(i64, i64); 3] = [(1, 1), (1, 2), (2, 3)];

fn tp(p: i64, q: i64) -> TransitionPair {
    build_matrices_congruence(&make_slope(p, q).unwrap()).unwrap()
}

fn s() -> f64 {
    gasket_dimension()
}

fn rows(m: &IntMatrix) -> Vec<Vec<u64>> {
    m.rows()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let a0 = vec![
        vec![1, 0, 0, 0, 0],
        vec![0, 0, 1, 0, 0],
        vec![0, 1, 0, 0, 1],
        vec![0, 1, 0, 1, 0],
        vec![0, 0, 0, 1, 0],
    ];
    let a1 = vec![
        vec![0, 1, 0, 0, 0],
        vec![1, 0, 0, 1, 0],
        vec![1, 0, 1, 0, 0],
        vec![0, 0, 1, 0, 1],
        vec![0, 0, 0, 0, 1],
    ];
    let slope = make_slope(2, 3).unwrap();
    for (name, built) in [
        ("geometric", build_matrices_geometric(&slope)),
        ("congruence", build_matrices_congruence(&slope)),
    ] {
        let built = built.map_err(|e| e.to_string())?;
        if rows(built.a0()) != a0 || rows(built.a1()) != a1 {
            return Err(format!("{name} builder differs"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 1.0 {
        return Err(format!("took {secs:.3} s"));
    }
    Ok(format!("both builders exact, {secs:.3} s"))
}

/// Kuhn's augmenting paths: does `m` contain a permutation submatrix?
fn has_permutation(m: &IntMatrix) -> bool {
    let d = m.dim();
    let mut owner = vec![usize::MAX; d];
    fn augment(m: &IntMatrix, r: usize, seen: &mut [bool], owner: &mut [usize]) -> bool {
        for c in 0..m.dim() {
            if m.get(r, c) > 0 && !seen[c] {
                seen[c] = true;
                if owner[c] == usize::MAX || augment(m, owner[c], seen, owner) {
                    owner[c] = r;
                    return true;
                }
            }
        }
        false
    }
    (0..d).all(|r| augment(m, r, &mut vec![false; d], &mut owner))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let slopes = coprime_slopes(12);
    for slope in &slopes {
        let g = build_matrices_geometric(slope).map_err(|e| e.to_string())?;
        let c = build_matrices_congruence(slope).map_err(|e| e.to_string())?;
        if g.a0() != c.a0() || g.a1() != c.a1() {
            return Err(format!("{slope}: builders disagree"));
        }
        let d = c.dim();
        for m in [c.a0(), c.a1()] {
            for i in 0..d {
                let (r, k) = (m.row_sum(i), m.col_sum(i));
                if !(1..=2).contains(&r) || !(1..=2).contains(&k) || m.rows()[i].iter().any(|&x| x > 1) {
                    return Err(format!("{slope}: row/column {i} has {r}/{k} ones"));
                }
            }
            if !has_permutation(m) {
                return Err(format!("{slope}: no permutation submatrix"));
            }
        }
        let sum = c.sum();
        if (0..d).any(|j| sum.col_sum(j) != 3) {
            return Err(format!("{slope}: column sums of A0+A1"));
        }
        if !validate_structure(&c).is_ok() {
            return Err(format!("{slope}: validate_structure reports violations"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        return Err(format!("took {secs:.1} s"));
    }
    Ok(format!("{} slopes, {secs:.2} s", slopes.len()))
}

fn binomial_bound(dim: usize, n: usize) -> u128 {
    let top = (dim * (dim - 1) - 1).min(n);
    let mut total = 0u128;
    let mut binom = 1u128;
    for l in 0..=top {
        if l > 0 {
            binom = binom * (n - l + 1) as u128 / l as u128;
        }
        total += binom << l;
    }
    total
}

/// Zero pattern as row bitmasks.
fn pattern(m: &IntMatrix) -> Vec<u32> {
    m.rows()
        .iter()
        .map(|r| r.iter().enumerate().filter(|(_, &x)| x > 0).fold(0, |acc, (j, _)| acc | 1 << j))
        .collect()
}

fn brute_degenerate(tp: &TransitionPair, n: usize) -> u64 {
    let d = tp.dim();
    let full = (1u32 << d) - 1;
    let letters = [pattern(tp.a0()), pattern(tp.a1())];
    let mut count = 0;
    for bits in 0u32..1 << n {
        let mut cur: Vec<u32> = (0..d).map(|i| 1 << i).collect();
        for i in 0..n {
            let l = &letters[((bits >> i) & 1) as usize];
            cur = cur
                .iter()
                .map(|&row| (0..d).filter(|&k| row >> k & 1 == 1).fold(0, |acc, k| acc | l[k]))
                .collect();
        }
        if cur.iter().any(|&r| r != full) {
            count += 1;
        }
    }
    count
}

fn criterion_3() -> Outcome {
    let slopes = coprime_slopes(12);
    let mut longest = 0;
    for slope in &slopes {
        let tp = build_matrices_congruence(slope).map_err(|e| e.to_string())?;
        let d = tp.dim();
        let cert = find_primitive_word(&tp).map_err(|e| e.to_string())?;
        if cert.word.len() > d * (d - 1) + 1 {
            return Err(format!("{slope}: primitive word of length {}", cert.word.len()));
        }
        if tp.product(&cert.word).iter().flatten().any(|x| x.is_zero()) {
            return Err(format!("{slope}: certificate product has a zero"));
        }
        longest = longest.max(cert.word.len());
        for n in 1..=14 {
            let c = count_degenerate_words(&tp, n).map_err(|e| e.to_string())?;
            if c.count as u128 > binomial_bound(d, n) {
                return Err(format!("{slope}: n={n} count {} over bound", c.count));
            }
            if n <= 10 && c.count != brute_degenerate(&tp, n) {
                return Err(format!("{slope}: n={n} count differs from brute force"));
            }
        }
    }
    Ok(format!("{} slopes, longest primitive word {longest}", slopes.len()))
}

fn criterion_4() -> Outcome {
    let mut checked = 0usize;
    for slope in coprime_slopes(7) {
        let tp = build_matrices_congruence(&slope).map_err(|e| e.to_string())?;
        for len in 0..=8usize {
            for bits in 0u32..1 << len {
                let word: Vec<u8> = (0..len).map(|i| ((bits >> i) & 1) as u8).collect();
                let prod = tp.product(&word);
                for j in 1..=tp.dim() {
                    let col = interval_dynamics_count(&slope, j, &word).map_err(|e| e.to_string())?;
                    if col.iter().enumerate().any(|(i, &c)| prod[i][j - 1] != BigUint::from(c)) {
                        return Err(format!("{slope} word {word:?} column {j}"));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} columns equal"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut pairs = 0;
    for (p, q) in SLOPES {
        let slope = make_slope(p, q).unwrap();
        let tp = tp(p, q);
        for _ in 0..50 {
            let a = random_interior_offset(&mut rng, &slope, 200);
            let point = expand_point(&slope, &a).map_err(|e| e.to_string())?.canonical;
            for n in 1..=12 {
                let m = good_set_count_matrix(&tp, &point, n).map_err(|e| e.to_string())?.count.unwrap();
                let g = good_set_count_geometric(&slope, &a, n).map_err(|e| e.to_string())?.count.unwrap();
                if g < m || g > &m * 3u32 {
                    return Err(format!("{p}/{q} a={a} n={n}: matrix {m}, geometric {g}"));
                }
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} (point, n) pairs sandwiched"))
}

fn criterion_6() -> Outcome {
    let grid: Vec<f64> = (0..41).map(|i| -5.0 + 0.25 * i as f64).collect();
    for (p, q) in SLOPES {
        let tp = tp(p, q);
        for n in [8, 12, 16] {
            let t = PressureTable::build(&tp, n).map_err(|e| e.to_string())?;
            if t.pressure(0.0) != LN_2 {
                return Err(format!("{p}/{q} n={n}: P(0) = {}", t.pressure(0.0)));
            }
            let err1 = (t.pressure(1.0) - 3f64.ln() - ((p + q) as f64).ln() / n as f64).abs();
            if err1 > 1e-10 {
                return Err(format!("{p}/{q} n={n}: P(1) off by {err1:e}"));
            }
            let vals: Vec<f64> = grid.iter().map(|&x| t.pressure(x)).collect();
            if let Some(i) = (1..40).find(|&i| vals[i - 1] - 2.0 * vals[i] + vals[i + 1] < -1e-12) {
                return Err(format!("{p}/{q} n={n}: not convex at t={}", grid[i]));
            }
        }
        // subadditivity gives P_2n <= P_n for t > 0 and the reverse for t < 0
        for (n, m) in [(8, 16), (12, 24)] {
            let (a, b) = (
                PressureTable::build(&tp, n).map_err(|e| e.to_string())?,
                PressureTable::build(&tp, m).map_err(|e| e.to_string())?,
            );
            for &x in &grid {
                let (pa, pb) = (a.pressure(x), b.pressure(x));
                let ok = if x > 0.0 { pb <= pa + 1e-12 } else { pb >= pa - 1e-12 };
                if !ok {
                    return Err(format!("{p}/{q}: P_{m} vs P_{n} at t={x}"));
                }
            }
        }
    }
    Ok("P(0), P(1), convexity at n = 8, 12, 16; P_16 vs P_8, P_24 vs P_12".into())
}

struct Mc {
    alpha: ExponentEstimate,
    beta: ExponentEstimate,
}

fn monte_carlo() -> Vec<Mc> {
    SLOPES
        .iter()
        .map(|&(p, q)| {
            let tp = tp(p, q);
            Mc {
                alpha: alpha_monte_carlo(&tp, 10_000, 200, 1).unwrap(),
                beta: beta_monte_carlo(&tp, 10_000, 200, 2).unwrap(),
            }
        })
        .collect()
}

fn criterion_7(mc: &[Mc]) -> Outcome {
    let mut detail = Vec::new();
    for ((p, q), m) in SLOPES.iter().zip(mc) {
        let (a, sa) = (m.alpha.value, m.alpha.stderr.unwrap());
        let (b, sb) = (m.beta.value, m.beta.stderr.unwrap());
        let za = (s() - 1.0 - a) / sa;
        let zb = (b - (s() - 1.0)) / sb;
        detail.push(format!("{p}/{q}: alpha {a:.5} ({za:.0} se), beta {b:.5} ({zb:.0} se)"));
        if za <= 3.0 || zb <= 3.0 {
            return Err(detail.join("; "));
        }
    }
    Ok(detail.join("; "))
}

fn criterion_8(mc: &[Mc], models: &[SpectrumModel]) -> Outcome {
    let mut detail = Vec::new();
    for (((p, q), m), model) in SLOPES.iter().zip(mc).zip(models) {
        let d0 = model.derivative_zero_plus() / LN_2 - m.alpha.value;
        let d1 = model.derivative(1.0).map_err(|e| e.to_string())? / LN_2 - m.beta.value;
        detail.push(format!("{p}/{q}: {d0:+.1e} {d1:+.1e}"));
        if d0.abs() > 0.02 || d1.abs() > 0.02 {
            return Err(detail.join("; "));
        }
    }
    Ok(detail.join("; "))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for (p, q) in SLOPES {
        let slope = make_slope(p, q).unwrap();
        let tp = tp(p, q);
        let wm = WordMeasure::new(&tp).map_err(|e| e.to_string())?;
        let pmin = wm.perron().min();
        for _ in 0..20 {
            let a = random_interior_offset(&mut rng, &slope, 1000);
            let point = expand_point(&slope, &a).map_err(|e| e.to_string())?.canonical;
            for n in [16, 32, 64] {
                let r = conservation_check(&wm, &point, n).map_err(|e| e.to_string())?;
                let env = ((1.0 / pmin).ln() + ((p + q) as f64).ln()) / (n as f64 * LN_2);
                let dev = (r.local_dim + r.box_dim - s()).abs();
                if dev > env {
                    return Err(format!("{p}/{q} a={a} n={n}: {dev} > {env}"));
                }
                worst = worst.max(dev / env);
            }
        }
    }
    Ok(format!("60 points, max deviation/envelope {worst:.3}"))
}

fn criterion_10(mc: &[Mc], models: &[SpectrumModel]) -> Outcome {
    let beta = mc[0].beta.value;
    let g = models[0].gamma(beta).map_err(|e| e.to_string())?.value;
    let diff = g - (s() - beta);
    if diff.abs() > 0.02 {
        return Err(format!("Gamma(beta) - (s - beta) = {diff:e}"));
    }
    Ok(format!("Gamma({beta:.5}) - (s - beta) = {diff:+.1e}"))
}

fn second_differences_nonpositive(ys: &[f64]) -> bool {
    ys.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-9)
}

fn criterion_11(model: &SpectrumModel) -> Outcome {
    let alpha = model.alpha_est();
    let gamma = model
        .curve(SpectrumKind::Gamma, &model.default_grid(SpectrumKind::Gamma, 50))
        .map_err(|e| e.to_string())?;
    let xs: Vec<f64> = gamma.points.iter().map(|p| p.argument).collect();
    let ys: Vec<f64> = gamma.points.iter().map(|p| p.result.value).collect();
    for (x, y) in xs.iter().zip(&ys) {
        if *x <= alpha && *y != 1.0 {
            return Err(format!("Gamma({x}) = {y} on the plateau"));
        }
    }
    if let Some(w) = ys.windows(2).find(|w| w[1] > w[0] + 1e-6) {
        return Err(format!("Gamma increases: {} -> {}", w[0], w[1]));
    }
    let step = xs[1] - xs[0];
    let first = xs.iter().position(|&x| x > alpha).unwrap();
    let slope_bound = gamma.points[first].result.t_star.unwrap_or(0.0).abs();
    let jump = 1.0 - ys[first];
    if jump > step * slope_bound + 1e-6 {
        return Err(format!("jump {jump} at the splice exceeds {}", step * slope_bound));
    }
    let near = model.gamma(alpha + 1e-9).map_err(|e| e.to_string())?.value;
    if (1.0 - near).abs() > 1e-6 {
        return Err(format!("Gamma(alpha+) = {near}"));
    }
    let last = gamma.points.last().unwrap();
    if last.result.value != 0.0 || last.result.flag != SpectrumFlag::Endpoint {
        return Err(format!("Gamma(b_max) = {} ({:?})", last.result.value, last.result.flag));
    }
    for kind in [SpectrumKind::Chi, SpectrumKind::Box] {
        let c = model
            .curve(kind, &model.default_grid(kind, 50))
            .map_err(|e| e.to_string())?;
        let interior: Vec<f64> = c.points[1..c.points.len() - 1].iter().map(|p| p.result.value).collect();
        if !second_differences_nonpositive(&interior) {
            return Err(format!("{kind:?} not concave"));
        }
    }
    let chi_peak = model.chi(alpha).map_err(|e| e.to_string())?.value;
    if (chi_peak - 1.0).abs() > 1e-6 {
        return Err(format!("chi(alpha) = {chi_peak}"));
    }
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("spectrum_gamma_1_1.csv");
    std::fs::write(&path, gamma.to_csv()).map_err(|e| e.to_string())?;
    Ok(format!(
        "plateau to {alpha:.4}, splice jump {jump:.1e}, zero at {:.4}; curve in {}",
        last.argument,
        path.display()
    ))
}

fn criterion_12() -> Outcome {
    let tp = tp(2, 3);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let a = alpha_monte_carlo(&tp, 2000, 16, 5).unwrap();
            let b = beta_monte_carlo(&tp, 2000, 16, 6).unwrap();
            let model = SpectrumModel::new(
                &tp,
                SpectrumConfig {
                    n: 12,
                    ..SpectrumConfig::default()
                },
            )
            .unwrap();
            let curve = model
                .curve(SpectrumKind::Gamma, &model.default_grid(SpectrumKind::Gamma, 20))
                .unwrap();
            format!("{}\n{}\n{}", a.to_json(&tp), b.to_json(&tp), curve.to_csv())
        })
    };
    let first = run(1);
    for threads in [1, 2, 4] {
        if run(threads) != first {
            return Err(format!("output changed with {threads} threads"));
        }
    }
    Ok("byte-identical across reruns and 1/2/4 threads".into())
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, outcome: Outcome, secs: f64| {
        match &outcome {
            Ok(d) => println!("criterion {n:>2}: PASS ({secs:.1} s) {d}"),
            Err(d) => {
                failures += 1;
                println!("criterion {n:>2}: FAIL ({secs:.1} s) {d}")
            }
        }
    };
    let timed = |f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        (o, start.elapsed().as_secs_f64())
    };

    for (n, f) in [
        (1, criterion_1 as fn() -> Outcome),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
    ] {
        let (o, t) = timed(&f);
        report(n, o, t);
    }

    let start = Instant::now();
    let mc = monte_carlo();
    let mc_secs = start.elapsed().as_secs_f64();
    report(7, criterion_7(&mc), mc_secs);

    let start = Instant::now();
    let models: Vec<SpectrumModel> = SLOPES
        .iter()
        .map(|&(p, q)| SpectrumModel::new(&tp(p, q), SpectrumConfig::default()).unwrap())
        .collect();
    let model_secs = start.elapsed().as_secs_f64();
    let (o, t) = timed(&|| criterion_8(&mc, &models));
    report(8, o, t + model_secs);
    let (o, t) = timed(&criterion_9);
    report(9, o, t);
    let (o, t) = timed(&|| criterion_10(&mc, &models));
    report(10, o, t);
    let (o, t) = timed(&|| criterion_11(&models[0]));
    report(11, o, t);
    let (o, t) = timed(&criterion_12);
    report(12, o, t);

    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
    println!("all 12 criteria passed");
}
