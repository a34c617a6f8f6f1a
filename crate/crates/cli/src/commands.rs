use std::fmt::Write as _;

use serde_json::{json, Value};

use gasket_slices::exactgeom::SlopeSpec;
use gasket_slices::exponents::{
    alpha_exact, alpha_extrapolated, alpha_monte_carlo, beta_exact, beta_extrapolated,
    beta_monte_carlo, growth_envelope, ExponentEstimate, Extrapolated, DEFAULT_EXACT_DEPTH,
    DEFAULT_MC_LENGTH,
};
use gasket_slices::matrixgen::{
    build_matrices_congruence, build_matrices_geometric, count_degenerate_words,
    find_primitive_word, validate_structure, TransitionPair,
};
use gasket_slices::measures::WordMeasure;
use gasket_slices::pressure::{pressure_curve, SpectrumConfig, SpectrumKind, SpectrumModel};
use gasket_slices::selftest::run_selftest;
use gasket_slices::slicer::{
    conservation_check, expand_point, good_set_count_geometric, parse_rational, slice_report,
};
use gasket_slices::Error;

use crate::args::{parse_range, Builder, Command, ExponentArgs, KindArg, Mode, RunConfig};

pub struct Failure(pub Error);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e)
    }
}

/// Result of one subcommand, before metadata is attached.
pub struct Artifact {
    pub slope: Option<(u64, u64)>,
    pub meta: Vec<(String, Value)>,
    pub json: Value,
    pub csv: String,
    /// Set when the computation ran but found a violated invariant.
    pub failure: Option<String>,
}

impl Artifact {
    fn new(slope: Option<&SlopeSpec>, json: Value, csv: String) -> Self {
        Artifact {
            slope: slope.map(|s| (s.p(), s.q())),
            meta: Vec::new(),
            json,
            csv,
            failure: None,
        }
    }

    fn with_meta(mut self, key: &str, value: Value) -> Self {
        self.meta.push((key.into(), value));
        self
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn word(w: &[u8]) -> String {
    w.iter().map(|b| char::from(b'0' + b)).collect()
}

pub fn run(cfg: &RunConfig) -> Result<Artifact, Failure> {
    match &cfg.command {
        Command::Matrices { slope, builder } => {
            let s = slope.slope()?;
            let tp = match builder {
                Builder::Geometric => build_matrices_geometric(&s)?,
                Builder::Congruence => build_matrices_congruence(&s)?,
            };
            Ok(Artifact::new(Some(&s), tp.to_json(), tp.to_csv())
                .with_meta("builder", serde_json::to_value(builder).unwrap_or(Value::Null)))
        }
        Command::Validate { slope } => {
            let s = slope.slope()?;
            let g = build_matrices_geometric(&s)?;
            let c = build_matrices_congruence(&s)?;
            let agree = g.a0() == c.a0() && g.a1() == c.a1();
            let report = validate_structure(&c);
            let violations: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            let mut csv = String::from("check,passed,detail\n");
            let _ = writeln!(csv, "builders_agree,{agree},");
            let _ = writeln!(csv, "structure,{},{}", report.is_ok(), violations.join("; "));
            let mut art = Artifact::new(
                Some(&s),
                json!({
                    "builders_agree": agree,
                    "structure_ok": report.is_ok(),
                    "violations": violations,
                    "matchings": report.matchings,
                    "q_prime_parity": s.satisfies_q_prime_parity(),
                    "gasket_tangent": s.gasket_tangent_reduced(),
                }),
                csv,
            );
            if !agree || !report.is_ok() {
                art.failure = Some(if agree {
                    violations.join("; ")
                } else {
                    "geometric and congruence builders disagree".into()
                });
            }
            Ok(art)
        }
        Command::Primitive { slope, n } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let cert = find_primitive_word(&tp)?;
            let mut rows = Vec::new();
            let mut csv = String::from("n,count,bound,fraction\n");
            for k in 1..=*n {
                let d = count_degenerate_words(&tp, k)?;
                let _ = writeln!(csv, "{},{},{},{}", d.n, d.count, d.bound, d.fraction());
                rows.push(json!({
                    "n": d.n,
                    "count": d.count,
                    "bound": d.bound.to_string(),
                    "fraction": d.fraction(),
                }));
            }
            Ok(Artifact::new(
                Some(&s),
                json!({
                    "word": word(&cert.word),
                    "n0": cert.n0,
                    "length_bound": cert.length_bound,
                    "product_min_entry": cert.product_min_entry.to_string(),
                    "degenerate": rows,
                }),
                csv,
            )
            .with_meta("primitive_word", json!(word(&cert.word))))
        }
        Command::Alpha(args) => exponent(args, "alpha"),
        Command::Beta(args) => exponent(args, "beta"),
        Command::Envelope { slope, n } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let env = growth_envelope(&tp, *n)?;
            let mut csv = String::from("quantity,value,n,bound_kind,witness\n");
            let _ = writeln!(csv, "b_min,{},{},estimate,{}", env.b_min_est, env.n, word(&env.min_witness));
            let _ = writeln!(csv, "b_max,{},{},upper,{}", env.b_max_est, env.n, word(&env.max_witness));
            Ok(Artifact::new(Some(&s), env.to_json(&tp), csv))
        }
        Command::Pressure { slope, t, t_range, n } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let ts = if t.is_empty() { parse_range(t_range)? } else { t.clone() };
            let curve = pressure_curve(&tp, &ts, *n)?;
            Ok(Artifact::new(
                Some(&s),
                serde_json::to_value(&curve).expect("curve serializes"),
                curve.to_csv(),
            ))
        }
        Command::Spectrum {
            slope,
            kind,
            points,
            n,
            t_max,
        } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let config = SpectrumConfig {
                n: *n,
                t_max: *t_max,
                ..SpectrumConfig::default()
            };
            let model = SpectrumModel::new(&tp, config)?;
            let kind = match kind {
                KindArg::Gamma => SpectrumKind::Gamma,
                KindArg::Chi => SpectrumKind::Chi,
                KindArg::Box => SpectrumKind::Box,
                KindArg::Localdim => SpectrumKind::LocalDim,
            };
            let curve = model.curve(kind, &model.default_grid(kind, *points))?;
            Ok(Artifact::new(
                Some(&s),
                serde_json::to_value(&curve).expect("curve serializes"),
                curve.to_csv(),
            )
            .with_meta("alpha_est", json!(model.alpha_est()))
            .with_meta("beta_est", json!(model.beta_est()))
            .with_meta("b_min_est", json!(model.b_min_est()))
            .with_meta("b_max_est", json!(model.b_max_est()))
            .with_meta("spectrum_config", serde_json::to_value(config).expect("config serializes"))
            .with_meta("extrapolation", json!(format!("2*P_{} - P_{}", n, n / 2))))
        }
        Command::Slice {
            slope,
            a,
            n,
            geometric,
        } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let wm = WordMeasure::new(&tp)?;
            let a = parse_rational(a)?;
            let report = slice_report(&wm, &a, n)?;
            let geo: Vec<Value> = (1..=*geometric)
                .map(|k| {
                    let c = good_set_count_geometric(&s, &a, k)?;
                    Ok(json!({ "n": k, "count": c.count.map(|x| x.to_string()) }))
                })
                .collect::<Result<_, Error>>()?;
            let mut csv =
                String::from("n,count,log_count,dim_estimate,local_dim,box_dim,deviation,envelope\n");
            for (i, (k, count, log_count)) in report.counts.iter().enumerate() {
                let c = &report.conservation[i];
                let _ = writeln!(
                    csv,
                    "{k},{},{log_count},{},{},{},{},{}",
                    count.clone().unwrap_or_default(),
                    report.estimate.estimates[i],
                    c.local_dim,
                    c.box_dim,
                    c.deviation,
                    c.envelope
                );
            }
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value["geometric_counts"] = json!(geo);
            Ok(Artifact::new(Some(&s), value, csv)
                .with_meta("periodic_limit", json!(report.estimate.periodic_limit))
                .with_meta("periodic_limit_convention", json!("spectral radius of the period product")))
        }
        Command::Conserve { slope, a, n } => {
            let s = slope.slope()?;
            let tp = build_matrices_congruence(&s)?;
            let wm = WordMeasure::new(&tp)?;
            let a = parse_rational(a)?;
            let point = expand_point(&s, &a)?.canonical;
            let r = conservation_check(&wm, &point, *n)?;
            let mut csv =
                String::from("a,k,n,local_dim,box_dim,deviation,envelope,within_envelope,degenerate\n");
            let _ = writeln!(
                csv,
                "{a},{},{},{},{},{},{},{},{}",
                point.k(),
                r.n,
                r.local_dim,
                r.box_dim,
                r.deviation,
                r.envelope,
                r.within_envelope(),
                r.degenerate
            );
            Ok(Artifact::new(
                Some(&s),
                json!({
                    "point": point.to_json(),
                    "report": r,
                    "within_envelope": r.within_envelope(),
                }),
                csv,
            ))
        }
        Command::Selftest => {
            let report = run_selftest();
            let mut csv = String::from("check,passed,detail\n");
            for c in &report.checks {
                let _ = writeln!(csv, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
            }
            let mut art = Artifact::new(None, serde_json::to_value(&report).expect("report serializes"), csv);
            if !report.all_passed() {
                let failed: Vec<&str> = report
                    .checks
                    .iter()
                    .filter(|c| !c.passed)
                    .map(|c| c.name)
                    .collect();
                art.failure = Some(format!("failed checks: {}", failed.join(", ")));
            }
            Ok(art)
        }
    }
}

fn estimate_row(csv: &mut String, tp: &TransitionPair, e: &ExponentEstimate) {
    let mode = serde_json::to_value(e.mode).expect("mode serializes");
    let (bound, kind) = match e.bound {
        Some(b) => (
            b.value.to_string(),
            serde_json::to_value(b.kind).expect("kind serializes").as_str().unwrap_or("").to_owned(),
        ),
        None => (String::new(), "estimate".into()),
    };
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{}",
        tp.slope.p(),
        tp.slope.q(),
        mode.as_str().unwrap_or(""),
        e.n,
        e.value,
        opt(e.stderr),
        bound,
        kind,
        opt(e.companion)
    );
}

fn extrapolated_row(csv: &mut String, tp: &TransitionPair, x: &Extrapolated) {
    let _ = writeln!(
        csv,
        "{},{},extrapolated,{},{},,,estimate,",
        tp.slope.p(),
        tp.slope.q(),
        x.n_fine,
        x.value
    );
}

fn exponent(args: &ExponentArgs, which: &str) -> Result<Artifact, Failure> {
    let s = args.slope.slope()?;
    let tp = build_matrices_congruence(&s)?;
    let is_alpha = which == "alpha";
    let mut csv = String::from("p,q,mode,n,value,stderr,bound,bound_kind,companion\n");
    let (est, extra) = match args.mode {
        Mode::Exact => {
            let n = args.n.unwrap_or(DEFAULT_EXACT_DEPTH);
            let est = if is_alpha { alpha_exact(&tp, n)? } else { beta_exact(&tp, n)? };
            let extra = if args.extrapolate {
                Some(if is_alpha {
                    alpha_extrapolated(&tp, n)?
                } else {
                    beta_extrapolated(&tp, n)?
                })
            } else {
                None
            };
            (est, extra)
        }
        Mode::Mc => {
            let n = args.n.unwrap_or(DEFAULT_MC_LENGTH);
            let est = if is_alpha {
                alpha_monte_carlo(&tp, n, args.trials, args.seed)?
            } else {
                beta_monte_carlo(&tp, n, args.trials, args.seed)?
            };
            (est, None)
        }
    };
    estimate_row(&mut csv, &tp, &est);
    let mut value = est.to_json(&tp);
    if let Some(x) = &extra {
        extrapolated_row(&mut csv, &tp, x);
        value["extrapolated"] = serde_json::to_value(x).expect("extrapolation serializes");
    }
    let mut art = Artifact::new(Some(&s), value, csv).with_meta("quantity", json!(which));
    if args.mode == Mode::Mc {
        art = art.with_meta("seed", json!(args.seed));
    }
    Ok(art)
}
