mod args;
mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Map, Value};

use args::{Format, RunConfig, OUT_DIR_ENV};
use commands::{Artifact, Failure};

fn exit_code(e: &gasket_slices::Error) -> u8 {
    match e {
        gasket_slices::Error::Validation(_) | gasket_slices::Error::Domain(_) => 1,
        gasket_slices::Error::Capacity { .. } => 2,
        gasket_slices::Error::Invariant(_) => 3,
    }
}

fn command_name(cfg: &RunConfig) -> String {
    serde_json::to_value(&cfg.command)
        .ok()
        .and_then(|v| v.get("command").and_then(Value::as_str).map(str::to_owned))
        .unwrap_or_else(|| "run".into())
}

fn metadata(cfg: &RunConfig, art: &Artifact, wall: Option<f64>) -> Map<String, Value> {
    let mut meta = Map::new();
    meta.insert("tool".into(), json!("gasket-slices"));
    meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    meta.insert("command".into(), json!(command_name(cfg)));
    if let Some((p, q)) = art.slope {
        meta.insert("p".into(), json!(p));
        meta.insert("q".into(), json!(q));
    }
    meta.insert("config".into(), serde_json::to_value(&cfg.command).unwrap_or(Value::Null));
    for (k, v) in &art.meta {
        meta.insert(k.clone(), v.clone());
    }
    if let Some(w) = wall {
        meta.insert("wall_time_s".into(), json!(w));
    }
    meta
}

fn render(cfg: &RunConfig, art: &Artifact, wall: Option<f64>) -> String {
    let meta = metadata(cfg, art, wall);
    match cfg.format {
        Format::Json => {
            let doc = json!({ "meta": meta, "result": art.json });
            let mut s = serde_json::to_string_pretty(&doc).expect("json renders");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            for (k, v) in &meta {
                let v = match v {
                    Value::String(x) => x.clone(),
                    other => other.to_string(),
                };
                s.push_str(&format!("# {k}: {v}\n"));
            }
            s.push_str(&art.csv);
            s
        }
    }
}

fn destination(cfg: &RunConfig, art: &Artifact) -> Option<PathBuf> {
    if let Some(path) = &cfg.output {
        return Some(path.clone());
    }
    let dir = std::env::var_os(OUT_DIR_ENV)?;
    let mut name = command_name(cfg);
    if let Some((p, q)) = art.slope {
        name.push_str(&format!("_{p}_{q}"));
    }
    name.push('.');
    name.push_str(cfg.format.extension());
    Some(PathBuf::from(dir).join(name))
}

fn emit(cfg: &RunConfig, art: &Artifact, wall: Option<f64>) -> Result<(), String> {
    let text = render(cfg, art, wall);
    match destination(cfg, art) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| format!("{}: {e}", parent.display()))?;
            }
            std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cfg.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let start = Instant::now();
    let result = commands::run(&cfg);
    let wall = (!cfg.reproducible).then(|| start.elapsed().as_secs_f64());
    match result {
        Ok(art) => {
            if let Err(e) = emit(&cfg, &art, wall) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if let Some(report) = &art.failure {
                eprintln!("invariant violation: {report}");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(Failure(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
