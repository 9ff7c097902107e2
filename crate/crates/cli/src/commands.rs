use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use weyl_core::extremal::{estimate_a, fit_growth_points, EstimateWitness, GrowthFit, SearchConfig};
use weyl_core::lemmas::{run_lemma, GoodLambdaSummary};
use weyl_core::operators::{
    block_majorant, chain_maximal, coefficients, default_majorant_q, dyadic_maximal, haar_block,
    haar_square, hl_maximal, hl_maximal_in, phi_block, project,
};
use weyl_core::systems::{build_franklin, build_haar, load_system, save_system, verify_wavelet_type};
use weyl_core::systems::{ConditionReport, VerifyConfig};
use weyl_core::{
    ConstantEstimate, DyadicGrid, IndexChain, Lemma, LemmaParams, MaximalMode, OrthonormalSystem,
    SampledFunction, Witness,
};

use crate::args::*;
use crate::error::CliError;
use crate::output::{csv_f64, emit, fmt_f64, to_csv, to_json};

pub const MAX_FUNCTIONS: usize = 4096;
pub const SEED_ENV: &str = "WEYL_LAB_SEED";

type Outcome = Result<(), CliError>;

fn require_file(path: &Path) -> Outcome {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Domain(format!("input file {} does not exist", path.display())))
    }
}

fn load(path: &Path) -> Result<OrthonormalSystem, CliError> {
    require_file(path)?;
    Ok(load_system(path)?)
}

fn dry_run(map: Value) -> Outcome {
    emit(None, &to_json(&map))
}

pub fn build(a: &BuildArgs, dry: bool) -> Outcome {
    if a.n == 0 {
        return Err(CliError::Domain("a system needs at least one function".into()));
    }
    if a.n > MAX_FUNCTIONS {
        return Err(CliError::Resource(format!("N = {} exceeds the cap {MAX_FUNCTIONS}", a.n)));
    }
    let grid = DyadicGrid::new(a.levels)?;
    let summary = json!({
        "subcommand": "build",
        "system": a.system,
        "N": a.n,
        "J": a.levels,
        "out": a.out,
    });
    if dry {
        if a.system == SystemKind::Franklin && (a.levels < 4 || a.n > 1usize << (a.levels - 4)) {
            return Err(CliError::Resource(format!(
                "{} Franklin functions need grid level >= log2(N) + 4",
                a.n
            )));
        }
        return dry_run(summary);
    }
    let s = match a.system {
        SystemKind::Haar => build_haar(a.n, grid)?,
        SystemKind::Franklin => build_franklin(a.n, grid)?,
    };
    save_system(&s, &a.out).map_err(|e| CliError::write(&a.out, e))?;
    emit(None, &to_json(&summary))
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    system: &'a str,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "J")]
    level: u32,
    config: VerifyConfig,
    passes: bool,
    result: ConditionReport,
}

pub fn verify(a: &VerifyArgs, dry: bool) -> Outcome {
    if dry {
        require_file(&a.input)?;
        return dry_run(json!({
            "subcommand": "verify",
            "in": a.input,
            "delta": a.delta,
            "alpha": a.alpha,
            "report": a.report,
        }));
    }
    let s = load(&a.input)?;
    let cfg = VerifyConfig::new(
        a.delta.or(s.delta).unwrap_or(0.9),
        a.alpha.or(s.alpha).unwrap_or(1.0),
    );
    let result = verify_wavelet_type(&s, &cfg)?;
    let report = VerifyReport {
        system: s.name(),
        n: s.len(),
        level: s.grid().level(),
        config: cfg,
        passes: result.pass.all(),
        result,
    };
    emit(a.report.as_deref(), &to_json(&report))
}

/// Reads a function file and refines it onto `grid`.
pub fn read_function(path: &Path, grid: DyadicGrid) -> Result<SampledFunction, CliError> {
    require_file(path)?;
    let bad = |m: String| CliError::Format(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::read(path, e))?;
    let col = r
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .position(|h| h.trim() == "value")
        .ok_or_else(|| bad("no `value` column".into()))?;
    let mut values = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = rec.get(col).unwrap_or("").trim();
        let v: f64 = field.parse().map_err(|_| bad(format!("bad value {field:?}")))?;
        if !v.is_finite() {
            return Err(bad(format!("non-finite value {field:?}")));
        }
        values.push(v);
    }
    if !values.len().is_power_of_two() {
        return Err(bad(format!("{} values is not a power of two", values.len())));
    }
    let level = values.len().trailing_zeros();
    if level > grid.level() {
        return Err(CliError::Domain(format!(
            "function on level {level} is finer than the system grid level {}",
            grid.level()
        )));
    }
    Ok(SampledFunction::new(DyadicGrid::new(level)?, values)?.refine_to(grid)?)
}

enum GSpec {
    Indices(Vec<usize>),
    Chain(Vec<Vec<usize>>),
}

fn parse_g(spec: &str) -> Result<GSpec, CliError> {
    if let Some(path) = spec.strip_prefix('@') {
        let path = Path::new(path);
        require_file(path)?;
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        let sets: Vec<Vec<usize>> = serde_json::from_str(&text)
            .map_err(|e| CliError::Format(format!("{}: {e}", path.display())))?;
        return Ok(GSpec::Chain(sets));
    }
    spec.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::Usage(format!("bad index {t:?} in --g")))
        })
        .collect::<Result<_, _>>()
        .map(GSpec::Indices)
}

pub fn op(a: &OpArgs, dry: bool) -> Outcome {
    let g = a.g.as_deref().map(parse_g).transpose()?;
    let needs = |what: &str| CliError::Usage(format!("--op {} needs {what}", op_name(a.op)));
    match a.op {
        OpKind::Project if g.is_none() => return Err(needs("--g")),
        OpKind::PhiBlock | OpKind::HaarBlock if a.level.is_none() => return Err(needs("--level")),
        _ => {}
    }
    if dry {
        require_file(&a.input)?;
        require_file(&a.f)?;
        return dry_run(json!({
            "subcommand": "op",
            "in": a.input,
            "f": a.f,
            "op": a.op,
            "g": a.g,
            "q": a.q,
            "level": a.level,
            "p": a.p,
            "exact": a.exact,
            "out": a.out,
        }));
    }
    let s = load(&a.input)?;
    let f = read_function(&a.f, *s.grid())?;
    let mut mode = None;
    let out = match a.op {
        OpKind::Project => {
            let coef = coefficients(&f, &s)?;
            match g.expect("checked above") {
                GSpec::Indices(idx) => project(&coef, &s, &idx)?,
                GSpec::Chain(sets) => chain_maximal(&coef, &s, &IndexChain::infer(sets)?)?,
            }
        }
        OpKind::PhiBlock => phi_block(&coefficients(&f, &s)?, &s, a.level.expect("checked above"))?,
        OpKind::HaarBlock => haar_block(&f, a.level.expect("checked above"))?,
        OpKind::Mq => {
            let q = a.q.unwrap_or(1.0);
            let m = if a.exact {
                hl_maximal_in(&f, q, MaximalMode::Exact)?
            } else {
                hl_maximal(&f, q)?
            };
            mode = Some(m.mode);
            m.function
        }
        OpKind::Md => dyadic_maximal(&f),
        OpKind::Square => haar_square(&f),
        OpKind::Majorant => {
            let q = a.q.unwrap_or_else(|| default_majorant_q(a.p, s.delta.unwrap_or(1.0)));
            let m = block_majorant(&coefficients(&f, &s)?, &s, q)?;
            mode = Some(m.mode);
            m.function
        }
    };
    let rows: Vec<Vec<String>> = s
        .grid()
        .midpoints()
        .zip(out.values())
        .map(|(x, v)| vec![fmt_f64(x), csv_f64(*v)])
        .collect();
    emit(a.out.as_deref(), &to_csv(&["x", "value"], &rows)?)?;
    if a.out.is_some() {
        emit(
            None,
            &to_json(&json!({"op": a.op, "J": s.grid().level(), "cells": rows.len(), "mode": mode})),
        )?;
    }
    Ok(())
}

fn op_name(k: OpKind) -> &'static str {
    match k {
        OpKind::Project => "project",
        OpKind::PhiBlock => "phi-block",
        OpKind::HaarBlock => "haar-block",
        OpKind::Mq => "mq",
        OpKind::Md => "md",
        OpKind::Square => "square",
        OpKind::Majorant => "majorant",
    }
}

/// Parses `--params`, filling the seed from the environment when unset.
pub fn resolve_params(raw: Option<&str>) -> Result<LemmaParams, CliError> {
    let text = match raw {
        None => "{}".to_string(),
        Some(r) => match r.strip_prefix('@') {
            Some(path) => {
                let path = Path::new(path);
                require_file(path)?;
                fs::read_to_string(path).map_err(|e| CliError::read(path, e))?
            }
            None => r.to_string(),
        },
    };
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Format(format!("--params: {e}")))?;
    let obj = v
        .as_object_mut()
        .ok_or_else(|| CliError::Format("--params must be a JSON object".into()))?;
    if !obj.contains_key("seed") {
        if let Some(seed) = env_seed()? {
            obj.insert("seed".into(), seed.into());
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::Format(format!("--params: {e}")))
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct Stability {
    /// `ratio_sup` on the grid one level coarser.
    #[serde(rename = "J_prev_ratio_sup")]
    prev_ratio_sup: Option<f64>,
    /// `ratio_sup(J) / ratio_sup(J-1)`.
    #[serde(rename = "J_prev_ratio")]
    prev_ratio: Option<f64>,
}

#[derive(Serialize)]
struct CheckReport {
    lemma: Lemma,
    params: LemmaParams,
    ratio_sup: f64,
    witness: Option<Witness>,
    samples: usize,
    #[serde(rename = "J")]
    level: u32,
    stability: Stability,
    worst_part: Option<String>,
    parts: BTreeMap<String, ConstantEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    good_lambda: Option<GoodLambdaSummary>,
}

pub fn check(a: &CheckArgs, dry: bool) -> Outcome {
    let params = resolve_params(a.params.as_deref())?;
    if params.trials == 0 {
        return Err(CliError::Domain("trials must be positive".into()));
    }
    if a.lemma.needs_system() && a.system.is_none() {
        return Err(CliError::Usage(format!("check {} needs --system", a.lemma)));
    }
    if dry {
        if let Some(p) = &a.system {
            require_file(p)?;
        }
        return dry_run(json!({
            "subcommand": "check",
            "lemma": a.lemma,
            "system": a.system,
            "params": params,
            "report": a.report,
        }));
    }
    let system = a.system.as_deref().map(load).transpose()?;
    let r = run_lemma(a.lemma, system.as_ref(), &params)?;
    let prev = match &system {
        Some(s) if s.grid().level() > 0 => match s.coarsen() {
            Ok(c) => run_lemma(a.lemma, Some(&c), &params).ok().map(|p| p.ratio_sup),
            Err(_) => None,
        },
        _ => None,
    };
    let report = CheckReport {
        lemma: r.lemma,
        params: r.params,
        ratio_sup: r.ratio_sup,
        witness: r.witness,
        samples: r.samples,
        level: r.level,
        stability: Stability {
            prev_ratio_sup: prev,
            prev_ratio: prev.map(|p| weyl_core::lemmas::ratio(r.ratio_sup, p)),
        },
        worst_part: r.worst_part,
        parts: r.parts,
        good_lambda: r.good_lambda,
    };
    emit(a.report.as_deref(), &to_json(&report))
}

pub const ESTIMATE_HEADER: [&str; 7] =
    ["n", "variant", "p", "best_value", "ratio_sqrt", "ratio_log", "witness_ref"];

/// `out.csv` → `out.witness.json` in the same directory.
pub fn witness_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    report.with_file_name(format!("{stem}.witness.json"))
}

#[derive(Serialize)]
struct WitnessEntry {
    #[serde(rename = "ref")]
    reference: String,
    n: usize,
    generators: usize,
    best_value: f64,
    witness: EstimateWitness,
}

pub fn estimate(a: &EstimateArgs, dry: bool) -> Outcome {
    if a.n.is_empty() {
        return Err(CliError::Usage("--n needs at least one chain length".into()));
    }
    let base = SearchConfig {
        variant: a.variant,
        p: a.p,
        active: a.active,
        ensemble: a.ensemble,
        restarts: a.restarts,
        iterations: a.iterations,
        sweeps: a.sweeps,
        seed: a.seed.unwrap_or(SearchConfig::default().seed),
        ..Default::default()
    };
    let configs: Vec<SearchConfig> = a.n.iter().map(|&n| SearchConfig { n, ..base.clone() }).collect();
    if dry {
        require_file(&a.system)?;
        return dry_run(json!({
            "subcommand": "estimate",
            "system": a.system,
            "configs": configs,
            "report": a.report,
            "witnesses": witness_path(&a.report),
        }));
    }
    let s = load(&a.system)?;
    let sidecar = witness_path(&a.report);
    let sidecar_name = sidecar.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut rows = Vec::new();
    let mut witnesses = Vec::new();
    for (i, cfg) in configs.iter().enumerate() {
        let r = estimate_a(&s, cfg)?;
        let reference = format!("{sidecar_name}#{i}");
        rows.push(vec![
            r.n.to_string(),
            r.variant.name().to_string(),
            fmt_f64(r.p),
            csv_f64(r.best_value),
            csv_f64(r.ratio_sqrt),
            csv_f64(r.ratio_log),
            reference.clone(),
        ]);
        witnesses.push(WitnessEntry {
            reference,
            n: r.n,
            generators: r.generators,
            best_value: r.best_value,
            witness: r.witness,
        });
    }
    emit(Some(&a.report), &to_csv(&ESTIMATE_HEADER, &rows)?)?;
    emit(Some(&sidecar), &to_json(&witnesses))
}

#[derive(Serialize)]
struct FitReport {
    points: Vec<(usize, f64)>,
    fit: GrowthFit,
}

/// `(n, best_value)` pairs of an estimate table.
pub fn read_estimates(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    require_file(path)?;
    let bad = |m: String| CliError::Format(format!("{}: {m}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::read(path, e))?;
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| bad(format!("no `{name}` column")))
    };
    let (cn, cb) = (find("n")?, find("best_value")?);
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let n = rec.get(cn).unwrap_or("").trim();
        let b = rec.get(cb).unwrap_or("").trim();
        let n: usize = n.parse().map_err(|_| bad(format!("bad n {n:?}")))?;
        let b: f64 = b.parse().map_err(|_| bad(format!("bad best_value {b:?}")))?;
        points.push((n, b));
    }
    Ok(points)
}

pub fn fit(a: &FitArgs, dry: bool) -> Outcome {
    if dry {
        require_file(&a.input)?;
        return dry_run(json!({"subcommand": "fit", "in": a.input, "report": a.report}));
    }
    let points = read_estimates(&a.input)?;
    let fit = fit_growth_points(&points)?;
    emit(a.report.as_deref(), &to_json(&FitReport { points, fit }))
}
