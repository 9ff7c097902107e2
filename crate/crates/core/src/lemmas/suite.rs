//! Seeded ensembles driving each check, with a single report shape.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::{
    alpha_of, block_abs_sum, check_block_domination, check_convolution_inequality,
    check_cz_kernel, check_fefferman_stein, check_indicator_decay, check_kernel_block,
    check_littlewood_paley, coarse_interaction, delta_of, fine_interaction,
};
use super::cww::{check_cww, cww_lambdas, pooled_cww_fit, PooledCww};
use super::{ConstantEstimate, Witness};
use crate::error::{domain, LabError, Result};
use crate::grid::{DyadicGrid, Interval, SampledFunction};
use crate::operators::{default_majorant_q, hl_maximal, phi_block, CoefficientVector};
use crate::random::{
    random_haar_polynomial, random_signs, random_step, random_uniform, stream_rng,
};
use crate::systems::OrthonormalSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Lemma {
    /// Block kernel bound `Σ_{block}|φ_k(x)φ_k(t)| ≲ 2^m ξ(2^m(x-t))`.
    #[serde(rename = "y3")]
    KernelBlock,
    /// Two-way comparison of a Φ block with the matching Haar block.
    #[serde(rename = "L21")]
    BlockDomination,
    /// Decay of `ΔΦ_m(1_I)` away from the endpoints of `I`.
    #[serde(rename = "L31")]
    IndicatorDecay,
    /// `|ΔH_n(ΔΦ_m g)| ≲ 2^{α(m-n)} M(Σ_{block m}|a_kφ_k|)` for `n >= m`.
    #[serde(rename = "L32")]
    HaarPhiFine,
    /// `|H_n(ΔΦ_m f)| ≲ 2^{(n-m)/q'} M_q(ΔΦ_m f)` for `m >= n`.
    #[serde(rename = "L33")]
    HaarPhiCoarse,
    #[serde(rename = "LP")]
    LittlewoodPaley,
    /// `‖|a| * |b|‖_2 <= ‖a‖_2 ‖b‖_1`.
    #[serde(rename = "conv")]
    Convolution,
    /// Vector-valued `M_q` bound.
    #[serde(rename = "FS")]
    FeffermanStein,
    /// Good-λ inequality for `M^d` and the Haar square function.
    #[serde(rename = "CWW")]
    GoodLambda,
    /// Size and smoothness of the modulated kernel `Σ λ_k φ_k(x)φ_k(t)`.
    #[serde(rename = "CZ")]
    KernelRegularity,
}

impl Lemma {
    pub const ALL: [Lemma; 10] = [
        Lemma::KernelBlock,
        Lemma::BlockDomination,
        Lemma::IndicatorDecay,
        Lemma::HaarPhiFine,
        Lemma::HaarPhiCoarse,
        Lemma::LittlewoodPaley,
        Lemma::Convolution,
        Lemma::FeffermanStein,
        Lemma::GoodLambda,
        Lemma::KernelRegularity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::KernelBlock => "y3",
            Lemma::BlockDomination => "L21",
            Lemma::IndicatorDecay => "L31",
            Lemma::HaarPhiFine => "L32",
            Lemma::HaarPhiCoarse => "L33",
            Lemma::LittlewoodPaley => "LP",
            Lemma::Convolution => "conv",
            Lemma::FeffermanStein => "FS",
            Lemma::GoodLambda => "CWW",
            Lemma::KernelRegularity => "CZ",
        }
    }

    /// Whether the check reads an orthonormal system.
    pub fn needs_system(self) -> bool {
        !matches!(self, Lemma::Convolution)
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Lemma {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Lemma::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Lemma::ALL.iter().map(|l| l.name()).collect();
                LabError::Domain(format!("unknown lemma {s:?}; expected one of {}", names.join("|")))
            })
    }
}

/// Budgets and parameters. Unset lists default to every admissible value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaParams {
    pub trials: usize,
    pub seed: u64,
    /// Lattice size per axis for pointwise kernel checks.
    pub points: usize,
    /// Block indices `m`.
    pub m: Option<Vec<u32>>,
    /// Haar levels `n`.
    pub n: Option<Vec<u32>>,
    /// Exponent of `M_q`; defaults depend on the check.
    pub q: Option<f64>,
    pub p: f64,
    /// Smoothness exponent for the kernel check, default `min(α, δ)/2`.
    pub beta: Option<f64>,
    /// Intervals `[a, b)`; defaults to `[1/4, 1/2)` plus random aligned ones.
    pub intervals: Option<Vec<[f64; 2]>>,
    pub eps: Option<Vec<f64>>,
    /// Number of `λ` quantiles of `M^d f` per good-λ input.
    pub quantiles: usize,
    pub sign_samples: usize,
    /// Random step functions are constant on cells of this level.
    pub input_level: u32,
    /// Haar levels of random good-λ inputs, capped by the grid.
    pub haar_levels: u32,
    /// Functions per vector-valued family.
    pub family: usize,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 42,
            points: 512,
            m: None,
            n: None,
            q: None,
            p: 2.0,
            beta: None,
            intervals: None,
            eps: None,
            quantiles: 20,
            sign_samples: 64,
            input_level: 6,
            haar_levels: 10,
            family: 4,
        }
    }
}

/// `0.1, 0.15, …, 0.5`.
pub fn default_eps() -> Vec<f64> {
    (0..9).map(|i| (10 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub params: LemmaParams,
    /// Largest ratio over all parts.
    pub ratio_sup: f64,
    /// Part attaining `ratio_sup`.
    pub worst_part: Option<String>,
    pub witness: Option<Witness>,
    pub samples: usize,
    #[serde(rename = "J")]
    pub level: u32,
    pub parts: BTreeMap<String, ConstantEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub good_lambda: Option<GoodLambdaSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodLambdaSummary {
    pub pooled: PooledCww,
    /// Set inclusions held on every input.
    pub inclusions_hold: bool,
}

type Parts = BTreeMap<String, ConstantEstimate>;

fn merge_parts(into: &mut Parts, from: Parts) {
    for (k, v) in from {
        match into.remove(&k) {
            Some(prev) => into.insert(k, prev.merge(v)),
            None => into.insert(k, v),
        };
    }
}

/// Runs `trial` for each input in parallel and merges in input order.
fn over_trials<F>(trials: usize, trial: F) -> Result<Parts>
where
    F: Fn(usize) -> Result<Parts> + Sync,
{
    let per: Vec<Parts> = (0..trials)
        .into_par_iter()
        .map(|t| {
            trial(t).map(|p| {
                p.into_iter()
                    .map(|(k, v)| (k, v.tag_input(t)))
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    let mut out = Parts::new();
    for p in per {
        merge_parts(&mut out, p);
    }
    Ok(out)
}

fn max_block(s: &OrthonormalSystem) -> u32 {
    s.len().ilog2()
}

fn block_list(s: &OrthonormalSystem, given: &Option<Vec<u32>>) -> Vec<u32> {
    given.clone().unwrap_or_else(|| (1..=max_block(s)).collect())
}

fn random_coefficients(s: &OrthonormalSystem, seed: u64, t: usize) -> Result<CoefficientVector> {
    let mut v = random_uniform(s.len(), &mut stream_rng(seed, t as u64));
    if s.first_index_special() {
        v[0] = 0.0;
    }
    CoefficientVector::new(v)
}

fn require<'a>(lemma: Lemma, s: Option<&'a OrthonormalSystem>) -> Result<&'a OrthonormalSystem> {
    s.ok_or_else(|| LabError::Domain(format!("check {lemma} needs a system")))
}

/// Runs one check over its seeded ensemble. Identical arguments give
/// identical reports regardless of the thread count.
pub fn run_lemma(
    lemma: Lemma,
    system: Option<&OrthonormalSystem>,
    params: &LemmaParams,
) -> Result<LemmaReport> {
    if params.trials == 0 {
        return domain("trials must be positive");
    }
    let mut good_lambda = None;
    let (parts, level) = match lemma {
        Lemma::Convolution => (run_convolution(params)?, 0),
        Lemma::GoodLambda => {
            let s = require(lemma, system)?;
            let (parts, summary) = run_good_lambda(*s.grid(), params)?;
            good_lambda = Some(summary);
            (parts, s.grid().level())
        }
        _ => {
            let s = require(lemma, system)?;
            let parts = match lemma {
                Lemma::KernelBlock => run_kernel_block(s, params)?,
                Lemma::BlockDomination => run_block_domination(s, params)?,
                Lemma::IndicatorDecay => run_indicator_decay(s, params)?,
                Lemma::HaarPhiFine => run_interaction(s, params, true)?,
                Lemma::HaarPhiCoarse => run_interaction(s, params, false)?,
                Lemma::LittlewoodPaley => run_littlewood_paley(s, params)?,
                Lemma::FeffermanStein => run_fefferman_stein(s, params)?,
                Lemma::KernelRegularity => run_kernel_regularity(s, params)?,
                Lemma::Convolution | Lemma::GoodLambda => unreachable!(),
            };
            (parts, s.grid().level())
        }
    };
    let mut ratio_sup = 0.0;
    let mut worst_part = None;
    let mut witness = None;
    let mut samples = 0;
    for (name, est) in &parts {
        samples += est.samples;
        if est.ratio_sup > ratio_sup || worst_part.is_none() {
            ratio_sup = est.ratio_sup;
            worst_part = Some(name.clone());
            witness = est.witness.clone();
        }
    }
    Ok(LemmaReport {
        lemma,
        params: params.clone(),
        ratio_sup,
        worst_part,
        witness,
        samples,
        level,
        parts,
        good_lambda,
    })
}

fn run_kernel_block(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    delta_of(s)?;
    let ms = block_list(s, &params.m);
    let ests: Vec<ConstantEstimate> = ms
        .iter()
        .map(|&m| check_kernel_block(s, m, params.points))
        .collect::<Result<_>>()?;
    Ok(ms
        .iter()
        .zip(ests)
        .map(|(m, e)| (format!("kernel[m={m}]"), e))
        .collect())
}

fn run_block_domination(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    let ms = block_list(s, &params.m);
    over_trials(params.trials, |t| {
        let a = random_coefficients(s, params.seed, t)?;
        let mut parts = Parts::new();
        for &m in &ms {
            let (upper, lower) = check_block_domination(s, &a, m)?;
            parts.insert(format!("phi_below_haar[m={m}]"), upper);
            parts.insert(format!("haar_below_phi[m={m}]"), lower);
        }
        Ok(parts)
    })
}

fn default_intervals(params: &LemmaParams) -> Result<Vec<Interval>> {
    if let Some(list) = &params.intervals {
        return list.iter().map(|[a, b]| Interval::new(*a, *b)).collect();
    }
    let cells = 1u64 << params.input_level;
    let mut out = vec![Interval::new(0.25, 0.5)?];
    for t in 1..params.trials {
        let mut rng = stream_rng(params.seed, t as u64);
        let i = rng.gen_range(0..cells);
        let j = rng.gen_range(i + 1..=cells);
        out.push(Interval::new(i as f64 / cells as f64, j as f64 / cells as f64)?);
    }
    Ok(out)
}

fn run_indicator_decay(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    delta_of(s)?;
    let ms = block_list(s, &params.m);
    let intervals = default_intervals(params)?;
    over_trials(intervals.len(), |t| {
        let mut parts = Parts::new();
        for &m in &ms {
            let (near, far) = check_indicator_decay(s, intervals[t], m)?;
            parts.insert(format!("near[m={m}]"), near);
            parts.insert(format!("far[m={m}]"), far);
        }
        Ok(parts)
    })
}

fn run_interaction(s: &OrthonormalSystem, params: &LemmaParams, fine: bool) -> Result<Parts> {
    let ms = block_list(s, &params.m);
    let ns = params
        .n
        .clone()
        .unwrap_or_else(|| (1..=max_block(s)).collect());
    if let Some(&n) = ns.iter().find(|&&n| n == 0 || n > s.grid().level()) {
        return domain(format!("Haar level {n} outside 1..={}", s.grid().level()));
    }
    let (alpha, delta, q) = if fine {
        (alpha_of(s)?, 0.0, 1.0)
    } else {
        let delta = delta_of(s)?;
        (0.0, delta, params.q.unwrap_or_else(|| default_majorant_q(params.p, delta)))
    };
    over_trials(params.trials, |t| {
        let a = random_coefficients(s, params.seed, t)?;
        let mut parts = Parts::new();
        for &m in &ms {
            let block_fn = phi_block(&a, s, m)?;
            if fine {
                let majorant = hl_maximal(&block_abs_sum(&a, s, m)?, 1.0)?.function;
                for &n in ns.iter().filter(|&&n| n >= m) {
                    let e = fine_interaction(&block_fn, &majorant, n, m, alpha)?;
                    parts.insert(format!("fine[n={n},m={m}]"), e);
                }
            } else {
                let mq = hl_maximal(&block_fn, q)?.function;
                for &n in ns.iter().filter(|&&n| n <= m) {
                    let e = coarse_interaction(&block_fn, &mq, n, m, q, delta)?;
                    parts.insert(format!("coarse[n={n},m={m}]"), e);
                }
            }
        }
        Ok(parts)
    })
}

fn run_littlewood_paley(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    let grid = *s.grid();
    over_trials(params.trials, |t| {
        let f = random_step(params.input_level, grid, &mut stream_rng(params.seed, t as u64))?;
        let lp = check_littlewood_paley(s, &f, params.p, params.sign_samples, params.seed ^ t as u64)?;
        Ok(Parts::from([
            ("block_square".to_string(), lp.block_square),
            ("square_over_random".to_string(), lp.square_over_random),
            ("random_over_square".to_string(), lp.random_over_square),
            ("random_over_f".to_string(), lp.random_over_f),
        ]))
    })
}

fn run_fefferman_stein(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    let grid = *s.grid();
    let q = params.q.unwrap_or(1.0);
    over_trials(params.trials, |t| {
        let mut rng = stream_rng(params.seed, t as u64);
        let family: Vec<SampledFunction> = (0..params.family.max(1))
            .map(|_| random_step(params.input_level, grid, &mut rng))
            .collect::<Result<_>>()?;
        Ok(Parts::from([(
            "vector_maximal".to_string(),
            check_fefferman_stein(&family, params.p, q)?,
        )]))
    })
}

fn run_kernel_regularity(s: &OrthonormalSystem, params: &LemmaParams) -> Result<Parts> {
    let beta = match params.beta {
        Some(b) => b,
        None => alpha_of(s)?.min(delta_of(s)?) / 2.0,
    };
    over_trials(params.trials, |t| {
        let mut lambda = random_signs(s.len(), &mut stream_rng(params.seed, t as u64));
        if s.first_index_special() {
            lambda[0] = 0.0;
        }
        let (size, smooth) = check_cz_kernel(s, &lambda, beta, params.points)?;
        Ok(Parts::from([
            ("size".to_string(), size),
            ("smoothness".to_string(), smooth),
        ]))
    })
}

fn run_convolution(params: &LemmaParams) -> Result<Parts> {
    over_trials(params.trials, |t| {
        let mut rng = stream_rng(params.seed, t as u64);
        let seq = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
            let len = rng.gen_range(1..=16);
            (0..len).map(|_| rng.gen_range(-5i32..=5) as f64).collect()
        };
        let a = seq(&mut rng);
        let b = seq(&mut rng);
        Ok(Parts::from([(
            "convolution".to_string(),
            check_convolution_inequality(&a, &b)?,
        )]))
    })
}

fn run_good_lambda(grid: DyadicGrid, params: &LemmaParams) -> Result<(Parts, GoodLambdaSummary)> {
    let eps = params.eps.clone().unwrap_or_else(default_eps);
    let levels = params.haar_levels.min(grid.level());
    let tables: Vec<_> = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let f = random_haar_polynomial(levels, grid, &mut stream_rng(params.seed, t as u64))?;
            let lambdas = cww_lambdas(&f, params.quantiles);
            check_cww(&f, &eps, &lambdas)
        })
        .collect::<Result<_>>()?;
    let mut est = ConstantEstimate::empty(grid.level());
    for (t, table) in tables.iter().enumerate() {
        for r in &table.rows {
            let mut e = ConstantEstimate::empty(grid.level());
            e.offer(r.lhs_measure, r.rhs_measure, || Witness {
                input: t,
                params: BTreeMap::from([("eps".to_string(), r.eps), ("lambda".to_string(), r.lambda)]),
                ..Default::default()
            });
            est = est.merge(e);
        }
    }
    let summary = GoodLambdaSummary {
        inclusions_hold: tables.iter().all(|t| t.inclusions_hold()),
        pooled: pooled_cww_fit(&tables),
    };
    Ok((Parts::from([("good_lambda".to_string(), est)]), summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_franklin, build_haar};

    fn small() -> LemmaParams {
        LemmaParams {
            trials: 3,
            points: 64,
            ..Default::default()
        }
    }

    #[test]
    fn names_round_trip() {
        for l in Lemma::ALL {
            assert_eq!(l.name().parse::<Lemma>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.name()));
        }
        assert!("L34".parse::<Lemma>().is_err());
    }

    #[test]
    fn params_parse_with_defaults() {
        let p: LemmaParams = serde_json::from_str(r#"{"trials":1000,"seed":42}"#).unwrap();
        assert_eq!(p.trials, 1000);
        assert_eq!(p.points, 512);
        assert!(serde_json::from_str::<LemmaParams>(r#"{"trails":3}"#).is_err());
        assert_eq!(default_eps().len(), 9);
        assert!((default_eps()[8] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn convolution_runs_without_a_system() {
        let p = LemmaParams {
            trials: 200,
            ..Default::default()
        };
        let r = run_lemma(Lemma::Convolution, None, &p).unwrap();
        assert!(r.ratio_sup <= 1.0 + 1e-12);
        assert_eq!(r.samples, 200);
        assert!(run_lemma(Lemma::KernelBlock, None, &p).is_err());
    }

    #[test]
    fn every_check_runs_on_a_small_franklin_system() {
        let s = build_franklin(16, DyadicGrid::new(8).unwrap()).unwrap();
        for l in Lemma::ALL {
            let r = run_lemma(l, Some(&s), &small()).unwrap();
            assert!(r.ratio_sup.is_finite(), "{l}: {}", r.ratio_sup);
            assert!(r.samples > 0, "{l}");
            assert!(!r.parts.is_empty(), "{l}");
        }
    }

    #[test]
    fn interaction_pairs_cover_both_triangles() {
        let s = build_franklin(16, DyadicGrid::new(8).unwrap()).unwrap();
        let fine = run_lemma(Lemma::HaarPhiFine, Some(&s), &small()).unwrap();
        let coarse = run_lemma(Lemma::HaarPhiCoarse, Some(&s), &small()).unwrap();
        // 4 blocks: 10 pairs with n >= m and 10 with n <= m.
        assert_eq!(fine.parts.len(), 10);
        assert_eq!(coarse.parts.len(), 10);
        assert!(fine.parts.contains_key("fine[n=4,m=1]"));
        assert!(coarse.parts.contains_key("coarse[n=1,m=4]"));
    }

    #[test]
    fn reports_are_reproducible() {
        let s = build_franklin(16, DyadicGrid::new(8).unwrap()).unwrap();
        let a = run_lemma(Lemma::BlockDomination, Some(&s), &small()).unwrap();
        let b = run_lemma(Lemma::BlockDomination, Some(&s), &small()).unwrap();
        assert_eq!(a, b);
        let w = a.witness.as_ref().unwrap();
        assert!(w.input < 3);
    }

    #[test]
    fn haar_lacks_decay_parameters() {
        let s = build_haar(16, DyadicGrid::new(6).unwrap()).unwrap();
        assert!(run_lemma(Lemma::KernelBlock, Some(&s), &small()).is_err());
        let r = run_lemma(Lemma::GoodLambda, Some(&s), &small()).unwrap();
        assert!(r.good_lambda.unwrap().inclusions_hold);
    }
}
