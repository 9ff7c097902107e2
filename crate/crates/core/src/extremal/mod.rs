//! Lower estimates of `A^p_n = sup_g sup_{g_k ≺ g} ‖max_k |g_k|‖_p` and its
//! monotone and singleton-increment variants, by search over generators,
//! chains and modulations.

mod pipeline;
mod search;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, LabError, Result};
use crate::grid::{lp_norm_of, DyadicInterval, Interval, SampledFunction};
use crate::operators::{add_term, coefficients, IndexChain};
use crate::random::{random_signs, random_step, stream_rng};
use crate::stats::{fit_line, LineFit};
use crate::systems::{center, OrthonormalSystem};
use search::{MultiplierSearch, OrderSearch, Term};

pub use pipeline::{
    flat_ratio, random_chain, random_polynomial, chain_pipeline, FlatRatio, PipelineReport,
};

/// Which chains `G_1, …, G_n` the search may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `G_{k+1} \ G_k` is one index.
    Sng,
    /// Nested sets.
    Mon,
    /// Independent multipliers `λ_k ∈ {-1,0,1}^N` per `k`.
    Full,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sng => "sng",
            Variant::Mon => "mon",
            Variant::Full => "full",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sng" => Ok(Variant::Sng),
            "mon" => Ok(Variant::Mon),
            "full" => Ok(Variant::Full),
            _ => domain(format!("unknown variant {s:?}; expected sng|mon|full")),
        }
    }
}

/// Generator families. Every generator is scaled to `‖g‖_p = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Every `±1` coefficient vector on the active indices, one per restart.
    AllSigns,
    /// Random `±1` coefficients.
    RandomSigns,
    /// Random signs times `2^{-n/2}` at level `n`, so each dyadic level
    /// carries the same `L²` mass.
    Blocks,
    /// Indicator of a random dyadic interval, projected on the active indices.
    Indicators,
    /// Random step function, projected on the active indices.
    Steps,
    /// Cycles through the four random families.
    Mixed,
}

impl FromStr for Ensemble {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all-signs" => Ensemble::AllSigns,
            "random-signs" => Ensemble::RandomSigns,
            "blocks" => Ensemble::Blocks,
            "indicators" => Ensemble::Indicators,
            "steps" => Ensemble::Steps,
            "mixed" => Ensemble::Mixed,
            _ => {
                return domain(format!(
                    "unknown ensemble {s:?}; expected all-signs|random-signs|blocks|indicators|steps|mixed"
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub variant: Variant,
    pub p: f64,
    /// Chain length.
    pub n: usize,
    /// Number of active indices; defaults to `n`. Larger values only apply
    /// to the monotone and full variants.
    pub active: Option<usize>,
    pub ensemble: Ensemble,
    pub restarts: usize,
    /// Random transpositions tried after the reinsertion sweeps, and the
    /// multiplier trials of the full variant.
    pub iterations: usize,
    /// Cap on remove-and-reinsert sweeps.
    pub sweeps: usize,
    pub seed: u64,
    /// Enumerate every ordering when there are at most this many.
    pub exhaustive_limit: usize,
    /// Cell level of step-function generators.
    pub input_level: u32,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Sng,
            p: 2.0,
            n: 4,
            active: None,
            ensemble: Ensemble::Mixed,
            restarts: 32,
            iterations: 200,
            sweeps: 20,
            seed: 42,
            exhaustive_limit: 5040,
            input_level: 6,
        }
    }
}

impl SearchConfig {
    fn active_count(&self) -> usize {
        self.active.unwrap_or(self.n)
    }

    fn validate(&self, s: &OrthonormalSystem) -> Result<Vec<usize>> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return domain(format!("p must lie in (1, inf), got {}", self.p));
        }
        if self.n == 0 {
            return domain("chain length must be at least 1");
        }
        if self.restarts == 0 {
            return domain("restarts must be at least 1");
        }
        let m = self.active_count();
        if m < self.n {
            return domain(format!("{m} active indices cannot carry a chain of {}", self.n));
        }
        if self.variant == Variant::Sng && m != self.n {
            return domain("singleton chains use exactly n active indices");
        }
        let first = if s.first_index_special() { 2 } else { 1 };
        if first + m - 1 > s.len() {
            return domain(format!(
                "{m} active indices from {first} exceed the system size {}",
                s.len()
            ));
        }
        if self.ensemble == Ensemble::AllSigns && m > 20 {
            return resource(format!("enumerating 2^{m} sign vectors is too many"));
        }
        Ok((first..first + m).collect())
    }

    fn generator_count(&self) -> usize {
        if self.ensemble == Ensemble::AllSigns {
            1 << self.active_count()
        } else {
            self.restarts
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateWitness {
    /// Restart (or sign pattern) that produced the generator.
    pub generator: usize,
    pub family: Ensemble,
    /// Normalized `(k, a_k)` of the generator.
    pub coefficients: Vec<(usize, f64)>,
    /// Indices in the order they enter the chain.
    pub order: Vec<usize>,
    /// `G_k` is the first `cuts[k]` entries of `order`.
    pub cuts: Vec<usize>,
    /// Full variant: `g_k = Σ_i λ[k][i] a_{order[i]} φ_{order[i]}`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<i8>>>,
}

impl EstimateWitness {
    /// The chain `G_1 ⊂ … ⊂ G_n`, when the witness is one.
    pub fn chain(&self) -> Option<Result<IndexChain>> {
        if self.lambda.is_some() {
            return None;
        }
        Some(IndexChain::infer(
            self.cuts.iter().map(|&c| self.order[..c].to_vec()).collect(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub variant: Variant,
    pub p: f64,
    pub best_value: f64,
    pub ratio_sqrt: f64,
    pub ratio_log: f64,
    pub generators: usize,
    pub witness: EstimateWitness,
}

/// `log2(n + 1)`.
pub fn growth_log(n: usize) -> f64 {
    ((n + 1) as f64).log2()
}

/// `‖max_k |g_k|‖_p` for the witness, summed in witness order.
pub fn evaluate_witness(s: &OrthonormalSystem, w: &EstimateWitness, p: f64) -> Result<f64> {
    let mut a = vec![0.0; s.len() + 1];
    for &(k, c) in &w.coefficients {
        s.check_index(k)?;
        a[k] = c;
    }
    for &k in &w.order {
        s.check_index(k)?;
    }
    let cells = s.grid().cell_count();
    let mut best = vec![0.0f64; cells];
    let fold = |best: &mut [f64], cur: &[f64]| {
        for (b, c) in best.iter_mut().zip(cur) {
            *b = b.max(c.abs());
        }
    };
    match &w.lambda {
        Some(rows) => {
            for row in rows {
                if row.len() != w.order.len() {
                    return domain("multiplier rows must match the order length");
                }
                let mut g = vec![0.0; cells];
                for (&l, &k) in row.iter().zip(&w.order) {
                    if l != 0 {
                        add_term(&mut g, s, k, l as f64 * a[k]);
                    }
                }
                fold(&mut best, &g);
            }
        }
        None => {
            if w.cuts.windows(2).any(|c| c[0] >= c[1]) || w.cuts.last() > Some(&w.order.len()) {
                return domain("cuts must increase and stay within the order");
            }
            let mut cur = vec![0.0; cells];
            let mut done = 0;
            for &c in &w.cuts {
                for &k in &w.order[done..c] {
                    add_term(&mut cur, s, k, a[k]);
                }
                done = c;
                fold(&mut best, &cur);
            }
        }
    }
    Ok(lp_norm_of(&best, p, s.grid().cell_width()))
}

/// `Σ a_k φ_k` over the listed coefficients, in index order.
fn synthesize(s: &OrthonormalSystem, coeffs: &[(usize, f64)]) -> Vec<f64> {
    let mut g = vec![0.0; s.grid().cell_count()];
    for &(k, c) in coeffs {
        add_term(&mut g, s, k, c);
    }
    g
}

fn generator(
    s: &OrthonormalSystem,
    cfg: &SearchConfig,
    active: &[usize],
    r: usize,
) -> Result<(Ensemble, Vec<(usize, f64)>)> {
    let mut rng = stream_rng(cfg.seed, 2 * r as u64);
    let family = match cfg.ensemble {
        Ensemble::Mixed => [
            Ensemble::RandomSigns,
            Ensemble::Blocks,
            Ensemble::Indicators,
            Ensemble::Steps,
        ][r % 4],
        e => e,
    };
    let grid = *s.grid();
    let project = |f: SampledFunction| -> Result<Vec<f64>> {
        let a = coefficients(&f, s)?;
        Ok(active.iter().map(|&k| a.get(k)).collect())
    };
    let raw: Vec<f64> = match family {
        Ensemble::AllSigns => (0..active.len())
            .map(|i| if (r >> i) & 1 == 1 { -1.0 } else { 1.0 })
            .collect(),
        Ensemble::RandomSigns => random_signs(active.len(), &mut rng),
        Ensemble::Blocks => {
            let signs = random_signs(active.len(), &mut rng);
            active
                .iter()
                .zip(signs)
                .map(|(&k, e)| Ok(e * (-(center(k)?.level as f64) / 2.0).exp2()))
                .collect::<Result<_>>()?
        }
        Ensemble::Indicators => {
            let level = rand::Rng::gen_range(&mut rng, 1..=cfg.input_level.clamp(1, grid.level()));
            let index = rand::Rng::gen_range(&mut rng, 1..=1u64 << level);
            let i = DyadicInterval::new(level, index)?;
            project(SampledFunction::indicator(grid, Interval::new(i.left(), i.right())?))?
        }
        Ensemble::Steps => project(random_step(cfg.input_level.min(grid.level()), grid, &mut rng)?)?,
        Ensemble::Mixed => unreachable!(),
    };
    let coeffs: Vec<(usize, f64)> = active.iter().copied().zip(raw).collect();
    let norm = lp_norm_of(&synthesize(s, &coeffs), cfg.p, grid.cell_width());
    if norm == 0.0 {
        return Ok((family, coeffs.into_iter().map(|(k, _)| (k, 0.0)).collect()));
    }
    Ok((family, coeffs.into_iter().map(|(k, c)| (k, c / norm)).collect()))
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = v.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = v.iter().rposition(|&x| x > v[i]).unwrap();
    v.swap(i, j);
    v[i + 1..].reverse();
    true
}

fn factorial_at_most(m: usize, limit: usize) -> bool {
    let mut f: usize = 1;
    for i in 2..=m {
        f = match f.checked_mul(i) {
            Some(v) if v <= limit => v,
            _ => return false,
        };
    }
    f <= limit
}

/// Greedily drops cuts from `1..=m` until `n` remain, always keeping `m`.
fn select_cuts(terms: &[Term], order: &[usize], n: usize, p: f64, cells: usize) -> Result<Vec<usize>> {
    let m = order.len();
    if m.saturating_mul(cells) > search::MULTIPLIER_TABLE_LIMIT {
        return resource(format!("{m} prefixes on {cells} cells exceed the cut table"));
    }
    let mut prefixes = Vec::with_capacity(m);
    let mut cur = vec![0.0; cells];
    for &e in order {
        let t = &terms[e];
        for (i, v) in t.values.iter().enumerate() {
            cur[t.start + i] += v;
        }
        prefixes.push(cur.iter().map(|x: &f64| x.abs()).collect::<Vec<f64>>());
    }
    let mut keep: Vec<usize> = (1..=m).collect();
    while keep.len() > n {
        let mut loss = vec![0.0; keep.len()];
        for c in 0..cells {
            let (mut top, mut top_i, mut second) = (-1.0f64, 0, 0.0f64);
            for (i, &k) in keep.iter().enumerate() {
                let v = prefixes[k - 1][c];
                if v > top {
                    second = top.max(0.0);
                    top = v;
                    top_i = i;
                } else if v > second {
                    second = v;
                }
            }
            loss[top_i] += top.max(0.0).powf(p) - second.powf(p);
        }
        let drop = (0..keep.len() - 1)
            .min_by(|&a, &b| loss[a].total_cmp(&loss[b]))
            .unwrap();
        keep.remove(drop);
    }
    Ok(keep)
}

struct Candidate {
    value: f64,
    witness: EstimateWitness,
}

fn run_restart(
    s: &OrthonormalSystem,
    cfg: &SearchConfig,
    active: &[usize],
    r: usize,
) -> Result<Candidate> {
    let (family, coeffs) = generator(s, cfg, active, r)?;
    let terms: Vec<Term> = coeffs.iter().map(|&(k, c)| Term::new(s, k, c)).collect();
    let cells = s.grid().cell_count();
    let m = terms.len();
    let mut witness = EstimateWitness {
        generator: r,
        family,
        coefficients: coeffs.clone(),
        order: active.to_vec(),
        cuts: (1..=m).collect(),
        lambda: None,
    };

    let order: Vec<usize> = if factorial_at_most(m, cfg.exhaustive_limit) {
        let mut perm: Vec<usize> = (0..m).collect();
        let mut best = (f64::NEG_INFINITY, perm.clone());
        loop {
            witness.order = perm.iter().map(|&e| active[e]).collect();
            let v = evaluate_witness(s, &witness, cfg.p)?;
            if v > best.0 {
                best = (v, perm.clone());
            }
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best.1
    } else {
        let mut rng = stream_rng(cfg.seed, 2 * r as u64 + 1);
        let mut sequence: Vec<usize> = (0..m).collect();
        let mass: Vec<f64> = terms.iter().map(|t| t.mass(cfg.p)).collect();
        sequence.sort_by(|&a, &b| mass[b].total_cmp(&mass[a]).then(a.cmp(&b)));
        let mut st = OrderSearch::new(&terms, cfg.p, cells);
        st.greedy(&sequence);
        st.reinsert_sweeps(cfg.sweeps, &mut rng);
        if st.swaps(cfg.iterations, &mut rng) {
            st.reinsert_sweeps(cfg.sweeps, &mut rng);
        }
        st.order().to_vec()
    };
    witness.order = order.iter().map(|&e| active[e]).collect();

    if cfg.variant >= Variant::Mon && cfg.n < m {
        witness.cuts = select_cuts(&terms, &order, cfg.n, cfg.p, cells)?;
    }
    if cfg.variant == Variant::Full {
        let mut pos = vec![0; m];
        for (i, &e) in order.iter().enumerate() {
            pos[e] = i;
        }
        let seed: Vec<Vec<i8>> = witness
            .cuts
            .iter()
            .map(|&c| (0..m).map(|e| i8::from(pos[e] < c)).collect())
            .collect();
        let mut ms = MultiplierSearch::new(&terms, cfg.p, cells, seed)?;
        ms.ascend(cfg.iterations);
        let lam = ms.into_lambda();
        witness.lambda = Some(
            lam.iter()
                .map(|row| order.iter().map(|&e| row[e]).collect())
                .collect(),
        );
    }
    let value = evaluate_witness(s, &witness, cfg.p)?;
    Ok(Candidate { value, witness })
}

/// Best `‖max_k |g_k|‖_p` found over the generator ensemble. Generators run
/// in parallel; ties go to the earliest generator.
pub fn estimate_a(s: &OrthonormalSystem, cfg: &SearchConfig) -> Result<EstimateRecord> {
    let active = cfg.validate(s)?;
    let count = cfg.generator_count();
    let candidates: Vec<Candidate> = (0..count)
        .into_par_iter()
        .map(|r| run_restart(s, cfg, &active, r))
        .collect::<Result<_>>()?;
    let best = candidates
        .into_iter()
        .reduce(|a, b| if b.value > a.value { b } else { a })
        .expect("at least one generator");
    let l = growth_log(cfg.n);
    Ok(EstimateRecord {
        n: cfg.n,
        variant: cfg.variant,
        p: cfg.p,
        best_value: best.value,
        ratio_sqrt: best.value / l.sqrt(),
        ratio_log: best.value / l,
        generators: count,
        witness: best.witness,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Exponent `γ` in `best_value ≈ C log(n+1)^γ`.
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl From<LineFit> for GrowthFit {
    fn from(f: LineFit) -> Self {
        GrowthFit {
            slope: f.slope,
            intercept: f.intercept,
            residual: f.residual,
            r_squared: f.r_squared,
            points: f.points,
        }
    }
}

/// Least squares of `ln(best_value)` on `ln(log2(n+1))`.
pub fn fit_growth(records: &[EstimateRecord]) -> Result<GrowthFit> {
    let points: Vec<(usize, f64)> = records.iter().map(|r| (r.n, r.best_value)).collect();
    fit_growth_points(&points)
}

/// [`fit_growth`] on bare `(n, best_value)` pairs.
pub fn fit_growth_points(points: &[(usize, f64)]) -> Result<GrowthFit> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return domain(format!("a growth fit needs 4 distinct n, got {}", ns.len()));
    }
    if let Some((n, _)) = points.iter().find(|p| !(p.1 > 0.0) || !p.1.is_finite()) {
        return domain(format!("best value at n={n} is not a positive number"));
    }
    let xs: Vec<f64> = points.iter().map(|p| growth_log(p.0).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    Ok(fit_line(&xs, &ys)?.into())
}
