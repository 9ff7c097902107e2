//! The good-λ route from square functions to `‖max_k |p_k|‖_p ≲ √log(n+1) ‖f‖_p`,
//! measured on concrete chains.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::growth_log;
use crate::error::{domain, Result};
use crate::grid::{lp_norm_of, SampledFunction};
use crate::lemmas::ratio;
use crate::operators::{
    chain_maximal, coefficients, dyadic_maximal, haar_square, project, ChainKind,
    CoefficientVector, IndexChain,
};
use crate::systems::{center, OrthonormalSystem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: usize,
    pub p: f64,
    /// Good-λ constant `c` in `ε_n = (c / ln n)^{1/2}`.
    pub c: f64,
    pub eps_n: f64,
    pub f_norm: f64,
    /// `‖p*‖_p` with `p* = max_k |p_k|`.
    pub max_norm: f64,
    /// `‖P‖_p` with `P = max_k S(p_k)`.
    pub square_norm: f64,
    /// `‖p*‖_p / (√log2(n+1) ‖f‖_p)`; `None` when `f = 0`.
    pub ratio: Option<f64>,
    /// `‖p*‖_p / ‖f‖_p`.
    pub raw_ratio: Option<f64>,
    /// `‖P‖_p / ‖f‖_p`.
    pub square_ratio: Option<f64>,
    /// `p ∫ λ^{p-1} |A(λ)| dλ` with `A(λ) = {p* > λ, P <= ε_n λ}`.
    pub a_part: f64,
    /// `p ∫ λ^{p-1} |B(λ)| dλ = ε_n^{-p} ‖P‖_p^p` with `B(λ) = {P > ε_n λ}`.
    pub b_part: f64,
    /// `‖p*‖_p^p <= a_part + b_part`.
    pub layer_cake_holds: bool,
    pub lambdas: Vec<f64>,
    pub a_measure: Vec<f64>,
    pub b_measure: Vec<f64>,
    /// `{p* > λ} ⊆ A(λ) ∪ B(λ)` at every sampled `λ`.
    pub inclusion_holds: bool,
    /// Largest `|{|p_k| > λ, P <= ε_n λ}| / |{M^d p_k > λ/2}|` over `k` and
    /// the sampled `λ`.
    pub good_lambda_ratio: f64,
}

/// The partial sums `p_k = P_{G_k} f` in chain order.
fn partial_sums<'a>(
    a: &'a CoefficientVector,
    s: &'a OrthonormalSystem,
    chain: &'a IndexChain,
) -> impl Iterator<Item = Result<SampledFunction>> + 'a {
    let nested = chain.kind() != ChainKind::Arbitrary;
    let mut cur = vec![0.0; s.grid().cell_count()];
    let mut seen = vec![false; s.len() + 1];
    chain.sets().iter().map(move |g| {
        if nested {
            let fresh: Vec<usize> = g.iter().copied().filter(|&k| !seen[k]).collect();
            for &k in &fresh {
                seen[k] = true;
            }
            let d = project(a, s, &fresh)?;
            for (c, v) in cur.iter_mut().zip(d.values()) {
                *c += v;
            }
            SampledFunction::new(*s.grid(), cur.clone())
        } else {
            project(a, s, g)
        }
    })
}

/// Runs the decomposition `{p* > λ} ⊆ A(λ) ∪ B(λ)` for `p_k = P_{G_k} f` and
/// reports every measured quantity. `lambda_count` levels are taken at
/// quantiles of `p*`.
pub fn chain_pipeline(
    f: &SampledFunction,
    s: &OrthonormalSystem,
    chain: &IndexChain,
    p: f64,
    c: f64,
    lambda_count: usize,
) -> Result<PipelineReport> {
    let n = chain.len();
    if n < 2 {
        return domain("the pipeline needs a chain of at least two sets");
    }
    if !(p > 1.0) || !p.is_finite() {
        return domain(format!("p must lie in (1, inf), got {p}"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("the good-λ constant must be positive, got {c}"));
    }
    chain.check_within(s.len())?;
    let grid = *s.grid();
    let h = grid.cell_width();
    let cells = grid.cell_count();
    let a = coefficients(f, s)?;
    let eps = (c / (n as f64).ln()).sqrt();

    let mut pstar = vec![0.0f64; cells];
    let mut big_p = vec![0.0f64; cells];
    for pk in partial_sums(&a, s, chain) {
        let pk = pk?;
        let sq = haar_square(&pk);
        for i in 0..cells {
            pstar[i] = pstar[i].max(pk.values()[i].abs());
            big_p[i] = big_p[i].max(sq.values()[i]);
        }
    }

    let f_norm = f.lp_norm(p)?;
    let max_norm = lp_norm_of(&pstar, p, h);
    let square_norm = lp_norm_of(&big_p, p, h);
    let a_terms: Vec<f64> = pstar
        .iter()
        .zip(&big_p)
        .map(|(s, q)| (s.powf(p) - (q / eps).powf(p)).max(0.0))
        .collect();
    let a_part = a_terms.iter().sum::<f64>() * h;
    let b_part = eps.powf(-p) * square_norm.powf(p);
    let layer_cake_holds = max_norm.powf(p) <= (a_part + b_part) * (1.0 + 1e-12);

    let mut sorted = pstar.clone();
    sorted.sort_by(f64::total_cmp);
    let mut lambdas: Vec<f64> = (0..lambda_count)
        .map(|i| sorted[((i as f64 + 0.5) / lambda_count as f64 * cells as f64) as usize])
        .filter(|&l| l > 0.0)
        .collect();
    lambdas.dedup();

    let mut a_measure = Vec::with_capacity(lambdas.len());
    let mut b_measure = Vec::with_capacity(lambdas.len());
    let mut inclusion_holds = true;
    for &l in &lambdas {
        let (mut am, mut bm) = (0usize, 0usize);
        for i in 0..cells {
            let in_a = pstar[i] > l && big_p[i] <= eps * l;
            let in_b = big_p[i] > eps * l;
            am += usize::from(in_a);
            bm += usize::from(in_b);
            if pstar[i] > l && !(in_a || in_b) {
                inclusion_holds = false;
            }
        }
        a_measure.push(am as f64 * h);
        b_measure.push(bm as f64 * h);
    }

    let mut good_lambda_ratio = 0.0f64;
    if !lambdas.is_empty() {
        for pk in partial_sums(&a, s, chain) {
            let pk = pk?;
            let md = dyadic_maximal(&pk);
            for &l in &lambdas {
                let (mut lhs, mut rhs) = (0usize, 0usize);
                for i in 0..cells {
                    lhs += usize::from(pk.values()[i].abs() > l && big_p[i] <= eps * l);
                    rhs += usize::from(md.values()[i] > l / 2.0);
                }
                good_lambda_ratio = good_lambda_ratio.max(ratio(lhs as f64, rhs as f64));
            }
        }
    }

    let over_f = |v: f64| (f_norm > 0.0).then(|| v / f_norm);
    Ok(PipelineReport {
        n,
        p,
        c,
        eps_n: eps,
        f_norm,
        max_norm,
        square_norm,
        ratio: over_f(max_norm / growth_log(n).sqrt()),
        raw_ratio: over_f(max_norm),
        square_ratio: over_f(square_norm),
        a_part,
        b_part,
        layer_cake_holds,
        lambdas,
        a_measure,
        b_measure,
        inclusion_holds,
        good_lambda_ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatRatio {
    pub n: usize,
    pub p: f64,
    pub max_norm: f64,
    pub f_norm: f64,
    /// `‖max_k |P_{G_k} f|‖_p / (√log2(n+1) ‖f‖_p)`.
    pub normalized: Option<f64>,
    /// `‖max_k |P_{G_k} f|‖_p / ‖f‖_p`.
    pub raw: Option<f64>,
}

/// The normalized maximal ratio for several exponents from one chain maximal.
pub fn flat_ratio(
    f: &SampledFunction,
    s: &OrthonormalSystem,
    chain: &IndexChain,
    ps: &[f64],
) -> Result<Vec<FlatRatio>> {
    if let Some(p) = ps.iter().find(|p| !(**p > 1.0) || !p.is_finite()) {
        return domain(format!("p must lie in (1, inf), got {p}"));
    }
    let a = coefficients(f, s)?;
    let m = chain_maximal(&a, s, chain)?;
    let n = chain.len();
    ps.iter()
        .map(|&p| {
            let max_norm = m.lp_norm(p)?;
            let f_norm = f.lp_norm(p)?;
            let over = |v: f64| (f_norm > 0.0).then(|| v / f_norm);
            Ok(FlatRatio {
                n,
                p,
                max_norm,
                f_norm,
                normalized: over(max_norm / growth_log(n).sqrt()),
                raw: over(max_norm),
            })
        })
        .collect()
}

/// `Σ_{k>=2} u_k 2^{-n(k)/2} φ_k` with `u_k` uniform in `[-1,1]`; the
/// constant term is zero.
pub fn random_polynomial(s: &OrthonormalSystem, rng: &mut impl Rng) -> Result<SampledFunction> {
    let mut a = vec![0.0; s.len()];
    for (k, c) in a.iter_mut().enumerate().skip(1) {
        let u: f64 = rng.gen_range(-1.0..=1.0);
        *c = u * (-(center(k + 1)?.level as f64) / 2.0).exp2();
    }
    project(&CoefficientVector::new(a)?, s, &(1..=s.len()).collect::<Vec<_>>())
}

/// `n` nested sets: prefixes of a random ordering of `indices`, cut at `n-1`
/// random distinct points and at the end.
pub fn random_chain(indices: &[usize], n: usize, rng: &mut impl Rng) -> Result<IndexChain> {
    if n == 0 || n > indices.len() {
        return domain(format!("cannot cut {} indices into {n} nested sets", indices.len()));
    }
    let mut order = indices.to_vec();
    order.shuffle(rng);
    let mut cuts: Vec<usize> = (1..indices.len()).collect();
    cuts.shuffle(rng);
    cuts.truncate(n - 1);
    cuts.push(indices.len());
    cuts.sort_unstable();
    IndexChain::infer(cuts.iter().map(|&c| order[..c].to_vec()).collect())
}
