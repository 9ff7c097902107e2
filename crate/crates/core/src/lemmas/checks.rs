use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{lattice, ConstantEstimate, Witness};
use crate::error::{domain, shape, Result};
use crate::grid::{lp_norm_of, DyadicGrid, Interval, SampledFunction};
use crate::operators::{
    coefficients, haar_block, haar_partial, hl_maximal, phi_block, CoefficientVector,
};
use crate::random::{random_signs, stream_rng};
use crate::systems::{haar_function, xi_unchecked, OrthonormalSystem};

pub(crate) fn delta_of(s: &OrthonormalSystem) -> Result<f64> {
    match s.delta {
        Some(d) if d > 0.0 && d < 1.0 => Ok(d),
        Some(d) => domain(format!("system δ = {d} is outside (0,1)")),
        None => domain("the system has no fitted δ"),
    }
}

pub(crate) fn alpha_of(s: &OrthonormalSystem) -> Result<f64> {
    match s.alpha {
        Some(a) if a > 0.0 && a <= 1.0 => Ok(a),
        Some(a) => domain(format!("system α = {a} is outside (0,1]")),
        None => domain("the system has no fitted α"),
    }
}

/// Indices `2^{m-1}+1 ..= 2^m` of dyadic block `m >= 1`, which must fit in `N`.
pub(crate) fn block(s: &OrthonormalSystem, m: u32) -> Result<RangeInclusive<usize>> {
    if m == 0 {
        return domain("dyadic blocks start at m = 1");
    }
    match 1usize.checked_shl(m) {
        Some(top) if top <= s.len() => Ok(top / 2 + 1..=top),
        _ => domain(format!("block {m} exceeds the system size {}", s.len())),
    }
}

fn point(x: f64) -> Witness {
    Witness {
        x: Some(x),
        ..Default::default()
    }
}

/// `Σ_{k ∈ block m} |a_k φ_k|` pointwise.
pub(crate) fn block_abs_sum(a: &CoefficientVector, s: &OrthonormalSystem, m: u32) -> Result<SampledFunction> {
    let mut out = vec![0.0; s.grid().cell_count()];
    for k in block(s, m)? {
        let c = a.get(k).abs();
        if c == 0.0 {
            continue;
        }
        let r = s.support(k);
        for (o, v) in out[r.clone()].iter_mut().zip(&s.phi(k).values()[r]) {
            *o += c * v.abs();
        }
    }
    SampledFunction::new(*s.grid(), out)
}

fn check_len(a: &CoefficientVector, s: &OrthonormalSystem) -> Result<()> {
    if a.len() != s.len() {
        return shape(format!("{} coefficients for {} functions", a.len(), s.len()));
    }
    Ok(())
}

/// `Σ_{block m} |φ_k(x) φ_k(t)| / (2^m ξ(2^m(x-t)))` over a `points × points`
/// lattice.
pub fn check_kernel_block(s: &OrthonormalSystem, m: u32, points: usize) -> Result<ConstantEstimate> {
    let delta = delta_of(s)?;
    let ks: Vec<usize> = block(s, m)?.collect();
    let xs = lattice(points);
    let cells: Vec<usize> = xs.iter().map(|&x| s.grid().cell_of(x)).collect();
    // rows[i] = (|φ_k(x_i)|)_k
    let rows: Vec<Vec<f64>> = cells
        .iter()
        .map(|&c| ks.iter().map(|&k| s.phi(k).values()[c].abs()).collect())
        .collect();
    let scale = (m as f64).exp2();
    let mut est = ConstantEstimate::empty(s.grid().level());
    for (i, ri) in rows.iter().enumerate() {
        for (j, rj) in rows.iter().enumerate() {
            let lhs = crate::grid::dot(ri, rj);
            let rhs = scale * xi_unchecked(scale * (xs[i] - xs[j]), delta);
            est.offer(lhs, rhs, || Witness {
                t: Some(xs[j]),
                ..point(xs[i])
            });
        }
    }
    Ok(est.tag_param("m", m as f64))
}

/// The two directions of the Haar/Φ block comparison: `Σ_{block}|a_kφ_k| ≲
/// M(Σ_{block} a_k h_k)` and `M(Σ_{block} a_k h_k) ≲ M(Σ_{block}|a_kφ_k|)`.
pub fn check_block_domination(
    s: &OrthonormalSystem,
    a: &CoefficientVector,
    m: u32,
) -> Result<(ConstantEstimate, ConstantEstimate)> {
    check_len(a, s)?;
    let grid = *s.grid();
    let phi_sum = block_abs_sum(a, s, m)?;
    let mut haar_poly = SampledFunction::zeros(grid);
    for k in block(s, m)? {
        if a.get(k) != 0.0 {
            haar_poly = haar_poly.add_scaled(a.get(k), &haar_function(k, grid)?)?;
        }
    }
    let m_haar = hl_maximal(&haar_poly, 1.0)?.function;
    let m_phi = hl_maximal(&phi_sum, 1.0)?.function;
    let mut upper = ConstantEstimate::empty(grid.level());
    let mut lower = ConstantEstimate::empty(grid.level());
    for i in 0..grid.cell_count() {
        let x = grid.midpoint(i);
        upper.offer(phi_sum.values()[i], m_haar.values()[i], || point(x));
        lower.offer(m_haar.values()[i], m_phi.values()[i], || point(x));
    }
    Ok((
        upper.tag_param("m", m as f64),
        lower.tag_param("m", m as f64),
    ))
}

/// Decay of `ΔΦ_m(1_I)`: against `(1+2^m|x-a|)^{-δ} + (1+2^m|x-b|)^{-δ}` on
/// all of `[0,1)`, and against `2^m |I| ξ(2^m(x-a))` off the concentric double
/// of `I`.
pub fn check_indicator_decay(
    s: &OrthonormalSystem,
    interval: Interval,
    m: u32,
) -> Result<(ConstantEstimate, ConstantEstimate)> {
    let delta = delta_of(s)?;
    let grid = *s.grid();
    let ind = SampledFunction::indicator(grid, interval);
    let a = coefficients(&ind, s)?;
    let d = phi_block(&a, s, m)?;
    let scale = (m as f64).exp2();
    let (lo, hi) = interval.doubled();
    let mut near = ConstantEstimate::empty(grid.level());
    let mut far = ConstantEstimate::empty(grid.level());
    for (i, &v) in d.values().iter().enumerate() {
        let x = grid.midpoint(i);
        let lhs = v.abs();
        let rhs = (1.0 + scale * (x - interval.a).abs()).powf(-delta)
            + (1.0 + scale * (x - interval.b).abs()).powf(-delta);
        near.offer(lhs, rhs, || point(x));
        if x < lo || x > hi {
            let rhs = scale * interval.length() * xi_unchecked(scale * (x - interval.a), delta);
            far.offer(lhs, rhs, || point(x));
        }
    }
    let tag = |e: ConstantEstimate| {
        e.tag_param("m", m as f64)
            .tag_param("a", interval.a)
            .tag_param("b", interval.b)
    };
    Ok((tag(near), tag(far)))
}

/// `|ΔH_n(ΔΦ_m g)| / (2^{α(m-n)} M(Σ_{block m}|a_kφ_k|))` for `n >= m >= 1`.
pub fn check_haar_phi_fine(
    s: &OrthonormalSystem,
    a: &CoefficientVector,
    n: u32,
    m: u32,
) -> Result<ConstantEstimate> {
    check_len(a, s)?;
    let alpha = alpha_of(s)?;
    if n < m {
        return domain(format!("the fine-scale interaction needs n >= m, got n={n}, m={m}"));
    }
    let block_fn = phi_block(a, s, m)?;
    let majorant = hl_maximal(&block_abs_sum(a, s, m)?, 1.0)?.function;
    fine_interaction(&block_fn, &majorant, n, m, alpha)
}

pub(crate) fn fine_interaction(
    block_fn: &SampledFunction,
    majorant: &SampledFunction,
    n: u32,
    m: u32,
    alpha: f64,
) -> Result<ConstantEstimate> {
    let grid = *block_fn.grid();
    let lhs = haar_block(block_fn, n)?;
    let factor = (alpha * (m as f64 - n as f64)).exp2();
    let mut est = ConstantEstimate::empty(grid.level());
    for (i, (l, r)) in lhs.values().iter().zip(majorant.values()).enumerate() {
        est.offer(l.abs(), factor * r, || point(grid.midpoint(i)));
    }
    Ok(est.tag_param("n", n as f64).tag_param("m", m as f64))
}

fn conjugate_check(q: f64, delta: f64) -> Result<f64> {
    if !(q > 1.0) || !q.is_finite() {
        return domain(format!("q must exceed 1, got {q}"));
    }
    let qp = q / (q - 1.0);
    if !(qp * delta > 1.0) {
        return domain(format!("q' δ = {} must exceed 1", qp * delta));
    }
    Ok(qp)
}

/// `|H_n(ΔΦ_m f)| / (2^{(n-m)/q'} M_q(ΔΦ_m f))` for `m >= n >= 1`.
pub fn check_haar_phi_coarse(
    s: &OrthonormalSystem,
    a: &CoefficientVector,
    n: u32,
    m: u32,
    q: f64,
) -> Result<ConstantEstimate> {
    check_len(a, s)?;
    let delta = delta_of(s)?;
    conjugate_check(q, delta)?;
    if m < n || n == 0 {
        return domain(format!("the coarse-scale interaction needs m >= n >= 1, got n={n}, m={m}"));
    }
    let block_fn = phi_block(a, s, m)?;
    let mq = hl_maximal(&block_fn, q)?.function;
    coarse_interaction(&block_fn, &mq, n, m, q, delta)
}

pub(crate) fn coarse_interaction(
    block_fn: &SampledFunction,
    mq: &SampledFunction,
    n: u32,
    m: u32,
    q: f64,
    delta: f64,
) -> Result<ConstantEstimate> {
    let qp = conjugate_check(q, delta)?;
    let grid = *block_fn.grid();
    let lhs = haar_partial(block_fn, n)?;
    let factor = ((n as f64 - m as f64) / qp).exp2();
    let mut est = ConstantEstimate::empty(grid.level());
    for (i, (l, r)) in lhs.values().iter().zip(mq.values()).enumerate() {
        est.offer(l.abs(), factor * r, || point(grid.midpoint(i)));
    }
    Ok(est
        .tag_param("n", n as f64)
        .tag_param("m", m as f64)
        .tag_param("q", q))
}

/// Fine-scale bound when `n >= m`, coarse-scale bound otherwise.
pub fn check_haar_phi_interaction(
    s: &OrthonormalSystem,
    a: &CoefficientVector,
    n: u32,
    m: u32,
    q: f64,
) -> Result<ConstantEstimate> {
    if n >= m {
        check_haar_phi_fine(s, a, n, m)
    } else {
        check_haar_phi_coarse(s, a, n, m, q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LittlewoodPaley {
    /// `‖(Σ_{m>=1}(Σ_{block m}|a_kφ_k|)²)^{1/2}‖_p / ‖f‖_p`.
    pub block_square: ConstantEstimate,
    /// `‖(Σ a_k²φ_k²)^{1/2}‖_p` over the random-sign average
    /// `(E‖Σ r_k a_k φ_k‖_p^p)^{1/p}`, and its reciprocal.
    pub square_over_random: ConstantEstimate,
    pub random_over_square: ConstantEstimate,
    /// The random-sign average over `‖f‖_p`.
    pub random_over_f: ConstantEstimate,
}

/// Block square function bound plus the two-sided random-sign comparison,
/// averaged over `sign_samples` seeded sign vectors.
pub fn check_littlewood_paley(
    s: &OrthonormalSystem,
    f: &SampledFunction,
    p: f64,
    sign_samples: usize,
    seed: u64,
) -> Result<LittlewoodPaley> {
    if !(p > 1.0) || !p.is_finite() {
        return domain(format!("p must lie in (1, inf), got {p}"));
    }
    if sign_samples == 0 {
        return domain("the random-sign average needs samples");
    }
    let grid = *s.grid();
    let h = grid.cell_width();
    let a = coefficients(f, s)?;
    let cells = grid.cell_count();

    let mut block_sq = vec![0.0; cells];
    let mut lo = 2;
    while lo <= s.len() {
        let hi = (2 * (lo - 1)).min(s.len());
        let mut b = vec![0.0; cells];
        for k in lo..=hi {
            let c = a.get(k).abs();
            if c == 0.0 {
                continue;
            }
            let r = s.support(k);
            for (o, v) in b[r.clone()].iter_mut().zip(&s.phi(k).values()[r]) {
                *o += c * v.abs();
            }
        }
        for (t, v) in block_sq.iter_mut().zip(&b) {
            *t += v * v;
        }
        lo = 2 * (lo - 1) + 1;
    }
    let block_norm = lp_norm_of(&block_sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), p, h);
    let f_norm = f.lp_norm(p)?;

    let mut sq = vec![0.0; cells];
    for k in 1..=s.len() {
        let c = a.get(k);
        if c == 0.0 {
            continue;
        }
        let r = s.support(k);
        for (o, v) in sq[r.clone()].iter_mut().zip(&s.phi(k).values()[r]) {
            *o += c * c * v * v;
        }
    }
    let sq_norm = lp_norm_of(&sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), p, h);

    let mut acc = 0.0;
    for j in 0..sign_samples {
        let signs = random_signs(s.len(), &mut stream_rng(seed, j as u64));
        let mut g = vec![0.0; cells];
        for k in 1..=s.len() {
            crate::operators::add_term(&mut g, s, k, signs[k - 1] * a.get(k));
        }
        acc += lp_norm_of(&g, p, h).powf(p);
    }
    let random = (acc / sign_samples as f64).powf(1.0 / p);

    let single = |lhs: f64, rhs: f64| {
        let mut e = ConstantEstimate::empty(grid.level());
        e.offer(lhs, rhs, Witness::default);
        e.tag_param("p", p)
    };
    Ok(LittlewoodPaley {
        block_square: single(block_norm, f_norm),
        square_over_random: single(sq_norm, random),
        random_over_square: single(random, sq_norm),
        random_over_f: single(random, f_norm),
    })
}

/// `‖|a| * |b|‖_2 / (‖a‖_2 ‖b‖_1)`, which never exceeds 1.
pub fn check_convolution_inequality(a: &[f64], b: &[f64]) -> Result<ConstantEstimate> {
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return domain("sequences must be finite");
    }
    let mut est = ConstantEstimate::empty(0);
    if a.is_empty() || b.is_empty() {
        est.offer(0.0, 0.0, Witness::default);
        return Ok(est);
    }
    let mut conv = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            conv[i + j] += (x * y).abs();
        }
    }
    let lhs = conv.iter().map(|c| c * c).sum::<f64>().sqrt();
    let rhs = a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|y| y.abs()).sum::<f64>();
    est.offer(lhs, rhs, Witness::default);
    Ok(est)
}

/// `‖(Σ M_q(g_k)²)^{1/2}‖_p / ‖(Σ g_k²)^{1/2}‖_p` for `1 <= q < min(2, p)`.
pub fn check_fefferman_stein(family: &[SampledFunction], p: f64, q: f64) -> Result<ConstantEstimate> {
    if !(q >= 1.0 && q < 2.0f64.min(p)) || !p.is_finite() {
        return domain(format!("need 1 <= q < min(2, p), got p={p}, q={q}"));
    }
    let Some(first) = family.first() else {
        return domain("the family is empty");
    };
    let grid: DyadicGrid = *first.grid();
    let cells = grid.cell_count();
    let mut num = vec![0.0; cells];
    let mut den = vec![0.0; cells];
    for g in family {
        if *g.grid() != grid {
            return shape("family members live on different grids");
        }
        let mq = hl_maximal(g, q)?.function;
        for i in 0..cells {
            num[i] += mq.values()[i] * mq.values()[i];
            den[i] += g.values()[i] * g.values()[i];
        }
    }
    let h = grid.cell_width();
    let sqrt_all = |v: Vec<f64>| v.into_iter().map(f64::sqrt).collect::<Vec<_>>();
    let lhs = lp_norm_of(&sqrt_all(num), p, h);
    let rhs = lp_norm_of(&sqrt_all(den), p, h);
    let mut est = ConstantEstimate::empty(grid.level());
    est.offer(lhs, rhs, Witness::default);
    Ok(est.tag_param("p", p).tag_param("q", q))
}

/// Calderón–Zygmund bounds for `K_λ(x,t) = Σ_k λ_k φ_k(x) φ_k(t)`:
/// `|K| |x-t|` and `|K(x,t) - K(x,t')| |x-t|^{1+β} / |t-t'|^β` for
/// `|x-t| > 2|t-t'|`, over a lattice with dyadic offsets `t' - t`.
pub fn check_cz_kernel(
    s: &OrthonormalSystem,
    lambda: &[f64],
    beta: f64,
    points: usize,
) -> Result<(ConstantEstimate, ConstantEstimate)> {
    let delta = delta_of(s)?;
    let alpha = alpha_of(s)?;
    if !(beta > 0.0 && beta < alpha.min(delta)) {
        return domain(format!(
            "β must lie in (0, min(α, δ)) = (0, {}), got {beta}",
            alpha.min(delta)
        ));
    }
    if lambda.len() != s.len() {
        return shape(format!("{} multipliers for {} functions", lambda.len(), s.len()));
    }
    if let Some(i) = lambda.iter().position(|l| !(l.abs() <= 1.0)) {
        return domain(format!("|λ_{}| exceeds 1", i + 1));
    }
    let xs = lattice(points);
    let cells: Vec<usize> = xs.iter().map(|&x| s.grid().cell_of(x)).collect();
    let rows: Vec<Vec<f64>> = cells
        .iter()
        .map(|&c| (1..=s.len()).map(|k| s.phi(k).values()[c]).collect())
        .collect();
    let weighted: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(lambda).map(|(v, l)| v * l).collect())
        .collect();
    let kernel: Vec<Vec<f64>> = weighted
        .iter()
        .map(|wi| rows.iter().map(|rj| crate::grid::dot(wi, rj)).collect())
        .collect();

    let level = s.grid().level();
    let mut size = ConstantEstimate::empty(level);
    let mut smooth = ConstantEstimate::empty(level);
    for i in 0..points {
        for j in 0..points {
            if i == j {
                continue;
            }
            let dist = (xs[i] - xs[j]).abs();
            size.offer(kernel[i][j].abs(), 1.0 / dist, || Witness {
                t: Some(xs[j]),
                ..point(xs[i])
            });
            let mut off = 1usize;
            while off < points {
                for jp in [j.checked_sub(off), Some(j + off).filter(|&v| v < points)]
                    .into_iter()
                    .flatten()
                {
                    let step = (xs[j] - xs[jp]).abs();
                    if dist > 2.0 * step {
                        let lhs = (kernel[i][j] - kernel[i][jp]).abs();
                        let rhs = step.powf(beta) / dist.powf(1.0 + beta);
                        smooth.offer(lhs, rhs, || Witness {
                            t: Some(xs[j]),
                            t2: Some(xs[jp]),
                            ..point(xs[i])
                        });
                    }
                }
                off *= 2;
            }
        }
    }
    Ok((
        size.tag_param("beta", beta),
        smooth.tag_param("beta", beta),
    ))
}
