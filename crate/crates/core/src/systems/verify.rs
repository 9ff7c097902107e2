//! Grid fits of the wavelet-type constants: mean zero, the decay envelope
//! `c 2^{n/2} ξ(2^n(x - t_k))`, the Hölder modulus, and the local mass radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{xi_unchecked, OrthonormalSystem};
use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub delta: f64,
    pub alpha: f64,
    pub mean_zero_tol: f64,
    pub decay_max: f64,
    pub holder_max: f64,
}

impl VerifyConfig {
    pub fn new(delta: f64, alpha: f64) -> Self {
        Self {
            delta,
            alpha,
            mean_zero_tol: 1e-8,
            decay_max: 100.0,
            holder_max: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionPass {
    pub mean_zero: bool,
    pub decay: bool,
    pub holder: bool,
    pub local_mass: bool,
}

impl ConditionPass {
    pub fn all(&self) -> bool {
        self.mean_zero && self.decay && self.holder && self.local_mass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub mean_zero_max: f64,
    pub decay_constant: f64,
    pub decay_witness: usize,
    pub holder_constant: f64,
    pub holder_witness: usize,
    /// Hölder constant over all offsets divided by the one over even offsets.
    /// Close to 1 for a genuine modulus; close to `2^α` when the worst pair
    /// straddles a jump, i.e. when the constant doubles with every refinement.
    pub holder_growth: f64,
    pub local_mass_radius: f64,
    pub pass: ConditionPass,
}

struct PerIndex {
    k: usize,
    mean: f64,
    decay: f64,
    holder: f64,
    holder_even: f64,
    radius: f64,
}

/// Largest `|f[i] - f[i+d]| · max(w[i], w[i+d])` over `i`, split over even
/// lanes so the loop vectorizes.
fn pair_max(f: &[f64], w: &[f64], d: usize) -> f64 {
    let n = f.len() - d;
    let (a, b) = (&f[..n], &f[d..]);
    let (wa, wb) = (&w[..n], &w[d..]);
    let mut acc = [0.0f64; 8];
    let chunks = n / 8;
    for c in 0..chunks {
        for l in 0..8 {
            let i = c * 8 + l;
            let ww = if wa[i] > wb[i] { wa[i] } else { wb[i] };
            let v = (a[i] - b[i]).abs() * ww;
            acc[l] = if v > acc[l] { v } else { acc[l] };
        }
    }
    let mut m = acc.iter().copied().fold(0.0, f64::max);
    for i in chunks * 8..n {
        m = m.max((a[i] - b[i]).abs() * wa[i].max(wb[i]));
    }
    m
}

fn fit_index(s: &OrthonormalSystem, k: usize, cfg: &VerifyConfig) -> PerIndex {
    let grid = s.grid();
    let cells = grid.cell_count();
    let h = grid.cell_width();
    let f = s.phi(k).values();
    let c = s.localization_of(k);
    let scale = (c.level as f64).exp2();
    let amp = (c.level as f64 / 2.0).exp2();

    let iw: Vec<f64> = grid
        .midpoints()
        .map(|x| 1.0 / xi_unchecked(scale * (x - c.position), cfg.delta))
        .collect();

    let mut decay: f64 = 0.0;
    for i in 0..cells {
        decay = decay.max(f[i].abs() * iw[i]);
    }
    decay /= amp;

    let max_offset = (1usize << (grid.level() - c.level.min(grid.level()))).min(cells - 1);
    let mut holder: f64 = 0.0;
    let mut holder_even: f64 = 0.0;
    for d in 1..=max_offset {
        let denom = amp * (scale * d as f64 * h).powf(cfg.alpha);
        let v = pair_max(f, &iw, d) / denom;
        holder = holder.max(v);
        if d % 2 == 0 {
            holder_even = holder_even.max(v);
        }
    }

    let mut prefix = Vec::with_capacity(cells + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in f {
        acc += v * v * h;
        prefix.push(acc);
    }
    let center_cell = (c.position * cells as f64).round() as usize;
    let mut radius = f64::INFINITY;
    for m in 1..=cells {
        let lo = center_cell.saturating_sub(m);
        let hi = (center_cell + m).min(cells);
        if prefix[hi] - prefix[lo] >= 0.5 {
            radius = m as f64 * h * scale;
            break;
        }
    }

    PerIndex {
        k,
        mean: s.phi(k).integrate().abs(),
        decay,
        holder,
        holder_even,
        radius,
    }
}

/// Fits every constant by exhaustive maximization over grid points and pairs.
///
/// Indices are localized through [`OrthonormalSystem::localization_of`]. The
/// first index is skipped when the system marks it special.
pub fn verify_wavelet_type(s: &OrthonormalSystem, cfg: &VerifyConfig) -> Result<ConditionReport> {
    if s.is_empty() {
        return domain("cannot verify an empty system");
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return domain(format!("delta must lie in (0,1), got {}", cfg.delta));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha <= 1.0) {
        return domain(format!("alpha must lie in (0,1], got {}", cfg.alpha));
    }
    let first = if s.first_index_special() { 2 } else { 1 };
    let fits: Vec<PerIndex> = (first..=s.len())
        .into_par_iter()
        .map(|k| fit_index(s, k, cfg))
        .collect();

    let mut r = ConditionReport {
        mean_zero_max: 0.0,
        decay_constant: 0.0,
        decay_witness: 0,
        holder_constant: 0.0,
        holder_witness: 0,
        holder_growth: 1.0,
        local_mass_radius: 0.0,
        pass: ConditionPass {
            mean_zero: true,
            decay: true,
            holder: true,
            local_mass: true,
        },
    };
    let mut holder_even: f64 = 0.0;
    for p in &fits {
        r.mean_zero_max = r.mean_zero_max.max(p.mean);
        if p.decay > r.decay_constant {
            r.decay_constant = p.decay;
            r.decay_witness = p.k;
        }
        if p.holder > r.holder_constant {
            r.holder_constant = p.holder;
            r.holder_witness = p.k;
        }
        holder_even = holder_even.max(p.holder_even);
        r.local_mass_radius = r.local_mass_radius.max(p.radius);
    }
    if holder_even > 0.0 {
        r.holder_growth = r.holder_constant / holder_even;
    }
    r.pass = ConditionPass {
        mean_zero: r.mean_zero_max <= cfg.mean_zero_tol,
        decay: r.decay_constant.is_finite() && r.decay_constant <= cfg.decay_max,
        holder: r.holder_constant.is_finite()
            && r.holder_constant <= cfg.holder_max
            && r.holder_growth < (cfg.alpha / 2.0).exp2(),
        local_mass: r.local_mass_radius.is_finite(),
    };
    Ok(r)
}
