//! Good-λ measurements `|{M^d f > λ, Sf < ελ}|` against `|{M^d f > λ/2}|`.

use serde::{Deserialize, Serialize};

use super::ratio;
use crate::error::{domain, Result};
use crate::grid::SampledFunction;
use crate::operators::{dyadic_maximal, haar_square};
use crate::stats::{fit_line, LineFit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwwRow {
    pub eps: f64,
    pub lambda: f64,
    /// `|{M^d f > λ, Sf < ελ}|`.
    pub lhs_measure: f64,
    /// `|{M^d f > λ}|`.
    pub level_measure: f64,
    /// `|{M^d f > λ/2}|`.
    pub rhs_measure: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CwwTable {
    pub rows: Vec<CwwRow>,
    /// Regression of `ln(ratio)` on `1/ε²` over rows with both measures
    /// positive; the good-λ constant is `c = -slope`.
    pub fit: Option<LineFit>,
}

impl CwwTable {
    /// The exact set inclusions behind the inequality: the good-λ set sits in
    /// `{M^d f > λ}`, which sits in `{M^d f > λ/2}`, and the good-λ set grows
    /// with `ε` at fixed `λ`.
    pub fn inclusions_hold(&self) -> bool {
        let nested = self
            .rows
            .iter()
            .all(|r| r.lhs_measure <= r.level_measure && r.level_measure <= r.rhs_measure);
        let monotone = self.rows.iter().all(|r| {
            self.rows
                .iter()
                .filter(|o| o.lambda == r.lambda && o.eps > r.eps)
                .all(|o| o.lhs_measure >= r.lhs_measure)
        });
        nested && monotone
    }
}

/// Exact level-set measures for every `(ε, λ)` pair, `ε` outermost.
pub fn check_cww(f: &SampledFunction, eps: &[f64], lambdas: &[f64]) -> Result<CwwTable> {
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return domain(format!("ε must lie in (0,1), got {e}"));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
        return domain(format!("λ must be positive, got {l}"));
    }
    let md = dyadic_maximal(f);
    let sf = haar_square(f);
    let h = f.grid().cell_width();
    let mut rows = Vec::with_capacity(eps.len() * lambdas.len());
    for &e in eps {
        for &l in lambdas {
            let mut lhs = 0usize;
            let mut level = 0usize;
            let mut rhs = 0usize;
            for (m, s) in md.values().iter().zip(sf.values()) {
                if *m > l {
                    level += 1;
                    if *s < e * l {
                        lhs += 1;
                    }
                }
                if *m > l / 2.0 {
                    rhs += 1;
                }
            }
            let (lhs, level, rhs) = (lhs as f64 * h, level as f64 * h, rhs as f64 * h);
            rows.push(CwwRow {
                eps: e,
                lambda: l,
                lhs_measure: lhs,
                level_measure: level,
                rhs_measure: rhs,
                ratio: ratio(lhs, rhs),
            });
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.lhs_measure > 0.0 && r.rhs_measure > 0.0)
        .map(|r| (1.0 / (r.eps * r.eps), r.ratio.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys).ok();
    Ok(CwwTable { rows, fit })
}

/// `count` quantiles of `M^d f`, positive and deduplicated.
pub fn cww_lambdas(f: &SampledFunction, count: usize) -> Vec<f64> {
    let mut v = dyadic_maximal(f).into_values();
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = (0..count)
        .map(|i| v[((i as f64 + 0.5) / count as f64 * v.len() as f64) as usize])
        .filter(|&l| l > 0.0)
        .collect();
    out.dedup();
    out
}

/// Measures summed over many tables, one ratio per `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PooledCww {
    pub eps: Vec<f64>,
    pub lhs_measure: Vec<f64>,
    pub rhs_measure: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Regression of `ln(ratio)` on `1/ε²` over `ε` with a positive pooled ratio.
    pub fit: Option<LineFit>,
}

pub fn pooled_cww_fit(tables: &[CwwTable]) -> PooledCww {
    let mut eps: Vec<f64> = tables.iter().flat_map(|t| t.rows.iter().map(|r| r.eps)).collect();
    eps.sort_by(f64::total_cmp);
    eps.dedup();
    let mut lhs = vec![0.0; eps.len()];
    let mut rhs = vec![0.0; eps.len()];
    for r in tables.iter().flat_map(|t| &t.rows) {
        let i = eps.partition_point(|&e| e < r.eps);
        lhs[i] += r.lhs_measure;
        rhs[i] += r.rhs_measure;
    }
    let ratios: Vec<f64> = lhs.iter().zip(&rhs).map(|(l, r)| ratio(*l, *r)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = eps
        .iter()
        .zip(&ratios)
        .filter(|(_, r)| **r > 0.0 && r.is_finite())
        .map(|(e, r)| (1.0 / (e * e), r.ln()))
        .unzip();
    PooledCww {
        fit: fit_line(&xs, &ys).ok(),
        eps,
        lhs_measure: lhs,
        rhs_measure: rhs,
        ratio: ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;
    use crate::systems::haar_function;

    #[test]
    fn single_haar_function_has_empty_level_sets_above_one() {
        let f = haar_function(2, DyadicGrid::new(6).unwrap()).unwrap();
        let t = check_cww(&f, &[0.4], &[2.0]).unwrap();
        let r = t.rows[0];
        assert_eq!((r.lhs_measure, r.level_measure, r.ratio), (0.0, 0.0, 0.0));
        assert!(t.inclusions_hold());
        assert!(t.fit.is_none());
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = haar_function(2, DyadicGrid::new(4).unwrap()).unwrap();
        assert!(check_cww(&f, &[1.0], &[1.0]).is_err());
        assert!(check_cww(&f, &[0.5], &[0.0]).is_err());
    }

    #[test]
    fn measures_on_a_walk() {
        // f = h_2 + h_3/√2: M^d f = 2 on [0,1/4), Sf = √2 there.
        let g = DyadicGrid::new(6).unwrap();
        let f = haar_function(2, g)
            .unwrap()
            .add_scaled(0.5f64.sqrt(), &haar_function(3, g).unwrap())
            .unwrap();
        let t = check_cww(&f, &[0.5, 0.9], &[1.5]).unwrap();
        // ε = 0.5: need Sf < 0.75, never. ε = 0.9: need Sf < 1.35 < √2, never.
        assert_eq!(t.rows[0].lhs_measure, 0.0);
        assert_eq!(t.rows[0].level_measure, 0.25);
        assert_eq!(t.rows[1].lhs_measure, 0.0);
        let t = check_cww(&f, &[0.99], &[1.0]).unwrap();
        // λ = 1: M^d f equals 1 off [0,1/4), so only that quarter exceeds it.
        assert_eq!(t.rows[0].level_measure, 0.25);
        assert_eq!(t.rows[0].lhs_measure, 0.0);
        assert!(t.inclusions_hold());
    }

    #[test]
    fn pooling_sums_measures() {
        let row = |eps, lhs, rhs| CwwRow {
            eps,
            lambda: 1.0,
            lhs_measure: lhs,
            level_measure: lhs,
            rhs_measure: rhs,
            ratio: ratio(lhs, rhs),
        };
        let a = CwwTable {
            rows: vec![row(0.2, 0.0, 0.5), row(0.4, 0.1, 0.5)],
            fit: None,
        };
        let b = CwwTable {
            rows: vec![row(0.2, 0.01, 0.5), row(0.4, 0.3, 0.5)],
            fit: None,
        };
        let p = pooled_cww_fit(&[a, b]);
        assert_eq!(p.eps, vec![0.2, 0.4]);
        assert!((p.ratio[0] - 0.01).abs() < 1e-15);
        assert!((p.ratio[1] - 0.4).abs() < 1e-15);
        let fit = p.fit.unwrap();
        assert!(fit.slope < 0.0);
    }

    #[test]
    fn lambda_quantiles_are_positive() {
        let f = haar_function(5, DyadicGrid::new(6).unwrap()).unwrap();
        let l = cww_lambdas(&f, 20);
        assert!(!l.is_empty());
        assert!(l.iter().all(|&x| x > 0.0));
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
    }
}
