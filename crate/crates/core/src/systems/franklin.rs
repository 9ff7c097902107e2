//! The Franklin system: orthonormalized Faber–Schauder hats over dyadic knots.
//!
//! `φ_1 ≡ 1`, `φ_2` is the normalized linear function, and `φ_k` for `k >= 3`
//! spans the complement of `V_{k-1}` in `V_k`, where `V_k` is the space of
//! continuous piecewise-linear functions whose knots are `0, 1` and the first
//! `k - 2` points of the dyadic sequence `1/2, 1/4, 3/4, 1/8, …`.
//!
//! Each step projects the new hat onto `V_{k-1}` through that space's nodal
//! Gram matrix, which is tridiagonal and symmetric positive definite.

use super::{center, OrthonormalSystem};
use crate::error::{domain, resource, LabError, Result};
use crate::grid::{DyadicGrid, SampledFunction};

/// Inner product used while orthonormalizing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SplineForm {
    /// `L²(0,1)`.
    Exact,
    /// Midpoint quadrature on the cells of a level-`J` grid. Functions sampled
    /// at midpoints are then exactly orthonormal under cell quadrature.
    Midpoint { level: u32 },
}

impl SplineForm {
    /// Diagonal and off-diagonal Gram entries of the two nodal hats on a
    /// segment of length `len`.
    fn segment(&self, len: f64) -> (f64, f64) {
        match *self {
            SplineForm::Exact => (len / 3.0, len / 6.0),
            SplineForm::Midpoint { level } => {
                let m = len * (level as f64).exp2();
                let corr = len / (12.0 * m * m);
                (len / 3.0 - corr, len / 6.0 + corr)
            }
        }
    }

    /// Tridiagonal Gram matrix of the nodal basis on sorted `knots`.
    fn gram(&self, knots: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut diag = vec![0.0; knots.len()];
        let mut off = vec![0.0; knots.len().saturating_sub(1)];
        for (i, w) in knots.windows(2).enumerate() {
            let (d, o) = self.segment(w[1] - w[0]);
            diag[i] += d;
            diag[i + 1] += d;
            off[i] = o;
        }
        (diag, off)
    }

    fn quadratic_form(&self, knots: &[f64], c: &[f64]) -> f64 {
        let (diag, off) = self.gram(knots);
        let mut acc = 0.0;
        for i in 0..c.len() {
            acc += diag[i] * c[i] * c[i];
            if i + 1 < c.len() {
                acc += 2.0 * off[i] * c[i] * c[i + 1];
            }
        }
        acc
    }
}

/// A continuous piecewise-linear function given by its values at sorted knots.
#[derive(Clone, Debug, PartialEq)]
pub struct NodalSpline {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl NodalSpline {
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.knots.partition_point(|&z| z <= x);
        if i == 0 {
            return self.values[0];
        }
        if i >= self.knots.len() {
            return *self.values.last().unwrap();
        }
        let (z0, z1) = (self.knots[i - 1], self.knots[i]);
        let u = (x - z0) / (z1 - z0);
        self.values[i - 1] * (1.0 - u) + self.values[i] * u
    }

    /// Values at the cell midpoints of `grid`, walking the knots once.
    pub fn sample(&self, grid: DyadicGrid) -> SampledFunction {
        let mut seg = 0;
        let values = grid
            .midpoints()
            .map(|x| {
                while seg + 2 < self.knots.len() && x >= self.knots[seg + 1] {
                    seg += 1;
                }
                let (z0, z1) = (self.knots[seg], self.knots[seg + 1]);
                let u = (x - z0) / (z1 - z0);
                self.values[seg] * (1.0 - u) + self.values[seg + 1] * u
            })
            .collect();
        SampledFunction::from_raw(grid, values)
    }
}

/// Banded Cholesky solve of a symmetric positive definite tridiagonal system.
pub(crate) fn solve_spd_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut l_diag = vec![0.0; n];
    let mut l_off = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut d = diag[i];
        if i > 0 {
            d -= l_off[i - 1] * l_off[i - 1];
        }
        if !(d > 0.0) {
            return Err(LabError::Numeric(format!(
                "tridiagonal Gram matrix not positive definite at row {i}"
            )));
        }
        l_diag[i] = d.sqrt();
        if i + 1 < n {
            l_off[i] = off[i] / l_diag[i];
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut v = rhs[i];
        if i > 0 {
            v -= l_off[i - 1] * y[i - 1];
        }
        y[i] = v / l_diag[i];
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        if i + 1 < n {
            v -= l_off[i] * y[i + 1];
        }
        y[i] = v / l_diag[i];
    }
    Ok(y)
}

/// The first `n` Franklin functions in nodal form, orthonormal under `form`.
pub fn franklin_nodal(n: usize, form: SplineForm) -> Result<Vec<NodalSpline>> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(NodalSpline {
        knots: vec![0.0, 1.0],
        values: vec![1.0, 1.0],
    });
    if n == 1 {
        return Ok(out);
    }
    {
        let knots = [0.0, 1.0];
        let (d, o) = form.segment(1.0);
        // ⟨x, 1⟩ and ⟨1, 1⟩ in the two-node basis.
        let mean = (o + d) / (2.0 * (d + o));
        let g = [-mean, 1.0 - mean];
        let norm = form.quadratic_form(&knots, &g).sqrt();
        out.push(NodalSpline {
            knots: knots.to_vec(),
            values: g.iter().map(|v| v / norm).collect(),
        });
    }
    let mut knots = vec![0.0, 1.0];
    for k in 3..=n {
        let s = center(k - 1)?.position;
        let r_idx = knots.partition_point(|&z| z < s);
        let l_idx = r_idx - 1;
        let (l, r) = (knots[l_idx], knots[r_idx]);
        let (diag, off) = form.gram(&knots);

        let (d_left, o_left) = form.segment(s - l);
        let (d_right, o_right) = form.segment(r - s);
        let hat_hat = d_left + d_right;
        let w_l = (r - s) / (r - l);
        let w_r = (s - l) / (r - l);
        let mut rhs = vec![0.0; knots.len()];
        rhs[l_idx] = o_left + w_l * hat_hat;
        rhs[r_idx] = o_right + w_r * hat_hat;
        let y = solve_spd_tridiagonal(&diag, &off, &rhs)?;

        let mut values: Vec<f64> = y.iter().map(|v| -v).collect();
        values.insert(r_idx, 1.0 - (w_l * y[l_idx] + w_r * y[r_idx]));
        knots.insert(r_idx, s);
        let norm = form.quadratic_form(&knots, &values).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(LabError::Numeric(format!("Franklin step {k} degenerated")));
        }
        values.iter_mut().for_each(|v| *v /= norm);
        out.push(NodalSpline {
            knots: knots.clone(),
            values,
        });
    }
    Ok(out)
}

/// The first `n` Franklin functions sampled on `grid`; needs `n <= 2^{J-4}`.
///
/// Orthonormalization uses the grid's midpoint quadrature, so the sampled
/// functions are orthonormal on the grid to rounding and converge to the
/// classical Franklin functions at rate `O(4^{-J})`.
pub fn build_franklin(n: usize, grid: DyadicGrid) -> Result<OrthonormalSystem> {
    if n == 0 {
        return domain("a system needs at least one function");
    }
    if grid.level() < 4 || n > 1usize << (grid.level() - 4) {
        return resource(format!(
            "{n} Franklin functions need grid level >= log2(N) + 4, got {}",
            grid.level()
        ));
    }
    let nodal = franklin_nodal(
        n,
        SplineForm::Midpoint {
            level: grid.level(),
        },
    )?;
    let functions = nodal.iter().map(|s| s.sample(grid)).collect();
    Ok(OrthonormalSystem::new("franklin", grid, functions, true)?.with_params(Some(0.9), Some(1.0)))
}
