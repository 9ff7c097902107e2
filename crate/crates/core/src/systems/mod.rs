//! Concrete orthonormal systems on `[0,1)` and their wavelet-type metadata.

mod franklin;
mod haar;
mod io;
mod verify;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};
use crate::grid::{DyadicGrid, SampledFunction};

pub use franklin::{build_franklin, franklin_nodal, NodalSpline, SplineForm};
pub use haar::{build_haar, haar_function, haar_support};
pub use io::{load_system, read_system, save_system, write_system};
pub use verify::{verify_wavelet_type, ConditionPass, ConditionReport, VerifyConfig};

/// Decay envelope `ξ(x) = (1+|x|)^{-(1+δ)}`.
pub fn xi(x: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("delta must lie in (0,1), got {delta}"));
    }
    Ok(xi_unchecked(x, delta))
}

#[inline]
pub(crate) fn xi_unchecked(x: f64, delta: f64) -> f64 {
    (1.0 + x.abs()).powf(-(1.0 + delta))
}

/// Level, position within the level and center of index `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Center {
    pub level: u32,
    pub j: u64,
    pub position: f64,
}

/// Dyadic center of index `k`: `t_1 = 1/2`, and `t_k = (2j-1)/2^{n+1}` for
/// `k = 2^n + j`, `1 <= j <= 2^n`. Index 1 is assigned level 0.
pub fn center(k: usize) -> Result<Center> {
    if k < 1 {
        return domain("indices start at 1");
    }
    if k == 1 {
        return Ok(Center {
            level: 0,
            j: 1,
            position: 0.5,
        });
    }
    let level = (k - 1).ilog2();
    let j = (k - (1usize << level)) as u64;
    let position = (2 * j - 1) as f64 / (1u64 << (level + 1)) as f64;
    Ok(Center { level, j, position })
}

/// How the functions of a system are matched to dyadic centers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Localization {
    /// `φ_k` lives at `t_k`.
    Dyadic,
    /// `φ_k` lives at `t_{k-1}` for `k >= 3` and `φ_2` at level 0: the
    /// classical Franklin ordering, where `φ_2` is the linear function and each
    /// later function adds one dyadic knot.
    Shifted,
}

#[derive(Clone, Debug)]
pub struct OrthonormalSystem {
    name: String,
    grid: DyadicGrid,
    functions: Vec<SampledFunction>,
    supports: Vec<Range<usize>>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub envelope_constant: Option<f64>,
    first_index_special: bool,
    localization: Localization,
}

impl OrthonormalSystem {
    /// Wraps already-orthonormal functions. Orthonormality is not re-checked
    /// here; see [`OrthonormalSystem::orthonormality_defect`].
    pub fn new(
        name: impl Into<String>,
        grid: DyadicGrid,
        functions: Vec<SampledFunction>,
        first_index_special: bool,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '=') {
            return domain(format!("system name {name:?} is not an identifier"));
        }
        if let Some(f) = functions.iter().find(|f| *f.grid() != grid) {
            return shape(format!(
                "function on level {} in a level-{} system",
                f.grid().level(),
                grid.level()
            ));
        }
        let supports = functions.iter().map(nonzero_range).collect();
        let localization = if name == "franklin" {
            Localization::Shifted
        } else {
            Localization::Dyadic
        };
        Ok(Self {
            name,
            grid,
            functions,
            supports,
            delta: None,
            alpha: None,
            envelope_constant: None,
            first_index_special,
            localization,
        })
    }

    pub fn with_params(mut self, delta: Option<f64>, alpha: Option<f64>) -> Self {
        self.delta = delta;
        self.alpha = alpha;
        self
    }

    pub fn with_localization(mut self, localization: Localization) -> Self {
        self.localization = localization;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    /// Number of functions `N`.
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn first_index_special(&self) -> bool {
        self.first_index_special
    }

    pub fn localization(&self) -> Localization {
        self.localization
    }

    /// `φ_k`, one-based. Panics when `k` is out of range.
    pub fn phi(&self, k: usize) -> &SampledFunction {
        &self.functions[k - 1]
    }

    pub fn functions(&self) -> &[SampledFunction] {
        &self.functions
    }

    /// Cells outside of which `φ_k` vanishes identically.
    pub fn support(&self, k: usize) -> Range<usize> {
        self.supports[k - 1].clone()
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return domain(format!("index {k} outside 1..={}", self.len()));
        }
        Ok(())
    }

    /// Localization level and center used by the wavelet-type conditions.
    pub fn localization_of(&self, k: usize) -> Center {
        match (self.localization, k) {
            (Localization::Dyadic, _) | (Localization::Shifted, 1) => {
                center(k).expect("k >= 1")
            }
            (Localization::Shifted, 2) => center(1).expect("k >= 1"),
            (Localization::Shifted, _) => center(k - 1).expect("k >= 2"),
        }
    }

    /// `max(max_{j≠k}|⟨φ_j,φ_k⟩|, max_k |‖φ_k‖² − 1|)` over the cell quadrature.
    pub fn orthonormality_defect(&self) -> f64 {
        use rayon::prelude::*;
        let h = self.grid.cell_width();
        (1..=self.len())
            .into_par_iter()
            .map(|j| {
                let fj = self.phi(j).values();
                let sj = self.support(j);
                let mut worst: f64 = 0.0;
                for k in j..=self.len() {
                    let sk = self.support(k);
                    let lo = sj.start.max(sk.start);
                    let hi = sj.end.min(sk.end);
                    let ip = if lo < hi {
                        crate::grid::dot(&fj[lo..hi], &self.phi(k).values()[lo..hi]) * h
                    } else {
                        0.0
                    };
                    let target = if j == k { 1.0 } else { 0.0 };
                    worst = worst.max((ip - target).abs());
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// The same system restricted to the next coarser grid by cell averaging.
    pub fn coarsen(&self) -> Result<Self> {
        let functions = self
            .functions
            .iter()
            .map(SampledFunction::coarsen)
            .collect::<Result<Vec<_>>>()?;
        let grid = self.grid.coarser().expect("coarsen succeeded");
        let mut s = Self::new(self.name.clone(), grid, functions, self.first_index_special)?;
        s.delta = self.delta;
        s.alpha = self.alpha;
        s.envelope_constant = self.envelope_constant;
        s.localization = self.localization;
        Ok(s)
    }
}

fn nonzero_range(f: &SampledFunction) -> Range<usize> {
    let v = f.values();
    match v.iter().position(|&x| x != 0.0) {
        None => 0..0,
        Some(start) => {
            let end = v.iter().rposition(|&x| x != 0.0).unwrap() + 1;
            start..end
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xi_values() {
        for d in [0.1, 0.5, 0.9] {
            assert_eq!(xi(0.0, d).unwrap(), 1.0);
            for x in [0.3, 1.0, 7.5] {
                assert_eq!(xi(x, d).unwrap(), xi(-x, d).unwrap());
                assert!(xi(x, d).unwrap() < 1.0);
            }
        }
        assert!((xi(1.0, 0.5).unwrap() - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!((xi(1.0, 0.5).unwrap() - 0.353553).abs() < 1e-6);
        assert!(xi(1.0, 0.0).is_err());
        assert!(xi(1.0, 1.0).is_err());
    }

    #[test]
    fn centers() {
        assert_eq!(center(1).unwrap().position, 0.5);
        let c5 = center(5).unwrap();
        assert_eq!((c5.level, c5.j, c5.position), (2, 1, 0.125));
        let c4 = center(4).unwrap();
        assert_eq!((c4.level, c4.j, c4.position), (1, 2, 0.75));
        assert!(center(0).is_err());
    }

    #[test]
    fn centers_are_interval_midpoints() {
        for k in 2..2000usize {
            let c = center(k).unwrap();
            let width = (-(c.level as f64)).exp2();
            let left = (c.j - 1) as f64 * width;
            assert!(left < c.position && c.position < left + width);
            assert_eq!(c.position, left + width / 2.0);
        }
    }

    #[test]
    fn rejects_bad_names_and_grids() {
        let g = DyadicGrid::new(3).unwrap();
        assert!(OrthonormalSystem::new("a b", g, vec![], true).is_err());
        let f = SampledFunction::constant(DyadicGrid::new(2).unwrap(), 1.0);
        assert!(OrthonormalSystem::new("x", g, vec![f], true).is_err());
    }

    #[test]
    fn shifted_localization() {
        let g = DyadicGrid::new(8).unwrap();
        let s = build_franklin(8, g).unwrap();
        assert_eq!(s.localization(), Localization::Shifted);
        assert_eq!(s.localization_of(2).position, 0.5);
        assert_eq!(s.localization_of(3).position, 0.5);
        assert_eq!(s.localization_of(4).position, 0.25);
        assert_eq!(s.localization_of(5).position, 0.75);
    }
}
