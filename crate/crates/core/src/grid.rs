//! Dyadic discretization of `[0,1)` and cell-constant functions on it.
//!
//! Every function in the laboratory is constant on the cells
//! `[i 2^-J, (i+1) 2^-J)` of a [`DyadicGrid`]. Integrals, norms and inner
//! products are computed by exact cell quadrature, so identities that hold
//! for step functions (Parseval for the Haar basis, exact averages over
//! dyadic intervals) hold here up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, shape, Result};

/// Default cap on the grid level.
pub const MAX_LEVEL: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicGrid {
    level: u32,
}

impl DyadicGrid {
    pub fn new(level: u32) -> Result<Self> {
        Self::with_cap(level, MAX_LEVEL)
    }

    pub fn with_cap(level: u32, cap: u32) -> Result<Self> {
        if level > cap {
            return resource(format!("grid level {level} exceeds cap {cap}"));
        }
        Ok(Self { level })
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.level
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        1usize << self.level
    }

    #[inline]
    pub fn cell_width(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    #[inline]
    pub fn midpoint(&self, cell: usize) -> f64 {
        (cell as f64 + 0.5) * self.cell_width()
    }

    /// Index of the cell containing `x`; `x` is clamped into `[0,1)`.
    #[inline]
    pub fn cell_of(&self, x: f64) -> usize {
        let i = (x * self.cell_count() as f64).floor();
        (i.max(0.0) as usize).min(self.cell_count() - 1)
    }

    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cell_count()).map(move |i| self.midpoint(i))
    }

    /// The grid one level coarser, if any.
    pub fn coarser(&self) -> Option<Self> {
        self.level.checked_sub(1).map(|level| Self { level })
    }

    pub fn finer(&self) -> Result<Self> {
        Self::new(self.level + 1)
    }
}

/// A dyadic interval `[(j-1)/2^n, j/2^n)` with `1 <= j <= 2^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicInterval {
    level: u32,
    index: u64,
}

impl DyadicInterval {
    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > 62 {
            return domain(format!("dyadic level {level} too deep"));
        }
        if index < 1 || index > 1u64 << level {
            return domain(format!("index {index} outside 1..=2^{level}"));
        }
        Ok(Self { level, index })
    }

    /// The unique level-`n` interval containing `x`.
    pub fn containing(x: f64, level: u32) -> Result<Self> {
        if !(0.0..1.0).contains(&x) {
            return domain(format!("point {x} outside [0,1)"));
        }
        if level > 62 {
            return domain(format!("dyadic level {level} too deep"));
        }
        let scaled = x * (level as f64).exp2();
        let j = (scaled.floor() as u64).min((1u64 << level) - 1) + 1;
        Ok(Self { level, index: j })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// One-based position `j` within its level.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn left(&self) -> f64 {
        (self.index - 1) as f64 * self.length()
    }

    pub fn right(&self) -> f64 {
        self.index as f64 * self.length()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.left() && x < self.right()
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            index: self.index.div_ceil(2),
        })
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.level >= other.level && {
            let shift = self.level - other.level;
            (self.index - 1) >> shift == other.index - 1
        }
    }

    /// Cells of `grid` meeting this interval.
    pub fn cell_range(&self, grid: &DyadicGrid) -> std::ops::Range<usize> {
        if self.level <= grid.level() {
            let width = 1usize << (grid.level() - self.level);
            let start = (self.index as usize - 1) * width;
            start..start + width
        } else {
            let cell = ((self.index - 1) >> (self.level - grid.level())) as usize;
            cell..cell + 1
        }
    }
}

/// Convenience form of [`DyadicInterval::containing`].
pub fn dyadic_interval(x: f64, level: u32) -> Result<DyadicInterval> {
    DyadicInterval::containing(x, level)
}

/// A half-open subinterval `[a, b)` of `[0,1)`; empty when `a == b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return domain(format!("[{a}, {b}) is not a subinterval of [0,1)"));
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.a == self.b
    }

    /// True when both endpoints fall on cell boundaries of `grid`.
    pub fn is_aligned(&self, grid: &DyadicGrid) -> bool {
        let n = grid.cell_count() as f64;
        (self.a * n).fract() == 0.0 && (self.b * n).fract() == 0.0
    }

    /// The concentric interval of twice the length (not clipped).
    pub fn doubled(&self) -> (f64, f64) {
        let half = self.length() / 2.0;
        (self.a - half, self.b + half)
    }
}

/// A real function on `[0,1)` that is constant on the cells of its grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: DyadicGrid,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: DyadicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return shape(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.cell_count()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("non-finite value at cell {i}"));
        }
        Ok(Self { grid, values })
    }

    /// Builds without the finiteness scan; callers guarantee the invariant.
    pub(crate) fn from_raw(grid: DyadicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count());
        Self { grid, values }
    }

    pub fn zeros(grid: DyadicGrid) -> Self {
        Self::from_raw(grid, vec![0.0; grid.cell_count()])
    }

    pub fn constant(grid: DyadicGrid, c: f64) -> Self {
        Self::from_raw(grid, vec![c; grid.cell_count()])
    }

    /// Samples `f` at cell midpoints.
    pub fn from_fn(grid: DyadicGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.midpoints().map(f).collect())
    }

    /// Indicator of `[a, b)`; cells cut by an endpoint carry the covered fraction.
    pub fn indicator(grid: DyadicGrid, interval: Interval) -> Self {
        let h = grid.cell_width();
        let values = (0..grid.cell_count())
            .map(|i| {
                let lo = i as f64 * h;
                let hi = lo + h;
                ((hi.min(interval.b) - lo.max(interval.a)).max(0.0)) / h
            })
            .collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &DyadicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value on the cell containing `x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.grid.cell_of(x)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn abs(&self) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v.abs()).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + c * y)
                .collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(-1.0, other)
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return shape(format!(
                "grid level {} vs {}",
                self.grid.level(),
                other.grid.level()
            ));
        }
        Ok(())
    }

    /// `∫_0^1 f`, exact for cell-constant functions.
    pub fn integrate(&self) -> f64 {
        sum(&self.values) * self.grid.cell_width()
    }

    /// `(∫|f|^p)^{1/p}` for `p > 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p > 1.0) || !p.is_finite() {
            return domain(format!("L^p norm needs 1 < p < inf, got {p}"));
        }
        Ok(lp_norm_of(&self.values, p, self.grid.cell_width()))
    }

    pub fn inner_product(&self, other: &Self) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_width())
    }

    /// `max - min` over the cells meeting `e`.
    pub fn oscillation(&self, e: &DyadicInterval) -> Result<f64> {
        self.oscillation_on(e.cell_range(&self.grid))
    }

    pub fn oscillation_on(&self, cells: std::ops::Range<usize>) -> Result<f64> {
        let slice = match self.values.get(cells.clone()) {
            Some(s) if !s.is_empty() => s,
            _ => return domain(format!("cells {cells:?} do not meet the grid")),
        };
        let (lo, hi) = slice
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Ok(hi - lo)
    }

    /// Restriction to the next coarser grid by averaging cell pairs.
    pub fn coarsen(&self) -> Result<Self> {
        let Some(coarse) = self.grid.coarser() else {
            return domain("cannot coarsen a level-0 grid");
        };
        let values = self
            .values
            .chunks_exact(2)
            .map(|c| 0.5 * (c[0] + c[1]))
            .collect();
        Ok(Self::from_raw(coarse, values))
    }

    /// The same step function represented on a finer grid.
    pub fn refine_to(&self, grid: DyadicGrid) -> Result<Self> {
        if grid.level() < self.grid.level() {
            return shape("refine_to needs a grid at least as fine");
        }
        let rep = 1usize << (grid.level() - self.grid.level());
        let values = self
            .values
            .iter()
            .flat_map(|&v| std::iter::repeat_n(v, rep))
            .collect();
        Ok(Self::from_raw(grid, values))
    }
}

const LEAF: usize = 8;

/// Balanced-tree reduction of `f(0), …, f(n-1)`. Splitting at midpoints makes
/// sums over dyadic blocks with antisymmetric halves cancel exactly.
#[inline]
fn tree_sum(n: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn rec(lo: usize, n: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if n <= LEAF {
            let mut v = [0.0; LEAF];
            for (i, slot) in v.iter_mut().enumerate().take(n) {
                *slot = f(lo + i);
            }
            return ((v[0] + v[1]) + (v[2] + v[3])) + ((v[4] + v[5]) + (v[6] + v[7]));
        }
        let half = n / 2;
        rec(lo, half, f) + rec(lo + half, n - half, f)
    }
    rec(0, n, f)
}

pub(crate) fn sum(a: &[f64]) -> f64 {
    tree_sum(a.len(), &|i| a[i])
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    tree_sum(n, &|i| a[i] * b[i])
}

/// `(h Σ|v|^p)^{1/p}` with the usual shortcuts for `p = 2`.
pub(crate) fn lp_norm_of(values: &[f64], p: f64, h: f64) -> f64 {
    if p == 2.0 {
        (tree_sum(values.len(), &|i| values[i] * values[i]) * h).sqrt()
    } else {
        (tree_sum(values.len(), &|i| values[i].abs().powf(p)) * h).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(j: u32) -> DyadicGrid {
        DyadicGrid::new(j).unwrap()
    }

    fn haar2(g: DyadicGrid) -> SampledFunction {
        SampledFunction::from_fn(g, |x| if x < 0.5 { 1.0 } else { -1.0 }).unwrap()
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid(0).cell_count(), 1);
        assert_eq!(grid(3).cell_count(), 8);
        assert_eq!(grid(3).cell_width(), 0.125);
        assert_eq!(grid(10).cell_count(), 1024);
        assert!(matches!(
            DyadicGrid::new(25),
            Err(crate::LabError::Resource(_))
        ));
        assert!(DyadicGrid::with_cap(13, 12).is_err());
    }

    #[test]
    fn intervals_from_points() {
        let i = dyadic_interval(0.3, 2).unwrap();
        assert_eq!((i.left(), i.right()), (0.25, 0.5));
        let i = dyadic_interval(0.75, 1).unwrap();
        assert_eq!((i.left(), i.right()), (0.5, 1.0));
        let i = dyadic_interval(0.0, 3).unwrap();
        assert_eq!((i.left(), i.right()), (0.0, 0.125));
        assert!(dyadic_interval(1.0, 2).is_err());
        assert!(dyadic_interval(-0.1, 2).is_err());
    }

    #[test]
    fn integrals() {
        let g = grid(10);
        assert_eq!(SampledFunction::constant(g, 1.0).integrate(), 1.0);
        assert_eq!(haar2(g).integrate(), 0.0);
        let id = SampledFunction::from_fn(g, |x| x).unwrap();
        assert!((id.integrate() - 0.5).abs() <= 2f64.powi(-11));
    }

    #[test]
    fn norms() {
        let g = grid(6);
        let half = SampledFunction::indicator(g, Interval::new(0.0, 0.5).unwrap());
        for p in [1.5, 2.0, 3.0, 7.0] {
            assert!((half.lp_norm(p).unwrap() - 2f64.powf(-1.0 / p)).abs() < 1e-12);
        }
        // h_3 = sqrt(2) on [0,1/4), -sqrt(2) on [1/4,1/2).
        let h3 = SampledFunction::from_fn(g, |x| {
            if x < 0.25 {
                2f64.sqrt()
            } else if x < 0.5 {
                -(2f64.sqrt())
            } else {
                0.0
            }
        })
        .unwrap();
        for p in [1.5, 2.0, 4.0] {
            let expect = 2f64.powf(0.5 - 1.0 / p);
            assert!((h3.lp_norm(p).unwrap() - expect).abs() < 1e-12);
        }
        assert!(half.lp_norm(1.0).is_err());
        assert!(half.lp_norm(0.5).is_err());
    }

    #[test]
    fn inner_products() {
        let g = grid(5);
        let h2 = haar2(g);
        let half = SampledFunction::indicator(g, Interval::new(0.0, 0.5).unwrap());
        assert_eq!(h2.inner_product(&h2).unwrap(), 1.0);
        assert_eq!(half.inner_product(&h2).unwrap(), 0.5);
        let other = SampledFunction::zeros(grid(4));
        assert!(matches!(
            h2.inner_product(&other),
            Err(crate::LabError::Shape(_))
        ));
    }

    #[test]
    fn oscillations() {
        let g = grid(10);
        let whole = DyadicInterval::new(0, 1).unwrap();
        assert_eq!(SampledFunction::constant(g, 3.0).oscillation(&whole).unwrap(), 0.0);
        assert_eq!(haar2(g).oscillation(&whole).unwrap(), 2.0);
        let id = SampledFunction::from_fn(g, |x| x).unwrap();
        assert!((id.oscillation(&whole).unwrap() - (1.0 - 2f64.powi(-10))).abs() < 1e-15);
        assert!(id.oscillation_on(5000..6000).is_err());
    }

    #[test]
    fn indicator_partial_cells() {
        let g = grid(2);
        let f = SampledFunction::indicator(g, Interval::new(0.125, 0.5).unwrap());
        assert_eq!(f.values(), &[0.5, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn coarsen_and_refine() {
        let g = grid(3);
        let f = SampledFunction::from_fn(g, |x| x * x).unwrap();
        let c = f.coarsen().unwrap();
        assert_eq!(c.grid().level(), 2);
        assert!((c.integrate() - f.integrate()).abs() < 1e-15);
        let r = c.refine_to(g).unwrap();
        assert_eq!(r.coarsen().unwrap(), c);
    }

    #[test]
    fn nesting_parent_chain() {
        let i = dyadic_interval(0.7, 5).unwrap();
        let p = i.parent().unwrap();
        assert!(i.is_subset_of(&p));
        assert_eq!(p, dyadic_interval(0.7, 4).unwrap());
    }
}
