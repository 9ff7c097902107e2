use std::ops::Range;

use super::{center, OrthonormalSystem};
use crate::error::{domain, resource, Result};
use crate::grid::{DyadicGrid, SampledFunction};

/// Cells where `h_k` is nonzero, split into the positive and negative halves.
pub fn haar_support(k: usize, grid: &DyadicGrid) -> Result<(Range<usize>, Range<usize>)> {
    if k == 0 {
        return domain("indices start at 1");
    }
    if k == 1 {
        return Ok((0..grid.cell_count(), 0..0));
    }
    let c = center(k)?;
    if c.level + 1 > grid.level() {
        return resource(format!(
            "h_{k} lives on level {} but the grid has level {}",
            c.level,
            grid.level()
        ));
    }
    let width = 1usize << (grid.level() - c.level);
    let start = (c.j as usize - 1) * width;
    let mid = start + width / 2;
    Ok((start..mid, mid..start + width))
}

/// The `L²`-normalized Haar function `h_k`, with `h_1 ≡ 1`.
pub fn haar_function(k: usize, grid: DyadicGrid) -> Result<SampledFunction> {
    let (pos, neg) = haar_support(k, &grid)?;
    let amp = if k == 1 {
        1.0
    } else {
        (center(k)?.level as f64 / 2.0).exp2()
    };
    let mut values = vec![0.0; grid.cell_count()];
    values[pos].fill(amp);
    values[neg].fill(-amp);
    Ok(SampledFunction::from_raw(grid, values))
}

/// `h_1, …, h_N` on `grid`; needs `N <= 2^J`.
pub fn build_haar(n: usize, grid: DyadicGrid) -> Result<OrthonormalSystem> {
    if n == 0 {
        return domain("a system needs at least one function");
    }
    if n > grid.cell_count() {
        return resource(format!(
            "{n} Haar functions need at least {} cells, grid has {}",
            n,
            grid.cell_count()
        ));
    }
    let functions = (1..=n)
        .map(|k| haar_function(k, grid))
        .collect::<Result<Vec<_>>>()?;
    OrthonormalSystem::new("haar", grid, functions, true)
}
