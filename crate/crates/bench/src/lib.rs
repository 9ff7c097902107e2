//! Shared inputs for the criterion benchmarks.

use weyl_core::operators::{coefficients, CoefficientVector};
use weyl_core::random::{random_step, stream_rng};
use weyl_core::systems::{build_franklin, build_haar};
use weyl_core::{DyadicGrid, OrthonormalSystem, Result, SampledFunction};

pub struct Fixture {
    pub system: OrthonormalSystem,
    pub f: SampledFunction,
    pub a: CoefficientVector,
}

/// A system of `n` functions on `2^level` cells plus a seeded random step
/// input and its coefficients.
pub fn fixture(franklin: bool, n: usize, level: u32) -> Result<Fixture> {
    let grid = DyadicGrid::new(level)?;
    let system = if franklin {
        build_franklin(n, grid)?
    } else {
        build_haar(n, grid)?
    };
    let f = random_step(n.ilog2().min(level), grid, &mut stream_rng(7, 0))?;
    let a = coefficients(&f, &system)?;
    Ok(Fixture { system, f, a })
}
