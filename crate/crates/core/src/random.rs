//! Seeded randomness. Every random draw comes from a ChaCha stream selected by
//! `(seed, stream)`, so results never depend on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{shape, Result};
use crate::grid::{DyadicGrid, SampledFunction};

/// Default seed when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_2024;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A step function constant on level-`level` cells, values uniform in `[-1,1]`.
pub fn random_step(level: u32, grid: DyadicGrid, rng: &mut impl Rng) -> Result<SampledFunction> {
    if level > grid.level() {
        return shape(format!(
            "step level {level} is finer than the grid level {}",
            grid.level()
        ));
    }
    let coarse = DyadicGrid::new(level)?;
    let values = (0..coarse.cell_count())
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    SampledFunction::new(coarse, values)?.refine_to(grid)
}

/// `Σ_{n<levels} Σ_j u_{n,j} 2^{-n/2} h_{2^n+j}` with `u` uniform in `[-1,1]`:
/// every dyadic interval of level `< levels` gets a jump of size `|u| <= 1`.
pub fn random_haar_polynomial(
    levels: u32,
    grid: DyadicGrid,
    rng: &mut impl Rng,
) -> Result<SampledFunction> {
    if levels > grid.level() {
        return shape(format!(
            "{levels} Haar levels do not fit on a level-{} grid",
            grid.level()
        ));
    }
    let coarse = DyadicGrid::new(levels)?;
    let mut values = vec![0.0; coarse.cell_count()];
    for n in 0..levels {
        let width = 1usize << (levels - n);
        for chunk in values.chunks_mut(width) {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let (left, right) = chunk.split_at_mut(width / 2);
            left.iter_mut().for_each(|v| *v += u);
            right.iter_mut().for_each(|v| *v -= u);
        }
    }
    SampledFunction::new(coarse, values)?.refine_to(grid)
}

/// `n` values uniform in `[-1,1]`.
pub fn random_uniform(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

pub fn random_signs(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}
