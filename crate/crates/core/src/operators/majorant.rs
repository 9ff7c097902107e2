use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::maximal::{haar_square, hl_maximal, MaximalMode, MaximalOutput};
use super::{add_term, CoefficientVector};
use crate::error::{domain, Result};
use crate::grid::SampledFunction;
use crate::random::{random_signs, stream_rng};
use crate::systems::OrthonormalSystem;

/// `q = min{(p+1)/2, (1-δ/2)^{-1}, 3/2}`.
pub fn default_majorant_q(p: f64, delta: f64) -> f64 {
    ((p + 1.0) / 2.0).min(1.0 / (1.0 - delta / 2.0)).min(1.5)
}

fn check_q(q: f64, delta: Option<f64>) -> Result<()> {
    if !(q > 1.0) || !q.is_finite() {
        return domain(format!("the block majorant needs q > 1, got {q}"));
    }
    if let Some(d) = delta {
        // q' δ > 1  ⇔  q (1 - δ) < 1.
        if !(q * (1.0 - d) < 1.0) {
            return domain(format!(
                "q = {q} violates q'δ > 1 for δ = {d}; need q < {}",
                1.0 / (1.0 - d)
            ));
        }
    }
    Ok(())
}

/// `[Σ_m (M_q(Σ_{2^{m-1} < k <= 2^m} |a_k φ_k|))²]^{1/2}`, where block `m = 0`
/// is `{1}` and the last block is cut at `N`.
pub fn block_majorant(
    a: &CoefficientVector,
    s: &OrthonormalSystem,
    q: f64,
) -> Result<MaximalOutput> {
    a.check_system(s)?;
    check_q(q, s.delta)?;
    let cells = s.grid().cell_count();
    let mut sq = vec![0.0; cells];
    let mut mode = MaximalMode::Exact;
    let mut lo = 1;
    while lo <= s.len() {
        let hi = (2 * lo).min(s.len() + 1);
        if a.values()[lo - 1..hi - 1].iter().any(|&c| c != 0.0) {
            let mut block = vec![0.0; cells];
            for k in lo..hi {
                let c = a.get(k).abs();
                if c != 0.0 {
                    let r = s.support(k);
                    for (b, v) in block[r.clone()].iter_mut().zip(&s.phi(k).values()[r]) {
                        *b += c * v.abs();
                    }
                }
            }
            let m = hl_maximal(&SampledFunction::from_raw(*s.grid(), block), q)?;
            mode = m.mode;
            for (t, v) in sq.iter_mut().zip(m.function.values()) {
                *t += v * v;
            }
        }
        lo = hi;
    }
    Ok(MaximalOutput {
        function: SampledFunction::from_raw(*s.grid(), sq.into_iter().map(f64::sqrt).collect()),
        mode,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignSampler {
    /// Sign vectors drawn when exact enumeration is too large.
    pub samples: usize,
    pub seed: u64,
    /// Enumerate every sign pattern when at most this many coefficients are nonzero.
    pub exact_limit: usize,
}

impl SignSampler {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            exact_limit: 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SquareSup {
    pub function: SampledFunction,
    /// Number of sign vectors evaluated.
    pub samples: usize,
    pub exact: bool,
}

fn modulated_square(
    a: &CoefficientVector,
    s: &OrthonormalSystem,
    active: &[usize],
    signs: impl Fn(usize) -> f64,
) -> SampledFunction {
    let mut out = vec![0.0; s.grid().cell_count()];
    for (i, &k) in active.iter().enumerate() {
        add_term(&mut out, s, k, signs(i) * a.get(k));
    }
    haar_square(&SampledFunction::from_raw(*s.grid(), out))
}

/// Pointwise `max_λ S(T_λ f)` over sign vectors `λ ∈ {±1}^N`, where `S` is
/// the Haar square function. Exact when few coefficients are active, a
/// lower envelope otherwise. The sign of the first active coefficient is
/// fixed since `S(-g) = S(g)`.
pub fn modulated_square_sup(
    a: &CoefficientVector,
    s: &OrthonormalSystem,
    sampler: &SignSampler,
) -> Result<SquareSup> {
    a.check_system(s)?;
    let active: Vec<usize> = (1..=s.len()).filter(|&k| a.get(k) != 0.0).collect();
    let cells = s.grid().cell_count();
    let merge = |mut x: Vec<f64>, y: Vec<f64>| {
        for (a, b) in x.iter_mut().zip(y) {
            if b > *a {
                *a = b;
            }
        }
        x
    };
    let (values, samples, exact) = if active.len() <= sampler.exact_limit {
        let patterns = if active.is_empty() {
            1
        } else {
            1usize << (active.len() - 1)
        };
        let v = (0..patterns)
            .into_par_iter()
            .map(|mask| {
                let f = modulated_square(a, s, &active, |i| {
                    if i > 0 && (mask >> (i - 1)) & 1 == 1 {
                        -1.0
                    } else {
                        1.0
                    }
                });
                f.into_values()
            })
            .reduce(|| vec![0.0; cells], merge);
        (v, patterns, true)
    } else {
        if sampler.samples == 0 {
            return domain("sign sampling needs at least one sample");
        }
        let v = (0..sampler.samples)
            .into_par_iter()
            .map(|i| {
                let signs = random_signs(active.len(), &mut stream_rng(sampler.seed, i as u64));
                modulated_square(a, s, &active, |j| signs[j]).into_values()
            })
            .reduce(|| vec![0.0; cells], merge);
        (v, sampler.samples, false)
    };
    Ok(SquareSup {
        function: SampledFunction::from_raw(*s.grid(), values),
        samples,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;
    use crate::operators::{coefficients, hl_maximal, modulate};
    use crate::systems::{build_franklin, build_haar};

    #[test]
    fn default_q_choices() {
        assert_eq!(default_majorant_q(2.0, 0.9), 1.5);
        assert_eq!(default_majorant_q(1.5, 0.9), 1.25);
        let q = default_majorant_q(3.0, 0.5);
        assert!((q - 1.0 / 0.75).abs() < 1e-15);
        for p in [1.1, 2.0, 5.0] {
            for d in [0.1, 0.5, 0.9] {
                assert!(check_q(default_majorant_q(p, d), Some(d)).is_ok());
            }
        }
    }

    #[test]
    fn majorant_rejects_incompatible_q() {
        let s = build_franklin(8, DyadicGrid::new(7).unwrap()).unwrap();
        let a = CoefficientVector::zeros(8);
        assert!(block_majorant(&a, &s, 1.0).is_err());
        assert!(block_majorant(&a, &s, 20.0).is_err());
        let z = block_majorant(&a, &s, 1.5).unwrap();
        assert!(z.function.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_block_is_one_maximal_function() {
        let s = build_franklin(16, DyadicGrid::new(8).unwrap()).unwrap();
        let mut c = vec![0.0; 16];
        c[4] = 0.7;
        c[6] = -0.2;
        let a = CoefficientVector::new(c).unwrap();
        let m = block_majorant(&a, &s, 1.5).unwrap().function;
        let block = s.phi(5).abs().scaled(0.7).add_scaled(0.2, &s.phi(7).abs()).unwrap();
        let direct = hl_maximal(&block, 1.5).unwrap().function;
        for (x, y) in m.values().iter().zip(direct.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn two_coefficients_enumerate_all_signs() {
        let s = build_franklin(8, DyadicGrid::new(7).unwrap()).unwrap();
        let mut c = vec![0.0; 8];
        c[2] = 0.8;
        c[5] = -0.5;
        let a = CoefficientVector::new(c).unwrap();
        let sup = modulated_square_sup(&a, &s, &SignSampler::new(10, 1)).unwrap();
        assert!(sup.exact);
        let mut brute = vec![0.0f64; 128];
        for s3 in [-1.0, 1.0] {
            for s6 in [-1.0, 1.0] {
                let mut l = vec![0.0; 8];
                l[2] = s3;
                l[5] = s6;
                let sq = haar_square(&modulate(&a, &l, &s).unwrap());
                for (b, v) in brute.iter_mut().zip(sq.values()) {
                    *b = b.max(*v);
                }
            }
        }
        for (x, y) in sup.function.values().iter().zip(&brute) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn haar_unit_vector_gives_absolute_value() {
        let s = build_haar(16, DyadicGrid::new(6).unwrap()).unwrap();
        let a = coefficients(s.phi(6), &s).unwrap();
        let sup = modulated_square_sup(&a, &s, &SignSampler::new(4, 2)).unwrap();
        for (x, y) in sup.function.values().iter().zip(s.phi(6).values()) {
            assert!((x - y.abs()).abs() < 1e-14);
        }
    }

    #[test]
    fn sampled_sup_dominates_each_sample_and_is_reproducible() {
        let s = build_haar(32, DyadicGrid::new(6).unwrap()).unwrap();
        let c: Vec<f64> = (1..=32).map(|k| 1.0 / k as f64).collect();
        let a = CoefficientVector::new(c).unwrap();
        let sampler = SignSampler::new(20, 9);
        let sup = modulated_square_sup(&a, &s, &sampler).unwrap();
        assert!(!sup.exact);
        assert_eq!(sup.samples, 20);
        assert_eq!(sup, modulated_square_sup(&a, &s, &sampler).unwrap());
        let plain = haar_square(&modulate(&a, &[1.0; 32], &s).unwrap());
        for (x, y) in sup.function.values().iter().zip(plain.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
