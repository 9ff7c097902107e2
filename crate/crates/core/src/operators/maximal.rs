use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, Result};
use crate::grid::{sum, SampledFunction};
use crate::systems::haar_support;

/// Largest grid level on which [`hl_maximal`] scans every interval.
pub const EXACT_MAXIMAL_LEVEL: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaximalMode {
    /// Supremum over every grid-aligned interval containing the cell.
    Exact,
    /// Supremum over windows of length `2^-l` starting at multiples of
    /// `2^-l / 4`. Any interval `I` lies in such a window of length below
    /// `8|I|/3`, so the result is at least `(3/8)^{1/q}` times the exact one.
    Window,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaximalOutput {
    pub function: SampledFunction,
    pub mode: MaximalMode,
}

/// Averages of `g` over the dyadic intervals of every level:
/// `out[n][i]` is the mean over the `i`-th interval of level `n`.
pub fn dyadic_averages(values: &[f64]) -> Vec<Vec<f64>> {
    let levels = values.len().trailing_zeros() as usize;
    let mut out = Vec::with_capacity(levels + 1);
    out.push(values.to_vec());
    for _ in 0..levels {
        let prev = out.last().unwrap();
        let next: Vec<f64> = prev.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        out.push(next);
    }
    out.reverse();
    out
}

/// `max_{lo <= n <= J}` of the level-`n` dyadic averages containing each cell.
fn dyadic_sup(pyramid: &[Vec<f64>], lo: usize, out: &mut [f64]) {
    let j = pyramid.len() - 1;
    for (n, level) in pyramid.iter().enumerate().skip(lo) {
        let shift = j - n;
        for (i, o) in out.iter_mut().enumerate() {
            let v = level[i >> shift];
            if v > *o {
                *o = v;
            }
        }
    }
}

/// `M^d f(x) = sup_{n >= 1} |I_n(x)|^{-1} ∫_{I_n(x)} |f|`.
pub fn dyadic_maximal(f: &SampledFunction) -> SampledFunction {
    let abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let pyramid = dyadic_averages(&abs);
    let mut out = vec![0.0; abs.len()];
    dyadic_sup(&pyramid, 1.min(pyramid.len() - 1), &mut out);
    SampledFunction::from_raw(*f.grid(), out)
}

/// `M_q f(x) = sup_{I ∋ x} (|I|^{-1} ∫_I |f|^q)^{1/q}`, exact up to level
/// [`EXACT_MAXIMAL_LEVEL`] and windowed above.
pub fn hl_maximal(f: &SampledFunction, q: f64) -> Result<MaximalOutput> {
    let mode = if f.grid().level() <= EXACT_MAXIMAL_LEVEL {
        MaximalMode::Exact
    } else {
        MaximalMode::Window
    };
    hl_maximal_in(f, q, mode)
}

pub fn hl_maximal_in(f: &SampledFunction, q: f64, mode: MaximalMode) -> Result<MaximalOutput> {
    if !(q >= 1.0) || !q.is_finite() {
        return domain(format!("M_q needs 1 <= q < inf, got {q}"));
    }
    let level = f.grid().level();
    if mode == MaximalMode::Exact && level > EXACT_MAXIMAL_LEVEL {
        return resource(format!(
            "exact M_q is limited to level {EXACT_MAXIMAL_LEVEL}, grid has level {level}"
        ));
    }
    let g: Vec<f64> = if q == 1.0 {
        f.values().iter().map(|v| v.abs()).collect()
    } else {
        f.values().iter().map(|v| v.abs().powf(q)).collect()
    };
    let n = g.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in &g {
        acc += v;
        prefix.push(acc);
    }

    let mut out = g.clone();
    dyadic_sup(&dyadic_averages(&g), 0, &mut out);
    match mode {
        MaximalMode::Exact => {
            let inv: Vec<f64> = (0..=n).map(|l| if l == 0 { 0.0 } else { 1.0 / l as f64 }).collect();
            let mut suffix = vec![0.0; n + 1];
            for a in 0..n {
                // suffix[b] = max over b' >= b of the average over [a, b').
                let mut best = 0.0f64;
                for b in (a + 1..=n).rev() {
                    let v = (prefix[b] - prefix[a]) * inv[b - a];
                    if v > best {
                        best = v;
                    }
                    suffix[b] = best;
                }
                for i in a..n {
                    if suffix[i + 1] > out[i] {
                        out[i] = suffix[i + 1];
                    }
                }
            }
        }
        MaximalMode::Window => {
            for l in 0..=level {
                let len = n >> l;
                let step = (len / 4).max(1);
                let mut start = 0;
                while start < n {
                    let end = (start + len).min(n);
                    let v = (prefix[end] - prefix[start]) / (end - start) as f64;
                    for o in &mut out[start..end] {
                        if v > *o {
                            *o = v;
                        }
                    }
                    start += step;
                }
            }
        }
    }
    if q != 1.0 {
        let inv_q = 1.0 / q;
        for (o, v) in out.iter_mut().zip(f.values()) {
            *o = o.powf(inv_q).max(v.abs());
        }
    }
    Ok(MaximalOutput {
        function: SampledFunction::from_raw(*f.grid(), out),
        mode,
    })
}

/// `H_n f(x) = |I_n(x)|^{-1} ∫_{I_n(x)} f`.
pub fn haar_partial(f: &SampledFunction, n: u32) -> Result<SampledFunction> {
    let level = f.grid().level();
    if n > level {
        return domain(format!("Haar level {n} exceeds the grid level {level}"));
    }
    let width = 1usize << (level - n);
    let mut out = Vec::with_capacity(f.values().len());
    for block in f.values().chunks_exact(width) {
        let mean = sum(block) / width as f64;
        out.extend(std::iter::repeat_n(mean, width));
    }
    Ok(SampledFunction::from_raw(*f.grid(), out))
}

/// `Σ_{k <= 2^n} ⟨f,h_k⟩ h_k`, computed from the coefficients.
pub fn haar_partial_by_coefficients(f: &SampledFunction, n: u32) -> Result<SampledFunction> {
    let grid = *f.grid();
    if n > grid.level() {
        return domain(format!(
            "Haar level {n} exceeds the grid level {}",
            grid.level()
        ));
    }
    let h = grid.cell_width();
    let v = f.values();
    let mut out = vec![sum(v) * h; v.len()];
    for k in 2..=(1usize << n) {
        let (pos, neg) = haar_support(k, &grid)?;
        let amp = ((k - 1).ilog2() as f64 / 2.0).exp2();
        let a = (sum(&v[pos.clone()]) - sum(&v[neg.clone()])) * amp * h;
        let c = a * amp;
        out[pos].iter_mut().for_each(|o| *o += c);
        out[neg].iter_mut().for_each(|o| *o -= c);
    }
    Ok(SampledFunction::from_raw(grid, out))
}

/// `ΔH_n f = H_n f - H_{n-1} f` for `n >= 1`; `n = 0` gives `H_0 f`.
pub fn haar_block(f: &SampledFunction, n: u32) -> Result<SampledFunction> {
    let hn = haar_partial(f, n)?;
    if n == 0 {
        return Ok(hn);
    }
    hn.sub(&haar_partial(f, n - 1)?)
}

/// `S f = (Σ_k ⟨f,h_k⟩² h_k²)^{1/2}` over every Haar index resolved by the
/// grid, computed as `((H_0 f)² + Σ_n (ΔH_n f)²)^{1/2}`.
pub fn haar_square(f: &SampledFunction) -> SampledFunction {
    let pyramid = dyadic_averages(f.values());
    let j = pyramid.len() - 1;
    let mut sq = vec![pyramid[0][0] * pyramid[0][0]; f.values().len()];
    for n in 1..=j {
        let (fine, coarse) = (&pyramid[n], &pyramid[n - 1]);
        let shift = j - n;
        for (i, s) in sq.iter_mut().enumerate() {
            let c = i >> shift;
            let d = fine[c] - coarse[c >> 1];
            *s += d * d;
        }
    }
    SampledFunction::from_raw(*f.grid(), sq.into_iter().map(f64::sqrt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DyadicGrid, Interval};
    use crate::random::{random_step, stream_rng};
    use crate::systems::haar_function;

    fn g(j: u32) -> DyadicGrid {
        DyadicGrid::new(j).unwrap()
    }

    /// Direct enumeration of every grid interval, for small grids.
    fn brute_maximal(f: &SampledFunction, q: f64) -> Vec<f64> {
        let v: Vec<f64> = f.values().iter().map(|x| x.abs().powf(q)).collect();
        let n = v.len();
        let mut out = vec![0.0f64; n];
        for a in 0..n {
            for b in a + 1..=n {
                let avg = v[a..b].iter().sum::<f64>() / (b - a) as f64;
                for o in &mut out[a..b] {
                    *o = o.max(avg);
                }
            }
        }
        out.iter().map(|x| x.powf(1.0 / q)).collect()
    }

    #[test]
    fn exact_maximal_matches_enumeration() {
        for seed in 0..5 {
            let f = random_step(5, g(6), &mut stream_rng(seed, 0)).unwrap();
            for q in [1.0, 1.5, 3.0] {
                let m = hl_maximal(&f, q).unwrap();
                assert_eq!(m.mode, MaximalMode::Exact);
                for (x, y) in m.function.values().iter().zip(brute_maximal(&f, q)) {
                    assert!((x - y).abs() < 1e-12, "{x} {y}");
                }
            }
        }
    }

    #[test]
    fn maximal_of_quarter_indicator() {
        let f = SampledFunction::indicator(g(8), Interval::new(0.0, 0.25).unwrap());
        let m = hl_maximal(&f, 1.0).unwrap().function;
        // Best interval through the cell at 1/2 is [0, 1/2 + h).
        let h = g(8).cell_width();
        assert!((m.eval(0.5) - 0.25 / (0.5 + h)).abs() < 1e-14);
        let c = SampledFunction::constant(g(7), -2.5);
        for q in [1.0, 2.0] {
            let mc = hl_maximal(&c, q).unwrap().function;
            assert!(mc.values().iter().all(|&v| (v - 2.5).abs() < 1e-14));
        }
        assert!(hl_maximal(&c, 0.5).is_err());
    }

    #[test]
    fn window_mode_bounds() {
        let f = random_step(9, g(10), &mut stream_rng(3, 1)).unwrap();
        for q in [1.0, 2.0] {
            let exact = hl_maximal_in(&f, q, MaximalMode::Exact).unwrap().function;
            let win = hl_maximal_in(&f, q, MaximalMode::Window).unwrap().function;
            let factor = (3.0f64 / 8.0).powf(1.0 / q);
            for (e, w) in exact.values().iter().zip(win.values()) {
                assert!(*w <= e + 1e-12);
                assert!(*w >= factor * e - 1e-12);
            }
        }
        let big = SampledFunction::zeros(g(13));
        assert_eq!(hl_maximal(&big, 1.0).unwrap().mode, MaximalMode::Window);
        assert!(hl_maximal_in(&big, 1.0, MaximalMode::Exact).is_err());
    }

    #[test]
    fn dyadic_maximal_of_quarter_indicator() {
        let f = SampledFunction::indicator(g(6), Interval::new(0.0, 0.25).unwrap());
        let m = dyadic_maximal(&f);
        assert_eq!(m.eval(0.1), 1.0);
        assert_eq!(m.eval(0.3), 0.5);
        assert_eq!(m.eval(0.7), 0.0);
        let c = SampledFunction::constant(g(5), -3.0);
        assert!(dyadic_maximal(&c).values().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn haar_partial_examples() {
        let f = SampledFunction::indicator(g(7), Interval::new(0.0, 0.5).unwrap());
        assert_eq!(haar_partial(&f, 1).unwrap(), f);
        let x = SampledFunction::from_fn(g(7), |x| x).unwrap();
        let h0 = haar_partial(&x, 0).unwrap();
        assert!(h0.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));
        assert!(haar_partial(&x, 8).is_err());
    }

    #[test]
    fn square_function_examples() {
        let grid = g(6);
        let h2 = haar_function(2, grid).unwrap();
        let h3 = haar_function(3, grid).unwrap();
        let f = h2.add_scaled(1.0, &h3).unwrap();
        let s = haar_square(&f);
        assert!((s.eval(0.2) - 3f64.sqrt()).abs() < 1e-14);
        assert!((s.eval(0.7) - 1.0).abs() < 1e-14);
        let h7 = haar_function(7, grid).unwrap();
        let s7 = haar_square(&h7);
        for (a, b) in s7.values().iter().zip(h7.values()) {
            assert!((a - b.abs()).abs() < 1e-14);
        }
    }
}
