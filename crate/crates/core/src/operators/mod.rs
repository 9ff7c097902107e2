//! Linear and maximal operators on sampled functions: coefficients,
//! projections onto index sets, dyadic partial sums, modulations, chain
//! maximal functions, Hardy–Littlewood and dyadic maximal functions, the Haar
//! square function and the block majorant.

mod majorant;
mod maximal;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};
use crate::grid::{dot, SampledFunction};
use crate::systems::OrthonormalSystem;

pub use majorant::{
    block_majorant, default_majorant_q, modulated_square_sup, SignSampler, SquareSup,
};
pub use maximal::{
    dyadic_averages, dyadic_maximal, haar_block, haar_partial, haar_partial_by_coefficients,
    haar_square, hl_maximal, hl_maximal_in, MaximalMode, MaximalOutput, EXACT_MAXIMAL_LEVEL,
};

/// Fourier coefficients `a_1, …, a_N` with respect to some system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    values: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return domain(format!("coefficient {} is not finite", i + 1));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    /// `e_k` in `R^n`, one-based.
    pub fn unit(k: usize, n: usize) -> Result<Self> {
        if k == 0 || k > n {
            return domain(format!("index {k} outside 1..={n}"));
        }
        let mut v = Self::zeros(n);
        v.values[k - 1] = 1.0;
        Ok(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `a_k`, one-based.
    pub fn get(&self, k: usize) -> f64 {
        self.values[k - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check_system(&self, s: &OrthonormalSystem) -> Result<()> {
        if self.len() != s.len() {
            return shape(format!(
                "{} coefficients for a system of {} functions",
                self.len(),
                s.len()
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainKind {
    Arbitrary,
    Monotone,
    SingletonIncrement,
}

/// Index sets `G_1, …, G_n` over one-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexChain {
    kind: ChainKind,
    sets: Vec<Vec<usize>>,
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.contains(x))
}

impl IndexChain {
    /// Validates the sets against `kind`. Sets must be nonempty lists of
    /// distinct positive indices; the chain itself must be nonempty.
    pub fn new(kind: ChainKind, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return domain("a chain needs at least one set");
        }
        for (m, g) in sets.iter().enumerate() {
            if g.contains(&0) {
                return domain(format!("set {} contains index 0", m + 1));
            }
            let mut sorted = g.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return domain(format!("set {} repeats an index", m + 1));
            }
        }
        if kind != ChainKind::Arbitrary {
            for (m, w) in sets.windows(2).enumerate() {
                if !is_subset(&w[0], &w[1]) {
                    return domain(format!("set {} is not contained in set {}", m + 1, m + 2));
                }
            }
        }
        if kind == ChainKind::SingletonIncrement {
            if sets[0].len() != 1 {
                return domain("the first set of a singleton chain must have one index");
            }
            for (m, w) in sets.windows(2).enumerate() {
                if w[1].len() != w[0].len() + 1 {
                    return domain(format!("set {} does not add exactly one index", m + 2));
                }
            }
        }
        Ok(Self { kind, sets })
    }

    /// The tightest kind the sets satisfy.
    pub fn infer(sets: Vec<Vec<usize>>) -> Result<Self> {
        for kind in [ChainKind::SingletonIncrement, ChainKind::Monotone] {
            if let Ok(c) = Self::new(kind, sets.clone()) {
                return Ok(c);
            }
        }
        Self::new(ChainKind::Arbitrary, sets)
    }

    /// `{o_1}, {o_1,o_2}, …` for an ordering of distinct indices.
    pub fn from_order(order: &[usize]) -> Result<Self> {
        let sets = (1..=order.len()).map(|m| order[..m].to_vec()).collect();
        Self::new(ChainKind::SingletonIncrement, sets)
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn max_index(&self) -> usize {
        self.sets.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        let m = self.max_index();
        if m > n {
            return domain(format!("chain uses index {m} but the system has {n}"));
        }
        Ok(())
    }
}

/// `a_k = ⟨f, φ_k⟩`, each restricted to the support of `φ_k`.
pub fn coefficients(f: &SampledFunction, s: &OrthonormalSystem) -> Result<CoefficientVector> {
    if f.grid() != s.grid() {
        return shape(format!(
            "function on level {} against a level-{} system",
            f.grid().level(),
            s.grid().level()
        ));
    }
    let h = s.grid().cell_width();
    let values = (1..=s.len())
        .into_par_iter()
        .map(|k| {
            let r = s.support(k);
            dot(&f.values()[r.clone()], &s.phi(k).values()[r]) * h
        })
        .collect();
    Ok(CoefficientVector { values })
}

/// `out += c φ_k` over the support of `φ_k`.
pub(crate) fn add_term(out: &mut [f64], s: &OrthonormalSystem, k: usize, c: f64) {
    if c == 0.0 {
        return;
    }
    let r = s.support(k);
    for (o, v) in out[r.clone()].iter_mut().zip(&s.phi(k).values()[r]) {
        *o += c * v;
    }
}

/// `Σ_{k ∈ G} a_k φ_k`, summed in the order the indices are listed.
pub fn project(a: &CoefficientVector, s: &OrthonormalSystem, g: &[usize]) -> Result<SampledFunction> {
    a.check_system(s)?;
    for &k in g {
        s.check_index(k)?;
    }
    let mut out = vec![0.0; s.grid().cell_count()];
    for &k in g {
        add_term(&mut out, s, k, a.get(k));
    }
    Ok(SampledFunction::from_raw(*s.grid(), out))
}

/// `P_G f` straight from the function.
pub fn project_function(
    f: &SampledFunction,
    s: &OrthonormalSystem,
    g: &[usize],
) -> Result<SampledFunction> {
    project(&coefficients(f, s)?, s, g)
}

/// `Φ_n f = Σ_{j ≤ 2^n} a_j φ_j`.
pub fn phi_partial(a: &CoefficientVector, s: &OrthonormalSystem, n: u32) -> Result<SampledFunction> {
    let top = 1usize.checked_shl(n).filter(|&t| t <= s.len());
    let Some(top) = top else {
        return domain(format!("2^{n} exceeds the system size {}", s.len()));
    };
    project(a, s, &(1..=top).collect::<Vec<_>>())
}

/// `ΔΦ_m f = Σ_{2^{m-1} < j ≤ 2^m} a_j φ_j` for `m >= 1`; `m = 0` gives `Φ_0 f`.
pub fn phi_block(a: &CoefficientVector, s: &OrthonormalSystem, m: u32) -> Result<SampledFunction> {
    if m == 0 {
        return phi_partial(a, s, 0);
    }
    let top = 1usize.checked_shl(m).filter(|&t| t <= s.len());
    let Some(top) = top else {
        return domain(format!("2^{m} exceeds the system size {}", s.len()));
    };
    project(a, s, &(top / 2 + 1..=top).collect::<Vec<_>>())
}

/// `T_λ f = Σ λ_k a_k φ_k` with `|λ_k| <= 1`.
pub fn modulate(
    a: &CoefficientVector,
    lambda: &[f64],
    s: &OrthonormalSystem,
) -> Result<SampledFunction> {
    a.check_system(s)?;
    if lambda.len() != a.len() {
        return shape(format!(
            "{} multipliers for {} coefficients",
            lambda.len(),
            a.len()
        ));
    }
    if let Some(i) = lambda.iter().position(|l| !(l.abs() <= 1.0)) {
        return domain(format!("|λ_{}| = {} exceeds 1", i + 1, lambda[i].abs()));
    }
    let mut out = vec![0.0; s.grid().cell_count()];
    for k in 1..=s.len() {
        add_term(&mut out, s, k, lambda[k - 1] * a.get(k));
    }
    Ok(SampledFunction::from_raw(*s.grid(), out))
}

/// `max_m |P_{G_m} f|` pointwise. Nested chains are accumulated incrementally.
pub fn chain_maximal(
    a: &CoefficientVector,
    s: &OrthonormalSystem,
    chain: &IndexChain,
) -> Result<SampledFunction> {
    a.check_system(s)?;
    chain.check_within(s.len())?;
    let cells = s.grid().cell_count();
    let mut best = vec![0.0f64; cells];
    let fold = |best: &mut [f64], cur: &[f64]| {
        for (b, c) in best.iter_mut().zip(cur) {
            *b = b.max(c.abs());
        }
    };
    if chain.kind() == ChainKind::Arbitrary {
        for g in chain.sets() {
            let p = project(a, s, g)?;
            fold(&mut best, p.values());
        }
    } else {
        let mut cur = vec![0.0; cells];
        let mut seen = vec![false; s.len() + 1];
        for g in chain.sets() {
            for &k in g {
                if !seen[k] {
                    seen[k] = true;
                    add_term(&mut cur, s, k, a.get(k));
                }
            }
            fold(&mut best, &cur);
        }
    }
    Ok(SampledFunction::from_raw(*s.grid(), best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DyadicGrid, Interval};
    use crate::systems::{build_franklin, build_haar};

    fn haar(j: u32, n: usize) -> OrthonormalSystem {
        build_haar(n, DyadicGrid::new(j).unwrap()).unwrap()
    }

    #[test]
    fn coefficients_of_basis_functions() {
        let s = haar(5, 32);
        let a = coefficients(s.phi(5), &s).unwrap();
        assert_eq!(a, CoefficientVector::unit(5, 32).unwrap());
        let z = coefficients(&SampledFunction::zeros(*s.grid()), &s).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coefficients_of_left_half() {
        let s = haar(4, 4);
        let f = SampledFunction::indicator(*s.grid(), Interval::new(0.0, 0.5).unwrap());
        let a = coefficients(&f, &s).unwrap();
        assert_eq!(a.values(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn grid_mismatch() {
        let s = haar(4, 4);
        let f = SampledFunction::zeros(DyadicGrid::new(3).unwrap());
        assert!(matches!(coefficients(&f, &s), Err(crate::LabError::Shape(_))));
    }

    #[test]
    fn projections() {
        let s = haar(6, 64);
        let f = SampledFunction::from_fn(*s.grid(), |x| (7.0 * x).sin() + x * x).unwrap();
        let a = coefficients(&f, &s).unwrap();
        assert!(project(&a, &s, &[]).unwrap().values().iter().all(|&v| v == 0.0));
        let all: Vec<usize> = (1..=64).collect();
        let back = project(&a, &s, &all).unwrap();
        for (x, y) in back.values().iter().zip(f.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        let g = [3, 9, 17, 40];
        let p = project(&a, &s, &g).unwrap();
        let pp = project_function(&p, &s, &g).unwrap();
        for (x, y) in p.values().iter().zip(pp.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(project(&a, &s, &[65]).is_err());
        assert!(project(&a, &s, &[0]).is_err());
    }

    #[test]
    fn dyadic_blocks_telescope() {
        let s = build_franklin(32, DyadicGrid::new(10).unwrap()).unwrap();
        let f = SampledFunction::from_fn(*s.grid(), |x| (x - 0.3).abs()).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let p0 = phi_partial(&a, &s, 0).unwrap();
        for (x, v) in p0.values().iter().zip(s.phi(1).values()) {
            assert_eq!(*x, a.get(1) * v);
        }
        let mut acc = p0.clone();
        for m in 1..=5 {
            let block = phi_block(&a, &s, m).unwrap();
            let diff = phi_partial(&a, &s, m)
                .unwrap()
                .sub(&phi_partial(&a, &s, m - 1).unwrap())
                .unwrap();
            for (x, y) in block.values().iter().zip(diff.values()) {
                assert!((x - y).abs() < 1e-12);
            }
            acc = acc.add_scaled(1.0, &block).unwrap();
        }
        let full = phi_partial(&a, &s, 5).unwrap();
        for (x, y) in acc.values().iter().zip(full.values()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(phi_partial(&a, &s, 6).is_err());
        assert!(phi_block(&a, &s, 6).is_err());
    }

    #[test]
    fn modulation_limits() {
        let s = haar(5, 16);
        let f = SampledFunction::from_fn(*s.grid(), |x| x.powi(3)).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let ones = modulate(&a, &[1.0; 16], &s).unwrap();
        let full = project(&a, &s, &(1..=16).collect::<Vec<_>>()).unwrap();
        assert_eq!(ones, full);
        let zero = modulate(&a, &[0.0; 16], &s).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
        let mut bad = vec![0.5; 16];
        bad[3] = 1.5;
        assert!(matches!(modulate(&a, &bad, &s), Err(crate::LabError::Domain(_))));
        assert!(modulate(&a, &[1.0; 15], &s).is_err());
    }

    #[test]
    fn chain_validation() {
        assert!(IndexChain::new(ChainKind::Monotone, vec![vec![1, 2], vec![2]]).is_err());
        assert!(IndexChain::new(ChainKind::SingletonIncrement, vec![vec![1, 2]]).is_err());
        assert!(IndexChain::new(ChainKind::Arbitrary, vec![]).is_err());
        assert!(IndexChain::new(ChainKind::Arbitrary, vec![vec![1, 1]]).is_err());
        let c = IndexChain::infer(vec![vec![4], vec![4, 2], vec![4, 2, 7]]).unwrap();
        assert_eq!(c.kind(), ChainKind::SingletonIncrement);
        let c = IndexChain::infer(vec![vec![4, 1], vec![4, 2, 1]]).unwrap();
        assert_eq!(c.kind(), ChainKind::Monotone);
        let c = IndexChain::infer(vec![vec![4], vec![2]]).unwrap();
        assert_eq!(c.kind(), ChainKind::Arbitrary);
        assert_eq!(c.max_index(), 4);
    }

    #[test]
    fn chain_maximal_of_two_haar_functions() {
        let s = haar(6, 8);
        let f = s.phi(2).add_scaled(1.0, s.phi(3)).unwrap();
        let a = coefficients(&f, &s).unwrap();
        let chain = IndexChain::from_order(&[2, 3]).unwrap();
        let m = chain_maximal(&a, &s, &chain).unwrap();
        let r2 = 2f64.sqrt();
        assert!((m.eval(0.1) - (1.0 + r2)).abs() < 1e-14);
        assert!((m.eval(0.3) - 1.0).abs() < 1e-14);
        assert!((m.eval(0.8) - 1.0).abs() < 1e-14);
        let single = IndexChain::from_order(&[2]).unwrap();
        assert_eq!(chain_maximal(&a, &s, &single).unwrap(), s.phi(2).abs());
        let arb = IndexChain::new(ChainKind::Arbitrary, vec![vec![2], vec![3, 2]]).unwrap();
        let ma = chain_maximal(&a, &s, &arb).unwrap();
        for (x, y) in m.values().iter().zip(ma.values()) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
