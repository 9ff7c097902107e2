//! Local search for large `‖max_k |g_k|‖_p` over orderings, chain cuts and
//! `{-1,0,1}` multipliers. Objectives here are sums of `R(x)^p` over cells,
//! without the cell width; callers re-evaluate the final witness exactly.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{resource, Result};
use crate::systems::OrthonormalSystem;

/// `a_k φ_k` restricted to the support of `φ_k`.
pub(crate) struct Term {
    pub start: usize,
    pub values: Vec<f64>,
}

impl Term {
    pub fn new(s: &OrthonormalSystem, index: usize, coefficient: f64) -> Self {
        let r = s.support(index);
        Term {
            start: r.start,
            values: s.phi(index).values()[r].iter().map(|v| coefficient * v).collect(),
        }
    }

    fn cells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(move |(i, v)| (self.start + i, *v))
    }

    fn value_at(&self, cell: usize) -> f64 {
        self.values[cell - self.start]
    }

    /// `Σ |a_k φ_k|^p` over cells.
    pub fn mass(&self, p: f64) -> f64 {
        self.values.iter().map(|v| v.abs().powf(p)).sum()
    }
}

#[inline]
fn pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

const ABSENT: usize = usize::MAX;

/// Singleton-increment chains: the prefixes of an ordering of every term.
pub(crate) struct OrderSearch<'a> {
    terms: &'a [Term],
    p: f64,
    order: Vec<usize>,
    pos: Vec<usize>,
    /// Per cell, the terms nonzero there, in chain order.
    lists: Vec<Vec<u32>>,
    /// Per cell, `max_k |S_k(x)|` over the prefixes present.
    peak: Vec<f64>,
    total: f64,
}

impl<'a> OrderSearch<'a> {
    pub fn new(terms: &'a [Term], p: f64, cells: usize) -> Self {
        OrderSearch {
            terms,
            p,
            order: Vec::with_capacity(terms.len()),
            pos: vec![ABSENT; terms.len()],
            lists: vec![Vec::new(); cells],
            peak: vec![0.0; cells],
            total: 0.0,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    fn reindex(&mut self) {
        for (i, &e) in self.order.iter().enumerate() {
            self.pos[e] = i;
        }
    }

    fn refresh(&mut self, cell: usize) {
        let mut s = 0.0;
        let mut best = 0.0f64;
        for &e in &self.lists[cell] {
            s += self.terms[e as usize].value_at(cell);
            best = best.max(s.abs());
        }
        self.total += pow(best, self.p) - pow(self.peak[cell], self.p);
        self.peak[cell] = best;
    }

    fn recount(&mut self) {
        self.total = self.peak.iter().map(|r| pow(*r, self.p)).sum();
    }

    pub fn insert(&mut self, e: usize, at: usize) {
        self.order.insert(at, e);
        self.reindex();
        let pos = &self.pos;
        for (c, _) in self.terms[e].cells() {
            let list = &mut self.lists[c];
            let r = list.partition_point(|&o| pos[o as usize] < at);
            list.insert(r, e as u32);
        }
        let cells: Vec<usize> = self.terms[e].cells().map(|(c, _)| c).collect();
        for c in cells {
            self.refresh(c);
        }
    }

    pub fn remove(&mut self, e: usize) -> usize {
        let at = self.pos[e];
        self.order.remove(at);
        self.pos[e] = ABSENT;
        self.reindex();
        let cells: Vec<usize> = self.terms[e].cells().map(|(c, _)| c).collect();
        for &c in &cells {
            self.lists[c].retain(|&o| o as usize != e);
        }
        for c in cells {
            self.refresh(c);
        }
        at
    }

    /// Gain in the objective for inserting the absent term `e` at each
    /// position `0..=len`.
    pub fn insertion_gains(&self, e: usize) -> Vec<f64> {
        let mut diff = vec![0.0; self.order.len() + 2];
        let mut prefix = Vec::new();
        let mut premax = Vec::new();
        let mut sufmax = Vec::new();
        let mut sufmin = Vec::new();
        for (c, v) in self.terms[e].cells() {
            let list = &self.lists[c];
            let m = list.len();
            prefix.clear();
            prefix.push(0.0);
            let mut s = 0.0;
            for &o in list {
                s += self.terms[o as usize].value_at(c);
                prefix.push(s);
            }
            premax.clear();
            let mut run = 0.0f64;
            for q in &prefix {
                run = run.max(q.abs());
                premax.push(run);
            }
            sufmax.clear();
            sufmin.clear();
            sufmax.resize(m + 1, 0.0);
            sufmin.resize(m + 1, 0.0);
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for i in (0..=m).rev() {
                hi = hi.max(prefix[i]);
                lo = lo.min(prefix[i]);
                sufmax[i] = hi;
                sufmin[i] = lo;
            }
            let base = pow(premax[m], self.p);
            let mut prev_gain = 0.0;
            for r in 0..=m {
                let peak = premax[r].max((sufmax[r] + v).abs()).max((sufmin[r] + v).abs());
                let gain = pow(peak, self.p) - base;
                let at = if r == 0 {
                    0
                } else {
                    self.pos[list[r - 1] as usize] + 1
                };
                diff[at] += gain - prev_gain;
                prev_gain = gain;
            }
        }
        let mut acc = 0.0;
        diff.truncate(self.order.len() + 1);
        for d in diff.iter_mut() {
            acc += *d;
            *d = acc;
        }
        diff
    }

    fn tolerance(&self) -> f64 {
        1e-12 * self.total.max(f64::MIN_POSITIVE)
    }

    /// Inserts every term in `sequence` at its best position.
    pub fn greedy(&mut self, sequence: &[usize]) {
        for &e in sequence {
            let gains = self.insertion_gains(e);
            let mut best = 0;
            for (t, g) in gains.iter().enumerate() {
                if *g > gains[best] + self.tolerance() {
                    best = t;
                }
            }
            self.insert(e, best);
        }
        self.recount();
    }

    /// Remove-and-reinsert sweeps until no term moves. Returns sweeps run.
    pub fn reinsert_sweeps(&mut self, max_sweeps: usize, rng: &mut impl Rng) -> usize {
        let mut ids: Vec<usize> = (0..self.terms.len()).collect();
        for sweep in 0..max_sweeps {
            ids.shuffle(rng);
            let mut moved = false;
            for &e in &ids {
                let old = self.remove(e);
                let gains = self.insertion_gains(e);
                let mut best = old;
                for (t, g) in gains.iter().enumerate() {
                    if *g > gains[best] + self.tolerance() {
                        best = t;
                    }
                }
                moved |= best != old;
                self.insert(e, best);
            }
            self.recount();
            if !moved {
                return sweep + 1;
            }
        }
        max_sweeps
    }

    /// Random transpositions, kept when they raise the objective.
    pub fn swaps(&mut self, attempts: usize, rng: &mut impl Rng) -> bool {
        let n = self.order.len();
        if n < 2 {
            return false;
        }
        let mut improved = false;
        for _ in 0..attempts {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (i, j) = (i.min(j), i.max(j));
            let before = self.total;
            let (a, b) = (self.order[i], self.order[j]);
            self.remove(b);
            self.remove(a);
            self.insert(b, i);
            self.insert(a, j);
            if self.total > before + self.tolerance() {
                improved = true;
            } else {
                self.remove(a);
                self.remove(b);
                self.insert(a, i);
                self.insert(b, j);
            }
        }
        self.recount();
        improved
    }
}

/// Coordinate ascent over `λ ∈ {-1,0,1}^{n × terms}` for `g_k = Σ_e λ_{k,e} t_e`.
pub(crate) struct MultiplierSearch<'a> {
    terms: &'a [Term],
    p: f64,
    lambda: Vec<Vec<i8>>,
    g: Vec<Vec<f64>>,
    top: Vec<f64>,
    top_k: Vec<usize>,
    second: Vec<f64>,
    total: f64,
}

/// Largest `n × cells` table of partial functions the multiplier search keeps.
pub const MULTIPLIER_TABLE_LIMIT: usize = 1 << 25;

impl<'a> MultiplierSearch<'a> {
    pub fn new(terms: &'a [Term], p: f64, cells: usize, lambda: Vec<Vec<i8>>) -> Result<Self> {
        let n = lambda.len();
        if n.saturating_mul(cells) > MULTIPLIER_TABLE_LIMIT {
            return resource(format!(
                "{n} partial functions on {cells} cells exceed the multiplier search table"
            ));
        }
        let mut g = vec![vec![0.0; cells]; n];
        for (row, gk) in lambda.iter().zip(g.iter_mut()) {
            for (e, &l) in row.iter().enumerate() {
                if l != 0 {
                    for (c, v) in terms[e].cells() {
                        gk[c] += l as f64 * v;
                    }
                }
            }
        }
        let mut me = MultiplierSearch {
            terms,
            p,
            lambda,
            g,
            top: vec![0.0; cells],
            top_k: vec![0; cells],
            second: vec![0.0; cells],
            total: 0.0,
        };
        for c in 0..cells {
            me.rescan(c);
        }
        me.total = me.top.iter().map(|r| pow(*r, p)).sum();
        Ok(me)
    }

    fn rescan(&mut self, c: usize) {
        let (mut t, mut tk, mut s) = (0.0f64, 0, 0.0f64);
        for (k, gk) in self.g.iter().enumerate() {
            let v = gk[c].abs();
            if v > t {
                s = t;
                t = v;
                tk = k;
            } else if v > s {
                s = v;
            }
        }
        self.top[c] = t;
        self.top_k[c] = tk;
        self.second[c] = s;
    }

    pub fn into_lambda(self) -> Vec<Vec<i8>> {
        self.lambda
    }

    /// Sweeps over `(k, term)` pairs trying the two other multiplier values.
    /// Stops after `budget` trials or a sweep without improvement.
    pub fn ascend(&mut self, budget: usize) {
        let mut trials = 0;
        loop {
            let mut improved = false;
            for k in 0..self.lambda.len() {
                for e in 0..self.terms.len() {
                    let cur = self.lambda[k][e];
                    for alt in [-1i8, 0, 1] {
                        if alt == cur || self.lambda[k][e] != cur {
                            continue;
                        }
                        if trials >= budget {
                            return;
                        }
                        trials += 1;
                        let d = (alt - cur) as f64;
                        let mut gain = 0.0;
                        for (c, v) in self.terms[e].cells() {
                            let rest = if self.top_k[c] == k {
                                self.second[c]
                            } else {
                                self.top[c]
                            };
                            let new = rest.max((self.g[k][c] + d * v).abs());
                            gain += pow(new, self.p) - pow(self.top[c], self.p);
                        }
                        if gain > 1e-12 * self.total.max(f64::MIN_POSITIVE) {
                            self.lambda[k][e] = alt;
                            let cells: Vec<(usize, f64)> = self.terms[e].cells().collect();
                            for &(c, v) in &cells {
                                self.g[k][c] += d * v;
                            }
                            for (c, _) in cells {
                                self.rescan(c);
                            }
                            self.total = self.top.iter().map(|r| pow(*r, self.p)).sum();
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;
    use crate::random::stream_rng;
    use crate::systems::build_haar;

    fn brute(terms: &[Term], order: &[usize], p: f64, cells: usize) -> f64 {
        let mut s = vec![0.0; cells];
        let mut r = vec![0.0f64; cells];
        for &e in order {
            for (c, v) in terms[e].cells() {
                s[c] += v;
            }
            for c in 0..cells {
                r[c] = r[c].max(s[c].abs());
            }
        }
        r.iter().map(|x| x.powf(p)).sum()
    }

    fn haar_terms(coeffs: &[(usize, f64)]) -> (Vec<Term>, usize) {
        let s = build_haar(16, DyadicGrid::new(4).unwrap()).unwrap();
        (coeffs.iter().map(|&(k, a)| Term::new(&s, k, a)).collect(), 16)
    }

    #[test]
    fn insertion_gains_match_direct_evaluation() {
        let (terms, cells) = haar_terms(&[(2, 1.0), (3, -0.7), (5, 0.4), (6, 1.3), (9, -0.2)]);
        for p in [1.5, 2.0, 3.0] {
            let mut st = OrderSearch::new(&terms, p, cells);
            st.insert(0, 0);
            st.insert(2, 1);
            st.insert(4, 1);
            st.insert(1, 0);
            let base = brute(&terms, st.order(), p, cells);
            assert!((st.total - base).abs() < 1e-12);
            let gains = st.insertion_gains(3);
            for (t, g) in gains.iter().enumerate() {
                let mut o = st.order().to_vec();
                o.insert(t, 3);
                let direct = brute(&terms, &o, p, cells) - base;
                assert!((g - direct).abs() < 1e-12, "p={p} t={t}: {g} vs {direct}");
            }
        }
    }

    #[test]
    fn removal_restores_state() {
        let (terms, cells) = haar_terms(&[(2, 1.0), (4, -0.7), (8, 0.4)]);
        let mut st = OrderSearch::new(&terms, 2.0, cells);
        st.greedy(&[0, 1, 2]);
        let t = st.total;
        let order = st.order().to_vec();
        let at = st.remove(1);
        st.insert(1, at);
        assert_eq!(st.order(), order.as_slice());
        assert!((st.total - t).abs() < 1e-12);
    }

    #[test]
    fn local_search_never_decreases() {
        let coeffs: Vec<(usize, f64)> = (2..=16)
            .map(|k| (k, if k % 3 == 0 { -1.0 } else { 1.0 } / (k as f64).sqrt()))
            .collect();
        let (terms, cells) = haar_terms(&coeffs);
        let mut st = OrderSearch::new(&terms, 2.0, cells);
        let seq: Vec<usize> = (0..terms.len()).collect();
        st.greedy(&seq);
        let g = brute(&terms, st.order(), 2.0, cells);
        let mut rng = stream_rng(1, 0);
        st.reinsert_sweeps(10, &mut rng);
        let r = brute(&terms, st.order(), 2.0, cells);
        st.swaps(50, &mut rng);
        let w = brute(&terms, st.order(), 2.0, cells);
        assert!(r >= g - 1e-12 && w >= r - 1e-12);
        assert!((st.total - w).abs() < 1e-10);
    }

    #[test]
    fn multiplier_ascent_improves_on_its_seed() {
        let (terms, cells) = haar_terms(&[(2, 1.0), (3, 1.0), (4, -1.0)]);
        let seed = vec![vec![1, 0, 0], vec![1, 1, 0], vec![1, 1, 1]];
        let mut ms = MultiplierSearch::new(&terms, 2.0, cells, seed).unwrap();
        let before = ms.total;
        ms.ascend(1000);
        assert!(ms.total >= before);
        let lam = ms.into_lambda();
        assert!(lam.iter().all(|row| row.iter().all(|l| (-1..=1).contains(l))));
    }
}
