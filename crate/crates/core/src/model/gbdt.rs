//! Binary logistic gradient boosting with exact greedy splits.
//!
//! Trees grow level by level. For every level and sampled feature a single
//! sweep over the feature's presorted nonzero entries updates per-node
//! left-hand sums; the zero entries of a node are folded in as one block,
//! so bag-of-features histograms (mostly zeros) cost time proportional to
//! their nonzeros.

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct BoostingParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub positive_class_weight: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub seed: u64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            n_estimators: 50,
            learning_rate: 0.05,
            max_depth: 10,
            subsample: 0.9,
            colsample_bytree: 0.9,
            positive_class_weight: 5.0,
            lambda: 1.0,
            min_child_weight: 1.0,
            seed: 0,
        }
    }
}

impl BoostingParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !frac(self.subsample) || !frac(self.colsample_bytree) {
            return Err(Error::Config("subsample and colsample_bytree must lie in (0, 1]".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.positive_class_weight > 0.0) {
            return Err(Error::Config("learning rate and positive class weight must be positive".into()));
        }
        if self.lambda < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::Config("lambda and min_child_weight must be non-negative".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Config("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values do not fill a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("feature matrix contains non-finite values".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!("ragged rows: {} vs {cols}", r.len())));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Nonzero entries of every column, sorted by value then row.
pub struct ColumnIndex {
    columns: Vec<Vec<(u32, f64)>>,
}

impl ColumnIndex {
    pub fn new(x: &Matrix) -> Self {
        let mut columns = vec![Vec::new(); x.cols];
        for i in 0..x.rows {
            for (f, &v) in x.row(i).iter().enumerate() {
                if v != 0.0 {
                    columns[f].push((i as u32, v));
                }
            }
        }
        for c in &mut columns {
            c.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        }
        ColumnIndex { columns }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf(f64),
    /// Rows with `x[feature] < threshold` go to `left`.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut k = 0usize;
        loop {
            match self.nodes[k] {
                Node::Leaf(w) => return w,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    k = if x[feature as usize] < threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, k: usize) -> usize {
            match t.nodes[k] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(t, left as usize).max(go(t, right as usize)),
            }
        }
        go(self, 0)
    }
}

/// One binary boosted ensemble: `logistic(base_score + learning_rate·Σ trees)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    pub seed: u64,
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Ensemble {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_score + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        logistic(self.margin(x))
    }
}

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: u32,
    threshold: f64,
}

#[derive(Clone, Copy, Default)]
struct Sums {
    g: f64,
    h: f64,
    n: u32,
}

impl Sums {
    fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.n += 1;
    }
}

struct Grower<'a> {
    x: &'a Matrix,
    cols: &'a ColumnIndex,
    params: &'a BoostingParams,
}

impl Grower<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn leaf(&self, s: Sums) -> f64 {
        -s.g / (s.h + self.params.lambda)
    }

    fn split_threshold(lo: f64, hi: f64) -> f64 {
        let mid = lo + (hi - lo) / 2.0;
        if mid > lo {
            mid
        } else {
            hi
        }
    }

    /// Grows one tree on the rows with `row_slot[i] == 0`.
    fn grow(&self, grad: &[f64], hess: &[f64], mut row_slot: Vec<u32>, features: &[usize]) -> Tree {
        let mcw = self.params.min_child_weight;
        let mut nodes = vec![Node::Leaf(0.0)];
        // node id of each slot on the current level
        let mut frontier: Vec<u32> = vec![0];
        let mut depth = 0;
        while !frontier.is_empty() {
            let slots = frontier.len();
            let mut totals = vec![Sums::default(); slots];
            for (i, &s) in row_slot.iter().enumerate() {
                if s != NO_SLOT {
                    totals[s as usize].add(grad[i], hess[i]);
                }
            }
            if depth == self.params.max_depth {
                for (s, &node) in frontier.iter().enumerate() {
                    nodes[node as usize] = Node::Leaf(self.leaf(totals[s]));
                }
                break;
            }
            let parent_score: Vec<f64> = totals.iter().map(|t| self.score(t.g, t.h)).collect();
            let mut best: Vec<Option<Best>> = vec![None; slots];

            let mut nz = vec![Sums::default(); slots];
            let mut left = vec![Sums::default(); slots];
            let mut last = vec![f64::NAN; slots];
            let mut touched: Vec<u32> = Vec::new();
            for &f in features {
                let col = &self.cols.columns[f];
                touched.clear();
                for &(r, _) in col {
                    let s = row_slot[r as usize];
                    if s == NO_SLOT {
                        continue;
                    }
                    let su = s as usize;
                    if nz[su].n == 0 {
                        touched.push(s);
                    }
                    nz[su].add(grad[r as usize], hess[r as usize]);
                }
                if touched.is_empty() {
                    continue;
                }
                let consider = |s: usize, left: &Sums, lo: f64, hi: f64, best: &mut [Option<Best>]| {
                    let t = totals[s];
                    let (hl, hr) = (left.h, t.h - left.h);
                    if left.n == 0 || left.n == t.n || hl < mcw || hr < mcw {
                        return;
                    }
                    let gain = self.score(left.g, hl) + self.score(t.g - left.g, hr) - parent_score[s];
                    if gain > 1e-12 && best[s].is_none_or(|b| gain > b.gain) {
                        best[s] = Some(Best {
                            gain,
                            feature: f as u32,
                            threshold: Self::split_threshold(lo, hi),
                        });
                    }
                };
                let mut zeros_done = false;
                for &(r, v) in col {
                    let s = row_slot[r as usize];
                    if s == NO_SLOT {
                        continue;
                    }
                    if v > 0.0 && !zeros_done {
                        zeros_done = true;
                        for &ts in &touched {
                            let ts = ts as usize;
                            let zero_n = totals[ts].n - nz[ts].n;
                            if zero_n == 0 {
                                continue;
                            }
                            if !last[ts].is_nan() {
                                consider(ts, &left[ts], last[ts], 0.0, &mut best);
                            }
                            left[ts].g += totals[ts].g - nz[ts].g;
                            left[ts].h += totals[ts].h - nz[ts].h;
                            left[ts].n += zero_n;
                            last[ts] = 0.0;
                        }
                    }
                    let su = s as usize;
                    if !last[su].is_nan() && v > last[su] {
                        consider(su, &left[su], last[su], v, &mut best);
                    }
                    left[su].add(grad[r as usize], hess[r as usize]);
                    last[su] = v;
                }
                for &ts in &touched {
                    let ts = ts as usize;
                    // all-negative columns still have a zero block to the right
                    if !zeros_done && totals[ts].n > nz[ts].n && !last[ts].is_nan() {
                        consider(ts, &left[ts], last[ts], 0.0, &mut best);
                    }
                    nz[ts] = Sums::default();
                    left[ts] = Sums::default();
                    last[ts] = f64::NAN;
                }
            }

            let mut next: Vec<u32> = Vec::new();
            let mut remap = vec![NO_SLOT; 2 * slots];
            for (s, &node) in frontier.iter().enumerate() {
                match best[s] {
                    None => nodes[node as usize] = Node::Leaf(self.leaf(totals[s])),
                    Some(b) => {
                        let l = nodes.len() as u32;
                        nodes.push(Node::Leaf(0.0));
                        nodes.push(Node::Leaf(0.0));
                        nodes[node as usize] = Node::Split {
                            feature: b.feature,
                            threshold: b.threshold,
                            left: l,
                            right: l + 1,
                        };
                        remap[2 * s] = next.len() as u32;
                        next.push(l);
                        remap[2 * s + 1] = next.len() as u32;
                        next.push(l + 1);
                    }
                }
            }
            for (i, s) in row_slot.iter_mut().enumerate() {
                if *s == NO_SLOT {
                    continue;
                }
                let su = *s as usize;
                *s = match best[su] {
                    None => NO_SLOT,
                    Some(b) => {
                        let goes_left = self.x.row(i)[b.feature as usize] < b.threshold;
                        remap[2 * su + usize::from(!goes_left)]
                    }
                };
            }
            frontier = next;
            depth += 1;
        }
        Tree { nodes }
    }
}

/// Fits one binary ensemble with the given seed.
pub fn fit_binary(x: &Matrix, cols: &ColumnIndex, y: &[bool], params: &BoostingParams, seed: u64) -> Result<Ensemble> {
    params.validate()?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::Shape(format!("{n} rows but {} labels", y.len())));
    }
    let w: Vec<f64> = y
        .iter()
        .map(|&p| if p { params.positive_class_weight } else { 1.0 })
        .collect();
    let wsum: f64 = w.iter().sum();
    let wpos: f64 = w.iter().zip(y).filter(|(_, &p)| p).map(|(w, _)| w).sum();
    if wpos <= 0.0 || wpos >= wsum {
        return Err(Error::Training("binary target needs both classes".into()));
    }
    let rate = wpos / wsum;
    let base_score = (rate / (1.0 - rate)).ln();

    let mut r = rng::rng(seed);
    let grower = Grower { x, cols, params };
    let mut margin = vec![base_score; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut trees = Vec::with_capacity(params.n_estimators);
    let n_rows = ((params.subsample * n as f64).round() as usize).clamp(1, n.max(1));
    let n_cols = ((params.colsample_bytree * x.cols() as f64).round() as usize).clamp(1, x.cols().max(1));
    for _ in 0..params.n_estimators {
        for i in 0..n {
            let p = logistic(margin[i]);
            let t = if y[i] { 1.0 } else { 0.0 };
            grad[i] = w[i] * (p - t);
            hess[i] = w[i] * p * (1.0 - p);
        }
        let mut row_slot = vec![NO_SLOT; n];
        if n_rows == n {
            row_slot.iter_mut().for_each(|s| *s = 0);
        } else {
            for i in index::sample(&mut r, n, n_rows) {
                row_slot[i] = 0;
            }
        }
        let mut features: Vec<usize> = if n_cols == x.cols() {
            (0..x.cols()).collect()
        } else {
            index::sample(&mut r, x.cols(), n_cols).into_vec()
        };
        features.sort_unstable();
        let tree = grower.grow(&grad, &hess, row_slot, &features);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += params.learning_rate * tree.predict(x.row(i));
        }
        trees.push(tree);
    }
    Ok(Ensemble {
        base_score,
        learning_rate: params.learning_rate,
        trees,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn params() -> BoostingParams {
        BoostingParams {
            seed: 3,
            ..BoostingParams::default()
        }
    }

    fn toy(n: usize) -> (Matrix, Vec<bool>) {
        let mut r = rng::rng(1);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let pos = i % 4 == 0;
            rows.push(vec![
                if pos { 100.0 } else { 0.0 },
                r.random_range(-1.0..1.0),
                r.random_range(0..3) as f64,
            ]);
            y.push(pos);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn separable_toy() {
        let (x, y) = toy(80);
        let cols = ColumnIndex::new(&x);
        let p = BoostingParams {
            colsample_bytree: 1.0,
            ..params()
        };
        let e = fit_binary(&x, &cols, &y, &p, 9).unwrap();
        for i in 0..x.rows() {
            let prob = e.predict(x.row(i));
            if y[i] {
                assert!(prob > 0.9, "{prob}");
            } else {
                assert!(prob < 0.1, "{prob}");
            }
        }
    }

    #[test]
    fn zero_trees_predict_prior() {
        let (x, y) = toy(40);
        let cols = ColumnIndex::new(&x);
        let p = BoostingParams {
            n_estimators: 0,
            ..params()
        };
        let e = fit_binary(&x, &cols, &y, &p, 1).unwrap();
        // 10 positives × 5 against 30 negatives
        let expect = 50.0 / 80.0;
        for i in 0..x.rows() {
            assert!((e.predict(x.row(i)) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (x, y) = toy(60);
        let cols = ColumnIndex::new(&x);
        let a = fit_binary(&x, &cols, &y, &params(), 5).unwrap();
        let b = fit_binary(&x, &cols, &y, &params(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicated_rows_keep_structure() {
        let (x, y) = toy(40);
        let mut rows: Vec<Vec<f64>> = (0..x.rows()).map(|i| x.row(i).to_vec()).collect();
        rows.extend(rows.clone());
        let mut y2 = y.clone();
        y2.extend(y.iter().copied());
        let x2 = Matrix::from_rows(&rows).unwrap();
        // without regularization all gains double and leaf weights are unchanged
        let p = BoostingParams {
            subsample: 1.0,
            colsample_bytree: 1.0,
            lambda: 0.0,
            min_child_weight: 0.0,
            n_estimators: 5,
            max_depth: 3,
            ..params()
        };
        let a = fit_binary(&x, &ColumnIndex::new(&x), &y, &p, 2).unwrap();
        let b = fit_binary(&x2, &ColumnIndex::new(&x2), &y2, &p, 2).unwrap();
        assert_eq!(a.trees.len(), b.trees.len());
        for (ta, tb) in a.trees.iter().zip(&b.trees) {
            assert_eq!(ta.nodes.len(), tb.nodes.len());
            for (na, nb) in ta.nodes.iter().zip(&tb.nodes) {
                match (na, nb) {
                    (Node::Split { feature: fa, threshold: ha, .. }, Node::Split { feature: fb, threshold: hb, .. }) => {
                        assert_eq!((fa, ha), (fb, hb))
                    }
                    (Node::Leaf(wa), Node::Leaf(wb)) => assert!((wa - wb).abs() < 1e-9),
                    _ => panic!("structure differs"),
                }
            }
        }
    }

    /// Brute-force best first split: all features, all midpoints.
    fn brute_root(x: &Matrix, g: &[f64], h: &[f64], lambda: f64) -> (usize, f64, f64) {
        let score = |g: f64, h: f64| g * g / (h + lambda);
        let (gt, ht): (f64, f64) = (g.iter().sum(), h.iter().sum());
        let mut best = (usize::MAX, f64::NAN, 1e-12);
        for f in 0..x.cols() {
            let mut vals: Vec<f64> = (0..x.rows()).map(|i| x.row(i)[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let thr = Grower::split_threshold(w[0], w[1]);
                let (mut gl, mut hl) = (0.0, 0.0);
                for i in 0..x.rows() {
                    if x.row(i)[f] < thr {
                        gl += g[i];
                        hl += h[i];
                    }
                }
                let gain = score(gl, hl) + score(gt - gl, ht - hl) - score(gt, ht);
                if gain > best.2 + 1e-9 {
                    best = (f, thr, gain);
                }
            }
        }
        best
    }

    #[test]
    fn root_split_matches_brute_force() {
        let mut r = rng::rng(17);
        for _ in 0..40 {
            let n = r.random_range(5..40);
            let d = r.random_range(1..5);
            let data: Vec<f64> = (0..n * d)
                .map(|_| if r.random_bool(0.5) { 0.0 } else { r.random_range(-3..4) as f64 })
                .collect();
            let x = Matrix::new(n, d, data).unwrap();
            let g: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| r.random_range(0.1..1.0)).collect();
            let p = BoostingParams {
                max_depth: 1,
                min_child_weight: 0.0,
                ..params()
            };
            let cols = ColumnIndex::new(&x);
            let grower = Grower { x: &x, cols: &cols, params: &p };
            let tree = grower.grow(&g, &h, vec![0; n], &(0..d).collect::<Vec<_>>());
            let (bf, bt, _) = brute_root(&x, &g, &h, p.lambda);
            match tree.nodes[0] {
                Node::Split { feature, threshold, .. } => {
                    assert_eq!(feature as usize, bf);
                    assert_eq!(threshold, bt);
                }
                Node::Leaf(_) => assert_eq!(bf, usize::MAX),
            }
        }
    }

    #[test]
    fn depth_limit_respected() {
        let (x, y) = toy(100);
        let p = BoostingParams {
            max_depth: 2,
            ..params()
        };
        let e = fit_binary(&x, &ColumnIndex::new(&x), &y, &p, 4).unwrap();
        assert!(e.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn learning_rate_moves_first_round_monotonically() {
        let (x, y) = toy(40);
        let cols = ColumnIndex::new(&x);
        let mut prev = None;
        for lr in [0.01, 0.05, 0.1, 0.5] {
            let p = BoostingParams {
                n_estimators: 1,
                learning_rate: lr,
                ..params()
            };
            let e = fit_binary(&x, &cols, &y, &p, 8).unwrap();
            let prob = e.predict(x.row(0)); // a positive row
            if let Some(q) = prev {
                assert!(prob > q);
            }
            prev = Some(prob);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (x, _) = toy(10);
        let cols = ColumnIndex::new(&x);
        assert!(matches!(
            fit_binary(&x, &cols, &[false; 10], &params(), 0),
            Err(Error::Training(_))
        ));
    }
}
