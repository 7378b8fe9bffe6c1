//! CART regression trees and a bagged forest of them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_design, RegressError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(d / 3)`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<(), RegressError> {
        if self.n_trees == 0 {
            return Err(RegressError::InvalidParam("n_trees must be > 0".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(RegressError::InvalidParam(
                "min_samples_leaf must be > 0".into(),
            ));
        }
        if self.features_per_split == Some(0) {
            return Err(RegressError::InvalidParam(
                "features_per_split must be > 0".into(),
            ));
        }
        Ok(())
    }

    fn candidates(&self, d: usize) -> usize {
        self.features_per_split.unwrap_or(d.div_ceil(3)).clamp(1, d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in creation order; the root is node 0. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a ForestParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    /// Total weighted squared-error decrease per feature.
    gains: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Samples going left when sorted by the feature.
    left: Vec<usize>,
    right: Vec<usize>,
    gain: f64,
}

fn sum_sq(y: &[f64], idx: &[usize]) -> (f64, f64) {
    idx.iter()
        .fold((0.0, 0.0), |(s, q), &i| (s + y[i], q + y[i] * y[i]))
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let first = self.y[idx[0]];
        let value = if idx.iter().all(|&i| self.y[i] == first) {
            first
        } else {
            idx.iter().map(|&i| self.y[i]).sum::<f64>() / idx.len() as f64
        };
        self.nodes.push(Node::Leaf { value });
        self.nodes.len() - 1
    }

    fn best_split_on(&self, feature: usize, idx: &[usize], parent_sse: f64) -> Option<BestSplit> {
        let min_leaf = self.params.min_samples_leaf;
        let mut sorted = idx.to_vec();
        sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n = sorted.len();
        let (total, total_sq) = sum_sq(self.y, &sorted);
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        let mut best: Option<(usize, f64)> = None;
        for k in 0..n - 1 {
            let yi = self.y[sorted[k]];
            left_sum += yi;
            left_sq += yi * yi;
            let nl = k + 1;
            let nr = n - nl;
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let (a, b) = (self.x[sorted[k]][feature], self.x[sorted[k + 1]][feature]);
            if a == b {
                continue;
            }
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse = (left_sq - left_sum * left_sum / nl as f64).max(0.0)
                + (right_sq - right_sum * right_sum / nr as f64).max(0.0);
            if best.is_none_or(|(_, s)| sse < s) {
                best = Some((k, sse));
            }
        }
        let (k, sse) = best?;
        let (a, b) = (self.x[sorted[k]][feature], self.x[sorted[k + 1]][feature]);
        let mut threshold = a + (b - a) / 2.0;
        if threshold >= b {
            threshold = a;
        }
        let right = sorted.split_off(k + 1);
        Some(BestSplit {
            feature,
            threshold,
            left: sorted,
            right,
            gain: (parent_sse - sse).max(0.0),
        })
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let n = idx.len();
        let (s, q) = sum_sq(self.y, &idx);
        let parent_sse = (q - s * s / n as f64).max(0.0);
        let constant = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
        if constant
            || n < 2 * self.params.min_samples_leaf
            || self.params.max_depth.is_some_and(|m| depth >= m)
        {
            return self.leaf(&idx);
        }
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        let m = self.params.candidates(d);
        let mut best: Option<BestSplit> = None;
        // keep drawing past m features until some feature admits a split
        for (drawn, &f) in order.iter().enumerate() {
            if drawn >= m && best.is_some() {
                break;
            }
            if let Some(cand) = self.best_split_on(f, &idx, parent_sse) {
                if best.as_ref().is_none_or(|b| cand.gain > b.gain) {
                    best = Some(cand);
                }
            }
        }
        let Some(split) = best else {
            return self.leaf(&idx);
        };
        self.gains[split.feature] += split.gain;
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0 });
        let left = self.grow(split.left, depth + 1);
        let right = self.grow(split.right, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        slot
    }
}

fn build_tree(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
    tree: usize,
) -> (RegressionTree, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(tree as u64);
    let n = y.len();
    let sample: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut b = Builder {
        x,
        y,
        params,
        rng,
        nodes: Vec::new(),
        gains: vec![0.0; x[0].len()],
    };
    b.grow(sample, 0);
    (RegressionTree { nodes: b.nodes }, b.gains)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<RegressionTree>,
    pub params: ForestParams,
    pub n_features: usize,
    /// Mean of per-tree normalized variance decreases, renormalized; all zero
    /// when no tree ever split.
    pub importances: Vec<f64>,
}

impl ForestModel {
    /// Mean of the tree predictions, shifted by the first tree's output so that
    /// identical trees reproduce their value exactly.
    pub fn predict_raw(&self, x: &[f64]) -> Result<f64, RegressError> {
        if x.len() != self.n_features {
            return Err(RegressError::Dimension {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let first = self.trees[0].predict(x);
        let shift: f64 = self.trees[1..].iter().map(|t| t.predict(x) - first).sum();
        Ok(first + shift / self.trees.len() as f64)
    }
}

pub fn train_forest(
    x: &[Vec<f64>],
    y: &[f64],
    params: &ForestParams,
) -> Result<ForestModel, RegressError> {
    check_design(x, y)?;
    params.validate()?;
    let d = x[0].len();
    let built: Vec<(RegressionTree, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| build_tree(x, y, params, t))
        .collect();
    let mut importances = vec![0.0; d];
    for (_, gains) in &built {
        let total: f64 = gains.iter().sum();
        if total > 0.0 {
            for (imp, g) in importances.iter_mut().zip(gains) {
                *imp += g / total;
            }
        }
    }
    let total: f64 = importances.iter().sum();
    if total > 0.0 {
        importances.iter_mut().for_each(|v| *v /= total);
    }
    Ok(ForestModel {
        trees: built.into_iter().map(|(t, _)| t).collect(),
        params: *params,
        n_features: d,
        importances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_x(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>()).collect())
            .collect()
    }

    #[test]
    fn constant_target_gives_constant_leaves() {
        let x = random_x(50, 3, 1);
        let y = vec![0.42; 50];
        let f = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 5,
                ..Default::default()
            },
        )
        .unwrap();
        for t in &f.trees {
            assert_eq!(t.nodes, vec![Node::Leaf { value: 0.42 }]);
        }
        assert_eq!(f.predict_raw(&[0.1, 0.2, 0.3]).unwrap(), 0.42);
        assert!(f.importances.iter().all(|&v| v == 0.0));
    }

    // exhaustive oracle: try every threshold between consecutive distinct values
    fn oracle_stump(x: &[Vec<f64>], y: &[f64]) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NAN, f64::INFINITY);
        for f in 0..x[0].len() {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let side = |left: bool| -> Vec<f64> {
                    x.iter()
                        .zip(y)
                        .filter(|(r, _)| (r[f] <= t) == left)
                        .map(|(_, &v)| v)
                        .collect()
                };
                let sse = |v: Vec<f64>| {
                    let m = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|a| (a - m).powi(2)).sum::<f64>()
                };
                let (l, r) = (side(true), side(false));
                if l.len() < 2 || r.len() < 2 {
                    continue;
                }
                let s = sse(l) + sse(r);
                if s < best.2 - 1e-12 {
                    best = (f, t, s);
                }
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn stump_splits_at_the_step() {
        let x: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![((i * 7) % 10) as f64 / 10.0, i as f64 / 10.0])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| if r[1] < 0.45 { 0.1 } else { 0.8 })
            .collect();
        let params = ForestParams {
            n_trees: 1,
            max_depth: Some(1),
            features_per_split: Some(2),
            bootstrap: false,
            ..Default::default()
        };
        let f = train_forest(&x, &y, &params).unwrap();
        let (feature, threshold) = oracle_stump(&x, &y);
        assert_eq!(feature, 1);
        match f.trees[0].nodes[0] {
            Node::Split {
                feature: got_f,
                threshold: got_t,
                ..
            } => {
                assert_eq!(got_f, feature);
                assert!((got_t - threshold).abs() < 1e-12);
            }
            n => panic!("expected a split, got {n:?}"),
        }
        assert_eq!(f.importances, vec![0.0, 1.0]);
    }

    #[test]
    fn forest_is_mean_of_trees() {
        let x = random_x(120, 4, 2);
        let y: Vec<f64> = x
            .iter()
            .map(|r| (r[0] * 3.0).sin().abs() * 0.5 + 0.2 * r[2])
            .collect();
        let f = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 15,
                ..Default::default()
            },
        )
        .unwrap();
        for p in random_x(100, 4, 3) {
            let mean = f.trees.iter().map(|t| t.predict(&p)).sum::<f64>() / 15.0;
            assert!((f.predict_raw(&p).unwrap() - mean).abs() < 1e-15);
        }
        let sum: f64 = f.importances.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_trees_match_single_tree() {
        let x = random_x(60, 2, 4);
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(2),
            ..Default::default()
        };
        let one = train_forest(&x, &y, &params).unwrap();
        let mut many = one.clone();
        many.trees = vec![one.trees[0].clone(); 7];
        for p in random_x(20, 2, 5) {
            assert_eq!(many.predict_raw(&p).unwrap(), one.predict_raw(&p).unwrap());
        }
    }

    #[test]
    fn planted_single_feature_importance() {
        // spurious splits on noise features shrink as n grows; 2000 rows keeps them near 2%
        let x = random_x(2000, 5, 6);
        let y: Vec<f64> = x
            .iter()
            .map(|r| if r[1] > 0.5 { 0.7 } else { 0.2 })
            .collect();
        let f = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(f.importances[1] >= 0.95, "{:?}", f.importances);
    }

    #[test]
    fn leaves_respect_bounds_and_min_size() {
        let x = random_x(200, 3, 7);
        let y: Vec<f64> = x.iter().map(|r| r[0] * 0.99).collect();
        let f = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 10,
                ..Default::default()
            },
        )
        .unwrap();
        for t in &f.trees {
            for n in &t.nodes {
                match *n {
                    Node::Leaf { value } => assert!((0.0..1.0).contains(&value)),
                    Node::Split { feature, .. } => assert!(feature < 3),
                }
            }
        }
        let shallow = train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 3,
                max_depth: Some(2),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(shallow.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn seeded_determinism() {
        let x = random_x(100, 4, 8);
        let y: Vec<f64> = x.iter().map(|r| r[3]).collect();
        let p = ForestParams {
            n_trees: 8,
            seed: 11,
            ..Default::default()
        };
        assert_eq!(
            train_forest(&x, &y, &p).unwrap(),
            train_forest(&x, &y, &p).unwrap()
        );
        let q = ForestParams { seed: 12, ..p };
        assert_ne!(
            train_forest(&x, &y, &p).unwrap(),
            train_forest(&x, &y, &q).unwrap()
        );
    }

    #[test]
    fn rejects_bad_params() {
        let x = random_x(10, 2, 9);
        let y = vec![0.0; 10];
        assert!(train_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(train_forest(
            &x,
            &y,
            &ForestParams {
                min_samples_leaf: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(matches!(
            train_forest(&x, &y, &ForestParams::default())
                .unwrap()
                .predict_raw(&[0.0]),
            Err(RegressError::Dimension { .. })
        ));
    }
}
