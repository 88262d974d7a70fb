//! Bagged CART trees with Gini splits.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::Dataset;
use crate::models::Classifier;
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf {
        /// Fraction of class-1 training samples that reached this leaf.
        probability: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        /// Child for `x[feature] <= threshold`.
        left: usize,
        right: usize,
    },
}

/// A binary tree stored as an arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_probability(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { probability } => return probability,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

struct Builder<'a> {
    data: &'a Dataset,
    max_depth: usize,
    max_features: usize,
    rng: Rng,
    nodes: Vec<TreeNode>,
}

fn gini(pos: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = pos / total;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn label(&self, i: usize) -> f64 {
        f64::from(self.data.labels()[i])
    }

    fn build(&mut self, samples: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let pos: f64 = samples.iter().map(|&i| self.label(i)).sum();
        let total = samples.len() as f64;
        self.nodes.push(TreeNode::Leaf {
            probability: pos / total,
        });
        if depth >= self.max_depth || pos == 0.0 || pos == total || samples.len() < 2 {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples, pos) else {
            return id;
        };
        let mid = partition(samples, |i| self.data.row(i)[feature] <= threshold);
        let (l, r) = samples.split_at_mut(mid);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Examines `max_features` randomly ordered features, continuing past that
    /// count only while no valid split has been found.
    fn best_split(&mut self, samples: &[usize], pos: f64) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = (0..self.data.n_features()).collect();
        features.shuffle(&mut self.rng);
        let total = samples.len() as f64;
        let parent = gini(pos, total);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
        for (k, &feature) in features.iter().enumerate() {
            if k >= self.max_features && best.is_some() {
                break;
            }
            sorted.clear();
            sorted.extend(samples.iter().map(|&i| (self.data.row(i)[feature], self.label(i))));
            sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0.0;
            for s in 1..sorted.len() {
                left_pos += sorted[s - 1].1;
                if sorted[s - 1].0 == sorted[s].0 {
                    continue;
                }
                let nl = s as f64;
                let nr = total - nl;
                let impurity =
                    (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / total;
                if impurity < parent && best.is_none_or(|(b, _, _)| impurity < b) {
                    let mut threshold = 0.5 * (sorted[s - 1].0 + sorted[s].0);
                    if threshold >= sorted[s].0 {
                        threshold = sorted[s - 1].0;
                    }
                    best = Some((impurity, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn partition(v: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for i in 0..v.len() {
        if pred(v[i]) {
            v.swap(i, mid);
            mid += 1;
        }
    }
    mid
}

impl DecisionTree {
    /// Fits one tree on `samples` (indices into `d`, repeats allowed).
    pub fn fit(d: &Dataset, samples: &[usize], max_depth: usize, max_features: usize, seed: u64) -> Self {
        let mut b = Builder {
            data: d,
            max_depth,
            max_features: max_features.clamp(1, d.n_features()),
            rng: rng_from_seed(seed),
            nodes: Vec::new(),
        };
        let mut samples = samples.to_vec();
        b.build(&mut samples, 0);
        Self { nodes: b.nodes }
    }
}

/// Probability = mean over trees of the leaf class-1 fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    n_features: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Each tree sees a bootstrap resample and considers `floor(sqrt(F))`
    /// candidate features per split.
    pub fn fit(d: &Dataset, n_estimators: usize, max_depth: usize, seed: u64) -> Self {
        let n = d.n_rows();
        let max_features = ((d.n_features() as f64).sqrt() as usize).max(1);
        let trees = (0..n_estimators)
            .map(|t| {
                let tree_seed = derive_seed(seed, &[t as u64]);
                let mut rng = rng_from_seed(tree_seed);
                let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                DecisionTree::fit(d, &bootstrap, max_depth, max_features, rng.random())
            })
            .collect();
        Self {
            n_features: d.n_features(),
            trees,
        }
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RandomForest {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.leaf_probability(x)).sum();
        s / self.trees.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tree_separates_threshold_data() {
        let rows: Vec<[f64; 1]> = (0..20).map(|i| [i as f64]).collect();
        let labels = (0..20).map(|i| u8::from(i >= 13)).collect();
        let d = Dataset::from_rows(&rows, labels).unwrap();
        let all: Vec<usize> = (0..20).collect();
        let t = DecisionTree::fit(&d, &all, 3, 1, 0);
        assert_eq!(t.leaf_probability(&[12.0]), 0.0);
        assert_eq!(t.leaf_probability(&[13.0]), 1.0);
        assert_eq!(t.depth(), 1);
        match t.nodes()[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(threshold, 12.5),
            _ => panic!("root should split"),
        }
    }

    #[test]
    fn depth_limit_respected() {
        let d = crate::data::drug_like(300, 1);
        let f = RandomForest::fit(&d, 5, 3, 9);
        assert!(f.trees().iter().all(|t| t.depth() <= 3));
        assert_eq!(f, RandomForest::fit(&d, 5, 3, 9));
    }
}
