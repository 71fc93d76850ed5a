//! CART regression tree grown on a bootstrap sample with random feature
//! subsets per split.

use rand::Rng;

/// Dense training data with rows in canonical (id) order.
pub(crate) struct TrainingData<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub p: usize,
}

impl TrainingData<'_> {
    #[inline]
    fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.p + feature]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<TreeNode>,
    /// How often each training row was drawn into this tree's bootstrap sample.
    in_bag: Vec<u32>,
}

pub(crate) struct TreeParams {
    pub mtry: usize,
    pub min_node_size: usize,
    pub sample_size: usize,
    pub max_depth: Option<usize>,
}

impl RegressionTree {
    pub(crate) fn grow<R: Rng>(data: &TrainingData<'_>, params: &TreeParams, rng: &mut R) -> Self {
        let n = data.y.len();
        let mut in_bag = vec![0u32; n];
        let mut sample: Vec<usize> = (0..params.sample_size)
            .map(|_| rng.random_range(0..n))
            .collect();
        for &i in &sample {
            in_bag[i] += 1;
        }
        sample.sort_unstable();
        let mut tree = RegressionTree {
            nodes: Vec::new(),
            in_bag,
        };
        tree.grow_node(data, params, &mut sample, 0, rng);
        tree
    }

    fn grow_node<R: Rng>(
        &mut self,
        data: &TrainingData<'_>,
        params: &TreeParams,
        samples: &mut [usize],
        depth: usize,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        let leaf_value = samples.iter().map(|&i| data.y[i]).sum::<f64>() / samples.len() as f64;
        self.nodes.push(TreeNode::Leaf(leaf_value));
        if samples.len() <= params.min_node_size || params.max_depth.is_some_and(|d| depth >= d) {
            return id;
        }
        let first = data.y[samples[0]];
        if samples.iter().all(|&i| data.y[i] == first) {
            return id;
        }
        let Some((feature, threshold)) = best_split(data, samples, params.mtry, rng) else {
            return id;
        };
        // Stable partition keeps sample order within each child.
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| data.value(i, feature) <= threshold);
        let l = self.grow_node(data, params, &mut left, depth + 1, rng);
        let r = self.grow_node(data, params, &mut right, depth + 1, rng);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left: l,
            right: r,
        };
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                TreeNode::Leaf(v) => return v,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn in_bag(&self) -> &[u32] {
        &self.in_bag
    }
}

/// Picks the variance-reducing split over `mtry` random features.
/// Thresholds are midpoints between consecutive distinct values; ties in
/// gain go to the lowest feature index, then the lowest threshold.
fn best_split<R: Rng>(
    data: &TrainingData<'_>,
    samples: &[usize],
    mtry: usize,
    rng: &mut R,
) -> Option<(usize, f64)> {
    let features = sample_features(data.p, mtry, rng);
    let m = samples.len();
    let total: f64 = samples.iter().map(|&i| data.y[i]).sum();
    let parent_score = total * total / m as f64;

    let mut best: Option<(usize, f64)> = None;
    let mut best_score = parent_score;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(m);
    for feature in features {
        pairs.clear();
        pairs.extend(samples.iter().map(|&i| (data.value(i, feature), data.y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_sum = 0.0;
        for i in 0..m - 1 {
            left_sum += pairs[i].1;
            let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = (i + 1) as f64;
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / n_left + right_sum * right_sum / (m as f64 - n_left);
            if score > best_score {
                best_score = score;
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((feature, threshold));
            }
        }
    }
    best
}

/// `mtry` distinct features, returned in ascending order.
fn sample_features<R: Rng>(p: usize, mtry: usize, rng: &mut R) -> Vec<usize> {
    let mut all: Vec<usize> = (0..p).collect();
    for i in 0..mtry.min(p) {
        let j = rng.random_range(i..p);
        all.swap(i, j);
    }
    all.truncate(mtry.min(p));
    all.sort_unstable();
    all
}
