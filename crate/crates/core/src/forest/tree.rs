//! Unpruned classification trees grown by information gain.

use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::{ClassProbabilities, ForestConfig};
use crate::rng::Stream;
use crate::trace::SensorType;

const C: usize = SensorType::COUNT;

/// Gains within this distance are treated as equal, and a split must gain
/// more than this to be taken.
pub const GAIN_EPSILON: f64 = 1e-12;

/// Stream tag for per-tree generators.
const TREE_STREAM: u64 = 0x7472_6565;

/// Shannon entropy in nats of a class histogram.
pub fn entropy_impurity(class_counts: &[usize]) -> f64 {
    let total: usize = class_counts.iter().sum();
    debug_assert!(total > 0);
    let total = total as f64;
    class_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.ln()
        })
        .sum()
}

/// Parent impurity minus the size-weighted impurity of the two children.
pub fn information_gain(left: &[usize; C], right: &[usize; C]) -> f64 {
    let mut parent = [0; C];
    for k in 0..C {
        parent[k] = left[k] + right[k];
    }
    let nl: usize = left.iter().sum();
    let nr: usize = right.iter().sum();
    let n = (nl + nr) as f64;
    entropy_impurity(&parent)
        - (nl as f64 / n) * entropy_impurity(left)
        - (nr as f64 / n) * entropy_impurity(right)
}

/// `feature <= threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Best information-gain split of `rows` over `candidates`.
///
/// Thresholds are midpoints between consecutive distinct values. Ties go to
/// the lowest feature index, then the smallest threshold. Returns `None` when
/// no candidate separates the rows or the best gain is not positive.
pub fn best_split(data: &LabeledDataset, rows: &[usize], candidates: &[usize]) -> Option<Split> {
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut totals = [0usize; C];
    for &r in rows {
        totals[data.label(r).code()] += 1;
    }

    let mut best: Option<Split> = None;
    let mut column: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for &feature in &features {
        column.clear();
        column.extend(
            rows.iter()
                .map(|&r| (data.row(r)[feature], data.label(r).code())),
        );
        column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

        let mut left = [0usize; C];
        for i in 0..column.len() - 1 {
            left[column[i].1] += 1;
            let (lo, hi) = (column[i].0, column[i + 1].0);
            if lo == hi {
                continue;
            }
            let mut right = totals;
            for k in 0..C {
                right[k] -= left[k];
            }
            let gain = information_gain(&left, &right);
            if best.is_none_or(|b| gain > b.gain + GAIN_EPSILON) {
                best = Some(Split {
                    feature,
                    threshold: midpoint(lo, hi),
                    gain,
                });
            }
        }
    }
    best.filter(|b| b.gain > GAIN_EPSILON)
}

/// How a tree picks its training sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bootstrap {
    /// `N` draws with replacement from the `N` training instances.
    Resample,
    /// Every instance exactly once.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        /// Index of the right child; the left child immediately follows.
        #[serde(skip)]
        right: usize,
    },
    Leaf(ClassProbabilities),
}

/// Nodes in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Rebuilds a tree from a preorder node list, recomputing child links.
    pub fn from_preorder(mut nodes: Vec<Node>) -> Option<DecisionTree> {
        fn walk(nodes: &mut [Node], at: usize) -> Option<usize> {
            match nodes.get(at)? {
                Node::Leaf(_) => Some(at + 1),
                Node::Split { .. } => {
                    let right = walk(nodes, at + 1)?;
                    if let Node::Split { right: r, .. } = &mut nodes[at] {
                        *r = right;
                    }
                    walk(nodes, right)
                }
            }
        }
        (walk(&mut nodes, 0)? == nodes.len()).then_some(DecisionTree { nodes })
    }

    pub fn leaf_for(&self, x: &[f64]) -> &ClassProbabilities {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    right,
                } => {
                    at = if x[*feature] <= *threshold {
                        at + 1
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> (usize, usize) {
            match &nodes[at] {
                Node::Leaf(_) => (0, at + 1),
                Node::Split { right, .. } => {
                    let (dl, _) = walk(nodes, at + 1);
                    let (dr, end) = walk(nodes, *right);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf(_)))
            .count()
    }

    pub fn splits(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf(_) => None,
        })
    }
}

struct Grower<'a> {
    data: &'a LabeledDataset,
    m_try: usize,
    rng: Stream,
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize]) {
        let mut counts = [0usize; C];
        for &r in rows.iter() {
            counts[self.data.label(r).code()] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure {
            None
        } else {
            let candidates = self
                .rng
                .sample_indices(self.data.feature_count(), self.m_try);
            best_split(self.data, rows, &candidates)
        };
        let Some(split) = split else {
            self.nodes
                .push(Node::Leaf(ClassProbabilities::from_counts(&counts)));
            return;
        };

        // stable partition keeps child row order deterministic
        let (mut left, mut right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.row(r)[split.feature] <= split.threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            right: 0,
        });
        self.grow(&mut left);
        let right_at = self.nodes.len();
        if let Node::Split { right, .. } = &mut self.nodes[at] {
            *right = right_at;
        }
        self.grow(&mut right);
    }
}

/// Grows tree `tree_index` of a forest.
///
/// The tree's generator is derived from `(config.seed, tree_index)` only, so
/// trees can be built in any order. It draws the bootstrap sample first, then
/// the candidate features of each node in preorder.
pub fn train_tree(
    data: &LabeledDataset,
    config: &ForestConfig,
    tree_index: usize,
    bootstrap: Bootstrap,
) -> DecisionTree {
    let m_try = config.resolved_m_try(data.feature_count());
    let mut rng = Stream::derived(config.seed, &[TREE_STREAM, tree_index as u64]);
    let n = data.len();
    let mut rows: Vec<usize> = match bootstrap {
        Bootstrap::Resample => (0..n).map(|_| rng.below(n)).collect(),
        Bootstrap::Identity => (0..n).collect(),
    };
    let mut grower = Grower {
        data,
        m_try,
        rng,
        nodes: Vec::new(),
    };
    grower.grow(&mut rows);
    DecisionTree {
        nodes: grower.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::AveragingMode;
    use SensorType::*;

    fn ds(rows: &[&[f64]], labels: &[SensorType]) -> LabeledDataset {
        LabeledDataset::from_rows(rows.iter().map(|r| r.to_vec()).collect(), labels.to_vec())
            .unwrap()
    }

    fn config(m_try: usize) -> ForestConfig {
        ForestConfig {
            n_trees: 1,
            m_try: Some(m_try),
            seed: 9,
            averaging: AveragingMode::Paper,
        }
    }

    #[test]
    fn impurity_examples() {
        assert_eq!(entropy_impurity(&[4, 0, 0, 0, 0, 0]), 0.0);
        assert!((entropy_impurity(&[2, 2, 0, 0, 0, 0]) - 2f64.ln()).abs() < 1e-15);
        assert!((entropy_impurity(&[1; 6]) - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn single_midpoint_split() {
        let d = ds(&[&[1.0], &[3.0]], &[Co2, Humidity]);
        let s = best_split(&d, &[0, 1], &[0]).unwrap();
        assert_eq!((s.feature, s.threshold), (0, 2.0));
        assert!((s.gain - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn pure_node_has_no_split() {
        let d = ds(&[&[1.0], &[3.0], &[5.0]], &[Co2, Co2, Co2]);
        assert_eq!(best_split(&d, &[0, 1, 2], &[0]), None);
    }

    #[test]
    fn constant_feature_has_no_split() {
        let d = ds(&[&[1.0, 0.0], &[1.0, 5.0]], &[Co2, Humidity]);
        assert_eq!(best_split(&d, &[0, 1], &[0]), None);
        assert_eq!(best_split(&d, &[0, 1], &[1]).unwrap().threshold, 2.5);
    }

    #[test]
    fn ties_prefer_lowest_feature_then_threshold() {
        // Both features separate perfectly; feature 0 wins.
        let d = ds(&[&[1.0, 1.0], &[2.0, 2.0]], &[Co2, Humidity]);
        assert_eq!(best_split(&d, &[0, 1], &[1, 0]).unwrap().feature, 0);
        // Symmetric layout: A B B A. Thresholds 1.5 and 3.5 tie; 1.5 wins.
        let d = ds(
            &[&[1.0], &[2.0], &[3.0], &[4.0]],
            &[Co2, Humidity, Humidity, Co2],
        );
        assert_eq!(best_split(&d, &[0, 1, 2, 3], &[0]).unwrap().threshold, 1.5);
    }

    #[test]
    fn xor_layout_has_zero_gain() {
        // Every axis split leaves each child with the parent's class mix.
        let d = ds(
            &[&[0.0, 0.0], &[1.0, 1.0], &[0.0, 1.0], &[1.0, 0.0]],
            &[Co2, Co2, Humidity, Humidity],
        );
        assert_eq!(best_split(&d, &[0, 1, 2, 3], &[0, 1]), None);
        let tree = train_tree(&d, &config(2), 0, Bootstrap::Identity);
        assert_eq!(tree.leaf_count(), 1);
    }

    #[test]
    fn one_class_gives_one_hot_leaf() {
        let d = ds(&[&[1.0], &[2.0]], &[Setpoint, Setpoint]);
        let tree = train_tree(&d, &config(1), 0, Bootstrap::Resample);
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(
            tree.leaf_for(&[0.0]).as_slice(),
            &[0.0, 0.0, 0.0, 1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn two_instances_give_depth_one() {
        let d = ds(&[&[1.0], &[3.0]], &[Co2, Humidity]);
        let tree = train_tree(&d, &config(1), 0, Bootstrap::Identity);
        assert_eq!(tree.depth(), 1);
        assert_eq!(
            tree.leaf_for(&[0.0]).as_slice(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            tree.leaf_for(&[2.0]).as_slice(),
            &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            tree.leaf_for(&[2.0000001]).as_slice(),
            &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn same_seed_same_tree() {
        let d = ds(
            &[
                &[1.0, 9.0],
                &[3.0, 2.0],
                &[2.0, 5.0],
                &[7.0, 1.0],
                &[4.0, 4.0],
            ],
            &[Co2, Humidity, Co2, RoomTemp, Humidity],
        );
        let a = train_tree(&d, &config(1), 3, Bootstrap::Resample);
        let b = train_tree(&d, &config(1), 3, Bootstrap::Resample);
        assert_eq!(a, b);
    }

    #[test]
    fn preorder_links_rebuild() {
        let d = ds(
            &[
                &[1.0, 9.0],
                &[3.0, 2.0],
                &[2.0, 5.0],
                &[7.0, 1.0],
                &[4.0, 4.0],
            ],
            &[Co2, Humidity, Co2, RoomTemp, Humidity],
        );
        let tree = train_tree(&d, &config(2), 0, Bootstrap::Identity);
        let stripped = tree
            .nodes()
            .iter()
            .map(|n| match n {
                Node::Split {
                    feature, threshold, ..
                } => Node::Split {
                    feature: *feature,
                    threshold: *threshold,
                    right: 0,
                },
                leaf => leaf.clone(),
            })
            .collect();
        assert_eq!(DecisionTree::from_preorder(stripped).unwrap(), tree);
        assert!(DecisionTree::from_preorder(vec![]).is_none());
    }
}
