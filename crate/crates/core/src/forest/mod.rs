//! Random forest with posterior-probability leaves.
//!
//! Each tree is grown on a bootstrap sample of the training set, choosing at
//! every node the best information-gain split among `m_try` randomly drawn
//! features, and is never pruned. Leaves store the class distribution of the
//! training instances that reach them. A forest combines the leaf
//! distributions of its trees rather than counting votes.

mod dataset;
mod model;
mod tree;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dataset::LabeledDataset;
pub use model::{ModelFile, MODEL_FORMAT, MODEL_VERSION};
pub use tree::{
    best_split, entropy_impurity, information_gain, train_tree, Bootstrap, DecisionTree, Node,
    Split, GAIN_EPSILON,
};

use crate::error::{Error, Result};
use crate::features::{FeatureSchema, FeatureVector};
use crate::trace::SensorType;

const C: usize = SensorType::COUNT;

/// A distribution over the six sensor types, indexed by class code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassProbabilities([f64; C]);

impl ClassProbabilities {
    pub fn new(probs: [f64; C]) -> ClassProbabilities {
        ClassProbabilities(probs)
    }

    pub fn from_counts(counts: &[usize; C]) -> ClassProbabilities {
        let total: usize = counts.iter().sum();
        let mut p = [0.0; C];
        for (out, &c) in p.iter_mut().zip(counts) {
            *out = c as f64 / total as f64;
        }
        ClassProbabilities(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, class: SensorType) -> f64 {
        self.0[class.code()]
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Highest-probability class; ties go to the lowest class code.
    pub fn argmax(&self) -> SensorType {
        let mut best = 0;
        for k in 1..C {
            if self.0[k] > self.0[best] {
                best = k;
            }
        }
        SensorType::ALL[best]
    }

    fn normalized(mut self) -> ClassProbabilities {
        let s = self.sum();
        if s > 0.0 {
            for p in &mut self.0 {
                *p /= s;
            }
        }
        self
    }
}

/// How leaf distributions are combined across trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingMode {
    /// For each class, average only over the trees that give it nonzero
    /// probability, then renormalize the vector.
    #[default]
    Paper,
    /// Plain mean over all trees.
    Standard,
}

impl fmt::Display for AveragingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AveragingMode::Paper => "paper",
            AveragingMode::Standard => "standard",
        })
    }
}

impl FromStr for AveragingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(AveragingMode::Paper),
            "standard" => Ok(AveragingMode::Standard),
            _ => Err(Error::Config {
                key: "averaging".into(),
                message: format!("expected `paper` or `standard`, got `{s}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features drawn at each node; `None` means `floor(sqrt(D))`, at least 1.
    pub m_try: Option<usize>,
    pub seed: u64,
    pub averaging: AveragingMode,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 50,
            m_try: None,
            seed: 0,
            averaging: AveragingMode::Paper,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        ForestConfig { seed, ..self }
    }

    pub fn resolved_m_try(&self, feature_count: usize) -> usize {
        self.m_try
            .unwrap_or_else(|| ((feature_count as f64).sqrt().floor() as usize).max(1))
    }

    pub fn validate(&self, feature_count: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be positive".into()));
        }
        let m = self.resolved_m_try(feature_count);
        if m == 0 || m > feature_count {
            return Err(Error::InvalidConfig(format!(
                "m_try = {m} must lie in 1..={feature_count}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    config: ForestConfig,
    schema: FeatureSchema,
}

/// Predicted class with the distribution it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: SensorType,
    pub probs: ClassProbabilities,
}

impl RandomForest {
    /// Assembles a forest from already-grown trees.
    pub fn from_trees(
        trees: Vec<DecisionTree>,
        config: ForestConfig,
        schema: FeatureSchema,
    ) -> Result<RandomForest> {
        if trees.len() != config.n_trees {
            return Err(Error::InvalidConfig(format!(
                "{} trees for n_trees = {}",
                trees.len(),
                config.n_trees
            )));
        }
        Ok(RandomForest {
            trees,
            config,
            schema,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }

    pub fn class_labels(&self) -> [SensorType; C] {
        SensorType::ALL
    }

    fn check(&self, fv: &FeatureVector) -> Result<()> {
        if fv.schema() != self.schema {
            return Err(Error::SchemaMismatch {
                expected: self.schema.to_string(),
                found: fv.schema().to_string(),
            });
        }
        Ok(())
    }

    /// Combined distribution for a raw row of the forest's schema.
    pub fn posterior_of_row(&self, x: &[f64], mode: AveragingMode) -> ClassProbabilities {
        let n = self.trees.len() as f64;
        match mode {
            AveragingMode::Standard => {
                let mut acc = [0.0; C];
                for tree in &self.trees {
                    for (a, p) in acc.iter_mut().zip(tree.leaf_for(x).as_slice()) {
                        *a += p;
                    }
                }
                for a in &mut acc {
                    *a /= n;
                }
                ClassProbabilities(acc).normalized()
            }
            AveragingMode::Paper => {
                let mut acc = [0.0; C];
                let mut support = [0usize; C];
                for tree in &self.trees {
                    for (k, &p) in tree.leaf_for(x).as_slice().iter().enumerate() {
                        if p != 0.0 {
                            acc[k] += p;
                            support[k] += 1;
                        }
                    }
                }
                for k in 0..C {
                    if support[k] > 0 {
                        acc[k] /= support[k] as f64;
                    }
                }
                ClassProbabilities(acc).normalized()
            }
        }
    }

    pub fn classify_row(&self, x: &[f64], mode: AveragingMode) -> Classification {
        let probs = self.posterior_of_row(x, mode);
        Classification {
            label: probs.argmax(),
            probs,
        }
    }
}

/// Trains `config.n_trees` trees in parallel; tree `i` depends only on the
/// dataset, the config and `i`.
pub fn train_forest(data: &LabeledDataset, config: &ForestConfig) -> Result<RandomForest> {
    train_forest_with(data, config, Bootstrap::Resample)
}

pub fn train_forest_with(
    data: &LabeledDataset,
    config: &ForestConfig,
    bootstrap: Bootstrap,
) -> Result<RandomForest> {
    config.validate(data.feature_count())?;
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| train_tree(data, config, i, bootstrap))
        .collect();
    Ok(RandomForest {
        trees,
        config: *config,
        schema: data.schema(),
    })
}

pub fn tree_posterior(
    tree: &DecisionTree,
    fv: &FeatureVector,
    schema: FeatureSchema,
) -> Result<ClassProbabilities> {
    if fv.schema() != schema {
        return Err(Error::SchemaMismatch {
            expected: schema.to_string(),
            found: fv.schema().to_string(),
        });
    }
    Ok(*tree.leaf_for(fv.values()))
}

pub fn forest_posterior(
    forest: &RandomForest,
    fv: &FeatureVector,
    mode: AveragingMode,
) -> Result<ClassProbabilities> {
    forest.check(fv)?;
    Ok(forest.posterior_of_row(fv.values(), mode))
}

pub fn classify(
    forest: &RandomForest,
    fv: &FeatureVector,
    mode: AveragingMode,
) -> Result<Classification> {
    forest.check(fv)?;
    Ok(forest.classify_row(fv.values(), mode))
}
