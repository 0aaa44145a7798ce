//! Versioned JSON model file.
//!
//! Layout: format tag, version, tool, forest config, class labels, feature
//! schema, optional run metadata, and each tree as a preorder node list where
//! a node is either `{"split": {"feature": i, "threshold": t}}` or
//! `{"leaf": [p0, .., p5]}`. Floats are written in shortest round-trip form,
//! so save, load, save reproduces the same bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, ForestConfig, Node, RandomForest};
use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::meta::{self, TOOL};
use crate::trace::SensorType;

pub const MODEL_FORMAT: &str = "senstype-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub tool: String,
    pub config: ForestConfig,
    pub class_labels: Vec<SensorType>,
    pub feature_schema: FeatureSchema,
    /// Free-form record of the settings the model was produced with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
    pub trees: Vec<Vec<Node>>,
}

impl ModelFile {
    pub fn from_forest(forest: &RandomForest, run_config: Option<serde_json::Value>) -> ModelFile {
        let mut config = *forest.config();
        // record the m_try actually used
        config.m_try = Some(config.resolved_m_try(forest.schema().len()));
        ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            tool: TOOL.into(),
            config,
            class_labels: SensorType::ALL.to_vec(),
            feature_schema: forest.schema(),
            run_config,
            trees: forest.trees().iter().map(|t| t.nodes().to_vec()).collect(),
        }
    }

    pub fn into_forest(self) -> Result<RandomForest> {
        if self.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!("format tag `{}`", self.format)));
        }
        if self.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!("version {}", self.version)));
        }
        if self.class_labels != SensorType::ALL {
            return Err(Error::ModelFormat(
                "class labels differ from the six-type taxonomy".into(),
            ));
        }
        let width = self.feature_schema.len();
        let trees = self
            .trees
            .into_iter()
            .enumerate()
            .map(|(i, nodes)| {
                let bad_feature = nodes
                    .iter()
                    .any(|n| matches!(n, Node::Split { feature, .. } if *feature >= width));
                if bad_feature {
                    return Err(Error::ModelFormat(format!(
                        "tree {i} splits on a missing feature"
                    )));
                }
                DecisionTree::from_preorder(nodes).ok_or_else(|| {
                    Error::ModelFormat(format!("tree {i} is not a complete preorder list"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RandomForest::from_trees(trees, self.config, self.feature_schema)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<ModelFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        meta::write_file(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<ModelFile> {
        Self::from_json(&meta::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{train_forest, LabeledDataset};
    use crate::rng::Stream;

    fn forest() -> RandomForest {
        let mut rng = Stream::new(17);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..8).map(|_| rng.normal() * 10.0).collect())
            .collect();
        let labels = (0..40).map(|i| SensorType::ALL[i % 6]).collect();
        let data = LabeledDataset::from_rows(rows, labels).unwrap();
        let config = ForestConfig {
            n_trees: 7,
            seed: 3,
            ..ForestConfig::default()
        };
        train_forest(&data, &config).unwrap()
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let f = forest();
        let first = ModelFile::from_forest(&f, Some(serde_json::json!({"window_len": 2700.0})))
            .to_json()
            .unwrap();
        let loaded = ModelFile::from_json(&first).unwrap();
        let second = loaded.clone().to_json().unwrap();
        assert_eq!(first, second);
        let back = loaded.into_forest().unwrap();
        assert_eq!(back.trees(), f.trees());
    }

    #[test]
    fn rejects_foreign_files() {
        let mut m = ModelFile::from_forest(&forest(), None);
        m.version = 99;
        assert!(matches!(m.into_forest(), Err(Error::ModelFormat(_))));
        let mut m = ModelFile::from_forest(&forest(), None);
        m.trees[0].pop();
        assert!(matches!(m.into_forest(), Err(Error::ModelFormat(_))));
        assert!(ModelFile::from_json("{\"format\": 1}").is_err());
    }
}
