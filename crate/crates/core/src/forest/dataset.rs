use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureSchema, FeatureVector};
use crate::trace::SensorType;

/// Labeled feature vectors sharing one schema.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    schema: FeatureSchema,
    ids: Vec<String>,
    rows: Vec<Vec<f64>>,
    labels: Vec<SensorType>,
}

impl LabeledDataset {
    pub fn new(
        schema: FeatureSchema,
        instances: impl IntoIterator<Item = (String, FeatureVector, SensorType)>,
    ) -> Result<LabeledDataset> {
        let mut ds = LabeledDataset {
            schema,
            ids: Vec::new(),
            rows: Vec::new(),
            labels: Vec::new(),
        };
        for (id, fv, label) in instances {
            if fv.schema() != schema {
                return Err(Error::SchemaMismatch {
                    expected: schema.to_string(),
                    found: fv.schema().to_string(),
                });
            }
            ds.ids.push(id);
            ds.rows.push(fv.values().to_vec());
            ds.labels.push(label);
        }
        if ds.rows.is_empty() {
            return Err(Error::InvalidDataset("no labeled instances".into()));
        }
        Ok(ds)
    }

    /// Builds a dataset from raw rows. Every row must have the same length.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<SensorType>) -> Result<LabeledDataset> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || width == 0 || rows.len() != labels.len() {
            return Err(Error::InvalidDataset(
                "rows and labels must be non-empty and aligned".into(),
            ));
        }
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidDataset("rows differ in length".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        let schema = match width {
            8 => FeatureSchema::Rich8,
            2 => FeatureSchema::Baseline2,
            w @ 1..=7 => {
                FeatureSchema::Subset(crate::features::FeatureMask::new(((1u16 << w) - 1) as u8)?)
            }
            w => {
                return Err(Error::InvalidDataset(format!(
                    "{w} features per row is not supported"
                )))
            }
        };
        let ids = (0..rows.len()).map(|i| format!("row{i}")).collect();
        Ok(LabeledDataset {
            schema,
            ids,
            rows,
            labels,
        })
    }

    /// The labeled rows of a feature matrix. Unlabeled rows are ignored.
    pub fn from_matrix(matrix: &FeatureMatrix) -> Result<LabeledDataset> {
        Self::new(
            matrix.schema,
            matrix
                .rows
                .iter()
                .filter_map(|r| r.label.map(|l| (r.trace_id.clone(), r.features.clone(), l))),
        )
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn label(&self, i: usize) -> SensorType {
        self.labels[i]
    }

    pub fn labels(&self) -> &[SensorType] {
        &self.labels
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn feature_vector(&self, i: usize) -> FeatureVector {
        FeatureVector::new(self.rows[i].clone(), self.schema).expect("rows match schema")
    }

    pub fn class_counts(&self) -> [usize; SensorType::COUNT] {
        let mut counts = [0; SensorType::COUNT];
        for l in &self.labels {
            counts[l.code()] += 1;
        }
        counts
    }

    /// Instances at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            schema: self.schema,
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Drops every instance of `class`.
    pub fn without_class(&self, class: SensorType) -> LabeledDataset {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.labels[i] != class)
            .collect();
        self.subset(&keep)
    }

    /// Restricts every row to the features selected by `mask`.
    pub fn project(&self, mask: crate::features::FeatureMask) -> Result<LabeledDataset> {
        if self.schema != FeatureSchema::Rich8 {
            return Err(Error::SchemaMismatch {
                expected: FeatureSchema::Rich8.to_string(),
                found: self.schema.to_string(),
            });
        }
        Ok(LabeledDataset {
            schema: FeatureSchema::Subset(mask),
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| mask.indices().map(|i| r[i]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }

    pub fn with_labels(&self, labels: Vec<SensorType>) -> LabeledDataset {
        assert_eq!(labels.len(), self.len());
        LabeledDataset {
            labels,
            ..self.clone()
        }
    }
}
