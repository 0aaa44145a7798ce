//! Corrupt some labels, then let a scripted reviewer walk the most
//! uncertain predictions and put the true labels back.
//!
//!     cargo run --release --example relabel_loop

use std::collections::HashMap;

use senstype::cli::relabel::{review_loop, Answer, ReviewItem, Reviewer};
use senstype::forest::train_forest;
use senstype::manifest::{LabelManifest, ManifestRow};
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{
    FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset, Prediction, SensorType,
};

/// Knows the true label of every trace.
struct Oracle(HashMap<String, SensorType>);

impl Reviewer for Oracle {
    fn review(&mut self, item: &ReviewItem<'_>) -> senstype::Result<Answer> {
        let truth = self.0[&item.prediction.trace_id];
        Ok(if Some(truth) == item.current {
            Answer::Confirm
        } else {
            Answer::Correct(truth)
        })
    }
}

fn resubstitution(
    forest: &senstype::RandomForest,
    matrix: &FeatureMatrix,
    truth: &HashMap<String, SensorType>,
) -> f64 {
    let hits = matrix
        .rows
        .iter()
        .filter(|r| {
            forest
                .classify_row(r.features.values(), forest.config().averaging)
                .label
                == truth[&r.trace_id]
        })
        .count();
    hits as f64 / matrix.rows.len() as f64
}

fn main() -> senstype::Result<()> {
    let corpus = generate_corpus(&CorpusSpec::confusable_pair(42))?;
    let (mut matrix, _) = FeatureMatrix::from_traces(&corpus.traces, FeatureSchema::Rich8, 2700.0)?;
    let truth: HashMap<String, SensorType> = matrix
        .rows
        .iter()
        .map(|r| (r.trace_id.clone(), r.label.unwrap()))
        .collect();

    // every seventh trace gets the next type's label
    let mut noisy = 0;
    for (i, row) in matrix.rows.iter_mut().enumerate() {
        if i % 7 == 3 {
            let l = row.label.unwrap();
            row.label = Some(SensorType::ALL[(l.code() + 1) % SensorType::COUNT]);
            noisy += 1;
        }
    }
    let manifest = LabelManifest {
        rows: matrix
            .rows
            .iter()
            .map(|r| ManifestRow {
                trace_id: r.trace_id.clone(),
                path: format!("traces/{}.csv", r.trace_id),
                label: r.label,
            })
            .collect(),
        base_dir: ".".into(),
    };

    let config = ForestConfig::default().with_seed(42);
    let forest = train_forest(&LabeledDataset::from_matrix(&matrix)?, &config)?;
    println!(
        "{noisy} corrupted labels; accuracy against truth {:.3}",
        resubstitution(&forest, &matrix, &truth)
    );

    let predictions: Vec<Prediction> = matrix
        .rows
        .iter()
        .map(|r| {
            Ok(Prediction::new(
                r.trace_id.clone(),
                senstype::forest::classify(&forest, &r.features, config.averaging)?,
            ))
        })
        .collect::<senstype::Result<_>>()?;
    for budget in [20, 60, 120] {
        let out = review_loop(
            &manifest,
            &matrix,
            predictions.clone(),
            &config,
            budget,
            &mut Oracle(truth.clone()),
        )?;
        let wrong = out
            .manifest
            .rows
            .iter()
            .filter(|r| r.label != Some(truth[&r.trace_id]))
            .count();
        let retrained = out.forest.as_ref().unwrap_or(&forest);
        println!(
            "budget {budget}: {} corrected, {wrong} wrong labels left, accuracy against truth {:.3}",
            out.changed.len(),
            resubstitution(retrained, &matrix, &truth)
        );
    }
    Ok(())
}
