//! Train a forest on one synthetic corpus, save it, reload it and classify
//! traces drawn with a different seed.
//!
//!     cargo run --release --example train_classify

use senstype::forest::{train_forest, ModelFile};
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{
    AveragingMode, FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset, Prediction,
};

fn main() -> senstype::Result<()> {
    let train = generate_corpus(&CorpusSpec::default_corpus(1))?;
    let (matrix, _) = FeatureMatrix::from_traces(&train.traces, FeatureSchema::Rich8, 2700.0)?;
    let config = ForestConfig {
        n_trees: 50,
        seed: 42,
        averaging: AveragingMode::Paper,
        ..ForestConfig::default()
    };
    let forest = train_forest(&LabeledDataset::from_matrix(&matrix)?, &config)?;
    let depths: Vec<usize> = forest.trees().iter().map(|t| t.depth()).collect();
    println!(
        "{} trees, depth {}..{}",
        forest.trees().len(),
        depths.iter().min().unwrap(),
        depths.iter().max().unwrap()
    );

    let json = ModelFile::from_forest(&forest, None).to_json()?;
    println!("model file: {} bytes", json.len());
    let forest = ModelFile::from_json(&json)?.into_forest()?;

    let test = generate_corpus(&CorpusSpec {
        traces_per_type: 3,
        ..CorpusSpec::default_corpus(2)
    })?;
    let (matrix, _) = FeatureMatrix::from_traces(&test.traces, FeatureSchema::Rich8, 2700.0)?;
    let mut correct = 0;
    for row in &matrix.rows {
        let p = Prediction::new(
            row.trace_id.clone(),
            senstype::forest::classify(&forest, &row.features, config.averaging)?,
        );
        let truth = row.label.expect("synthetic traces are labeled");
        correct += usize::from(p.predicted == truth);
        println!(
            "{:<16} true {:<11} predicted {:<11} p={:.3} H={:.3}",
            p.trace_id,
            truth.name(),
            p.predicted.name(),
            p.probs.get(p.predicted),
            p.entropy
        );
    }
    println!("{correct}/{} correct", matrix.rows.len());
    Ok(())
}
