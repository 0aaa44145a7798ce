//! Accuracy when only a stratified fraction of the corpus is labeled, with
//! the baseline2 scheme alongside.
//!
//!     cargo run --release --example percentage_protocol

use senstype::eval::percentage_protocol;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset};

fn main() -> senstype::Result<()> {
    let corpus = generate_corpus(&CorpusSpec::default_corpus(42))?;
    let fractions = [0.05, 0.1, 0.2, 0.33, 0.5];
    let config = ForestConfig::default().with_seed(42);

    let mut tables = Vec::new();
    for schema in [FeatureSchema::Rich8, FeatureSchema::Baseline2] {
        let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, schema, 2700.0)?;
        tables.push(percentage_protocol(
            &LabeledDataset::from_matrix(&matrix)?,
            &fractions,
            &config,
        )?);
    }
    println!("rich8 (baseline2 in parentheses)\n");
    print!("{}", tables[0].render_text(Some(&tables[1])));
    Ok(())
}
