//! Train on one building, test on a second with a shifted climate, then
//! drop a type from the training building to see it vanish from the
//! predictions.
//!
//!     cargo run --release --example inter_transfer

use senstype::eval::inter_corpus;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset, SensorType};

fn dataset(spec: &CorpusSpec) -> senstype::Result<LabeledDataset> {
    let corpus = generate_corpus(spec)?;
    let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, FeatureSchema::Rich8, 2700.0)?;
    LabeledDataset::from_matrix(&matrix)
}

fn main() -> senstype::Result<()> {
    let a = dataset(&CorpusSpec::default_corpus(42))?;
    let b = dataset(&CorpusSpec::shifted_building(43))?;
    let config = ForestConfig::default().with_seed(42);

    let (table, _) = inter_corpus(&a, &b, &[0.1, 0.3, 0.5, 1.0], &config)?;
    println!("A -> B\n{}", table.render_text(None));
    let (table, _) = inter_corpus(&b, &a, &[1.0], &config)?;
    println!("B -> A\n{}", table.render_text(None));

    let (table, full) = inter_corpus(&a.without_class(SensorType::AirVolume), &b, &[1.0], &config)?;
    println!("A without air_volume -> B\n{}", table.render_text(None));
    if let Some(full) = full {
        let mut counts = [0usize; SensorType::COUNT];
        for p in full
            .predictions
            .iter()
            .filter(|p| full.truth[&p.trace_id] == SensorType::AirVolume)
        {
            counts[p.predicted.code()] += 1;
        }
        println!("air_volume traces of B were predicted as:");
        for t in SensorType::ALL.into_iter().filter(|t| counts[t.code()] > 0) {
            println!("    {:<11} {}", t.name(), counts[t.code()]);
        }
    }
    Ok(())
}
