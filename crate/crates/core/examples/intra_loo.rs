//! Leave-one-out accuracy on the default synthetic corpus, rich8 against
//! baseline2, in both averaging modes.
//!
//!     cargo run --release --example intra_loo [seed]

use std::time::Instant;

use senstype::eval::loo_cv;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{AveragingMode, FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset};

fn main() -> senstype::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let corpus = generate_corpus(&CorpusSpec::default_corpus(seed))?;

    for schema in [FeatureSchema::Rich8, FeatureSchema::Baseline2] {
        let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, schema, 2700.0)?;
        let data = LabeledDataset::from_matrix(&matrix)?;
        for averaging in [AveragingMode::Paper, AveragingMode::Standard] {
            let start = Instant::now();
            let config = ForestConfig {
                seed,
                averaging,
                ..ForestConfig::default()
            };
            let out = loo_cv(&data, &config)?;
            println!(
                "{schema:<10} {averaging:<8} overall {:.3}  ({:.1?})",
                out.column.overall().unwrap_or(f64::NAN),
                start.elapsed()
            );
            for t in senstype::SensorType::ALL {
                if let Some(acc) = out.column.class(t) {
                    println!("    {:<11} {acc:.3}", t.name());
                }
            }
        }
    }
    Ok(())
}
