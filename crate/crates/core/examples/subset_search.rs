//! Rank all 255 subsets of the eight rich features by single-tree LOO
//! accuracy.
//!
//!     cargo run --release --example subset_search [preset]

use senstype::eval::feature_subset_search;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::{FeatureMatrix, FeatureSchema, LabeledDataset};

fn main() -> senstype::Result<()> {
    let preset = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "confusable".into());
    let corpus = generate_corpus(&CorpusSpec::preset(&preset, 42)?)?;
    let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, FeatureSchema::Rich8, 2700.0)?;
    let scores = feature_subset_search(&LabeledDataset::from_matrix(&matrix)?)?;

    println!("top 10 of {} subsets on `{preset}`:", scores.len());
    for s in scores.iter().take(10) {
        println!(
            "  {:#04x}  {:.3}  {}",
            s.mask.bits(),
            s.accuracy(),
            s.mask.names().join(" ")
        );
    }
    if let Some(full) = scores.iter().find(|s| s.mask.len() == 8) {
        println!("all eight features: {:.3}", full.accuracy());
    }
    for k in 1..=8 {
        let best = scores
            .iter()
            .filter(|s| s.mask.len() == k)
            .map(|s| s.accuracy())
            .fold(0.0, f64::max);
        println!("best with {k} feature(s): {best:.3}");
    }
    Ok(())
}
