//! Sweep the flagging threshold over LOO predictions on the confusable
//! corpus and print TPR, FPR and PPV with the entropy CDFs of correct and
//! wrong predictions.
//!
//!     cargo run --release --example misclassification_roc

use senstype::eval::loo_cv;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::uncertainty::{entropy_cdf, fmt_rate, roc_sweep, threshold_grid};
use senstype::{EntropyBase, FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset};

fn main() -> senstype::Result<()> {
    let corpus = generate_corpus(&CorpusSpec::confusable_pair(42))?;
    let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, FeatureSchema::Rich8, 2700.0)?;
    let held = loo_cv(
        &LabeledDataset::from_matrix(&matrix)?,
        &ForestConfig::default().with_seed(42),
    )?;
    let correctness = held.correctness();
    println!(
        "LOO accuracy {:.3}",
        held.column.overall().unwrap_or(f64::NAN)
    );

    let base = EntropyBase::Normalized;
    let rows = roc_sweep(
        &held.predictions,
        &correctness,
        &threshold_grid(base, 20),
        base,
    )?;
    println!("\nthreshold    tpr    fpr    ppv  flagged");
    for r in &rows {
        let m = &r.metrics;
        println!(
            "{:>9.2} {:>6} {:>6} {:>6} {:>8}",
            r.threshold,
            short(fmt_rate(m.tpr)),
            short(fmt_rate(m.fpr)),
            short(fmt_rate(m.ppv)),
            m.flagged
        );
    }

    let cdf = entropy_cdf(&held.predictions, &correctness, base)?;
    for (name, group) in [("correct", &cdf.correct), ("wrong", &cdf.wrong)] {
        if let Some(c) = group {
            let median = c.points[c.points.len() / 2].0;
            println!(
                "{name:<8} n={:<4} mean {:.3} median {median:.3}",
                c.points.len(),
                c.mean()
            );
        }
    }
    Ok(())
}

fn short(s: String) -> String {
    s.parse::<f64>().map_or(s, |v| format!("{v:.3}"))
}
