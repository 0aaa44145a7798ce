//! Entropy of class probabilities in the three units, and flagging the
//! predictions above a threshold.
//!
//!     cargo run --release --example flag_uncertain [threshold]

use senstype::eval::loo_cv;
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::uncertainty::{
    class_entropy, flag_above_threshold, misclassification_metrics, rank_by_uncertainty,
};
use senstype::{EntropyBase, FeatureMatrix, FeatureSchema, ForestConfig, LabeledDataset};

fn main() -> senstype::Result<()> {
    let threshold: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.425);

    for probs in [
        [0.9, 0.0, 0.0, 0.0, 0.0, 0.1],
        [0.3, 0.25, 0.1, 0.0, 0.15, 0.2],
    ] {
        print!("{probs:?}:");
        for base in [
            EntropyBase::Nats,
            EntropyBase::Bits,
            EntropyBase::Normalized,
        ] {
            print!("  {:.4} {base}", class_entropy(&probs, base)?);
        }
        println!();
    }

    let corpus = generate_corpus(&CorpusSpec::confusable_pair(42))?;
    let (matrix, _) = FeatureMatrix::from_traces(&corpus.traces, FeatureSchema::Rich8, 2700.0)?;
    let held = loo_cv(
        &LabeledDataset::from_matrix(&matrix)?,
        &ForestConfig::default().with_seed(42),
    )?;

    println!("\nmost uncertain LOO predictions:");
    for p in rank_by_uncertainty(&held.predictions).into_iter().take(8) {
        let truth = held.truth[&p.trace_id];
        println!(
            "  {:<16} H={:.3} predicted {:<11} true {}",
            p.trace_id,
            p.entropy,
            p.predicted.name(),
            truth.name()
        );
    }

    let report = flag_above_threshold(&held.predictions, threshold, EntropyBase::Nats);
    let m = misclassification_metrics(&report, &held.correctness())?;
    println!(
        "\nthreshold {threshold}: flagged {} of {}, {} of {} errors caught (TPR {:.3}), FPR {:.3}",
        m.flagged,
        report.rows.len(),
        m.flagged_wrong,
        m.wrong,
        m.tpr.unwrap_or(f64::NAN),
        m.fpr.unwrap_or(f64::NAN)
    );
    Ok(())
}
