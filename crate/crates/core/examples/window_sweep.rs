//! Accuracy as a function of window length, within one corpus (LOO) and
//! across two (train on A, score ten folds of B).
//!
//!     cargo run --release --example window_sweep

use senstype::eval::{window_sweep, SweepProtocol};
use senstype::synth::{generate_corpus, CorpusSpec};
use senstype::ForestConfig;

fn main() -> senstype::Result<()> {
    let a = generate_corpus(&CorpusSpec::default_corpus(42))?;
    let b = generate_corpus(&CorpusSpec::shifted_building(43))?;
    let lens: Vec<f64> = [5.0, 15.0, 30.0, 45.0, 60.0, 90.0, 120.0, 180.0]
        .iter()
        .map(|m| m * 60.0)
        .collect();
    let config = ForestConfig::default().with_seed(42);

    let intra = window_sweep(&a.traces, &lens, SweepProtocol::IntraLoo, &config)?;
    let inter = window_sweep(
        &a.traces,
        &lens,
        SweepProtocol::InterTenFold {
            test_corpus: &b.traces,
        },
        &config,
    )?;
    println!("window   intra  inter");
    for (i, j) in intra.iter().zip(&inter) {
        println!(
            "{:>4} min {:.3}  {:.3}",
            i.window_len / 60.0,
            i.overall,
            j.overall
        );
    }
    let spread = |pts: &[senstype::eval::SweepPoint]| {
        let lo = pts.iter().map(|p| p.overall).fold(f64::INFINITY, f64::min);
        let hi = pts
            .iter()
            .map(|p| p.overall)
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    println!(
        "spread: intra {:.3}, inter {:.3}",
        spread(&intra),
        spread(&inter)
    );
    Ok(())
}
