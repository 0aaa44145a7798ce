//! Generate the shipped corpus presets, write one to disk, and show a few
//! per-type statistics.
//!
//!     cargo run --release --example synth_corpus [out_dir]

use senstype::synth::{generate_corpus, CorpusConfig, CorpusSpec};
use senstype::SensorType;

fn main() -> senstype::Result<()> {
    for name in ["default", "shifted", "overlap", "confusable"] {
        let corpus = generate_corpus(&CorpusSpec::preset(name, 42)?)?;
        println!("{name}: {} traces", corpus.traces.len());
        for t in SensorType::ALL {
            let values: Vec<f64> = corpus
                .traces
                .iter()
                .filter(|tr| tr.label() == Some(t))
                .flat_map(|tr| tr.values().iter().copied())
                .collect();
            if values.is_empty() {
                continue;
            }
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            println!(
                "    {:<11} mean {mean:>8.2}  range [{lo:.1}, {hi:.1}]",
                t.name()
            );
        }
    }

    // A TOML config overrides any preset field.
    let config = CorpusConfig::parse(
        "preset = \"default\"\nseed = 7\ntraces_per_type = 3\nduration = 172800.0\n",
        "inline.toml".as_ref(),
    )?;
    let spec = config.resolve(42)?;
    let corpus = generate_corpus(&spec)?;
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "target/synth_demo".into());
    let manifest = corpus.write_to(out.as_ref())?;
    println!(
        "\nwrote {} traces and manifest.csv to {out}",
        manifest.rows.len()
    );
    Ok(())
}
