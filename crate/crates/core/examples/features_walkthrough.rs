//! From raw samples to the rich feature vector: windowing, per-window
//! medians and variances, then their min, max, median and variance.
//!
//!     cargo run --example features_walkthrough

use senstype::features::{extract_baseline, extract_med_var, summarize, RICH8_NAMES};
use senstype::synth::{generate_trace, TypeProfile, START_EPOCH};
use senstype::trace::{segment_windows, validate_trace};

fn main() -> senstype::Result<()> {
    // Two 100 s windows with values {1, 2, 3} and {10, 10, 16}; the sample at
    // t = 200 opens a third window that is incomplete and dropped.
    let samples = [
        (0.0, 1.0),
        (30.0, 2.0),
        (60.0, 3.0),
        (100.0, 10.0),
        (130.0, 10.0),
        (160.0, 16.0),
        (200.0, 0.0),
    ];
    let trace = validate_trace("hand", samples)?;

    for w in segment_windows(&trace, 100.0)? {
        println!("window @{:>5}: {:?}", w.start, w.values);
    }
    let mv = extract_med_var(&trace, 100.0)?;
    println!("MED = {:?}\nVAR = {:?}", mv.med, mv.var);

    let f = summarize(&mv);
    for (name, v) in RICH8_NAMES.iter().zip(f.values()) {
        println!("  {name:<10} {v:.6}");
    }
    println!(
        "baseline2 (median, variance) = {:?}",
        extract_baseline(&trace).values()
    );

    // The same pipeline on one synthetic week of CO2 at the default 45 min windows.
    let co2 = generate_trace("co2_demo", &TypeProfile::co2(), 7.0 * 86_400.0, 60.0, 1)?;
    println!("\n{} samples from t = {}", co2.len(), START_EPOCH);
    let mv = extract_med_var(&co2, 2700.0)?;
    println!("{} windows", mv.med.len());
    for (name, v) in RICH8_NAMES.iter().zip(summarize(&mv).values()) {
        println!("  {name:<10} {v:>14.3}");
    }
    Ok(())
}
