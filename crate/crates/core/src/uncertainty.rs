//! Class-probability entropy, uncertainty ranking and misclassification
//! flagging.
//!
//! An instance is flagged when its entropy is strictly greater than the
//! threshold. Given ground truth, the flagged set `S1` splits into wrong
//! (`S2`) and correct (`S3`) predictions; `S4` and `S5` are all wrong and all
//! correct predictions. Then `TPR = |S2|/|S4|`, `FPR = |S3|/|S5|` and
//! `PPV = |S2|/|S1|`, each undefined when its denominator is empty.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{ClassProbabilities, Classification};
use crate::meta::{self, Preamble};
use crate::trace::SensorType;

const C: usize = SensorType::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyBase {
    #[default]
    Nats,
    Bits,
    /// Nats divided by `ln 6`, so the range is `[0, 1]`.
    Normalized,
}

impl EntropyBase {
    fn divisor(self) -> f64 {
        match self {
            EntropyBase::Nats => 1.0,
            EntropyBase::Bits => std::f64::consts::LN_2,
            EntropyBase::Normalized => (C as f64).ln(),
        }
    }

    /// Largest possible entropy over six classes in this unit.
    pub fn max_entropy(self) -> f64 {
        (C as f64).ln() / self.divisor()
    }
}

impl fmt::Display for EntropyBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntropyBase::Nats => "nats",
            EntropyBase::Bits => "bits",
            EntropyBase::Normalized => "normalized",
        })
    }
}

impl FromStr for EntropyBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(EntropyBase::Nats),
            "bits" => Ok(EntropyBase::Bits),
            "normalized" => Ok(EntropyBase::Normalized),
            _ => Err(Error::Config {
                key: "entropy-base".into(),
                message: format!("expected nats, bits or normalized, got `{s}`"),
            }),
        }
    }
}

/// Shannon entropy of a normalized distribution, with `0 ln 0 = 0`.
pub fn class_entropy(probs: &[f64], base: EntropyBase) -> Result<f64> {
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || probs.iter().any(|&p| p.is_nan() || p < 0.0) {
        return Err(Error::UnnormalizedProbabilities { sum });
    }
    let h: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum();
    // avoids -0 for one-hot inputs
    Ok(if h > 0.0 { h / base.divisor() } else { 0.0 })
}

/// A classified trace. `entropy` is in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub trace_id: String,
    pub predicted: SensorType,
    pub probs: ClassProbabilities,
    pub entropy: f64,
}

impl Prediction {
    pub fn new(trace_id: impl Into<String>, classification: Classification) -> Prediction {
        Self::from_probs(trace_id, classification.probs)
    }

    pub fn from_probs(trace_id: impl Into<String>, probs: ClassProbabilities) -> Prediction {
        let entropy = class_entropy(probs.as_slice(), EntropyBase::Nats)
            .expect("forest posteriors are normalized");
        Prediction {
            trace_id: trace_id.into(),
            predicted: probs.argmax(),
            probs,
            entropy,
        }
    }

    pub fn entropy_in(&self, base: EntropyBase) -> f64 {
        self.entropy / base.divisor()
    }
}

/// Least confident first; equal entropies in trace-id order.
pub fn rank_by_uncertainty(predictions: &[Prediction]) -> Vec<&Prediction> {
    let mut ranked: Vec<&Prediction> = predictions.iter().collect();
    ranked.sort_by(|a, b| {
        b.entropy
            .total_cmp(&a.entropy)
            .then_with(|| a.trace_id.cmp(&b.trace_id))
    });
    ranked
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagRow {
    pub trace_id: String,
    pub predicted: SensorType,
    pub entropy: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlagReport {
    pub threshold: f64,
    pub base: EntropyBase,
    pub rows: Vec<FlagRow>,
}

impl FlagReport {
    /// The flagged set `S1`.
    pub fn flagged(&self) -> BTreeSet<&str> {
        self.rows
            .iter()
            .filter(|r| r.flagged)
            .map(|r| r.trace_id.as_str())
            .collect()
    }

    pub fn write_csv(&self, preamble: Preamble, out: &mut impl Write) -> Result<()> {
        preamble
            .with("threshold", self.threshold)
            .with("entropy_base", self.base)
            .write(out)
            .map_err(|e| Error::io("<flag report>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trace_id", "predicted", "entropy", "flagged"])?;
        for r in &self.rows {
            w.write_record([
                r.trace_id.as_str(),
                r.predicted.name(),
                &r.entropy.to_string(),
                if r.flagged { "true" } else { "false" },
            ])?;
        }
        w.flush().map_err(|e| Error::io("<flag report>", e))?;
        Ok(())
    }
}

/// Flags every prediction whose entropy (in `base`) exceeds `threshold`.
pub fn flag_above_threshold(
    predictions: &[Prediction],
    threshold: f64,
    base: EntropyBase,
) -> FlagReport {
    FlagReport {
        threshold,
        base,
        rows: predictions
            .iter()
            .map(|p| {
                let entropy = p.entropy_in(base);
                FlagRow {
                    trace_id: p.trace_id.clone(),
                    predicted: p.predicted,
                    entropy,
                    flagged: entropy > threshold,
                }
            })
            .collect(),
    }
}

/// Sizes of `S1`..`S5` with the derived rates; `None` marks an undefined rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisclassificationMetrics {
    pub flagged: usize,
    pub flagged_wrong: usize,
    pub flagged_correct: usize,
    pub wrong: usize,
    pub correct: usize,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub ppv: Option<f64>,
}

impl MisclassificationMetrics {
    fn from_counts(
        flagged_wrong: usize,
        flagged_correct: usize,
        wrong: usize,
        correct: usize,
    ) -> Self {
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        let flagged = flagged_wrong + flagged_correct;
        MisclassificationMetrics {
            flagged,
            flagged_wrong,
            flagged_correct,
            wrong,
            correct,
            tpr: ratio(flagged_wrong, wrong),
            fpr: ratio(flagged_correct, correct),
            ppv: ratio(flagged_wrong, flagged),
        }
    }

    pub fn tpr(&self) -> Result<f64> {
        self.tpr.ok_or(Error::NoMisclassified)
    }

    pub fn fpr(&self) -> Result<f64> {
        self.fpr.ok_or(Error::NoCorrect)
    }

    pub fn any_undefined(&self) -> bool {
        self.tpr.is_none() || self.fpr.is_none() || self.ppv.is_none()
    }
}

/// Renders an optional rate, using `undefined` for the sentinel.
pub fn fmt_rate(rate: Option<f64>) -> String {
    rate.map_or_else(|| "undefined".to_string(), |r| r.to_string())
}

/// Whether each prediction matches its true label.
pub fn correctness_from_truth(
    predictions: &[Prediction],
    truth: &HashMap<String, SensorType>,
) -> Result<HashMap<String, bool>> {
    predictions
        .iter()
        .map(|p| {
            truth
                .get(&p.trace_id)
                .map(|&t| (p.trace_id.clone(), t == p.predicted))
                .ok_or_else(|| Error::InvalidDataset(format!("no true label for `{}`", p.trace_id)))
        })
        .collect()
}

fn lookup(correctness: &HashMap<String, bool>, id: &str) -> Result<bool> {
    correctness
        .get(id)
        .copied()
        .ok_or_else(|| Error::InvalidDataset(format!("no correctness entry for `{id}`")))
}

pub fn misclassification_metrics(
    report: &FlagReport,
    correctness: &HashMap<String, bool>,
) -> Result<MisclassificationMetrics> {
    let (mut fw, mut fc, mut w, mut c) = (0, 0, 0, 0);
    for row in &report.rows {
        let ok = lookup(correctness, &row.trace_id)?;
        match (row.flagged, ok) {
            (true, false) => {
                fw += 1;
                w += 1
            }
            (true, true) => {
                fc += 1;
                c += 1
            }
            (false, false) => w += 1,
            (false, true) => c += 1,
        }
    }
    Ok(MisclassificationMetrics::from_counts(fw, fc, w, c))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRow {
    pub threshold: f64,
    pub metrics: MisclassificationMetrics,
}

/// Evenly spaced thresholds from 0 to the maximum entropy of `base`, inclusive.
pub fn threshold_grid(base: EntropyBase, steps: usize) -> Vec<f64> {
    let top = base.max_entropy();
    (0..=steps).map(|i| top * i as f64 / steps as f64).collect()
}

pub fn roc_sweep(
    predictions: &[Prediction],
    correctness: &HashMap<String, bool>,
    thresholds: &[f64],
    base: EntropyBase,
) -> Result<Vec<RocRow>> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0].is_nan() || w[1].is_nan() || w[0] > w[1]) {
        return Err(Error::InvalidThresholds);
    }
    thresholds
        .iter()
        .map(|&threshold| {
            let report = flag_above_threshold(predictions, threshold, base);
            Ok(RocRow {
                threshold,
                metrics: misclassification_metrics(&report, correctness)?,
            })
        })
        .collect()
}

pub fn write_roc_csv(rows: &[RocRow], preamble: Preamble, out: &mut impl Write) -> Result<()> {
    preamble.write(out).map_err(|e| Error::io("<roc>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "threshold",
        "tpr",
        "fpr",
        "ppv",
        "s1",
        "s2",
        "s3",
        "s4",
        "s5",
    ])?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.threshold.to_string(),
            fmt_rate(m.tpr),
            fmt_rate(m.fpr),
            fmt_rate(m.ppv),
            m.flagged.to_string(),
            m.flagged_wrong.to_string(),
            m.flagged_correct.to_string(),
            m.wrong.to_string(),
            m.correct.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<roc>", e))?;
    Ok(())
}

/// Empirical CDF points `(entropy, i/n)` for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    pub points: Vec<(f64, f64)>,
}

impl Cdf {
    fn of(mut xs: Vec<f64>) -> Option<Cdf> {
        if xs.is_empty() {
            return None;
        }
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        Some(Cdf {
            points: xs
                .into_iter()
                .enumerate()
                .map(|(i, x)| (x, (i + 1) as f64 / n))
                .collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|p| p.0).sum::<f64>() / self.points.len() as f64
    }
}

/// Entropy distributions of correct and wrong predictions; an empty group
/// yields `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyCdf {
    pub correct: Option<Cdf>,
    pub wrong: Option<Cdf>,
}

impl EntropyCdf {
    pub fn write_csv(&self, preamble: Preamble, out: &mut impl Write) -> Result<()> {
        preamble.write(out).map_err(|e| Error::io("<cdf>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group", "entropy", "cdf"])?;
        for (name, cdf) in [("correct", &self.correct), ("wrong", &self.wrong)] {
            for (x, y) in cdf.iter().flat_map(|c| c.points.iter()) {
                w.write_record([name.to_string(), x.to_string(), y.to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<cdf>", e))?;
        Ok(())
    }
}

pub fn entropy_cdf(
    predictions: &[Prediction],
    correctness: &HashMap<String, bool>,
    base: EntropyBase,
) -> Result<EntropyCdf> {
    let mut correct = Vec::new();
    let mut wrong = Vec::new();
    for p in predictions {
        if lookup(correctness, &p.trace_id)? {
            correct.push(p.entropy_in(base));
        } else {
            wrong.push(p.entropy_in(base));
        }
    }
    Ok(EntropyCdf {
        correct: Cdf::of(correct),
        wrong: Cdf::of(wrong),
    })
}

const PROB_COLUMNS: [&str; C] = [
    "p_co2",
    "p_humidity",
    "p_room_temp",
    "p_setpoint",
    "p_air_volume",
    "p_other_temp",
];

/// Writes `trace_id,predicted,p_co2..p_other_temp,entropy` rows.
pub fn write_predictions_csv(
    predictions: &[Prediction],
    base: EntropyBase,
    preamble: Preamble,
    out: &mut impl Write,
) -> Result<()> {
    preamble
        .with("entropy_base", base)
        .write(out)
        .map_err(|e| Error::io("<predictions>", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["trace_id", "predicted"];
    header.extend(PROB_COLUMNS);
    header.push("entropy");
    w.write_record(&header)?;
    for p in predictions {
        let mut rec = vec![p.trace_id.clone(), p.predicted.name().to_string()];
        rec.extend(p.probs.as_slice().iter().map(|v| v.to_string()));
        rec.push(p.entropy_in(base).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<predictions>", e))?;
    Ok(())
}

/// Reads a predictions file. Entropies are recomputed from the stored
/// probabilities rather than trusted.
pub fn read_predictions_csv(path: &Path) -> Result<(Vec<Prediction>, Preamble)> {
    let text = meta::read_to_string(path)?;
    let (preamble, body) = Preamble::split(&text);
    let offset = meta::preamble_lines(&text, body);
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.len() != C + 3 || &headers[0] != "trace_id" || &headers[1] != "predicted" {
        return Err(Error::parse(path, offset + 1, "not a predictions file"));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = offset + record.position().map_or(0, |p| p.line());
        let mut probs = [0.0; C];
        for (k, p) in probs.iter_mut().enumerate() {
            *p = record[2 + k].parse().map_err(|_| {
                Error::parse(path, line, format!("bad probability in column {}", k + 3))
            })?;
        }
        let probs = ClassProbabilities::new(probs);
        let entropy = class_entropy(probs.as_slice(), EntropyBase::Nats)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        let predicted: SensorType = record[1]
            .parse()
            .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
        out.push(Prediction {
            trace_id: record[0].to_string(),
            predicted,
            probs,
            entropy,
        });
    }
    Ok((out, preamble))
}
