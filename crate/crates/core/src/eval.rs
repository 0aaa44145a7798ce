//! Evaluation protocols: stratified percentage splits, leave-one-out,
//! cross-corpus transfer, window-length sweeps and exhaustive feature-subset
//! search.
//!
//! Every protocol is a pure function of its inputs and the forest seed.
//! Repeats and folds run in parallel but are aggregated over a fixed index
//! order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureMatrix, FeatureSchema};
use crate::forest::{
    train_forest, train_forest_with, Bootstrap, ForestConfig, LabeledDataset, RandomForest,
};
use crate::meta::Preamble;
use crate::rng::{derive_seed, Stream};
use crate::trace::{SensorTrace, SensorType};
use crate::uncertainty::Prediction;

const C: usize = SensorType::COUNT;

const SPLIT_STREAM: u64 = 0x73706c69;
const FOREST_STREAM: u64 = 0x666f7265;
const FOLD_STREAM: u64 = 0x666f6c64;

/// Mean accuracy over the repeats where it was defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyCell {
    pub mean: f64,
    pub repeats: usize,
}

/// Per-class and overall accuracy of one evaluation round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassAccuracy {
    pub correct: [usize; C],
    pub total: [usize; C],
}

impl ClassAccuracy {
    /// `None` when the class has no test instances.
    pub fn class(&self, class: SensorType) -> Option<f64> {
        let k = class.code();
        (self.total[k] > 0).then(|| self.correct[k] as f64 / self.total[k] as f64)
    }

    /// Micro-average: all correct over all tested.
    pub fn overall(&self) -> Option<f64> {
        let total: usize = self.total.iter().sum();
        (total > 0).then(|| self.correct.iter().sum::<usize>() as f64 / total as f64)
    }
}

pub fn per_class_accuracy(predicted: &[SensorType], truth: &[SensorType]) -> ClassAccuracy {
    assert_eq!(
        predicted.len(),
        truth.len(),
        "one prediction per truth label"
    );
    let mut acc = ClassAccuracy {
        correct: [0; C],
        total: [0; C],
    };
    for (p, t) in predicted.iter().zip(truth) {
        acc.total[t.code()] += 1;
        if p == t {
            acc.correct[t.code()] += 1;
        }
    }
    acc
}

/// One column of an accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyColumn {
    pub label: String,
    pub repeats: usize,
    pub per_class: [Option<AccuracyCell>; C],
    pub overall: Option<AccuracyCell>,
}

impl AccuracyColumn {
    pub fn from_rounds(label: impl Into<String>, rounds: &[ClassAccuracy]) -> AccuracyColumn {
        let mean_of = |values: Vec<f64>| {
            (!values.is_empty()).then(|| AccuracyCell {
                mean: values.iter().sum::<f64>() / values.len() as f64,
                repeats: values.len(),
            })
        };
        let per_class =
            SensorType::ALL.map(|t| mean_of(rounds.iter().filter_map(|r| r.class(t)).collect()));
        AccuracyColumn {
            label: label.into(),
            repeats: rounds.len(),
            per_class,
            overall: mean_of(rounds.iter().filter_map(|r| r.overall()).collect()),
        }
    }

    pub fn class(&self, class: SensorType) -> Option<f64> {
        self.per_class[class.code()].map(|c| c.mean)
    }

    pub fn overall(&self) -> Option<f64> {
        self.overall.map(|c| c.mean)
    }
}

/// Rows are the six types plus overall; columns are protocols or fractions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AccuracyTable {
    pub columns: Vec<AccuracyColumn>,
}

fn pct(cell: Option<AccuracyCell>) -> String {
    cell.map_or_else(|| "-".to_string(), |c| format!("{:.1}", 100.0 * c.mean))
}

impl AccuracyTable {
    pub fn column(&self, label: &str) -> Option<&AccuracyColumn> {
        self.columns.iter().find(|c| c.label == label)
    }

    /// Aligned text with percentages. When `paired` is given its cells are
    /// shown in parentheses next to this table's cells.
    pub fn render_text(&self, paired: Option<&AccuracyTable>) -> String {
        let cell = |col: usize, get: &dyn Fn(&AccuracyColumn) -> Option<AccuracyCell>| {
            let main = pct(get(&self.columns[col]));
            match paired.and_then(|p| p.columns.get(col)) {
                Some(other) => format!("{main} ({})", pct(get(other))),
                None => main,
            }
        };
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["type".to_string()];
        header.extend(self.columns.iter().map(|c| c.label.clone()));
        rows.push(header);
        for t in SensorType::ALL {
            let mut row = vec![t.name().to_string()];
            row.extend((0..self.columns.len()).map(|i| cell(i, &|c| c.per_class[t.code()])));
            rows.push(row);
        }
        let mut overall = vec!["overall".to_string()];
        overall.extend((0..self.columns.len()).map(|i| cell(i, &|c| c.overall)));
        rows.push(overall);

        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in rows {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (s, w))| {
                    if j == 0 {
                        format!("{s:<w$}")
                    } else {
                        format!("{s:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }

    /// Long format: `row,column,accuracy,repeats`; `undefined` marks empty cells.
    pub fn write_csv(&self, preamble: Preamble, out: &mut impl Write) -> Result<()> {
        preamble.write(out).map_err(|e| Error::io("<table>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["row", "column", "accuracy", "repeats"])?;
        for col in &self.columns {
            let rows = SensorType::ALL
                .iter()
                .map(|t| (t.name(), col.per_class[t.code()]))
                .chain([("overall", col.overall)]);
            for (name, cell) in rows {
                let (acc, n) = match cell {
                    Some(c) => (c.mean.to_string(), c.repeats.to_string()),
                    None => ("undefined".to_string(), "0".to_string()),
                };
                w.write_record([name, col.label.as_str(), acc.as_str(), n.as_str()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }
}

/// Repeats for one training fraction: `round(1/fraction)`, each with its own seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub fraction: f64,
    pub seeds: Vec<u64>,
}

impl SplitPlan {
    pub fn new(fraction: f64, master_seed: u64) -> Result<SplitPlan> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "fraction {fraction} is outside (0, 1]"
            )));
        }
        let repeats = ((1.0 / fraction).round() as usize).max(1);
        let seeds = (0..repeats)
            .map(|r| derive_seed(master_seed, &[SPLIT_STREAM, fraction.to_bits(), r as u64]))
            .collect();
        Ok(SplitPlan { fraction, seeds })
    }

    pub fn repeats(&self) -> usize {
        self.seeds.len()
    }
}

/// Train and test indices of a stratified split, both ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Classes with a single instance, placed entirely in training.
    pub untestable: Vec<SensorType>,
}

/// Number of training instances drawn from a class of `n` instances.
pub fn stratum_train_size(n: usize, fraction: f64) -> usize {
    match n {
        0 => 0,
        1 => 1,
        _ => ((fraction * n as f64).round() as usize).clamp(1, n - 1),
    }
}

/// Samples `round(fraction * n_c)` training instances from every class
/// without replacement; the rest form the test set.
pub fn stratified_split(
    data: &LabeledDataset,
    fraction: f64,
    rng: &mut Stream,
) -> Result<StratifiedSplit> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "fraction {fraction} is outside (0, 1)"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut untestable = Vec::new();
    for class in SensorType::ALL {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data.label(i) == class)
            .collect();
        if members.is_empty() {
            continue;
        }
        if members.len() == 1 {
            untestable.push(class);
        }
        let k = stratum_train_size(members.len(), fraction);
        rng.shuffle(&mut members);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    if train.is_empty() {
        return Err(Error::DegenerateFraction {
            fraction,
            side: "train",
        });
    }
    if test.is_empty() {
        return Err(Error::DegenerateFraction {
            fraction,
            side: "test",
        });
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(StratifiedSplit {
        train,
        test,
        untestable,
    })
}

fn fraction_label(fraction: f64) -> String {
    let pct = fraction * 100.0;
    if (pct - pct.round()).abs() < 1e-9 {
        format!("{}%", pct.round())
    } else {
        format!("{pct:.1}%")
    }
}

fn predict_rows(
    forest: &RandomForest,
    data: &LabeledDataset,
    rows: &[usize],
    config: &ForestConfig,
) -> Vec<Prediction> {
    rows.iter()
        .map(|&i| {
            Prediction::new(
                data.id(i),
                forest.classify_row(data.row(i), config.averaging),
            )
        })
        .collect()
}

fn round_accuracy(preds: &[Prediction], data: &LabeledDataset, rows: &[usize]) -> ClassAccuracy {
    let predicted: Vec<SensorType> = preds.iter().map(|p| p.predicted).collect();
    let truth: Vec<SensorType> = rows.iter().map(|&i| data.label(i)).collect();
    per_class_accuracy(&predicted, &truth)
}

/// Trains on stratified samples of `fraction` of the data and tests on the
/// complement, `round(1/fraction)` times per fraction.
pub fn percentage_protocol(
    data: &LabeledDataset,
    fractions: &[f64],
    config: &ForestConfig,
) -> Result<AccuracyTable> {
    let columns = fractions
        .iter()
        .map(|&fraction| {
            let plan = SplitPlan::new(fraction, config.seed)?;
            let rounds = plan
                .seeds
                .par_iter()
                .enumerate()
                .map(|(r, &seed)| {
                    let split = stratified_split(data, fraction, &mut Stream::new(seed))?;
                    let forest_seed =
                        derive_seed(config.seed, &[FOREST_STREAM, fraction.to_bits(), r as u64]);
                    let forest =
                        train_forest(&data.subset(&split.train), &config.with_seed(forest_seed))?;
                    let preds = predict_rows(&forest, data, &split.test, config);
                    Ok(round_accuracy(&preds, data, &split.test))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(AccuracyColumn::from_rounds(
                fraction_label(fraction),
                &rounds,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AccuracyTable { columns })
}

/// Column plus the held-out predictions, for entropy analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOut {
    pub column: AccuracyColumn,
    pub predictions: Vec<Prediction>,
    pub truth: HashMap<String, SensorType>,
}

impl HeldOut {
    pub fn correctness(&self) -> HashMap<String, bool> {
        self.predictions
            .iter()
            .map(|p| {
                (
                    p.trace_id.clone(),
                    self.truth.get(&p.trace_id) == Some(&p.predicted),
                )
            })
            .collect()
    }
}

/// Leave-one-out: one forest per instance, trained on all the others.
pub fn loo_cv(data: &LabeledDataset, config: &ForestConfig) -> Result<HeldOut> {
    if data.len() < 2 {
        return Err(Error::InvalidDataset(
            "leave-one-out needs at least 2 instances".into(),
        ));
    }
    config.validate(data.feature_count())?;
    let predictions = (0..data.len())
        .into_par_iter()
        .map(|held| {
            let rest: Vec<usize> = (0..data.len()).filter(|&i| i != held).collect();
            let seed = derive_seed(config.seed, &[FOREST_STREAM, held as u64]);
            let forest = train_forest(&data.subset(&rest), &config.with_seed(seed))?;
            Ok(predict_rows(&forest, data, &[held], config).remove(0))
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (0..data.len()).collect();
    let column = AccuracyColumn::from_rounds("LOO", &[round_accuracy(&predictions, data, &all)]);
    let truth = (0..data.len())
        .map(|i| (data.id(i).to_string(), data.label(i)))
        .collect();
    Ok(HeldOut {
        column,
        predictions,
        truth,
    })
}

/// Trains on (stratified fractions of) one corpus and tests on all of another.
/// A fraction of 1.0 uses the whole training corpus once.
pub fn inter_corpus(
    train: &LabeledDataset,
    test: &LabeledDataset,
    fractions: &[f64],
    config: &ForestConfig,
) -> Result<(AccuracyTable, Option<HeldOut>)> {
    if train.schema() != test.schema() {
        return Err(Error::SchemaMismatch {
            expected: train.schema().to_string(),
            found: test.schema().to_string(),
        });
    }
    let all_test: Vec<usize> = (0..test.len()).collect();
    let truth: HashMap<String, SensorType> = (0..test.len())
        .map(|i| (test.id(i).to_string(), test.label(i)))
        .collect();
    let mut full = None;
    let mut columns = Vec::new();
    for &fraction in fractions {
        let plan = SplitPlan::new(fraction, config.seed)?;
        let rounds = plan
            .seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| {
                let subset = if fraction >= 1.0 {
                    train.clone()
                } else {
                    train.subset(&stratified_split(train, fraction, &mut Stream::new(seed))?.train)
                };
                let forest_seed =
                    derive_seed(config.seed, &[FOREST_STREAM, fraction.to_bits(), r as u64]);
                let forest = train_forest(&subset, &config.with_seed(forest_seed))?;
                let preds = predict_rows(&forest, test, &all_test, config);
                let acc = round_accuracy(&preds, test, &all_test);
                Ok((acc, preds))
            })
            .collect::<Result<Vec<_>>>()?;
        let accs: Vec<ClassAccuracy> = rounds.iter().map(|r| r.0).collect();
        let column = AccuracyColumn::from_rounds(fraction_label(fraction), &accs);
        if fraction >= 1.0 {
            full = Some(HeldOut {
                column: column.clone(),
                predictions: rounds.into_iter().next().map(|r| r.1).unwrap_or_default(),
                truth: truth.clone(),
            });
        }
        columns.push(column);
    }
    Ok((AccuracyTable { columns }, full))
}

#[derive(Debug, Clone, Copy)]
pub enum SweepProtocol<'a> {
    /// Leave-one-out within the corpus.
    IntraLoo,
    /// Train on the whole sweep corpus and score each of ten stratified folds
    /// of `test_corpus` with a separately seeded forest.
    InterTenFold { test_corpus: &'a [SensorTrace] },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub window_len: f64,
    pub overall: f64,
    /// Traces too short for this window length.
    pub dropped: Vec<String>,
}

fn labeled_matrix(
    traces: &[SensorTrace],
    window_len: f64,
) -> Result<(LabeledDataset, Vec<String>)> {
    let (matrix, skipped) = FeatureMatrix::from_traces(traces, FeatureSchema::Rich8, window_len)?;
    if matrix.rows.iter().all(|r| r.label.is_none()) {
        return Err(Error::EmptyCurvePoint { window_len });
    }
    Ok((
        LabeledDataset::from_matrix(&matrix)?,
        skipped.into_iter().map(|s| s.trace_id).collect(),
    ))
}

/// Stratified assignment of instances to `k` folds.
pub fn stratified_folds(data: &LabeledDataset, k: usize, rng: &mut Stream) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in SensorType::ALL {
        let mut members: Vec<usize> = (0..data.len())
            .filter(|&i| data.label(i) == class)
            .collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

/// Overall accuracy as a function of window length, re-extracting rich
/// features for every length.
pub fn window_sweep(
    corpus: &[SensorTrace],
    window_lens: &[f64],
    protocol: SweepProtocol<'_>,
    config: &ForestConfig,
) -> Result<Vec<SweepPoint>> {
    if window_lens.is_empty() {
        return Err(Error::InvalidConfig(
            "window sweep needs at least one length".into(),
        ));
    }
    window_lens
        .iter()
        .map(|&window_len| {
            let (train, mut dropped) = labeled_matrix(corpus, window_len)?;
            let overall = match protocol {
                SweepProtocol::IntraLoo => loo_cv(&train, config)?.column.overall(),
                SweepProtocol::InterTenFold { test_corpus } => {
                    let (test, test_dropped) = labeled_matrix(test_corpus, window_len)?;
                    dropped.extend(test_dropped);
                    let folds = stratified_folds(
                        &test,
                        10,
                        &mut Stream::derived(config.seed, &[FOLD_STREAM]),
                    );
                    let scores = folds
                        .par_iter()
                        .enumerate()
                        .filter(|(_, fold)| !fold.is_empty())
                        .map(|(k, fold)| {
                            let seed = derive_seed(config.seed, &[FOLD_STREAM, k as u64]);
                            let forest = train_forest(&train, &config.with_seed(seed))?;
                            let preds = predict_rows(&forest, &test, fold, config);
                            Ok(round_accuracy(&preds, &test, fold).overall())
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let scores: Vec<f64> = scores.into_iter().flatten().collect();
                    (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
                }
            };
            Ok(SweepPoint {
                window_len,
                overall: overall.ok_or(Error::EmptyCurvePoint { window_len })?,
                dropped,
            })
        })
        .collect()
}

pub fn write_sweep_csv(
    points: &[SweepPoint],
    preamble: Preamble,
    out: &mut impl Write,
) -> Result<()> {
    preamble.write(out).map_err(|e| Error::io("<sweep>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_len", "window_mins", "overall_accuracy", "dropped"])?;
    for p in points {
        w.write_record([
            p.window_len.to_string(),
            (p.window_len / 60.0).to_string(),
            p.overall.to_string(),
            p.dropped.len().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<sweep>", e))?;
    Ok(())
}

/// Leave-one-out accuracy of one feature subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetScore {
    pub mask: FeatureMask,
    pub correct: usize,
    pub total: usize,
}

impl SubsetScore {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// LOO accuracy of a single unpruned tree grown on every instance with all
/// of the subset's features considered at each node.
pub fn single_tree_loo(data: &LabeledDataset) -> Result<usize> {
    let config = ForestConfig {
        n_trees: 1,
        m_try: Some(data.feature_count()),
        ..ForestConfig::default()
    };
    let mut correct = 0;
    for held in 0..data.len() {
        let rest: Vec<usize> = (0..data.len()).filter(|&i| i != held).collect();
        let tree = train_forest_with(&data.subset(&rest), &config, Bootstrap::Identity)?;
        if tree.classify_row(data.row(held), config.averaging).label == data.label(held) {
            correct += 1;
        }
    }
    Ok(correct)
}

/// Scores all 255 non-empty subsets of the rich features, best first. Ties
/// go to fewer features, then the smaller mask value.
pub fn feature_subset_search(data: &LabeledDataset) -> Result<Vec<SubsetScore>> {
    if data.schema() != FeatureSchema::Rich8 {
        return Err(Error::SchemaMismatch {
            expected: FeatureSchema::Rich8.to_string(),
            found: data.schema().to_string(),
        });
    }
    if data.len() < 2 {
        return Err(Error::InvalidDataset(
            "subset search needs at least 2 instances".into(),
        ));
    }
    let masks: Vec<FeatureMask> = FeatureMask::all_nonempty().collect();
    let mut scores = masks
        .par_iter()
        .map(|&mask| {
            Ok(SubsetScore {
                mask,
                correct: single_tree_loo(&data.project(mask)?)?,
                total: data.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| {
        b.correct
            .cmp(&a.correct)
            .then(a.mask.len().cmp(&b.mask.len()))
            .then(a.mask.cmp(&b.mask))
    });
    Ok(scores)
}

pub fn write_subsets_csv(
    scores: &[SubsetScore],
    preamble: Preamble,
    out: &mut impl Write,
) -> Result<()> {
    preamble.write(out).map_err(|e| Error::io("<subsets>", e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rank", "mask", "features", "accuracy"])?;
    for (i, s) in scores.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            format!("{:#04x}", s.mask.bits()),
            s.mask.names().join(" "),
            s.accuracy().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<subsets>", e))?;
    Ok(())
}
