use std::collections::HashMap;
use std::io::{BufReader, IsTerminal};
use std::path::Path;

use super::relabel::{self, Reviewer, ScriptedAnswers, TerminalReviewer};
use super::{CliError, Command, EvalCommand, FeatureInput, Outcome, RunConfig, EXIT_CONFIG};
use crate::error::{Error, Result};
use crate::eval::{
    feature_subset_search, inter_corpus, loo_cv, percentage_protocol, window_sweep,
    write_subsets_csv, write_sweep_csv, AccuracyTable, HeldOut, SweepProtocol,
};
use crate::features::{FeatureMatrix, FeatureSchema};
use crate::forest::{train_forest, ForestConfig, LabeledDataset, ModelFile, RandomForest};
use crate::manifest::LabelManifest;
use crate::meta::{self, Preamble};
use crate::synth::{generate_corpus, CorpusConfig};
use crate::trace::{SensorTrace, SensorType};
use crate::uncertainty::{
    correctness_from_truth, entropy_cdf, flag_above_threshold, fmt_rate, misclassification_metrics,
    read_predictions_csv, roc_sweep, threshold_grid, write_predictions_csv, write_roc_csv,
    Prediction,
};

pub(super) fn dispatch(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Synth {
            config: file,
            preset,
            out,
        } => synth(file.as_deref(), preset, &out, config),
        Command::Features { manifest, out } => features(&manifest, &out, config),
        Command::Train { input, out } => train(&input, &out, config),
        Command::Classify { model, input, out } => classify(&model, &input, &out, config),
        Command::Eval { protocol } => eval(protocol, config),
        Command::Flag {
            predictions,
            truth,
            out,
        } => flag(&predictions, truth.as_deref(), &out, config),
        Command::Relabel {
            predictions,
            manifest,
            model,
            budget,
            answers,
            out_manifest,
            out_model,
        } => relabel_cmd(
            &predictions,
            &manifest,
            &model,
            budget,
            answers.as_deref(),
            &out_manifest,
            &out_model,
            config,
        ),
    }
}

fn artifact(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    meta::write_file(path, &buf)
}

fn synth(
    file: Option<&Path>,
    preset: Option<String>,
    out: &Path,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let as_config_error = |error: Error| CliError {
        code: EXIT_CONFIG,
        error,
    };
    let mut corpus_config = match file {
        Some(path) => CorpusConfig::load(path).map_err(as_config_error)?,
        None => CorpusConfig::default(),
    };
    if preset.is_some() {
        corpus_config.preset = preset;
    }
    let preset_name = corpus_config
        .preset
        .clone()
        .unwrap_or_else(|| "default".into());
    let spec = corpus_config
        .resolve(config.forest.seed)
        .map_err(as_config_error)?;
    let corpus = generate_corpus(&spec)?;
    let manifest = corpus.write_to(out)?;
    let preamble = config
        .preamble()
        .with("preset", &preset_name)
        .with("corpus_seed", spec.seed)
        .with("traces", corpus.traces.len());
    artifact(&out.join("manifest.csv"), |buf| {
        preamble.write(buf).map_err(|e| Error::io(out, e))?;
        manifest.write(buf)
    })?;
    let mut json = serde_json::to_vec_pretty(&spec).map_err(Error::from)?;
    json.push(b'\n');
    meta::write_file(&out.join("corpus.json"), &json)?;
    println!("wrote {} traces to {}", corpus.traces.len(), out.display());
    Ok(Outcome::Done)
}

fn load_traces(manifest: &Path) -> Result<Vec<SensorTrace>> {
    LabelManifest::load(manifest)?.load_traces()
}

fn featurize(
    traces: &[SensorTrace],
    schema: FeatureSchema,
    window_len: f64,
) -> Result<FeatureMatrix> {
    let (matrix, skipped) = FeatureMatrix::from_traces(traces, schema, window_len)?;
    for s in skipped {
        eprintln!("warning: skipped trace `{}`: {}", s.trace_id, s.reason);
    }
    Ok(matrix)
}

fn labeled(
    traces: &[SensorTrace],
    schema: FeatureSchema,
    window_len: f64,
) -> Result<LabeledDataset> {
    LabeledDataset::from_matrix(&featurize(traces, schema, window_len)?)
}

fn features(manifest: &Path, out: &Path, config: &RunConfig) -> Result<Outcome, CliError> {
    let matrix = featurize(&load_traces(manifest)?, config.scheme, config.window_len)?;
    matrix.save(out, config.preamble())?;
    println!(
        "wrote {} feature rows to {}",
        matrix.rows.len(),
        out.display()
    );
    Ok(Outcome::Done)
}

/// Loads or computes the feature matrix; a loaded matrix fixes the schema
/// and window length of `config`.
fn input_matrix(input: &FeatureInput, config: &mut RunConfig) -> Result<FeatureMatrix> {
    match (&input.features, &input.manifest) {
        (Some(path), _) => {
            let (matrix, _) = FeatureMatrix::load(path)?;
            config.scheme = matrix.schema;
            config.window_len = matrix.window_len;
            Ok(matrix)
        }
        (None, Some(manifest)) => {
            featurize(&load_traces(manifest)?, config.scheme, config.window_len)
        }
        (None, None) => Err(Error::InvalidConfig("pass --features or --manifest".into())),
    }
}

fn train(input: &FeatureInput, out: &Path, config: &RunConfig) -> Result<Outcome, CliError> {
    let mut config = *config;
    let matrix = input_matrix(input, &mut config)?;
    let data = LabeledDataset::from_matrix(&matrix)?;
    let forest = train_forest(&data, &config.forest)?;
    ModelFile::from_forest(&forest, Some(config.to_json())).save(out)?;
    println!(
        "trained {} trees on {} labeled traces",
        forest.trees().len(),
        data.len()
    );
    Ok(Outcome::Done)
}

/// Loads a model with the run config it was trained under; entropy unit and
/// threshold still come from the command line.
pub(super) fn load_model(path: &Path, config: &RunConfig) -> Result<(RandomForest, RunConfig)> {
    let file = ModelFile::load(path)?;
    let mut effective = file
        .run_config
        .clone()
        .and_then(|v| serde_json::from_value::<RunConfig>(v).ok())
        .unwrap_or(*config);
    effective.entropy_base = config.entropy_base;
    effective.threshold = config.threshold;
    let forest = file.into_forest()?;
    effective.forest = *forest.config();
    effective.scheme = forest.schema();
    Ok((forest, effective))
}

pub(super) fn predict_matrix(
    forest: &RandomForest,
    matrix: &FeatureMatrix,
) -> Result<Vec<Prediction>> {
    matrix
        .rows
        .iter()
        .map(|row| {
            let c = crate::forest::classify(forest, &row.features, forest.config().averaging)?;
            Ok(Prediction::new(row.trace_id.clone(), c))
        })
        .collect()
}

fn classify(
    model: &Path,
    input: &FeatureInput,
    out: &Path,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let (forest, mut config) = load_model(model, config)?;
    let matrix = match (&input.features, &input.manifest) {
        (Some(_), _) => {
            let mut loaded = config;
            let matrix = input_matrix(input, &mut loaded)?;
            config.window_len = loaded.window_len;
            matrix
        }
        _ => input_matrix(input, &mut config)?,
    };
    let predictions = predict_matrix(&forest, &matrix)?;
    artifact(out, |buf| {
        write_predictions_csv(&predictions, config.entropy_base, config.preamble(), buf)
    })?;
    println!(
        "wrote {} predictions to {}",
        predictions.len(),
        out.display()
    );
    Ok(Outcome::Done)
}

fn truth_of(manifest: &Path) -> Result<HashMap<String, SensorType>> {
    Ok(LabelManifest::load(manifest)?
        .rows
        .into_iter()
        .filter_map(|r| r.label.map(|l| (r.trace_id, l)))
        .collect())
}

fn flag(
    predictions: &Path,
    truth: Option<&Path>,
    out: &Path,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let (preds, _) = read_predictions_csv(predictions)?;
    let report = flag_above_threshold(&preds, config.threshold, config.entropy_base);
    let mut preamble = config.preamble();
    let mut outcome = Outcome::Done;
    if let Some(truth) = truth {
        let correctness = correctness_from_truth(&preds, &truth_of(truth)?)?;
        let m = misclassification_metrics(&report, &correctness)?;
        let line = format!(
            "s1={} s2={} s3={} s4={} s5={} tpr={} fpr={} ppv={}",
            m.flagged,
            m.flagged_wrong,
            m.flagged_correct,
            m.wrong,
            m.correct,
            fmt_rate(m.tpr),
            fmt_rate(m.fpr),
            fmt_rate(m.ppv)
        );
        println!("{line}");
        for (k, v) in [("tpr", m.tpr), ("fpr", m.fpr), ("ppv", m.ppv)] {
            preamble.set(k, fmt_rate(v));
        }
        if m.any_undefined() {
            outcome = Outcome::UndefinedMetric;
        }
    }
    artifact(out, |buf| report.write_csv(preamble, buf))?;
    println!(
        "flagged {} of {} predictions",
        report.flagged().len(),
        report.rows.len()
    );
    Ok(outcome)
}

fn write_tables(
    out: &Path,
    preamble: Preamble,
    main: &AccuracyTable,
    baseline: Option<&AccuracyTable>,
) -> Result<()> {
    artifact(&out.join("accuracy.csv"), |buf| {
        main.write_csv(preamble.clone(), buf)
    })?;
    if let Some(b) = baseline {
        let preamble = preamble.clone().with("scheme", FeatureSchema::Baseline2);
        artifact(&out.join("accuracy_baseline.csv"), |buf| {
            b.write_csv(preamble, buf)
        })?;
    }
    let text = main.render_text(baseline);
    print!("{text}");
    meta::write_file(&out.join("accuracy.txt"), text.as_bytes())
}

fn write_held_out(out: &Path, held: &HeldOut, config: &RunConfig) -> Result<()> {
    artifact(&out.join("predictions.csv"), |buf| {
        write_predictions_csv(
            &held.predictions,
            config.entropy_base,
            config.preamble(),
            buf,
        )
    })
}

/// The baseline has two features, so `m_try` falls back to its default.
fn baseline_forest(forest: &ForestConfig) -> ForestConfig {
    ForestConfig {
        m_try: None,
        ..*forest
    }
}

fn eval(protocol: EvalCommand, config: &RunConfig) -> Result<Outcome, CliError> {
    let forest = &config.forest;
    match protocol {
        EvalCommand::Loo {
            manifest,
            baseline,
            out,
        } => {
            let traces = load_traces(&manifest)?;
            let held = loo_cv(&labeled(&traces, config.scheme, config.window_len)?, forest)?;
            let base = baseline
                .then(|| -> Result<AccuracyTable> {
                    let data = labeled(&traces, FeatureSchema::Baseline2, config.window_len)?;
                    Ok(AccuracyTable {
                        columns: vec![loo_cv(&data, &baseline_forest(forest))?.column],
                    })
                })
                .transpose()?;
            let table = AccuracyTable {
                columns: vec![held.column.clone()],
            };
            let preamble = config.preamble().with("protocol", "loo");
            write_tables(&out, preamble, &table, base.as_ref())?;
            write_held_out(&out, &held, config)?;
        }
        EvalCommand::Percentage {
            manifest,
            fractions,
            baseline,
            out,
        } => {
            let traces = load_traces(&manifest)?;
            let table = percentage_protocol(
                &labeled(&traces, config.scheme, config.window_len)?,
                &fractions,
                forest,
            )?;
            let base = baseline
                .then(|| {
                    let data = labeled(&traces, FeatureSchema::Baseline2, config.window_len)?;
                    percentage_protocol(&data, &fractions, &baseline_forest(forest))
                })
                .transpose()?;
            let preamble = config.preamble().with("protocol", "percentage");
            write_tables(&out, preamble, &table, base.as_ref())?;
        }
        EvalCommand::Inter {
            train,
            test,
            fractions,
            baseline,
            out,
        } => {
            let a = load_traces(&train)?;
            let b = load_traces(&test)?;
            let (table, held) = inter_corpus(
                &labeled(&a, config.scheme, config.window_len)?,
                &labeled(&b, config.scheme, config.window_len)?,
                &fractions,
                forest,
            )?;
            let base = baseline
                .then(|| {
                    inter_corpus(
                        &labeled(&a, FeatureSchema::Baseline2, config.window_len)?,
                        &labeled(&b, FeatureSchema::Baseline2, config.window_len)?,
                        &fractions,
                        &baseline_forest(forest),
                    )
                    .map(|(t, _)| t)
                })
                .transpose()?;
            let preamble = config.preamble().with("protocol", "inter");
            write_tables(&out, preamble, &table, base.as_ref())?;
            if let Some(held) = held {
                write_held_out(&out, &held, config)?;
            }
        }
        EvalCommand::Sweep {
            manifest,
            test,
            windows_mins,
            out,
        } => {
            let traces = load_traces(&manifest)?;
            let test_traces = test.as_deref().map(load_traces).transpose()?;
            let protocol = match &test_traces {
                Some(t) => SweepProtocol::InterTenFold { test_corpus: t },
                None => SweepProtocol::IntraLoo,
            };
            let lens: Vec<f64> = windows_mins.iter().map(|m| m * 60.0).collect();
            let points = window_sweep(&traces, &lens, protocol, forest)?;
            for p in &points {
                println!(
                    "{:>6} min  {:.3}  ({} dropped)",
                    p.window_len / 60.0,
                    p.overall,
                    p.dropped.len()
                );
            }
            let preamble = config
                .preamble()
                .with(
                    "protocol",
                    if test.is_some() {
                        "sweep_inter"
                    } else {
                        "sweep_intra"
                    },
                )
                .with("scheme", FeatureSchema::Rich8);
            artifact(&out.join("sweep.csv"), |buf| {
                write_sweep_csv(&points, preamble, buf)
            })?;
        }
        EvalCommand::Roc {
            predictions,
            truth,
            steps,
            out,
        } => {
            let (preds, _) = read_predictions_csv(&predictions)?;
            let correctness = correctness_from_truth(&preds, &truth_of(&truth)?)?;
            let base = config.entropy_base;
            let rows = roc_sweep(
                &preds,
                &correctness,
                &threshold_grid(base, steps.max(1)),
                base,
            )?;
            let cdf = entropy_cdf(&preds, &correctness, base)?;
            for (name, group) in [("correct", &cdf.correct), ("wrong", &cdf.wrong)] {
                match group {
                    Some(c) => println!(
                        "{name}: {} predictions, mean entropy {:.4} {base}",
                        c.points.len(),
                        c.mean()
                    ),
                    None => println!("{name}: none"),
                }
            }
            let preamble = config.preamble().with("protocol", "roc");
            artifact(&out.join("roc.csv"), |buf| {
                write_roc_csv(&rows, preamble.clone(), buf)
            })?;
            artifact(&out.join("cdf.csv"), |buf| cdf.write_csv(preamble, buf))?;
        }
        EvalCommand::Subsets { manifest, out } => {
            let data = labeled(
                &load_traces(&manifest)?,
                FeatureSchema::Rich8,
                config.window_len,
            )?;
            let scores = feature_subset_search(&data)?;
            for s in scores.iter().take(5) {
                println!(
                    "{:#04x}  {:.3}  {}",
                    s.mask.bits(),
                    s.accuracy(),
                    s.mask.names().join(" ")
                );
            }
            let preamble = config
                .preamble()
                .with("protocol", "subsets")
                .with("scheme", FeatureSchema::Rich8);
            artifact(&out.join("subsets.csv"), |buf| {
                write_subsets_csv(&scores, preamble, buf)
            })?;
        }
    }
    Ok(Outcome::Done)
}

#[allow(clippy::too_many_arguments)]
fn relabel_cmd(
    predictions: &Path,
    manifest_path: &Path,
    model: &Path,
    budget: usize,
    answers: Option<&Path>,
    out_manifest: &Path,
    out_model: &Path,
    config: &RunConfig,
) -> Result<Outcome, CliError> {
    let manifest = LabelManifest::load(manifest_path)?;
    let (preds, _) = read_predictions_csv(predictions)?;
    let (forest, effective) = load_model(model, config)?;
    let mut reviewer: Box<dyn Reviewer> = match answers {
        Some(path) => Box::new(ScriptedAnswers::load(path)?),
        None if budget == 0 => Box::new(ScriptedAnswers::default()),
        None if std::io::stdin().is_terminal() => Box::new(TerminalReviewer::new(
            BufReader::new(std::io::stdin()),
            std::io::stderr(),
        )),
        None => return Err(Error::NonInteractiveWithoutAnswers.into()),
    };
    let matrix = if budget == 0 {
        FeatureMatrix {
            schema: effective.scheme,
            window_len: effective.window_len,
            rows: Vec::new(),
        }
    } else {
        featurize(
            &manifest.load_traces()?,
            effective.scheme,
            effective.window_len,
        )?
    };
    let outcome = relabel::review_loop(
        &manifest,
        &matrix,
        preds,
        &effective.forest,
        budget,
        reviewer.as_mut(),
    )?;
    match &outcome.forest {
        None => {
            // nothing changed: copy inputs byte for byte
            let bytes = std::fs::read(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
            meta::write_file(out_manifest, &bytes)?;
            let bytes = std::fs::read(model).map_err(|e| Error::io(model, e))?;
            meta::write_file(out_model, &bytes)?;
            drop(forest);
        }
        Some(retrained) => {
            let preamble = effective
                .preamble()
                .with("relabeled", outcome.changed.len());
            artifact(out_manifest, |buf| {
                preamble
                    .write(buf)
                    .map_err(|e| Error::io(out_manifest, e))?;
                outcome.manifest.write(buf)
            })?;
            ModelFile::from_forest(retrained, Some(effective.to_json())).save(out_model)?;
        }
    }
    println!(
        "reviewed {}, changed {} label(s){}",
        outcome.reviewed.len(),
        outcome.changed.len(),
        if outcome.forest.is_some() {
            ", model retrained"
        } else {
            ""
        }
    );
    Ok(Outcome::Done)
}
