//! Review loop: show the most uncertain prediction, take the operator's
//! answer, retrain after every label change, re-rank, repeat.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::forest::{classify, train_forest, ForestConfig, LabeledDataset, RandomForest};
use crate::manifest::LabelManifest;
use crate::meta;
use crate::trace::SensorType;
use crate::uncertainty::{rank_by_uncertainty, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Answer {
    /// Keep the proposed label: the manifest label, or the prediction for an
    /// unlabeled trace.
    Confirm,
    Correct(SensorType),
    Stop,
}

/// What the operator is shown for one trace.
#[derive(Debug, Clone)]
pub struct ReviewItem<'a> {
    pub prediction: &'a Prediction,
    pub current: Option<SensorType>,
}

pub trait Reviewer {
    fn review(&mut self, item: &ReviewItem<'_>) -> Result<Answer>;
}

/// Answers read from a `trace_id,label` CSV; unlisted traces are confirmed.
#[derive(Debug, Clone, Default)]
pub struct ScriptedAnswers {
    labels: HashMap<String, SensorType>,
}

impl ScriptedAnswers {
    pub fn new(labels: HashMap<String, SensorType>) -> Self {
        ScriptedAnswers { labels }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = meta::read_to_string(path)?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["trace_id", "label"] {
            return Err(Error::parse(path, 1, "expected header `trace_id,label`"));
        }
        let mut labels = HashMap::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let label = record[1]
                .parse()
                .map_err(|e: Error| Error::parse(path, line, e.to_string()))?;
            labels.insert(record[0].to_string(), label);
        }
        Ok(ScriptedAnswers { labels })
    }
}

impl Reviewer for ScriptedAnswers {
    fn review(&mut self, item: &ReviewItem<'_>) -> Result<Answer> {
        Ok(match self.labels.get(&item.prediction.trace_id) {
            Some(&l) if Some(l) != item.current => Answer::Correct(l),
            _ => Answer::Confirm,
        })
    }
}

/// Prompts on `out`, reads one line per item from `input`.
pub struct TerminalReviewer<R, W> {
    input: R,
    out: W,
}

impl<R: BufRead, W: Write> TerminalReviewer<R, W> {
    pub fn new(input: R, out: W) -> Self {
        TerminalReviewer { input, out }
    }
}

impl<R: BufRead, W: Write> Reviewer for TerminalReviewer<R, W> {
    fn review(&mut self, item: &ReviewItem<'_>) -> Result<Answer> {
        let p = item.prediction;
        let io = |e| Error::io("<terminal>", e);
        loop {
            write!(
                self.out,
                "{}: predicted {} (entropy {:.4} nats), label {}\n  [enter] confirm, type name to correct, q to stop: ",
                p.trace_id,
                p.predicted,
                p.entropy,
                item.current.map_or("none", SensorType::name)
            )
            .map_err(io)?;
            self.out.flush().map_err(io)?;
            let mut line = String::new();
            if self.input.read_line(&mut line).map_err(io)? == 0 {
                return Ok(Answer::Stop);
            }
            match line.trim() {
                "" | "y" => return Ok(Answer::Confirm),
                "q" => return Ok(Answer::Stop),
                name => match name.parse() {
                    Ok(t) => return Ok(Answer::Correct(t)),
                    Err(e) => writeln!(self.out, "  {e}").map_err(io)?,
                },
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelabelOutcome {
    pub manifest: LabelManifest,
    /// `None` when no label changed.
    pub forest: Option<RandomForest>,
    pub reviewed: Vec<(String, Answer)>,
    pub changed: Vec<String>,
}

fn training_set(matrix: &FeatureMatrix, manifest: &LabelManifest) -> Result<LabeledDataset> {
    let labels: HashMap<&str, SensorType> = manifest
        .rows
        .iter()
        .filter_map(|r| r.label.map(|l| (r.trace_id.as_str(), l)))
        .collect();
    LabeledDataset::new(
        matrix.schema,
        matrix.rows.iter().filter_map(|r| {
            labels
                .get(r.trace_id.as_str())
                .map(|&l| (r.trace_id.clone(), r.features.clone(), l))
        }),
    )
}

/// Reviews up to `budget` traces, most uncertain first. Each change is
/// written to the manifest and the forest is retrained on every labeled
/// trace in `matrix`; predictions for the unreviewed traces are then
/// recomputed to pick the next one.
pub fn review_loop(
    manifest: &LabelManifest,
    matrix: &FeatureMatrix,
    predictions: Vec<Prediction>,
    config: &ForestConfig,
    budget: usize,
    reviewer: &mut dyn Reviewer,
) -> Result<RelabelOutcome> {
    let mut manifest = manifest.clone();
    let mut predictions = predictions;
    let mut forest = None;
    let mut reviewed = Vec::new();
    let mut seen = HashSet::new();
    let mut changed = Vec::new();

    while reviewed.len() < budget {
        let next = rank_by_uncertainty(&predictions)
            .into_iter()
            .find(|p| !seen.contains(&p.trace_id))
            .cloned();
        let Some(pred) = next else { break };
        let Some(row) = manifest
            .rows
            .iter()
            .position(|r| r.trace_id == pred.trace_id)
        else {
            return Err(Error::InvalidDataset(format!(
                "`{}` is not in the manifest",
                pred.trace_id
            )));
        };
        let current = manifest.rows[row].label;
        let answer = reviewer.review(&ReviewItem {
            prediction: &pred,
            current,
        })?;
        if answer == Answer::Stop {
            break;
        }
        seen.insert(pred.trace_id.clone());
        reviewed.push((pred.trace_id.clone(), answer));
        let new_label = match answer {
            Answer::Correct(l) => l,
            _ => current.unwrap_or(pred.predicted),
        };
        if Some(new_label) == current {
            continue;
        }
        manifest.rows[row].label = Some(new_label);
        changed.push(pred.trace_id.clone());

        let retrained = train_forest(&training_set(matrix, &manifest)?, config)?;
        predictions = matrix
            .rows
            .iter()
            .map(|r| {
                Ok(Prediction::new(
                    r.trace_id.clone(),
                    classify(&retrained, &r.features, config.averaging)?,
                ))
            })
            .collect::<Result<_>>()?;
        forest = Some(retrained);
    }
    Ok(RelabelOutcome {
        manifest,
        forest,
        reviewed,
        changed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureRow, FeatureSchema, FeatureVector};
    use crate::forest::ClassProbabilities;
    use crate::manifest::ManifestRow;
    use std::io::Cursor;

    fn fixture() -> (LabelManifest, FeatureMatrix, Vec<Prediction>) {
        let mut rows = Vec::new();
        let mut mrows = Vec::new();
        let mut preds = Vec::new();
        for i in 0..6 {
            let id = format!("t{i}");
            let label = if i < 3 {
                SensorType::Co2
            } else {
                SensorType::Humidity
            };
            rows.push(FeatureRow {
                trace_id: id.clone(),
                label: Some(label),
                features: FeatureVector::new(vec![i as f64, 0.0], FeatureSchema::Baseline2)
                    .unwrap(),
            });
            mrows.push(ManifestRow {
                trace_id: id.clone(),
                path: format!("{id}.csv"),
                label: Some(label),
            });
            let p = 0.5 + 0.08 * i as f64;
            preds.push(Prediction::from_probs(
                id,
                ClassProbabilities::new([p, 1.0 - p, 0.0, 0.0, 0.0, 0.0]),
            ));
        }
        let matrix = FeatureMatrix {
            schema: FeatureSchema::Baseline2,
            window_len: 2700.0,
            rows,
        };
        (
            LabelManifest {
                rows: mrows,
                base_dir: ".".into(),
            },
            matrix,
            preds,
        )
    }

    #[test]
    fn zero_budget_asks_nothing() {
        let (m, x, p) = fixture();
        struct Never;
        impl Reviewer for Never {
            fn review(&mut self, _: &ReviewItem<'_>) -> Result<Answer> {
                panic!("asked")
            }
        }
        let out = review_loop(&m, &x, p, &ForestConfig::default(), 0, &mut Never).unwrap();
        assert!(out.forest.is_none());
        assert_eq!(out.manifest, m);
    }

    #[test]
    fn confirming_everything_changes_nothing() {
        let (m, x, p) = fixture();
        let out = review_loop(
            &m,
            &x,
            p,
            &ForestConfig::default(),
            10,
            &mut ScriptedAnswers::default(),
        )
        .unwrap();
        assert_eq!(out.reviewed.len(), 6);
        assert!(out.changed.is_empty() && out.forest.is_none());
        assert_eq!(out.manifest.to_bytes().unwrap(), m.to_bytes().unwrap());
    }

    #[test]
    fn most_uncertain_first_and_correction_retrains() {
        let (m, x, p) = fixture();
        let mut answers = ScriptedAnswers::new([("t0".to_string(), SensorType::Humidity)].into());
        let out = review_loop(&m, &x, p, &ForestConfig::default(), 1, &mut answers).unwrap();
        // t0 has probabilities {0.5, 0.5}: the highest entropy
        assert_eq!(
            out.reviewed,
            vec![("t0".to_string(), Answer::Correct(SensorType::Humidity))]
        );
        assert_eq!(out.manifest.label_of("t0"), Some(SensorType::Humidity));
        assert!(out.forest.is_some());
    }

    #[test]
    fn terminal_answers() {
        let (m, x, p) = fixture();
        let input = Cursor::new("bogus\nhumidity\n\nq\n");
        let mut out = Vec::new();
        let mut reviewer = TerminalReviewer::new(input, &mut out);
        let res = review_loop(&m, &x, p, &ForestConfig::default(), 5, &mut reviewer).unwrap();
        assert_eq!(res.reviewed.len(), 2);
        assert_eq!(res.reviewed[0].1, Answer::Correct(SensorType::Humidity));
        assert_eq!(res.reviewed[1].1, Answer::Confirm);
        assert!(String::from_utf8(out)
            .unwrap()
            .contains("unknown sensor type `bogus`"));
    }
}
