//! Windowed median/variance features and the whole-trace baseline.
//!
//! The rich feature vector summarizes the per-window medians (MED) and
//! variances (VAR) of a trace with their min, max, median and variance, in
//! this order:
//!
//! `[min(MED), max(MED), median(MED), var(MED), min(VAR), max(VAR), median(VAR), var(VAR)]`
//!
//! Values are used raw. Absolute amplitude is what separates most sensor
//! types, so no scaling is applied.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meta::{self, Preamble};
use crate::stats;
use crate::trace::{segment_windows, window_stats, SensorTrace, SensorType};

/// Default window length: 45 minutes.
pub const DEFAULT_WINDOW_LEN: f64 = 2700.0;

pub const RICH8_NAMES: [&str; 8] = [
    "min_med",
    "max_med",
    "median_med",
    "var_med",
    "min_var",
    "max_var",
    "median_var",
    "var_var",
];

/// Per-window medians and variances, entry `i` of each from window `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MedVarVectors {
    pub med: Vec<f64>,
    pub var: Vec<f64>,
    pub window_len: f64,
}

/// A subset of the eight rich features; bit `i` selects feature `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureMask(u8);

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask(0xFF);

    pub fn new(bits: u8) -> Result<FeatureMask> {
        if bits == 0 {
            return Err(Error::EmptyMask);
        }
        Ok(FeatureMask(bits))
    }

    pub fn from_indices(indices: &[usize]) -> Result<FeatureMask> {
        let bits = indices.iter().try_fold(0u8, |acc, &i| {
            (i < 8)
                .then(|| acc | (1 << i))
                .ok_or_else(|| Error::InvalidDataset(format!("feature index {i} out of range")))
        })?;
        FeatureMask::new(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, index: usize) -> bool {
        index < 8 && self.0 & (1 << index) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..8).filter(move |&i| self.contains(i))
    }

    /// All 255 non-empty masks, ascending.
    pub fn all_nonempty() -> impl Iterator<Item = FeatureMask> {
        (1..=255u8).map(FeatureMask)
    }

    pub fn names(self) -> Vec<&'static str> {
        self.indices().map(|i| RICH8_NAMES[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSchema {
    Rich8,
    Baseline2,
    Subset(FeatureMask),
}

impl FeatureSchema {
    pub fn len(self) -> usize {
        match self {
            FeatureSchema::Rich8 => 8,
            FeatureSchema::Baseline2 => 2,
            FeatureSchema::Subset(mask) => mask.len(),
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for FeatureSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureSchema::Rich8 => f.write_str("rich8"),
            FeatureSchema::Baseline2 => f.write_str("baseline2"),
            FeatureSchema::Subset(mask) => write!(f, "subset:{:#04x}", mask.bits()),
        }
    }
}

impl FromStr for FeatureSchema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config {
            key: "scheme".into(),
            message: format!("unknown feature scheme `{s}`"),
        };
        match s {
            "rich8" => Ok(FeatureSchema::Rich8),
            "baseline2" => Ok(FeatureSchema::Baseline2),
            _ => {
                let hex = s.strip_prefix("subset:0x").ok_or_else(bad)?;
                let bits = u8::from_str_radix(hex, 16).map_err(|_| bad())?;
                Ok(FeatureSchema::Subset(FeatureMask::new(bits)?))
            }
        }
    }
}

impl serde::Serialize for FeatureSchema {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for FeatureSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    schema: FeatureSchema,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, schema: FeatureSchema) -> Result<FeatureVector> {
        if values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: format!("{schema} ({} values)", schema.len()),
                found: format!("{} values", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite feature value".into()));
        }
        Ok(FeatureVector { values, schema })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn schema(&self) -> FeatureSchema {
        self.schema
    }
}

pub fn extract_med_var(trace: &SensorTrace, window_len: f64) -> Result<MedVarVectors> {
    let (med, var) = segment_windows(trace, window_len)?
        .iter()
        .map(window_stats)
        .unzip();
    Ok(MedVarVectors {
        med,
        var,
        window_len,
    })
}

fn describe(xs: &[f64]) -> [f64; 4] {
    let (median, variance) = stats::median_and_variance(xs);
    [stats::min(xs), stats::max(xs), median, variance]
}

pub fn summarize(mv: &MedVarVectors) -> FeatureVector {
    let mut values = Vec::with_capacity(8);
    values.extend(describe(&mv.med));
    values.extend(describe(&mv.var));
    FeatureVector {
        values,
        schema: FeatureSchema::Rich8,
    }
}

/// Median and variance over every sample, without windowing.
pub fn extract_baseline(trace: &SensorTrace) -> FeatureVector {
    let (median, variance) = stats::median_and_variance(trace.values());
    FeatureVector {
        values: vec![median, variance],
        schema: FeatureSchema::Baseline2,
    }
}

pub fn project(fv: &FeatureVector, mask: FeatureMask) -> Result<FeatureVector> {
    if fv.schema != FeatureSchema::Rich8 {
        return Err(Error::SchemaMismatch {
            expected: FeatureSchema::Rich8.to_string(),
            found: fv.schema.to_string(),
        });
    }
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    Ok(FeatureVector {
        values: mask.indices().map(|i| fv.values[i]).collect(),
        schema: FeatureSchema::Subset(mask),
    })
}

/// Computes the feature vector of `trace` under `schema`.
pub fn extract(
    trace: &SensorTrace,
    schema: FeatureSchema,
    window_len: f64,
) -> Result<FeatureVector> {
    match schema {
        FeatureSchema::Baseline2 => Ok(extract_baseline(trace)),
        FeatureSchema::Rich8 => Ok(summarize(&extract_med_var(trace, window_len)?)),
        FeatureSchema::Subset(mask) => {
            project(&summarize(&extract_med_var(trace, window_len)?), mask)
        }
    }
}

/// One featurized trace.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub trace_id: String,
    pub label: Option<SensorType>,
    pub features: FeatureVector,
}

/// A featurized corpus plus the traces that could not be featurized.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub schema: FeatureSchema,
    pub window_len: f64,
    pub rows: Vec<FeatureRow>,
}

/// A trace that was skipped, with the reason.
#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub trace_id: String,
    pub reason: String,
}

impl FeatureMatrix {
    /// Featurizes traces in parallel; output order follows input order.
    /// Traces too short for one window are returned as skipped.
    pub fn from_traces(
        traces: &[SensorTrace],
        schema: FeatureSchema,
        window_len: f64,
    ) -> Result<(FeatureMatrix, Vec<Skipped>)> {
        let results: Vec<Result<FeatureVector>> = traces
            .par_iter()
            .map(|t| extract(t, schema, window_len))
            .collect();
        let mut rows = Vec::with_capacity(traces.len());
        let mut skipped = Vec::new();
        for (trace, result) in traces.iter().zip(results) {
            match result {
                Ok(features) => rows.push(FeatureRow {
                    trace_id: trace.id().to_string(),
                    label: trace.label(),
                    features,
                }),
                Err(e @ Error::NoWindows { .. }) => skipped.push(Skipped {
                    trace_id: trace.id().to_string(),
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        Ok((
            FeatureMatrix {
                schema,
                window_len,
                rows,
            },
            skipped,
        ))
    }

    pub fn write_csv(&self, preamble: Preamble, out: &mut impl Write) -> Result<()> {
        let preamble = preamble
            .with("schema", self.schema)
            .with("window_len", self.window_len);
        preamble
            .write(out)
            .map_err(|e| Error::io("<feature matrix>", e))?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["trace_id".to_string(), "label".to_string()];
        header.extend((0..self.schema.len()).map(|i| format!("f{i}")));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![
                row.trace_id.clone(),
                row.label.map(|l| l.name().to_string()).unwrap_or_default(),
            ];
            record.extend(row.features.values().iter().map(|v| v.to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<feature matrix>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path, preamble: Preamble) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(preamble, &mut buf)?;
        meta::write_file(path, &buf)
    }

    pub fn load(path: &Path) -> Result<(FeatureMatrix, Preamble)> {
        let text = meta::read_to_string(path)?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<(FeatureMatrix, Preamble)> {
        let (preamble, body) = Preamble::split(text);
        let offset = meta::preamble_lines(text, body);
        let schema: FeatureSchema = preamble
            .get("schema")
            .ok_or_else(|| Error::parse(origin, 1, "missing `# schema=` line"))?
            .parse()?;
        let window_len: f64 = preamble
            .get("window_len")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::parse(origin, 1, "missing or bad `# window_len=` line"))?;
        let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        let width = 2 + schema.len();
        if headers.len() != width || &headers[0] != "trace_id" || &headers[1] != "label" {
            return Err(Error::parse(
                origin,
                offset + 1,
                format!("expected header trace_id,label,f0..f{}", schema.len() - 1),
            ));
        }
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = offset + record.position().map_or(0, |p| p.line());
            let label = match &record[1] {
                "" => None,
                name => Some(
                    name.parse()
                        .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?,
                ),
            };
            let values = (2..width)
                .map(|i| {
                    record[i].parse::<f64>().map_err(|_| {
                        Error::parse(origin, line, format!("bad number in column {}", i + 1))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let features = FeatureVector::new(values, schema)
                .map_err(|e| Error::parse(origin, line, e.to_string()))?;
            rows.push(FeatureRow {
                trace_id: record[0].to_string(),
                label,
                features,
            });
        }
        Ok((
            FeatureMatrix {
                schema,
                window_len,
                rows,
            },
            preamble,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::validate_trace;
    use proptest::prelude::*;

    fn mv(med: &[f64], var: &[f64]) -> MedVarVectors {
        MedVarVectors {
            med: med.to_vec(),
            var: var.to_vec(),
            window_len: DEFAULT_WINDOW_LEN,
        }
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    /// Two 100 s windows holding {1,2,3} and {10,10,16}.
    fn hand_trace() -> SensorTrace {
        validate_trace(
            "hand",
            [
                (0.0, 1.0),
                (30.0, 2.0),
                (60.0, 3.0),
                (100.0, 10.0),
                (130.0, 10.0),
                (160.0, 16.0),
                (200.0, 0.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn med_var_of_hand_trace() {
        let got = extract_med_var(&hand_trace(), 100.0).unwrap();
        assert!(close(&got.med, &[2.0, 10.0]));
        assert!(close(&got.var, &[2.0 / 3.0, 8.0]));
    }

    #[test]
    fn med_var_of_constant_trace() {
        let t = validate_trace("c", (0..=40).map(|i| (i as f64 * 10.0, 5.0))).unwrap();
        let got = extract_med_var(&t, 100.0).unwrap();
        assert_eq!(got.med, vec![5.0; 4]);
        assert_eq!(got.var, vec![0.0; 4]);
        assert_eq!(
            summarize(&got).values(),
            &[5.0, 5.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn single_window_trace() {
        let t = validate_trace("s", [(0.0, 1.0), (50.0, 3.0), (120.0, 9.0)]).unwrap();
        let got = extract_med_var(&t, 100.0).unwrap();
        assert_eq!(got.med.len(), 1);
        assert_eq!(got.var.len(), 1);
    }

    #[test]
    fn summarize_hand_example() {
        let f = summarize(&mv(&[2.0, 10.0], &[2.0 / 3.0, 8.0]));
        let expected = [
            2.0,
            10.0,
            6.0,
            16.0,
            2.0 / 3.0,
            8.0,
            13.0 / 3.0,
            121.0 / 9.0,
        ];
        assert!(close(f.values(), &expected), "{:?}", f.values());
    }

    #[test]
    fn summarize_single_window() {
        let f = summarize(&mv(&[7.0], &[3.0]));
        assert_eq!(f.values(), &[7.0, 7.0, 7.0, 0.0, 3.0, 3.0, 3.0, 0.0]);
    }

    #[test]
    fn baseline_examples() {
        let t = validate_trace("b", [(0.0, 1.0), (7.0, 2.0), (90.0, 3.0)]).unwrap();
        let f = extract_baseline(&t);
        assert_eq!(f.values()[0], 2.0);
        assert!((f.values()[1] - 2.0 / 3.0).abs() < 1e-15);
        let c = validate_trace("c", [(0.0, 4.5), (1.0, 4.5)]).unwrap();
        assert_eq!(extract_baseline(&c).values(), &[4.5, 0.0]);
    }

    #[test]
    fn project_best_rice_subset() {
        let f = summarize(&mv(&[2.0, 10.0], &[2.0 / 3.0, 8.0]));
        let mask = FeatureMask::from_indices(&[0, 2, 6, 7]).unwrap();
        let p = project(&f, mask).unwrap();
        assert!(close(p.values(), &[2.0, 6.0, 13.0 / 3.0, 121.0 / 9.0]));
        assert_eq!(project(&f, FeatureMask::ALL).unwrap().values(), f.values());
        assert_eq!(
            project(&f, FeatureMask::new(0b1000).unwrap())
                .unwrap()
                .values(),
            &[16.0]
        );
        assert!(matches!(FeatureMask::new(0), Err(Error::EmptyMask)));
    }

    #[test]
    fn smooth_and_shuffled_share_baseline_not_rich() {
        let smooth: Vec<(f64, f64)> = (0..2000)
            .map(|i| (i as f64 * 60.0, 70.0 + 3.0 * (i as f64 / 300.0).sin()))
            .collect();
        let mut values: Vec<f64> = smooth.iter().map(|s| s.1).collect();
        crate::rng::Stream::new(3).shuffle(&mut values);
        let shuffled = smooth.iter().zip(values).map(|(s, v)| (s.0, v));
        let a = validate_trace("smooth", smooth.iter().copied()).unwrap();
        let b = validate_trace("shuffled", shuffled).unwrap();
        assert_eq!(extract_baseline(&a), extract_baseline(&b));
        assert_ne!(
            extract(&a, FeatureSchema::Rich8, DEFAULT_WINDOW_LEN).unwrap(),
            extract(&b, FeatureSchema::Rich8, DEFAULT_WINDOW_LEN).unwrap()
        );
    }

    #[test]
    fn schema_names_parse() {
        for s in [
            FeatureSchema::Rich8,
            FeatureSchema::Baseline2,
            FeatureSchema::Subset(FeatureMask(0x8d)),
        ] {
            assert_eq!(s.to_string().parse::<FeatureSchema>().unwrap(), s);
        }
        assert!("rich9".parse::<FeatureSchema>().is_err());
    }

    #[test]
    fn matrix_csv_round_trip() {
        let trace = hand_trace().with_label(Some(SensorType::Humidity));
        let (m, skipped) =
            FeatureMatrix::from_traces(&[trace], FeatureSchema::Rich8, 100.0).unwrap();
        assert!(skipped.is_empty());
        let mut buf = Vec::new();
        m.write_csv(Preamble::new(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("trace_id,label,f0,f1,f2,f3,f4,f5,f6,f7\nhand,humidity,2,10,6,16,"));
        let (back, pre) = FeatureMatrix::parse(&text, Path::new("mem")).unwrap();
        assert_eq!(back, m);
        assert_eq!(pre.get("schema"), Some("rich8"));
    }

    #[test]
    fn short_traces_are_skipped() {
        let short = validate_trace("short", [(0.0, 1.0), (10.0, 1.0)]).unwrap();
        let (m, skipped) =
            FeatureMatrix::from_traces(&[hand_trace(), short], FeatureSchema::Rich8, 100.0)
                .unwrap();
        assert_eq!(m.rows.len(), 1);
        assert_eq!(skipped[0].trace_id, "short");
    }

    fn arb_trace() -> impl Strategy<Value = SensorTrace> {
        prop::collection::vec(-50.0f64..50.0, 20..200).prop_map(|vals| {
            validate_trace(
                "p",
                vals.into_iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64 * 13.0, v)),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn rich8_order_and_signs(t in arb_trace()) {
            let f = extract(&t, FeatureSchema::Rich8, 130.0).unwrap();
            let v = f.values();
            prop_assert!(v[0] <= v[2] && v[2] <= v[1]);
            prop_assert!(v[4] <= v[6] && v[6] <= v[5]);
            prop_assert!(v[3] >= 0.0 && v[7] >= 0.0);
            prop_assert_eq!(&f, &extract(&t, FeatureSchema::Rich8, 130.0).unwrap());
        }

        #[test]
        fn time_shift_invariance(t in arb_trace(), shift in -1e6f64..1e6) {
            let shift = shift.round();
            let moved = validate_trace("p", t.samples().map(|(ts, v)| (ts + shift, v))).unwrap();
            prop_assert_eq!(
                extract(&t, FeatureSchema::Rich8, 130.0).unwrap(),
                extract(&moved, FeatureSchema::Rich8, 130.0).unwrap()
            );
        }
    }
}
