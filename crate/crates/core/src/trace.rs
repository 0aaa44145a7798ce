//! Raw sensor time series and their segmentation into fixed-length windows.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// The six sensor classes. Codes are stable and follow declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorType {
    Co2,
    Humidity,
    RoomTemp,
    Setpoint,
    AirVolume,
    OtherTemp,
}

impl SensorType {
    pub const COUNT: usize = 6;

    pub const ALL: [SensorType; 6] = [
        SensorType::Co2,
        SensorType::Humidity,
        SensorType::RoomTemp,
        SensorType::Setpoint,
        SensorType::AirVolume,
        SensorType::OtherTemp,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<SensorType> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorType::Co2 => "co2",
            SensorType::Humidity => "humidity",
            SensorType::RoomTemp => "room_temp",
            SensorType::Setpoint => "setpoint",
            SensorType::AirVolume => "air_volume",
            SensorType::OtherTemp => "other_temp",
        }
    }
}

impl fmt::Display for SensorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SensorType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnknownSensorType(s.to_string()))
    }
}

/// A validated series of readings for one point.
///
/// Timestamps are strictly increasing, there are at least two samples, and
/// every timestamp and value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorTrace {
    id: String,
    timestamps: Vec<f64>,
    values: Vec<f64>,
    label: Option<SensorType>,
}

impl SensorTrace {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> Option<SensorType> {
        self.label
    }

    pub fn with_label(mut self, label: Option<SensorType>) -> Self {
        self.label = label;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.timestamps
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Time between the first and last sample.
    pub fn span(&self) -> f64 {
        self.timestamps[self.timestamps.len() - 1] - self.timestamps[0]
    }

    pub fn read_csv(path: &Path, trace_id: &str) -> Result<SensorTrace> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file, trace_id, path)
    }

    pub fn from_csv_reader(
        reader: impl Read,
        trace_id: &str,
        origin: &Path,
    ) -> Result<SensorTrace> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "value" {
            return Err(Error::parse(origin, 1, "expected header `timestamp,value`"));
        }
        let mut raw = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::parse(origin, line, format!("bad number in column {}", i + 1))
                    })
            };
            raw.push((field(0)?, field(1)?));
        }
        validate_trace(trace_id, raw)
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "timestamp,value")?;
        for (t, v) in self.samples() {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Builds a [`SensorTrace`] from arbitrary `(timestamp, value)` pairs.
///
/// Samples are sorted by timestamp; exact duplicate timestamps collapse to the
/// last occurrence in input order.
pub fn validate_trace(
    trace_id: impl Into<String>,
    raw_samples: impl IntoIterator<Item = (f64, f64)>,
) -> Result<SensorTrace> {
    let id = trace_id.into();
    let mut samples: Vec<(f64, f64)> = raw_samples.into_iter().collect();
    if let Some(index) = samples
        .iter()
        .position(|(t, v)| !t.is_finite() || !v.is_finite())
    {
        return Err(Error::NonFiniteValue {
            trace_id: id,
            index,
        });
    }
    // stable: equal timestamps keep their input order
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut timestamps: Vec<f64> = Vec::with_capacity(samples.len());
    let mut values: Vec<f64> = Vec::with_capacity(samples.len());
    for (t, v) in samples {
        if timestamps.last() == Some(&t) {
            *values.last_mut().expect("parallel vectors") = v;
        } else {
            timestamps.push(t);
            values.push(v);
        }
    }
    if values.len() < 2 {
        return Err(Error::EmptyTrace { trace_id: id });
    }
    Ok(SensorTrace {
        id,
        timestamps,
        values,
        label: None,
    })
}

/// Samples falling in `[start, start + length)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start: f64,
    pub length: f64,
    pub values: Vec<f64>,
}

/// Tiles the trace into non-overlapping windows anchored at its first
/// timestamp. The trailing partial window is dropped and windows that contain
/// no samples are skipped.
pub fn segment_windows(trace: &SensorTrace, window_len: f64) -> Result<Vec<Window>> {
    if !(window_len > 0.0 && window_len.is_finite()) {
        return Err(Error::InvalidWindowLength(window_len));
    }
    let t0 = trace.timestamps[0];
    let count = (trace.span() / window_len).floor() as usize;
    if count == 0 {
        return Err(Error::NoWindows {
            trace_id: trace.id.clone(),
            window_len,
        });
    }
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); count];
    for (t, v) in trace.samples() {
        let idx = ((t - t0) / window_len).floor() as usize;
        if idx >= count {
            break;
        }
        buckets[idx].push(v);
    }
    Ok(buckets
        .into_iter()
        .enumerate()
        .filter(|(_, values)| !values.is_empty())
        .map(|(i, values)| Window {
            start: t0 + i as f64 * window_len,
            length: window_len,
            values,
        })
        .collect())
}

/// Median and population variance of a window's values.
pub fn window_stats(window: &Window) -> (f64, f64) {
    stats::median_and_variance(&window.values)
}
