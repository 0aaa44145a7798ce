//! Seeded synthetic corpora with per-type signal shapes.
//!
//! Each type has a characteristic amplitude band and short-term dynamics:
//!
//! * `co2`: outdoor-level baseline with square occupancy bursts.
//! * `humidity`, `room_temp`, `other_temp`: a level plus a daily sinusoid
//!   and white noise, in separate bands. `other_temp` is bimodal (a cold
//!   supply band and a hot-water band).
//! * `setpoint`: piecewise constant with rare jumps and no noise.
//! * `air_volume`: switching between two flow levels, plus noise.
//!
//! Profile constants are calibration choices, not measurements.
//!
//! Trace `j` of type `t` is generated from its own ChaCha8 stream keyed by
//! `derive_seed(seed, [code(t), j])`, so corpora are reproducible and can be
//! generated in parallel.
//!
//! # Corpus config keys (TOML)
//!
//! ```toml
//! preset = "default"        # default | shifted | overlap | confusable
//! seed = 42
//! traces_per_type = 20
//! duration = 604800.0       # seconds
//! sample_interval = 60.0    # seconds
//!
//! [[profiles]]              # replaces the preset's profile for this type
//! sensor_type = "co2"
//! base_level = 450.0
//! level_spread = 50.0       # per-trace uniform jitter of the level
//! daily_amplitude = 20.0
//! noise_std = 10.0
//! clamp = [300.0, 2500.0]
//! scramble = false          # shuffle samples in time after generation
//! events = { kind = "bursts", rate_per_day = 3.0, height = 300.0, duration = 5400.0 }
//! # or { kind = "steps", rate_per_day = 0.3, levels = [-4.0, 0.0, 4.0] }
//! # or { kind = "mode_switch", rate_per_day = 4.0, low = 150.0, high = 650.0 }
//! alt_band = { level = 130.0, fraction = 0.35 }   # optional second level
//!
//! [[climate_shift]]
//! sensor_type = "humidity"
//! offset = 6.0
//! amplitude_scale = 1.3
//! ```

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::{LabelManifest, ManifestRow};
use crate::meta;
use crate::rng::{derive_seed, Stream};
use crate::trace::{validate_trace, SensorTrace, SensorType};

/// 2015-01-01T00:00:00Z; the first sample of every generated trace.
pub const START_EPOCH: f64 = 1_420_070_400.0;
const DAY: f64 = 86_400.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventModel {
    None,
    /// Square bursts added to the signal; height and duration vary ±30% per burst.
    Bursts {
        rate_per_day: f64,
        height: f64,
        duration: f64,
    },
    /// Piecewise-constant offsets from the level, jumping to a different entry at random.
    Steps {
        rate_per_day: f64,
        levels: Vec<f64>,
    },
    /// Two-state offset from the level.
    ModeSwitch {
        rate_per_day: f64,
        low: f64,
        high: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltBand {
    pub level: f64,
    /// Probability that a trace uses this level instead of `base_level`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeProfile {
    pub sensor_type: SensorType,
    pub base_level: f64,
    #[serde(default)]
    pub level_spread: f64,
    #[serde(default)]
    pub daily_amplitude: f64,
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default = "no_events")]
    pub events: EventModel,
    pub clamp: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alt_band: Option<AltBand>,
    #[serde(default)]
    pub scramble: bool,
}

fn no_events() -> EventModel {
    EventModel::None
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClimateShift {
    pub sensor_type: SensorType,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "unit_scale")]
    pub amplitude_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl TypeProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidSpec(format!("{}: {what}", self.sensor_type)));
        let mut numbers = vec![
            self.base_level,
            self.level_spread,
            self.daily_amplitude,
            self.noise_std,
        ];
        numbers.extend(self.clamp);
        match &self.events {
            EventModel::None => {}
            EventModel::Bursts {
                rate_per_day,
                height,
                duration,
            } => {
                numbers.extend([*rate_per_day, *height, *duration]);
                if *duration <= 0.0 {
                    return bad("burst duration must be positive");
                }
            }
            EventModel::Steps {
                rate_per_day,
                levels,
            } => {
                numbers.push(*rate_per_day);
                numbers.extend(levels);
                if levels.is_empty() {
                    return bad("steps need at least one level");
                }
            }
            EventModel::ModeSwitch {
                rate_per_day,
                low,
                high,
            } => numbers.extend([*rate_per_day, *low, *high]),
        }
        if let Some(alt) = self.alt_band {
            numbers.extend([alt.level, alt.fraction]);
            if !(0.0..=1.0).contains(&alt.fraction) {
                return bad("alt_band.fraction must lie in [0, 1]");
            }
        }
        if numbers.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.noise_std < 0.0 || self.level_spread < 0.0 {
            return bad("noise_std and level_spread must be non-negative");
        }
        if self.clamp[0] > self.clamp[1] {
            return bad("clamp range is empty");
        }
        Ok(())
    }

    fn shifted(&self, shift: &ClimateShift) -> TypeProfile {
        let s = shift.amplitude_scale;
        let events = match &self.events {
            EventModel::None => EventModel::None,
            EventModel::Bursts {
                rate_per_day,
                height,
                duration,
            } => EventModel::Bursts {
                rate_per_day: *rate_per_day,
                height: height * s,
                duration: *duration,
            },
            EventModel::Steps {
                rate_per_day,
                levels,
            } => EventModel::Steps {
                rate_per_day: *rate_per_day,
                levels: levels.iter().map(|l| l * s).collect(),
            },
            EventModel::ModeSwitch {
                rate_per_day,
                low,
                high,
            } => EventModel::ModeSwitch {
                rate_per_day: *rate_per_day,
                low: low * s,
                high: high * s,
            },
        };
        TypeProfile {
            base_level: self.base_level + shift.offset,
            daily_amplitude: self.daily_amplitude * s,
            alt_band: self.alt_band.map(|a| AltBand {
                level: a.level + shift.offset,
                ..a
            }),
            events,
            ..self.clone()
        }
    }

    // Default calibration: CO2 in ppm, humidity in %RH, temperatures in °F,
    // air volume in cfm.

    pub fn co2() -> Self {
        TypeProfile {
            sensor_type: SensorType::Co2,
            base_level: 450.0,
            level_spread: 50.0,
            daily_amplitude: 20.0,
            noise_std: 10.0,
            events: EventModel::Bursts {
                rate_per_day: 3.0,
                height: 300.0,
                duration: 5400.0,
            },
            clamp: [300.0, 2500.0],
            alt_band: None,
            scramble: false,
        }
    }

    pub fn humidity() -> Self {
        TypeProfile {
            sensor_type: SensorType::Humidity,
            base_level: 40.0,
            level_spread: 6.0,
            daily_amplitude: 4.0,
            noise_std: 1.0,
            events: EventModel::None,
            clamp: [5.0, 95.0],
            alt_band: None,
            scramble: false,
        }
    }

    pub fn room_temp() -> Self {
        TypeProfile {
            sensor_type: SensorType::RoomTemp,
            base_level: 71.0,
            level_spread: 1.5,
            daily_amplitude: 1.2,
            noise_std: 0.2,
            events: EventModel::None,
            clamp: [55.0, 90.0],
            alt_band: None,
            scramble: false,
        }
    }

    pub fn setpoint() -> Self {
        TypeProfile {
            sensor_type: SensorType::Setpoint,
            base_level: 76.0,
            level_spread: 0.0,
            daily_amplitude: 0.0,
            noise_std: 0.0,
            events: EventModel::Steps {
                rate_per_day: 1.5,
                levels: vec![-2.0, -1.0, 0.0, 1.0, 2.0],
            },
            clamp: [55.0, 90.0],
            alt_band: None,
            scramble: false,
        }
    }

    pub fn air_volume() -> Self {
        TypeProfile {
            sensor_type: SensorType::AirVolume,
            base_level: 0.0,
            level_spread: 50.0,
            daily_amplitude: 0.0,
            noise_std: 25.0,
            events: EventModel::ModeSwitch {
                rate_per_day: 4.0,
                low: 300.0,
                high: 1200.0,
            },
            clamp: [0.0, 3000.0],
            alt_band: None,
            scramble: false,
        }
    }

    pub fn other_temp() -> Self {
        TypeProfile {
            sensor_type: SensorType::OtherTemp,
            base_level: 57.0,
            level_spread: 3.0,
            daily_amplitude: 2.0,
            noise_std: 0.3,
            events: EventModel::None,
            clamp: [30.0, 200.0],
            alt_band: Some(AltBand {
                level: 130.0,
                fraction: 0.35,
            }),
            scramble: false,
        }
    }

    /// Return-air temperature: tracks room air closely, slightly warmer and
    /// smoother. A share of traces stay in the supply-air band.
    pub fn return_air() -> Self {
        TypeProfile {
            sensor_type: SensorType::OtherTemp,
            base_level: 73.0,
            level_spread: 2.0,
            daily_amplitude: 1.0,
            noise_std: 0.15,
            events: EventModel::None,
            clamp: [30.0, 200.0],
            alt_band: Some(AltBand {
                level: 55.0,
                fraction: 0.4,
            }),
            scramble: false,
        }
    }

    pub fn defaults() -> Vec<TypeProfile> {
        vec![
            Self::co2(),
            Self::humidity(),
            Self::room_temp(),
            Self::setpoint(),
            Self::air_volume(),
            Self::other_temp(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub traces_per_type: usize,
    pub duration: f64,
    pub sample_interval: f64,
    pub profiles: Vec<TypeProfile>,
    #[serde(default)]
    pub climate_shift: Vec<ClimateShift>,
}

impl CorpusSpec {
    /// Six types, 20 traces each, one week at one-minute sampling.
    pub fn default_corpus(seed: u64) -> CorpusSpec {
        CorpusSpec {
            seed,
            traces_per_type: 20,
            duration: 7.0 * DAY,
            sample_interval: 60.0,
            profiles: TypeProfile::defaults(),
            climate_shift: Vec::new(),
        }
    }

    /// A second building: every type drawn with new seeds and a shifted
    /// micro-climate.
    pub fn shifted_building(seed: u64) -> CorpusSpec {
        let shift = |t, offset, amplitude_scale| ClimateShift {
            sensor_type: t,
            offset,
            amplitude_scale,
        };
        CorpusSpec {
            climate_shift: vec![
                shift(SensorType::Co2, 60.0, 1.2),
                shift(SensorType::Humidity, 6.0, 1.3),
                shift(SensorType::RoomTemp, 1.0, 1.2),
                shift(SensorType::Setpoint, 0.0, 1.0),
                shift(SensorType::AirVolume, 0.0, 1.15),
                shift(SensorType::OtherTemp, 2.0, 1.1),
            ],
            ..Self::default_corpus(seed)
        }
    }

    /// Room temperature against humidity that occupies the same amplitude
    /// band with the same value distribution but fast fluctuations: both
    /// classes come from the same generator, and humidity traces have their
    /// samples shuffled in time. Sampling is every 20 s.
    pub fn overlap_fixture(seed: u64) -> CorpusSpec {
        let band = TypeProfile {
            level_spread: 0.5,
            daily_amplitude: 4.0,
            noise_std: 0.1,
            ..TypeProfile::room_temp()
        };
        CorpusSpec {
            profiles: vec![
                band.clone(),
                TypeProfile {
                    sensor_type: SensorType::Humidity,
                    scramble: true,
                    ..band
                },
            ],
            sample_interval: 20.0,
            ..Self::default_corpus(seed)
        }
    }

    /// The default corpus with `other_temp` replaced by return-air-like
    /// traces that are hard to tell from room temperature.
    pub fn confusable_pair(seed: u64) -> CorpusSpec {
        let mut spec = Self::default_corpus(seed);
        for p in &mut spec.profiles {
            if p.sensor_type == SensorType::OtherTemp {
                *p = TypeProfile::return_air();
            }
        }
        spec
    }

    pub fn preset(name: &str, seed: u64) -> Result<CorpusSpec> {
        match name {
            "default" => Ok(Self::default_corpus(seed)),
            "shifted" => Ok(Self::shifted_building(seed)),
            "overlap" => Ok(Self::overlap_fixture(seed)),
            "confusable" => Ok(Self::confusable_pair(seed)),
            _ => Err(Error::Config {
                key: "preset".into(),
                message: format!("unknown preset `{name}`"),
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.traces_per_type == 0 {
            return Err(Error::InvalidSpec(
                "traces_per_type must be at least 1".into(),
            ));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::InvalidSpec(
                "sample_interval must be positive".into(),
            ));
        }
        if !(self.duration >= self.sample_interval && self.duration.is_finite()) {
            return Err(Error::InvalidSpec(
                "duration must be at least one sample_interval".into(),
            ));
        }
        if self.profiles.is_empty() {
            return Err(Error::InvalidSpec("no profiles".into()));
        }
        let mut seen = [false; SensorType::COUNT];
        for p in &self.profiles {
            p.validate()?;
            if std::mem::replace(&mut seen[p.sensor_type.code()], true) {
                return Err(Error::InvalidSpec(format!(
                    "two profiles for {}",
                    p.sensor_type
                )));
            }
        }
        for s in &self.climate_shift {
            if !(s.offset.is_finite() && s.amplitude_scale.is_finite() && s.amplitude_scale >= 0.0)
            {
                return Err(Error::InvalidSpec(format!(
                    "climate shift for {} is invalid",
                    s.sensor_type
                )));
            }
        }
        Ok(())
    }

    /// Profiles after applying the climate shift.
    pub fn effective_profiles(&self) -> Vec<TypeProfile> {
        self.profiles
            .iter()
            .map(|p| {
                match self
                    .climate_shift
                    .iter()
                    .find(|s| s.sensor_type == p.sensor_type)
                {
                    Some(shift) => p.shifted(shift),
                    None => p.clone(),
                }
            })
            .collect()
    }
}

/// Generates one trace. The result is a pure function of the arguments.
pub fn generate_trace(
    trace_id: &str,
    profile: &TypeProfile,
    duration: f64,
    sample_interval: f64,
    seed: u64,
) -> Result<SensorTrace> {
    profile.validate()?;
    if !(sample_interval > 0.0 && duration >= sample_interval) {
        return Err(Error::InvalidSpec(
            "duration must be at least one positive sample_interval".into(),
        ));
    }
    let mut rng = Stream::new(seed);
    let p = profile;
    let base = match p.alt_band {
        Some(alt) if rng.bernoulli(alt.fraction) => alt.level,
        _ => p.base_level,
    };
    let level = base + rng.uniform(-p.level_spread, p.level_spread);
    let phase = rng.uniform(0.0, std::f64::consts::TAU);
    let amplitude = p.daily_amplitude * rng.uniform(0.7, 1.3);

    let n = (duration / sample_interval).floor() as usize;
    let event_prob = |rate: f64| (rate * sample_interval / DAY).min(1.0);

    // event state
    let mut burst_left = 0.0;
    let mut burst_height = 0.0;
    let mut step = match &p.events {
        EventModel::Steps { levels, .. } => rng.below(levels.len()),
        _ => 0,
    };
    let mut high_mode = rng.bernoulli(0.5);

    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let t = START_EPOCH + i as f64 * sample_interval;
        let mut v = level + amplitude * (std::f64::consts::TAU * (t / DAY) + phase).sin();
        match &p.events {
            EventModel::None => {}
            EventModel::Bursts {
                rate_per_day,
                height,
                duration,
            } => {
                if burst_left <= 0.0 && rng.bernoulli(event_prob(*rate_per_day)) {
                    burst_left = duration * rng.uniform(0.7, 1.3);
                    burst_height = height * rng.uniform(0.7, 1.3);
                }
                if burst_left > 0.0 {
                    v += burst_height;
                    burst_left -= sample_interval;
                }
            }
            EventModel::Steps {
                rate_per_day,
                levels,
            } => {
                if levels.len() > 1 && rng.bernoulli(event_prob(*rate_per_day)) {
                    step = (step + 1 + rng.below(levels.len() - 1)) % levels.len();
                }
                v += levels[step];
            }
            EventModel::ModeSwitch {
                rate_per_day,
                low,
                high,
            } => {
                if rng.bernoulli(event_prob(*rate_per_day)) {
                    high_mode = !high_mode;
                }
                v += if high_mode { *high } else { *low };
            }
        }
        if p.noise_std > 0.0 {
            v += p.noise_std * rng.normal();
        }
        samples.push((t, v.clamp(p.clamp[0], p.clamp[1])));
    }
    if p.scramble {
        let mut values: Vec<f64> = samples.iter().map(|s| s.1).collect();
        rng.shuffle(&mut values);
        for (s, v) in samples.iter_mut().zip(values) {
            s.1 = v;
        }
    }
    Ok(validate_trace(trace_id, samples)?.with_label(Some(p.sensor_type)))
}

/// Labeled traces in profile order, `traces_per_type` each.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub traces: Vec<SensorTrace>,
}

pub fn trace_id(sensor_type: SensorType, index: usize) -> String {
    format!("{}_{index:03}", sensor_type.name())
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    spec.validate()?;
    let jobs: Vec<(TypeProfile, usize)> = spec
        .effective_profiles()
        .into_iter()
        .flat_map(|p| (0..spec.traces_per_type).map(move |j| (p.clone(), j)))
        .collect();
    let traces = jobs
        .par_iter()
        .map(|(profile, j)| {
            let t = profile.sensor_type;
            let seed = derive_seed(spec.seed, &[t.code() as u64, *j as u64]);
            generate_trace(
                &trace_id(t, *j),
                profile,
                spec.duration,
                spec.sample_interval,
                seed,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { traces })
}

impl Corpus {
    /// Writes `traces/<id>.csv` files and `manifest.csv` under `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<LabelManifest> {
        let trace_dir = dir.join("traces");
        std::fs::create_dir_all(&trace_dir).map_err(|e| Error::io(&trace_dir, e))?;
        self.traces.par_iter().try_for_each(|t| {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)
                .map_err(|e| Error::io(&trace_dir, e))?;
            meta::write_file(&trace_dir.join(format!("{}.csv", t.id())), &buf)
        })?;
        let manifest = LabelManifest {
            rows: self
                .traces
                .iter()
                .map(|t| ManifestRow {
                    trace_id: t.id().to_string(),
                    path: format!("traces/{}.csv", t.id()),
                    label: t.label(),
                })
                .collect(),
            base_dir: dir.to_path_buf(),
        };
        meta::write_file(&dir.join("manifest.csv"), &manifest.to_bytes()?)?;
        Ok(manifest)
    }
}

/// Corpus config file contents. Any field left out comes from the preset.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub traces_per_type: Option<usize>,
    pub duration: Option<f64>,
    pub sample_interval: Option<f64>,
    #[serde(default)]
    pub profiles: Vec<TypeProfile>,
    pub climate_shift: Option<Vec<ClimateShift>>,
}

impl CorpusConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<CorpusConfig> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::parse(origin, line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<CorpusConfig> {
        Self::parse(&meta::read_to_string(path)?, path)
    }

    pub fn resolve(self, default_seed: u64) -> Result<CorpusSpec> {
        let seed = self.seed.unwrap_or(default_seed);
        let mut spec = CorpusSpec::preset(self.preset.as_deref().unwrap_or("default"), seed)?;
        if let Some(n) = self.traces_per_type {
            spec.traces_per_type = n;
        }
        if let Some(d) = self.duration {
            spec.duration = d;
        }
        if let Some(s) = self.sample_interval {
            spec.sample_interval = s;
        }
        for p in self.profiles {
            match spec
                .profiles
                .iter_mut()
                .find(|q| q.sensor_type == p.sensor_type)
            {
                Some(slot) => *slot = p,
                None => spec.profiles.push(p),
            }
        }
        if let Some(shift) = self.climate_shift {
            spec.climate_shift = shift;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract, extract_med_var, FeatureSchema};

    fn small(spec: CorpusSpec) -> CorpusSpec {
        CorpusSpec {
            traces_per_type: 2,
            duration: DAY,
            ..spec
        }
    }

    #[test]
    fn constant_setpoint() {
        let p = TypeProfile {
            events: EventModel::Steps {
                rate_per_day: 0.0,
                levels: vec![-2.0, 0.0, 2.0],
            },
            ..TypeProfile::setpoint()
        };
        let t = generate_trace("s", &p, DAY, 60.0, 1).unwrap();
        let c = t.values()[0];
        assert!(t.values().iter().all(|&v| v == c));
        let f = extract(&t, FeatureSchema::Rich8, 2700.0).unwrap();
        assert_eq!(f.values(), &[c, c, c, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn seeds_drive_noise() {
        let p = TypeProfile::room_temp();
        let a = generate_trace("r", &p, DAY, 60.0, 5).unwrap();
        assert_eq!(a, generate_trace("r", &p, DAY, 60.0, 5).unwrap());
        assert_ne!(
            a.values(),
            generate_trace("r", &p, DAY, 60.0, 6).unwrap().values()
        );
    }

    #[test]
    fn co2_variance_spikes_only_with_bursts() {
        let p = TypeProfile {
            base_level: 400.0,
            level_spread: 0.0,
            daily_amplitude: 0.0,
            noise_std: 0.0,
            events: EventModel::Bursts {
                rate_per_day: 4.0,
                height: 400.0,
                duration: 3600.0,
            },
            ..TypeProfile::co2()
        };
        let t = generate_trace("c", &p, 3.0 * DAY, 60.0, 12).unwrap();
        let mv = extract_med_var(&t, 2700.0).unwrap();
        let windows = crate::trace::segment_windows(&t, 2700.0).unwrap();
        let mut spiked = 0;
        for (w, var) in windows.iter().zip(&mv.var) {
            let in_burst = w.values.iter().any(|&v| v > 400.0);
            let all_burst = w.values.iter().all(|&v| v > 400.0);
            if in_burst && !all_burst {
                assert!(*var > 1000.0, "edge window var {var}");
                spiked += 1;
            } else {
                assert_eq!(*var, 0.0);
            }
        }
        assert!(spiked > 0);
    }

    #[test]
    fn corpus_counts_and_invariants() {
        let corpus = generate_corpus(&small(CorpusSpec::default_corpus(42))).unwrap();
        assert_eq!(corpus.traces.len(), 12);
        for t in &corpus.traces {
            assert!(t.len() >= 2);
            assert!(t.values().iter().all(|v| v.is_finite()));
            assert!(t.timestamps().windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(corpus.traces[0].id(), "co2_000");
        assert_eq!(corpus.traces[0].label(), Some(SensorType::Co2));
    }

    #[test]
    fn identity_shift_changes_nothing() {
        let a = small(CorpusSpec::default_corpus(7));
        let mut b = a.clone();
        b.climate_shift = SensorType::ALL
            .iter()
            .map(|&t| ClimateShift {
                sensor_type: t,
                offset: 0.0,
                amplitude_scale: 1.0,
            })
            .collect();
        assert_eq!(generate_corpus(&a).unwrap(), generate_corpus(&b).unwrap());
    }

    #[test]
    fn overlap_fixture_collides_on_baseline() {
        let corpus = generate_corpus(&small(CorpusSpec::overlap_fixture(1))).unwrap();
        let room = &corpus.traces[0];
        let hum = &corpus.traces[2];
        assert_eq!(hum.label(), Some(SensorType::Humidity));
        // same generator, same seed path except the type code, so compare distributions loosely
        let b_room = extract(room, FeatureSchema::Baseline2, 2700.0).unwrap();
        let b_hum = extract(hum, FeatureSchema::Baseline2, 2700.0).unwrap();
        assert!((b_room.values()[0] - b_hum.values()[0]).abs() < 5.0);
        let r_room = extract(room, FeatureSchema::Rich8, 2700.0).unwrap();
        let r_hum = extract(hum, FeatureSchema::Rich8, 2700.0).unwrap();
        // median window variance: smooth room temp is far below shuffled humidity
        assert!(r_room.values()[6] * 5.0 < r_hum.values()[6]);
    }

    #[test]
    fn invalid_specs() {
        let mut s = CorpusSpec::default_corpus(1);
        s.traces_per_type = 0;
        assert!(matches!(generate_corpus(&s), Err(Error::InvalidSpec(_))));
        let mut s = CorpusSpec::default_corpus(1);
        s.profiles[0].noise_std = -1.0;
        assert!(matches!(generate_corpus(&s), Err(Error::InvalidSpec(_))));
        let mut s = CorpusSpec::default_corpus(1);
        s.profiles[1].clamp = [10.0, 0.0];
        assert!(matches!(generate_corpus(&s), Err(Error::InvalidSpec(_))));
        let mut s = CorpusSpec::default_corpus(1);
        s.duration = 10.0;
        assert!(matches!(generate_corpus(&s), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn config_file_overrides_and_errors() {
        let text = "preset = \"shifted\"\nseed = 9\ntraces_per_type = 3\n";
        let spec = CorpusConfig::parse(text, Path::new("c.toml"))
            .unwrap()
            .resolve(0)
            .unwrap();
        assert_eq!(spec.seed, 9);
        assert_eq!(spec.traces_per_type, 3);
        assert_eq!(spec.climate_shift.len(), 6);

        let bad = "seed = 1\ntraces_per_typ = 3\n";
        let err = CorpusConfig::parse(bad, Path::new("c.toml")).unwrap_err();
        assert!(err.to_string().contains("traces_per_typ"), "{err}");
        assert!(matches!(err, Error::Parse { line: 2, .. }));

        let profile = r#"
[[profiles]]
sensor_type = "co2"
base_level = 500.0
clamp = [0.0, 3000.0]
events = { kind = "bursts", rate_per_day = 1.0, height = 100.0, duration = 600.0 }
"#;
        let spec = CorpusConfig::parse(profile, Path::new("c.toml"))
            .unwrap()
            .resolve(0)
            .unwrap();
        assert_eq!(spec.profiles[0].base_level, 500.0);
    }
}
