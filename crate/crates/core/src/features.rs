//! Bag-of-features encoding of t-segments, plus the summary-statistics
//! ("breakdown") baseline featurizer.

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::telemetry::{samples_for, Channel, TelemetryLog, Timestamp, N_CHANNELS};

/// Window geometry, all durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    /// Length of a t-segment.
    pub t_length_s: i64,
    /// Stride between consecutive t-segments when building training sets.
    pub t_step_s: i64,
    /// Length of a τ-segment.
    pub tau_length_s: i64,
    /// Stride between τ-segments inside one t-segment.
    pub tau_step_s: i64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            t_length_s: 72 * 60,
            t_step_s: 60 * 60,
            tau_length_s: 24 * 60,
            tau_step_s: 24 * 60,
        }
    }
}

/// Sample counts of a [`WindowConfig`] at a given sampling period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSamples {
    pub t: usize,
    pub t_step: usize,
    pub tau: usize,
    pub tau_step: usize,
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau_length_s > self.t_length_s {
            return Err(Error::Config(format!(
                "τ-segment ({} s) is longer than the t-segment ({} s)",
                self.tau_length_s, self.t_length_s
            )));
        }
        if [self.t_length_s, self.t_step_s, self.tau_length_s, self.tau_step_s]
            .iter()
            .any(|&v| v <= 0)
        {
            return Err(Error::Config("window durations must be positive".into()));
        }
        Ok(())
    }

    pub fn samples(&self, period_s: i64) -> Result<WindowSamples> {
        self.validate()?;
        Ok(WindowSamples {
            t: samples_for(self.t_length_s, period_s)?,
            t_step: samples_for(self.t_step_s, period_s)?,
            tau: samples_for(self.tau_length_s, period_s)?,
            tau_step: samples_for(self.tau_step_s, period_s)?,
        })
    }

    /// Number of τ-windows inside one t-segment.
    pub fn taus_per_segment(&self) -> usize {
        ((self.t_length_s - self.tau_length_s) / self.tau_step_s + 1) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub segment_start: Timestamp,
    /// Exclusive end of the segment.
    pub segment_end: Timestamp,
    pub well_id: String,
}

/// Start offsets of full windows: `0, step, 2·step, …`. Empty when the
/// window does not fit.
pub fn window_offsets(len: usize, window: usize, step: usize) -> impl Iterator<Item = usize> {
    let count = if window == 0 || step == 0 || window > len {
        0
    } else {
        (len - window) / step + 1
    };
    (0..count).map(move |i| i * step)
}

pub fn windows(series: &[f64], window: usize, step: usize) -> Vec<&[f64]> {
    window_offsets(series.len(), window, step)
        .map(|o| &series[o..o + window])
        .collect()
}

/// Codeword counts of the τ-windows of one t-segment.
pub fn histogram(codebook: &Codebook, t_segment: &[f64], tau_step: usize) -> Result<Vec<f64>> {
    let tau = codebook.tau_samples();
    if t_segment.len() < tau {
        return Err(Error::Shape(format!(
            "t-segment of {} samples is shorter than τ ({tau})",
            t_segment.len()
        )));
    }
    let mut hist = vec![0.0; codebook.k()];
    for w in windows(t_segment, tau, tau_step) {
        hist[codebook.assign(w)?] += 1.0;
    }
    Ok(hist)
}

fn ordered_books(codebooks: &[Codebook]) -> Result<Vec<&Codebook>> {
    Channel::ALL
        .iter()
        .map(|&c| {
            codebooks
                .iter()
                .find(|b| b.channel == c)
                .ok_or_else(|| Error::Config(format!("no codebook for channel {c}")))
        })
        .collect()
}

/// Memoized τ-window codewords of one log, keyed by absolute sample offset.
pub struct TauLabeler<'a> {
    log: &'a TelemetryLog,
    books: Vec<&'a Codebook>,
    tau: usize,
    cache: Vec<Vec<u32>>,
}

const UNLABELED: u32 = u32::MAX;

impl<'a> TauLabeler<'a> {
    pub fn new(log: &'a TelemetryLog, codebooks: &'a [Codebook]) -> Result<Self> {
        let books = ordered_books(codebooks)?;
        let tau = books[0].tau_samples();
        for b in &books {
            if b.sample_period_s != log.sample_period_s {
                return Err(Error::Config(format!(
                    "{} codebook was built at {} s sampling, log {} uses {} s",
                    b.channel, b.sample_period_s, log.well_id, log.sample_period_s
                )));
            }
            if b.tau_samples() != tau {
                return Err(Error::Config("codebooks disagree on τ length".into()));
            }
        }
        Ok(TauLabeler {
            log,
            books,
            tau,
            cache: vec![vec![UNLABELED; log.len()]; N_CHANNELS],
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.books.iter().map(|b| b.k()).sum()
    }

    pub fn label(&mut self, channel: usize, offset: usize) -> Result<usize> {
        let cached = self.cache[channel][offset];
        if cached != UNLABELED {
            return Ok(cached as usize);
        }
        let series = &self.log.channels()[channel][offset..offset + self.tau];
        let l = self.books[channel].assign(series)?;
        self.cache[channel][offset] = l as u32;
        Ok(l)
    }

    /// Concatenated per-channel histograms of the t-segment starting at `offset`.
    pub fn encode(&mut self, offset: usize, win: &WindowSamples) -> Result<Vec<f64>> {
        if win.tau != self.tau {
            return Err(Error::Config(format!(
                "window τ of {} samples does not match the codebooks' {}",
                win.tau, self.tau
            )));
        }
        if offset + win.t > self.log.len() {
            return Err(Error::Shape("t-segment runs past the end of the log".into()));
        }
        let mut values = Vec::with_capacity(self.feature_dim());
        for ch in 0..N_CHANNELS {
            let base = values.len();
            values.resize(base + self.books[ch].k(), 0.0);
            for tau_off in window_offsets(win.t, win.tau, win.tau_step) {
                let l = self.label(ch, offset + tau_off)?;
                values[base + l] += 1.0;
            }
        }
        Ok(values)
    }
}

fn span(log: &TelemetryLog, offset: usize, t: usize) -> (Timestamp, Timestamp) {
    (log.time_at(offset), log.time_at(offset + t))
}

/// Encodes the t-segments of `log` starting at the given sample offsets.
pub fn featurize_offsets(
    log: &TelemetryLog,
    codebooks: &[Codebook],
    config: &WindowConfig,
    offsets: &[usize],
) -> Result<Vec<FeatureVector>> {
    let win = config.samples(log.sample_period_s)?;
    let mut labeler = TauLabeler::new(log, codebooks)?;
    offsets
        .iter()
        .map(|&off| {
            let values = labeler.encode(off, &win)?;
            let (segment_start, segment_end) = span(log, off, win.t);
            Ok(FeatureVector {
                values,
                segment_start,
                segment_end,
                well_id: log.well_id.clone(),
            })
        })
        .collect()
}

/// Bag-of-features vectors for every t-window of the log at stride `t_step`.
pub fn featurize(log: &TelemetryLog, codebooks: &[Codebook], config: &WindowConfig) -> Result<Vec<FeatureVector>> {
    let win = config.samples(log.sample_period_s)?;
    let offsets: Vec<usize> = window_offsets(log.len(), win.t, win.t_step).collect();
    featurize_offsets(log, codebooks, config, &offsets)
}

pub const BREAKDOWN_STATS: [&str; 6] = ["mean", "std", "slope_per_min", "min", "max", "delta"];

fn summary(x: &[f64], sample_period_s: i64) -> [f64; 6] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    // least squares against time in minutes
    let dt = sample_period_s as f64 / 60.0;
    let tbar = (x.len() - 1) as f64 / 2.0;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let ti = i as f64 - tbar;
        sxy += ti * (v - mean);
        sxx += ti * ti;
    }
    let slope = if sxx > 0.0 { sxy / sxx / dt } else { 0.0 };
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean, var.sqrt(), slope, min, max, x[x.len() - 1] - x[0]]
}

/// Six summary statistics per channel, concatenated in channel order (66 values).
pub fn breakdown_features(segments: &[&[f64]], sample_period_s: i64) -> Result<Vec<f64>> {
    if segments.len() != N_CHANNELS {
        return Err(Error::Shape(format!(
            "expected {N_CHANNELS} channel segments, got {}",
            segments.len()
        )));
    }
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Shape("empty channel segment".into()));
    }
    Ok(segments
        .iter()
        .flat_map(|s| summary(s, sample_period_s))
        .collect())
}

/// Breakdown vectors for the t-segments starting at `offsets`.
pub fn breakdown_offsets(
    log: &TelemetryLog,
    config: &WindowConfig,
    offsets: &[usize],
) -> Result<Vec<FeatureVector>> {
    let win = config.samples(log.sample_period_s)?;
    offsets
        .iter()
        .map(|&off| {
            if off + win.t > log.len() {
                return Err(Error::Shape("t-segment runs past the end of the log".into()));
            }
            let segs: Vec<&[f64]> = log.channels().iter().map(|c| &c[off..off + win.t]).collect();
            let (segment_start, segment_end) = span(log, off, win.t);
            Ok(FeatureVector {
                values: breakdown_features(&segs, log.sample_period_s)?,
                segment_start,
                segment_end,
                well_id: log.well_id.clone(),
            })
        })
        .collect()
}

/// Writes `well_id,segment_start,segment_end,f0..f{D-1}`.
pub fn write_features<W: std::io::Write>(writer: W, features: &[FeatureVector]) -> Result<()> {
    let dim = features.first().map_or(0, |f| f.values.len());
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["well_id".to_string(), "segment_start".into(), "segment_end".into()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for f in features {
        if f.values.len() != dim {
            return Err(Error::Shape("feature vectors differ in dimension".into()));
        }
        let mut row = vec![f.well_id.clone(), f.segment_start.to_iso(), f.segment_end.to_iso()];
        row.extend(f.values.iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
