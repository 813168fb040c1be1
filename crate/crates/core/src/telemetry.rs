//! Telemetry data model: channel specifications, multichannel mud logs,
//! accident reference tables and the last-valid-value cleaning rule.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};

use crate::error::{Error, Result};

/// Canonical sampling period of mud telemetry, in seconds.
pub const DEFAULT_SAMPLE_PERIOD_S: i64 = 5;

/// Seconds since the Unix epoch, UTC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn seconds(self) -> i64 {
        self.0
    }

    pub fn plus_seconds(self, s: i64) -> Timestamp {
        Timestamp(self.0 + s)
    }

    pub fn to_iso(self) -> String {
        DateTime::<Utc>::from_timestamp(self.0, 0)
            .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
            .unwrap_or_else(|| self.0.to_string())
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(t) = DateTime::parse_from_rfc3339(s) {
            return Ok(Timestamp(t.timestamp()));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
            if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
                return Ok(Timestamp(t.and_utc().timestamp()));
            }
        }
        Err(Error::Parse(format!("invalid timestamp `{s}`")))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_iso())
    }
}

/// The eleven surface telemetry parameters, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Hkla,
    Bpos,
    Dbtm,
    Dmea,
    Tqa,
    Wob,
    Rpma,
    Sppa,
    Mfia,
    Tvt,
    Gasa,
}

pub const N_CHANNELS: usize = 11;

impl Channel {
    pub const ALL: [Channel; N_CHANNELS] = [
        Channel::Hkla,
        Channel::Bpos,
        Channel::Dbtm,
        Channel::Dmea,
        Channel::Tqa,
        Channel::Wob,
        Channel::Rpma,
        Channel::Sppa,
        Channel::Mfia,
        Channel::Tvt,
        Channel::Gasa,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            Channel::Hkla => "HKLA",
            Channel::Bpos => "BPOS",
            Channel::Dbtm => "DBTM",
            Channel::Dmea => "DMEA",
            Channel::Tqa => "TQA",
            Channel::Wob => "WOB",
            Channel::Rpma => "RPMA",
            Channel::Sppa => "SPPA",
            Channel::Mfia => "MFIA",
            Channel::Tvt => "TVT",
            Channel::Gasa => "GASA",
        }
    }
}

impl FromStr for Channel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Channel::ALL
            .into_iter()
            .find(|c| c.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Parse(format!("unknown channel `{s}`")))
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Physical validity range of one telemetry channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    pub channel: Channel,
    pub units: String,
    pub min_value: f64,
    pub max_value: f64,
}

impl ChannelSpec {
    pub fn new(channel: Channel, units: &str, min_value: f64, max_value: f64) -> Result<Self> {
        if !(min_value < max_value) {
            return Err(Error::Validation(format!(
                "{channel}: min {min_value} must be below max {max_value}"
            )));
        }
        Ok(ChannelSpec {
            channel,
            units: units.to_string(),
            min_value,
            max_value,
        })
    }

    pub fn contains(&self, v: f64) -> bool {
        v.is_finite() && v >= self.min_value && v <= self.max_value
    }
}

/// The standard mud-log parameter table.
pub fn canonical_specs() -> Vec<ChannelSpec> {
    use Channel::*;
    let rows: [(Channel, &str, f64, f64); N_CHANNELS] = [
        (Hkla, "t", 0.0, 300.0),
        (Bpos, "m", 0.0, 50.0),
        (Dbtm, "m", 0.0, 10000.0),
        (Dmea, "m", 0.0, 10000.0),
        (Tqa, "kN*m", 0.0, 140.0),
        (Wob, "t", 0.0, 25.0),
        (Rpma, "rpm", 0.0, 200.0),
        (Sppa, "atm", 0.0, 350.0),
        (Mfia, "l/s", 0.0, 65.0),
        (Tvt, "m3", 0.0, 240.0),
        (Gasa, "%", 0.0, 1.0),
    ];
    rows.into_iter()
        .map(|(c, u, lo, hi)| ChannelSpec::new(c, u, lo, hi).expect("static table"))
        .collect()
}

fn spec_for(specs: &[ChannelSpec], channel: Channel) -> Result<&ChannelSpec> {
    specs
        .iter()
        .find(|s| s.channel == channel)
        .ok_or_else(|| Error::Config(format!("no channel spec for {channel}")))
}

/// One well's uniformly sampled multichannel log. Sample `i` is stamped
/// `start_time + i * sample_period_s`. Missing readings are stored as NaN
/// until [`clean`] runs.
#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryLog {
    pub well_id: String,
    pub start_time: Timestamp,
    pub sample_period_s: i64,
    channels: Vec<Vec<f64>>,
}

impl TelemetryLog {
    pub fn new(
        well_id: impl Into<String>,
        start_time: Timestamp,
        sample_period_s: i64,
        channels: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if channels.len() != N_CHANNELS {
            return Err(Error::Shape(format!(
                "expected {N_CHANNELS} channels, got {}",
                channels.len()
            )));
        }
        if sample_period_s <= 0 {
            return Err(Error::Format("sample period must be positive".into()));
        }
        let n = channels[0].len();
        if let Some((i, c)) = channels.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(Error::Shape(format!(
                "channel {} has {} samples, expected {n}",
                Channel::ALL[i],
                c.len()
            )));
        }
        Ok(TelemetryLog {
            well_id: well_id.into(),
            start_time,
            sample_period_s,
            channels,
        })
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, c: Channel) -> &[f64] {
        &self.channels[c.index()]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn time_at(&self, i: usize) -> Timestamp {
        self.start_time.plus_seconds(i as i64 * self.sample_period_s)
    }

    /// Exclusive end of the covered time span.
    pub fn end_time(&self) -> Timestamp {
        self.time_at(self.len())
    }

    /// Index of the first sample stamped at or after `t`, clamped to `[0, len]`.
    pub fn index_at_or_after(&self, t: Timestamp) -> usize {
        let dt = t.0 - self.start_time.0;
        if dt <= 0 {
            return 0;
        }
        let i = (dt + self.sample_period_s - 1) / self.sample_period_s;
        (i as usize).min(self.len())
    }

    /// Converts a duration to a whole number of samples.
    pub fn samples_for(&self, seconds: i64) -> Result<usize> {
        samples_for(seconds, self.sample_period_s)
    }
}

/// Converts a duration to a whole number of samples at `period_s`.
pub fn samples_for(seconds: i64, period_s: i64) -> Result<usize> {
    if seconds < 0 || seconds % period_s != 0 {
        return Err(Error::Config(format!(
            "duration of {seconds} s is not a whole number of {period_s} s samples"
        )));
    }
    Ok((seconds / period_s) as usize)
}

pub const TELEMETRY_HEADER: [&str; 12] = [
    "time", "HKLA", "BPOS", "DBTM", "DMEA", "TQA", "WOB", "RPMA", "SPPA", "MFIA", "TVT", "GASA",
];

/// Reads a telemetry CSV. The well identifier is the file stem.
pub fn load_log(path: &Path, specs: &[ChannelSpec]) -> Result<TelemetryLog> {
    let well_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_log(file, &well_id, specs).map_err(|e| e.in_file(path))
}

pub fn read_log<R: std::io::Read>(
    reader: R,
    well_id: &str,
    specs: &[ChannelSpec],
) -> Result<TelemetryLog> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let time_col = column("time").ok_or_else(|| Error::MissingColumn("time".into()))?;
    let mut cols = [0usize; N_CHANNELS];
    for c in Channel::ALL {
        spec_for(specs, c)?;
        cols[c.index()] = column(c.code()).ok_or_else(|| Error::MissingColumn(c.code().into()))?;
    }

    let mut times = Vec::new();
    let mut channels = vec![Vec::new(); N_CHANNELS];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let t: Timestamp = rec
            .get(time_col)
            .unwrap_or("")
            .parse()
            .map_err(|e| Error::Format(format!("row {}: {e}", row + 1)))?;
        times.push(t);
        for c in Channel::ALL {
            let cell = rec.get(cols[c.index()]).unwrap_or("");
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                cell.parse::<f64>().map_err(|_| {
                    Error::Format(format!("row {}: bad {} value `{cell}`", row + 1, c))
                })?
            };
            channels[c.index()].push(v);
        }
    }
    if times.is_empty() {
        return Err(Error::Format("telemetry file has no samples".into()));
    }
    let period = if times.len() >= 2 {
        times[1].0 - times[0].0
    } else {
        DEFAULT_SAMPLE_PERIOD_S
    };
    if period <= 0 {
        return Err(Error::Format("timestamps are not increasing".into()));
    }
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1].0 - w[0].0;
        if dt <= 0 {
            return Err(Error::Format(format!("non-monotonic timestamp at row {}", i + 2)));
        }
        if dt != period {
            return Err(Error::Format(format!(
                "non-uniform sampling at row {}: {dt} s step, expected {period} s",
                i + 2
            )));
        }
    }
    TelemetryLog::new(well_id, times[0], period, channels)
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        // shortest representation that round-trips
        format!("{v}")
    } else {
        String::new()
    }
}

pub fn write_log<W: std::io::Write>(writer: W, log: &TelemetryLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TELEMETRY_HEADER)?;
    let mut row: Vec<String> = Vec::with_capacity(TELEMETRY_HEADER.len());
    for i in 0..log.len() {
        row.clear();
        row.push(log.time_at(i).to_iso());
        for c in Channel::ALL {
            row.push(fmt_value(log.channel(c)[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_log(path: &Path, log: &TelemetryLog) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    write_log(std::io::BufWriter::new(file), log).map_err(|e| e.in_file(path))
}

/// Replaces every missing or out-of-range value with the most recent valid
/// value of the same channel. A leading run with no earlier valid value takes
/// the first valid value that follows it.
pub fn clean(log: &TelemetryLog, specs: &[ChannelSpec]) -> Result<TelemetryLog> {
    let mut channels = Vec::with_capacity(N_CHANNELS);
    for c in Channel::ALL {
        let spec = spec_for(specs, c)?;
        let series = log.channel(c);
        let first = series
            .iter()
            .copied()
            .find(|&v| spec.contains(v))
            .ok_or_else(|| Error::UnusableChannel(c.code().into()))?;
        let mut last = first;
        let cleaned = series
            .iter()
            .map(|&v| {
                if spec.contains(v) {
                    last = v;
                }
                last
            })
            .collect();
        channels.push(cleaned);
    }
    TelemetryLog::new(
        log.well_id.clone(),
        log.start_time,
        log.sample_period_s,
        channels,
    )
}

/// Returns the samples stamped in `[start, end)`.
pub fn slice(log: &TelemetryLog, start: Timestamp, end: Timestamp) -> Result<TelemetryLog> {
    let empty = || Error::EmptySlice {
        start: start.to_iso(),
        end: end.to_iso(),
    };
    if start >= end {
        return Err(empty());
    }
    let lo = log.index_at_or_after(start);
    let hi = log.index_at_or_after(end);
    if lo >= hi {
        return Err(empty());
    }
    Ok(slice_indices(log, lo, hi))
}

/// Sample-index slice `[lo, hi)`; indices must be in bounds.
pub fn slice_indices(log: &TelemetryLog, lo: usize, hi: usize) -> TelemetryLog {
    TelemetryLog {
        well_id: log.well_id.clone(),
        start_time: log.time_at(lo),
        sample_period_s: log.sample_period_s,
        channels: log.channels.iter().map(|c| c[lo..hi].to_vec()).collect(),
    }
}

/// The six accident classes of the reference table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AccidentType {
    Stuck,
    WashoutOfDrillingPipe,
    MudLoss,
    BreakOfDrillingPipe,
    FluidShow,
    Packing,
}

pub const N_TYPES: usize = 6;

impl AccidentType {
    pub const ALL: [AccidentType; N_TYPES] = [
        AccidentType::Stuck,
        AccidentType::WashoutOfDrillingPipe,
        AccidentType::MudLoss,
        AccidentType::BreakOfDrillingPipe,
        AccidentType::FluidShow,
        AccidentType::Packing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short name used in CSV files.
    pub fn code(self) -> &'static str {
        match self {
            AccidentType::Stuck => "stuck",
            AccidentType::WashoutOfDrillingPipe => "washout",
            AccidentType::MudLoss => "mud_loss",
            AccidentType::BreakOfDrillingPipe => "break",
            AccidentType::FluidShow => "fluid_show",
            AccidentType::Packing => "packing",
        }
    }

    fn long_name(self) -> &'static str {
        match self {
            AccidentType::Stuck => "Stuck",
            AccidentType::WashoutOfDrillingPipe => "WashoutOfDrillingPipe",
            AccidentType::MudLoss => "MudLoss",
            AccidentType::BreakOfDrillingPipe => "BreakOfDrillingPipe",
            AccidentType::FluidShow => "FluidShow",
            AccidentType::Packing => "Packing",
        }
    }
}

impl FromStr for AccidentType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        AccidentType::ALL
            .into_iter()
            .find(|t| t.code().eq_ignore_ascii_case(s) || t.long_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown accident type `{s}`")))
    }
}

impl fmt::Display for AccidentType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccidentRecord {
    pub well_id: String,
    pub accident_type: AccidentType,
    pub start_time: Timestamp,
}

pub const REFERENCE_HEADER: [&str; 3] = ["well_id", "accident_type", "start_time"];

pub fn load_reference(path: &Path) -> Result<Vec<AccidentRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::from(e).in_file(path))?;
    read_reference(file).map_err(|e| e.in_file(path))
}

pub fn read_reference<R: std::io::Read>(reader: R) -> Result<Vec<AccidentRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 3];
    for (k, name) in REFERENCE_HEADER.iter().enumerate() {
        cols[k] = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let get = |k: usize| rec.get(cols[k]).unwrap_or("");
        out.push(AccidentRecord {
            well_id: get(0).to_string(),
            accident_type: get(1).parse()?,
            start_time: get(2).parse()?,
        });
    }
    Ok(out)
}

pub fn write_reference<W: std::io::Write>(writer: W, records: &[AccidentRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(REFERENCE_HEADER)?;
    for r in records {
        w.write_record([
            r.well_id.as_str(),
            r.accident_type.code(),
            &r.start_time.to_iso(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Checks that every record points at a known well and falls inside its log.
pub fn validate_reference(records: &[AccidentRecord], logs: &[TelemetryLog]) -> Result<()> {
    for r in records {
        let log = logs
            .iter()
            .find(|l| l.well_id == r.well_id)
            .ok_or_else(|| Error::Validation(format!("accident references unknown well {}", r.well_id)))?;
        if r.start_time < log.start_time || r.start_time >= log.end_time() {
            return Err(Error::Validation(format!(
                "{} accident at {} lies outside the log of well {}",
                r.accident_type, r.start_time, r.well_id
            )));
        }
    }
    Ok(())
}
