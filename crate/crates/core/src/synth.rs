//! Deterministic synthetic mud logs with injected pre-accident patterns.
//!
//! Each well runs a piecewise program of rig operations (drilling with
//! connections, reaming, circulating, tripping out and in). Before every
//! scheduled accident a precursor pattern of its type recurs as short
//! episodes from an onset 4–6 h before the accident start:
//!
//! | type        | channels      | episode                                  |
//! |-------------|---------------|------------------------------------------|
//! | stuck       | HKLA          | overpull / drag spike                    |
//! | washout     | SPPA          | pressure drop at unchanged flow          |
//! | mud loss    | SPPA, TVT     | pressure dip with falling tank volume    |
//! | break       | TQA           | up/down torque jumps                     |
//! | fluid show  | GASA, TVT     | gas rise with pit gain                   |
//! | packing     | TQA, SPPA     | torque spikes with pressure rise         |
//!
//! Episode amplitudes scale with the channel's noise level.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::eval::SimilarityMatrix;
use crate::rng;
use crate::telemetry::{
    canonical_specs, AccidentRecord, AccidentType, Channel, TelemetryLog, Timestamp, N_CHANNELS,
};

const HOUR: i64 = 3600;

/// One scheduled accident: well index, type, start offset from the log start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledAccident {
    pub well: usize,
    pub accident_type: AccidentType,
    pub offset_s: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_wells: usize,
    pub hours_per_well: f64,
    pub sample_period_s: i64,
    pub accident_schedule: Vec<ScheduledAccident>,
    /// Per-channel Gaussian noise, canonical channel order.
    pub noise_std: [f64; N_CHANNELS],
    /// Episode amplitude in units of the channel's noise level.
    pub amplitude: f64,
    pub seed: u64,
    pub start_time: Timestamp,
}

pub const DEFAULT_NOISE_STD: [f64; N_CHANNELS] = [
    2.0,   // HKLA t
    0.2,   // BPOS m
    0.05,  // DBTM m
    0.05,  // DMEA m
    0.8,   // TQA kN*m
    0.4,   // WOB t
    1.5,   // RPMA rpm
    2.0,   // SPPA atm
    0.4,   // MFIA l/s
    0.3,   // TVT m3
    0.003, // GASA fraction
];

impl Default for ScenarioConfig {
    fn default() -> Self {
        let mut cfg = ScenarioConfig {
            n_wells: 60,
            hours_per_well: 48.0,
            sample_period_s: 5,
            accident_schedule: Vec::new(),
            noise_std: DEFAULT_NOISE_STD,
            amplitude: 5.0,
            seed: 7,
            start_time: Timestamp(1_551_398_400), // 2019-03-01T00:00:00Z
        };
        cfg.accident_schedule = default_schedule(cfg.n_wells, 7, cfg.hours_per_well, cfg.seed);
        cfg
    }
}

/// `per_type` accidents of each type, one per well from well 0 upward,
/// types interleaved, starts drawn in the last part of the log so that at
/// least 24 h precede each accident and about 6 h follow it.
pub fn default_schedule(n_wells: usize, per_type: usize, hours: f64, seed: u64) -> Vec<ScheduledAccident> {
    let total = (per_type * AccidentType::ALL.len()).min(n_wells);
    let mut r = rng::rng(rng::derive_named(seed, "schedule", 0));
    let lo = 24 * HOUR + HOUR;
    let hi = ((hours * HOUR as f64) as i64 - 6 * HOUR).max(lo + 1);
    (0..total)
        .map(|i| ScheduledAccident {
            well: i,
            accident_type: AccidentType::ALL[i % AccidentType::ALL.len()],
            // whole minutes
            offset_s: r.random_range(lo / 60..hi / 60) * 60,
        })
        .collect()
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_period_s <= 0 {
            return Err(Error::Config("sample period must be positive".into()));
        }
        if !(self.hours_per_well > 0.0) {
            return Err(Error::Config("hours_per_well must be positive".into()));
        }
        let len_s = self.log_samples() as i64 * self.sample_period_s;
        for a in &self.accident_schedule {
            if a.well >= self.n_wells {
                return Err(Error::Config(format!(
                    "accident scheduled on well {} but only {} wells exist",
                    a.well, self.n_wells
                )));
            }
            if a.offset_s < 24 * HOUR {
                return Err(Error::Config(format!(
                    "{} accident on well {} starts {} s into the log; at least 24 h of history is required",
                    a.accident_type, a.well, a.offset_s
                )));
            }
            if a.offset_s >= len_s {
                return Err(Error::Config(format!(
                    "{} accident on well {} starts after the log ends",
                    a.accident_type, a.well
                )));
            }
        }
        Ok(())
    }

    pub fn log_samples(&self) -> usize {
        (self.hours_per_well * HOUR as f64 / self.sample_period_s as f64).round() as usize
    }

    pub fn well_id(&self, well: usize) -> String {
        format!("well_{well:03}")
    }
}

/// Rig operating mode of a stretch of log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Drilling,
    Reaming,
    Circulating,
    TripOut,
    TripIn,
}

/// Ground-truth span of one injected precursor episode on one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub well_id: String,
    pub channel: Channel,
    pub start: Timestamp,
    pub end: Timestamp,
    pub pattern_type: AccidentType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub logs: Vec<TelemetryLog>,
    pub accidents: Vec<AccidentRecord>,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy)]
struct WellParams {
    depth0: f64,
    rop_m_per_h: f64,
    flow: f64,
    rpm: f64,
    torque0: f64,
    wob: f64,
    tank0: f64,
    gas0: f64,
}

impl WellParams {
    fn draw(r: &mut rng::Rng) -> Self {
        WellParams {
            depth0: r.random_range(1800.0..3200.0),
            rop_m_per_h: r.random_range(18.0..32.0),
            flow: r.random_range(30.0..38.0),
            rpm: r.random_range(70.0..100.0),
            torque0: r.random_range(10.0..16.0),
            wob: r.random_range(8.0..12.0),
            tank0: r.random_range(120.0..160.0),
            gas0: r.random_range(0.02..0.05),
        }
    }

    fn string_weight(&self, bit_depth: f64) -> f64 {
        BLOCK_WEIGHT + 0.035 * bit_depth
    }

    fn standpipe(&self, flow: f64, depth: f64) -> f64 {
        0.1 * flow * flow + 0.012 * depth
    }
}

const BLOCK_WEIGHT: f64 = 20.0;
const STAND_M: f64 = 28.0;
const BPOS_TOP: f64 = 30.0;
const BPOS_LOW: f64 = 2.0;


fn pick_regime(r: &mut rng::Rng, prev: Option<Regime>, bit: f64, hole: f64) -> Regime {
    match prev {
        Some(Regime::TripOut) => return Regime::TripIn,
        Some(Regime::TripIn) if bit < hole - 1.0 => return Regime::TripIn,
        _ => {}
    }
    let u: f64 = r.random();
    if u < 0.45 {
        Regime::Drilling
    } else if u < 0.62 {
        Regime::Reaming
    } else if u < 0.80 {
        Regime::Circulating
    } else {
        Regime::TripOut
    }
}

/// Simulates the noise-free operating program.
fn simulate(params: &WellParams, n: usize, period: i64, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    let dt_h = period as f64 / HOUR as f64;
    let mut values = vec![vec![0.0; n]; N_CHANNELS];

    let mut hole = params.depth0;
    let mut bit = params.depth0;
    let mut bpos = BPOS_TOP;
    let mut tank = params.tank0;
    let mut gas = params.gas0;

    let mut i = 0;
    let mut prev = None;
    while i < n {
        let regime = pick_regime(r, prev, bit, hole);
        let hours = match regime {
            Regime::TripOut | Regime::TripIn => r.random_range(1.5..3.0),
            _ => r.random_range(2.0..5.0),
        };
        let len = ((hours / dt_h) as usize).max(1);
        let end = (i + len).min(n);

        // sub-cycle clock inside a regime, in samples
        let mut phase = 0usize;
        let stand_cycle = (4.0 * 60.0 / period as f64) as usize; // trips: 4 min per stand
        let connection = (4.0 * 60.0 / period as f64) as usize;
        let ream_period = (8.0 * 60.0 / period as f64) as usize;
        if matches!(regime, Regime::TripIn) {
            bpos = BPOS_TOP;
        }
        while i < end {
            let mut v = [0.0f64; N_CHANNELS];
            match regime {
                Regime::Drilling => {
                    let drilling_len = ((STAND_M / params.rop_m_per_h) / dt_h) as usize;
                    let cyc = phase % (drilling_len + connection);
                    if cyc < drilling_len {
                        let adv = params.rop_m_per_h * dt_h;
                        hole += adv;
                        bit = hole;
                        bpos = (bpos - adv).max(BPOS_LOW);
                        let wob = params.wob;
                        v[Channel::Hkla.index()] = params.string_weight(bit) - wob;
                        v[Channel::Wob.index()] = wob;
                        v[Channel::Rpma.index()] = params.rpm;
                        v[Channel::Tqa.index()] = params.torque0 + 0.8 * wob;
                        v[Channel::Mfia.index()] = params.flow;
                        v[Channel::Sppa.index()] = params.standpipe(params.flow, hole) + 1.2 * wob;
                        tank -= 0.02 * adv;
                        gas += (params.gas0 + 0.01 - gas) * 0.002;
                    } else {
                        // connection: pumps off, slips set, new stand picked up
                        let c = cyc - drilling_len;
                        let frac = c as f64 / connection as f64;
                        bpos = BPOS_LOW + (BPOS_TOP - BPOS_LOW) * frac;
                        let in_slips = frac > 0.15 && frac < 0.85;
                        v[Channel::Hkla.index()] = if in_slips {
                            BLOCK_WEIGHT
                        } else {
                            params.string_weight(bit)
                        };
                        let ramp = (1.0 - (frac / 0.15).min(1.0)).max(((frac - 0.85) / 0.15).max(0.0));
                        v[Channel::Mfia.index()] = params.flow * ramp;
                        v[Channel::Sppa.index()] = params.standpipe(params.flow * ramp, hole) * ramp;
                        tank += if frac < 0.5 { 0.004 } else { -0.004 };
                        gas += (params.gas0 - gas) * 0.002;
                    }
                    v[Channel::Bpos.index()] = bpos;
                }
                Regime::Reaming => {
                    let c = (phase % ream_period) as f64 / ream_period as f64;
                    let tri = if c < 0.5 { c * 2.0 } else { 2.0 - c * 2.0 };
                    bpos = 5.0 + 20.0 * tri;
                    let going_up = c >= 0.5;
                    let drag = if going_up { 4.0 } else { -4.0 };
                    bit = hole - (bpos - BPOS_LOW);
                    v[Channel::Hkla.index()] = params.string_weight(bit) + drag;
                    v[Channel::Bpos.index()] = bpos;
                    v[Channel::Rpma.index()] = params.rpm * 0.8;
                    v[Channel::Tqa.index()] = params.torque0 + 3.0;
                    v[Channel::Mfia.index()] = params.flow;
                    v[Channel::Sppa.index()] = params.standpipe(params.flow, hole);
                    gas += (params.gas0 - gas) * 0.001;
                }
                Regime::Circulating => {
                    bpos = 10.0;
                    bit = hole - 8.0;
                    v[Channel::Hkla.index()] = params.string_weight(bit);
                    v[Channel::Bpos.index()] = bpos;
                    v[Channel::Rpma.index()] = 30.0;
                    v[Channel::Tqa.index()] = params.torque0 * 0.5;
                    v[Channel::Mfia.index()] = params.flow * 0.9;
                    v[Channel::Sppa.index()] = params.standpipe(params.flow * 0.9, hole);
                    gas += (params.gas0 * 0.7 - gas) * 0.002;
                }
                Regime::TripOut | Regime::TripIn => {
                    let c = (phase % stand_cycle) as f64 / stand_cycle as f64;
                    let out = regime == Regime::TripOut;
                    let moving = c < 0.6;
                    let f = if moving { c / 0.6 } else { (c - 0.6) / 0.4 };
                    if moving {
                        bpos = if out {
                            BPOS_LOW + (BPOS_TOP - BPOS_LOW) * f
                        } else {
                            BPOS_TOP - (BPOS_TOP - BPOS_LOW) * f
                        };
                        let step = STAND_M / (0.6 * stand_cycle as f64);
                        bit = if out { (bit - step).max(100.0) } else { (bit + step).min(hole) };
                        let drag = if out { 5.0 } else { -5.0 };
                        v[Channel::Hkla.index()] = params.string_weight(bit) + drag;
                    } else {
                        bpos = if out {
                            BPOS_TOP - (BPOS_TOP - BPOS_LOW) * f
                        } else {
                            BPOS_LOW + (BPOS_TOP - BPOS_LOW) * f
                        };
                        v[Channel::Hkla.index()] = BLOCK_WEIGHT;
                    }
                    v[Channel::Bpos.index()] = bpos;
                    tank += if out { -0.0015 } else { 0.0015 };
                    gas += (params.gas0 * 0.5 - gas) * 0.002;
                }
            }
            v[Channel::Dbtm.index()] = bit;
            v[Channel::Dmea.index()] = hole;
            v[Channel::Tvt.index()] = tank;
            v[Channel::Gasa.index()] = gas;
            for (c, x) in v.iter().enumerate() {
                values[c][i] = *x;
            }
            phase += 1;
            i += 1;
        }
        // keep the tanks inside their physical range over long programs
        tank = tank.clamp(60.0, 200.0);
        if regime == Regime::TripIn && bit >= hole - 1.0 {
            bpos = BPOS_TOP;
        }
        prev = Some(regime);
    }
    values
}

/// Smooth-edged pulse: ramps over `edge` samples, holds, ramps back.
fn pulse(len: usize, edge: usize) -> impl Iterator<Item = f64> {
    let edge = edge.max(1).min(len / 2).max(1);
    (0..len).map(move |k| {
        let up = ((k + 1) as f64 / edge as f64).min(1.0);
        let down = ((len - k) as f64 / edge as f64).min(1.0);
        up.min(down)
    })
}

struct Injector<'a> {
    values: &'a mut [Vec<f64>],
    noise: &'a [f64; N_CHANNELS],
    amplitude: f64,
    period: i64,
    well_id: &'a str,
    start_time: Timestamp,
    annotations: Vec<Annotation>,
}

impl Injector<'_> {
    fn amp(&self, c: Channel) -> f64 {
        self.amplitude * self.noise[c.index()]
    }

    fn samples(&self, seconds: f64) -> usize {
        (seconds / self.period as f64).round().max(1.0) as usize
    }

    /// Adds `height * shape[k]` from sample `at`; records the span.
    fn add(&mut self, c: Channel, at: usize, shape: &[f64], height: f64, kind: AccidentType) {
        let n = self.values[c.index()].len();
        let end = (at + shape.len()).min(n);
        if at >= end {
            return;
        }
        for (k, s) in shape.iter().enumerate().take(end - at) {
            self.values[c.index()][at + k] += height * s;
        }
        self.annotations.push(Annotation {
            well_id: self.well_id.to_string(),
            channel: c,
            start: self.start_time.plus_seconds(at as i64 * self.period),
            end: self.start_time.plus_seconds(end as i64 * self.period),
            pattern_type: kind,
        });
    }

    /// Adds a persistent level change from `at` to the end of the log.
    fn shift_from(&mut self, c: Channel, at: usize, ramp: usize, delta: f64) {
        let series = &mut self.values[c.index()];
        for (k, v) in series.iter_mut().enumerate().skip(at) {
            let f = ((k - at + 1) as f64 / ramp.max(1) as f64).min(1.0);
            *v += delta * f;
        }
    }

    fn episode(&mut self, kind: AccidentType, at: usize, r: &mut rng::Rng) -> usize {
        let big = |r: &mut rng::Rng| r.random_range(1.2..2.0);
        match kind {
            AccidentType::Stuck => {
                let len = self.samples(r.random_range(30.0..90.0));
                let sign = if r.random_bool(0.7) { 1.0 } else { -1.0 };
                let h = sign * big(r) * self.amp(Channel::Hkla);
                let shape: Vec<f64> = pulse(len, 2).collect();
                self.add(Channel::Hkla, at, &shape, h, kind);
                len
            }
            AccidentType::WashoutOfDrillingPipe => {
                let len = self.samples(r.random_range(180.0..480.0));
                let shape: Vec<f64> = pulse(len, self.samples(60.0)).collect();
                let h = -big(r) * self.amp(Channel::Sppa);
                self.add(Channel::Sppa, at, &shape, h, kind);
                len
            }
            AccidentType::MudLoss => {
                let len = self.samples(r.random_range(300.0..600.0));
                let shape: Vec<f64> = pulse(len, self.samples(60.0)).collect();
                let h = -r.random_range(1.0..1.5) * self.amp(Channel::Sppa);
                self.add(Channel::Sppa, at, &shape, h, kind);
                let loss = -big(r) * self.amp(Channel::Tvt);
                self.shift_from(Channel::Tvt, at, len, loss);
                self.annotations.push(Annotation {
                    channel: Channel::Tvt,
                    ..self.annotations.last().cloned().expect("just pushed")
                });
                len
            }
            AccidentType::BreakOfDrillingPipe => {
                let mut pos = at;
                let jumps = r.random_range(3..=6);
                for j in 0..jumps {
                    let len = self.samples(r.random_range(20.0..60.0));
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    let h = sign * big(r) * self.amp(Channel::Tqa);
                    self.add(Channel::Tqa, pos, &vec![1.0; len], h, kind);
                    pos += len + self.samples(r.random_range(5.0..20.0));
                }
                pos - at
            }
            AccidentType::FluidShow => {
                let len = self.samples(r.random_range(300.0..600.0));
                let shape: Vec<f64> = pulse(len, len / 3).collect();
                let h = r.random_range(1.5..2.5) * self.amp(Channel::Gasa);
                self.add(Channel::Gasa, at, &shape, h, kind);
                let gain = r.random_range(1.0..1.5) * self.amp(Channel::Tvt);
                self.add(Channel::Tvt, at, &shape, gain, kind);
                len
            }
            AccidentType::Packing => {
                let len = self.samples(r.random_range(30.0..90.0));
                let shape: Vec<f64> = pulse(len, 2).collect();
                let h = big(r) * self.amp(Channel::Tqa);
                self.add(Channel::Tqa, at, &shape, h, kind);
                let p = r.random_range(1.0..1.5) * self.amp(Channel::Sppa);
                self.add(Channel::Sppa, at, &shape, p, kind);
                len
            }
        }
    }

    fn interval_s(kind: AccidentType, r: &mut rng::Rng) -> f64 {
        match kind {
            AccidentType::MudLoss | AccidentType::FluidShow => r.random_range(900.0..1500.0),
            AccidentType::WashoutOfDrillingPipe => r.random_range(720.0..1500.0),
            _ => r.random_range(600.0..1200.0),
        }
    }

    /// Visible consequence of the accident itself during its first hour.
    fn aftermath(&mut self, kind: AccidentType, start: usize, r: &mut rng::Rng) {
        let n = self.values[0].len();
        let end = (start + self.samples(3600.0)).min(n);
        let span = start..end;
        match kind {
            AccidentType::Stuck => {
                let hold = self.values[Channel::Bpos.index()][start];
                for i in span {
                    self.values[Channel::Bpos.index()][i] = hold;
                    self.values[Channel::Hkla.index()][i] += 3.0 * self.amp(Channel::Hkla) * (i as f64 * 0.05).sin().abs();
                }
            }
            AccidentType::BreakOfDrillingPipe => {
                for i in span {
                    self.values[Channel::Hkla.index()][i] *= 0.6;
                }
            }
            AccidentType::WashoutOfDrillingPipe => {
                for i in span {
                    self.values[Channel::Sppa.index()][i] -= 3.0 * self.amp(Channel::Sppa);
                }
            }
            AccidentType::MudLoss => {
                let d = -r.random_range(8.0..15.0);
                self.shift_from(Channel::Tvt, start, end - start, d);
            }
            AccidentType::FluidShow => {
                for i in span {
                    self.values[Channel::Gasa.index()][i] += 5.0 * self.amp(Channel::Gasa);
                }
            }
            AccidentType::Packing => {
                for i in span {
                    self.values[Channel::Tqa.index()][i] += 3.0 * self.amp(Channel::Tqa);
                    self.values[Channel::Sppa.index()][i] += 3.0 * self.amp(Channel::Sppa);
                }
            }
        }
    }
}

fn generate_well(
    cfg: &ScenarioConfig,
    well: usize,
) -> Result<(TelemetryLog, Vec<AccidentRecord>, Vec<Annotation>)> {
    let mut r = rng::rng(rng::derive_named(cfg.seed, "well", well as u64));
    let n = cfg.log_samples();
    let period = cfg.sample_period_s;
    let well_id = cfg.well_id(well);
    let start_time = cfg.start_time.plus_seconds(well as i64 * 7 * 24 * HOUR);
    let params = WellParams::draw(&mut r);

    let mut accidents: Vec<ScheduledAccident> = cfg
        .accident_schedule
        .iter()
        .filter(|a| a.well == well)
        .copied()
        .collect();
    accidents.sort_by_key(|a| a.offset_s);

    let mut onsets = Vec::new();
    for a in &accidents {
        let start = (a.offset_s / period) as usize;
        let lead = r.random_range(4.0 * HOUR as f64..6.0 * HOUR as f64);
        onsets.push(start.saturating_sub((lead / period as f64) as usize));
    }

    let mut values = simulate(&params, n, period, &mut r);
    let mut inj = Injector {
        values: &mut values,
        noise: &cfg.noise_std,
        amplitude: cfg.amplitude,
        period,
        well_id: &well_id,
        start_time,
        annotations: Vec::new(),
    };
    let mut records = Vec::new();
    for (a, &onset) in accidents.iter().zip(&onsets) {
        let start = (a.offset_s / period) as usize;
        let mut at = onset;
        while at < start {
            let len = inj.episode(a.accident_type, at, &mut r);
            let gap = inj.samples(Injector::interval_s(a.accident_type, &mut r));
            at += len.max(1) + gap;
        }
        inj.aftermath(a.accident_type, start, &mut r);
        records.push(AccidentRecord {
            well_id: well_id.clone(),
            accident_type: a.accident_type,
            start_time: start_time.plus_seconds(start as i64 * period),
        });
    }
    // drop episode rows that spill past the accident start
    let mut annotations = inj.annotations;
    annotations.retain(|an| {
        records
            .iter()
            .any(|rec| an.start < rec.start_time && an.start >= rec.start_time.plus_seconds(-6 * HOUR))
    });

    let specs = canonical_specs();
    for (c, series) in values.iter_mut().enumerate() {
        let noise = Normal::new(0.0, cfg.noise_std[c]).map_err(|e| Error::Config(e.to_string()))?;
        let spec = &specs[c];
        for v in series.iter_mut() {
            *v = (*v + noise.sample(&mut r)).clamp(spec.min_value, spec.max_value);
        }
    }
    // depths are monotone sensors; keep the hole depth from jittering backwards
    let dmea = &mut values[Channel::Dmea.index()];
    for i in 1..dmea.len() {
        if dmea[i] < dmea[i - 1] - 0.2 {
            dmea[i] = dmea[i - 1] - 0.2;
        }
    }
    let log = TelemetryLog::new(well_id, start_time, period, values)?;
    Ok((log, records, annotations))
}

/// Generates the corpus described by `config`.
pub fn generate_corpus(config: &ScenarioConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let wells: Vec<_> = (0..config.n_wells)
        .into_par_iter()
        .map(|w| generate_well(config, w))
        .collect::<Result<_>>()?;
    let mut corpus = SyntheticCorpus {
        logs: Vec::with_capacity(wells.len()),
        accidents: Vec::new(),
        annotations: Vec::new(),
    };
    for (log, recs, ann) in wells {
        corpus.logs.push(log);
        corpus.accidents.extend(recs);
        corpus.annotations.extend(ann);
    }
    Ok(corpus)
}

/// Ground-truth class of a span: a precursor type, or `None` for normal.
pub type SegmentClass = Option<AccidentType>;

/// A t-segment drawn from the corpus: well index into the log list and
/// sample range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentRef {
    pub well: usize,
    pub offset: usize,
    pub len: usize,
}

fn overlap(a0: i64, a1: i64, b0: i64, b1: i64) -> i64 {
    (a1.min(b1) - a0.max(b0)).max(0)
}

/// Dominant class of `[start, end)` in `well_id`: the precursor type whose
/// activity window (first to last episode before an accident) covers the
/// largest share of the span, provided it covers at least half of it.
pub fn dominant_class(annotations: &[Annotation], well_id: &str, start: Timestamp, end: Timestamp) -> SegmentClass {
    let span = end.0 - start.0;
    let mut best: Option<(i64, AccidentType)> = None;
    for t in AccidentType::ALL {
        let mut eps = annotations
            .iter()
            .filter(|a| a.well_id == well_id && a.pattern_type == t)
            .peekable();
        if eps.peek().is_none() {
            continue;
        }
        let (lo, hi) = eps.fold((i64::MAX, i64::MIN), |(lo, hi), a| (lo.min(a.start.0), hi.max(a.end.0)));
        let ov = overlap(start.0, end.0, lo, hi);
        if 2 * ov >= span && best.is_none_or(|(b, _)| ov > b) {
            best = Some((ov, t));
        }
    }
    best.map(|(_, t)| t)
}

/// Reference similarity: two segments are similar iff their dominant classes match.
pub fn reference_similarity(
    annotations: &[Annotation],
    logs: &[TelemetryLog],
    segments: &[SegmentRef],
) -> Result<(SimilarityMatrix, Vec<SegmentClass>)> {
    let classes: Vec<SegmentClass> = segments
        .iter()
        .map(|s| {
            let log = logs
                .get(s.well)
                .ok_or_else(|| Error::Config(format!("segment refers to missing well {}", s.well)))?;
            Ok(dominant_class(
                annotations,
                &log.well_id,
                log.time_at(s.offset),
                log.time_at(s.offset + s.len),
            ))
        })
        .collect::<Result<_>>()?;
    Ok((SimilarityMatrix::from_labels(&classes), classes))
}

/// Deterministic sample of `m` t-segments of `len` samples: half from
/// precursor activity windows (spread evenly over the accidents), half from
/// elsewhere, all start offsets drawn with `seed`.
pub fn sample_segments(
    corpus_logs: &[TelemetryLog],
    annotations: &[Annotation],
    accidents: &[AccidentRecord],
    len: usize,
    m: usize,
    seed: u64,
) -> Vec<SegmentRef> {
    let mut r = rng::rng(rng::derive_named(seed, "segments", m as u64));
    let mut out = Vec::with_capacity(m);
    let well_index = |id: &str| corpus_logs.iter().position(|l| l.well_id == id);
    let with_acc: Vec<(usize, &AccidentRecord)> = accidents
        .iter()
        .filter_map(|a| well_index(&a.well_id).map(|w| (w, a)))
        .collect();
    let n_pre = if with_acc.is_empty() { 0 } else { m / 2 };
    for k in 0..n_pre {
        let (w, acc) = with_acc[k % with_acc.len()];
        let log = &corpus_logs[w];
        let eps: Vec<&Annotation> = annotations
            .iter()
            .filter(|a| a.well_id == acc.well_id && a.pattern_type == acc.accident_type)
            .collect();
        let lo_t = eps.iter().map(|a| a.start).min().unwrap_or(acc.start_time);
        let lo = log.index_at_or_after(lo_t);
        let hi = log.index_at_or_after(acc.start_time).saturating_sub(len);
        let off = if hi > lo { r.random_range(lo..=hi) } else { hi };
        out.push(SegmentRef { well: w, offset: off, len });
    }
    while out.len() < m {
        let w = r.random_range(0..corpus_logs.len());
        let log = &corpus_logs[w];
        if log.len() < len {
            continue;
        }
        let off = r.random_range(0..=log.len() - len);
        out.push(SegmentRef { well: w, offset: off, len });
    }
    out
}

pub const ANNOTATION_HEADER: [&str; 5] = ["well_id", "channel", "start", "end", "pattern_type"];

pub fn write_annotations<W: std::io::Write>(writer: W, annotations: &[Annotation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ANNOTATION_HEADER)?;
    for a in annotations {
        w.write_record([
            a.well_id.as_str(),
            a.channel.code(),
            &a.start.to_iso(),
            &a.end.to_iso(),
            a.pattern_type.code(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_annotations<R: std::io::Read>(reader: R) -> Result<Vec<Annotation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 5];
    for (k, name) in ANNOTATION_HEADER.iter().enumerate() {
        cols[k] = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let get = |k: usize| rec.get(cols[k]).unwrap_or("");
            Ok(Annotation {
                well_id: get(0).to_string(),
                channel: get(1).parse()?,
                start: get(2).parse()?,
                end: get(3).parse()?,
                pattern_type: get(4).parse()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n_wells: usize, schedule: Vec<ScheduledAccident>) -> ScenarioConfig {
        ScenarioConfig {
            n_wells,
            hours_per_well: 30.0,
            accident_schedule: schedule,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn default_schedule_shape() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.accident_schedule.len(), 42);
        for t in AccidentType::ALL {
            assert_eq!(cfg.accident_schedule.iter().filter(|a| a.accident_type == t).count(), 7);
        }
        cfg.validate().unwrap();
        assert!(cfg.accident_schedule.iter().all(|a| a.offset_s >= 25 * HOUR && a.offset_s <= 42 * HOUR));
    }

    #[test]
    fn one_quiet_well() {
        let c = generate_corpus(&small(1, vec![])).unwrap();
        assert_eq!(c.logs.len(), 1);
        assert!(c.accidents.is_empty());
        assert!(c.annotations.is_empty());
        assert_eq!(c.logs[0].len(), 30 * 720);
    }

    #[test]
    fn deterministic() {
        let sched = vec![ScheduledAccident {
            well: 1,
            accident_type: AccidentType::Packing,
            offset_s: 26 * HOUR,
        }];
        let a = generate_corpus(&small(2, sched.clone())).unwrap();
        let b = generate_corpus(&small(2, sched)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_short_history() {
        let cfg = small(
            1,
            vec![ScheduledAccident {
                well: 0,
                accident_type: AccidentType::Stuck,
                offset_s: 20 * HOUR,
            }],
        );
        assert!(matches!(generate_corpus(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn values_stay_in_range_and_precursors_are_annotated() {
        let sched: Vec<ScheduledAccident> = AccidentType::ALL
            .iter()
            .enumerate()
            .map(|(i, &t)| ScheduledAccident {
                well: i,
                accident_type: t,
                offset_s: 27 * HOUR,
            })
            .collect();
        let c = generate_corpus(&small(6, sched)).unwrap();
        let specs = canonical_specs();
        for log in &c.logs {
            for (spec, series) in specs.iter().zip(log.channels()) {
                assert!(series.iter().all(|v| spec.contains(*v)), "{}", spec.channel);
            }
        }
        for acc in &c.accidents {
            let lo = acc.start_time.plus_seconds(-6 * HOUR);
            assert!(c.annotations.iter().any(|a| a.well_id == acc.well_id
                && a.pattern_type == acc.accident_type
                && a.start >= lo
                && a.end <= acc.start_time.plus_seconds(60)));
        }
    }

    #[test]
    fn stuck_precursor_has_excursions() {
        let cfg = ScenarioConfig {
            noise_std: DEFAULT_NOISE_STD,
            ..small(
                1,
                vec![ScheduledAccident {
                    well: 0,
                    accident_type: AccidentType::Stuck,
                    offset_s: 28 * HOUR,
                }],
            )
        };
        let with = generate_corpus(&cfg).unwrap();
        // zero amplitude and noise replays the same random stream without
        // the pattern, giving the noise-free baseline program
        let quiet_cfg = ScenarioConfig {
            amplitude: 0.0,
            noise_std: [0.0; N_CHANNELS],
            ..cfg.clone()
        };
        let base = generate_corpus(&quiet_cfg).unwrap();

        let acc = &with.accidents[0];
        let log = &with.logs[0];
        let lo = log.index_at_or_after(acc.start_time.plus_seconds(-6 * HOUR));
        let hi = log.index_at_or_after(acc.start_time);
        let thr = 5.0 * cfg.noise_std[0];
        let hk = log.channel(Channel::Hkla);
        let bk = base.logs[0].channel(Channel::Hkla);
        // count separate runs of samples outside baseline ± 5σ
        let mut runs = 0;
        let mut inside = false;
        for i in lo..hi {
            let out = (hk[i] - bk[i]).abs() > thr;
            if out && !inside {
                runs += 1;
            }
            inside = out;
        }
        assert!(runs >= 3, "only {runs} excursions");
    }

    #[test]
    fn annotation_csv_round_trip() {
        let sched = vec![ScheduledAccident {
            well: 0,
            accident_type: AccidentType::MudLoss,
            offset_s: 25 * HOUR,
        }];
        let c = generate_corpus(&small(1, sched)).unwrap();
        let mut buf = Vec::new();
        write_annotations(&mut buf, &c.annotations).unwrap();
        assert_eq!(read_annotations(buf.as_slice()).unwrap(), c.annotations);
    }

    #[test]
    fn reference_similarity_classes() {
        let sched = vec![ScheduledAccident {
            well: 0,
            accident_type: AccidentType::Stuck,
            offset_s: 28 * HOUR,
        }];
        let c = generate_corpus(&small(2, sched)).unwrap();
        let len = 864;
        let log = &c.logs[0];
        let pre = log.index_at_or_after(c.accidents[0].start_time) - len - 10;
        let segs = [
            SegmentRef { well: 0, offset: pre, len },
            SegmentRef { well: 0, offset: 0, len },
            SegmentRef { well: 1, offset: 0, len },
        ];
        let (m, classes) = reference_similarity(&c.annotations, &c.logs, &segs).unwrap();
        assert_eq!(classes, vec![Some(AccidentType::Stuck), None, None]);
        assert!(!m.get(0, 1));
        assert!(m.get(1, 2));
    }

    #[test]
    fn sampled_segments_follow_schedule() {
        let sched: Vec<ScheduledAccident> = (0..3)
            .map(|i| ScheduledAccident {
                well: i,
                accident_type: AccidentType::ALL[i],
                offset_s: 27 * HOUR,
            })
            .collect();
        let c = generate_corpus(&small(4, sched)).unwrap();
        let segs = sample_segments(&c.logs, &c.annotations, &c.accidents, 864, 90, 3);
        assert_eq!(segs.len(), 90);
        let (_, classes) = reference_similarity(&c.annotations, &c.logs, &segs).unwrap();
        let pre = classes.iter().filter(|c| c.is_some()).count();
        // the 45 precursor draws land inside activity windows at least half covered
        assert!(pre >= 45, "{pre}");
        assert_eq!(segs, sample_segments(&c.logs, &c.annotations, &c.accidents, 864, 90, 3));
    }
}
