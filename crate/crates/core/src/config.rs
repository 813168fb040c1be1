//! Pipeline configuration as a flat `key = value` text file with dotted keys.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error. Every key has a default, so an empty file is a valid config.

use std::fmt::Write as _;
use std::path::Path;

use crate::codebook::CodebookParams;
use crate::dwt::{Family, Padding, WaveletSpec};
use crate::error::{Error, Result};
use crate::features::WindowConfig;
use crate::model::BoostingParams;
use crate::rng;
use crate::synth::{default_schedule, ScenarioConfig};
use crate::telemetry::{canonical_specs, Channel, ChannelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookSettings {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub max_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalSettings {
    pub folds: usize,
    pub max_retries: usize,
    /// Length of the labeled history before each accident.
    pub pre_accident_h: f64,
    /// Normal data must lie at least this far from any accident.
    pub clearance_h: f64,
    pub normal_intervals: usize,
    pub normal_interval_h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceSettings {
    pub step_min: i64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSettings {
    pub n_wells: usize,
    pub hours_per_well: f64,
    pub accidents_per_type: usize,
    pub sample_period_s: i64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneSettings {
    pub segments: usize,
    pub families: Vec<Family>,
    pub levels: Vec<usize>,
    pub k_values: Vec<usize>,
    pub n_min: usize,
    pub n_max: usize,
    pub tau_grid_min: Vec<i64>,
    pub t_grid_min: Vec<i64>,
    pub sensitivity_k: Vec<usize>,
    pub sensitivity_n: Vec<usize>,
    pub repeats: usize,
    pub steps_min: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Root seed; every component seed is derived from it.
    pub seed: u64,
    pub specs: Vec<ChannelSpec>,
    pub window: WindowConfig,
    pub wavelet: WaveletSpec,
    pub codebook: CodebookSettings,
    pub boosting: BoostingParams,
    pub crossval: CrossvalSettings,
    pub inference: InferenceSettings,
    pub synth: SynthSettings,
    pub tune: TuneSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 7,
            specs: canonical_specs(),
            window: WindowConfig::default(),
            wavelet: WaveletSpec {
                family: Family::Bior2_4,
                level: 3,
                padding: Padding::Symmetric,
            },
            codebook: CodebookSettings {
                k: 200,
                max_iter: 100,
                tol: 1e-6,
                max_rows: 2000,
            },
            boosting: BoostingParams::default(),
            crossval: CrossvalSettings {
                folds: 5,
                max_retries: 1000,
                pre_accident_h: 24.0,
                clearance_h: 24.0,
                normal_intervals: 20,
                normal_interval_h: 8.0,
            },
            inference: InferenceSettings {
                step_min: 10,
                threshold: 0.5,
            },
            synth: SynthSettings {
                n_wells: 60,
                hours_per_well: 48.0,
                accidents_per_type: 7,
                sample_period_s: 5,
                amplitude: 5.0,
            },
            tune: TuneSettings {
                segments: 900,
                families: Family::ALL.to_vec(),
                levels: vec![3, 4, 5],
                k_values: vec![20, 50, 100, 200],
                n_min: 2,
                n_max: 30,
                tau_grid_min: vec![8, 24, 50],
                t_grid_min: vec![72, 180, 420],
                sensitivity_k: vec![10, 20, 40, 100, 200, 400],
                sensitivity_n: vec![2, 3, 5, 7, 10, 15, 20, 30],
                repeats: 3,
                steps_min: vec![10, 20, 30, 60, 120],
            },
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn minutes(s: i64) -> String {
    // durations are kept in seconds internally and printed in minutes
    if s % 60 == 0 {
        (s / 60).to_string()
    } else {
        (s as f64 / 60.0).to_string()
    }
}

fn to_seconds(key: &str, v: &str) -> Result<i64> {
    let m: f64 = parse(key, v)?;
    let s = m * 60.0;
    if s.fract() != 0.0 {
        return Err(Error::Config(format!("`{key}`: {v} min is not a whole number of seconds")));
    }
    Ok(s as i64)
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", no + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", no + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::parse(&text).map_err(|e| e.in_file(path))
    }

    /// Loads `path` when given, otherwise the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        if let Some(rest) = key.strip_prefix("channel.") {
            let (code, bound) = rest
                .rsplit_once('.')
                .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
            let c: Channel = code.parse()?;
            let spec = &mut self.specs[c.index()];
            let x: f64 = parse(key, v)?;
            let (lo, hi) = match bound {
                "min" => (x, spec.max_value),
                "max" => (spec.min_value, x),
                _ => return Err(Error::Config(format!("unknown key `{key}`"))),
            };
            *spec = ChannelSpec::new(c, &spec.units, lo, hi)?;
            return Ok(());
        }
        match key {
            "seed" => self.seed = parse(key, v)?,
            "window.t_length_min" => self.window.t_length_s = to_seconds(key, v)?,
            "window.t_step_min" => self.window.t_step_s = to_seconds(key, v)?,
            "window.tau_length_min" => self.window.tau_length_s = to_seconds(key, v)?,
            "window.tau_step_min" => self.window.tau_step_s = to_seconds(key, v)?,
            "wavelet.family" => self.wavelet.family = v.parse()?,
            "wavelet.level" => self.wavelet = WaveletSpec::with_padding(self.wavelet.family, parse(key, v)?, self.wavelet.padding)?,
            "wavelet.padding" => self.wavelet.padding = v.parse()?,
            "codebook.k" => self.codebook.k = parse(key, v)?,
            "codebook.max_iter" => self.codebook.max_iter = parse(key, v)?,
            "codebook.tol" => self.codebook.tol = parse(key, v)?,
            "codebook.max_rows" => self.codebook.max_rows = parse(key, v)?,
            "boosting.n_estimators" => self.boosting.n_estimators = parse(key, v)?,
            "boosting.learning_rate" => self.boosting.learning_rate = parse(key, v)?,
            "boosting.max_depth" => self.boosting.max_depth = parse(key, v)?,
            "boosting.subsample" => self.boosting.subsample = parse(key, v)?,
            "boosting.colsample_bytree" => self.boosting.colsample_bytree = parse(key, v)?,
            "boosting.positive_class_weight" => self.boosting.positive_class_weight = parse(key, v)?,
            "boosting.lambda" => self.boosting.lambda = parse(key, v)?,
            "boosting.min_child_weight" => self.boosting.min_child_weight = parse(key, v)?,
            "crossval.folds" => self.crossval.folds = parse(key, v)?,
            "crossval.max_retries" => self.crossval.max_retries = parse(key, v)?,
            "crossval.pre_accident_h" => self.crossval.pre_accident_h = parse(key, v)?,
            "crossval.clearance_h" => self.crossval.clearance_h = parse(key, v)?,
            "crossval.normal_intervals" => self.crossval.normal_intervals = parse(key, v)?,
            "crossval.normal_interval_h" => self.crossval.normal_interval_h = parse(key, v)?,
            "inference.step_min" => self.inference.step_min = parse(key, v)?,
            "inference.threshold" => self.inference.threshold = parse(key, v)?,
            "synth.n_wells" => self.synth.n_wells = parse(key, v)?,
            "synth.hours_per_well" => self.synth.hours_per_well = parse(key, v)?,
            "synth.accidents_per_type" => self.synth.accidents_per_type = parse(key, v)?,
            "synth.sample_period_s" => self.synth.sample_period_s = parse(key, v)?,
            "synth.amplitude" => self.synth.amplitude = parse(key, v)?,
            "tune.segments" => self.tune.segments = parse(key, v)?,
            "tune.families" => self.tune.families = parse_list(key, v)?,
            "tune.levels" => self.tune.levels = parse_list(key, v)?,
            "tune.k_values" => self.tune.k_values = parse_list(key, v)?,
            "tune.n_min" => self.tune.n_min = parse(key, v)?,
            "tune.n_max" => self.tune.n_max = parse(key, v)?,
            "tune.tau_grid_min" => self.tune.tau_grid_min = parse_list(key, v)?,
            "tune.t_grid_min" => self.tune.t_grid_min = parse_list(key, v)?,
            "tune.sensitivity_k" => self.tune.sensitivity_k = parse_list(key, v)?,
            "tune.sensitivity_n" => self.tune.sensitivity_n = parse_list(key, v)?,
            "tune.repeats" => self.tune.repeats = parse(key, v)?,
            "tune.steps_min" => self.tune.steps_min = parse_list(key, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Every key with its current value, in canonical order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let w = &self.window;
        let mut out: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("window.t_length_min".into(), minutes(w.t_length_s)),
            ("window.t_step_min".into(), minutes(w.t_step_s)),
            ("window.tau_length_min".into(), minutes(w.tau_length_s)),
            ("window.tau_step_min".into(), minutes(w.tau_step_s)),
            ("wavelet.family".into(), self.wavelet.family.to_string()),
            ("wavelet.level".into(), self.wavelet.level.to_string()),
            ("wavelet.padding".into(), self.wavelet.padding.to_string()),
            ("codebook.k".into(), self.codebook.k.to_string()),
            ("codebook.max_iter".into(), self.codebook.max_iter.to_string()),
            ("codebook.tol".into(), self.codebook.tol.to_string()),
            ("codebook.max_rows".into(), self.codebook.max_rows.to_string()),
        ];
        let b = &self.boosting;
        out.extend([
            ("boosting.n_estimators".into(), b.n_estimators.to_string()),
            ("boosting.learning_rate".into(), b.learning_rate.to_string()),
            ("boosting.max_depth".into(), b.max_depth.to_string()),
            ("boosting.subsample".into(), b.subsample.to_string()),
            ("boosting.colsample_bytree".into(), b.colsample_bytree.to_string()),
            ("boosting.positive_class_weight".into(), b.positive_class_weight.to_string()),
            ("boosting.lambda".into(), b.lambda.to_string()),
            ("boosting.min_child_weight".into(), b.min_child_weight.to_string()),
        ]);
        let c = &self.crossval;
        out.extend([
            ("crossval.folds".into(), c.folds.to_string()),
            ("crossval.max_retries".into(), c.max_retries.to_string()),
            ("crossval.pre_accident_h".into(), c.pre_accident_h.to_string()),
            ("crossval.clearance_h".into(), c.clearance_h.to_string()),
            ("crossval.normal_intervals".into(), c.normal_intervals.to_string()),
            ("crossval.normal_interval_h".into(), c.normal_interval_h.to_string()),
            ("inference.step_min".into(), self.inference.step_min.to_string()),
            ("inference.threshold".into(), self.inference.threshold.to_string()),
        ]);
        let s = &self.synth;
        out.extend([
            ("synth.n_wells".into(), s.n_wells.to_string()),
            ("synth.hours_per_well".into(), s.hours_per_well.to_string()),
            ("synth.accidents_per_type".into(), s.accidents_per_type.to_string()),
            ("synth.sample_period_s".into(), s.sample_period_s.to_string()),
            ("synth.amplitude".into(), s.amplitude.to_string()),
        ]);
        let t = &self.tune;
        out.extend([
            ("tune.segments".into(), t.segments.to_string()),
            ("tune.families".into(), join(&t.families)),
            ("tune.levels".into(), join(&t.levels)),
            ("tune.k_values".into(), join(&t.k_values)),
            ("tune.n_min".into(), t.n_min.to_string()),
            ("tune.n_max".into(), t.n_max.to_string()),
            ("tune.tau_grid_min".into(), join(&t.tau_grid_min)),
            ("tune.t_grid_min".into(), join(&t.t_grid_min)),
            ("tune.sensitivity_k".into(), join(&t.sensitivity_k)),
            ("tune.sensitivity_n".into(), join(&t.sensitivity_n)),
            ("tune.repeats".into(), t.repeats.to_string()),
            ("tune.steps_min".into(), join(&t.steps_min)),
        ]);
        for spec in &self.specs {
            out.push((format!("channel.{}.min", spec.channel.code()), spec.min_value.to_string()));
            out.push((format!("channel.{}.max", spec.channel.code()), spec.max_value.to_string()));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        self.boosting.validate()?;
        if self.codebook.k == 0 {
            return Err(Error::Config("codebook.k must be positive".into()));
        }
        if self.crossval.folds < 2 {
            return Err(Error::Config("crossval.folds must be at least 2".into()));
        }
        if self.inference.step_min <= 0 {
            return Err(Error::Config("inference.step_min must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.inference.threshold) {
            return Err(Error::Config("inference.threshold must lie in [0, 1]".into()));
        }
        if self.tune.n_min == 0 || self.tune.n_min > self.tune.n_max {
            return Err(Error::Config("tune.n_min must be in [1, tune.n_max]".into()));
        }
        Ok(())
    }

    pub fn codebook_params(&self, seed: u64) -> CodebookParams {
        CodebookParams {
            tau_length_s: self.window.tau_length_s,
            tau_step_s: self.window.tau_step_s,
            wavelet: self.wavelet,
            k: self.codebook.k,
            seed,
            max_iter: self.codebook.max_iter,
            tol: self.codebook.tol,
            max_rows: self.codebook.max_rows,
        }
    }

    /// Seed of a named component, derived from the root seed.
    pub fn component_seed(&self, name: &str, index: u64) -> u64 {
        rng::derive_named(self.seed, name, index)
    }

    pub fn scenario(&self) -> ScenarioConfig {
        let s = &self.synth;
        ScenarioConfig {
            n_wells: s.n_wells,
            hours_per_well: s.hours_per_well,
            sample_period_s: s.sample_period_s,
            accident_schedule: default_schedule(s.n_wells, s.accidents_per_type, s.hours_per_well, self.seed),
            amplitude: s.amplitude,
            seed: self.seed,
            ..ScenarioConfig::default()
        }
    }
}
