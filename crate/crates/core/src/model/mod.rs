//! One-vs-rest accident forecasting: labeling, training, and streaming alarms.

pub mod gbdt;

use rayon::prelude::*;

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::features::{FeatureVector, TauLabeler, WindowConfig};
use crate::rng;
use crate::telemetry::{samples_for, AccidentRecord, AccidentType, TelemetryLog, Timestamp, N_TYPES};

pub use gbdt::{BoostingParams, ColumnIndex, Ensemble, Matrix};

/// A segment is positive for a type when it ends within this many seconds
/// before an accident of that type.
pub const FORECAST_HORIZON_S: i64 = 6 * 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LabelVector {
    pub flags: [bool; N_TYPES],
}

impl LabelVector {
    pub fn get(&self, t: AccidentType) -> bool {
        self.flags[t.index()]
    }

    pub fn any(&self) -> bool {
        self.flags.iter().any(|&f| f)
    }
}

/// True iff `0 <= accident_start - time <= 6 h`.
pub fn in_forecast_window(time: Timestamp, accident_start: Timestamp) -> bool {
    let lead = accident_start.0 - time.0;
    (0..=FORECAST_HORIZON_S).contains(&lead)
}

pub fn label_segment(well_id: &str, segment_end: Timestamp, accidents: &[AccidentRecord]) -> LabelVector {
    let mut lv = LabelVector::default();
    for a in accidents {
        if a.well_id == well_id && in_forecast_window(segment_end, a.start_time) {
            lv.flags[a.accident_type.index()] = true;
        }
    }
    lv
}

pub fn label_segments(segments: &[FeatureVector], accidents: &[AccidentRecord]) -> Vec<LabelVector> {
    segments
        .iter()
        .map(|s| label_segment(&s.well_id, s.segment_end, accidents))
        .collect()
}

/// The six per-type ensembles over a fixed feature dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub ensembles: Vec<Ensemble>,
    pub feature_dim: usize,
    pub params: BoostingParams,
}

/// Seed used for the ensemble of type `t` under root seed `seed`.
pub fn type_seed(seed: u64, t: AccidentType) -> u64 {
    rng::derive_named(seed, "boost", t.index() as u64)
}

pub fn train(x: &Matrix, labels: &[LabelVector], params: &BoostingParams) -> Result<Classifier> {
    let seeds = AccidentType::ALL.map(|t| type_seed(params.seed, t));
    train_with_seeds(x, labels, params, seeds)
}

/// Trains with an explicit seed per type, in canonical type order.
pub fn train_with_seeds(
    x: &Matrix,
    labels: &[LabelVector],
    params: &BoostingParams,
    seeds: [u64; N_TYPES],
) -> Result<Classifier> {
    params.validate()?;
    if labels.len() != x.rows() {
        return Err(Error::Shape(format!("{} rows but {} label vectors", x.rows(), labels.len())));
    }
    for t in AccidentType::ALL {
        let pos = labels.iter().filter(|l| l.get(t)).count();
        if pos == 0 {
            return Err(Error::Training(format!("no positive training examples for accident type `{t}`")));
        }
        if pos == labels.len() {
            return Err(Error::Training(format!("no negative training examples for accident type `{t}`")));
        }
    }
    let cols = ColumnIndex::new(x);
    let ensembles = AccidentType::ALL
        .par_iter()
        .map(|&t| {
            let y: Vec<bool> = labels.iter().map(|l| l.get(t)).collect();
            gbdt::fit_binary(x, &cols, &y, params, seeds[t.index()])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Classifier {
        ensembles,
        feature_dim: x.cols(),
        params: params.clone(),
    })
}

impl Classifier {
    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; N_TYPES]> {
        if x.len() != self.feature_dim {
            return Err(Error::Shape(format!(
                "feature vector has {} values, model expects {}",
                x.len(),
                self.feature_dim
            )));
        }
        let mut out = [0.0; N_TYPES];
        for (o, e) in out.iter_mut().zip(&self.ensembles) {
            *o = e.predict(x);
        }
        Ok(out)
    }
}

/// Classifier bundled with the featurization it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel {
    pub classifier: Classifier,
    pub window_config: WindowConfig,
    pub codebooks: Vec<Codebook>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Alarm {
    pub well_id: String,
    pub time: Timestamp,
    pub accident_type: AccidentType,
    pub probability: f64,
}

/// Per-type probabilities for the window ending at `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub time: Timestamp,
    pub probabilities: [f64; N_TYPES],
}

impl ForecastModel {
    pub fn new(classifier: Classifier, window_config: WindowConfig, codebooks: Vec<Codebook>) -> Result<Self> {
        let dim: usize = codebooks.iter().map(|b| b.k()).sum();
        if dim != classifier.feature_dim {
            return Err(Error::Shape(format!(
                "codebooks yield {dim} features, classifier expects {}",
                classifier.feature_dim
            )));
        }
        Ok(ForecastModel {
            classifier,
            window_config,
            codebooks,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.classifier.feature_dim
    }

    pub fn predict_proba(&self, feature: &FeatureVector) -> Result<[f64; N_TYPES]> {
        self.classifier.predict_proba(&feature.values)
    }

    /// Replays `log`, scoring the latest t-window at every `step_s` boundary
    /// where a full window is available.
    pub fn stream_scores(&self, log: &TelemetryLog, step_s: i64) -> Result<Vec<Evaluation>> {
        let win = self.window_config.samples(log.sample_period_s)?;
        let step = samples_for(step_s, log.sample_period_s)?;
        if step == 0 {
            return Err(Error::Config("inference step must be positive".into()));
        }
        let mut labeler = TauLabeler::new(log, &self.codebooks)?;
        let mut out = Vec::new();
        let mut end = step;
        while end <= log.len() {
            if end >= win.t {
                let values = labeler.encode(end - win.t, &win)?;
                out.push(Evaluation {
                    time: log.time_at(end),
                    probabilities: self.classifier.predict_proba(&values)?,
                });
            }
            end += step;
        }
        Ok(out)
    }

    pub fn stream_predict(&self, log: &TelemetryLog, step_s: i64, threshold: f64) -> Result<Vec<Alarm>> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::Validation(format!("threshold {threshold} is outside [0, 1]")));
        }
        Ok(alarms_from_scores(&log.well_id, &self.stream_scores(log, step_s)?, threshold))
    }
}

pub fn alarms_from_scores(well_id: &str, evals: &[Evaluation], threshold: f64) -> Vec<Alarm> {
    let mut out = Vec::new();
    for e in evals {
        for t in AccidentType::ALL {
            let p = e.probabilities[t.index()];
            if p >= threshold {
                out.push(Alarm {
                    well_id: well_id.to_string(),
                    time: e.time,
                    accident_type: t,
                    probability: p,
                });
            }
        }
    }
    out
}

pub const ALARM_HEADER: [&str; 4] = ["well_id", "time", "accident_type", "probability"];

pub fn write_alarms<W: std::io::Write>(writer: W, alarms: &[Alarm]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ALARM_HEADER)?;
    for a in alarms {
        w.write_record([
            a.well_id.as_str(),
            &a.time.to_iso(),
            a.accident_type.code(),
            &format!("{:.6}", a.probability),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: i64 = 3600;

    fn acc(well: &str, t: AccidentType, start: i64) -> AccidentRecord {
        AccidentRecord {
            well_id: well.into(),
            accident_type: t,
            start_time: Timestamp(start),
        }
    }

    #[test]
    fn six_hour_rule() {
        let accs = [
            acc("w", AccidentType::Stuck, 100 * H),
            acc("w", AccidentType::MudLoss, 200 * H),
            acc("w", AccidentType::Packing, 200 * H),
            acc("v", AccidentType::FluidShow, 100 * H),
        ];
        assert!(label_segment("w", Timestamp(97 * H), &accs).get(AccidentType::Stuck));
        assert!(!label_segment("w", Timestamp(93 * H), &accs).any());
        let both = label_segment("w", Timestamp(198 * H), &accs);
        assert!(both.get(AccidentType::MudLoss) && both.get(AccidentType::Packing));
        assert!(!both.get(AccidentType::Stuck));
        // boundaries are inclusive; after the start is not a forecast
        assert!(label_segment("w", Timestamp(94 * H), &accs).get(AccidentType::Stuck));
        assert!(label_segment("w", Timestamp(100 * H), &accs).get(AccidentType::Stuck));
        assert!(!label_segment("w", Timestamp(100 * H + 1), &accs).any());
        let other = label_segment("v", Timestamp(97 * H), &accs);
        assert!(other.get(AccidentType::FluidShow) && !other.get(AccidentType::Stuck));
    }

    fn toy() -> (Matrix, Vec<LabelVector>) {
        // feature t+1 equals 10 for rows positive for type t
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..120 {
            let mut lv = LabelVector::default();
            let mut row = vec![(i % 7) as f64, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
            if i % 3 == 0 {
                let t = (i / 3) % N_TYPES;
                lv.flags[t] = true;
                row[t + 1] = 10.0;
            }
            rows.push(row);
            labels.push(lv);
        }
        (Matrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn one_vs_rest_separates_types() {
        let (x, labels) = toy();
        let p = BoostingParams {
            colsample_bytree: 1.0,
            ..BoostingParams::default()
        };
        let c = train(&x, &labels, &p).unwrap();
        for i in 0..x.rows() {
            let probs = c.predict_proba(x.row(i)).unwrap();
            for t in 0..N_TYPES {
                if labels[i].flags[t] {
                    assert!(probs[t] > 0.9);
                } else {
                    assert!(probs[t] < 0.1);
                }
            }
        }
        assert!(matches!(c.predict_proba(&[0.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn missing_type_is_named() {
        let (x, mut labels) = toy();
        for l in &mut labels {
            l.flags[AccidentType::FluidShow.index()] = false;
        }
        match train(&x, &labels, &BoostingParams::default()) {
            Err(Error::Training(msg)) => assert!(msg.contains("fluid_show"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn per_type_ensembles_are_independent() {
        let (x, labels) = toy();
        let p = BoostingParams::default();
        let mut seeds = AccidentType::ALL.map(|t| type_seed(p.seed, t));
        let a = train_with_seeds(&x, &labels, &p, seeds).unwrap();
        seeds[2] ^= 0xdead_beef;
        let b = train_with_seeds(&x, &labels, &p, seeds).unwrap();
        for t in 0..N_TYPES {
            if t != 2 {
                assert_eq!(a.ensembles[t], b.ensembles[t]);
            }
        }
        assert_ne!(a.ensembles[2].seed, b.ensembles[2].seed);
    }

    #[test]
    fn zero_trees_and_purity() {
        let (x, labels) = toy();
        let p = BoostingParams {
            n_estimators: 0,
            ..BoostingParams::default()
        };
        let c = train(&x, &labels, &p).unwrap();
        let probs = c.predict_proba(x.row(5)).unwrap();
        for (t, e) in c.ensembles.iter().enumerate() {
            assert_eq!(probs[t], gbdt::logistic(e.base_score));
        }
        assert_eq!(probs, c.predict_proba(x.row(5)).unwrap());
    }

    #[test]
    fn alarm_thresholds_nest() {
        let evals: Vec<Evaluation> = (0..20)
            .map(|k| Evaluation {
                time: Timestamp(k * 600),
                probabilities: std::array::from_fn(|t| ((k as usize * 7 + t * 3) % 11) as f64 / 10.0),
            })
            .collect();
        assert_eq!(alarms_from_scores("w", &evals, 0.0).len(), 20 * N_TYPES);
        let mut prev: Option<Vec<Alarm>> = None;
        for k in 0..=10 {
            let th = k as f64 / 10.0;
            let cur = alarms_from_scores("w", &evals, th);
            if let Some(p) = &prev {
                assert!(cur.iter().all(|a| p.contains(a)));
            }
            prev = Some(cur);
        }
    }
}
