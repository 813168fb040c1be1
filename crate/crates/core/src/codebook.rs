//! Per-channel codebooks: k-means over wavelet coefficients of τ-segments.

use rand::seq::index;
use rayon::prelude::*;

use crate::dwt::{self, WaveletSpec};
use crate::error::{Error, Result};
use crate::features::window_offsets;
use crate::kmeans::{fit_kmeans, KMeansModel, KMeansParams};
use crate::rng;
use crate::telemetry::{Channel, TelemetryLog};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookParams {
    pub tau_length_s: i64,
    /// Training stride between τ-windows; equal to `tau_length_s` means no overlap.
    pub tau_step_s: i64,
    pub wavelet: WaveletSpec,
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Cap on training rows per channel; a seeded subset is drawn above it. 0 disables.
    pub max_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub channel: Channel,
    pub tau_length_s: i64,
    pub tau_step_s: i64,
    pub sample_period_s: i64,
    pub wavelet: WaveletSpec,
    pub quantizer: KMeansModel,
}

impl Codebook {
    pub fn k(&self) -> usize {
        self.quantizer.k
    }

    pub fn tau_samples(&self) -> usize {
        (self.tau_length_s / self.sample_period_s) as usize
    }

    /// Codeword of a τ-segment: nearest centroid to its wavelet coefficients.
    pub fn assign(&self, segment: &[f64]) -> Result<usize> {
        if segment.len() != self.tau_samples() {
            return Err(Error::Shape(format!(
                "{} codebook expects {} samples, got {}",
                self.channel,
                self.tau_samples(),
                segment.len()
            )));
        }
        let coeffs = dwt::decompose(segment, &self.wavelet)?;
        self.assign_coefficients(&coeffs)
    }

    pub fn assign_coefficients(&self, coefficients: &[f64]) -> Result<usize> {
        self.quantizer.predict(coefficients)
    }
}

fn sample_period(logs: &[&TelemetryLog]) -> Result<i64> {
    let period = logs
        .first()
        .map(|l| l.sample_period_s)
        .ok_or_else(|| Error::InsufficientData("no logs to build a codebook from".into()))?;
    if logs.iter().any(|l| l.sample_period_s != period) {
        return Err(Error::Config("logs have differing sample periods".into()));
    }
    Ok(period)
}

/// Stacks the wavelet coefficients of every τ-window of `channel` across
/// `logs` into a row-major matrix; returns `(data, dim)`.
pub fn training_matrix(
    logs: &[&TelemetryLog],
    channel: Channel,
    params: &CodebookParams,
) -> Result<(Vec<f64>, usize)> {
    let period = sample_period(logs)?;
    let tau = crate::telemetry::samples_for(params.tau_length_s, period)?;
    let step = crate::telemetry::samples_for(params.tau_step_s, period)?;
    if tau == 0 || step == 0 {
        return Err(Error::Config("τ length and step must be positive".into()));
    }
    let dim = dwt::coefficient_length(tau, &params.wavelet)?;
    let mut data = Vec::new();
    for log in logs {
        let series = log.channel(channel);
        for off in window_offsets(series.len(), tau, step) {
            data.extend(dwt::decompose(&series[off..off + tau], &params.wavelet)?);
        }
    }
    Ok((data, dim))
}

/// Builds the codebook of one channel from cleaned logs.
pub fn build_codebook(
    logs: &[&TelemetryLog],
    channel: Channel,
    params: &CodebookParams,
) -> Result<Codebook> {
    let period = sample_period(logs)?;
    let (mut data, dim) = training_matrix(logs, channel, params)?;
    let rows = data.len() / dim;
    if params.max_rows > 0 && rows > params.max_rows {
        let mut r = rng::rng(rng::derive_named(params.seed, "rows", channel.index() as u64));
        let mut keep = index::sample(&mut r, rows, params.max_rows).into_vec();
        keep.sort_unstable();
        data = keep
            .iter()
            .flat_map(|&i| data[i * dim..(i + 1) * dim].iter().copied())
            .collect();
    }
    let rows = data.len() / dim;
    if rows < params.k {
        return Err(Error::InsufficientData(format!(
            "{channel}: {rows} τ-segments cannot form {} codewords",
            params.k
        )));
    }
    let quantizer = fit_kmeans(
        &data,
        dim,
        &KMeansParams {
            k: params.k,
            seed: params.seed,
            max_iter: params.max_iter,
            tol: params.tol,
        },
    )?;
    Ok(Codebook {
        channel,
        tau_length_s: params.tau_length_s,
        tau_step_s: params.tau_step_s,
        sample_period_s: period,
        wavelet: params.wavelet,
        quantizer,
    })
}

/// Builds all channel codebooks in canonical channel order. Each channel's
/// k-means seed is derived from `params.seed` and the channel index.
pub fn build_codebooks(logs: &[&TelemetryLog], params: &CodebookParams) -> Result<Vec<Codebook>> {
    Channel::ALL
        .par_iter()
        .map(|&c| {
            let p = CodebookParams {
                seed: rng::derive_named(params.seed, "codebook", c.index() as u64),
                ..*params
            };
            log::debug!("building {c} codebook (k = {})", p.k);
            build_codebook(logs, c, &p)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::Family;
    use crate::telemetry::{Timestamp, N_CHANNELS};

    fn params(k: usize) -> CodebookParams {
        CodebookParams {
            tau_length_s: 24 * 60,
            tau_step_s: 24 * 60,
            wavelet: WaveletSpec::new(Family::Bior2_4, 3).unwrap(),
            k,
            seed: 5,
            max_iter: 50,
            tol: 1e-6,
            max_rows: 0,
        }
    }

    fn log_from(series: Vec<f64>) -> TelemetryLog {
        let n = series.len();
        let mut ch = vec![vec![1.0; n]; N_CHANNELS];
        ch[Channel::Sppa.index()] = series;
        TelemetryLog::new("w", Timestamp(0), 5, ch).unwrap()
    }

    fn regime_series(flat: bool, offset: usize, n: usize) -> Vec<f64> {
        let mut r = rng::rng(offset as u64);
        (0..n)
            .map(|i| {
                // 48-sample (4 min) pump cycle
                let t = (i + offset) as f64 * std::f64::consts::TAU / 48.0;
                let noise = rand::Rng::random_range(&mut r, -0.5..0.5);
                if flat {
                    100.0 + noise
                } else {
                    100.0 + 8.0 * t.sin() + noise
                }
            })
            .collect()
    }

    #[test]
    fn single_window_log() {
        let log = log_from(regime_series(true, 0, 288));
        let cb = build_codebook(&[&log], Channel::Sppa, &params(1)).unwrap();
        assert_eq!(cb.k(), 1);
        assert_eq!(cb.quantizer.dim, 312);
        assert!(build_codebook(&[&log], Channel::Sppa, &params(2)).is_err());
    }

    #[test]
    fn day_long_log_gives_sixty_rows() {
        let log = log_from(vec![1.0; 24 * 720]);
        let (data, dim) = training_matrix(&[&log], Channel::Sppa, &params(1)).unwrap();
        assert_eq!(data.len() / dim, (1440 - 24) / 24 + 1);
    }

    #[test]
    fn regimes_map_to_distinct_codewords() {
        // alternating 2-hour blocks of flat and oscillating pressure
        let mut series = Vec::new();
        let mut truth = Vec::new();
        for b in 0..20 {
            let flat = b % 2 == 0;
            series.extend(regime_series(flat, b * 1440, 1440));
            truth.extend(std::iter::repeat(flat).take(5));
        }
        let log = log_from(series);
        let cb = build_codebook(&[&log], Channel::Sppa, &params(2)).unwrap();
        let series = log.channel(Channel::Sppa);
        let labels: Vec<usize> = window_offsets(series.len(), 288, 288)
            .map(|o| cb.assign(&series[o..o + 288]).unwrap())
            .collect();
        let flat_label = labels[0];
        let agree = labels
            .iter()
            .zip(&truth)
            .filter(|(&l, &f)| (l == flat_label) == f)
            .count();
        assert!(agree as f64 / labels.len() as f64 > 0.95);
    }

    fn manual_codebook(centroids: Vec<f64>, dim: usize) -> Codebook {
        Codebook {
            channel: Channel::Hkla,
            tau_length_s: 60 * 5,
            tau_step_s: 60 * 5,
            sample_period_s: 5,
            wavelet: WaveletSpec::new(Family::Db3, 1).unwrap(),
            quantizer: KMeansModel {
                k: centroids.len() / dim,
                dim,
                centroids,
                inertia: 0.0,
                seed: 0,
                inertia_history: vec![],
            },
        }
    }

    #[test]
    fn exact_centroid_and_ties() {
        let seg: Vec<f64> = (0..60).map(|i| (i as f64 * 0.3).cos()).collect();
        let spec = WaveletSpec::new(Family::Db3, 1).unwrap();
        let coeffs = dwt::decompose(&seg, &spec).unwrap();
        let dim = coeffs.len();
        let mut cents = Vec::new();
        for j in 0..10 {
            if j == 7 {
                cents.extend(&coeffs);
            } else {
                cents.extend(coeffs.iter().map(|v| v + 1.0 + j as f64));
            }
        }
        let cb = manual_codebook(cents, dim);
        assert_eq!(cb.assign(&seg).unwrap(), 7);

        // centroids 2 and 5 sit symmetrically around the point
        let mut cents = vec![100.0; 8 * dim];
        let p = vec![0.0; dim];
        for v in &mut cents[2 * dim..3 * dim] {
            *v = 1.0;
        }
        for v in &mut cents[5 * dim..6 * dim] {
            *v = -1.0;
        }
        let cb = manual_codebook(cents, dim);
        assert_eq!(cb.assign_coefficients(&p).unwrap(), 2);
        assert!(matches!(cb.assign(&[0.0; 59]), Err(Error::Shape(_))));
    }

    #[test]
    fn assignments_match_exhaustive_scan() {
        let mut r = rng::rng(3);
        let series: Vec<f64> = (0..288 * 60)
            .map(|i| 50.0 + 10.0 * ((i / 700) as f64).sin() + rand::Rng::random_range(&mut r, -1.0..1.0))
            .collect();
        let log = log_from(series);
        let cb = build_codebook(&[&log], Channel::Sppa, &params(12)).unwrap();
        for s in 0..100u64 {
            let seg: Vec<f64> = (0..288)
                .map(|i| 50.0 + ((i as f64 + s as f64) * 0.01 * s as f64).sin() * 10.0)
                .collect();
            let c = dwt::decompose(&seg, &cb.wavelet).unwrap();
            let mut best = (0, f64::INFINITY);
            for j in 0..cb.k() {
                let d: f64 = c
                    .iter()
                    .zip(cb.quantizer.centroid(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                if d < best.1 {
                    best = (j, d);
                }
            }
            assert_eq!(cb.assign(&seg).unwrap(), best.0);
            assert_eq!(cb.assign_coefficients(&c).unwrap(), best.0);
        }
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let log = log_from((0..288 * 30).map(|i| ((i as f64) * 0.013).sin() * 20.0 + 100.0).collect());
        let a = build_codebook(&[&log], Channel::Sppa, &params(4)).unwrap();
        let b = build_codebook(&[&log], Channel::Sppa, &params(4)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.quantizer.dim,
            dwt::coefficient_length(288, &a.wavelet).unwrap()
        );
    }

    #[test]
    fn row_cap_subsamples() {
        let log = log_from((0..288 * 30).map(|i| ((i as f64) * 0.013).sin() * 20.0 + 100.0).collect());
        let mut p = params(3);
        p.max_rows = 10;
        let cb = build_codebook(&[&log], Channel::Sppa, &p).unwrap();
        assert_eq!(cb.k(), 3);
        p.max_rows = 2;
        assert!(build_codebook(&[&log], Channel::Sppa, &p).is_err());
    }
}
