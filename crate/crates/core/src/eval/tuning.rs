//! Hyperparameter sweeps: codebook selection against a reference similarity
//! matrix, window lengths and inference step by cross-validation.

use std::fmt::Write as _;

use rayon::prelude::*;

use super::crossval::{crossval_variants, Featurizer, Variant};
use super::metrics::{mean_std, rand_index, SimilarityMatrix};
use crate::codebook::{build_codebooks, Codebook};
use crate::config::PipelineConfig;
use crate::corpus::Corpus;
use crate::dwt::WaveletSpec;
use crate::error::{Error, Result};
use crate::features::TauLabeler;
use crate::kmeans::{fit_kmeans, KMeansParams};
use crate::synth::{reference_similarity, sample_segments, SegmentClass, SegmentRef};
use crate::telemetry::N_CHANNELS;

/// Sampled t-segments and their reference similarity matrix.
#[derive(Debug, Clone)]
pub struct ReferenceTask {
    pub segments: Vec<SegmentRef>,
    pub classes: Vec<SegmentClass>,
    pub reference: SimilarityMatrix,
}

/// Draws `m` t-segments from an annotated corpus and builds the reference matrix.
pub fn reference_task(corpus: &Corpus, cfg: &PipelineConfig, m: usize, seed: u64) -> Result<ReferenceTask> {
    let annotations = corpus
        .annotations
        .as_deref()
        .ok_or_else(|| Error::Config("tuning needs an annotated corpus (annotations.csv)".into()))?;
    let period = corpus
        .logs
        .first()
        .ok_or_else(|| Error::InsufficientData("empty corpus".into()))?
        .sample_period_s;
    let len = cfg.window.samples(period)?.t;
    let segments = sample_segments(&corpus.logs, annotations, &corpus.accidents, len, m, seed);
    if segments.len() < 2 {
        return Err(Error::InsufficientData("need at least two reference segments".into()));
    }
    let (reference, classes) = reference_similarity(annotations, &corpus.logs, &segments)?;
    Ok(ReferenceTask {
        segments,
        classes,
        reference,
    })
}

/// Histogram vectors of the task's segments under `codebooks`.
pub fn segment_histograms(corpus: &Corpus, codebooks: &[Codebook], cfg: &PipelineConfig, task: &ReferenceTask) -> Result<Vec<Vec<f64>>> {
    let mut out = vec![Vec::new(); task.segments.len()];
    let mut by_well: Vec<Vec<usize>> = vec![Vec::new(); corpus.logs.len()];
    for (i, s) in task.segments.iter().enumerate() {
        by_well[s.well].push(i);
    }
    let encoded: Vec<Vec<(usize, Vec<f64>)>> = by_well
        .par_iter()
        .enumerate()
        .filter(|(_, idx)| !idx.is_empty())
        .map(|(w, idx)| {
            let log = &corpus.logs[w];
            let win = cfg.window.samples(log.sample_period_s)?;
            let mut labeler = TauLabeler::new(log, codebooks)?;
            idx.iter()
                .map(|&i| Ok((i, labeler.encode(task.segments[i].offset, &win)?)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    for (i, v) in encoded.into_iter().flatten() {
        out[i] = v;
    }
    Ok(out)
}

/// Raw channel values of each segment, concatenated in channel order.
pub fn segment_raw_values(corpus: &Corpus, task: &ReferenceTask) -> Vec<Vec<f64>> {
    task.segments
        .iter()
        .map(|s| {
            let log = &corpus.logs[s.well];
            (0..N_CHANNELS)
                .flat_map(|c| log.channels()[c][s.offset..s.offset + s.len].iter().copied())
                .collect()
        })
        .collect()
}

/// Clusters `points` into `n` groups and scores the partition against the reference.
pub fn cluster_rand_index(points: &[Vec<f64>], n: usize, seed: u64, reference: &SimilarityMatrix) -> Result<f64> {
    if points.len() < n {
        return Err(Error::InsufficientData(format!("{} segments cannot form {n} clusters", points.len())));
    }
    let dim = points.first().map_or(0, |p| p.len());
    let flat: Vec<f64> = points.iter().flatten().copied().collect();
    let model = fit_kmeans(&flat, dim, &KMeansParams::new(n, seed))?;
    let labels = points.iter().map(|p| model.predict(p)).collect::<Result<Vec<_>>>()?;
    rand_index(reference, &SimilarityMatrix::from_labels(&labels))
}

/// Rand Index for each N in `n_values`, in order.
fn rand_index_curve(points: &[Vec<f64>], n_values: &[usize], seed: u64, reference: &SimilarityMatrix) -> Result<Vec<(usize, f64)>> {
    n_values
        .par_iter()
        .map(|&n| Ok((n, cluster_rand_index(points, n, crate::rng::derive_named(seed, "cluster", n as u64), reference)?)))
        .collect()
}

/// One point of the stage-1 grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub wavelet: WaveletSpec,
    pub k: usize,
}

impl GridPoint {
    pub fn label(&self) -> String {
        format!("{} level {} K={}", self.wavelet.family.name(), self.wavelet.level, self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stage1Method {
    Wavelet(GridPoint),
    /// Raw t-segment values used directly as the feature vector.
    RawValues,
}

impl Stage1Method {
    pub fn label(&self) -> String {
        match self {
            Stage1Method::Wavelet(p) => p.label(),
            Stage1Method::RawValues => "raw values (baseline)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Row {
    pub method: Stage1Method,
    pub best_n: usize,
    pub rand_index: f64,
    /// Rand Index for every N tried.
    pub curve: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Table {
    /// Sorted by Rand Index, best first.
    pub rows: Vec<Stage1Row>,
    /// Grid points that could not be evaluated, with the reason.
    pub failures: Vec<(String, String)>,
}

impl Stage1Table {
    pub fn baseline(&self) -> Option<&Stage1Row> {
        self.rows.iter().find(|r| r.method == Stage1Method::RawValues)
    }

    pub fn best_wavelet(&self) -> Option<&Stage1Row> {
        self.rows.iter().find(|r| r.method != Stage1Method::RawValues)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>4}  {:<28} {:>6} {:>10}", "rank", "parameters", "N", "rand_index");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "{:>4}  {:<28} {:>6} {:>10.4}", i + 1, r.method.label(), r.best_n, r.rand_index);
        }
        for (what, why) in &self.failures {
            let _ = writeln!(s, "failed: {what}: {why}");
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["rank", "family", "level", "k", "best_n", "rand_index"])?;
        for (i, r) in self.rows.iter().enumerate() {
            let (fam, lvl, k) = match &r.method {
                Stage1Method::Wavelet(p) => (p.wavelet.family.name().to_string(), p.wavelet.level.to_string(), p.k.to_string()),
                Stage1Method::RawValues => ("raw".into(), String::new(), String::new()),
            };
            w.write_record([(i + 1).to_string(), fam, lvl, k, r.best_n.to_string(), format!("{:.6}", r.rand_index)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn best_of(curve: &[(usize, f64)]) -> (usize, f64) {
    // first maximum, so ties resolve to the smallest N
    curve
        .iter()
        .copied()
        .fold((0, f64::NEG_INFINITY), |b, p| if p.1 > b.1 { p } else { b })
}

/// The stage-1 grid from the config: family × level × K.
pub fn stage1_grid(cfg: &PipelineConfig) -> Result<Vec<GridPoint>> {
    let mut grid = Vec::new();
    for &family in &cfg.tune.families {
        for &level in &cfg.tune.levels {
            let wavelet = WaveletSpec::with_padding(family, level, cfg.wavelet.padding)?;
            for &k in &cfg.tune.k_values {
                grid.push(GridPoint { wavelet, k });
            }
        }
    }
    Ok(grid)
}

fn codebooks_for(corpus: &Corpus, cfg: &PipelineConfig, point: &GridPoint, seed: u64) -> Result<Vec<Codebook>> {
    let mut params = cfg.codebook_params(seed);
    params.wavelet = point.wavelet;
    params.k = point.k;
    let logs: Vec<_> = corpus.logs.iter().collect();
    build_codebooks(&logs, &params)
}

/// Ranks codebook settings by how well clustered histograms recover the reference.
pub fn tune_stage1(
    corpus: &Corpus,
    cfg: &PipelineConfig,
    grid: &[GridPoint],
    task: &ReferenceTask,
    n_values: &[usize],
) -> Result<Stage1Table> {
    if n_values.is_empty() {
        return Err(Error::Config("empty N range".into()));
    }
    let cb_seed = cfg.component_seed("tune_codebook", 0);
    let cl_seed = cfg.component_seed("tune_cluster", 0);
    let results: Vec<std::result::Result<Stage1Row, (String, String)>> = grid
        .par_iter()
        .map(|p| {
            let run = || -> Result<Stage1Row> {
                let books = codebooks_for(corpus, cfg, p, cb_seed)?;
                let hist = segment_histograms(corpus, &books, cfg, task)?;
                let curve = rand_index_curve(&hist, n_values, cl_seed, &task.reference)?;
                let (best_n, ri) = best_of(&curve);
                Ok(Stage1Row {
                    method: Stage1Method::Wavelet(*p),
                    best_n,
                    rand_index: ri,
                    curve,
                })
            };
            run().map_err(|e| {
                log::warn!("stage 1 point {} failed: {e}", p.label());
                (p.label(), e.to_string())
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(f) => failures.push(f),
        }
    }
    let raw = segment_raw_values(corpus, task);
    let curve = rand_index_curve(&raw, n_values, cl_seed, &task.reference)?;
    let (best_n, ri) = best_of(&curve);
    rows.push(Stage1Row {
        method: Stage1Method::RawValues,
        best_n,
        rand_index: ri,
        curve,
    });
    // stable sort keeps grid order among ties
    rows.sort_by(|a, b| b.rand_index.total_cmp(&a.rand_index));
    Ok(Stage1Table { rows, failures })
}

/// Cross-validated macro AUC over a τ × t grid; `None` where τ > t.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage2Table {
    pub tau_min: Vec<i64>,
    pub t_min: Vec<i64>,
    /// `cells[i][j]` is (mean, std) for `tau_min[i]`, `t_min[j]`.
    pub cells: Vec<Vec<Option<(f64, f64)>>>,
}

impl Stage2Table {
    pub fn best(&self) -> Option<(i64, i64, f64)> {
        let mut best: Option<(i64, i64, f64)> = None;
        for (i, row) in self.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if let Some((m, _)) = c {
                    if best.is_none_or(|b| *m > b.2) {
                        best = Some((self.tau_min[i], self.t_min[j], *m));
                    }
                }
            }
        }
        best
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:>10}", "tau \\ t");
        for t in &self.t_min {
            let _ = write!(s, " {:>17}", format!("{t} min"));
        }
        s.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            let _ = write!(s, "{:>10}", format!("{} min", self.tau_min[i]));
            for c in row {
                let cell = c.map_or("undefined".to_string(), |(m, sd)| format!("{m:.3} ± {sd:.3}"));
                let _ = write!(s, " {cell:>17}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["tau_min", "t_min", "macro_auc", "std"])?;
        for (i, row) in self.cells.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                let (m, sd) = c.map_or((String::new(), String::new()), |(m, sd)| (format!("{m:.6}"), format!("{sd:.6}")));
                w.write_record([self.tau_min[i].to_string(), self.t_min[j].to_string(), m, sd])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub fn tune_stage2(corpus: &Corpus, cfg: &PipelineConfig, tau_min: &[i64], t_min: &[i64]) -> Result<Stage2Table> {
    let variant = Variant {
        featurizer: Featurizer::BagOfFeatures,
        permute_labels: false,
        step_s: cfg.inference.step_min * 60,
    };
    let mut cells = vec![vec![None; t_min.len()]; tau_min.len()];
    for (i, &tau) in tau_min.iter().enumerate() {
        for (j, &t) in t_min.iter().enumerate() {
            if tau > t {
                continue;
            }
            let mut c = cfg.clone();
            c.window.tau_length_s = tau * 60;
            c.window.tau_step_s = tau * 60;
            c.window.t_length_s = t * 60;
            log::info!("stage 2: tau {tau} min, t {t} min");
            let report = crossval_variants(corpus, &c, &[variant])?.remove(0);
            cells[i][j] = Some(report.macro_auc());
        }
    }
    Ok(Stage2Table {
        tau_min: tau_min.to_vec(),
        t_min: t_min.to_vec(),
        cells,
    })
}

/// Mean ± std of the Rand Index at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurves {
    /// Rand Index against N at K = `fixed_k`.
    pub by_n: Vec<CurvePoint>,
    /// Rand Index against K at N = `fixed_n`.
    pub by_k: Vec<CurvePoint>,
    pub fixed_k: usize,
    pub fixed_n: usize,
}

impl SensitivityCurves {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Rand Index vs N (K = {})", self.fixed_k);
        for p in &self.by_n {
            let _ = writeln!(s, "  N={:<5} {:.4} ± {:.4}", p.x, p.mean, p.std);
        }
        let _ = writeln!(s, "Rand Index vs K (N = {})", self.fixed_n);
        for p in &self.by_k {
            let _ = writeln!(s, "  K={:<5} {:.4} ± {:.4}", p.x, p.mean, p.std);
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["curve", "k", "n", "mean", "std"])?;
        for p in &self.by_n {
            w.write_record(["n".into(), self.fixed_k.to_string(), p.x.to_string(), format!("{:.6}", p.mean), format!("{:.6}", p.std)])?;
        }
        for p in &self.by_k {
            w.write_record(["k".into(), p.x.to_string(), self.fixed_n.to_string(), format!("{:.6}", p.mean), format!("{:.6}", p.std)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rand Index curves over N and K; each repeat reseeds both codebooks and clustering.
pub fn sweep_sensitivity(
    corpus: &Corpus,
    cfg: &PipelineConfig,
    task: &ReferenceTask,
    k_values: &[usize],
    n_values: &[usize],
    fixed_k: usize,
    fixed_n: usize,
    repeats: usize,
) -> Result<SensitivityCurves> {
    if repeats < 2 {
        return Err(Error::Config("sensitivity sweep needs at least 2 repeats".into()));
    }
    let point = |k| GridPoint { wavelet: cfg.wavelet, k };
    // per repeat: (curve over N at fixed K, RI at fixed N for each K)
    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..repeats)
        .into_par_iter()
        .map(|rep| {
            let cb_seed = cfg.component_seed("sensitivity_codebook", rep as u64);
            let cl_seed = cfg.component_seed("sensitivity_cluster", rep as u64);
            let books = codebooks_for(corpus, cfg, &point(fixed_k), cb_seed)?;
            let hist = segment_histograms(corpus, &books, cfg, task)?;
            let over_n = rand_index_curve(&hist, n_values, cl_seed, &task.reference)?
                .into_iter()
                .map(|p| p.1)
                .collect();
            let over_k = k_values
                .iter()
                .map(|&k| {
                    let books = codebooks_for(corpus, cfg, &point(k), cb_seed)?;
                    let hist = segment_histograms(corpus, &books, cfg, task)?;
                    cluster_rand_index(&hist, fixed_n, crate::rng::derive_named(cl_seed, "cluster", fixed_n as u64), &task.reference)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((over_n, over_k))
        })
        .collect::<Result<_>>()?;
    let summarize = |xs: &[usize], pick: &dyn Fn(&(Vec<f64>, Vec<f64>)) -> &Vec<f64>| {
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let v: Vec<f64> = runs.iter().map(|r| pick(r)[i]).collect();
                let (mean, std) = mean_std(&v);
                CurvePoint { x, mean, std }
            })
            .collect()
    };
    Ok(SensitivityCurves {
        by_n: summarize(n_values, &|r| &r.0),
        by_k: summarize(k_values, &|r| &r.1),
        fixed_k,
        fixed_n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTable {
    /// (step in minutes, macro AUC mean, std)
    pub rows: Vec<(i64, f64, f64)>,
}

impl StepTable {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>10} {:>17}", "step", "macro ROC AUC");
        for (step, m, sd) in &self.rows {
            let _ = writeln!(s, "{:>10} {:>17}", format!("{step} min"), format!("{m:.4} ± {sd:.4}"));
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["step_min", "macro_auc", "std"])?;
        for (step, m, sd) in &self.rows {
            w.write_record([step.to_string(), format!("{m:.6}"), format!("{sd:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Macro AUC of one trained model per fold scanned at each inference step.
pub fn sweep_step(corpus: &Corpus, cfg: &PipelineConfig, steps_min: &[i64]) -> Result<StepTable> {
    let variants: Vec<Variant> = steps_min
        .iter()
        .map(|&s| Variant {
            featurizer: Featurizer::BagOfFeatures,
            permute_labels: false,
            step_s: s * 60,
        })
        .collect();
    let reports = crossval_variants(corpus, cfg, &variants)?;
    Ok(StepTable {
        rows: steps_min
            .iter()
            .zip(&reports)
            .map(|(&s, r)| {
                let (m, sd) = r.macro_auc();
                (s, m, sd)
            })
            .collect(),
    })
}

/// Pairwise Euclidean distances between histogram vectors.
pub fn pairwise_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

/// Writes `well_id,start,class,d0..d{m-1}` rows for external embedding.
pub fn write_distances<W: std::io::Write>(
    writer: W,
    corpus: &Corpus,
    task: &ReferenceTask,
    distances: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["well_id".to_string(), "start".into(), "class".into()];
    header.extend((0..distances.len()).map(|i| format!("d{i}")));
    w.write_record(&header)?;
    for (i, s) in task.segments.iter().enumerate() {
        let log = &corpus.logs[s.well];
        let mut row = vec![
            log.well_id.clone(),
            log.time_at(s.offset).to_iso(),
            task.classes[i].map_or("normal", |c| c.code()).to_string(),
        ];
        row.extend(distances[i].iter().map(|v| format!("{v}")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
