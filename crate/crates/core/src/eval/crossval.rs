//! Well-grouped k-fold cross-validation.
//!
//! Training rows per well: t-windows at the training stride covering the
//! pre-accident history of each accident plus every normal region (data at
//! least the clearance away from any accident). Test rows per well: the
//! pre-accident history and a fixed number of sampled normal intervals,
//! scanned at the inference step. All windows are aligned to end at their
//! interval's end.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;

use super::accounting::alarm_accounting;
use super::metrics::{macro_mean, mean_std, per_type_auc, roc_auc, roc_curve, RocCurve};
use crate::codebook::{build_codebooks, Codebook};
use crate::config::PipelineConfig;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::features::{breakdown_offsets, TauLabeler, WindowConfig, WindowSamples};
use crate::model::{self, Alarm, Classifier, LabelVector, Matrix};
use crate::rng;
use crate::telemetry::{samples_for, AccidentRecord, AccidentType, TelemetryLog, N_TYPES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Featurizer {
    BagOfFeatures,
    Breakdown,
}

impl Featurizer {
    pub fn name(self) -> &'static str {
        match self {
            Featurizer::BagOfFeatures => "bag_of_features",
            Featurizer::Breakdown => "breakdown",
        }
    }
}

/// One model/evaluation configuration run on shared folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub featurizer: Featurizer,
    /// Shuffle training labels across rows (chance-level control).
    pub permute_labels: bool,
    pub step_s: i64,
}

impl Variant {
    pub fn label(&self) -> String {
        format!(
            "{}{} step={}min",
            self.featurizer.name(),
            if self.permute_labels { " permuted" } else { "" },
            self.step_s / 60
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub test_wells: Vec<String>,
    pub per_type_auc: [Option<f64>; N_TYPES],
    pub macro_auc: f64,
    /// AUC of "any accident" against the maximum per-type probability.
    pub binary_auc: Option<f64>,
    pub tpr: f64,
    pub fpr: f64,
    pub missed: [usize; N_TYPES],
    pub accidents: [usize; N_TYPES],
    pub train_rows: usize,
    pub test_rows: usize,
    /// Maximum per-type probability of each test window, for pooled ROC curves.
    pub max_probability: Vec<f64>,
    /// Whether each test window precedes any accident within the horizon.
    pub any_label: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub label: String,
    pub threshold: f64,
    /// Inference step the test windows were scanned at.
    pub step_s: i64,
    pub folds: Vec<FoldResult>,
}

fn mean_std_of(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    mean_std(&xs.collect::<Vec<_>>())
}

impl EvalReport {
    pub fn macro_auc(&self) -> (f64, f64) {
        mean_std_of(self.folds.iter().map(|f| f.macro_auc))
    }

    pub fn binary_auc(&self) -> (f64, f64) {
        mean_std_of(self.folds.iter().filter_map(|f| f.binary_auc))
    }

    pub fn tpr(&self) -> (f64, f64) {
        mean_std_of(self.folds.iter().map(|f| f.tpr))
    }

    pub fn fpr(&self) -> (f64, f64) {
        mean_std_of(self.folds.iter().map(|f| f.fpr))
    }

    /// Mean AUC per type over the folds where it is defined.
    pub fn type_auc(&self, t: AccidentType) -> Option<f64> {
        let v: Vec<f64> = self.folds.iter().filter_map(|f| f.per_type_auc[t.index()]).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn missed(&self) -> ([usize; N_TYPES], [usize; N_TYPES]) {
        let mut missed = [0; N_TYPES];
        let mut total = [0; N_TYPES];
        for f in &self.folds {
            for t in 0..N_TYPES {
                missed[t] += f.missed[t];
                total[t] += f.accidents[t];
            }
        }
        (missed, total)
    }

    /// Binary ROC curve over the test windows of all folds pooled.
    pub fn roc_curve(&self) -> Result<RocCurve> {
        let scores: Vec<f64> = self.folds.iter().flat_map(|f| f.max_probability.iter().copied()).collect();
        let labels: Vec<bool> = self.folds.iter().flat_map(|f| f.any_label.iter().copied()).collect();
        roc_curve(&scores, &labels)
    }

    /// Segment-level FPR times the number of evaluations per day.
    pub fn false_alarms_per_day(&self) -> f64 {
        self.fpr().0 * 86_400.0 / self.step_s as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let (m, sd) = self.macro_auc();
        let _ = writeln!(s, "{}", self.label);
        let _ = writeln!(s, "macro ROC AUC      {m:.4} ± {sd:.4} over {} folds", self.folds.len());
        let (b, bsd) = self.binary_auc();
        let _ = writeln!(s, "binary ROC AUC     {b:.4} ± {bsd:.4}");
        let (tp, tpsd) = self.tpr();
        let (fp, fpsd) = self.fpr();
        let _ = writeln!(s, "threshold {:.3}: TPR {tp:.3} ± {tpsd:.3}, FPR {fp:.3} ± {fpsd:.3}", self.threshold);
        let _ = writeln!(s, "false alarms per day at this step: {:.1}", self.false_alarms_per_day());
        let (missed, total) = self.missed();
        let _ = writeln!(s, "{:<12} {:>8} {:>8}", "type", "auc", "missed");
        for t in AccidentType::ALL {
            let auc = self.type_auc(t).map_or("n/a".to_string(), |a| format!("{a:.4}"));
            let _ = writeln!(
                s,
                "{:<12} {:>8} {:>4}/{:<3}",
                t.code(),
                auc,
                missed[t.index()],
                total[t.index()]
            );
        }
        s
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = ["variant", "fold", "macro_auc", "binary_auc", "tpr", "fpr"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for t in AccidentType::ALL {
            header.push(format!("auc_{}", t.code()));
        }
        for t in AccidentType::ALL {
            header.push(format!("missed_{}", t.code()));
        }
        header.extend(["train_rows".to_string(), "test_rows".to_string(), "test_wells".to_string()]);
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        for f in &self.folds {
            let mut row = vec![
                self.label.clone(),
                f.fold.to_string(),
                format!("{:.6}", f.macro_auc),
                opt(f.binary_auc),
                format!("{:.6}", f.tpr),
                format!("{:.6}", f.fpr),
            ];
            row.extend(f.per_type_auc.iter().map(|a| opt(*a)));
            row.extend(f.missed.iter().map(|m| m.to_string()));
            row.extend([f.train_rows.to_string(), f.test_rows.to_string(), f.test_wells.join(" ")]);
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Partitions well indices into `k` folds such that every fold's training
/// wells hold each accident type present in the corpus.
pub fn assign_folds(corpus: &Corpus, k: usize, seed: u64, max_retries: usize) -> Result<Vec<Vec<usize>>> {
    let n = corpus.logs.len();
    if k < 2 || n < k {
        return Err(Error::Config(format!("cannot split {n} wells into {k} folds")));
    }
    let present = corpus.types_present();
    let well_types: Vec<Vec<AccidentType>> = (0..n)
        .map(|w| corpus.accidents_of(w).iter().map(|a| a.accident_type).collect())
        .collect();
    let mut r = rng::rng(seed);
    for attempt in 0..max_retries.max(1) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        let mut folds = vec![Vec::new(); k];
        for (i, w) in order.into_iter().enumerate() {
            folds[i % k].push(w);
        }
        for f in &mut folds {
            f.sort_unstable();
        }
        let ok = folds.iter().all(|test| {
            present.iter().all(|t| {
                (0..n).any(|w| test.binary_search(&w).is_err() && well_types[w].contains(t))
            })
        });
        if ok {
            log::debug!("fold assignment accepted after {} attempts", attempt + 1);
            return Ok(folds);
        }
    }
    Err(Error::Config(format!(
        "no {k}-fold split keeps every accident type in each training set after {max_retries} attempts"
    )))
}

/// Sample ranges of `log` at least `clearance` samples away from every accident start.
pub fn normal_regions(log: &TelemetryLog, accidents: &[&AccidentRecord], clearance: usize) -> Vec<(usize, usize)> {
    let mut blocked: Vec<(usize, usize)> = accidents
        .iter()
        .map(|a| {
            let s = ((a.start_time.0 - log.start_time.0) / log.sample_period_s).max(0) as usize;
            (s.saturating_sub(clearance), (s + clearance).min(log.len()))
        })
        .collect();
    blocked.sort_unstable();
    let mut out = Vec::new();
    let mut cur = 0;
    for (lo, hi) in blocked {
        if lo > cur {
            out.push((cur, lo));
        }
        cur = cur.max(hi);
    }
    if cur < log.len() {
        out.push((cur, log.len()));
    }
    out
}

/// Offsets of t-windows inside `[lo, hi)` ending at `hi`, `hi - step`, ...
pub fn aligned_offsets(lo: usize, hi: usize, t: usize, step: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if hi < lo + t || step == 0 {
        return out;
    }
    let mut end = hi;
    while end >= lo + t {
        out.push(end - t);
        if end < step {
            break;
        }
        end -= step;
    }
    out.reverse();
    out
}

struct Protocol {
    t: usize,
    train_step: usize,
    pre: usize,
    clearance: usize,
    normal_len: usize,
    normal_count: usize,
}

impl Protocol {
    fn new(cfg: &PipelineConfig, period: i64) -> Result<Self> {
        let win = cfg.window.samples(period)?;
        let hours = |h: f64| samples_for((h * 3600.0).round() as i64, period);
        Ok(Protocol {
            t: win.t,
            train_step: win.t_step,
            pre: hours(cfg.crossval.pre_accident_h)?,
            clearance: hours(cfg.crossval.clearance_h)?,
            normal_len: hours(cfg.crossval.normal_interval_h)?,
            normal_count: cfg.crossval.normal_intervals,
        })
    }

    fn accident_index(log: &TelemetryLog, a: &AccidentRecord) -> usize {
        ((a.start_time.0 - log.start_time.0) / log.sample_period_s) as usize
    }

    fn pre_accident(&self, log: &TelemetryLog, accidents: &[&AccidentRecord]) -> Vec<(usize, usize)> {
        accidents
            .iter()
            .map(|a| {
                let s = Self::accident_index(log, a).min(log.len());
                (s.saturating_sub(self.pre), s)
            })
            .collect()
    }

    /// Training window offsets of one well, sorted and deduplicated.
    fn train_offsets(&self, log: &TelemetryLog, accidents: &[&AccidentRecord]) -> Vec<usize> {
        let mut offs = Vec::new();
        for (lo, hi) in self.pre_accident(log, accidents) {
            offs.extend(aligned_offsets(lo, hi, self.t, self.train_step));
        }
        for (lo, hi) in normal_regions(log, accidents, self.clearance) {
            offs.extend(aligned_offsets(lo, hi, self.t, self.train_step));
        }
        offs.sort_unstable();
        offs.dedup();
        offs
    }

    /// Test intervals of one well: pre-accident histories, then sampled normal intervals.
    fn test_intervals(&self, log: &TelemetryLog, accidents: &[&AccidentRecord], seed: u64) -> Vec<(usize, usize)> {
        let mut out = self.pre_accident(log, accidents);
        let regions: Vec<(usize, usize)> = normal_regions(log, accidents, self.clearance)
            .into_iter()
            .filter(|(lo, hi)| hi - lo >= self.normal_len)
            .collect();
        let starts: usize = regions.iter().map(|(lo, hi)| hi - lo - self.normal_len + 1).sum();
        if starts > 0 {
            let mut r = rng::rng(seed);
            for _ in 0..self.normal_count {
                let mut u = r.random_range(0..starts);
                for &(lo, hi) in &regions {
                    let n = hi - lo - self.normal_len + 1;
                    if u < n {
                        out.push((lo + u, lo + u + self.normal_len));
                        break;
                    }
                    u -= n;
                }
            }
        }
        out
    }
}

/// Featurizes windows of one log with either featurizer.
struct WellFeaturizer<'a> {
    log: &'a TelemetryLog,
    labeler: Option<TauLabeler<'a>>,
    win: WindowSamples,
    window: &'a WindowConfig,
}

impl<'a> WellFeaturizer<'a> {
    fn new(log: &'a TelemetryLog, codebooks: Option<&'a [Codebook]>, window: &'a WindowConfig) -> Result<Self> {
        Ok(WellFeaturizer {
            log,
            labeler: codebooks.map(|b| TauLabeler::new(log, b)).transpose()?,
            win: window.samples(log.sample_period_s)?,
            window,
        })
    }

    fn encode(&mut self, offsets: &[usize], out: &mut Vec<f64>) -> Result<()> {
        match &mut self.labeler {
            Some(l) => {
                for &o in offsets {
                    out.extend(l.encode(o, &self.win)?);
                }
            }
            None => {
                for fv in breakdown_offsets(self.log, self.window, offsets)? {
                    out.extend(fv.values);
                }
            }
        }
        Ok(())
    }
}

/// Training matrix and labels over the given wells.
pub fn training_set(
    corpus: &Corpus,
    wells: &[usize],
    codebooks: Option<&[Codebook]>,
    cfg: &PipelineConfig,
) -> Result<(Matrix, Vec<LabelVector>)> {
    let parts: Vec<(Vec<f64>, Vec<LabelVector>, usize)> = wells
        .par_iter()
        .map(|&w| {
            let log = &corpus.logs[w];
            let accs = corpus.accidents_of(w);
            let proto = Protocol::new(cfg, log.sample_period_s)?;
            let offs = proto.train_offsets(log, &accs);
            let mut feat = WellFeaturizer::new(log, codebooks, &cfg.window)?;
            let mut data = Vec::new();
            feat.encode(&offs, &mut data)?;
            let labels = offs
                .iter()
                .map(|&o| model::label_segment(&log.well_id, log.time_at(o + proto.t), &corpus.accidents))
                .collect();
            Ok((data, labels, offs.len()))
        })
        .collect::<Result<_>>()?;
    let rows: usize = parts.iter().map(|p| p.2).sum();
    let mut data = Vec::new();
    let mut labels = Vec::with_capacity(rows);
    for (d, l, _) in parts {
        data.extend(d);
        labels.extend(l);
    }
    let cols = if rows == 0 { 0 } else { data.len() / rows };
    Ok((Matrix::new(rows, cols, data)?, labels))
}

/// Scored test windows of one fold.
struct TestScores {
    probs: Vec<[f64; N_TYPES]>,
    labels: Vec<LabelVector>,
    alarms_at: Vec<(usize, crate::telemetry::Timestamp)>,
}

fn score_test_wells(
    corpus: &Corpus,
    wells: &[usize],
    codebooks: Option<&[Codebook]>,
    classifier: &Classifier,
    cfg: &PipelineConfig,
    step_s: i64,
) -> Result<TestScores> {
    let per_well: Vec<(Vec<[f64; N_TYPES]>, Vec<LabelVector>, Vec<(usize, crate::telemetry::Timestamp)>)> = wells
        .par_iter()
        .map(|&w| {
            let log = &corpus.logs[w];
            let accs = corpus.accidents_of(w);
            let proto = Protocol::new(cfg, log.sample_period_s)?;
            let step = samples_for(step_s, log.sample_period_s)?;
            let seed = cfg.component_seed("normal_intervals", w as u64);
            let mut offs = Vec::new();
            for (lo, hi) in proto.test_intervals(log, &accs, seed) {
                offs.extend(aligned_offsets(lo, hi, proto.t, step));
            }
            let mut feat = WellFeaturizer::new(log, codebooks, &cfg.window)?;
            let mut data = Vec::new();
            feat.encode(&offs, &mut data)?;
            let dim = classifier.feature_dim;
            let mut probs = Vec::with_capacity(offs.len());
            let mut labels = Vec::with_capacity(offs.len());
            let mut times = Vec::with_capacity(offs.len());
            for (k, &o) in offs.iter().enumerate() {
                probs.push(classifier.predict_proba(&data[k * dim..(k + 1) * dim])?);
                let end = log.time_at(o + proto.t);
                labels.push(model::label_segment(&log.well_id, end, &corpus.accidents));
                times.push((w, end));
            }
            Ok((probs, labels, times))
        })
        .collect::<Result<_>>()?;
    let mut out = TestScores {
        probs: Vec::new(),
        labels: Vec::new(),
        alarms_at: Vec::new(),
    };
    for (p, l, t) in per_well {
        out.probs.extend(p);
        out.labels.extend(l);
        out.alarms_at.extend(t);
    }
    Ok(out)
}

fn fold_result(
    corpus: &Corpus,
    fold: usize,
    test: &[usize],
    scores: &TestScores,
    threshold: f64,
    train_rows: usize,
) -> Result<FoldResult> {
    let type_scores: Vec<Vec<f64>> = (0..N_TYPES)
        .map(|t| scores.probs.iter().map(|p| p[t]).collect())
        .collect();
    let type_labels: Vec<Vec<bool>> = (0..N_TYPES)
        .map(|t| scores.labels.iter().map(|l| l.flags[t]).collect())
        .collect();
    let aucs = per_type_auc(&type_scores, &type_labels)?;
    let macro_auc = macro_mean(&aucs)?;
    let max_p: Vec<f64> = scores
        .probs
        .iter()
        .map(|p| p.iter().copied().fold(0.0, f64::max))
        .collect();
    let any: Vec<bool> = scores.labels.iter().map(|l| l.any()).collect();
    let binary_auc = roc_auc(&max_p, &any).ok();
    let (mut tp, mut pos, mut fp, mut neg) = (0usize, 0usize, 0usize, 0usize);
    for (p, &a) in max_p.iter().zip(&any) {
        let fired = *p >= threshold;
        if a {
            pos += 1;
            tp += usize::from(fired);
        } else {
            neg += 1;
            fp += usize::from(fired);
        }
    }
    let alarms: Vec<Alarm> = scores
        .probs
        .iter()
        .zip(&scores.alarms_at)
        .flat_map(|(p, &(w, time))| {
            AccidentType::ALL.into_iter().filter_map(move |t| {
                (p[t.index()] >= threshold).then(|| Alarm {
                    well_id: corpus.logs[w].well_id.clone(),
                    time,
                    accident_type: t,
                    probability: p[t.index()],
                })
            })
        })
        .collect();
    let test_accidents: Vec<AccidentRecord> = test
        .iter()
        .flat_map(|&w| corpus.accidents_of(w).into_iter().cloned())
        .collect();
    let tally = alarm_accounting(&alarms, &test_accidents);
    let mut accidents = [0; N_TYPES];
    for a in &test_accidents {
        accidents[a.accident_type.index()] += 1;
    }
    let mut per_type = [None; N_TYPES];
    per_type.copy_from_slice(&aucs);
    Ok(FoldResult {
        fold,
        test_wells: test.iter().map(|&w| corpus.logs[w].well_id.clone()).collect(),
        per_type_auc: per_type,
        macro_auc,
        binary_auc,
        tpr: if pos > 0 { tp as f64 / pos as f64 } else { f64::NAN },
        fpr: if neg > 0 { fp as f64 / neg as f64 } else { f64::NAN },
        missed: tally.missed,
        accidents,
        train_rows,
        test_rows: scores.probs.len(),
        max_probability: max_p,
        any_label: any,
    })
}

/// Runs every variant on the same folds; one report per variant, in order.
///
/// Codebooks are rebuilt per fold from the training wells only and shared by
/// the variants of that fold; one classifier is trained per distinct
/// (featurizer, permutation) pair and reused across inference steps.
pub fn crossval_variants(corpus: &Corpus, cfg: &PipelineConfig, variants: &[Variant]) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let folds = assign_folds(
        corpus,
        cfg.crossval.folds,
        cfg.component_seed("folds", 0),
        cfg.crossval.max_retries,
    )?;
    let per_fold: Vec<Vec<FoldResult>> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| run_fold(corpus, cfg, variants, f, test))
        .collect::<Result<_>>()?;
    Ok(variants
        .iter()
        .enumerate()
        .map(|(v, var)| EvalReport {
            label: var.label(),
            threshold: cfg.inference.threshold,
            step_s: var.step_s,
            folds: per_fold.iter().map(|r| r[v].clone()).collect(),
        })
        .collect())
}

fn run_fold(corpus: &Corpus, cfg: &PipelineConfig, variants: &[Variant], f: usize, test: &[usize]) -> Result<Vec<FoldResult>> {
    let train: Vec<usize> = (0..corpus.logs.len()).filter(|w| test.binary_search(w).is_err()).collect();
    let needs_books = variants.iter().any(|v| v.featurizer == Featurizer::BagOfFeatures);
    let books = if needs_books {
        let logs: Vec<&TelemetryLog> = train.iter().map(|&w| &corpus.logs[w]).collect();
        log::info!("fold {f}: building codebooks from {} wells", logs.len());
        Some(build_codebooks(&logs, &cfg.codebook_params(cfg.component_seed("codebook", f as u64)))?)
    } else {
        None
    };
    let mut results: Vec<Option<FoldResult>> = vec![None; variants.len()];
    let mut done: Vec<(Featurizer, bool)> = Vec::new();
    for v in variants {
        let key = (v.featurizer, v.permute_labels);
        if done.contains(&key) {
            continue;
        }
        done.push(key);
        let fb = match v.featurizer {
            Featurizer::BagOfFeatures => books.as_deref(),
            Featurizer::Breakdown => None,
        };
        let (x, mut labels) = training_set(corpus, &train, fb, cfg)?;
        if v.permute_labels {
            labels.shuffle(&mut rng::rng(cfg.component_seed("permute", f as u64)));
        }
        let params = model::BoostingParams {
            seed: cfg.component_seed("boosting", f as u64),
            ..cfg.boosting.clone()
        };
        log::info!("fold {f}: training {} on {} rows × {} features", v.label(), x.rows(), x.cols());
        let clf = model::train(&x, &labels, &params)?;
        for (k, other) in variants.iter().enumerate() {
            if (other.featurizer, other.permute_labels) != key {
                continue;
            }
            let scores = score_test_wells(corpus, test, fb, &clf, cfg, other.step_s)?;
            results[k] = Some(fold_result(corpus, f, test, &scores, cfg.inference.threshold, x.rows())?);
        }
    }
    Ok(results.into_iter().map(|r| r.expect("every variant evaluated")).collect())
}

/// Bag-of-features cross-validation at the configured inference step.
pub fn crossval(corpus: &Corpus, cfg: &PipelineConfig) -> Result<EvalReport> {
    let v = Variant {
        featurizer: Featurizer::BagOfFeatures,
        permute_labels: false,
        step_s: cfg.inference.step_min * 60,
    };
    Ok(crossval_variants(corpus, cfg, &[v])?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::{Timestamp, N_CHANNELS};

    fn flat_log(id: &str, hours: usize) -> TelemetryLog {
        let n = hours * 720;
        let mut ch = vec![vec![1.0; n]; N_CHANNELS];
        ch[10] = vec![0.1; n];
        TelemetryLog::new(id, Timestamp(0), 5, ch).unwrap()
    }

    fn corpus(n: usize) -> Corpus {
        let logs: Vec<TelemetryLog> = (0..n).map(|i| flat_log(&format!("w{i:02}"), 30)).collect();
        let accidents = (0..n)
            .filter(|i| i % 2 == 0)
            .map(|i| AccidentRecord {
                well_id: format!("w{i:02}"),
                accident_type: AccidentType::ALL[(i / 2) % 2],
                start_time: Timestamp(26 * 3600),
            })
            .collect();
        Corpus::new(logs, accidents).unwrap()
    }

    #[test]
    fn folds_partition_wells() {
        let c = corpus(10);
        let folds = assign_folds(&c, 5, 1, 1000).unwrap();
        assert_eq!(folds.len(), 5);
        let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(folds.iter().all(|f| f.len() == 2));
        assert_eq!(folds, assign_folds(&c, 5, 1, 1000).unwrap());
    }

    #[test]
    fn impossible_folds_error() {
        // a type on a single well can never be in every training set
        let mut c = corpus(6);
        c.accidents.truncate(1);
        assert!(matches!(assign_folds(&c, 3, 0, 50), Err(Error::Config(_))));
    }

    #[test]
    fn regions_and_offsets() {
        let log = flat_log("w", 48);
        let acc = AccidentRecord {
            well_id: "w".into(),
            accident_type: AccidentType::Stuck,
            start_time: Timestamp(30 * 3600),
        };
        let regions = normal_regions(&log, &[&acc], 24 * 720);
        assert_eq!(regions, vec![(0, 6 * 720)]);
        assert_eq!(normal_regions(&log, &[], 10), vec![(0, log.len())]);
        let offs = aligned_offsets(0, 100, 30, 20);
        assert_eq!(offs, vec![10, 30, 50, 70]);
        assert!(aligned_offsets(0, 20, 30, 5).is_empty());
        assert_eq!(aligned_offsets(5, 35, 30, 100), vec![5]);
    }

    #[test]
    fn test_intervals_are_normal_and_seeded() {
        let cfg = PipelineConfig::default();
        let log = flat_log("w", 48);
        let acc = AccidentRecord {
            well_id: "w".into(),
            accident_type: AccidentType::Stuck,
            start_time: Timestamp(40 * 3600),
        };
        let p = Protocol::new(&cfg, 5).unwrap();
        let iv = p.test_intervals(&log, &[&acc], 3);
        assert_eq!(iv.len(), 21);
        assert_eq!(iv[0], (16 * 720, 40 * 720));
        for &(lo, hi) in &iv[1..] {
            assert_eq!(hi - lo, 8 * 720);
            assert!(hi <= 16 * 720);
        }
        assert_eq!(iv, p.test_intervals(&log, &[&acc], 3));
    }
}
