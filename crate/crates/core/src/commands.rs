//! End-to-end operations behind the command-line verbs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::artifact::ModelArtifact;
use crate::codebook::build_codebooks;
use crate::config::PipelineConfig;
use crate::corpus::{self, Corpus};
use crate::error::{Error, Result};
use crate::eval::crossval::{crossval_variants, training_set, EvalReport, Featurizer, Variant};
use crate::eval::tuning::{
    pairwise_distances, reference_task, segment_histograms, stage1_grid, sweep_sensitivity, sweep_step, tune_stage1,
    tune_stage2, write_distances, Stage1Method,
};
use crate::model::{self, alarms_from_scores, write_alarms, ForecastModel};
use crate::synth::generate_corpus;
use crate::telemetry::{self, AccidentType, TelemetryLog, N_TYPES};

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    Ok(std::io::BufWriter::new(f))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub wells: usize,
    pub accidents: usize,
    pub annotations: usize,
}

/// Generates the configured synthetic corpus into `out_dir`.
pub fn cmd_synth(cfg: &PipelineConfig, out_dir: &Path) -> Result<SynthSummary> {
    let synthetic = generate_corpus(&cfg.scenario())?;
    let corpus: Corpus = synthetic.into();
    corpus::save_dir(out_dir, &corpus)?;
    Ok(SynthSummary {
        wells: corpus.logs.len(),
        accidents: corpus.accidents.len(),
        annotations: corpus.annotations.as_ref().map_or(0, |a| a.len()),
    })
}

/// Cleans one log file, or every log in a directory, into `output`.
/// Returns the files written.
pub fn cmd_clean(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<Vec<PathBuf>> {
    let mut pairs = Vec::new();
    if input.is_dir() {
        ensure_dir(output)?;
        let entries = std::fs::read_dir(input).map_err(|e| Error::from(e).in_file(input))?;
        for entry in entries {
            let p = entry.map_err(|e| Error::from(e).in_file(input))?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if p.extension().is_some_and(|e| e == "csv")
                && name != corpus::REFERENCE_FILE
                && name != corpus::ANNOTATIONS_FILE
            {
                pairs.push((p.clone(), output.join(name)));
            }
        }
        pairs.sort();
    } else {
        pairs.push((input.to_path_buf(), output.to_path_buf()));
    }
    for (src, dst) in &pairs {
        let raw = telemetry::load_log(src, &cfg.specs)?;
        let cleaned = telemetry::clean(&raw, &cfg.specs).map_err(|e| e.in_file(src))?;
        telemetry::save_log(dst, &cleaned)?;
        log::info!("cleaned {} -> {}", src.display(), dst.display());
    }
    Ok(pairs.into_iter().map(|(_, d)| d).collect())
}

/// Fits codebooks and the classifier on every well of the corpus.
pub fn train_artifact(corpus: &Corpus, cfg: &PipelineConfig) -> Result<ModelArtifact> {
    cfg.validate()?;
    let logs: Vec<&TelemetryLog> = corpus.logs.iter().collect();
    let books = build_codebooks(&logs, &cfg.codebook_params(cfg.component_seed("codebook", u64::MAX)))?;
    let wells: Vec<usize> = (0..corpus.logs.len()).collect();
    let (x, labels) = training_set(corpus, &wells, Some(&books), cfg)?;
    log::info!("training on {} rows × {} features", x.rows(), x.cols());
    let params = model::BoostingParams {
        seed: cfg.component_seed("boosting", u64::MAX),
        ..cfg.boosting.clone()
    };
    let classifier = model::train(&x, &labels, &params)?;
    let fm = ForecastModel::new(classifier, cfg.window, books)?;
    Ok(ModelArtifact::new(cfg.clone(), fm))
}

pub fn cmd_train(corpus_dir: &Path, cfg: &PipelineConfig, out: &Path) -> Result<ModelArtifact> {
    let corpus = corpus::load_dir(corpus_dir, &cfg.specs)?;
    let artifact = train_artifact(&corpus, cfg)?;
    artifact.save(out)?;
    Ok(artifact)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictSummary {
    pub evaluations: usize,
    pub alarms: usize,
    /// Highest probability seen per type; `None` when nothing was scored.
    pub max_probability: [Option<f64>; N_TYPES],
}

impl PredictSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} evaluations, {} alarms", self.evaluations, self.alarms);
        for t in AccidentType::ALL {
            let p = self.max_probability[t.index()].map_or("n/a".to_string(), |p| format!("{p:.4}"));
            let _ = writeln!(s, "  {:<12} max p = {p}", t.code());
        }
        s
    }
}

/// Replays a log through a trained artifact and writes the alarms CSV.
pub fn cmd_predict(
    artifact_path: &Path,
    log_path: &Path,
    step_min: Option<i64>,
    threshold: Option<f64>,
    out: &Path,
) -> Result<PredictSummary> {
    let artifact = ModelArtifact::load(artifact_path)?;
    let cfg = &artifact.config;
    let step_s = step_min.unwrap_or(cfg.inference.step_min) * 60;
    let threshold = threshold.unwrap_or(cfg.inference.threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Validation(format!("threshold {threshold} is outside [0, 1]")));
    }
    if step_s <= 0 {
        return Err(Error::Validation("step must be positive".into()));
    }
    let raw = telemetry::load_log(log_path, &cfg.specs)?;
    let log = telemetry::clean(&raw, &cfg.specs).map_err(|e| e.in_file(log_path))?;
    let evals = artifact.model.stream_scores(&log, step_s)?;
    let alarms = alarms_from_scores(&log.well_id, &evals, threshold);
    write_alarms(create(out)?, &alarms).map_err(|e| e.in_file(out))?;
    let mut max_probability = [None; N_TYPES];
    for e in &evals {
        for (m, &p) in max_probability.iter_mut().zip(&e.probabilities) {
            *m = Some(m.map_or(p, |x: f64| x.max(p)));
        }
    }
    Ok(PredictSummary {
        evaluations: evals.len(),
        alarms: alarms.len(),
        max_probability,
    })
}

/// Bag-of-features at the configured step, its permuted-label control and
/// the breakdown baseline, all on the same folds.
pub fn evaluate_corpus(corpus: &Corpus, cfg: &PipelineConfig) -> Result<Vec<EvalReport>> {
    let step_s = cfg.inference.step_min * 60;
    let variants = [
        Variant {
            featurizer: Featurizer::BagOfFeatures,
            permute_labels: false,
            step_s,
        },
        Variant {
            featurizer: Featurizer::BagOfFeatures,
            permute_labels: true,
            step_s,
        },
        Variant {
            featurizer: Featurizer::Breakdown,
            permute_labels: false,
            step_s,
        },
    ];
    crossval_variants(corpus, cfg, &variants)
}

/// Writes `report.txt`, `report.csv` and `roc.csv` (bag-of-features) to `out_dir`.
pub fn cmd_evaluate(corpus_dir: &Path, cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<EvalReport>> {
    let corpus = corpus::load_dir(corpus_dir, &cfg.specs)?;
    let reports = evaluate_corpus(&corpus, cfg)?;
    ensure_dir(out_dir)?;
    let text: Vec<String> = reports.iter().map(|r| r.to_text()).collect();
    write_text(&out_dir.join("report.txt"), &text.join("\n"))?;
    let p = out_dir.join("report.csv");
    let mut buf = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        let mut part = Vec::new();
        r.write_csv(&mut part)?;
        // keep one header row
        let skip = if i == 0 { 0 } else { part.iter().position(|&b| b == b'\n').map_or(0, |k| k + 1) };
        buf.extend_from_slice(&part[skip..]);
    }
    std::fs::write(&p, buf).map_err(|e| Error::from(e).in_file(&p))?;
    let p = out_dir.join("roc.csv");
    reports[0].roc_curve()?.write_csv(create(&p)?).map_err(|e| e.in_file(&p))?;
    Ok(reports)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TuneMode {
    Stage1,
    Stage2,
    Sensitivity,
    Step,
}

impl std::str::FromStr for TuneMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stage1" => Ok(TuneMode::Stage1),
            "stage2" => Ok(TuneMode::Stage2),
            "sensitivity" => Ok(TuneMode::Sensitivity),
            "step" => Ok(TuneMode::Step),
            other => Err(Error::Validation(format!(
                "unknown tune mode `{other}` (expected stage1, stage2, sensitivity or step)"
            ))),
        }
    }
}

fn reference_for(corpus: &Corpus, cfg: &PipelineConfig) -> Result<crate::eval::ReferenceTask> {
    reference_task(corpus, cfg, cfg.tune.segments, cfg.component_seed("segments", 0))
}

/// Runs one tuning sweep; writes `<mode>.txt` and `<mode>.csv`, returns the text.
pub fn tune_corpus(corpus: &Corpus, cfg: &PipelineConfig, mode: TuneMode, out_dir: &Path) -> Result<String> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let n_values: Vec<usize> = (cfg.tune.n_min..=cfg.tune.n_max).collect();
    let (name, text, csv) = match mode {
        TuneMode::Stage1 => {
            let task = reference_for(corpus, cfg)?;
            let table = tune_stage1(corpus, cfg, &stage1_grid(cfg)?, &task, &n_values)?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            ("stage1", table.to_text(), csv)
        }
        TuneMode::Stage2 => {
            let table = tune_stage2(corpus, cfg, &cfg.tune.tau_grid_min, &cfg.tune.t_grid_min)?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            ("stage2", table.to_text(), csv)
        }
        TuneMode::Sensitivity => {
            let task = reference_for(corpus, cfg)?;
            // best N at the configured K fixes the N used for the K curve
            let point = crate::eval::GridPoint {
                wavelet: cfg.wavelet,
                k: cfg.codebook.k,
            };
            let table = tune_stage1(corpus, cfg, &[point], &task, &n_values)?;
            let fixed_n = table
                .rows
                .iter()
                .find(|r| matches!(r.method, Stage1Method::Wavelet(_)))
                .map_or(cfg.tune.n_max, |r| r.best_n);
            let curves = sweep_sensitivity(
                corpus,
                cfg,
                &task,
                &cfg.tune.sensitivity_k,
                &cfg.tune.sensitivity_n,
                cfg.codebook.k,
                fixed_n,
                cfg.tune.repeats,
            )?;
            let mut csv = Vec::new();
            curves.write_csv(&mut csv)?;
            ("sensitivity", curves.to_text(), csv)
        }
        TuneMode::Step => {
            let table = sweep_step(corpus, cfg, &cfg.tune.steps_min)?;
            let mut csv = Vec::new();
            table.write_csv(&mut csv)?;
            ("step", table.to_text(), csv)
        }
    };
    write_text(&out_dir.join(format!("{name}.txt")), &text)?;
    let p = out_dir.join(format!("{name}.csv"));
    std::fs::write(&p, csv).map_err(|e| Error::from(e).in_file(&p))?;
    Ok(text)
}

pub fn cmd_tune(corpus_dir: &Path, cfg: &PipelineConfig, mode: TuneMode, out_dir: &Path) -> Result<String> {
    let corpus = corpus::load_dir(corpus_dir, &cfg.specs)?;
    tune_corpus(&corpus, cfg, mode, out_dir)
}

/// Pairwise histogram distances of the reference segments, for external embedding.
pub fn cmd_export_distances(corpus_dir: &Path, cfg: &PipelineConfig, out: &Path) -> Result<usize> {
    let corpus = corpus::load_dir(corpus_dir, &cfg.specs)?;
    let task = reference_for(&corpus, cfg)?;
    let logs: Vec<&TelemetryLog> = corpus.logs.iter().collect();
    let books = build_codebooks(&logs, &cfg.codebook_params(cfg.component_seed("codebook", u64::MAX)))?;
    let hist = segment_histograms(&corpus, &books, cfg, &task)?;
    let d = pairwise_distances(&hist);
    write_distances(create(out)?, &corpus, &task, &d).map_err(|e| e.in_file(out))?;
    Ok(d.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        for (k, v) in [
            ("synth.n_wells", "12"),
            ("synth.hours_per_well", "48"),
            ("synth.accidents_per_type", "2"),
            ("codebook.k", "12"),
            ("boosting.n_estimators", "15"),
            ("crossval.folds", "2"),
        ] {
            cfg.set(k, v).unwrap();
        }
        cfg
    }

    #[test]
    fn train_then_predict_from_disk() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        let dir = tmp.path().join("corpus");
        let s = cmd_synth(&cfg, &dir).unwrap();
        assert_eq!(s.wells, 12);
        let m = tmp.path().join("m.bin");
        let trained = cmd_train(&dir, &cfg, &m).unwrap();
        assert_eq!(ModelArtifact::load(&m).unwrap().checksum(), trained.checksum());

        let log = dir.join("well_000.csv");
        let (a, b) = (tmp.path().join("a.csv"), tmp.path().join("b.csv"));
        let sa = cmd_predict(&m, &log, None, Some(0.0), &a).unwrap();
        let sb = cmd_predict(&m, &log, None, Some(0.0), &b).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(sa.evaluations > 0);
        for p in sa.max_probability {
            let p = p.unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
        assert!(matches!(
            cmd_predict(&m, &log, Some(0), None, &a),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn clean_directory_skips_tables() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg();
        cfg.set("synth.n_wells", "3").unwrap();
        cfg.set("synth.accidents_per_type", "0").unwrap();
        let dir = tmp.path().join("corpus");
        cmd_synth(&cfg, &dir).unwrap();
        let written = cmd_clean(&cfg, &dir, &tmp.path().join("clean")).unwrap();
        let names: Vec<_> = written.iter().map(|p| p.file_name().unwrap().to_str().unwrap().to_string()).collect();
        assert_eq!(names, ["well_000.csv", "well_001.csv", "well_002.csv"]);
    }

    #[test]
    fn tune_mode_names() {
        for (s, m) in [
            ("stage1", TuneMode::Stage1),
            ("stage2", TuneMode::Stage2),
            ("sensitivity", TuneMode::Sensitivity),
            ("step", TuneMode::Step),
        ] {
            assert_eq!(s.parse::<TuneMode>().unwrap(), m);
        }
        assert!(matches!("Stage1".parse::<TuneMode>(), Err(Error::Validation(_))));
    }

    #[test]
    fn evaluate_writes_reports() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        let dir = tmp.path().join("corpus");
        cmd_synth(&cfg, &dir).unwrap();
        let out = tmp.path().join("eval");
        let reports = cmd_evaluate(&dir, &cfg, &out).unwrap();
        assert_eq!(reports.len(), 3);
        let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
        // one header, then one row per fold per variant
        assert_eq!(csv.lines().count(), 1 + 3 * 2);
        assert_eq!(csv.lines().filter(|l| l.starts_with("variant,")).count(), 1);
        let roc = std::fs::read_to_string(out.join("roc.csv")).unwrap();
        assert!(roc.lines().count() > 2);
    }
}
