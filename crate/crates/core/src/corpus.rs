//! A directory of well logs plus its accident reference table.
//!
//! Layout: one `<well_id>.csv` telemetry file per well, `reference.csv`,
//! and optionally `annotations.csv` for synthetic corpora.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::synth::{self, Annotation, SyntheticCorpus};
use crate::telemetry::{self, AccidentRecord, AccidentType, ChannelSpec, TelemetryLog};

pub const REFERENCE_FILE: &str = "reference.csv";
pub const ANNOTATIONS_FILE: &str = "annotations.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Logs sorted by well id.
    pub logs: Vec<TelemetryLog>,
    pub accidents: Vec<AccidentRecord>,
    pub annotations: Option<Vec<Annotation>>,
}

impl Corpus {
    pub fn new(mut logs: Vec<TelemetryLog>, accidents: Vec<AccidentRecord>) -> Result<Self> {
        logs.sort_by(|a, b| a.well_id.cmp(&b.well_id));
        if logs.windows(2).any(|w| w[0].well_id == w[1].well_id) {
            return Err(Error::Validation("duplicate well ids in corpus".into()));
        }
        telemetry::validate_reference(&accidents, &logs)?;
        Ok(Corpus {
            logs,
            accidents,
            annotations: None,
        })
    }

    pub fn well_index(&self, well_id: &str) -> Option<usize> {
        self.logs.binary_search_by(|l| l.well_id.as_str().cmp(well_id)).ok()
    }

    /// Accidents recorded on the well at `index`.
    pub fn accidents_of(&self, index: usize) -> Vec<&AccidentRecord> {
        let id = &self.logs[index].well_id;
        self.accidents.iter().filter(|a| &a.well_id == id).collect()
    }

    /// Accident types present anywhere in the corpus, in canonical order.
    pub fn types_present(&self) -> Vec<AccidentType> {
        AccidentType::ALL
            .into_iter()
            .filter(|t| self.accidents.iter().any(|a| a.accident_type == *t))
            .collect()
    }
}

impl From<SyntheticCorpus> for Corpus {
    fn from(s: SyntheticCorpus) -> Self {
        let mut c = Corpus {
            logs: s.logs,
            accidents: s.accidents,
            annotations: Some(s.annotations),
        };
        c.logs.sort_by(|a, b| a.well_id.cmp(&b.well_id));
        c
    }
}

fn log_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::from(e).in_file(dir))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::from(e).in_file(dir))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if path.extension().is_some_and(|e| e == "csv") && name != REFERENCE_FILE && name != ANNOTATIONS_FILE {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Loads every log in `dir` (cleaned with `specs`) and the reference table.
pub fn load_dir(dir: &Path, specs: &[ChannelSpec]) -> Result<Corpus> {
    let files = log_files(dir)?;
    let logs = files
        .par_iter()
        .map(|p| {
            let raw = telemetry::load_log(p, specs)?;
            telemetry::clean(&raw, specs).map_err(|e| e.in_file(p))
        })
        .collect::<Result<Vec<_>>>()?;
    let accidents = telemetry::load_reference(&dir.join(REFERENCE_FILE))?;
    let mut corpus = Corpus::new(logs, accidents)?;
    let ann = dir.join(ANNOTATIONS_FILE);
    if ann.exists() {
        let f = std::fs::File::open(&ann).map_err(|e| Error::from(e).in_file(&ann))?;
        corpus.annotations = Some(synth::read_annotations(f).map_err(|e| e.in_file(&ann))?);
    }
    log::info!(
        "loaded {} wells and {} accidents from {}",
        corpus.logs.len(),
        corpus.accidents.len(),
        dir.display()
    );
    Ok(corpus)
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::from(e).in_file(path))?;
    Ok(std::io::BufWriter::new(f))
}

/// Writes the corpus in the directory layout read by [`load_dir`].
pub fn save_dir(dir: &Path, corpus: &Corpus) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).in_file(dir))?;
    corpus
        .logs
        .par_iter()
        .map(|log| telemetry::save_log(&dir.join(format!("{}.csv", log.well_id)), log))
        .collect::<Result<Vec<_>>>()?;
    let p = dir.join(REFERENCE_FILE);
    telemetry::write_reference(create(&p)?, &corpus.accidents).map_err(|e| e.in_file(&p))?;
    if let Some(ann) = &corpus.annotations {
        let p = dir.join(ANNOTATIONS_FILE);
        synth::write_annotations(create(&p)?, ann).map_err(|e| e.in_file(&p))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_corpus, ScenarioConfig, ScheduledAccident};
    use crate::telemetry::canonical_specs;

    #[test]
    fn dir_round_trip() {
        let cfg = ScenarioConfig {
            n_wells: 2,
            hours_per_well: 26.0,
            accident_schedule: vec![ScheduledAccident {
                well: 1,
                accident_type: AccidentType::FluidShow,
                offset_s: 25 * 3600,
            }],
            ..ScenarioConfig::default()
        };
        let corpus: Corpus = generate_corpus(&cfg).unwrap().into();
        let dir = tempfile::tempdir().unwrap();
        save_dir(dir.path(), &corpus).unwrap();
        let back = load_dir(dir.path(), &canonical_specs()).unwrap();
        assert_eq!(back.accidents, corpus.accidents);
        assert_eq!(back.annotations, corpus.annotations);
        assert_eq!(back.logs.len(), 2);
        for (a, b) in back.logs.iter().zip(&corpus.logs) {
            assert_eq!(a.well_id, b.well_id);
            assert_eq!(a.channels(), b.channels());
        }
        assert_eq!(back.well_index("well_001"), Some(1));
        assert_eq!(back.types_present(), vec![AccidentType::FluidShow]);
    }
}
