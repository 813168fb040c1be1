//! Trained-model container.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic "RIGCAST\0" | u32 version | manifest | window | codebooks | classifier | sha256
//! ```
//!
//! The manifest is the pipeline config as text. The trailing SHA-256 covers
//! every preceding byte. Version bumps are breaking: a reader accepts only
//! its own version.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::codebook::Codebook;
use crate::config::PipelineConfig;
use crate::dwt::{Family, Padding, WaveletSpec};
use crate::error::{Error, Result};
use crate::features::WindowConfig;
use crate::kmeans::KMeansModel;
use crate::model::gbdt::{BoostingParams, Ensemble, Node, Tree};
use crate::model::{Classifier, ForecastModel};
use crate::telemetry::Channel;

pub const MAGIC: &[u8; 8] = b"RIGCAST\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    /// Config text exactly as stored.
    pub manifest: String,
    pub config: PipelineConfig,
    pub model: ForecastModel,
}

impl ModelArtifact {
    pub fn new(config: PipelineConfig, model: ForecastModel) -> Self {
        ModelArtifact {
            manifest: config.to_text(),
            config,
            model,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        w.str(&self.manifest);
        let wc = &self.model.window_config;
        for v in [wc.t_length_s, wc.t_step_s, wc.tau_length_s, wc.tau_step_s] {
            w.i64(v);
        }
        w.len(self.model.codebooks.len());
        for b in &self.model.codebooks {
            write_codebook(&mut w, b);
        }
        write_classifier(&mut w, &self.model.classifier);
        let digest = Sha256::digest(&w.0);
        w.0.extend_from_slice(&digest);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::CorruptArtifact("not a rigcast model artifact".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(Error::CorruptArtifact("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: MAGIC.len() };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::CorruptArtifact(format!(
                "format version {version}, this build reads {FORMAT_VERSION}"
            )));
        }
        let manifest = r.string()?;
        let config = PipelineConfig::parse(&manifest)
            .map_err(|e| Error::CorruptArtifact(format!("manifest: {e}")))?;
        let window_config = WindowConfig {
            t_length_s: r.i64()?,
            t_step_s: r.i64()?,
            tau_length_s: r.i64()?,
            tau_step_s: r.i64()?,
        };
        let n_books = r.len()?;
        let codebooks = (0..n_books).map(|_| read_codebook(&mut r)).collect::<Result<Vec<_>>>()?;
        let classifier = read_classifier(&mut r)?;
        if r.pos != body.len() {
            return Err(Error::CorruptArtifact(format!("{} trailing bytes", body.len() - r.pos)));
        }
        let model = ForecastModel::new(classifier, window_config, codebooks)
            .map_err(|e| Error::CorruptArtifact(e.to_string()))?;
        Ok(ModelArtifact { manifest, config, model })
    }

    /// Hex SHA-256 of the serialized artifact.
    pub fn checksum(&self) -> String {
        let bytes = self.to_bytes();
        bytes[bytes.len() - 32..].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::from(e).in_file(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::from(e).in_file(path))?;
        Self::from_bytes(&bytes).map_err(|e| e.in_file(path))
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn i64(&mut self, v: i64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, xs: &[f64]) {
        self.len(xs.len());
        for &x in xs {
            self.f64(x);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if n > self.buf.len() - self.pos {
            return Err(Error::CorruptArtifact("truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array()?))
    }
    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        // every counted item occupies at least one byte
        if n > (self.buf.len() - self.pos) as u64 {
            return Err(Error::CorruptArtifact(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }
    fn string(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::CorruptArtifact("manifest is not UTF-8".into()))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
}

fn family_code(f: Family) -> u8 {
    Family::ALL.iter().position(|&x| x == f).expect("listed family") as u8
}

fn padding_code(p: Padding) -> u8 {
    match p {
        Padding::Symmetric => 0,
        Padding::Periodization => 1,
    }
}

fn write_codebook(w: &mut Writer, b: &Codebook) {
    w.u8(b.channel.index() as u8);
    w.i64(b.tau_length_s);
    w.i64(b.tau_step_s);
    w.i64(b.sample_period_s);
    w.u8(family_code(b.wavelet.family));
    w.u32(b.wavelet.level as u32);
    w.u8(padding_code(b.wavelet.padding));
    let q = &b.quantizer;
    w.u32(q.k as u32);
    w.u32(q.dim as u32);
    w.u64(q.seed);
    w.f64(q.inertia);
    w.f64s(&q.inertia_history);
    w.f64s(&q.centroids);
}

fn read_codebook(r: &mut Reader) -> Result<Codebook> {
    let bad = |what: &str| Error::CorruptArtifact(format!("invalid {what}"));
    let channel = *Channel::ALL.get(r.u8()? as usize).ok_or_else(|| bad("channel"))?;
    let tau_length_s = r.i64()?;
    let tau_step_s = r.i64()?;
    let sample_period_s = r.i64()?;
    let family = *Family::ALL.get(r.u8()? as usize).ok_or_else(|| bad("wavelet family"))?;
    let level = r.u32()? as usize;
    let padding = match r.u8()? {
        0 => Padding::Symmetric,
        1 => Padding::Periodization,
        _ => return Err(bad("padding")),
    };
    let wavelet = WaveletSpec::with_padding(family, level, padding).map_err(|_| bad("wavelet level"))?;
    let k = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let seed = r.u64()?;
    let inertia = r.f64()?;
    let inertia_history = r.f64s()?;
    let centroids = r.f64s()?;
    if centroids.len() != k * dim || k == 0 {
        return Err(bad("centroid table"));
    }
    Ok(Codebook {
        channel,
        tau_length_s,
        tau_step_s,
        sample_period_s,
        wavelet,
        quantizer: KMeansModel {
            k,
            dim,
            centroids,
            inertia,
            seed,
            inertia_history,
        },
    })
}

fn write_classifier(w: &mut Writer, c: &Classifier) {
    w.len(c.feature_dim);
    let p = &c.params;
    w.len(p.n_estimators);
    w.f64(p.learning_rate);
    w.len(p.max_depth);
    w.f64(p.subsample);
    w.f64(p.colsample_bytree);
    w.f64(p.positive_class_weight);
    w.f64(p.lambda);
    w.f64(p.min_child_weight);
    w.u64(p.seed);
    w.len(c.ensembles.len());
    for e in &c.ensembles {
        w.f64(e.base_score);
        w.f64(e.learning_rate);
        w.u64(e.seed);
        w.len(e.trees.len());
        for t in &e.trees {
            w.len(t.nodes.len());
            for n in &t.nodes {
                match *n {
                    Node::Leaf(v) => {
                        w.u8(0);
                        w.f64(v);
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.u8(1);
                        w.u32(feature);
                        w.f64(threshold);
                        w.u32(left);
                        w.u32(right);
                    }
                }
            }
        }
    }
}

fn read_classifier(r: &mut Reader) -> Result<Classifier> {
    let feature_dim = r.u64()? as usize;
    // raw u64 reads: these are values, not counts of following items
    let params = BoostingParams {
        n_estimators: r.u64()? as usize,
        learning_rate: r.f64()?,
        max_depth: r.u64()? as usize,
        subsample: r.f64()?,
        colsample_bytree: r.f64()?,
        positive_class_weight: r.f64()?,
        lambda: r.f64()?,
        min_child_weight: r.f64()?,
        seed: r.u64()?,
    };
    let n_ens = r.len()?;
    let mut ensembles = Vec::with_capacity(n_ens);
    for _ in 0..n_ens {
        let base_score = r.f64()?;
        let learning_rate = r.f64()?;
        let seed = r.u64()?;
        let n_trees = r.len()?;
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let n_nodes = r.len()?;
            let mut nodes = Vec::with_capacity(n_nodes);
            for _ in 0..n_nodes {
                nodes.push(match r.u8()? {
                    0 => Node::Leaf(r.f64()?),
                    1 => Node::Split {
                        feature: r.u32()?,
                        threshold: r.f64()?,
                        left: r.u32()?,
                        right: r.u32()?,
                    },
                    _ => return Err(Error::CorruptArtifact("invalid tree node tag".into())),
                });
            }
            validate_tree(&nodes, feature_dim)?;
            trees.push(Tree { nodes });
        }
        ensembles.push(Ensemble {
            base_score,
            learning_rate,
            trees,
            seed,
        });
    }
    Ok(Classifier {
        ensembles,
        feature_dim,
        params,
    })
}

/// Children must point forward and features must be in range, so prediction
/// cannot loop or index out of bounds.
fn validate_tree(nodes: &[Node], feature_dim: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::CorruptArtifact("empty tree".into()));
    }
    for (i, n) in nodes.iter().enumerate() {
        if let Node::Split { feature, left, right, .. } = *n {
            let ok = (feature as usize) < feature_dim
                && (left as usize) > i
                && (right as usize) > i
                && (left as usize) < nodes.len()
                && (right as usize) < nodes.len();
            if !ok {
                return Err(Error::CorruptArtifact(format!("tree node {i} is malformed")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::{fit_kmeans, KMeansParams};
    use crate::model::gbdt::logistic;

    fn artifact() -> ModelArtifact {
        let cfg = PipelineConfig::default();
        let codebooks: Vec<Codebook> = Channel::ALL
            .iter()
            .map(|&channel| {
                let data: Vec<f64> = (0..12).map(|i| (i * 7 % 5) as f64 + channel.index() as f64).collect();
                Codebook {
                    channel,
                    tau_length_s: 60,
                    tau_step_s: 60,
                    sample_period_s: 5,
                    wavelet: cfg.wavelet,
                    quantizer: fit_kmeans(&data, 2, &KMeansParams::new(2, 1)).unwrap(),
                }
            })
            .collect();
        let tree = Tree {
            nodes: vec![
                Node::Split {
                    feature: 3,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                },
                Node::Leaf(-0.25),
                Node::Leaf(0.75),
            ],
        };
        let ensembles = (0..6)
            .map(|t| Ensemble {
                base_score: -1.0 + t as f64 * 0.1,
                learning_rate: 0.05,
                trees: vec![tree.clone(); t + 1],
                seed: t as u64,
            })
            .collect();
        let classifier = Classifier {
            ensembles,
            feature_dim: 22,
            params: cfg.boosting.clone(),
        };
        let model = ForecastModel::new(classifier, WindowConfig::default(), codebooks).unwrap();
        ModelArtifact::new(cfg, model)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = artifact();
        let bytes = a.to_bytes();
        let back = ModelArtifact::from_bytes(&bytes).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn loaded_model_predicts_identically() {
        let a = artifact();
        let back = ModelArtifact::from_bytes(&a.to_bytes()).unwrap();
        let mut x = vec![0.0; 22];
        x[3] = 1.0;
        let p = back.model.classifier.predict_proba(&x).unwrap();
        assert_eq!(p, a.model.classifier.predict_proba(&x).unwrap());
        assert!((p[0] - logistic(-1.0 + 0.05 * 0.75)).abs() < 1e-15);
    }

    #[test]
    fn any_flipped_byte_is_rejected() {
        let bytes = artifact().to_bytes();
        for pos in [0, 9, 20, bytes.len() / 2, bytes.len() - 1] {
            let mut b = bytes.clone();
            b[pos] ^= 0x40;
            assert!(matches!(ModelArtifact::from_bytes(&b), Err(Error::CorruptArtifact(_))), "byte {pos}");
        }
    }

    #[test]
    fn truncation_and_other_versions_are_rejected() {
        let bytes = artifact().to_bytes();
        assert!(ModelArtifact::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        assert!(ModelArtifact::from_bytes(b"short").is_err());
        // rewrite the version and re-sign so only the version check can fail
        let mut b = bytes[..bytes.len() - 32].to_vec();
        b[8..12].copy_from_slice(&2u32.to_le_bytes());
        let d = Sha256::digest(&b);
        b.extend_from_slice(&d);
        let err = ModelArtifact::from_bytes(&b).unwrap_err();
        assert!(err.to_string().contains("version 2"));
    }

    #[test]
    fn malformed_tree_is_rejected_even_with_valid_checksum() {
        let mut a = artifact();
        a.model.classifier.ensembles[0].trees[0].nodes[0] = Node::Split {
            feature: 3,
            threshold: 0.5,
            left: 0,
            right: 2,
        };
        assert!(matches!(ModelArtifact::from_bytes(&a.to_bytes()), Err(Error::CorruptArtifact(_))));
    }
}
