//! Self-describing model directories.
//!
//! A model directory holds `manifest.json` (format tag, version, shapes, the full run
//! configuration and training summaries), `vocab.tsv`, and row-major little-endian `f32`
//! matrices: `theta.f32` (D x K), `phi.f32` (K x D), `topic_vectors.f32` (K x d),
//! `output_vectors.f32` (D x d) and `bias.f32` (D). Files a mode does not need are absent.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::Vocabulary;
use crate::embed::{EmbeddingState, TrainSummary};
use crate::error::{Error, Result};
use crate::inference::{Membership, Mode, TrainedModel};

pub const MODEL_FORMAT: &str = "mmsg-model";
pub const MODEL_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub sweeps: usize,
    pub final_temperature: f64,
    pub final_acceptance: f64,
    pub final_log_joint: f64,
    pub nonfinite: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub instances: usize,
    pub context_tokens: usize,
    pub chain: Option<ChainSummary>,
    pub nce: Option<TrainSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u32,
    pub mode: Mode,
    pub vocab_size: usize,
    pub topics: usize,
    pub dim: Option<usize>,
    pub files: Vec<String>,
    pub config: RunConfig,
    pub training: TrainingSummary,
}

fn write_f32<'a>(path: &Path, values: impl IntoIterator<Item = &'a f64>) -> Result<()> {
    let io = |e| Error::io(format!("writing {}", path.display()), e);
    let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
    for &x in values {
        out.write_all(&(x as f32).to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

fn read_f32(path: &Path, len: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    if bytes.len() != 4 * len {
        return Err(Error::Format(format!(
            "{} holds {} bytes, expected {}",
            path.display(),
            bytes.len(),
            4 * len
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let data = read_f32(path, rows * cols)?;
    Ok(Array2::from_shape_vec((rows, cols), data).expect("length checked"))
}

/// Rescales rows to sum to one after the round trip through `f32`.
fn renormalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let s = row.sum();
        if s > 0.0 {
            row.mapv_inplace(|x| x / s);
        }
    }
}

fn partial_path(dir: &Path) -> PathBuf {
    let mut name = dir.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    dir.with_file_name(name)
}

/// Writes a model directory. Everything goes to a sibling `.partial` directory first, which
/// replaces `dir` only once complete, so a failed write never leaves a half-written model.
/// An existing `dir` is replaced only if it is itself a model directory.
///
/// `extras` are additional named files such as training logs.
pub fn save_model(
    dir: &Path,
    model: &TrainedModel,
    config: &RunConfig,
    training: &TrainingSummary,
    extras: &[(&str, Vec<u8>)],
) -> Result<()> {
    if dir.exists() && !dir.join(MANIFEST).exists() && fs::read_dir(dir).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(Error::config(
            "out",
            format!("{} exists and is not a model directory", dir.display()),
        ));
    }
    let tmp = partial_path(dir);
    let result = write_contents(&tmp, model, config, training, extras).and_then(|()| {
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| Error::io(format!("replacing {}", dir.display()), e))?;
        }
        fs::rename(&tmp, dir).map_err(|e| Error::io(format!("moving model into {}", dir.display()), e))
    });
    if result.is_err() {
        let _ = fs::remove_dir_all(&tmp);
    }
    result
}

fn write_contents(
    tmp: &Path,
    model: &TrainedModel,
    config: &RunConfig,
    training: &TrainingSummary,
    extras: &[(&str, Vec<u8>)],
) -> Result<()> {
    if tmp.exists() {
        fs::remove_dir_all(tmp).map_err(|e| Error::io(format!("clearing {}", tmp.display()), e))?;
    }
    fs::create_dir_all(tmp).map_err(|e| Error::io(format!("creating {}", tmp.display()), e))?;
    let mut files = vec!["vocab.tsv".to_string()];
    model.vocab().save(&tmp.join("vocab.tsv"))?;
    if let Membership::Dense(theta) = model.theta() {
        write_f32(&tmp.join("theta.f32"), theta.iter())?;
        files.push("theta.f32".into());
    }
    if let Some(phi) = model.phi() {
        write_f32(&tmp.join("phi.f32"), phi.iter())?;
        files.push("phi.f32".into());
    }
    if let Some(es) = model.embeddings() {
        write_f32(&tmp.join("topic_vectors.f32"), es.topic_vecs.iter())?;
        write_f32(&tmp.join("output_vectors.f32"), es.out_vecs.iter())?;
        write_f32(&tmp.join("bias.f32"), es.bias.iter())?;
        files.extend(["topic_vectors.f32", "output_vectors.f32", "bias.f32"].map(String::from));
    }
    for (name, bytes) in extras {
        fs::write(tmp.join(name), bytes).map_err(|e| Error::io(format!("writing {name}"), e))?;
        files.push(name.to_string());
    }
    let manifest = Manifest {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        mode: model.mode(),
        vocab_size: model.vocab_size(),
        topics: model.num_topics(),
        dim: model.embeddings().map(|e| e.dim()),
        files,
        config: config.clone(),
        training: training.clone(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(tmp.join(MANIFEST), json + "\n").map_err(|e| Error::io("writing manifest", e))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != MODEL_FORMAT || manifest.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "expected {MODEL_FORMAT} v{MODEL_VERSION}, found {} v{}",
            manifest.format, manifest.version
        )));
    }
    Ok(manifest)
}

/// Loads a model directory written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<(TrainedModel, Manifest)> {
    let manifest = read_manifest(dir)?;
    let has = |f: &str| manifest.files.iter().any(|x| x == f);
    let vocab = Vocabulary::load(&dir.join("vocab.tsv"))?;
    let (d, k) = (manifest.vocab_size, manifest.topics);
    if vocab.len() != d {
        return Err(Error::Format(format!("vocab.tsv has {} entries, manifest says {d}", vocab.len())));
    }
    let theta = if has("theta.f32") {
        let mut t = read_matrix(&dir.join("theta.f32"), d, k)?;
        renormalize_rows(&mut t);
        Membership::Dense(t)
    } else {
        Membership::OneHot { vocab_size: d }
    };
    let phi = if has("phi.f32") {
        let mut p = read_matrix(&dir.join("phi.f32"), k, d)?;
        renormalize_rows(&mut p);
        Some(p)
    } else {
        None
    };
    let embeddings = match manifest.dim {
        Some(dim) if has("topic_vectors.f32") => Some(EmbeddingState {
            topic_vecs: read_matrix(&dir.join("topic_vectors.f32"), k, dim)?,
            out_vecs: read_matrix(&dir.join("output_vectors.f32"), d, dim)?,
            bias: Array1::from(read_f32(&dir.join("bias.f32"), d)?),
        }),
        _ => None,
    };
    let model = TrainedModel::new(vocab, manifest.mode, theta, phi, embeddings)?;
    Ok((model, manifest))
}
