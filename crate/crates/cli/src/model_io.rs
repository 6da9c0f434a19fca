//! Binary model container and its JSON sidecar.
//!
//! Layout (little endian):
//!
//! ```text
//! magic "PARDEPM\0" | format u32 | kind u8 | beam u32 | dim_log2 u32
//! | template version (u32 length + UTF-8) | update_count u64
//! | nonzero count u64 | (index u32, weight f64, accumulator f64) * count
//! ```
//!
//! The weight and accumulator arrays are dense in memory; only coordinates
//! where either is non-zero are stored.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use pardep_core::features::{FeatureConfig, TEMPLATE_SET_VERSION};
use pardep_core::train::{ParserKind, TrainConfig};
use pardep_core::WeightModel;
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 8] = b"PARDEPM\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    Version(u32),
    #[error("feature template set `{found}` does not match this build (`{expected}`)")]
    TemplateMismatch { found: String, expected: String },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
}

/// A trained model plus what is needed to parse with it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub kind: ParserKind,
    pub beam_size: usize,
    pub model: WeightModel,
}

fn kind_code(kind: ParserKind) -> u8 {
    match kind {
        ParserKind::LLGPar => 0,
        ParserKind::LGPar => 1,
        ParserKind::LTPar => 2,
    }
}

impl ModelFile {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let m = &self.model;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&[kind_code(self.kind)])?;
        w.write_all(&(self.beam_size as u32).to_le_bytes())?;
        w.write_all(&m.config().dimension_log2.to_le_bytes())?;
        let version = m.config().template_set_version.as_bytes();
        w.write_all(&(version.len() as u32).to_le_bytes())?;
        w.write_all(version)?;
        w.write_all(&m.update_count().to_le_bytes())?;
        let nonzero: Vec<usize> = (0..m.dimension())
            .filter(|&i| m.weights()[i] != 0.0 || m.accumulator()[i] != 0.0)
            .collect();
        w.write_all(&(nonzero.len() as u64).to_le_bytes())?;
        for i in nonzero {
            w.write_all(&(i as u32).to_le_bytes())?;
            w.write_all(&m.weights()[i].to_le_bytes())?;
            w.write_all(&m.accumulator()[i].to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, ModelError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ModelError::BadMagic);
        }
        let format = read_u32(&mut r)?;
        if format != FORMAT_VERSION {
            return Err(ModelError::Version(format));
        }
        let mut code = [0u8; 1];
        r.read_exact(&mut code)?;
        let kind = match code[0] {
            0 => ParserKind::LLGPar,
            1 => ParserKind::LGPar,
            2 => ParserKind::LTPar,
            c => return Err(ModelError::Corrupt(format!("unknown parser code {c}"))),
        };
        let beam_size = read_u32(&mut r)? as usize;
        let dim_log2 = read_u32(&mut r)?;
        let len = read_u32(&mut r)? as usize;
        if len > 1024 {
            return Err(ModelError::Corrupt("template version too long".into()));
        }
        let mut version = vec![0u8; len];
        r.read_exact(&mut version)?;
        let version = String::from_utf8(version).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        if version != TEMPLATE_SET_VERSION {
            return Err(ModelError::TemplateMismatch {
                found: version,
                expected: TEMPLATE_SET_VERSION.to_owned(),
            });
        }
        let config = FeatureConfig::new(dim_log2).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        let update_count = read_u64(&mut r)?;
        let count = read_u64(&mut r)? as usize;
        let d = config.dimension();
        if count > d {
            return Err(ModelError::Corrupt("more entries than dimensions".into()));
        }
        let mut weights = vec![0.0; d];
        let mut acc = vec![0.0; d];
        for _ in 0..count {
            let i = read_u32(&mut r)? as usize;
            if i >= d {
                return Err(ModelError::Corrupt(format!("index {i} out of range")));
            }
            weights[i] = read_f64(&mut r)?;
            acc[i] = read_f64(&mut r)?;
        }
        let model = WeightModel::from_parts(config, weights, acc, update_count).map_err(|e| ModelError::Corrupt(e.to_string()))?;
        Ok(ModelFile { kind, beam_size, model })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut f = io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::read_from(io::BufReader::new(fs::File::open(path)?))
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Training settings as recorded in sidecars and plan files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub beam_size: usize,
    pub sgd_step: f64,
    pub sgd_decay: f64,
    pub l2_sigma2: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub per_iter_pa_subset: usize,
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings::from(&TrainConfig::default())
    }
}

impl From<&TrainConfig> for TrainSettings {
    fn from(c: &TrainConfig) -> Self {
        TrainSettings {
            beam_size: c.beam_size,
            sgd_step: c.sgd_step,
            sgd_decay: c.sgd_decay,
            l2_sigma2: c.l2_sigma2,
            batch_size: c.batch_size,
            patience: c.patience,
            per_iter_pa_subset: c.per_iter_pa_subset,
            max_iterations: c.max_iterations,
            rng_seed: c.rng_seed,
        }
    }
}

impl From<&TrainSettings> for TrainConfig {
    fn from(s: &TrainSettings) -> Self {
        TrainConfig {
            beam_size: s.beam_size,
            sgd_step: s.sgd_step,
            sgd_decay: s.sgd_decay,
            l2_sigma2: s.l2_sigma2,
            batch_size: s.batch_size,
            patience: s.patience,
            per_iter_pa_subset: s.per_iter_pa_subset,
            max_iterations: s.max_iterations,
            rng_seed: s.rng_seed,
        }
    }
}

/// Training metadata written next to a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format_version: u32,
    pub parser: String,
    pub template_set_version: String,
    pub dimension_log2: u32,
    pub seed: u64,
    pub config: TrainSettings,
    pub fa_sentences: usize,
    pub pa_sentences: usize,
    pub skipped_instances: usize,
    pub best_iteration: usize,
    pub dev_curve: Vec<f64>,
}

/// `model.bin` -> `model.bin.json`.
pub fn sidecar_path(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

impl Sidecar {
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(path, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let config = FeatureConfig::new(16).unwrap();
        let mut model = WeightModel::new(config);
        model.tick();
        model.update(5, 1.5);
        model.tick();
        model.update(5, -0.25);
        model.update(700, 2.0);
        let file = ModelFile {
            kind: ParserKind::LTPar,
            beam_size: 16,
            model,
        };
        let mut buf = Vec::new();
        file.write_to(&mut buf).unwrap();
        let back = ModelFile::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.model.averaged(), file.model.averaged());
    }

    #[test]
    fn rejects_foreign_files() {
        assert!(matches!(ModelFile::read_from(&b"NOTAMODELFILE..."[..]), Err(ModelError::BadMagic)));
        let file = ModelFile {
            kind: ParserKind::LGPar,
            beam_size: 1,
            model: WeightModel::new(FeatureConfig::new(16).unwrap()),
        };
        let mut buf = Vec::new();
        file.write_to(&mut buf).unwrap();
        // corrupt the template version string
        let pos = buf.windows(TEMPLATE_SET_VERSION.len()).position(|w| w == TEMPLATE_SET_VERSION.as_bytes()).unwrap();
        buf[pos] = b'X';
        assert!(matches!(ModelFile::read_from(buf.as_slice()), Err(ModelError::TemplateMismatch { .. })));
        buf.truncate(10);
        assert!(ModelFile::read_from(buf.as_slice()).is_err());
    }

    #[test]
    fn settings_mirror_the_config() {
        let c = TrainConfig {
            beam_size: 3,
            rng_seed: 99,
            ..TrainConfig::default()
        };
        assert_eq!(TrainConfig::from(&TrainSettings::from(&c)), c);
        let parsed: TrainSettings = toml::from_str("beam_size = 8").unwrap();
        assert_eq!(parsed.beam_size, 8);
        assert_eq!(parsed.patience, TrainConfig::default().patience);
        assert!(toml::from_str::<TrainSettings>("beam = 8").is_err());
    }
}
