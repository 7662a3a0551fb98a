//! Binary checkpoint format.
//!
//! Layout: magic `FMLN`, version u32, length-prefixed canonical-JSON model
//! config, length-prefixed canonical-JSON vocabulary (tokens in id order),
//! then parameter records sorted by name: name length u32 + name bytes +
//! rank u32 + dims u64[] + little-endian f32 payload. All integers are
//! little-endian. Save/load round-trips are byte-identical.

use std::io::{Read, Write};
use std::path::Path;

use crate::nets::{Model, ModelConfig, ParameterStore};
use crate::tensor::{Scalar, Tensor};

use super::Vocabulary;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"FMLN";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint does not match the model architecture: {0}")]
    Mismatch(String),
}

/// Deserialized checkpoint contents; parameters are stored as f32 payloads
/// regardless of the runtime precision.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub tensors: Vec<(String, Vec<usize>, Vec<f32>)>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &Model<T>) -> Checkpoint {
        let tensors = model
            .params
            .iter()
            .map(|(name, p)| {
                (
                    name.to_string(),
                    p.tensor.shape().to_vec(),
                    p.tensor.data().iter().map(|&v| Scalar::to_f32(v)).collect(),
                )
            })
            .collect();
        Checkpoint {
            config: model.config.clone(),
            vocab: model.vocab.clone(),
            tensors,
        }
    }

    /// Rebuilds a runnable model; the record set must exactly match the
    /// architecture's registry.
    pub fn into_model<T: Scalar>(self) -> Result<Model<T>, CheckpointError> {
        self.config
            .validate()
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let mut params: ParameterStore<T> = ParameterStore::init(&self.config, self.vocab.len(), 0);
        let expected = params.len();
        if self.tensors.len() != expected {
            return Err(CheckpointError::Mismatch(format!(
                "expected {expected} parameter records, found {}",
                self.tensors.len()
            )));
        }
        for (name, shape, payload) in self.tensors {
            if !params.contains(&name) {
                return Err(CheckpointError::Mismatch(format!("unknown parameter `{name}`")));
            }
            if params.get(&name).shape() != shape.as_slice() {
                return Err(CheckpointError::Mismatch(format!(
                    "parameter `{name}` has shape {shape:?}, expected {:?}",
                    params.get(&name).shape()
                )));
            }
            let data: Vec<T> = payload.into_iter().map(T::from_f32).collect();
            params.set(&name, Tensor::from_vec(shape, data));
        }
        Ok(Model {
            config: self.config,
            vocab: self.vocab,
            params,
        })
    }

    pub fn write(&self, w: &mut impl Write) -> Result<(), CheckpointError> {
        w.write_all(&CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        let config_json = self.config.to_json();
        write_block(w, config_json.as_bytes())?;
        let vocab_json = serde_json::to_string(self.vocab.tokens())
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        write_block(w, vocab_json.as_bytes())?;
        for (name, shape, payload) in &self.tensors {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&(shape.len() as u32).to_le_bytes())?;
            for &dim in shape {
                w.write_all(&(dim as u64).to_le_bytes())?;
            }
            for &v in payload {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Checkpoint, CheckpointError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::BadVersion(version));
        }
        let config_json = read_block(r)?;
        let config = ModelConfig::from_json(
            std::str::from_utf8(&config_json)
                .map_err(|e| CheckpointError::Corrupt(e.to_string()))?,
        )
        .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let vocab_json = read_block(r)?;
        let tokens: Vec<String> = serde_json::from_slice(&vocab_json)
            .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
        let vocab = Vocabulary::from_tokens(tokens).map_err(CheckpointError::Corrupt)?;

        let mut tensors = Vec::new();
        loop {
            let mut len_buf = [0u8; 4];
            match r.read(&mut len_buf)? {
                0 => break,
                4 => {}
                n => {
                    let mut rest = vec![0u8; 4 - n];
                    r.read_exact(&mut rest).map_err(|_| {
                        CheckpointError::Corrupt("truncated parameter record".into())
                    })?;
                    len_buf[n..].copy_from_slice(&rest);
                }
            }
            let name_len = u32::from_le_bytes(len_buf) as usize;
            let mut name_bytes = vec![0u8; name_len];
            r.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes)
                .map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
            let rank = read_u32(r)? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                let mut dim_buf = [0u8; 8];
                r.read_exact(&mut dim_buf)?;
                shape.push(u64::from_le_bytes(dim_buf) as usize);
            }
            let numel: usize = shape.iter().product();
            let mut payload = Vec::with_capacity(numel);
            let mut val_buf = [0u8; 4];
            for _ in 0..numel {
                r.read_exact(&mut val_buf)?;
                payload.push(f32::from_le_bytes(val_buf));
            }
            tensors.push((name, shape, payload));
        }
        Ok(Checkpoint {
            config,
            vocab,
            tensors,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write(&mut out).expect("in-memory write cannot fail");
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        Checkpoint::read(&mut file)
    }
}

fn write_block(w: &mut impl Write, bytes: &[u8]) -> Result<(), CheckpointError> {
    w.write_all(&(bytes.len() as u32).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_block(r: &mut impl Read) -> Result<Vec<u8>, CheckpointError> {
    let len = read_u32(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{EmbedderKind, PoolingKind};
    use crate::train::parse_dataset;

    fn tiny_model() -> Model<f32> {
        let data = parse_dataset("1\t(p x)\t(q x)\n").unwrap();
        let vocab = Vocabulary::build(&data);
        Model::init(
            ModelConfig::small(EmbedderKind::Gcn, PoolingKind::DagPool),
            vocab,
            11,
        )
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let model = tiny_model();
        let ckpt = Checkpoint::from_model(&model);
        let bytes1 = ckpt.to_bytes();
        let reread = Checkpoint::read(&mut bytes1.as_slice()).unwrap();
        let bytes2 = reread.to_bytes();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn round_trip_preserves_parameters_exactly() {
        let model = tiny_model();
        let ckpt = Checkpoint::from_model(&model);
        let bytes = ckpt.to_bytes();
        let loaded: Model<f32> = Checkpoint::read(&mut bytes.as_slice())
            .unwrap()
            .into_model()
            .unwrap();
        for ((name_a, pa), (name_b, pb)) in model.params.iter().zip(loaded.params.iter()) {
            assert_eq!(name_a, name_b);
            assert_eq!(pa.tensor.data(), pb.tensor.data(), "{name_a}");
        }
        assert_eq!(loaded.vocab.tokens(), model.vocab.tokens());
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = tiny_model_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            Checkpoint::read(&mut bytes.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
    }

    #[test]
    fn bad_version_rejected() {
        let mut bytes = tiny_model_bytes();
        bytes[4] = 99;
        assert!(matches!(
            Checkpoint::read(&mut bytes.as_slice()),
            Err(CheckpointError::BadVersion(_))
        ));
    }

    fn tiny_model_bytes() -> Vec<u8> {
        Checkpoint::from_model(&tiny_model()).to_bytes()
    }
}
