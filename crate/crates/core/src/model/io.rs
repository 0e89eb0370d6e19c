//! Model files: a short text preamble, a JSON header describing every tensor,
//! then the tensors as contiguous little-endian `f32`.
//!
//! ```text
//! EEGI-MODEL
//! version 1
//! header-bytes <n>
//! <n bytes of JSON header>
//! <payload>
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::network::EegInception;
use crate::error::{Error, Result};
use crate::nn::Parameterized;
use crate::scalar::Scalar;

pub const MODEL_MAGIC: &str = "EEGI-MODEL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    Param,
    Buffer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub kind: TensorKind,
    pub shape: Vec<usize>,
    /// Offset into the payload, in `f32` elements.
    pub offset: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub config: ModelConfig,
    pub scalar: String,
    pub total_params: usize,
    pub payload_values: usize,
    pub tensors: Vec<TensorEntry>,
}

fn layout<S: Scalar>(model: &EegInception<S>) -> Vec<TensorEntry> {
    let mut entries = Vec::new();
    let mut offset = 0;
    model.visit_params("", &mut |name, p| {
        entries.push(TensorEntry {
            name: name.to_string(),
            kind: TensorKind::Param,
            shape: p.dims().to_vec(),
            offset,
            len: p.len(),
        });
        offset += p.len();
    });
    model.visit_buffers("", &mut |name, b| {
        entries.push(TensorEntry {
            name: name.to_string(),
            kind: TensorKind::Buffer,
            shape: vec![b.len()],
            offset,
            len: b.len(),
        });
        offset += b.len();
    });
    entries
}

/// Serializes the model to bytes. Values are stored as `f32`.
pub fn encode_model<S: Scalar>(model: &EegInception<S>) -> Vec<u8> {
    let tensors = layout(model);
    let payload_values = tensors.iter().map(|t| t.len).sum();
    let header = ModelHeader {
        config: model.config().clone(),
        scalar: S::NAME.to_string(),
        total_params: model.num_params(),
        payload_values,
        tensors,
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(64 + json.len() + payload_values * 4);
    write!(
        out,
        "{MODEL_MAGIC}\nversion {MODEL_FORMAT_VERSION}\nheader-bytes {}\n",
        json.len()
    )
    .expect("writing to a Vec");
    out.extend_from_slice(&json);
    let mut push = |values: &[S]| {
        for v in values {
            out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
        }
    };
    model.visit_params("", &mut |_, p| push(&p.value));
    model.visit_buffers("", &mut |_, b| push(b));
    out
}

pub fn save_model<S: Scalar>(model: &EegInception<S>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

fn take_line<'a>(bytes: &'a [u8], pos: &mut usize, path: &Path) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Truncated {
        path: path.to_path_buf(),
        expected: (*pos + rest.len() + 1) as u64,
        found: bytes.len() as u64,
    })?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end]).map_err(|_| Error::Format {
        path: path.to_path_buf(),
        detail: "preamble is not UTF-8".into(),
    })
}

fn parse_preamble(bytes: &[u8], path: &Path) -> Result<(ModelHeader, usize)> {
    let format = |detail: String| Error::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut pos = 0;
    let magic = take_line(bytes, &mut pos, path)?;
    if magic != MODEL_MAGIC {
        return Err(format(format!("bad magic {magic:?}")));
    }
    let version_line = take_line(bytes, &mut pos, path)?;
    let found: u32 = version_line
        .strip_prefix("version ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format(format!("bad version line {version_line:?}")))?;
    if found != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found,
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let size_line = take_line(bytes, &mut pos, path)?;
    let header_len: usize = size_line
        .strip_prefix("header-bytes ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| format(format!("bad header size line {size_line:?}")))?;
    if bytes.len() < pos + header_len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: (pos + header_len) as u64,
            found: bytes.len() as u64,
        });
    }
    let header: ModelHeader = serde_json::from_slice(&bytes[pos..pos + header_len])
        .map_err(|e| format(format!("header: {e}")))?;
    Ok((header, pos + header_len))
}

/// Reads only the header of a model file.
pub fn inspect_model(path: impl AsRef<Path>) -> Result<ModelHeader> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_preamble(&bytes, path).map(|(h, _)| h)
}

/// Rebuilds a model from bytes produced by [`encode_model`].
pub fn decode_model<S: Scalar>(bytes: &[u8], path: &Path) -> Result<EegInception<S>> {
    let (header, start) = parse_preamble(bytes, path)?;
    let mut model = EegInception::<S>::new(header.config.clone())?;
    let expected = layout(&model);
    if expected.len() != header.tensors.len() {
        return Err(Error::shape(
            "model load",
            format!("file lists {} tensors, architecture has {}", header.tensors.len(), expected.len()),
        ));
    }
    for (want, got) in expected.iter().zip(&header.tensors) {
        if want != got {
            return Err(Error::shape(
                "model load",
                format!("tensor {} {:?} in file does not match {} {:?}", got.name, got.shape, want.name, want.shape),
            ));
        }
    }
    if header.total_params != model.num_params() {
        return Err(Error::shape(
            "model load",
            format!("file declares {} parameters, architecture has {}", header.total_params, model.num_params()),
        ));
    }
    let payload_len = header.payload_values * 4;
    let found = bytes.len() - start;
    if found < payload_len {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            expected: (start + payload_len) as u64,
            found: bytes.len() as u64,
        });
    }
    if found > payload_len {
        return Err(Error::Format {
            path: path.to_path_buf(),
            detail: format!("{} trailing bytes after payload", found - payload_len),
        });
    }
    let payload = &bytes[start..];
    let mut cursor = 0;
    let mut fill = |values: &mut [S]| {
        for v in values.iter_mut() {
            let raw: [u8; 4] = payload[cursor..cursor + 4].try_into().expect("4 bytes");
            *v = S::from_f32_sample(f32::from_le_bytes(raw));
            cursor += 4;
        }
    };
    model.visit_params_mut("", &mut |_, p| fill(&mut p.value));
    model.visit_buffers_mut("", &mut |_, b| fill(b));
    Ok(model)
}

pub fn load_model<S: Scalar>(path: impl AsRef<Path>) -> Result<EegInception<S>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Layer, Mode};
    use crate::tensor::{Shape, Tensor};

    fn small() -> ModelConfig {
        ModelConfig {
            time_len: 32,
            seed: 4,
            ..ModelConfig::binary().with_depth(2)
        }
    }

    fn trained_model() -> EegInception<f32> {
        let mut model = EegInception::<f32>::new(small()).unwrap();
        let x = Tensor::from_fn(Shape::new(4, 3, 32), |b, c, t| ((b + c * t) as f32 * 0.37).cos());
        model.forward(&x, Mode::Train).unwrap();
        model
    }

    #[test]
    fn round_trip_is_bitwise() {
        let model = trained_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.bin");
        save_model(&model, &path).unwrap();
        let loaded = load_model::<f32>(&path).unwrap();
        assert_eq!(loaded, model);
        let x = Tensor::from_fn(Shape::new(2, 3, 32), |b, c, t| (b * 5 + c + t) as f32 * 0.01);
        let (a, b) = (model.predict(&x).unwrap(), loaded.predict(&x).unwrap());
        assert!(a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn header_records_layout() {
        let model = trained_model();
        let bytes = encode_model(&model);
        let (header, _) = parse_preamble(&bytes, Path::new("mem")).unwrap();
        assert_eq!(header.total_params, model.num_params());
        assert_eq!(header.config, small());
        assert!(header.tensors.iter().any(|t| t.name == "initial.bn.running_var" && t.kind == TensorKind::Buffer));
        assert_eq!(header.tensors[0].name, "initial.bottleneck.weight");
        assert_eq!(header.tensors[0].shape, vec![2, 3, 1]);
    }

    #[test]
    fn version_truncation_and_shape_errors_are_distinct() {
        let model = trained_model();
        let bytes = encode_model(&model);
        let p = Path::new("mem");

        let text = String::from_utf8_lossy(&bytes[..40]).replace("version 1", "version 7");
        let mut bumped = text.into_bytes();
        bumped.extend_from_slice(&bytes[40..]);
        assert!(matches!(
            decode_model::<f32>(&bumped, p),
            Err(Error::VersionMismatch { found: 7, .. })
        ));

        assert!(matches!(
            decode_model::<f32>(&bytes[..bytes.len() - 3], p),
            Err(Error::Truncated { .. })
        ));

        let mut header = parse_preamble(&bytes, p).unwrap().0;
        header.tensors[0].shape = vec![2, 4, 1];
        let json = serde_json::to_vec(&header).unwrap();
        let mut edited = format!("{MODEL_MAGIC}\nversion 1\nheader-bytes {}\n", json.len()).into_bytes();
        edited.extend_from_slice(&json);
        edited.extend_from_slice(&bytes[parse_preamble(&bytes, p).unwrap().1..]);
        assert!(matches!(decode_model::<f32>(&edited, p), Err(Error::Shape { .. })));
    }

    #[test]
    fn inspect_reads_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        save_model(&trained_model(), &path).unwrap();
        let header = inspect_model(&path).unwrap();
        assert_eq!(header.scalar, "f32");
    }
}
