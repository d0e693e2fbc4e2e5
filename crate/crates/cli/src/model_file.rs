//! Model files: a one-line JSON header, a newline, then the JSON payload of
//! the fitted model and a final newline. The header carries the SHA-256 of
//! the exact payload bytes.

use std::path::Path;

use hopls::{Algorithm, FittedModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FORMAT: &str = "hopls-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelHeader {
    pub format: String,
    pub version: u32,
    /// Stored model kind: `hopls`, `hopls2` or `pls`.
    pub algorithm: Algorithm,
    /// Estimator named on the command line (`npls` is stored as `hopls`/`hopls2`).
    pub requested: Algorithm,
    pub center: bool,
    pub config: serde_json::Value,
    pub payload_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub header: ModelHeader,
    pub model: FittedModel,
}

fn kind(model: &FittedModel) -> Algorithm {
    match model {
        FittedModel::Hopls(_) => Algorithm::Hopls,
        FittedModel::Hopls2(_) => Algorithm::Hopls2,
        FittedModel::Pls(_) => Algorithm::Pls,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ModelFile {
    pub fn new(model: FittedModel, requested: Algorithm) -> Result<Self, CliError> {
        let (center, config) = match &model {
            FittedModel::Hopls(m) => (m.config.center, serde_json::to_value(&m.config)),
            FittedModel::Hopls2(m) => (m.config.center, serde_json::to_value(&m.config)),
            FittedModel::Pls(m) => (m.config.center, serde_json::to_value(&m.config)),
        };
        let config = config.map_err(|e| CliError::Numerical(format!("cannot serialise config: {e}")))?;
        let payload = payload_bytes(&model)?;
        Ok(ModelFile {
            header: ModelHeader {
                format: FORMAT.into(),
                version: VERSION,
                algorithm: kind(&model),
                requested,
                center,
                config,
                payload_sha256: sha256_hex(&payload),
            },
            model,
        })
    }

    pub fn checksum(&self) -> &str {
        &self.header.payload_sha256
    }

    pub fn encode(&self) -> Result<Vec<u8>, CliError> {
        let mut out = serde_json::to_vec(&self.header)
            .map_err(|e| CliError::Numerical(format!("cannot serialise header: {e}")))?;
        out.push(b'\n');
        out.extend(payload_bytes(&self.model)?);
        out.push(b'\n');
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::Parse(format!("model file: {msg}"));
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| bad("missing header line".into()))?;
        let header: ModelHeader =
            serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(format!("header: {e}")))?;
        if header.format != FORMAT {
            return Err(bad(format!("unknown format '{}'", header.format)));
        }
        if header.version != VERSION {
            return Err(bad(format!("unsupported version {}", header.version)));
        }
        let payload = bytes[nl + 1..]
            .strip_suffix(b"\n")
            .ok_or_else(|| bad("payload must end with a newline".into()))?;
        if sha256_hex(payload) != header.payload_sha256 {
            return Err(bad("payload checksum mismatch".into()));
        }
        let model: FittedModel = serde_json::from_slice(payload).map_err(|e| bad(format!("payload: {e}")))?;
        if kind(&model) != header.algorithm {
            return Err(bad(format!(
                "header says {} but payload holds {}",
                header.algorithm,
                kind(&model)
            )));
        }
        Ok(ModelFile { header, model })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let bytes =
            std::fs::read(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::decode(&bytes).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.encode()?)
            .map_err(|e| CliError::Write(format!("cannot write {}: {e}", path.display())))
    }
}

fn payload_bytes(model: &FittedModel) -> Result<Vec<u8>, CliError> {
    serde_json::to_vec(model).map_err(|e| CliError::Numerical(format!("cannot serialise model: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use hopls::DenseTensor;

    fn small_model() -> FittedModel {
        let x = DenseTensor::from_fn(&[6, 3, 2], |ix| ((ix[0] * 7 + ix[1] * 3 + ix[2]) as f64 * 0.37).sin()).unwrap();
        let y = DenseTensor::from_fn(&[6, 2], |ix| ((ix[0] * 5 + ix[1]) as f64 * 0.61).cos()).unwrap();
        FittedModel::fit(Algorithm::Hopls2, &x, &y, 2, 2, true).unwrap()
    }

    #[test]
    fn tampered_payload_is_rejected() {
        let file = ModelFile::new(small_model(), Algorithm::Hopls2).unwrap();
        let mut bytes = file.encode().unwrap();
        let pos = bytes.len() - 3;
        bytes[pos] = if bytes[pos] == b'1' { b'2' } else { b'1' };
        let err = ModelFile::decode(&bytes).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn header_is_one_json_line() {
        let file = ModelFile::new(small_model(), Algorithm::Npls).unwrap();
        let bytes = file.encode().unwrap();
        let first = bytes.split(|&b| b == b'\n').next().unwrap();
        let v: serde_json::Value = serde_json::from_slice(first).unwrap();
        assert_eq!(v["algorithm"], "hopls2");
        assert_eq!(v["requested"], "npls");
        assert_eq!(v["config"]["n_components"], 2);
        assert_eq!(ModelFile::decode(&bytes).unwrap(), file);
    }
}
