//! Checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes   "CDFNETCK"
//! version      u32       1
//! header_len   u64       byte length of the JSON header
//! header       JSON      {"config": <echo>, "tensors": [{"name", "shape", "offset", "len"}]}
//! payload      f64 LE    tensor data back to back; `offset` is in bytes from payload start
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::cdfnet::{CdfNet, NetConfig};
use crate::error::{Error, Result};
use crate::layers::Module;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CDFNETCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    len: usize,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: serde_json::Value,
    tensors: Vec<Entry>,
}

/// Named f64 tensors plus a free-form JSON configuration echo.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: serde_json::Value,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    /// Snapshot of every parameter and running statistic of `net`. The network config is
    /// stored under `config.network`; `extra` keys are merged alongside it.
    pub fn from_net(net: &CdfNet, extra: serde_json::Map<String, serde_json::Value>) -> Result<Self> {
        let mut config = extra;
        config.insert("network".into(), serde_json::to_value(net.config())?);
        let tensors = net
            .named_tensors()
            .into_iter()
            .map(|(name, shape, data)| NamedTensor { name, shape, data })
            .collect();
        Ok(Self {
            config: serde_json::Value::Object(config),
            tensors,
        })
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        let v = self
            .config
            .get("network")
            .ok_or_else(|| Error::Corrupt("checkpoint has no network config".into()))?;
        Ok(serde_json::from_value(v.clone())?)
    }

    /// Rebuilds the network and overwrites every tensor with the stored values.
    pub fn to_net(&self) -> Result<CdfNet> {
        let mut net = CdfNet::new(self.net_config()?)?;
        self.load_into(&mut net)?;
        Ok(net)
    }

    pub fn load_into(&self, net: &mut CdfNet) -> Result<()> {
        let mut missing = Vec::new();
        net.visit_params_mut("", &mut |name, p| match self.get(name) {
            Some(t) if t.shape == p.shape => p.value.copy_from_slice(&t.data),
            _ => missing.push(name.to_string()),
        });
        if !missing.is_empty() {
            return Err(Error::Corrupt(format!("checkpoint lacks or misshapes {}", missing.join(", "))));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|t| {
                let e = Entry {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    offset,
                    len: t.data.len(),
                };
                offset += 8 * t.data.len();
                e
            })
            .collect();
        let header = serde_json::to_vec(&Header {
            config: self.config.clone(),
            tensors: entries,
        })?;
        let mut out = Vec::with_capacity(20 + header.len() + offset);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for t in &self.tensors {
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 {
            return Err(Error::Corrupt("checkpoint shorter than its fixed header".into()));
        }
        if &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Corrupt("bad checkpoint magic".into()));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                expected: CHECKPOINT_VERSION,
                found: version,
            });
        }
        let header_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let header_end = 20usize
            .checked_add(header_len)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| Error::Corrupt("checkpoint header truncated".into()))?;
        let header: Header = serde_json::from_slice(&bytes[20..header_end])?;
        let payload = &bytes[header_end..];
        let mut expected_bytes = 0;
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for e in header.tensors {
            if e.shape.iter().product::<usize>() != e.len {
                return Err(Error::Corrupt(format!("tensor {} shape disagrees with its length", e.name)));
            }
            let end = e.offset + 8 * e.len;
            if end > payload.len() {
                return Err(Error::Corrupt(format!("tensor {} extends past the payload", e.name)));
            }
            let data = payload[e.offset..end]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            expected_bytes += 8 * e.len;
            tensors.push(NamedTensor {
                name: e.name,
                shape: e.shape,
                data,
            });
        }
        if expected_bytes != payload.len() {
            return Err(Error::LengthMismatch {
                expected: expected_bytes / 8,
                found: payload.len() / 8,
            });
        }
        Ok(Self {
            config: header.config,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
