//! Network files: one line of JSON header, a newline, then every parameter
//! as a little-endian `f64`, layer by layer, weights before biases.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::network::{Head, Network};
use crate::error::{Error, Result};

pub const FORMAT: &str = "rmdl-network";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub head: Head,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub parameters: usize,
}

impl Network {
    pub fn header(&self) -> NetworkHeader {
        NetworkHeader {
            format: FORMAT.to_string(),
            version: VERSION,
            seed: self.seed(),
            head: self.head(),
            input_shape: self.input_shape().to_vec(),
            layers: self.specs().cloned().collect(),
            parameters: self.param_count(),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer(&mut w, &self.header())?;
        w.write_all(b"\n")?;
        for t in self.params() {
            for v in t.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()
    }

    pub fn read_from<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)
            .map_err(|e| Error::Invalid(format!("network header: {e}")))?;
        let header: NetworkHeader = serde_json::from_str(line.trim_end())?;
        if header.format != FORMAT || header.version != VERSION {
            return Err(Error::Invalid(format!(
                "unsupported network format {} v{}",
                header.format, header.version
            )));
        }
        let mut net = Network::with_zero_params(header.input_shape, header.layers, header.seed)?;
        if net.head() != header.head || net.param_count() != header.parameters {
            return Err(Error::Invalid(
                "network header is inconsistent with its layers".into(),
            ));
        }
        let mut buf = [0u8; 8];
        for t in net.params_mut() {
            for v in t.values_mut() {
                r.read_exact(&mut buf)
                    .map_err(|_| Error::Invalid("network parameter blob is truncated".into()))?;
                *v = f64::from_le_bytes(buf);
            }
        }
        if r.read(&mut buf)
            .map_err(|e| Error::Invalid(e.to_string()))?
            != 0
        {
            return Err(Error::Invalid(
                "trailing bytes after network parameters".into(),
            ));
        }
        Ok(net)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(file))
    }
}
