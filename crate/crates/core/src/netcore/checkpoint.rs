//! Binary checkpoint formats.
//!
//! Version 1 holds a single net:
//!
//! ```text
//! "FALN" | u16 version=1 | u16 n_widths | u32 widths... | u8 activation
//!        | u64 seed | f64 params... (little-endian)
//! ```
//!
//! Version 2 is a container of named nets with a JSON metadata block (role
//! tag, training lineage), used for reward models and aligned policies:
//!
//! ```text
//! "FALN" | u16 version=2 | u32 meta_len | meta JSON | u16 net_count
//!        | per net: u16 name_len | name | <v1 body without magic/version>
//! ```
//!
//! Round-trips are bit-exact.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::net::{Activation, Net, NetSpec};

const MAGIC: &[u8; 4] = b"FALN";
pub const FORMAT_VERSION_NET: u16 = 1;
pub const FORMAT_VERSION_MODEL: u16 = 2;

/// Provenance of a fine-tuned checkpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub method: String,
    pub base_checksum: String,
    pub cfg_hash: String,
}

/// Metadata block for model containers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    /// Role tag, e.g. "clean" or "noisy" for reward checkpoints.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lineage: Option<Lineage>,
    /// Free-form scalar attachments (score stats, config echoes).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, String>,
}

/// A named collection of nets plus metadata.
#[derive(Debug, Clone)]
pub struct ModelCheckpoint {
    pub meta: CheckpointMeta,
    pub nets: Vec<(String, Net)>,
}

impl ModelCheckpoint {
    pub fn net(&self, name: &str) -> Result<&Net> {
        self.nets
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, net)| net)
            .ok_or_else(|| Error::Format(format!("checkpoint has no net named '{name}'")))
    }
}

fn write_net_body(out: &mut impl Write, net: &Net) -> std::io::Result<()> {
    let spec = net.spec();
    out.write_all(&(spec.layer_widths.len() as u16).to_le_bytes())?;
    for &w in &spec.layer_widths {
        out.write_all(&(w as u32).to_le_bytes())?;
    }
    out.write_all(&[spec.activation.id()])?;
    out.write_all(&spec.seed.to_le_bytes())?;
    for p in net.params() {
        out.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_buf(input: &mut impl Read, n: usize) -> std::io::Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u16(input: &mut impl Read) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    input.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(input: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(input: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_net_body(input: &mut impl Read) -> Result<Net> {
    let wrap = |e: std::io::Error| Error::Format(format!("truncated checkpoint: {e}"));
    let n_widths = read_u16(input).map_err(wrap)? as usize;
    if n_widths < 2 {
        return Err(Error::Format(format!("invalid width count {n_widths}")));
    }
    let mut widths = Vec::with_capacity(n_widths);
    for _ in 0..n_widths {
        widths.push(read_u32(input).map_err(wrap)? as usize);
    }
    let mut act = [0u8; 1];
    input.read_exact(&mut act).map_err(wrap)?;
    let activation = Activation::from_id(act[0])?;
    let seed = read_u64(input).map_err(wrap)?;
    let spec = NetSpec::new(widths, activation, seed);
    let count = spec.param_count();
    let mut params = Vec::with_capacity(count);
    let mut b = [0u8; 8];
    for _ in 0..count {
        input.read_exact(&mut b).map_err(wrap)?;
        params.push(f64::from_le_bytes(b));
    }
    Net::from_params(spec, params)
}

/// Serializes a single net in format v1.
pub fn write_net(out: &mut impl Write, net: &Net) -> std::io::Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION_NET.to_le_bytes())?;
    write_net_body(out, net)
}

/// Reads a single-net (v1) checkpoint.
pub fn read_net(input: &mut impl Read) -> Result<Net> {
    let version = read_header(input)?;
    if version != FORMAT_VERSION_NET {
        return Err(Error::Format(format!(
            "expected single-net checkpoint (v{FORMAT_VERSION_NET}), found v{version}"
        )));
    }
    read_net_body(input)
}

fn read_header(input: &mut impl Read) -> Result<u16> {
    let wrap = |e: std::io::Error| Error::Format(format!("truncated checkpoint: {e}"));
    let magic = read_exact_buf(input, 4).map_err(wrap)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic, not a FALN checkpoint".into()));
    }
    read_u16(input).map_err(wrap)
}

/// Serializes a model container in format v2.
pub fn write_model(out: &mut impl Write, model: &ModelCheckpoint) -> Result<()> {
    let meta = serde_json::to_vec(&model.meta)?;
    let io = |e: std::io::Error| Error::Format(format!("write failed: {e}"));
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&FORMAT_VERSION_MODEL.to_le_bytes()).map_err(io)?;
    out.write_all(&(meta.len() as u32).to_le_bytes()).map_err(io)?;
    out.write_all(&meta).map_err(io)?;
    out.write_all(&(model.nets.len() as u16).to_le_bytes())
        .map_err(io)?;
    for (name, net) in &model.nets {
        let bytes = name.as_bytes();
        out.write_all(&(bytes.len() as u16).to_le_bytes()).map_err(io)?;
        out.write_all(bytes).map_err(io)?;
        write_net_body(out, net).map_err(io)?;
    }
    Ok(())
}

/// Reads a model container (v2) checkpoint.
pub fn read_model(input: &mut impl Read) -> Result<ModelCheckpoint> {
    let version = read_header(input)?;
    if version != FORMAT_VERSION_MODEL {
        return Err(Error::Format(format!(
            "expected model checkpoint (v{FORMAT_VERSION_MODEL}), found v{version}"
        )));
    }
    let wrap = |e: std::io::Error| Error::Format(format!("truncated checkpoint: {e}"));
    let meta_len = read_u32(input).map_err(wrap)? as usize;
    let meta_bytes = read_exact_buf(input, meta_len).map_err(wrap)?;
    let meta: CheckpointMeta = serde_json::from_slice(&meta_bytes)?;
    let net_count = read_u16(input).map_err(wrap)? as usize;
    let mut nets = Vec::with_capacity(net_count);
    for _ in 0..net_count {
        let name_len = read_u16(input).map_err(wrap)? as usize;
        let name_bytes = read_exact_buf(input, name_len).map_err(wrap)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| Error::Format("net name is not UTF-8".into()))?;
        nets.push((name, read_net_body(input)?));
    }
    Ok(ModelCheckpoint { meta, nets })
}

pub fn save_net(path: impl AsRef<Path>, net: &Net) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_net(&mut out, net).map_err(|e| Error::io(path.display().to_string(), e))?;
    out.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_net(path: impl AsRef<Path>) -> Result<Net> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_net(&mut BufReader::new(file))
}

pub fn save_model(path: impl AsRef<Path>, model: &ModelCheckpoint) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    write_model(&mut out, model)?;
    out.flush()
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelCheckpoint> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    read_model(&mut BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::net::{Activation, Net, NetSpec};

    fn sample_net(seed: u64) -> Net {
        Net::init(NetSpec::new(vec![3, 5, 2], Activation::Silu, seed)).unwrap()
    }

    #[test]
    fn single_net_round_trip_is_bit_exact() {
        let net = sample_net(9);
        let mut buf = Vec::new();
        write_net(&mut buf, &net).unwrap();
        let mut again = Vec::new();
        write_net(&mut again, &read_net(&mut buf.as_slice()).unwrap()).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn model_round_trip_preserves_meta_and_params() {
        let model = ModelCheckpoint {
            meta: CheckpointMeta {
                role: Some("clean".into()),
                lineage: Some(Lineage {
                    method: "dpo".into(),
                    base_checksum: "abc".into(),
                    cfg_hash: "def".into(),
                }),
                extra: [("theta".to_string(), "5".to_string())].into(),
            },
            nets: vec![
                ("trunk".into(), sample_net(1)),
                ("head".into(), sample_net(2)),
            ],
        };
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        let back = read_model(&mut buf.as_slice()).unwrap();
        assert_eq!(back.meta, model.meta);
        assert_eq!(back.nets.len(), 2);
        assert_eq!(back.nets[0].0, "trunk");
        assert_eq!(back.nets[0].1.params(), model.nets[0].1.params());
        let mut again = Vec::new();
        write_model(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let err = read_net(&mut &b"NOPE\x01\x00"[..]).unwrap_err();
        assert!(err.to_string().contains("magic"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let net = sample_net(4);
        let mut buf = Vec::new();
        write_net(&mut buf, &net).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_net(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let net = sample_net(5);
        let mut buf = Vec::new();
        write_net(&mut buf, &net).unwrap();
        assert!(read_model(&mut buf.as_slice()).is_err());
    }
}
