//! Reward-relabeled pair files: the hand-off from reward modeling to
//! alignment. Orientation comes from the learned reward model; the original
//! label-implied orientation is retained as provenance.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardWeights;
use crate::toyworld::ToyConfig;

/// Which side of the original record a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

/// One chosen/rejected pair after reward relabeling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabeledPair {
    pub cond: usize,
    pub chosen: Vec<f64>,
    pub rejected: Vec<f64>,
    /// Scalarized normalized reward of each branch, `(chosen, rejected)`.
    pub scores: Option<(f64, f64)>,
    /// Which original side became chosen.
    pub chosen_side: Side,
    /// Orientation implied by the original annotation labels (majority of
    /// decisive dimensions), if any.
    pub label_orientation: Option<Side>,
    /// True when the reward model reversed the label-implied orientation.
    pub flipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelHeader {
    pub schema_version: u32,
    pub kind: String,
    pub toy: ToyConfig,
    pub weights: RewardWeights,
    /// Checksum of the reward checkpoint that produced the labels.
    pub reward_checksum: String,
    pub n_pairs: usize,
    pub dropped_equal_scores: usize,
}

#[derive(Debug, Clone)]
pub struct RelabeledSet {
    pub header: RelabelHeader,
    pub pairs: Vec<RelabeledPair>,
}

pub fn save_relabeled(path: impl AsRef<Path>, set: &RelabeledSet) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path.display().to_string(), e);
    serde_json::to_writer(&mut out, &set.header)?;
    out.write_all(b"\n").map_err(io)?;
    for p in &set.pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn load_relabeled(path: impl AsRef<Path>) -> Result<RelabeledSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let header: RelabelHeader = serde_json::from_str(&header_line)?;
    if header.kind != "relabeled-pairs" {
        return Err(Error::Format(format!(
            "{}: not a relabeled-pairs file (kind = {})",
            path.display(),
            header.kind
        )));
    }
    let mut pairs = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(serde_json::from_str(&line)?);
    }
    Ok(RelabeledSet { header, pairs })
}
