//! Preference dataset and pretraining corpus: construction and JSONL I/O.
//!
//! Both files are line-delimited JSON with a header line carrying the schema
//! version and every generation parameter, so a file is self-describing and
//! byte-reproducible from its seed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::rng_for;

use super::annotate::{annotate_pair, AnnotatorModel, PrefLabel};
use super::traj::{draw_knobs, gt_rewards, sample_trajectory, Dim, GtReward, ToyConfig, Trajectory};

pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// One annotated pair. Ground truth is carried only when requested at
/// generation time; training code never reads it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreferenceRecord {
    pub cond: usize,
    pub a_frames: Vec<f64>,
    pub b_frames: Vec<f64>,
    pub labels: BTreeMap<String, PrefLabel>,
    /// Per dimension, `[likert_a, likert_b]`.
    pub likert: BTreeMap<String, [u8; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gt: Option<GtBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtBlock {
    pub a: [f64; 3],
    pub b: [f64; 3],
}

impl PreferenceRecord {
    pub fn label(&self, dim: Dim) -> PrefLabel {
        self.labels[dim.name()]
    }

    pub fn trajectory_a(&self) -> Trajectory {
        Trajectory {
            frames: self.a_frames.clone(),
            condition_class: self.cond,
        }
    }

    pub fn trajectory_b(&self) -> Trajectory {
        Trajectory {
            frames: self.b_frames.clone(),
            condition_class: self.cond,
        }
    }
}

/// Header line of a preference dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub kind: String,
    pub toy: ToyConfig,
    pub annotator: AnnotatorModel,
    pub n_pairs: usize,
    pub seed: u64,
    pub emit_gt: bool,
}

/// Full in-memory dataset.
#[derive(Debug, Clone)]
pub struct PrefDataset {
    pub header: DatasetHeader,
    pub records: Vec<PreferenceRecord>,
}

/// Header line of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub schema_version: u32,
    pub kind: String,
    pub toy: ToyConfig,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub cond: usize,
    pub frames: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub header: CorpusHeader,
    pub records: Vec<CorpusRecord>,
}

impl Corpus {
    pub fn rows(&self) -> Vec<(Vec<f64>, usize)> {
        self.records
            .iter()
            .map(|r| (r.frames.clone(), r.cond))
            .collect()
    }
}

/// Draws the pretraining corpus: mixed-quality trajectories over all classes.
pub fn build_corpus(cfg: &ToyConfig, n_samples: usize, seed: u64) -> Result<Corpus> {
    cfg.validate()?;
    if n_samples == 0 {
        return Err(Error::Input("corpus needs at least one sample".into()));
    }
    let mut records = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut rng = rng_for(seed, "corpus", i as u64);
        let class = {
            use rand::Rng;
            rng.gen_range(0..cfg.n_classes)
        };
        let knobs = draw_knobs(cfg, &mut rng);
        let traj = sample_trajectory(cfg, class, &knobs, &mut rng)?;
        records.push(CorpusRecord {
            cond: class,
            frames: traj.frames,
        });
    }
    Ok(Corpus {
        header: CorpusHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            kind: "corpus".into(),
            toy: cfg.clone(),
            n_samples,
            seed,
        },
        records,
    })
}

/// Ground-truth rewards of every corpus sample (the breakpoint source).
pub fn corpus_rewards(cfg: &ToyConfig, corpus: &Corpus) -> Vec<GtReward> {
    corpus
        .records
        .iter()
        .map(|r| {
            gt_rewards(
                cfg,
                &Trajectory {
                    frames: r.frames.clone(),
                    condition_class: r.cond,
                },
            )
        })
        .collect()
}

/// Builds the annotated pairwise dataset. Pairs share a condition; the two
/// sides draw independent tiered knobs. Reproducible per seed: record `i`
/// uses its own derived RNG stream.
pub fn build_pref_dataset(
    cfg: &ToyConfig,
    annotator: &AnnotatorModel,
    n_pairs: usize,
    seed: u64,
    emit_gt: bool,
) -> Result<PrefDataset> {
    cfg.validate()?;
    annotator.validate()?;
    if n_pairs == 0 {
        return Err(Error::Input("n_pairs must be >= 1".into()));
    }
    let mut records = Vec::with_capacity(n_pairs);
    for i in 0..n_pairs {
        let mut rng = rng_for(seed, "pair", i as u64);
        let class = {
            use rand::Rng;
            rng.gen_range(0..cfg.n_classes)
        };
        let knobs_a = draw_knobs(cfg, &mut rng);
        let knobs_b = draw_knobs(cfg, &mut rng);
        let a = sample_trajectory(cfg, class, &knobs_a, &mut rng)?;
        let b = sample_trajectory(cfg, class, &knobs_b, &mut rng)?;
        let gt_a = gt_rewards(cfg, &a);
        let gt_b = gt_rewards(cfg, &b);
        let ann = annotate_pair(&gt_a, &gt_b, annotator, &mut rng)?;
        let mut labels = BTreeMap::new();
        let mut likert = BTreeMap::new();
        for dim in super::traj::DIMS {
            labels.insert(dim.name().to_string(), ann.labels[dim.index()]);
            likert.insert(dim.name().to_string(), ann.likert[dim.index()]);
        }
        records.push(PreferenceRecord {
            cond: class,
            a_frames: a.frames,
            b_frames: b.frames,
            labels,
            likert,
            gt: emit_gt.then_some(GtBlock {
                a: gt_a.as_array(),
                b: gt_b.as_array(),
            }),
        });
    }
    Ok(PrefDataset {
        header: DatasetHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            kind: "preference-pairs".into(),
            toy: cfg.clone(),
            annotator: annotator.clone(),
            n_pairs,
            seed,
            emit_gt,
        },
        records,
    })
}

fn write_jsonl<H: Serialize, R: Serialize>(
    path: &Path,
    header: &H,
    records: &[R],
) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = BufWriter::new(file);
    let io = |e: std::io::Error| Error::io(path.display().to_string(), e);
    serde_json::to_writer(&mut out, header)?;
    out.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

fn read_jsonl<H, R>(path: &Path) -> Result<(H, Vec<R>)>
where
    H: for<'de> Deserialize<'de>,
    R: for<'de> Deserialize<'de>,
{
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Format(format!("{}: empty file", path.display())))?
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let header = serde_json::from_str(&header_line)?;
    let mut records = Vec::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    Ok((header, records))
}

pub fn save_pref_dataset(path: impl AsRef<Path>, ds: &PrefDataset) -> Result<()> {
    write_jsonl(path.as_ref(), &ds.header, &ds.records)
}

pub fn load_pref_dataset(path: impl AsRef<Path>) -> Result<PrefDataset> {
    let (header, records): (DatasetHeader, Vec<PreferenceRecord>) = read_jsonl(path.as_ref())?;
    Ok(PrefDataset { header, records })
}

pub fn save_corpus(path: impl AsRef<Path>, corpus: &Corpus) -> Result<()> {
    write_jsonl(path.as_ref(), &corpus.header, &corpus.records)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let (header, records): (CorpusHeader, Vec<CorpusRecord>) = read_jsonl(path.as_ref())?;
    Ok(Corpus { header, records })
}

#[cfg(test)]
mod tests {
    use super::super::annotate::quintile_breakpoints;
    use super::*;

    fn annotator(cfg: &ToyConfig, seed: u64) -> AnnotatorModel {
        let corpus = build_corpus(cfg, 512, seed).unwrap();
        AnnotatorModel {
            tie_band: 0.05,
            flip_temperature: 0.04,
            likert_offset_std: 0.7,
            breakpoints: quintile_breakpoints(&corpus_rewards(cfg, &corpus)).unwrap(),
        }
    }

    #[test]
    fn zero_pairs_is_an_input_error() {
        let cfg = ToyConfig::default();
        let ann = annotator(&cfg, 0);
        assert!(build_pref_dataset(&cfg, &ann, 0, 1, false).is_err());
    }

    #[test]
    fn same_seed_reproduces_identical_bytes() {
        let cfg = ToyConfig::default();
        let ann = annotator(&cfg, 0);
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.jsonl");
        let p2 = dir.path().join("b.jsonl");
        save_pref_dataset(&p1, &build_pref_dataset(&cfg, &ann, 64, 7, true).unwrap()).unwrap();
        save_pref_dataset(&p2, &build_pref_dataset(&cfg, &ann, 64, 7, true).unwrap()).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn round_trip_preserves_records() {
        let cfg = ToyConfig::default();
        let ann = annotator(&cfg, 1);
        let ds = build_pref_dataset(&cfg, &ann, 16, 3, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        save_pref_dataset(&path, &ds).unwrap();
        let back = load_pref_dataset(&path).unwrap();
        assert_eq!(back.header, ds.header);
        assert_eq!(back.records, ds.records);
    }

    #[test]
    fn gt_block_is_absent_unless_requested() {
        let cfg = ToyConfig::default();
        let ann = annotator(&cfg, 2);
        let ds = build_pref_dataset(&cfg, &ann, 4, 5, false).unwrap();
        assert!(ds.records.iter().all(|r| r.gt.is_none()));
        let ds = build_pref_dataset(&cfg, &ann, 4, 5, true).unwrap();
        assert!(ds.records.iter().all(|r| r.gt.is_some()));
    }

    #[test]
    fn tie_fractions_fall_in_the_documented_band() {
        let cfg = ToyConfig::default();
        let ann = annotator(&cfg, 3);
        let ds = build_pref_dataset(&cfg, &ann, 4000, 11, false).unwrap();
        for dim in super::super::traj::DIMS {
            let ties = ds
                .records
                .iter()
                .filter(|r| r.label(dim) == PrefLabel::Tie)
                .count() as f64
                / ds.records.len() as f64;
            assert!(
                (0.05..=0.40).contains(&ties),
                "{} tie fraction {ties}",
                dim.name()
            );
        }
    }
}
