//! Synthetic trajectory domain with analytic ground-truth rewards and a
//! synthetic annotator producing pairwise preferences with ties plus
//! pointwise Likert scores.

mod annotate;
mod dataset;
mod traj;

pub use annotate::{
    annotate_pair, likert_of, quintile_breakpoints, AnnotatorModel, PairAnnotation, PrefLabel,
};
pub use dataset::{
    build_corpus, build_pref_dataset, corpus_rewards, load_corpus, load_pref_dataset, save_corpus,
    save_pref_dataset, Corpus, CorpusHeader, CorpusRecord, DatasetHeader, GtBlock, PrefDataset,
    PreferenceRecord, DATASET_SCHEMA_VERSION,
};
pub use traj::{
    draw_knobs, gt_rewards, sample_trajectory, wrap_angle, Dim, GtReward, QualityKnobs, ToyConfig,
    Trajectory, DIMS,
};
