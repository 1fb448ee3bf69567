//! Evaluation harness: paired-seed win rates, dataset relabeling, ablation
//! grids, and report emission.

mod ablate;
mod relabel;
mod report;
mod svg;
mod winrate;

pub use ablate::{
    run_ablation, AblationAxis, AblationContext, AblationRunConfig, AblationSpec,
};
pub use relabel::{relabel_pairs, RelabelOutcome};
pub use report::{emit_report, Report, ReportRow, ReportSummary};
pub use svg::profile_plot;
pub use winrate::{
    generate_samples, paired_prompts, win_rate, win_rate_models, SampleKey, SampleSet,
    WinRateResult,
};
