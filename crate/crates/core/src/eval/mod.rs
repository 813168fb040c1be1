//! Metrics, alarm accounting, well-grouped cross-validation and tuning sweeps.

pub mod accounting;
pub mod crossval;
pub mod metrics;
pub mod tuning;

pub use accounting::{alarm_accounting, AlarmTally};
pub use metrics::{
    macro_mean, multiclass_auc, pair_counts, per_type_auc, rand_index, rand_index_labels, roc_auc, roc_curve,
    PairCounts, RocCurve, SimilarityMatrix,
};
pub use crossval::{crossval, crossval_variants, EvalReport, Featurizer, FoldResult, Variant};
pub use tuning::{
    reference_task, sweep_sensitivity, sweep_step, tune_stage1, tune_stage2, GridPoint, ReferenceTask, SensitivityCurves,
    Stage1Table, Stage2Table, StepTable,
};
