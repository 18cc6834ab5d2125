//! Quantile-stratified sampling from univariate distributions.
//!
//! A QS sample of size `m` splits `(0, 1)` into `m` equiprobable quantile
//! blocks and draws exactly one uniform from each, visiting the blocks in a
//! random order; the sample values are the quantile function applied to
//! those uniforms. LQS sampling pools several independent QS subsamples
//! ("layers") of different sizes and shuffles them together, spanning the
//! range between IID sampling (all layers of size 1) and QS sampling (one
//! layer).

pub mod distribution;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod quadrature;
pub mod sampling;
pub mod special;
pub mod stats;
pub mod table;
pub mod theory;

pub use distribution::{BlockPartition, CustomLaw, DiscreteLaw, DistSpec, Distribution};
pub use error::{Error, Result};
pub use estimators::{
    importance_estimate, importance_weight, mean_estimate, replicate_importance,
    taylor_variance_approx, EstimateSummary, ImportanceProblem,
};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentKind, Format, Report};
pub use sampling::{
    sample, sample_iid, sample_lqs, sample_qs, srswor_perm, LayerSpec, Method, RngStream,
    SampleBatch,
};
pub use theory::{Scheme, Target};
