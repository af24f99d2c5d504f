//! Longest-path depths in scaled-attachment random recursive DAGs, minima of
//! branching random walks, and the limit constants that connect them.
//!
//! Module map:
//!
//! * [`attachment`]: attachment laws X and step laws Y = -log X.
//! * [`constants`]: rate function and the constants `gamma`, `lambda_k`, `beta`.
//! * [`sarrd`]: DAG generation, depth profiles and the ideal-tree descent.
//! * [`brw`]: branching random walk minima, the exact lattice law and tail rates.
//! * [`oracle`]: exact depth statistics by enumeration for small uniform DAGs.
//! * [`harness`]: reproducible experiments, seed derivation and CSV tables.

pub mod attachment;
pub mod brw;
pub mod constants;
pub mod error;
pub mod exec;
pub mod harness;
pub mod oracle;
pub mod sarrd;
pub mod stats;
pub mod stream;

pub use attachment::{AttachmentSpec, StepSpec};
pub use brw::{BrwMinResult, TailEstimate, TailSide};
pub use constants::LimitConstants;
pub use error::{Error, Result};
pub use exec::Execution;
pub use harness::{derive_seed, ExperimentConfig, ExperimentKind};
pub use sarrd::{DepthProfile, DepthStats};
pub use stats::StatSummary;
