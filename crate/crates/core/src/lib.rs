//! Conformal novelty detection with boundary false discovery rate control.
//!
//! Conformal p-values ([`pvalues`]) feed a family of top-k procedures
//! ([`procedures`], [`subsampling`]) whose rejection counts are chosen by
//! support-line arguments in exact rational arithmetic. [`lfdr`] exposes the
//! local-fdr view of SLC and [`montecarlo`] estimates bFDR and FDR on
//! synthetic data.

pub mod error;
pub mod level;
pub mod lfdr;
pub mod method;
pub mod montecarlo;
pub mod procedures;
pub mod pvalues;
pub mod subsampling;

pub use error::{Error, Result};
pub use level::{Level, Rational};
pub use lfdr::{LfdrCurve, LfdrKind};
pub use method::{Method, ProcedureSpec};
pub use montecarlo::{GeneratorSpec, SimulationConfig, SimulationSummary};
pub use procedures::{RejectionResult, StoreyConfig};
pub use pvalues::{conformal_p_values, Labels, PValueVector, ScoreSample, TiePolicy};
pub use subsampling::{BaseProcedure, SubsampleSpec};
