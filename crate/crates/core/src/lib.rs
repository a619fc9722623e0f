//! Stylometric evaluation of AI-to-human style transfer.
//!
//! The crate builds chunk-aligned parallel corpora of AI-generated and
//! human-written text, measures eleven chunk-level stylistic markers, and
//! scores a model's rewrites with reference-overlap metrics and the
//! directional marker shift `(output - ai) / (human - ai)`, clipped to
//! `[-1, 2]`.
//!
//! ```
//! use stylshift_core::markers::compute_markers;
//! use stylshift_core::shift::{directional_shift, ShiftParams};
//!
//! let v = compute_markers("I don't know. It's fine!").unwrap();
//! assert_eq!(v.contractions, 1);
//!
//! let s = directional_shift(4.43, 3.38, 2.66, ShiftParams::default());
//! assert_eq!(s.shift, Some(-1.0));
//! ```

pub mod corpus;
pub mod error;
pub mod external;
pub mod markers;
pub mod overlap;
pub mod pipeline;
pub mod render;
pub mod segment;
pub mod shift;

pub use corpus::{CorpusRecord, EvaluationRecord, RecordKey, Split, SplitAssignment, SplitRatios};
pub use error::{Error, Result};
pub use external::{ExternalEntry, ExternalMetrics};
pub use markers::{Marker, MarkerProfile, MarkerVector};
pub use overlap::{ChrfMode, OverlapScores};
pub use pipeline::{Analysis, EvaluationReport, ModelOutputs};
pub use render::{Format, TableKind};
pub use shift::{ShiftMode, ShiftParams, ShiftReport, ShiftScore};
