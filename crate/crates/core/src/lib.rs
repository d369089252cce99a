//! Ground-truth confidence maps for endoscopic dissection safety margins.
//!
//! An annotation pairs a dissection trajectory (an ordered polyline) with a
//! closed safety-margin ring. [`confmap::generate`] turns it into a dense map
//! that is 1 on the trajectory, 0 on and outside the margin, and decays in
//! between along the direction pointing away from the trajectory. The
//! remaining modules provide the evaluation stack around it: map and
//! trajectory metrics, seeded image corruptions for robustness runs, and
//! non-learned baseline predictors.

pub mod annotation;
pub mod baseline;
pub mod cli;
pub mod confmap;
pub mod corrupt;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod synth;

pub use annotation::{AnnotationRecord, Point2, SafetyMargin, Trajectory};
pub use confmap::{ConfidenceMap, GenerationParams};
pub use error::{Error, Result};
