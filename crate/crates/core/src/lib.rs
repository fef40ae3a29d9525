//! Indoor accessibility and safety auditing over parametric scenes.
//!
//! The pipeline: load a [`scene::ParametricScene`], optionally fuse a stream
//! of 2D detections into 3D placements ([`fusion`]), evaluate a rubric set
//! against the scene ([`rubric`]), and score the resulting issues against a
//! ground-truth audit ([`evaluation`]). [`simulator`] produces seeded scenes
//! and detection streams with known ground truth.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod geometry;
pub mod scene;
pub mod units;

pub use geometry::{Point2, Vec3};
pub mod rubric;
pub mod fusion;
pub mod evaluation;
pub mod simulator;
pub mod report;
