//! Evaluation harness for screening-mammography classifiers.
//!
//! Models are black boxes that read a directory of 16-bit PNG images plus a
//! JSON metadata file and write one CSV of malignancy probabilities. The
//! harness validates the inputs, runs the model (in a container or as a
//! local process), joins its output back to the ground truth, and reports
//! AUC ROC and AUC PR with percentile bootstrap confidence intervals.

pub mod dataset;
pub mod image;
pub mod metrics;
pub mod predictions;
pub mod registry;
pub mod report;
pub mod runner;
pub mod error;
pub mod fixture;
pub mod pipeline;
