//! Standard-library companion to `rtsm-core`: file formats, synthetic
//! instance generators, the evaluation harness, and the pieces shared by
//! the `rtsm` binary.

pub use rtsm_core as core;

pub mod deadline;
pub mod external;
pub mod harness;
pub mod ingest;
pub mod solfile;
pub mod stats;
pub mod synth;
