//! Receptive-field analysis and refactoring advice for convolutional
//! architectures.

pub mod analysis;
pub mod dsl;
pub mod geometry;
pub mod graph;
pub mod onnx;
pub mod refine;
pub mod report;
pub mod rf;
