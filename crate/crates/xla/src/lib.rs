//! Exact linear algebra over word-size prime fields and the integers:
//! dense and sparse containers, a recursive matrix-multiplication cascade
//! with delayed modular reduction, CRT-based integer and polynomial matrix
//! products, and a benchmarking/tuning harness.

pub mod bench;
pub mod blackbox;
pub mod cli;
pub mod config;
pub mod dense;
pub mod error;
pub mod field;
pub mod intmul;
pub mod matmul;
pub mod mm;
pub mod poly;
pub mod sparse;
pub mod spmv;
pub mod tune;

pub use error::{Error, Result};
