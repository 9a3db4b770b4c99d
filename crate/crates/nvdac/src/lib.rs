//! Digital twin of NV-center NMR in a diamond anvil cell.
//!
//! The crate simulates the coupled NV-electron/¹⁴N spin system under
//! pressure — optical hyperpolarization near the excited-state level
//! anti-crossing, microwave/radio-frequency pulse sequences, spin-dependent
//! fluorescence readout — and implements the analysis pipeline that turns
//! spectra into quadrupole and hyperfine couplings, linewidths, coherence
//! times, and their pressure trends.
//!
//! Start from the runnable examples (`cargo run --example <name>`), or the
//! `nvdac` binary for the file-based workflow.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod linalg;
pub mod pressure;
pub mod sequences;
pub mod spinops;
pub mod svg;
