//! Compressed-domain analysis of multi-channel ECG records.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`wfdb`] — parse MIT-BIH style records (`.hea` text headers, format-212
//!    packed signal data, binary beat annotations) into calibrated
//!    multi-channel [`wfdb::EcgRecord`]s.
//! 2. [`sensing`] — compress each channel with a deterministic binary block
//!    diagonal (DBBD) operator, realized as a block-sum filter followed by
//!    decimation. No reconstruction is ever performed; everything downstream
//!    works on the measurements directly.
//! 3. [`similarity`] — segment original and compressed measurements into
//!    equal-length templates and quantify structural similarity with Pearson
//!    correlation statistics.
//! 4. [`detector`] — a Pan-Tompkins R-peak detector parameterized by sampling
//!    rate, so the same algorithm runs on original (360 Hz) and compressed
//!    (360·M/N Hz) measurements.
//! 5. [`eval`] — match detections against reference beats and compute
//!    sensitivity, positive predictivity, F-measure and detection error rate.
//! 6. [`pipeline`] — orchestrate experiments over record sets and compression
//!    ratios, emitting deterministic CSV/JSON reports and plot data.

pub mod detector;
pub mod eval;
pub mod pipeline;
pub mod sensing;
pub mod similarity;
pub mod wfdb;
