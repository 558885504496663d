//! MIT-BIH / WFDB record ingestion.
//!
//! Supports the subset of the WFDB ecosystem the MIT-BIH Arrhythmia Database
//! uses: text `.hea` headers, format-212 packed 12-bit signal data and the
//! MIT binary annotation format (`.atr`). Everything is parsed strictly;
//! malformed input is an error, never a silent default.

mod annotation;
mod header;
mod record;
mod signal;

pub use annotation::{default_beat_codes, encode_annotations, read_annotations, Annotation};
pub use header::{parse_header, RecordHeader, SignalSpec};
pub use record::{adc_to_physical, load_record, load_record_from_paths, EcgRecord};
pub use signal::{decode_212, encode_212};

use thiserror::Error;

/// Errors produced while parsing or assembling WFDB records.
#[derive(Debug, Error)]
pub enum WfdbError {
    #[error("header line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },

    #[error("unsupported storage format {format} (only format 212 is supported)")]
    UnsupportedFormat { format: i64 },

    #[error("212 signal data truncated: need {expected} bytes, found {available}")]
    TruncatedSignal { expected: usize, available: usize },

    #[error("sample {value} outside the 12-bit signed range [-2048, 2047]")]
    SampleOutOfRange { value: i32 },

    #[error("channels have unequal lengths and cannot be frame-interleaved")]
    RaggedChannels,

    #[error("annotation stream at byte {offset}: {reason}")]
    MalformedAnnotation { offset: usize, reason: String },

    #[error("sample limit {limit} exceeds record length {available}")]
    LimitOutOfRange { limit: usize, available: usize },

    #[error("beat annotation at sample {index} lies beyond record length {num_samples}")]
    AnnotationOutOfRange { index: usize, num_samples: usize },

    #[error("calibration requires a nonzero ADC gain")]
    ZeroGain,

    #[error("record names a signal file that is not '{expected}': {found}")]
    MixedSignalFiles { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
