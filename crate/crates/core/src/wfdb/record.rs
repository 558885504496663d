//! Record assembly: header + signal data + annotations.

use std::collections::BTreeSet;
use std::path::Path;

use super::{
    annotation::{read_annotations, Annotation},
    header::{parse_header, RecordHeader},
    signal::decode_212,
    WfdbError,
};

/// A decoded multi-channel ECG record.
///
/// Channels hold raw signed ADC units; [`adc_to_physical`] converts to
/// millivolts when physical units are needed. Immutable after construction
/// and safe to share across threads.
#[derive(Debug, Clone)]
pub struct EcgRecord {
    pub header: RecordHeader,
    /// One sample vector per signal, each of equal length.
    pub channels: Vec<Vec<i32>>,
    /// Annotations filtered to beat type codes, sorted by sample index.
    pub beat_annotations: Vec<Annotation>,
}

impl EcgRecord {
    /// Samples per channel actually loaded (may be smaller than
    /// `header.num_samples` when a limit was applied).
    pub fn samples_loaded(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }
}

/// Assembles an [`EcgRecord`] from raw file contents.
///
/// `limit`, when given, truncates every channel to the first `limit` samples
/// and drops beat annotations at or beyond it. Annotations are filtered to
/// type codes in `beat_codes`.
pub fn load_record(
    header_bytes: &[u8],
    signal_bytes: &[u8],
    annotation_bytes: Option<&[u8]>,
    beat_codes: &BTreeSet<u8>,
    limit: Option<usize>,
) -> Result<EcgRecord, WfdbError> {
    let header = parse_header(header_bytes)?;

    let take = match limit {
        Some(l) if l > header.num_samples => {
            return Err(WfdbError::LimitOutOfRange {
                limit: l,
                available: header.num_samples,
            })
        }
        Some(l) => l,
        None => header.num_samples,
    };

    let channels = decode_212(signal_bytes, header.num_signals, take)?;

    let beat_annotations = match annotation_bytes {
        Some(bytes) => {
            let anns = read_annotations(bytes)?;
            if let Some(last) = anns.last() {
                if last.sample_index >= header.num_samples {
                    return Err(WfdbError::AnnotationOutOfRange {
                        index: last.sample_index,
                        num_samples: header.num_samples,
                    });
                }
            }
            anns.into_iter()
                .filter(|a| beat_codes.contains(&a.type_code) && a.sample_index < take)
                .collect()
        }
        None => Vec::new(),
    };

    Ok(EcgRecord {
        header,
        channels,
        beat_annotations,
    })
}

/// Loads `<name>.hea`, `<name>.dat` and, when present, `<name>.atr` from a
/// directory. All signals must share one `.dat` file, as MIT-BIH records do.
pub fn load_record_from_paths(
    data_dir: &Path,
    name: &str,
    beat_codes: &BTreeSet<u8>,
    limit: Option<usize>,
) -> Result<EcgRecord, WfdbError> {
    let header_bytes = std::fs::read(data_dir.join(format!("{name}.hea")))?;
    let header = parse_header(&header_bytes)?;
    let dat_name = &header.signals[0].file_name;
    for spec in &header.signals[1..] {
        if spec.file_name != *dat_name {
            return Err(WfdbError::MixedSignalFiles {
                expected: dat_name.clone(),
                found: spec.file_name.clone(),
            });
        }
    }
    let signal_bytes = std::fs::read(data_dir.join(dat_name))?;
    let atr_path = data_dir.join(format!("{name}.atr"));
    let annotation_bytes = if atr_path.exists() {
        Some(std::fs::read(atr_path)?)
    } else {
        None
    };
    load_record(
        &header_bytes,
        &signal_bytes,
        annotation_bytes.as_deref(),
        beat_codes,
        limit,
    )
}

/// Converts ADC units to physical units: `(sample - baseline) / gain`.
pub fn adc_to_physical(samples: &[i32], gain: f64, baseline: i32) -> Result<Vec<f64>, WfdbError> {
    if gain == 0.0 {
        return Err(WfdbError::ZeroGain);
    }
    Ok(samples
        .iter()
        .map(|&s| f64::from(s - baseline) / gain)
        .collect())
}
