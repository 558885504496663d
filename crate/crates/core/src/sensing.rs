//! Deterministic binary block diagonal (DBBD) sensing.
//!
//! The operator maps an N-sample signal onto M measurements, each measurement
//! the sum of d = N/M consecutive samples. Viewed as a matrix it is binary
//! block diagonal with d ones per row; viewed as a filter it is a moving sum
//! of order d evaluated at stride d. The streaming block-sum path is the
//! production implementation; the explicit matrix exists as an oracle and
//! for inspection.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensingError {
    #[error("compression ratio {cr} over {n} samples needs m = n(1-cr) and d = n/m to be positive integers")]
    IncompatibleRatio { n: usize, cr: f64 },

    #[error("signal length {found} does not match configured input length {expected}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("channels have differing lengths")]
    RaggedChannels,

    #[error("invalid sensing dimensions: n = {n}, m = {m}")]
    InvalidDimensions { n: usize, m: usize },
}

/// DBBD operator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingConfig {
    /// Input length N.
    pub n: usize,
    /// Measurement count M.
    pub m: usize,
    /// Decimation factor d = N/M, the number of samples summed per
    /// measurement.
    pub d: usize,
    /// Compression ratio 1 - M/N.
    pub cr: f64,
    /// Divide each block sum by d, keeping measurement amplitudes comparable
    /// to the input across compression ratios.
    pub normalize: bool,
}

impl SensingConfig {
    /// Builds a config from explicit dimensions; `n` must be a positive
    /// multiple of `m`.
    pub fn new(n: usize, m: usize, normalize: bool) -> Result<Self, SensingError> {
        if m == 0 || n < m || !n.is_multiple_of(m) {
            return Err(SensingError::InvalidDimensions { n, m });
        }
        Ok(Self {
            n,
            m,
            d: n / m,
            cr: 1.0 - m as f64 / n as f64,
            normalize,
        })
    }
}

/// Derives a [`SensingConfig`] from a compression ratio.
///
/// `cr` is a fraction in [0, 1); `n·(1-cr)` must come out to a positive
/// integer measurement count that divides `n`, otherwise the ratio is
/// rejected rather than rounded.
pub fn config_from_cr(n: usize, cr: f64, normalize: bool) -> Result<SensingConfig, SensingError> {
    if !(0.0..1.0).contains(&cr) || n == 0 {
        return Err(SensingError::IncompatibleRatio { n, cr });
    }
    let m_exact = n as f64 * (1.0 - cr);
    let m = m_exact.round();
    if m < 1.0 || (m_exact - m).abs() > 1e-9 * n as f64 {
        return Err(SensingError::IncompatibleRatio { n, cr });
    }
    let m = m as usize;
    if !n.is_multiple_of(m) {
        return Err(SensingError::IncompatibleRatio { n, cr });
    }
    SensingConfig::new(n, m, normalize)
}

/// One compressed channel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompressedSignal {
    /// The measurement vector y, length M.
    pub data: Vec<f64>,
    pub config: SensingConfig,
    /// Rate at which the measurements are analyzed: original rate × M/N.
    pub effective_rate: f64,
    /// Zero-based channel index within the source record.
    pub channel_id: usize,
}

/// Compressed measurements for all channels of a record, sharing one config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiChannelCompressed {
    pub channels: Vec<CompressedSignal>,
}

impl MultiChannelCompressed {
    pub fn t(&self) -> usize {
        self.channels.len()
    }
}

/// Materializes the DBBD matrix: row i has ones in columns [i·d, (i+1)·d).
///
/// Intended as an inspection and oracle path; production compression goes
/// through [`compress_channel`].
pub fn build_dbbd_matrix(config: &SensingConfig) -> Vec<Vec<u8>> {
    let mut matrix = vec![vec![0u8; config.n]; config.m];
    for (i, row) in matrix.iter_mut().enumerate() {
        for entry in &mut row[i * config.d..(i + 1) * config.d] {
            *entry = 1;
        }
    }
    matrix
}

/// Applies the DBBD operator to one channel as a running block sum.
pub fn compress_channel(
    x: &[f64],
    config: &SensingConfig,
    original_rate: f64,
    channel_id: usize,
) -> Result<CompressedSignal, SensingError> {
    if x.len() != config.n {
        return Err(SensingError::DimensionMismatch {
            expected: config.n,
            found: x.len(),
        });
    }
    let scale = if config.normalize {
        1.0 / config.d as f64
    } else {
        1.0
    };
    let data = x
        .chunks_exact(config.d)
        .map(|block| block.iter().sum::<f64>() * scale)
        .collect();
    Ok(CompressedSignal {
        data,
        config: *config,
        effective_rate: original_rate * config.m as f64 / config.n as f64,
        channel_id,
    })
}

/// Compresses every channel with the shared config, forming the
/// multi-measurement-vector view of the record.
pub fn compress_multichannel(
    channels: &[Vec<f64>],
    config: &SensingConfig,
    original_rate: f64,
) -> Result<MultiChannelCompressed, SensingError> {
    if let Some(first) = channels.first() {
        if channels.iter().any(|c| c.len() != first.len()) {
            return Err(SensingError::RaggedChannels);
        }
    }
    let channels = channels
        .iter()
        .enumerate()
        .map(|(id, x)| compress_channel(x, config, original_rate, id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MultiChannelCompressed { channels })
}
