//! Format-212 packed 12-bit signal coding.
//!
//! Two 12-bit two's-complement samples are packed into three bytes: the
//! first sample is `((b1 & 0x0F) << 8) | b0`, the second
//! `((b1 & 0xF0) << 4) | b2`. Samples from multiple signals interleave
//! channel-major per frame before packing.

use super::WfdbError;

const MIN_SAMPLE: i32 = -2048;
const MAX_SAMPLE: i32 = 2047;

/// Decodes a format-212 byte stream into `num_signals` channels of
/// `num_samples` samples each.
///
/// Only the prefix of `bytes` needed for the requested sample count is read,
/// so a full record file can back a truncated load. When the total sample
/// count is odd, the trailing half of the final byte triplet is padding and
/// is ignored.
pub fn decode_212(
    bytes: &[u8],
    num_signals: usize,
    num_samples: usize,
) -> Result<Vec<Vec<i32>>, WfdbError> {
    let total = num_signals * num_samples;
    let expected = (3 * total).div_ceil(2);
    if bytes.len() < expected {
        return Err(WfdbError::TruncatedSignal {
            expected,
            available: bytes.len(),
        });
    }

    let mut channels = vec![Vec::with_capacity(num_samples); num_signals];
    for t in 0..total {
        let base = 3 * (t / 2);
        let raw = if t % 2 == 0 {
            ((u32::from(bytes[base + 1]) & 0x0F) << 8) | u32::from(bytes[base])
        } else {
            ((u32::from(bytes[base + 1]) & 0xF0) << 4) | u32::from(bytes[base + 2])
        };
        let value = if raw >= 2048 {
            raw as i32 - 4096
        } else {
            raw as i32
        };
        channels[t % num_signals].push(value);
    }
    Ok(channels)
}

/// Encodes channels into a format-212 byte stream, the exact inverse of
/// [`decode_212`]. Exists primarily so synthetic fixtures and round-trip
/// tests can exercise the decoder on real file layouts.
pub fn encode_212(channels: &[Vec<i32>]) -> Result<Vec<u8>, WfdbError> {
    let num_signals = channels.len();
    let num_samples = channels.first().map_or(0, Vec::len);
    if channels.iter().any(|c| c.len() != num_samples) {
        return Err(WfdbError::RaggedChannels);
    }

    let total = num_signals * num_samples;
    let mut packed = Vec::with_capacity(total.div_ceil(2) * 3);
    let mut pending: Option<u16> = None;

    let mut push_sample = |value: i32, out: &mut Vec<u8>| -> Result<(), WfdbError> {
        if !(MIN_SAMPLE..=MAX_SAMPLE).contains(&value) {
            return Err(WfdbError::SampleOutOfRange { value });
        }
        let raw = (value & 0xFFF) as u16;
        match pending.take() {
            None => pending = Some(raw),
            Some(first) => {
                out.push((first & 0xFF) as u8);
                out.push(((first >> 8) as u8 & 0x0F) | ((raw >> 4) as u8 & 0xF0));
                out.push((raw & 0xFF) as u8);
            }
        }
        Ok(())
    };

    for t in 0..total {
        push_sample(channels[t % num_signals][t / num_signals], &mut packed)?;
    }
    if let Some(first) = pending {
        // Odd total: emit a full triplet whose second sample is padding.
        packed.push((first & 0xFF) as u8);
        packed.push((first >> 8) as u8 & 0x0F);
        packed.push(0);
    }
    Ok(packed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decodes_two_packed_samples() {
        let channels = decode_212(&[0x01, 0x00, 0x02], 1, 2).unwrap();
        assert_eq!(channels, vec![vec![1, 2]]);
    }

    #[test]
    fn decodes_negative_twos_complement() {
        // 0xFFF is -1; the second sample of the triplet is 0.
        let channels = decode_212(&[0xFF, 0x0F, 0x00], 1, 2).unwrap();
        assert_eq!(channels, vec![vec![-1, 0]]);
    }

    #[test]
    fn odd_sample_count_ignores_padding() {
        let channels = decode_212(&[0xFF, 0x0F], 1, 1).unwrap();
        assert_eq!(channels, vec![vec![-1]]);
    }

    #[test]
    fn truncated_stream_reports_byte_counts() {
        let err = decode_212(&[0x01, 0x00], 1, 2).unwrap_err();
        match err {
            WfdbError::TruncatedSignal {
                expected,
                available,
            } => {
                assert_eq!(expected, 3);
                assert_eq!(available, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn two_signals_interleave_channel_major() {
        // Frames (10, 20), (11, 21): packed stream is 10, 20, 11, 21.
        let bytes = encode_212(&[vec![10, 11], vec![20, 21]]).unwrap();
        let channels = decode_212(&bytes, 2, 2).unwrap();
        assert_eq!(channels, vec![vec![10, 11], vec![20, 21]]);
        // Reading the same bytes as one signal exposes the interleaving.
        let flat = decode_212(&bytes, 1, 4).unwrap();
        assert_eq!(flat, vec![vec![10, 20, 11, 21]]);
    }

    #[test]
    fn encodes_known_bytes() {
        assert_eq!(encode_212(&[vec![1, 2]]).unwrap(), vec![0x01, 0x00, 0x02]);
        assert_eq!(encode_212(&[vec![-1, 0]]).unwrap(), vec![0xFF, 0x0F, 0x00]);
    }

    #[test]
    fn out_of_range_sample_is_rejected() {
        let err = encode_212(&[vec![3000]]).unwrap_err();
        assert!(matches!(err, WfdbError::SampleOutOfRange { value: 3000 }));
        let err = encode_212(&[vec![-2049]]).unwrap_err();
        assert!(matches!(err, WfdbError::SampleOutOfRange { value: -2049 }));
    }

    #[test]
    fn ragged_channels_are_rejected() {
        let err = encode_212(&[vec![1, 2], vec![3]]).unwrap_err();
        assert!(matches!(err, WfdbError::RaggedChannels));
    }

    proptest! {
        // Round trip over both parities of length and 1-3 signals.
        #[test]
        fn round_trip_is_identity(
            samples in proptest::collection::vec(-2048i32..=2047, 0..200),
            num_signals in 1usize..=3,
        ) {
            let len = samples.len() / num_signals;
            let channels: Vec<Vec<i32>> = (0..num_signals)
                .map(|c| samples[c * len..(c + 1) * len].to_vec())
                .collect();
            let bytes = encode_212(&channels).unwrap();
            let decoded = decode_212(&bytes, num_signals, len).unwrap();
            prop_assert_eq!(decoded, channels);
        }
    }
}
