//! WFDB `.hea` text header parsing.

use super::WfdbError;

/// Per-signal descriptor from a `.hea` header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    /// File the samples live in (e.g. `100.dat`).
    pub file_name: String,
    /// Storage format code. Always 212 after successful parsing.
    pub storage_format: u16,
    /// ADC units per physical unit (mV). 0 in the file means the WFDB
    /// default of 200.
    pub adc_gain: f64,
    /// ADC value corresponding to 0 physical units. Taken from the
    /// parenthesized baseline after the gain when present, otherwise from
    /// the ADC-zero field.
    pub adc_baseline: i32,
    /// ADC resolution in bits.
    pub adc_resolution: u32,
    /// ADC zero field as written in the header.
    pub adc_zero: i32,
    /// First sample value, used by WFDB tools as a consistency check.
    pub initial_value: i32,
    /// Physical units label, `mV` when the header does not say otherwise.
    pub units: String,
    /// Free-text signal description (e.g. `MLII`).
    pub description: String,
}

/// Parsed record-level header.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordHeader {
    pub record_name: String,
    pub num_signals: usize,
    /// Sampling rate in Hz. MIT-BIH records are digitized at 360 Hz.
    pub sampling_rate: u32,
    /// Samples per channel.
    pub num_samples: usize,
    pub signals: Vec<SignalSpec>,
}

fn malformed(line: usize, reason: impl Into<String>) -> WfdbError {
    WfdbError::MalformedHeader {
        line,
        reason: reason.into(),
    }
}

fn parse_int<T: std::str::FromStr>(
    token: &str,
    line: usize,
    what: &str,
) -> Result<T, WfdbError> {
    token
        .parse::<T>()
        .map_err(|_| malformed(line, format!("cannot parse {what} from {token:?}")))
}

/// Splits the gain token `gain(baseline)/units` into its parts.
fn parse_gain_token(
    token: &str,
    line: usize,
) -> Result<(f64, Option<i32>, Option<String>), WfdbError> {
    let (gain_part, units) = match token.split_once('/') {
        Some((g, u)) => (g, Some(u.to_string())),
        None => (token, None),
    };
    let (gain_str, baseline) = match gain_part.split_once('(') {
        Some((g, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .ok_or_else(|| malformed(line, format!("unterminated baseline in {token:?}")))?;
            (g, Some(parse_int::<i32>(inner, line, "ADC baseline")?))
        }
        None => (gain_part, None),
    };
    let gain: f64 = gain_str
        .parse()
        .map_err(|_| malformed(line, format!("cannot parse ADC gain from {token:?}")))?;
    Ok((gain, baseline, units))
}

/// Parses a WFDB `.hea` header.
///
/// Comment lines (`#`) and blank lines are skipped. The record line must
/// carry at least record name, signal count, sampling rate and sample count;
/// each signal line at least file name, format and gain. Signals stored in
/// any format other than 212 are rejected.
pub fn parse_header(text: &[u8]) -> Result<RecordHeader, WfdbError> {
    let text = std::str::from_utf8(text)
        .map_err(|_| malformed(0, "header is not valid UTF-8 text"))?;

    let mut lines = text
        .lines()
        .enumerate()
        .map(|(idx, l)| (idx + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (record_line_no, record_line) = lines
        .next()
        .ok_or_else(|| malformed(0, "header contains no record line"))?;

    let fields: Vec<&str> = record_line.split_whitespace().collect();
    if fields.len() < 4 {
        return Err(malformed(
            record_line_no,
            format!(
                "record line needs name, signal count, sampling rate and sample count, found {} fields",
                fields.len()
            ),
        ));
    }

    let record_name = fields[0].to_string();
    if record_name.contains('/') {
        return Err(malformed(
            record_line_no,
            "multi-segment records are not supported",
        ));
    }
    let num_signals: usize = parse_int(fields[1], record_line_no, "signal count")?;
    let sampling_rate: u32 = parse_int(fields[2], record_line_no, "sampling rate")?;
    let num_samples: usize = parse_int(fields[3], record_line_no, "sample count")?;

    if num_signals < 1 {
        return Err(malformed(record_line_no, "signal count must be >= 1"));
    }
    if sampling_rate == 0 {
        return Err(malformed(record_line_no, "sampling rate must be > 0"));
    }
    if num_samples == 0 {
        return Err(malformed(record_line_no, "sample count must be > 0"));
    }

    let mut signals = Vec::with_capacity(num_signals);
    for _ in 0..num_signals {
        let (line_no, line) = lines.next().ok_or_else(|| {
            malformed(
                record_line_no,
                format!("expected {num_signals} signal lines, header ended early"),
            )
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(malformed(
                line_no,
                "signal line needs at least file name, format and gain",
            ));
        }

        let format: i64 = parse_int(fields[1], line_no, "storage format")?;
        if format != 212 {
            return Err(WfdbError::UnsupportedFormat { format });
        }

        let (mut adc_gain, baseline, units) = parse_gain_token(fields[2], line_no)?;
        if adc_gain == 0.0 {
            adc_gain = 200.0; // WFDB convention: 0 means the default gain
        }

        let adc_resolution: u32 = match fields.get(3) {
            Some(tok) => parse_int(tok, line_no, "ADC resolution")?,
            None => 12,
        };
        let adc_zero: i32 = match fields.get(4) {
            Some(tok) => parse_int(tok, line_no, "ADC zero")?,
            None => 0,
        };
        let initial_value: i32 = match fields.get(5) {
            Some(tok) => parse_int(tok, line_no, "initial value")?,
            None => adc_zero,
        };
        // fields 6 and 7 are checksum and block size; everything after is
        // the free-text description.
        let description = fields.get(8..).map(|f| f.join(" ")).unwrap_or_default();

        signals.push(SignalSpec {
            file_name: fields[0].to_string(),
            storage_format: 212,
            adc_gain,
            adc_baseline: baseline.unwrap_or(adc_zero),
            adc_resolution,
            adc_zero,
            initial_value,
            units: units.unwrap_or_else(|| "mV".to_string()),
            description,
        });
    }

    Ok(RecordHeader {
        record_name,
        num_signals,
        sampling_rate,
        num_samples,
        signals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // The signal lines mirror the distributed MIT-BIH record-100 header.
    const RECORD_100_HEA: &str = "\
100 2 360 650000
100.dat 212 200 11 1024 995 -22131 0 MLII
100.dat 212 200 11 1024 1011 20052 0 V5
";

    #[test]
    fn parses_mit_bih_style_header() {
        let h = parse_header(RECORD_100_HEA.as_bytes()).unwrap();
        assert_eq!(h.record_name, "100");
        assert_eq!(h.num_signals, 2);
        assert_eq!(h.sampling_rate, 360);
        assert_eq!(h.num_samples, 650_000);
        assert_eq!(h.signals.len(), 2);
        assert_eq!(h.signals[0].file_name, "100.dat");
        assert_eq!(h.signals[0].adc_gain, 200.0);
        assert_eq!(h.signals[0].adc_baseline, 1024);
        assert_eq!(h.signals[0].adc_resolution, 11);
        assert_eq!(h.signals[0].initial_value, 995);
        assert_eq!(h.signals[0].units, "mV");
        assert_eq!(h.signals[0].description, "MLII");
        assert_eq!(h.signals[1].description, "V5");
    }

    #[test]
    fn zero_sampling_rate_is_rejected() {
        let err = parse_header(b"x 1 0 100\nx.dat 212 200\n").unwrap_err();
        assert!(matches!(err, WfdbError::MalformedHeader { line: 1, .. }));
        assert!(err.to_string().contains("sampling rate"));
    }

    #[test]
    fn non_212_format_is_rejected() {
        let err = parse_header(b"r 1 360 100\nr.dat 16 200 12 0 0 0 0 sig\n").unwrap_err();
        assert!(matches!(err, WfdbError::UnsupportedFormat { format: 16 }));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# produced by a recorder\n\n100 1 360 1000\n# signal follows\n100.dat 212 200(512)/uV 11 0 5 0 0 LEAD I\n";
        let h = parse_header(text.as_bytes()).unwrap();
        assert_eq!(h.num_samples, 1000);
        assert_eq!(h.signals[0].adc_baseline, 512);
        assert_eq!(h.signals[0].units, "uV");
        assert_eq!(h.signals[0].description, "LEAD I");
    }

    #[test]
    fn zero_gain_falls_back_to_wfdb_default() {
        let h = parse_header(b"r 1 360 10\nr.dat 212 0 12 0 0 0 0 X\n").unwrap();
        assert_eq!(h.signals[0].adc_gain, 200.0);
    }

    #[test]
    fn missing_signal_line_is_an_error() {
        let err = parse_header(b"r 2 360 10\nr.dat 212 200\n").unwrap_err();
        assert!(err.to_string().contains("signal lines"));
    }

    #[test]
    fn multi_segment_records_are_rejected() {
        let err = parse_header(b"r/3 2 360 10\n").unwrap_err();
        assert!(err.to_string().contains("multi-segment"));
    }
}
