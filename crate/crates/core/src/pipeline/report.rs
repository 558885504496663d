//! Deterministic report serialization.
//!
//! Every CSV emitted here is byte-stable: rows are sorted on (record,
//! channel, cr) keys and floats are printed with a fixed 6-decimal,
//! round-half-even format, so repeated runs over identical inputs produce
//! identical files regardless of task scheduling.

use serde::Serialize;

use crate::eval::{AggregateReport, MetricsReport};
use crate::similarity::SimilarityReport;

/// One detection result prepared for export: indices in the analyzed
/// timescale plus their original-rate equivalents.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionExport {
    pub record: String,
    /// 1-based channel number.
    pub channel: usize,
    pub cr: f64,
    pub effective_rate: f64,
    /// Group delay (samples) compensated by the detector.
    pub total_delay: usize,
    pub native_indices: Vec<usize>,
    pub original_indices: Vec<usize>,
}

/// Fixed-width float formatting: 6 decimals, ties to even.
pub fn fmt6(v: f64) -> String {
    format!("{:.6}", (v * 1e6).round_ties_even() / 1e6)
}

/// Like [`fmt6`], with an explicit marker for undefined metrics.
pub fn fmt6_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), fmt6)
}

pub fn similarity_csv(reports: &[SimilarityReport]) -> String {
    let mut out = String::from(
        "record,channel,cr,mean_cc_original,mean_cc_compressed,delta,direct_mode_mean_cc,excluded_pairs\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.record,
            r.channel,
            fmt6(r.cr),
            fmt6(r.mean_cc_original),
            fmt6(r.mean_cc_compressed),
            fmt6(r.delta),
            fmt6_opt(r.direct_mode_mean_cc),
            r.excluded_pairs,
        ));
    }
    out
}

pub fn metrics_csv(reports: &[MetricsReport]) -> String {
    let mut out = String::from("record,channel,cr,tp,fp,fn,tb,se,ppv,f,der\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.record,
            r.channel,
            fmt6(r.cr),
            r.tp,
            r.fp,
            r.fn_,
            r.tb,
            fmt6(r.se),
            fmt6_opt(r.ppv),
            fmt6(r.f),
            fmt6(r.der),
        ));
    }
    out
}

pub fn aggregate_csv(reports: &[AggregateReport]) -> String {
    let mut out = String::from("channel,cr,n_records,se,ppv,ppv_undefined,f,der\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.channel,
            fmt6(r.cr),
            r.n,
            fmt6(r.se),
            fmt6_opt(r.ppv),
            r.ppv_undefined,
            fmt6(r.f),
            fmt6(r.der),
        ));
    }
    out
}

pub fn detections_csv(detections: &[DetectionExport]) -> String {
    let mut out = String::from(
        "record,channel,cr,effective_rate,total_delay,native_index,original_index\n",
    );
    for d in detections {
        for (native, original) in d.native_indices.iter().zip(&d.original_indices) {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                d.record,
                d.channel,
                fmt6(d.cr),
                fmt6(d.effective_rate),
                d.total_delay,
                native,
                original,
            ));
        }
    }
    out
}

/// Per-record similarity series, one row per (record, channel, CR), ready
/// for a grouped line/scatter chart.
pub fn plot_similarity_csv(reports: &[SimilarityReport]) -> String {
    let mut out = String::from("record,channel,cr_pct,mean_cc_original,mean_cc_compressed\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.record,
            r.channel,
            fmt6(r.cr * 100.0),
            fmt6(r.mean_cc_original),
            fmt6(r.mean_cc_compressed),
        ));
    }
    out
}

/// Grouped-bar data for one metric across CRs, one file per metric panel.
pub fn plot_metric_csv(aggregates: &[AggregateReport], metric: &str) -> String {
    let mut out = String::from("channel,cr_pct,value,n_records\n");
    for a in aggregates {
        let value = match metric {
            "se" => Some(a.se),
            "ppv" => a.ppv,
            "f" => Some(a.f),
            "der" => Some(a.der),
            _ => unreachable!("unknown metric {metric}"),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            a.channel,
            fmt6(a.cr * 100.0),
            fmt6_opt(value),
            a.n,
        ));
    }
    out
}

/// Compressed measurements as CSV, one column per channel.
pub fn compressed_csv(channels: &[Vec<f64>]) -> String {
    let mut out = String::new();
    let header: Vec<String> = (1..=channels.len()).map(|i| format!("ch{i}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    let rows = channels.first().map_or(0, Vec::len);
    for i in 0..rows {
        let row: Vec<String> = channels.iter().map(|c| fmt6(c[i])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String, serde_json::Error> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_width_floats() {
        assert_eq!(fmt6(0.5), "0.500000");
        assert_eq!(fmt6(100.0), "100.000000");
        assert_eq!(fmt6(-1.0 / 3.0), "-0.333333");
        assert_eq!(fmt6_opt(None), "undefined");
    }

    #[test]
    fn ties_round_to_even() {
        // 0.0078125 = 2^-7 is exactly representable; the 7th decimal digit
        // is a true tie at the 6-decimal boundary.
        assert_eq!(fmt6(0.0078125), "0.007812");
        assert_eq!(fmt6(0.0234375), "0.023438"); // 3·2^-7 rounds up to even
    }

    #[test]
    fn compressed_csv_is_column_per_channel() {
        let csv = compressed_csv(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ch1,ch2");
        assert_eq!(lines[1], "1.000000,3.000000");
        assert_eq!(lines[2], "2.000000,4.000000");
    }
}
