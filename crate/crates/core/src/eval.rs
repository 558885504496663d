//! Beat matching and detection performance metrics.
//!
//! Detections are matched one-to-one against reference beats inside a
//! tolerance window; the resulting TP/FP/FN counts feed sensitivity,
//! positive predictivity, F-measure and detection error rate. Matching
//! maximizes the number of pairs (ties broken toward nearest, then earlier,
//! detections), so a detection is never wasted when a valid assignment
//! exists.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{which} indices must be sorted ascending")]
    UnsortedInput { which: &'static str },

    #[error("no reference beats; sensitivity and error rate are undefined")]
    NoReferenceBeats,

    #[error("cannot aggregate an empty report set")]
    EmptyGroup,
}

/// Outcome of matching detections against reference beats.
#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// (detected index, truth index) pairs, ascending in time, each within
    /// the tolerance.
    pub matched_pairs: Vec<(usize, usize)>,
    pub tolerance_samples: usize,
    /// Total reference beats.
    pub tb: usize,
}

/// Per-(record, channel, CR) detection metrics, in percent.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    pub record: String,
    /// 1-based channel number.
    pub channel: usize,
    pub cr: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tb: usize,
    /// Sensitivity: 100·TP/(TP+FN).
    pub se: f64,
    /// Positive predictivity: 100·TP/(TP+FP); undefined when nothing was
    /// detected, and then excluded from aggregation.
    pub ppv: Option<f64>,
    /// F-measure: 100·2TP/(2TP+FN+FP).
    pub f: f64,
    /// Detection error rate: 100·(FP+FN)/TB; may exceed 100.
    pub der: f64,
}

/// Unweighted per-group mean of each metric.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateReport {
    /// 1-based channel number.
    pub channel: usize,
    pub cr: f64,
    /// Reports in this group.
    pub n: usize,
    pub se: f64,
    /// Mean over reports with defined ppv; `None` if every one was
    /// undefined.
    pub ppv: Option<f64>,
    /// Reports whose undefined ppv was excluded from the mean.
    pub ppv_undefined: usize,
    pub f: f64,
    pub der: f64,
}

fn check_sorted(xs: &[usize], which: &'static str) -> Result<(), EvalError> {
    if xs.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(EvalError::UnsortedInput { which })
    }
}

/// Matches detections to reference beats one-to-one within
/// ±`tolerance_samples`.
///
/// Both inputs are sorted sample indices on a common timescale. The
/// assignment maximizes the pair count and, among maximum assignments,
/// minimizes the summed distance; an equidistant tie goes to the earlier
/// detection. Unmatched truths count as FN, unmatched detections as FP.
pub fn match_peaks(
    detected: &[usize],
    truth: &[usize],
    tolerance_samples: usize,
) -> Result<MatchResult, EvalError> {
    check_sorted(detected, "detected")?;
    check_sorted(truth, "truth")?;

    let nt = truth.len();
    let nd = detected.len();
    let tol = tolerance_samples as i64;

    // Non-crossing alignment DP over (truth prefix, detection prefix).
    // Score is lexicographic: more pairs, then smaller summed distance.
    // Move codes: 1 = leave detection j unmatched, 2 = leave truth i
    // unmatched, 3 = pair them. Evaluating moves in that order and replacing
    // only on strict improvement makes an equidistant tie keep the earlier
    // detection.
    #[derive(Clone, Copy, PartialEq)]
    struct Score {
        pairs: usize,
        cost: i64,
    }
    let better = |a: Score, b: Score| a.pairs > b.pairs || (a.pairs == b.pairs && a.cost < b.cost);

    let width = nd + 1;
    let mut moves = vec![0u8; (nt + 1) * width];
    let mut prev_row = vec![Score { pairs: 0, cost: 0 }; width];
    let mut cur_row = prev_row.clone();
    for mv in moves.iter_mut().take(nd + 1).skip(1) {
        *mv = 1;
    }
    for i in 1..=nt {
        cur_row[0] = Score { pairs: 0, cost: 0 };
        moves[i * width] = 2;
        for j in 1..=nd {
            let mut best = cur_row[j - 1];
            let mut mv = 1u8;
            if better(prev_row[j], best) {
                best = prev_row[j];
                mv = 2;
            }
            let dist = (truth[i - 1] as i64 - detected[j - 1] as i64).abs();
            if dist <= tol {
                let cand = Score {
                    pairs: prev_row[j - 1].pairs + 1,
                    cost: prev_row[j - 1].cost + dist,
                };
                if better(cand, best) {
                    best = cand;
                    mv = 3;
                }
            }
            cur_row[j] = best;
            moves[i * width + j] = mv;
        }
        std::mem::swap(&mut prev_row, &mut cur_row);
    }

    let mut matched_pairs = Vec::new();
    let (mut i, mut j) = (nt, nd);
    while i > 0 || j > 0 {
        match moves[i * width + j] {
            1 => j -= 1,
            2 => i -= 1,
            3 => {
                matched_pairs.push((detected[j - 1], truth[i - 1]));
                i -= 1;
                j -= 1;
            }
            _ => unreachable!("dp table is fully populated"),
        }
    }
    matched_pairs.reverse();

    let tp = matched_pairs.len();
    Ok(MatchResult {
        tp,
        fp: nd - tp,
        fn_: nt - tp,
        matched_pairs,
        tolerance_samples,
        tb: nt,
    })
}

/// Computes Se, P+, F and DER from match counts.
///
/// Requires at least one reference beat. When nothing was detected, ppv is
/// carried as an explicit undefined marker rather than 0 or 100. Record,
/// channel and CR identifiers are left for the caller to fill in.
pub fn compute_metrics(m: &MatchResult) -> Result<MetricsReport, EvalError> {
    if m.tb == 0 {
        return Err(EvalError::NoReferenceBeats);
    }
    let (tp, fp, fn_) = (m.tp as f64, m.fp as f64, m.fn_ as f64);
    let ppv = if m.tp + m.fp > 0 {
        Some(100.0 * tp / (tp + fp))
    } else {
        None
    };
    Ok(MetricsReport {
        record: String::new(),
        channel: 0,
        cr: 0.0,
        tp: m.tp,
        fp: m.fp,
        fn_: m.fn_,
        tb: m.tb,
        se: 100.0 * tp / (tp + fn_),
        ppv,
        f: 100.0 * 2.0 * tp / (2.0 * tp + fn_ + fp),
        der: 100.0 * (fp + fn_) / m.tb as f64,
    })
}

/// Groups reports by (channel, CR) and averages each metric, unweighted.
/// Undefined ppv values are excluded from the mean and counted.
pub fn aggregate(reports: &[MetricsReport]) -> Result<Vec<AggregateReport>, EvalError> {
    if reports.is_empty() {
        return Err(EvalError::EmptyGroup);
    }
    let mut keys: Vec<(usize, f64)> = reports.iter().map(|r| (r.channel, r.cr)).collect();
    keys.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    keys.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    Ok(keys
        .into_iter()
        .map(|(channel, cr)| {
            let group: Vec<&MetricsReport> = reports
                .iter()
                .filter(|r| r.channel == channel && r.cr == cr)
                .collect();
            let n = group.len() as f64;
            let defined: Vec<f64> = group.iter().filter_map(|r| r.ppv).collect();
            AggregateReport {
                channel,
                cr,
                n: group.len(),
                se: group.iter().map(|r| r.se).sum::<f64>() / n,
                ppv: if defined.is_empty() {
                    None
                } else {
                    Some(defined.iter().sum::<f64>() / defined.len() as f64)
                },
                ppv_undefined: group.len() - defined.len(),
                f: group.iter().map(|r| r.f).sum::<f64>() / n,
                der: group.iter().map(|r| r.der).sum::<f64>() / n,
            }
        })
        .collect())
}
