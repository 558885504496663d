//! Template segmentation and Pearson-correlation structural similarity.
//!
//! Measurements are cut into equal-length consecutive segments ("templates",
//! nominally one beat long) and similarity is summarized by the mean Pearson
//! correlation over all unordered template pairs. Because original and
//! compressed templates have different lengths, the primary metric compares
//! the intra-domain pairwise statistics of the two domains; a secondary
//! "direct" mode correlates each compressed template against the stride-d
//! subsampling of its original counterpart, which has matching length.

use serde::Serialize;
use thiserror::Error;

use crate::sensing::CompressedSignal;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("signal of length {len} cannot be split into {num_segments} equal segments")]
    Segmentation { len: usize, num_segments: usize },

    #[error("pairwise statistics need at least 2 templates, found {k}")]
    TooFewTemplates { k: usize },

    #[error("segments must have equal lengths >= 2 (found {a} and {b})")]
    LengthMismatch { a: usize, b: usize },

    #[error("segment has zero variance; correlation is undefined")]
    DegenerateSegment,

    #[error("all template pairs are degenerate; no statistics available")]
    EmptyStatistics,
}

/// Which domain a template set was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Original,
    Compressed,
}

/// Equal-length consecutive segments of one measurement.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub templates: Vec<Vec<f64>>,
    pub segment_len: usize,
    pub domain: DomainTag,
    /// Free-form provenance label (record/channel/CR), set by the pipeline.
    pub source: String,
}

impl TemplateSet {
    pub fn k(&self) -> usize {
        self.templates.len()
    }
}

/// Pairwise correlation statistics over a template set.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseStats {
    /// Mean CC over all non-degenerate unordered pairs.
    pub mean_cc: f64,
    /// CC values for the included pairs, row-major over i < j.
    pub per_pair: Vec<f64>,
    pub included_pairs: usize,
    /// Pairs dropped because one side had zero variance.
    pub excluded_pairs: usize,
}

/// Structural similarity of one (record, channel, CR) combination.
#[derive(Debug, Clone, Serialize)]
pub struct SimilarityReport {
    pub record: String,
    /// 1-based channel number.
    pub channel: usize,
    pub cr: f64,
    pub mean_cc_original: f64,
    pub mean_cc_compressed: f64,
    /// mean_cc_compressed - mean_cc_original.
    pub delta: f64,
    /// Mean CC of compressed templates against stride-d subsampled original
    /// templates; `None` when every such pair was degenerate.
    pub direct_mode_mean_cc: Option<f64>,
    /// Degenerate pairs excluded across both intra-domain statistics.
    pub excluded_pairs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_pair_original: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_pair_compressed: Option<Vec<f64>>,
}

/// Cuts a signal into `num_segments` consecutive equal-length templates.
pub fn segment_into_templates(
    signal: &[f64],
    num_segments: usize,
    domain: DomainTag,
    source: impl Into<String>,
) -> Result<TemplateSet, SimilarityError> {
    if num_segments == 0 || !signal.len().is_multiple_of(num_segments) {
        return Err(SimilarityError::Segmentation {
            len: signal.len(),
            num_segments,
        });
    }
    let segment_len = signal.len() / num_segments;
    let templates = signal
        .chunks_exact(segment_len)
        .map(<[f64]>::to_vec)
        .collect();
    Ok(TemplateSet {
        templates,
        segment_len,
        domain,
        source: source.into(),
    })
}

fn centered_sums(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut s_ab = 0.0;
    let mut s_aa = 0.0;
    let mut s_bb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        s_ab += dx * dy;
        s_aa += dx * dx;
        s_bb += dy * dy;
    }
    (s_ab, s_aa, s_bb)
}

/// Pearson correlation coefficient of two equal-length segments.
///
/// The centered-sums form makes the n vs n-1 convention cancel. Zero
/// variance on either side is an error rather than a silent 0 or 1; the
/// result is clamped to [-1, 1] against rounding.
pub fn pearson_cc(a: &[f64], b: &[f64]) -> Result<f64, SimilarityError> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(SimilarityError::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    let (s_ab, s_aa, s_bb) = centered_sums(a, b);
    if s_aa == 0.0 || s_bb == 0.0 {
        return Err(SimilarityError::DegenerateSegment);
    }
    Ok((s_ab / (s_aa * s_bb).sqrt()).clamp(-1.0, 1.0))
}

/// CC statistics over all K(K-1)/2 unordered template pairs.
///
/// Pairs touching a zero-variance template are excluded and counted; if no
/// pair survives the statistics are an error.
pub fn pairwise_cc_stats(ts: &TemplateSet) -> Result<PairwiseStats, SimilarityError> {
    let k = ts.k();
    if k < 2 {
        return Err(SimilarityError::TooFewTemplates { k });
    }
    let degenerate: Vec<bool> = ts
        .templates
        .iter()
        .map(|t| {
            let (_, s, _) = centered_sums(t, t);
            s == 0.0
        })
        .collect();

    let mut per_pair = Vec::with_capacity(k * (k - 1) / 2);
    let mut excluded = 0usize;
    for i in 0..k {
        for j in (i + 1)..k {
            if degenerate[i] || degenerate[j] {
                excluded += 1;
            } else {
                per_pair.push(pearson_cc(&ts.templates[i], &ts.templates[j])?);
            }
        }
    }
    if per_pair.is_empty() {
        return Err(SimilarityError::EmptyStatistics);
    }
    Ok(PairwiseStats {
        mean_cc: per_pair.iter().sum::<f64>() / per_pair.len() as f64,
        included_pairs: per_pair.len(),
        excluded_pairs: excluded,
        per_pair,
    })
}

/// Compares intra-domain template statistics of the original signal and its
/// compressed measurement, optionally adding the direct stride-subsampled
/// comparison.
pub fn structural_similarity(
    original: &[f64],
    compressed: &CompressedSignal,
    num_segments: usize,
    direct_mode: bool,
) -> Result<SimilarityReport, SimilarityError> {
    let ts_orig = segment_into_templates(original, num_segments, DomainTag::Original, "")?;
    let ts_comp = segment_into_templates(&compressed.data, num_segments, DomainTag::Compressed, "")?;
    let stats_orig = pairwise_cc_stats(&ts_orig)?;
    let stats_comp = pairwise_cc_stats(&ts_comp)?;

    let direct_mode_mean_cc = if direct_mode {
        let d = compressed.config.d;
        let mut ccs = Vec::with_capacity(num_segments);
        for (orig_t, comp_t) in ts_orig.templates.iter().zip(&ts_comp.templates) {
            let subsampled: Vec<f64> = orig_t.iter().step_by(d).copied().collect();
            debug_assert_eq!(subsampled.len(), comp_t.len());
            match pearson_cc(comp_t, &subsampled) {
                Ok(cc) => ccs.push(cc),
                Err(SimilarityError::DegenerateSegment) => {}
                Err(e) => return Err(e),
            }
        }
        if ccs.is_empty() {
            None
        } else {
            Some(ccs.iter().sum::<f64>() / ccs.len() as f64)
        }
    } else {
        None
    };

    Ok(SimilarityReport {
        record: String::new(),
        channel: compressed.channel_id + 1,
        cr: compressed.config.cr,
        mean_cc_original: stats_orig.mean_cc,
        mean_cc_compressed: stats_comp.mean_cc,
        delta: stats_comp.mean_cc - stats_orig.mean_cc,
        direct_mode_mean_cc,
        excluded_pairs: stats_orig.excluded_pairs + stats_comp.excluded_pairs,
        per_pair_original: None,
        per_pair_compressed: None,
    })
}
