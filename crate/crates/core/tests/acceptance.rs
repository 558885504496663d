//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Criteria that require the MIT-BIH Arrhythmia Database run against
//! `$CDECG_MITDB_DIR` (or `data/mitdb` at the workspace root) when the files
//! are present; the database is licensed and cannot be bundled or fetched
//! here, so without it those tests report SKIPPED with the reason instead
//! of a hollow pass.

use std::path::PathBuf;
use std::time::Instant;

use num_rational::Ratio;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cdecg_core::detector::{detect_r_peaks, map_to_original_timescale, DetectorConfig};
use cdecg_core::eval::{compute_metrics, match_peaks, MatchResult};
use cdecg_core::pipeline::synth::{generate_corpus, generate_synthetic_record};
use cdecg_core::pipeline::{run_experiment, ExperimentConfig, OutputSelection};
use cdecg_core::sensing::{build_dbbd_matrix, compress_channel, config_from_cr, SensingConfig};
use cdecg_core::similarity::{
    pairwise_cc_stats, pearson_cc, segment_into_templates, structural_similarity, DomainTag,
};
use cdecg_core::wfdb::{decode_212, default_beat_codes, encode_212, load_record_from_paths};

fn pass(n: u32, what: &str) {
    println!("criterion {n:2}: PASS — {what}");
}

fn skip(n: u32, why: &str) {
    println!("criterion {n:2}: SKIPPED — {why}");
}

/// MIT-BIH directory, when the user supplied one.
fn mitdb_dir() -> Option<PathBuf> {
    let mut candidates = Vec::new();
    if let Ok(dir) = std::env::var("CDECG_MITDB_DIR") {
        candidates.push(PathBuf::from(dir));
    }
    candidates.push(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mitdb"));
    candidates.into_iter().find(|p| p.join("100.hea").exists())
}

#[test]
fn criterion_01_dbbd_streaming_equals_matrix_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD88D);
    let ds = [1usize, 2, 4, 8, 16];

    for trial in 0..500 {
        let d = ds[trial % ds.len()];
        let m = rng.gen_range(1..=1024 / d);
        let n = m * d;
        let x_int: Vec<i64> = (0..n).map(|_| rng.gen_range(-2048..=2047)).collect();
        let x: Vec<f64> = x_int.iter().map(|&v| v as f64).collect();

        let config = SensingConfig::new(n, m, false).unwrap();
        let streaming = compress_channel(&x, &config, 360.0, 0).unwrap();

        // Independent oracle: explicit matrix product in integer arithmetic.
        let matrix = build_dbbd_matrix(&config);
        for (i, row) in matrix.iter().enumerate() {
            let dot: i64 = row
                .iter()
                .zip(&x_int)
                .map(|(&phi, &xi)| i64::from(phi) * xi)
                .sum();
            assert_eq!(
                streaming.data[i], dot as f64,
                "mismatch at n={n} d={d} row {i}"
            );
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    pass(1, &format!("500 signals, d in {{1,2,4,8,16}}, exact match in {elapsed:?}"));
}

#[test]
fn criterion_02_protocol_dimensions() {
    for (cr, want_m, want_len) in [(0.50, 5120, 128), (0.75, 2560, 64), (0.875, 1280, 32)] {
        let config = config_from_cr(10_240, cr, true).unwrap();
        assert_eq!(config.m, want_m);
        let x = vec![0.25; 10_240];
        let compressed = compress_channel(&x, &config, 360.0, 0).unwrap();
        let ts =
            segment_into_templates(&compressed.data, 40, DomainTag::Compressed, "").unwrap();
        assert_eq!(ts.k(), 40);
        assert_eq!(ts.segment_len, want_len);
    }
    let ts = segment_into_templates(&vec![0.0; 10_240], 40, DomainTag::Original, "").unwrap();
    assert_eq!((ts.k(), ts.segment_len), (40, 256));
    pass(2, "10240 samples at CR {50,75,87.5}% give 40 templates of {128,64,32}");
}

#[test]
fn criterion_03_pearson_matches_brute_force() {
    // Exact endpoints first.
    let a = [3.0, -1.0, 5.0, 2.0, 9.0];
    assert_eq!(pearson_cc(&a, &a).unwrap(), 1.0);
    let neg: Vec<f64> = a.iter().map(|&v| -v + 4.0).collect();
    assert_eq!(pearson_cc(&a, &neg).unwrap(), -1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(0xCC);
    for _ in 0..200 {
        let k = rng.gen_range(2..=6usize);
        let len = rng.gen_range(2..=32usize);
        let signal: Vec<f64> = (0..k * len).map(|_| rng.gen_range(-100.0..100.0)).collect();
        let ts = segment_into_templates(&signal, k, DomainTag::Original, "").unwrap();
        let stats = pairwise_cc_stats(&ts).unwrap();

        // Definitional evaluation, independently coded.
        let mut expected = Vec::new();
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = (&ts.templates[i], &ts.templates[j]);
                let n = len as f64;
                let (ma, mb) = (
                    a.iter().sum::<f64>() / n,
                    b.iter().sum::<f64>() / n,
                );
                let cov =
                    a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum::<f64>() / n;
                let sa = (a.iter().map(|&x| (x - ma).powi(2)).sum::<f64>() / n).sqrt();
                let sb = (b.iter().map(|&y| (y - mb).powi(2)).sum::<f64>() / n).sqrt();
                expected.push(cov / (sa * sb));
            }
        }
        assert_eq!(stats.per_pair.len(), expected.len());
        for (got, want) in stats.per_pair.iter().zip(&expected) {
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "pairwise CC {got} vs brute force {want}"
            );
        }
    }
    pass(3, "pairwise stats match definitional enumeration within 1e-12; endpoints exact");
}

#[test]
fn criterion_04_wfdb_round_trip_and_record_100() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x212);
    for trial in 0..1000 {
        // Both parities: even lengths on even trials, odd on odd ones.
        let len = 2 * rng.gen_range(0..200usize) + (trial % 2);
        let samples: Vec<i32> = (0..len).map(|_| rng.gen_range(-2048..=2047)).collect();
        let channels = vec![samples];
        let bytes = encode_212(&channels).unwrap();
        let decoded = decode_212(&bytes, 1, len).unwrap();
        assert_eq!(decoded, channels, "round trip broke at len {len}");
    }

    match mitdb_dir() {
        Some(dir) => {
            let rec =
                load_record_from_paths(&dir, "100", &default_beat_codes(), Some(10_240)).unwrap();
            assert_eq!(rec.header.sampling_rate, 360);
            assert_eq!(rec.header.num_signals, 2);
            // Reference readers report the first MLII samples as 995, and
            // the header's initial-value field must agree with the decode.
            assert_eq!(&rec.channels[0][..2], &[995, 995]);
            for (ch, spec) in rec.channels.iter().zip(&rec.header.signals) {
                assert_eq!(ch[0], spec.initial_value, "initial value cross-check");
            }
            pass(4, "1000 round trips exact; record 100 matches the reference dump");
        }
        None => {
            pass(4, "1000 round trips exact (both parities)");
            skip(
                4,
                "record-100 cross-check: MIT-BIH files not present; set CDECG_MITDB_DIR to run it",
            );
        }
    }
}

#[test]
fn criterion_05_detector_on_synthetic_fixture() {
    let start = Instant::now();
    let record = generate_synthetic_record(60.0, 30.0, 360, 20, "acc");
    assert_eq!(record.beat_annotations.len(), 30);
    let truth: Vec<usize> = record.beat_annotations.iter().map(|a| a.sample_index).collect();
    let x: Vec<f64> = record.channels[0].iter().map(|&v| f64::from(v)).collect();
    let fs = 360.0_f64;
    let tolerance = (0.150 * fs).round() as usize;

    let evaluate = |cr: f64| -> MatchResult {
        if cr == 0.0 {
            let det = detect_r_peaks(&x, &DetectorConfig::for_rate(fs)).unwrap();
            match_peaks(&det.peak_indices, &truth, tolerance).unwrap()
        } else {
            let sensing = config_from_cr(x.len(), cr, true).unwrap();
            let compressed = compress_channel(&x, &sensing, fs, 0).unwrap();
            let det = detect_r_peaks(
                &compressed.data,
                &DetectorConfig::for_rate(compressed.effective_rate),
            )
            .unwrap();
            let mapped = map_to_original_timescale(&det, &sensing);
            match_peaks(&mapped, &truth, tolerance).unwrap()
        }
    };

    for cr in [0.0, 0.5] {
        let m = evaluate(cr);
        let r = compute_metrics(&m).unwrap();
        assert_eq!(r.se, 100.0, "Se at cr={cr}");
        assert_eq!(r.ppv, Some(100.0), "P+ at cr={cr}");
    }
    let r = compute_metrics(&evaluate(0.875)).unwrap();
    assert!(r.se >= 95.0, "Se at cr=0.875 is {}", r.se);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "took {elapsed:?}, budget 2 s");
    pass(
        5,
        &format!("Se=P+=100% at cr 0 and 0.5; Se={:.1}% at cr 0.875; {elapsed:?}", r.se),
    );
}

#[test]
fn criterion_06_detector_on_record_100() {
    let Some(dir) = mitdb_dir() else {
        skip(
            6,
            "MIT-BIH record 100 not present (no network route to PhysioNet in this \
             environment); set CDECG_MITDB_DIR to run against the real data",
        );
        return;
    };
    let rec = load_record_from_paths(&dir, "100", &default_beat_codes(), Some(10_240)).unwrap();
    let truth: Vec<usize> = rec.beat_annotations.iter().map(|a| a.sample_index).collect();
    assert!(!truth.is_empty(), "record 100 carries beats in the first 10240 samples");
    let x: Vec<f64> = rec.channels[0].iter().map(|&v| f64::from(v)).collect();
    let det = detect_r_peaks(&x, &DetectorConfig::for_rate(360.0)).unwrap();
    let matched = match_peaks(&det.peak_indices, &truth, 54).unwrap();
    let r = compute_metrics(&matched).unwrap();
    assert!(r.se >= 95.0, "Se = {}", r.se);
    assert!(r.ppv.unwrap_or(0.0) >= 95.0, "P+ = {:?}", r.ppv);
    pass(6, &format!("record 100 ch1 uncompressed: Se={:.1}%, P+={:.1}%", r.se, r.ppv.unwrap()));
}

#[test]
fn criterion_07_degradation_trends_across_cr() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let (data_dir, records, source) = match mitdb_dir() {
        Some(dir) => (dir, cdecg_core::pipeline::default_record_ids(), "MIT-BIH records"),
        None => {
            let names = generate_corpus(data.path(), 18, 30.0, 360, 7).unwrap();
            (data.path().to_path_buf(), names, "18 synthetic records")
        }
    };

    let config = ExperimentConfig {
        data_dir,
        record_ids: records,
        out_dir: out.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let output = run_experiment(&config, &OutputSelection::nothing()).unwrap();
    assert!(!output.manifest.any_failed(), "all tasks must succeed for the trend test");

    let crs = [0.5, 0.75, 0.875];
    for channel in [1usize, 2] {
        // Mean template CC per CR, non-increasing within 2 CC points.
        let mean_cc = |cr: f64| {
            let vals: Vec<f64> = output
                .similarity
                .iter()
                .filter(|s| s.channel == channel && s.cr == cr)
                .map(|s| s.mean_cc_compressed)
                .collect();
            assert!(!vals.is_empty());
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        for pair in crs.windows(2) {
            let (lo, hi) = (mean_cc(pair[0]), mean_cc(pair[1]));
            assert!(
                hi <= lo + 0.02,
                "ch{channel}: mean CC rose from {lo:.4} at cr={} to {hi:.4} at cr={}",
                pair[0],
                pair[1]
            );
        }

        // The direct compressed-vs-subsampled-original comparison shows the
        // degradation most plainly; it must follow the same trend.
        let mean_direct = |cr: f64| {
            let vals: Vec<f64> = output
                .similarity
                .iter()
                .filter(|s| s.channel == channel && s.cr == cr)
                .map(|s| s.direct_mode_mean_cc.expect("direct mode is always on"))
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        for pair in crs.windows(2) {
            let (lo, hi) = (mean_direct(pair[0]), mean_direct(pair[1]));
            assert!(
                hi <= lo + 0.02,
                "ch{channel}: direct-mode CC rose from {lo:.4} to {hi:.4}"
            );
        }

        let agg = |cr: f64| {
            output
                .aggregates
                .iter()
                .find(|a| a.channel == channel && a.cr == cr)
                .unwrap_or_else(|| panic!("missing aggregate ch{channel} cr{cr}"))
        };
        for pair in crs.windows(2) {
            let (lo, hi) = (agg(pair[0]), agg(pair[1]));
            assert!(hi.se <= lo.se + 1.0, "ch{channel} Se trend broken");
            assert!(
                hi.ppv.unwrap() <= lo.ppv.unwrap() + 1.0,
                "ch{channel} P+ trend broken"
            );
            assert!(hi.f <= lo.f + 1.0, "ch{channel} F trend broken");
            assert!(hi.der >= lo.der - 1.0, "ch{channel} DER trend broken");
        }
    }
    pass(7, &format!("CC/Se/P+/F non-increasing, DER non-decreasing over CR on {source}"));
}

#[test]
fn criterion_08_scale_invariance() {
    let record = generate_synthetic_record(68.0, 30.0, 360, 31, "scale");
    let x: Vec<f64> = record.channels[0].iter().map(|&v| f64::from(v)).collect();
    let fs = 360.0;
    let detector = DetectorConfig::for_rate(fs);
    let reference_peaks = detect_r_peaks(&x, &detector).unwrap().peak_indices;
    assert!(reference_peaks.len() >= 25);

    let sensing = config_from_cr(x.len(), 0.5, true).unwrap();
    let reference_sim = {
        let compressed = compress_channel(&x, &sensing, fs, 0).unwrap();
        structural_similarity(&x, &compressed, 40, true).unwrap()
    };

    for alpha in [0.5, 3.0, 100.0] {
        let scaled: Vec<f64> = x.iter().map(|&v| alpha * v).collect();
        let peaks = detect_r_peaks(&scaled, &detector).unwrap().peak_indices;
        assert_eq!(peaks, reference_peaks, "peak indices moved at alpha={alpha}");

        let compressed = compress_channel(&scaled, &sensing, fs, 0).unwrap();
        let sim = structural_similarity(&scaled, &compressed, 40, true).unwrap();
        assert!((sim.mean_cc_original - reference_sim.mean_cc_original).abs() < 1e-12);
        assert!((sim.mean_cc_compressed - reference_sim.mean_cc_compressed).abs() < 1e-12);
        assert!(
            (sim.direct_mode_mean_cc.unwrap() - reference_sim.direct_mode_mean_cc.unwrap()).abs()
                < 1e-12
        );
    }
    pass(8, "alpha in {0.5, 3, 100}: identical peaks, CC values stable within 1e-12");
}

#[test]
fn criterion_09_metric_algebra_in_exact_rationals() {
    let percent = |num: i64, den: i64| Ratio::new(100 * num, den);
    for tp in 0i64..=20 {
        for fp in 0i64..=20 {
            for fn_ in 0i64..=20 {
                let tb = tp + fn_;
                let m = MatchResult {
                    tp: tp as usize,
                    fp: fp as usize,
                    fn_: fn_ as usize,
                    matched_pairs: vec![],
                    tolerance_samples: 0,
                    tb: tb as usize,
                };
                if tb == 0 {
                    assert!(compute_metrics(&m).is_err());
                    continue;
                }
                let r = compute_metrics(&m).unwrap();

                let close = |got: f64, want: Ratio<i64>| {
                    let want = want.to_f64().unwrap();
                    (got - want).abs() <= 1e-9 * want.abs().max(1.0)
                };
                assert!(close(r.se, percent(tp, tp + fn_)));
                assert!(close(r.f, percent(2 * tp, 2 * tp + fn_ + fp)));
                assert!(close(r.der, percent(fp + fn_, tb)));
                match r.ppv {
                    Some(ppv) => {
                        assert!(tp + fp > 0);
                        assert!(close(ppv, percent(tp, tp + fp)));
                        // F is the harmonic mean of Se and P+ where defined.
                        if r.se + ppv > 0.0 {
                            let harmonic = 2.0 * r.se * ppv / (r.se + ppv);
                            assert!((r.f - harmonic).abs() < 1e-9);
                        }
                    }
                    None => assert_eq!(tp + fp, 0),
                }
            }
        }
    }
    pass(9, "Se/P+/F/DER match exact rationals for all counts <= 20; harmonic identity holds");
}

#[test]
fn criterion_10_determinism_and_runtime() {
    let data = tempfile::tempdir().unwrap();
    let names = generate_corpus(data.path(), 18, 30.0, 360, 42).unwrap();

    let run = |out: &std::path::Path| {
        let config = ExperimentConfig {
            data_dir: data.path().to_path_buf(),
            record_ids: names.clone(),
            out_dir: out.to_path_buf(),
            ..ExperimentConfig::default()
        };
        run_experiment(&config, &OutputSelection::all()).unwrap()
    };

    let start = Instant::now();
    let out1 = tempfile::tempdir().unwrap();
    let first = run(out1.path());
    let elapsed = start.elapsed();

    let out2 = tempfile::tempdir().unwrap();
    run(out2.path());

    let mut compared = 0usize;
    for entry in std::fs::read_dir(out1.path()).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            let a = std::fs::read(out1.path().join(&name)).unwrap();
            let b = std::fs::read(out2.path().join(&name)).unwrap();
            assert_eq!(a, b, "{name:?} differs between runs");
            compared += 1;
        }
    }
    assert!(compared >= 9, "expected all CSV reports, compared {compared}");
    assert!(!first.manifest.any_failed());
    assert_eq!(first.manifest.tasks.len(), 18 * 2 * 4);
    // Default-protocol row counts: 18 records × 2 channels × 3 CRs
    // similarity rows, plus a baseline metric row per (record, channel),
    // and per-(channel, cr) aggregates including the two baselines.
    assert_eq!(first.similarity.len(), 108);
    assert_eq!(first.metrics.len(), 144);
    assert_eq!(first.aggregates.len(), 8);
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "full default-shape run took {elapsed:?}, budget 60 s"
    );
    pass(
        10,
        &format!("{compared} CSVs byte-identical across runs; full run in {elapsed:?}"),
    );
}
