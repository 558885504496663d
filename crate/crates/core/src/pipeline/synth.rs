//! Deterministic synthetic ECG fixtures.
//!
//! These pulse-train surrogates carry their ground-truth beat positions as
//! annotations, which makes them detector oracles: the evaluation pipeline
//! can be scored against beat locations that are known by construction. The
//! records can also be written out in WFDB form (`.hea`/`.dat`/`.atr`), so
//! the whole file-parsing path is exercised end to end without the licensed
//! MIT-BIH files.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PipelineError;
use crate::wfdb::{encode_212, encode_annotations, Annotation, EcgRecord, RecordHeader, SignalSpec};

/// Component of a synthetic beat: a Gaussian bump at an offset from the
/// R-peak center.
struct Bump {
    /// Offset from the beat center, seconds.
    offset: f64,
    /// Peak amplitude, ADC units.
    amplitude: f64,
    /// Gaussian sigma, seconds.
    sigma: f64,
}

fn render_channel(
    n: usize,
    fs: f64,
    centers: &[usize],
    bumps: &[Bump],
    noise_amp: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<i32> {
    let mut wave = vec![0.0f64; n];
    for &c in centers {
        for bump in bumps {
            let center = c as f64 + bump.offset * fs;
            let sigma = bump.sigma * fs;
            let radius = (4.0 * sigma).ceil() as isize;
            for off in -radius..=radius {
                let idx = center.round() as isize + off;
                if idx >= 0 && (idx as usize) < n {
                    let t = (idx as f64 - center) / sigma;
                    wave[idx as usize] += bump.amplitude * (-0.5 * t * t).exp();
                }
            }
        }
    }
    wave.iter()
        .map(|&v| {
            let noisy = v + rng.gen_range(-noise_amp..=noise_amp);
            (noisy.round() as i32).clamp(-2048, 2047)
        })
        .collect()
}

/// Builds a two-channel pulse-train record with beats at (k + 1/2)·period.
///
/// Channel 1 carries an upright QRS with small P and T waves; channel 2 is a
/// predominantly negative lead. A little seeded uniform noise keeps quiet
/// segments from being exactly constant. Identical arguments produce
/// identical records.
pub fn generate_synthetic_record(
    beats_per_min: f64,
    duration_s: f64,
    fs: u32,
    seed: u64,
    name: &str,
) -> EcgRecord {
    let fs_f = f64::from(fs);
    let n = (duration_s * fs_f).round() as usize;
    let period = 60.0 / beats_per_min;

    let mut centers = Vec::new();
    let mut k = 0usize;
    loop {
        // Rounding can land exactly on n when the period divides evenly.
        let center = ((k as f64 + 0.5) * period * fs_f).round() as usize;
        if center >= n {
            break;
        }
        centers.push(center);
        k += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ch1 = render_channel(
        n,
        fs_f,
        &centers,
        &[
            Bump { offset: -0.17, amplitude: 60.0, sigma: 0.025 }, // P
            Bump { offset: 0.0, amplitude: 700.0, sigma: 0.016 },  // QRS, ~80 ms wide
            Bump { offset: 0.28, amplitude: 130.0, sigma: 0.050 }, // T
        ],
        6.0,
        &mut rng,
    );
    let ch2 = render_channel(
        n,
        fs_f,
        &centers,
        &[
            Bump { offset: 0.0, amplitude: -560.0, sigma: 0.016 },
            Bump { offset: 0.28, amplitude: -90.0, sigma: 0.050 },
        ],
        6.0,
        &mut rng,
    );

    let signal_spec = |init: i32, desc: &str| SignalSpec {
        file_name: format!("{name}.dat"),
        storage_format: 212,
        adc_gain: 200.0,
        adc_baseline: 0,
        adc_resolution: 12,
        adc_zero: 0,
        initial_value: init,
        units: "mV".to_string(),
        description: desc.to_string(),
    };

    let beat_annotations = centers
        .iter()
        .map(|&c| Annotation {
            sample_index: c,
            type_code: 1,
            subtype: 0,
            channel: 0,
            num: 0,
            aux: None,
        })
        .collect();

    EcgRecord {
        header: RecordHeader {
            record_name: name.to_string(),
            num_signals: 2,
            sampling_rate: fs,
            num_samples: n,
            signals: vec![
                signal_spec(ch1.first().copied().unwrap_or(0), "CH1"),
                signal_spec(ch2.first().copied().unwrap_or(0), "CH2"),
            ],
        },
        channels: vec![ch1, ch2],
        beat_annotations,
    }
}

/// Writes a record as `<name>.hea`, `<name>.dat` and `<name>.atr`, readable
/// by the normal loading path.
pub fn write_record_files(record: &EcgRecord, dir: &Path) -> Result<(), PipelineError> {
    let name = &record.header.record_name;
    let h = &record.header;

    let mut header = format!("{name} {} {} {}\n", h.num_signals, h.sampling_rate, h.num_samples);
    for spec in &h.signals {
        header.push_str(&format!(
            "{} 212 {}({})/{} {} {} {} 0 0 {}\n",
            spec.file_name,
            spec.adc_gain,
            spec.adc_baseline,
            spec.units,
            spec.adc_resolution,
            spec.adc_zero,
            spec.initial_value,
            spec.description,
        ));
    }
    std::fs::write(dir.join(format!("{name}.hea")), header)?;
    std::fs::write(dir.join(format!("{name}.dat")), encode_212(&record.channels)?)?;
    std::fs::write(
        dir.join(format!("{name}.atr")),
        encode_annotations(&record.beat_annotations)?,
    )?;
    Ok(())
}

/// Generates a corpus of synthetic records with varied rates and seeds and
/// writes them into `dir`. Returns the record names in order.
pub fn generate_corpus(
    dir: &Path,
    count: usize,
    duration_s: f64,
    fs: u32,
    seed: u64,
) -> Result<Vec<String>, PipelineError> {
    std::fs::create_dir_all(dir)?;
    let mut names = Vec::with_capacity(count);
    for i in 0..count {
        let name = format!("synth{i:02}");
        let bpm = 55.0 + ((i * 13) % 56) as f64;
        let record = generate_synthetic_record(bpm, duration_s, fs, seed.wrapping_add(i as u64), &name);
        write_record_files(&record, dir)?;
        names.push(name);
    }
    Ok(names)
}
