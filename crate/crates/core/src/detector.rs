//! Pan-Tompkins R-peak detection, parameterized by sampling rate.
//!
//! The classic stage cascade — bandpass, derivative, squaring, moving-window
//! integration, adaptive dual-threshold peak picking — with every stage
//! designed from the configured rate, so the same detector runs on original
//! 360 Hz signals and on compressed measurements at 360·M/N Hz without
//! resampling. All filter stages are linear phase; their group delays are
//! compensated analytically so reported peak indices live on the input
//! signal's own timescale.

use serde::Serialize;
use thiserror::Error;

use crate::sensing::SensingConfig;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("bandpass edges ({low} Hz, {high} Hz) must satisfy 0 < low < high < {nyquist} Hz")]
    InvalidBand { low: f64, high: f64, nyquist: f64 },

    #[error("sampling rate must be positive, got {0}")]
    InvalidRate(f64),

    #[error("integration window of {seconds} s is shorter than one sample at {rate} Hz")]
    WindowTooShort { seconds: f64, rate: f64 },

    #[error("derivative span {0} is not supported (use 2 or 4)")]
    UnsupportedDerivativeSpan(usize),

    #[error("signal of {len} samples is shorter than the {needed}-sample minimum")]
    TooShort { len: usize, needed: usize },

    #[error("signal of {len} samples does not cover the {needed}-sample learning phase")]
    InsufficientData { len: usize, needed: usize },
}

/// Detector parameters. Windows are in seconds and band edges in Hz so the
/// stages rescale with the sampling rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DetectorConfig {
    pub sampling_rate: f64,
    pub bandpass_low: f64,
    pub bandpass_high: f64,
    /// Nonzero taps of the symmetric derivative kernel: 4 selects the
    /// Pan-Tompkins five-point kernel, 2 the plain central difference.
    pub derivative_span: usize,
    /// Moving integration window, seconds.
    pub integration_window: f64,
    /// Minimum spacing between reported peaks, seconds.
    pub refractory: f64,
    /// Window after a QRS within which a low-slope peak is discarded as a
    /// T wave, seconds.
    pub t_wave_window: f64,
    /// Enable RR-gap searchback at the lower threshold.
    pub searchback: bool,
    /// Running-estimate update coefficient for signal peaks.
    pub signal_update: f64,
    /// Running-estimate update coefficient for noise peaks.
    pub noise_update: f64,
    /// Position of the detection threshold between noise and signal levels.
    pub threshold_fraction: f64,
}

impl DetectorConfig {
    pub fn for_rate(sampling_rate: f64) -> Self {
        Self {
            sampling_rate,
            bandpass_low: 5.0,
            bandpass_high: 15.0,
            derivative_span: 4,
            integration_window: 0.150,
            refractory: 0.200,
            t_wave_window: 0.360,
            searchback: true,
            signal_update: 0.125,
            noise_update: 0.125,
            threshold_fraction: 0.25,
        }
    }

    fn validate(&self) -> Result<(), DetectError> {
        if self.sampling_rate.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(DetectError::InvalidRate(self.sampling_rate));
        }
        let nyquist = self.sampling_rate / 2.0;
        if !(self.bandpass_low > 0.0 && self.bandpass_low < self.bandpass_high
            && self.bandpass_high < nyquist)
        {
            return Err(DetectError::InvalidBand {
                low: self.bandpass_low,
                high: self.bandpass_high,
                nyquist,
            });
        }
        if self.integration_samples() < 1 {
            return Err(DetectError::WindowTooShort {
                seconds: self.integration_window,
                rate: self.sampling_rate,
            });
        }
        if self.derivative_span != 2 && self.derivative_span != 4 {
            return Err(DetectError::UnsupportedDerivativeSpan(self.derivative_span));
        }
        Ok(())
    }

    /// Integration window in samples: round(0.150 · fs), at least 1.
    pub fn integration_samples(&self) -> usize {
        (self.integration_window * self.sampling_rate).round() as usize
    }

    fn refractory_samples(&self) -> usize {
        (self.refractory * self.sampling_rate).round() as usize
    }

    fn t_wave_samples(&self) -> usize {
        (self.t_wave_window * self.sampling_rate).round() as usize
    }

    fn learning_samples(&self) -> usize {
        (2.0 * self.sampling_rate).ceil() as usize
    }

    /// Bandpass FIR length: about half a second of taps, odd so the group
    /// delay is an integer number of samples.
    fn bandpass_taps(&self) -> usize {
        let taps = (0.5 * self.sampling_rate).round().max(5.0) as usize;
        if taps.is_multiple_of(2) {
            taps + 1
        } else {
            taps
        }
    }
}

/// Detected R peaks on one signal.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionResult {
    /// Strictly increasing sample indices in the analyzed signal's own
    /// timescale, at least one refractory interval apart.
    pub peak_indices: Vec<usize>,
    pub sampling_rate: f64,
    /// Cumulative group delay (samples) of the linear-phase stages that was
    /// compensated while mapping envelope peaks back to signal indices.
    pub total_delay: usize,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Windowed-sinc linear-phase bandpass kernel (Hamming window, odd length).
///
/// The taps are shifted by their mean so the DC gain is exactly zero;
/// window truncation otherwise leaves a small residual that would let
/// baseline offsets bleed through.
fn design_bandpass_kernel(config: &DetectorConfig) -> Vec<f64> {
    let taps = config.bandpass_taps();
    let half = (taps - 1) as f64 / 2.0;
    let fs = config.sampling_rate;
    let (fl, fh) = (config.bandpass_low, config.bandpass_high);
    let mut kernel: Vec<f64> = (0..taps)
        .map(|k| {
            let m = k as f64 - half;
            let ideal =
                2.0 * fh / fs * sinc(2.0 * fh * m / fs) - 2.0 * fl / fs * sinc(2.0 * fl * m / fs);
            let window = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * k as f64 / (taps - 1) as f64).cos();
            ideal * window
        })
        .collect();
    let dc = kernel.iter().sum::<f64>() / taps as f64;
    for h in &mut kernel {
        *h -= dc;
    }
    kernel
}

/// Convolves with an odd-length symmetric kernel, center-aligned so the
/// output has zero net delay. Samples beyond the ends are taken as zero.
fn convolve_centered(x: &[f64], kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() - 1) / 2;
    let n = x.len();
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &h) in kernel.iter().enumerate() {
            let j = i as isize + half as isize - k as isize;
            if j >= 0 && (j as usize) < n {
                acc += h * x[j as usize];
            }
        }
        *o = acc;
    }
    out
}

/// Linear-phase bandpass stage.
///
/// The signal mean is removed first so the zero-padded convolution does not
/// manufacture step transients at the record edges; the bandpass rejects DC
/// regardless. Output is delay-compensated (center-aligned).
pub fn bandpass(signal: &[f64], config: &DetectorConfig) -> Result<Vec<f64>, DetectError> {
    config.validate()?;
    let taps = config.bandpass_taps();
    if signal.len() <= taps {
        return Err(DetectError::TooShort {
            len: signal.len(),
            needed: taps + 1,
        });
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let centered: Vec<f64> = signal.iter().map(|&v| v - mean).collect();
    Ok(convolve_centered(&centered, &design_bandpass_kernel(config)))
}

/// Symmetric derivative stage, scaled by the sampling rate so slopes are
/// comparable across rates. Zero-delay; the first and last span/2 samples
/// are zero.
pub fn derivative(signal: &[f64], config: &DetectorConfig) -> Result<Vec<f64>, DetectError> {
    config.validate()?;
    let n = signal.len();
    if n < config.derivative_span + 1 {
        return Err(DetectError::TooShort {
            len: n,
            needed: config.derivative_span + 1,
        });
    }
    let fs = config.sampling_rate;
    let mut out = vec![0.0; n];
    match config.derivative_span {
        4 => {
            // (-x[i-2] - 2x[i-1] + 2x[i+1] + x[i+2]) · fs/8
            for i in 2..n - 2 {
                out[i] = (-signal[i - 2] - 2.0 * signal[i - 1]
                    + 2.0 * signal[i + 1]
                    + signal[i + 2])
                    * fs
                    / 8.0;
            }
        }
        2 => {
            for i in 1..n - 1 {
                out[i] = (signal[i + 1] - signal[i - 1]) * fs / 2.0;
            }
        }
        _ => unreachable!("validated"),
    }
    Ok(out)
}

/// Squaring followed by a trailing moving-window mean of
/// `integration_samples()` samples. Nonnegative by construction; the window
/// contributes a group delay of about w/2 samples, compensated downstream.
pub fn square_and_integrate(signal: &[f64], config: &DetectorConfig) -> Result<Vec<f64>, DetectError> {
    config.validate()?;
    let w = config.integration_samples();
    let mut out = vec![0.0; signal.len()];
    let mut running = 0.0;
    for i in 0..signal.len() {
        running += signal[i] * signal[i];
        if i >= w {
            running -= signal[i - w] * signal[i - w];
        }
        out[i] = running / w as f64;
    }
    Ok(out)
}

/// Indices of strict local maxima; the first sample of a plateau counts.
fn local_maxima(env: &[f64]) -> Vec<usize> {
    (1..env.len().saturating_sub(1))
        .filter(|&i| env[i] > env[i - 1] && env[i] >= env[i + 1])
        .collect()
}

/// Largest |slope| from the derivative stage in the window trailing an
/// envelope index; the QRS upstroke precedes its envelope peak.
fn peak_slope(deriv: &[f64], env_idx: usize, w: usize) -> f64 {
    let lo = env_idx.saturating_sub(w);
    deriv[lo..=env_idx.min(deriv.len() - 1)]
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
}

struct ThresholdState {
    spki: f64,
    npki: f64,
    threshold1: f64,
    threshold2: f64,
    fraction: f64,
    signal_update: f64,
    noise_update: f64,
}

impl ThresholdState {
    fn new(spki: f64, npki: f64, fraction: f64, signal_update: f64, noise_update: f64) -> Self {
        let mut s = Self {
            spki,
            npki,
            threshold1: 0.0,
            threshold2: 0.0,
            fraction,
            signal_update,
            noise_update,
        };
        s.recompute();
        s
    }

    fn recompute(&mut self) {
        self.threshold1 = self.npki + self.fraction * (self.spki - self.npki);
        self.threshold2 = 0.5 * self.threshold1;
    }

    fn signal_peak(&mut self, value: f64) {
        self.spki = self.signal_update * value + (1.0 - self.signal_update) * self.spki;
        self.recompute();
    }

    fn searchback_peak(&mut self, value: f64) {
        // Beats found by searchback pull the signal estimate up faster.
        self.spki = 0.25 * value + 0.75 * self.spki;
        self.recompute();
    }

    fn noise_peak(&mut self, value: f64) {
        self.npki = self.noise_update * value + (1.0 - self.noise_update) * self.npki;
        self.recompute();
    }
}

/// Running RR-interval averages used for the searchback trigger: the mean of
/// the last eight intervals, and of the last eight "regular" intervals.
struct RrTracker {
    recent: Vec<f64>,
    regular: Vec<f64>,
}

impl RrTracker {
    fn new() -> Self {
        Self {
            recent: Vec::with_capacity(8),
            regular: Vec::with_capacity(8),
        }
    }

    fn push(&mut self, rr: f64) {
        if self.recent.len() == 8 {
            self.recent.remove(0);
        }
        self.recent.push(rr);
        let within_limits = match self.regular_average() {
            Some(avg) => rr >= 0.92 * avg && rr <= 1.16 * avg,
            None => true,
        };
        if within_limits {
            if self.regular.len() == 8 {
                self.regular.remove(0);
            }
            self.regular.push(rr);
        }
    }

    fn regular_average(&self) -> Option<f64> {
        if self.regular.is_empty() {
            None
        } else {
            Some(self.regular.iter().sum::<f64>() / self.regular.len() as f64)
        }
    }
}

/// Runs the full detector on a signal.
///
/// The first two seconds are a learning phase that seeds the signal/noise
/// estimates from the envelope max and mean; peaks inside the learning
/// window are recovered on a second pass against the learned thresholds.
/// Envelope peaks are refined to the largest |bandpassed| sample within one
/// integration window, which handles negative-going QRS complexes, and the
/// refractory spacing is enforced on the refined indices.
pub fn detect_r_peaks(signal: &[f64], config: &DetectorConfig) -> Result<DetectionResult, DetectError> {
    config.validate()?;
    let n = signal.len();
    let learn = config.learning_samples();
    if n < learn {
        return Err(DetectError::InsufficientData { len: n, needed: learn });
    }

    let bp = bandpass(signal, config)?;
    let dv = derivative(&bp, config)?;
    let env = square_and_integrate(&dv, config)?;

    let w = config.integration_samples();
    let mwi_delay = w / 2;
    let refractory = config.refractory_samples();
    let t_wave_window = config.t_wave_samples();

    let candidates = local_maxima(&env);

    let learn_max = env[..learn].iter().fold(0.0f64, |m, &v| m.max(v));
    let learn_mean = env[..learn].iter().sum::<f64>() / learn as f64;
    let mut thresholds = ThresholdState::new(
        0.5 * learn_max,
        0.5 * learn_mean,
        config.threshold_fraction,
        config.signal_update,
        config.noise_update,
    );
    let initial_threshold1 = thresholds.threshold1;

    // Main pass over candidates past the learning window.
    let mut accepted_env: Vec<usize> = Vec::new();
    let mut last_qrs: Option<usize> = None;
    let mut last_qrs_slope = 0.0f64;
    let mut rr = RrTracker::new();

    let first_main = candidates.partition_point(|&c| c < learn);
    for ci in first_main..candidates.len() {
        let c = candidates[ci];

        // Searchback: the expected beat did not arrive, so revisit skipped
        // candidates in the gap against the lower threshold.
        if config.searchback {
            if let (Some(last), Some(avg)) = (last_qrs, rr.regular_average()) {
                if (c - last) as f64 > 1.66 * avg {
                    let sb = candidates[first_main..ci]
                        .iter()
                        .copied()
                        .filter(|&x| x > last + refractory && x + refractory <= c)
                        .filter(|&x| env[x] > thresholds.threshold2)
                        .max_by(|&a, &b| env[a].total_cmp(&env[b]).then(b.cmp(&a)));
                    if let Some(sb) = sb {
                        thresholds.searchback_peak(env[sb]);
                        rr.push((sb - last) as f64);
                        last_qrs = Some(sb);
                        last_qrs_slope = peak_slope(&dv, sb, w);
                        accepted_env.push(sb);
                    }
                }
            }
        }

        if let Some(last) = last_qrs {
            if c - last < refractory {
                continue; // same complex; not even a noise peak
            }
        }

        if env[c] > thresholds.threshold1 {
            // T-wave discrimination: a close-in peak with less than half the
            // preceding QRS slope is a repolarization wave, not a beat.
            let slope = peak_slope(&dv, c, w);
            let is_t_wave = match last_qrs {
                Some(last) => c - last < t_wave_window && slope < 0.5 * last_qrs_slope,
                None => false,
            };
            if is_t_wave {
                thresholds.noise_peak(env[c]);
                continue;
            }
            if let Some(last) = last_qrs {
                rr.push((c - last) as f64);
            }
            thresholds.signal_peak(env[c]);
            last_qrs = Some(c);
            last_qrs_slope = slope;
            accepted_env.push(c);
        } else {
            thresholds.noise_peak(env[c]);
        }
    }

    // Second pass: report learning-window peaks that clear the thresholds
    // learned from that window.
    let mut learning_env: Vec<usize> = Vec::new();
    for &c in &candidates[..first_main] {
        if env[c] <= initial_threshold1 {
            continue;
        }
        if let Some(&prev) = learning_env.last() {
            if c - prev < refractory {
                continue;
            }
        }
        if let Some(&first) = accepted_env.first() {
            if first - c < refractory {
                continue;
            }
        }
        learning_env.push(c);
    }
    let mut all_env = learning_env;
    all_env.extend(accepted_env);

    // Refine each envelope peak to the strongest bandpassed extremum within
    // one integration window, compensating the integrator delay.
    let mut refined: Vec<usize> = all_env
        .iter()
        .map(|&c| {
            let center = c.saturating_sub(mwi_delay);
            let lo = center.saturating_sub(w);
            let hi = (center + w).min(n - 1);
            (lo..=hi)
                .max_by(|&a, &b| bp[a].abs().total_cmp(&bp[b].abs()).then(b.cmp(&a)))
                .unwrap_or(center)
        })
        .collect();
    refined.sort_unstable();
    refined.dedup();

    // Refinement can pull two envelope peaks onto nearby extrema; keep the
    // stronger one whenever the refractory spacing is violated.
    let mut peaks: Vec<usize> = Vec::with_capacity(refined.len());
    for idx in refined {
        match peaks.last() {
            Some(&prev) if idx - prev < refractory => {
                if bp[idx].abs() > bp[prev].abs() {
                    *peaks.last_mut().unwrap() = idx;
                }
            }
            _ => peaks.push(idx),
        }
    }

    let bp_delay = (config.bandpass_taps() - 1) / 2;
    Ok(DetectionResult {
        peak_indices: peaks,
        sampling_rate: config.sampling_rate,
        total_delay: bp_delay + mwi_delay,
    })
}

/// Maps compressed-domain peak indices back to the original timescale:
/// measurement i came from samples [i·d, (i+1)·d), so its center is
/// i·d + d/2.
pub fn map_to_original_timescale(result: &DetectionResult, config: &SensingConfig) -> Vec<usize> {
    result
        .peak_indices
        .iter()
        .map(|&i| i * config.d + config.d / 2)
        .collect()
}
