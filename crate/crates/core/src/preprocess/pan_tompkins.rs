//! QRS detection after Pan & Tompkins (1985), run offline on a whole record.
//!
//! Chain: 5–15 Hz band-pass, five-point derivative, squaring, 150 ms moving
//! window integration, then dual adaptive thresholds with a 200 ms refractory
//! period, T-wave slope check and search-back for missed beats. Filtering is
//! zero-phase and the integration window is centered, so detections line up
//! with the QRS without group-delay bookkeeping. Each detection is finally
//! moved to the raw ECG maximum within ±50 ms.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::scalar::Scalar;
use crate::types::TimeSeries;

use super::filter::{filtfilt, Biquad};
use super::tachogram::BeatTimes;
use super::PreprocessError;

/// Minimum ECG sampling rate accepted by the detector.
pub const MIN_ECG_RATE_HZ: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PanTompkinsParams {
    pub band_low_hz: f64,
    pub band_high_hz: f64,
    pub integration_window_s: f64,
    pub refractory_s: f64,
    /// Detections closer than this to the previous beat get the T-wave slope check.
    pub t_wave_window_s: f64,
    pub learning_s: f64,
    /// Search back once the gap exceeds this multiple of the running RR average.
    pub search_back_factor: f64,
    pub refine_window_s: f64,
}

impl Default for PanTompkinsParams {
    fn default() -> Self {
        Self {
            band_low_hz: 5.0,
            band_high_hz: 15.0,
            integration_window_s: 0.150,
            refractory_s: 0.200,
            t_wave_window_s: 0.360,
            learning_s: 2.0,
            search_back_factor: 1.66,
            refine_window_s: 0.050,
        }
    }
}

/// R-peak times with the default parameters.
pub fn detect_r_peaks<T: Scalar>(ecg: &TimeSeries<T>) -> Result<BeatTimes, PreprocessError> {
    detect_r_peaks_with(ecg, &PanTompkinsParams::default())
}

pub fn detect_r_peaks_with<T: Scalar>(
    ecg: &TimeSeries<T>,
    params: &PanTompkinsParams,
) -> Result<BeatTimes, PreprocessError> {
    let fs = ecg.sample_rate_hz();
    if fs < MIN_ECG_RATE_HZ {
        return Err(PreprocessError::RateTooLow(fs));
    }
    let raw: Vec<f64> = ecg.values().iter().map(|v| v.as_f64()).collect();
    let n = raw.len();
    let samples = |secs: f64| ((secs * fs).round() as usize).max(1);

    let band = [
        Biquad::<f64>::highpass(params.band_low_hz, fs, FRAC_1_SQRT_2),
        Biquad::<f64>::lowpass(params.band_high_hz, fs, FRAC_1_SQRT_2),
    ];
    let filtered = filtfilt(&band, &raw);

    let mut slope = vec![0.0; n];
    for i in 2..n.saturating_sub(2) {
        slope[i] =
            (-filtered[i - 2] - 2.0 * filtered[i - 1] + 2.0 * filtered[i + 1] + filtered[i + 2])
                * fs
                / 8.0;
    }
    let energy: Vec<f64> = slope.iter().map(|d| d * d).collect();

    let width = samples(params.integration_window_s);
    let half = width / 2;
    let integrated = centered_moving_average(&energy, width);

    let refractory = samples(params.refractory_s);
    let candidates = dominant_peaks(&integrated, refractory / 2);

    let max_slope = |c: usize| {
        let lo = c.saturating_sub(half);
        let hi = (c + half + 1).min(n);
        slope[lo..hi].iter().fold(0.0f64, |m, d| m.max(d.abs()))
    };

    let learn = samples(params.learning_s).min(n);
    let learn_max = integrated[..learn].iter().copied().fold(0.0, f64::max);
    let learn_mean = integrated[..learn].iter().sum::<f64>() / learn as f64;
    let mut detector = Thresholds::new(learn_max / 3.0, learn_mean / 2.0);

    let t_wave = samples(params.t_wave_window_s);
    let mut qrs: Vec<usize> = Vec::new();
    let mut rr_recent: Vec<usize> = Vec::new();
    let mut noise_peaks: Vec<usize> = Vec::new();

    let accept = |idx: usize, qrs: &mut Vec<usize>, rr_recent: &mut Vec<usize>| {
        if let Some(&last) = qrs.last() {
            rr_recent.push(idx - last);
            if rr_recent.len() > 8 {
                rr_recent.remove(0);
            }
        }
        qrs.push(idx);
    };

    for &c in &candidates {
        let peak = integrated[c];

        if let (Some(&last), false) = (qrs.last(), rr_recent.is_empty()) {
            let rr_avg = rr_recent.iter().sum::<usize>() as f64 / rr_recent.len() as f64;
            if (c - last) as f64 > params.search_back_factor * rr_avg {
                let missed = noise_peaks
                    .iter()
                    .copied()
                    .filter(|&p| p > last + refractory && p + refractory <= c)
                    .filter(|&p| integrated[p] > detector.secondary())
                    .max_by(|&a, &b| integrated[a].total_cmp(&integrated[b]).then(b.cmp(&a)));
                if let Some(p) = missed {
                    detector.signal_from_search_back(integrated[p]);
                    accept(p, &mut qrs, &mut rr_recent);
                }
            }
        }

        if let Some(&last) = qrs.last() {
            if c < last + refractory {
                continue;
            }
        }

        if peak > detector.primary() {
            let is_t_wave = match qrs.last() {
                Some(&last) if c - last < t_wave => max_slope(c) < 0.5 * max_slope(last),
                _ => false,
            };
            if is_t_wave {
                detector.noise(peak);
                noise_peaks.push(c);
            } else {
                detector.signal(peak);
                accept(c, &mut qrs, &mut rr_recent);
            }
        } else {
            detector.noise(peak);
            noise_peaks.push(c);
        }
    }

    let refine = samples(params.refine_window_s);
    let mut peaks: Vec<usize> = Vec::with_capacity(qrs.len());
    for &c in &qrs {
        let lo = c.saturating_sub(half);
        let hi = (c + half + 1).min(n);
        let centre = argmax_by(lo, hi, |i| filtered[i].abs());
        let lo = centre.saturating_sub(refine);
        let hi = (centre + refine + 1).min(n);
        let r = argmax_by(lo, hi, |i| raw[i]);
        if peaks.last().is_none_or(|&prev| r >= prev + refractory) {
            peaks.push(r);
        }
    }

    if peaks.len() < 2 {
        return Err(PreprocessError::NoBeatsFound(peaks.len()));
    }
    BeatTimes::new(peaks.into_iter().map(|i| ecg.time_of(i)).collect())
}

/// First index of the maximum of `key` over `lo..hi`.
fn argmax_by(lo: usize, hi: usize, key: impl Fn(usize) -> f64) -> usize {
    (lo..hi).fold(lo, |best, i| if key(i) > key(best) { i } else { best })
}

fn centered_moving_average(x: &[f64], width: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, &v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    let before = width / 2;
    let after = width - before;
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(before);
            let hi = (i + after).min(n);
            (prefix[hi] - prefix[lo]) / width as f64
        })
        .collect()
}

/// Indices that hold the first occurrence of the maximum within
/// `±radius` samples and are strictly positive.
fn dominant_peaks(x: &[f64], radius: usize) -> Vec<usize> {
    let n = x.len();
    (0..n)
        .filter(|&i| {
            let v = x[i];
            if v <= 0.0 {
                return false;
            }
            let lo = i.saturating_sub(radius);
            let hi = (i + radius + 1).min(n);
            x[lo..i].iter().all(|&u| u < v) && x[i + 1..hi].iter().all(|&u| u <= v)
        })
        .collect()
}

/// Running signal/noise peak levels and the derived thresholds.
struct Thresholds {
    signal_level: f64,
    noise_level: f64,
}

impl Thresholds {
    fn new(signal_level: f64, noise_level: f64) -> Self {
        Self {
            signal_level,
            noise_level,
        }
    }

    fn primary(&self) -> f64 {
        self.noise_level + 0.25 * (self.signal_level - self.noise_level)
    }

    fn secondary(&self) -> f64 {
        0.5 * self.primary()
    }

    fn signal(&mut self, peak: f64) {
        self.signal_level = 0.125 * peak + 0.875 * self.signal_level;
    }

    fn signal_from_search_back(&mut self, peak: f64) {
        self.signal_level = 0.25 * peak + 0.75 * self.signal_level;
    }

    fn noise(&mut self, peak: f64) {
        self.noise_level = 0.125 * peak + 0.875 * self.noise_level;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Triangular spikes (20 ms wide, unit height) centred on `beats`.
    fn spike_train(
        beats: &[f64],
        rate: f64,
        secs: f64,
        noise_sd: f64,
        seed: u64,
    ) -> TimeSeries<f64> {
        let n = (rate * secs) as usize;
        let mut v = vec![0.0; n];
        for &b in beats {
            let lo = ((b - 0.01) * rate).floor().max(0.0) as usize;
            let hi = (((b + 0.01) * rate).ceil() as usize).min(n - 1);
            for (i, sample) in v.iter_mut().enumerate().take(hi + 1).skip(lo) {
                let t = i as f64 / rate;
                *sample += (1.0 - (t - b).abs() / 0.01).max(0.0);
            }
        }
        if noise_sd > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dist = Normal::new(0.0, noise_sd).unwrap();
            for s in &mut v {
                *s += dist.sample(&mut rng);
            }
        }
        TimeSeries::new(v, rate, 0.0).unwrap()
    }

    fn one_hz_beats() -> Vec<f64> {
        (0..29).map(|k| 0.5 + k as f64).collect()
    }

    #[test]
    fn clean_one_hz_train() {
        let beats = one_hz_beats();
        let found = detect_r_peaks(&spike_train(&beats, 250.0, 30.0, 0.0, 0)).unwrap();
        assert_eq!(found.len(), beats.len());
        for rr in found.rr_intervals_s() {
            assert!((rr - 1.0).abs() <= 0.004, "rr {rr}");
        }
    }

    #[test]
    fn noisy_one_hz_train() {
        let beats = one_hz_beats();
        let found = detect_r_peaks(&spike_train(&beats, 250.0, 30.0, 0.05, 7)).unwrap();
        assert_eq!(found.len(), beats.len());
        for rr in found.rr_intervals_s() {
            assert!((rr - 1.0).abs() <= 0.008, "rr {rr}");
        }
    }

    #[test]
    fn flat_line_has_no_beats() {
        let ts = TimeSeries::new(vec![0.0f64; 7500], 250.0, 0.0).unwrap();
        assert!(matches!(
            detect_r_peaks(&ts),
            Err(PreprocessError::NoBeatsFound(0))
        ));
    }

    #[test]
    fn low_rate_rejected() {
        let ts = TimeSeries::new(vec![0.0f64; 100], 50.0, 0.0).unwrap();
        assert!(matches!(
            detect_r_peaks(&ts),
            Err(PreprocessError::RateTooLow(_))
        ));
    }

    #[test]
    fn missed_beat_recovered_by_search_back() {
        // one spike at 0.42 amplitude (~18% of the integrated energy): below
        // the primary threshold, above the secondary one
        let beats = one_hz_beats();
        let mut ts = spike_train(&beats, 250.0, 30.0, 0.0, 0).into_values();
        let small = (15.5 * 250.0) as usize;
        for v in &mut ts[small - 5..=small + 5] {
            *v *= 0.42;
        }
        let found = detect_r_peaks(&TimeSeries::new(ts, 250.0, 0.0).unwrap()).unwrap();
        assert_eq!(found.len(), beats.len());
    }

    #[test]
    fn recall_over_heart_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for bpm in [40.0, 60.0, 75.0, 100.0, 130.0, 150.0, 180.0] {
            let rr = 60.0 / bpm;
            let jitter = Normal::new(0.0, 0.01 * rr).unwrap();
            let mut beats = vec![0.4];
            while *beats.last().unwrap() + rr < 59.5 {
                beats.push(beats.last().unwrap() + rr + jitter.sample(&mut rng));
            }
            let found =
                detect_r_peaks(&spike_train(&beats, 250.0, 60.0, 0.05, bpm as u64)).unwrap();
            let matched = beats
                .iter()
                .filter(|&&b| found.times_s().iter().any(|&f| (f - b).abs() <= 0.05))
                .count();
            let false_pos = found
                .times_s()
                .iter()
                .filter(|&&f| !beats.iter().any(|&b| (f - b).abs() <= 0.05))
                .count();
            assert!(
                matched as f64 >= 0.95 * beats.len() as f64,
                "{bpm} bpm: {matched}/{}",
                beats.len()
            );
            assert_eq!(false_pos, 0, "{bpm} bpm");
        }
    }
}
