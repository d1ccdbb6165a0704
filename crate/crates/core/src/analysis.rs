//! Ridge tracking on spectrograms and comparison against the analytic blade-tip
//! trajectories.

use crate::assembly::FastTimeStream;
use crate::radar_model::{md_instantaneous_freq, RadarParams, RotorTarget};
use crate::spectral::Spectrogram;

/// Strongest off-body bin of one spectrogram frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePoint {
    pub frame: usize,
    pub time_s: f64,
    /// Absolute frequency of the bin, unwrapped around the search center.
    pub freq_hz: f64,
    pub level_db: f64,
}

/// Frequency window searched for micro-Doppler ridges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeSearch {
    pub center_hz: f64,
    /// Bins farther than this from `center_hz` are ignored.
    pub half_band_hz: f64,
    /// Bins within this distance of `center_hz` are ignored (the body tone's main lobe).
    pub guard_hz: f64,
}

/// Per-frame maximum within the search band, outside the guard.
pub fn extract_ridge(spec: &Spectrogram, search: &RidgeSearch) -> Vec<RidgePoint> {
    let bins = spec.num_bins() as i64;
    let bin_hz = spec.bin_hz();
    let reach = (search.half_band_hz / bin_hz).floor() as i64;
    let center = search.center_hz / bin_hz;
    let first = (center - reach as f64).ceil() as i64;
    let last = (center + reach as f64).floor() as i64;
    let mut out = Vec::with_capacity(spec.num_frames());
    for frame in 0..spec.num_frames() {
        let row = spec.magnitude_db.row(frame);
        let mut best: Option<(i64, f64)> = None;
        for k in first..=last {
            let offset_hz = (k as f64 - center) * bin_hz;
            if offset_hz.abs() <= search.guard_hz {
                continue;
            }
            let level = row[k.rem_euclid(bins) as usize];
            if best.is_none_or(|(_, b)| level > b) {
                best = Some((k, level));
            }
        }
        if let Some((k, level_db)) = best {
            out.push(RidgePoint {
                frame,
                time_s: spec.frame_times_s[frame],
                freq_hz: k as f64 * bin_hz,
                level_db,
            });
        }
    }
    out
}

/// Analytic tip frequency of every blade at stream sample `index`, or `None`
/// when the sample lies in an idle gap.
pub fn tip_frequencies_at(
    params: &RadarParams,
    target: &RotorTarget,
    stream: &FastTimeStream,
    index: usize,
) -> Option<Vec<f64>> {
    if stream.interp_mask.get(index).copied().unwrap_or(true) {
        return None;
    }
    let period = stream.samples_per_chirp + stream.gap_samples;
    let (l, k) = (index / period, index % period);
    let t = k as f64 / stream.sample_rate_hz;
    Some(
        (0..target.num_blades())
            .map(|b| md_instantaneous_freq(params, target, b, t, l))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeMatch {
    /// Frames compared against the trajectories.
    pub frames_compared: usize,
    pub frames_matched: usize,
    /// Frames skipped because their center is interpolated or every blade sits inside the guard.
    pub frames_skipped: usize,
}

impl RidgeMatch {
    pub fn fraction(&self) -> f64 {
        if self.frames_compared == 0 {
            0.0
        } else {
            self.frames_matched as f64 / self.frames_compared as f64
        }
    }
}

/// Counts frames whose ridge lies within `tolerance_bins` of some blade's tip trajectory.
pub fn match_ridge(
    ridge: &[RidgePoint],
    spec: &Spectrogram,
    search: &RidgeSearch,
    params: &RadarParams,
    target: &RotorTarget,
    stream: &FastTimeStream,
    tolerance_bins: f64,
) -> RidgeMatch {
    let tol = tolerance_bins * spec.bin_hz();
    let mut result = RidgeMatch {
        frames_compared: 0,
        frames_matched: 0,
        frames_skipped: 0,
    };
    for point in ridge {
        let Some(tips) = tip_frequencies_at(params, target, stream, spec.frame_center(point.frame)) else {
            result.frames_skipped += 1;
            continue;
        };
        if tips.iter().all(|f| (f - search.center_hz).abs() <= search.guard_hz) {
            result.frames_skipped += 1;
            continue;
        }
        result.frames_compared += 1;
        if tips.iter().any(|f| (f - point.freq_hz).abs() <= tol) {
            result.frames_matched += 1;
        }
    }
    result
}

/// Dominant period of a uniformly sampled series: the first autocorrelation peak
/// after the zero-lag lobe reaching 80% of the tallest, refined by parabolic interpolation.
pub fn autocorrelation_period(series: &[f64], sample_interval_s: f64, min_lag: usize) -> Option<f64> {
    let n = series.len();
    if n < 4 {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let max_lag = n / 2;
    let acf: Vec<f64> = (0..=max_lag)
        .map(|lag| x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n - lag) as f64)
        .collect();
    if acf[0] <= 0.0 {
        return None;
    }
    // Skip the zero-lag lobe: start after the autocorrelation first turns negative.
    let start = acf.iter().position(|&v| v < 0.0)?.max(min_lag);
    let top = (start..max_lag).map(|l| acf[l]).fold(f64::NEG_INFINITY, f64::max);
    if top.is_nan() || top <= 0.0 {
        return None;
    }
    // Peaks at multiples of the period are about as tall; take the first one near the top.
    let lag = (start.max(1)..max_lag).find(|&l| acf[l] >= 0.8 * top && acf[l] >= acf[l - 1] && acf[l] >= acf[l + 1])?;
    let (a, b, c) = (acf[lag - 1], acf[lag], acf[lag + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
    Some((lag as f64 + shift.clamp(-0.5, 0.5)) * sample_interval_s)
}

/// Ridge offset from the center, resampled on a uniform time grid by linear
/// interpolation between ridge points.
pub fn ridge_offset_series(ridge: &[RidgePoint], center_hz: f64, step_s: f64) -> Vec<f64> {
    if ridge.len() < 2 {
        return Vec::new();
    }
    let t0 = ridge[0].time_s;
    let t1 = ridge[ridge.len() - 1].time_s;
    let count = ((t1 - t0) / step_s).floor() as usize + 1;
    let mut j = 0;
    (0..count)
        .map(|i| {
            let t = t0 + i as f64 * step_s;
            while j + 2 < ridge.len() && ridge[j + 1].time_s <= t {
                j += 1;
            }
            let (a, b) = (&ridge[j], &ridge[j + 1]);
            let w = if b.time_s > a.time_s {
                ((t - a.time_s) / (b.time_s - a.time_s)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (a.freq_hz + w * (b.freq_hz - a.freq_hz)) - center_hz
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn period_of_a_sampled_sinusoid() {
        let dt = 1e-4;
        let series: Vec<f64> = (0..2000).map(|i| (TAU * i as f64 * dt / 5e-3).sin()).collect();
        let p = autocorrelation_period(&series, dt, 1).unwrap();
        assert!((p - 5e-3).abs() < 0.01 * 5e-3, "{p}");
    }

    #[test]
    fn period_of_a_square_wave_with_harmonics() {
        let dt = 1e-4;
        let series: Vec<f64> = (0..3000)
            .map(|i| {
                if ((i as f64 * dt / 7e-3).fract()) < 0.3 {
                    1.0
                } else {
                    -0.2
                }
            })
            .collect();
        let p = autocorrelation_period(&series, dt, 1).unwrap();
        assert!((p - 7e-3).abs() < 0.02 * 7e-3, "{p}");
    }

    #[test]
    fn constant_series_has_no_period() {
        assert!(autocorrelation_period(&[1.0; 100], 1.0, 1).is_none());
    }

    #[test]
    fn offset_series_interpolates() {
        let pts: Vec<RidgePoint> = [(0.0, 10.0), (1.0, 20.0), (3.0, 0.0)]
            .iter()
            .enumerate()
            .map(|(frame, &(time_s, freq_hz))| RidgePoint {
                frame,
                time_s,
                freq_hz,
                level_db: 0.0,
            })
            .collect();
        let s = ridge_offset_series(&pts, 5.0, 0.5);
        assert_eq!(s, [5.0, 10.0, 15.0, 10.0, 5.0, 0.0, -5.0]);
    }
}
