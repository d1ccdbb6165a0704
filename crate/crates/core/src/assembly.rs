//! Analysis signals built from a chirp matrix: a slow-time column, a
//! demodulated matrix, and fast-time streams of appended chirps.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::radar_model::{body_phase, ChirpMatrix};
use crate::spectral::range_dft;

/// Appended fast-time samples with idle-gap bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct FastTimeStream {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    /// True on samples synthesized inside an idle gap.
    pub interp_mask: Vec<bool>,
    /// Index of the first sample of each chirp.
    pub chirp_boundaries: Vec<usize>,
    pub samples_per_chirp: usize,
    /// Samples inserted between consecutive chirps.
    pub gap_samples: usize,
    pub chirp_interval_s: f64,
}

impl FastTimeStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn interpolated_count(&self) -> usize {
        self.interp_mask.iter().filter(|&&m| m).count()
    }

    /// Absolute time of stream sample `index`.
    ///
    /// Sample `k` of chirp `l` sits at `l * T_cri + k / fs`; gap samples continue
    /// the preceding chirp's fast-time clock.
    pub fn sample_time(&self, index: usize) -> f64 {
        let period = self.samples_per_chirp + self.gap_samples;
        let (l, k) = (index / period, index % period);
        l as f64 * self.chirp_interval_s + k as f64 / self.sample_rate_hz
    }
}

/// Range bin with the largest mean magnitude across chirps.
pub fn strongest_range_bin(chirps: &ChirpMatrix) -> usize {
    let spectra = range_dft(chirps);
    let mut best = (0, f64::NEG_INFINITY);
    for (k, col) in spectra.columns().into_iter().enumerate() {
        let mean = col.iter().map(|z| z.norm()).sum::<f64>();
        if mean > best.1 {
            best = (k, mean);
        }
    }
    best.0
}

/// One range-DFT column across all chirps, sampled at `f_crf`.
pub fn stmdse_extract(chirps: &ChirpMatrix, range_bin: usize) -> Result<Vec<Complex64>> {
    let n = chirps.samples_per_chirp();
    if range_bin >= n {
        return Err(Error::invalid("range_bin", format!("{range_bin} is outside 0..{n}")));
    }
    Ok(range_dft(chirps).column(range_bin).to_vec())
}

/// Multiplies every sample by the conjugate body phase for `(range_m, velocity_mps)`.
pub fn ftmdse_demodulate(chirps: &ChirpMatrix, range_m: f64, velocity_mps: f64) -> ChirpMatrix {
    let p = &chirps.params;
    let samples = Array2::from_shape_fn(chirps.samples.dim(), |(l, n)| {
        chirps.samples[[l, n]] * Complex64::from_polar(1.0, -body_phase(p, range_m, velocity_mps, n, l))
    });
    ChirpMatrix {
        samples,
        params: chirps.params,
    }
}

/// Chirps concatenated back to back, ignoring the idle time.
pub fn append_raw(chirps: &ChirpMatrix) -> FastTimeStream {
    append(chirps, 0)
}

/// Chirps concatenated with `Q` samples per idle gap filled by a straight line
/// (real and imaginary parts independently) from the last sample of chirp `l`
/// toward the first sample of chirp `l + 1`.
pub fn append_with_linear_fit(chirps: &ChirpMatrix) -> FastTimeStream {
    append(chirps, chirps.params.idle_samples())
}

fn append(chirps: &ChirpMatrix, gap: usize) -> FastTimeStream {
    let (l, n) = chirps.samples.dim();
    let total = l * n + l.saturating_sub(1) * gap;
    let mut samples = Vec::with_capacity(total);
    let mut interp_mask = Vec::with_capacity(total);
    let mut chirp_boundaries = Vec::with_capacity(l);
    for i in 0..l {
        chirp_boundaries.push(samples.len());
        samples.extend(chirps.samples.row(i).iter().copied());
        interp_mask.extend(std::iter::repeat_n(false, n));
        if i + 1 < l && gap > 0 && n > 0 {
            let last = chirps.samples[[i, n - 1]];
            let next = chirps.samples[[i + 1, 0]];
            samples.extend((0..gap).map(|q| last + (next - last) * (q as f64 / gap as f64)));
            interp_mask.extend(std::iter::repeat_n(true, gap));
        }
    }
    FastTimeStream {
        samples,
        sample_rate_hz: chirps.params.sample_rate_hz,
        interp_mask,
        chirp_boundaries,
        samples_per_chirp: n,
        gap_samples: gap,
        chirp_interval_s: chirps.params.chirp_interval_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_model::{synth_scene, RadarParams, RotorTarget};

    fn params(chirps: usize) -> RadarParams {
        RadarParams {
            num_chirps: chirps,
            ..RadarParams::table1()
        }
    }

    fn tiny(rows: &[&[Complex64]], q: usize) -> ChirpMatrix {
        let n = rows[0].len();
        // Pick an interval that yields exactly `q` idle samples.
        let p = RadarParams {
            num_chirps: rows.len(),
            sample_rate_hz: 1.0,
            chirp_duration_s: n as f64,
            chirp_interval_s: (n + q) as f64,
            ..RadarParams::table1()
        };
        assert_eq!(p.idle_samples(), q);
        let flat: Vec<Complex64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ChirpMatrix {
            samples: Array2::from_shape_vec((rows.len(), n), flat).unwrap(),
            params: p,
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn two_point_line_in_the_gap() {
        let m = tiny(
            &[
                &[c(9.0, 0.0), c(8.0, 0.0), c(7.0, 0.0), c(0.0, 0.0)],
                &[c(1.0, 1.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)],
            ],
            2,
        );
        let s = append_with_linear_fit(&m);
        assert_eq!(s.len(), 2 * 4 + 2);
        assert_eq!(&s.samples[4..6], &[c(0.0, 0.0), c(0.5, 0.5)]);
        assert_eq!(
            s.interp_mask,
            [false, false, false, false, true, true, false, false, false, false]
        );
        assert_eq!(s.chirp_boundaries, [0, 6]);
    }

    #[test]
    fn raw_append_repeats_identical_rows() {
        let row = [c(1.0, 2.0), c(3.0, 4.0), c(5.0, 6.0)];
        let m = tiny(&[&row, &row], 3);
        let s = append_raw(&m);
        assert_eq!(s.samples, [row, row].concat());
        assert_eq!(s.interpolated_count(), 0);
        assert_eq!(s.chirp_boundaries, [0, 3]);
    }

    #[test]
    fn stream_lengths_for_table1() {
        let p = params(8);
        let m = ChirpMatrix::zeros(p);
        assert_eq!(append_raw(&m).len(), 8 * 512);
        let s = append_with_linear_fit(&m);
        assert_eq!(s.len(), 8 * 512 + 7 * 10);
        assert_eq!(s.interpolated_count(), 70);
    }

    #[test]
    fn sample_time_follows_chirp_interval() {
        let p = params(4);
        let s = append_with_linear_fit(&ChirpMatrix::zeros(p));
        let ts = 1.0 / p.sample_rate_hz;
        assert_eq!(s.sample_time(0), 0.0);
        assert!((s.sample_time(511) - 511.0 * ts).abs() < 1e-15);
        assert!((s.sample_time(512 + 3) - 515.0 * ts).abs() < 1e-15);
        assert!((s.sample_time(522) - p.chirp_interval_s).abs() < 1e-15);
        assert!((s.sample_time(3 * 522 + 7) - (3.0 * p.chirp_interval_s + 7.0 * ts)).abs() < 1e-15);
    }

    #[test]
    fn stationary_body_column_is_constant() {
        let p = params(16);
        let m = synth_scene(&p, &RotorTarget::point(20.0, 0.0, 1.0), f64::INFINITY, 0.0, 0).unwrap();
        let bin = strongest_range_bin(&m);
        assert_eq!(bin, 137);
        let col = stmdse_extract(&m, bin).unwrap();
        assert_eq!(col.len(), 16);
        for z in &col {
            assert!((z - col[0]).norm() < 1e-9 * col[0].norm());
        }
        assert!(stmdse_extract(&m, 512).is_err());
    }

    #[test]
    fn demodulation_with_exact_state_is_constant() {
        let p = params(4);
        let m = synth_scene(&p, &RotorTarget::point(20.0, 3.0, 0.7), f64::INFINITY, 0.0, 0).unwrap();
        let d = ftmdse_demodulate(&m, 20.0, 3.0);
        for z in d.samples.iter() {
            assert!((z - Complex64::new(0.7, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn demodulation_residual_tone_from_range_error() {
        let p = params(1);
        let m = synth_scene(&p, &RotorTarget::point(20.0, 0.0, 1.0), f64::INFINITY, 0.0, 0).unwrap();
        let delta = 1.5;
        let d = ftmdse_demodulate(&m, 20.0 - delta, 0.0);
        let expected = 2.0 * p.chirp_rate_hz_per_s * delta / p.propagation_speed_mps;
        let row = d.chirp(0);
        // Mean phase increment per sample gives the tone frequency.
        let inc: Complex64 = row.iter().zip(row.iter().skip(1)).map(|(a, b)| b * a.conj()).sum();
        let freq = inc.arg() * p.sample_rate_hz / std::f64::consts::TAU;
        assert!((freq - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn fitted_stream_restricted_to_chirps_equals_raw() {
        let p = params(6);
        let m = synth_scene(&p, &RotorTarget::evenly_spaced(20.0, 3, 0.06, 6000.0), 5.0, 0.0, 3).unwrap();
        let raw = append_raw(&m);
        let fit = append_with_linear_fit(&m);
        let kept: Vec<Complex64> = fit
            .samples
            .iter()
            .zip(&fit.interp_mask)
            .filter(|(_, &masked)| !masked)
            .map(|(z, _)| *z)
            .collect();
        assert_eq!(kept, raw.samples);
    }
}
