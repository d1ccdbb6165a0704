//! Fast/slow-time DFTs, range-Doppler maps and short-time spectra.
//!
//! Forward transforms are unnormalized; [`inverse_rd`] applies `1 / (N L)`.

use std::f64::consts::TAU;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::radar_model::{ChirpMatrix, RadarParams};

/// dB value assigned to bins whose magnitude is below `1e-6`.
pub const DB_FLOOR: f64 = -120.0;

/// Per-chirp N-point DFT (rectangular window).
pub fn range_dft(chirps: &ChirpMatrix) -> Array2<Complex64> {
    let mut out = chirps.samples.clone();
    let n = out.ncols();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex64::default(); n];
    for mut row in out.rows_mut() {
        buf.iter_mut().zip(row.iter()).for_each(|(b, z)| *b = *z);
        fft.process(&mut buf);
        row.iter_mut().zip(&buf).for_each(|(z, b)| *z = *b);
    }
    out
}

/// Complex range-Doppler map, rows indexed by centered Doppler bin.
#[derive(Debug, Clone, PartialEq)]
pub struct RdMap {
    /// `(doppler_bin, range_bin)`
    pub values: Array2<Complex64>,
    pub range_axis_hz: Vec<f64>,
    pub doppler_axis_hz: Vec<f64>,
    pub params: RadarParams,
}

impl RdMap {
    pub fn num_doppler_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_range_bins(&self) -> usize {
        self.values.ncols()
    }

    /// Row holding zero Doppler.
    pub fn zero_doppler_row(&self) -> usize {
        self.num_doppler_bins() / 2
    }

    pub fn range_bin_hz(&self) -> f64 {
        self.params.sample_rate_hz / self.num_range_bins() as f64
    }

    pub fn doppler_bin_hz(&self) -> f64 {
        self.params.chirp_repetition_frequency_hz() / self.num_doppler_bins() as f64
    }

    pub fn magnitude_db(&self) -> Array2<f64> {
        self.values.mapv(|z| to_db(z.norm()))
    }
}

fn range_axis(params: &RadarParams, n: usize) -> Vec<f64> {
    (0..n).map(|k| k as f64 * params.sample_rate_hz / n as f64).collect()
}

fn doppler_axis(params: &RadarParams, l: usize) -> Vec<f64> {
    let step = params.chirp_repetition_frequency_hz() / l as f64;
    let center = (l / 2) as f64;
    (0..l).map(|i| (i as f64 - center) * step).collect()
}

/// Doppler DFT across chirps of the range spectra, zero Doppler moved to row `L / 2`.
pub fn rd_map(chirps: &ChirpMatrix) -> Result<RdMap> {
    let l = chirps.num_chirps();
    if l < 2 {
        return Err(Error::invalid(
            "num_chirps",
            "a range-Doppler map needs at least 2 chirps",
        ));
    }
    let mut values = range_dft(chirps);
    let fft = FftPlanner::new().plan_fft_forward(l);
    let mut buf = vec![Complex64::default(); l];
    let shift = l - l / 2;
    for mut col in values.axis_iter_mut(Axis(1)) {
        buf.iter_mut().zip(col.iter()).for_each(|(b, z)| *b = *z);
        fft.process(&mut buf);
        for (i, z) in col.iter_mut().enumerate() {
            *z = buf[(i + shift) % l];
        }
    }
    let n = values.ncols();
    Ok(RdMap {
        values,
        range_axis_hz: range_axis(&chirps.params, n),
        doppler_axis_hz: doppler_axis(&chirps.params, l),
        params: chirps.params,
    })
}

/// Exact inverse of [`rd_map`].
pub fn inverse_rd(map: &RdMap) -> ChirpMatrix {
    let (l, n) = map.values.dim();
    let mut values = map.values.clone();
    let mut planner = FftPlanner::new();
    let ifft_l = planner.plan_fft_inverse(l);
    let ifft_n = planner.plan_fft_inverse(n);
    let mut buf = vec![Complex64::default(); l];
    let half = l / 2;
    for mut col in values.axis_iter_mut(Axis(1)) {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = col[(j + half) % l];
        }
        ifft_l.process(&mut buf);
        col.iter_mut().zip(&buf).for_each(|(z, b)| *z = *b);
    }
    let mut row_buf = vec![Complex64::default(); n];
    let scale = 1.0 / (l * n) as f64;
    for mut row in values.rows_mut() {
        row_buf.iter_mut().zip(row.iter()).for_each(|(b, z)| *b = *z);
        ifft_n.process(&mut row_buf);
        row.iter_mut().zip(&row_buf).for_each(|(z, b)| *z = *b * scale);
    }
    ChirpMatrix {
        samples: values,
        params: map.params,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPeak {
    pub range_hz: f64,
    pub doppler_hz: f64,
    pub magnitude: f64,
    pub range_bin: usize,
    pub doppler_bin: usize,
}

/// Global magnitude maximum. Ties go to the lowest range bin, then the lowest Doppler bin.
pub fn rd_peak(map: &RdMap) -> RdPeak {
    let (l, n) = map.values.dim();
    let mut best = (0usize, 0usize, f64::NEG_INFINITY);
    for r in 0..n {
        for d in 0..l {
            let m = map.values[[d, r]].norm();
            if m > best.2 {
                best = (d, r, m);
            }
        }
    }
    let (doppler_bin, range_bin, magnitude) = best;
    RdPeak {
        range_hz: map.range_axis_hz[range_bin],
        doppler_hz: map.doppler_axis_hz[doppler_bin],
        magnitude,
        range_bin,
        doppler_bin,
    }
}

pub fn to_db(magnitude: f64) -> f64 {
    20.0 * magnitude.max(1e-6).log10()
}

/// Periodic Hann window.
pub fn hann(len: usize) -> Vec<f64> {
    (0..len)
        .map(|n| 0.5 - 0.5 * (TAU * n as f64 / len as f64).cos())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub window_length: usize,
    pub overlap_fraction: f64,
    /// DFT length is `window_length * pad_factor`.
    pub pad_factor: usize,
}

impl StftConfig {
    pub fn new(window_length: usize, overlap_fraction: f64) -> Self {
        Self {
            window_length,
            overlap_fraction,
            pad_factor: 1,
        }
    }

    pub fn hop(&self) -> usize {
        let overlap = (self.overlap_fraction * self.window_length as f64).round() as usize;
        (self.window_length - overlap.min(self.window_length - 1)).max(1)
    }
}

/// Magnitude STFT in dB, frames x bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitude_db: Array2<f64>,
    pub frame_times_s: Vec<f64>,
    pub freq_axis_hz: Vec<f64>,
    pub window_length: usize,
    pub hop: usize,
    pub sample_rate_hz: f64,
}

impl Spectrogram {
    pub fn num_frames(&self) -> usize {
        self.magnitude_db.nrows()
    }

    pub fn num_bins(&self) -> usize {
        self.magnitude_db.ncols()
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.num_bins() as f64
    }

    /// First input sample of `frame`.
    pub fn frame_start(&self, frame: usize) -> usize {
        frame * self.hop
    }

    /// Input sample at the middle of `frame`.
    pub fn frame_center(&self, frame: usize) -> usize {
        self.frame_start(frame) + self.window_length / 2
    }

    /// Bin whose center is closest to `freq_hz`, treating the axis as circular.
    pub fn nearest_bin(&self, freq_hz: f64) -> usize {
        let bins = self.num_bins() as f64;
        let k = (freq_hz / self.bin_hz()).round().rem_euclid(bins);
        k as usize % self.num_bins()
    }

    /// Recomputes frame times from a sample-index to time mapping, evaluated at frame centers.
    pub fn retime(&mut self, time_of_sample: impl Fn(usize) -> f64) {
        self.frame_times_s = (0..self.num_frames())
            .map(|f| time_of_sample(self.frame_center(f)))
            .collect();
    }

    /// Same spectrogram with bins reordered so the axis runs from `-fs/2` upward.
    pub fn centered(&self) -> Spectrogram {
        let nb = self.num_bins();
        let shift = nb - nb / 2;
        let bin = self.bin_hz();
        let mut out = self.clone();
        for (mut dst, src) in out.magnitude_db.rows_mut().into_iter().zip(self.magnitude_db.rows()) {
            for (i, d) in dst.iter_mut().enumerate() {
                *d = src[(i + shift) % nb];
            }
        }
        out.freq_axis_hz = (0..nb).map(|i| (i as f64 - (nb / 2) as f64) * bin).collect();
        out
    }

    /// Power in linear units (`|X|^2`).
    pub fn power(&self) -> Array2<f64> {
        self.magnitude_db.mapv(|db| 10f64.powf(db / 10.0))
    }
}

/// Hann-windowed STFT with the given window length and overlap.
pub fn spectrogram(
    signal: &[Complex64],
    sample_rate_hz: f64,
    window_length: usize,
    overlap_fraction: f64,
) -> Result<Spectrogram> {
    spectrogram_with(
        signal,
        sample_rate_hz,
        &StftConfig::new(window_length, overlap_fraction),
    )
}

pub fn spectrogram_with(signal: &[Complex64], sample_rate_hz: f64, config: &StftConfig) -> Result<Spectrogram> {
    let w = config.window_length;
    if w == 0 {
        return Err(Error::invalid("window_length", "must be >= 1"));
    }
    if !(0.0..1.0).contains(&config.overlap_fraction) {
        return Err(Error::invalid(
            "overlap_fraction",
            format!("must lie in [0, 1), got {}", config.overlap_fraction),
        ));
    }
    if config.pad_factor == 0 {
        return Err(Error::invalid("pad_factor", "must be >= 1"));
    }
    if signal.len() < w {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            required: w,
        });
    }
    let hop = config.hop();
    let frames = (signal.len() - w) / hop + 1;
    let nfft = w * config.pad_factor;
    let window = hann(w);
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut magnitude_db = Array2::zeros((frames, nfft));
    let mut buf = vec![Complex64::default(); nfft];
    for (f, mut out) in magnitude_db.rows_mut().into_iter().enumerate() {
        let start = f * hop;
        buf.fill(Complex64::default());
        for (i, (b, wv)) in buf.iter_mut().zip(&window).enumerate() {
            *b = signal[start + i] * *wv;
        }
        fft.process(&mut buf);
        out.iter_mut().zip(&buf).for_each(|(o, z)| *o = to_db(z.norm()));
    }
    Ok(Spectrogram {
        magnitude_db,
        frame_times_s: (0..frames).map(|f| (f * hop + w / 2) as f64 / sample_rate_hz).collect(),
        freq_axis_hz: (0..nfft).map(|k| k as f64 * sample_rate_hz / nfft as f64).collect(),
        window_length: w,
        hop,
        sample_rate_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_model::{synth_point_target, synth_scene, RotorTarget};

    fn small_params(chirps: usize) -> RadarParams {
        RadarParams {
            num_chirps: chirps,
            ..RadarParams::table1()
        }
    }

    fn tone(freq: f64, fs: f64, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|n| Complex64::from_polar(1.0, TAU * freq * n as f64 / fs))
            .collect()
    }

    #[test]
    fn body_peak_lands_in_analytic_range_bin() {
        let p = small_params(4);
        let scene = synth_scene(&p, &RotorTarget::point(20.0, 0.0, 1.0), f64::INFINITY, 0.0, 0).unwrap();
        let spectra = range_dft(&scene);
        let expected = (p.beat_frequency_hz(20.0) / p.range_bin_hz()).round() as usize;
        assert_eq!(expected, 137);
        for row in spectra.rows() {
            let peak = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0;
            assert_eq!(peak, expected);
        }
    }

    #[test]
    fn range_dft_of_zeros_is_zero_and_preserves_energy() {
        let p = small_params(3);
        let zeros = ChirpMatrix::zeros(p);
        assert!(range_dft(&zeros).iter().all(|z| z.norm() == 0.0));

        let row = synth_point_target(&p, 12.3, 1.0, 0.8, 1).unwrap();
        let mut m = ChirpMatrix::zeros(p);
        m.samples.row_mut(1).iter_mut().zip(&row).for_each(|(d, s)| *d = *s);
        let spectra = range_dft(&m);
        let time_energy: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        let freq_energy: f64 = spectra.row(1).iter().map(|z| z.norm_sqr()).sum();
        approx::assert_relative_eq!(freq_energy, 512.0 * time_energy, max_relative = 1e-10);
    }

    #[test]
    fn rd_map_needs_two_chirps() {
        let p = small_params(1);
        assert!(rd_map(&ChirpMatrix::zeros(p)).is_err());
    }

    #[test]
    fn doppler_axis_is_centered() {
        let p = small_params(8);
        let map = rd_map(&ChirpMatrix::zeros(p)).unwrap();
        assert_eq!(map.doppler_axis_hz[map.zero_doppler_row()], 0.0);
        assert!(map.doppler_axis_hz[0] < 0.0);
        let crf = p.chirp_repetition_frequency_hz();
        approx::assert_relative_eq!(map.doppler_axis_hz[0], -crf / 2.0, max_relative = 1e-12);
        assert_eq!(*map.range_axis_hz.last().unwrap(), p.sample_rate_hz * 511.0 / 512.0);

        let odd = rd_map(&ChirpMatrix::zeros(small_params(5))).unwrap();
        assert_eq!(odd.doppler_axis_hz[2], 0.0);
    }

    #[test]
    fn conjugate_symmetric_slow_time_gives_symmetric_doppler() {
        // Real-valued slow-time sequence in a single range bin -> |Y(f_D)| = |Y(-f_D)|.
        let p = small_params(16);
        let mut m = ChirpMatrix::zeros(p);
        for l in 0..16 {
            m.samples[[l, 0]] = Complex64::new((0.7 * l as f64).cos() + 0.3 * (l as f64).sin(), 0.0);
        }
        let map = rd_map(&m).unwrap();
        let c = map.zero_doppler_row();
        for k in 1..8 {
            let a = map.values[[c + k, 0]].norm();
            let b = map.values[[c - k, 0]].norm();
            assert!((a - b).abs() < 1e-9 * a.max(1.0));
        }
    }

    #[test]
    fn ties_break_toward_lowest_bins() {
        let p = small_params(4);
        let mut m = ChirpMatrix::zeros(p);
        m.samples.fill(Complex64::new(0.0, 0.0));
        let mut map = rd_map(&m).unwrap();
        map.values[[3, 10]] = Complex64::new(1.0, 0.0);
        map.values[[1, 10]] = Complex64::new(0.0, 1.0);
        map.values[[0, 11]] = Complex64::new(1.0, 0.0);
        let peak = rd_peak(&map);
        assert_eq!((peak.range_bin, peak.doppler_bin), (10, 1));
    }

    #[test]
    fn dominant_of_two_bodies_wins() {
        let p = small_params(32);
        let mut near = synth_scene(&p, &RotorTarget::point(20.0, 0.0, 1.0), f64::INFINITY, 0.0, 0).unwrap();
        let far = synth_scene(&p, &RotorTarget::point(30.0, 0.0, 0.5), f64::INFINITY, 0.0, 0).unwrap();
        near.samples += &far.samples;
        let peak = rd_peak(&rd_map(&near).unwrap());
        assert!((peak.range_hz - p.beat_frequency_hz(20.0)).abs() <= p.range_bin_hz());
    }

    #[test]
    fn stationary_tone_ridge_is_flat() {
        let fs = 5e6;
        let x = tone(1e6, fs, 4096);
        let s = spectrogram(&x, fs, 256, 0.5).unwrap();
        for f in 0..s.num_frames() {
            let row = s.magnitude_db.row(f);
            let k = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!((s.freq_axis_hz[k] - 1e6).abs() <= s.bin_hz());
        }
    }

    #[test]
    fn frame_count_formula() {
        let w = 100;
        let x = vec![Complex64::new(1.0, 0.0); 10 * w];
        let s = spectrogram(&x, 1.0, w, 0.9).unwrap();
        assert_eq!(s.hop, 10);
        assert_eq!(s.num_frames(), (10 * w - w) / 10 + 1);
        assert!(s.magnitude_db.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn short_signal_is_rejected() {
        let x = vec![Complex64::new(1.0, 0.0); 10];
        assert!(matches!(
            spectrogram(&x, 1.0, 16, 0.5),
            Err(Error::SignalTooShort { .. })
        ));
        assert!(spectrogram(&x, 1.0, 4, 1.0).is_err());
    }

    #[test]
    fn centered_axis_puts_negative_tones_below_zero() {
        let fs = 1e4;
        let x = tone(-1500.0, fs, 512);
        let s = spectrogram(&x, fs, 64, 0.5).unwrap().centered();
        assert_eq!(s.freq_axis_hz[32], 0.0);
        assert_eq!(s.freq_axis_hz[0], -5000.0);
        let row = s.magnitude_db.row(1);
        let k = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((s.freq_axis_hz[k] + 1500.0).abs() <= s.bin_hz());
    }

    #[test]
    fn padding_refines_the_frequency_grid() {
        let fs = 1e6;
        let x = tone(123e3, fs, 1024);
        let cfg = StftConfig {
            window_length: 128,
            overlap_fraction: 0.5,
            pad_factor: 8,
        };
        let s = spectrogram_with(&x, fs, &cfg).unwrap();
        assert_eq!(s.num_bins(), 1024);
        let row = s.magnitude_db.row(2);
        let k = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!((s.freq_axis_hz[k] - 123e3).abs() <= s.bin_hz());
    }
}
