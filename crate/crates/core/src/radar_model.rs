//! Deramped FMCW returns from point bodies and rotating blades.
//!
//! Every chirp row is sampled at `t = n / fs` for `n` in `0..N`, and the
//! absolute (slow) time of a sample in chirp `l` is `t + l * T_cri`. Phases use
//! the `+j` convention, so a target at range `R` appears as a positive beat
//! tone at `2 mu R / c` plus its Doppler `2 v f0 / c`.

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Chirp timing and frequency description of the FMCW waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarParams {
    pub start_frequency_hz: f64,
    pub chirp_rate_hz_per_s: f64,
    pub chirp_duration_s: f64,
    pub chirp_interval_s: f64,
    pub sample_rate_hz: f64,
    pub num_chirps: usize,
    #[serde(default = "default_propagation_speed")]
    pub propagation_speed_mps: f64,
}

fn default_propagation_speed() -> f64 {
    SPEED_OF_LIGHT
}

impl RadarParams {
    /// 77 GHz, 10 MHz/us, 102.4 us chirps every 104.43 us, 5 MHz sampling, 256 chirps.
    pub fn table1() -> Self {
        Self {
            start_frequency_hz: 77e9,
            chirp_rate_hz_per_s: 10e12,
            chirp_duration_s: 102.4e-6,
            chirp_interval_s: 104.43e-6,
            sample_rate_hz: 5e6,
            num_chirps: 256,
            propagation_speed_mps: SPEED_OF_LIGHT,
        }
    }

    /// The 25 MHz/us capture configuration with 625 chirps every 114.43 us.
    pub fn table2() -> Self {
        Self {
            chirp_rate_hz_per_s: 25e12,
            chirp_interval_s: 114.43e-6,
            num_chirps: 625,
            ..Self::table1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("start_frequency_hz", self.start_frequency_hz)?;
        positive("chirp_rate_hz_per_s", self.chirp_rate_hz_per_s)?;
        positive("chirp_duration_s", self.chirp_duration_s)?;
        positive("chirp_interval_s", self.chirp_interval_s)?;
        positive("sample_rate_hz", self.sample_rate_hz)?;
        positive("propagation_speed_mps", self.propagation_speed_mps)?;
        if self.chirp_interval_s < self.chirp_duration_s {
            return Err(Error::invalid(
                "chirp_interval_s",
                format!(
                    "chirp_interval_s ({}) must be >= chirp_duration_s ({})",
                    self.chirp_interval_s, self.chirp_duration_s
                ),
            ));
        }
        if self.num_chirps == 0 {
            return Err(Error::invalid("num_chirps", "must be >= 1"));
        }
        if self.samples_per_chirp() == 0 {
            return Err(Error::invalid(
                "chirp_duration_s",
                "chirp_duration_s * sample_rate_hz rounds to zero samples",
            ));
        }
        Ok(())
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.chirp_rate_hz_per_s * self.chirp_duration_s
    }

    pub fn wavelength_m(&self) -> f64 {
        self.propagation_speed_mps / self.start_frequency_hz
    }

    pub fn samples_per_chirp(&self) -> usize {
        (self.chirp_duration_s * self.sample_rate_hz).round() as usize
    }

    /// Idle time in samples before rounding (`(T_cri - T_c) * fs`).
    pub fn idle_samples_exact(&self) -> f64 {
        (self.chirp_interval_s - self.chirp_duration_s) * self.sample_rate_hz
    }

    pub fn idle_samples(&self) -> usize {
        ((self.chirp_interval_s - self.chirp_duration_s) * self.sample_rate_hz).round() as usize
    }

    pub fn chirp_repetition_frequency_hz(&self) -> f64 {
        1.0 / self.chirp_interval_s
    }

    pub fn range_bin_size_m(&self) -> f64 {
        self.propagation_speed_mps / (2.0 * self.bandwidth_hz())
    }

    /// Width of one fast-time DFT bin.
    pub fn range_bin_hz(&self) -> f64 {
        self.sample_rate_hz / self.samples_per_chirp() as f64
    }

    /// Width of one slow-time DFT bin.
    pub fn doppler_bin_hz(&self) -> f64 {
        self.chirp_repetition_frequency_hz() / self.num_chirps as f64
    }

    pub fn beat_frequency_hz(&self, range_m: f64) -> f64 {
        2.0 * self.chirp_rate_hz_per_s * range_m / self.propagation_speed_mps
    }

    pub fn doppler_frequency_hz(&self, velocity_mps: f64) -> f64 {
        2.0 * velocity_mps * self.start_frequency_hz / self.propagation_speed_mps
    }

    pub fn range_for_beat_hz(&self, beat_hz: f64) -> f64 {
        beat_hz * self.propagation_speed_mps / (2.0 * self.chirp_rate_hz_per_s)
    }

    pub fn velocity_for_doppler_hz(&self, doppler_hz: f64) -> f64 {
        doppler_hz * self.propagation_speed_mps / (2.0 * self.start_frequency_hz)
    }

    /// Fast-time sample instants of one chirp.
    pub fn fast_time(&self, n: usize) -> f64 {
        n as f64 / self.sample_rate_hz
    }

    /// Absolute time of fast-time sample `n` in chirp `chirp_index`.
    pub fn slow_time(&self, n: usize, chirp_index: usize) -> f64 {
        self.fast_time(n) + chirp_index as f64 * self.chirp_interval_s
    }

    /// Wavenumber-like factor `4 pi / lambda + 4 pi mu t / c` of the deramped phase.
    pub fn phase_slope(&self, t: f64) -> f64 {
        4.0 * PI / self.wavelength_m() + 4.0 * PI * self.chirp_rate_hz_per_s * t / self.propagation_speed_mps
    }
}

/// A body with an optional rotor of identical blades.
#[derive(Debug, Clone, PartialEq)]
pub struct RotorTarget {
    pub range_m: f64,
    pub radial_velocity_mps: f64,
    pub body_amplitude: f64,
    pub blade_amplitude: f64,
    pub blade_length_m: f64,
    pub rotation_rate_rad_s: f64,
    /// One initial angle per blade; its length is the blade count.
    pub blade_offsets_rad: Vec<f64>,
    pub elevation_rad: f64,
}

impl RotorTarget {
    /// Body-only target.
    pub fn point(range_m: f64, radial_velocity_mps: f64, amplitude: f64) -> Self {
        Self {
            range_m,
            radial_velocity_mps,
            body_amplitude: amplitude,
            blade_amplitude: 0.0,
            blade_length_m: 0.0,
            rotation_rate_rad_s: 0.0,
            blade_offsets_rad: Vec::new(),
            elevation_rad: 0.0,
        }
    }

    /// Rotor with `num_blades` blades spaced evenly around the hub.
    pub fn evenly_spaced(range_m: f64, num_blades: usize, blade_length_m: f64, rotation_rpm: f64) -> Self {
        let offsets = (0..num_blades).map(|b| TAU * b as f64 / num_blades as f64).collect();
        Self {
            blade_amplitude: 1.0,
            blade_length_m,
            rotation_rate_rad_s: rpm_to_rad_s(rotation_rpm),
            blade_offsets_rad: offsets,
            ..Self::point(range_m, 0.0, 1.0)
        }
    }

    pub fn num_blades(&self) -> usize {
        self.blade_offsets_rad.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.range_m.is_finite() && self.range_m > 0.0) {
            return Err(Error::invalid("range_m", format!("must be > 0, got {}", self.range_m)));
        }
        if !(self.blade_length_m.is_finite() && self.blade_length_m >= 0.0) {
            return Err(Error::invalid(
                "blade_length_m",
                format!("must be >= 0, got {}", self.blade_length_m),
            ));
        }
        if !(self.rotation_rate_rad_s.is_finite() && self.rotation_rate_rad_s >= 0.0) {
            return Err(Error::invalid(
                "rotation_rate_rad_s",
                format!("must be >= 0, got {}", self.rotation_rate_rad_s),
            ));
        }
        for (field, v) in [
            ("radial_velocity_mps", self.radial_velocity_mps),
            ("body_amplitude", self.body_amplitude),
            ("blade_amplitude", self.blade_amplitude),
            ("elevation_rad", self.elevation_rad),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if self.blade_offsets_rad.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("blade_offsets_rad", "must be finite"));
        }
        Ok(())
    }

    /// Blade angle `Omega * t_abs + psi_b`.
    pub fn blade_angle(&self, blade_index: usize, absolute_time_s: f64) -> f64 {
        self.rotation_rate_rad_s * absolute_time_s + self.blade_offsets_rad[blade_index]
    }

    pub fn rotation_period_s(&self) -> f64 {
        TAU / self.rotation_rate_rad_s
    }
}

pub fn rpm_to_rad_s(rpm: f64) -> f64 {
    rpm * TAU / 60.0
}

pub fn rad_s_to_rpm(rad_s: f64) -> f64 {
    rad_s * 60.0 / TAU
}

/// Unnormalized `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// L x N deramped sample matrix: one row per chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpMatrix {
    pub samples: Array2<Complex64>,
    pub params: RadarParams,
}

impl ChirpMatrix {
    pub fn zeros(params: RadarParams) -> Self {
        Self {
            samples: Array2::zeros((params.num_chirps, params.samples_per_chirp())),
            params,
        }
    }

    pub fn num_chirps(&self) -> usize {
        self.samples.nrows()
    }

    pub fn samples_per_chirp(&self) -> usize {
        self.samples.ncols()
    }

    pub fn chirp(&self, chirp_index: usize) -> ArrayView1<'_, Complex64> {
        self.samples.row(chirp_index)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

fn check_chirp_index(params: &RadarParams, chirp_index: usize) -> Result<()> {
    if chirp_index >= params.num_chirps {
        return Err(Error::invalid(
            "chirp_index",
            format!("{chirp_index} is outside 0..{}", params.num_chirps),
        ));
    }
    Ok(())
}

/// One chirp of a point target: `a * exp(j{2 pi f0 tau + 2 pi mu tau t})` with
/// `tau = 2 (R + v t_abs) / c`. The quadratic `pi mu tau^2` term is dropped.
pub fn synth_point_target(
    params: &RadarParams,
    range_m: f64,
    velocity_mps: f64,
    amplitude: f64,
    chirp_index: usize,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    check_chirp_index(params, chirp_index)?;
    let beat_hz = params.beat_frequency_hz(range_m);
    let nyquist_hz = params.sample_rate_hz / 2.0;
    if beat_hz >= nyquist_hz {
        return Err(Error::UnrepresentableTarget { beat_hz, nyquist_hz });
    }
    Ok(point_chirp(params, range_m, velocity_mps, amplitude, chirp_index))
}

/// Phase of a point body at fast-time sample `n` of chirp `chirp_index`.
pub fn body_phase(params: &RadarParams, range_m: f64, velocity_mps: f64, n: usize, chirp_index: usize) -> f64 {
    let t_abs = params.slow_time(n, chirp_index);
    params.phase_slope(params.fast_time(n)) * (range_m + velocity_mps * t_abs)
}

fn point_chirp(
    params: &RadarParams,
    range_m: f64,
    velocity_mps: f64,
    amplitude: f64,
    chirp_index: usize,
) -> Vec<Complex64> {
    (0..params.samples_per_chirp())
        .map(|n| Complex64::from_polar(amplitude, body_phase(params, range_m, velocity_mps, n, chirp_index)))
        .collect()
}

/// One chirp of blade `blade_index`, integrated along the blade length.
pub fn synth_blade_response(
    params: &RadarParams,
    target: &RotorTarget,
    blade_index: usize,
    chirp_index: usize,
) -> Result<Vec<Complex64>> {
    params.validate()?;
    target.validate()?;
    check_chirp_index(params, chirp_index)?;
    if blade_index >= target.num_blades() {
        return Err(Error::invalid(
            "blade_index",
            format!("{blade_index} is outside 0..{}", target.num_blades()),
        ));
    }
    Ok(blade_chirp(params, target, blade_index, chirp_index))
}

fn blade_chirp(params: &RadarParams, target: &RotorTarget, blade_index: usize, chirp_index: usize) -> Vec<Complex64> {
    let half_len = 0.5 * target.blade_length_m * target.elevation_rad.cos();
    let scale = target.blade_length_m * target.blade_amplitude;
    (0..params.samples_per_chirp())
        .map(|n| {
            let t = params.fast_time(n);
            let t_abs = params.slow_time(n, chirp_index);
            let k = params.phase_slope(t);
            let excursion = half_len * target.blade_angle(blade_index, t_abs).cos();
            let phase = k * (target.range_m + target.radial_velocity_mps * t_abs + excursion);
            Complex64::from_polar(scale * sinc(k * excursion), phase)
        })
        .collect()
}

/// Rotation-averaged power of one blade with unit `blade_length * blade_amplitude`.
///
/// Averages `sinc^2` of the blade aperture term over a uniformly distributed
/// blade angle at the carrier wavenumber.
pub fn blade_mean_power_factor(params: &RadarParams, target: &RotorTarget) -> f64 {
    let aperture = params.phase_slope(0.0) * 0.5 * target.blade_length_m * target.elevation_rad.cos();
    // The sinc main lobe around cos(angle) = 0 is ~pi/aperture wide; keep >= 64 steps across it.
    let steps = ((aperture.abs() * 128.0) as usize).max(4096);
    let sum: f64 = (0..steps)
        .map(|i| {
            let angle = TAU * (i as f64 + 0.5) / steps as f64;
            sinc(aperture * angle.cos()).powi(2)
        })
        .sum();
    sum / steps as f64
}

/// Per-blade amplitude `alpha_b` whose rotation-averaged power sits
/// `blade_body_ratio_db` relative to the body power.
pub fn blade_amplitude_for_ratio(params: &RadarParams, target: &RotorTarget, blade_body_ratio_db: f64) -> f64 {
    if target.blade_length_m == 0.0 {
        return 0.0;
    }
    let factor = blade_mean_power_factor(params, target);
    let blade_power = target.body_amplitude.powi(2) * 10f64.powf(blade_body_ratio_db / 10.0);
    (blade_power / factor).sqrt() / target.blade_length_m
}

/// Body tone, every blade and complex white Gaussian noise.
///
/// `snr_db` is body power over per-sample noise power; `f64::INFINITY`
/// disables noise. The blade amplitude of `target` is replaced by the value
/// implied by `blade_body_ratio_db` (see [`blade_amplitude_for_ratio`]).
pub fn synth_scene(
    params: &RadarParams,
    target: &RotorTarget,
    snr_db: f64,
    blade_body_ratio_db: f64,
    seed: u64,
) -> Result<ChirpMatrix> {
    params.validate()?;
    target.validate()?;
    if snr_db.is_nan() {
        return Err(Error::invalid("snr_db", "must not be NaN"));
    }
    let mut target = target.clone();
    target.blade_amplitude = blade_amplitude_for_ratio(params, &target, blade_body_ratio_db);
    let mut scene = synth_components(params, &target);
    if snr_db.is_finite() {
        let noise_power = target.body_amplitude.powi(2) / 10f64.powf(snr_db / 10.0);
        add_noise(&mut scene, noise_power, seed);
    }
    Ok(scene)
}

/// Noiseless sum of body and blades, using `target.blade_amplitude` as given.
pub fn synth_components(params: &RadarParams, target: &RotorTarget) -> ChirpMatrix {
    let mut scene = ChirpMatrix::zeros(*params);
    for (l, mut row) in scene.samples.rows_mut().into_iter().enumerate() {
        let body = point_chirp(
            params,
            target.range_m,
            target.radial_velocity_mps,
            target.body_amplitude,
            l,
        );
        for (dst, src) in row.iter_mut().zip(body) {
            *dst = src;
        }
        for b in 0..target.num_blades() {
            for (dst, src) in row.iter_mut().zip(blade_chirp(params, target, b, l)) {
                *dst += src;
            }
        }
    }
    scene
}

/// Adds circularly-symmetric complex Gaussian noise of total power `noise_power`.
pub fn add_noise(scene: &mut ChirpMatrix, noise_power: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = (noise_power / 2.0).sqrt();
    for z in scene.samples.iter_mut() {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *z += Complex64::new(sigma * re, sigma * im);
    }
}

/// Instantaneous frequency of the blade tip.
///
/// `t` is fast time within chirp `chirp_index`. Panics if `blade_index` is
/// not a blade of `target`.
pub fn md_instantaneous_freq(
    params: &RadarParams,
    target: &RotorTarget,
    blade_index: usize,
    t: f64,
    chirp_index: usize,
) -> f64 {
    let t_abs = t + chirp_index as f64 * params.chirp_interval_s;
    let angle = target.blade_angle(blade_index, t_abs);
    md_frequency_at_angle(params, target, angle, t, t_abs)
}

pub(crate) fn md_frequency_at_angle(params: &RadarParams, target: &RotorTarget, angle: f64, t: f64, t_abs: f64) -> f64 {
    let c = params.propagation_speed_mps;
    let mu = params.chirp_rate_hz_per_s;
    let cos_el = target.elevation_rad.cos();
    let omega = target.rotation_rate_rad_s;
    let len = target.blade_length_m;
    params.beat_frequency_hz(target.range_m)
        + params.doppler_frequency_hz(target.radial_velocity_mps)
        + 2.0 * len * mu * cos_el / c * (angle.cos() - t * omega * angle.sin())
        + 2.0 * mu / c * target.radial_velocity_mps * t_abs
        - 2.0 * len * omega * cos_el / params.wavelength_m() * angle.sin()
}

/// Maximum micro-Doppler spread `(2 L_B Omega / c)(mu T_c + f0)`.
pub fn md_max_spread(params: &RadarParams, target: &RotorTarget) -> f64 {
    2.0 * target.blade_length_m * target.rotation_rate_rad_s / params.propagation_speed_mps
        * (params.bandwidth_hz() + params.start_frequency_hz)
}

/// Where a rotor's micro-Doppler spread lands relative to the sampling grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasReport {
    pub spread_hz: f64,
    /// `|f_D0| + spread / 2`, compared against `f_crf / 2`.
    pub slow_time_extent_hz: f64,
    pub slow_time_nyquist_hz: f64,
    /// `mu / B`, the spread that crosses one range bin.
    pub range_spread_threshold_hz: f64,
    /// `f_crf / L`, one Doppler bin.
    pub doppler_bin_hz: f64,
    /// `f_R0 + |f_D0| + spread / 2`, compared against `fs / 2`.
    pub fast_time_extent_hz: f64,
    pub fast_time_nyquist_hz: f64,
    pub slow_time_aliased: bool,
    pub range_spread: bool,
    pub doppler_spread: bool,
    pub fast_time_ok: bool,
}

pub fn alias_report(params: &RadarParams, target: &RotorTarget) -> AliasReport {
    let spread_hz = md_max_spread(params, target);
    let doppler = params.doppler_frequency_hz(target.radial_velocity_mps).abs();
    let slow_time_extent_hz = doppler + spread_hz / 2.0;
    let slow_time_nyquist_hz = params.chirp_repetition_frequency_hz() / 2.0;
    let range_spread_threshold_hz = params.chirp_rate_hz_per_s / params.bandwidth_hz();
    let doppler_bin_hz = params.doppler_bin_hz();
    let fast_time_extent_hz = params.beat_frequency_hz(target.range_m) + doppler + spread_hz / 2.0;
    let fast_time_nyquist_hz = params.sample_rate_hz / 2.0;
    AliasReport {
        spread_hz,
        slow_time_extent_hz,
        slow_time_nyquist_hz,
        range_spread_threshold_hz,
        doppler_bin_hz,
        fast_time_extent_hz,
        fast_time_nyquist_hz,
        slow_time_aliased: slow_time_extent_hz > slow_time_nyquist_hz,
        range_spread: spread_hz > range_spread_threshold_hz,
        doppler_spread: spread_hz > doppler_bin_hz,
        fast_time_ok: fast_time_extent_hz < fast_time_nyquist_hz,
    }
}
