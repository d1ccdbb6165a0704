//! Gaussian range-Doppler filter that isolates one target's response.
//!
//! The range axis is treated as linear; the Doppler axis is circular with period
//! `f_crf`, because a wide micro-Doppler spread wraps around it.

use crate::error::{Error, Result};
use crate::radar_model::{ChirpMatrix, RadarParams};
use crate::spectral::{inverse_rd, rd_map, RdMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DopplerResponse {
    /// Unit gain at every Doppler frequency.
    AllPass,
    Gaussian {
        sigma_hz: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRdFilter {
    pub center_range_hz: f64,
    pub center_doppler_hz: f64,
    pub sigma_range_hz: f64,
    pub doppler: DopplerResponse,
    /// Period of the Doppler axis.
    pub doppler_period_hz: f64,
}

/// Converts a 3 dB cutoff into the Gaussian standard deviation (`f_c = sqrt(ln 2) * sigma`).
pub fn sigma_for_cutoff(cutoff_hz: f64) -> f64 {
    cutoff_hz / std::f64::consts::LN_2.sqrt()
}

/// Signed distance on a circle of circumference `period`, in `[-period/2, period/2)`.
pub fn wrapped_offset(value: f64, center: f64, period: f64) -> f64 {
    (value - center + period / 2.0).rem_euclid(period) - period / 2.0
}

/// Sizes the filter from the expected micro-Doppler spread.
///
/// The range cutoff is `max(spread / 2, fs / N)`. When the spread exceeds `f_crf` the
/// Doppler axis is all-pass; otherwise its cutoff is `max(spread / 2, f_crf / L)`.
pub fn design_filter(peak: (f64, f64), expected_spread_hz: f64, params: &RadarParams) -> Result<GaussianRdFilter> {
    if !expected_spread_hz.is_finite() || expected_spread_hz < 0.0 {
        return Err(Error::invalid(
            "expected_spread_hz",
            format!("must be finite and >= 0, got {expected_spread_hz}"),
        ));
    }
    let crf = params.chirp_repetition_frequency_hz();
    let range_cutoff = (expected_spread_hz / 2.0).max(params.range_bin_hz());
    let doppler = if expected_spread_hz > crf {
        DopplerResponse::AllPass
    } else {
        let cutoff = (expected_spread_hz / 2.0).max(params.doppler_bin_hz());
        DopplerResponse::Gaussian {
            sigma_hz: sigma_for_cutoff(cutoff),
        }
    };
    Ok(GaussianRdFilter {
        center_range_hz: peak.0,
        center_doppler_hz: peak.1,
        sigma_range_hz: sigma_for_cutoff(range_cutoff),
        doppler,
        doppler_period_hz: crf,
    })
}

impl GaussianRdFilter {
    pub fn range_cutoff_hz(&self) -> f64 {
        self.sigma_range_hz * std::f64::consts::LN_2.sqrt()
    }

    pub fn range_gain(&self, range_hz: f64) -> f64 {
        let d = range_hz - self.center_range_hz;
        (-d * d / (2.0 * self.sigma_range_hz * self.sigma_range_hz)).exp()
    }

    pub fn doppler_gain(&self, doppler_hz: f64) -> f64 {
        match self.doppler {
            DopplerResponse::AllPass => 1.0,
            DopplerResponse::Gaussian { sigma_hz } => {
                let d = wrapped_offset(doppler_hz, self.center_doppler_hz, self.doppler_period_hz);
                (-d * d / (2.0 * sigma_hz * sigma_hz)).exp()
            }
        }
    }

    pub fn gain(&self, range_hz: f64, doppler_hz: f64) -> f64 {
        self.range_gain(range_hz) * self.doppler_gain(doppler_hz)
    }
}

/// Multiplies each RD cell by the filter gain at its axis frequencies.
pub fn apply_filter(map: &RdMap, filter: &GaussianRdFilter) -> RdMap {
    let range_gain: Vec<f64> = map.range_axis_hz.iter().map(|&f| filter.range_gain(f)).collect();
    let doppler_gain: Vec<f64> = map.doppler_axis_hz.iter().map(|&f| filter.doppler_gain(f)).collect();
    let mut out = map.clone();
    for ((d, r), z) in out.values.indexed_iter_mut() {
        *z *= doppler_gain[d] * range_gain[r];
    }
    out
}

/// RD map, filter, inverse RD map.
pub fn extract_filtered_time(chirps: &ChirpMatrix, filter: &GaussianRdFilter) -> Result<ChirpMatrix> {
    let map = rd_map(chirps)?;
    Ok(inverse_rd(&apply_filter(&map, filter)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar_model::{add_noise, synth_scene, RotorTarget};
    use crate::spectral::rd_peak;
    use approx::assert_relative_eq;

    fn params(chirps: usize) -> RadarParams {
        RadarParams {
            num_chirps: chirps,
            ..RadarParams::table1()
        }
    }

    fn body(p: &RadarParams, range: f64, amp: f64) -> ChirpMatrix {
        synth_scene(p, &RotorTarget::point(range, 0.0, amp), f64::INFINITY, 0.0, 0).unwrap()
    }

    #[test]
    fn wide_spread_makes_doppler_all_pass() {
        let p = RadarParams::table1();
        let f = design_filter((1.33e6, 0.0), 39.2e3, &p).unwrap();
        assert_eq!(f.doppler, DopplerResponse::AllPass);
        assert_relative_eq!(f.range_cutoff_hz(), 19.6e3, max_relative = 1e-12);
    }

    #[test]
    fn zero_spread_gives_one_bin_cutoffs() {
        let p = RadarParams::table1();
        let f = design_filter((0.0, 0.0), 0.0, &p).unwrap();
        assert_relative_eq!(f.range_cutoff_hz(), p.range_bin_hz(), max_relative = 1e-12);
        match f.doppler {
            DopplerResponse::Gaussian { sigma_hz } => {
                assert_relative_eq!(sigma_hz, sigma_for_cutoff(p.doppler_bin_hz()), max_relative = 1e-12)
            }
            DopplerResponse::AllPass => panic!("expected a Gaussian Doppler response"),
        }
        assert!(design_filter((0.0, 0.0), -1.0, &p).is_err());
    }

    #[test]
    fn experiment_range_cutoff() {
        let p = RadarParams::table2();
        let f = design_filter((0.0, 0.0), 2.0 * 168.6e3, &p).unwrap();
        assert_relative_eq!(f.range_cutoff_hz(), 168.6e3, max_relative = 1e-12);
        // 3 dB point in amplitude.
        assert_relative_eq!(f.range_gain(168.6e3), 0.5f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn gain_is_one_at_center_and_wraps_in_doppler() {
        let p = params(256);
        let f = design_filter((1e6, 4000.0), 2000.0, &p).unwrap();
        assert_eq!(f.gain(1e6, 4000.0), 1.0);
        let crf = p.chirp_repetition_frequency_hz();
        // 4000 + 1500 wraps to 5500 - crf, still 1500 Hz away.
        assert_relative_eq!(
            f.doppler_gain(5500.0 - crf),
            f.doppler_gain(5500.0),
            max_relative = 1e-12
        );
        assert_relative_eq!(f.doppler_gain(5500.0), f.doppler_gain(2500.0), max_relative = 1e-12);
    }

    #[test]
    fn all_pass_filter_leaves_map_unchanged() {
        let p = params(8);
        let map = rd_map(&body(&p, 20.0, 1.0)).unwrap();
        let f = GaussianRdFilter {
            center_range_hz: 0.0,
            center_doppler_hz: 0.0,
            sigma_range_hz: 1e12,
            doppler: DopplerResponse::AllPass,
            doppler_period_hz: p.chirp_repetition_frequency_hz(),
        };
        let out = apply_filter(&map, &f);
        for (a, b) in out.values.iter().zip(map.values.iter()) {
            assert!((a - b).norm() <= 1e-6 * b.norm().max(1e-12));
        }
        let back = extract_filtered_time(&body(&p, 20.0, 1.0), &f).unwrap();
        let orig = body(&p, 20.0, 1.0);
        for (a, b) in back.samples.iter().zip(orig.samples.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn point_target_at_center_keeps_peak() {
        let p = params(16);
        let map = rd_map(&body(&p, 20.0, 1.0)).unwrap();
        let peak = rd_peak(&map);
        let f = design_filter((peak.range_hz, peak.doppler_hz), 0.0, &p).unwrap();
        let out = apply_filter(&map, &f);
        let after = out.values[[peak.doppler_bin, peak.range_bin]].norm();
        assert_relative_eq!(after, peak.magnitude, max_relative = 1e-12);
    }

    #[test]
    fn interferer_attenuation_matches_gaussian() {
        let p = params(16);
        let f = design_filter((p.beat_frequency_hz(20.0), 0.0), 10.0 * p.range_bin_hz(), &p).unwrap();
        let mut scene = body(&p, 20.0, 1.0);
        scene.samples += &body(&p, 40.0, 1.0).samples;
        let before = rd_map(&scene).unwrap();
        let after = apply_filter(&before, &f);
        let interferer = rd_map(&body(&p, 40.0, 1.0)).unwrap();
        let ip = rd_peak(&interferer);
        let expected = f.gain(
            before.range_axis_hz[ip.range_bin],
            before.doppler_axis_hz[ip.doppler_bin],
        );
        let measured =
            after.values[[ip.doppler_bin, ip.range_bin]].norm() / before.values[[ip.doppler_bin, ip.range_bin]].norm();
        assert!((measured - expected).abs() <= 1e-6 * expected.max(1e-300));

        // Time-domain residual of the interferer alone stays at the predicted level.
        let residual = extract_filtered_time(&body(&p, 40.0, 1.0), &f).unwrap();
        let predicted: f64 = interferer
            .values
            .indexed_iter()
            .map(|((d, r), z)| {
                let g = f.gain(interferer.range_axis_hz[r], interferer.doppler_axis_hz[d]);
                (g * z.norm()).powi(2)
            })
            .sum::<f64>()
            / (p.num_chirps * p.samples_per_chirp()) as f64;
        let measured_power = residual.energy();
        assert!(10.0 * (measured_power / predicted).log10() <= 1.0);
    }

    #[test]
    fn noise_is_reduced_by_the_noise_equivalent_bandwidth() {
        let p = params(256);
        let f = design_filter((p.beat_frequency_hz(20.0), 0.0), 39.2e3, &p).unwrap();
        let mut noise = ChirpMatrix::zeros(p);
        add_noise(&mut noise, 1.0, 11);
        let filtered = extract_filtered_time(&noise, &f).unwrap();
        let n = p.samples_per_chirp();
        let neb: f64 = (0..n)
            .map(|k| f.range_gain(k as f64 * p.range_bin_hz()).powi(2))
            .sum::<f64>()
            / n as f64;
        let ratio = filtered.energy() / noise.energy();
        let db = 10.0 * (ratio / neb).log10();
        assert!(db.abs() < 1.0, "off by {db} dB");
    }
}
