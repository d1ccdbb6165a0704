//! Instantaneous frequency of complex IMFs and the proximity test used to
//! pick the IMFs that carry the target's signature.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::Decomposition;
use crate::error::{Error, Result};

/// Per-sample instantaneous frequency with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct InstFreq {
    pub hz: Vec<f64>,
    pub valid: Vec<bool>,
}

impl InstFreq {
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.hz.iter().zip(&self.valid).filter(|(_, &v)| v).map(|(f, _)| *f)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Mean and population standard deviation over valid samples.
    pub fn mean_and_std(&self) -> (f64, f64) {
        let n = self.valid_count() as f64;
        let mean = self.valid_values().sum::<f64>() / n;
        let var = self.valid_values().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    *m
}

/// Forward difference of the phase, `arg(x[n+1] conj(x[n])) * fs / 2 pi`.
///
/// The output has the input's length; the last sample repeats the final difference.
/// Sample `n` is valid when neither end of its difference is interpolated and both
/// magnitudes reach `amplitude_floor * median |imf|`.
pub fn imf_inst_freq(
    imf: &[Complex64],
    sample_rate_hz: f64,
    interp_mask: &[bool],
    amplitude_floor: f64,
) -> Result<InstFreq> {
    if interp_mask.len() != imf.len() {
        return Err(Error::LengthMismatch {
            expected: imf.len(),
            actual: interp_mask.len(),
        });
    }
    if imf.len() < 2 {
        return Err(Error::SignalTooShort {
            len: imf.len(),
            required: 2,
        });
    }
    let mags: Vec<f64> = imf.iter().map(|z| z.norm()).collect();
    let threshold = amplitude_floor * median(mags.clone());
    let scale = sample_rate_hz / TAU;
    let len = imf.len();
    let mut hz = Vec::with_capacity(len);
    let mut valid = Vec::with_capacity(len);
    for n in 0..len {
        let (a, b) = if n + 1 < len { (n, n + 1) } else { (n - 1, n) };
        hz.push((imf[b] * imf[a].conj()).arg() * scale);
        valid.push(
            !interp_mask[a]
                && !interp_mask[b]
                && mags[a] >= threshold
                && mags[b] >= threshold
                && mags[a] > 0.0
                && mags[b] > 0.0,
        );
    }
    let out = InstFreq { hz, valid };
    if out.valid_count() == 0 {
        return Err(Error::AllMasked);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImfStats {
    pub index: usize,
    pub mean_inst_freq_hz: f64,
    /// `|mean - f_R0|`, with `f_R0` folded into `(-fs/2, fs/2]`.
    pub freq_deviation_hz: f64,
    pub std_inst_freq_hz: f64,
    pub valid_samples: usize,
    pub selected: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SelectionInputs<'a> {
    pub range_freq_hz: f64,
    pub spread_hz: f64,
    pub sample_rate_hz: f64,
    pub interp_mask: &'a [bool],
    pub amplitude_floor: f64,
}

/// Frequency statistics of every IMF; an IMF is selected when both its mean
/// offset from the range frequency and its frequency spread are below `spread / 2`.
///
/// Phase differences only resolve frequency modulo `fs`, so a range frequency
/// above Nyquist is compared at its alias.
pub fn select_imfs(decomp: &Decomposition<Complex64>, inputs: &SelectionInputs<'_>) -> Result<Vec<ImfStats>> {
    if inputs.spread_hz.is_nan() || inputs.spread_hz <= 0.0 {
        return Err(Error::invalid(
            "spread_hz",
            format!("must be > 0, got {}", inputs.spread_hz),
        ));
    }
    let half = inputs.spread_hz / 2.0;
    let fs = inputs.sample_rate_hz;
    let reference = fs / 2.0 - (fs / 2.0 - inputs.range_freq_hz).rem_euclid(fs);
    let mut stats = Vec::with_capacity(decomp.imfs.len());
    for (index, imf) in decomp.imfs.iter().enumerate() {
        let freq = imf_inst_freq(imf, inputs.sample_rate_hz, inputs.interp_mask, inputs.amplitude_floor)?;
        let (mean, std) = freq.mean_and_std();
        let deviation = (mean - reference).abs();
        stats.push(ImfStats {
            index,
            mean_inst_freq_hz: mean,
            freq_deviation_hz: deviation,
            std_inst_freq_hz: std,
            valid_samples: freq.valid_count(),
            selected: deviation < half && std < half,
        });
    }
    for pair in stats.windows(2) {
        if pair[1].mean_inst_freq_hz > pair[0].mean_inst_freq_hz {
            log::warn!(
                "IMF {} has a higher mean frequency ({:.1} Hz) than IMF {} ({:.1} Hz)",
                pair[1].index + 1,
                pair[1].mean_inst_freq_hz,
                pair[0].index + 1,
                pair[0].mean_inst_freq_hz
            );
        }
    }
    Ok(stats)
}

/// Sum of the selected IMFs.
pub fn reconstruct(decomp: &Decomposition<Complex64>, selection: &[ImfStats]) -> Result<Vec<Complex64>> {
    let mut out = vec![Complex64::default(); decomp.input_len];
    let mut any = false;
    for s in selection.iter().filter(|s| s.selected) {
        let imf = decomp.imfs.get(s.index).ok_or_else(|| {
            Error::invalid(
                "selection",
                format!("IMF index {} is outside the decomposition", s.index),
            )
        })?;
        out.iter_mut().zip(imf).for_each(|(o, v)| *o += v);
        any = true;
    }
    if !any {
        return Err(Error::NoSignatureFound);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, fs: f64, len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|n| Complex64::from_polar(1.0, TAU * freq * n as f64 / fs))
            .collect()
    }

    fn single(imf: Vec<Complex64>) -> Decomposition<Complex64> {
        let len = imf.len();
        Decomposition::new(vec![imf], vec![Complex64::default(); len], vec![1])
    }

    #[test]
    fn pure_tone_frequency() {
        let fs = 5e6;
        let f = 1.234e6;
        let freq = imf_inst_freq(&tone(f, fs, 1000), fs, &[false; 1000], 0.1).unwrap();
        assert_eq!(freq.hz.len(), 1000);
        for v in freq.valid_values() {
            assert!((v - f).abs() < 1e-6 * f);
        }
    }

    #[test]
    fn chirp_ramp_slope() {
        let fs = 1e6;
        let (f0, rate) = (-200e3, 4e8);
        let len = 1000;
        let x: Vec<Complex64> = (0..len)
            .map(|n| {
                let t = n as f64 / fs;
                Complex64::from_polar(1.0, TAU * (f0 * t + 0.5 * rate * t * t))
            })
            .collect();
        let freq = imf_inst_freq(&x, fs, &vec![false; len], 0.1).unwrap();
        let slope = (freq.hz[len - 2] - freq.hz[0]) / ((len - 2) as f64 / fs);
        assert!((slope - rate).abs() < 0.01 * rate);
    }

    #[test]
    fn masked_samples_are_excluded() {
        let fs = 1e6;
        let mut x = tone(100e3, fs, 1000);
        let mut mask = vec![false; 1000];
        for n in 0..100 {
            mask[n * 10] = true;
            x[n * 10] = Complex64::new(50.0, 0.0);
        }
        let freq = imf_inst_freq(&x, fs, &mask, 0.1).unwrap();
        assert!(freq.valid_count() < 900);
        for v in freq.valid_values() {
            assert!((v - 100e3).abs() < 1e-3);
        }
        assert!(matches!(
            imf_inst_freq(&x, fs, &[true; 1000], 0.1),
            Err(Error::AllMasked)
        ));
        assert!(matches!(
            imf_inst_freq(&x, fs, &[false; 10], 0.1),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn tone_at_range_frequency_is_selected() {
        let fs = 5e6;
        let fr = 1.3342e6;
        let d = single(tone(fr, fs, 2048));
        let mask = vec![false; 2048];
        let inputs = SelectionInputs {
            range_freq_hz: fr,
            spread_hz: 1.0,
            sample_rate_hz: fs,
            interp_mask: &mask,
            amplitude_floor: 0.1,
        };
        let s = select_imfs(&d, &inputs).unwrap();
        assert!(s[0].selected);
        assert!(s[0].freq_deviation_hz < 1e-3 && s[0].std_inst_freq_hz < 1e-3);
        assert!(select_imfs(
            &d,
            &SelectionInputs {
                spread_hz: 0.0,
                ..inputs
            }
        )
        .is_err());
    }

    /// Phasor whose instantaneous frequency alternates between `mean - std` and `mean + std`.
    fn two_level(mean: f64, std: f64, fs: f64, len: usize) -> Vec<Complex64> {
        let mut phase = 0.0;
        (0..len)
            .map(|n| {
                let z = Complex64::from_polar(1.0, phase);
                let f = if (n / 16) % 2 == 0 { mean - std } else { mean + std };
                phase += TAU * f / fs;
                z
            })
            .collect()
    }

    #[test]
    fn experiment_statistics_select_only_first_imf() {
        let (fs, fr, len) = (5e6, 0.5e6, 4096);
        let imfs = vec![
            two_level(fr + 22.7e3, 121.5e3, fs, len),
            two_level(fr + 338.3e3, 209.42e3, fs, len),
        ];
        let d = Decomposition::new(imfs, vec![Complex64::default(); len], vec![1, 1]);
        let mask = vec![false; len];
        let s = select_imfs(
            &d,
            &SelectionInputs {
                range_freq_hz: fr,
                spread_hz: 300e3,
                sample_rate_hz: fs,
                interp_mask: &mask,
                amplitude_floor: 0.1,
            },
        )
        .unwrap();
        assert!((s[0].freq_deviation_hz - 22.7e3).abs() < 100.0);
        assert!((s[0].std_inst_freq_hz - 121.5e3).abs() < 100.0);
        assert!((s[1].freq_deviation_hz - 338.3e3).abs() < 100.0);
        assert!((s[1].std_inst_freq_hz - 209.42e3).abs() < 100.0);
        assert_eq!(s.iter().map(|x| x.selected).collect::<Vec<_>>(), [true, false]);
    }

    #[test]
    fn range_frequency_above_nyquist_is_folded() {
        let fs = 5e6;
        let d = single(tone(-1.665e6, fs, 1024));
        let mask = vec![false; 1024];
        let s = select_imfs(
            &d,
            &SelectionInputs {
                range_freq_hz: 3.335e6,
                spread_hz: 10e3,
                sample_rate_hz: fs,
                interp_mask: &mask,
                amplitude_floor: 0.1,
            },
        )
        .unwrap();
        assert!(s[0].selected && s[0].freq_deviation_hz < 1.0, "{s:?}");
    }

    #[test]
    fn reconstruct_sums_selected_and_rejects_empty() {
        let a = tone(1e3, 1e4, 64);
        let b = tone(-2e3, 1e4, 64);
        let d = Decomposition::new(vec![a.clone(), b.clone()], vec![Complex64::default(); 64], vec![1, 1]);
        let mut stats = vec![
            ImfStats {
                index: 0,
                mean_inst_freq_hz: 0.0,
                freq_deviation_hz: 0.0,
                std_inst_freq_hz: 0.0,
                valid_samples: 64,
                selected: true,
            };
            2
        ];
        stats[1].index = 1;
        stats[1].selected = false;
        assert_eq!(reconstruct(&d, &stats).unwrap(), a);
        stats[1].selected = true;
        let both = reconstruct(&d, &stats).unwrap();
        assert_eq!(both, d.sum());
        stats.iter_mut().for_each(|s| s.selected = false);
        assert!(matches!(reconstruct(&d, &stats), Err(Error::NoSignatureFound)));
    }
}
