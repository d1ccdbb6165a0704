//! Raw ADC captures: interleaved 16-bit I/Q samples, chirp after chirp.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar_model::{ChirpMatrix, RadarParams};

/// Full-scale value of a signed 16-bit sample.
const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IqOrder {
    #[default]
    Iq,
    Qi,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endianness {
    #[default]
    Little,
    Big,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureLayout {
    pub path: PathBuf,
    pub num_chirps: usize,
    pub samples_per_chirp: usize,
    pub iq_order: IqOrder,
    /// Only 2 is supported.
    pub sample_width_bytes: usize,
    pub endianness: Endianness,
}

impl CaptureLayout {
    pub fn new(path: impl Into<PathBuf>, num_chirps: usize, samples_per_chirp: usize) -> Self {
        Self {
            path: path.into(),
            num_chirps,
            samples_per_chirp,
            iq_order: IqOrder::Iq,
            sample_width_bytes: 2,
            endianness: Endianness::Little,
        }
    }

    pub fn expected_bytes(&self) -> usize {
        self.num_chirps * self.samples_per_chirp * 2 * self.sample_width_bytes
    }
}

fn capture_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Capture {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Decodes capture bytes into a `num_chirps x samples_per_chirp` array scaled to [-1, 1).
pub fn decode_samples(bytes: &[u8], layout: &CaptureLayout) -> Result<Array2<Complex64>> {
    if layout.sample_width_bytes != 2 {
        return Err(capture_err(
            &layout.path,
            format!("unsupported sample width {} bytes", layout.sample_width_bytes),
        ));
    }
    let expected = layout.expected_bytes();
    if bytes.len() != expected {
        return Err(capture_err(
            &layout.path,
            format!(
                "expected {expected} bytes ({} chirps x {} samples x 4), found {}",
                layout.num_chirps,
                layout.samples_per_chirp,
                bytes.len()
            ),
        ));
    }
    let word = |chunk: &[u8]| {
        let pair = [chunk[0], chunk[1]];
        let v = match layout.endianness {
            Endianness::Little => i16::from_le_bytes(pair),
            Endianness::Big => i16::from_be_bytes(pair),
        };
        v as f64 / FULL_SCALE
    };
    let values: Vec<Complex64> = bytes
        .chunks_exact(4)
        .map(|c| {
            let (a, b) = (word(&c[..2]), word(&c[2..]));
            match layout.iq_order {
                IqOrder::Iq => Complex64::new(a, b),
                IqOrder::Qi => Complex64::new(b, a),
            }
        })
        .collect();
    Ok(Array2::from_shape_vec((layout.num_chirps, layout.samples_per_chirp), values).expect("length checked above"))
}

/// Inverse of [`decode_samples`]; components are rounded and saturated to 16 bits.
pub fn encode_samples(samples: &Array2<Complex64>, layout: &CaptureLayout) -> Vec<u8> {
    let word = |v: f64| {
        let q = (v * FULL_SCALE).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16;
        match layout.endianness {
            Endianness::Little => q.to_le_bytes(),
            Endianness::Big => q.to_be_bytes(),
        }
    };
    let mut out = Vec::with_capacity(samples.len() * 4);
    for z in samples.iter() {
        let (a, b) = match layout.iq_order {
            IqOrder::Iq => (z.re, z.im),
            IqOrder::Qi => (z.im, z.re),
        };
        out.extend_from_slice(&word(a));
        out.extend_from_slice(&word(b));
    }
    out
}

pub fn read_adc_samples(layout: &CaptureLayout) -> Result<Array2<Complex64>> {
    let bytes = std::fs::read(&layout.path).map_err(|e| capture_err(&layout.path, format!("cannot read: {e}")))?;
    decode_samples(&bytes, layout)
}

/// Reads a capture whose shape must match `params`.
pub fn read_adc_capture(layout: &CaptureLayout, params: &RadarParams) -> Result<ChirpMatrix> {
    if layout.num_chirps != params.num_chirps || layout.samples_per_chirp != params.samples_per_chirp() {
        return Err(capture_err(
            &layout.path,
            format!(
                "layout is {} x {} but the radar parameters imply {} x {}",
                layout.num_chirps,
                layout.samples_per_chirp,
                params.num_chirps,
                params.samples_per_chirp()
            ),
        ));
    }
    Ok(ChirpMatrix {
        samples: read_adc_samples(layout)?,
        params: *params,
    })
}

pub fn write_capture(chirps: &ChirpMatrix, layout: &CaptureLayout) -> Result<()> {
    if chirps.samples.dim() != (layout.num_chirps, layout.samples_per_chirp) {
        return Err(Error::LengthMismatch {
            expected: layout.num_chirps * layout.samples_per_chirp,
            actual: chirps.samples.len(),
        });
    }
    super::export::write_atomic(&layout.path, &encode_samples(&chirps.samples, layout))
}

/// Summary printed by `mdkit inspect-capture`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureSummary {
    pub num_chirps: usize,
    pub samples_per_chirp: usize,
    pub rms: f64,
    pub peak: f64,
    /// Fraction of components at either 16-bit limit.
    pub clipped_fraction: f64,
    pub mean: Complex64,
}

pub fn summarize(samples: &Array2<Complex64>) -> CaptureSummary {
    let n = samples.len().max(1) as f64;
    let limit = (i16::MAX as f64) / FULL_SCALE;
    let mut power = 0.0;
    let mut peak = 0.0f64;
    let mut clipped = 0usize;
    let mut mean = Complex64::default();
    for z in samples.iter() {
        power += z.norm_sqr();
        peak = peak.max(z.re.abs()).max(z.im.abs());
        clipped += [z.re, z.im].iter().filter(|v| **v >= limit || **v <= -1.0).count();
        mean += z;
    }
    CaptureSummary {
        num_chirps: samples.nrows(),
        samples_per_chirp: samples.ncols(),
        rms: (power / n).sqrt(),
        peak,
        clipped_fraction: clipped as f64 / (2.0 * n),
        mean: mean / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(order: IqOrder, endianness: Endianness) -> CaptureLayout {
        CaptureLayout {
            iq_order: order,
            endianness,
            ..CaptureLayout::new("mem", 2, 3)
        }
    }

    #[test]
    fn decodes_known_words() {
        // I = 16384 (0.5), Q = -32768 (-1.0), little endian.
        let mut bytes = Vec::new();
        for _ in 0..6 {
            bytes.extend_from_slice(&16384i16.to_le_bytes());
            bytes.extend_from_slice(&(-32768i16).to_le_bytes());
        }
        let m = decode_samples(&bytes, &layout(IqOrder::Iq, Endianness::Little)).unwrap();
        assert_eq!(m.dim(), (2, 3));
        assert_eq!(m[[1, 2]], Complex64::new(0.5, -1.0));
        let m = decode_samples(&bytes, &layout(IqOrder::Qi, Endianness::Little)).unwrap();
        assert_eq!(m[[0, 0]], Complex64::new(-1.0, 0.5));
    }

    #[test]
    fn round_trip_every_layout() {
        let samples = Array2::from_shape_fn((2, 3), |(r, c)| {
            Complex64::new(r as f64 * 0.25 - 0.5, c as f64 * -0.125)
        });
        for order in [IqOrder::Iq, IqOrder::Qi] {
            for end in [Endianness::Little, Endianness::Big] {
                let l = layout(order, end);
                assert_eq!(decode_samples(&encode_samples(&samples, &l), &l).unwrap(), samples);
            }
        }
    }

    #[test]
    fn size_mismatch_reports_both_sizes() {
        let err = decode_samples(&[0u8; 20], &layout(IqOrder::Iq, Endianness::Little)).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let msg = err.to_string();
        assert!(msg.contains("24") && msg.contains("20"), "{msg}");
    }

    #[test]
    fn summary_of_a_constant_capture() {
        let s = summarize(&Array2::from_elem((4, 4), Complex64::new(0.6, -0.8)));
        assert!((s.rms - 1.0).abs() < 1e-12);
        assert_eq!(s.peak, 0.8);
        assert_eq!(s.clipped_fraction, 0.0);
    }
}
