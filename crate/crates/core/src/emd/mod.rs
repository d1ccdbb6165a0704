//! Empirical mode decomposition (real and complex), IMF frequency statistics,
//! and reconstruction from the IMFs that sit near the target.

mod sift;
mod spline;
mod stats;

pub use sift::{
    cemd_decompose, cemd_envelope_mean, cemd_intermediate, complex_extrema_count, local_maxima, local_minima,
    satisfies_imf_criterion, sift_change, sift_real, zero_crossings, MIN_SIGNAL_LEN,
};
pub use spline::{mirrored_envelope, NaturalSpline, SplineValue};
pub use stats::{imf_inst_freq, reconstruct, select_imfs, ImfStats, InstFreq, SelectionInputs};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftConfig {
    /// Threshold on the mean relative change between sifting iterates.
    pub stop_threshold: f64,
    pub max_imfs: usize,
    /// Projection directions for the complex variant.
    pub num_directions: usize,
    /// The decomposition stops once the residue has fewer extrema than this.
    pub min_extrema: usize,
    pub max_sift_iterations: usize,
}

impl Default for SiftConfig {
    fn default() -> Self {
        Self {
            stop_threshold: 0.2,
            max_imfs: 4,
            num_directions: 8,
            min_extrema: 2,
            max_sift_iterations: 50,
        }
    }
}

impl SiftConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.stop_threshold > 0.0 && self.stop_threshold.is_finite()) {
            return Err(Error::invalid(
                "stop_threshold",
                format!("must be > 0, got {}", self.stop_threshold),
            ));
        }
        if self.max_imfs < 1 {
            return Err(Error::invalid("max_imfs", "must be >= 1"));
        }
        if self.num_directions < 4 {
            return Err(Error::invalid(
                "num_directions",
                format!("must be >= 4, got {}", self.num_directions),
            ));
        }
        if self.min_extrema < 2 {
            return Err(Error::invalid(
                "min_extrema",
                format!("must be >= 2, got {}", self.min_extrema),
            ));
        }
        if self.max_sift_iterations < 1 {
            return Err(Error::invalid("max_sift_iterations", "must be >= 1"));
        }
        Ok(())
    }
}

/// IMFs in extraction order plus the final residue.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<T> {
    pub imfs: Vec<Vec<T>>,
    pub residue: Vec<T>,
    pub input_len: usize,
    /// Sifting iterations spent on each IMF.
    pub sift_iterations: Vec<usize>,
}

impl<T: SplineValue> Decomposition<T> {
    pub(crate) fn new(imfs: Vec<Vec<T>>, residue: Vec<T>, sift_iterations: Vec<usize>) -> Self {
        Self {
            input_len: residue.len(),
            imfs,
            residue,
            sift_iterations,
        }
    }

    /// Sum of every IMF and the residue.
    pub fn sum(&self) -> Vec<T> {
        let mut total = self.residue.clone();
        for imf in &self.imfs {
            total.iter_mut().zip(imf).for_each(|(t, v)| *t = *t + *v);
        }
        total
    }

    /// Largest `|sum - input|` relative to `max |input|`.
    pub fn reconstruction_error(&self, input: &[T]) -> f64 {
        let peak = input.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max).sqrt();
        let worst = self
            .sum()
            .iter()
            .zip(input)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .fold(0.0, f64::max)
            .sqrt();
        if peak == 0.0 {
            worst
        } else {
            worst / peak
        }
    }
}
