//! Sifting for real signals and its complex (bivariate) variant.

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::spline::{mirrored_envelope, SplineValue};
use super::{Decomposition, SiftConfig};
use crate::error::{Error, Result};

/// Shortest input accepted for decomposition.
pub const MIN_SIGNAL_LEN: usize = 8;

/// Interior local maxima; on a plateau the first sample is reported.
pub fn local_maxima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1))
        .filter(|&n| x[n] > x[n - 1] && x[n] >= x[n + 1])
        .collect()
}

pub fn local_minima(x: &[f64]) -> Vec<usize> {
    (1..x.len().saturating_sub(1))
        .filter(|&n| x[n] < x[n - 1] && x[n] <= x[n + 1])
        .collect()
}

/// Sign changes between consecutive samples (zero counts as positive).
pub fn zero_crossings(x: &[f64]) -> usize {
    x.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
}

/// `|zero crossings - extrema| <= 1`.
pub fn satisfies_imf_criterion(x: &[f64]) -> bool {
    let extrema = local_maxima(x).len() + local_minima(x).len();
    zero_crossings(x).abs_diff(extrema) <= 1
}

/// Relative change between consecutive sifting iterates, averaged over samples.
///
/// The per-sample denominator `|current|^2` is floored at `1e-12 * max |current|^2`.
pub fn sift_change<T: SplineValue>(previous: &[T], current: &[T]) -> f64 {
    let peak = current.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let floor = 1e-12 * peak;
    let total: f64 = previous
        .iter()
        .zip(current)
        .map(|(p, c)| (*p - *c).norm_sqr() / c.norm_sqr().max(floor))
        .sum();
    total / current.len() as f64
}

fn real_envelope_mean(b: &[f64]) -> Result<Vec<f64>> {
    let maxima = local_maxima(b);
    let minima = local_minima(b);
    if maxima.len() < 2 || minima.len() < 2 {
        return Err(Error::NoExtrema);
    }
    let upper = mirrored_envelope(&maxima, b, b.len());
    let lower = mirrored_envelope(&minima, b, b.len());
    Ok(upper.iter().zip(&lower).map(|(u, l)| 0.5 * (u + l)).collect())
}

fn direction(k: usize, num_directions: usize) -> Complex64 {
    Complex64::from_polar(1.0, -TAU * k as f64 / num_directions as f64)
}

fn projection(b: &[Complex64], rot: Complex64) -> Vec<f64> {
    b.iter().map(|z| (rot * z).re).collect()
}

/// Mean of the direction envelopes of `b`.
///
/// For each `phi_k = 2 pi k / K`, the complex samples of `b` at the maxima of
/// `Re(exp(-j phi_k) b)` are spline-interpolated. Directions with fewer than two
/// maxima are left out of the average.
pub fn cemd_envelope_mean(b: &[Complex64], num_directions: usize) -> Result<Vec<Complex64>> {
    let mut sum = vec![Complex64::default(); b.len()];
    let mut used = 0usize;
    for k in 1..=num_directions {
        let maxima = local_maxima(&projection(b, direction(k, num_directions)));
        if maxima.len() < 2 {
            continue;
        }
        let env = mirrored_envelope(&maxima, b, b.len());
        sum.iter_mut().zip(env).for_each(|(s, e)| *s += e);
        used += 1;
    }
    if used == 0 {
        return Err(Error::NoExtrema);
    }
    let scale = 1.0 / used as f64;
    Ok(sum.into_iter().map(|s| s * scale).collect())
}

/// One complex sifting step: `b - e_mean`.
pub fn cemd_intermediate(b: &[Complex64], config: &SiftConfig) -> Result<Vec<Complex64>> {
    config.validate()?;
    let mean = cemd_envelope_mean(b, config.num_directions)?;
    Ok(b.iter().zip(mean).map(|(v, m)| v - m).collect())
}

/// Largest count of projection maxima over the `K` directions.
pub fn complex_extrema_count(b: &[Complex64], num_directions: usize) -> usize {
    (1..=num_directions)
        .map(|k| local_maxima(&projection(b, direction(k, num_directions))).len())
        .max()
        .unwrap_or(0)
}

fn real_extrema_count(b: &[f64]) -> usize {
    local_maxima(b).len() + local_minima(b).len()
}

/// Shared sifting loop. `accept` is the extra IMF test applied on top of the
/// sifting-change threshold; a candidate failing it ends the decomposition and
/// stays in the residue.
fn decompose<T: SplineValue>(
    signal: &[T],
    config: &SiftConfig,
    envelope_mean: impl Fn(&[T]) -> Result<Vec<T>>,
    extrema_count: impl Fn(&[T]) -> usize,
    accept: impl Fn(&[T]) -> bool,
) -> Result<Decomposition<T>> {
    config.validate()?;
    let mut residue = signal.to_vec();
    let mut imfs = Vec::new();
    let mut sift_iterations = Vec::new();
    if signal.len() < MIN_SIGNAL_LEN {
        return Ok(Decomposition::new(imfs, residue, sift_iterations));
    }
    while imfs.len() < config.max_imfs && extrema_count(&residue) >= config.min_extrema {
        let mut h = residue.clone();
        let mut iterations = 0;
        let mut converged = false;
        while iterations < config.max_sift_iterations {
            let Ok(mean) = envelope_mean(&h) else { break };
            let next: Vec<T> = h.iter().zip(&mean).map(|(v, m)| *v - *m).collect();
            let change = sift_change(&h, &next);
            h = next;
            iterations += 1;
            if change < config.stop_threshold && accept(&h) {
                converged = true;
                break;
            }
        }
        if iterations == 0 || !(converged || accept(&h)) {
            break;
        }
        if !converged {
            log::debug!(
                "IMF {} emitted after {iterations} sifting iterations without convergence",
                imfs.len() + 1
            );
        }
        residue.iter_mut().zip(&h).for_each(|(r, c)| *r = *r - *c);
        imfs.push(h);
        sift_iterations.push(iterations);
    }
    Ok(Decomposition::new(imfs, residue, sift_iterations))
}

/// Real-valued EMD.
///
/// Inputs shorter than [`MIN_SIGNAL_LEN`] or without extrema come back as a
/// residue with no IMFs. Every emitted IMF satisfies [`satisfies_imf_criterion`].
pub fn sift_real(signal: &[f64], config: &SiftConfig) -> Result<Decomposition<f64>> {
    decompose(
        signal,
        config,
        real_envelope_mean,
        real_extrema_count,
        satisfies_imf_criterion,
    )
}

/// Complex EMD with `K` projection directions; stops after `max_imfs` IMFs.
pub fn cemd_decompose(signal: &[Complex64], config: &SiftConfig) -> Result<Decomposition<Complex64>> {
    let k = config.num_directions;
    decompose(
        signal,
        config,
        |b| cemd_envelope_mean(b, k),
        |b| complex_extrema_count(b, k),
        |_| true,
    )
}
