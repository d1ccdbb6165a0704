//! CSV writers for maps, spectrograms and IMF statistics.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed run never leaves a truncated output behind.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::emd::ImfStats;
use crate::error::Result;
use crate::spectral::{RdMap, Spectrogram};

pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Grid with a header row of column-axis values and a leading column of row-axis values.
fn grid_csv(corner: &str, rows_axis: &[f64], cols_axis: &[f64], values: &Array2<f64>) -> String {
    let mut out = String::with_capacity(values.len() * 14);
    out.push_str(corner);
    for c in cols_axis {
        write!(out, ",{c:e}").unwrap();
    }
    out.push('\n');
    for (r, row) in rows_axis.iter().zip(values.rows()) {
        write!(out, "{r:e}").unwrap();
        for v in row {
            write!(out, ",{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// RD magnitude in dB; rows are Doppler bins, columns range bins.
pub fn rd_map_csv(map: &RdMap) -> String {
    grid_csv(
        "doppler_hz\\range_hz",
        &map.doppler_axis_hz,
        &map.range_axis_hz,
        &map.magnitude_db(),
    )
}

/// Spectrogram in dB; rows are frames, columns frequency bins.
pub fn spectrogram_csv(spec: &Spectrogram) -> String {
    grid_csv(
        "time_s\\freq_hz",
        &spec.frame_times_s,
        &spec.freq_axis_hz,
        &spec.magnitude_db,
    )
}

pub const IMF_STATS_HEADER: &str = "imf,mean_inst_freq_hz,freq_deviation_hz,std_inst_freq_hz,valid_samples,selected";

/// One row per IMF, numbered from 1.
pub fn imf_stats_csv(stats: &[ImfStats]) -> String {
    let mut out = String::from(IMF_STATS_HEADER);
    out.push('\n');
    for s in stats {
        writeln!(
            out,
            "{},{:e},{:e},{:e},{},{}",
            s.index + 1,
            s.mean_inst_freq_hz,
            s.freq_deviation_hz,
            s.std_inst_freq_hz,
            s.valid_samples,
            s.selected
        )
        .unwrap();
    }
    out
}

/// Parses a grid written by [`rd_map_csv`] or [`spectrogram_csv`] into
/// `(row axis, column axis, values)`.
pub fn parse_grid_csv(text: &str) -> Option<(Vec<f64>, Vec<f64>, Array2<f64>)> {
    let mut lines = text.lines();
    let cols: Vec<f64> = lines
        .next()?
        .split(',')
        .skip(1)
        .map(|v| v.parse().ok())
        .collect::<Option<_>>()?;
    let mut rows = Vec::new();
    let mut values = Vec::new();
    for line in lines {
        let mut fields = line.split(',');
        rows.push(fields.next()?.parse().ok()?);
        let before = values.len();
        for f in fields {
            values.push(f.parse().ok()?);
        }
        if values.len() - before != cols.len() {
            return None;
        }
    }
    let grid = Array2::from_shape_vec((rows.len(), cols.len()), values).ok()?;
    Some((rows, cols, grid))
}
