//! Pipeline orchestration: load or synthesize chirps, run one of the four
//! pipelines, write outputs.

use std::path::PathBuf;

use num_complex::Complex64;

use super::capture::read_adc_capture;
use super::config::{PipelineKind, RunConfig, Source};
use super::export::{imf_stats_csv, rd_map_csv, spectrogram_csv, write_atomic};
use crate::assembly::{
    append_raw, append_with_linear_fit, ftmdse_demodulate, stmdse_extract, strongest_range_bin, FastTimeStream,
};
use crate::emd::{cemd_decompose, reconstruct, select_imfs, Decomposition, ImfStats, SelectionInputs};
use crate::error::{Error, Result};
use crate::radar_model::{alias_report, md_max_spread, rpm_to_rad_s, synth_scene, ChirpMatrix};
use crate::rd_filter::{apply_filter, design_filter, GaussianRdFilter};
use crate::spectral::{inverse_rd, rd_map, rd_peak, spectrogram_with, RdMap, RdPeak, Spectrogram};

/// Synthesizes the configured scene or reads the configured capture.
pub fn load_chirps(cfg: &RunConfig) -> Result<ChirpMatrix> {
    match &cfg.source {
        Source::Simulated(s) => synth_scene(&cfg.radar, &s.target, s.snr_db, s.blade_body_ratio_db, s.seed),
        Source::Capture(layout) => read_adc_capture(layout, &cfg.radar),
    }
}

/// Where the pipeline centers its processing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetEstimate {
    pub peak: RdPeak,
    pub range_freq_hz: f64,
    pub doppler_hz: f64,
    pub range_m: f64,
    pub velocity_mps: f64,
}

/// RD-map peak, with any configured range or velocity taking precedence.
pub fn estimate_target(map: &RdMap, cfg: &RunConfig) -> TargetEstimate {
    let peak = rd_peak(map);
    let p = &cfg.radar;
    let range_freq_hz = cfg.target_range_m.map_or(peak.range_hz, |r| p.beat_frequency_hz(r));
    let doppler_hz = cfg
        .target_velocity_mps
        .map_or(peak.doppler_hz, |v| p.doppler_frequency_hz(v));
    TargetEstimate {
        peak,
        range_freq_hz,
        doppler_hz,
        range_m: p.range_for_beat_hz(range_freq_hz),
        velocity_mps: p.velocity_for_doppler_hz(doppler_hz),
    }
}

/// Configured spread, or the analytic spread of a simulated target.
pub fn expected_spread(cfg: &RunConfig) -> Result<f64> {
    match (cfg.expected_spread_hz, &cfg.source) {
        (Some(s), _) => Ok(s),
        (None, Source::Simulated(s)) => Ok(md_max_spread(&cfg.radar, &s.target)),
        (None, Source::Capture(_)) => Err(Error::Config(
            "pipeline.expected_spread_hz: required when processing a capture".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct ProposedResult {
    pub rd_pre: RdMap,
    pub rd_post: RdMap,
    pub estimate: TargetEstimate,
    pub spread_hz: f64,
    pub filter: GaussianRdFilter,
    pub stream: FastTimeStream,
    pub decomposition: Decomposition<Complex64>,
    pub stats: Vec<ImfStats>,
    /// Sum of the selected IMFs; `None` when no IMF passed the selection.
    pub signature: Option<Vec<Complex64>>,
    /// Spectrogram of `signature`, frame times in absolute seconds.
    pub spectrogram: Option<Spectrogram>,
}

impl ProposedResult {
    pub fn num_selected(&self) -> usize {
        self.stats.iter().filter(|s| s.selected).count()
    }
}

/// RD filter, linear fit across idle gaps, CEMD, IMF selection and the
/// spectrogram of the reconstruction.
pub fn run_proposed(chirps: &ChirpMatrix, cfg: &RunConfig) -> Result<ProposedResult> {
    let spread_hz = expected_spread(cfg)?;
    let rd_pre = rd_map(chirps)?;
    let estimate = estimate_target(&rd_pre, cfg);
    let filter = design_filter((estimate.range_freq_hz, estimate.doppler_hz), spread_hz, &cfg.radar)?;
    let rd_post = apply_filter(&rd_pre, &filter);
    let stream = append_with_linear_fit(&inverse_rd(&rd_post));
    let decomposition = cemd_decompose(&stream.samples, &cfg.sift)?;
    // A zero spread would select nothing; keep the one-bin floor the filter uses.
    let selection_spread = spread_hz.max(cfg.radar.range_bin_hz());
    let stats = select_imfs(
        &decomposition,
        &SelectionInputs {
            range_freq_hz: estimate.range_freq_hz,
            spread_hz: selection_spread,
            sample_rate_hz: cfg.radar.sample_rate_hz,
            interp_mask: &stream.interp_mask,
            amplitude_floor: cfg.amplitude_floor,
        },
    )?;
    let signature = match reconstruct(&decomposition, &stats) {
        Ok(s) => Some(s),
        Err(Error::NoSignatureFound) => None,
        Err(e) => return Err(e),
    };
    let spectrogram = match &signature {
        Some(sig) => {
            let mut spec = spectrogram_with(sig, cfg.radar.sample_rate_hz, &cfg.stft)?;
            spec.retime(|i| stream.sample_time(i));
            Some(spec)
        }
        None => None,
    };
    Ok(ProposedResult {
        rd_pre,
        rd_post,
        estimate,
        spread_hz,
        filter,
        stream,
        decomposition,
        stats,
        signature,
        spectrogram,
    })
}

#[derive(Debug, Clone)]
pub struct StmdseResult {
    pub rd_pre: RdMap,
    pub range_bin: usize,
    /// Range-DFT column across chirps.
    pub series: Vec<Complex64>,
    /// Centered Doppler axis, frame times in absolute seconds.
    pub spectrogram: Spectrogram,
}

/// Slow-time spectrogram of one range bin.
pub fn run_stmdse(chirps: &ChirpMatrix, cfg: &RunConfig) -> Result<StmdseResult> {
    let rd_pre = rd_map(chirps)?;
    let range_bin = match cfg.stmdse_range_bin {
        Some(b) => b,
        None => strongest_range_bin(chirps),
    };
    let series = stmdse_extract(chirps, range_bin)?;
    let crf = cfg.radar.chirp_repetition_frequency_hz();
    let mut spectrogram = spectrogram_with(&series, crf, &cfg.slow_time_stft)?.centered();
    let interval = cfg.radar.chirp_interval_s;
    spectrogram.retime(|l| l as f64 * interval);
    Ok(StmdseResult {
        rd_pre,
        range_bin,
        series,
        spectrogram,
    })
}

#[derive(Debug, Clone)]
pub struct FtmdseRawResult {
    pub rd_pre: RdMap,
    pub estimate: TargetEstimate,
    /// Demodulated chirps appended without idle-time handling.
    pub stream: FastTimeStream,
    /// Centered axis around the demodulated body, frame times in absolute seconds.
    pub spectrogram: Spectrogram,
}

/// Demodulates at the estimated range and velocity and appends the chirps back to back.
pub fn run_ftmdse_raw(chirps: &ChirpMatrix, cfg: &RunConfig) -> Result<FtmdseRawResult> {
    let rd_pre = rd_map(chirps)?;
    let estimate = estimate_target(&rd_pre, cfg);
    let stream = append_raw(&ftmdse_demodulate(chirps, estimate.range_m, estimate.velocity_mps));
    let mut spectrogram = spectrogram_with(&stream.samples, cfg.radar.sample_rate_hz, &cfg.stft)?.centered();
    spectrogram.retime(|i| stream.sample_time(i));
    Ok(FtmdseRawResult {
        rd_pre,
        estimate,
        stream,
        spectrogram,
    })
}

/// Files written by [`execute`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable `key: value` lines.
    pub summary: Vec<String>,
}

fn derived_table(cfg: &RunConfig) -> toml::Table {
    let p = &cfg.radar;
    let mut t = toml::Table::new();
    let mut put = |k: &str, v: toml::Value| {
        t.insert(k.to_string(), v);
    };
    put("bandwidth_hz", p.bandwidth_hz().into());
    put("wavelength_m", p.wavelength_m().into());
    put("samples_per_chirp", (p.samples_per_chirp() as i64).into());
    put("idle_samples", (p.idle_samples() as i64).into());
    put("idle_samples_exact", p.idle_samples_exact().into());
    put(
        "chirp_repetition_frequency_hz",
        p.chirp_repetition_frequency_hz().into(),
    );
    put("range_bin_hz", p.range_bin_hz().into());
    put("range_bin_size_m", p.range_bin_size_m().into());
    put("doppler_bin_hz", p.doppler_bin_hz().into());
    if let Some(s) = cfg.scene() {
        let r = alias_report(p, &s.target);
        put("range_freq_hz", p.beat_frequency_hz(s.target.range_m).into());
        put("md_max_spread_hz", r.spread_hz.into());
        put("slow_time_aliased", r.slow_time_aliased.into());
        put("fast_time_ok", r.fast_time_ok.into());
    }
    t
}

fn log_rounding(cfg: &RunConfig) {
    let p = &cfg.radar;
    let n_exact = p.chirp_duration_s * p.sample_rate_hz;
    if (n_exact - p.samples_per_chirp() as f64).abs() > 1e-9 {
        log::info!("samples per chirp: {n_exact:.4} rounded to {}", p.samples_per_chirp());
    }
    let q_exact = p.idle_samples_exact();
    if (q_exact - p.idle_samples() as f64).abs() > 1e-9 {
        log::info!("idle samples per gap: {q_exact:.4} rounded to {}", p.idle_samples());
    }
}

struct Writer {
    dir: PathBuf,
    report: RunReport,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        log::info!("wrote {}", path.display());
        self.report.files.push(path);
        Ok(())
    }

    fn note(&mut self, line: String) {
        self.report.summary.push(line);
    }
}

/// Runs the configured pipeline and writes its outputs to `cfg.output_dir`.
///
/// When the proposed pipeline selects no IMF, the RD maps, IMF statistics and
/// manifest are still written before `NoSignatureFound` is returned.
pub fn execute(cfg: &RunConfig) -> Result<RunReport> {
    log_rounding(cfg);
    let chirps = load_chirps(cfg)?;
    let mut derived = derived_table(cfg);
    let mut w = Writer {
        dir: cfg.output_dir.clone(),
        report: RunReport::default(),
    };
    w.note(format!("pipeline: {}", cfg.pipeline.name()));
    let mut outcome = Ok(());
    match cfg.pipeline {
        PipelineKind::Simulate => {
            let map = rd_map(&chirps)?;
            let peak = rd_peak(&map);
            w.note(format!(
                "rd peak: {:.1} Hz range, {:.1} Hz Doppler",
                peak.range_hz, peak.doppler_hz
            ));
            w.put("rd_map_pre.csv", &rd_map_csv(&map))?;
        }
        PipelineKind::Stmdse => {
            let r = run_stmdse(&chirps, cfg)?;
            w.note(format!("range bin: {}", r.range_bin));
            derived.insert("stmdse_range_bin".into(), (r.range_bin as i64).into());
            w.put("rd_map_pre.csv", &rd_map_csv(&r.rd_pre))?;
            w.put("spectrogram.csv", &spectrogram_csv(&r.spectrogram))?;
        }
        PipelineKind::FtmdseRaw => {
            let r = run_ftmdse_raw(&chirps, cfg)?;
            w.note(format!(
                "demodulated at {:.3} m, {:.3} m/s",
                r.estimate.range_m, r.estimate.velocity_mps
            ));
            derived.insert("estimated_range_m".into(), r.estimate.range_m.into());
            derived.insert("estimated_velocity_mps".into(), r.estimate.velocity_mps.into());
            w.put("rd_map_pre.csv", &rd_map_csv(&r.rd_pre))?;
            w.put("spectrogram.csv", &spectrogram_csv(&r.spectrogram))?;
        }
        PipelineKind::Proposed => {
            let r = run_proposed(&chirps, cfg)?;
            w.note(format!(
                "target: {:.1} Hz range, {:.1} Hz Doppler; expected spread {:.1} Hz",
                r.estimate.range_freq_hz, r.estimate.doppler_hz, r.spread_hz
            ));
            for s in &r.stats {
                w.note(format!(
                    "IMF {}: deviation {:.1} Hz, std {:.1} Hz, {}",
                    s.index + 1,
                    s.freq_deviation_hz,
                    s.std_inst_freq_hz,
                    if s.selected { "selected" } else { "rejected" }
                ));
            }
            derived.insert("estimated_range_freq_hz".into(), r.estimate.range_freq_hz.into());
            derived.insert("estimated_doppler_hz".into(), r.estimate.doppler_hz.into());
            derived.insert("expected_spread_hz".into(), r.spread_hz.into());
            derived.insert("filter_range_cutoff_hz".into(), r.filter.range_cutoff_hz().into());
            derived.insert("imfs_selected".into(), (r.num_selected() as i64).into());
            w.put("rd_map_pre.csv", &rd_map_csv(&r.rd_pre))?;
            w.put("rd_map_post.csv", &rd_map_csv(&r.rd_post))?;
            w.put("imf_stats.csv", &imf_stats_csv(&r.stats))?;
            match &r.spectrogram {
                Some(spec) => w.put("spectrogram.csv", &spectrogram_csv(spec))?,
                None => outcome = Err(Error::NoSignatureFound),
            }
        }
    }
    w.put("manifest.cfg", &cfg.to_manifest(derived))?;
    outcome.map(|_| w.report)
}

/// Scene parameters that `mdkit sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    RotationRpm,
    BladeLengthM,
    RangeM,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotation_rpm" => Ok(SweepParam::RotationRpm),
            "blade_length_m" => Ok(SweepParam::BladeLengthM),
            "range_m" => Ok(SweepParam::RangeM),
            other => Err(Error::Config(format!(
                "--param: unknown parameter `{other}` (expected rotation_rpm, blade_length_m or range_m)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub md_max_spread_hz: f64,
    pub slow_time_aliased: bool,
    pub imfs_selected: usize,
    pub imf1_deviation_hz: f64,
    pub imf1_std_hz: f64,
}

pub const SWEEP_HEADER: &str = "value,md_max_spread_hz,slow_time_aliased,imfs_selected,imf1_deviation_hz,imf1_std_hz";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{:e},{},{},{:e},{:e}",
            self.value,
            self.md_max_spread_hz,
            self.slow_time_aliased,
            self.imfs_selected,
            self.imf1_deviation_hz,
            self.imf1_std_hz
        )
    }
}

/// Runs the proposed pipeline once per value of `param`, without writing files.
pub fn sweep(cfg: &RunConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>> {
    if cfg.scene().is_none() {
        return Err(Error::Config(
            "sweep needs a simulated [target], not a [capture]".into(),
        ));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut run = cfg.clone();
        let Source::Simulated(scene) = &mut run.source else {
            unreachable!("checked above")
        };
        match param {
            SweepParam::RotationRpm => scene.target.rotation_rate_rad_s = rpm_to_rad_s(value),
            SweepParam::BladeLengthM => scene.target.blade_length_m = value,
            SweepParam::RangeM => scene.target.range_m = value,
        }
        scene
            .target
            .validate()
            .map_err(|e| Error::Config(format!("--values {value}: {e}")))?;
        let report = alias_report(&run.radar, &scene.target);
        let result = run_proposed(&load_chirps(&run)?, &run)?;
        let first = result.stats.first();
        rows.push(SweepRow {
            value,
            md_max_spread_hz: report.spread_hz,
            slow_time_aliased: report.slow_time_aliased,
            imfs_selected: result.num_selected(),
            imf1_deviation_hz: first.map_or(f64::NAN, |s| s.freq_deviation_hz),
            imf1_std_hz: first.map_or(f64::NAN, |s| s.std_inst_freq_hz),
        });
    }
    Ok(rows)
}
