//! Run configuration: `key = value` lines under `[section]` headers (TOML syntax).
//!
//! A run is driven either by a simulated `[target]` or by a raw `[capture]`,
//! never both. The manifest written next to the outputs uses the same format and
//! can be passed back to `mdkit run`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::capture::{CaptureLayout, Endianness, IqOrder};
use crate::emd::SiftConfig;
use crate::error::{Error, Result};
use crate::radar_model::{rad_s_to_rpm, rpm_to_rad_s, RadarParams, RotorTarget};
use crate::spectral::StftConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PipelineKind {
    /// Synthesize and write the range-Doppler map.
    Simulate,
    /// Slow-time spectrogram of one range bin.
    Stmdse,
    /// Demodulated chirps appended back to back, no idle-time handling.
    FtmdseRaw,
    /// RD filter, linear fit across idle gaps, CEMD, IMF selection.
    Proposed,
}

impl PipelineKind {
    pub fn name(&self) -> &'static str {
        match self {
            PipelineKind::Simulate => "simulate",
            PipelineKind::Stmdse => "stmdse",
            PipelineKind::FtmdseRaw => "ftmdse-raw",
            PipelineKind::Proposed => "proposed",
        }
    }
}

impl std::str::FromStr for PipelineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(PipelineKind::Simulate),
            "stmdse" => Ok(PipelineKind::Stmdse),
            "ftmdse-raw" => Ok(PipelineKind::FtmdseRaw),
            "proposed" => Ok(PipelineKind::Proposed),
            other => Err(Error::Config(format!(
                "pipeline: unknown kind `{other}` (expected simulate, stmdse, ftmdse-raw or proposed)"
            ))),
        }
    }
}

/// A simulated scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub target: RotorTarget,
    /// Body power over noise power; `inf` disables noise.
    pub snr_db: f64,
    pub blade_body_ratio_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Simulated(SceneSpec),
    Capture(CaptureLayout),
}

/// Validated settings for one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub radar: RadarParams,
    pub source: Source,
    pub pipeline: PipelineKind,
    /// Maximum anticipated micro-Doppler spread. Defaults to the target's analytic spread.
    pub expected_spread_hz: Option<f64>,
    /// Replaces the range of the RD-map peak when set.
    pub target_range_m: Option<f64>,
    /// Replaces the velocity of the RD-map peak when set.
    pub target_velocity_mps: Option<f64>,
    /// Slow-time range bin; defaults to the strongest mean range bin.
    pub stmdse_range_bin: Option<usize>,
    pub stft: StftConfig,
    /// Window over chirps for slow-time spectrograms.
    pub slow_time_stft: StftConfig,
    pub sift: SiftConfig,
    /// Samples with `|imf|` below this fraction of the median are left out of IMF statistics.
    pub amplitude_floor: f64,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    range_m: f64,
    #[serde(default)]
    radial_velocity_mps: f64,
    #[serde(default = "one")]
    body_amplitude: f64,
    #[serde(default)]
    blade_length_m: f64,
    #[serde(default)]
    rotation_rpm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_blades: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blade_offsets_rad: Option<Vec<f64>>,
    #[serde(default)]
    elevation_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneSection {
    #[serde(default = "default_snr")]
    snr_db: f64,
    #[serde(default)]
    blade_body_ratio_db: f64,
    #[serde(default)]
    seed: u64,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            snr_db: default_snr(),
            blade_body_ratio_db: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaptureSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<PathBuf>,
    num_chirps: usize,
    samples_per_chirp: usize,
    #[serde(default)]
    iq_order: IqOrder,
    #[serde(default = "default_width")]
    sample_width_bytes: usize,
    #[serde(default)]
    endianness: Endianness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PipelineSection {
    #[serde(default = "default_kind")]
    kind: PipelineKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expected_spread_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_range_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_velocity_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stmdse_range_bin: Option<usize>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            expected_spread_hz: None,
            target_range_m: None,
            target_velocity_mps: None,
            stmdse_range_bin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct StftSection {
    window_length: usize,
    overlap_fraction: f64,
    pad_factor: usize,
    slow_time_window: usize,
    slow_time_overlap_fraction: f64,
}

impl Default for StftSection {
    fn default() -> Self {
        Self {
            window_length: 512,
            overlap_fraction: 0.9,
            pad_factor: 1,
            slow_time_window: 32,
            slow_time_overlap_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct SiftSection {
    stop_threshold: f64,
    max_imfs: usize,
    num_directions: usize,
    min_extrema: usize,
    max_sift_iterations: usize,
    amplitude_floor: f64,
}

impl Default for SiftSection {
    fn default() -> Self {
        let d = SiftConfig::default();
        Self {
            stop_threshold: d.stop_threshold,
            max_imfs: d.max_imfs,
            num_directions: d.num_directions,
            min_extrema: d.min_extrema,
            max_sift_iterations: d.max_sift_iterations,
            amplitude_floor: DEFAULT_AMPLITUDE_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default = "default_output_dir")]
    dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
        }
    }
}

/// On-disk layout of a config or manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    radar: RadarParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<TargetSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scene: Option<SceneSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    capture: Option<CaptureSection>,
    #[serde(default)]
    pipeline: PipelineSection,
    #[serde(default)]
    stft: StftSection,
    #[serde(default)]
    sift: SiftSection,
    #[serde(default)]
    output: OutputSection,
    /// Informational values written into manifests; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    derived: Option<toml::Table>,
}

pub const DEFAULT_AMPLITUDE_FLOOR: f64 = 0.1;

fn one() -> f64 {
    1.0
}

fn default_snr() -> f64 {
    f64::INFINITY
}

fn default_width() -> usize {
    2
}

fn default_kind() -> PipelineKind {
    PipelineKind::Proposed
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn config_err(field: &str, reason: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {reason}"))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(config_err(field, format!("must be a positive finite number, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(config_err(field, format!("must be finite, got {v}")))
    }
}

/// Maps a parameter validation failure to a config error naming the section.
fn in_section<T>(section: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidParameter { field, reason } => Error::Config(format!("{section}.{field}: {reason}")),
        other => other,
    })
}

impl TargetSection {
    fn to_target(&self) -> Result<RotorTarget> {
        finite("target.range_m", self.range_m)?;
        finite("target.radial_velocity_mps", self.radial_velocity_mps)?;
        finite("target.rotation_rpm", self.rotation_rpm)?;
        if self.blade_length_m < 0.0 || !self.blade_length_m.is_finite() {
            return Err(config_err(
                "target.blade_length_m",
                format!("must be >= 0, got {}", self.blade_length_m),
            ));
        }
        let offsets = match (&self.blade_offsets_rad, self.num_blades) {
            (Some(offsets), Some(n)) if offsets.len() != n => {
                return Err(config_err(
                    "target.blade_offsets_rad",
                    format!("lists {} blades but target.num_blades = {n}", offsets.len()),
                ))
            }
            (Some(offsets), _) => offsets.clone(),
            (None, Some(n)) => RotorTarget::evenly_spaced(0.0, n, 0.0, 0.0).blade_offsets_rad,
            (None, None) => Vec::new(),
        };
        if !offsets.is_empty() && self.blade_length_m == 0.0 {
            return Err(config_err(
                "target.blade_length_m",
                "must be > 0 when blades are present",
            ));
        }
        let target = RotorTarget {
            range_m: self.range_m,
            radial_velocity_mps: self.radial_velocity_mps,
            body_amplitude: self.body_amplitude,
            blade_amplitude: 1.0,
            blade_length_m: self.blade_length_m,
            rotation_rate_rad_s: rpm_to_rad_s(self.rotation_rpm),
            blade_offsets_rad: offsets,
            elevation_rad: self.elevation_rad,
        };
        in_section("target", target.validate())?;
        Ok(target)
    }

    fn from_target(t: &RotorTarget) -> Self {
        Self {
            range_m: t.range_m,
            radial_velocity_mps: t.radial_velocity_mps,
            body_amplitude: t.body_amplitude,
            blade_length_m: t.blade_length_m,
            rotation_rpm: rad_s_to_rpm(t.rotation_rate_rad_s),
            num_blades: None,
            blade_offsets_rad: Some(t.blade_offsets_rad.clone()),
            elevation_rad: t.elevation_rad,
        }
    }
}

impl CaptureSection {
    fn to_layout(&self, base_dir: &Path, require_path: bool) -> Result<CaptureLayout> {
        if self.sample_width_bytes != 2 {
            return Err(config_err(
                "capture.sample_width_bytes",
                format!("only 16-bit samples (2) are supported, got {}", self.sample_width_bytes),
            ));
        }
        if self.num_chirps == 0 {
            return Err(config_err("capture.num_chirps", "must be >= 1"));
        }
        if self.samples_per_chirp == 0 {
            return Err(config_err("capture.samples_per_chirp", "must be >= 1"));
        }
        let path = match &self.path {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => base_dir.join(p),
            None if require_path => return Err(config_err("capture.path", "missing")),
            None => PathBuf::new(),
        };
        if require_path && !path.is_file() {
            return Err(config_err("capture.path", format!("{} does not exist", path.display())));
        }
        Ok(CaptureLayout {
            path,
            num_chirps: self.num_chirps,
            samples_per_chirp: self.samples_per_chirp,
            iq_order: self.iq_order,
            sample_width_bytes: self.sample_width_bytes,
            endianness: self.endianness,
        })
    }

    fn from_layout(layout: &CaptureLayout) -> Self {
        Self {
            path: Some(layout.path.clone()),
            num_chirps: layout.num_chirps,
            samples_per_chirp: layout.samples_per_chirp,
            iq_order: layout.iq_order,
            sample_width_bytes: layout.sample_width_bytes,
            endianness: layout.endianness,
        }
    }
}

fn parse_file(path: &Path) -> Result<ConfigFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Reads and validates a run configuration.
///
/// Relative capture and output paths resolve against the config file's directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let file = parse_file(path)?;
    RunConfig::from_file(file, &base_dir(path))
}

/// Reads only the `[capture]` section (path optional) of a layout file.
pub fn load_capture_layout(path: impl AsRef<Path>) -> Result<(CaptureLayout, Option<RadarParams>)> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let table: toml::Table =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?;
    let section = table
        .get("capture")
        .cloned()
        .ok_or_else(|| config_err("capture", "section missing from layout file"))?;
    let capture: CaptureSection = section
        .try_into()
        .map_err(|e: toml::de::Error| config_err("capture", e.message()))?;
    let radar = match table.get("radar") {
        Some(r) => {
            let params: RadarParams = r
                .clone()
                .try_into()
                .map_err(|e: toml::de::Error| config_err("radar", e.message()))?;
            in_section("radar", params.validate())?;
            Some(params)
        }
        None => None,
    };
    Ok((capture.to_layout(&base_dir(path), false)?, radar))
}

impl RunConfig {
    fn from_file(file: ConfigFile, base_dir: &Path) -> Result<Self> {
        in_section("radar", file.radar.validate())?;
        let radar = file.radar;
        let source = match (&file.target, &file.capture) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "[target] and [capture] are both present; a run uses exactly one of them".into(),
                ))
            }
            (None, None) => return Err(Error::Config("either [target] or [capture] is required".into())),
            (Some(t), None) => {
                let scene = file.scene.clone().unwrap_or_default();
                if scene.snr_db.is_nan() {
                    return Err(config_err("scene.snr_db", "must not be NaN"));
                }
                finite("scene.blade_body_ratio_db", scene.blade_body_ratio_db)?;
                Source::Simulated(SceneSpec {
                    target: t.to_target()?,
                    snr_db: scene.snr_db,
                    blade_body_ratio_db: scene.blade_body_ratio_db,
                    seed: scene.seed,
                })
            }
            (None, Some(c)) => {
                if file.scene.is_some() {
                    return Err(Error::Config(
                        "[scene] only applies to simulated targets, not to [capture]".into(),
                    ));
                }
                let layout = c.to_layout(base_dir, true)?;
                if layout.num_chirps != radar.num_chirps {
                    return Err(config_err(
                        "capture.num_chirps",
                        format!(
                            "{} differs from radar.num_chirps = {}",
                            layout.num_chirps, radar.num_chirps
                        ),
                    ));
                }
                if layout.samples_per_chirp != radar.samples_per_chirp() {
                    return Err(config_err(
                        "capture.samples_per_chirp",
                        format!(
                            "{} differs from radar.chirp_duration_s * radar.sample_rate_hz = {}",
                            layout.samples_per_chirp,
                            radar.samples_per_chirp()
                        ),
                    ));
                }
                Source::Capture(layout)
            }
        };
        let p = &file.pipeline;
        if let Some(s) = p.expected_spread_hz {
            if !(s.is_finite() && s >= 0.0) {
                return Err(config_err(
                    "pipeline.expected_spread_hz",
                    format!("must be >= 0, got {s}"),
                ));
            }
        }
        if let Some(r) = p.target_range_m {
            positive("pipeline.target_range_m", r)?;
        }
        if let Some(v) = p.target_velocity_mps {
            finite("pipeline.target_velocity_mps", v)?;
        }
        if let Some(bin) = p.stmdse_range_bin {
            if bin >= radar.samples_per_chirp() {
                return Err(config_err(
                    "pipeline.stmdse_range_bin",
                    format!("{bin} is outside 0..{}", radar.samples_per_chirp()),
                ));
            }
        }
        let st = &file.stft;
        let stft = StftConfig {
            window_length: st.window_length,
            overlap_fraction: st.overlap_fraction,
            pad_factor: st.pad_factor,
        };
        let slow_time_stft = StftConfig {
            window_length: st.slow_time_window,
            overlap_fraction: st.slow_time_overlap_fraction,
            pad_factor: 1,
        };
        for (prefix, cfg) in [("stft", &stft), ("stft.slow_time", &slow_time_stft)] {
            if cfg.window_length == 0 {
                return Err(config_err(&format!("{prefix}_window"), "must be >= 1"));
            }
            if !(0.0..1.0).contains(&cfg.overlap_fraction) {
                return Err(config_err(
                    &format!("{prefix}_overlap_fraction"),
                    format!("must lie in [0, 1), got {}", cfg.overlap_fraction),
                ));
            }
        }
        if stft.pad_factor == 0 {
            return Err(config_err("stft.pad_factor", "must be >= 1"));
        }
        if slow_time_stft.window_length > radar.num_chirps {
            return Err(config_err(
                "stft.slow_time_window",
                format!(
                    "{} exceeds radar.num_chirps = {}",
                    slow_time_stft.window_length, radar.num_chirps
                ),
            ));
        }
        let s = &file.sift;
        let sift = SiftConfig {
            stop_threshold: s.stop_threshold,
            max_imfs: s.max_imfs,
            num_directions: s.num_directions,
            min_extrema: s.min_extrema,
            max_sift_iterations: s.max_sift_iterations,
        };
        in_section("sift", sift.validate())?;
        if !(s.amplitude_floor >= 0.0 && s.amplitude_floor.is_finite()) {
            return Err(config_err(
                "sift.amplitude_floor",
                format!("must be >= 0, got {}", s.amplitude_floor),
            ));
        }
        let output_dir = if file.output.dir.is_absolute() {
            file.output.dir.clone()
        } else {
            base_dir.join(&file.output.dir)
        };
        Ok(Self {
            radar,
            source,
            pipeline: p.kind,
            expected_spread_hz: p.expected_spread_hz,
            target_range_m: p.target_range_m,
            target_velocity_mps: p.target_velocity_mps,
            stmdse_range_bin: p.stmdse_range_bin,
            stft,
            slow_time_stft,
            sift,
            amplitude_floor: s.amplitude_floor,
            output_dir,
        })
    }

    fn to_file(&self, derived: Option<toml::Table>) -> ConfigFile {
        let (target, scene, capture) = match &self.source {
            Source::Simulated(s) => (
                Some(TargetSection::from_target(&s.target)),
                Some(SceneSection {
                    snr_db: s.snr_db,
                    blade_body_ratio_db: s.blade_body_ratio_db,
                    seed: s.seed,
                }),
                None,
            ),
            Source::Capture(layout) => (None, None, Some(CaptureSection::from_layout(layout))),
        };
        ConfigFile {
            radar: self.radar,
            target,
            scene,
            capture,
            pipeline: PipelineSection {
                kind: self.pipeline,
                expected_spread_hz: self.expected_spread_hz,
                target_range_m: self.target_range_m,
                target_velocity_mps: self.target_velocity_mps,
                stmdse_range_bin: self.stmdse_range_bin,
            },
            stft: StftSection {
                window_length: self.stft.window_length,
                overlap_fraction: self.stft.overlap_fraction,
                pad_factor: self.stft.pad_factor,
                slow_time_window: self.slow_time_stft.window_length,
                slow_time_overlap_fraction: self.slow_time_stft.overlap_fraction,
            },
            sift: SiftSection {
                stop_threshold: self.sift.stop_threshold,
                max_imfs: self.sift.max_imfs,
                num_directions: self.sift.num_directions,
                min_extrema: self.sift.min_extrema,
                max_sift_iterations: self.sift.max_sift_iterations,
                amplitude_floor: self.amplitude_floor,
            },
            output: OutputSection {
                dir: self.output_dir.clone(),
            },
            derived,
        }
    }

    /// Config text reproducing this run, followed by a `[derived]` table of computed constants.
    pub fn to_manifest(&self, derived: toml::Table) -> String {
        toml::to_string(&self.to_file(Some(derived))).expect("run configs always serialize")
    }

    /// The simulated scene, if any.
    pub fn scene(&self) -> Option<&SceneSpec> {
        match &self.source {
            Source::Simulated(s) => Some(s),
            Source::Capture(_) => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Source::Simulated(s) = &mut self.source {
            s.seed = seed;
        } else {
            log::warn!("--seed has no effect on capture runs");
        }
    }
}

/// Parses config text directly (relative paths resolve against `base_dir`).
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    RunConfig::from_file(file, base_dir)
}
