//! A simulated scene written as a 16-bit capture and processed from disk.

use std::path::Path;

use mdkit::io::{
    load_capture_layout, load_chirps, parse_config, run_proposed, run_stmdse, write_capture, CaptureLayout, Endianness,
    IqOrder, Source,
};
use mdkit::radar_model::{synth_scene, RadarParams, RotorTarget};
use mdkit::Error;

fn params() -> RadarParams {
    RadarParams {
        num_chirps: 64,
        ..RadarParams::table1()
    }
}

fn radar_section() -> String {
    "[radar]
start_frequency_hz = 77e9
chirp_rate_hz_per_s = 10e12
chirp_duration_s = 102.4e-6
chirp_interval_s = 104.43e-6
sample_rate_hz = 5e6
num_chirps = 64
"
    .into()
}

fn capture_config(dir: &Path, file: &str, extra: &str) -> String {
    format!(
        "{}
[capture]
path = \"{file}\"
num_chirps = 64
samples_per_chirp = 512
iq_order = \"qi\"
endianness = \"big\"

[pipeline]
expected_spread_hz = 200e3
{extra}
[output]
dir = \"{}\"
",
        radar_section(),
        dir.join("out").display()
    )
}

#[test]
fn capture_and_simulation_agree() {
    let dir = tempfile::tempdir().unwrap();
    let p = params();
    let mut target = RotorTarget::evenly_spaced(20.0, 3, 0.06, 12000.0);
    target.body_amplitude = 0.25;
    let mut scene = synth_scene(&p, &target, 15.0, -6.0, 9).unwrap();
    let layout = CaptureLayout {
        iq_order: IqOrder::Qi,
        endianness: Endianness::Big,
        ..CaptureLayout::new(dir.path().join("scene.bin"), 64, 512)
    };
    write_capture(&scene, &layout).unwrap();
    // Quantize the in-memory copy the same way, saturating at the 16-bit limits.
    let q = |v: f64| (v * 32768.0).round().clamp(-32768.0, 32767.0) / 32768.0;
    let peak = scene
        .samples
        .iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max);
    scene
        .samples
        .mapv_inplace(|z| num_complex::Complex64::new(q(z.re), q(z.im)));

    let cfg = parse_config(&capture_config(dir.path(), "scene.bin", ""), dir.path()).unwrap();
    assert!(matches!(cfg.source, Source::Capture(_)));
    let from_disk = load_chirps(&cfg).unwrap();
    let mismatched = from_disk
        .samples
        .iter()
        .zip(&scene.samples)
        .filter(|(a, b)| a != b)
        .count();
    assert_eq!(mismatched, 0, "peak component {peak}");

    let a = run_stmdse(&from_disk, &cfg).unwrap();
    assert_eq!(a.range_bin, 137);
    let r = run_proposed(&from_disk, &cfg).unwrap();
    assert!((r.estimate.range_freq_hz - 1.3379e6).abs() < 1e3);
    assert!(r.stats[0].selected, "{:?}", r.stats);
}

#[test]
fn capture_path_is_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("data")).unwrap();
    std::fs::write(dir.path().join("data/x.bin"), vec![0u8; 64 * 512 * 4]).unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, capture_config(dir.path(), "data/x.bin", "")).unwrap();
    let cfg = mdkit::io::load_config(&cfg_path).unwrap();
    let Source::Capture(layout) = &cfg.source else {
        panic!("capture source expected")
    };
    assert_eq!(layout.path, dir.path().join("data/x.bin"));

    let (layout, radar) = load_capture_layout(&cfg_path).unwrap();
    assert_eq!(layout.num_chirps, 64);
    assert_eq!(radar, Some(params()));
}

#[test]
fn wrong_size_capture_is_a_capture_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.bin"), vec![0u8; 1000]).unwrap();
    let cfg = parse_config(&capture_config(dir.path(), "x.bin", ""), dir.path()).unwrap();
    let err = load_chirps(&cfg).unwrap_err();
    assert!(matches!(err, Error::Capture { .. }));
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn capture_runs_need_an_expected_spread() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.bin"), vec![0u8; 64 * 512 * 4]).unwrap();
    let text = capture_config(dir.path(), "x.bin", "").replace("expected_spread_hz = 200e3\n", "");
    let cfg = parse_config(&text, dir.path()).unwrap();
    let err = run_proposed(&load_chirps(&cfg).unwrap(), &cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("expected_spread_hz"));
}

#[test]
fn capture_shape_must_match_the_radar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.bin"), vec![0u8; 64 * 512 * 4]).unwrap();
    let text = capture_config(dir.path(), "x.bin", "").replace("samples_per_chirp = 512", "samples_per_chirp = 500");
    let err = parse_config(&text, dir.path()).unwrap_err();
    assert!(err.to_string().contains("capture.samples_per_chirp"), "{err}");
}
