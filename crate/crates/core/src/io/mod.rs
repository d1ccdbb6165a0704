//! Configuration files, raw captures, pipeline runs and CSV output.

pub mod capture;
pub mod config;
pub mod export;
pub mod pipeline;

pub use capture::{
    decode_samples, encode_samples, read_adc_capture, read_adc_samples, summarize, write_capture, CaptureLayout,
    CaptureSummary, Endianness, IqOrder,
};
pub use config::{load_capture_layout, load_config, parse_config, PipelineKind, RunConfig, SceneSpec, Source};
pub use pipeline::{
    estimate_target, execute, expected_spread, load_chirps, run_ftmdse_raw, run_proposed, run_stmdse, sweep,
    FtmdseRawResult, ProposedResult, RunReport, StmdseResult, SweepParam, SweepRow, TargetEstimate, SWEEP_HEADER,
};
