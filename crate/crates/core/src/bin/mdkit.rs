use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mdkit::io::{
    execute, load_capture_layout, load_config, read_adc_samples, summarize, sweep, PipelineKind, SweepParam,
    SWEEP_HEADER,
};
use mdkit::{Error, Result};

#[derive(Parser)]
#[command(name = "mdkit", version, about = "FMCW micro-Doppler extraction toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one pipeline and write CSV outputs plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `[pipeline] kind`.
        #[arg(long)]
        pipeline: Option<String>,
        /// Overrides `[scene] seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a raw capture against a layout and print summary statistics.
    InspectCapture {
        file: PathBuf,
        /// Config or layout file with a `[capture]` section.
        #[arg(long)]
        layout: PathBuf,
    },
    /// Run the proposed pipeline over several values of one scene parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// rotation_rpm, blade_length_m or range_m.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            pipeline,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(kind) = pipeline {
                cfg.pipeline = kind.parse::<PipelineKind>()?;
            }
            if let Some(seed) = seed {
                cfg.set_seed(seed);
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let report = execute(&cfg)?;
            for line in &report.summary {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
        }
        Command::InspectCapture { file, layout } => {
            let (mut layout, radar) = load_capture_layout(&layout)?;
            layout.path = file;
            let summary = summarize(&read_adc_samples(&layout)?);
            println!("file: {}", layout.path.display());
            println!("chirps: {}", summary.num_chirps);
            println!("samples_per_chirp: {}", summary.samples_per_chirp);
            println!("bytes: {}", layout.expected_bytes());
            println!("rms: {:.6}", summary.rms);
            println!("peak: {:.6}", summary.peak);
            println!("clipped_fraction: {:.6}", summary.clipped_fraction);
            println!("dc: {:.6}{:+.6}j", summary.mean.re, summary.mean.im);
            if let Some(p) = radar {
                if p.samples_per_chirp() != layout.samples_per_chirp || p.num_chirps != layout.num_chirps {
                    return Err(Error::Capture {
                        path: layout.path,
                        reason: format!(
                            "layout is {} x {} but [radar] implies {} x {}",
                            layout.num_chirps,
                            layout.samples_per_chirp,
                            p.num_chirps,
                            p.samples_per_chirp()
                        ),
                    });
                }
            }
        }
        Command::Sweep { config, param, values } => {
            let cfg = load_config(&config)?;
            let param: SweepParam = param.parse()?;
            println!("{SWEEP_HEADER}");
            for row in sweep(&cfg, param, &values)? {
                println!("{}", row.csv());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdkit: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
