//! Micro-Doppler extraction for FMCW radar: scene synthesis, range-Doppler
//! filtering, chirp appending with linear fits across idle gaps, and complex EMD.

pub mod analysis;
pub mod assembly;
pub mod emd;
pub mod error;
pub mod io;
pub mod radar_model;
pub mod rd_filter;
pub mod spectral;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/signal-model.md")]
    mod signal_model {}
    #[doc = include_str!("../../../book/src/range-doppler.md")]
    mod range_doppler {}
    #[doc = include_str!("../../../book/src/idle-gaps.md")]
    mod idle_gaps {}
    #[doc = include_str!("../../../book/src/cemd.md")]
    mod cemd {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/captures.md")]
    mod captures {}
}
