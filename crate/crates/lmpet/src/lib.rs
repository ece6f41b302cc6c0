//! List-mode TOF-PET reconstruction toolkit.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`geometry`]: scanner ring, LORs, TOF bins;
//! - [`projector`]: parallel Joseph forward/backward projection for
//!   list-mode events, plus dense-footprint accounting;
//! - [`sim`]: phantom generation, sinogram simulation with Poisson noise,
//!   and conversion to list-mode datasets;
//! - [`recon`]: classical solvers (MLEM/OSEM, OSEM+TV, SPDHG+TV);
//! - [`lmpd`]: the unrolled learned primal-dual network with hand-rolled
//!   reverse-mode differentiation and training;
//! - [`metrics`]: PSNR/SSIM evaluation;
//! - [`cli`]: the `lmpet` command-line interface.

pub mod cli;
pub mod error;
pub mod events;
pub mod geometry;
pub mod image;
pub mod lmpd;
pub mod metrics;
pub mod parallel;
pub mod projector;
pub mod recon;
pub mod sim;

pub use error::{Error, Result};
pub use events::{Event, EventList};
pub use geometry::{CrystalIndex, Lor, ScannerConfig, TofBin};
pub use image::{Grid, Image2D};
pub use projector::{ProjectionMatrix, SparseRow};

/// FNV-1a over a stream of u64 words; used for stable cache keys.
pub(crate) fn fnv1a_init() -> u64 {
    0xcbf29ce484222325
}

pub(crate) fn fnv1a_add(mut hash: u64, word: u64) -> u64 {
    for byte in word.to_le_bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
