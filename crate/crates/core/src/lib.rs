//! Gamma-oscillation extraction from spiky multichannel recordings and
//! spatio-temporal mapping of seizure build-up.
//!
//! Two interchangeable ways to strip interictal spikes before looking at
//! gamma activity:
//!
//! * [`swt`]: stationary wavelet decomposition, per-level time masking,
//!   reconstruction, band-pass.
//! * [`despike`]: detect transients, fit a biphasic Gaussian template to
//!   each, subtract.
//!
//! [`tfmap`] and [`stmap`] turn the cleaned signal into Morlet power maps,
//! and [`evaluate`] scores both methods against simulated ground truth.

pub mod config;
pub mod despike;
pub mod error;
pub mod evaluate;
pub mod fir;
pub mod io;
pub mod recording;
pub mod simulate;
pub mod stats;
pub mod stmap;
pub mod swt;
pub mod tfmap;

pub use error::{Error, Result};
pub use recording::{Band, Recording};
