//! Desk-scale interferometry bench in four parts:
//!
//! - [`wavefield`]: scalar 1-D complex fields with exact angular-spectrum
//!   free-space propagation, masks, and thin-lens phase screens.
//! - [`apparatus`]: a two-slit bench with an absorbing wire grid placed on
//!   the dark fringes, a lens, and two which-slit detectors, with full
//!   power accounting and photon sampling.
//! - [`twostate`]: two-level pre/post-selected ensembles: Born and
//!   pre/post-conditioned probabilities, and seeded measurement chains.
//! - [`ledger`]: offer/confirmation determinacy analysis of measurement
//!   timelines, with builtin scenarios and a text diagram renderer.

pub mod apparatus;
mod error;
pub mod ledger;
pub mod twostate;
pub mod wavefield;

pub use error::{Error, Result};
