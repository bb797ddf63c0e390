//! Cramér-Rao bounds for downlink localization with a base-station-integrated
//! beyond-diagonal RIS.
//!
//! The library models a BS feed antenna illuminating an M-element RIS whose
//! phase-shift matrix sweeps a beam codebook over pilot time slots, and a
//! single-antenna UE in the near or far field of the aperture. It provides:
//!
//! - array geometry and field-region classification ([`geometry`]),
//! - deterministic feed, near-field and far-field channels ([`channel`]),
//! - Takagi (BD-RIS), diagonal (D-RIS) and active-array codebooks
//!   ([`codebook`]),
//! - Fisher information, channel-parameter CRLBs and the position error
//!   bound ([`fisher`]),
//! - the sweep and heatmap experiments with CSV/JSON writers
//!   ([`experiments`]),
//! - a flat key-value run configuration ([`config`]).

// Validation guards are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fisher;
pub mod geometry;

pub use codebook::{Architecture, Scenario};
pub use error::{Error, Result};
pub use geometry::SystemGeometry;
