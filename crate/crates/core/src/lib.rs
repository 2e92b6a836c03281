//! Coupled-mode model of a two-port re-entrant microwave cavity that
//! couples wirelessly to an on-chip LC resonator and a mechanical mode.
//!
//! Internally every rate and frequency is an angular quantity (rad/s).
//! Frequency grids, files and reports use Hz (`f = ω/2π`); see [`units`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod electromech;
pub mod error;
pub mod exec;
pub mod io;
pub mod lineshape;
pub mod model;
pub mod params;
pub mod presets;
pub mod trace;
pub mod units;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{
    dressed_modes, eq1_effective_rates, rates_at_detuning, resolved_sideband, resolved_sideband_ratio,
    s11, s21, susceptibility, with_effective_detuning, DerivedRates, DressedModes,
};
pub use params::{ParamName, SystemParams, SystemParamsHz, Warning};
pub use trace::{ComplexTrace, TraceKind};
