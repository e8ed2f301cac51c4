//! Gray-box dynamic equivalent of a grid-connected microgrid.
//!
//! The equivalent aggregates a synchronous generator, a grid-following
//! converter, an induction motor and a ZIP load behind the point of common
//! coupling. Recorded PCC voltage and frequency are played into the model;
//! its simulated active and reactive power is compared with the recorded
//! flow. Trajectory sensitivities rank the parameters, and differential
//! evolution fits them in two stages.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod de;
pub mod error;
pub mod estimation;
pub mod models;
pub mod params;
pub mod pipeline;
pub mod sensitivity;
pub mod sim;
pub mod timeseries;
pub mod validation;

pub use error::{Error, Result};
pub use params::{load_parameter_set, save_parameter_set, Parameter, ParameterSet};
pub use timeseries::{load_pcc_csv, save_pcc_csv, BaseSystem, PccTimeSeries, Window};
