//! Time-domain simulation of the equivalent driven by PCC measurements.

pub mod integrator;
pub mod playin;
pub mod scenario;

pub use integrator::Method;
pub use playin::{
    reconstruct_angle, simulate_model, simulate_playin, simulate_states, OutputTrajectory,
    SimConfig,
};
pub use scenario::{synth_scenario, FaultTemplate};
