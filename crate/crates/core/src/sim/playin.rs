//! Play-in of recorded PCC voltage and frequency through the equivalent.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::models::{init_steady_state, EquivalentModel, EquivalentState, N_STATES};
use crate::params::ParameterSet;
use crate::timeseries::{BaseSystem, PccTimeSeries};

use super::integrator::{rk4_step, trapezoidal_step, Method};

/// Norm of the state vector beyond which a run counts as diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Internal step (s); must divide the sample interval.
    pub dt_int: f64,
    pub method: Method,
    pub base: BaseSystem,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_int: 1e-3,
            method: Method::Rk4,
            base: BaseSystem::default(),
        }
    }
}

impl SimConfig {
    /// Internal steps per sample interval `dt`.
    pub fn substeps(&self, dt: f64) -> Result<usize> {
        if !(self.dt_int > 0.0 && self.dt_int.is_finite()) {
            return Err(Error::Config(format!("dt_int must be > 0, got {}", self.dt_int)));
        }
        let ratio = dt / self.dt_int;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "internal step {} s does not divide the sample interval {dt} s",
                self.dt_int
            )));
        }
        Ok(n as usize)
    }
}

/// Simulated PCC flow on the input sample grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrajectory {
    pub t: Vec<f64>,
    /// MW
    pub p_hat: Vec<f64>,
    /// MVar
    pub q_hat: Vec<f64>,
}

impl OutputTrajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Phase of the PCC phasor against a nominal-frequency frame, by trapezoidal
/// integration of the frequency deviation. Starts at zero.
pub fn reconstruct_angle(freq: &[f64], f_nom: f64, dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(freq.len());
    let mut theta = 0.0;
    for (k, f) in freq.iter().enumerate() {
        if k > 0 {
            let f_mid = 0.5 * (freq[k - 1] + f);
            theta += 2.0 * PI * (f_mid - f_nom) * dt;
        }
        out.push(theta);
    }
    out
}

/// Replays `input` through the equivalent built from `params`.
pub fn simulate_playin(
    params: &ParameterSet,
    input: &PccTimeSeries,
    cfg: &SimConfig,
) -> Result<OutputTrajectory> {
    let model = EquivalentModel::new(params, &cfg.base)?;
    simulate_model(&model, input, cfg)
}

/// Replays `input` through an already assembled model.
pub fn simulate_model(
    model: &EquivalentModel,
    input: &PccTimeSeries,
    cfg: &SimConfig,
) -> Result<OutputTrajectory> {
    run(model, input, cfg, |_, _| {})
}

/// Like [`simulate_model`], also returning the state at every sample.
pub fn simulate_states(
    model: &EquivalentModel,
    input: &PccTimeSeries,
    cfg: &SimConfig,
) -> Result<(OutputTrajectory, Vec<EquivalentState>)> {
    let mut states = Vec::with_capacity(input.len());
    let out = run(model, input, cfg, |_, x| {
        states.push(EquivalentState::from_array(x))
    })?;
    Ok((out, states))
}

fn run<G: FnMut(usize, &[f64; N_STATES])>(
    model: &EquivalentModel,
    input: &PccTimeSeries,
    cfg: &SimConfig,
    mut record: G,
) -> Result<OutputTrajectory> {
    let dt = input.dt();
    let n_sub = cfg.substeps(dt)?;
    let (v, f) = (input.v_mag(), input.freq());
    let n = input.len();

    let mut x = init_steady_state(model, v[0], f[0])?.to_array();
    let mut out = OutputTrajectory {
        t: input.times(),
        p_hat: Vec::with_capacity(n),
        q_hat: Vec::with_capacity(n),
    };
    let emit = |out: &mut OutputTrajectory, x: &[f64; N_STATES], k: usize| {
        let (p, q) = model.pcc_output(x, v[k], f[k]);
        out.p_hat.push(p);
        out.q_hat.push(q);
    };
    emit(&mut out, &x, 0);
    record(0, &x);

    let switching = model.switching_voltages();
    let mut cuts: Vec<f64> = Vec::with_capacity(4);
    for k in 0..n - 1 {
        let (va, vb, fa, fb) = (v[k], v[k + 1], f[k], f[k + 1]);
        // local time tau in [0, dt] keeps the input interpolation exact
        let rhs = |tau: f64, x: &[f64; N_STATES]| {
            let s = tau / dt;
            model.derivatives(x, va + (vb - va) * s, fa + (fb - fa) * s)
        };

        // split at exciter-limit crossings so each piece is smooth
        cuts.clear();
        cuts.push(0.0);
        if vb != va {
            let mut inner: Vec<f64> = switching
                .iter()
                .map(|vc| (vc - va) / (vb - va))
                .filter(|s| *s > 1e-9 && *s < 1.0 - 1e-9)
                .collect();
            inner.sort_by(f64::total_cmp);
            cuts.extend(inner);
        }
        cuts.push(1.0);

        for piece in cuts.windows(2) {
            let (a, b) = (piece[0] * dt, piece[1] * dt);
            let m = if cuts.len() == 2 {
                n_sub
            } else {
                (((b - a) / cfg.dt_int) - 1e-9).ceil().max(1.0) as usize
            };
            let h = (b - a) / m as f64;
            for j in 0..m {
                let tau = a + j as f64 * h;
                x = match cfg.method {
                    Method::Rk4 => rk4_step(&rhs, tau, &x, h),
                    Method::Trapezoidal => trapezoidal_step(&rhs, tau, &x, h)
                        .map_err(|_| diverged(input.time(k) + tau + h, &x))?,
                };
            }
        }
        let norm2: f64 = x.iter().map(|v| v * v).sum();
        if !(norm2.is_finite() && norm2 <= DIVERGENCE_NORM * DIVERGENCE_NORM) {
            return Err(diverged(input.time(k + 1), &x));
        }
        emit(&mut out, &x, k + 1);
        record(k + 1, &x);
    }
    Ok(out)
}

fn diverged(t: f64, x: &[f64; N_STATES]) -> Error {
    Error::Diverged {
        t,
        norm: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_constant_nominal() {
        assert!(reconstruct_angle(&[60.0; 50], 60.0, 0.01)
            .iter()
            .all(|a| *a == 0.0));
    }

    #[test]
    fn angle_offset_one_hertz() {
        let a = reconstruct_angle(&[61.0; 101], 60.0, 0.01);
        assert!((a[100] - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn angle_ramp() {
        let f: Vec<f64> = (0..=100).map(|k| 60.0 + k as f64 / 100.0).collect();
        let a = reconstruct_angle(&f, 60.0, 0.01);
        assert!((a[100] - PI).abs() < 1e-12);
    }

    #[test]
    fn substep_validation() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.substeps(0.01).unwrap(), 10);
        let bad = SimConfig {
            dt_int: 0.003,
            ..cfg
        };
        assert!(bad.substeps(0.01).is_err());
    }

    #[test]
    fn constant_input_holds_initial_flow() {
        let set = ParameterSet::default();
        let n = 200;
        let input = PccTimeSeries::new(
            0.0,
            0.01,
            vec![1.0; n],
            vec![60.0; n],
            vec![0.0; n],
            vec![0.0; n],
        )
        .unwrap();
        let out = simulate_playin(&set, &input, &SimConfig::default()).unwrap();
        assert_eq!(out.t, input.times());
        for k in 1..n {
            assert!((out.p_hat[k] - out.p_hat[0]).abs() / 10.0 < 1e-6);
            assert!((out.q_hat[k] - out.q_hat[0]).abs() / 10.0 < 1e-6);
        }
    }
}
