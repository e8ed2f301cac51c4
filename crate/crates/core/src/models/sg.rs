//! Two-axis (fourth-order) synchronous generator with a static exciter and a
//! droop governor. Stator resistance is neglected. Quantities are in pu on
//! the machine rating; the rotor angle is measured against the reference
//! frame of the PCC voltage phasor.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::ComponentOutput;
use crate::error::{Error, Result};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgParams {
    pub x_d: f64,
    pub x_dp: f64,
    pub x_q: f64,
    pub x_qp: f64,
    pub t_do_p: f64,
    pub t_q_p: f64,
    pub h: f64,
    pub d: f64,
    /// MVA
    pub s_rated: f64,
    /// Governor power reference, pu on `s_rated`.
    pub p_ref: f64,
    pub k_a: f64,
    pub t_a: f64,
    pub v_ref: f64,
    pub efd_max: f64,
    pub efd_min: f64,
    pub r_droop: f64,
    pub t_gov: f64,
    /// Hz
    pub f_nom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SgState {
    pub delta: f64,
    pub omega: f64,
    pub e_qp: f64,
    pub e_dp: f64,
    pub efd: f64,
    pub p_m: f64,
}

/// Stator quantities in the rotor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stator {
    pub v_d: f64,
    pub v_q: f64,
    pub i_d: f64,
    pub i_q: f64,
}

impl Stator {
    /// Electrical power delivered at the terminals (pu on the rating).
    #[inline]
    pub fn power(&self) -> (f64, f64) {
        (
            self.v_d * self.i_d + self.v_q * self.i_q,
            self.v_q * self.i_d - self.v_d * self.i_q,
        )
    }
}

impl SgParams {
    pub fn from_set(set: &ParameterSet, f_nom: f64) -> Result<Self> {
        let s_rated = set.value("S_sg");
        let p = Self {
            x_d: set.value("x_d"),
            x_dp: set.value("x_dp"),
            x_q: set.value("x_q"),
            x_qp: set.value("x_qp"),
            t_do_p: set.value("T_do_p"),
            t_q_p: set.value("T_q_p"),
            h: set.value("H"),
            d: set.value("D_sg"),
            s_rated,
            p_ref: if s_rated > 0.0 {
                set.value("P_sg") / s_rated
            } else {
                0.0
            },
            k_a: set.value("K_a"),
            t_a: set.value("T_a"),
            v_ref: set.value("V_ref"),
            efd_max: set.value("E_fd_max"),
            efd_min: set.value("E_fd_min"),
            r_droop: set.value("R_droop"),
            t_gov: set.value("T_gov"),
            f_nom,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<()> {
        let bad = |rule: &'static str, name: &str, value: f64| {
            Err(Error::PhysicalBound {
                name: name.to_string(),
                value,
                rule,
            })
        };
        if !(self.x_dp > 0.0 && self.x_d > self.x_dp) {
            return bad("x_d > x_dp > 0", "x_d", self.x_d);
        }
        if !(self.x_qp > 0.0 && self.x_q >= self.x_qp) {
            return bad("x_q >= x_qp > 0", "x_q", self.x_q);
        }
        for (n, v) in [
            ("T_do_p", self.t_do_p),
            ("T_q_p", self.t_q_p),
            ("H", self.h),
            ("K_a", self.k_a),
            ("T_a", self.t_a),
            ("R_droop", self.r_droop),
            ("T_gov", self.t_gov),
        ] {
            if !(v > 0.0) {
                return bad("must be > 0", n, v);
            }
        }
        if !(self.efd_max > self.efd_min) {
            return bad("E_fd_max > E_fd_min", "E_fd_max", self.efd_max);
        }
        Ok(())
    }

    #[inline]
    fn omega_base(&self) -> f64 {
        2.0 * PI * self.f_nom
    }

    /// Regulator output demanded at terminal voltage `v_mag`, after the limiter.
    /// The limiter acts on the regulator input so its switching instants
    /// depend on the terminal-voltage input alone.
    #[inline]
    pub fn avr_target(&self, v_mag: f64) -> f64 {
        (self.k_a * (self.v_ref - v_mag)).clamp(self.efd_min, self.efd_max)
    }

    /// Terminal voltages at which the exciter limiter engages (upper, lower).
    pub fn avr_limit_voltages(&self) -> [f64; 2] {
        [
            self.v_ref - self.efd_max / self.k_a,
            self.v_ref - self.efd_min / self.k_a,
        ]
    }

    /// Steady mechanical power the governor settles to at speed deviation `omega`.
    #[inline]
    pub fn governor_target(&self, omega: f64) -> f64 {
        self.p_ref - omega / self.r_droop
    }

    #[inline]
    pub fn stator(&self, state: &SgState, v_phasor: Complex64) -> Stator {
        // rotor-frame voltage: v_d + j v_q = V e^{-j(delta - pi/2)}
        let vdq = v_phasor * Complex64::from_polar(1.0, FRAC_PI_2 - state.delta);
        let (v_d, v_q) = (vdq.re, vdq.im);
        Stator {
            v_d,
            v_q,
            i_d: (state.e_qp - v_q) / self.x_dp,
            i_q: (v_d - state.e_dp) / self.x_qp,
        }
    }

    /// Equilibrium under constant `v_phasor` and grid frequency `f0`.
    pub fn equilibrium(&self, v_phasor: Complex64, f0: f64) -> Result<SgState> {
        let v = v_phasor.norm();
        if !(v > 0.0) {
            return Err(Error::NoEquilibrium {
                component: "synchronous generator",
                reason: "terminal voltage is zero".into(),
            });
        }
        let omega = (f0 - self.f_nom) / self.f_nom;
        let p_m = self.governor_target(omega);
        let p_e = p_m - self.d * omega;
        let efd = self.avr_target(v);
        let a = efd * v / self.x_d;
        let b = 0.5 * v * v * (1.0 / self.x_q - 1.0 / self.x_d);
        let power = |d: f64| a * d.sin() + b * (2.0 * d).sin();
        let slope = |d: f64| a * d.cos() + 2.0 * b * (2.0 * d).cos();

        // The stable branch runs from 0 to the peak of the power-angle curve.
        // Power is odd in the angle, so solve for |p_e| and restore the sign.
        let target = p_e.abs();
        let peak = {
            let n = 720;
            let mut best = (0.0, 0.0);
            for k in 0..=n {
                let d = PI * k as f64 / n as f64;
                let pw = power(d);
                if pw > best.1 {
                    best = (d, pw);
                }
            }
            // refine with a bisection on the slope
            let h = PI / 720.0;
            let (mut lo, mut hi) = ((best.0 - h).max(0.0), (best.0 + h).min(PI));
            if slope(lo) > 0.0 && slope(hi) < 0.0 {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid) > 0.0 {
                        lo = mid
                    } else {
                        hi = mid
                    }
                }
                0.5 * (lo + hi)
            } else {
                best.0
            }
        };
        if power(peak) < target {
            return Err(Error::NoEquilibrium {
                component: "synchronous generator",
                reason: format!(
                    "electrical power {p_e} pu exceeds the steady-state limit {} pu at field voltage {efd}",
                    power(peak)
                ),
            });
        }
        let (mut lo, mut hi) = (0.0, peak);
        let mut delta = 0.5 * (lo + hi);
        for _ in 0..200 {
            let r = power(delta) - target;
            if r.abs() < 1e-15 {
                break;
            }
            if r > 0.0 {
                hi = delta
            } else {
                lo = delta
            }
            // Newton step, falling back to bisection outside the bracket
            let s = slope(delta);
            let next = if s > 0.0 { delta - r / s } else { f64::NAN };
            delta = if next > lo && next < hi {
                next
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        let delta = delta.copysign(p_e) + v_phasor.arg();
        let vdq = v_phasor * Complex64::from_polar(1.0, FRAC_PI_2 - delta);
        let (v_d, v_q) = (vdq.re, vdq.im);
        let i_q = v_d / self.x_q;
        let i_d = (efd - v_q) / self.x_d;
        Ok(SgState {
            delta,
            omega,
            e_qp: v_q + self.x_dp * i_d,
            e_dp: (self.x_q - self.x_qp) * i_q,
            efd,
            p_m,
        })
    }
}

/// State derivative and terminal injection (MW, MVar).
#[inline]
pub fn sg_derivatives(
    params: &SgParams,
    state: &SgState,
    v_phasor: Complex64,
    f_grid: f64,
) -> (SgState, ComponentOutput) {
    let st = params.stator(state, v_phasor);
    let (p_e, q_e) = st.power();
    let w_b = params.omega_base();
    let d = SgState {
        delta: w_b * state.omega - 2.0 * PI * (f_grid - params.f_nom),
        omega: (state.p_m - p_e - params.d * state.omega) / (2.0 * params.h),
        e_qp: (state.efd - state.e_qp - (params.x_d - params.x_dp) * st.i_d) / params.t_do_p,
        e_dp: (-state.e_dp + (params.x_q - params.x_qp) * st.i_q) / params.t_q_p,
        efd: (params.avr_target(v_phasor.norm()) - state.efd) / params.t_a,
        p_m: (params.governor_target(state.omega) - state.p_m) / params.t_gov,
    };
    (
        d,
        ComponentOutput {
            p: p_e * params.s_rated,
            q: q_e * params.s_rated,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> SgParams {
        SgParams::from_set(&ParameterSet::default(), 60.0).unwrap()
    }

    fn norm(d: &SgState) -> f64 {
        [d.delta, d.omega, d.e_qp, d.e_dp, d.efd, d.p_m]
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = reference();
        for (v, f) in [(1.0, 60.0), (0.97, 60.0), (1.002, 59.95), (1.0, 60.05)] {
            let x = p.equilibrium(Complex64::new(v, 0.0), f).unwrap();
            let (d, out) = sg_derivatives(&p, &x, Complex64::new(v, 0.0), f);
            assert!(norm(&d) < 1e-8, "v={v} f={f}: {d:?}");
            let omega = (f - 60.0) / 60.0;
            let expected = (p.p_ref - omega / p.r_droop - p.d * omega) * p.s_rated;
            assert!((out.p - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn reference_set_runs_near_unity_power_factor() {
        let p = reference();
        let x = p.equilibrium(Complex64::new(1.0, 0.0), 60.0).unwrap();
        let (_, out) = sg_derivatives(&p, &x, Complex64::new(1.0, 0.0), 60.0);
        assert!((out.p - 3.0).abs() < 1e-9);
        assert!(out.q.abs() < 1e-3, "q = {}", out.q);
    }

    #[test]
    fn avr_forcing_term() {
        let p = reference();
        let forcing = p.k_a * (p.v_ref - (p.v_ref - 0.001));
        assert!((forcing - 0.177995).abs() < 1e-9);
        assert!((p.avr_target(p.v_ref - 0.001) - 0.177995).abs() < 1e-9);
        assert_eq!(p.avr_target(0.0), p.efd_max);
        assert_eq!(p.avr_target(2.0), p.efd_min);
    }

    #[test]
    fn droop_law() {
        let p = reference();
        assert!((p.governor_target(0.01) - (p.p_ref - 0.2)).abs() < 1e-15);
    }

    #[test]
    fn overload_has_no_equilibrium() {
        let mut p = reference();
        p.p_ref = 5.0;
        assert!(matches!(
            p.equilibrium(Complex64::new(1.0, 0.0), 60.0),
            Err(Error::NoEquilibrium { .. })
        ));
    }

    proptest! {
        #[test]
        fn stator_power_matches_phasor_circuit(
            delta in -1.5f64..1.5, e_qp in 0.5f64..1.5, e_dp in -0.5f64..0.5,
            v in 0.1f64..1.3, ang in -0.5f64..0.5,
        ) {
            // Oracle: currents from the two-axis circuit written in the network
            // frame, E' - V = j x'_d I_d + j x'_q I_q along each axis.
            let p = reference();
            let s = SgState { delta, e_qp, e_dp, ..Default::default() };
            let vp = Complex64::from_polar(v, ang);
            let st = p.stator(&s, vp);
            let (pe, qe) = st.power();

            let q_axis = Complex64::from_polar(1.0, delta);
            let d_axis = Complex64::from_polar(1.0, delta - FRAC_PI_2);
            let v_d = (vp * d_axis.conj()).re;
            let v_q = (vp * q_axis.conj()).re;
            let i_d = (e_qp - v_q) / p.x_dp;
            let i_q = (v_d - e_dp) / p.x_qp;
            let i = d_axis * i_d + q_axis * i_q;
            let s_inj = vp * i.conj();
            prop_assert!((pe - s_inj.re).abs() < 1e-10);
            prop_assert!((qe - s_inj.im).abs() < 1e-10);
        }
    }
}
