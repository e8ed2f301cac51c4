//! Grid-following voltage-source converter, average model.
//!
//! The outer DC-link loop is a PI on the voltage error `V_dc,nom - V_dc`
//! producing the direct-axis current reference; the quadrature reference is
//! zero and the inner current loop is taken as instantaneous. `i_d` is the
//! current drawn from the AC side into the DC link, so a DC-link sag pulls
//! more power in and an overvoltage pushes power out. The reverse
//! orientation makes the DC-link equilibrium unstable.

use super::ComponentOutput;
use crate::error::{Error, Result};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VscParams {
    /// MVA
    pub s_vsc: f64,
    pub k_pvdc: f64,
    /// 1/s
    pub k_ivdc: f64,
    /// pu
    pub v_dc_nom: f64,
    /// DC-link energy-storage constant (s): `c_dc v_dc v_dc' = p_source - p_ac`.
    pub c_dc: f64,
    /// pu on `s_vsc`, DC-side source injection
    pub p_source: f64,
    /// pu on `s_vsc`
    pub i_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VscState {
    pub v_dc: f64,
    pub xi: f64,
}

impl VscParams {
    pub fn from_set(set: &ParameterSet) -> Self {
        Self {
            s_vsc: set.value("S_vsc"),
            k_pvdc: set.value("K_pvdc"),
            k_ivdc: set.value("K_ivdc"),
            v_dc_nom: set.value("V_dc_nom"),
            c_dc: set.value("C_dc"),
            p_source: set.value("P_source"),
            i_max: set.value("I_max"),
        }
    }

    /// Direct-axis current reference (pu), before limiting.
    #[inline]
    pub fn i_dref(&self, state: &VscState) -> f64 {
        self.k_pvdc * (self.v_dc_nom - state.v_dc) + self.k_ivdc * state.xi
    }

    /// AC-side active power injection (pu on `s_vsc`).
    #[inline]
    pub fn p_ac(&self, state: &VscState, v: f64) -> f64 {
        let i_d = self.i_dref(state).clamp(-self.i_max, self.i_max);
        -v * i_d
    }

    /// DC-link equilibrium at terminal voltage `v`.
    pub fn equilibrium(&self, v: f64) -> Result<VscState> {
        if v <= 0.0 {
            return Err(Error::NoEquilibrium {
                component: "converter",
                reason: format!("terminal voltage {v} pu"),
            });
        }
        let i_d = -self.p_source / v;
        if i_d.abs() > self.i_max {
            return Err(Error::NoEquilibrium {
                component: "converter",
                reason: format!(
                    "source power {} pu needs {} pu current, above the {} pu limit",
                    self.p_source,
                    i_d.abs(),
                    self.i_max
                ),
            });
        }
        Ok(VscState {
            v_dc: self.v_dc_nom,
            xi: i_d / self.k_ivdc,
        })
    }
}

/// State derivative and terminal injection (MW, MVar) at voltage magnitude `v`.
#[inline]
pub fn vsc_derivatives(params: &VscParams, state: &VscState, v: f64) -> (VscState, ComponentOutput) {
    let p = params.p_ac(state, v);
    let d = VscState {
        v_dc: (params.p_source - p) / (params.c_dc * state.v_dc),
        xi: params.v_dc_nom - state.v_dc,
    };
    (
        d,
        ComponentOutput {
            p: p * params.s_vsc,
            q: 0.0,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> VscParams {
        VscParams::from_set(&ParameterSet::default())
    }

    #[test]
    fn zero_error_and_integrator_gives_no_current() {
        let p = reference();
        let s = VscState {
            v_dc: p.v_dc_nom,
            xi: 0.0,
        };
        assert_eq!(p.i_dref(&s), 0.0);
        let (_, out) = vsc_derivatives(&p, &s, 1.0);
        assert_eq!(out.p, 0.0);
        assert_eq!(out.q, 0.0);
    }

    #[test]
    fn proportional_part() {
        let p = reference();
        let s = VscState {
            v_dc: p.v_dc_nom - 0.01,
            xi: 0.0,
        };
        assert!((p.i_dref(&s) - 0.01636).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = reference();
        for v in [0.6, 0.95, 1.0, 1.05] {
            let s = p.equilibrium(v).unwrap();
            let (d, out) = vsc_derivatives(&p, &s, v);
            assert!(d.v_dc.abs() < 1e-14 && d.xi.abs() < 1e-14);
            assert!((out.p - p.p_source * p.s_vsc).abs() < 1e-12);
        }
        assert!(p.equilibrium(0.2).is_err());
    }

    #[test]
    fn dc_link_sag_lowers_export() {
        let p = reference();
        let mut s = p.equilibrium(1.0).unwrap();
        let base = p.p_ac(&s, 1.0);
        s.v_dc -= 0.01;
        assert!(p.p_ac(&s, 1.0) < base);
    }

    proptest! {
        #[test]
        fn dc_link_energy_balance(v_dc in 0.5f64..1.5, xi in -0.01f64..0.01, v in 0.0f64..1.3) {
            let p = reference();
            let s = VscState { v_dc, xi };
            let (d, out) = vsc_derivatives(&p, &s, v);
            let p_ac = out.p / p.s_vsc;
            // d/dt (c v_dc^2 / 2) = c v_dc v_dc'
            let energy_rate = p.c_dc * v_dc * d.v_dc;
            prop_assert!((energy_rate - (p.p_source - p_ac)).abs() < 1e-10);
        }
    }
}
