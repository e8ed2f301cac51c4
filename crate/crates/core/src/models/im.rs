//! Third-order induction motor: the voltage behind transient reactance plus
//! rotor slip. Phasors are in the frame rotating with the grid voltage, so
//! the EMF equation sees the slip against the actual grid frequency.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ComponentOutput;
use crate::error::{Error, Result};
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImParams {
    /// MVA
    pub s_m: f64,
    pub h_m: f64,
    pub x_m: f64,
    pub r_s: f64,
    pub x_s: f64,
    pub r_r: f64,
    pub x_r: f64,
    /// Load torque at synchronous speed, pu on `s_m`.
    pub t_load: f64,
    pub load_exponent: f64,
    pub f_nom: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImState {
    pub e_rp: f64,
    pub e_ip: f64,
    pub slip: f64,
}

impl ImParams {
    pub fn from_set(set: &ParameterSet, f_nom: f64) -> Result<Self> {
        let p = Self {
            s_m: set.value("S_m"),
            h_m: set.value("H_m"),
            x_m: set.value("X_m"),
            r_s: set.value("R_s"),
            x_s: set.value("X_s"),
            r_r: set.value("R_r"),
            x_r: set.value("X_r"),
            t_load: set.value("T_load"),
            load_exponent: set.value("Load_exp"),
            f_nom,
        };
        for (n, v) in [
            ("H_m", p.h_m),
            ("X_m", p.x_m),
            ("X_s", p.x_s),
            ("R_r", p.r_r),
            ("X_r", p.x_r),
        ] {
            if !(v > 0.0) {
                return Err(Error::PhysicalBound {
                    name: n.into(),
                    value: v,
                    rule: "must be > 0",
                });
            }
        }
        if !(p.x_m > p.x_s) {
            return Err(Error::PhysicalBound {
                name: "X_m".into(),
                value: p.x_m,
                rule: "X_m > X_s",
            });
        }
        Ok(p)
    }

    /// Transient reactance X' = X_s + X_m X_r / (X_m + X_r).
    #[inline]
    pub fn x_transient(&self) -> f64 {
        self.x_s + self.x_m * self.x_r / (self.x_m + self.x_r)
    }

    /// Open-circuit reactance X_0 = X_s + X_m.
    #[inline]
    pub fn x_open(&self) -> f64 {
        self.x_s + self.x_m
    }

    /// Rotor open-circuit time constant (s).
    #[inline]
    pub fn t0_transient(&self) -> f64 {
        (self.x_r + self.x_m) / (2.0 * PI * self.f_nom * self.r_r)
    }

    /// Mechanical load torque at slip `slip`.
    #[inline]
    pub fn load_torque(&self, slip: f64) -> f64 {
        self.t_load * (1.0 - slip).max(0.0).powf(self.load_exponent)
    }

    /// Input impedance of the steady-state equivalent circuit at slip `s`
    /// (measured against the supply frequency).
    pub fn input_impedance(&self, s: f64) -> Complex64 {
        let rotor = Complex64::new(self.r_r, s * self.x_r);
        let rotor_total = Complex64::new(self.r_r, s * (self.x_r + self.x_m));
        Complex64::new(self.r_s, self.x_s) + Complex64::i() * self.x_m * rotor / rotor_total
    }

    /// Steady-state air-gap power at terminal voltage `v` and slip `s`.
    pub fn airgap_power(&self, v: f64, s: f64) -> f64 {
        let z = self.input_impedance(s);
        let i2 = v * v / z.norm_sqr();
        (z.re - self.r_s) * i2
    }

    /// Slip against the supply frequency at which the steady-state electrical
    /// torque balances the load, on the stable branch below breakdown.
    pub fn steady_slip(&self, v: f64, f0: f64) -> Result<f64> {
        let speed_sync = f0 / self.f_nom;
        let mech = |s: f64| self.load_torque(1.0 - (speed_sync - s));
        let g = |s: f64| self.airgap_power(v, s) - mech(s);
        if mech(0.0) == 0.0 {
            return Ok(0.0);
        }
        // breakdown slip: the air-gap power is unimodal in s
        let (mut a, mut b) = (0.0f64, speed_sync.min(1.0));
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..200 {
            let c = b - ratio * (b - a);
            let d = a + ratio * (b - a);
            if self.airgap_power(v, c) < self.airgap_power(v, d) {
                a = c
            } else {
                b = d
            }
            if b - a < 1e-14 {
                break;
            }
        }
        let s_bd = 0.5 * (a + b);
        if g(s_bd) < 0.0 {
            return Err(Error::NoEquilibrium {
                component: "induction motor",
                reason: format!(
                    "load torque {} pu exceeds breakdown torque {} pu at {v} pu voltage",
                    mech(s_bd),
                    self.airgap_power(v, s_bd)
                ),
            });
        }
        let (mut lo, mut hi) = (0.0, s_bd);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Equilibrium under constant `v_phasor` and grid frequency `f0`.
    pub fn equilibrium(&self, v_phasor: Complex64, f0: f64) -> Result<ImState> {
        let v = v_phasor.norm();
        if !(v > 0.0) {
            return Err(Error::NoEquilibrium {
                component: "induction motor",
                reason: "terminal voltage is zero".into(),
            });
        }
        let s_g = self.steady_slip(v, f0)?;
        let i = v_phasor / self.input_impedance(s_g);
        let e = v_phasor - Complex64::new(self.r_s, self.x_transient()) * i;
        Ok(ImState {
            e_rp: e.re,
            e_ip: e.im,
            slip: s_g - (f0 - self.f_nom) / self.f_nom,
        })
    }
}

/// State derivative and terminal injection (MW, MVar).
#[inline]
pub fn im_derivatives(
    params: &ImParams,
    state: &ImState,
    v_phasor: Complex64,
    f_grid: f64,
) -> (ImState, ComponentOutput) {
    let e = Complex64::new(state.e_rp, state.e_ip);
    let x_p = params.x_transient();
    let i = (v_phasor - e) / Complex64::new(params.r_s, x_p);
    let s_g = state.slip + (f_grid - params.f_nom) / params.f_nom;
    let w_b = 2.0 * PI * params.f_nom;
    let j = Complex64::i();
    let de = -(e - j * (params.x_open() - x_p) * i) / params.t0_transient() - j * (w_b * s_g) * e;
    let t_e = (e * i.conj()).re;
    let d = ImState {
        e_rp: de.re,
        e_ip: de.im,
        slip: (params.load_torque(state.slip) - t_e) / (2.0 * params.h_m),
    };
    let s = v_phasor * i.conj();
    (
        d,
        ComponentOutput {
            p: -s.re * params.s_m,
            q: -s.im * params.s_m,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ImParams {
        ImParams::from_set(&ParameterSet::default(), 60.0).unwrap()
    }

    /// Electrical torque from the Thevenin equivalent seen by the rotor.
    fn thevenin_torque(p: &ImParams, v: f64, s: f64) -> f64 {
        let zs = Complex64::new(p.r_s, p.x_s);
        let zm = Complex64::new(0.0, p.x_m);
        let v_th = v * (zm / (zs + zm)).norm();
        let z_th = zs * zm / (zs + zm);
        let r2 = p.r_r / s;
        v_th * v_th * r2 / ((z_th.re + r2).powi(2) + (z_th.im + p.x_r).powi(2))
    }

    #[test]
    fn slip_matches_bisection_oracle() {
        let p = reference();
        let f = |s: f64| thevenin_torque(&p, 1.0, s) - p.t_load * (1.0 - s).powi(2);
        let (mut lo, mut hi) = (1e-9, 0.05);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let oracle = 0.5 * (lo + hi);
        let s = p.steady_slip(1.0, 60.0).unwrap();
        assert!((s - oracle).abs() < 1e-10, "{s} vs {oracle}");
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = reference();
        for (v, f) in [(1.0, 60.0), (0.9, 60.0), (1.02, 59.8)] {
            let x = p.equilibrium(Complex64::new(v, 0.0), f).unwrap();
            let (d, _) = im_derivatives(&p, &x, Complex64::new(v, 0.0), f);
            let n = d.e_rp.abs().max(d.e_ip.abs()).max(d.slip.abs());
            assert!(n < 1e-8, "v={v} f={f}: {d:?}");
            assert!(x.slip > 0.0 && x.slip < 1.0);
        }
    }

    #[test]
    fn bolted_fault_accelerates_by_load_torque() {
        let p = reference();
        let x = ImState {
            e_rp: 0.0,
            e_ip: 0.0,
            slip: 0.02,
        };
        let (d, out) = im_derivatives(&p, &x, Complex64::new(0.0, 0.0), 60.0);
        assert_eq!(out.p, 0.0);
        assert_eq!(out.q, 0.0);
        let t_m = p.t_load * 0.98f64.powi(2);
        assert!((d.slip - t_m / (2.0 * p.h_m)).abs() < 1e-15);
    }

    #[test]
    fn stall_has_no_equilibrium() {
        let mut p = reference();
        p.t_load = 20.0;
        assert!(matches!(
            p.equilibrium(Complex64::new(1.0, 0.0), 60.0),
            Err(Error::NoEquilibrium {
                component: "induction motor",
                ..
            })
        ));
    }

    #[test]
    fn no_load_reactive_power_scales_with_magnetizing_branch() {
        // Oracle: with the rotor branch open the motor is the series R_s + jX_0.
        let q = |p: &ImParams| {
            let x = p.equilibrium(Complex64::new(1.0, 0.0), 60.0).unwrap();
            let (_, out) = im_derivatives(p, &x, Complex64::new(1.0, 0.0), 60.0);
            -out.q / p.s_m
        };
        let circuit = |p: &ImParams| {
            let x0 = p.x_s + p.x_m;
            x0 / (p.r_s * p.r_s + x0 * x0)
        };
        let mut a = reference();
        a.t_load = 0.0;
        let mut b = a;
        b.x_m *= 2.0;
        let ratio = q(&b) / q(&a);
        let expected = circuit(&b) / circuit(&a);
        assert!((ratio - expected).abs() < 1e-10, "{ratio} vs {expected}");
        assert!((q(&a) - circuit(&a)).abs() < 1e-10);
    }
}
