//! Component models of the microgrid equivalent and their assembly at the PCC.
//!
//! Every component reports an injection into the PCC node. The PCC flow is
//! grid-to-microgrid, hence `P̂ = -(sum of injections)`.
//!
//! All components are paralleled on the PCC bus and see the same voltage
//! phasor, taken at angle zero in the frame that rotates with the grid.
//! Each operating point follows from the component's own setpoints: the
//! generator power reference `P_sg` and AVR setpoint `V_ref`, the converter
//! source power `P_source`, the motor load torque `T_load` and the ZIP shares.

pub mod im;
pub mod sg;
pub mod vsc;
pub mod zip;

use num_complex::Complex64;

pub use im::{im_derivatives, ImParams, ImState};
pub use sg::{sg_derivatives, SgParams, SgState};
pub use vsc::{vsc_derivatives, VscParams, VscState};
pub use zip::{zip_power, ZipLoadParams};

use crate::error::{Error, Result};
use crate::params::ParameterSet;
use crate::timeseries::BaseSystem;

/// Terminal power of one component, positive into the PCC node.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentOutput {
    /// MW
    pub p: f64,
    /// MVar
    pub q: f64,
}

impl std::ops::Add for ComponentOutput {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            p: self.p + o.p,
            q: self.q + o.q,
        }
    }
}

/// Number of entries in the flattened state vector.
pub const N_STATES: usize = 12;

/// Dynamic state of the whole equivalent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EquivalentState {
    pub sg: SgState,
    pub im: ImState,
    pub vsc: VscState,
    /// Angle of the PCC phasor against a frame rotating at nominal frequency.
    pub network_angle: f64,
}

impl EquivalentState {
    pub fn to_array(&self) -> [f64; N_STATES] {
        let (g, m, c) = (&self.sg, &self.im, &self.vsc);
        [
            g.delta,
            g.omega,
            g.e_qp,
            g.e_dp,
            g.efd,
            g.p_m,
            m.e_rp,
            m.e_ip,
            m.slip,
            c.v_dc,
            c.xi,
            self.network_angle,
        ]
    }

    pub fn from_array(x: &[f64; N_STATES]) -> Self {
        Self {
            sg: SgState {
                delta: x[0],
                omega: x[1],
                e_qp: x[2],
                e_dp: x[3],
                efd: x[4],
                p_m: x[5],
            },
            im: ImState {
                e_rp: x[6],
                e_ip: x[7],
                slip: x[8],
            },
            vsc: VscState {
                v_dc: x[9],
                xi: x[10],
            },
            network_angle: x[11],
        }
    }
}

/// Per-component injections at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Injections {
    pub zip: ComponentOutput,
    pub sg: ComponentOutput,
    pub vsc: ComponentOutput,
    pub im: ComponentOutput,
}

impl Injections {
    pub fn total(&self) -> ComponentOutput {
        self.zip + self.sg + self.vsc + self.im
    }

    /// Grid-to-microgrid flow at the PCC (MW, MVar).
    pub fn pcc(&self) -> (f64, f64) {
        let t = self.total();
        (-t.p, -t.q)
    }
}

/// The assembled equivalent with all parameters resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentModel {
    pub zip: ZipLoadParams,
    pub sg: SgParams,
    pub vsc: VscParams,
    pub im: ImParams,
    pub base: BaseSystem,
}

impl EquivalentModel {
    pub fn new(set: &ParameterSet, base: &BaseSystem) -> Result<Self> {
        set.validate()?;
        let vsc = VscParams::from_set(set);
        if !(vsc.k_ivdc > 0.0 && vsc.c_dc > 0.0 && vsc.v_dc_nom > 0.0 && vsc.i_max > 0.0) {
            return Err(Error::PhysicalBound {
                name: "K_ivdc".into(),
                value: vsc.k_ivdc,
                rule: "converter gains, capacitance and limits must be > 0",
            });
        }
        Ok(Self {
            zip: ZipLoadParams::from_set(set),
            sg: SgParams::from_set(set, base.f_nom)?,
            vsc,
            im: ImParams::from_set(set, base.f_nom)?,
            base: *base,
        })
    }

    #[inline]
    fn split(&self, x: &[f64; N_STATES]) -> EquivalentState {
        EquivalentState::from_array(x)
    }

    /// Time derivative of the flattened state under PCC voltage magnitude `v`
    /// and frequency `f`.
    #[inline]
    pub fn derivatives(&self, x: &[f64; N_STATES], v: f64, f: f64) -> [f64; N_STATES] {
        let st = self.split(x);
        let vp = Complex64::new(v, 0.0);
        let (dg, _) = sg_derivatives(&self.sg, &st.sg, vp, f);
        let (dm, _) = im_derivatives(&self.im, &st.im, vp, f);
        let (dc, _) = vsc_derivatives(&self.vsc, &st.vsc, v);
        let mut d = EquivalentState {
            sg: dg,
            im: dm,
            vsc: dc,
            network_angle: 0.0,
        }
        .to_array();
        d[11] = 2.0 * std::f64::consts::PI * (f - self.base.f_nom);
        d
    }

    /// Component injections at state `x`.
    pub fn injections(&self, x: &[f64; N_STATES], v: f64, f: f64) -> Injections {
        let st = self.split(x);
        let vp = Complex64::new(v, 0.0);
        Injections {
            zip: zip_power(&self.zip, v),
            sg: sg_derivatives(&self.sg, &st.sg, vp, f).1,
            vsc: vsc_derivatives(&self.vsc, &st.vsc, v).1,
            im: im_derivatives(&self.im, &st.im, vp, f).1,
        }
    }

    /// PCC flow `(P̂, Q̂)` in MW / MVar.
    #[inline]
    pub fn pcc_output(&self, x: &[f64; N_STATES], v: f64, f: f64) -> (f64, f64) {
        self.injections(x, v, f).pcc()
    }

    /// Terminal voltages where the exciter limiter switches.
    pub fn switching_voltages(&self) -> [f64; 2] {
        self.sg.avr_limit_voltages()
    }
}

/// Equilibrium of every component under constant `(v0, f0)`.
pub fn init_steady_state(model: &EquivalentModel, v0: f64, f0: f64) -> Result<EquivalentState> {
    if !(v0 > 0.0) {
        return Err(Error::NoEquilibrium {
            component: "equivalent",
            reason: format!("initial voltage {v0} pu"),
        });
    }
    let vp = Complex64::new(v0, 0.0);
    Ok(EquivalentState {
        sg: model.sg.equilibrium(vp, f0)?,
        im: model.im.equilibrium(vp, f0)?,
        vsc: model.vsc.equilibrium(v0)?,
        network_angle: 0.0,
    })
}
