//! Static ZIP load.

use super::ComponentOutput;
use crate::params::ParameterSet;

/// Constant-impedance, constant-current and constant-power shares of the
/// static load, in MW / MVar at the reference voltage `v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipLoadParams {
    pub p_z: f64,
    pub p_i: f64,
    pub p_p: f64,
    pub q_z: f64,
    pub q_i: f64,
    pub q_p: f64,
    /// pu
    pub v0: f64,
}

impl ZipLoadParams {
    pub fn from_set(set: &ParameterSet) -> Self {
        Self {
            p_z: set.value("P_z"),
            p_i: set.value("P_i"),
            p_p: set.value("P_p"),
            q_z: set.value("Q_z"),
            q_i: set.value("Q_i"),
            q_p: set.value("Q_p"),
            v0: set.value("V_0"),
        }
    }

    /// Consumed `(P, Q)` in MW / MVar at voltage magnitude `v` (pu).
    #[inline]
    pub fn consumption(&self, v: f64) -> (f64, f64) {
        let r = v / self.v0;
        let r2 = r * r;
        (
            self.p_z * r2 + self.p_i * r + self.p_p,
            self.q_z * r2 + self.q_i * r + self.q_p,
        )
    }
}

/// Load power expressed as an injection into the PCC node, i.e. `(-P, -Q)`.
#[inline]
pub fn zip_power(params: &ZipLoadParams, v: f64) -> ComponentOutput {
    let (p, q) = params.consumption(v);
    ComponentOutput { p: -p, q: -q }
}
