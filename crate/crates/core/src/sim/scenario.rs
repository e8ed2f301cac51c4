//! Synthetic disturbance records for twin-model experiments.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::ParameterSet;
use crate::timeseries::PccTimeSeries;

use super::playin::{simulate_playin, SimConfig};

/// Frequencies (Hz) and phases of the optional ambient excitation.
const AMBIENT_TONES: [(f64, f64); 5] = [
    (0.7, 0.3),
    (1.9, 1.7),
    (3.1, 4.1),
    (4.7, 2.3),
    (7.3, 5.5),
];

/// Shape of a synthetic voltage sag with its frequency excursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultTemplate {
    /// Record start and end (s).
    pub t_start: f64,
    pub t_end: f64,
    /// Sample interval (s).
    pub dt: f64,
    /// Fault inception (s).
    pub t_fault: f64,
    /// Fault duration (s).
    pub duration: f64,
    /// Pre-fault voltage (pu).
    pub v_pre: f64,
    /// Voltage held during the fault (pu).
    pub v_sag: f64,
    /// Post-clearing voltage recovery time constant (s).
    pub tau_v: f64,
    /// Peak frequency excursion per pu of sag depth (Hz/pu).
    pub f_gain: f64,
    /// Frequency excursion time constant (s).
    pub tau_f: f64,
    /// Ambient voltage excitation amplitude (pu), summed over all tones.
    pub ambient_v: f64,
    /// Ambient frequency excitation amplitude (Hz).
    pub ambient_f: f64,
}

impl Default for FaultTemplate {
    fn default() -> Self {
        Self {
            t_start: 9.0,
            t_end: 14.0,
            dt: 0.01,
            t_fault: 10.0,
            duration: 0.5,
            v_pre: 1.0,
            v_sag: 0.4,
            tau_v: 0.1,
            f_gain: 0.25,
            tau_f: 0.3,
            ambient_v: 0.0,
            ambient_f: 0.0,
        }
    }
}

impl FaultTemplate {
    /// Parses `key=value` pairs separated by commas, over the defaults.
    /// Keys: t, dur, vsag, vpre, tau, fgain, tauf, amb, ambf, start, end, dt.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Self::default();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("fault template entry `{item}` is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("fault template value `{v}` is not a number")))?;
            match k.trim() {
                "t" => t.t_fault = v,
                "dur" => t.duration = v,
                "vsag" => t.v_sag = v,
                "vpre" => t.v_pre = v,
                "tau" => t.tau_v = v,
                "fgain" => t.f_gain = v,
                "tauf" => t.tau_f = v,
                "amb" => t.ambient_v = v,
                "ambf" => t.ambient_f = v,
                "start" => t.t_start = v,
                "end" => t.t_end = v,
                "dt" => t.dt = v,
                other => return Err(Error::Config(format!("unknown fault template key `{other}`"))),
            }
        }
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.t_end > self.t_start
            && self.duration >= 0.0
            && self.v_pre > 0.0
            && self.v_sag >= 0.0
            && self.tau_v > 0.0
            && self.tau_f > 0.0
            && [self.t_fault, self.f_gain, self.ambient_v, self.ambient_f]
                .iter()
                .all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("inconsistent fault template {self:?}")))
        }
    }

    pub fn samples(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt + 1e-9).floor() as usize + 1
    }

    /// Voltage magnitude and frequency on the sample grid.
    pub fn profile(&self, f_nom: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check()?;
        let n = self.samples();
        let t_clear = self.t_fault + self.duration;
        let depth = self.v_pre - self.v_sag;
        let f_peak = self.f_gain * depth;
        let slack = 1e-9 * self.dt;
        let mut v = Vec::with_capacity(n);
        let mut f = Vec::with_capacity(n);
        for k in 0..n {
            let t = self.t_start + k as f64 * self.dt;
            let (dv, df) = if t < self.t_fault - slack {
                (0.0, 0.0)
            } else if t <= t_clear + slack {
                let df = f_peak * (1.0 - (-(t - self.t_fault).max(0.0) / self.tau_f).exp());
                (depth, df)
            } else {
                let at_clear = f_peak * (1.0 - (-self.duration / self.tau_f).exp());
                (
                    depth * (-(t - t_clear) / self.tau_v).exp(),
                    at_clear * (-(t - t_clear) / self.tau_f).exp(),
                )
            };
            let (mut av, mut af) = (0.0, 0.0);
            if self.ambient_v != 0.0 || self.ambient_f != 0.0 {
                let scale = 1.0 / AMBIENT_TONES.len() as f64;
                for (fr, ph) in AMBIENT_TONES {
                    let s = (2.0 * PI * fr * (t - self.t_start) + ph).sin();
                    av += scale * s;
                    af += scale * (s + 0.5 * ph).cos();
                }
            }
            v.push((self.v_pre - dv + self.ambient_v * av).max(0.0));
            f.push(f_nom + df + self.ambient_f * af);
        }
        Ok((v, f))
    }
}

/// Builds the voltage and frequency record of `template` and fills `(P, Q)`
/// by replaying it through the equivalent defined by `params`.
pub fn synth_scenario(
    params: &ParameterSet,
    template: &FaultTemplate,
    cfg: &SimConfig,
) -> Result<PccTimeSeries> {
    let (v, f) = template.profile(cfg.base.f_nom)?;
    let n = v.len();
    let input = PccTimeSeries::new(template.t_start, template.dt, v, f, vec![0.0; n], vec![0.0; n])?;
    let out = simulate_playin(params, &input, cfg)?;
    input.with_powers(out.p_hat, out.q_hat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_template_layout() {
        let t = FaultTemplate::default();
        let (v, f) = t.profile(60.0).unwrap();
        assert_eq!(v.len(), 501);
        let sag: Vec<usize> = (0..v.len()).filter(|&k| v[k] == 0.4).collect();
        assert_eq!(sag, (100..=150).collect::<Vec<_>>());
        assert!(v[..100].iter().all(|x| *x == 1.0));
        assert!(f[..100].iter().all(|x| *x == 60.0));
        assert!(v[151] > 0.4 && v[151] < 1.0);
    }

    #[test]
    fn zero_depth_is_flat() {
        let t = FaultTemplate::parse("vsag=1.0").unwrap();
        let (v, f) = t.profile(60.0).unwrap();
        assert!(v.iter().all(|x| *x == 1.0));
        assert!(f.iter().all(|x| *x == 60.0));
    }

    #[test]
    fn parse_keys() {
        let t = FaultTemplate::parse("t=11, dur=0.7, vsag=0.5, amb=0.01").unwrap();
        assert_eq!((t.t_fault, t.duration, t.v_sag, t.ambient_v), (11.0, 0.7, 0.5, 0.01));
        assert!(FaultTemplate::parse("bogus=1").is_err());
        assert!(FaultTemplate::parse("t").is_err());
        assert!(FaultTemplate::parse("dt=-1").is_err());
    }

    #[test]
    fn ambient_starts_unperturbed_only_if_zero() {
        let t = FaultTemplate {
            ambient_v: 0.01,
            ..Default::default()
        };
        let (v, _) = t.profile(60.0).unwrap();
        let spread = v[..100].iter().cloned().fold(f64::MIN, f64::max)
            - v[..100].iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread > 0.005 && spread < 0.02);
    }
}
