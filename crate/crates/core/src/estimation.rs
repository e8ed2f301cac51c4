//! Output-mismatch objective and the two-stage estimation driver.

use std::io::Write as _;
use std::ops::Range;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::de::{de_optimize, DeConfig, Init};
use crate::error::{Error, Result};
use crate::models::EquivalentModel;
use crate::params::{ParameterSet, ESTIMATED, STAGE1};
use crate::sim::{simulate_model, SimConfig};
use crate::timeseries::{PccTimeSeries, Window};
use crate::validation::window_mse;

/// Objective value assigned to candidates whose simulation fails.
pub const PENALTY: f64 = 1e6;

/// `mse_p + mse_q` (pu²) of the equivalent against a recorded window, as a
/// function of the free coordinates.
#[derive(Debug)]
pub struct Objective {
    base: ParameterSet,
    names: Vec<String>,
    record: PccTimeSeries,
    range: Range<usize>,
    sim: SimConfig,
    penalties: AtomicUsize,
}

impl Objective {
    pub fn new<S: AsRef<str>>(
        base: &ParameterSet,
        names: &[S],
        measured: &PccTimeSeries,
        window: &Window,
        sim: &SimConfig,
    ) -> Result<Self> {
        let range = measured.window_range(window)?;
        for n in names {
            base.get(n.as_ref())?;
        }
        Ok(Self {
            base: base.clone(),
            names: names.iter().map(|n| n.as_ref().to_string()).collect(),
            record: measured.truncate_to(window.t_end)?,
            range,
            sim: *sim,
            penalties: AtomicUsize::new(0),
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Copy of the base set with `theta` written into the free coordinates.
    pub fn parameters(&self, theta: &[f64]) -> Result<ParameterSet> {
        if theta.len() != self.names.len() {
            return Err(Error::LengthMismatch(self.names.len(), theta.len()));
        }
        let mut set = self.base.clone();
        for (n, v) in self.names.iter().zip(theta) {
            set.set(n, *v)?;
        }
        Ok(set)
    }

    /// Objective value, with simulation failures returned as errors.
    pub fn try_eval(&self, theta: &[f64]) -> Result<f64> {
        let set = self.parameters(theta)?;
        let model = EquivalentModel::new(&set, &self.sim.base)?;
        let out = simulate_model(&model, &self.record, &self.sim)?;
        let (p, q) = window_mse(&self.record, &out, self.range.clone(), &self.sim.base)?;
        Ok(p + q)
    }

    /// Objective value with failures replaced by [`PENALTY`].
    pub fn eval(&self, theta: &[f64]) -> f64 {
        match self.try_eval(theta) {
            Ok(v) => v,
            Err(e) => {
                log::debug!("candidate {theta:?} penalized: {e}");
                self.penalties.fetch_add(1, Ordering::Relaxed);
                PENALTY
            }
        }
    }

    pub fn penalties(&self) -> usize {
        self.penalties.load(Ordering::Relaxed)
    }
}

/// One-shot evaluation of the objective.
pub fn objective(
    theta: &[f64],
    base: &ParameterSet,
    names: &[&str],
    measured: &PccTimeSeries,
    window: &Window,
    sim: &SimConfig,
) -> Result<f64> {
    Objective::new(base, names, measured, window, sim)?.try_eval(theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub stage_label: String,
    pub free: Vec<String>,
    pub fitted: ParameterSet,
    pub best_eps: f64,
    pub history: Vec<f64>,
    pub evaluations: usize,
    pub penalties: usize,
}

/// Fits `free_names` of `base` on `window` and writes them back into a copy.
pub fn estimate_stage<S: AsRef<str>>(
    label: &str,
    base: &ParameterSet,
    free_names: &[S],
    measured: &PccTimeSeries,
    window: &Window,
    de_cfg: &DeConfig,
    sim: &SimConfig,
) -> Result<EstimationResult> {
    de_cfg.validate()?;
    let obj = Objective::new(base, free_names, measured, window, sim)?;
    let mut fitted = base.clone();
    fitted.free_only(free_names)?;
    if free_names.is_empty() {
        let eps = obj.try_eval(&[])?;
        return Ok(EstimationResult {
            stage_label: label.into(),
            free: vec![],
            fitted,
            best_eps: eps,
            history: vec![eps],
            evaluations: 1,
            penalties: 0,
        });
    }
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut reference = Vec::new();
    for n in obj.names() {
        let p = base.get(n)?;
        if !(p.lower.is_finite() && p.upper.is_finite() && p.lower <= p.upper) {
            return Err(Error::Config(format!(
                "parameter {n} needs finite bounds to be estimated, has [{}, {}]",
                p.lower, p.upper
            )));
        }
        lower.push(p.lower);
        upper.push(p.upper);
        reference.push(p.value);
    }
    let out = de_optimize(|x| obj.eval(x), &lower, &upper, &reference, de_cfg)?;
    for (n, v) in obj.names().iter().zip(&out.best) {
        fitted.set(n, *v)?;
    }
    log::info!(
        "{label}: eps {:.3e} after {} generations ({} evaluations, {} penalized)",
        out.best_eps,
        out.generations,
        out.evaluations,
        obj.penalties()
    );
    Ok(EstimationResult {
        stage_label: label.into(),
        free: obj.names().to_vec(),
        fitted,
        best_eps: out.best_eps,
        history: out.history,
        evaluations: out.evaluations,
        penalties: obj.penalties(),
    })
}

/// Settings of one estimation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    pub label: String,
    pub free: Vec<String>,
    pub window: Window,
    pub de: DeConfig,
    /// Parameters whose search interval is narrowed to
    /// `value * [1 - f, 1 + f]` within their own bounds.
    pub narrowed: Vec<String>,
    pub narrow_fraction: f64,
}

impl StagePlan {
    fn apply_bounds(&self, set: &mut ParameterSet) -> Result<()> {
        for n in &self.narrowed {
            let p = set.get(n)?.clone();
            let (a, b) = (
                p.value * (1.0 - self.narrow_fraction),
                p.value * (1.0 + self.narrow_fraction),
            );
            let (lo, hi) = (a.min(b).max(p.lower), a.max(b).min(p.upper));
            if lo > hi {
                return Err(Error::Config(format!(
                    "narrowed interval of {n} does not meet its bounds [{}, {}]",
                    p.lower, p.upper
                )));
            }
            set.set_bounds(n, lo, hi)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageConfig {
    pub stage1: StagePlan,
    pub stage2: StagePlan,
    pub sim: SimConfig,
}

impl TwoStageConfig {
    /// Pre-disturbance group on 9-9.99 s, the other estimated parameters on
    /// 10-14 s, with the population settings used for the reference study.
    pub fn reference(seed: u64) -> Self {
        let stage2_free = ESTIMATED
            .iter()
            .filter(|n| !STAGE1.contains(n))
            .map(|n| n.to_string())
            .collect();
        Self {
            stage1: StagePlan {
                label: "stage1".into(),
                free: STAGE1.iter().map(|n| n.to_string()).collect(),
                window: Window {
                    t_start: 9.0,
                    t_end: 9.99,
                },
                de: DeConfig {
                    population_size: 15,
                    f_s: 0.8,
                    c_r: 0.3,
                    max_generations: 300,
                    target_eps: 1e-8,
                    seed,
                    init: Init::UniformInBounds,
                },
                narrowed: ["x_d", "x_q", "T_do_p"].map(String::from).to_vec(),
                narrow_fraction: 0.2,
            },
            stage2: StagePlan {
                label: "stage2".into(),
                free: stage2_free,
                window: Window {
                    t_start: 10.0,
                    t_end: 14.0,
                },
                de: DeConfig {
                    population_size: 30,
                    f_s: 0.8,
                    c_r: 0.7,
                    max_generations: 600,
                    target_eps: 1e-8,
                    seed: seed.wrapping_add(1),
                    init: Init::AroundReference(0.2),
                },
                narrowed: vec![],
                narrow_fraction: 0.2,
            },
            sim: SimConfig::default(),
        }
    }

    /// Restricts both stages to `selected`, keeping each parameter in its stage.
    pub fn restrict_to<S: AsRef<str>>(&mut self, selected: &[S]) {
        let keep = |v: &mut Vec<String>| v.retain(|n| selected.iter().any(|s| s.as_ref() == n));
        keep(&mut self.stage1.free);
        keep(&mut self.stage1.narrowed);
        keep(&mut self.stage2.free);
        keep(&mut self.stage2.narrowed);
        for s in selected {
            let s = s.as_ref();
            if !self.stage1.free.iter().any(|n| n == s) && !self.stage2.free.iter().any(|n| n == s)
            {
                self.stage2.free.push(s.to_string());
            }
        }
    }

    pub fn check(&self) -> Result<()> {
        if !self.stage1.window.precedes(&self.stage2.window) {
            return Err(Error::InvalidWindow {
                t_start: self.stage2.window.t_start,
                t_end: self.stage2.window.t_end,
                reason: format!(
                    "stage-2 window must follow the stage-1 window {}",
                    self.stage1.window
                ),
            });
        }
        self.stage1.de.validate()?;
        self.stage2.de.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageResult {
    pub stage1: EstimationResult,
    pub stage2: EstimationResult,
}

impl TwoStageResult {
    pub fn fitted(&self) -> &ParameterSet {
        &self.stage2.fitted
    }

    pub fn history_csv(&self) -> String {
        let mut s = String::from("stage,generation,best_eps\n");
        for r in [&self.stage1, &self.stage2] {
            for (g, e) in r.history.iter().enumerate() {
                s.push_str(&format!("{},{},{:?}\n", r.stage_label, g, e));
            }
        }
        s
    }

    pub fn save_history(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.history_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Reads a history file back as `(stage, generation, best_eps)` rows.
pub fn load_history(path: impl AsRef<Path>) -> Result<Vec<(String, usize, f64)>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        row: 0,
        message: e.to_string(),
    })?;
    let mut rows = Vec::new();
    for (i, r) in rdr.records().enumerate() {
        let bad = |m: String| Error::Csv {
            path: path.to_path_buf(),
            row: i + 2,
            message: m,
        };
        let r = r.map_err(|e| bad(e.to_string()))?;
        rows.push((
            r[0].to_string(),
            r[1].parse().map_err(|_| bad(format!("bad generation `{}`", &r[1])))?,
            r[2].parse().map_err(|_| bad(format!("bad value `{}`", &r[2])))?,
        ));
    }
    Ok(rows)
}

/// Stage 1 on the pre-disturbance window, then stage 2 with the stage-1
/// values held fixed.
pub fn two_stage_estimate(
    base: &ParameterSet,
    measured: &PccTimeSeries,
    cfg: &TwoStageConfig,
) -> Result<TwoStageResult> {
    cfg.check()?;
    let run = |plan: &StagePlan, start: &ParameterSet| -> Result<EstimationResult> {
        let mut set = start.clone();
        plan.apply_bounds(&mut set)?;
        estimate_stage(&plan.label, &set, &plan.free, measured, &plan.window, &plan.de, &cfg.sim)
    };
    let stage1 = run(&cfg.stage1, base).map_err(Error::in_stage("stage 1"))?;
    let stage2 = run(&cfg.stage2, &stage1.fitted).map_err(Error::in_stage("stage 2"))?;
    Ok(TwoStageResult { stage1, stage2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{synth_scenario, FaultTemplate};

    fn twin() -> (ParameterSet, PccTimeSeries) {
        let set = ParameterSet::default();
        let tpl = FaultTemplate {
            t_end: 11.0,
            ..Default::default()
        };
        let s = synth_scenario(&set, &tpl, &SimConfig::default()).unwrap();
        (set, s)
    }

    #[test]
    fn truth_scores_zero() {
        let (set, s) = twin();
        let w = Window::new(10.0, 11.0).unwrap();
        let names = ["H", "P_z"];
        let theta = [set.value("H"), set.value("P_z")];
        let eps = objective(&theta, &set, &names, &s, &w, &SimConfig::default()).unwrap();
        assert!(eps <= 1e-10);
        let pre = Window::new(9.0, 9.99).unwrap();
        assert_eq!(objective(&theta, &set, &names, &s, &pre, &SimConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn constant_reactive_offset() {
        let (set, s) = twin();
        let q: Vec<f64> = s.q().iter().map(|q| q + 0.1 * 10.0).collect();
        let shifted = s.with_powers(s.p().to_vec(), q).unwrap();
        let w = Window::new(9.5, 11.0).unwrap();
        let eps = objective(&[], &set, &[], &shifted, &w, &SimConfig::default()).unwrap();
        assert!((eps - 0.01).abs() < 1e-12, "{eps}");
    }

    #[test]
    fn failed_candidates_are_penalized() {
        let (set, s) = twin();
        let w = Window::new(10.0, 11.0).unwrap();
        let obj = Objective::new(&set, &["T_load"], &s, &w, &SimConfig::default()).unwrap();
        // a motor load far beyond breakdown has no equilibrium
        assert_eq!(obj.eval(&[50.0]), PENALTY);
        assert_eq!(obj.penalties(), 1);
        assert!(obj.try_eval(&[50.0]).is_err());
    }

    #[test]
    fn empty_stage_returns_base() {
        let (set, s) = twin();
        let w = Window::new(10.0, 11.0).unwrap();
        let r = estimate_stage::<&str>("s", &set, &[], &s, &w, &DeConfig::default(), &SimConfig::default())
            .unwrap();
        assert_eq!(r.fitted.free_names().len(), 0);
        for (a, b) in r.fitted.iter().zip(set.iter()) {
            assert_eq!(a.value, b.value);
        }
        assert!(r.best_eps <= 1e-10);
    }

    #[test]
    fn reversed_windows_are_rejected() {
        let (set, s) = twin();
        let mut cfg = TwoStageConfig::reference(0);
        std::mem::swap(&mut cfg.stage1.window, &mut cfg.stage2.window);
        assert!(matches!(
            two_stage_estimate(&set, &s, &cfg),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn reference_plan_covers_the_estimated_set() {
        let cfg = TwoStageConfig::reference(7);
        assert_eq!(cfg.stage1.free.len() + cfg.stage2.free.len(), 20);
        assert_eq!(cfg.stage2.de.seed, 8);
        assert!(cfg.check().is_ok());
        let mut sub = cfg.clone();
        sub.restrict_to(&["P_p", "H", "x_d"]);
        assert_eq!(sub.stage1.free, ["P_p", "x_d"]);
        assert_eq!(sub.stage2.free, ["H"]);
        assert_eq!(sub.stage1.narrowed, ["x_d"]);
    }

    #[test]
    fn narrowing_respects_own_bounds() {
        let plan = TwoStageConfig::reference(0).stage1;
        let mut set = ParameterSet::default();
        plan.apply_bounds(&mut set).unwrap();
        let xd = set.get("x_d").unwrap();
        assert!((xd.lower - 2.633 * 0.8).abs() < 1e-12);
        assert_eq!(xd.upper, 3.0);
        let tdo = set.get("T_do_p").unwrap();
        assert!((tdo.lower - 6.76 * 0.8).abs() < 1e-12 && tdo.upper == 8.0);
    }
}
