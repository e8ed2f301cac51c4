//! End-to-end run driven by a scenario file.
//!
//! The scenario file uses `key = value` lines with `#` comments. Paths are
//! relative to the scenario file. Recognized keys:
//!
//! ```text
//! params = base.params          # starting parameter set and bounds
//! measured = fit.csv            # record used for ranking and fitting
//! output = out                  # artifact directory
//! seed = 1
//! stage1 = 9:9.99
//! stage2 = 10:14
//! stage1.pop = 15               # also .f_s .c_r .generations .target_eps
//! stage2.init = around:0.2      # or uniform
//! stage1.narrow = x_d,x_q,T_do_p
//! stage1.narrow_fraction = 0.2
//! rank.window = 9:14
//! rank.rel_step = 0.01
//! selection = top:20            # or threshold:0.05
//! event = val_11s, val.csv, 10:15   # repeatable
//! threshold = 0.05
//! dt_int = 0.001
//! method = rk4
//! s_base = 10                   # also v_base, f_nom
//! ```

use std::path::{Path, PathBuf};

use crate::de::Init;
use crate::error::{Error, Result};
use crate::estimation::{two_stage_estimate, TwoStageConfig, TwoStageResult};
use crate::params::{load_parameter_set, save_parameter_set};
use crate::sensitivity::{
    rank_parameters, select_parameters, SelectionPolicy, SensitivityConfig, SensitivityRanking,
};
use crate::sim::{Method, SimConfig};
use crate::timeseries::{load_pcc_csv, BaseSystem, Window};
use crate::validation::{emit_comparison, validate, ValidationEvent, ValidationReport, DEFAULT_THRESHOLD};

#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub label: String,
    pub path: PathBuf,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub params: PathBuf,
    pub measured: PathBuf,
    pub output: PathBuf,
    pub seed: u64,
    pub estimation: TwoStageConfig,
    pub rank_window: Window,
    pub rel_step: f64,
    pub selection: SelectionPolicy,
    pub events: Vec<EventSpec>,
    pub threshold: f64,
}

fn parse_init(s: &str) -> Option<Init> {
    if s == "uniform" {
        return Some(Init::UniformInBounds);
    }
    let f = s.strip_prefix("around:")?.trim().parse().ok()?;
    Some(Init::AroundReference(f))
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    /// Parses scenario text; relative paths resolve against `path`'s directory.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let dir = path.parent().unwrap_or(Path::new("")).to_path_buf();
        let syntax = |line: usize, message: String| Error::Syntax {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut params = None;
        let mut measured = None;
        let mut output = dir.join("out");
        let mut seed = 0u64;
        let mut est = TwoStageConfig::reference(0);
        let mut rank_window = None;
        let mut rel_step = 0.01;
        let mut selection = SelectionPolicy::TopK(crate::params::ESTIMATED.len());
        let mut events = Vec::new();
        let mut threshold = DEFAULT_THRESHOLD;
        let (mut s_base, mut v_base, mut f_nom) = {
            let b = BaseSystem::default();
            (b.s_base, b.v_base, b.f_nom)
        };

        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax(ln, format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse().map_err(|_| syntax(ln, format!("`{v}` is not a number for {key}")))
            };
            let count = |v: &str| -> Result<usize> {
                v.parse().map_err(|_| syntax(ln, format!("`{v}` is not a count for {key}")))
            };
            let window = |v: &str| Window::parse(v).map_err(|e| syntax(ln, e.to_string()));

            if let Some((stage, field)) = key.split_once('.').filter(|(s, _)| s.starts_with("stage")) {
                let plan = match stage {
                    "stage1" => &mut est.stage1,
                    "stage2" => &mut est.stage2,
                    _ => return Err(syntax(ln, format!("unknown stage `{stage}`"))),
                };
                match field {
                    "pop" => plan.de.population_size = count(value)?,
                    "f_s" => plan.de.f_s = num(value)?,
                    "c_r" => plan.de.c_r = num(value)?,
                    "generations" => plan.de.max_generations = count(value)?,
                    "target_eps" => plan.de.target_eps = num(value)?,
                    "init" => {
                        plan.de.init = parse_init(value)
                            .ok_or_else(|| syntax(ln, format!("bad initialization `{value}`")))?
                    }
                    "free" => plan.free = split_list(value),
                    "narrow" => plan.narrowed = split_list(value),
                    "narrow_fraction" => plan.narrow_fraction = num(value)?,
                    _ => return Err(syntax(ln, format!("unknown key `{key}`"))),
                }
                continue;
            }
            match key {
                "params" => params = Some(dir.join(value)),
                "measured" => measured = Some(dir.join(value)),
                "output" => output = dir.join(value),
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| syntax(ln, format!("`{value}` is not a seed")))?
                }
                "stage1" => est.stage1.window = window(value)?,
                "stage2" => est.stage2.window = window(value)?,
                "rank.window" => rank_window = Some(window(value)?),
                "rank.rel_step" => rel_step = num(value)?,
                "selection" => {
                    selection = value.parse().map_err(|e: Error| syntax(ln, e.to_string()))?
                }
                "event" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    if parts.len() != 3 {
                        return Err(syntax(ln, "event needs `label, path, t0:t1`".into()));
                    }
                    events.push(EventSpec {
                        label: parts[0].to_string(),
                        path: dir.join(parts[1]),
                        window: window(parts[2])?,
                    });
                }
                "threshold" => threshold = num(value)?,
                "dt_int" => est.sim.dt_int = num(value)?,
                "method" => est.sim.method = value.parse::<Method>().map_err(|e| syntax(ln, e.to_string()))?,
                "s_base" => s_base = num(value)?,
                "v_base" => v_base = num(value)?,
                "f_nom" => f_nom = num(value)?,
                _ => return Err(syntax(ln, format!("unknown key `{key}`"))),
            }
        }
        est.sim.base = BaseSystem::new(s_base, v_base, f_nom)?;
        est.stage1.de.seed = seed;
        est.stage2.de.seed = seed.wrapping_add(1);
        let rank_window = rank_window.unwrap_or(Window {
            t_start: est.stage1.window.t_start,
            t_end: est.stage2.window.t_end,
        });
        let cfg = Self {
            params: params.ok_or_else(|| syntax(0, "missing `params`".into()))?,
            measured: measured.ok_or_else(|| syntax(0, "missing `measured`".into()))?,
            output,
            seed,
            estimation: est,
            rank_window,
            rel_step,
            selection,
            events,
            threshold,
        };
        cfg.estimation.check()?;
        Ok(cfg)
    }

    pub fn sim(&self) -> SimConfig {
        self.estimation.sim
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutcome {
    pub ranking: SensitivityRanking,
    pub selected: Vec<String>,
    pub estimation: TwoStageResult,
    pub report: ValidationReport,
}

impl PipelineOutcome {
    /// 0 when validated, 2 when a retune is required.
    pub fn exit_code(&self) -> i32 {
        if self.report.is_validated() {
            0
        } else {
            2
        }
    }
}

/// Rank, select, fit in two stages, validate, and write the artifacts.
pub fn run_pipeline(cfg: &ScenarioConfig) -> Result<PipelineOutcome> {
    let stage = Error::in_stage;
    let sim = cfg.sim();
    let base = load_parameter_set(&cfg.params).map_err(stage("load"))?;
    let measured = load_pcc_csv(&cfg.measured, &sim.base).map_err(stage("load"))?;
    let events = cfg
        .events
        .iter()
        .map(|e| {
            Ok(ValidationEvent {
                label: e.label.clone(),
                series: load_pcc_csv(&e.path, &sim.base)?,
                window: e.window,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map_err(stage("load"))?;
    let out = &cfg.output;
    std::fs::create_dir_all(out.join("curves")).map_err(|e| Error::io(out, e))?;

    // rank the parameters the stages may estimate
    let mut candidates = base.clone();
    let planned: Vec<&str> = cfg
        .estimation
        .stage1
        .free
        .iter()
        .chain(&cfg.estimation.stage2.free)
        .map(String::as_str)
        .filter(|n| base.get(n).is_ok_and(|p| p.free))
        .collect();
    candidates.free_only(&planned).map_err(stage("rank"))?;
    let scfg = SensitivityConfig {
        rel_step: cfg.rel_step,
        abs_step: None,
        sim,
    };
    let ranking =
        rank_parameters(&candidates, &measured, &cfg.rank_window, &scfg).map_err(stage("rank"))?;
    ranking.save(out.join("ranking.csv")).map_err(stage("rank"))?;
    let selection = select_parameters(&ranking, cfg.selection);
    log::info!(
        "selected {} parameters, {} left at typical values",
        selection.selected.len(),
        selection.fixed.len()
    );

    let mut plan = cfg.estimation.clone();
    plan.restrict_to(&selection.selected);
    let estimation = two_stage_estimate(&base, &measured, &plan).map_err(stage("estimate"))?;
    save_parameter_set(estimation.fitted(), out.join("fitted.params")).map_err(stage("estimate"))?;
    estimation
        .save_history(out.join("history.csv"))
        .map_err(stage("estimate"))?;

    let report = validate(estimation.fitted(), &events, cfg.threshold, &sim);
    report.save(out.join("report.csv")).map_err(stage("validate"))?;
    for ev in &events {
        emit_comparison(
            estimation.fitted(),
            &ev.series,
            out.join("curves").join(format!("{}.csv", ev.label)),
            &sim,
        )
        .map_err(stage("validate"))?;
    }
    log::info!("verdict: {}", report.verdict);
    Ok(PipelineOutcome {
        ranking,
        selected: selection.selected,
        estimation,
        report,
    })
}
