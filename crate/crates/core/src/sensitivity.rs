//! Trajectory sensitivities of the PCC outputs and the parameter ranking
//! built on their quadratic index.

use std::fmt;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::EquivalentModel;
use crate::params::ParameterSet;
use crate::sim::{simulate_model, SimConfig};
use crate::timeseries::{PccTimeSeries, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    P,
    Q,
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Output::P => "P",
            Output::Q => "Q",
        })
    }
}

/// `∂y/∂θ` on the samples of a window, with `y` in pu.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTrajectory {
    pub param: String,
    pub output: Output,
    pub values: Vec<f64>,
}

impl SensitivityTrajectory {
    pub fn index(&self) -> f64 {
        sensitivity_index(&self.values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    /// Relative perturbation, in (0, 0.1].
    pub rel_step: f64,
    /// Absolute perturbation used for parameters whose value is zero.
    pub abs_step: Option<f64>,
    pub sim: SimConfig,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            rel_step: 0.01,
            abs_step: None,
            sim: SimConfig::default(),
        }
    }
}

impl SensitivityConfig {
    fn check(&self) -> Result<()> {
        if !(self.rel_step > 0.0 && self.rel_step <= 0.1) {
            return Err(Error::Config(format!(
                "relative step must lie in (0, 0.1], got {}",
                self.rel_step
            )));
        }
        Ok(())
    }
}

/// Sum of squares over the samples.
pub fn sensitivity_index(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

/// Central-difference sensitivities of `(P̂, Q̂)` to `name` on `window`.
///
/// Each perturbed model is re-initialized at its own equilibrium and run
/// from the start of `input` to the end of the window.
pub fn trajectory_sensitivity(
    params: &ParameterSet,
    input: &PccTimeSeries,
    window: &Window,
    name: &str,
    cfg: &SensitivityConfig,
) -> Result<(SensitivityTrajectory, SensitivityTrajectory)> {
    cfg.check()?;
    let range = input.window_range(window)?;
    let record = input.truncate_to(window.t_end)?;
    let theta = params.get(name)?.value;
    let h = if theta != 0.0 {
        cfg.rel_step * theta
    } else {
        cfg.abs_step.ok_or_else(|| {
            Error::Config(format!(
                "parameter {name} is zero; an absolute perturbation step is required"
            ))
        })?
    };
    let run = |sign: char, value: f64| {
        let wrap = |e| Error::Perturbation {
            param: name.to_string(),
            sign,
            source: Box::new(e),
        };
        let mut set = params.clone();
        set.set(name, value).map_err(wrap)?;
        let model = EquivalentModel::new(&set, &cfg.sim.base).map_err(wrap)?;
        simulate_model(&model, &record, &cfg.sim).map_err(wrap)
    };
    let up = run('+', theta + h)?;
    let down = run('-', theta - h)?;
    let scale = 1.0 / (2.0 * h * cfg.sim.base.s_base);
    let diff = |a: &[f64], b: &[f64]| -> Vec<f64> {
        range.clone().map(|k| (a[k] - b[k]) * scale).collect()
    };
    Ok((
        SensitivityTrajectory {
            param: name.to_string(),
            output: Output::P,
            values: diff(&up.p_hat, &down.p_hat),
        },
        SensitivityTrajectory {
            param: name.to_string(),
            output: Output::Q,
            values: diff(&up.q_hat, &down.q_hat),
        },
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    pub param: String,
    pub e_p: f64,
    pub e_q: f64,
    pub combined: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRanking {
    /// Sorted by descending combined score.
    pub entries: Vec<RankEntry>,
    pub window: Window,
    pub rel_step: f64,
}

impl SensitivityRanking {
    /// Builds a ranking from raw per-parameter indices.
    pub fn from_indices(
        indices: Vec<(String, f64, f64)>,
        window: Window,
        rel_step: f64,
    ) -> Result<Self> {
        let max_p = indices.iter().map(|e| e.1).fold(0.0, f64::max);
        let max_q = indices.iter().map(|e| e.2).fold(0.0, f64::max);
        if max_p == 0.0 && max_q == 0.0 {
            return Err(Error::DegenerateSensitivity);
        }
        let norm = |x: f64, m: f64| if m > 0.0 { x / m } else { 0.0 };
        let mut entries: Vec<RankEntry> = indices
            .into_iter()
            .map(|(param, e_p, e_q)| RankEntry {
                combined: norm(e_p, max_p) + norm(e_q, max_q),
                param,
                e_p,
                e_q,
            })
            .collect();
        entries.sort_by(|a, b| {
            b.combined
                .total_cmp(&a.combined)
                .then_with(|| a.param.cmp(&b.param))
        });
        Ok(Self {
            entries,
            window,
            rel_step,
        })
    }

    /// 0-based rank of `param`.
    pub fn position(&self, param: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.param == param)
    }

    /// Names in ranked order, restricted to `among`.
    pub fn order_among(&self, among: &[&str]) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| among.contains(&e.param.as_str()))
            .map(|e| e.param.clone())
            .collect()
    }

    /// Same ranking, ordered by a single channel's index.
    pub fn by_output(&self, output: Output) -> Vec<&RankEntry> {
        let mut v: Vec<&RankEntry> = self.entries.iter().collect();
        let key = |e: &RankEntry| match output {
            Output::P => e.e_p,
            Output::Q => e.e_q,
        };
        v.sort_by(|a, b| key(b).total_cmp(&key(a)).then_with(|| a.param.cmp(&b.param)));
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# window: {}\n# rel_step: {:?}\nparam,e_p,e_q,combined\n",
            self.window, self.rel_step
        );
        for e in &self.entries {
            s.push_str(&format!("{},{:e},{:e},{:?}\n", e.param, e.e_p, e.e_q, e.combined));
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`SensitivityRanking::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let syntax = |line: usize, message: String| Error::Syntax {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut window = None;
        let mut rel_step = None;
        let mut indices = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once(':') {
                    match k.trim() {
                        "window" => window = Some(Window::parse(v.trim())?),
                        "rel_step" => {
                            rel_step = Some(v.trim().parse().map_err(|_| {
                                syntax(i + 1, format!("bad relative step `{}`", v.trim()))
                            })?)
                        }
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with("param,") {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(syntax(i + 1, format!("expected 4 columns, got {}", cells.len())));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| syntax(i + 1, format!("bad number `{s}`")))
            };
            indices.push((cells[0].trim().to_string(), num(cells[1])?, num(cells[2])?));
        }
        let window = window.ok_or_else(|| syntax(0, "missing `# window:` line".into()))?;
        Self::from_indices(indices, window, rel_step.unwrap_or(0.01))
    }
}

/// Ranks every free parameter of `params` on `window`.
pub fn rank_parameters(
    params: &ParameterSet,
    input: &PccTimeSeries,
    window: &Window,
    cfg: &SensitivityConfig,
) -> Result<SensitivityRanking> {
    cfg.check()?;
    let names = params.free_names();
    let indices = names
        .par_iter()
        .map(|name| {
            let (p, q) = trajectory_sensitivity(params, input, window, name, cfg)?;
            Ok((name.to_string(), p.index(), q.index()))
        })
        .collect::<Result<Vec<_>>>()?;
    SensitivityRanking::from_indices(indices, *window, cfg.rel_step)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionPolicy {
    TopK(usize),
    /// Keep parameters whose combined score reaches this fraction of the best.
    Threshold(f64),
}

impl std::str::FromStr for SelectionPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("selection policy `{s}` is not top:K or threshold:X"));
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "top" | "top_k" => Ok(Self::TopK(arg.trim().parse().map_err(|_| bad())?)),
            "threshold" => Ok(Self::Threshold(arg.trim().parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for SelectionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TopK(k) => write!(f, "top:{k}"),
            Self::Threshold(x) => write!(f, "threshold:{x}"),
        }
    }
}

/// Split of the ranked parameters into those to estimate and those left at
/// their typical values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub selected: Vec<String>,
    pub fixed: Vec<String>,
}

pub fn select_parameters(ranking: &SensitivityRanking, policy: SelectionPolicy) -> Selection {
    let n = ranking.entries.len();
    let keep = match policy {
        SelectionPolicy::TopK(k) => {
            if k > n {
                log::warn!("top-{k} selection clamped to the {n} ranked parameters");
            }
            k.min(n)
        }
        SelectionPolicy::Threshold(frac) => {
            let best = ranking.entries.first().map_or(0.0, |e| e.combined);
            ranking
                .entries
                .iter()
                .take_while(|e| e.combined >= frac * best)
                .count()
        }
    };
    let names = ranking.entries.iter().map(|e| e.param.clone());
    Selection {
        selected: names.clone().take(keep).collect(),
        fixed: names.skip(keep).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn index_examples() {
        assert_eq!(sensitivity_index(&[0.0; 7]), 0.0);
        assert!((sensitivity_index(&[0.1, 0.2]) - 0.05).abs() < 1e-17);
        assert_eq!(sensitivity_index(&[-3.0]), 9.0);
    }

    fn ranking(v: &[(&str, f64, f64)]) -> SensitivityRanking {
        SensitivityRanking::from_indices(
            v.iter().map(|(n, p, q)| (n.to_string(), *p, *q)).collect(),
            Window::new(0.0, 1.0).unwrap(),
            0.01,
        )
        .unwrap()
    }

    #[test]
    fn combined_score_and_order() {
        let r = ranking(&[("a", 1.0, 0.0), ("b", 2.0, 4.0), ("c", 0.0, 2.0), ("d", 1.0, 0.0)]);
        let names: Vec<&str> = r.entries.iter().map(|e| e.param.as_str()).collect();
        assert_eq!(names, ["b", "a", "c", "d"]);
        assert_eq!(r.entries[0].combined, 2.0);
        assert_eq!(r.entries[1].combined, 0.5);
    }

    #[test]
    fn degenerate_window() {
        let e = SensitivityRanking::from_indices(
            vec![("x".into(), 0.0, 0.0)],
            Window::new(0.0, 1.0).unwrap(),
            0.01,
        );
        assert!(matches!(e, Err(Error::DegenerateSensitivity)));
    }

    #[test]
    fn selection_policies() {
        let r = ranking(&[("a", 1.0, 1.0), ("b", 1.0, 1.0), ("c", 0.5, 0.1)]);
        assert!(select_parameters(&r, SelectionPolicy::TopK(0)).selected.is_empty());
        assert_eq!(select_parameters(&r, SelectionPolicy::Threshold(1.0)).selected, ["a", "b"]);
        let all = select_parameters(&r, SelectionPolicy::TopK(10));
        assert_eq!(all.selected.len(), 3);
        assert!(all.fixed.is_empty());
        let two = select_parameters(&r, SelectionPolicy::TopK(2));
        assert_eq!(two.fixed, ["c"]);
        assert_eq!("top:3".parse::<SelectionPolicy>().unwrap(), SelectionPolicy::TopK(3));
        assert_eq!(
            "threshold:0.5".parse::<SelectionPolicy>().unwrap(),
            SelectionPolicy::Threshold(0.5)
        );
        assert!("best:1".parse::<SelectionPolicy>().is_err());
    }

    #[test]
    fn ranking_file_round_trip() {
        let r = ranking(&[("x_d", 1.25e-3, 3.5e-2), ("H", 7.0e-5, 1.0e-9)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ranking.csv");
        r.save(&path).unwrap();
        assert_eq!(SensitivityRanking::load(&path).unwrap(), r);
    }

    proptest! {
        #[test]
        fn index_is_literal_sum_of_squares(v in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let mut brute = 0.0;
            for x in &v {
                brute += x * x;
            }
            prop_assert_eq!(sensitivity_index(&v), brute);
        }

        #[test]
        fn scaling_a_channel_keeps_its_order(
            v in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 2..12),
            c in 0.01f64..100.0,
        ) {
            let names: Vec<String> = (0..v.len()).map(|k| format!("p{k:02}")).collect();
            let base: Vec<_> = names.iter().zip(&v).map(|(n, (p, q))| (n.clone(), *p + 1e-3, *q)).collect();
            let scaled: Vec<_> = base.iter().map(|(n, p, q)| (n.clone(), p * c, *q)).collect();
            let w = Window::new(0.0, 1.0).unwrap();
            let a = SensitivityRanking::from_indices(base, w, 0.01).unwrap();
            let b = SensitivityRanking::from_indices(scaled, w, 0.01).unwrap();
            let oa: Vec<_> = a.by_output(Output::P).iter().map(|e| e.param.clone()).collect();
            let ob: Vec<_> = b.by_output(Output::P).iter().map(|e| e.param.clone()).collect();
            prop_assert_eq!(oa, ob);
        }
    }
}
