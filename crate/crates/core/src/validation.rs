//! Fit quality on fitting and held-out events.

use std::fmt;
use std::ops::Range;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::EquivalentModel;
use crate::params::ParameterSet;
use crate::sim::{simulate_model, OutputTrajectory, SimConfig};
use crate::timeseries::{BaseSystem, PccTimeSeries, Window};

/// Default acceptance threshold on `mse_p + mse_q`, pu².
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Mean squared difference of two equally long sequences.
pub fn mse(y: &[f64], y_hat: &[f64]) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch(y.len(), y_hat.len()));
    }
    if y.is_empty() {
        return Err(Error::InvalidSeries("mean squared error of empty sequences".into()));
    }
    let s: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / y.len() as f64)
}

/// `(mse_p, mse_q)` in pu² between the recorded and simulated flows over the
/// sample range `range`.
pub fn window_mse(
    measured: &PccTimeSeries,
    simulated: &OutputTrajectory,
    range: Range<usize>,
    base: &BaseSystem,
) -> Result<(f64, f64)> {
    let pu = |x: &[f64]| -> Vec<f64> { x[range.clone()].iter().map(|v| base.to_pu(*v)).collect() };
    if simulated.len() < range.end || measured.len() < range.end {
        return Err(Error::LengthMismatch(measured.len(), simulated.len()));
    }
    Ok((
        mse(&pu(measured.p()), &pu(&simulated.p_hat))?,
        mse(&pu(measured.q()), &pu(&simulated.q_hat))?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationEvent {
    pub label: String,
    pub series: PccTimeSeries,
    pub window: Window,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventOutcome {
    Scored { mse_p: f64, mse_q: f64, mse_total: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub label: String,
    pub window: Window,
    pub outcome: EventOutcome,
}

impl EventRecord {
    pub fn mse_total(&self) -> Option<f64> {
        match self.outcome {
            EventOutcome::Scored { mse_total, .. } => Some(mse_total),
            EventOutcome::Failed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Validated,
    RetuneRequired { worst: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Validated => f.write_str("validated"),
            Verdict::RetuneRequired { worst } => write!(f, "retune_required (worst: {worst})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub records: Vec<EventRecord>,
    pub threshold: f64,
    pub verdict: Verdict,
}

fn score(
    fitted: &ParameterSet,
    ev: &ValidationEvent,
    cfg: &SimConfig,
) -> Result<(f64, f64)> {
    let range = ev.series.window_range(&ev.window)?;
    let record = ev.series.truncate_to(ev.window.t_end)?;
    let model = EquivalentModel::new(fitted, &cfg.base)?;
    let out = simulate_model(&model, &record, cfg)?;
    window_mse(&record, &out, range, &cfg.base)
}

/// Scores every event; failures are recorded against their event.
pub fn validate(
    fitted: &ParameterSet,
    events: &[ValidationEvent],
    threshold: f64,
    cfg: &SimConfig,
) -> ValidationReport {
    let records: Vec<EventRecord> = events
        .par_iter()
        .map(|ev| EventRecord {
            label: ev.label.clone(),
            window: ev.window,
            outcome: match score(fitted, ev, cfg) {
                Ok((mse_p, mse_q)) => EventOutcome::Scored {
                    mse_p,
                    mse_q,
                    mse_total: mse_p + mse_q,
                },
                Err(e) => EventOutcome::Failed(e.to_string()),
            },
        })
        .collect();
    let verdict = verdict(&records, threshold);
    ValidationReport {
        records,
        threshold,
        verdict,
    }
}

fn verdict(records: &[EventRecord], threshold: f64) -> Verdict {
    let worst = records.iter().max_by(|a, b| {
        let key = |r: &EventRecord| r.mse_total().unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b))
    });
    match worst {
        Some(r) if r.mse_total().is_none_or(|m| m > threshold) => Verdict::RetuneRequired {
            worst: r.label.clone(),
        },
        _ => Verdict::Validated,
    }
}

impl ValidationReport {
    pub fn is_validated(&self) -> bool {
        self.verdict == Verdict::Validated
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# threshold: {:?}\n# verdict: {}\nevent,window,mse_p,mse_q,mse_total,status\n",
            self.threshold, self.verdict
        );
        for r in &self.records {
            match &r.outcome {
                EventOutcome::Scored {
                    mse_p,
                    mse_q,
                    mse_total,
                } => s.push_str(&format!(
                    "{},{},{:?},{:?},{:?},ok\n",
                    r.label, r.window, mse_p, mse_q, mse_total
                )),
                EventOutcome::Failed(msg) => s.push_str(&format!(
                    "{},{},,,,\"failed: {}\"\n",
                    r.label,
                    r.window,
                    msg.replace('"', "'")
                )),
            }
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Reads a file written by [`ValidationReport::save`]. The verdict is
    /// recomputed from the records and the stored threshold.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let csv_err = |row: usize, message: String| Error::Csv {
            path: path.to_path_buf(),
            row,
            message,
        };
        let mut threshold = None;
        for line in text.lines() {
            if let Some(v) = line.strip_prefix("# threshold:") {
                threshold = Some(
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| csv_err(0, format!("bad threshold `{}`", v.trim())))?,
                );
            }
        }
        let threshold = threshold.ok_or_else(|| csv_err(0, "missing threshold".into()))?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| csv_err(i + 2, e.to_string()))?;
            let num = |k: usize| {
                row[k]
                    .parse::<f64>()
                    .map_err(|_| csv_err(i + 2, format!("bad number `{}`", &row[k])))
            };
            let outcome = if &row[5] == "ok" {
                EventOutcome::Scored {
                    mse_p: num(2)?,
                    mse_q: num(3)?,
                    mse_total: num(4)?,
                }
            } else {
                EventOutcome::Failed(row[5].trim_start_matches("failed: ").to_string())
            };
            records.push(EventRecord {
                label: row[0].to_string(),
                window: Window::parse(&row[1])?,
                outcome,
            });
        }
        let verdict = verdict(&records, threshold);
        Ok(Self {
            records,
            threshold,
            verdict,
        })
    }
}

/// Recorded and simulated flows of one event, MW / MVar.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub t: Vec<f64>,
    pub p_meas: Vec<f64>,
    pub p_hat: Vec<f64>,
    pub q_meas: Vec<f64>,
    pub q_hat: Vec<f64>,
}

impl Comparison {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                row: 0,
                message: e.to_string(),
            })?;
        let mut c = Comparison {
            t: vec![],
            p_meas: vec![],
            p_hat: vec![],
            q_meas: vec![],
            q_hat: vec![],
        };
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| Error::Csv {
                path: path.to_path_buf(),
                row: i + 2,
                message: e.to_string(),
            })?;
            let mut v = [0.0; 5];
            for (k, slot) in v.iter_mut().enumerate() {
                *slot = row[k].parse().map_err(|_| Error::BadNumber {
                    path: path.to_path_buf(),
                    row: i + 2,
                    column: ["t", "p_meas", "p_hat", "q_meas", "q_hat"][k].into(),
                    text: row[k].to_string(),
                })?;
            }
            c.t.push(v[0]);
            c.p_meas.push(v[1]);
            c.p_hat.push(v[2]);
            c.q_meas.push(v[3]);
            c.q_hat.push(v[4]);
        }
        Ok(c)
    }

    /// `(mse_p, mse_q)` in pu² over the rows with index in `range`.
    pub fn window_mse(&self, range: Range<usize>, base: &BaseSystem) -> Result<(f64, f64)> {
        let pu = |x: &[f64]| -> Vec<f64> { x[range.clone()].iter().map(|v| base.to_pu(*v)).collect() };
        Ok((
            mse(&pu(&self.p_meas), &pu(&self.p_hat))?,
            mse(&pu(&self.q_meas), &pu(&self.q_hat))?,
        ))
    }
}

/// Writes `t,p_meas,p_hat,q_meas,q_hat` for the whole event.
pub fn emit_comparison(
    fitted: &ParameterSet,
    event: &PccTimeSeries,
    out: impl AsRef<Path>,
    cfg: &SimConfig,
) -> Result<()> {
    let path = out.as_ref();
    let model = EquivalentModel::new(fitted, &cfg.base)?;
    let sim = simulate_model(&model, event, cfg)?;
    let mut s = String::from("t,p_meas,p_hat,q_meas,q_hat\n");
    for k in 0..event.len() {
        s.push_str(&format!(
            "{:?},{:?},{:?},{:?},{:?}\n",
            sim.t[k],
            event.p()[k],
            sim.p_hat[k],
            event.q()[k],
            sim.q_hat[k]
        ));
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[1.0; 3]).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(mse(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 2.5);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(mse(&[], &[]).is_err());
    }

    fn record(label: &str, m: Option<f64>) -> EventRecord {
        EventRecord {
            label: label.into(),
            window: Window::new(10.0, 14.0).unwrap(),
            outcome: match m {
                Some(m) => EventOutcome::Scored {
                    mse_p: m / 2.0,
                    mse_q: m / 2.0,
                    mse_total: m,
                },
                None => EventOutcome::Failed("diverged".into()),
            },
        }
    }

    #[test]
    fn verdict_rules() {
        let r = [record("a", Some(0.01)), record("b", Some(0.02))];
        assert_eq!(verdict(&r, 0.05), Verdict::Validated);
        assert_eq!(verdict(&r, 0.0), Verdict::RetuneRequired { worst: "b".into() });
        let f = [record("a", Some(0.0)), record("c", None)];
        assert_eq!(verdict(&f, 1.0), Verdict::RetuneRequired { worst: "c".into() });
    }

    #[test]
    fn report_schema_and_round_trip() {
        // fixture rows shaped like a two-fault summary table
        let records = vec![
            EventRecord {
                label: "fault_10s_500ms".into(),
                window: Window::new(10.0, 14.0).unwrap(),
                outcome: EventOutcome::Scored {
                    mse_p: 0.729,
                    mse_q: 0.246,
                    mse_total: 0.975,
                },
            },
            EventRecord {
                label: "fault_11s_700ms".into(),
                window: Window::new(11.0, 15.0).unwrap(),
                outcome: EventOutcome::Scored {
                    mse_p: 0.157,
                    mse_q: 0.113,
                    mse_total: 0.27,
                },
            },
            record("broken", None),
        ];
        let report = ValidationReport {
            verdict: verdict(&records, 0.05),
            records,
            threshold: 0.05,
        };
        let text = report.to_csv();
        assert!(text.contains("event,window,mse_p,mse_q,mse_total,status"));
        assert!(text.contains("fault_10s_500ms,10:14,0.729,0.246,0.975,ok"));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("report.csv");
        report.save(&p).unwrap();
        assert_eq!(ValidationReport::load(&p).unwrap(), report);
    }

    proptest! {
        #[test]
        fn mse_detects_translation(y in proptest::collection::vec(-10.0f64..10.0, 1..100), c in -5.0f64..5.0) {
            let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
            let m = mse(&y, &shifted).unwrap();
            prop_assert!((m - c * c).abs() < 1e-9 * (1.0 + c * c));
        }

        #[test]
        fn mse_is_symmetric(pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..100)) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            prop_assert_eq!(mse(&a, &b).unwrap(), mse(&b, &a).unwrap());
        }
    }
}
