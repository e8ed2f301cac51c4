//! PCC measurement series: ingestion, preprocessing, windowing and persistence.
//!
//! A [`PccTimeSeries`] holds uniformly sampled voltage magnitude (pu),
//! frequency (Hz), active power (MW) and reactive power (MVar) recorded at the
//! point of common coupling. Power is positive when it flows from the grid
//! into the microgrid.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// Tolerance on sample spacing, relative to `dt`.
const SPACING_TOL: f64 = 1e-6;
/// Slack used when mapping window edges onto sample indices.
const INDEX_SLACK: f64 = 1e-9;

/// Per-unit conversion bases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSystem {
    /// MVA
    pub s_base: f64,
    /// kV
    pub v_base: f64,
    /// Hz
    pub f_nom: f64,
}

impl Default for BaseSystem {
    fn default() -> Self {
        Self {
            s_base: 10.0,
            v_base: 13.8,
            f_nom: 60.0,
        }
    }
}

impl BaseSystem {
    pub fn new(s_base: f64, v_base: f64, f_nom: f64) -> Result<Self> {
        if !(s_base > 0.0 && v_base > 0.0 && f_nom > 0.0) {
            return Err(Error::Config(format!(
                "base quantities must be strictly positive (s_base={s_base}, v_base={v_base}, f_nom={f_nom})"
            )));
        }
        Ok(Self {
            s_base,
            v_base,
            f_nom,
        })
    }

    /// MW (or MVar) to per-unit on `s_base`.
    #[inline]
    pub fn to_pu(&self, mw: f64) -> f64 {
        mw / self.s_base
    }

    #[inline]
    pub fn to_mw(&self, pu: f64) -> f64 {
        pu * self.s_base
    }
}

/// Closed time interval `[t_start, t_end]` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t_start: f64,
    pub t_end: f64,
}

impl Window {
    pub fn new(t_start: f64, t_end: f64) -> Result<Self> {
        if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
            return Err(Error::InvalidWindow {
                t_start,
                t_end,
                reason: "t_start must be strictly before t_end".into(),
            });
        }
        Ok(Self { t_start, t_end })
    }

    /// Parses `t0:t1`.
    pub fn parse(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("window `{text}` is not of the form t0:t1")))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("window `{text}`: bad number `{s}`")))
        };
        Window::new(parse(a)?, parse(b)?)
    }

    /// True when `self` ends before `other` starts.
    pub fn precedes(&self, other: &Window) -> bool {
        self.t_end < other.t_start
    }
}

impl std::fmt::Display for Window {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.t_start, self.t_end)
    }
}

/// Uniformly sampled `(V, f, P, Q)` record at the PCC.
#[derive(Debug, Clone, PartialEq)]
pub struct PccTimeSeries {
    t0: f64,
    dt: f64,
    v_mag: Vec<f64>,
    freq: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl PccTimeSeries {
    pub fn new(
        t0: f64,
        dt: f64,
        v_mag: Vec<f64>,
        freq: Vec<f64>,
        p: Vec<f64>,
        q: Vec<f64>,
    ) -> Result<Self> {
        let n = v_mag.len();
        if n < 2 {
            return Err(Error::InvalidSeries(format!(
                "at least 2 samples required, got {n}"
            )));
        }
        if freq.len() != n || p.len() != n || q.len() != n {
            return Err(Error::InvalidSeries(format!(
                "channel lengths differ (v={}, f={}, p={}, q={})",
                n,
                freq.len(),
                p.len(),
                q.len()
            )));
        }
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::InvalidSeries(format!("bad timing t0={t0}, dt={dt}")));
        }
        if let Some(k) = v_mag.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidSeries(format!(
                "voltage magnitude at sample {k} is {}",
                v_mag[k]
            )));
        }
        if let Some(k) = freq.iter().position(|f| !(*f > 0.0 && f.is_finite())) {
            return Err(Error::InvalidSeries(format!(
                "frequency at sample {k} is {}",
                freq[k]
            )));
        }
        if let Some(k) = p.iter().chain(q.iter()).position(|x| !x.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite power at sample {}",
                k % n
            )));
        }
        Ok(Self {
            t0,
            dt,
            v_mag,
            freq,
            p,
            q,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.v_mag.len()
    }

    /// Never true for a constructed series; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.v_mag.is_empty()
    }

    pub fn v_mag(&self) -> &[f64] {
        &self.v_mag
    }

    pub fn freq(&self) -> &[f64] {
        &self.freq
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Time of sample `k`.
    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn span(&self) -> Window {
        Window {
            t_start: self.t0,
            t_end: self.t_end(),
        }
    }

    /// Same timing and inputs with the power channels replaced.
    pub fn with_powers(&self, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        Self::new(
            self.t0,
            self.dt,
            self.v_mag.clone(),
            self.freq.clone(),
            p,
            q,
        )
    }

    /// Sample indices whose times fall in `[t_start, t_end]`.
    pub fn window_range(&self, w: &Window) -> Result<Range<usize>> {
        let span = self.span();
        let tol = INDEX_SLACK.max(1e-9 * self.dt);
        if w.t_start < span.t_start - tol || w.t_end > span.t_end + tol {
            return Err(Error::InvalidWindow {
                t_start: w.t_start,
                t_end: w.t_end,
                reason: format!("outside the series span [{}, {}]", span.t_start, span.t_end),
            });
        }
        let first = ((w.t_start - self.t0) / self.dt - INDEX_SLACK).ceil().max(0.0) as usize;
        let last = ((w.t_end - self.t0) / self.dt + INDEX_SLACK).floor();
        if last < 0.0 || (last as usize) < first {
            return Err(Error::InvalidWindow {
                t_start: w.t_start,
                t_end: w.t_end,
                reason: "contains no sample".into(),
            });
        }
        let last = (last as usize).min(self.len() - 1);
        Ok(first..last + 1)
    }

    /// Sub-series over sample indices; needs at least two samples.
    pub fn slice(&self, r: Range<usize>) -> Result<Self> {
        Self::new(
            self.time(r.start),
            self.dt,
            self.v_mag[r.clone()].to_vec(),
            self.freq[r.clone()].to_vec(),
            self.p[r.clone()].to_vec(),
            self.q[r].to_vec(),
        )
    }

    /// Prefix of the series up to and including the last sample at or before `t_end`.
    pub fn truncate_to(&self, t_end: f64) -> Result<Self> {
        let r = self.window_range(&Window {
            t_start: self.t0,
            t_end: t_end.min(self.t_end()),
        })?;
        self.slice(0..r.end.max(2))
    }
}

/// Contiguous sub-series whose sample times lie in the window.
pub fn extract_window(series: &PccTimeSeries, w: &Window) -> Result<PccTimeSeries> {
    let r = series.window_range(w)?;
    if r.len() < 2 {
        return Err(Error::InvalidWindow {
            t_start: w.t_start,
            t_end: w.t_end,
            reason: format!("holds {} sample(s); a series needs at least 2", r.len()),
        });
    }
    series.slice(r)
}

/// Number of samples a window spans at sampling interval `dt`.
pub fn window_samples(w: &Window, dt: f64) -> usize {
    ((w.t_end - w.t_start) / dt + INDEX_SLACK).floor() as usize + 1
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PreprocessConfig {
    /// First-order low-pass corner frequency in Hz.
    pub cutoff_hz: Option<f64>,
    /// Target sampling interval; must be an integer multiple of the input `dt`.
    pub resample_dt: Option<f64>,
}

/// Coefficients of the bilinear (pre-warped) first-order low-pass
/// `y[n] = b (x[n] + x[n-1]) - a y[n-1]`.
fn lowpass_coefficients(cutoff_hz: f64, dt: f64) -> (f64, f64) {
    let k = (PI * cutoff_hz * dt).tan();
    (k / (1.0 + k), (k - 1.0) / (k + 1.0))
}

fn lowpass(x: &[f64], b: f64, a: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    // Start from steady state at the first sample.
    let (mut x_prev, mut y_prev) = (x[0], x[0]);
    for &xn in x {
        let yn = b * (xn + x_prev) - a * y_prev;
        y.push(yn);
        x_prev = xn;
        y_prev = yn;
    }
    y
}

pub fn preprocess(series: &PccTimeSeries, cfg: &PreprocessConfig) -> Result<PccTimeSeries> {
    let mut out = series.clone();
    if let Some(fc) = cfg.cutoff_hz {
        if !(fc > 0.0 && fc.is_finite()) {
            return Err(Error::Config(format!("cutoff_hz must be > 0, got {fc}")));
        }
        let (b, a) = lowpass_coefficients(fc, series.dt);
        out.v_mag = lowpass(&series.v_mag, b, a)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        out.freq = lowpass(&series.freq, b, a);
        out.p = lowpass(&series.p, b, a);
        out.q = lowpass(&series.q, b, a);
    }
    if let Some(rdt) = cfg.resample_dt {
        let ratio = rdt / series.dt;
        let factor = ratio.round();
        if factor < 1.0 || (factor * series.dt - rdt).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "resample_dt {rdt} is not an integer multiple (>= 1) of dt {}",
                series.dt
            )));
        }
        let m = factor as usize;
        if m > 1 {
            let pick = |x: &[f64]| x.iter().step_by(m).copied().collect::<Vec<_>>();
            out = PccTimeSeries::new(
                series.t0,
                series.dt * factor,
                pick(&out.v_mag),
                pick(&out.freq),
                pick(&out.p),
                pick(&out.q),
            )?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    Unit,
    Factor(f64),
}

impl Scale {
    fn apply(self, x: f64) -> f64 {
        match self {
            Scale::Unit => x,
            Scale::Factor(k) => x * k,
        }
    }
}

/// Reads the optional `# units: t=s, v=pu, f=Hz, p=MW, q=MVar` comment.
fn parse_units(path: &Path, text: &str, base: &BaseSystem) -> Result<[Scale; 4]> {
    let mut scales = [Scale::Unit; 4];
    for (i, line) in text.lines().enumerate() {
        let Some(body) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let Some(spec) = body.trim().strip_prefix("units:") else {
            continue;
        };
        for item in spec.split(',') {
            let Some((col, unit)) = item.split_once('=') else {
                continue;
            };
            let (col, unit) = (col.trim(), unit.trim());
            let (slot, scale) = match (col, unit.to_ascii_lowercase().as_str()) {
                ("t", "s") => continue,
                ("v", "pu") => (0, Scale::Unit),
                ("v", "kv") => (0, Scale::Factor(1.0 / base.v_base)),
                ("f", "hz") => (1, Scale::Unit),
                ("f", "pu") => (1, Scale::Factor(base.f_nom)),
                ("p", "mw") => (2, Scale::Unit),
                ("p", "pu") => (2, Scale::Factor(base.s_base)),
                ("q", "mvar") => (3, Scale::Unit),
                ("q", "pu") => (3, Scale::Factor(base.s_base)),
                _ => {
                    return Err(Error::Syntax {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("unsupported unit `{unit}` for column `{col}`"),
                    })
                }
            };
            scales[slot] = scale;
        }
    }
    Ok(scales)
}

/// Loads a PCC CSV with header `t,v,f,p,q` (any column order).
pub fn load_pcc_csv(path: impl AsRef<Path>, base: &BaseSystem) -> Result<PccTimeSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_pcc_csv(path, &text, base)
}

fn parse_pcc_csv(path: &Path, text: &str, base: &BaseSystem) -> Result<PccTimeSeries> {
    let scales = parse_units(path, text, base)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let names = ["t", "v", "f", "p", "q"];
    let idx = [col("t")?, col("v")?, col("f")?, col("p")?, col("q")?];

    let mut cols: [Vec<f64>; 5] = Default::default();
    for (row, rec) in rdr.records().enumerate() {
        let row = row + 1;
        let rec = rec.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            row,
            message: e.to_string(),
        })?;
        for (c, &i) in idx.iter().enumerate() {
            let cell = rec.get(i).unwrap_or("");
            let value: f64 = cell.parse().map_err(|_| Error::BadNumber {
                path: path.to_path_buf(),
                row,
                column: names[c].to_string(),
                text: cell.to_string(),
            })?;
            cols[c].push(value);
        }
    }
    let [t, v, f, p, q] = cols;
    if t.len() < 2 {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            row: t.len(),
            message: format!("at least 2 data rows required, found {}", t.len()),
        });
    }
    let dt = t[1] - t[0];
    if !(dt > 0.0) {
        return Err(Error::NonUniformSpacing {
            path: path.to_path_buf(),
            row: 2,
            expected: dt,
            got: dt,
        });
    }
    for k in 2..t.len() {
        let step = t[k] - t[k - 1];
        if (step - dt).abs() > SPACING_TOL * dt {
            return Err(Error::NonUniformSpacing {
                path: path.to_path_buf(),
                row: k + 1,
                expected: dt,
                got: step,
            });
        }
    }
    // The whole span gives a less rounding-prone interval than the first pair.
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    let conv = |s: Scale, x: Vec<f64>| x.into_iter().map(|x| s.apply(x)).collect::<Vec<_>>();
    PccTimeSeries::new(
        t[0],
        dt,
        conv(scales[0], v),
        conv(scales[1], f),
        conv(scales[2], p),
        conv(scales[3], q),
    )
}

pub fn pcc_csv_string(series: &PccTimeSeries) -> String {
    let mut out = String::with_capacity(series.len() * 48);
    out.push_str("# units: t=s, v=pu, f=Hz, p=MW, q=MVar\n");
    out.push_str("t,v,f,p,q\n");
    for k in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            series.time(k),
            series.v_mag[k],
            series.freq[k],
            series.p[k],
            series.q[k]
        );
    }
    out
}

pub fn save_pcc_csv(series: &PccTimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, pcc_csv_string(series)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<PccTimeSeries> {
        parse_pcc_csv(Path::new("mem.csv"), text, &BaseSystem::default())
    }

    fn uniform(t0: f64, dt: f64, n: usize) -> PccTimeSeries {
        let v = (0..n).map(|k| 1.0 + 0.01 * (k as f64).sin()).collect();
        PccTimeSeries::new(t0, dt, v, vec![60.0; n], vec![5.0; n], vec![3.0; n]).unwrap()
    }

    #[test]
    fn minimal_file() {
        let s = parse("t,v,f,p,q\n0,1,60,5,3\n0.01,1,60,5,3\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dt(), 0.01);
        assert_eq!(s.p(), &[5.0, 5.0]);
    }

    #[test]
    fn non_uniform_spacing_names_row() {
        let err = parse("t,v,f,p,q\n0,1,60,5,3\n0.01,1,60,5,3\n0.03,1,60,5,3\n").unwrap_err();
        match err {
            Error::NonUniformSpacing { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn column_and_cell_errors() {
        assert!(matches!(
            parse("t,v,f,p\n0,1,60,5\n0.01,1,60,5\n"),
            Err(Error::MissingColumn { column, .. }) if column == "q"
        ));
        assert!(matches!(
            parse("t,v,f,p,q\n0,1,60,5,3\n0.01,1,x,5,3\n"),
            Err(Error::BadNumber { row: 2, column, .. }) if column == "f"
        ));
        assert!(parse("t,v,f,p,q\n0,1,60,5,3\n").is_err());
    }

    #[test]
    fn units_comment_converts() {
        let s = parse("# units: t=s, v=kV, f=Hz, p=pu, q=pu\nt,v,f,p,q\n0,13.8,60,0.5,0.3\n1,13.8,60,0.5,0.3\n")
            .unwrap();
        assert!((s.v_mag()[0] - 1.0).abs() < 1e-15);
        assert_eq!(s.p()[0], 5.0);
        assert_eq!(s.q()[1], 3.0);
    }

    #[test]
    fn ten_ms_over_nine_to_fourteen_has_501_samples() {
        let s = uniform(9.0, 0.01, 501);
        let text = pcc_csv_string(&s);
        let back = parse(&text).unwrap();
        assert_eq!(back.len(), 501);
        assert!((back.t_end() - 14.0).abs() < 1e-12);
    }

    #[test]
    fn window_counts() {
        let s = uniform(9.0, 0.01, 501);
        let w = extract_window(&s, &Window::new(9.0, 9.99).unwrap()).unwrap();
        assert_eq!(w.len(), 100);
        let w = extract_window(&s, &Window::new(10.0, 14.0).unwrap()).unwrap();
        assert_eq!(w.len(), 401);
        assert_eq!(window_samples(&Window::new(10.0, 14.0).unwrap(), 0.01), 401);
        assert_eq!(window_samples(&Window::new(9.0, 9.99).unwrap(), 0.01), 100);
        assert_eq!(extract_window(&s, &s.span()).unwrap(), s);
    }

    #[test]
    fn window_errors() {
        let s = uniform(9.0, 0.01, 501);
        assert!(extract_window(&s, &Window::new(8.0, 9.5).unwrap()).is_err());
        assert!(extract_window(&s, &Window::new(9.001, 9.009).unwrap()).is_err());
        assert!(Window::new(2.0, 1.0).is_err());
        assert!(Window::parse("9:9.99").is_ok());
        assert!(Window::parse("9-10").is_err());
    }

    #[test]
    fn constant_series_survives_lowpass() {
        let n = 200;
        let s = PccTimeSeries::new(0.0, 0.01, vec![0.97; n], vec![59.9; n], vec![2.5; n], vec![-1.25; n])
            .unwrap();
        let out = preprocess(
            &s,
            &PreprocessConfig {
                cutoff_hz: Some(3.7),
                resample_dt: None,
            },
        )
        .unwrap();
        for k in 0..n {
            assert!((out.v_mag()[k] - 0.97).abs() < 1e-12);
            assert!((out.freq()[k] - 59.9).abs() < 1e-12);
            assert!((out.p()[k] - 2.5).abs() < 1e-12);
            assert!((out.q()[k] + 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn step_response_matches_hand_coded_filter() {
        // Oracle: the textbook bilinear transform of 1/(1 + s/wc) with
        // frequency pre-warping, written out directly.
        let (dt, fc) = (0.01, 5.0);
        let wc = 2.0 * PI * fc;
        let c = wc / (wc * dt / 2.0).tan(); // pre-warped 2/T
        let b0 = wc / (c + wc);
        let a1 = (wc - c) / (c + wc);
        let x: Vec<f64> = (0..20).map(|k| if k >= 5 { 1.0 } else { 0.0 }).collect();
        let mut y_ref = vec![0.0; x.len()];
        for k in 1..x.len() {
            y_ref[k] = b0 * (x[k] + x[k - 1]) - a1 * y_ref[k - 1];
        }
        let n = x.len();
        let s = PccTimeSeries::new(0.0, dt, x.clone(), vec![60.0; n], x.clone(), x.clone()).unwrap();
        let out = preprocess(
            &s,
            &PreprocessConfig {
                cutoff_hz: Some(fc),
                resample_dt: None,
            },
        )
        .unwrap();
        assert!((out.p()[5] - y_ref[5]).abs() < 1e-14);
        assert!((out.p()[6] - y_ref[6]).abs() < 1e-14);
        for k in 0..n {
            assert!((out.v_mag()[k] - y_ref[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn decimation() {
        let s = uniform(9.0, 0.01, 501);
        let out = preprocess(
            &s,
            &PreprocessConfig {
                cutoff_hz: None,
                resample_dt: Some(0.05),
            },
        )
        .unwrap();
        assert_eq!(out.len(), 101);
        assert_eq!(out.t0(), 9.0);
        assert_eq!(out.v_mag()[1], s.v_mag()[5]);
        assert!(preprocess(
            &s,
            &PreprocessConfig {
                cutoff_hz: None,
                resample_dt: Some(0.015),
            },
        )
        .is_err());
    }

    fn arb_series() -> impl Strategy<Value = PccTimeSeries> {
        (2usize..200, 1e-4f64..1.0, -100.0f64..100.0).prop_flat_map(|(n, dt, t0)| {
            (
                proptest::collection::vec(0.0f64..2.0, n),
                proptest::collection::vec(40.0f64..70.0, n),
                proptest::collection::vec(-50.0f64..50.0, n),
                proptest::collection::vec(-50.0f64..50.0, n),
            )
                .prop_map(move |(v, f, p, q)| PccTimeSeries::new(t0, dt, v, f, p, q).unwrap())
        })
    }

    proptest! {
        #[test]
        fn identity_preprocess_is_noop(s in arb_series()) {
            let out = preprocess(&s, &PreprocessConfig::default()).unwrap();
            prop_assert_eq!(out, s);
        }

        #[test]
        fn adjacent_windows_partition(s in arb_series(), cut in 0.05f64..0.95) {
            let span = s.span();
            let k = ((s.len() - 1) as f64 * cut) as usize;
            let a = s.window_range(&Window { t_start: span.t_start, t_end: s.time(k) }).unwrap();
            let b = s.window_range(&Window { t_start: s.time(k) + 0.5 * s.dt(), t_end: span.t_end }).unwrap();
            prop_assert_eq!(a.start, 0);
            prop_assert_eq!(a.end, b.start);
            prop_assert_eq!(b.end, s.len());
        }
    }
}
