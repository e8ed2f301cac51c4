//! Named parameter vector of the equivalent model.
//!
//! Every parameter carries its value in file units (MW, MVar, MVA, pu on the
//! component rating, s), a search interval and a free/fixed flag. Values
//! not given in a parameter file take the defaults listed in [`CATALOG`].
//!
//! File syntax is flat `name = value` pairs with `#` comments. Search bounds
//! and the free flag can be overridden with `name.min`, `name.max` and
//! `name.free` keys.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Hard physical constraint checked on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Positive,
    NonNegative,
    Any,
}

impl Rule {
    fn holds(self, x: f64) -> bool {
        x.is_finite()
            && match self {
                Rule::Positive => x > 0.0,
                Rule::NonNegative => x >= 0.0,
                Rule::Any => true,
            }
    }

    fn describe(self) -> &'static str {
        match self {
            Rule::Positive => "must be > 0",
            Rule::NonNegative => "must be >= 0",
            Rule::Any => "must be finite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    SyncGen,
    Avr,
    Governor,
    Converter,
    StaticLoad,
    Motor,
}

#[derive(Debug, Clone, Copy)]
pub struct ParamDef {
    pub name: &'static str,
    pub unit: &'static str,
    pub default: f64,
    pub lower: f64,
    pub upper: f64,
    pub rule: Rule,
    pub group: Group,
    pub free: bool,
}

const fn def(
    name: &'static str,
    unit: &'static str,
    default: f64,
    lower: f64,
    upper: f64,
    rule: Rule,
    group: Group,
    free: bool,
) -> ParamDef {
    ParamDef {
        name,
        unit,
        default,
        lower,
        upper,
        rule,
        group,
        free,
    }
}

use Group::*;
use Rule::*;

/// Canonical parameters. Defaults of the estimated set are the fitted
/// equivalent reported for the reference microgrid; search intervals are
/// the typical ranges (machines and converter controls) and the load-power
/// search region. Everything else is a fixed auxiliary.
pub const CATALOG: &[ParamDef] = &[
    // synchronous generator, two-axis model
    def("x_d", "pu", 2.633, 0.5, 3.0, Positive, SyncGen, true),
    def("x_dp", "pu", 0.282, 0.05, 0.5, Positive, SyncGen, true),
    def("x_q", "pu", 1.600, 0.5, 3.0, Positive, SyncGen, true),
    def("x_qp", "pu", 0.964, 0.3, 1.0, Positive, SyncGen, true),
    def("T_do_p", "s", 6.76, 0.5, 8.0, Positive, SyncGen, true),
    def("T_q_p", "s", 0.914, 0.5, 2.0, Positive, SyncGen, true),
    def("H", "s", 3.108, 0.01, 5.0, Positive, SyncGen, true),
    // subtransient data: accepted, not used by the two-axis model
    def("x_dpp", "pu", 0.2, 0.1, 0.3, Positive, SyncGen, false),
    def("x_qpp", "pu", 0.25, 0.1, 0.4, Positive, SyncGen, false),
    def("x_l", "pu", 0.15, 0.05, 0.3, Positive, SyncGen, false),
    def("T_do_pp", "s", 0.03, 0.01, 0.1, Positive, SyncGen, false),
    def("T_q_pp", "s", 0.05, 0.01, 0.2, Positive, SyncGen, false),
    def("S_sg", "MVA", 8.8, 1.0, 20.0, NonNegative, SyncGen, false),
    def("P_sg", "MW", 3.0, 0.0, 8.8, Any, SyncGen, false),
    def("D_sg", "pu", 2.0, 0.0, 10.0, NonNegative, SyncGen, false),
    // ST1A-type static exciter
    def("K_a", "pu", 177.995, 50.0, 400.0, Positive, Avr, true),
    def("T_a", "s", 0.001, 0.0001, 0.01, Positive, Avr, false),
    def("V_ref", "pu", 1.007347, 0.9, 1.2, Positive, Avr, false),
    def("E_fd_max", "pu", 6.0, 1.0, 10.0, Any, Avr, false),
    def("E_fd_min", "pu", -6.0, -10.0, 0.0, Any, Avr, false),
    // droop governor
    def("R_droop", "pu", 0.05, 0.01, 0.1, Positive, Governor, false),
    def("T_gov", "s", 0.5, 0.05, 2.0, Positive, Governor, false),
    // grid-following converter
    def("S_vsc", "MVA", 3.027, 2.4, 3.6, NonNegative, Converter, true),
    def("K_pvdc", "pu", 1.636, 0.1, 2.0, Positive, Converter, true),
    def("K_ivdc", "1/s", 457.07, 20.0, 500.0, Positive, Converter, true),
    def("V_dc_nom", "pu", 1.0, 0.8, 1.2, Positive, Converter, false),
    def("C_dc", "s", 0.02, 0.005, 0.1, Positive, Converter, false),
    def("P_source", "pu", 0.3, 0.0, 1.0, NonNegative, Converter, false),
    def("I_max", "pu", 1.2, 1.0, 2.0, Positive, Converter, false),
    // ZIP static load
    def("P_z", "MW", 1.154, 1.0, 3.0, Any, StaticLoad, true),
    def("P_i", "MW", 1.512, 1.0, 3.0, Any, StaticLoad, true),
    def("P_p", "MW", 2.536, 1.0, 3.0, Any, StaticLoad, true),
    def("Q_z", "MVar", 1.327, 0.2, 2.0, Any, StaticLoad, true),
    def("Q_i", "MVar", 1.517, 0.2, 2.0, Any, StaticLoad, true),
    def("Q_p", "MVar", 0.978, 0.2, 2.0, Any, StaticLoad, true),
    def("V_0", "pu", 1.0, 0.9, 1.1, Positive, StaticLoad, false),
    // induction motor, third-order transient model
    def("S_m", "MVA", 1.152, 0.5, 1.5, NonNegative, Motor, true),
    def("H_m", "s", 0.550, 0.1, 1.5, Positive, Motor, true),
    def("X_m", "pu", 2.001, 1.0, 4.0, Positive, Motor, true),
    def("R_s", "pu", 0.01, 0.001, 0.1, Positive, Motor, false),
    def("X_s", "pu", 0.1, 0.01, 0.3, Positive, Motor, false),
    def("R_r", "pu", 0.01, 0.001, 0.1, Positive, Motor, false),
    def("X_r", "pu", 0.1, 0.01, 0.3, Positive, Motor, false),
    def("T_load", "pu", 0.6, 0.0, 1.0, NonNegative, Motor, false),
    def("Load_exp", "", 2.0, 0.0, 3.0, NonNegative, Motor, false),
];

/// The 20 parameters identified for the equivalent.
pub const ESTIMATED: [&str; 20] = [
    "x_d", "x_q", "x_dp", "x_qp", "T_do_p", "T_q_p", "H", "K_a", "S_vsc", "K_ivdc", "K_pvdc",
    "P_p", "Q_p", "P_i", "Q_i", "P_z", "Q_z", "S_m", "H_m", "X_m",
];

/// First-stage (pre-disturbance) parameter group.
pub const STAGE1: [&str; 11] = [
    "P_p", "Q_p", "P_i", "Q_i", "P_z", "Q_z", "S_m", "S_vsc", "x_d", "x_q", "T_do_p",
];

/// Generator parameters of a seventh-order data set, ranked together.
pub const SG_EXTENDED: [&str; 12] = [
    "x_d", "x_dp", "x_dpp", "x_q", "x_qp", "x_qpp", "x_l", "T_do_p", "T_do_pp", "T_q_pp",
    "T_q_p", "H",
];

pub fn lookup(name: &str) -> Option<(usize, &'static ParamDef)> {
    CATALOG.iter().enumerate().find(|(_, d)| d.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: &'static str,
    pub unit: &'static str,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    params: Vec<Parameter>,
}

impl Default for ParameterSet {
    fn default() -> Self {
        Self {
            params: CATALOG
                .iter()
                .map(|d| Parameter {
                    name: d.name,
                    unit: d.unit,
                    value: d.default,
                    lower: d.lower,
                    upper: d.upper,
                    free: d.free,
                })
                .collect(),
        }
    }
}

impl ParameterSet {
    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    fn index(&self, name: &str) -> Result<usize> {
        lookup(name)
            .map(|(i, _)| i)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Result<&Parameter> {
        Ok(&self.params[self.index(name)?])
    }

    /// Value of a canonical parameter. Panics on names outside [`CATALOG`].
    pub fn value(&self, name: &str) -> f64 {
        match lookup(name) {
            Some((i, _)) => self.params[i].value,
            None => panic!("`{name}` is not a canonical parameter"),
        }
    }

    /// Sets a value without bound checks (search candidates, perturbations).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = self.index(name)?;
        self.params[i].value = value;
        Ok(())
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value).expect("canonical parameter");
        self
    }

    pub fn set_bounds(&mut self, name: &str, lower: f64, upper: f64) -> Result<()> {
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(Error::Config(format!(
                "bad bounds [{lower}, {upper}] for `{name}`"
            )));
        }
        let i = self.index(name)?;
        self.params[i].lower = lower;
        self.params[i].upper = upper;
        Ok(())
    }

    pub fn set_free(&mut self, name: &str, free: bool) -> Result<()> {
        let i = self.index(name)?;
        self.params[i].free = free;
        Ok(())
    }

    /// Marks exactly `names` free and everything else fixed.
    pub fn free_only<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        let wanted: BTreeSet<&str> = names.iter().map(|s| s.as_ref()).collect();
        for n in &wanted {
            self.index(n)?;
        }
        for p in &mut self.params {
            p.free = wanted.contains(p.name);
        }
        Ok(())
    }

    pub fn free_names(&self) -> Vec<&'static str> {
        self.params.iter().filter(|p| p.free).map(|p| p.name).collect()
    }

    pub fn group(name: &str) -> Option<Group> {
        lookup(name).map(|(_, d)| d.group)
    }

    /// Checks every hard physical constraint.
    pub fn validate(&self) -> Result<()> {
        for (p, d) in self.params.iter().zip(CATALOG) {
            if !d.rule.holds(p.value) {
                return Err(Error::PhysicalBound {
                    name: p.name.to_string(),
                    value: p.value,
                    rule: d.rule.describe(),
                });
            }
        }
        let pairs: [(&str, &str, bool, &'static str); 4] = [
            ("x_d", "x_dp", true, "x_d > x_dp"),
            ("x_q", "x_qp", false, "x_q >= x_qp"),
            ("X_m", "X_s", true, "X_m > X_s"),
            ("E_fd_max", "E_fd_min", true, "E_fd_max > E_fd_min"),
        ];
        for (a, b, strict, rule) in pairs {
            let (va, vb) = (self.value(a), self.value(b));
            if (strict && va <= vb) || (!strict && va < vb) {
                return Err(Error::PhysicalBound {
                    name: a.to_string(),
                    value: va,
                    rule,
                });
            }
        }
        Ok(())
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut set = ParameterSet::default();
        let syntax = |line: usize, message: String| Error::Syntax {
            path: path.to_path_buf(),
            line,
            message,
        };
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, val) = line
                .split_once('=')
                .ok_or_else(|| syntax(i + 1, format!("expected `name = value`, got `{line}`")))?;
            let (key, val) = (key.trim(), val.trim());
            let (name, field) = match key.split_once('.') {
                Some((n, f)) => (n, Some(f)),
                None => (key, None),
            };
            let idx = set.index(name)?;
            let number = || {
                val.parse::<f64>()
                    .map_err(|_| syntax(i + 1, format!("`{val}` is not a number")))
            };
            match field {
                None => set.params[idx].value = number()?,
                Some("min") => set.params[idx].lower = number()?,
                Some("max") => set.params[idx].upper = number()?,
                Some("free") => {
                    set.params[idx].free = match val {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(syntax(i + 1, format!("`{val}` is not a boolean"))),
                    }
                }
                Some(other) => return Err(Error::UnknownParameter(format!("{name}.{other}"))),
            }
        }
        set.validate()?;
        for p in &set.params {
            if !(p.lower.is_finite() && p.upper.is_finite() && p.lower <= p.upper) {
                return Err(Error::Config(format!(
                    "bad bounds [{}, {}] for `{}`",
                    p.lower, p.upper, p.name
                )));
            }
        }
        Ok(set)
    }

    /// Canonical text form; bounds and flags are written only where they
    /// differ from the defaults.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# equivalent-model parameter set\n");
        for (p, d) in self.params.iter().zip(CATALOG) {
            let unit = if p.unit.is_empty() {
                String::new()
            } else {
                format!("  # {}", p.unit)
            };
            let _ = writeln!(out, "{} = {:?}{}", p.name, p.value, unit);
            if p.lower.to_bits() != d.lower.to_bits() {
                let _ = writeln!(out, "{}.min = {:?}", p.name, p.lower);
            }
            if p.upper.to_bits() != d.upper.to_bits() {
                let _ = writeln!(out, "{}.max = {:?}", p.name, p.upper);
            }
            if p.free != d.free {
                let _ = writeln!(out, "{}.free = {}", p.name, p.free);
            }
        }
        out
    }
}

pub fn load_parameter_set(path: impl AsRef<Path>) -> Result<ParameterSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ParameterSet::parse(path, &text)
}

pub fn save_parameter_set(set: &ParameterSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, set.to_text()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<ParameterSet> {
        ParameterSet::parse(Path::new("mem.params"), text)
    }

    #[test]
    fn catalog_names_are_unique_and_defaults_within_bounds() {
        let mut seen = BTreeSet::new();
        for d in CATALOG {
            assert!(seen.insert(d.name), "duplicate {}", d.name);
            assert!(d.lower <= d.default && d.default <= d.upper, "{}", d.name);
        }
        for n in ESTIMATED.iter().chain(&STAGE1).chain(&SG_EXTENDED) {
            assert!(lookup(n).is_some(), "{n}");
        }
        assert_eq!(ParameterSet::default().free_names().len(), 20);
    }

    #[test]
    fn reference_values_parse() {
        let text = "x_d = 2.633\nx_dp = 0.282\nx_q = 1.600\nx_qp = 0.964\nT_do_p = 6.76\n\
                    T_q_p = 0.914\nH = 3.108\nK_a = 177.995\nS_m = 1.152\nH_m = 0.550\n\
                    X_m = 2.001\nP_p = 2.536\nQ_p = 0.978\nP_i = 1.512\nQ_i = 1.517\n\
                    P_z = 1.154\nQ_z = 1.327\nS_vsc = 3.027\nK_pvdc = 1.636\nK_ivdc = 457.07\n";
        let s = parse(text).unwrap();
        assert_eq!(s.value("x_d"), 2.633);
        assert_eq!(s.value("H"), 3.108);
        assert_eq!(s.value("K_a"), 177.995);
        assert_eq!(s, ParameterSet::default());
    }

    #[test]
    fn empty_file_gives_defaults_and_round_trips() {
        let s = parse("").unwrap();
        assert_eq!(s, ParameterSet::default());
        assert_eq!(parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn negative_inertia_is_rejected() {
        match parse("H = -1\n").unwrap_err() {
            Error::PhysicalBound { name, .. } => assert_eq!(name, "H"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_key_and_syntax() {
        assert!(matches!(parse("foo = 1"), Err(Error::UnknownParameter(_))));
        assert!(matches!(parse("x_d 2"), Err(Error::Syntax { line: 1, .. })));
        assert!(matches!(parse("x_d.bogus = 2"), Err(Error::UnknownParameter(_))));
        assert!(matches!(parse("x_dp = 3.0\n"), Err(Error::PhysicalBound { .. })));
    }

    #[test]
    fn comments_and_overrides() {
        let s = parse("# header\nH = 2.5 # s\nH.min = 1\nH.max = 4\nH.free = false\n").unwrap();
        let h = s.get("H").unwrap();
        assert_eq!((h.value, h.lower, h.upper, h.free), (2.5, 1.0, 4.0, false));
        assert_eq!(parse(&s.to_text()).unwrap(), s);
    }

    proptest! {
        #[test]
        fn save_load_round_trip_is_bit_exact(
            idx in proptest::collection::vec(0usize..CATALOG.len(), 1..10),
            scale in proptest::collection::vec(0.5f64..1.5, 10),
            flips in proptest::collection::vec(any::<bool>(), 10),
        ) {
            let mut s = ParameterSet::default();
            for (k, &i) in idx.iter().enumerate() {
                let d = &CATALOG[i];
                let v = d.default * scale[k];
                s.set(d.name, v).unwrap();
                s.set_bounds(d.name, v.min(d.lower) - 0.1, v.max(d.upper) * 1.1 + 0.1).unwrap();
                s.set_free(d.name, flips[k]).unwrap();
            }
            if s.validate().is_ok() {
                let back = parse(&s.to_text()).unwrap();
                for (a, b) in back.iter().zip(s.iter()) {
                    prop_assert_eq!(a.value.to_bits(), b.value.to_bits());
                    prop_assert_eq!(a.lower.to_bits(), b.lower.to_bits());
                    prop_assert_eq!(a.upper.to_bits(), b.upper.to_bits());
                    prop_assert_eq!(a.free, b.free);
                }
            }
        }
    }
}
