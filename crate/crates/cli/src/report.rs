//! Reports, assertion rows and their JSON/CSV forms.

use crate::error::CliError;
use dilation_lab::{CVec, Verdict};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    /// Witness vectors as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub witness: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub id: String,
    pub kind: String,
    pub seed: u64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
    /// Name of the first failed assertion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_failure: Option<String>,
    pub assertions: Vec<Assertion>,
    /// Wall-clock seconds per stage. Suites leave this empty so that reports
    /// are reproducible byte for byte.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(id: &str, kind: &str, seed: u64, assertions: Vec<Assertion>) -> Report {
        let first_failure = assertions.iter().find(|a| !a.pass).map(|a| a.name.clone());
        Report {
            id: id.into(),
            kind: kind.into(),
            seed,
            pass: first_failure.is_none(),
            anchor: None,
            first_failure,
            assertions,
            timings: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Report, CliError> {
        Ok(serde_json::from_str(s)?)
    }

    /// One row per assertion; nested suite ids are kept in the assertion name.
    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["id", "assertion", "value", "tolerance", "pass"])?;
        for a in &self.assertions {
            w.write_record([
                self.id.as_str(),
                a.name.as_str(),
                &a.value.to_string(),
                &a.tolerance.to_string(),
                if a.pass { "true" } else { "false" },
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Short diff line for a failed run.
    pub fn failure_line(&self) -> Option<String> {
        let a = self.assertions.iter().find(|a| !a.pass)?;
        let mut s = format!("{}: first failed assertion `{}` (value {}, tolerance {})", self.id, a.name, a.value, a.tolerance);
        if !a.detail.is_empty() {
            s.push_str(&format!(": {}", a.detail));
        }
        Some(s)
    }
}

fn pairs(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Collects assertion rows. Tolerance-type checks are multiplied by the
/// scale; sign and threshold checks for violations never are.
#[derive(Debug)]
pub struct Checks {
    scale: f64,
    prefix: String,
    pub rows: Vec<Assertion>,
}

impl Checks {
    pub fn new(scale: f64) -> Checks {
        Checks { scale, prefix: String::new(), rows: Vec::new() }
    }

    /// Prefix subsequent assertion names with `p/`.
    pub fn scope(&mut self, p: &str) {
        self.prefix = if p.is_empty() { String::new() } else { format!("{p}/") };
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, pass: bool, mut detail: String) -> &mut Assertion {
        // JSON has no NaN or infinity; keep the row but fail it.
        let (value, pass) = if value.is_finite() {
            (value, pass)
        } else {
            detail = format!("non-finite value {value}; {detail}");
            (f64::MAX, false)
        };
        self.rows.push(Assertion {
            name: format!("{}{name}", self.prefix),
            value,
            tolerance,
            pass,
            detail,
            witness: Vec::new(),
        });
        self.rows.last_mut().expect("pushed")
    }

    /// `|value - target| <= tol * scale`.
    pub fn near(&mut self, name: &str, value: f64, target: f64, tol: f64) -> &mut Assertion {
        let t = tol * self.scale;
        let pass = (value - target).abs() <= t;
        self.push(name, value, t, pass, format!("target {target}"))
    }

    /// `value <= tol * scale` for residuals and defects.
    pub fn small(&mut self, name: &str, value: f64, tol: f64) -> &mut Assertion {
        let t = tol * self.scale;
        self.push(name, value, t, value <= t, String::new())
    }

    /// `value < bound`, unscaled.
    pub fn below(&mut self, name: &str, value: f64, bound: f64) -> &mut Assertion {
        self.push(name, value, bound, value < bound, "strictly below".into())
    }

    /// `value > bound`, unscaled.
    pub fn above(&mut self, name: &str, value: f64, bound: f64) -> &mut Assertion {
        self.push(name, value, bound, value > bound, "strictly above".into())
    }

    pub fn holds(&mut self, name: &str, ok: bool, detail: impl Into<String>) -> &mut Assertion {
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, ok, detail.into())
    }

    pub fn verdict(&mut self, name: &str, got: Verdict, want: Verdict) -> &mut Assertion {
        let ok = got == want;
        self.push(name, if ok { 1.0 } else { 0.0 }, 1.0, ok, format!("got {}, want {}", tag(got), tag(want)))
    }

    pub fn equal(&mut self, name: &str, got: usize, want: usize) -> &mut Assertion {
        self.push(name, got as f64, want as f64, got == want, format!("want {want}"))
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|a| a.pass)
    }
}

impl Assertion {
    pub fn with_witness(&mut self, ws: &[CVec]) -> &mut Assertion {
        self.witness = ws.iter().map(pairs).collect();
        self
    }
}

fn tag(v: Verdict) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_else(|| format!("{v:?}"))
}

/// Directory holding the last report: `$LAB_STATE_DIR` or `.lab`.
pub fn state_dir() -> PathBuf {
    std::env::var_os("LAB_STATE_DIR").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".lab"))
}

pub fn save_last(dir: &Path, r: &Report) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let p = dir.join("last_report.json");
    std::fs::write(&p, r.to_json()?).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

pub fn load_last(dir: &Path) -> Result<Report, CliError> {
    let p = dir.join("last_report.json");
    let s = std::fs::read_to_string(&p).map_err(|_| CliError::NoPriorRun(p.display().to_string()))?;
    Report::from_json(&s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

pub fn render(r: &Report, f: Format) -> Result<String, CliError> {
    match f {
        Format::Json => r.to_json(),
        Format::Csv => r.to_csv(),
    }
}

/// Write to `path`, or stdout when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
                _ => Ok(()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dilation_lab::spaces::real_vec;

    #[test]
    fn scaling_only_touches_tolerances() {
        let mut c = Checks::new(10.0);
        assert!(c.small("r", 5e-10, 1e-10).pass);
        assert!(!c.below("margin", 0.0, 0.0).pass);
        assert!(c.near("m", 1.0 + 5e-9, 1.0, 1e-9).pass);
        assert_eq!(c.rows[1].tolerance, 0.0);
    }

    #[test]
    fn first_failure_and_diff() {
        let mut c = Checks::new(1.0);
        c.holds("a", true, "");
        c.small("b", 1.0, 0.5).with_witness(&[real_vec(&[1.0, -2.0])]);
        c.small("c", 2.0, 0.5);
        let r = Report::new("x", "example", 1, c.rows);
        assert!(!r.pass);
        assert_eq!(r.first_failure.as_deref(), Some("b"));
        assert!(r.failure_line().unwrap().contains("`b`"));
        assert_eq!(r.assertions[1].witness, vec![vec![[1.0, 0.0], [-2.0, 0.0]]]);
    }
}
