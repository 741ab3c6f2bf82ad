//! Outcome records shared by every check in the crate.

use crate::CVec;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Linear,
    Nonlinear,
    Inconclusive,
    Orthogonal,
    NotOrthogonal,
    Norm,
    SemiNorm,
    Violation,
    Strict,
    G1,
    G2,
    NotContraction,
    Subspace,
    NotSubspace,
}

impl Verdict {
    /// Verdicts that must come with a reproducing witness.
    pub fn needs_witness(self) -> bool {
        matches!(self, Verdict::Violation | Verdict::Nonlinear | Verdict::NotOrthogonal | Verdict::Fail)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    /// The measured quantity: a defect, margin, residual or minimum.
    #[serde(rename = "defect")]
    pub value: f64,
    #[serde(rename = "witness", with = "crate::serde_util::cvec_list")]
    pub witnesses: Vec<CVec>,
    #[serde(default)]
    pub residuals: Vec<f64>,
    pub seed: u64,
    pub trials: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, f64>,
}

impl Certificate {
    pub fn new(verdict: Verdict, value: f64, seed: u64, trials: usize) -> Self {
        Certificate { verdict, value, witnesses: Vec::new(), residuals: Vec::new(), seed, trials, notes: BTreeMap::new() }
    }

    pub fn with_witness(mut self, w: CVec) -> Self {
        self.witnesses.push(w);
        self
    }

    pub fn with_note(mut self, key: &str, value: f64) -> Self {
        self.notes.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        !matches!(
            self.verdict,
            Verdict::Fail | Verdict::Violation | Verdict::Nonlinear | Verdict::NotOrthogonal | Verdict::NotContraction
        )
    }
}

/// Map a defect onto the three-way linearity verdict.
pub fn linearity_verdict(defect: f64, linear_below: f64, nonlinear_above: f64) -> Verdict {
    if defect < linear_below {
        Verdict::Linear
    } else if defect > nonlinear_above {
        Verdict::Nonlinear
    } else {
        Verdict::Inconclusive
    }
}
