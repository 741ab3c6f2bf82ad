//! Gallery of worked examples, verification suites and report plumbing behind
//! the `lab` binary.

pub mod error;
pub mod gallery;
pub mod report;
pub mod suites;
pub mod tools;

pub use error::CliError;
pub use report::{Assertion, Checks, Report};

/// Run options shared by examples and suites.
#[derive(Clone, Debug)]
pub struct Ctx {
    pub seed: u64,
    /// Multiplies residual tolerances; violation thresholds ignore it.
    pub tol_scale: f64,
    pub horizon: Option<usize>,
    pub window: Option<usize>,
    /// Inject a fault into the dilation suite.
    pub corrupt: bool,
}

impl Default for Ctx {
    fn default() -> Self {
        Ctx { seed: 1, tol_scale: 1.0, horizon: None, window: None, corrupt: false }
    }
}

impl Ctx {
    pub fn with_seed(seed: u64) -> Ctx {
        Ctx { seed, ..Ctx::default() }
    }

    pub fn checks(&self) -> Checks {
        Checks::new(self.tol_scale)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.tol_scale.is_finite() && self.tol_scale > 0.0) {
            return Err(CliError::Input(format!("tol-scale must be positive, got {}", self.tol_scale)));
        }
        Ok(())
    }
}
