use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Relative residual change dropped below the tolerance.
    Tolerance,
    MaxIterations,
    /// The residual stopped decreasing; the last non-improving sweep was discarded.
    Stall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    pub relative_error: f64,
}

/// Per-sweep residual history of an iterative decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTrace {
    /// `||T - T̂||_F` after every refinement sweep.
    pub residuals: Vec<f64>,
    pub stage_errors: Vec<StageError>,
    pub iterations: usize,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub norm: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DecompositionTrace {
    pub(crate) fn new(norm: f64) -> Self {
        Self {
            residuals: Vec::new(),
            stage_errors: Vec::new(),
            iterations: 0,
            converged: false,
            stop_reason: StopReason::MaxIterations,
            norm,
            warnings: Vec::new(),
        }
    }

    pub(crate) fn push_stage(&mut self, stage: &str, relative_error: f64) {
        self.stage_errors.push(StageError {
            stage: stage.to_owned(),
            relative_error,
        });
    }

    pub(crate) fn push_residual(&mut self, residual: f64) {
        self.residuals.push(residual);
        self.iterations = self.residuals.len();
    }

    pub(crate) fn finish(&mut self, reason: StopReason) {
        self.stop_reason = reason;
        self.converged = reason != StopReason::MaxIterations;
    }

    /// Final `||T - T̂|| / ||T||`, or `None` before the first sweep.
    pub fn final_relative_error(&self) -> Option<f64> {
        self.residuals.last().map(|r| r / self.norm)
    }

    pub fn stage(&self, name: &str) -> Option<f64> {
        self.stage_errors
            .iter()
            .find(|s| s.stage == name)
            .map(|s| s.relative_error)
    }

    /// Count of sweeps whose residual rose by more than `slack * ||T||`.
    pub fn monotonicity_violations(&self, slack: f64) -> usize {
        self.residuals
            .windows(2)
            .filter(|w| w[1] > w[0] + slack * self.norm)
            .count()
    }
}

/// Convergence bookkeeping shared by the ALS-type loops.
pub(crate) enum Step {
    Continue,
    Stop(StopReason),
    /// Reject the latest iterate and stop.
    Reject,
}

/// Decides what to do after a sweep that produced `residual`, given the
/// previous residual.
pub(crate) fn check_step(previous: f64, residual: f64, norm: f64, tolerance: f64) -> Step {
    if residual > previous + 1e-12 * norm {
        return Step::Reject;
    }
    if (previous - residual).abs() / norm < tolerance {
        return Step::Stop(StopReason::Tolerance);
    }
    Step::Continue
}
