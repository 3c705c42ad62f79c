use thiserror::Error;

use crate::solver::SimulationResult;

/// A single problem found while validating a gradient schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleIssue {
    /// Index of the offending event in the schedule as supplied, if the
    /// problem belongs to one event.
    pub event: Option<usize>,
    pub reason: String,
}

impl std::fmt::Display for ScheduleIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.event {
            Some(i) => write!(f, "event {i}: {}", self.reason),
            None => write!(f, "{}", self.reason),
        }
    }
}

#[derive(Debug, Error)]
pub enum GemError {
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric divergence at t = {t_us} us, first non-finite entry at index {index}")]
    Divergence { t_us: f64, index: usize },

    /// The run stopped early; `partial` holds everything recorded up to the
    /// last good step.
    #[error("run diverged after t = {last_good_t_us} us (index {index})")]
    RunDiverged {
        last_good_t_us: f64,
        index: usize,
        partial: Box<SimulationResult>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schedule rejected: {}", join_issues(.0))]
    Schedule(Vec<ScheduleIssue>),

    #[error("unsupported pulse variant for {0}")]
    UnsupportedVariant(&'static str),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("undefined spectrum: {0}")]
    UndefinedSpectrum(String),

    #[error("degenerate signal: {0}")]
    Degenerate(String),

    #[error("ambiguous duration: {} lobes above half maximum at t = {:?} us", .0.len(), .0)]
    MultipleLobes(Vec<f64>),

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("reference run needs {needed_mb:.1} MB, above the {limit_mb:.1} MB guard; lower the refinement")]
    MemoryGuard { needed_mb: f64, limit_mb: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_issues(issues: &[ScheduleIssue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, GemError>;
