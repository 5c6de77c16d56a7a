use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{function}: argument {value} outside the admissible domain ({reason})")]
    Domain {
        function: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("boundary perturbation {0} is outside the range of f on (0, R_bar)")]
    OutOfRange(f64),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("degenerate spectrum: f'(1) = {fp1} is within 1e-10 of 4")]
    DegenerateSpectrum { fp1: f64 },

    #[error("grid argument error: {0}")]
    Grid(String),

    #[error("unphysical state at node {node}: {reason}")]
    Positivity { node: usize, reason: &'static str },

    #[error("initial data violate compatibility: cc0 = {cc0:e}, cc1 = {cc1:e} (tolerance {tol:e})")]
    Compatibility { cc0: f64, cc1: f64, tol: f64 },

    #[error("initial bump touches the bubble surface: center - 4*width = {0} <= 1")]
    Support(f64),

    #[error("time step {dt:e} exceeds the CFL bound {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("solver failed at t = {t}: {source}")]
    AtTime { t: f64, source: Box<Error> },

    #[error("query ({xi}, {t}) lies outside the stored space-time window")]
    Window { xi: f64, t: f64 },

    #[error("output cadence too coarse at t = {t} for second differences")]
    Cadence { t: f64 },

    #[error("fit window holds {got} samples, at least {need} required")]
    FitWindow { got: usize, need: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("init file: {0}")]
    InitFile(String),
}
