use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("point outside the domain box (coordinate {coord} = {value})")]
    OutsideDomain { coord: usize, value: f64 },

    #[error("log of a non-positive subexpression (value {0})")]
    LogNonPositive(f64),

    #[error("log node cannot be certified positive on the domain box: {0}")]
    LogCertificate(String),

    #[error("negative power of a subexpression that can vanish")]
    PowerOfZero,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("form degree overflow: {0} > {1}")]
    DegreeOverflow(usize, usize),

    #[error("b-symplectic form degenerate at {point:?} (relative determinant {det:e})")]
    Degenerate { point: Vec<f64>, det: f64 },

    #[error("no b-integral in the commuting part: every f_i with i <= r is smooth")]
    NoBIntegral,

    #[error("bracket entry ({0}, {1}) is not F-basic (spread {2:e})")]
    NotFBasic(usize, usize, f64),

    #[error("step size underflow at simulated time {0}")]
    StepUnderflow(f64),

    #[error("trajectory left the domain at simulated time {time}; last valid state {state:?}")]
    DomainExit { time: f64, state: Vec<f64> },

    #[error("no return found within the scan box")]
    NoReturn,

    #[error("singular monodromy in return-map refinement")]
    SingularMonodromy,

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("angle shooting did not converge (residual {0:e})")]
    Shooting(f64),

    #[error("interpolation grid too coarse: return residual {0:e}")]
    GridTooCoarse(f64),

    #[error("differentials dependent at the centre point")]
    Dependent,

    #[error("input functions do not commute (|bracket| = {0:e})")]
    NonCommuting(f64),

    #[error("system is not in standard-model form: {0}")]
    NotStandardModel(String),

    #[error("b-function not expressible as c log|t| + smooth: {0}")]
    NotBFunction(String),

    #[error("parse error: {0}")]
    Parse(String),
}
