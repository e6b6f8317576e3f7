use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("requested derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("degenerate metric (det g = {det:e}); the chart is not immersed here")]
    DegenerateMetric { det: f64 },
    #[error("chart maps {domain} dimensions into {ambient}; a hypersurface chart is required")]
    NotHypersurface { domain: usize, ambient: usize },
    #[error("principal frame is ambiguous: eigenvalues {a} and {b} are too close to separate")]
    FrameAmbiguity { a: f64, b: f64 },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("focal set reached: evolution factor {beta:e} at x_n = {x}")]
    Focal { x: f64, beta: f64 },
    #[error("seed is minimal: the sum of its principal curvatures is {sum:e}, so the evolution would be minimal")]
    MinimalSeed { sum: f64 },
    #[error("closed-form profile needs a hyperplane seed (all mu_0 = 0) with negative curvature sum")]
    NotClosedForm,
    #[error("validity interval collapsed at x_n = {0}")]
    ValidityCollapse(f64),
    #[error("step size underflow at x = {0}")]
    StepUnderflow(f64),
    #[error("quadrature did not converge (estimated error {0:e})")]
    Quadrature(f64),
    #[error("no regular value of h: |grad h| = {0:e}")]
    NoRegularValue(f64),
    #[error("level value {t} is outside the range of h on the chart")]
    LevelOutOfRange { t: f64 },
    #[error("eigenvalue block has multiplicity {0}; at least 2 is required")]
    MultiplicityTooLow(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
