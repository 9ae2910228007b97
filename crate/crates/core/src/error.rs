use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngelError {
    #[error("non-finite evaluation at {point:?}")]
    NonFiniteEvaluation { point: Vec<f64> },
    #[error("point {point:?} lies outside the chart domain")]
    DomainViolation { point: Vec<f64> },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("sections belong to different kinds of frame model")]
    ModelMismatch,
    #[error("skew pairing on E is degenerate (rank < 2) at {point:?}")]
    DegenerateKernel { point: Vec<f64> },
    #[error("plane field is not contact at {point:?}")]
    NotContact { point: Vec<f64> },
    #[error("metric signature is not (+,+,-)")]
    SignatureError,
    #[error("curvature mismatch: |dβ - ι vol| = {residual:e}")]
    CurvatureMismatch { residual: f64 },
    #[error("line path is not equivariant under the monodromy (defect {defect:e})")]
    EquivarianceError { defect: f64 },
    #[error("twist profile is not increasing at t = {t}")]
    TwistMonotonicityError { t: f64 },
    #[error("twist profile boundary values are inconsistent: {0}")]
    TwistBoundary(String),
    #[error("orbit left the chart at t = {t_exit}")]
    ChartExit { t_exit: f64 },
    #[error("angle increment {increment} exceeded the step guard at t = {t}")]
    StepTooLarge { t: f64, increment: f64 },
    #[error("E/W frame degenerates at t = {t}")]
    FrameDegenerate { t: f64 },
    #[error("developing map fails to be monotone at t = {t}")]
    MonotonicityViolation { t: f64 },
    #[error("holonomy trace {trace} and winding {winding} sit on a class boundary")]
    AmbiguousClass { trace: f64, winding: f64 },
    #[error("integrand is singular near t = 0 (z/w = {ratio:e})")]
    SingularIntegrand { ratio: f64 },
    #[error("variation leaves the class of D-curves (residual {residual:e})")]
    VariationNotDCurve { residual: f64 },
    #[error("variation drifts off the null cone (residual {residual:e})")]
    NotNull { residual: f64 },
    #[error("orbit did not close up within the search window")]
    NotClosed,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, EngelError>;
