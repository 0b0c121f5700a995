use thiserror::Error;

/// Every failure the library can report. Numeric payloads are carried as `f64`
/// regardless of the scalar type the computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HexError {
    #[error("degenerate metric at ({u}, {v}): EG - F^2 = {det}")]
    DegenerateMetric { u: f64, v: f64, det: f64 },
    #[error("metric jet is not web-adapted: relative residual of the hydrodynamic system {residual}")]
    NotWebAdapted { residual: f64 },
    #[error("leading coefficient of the characteristic cubic vanishes (G = {g}); swap the chart")]
    LeadingCoefficientZero { g: f64 },
    #[error("characteristic speeds are complex")]
    ComplexSpeeds,
    #[error("Riemann invariant denominator factor {factor} vanished (value {value})")]
    DenominatorBlowup { factor: usize, value: f64 },
    #[error("map to Riemann invariants is not invertible (singular value ratio {ratio})")]
    NonInvertibleInvariantChart { ratio: f64 },
    #[error("characteristic speeds coincide (gap {gap})")]
    CoincidingSpeeds { gap: f64 },
    #[error("indices must be distinct and in 1..=3, got ({i}, {j}, {k})")]
    BadIndices { i: usize, j: usize, k: usize },
    #[error("metric does not solve the hydrodynamic system: residual {residual} at ({u}, {v})")]
    NotASolution { residual: f64, u: f64, v: f64 },
    #[error("mu exponent calibration ambiguous: residuals m=1 {r1}, m=2 {r2}")]
    CalibrationAmbiguous { r1: f64, r2: f64 },
    #[error("trajectory left the chart at t = {t}")]
    DomainExit { t: f64, partial: Vec<[f64; 5]> },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },
    #[error("cubic has complex roots at ({u}, {v})")]
    ComplexRoots { u: f64, v: f64 },
    #[error("cubic has repeated roots at ({u}, {v})")]
    RepeatedRoots { u: f64, v: f64 },
    #[error("web foliations not transverse at ({u}, {v})")]
    NonTransversal { u: f64, v: f64 },
    #[error("positivity violated at {at}: E = {e}, EG - F^2 = {det}")]
    PositivityViolation { at: f64, e: f64, det: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ODE non-degeneracy factor vanished near s = {s}")]
    DeltaVanished { s: f64 },
    #[error("constant-curvature constraint drifted: residual {residual} at s = {s}")]
    ConstraintDrift { residual: f64, s: f64 },
    #[error("root bracketing failed: {0}")]
    NoRoot(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),
    #[error("linear solve singular (denominator {value})")]
    LinearSolveSingular { value: f64 },
    #[error("negative discriminant {d} at r = {r}")]
    NegativeDiscriminant { r: f64, d: f64 },
    #[error("integration interval exhausted at r = {r}")]
    IntervalExhausted { r: f64 },
    #[error("pencil plane misses the section at (z, y) = ({z}, {y})")]
    NoRealIntersection { z: f64, y: f64 },
    #[error("slope branches cannot be labeled at (z, y) = ({z}, {y})")]
    SlopeAmbiguity { z: f64, y: f64 },
    #[error("rho = {rho} is excluded")]
    ExcludedRho { rho: f64 },
    #[error("initial slope must be non-zero")]
    ZeroInitialSlope,
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for HexError {
    fn from(e: std::io::Error) -> Self {
        HexError::Io(e.to_string())
    }
}

pub type Result<T, E = HexError> = std::result::Result<T, E>;
