use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid needs an even sample count of at least 16 per axis, got {0}")]
    GridSize(usize),

    #[error("grid radius must be positive and finite, got {0}")]
    GridRadius(f64),

    #[error("non-finite sample in {0}")]
    NonFinite(&'static str),

    #[error("sample count mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("requested frequency {requested} exceeds the Nyquist limit {nyquist} of the source grid")]
    OutOfBand { requested: f64, nyquist: f64 },

    #[error("scalar fields are vacuously solenoidal")]
    ScalarField,

    #[error("operation requires a scalar (m = 0) field, got rank {0}")]
    NotScalar(usize),

    #[error("amplitude does not decay: edge-to-peak ratio {0:e}")]
    NonDecayingAmplitude(f64),

    #[error("grid radius {radius} is below the decay precondition of {required} (6 Gaussian widths beyond the field centre)")]
    DecayPrecondition { radius: f64, required: f64 },

    #[error("pmax {pmax} is smaller than the grid radius {radius}; lines would be truncated inside the support")]
    PmaxTooSmall { pmax: f64, radius: f64 },

    #[error("p grid is not symmetric about 0 ([{min}, {max}])")]
    AsymmetricPGrid { min: f64, max: f64 },

    #[error("angular sample count must be even and positive, got {0}")]
    AngularCount(usize),

    #[error("field is not solenoidal (relative divergence residual {0:e}); apply solenoidal_project first")]
    NotSolenoidal(f64),

    #[error("not enough harmonics: have lmax = {have}, need {need}")]
    InsufficientHarmonics { have: usize, need: usize },

    #[error("weight index t = {t} is not admissible (need t > {bound})")]
    Admissibility { t: f64, bound: f64 },

    #[error("field norm is zero; the isometry ratio is undefined")]
    ZeroNorm,

    #[error("sinogram does not decay fast enough for the p-moment of order {order}")]
    InsufficientDecay { order: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
