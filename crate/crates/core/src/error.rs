use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sample is empty")]
    EmptySample,

    #[error("sample point {index} is {value}; observations must be finite and strictly positive")]
    InvalidSamplePoint { index: usize, value: f64 },

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("cut-off {k} is not a node of the frequency grid (step {step})")]
    NotGridNode { k: f64, step: f64 },

    #[error("cut-off {k} exceeds the grid bound {k_max}")]
    CutoffOutOfRange { k: f64, k_max: f64 },

    #[error("Mellin values are not conjugate symmetric at t = {t} (deviation {deviation:e})")]
    NotConjugateSymmetric { t: f64, deviation: f64 },

    #[error("frequency step {step} too coarse for |ln x| = {max_abs_log_x}; need step <= {max_step}")]
    StepTooCoarse {
        step: f64,
        max_abs_log_x: f64,
        max_step: f64,
    },

    #[error("invalid evaluation grid: {0}")]
    InvalidXGrid(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("error density `{name}` has |M[g](1+it)| = {modulus:e} at t = {t}; its Mellin transform must not vanish")]
    MellinVanishes { name: String, t: f64, modulus: f64 },

    #[error("the noisy estimator is defined on the line alpha = 1, got alpha = {0}")]
    UnsupportedAlpha(f64),

    #[error("`{0}` has no density on the positive half-line")]
    NoDensity(String),
}
