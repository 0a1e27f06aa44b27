use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid defect frame: {0}")]
    InvalidFrame(String),

    #[error("elastic instability: Christoffel eigenvalue {eigenvalue:e} is not positive")]
    ElasticInstability { eigenvalue: f64 },

    #[error("unsupported quadrature order {requested}; supported orders are {supported:?}")]
    UnsupportedOrder { requested: usize, supported: Vec<usize> },

    #[error(
        "cross-section did not converge by order {order}: last two values {previous:e} and {last:e}"
    )]
    NotConverged { order: usize, previous: f64, last: f64 },

    #[error(
        "ambiguous branch assignment (overlaps {overlaps:?}); perturb the strain or field bias"
    )]
    DegenerateLabeling { overlaps: [f64; 4] },

    #[error("branch splitting is zero; the branch/qubit model does not apply")]
    DegenerateBranch,

    #[error("time step {dt:e} s is too coarse for this generator; use dt <= {suggested:e} s")]
    StepTooLarge { dt: f64, suggested: f64 },

    #[error("signal does not decay: {0}")]
    NoDecay(String),

    #[error("qubit frequency {target_ghz} GHz is not reached below {b_max_tesla} T")]
    UnreachableFrequency { target_ghz: f64, b_max_tesla: f64 },

    #[error("unknown defect id `{0}`")]
    UnknownDefect(String),

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }
}
