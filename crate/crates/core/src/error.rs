use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("site {site} is out of range for a lattice of {n} sites")]
    SiteOutOfRange { site: usize, n: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region covers the whole lattice and has no surface")]
    DegenerateRegion,

    #[error("region was built on a different lattice")]
    LatticeMismatch,

    #[error("decay exponent {alpha} must exceed the lattice dimension {dimension}")]
    InvalidDecayExponent { alpha: f64, dimension: usize },

    #[error("{n} sites exceed the dense cutoff of {cutoff} sites")]
    ResourceLimit { n: usize, cutoff: usize },

    #[error("time step {dt} exceeds the short-time threshold {tau_star}")]
    ThresholdViolation { dt: f64, tau_star: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot parse Pauli string {input:?}: {reason}")]
    PauliParse { input: String, reason: String },

    #[error("string budget of {budget} exceeded at order {order} ({count} strings live)")]
    TruncationBudget {
        budget: usize,
        order: usize,
        count: usize,
    },

    #[error("graph budget allows m <= {budget}, got m = {m}")]
    GraphBudget { m: usize, budget: usize },

    #[error("nested commutator of the string vanishes")]
    ZeroCommutator,

    #[error("{got} front points supplied, at least 3 are required")]
    InsufficientPoints { got: usize },

    #[error("OTOC grid is empty")]
    EmptyGrid,

    #[error("LAPACK routine {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}
