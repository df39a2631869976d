use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: String, expected: usize, found: usize },
    #[error("point is not in the set")]
    PointNotInSet,
    #[error("limiting normal cone enumeration exceeded {cap} patterns")]
    PatternOverflow { cap: usize },
    #[error("cone constructor received a nonzero offset {0}")]
    NonzeroOffset(f64),
    #[error("mapping is not polyhedral: {0}")]
    NotPolyhedral(String),
    #[error("basepoint is not on the graph")]
    BasepointOffGraph,
    #[error("numeric procedure did not converge: {0}")]
    NonConvergent(String),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("condition {0} failed")]
    ConditionFailed(String),
    #[error("direction is not in the domain of the graphical derivative")]
    DirectionNotInDomain,
    #[error("direction is not tangent to the set")]
    DirectionNotTangent,
    #[error("graphical derivative is empty in the given direction")]
    EmptyGraphicalDerivative,
    #[error("normal cone is unavailable for this set descriptor")]
    NormalConeUnavailable,
    #[error("point is not a solution: {0}")]
    NotASolution(String),
    #[error("curve leaves the graph at t = {0}")]
    CurveOffGraph(f64),
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { context: context.to_string(), expected, found });
    }
    Ok(())
}
