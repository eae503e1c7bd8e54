use std::fmt;

use thiserror::Error;

/// A single broken metric axiom, reported with the offending indices.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum MetricViolation {
    NonSquare {
        rows: usize,
        cols: usize,
    },
    NotFinite {
        i: usize,
        j: usize,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
    },
    ZeroOffDiagonal {
        i: usize,
        j: usize,
    },
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        excess: f64,
    },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricViolation::NonSquare { rows, cols } => {
                write!(
                    f,
                    "matrix is not square: {rows} rows, {cols} cols in first bad row"
                )
            }
            MetricViolation::NotFinite { i, j } => write!(f, "d({i},{j}) is NaN or infinite"),
            MetricViolation::Negative { i, j, value } => write!(f, "d({i},{j}) = {value} < 0"),
            MetricViolation::NonzeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value} != 0"),
            MetricViolation::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            MetricViolation::ZeroOffDiagonal { i, j } => write!(f, "d({i},{j}) = 0 for {i} != {j}"),
            MetricViolation::Triangle { i, j, k, excess } => {
                write!(f, "d({i},{k}) exceeds d({i},{j}) + d({j},{k}) by {excess}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric validation failed: {}", format_violations(.0))]
    InvalidMetric(Vec<MetricViolation>),
    #[error("point index {index} out of range for a space with {n} points")]
    PointOutOfRange { index: usize, n: usize },
    #[error("chain must contain at least one point")]
    EmptyChain,
    #[error("chain gap {i}: d = {dist} is not < scale {scale}")]
    ChainGap { i: usize, dist: f64, scale: f64 },
    #[error("chain scales differ: {a} vs {b}")]
    ScaleMismatch { a: f64, b: f64 },
    #[error("concat endpoint mismatch: first chain ends at {end}, second starts at {start}")]
    ConcatMismatch { end: usize, start: usize },
    #[error("chains have different lengths: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("move index {index} out of range for chain of length {len}")]
    MoveOutOfRange { index: usize, len: usize },
    #[error("move would change a chain endpoint")]
    MoveBreaksEndpoint,
    #[error("certificate replay failed at move {step}: {reason}")]
    ReplayFailed { step: usize, reason: String },
    #[error("close-chain precondition failed: {0}")]
    ClosePrecondition(String),
    #[error("polyline mesh {mesh} is too coarse for scale {scale} (need mesh <= scale/4)")]
    MeshTooCoarse { mesh: f64, scale: f64 },
    #[error("scale index {index} out of range (scale set has {m} values, indices are 1-based)")]
    ScaleIndexOutOfRange { index: usize, m: usize },
    #[error("bonding map requires the source scale point to be at least as fine as the target")]
    ScaleOrder,
    #[error(
        "Rips graph at this scale does not span the space from the basepoint; stray points: {0:?}"
    )]
    Disconnected(Vec<usize>),
    #[error("chain is not a loop at the expected base point {expected}")]
    NotBasedLoop { expected: usize },
    #[error("chain uses pair ({u},{v}) which is not a Rips edge at this scale")]
    NotAnEdge { u: usize, v: usize },
    #[error("word references generator {index} outside presentation with {n_gens} generators")]
    WordOutOfRange { index: usize, n_gens: usize },
    #[error("loop point {point} is at distance {dist} >= {scale} from ball center {center}")]
    OutsideBall {
        point: usize,
        center: usize,
        dist: f64,
        scale: f64,
    },
    #[error("cover is not complete; the requested operation needs an exact cover")]
    IncompleteCover,
    #[error("lift left the materialized cover ball; rebuild with a larger radius")]
    LiftLeftBall,
    #[error("cover vertex {0} out of range")]
    CoverVertexOutOfRange(usize),
    #[error("space exceeds the size cap: {n} > {cap} points")]
    SizeCap { n: usize, cap: usize },
    #[error("graph is disconnected")]
    GraphDisconnected,
    #[error("graph edge ({u},{v}) invalid: {reason}")]
    BadGraphEdge { u: usize, v: usize, reason: String },
    #[error("budget exhausted before the cover closed")]
    CoverBudget,
    #[error("invalid document: {0}")]
    Document(String),
    #[error("exact arithmetic overflow; retry with the big-integer engine")]
    Overflow,
}

fn format_violations(v: &[MetricViolation]) -> String {
    let shown: Vec<String> = v.iter().take(5).map(|x| x.to_string()).collect();
    if v.len() > 5 {
        format!("{} (+{} more)", shown.join("; "), v.len() - 5)
    } else {
        shown.join("; ")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
