use thiserror::Error;

use crate::spaces::SpaceKind;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex index {index} out of range (mesh has {count} vertices)")]
    VertexOutOfRange { index: usize, count: usize },

    #[error("cell {0} duplicates an earlier cell")]
    DuplicateCell(usize),

    #[error("vertex {0} is not referenced by any cell")]
    DanglingVertex(usize),

    #[error("edge ({0}, {1}) has more than two incident cells")]
    NonManifoldEdge(usize, usize),

    #[error("cell {0} is degenerate (zero area)")]
    DegenerateCell(usize),

    #[error("mesh is not simply connected (Euler characteristic {0})")]
    NotSimplyConnected(i64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("space {kind:?} cannot represent the field (residual {residual:.3e})")]
    NotRepresentable { kind: SpaceKind, residual: f64 },

    #[error("expected a {expected} space, got {got:?}")]
    KindMismatch { expected: &'static str, got: SpaceKind },

    #[error("cell {cell}: field is not weakly rot-free (mean rot {value:.3e})")]
    NotWeaklyRotFree { cell: usize, value: f64 },

    #[error("cell {cell}: field is not rot-free (rot {value:.3e})")]
    NotRotFree { cell: usize, value: f64 },

    #[error("antiderivative closure residual {0:.3e} exceeds tolerance")]
    ClosureResidual(f64),

    #[error("cells {0:?} are not reachable from any anchored vertex")]
    Unanchored(Vec<usize>),

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("basis function {index} ({tag}) fails membership: max moment {moment:.3e}")]
    Membership { index: usize, tag: String, moment: f64 },

    #[error("basis is rank deficient: rank {rank} < {count}")]
    RankDeficient { rank: usize, count: usize },

    #[error("{what} is not symmetric: relative asymmetry {value:.3e}")]
    Asymmetric { what: &'static str, value: f64 },

    #[error("stage-2 velocity is not rot-free: {0:.3e}")]
    StokesDivergence(f64),

    #[error("unknown manufactured case {0:?}")]
    UnknownCase(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
