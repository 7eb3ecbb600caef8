use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("not a projection: {0}")]
    NotAProjection(String),

    #[error("generators {0} and {1} do not commute")]
    NonCommuting(usize, usize),

    #[error("lattice closure exceeded {0} members")]
    ClosureCap(usize),

    #[error("invalid frame: {0}")]
    InvalidFrame(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("unsupported class: {0}")]
    UnsupportedClass(String),

    #[error("not an algebra: product of basis elements {0} and {1} leaves the span")]
    NotAnAlgebra(usize, usize),

    #[error("TRO axiom fails on basis triple ({0}, {1}, {2})")]
    NotATro(usize, usize, usize),

    #[error("identity `{identity}` fails; witness {witness}")]
    IdentityFailed { identity: String, witness: String },

    #[error("invalid lattice isomorphism: {0}")]
    InvalidIso(String),

    #[error("malformed input at {path}: {message}")]
    Parse { path: String, message: String },

    /// A computed object contradicts a theorem that guarantees it; always a
    /// bug in this crate.
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl Error {
    pub fn identity(identity: impl Into<String>, witness: impl ToString) -> Self {
        Error::IdentityFailed { identity: identity.into(), witness: witness.to_string() }
    }

    pub fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), message: message.into() }
    }
}
