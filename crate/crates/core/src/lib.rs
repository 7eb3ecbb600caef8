//! Exact finite-dimensional workbench for ternary rings of operators (TROs),
//! commutative subspace lattices and their algebras.
//!
//! Everything is generic over an [`ExactField`]; the aliases below fix the
//! scalar to Gaussian rationals, which is what the command-line tool uses.

pub mod corpus;
pub mod erdos;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod matrix;
pub mod opspace;
pub mod poly;
pub mod random;
pub mod scalar;
pub mod tro;

pub use error::{Error, Result};
pub use linalg::{LinearSolution, SpanBuilder, VecSubspace};
pub use matrix::Matrix;
pub use scalar::{ExactField, GaussianRational, Rational};

pub type Scalar = GaussianRational;
pub type Mat = Matrix<Scalar>;
pub type OpSpace = opspace::OperatorSpace<Scalar>;
pub type Algebra = opspace::OpAlgebra<Scalar>;
pub type Projection = lattice::Projection<Scalar>;
pub type Csl = lattice::Csl<Scalar>;
pub type LatticeIso = lattice::LatticeIso<Scalar>;
pub type TroWitness = tro::TroWitness<Scalar>;
