//! Primal-dual gradient methods for nonconvex composite problems
//! `min_x f(x) + h(Ax)` with smooth `f` and a weakly convex `h`.

pub mod conjprox;
pub mod dataio;
pub mod error;
pub mod linops;
pub mod ppdg;
pub mod sppdg;
pub mod vrgrad;
pub mod problems;
pub mod vecops;

pub use conjprox::Regularizer;
pub use error::{Error, Result};
pub use linops::{Boundary, DenseMatrix, LinearOperator, SpectralBounds};
pub use ppdg::{Ppdg, PpdgConfig, Preconditioner, SolveReport, SolverState, TraceRecord, TraceSink};
pub use problems::{CompositeProblem, FiniteSum, FiniteSumProblem, Smooth};
