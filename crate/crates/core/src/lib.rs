//! Optimization over the probability simplex with the Cauchy-Simplex
//! iteration, its standard baselines, and the applications used to compare
//! them: nearest points in convex hulls, exam question weighting, prediction
//! with expert advice and universal portfolios.
//!
//! ```
//! use simplex_opt::objectives::HullProjectionProblem;
//! use simplex_opt::linalg::Matrix;
//! use simplex_opt::solvers::{Method, Solver};
//! use simplex_opt::SimplexPoint;
//!
//! let p = HullProjectionProblem::new(Matrix::identity(2), vec![0.0, 1.0])?;
//! let trace = Solver::new(Method::CauchySimplex).run(&p, SimplexPoint::uniform(2)?)?;
//! assert_eq!(trace.solution().weights(), &[0.0, 1.0]);
//! # Ok::<(), simplex_opt::Error>(())
//! ```

pub mod bench;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod online;
pub mod oracle;
pub mod simplex;
pub mod solvers;

pub use error::{Error, Result};
pub use simplex::{GradientVector, KktReport, SimplexPoint};
