//! Numerical laboratory for weighted Hardy and Sobolev type inequalities,
//! BMO bounds for negative subharmonic functions, Neumann eigenvalues of
//! balls via Bessel functions, Hartogs extension, and Liouville criteria.

pub mod bmolab;
pub mod error;
pub mod funcspace;
pub mod hartogs;
pub mod ineqlab;
pub mod liouville;
pub mod quadcore;
pub mod specfun;

pub use error::{LabError, Result};
