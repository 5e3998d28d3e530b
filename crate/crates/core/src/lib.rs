//! Valued truncated power series over Q_p, p-adic Liouville type
//! estimates, and regular connections over formal and convergent power
//! series: exponents, shearing, Fuchs sections, Clark's recursion,
//! truncated cohomology and gauge reconstruction.
//!
//! Sign conventions: θ = z·d/dz, and a connection with matrix A(z) acts by
//! φ(e⃗·a) = e⃗·(A·a + θa).

pub mod cli;
pub mod connection;
pub mod error;
pub mod io;
pub mod lab;
pub mod padic;
pub mod liouville;
pub mod profile;
pub mod series;

pub use error::{Error, Result};
