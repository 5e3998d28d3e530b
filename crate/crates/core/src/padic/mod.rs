//! Q_p at a fixed absolute precision, with the polynomial and linear
//! algebra kernels used everywhere else.

pub mod hensel;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod val;

pub use hensel::{hensel_zp_roots, roots_with_multiplicity, Root, RootSearch};
pub use linalg::{charpoly, Echelon, Lu, Matrix, Solved};
pub use scalar::{Context, PadicScalar};
pub use val::Val;
