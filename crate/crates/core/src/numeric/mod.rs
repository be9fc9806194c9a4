//! Scalar, complex, special-function and small linear-algebra plumbing.

pub mod complex;
pub mod dd;
pub mod extrapolate;
pub mod gamma;
pub mod linalg;
pub mod par;
pub mod poly;
pub mod real;

pub use complex::{cx, Cplx, Cx, CxExt};
pub use linalg::CMat;
pub use par::Execution;
pub use dd::Dd;
pub use real::{Precision, Real};
