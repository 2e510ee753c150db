//! Riemannian metric algebra for d = 2, 3.

mod eigen;
mod field;
mod tensor;

pub use eigen::{sym_eigen, Mat3, SymEigen};
pub use field::{complexity, gradate, lp_normalize, lp_scale, MetricField, GRADATION_MAX_SWEEPS, GRADATION_TOL};
pub use tensor::{edge_length, MetricTensor};
