//! Metric-based anisotropic mesh adaptation.
//!
//! The pipeline: a P1 Poisson solve ([`fem`]), Hessian recovery
//! ([`recovery`]), metric construction and normalization ([`metric`]), local
//! 2D remeshing toward unit edges ([`remesh`]) and the partitioned
//! repartition-adapt iteration ([`parallel`]), tied together by the
//! fixed-point loop and convergence studies in [`driver`].

pub mod driver;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod metric;
pub mod options;
pub mod parallel;
pub mod recovery;
pub mod remesh;

#[cfg(test)]
mod testutil;

pub use driver::{convergence_study, run_fixed_point, ConvergenceRecord, ConvergenceStudy, FixedPointResult};
pub use error::{Error, Result};
pub use fem::{manufactured_interface, manufactured_quadratic, PoissonProblem};
pub use mesh::{structured_mesh, MeshStatistics, SimplicialMesh};
pub use metric::{MetricField, MetricTensor};
pub use options::{AdaptOptions, NormOrder};
pub use parallel::{parallel_adapt, Partition};
pub use recovery::{ScalarField, VectorField};
