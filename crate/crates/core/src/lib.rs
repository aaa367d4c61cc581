//! Quasi-interpolation operators for spline spaces on box meshes.

pub mod approxop;
pub mod boxmesh;
pub mod bspline;
pub mod error;
pub mod functionals;
pub mod multiindex;
pub mod polyblossom;
pub mod spaces;
pub mod studies;

pub use approxop::{error_norm, FunctionOracle, QuasiInterpolant};
pub use boxmesh::{AxisBox, BoxMesh, TruncatedBox};
pub use bspline::{KnotVector, OpenKnotVector, Side, TensorBSpline};
pub use error::{Error, Result};
pub use functionals::DualFunctional;
pub use multiindex::{IndexSet, MultiIndex};
pub use polyblossom::Polynomial;
pub use spaces::{build_lr, build_thb, build_tps, EtaPolicy, Meshline, SpaceKind, SplineSpace, ThbLevel};
