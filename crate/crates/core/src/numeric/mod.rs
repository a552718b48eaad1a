//! Small numerical kernels shared by the analysis modules.

pub mod fit;
pub mod quad;
pub mod roots;
pub mod spline;
