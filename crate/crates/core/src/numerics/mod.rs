//! Small dense numerical kernels shared by the physics modules.

pub mod eigen;
pub mod ode;
pub mod quad;
pub mod roots;

pub use eigen::{eigh_small, Eigen, SymmetricMatrix};
pub use ode::{integrate_ode, linspace, OdeProblem, Trajectory};
pub use quad::quadrature;
pub use roots::{minimize_scalar, solve_scalar};
