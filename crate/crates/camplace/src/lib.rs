//! Budget-constrained 6-DoF camera placement over voxelized 3D environments.
//!
//! The library models an environment as a regular voxel grid, raycasts pinhole
//! cameras into it to build a binary visibility matrix, and selects a camera
//! subset that minimizes the squared shortfall between the desired per-voxel
//! coverage overlap and the achieved one. Selection can run through a greedy
//! solver, an embedded branch-and-bound over the equivalent mixed-integer
//! model, or baseline formulations, and the model can be exported in CPLEX-LP
//! text format for external solvers.

pub mod bits;
pub mod camera;
pub mod error;
pub mod geometry;
pub mod objective;
pub mod pipeline;
pub mod provenance;
pub mod solvers;
pub mod vec3;
pub mod visibility;

pub use bits::BitVec;
pub use error::Error;
pub use vec3::Vec3;

pub type Result<T> = std::result::Result<T, Error>;
