//! Environment model: point-cloud ingestion, occupancy voxelization,
//! free-space target planes and shelf-region labeling.

mod grid;
mod pointcloud;
mod scene;
mod targets;

pub use grid::{voxelize, VoxelGrid, DEFAULT_MAX_VOXELS};
pub use pointcloud::{load_point_cloud, CloudFormat, PointCloud};
pub use scene::{rasterize_scene, AabbSpec, SceneSpec};
pub use targets::{
    build_free_space_targets, label_shelf_targets, CoverageTarget, RegionLabel, TargetEntry,
    DEFAULT_GAMMA_MAX,
};
