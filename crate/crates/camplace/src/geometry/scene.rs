use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

use super::{VoxelGrid, DEFAULT_MAX_VOXELS};

/// Axis-aligned solid, meters, in scene coordinates (origin at the room's
/// min corner).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AabbSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl AabbSpec {
    pub fn min_vec(&self) -> Vec3 {
        Vec3::new(self.min[0], self.min[1], self.min[2])
    }

    pub fn max_vec(&self) -> Vec3 {
        Vec3::new(self.max[0], self.max[1], self.max[2])
    }

    fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min[0]
            && p.x <= self.max[0]
            && p.y >= self.min[1]
            && p.y <= self.max[1]
            && p.z >= self.min[2]
            && p.z <= self.max[2]
    }

    fn valid(&self) -> bool {
        (0..3).all(|a| self.max[a] > self.min[a])
    }
}

/// Synthetic scene description, rasterized directly to a [`VoxelGrid`]
/// without going through a point cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    /// Room extents in meters; the grid spans `[0, room]` on each axis.
    pub room: [f64; 3],
    pub voxel_size: f64,
    /// Occupy the one-voxel-thick perimeter walls (x and y faces).
    #[serde(default)]
    pub walls: bool,
    /// Occupy the bottom z slab.
    #[serde(default)]
    pub floor: bool,
    /// Arbitrary solid obstacles.
    #[serde(default)]
    pub solids: Vec<AabbSpec>,
    /// Shelf boxes: rasterized as solid and also labeled as shelf regions.
    #[serde(default)]
    pub shelves: Vec<AabbSpec>,
}

impl SceneSpec {
    pub fn from_file(path: &Path) -> Result<SceneSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.voxel_size <= 0.0 || !self.voxel_size.is_finite() {
            return Err(Error::Config(format!(
                "scene voxel_size must be positive, got {}",
                self.voxel_size
            )));
        }
        if self.room.iter().any(|&e| e <= 0.0 || !e.is_finite()) {
            return Err(Error::Config(format!("bad room extents {:?}", self.room)));
        }
        for b in self.solids.iter().chain(&self.shelves) {
            if !b.valid() {
                return Err(Error::Config(format!("degenerate scene box {b:?}")));
            }
        }
        Ok(())
    }

    /// Shelf boxes for [`super::label_shelf_targets`].
    pub fn shelf_boxes(&self) -> Vec<(Vec3, Vec3)> {
        self.shelves
            .iter()
            .map(|b| (b.min_vec(), b.max_vec()))
            .collect()
    }
}

/// Rasterize a scene: a voxel is occupied iff its center lies inside any
/// solid or shelf box, or in a perimeter wall / floor slab when enabled.
pub fn rasterize_scene(spec: &SceneSpec) -> Result<VoxelGrid> {
    spec.validate()?;
    let dims = [
        ((spec.room[0] / spec.voxel_size).ceil() as usize).max(1),
        ((spec.room[1] / spec.voxel_size).ceil() as usize).max(1),
        ((spec.room[2] / spec.voxel_size).ceil() as usize).max(1),
    ];
    let mut grid = VoxelGrid::new(Vec3::ZERO, spec.voxel_size, dims, DEFAULT_MAX_VOXELS)?;
    let [nx, ny, nz] = dims;
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = grid.linear_index([ix, iy, iz]);
                let wall =
                    spec.walls && (ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1);
                let floor = spec.floor && iz == 0;
                let c = grid.center_of(idx);
                let solid = spec
                    .solids
                    .iter()
                    .chain(&spec.shelves)
                    .any(|b| b.contains(c));
                if wall || floor || solid {
                    grid.set_occupied(idx, true);
                }
            }
        }
    }
    grid.compute_normals();
    Ok(grid)
}
