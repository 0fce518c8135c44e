use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec3};

use super::VoxelGrid;

/// Maximum supported desired coverage; drives the piecewise model size.
pub const DEFAULT_GAMMA_MAX: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionLabel {
    FreeSpacePlane,
    Shelf,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetEntry {
    /// Linear voxel index into the grid this target set was built from.
    pub voxel: usize,
    /// Desired coverage overlap at this voxel.
    pub gamma: u32,
    pub label: RegionLabel,
}

/// The scored voxel set: which voxels matter and how many cameras each one
/// should be seen by.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTarget {
    pub entries: Vec<TargetEntry>,
}

impl CoverageTarget {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn gamma_values(&self) -> Vec<u32> {
        self.entries.iter().map(|e| e.gamma).collect()
    }

    pub fn voxel_indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.voxel).collect()
    }

    /// Concatenate target sets, rejecting duplicate voxels.
    pub fn merge(sets: &[CoverageTarget]) -> Result<CoverageTarget> {
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for s in sets {
            for e in &s.entries {
                if !seen.insert(e.voxel) {
                    return Err(Error::InvalidArgument(format!(
                        "voxel {} appears in more than one target set",
                        e.voxel
                    )));
                }
                entries.push(*e);
            }
        }
        Ok(CoverageTarget { entries })
    }
}

/// Free-space traversal planes: all unoccupied voxels in the z-slab that
/// contains each requested height, with uniform gamma. Slabs at distinct
/// heights contribute distinct entries; coinciding slabs are deduplicated.
pub fn build_free_space_targets(
    grid: &VoxelGrid,
    heights: &[f64],
    gamma: u32,
) -> Result<CoverageTarget> {
    let [nx, ny, nz] = grid.dims();
    let mut slabs = Vec::new();
    for &h in heights {
        let f = (h - grid.origin().z) / grid.voxel_size();
        if f < 0.0 || f > nz as f64 {
            return Err(Error::HeightOutOfRange(h));
        }
        let iz = (f.floor() as usize).min(nz - 1);
        if !slabs.contains(&iz) {
            slabs.push(iz);
        }
    }
    slabs.sort_unstable();
    let mut entries = Vec::new();
    for iz in slabs {
        for iy in 0..ny {
            for ix in 0..nx {
                let idx = grid.linear_index([ix, iy, iz]);
                if !grid.occupied(idx) {
                    entries.push(TargetEntry {
                        voxel: idx,
                        gamma,
                        label: RegionLabel::FreeSpacePlane,
                    });
                }
            }
        }
    }
    Ok(CoverageTarget { entries })
}

/// Shelf regions: occupied voxels whose centers fall inside any of the given
/// axis-aligned boxes. Each voxel appears once even when boxes overlap.
pub fn label_shelf_targets(
    grid: &VoxelGrid,
    boxes: &[(Vec3, Vec3)],
    gamma: u32,
) -> Result<CoverageTarget> {
    for (lo, hi) in boxes {
        if !(hi.x > lo.x && hi.y > lo.y && hi.z > lo.z) {
            return Err(Error::InvalidArgument(format!(
                "degenerate shelf box min={lo:?} max={hi:?}"
            )));
        }
    }
    let mut entries = Vec::new();
    for idx in grid.occupancy().iter_ones() {
        let c = grid.center_of(idx);
        let inside = boxes.iter().any(|(lo, hi)| {
            c.x >= lo.x && c.x <= hi.x && c.y >= lo.y && c.y <= hi.y && c.z >= lo.z && c.z <= hi.z
        });
        if inside {
            entries.push(TargetEntry {
                voxel: idx,
                gamma,
                label: RegionLabel::Shelf,
            });
        }
    }
    Ok(CoverageTarget { entries })
}
