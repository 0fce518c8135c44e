//! Raycasting candidate cameras into the voxel grid to build the binary
//! visibility matrix, with occlusion, range and angle-of-incidence filters.

use std::collections::HashMap;
use std::io::{Read as _, Write as _};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{pixel_direction, CameraIntrinsics, CandidateSet, Pose6};
use crate::geometry::{CoverageTarget, RegionLabel, VoxelGrid};
use crate::provenance::{hash_visibility_inputs, Provenance};
use crate::{BitVec, Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaycastConfig {
    /// Sample every k-th pixel along both image axes.
    pub pixel_stride: usize,
    /// Incidence limit for shelf targets; `None` disables the filter.
    pub max_incidence_deg: Option<f64>,
    /// Maximum ray length, meters.
    pub max_range: f64,
}

impl RaycastConfig {
    /// Stride such that adjacent sampled rays are at most one voxel apart at
    /// the far plane: `floor(pixels_per_radian * voxel_size / max_range)`,
    /// taken over the tighter image axis, floored at 1.
    pub fn default_stride(intr: &CameraIntrinsics, voxel_size: f64) -> usize {
        let ppr_h = intr.width_px as f64 / intr.hfov_deg.to_radians();
        let ppr_v = intr.height_px as f64 / intr.vfov_deg.to_radians();
        let s = (ppr_h.min(ppr_v) * voxel_size / intr.max_range).floor() as usize;
        s.max(1)
    }

    pub fn for_intrinsics(
        intr: &CameraIntrinsics,
        voxel_size: f64,
        max_incidence_deg: Option<f64>,
    ) -> RaycastConfig {
        RaycastConfig {
            pixel_stride: Self::default_stride(intr, voxel_size),
            max_incidence_deg,
            max_range: intr.max_range,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pixel_stride == 0 {
            return Err(Error::InvalidArgument("pixel_stride must be >= 1".into()));
        }
        if let Some(a) = self.max_incidence_deg {
            if !(a > 0.0 && a <= 90.0) {
                return Err(Error::InvalidArgument(format!(
                    "max_incidence_deg must be in (0, 90], got {a}"
                )));
            }
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "max_range must be positive, got {}",
                self.max_range
            )));
        }
        Ok(())
    }
}

/// Binary view matrix: row i marks the target voxels candidate i sees.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityMatrix {
    pub rows: Vec<BitVec>,
    pub n_g: usize,
    pub n_p: usize,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaycastResult {
    /// First occupied voxel along the ray, if any.
    pub hit: Option<usize>,
    /// Free voxels crossed in order, excluding the hit voxel.
    pub traversed: Vec<usize>,
}

/// Walk the grid along a ray (Amanatides-Woo incremental traversal).
/// Origins outside the grid clip to the grid box first. A ray starting
/// inside an occupied voxel terminates there immediately.
pub fn raycast(grid: &VoxelGrid, origin: Vec3, direction: Vec3, max_range: f64) -> Result<RaycastResult> {
    if direction.norm() < 1e-12 {
        return Err(Error::InvalidArgument("zero ray direction".into()));
    }
    let dir = direction.normalized();
    let size = grid.voxel_size();
    let lo = grid.origin();
    let hi = grid.max_corner();

    // clip to the grid box
    let mut t0 = 0.0f64;
    let mut t1 = max_range;
    for axis in 0..3 {
        let o = origin.component(axis);
        let d = dir.component(axis);
        let (a, b) = (lo.component(axis), hi.component(axis));
        if d.abs() < 1e-15 {
            if o < a || o > b {
                return Ok(RaycastResult {
                    hit: None,
                    traversed: Vec::new(),
                });
            }
        } else {
            let ta = (a - o) / d;
            let tb = (b - o) / d;
            let (ta, tb) = if ta < tb { (ta, tb) } else { (tb, ta) };
            t0 = t0.max(ta);
            t1 = t1.min(tb);
        }
    }
    if t0 > t1 {
        return Ok(RaycastResult {
            hit: None,
            traversed: Vec::new(),
        });
    }
    // nudge inside to get a well-defined starting voxel
    let eps = 1e-9 * size;
    let start = origin + dir * (t0 + eps);
    let Some(mut c) = grid.voxel_containing(start) else {
        return Ok(RaycastResult {
            hit: None,
            traversed: Vec::new(),
        });
    };

    let mut step = [0i64; 3];
    let mut t_max = [f64::INFINITY; 3];
    let mut t_delta = [f64::INFINITY; 3];
    for axis in 0..3 {
        let d = dir.component(axis);
        if d > 1e-15 {
            step[axis] = 1;
            let boundary = lo.component(axis) + (c[axis] as f64 + 1.0) * size;
            t_max[axis] = (boundary - origin.component(axis)) / d;
            t_delta[axis] = size / d;
        } else if d < -1e-15 {
            step[axis] = -1;
            let boundary = lo.component(axis) + c[axis] as f64 * size;
            t_max[axis] = (boundary - origin.component(axis)) / d;
            t_delta[axis] = size / -d;
        }
    }

    let mut traversed = Vec::new();
    loop {
        let idx = grid.linear_index(c);
        if grid.occupied(idx) {
            return Ok(RaycastResult {
                hit: Some(idx),
                traversed,
            });
        }
        traversed.push(idx);

        // smallest boundary crossing
        let axis = (0..3)
            .min_by(|&a, &b| t_max[a].partial_cmp(&t_max[b]).unwrap())
            .unwrap();
        if t_max[axis] > max_range {
            return Ok(RaycastResult {
                hit: None,
                traversed,
            });
        }
        let next = c[axis] as i64 + step[axis];
        if next < 0 || next as usize >= grid.dims()[axis] {
            return Ok(RaycastResult {
                hit: None,
                traversed,
            });
        }
        c[axis] = next as usize;
        t_max[axis] += t_delta[axis];
    }
}

/// True iff the angle between the reversed viewing ray and the surface
/// normal is at most `max_incidence_deg` (boundary inclusive).
pub fn incidence_ok(ray_direction: Vec3, normal: Vec3, max_incidence_deg: f64) -> bool {
    let cos = (-ray_direction).dot(normal).clamp(-1.0, 1.0);
    cos.acos().to_degrees() <= max_incidence_deg + 1e-9
}

/// Lookup from voxel index to target slot, carrying the scoring kind.
pub(crate) struct TargetIndex {
    slots: HashMap<usize, (u32, bool)>, // (slot, is_shelf)
}

impl TargetIndex {
    pub(crate) fn build(targets: &CoverageTarget) -> TargetIndex {
        let slots = targets
            .entries
            .iter()
            .enumerate()
            .map(|(slot, e)| (e.voxel, (slot as u32, e.label == RegionLabel::Shelf)))
            .collect();
        TargetIndex { slots }
    }
}

/// One row of the visibility matrix for a single pose. Free-space targets
/// score when a sampled ray traverses them unobstructed; shelf targets score
/// when a ray hits them and passes the incidence filter.
pub fn camera_view(
    grid: &VoxelGrid,
    targets: &CoverageTarget,
    intr: &CameraIntrinsics,
    pose: &Pose6,
    cfg: &RaycastConfig,
) -> Result<BitVec> {
    cfg.validate()?;
    intr.validate()?;
    let tidx = TargetIndex::build(targets);
    Ok(camera_view_indexed(grid, &tidx, targets.len(), intr, pose, cfg))
}

pub(crate) fn camera_view_indexed(
    grid: &VoxelGrid,
    tidx: &TargetIndex,
    n_p: usize,
    intr: &CameraIntrinsics,
    pose: &Pose6,
    cfg: &RaycastConfig,
) -> BitVec {
    let mut row = BitVec::zeros(n_p);
    // a camera embedded in geometry sees nothing
    if let Some(c) = grid.voxel_containing(pose.position) {
        if grid.occupied(grid.linear_index(c)) {
            return row;
        }
    }
    let mut py = 0;
    while py < intr.height_px {
        let mut px = 0;
        while px < intr.width_px {
            let dir = pixel_direction(intr, pose, px, py);
            let res = raycast(grid, pose.position, dir, cfg.max_range)
                .expect("pixel directions are unit length");
            for &v in &res.traversed {
                if let Some(&(slot, is_shelf)) = tidx.slots.get(&v) {
                    if !is_shelf {
                        row.set(slot as usize, true);
                    }
                }
            }
            if let Some(hitv) = res.hit {
                if let Some(&(slot, is_shelf)) = tidx.slots.get(&hitv) {
                    if is_shelf {
                        let pass = match cfg.max_incidence_deg {
                            None => true,
                            Some(limit) => grid
                                .normal_of(hitv)
                                .map(|n| incidence_ok(dir, n, limit))
                                .unwrap_or(false),
                        };
                        if pass {
                            row.set(slot as usize, true);
                        }
                    }
                }
            }
            px += cfg.pixel_stride as u32;
        }
        py += cfg.pixel_stride as u32;
    }
    row
}

/// Raycast every candidate and assemble the matrix. Rows are computed in
/// parallel; results are bit-identical regardless of thread count.
pub fn build_matrix(
    grid: &VoxelGrid,
    targets: &CoverageTarget,
    candidates: &CandidateSet,
    cfg: &RaycastConfig,
) -> Result<VisibilityMatrix> {
    cfg.validate()?;
    candidates.intrinsics.validate()?;
    let tidx = TargetIndex::build(targets);
    let n_p = targets.len();
    let rows: Vec<BitVec> = candidates
        .poses
        .par_iter()
        .map(|pose| camera_view_indexed(grid, &tidx, n_p, &candidates.intrinsics, pose, cfg))
        .collect();
    Ok(VisibilityMatrix {
        n_g: rows.len(),
        n_p,
        rows,
        provenance: hash_visibility_inputs(grid, targets, candidates, cfg),
    })
}

/// Drop candidates whose rows are all zero; location groups are renumbered
/// compactly in order of first appearance, row order otherwise preserved.
pub fn prune_blocked(
    candidates: &CandidateSet,
    matrix: &VisibilityMatrix,
) -> Result<(CandidateSet, VisibilityMatrix)> {
    if candidates.len() != matrix.n_g {
        return Err(Error::DimensionMismatch(format!(
            "{} candidates vs {} matrix rows",
            candidates.len(),
            matrix.n_g
        )));
    }
    let mut poses = Vec::new();
    let mut groups = Vec::new();
    let mut rows = Vec::new();
    let mut remap: HashMap<u32, u32> = HashMap::new();
    for i in 0..matrix.n_g {
        if !matrix.rows[i].any() {
            continue;
        }
        let old = candidates.location_group[i];
        let next = remap.len() as u32;
        let g = *remap.entry(old).or_insert(next);
        poses.push(candidates.poses[i]);
        groups.push(g);
        rows.push(matrix.rows[i].clone());
    }
    let kept = CandidateSet {
        intrinsics: candidates.intrinsics,
        poses,
        location_group: groups,
        n_groups: remap.len() as u32,
    };
    let out = VisibilityMatrix {
        n_g: rows.len(),
        n_p: matrix.n_p,
        rows,
        provenance: matrix.provenance,
    };
    Ok((kept, out))
}

const MATRIX_MAGIC: &[u8; 4] = b"CPVM";
const MATRIX_VERSION: u32 = 1;

impl VisibilityMatrix {
    /// Binary layout: magic "CPVM", u32 LE version, u64 LE n_g, u64 LE n_p,
    /// 32-byte provenance hash, then n_g rows of ceil(n_p / 8) bytes each,
    /// bits packed LSB-first.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let io = |e| Error::io(path, e);
        f.write_all(MATRIX_MAGIC).map_err(io)?;
        f.write_all(&MATRIX_VERSION.to_le_bytes()).map_err(io)?;
        f.write_all(&(self.n_g as u64).to_le_bytes()).map_err(io)?;
        f.write_all(&(self.n_p as u64).to_le_bytes()).map_err(io)?;
        f.write_all(&self.provenance.0).map_err(io)?;
        for row in &self.rows {
            f.write_all(&row.to_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<VisibilityMatrix> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut data = Vec::new();
        f.read_to_end(&mut data).map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        if data.len() < 4 + 4 + 8 + 8 + 32 || &data[..4] != MATRIX_MAGIC {
            return Err(bad("missing CPVM header"));
        }
        let version = u32::from_le_bytes(data[4..8].try_into().unwrap());
        if version != MATRIX_VERSION {
            return Err(bad("unsupported version"));
        }
        let n_g = u64::from_le_bytes(data[8..16].try_into().unwrap()) as usize;
        let n_p = u64::from_le_bytes(data[16..24].try_into().unwrap()) as usize;
        let provenance = Provenance(data[24..56].try_into().unwrap());
        let row_bytes = n_p.div_ceil(8);
        let expected = 56 + n_g * row_bytes;
        if data.len() != expected {
            return Err(bad("truncated or oversized row data"));
        }
        let mut rows = Vec::with_capacity(n_g);
        for i in 0..n_g {
            let start = 56 + i * row_bytes;
            let row = BitVec::from_bytes(&data[start..start + row_bytes], n_p)
                .ok_or_else(|| bad("dirty padding bits in row"))?;
            rows.push(row);
        }
        Ok(VisibilityMatrix {
            rows,
            n_g,
            n_p,
            provenance,
        })
    }
}
