use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{BitVec, Error, Result, Vec3};

use super::PointCloud;

/// Default cap on total voxel count; exceeding it is an error rather than a
/// silent subsample.
pub const DEFAULT_MAX_VOXELS: usize = 50_000_000;

/// Occupancy grid over a regular 3D lattice. `origin` is the world position
/// of the min-corner of voxel (0,0,0); linear index is
/// `ix + nx * (iy + ny * iz)`.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    origin: Vec3,
    voxel_size: f64,
    dims: [usize; 3],
    occupancy: BitVec,
    /// Unit outward normal per occupied voxel, where one exists.
    normals: HashMap<usize, Vec3>,
}

impl VoxelGrid {
    /// Empty (all-free) grid. Errors when the voxel count exceeds `max_voxels`.
    pub fn new(
        origin: Vec3,
        voxel_size: f64,
        dims: [usize; 3],
        max_voxels: usize,
    ) -> Result<Self> {
        if voxel_size <= 0.0 || !voxel_size.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "voxel_size must be positive, got {voxel_size}"
            )));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("zero grid dim: {dims:?}")));
        }
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or(Error::GridTooLarge {
                requested: usize::MAX,
                cap: max_voxels,
            })?;
        if n > max_voxels {
            return Err(Error::GridTooLarge {
                requested: n,
                cap: max_voxels,
            });
        }
        Ok(VoxelGrid {
            origin,
            voxel_size,
            dims,
            occupancy: BitVec::zeros(n),
            normals: HashMap::new(),
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn n_voxels(&self) -> usize {
        self.occupancy.len()
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.count_ones()
    }

    pub fn occupancy(&self) -> &BitVec {
        &self.occupancy
    }

    /// World position of the grid's max corner.
    pub fn max_corner(&self) -> Vec3 {
        self.origin
            + Vec3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.voxel_size
    }

    #[inline]
    pub fn linear_index(&self, c: [usize; 3]) -> usize {
        c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])
    }

    #[inline]
    pub fn coords_of(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [ix, rest % self.dims[1], rest / self.dims[1]]
    }

    pub fn center_of(&self, idx: usize) -> Vec3 {
        let c = self.coords_of(idx);
        self.origin
            + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.voxel_size
    }

    /// Voxel containing `p` under half-open bins `[min, min + size)` per axis.
    /// Points exactly on the grid's outer max face fold into the last voxel.
    pub fn voxel_containing(&self, p: Vec3) -> Option<[usize; 3]> {
        let mut out = [0usize; 3];
        #[allow(clippy::needless_range_loop)]
        for axis in 0..3 {
            let f = (p.component(axis) - self.origin.component(axis)) / self.voxel_size;
            if f < 0.0 || !f.is_finite() {
                return None;
            }
            let mut i = f.floor() as usize;
            if i >= self.dims[axis] {
                // fold only the exact max face
                if i == self.dims[axis] && f <= self.dims[axis] as f64 {
                    i = self.dims[axis] - 1;
                } else {
                    return None;
                }
            }
            out[axis] = i;
        }
        Some(out)
    }

    #[inline]
    pub fn in_bounds(&self, c: [i64; 3]) -> bool {
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < self.dims[a])
    }

    #[inline]
    pub fn occupied(&self, idx: usize) -> bool {
        self.occupancy.get(idx)
    }

    pub fn set_occupied(&mut self, idx: usize, value: bool) {
        self.occupancy.set(idx, value);
    }

    pub fn normal_of(&self, idx: usize) -> Option<Vec3> {
        self.normals.get(&idx).copied()
    }

    /// Estimate an outward normal for every occupied voxel: the unit vector
    /// from the voxel center toward the centroid of the unoccupied voxels in
    /// its 6-neighborhood (out-of-bounds neighbors count as unoccupied).
    /// Voxels with no unoccupied neighbor, or a degenerate centroid, get none.
    pub fn compute_normals(&mut self) {
        const NB: [[i64; 3]; 6] = [
            [1, 0, 0],
            [-1, 0, 0],
            [0, 1, 0],
            [0, -1, 0],
            [0, 0, 1],
            [0, 0, -1],
        ];
        let mut normals = HashMap::new();
        for idx in self.occupancy.iter_ones() {
            let c = self.coords_of(idx);
            let mut sum = Vec3::ZERO;
            let mut n_free = 0u32;
            for d in NB {
                let nc = [
                    c[0] as i64 + d[0],
                    c[1] as i64 + d[1],
                    c[2] as i64 + d[2],
                ];
                let free = if self.in_bounds(nc) {
                    !self.occupied(
                        self.linear_index([nc[0] as usize, nc[1] as usize, nc[2] as usize]),
                    )
                } else {
                    true
                };
                if free {
                    sum = sum + Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64);
                    n_free += 1;
                }
            }
            if n_free > 0 && sum.norm() > 1e-9 {
                normals.insert(idx, sum.normalized());
            }
        }
        self.normals = normals;
    }
}

/// Voxelize a point cloud: grid bounds are the cloud's AABB padded to whole
/// voxels; a voxel is occupied iff it holds at least `min_points` points.
pub fn voxelize(cloud: &PointCloud, voxel_size: f64, min_points: usize) -> Result<VoxelGrid> {
    voxelize_capped(cloud, voxel_size, min_points, DEFAULT_MAX_VOXELS)
}

pub fn voxelize_capped(
    cloud: &PointCloud,
    voxel_size: f64,
    min_points: usize,
    max_voxels: usize,
) -> Result<VoxelGrid> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if voxel_size <= 0.0 || !voxel_size.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "voxel_size must be positive, got {voxel_size}"
        )));
    }
    if min_points == 0 {
        return Err(Error::InvalidArgument("min_points must be >= 1".into()));
    }
    let mut min = cloud.points[0];
    let mut max = cloud.points[0];
    for p in &cloud.points {
        if !p.is_finite() {
            return Err(Error::InvalidArgument("non-finite point in cloud".into()));
        }
        min = Vec3::new(min.x.min(p.x), min.y.min(p.y), min.z.min(p.z));
        max = Vec3::new(max.x.max(p.x), max.y.max(p.y), max.z.max(p.z));
    }
    let mut dims = [0usize; 3];
    #[allow(clippy::needless_range_loop)]
    for axis in 0..3 {
        let extent = max.component(axis) - min.component(axis);
        dims[axis] = ((extent / voxel_size).ceil() as usize).max(1);
    }
    let mut grid = VoxelGrid::new(min, voxel_size, dims, max_voxels)?;
    let mut hits: HashMap<usize, usize> = HashMap::new();
    for p in &cloud.points {
        // the AABB guarantees containment; max-face points fold inward
        if let Some(c) = grid.voxel_containing(*p) {
            *hits.entry(grid.linear_index(c)).or_insert(0) += 1;
        }
    }
    for (idx, n) in hits {
        if n >= min_points {
            grid.set_occupied(idx, true);
        }
    }
    grid.compute_normals();
    Ok(grid)
}

#[derive(Serialize, Deserialize)]
struct GridHeader {
    origin: [f64; 3],
    voxel_size: f64,
    dims: [usize; 3],
    occupied_count: usize,
}

impl VoxelGrid {
    /// Write the grid file: one line of JSON header, then one line of
    /// comma-separated run lengths over the linear-index bit sequence,
    /// alternating values starting with 0.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let header = GridHeader {
            origin: [self.origin.x, self.origin.y, self.origin.z],
            voxel_size: self.voxel_size,
            dims: self.dims,
            occupied_count: self.occupied_count(),
        };
        let mut runs: Vec<usize> = Vec::new();
        let mut current = false;
        let mut run = 0usize;
        for i in 0..self.n_voxels() {
            let b = self.occupancy.get(i);
            if b == current {
                run += 1;
            } else {
                runs.push(run);
                current = b;
                run = 1;
            }
        }
        runs.push(run);
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let head = serde_json::to_string(&header)
            .map_err(|e| Error::Config(format!("grid header serialization: {e}")))?;
        let body = runs
            .iter()
            .map(|r| r.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(f, "{head}").map_err(|e| Error::io(path, e))?;
        writeln!(f, "{body}").map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Read a grid file written by [`VoxelGrid::write_file`]. Normals are
    /// recomputed from occupancy.
    pub fn read_file(path: &Path) -> Result<VoxelGrid> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(f).lines();
        let bad = |msg: &str| Error::Format {
            path: path.to_path_buf(),
            msg: msg.to_string(),
        };
        let head_line = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| bad("missing header line"))?;
        let header: GridHeader =
            serde_json::from_str(&head_line).map_err(|_| bad("malformed JSON header"))?;
        let body_line = lines
            .next()
            .transpose()
            .map_err(|e| Error::io(path, e))?
            .ok_or_else(|| bad("missing run-length line"))?;
        let mut grid = VoxelGrid::new(
            Vec3::new(header.origin[0], header.origin[1], header.origin[2]),
            header.voxel_size,
            header.dims,
            usize::MAX,
        )?;
        let mut pos = 0usize;
        let mut value = false;
        for tok in body_line.trim().split(',') {
            let run: usize = tok.parse().map_err(|_| bad("bad run length"))?;
            if value {
                for i in pos..pos + run {
                    if i >= grid.n_voxels() {
                        return Err(bad("run lengths exceed grid size"));
                    }
                    grid.set_occupied(i, true);
                }
            }
            pos += run;
            value = !value;
        }
        if pos != grid.n_voxels() {
            return Err(bad("run lengths do not cover the grid"));
        }
        if grid.occupied_count() != header.occupied_count {
            return Err(bad("occupied_count does not match occupancy data"));
        }
        grid.compute_normals();
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(points: Vec<Vec3>) -> PointCloud {
        PointCloud {
            points,
            colors: None,
        }
    }

    #[test]
    fn single_point_single_voxel() {
        let g = voxelize(&cloud(vec![Vec3::new(0.1, 0.1, 0.1)]), 0.25, 1).unwrap();
        assert_eq!(g.dims(), [1, 1, 1]);
        assert!(g.occupied(0));
        assert_eq!(g.occupied_count(), 1);
    }

    #[test]
    fn cube_corners_eight_voxels() {
        let mut pts = Vec::new();
        for x in [0.0, 1.0] {
            for y in [0.0, 1.0] {
                for z in [0.0, 1.0] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        let g = voxelize(&cloud(pts), 0.25, 1).unwrap();
        assert_eq!(g.dims(), [4, 4, 4]);
        assert_eq!(g.occupied_count(), 8);
        // corner bins by hand: 0.0 -> bin 0, 1.0 folds into bin 3
        for c in [[0, 0, 0], [3, 0, 0], [0, 3, 0], [3, 3, 3]] {
            assert!(g.occupied(g.linear_index(c)), "corner {c:?}");
        }
    }

    #[test]
    fn min_points_threshold() {
        let g = voxelize(
            &cloud(vec![Vec3::new(0.1, 0.1, 0.1), Vec3::new(0.1, 0.1, 0.1)]),
            0.25,
            3,
        )
        .unwrap();
        assert_eq!(g.occupied_count(), 0);
    }

    #[test]
    fn empty_cloud_errors() {
        assert!(matches!(
            voxelize(&cloud(vec![]), 0.25, 1),
            Err(Error::EmptyCloud)
        ));
    }

    #[test]
    fn grid_cap_errors() {
        let pts = vec![Vec3::ZERO, Vec3::new(10.0, 10.0, 10.0)];
        assert!(matches!(
            voxelize_capped(&cloud(pts), 0.25, 1, 100),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn index_mapping_is_bijective() {
        let g = VoxelGrid::new(Vec3::ZERO, 0.25, [3, 4, 5], usize::MAX).unwrap();
        for idx in 0..g.n_voxels() {
            assert_eq!(g.linear_index(g.coords_of(idx)), idx);
        }
    }

    #[test]
    fn normals_point_toward_free_space() {
        // single occupied voxel in the middle of a 3x3x3 free grid has a
        // symmetric neighborhood: no normal
        let mut g = VoxelGrid::new(Vec3::ZERO, 0.25, [3, 3, 3], usize::MAX).unwrap();
        let mid = g.linear_index([1, 1, 1]);
        g.set_occupied(mid, true);
        g.compute_normals();
        assert!(g.normal_of(mid).is_none());

        // a voxel with one free neighbor on +x points along +x
        let mut g = VoxelGrid::new(Vec3::ZERO, 0.25, [3, 1, 1], usize::MAX).unwrap();
        for i in 0..2 {
            g.set_occupied(i, true);
        }
        g.compute_normals();
        // voxel 1: free neighbors +x (voxel 2) and +-y, +-z out of bounds...
        // out-of-bounds count as free, so its normal is the +x tilt only when
        // y/z contributions cancel, which they do by symmetry.
        let n = g.normal_of(1).unwrap();
        assert!((n.x - 1.0).abs() < 1e-9, "{n:?}");
        assert!((n.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unit_normals_everywhere() {
        let mut pts = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                pts.push(Vec3::new(i as f64 * 0.25, j as f64 * 0.25, 0.0));
            }
        }
        let g = voxelize(&cloud(pts), 0.25, 1).unwrap();
        for idx in 0..g.n_voxels() {
            if let Some(n) = g.normal_of(idx) {
                assert!((n.norm() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn grid_file_round_trip() {
        let mut pts = vec![Vec3::ZERO, Vec3::new(1.3, 0.9, 0.4)];
        pts.push(Vec3::new(0.6, 0.6, 0.1));
        let g = voxelize(&cloud(pts), 0.25, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.vxg");
        g.write_file(&path).unwrap();
        let r = VoxelGrid::read_file(&path).unwrap();
        assert_eq!(r.dims(), g.dims());
        assert_eq!(r.occupancy(), g.occupancy());
        assert_eq!(r.voxel_size(), g.voxel_size());
    }
}
