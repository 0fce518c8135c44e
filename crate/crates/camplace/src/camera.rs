//! Pinhole camera model, 6-DoF poses and candidate-pose lattice generation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geometry::VoxelGrid;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub width_px: u32,
    pub height_px: u32,
    /// Useful maximum ray length in meters.
    pub max_range: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |f: f64| f > 0.0 && f < 180.0;
        if !fov_ok(self.hfov_deg) || !fov_ok(self.vfov_deg) {
            return Err(Error::InvalidArgument(format!(
                "fov must be in (0, 180), got {} x {}",
                self.hfov_deg, self.vfov_deg
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::InvalidArgument("zero image resolution".into()));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "max_range must be positive and finite, got {}",
                self.max_range
            )));
        }
        Ok(())
    }
}

/// 6-DoF camera pose. At yaw = pitch = roll = 0 the optical axis points
/// along +X world; yaw rotates about world Z, pitch > 0 tilts the axis
/// downward, roll spins about the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose6 {
    pub position: Vec3,
    pub yaw_deg: f64,
    pub pitch_deg: f64,
    pub roll_deg: f64,
}

impl Pose6 {
    pub fn new(position: Vec3, yaw_deg: f64, pitch_deg: f64, roll_deg: f64) -> Self {
        let yaw = yaw_deg.rem_euclid(360.0);
        Pose6 {
            position,
            yaw_deg: yaw,
            pitch_deg,
            roll_deg,
        }
    }

    /// Rotation applied as extrinsic Z (yaw), then camera-local Y (pitch),
    /// then camera-local X (roll): `R = Rz(yaw) * Ry(pitch) * Rx(roll)`.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let (sy, cy) = self.yaw_deg.to_radians().sin_cos();
        let (sp, cp) = self.pitch_deg.to_radians().sin_cos();
        let (sr, cr) = self.roll_deg.to_radians().sin_cos();
        // Rx(roll)
        let v = Vec3::new(v.x, cr * v.y - sr * v.z, sr * v.y + cr * v.z);
        // Ry(pitch); positive pitch maps +X toward -Z (downward)
        let v = Vec3::new(cp * v.x + sp * v.z, v.y, -sp * v.x + cp * v.z);
        // Rz(yaw)
        Vec3::new(cy * v.x - sy * v.y, sy * v.x + cy * v.y, v.z)
    }
}

/// The candidate pool G: one pose per entry, grouped by mounting position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateSet {
    pub intrinsics: CameraIntrinsics,
    pub poses: Vec<Pose6>,
    /// Location-group id per pose; poses sharing a position share a group.
    pub location_group: Vec<u32>,
    pub n_groups: u32,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("candidate serialization: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<CandidateSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

/// Ray through the center of pixel (px, py): origin at the pose position,
/// direction from the tan-projection pinhole mapping rotated by the pose.
/// Image +x maps to world -Y and image +y to world -Z at the identity pose.
pub fn pixel_ray(
    intr: &CameraIntrinsics,
    pose: &Pose6,
    px: u32,
    py: u32,
) -> Result<(Vec3, Vec3)> {
    if px >= intr.width_px || py >= intr.height_px {
        return Err(Error::PixelOutOfRange {
            px,
            py,
            width: intr.width_px,
            height: intr.height_px,
        });
    }
    Ok((pose.position, pixel_direction(intr, pose, px, py)))
}

pub(crate) fn pixel_direction(intr: &CameraIntrinsics, pose: &Pose6, px: u32, py: u32) -> Vec3 {
    let th = (intr.hfov_deg.to_radians() / 2.0).tan();
    let tv = (intr.vfov_deg.to_radians() / 2.0).tan();
    let u = (2.0 * (px as f64 + 0.5) / intr.width_px as f64 - 1.0) * th;
    let v = (2.0 * (py as f64 + 0.5) / intr.height_px as f64 - 1.0) * tv;
    pose.rotate(Vec3::new(1.0, -u, -v).normalized())
}

/// Generate the candidate lattice: one pose per (lattice point, yaw, pitch)
/// at the mount height, roll fixed to 0. Lattice points span the grid's x/y
/// extent inclusive of both faces; points whose voxel is occupied are
/// skipped. Ordering is lattice point (y-major, then x), then yaw ascending,
/// then pitch ascending.
pub fn generate_candidates(
    room: &VoxelGrid,
    spacing: f64,
    mount_height: Option<f64>,
    yaw_step_deg: f64,
    pitch_values_deg: &[f64],
    intr: &CameraIntrinsics,
) -> Result<CandidateSet> {
    intr.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if yaw_step_deg <= 0.0 || (360.0 / yaw_step_deg).fract().abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "yaw step {yaw_step_deg} does not divide 360"
        )));
    }
    if pitch_values_deg.is_empty() {
        return Err(Error::InvalidArgument("empty pitch list".into()));
    }
    let mount_z = match mount_height {
        Some(h) => {
            let max = room.max_corner().z;
            if h < room.origin().z || h > max {
                return Err(Error::HeightOutOfRange(h));
            }
            h
        }
        None => highest_free_slab_center(room).ok_or(Error::NoValidMount)?,
    };

    let n_yaw = (360.0 / yaw_step_deg).round() as usize;
    let yaws: Vec<f64> = (0..n_yaw).map(|k| k as f64 * yaw_step_deg).collect();
    let mut pitches = pitch_values_deg.to_vec();
    pitches.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let extent_x = room.max_corner().x - room.origin().x;
    let extent_y = room.max_corner().y - room.origin().y;
    let n_lat_x = (extent_x / spacing).floor() as usize + 1;
    let n_lat_y = (extent_y / spacing).floor() as usize + 1;

    let mut poses = Vec::new();
    let mut groups = Vec::new();
    let mut group_id = 0u32;
    for iy in 0..n_lat_y {
        for ix in 0..n_lat_x {
            let p = Vec3::new(
                room.origin().x + ix as f64 * spacing,
                room.origin().y + iy as f64 * spacing,
                mount_z,
            );
            let free = room
                .voxel_containing(p)
                .map(|c| !room.occupied(room.linear_index(c)))
                .unwrap_or(false);
            if !free {
                continue;
            }
            for &yaw in &yaws {
                for &pitch in &pitches {
                    poses.push(Pose6::new(p, yaw, pitch, 0.0));
                    groups.push(group_id);
                }
            }
            group_id += 1;
        }
    }
    if poses.is_empty() {
        return Err(Error::NoValidMount);
    }
    Ok(CandidateSet {
        intrinsics: *intr,
        poses,
        location_group: groups,
        n_groups: group_id,
    })
}

/// Center z of the highest slab containing at least one unoccupied voxel.
fn highest_free_slab_center(grid: &VoxelGrid) -> Option<f64> {
    let [nx, ny, nz] = grid.dims();
    for iz in (0..nz).rev() {
        for iy in 0..ny {
            for ix in 0..nx {
                if !grid.occupied(grid.linear_index([ix, iy, iz])) {
                    return Some(grid.origin().z + (iz as f64 + 0.5) * grid.voxel_size());
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn retail_intr() -> CameraIntrinsics {
        CameraIntrinsics {
            hfov_deg: 71.0,
            vfov_deg: 36.0,
            width_px: 1780,
            height_px: 720,
            max_range: 5.0,
        }
    }

    fn identity_pose() -> Pose6 {
        Pose6::new(Vec3::ZERO, 0.0, 0.0, 0.0)
    }

    #[test]
    fn center_pixel_is_optical_axis() {
        let (_o, d) = pixel_ray(&retail_intr(), &identity_pose(), 890, 360).unwrap();
        assert!((d.x - 1.0).abs() < 1e-3, "{d:?}");
        assert!(d.y.abs() < 1e-3 && d.z.abs() < 1e-3);
    }

    #[test]
    fn left_edge_pixel_hits_half_hfov() {
        let intr = retail_intr();
        let (_o, d) = pixel_ray(&intr, &identity_pose(), 0, 360).unwrap();
        // closed-form pinhole angle for the pixel center half a pixel in
        let expect = ((1.0 - 1.0 / 1780.0) * (35.5f64.to_radians()).tan()).atan();
        let got = d.y.atan2(d.x);
        assert!((got - expect).abs() < 1e-9, "got {got}, expect {expect}");
        // and it lands within 0.05 deg of hfov/2 = 35.5
        assert!((got.to_degrees() - 35.5).abs() < 0.05);
        assert!(d.z.abs() < 1e-3);
    }

    #[test]
    fn yaw_rotates_axis() {
        let pose = Pose6::new(Vec3::ZERO, 90.0, 0.0, 0.0);
        let (_o, d) = pixel_ray(&retail_intr(), &pose, 890, 360).unwrap();
        assert!(d.x.abs() < 1e-3 && (d.y - 1.0).abs() < 1e-3 && d.z.abs() < 1e-3);
    }

    #[test]
    fn positive_pitch_tilts_down() {
        let pose = Pose6::new(Vec3::ZERO, 0.0, 45.0, 0.0);
        let (_o, d) = pixel_ray(&retail_intr(), &pose, 890, 360).unwrap();
        assert!(d.z < -0.5, "{d:?}");
    }

    #[test]
    fn pixel_out_of_range_errors() {
        assert!(pixel_ray(&retail_intr(), &identity_pose(), 1780, 0).is_err());
    }

    #[test]
    fn edge_pixel_angles_match_fov() {
        let intr = retail_intr();
        let pose = Pose6::new(Vec3::new(1.0, 2.0, 3.0), 33.0, 12.0, 0.0);
        let (_o, dl) = pixel_ray(&intr, &pose, 0, 360).unwrap();
        let (_o, dr) = pixel_ray(&intr, &pose, 1779, 360).unwrap();
        let angle_h = dl.dot(dr).clamp(-1.0, 1.0).acos().to_degrees();
        assert!((angle_h - 71.0).abs() < 0.2, "h angle {angle_h}");
        let (_o, dt) = pixel_ray(&intr, &pose, 890, 0).unwrap();
        let (_o, db) = pixel_ray(&intr, &pose, 890, 719).unwrap();
        let angle_v = dt.dot(db).clamp(-1.0, 1.0).acos().to_degrees();
        assert!((angle_v - 36.0).abs() < 0.2, "v angle {angle_v}");
    }

    #[test]
    fn directions_are_unit() {
        let intr = retail_intr();
        let pose = Pose6::new(Vec3::ZERO, 123.0, -20.0, 40.0);
        for (px, py) in [(0, 0), (1779, 719), (890, 360), (17, 303)] {
            let (_o, d) = pixel_ray(&intr, &pose, px, py).unwrap();
            assert!((d.norm() - 1.0).abs() < 1e-9);
        }
    }

    fn empty_room(x_m: f64, y_m: f64) -> VoxelGrid {
        VoxelGrid::new(
            Vec3::ZERO,
            0.25,
            [
                (x_m / 0.25) as usize,
                (y_m / 0.25) as usize,
                8,
            ],
            usize::MAX,
        )
        .unwrap()
    }

    #[test]
    fn lattice_counts_in_empty_room() {
        let room = empty_room(4.0, 3.0);
        let intr = retail_intr();
        let cs =
            generate_candidates(&room, 1.0, None, 30.0, &[30.0, 45.0, 60.0], &intr).unwrap();
        assert_eq!(cs.n_groups, 20); // 5 x 4 lattice
        assert_eq!(cs.len(), 20 * 12 * 3);
    }

    #[test]
    fn single_orientation_gives_one_pose_per_location() {
        let room = empty_room(4.0, 3.0);
        let cs = generate_candidates(&room, 1.0, None, 360.0, &[45.0], &retail_intr()).unwrap();
        assert_eq!(cs.len(), cs.n_groups as usize);
        assert_eq!(cs.len(), 20);
    }

    #[test]
    fn fully_occupied_mount_slab_errors() {
        let mut room = empty_room(4.0, 3.0);
        for i in 0..room.n_voxels() {
            room.set_occupied(i, true);
        }
        assert!(matches!(
            generate_candidates(&room, 1.0, None, 30.0, &[45.0], &retail_intr()),
            Err(Error::NoValidMount)
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let room = empty_room(4.0, 3.0);
        let a = generate_candidates(&room, 1.0, None, 90.0, &[60.0, 30.0], &retail_intr()).unwrap();
        let b = generate_candidates(&room, 1.0, None, 90.0, &[60.0, 30.0], &retail_intr()).unwrap();
        assert_eq!(a.poses.len(), b.poses.len());
        for (pa, pb) in a.poses.iter().zip(&b.poses) {
            assert_eq!(pa, pb);
        }
        // pitch list is sorted before enumeration
        assert_eq!(a.poses[0].pitch_deg, 30.0);
        assert_eq!(a.poses[1].pitch_deg, 60.0);
    }
}
