//! Provenance hashing: every derived artifact (grid, visibility matrix,
//! solution) is keyed by a SHA-256 over its inputs so stale stage outputs
//! are detected instead of silently reused.

use sha2::{Digest, Sha256};

use crate::camera::CandidateSet;
use crate::geometry::{CoverageTarget, VoxelGrid};
use crate::visibility::RaycastConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance(pub [u8; 32]);

impl Provenance {
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Provenance> {
        let bytes = hex::decode(s).ok()?;
        bytes.try_into().ok().map(Provenance)
    }
}

pub struct Hasher(Sha256);

impl Hasher {
    pub fn new(tag: &str) -> Self {
        let mut h = Sha256::new();
        h.update(tag.as_bytes());
        Hasher(h)
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.0.update(v.to_le_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u64(v.len() as u64);
        self.0.update(v);
        self
    }

    pub fn finish(self) -> Provenance {
        Provenance(self.0.finalize().into())
    }
}

pub fn hash_grid(grid: &VoxelGrid) -> Provenance {
    let mut h = Hasher::new("camplace.grid.v1");
    h.f64(grid.origin().x).f64(grid.origin().y).f64(grid.origin().z);
    h.f64(grid.voxel_size());
    for d in grid.dims() {
        h.u64(d as u64);
    }
    h.bytes(&grid.occupancy().to_bytes());
    h.finish()
}

pub fn hash_targets(targets: &CoverageTarget) -> Provenance {
    let mut h = Hasher::new("camplace.targets.v1");
    for e in &targets.entries {
        h.u64(e.voxel as u64).u64(e.gamma as u64);
        h.u64(match e.label {
            crate::geometry::RegionLabel::FreeSpacePlane => 0,
            crate::geometry::RegionLabel::Shelf => 1,
            crate::geometry::RegionLabel::Custom => 2,
        });
    }
    h.finish()
}

pub fn hash_candidates(cands: &CandidateSet) -> Provenance {
    let mut h = Hasher::new("camplace.candidates.v1");
    let i = &cands.intrinsics;
    h.f64(i.hfov_deg).f64(i.vfov_deg).f64(i.max_range);
    h.u64(i.width_px as u64).u64(i.height_px as u64);
    for (p, g) in cands.poses.iter().zip(&cands.location_group) {
        h.f64(p.position.x).f64(p.position.y).f64(p.position.z);
        h.f64(p.yaw_deg).f64(p.pitch_deg).f64(p.roll_deg);
        h.u64(*g as u64);
    }
    h.finish()
}

/// Hash of the full visibility-stage input: grid, targets, candidates and
/// raycast configuration.
pub fn hash_visibility_inputs(
    grid: &VoxelGrid,
    targets: &CoverageTarget,
    cands: &CandidateSet,
    cfg: &RaycastConfig,
) -> Provenance {
    let mut h = Hasher::new("camplace.visibility.v1");
    h.bytes(&hash_grid(grid).0);
    h.bytes(&hash_targets(targets).0);
    h.bytes(&hash_candidates(cands).0);
    h.u64(cfg.pixel_stride as u64);
    h.f64(cfg.max_incidence_deg.unwrap_or(f64::NAN));
    h.f64(cfg.max_range);
    h.finish()
}
