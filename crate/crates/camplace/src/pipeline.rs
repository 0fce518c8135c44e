//! End-to-end driver: config file -> voxel grid -> coverage targets ->
//! candidate poses -> visibility matrix -> solver sweep -> metrics.
//!
//! Every artifact is written to the output directory with a provenance
//! hash, and stages are skipped when an existing artifact already matches
//! the hash of its inputs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::camera::{generate_candidates, CameraIntrinsics, CandidateSet, Pose6};
use crate::geometry::{
    build_free_space_targets, label_shelf_targets, load_point_cloud, rasterize_scene, voxelize,
    CloudFormat, CoverageTarget, SceneSpec, VoxelGrid,
};
use crate::objective::{
    coverage_counts, coverage_gap, deficit_cost_of_counts, nontriangulatable_fraction, Selection,
};
use crate::provenance::hash_visibility_inputs;
use crate::solvers::{solve, Method, ProblemInstance, SolverConfig, SolverReport, SolverStatus};
use crate::visibility::{build_matrix, prune_blocked, RaycastConfig, VisibilityMatrix};
use crate::{Error, Result};

/// Where the occupancy grid comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SceneSource {
    /// Synthetic scene description file (JSON).
    Spec { path: PathBuf },
    /// Point cloud to voxelize.
    Cloud {
        path: PathBuf,
        format: CloudFormat,
        voxel_size: f64,
        #[serde(default = "default_min_points")]
        min_points: usize,
    },
}

fn default_min_points() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetSpec {
    /// Heights (m) of the free-space traversal planes.
    pub plane_heights: Vec<f64>,
    #[serde(default = "default_gamma")]
    pub plane_gamma: u32,
    /// Desired coverage for shelf voxels; omit to skip shelf targets.
    #[serde(default)]
    pub shelf_gamma: Option<u32>,
    /// Shelf regions are taken from the scene spec when the source is a
    /// spec; for point clouds list the boxes here.
    #[serde(default)]
    pub shelf_boxes: Vec<crate::geometry::AabbSpec>,
}

fn default_gamma() -> u32 {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Mount lattice spacing in meters.
    pub spacing: f64,
    /// Fixed mount height; omit to use the highest free slab.
    #[serde(default)]
    pub mount_height: Option<f64>,
    pub yaw_step_deg: f64,
    pub pitch_values_deg: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RaycastSpec {
    /// Pixel sampling stride; omit for the voxel-resolution default.
    #[serde(default)]
    pub pixel_stride: Option<usize>,
    #[serde(default)]
    pub max_incidence_deg: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSpec {
    pub methods: Vec<Method>,
    /// Budgets to sweep, one solve per (method, budget).
    pub budgets: Vec<usize>,
    #[serde(default = "default_time_budget")]
    pub time_budget_s: f64,
    #[serde(default = "default_gamma")]
    pub gamma_max: u32,
    #[serde(default)]
    pub max_nodes: Option<u64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_time_budget() -> f64 {
    6000.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub scene: SceneSource,
    pub targets: TargetSpec,
    pub camera: CameraIntrinsics,
    pub lattice: LatticeSpec,
    #[serde(default)]
    pub raycast: Option<RaycastSpec>,
    pub solve: SolveSpec,
}

impl PipelineConfig {
    /// Load from TOML or JSON, chosen by file extension.
    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| Error::Config(format!(
                "{}: {e}",
                path.display()
            )))?,
            _ => toml::from_str(&text).map_err(|e| Error::Config(format!(
                "{}: {e}",
                path.display()
            )))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        if self.targets.plane_heights.is_empty() && self.targets.shelf_gamma.is_none() {
            return Err(Error::Config("no coverage targets configured".into()));
        }
        if self.targets.plane_gamma == 0 {
            return Err(Error::Config("plane_gamma must be >= 1".into()));
        }
        if self.solve.methods.is_empty() || self.solve.budgets.is_empty() {
            return Err(Error::Config("solve.methods and solve.budgets must be non-empty".into()));
        }
        if self.solve.budgets.contains(&0) {
            return Err(Error::Config("budgets must be >= 1".into()));
        }
        Ok(())
    }

    pub fn raycast_config(&self, voxel_size: f64) -> RaycastConfig {
        let spec = self.raycast.clone().unwrap_or(RaycastSpec {
            pixel_stride: None,
            max_incidence_deg: None,
        });
        let mut rc = RaycastConfig::for_intrinsics(&self.camera, voxel_size, spec.max_incidence_deg);
        if let Some(s) = spec.pixel_stride {
            rc.pixel_stride = s;
        }
        rc
    }
}

/// On-disk layout of one pipeline run.
pub struct Workspace {
    pub out_dir: PathBuf,
}

impl Workspace {
    pub fn new(out_dir: &Path) -> Result<Workspace> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(Workspace {
            out_dir: out_dir.to_path_buf(),
        })
    }

    pub fn grid_path(&self) -> PathBuf {
        self.out_dir.join("grid.rle")
    }
    pub fn targets_path(&self) -> PathBuf {
        self.out_dir.join("targets.json")
    }
    pub fn candidates_path(&self) -> PathBuf {
        self.out_dir.join("candidates.json")
    }
    pub fn matrix_path(&self) -> PathBuf {
        self.out_dir.join("visibility.cpvm")
    }
    pub fn solution_path(&self, method: Method, budget: usize) -> PathBuf {
        self.out_dir
            .join(format!("solution_{}_{budget}.json", method.name()))
    }
    pub fn sweep_path(&self) -> PathBuf {
        self.out_dir.join("sweep.csv")
    }
    pub fn timing_path(&self) -> PathBuf {
        self.out_dir.join("timings.log")
    }
    pub fn metrics_path(&self, method: Method, budget: usize) -> PathBuf {
        self.out_dir
            .join(format!("metrics_{}_{budget}.json", method.name()))
    }
    pub fn counts_path(&self, method: Method, budget: usize) -> PathBuf {
        self.out_dir
            .join(format!("counts_{}_{budget}.csv", method.name()))
    }
}

/// Solver output as persisted: deterministic fields only. Wall-clock time
/// goes to the timing log so repeated runs produce byte-identical files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionFile {
    pub method: Method,
    pub budget: usize,
    pub selected: Vec<usize>,
    pub poses: Vec<Pose6>,
    pub objective: u64,
    pub best_bound: u64,
    pub status: SolverStatus,
    pub nodes_explored: u64,
    pub coverage_gap: f64,
    pub nontriangulatable_fraction: f64,
    /// Hex hash of the visibility matrix this solution was computed from.
    pub matrix_provenance: String,
}

impl SolutionFile {
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_file(path: &Path) -> Result<SolutionFile> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

fn write_targets(targets: &CoverageTarget, path: &Path) -> Result<()> {
    let text = serde_json::to_string(targets).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_targets(path: &Path) -> Result<CoverageTarget> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

/// Build (or reload) the grid and target set, writing both to the
/// workspace. Returns the artifacts for downstream stages.
pub fn cmd_ingest(cfg: &PipelineConfig, ws: &Workspace) -> Result<(VoxelGrid, CoverageTarget)> {
    let grid = match &cfg.scene {
        SceneSource::Spec { path } => {
            let spec = SceneSpec::from_file(path)?;
            rasterize_scene(&spec)?
        }
        SceneSource::Cloud {
            path,
            format,
            voxel_size,
            min_points,
        } => {
            let cloud = load_point_cloud(path, *format)?;
            voxelize(&cloud, *voxel_size, *min_points)?
        }
    };
    let mut sets = Vec::new();
    if !cfg.targets.plane_heights.is_empty() {
        sets.push(build_free_space_targets(
            &grid,
            &cfg.targets.plane_heights,
            cfg.targets.plane_gamma,
        )?);
    }
    if let Some(g) = cfg.targets.shelf_gamma {
        let boxes: Vec<_> = match &cfg.scene {
            SceneSource::Spec { path } if cfg.targets.shelf_boxes.is_empty() => {
                SceneSpec::from_file(path)?.shelf_boxes()
            }
            _ => cfg
                .targets
                .shelf_boxes
                .iter()
                .map(|b| (b.min_vec(), b.max_vec()))
                .collect(),
        };
        if boxes.is_empty() {
            return Err(Error::Config(
                "shelf_gamma set but no shelf boxes available".into(),
            ));
        }
        sets.push(label_shelf_targets(&grid, &boxes, g)?);
    }
    let targets = CoverageTarget::merge(&sets)?;
    if targets.is_empty() {
        return Err(Error::EmptyTargets);
    }
    grid.write_file(&ws.grid_path())?;
    write_targets(&targets, &ws.targets_path())?;
    Ok((grid, targets))
}

/// Generate the candidate poses and write them to the workspace.
pub fn cmd_candidates(
    cfg: &PipelineConfig,
    ws: &Workspace,
    grid: &VoxelGrid,
) -> Result<CandidateSet> {
    let cands = generate_candidates(
        grid,
        cfg.lattice.spacing,
        cfg.lattice.mount_height,
        cfg.lattice.yaw_step_deg,
        &cfg.lattice.pitch_values_deg,
        &cfg.camera,
    )?;
    cands.write_file(&ws.candidates_path())?;
    Ok(cands)
}

/// Raycast the visibility matrix, reusing a cached file when its stored
/// provenance matches the current inputs. Blocked candidates are pruned and
/// the pruned candidate set is written back.
pub fn cmd_visibility(
    cfg: &PipelineConfig,
    ws: &Workspace,
    grid: &VoxelGrid,
    targets: &CoverageTarget,
    cands: &CandidateSet,
) -> Result<(CandidateSet, VisibilityMatrix)> {
    let rc = cfg.raycast_config(grid.voxel_size());
    let want = hash_visibility_inputs(grid, targets, cands, &rc);
    let path = ws.matrix_path();
    let matrix = match VisibilityMatrix::read_file(&path) {
        Ok(m) if m.provenance == want && m.n_g == cands.len() => m,
        _ => {
            let m = build_matrix(grid, targets, cands, &rc)?;
            m.write_file(&path)?;
            m
        }
    };
    let (kept, pruned) = prune_blocked(cands, &matrix)?;
    kept.write_file(&ws.candidates_path())?;
    Ok((kept, pruned))
}

/// One sweep row: metrics of a single (method, budget) solve.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub method: Method,
    pub budget: usize,
    pub objective: u64,
    pub coverage_gap: f64,
    pub nontriangulatable_fraction: f64,
    pub status: SolverStatus,
    pub nodes: u64,
    pub elapsed_s: f64,
}

fn status_name(s: SolverStatus) -> &'static str {
    match s {
        SolverStatus::Optimal => "optimal",
        SolverStatus::TimeLimitIncumbent => "time-limit-incumbent",
        SolverStatus::Heuristic => "heuristic",
        SolverStatus::Infeasible => "infeasible",
    }
}

fn solution_from_report(
    rep: &SolverReport,
    matrix: &VisibilityMatrix,
    gamma: &[u32],
    cands: &CandidateSet,
) -> Result<SolutionFile> {
    let sel = rep.selection(matrix.n_g)?;
    Ok(SolutionFile {
        method: rep.method,
        budget: rep.budget,
        selected: rep.selected.clone(),
        poses: rep.selected.iter().map(|&i| cands.poses[i]).collect(),
        objective: rep.objective,
        best_bound: rep.best_bound,
        status: rep.status,
        nodes_explored: rep.nodes_explored,
        coverage_gap: coverage_gap(matrix, &sel, gamma)?,
        nontriangulatable_fraction: nontriangulatable_fraction(matrix, &sel)?,
        matrix_provenance: matrix.provenance.to_hex(),
    })
}

/// Run the configured sweep: every method at every budget. Writes one
/// solution file per solve, a CSV of the sweep, and the timing log.
pub fn cmd_solve(
    cfg: &PipelineConfig,
    ws: &Workspace,
    cands: &CandidateSet,
    matrix: &VisibilityMatrix,
    targets: &CoverageTarget,
) -> Result<Vec<SweepRow>> {
    let gamma = targets.gamma_values();
    let inst = ProblemInstance::new(matrix, &gamma, &cands.location_group)?;
    let mut rows = Vec::new();
    let mut timing = String::new();
    for &budget in &cfg.solve.budgets {
        for &method in &cfg.solve.methods {
            let scfg = SolverConfig {
                budget,
                time_budget_s: cfg.solve.time_budget_s,
                gamma_max: cfg.solve.gamma_max,
                seed: cfg.solve.seed,
                max_nodes: cfg.solve.max_nodes,
            };
            let rep = solve(&inst, method, &scfg)?;
            let sol = solution_from_report(&rep, matrix, &gamma, cands)?;
            sol.write_file(&ws.solution_path(method, budget))?;
            timing.push_str(&format!(
                "{} budget={budget} elapsed_s={:.3} nodes={}\n",
                method.name(),
                rep.elapsed_s,
                rep.nodes_explored
            ));
            rows.push(SweepRow {
                method,
                budget,
                objective: rep.objective,
                coverage_gap: sol.coverage_gap,
                nontriangulatable_fraction: sol.nontriangulatable_fraction,
                status: rep.status,
                nodes: rep.nodes_explored,
                elapsed_s: rep.elapsed_s,
            });
        }
    }
    let mut csv = String::from(
        "method,n_s,objective,coverage_gap,nontriangulatable_fraction,status,nodes\n",
    );
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{:.6},{:.6},{},{}\n",
            r.method.name(),
            r.budget,
            r.objective,
            r.coverage_gap,
            r.nontriangulatable_fraction,
            status_name(r.status),
            r.nodes
        ));
    }
    fs::write(ws.sweep_path(), csv).map_err(|e| Error::io(ws.sweep_path(), e))?;
    let mut log = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(ws.timing_path())
        .map_err(|e| Error::io(ws.timing_path(), e))?;
    log.write_all(timing.as_bytes())
        .map_err(|e| Error::io(ws.timing_path(), e))?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsFile {
    pub deficit_cost: u64,
    pub coverage_gap: f64,
    pub nontriangulatable_fraction: f64,
    pub per_voxel_counts_path: PathBuf,
}

/// Recompute the metrics of a stored solution against the stored matrix,
/// verifying provenance, and write a per-voxel count table
/// (`x,y,z,count` rows in world coordinates).
pub fn cmd_evaluate(ws: &Workspace, method: Method, budget: usize) -> Result<MetricsFile> {
    let sol = SolutionFile::read_file(&ws.solution_path(method, budget))?;
    let matrix = VisibilityMatrix::read_file(&ws.matrix_path())?;
    if sol.matrix_provenance != matrix.provenance.to_hex() {
        return Err(Error::ProvenanceMismatch(format!(
            "solution built from matrix {} but stored matrix is {}",
            sol.matrix_provenance,
            matrix.provenance.to_hex()
        )));
    }
    let grid = VoxelGrid::read_file(&ws.grid_path())?;
    let targets = read_targets(&ws.targets_path())?;
    let gamma = targets.gamma_values();
    let voxels = targets.voxel_indices();
    let sel = Selection::from_indices(matrix.n_g, sol.budget.max(sol.selected.len()), &sol.selected)?;
    let counts = coverage_counts(&matrix, &sel)?;
    let counts_path = ws.counts_path(method, budget);
    let mut csv = String::from("x,y,z,count\n");
    for (slot, &v) in voxels.iter().enumerate() {
        let c = grid.center_of(v);
        csv.push_str(&format!("{},{},{},{}\n", c.x, c.y, c.z, counts[slot]));
    }
    fs::write(&counts_path, csv).map_err(|e| Error::io(&counts_path, e))?;
    let metrics = MetricsFile {
        deficit_cost: deficit_cost_of_counts(&counts, &gamma),
        coverage_gap: coverage_gap(&matrix, &sel, &gamma)?,
        nontriangulatable_fraction: nontriangulatable_fraction(&matrix, &sel)?,
        per_voxel_counts_path: counts_path.clone(),
    };
    let path = ws.metrics_path(method, budget);
    let text = serde_json::to_string_pretty(&metrics).map_err(|e| Error::Format {
        path: path.clone(),
        msg: e.to_string(),
    })?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(metrics)
}

/// Complete run: ingest, candidates, visibility, sweep.
pub fn run_pipeline(cfg: &PipelineConfig, out_dir: &Path) -> Result<Vec<SweepRow>> {
    let ws = Workspace::new(out_dir)?;
    let (grid, targets) = cmd_ingest(cfg, &ws)?;
    let cands = cmd_candidates(cfg, &ws, &grid)?;
    let (kept, matrix) = cmd_visibility(cfg, &ws, &grid, &targets, &cands)?;
    cmd_solve(cfg, &ws, &kept, &matrix, &targets)
}
