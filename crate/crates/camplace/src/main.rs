use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use camplace::pipeline::{
    cmd_candidates, cmd_evaluate, cmd_ingest, cmd_solve, cmd_visibility, PipelineConfig, Workspace,
};
use camplace::solvers::{build_mip, export_lp, Method, ProblemInstance, SolverConfig};
use camplace::Error;

#[derive(Parser)]
#[command(name = "camplace", version, about = "Budget-constrained camera placement over voxel grids")]
struct Cli {
    /// Pipeline configuration file (TOML or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for all artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Rayon thread count (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Override the solver wall-clock budget in seconds.
    #[arg(long, global = true)]
    time_budget: Option<f64>,

    /// Override the solver tie-break seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    ProposedMip,
    ProposedGreedy,
    GreedyBinary,
    ZhaoMip,
    Exhaustive,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::ProposedMip => Method::ProposedMip,
            MethodArg::ProposedGreedy => Method::ProposedGreedy,
            MethodArg::GreedyBinary => Method::GreedyBinary,
            MethodArg::ZhaoMip => Method::ZhaoMip,
            MethodArg::Exhaustive => Method::Exhaustive,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize the scene and build the coverage targets.
    Ingest,
    /// Generate the candidate pose lattice (requires a prior ingest).
    Candidates,
    /// Raycast the visibility matrix (runs ingest + candidates as needed).
    Visibility,
    /// Run the configured solver sweep end to end.
    Solve,
    /// Recompute metrics for a stored solution.
    Evaluate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long)]
        budget: usize,
    },
    /// Write the mixed-integer model in CPLEX LP format.
    ExportLp {
        #[arg(long)]
        budget: usize,
        /// Output path for the .lp file.
        #[arg(long)]
        lp_out: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config is required for this command".into()))?;
    let mut cfg = PipelineConfig::from_file(path)?;
    if let Some(t) = cli.time_budget {
        cfg.solve.time_budget_s = t;
    }
    if let Some(s) = cli.seed {
        cfg.solve.seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let ws = Workspace::new(&cli.out)?;
    match &cli.command {
        Command::Ingest => {
            let cfg = load_config(cli)?;
            let (grid, targets) = cmd_ingest(&cfg, &ws)?;
            let [nx, ny, nz] = grid.dims();
            println!(
                "grid {nx}x{ny}x{nz} ({} occupied), {} target voxels",
                grid.occupied_count(),
                targets.len()
            );
        }
        Command::Candidates => {
            let cfg = load_config(cli)?;
            let (grid, _) = cmd_ingest(&cfg, &ws)?;
            let cands = cmd_candidates(&cfg, &ws, &grid)?;
            println!("{} candidate poses in {} groups", cands.len(), cands.n_groups);
        }
        Command::Visibility => {
            let cfg = load_config(cli)?;
            let (grid, targets) = cmd_ingest(&cfg, &ws)?;
            let cands = cmd_candidates(&cfg, &ws, &grid)?;
            let (kept, matrix) = cmd_visibility(&cfg, &ws, &grid, &targets, &cands)?;
            println!(
                "visibility matrix {}x{} ({} candidates kept of {})",
                matrix.n_g,
                matrix.n_p,
                kept.len(),
                cands.len()
            );
        }
        Command::Solve => {
            let cfg = load_config(cli)?;
            let (grid, targets) = cmd_ingest(&cfg, &ws)?;
            let cands = cmd_candidates(&cfg, &ws, &grid)?;
            let (kept, matrix) = cmd_visibility(&cfg, &ws, &grid, &targets, &cands)?;
            let rows = cmd_solve(&cfg, &ws, &kept, &matrix, &targets)?;
            for r in &rows {
                println!(
                    "{} n_s={} objective={} gap={:.4} nontriangulatable={:.4}",
                    r.method.name(),
                    r.budget,
                    r.objective,
                    r.coverage_gap,
                    r.nontriangulatable_fraction
                );
            }
        }
        Command::Evaluate { method, budget } => {
            let m = cmd_evaluate(&ws, (*method).into(), *budget)?;
            println!(
                "deficit={} gap={:.4} nontriangulatable={:.4} counts={}",
                m.deficit_cost,
                m.coverage_gap,
                m.nontriangulatable_fraction,
                m.per_voxel_counts_path.display()
            );
        }
        Command::ExportLp { budget, lp_out } => {
            let cfg = load_config(cli)?;
            let (grid, targets) = cmd_ingest(&cfg, &ws)?;
            let cands = cmd_candidates(&cfg, &ws, &grid)?;
            let (kept, matrix) = cmd_visibility(&cfg, &ws, &grid, &targets, &cands)?;
            let gamma = targets.gamma_values();
            let inst = ProblemInstance::new(&matrix, &gamma, &kept.location_group)?;
            let mut scfg = SolverConfig::new(*budget);
            scfg.gamma_max = cfg.solve.gamma_max;
            let model = build_mip(&inst, &scfg)?;
            let lp = export_lp(&model)?;
            std::fs::write(lp_out, lp).map_err(|e| Error::io(lp_out, e))?;
            println!("wrote {}", lp_out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Infeasible(msg)) => {
            eprintln!("infeasible: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
