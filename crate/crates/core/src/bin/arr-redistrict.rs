use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use arr_redistrict::arr::{run_arr, ArrConfig, PerturbationMode};
use arr_redistrict::io::{
    generate_grid, generate_random_planar, load_instance, read_assignment, write_assignment, InputError,
    InstanceFiles, PopulationRange, RunReport,
};
use arr_redistrict::model::Deviation;
use clap::{Args, Parser, Subcommand};

const EXIT_INPUT: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "arr-redistrict", version, about = "Contiguous, population-balanced districting by adaptive randomized rounding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for a compact feasible plan.
    Solve(SolveArgs),
    /// Evaluate an existing assignment file.
    Score(ScoreArgs),
    /// Write a synthetic instance.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// CSV with header `id,population`.
    #[arg(long)]
    nodes: PathBuf,
    /// CSV with header `source,target`.
    #[arg(long)]
    edges: PathBuf,
    /// Extra `source,target` edges joining otherwise disconnected pieces.
    #[arg(long)]
    patches: Option<PathBuf>,
    /// Number of districts.
    #[arg(long)]
    districts: usize,
    /// Maximum relative deviation from the mean district population.
    #[arg(long, default_value = "0.05")]
    deviation: Deviation,
}

impl InstanceArgs {
    fn files(&self) -> InstanceFiles {
        InstanceFiles {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            patches: self.patches.clone(),
        }
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 1000)]
    max_trials: usize,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives `assignment.csv` and `report.txt`.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Perturbation: `down` draws U[0, y], `up` draws U[y, 1].
    #[arg(long, default_value = "down")]
    mode: PerturbationMode,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// CSV with header `id,district`.
    #[arg(long)]
    assignment: PathBuf,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenCommon {
    #[arg(long, default_value_t = 1)]
    pop_min: u64,
    #[arg(long, default_value_t = 1)]
    pop_max: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives `nodes.csv` and `edges.csv`.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Rows x cols lattice.
    Grid {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Lattice with random cell diagonals.
    RandomPlanar {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value_t = 0.95)]
        diagonal_prob: f64,
        #[command(flatten)]
        common: GenCommon,
    },
}

fn write_text(path: &Path, text: &str) -> Result<(), InputError> {
    std::fs::write(path, text).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn solve(args: &SolveArgs) -> Result<bool, InputError> {
    let started = Instant::now();
    let loaded = load_instance(&args.instance.files(), args.instance.districts, args.instance.deviation)?;
    let cfg = ArrConfig {
        max_trials: args.max_trials,
        mode: args.mode,
        rng_seed: args.seed,
        restarts: args.restarts,
        ..ArrConfig::default()
    };
    let outcome = run_arr(&loaded.instance, &cfg)?;
    let report = RunReport::for_run(&loaded, &cfg, &outcome);
    std::fs::create_dir_all(&args.out_dir).map_err(|source| InputError::Io {
        path: args.out_dir.clone(),
        source,
    })?;
    write_assignment(&args.out_dir.join("assignment.csv"), &outcome.plan, &loaded.ids)?;
    let text = report.to_kv();
    write_text(&args.out_dir.join("report.txt"), &text)?;
    print!("{text}");
    eprintln!(
        "{} trials in {:.3}s; best score {} ({})",
        outcome.total_trials(),
        started.elapsed().as_secs_f64(),
        report.best_score,
        if report.feasible { "feasible" } else { "infeasible" }
    );
    Ok(report.feasible)
}

fn score(args: &ScoreArgs) -> Result<bool, InputError> {
    let loaded = load_instance(&args.instance.files(), args.instance.districts, args.instance.deviation)?;
    let plan = read_assignment(&args.assignment, &loaded)?;
    let report = RunReport::for_plan(&loaded, &plan);
    let text = report.to_kv();
    if let Some(out) = &args.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(report.feasible)
}

fn generate(kind: &GenKind) -> Result<(), InputError> {
    let (generated, common) = match kind {
        GenKind::Grid { rows, cols, common } => {
            let pops = PopulationRange {
                min: common.pop_min,
                max: common.pop_max,
            };
            (generate_grid(*rows, *cols, pops, common.seed)?, common)
        }
        GenKind::RandomPlanar {
            nodes,
            diagonal_prob,
            common,
        } => {
            let pops = PopulationRange {
                min: common.pop_min,
                max: common.pop_max,
            };
            (generate_random_planar(*nodes, *diagonal_prob, pops, common.seed)?, common)
        }
    };
    let files = InstanceFiles::in_dir(&common.out_dir);
    generated.write(&files)?;
    println!("nodes={}", generated.nodes.len());
    println!("edges={}", generated.edges.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(EXIT_INPUT) };
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Score(args) => score(args),
        Command::Gen { kind } => generate(kind).map(|()| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_INFEASIBLE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
