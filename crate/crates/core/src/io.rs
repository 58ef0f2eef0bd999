//! CSV instance files, assignment files, run reports and synthetic instance
//! generators.
//!
//! Node files have the header `id,population`; edge and patch files have
//! `source,target`. Ids are arbitrary strings (quoted fields are fine), and
//! dense indices follow the row order of the node file.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::arr::{ArrConfig, ArrOutcome};
use crate::error::{Error, GraphError};
use crate::graph::{build_graph, AdjacencyGraph};
use crate::model::{evaluate, Deviation, Plan, PlanEvaluation, ProblemInstance, Score};

#[derive(Error, Debug)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("patch edge `{0}`-`{1}` already present in the edge file")]
    DuplicatePatch(String, String),
    #[error("assignment: node `{0}` missing")]
    MissingAssignment(String),
    #[error("assignment: node `{0}` listed twice")]
    DuplicateAssignment(String),
    #[error("assignment: unknown node `{0}`")]
    UnknownAssignment(String),
    #[error("graph is disconnected: no path between `{a}` and `{b}` (component sizes {sizes:?})")]
    Disconnected { a: String, b: String, sizes: Vec<usize> },
    #[error(transparent)]
    Model(#[from] Error),
}

impl From<GraphError> for InputError {
    fn from(e: GraphError) -> Self {
        InputError::Model(Error::Graph(e))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceFiles {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    pub patches: Option<PathBuf>,
}

impl InstanceFiles {
    /// `nodes.csv` and `edges.csv` inside `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            nodes: dir.join("nodes.csv"),
            edges: dir.join("edges.csv"),
            patches: None,
        }
    }
}

/// An instance together with the external id of every dense node index.
#[derive(Clone, Debug)]
pub struct LoadedInstance {
    pub instance: ProblemInstance,
    pub ids: Vec<String>,
    pub patch_edges: usize,
}

impl LoadedInstance {
    pub fn index_of(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>, InputError> {
    let file = File::open(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn parse_err(path: &Path, err: &csv::Error) -> InputError {
    let line = err.position().map_or(0, |p| p.line());
    InputError::Parse {
        path: path.to_path_buf(),
        line,
        message: err.to_string(),
    }
}

/// Reads two-column rows, skipping the header.
fn read_pairs(path: &Path) -> Result<Vec<(String, String, u64)>, InputError> {
    let mut reader = open_csv(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(path, &e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(InputError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        out.push((record[0].to_string(), record[1].to_string(), line));
    }
    Ok(out)
}

pub fn read_nodes(path: &Path) -> Result<Vec<(String, i64)>, InputError> {
    read_pairs(path)?
        .into_iter()
        .map(|(id, pop, line)| {
            let pop = pop.parse::<i64>().map_err(|e| InputError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("population `{pop}`: {e}"),
            })?;
            Ok((id, pop))
        })
        .collect()
}

pub fn read_edges(path: &Path) -> Result<Vec<(String, String)>, InputError> {
    Ok(read_pairs(path)?.into_iter().map(|(a, b, _)| (a, b)).collect())
}

/// Builds the adjacency graph from the files, applying patch edges.
pub fn load_graph(files: &InstanceFiles) -> Result<(AdjacencyGraph, Vec<String>, usize), InputError> {
    let nodes = read_nodes(&files.nodes)?;
    let mut edges = read_edges(&files.edges)?;
    let mut patch_edges = 0;
    if let Some(path) = &files.patches {
        let patches = read_edges(path)?;
        let existing: HashSet<(&str, &str)> = edges
            .iter()
            .flat_map(|(a, b)| [(a.as_str(), b.as_str()), (b.as_str(), a.as_str())])
            .collect();
        if let Some((a, b)) = patches.iter().find(|(a, b)| existing.contains(&(a.as_str(), b.as_str()))) {
            return Err(InputError::DuplicatePatch(a.clone(), b.clone()));
        }
        patch_edges = patches.len();
        edges.extend(patches);
    }
    let (graph, ids) = build_graph(&nodes, &edges)?;
    let comps = graph.components();
    if comps.len() > 1 {
        return Err(InputError::Disconnected {
            a: ids[comps[0][0]].clone(),
            b: ids[comps[1][0]].clone(),
            sizes: comps.iter().map(Vec::len).collect(),
        });
    }
    Ok((graph, ids, patch_edges))
}

pub fn load_instance(files: &InstanceFiles, k: usize, deviation: Deviation) -> Result<LoadedInstance, InputError> {
    let (graph, ids, patch_edges) = load_graph(files)?;
    let instance = ProblemInstance::new(graph, k, deviation)?;
    Ok(LoadedInstance {
        instance,
        ids,
        patch_edges,
    })
}

fn create(path: &Path) -> Result<csv::Writer<File>, InputError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| InputError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    csv::Writer::from_path(path).map_err(|e| io_from_csv(path, e))
}

fn io_from_csv(path: &Path, e: csv::Error) -> InputError {
    InputError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn write_rows<I>(path: &Path, header: [&str; 2], rows: I) -> Result<(), InputError>
where
    I: IntoIterator<Item = [String; 2]>,
{
    let mut w = create(path)?;
    w.write_record(header).map_err(|e| io_from_csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| io_from_csv(path, e))?;
    }
    w.flush().map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a graph back out as a node file and an edge file.
pub fn write_graph(files: &InstanceFiles, graph: &AdjacencyGraph, ids: &[String]) -> Result<(), InputError> {
    write_rows(
        &files.nodes,
        ["id", "population"],
        ids.iter().zip(graph.populations()).map(|(id, p)| [id.clone(), p.to_string()]),
    )?;
    write_rows(
        &files.edges,
        ["source", "target"],
        graph.edges().map(|(u, v)| [ids[u].clone(), ids[v].clone()]),
    )
}

pub fn write_assignment(path: &Path, plan: &Plan, ids: &[String]) -> Result<(), InputError> {
    write_rows(
        path,
        ["id", "district"],
        plan.assignment().iter().enumerate().map(|(u, d)| [ids[u].clone(), d.to_string()]),
    )
}

/// Reads an `id,district` file; every node must appear exactly once.
pub fn read_assignment(path: &Path, loaded: &LoadedInstance) -> Result<Plan, InputError> {
    let index = loaded.index_of();
    let mut labels: Vec<Option<usize>> = vec![None; loaded.ids.len()];
    for (id, label, line) in read_pairs(path)? {
        let &u = index.get(id.as_str()).ok_or_else(|| InputError::UnknownAssignment(id.clone()))?;
        let d = label.parse::<usize>().map_err(|e| InputError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("district `{label}`: {e}"),
        })?;
        if labels[u].replace(d).is_some() {
            return Err(InputError::DuplicateAssignment(id));
        }
    }
    let assignment = labels
        .iter()
        .enumerate()
        .map(|(u, l)| l.ok_or_else(|| InputError::MissingAssignment(loaded.ids[u].clone())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::new(loaded.instance.k(), assignment)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistrictReport {
    pub label: usize,
    pub population: u64,
    /// External id of the center, empty for an empty district.
    pub center: String,
    pub score: u64,
    pub nodes: usize,
    pub connected: bool,
}

/// Search bookkeeping, present for solver runs only.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchSummary {
    pub rng_seed: u64,
    pub max_trials: usize,
    pub restarts: usize,
    pub total_trials: usize,
    pub first_feasible_trial: Option<usize>,
    pub resets: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunReport {
    pub nodes: usize,
    pub edges: usize,
    pub k: usize,
    pub deviation: Deviation,
    pub min_population: Ratio<i128>,
    pub max_population: Ratio<i128>,
    pub big_m: u64,
    pub total_population: u64,
    pub feasible: bool,
    pub best_score: Score,
    pub gerrymander_score: u64,
    pub population_excess: Ratio<i128>,
    pub districts: Vec<DistrictReport>,
    pub search: Option<SearchSummary>,
}

impl RunReport {
    pub fn for_plan(loaded: &LoadedInstance, plan: &Plan) -> Self {
        let inst = &loaded.instance;
        let eval: PlanEvaluation = evaluate(inst, plan);
        Self {
            nodes: inst.node_count(),
            edges: inst.graph().edge_count(),
            k: inst.k(),
            deviation: inst.deviation(),
            min_population: inst.min_population(),
            max_population: inst.max_population(),
            big_m: inst.big_m(),
            total_population: inst.total_population(),
            feasible: eval.feasible,
            best_score: eval.objective,
            gerrymander_score: eval.gerrymander_score(),
            population_excess: eval.excess,
            districts: eval
                .districts
                .iter()
                .map(|d| DistrictReport {
                    label: d.label,
                    population: d.population,
                    center: d.score.map(|s| loaded.ids[s.center].clone()).unwrap_or_default(),
                    score: d.score.map_or(0, |s| s.score),
                    nodes: d.node_count,
                    connected: d.connected,
                })
                .collect(),
            search: None,
        }
    }

    pub fn for_run(loaded: &LoadedInstance, cfg: &ArrConfig, outcome: &ArrOutcome) -> Self {
        let mut report = Self::for_plan(loaded, &outcome.plan);
        report.search = Some(SearchSummary {
            rng_seed: cfg.rng_seed,
            max_trials: cfg.max_trials,
            restarts: cfg.restarts,
            total_trials: outcome.total_trials(),
            first_feasible_trial: outcome.trace().first_feasible_trial,
            resets: outcome.trace().resets(),
        });
        report
    }

    /// `key=value` lines; rationals print as `n` or `n/d`.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("nodes", &self.nodes);
        kv("edges", &self.edges);
        kv("districts", &self.k);
        kv("deviation", &Ratio::new(self.deviation.numer(), self.deviation.denom()));
        kv("p_min", &self.min_population);
        kv("p_max", &self.max_population);
        kv("big_m", &self.big_m);
        kv("total_population", &self.total_population);
        kv("feasible", &self.feasible);
        kv("best_score", &self.best_score);
        kv("gerrymander_score", &self.gerrymander_score);
        kv("population_excess", &self.population_excess);
        if let Some(search) = &self.search {
            kv("seed", &search.rng_seed);
            kv("max_trials", &search.max_trials);
            kv("restarts", &search.restarts);
            kv("total_trials", &search.total_trials);
            let first = search.first_feasible_trial.map_or("none".to_string(), |t| t.to_string());
            kv("first_feasible_trial", &first);
            kv("resets", &search.resets);
        }
        for d in &self.districts {
            let p = format!("district.{}", d.label);
            kv(&format!("{p}.population"), &d.population);
            kv(&format!("{p}.center"), &d.center);
            kv(&format!("{p}.score"), &d.score);
            kv(&format!("{p}.nodes"), &d.nodes);
            kv(&format!("{p}.connected"), &d.connected);
        }
        s
    }
}

/// Parses `to_kv` output back into key/value pairs.
pub fn parse_kv(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Node and edge rows of a synthetic instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub nodes: Vec<(String, i64)>,
    pub edges: Vec<(String, String)>,
}

impl Generated {
    pub fn write(&self, files: &InstanceFiles) -> Result<(), InputError> {
        write_rows(
            &files.nodes,
            ["id", "population"],
            self.nodes.iter().map(|(id, p)| [id.clone(), p.to_string()]),
        )?;
        write_rows(
            &files.edges,
            ["source", "target"],
            self.edges.iter().map(|(a, b)| [a.clone(), b.clone()]),
        )
    }

    pub fn graph(&self) -> Result<AdjacencyGraph, GraphError> {
        build_graph(&self.nodes, &self.edges).map(|(g, _)| g)
    }
}

/// Inclusive population range for generated nodes; `(1, 1)` gives unit weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PopulationRange {
    pub min: u64,
    pub max: u64,
}

impl PopulationRange {
    pub const UNIT: Self = Self { min: 1, max: 1 };

    fn draw(&self, rng: &mut ChaCha8Rng) -> i64 {
        rng.gen_range(self.min..=self.max) as i64
    }
}

fn check_range(pops: PopulationRange) -> Result<(), Error> {
    if pops.min > pops.max || pops.max > i64::MAX as u64 {
        return Err(Error::OutOfRange {
            name: "population range",
            value: format!("{}..={}", pops.min, pops.max),
            range: "min <= max",
        });
    }
    Ok(())
}

/// `rows x cols` lattice with 4-neighbor edges; ids are row-major indices.
pub fn generate_grid(rows: usize, cols: usize, pops: PopulationRange, seed: u64) -> Result<Generated, Error> {
    if rows == 0 || cols == 0 {
        return Err(Error::OutOfRange {
            name: "grid size",
            value: format!("{rows}x{cols}"),
            range: ">= 1x1",
        });
    }
    check_range(pops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..rows * cols).map(|u| (u.to_string(), pops.draw(&mut rng))).collect();
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let u = r * cols + c;
            if c + 1 < cols {
                edges.push((u.to_string(), (u + 1).to_string()));
            }
            if r + 1 < rows {
                edges.push((u.to_string(), (u + cols).to_string()));
            }
        }
    }
    Ok(Generated { nodes, edges })
}

/// Planar, connected instance on `n` nodes: nodes fill a square-ish lattice
/// row by row, lattice edges are always present, and each complete cell gets
/// one diagonal (random orientation) with probability `diagonal_prob`.
pub fn generate_random_planar(
    n: usize,
    diagonal_prob: f64,
    pops: PopulationRange,
    seed: u64,
) -> Result<Generated, Error> {
    if n == 0 {
        return Err(Error::OutOfRange {
            name: "node count",
            value: n.to_string(),
            range: ">= 1",
        });
    }
    if !(0.0..=1.0).contains(&diagonal_prob) {
        return Err(Error::OutOfRange {
            name: "diagonal probability",
            value: diagonal_prob.to_string(),
            range: "[0, 1]",
        });
    }
    check_range(pops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (n as f64).sqrt().ceil() as usize;
    let nodes = (0..n).map(|u| (u.to_string(), pops.draw(&mut rng))).collect();
    let exists = |u: usize| u < n;
    let mut edges = Vec::new();
    let mut push = |a: usize, b: usize| edges.push((a.to_string(), b.to_string()));
    for u in 0..n {
        let c = u % width;
        if c + 1 < width && exists(u + 1) {
            push(u, u + 1);
        }
        if exists(u + width) {
            push(u, u + width);
        }
        if c + 1 < width && exists(u + width + 1) && rng.gen_bool(diagonal_prob) {
            if rng.gen_bool(0.5) {
                push(u, u + width + 1);
            } else {
                push(u + 1, u + width);
            }
        }
    }
    Ok(Generated { nodes, edges })
}
