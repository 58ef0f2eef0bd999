//! Problem instances, district plans and the two-phase objective.
//!
//! Population bounds are never rounded: the deviation is an exact decimal
//! fraction and every bound comparison is done on integers scaled by
//! `denom * k`. Scores are exact rationals so that the Phase I penalty
//! (which may carry fractional persons) and the Phase II gerrymander score
//! share one totally ordered type.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, AdjacencyGraph, DistanceMatrix, NodeId};

/// Objective value. Feasible plans score their integer gerrymander score,
/// infeasible ones `M` plus their population excess.
pub type Score = Ratio<i128>;

/// Maximum relative deviation from the mean district population, held as an
/// exact fraction `numer / denom` in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Deviation {
    numer: u64,
    denom: u64,
}

impl Deviation {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 || numer >= denom {
            return Err(Error::InvalidDeviation(format!("{numer}/{denom}")));
        }
        let r = Ratio::new(numer, denom);
        Ok(Self {
            numer: *r.numer(),
            denom: *r.denom(),
        })
    }

    /// `percent(5)` is the usual 5% plan.
    pub fn percent(p: u64) -> Result<Self> {
        Self::new(p, 100)
    }

    pub fn numer(&self) -> u64 {
        self.numer
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn as_ratio(&self) -> Ratio<i128> {
        Ratio::new(i128::from(self.numer), i128::from(self.denom))
    }

    pub fn as_f64(&self) -> f64 {
        self.numer as f64 / self.denom as f64
    }
}

impl Default for Deviation {
    fn default() -> Self {
        Self { numer: 1, denom: 20 }
    }
}

impl FromStr for Deviation {
    type Err = Error;

    /// Parses a plain decimal such as `0.05` or `.5` exactly.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidDeviation(s.to_string());
        let t = s.trim();
        let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) || frac_part.len() > 18 {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
        let frac: u64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
        let denom = 10u64.pow(frac_part.len() as u32);
        let numer = int.checked_mul(denom).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
        Self::new(numer, denom).map_err(|_| bad())
    }
}

impl fmt::Display for Deviation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_f64())
    }
}

/// Graph, distances, district count and the derived population window.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    graph: AdjacencyGraph,
    distances: DistanceMatrix,
    k: usize,
    deviation: Deviation,
    total_population: u64,
    // Bounds scaled by `scale = denom * k`.
    scale: i128,
    lower_scaled: i128,
    upper_scaled: i128,
    big_m: u64,
}

impl ProblemInstance {
    pub fn new(graph: AdjacencyGraph, k: usize, deviation: Deviation) -> Result<Self> {
        if k == 0 {
            return Err(Error::NoDistricts);
        }
        if k > graph.node_count() {
            return Err(Error::TooManyDistricts {
                k,
                nodes: graph.node_count(),
            });
        }
        let distances = all_pairs_distances(&graph)?;
        let total_population = graph.total_population();
        let total = i128::from(total_population);
        let denom = i128::from(deviation.denom);
        let numer = i128::from(deviation.numer);
        let max_row = (0..graph.node_count()).map(|u| distances.row_sum(u)).max().unwrap_or(0);
        Ok(Self {
            graph,
            distances,
            k,
            deviation,
            total_population,
            scale: denom * k as i128,
            lower_scaled: (denom - numer) * total,
            upper_scaled: (denom + numer) * total,
            // One row sum bounds a single district's score; k of them bound a plan.
            big_m: 1 + k as u64 * max_row,
        })
    }

    pub fn graph(&self) -> &AdjacencyGraph {
        &self.graph
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn deviation(&self) -> Deviation {
        self.deviation
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn mean_population(&self) -> Ratio<i128> {
        Ratio::new(i128::from(self.total_population), self.k as i128)
    }

    pub fn min_population(&self) -> Ratio<i128> {
        Ratio::new(self.lower_scaled, self.scale)
    }

    pub fn max_population(&self) -> Ratio<i128> {
        Ratio::new(self.upper_scaled, self.scale)
    }

    /// The constant that separates every feasible score from every
    /// infeasible one.
    pub fn big_m(&self) -> u64 {
        self.big_m
    }

    pub fn population_in_bounds(&self, population: u64) -> bool {
        let p = i128::from(population) * self.scale;
        self.lower_scaled <= p && p <= self.upper_scaled
    }

    /// Distance outside `[p_min, p_max]`, zero when inside.
    pub fn population_excess(&self, population: u64) -> Ratio<i128> {
        let p = i128::from(population) * self.scale;
        let over = (p - self.upper_scaled).max(0);
        let under = (self.lower_scaled - p).max(0);
        Ratio::new(over + under, self.scale)
    }
}

/// Convenience wrapper around [`ProblemInstance::new`].
pub fn make_instance(graph: AdjacencyGraph, k: usize, deviation: Deviation) -> Result<ProblemInstance> {
    ProblemInstance::new(graph, k, deviation)
}

/// A labelling of every node with a district in `0..k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plan {
    k: usize,
    assignment: Vec<usize>,
}

impl Plan {
    pub fn new(k: usize, assignment: Vec<usize>) -> Result<Self> {
        if let Some(&label) = assignment.iter().find(|&&d| d >= k) {
            return Err(Error::LabelOutOfRange { label, k });
        }
        Ok(Self { k, assignment })
    }

    pub(crate) fn from_parts_unchecked(k: usize, assignment: Vec<usize>) -> Self {
        Self { k, assignment }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    #[inline]
    pub fn district_of(&self, u: NodeId) -> usize {
        self.assignment[u]
    }

    /// Node lists per district, each in increasing id order.
    pub fn districts(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.k];
        for (u, &d) in self.assignment.iter().enumerate() {
            out[d].push(u);
        }
        out
    }

    /// `Y(u, d)` of the indicator vector.
    pub fn indicator(&self, u: NodeId, d: usize) -> bool {
        self.assignment[u] == d
    }

    /// Relabels districts in order of first appearance so that plans equal up
    /// to a permutation of labels compare equal.
    pub fn canonical(&self) -> Plan {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&d| {
                if map[d] == usize::MAX {
                    map[d] = next;
                    next += 1;
                }
                map[d]
            })
            .collect();
        Plan { k: self.k, assignment }
    }

    /// Whether every district is nonempty and induces a connected subgraph.
    pub fn is_connected_partition(&self, g: &AdjacencyGraph) -> bool {
        self.districts()
            .iter()
            .all(|nodes| !nodes.is_empty() && g.is_connected_subset(nodes))
    }

    fn check_against(&self, inst: &ProblemInstance) -> Result<()> {
        if self.node_count() != inst.node_count() {
            return Err(Error::DimensionMismatch {
                expected: inst.node_count(),
                found: self.node_count(),
            });
        }
        if self.k != inst.k() {
            return Err(Error::DimensionMismatch {
                expected: inst.k(),
                found: self.k,
            });
        }
        Ok(())
    }
}

/// A district's center and the sum of hop distances from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DistrictScore {
    pub center: NodeId,
    pub score: u64,
}

pub fn district_population(inst: &ProblemInstance, plan: &Plan, d: usize) -> u64 {
    plan.assignment
        .iter()
        .enumerate()
        .filter(|&(_, &label)| label == d)
        .map(|(u, _)| inst.graph().population(u))
        .sum()
}

pub fn district_populations(inst: &ProblemInstance, plan: &Plan) -> Vec<u64> {
    let mut pops = vec![0u64; plan.k];
    for (u, &d) in plan.assignment.iter().enumerate() {
        pops[d] += inst.graph().population(u);
    }
    pops
}

/// Every district connected, nonempty and within the population window.
pub fn is_feasible(inst: &ProblemInstance, plan: &Plan) -> bool {
    if plan.check_against(inst).is_err() {
        return false;
    }
    district_populations(inst, plan)
        .into_iter()
        .all(|p| inst.population_in_bounds(p))
        && plan.is_connected_partition(inst.graph())
}

/// Center minimizing the full-graph distance sum over `nodes`; ties go to the
/// lowest node id.
pub fn district_score(inst: &ProblemInstance, nodes: &[NodeId]) -> Result<DistrictScore> {
    let dist = inst.distances();
    let mut best: Option<DistrictScore> = None;
    for &c in nodes {
        let row = dist.row(c);
        let score: u64 = nodes.iter().map(|&v| u64::from(row[v])).sum();
        let better = match best {
            None => true,
            Some(b) => score < b.score || (score == b.score && c < b.center),
        };
        if better {
            best = Some(DistrictScore { center: c, score });
        }
    }
    best.ok_or(Error::EmptyDistrict)
}

/// Total gerrymander score of a connected partition.
pub fn total_score_phase2(inst: &ProblemInstance, plan: &Plan) -> Result<u64> {
    plan.check_against(inst)?;
    let mut total = 0;
    for (d, nodes) in plan.districts().iter().enumerate() {
        if nodes.is_empty() {
            return Err(Error::EmptyLabel(d));
        }
        if !inst.graph().is_connected_subset(nodes) {
            return Err(Error::DisconnectedDistrict(d));
        }
        total += district_score(inst, nodes)?.score;
    }
    Ok(total)
}

/// Sum over districts of the population above `p_max` or below `p_min`.
pub fn population_excess(inst: &ProblemInstance, plan: &Plan) -> Ratio<i128> {
    district_populations(inst, plan)
        .into_iter()
        .map(|p| inst.population_excess(p))
        .sum()
}

/// Phase I score: `M` plus the population excess.
pub fn infeasibility_score(inst: &ProblemInstance, plan: &Plan) -> Score {
    Score::from(i128::from(inst.big_m())) + population_excess(inst, plan)
}

/// Gerrymander score for feasible plans, infeasibility score otherwise.
pub fn conditional_objective(inst: &ProblemInstance, plan: &Plan) -> Score {
    evaluate(inst, plan).objective
}

/// Per-district figures of a plan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistrictSummary {
    pub label: usize,
    pub population: u64,
    pub node_count: usize,
    pub connected: bool,
    /// `None` for an empty district.
    pub score: Option<DistrictScore>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanEvaluation {
    pub feasible: bool,
    pub objective: Score,
    pub excess: Ratio<i128>,
    pub districts: Vec<DistrictSummary>,
}

impl PlanEvaluation {
    /// Sum of the district gerrymander scores (meaningful when every district
    /// is nonempty).
    pub fn gerrymander_score(&self) -> u64 {
        self.districts.iter().filter_map(|d| d.score).map(|s| s.score).sum()
    }
}

/// Everything the reports need in one pass over the plan.
pub fn evaluate(inst: &ProblemInstance, plan: &Plan) -> PlanEvaluation {
    let pops = district_populations(inst, plan);
    let districts: Vec<DistrictSummary> = plan
        .districts()
        .into_iter()
        .enumerate()
        .map(|(label, nodes)| DistrictSummary {
            label,
            population: pops[label],
            node_count: nodes.len(),
            connected: !nodes.is_empty() && inst.graph().is_connected_subset(&nodes),
            score: district_score(inst, &nodes).ok(),
        })
        .collect();
    let excess: Ratio<i128> = pops.iter().map(|&p| inst.population_excess(p)).sum();
    let feasible = plan.check_against(inst).is_ok()
        && districts.iter().all(|d| d.connected && inst.population_in_bounds(d.population));
    let objective = if feasible {
        Score::from(districts.iter().filter_map(|d| d.score).map(|s| i128::from(s.score)).sum::<i128>())
    } else {
        Score::from(i128::from(inst.big_m())) + excess
    };
    PlanEvaluation {
        feasible,
        objective,
        excess,
        districts,
    }
}
