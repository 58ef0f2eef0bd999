//! Greedy rounding of a fractional seed to a connected partition.
//!
//! Empty districts are seeded first, in label order, each with the free node
//! of largest seed value for that district. Afterwards the free node/district
//! pair of largest seed value is assigned, restricted to pairs where the node
//! already touches the district. A max-heap over admissible pairs with lazy
//! deletion of assigned nodes keeps each rounding near `O(E k log E)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyGraph, NodeId};
use crate::model::Plan;

/// A point of `[0, 1]^{V x D}`, stored row-major by node.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSeed {
    nodes: usize,
    k: usize,
    values: Vec<f64>,
}

impl FractionalSeed {
    pub fn new(nodes: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nodes * k {
            return Err(Error::DimensionMismatch {
                expected: nodes * k,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::OutOfRange {
                name: "seed entry",
                value: bad.to_string(),
                range: "[0, 1]",
            });
        }
        Ok(Self { nodes, k, values })
    }

    /// Builds a seed from per-node rows of length `k`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(row) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: row.len(),
            });
        }
        Self::new(rows.len(), k, rows.concat())
    }

    /// Every entry 0.5.
    pub fn centroid(nodes: usize, k: usize) -> Self {
        Self {
            nodes,
            k,
            values: vec![0.5; nodes * k],
        }
    }

    /// The 0/1 indicator vector of `plan`.
    pub fn indicator(plan: &Plan) -> Self {
        let k = plan.k();
        let mut values = vec![0.0; plan.node_count() * k];
        for (u, &d) in plan.assignment().iter().enumerate() {
            values[u * k + d] = 1.0;
        }
        Self {
            nodes: plan.node_count(),
            k,
            values,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, u: NodeId, d: usize) -> f64 {
        self.values[u * self.k + d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    // Callers must keep entries in [0, 1].
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    value: f64,
    // Larger wins among equal values.
    tiebreak: u64,
    node: u32,
    district: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.value
            .total_cmp(&other.value)
            .then(self.tiebreak.cmp(&other.tiebreak))
    }
}

enum TieBreak<'a, R> {
    /// Lower node id, then lower district label.
    Ordered { k: u64 },
    Random(&'a mut R),
}

impl<R: Rng> TieBreak<'_, R> {
    fn key(&mut self, node: NodeId, district: usize) -> u64 {
        match self {
            TieBreak::Ordered { k } => u64::MAX - (node as u64 * *k + district as u64),
            TieBreak::Random(rng) => rng.gen(),
        }
    }
}

/// Rounds `seed` to a connected partition of `g` into `k` nonempty districts.
///
/// Exact ties are broken by lower node id, then lower district label.
pub fn round_to_plan(seed: &FractionalSeed, g: &AdjacencyGraph, k: usize) -> Result<Plan> {
    round_inner::<rand_chacha::ChaCha8Rng>(seed, g, k, None, |_, _, _| {})
}

/// As [`round_to_plan`], breaking exact ties uniformly at random.
pub fn round_to_plan_with_ties<R: Rng>(
    seed: &FractionalSeed,
    g: &AdjacencyGraph,
    k: usize,
    tie_rng: &mut R,
) -> Result<Plan> {
    round_inner(seed, g, k, Some(tie_rng), |_, _, _| {})
}

/// Assignment step reported by [`round_traced`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub node: NodeId,
    pub district: usize,
    /// The node opened an empty district.
    pub opened: bool,
}

/// Rounding that also returns the assignment order.
pub fn round_traced(seed: &FractionalSeed, g: &AdjacencyGraph, k: usize) -> Result<(Plan, Vec<Step>)> {
    let mut steps = Vec::with_capacity(g.node_count());
    let plan = round_inner::<rand_chacha::ChaCha8Rng>(seed, g, k, None, |node, district, opened| {
        steps.push(Step { node, district, opened })
    })?;
    Ok((plan, steps))
}

fn round_inner<R: Rng>(
    seed: &FractionalSeed,
    g: &AdjacencyGraph,
    k: usize,
    tie_rng: Option<&mut R>,
    mut on_assign: impl FnMut(NodeId, usize, bool),
) -> Result<Plan> {
    let n = g.node_count();
    if seed.node_count() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: seed.node_count(),
        });
    }
    if seed.k() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: seed.k(),
        });
    }
    if k == 0 {
        return Err(Error::NoDistricts);
    }
    if k > n {
        return Err(Error::TooManyDistricts { k, nodes: n });
    }

    let mut ties = match tie_rng {
        Some(rng) => TieBreak::Random(rng),
        None => TieBreak::Ordered { k: k as u64 },
    };
    const FREE: usize = usize::MAX;
    let mut assignment = vec![FREE; n];
    let mut heap = BinaryHeap::with_capacity(4 * n);

    let push_neighbors = |heap: &mut BinaryHeap<Candidate>,
                          ties: &mut TieBreak<'_, R>,
                          assignment: &[usize],
                          u: NodeId,
                          d: usize| {
        for &x in g.adjacent(u) {
            if assignment[x] == FREE {
                heap.push(Candidate {
                    value: seed.get(x, d),
                    tiebreak: ties.key(x, d),
                    node: x as u32,
                    district: d as u32,
                });
            }
        }
    };

    // Open every district with its best free node.
    for d in 0..k {
        let mut best: Option<Candidate> = None;
        for u in (0..n).filter(|&u| assignment[u] == FREE) {
            let c = Candidate {
                value: seed.get(u, d),
                tiebreak: ties.key(u, d),
                node: u as u32,
                district: d as u32,
            };
            if best.is_none_or(|b| c > b) {
                best = Some(c);
            }
        }
        let u = best.expect("k <= n leaves a free node").node as usize;
        assignment[u] = d;
        on_assign(u, d, true);
    }
    for u in 0..n {
        if assignment[u] != FREE {
            push_neighbors(&mut heap, &mut ties, &assignment, u, assignment[u]);
        }
    }

    let mut remaining = n - k;
    while remaining > 0 {
        let Some(c) = heap.pop() else {
            g.ensure_connected()?;
            unreachable!("a connected graph always has a free node next to some district");
        };
        let (w, d) = (c.node as usize, c.district as usize);
        if assignment[w] != FREE {
            continue;
        }
        assignment[w] = d;
        on_assign(w, d, false);
        remaining -= 1;
        push_neighbors(&mut heap, &mut ties, &assignment, w, d);
    }
    Ok(Plan::from_parts_unchecked(k, assignment))
}
