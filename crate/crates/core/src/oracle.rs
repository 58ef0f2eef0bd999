//! Exhaustive ground truth for tiny instances.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{AdjacencyGraph, NodeId};
use crate::model::{is_feasible, total_score_phase2, Plan, ProblemInstance};

/// Largest graph the pruned enumeration accepts.
pub const ENUMERATION_LIMIT: usize = 16;
/// Largest graph the label-vector filter accepts.
pub const FILTER_LIMIT: usize = 10;

/// Visits every labelled partition of `g` into `k` nonempty connected
/// districts exactly once.
///
/// Nodes are labelled in BFS order; a branch is cut as soon as some district
/// has a component that can no longer grow while another piece of the same
/// district exists, or when too few nodes remain to open the unused labels.
pub fn for_each_connected_partition(g: &AdjacencyGraph, k: usize, mut visit: impl FnMut(&Plan)) -> Result<()> {
    let n = g.node_count();
    if n > ENUMERATION_LIMIT {
        return Err(Error::TooLargeForOracle {
            nodes: n,
            limit: ENUMERATION_LIMIT,
        });
    }
    if k == 0 {
        return Err(Error::NoDistricts);
    }
    if k > n {
        return Ok(());
    }
    let order = bfs_order(g);
    let mut labels = vec![usize::MAX; n];
    let mut used = vec![0usize; k];
    let mut search = Search {
        g,
        k,
        order: &order,
        labels: &mut labels,
        used: &mut used,
    };
    search.descend(0, &mut visit);
    Ok(())
}

/// Collects [`for_each_connected_partition`] into a vector.
pub fn enumerate_connected_partitions(g: &AdjacencyGraph, k: usize) -> Result<Vec<Plan>> {
    let mut out = Vec::new();
    for_each_connected_partition(g, k, |p| out.push(p.clone()))?;
    Ok(out)
}

/// The dumb second oracle: every `k^n` label vector, filtered.
pub fn enumerate_by_label_filter(g: &AdjacencyGraph, k: usize) -> Result<Vec<Plan>> {
    let n = g.node_count();
    if n > FILTER_LIMIT {
        return Err(Error::TooLargeForOracle {
            nodes: n,
            limit: FILTER_LIMIT,
        });
    }
    if k == 0 {
        return Err(Error::NoDistricts);
    }
    let total = (k as u64).pow(n as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut assignment = vec![0; n];
        for slot in assignment.iter_mut() {
            *slot = (code % k as u64) as usize;
            code /= k as u64;
        }
        let plan = Plan::new(k, assignment)?;
        if plan.is_connected_partition(g) {
            out.push(plan);
        }
    }
    Ok(out)
}

/// Minimum gerrymander score over all feasible plans, or `None` when no
/// feasible plan exists. Among optimal plans the first one enumerated wins.
pub fn brute_force_optimum(inst: &ProblemInstance) -> Result<Option<(Plan, u64)>> {
    let mut best: Option<(Plan, u64)> = None;
    let mut failure = None;
    for_each_connected_partition(inst.graph(), inst.k(), |plan| {
        if failure.is_some() || !is_feasible(inst, plan) {
            return;
        }
        match total_score_phase2(inst, plan) {
            Ok(score) => {
                if best.as_ref().is_none_or(|(_, s)| score < *s) {
                    best = Some((plan.clone(), score));
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(best),
    }
}

fn bfs_order(g: &AdjacencyGraph) -> Vec<NodeId> {
    let n = g.node_count();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in g.adjacent(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order
}

struct Search<'a> {
    g: &'a AdjacencyGraph,
    k: usize,
    order: &'a [NodeId],
    labels: &'a mut [usize],
    used: &'a mut [usize],
}

impl Search<'_> {
    fn descend(&mut self, depth: usize, visit: &mut impl FnMut(&Plan)) {
        let n = self.order.len();
        if depth == n {
            if self.used.iter().all(|&c| c > 0) && self.all_districts_connected() {
                visit(&Plan::from_parts_unchecked(self.k, self.labels.to_vec()));
            }
            return;
        }
        let u = self.order[depth];
        for d in 0..self.k {
            self.labels[u] = d;
            self.used[d] += 1;
            let unused = self.used.iter().filter(|&&c| c == 0).count();
            if unused <= n - depth - 1 && self.viable() {
                self.descend(depth + 1, visit);
            }
            self.used[d] -= 1;
        }
        self.labels[u] = usize::MAX;
    }

    fn all_districts_connected(&self) -> bool {
        let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); self.k];
        for (u, &d) in self.labels.iter().enumerate() {
            members[d].push(u);
        }
        members.iter().all(|m| self.g.is_connected_subset(m))
    }

    /// False when some district already has a sealed component (no free
    /// neighbor) and at least one other component.
    fn viable(&self) -> bool {
        let n = self.labels.len();
        let mut comp = vec![usize::MAX; n];
        let mut comps_per_label = vec![0usize; self.k];
        let mut sealed_label = vec![false; self.k];
        let mut stack = Vec::new();
        for start in 0..n {
            let d = self.labels[start];
            if d == usize::MAX || comp[start] != usize::MAX {
                continue;
            }
            comp[start] = start;
            stack.push(start);
            let mut open = false;
            while let Some(u) = stack.pop() {
                for &v in self.g.adjacent(u) {
                    let lv = self.labels[v];
                    if lv == usize::MAX {
                        open = true;
                    } else if lv == d && comp[v] == usize::MAX {
                        comp[v] = start;
                        stack.push(v);
                    }
                }
            }
            comps_per_label[d] += 1;
            if !open {
                sealed_label[d] = true;
            }
        }
        (0..self.k).all(|d| !(sealed_label[d] && comps_per_label[d] > 1))
    }
}
