//! Node-weighted undirected adjacency graphs and unweighted hop distances.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::GraphError;

/// Dense node index in `0..node_count`.
pub type NodeId = usize;

/// An undirected graph whose nodes carry a population weight.
///
/// Neighbor lists are sorted, symmetric and free of self-loops and duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyGraph {
    populations: Vec<u64>,
    adjacency: Vec<Vec<NodeId>>,
    edge_count: usize,
}

impl AdjacencyGraph {
    /// Builds a graph over dense node ids. Repeated edges (in either
    /// orientation) are merged.
    pub fn new<I>(populations: Vec<u64>, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let n = populations.len();
        let mut adjacency = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n {
                return Err(GraphError::UnknownNode(u.to_string()));
            }
            if v >= n {
                return Err(GraphError::UnknownNode(v.to_string()));
            }
            if u == v {
                return Err(GraphError::SelfLoop(u.to_string()));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut edge_count = 0;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
            edge_count += list.len();
        }
        Ok(Self {
            populations,
            adjacency,
            edge_count: edge_count / 2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.populations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn population(&self, u: NodeId) -> u64 {
        self.populations[u]
    }

    pub fn populations(&self) -> &[u64] {
        &self.populations
    }

    pub fn total_population(&self) -> u64 {
        self.populations.iter().sum()
    }

    /// Sorted neighbor list of `u`. Panics on an out-of-range id; see
    /// [`AdjacencyGraph::neighbors`] for the checked variant.
    #[inline]
    pub fn adjacent(&self, u: NodeId) -> &[NodeId] {
        &self.adjacency[u]
    }

    pub fn neighbors(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.adjacency
            .get(u)
            .map(Vec::as_slice)
            .ok_or_else(|| GraphError::UnknownNode(u.to_string()))
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adjacency[u].len()
    }

    /// Each undirected edge once, as `(low, high)`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.adjacency
            .get(u)
            .is_some_and(|list| list.binary_search(&v).is_ok())
    }

    /// Connected components, each sorted, ordered by their smallest node.
    pub fn components(&self) -> Vec<Vec<NodeId>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Fails with the first pair of mutually unreachable nodes.
    pub fn ensure_connected(&self) -> Result<(), GraphError> {
        let comps = self.components();
        if comps.len() <= 1 {
            return Ok(());
        }
        Err(GraphError::Disconnected {
            a: comps[0][0].to_string(),
            b: comps[1][0].to_string(),
            component_sizes: comps.iter().map(Vec::len).collect(),
        })
    }

    /// Whether `subset` induces a connected subgraph. The empty set counts as
    /// connected. Duplicate entries are ignored.
    pub fn is_connected_subset(&self, subset: &[NodeId]) -> bool {
        let Some(&start) = subset.first() else {
            return true;
        };
        let mut member = vec![false; self.node_count()];
        let mut wanted = 0;
        for &u in subset {
            if !member[u] {
                member[u] = true;
                wanted += 1;
            }
        }
        let mut reached = vec![false; self.node_count()];
        reached[start] = true;
        let mut stack = vec![start];
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if member[v] && !reached[v] {
                    reached[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == wanted
    }

    fn bfs_row(&self, source: NodeId, row: &mut [u16], queue: &mut VecDeque<NodeId>) {
        row.fill(u16::MAX);
        row[source] = 0;
        queue.clear();
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let next = row[u] + 1;
            for &v in &self.adjacency[u] {
                if row[v] == u16::MAX {
                    row[v] = next;
                    queue.push_back(v);
                }
            }
        }
    }
}

/// Builds a graph from caller-keyed nodes and edges, returning the dense id
/// order alongside it (`keys[i]` is the key of node `i`).
pub fn build_graph<K>(nodes: &[(K, i64)], edges: &[(K, K)]) -> Result<(AdjacencyGraph, Vec<K>), GraphError>
where
    K: Eq + Hash + Clone + fmt::Display,
{
    let mut index: HashMap<&K, NodeId> = HashMap::with_capacity(nodes.len());
    let mut populations = Vec::with_capacity(nodes.len());
    for (i, (key, pop)) in nodes.iter().enumerate() {
        if index.insert(key, i).is_some() {
            return Err(GraphError::DuplicateNode(key.to_string()));
        }
        if *pop < 0 {
            return Err(GraphError::NegativePopulation {
                node: key.to_string(),
                population: *pop,
            });
        }
        populations.push(*pop as u64);
    }
    let mut dense = Vec::with_capacity(edges.len());
    for (a, b) in edges {
        let u = *index.get(a).ok_or_else(|| GraphError::UnknownNode(a.to_string()))?;
        let v = *index.get(b).ok_or_else(|| GraphError::UnknownNode(b.to_string()))?;
        if u == v {
            return Err(GraphError::SelfLoop(a.to_string()));
        }
        dense.push((u, v));
    }
    let graph = AdjacencyGraph::new(populations, dense)?;
    Ok((graph, nodes.iter().map(|(k, _)| k.clone()).collect()))
}

/// All-pairs hop counts in the full graph, stored densely row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u16>,
}

impl fmt::Debug for DistanceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DistanceMatrix").field("n", &self.n).finish_non_exhaustive()
    }
}

impl DistanceMatrix {
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, u: NodeId, v: NodeId) -> u16 {
        self.dist[u * self.n + v]
    }

    #[inline]
    pub fn row(&self, u: NodeId) -> &[u16] {
        &self.dist[u * self.n..(u + 1) * self.n]
    }

    /// Sum of the distances from `u` to every node of the graph.
    pub fn row_sum(&self, u: NodeId) -> u64 {
        self.row(u).iter().map(|&d| u64::from(d)).sum()
    }
}

/// BFS from every node. The graph must be connected; per-source runs are
/// parallel but the result does not depend on scheduling.
pub fn all_pairs_distances(g: &AdjacencyGraph) -> Result<DistanceMatrix, GraphError> {
    g.ensure_connected()?;
    let n = g.node_count();
    if n > usize::from(u16::MAX) {
        return Err(GraphError::TooLarge(n));
    }
    let mut dist = vec![0u16; n * n];
    if n > 0 {
        dist.par_chunks_mut(n).enumerate().for_each_init(
            || VecDeque::with_capacity(n),
            |queue, (source, row)| g.bfs_row(source, row, queue),
        );
    }
    Ok(DistanceMatrix { n, dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn path3() -> AdjacencyGraph {
        AdjacencyGraph::new(vec![10, 20, 30], [(0, 1), (1, 2)]).unwrap()
    }

    fn complete(n: usize) -> AdjacencyGraph {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        AdjacencyGraph::new(vec![1; n], edges).unwrap()
    }

    fn grid(rows: usize, cols: usize) -> AdjacencyGraph {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let u = r * cols + c;
                if c + 1 < cols {
                    edges.push((u, u + 1));
                }
                if r + 1 < rows {
                    edges.push((u, u + cols));
                }
            }
        }
        AdjacencyGraph::new(vec![1; rows * cols], edges).unwrap()
    }

    #[test]
    fn path_degrees() {
        let g = path3();
        let degrees: Vec<_> = (0..3).map(|u| g.degree(u)).collect();
        assert_eq!(degrees, vec![1, 2, 1]);
        assert_eq!(g.populations(), &[10, 20, 30]);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn rejects_self_loop() {
        let err = AdjacencyGraph::new(vec![1], [(0, 0)]).unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop(_)));
    }

    #[test]
    fn keyed_builder_errors() {
        let dup = build_graph(&[("a", 1), ("a", 2)], &[]).unwrap_err();
        assert!(matches!(dup, GraphError::DuplicateNode(ref k) if k == "a"));
        let unknown = build_graph(&[("a", 1)], &[("a", "z")]).unwrap_err();
        assert!(matches!(unknown, GraphError::UnknownNode(ref k) if k == "z"));
        let neg = build_graph(&[("a", -3)], &[]).unwrap_err();
        assert!(matches!(neg, GraphError::NegativePopulation { population: -3, .. }));
        let looped = build_graph(&[("a", 1)], &[("a", "a")]).unwrap_err();
        assert!(matches!(looped, GraphError::SelfLoop(_)));
    }

    #[test]
    fn duplicate_edges_merge() {
        let g = AdjacencyGraph::new(vec![1, 1], [(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.adjacent(0), &[1]);
    }

    #[test]
    fn neighbor_sets() {
        let g = path3();
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
        assert!(g.neighbors(3).is_err());
        let k4 = complete(4);
        for u in 0..4 {
            let expect: Vec<_> = (0..4).filter(|&v| v != u).collect();
            assert_eq!(k4.neighbors(u).unwrap(), expect.as_slice());
        }
    }

    #[test]
    fn distances_small() {
        let d = all_pairs_distances(&path3()).unwrap();
        assert_eq!(d.get(0, 2), 2);
        assert_eq!(d.get(0, 1), 1);
        let k4 = all_pairs_distances(&complete(4)).unwrap();
        for u in 0..4 {
            for v in 0..4 {
                assert_eq!(k4.get(u, v), u16::from(u != v));
            }
        }
        let g = all_pairs_distances(&grid(4, 4)).unwrap();
        assert_eq!(g.get(0, 15), 6);
        assert_eq!(g.get(3, 12), 6);
    }

    #[test]
    fn disconnected_distance_error_names_nodes() {
        let g = AdjacencyGraph::new(vec![1; 4], [(0, 1), (2, 3)]).unwrap();
        match all_pairs_distances(&g).unwrap_err() {
            GraphError::Disconnected { a, b, component_sizes } => {
                assert_eq!((a.as_str(), b.as_str()), ("0", "2"));
                assert_eq!(component_sizes, vec![2, 2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subset_connectivity() {
        let g = path3();
        assert!(!g.is_connected_subset(&[0, 2]));
        assert!(g.is_connected_subset(&[0, 1]));
        assert!(g.is_connected_subset(&[2]));
        assert!(g.is_connected_subset(&[]));
    }

    fn floyd_warshall(g: &AdjacencyGraph) -> Vec<Vec<u32>> {
        let n = g.node_count();
        let inf = u32::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for u in 0..n {
            d[u][u] = 0;
            for &v in g.adjacent(u) {
                d[u][v] = 1;
            }
        }
        for w in 0..n {
            for u in 0..n {
                for v in 0..n {
                    if d[u][w] + d[w][v] < d[u][v] {
                        d[u][v] = d[u][w] + d[w][v];
                    }
                }
            }
        }
        d
    }

    fn arb_graph(max_nodes: usize) -> impl Strategy<Value = AdjacencyGraph> {
        (1..=max_nodes).prop_flat_map(|n| {
            let pairs = n * (n - 1) / 2;
            proptest::collection::vec(proptest::bool::weighted(0.15), pairs).prop_map(move |mask| {
                let all = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
                let edges: Vec<_> = all.zip(mask).filter(|(_, keep)| *keep).map(|(e, _)| e).collect();
                AdjacencyGraph::new(vec![1; n], edges).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn bfs_matches_floyd_warshall(g in arb_graph(64)) {
            let fw = floyd_warshall(&g);
            let connected = fw.iter().all(|row| row.iter().all(|&x| x < u32::MAX / 4));
            prop_assert_eq!(connected, g.is_connected());
            prop_assert_eq!(g.is_connected_subset(&(0..g.node_count()).collect::<Vec<_>>()), connected);
            if connected {
                let d = all_pairs_distances(&g).unwrap();
                let n = g.node_count();
                for u in 0..n {
                    for v in 0..n {
                        prop_assert_eq!(u32::from(d.get(u, v)), fw[u][v]);
                        prop_assert_eq!(d.get(u, v), d.get(v, u));
                        prop_assert_eq!(d.get(u, v) == 1, g.has_edge(u, v));
                        for w in 0..n {
                            prop_assert!(d.get(u, w) <= d.get(u, v) + d.get(v, w));
                        }
                    }
                }
            } else {
                prop_assert!(all_pairs_distances(&g).is_err());
            }
        }

        #[test]
        fn adjacency_is_symmetric(g in arb_graph(40)) {
            for u in 0..g.node_count() {
                let list = g.adjacent(u);
                prop_assert!(list.windows(2).all(|w| w[0] < w[1]));
                for &v in list {
                    prop_assert!(v != u);
                    prop_assert!(g.has_edge(v, u));
                }
            }
        }
    }
}
