//! Undirected simple graphs in adjacency-list form.
//!
//! Node ids are `0..n`. Every constructor validates symmetry, the absence of
//! self-loops and duplicate neighbors, and keeps each neighbor list sorted.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};

use rand::Rng;

use crate::error::{Error, Result};

/// Default cap on resampling attempts for [`erdos_renyi_connected`].
pub const DEFAULT_ER_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    m: usize,
}

impl Graph {
    /// Builds a graph from an unordered edge list. Rejects self-loops,
    /// out-of-range ids and duplicate edges (in either orientation).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for node in [u, v] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for (u, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (u.min(w[0]), u.max(w[0]));
                return Err(Error::DuplicateEdge(a, b));
            }
        }
        Ok(Self {
            adjacency,
            m: edges.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// True iff a breadth-first search from node 0 reaches every node.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    /// Re-checks every structural invariant. Constructors already enforce
    /// these; this exists for tests and for graphs loaded from elsewhere.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.n();
        let mut half_edges = 0;
        for (u, list) in self.adjacency.iter().enumerate() {
            for (k, &v) in list.iter().enumerate() {
                if v >= n {
                    return Err(Error::NodeOutOfRange { node: v, n });
                }
                if v == u {
                    return Err(Error::SelfLoop(u));
                }
                if k > 0 && list[k - 1] >= v {
                    return Err(Error::DuplicateEdge(u.min(v), u.max(v)));
                }
                if !self.has_edge(v, u) {
                    return Err(Error::InvalidArgument(format!("asymmetric edge {u} -> {v}")));
                }
            }
            half_edges += list.len();
        }
        if half_edges != 2 * self.m {
            return Err(Error::InvalidArgument("edge count mismatch".into()));
        }
        Ok(())
    }

    /// Serializes to the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {}", self.n(), self.m).unwrap();
        for (u, v) in self.edges() {
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    /// Parses the edge-list text format: a header line `n m` followed by `m`
    /// lines `u v`. Blank lines and lines starting with `#` are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let [n, m] = parse_pair(line, header)?;

        let mut edges = Vec::with_capacity(m);
        for (line, text) in lines {
            if edges.len() == m {
                return Err(Error::Parse {
                    line,
                    msg: format!("more than the declared {m} edges"),
                });
            }
            let [u, v] = parse_pair(line, text)?;
            edges.push((u, v));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {m} edges, found {}", edges.len()),
            });
        }
        Self::from_edges(n, &edges)
    }
}

fn parse_pair(line: usize, text: &str) -> Result<[usize; 2]> {
    let mut fields = text.split_whitespace();
    let mut next = || -> Result<usize> {
        let field = fields.next().ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected two integers, got {text:?}"),
        })?;
        field.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("not a non-negative integer: {field:?}"),
        })
    };
    let pair = [next()?, next()?];
    if fields.next().is_some() {
        return Err(Error::Parse {
            line,
            msg: format!("trailing fields in {text:?}"),
        });
    }
    Ok(pair)
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopologyKind {
    Star,
    Complete,
    Path,
    Cycle,
    ErdosRenyi { p: f64 },
}

impl TopologyKind {
    pub fn name(&self) -> &'static str {
        match self {
            TopologyKind::Star => "star",
            TopologyKind::Complete => "complete",
            TopologyKind::Path => "path",
            TopologyKind::Cycle => "cycle",
            TopologyKind::ErdosRenyi { .. } => "erdos_renyi",
        }
    }

    /// Edge probability `5 ln n / n`, capped at 1.
    pub fn er_default_p(n: usize) -> f64 {
        (5.0 * (n as f64).ln() / n as f64).min(1.0)
    }
}

/// Builds one of the deterministic topologies. The star hub is node 0.
pub fn make_topology(kind: TopologyKind, n: usize) -> Result<Graph> {
    let min = match kind {
        TopologyKind::Cycle => 3,
        TopologyKind::ErdosRenyi { .. } => return Err(Error::RandomTopology("erdos_renyi")),
        _ => 2,
    };
    if n < min {
        return Err(Error::TopologyTooSmall {
            topology: kind.name(),
            min,
            n,
        });
    }
    let edges: Vec<(usize, usize)> = match kind {
        TopologyKind::Star => (1..n).map(|leaf| (0, leaf)).collect(),
        TopologyKind::Complete => (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect(),
        TopologyKind::Path => (1..n).map(|v| (v - 1, v)).collect(),
        TopologyKind::Cycle => (0..n).map(|v| (v, (v + 1) % n)).collect(),
        TopologyKind::ErdosRenyi { .. } => unreachable!(),
    };
    Graph::from_edges(n, &edges)
}

/// A connected Erdős–Rényi sample together with the number of draws it took.
#[derive(Debug, Clone)]
pub struct ErSample {
    pub graph: Graph,
    pub attempts: usize,
}

/// One G(n, p) draw: pairs `(u, v)`, `u < v`, visited in lexicographic order,
/// each kept when a uniform `[0, 1)` draw falls below `p`.
pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

/// Draws G(n, p) samples until one is connected.
pub fn erdos_renyi_connected<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    rng: &mut R,
    max_attempts: usize,
) -> Result<ErSample> {
    if max_attempts == 0 {
        return Err(Error::InvalidArgument("max_attempts must be at least 1".into()));
    }
    for attempts in 1..=max_attempts {
        let graph = erdos_renyi(n, p, rng)?;
        if graph.is_connected() {
            return Ok(ErSample { graph, attempts });
        }
    }
    Err(Error::ConnectivityExhausted {
        n,
        p,
        attempts: max_attempts,
    })
}

/// A random connected graph: a uniformly-attached random tree under a random
/// labelling, plus every remaining pair independently with probability
/// `extra_p`. Always connected, so no resampling is needed.
pub fn random_connected<R: Rng + ?Sized>(n: usize, extra_p: f64, rng: &mut R) -> Result<Graph> {
    use rand::seq::SliceRandom;

    if n == 0 {
        return Err(Error::InvalidArgument("graph needs at least one node".into()));
    }
    if !(0.0..=1.0).contains(&extra_p) {
        return Err(Error::InvalidProbability(extra_p));
    }
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = rng.random_range(0..k);
        let (u, v) = (label[k].min(label[parent]), label[k].max(label[parent]));
        present[u * n + v] = true;
        edges.push((u, v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u * n + v] && rng.random::<f64>() < extra_p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn star_has_hub_zero() {
        let g = make_topology(TopologyKind::Star, 5).unwrap();
        assert_eq!(g.neighbors(0), &[1, 2, 3, 4]);
        assert_eq!(g.m(), 4);
        for leaf in 1..5 {
            assert_eq!(g.neighbors(leaf), &[0]);
        }
    }

    #[test]
    fn small_topologies() {
        let k3 = make_topology(TopologyKind::Complete, 3).unwrap();
        assert_eq!(k3.m(), 3);
        assert!(k3.has_edge(0, 2));
        let p2 = make_topology(TopologyKind::Path, 2).unwrap();
        assert_eq!(p2.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        let c4 = make_topology(TopologyKind::Cycle, 4).unwrap();
        assert_eq!(c4.m(), 4);
        assert!(c4.has_edge(0, 3));
    }

    #[test]
    fn topology_minimums() {
        assert!(matches!(
            make_topology(TopologyKind::Star, 1),
            Err(Error::TopologyTooSmall { min: 2, .. })
        ));
        assert!(matches!(
            make_topology(TopologyKind::Cycle, 2),
            Err(Error::TopologyTooSmall { min: 3, .. })
        ));
        assert!(make_topology(TopologyKind::ErdosRenyi { p: 0.5 }, 5).is_err());
    }

    #[test]
    fn edge_list_parsing() {
        let path = Graph::from_edge_list("3 2\n0 1\n1 2").unwrap();
        assert_eq!(path, make_topology(TopologyKind::Path, 3).unwrap());
        let tri = Graph::from_edge_list("# triangle\n3 3\n0 1\n1 2\n\n0 2\n").unwrap();
        assert_eq!(tri, make_topology(TopologyKind::Complete, 3).unwrap());

        assert_eq!(Graph::from_edge_list("2 1\n0 0"), Err(Error::SelfLoop(0)));
        assert_eq!(
            Graph::from_edge_list("3 2\n0 1\n1 0"),
            Err(Error::DuplicateEdge(0, 1))
        );
        assert_eq!(
            Graph::from_edge_list("3 1\n0 3"),
            Err(Error::NodeOutOfRange { node: 3, n: 3 })
        );
        assert!(matches!(Graph::from_edge_list("3 1\n0 x"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(Graph::from_edge_list("3 2\n0 1"), Err(Error::Parse { .. })));
        assert!(matches!(Graph::from_edge_list("3 1\n0 1\n1 2"), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(Graph::from_edge_list("3 1\n0 1 2"), Err(Error::Parse { .. })));
        assert!(matches!(Graph::from_edge_list(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn serialization_is_sorted() {
        let g = Graph::from_edges(4, &[(3, 1), (2, 0), (1, 0)]).unwrap();
        assert_eq!(g.to_edge_list(), "4 3\n0 1\n0 2\n1 3\n");
        assert_eq!(Graph::from_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn connectivity() {
        assert!(make_topology(TopologyKind::Star, 5).unwrap().is_connected());
        assert!(!Graph::from_edges(4, &[(0, 1), (2, 3)]).unwrap().is_connected());
        assert!(Graph::from_edges(1, &[]).unwrap().is_connected());
    }

    #[test]
    fn er_full_probability_is_complete() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = erdos_renyi_connected(5, 1.0, &mut rng, 1).unwrap();
        assert_eq!(s.attempts, 1);
        assert_eq!(s.graph, make_topology(TopologyKind::Complete, 5).unwrap());
    }

    #[test]
    fn er_rejects_bad_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            erdos_renyi_connected(5, 0.0, &mut rng, 10).unwrap_err(),
            Error::InvalidProbability(0.0)
        );
        assert!(erdos_renyi_connected(5, 1.5, &mut rng, 10).is_err());
        assert!(erdos_renyi_connected(5, 0.5, &mut rng, 0).is_err());
        assert!(matches!(
            erdos_renyi_connected(40, 0.001, &mut rng, 5),
            Err(Error::ConnectivityExhausted { attempts: 5, .. })
        ));
    }

    #[test]
    fn er_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            erdos_renyi_connected(21, TopologyKind::er_default_p(21), &mut rng, 1000).unwrap()
        };
        assert_eq!(draw(11).graph, draw(11).graph);
        assert_ne!(draw(11).graph, draw(12).graph);
    }

    #[test]
    fn random_connected_is_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..30 {
            let g = random_connected(n, 0.1, &mut rng).unwrap();
            assert!(g.is_connected());
            g.check_invariants().unwrap();
        }
    }
}
