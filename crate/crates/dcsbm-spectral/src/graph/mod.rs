//! Graphs, the generative model, and degree-based weight estimates.

mod io;
mod measure;
mod params;
mod sample;

pub use io::{load_edge_list, save_edge_list, save_labels, LoadReport, LoadedGraph};
pub use measure::{estimate_weights, estimate_weights_binned, WeightMeasure, MU_HAT_BINS};
pub use params::{class_sizes, AffinityPattern, DcsbmParams, WeightLaw, LAW_BINS};
pub(crate) use params::{validate_proportions, validate_symmetric};
pub use sample::{sample_dcsbm, LatentModel};

use crate::{Error, Result};

/// Simple undirected graph with no isolated nodes.
///
/// The strict upper triangle of the adjacency matrix is stored as packed bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    bits: Vec<u64>,
    degrees: Vec<usize>,
    labels: Option<Vec<usize>>,
    names: Vec<String>,
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Upper-triangular bit buffer used while a graph is assembled.
#[derive(Debug, Clone)]
pub(crate) struct PackedAdjacency {
    n: usize,
    bits: Vec<u64>,
}

impl PackedAdjacency {
    pub(crate) fn new(n: usize) -> Self {
        let pairs = n * n.saturating_sub(1) / 2;
        PackedAdjacency {
            n,
            bits: vec![0; pairs.div_ceil(64)],
        }
    }

    /// Sets edge `{i, j}`; returns false if it was already present or is a loop.
    pub(crate) fn insert(&mut self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, a, b);
        let mask = 1u64 << (k % 64);
        let was = self.bits[k / 64] & mask != 0;
        self.bits[k / 64] |= mask;
        !was
    }

    fn contains(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, a, b);
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }
}

impl Graph {
    /// Builds a graph from a packed adjacency, dropping isolated nodes.
    ///
    /// Returns the graph and the original indices of the kept nodes.
    pub(crate) fn from_packed(
        adj: PackedAdjacency,
        labels: Option<Vec<usize>>,
        names: Vec<String>,
    ) -> Result<(Graph, Vec<usize>)> {
        let n = adj.n;
        let mut degrees = vec![0usize; n];
        for i in 0..n {
            for j in i + 1..n {
                if adj.contains(i, j) {
                    degrees[i] += 1;
                    degrees[j] += 1;
                }
            }
        }
        let kept: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0).collect();
        if kept.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if kept.len() == n {
            let g = Graph {
                n,
                bits: adj.bits,
                degrees,
                labels,
                names,
            };
            return Ok((g, kept));
        }
        let m = kept.len();
        let mut sub = PackedAdjacency::new(m);
        for (a, &i) in kept.iter().enumerate() {
            for (b, &j) in kept.iter().enumerate().skip(a + 1) {
                if adj.contains(i, j) {
                    sub.insert(a, b);
                }
            }
        }
        let labels = labels.map(|l| kept.iter().map(|&i| l[i]).collect());
        let names = kept.iter().map(|&i| names[i].clone()).collect();
        let degrees = kept.iter().map(|&i| degrees[i]).collect();
        Ok((
            Graph {
                n: m,
                bits: sub.bits,
                degrees,
                labels,
                names,
            },
            kept,
        ))
    }

    /// Builds a graph on `n` nodes from an edge iterator. Loops and repeats are ignored.
    pub fn from_edges<I>(
        n: usize,
        edges: I,
        labels: Option<Vec<usize>>,
    ) -> Result<(Graph, Vec<usize>)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LabelMismatch(format!(
                    "{} labels for {n} nodes",
                    l.len()
                )));
            }
        }
        let mut adj = PackedAdjacency::new(n);
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParams(format!(
                    "edge ({i}, {j}) out of range"
                )));
            }
            adj.insert(i, j);
        }
        let names = (0..n).map(|i| i.to_string()).collect();
        Graph::from_packed(adj, labels, names)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `2m = d^T 1`.
    pub fn twice_edges(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Node names, in index order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let k = pair_index(self.n, a, b);
        self.bits[k / 64] >> (k % 64) & 1 == 1
    }

    /// Neighbours `j > i` of node `i`, in increasing order.
    pub fn upper_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (i + 1..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.upper_neighbors(i).map(move |j| (i, j)))
    }

    /// Number of classes in the attached labels.
    pub fn label_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().max().map_or(0, |m| m + 1))
    }

    /// Returns a copy with nodes reordered so that node `perm[i]` becomes node `i`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        if perm.len() != self.n {
            return Err(Error::InvalidParams(
                "permutation length differs from n".into(),
            ));
        }
        let mut inverse = vec![usize::MAX; self.n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= self.n || inverse[old] != usize::MAX {
                return Err(Error::InvalidParams("not a permutation".into()));
            }
            inverse[old] = new;
        }
        let edges = self.edges().map(|(i, j)| (inverse[i], inverse[j]));
        let labels = self
            .labels
            .as_ref()
            .map(|l| perm.iter().map(|&o| l[o]).collect());
        let (mut g, _) = Graph::from_edges(self.n, edges, labels)?;
        g.names = perm.iter().map(|&o| self.names[o].clone()).collect();
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_graph_degrees() {
        let (g, kept) = Graph::from_edges(3, [(0, 1), (1, 2)], None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.degrees(), &[1, 2, 1]);
        assert_eq!(g.twice_edges(), 4);
        assert_eq!(kept, vec![0, 1, 2]);
    }

    #[test]
    fn loops_repeats_and_isolated_nodes_are_dropped() {
        let (g, kept) = Graph::from_edges(
            5,
            [(0, 1), (1, 0), (3, 3), (1, 4)],
            Some(vec![0, 0, 1, 1, 1]),
        )
        .unwrap();
        assert_eq!(kept, vec![0, 1, 4]);
        assert_eq!(g.degrees(), &[1, 2, 1]);
        assert_eq!(g.labels().unwrap(), &[0, 0, 1]);
        assert_eq!(g.names(), &["0", "1", "4"]);
        assert!(g.has_edge(1, 2) && g.has_edge(2, 1) && !g.has_edge(0, 2));
    }

    #[test]
    fn empty_graph_is_an_error() {
        assert!(matches!(
            Graph::from_edges(3, [], None),
            Err(Error::EmptyGraph)
        ));
    }

    proptest! {
        #[test]
        fn degrees_match_edges(n in 2usize..40, raw in prop::collection::vec((0usize..40, 0usize..40), 0..120)) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            if let Ok((g, _)) = Graph::from_edges(n, edges, None) {
                let mut d = vec![0usize; g.n()];
                for (i, j) in g.edges() {
                    prop_assert!(i < j);
                    d[i] += 1;
                    d[j] += 1;
                }
                prop_assert_eq!(&d, g.degrees());
                prop_assert!(d.iter().all(|&x| x > 0));
                for i in 0..g.n() {
                    prop_assert!(!g.has_edge(i, i));
                    for j in 0..g.n() {
                        prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
                    }
                }
            }
        }

        #[test]
        fn permutation_preserves_degree_multiset(n in 3usize..25, seed in any::<u64>()) {
            let edges: Vec<_> = (0..n).map(|i| (i, (i * 7 + seed as usize % 5 + 1) % n)).collect();
            if let Ok((g, _)) = Graph::from_edges(n, edges, None) {
                let mut perm: Vec<usize> = (0..g.n()).collect();
                perm.rotate_left((seed % g.n() as u64) as usize);
                let h = g.permuted(&perm).unwrap();
                for (new, &old) in perm.iter().enumerate() {
                    prop_assert_eq!(h.degrees()[new], g.degrees()[old]);
                }
            }
        }
    }
}
