use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Graph, PackedAdjacency};
use crate::{Error, Result};

/// What [`load_edge_list`] changed on the way in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadReport {
    pub self_loops: usize,
    pub duplicate_edges: usize,
    /// Tokens of nodes dropped for having no neighbour.
    pub dropped_nodes: Vec<String>,
}

/// A graph read from disk with its token maps.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// Label tokens in first-seen order; label `a` of the graph is `label_names[a]`.
    pub label_names: Vec<String>,
    pub report: LoadReport,
}

fn read_pairs(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        match (tokens.next(), tokens.next()) {
            (Some(a), Some(b)) => out.push((k + 1, a.to_string(), b.to_string())),
            _ => {
                return Err(Error::Parse {
                    line: k + 1,
                    msg: format!("expected two tokens, got {trimmed:?}"),
                })
            }
        }
    }
    Ok(out)
}

/// Reads a whitespace-separated edge list, optionally with a `node label` file.
///
/// Node tokens are arbitrary strings indexed in first-seen order. Loops are
/// dropped, repeated edges collapsed, and nodes left without neighbours removed.
pub fn load_edge_list(path: impl AsRef<Path>, labels_path: Option<&Path>) -> Result<LoadedGraph> {
    let pairs = read_pairs(path.as_ref())?;
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut names: Vec<String> = Vec::new();
    let mut intern = |t: &str| -> usize {
        if let Some(&i) = index.get(t) {
            return i;
        }
        index.insert(t.to_string(), names.len());
        names.push(t.to_string());
        names.len() - 1
    };
    let edges: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(_, a, b)| (intern(a), intern(b)))
        .collect();
    let n = names.len();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }

    let mut report = LoadReport::default();
    let mut adj = PackedAdjacency::new(n);
    for &(i, j) in &edges {
        if i == j {
            report.self_loops += 1;
            log::warn!("dropping self-loop on node {}", names[i]);
        } else if !adj.insert(i, j) {
            report.duplicate_edges += 1;
        }
    }

    let mut label_names: Vec<String> = Vec::new();
    let labels = match labels_path {
        None => None,
        Some(lp) => {
            let mut labels = vec![usize::MAX; n];
            let mut label_index: HashMap<String, usize> = HashMap::new();
            for (line, node, label) in read_pairs(lp)? {
                let Some(&i) = index.get(&node) else {
                    return Err(Error::LabelMismatch(format!(
                        "line {line}: unknown node {node:?}"
                    )));
                };
                let next = label_index.len();
                let a = *label_index.entry(label.clone()).or_insert_with(|| {
                    label_names.push(label);
                    next
                });
                labels[i] = a;
            }
            Some(labels)
        }
    };

    let (graph, kept) = Graph::from_packed(adj, labels.clone(), names.clone())?;
    let mut keep = vec![false; n];
    for &i in &kept {
        keep[i] = true;
    }
    report.dropped_nodes = (0..n)
        .filter(|&i| !keep[i])
        .map(|i| names[i].clone())
        .collect();
    if let Some(labels) = graph.labels() {
        if let Some(pos) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::LabelMismatch(format!(
                "node {:?} has no label",
                graph.names()[pos]
            )));
        }
    }
    Ok(LoadedGraph {
        graph,
        label_names,
        report,
    })
}

/// Writes `u v` lines using node names.
pub fn save_edge_list(graph: &Graph, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let names = graph.names();
    for (i, j) in graph.edges() {
        writeln!(w, "{} {}", names[i], names[j])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `node label` lines.
pub fn save_labels(names: &[String], labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    if names.len() != labels.len() {
        return Err(Error::LabelMismatch(format!(
            "{} names for {} labels",
            names.len(),
            labels.len()
        )));
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for (name, label) in names.iter().zip(labels) {
        writeln!(w, "{name} {label}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn path_graph_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "# path\n0 1\n1 2\n").unwrap();
        let g = load_edge_list(&p, None).unwrap().graph;
        assert_eq!(g.n(), 3);
        assert_eq!(g.degrees(), &[1, 2, 1]);
    }

    #[test]
    fn self_loop_and_duplicates_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "a b\nb a\n3 3\nb c\n").unwrap();
        let loaded = load_edge_list(&p, None).unwrap();
        assert_eq!(loaded.report.self_loops, 1);
        assert_eq!(loaded.report.duplicate_edges, 1);
        assert_eq!(loaded.report.dropped_nodes, vec!["3".to_string()]);
        assert_eq!(loaded.graph.names(), &["a", "b", "c"]);
    }

    #[test]
    fn labels_follow_the_remap() {
        let dir = tempfile::tempdir().unwrap();
        let (e, l) = (dir.path().join("e.txt"), dir.path().join("l.txt"));
        fs::write(&e, "x y\nq q\ny z\n").unwrap();
        fs::write(&l, "z red\nx blue\ny blue\nq red\n").unwrap();
        let loaded = load_edge_list(&e, Some(&l)).unwrap();
        assert_eq!(loaded.label_names, vec!["red", "blue"]);
        assert_eq!(loaded.graph.labels().unwrap(), &[1, 1, 0]);
    }

    #[test]
    fn unknown_label_node_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (e, l) = (dir.path().join("e.txt"), dir.path().join("l.txt"));
        fs::write(&e, "0 1\n").unwrap();
        fs::write(&l, "0 a\n1 a\n7 b\n").unwrap();
        assert!(matches!(
            load_edge_list(&e, Some(&l)),
            Err(Error::LabelMismatch(_))
        ));
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        fs::write(&p, "0 1\n\n2\n").unwrap();
        match load_edge_list(&p, None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn save_load_round_trip() {
        let (g, _) = Graph::from_edges(
            6,
            [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (0, 5)],
            Some(vec![0, 0, 0, 1, 1, 1]),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (e, l) = (dir.path().join("e.txt"), dir.path().join("l.txt"));
        save_edge_list(&g, &e).unwrap();
        save_labels(g.names(), g.labels().unwrap(), &l).unwrap();
        let back = load_edge_list(&e, Some(&l)).unwrap().graph;
        assert_eq!(back.n(), g.n());
        for i in 0..g.n() {
            let bi = back
                .names()
                .iter()
                .position(|s| s == &g.names()[i])
                .unwrap();
            for j in 0..g.n() {
                let bj = back
                    .names()
                    .iter()
                    .position(|s| s == &g.names()[j])
                    .unwrap();
                assert_eq!(g.has_edge(i, j), back.has_edge(bi, bj));
            }
        }
    }
}
