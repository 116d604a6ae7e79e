//! Generator-labeled graphs shared by Schreier, orbital, Cayley and germ graphs,
//! with a breadth-first explorer that numbers vertices in discovery order.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Known radius of a vertex whose whole neighbourhood is known.
pub const COMPLETE: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledGraph {
    pub labels: Vec<String>,
    pub label_inverse: Vec<Option<usize>>,
    /// Vertex payloads rendered as strings (words, rays, vertices).
    pub names: Vec<String>,
    /// `edges[x][s]` is the target of the `s`-edge from `x`, i.e. `s·x`.
    pub edges: Vec<Vec<Option<usize>>>,
    pub base: Option<usize>,
    /// Radius around each vertex inside which the graph is fully known.
    pub known_radius: Vec<usize>,
    /// Breadth-first tree: the vertex and label through which each vertex was found.
    pub parent: Vec<Option<(usize, usize)>>,
}

impl LabeledGraph {
    pub fn new(labels: Vec<String>, label_inverse: Vec<Option<usize>>) -> Self {
        LabeledGraph {
            labels,
            label_inverse,
            names: Vec::new(),
            edges: Vec::new(),
            base: None,
            known_radius: Vec::new(),
            parent: Vec::new(),
        }
    }

    pub fn add_vertex(&mut self, name: String) -> usize {
        self.names.push(name);
        self.edges.push(vec![None; self.labels.len()]);
        self.known_radius.push(COMPLETE);
        self.parent.push(None);
        self.names.len() - 1
    }

    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().filter(|e| e.is_some()).count()
    }

    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == name)
    }

    /// Sets `x -s-> y` and the reverse edge for the inverse label.
    pub fn connect(&mut self, x: usize, s: usize, y: usize) {
        self.edges[x][s] = Some(y);
        if let Some(t) = self.label_inverse[s] {
            self.edges[y][t] = Some(x);
        }
    }

    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges[x].iter().flatten().copied()
    }

    /// Every label has an outgoing edge at `x`.
    pub fn has_full_star(&self, x: usize) -> bool {
        self.edges[x].iter().all(Option::is_some)
    }

    /// Breadth-first distances from `x` up to `radius`; unreached vertices get `None`.
    pub fn distances_from(&self, x: usize, radius: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        dist[x] = Some(0);
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            if d == radius {
                continue;
            }
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// `|B(x, r)|` for `r = 0..=radius`.
    pub fn ball_sizes(&self, x: usize, radius: usize) -> Vec<usize> {
        let mut out = vec![0usize; radius + 1];
        for d in self.distances_from(x, radius).into_iter().flatten() {
            out[d] += 1;
        }
        for r in 1..out.len() {
            out[r] += out[r - 1];
        }
        out
    }

    /// Labels along the breadth-first tree path to `x`, outermost label first,
    /// so that `x = l_0 · l_1 · ... · base`.
    pub fn word_to(&self, mut x: usize) -> Vec<usize> {
        let mut w = Vec::new();
        while let Some((p, s)) = self.parent[x] {
            w.push(s);
            x = p;
        }
        w
    }

    /// The `s`-edges exist in both directions for every label with an inverse.
    pub fn is_involutive(&self) -> bool {
        self.edges.iter().enumerate().all(|(x, star)| {
            star.iter().enumerate().all(|(s, &y)| match (y, self.label_inverse[s]) {
                (Some(y), Some(t)) => self.edges[y][t] == Some(x),
                _ => true,
            })
        })
    }

    pub fn to_dot(&self, name: &str) -> String {
        const PALETTE: [&str; 8] = [
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
        ];
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{}\" {{", escape(name));
        for (i, n) in self.names.iter().enumerate() {
            let shape = if Some(i) == self.base { ", shape=doublecircle" } else { "" };
            let _ = writeln!(out, "  {i} [label=\"{}\"{shape}];", escape(n));
        }
        for (x, star) in self.edges.iter().enumerate() {
            for (s, y) in star.iter().enumerate() {
                if let Some(y) = y {
                    let _ = writeln!(
                        out,
                        "  {x} -> {y} [label=\"{}\", color=\"{}\"];",
                        escape(&self.labels[s]),
                        PALETTE[s % PALETTE.len()]
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Path on `n` vertices with labels `x`, `x^-1`.
    pub fn path(n: usize) -> Self {
        let mut g = LabeledGraph::new(vec!["x".into(), "x^-1".into()], vec![Some(1), Some(0)]);
        for i in 0..n {
            g.add_vertex(i.to_string());
        }
        for i in 1..n {
            g.connect(i - 1, 0, i);
            g.parent[i] = Some((i - 1, 0));
        }
        g.base = (n > 0).then_some(0);
        g
    }

    /// `w × h` grid with labels `x`, `x^-1`, `y`, `y^-1`; vertex `(i, j)` has id `j·w + i`.
    pub fn grid(w: usize, h: usize) -> Self {
        let mut g = LabeledGraph::new(
            vec!["x".into(), "x^-1".into(), "y".into(), "y^-1".into()],
            vec![Some(1), Some(0), Some(3), Some(2)],
        );
        for j in 0..h {
            for i in 0..w {
                g.add_vertex(format!("{i},{j}"));
            }
        }
        for j in 0..h {
            for i in 0..w {
                let v = j * w + i;
                if i + 1 < w {
                    g.connect(v, 0, v + 1);
                }
                if j + 1 < h {
                    g.connect(v, 2, v + w);
                }
            }
        }
        g.base = (w * h > 0).then_some(0);
        g
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Deduplication of explored payloads.
pub trait VertexStore<T> {
    fn find(&self, item: &T) -> Result<Option<usize>>;
    fn insert(&mut self, item: &T, id: usize);
}

/// Store for payloads whose equality is `Eq`.
pub struct HashStore<T>(pub HashMap<T, usize>);

impl<T> Default for HashStore<T> {
    fn default() -> Self {
        HashStore(HashMap::new())
    }
}

impl<T: Hash + Eq + Clone> VertexStore<T> for HashStore<T> {
    fn find(&self, item: &T) -> Result<Option<usize>> {
        Ok(self.0.get(item).copied())
    }

    fn insert(&mut self, item: &T, id: usize) {
        self.0.insert(item.clone(), id);
    }
}

/// Result of a breadth-first exploration.
pub struct Exploration<T> {
    pub graph: LabeledGraph,
    pub payload: Vec<T>,
    pub distance: Vec<usize>,
    /// Stopped because of the vertex cap.
    pub truncated: bool,
    /// Finished before the radius: the explored component is finite and complete.
    pub closed: bool,
}

pub struct ExploreSpec<'a> {
    pub labels: &'a [String],
    pub label_inverse: &'a [Option<usize>],
    pub radius: usize,
    pub cap: usize,
}

/// Breadth-first search from `start`, where the `s`-neighbour of `x` is `step(x, s)`.
///
/// Successors of a whole layer are computed in parallel and then numbered
/// sequentially, so the numbering is the sequential one.
pub fn explore<T, S, F, N>(spec: ExploreSpec<'_>, start: T, store: &mut S, step: F, name: N) -> Result<Exploration<T>>
where
    T: Clone + Send + Sync,
    S: VertexStore<T>,
    F: Fn(&T, usize) -> Result<T> + Sync,
    N: Fn(&T) -> String,
{
    let k = spec.labels.len();
    let mut graph = LabeledGraph::new(spec.labels.to_vec(), spec.label_inverse.to_vec());
    graph.add_vertex(name(&start));
    graph.base = Some(0);
    store.insert(&start, 0);
    let mut ex = Exploration {
        graph,
        payload: vec![start],
        distance: vec![0],
        truncated: false,
        closed: false,
    };
    let mut layer = vec![0usize];
    let mut depth = 0;
    while depth < spec.radius && !layer.is_empty() {
        let succ: Vec<Vec<T>> = layer
            .par_iter()
            .map(|&x| (0..k).map(|s| step(&ex.payload[x], s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::new();
        for (&x, items) in layer.iter().zip(succ) {
            for (s, item) in items.into_iter().enumerate() {
                let y = match store.find(&item)? {
                    Some(y) => y,
                    None => {
                        if ex.payload.len() >= spec.cap {
                            ex.truncated = true;
                            continue;
                        }
                        let y = ex.graph.add_vertex(name(&item));
                        store.insert(&item, y);
                        ex.graph.parent[y] = Some((x, s));
                        ex.payload.push(item);
                        ex.distance.push(depth + 1);
                        next.push(y);
                        y
                    }
                };
                ex.graph.connect(x, s, y);
            }
        }
        depth += 1;
        if next.is_empty() && !ex.truncated {
            ex.closed = true;
        }
        layer = next;
    }
    if ex.closed {
        ex.graph.known_radius.iter_mut().for_each(|r| *r = COMPLETE);
    } else {
        // the last layer reached is unexpanded; a vertex at distance d sees
        // everything within the explored depth minus d
        let expanded_to = depth;
        for (r, &d) in ex.graph.known_radius.iter_mut().zip(&ex.distance) {
            *r = expanded_to.saturating_sub(d);
        }
        if ex.truncated {
            for (x, r) in ex.graph.known_radius.iter_mut().enumerate() {
                if !ex.graph.edges[x].iter().all(Option::is_some) {
                    *r = 0;
                }
            }
            // a clipped neighbourhood reduces the radius of everything near it
            let clipped: Vec<usize> = (0..ex.graph.vertex_count())
                .filter(|&x| ex.graph.known_radius[x] == 0)
                .collect();
            let dist = multi_source_distances(&ex.graph, &clipped);
            for (r, d) in ex.graph.known_radius.iter_mut().zip(dist) {
                if let Some(d) = d {
                    *r = (*r).min(d);
                }
            }
        }
    }
    Ok(ex)
}

fn multi_source_distances(g: &LabeledGraph, sources: &[usize]) -> Vec<Option<usize>> {
    let mut dist = vec![None; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &s in sources {
        dist[s] = Some(0);
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u].unwrap();
        for v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_and_grid_shapes() {
        let p = LabeledGraph::path(5);
        assert_eq!(p.edge_count(), 8);
        assert!(p.is_involutive());
        assert_eq!(p.ball_sizes(2, 3), vec![1, 3, 5, 5]);
        let g = LabeledGraph::grid(4, 3);
        assert_eq!(g.vertex_count(), 12);
        assert_eq!(g.edge_count(), 2 * (3 * 3 + 4 * 2));
        assert!(g.is_involutive());
    }

    #[test]
    fn explore_integers() {
        let labels = vec!["+".to_string(), "-".to_string()];
        let inv = vec![Some(1), Some(0)];
        let spec = ExploreSpec {
            labels: &labels,
            label_inverse: &inv,
            radius: 3,
            cap: usize::MAX,
        };
        let mut store = HashStore::default();
        let ex = explore(spec, 0i64, &mut store, |x, s| Ok(if s == 0 { x + 1 } else { x - 1 }), |x| x.to_string())
            .unwrap();
        assert_eq!(ex.payload, vec![0, 1, -1, 2, -2, 3, -3]);
        assert_eq!(ex.graph.known_radius[0], 3);
        assert_eq!(ex.graph.known_radius[5], 0);
        assert_eq!(ex.graph.word_to(5), vec![0, 0, 0]);
        assert!(ex.graph.is_involutive());
    }
}
