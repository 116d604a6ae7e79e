//! Graphs of group actions: Cayley balls, level Schreier graphs, orbital and
//! germ graphs around boundary rays, and coset graphs of oracle subgroups.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::Automorphism;
use crate::error::{Error, Result};
use crate::graph::{explore, Exploration, ExploreSpec, HashStore, LabeledGraph, VertexStore};
use crate::group::GroupSpec;
use crate::tree::{Ray, Vertex};

pub const DEFAULT_LEVEL_CAP: usize = 1 << 18;

fn label_data(g: &GroupSpec) -> (Vec<String>, Vec<Option<usize>>) {
    (
        g.labels().iter().map(|l| l.name.clone()).collect(),
        g.labels().iter().map(|l| l.inverse).collect(),
    )
}

/// Ball of radius `r` in the Cayley graph; vertex names are geodesic words.
pub fn cayley_ball(g: &GroupSpec, r: usize) -> Result<LabeledGraph> {
    Ok(g.ball(r)?.graph)
}

/// Action graph on the level `L(n)`, vertices in lexicographic order.
pub fn level_schreier(g: &GroupSpec, n: usize, cap: usize) -> Result<LabeledGraph> {
    let size = g.tree().level_size(n);
    if size > cap as u128 {
        return Err(Error::LevelCap { size, cap });
    }
    let (labels, inv) = label_data(g);
    let mut graph = LabeledGraph::new(labels, inv);
    for v in g.tree().level(n) {
        graph.add_vertex(v.to_string());
    }
    for (s, perm) in g.level_permutations(n).into_iter().enumerate() {
        for (x, y) in perm.into_iter().enumerate() {
            graph.edges[x][s] = Some(y);
        }
    }
    graph.base = Some(0);
    graph.parent = bfs_parents(&graph, 0);
    Ok(graph)
}

fn bfs_parents(graph: &LabeledGraph, root: usize) -> Vec<Option<(usize, usize)>> {
    let mut parent = vec![None; graph.vertex_count()];
    let mut seen = vec![false; graph.vertex_count()];
    seen[root] = true;
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(x) = queue.pop_front() {
        for (s, y) in graph.edges[x].iter().enumerate() {
            if let Some(y) = *y {
                if !seen[y] {
                    seen[y] = true;
                    parent[y] = Some((x, s));
                    queue.push_back(y);
                }
            }
        }
    }
    parent
}

/// Number of orbits of `G` on `L(n)`.
pub fn level_orbit_count(g: &GroupSpec, n: usize, cap: usize) -> Result<usize> {
    let graph = level_schreier(g, n, cap)?;
    let mut seen = vec![false; graph.vertex_count()];
    let mut orbits = 0;
    for start in 0..graph.vertex_count() {
        if seen[start] {
            continue;
        }
        orbits += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for y in graph.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    Ok(orbits)
}

/// Ball of radius `r` around `x` in the orbital graph, using exact ray arithmetic.
pub fn orbital_ball(g: &GroupSpec, x: &Ray, r: usize) -> Result<LabeledGraph> {
    Ok(orbital_exploration(g, x, r, usize::MAX)?.graph)
}

/// Orbital graph around `x`, stopped after `cap` vertices.
pub fn orbital_truncation(g: &GroupSpec, x: &Ray, cap: usize) -> Result<LabeledGraph> {
    Ok(orbital_exploration(g, x, usize::MAX, cap)?.graph)
}

pub fn orbital_exploration(g: &GroupSpec, x: &Ray, r: usize, cap: usize) -> Result<Exploration<Ray>> {
    if !g.tree().is_regular() {
        return Err(Error::NonRegularTree("orbital graphs"));
    }
    x.check(g.tree())?;
    let (labels, inv) = label_data(g);
    let spec = ExploreSpec {
        labels: &labels,
        label_inverse: &inv,
        radius: r,
        cap,
    };
    let gl = g.labels();
    explore(
        spec,
        x.clone(),
        &mut HashStore::default(),
        |y, s| gl[s].element.act_ray(y),
        |y| y.to_string(),
    )
}

/// Cosets `u G⁰_x` keyed by the point `u(x)` and compared with the germ test.
struct GermStore<'a> {
    x: &'a Ray,
    buckets: HashMap<Ray, Vec<usize>>,
    reps: Vec<Automorphism>,
}

impl VertexStore<Automorphism> for GermStore<'_> {
    fn find(&self, u: &Automorphism) -> Result<Option<usize>> {
        let p = u.act_ray(self.x)?;
        if let Some(ids) = self.buckets.get(&p) {
            for &i in ids {
                if self.reps[i].invert().compose(u)?.fixes_germ(self.x)? {
                    return Ok(Some(i));
                }
            }
        }
        Ok(None)
    }

    fn insert(&mut self, u: &Automorphism, id: usize) {
        let p = u.act_ray(self.x).expect("ray checked on construction");
        self.buckets.entry(p).or_default().push(id);
        debug_assert_eq!(self.reps.len(), id);
        self.reps.push(u.clone());
    }
}

/// Ball in the graph of germs together with its projection to the orbital ball.
#[derive(Clone, Debug)]
pub struct GermBall {
    pub graph: LabeledGraph,
    pub orbital: LabeledGraph,
    /// `projection[i]` is the orbital vertex under germ vertex `i`.
    pub projection: Vec<usize>,
    pub representatives: Vec<Automorphism>,
    pub distance: Vec<usize>,
    pub radius: usize,
}

pub fn germ_ball(g: &GroupSpec, x: &Ray, r: usize) -> Result<GermBall> {
    let orbital = orbital_exploration(g, x, r, usize::MAX)?;
    let (labels, inv) = label_data(g);
    let spec = ExploreSpec {
        labels: &labels,
        label_inverse: &inv,
        radius: r,
        cap: usize::MAX,
    };
    let gl = g.labels();
    let mut store = GermStore {
        x,
        buckets: HashMap::new(),
        reps: Vec::new(),
    };
    let ex = explore(
        spec,
        g.identity(),
        &mut store,
        |u, s| gl[s].element.compose(u),
        |_| String::new(),
    )?;
    let orbit_index: HashMap<&Ray, usize> = orbital.payload.iter().enumerate().map(|(i, y)| (y, i)).collect();
    let mut graph = ex.graph;
    let mut projection = Vec::with_capacity(ex.payload.len());
    for (i, u) in ex.payload.iter().enumerate() {
        let y = u.act_ray(x)?;
        let p = *orbit_index
            .get(&y)
            .ok_or_else(|| Error::Precondition(format!("germ vertex over {y} outside the orbital ball")))?;
        projection.push(p);
        let w = graph.word_to(i);
        graph.names[i] = if w.is_empty() {
            "e".into()
        } else {
            w.iter().map(|&s| labels[s].as_str()).collect::<Vec<_>>().join(" ")
        };
    }
    Ok(GermBall {
        graph,
        orbital: orbital.graph,
        projection,
        representatives: ex.payload,
        distance: ex.distance,
        radius: r,
    })
}

/// Checks of the projection from the germ ball to the orbital ball.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub label_preserving: bool,
    pub surjective: bool,
    pub locally_bijective: bool,
    /// Fiber size over each orbital vertex (orbital vertex order).
    pub fibers: Vec<usize>,
    pub base_fiber: usize,
    /// Largest germ distance inside the base fiber.
    pub base_fiber_depth: usize,
    /// Orbital radius within which every fiber is complete.
    pub window: usize,
    pub fibers_constant_in_window: bool,
}

impl CoveringReport {
    pub fn passed(&self) -> bool {
        self.label_preserving && self.surjective && self.locally_bijective && self.fibers_constant_in_window
    }
}

pub fn verify_covering(gb: &GermBall) -> CoveringReport {
    let k = gb.graph.labels.len();
    let mut label_preserving = true;
    for (u, star) in gb.graph.edges.iter().enumerate() {
        for (s, v) in star.iter().enumerate() {
            if let Some(v) = v {
                if gb.orbital.edges[gb.projection[u]][s] != Some(gb.projection[*v]) {
                    label_preserving = false;
                }
            }
        }
    }
    let mut fibers = vec![0usize; gb.orbital.vertex_count()];
    for &p in &gb.projection {
        fibers[p] += 1;
    }
    let surjective = fibers.iter().all(|&f| f > 0);
    // within the expanded region stars are full on both sides and map label by label
    let locally_bijective = (0..gb.graph.vertex_count())
        .filter(|&u| gb.distance[u] < gb.radius)
        .all(|u| {
            let p = gb.projection[u];
            (0..k).all(|s| gb.graph.edges[u][s].is_some() && gb.orbital.edges[p][s].is_some())
        });
    let base_fiber = fibers.first().copied().unwrap_or(0);
    let base_fiber_depth = (0..gb.projection.len())
        .filter(|&i| gb.projection[i] == 0)
        .map(|i| gb.distance[i])
        .max()
        .unwrap_or(0);
    let window = gb.radius.saturating_sub(base_fiber_depth);
    let orbital_dist = gb.orbital.distances_from(0, gb.radius);
    let fibers_constant_in_window = (0..fibers.len())
        .filter(|&y| orbital_dist[y].is_some_and(|d| d <= window))
        .all(|y| fibers[y] == base_fiber);
    CoveringReport {
        label_preserving,
        surjective,
        locally_bijective,
        fibers,
        base_fiber,
        base_fiber_depth,
        window,
        fibers_constant_in_window,
    }
}

/// Cosets `u H` compared by `v⁻¹u ∈ H`.
struct CosetStore<'a, F> {
    member: &'a F,
    reps: Vec<Automorphism>,
}

impl<F> VertexStore<Automorphism> for CosetStore<'_, F>
where
    F: Fn(&Automorphism) -> Result<bool>,
{
    fn find(&self, u: &Automorphism) -> Result<Option<usize>> {
        for (i, v) in self.reps.iter().enumerate() {
            if (self.member)(&v.invert().compose(u)?)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    fn insert(&mut self, u: &Automorphism, _id: usize) {
        self.reps.push(u.clone());
    }
}

/// Ball of radius `r` in the Schreier graph of `G/H` for a membership predicate.
pub fn coset_ball<F>(g: &GroupSpec, member: &F, r: usize, cap: usize) -> Result<LabeledGraph>
where
    F: Fn(&Automorphism) -> Result<bool>,
{
    let (labels, inv) = label_data(g);
    let spec = ExploreSpec {
        labels: &labels,
        label_inverse: &inv,
        radius: r,
        cap,
    };
    let gl = g.labels();
    let mut store = CosetStore { member, reps: Vec::new() };
    let ex = explore(
        spec,
        g.identity(),
        &mut store,
        |u, s| gl[s].element.compose(u),
        |_| String::new(),
    )?;
    let mut graph = ex.graph;
    for i in 0..graph.vertex_count() {
        let w = graph.word_to(i);
        graph.names[i] = if w.is_empty() {
            "H".into()
        } else {
            format!("{} H", w.iter().map(|&s| labels[s].as_str()).collect::<Vec<_>>().join(" "))
        };
    }
    Ok(graph)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Embedding {
    EmbedsAt { vertex: usize, name: String, radius: usize },
    NoEmbedding { radius: usize, centers_tested: usize },
}

/// Looks for a center `x` whose labeled `r`-ball is isomorphic to the Cayley `r`-ball.
///
/// A center qualifies when `g ↦ g·x` is injective on `B_G(r)` and every edge
/// between ball elements is matched, in both directions.
pub fn ball_embedding_test(g: &GroupSpec, h: &LabeledGraph, r: usize) -> Result<Embedding> {
    let ball = g.ball(r)?;
    let map: Vec<usize> = ball
        .graph
        .labels
        .iter()
        .map(|l| {
            h.label_index(l)
                .ok_or_else(|| Error::Precondition(format!("label `{l}` missing from the tested graph")))
        })
        .collect::<Result<_>>()?;
    let k = map.len();
    // s·g for every element and label, including those leaving the ball
    let products: Vec<Vec<Option<usize>>> = (0..ball.len())
        .into_par_iter()
        .map(|i| {
            (0..k)
                .map(|s| match ball.graph.edges[i][s] {
                    Some(j) => Ok(Some(j)),
                    None => Ok(ball.position(&g.labels()[s].element.compose(&ball.elements[i])?)),
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let centers: Vec<usize> = (0..h.vertex_count())
        .filter(|&x| h.known_radius[x] > r)
        .collect();
    let found = centers.par_iter().find_map_first(|&x| {
        let mut phi = vec![0usize; ball.len()];
        phi[0] = x;
        for i in 1..ball.len() {
            let (p, s) = ball.graph.parent[i].expect("non-root ball vertex has a parent");
            phi[i] = h.edges[phi[p]][map[s]]?;
        }
        let image: HashSet<usize> = phi.iter().copied().collect();
        if image.len() != ball.len() {
            return None;
        }
        let inverse: HashMap<usize, usize> = phi.iter().enumerate().map(|(i, &y)| (y, i)).collect();
        for i in 0..ball.len() {
            for s in 0..k {
                let target = h.edges[phi[i]][map[s]]?;
                match (products[i][s], inverse.get(&target)) {
                    (Some(j), _) if phi[j] == target => {}
                    (None, None) => {}
                    _ => return None,
                }
            }
        }
        Some(x)
    });
    Ok(match found {
        Some(x) => Embedding::EmbedsAt {
            vertex: x,
            name: h.names[x].clone(),
            radius: r,
        },
        None => Embedding::NoEmbedding {
            radius: r,
            centers_tested: centers.len(),
        },
    })
}

/// Vertex of `L(n)` reached from `0^n`, with a group element mapping one to the other.
pub fn level_transversal(g: &GroupSpec, n: usize, cap: usize) -> Result<Vec<Option<(Vertex, Vec<usize>)>>> {
    let graph = level_schreier(g, n, cap)?;
    let level = g.tree().level(n);
    Ok((0..graph.vertex_count())
        .map(|x| {
            if x != 0 && graph.parent[x].is_none() {
                None
            } else {
                Some((level[x].clone(), graph.word_to(x)))
            }
        })
        .collect())
}
