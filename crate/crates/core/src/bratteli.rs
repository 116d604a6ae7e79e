//! Bratteli diagrams, their path spaces and prefix replacement maps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::automaton::{Automorphism, State};
use crate::contracting::{bounded_check, Boundedness};
use crate::error::{Error, Result};
use crate::tree::{Letter, TreeSpec, Vertex};

/// One level of a diagram: the edges `E_n` and the vertices `V_n` they end in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Level {
    pub vertices: usize,
    /// `(origin in V_{n-1}, target in V_n)` per edge.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// The listed levels repeat forever.
    Repeat,
    /// The diagram ends after the listed levels.
    #[default]
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "DiagramFile", into = "DiagramFile")]
pub struct BratteliDiagram {
    root_vertices: usize,
    levels: Vec<Level>,
    tail: Tail,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiagramFile {
    #[serde(default = "one")]
    root_vertices: usize,
    levels: Vec<Level>,
    #[serde(default)]
    tail: Tail,
}

fn one() -> usize {
    1
}

impl TryFrom<DiagramFile> for BratteliDiagram {
    type Error = Error;

    fn try_from(f: DiagramFile) -> Result<Self> {
        BratteliDiagram::new(f.root_vertices, f.levels, f.tail)
    }
}

impl From<BratteliDiagram> for DiagramFile {
    fn from(d: BratteliDiagram) -> Self {
        DiagramFile {
            root_vertices: d.root_vertices,
            levels: d.levels,
            tail: d.tail,
        }
    }
}

impl BratteliDiagram {
    pub fn new(root_vertices: usize, levels: Vec<Level>, tail: Tail) -> Result<Self> {
        if root_vertices == 0 || levels.is_empty() {
            return Err(Error::InvalidDiagram("every level needs at least one vertex".into()));
        }
        if tail == Tail::Repeat && levels.last().unwrap().vertices != root_vertices {
            return Err(Error::InvalidDiagram(
                "a repeating block must end with as many vertices as it starts".into(),
            ));
        }
        let mut prev = root_vertices;
        for (i, l) in levels.iter().enumerate() {
            let n = i + 1;
            if l.vertices == 0 {
                return Err(Error::InvalidDiagram(format!("level {n} has no vertices")));
            }
            let mut has_out = vec![false; prev];
            let mut has_in = vec![false; l.vertices];
            for &(o, t) in &l.edges {
                if o >= prev || t >= l.vertices {
                    return Err(Error::InvalidDiagram(format!("dangling edge ({o}, {t}) at level {n}")));
                }
                has_out[o] = true;
                has_in[t] = true;
            }
            if let Some(v) = has_out.iter().position(|&b| !b) {
                return Err(Error::InvalidDiagram(format!(
                    "vertex {v} of level {} has no outgoing edge",
                    n - 1
                )));
            }
            if let Some(v) = has_in.iter().position(|&b| !b) {
                return Err(Error::InvalidDiagram(format!("vertex {v} of level {n} has no incoming edge")));
            }
            prev = l.vertices;
        }
        Ok(BratteliDiagram {
            root_vertices,
            levels,
            tail,
        })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidDiagram(e.to_string()))
    }

    /// One vertex per level and `d` edges, repeating.
    pub fn stationary_tree(d: usize) -> Self {
        BratteliDiagram::new(
            1,
            vec![Level {
                vertices: 1,
                edges: vec![(0, 0); d],
            }],
            Tail::Repeat,
        )
        .expect("valid stationary diagram")
    }

    /// Number of levels with edges, if finite.
    pub fn horizon(&self) -> Option<usize> {
        match self.tail {
            Tail::Repeat => None,
            Tail::Stop => Some(self.levels.len()),
        }
    }

    /// `E_n` and `V_n`, for `n ≥ 1`.
    pub fn level(&self, n: usize) -> Result<&Level> {
        if n == 0 {
            return Err(Error::InvalidDiagram("level 0 has no edges".into()));
        }
        match self.tail {
            Tail::Repeat => Ok(&self.levels[(n - 1) % self.levels.len()]),
            Tail::Stop => self
                .levels
                .get(n - 1)
                .ok_or_else(|| Error::InvalidDiagram(format!("level {n} beyond the horizon"))),
        }
    }

    pub fn vertex_count(&self, n: usize) -> Result<usize> {
        if n == 0 {
            Ok(self.root_vertices)
        } else {
            Ok(self.level(n)?.vertices)
        }
    }

    /// Single vertex on every level.
    pub fn is_tree_of_words(&self) -> bool {
        self.root_vertices == 1 && self.levels.iter().all(|l| l.vertices == 1)
    }

    pub fn is_stationary(&self) -> bool {
        self.tail == Tail::Repeat && self.levels.len() == 1
    }

    pub fn check_path(&self, p: &Path) -> Result<()> {
        let mut at: Option<usize> = None;
        for (i, &e) in p.0.iter().enumerate() {
            let l = self.level(i + 1)?;
            let &(o, t) = l
                .edges
                .get(e)
                .ok_or_else(|| Error::InvalidDiagram(format!("no edge {e} at level {}", i + 1)))?;
            if at.is_some_and(|a| a != o) {
                return Err(Error::InvalidDiagram(format!("path {p} is broken at level {}", i + 1)));
            }
            at = Some(t);
        }
        Ok(())
    }

    /// Final vertex of a nonempty path.
    pub fn target(&self, p: &Path) -> Result<usize> {
        self.check_path(p)?;
        match p.0.last() {
            Some(&e) => Ok(self.level(p.len())?.edges[e].1),
            None => Err(Error::InvalidDiagram("the empty path has no target edge".into())),
        }
    }

    /// All paths of length `n`, in lexicographic order of edge indices.
    pub fn paths(&self, n: usize) -> Result<Vec<Path>> {
        let mut cur: Vec<(Vec<usize>, Option<usize>)> = vec![(Vec::new(), None)];
        for k in 1..=n {
            let l = self.level(k)?;
            let mut next = Vec::new();
            for (p, at) in &cur {
                for (e, &(o, t)) in l.edges.iter().enumerate() {
                    if at.is_none_or(|a| a == o) {
                        let mut q = p.clone();
                        q.push(e);
                        next.push((q, Some(t)));
                    }
                }
            }
            cur = next;
        }
        Ok(cur.into_iter().map(|(p, _)| Path(p)).collect())
    }

    /// Number of length-`n` paths ending at each vertex of `V_n`.
    pub fn path_counts(&self, n: usize) -> Result<Vec<u128>> {
        let mut counts = vec![1u128; self.root_vertices];
        for k in 1..=n {
            let l = self.level(k)?;
            let mut next = vec![0u128; l.vertices];
            for &(o, t) in &l.edges {
                next[t] = next[t].saturating_add(counts[o]);
            }
            counts = next;
        }
        Ok(counts)
    }
}

/// A finite path, as edge indices within each level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.starts_with(&self.0)
    }
}

impl std::fmt::Display for Path {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// `F_{γ,η}: C_γ → C_η`, `γx ↦ ηx`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixReplacement {
    pub from: Path,
    pub to: Path,
}

pub fn prefix_replacement(d: &BratteliDiagram, from: Path, to: Path) -> Result<PrefixReplacement> {
    let (a, b) = (d.target(&from)?, d.target(&to)?);
    if from.len() != to.len() || a != b {
        return Err(Error::TargetMismatch(format!("{from} → {a}"), format!("{to} → {b}")));
    }
    Ok(PrefixReplacement { from, to })
}

impl PrefixReplacement {
    /// Image of a path in the domain cylinder (at least as long as the prefix).
    pub fn apply(&self, p: &Path) -> Option<Path> {
        if !self.from.is_prefix_of(p) {
            return None;
        }
        let mut out = self.to.0.clone();
        out.extend_from_slice(&p.0[self.from.len()..]);
        Some(Path(out))
    }

    /// `next ∘ self`, defined when the range of `self` is the domain of `next`.
    pub fn then(&self, next: &PrefixReplacement) -> Option<PrefixReplacement> {
        (self.to == next.from).then(|| PrefixReplacement {
            from: self.from.clone(),
            to: next.to.clone(),
        })
    }

    pub fn inverse(&self) -> PrefixReplacement {
        PrefixReplacement {
            from: self.to.clone(),
            to: self.from.clone(),
        }
    }
}

/// A path ray `pre (period)^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathRay {
    pub preperiod: Vec<usize>,
    pub period: Vec<usize>,
}

impl PathRay {
    pub fn prefix(&self, n: usize) -> Path {
        Path(
            (0..n)
                .map(|i| {
                    if i < self.preperiod.len() {
                        self.preperiod[i]
                    } else {
                        self.period[(i - self.preperiod.len()) % self.period.len()]
                    }
                })
                .collect(),
        )
    }
}

/// A homeomorphism given by prefix replacement rules on cylinders, with
/// finitely many declared singular rays left uncovered.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedTypeHomeo {
    pub rules: Vec<PrefixReplacement>,
    #[serde(default)]
    pub singular: Vec<PathRay>,
}

impl BoundedTypeHomeo {
    pub fn rule_depth(&self) -> usize {
        self.rules.iter().map(|r| r.from.len()).max().unwrap_or(0)
    }

    /// Rules have matching targets; at the rule depth, every path lies in
    /// exactly one domain or on a singular ray, and the images of the rules
    /// are disjoint (covering everything when no ray is singular).
    pub fn validate(&self, d: &BratteliDiagram) -> Result<()> {
        for r in &self.rules {
            prefix_replacement(d, r.from.clone(), r.to.clone())?;
        }
        for s in &self.singular {
            if s.period.is_empty() {
                return Err(Error::InvalidDiagram("singular ray with empty period".into()));
            }
        }
        let n = self.rule_depth().max(1);
        let paths = d.paths(n)?;
        let singular: Vec<Path> = self.singular.iter().map(|s| s.prefix(n)).collect();
        for p in &paths {
            let hits = self.rules.iter().filter(|r| r.from.is_prefix_of(p)).count();
            let on_ray = singular.contains(p);
            if hits + on_ray as usize != 1 {
                return Err(Error::InvalidDiagram(format!(
                    "path {p} is covered {} times by rule domains and singular rays",
                    hits + on_ray as usize
                )));
            }
            let images = self.rules.iter().filter(|r| r.to.is_prefix_of(p)).count();
            if images > 1 || (images == 0 && self.singular.is_empty()) {
                return Err(Error::InvalidDiagram(format!("path {p} is hit {images} times by rule images")));
            }
        }
        Ok(())
    }

    pub fn apply(&self, p: &Path) -> Option<Path> {
        self.rules.iter().find_map(|r| r.apply(p))
    }

    /// The same map with every rule split down to level `n`.
    pub fn refined(&self, d: &BratteliDiagram, n: usize) -> Result<BoundedTypeHomeo> {
        if !self.singular.is_empty() {
            return Err(Error::Unsupported("refining around singular rays".into()));
        }
        let mut rules = Vec::new();
        for p in d.paths(n)? {
            if let Some(r) = self.rules.iter().find(|r| r.from.is_prefix_of(&p)) {
                rules.push(PrefixReplacement {
                    to: r.apply(&p).expect("prefix checked"),
                    from: p,
                });
            }
        }
        Ok(BoundedTypeHomeo {
            rules,
            singular: Vec::new(),
        })
    }

    /// `self ∘ other` for rule lists without singular rays.
    pub fn compose(&self, other: &BoundedTypeHomeo, d: &BratteliDiagram) -> Result<BoundedTypeHomeo> {
        let n = self.rule_depth().max(other.rule_depth());
        let inner = other.refined(d, n)?;
        let outer = self.refined(d, n)?;
        let rules = inner
            .rules
            .into_iter()
            .map(|r| {
                let to = outer
                    .apply(&r.to)
                    .ok_or_else(|| Error::InvalidDiagram(format!("no rule applies to {}", r.to)))?;
                Ok(PrefixReplacement { from: r.from, to })
            })
            .collect::<Result<_>>()?;
        Ok(BoundedTypeHomeo {
            rules,
            singular: Vec::new(),
        })
    }

    /// The restriction to `C_γ` is a single prefix replacement.
    fn is_prefix_replacement_on(&self, d: &BratteliDiagram, gamma: &Path) -> Result<bool> {
        let n = gamma.len();
        if self.singular.iter().any(|s| s.prefix(n) == *gamma) {
            return Ok(false);
        }
        if self.rules.iter().any(|r| r.from.is_prefix_of(gamma)) {
            return Ok(true);
        }
        // split among deeper rules: they must agree on one prefix of length n
        let below: Vec<&PrefixReplacement> = self.rules.iter().filter(|r| gamma.is_prefix_of(&r.from)).collect();
        if below.is_empty() {
            return Ok(false);
        }
        let eta = Path(below[0].to.0[..n].to_vec());
        if d.target(&eta)? != d.target(gamma)? {
            return Ok(false);
        }
        Ok(below
            .iter()
            .all(|r| r.to.0[..n] == eta.0[..] && r.to.0[n..] == r.from.0[n..]))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub level: usize,
    pub vertex: usize,
    pub count: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProfileVerdict {
    BoundedWith { sup: u128, horizon: usize },
    Inconclusive { horizon: usize },
}

/// Per-vertex counts `A_v(g)` of paths on whose cylinder `g` is not a
/// prefix replacement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityProfile {
    pub rows: Vec<ProfileRow>,
    /// Counts are exact up to this level; beyond it, paths outside every rule
    /// domain are counted as singular.
    pub exact_to: usize,
    /// Activity of the tree automorphism, when the input is one.
    pub activity: Option<Vec<u128>>,
    /// Levels where the counts and the activity disagree.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub discrepancies: Vec<usize>,
    pub verdict: ProfileVerdict,
}

impl SingularityProfile {
    pub fn max_per_level(&self) -> Vec<u128> {
        let mut out: BTreeMap<usize, u128> = BTreeMap::new();
        for r in &self.rows {
            let e = out.entry(r.level).or_default();
            *e = (*e).max(r.count);
        }
        out.into_values().collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,vertex,count\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{}\n", r.level, r.vertex, r.count));
        }
        s
    }
}

/// Counts stabilized over the second half of the exact window.
fn stabilized(per_level: &[u128], exact_to: usize) -> bool {
    let window = &per_level[..=exact_to.min(per_level.len() - 1)];
    let tail = &window[window.len() / 2..];
    tail.windows(2).all(|w| w[0] == w[1])
}

pub fn homeo_profile(d: &BratteliDiagram, g: &BoundedTypeHomeo, horizon: usize) -> Result<SingularityProfile> {
    g.validate(d)?;
    let exact_to = g.rule_depth().max(1).min(horizon);
    let mut rows = Vec::new();
    for n in 0..=horizon {
        let mut counts = vec![0u128; d.vertex_count(n)?];
        if n == 0 {
            let any = g.rules.iter().any(|r| !r.from.is_empty() || !r.to.is_empty()) || !g.singular.is_empty();
            let identity_rule = g.rules.iter().any(|r| r.from.is_empty() && r.to.is_empty());
            counts.iter_mut().for_each(|c| *c = (any && !identity_rule) as u128);
        } else {
            for p in d.paths(n)? {
                if !g.is_prefix_replacement_on(d, &p)? {
                    counts[d.target(&p)?] += 1;
                }
            }
        }
        rows.extend(counts.into_iter().enumerate().map(|(v, count)| ProfileRow { level: n, vertex: v, count }));
    }
    let mut profile = SingularityProfile {
        rows,
        exact_to,
        activity: None,
        discrepancies: Vec::new(),
        verdict: ProfileVerdict::Inconclusive { horizon },
    };
    let per_level = profile.max_per_level();
    if g.singular.is_empty() || stabilized(&per_level, exact_to) {
        profile.verdict = ProfileVerdict::BoundedWith {
            sup: per_level.iter().copied().max().unwrap_or(0),
            horizon,
        };
    }
    Ok(profile)
}

/// Profile of a tree automorphism over the stationary diagram of its tree.
/// Since `g(vw) = g(v) g|_v(w)`, the restriction to the cylinder of `v` is a
/// prefix replacement iff the section `g|_v` is trivial. Counts are taken by
/// walking nontrivial sections and compared against the activity; levels
/// where the two differ are listed in `discrepancies`.
pub fn tree_profile(g: &Automorphism, horizon: usize) -> Result<SingularityProfile> {
    let activity: Vec<u128> = (0..=horizon).map(|n| g.activity(n)).collect();
    let tree = g.tree();
    let mut frontier: Vec<Vertex> = if g.is_trivial() { Vec::new() } else { vec![Vertex::root()] };
    let mut counts = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        counts.push(frontier.len() as u128);
        if n == horizon {
            break;
        }
        let mut next = Vec::new();
        for v in &frontier {
            for w in tree.children(v) {
                if !g.section(&w)?.is_trivial() {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    let discrepancies = (0..=horizon).filter(|&n| counts[n] != activity[n]).collect();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(n, &count)| ProfileRow { level: n, vertex: 0, count })
        .collect();
    let verdict = match g.tree().is_regular().then(|| bounded_check(g, horizon)).transpose()? {
        Some(r) => match r.verdict {
            Boundedness::BoundedWith { bound, .. } => ProfileVerdict::BoundedWith { sup: bound, horizon },
            _ => ProfileVerdict::Inconclusive { horizon },
        },
        None if stabilized(&counts, horizon) => ProfileVerdict::BoundedWith {
            sup: counts.iter().copied().max().unwrap_or(0),
            horizon,
        },
        None => ProfileVerdict::Inconclusive { horizon },
    };
    Ok(SingularityProfile {
        rows,
        exact_to: horizon,
        activity: Some(activity),
        discrepancies,
        verdict,
    })
}

/// Identification of a one-vertex-per-level diagram with a tree of words.
#[derive(Clone, Debug)]
pub struct TreeCorrespondence {
    pub tree: TreeSpec,
    diagram: BratteliDiagram,
}

pub fn tree_correspondence(d: &BratteliDiagram) -> Result<TreeCorrespondence> {
    if !d.is_tree_of_words() || d.tail != Tail::Repeat {
        return Err(Error::InvalidDiagram(
            "tree correspondence needs a repeating diagram with one vertex per level".into(),
        ));
    }
    let degrees = d.levels.iter().map(|l| l.edges.len() as u32).collect();
    Ok(TreeCorrespondence {
        tree: TreeSpec::new(degrees, true)?,
        diagram: d.clone(),
    })
}

impl TreeCorrespondence {
    pub fn diagram(&self) -> &BratteliDiagram {
        &self.diagram
    }

    pub fn vertex(&self, p: &Path) -> Vertex {
        Vertex::from_letters(p.0.iter().map(|&e| e as Letter).collect())
    }

    pub fn path(&self, v: &Vertex) -> Path {
        Path(v.letters().iter().map(|&x| x as usize).collect())
    }

    /// Depth below which every section is trivial, if at most `max_depth`.
    pub fn finitary_depth(g: &Automorphism, max_depth: usize) -> Option<usize> {
        (0..=max_depth).find(|&n| g.activity(n) == 0)
    }

    /// Rules `w ↦ g(w)` on the level below which `g` is trivial.
    pub fn to_homeo(&self, g: &Automorphism, max_depth: usize) -> Result<BoundedTypeHomeo> {
        if g.tree() != &self.tree {
            return Err(Error::TreeMismatch);
        }
        let n = Self::finitary_depth(g, max_depth)
            .ok_or_else(|| Error::Unsupported(format!("element is not finitary within depth {max_depth}")))?;
        let rules = self
            .tree
            .level(n)
            .into_iter()
            .map(|w| {
                Ok(PrefixReplacement {
                    from: self.path(&w),
                    to: self.path(&g.act(&w)?),
                })
            })
            .collect::<Result<_>>()?;
        Ok(BoundedTypeHomeo {
            rules,
            singular: Vec::new(),
        })
    }

    /// The tree automorphism of a rule list without singular rays.
    pub fn from_homeo(&self, h: &BoundedTypeHomeo) -> Result<Automorphism> {
        h.validate(&self.diagram)?;
        if !h.singular.is_empty() {
            return Err(Error::Unsupported("singular rays have no finitary tree element".into()));
        }
        let n = h.rule_depth();
        let level = self.tree.level(n);
        let images: Vec<Vertex> = level
            .iter()
            .map(|w| {
                let p = self.path(w);
                h.apply(&p)
                    .map(|q| self.vertex(&q))
                    .ok_or_else(|| Error::InvalidDiagram(format!("no rule applies to {p}")))
            })
            .collect::<Result<_>>()?;
        // states: one per vertex above level n, then the trivial state
        let mut index: BTreeMap<Vertex, usize> = BTreeMap::new();
        let mut order = Vec::new();
        for k in 0..n {
            for v in self.tree.level(k) {
                index.insert(v.clone(), order.len());
                order.push(v);
            }
        }
        let trivial = order.len();
        let mut states = Vec::with_capacity(order.len() + 1);
        for v in &order {
            let k = v.len();
            let d = self.tree.degree_at_depth(k);
            let mut perm = Vec::with_capacity(d);
            let mut sections = Vec::with_capacity(d);
            for x in 0..d {
                let child = v.child(x as Letter);
                // any level-n descendant of the child determines its image letter
                let mut below = child.letters().to_vec();
                below.resize(n, 0);
                let img = &images[self.tree.level_index(&Vertex::from_letters(below))];
                perm.push(img.letters()[k]);
                sections.push(if k + 1 < n { index[&child] as u32 } else { trivial as u32 });
            }
            states.push(State {
                phase: self.tree.phase_of_depth(k) as u32,
                perm,
                sections,
            });
        }
        let d = self.tree.degree_at_depth(n);
        states.push(State {
            phase: 0,
            perm: (0..d as Letter).collect(),
            sections: vec![trivial as u32; d],
        });
        let g = Automorphism::from_table(self.tree.clone(), states, 0)?;
        for (w, img) in level.iter().zip(&images) {
            if g.act(w)? != *img {
                return Err(Error::InvalidDiagram("rules do not define a tree automorphism".into()));
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::load_group;

    #[test]
    fn diagram_validation() {
        let ok = BratteliDiagram::from_json(r#"{"levels": [{"vertices": 1, "edges": [[0,0],[0,0]]}], "tail": "repeat"}"#);
        assert!(ok.unwrap().is_tree_of_words());
        let dangling = BratteliDiagram::from_json(
            r#"{"levels": [{"vertices": 2, "edges": [[0,0],[0,1]]}, {"vertices": 1, "edges": [[0,0]]}], "tail": "stop"}"#,
        );
        assert!(matches!(dangling, Err(Error::InvalidDiagram(_))));
        let mixed = BratteliDiagram::from_json(
            r#"{"levels": [{"vertices": 1, "edges": [[0,0],[0,0]]}, {"vertices": 1, "edges": [[0,0],[0,0],[0,0]]}], "tail": "repeat"}"#,
        )
        .unwrap();
        assert_eq!(mixed.path_counts(4).unwrap(), vec![36]);
        assert_eq!(mixed.paths(3).unwrap().len(), 12);
    }

    #[test]
    fn replacements_compose() {
        let d = BratteliDiagram::stationary_tree(2);
        let p = |v: &[usize]| Path(v.to_vec());
        let f = prefix_replacement(&d, p(&[0]), p(&[1])).unwrap();
        let g = prefix_replacement(&d, p(&[1]), p(&[0])).unwrap();
        assert_eq!(f.then(&g).unwrap(), prefix_replacement(&d, p(&[0]), p(&[0])).unwrap());
        assert_eq!(f.apply(&p(&[0, 1, 1])), Some(p(&[1, 1, 1])));
        assert!(prefix_replacement(&d, p(&[0]), p(&[1, 0])).is_err());
    }

    #[test]
    fn profiles() {
        let am = load_group("adding_machine").unwrap();
        let prof = tree_profile(am.generator("a").unwrap(), 10).unwrap();
        assert!(prof.rows.iter().all(|r| r.count == 1));
        let grig = load_group("grigorchuk").unwrap();
        for w in ["b", "ab", "bada", "abacabad"] {
            let prof = tree_profile(&grig.eval_str(w).unwrap(), 6).unwrap();
            assert!(prof.discrepancies.is_empty(), "{w}: {:?}", prof.discrepancies);
        }
        let d = BratteliDiagram::stationary_tree(2);
        let swap = BoundedTypeHomeo {
            rules: vec![
                PrefixReplacement { from: Path(vec![0, 0]), to: Path(vec![1, 0]) },
                PrefixReplacement { from: Path(vec![0, 1]), to: Path(vec![1, 1]) },
                PrefixReplacement { from: Path(vec![1]), to: Path(vec![0]) },
            ],
            singular: vec![],
        };
        let prof = homeo_profile(&d, &swap, 6).unwrap();
        assert!(prof.rows.iter().all(|r| r.count == 0 || r.level == 0));
        assert!(matches!(prof.verdict, ProfileVerdict::BoundedWith { sup: 1, .. }));
    }

    #[test]
    fn finitary_round_trip() {
        let c = tree_correspondence(&BratteliDiagram::stationary_tree(2)).unwrap();
        let t = &c.tree;
        let a = Automorphism::rooted(t, vec![1, 0]).unwrap();
        let one = Automorphism::identity(t);
        let y = Automorphism::from_recursion(t, vec![0, 1], &[one.clone(), a.clone()]).unwrap();
        let x = Automorphism::from_recursion(t, vec![1, 0], &[y, a]).unwrap();
        assert_eq!(TreeCorrespondence::finitary_depth(&x, 6), Some(3));
        let h = c.to_homeo(&x, 6).unwrap();
        assert_eq!(c.from_homeo(&h).unwrap(), x);
        for w in t.level(5) {
            assert_eq!(h.apply(&c.path(&w)).map(|p| c.vertex(&p)), Some(x.act(&w).unwrap()));
        }
        let am = load_group("adding_machine").unwrap();
        assert!(c.to_homeo(am.generator("a").unwrap(), 6).is_err());
    }
}
