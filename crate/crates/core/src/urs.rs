//! Level-`n` fingerprints of closed subsets of the boundary and of subgroups.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::DEFAULT_LEVEL_CAP;
use crate::automaton::Automorphism;
use crate::confinement::{Named, RistSearch};
use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::oracle::{contains_any, SubgroupOracle};
use crate::tree::{Antichain, Ray, TreeSpec, Vertex};

pub const ORBIT_CAP: usize = 1_000_000;

/// A closed subset of the boundary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "representation", rename_all = "snake_case")]
pub enum ClosedSetSpec {
    /// `∂T ∖ ⋃_{a ∈ A} ∂T_a`.
    ComplementOfAntichain { antichain: Antichain },
    FiniteRays { rays: Vec<Ray> },
    /// Boundary of the spherically homogeneous subtree keeping the first
    /// `degrees[i]` children at depth `i`. With `repeat` the list is cyclic,
    /// otherwise every child is kept below its end.
    Subtree {
        degrees: Vec<u32>,
        #[serde(default = "yes")]
        repeat: bool,
    },
}

fn yes() -> bool {
    true
}

impl ClosedSetSpec {
    pub fn check(&self, tree: &TreeSpec) -> Result<()> {
        match self {
            ClosedSetSpec::ComplementOfAntichain { antichain } => {
                antichain.iter().try_for_each(|v| tree.check_vertex(v))
            }
            ClosedSetSpec::FiniteRays { rays } => rays.iter().try_for_each(|r| r.check(tree)),
            ClosedSetSpec::Subtree { degrees, repeat } => {
                if degrees.is_empty() {
                    return Err(Error::InvalidTree("empty subtree degree list".into()));
                }
                let span = if *repeat {
                    degrees.len() * tree.phase_count().max(1)
                } else {
                    degrees.len()
                };
                for i in 0..span {
                    let l = degrees[i % degrees.len()] as usize;
                    if l == 0 || l > tree.degree_at_depth(i) {
                        return Err(Error::InvalidTree(format!(
                            "subtree degree {l} at depth {i} outside 1..={}",
                            tree.degree_at_depth(i)
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    fn subtree_degree(degrees: &[u32], repeat: bool, depth: usize, full: usize) -> usize {
        if repeat {
            degrees[depth % degrees.len()] as usize
        } else {
            degrees.get(depth).map_or(full, |&l| l as usize)
        }
    }

    /// `∂T_v ∩ C = ∅`.
    pub fn misses(&self, tree: &TreeSpec, v: &Vertex) -> bool {
        match self {
            ClosedSetSpec::ComplementOfAntichain { antichain } => covered(antichain, tree, v),
            ClosedSetSpec::FiniteRays { rays } => rays.iter().all(|r| !r.passes_through(v)),
            ClosedSetSpec::Subtree { degrees, repeat } => v.letters().iter().enumerate().any(|(i, &x)| {
                x as usize >= Self::subtree_degree(degrees, *repeat, i, tree.degree_at_depth(i))
            }),
        }
    }
}

/// The cylinder of `v` lies inside the union of the cylinders of `a`.
fn covered(a: &Antichain, tree: &TreeSpec, v: &Vertex) -> bool {
    if a.covers_vertex(v) {
        return true;
    }
    if !a.iter().any(|w| v.is_prefix_of(w)) {
        return false;
    }
    tree.children(v).all(|c| covered(a, tree, &c))
}

/// A subset of the level `L(n)`, as a bitset over lexicographic positions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fingerprint {
    pub level: usize,
    pub bits: Vec<bool>,
}

impl Fingerprint {
    pub fn empty(tree: &TreeSpec, level: usize) -> Result<Self> {
        let size = level_size(tree, level)?;
        Ok(Fingerprint {
            level,
            bits: vec![false; size],
        })
    }

    pub fn from_vertices<'a>(tree: &TreeSpec, level: usize, vs: impl IntoIterator<Item = &'a Vertex>) -> Result<Self> {
        let mut f = Fingerprint::empty(tree, level)?;
        for v in vs {
            tree.check_vertex(v)?;
            if v.len() != level {
                return Err(Error::Precondition(format!("vertex {v} is not on level {level}")));
            }
            f.bits[tree.level_index(v)] = true;
        }
        Ok(f)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn vertices(&self, tree: &TreeSpec) -> Vec<Vertex> {
        self.indices().map(|i| tree.vertex_at(self.level, i)).collect()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// Image under a level permutation.
    pub fn permuted(&self, perm: &[usize]) -> Fingerprint {
        let mut bits = vec![false; self.bits.len()];
        for i in self.indices() {
            bits[perm[i]] = true;
        }
        Fingerprint { level: self.level, bits }
    }

    pub fn bitstring(&self) -> String {
        self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.level, self.bitstring())
    }
}

fn level_size(tree: &TreeSpec, n: usize) -> Result<usize> {
    let size = tree.level_size(n);
    if size > DEFAULT_LEVEL_CAP as u128 {
        return Err(Error::LevelCap {
            size,
            cap: DEFAULT_LEVEL_CAP,
        });
    }
    Ok(size as usize)
}

/// `A_n(C)`: the level-`n` vertices whose cylinders miss `C`.
pub fn empty_cylinder_fingerprint(c: &ClosedSetSpec, tree: &TreeSpec, n: usize) -> Result<Fingerprint> {
    if n == 0 {
        return Err(Error::Precondition("fingerprints start at level 1".into()));
    }
    c.check(tree)?;
    let mut f = Fingerprint::empty(tree, n)?;
    let level = tree.level(n);
    f.bits = level.par_iter().map(|v| c.misses(tree, v)).collect();
    Ok(f)
}

/// Vertices `v ∈ L(n)` whose rigid stabilizer elements found at scale `L` all
/// lie in `H`; an over-approximation of `{v : rist_G(v) ≤ H}` that can only
/// shrink as `L` grows.
pub fn rist_containment_fingerprint(g: &GroupSpec, h: &[SubgroupOracle], n: usize, l: usize) -> Result<Fingerprint> {
    let search = RistSearch::new(g, l)?;
    let tree = g.tree();
    let mut f = Fingerprint::empty(tree, n)?;
    for (i, v) in tree.level(n).iter().enumerate() {
        let mut inside = true;
        for x in search.rist(v)? {
            if !contains_any(h, &x.element)? {
                inside = false;
                break;
            }
        }
        f.bits[i] = inside;
    }
    Ok(f)
}

/// Elements of `H` in the ball of radius `L`: the subgroup's own ball for word
/// lists, otherwise the members of the group ball.
pub fn subgroup_ball(g: &GroupSpec, h: &SubgroupOracle, l: usize) -> Result<Vec<Automorphism>> {
    if let Some(b) = h.enumerated() {
        return Ok(b.elements.clone());
    }
    let ball = g.ball(l)?;
    let keep: Vec<bool> = ball
        .elements
        .par_iter()
        .map(|x| h.contains(x))
        .collect::<Result<_>>()?;
    Ok(ball.elements.into_iter().zip(keep).filter(|(_, k)| *k).map(|(x, _)| x).collect())
}

/// Level-`n` vertices fixed by every enumerated element of `H`.
pub fn fix_level(g: &GroupSpec, h: &SubgroupOracle, n: usize, l: usize) -> Result<Fingerprint> {
    if n == 0 || l == 0 {
        return Err(Error::Precondition("fix_level needs n, L ≥ 1".into()));
    }
    let tree = g.tree();
    let size = level_size(tree, n)?;
    let elements = subgroup_ball(g, h, l)?;
    let bits = elements
        .par_iter()
        .map(|x| {
            let perm = x.level_permutation(n);
            (0..size).map(|i| perm[i] == i).collect::<Vec<bool>>()
        })
        .reduce(
            || vec![true; size],
            |a, b| a.iter().zip(&b).map(|(x, y)| *x && *y).collect(),
        );
    Ok(Fingerprint { level: n, bits })
}

/// The orbit of a subset of `L(n)` under the group, in discovery order.
pub fn subset_orbit(g: &GroupSpec, s: &Fingerprint, cap: usize) -> Result<Vec<Fingerprint>> {
    let perms = g.level_permutations(s.level);
    let mut seen: HashSet<Fingerprint> = HashSet::from([s.clone()]);
    let mut order = vec![s.clone()];
    let mut queue = VecDeque::from([s.clone()]);
    while let Some(x) = queue.pop_front() {
        for p in &perms {
            let y = x.permuted(p);
            if seen.insert(y.clone()) {
                if seen.len() > cap {
                    return Err(Error::OrbitCap(cap));
                }
                order.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    Ok(order)
}

/// Least element of the orbit; equal for two subsets exactly when they share an orbit.
pub fn orbit_representative(g: &GroupSpec, s: &Fingerprint) -> Result<Fingerprint> {
    Ok(subset_orbit(g, s, ORBIT_CAP)?.into_iter().min().unwrap())
}

/// `S₁` and `S₂` lie in the same orbit of the action on subsets of `L(n)`.
pub fn subset_orbit_equal(g: &GroupSpec, s1: &Fingerprint, s2: &Fingerprint) -> Result<bool> {
    if s1.level != s2.level || s1.bits.len() != s2.bits.len() {
        return Err(Error::Precondition("fingerprints on different levels".into()));
    }
    level_size(g.tree(), s1.level)?;
    if s1.len() != s2.len() {
        return Ok(false);
    }
    Ok(subset_orbit(g, s1, ORBIT_CAP)?.contains(s2))
}

/// Generators of `rist_G(V)` and of its derived subgroup at scale `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntichainSubgroup {
    pub generators: Vec<(Vertex, Named)>,
    /// Nontrivial commutators of pairs under a common vertex.
    pub derived: Vec<Named>,
    /// Pairs under independent vertices whose commutator was checked.
    pub cross_checked: usize,
    /// Every checked cross-vertex commutator is trivial.
    pub cross_trivial: bool,
}

pub fn antichain_subgroup(g: &GroupSpec, v: &Antichain, l: usize) -> Result<AntichainSubgroup> {
    antichain_subgroup_with(&RistSearch::new(g, l)?, v)
}

fn antichain_subgroup_with(search: &RistSearch<'_>, v: &Antichain) -> Result<AntichainSubgroup> {
    let mut generators = Vec::new();
    for w in v.iter() {
        for x in search.rist(w)? {
            generators.push((w.clone(), x));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..generators.len())
        .flat_map(|i| (i + 1..generators.len()).map(move |j| (i, j)))
        .collect();
    let comms: Vec<Automorphism> = pairs
        .par_iter()
        .map(|&(i, j)| generators[i].1.element.commutator(&generators[j].1.element))
        .collect::<Result<_>>()?;
    let mut derived = Vec::new();
    let mut seen = HashSet::new();
    let mut cross_checked = 0;
    let mut cross_trivial = true;
    for (&(i, j), c) in pairs.iter().zip(comms) {
        let (vi, gi) = &generators[i];
        let (vj, gj) = &generators[j];
        if vi == vj {
            if !c.is_trivial() && seen.insert(c.clone()) {
                derived.push(Named::new(format!("[{}, {}]", gi.name, gj.name), c));
            }
        } else {
            cross_checked += 1;
            cross_trivial &= c.is_trivial();
        }
    }
    Ok(AntichainSubgroup {
        generators,
        derived,
        cross_checked,
        cross_trivial,
    })
}

/// Both inclusions `rist_G(V)' ≤ H ≤ fix_G(fix(H))` at level `n` and scale `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichLedger {
    pub level: usize,
    pub radius: usize,
    pub fix_level: Vec<Vertex>,
    /// The non-fixed vertices of the level, whose rigid stabilizers are tested.
    pub partition: Vec<Vertex>,
    pub lower_checked: usize,
    pub lower_failed: usize,
    pub lower_first_failure: Option<String>,
    pub upper_checked: usize,
    pub upper_failed: usize,
    pub lower_passed: bool,
    pub upper_passed: bool,
}

impl SandwichLedger {
    pub fn passed(&self) -> bool {
        self.lower_passed && self.upper_passed
    }
}

pub fn sandwich_check(g: &GroupSpec, h: &SubgroupOracle, n: usize, l: usize) -> Result<SandwichLedger> {
    let tree = g.tree();
    let fixed = fix_level(g, h, n, l)?;
    let level = tree.level(n);
    let partition: Vec<Vertex> = level
        .iter()
        .enumerate()
        .filter(|(i, _)| !fixed.contains_index(*i))
        .map(|(_, v)| v.clone())
        .collect();
    let search = RistSearch::new(g, l)?;
    let sub = antichain_subgroup_with(&search, &Antichain::new(partition.clone())?)?;
    let mut lower_failed = 0;
    let mut lower_first_failure = None;
    for x in &sub.derived {
        if !h.contains(&x.element)? {
            lower_failed += 1;
            lower_first_failure.get_or_insert_with(|| x.name.clone());
        }
    }
    let fixed_vertices = fixed.vertices(tree);
    let elements = subgroup_ball(g, h, l)?;
    let upper_failed = elements
        .par_iter()
        .map(|x| -> Result<usize> {
            let mut bad = 0;
            for v in &fixed_vertices {
                if x.act(v)? != *v {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(SandwichLedger {
        level: n,
        radius: l,
        fix_level: fixed_vertices.clone(),
        partition,
        lower_checked: sub.derived.len(),
        lower_failed,
        lower_first_failure,
        upper_checked: elements.len() * fixed_vertices.len(),
        upper_failed,
        lower_passed: lower_failed == 0 && sub.cross_trivial,
        upper_passed: upper_failed == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleSpec;
    use crate::registry::load_group;

    fn v(s: &str) -> Vertex {
        s.parse().unwrap()
    }

    #[test]
    fn fingerprint_examples() {
        let t = TreeSpec::binary();
        let ray = ClosedSetSpec::FiniteRays {
            rays: vec![Ray::constant(1)],
        };
        let f = empty_cylinder_fingerprint(&ray, &t, 3).unwrap();
        assert_eq!(f.len(), 7);
        assert!(!f.contains_index(t.level_index(&v("111"))));
        let all = ClosedSetSpec::ComplementOfAntichain {
            antichain: Antichain::empty(),
        };
        assert!(empty_cylinder_fingerprint(&all, &t, 4).unwrap().is_empty());
        let half = ClosedSetSpec::ComplementOfAntichain {
            antichain: Antichain::singleton(v("1")),
        };
        let f = empty_cylinder_fingerprint(&half, &t, 2).unwrap();
        assert_eq!(f.vertices(&t), vec![v("10"), v("11")]);
        let split = ClosedSetSpec::ComplementOfAntichain {
            antichain: Antichain::new([v("10"), v("11")]).unwrap(),
        };
        assert_eq!(empty_cylinder_fingerprint(&split, &t, 1).unwrap().vertices(&t), vec![v("1")]);
    }

    #[test]
    fn orbit_examples() {
        let g = load_group("grigorchuk").unwrap();
        let t = g.tree();
        let s = |n: usize, xs: &[&str]| Fingerprint::from_vertices(t, n, &xs.iter().map(|x| v(x)).collect::<Vec<_>>()).unwrap();
        assert!(subset_orbit_equal(&g, &s(1, &["0"]), &s(1, &["1"])).unwrap());
        assert!(!subset_orbit_equal(&g, &s(1, &[]), &s(1, &["1"])).unwrap());
        assert!(subset_orbit_equal(&g, &s(2, &["11"]), &s(2, &["00"])).unwrap());
    }

    #[test]
    fn fix_and_rist_fingerprints() {
        let g = load_group("grigorchuk").unwrap();
        let t = g.tree();
        let point = SubgroupOracle::new(&g, OracleSpec::PointStabilizer { ray: Ray::constant(1) }).unwrap();
        for n in 1..=4 {
            let f = fix_level(&g, &point, n, 4).unwrap();
            assert!(f.contains_index(t.level_index(&Ray::constant(1).prefix(n))));
        }
        let germ = SubgroupOracle::new(&g, OracleSpec::GermStabilizer { ray: Ray::constant(1) }).unwrap();
        assert!(fix_level(&g, &germ, 2, 4).unwrap().contains_index(3));
        let r = rist_containment_fingerprint(&g, std::slice::from_ref(&point), 1, 3).unwrap();
        assert_eq!(r.vertices(t), vec![v("0")]);
        let rist0 = SubgroupOracle::new(&g, OracleSpec::RigidStabilizer { vertex: v("0") }).unwrap();
        let r = rist_containment_fingerprint(&g, std::slice::from_ref(&rist0), 1, 3).unwrap();
        assert_eq!(r.vertices(t), vec![v("0")]);
    }

    #[test]
    fn sandwich_examples() {
        let g = load_group("grigorchuk").unwrap();
        let point = SubgroupOracle::new(&g, OracleSpec::PointStabilizer { ray: Ray::constant(1) }).unwrap();
        assert!(sandwich_check(&g, &point, 3, 4).unwrap().passed());
        let sub = antichain_subgroup(&g, &Antichain::new([v("0"), v("1")]).unwrap(), 3).unwrap();
        assert!(sub.cross_trivial && sub.cross_checked > 0);
        let names: Vec<&str> = sub.generators.iter().map(|(_, x)| x.name.as_str()).collect();
        assert!(names.contains(&"d") && names.contains(&"a d a"));
    }
}
