//! Trees of words: degree schedules, vertices, cylinders, antichains and
//! eventually periodic boundary rays.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A letter of a level alphabet.
pub type Letter = u8;

/// Degree schedule of a spherically homogeneous rooted tree.
///
/// The schedule is indexed by *phase*. Vertices at depth `n` have
/// `degree(phase_of_depth(n))` children. With `repeat = true` the whole list
/// cycles; otherwise the last degree continues forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "TreeSpecRaw")]
pub struct TreeSpec {
    degrees: Vec<u32>,
    repeat: bool,
}

#[derive(Deserialize)]
struct TreeSpecRaw {
    degrees: Vec<u32>,
    #[serde(default = "default_true")]
    repeat: bool,
    #[serde(default)]
    degenerate: bool,
}

fn default_true() -> bool {
    true
}

impl TryFrom<TreeSpecRaw> for TreeSpec {
    type Error = Error;

    fn try_from(r: TreeSpecRaw) -> Result<Self> {
        TreeSpec::build(r.degrees, r.repeat, r.degenerate)
    }
}

impl TreeSpec {
    pub fn new(degrees: Vec<u32>, repeat: bool) -> Result<Self> {
        Self::build(degrees, repeat, false)
    }

    /// Like [`TreeSpec::new`] but admits degree-1 levels.
    pub fn new_degenerate(degrees: Vec<u32>, repeat: bool) -> Result<Self> {
        Self::build(degrees, repeat, true)
    }

    fn build(degrees: Vec<u32>, repeat: bool, allow_degenerate: bool) -> Result<Self> {
        if degrees.is_empty() {
            return Err(Error::InvalidTree("empty degree schedule".into()));
        }
        for &d in &degrees {
            if d == 0 || d > 256 || (d == 1 && !allow_degenerate) {
                return Err(Error::InvalidTree(format!("unsupported degree {d}")));
            }
        }
        // Constant schedules collapse to the canonical regular form.
        if degrees.iter().all(|&d| d == degrees[0]) {
            return Ok(Self {
                degrees: vec![degrees[0]],
                repeat: true,
            });
        }
        Ok(Self { degrees, repeat })
    }

    pub fn regular(degree: u32) -> Self {
        Self::new(vec![degree], true).expect("regular degree must be in 2..=256")
    }

    pub fn binary() -> Self {
        Self::regular(2)
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn repeats(&self) -> bool {
        self.repeat
    }

    pub fn is_regular(&self) -> bool {
        self.degrees.len() == 1
    }

    pub fn phase_count(&self) -> usize {
        self.degrees.len()
    }

    pub fn degree_at_phase(&self, phase: usize) -> usize {
        self.degrees[phase] as usize
    }

    pub fn next_phase(&self, phase: usize) -> usize {
        if phase + 1 < self.degrees.len() {
            phase + 1
        } else if self.repeat {
            0
        } else {
            self.degrees.len() - 1
        }
    }

    pub fn phase_of_depth(&self, depth: usize) -> usize {
        if depth < self.degrees.len() {
            depth
        } else if self.repeat {
            depth % self.degrees.len()
        } else {
            self.degrees.len() - 1
        }
    }

    /// The subtree below any vertex of phase `phase`, as a tree in its own right.
    pub fn shifted(&self, phase: usize) -> TreeSpec {
        if phase == 0 {
            return self.clone();
        }
        let degrees = if self.repeat {
            let mut d = self.degrees.clone();
            d.rotate_left(phase);
            d
        } else {
            self.degrees[phase..].to_vec()
        };
        TreeSpec::build(degrees, self.repeat, true).expect("shift of a valid schedule")
    }

    /// Phase in `self.shifted(shift)` of a vertex whose phase in `self` is `phase`
    /// (only meaningful for phases reachable from `shift`).
    pub fn shifted_phase(&self, shift: usize, phase: usize) -> usize {
        let target = self.shifted(shift);
        if self.repeat {
            let len = self.degrees.len();
            (phase + len - shift) % len % target.phase_count()
        } else {
            (phase - shift).min(target.phase_count() - 1)
        }
    }

    /// Number of children of a vertex at `depth`.
    pub fn degree_at_depth(&self, depth: usize) -> usize {
        self.degree_at_phase(self.phase_of_depth(depth))
    }

    /// `|L(n)| = d_1 * ... * d_n`, saturating.
    pub fn level_size(&self, n: usize) -> u128 {
        (0..n).fold(1u128, |acc, i| acc.saturating_mul(self.degree_at_depth(i) as u128))
    }

    pub fn check_vertex(&self, v: &Vertex) -> Result<()> {
        for (i, &x) in v.letters().iter().enumerate() {
            if x as usize >= self.degree_at_depth(i) {
                return Err(Error::LetterOutOfRange {
                    letter: x as usize,
                    depth: i,
                    degree: self.degree_at_depth(i),
                });
            }
        }
        Ok(())
    }

    pub fn children(&self, v: &Vertex) -> impl Iterator<Item = Vertex> + '_ {
        let d = self.degree_at_depth(v.len());
        let base = v.clone();
        (0..d).map(move |x| base.child(x as Letter))
    }

    /// All vertices of level `n` in lexicographic order.
    pub fn level(&self, n: usize) -> Vec<Vertex> {
        let mut out = vec![Vertex::root()];
        for depth in 0..n {
            let d = self.degree_at_depth(depth);
            out = out
                .iter()
                .flat_map(|v| (0..d).map(move |x| v.child(x as Letter)))
                .collect();
        }
        out
    }

    /// Mixed-radix index of `v` inside its level (lexicographic order).
    pub fn level_index(&self, v: &Vertex) -> usize {
        v.letters()
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &x)| acc * self.degree_at_depth(i) + x as usize)
    }

    /// Inverse of [`TreeSpec::level_index`].
    pub fn vertex_at(&self, n: usize, mut index: usize) -> Vertex {
        let mut letters = vec![0; n];
        for i in (0..n).rev() {
            let d = self.degree_at_depth(i);
            letters[i] = (index % d) as Letter;
            index /= d;
        }
        Vertex::from_letters(letters)
    }
}

impl fmt::Display for TreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ds: Vec<String> = self.degrees.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]{}", ds.join(","), if self.repeat { "*" } else { "+" })
    }
}

/// A vertex of a tree of words: a finite word, the empty word being the root.
///
/// Ordered shortlex (length first, then lexicographically).
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Vertex(Vec<Letter>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Vertex(letters)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, x: Letter) -> Vertex {
        let mut v = self.0.clone();
        v.push(x);
        Vertex(v)
    }

    pub fn parent(&self) -> Option<Vertex> {
        if self.0.is_empty() {
            None
        } else {
            Some(Vertex(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, n: usize) -> Vertex {
        Vertex(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn concat(&self, other: &Vertex) -> Vertex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Vertex(v)
    }

    /// `self` is a (non-strict) prefix of `other`, i.e. `other` lies below `self`.
    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_independent(&self, other: &Vertex) -> bool {
        !self.is_prefix_of(other) && !other.is_prefix_of(self)
    }
}

impl Ord for Vertex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Vertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn write_letters(f: &mut fmt::Formatter<'_>, letters: &[Letter]) -> fmt::Result {
    if letters.iter().all(|&x| x < 10) {
        for x in letters {
            write!(f, "{x}")?;
        }
        Ok(())
    } else {
        let parts: Vec<String> = letters.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join("."))
    }
}

fn parse_letters(s: &str) -> Result<Vec<Letter>> {
    let bad = || Error::Parse(format!("bad letter sequence `{s}`"));
    if s.contains('.') {
        s.split('.').map(|p| p.parse::<Letter>().map_err(|_| bad())).collect()
    } else {
        s.chars()
            .map(|c| c.to_digit(10).map(|d| d as Letter).ok_or_else(bad))
            .collect()
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        write_letters(f, &self.0)
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({self})")
    }
}

impl FromStr for Vertex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "ε" || s == "e" || s == "root" {
            return Ok(Vertex::root());
        }
        Ok(Vertex(parse_letters(s)?))
    }
}

impl Serialize for Vertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Relation between the cylinders of two vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CylinderRelation {
    Equal,
    /// The first vertex lies strictly below the second.
    VBelowW,
    /// The second vertex lies strictly below the first.
    WBelowV,
    Disjoint,
}

impl CylinderRelation {
    pub fn mirror(self) -> Self {
        match self {
            CylinderRelation::VBelowW => CylinderRelation::WBelowV,
            CylinderRelation::WBelowV => CylinderRelation::VBelowW,
            r => r,
        }
    }
}

pub fn cylinder_relation(tree: &TreeSpec, v: &Vertex, w: &Vertex) -> Result<CylinderRelation> {
    tree.check_vertex(v)?;
    tree.check_vertex(w)?;
    Ok(if v == w {
        CylinderRelation::Equal
    } else if w.is_prefix_of(v) {
        CylinderRelation::VBelowW
    } else if v.is_prefix_of(w) {
        CylinderRelation::WBelowV
    } else {
        CylinderRelation::Disjoint
    })
}

/// A finite set of pairwise independent vertices, kept in shortlex order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vertex>", into = "Vec<Vertex>")]
pub struct Antichain(BTreeSet<Vertex>);

impl TryFrom<Vec<Vertex>> for Antichain {
    type Error = Error;

    fn try_from(v: Vec<Vertex>) -> Result<Self> {
        Antichain::new(v)
    }
}

impl From<Antichain> for Vec<Vertex> {
    fn from(a: Antichain) -> Self {
        a.0.into_iter().collect()
    }
}

impl Antichain {
    pub fn new(vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let set: BTreeSet<Vertex> = vertices.into_iter().collect();
        let list: Vec<&Vertex> = set.iter().collect();
        for (i, a) in list.iter().enumerate() {
            for b in &list[i + 1..] {
                if !a.is_independent(b) {
                    return Err(Error::NotAntichain(format!("{a} and {b} are nested")));
                }
            }
        }
        Ok(Antichain(set))
    }

    pub fn empty() -> Self {
        Antichain(BTreeSet::new())
    }

    pub fn singleton(v: Vertex) -> Self {
        Antichain([v].into_iter().collect())
    }

    /// Builds the antichain of maximal elements (drops vertices lying below others).
    pub fn from_cover(vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let set: BTreeSet<Vertex> = vertices.into_iter().collect();
        let keep = set
            .iter()
            .filter(|v| !set.iter().any(|u| u != *v && u.is_prefix_of(v)))
            .cloned()
            .collect();
        Antichain(keep)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vertex> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: &Vertex) -> bool {
        self.0.contains(v)
    }

    pub fn max_depth(&self) -> usize {
        self.0.iter().map(Vertex::len).max().unwrap_or(0)
    }

    /// Does some cylinder of the antichain contain the cylinder of `v`?
    pub fn covers_vertex(&self, v: &Vertex) -> bool {
        self.0.iter().any(|a| a.is_prefix_of(v))
    }

    /// Cylinders of `self` and of `other` share no point.
    pub fn disjoint_from(&self, other: &Antichain) -> bool {
        self.0
            .iter()
            .all(|a| other.0.iter().all(|b| a.is_independent(b)))
    }

    /// Every level-`n` descendant of the antichain (vertices deeper than `n` are kept).
    pub fn refine_to_depth(&self, tree: &TreeSpec, n: usize) -> Antichain {
        let mut out = BTreeSet::new();
        for v in &self.0 {
            let mut frontier = vec![v.clone()];
            while let Some(u) = frontier.pop() {
                if u.len() >= n {
                    out.insert(u);
                } else {
                    frontier.extend(tree.children(&u));
                }
            }
        }
        Antichain(out)
    }

    /// Canonical coarsest form: repeatedly merges complete sibling families.
    pub fn normalized(&self, tree: &TreeSpec) -> Antichain {
        let mut set = self.0.clone();
        loop {
            let mut merged = None;
            for v in set.iter().rev() {
                if let Some(p) = v.parent() {
                    let d = tree.degree_at_depth(p.len());
                    if (0..d).all(|x| set.contains(&p.child(x as Letter))) {
                        merged = Some(p);
                        break;
                    }
                }
            }
            match merged {
                Some(p) => {
                    let d = tree.degree_at_depth(p.len());
                    for x in 0..d {
                        set.remove(&p.child(x as Letter));
                    }
                    set.insert(p);
                }
                None => return Antichain(set),
            }
        }
    }

    /// Point-set equality of the unions of cylinders.
    pub fn same_set(&self, other: &Antichain, tree: &TreeSpec) -> bool {
        self.normalized(tree) == other.normalized(tree)
    }

    pub fn union(&self, other: &Antichain) -> Antichain {
        Antichain::from_cover(self.0.iter().chain(other.0.iter()).cloned())
    }
}

impl fmt::Display for Antichain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// The coarsest antichain `B` such that the cylinders of `A ∪ B` partition the boundary.
///
/// An antichain containing the root yields the empty complement; the empty
/// antichain yields `{root}`.
pub fn complement_antichain(a: &Antichain, tree: &TreeSpec) -> Result<Antichain> {
    for v in a.iter() {
        tree.check_vertex(v)?;
    }
    if a.is_empty() {
        return Ok(Antichain::singleton(Vertex::root()));
    }
    if a.contains(&Vertex::root()) {
        return Ok(Antichain::empty());
    }
    let prefixes: BTreeSet<Vertex> = a
        .iter()
        .flat_map(|v| (0..v.len()).map(move |n| v.prefix(n)))
        .collect();
    let mut out = BTreeSet::new();
    for p in &prefixes {
        for c in tree.children(p) {
            if !prefixes.contains(&c) && !a.contains(&c) {
                out.insert(c);
            }
        }
    }
    Ok(Antichain(out))
}

/// An eventually periodic boundary point `preperiod · period^∞` of a regular tree.
///
/// Always stored in canonical form: primitive period, shortest preperiod.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ray {
    preperiod: Vec<Letter>,
    period: Vec<Letter>,
}

impl Ray {
    pub fn new(preperiod: Vec<Letter>, period: Vec<Letter>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Parse("ray period must be nonempty".into()));
        }
        Ok(Self::canonical(preperiod, period))
    }

    /// `letter^∞`.
    pub fn constant(letter: Letter) -> Self {
        Ray {
            preperiod: Vec::new(),
            period: vec![letter],
        }
    }

    fn canonical(mut pre: Vec<Letter>, mut period: Vec<Letter>) -> Self {
        // primitive root of the period
        let n = period.len();
        for p in 1..=n {
            if n % p == 0 && (p..n).all(|i| period[i] == period[i - p]) {
                period.truncate(p);
                break;
            }
        }
        // absorb the tail of the preperiod into the period
        while let Some(&last) = pre.last() {
            if last == *period.last().unwrap() {
                pre.pop();
                period.rotate_right(1);
            } else {
                break;
            }
        }
        Ray {
            preperiod: pre,
            period,
        }
    }

    pub fn preperiod(&self) -> &[Letter] {
        &self.preperiod
    }

    pub fn period(&self) -> &[Letter] {
        &self.period
    }

    pub fn letter(&self, i: usize) -> Letter {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    pub fn prefix(&self, n: usize) -> Vertex {
        Vertex((0..n).map(|i| self.letter(i)).collect())
    }

    pub fn check(&self, tree: &TreeSpec) -> Result<()> {
        if !tree.is_regular() {
            return Err(Error::NonRegularTree("rays"));
        }
        let d = tree.degree_at_phase(0);
        if self
            .preperiod
            .iter()
            .chain(self.period.iter())
            .any(|&x| x as usize >= d)
        {
            return Err(Error::Parse(format!("ray {self} has letters outside the alphabet")));
        }
        Ok(())
    }

    /// Does the ray pass through `v`?
    pub fn passes_through(&self, v: &Vertex) -> bool {
        v.letters()
            .iter()
            .enumerate()
            .all(|(i, &x)| self.letter(i) == x)
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_letters(f, &self.preperiod)?;
        write!(f, "(")?;
        write_letters(f, &self.period)?;
        write!(f, ")")
    }
}

impl fmt::Debug for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ray({self})")
    }
}

impl FromStr for Ray {
    type Err = Error;

    /// Parses `pre(period)`, e.g. `(1)` for `1^∞` or `01(10)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad ray `{s}`, expected pre(period)"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let pre = &s[..open];
        let per = &s[open + 1..s.len() - 1];
        let pre = if pre.is_empty() {
            Vec::new()
        } else {
            parse_letters(pre)?
        };
        Ray::new(pre, parse_letters(per)?)
    }
}

impl Serialize for Ray {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ray {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
