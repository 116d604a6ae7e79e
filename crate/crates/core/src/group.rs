//! Finitely generated groups of tree automorphisms: symmetric generating sets,
//! words, and breadth-first ball enumeration.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automaton::Automorphism;
use crate::error::{Error, Result};
use crate::graph::{explore, ExploreSpec, HashStore, LabeledGraph};
use crate::tree::{Letter, TreeSpec, Vertex};

/// One element of the symmetric generating set.
#[derive(Clone, Debug)]
pub struct Label {
    pub name: String,
    pub element: Automorphism,
    /// Index of the label whose element is the inverse of this one.
    pub inverse: Option<usize>,
}

/// Known elements of rigid stabilizers, given as words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RistHint {
    pub vertex: Vertex,
    pub words: Vec<String>,
}

/// Substitution `w ↦ lift(w)` such that `w ∈ rist(u)` implies `lift(w) ∈ rist(letter·u)`
/// (each lifted element is re-verified before use).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lift {
    pub letter: Letter,
    pub substitution: std::collections::BTreeMap<String, String>,
}

#[derive(Clone, Debug)]
pub struct GroupSpec {
    pub name: String,
    tree: TreeSpec,
    generators: Vec<(String, Automorphism)>,
    labels: Vec<Label>,
    symmetric: bool,
    pub rist_hints: Vec<RistHint>,
    pub lift: Option<Lift>,
    pub level_transitive: bool,
}

impl GroupSpec {
    pub fn new(
        name: impl Into<String>,
        tree: TreeSpec,
        mut generators: Vec<(String, Automorphism)>,
        symmetric: bool,
    ) -> Result<Self> {
        generators.sort_by(|a, b| a.0.cmp(&b.0));
        for w in generators.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Schema(format!("duplicate generator `{}`", w[0].0)));
            }
        }
        for (n, g) in &generators {
            if g.tree() != &tree {
                return Err(Error::Schema(format!("generator `{n}` lives on another tree")));
            }
            if n.is_empty() || n.contains(char::is_whitespace) || n.contains('^') || n.contains('\'') {
                return Err(Error::Schema(format!("bad generator name `{n}`")));
            }
        }
        let labels = build_labels(&generators, symmetric);
        Ok(GroupSpec {
            name: name.into(),
            tree,
            generators,
            labels,
            symmetric,
            rist_hints: Vec::new(),
            lift: None,
            level_transitive: false,
        })
    }

    pub fn tree(&self) -> &TreeSpec {
        &self.tree
    }

    pub fn generators(&self) -> &[(String, Automorphism)] {
        &self.generators
    }

    pub fn generator(&self, name: &str) -> Result<&Automorphism> {
        self.generators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))
    }

    /// Symmetric generating set, sorted by label name.
    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn identity(&self) -> Automorphism {
        Automorphism::identity(&self.tree)
    }

    /// Parses a word over the generator names.
    ///
    /// Tokens are separated by whitespace or `.`; without separators, the longest
    /// matching generator name is taken greedily. A token may carry `^-1`, `'`
    /// or `^k`. `e`/`1` denote the identity unless they name generators.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        let tokens: Vec<String> = if s.contains(|c: char| c.is_whitespace() || c == '.') {
            s.split(|c: char| c.is_whitespace() || c == '.')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect()
        } else {
            self.split_greedy(s)?
        };
        for tok in tokens {
            let (base, power) = split_power(&tok)?;
            if (base == "e" || base == "1") && self.generator(base).is_err() {
                continue;
            }
            let idx = self
                .generators
                .iter()
                .position(|(n, _)| n == base)
                .ok_or_else(|| Error::UnknownGenerator(base.to_string()))?;
            for _ in 0..power.unsigned_abs() {
                letters.push(WordLetter {
                    generator: idx,
                    inverse: power < 0,
                });
            }
        }
        Ok(Word(letters))
    }

    fn split_greedy(&self, s: &str) -> Result<Vec<String>> {
        let mut out = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let name = self
                .generators
                .iter()
                .map(|(n, _)| n.as_str())
                .chain(["e", "1"])
                .filter(|n| rest.starts_with(n))
                .max_by_key(|n| n.len())
                .ok_or_else(|| Error::Parse(format!("cannot tokenize `{s}`")))?;
            let mut len = name.len();
            let tail = &rest[len..];
            if let Some(stripped) = tail.strip_prefix('\'') {
                let _ = stripped;
                len += 1;
            } else if let Some(pw) = tail.strip_prefix('^') {
                let digits = pw
                    .char_indices()
                    .take_while(|(i, c)| c.is_ascii_digit() || (*i == 0 && *c == '-'))
                    .count();
                len += 1 + digits;
            }
            out.push(rest[..len].to_string());
            rest = &rest[len..];
        }
        Ok(out)
    }

    pub fn eval(&self, w: &Word) -> Result<Automorphism> {
        let mut acc = self.identity();
        for l in &w.0 {
            let g = &self.generators[l.generator].1;
            let g = if l.inverse { g.invert() } else { g.clone() };
            acc = acc.compose(&g)?;
        }
        Ok(acc)
    }

    pub fn eval_str(&self, s: &str) -> Result<Automorphism> {
        self.eval(&self.parse_word(s)?)
    }

    /// Left-multiplication ball of the given radius around the identity.
    pub fn ball(&self, radius: usize) -> Result<Ball> {
        enumerate_ball(&self.identity(), &self.labels, radius, usize::MAX)
    }

    /// As [`GroupSpec::ball`], stopping once `cap` elements are known.
    pub fn ball_capped(&self, radius: usize, cap: usize) -> Result<Ball> {
        enumerate_ball(&self.identity(), &self.labels, radius, cap)
    }

    /// Level permutations of every label.
    pub fn level_permutations(&self, n: usize) -> Vec<Vec<usize>> {
        self.labels
            .iter()
            .map(|l| l.element.level_permutation(n))
            .collect()
    }
}

fn split_power(tok: &str) -> Result<(&str, i64)> {
    if let Some(base) = tok.strip_suffix('\'') {
        return Ok((base, -1));
    }
    if let Some(pos) = tok.find('^') {
        let p: i64 = tok[pos + 1..]
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?;
        return Ok((&tok[..pos], p));
    }
    Ok((tok, 1))
}

fn build_labels(generators: &[(String, Automorphism)], symmetric: bool) -> Vec<Label> {
    let mut raw: Vec<(String, Automorphism)> = generators.to_vec();
    if symmetric {
        for (n, g) in generators {
            let inv = g.invert();
            if !raw.iter().any(|(_, h)| *h == inv) {
                raw.push((format!("{n}^-1"), inv));
            }
        }
    }
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    let mut labels: Vec<Label> = raw
        .iter()
        .map(|(n, g)| Label {
            name: n.clone(),
            element: g.clone(),
            inverse: None,
        })
        .collect();
    for i in 0..labels.len() {
        let inv = labels[i].element.invert();
        labels[i].inverse = labels.iter().position(|l| l.element == inv);
    }
    labels
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WordLetter {
    pub generator: usize,
    pub inverse: bool,
}

/// A word over generators and their inverses; evaluates left to right as a
/// composition, so `ab` acts by `b` first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(pub Vec<WordLetter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(
            self.0
                .iter()
                .rev()
                .map(|l| WordLetter {
                    generator: l.generator,
                    inverse: !l.inverse,
                })
                .collect(),
        )
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word(self.0.iter().chain(&other.0).copied().collect())
    }

    pub fn display(&self, g: &GroupSpec) -> String {
        if self.0.is_empty() {
            return "e".into();
        }
        self.0
            .iter()
            .map(|l| {
                let (n, x) = &g.generators[l.generator];
                if l.inverse && !x.compose(x).is_ok_and(|s| s.is_trivial()) {
                    format!("{n}^-1")
                } else {
                    n.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Elements of a ball in a Cayley graph, discovered breadth-first.
///
/// Labels are applied in name order and new elements are numbered in discovery
/// order, so the numbering is reproducible. Vertex names are geodesic words.
#[derive(Clone, Debug)]
pub struct Ball {
    pub radius: usize,
    pub graph: LabeledGraph,
    pub elements: Vec<Automorphism>,
    pub distance: Vec<usize>,
    /// BFS stopped early because of the element cap.
    pub truncated: bool,
    /// No new elements appeared before the radius: the group is finite and fully listed.
    pub closed: bool,
    index: HashMap<Automorphism, usize>,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn position(&self, g: &Automorphism) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn contains(&self, g: &Automorphism) -> bool {
        self.index.contains_key(g)
    }

    /// Label indices of a geodesic word: `elements[i] = l_0 ∘ l_1 ∘ ...`.
    pub fn word(&self, i: usize) -> Vec<usize> {
        self.graph.word_to(i)
    }

    pub fn word_string(&self, i: usize) -> String {
        self.graph.names[i].clone()
    }

    /// Sizes of the balls of radius `0..=radius` around the identity.
    pub fn sphere_cumulative(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.radius + 1];
        for &d in &self.distance {
            out[d] += 1;
        }
        for r in 1..out.len() {
            out[r] += out[r - 1];
        }
        out
    }
}

fn word_name(labels: &[String], w: &[usize]) -> String {
    if w.is_empty() {
        return "e".into();
    }
    w.iter().map(|&s| labels[s].as_str()).collect::<Vec<_>>().join(" ")
}

/// Breadth-first enumeration of the ball around `start` under left multiplication.
pub fn enumerate_ball(start: &Automorphism, labels: &[Label], radius: usize, cap: usize) -> Result<Ball> {
    let names: Vec<String> = labels.iter().map(|l| l.name.clone()).collect();
    let inverse: Vec<Option<usize>> = labels.iter().map(|l| l.inverse).collect();
    let spec = ExploreSpec {
        labels: &names,
        label_inverse: &inverse,
        radius,
        cap,
    };
    let mut store = HashStore::default();
    let ex = explore(
        spec,
        start.clone(),
        &mut store,
        |g, s| labels[s].element.compose(g),
        |_| String::new(),
    )?;
    let mut graph = ex.graph;
    for i in 0..graph.vertex_count() {
        graph.names[i] = word_name(&names, &graph.word_to(i));
    }
    Ok(Ball {
        radius,
        graph,
        elements: ex.payload,
        distance: ex.distance,
        truncated: ex.truncated,
        closed: ex.closed,
        index: store.0,
    })
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.generators.iter().map(|(n, _)| n.as_str()).collect();
        write!(f, "{} on {} generated by {{{}}}", self.name, self.tree, names.join(", "))
    }
}
