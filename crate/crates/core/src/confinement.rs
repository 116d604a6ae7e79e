//! Confining sets, displacement configurations and the commutator engine.
//!
//! Everything here is exact on the elements it touches; verdicts that depend
//! on a finite search carry the scale at which they were obtained.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actions::{level_transversal, DEFAULT_LEVEL_CAP};
use crate::automaton::{Automorphism, Portrait};
use crate::error::{Error, Result};
use crate::group::{Ball, GroupSpec, Lift, Word};
use crate::oracle::{contains_any, OracleSpec, SubgroupOracle};
use crate::tree::{complement_antichain, Antichain, TreeSpec, Vertex};

pub const DEFAULT_DEPTH_BUDGET: usize = 12;

/// Backtracking nodes visited per depth before moving on to the next depth.
const SEARCH_NODE_BUDGET: usize = 1 << 21;

/// A group element with a name recording how it was obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Named {
    pub name: String,
    pub element: Automorphism,
}

impl Named {
    pub fn new(name: impl Into<String>, element: Automorphism) -> Self {
        Named {
            name: name.into(),
            element,
        }
    }

    pub fn from_word(g: &GroupSpec, word: &str) -> Result<Self> {
        Ok(Named::new(word, g.eval_str(word)?))
    }
}

/// Parses a list of words into named elements.
pub fn named_words(g: &GroupSpec, words: &[String]) -> Result<Vec<Named>> {
    words.iter().map(|w| Named::from_word(g, w)).collect()
}

/// `g` acts trivially on every cylinder in `outside`.
fn fixes_all(g: &Automorphism, outside: &[Vertex]) -> bool {
    outside.iter().all(|w| g.fixes_cylinder(w))
}

fn outside_of(a: &Antichain, tree: &TreeSpec) -> Result<Vec<Vertex>> {
    Ok(complement_antichain(a, tree)?.iter().cloned().collect())
}

fn image(g: &Automorphism, a: &Antichain) -> Result<Antichain> {
    Antichain::new(a.iter().map(|w| g.act(w)).collect::<Result<Vec<_>>>()?)
}

/// Exact membership of `g` in the rigid stabilizer of `v`.
pub fn in_rist(g: &Automorphism, v: &Vertex) -> Result<bool> {
    Ok(fixes_all(g, &outside_of(&Antichain::singleton(v.clone()), g.tree())?))
}

fn squares_trivially(g: &Automorphism) -> Result<bool> {
    Ok(g.compose(g)?.is_trivial())
}

// ---------------------------------------------------------------------------
// rigid stabilizers

/// Elements of rigid stabilizers found in a fixed ball of the group, merged
/// with the registry hints transported to the requested vertex.
pub struct RistSearch<'a> {
    group: &'a GroupSpec,
    ball: Ball,
}

impl<'a> RistSearch<'a> {
    pub fn new(group: &'a GroupSpec, radius: usize) -> Result<Self> {
        if radius == 0 {
            return Err(Error::Precondition("rigid stabilizer search needs L ≥ 1".into()));
        }
        Ok(RistSearch {
            group,
            ball: group.ball(radius)?,
        })
    }

    pub fn from_ball(group: &'a GroupSpec, ball: Ball) -> Self {
        RistSearch { group, ball }
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    /// Nontrivial elements of `rist_G(v)`: the ball elements in BFS order,
    /// then transported hints, deduplicated.
    pub fn rist(&self, v: &Vertex) -> Result<Vec<Named>> {
        let tree = self.group.tree();
        tree.check_vertex(v)?;
        let outside = outside_of(&Antichain::singleton(v.clone()), tree)?;
        let member = |g: &Automorphism| !g.is_trivial() && fixes_all(g, &outside);
        let hits: Vec<usize> = (0..self.ball.len())
            .into_par_iter()
            .filter(|&i| member(&self.ball.elements[i]))
            .collect();
        let mut seen: HashSet<Automorphism> = HashSet::new();
        let mut out = Vec::new();
        for i in hits {
            seen.insert(self.ball.elements[i].clone());
            out.push(Named::new(self.ball.word_string(i), self.ball.elements[i].clone()));
        }
        for h in self.transported_hints(v)? {
            if member(&h.element) && seen.insert(h.element.clone()) {
                out.push(h);
            }
        }
        Ok(out)
    }

    /// Hints for `rist(u)` lifted to `rist(x^k u)` and conjugated into `v`
    /// (or a descendant of `v` when `u` is deeper). Lifted words are candidates
    /// only: the caller re-verifies membership.
    fn transported_hints(&self, v: &Vertex) -> Result<Vec<Named>> {
        let g = self.group;
        let mut out = Vec::new();
        for hint in &g.rist_hints {
            let u = &hint.vertex;
            let depth = v.len().max(u.len());
            let k = depth - u.len();
            let lift = match (&g.lift, k) {
                (_, 0) => None,
                (Some(l), _) => Some(l),
                (None, _) => continue,
            };
            let letter = lift.map_or(0, |l| l.letter);
            let mut source = vec![letter; k];
            source.extend_from_slice(u.letters());
            let source = Vertex::from_letters(source);
            let mut target = v.letters().to_vec();
            target.resize(depth, 0);
            let target = Vertex::from_letters(target);
            let Some((conj_word, conj)) = self.transporter(&source, &target)? else {
                continue;
            };
            for w in &hint.words {
                let mut word = g.parse_word(w)?;
                if let Some(l) = lift {
                    for _ in 0..k {
                        word = lift_word(g, l, &word)?;
                    }
                }
                let x = g.eval(&word)?.conjugate_by(&conj)?;
                let full = conj_word.concat(&word).concat(&conj_word.inverse());
                out.push(Named::new(full.display(g), x));
            }
        }
        Ok(out)
    }

    /// A word mapping `from` to `to`, found on the level Schreier graph.
    fn transporter(&self, from: &Vertex, to: &Vertex) -> Result<Option<(Word, Automorphism)>> {
        let g = self.group;
        if from == to {
            return Ok(Some((Word::default(), g.identity())));
        }
        let n = from.len();
        let transversal = match level_transversal(g, n, DEFAULT_LEVEL_CAP) {
            Ok(t) => t,
            Err(Error::LevelCap { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let tree = g.tree();
        let word_of = |x: &Vertex| -> Result<Option<Word>> {
            match &transversal[tree.level_index(x)] {
                Some((_, labels)) => {
                    let names: Vec<&str> = labels.iter().map(|&s| g.labels()[s].name.as_str()).collect();
                    Ok(Some(if names.is_empty() {
                        Word::default()
                    } else {
                        g.parse_word(&names.join(" "))?
                    }))
                }
                None => Ok(None),
            }
        };
        let (Some(wf), Some(wt)) = (word_of(from)?, word_of(to)?) else {
            return Ok(None);
        };
        let word = wt.concat(&wf.inverse());
        let t = g.eval(&word)?;
        if t.act(from)? != *to {
            return Err(Error::Precondition(format!("transporter from {from} to {to} misroutes")));
        }
        Ok(Some((word, t)))
    }
}

fn lift_word(g: &GroupSpec, lift: &Lift, w: &Word) -> Result<Word> {
    let mut out = Word::default();
    for l in &w.0 {
        let name = &g.generators()[l.generator].0;
        let image = lift
            .substitution
            .get(name)
            .ok_or_else(|| Error::Schema(format!("lift has no image for `{name}`")))?;
        let image = g.parse_word(image)?;
        out = out.concat(&if l.inverse { image.inverse() } else { image });
    }
    Ok(out)
}

/// `rist_G(v) ∩ B(L)` together with transported registry hints.
pub fn rist_ball(g: &GroupSpec, v: &Vertex, l: usize) -> Result<Vec<Named>> {
    RistSearch::new(g, l)?.rist(v)
}

// ---------------------------------------------------------------------------
// confining sets

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Confinement {
    /// Every element of the ball conjugates some member of `P` into `H`.
    ConfirmedUpTo { radius: usize, checked: usize },
    /// `g⁻¹σg ∉ H` for every `σ ∈ P`.
    RefutedAt { word: String, element: Automorphism },
}

impl Confinement {
    pub fn is_confirmed(&self) -> bool {
        matches!(self, Confinement::ConfirmedUpTo { .. })
    }
}

fn check_nontrivial(p: &[Named]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Precondition("empty element set".into()));
    }
    let tree = p[0].element.tree();
    for s in p {
        if s.element.tree() != tree {
            return Err(Error::TreeMismatch);
        }
        if s.element.is_trivial() {
            return Err(Error::TrivialElement(s.name.clone()));
        }
    }
    Ok(())
}

/// Exhaustive check of `∀g ∈ B(L) ∃σ ∈ P: g⁻¹σg ∈ H₁ ∪ … ∪ H_n`.
pub fn check_confining(p: &[Named], h: &[SubgroupOracle], g: &GroupSpec, l: usize) -> Result<Confinement> {
    check_confining_on(p, h, &g.ball(l)?)
}

/// As [`check_confining`] over a precomputed ball.
pub fn check_confining_on(p: &[Named], h: &[SubgroupOracle], ball: &Ball) -> Result<Confinement> {
    check_nontrivial(p)?;
    if h.is_empty() {
        return Err(Error::Precondition("at least one subgroup oracle is required".into()));
    }
    let met: Vec<Result<bool>> = ball
        .elements
        .par_iter()
        .map(|g| {
            let gi = g.invert();
            for s in p {
                if contains_any(h, &s.element.conjugate_by(&gi)?)? {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect();
    for (i, m) in met.into_iter().enumerate() {
        if !m? {
            return Ok(Confinement::RefutedAt {
                word: ball.word_string(i),
                element: ball.elements[i].clone(),
            });
        }
    }
    Ok(Confinement::ConfirmedUpTo {
        radius: ball.radius,
        checked: ball.len(),
    })
}

// ---------------------------------------------------------------------------
// displacement configurations

/// Elements `P` with cylinder sets `Ω_σ`, one per element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementConfig {
    pub elements: Vec<Named>,
    pub omega: Vec<Antichain>,
}

/// Outcome of the exact check of (C1), (C3) and (C4).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisplacementCheck {
    /// Pairs whose sets are neither equal nor disjoint.
    pub c1: Vec<(usize, usize)>,
    /// Pairs `(σ, ρ)` with `ρ` in neither `M_σ` nor `F_σ`.
    pub c3: Vec<(usize, usize)>,
    /// Elements whose image `σ(Ω_σ)` meets `⋃Ω` or `⋃σ⁻¹(Ω)`.
    pub c4: Vec<usize>,
    /// `M_σ`: the `ρ` with `σ(Ω_ρ)` disjoint from every `Ω_α`.
    pub m_sigma: Vec<Vec<usize>>,
    /// `F_σ`: the `ρ` whose set `σ` fixes pointwise.
    pub f_sigma: Vec<Vec<usize>>,
}

impl DisplacementCheck {
    pub fn passed(&self) -> bool {
        self.c1.is_empty() && self.c3.is_empty() && self.c4.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some((s, r)) = self.c1.first() {
            parts.push(format!("C1 fails for ({s}, {r})"));
        }
        if let Some((s, r)) = self.c3.first() {
            parts.push(format!("C3 fails for ({s}, {r})"));
        }
        if let Some(s) = self.c4.first() {
            parts.push(format!("C4 fails for {s}"));
        }
        if parts.is_empty() {
            "all conditions hold".into()
        } else {
            parts.join("; ")
        }
    }
}

pub fn verify_displacement(cfg: &DisplacementConfig) -> Result<DisplacementCheck> {
    check_nontrivial(&cfg.elements)?;
    if cfg.omega.len() != cfg.elements.len() {
        return Err(Error::Precondition("one cylinder set per element is required".into()));
    }
    let tree = cfg.elements[0].element.tree();
    for a in &cfg.omega {
        if a.is_empty() {
            return Err(Error::Precondition("empty cylinder set".into()));
        }
        for v in a.iter() {
            tree.check_vertex(v)?;
        }
    }
    let n = cfg.elements.len();
    let union = Antichain::from_cover(cfg.omega.iter().flat_map(|a| a.iter().cloned()));
    let mut out = DisplacementCheck::default();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&cfg.omega[i], &cfg.omega[j]);
            if !a.same_set(b, tree) && !a.disjoint_from(b) {
                out.c1.push((i, j));
            }
        }
    }
    for (i, s) in cfg.elements.iter().enumerate() {
        let g = &s.element;
        let mut m = Vec::new();
        let mut f = Vec::new();
        for (r, om) in cfg.omega.iter().enumerate() {
            if om.iter().all(|w| g.fixes_cylinder(w)) {
                f.push(r);
            } else if image(g, om)?.disjoint_from(&union) {
                m.push(r);
            } else {
                out.c3.push((i, r));
            }
        }
        out.m_sigma.push(m);
        out.f_sigma.push(f);
        let moved = image(g, &cfg.omega[i])?;
        let pulled = image(&g.invert(), &union)?;
        if !moved.disjoint_from(&union) || !moved.disjoint_from(&pulled) {
            out.c4.push(i);
        }
    }
    Ok(out)
}

/// A displacement configuration by single cylinders of one common depth.
///
/// Depths are tried in increasing order; at each depth the cylinders are
/// chosen by backtracking over `P` in order, preferring cylinders already in
/// use, so that (C1) holds automatically and (C3), (C4) reduce to checks on
/// level permutations.
pub fn build_displacement(p: &[Named], depth_budget: usize) -> Result<DisplacementConfig> {
    check_nontrivial(p)?;
    for s in p {
        if squares_trivially(&s.element)? {
            return Err(Error::OrderTwoObstruction(s.name.clone()));
        }
    }
    let tree = p[0].element.tree().clone();
    for depth in 1..=depth_budget {
        let size = tree.level_size(depth);
        if size > DEFAULT_LEVEL_CAP as u128 {
            break;
        }
        let levels: Vec<(Vec<usize>, Vec<bool>)> = p
            .par_iter()
            .map(|s| {
                let g = &s.element;
                let triv = g.trivial_states();
                let perm = g.level_permutation(depth);
                let fixed = g
                    .level_states(depth)
                    .into_iter()
                    .enumerate()
                    .map(|(x, st)| perm[x] == x && triv[st as usize])
                    .collect();
                (perm, fixed)
            })
            .collect();
        let mut search = Backtrack {
            levels: &levels,
            size: size as usize,
            chosen: Vec::new(),
            nodes: 0,
        };
        if search.run() {
            let cfg = DisplacementConfig {
                elements: p.to_vec(),
                omega: search
                    .chosen
                    .iter()
                    .map(|&x| Antichain::singleton(tree.vertex_at(depth, x)))
                    .collect(),
            };
            let check = verify_displacement(&cfg)?;
            if check.passed() {
                return Ok(cfg);
            }
            return Err(Error::NotVerified(check.summary()));
        }
    }
    Err(Error::DepthBudgetExceeded(depth_budget))
}

struct Backtrack<'a> {
    /// Per element: level permutation and pointwise-fixed flags.
    levels: &'a [(Vec<usize>, Vec<bool>)],
    size: usize,
    chosen: Vec<usize>,
    nodes: usize,
}

impl Backtrack<'_> {
    fn run(&mut self) -> bool {
        let k = self.chosen.len();
        if k == self.levels.len() {
            return true;
        }
        let (perm, _) = &self.levels[k];
        let mut distinct: Vec<usize> = Vec::new();
        for &x in &self.chosen {
            if !distinct.contains(&x) {
                distinct.push(x);
            }
        }
        let fresh = (0..self.size).filter(|x| !distinct.contains(x));
        let candidates: Vec<usize> = distinct.iter().copied().chain(fresh).collect();
        for w in candidates {
            if perm[w] == w || perm[perm[w]] == w {
                continue;
            }
            self.nodes += 1;
            if self.nodes > SEARCH_NODE_BUDGET {
                return false;
            }
            self.chosen.push(w);
            if self.consistent() && self.run() {
                return true;
            }
            self.chosen.pop();
            if self.nodes > SEARCH_NODE_BUDGET {
                return false;
            }
        }
        false
    }

    fn consistent(&self) -> bool {
        let mut used: Vec<usize> = self.chosen.clone();
        used.sort_unstable();
        used.dedup();
        let inside = |x: usize| used.binary_search(&x).is_ok();
        self.chosen.iter().enumerate().all(|(i, &w)| {
            let (perm, fixed) = &self.levels[i];
            let c3 = used.iter().all(|&x| fixed[x] || !inside(perm[x]));
            c3 && !inside(perm[w]) && !inside(perm[perm[w]])
        })
    }
}

// ---------------------------------------------------------------------------
// removing involutions

/// Result of replacing a confining set by one without involutions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub elements: Vec<Named>,
    pub changed: bool,
    /// Cylinders `U_i`, one per original element.
    pub cylinders: Vec<Vertex>,
    /// Subcylinders `U_{i,j}` of each `U_i`.
    pub subcylinders: Vec<Vec<Vertex>>,
    /// Elements `γ_{i,j} ∈ rist(U_{i,j})` of order other than two.
    pub gammas: Vec<Vec<Named>>,
    pub verdict: Confinement,
}

/// Replaces a confining set containing involutions by the elements
/// `h = (γ_j σ γ_j⁻¹)⁻¹ (γ_k σ γ_k⁻¹)` built from products `γ_j` of rigid
/// stabilizer elements in disjoint cylinders, then re-checks confinement.
pub fn refine_confining(
    p: &[Named],
    h: &[SubgroupOracle],
    g: &GroupSpec,
    l: usize,
    depth_budget: usize,
) -> Result<Refinement> {
    check_nontrivial(p)?;
    let ball = g.ball(l)?;
    let verdict = check_confining_on(p, h, &ball)?;
    if let Confinement::RefutedAt { word, .. } = &verdict {
        return Err(Error::Precondition(format!("P is not confining at scale {l}: refuted at {word}")));
    }
    let mut has_involution = false;
    for s in p {
        has_involution |= squares_trivially(&s.element)?;
    }
    if !has_involution {
        return Ok(Refinement {
            elements: p.to_vec(),
            changed: false,
            cylinders: Vec::new(),
            subcylinders: Vec::new(),
            gammas: Vec::new(),
            verdict,
        });
    }
    let tree = g.tree();
    let cylinders = disjoint_moved_cylinders(p, tree, depth_budget)?;
    // pigeonhole over the conjugates γ_j σ γ_j⁻¹ needs n·r + 1 indices j
    let m = h.len() * p.len() + 1;
    let search = RistSearch::from_ball(g, ball);
    let mut subcylinders = Vec::new();
    let mut gammas = Vec::new();
    for u in &cylinders {
        let mut depth = u.len();
        let mut count = 1usize;
        while count < m {
            count *= tree.degree_at_depth(depth);
            depth += 1;
        }
        let subs: Vec<Vertex> = Antichain::singleton(u.clone())
            .refine_to_depth(tree, depth)
            .iter()
            .take(m)
            .cloned()
            .collect();
        let mut row = Vec::new();
        for v in &subs {
            let mut found = None;
            for c in search.rist(v)? {
                if !squares_trivially(&c.element)? {
                    found = Some(c);
                    break;
                }
            }
            row.push(found.ok_or(Error::NoRistGenerators(l))?);
        }
        subcylinders.push(subs);
        gammas.push(row);
    }
    let mut products = Vec::with_capacity(m);
    for j in 0..m {
        let mut acc = g.identity();
        for row in &gammas {
            acc = acc.compose(&row[j].element)?;
        }
        products.push(acc);
    }
    let mut elements = Vec::new();
    let mut seen = HashSet::new();
    for s in p {
        let conj: Vec<Automorphism> = products
            .iter()
            .map(|c| s.element.conjugate_by(c))
            .collect::<Result<_>>()?;
        for j in 0..m {
            for k in j + 1..m {
                let x = conj[j].invert().compose(&conj[k])?;
                if !x.is_trivial() && !squares_trivially(&x)? && seen.insert(x.clone()) {
                    elements.push(Named::new(format!("h[{}; {j}, {k}]", s.name), x));
                }
            }
        }
    }
    if elements.is_empty() {
        return Err(Error::Inconclusive("every candidate squares to the identity".into()));
    }
    let verdict = check_confining_on(&elements, h, search.ball())?;
    if let Confinement::RefutedAt { word, .. } = &verdict {
        return Err(Error::Inconclusive(format!("refined set is refuted at {word}")));
    }
    Ok(Refinement {
        elements,
        changed: true,
        cylinders,
        subcylinders,
        gammas,
        verdict,
    })
}

/// Cylinders `U_i` moved off themselves by `σ_i`, with all `U_i` and `σ_i(U_i)`
/// pairwise disjoint; first fit in shortlex order.
fn disjoint_moved_cylinders(p: &[Named], tree: &TreeSpec, depth_budget: usize) -> Result<Vec<Vertex>> {
    let mut taken: Vec<Vertex> = Vec::new();
    let mut out = Vec::new();
    for s in p {
        let mut found = None;
        'depths: for depth in 1..=depth_budget {
            if tree.level_size(depth) > DEFAULT_LEVEL_CAP as u128 {
                break;
            }
            for w in tree.level(depth) {
                let x = s.element.act(&w)?;
                if x != w && taken.iter().all(|t| t.is_independent(&w) && t.is_independent(&x)) {
                    found = Some((w, x));
                    break 'depths;
                }
            }
        }
        let (w, x) = found.ok_or(Error::DepthBudgetExceeded(depth_budget))?;
        taken.push(w.clone());
        taken.push(x);
        out.push(w);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// commutator engine

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineOptions {
    /// Radius of the group ball searched for rigid stabilizer elements.
    pub rist_radius: usize,
    /// Rigid stabilizer generators kept per cylinder.
    pub generators_per_cylinder: usize,
    /// Radius and element cap of the ball in the rigid stabilizer generators.
    pub r_radius: usize,
    pub r_cap: usize,
    /// Size caps on `Y_σ`, on the conjugators `λ` and on the `A_σ` sample.
    pub y_cap: usize,
    pub lambda_cap: usize,
    pub sample_cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            rist_radius: 8,
            generators_per_cylinder: 4,
            r_radius: 3,
            r_cap: 512,
            y_cap: 48,
            lambda_cap: 3,
            sample_cap: 24,
        }
    }
}

/// An element as an automaton table with its portrait to depth 3.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub name: String,
    pub automaton: Automorphism,
    pub portrait: Portrait,
}

impl ElementRecord {
    fn new(name: impl Into<String>, g: &Automorphism) -> Self {
        ElementRecord {
            name: name.into(),
            automaton: g.clone(),
            portrait: g.portrait(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub sigma: usize,
    pub check: String,
    pub checked: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

impl LedgerEntry {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessRecord {
    /// Index `ρ ∈ M_σ` with `h₀ ∈ rist(Ω_ρ)`.
    pub rho: usize,
    /// `rist_ball` or `commutator`.
    pub source: String,
    pub element: ElementRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub sigma: usize,
    pub name: String,
    pub omega: Antichain,
    pub m_sigma: Vec<usize>,
    pub f_sigma: Vec<usize>,
    /// Words in the rigid stabilizer generators, shortlex order.
    pub y_sample: Vec<String>,
    pub pairs: usize,
    pub nontrivial_a: usize,
    pub a_sample: Vec<ElementRecord>,
    /// Generators `γδ⁻¹` of the `D_σ` sample.
    pub d_sample: Vec<String>,
    pub b_sample: Vec<String>,
    pub h0: Option<WitnessRecord>,
    pub n_generators: Vec<ElementRecord>,
    /// `nontrivial` when `N` was produced, `inconclusive` otherwise.
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineReport {
    pub group: String,
    pub oracles: Vec<OracleSpec>,
    pub options: EngineOptions,
    /// `r00, r01, …` with the words they stand for.
    pub r_generators: Vec<(String, String)>,
    pub r_ball_size: usize,
    pub r_ball_truncated: bool,
    pub sigmas: Vec<SigmaReport>,
    /// First `σ` with a nontrivial `N`.
    pub chosen: Option<usize>,
    pub ledger: Vec<LedgerEntry>,
    pub all_passed: bool,
}

struct Tally {
    sigma: usize,
    check: &'static str,
    checked: usize,
    failed: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn new(sigma: usize, check: &'static str) -> Self {
        Tally {
            sigma,
            check,
            checked: 0,
            failed: 0,
            first_failure: None,
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(what());
            }
        }
    }

    fn entry(self) -> LedgerEntry {
        LedgerEntry {
            sigma: self.sigma,
            check: self.check.into(),
            checked: self.checked,
            failed: self.failed,
            first_failure: self.first_failure,
        }
    }
}

/// `g` maps the cylinder set `s` onto itself.
fn preserves(g: &Automorphism, s: &Antichain, tree: &TreeSpec) -> Result<bool> {
    Ok(image(g, s)?.same_set(s, tree))
}

struct PairOutcome {
    delta: usize,
    gamma: usize,
    a: Automorphism,
    in_h: bool,
    support: bool,
    restriction: bool,
}

/// Runs the commutator construction for every `σ` of a verified configuration.
pub fn commutator_engine(
    cfg: &DisplacementConfig,
    h: &[SubgroupOracle],
    g: &GroupSpec,
    opts: &EngineOptions,
) -> Result<EngineReport> {
    let check = verify_displacement(cfg)?;
    if !check.passed() {
        return Err(Error::NotVerified(check.summary()));
    }
    if h.is_empty() {
        return Err(Error::Precondition("at least one subgroup oracle is required".into()));
    }
    let tree = g.tree();
    if cfg.elements[0].element.tree() != tree {
        return Err(Error::TreeMismatch);
    }

    // generators of R from the rigid stabilizers of the cylinders of Ω
    let search = RistSearch::new(g, opts.rist_radius)?;
    let cylinders = Antichain::from_cover(cfg.omega.iter().flat_map(|a| a.iter().cloned()));
    let mut r_gens: Vec<Named> = Vec::new();
    let mut seen = HashSet::new();
    for v in cylinders.iter() {
        for x in search.rist(v)?.into_iter().take(opts.generators_per_cylinder) {
            if seen.insert(x.element.clone()) {
                r_gens.push(x);
            }
        }
    }
    if r_gens.is_empty() {
        return Err(Error::NoRistGenerators(opts.rist_radius));
    }
    let r_names: Vec<(String, String)> = r_gens
        .iter()
        .enumerate()
        .map(|(i, x)| (format!("r{i:02}"), x.name.clone()))
        .collect();
    let r_group = GroupSpec::new(
        "R",
        tree.clone(),
        r_gens
            .iter()
            .zip(&r_names)
            .map(|(x, (n, _))| (n.clone(), x.element.clone()))
            .collect(),
        true,
    )?;
    let r_ball = r_group.ball_capped(opts.r_radius, opts.r_cap)?;

    let mut sigmas = Vec::new();
    let mut ledger = Vec::new();
    for (si, s) in cfg.elements.iter().enumerate() {
        let (report, entries) = engine_sigma(cfg, &check, si, s, h, &r_ball, tree, opts)?;
        sigmas.push(report);
        ledger.extend(entries);
    }
    let chosen = sigmas.iter().position(|s| !s.n_generators.is_empty());
    let all_passed = ledger.iter().all(LedgerEntry::passed);
    Ok(EngineReport {
        group: g.name.clone(),
        oracles: h.iter().map(|o| o.spec().clone()).collect(),
        options: opts.clone(),
        r_generators: r_names,
        r_ball_size: r_ball.len(),
        r_ball_truncated: r_ball.truncated,
        sigmas,
        chosen,
        ledger,
        all_passed,
    })
}

#[allow(clippy::too_many_arguments)]
fn engine_sigma(
    cfg: &DisplacementConfig,
    check: &DisplacementCheck,
    si: usize,
    s: &Named,
    h: &[SubgroupOracle],
    r_ball: &Ball,
    tree: &TreeSpec,
    opts: &EngineOptions,
) -> Result<(SigmaReport, Vec<LedgerEntry>)> {
    let sigma = &s.element;
    let sigma_inv = sigma.invert();
    let m_sigma = check.m_sigma[si].clone();
    let f_sigma = check.f_sigma[si].clone();

    // Y_σ in shortlex order
    let in_y: Vec<bool> = r_ball
        .elements
        .par_iter()
        .map(|c| contains_any(h, &sigma.conjugate_by(c)?))
        .collect::<Result<_>>()?;
    let y: Vec<usize> = (0..r_ball.len()).filter(|&i| in_y[i]).take(opts.y_cap).collect();
    let conj: Vec<Automorphism> = y
        .iter()
        .map(|&i| sigma.conjugate_by(&r_ball.elements[i]))
        .collect::<Result<_>>()?;
    let conj_inv: Vec<Automorphism> = conj.iter().map(Automorphism::invert).collect();

    // A_σ is supported in ⋃_{ρ ∉ F_σ} Ω_ρ ∪ σ⁻¹(Ω_ρ)
    let mut support_cover = Vec::new();
    for (r, om) in cfg.omega.iter().enumerate() {
        if !f_sigma.contains(&r) {
            support_cover.extend(om.iter().cloned());
            support_cover.extend(image(&sigma_inv, om)?.iter().cloned());
        }
    }
    let outside_a = outside_of(&Antichain::from_cover(support_cover), tree)?;
    let m_cylinders: Vec<Vertex> = m_sigma
        .iter()
        .flat_map(|&r| cfg.omega[r].iter().cloned())
        .collect();

    let pairs: Vec<(usize, usize)> = (0..y.len()).flat_map(|d| (0..y.len()).map(move |c| (d, c))).collect();
    let outcomes: Vec<PairOutcome> = pairs
        .par_iter()
        .map(|&(d, c)| -> Result<PairOutcome> {
            let a = conj_inv[d].compose(&conj[c])?;
            let gd = &r_ball.elements[y[d]];
            let gc = &r_ball.elements[y[c]];
            // a coincides with δγ⁻¹ on the sets Ω_ρ, ρ ∈ M_σ
            let rest = gc.compose(&gd.invert())?.compose(&a)?;
            Ok(PairOutcome {
                delta: d,
                gamma: c,
                in_h: contains_any(h, &a)?,
                support: fixes_all(&a, &outside_a),
                restriction: m_cylinders.iter().all(|w| rest.fixes_cylinder(w)),
                a,
            })
        })
        .collect::<Result<_>>()?;

    let y_words: Vec<String> = y.iter().map(|&i| r_ball.word_string(i)).collect();
    let pair_name = |o: &PairOutcome| format!("a[{}, {}]", y_words[o.delta], y_words[o.gamma]);
    let mut t_in_h = Tally::new(si, "a_in_H");
    let mut t_diag = Tally::new(si, "a_diagonal_trivial");
    let mut t_support = Tally::new(si, "a_support");
    let mut t_restr = Tally::new(si, "a_restriction");
    let mut a_sample: Vec<(String, Automorphism)> = Vec::new();
    let mut a_seen = HashSet::new();
    let mut nontrivial_a = 0;
    let mut d_sample = Vec::new();
    for o in &outcomes {
        t_in_h.record(o.in_h, || pair_name(o));
        t_support.record(o.support, || pair_name(o));
        t_restr.record(o.restriction, || pair_name(o));
        if o.delta == o.gamma {
            t_diag.record(o.a.is_trivial(), || pair_name(o));
        } else if d_sample.len() < opts.sample_cap {
            d_sample.push(format!("({}) ({})^-1", y_words[o.gamma], y_words[o.delta]));
        }
        if !o.a.is_trivial() {
            nontrivial_a += 1;
            if a_sample.len() < opts.sample_cap && a_seen.insert(o.a.clone()) {
                a_sample.push((pair_name(o), o.a.clone()));
            }
        }
    }

    // B_λ = (λσλ⁻¹) A_σ (λσ⁻¹λ⁻¹) preserves Ω_ρ and σ(Ω_ρ) for ρ ∈ M_σ
    let mut preserved = Vec::new();
    for &r in &m_sigma {
        preserved.push(cfg.omega[r].clone());
        preserved.push(image(sigma, &cfg.omega[r])?);
    }
    let lambdas: Vec<usize> = (0..y.len()).take(opts.lambda_cap).collect();
    let b_items: Vec<(usize, usize)> = lambdas
        .iter()
        .flat_map(|&l| (0..a_sample.len()).map(move |i| (l, i)))
        .collect();
    let b_results: Vec<(bool, bool, Automorphism)> = b_items
        .par_iter()
        .map(|&(l, i)| -> Result<_> {
            let b = conj[l].compose(&a_sample[i].1)?.compose(&conj_inv[l])?;
            let mut keeps = true;
            for set in &preserved {
                keeps &= preserves(&b, set, tree)?;
            }
            Ok((contains_any(h, &b)?, keeps, b))
        })
        .collect::<Result<_>>()?;
    let mut t_b_in_h = Tally::new(si, "b_in_H");
    let mut t_b_pres = Tally::new(si, "b_preserves");
    let mut b_sample = Vec::new();
    let mut b_elems = Vec::new();
    for (&(l, i), b) in b_items.iter().zip(b_results) {
        let (in_h, keeps, b) = (b.0, b.1, b.2);
        let name = format!("B[{}; {}]", y_words[l], a_sample[i].0);
        t_b_in_h.record(in_h, || name.clone());
        t_b_pres.record(keeps, || name.clone());
        b_sample.push(name);
        b_elems.push(b);
    }

    // h₀: a nontrivial element of H ∩ rist(Ω_ρ) for some ρ ∈ M_σ
    let outside_m: Vec<(usize, Vec<Vertex>)> = m_sigma
        .iter()
        .map(|&r| Ok((r, outside_of(&cfg.omega[r], tree)?)))
        .collect::<Result<_>>()?;
    let mut h0: Option<(usize, &'static str, String, Automorphism)> = None;
    'rist: for (r, outside) in &outside_m {
        for (i, x) in r_ball.elements.iter().enumerate() {
            if !x.is_trivial() && fixes_all(x, outside) && contains_any(h, x)? {
                h0 = Some((*r, "rist_ball", r_ball.word_string(i), x.clone()));
                break 'rist;
            }
        }
    }
    if h0.is_none() {
        'comm: for (name, a) in &a_sample {
            for (bn, b) in b_sample.iter().zip(&b_elems) {
                let c = a.commutator(b)?;
                if c.is_trivial() || !contains_any(h, &c)? {
                    continue;
                }
                if let Some((r, _)) = outside_m.iter().find(|(_, o)| fixes_all(&c, o)) {
                    h0 = Some((*r, "commutator", format!("[{name}, {bn}]"), c));
                    break 'comm;
                }
            }
        }
    }

    // N is generated by the conjugates a h₀ a⁻¹
    let mut t_n_in_h = Tally::new(si, "n_in_H");
    let mut t_n_support = Tally::new(si, "n_support");
    let mut n_generators = Vec::new();
    let mut witness = None;
    if let Some((rho, source, name, x)) = h0 {
        let outside = &outside_m.iter().find(|(r, _)| *r == rho).unwrap().1;
        let mut n_seen = HashSet::new();
        let mut candidates = vec![(name.clone(), x.clone())];
        for (an, a) in &a_sample {
            candidates.push((format!("({an}) h0 ({an})^-1"), x.conjugate_by(a)?));
        }
        for (n, e) in candidates {
            if e.is_trivial() || !n_seen.insert(e.clone()) {
                continue;
            }
            t_n_in_h.record(contains_any(h, &e)?, || n.clone());
            t_n_support.record(fixes_all(&e, outside), || n.clone());
            n_generators.push(ElementRecord::new(n, &e));
        }
        witness = Some(WitnessRecord {
            rho,
            source: source.into(),
            element: ElementRecord::new(name, &x),
        });
    }

    let outcome = if n_generators.is_empty() { "inconclusive" } else { "nontrivial" };
    let report = SigmaReport {
        sigma: si,
        name: s.name.clone(),
        omega: cfg.omega[si].clone(),
        m_sigma,
        f_sigma,
        y_sample: y_words,
        pairs: outcomes.len(),
        nontrivial_a,
        a_sample: a_sample.iter().map(|(n, a)| ElementRecord::new(n.clone(), a)).collect(),
        d_sample,
        b_sample,
        h0: witness,
        n_generators,
        outcome: outcome.into(),
    };
    let entries = [t_in_h, t_diag, t_support, t_restr, t_b_in_h, t_b_pres, t_n_in_h, t_n_support]
        .into_iter()
        .map(Tally::entry)
        .collect();
    Ok((report, entries))
}

// ---------------------------------------------------------------------------
// rigid stabilizer commutators, conjugacy classes, the commutator identity

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum RistDerived {
    HoldsOnSample { radius: usize, checked: usize },
    Counterexample {
        first: String,
        second: String,
        commutator: Automorphism,
    },
}

/// Tests `[g₁, g₂] ∈ H` for all pairs of rigid stabilizer elements of `v`.
pub fn check_rist_derived_in_h(g: &GroupSpec, v: &Vertex, h: &[SubgroupOracle], l: usize) -> Result<RistDerived> {
    let rist = rist_ball(g, v, l)?;
    if rist.is_empty() {
        return Err(Error::NoRistGenerators(l));
    }
    let pairs: Vec<(usize, usize)> = (0..rist.len())
        .flat_map(|i| (i + 1..rist.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<Result<Option<Automorphism>>> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let c = rist[i].element.commutator(&rist[j].element)?;
            Ok(if contains_any(h, &c)? { None } else { Some(c) })
        })
        .collect();
    for (&(i, j), r) in pairs.iter().zip(results) {
        if let Some(c) = r? {
            return Ok(RistDerived::Counterexample {
                first: rist[i].name.clone(),
                second: rist[j].name.clone(),
                commutator: c,
            });
        }
    }
    Ok(RistDerived::HoldsOnSample {
        radius: l,
        checked: pairs.len(),
    })
}

/// Number of distinct conjugates `x g x⁻¹` with `x` in the ball of radius
/// `0, 1, …, ball.radius`.
pub fn conjugacy_class_growth(ball: &Ball, g: &Automorphism) -> Result<Vec<usize>> {
    let conj: Vec<Automorphism> = ball
        .elements
        .par_iter()
        .map(|x| g.conjugate_by(x))
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; ball.radius + 1];
    let mut seen = HashSet::new();
    for (c, &d) in conj.into_iter().zip(&ball.distance) {
        seen.insert(c);
        counts[d] = seen.len();
    }
    for r in 1..counts.len() {
        counts[r] = counts[r].max(counts[r - 1]);
    }
    Ok(counts)
}

/// Checks `[[g₁, σ], g₂] = [g₁, g₂]` when `g₁, g₂` are supported in `Ω` and
/// `σ(Ω) ∩ Ω = ∅`; `None` when these hypotheses fail.
pub fn normal_commutator_identity(
    omega: &Antichain,
    sigma: &Automorphism,
    g1: &Automorphism,
    g2: &Automorphism,
) -> Result<Option<bool>> {
    let tree = sigma.tree();
    let outside = outside_of(omega, tree)?;
    if !image(sigma, omega)?.disjoint_from(omega) || !fixes_all(g1, &outside) || !fixes_all(g2, &outside) {
        return Ok(None);
    }
    let lhs = g1.commutator(sigma)?.commutator(g2)?;
    let rhs = g1.commutator(g2)?;
    Ok(Some(lhs == rhs))
}

/// Shortlex-first vertex moved by `σ`, up to the given depth.
pub fn first_moved_vertex(sigma: &Automorphism, max_depth: usize) -> Option<Vertex> {
    (1..=max_depth).find_map(|n| {
        let perm = sigma.level_permutation(n);
        let x = (0..perm.len()).find(|&x| perm[x] != x)?;
        Some(sigma.tree().vertex_at(n, x))
    })
}
