//! Finite-state tree automorphisms given by wreath recursion.
//!
//! An [`Automorphism`] is stored as a *canonical* Mealy automaton: only states
//! reachable from the initial state, minimized by partition refinement and
//! renumbered in breadth-first letter order. Two automorphisms act identically
//! on the tree exactly when their canonical tables coincide, so `Eq`/`Hash` are
//! sound and complete for group equality.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{Antichain, Letter, Ray, TreeSpec, Vertex};

/// Maximum number of product states before an operation gives up.
pub const DEFAULT_STATE_BUDGET: usize = 1 << 20;

/// One state of the wreath recursion: a root permutation and one section per letter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub phase: u32,
    /// `perm[x]` is the image of letter `x`.
    pub perm: Vec<Letter>,
    pub sections: Vec<u32>,
}

impl State {
    fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &x)| i == x as usize)
    }
}

/// Serialized form of an automorphism. Deserialization re-canonicalizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AutomatonTable {
    pub tree: TreeSpec,
    pub states: Vec<State>,
    #[serde(default)]
    pub initial: u32,
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "AutomatonTable", into = "AutomatonTable")]
pub struct Automorphism {
    tree: TreeSpec,
    states: Vec<State>,
}

impl TryFrom<AutomatonTable> for Automorphism {
    type Error = Error;

    fn try_from(t: AutomatonTable) -> Result<Self> {
        Automorphism::from_table(t.tree, t.states, t.initial as usize)
    }
}

impl From<Automorphism> for AutomatonTable {
    fn from(a: Automorphism) -> Self {
        AutomatonTable {
            tree: a.tree,
            states: a.states,
            initial: 0,
        }
    }
}

impl Automorphism {
    /// Validates a state table and returns the canonical automorphism rooted at `initial`.
    pub fn from_table(tree: TreeSpec, states: Vec<State>, initial: usize) -> Result<Self> {
        if initial >= states.len() {
            return Err(Error::InvalidAutomaton("initial state out of range".into()));
        }
        if states[initial].phase != 0 {
            return Err(Error::InvalidAutomaton("initial state must have phase 0".into()));
        }
        for (i, s) in states.iter().enumerate() {
            let p = s.phase as usize;
            if p >= tree.phase_count() {
                return Err(Error::InvalidAutomaton(format!("state {i}: phase {p} out of range")));
            }
            let d = tree.degree_at_phase(p);
            if s.perm.len() != d || s.sections.len() != d {
                return Err(Error::InvalidAutomaton(format!(
                    "state {i}: expected {d} letters"
                )));
            }
            let mut seen = vec![false; d];
            for &x in &s.perm {
                if x as usize >= d || std::mem::replace(&mut seen[x as usize], true) {
                    return Err(Error::InvalidAutomaton(format!("state {i}: not a permutation")));
                }
            }
            let next = tree.next_phase(p) as u32;
            for &t in &s.sections {
                let t = t as usize;
                if t >= states.len() {
                    return Err(Error::InvalidAutomaton(format!("state {i}: dangling section")));
                }
                if states[t].phase != next {
                    return Err(Error::InvalidAutomaton(format!(
                        "state {i}: section has phase {} but level needs {next}",
                        states[t].phase
                    )));
                }
            }
        }
        Ok(canonicalize(tree, &states, initial))
    }

    pub fn identity(tree: &TreeSpec) -> Self {
        let states: Vec<State> = (0..tree.phase_count())
            .map(|p| {
                let d = tree.degree_at_phase(p);
                State {
                    phase: p as u32,
                    perm: (0..d as Letter).collect(),
                    sections: vec![tree.next_phase(p) as u32; d],
                }
            })
            .collect();
        canonicalize(tree.clone(), &states, 0)
    }

    /// Finitary automorphism acting as `root_perm` at the root and trivially below.
    pub fn rooted(tree: &TreeSpec, root_perm: Vec<Letter>) -> Result<Self> {
        let mut states: Vec<State> = Automorphism::identity(tree).states;
        let id_next = states
            .iter()
            .position(|s| s.phase as usize == tree.next_phase(0))
            .unwrap() as u32;
        let d = tree.degree_at_phase(0);
        states.push(State {
            phase: 0,
            perm: root_perm,
            sections: vec![id_next; d],
        });
        let n = states.len() - 1;
        Automorphism::from_table(tree.clone(), states, n)
    }

    /// Builds `perm_root(s_0, ..., s_{d-1})` from a root permutation and sections.
    /// Regular trees only.
    pub fn from_recursion(
        tree: &TreeSpec,
        root_perm: Vec<Letter>,
        sections: &[Automorphism],
    ) -> Result<Self> {
        if !tree.is_regular() {
            return Err(Error::NonRegularTree("wreath recursion constructors"));
        }
        let d = tree.degree_at_phase(0);
        if sections.len() != d {
            return Err(Error::InvalidAutomaton(format!("expected {d} sections")));
        }
        let mut states = Vec::new();
        let mut roots = Vec::new();
        for s in sections {
            if &s.tree != tree {
                return Err(Error::TreeMismatch);
            }
            let off = states.len() as u32;
            roots.push(off);
            for st in &s.states {
                states.push(State {
                    phase: 0,
                    perm: st.perm.clone(),
                    sections: st.sections.iter().map(|&t| t + off).collect(),
                });
            }
        }
        states.push(State {
            phase: 0,
            perm: root_perm,
            sections: roots,
        });
        let n = states.len() - 1;
        Automorphism::from_table(tree.clone(), states, n)
    }

    pub fn tree(&self) -> &TreeSpec {
        &self.tree
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn root_permutation(&self) -> &[Letter] {
        &self.states[0].perm
    }

    /// The automorphism defined by state `s` of this automaton. States of
    /// nonzero phase yield automorphisms of the correspondingly shifted tree.
    pub fn from_state(&self, s: usize) -> Automorphism {
        canonicalize_shifted(&self.tree, &self.states, s)
    }

    /// Per-state triviality: a state is trivial iff every state reachable from it
    /// has the identity permutation.
    pub fn trivial_states(&self) -> Vec<bool> {
        let n = self.states.len();
        let mut nontrivial: Vec<bool> = self.states.iter().map(|s| !s.is_identity_perm()).collect();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, s) in self.states.iter().enumerate() {
            for &t in &s.sections {
                preds[t as usize].push(i);
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| nontrivial[i]).collect();
        while let Some(t) = queue.pop_front() {
            for &p in &preds[t] {
                if !nontrivial[p] {
                    nontrivial[p] = true;
                    queue.push_back(p);
                }
            }
        }
        nontrivial.into_iter().map(|b| !b).collect()
    }

    /// States lying on a directed cycle of the automaton.
    pub fn cycle_states(&self) -> Vec<usize> {
        let n = self.states.len();
        (0..n)
            .filter(|&s| {
                let mut seen = vec![false; n];
                let mut stack: Vec<usize> = self.states[s].sections.iter().map(|&t| t as usize).collect();
                while let Some(t) = stack.pop() {
                    if t == s {
                        return true;
                    }
                    if !std::mem::replace(&mut seen[t], true) {
                        stack.extend(self.states[t].sections.iter().map(|&u| u as usize));
                    }
                }
                false
            })
            .collect()
    }

    /// Reachable-state scan: trivial iff no reachable state permutes letters.
    pub fn is_trivial(&self) -> bool {
        self.states.iter().all(State::is_identity_perm)
    }

    /// `g ∘ h`: first `h`, then `self`.
    pub fn compose(&self, h: &Automorphism) -> Result<Automorphism> {
        self.compose_with_budget(h, DEFAULT_STATE_BUDGET)
    }

    pub fn compose_with_budget(&self, h: &Automorphism, budget: usize) -> Result<Automorphism> {
        if self.tree != h.tree {
            return Err(Error::TreeMismatch);
        }
        let mut index: HashMap<(u32, u32), u32> = HashMap::new();
        let mut pairs: Vec<(u32, u32)> = vec![(0, 0)];
        index.insert((0, 0), 0);
        let mut states = Vec::new();
        let mut i = 0;
        while i < pairs.len() {
            let (p, q) = pairs[i];
            let sp = &self.states[p as usize];
            let sq = &h.states[q as usize];
            let d = sq.perm.len();
            let mut perm = Vec::with_capacity(d);
            let mut sections = Vec::with_capacity(d);
            for x in 0..d {
                let y = sq.perm[x] as usize;
                perm.push(sp.perm[y]);
                let key = (sp.sections[y], sq.sections[x]);
                let next = match index.get(&key) {
                    Some(&k) => k,
                    None => {
                        let k = pairs.len() as u32;
                        if pairs.len() >= budget {
                            return Err(Error::StateBudgetExceeded(budget));
                        }
                        index.insert(key, k);
                        pairs.push(key);
                        k
                    }
                };
                sections.push(next);
            }
            states.push(State {
                phase: sq.phase,
                perm,
                sections,
            });
            i += 1;
        }
        Ok(canonicalize(self.tree.clone(), &states, 0))
    }

    pub fn invert(&self) -> Automorphism {
        let states: Vec<State> = self
            .states
            .iter()
            .map(|s| {
                let mut inv = vec![0 as Letter; s.perm.len()];
                for (x, &y) in s.perm.iter().enumerate() {
                    inv[y as usize] = x as Letter;
                }
                let sections = inv.iter().map(|&x| s.sections[x as usize]).collect();
                State {
                    phase: s.phase,
                    perm: inv,
                    sections,
                }
            })
            .collect();
        canonicalize(self.tree.clone(), &states, 0)
    }

    pub fn pow(&self, n: i64) -> Result<Automorphism> {
        let base = if n < 0 { self.invert() } else { self.clone() };
        let mut acc = Automorphism::identity(&self.tree);
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base)?;
        }
        Ok(acc)
    }

    /// `h g h^{-1}` for `g = self`.
    pub fn conjugate_by(&self, h: &Automorphism) -> Result<Automorphism> {
        h.compose(self)?.compose(&h.invert())
    }

    /// `[x, y] = x y x^{-1} y^{-1}`.
    pub fn commutator(&self, y: &Automorphism) -> Result<Automorphism> {
        self.compose(y)?
            .compose(&self.invert())?
            .compose(&y.invert())
    }

    /// Equality decided by a reachable-state scan of `g h^{-1}`.
    pub fn equals(&self, h: &Automorphism) -> Result<bool> {
        Ok(self.compose(&h.invert())?.is_trivial())
    }

    pub fn is_involution(&self) -> Result<bool> {
        Ok(!self.is_trivial() && self.compose(self)?.is_trivial())
    }

    fn walk(&self, v: &Vertex) -> (Vertex, usize) {
        let mut s = 0usize;
        let mut out = Vec::with_capacity(v.len());
        for &x in v.letters() {
            let st = &self.states[s];
            out.push(st.perm[x as usize]);
            s = st.sections[x as usize] as usize;
        }
        (Vertex::from_letters(out), s)
    }

    pub fn act(&self, v: &Vertex) -> Result<Vertex> {
        self.tree.check_vertex(v)?;
        Ok(self.walk(v).0)
    }

    /// Index of the state reached by reading `v`.
    pub fn state_at(&self, v: &Vertex) -> usize {
        self.walk(v).1
    }

    /// `g|_v`, the unique automorphism with `g(vw) = g(v) g|_v(w)`.
    ///
    /// On non-regular trees the result acts on the shifted tree and is encoded
    /// with phases relative to depth `|v|`.
    pub fn section(&self, v: &Vertex) -> Result<Automorphism> {
        self.tree.check_vertex(v)?;
        let s = self.walk(v).1;
        Ok(self.from_state(s))
    }

    /// `g` fixes the cylinder of `w` pointwise.
    pub fn fixes_cylinder(&self, w: &Vertex) -> bool {
        let (img, s) = self.walk(w);
        img == *w && self.trivial_states()[s]
    }

    /// Image of the level-`n` vertices, as a permutation of level indices.
    pub fn level_permutation(&self, n: usize) -> Vec<usize> {
        // (image index, state) per vertex, built level by level
        let mut cur: Vec<(usize, u32)> = vec![(0, 0)];
        for _ in 0..n {
            let d = self.states[cur[0].1 as usize].perm.len();
            let mut next = Vec::with_capacity(cur.len() * d);
            for &(img, s) in &cur {
                let st = &self.states[s as usize];
                for x in 0..d {
                    next.push((img * d + st.perm[x] as usize, st.sections[x]));
                }
            }
            cur = next;
        }
        cur.into_iter().map(|(img, _)| img).collect()
    }

    /// States reached at each vertex of level `n`, in lexicographic vertex order.
    pub fn level_states(&self, n: usize) -> Vec<u32> {
        let mut cur: Vec<u32> = vec![0];
        for _ in 0..n {
            cur = cur
                .iter()
                .flat_map(|&s| self.states[s as usize].sections.iter().copied())
                .collect();
        }
        cur
    }

    pub fn act_ray(&self, ray: &Ray) -> Result<Ray> {
        ray.check(&self.tree)?;
        let trace = self.trace_ray(ray);
        let mut pre = trace.pre_output;
        for pass in &trace.passes[..trace.cycle_start] {
            pre.extend_from_slice(&pass.output);
        }
        let period: Vec<Letter> = trace.passes[trace.cycle_start..]
            .iter()
            .flat_map(|p| p.output.iter().copied())
            .collect();
        Ray::new(pre, period)
    }

    /// Every state visited along the ray (finite because states cycle on the period).
    pub fn states_along_ray(&self, ray: &Ray) -> Result<Vec<u32>> {
        ray.check(&self.tree)?;
        let trace = self.trace_ray(ray);
        let mut all = trace.pre_states;
        for p in trace.passes {
            all.extend(p.states);
        }
        Ok(all)
    }

    fn trace_ray(&self, ray: &Ray) -> RayTrace {
        let mut s = 0u32;
        let mut pre_output = Vec::new();
        let mut pre_states = vec![0u32];
        for &x in ray.preperiod() {
            let st = &self.states[s as usize];
            pre_output.push(st.perm[x as usize]);
            s = st.sections[x as usize];
            pre_states.push(s);
        }
        let mut seen: HashMap<u32, usize> = HashMap::new();
        let mut passes: Vec<Pass> = Vec::new();
        loop {
            if let Some(&i) = seen.get(&s) {
                return RayTrace {
                    pre_output,
                    pre_states,
                    passes,
                    cycle_start: i,
                };
            }
            seen.insert(s, passes.len());
            let mut output = Vec::with_capacity(ray.period().len());
            let mut states = Vec::with_capacity(ray.period().len());
            for &x in ray.period() {
                let st = &self.states[s as usize];
                output.push(st.perm[x as usize]);
                s = st.sections[x as usize];
                states.push(s);
            }
            passes.push(Pass { output, states });
        }
    }

    /// Membership in the germ stabilizer: fixes the ray and is trivial on a neighbourhood.
    pub fn fixes_germ(&self, ray: &Ray) -> Result<bool> {
        if self.act_ray(ray)? != *ray {
            return Ok(false);
        }
        let triv = self.trivial_states();
        Ok(self
            .states_along_ray(ray)?
            .iter()
            .any(|&s| triv[s as usize]))
    }

    pub fn portrait(&self, depth: usize) -> Portrait {
        let mut levels = Vec::with_capacity(depth + 1);
        for n in 0..=depth {
            levels.push(
                self.level_states(n)
                    .into_iter()
                    .map(|s| self.states[s as usize].perm.clone())
                    .collect(),
            );
        }
        Portrait {
            depth,
            levels,
        }
    }

    /// Number of level-`n` vertices with nontrivial section (saturating).
    pub fn activity(&self, n: usize) -> u128 {
        let counts = self.state_counts_at_level(n);
        let triv = self.trivial_states();
        counts
            .iter()
            .enumerate()
            .filter(|(s, _)| !triv[*s])
            .fold(0u128, |acc, (_, &c)| acc.saturating_add(c))
    }

    fn state_counts_at_level(&self, n: usize) -> Vec<u128> {
        let mut counts = vec![0u128; self.states.len()];
        counts[0] = 1;
        for _ in 0..n {
            let mut next = vec![0u128; self.states.len()];
            for (s, &c) in counts.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for &t in &self.states[s].sections {
                    next[t as usize] = next[t as usize].saturating_add(c);
                }
            }
            counts = next;
        }
        counts
    }

    /// Cover of the support by cylinders of depth at most `depth`.
    pub fn support_antichain(&self, depth: usize) -> SupportCover {
        let triv = self.trivial_states();
        let mut fixed = Vec::new();
        let mut stack = vec![Vertex::root()];
        while let Some(w) = stack.pop() {
            let (img, s) = self.walk(&w);
            if img == w && triv[s] {
                fixed.push(w);
            } else if w.len() < depth {
                stack.extend(self.tree.children(&w));
            }
        }
        let fixed = Antichain::new(fixed).expect("maximal fixed cylinders are independent");
        let cover = crate::tree::complement_antichain(&fixed, &self.tree)
            .expect("vertices come from the tree");
        // a cover vertex can shrink iff some fixed-letter path from its state hits a trivial state
        let can_shrink = self.reaches_fixed_cylinder();
        let exact = cover.iter().all(|w| {
            let (img, s) = self.walk(w);
            img != *w || !can_shrink[s]
        });
        SupportCover { cover, fixed, exact }
    }

    fn reaches_fixed_cylinder(&self) -> Vec<bool> {
        let triv = self.trivial_states();
        let n = self.states.len();
        let mut reach = triv.clone();
        let mut changed = true;
        while changed {
            changed = false;
            for s in 0..n {
                if reach[s] {
                    continue;
                }
                let st = &self.states[s];
                if st
                    .perm
                    .iter()
                    .enumerate()
                    .any(|(x, &y)| x == y as usize && reach[st.sections[x] as usize])
                {
                    reach[s] = true;
                    changed = true;
                }
            }
        }
        reach
    }

    /// Exact order if it divides `limit`-bounded search, else `None`.
    pub fn order_up_to(&self, limit: usize) -> Result<Option<usize>> {
        let mut acc = self.clone();
        for k in 1..=limit {
            if acc.is_trivial() {
                return Ok(Some(k));
            }
            acc = acc.compose(self)?;
        }
        Ok(None)
    }
}

struct Pass {
    output: Vec<Letter>,
    states: Vec<u32>,
}

struct RayTrace {
    pre_output: Vec<Letter>,
    pre_states: Vec<u32>,
    passes: Vec<Pass>,
    cycle_start: usize,
}

/// Total order for deterministic output: tree, then state count, then table.
impl Ord for Automorphism {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.tree, self.states.len(), &self.states).cmp(&(&other.tree, other.states.len(), &other.states))
    }
}

impl PartialOrd for Automorphism {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Automorphism[")?;
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{i}:{:?}->{:?}", s.perm, s.sections)?;
        }
        write!(f, "]")
    }
}

/// Per-vertex permutations of an automorphism down to a fixed depth.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Portrait {
    pub depth: usize,
    /// `levels[n][i]` is the permutation at the `i`-th vertex of level `n`.
    pub levels: Vec<Vec<Vec<Letter>>>,
}

impl Portrait {
    pub fn is_trivial(&self) -> bool {
        self.levels
            .iter()
            .flatten()
            .all(|p| p.iter().enumerate().all(|(i, &x)| i == x as usize))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCover {
    /// Cylinders covering the support.
    pub cover: Antichain,
    /// Maximal cylinders fixed pointwise.
    pub fixed: Antichain,
    /// No refinement below the depth could shrink the cover.
    pub exact: bool,
}

/// Reachability + Moore partition refinement + BFS renumbering.
fn canonicalize(tree: TreeSpec, states: &[State], initial: usize) -> Automorphism {
    Automorphism {
        states: canonical_states(states, initial),
        tree,
    }
}

/// Canonical form of a state whose phase may be nonzero: phases are shifted so
/// that the initial state has phase 0. On regular trees this is a no-op.
fn canonicalize_shifted(tree: &TreeSpec, states: &[State], initial: usize) -> Automorphism {
    let base = states[initial].phase as usize;
    if base == 0 {
        return canonicalize(tree.clone(), states, initial);
    }
    let shifted = tree.shifted(base);
    let remapped: Vec<State> = states
        .iter()
        .map(|s| State {
            phase: tree.shifted_phase(base, s.phase as usize) as u32,
            perm: s.perm.clone(),
            sections: s.sections.clone(),
        })
        .collect();
    canonicalize(shifted, &remapped, initial)
}

fn canonical_states(states: &[State], initial: usize) -> Vec<State> {
    // reachable states, BFS order
    let mut order = vec![initial];
    let mut index: HashMap<usize, usize> = HashMap::new();
    index.insert(initial, 0);
    let mut i = 0;
    while i < order.len() {
        for &t in &states[order[i]].sections {
            let t = t as usize;
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(t) {
                e.insert(order.len());
                order.push(t);
            }
        }
        i += 1;
    }
    let reach: Vec<&State> = order.iter().map(|&s| &states[s]).collect();
    let n = reach.len();
    let succ: Vec<Vec<usize>> = reach
        .iter()
        .map(|s| s.sections.iter().map(|&t| index[&(t as usize)]).collect())
        .collect();

    // initial partition by output
    let mut class = vec![0usize; n];
    {
        let mut keys: HashMap<(u32, &[Letter]), usize> = HashMap::new();
        for (s, st) in reach.iter().enumerate() {
            let k = keys.len();
            class[s] = *keys.entry((st.phase, st.perm.as_slice())).or_insert(k);
        }
    }
    let mut count = class.iter().max().map_or(0, |m| m + 1);
    loop {
        let mut keys: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        let mut next = vec![0usize; n];
        for s in 0..n {
            let sig: Vec<usize> = succ[s].iter().map(|&t| class[t]).collect();
            let k = keys.len();
            next[s] = *keys.entry((class[s], sig)).or_insert(k);
        }
        let new_count = keys.len();
        class = next;
        if new_count == count {
            break;
        }
        count = new_count;
    }

    // BFS renumbering of the quotient from the initial class
    let mut rep = vec![usize::MAX; count];
    for s in 0..n {
        if rep[class[s]] == usize::MAX {
            rep[class[s]] = s;
        }
    }
    let mut new_id = vec![u32::MAX; count];
    let mut queue = vec![class[0]];
    new_id[class[0]] = 0;
    let mut j = 0;
    while j < queue.len() {
        let c = queue[j];
        for &t in &succ[rep[c]] {
            let tc = class[t];
            if new_id[tc] == u32::MAX {
                new_id[tc] = queue.len() as u32;
                queue.push(tc);
            }
        }
        j += 1;
    }
    queue
        .iter()
        .map(|&c| {
            let st = reach[rep[c]];
            State {
                phase: st.phase,
                perm: st.perm.clone(),
                sections: succ[rep[c]].iter().map(|&t| new_id[class[t]]).collect(),
            }
        })
        .collect()
}
