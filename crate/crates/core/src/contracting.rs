//! Nuclei of contracting groups and boundedness of automorphisms.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automaton::Automorphism;
use crate::error::{Error, Result};
use crate::tree::{Letter, Ray};

/// Sections recurring along some infinite path: the cycle states and everything below them.
fn recurrent_sections(g: &Automorphism) -> Vec<Automorphism> {
    let n = g.state_count();
    let mut reach = vec![false; n];
    let mut stack = g.cycle_states();
    while let Some(s) = stack.pop() {
        if !std::mem::replace(&mut reach[s], true) {
            stack.extend(g.states()[s].sections.iter().map(|&t| t as usize));
        }
    }
    (0..n).filter(|&s| reach[s]).map(|s| g.from_state(s)).collect()
}

/// Nucleus of the group generated by `generators`, computed as the section-closed
/// set of recurrent sections that is also closed under recurrent sections of
/// pairwise products.
pub fn nucleus(generators: &[Automorphism], max_states: usize) -> Result<Vec<Automorphism>> {
    let tree = match generators.first() {
        Some(g) => g.tree().clone(),
        None => return Err(Error::Precondition("nucleus needs at least one generator".into())),
    };
    if !tree.is_regular() {
        return Err(Error::NonRegularTree("nucleus computations"));
    }
    let mut set: BTreeSet<Automorphism> = BTreeSet::new();
    set.insert(Automorphism::identity(&tree));
    for g in generators {
        if g.tree() != &tree {
            return Err(Error::TreeMismatch);
        }
        set.extend(recurrent_sections(g));
        set.extend(recurrent_sections(&g.invert()));
    }
    loop {
        if set.len() > max_states {
            return Err(Error::NotContractingUpTo(max_states));
        }
        let elems: Vec<&Automorphism> = set.iter().collect();
        let found: Vec<Vec<Automorphism>> = elems
            .par_iter()
            .map(|x| -> Result<Vec<Automorphism>> {
                let mut out = Vec::new();
                for y in &elems {
                    out.extend(recurrent_sections(&x.compose(y)?));
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let before = set.len();
        set.extend(found.into_iter().flatten());
        if set.len() == before {
            return Ok(set.into_iter().collect());
        }
    }
}

/// Every section of every element of `n` lies in `n`.
pub fn is_section_closed(n: &[Automorphism]) -> bool {
    let set: BTreeSet<&Automorphism> = n.iter().collect();
    n.iter()
        .all(|g| (0..g.state_count()).all(|s| set.contains(&g.from_state(s))))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Boundedness {
    /// Activity never exceeds `bound`; nontrivial sections concentrate along `rays`.
    BoundedWith { bound: u128, rays: Vec<Ray>, horizon: usize },
    UnboundedEvidence { n: usize, count: u128, horizon: usize },
    Inconclusive { horizon: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedReport {
    pub activity: Vec<u128>,
    /// The nontrivial states form disjoint simple cycles with no path between two of them.
    pub cycle_structure_bounded: bool,
    pub verdict: Boundedness,
}

/// Activity table to `horizon` together with the cycle structure of the
/// nontrivial states.
pub fn bounded_check(g: &Automorphism, horizon: usize) -> Result<BoundedReport> {
    if !g.tree().is_regular() {
        return Err(Error::NonRegularTree("boundedness checks"));
    }
    let activity: Vec<u128> = (0..=horizon).map(|n| g.activity(n)).collect();
    let cycles = nontrivial_cycles(g);
    let structural = cycles.is_some();
    let verdict = match cycles {
        Some(cycles) => {
            // activity is eventually periodic with period dividing the lcm of the
            // cycle lengths, after at most `state_count` levels
            let period = cycles.iter().map(|c| c.letters.len()).fold(1usize, lcm);
            let span = (g.state_count() + 2 * period).min(4096).max(horizon);
            let bound = (0..=span).map(|n| g.activity(n)).max().unwrap_or(0);
            let rays = cycles
                .iter()
                .map(|c| Ray::new(c.entry.clone(), c.letters.clone()))
                .collect::<Result<BTreeSet<_>>>()?
                .into_iter()
                .collect();
            Boundedness::BoundedWith { bound, rays, horizon }
        }
        None => {
            let last = *activity.last().unwrap();
            let half = activity[horizon / 2];
            if horizon >= 2 && last > half {
                Boundedness::UnboundedEvidence {
                    n: horizon,
                    count: last,
                    horizon,
                }
            } else {
                Boundedness::Inconclusive { horizon }
            }
        }
    };
    Ok(BoundedReport {
        activity,
        cycle_structure_bounded: structural,
        verdict,
    })
}

struct Cycle {
    /// Letters leading from the initial state to the cycle.
    entry: Vec<Letter>,
    /// Letters read once around the cycle.
    letters: Vec<Letter>,
}

/// Cycles of nontrivial states if they are simple and pairwise unconnected.
fn nontrivial_cycles(g: &Automorphism) -> Option<Vec<Cycle>> {
    let triv = g.trivial_states();
    let n = g.state_count();
    let states = g.states();
    let edges = |s: usize| -> Vec<(Letter, usize)> {
        states[s]
            .sections
            .iter()
            .enumerate()
            .filter(|(_, &t)| !triv[t as usize])
            .map(|(x, &t)| (x as Letter, t as usize))
            .collect()
    };
    let reaches = |from: usize, to: usize| -> bool {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            for (_, t) in edges(s) {
                if t == to {
                    return true;
                }
                if !std::mem::replace(&mut seen[t], true) {
                    stack.push(t);
                }
            }
        }
        false
    };
    let on_cycle: Vec<bool> = (0..n).map(|s| !triv[s] && reaches(s, s)).collect();
    // a cyclic state stays on its cycle along exactly one letter
    for s in (0..n).filter(|&s| on_cycle[s]) {
        if edges(s).iter().filter(|(_, t)| on_cycle[*t] && reaches(*t, s)).count() != 1 {
            return None;
        }
    }
    // group cyclic states into cycles; distinct cycles must not be connected
    let mut cycle_of = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for s in (0..n).filter(|&s| on_cycle[s]) {
        if cycle_of[s] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(s);
        let mut t = s;
        loop {
            cycle_of[t] = id;
            t = edges(t)
                .into_iter()
                .find(|&(_, u)| on_cycle[u] && reaches(u, s))
                .map(|(_, u)| u)
                .unwrap();
            if t == s {
                break;
            }
        }
    }
    for (i, &a) in reps.iter().enumerate() {
        for (j, &b) in reps.iter().enumerate() {
            if i != j && reaches(a, b) {
                return None;
            }
        }
    }
    // entry words: shortlex-first path from the initial state through nontrivial states
    let mut prev: Vec<Option<(usize, Letter)>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        for (x, t) in edges(s) {
            if !std::mem::replace(&mut seen[t], true) {
                prev[t] = Some((s, x));
                queue.push_back(t);
            }
        }
    }
    let mut out = Vec::new();
    for id in 0..reps.len() {
        // enter the cycle at the first of its states reached by the search
        let entry_state = (0..n)
            .filter(|&s| cycle_of[s] == id && seen[s])
            .min_by_key(|&s| path_to(&prev, s).len());
        let Some(e) = entry_state else { continue };
        let entry = path_to(&prev, e);
        let mut letters = Vec::new();
        let mut t = e;
        loop {
            let (x, u) = edges(t)
                .into_iter()
                .find(|&(_, u)| cycle_of[u] == id)
                .unwrap();
            letters.push(x);
            t = u;
            if t == e {
                break;
            }
        }
        out.push(Cycle { entry, letters });
    }
    Some(out)
}

fn path_to(prev: &[Option<(usize, Letter)>], mut s: usize) -> Vec<Letter> {
    let mut w = Vec::new();
    while let Some((p, x)) = prev[s] {
        w.push(x);
        s = p;
    }
    w.reverse();
    w
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::load_group;

    #[test]
    fn mirror_is_unbounded() {
        let g = load_group("mirror").unwrap();
        let r = bounded_check(g.generator("m").unwrap(), 8).unwrap();
        assert_eq!(r.activity[8], 256);
        assert!(matches!(r.verdict, Boundedness::UnboundedEvidence { count: 256, .. }));
    }

    #[test]
    fn odometer_is_bounded() {
        let g = load_group("adding_machine").unwrap();
        let r = bounded_check(g.generator("a").unwrap(), 10).unwrap();
        match r.verdict {
            Boundedness::BoundedWith { bound, rays, .. } => {
                assert_eq!(bound, 1);
                assert_eq!(rays, vec!["(1)".parse().unwrap()]);
            }
            v => panic!("{v:?}"),
        }
    }
}
