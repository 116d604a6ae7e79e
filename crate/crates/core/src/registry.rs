//! Group-spec files and the built-in groups.
//!
//! ```json
//! {"tree": {"degrees": [2], "repeat": true},
//!  "generators": {"a": {"perm": [1, 0], "sections": ["e", "a"]}},
//!  "involutions": [], "relations_smoke": [["a", "a"]]}
//! ```
//!
//! Section names refer to generators, to entries of the optional `states` map,
//! or to `e` (the identity). On a non-regular tree a named state is
//! instantiated at every phase where it is reached, so its `perm` must fit each
//! of those levels.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::actions::level_orbit_count;
use crate::automaton::{Automorphism, State};
use crate::confinement::in_rist;
use crate::error::{Error, Result};
use crate::group::{GroupSpec, Lift, RistHint};
use crate::tree::{Letter, TreeSpec};

const IDENTITY: &str = "e";

const BUILTINS: &[(&str, &str)] = &[
    ("adding_machine", include_str!("../groups/adding_machine.json")),
    ("basilica", include_str!("../groups/basilica.json")),
    ("grigorchuk", include_str!("../groups/grigorchuk.json")),
    ("gupta_sidki_3", include_str!("../groups/gupta_sidki_3.json")),
    ("mirror", include_str!("../groups/mirror.json")),
    ("trivial", include_str!("../groups/trivial.json")),
];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateDef {
    pub perm: Vec<Letter>,
    pub sections: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub word: String,
    pub up_to: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupFile {
    #[serde(default)]
    pub name: Option<String>,
    pub tree: TreeSpec,
    pub generators: BTreeMap<String, StateDef>,
    #[serde(default)]
    pub states: BTreeMap<String, StateDef>,
    #[serde(default = "default_true")]
    pub symmetric: bool,
    #[serde(default)]
    pub involutions: Vec<String>,
    /// Words (as generator lists) that must evaluate to the identity.
    #[serde(default)]
    pub relations_smoke: Vec<Vec<String>>,
    #[serde(default)]
    pub infinite_order: Vec<OrderCheck>,
    #[serde(default)]
    pub level_transitive: bool,
    #[serde(default)]
    pub rist_hints: Vec<RistHint>,
    #[serde(default)]
    pub lift: Option<Lift>,
    #[serde(default)]
    pub notes: String,
}

fn default_true() -> bool {
    true
}

/// A loaded group together with its provenance.
#[derive(Clone, Debug)]
pub struct RegistryEntry {
    pub group: GroupSpec,
    pub notes: String,
    pub builtin: bool,
}

pub fn builtin_names() -> Vec<&'static str> {
    BUILTINS.iter().map(|(n, _)| *n).collect()
}

/// Loads a built-in group by name, or else a group-spec file by path.
pub fn load_group(name_or_path: &str) -> Result<GroupSpec> {
    Ok(load_entry(name_or_path)?.group)
}

pub fn load_entry(name_or_path: &str) -> Result<RegistryEntry> {
    if let Some((name, src)) = BUILTINS.iter().find(|(n, _)| *n == name_or_path) {
        let file: GroupFile = serde_json::from_str(src).map_err(|e| Error::Schema(e.to_string()))?;
        return entry_from_file(file, name, true);
    }
    let path = Path::new(name_or_path);
    let src = std::fs::read_to_string(path).map_err(|e| {
        Error::Schema(format!(
            "`{name_or_path}` is neither a built-in group ({}) nor a readable file: {e}",
            builtin_names().join(", ")
        ))
    })?;
    let file: GroupFile = serde_json::from_str(&src).map_err(|e| Error::Schema(e.to_string()))?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("group")
        .to_string();
    entry_from_file(file, &stem, false)
}

pub fn parse_group(json: &str) -> Result<GroupSpec> {
    let file: GroupFile = serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))?;
    Ok(entry_from_file(file, "group", false)?.group)
}

fn entry_from_file(file: GroupFile, default_name: &str, builtin: bool) -> Result<RegistryEntry> {
    let name = file.name.clone().unwrap_or_else(|| default_name.to_string());
    let group = build_group(&file, &name)?;
    smoke_check(&group, &file)?;
    Ok(RegistryEntry {
        group,
        notes: file.notes,
        builtin,
    })
}

fn build_group(file: &GroupFile, name: &str) -> Result<GroupSpec> {
    let tree = &file.tree;
    for n in file.states.keys() {
        if file.generators.contains_key(n) {
            return Err(Error::Schema(format!("`{n}` is both a generator and a state")));
        }
    }
    if file.generators.contains_key(IDENTITY) || file.states.contains_key(IDENTITY) {
        return Err(Error::Schema("`e` is reserved for the identity".into()));
    }
    let lookup = |n: &str| file.generators.get(n).or_else(|| file.states.get(n));

    // one automaton state per (name, phase) reached from a generator at phase 0
    let mut index: HashMap<StateKey, u32> = HashMap::new();
    let mut states: Vec<State> = Vec::new();
    let mut queue: VecDeque<StateKey> = VecDeque::new();
    let roots: Vec<u32> = file
        .generators
        .keys()
        .map(|g| intern((g.clone(), 0), &mut index, &mut states, &mut queue))
        .collect();
    while let Some((n, phase)) = queue.pop_front() {
        let d = tree.degree_at_phase(phase);
        let next = tree.next_phase(phase);
        let (perm, secs): (Vec<Letter>, Vec<String>) = if n == IDENTITY {
            ((0..d as Letter).collect(), vec![IDENTITY.to_string(); d])
        } else {
            let def = lookup(&n).ok_or_else(|| Error::Schema(format!("unknown state `{n}`")))?;
            if def.perm.len() != d || def.sections.len() != d {
                return Err(Error::Schema(format!(
                    "state `{n}` reached at a level of degree {d} but has {} letters",
                    def.perm.len()
                )));
            }
            (def.perm.clone(), def.sections.clone())
        };
        let sections = secs
            .into_iter()
            .map(|s| intern((s, next), &mut index, &mut states, &mut queue))
            .collect();
        let i = index[&(n, phase)] as usize;
        states[i].perm = perm;
        states[i].sections = sections;
    }
    let mut gens = Vec::new();
    for (g, &r) in file.generators.keys().zip(&roots) {
        let a = Automorphism::from_table(tree.clone(), states.clone(), r as usize)
            .map_err(|e| Error::Schema(format!("generator `{g}`: {e}")))?;
        gens.push((g.clone(), a));
    }
    let mut group = GroupSpec::new(name, tree.clone(), gens, file.symmetric)?;
    group.rist_hints = file.rist_hints.clone();
    group.lift = file.lift.clone();
    group.level_transitive = file.level_transitive;
    for h in &group.rist_hints {
        tree.check_vertex(&h.vertex)?;
        for w in &h.words {
            group.parse_word(w)?;
        }
    }
    if let Some(l) = &group.lift {
        if !tree.is_regular() || l.letter as usize >= tree.degree_at_phase(0) {
            return Err(Error::Schema("lift needs a regular tree and a valid letter".into()));
        }
        for (k, v) in &l.substitution {
            group.generator(k)?;
            group.parse_word(v)?;
        }
    }
    Ok(group)
}

/// Structural checks of a loaded group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCheck {
    pub name: String,
    pub tree: String,
    /// Generator names with their automaton sizes.
    pub generators: Vec<(String, usize)>,
    pub declared_level_transitive: bool,
    /// Levels checked for a single orbit.
    pub levels_checked: usize,
    /// First level with more than one orbit.
    pub transitivity_failure: Option<usize>,
    pub hints_checked: usize,
    pub hint_failures: Vec<String>,
}

impl GroupCheck {
    pub fn passed(&self) -> bool {
        self.transitivity_failure.is_none() && self.hint_failures.is_empty()
    }
}

/// Verifies declared level transitivity up to `levels` and every
/// rigid-stabilizer hint by exact membership.
pub fn check_group(g: &GroupSpec, levels: usize) -> Result<GroupCheck> {
    let mut transitivity_failure = None;
    let levels_checked = if g.level_transitive { levels } else { 0 };
    for n in 1..=levels_checked {
        if level_orbit_count(g, n, usize::MAX)? != 1 {
            transitivity_failure = Some(n);
            break;
        }
    }
    let mut hints_checked = 0;
    let mut hint_failures = Vec::new();
    for h in &g.rist_hints {
        for w in &h.words {
            hints_checked += 1;
            if !in_rist(&g.eval_str(w)?, &h.vertex)? {
                hint_failures.push(format!("{w} at {}", h.vertex));
            }
        }
    }
    Ok(GroupCheck {
        name: g.name.clone(),
        tree: g.tree().to_string(),
        generators: g
            .generators()
            .iter()
            .map(|(n, a)| (n.clone(), a.state_count()))
            .collect(),
        declared_level_transitive: g.level_transitive,
        levels_checked,
        transitivity_failure,
        hints_checked,
        hint_failures,
    })
}

type StateKey = (String, usize);

fn intern(
    key: StateKey,
    index: &mut HashMap<StateKey, u32>,
    states: &mut Vec<State>,
    queue: &mut VecDeque<StateKey>,
) -> u32 {
    if let Some(&i) = index.get(&key) {
        return i;
    }
    let i = states.len() as u32;
    states.push(State {
        phase: key.1 as u32,
        perm: Vec::new(),
        sections: Vec::new(),
    });
    index.insert(key.clone(), i);
    queue.push_back(key);
    i
}

fn smoke_check(group: &GroupSpec, file: &GroupFile) -> Result<()> {
    for n in &file.involutions {
        let g = group.generator(n)?;
        if g.is_trivial() || !g.compose(g)?.is_trivial() {
            return Err(Error::RelationCheck(format!("`{n}` is not an involution")));
        }
    }
    for rel in &file.relations_smoke {
        let w = group.parse_word(&rel.join(" "))?;
        if !group.eval(&w)?.is_trivial() {
            return Err(Error::RelationCheck(format!("{} is not the identity", rel.join(""))));
        }
    }
    for chk in &file.infinite_order {
        let g = group.eval_str(&chk.word)?;
        if let Some(k) = g.order_up_to(chk.up_to)? {
            return Err(Error::RelationCheck(format!("`{}` has order {k}", chk.word)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_load() {
        for n in builtin_names() {
            let g = load_group(n).unwrap();
            assert_eq!(g.name, n);
        }
    }

    #[test]
    fn builtin_checks_pass() {
        for n in builtin_names() {
            let c = check_group(&load_group(n).unwrap(), 8).unwrap();
            assert!(c.passed(), "{c:?}");
        }
        let c = check_group(&load_group("grigorchuk").unwrap(), 8).unwrap();
        assert_eq!(c.levels_checked, 8);
        assert!(c.hints_checked >= 3);
    }

    #[test]
    fn mistyped_recursion_is_caught() {
        let src = include_str!("../groups/grigorchuk.json").replace(r#"["e", "b"]"#, r#"["e", "c"]"#);
        assert!(matches!(parse_group(&src), Err(Error::RelationCheck(_))));
    }

    #[test]
    fn unknown_state_is_schema_error() {
        let src = r#"{"tree": {"degrees": [2]}, "generators": {"a": {"perm": [1, 0], "sections": ["e", "z"]}}}"#;
        assert!(matches!(parse_group(src), Err(Error::Schema(_))));
    }

    #[test]
    fn non_regular_states_follow_phases() {
        let src = r#"{"tree": {"degrees": [2, 3], "repeat": true},
            "generators": {"x": {"perm": [1, 0], "sections": ["y", "e"]}},
            "states": {"y": {"perm": [1, 2, 0], "sections": ["x", "e", "e"]}}}"#;
        let g = parse_group(src).unwrap();
        let x = g.generator("x").unwrap();
        assert_eq!(x.act(&"00".parse().unwrap()).unwrap().to_string(), "11");
    }
}
