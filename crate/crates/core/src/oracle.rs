//! Membership predicates for subgroups of a group acting on a tree.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::automaton::Automorphism;
use crate::error::{Error, Result};
use crate::group::{enumerate_ball, Ball, GroupSpec};
use crate::tree::{complement_antichain, Antichain, Ray, TreeSpec, Vertex};

/// Serializable description of a subgroup.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleSpec {
    PointStabilizer { ray: Ray },
    GermStabilizer { ray: Ray },
    RigidStabilizer { vertex: Vertex },
    /// Pointwise stabilizer of the closed set `∂T ∖ ⋃_{v ∈ complement} ∂T_v`.
    Fixator { complement: Antichain },
    /// Subgroup generated by words in the ambient generators, known on the
    /// ball of the given radius in those words.
    WordList {
        words: Vec<String>,
        #[serde(default = "default_radius")]
        radius: usize,
        #[serde(default = "default_cap")]
        cap: usize,
    },
}

fn default_radius() -> usize {
    8
}

fn default_cap() -> usize {
    200_000
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSpec::PointStabilizer { ray } => write!(f, "point_stabilizer({ray})"),
            OracleSpec::GermStabilizer { ray } => write!(f, "germ_stabilizer({ray})"),
            OracleSpec::RigidStabilizer { vertex } => write!(f, "rigid_stabilizer({vertex})"),
            OracleSpec::Fixator { complement } => write!(f, "fixator(complement of {complement})"),
            OracleSpec::WordList { words, radius, .. } => {
                write!(f, "word_list([{}], radius {radius})", words.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Rule {
    Point(Ray),
    Germ(Ray),
    /// Must fix each of these cylinders pointwise.
    FixCylinders(Vec<Vertex>),
    Words(Ball),
}

#[derive(Clone, Debug)]
pub struct SubgroupOracle {
    spec: OracleSpec,
    tree: TreeSpec,
    rule: Rule,
}

impl SubgroupOracle {
    pub fn new(group: &GroupSpec, spec: OracleSpec) -> Result<Self> {
        let tree = group.tree().clone();
        let rule = match &spec {
            OracleSpec::PointStabilizer { ray } => {
                ray.check(&tree)?;
                Rule::Point(ray.clone())
            }
            OracleSpec::GermStabilizer { ray } => {
                ray.check(&tree)?;
                Rule::Germ(ray.clone())
            }
            OracleSpec::RigidStabilizer { vertex } => {
                tree.check_vertex(vertex)?;
                let c = complement_antichain(&Antichain::singleton(vertex.clone()), &tree)?;
                Rule::FixCylinders(c.iter().cloned().collect())
            }
            OracleSpec::Fixator { complement } => {
                for v in complement.iter() {
                    tree.check_vertex(v)?;
                }
                let c = complement_antichain(complement, &tree)?;
                Rule::FixCylinders(c.iter().cloned().collect())
            }
            OracleSpec::WordList { words, radius, cap } => {
                let mut gens = Vec::new();
                for (i, w) in words.iter().enumerate() {
                    gens.push((format!("h{i}"), group.eval_str(w)?));
                }
                let sub = GroupSpec::new("subgroup", tree.clone(), gens, true)?;
                let ball = enumerate_ball(&sub.identity(), sub.labels(), *radius, *cap)?;
                Rule::Words(ball)
            }
        };
        Ok(SubgroupOracle { spec, tree, rule })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn tree(&self) -> &TreeSpec {
        &self.tree
    }

    /// Membership is decided exactly for every input (not scope-bounded).
    pub fn is_exact(&self) -> bool {
        match &self.rule {
            Rule::Words(b) => b.closed,
            _ => true,
        }
    }

    pub fn scope(&self) -> String {
        match &self.rule {
            Rule::Words(b) if b.closed => format!("exact (finite subgroup of order {})", b.len()),
            Rule::Words(b) => format!("ball of radius {} in the subgroup generators ({} elements)", b.radius, b.len()),
            _ => "exact".into(),
        }
    }

    /// Subgroup elements found by the word-list enumeration, if any.
    pub fn enumerated(&self) -> Option<&Ball> {
        match &self.rule {
            Rule::Words(b) => Some(b),
            _ => None,
        }
    }

    pub fn contains(&self, g: &Automorphism) -> Result<bool> {
        if g.tree() != &self.tree {
            return Err(Error::TreeMismatch);
        }
        match &self.rule {
            Rule::Point(x) => Ok(g.act_ray(x)? == *x),
            Rule::Germ(x) => g.fixes_germ(x),
            Rule::FixCylinders(ws) => Ok(ws.iter().all(|w| g.fixes_cylinder(w))),
            Rule::Words(b) => {
                if b.contains(g) {
                    Ok(true)
                } else if b.closed {
                    Ok(false)
                } else {
                    Err(Error::ScopeExceeded(format!(
                        "element not among the {} enumerated elements of {}",
                        b.len(),
                        self.spec
                    )))
                }
            }
        }
    }
}

/// Membership in at least one of several subgroups.
pub fn contains_any(oracles: &[SubgroupOracle], g: &Automorphism) -> Result<bool> {
    for o in oracles {
        if o.contains(g)? {
            return Ok(true);
        }
    }
    Ok(false)
}
