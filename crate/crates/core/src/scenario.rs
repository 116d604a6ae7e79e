//! Declarative experiment descriptions and their deterministic execution.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::actions::{
    ball_embedding_test, cayley_ball, germ_ball, level_orbit_count, level_schreier, orbital_ball, orbital_truncation,
    verify_covering, Embedding,
};
use crate::bratteli::{homeo_profile, tree_profile, BoundedTypeHomeo, BratteliDiagram, ProfileVerdict};
use crate::confinement::{
    build_displacement, check_confining, commutator_engine, named_words, refine_confining, verify_displacement,
    Confinement, EngineOptions, DEFAULT_DEPTH_BUDGET,
};
use crate::error::{Error, Result};
use crate::export::{to_json, Export, Format};
use crate::geometry::{cut_set_sequence, fit_degree, graph_growth, leud_upper, CutSetResult, LeudEvidence, FIT_RESIDUAL_THRESHOLD};
use crate::graph::LabeledGraph;
use crate::group::GroupSpec;
use crate::oracle::{OracleSpec, SubgroupOracle};
use crate::registry::load_group;
use crate::tree::Ray;
use crate::urs::{
    empty_cylinder_fingerprint, fix_level, rist_containment_fingerprint, sandwich_check, subset_orbit,
    ClosedSetSpec, Fingerprint, ORBIT_CAP,
};

fn default_cap() -> usize {
    1 << 16
}

fn default_depth() -> usize {
    DEFAULT_DEPTH_BUDGET
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CutSetSource {
    Orbital { ray: Ray, cap: usize },
    Grid { width: usize, height: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum UrsTask {
    /// Fingerprint of a closed set (when given) and of the oracle.
    Fingerprint {
        #[serde(default)]
        closed_set: Option<ClosedSetSpec>,
    },
    Orbit { vertices: Vec<crate::tree::Vertex> },
    Sandwich,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Schreier {
        level: usize,
        #[serde(default = "default_cap")]
        cap: usize,
    },
    Growth {
        ray: Ray,
        radius: usize,
    },
    Germ {
        ray: Ray,
        radius: usize,
    },
    Cayley {
        radius: usize,
        /// Compare the Cayley ball with the orbital graph of this ray.
        #[serde(default)]
        compare_ray: Option<Ray>,
    },
    Cutset {
        source: CutSetSource,
        bound: usize,
        min_chain: usize,
    },
    Confine {
        p: Vec<String>,
        oracles: Vec<OracleSpec>,
        level: usize,
        #[serde(default)]
        refine: bool,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Displace {
        p: Vec<String>,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    /// Refinement, displacement and the commutator engine in sequence.
    Engine {
        p: Vec<String>,
        oracles: Vec<OracleSpec>,
        level: usize,
        #[serde(default = "default_depth")]
        depth: usize,
        #[serde(default)]
        options: EngineOptions,
    },
    Urs {
        oracle: OracleSpec,
        level: usize,
        ball: usize,
        mode: UrsTask,
    },
    Bratteli {
        horizon: usize,
        /// Word in the group generators, profiled as a tree automorphism.
        #[serde(default)]
        element: Option<String>,
        /// Rule-list homeomorphism of `diagram`.
        #[serde(default)]
        homeo: Option<BoundedTypeHomeo>,
        #[serde(default)]
        diagram: Option<BratteliDiagram>,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Schreier { .. } => "schreier",
            Task::Growth { .. } => "growth",
            Task::Germ { .. } => "germ",
            Task::Cayley { .. } => "cayley",
            Task::Cutset { .. } => "cutset",
            Task::Confine { .. } => "confine",
            Task::Displace { .. } => "displace",
            Task::Engine { .. } => "engine",
            Task::Urs { .. } => "urs",
            Task::Bratteli { .. } => "bratteli",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    None,
    Confirmed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Registry name or path of a group file.
    pub group: String,
    pub task: Task,
    #[serde(default)]
    pub expect: Expectation,
    /// Recorded in the report; no task randomizes its search order.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
}

impl Scenario {
    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s).map_err(|e| Error::Schema(format!("scenario: {e}")))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |what: &str, x: usize| {
            if x == 0 {
                Err(Error::Schema(format!("scenario: {what} must be positive")))
            } else {
                Ok(())
            }
        };
        match &self.task {
            Task::Schreier { cap, .. } => positive("cap", *cap),
            Task::Growth { radius, .. } | Task::Germ { radius, .. } | Task::Cayley { radius, .. } => {
                positive("radius", *radius)
            }
            Task::Cutset { bound, min_chain, source } => {
                positive("bound", *bound)?;
                positive("min_chain", *min_chain)?;
                match source {
                    CutSetSource::Orbital { cap, .. } => positive("cap", *cap),
                    CutSetSource::Grid { width, height } => positive("grid size", width * height),
                }
            }
            Task::Confine { level, depth, .. } | Task::Engine { level, depth, .. } => {
                positive("level", *level)?;
                positive("depth", *depth)
            }
            Task::Displace { depth, .. } => positive("depth", *depth),
            Task::Urs { level, ball, .. } => {
                positive("level", *level)?;
                positive("ball", *ball)
            }
            Task::Bratteli { horizon, .. } => positive("horizon", *horizon),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// A definitive negative where the scenario expected confirmation.
    Refuted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub status: Status,
    pub verdict: String,
    /// Sorted-key JSON report.
    pub report: String,
    pub artifacts: Vec<Artifact>,
}

struct Run {
    verdict: String,
    negative: bool,
    result: Value,
    artifacts: Vec<Artifact>,
}

fn value<T: Serialize>(t: &T) -> Result<Value> {
    serde_json::to_value(t).map_err(|e| Error::Unsupported(e.to_string()))
}

fn artifact<T: Export>(stem: &str, t: &T, format: Format) -> Result<Artifact> {
    Ok(Artifact {
        name: format!("{stem}.{format}"),
        content: t.export(format)?,
    })
}

fn oracles(g: &GroupSpec, specs: &[OracleSpec]) -> Result<Vec<SubgroupOracle>> {
    specs.iter().map(|s| SubgroupOracle::new(g, s.clone())).collect()
}

fn graph_summary(graph: &LabeledGraph) -> Value {
    json!({
        "vertices": graph.vertex_count(),
        "edges": graph.edge_count(),
        "involutive": graph.is_involutive(),
    })
}

fn confinement_verdict(c: &Confinement) -> String {
    match c {
        Confinement::ConfirmedUpTo { radius, checked } => format!("confirmed_up_to(L={radius}, checked={checked})"),
        Confinement::RefutedAt { word, .. } => format!("refuted_at({word})"),
    }
}

/// Runs a scenario; `format` selects the rendering of the main artifact.
pub fn run(sc: &Scenario, format: Option<Format>) -> Result<Outcome> {
    sc.validate()?;
    let g = load_group(&sc.group)?;
    let run = run_task(&g, &sc.task, format).map_err(|e| match e {
        Error::Precondition(m) => Error::Precondition(format!("{} scenario on {}: {m}", sc.task.name(), sc.group)),
        other => other,
    })?;
    let report = to_json(&json!({
        "scenario": value(sc)?,
        "verdict": run.verdict,
        "result": run.result,
    }))?;
    let status = if run.negative && sc.expect == Expectation::Confirmed {
        Status::Refuted
    } else {
        Status::Completed
    };
    Ok(Outcome {
        status,
        verdict: run.verdict,
        report,
        artifacts: run.artifacts,
    })
}

fn run_task(g: &GroupSpec, task: &Task, format: Option<Format>) -> Result<Run> {
    match task {
        Task::Schreier { level, cap } => {
            let graph = level_schreier(g, *level, *cap)?;
            let orbits = level_orbit_count(g, *level, *cap)?;
            Ok(Run {
                verdict: format!("{orbits} orbit(s) on level {level}"),
                negative: orbits != 1,
                result: json!({"graph": graph_summary(&graph), "orbits": orbits, "level": level}),
                artifacts: vec![artifact("schreier", &graph, format.unwrap_or(Format::Dot))?],
            })
        }
        Task::Growth { ray, radius } => {
            let graph = orbital_ball(g, ray, *radius)?;
            let table = graph_growth(&graph, *radius / 2)?;
            let fit = fit_degree(&table)?;
            let ok = fit.residual <= FIT_RESIDUAL_THRESHOLD;
            let verdict = if ok {
                format!(
                    "degree {} on window [{}, {}] of the orbital ball of radius {radius} at {ray}",
                    fit.degree, fit.window.0, fit.window.1
                )
            } else {
                format!("inconclusive degree fit at radius {radius} (residual {:.3})", fit.residual)
            };
            Ok(Run {
                verdict,
                negative: false,
                result: json!({"graph": graph_summary(&graph), "table": value(&table)?, "fit": value(&fit)?}),
                artifacts: vec![artifact("growth", &table, format.unwrap_or(Format::Csv))?],
            })
        }
        Task::Germ { ray, radius } => {
            let gb = germ_ball(g, ray, *radius)?;
            let cov = verify_covering(&gb);
            Ok(Run {
                verdict: format!(
                    "covering {} at radius {radius} over {ray}, base fiber {}",
                    if cov.passed() { "verified" } else { "failed" },
                    cov.base_fiber
                ),
                negative: !cov.passed(),
                result: json!({"germ": graph_summary(&gb.graph), "orbital": graph_summary(&gb.orbital), "covering": value(&cov)?}),
                artifacts: vec![artifact("germ", &gb.graph, format.unwrap_or(Format::Dot))?],
            })
        }
        Task::Cayley { radius, compare_ray } => {
            let graph = cayley_ball(g, *radius)?;
            let sizes = graph.ball_sizes(0, *radius);
            let mut result = json!({"graph": graph_summary(&graph), "ball_sizes": sizes});
            let mut verdict = format!("cayley ball of radius {radius} has {} elements", graph.vertex_count());
            if let Some(ray) = compare_ray {
                let orbital = orbital_ball(g, ray, 2 * radius)?;
                let e = ball_embedding_test(g, &orbital, *radius)?;
                verdict = match &e {
                    Embedding::EmbedsAt { name, radius, .. } => format!("embeds at {name} (R={radius})"),
                    Embedding::NoEmbedding { radius, centers_tested } => {
                        format!("no_embedding (R={radius}, {centers_tested} centers)")
                    }
                };
                result["embedding"] = value(&e)?;
            }
            Ok(Run {
                verdict,
                negative: false,
                result,
                artifacts: vec![artifact("cayley", &graph, format.unwrap_or(Format::Dot))?],
            })
        }
        Task::Cutset { source, bound, min_chain } => {
            let graph = match source {
                CutSetSource::Orbital { ray, cap } => orbital_truncation(g, ray, *cap)?,
                CutSetSource::Grid { width, height } => LabeledGraph::grid(*width, *height),
            };
            let res = cut_set_sequence(&graph, *bound, *min_chain);
            let evidence = match &res {
                CutSetResult::Found(c) => LeudEvidence::CutSets(c.clone()),
                CutSetResult::NotFound { .. } => LeudEvidence::Growth(graph_growth(&graph, growth_radius(&graph))?),
            };
            let leud = leud_upper(&evidence)?;
            let verdict = match &res {
                CutSetResult::Found(c) => format!("found chain of {} sets with boundary ≤ {bound}; leud ≤ {}", c.len(), leud.bound),
                CutSetResult::NotFound { best_chain, .. } => {
                    format!("not_found (bound {bound}, best chain {best_chain}); leud ≤ {} by {}", leud.bound, leud.rule)
                }
            };
            Ok(Run {
                verdict,
                negative: false,
                result: json!({"graph": graph_summary(&graph), "cut_sets": value(&res)?, "leud": value(&leud)?}),
                artifacts: Vec::new(),
            })
        }
        Task::Confine { p, oracles: specs, level, refine, depth } => {
            let h = oracles(g, specs)?;
            let p = named_words(g, p)?;
            if *refine {
                let r = refine_confining(&p, &h, g, *level, *depth)?;
                Ok(Run {
                    verdict: format!("refined to {} elements; {}", r.elements.len(), confinement_verdict(&r.verdict)),
                    negative: !r.verdict.is_confirmed(),
                    result: value(&r)?,
                    artifacts: Vec::new(),
                })
            } else {
                let c = check_confining(&p, &h, g, *level)?;
                Ok(Run {
                    verdict: confinement_verdict(&c),
                    negative: !c.is_confirmed(),
                    result: value(&c)?,
                    artifacts: Vec::new(),
                })
            }
        }
        Task::Displace { p, depth } => {
            let p = named_words(g, p)?;
            match build_displacement(&p, *depth) {
                Ok(cfg) => {
                    let check = verify_displacement(&cfg)?;
                    Ok(Run {
                        verdict: format!("configuration within depth {depth}: {}", check.summary()),
                        negative: !check.passed(),
                        result: json!({"config": value(&cfg)?, "check": value(&check)?}),
                        artifacts: vec![Artifact {
                            name: "config.json".into(),
                            content: to_json(&cfg)?,
                        }],
                    })
                }
                Err(Error::OrderTwoObstruction(name)) => Ok(Run {
                    verdict: format!("order_two_obstruction({name})"),
                    negative: true,
                    result: json!({"obstruction": name}),
                    artifacts: Vec::new(),
                }),
                Err(e) => Err(e),
            }
        }
        Task::Engine { p, oracles: specs, level, depth, options } => {
            let h = oracles(g, specs)?;
            let p = named_words(g, p)?;
            let refinement = refine_confining(&p, &h, g, *level, *depth)?;
            if !refinement.verdict.is_confirmed() {
                return Ok(Run {
                    verdict: confinement_verdict(&refinement.verdict),
                    negative: true,
                    result: json!({"refinement": value(&refinement)?}),
                    artifacts: Vec::new(),
                });
            }
            let cfg = build_displacement(&refinement.elements, *depth)?;
            let check = verify_displacement(&cfg)?;
            let report = commutator_engine(&cfg, &h, g, options)?;
            let failed = report.ledger.iter().filter(|e| !e.passed()).count();
            let verdict = format!(
                "ledger {} ({} checks, {failed} failed) at L={level}, depth {depth}; chosen sigma {}",
                if report.all_passed { "all-pass" } else { "failures" },
                report.ledger.len(),
                report.chosen.map_or("none".into(), |i| i.to_string())
            );
            Ok(Run {
                verdict,
                negative: !report.all_passed,
                result: json!({
                    "refinement": value(&refinement)?,
                    "config": value(&cfg)?,
                    "check": value(&check)?,
                }),
                artifacts: vec![Artifact {
                    name: "engine.json".into(),
                    content: report.export(Format::Json)?,
                }],
            })
        }
        Task::Urs { oracle, level, ball, mode } => {
            let h = SubgroupOracle::new(g, oracle.clone())?;
            let tree = g.tree();
            match mode {
                UrsTask::Fingerprint { closed_set } => {
                    let rist = rist_containment_fingerprint(g, std::slice::from_ref(&h), *level, *ball)?;
                    let fixed = fix_level(g, &h, *level, *ball)?;
                    let mut result = json!({
                        "rist_containment": rist.to_string(),
                        "fix_level": fixed.to_string(),
                    });
                    if let Some(c) = closed_set {
                        result["empty_cylinders"] = empty_cylinder_fingerprint(c, tree, *level)?.to_string().into();
                    }
                    Ok(Run {
                        verdict: format!("fingerprints at level {level}, L={ball}"),
                        negative: false,
                        result,
                        artifacts: Vec::new(),
                    })
                }
                UrsTask::Orbit { vertices } => {
                    let s = Fingerprint::from_vertices(tree, *level, vertices)?;
                    let orbit = subset_orbit(g, &s, ORBIT_CAP)?;
                    Ok(Run {
                        verdict: format!("orbit of {} subsets at level {level}", orbit.len()),
                        negative: false,
                        result: json!({"orbit": orbit.iter().map(|f| f.to_string()).collect::<Vec<_>>()}),
                        artifacts: Vec::new(),
                    })
                }
                UrsTask::Sandwich => {
                    let ledger = sandwich_check(g, &h, *level, *ball)?;
                    Ok(Run {
                        verdict: format!(
                            "sandwich at level {level}, L={ball}: lower {}, upper {}",
                            pass(ledger.lower_passed),
                            pass(ledger.upper_passed)
                        ),
                        negative: !ledger.passed(),
                        result: value(&ledger)?,
                        artifacts: Vec::new(),
                    })
                }
            }
        }
        Task::Bratteli { horizon, element, homeo, diagram } => {
            let profile = match (element, homeo) {
                (Some(w), None) => tree_profile(&g.eval_str(w)?, *horizon)?,
                (None, Some(h)) => {
                    let d = diagram
                        .clone()
                        .unwrap_or_else(|| BratteliDiagram::stationary_tree(g.tree().degree_at_depth(0)));
                    homeo_profile(&d, h, *horizon)?
                }
                _ => return Err(Error::Schema("bratteli scenario needs exactly one of element, homeo".into())),
            };
            let verdict = match &profile.verdict {
                ProfileVerdict::BoundedWith { sup, horizon } => format!("bounded_with(sup={sup}, horizon={horizon})"),
                ProfileVerdict::Inconclusive { horizon } => format!("inconclusive(horizon={horizon})"),
            };
            Ok(Run {
                verdict,
                negative: false,
                result: value(&profile)?,
                artifacts: vec![artifact("profile", &profile, format.unwrap_or(Format::Csv))?],
            })
        }
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

/// Radius for a growth fit on a finite graph: a quarter of its extent from the base.
fn growth_radius(g: &LabeledGraph) -> usize {
    let far = g
        .distances_from(g.base.unwrap_or(0), usize::MAX)
        .into_iter()
        .flatten()
        .max()
        .unwrap_or(0);
    (far / 4).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_errors() {
        assert!(matches!(Scenario::from_json("{}"), Err(Error::Schema(_))));
        assert!(matches!(
            Scenario::from_json(r#"{"group": "grigorchuk", "task": {"growth": {"ray": "(1)", "radius": 0}}}"#),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            Scenario::from_json(r#"{"group": "grigorchuk", "task": {"growth": {"ray": "(1)", "radius": 4, "x": 1}}}"#),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn schreier_and_growth() {
        let sc = Scenario::from_json(r#"{"group": "grigorchuk", "task": {"schreier": {"level": 3}}}"#).unwrap();
        let out = run(&sc, None).unwrap();
        assert_eq!(out.artifacts[0].content.matches("[label=").count(), 8 + 32);
        assert_eq!(out.status, Status::Completed);
        let sc = Scenario::from_json(r#"{"group": "grigorchuk", "task": {"growth": {"ray": "(1)", "radius": 32}}}"#).unwrap();
        let out = run(&sc, None).unwrap();
        assert!(out.verdict.starts_with("degree 1"), "{}", out.verdict);
        assert_eq!(run(&sc, None).unwrap(), out);
    }

    #[test]
    fn grid_cut_sets() {
        let sc = Scenario::from_json(
            r#"{"group": "grigorchuk", "task": {"cutset": {"source": {"grid": {"width": 32, "height": 32}}, "bound": 3, "min_chain": 20}}}"#,
        )
        .unwrap();
        let out = run(&sc, None).unwrap();
        assert!(out.verdict.starts_with("not_found"), "{}", out.verdict);
        assert!(out.verdict.ends_with("leud ≤ 2 by polynomial_growth"), "{}", out.verdict);
    }

    #[test]
    fn refutation_status() {
        let sc = Scenario::from_json(
            r#"{"group": "grigorchuk", "expect": "confirmed", "task": {"displace": {"p": ["a"]}}}"#,
        )
        .unwrap();
        let out = run(&sc, None).unwrap();
        assert_eq!(out.status, Status::Refuted);
        assert_eq!(out.verdict, "order_two_obstruction(a)");
    }
}
