//! Acceptance run: one line per criterion, exit status 1 if any fails.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use treelab::actions::{ball_embedding_test, cayley_ball, germ_ball, orbital_ball, orbital_truncation, verify_covering, Embedding};
use treelab::bratteli::{tree_correspondence, tree_profile, TreeCorrespondence};
use treelab::confinement::{
    build_displacement, check_confining, first_moved_vertex, named_words, normal_commutator_identity, rist_ball,
    verify_displacement,
};
use treelab::contracting::nucleus;
use treelab::geometry::{
    cut_set_sequence, fit_degree, graph_growth, leud_upper, CutSetResult, LeudEvidence, FIT_RESIDUAL_THRESHOLD,
};
use treelab::scenario::{self, Outcome, Scenario};
use treelab::urs::{empty_cylinder_fingerprint, sandwich_check, subset_orbit_equal};
use treelab::{
    load_group, Antichain, Automorphism, BratteliDiagram, ClosedSetSpec, Confinement, EngineReport, Error,
    Fingerprint, GroupSpec, LabeledGraph, OracleSpec, Ray, SubgroupOracle, TreeSpec, Vertex,
};

const ALGEBRA_SECONDS: f64 = 1.0;
const GROWTH_SECONDS: f64 = 60.0;
const PIPELINE_SECONDS: f64 = 300.0;
const WREATH_SAMPLES: usize = 500;
const COMMUTATOR_SAMPLES: usize = 100;
const PORTRAIT_DEPTH: usize = 10;
const SEED: u64 = 0x7ee1ab;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e(err: Error) -> String {
    err.to_string()
}

fn within(t: Instant, limit: f64) -> Result<Duration, String> {
    let d = t.elapsed();
    ensure(d.as_secs_f64() < limit, format!("took {:.2} s, limit {limit} s", d.as_secs_f64()))?;
    Ok(d)
}

// ---------------------------------------------------------------------------
// test-side oracles

/// The first Grigorchuk group acting directly on binary words.
fn grig_act(gen: char, w: &mut [u8]) {
    let mut g = gen;
    for x in w.iter_mut() {
        match (g, *x) {
            ('a', _) => {
                *x ^= 1;
                return;
            }
            ('b', 0) | ('c', 0) => {
                g = 'a';
            }
            ('b', 1) => g = 'c',
            ('c', 1) => g = 'd',
            ('d', 0) => return,
            ('d', 1) => g = 'b',
            _ => unreachable!(),
        }
    }
}

/// Breadth-first orbit of a finite word under a, b, c, d up to `radius`.
fn grig_orbit(start: Vec<u8>, radius: usize) -> HashSet<Vec<u8>> {
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0)]);
    while let Some((w, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        for g in ['a', 'b', 'c', 'd'] {
            let mut x = w.clone();
            grig_act(g, &mut x);
            if seen.insert(x.clone()) {
                queue.push_back((x, d + 1));
            }
        }
    }
    seen
}

fn portraits_equal(g: &Automorphism, h: &Automorphism) -> bool {
    g.portrait(PORTRAIT_DEPTH) == h.portrait(PORTRAIT_DEPTH)
}

fn word(g: &GroupSpec, s: &str) -> Result<Automorphism, String> {
    g.eval_str(s).map_err(e)
}

fn random_element(g: &GroupSpec, rng: &mut ChaCha8Rng, max_len: usize) -> Automorphism {
    let gens = g.generators();
    let len = rng.gen_range(0..=max_len);
    (0..len).fold(g.identity(), |acc, _| {
        let (_, x) = &gens[rng.gen_range(0..gens.len())];
        let x = if rng.gen_bool(0.5) { x.invert() } else { x.clone() };
        acc.compose(&x).unwrap()
    })
}

// ---------------------------------------------------------------------------
// criteria

fn algebra_core() -> Check {
    let t = Instant::now();
    let g = load_group("grigorchuk").map_err(e)?;
    let relations = ["aa", "bb", "cc", "dd", "bcd"];
    for r in relations {
        let x = word(&g, r)?;
        ensure(x.is_trivial(), format!("{r} is not trivial"))?;
        ensure(portraits_equal(&x, &g.identity()), format!("{r} portrait is not trivial"))?;
    }
    let gens: Vec<Automorphism> = g.generators().iter().map(|(_, a)| a.clone()).collect();
    let n = nucleus(&gens, 100).map_err(e)?;
    let expected: Vec<Automorphism> = ["e", "a", "b", "c", "d"].iter().map(|w| word(&g, w)).collect::<Result<_, _>>()?;
    ensure(n.len() == 5, format!("grigorchuk nucleus has {} elements", n.len()))?;
    for x in &expected {
        ensure(n.iter().any(|y| portraits_equal(x, y)), "grigorchuk nucleus misses a generator")?;
    }
    // brute force: every section at depth 6 of every element of B(6) lies in {1, a, b, c, d}
    let ball = g.ball(6).map_err(e)?;
    for x in &ball.elements {
        for v in g.tree().level(6) {
            let s = x.section(&v).map_err(e)?;
            ensure(expected.contains(&s), format!("section {s:?} escapes the nucleus"))?;
        }
    }
    let d1 = within(t, ALGEBRA_SECONDS)?;

    let t = Instant::now();
    let am = load_group("adding_machine").map_err(e)?;
    let a = am.generator("a").map_err(e)?.clone();
    let n = nucleus(std::slice::from_ref(&a), 100).map_err(e)?;
    let expected = [am.identity(), a.clone(), a.invert()];
    ensure(n.len() == 3, format!("adding machine nucleus has {} elements", n.len()))?;
    for x in &expected {
        ensure(n.iter().any(|y| portraits_equal(x, y)), "adding machine nucleus mismatch")?;
    }
    let d2 = within(t, ALGEBRA_SECONDS)?;
    Ok(format!(
        "5 relations, nuclei of sizes 5 and 3 ({:.3} s, {:.3} s)",
        d1.as_secs_f64(),
        d2.as_secs_f64()
    ))
}

fn wreath_identity() -> Check {
    let groups: Vec<GroupSpec> = ["grigorchuk", "adding_machine", "basilica", "gupta_sidki_3", "mirror"]
        .iter()
        .map(|n| load_group(n).map_err(e))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = 0;
    for _ in 0..WREATH_SAMPLES {
        let grp = &groups[rng.gen_range(0..groups.len())];
        let g = random_element(grp, &mut rng, 10);
        let h = random_element(grp, &mut rng, 10);
        let depth = rng.gen_range(0..=6);
        let d = grp.tree().degree_at_depth(0) as u8;
        let v = Vertex::from_letters((0..depth).map(|_| rng.gen_range(0..d) as _).collect());
        let lhs = g.compose(&h).map_err(e)?.section(&v).map_err(e)?;
        let rhs = g
            .section(&h.act(&v).map_err(e)?)
            .map_err(e)?
            .compose(&h.section(&v).map_err(e)?)
            .map_err(e)?;
        if lhs != rhs {
            violations += 1;
        }
    }
    ensure(violations == 0, format!("{violations} violations"))?;
    Ok(format!("{WREATH_SAMPLES} triples, 0 violations"))
}

fn linear_growth() -> Check {
    let t = Instant::now();
    let g = load_group("grigorchuk").map_err(e)?;
    let x = Ray::constant(1);
    let graph = orbital_ball(&g, &x, 64).map_err(e)?;
    // oracle: the orbit of 1^24 under direct word arithmetic
    let orbit = grig_orbit(vec![1; 24], 64);
    ensure(
        graph.vertex_count() == orbit.len(),
        format!("orbital ball has {} vertices, oracle {}", graph.vertex_count(), orbit.len()),
    )?;
    for name in &graph.names {
        let y: Ray = name.parse().map_err(e)?;
        let p: Vec<u8> = y.prefix(24).letters().iter().map(|&l| l as u8).collect();
        ensure(orbit.contains(&p), format!("{name} is not in the oracle orbit"))?;
    }
    let table = graph_growth(&graph, 32).map_err(e)?;
    let fit = fit_degree(&table).map_err(e)?;
    ensure(fit.degree == 1, format!("fitted degree {}", fit.degree))?;
    ensure(
        fit.residual <= FIT_RESIDUAL_THRESHOLD,
        format!("residual {:.4} above {FIT_RESIDUAL_THRESHOLD}", fit.residual),
    )?;
    let cayley = cayley_ball(&g, 6).map_err(e)?;
    // oracle: distinct actions on level 10 give a lower bound on |B(6)|
    let mut actions = HashSet::new();
    let ball = g.ball(6).map_err(e)?;
    for el in &ball.elements {
        actions.insert(el.level_permutation(10));
    }
    ensure(cayley.vertex_count() == 108 && actions.len() == 108, format!("|B(6)| = {}", cayley.vertex_count()))?;
    let orbital6 = graph_growth(&orbital_ball(&g, &x, 12).map_err(e)?, 6).map_err(e)?;
    let max6 = orbital6.rows[6].max_ball;
    ensure(cayley.vertex_count() > max6, "cayley ball does not exceed orbital balls")?;
    let emb = ball_embedding_test(&g, &orbital_ball(&g, &x, 12).map_err(e)?, 6).map_err(e)?;
    ensure(matches!(emb, Embedding::NoEmbedding { .. }), format!("{emb:?}"))?;
    let d = within(t, GROWTH_SECONDS)?;
    Ok(format!(
        "degree 1 (residual {:.4}), |B(6)| = {} > {max6}, no_embedding ({:.2} s)",
        fit.residual,
        cayley.vertex_count(),
        d.as_secs_f64()
    ))
}

fn confining() -> Check {
    let g = load_group("grigorchuk").map_err(e)?;
    let x = Ray::constant(1);
    let h = [SubgroupOracle::new(&g, OracleSpec::PointStabilizer { ray: x.clone() }).map_err(e)?];
    let p = named_words(&g, &["b".into(), "c".into(), "d".into()]).map_err(e)?;
    let c = check_confining(&p, &h, &g, 10).map_err(e)?;
    let checked = match c {
        Confinement::ConfirmedUpTo { radius: 10, checked } => checked,
        other => return Err(format!("{other:?}")),
    };
    // oracle: g⁻¹σg fixes 1^∞ iff σ fixes g(1^∞); test on prefixes of length 30
    let ball = g.ball(10).map_err(e)?;
    for el in &ball.elements {
        let y: Vec<u8> = el.act(&x.prefix(30)).map_err(e)?.letters().iter().map(|&l| l as u8).collect();
        let fixed = ['b', 'c', 'd'].iter().any(|&s| {
            let mut z = y.clone();
            grig_act(s, &mut z);
            z == y
        });
        ensure(fixed, "oracle finds an unconfined conjugate")?;
    }
    let trivial = [SubgroupOracle::new(&g, OracleSpec::Fixator { complement: Antichain::empty() }).map_err(e)?];
    for words in [vec!["b"], vec!["a", "ab"], vec!["adad"]] {
        let p = named_words(&g, &words.iter().map(|s| s.to_string()).collect::<Vec<_>>()).map_err(e)?;
        match check_confining(&p, &trivial, &g, 3).map_err(e)? {
            Confinement::RefutedAt { word, element } if word == "e" && element.is_trivial() => {}
            other => return Err(format!("trivial subgroup: {other:?}")),
        }
    }
    Ok(format!("confirmed_up_to(10) over {checked} elements; trivial H refuted at the identity"))
}

fn run_engine_scenario() -> Result<(Outcome, Duration), String> {
    let sc = Scenario::from_json(
        r#"{"group": "grigorchuk", "expect": "confirmed",
            "task": {"engine": {"p": ["b", "c", "d"], "oracles": [{"kind": "point_stabilizer", "ray": "(1)"}], "level": 8}}}"#,
    )
    .map_err(e)?;
    let t = Instant::now();
    let out = scenario::run(&sc, None).map_err(e)?;
    Ok((out, t.elapsed()))
}

fn displacement_pipeline(engine: &(Outcome, Duration)) -> Check {
    let am = load_group("adding_machine").map_err(e)?;
    let cfg = build_displacement(&named_words(&am, &["a".into()]).map_err(e)?, 12).map_err(e)?;
    let check = verify_displacement(&cfg).map_err(e)?;
    ensure(check.passed(), format!("adding machine: {}", check.summary()))?;
    let g = load_group("grigorchuk").map_err(e)?;
    match build_displacement(&named_words(&g, &["a".into()]).map_err(e)?, 12) {
        Err(Error::OrderTwoObstruction(n)) if n == "a" => {}
        other => return Err(format!("grigorchuk {{a}}: {other:?}")),
    }
    let (out, took) = engine;
    ensure(took.as_secs_f64() < PIPELINE_SECONDS, format!("pipeline took {:.1} s", took.as_secs_f64()))?;
    let text = &out
        .artifacts
        .iter()
        .find(|a| a.name == "engine.json")
        .ok_or("no engine report")?
        .content;
    let report: EngineReport = serde_json::from_str(text).map_err(|x| x.to_string())?;
    ensure(report.all_passed, "ledger has failures")?;
    for check in ["a_in_H", "a_support", "a_restriction", "a_diagonal_trivial"] {
        let entries: Vec<_> = report.ledger.iter().filter(|l| l.check == check).collect();
        ensure(!entries.is_empty(), format!("no {check} entries"))?;
        ensure(entries.iter().all(|l| l.failed == 0), format!("{check} failed"))?;
        ensure(entries.iter().map(|l| l.checked).sum::<usize>() > 0, format!("{check} checked nothing"))?;
    }
    ensure(report.chosen.is_some(), "no nontrivial witness subgroup")?;
    let checks: usize = report.ledger.iter().map(|l| l.checked).sum();
    Ok(format!(
        "adding machine verified, {{a}} obstructed, ledger all-pass ({} entries, {checks} checks, {:.1} s)",
        report.ledger.len(),
        took.as_secs_f64()
    ))
}

fn normal_commutators() -> Check {
    let g = load_group("grigorchuk").map_err(e)?;
    let ball = g.ball(4).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let sigmas: Vec<(&Automorphism, Vertex)> = ball
        .elements
        .iter()
        .filter_map(|s| first_moved_vertex(s, 3).map(|v| (s, v)))
        .collect();
    let mut rist_cache: Vec<(Vertex, Vec<Automorphism>)> = Vec::new();
    let mut verified = 0;
    let mut holds = 0;
    while verified < COMMUTATOR_SAMPLES {
        let (sigma, v) = &sigmas[rng.gen_range(0..sigmas.len())];
        let rist = match rist_cache.iter().find(|(w, _)| w == v) {
            Some((_, r)) => r.clone(),
            None => {
                let r: Vec<Automorphism> = rist_ball(&g, v, 6).map_err(e)?.into_iter().map(|n| n.element).collect();
                rist_cache.push((v.clone(), r.clone()));
                r
            }
        };
        if rist.is_empty() {
            continue;
        }
        let g1 = &rist[rng.gen_range(0..rist.len())];
        let g2 = &rist[rng.gen_range(0..rist.len())];
        let omega = Antichain::singleton(v.clone());
        ensure(sigma.act(v).map_err(e)? != *v, "sampled σ fixes its cylinder")?;
        match normal_commutator_identity(&omega, sigma, g1, g2).map_err(e)? {
            Some(ok) => {
                verified += 1;
                let lhs = g1.commutator(sigma).map_err(e)?.commutator(g2).map_err(e)?;
                let rhs = g1.commutator(g2).map_err(e)?;
                if ok && portraits_equal(&lhs, &rhs) {
                    holds += 1;
                }
            }
            None => return Err("hypotheses failed on a sampled triple".into()),
        }
    }
    ensure(holds == COMMUTATOR_SAMPLES, format!("{holds}/{COMMUTATOR_SAMPLES} identities hold"))?;
    Ok(format!("{holds}/{COMMUTATOR_SAMPLES} identities hold"))
}

fn germ_covering() -> Check {
    let mut parts = Vec::new();
    for (name, ray) in [("grigorchuk", "(1)"), ("gupta_sidki_3", "(2)"), ("basilica", "(0)"), ("basilica", "(01)")] {
        let g = load_group(name).map_err(e)?;
        let gb = germ_ball(&g, &ray.parse().map_err(e)?, 8).map_err(e)?;
        let cov = verify_covering(&gb);
        ensure(cov.passed(), format!("{name} at {ray}: {cov:?}"))?;
        ensure(cov.fibers.iter().all(|&f| f > 0 && f <= gb.graph.vertex_count()), "empty fiber")?;
        parts.push(format!("{name}{ray}: fiber {}", cov.base_fiber));
    }
    Ok(parts.join(", "))
}

/// Independent recount of a certificate: nested prefixes with small vertex boundary.
fn boundary(g: &LabeledGraph, set: &[usize]) -> usize {
    let inside: HashSet<usize> = set.iter().copied().collect();
    set.iter()
        .filter(|&&x| g.edges[x].iter().flatten().any(|y| !inside.contains(y)))
        .count()
}

fn cut_sets() -> Check {
    let g = load_group("grigorchuk").map_err(e)?;
    let graph = orbital_truncation(&g, &Ray::constant(1), 512).map_err(e)?;
    ensure(graph.vertex_count() == 512, format!("truncation has {} vertices", graph.vertex_count()))?;
    let cert = match cut_set_sequence(&graph, 3, 20) {
        CutSetResult::Found(c) => c,
        other => return Err(format!("orbital truncation: {other:?}")),
    };
    ensure(cert.len() >= 20, format!("chain of {}", cert.len()))?;
    let mut prev = 0;
    for k in 0..cert.len() {
        let set = cert.set(k);
        ensure(set.len() > prev, "chain is not strictly nested")?;
        prev = set.len();
        ensure(boundary(&graph, set) <= 3, format!("set {k} has boundary {}", boundary(&graph, set)))?;
    }
    let lo = leud_upper(&LeudEvidence::CutSets(cert.clone())).map_err(e)?;
    ensure(lo.bound == 1, format!("leud bound {}", lo.bound))?;
    let grid = LabeledGraph::grid(32, 32);
    ensure(
        matches!(cut_set_sequence(&grid, 3, 20), CutSetResult::NotFound { .. }),
        "grid admits a chain",
    )?;
    let hi = leud_upper(&LeudEvidence::Growth(graph_growth(&grid, 15).map_err(e)?)).map_err(e)?;
    ensure(hi.bound == 2, format!("grid leud bound {}", hi.bound))?;
    Ok(format!("chain of {} with boundary ≤ 3, leud ≤ 1; grid not_found, leud ≤ 2", cert.len()))
}

/// Orbits of the level-`n` action computed from direct word arithmetic.
fn brute_force_subset_classes(n: usize) -> Vec<usize> {
    let leaves: Vec<Vec<u8>> = (0..1usize << n)
        .map(|i| (0..n).map(|k| ((i >> (n - 1 - k)) & 1) as u8).collect())
        .collect();
    let index = |w: &[u8]| w.iter().fold(0usize, |acc, &x| acc * 2 + x as usize);
    let gens: Vec<Vec<usize>> = ['a', 'b', 'c', 'd']
        .iter()
        .map(|&g| {
            leaves
                .iter()
                .map(|w| {
                    let mut x = w.clone();
                    grig_act(g, &mut x);
                    index(&x)
                })
                .collect()
        })
        .collect();
    let subsets = 1usize << (1 << n);
    let mut class = vec![usize::MAX; subsets];
    let mut next = 0;
    for s in 0..subsets {
        if class[s] != usize::MAX {
            continue;
        }
        let mut queue = vec![s];
        class[s] = next;
        while let Some(t) = queue.pop() {
            for p in &gens {
                let image = (0..1 << n).filter(|&i| t >> i & 1 == 1).fold(0, |acc, i| acc | 1 << p[i]);
                if class[image] == usize::MAX {
                    class[image] = next;
                    queue.push(image);
                }
            }
        }
        next += 1;
    }
    class
}

fn urs_fingerprints() -> Check {
    let tree = TreeSpec::binary();
    let specs = [
        ClosedSetSpec::ComplementOfAntichain {
            antichain: Antichain::new(vec!["0".parse().map_err(e)?, "10".parse().map_err(e)?]).map_err(e)?,
        },
        ClosedSetSpec::FiniteRays {
            rays: vec![Ray::constant(1), "0(01)".parse().map_err(e)?],
        },
        ClosedSetSpec::Subtree {
            degrees: vec![2, 1],
            repeat: true,
        },
        ClosedSetSpec::Subtree {
            degrees: vec![1, 1, 2],
            repeat: false,
        },
    ];
    for c in &specs {
        for n in 1..6 {
            let here = empty_cylinder_fingerprint(c, &tree, n).map_err(e)?;
            let below = empty_cylinder_fingerprint(c, &tree, n + 1).map_err(e)?.vertices(&tree);
            for v in here.vertices(&tree) {
                ensure(tree.children(&v).all(|ch| below.contains(&ch)), format!("refinement fails at {v}"))?;
            }
        }
    }
    let g = load_group("grigorchuk").map_err(e)?;
    let classes = brute_force_subset_classes(2);
    let subsets: Vec<Fingerprint> = (0..16usize)
        .map(|s| {
            let vs: Vec<Vertex> = tree.level(2).into_iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).map(|(_, v)| v).collect();
            Fingerprint::from_vertices(&tree, 2, &vs)
        })
        .collect::<Result<_, _>>()
        .map_err(e)?;
    // brute-force classes index leaves by reading words as binary numbers; map them
    let leaf_index: Vec<usize> = tree
        .level(2)
        .iter()
        .map(|v| v.letters().iter().fold(0usize, |acc, &x| acc * 2 + x as usize))
        .collect();
    let mask = |s: usize| (0..4).filter(|&i| s >> i & 1 == 1).fold(0, |acc, i| acc | 1 << leaf_index[i]);
    for s in 0..16 {
        for t in 0..16 {
            let engine = subset_orbit_equal(&g, &subsets[s], &subsets[t]).map_err(e)?;
            ensure(
                engine == (classes[mask(s)] == classes[mask(t)]),
                format!("orbit equality disagrees on {} vs {}", subsets[s], subsets[t]),
            )?;
        }
    }
    let distinct: BTreeSet<usize> = classes.iter().copied().collect();
    let h = SubgroupOracle::new(&g, OracleSpec::PointStabilizer { ray: Ray::constant(1) }).map_err(e)?;
    let ledger = sandwich_check(&g, &h, 3, 4).map_err(e)?;
    ensure(ledger.lower_passed, format!("lower inclusion: {:?}", ledger.lower_first_failure))?;
    ensure(ledger.upper_passed, "upper inclusion fails")?;
    Ok(format!(
        "refinement holds for 4 closed sets, 16 subsets in {} orbits match, sandwich passes ({} + {} checks)",
        distinct.len(),
        ledger.lower_checked,
        ledger.upper_checked
    ))
}

fn random_finitary(tree: &TreeSpec, depth: usize, rng: &mut ChaCha8Rng) -> Result<Automorphism, String> {
    if depth == 0 {
        return Ok(Automorphism::identity(tree));
    }
    let perm = if rng.gen_bool(0.5) { vec![1, 0] } else { vec![0, 1] };
    let sections = [random_finitary(tree, depth - 1, rng)?, random_finitary(tree, depth - 1, rng)?];
    Automorphism::from_recursion(tree, perm, &sections).map_err(e)
}

fn bratteli_correspondence() -> Check {
    let corr = tree_correspondence(&BratteliDiagram::stationary_tree(2)).map_err(e)?;
    let tree = corr.tree.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let samples = 64;
    for _ in 0..samples {
        let x = random_finitary(&tree, 5, &mut rng)?;
        let depth = TreeCorrespondence::finitary_depth(&x, 5).ok_or("not finitary")?;
        let h = corr.to_homeo(&x, 5).map_err(e)?;
        ensure(h.rule_depth() == depth, "rule depth differs from the finitary depth")?;
        let back = corr.from_homeo(&h).map_err(e)?;
        ensure(back == x, "round trip changed the element")?;
        for w in tree.level(5) {
            let image = h.apply(&corr.path(&w)).ok_or("no rule applies")?;
            ensure(corr.vertex(&image) == x.act(&w).map_err(e)?, "rules disagree with the action")?;
        }
    }
    let am = load_group("adding_machine").map_err(e)?;
    let profile = tree_profile(am.generator("a").map_err(e)?, 10).map_err(e)?;
    ensure(profile.rows.len() == 11, "profile does not reach horizon 10")?;
    ensure(profile.rows.iter().all(|r| r.count == 1), format!("{:?}", profile.rows))?;
    Ok(format!("{samples} finitary elements round-trip at depth 5; A_v(a) = 1 on levels 0..=10"))
}

fn determinism(engine: &(Outcome, Duration)) -> Check {
    let scenarios = [
        r#"{"group": "grigorchuk", "task": {"growth": {"ray": "(1)", "radius": 64}}}"#,
        r#"{"group": "grigorchuk", "task": {"cayley": {"radius": 6, "compare_ray": "(1)"}}}"#,
        r#"{"group": "grigorchuk", "task": {"confine": {"p": ["b", "c", "d"], "oracles": [{"kind": "point_stabilizer", "ray": "(1)"}], "level": 10}}}"#,
        r#"{"group": "adding_machine", "task": {"displace": {"p": ["a"]}}}"#,
        r#"{"group": "gupta_sidki_3", "task": {"germ": {"ray": "(2)", "radius": 8}}}"#,
        r#"{"group": "grigorchuk", "task": {"cutset": {"source": {"orbital": {"ray": "(1)", "cap": 512}}, "bound": 3, "min_chain": 20}}}"#,
        r#"{"group": "grigorchuk", "task": {"urs": {"oracle": {"kind": "point_stabilizer", "ray": "(1)"}, "level": 3, "ball": 4, "mode": "sandwich"}}}"#,
        r#"{"group": "adding_machine", "task": {"bratteli": {"horizon": 10, "element": "a"}}}"#,
    ];
    for s in scenarios {
        let sc = Scenario::from_json(s).map_err(e)?;
        let a = scenario::run(&sc, None).map_err(e)?;
        let b = scenario::run(&sc, None).map_err(e)?;
        ensure(a == b, format!("{} scenario differs between runs", sc.task.name()))?;
    }
    let (again, _) = run_engine_scenario()?;
    ensure(again == engine.0, "engine scenario differs between runs")?;
    Ok(format!("{} scenarios byte-identical across two runs", scenarios.len() + 1))
}

fn main() {
    let engine = run_engine_scenario();
    let criteria: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("algebra core", Box::new(algebra_core)),
        ("wreath identity", Box::new(wreath_identity)),
        ("linear schreier growth", Box::new(linear_growth)),
        ("confining check", Box::new(confining)),
        (
            "displacement pipeline",
            Box::new(|| engine.as_ref().map_err(Clone::clone).and_then(displacement_pipeline)),
        ),
        ("normal commutator identity", Box::new(normal_commutators)),
        ("germ covering", Box::new(germ_covering)),
        ("cut-sets and leud", Box::new(cut_sets)),
        ("urs fingerprints", Box::new(urs_fingerprints)),
        ("bratteli correspondence", Box::new(bratteli_correspondence)),
        (
            "determinism",
            Box::new(|| engine.as_ref().map_err(Clone::clone).and_then(determinism)),
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} {name:<28} PASS  {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} {name:<28} FAIL  {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
