use std::sync::OnceLock;

use proptest::prelude::*;
use treelab::actions::{ball_embedding_test, germ_ball, level_schreier, orbital_ball, Embedding};
use treelab::contracting::{is_section_closed, nucleus};
use treelab::geometry::graph_growth;
use treelab::{
    complement_antichain, cylinder_relation, load_group, Antichain, Automorphism, GroupSpec, LabeledGraph, Ray,
    TreeSpec, Vertex,
};

const NAMES: [&str; 5] = ["grigorchuk", "adding_machine", "basilica", "gupta_sidki_3", "mirror"];

fn groups() -> &'static [GroupSpec] {
    static G: OnceLock<Vec<GroupSpec>> = OnceLock::new();
    G.get_or_init(|| NAMES.iter().map(|n| load_group(n).unwrap()).collect())
}

/// Product of generator letters; `(i, true)` is the inverse of generator `i`.
fn element(g: &GroupSpec, word: &[(usize, bool)]) -> Automorphism {
    let gens = g.generators();
    word.iter().fold(g.identity(), |acc, &(i, inv)| {
        let x = &gens[i % gens.len()].1;
        let x = if inv { x.invert() } else { x.clone() };
        acc.compose(&x).unwrap()
    })
}

fn word() -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..8, any::<bool>()), 0..8)
}

fn vertices(tree: &TreeSpec, depth: usize) -> Vec<Vertex> {
    (0..=depth).flat_map(|n| tree.level(n)).collect()
}

fn vertex(tree: &TreeSpec, letters: &[u8]) -> Vertex {
    let d = tree.degree_at_depth(0) as u8;
    Vertex::from_letters(letters.iter().map(|&x| (x % d) as _).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn wreath_identity(gi in 0usize..NAMES.len(), wg in word(), wh in word()) {
        let grp = &groups()[gi];
        let (g, h) = (element(grp, &wg), element(grp, &wh));
        let gh = g.compose(&h).unwrap();
        for v in vertices(grp.tree(), 6) {
            let lhs = gh.section(&v).unwrap();
            let rhs = g.section(&h.act(&v).unwrap()).unwrap().compose(&h.section(&v).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs, "v = {}", v);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn equality_matches_deep_portraits(gi in 0usize..NAMES.len(), wg in word(), wh in word()) {
        let grp = &groups()[gi];
        let (g, h) = (element(grp, &wg), element(grp, &wh));
        // depth 12 on binary trees; ternary portraits are cut where a level exceeds 2^12 vertices
        let depth = if grp.tree().degree_at_depth(0) == 2 { 12 } else { 7 };
        prop_assert_eq!(g.equals(&h).unwrap(), g.portrait(depth) == h.portrait(depth));
        prop_assert_eq!(g.equals(&h).unwrap(), g == h);
    }

    #[test]
    fn rays_commute_with_prefixes(
        gi in 0usize..NAMES.len(),
        wg in word(),
        pre in prop::collection::vec(0u8..3, 0..4),
        period in prop::collection::vec(0u8..3, 1..4),
    ) {
        let grp = &groups()[gi];
        let g = element(grp, &wg);
        let d = grp.tree().degree_at_depth(0) as u8;
        let ray = Ray::new(pre.iter().map(|&x| (x % d) as _).collect(), period.iter().map(|&x| (x % d) as _).collect()).unwrap();
        let image = g.act_ray(&ray).unwrap();
        for n in 0..=12 {
            prop_assert_eq!(image.prefix(n), g.act(&ray.prefix(n)).unwrap());
        }
    }

    #[test]
    fn activity_is_subadditive(gi in 0usize..NAMES.len(), wg in word(), wh in word()) {
        let grp = &groups()[gi];
        let (g, h) = (element(grp, &wg), element(grp, &wh));
        let gh = g.compose(&h).unwrap();
        for n in 0..=10 {
            prop_assert!(gh.activity(n) <= g.activity(n) + h.activity(n));
        }
    }

    #[test]
    fn support_cover_is_exact(gi in 0usize..NAMES.len(), wg in word(), depth in 1usize..6) {
        let grp = &groups()[gi];
        let g = element(grp, &wg);
        let s = g.support_antichain(depth);
        for w in s.cover.iter() {
            prop_assert!(!(g.act(w).unwrap() == *w && g.section(w).unwrap().is_trivial()), "{} in cover", w);
        }
        for w in s.fixed.iter() {
            prop_assert!(g.fixes_cylinder(w));
        }
    }

    #[test]
    fn complements_partition_the_tree(
        degree in 2u32..4,
        raw in prop::collection::vec(prop::collection::vec(0u8..3, 1..5), 0..6),
    ) {
        let tree = TreeSpec::regular(degree);
        let mut kept: Vec<Vertex> = Vec::new();
        for r in &raw {
            let v = vertex(&tree, r);
            if kept.iter().all(|k| k.is_independent(&v)) {
                kept.push(v);
            }
        }
        let a = Antichain::new(kept).unwrap();
        let c = complement_antichain(&a, &tree).unwrap();
        let all: Vec<&Vertex> = a.iter().chain(c.iter()).collect();
        let depth = a.max_depth().max(c.max_depth()) + 1;
        for leaf in tree.level(depth) {
            prop_assert_eq!(all.iter().filter(|v| v.is_prefix_of(&leaf)).count(), 1, "leaf {}", leaf);
        }
        for v in c.iter() {
            if let Some(p) = v.parent() {
                prop_assert!(!tree.children(&p).all(|ch| c.contains(&ch)), "full sibling family under {}", p);
            }
        }
    }

    #[test]
    fn cylinder_relation_mirrors(
        a in prop::collection::vec(0u8..2, 0..6),
        b in prop::collection::vec(0u8..2, 0..6),
    ) {
        let tree = TreeSpec::binary();
        let (v, w) = (vertex(&tree, &a), vertex(&tree, &b));
        prop_assert_eq!(
            cylinder_relation(&tree, &v, &w).unwrap(),
            cylinder_relation(&tree, &w, &v).unwrap().mirror()
        );
    }
}

fn assert_involutive(g: &LabeledGraph) {
    assert!(g.is_involutive());
    for (x, star) in g.edges.iter().enumerate() {
        for (s, y) in star.iter().enumerate() {
            if let (Some(y), Some(t)) = (y, g.label_inverse[s]) {
                assert_eq!(g.edges[*y][t], Some(x), "edge {x} -{}-> {y}", g.labels[s]);
            }
        }
    }
}

#[test]
fn action_graphs_are_involutive() {
    for grp in groups() {
        for n in 1..=5 {
            assert_involutive(&level_schreier(grp, n, 1 << 12).unwrap());
        }
        let ray = Ray::constant(1);
        assert_involutive(&orbital_ball(grp, &ray, 12).unwrap());
        let gb = germ_ball(grp, &ray, 6).unwrap();
        assert_involutive(&gb.graph);
    }
}

#[test]
fn growth_is_monotone_and_germs_dominate() {
    for (grp, ray) in [
        (&groups()[0], Ray::constant(1)),
        (&groups()[2], Ray::constant(0)),
        (&groups()[3], Ray::constant(2)),
    ] {
        let orbital = orbital_ball(grp, &ray, 16).unwrap();
        let t = graph_growth(&orbital, 8).unwrap();
        for w in t.rows.windows(2) {
            assert!(w[0].max_ball <= w[1].max_ball && w[0].min_ball <= w[1].min_ball);
        }
        let gb = germ_ball(grp, &ray, 8).unwrap();
        let germ = gb.graph.ball_sizes(0, 8);
        let orb = gb.orbital.ball_sizes(gb.orbital.base.unwrap(), 8);
        for r in 0..=8 {
            assert!(germ[r] >= orb[r], "{} at radius {r}", grp.name);
        }
    }
}

#[test]
fn embeddings_are_monotone_in_the_radius() {
    for (grp, ray) in [(&groups()[0], Ray::constant(1)), (&groups()[1], Ray::constant(0)), (&groups()[2], Ray::constant(0))] {
        let orbital = orbital_ball(grp, &ray, 12).unwrap();
        let results: Vec<Embedding> = (1..=5).map(|r| ball_embedding_test(grp, &orbital, r).unwrap()).collect();
        for (i, e) in results.iter().enumerate() {
            assert_eq!(*e, ball_embedding_test(grp, &orbital, i + 1).unwrap());
            if matches!(e, Embedding::EmbedsAt { .. }) {
                assert!(results[..i].iter().all(|x| matches!(x, Embedding::EmbedsAt { .. })));
            }
        }
    }
    // the adding machine acts freely on the orbit of 0^∞
    let grp = &groups()[1];
    let orbital = orbital_ball(grp, &Ray::constant(0), 12).unwrap();
    assert!(matches!(ball_embedding_test(grp, &orbital, 5).unwrap(), Embedding::EmbedsAt { .. }));
}

#[test]
fn nuclei_are_section_closed() {
    for grp in &groups()[..4] {
        let gens: Vec<Automorphism> = grp.generators().iter().map(|(_, a)| a.clone()).collect();
        let n = nucleus(&gens, 1000).unwrap();
        assert!(is_section_closed(&n), "{}", grp.name);
        for g in &gens {
            for s in 0..g.state_count() {
                assert!(n.contains(&g.from_state(s)), "{}: section missing", grp.name);
            }
        }
    }
}
