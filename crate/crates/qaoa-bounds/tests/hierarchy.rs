//! Hierarchy tests: replacement gadgets and splice soundness, the depth-1
//! environment census with its clause checks, monotone descent on random
//! hosts, and the refined worst-case environment bounds.

use num_rational::Ratio;
use once_cell::sync::Lazy;
use proptest::prelude::*;

use qaoa_bounds::atlas::{build_atlas, classify_edge, count_subgraphs, Atlas, BuildOptions};
use qaoa_bounds::bounds::{environment_lower_bound, lower_bound_fixed_angles, trunc4};
use qaoa_bounds::engine::Angles;
use qaoa_bounds::graph::{minimum_cycle_basis, Graph};
use qaoa_bounds::hierarchy::{
    check_clauses, enumerate_environments, make_gadget, refined_worst_case_environments,
    replace_edge, verify_hierarchy, HierarchyOptions,
};
use qaoa_bounds::named;

static ATLAS1: Lazy<Atlas> =
    Lazy::new(|| build_atlas(1, &BuildOptions::default()).expect("depth-1 atlas"));
static ATLAS2: Lazy<Atlas> =
    Lazy::new(|| build_atlas(2, &BuildOptions::default()).expect("depth-2 atlas"));

fn fixed(p: u32) -> Angles {
    Angles::fixed_cubic(p as usize).expect("reference angles")
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Number of triangles in `g`, by triple enumeration.
fn triangle_count(g: &Graph) -> usize {
    let n = g.vertex_count() as u32;
    let mut count = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            if !g.has_edge(a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if g.has_edge(a, c) && g.has_edge(b, c) {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Cycles of length `len` through edge `(a, b)`: simple paths from `a` to
/// `b` of `len - 1` edges avoiding the direct edge.
fn cycles_through(g: &Graph, a: u32, b: u32, len: usize) -> usize {
    fn dfs(g: &Graph, cur: u32, target: u32, remaining: usize, used: &mut Vec<bool>) -> usize {
        if remaining == 0 {
            return usize::from(cur == target);
        }
        let mut total = 0;
        for &nb in g.neighbors(cur) {
            if remaining == 1 && nb == target {
                total += 1;
            } else if nb != target && !used[nb as usize] {
                used[nb as usize] = true;
                total += dfs(g, nb, target, remaining - 1, used);
                used[nb as usize] = false;
            }
        }
        total
    }
    let mut used = vec![false; g.vertex_count()];
    used[a as usize] = true;
    dfs(g, a, b, len - 1, &mut used)
}

#[test]
fn gadget_shapes_and_errors() {
    let g1 = make_gadget(1).unwrap();
    assert_eq!(g1.vertex_count(), 6);
    assert_eq!(g1.edge_count(), 10);
    // Cycle-free up to length 3: splicing can only lengthen cycles.
    let basis = minimum_cycle_basis(&g1.fragment).unwrap();
    assert!(basis.iter().all(|c| c.len() >= 4), "depth-1 fragment has a short cycle");

    let g2 = make_gadget(2).unwrap();
    assert_eq!(g2.vertex_count(), 16);
    assert_eq!(g2.edge_count(), 25);
    let basis = minimum_cycle_basis(&g2.fragment).unwrap();
    assert!(basis.iter().all(|c| c.len() >= 6), "depth-2 fragment has a short cycle");

    // Attachment endpoints sit 2p+1 apart so every detour is too long.
    for (gad, p) in [(&g1, 1u32), (&g2, 2)] {
        let d = gad.fragment.bfs_distances(&[gad.attach.0]);
        assert_eq!(d[gad.attach.1 as usize], 2 * p + 1);
    }

    assert!(make_gadget(0).is_err());
    assert!(make_gadget(3).is_err());
}

#[test]
fn splice_preserves_regularity_and_kills_short_cycles() {
    // One splice into the complete graph on four vertices: ten vertices,
    // still cubic, and only the two triangles avoiding the old edge remain.
    let k4 = named::k4();
    assert_eq!(triangle_count(&k4), 4);
    let gadget = make_gadget(1).unwrap();
    let spliced = replace_edge(&k4, (0, 1), &gadget).unwrap();
    assert_eq!(spliced.vertex_count(), 10);
    assert!(spliced.is_three_regular());
    assert_eq!(triangle_count(&spliced), 2);

    // The freed endpoints are no longer adjacent and share no triangle.
    assert!(!spliced.has_edge(0, 1));

    // A depth-2 splice into a girth-5 host: every cycle of length <= 5
    // through either bond edge is gone.
    let petersen = named::petersen();
    let g2 = make_gadget(2).unwrap();
    let spliced = replace_edge(&petersen, (0, 1), &g2).unwrap();
    assert!(spliced.is_three_regular());
    assert_eq!(spliced.vertex_count(), 10 + 16);
    let off = 10u32;
    for (a, b) in [(0, g2.attach.0 + off), (1, g2.attach.1 + off)] {
        for len in 3..=5 {
            assert_eq!(
                cycles_through(&spliced, a, b, len),
                0,
                "length-{len} cycle survives through bond ({a},{b})"
            );
        }
    }

    // Splicing a girth-6 host keeps every edge tree-class at depth 2, so
    // the lower bound is unchanged.
    let heawood = named::heawood();
    let before = lower_bound_fixed_angles(&heawood, "heawood", 2, &ATLAS2, &fixed(2)).unwrap();
    let spliced = replace_edge(&heawood, (0, 1), &g2).unwrap();
    let after = lower_bound_fixed_angles(&spliced, "heawood+", 2, &ATLAS2, &fixed(2)).unwrap();
    assert_eq!(trunc4(before.lower_bound), 0.7559);
    assert_eq!(trunc4(after.lower_bound), 0.7559);
    assert!((before.lower_bound - after.lower_bound).abs() < 1e-12);

    assert!(replace_edge(&k4, (0, 5), &gadget).is_err());
}

#[test]
fn iterated_splicing_reaches_an_all_tree_host() {
    // Repeatedly replacing the worst edge of the complete graph on four
    // vertices drives it to a cycle-free classification: girth at least
    // four and every edge in the tree class, with the bound descending to
    // the tree value.
    let gadget = make_gadget(1).unwrap();
    let mut g = named::k4();
    let mut bounds = Vec::new();
    for _ in 0..40 {
        bounds.push(
            lower_bound_fixed_angles(&g, "step", 1, &ATLAS1, &fixed(1))
                .unwrap()
                .lower_bound,
        );
        let Some(edge) = worst_nontree_edge(&g, &ATLAS1) else { break };
        g = replace_edge(&g, edge, &gadget).unwrap();
    }
    assert!(g.girth().map_or(true, |c| c >= 4));
    let counts = count_subgraphs(&g, 1, &ATLAS1).unwrap();
    assert_eq!(counts.counts[0], g.edge_count() as u64, "non-tree edge survives");
    for w in bounds.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "bound increased: {} -> {}", w[0], w[1]);
    }
    let last = *bounds.last().unwrap();
    assert!((last - 0.6924).abs() < 1e-3, "final bound {last}");
}

/// The non-tree edge whose class has the smallest single ratio, if any.
fn worst_nontree_edge(g: &Graph, atlas: &Atlas) -> Option<(u32, u32)> {
    let mut worst: Option<((u32, u32), f64)> = None;
    for &e in g.edges() {
        let k = classify_edge(g, e, atlas.p, atlas).expect("classifiable host") as usize;
        if k == 0 {
            continue;
        }
        let entry = &atlas.entries[k];
        let r = entry.f_fixed / ratio_f64(entry.c_max.ratio());
        if worst.map_or(true, |(_, wr)| r < wr) {
            worst = Some((e, r));
        }
    }
    worst.map(|(e, _)| e)
}

#[test]
fn monotone_descent_on_random_hosts() {
    // Iterated replacement of the worst edge never raises the bound and
    // finishes at the tree value, across one hundred random cubic hosts.
    let gadget = make_gadget(1).unwrap();
    let mut done = 0;
    'outer: for n in [8usize, 10, 12, 14, 16, 18, 20] {
        for seed in 0..15u64 {
            let mut g = match named::random_cubic(n, 1000 * n as u64 + seed) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let mut prev = f64::INFINITY;
            for _ in 0..60 {
                let b = lower_bound_fixed_angles(&g, "step", 1, &ATLAS1, &fixed(1))
                    .unwrap()
                    .lower_bound;
                assert!(b <= prev + 1e-9, "bound rose {prev} -> {b} (n={n}, seed={seed})");
                prev = b;
                let Some(edge) = worst_nontree_edge(&g, &ATLAS1) else { break };
                g = replace_edge(&g, edge, &gadget).unwrap();
            }
            assert!((prev - 0.6924).abs() < 1e-3, "n={n} seed={seed}: stalled at {prev}");
            done += 1;
            if done >= 100 {
                break 'outer;
            }
        }
    }
    assert!(done >= 100, "only {done} descents ran");
}

#[test]
fn depth_one_census_counts_and_forced_neighbors() {
    let full = enumerate_environments(1, false, &ATLAS1).unwrap();
    assert_eq!(full.len(), 6, "full depth-1 census");
    assert_eq!(full.iter().filter(|e| e.relevant).count(), 4);

    let relevant = enumerate_environments(1, true, &ATLAS1).unwrap();
    assert_eq!(relevant.len(), 4, "relevant depth-1 census");

    // The two-triangles class admits exactly one environment, and its four
    // neighbor edges are all forced into the single-triangle class.
    let two_tri = ATLAS1
        .entries
        .iter()
        .position(|e| e.subgraph.graph.vertex_count() == 4)
        .unwrap() as u32;
    let single_tri = ATLAS1
        .entries
        .iter()
        .position(|e| {
            e.subgraph.graph.vertex_count() == 5 && e.subgraph.graph.girth() == Some(3)
        })
        .unwrap() as u32;
    let centered: Vec<_> = full.iter().filter(|e| e.center_class == two_tri).collect();
    assert_eq!(centered.len(), 1, "two-triangles environments");
    let env = centered[0];
    let neighbor_classes: Vec<u32> = env
        .assignment
        .iter()
        .filter(|(e, _)| *e != (0, 1))
        .map(|&(_, k)| k)
        .collect();
    assert_eq!(neighbor_classes.len(), 4);
    assert!(
        neighbor_classes.iter().all(|&k| k == single_tri),
        "neighbors {neighbor_classes:?} not all single-triangle"
    );

    // Depth-2 full enumeration is out of reach and says so.
    let err = enumerate_environments(2, false, &ATLAS2).unwrap_err();
    assert!(err.to_string().contains("capacity"), "got: {err}");
}

#[test]
fn census_records_satisfy_their_invariants() {
    for env in enumerate_environments(1, false, &ATLAS1).unwrap() {
        // Realizability: no basis cycle longer than 2p+1 in the host.
        let basis = minimum_cycle_basis(&env.host.graph).unwrap();
        assert!(basis.iter().all(|c| c.len() <= 3), "host needs a long basis cycle");
        // Self-consistency: stored classes match fresh classification.
        for &(e, k) in &env.assignment {
            assert_eq!(classify_edge(&env.host.graph, e, 1, &ATLAS1).unwrap(), k);
        }
        // The host is really a depth-2p neighborhood of its center.
        assert!(env.host.depth <= 2);
        assert_eq!(env.p, 1);
    }
}

#[test]
fn clause_checks_on_the_depth_one_census() {
    let gadget = make_gadget(1).unwrap();
    let angles = fixed(1);
    let relevant = enumerate_environments(1, true, &ATLAS1).unwrap();
    let reports: Vec<_> = relevant
        .iter()
        .map(|env| check_clauses(env, &gadget, &ATLAS1, &angles).unwrap())
        .collect();

    // The replacement clause holds on every relevant environment, which is
    // the full descent condition at depth 1.
    for (env, rep) in relevant.iter().zip(&reports) {
        assert!(rep.b, "replacement clause fails on center class {}", env.center_class);
        assert!(!rep.degenerate, "degenerate denominator change");
        assert!(rep.c_after > rep.c_before, "splice must add best-cut weight");
    }

    // The worked example: the record with pre-splice weight 12/5 moving to
    // 59/5. Its post-splice expectation reproduces the tabulated 8.253, and
    // the pre-splice expectation follows from its composition, which we
    // report rather than assume: the published prose calls it two
    // single-triangle edges plus one two-triangles center (sum 1.8551) but
    // the published sum 1.911 would need a tree edge in place of one
    // single-triangle (and then the weight would be 13/5, not the published
    // 12/5).
    let worked: Vec<usize> = reports
        .iter()
        .enumerate()
        .filter(|(_, r)| {
            r.c_before == Ratio::new(12, 5) && r.c_after == Ratio::new(59, 5)
        })
        .map(|(i, _)| i)
        .collect();
    assert_eq!(worked.len(), 1, "records with weights 12/5 -> 59/5: {}", worked.len());
    let rep = &reports[worked[0]];
    let env = &relevant[worked[0]];
    assert!(((rep.f_after * 1e3).trunc() / 1e3 - 8.253).abs() < 1e-12, "f' = {}", rep.f_after);

    let f = |k: usize| ATLAS1.entries[k].f_fixed;
    let mut classes: Vec<u32> = env.assignment.iter().map(|&(_, k)| k).collect();
    classes.sort_unstable();
    let prose_sum = f(2) + 2.0 * f(1);
    let published_sum = f(0) + f(1) + f(2);
    let composition = if classes == [1, 1, 2] {
        "two single-triangle edges and the two-triangles center"
    } else if classes == [0, 1, 2] {
        "a tree edge, a single-triangle edge, and the two-triangles center"
    } else {
        panic!("unexpected worked-example composition {classes:?}");
    };
    println!(
        "worked example: classes {classes:?} ({composition}); f = {:.4} \
         [prose composition sums to {prose_sum:.4}, published value 1.911 would need {published_sum:.4}]",
        rep.f
    );
    assert!(
        (rep.f - prose_sum).abs() < 2e-3 || (rep.f - published_sum).abs() < 2e-3,
        "f = {} matches neither composition",
        rep.f
    );

    // Mismatched gadget depth is rejected.
    let g2 = make_gadget(2).unwrap();
    assert!(check_clauses(&relevant[0], &g2, &ATLAS1, &angles).is_err());
}

#[test]
fn hierarchy_verification_at_depth_one() {
    let report = verify_hierarchy(1, &ATLAS1, &HierarchyOptions::default()).unwrap();
    assert_eq!(report.p, 1);
    assert_eq!(report.relevant_count, 4);
    assert_eq!(report.b_false_total, 0);
    assert_eq!(report.a_false_b_true_total, 0);
    assert_eq!(trunc4(report.bound), 0.6924);
    assert!(!report.sharded);

    // Depth 3 names the enumeration scale that rules it out.
    let err = verify_hierarchy(3, &ATLAS2, &HierarchyOptions::default()).unwrap_err();
    assert!(err.to_string().contains("913088"), "got: {err}");
}

#[test]
fn refined_environments_at_radius_zero_and_one() {
    // Radius 0 is the bare worst class. At depth 2 that is the smallest
    // single ratio in the table.
    let r0 = refined_worst_case_environments(&ATLAS2, 0).unwrap();
    assert_eq!(r0.len(), 1);
    assert_eq!(r0[0].assignment.len(), 1);
    let b0 = environment_lower_bound(&r0[0], &ATLAS2).unwrap();
    assert!((b0 - 0.4968).abs() < 1e-4, "radius-0 bound {b0}");

    // At depth 1 the tree is itself the worst single class, and all-tree
    // environments exist, so refinement cannot move the bound.
    let t0 = refined_worst_case_environments(&ATLAS1, 0).unwrap();
    assert_eq!(t0[0].center_class, 0);
    let tb0 = environment_lower_bound(&t0[0], &ATLAS1).unwrap();
    assert!((tb0 - ATLAS1.entries[0].f_fixed).abs() < 1e-12);
    let t1 = refined_worst_case_environments(&ATLAS1, 1).unwrap();
    let tb1 = environment_lower_bound(&t1[0], &ATLAS1).unwrap();
    assert!((tb1 - tb0).abs() < 1e-12, "depth-1 refinement moved: {tb0} -> {tb1}");
    assert_eq!(t1[0].assignment.len(), 5);
    assert!(t1[0].assignment.iter().all(|&(_, k)| k == 0));

    // Depth 2, radius 1: identifying the four neighbors lifts the bound
    // strictly above the bare worst class. The published text and figure
    // caption disagree on the value (0.7431 vs 0.7383); we compute our own
    // and report which one it lands on.
    let r1 = refined_worst_case_environments(&ATLAS2, 1).unwrap();
    let b1 = environment_lower_bound(&r1[0], &ATLAS2).unwrap();
    assert!(b1 > b0 + 0.1, "radius-1 bound {b1} barely moved");
    assert!(b1 < ATLAS2.entries[0].f_fixed, "radius-1 bound {b1} above tree value");
    for rec in &r1 {
        assert_eq!(rec.assignment.len(), 5);
        let b = environment_lower_bound(rec, &ATLAS2).unwrap();
        assert!(b >= b1 - 1e-12, "records out of order");
        assert!(b >= b0 - 1e-9, "an environment beats the global floor");
        for &(e, k) in &rec.assignment {
            assert_eq!(classify_edge(&rec.host.graph, e, 2, &ATLAS2).unwrap(), k);
        }
    }
    let worst_class = r0[0].center_class;
    let worst_centered_min = r1
        .iter()
        .filter(|r| r.center_class == worst_class)
        .map(|r| environment_lower_bound(r, &ATLAS2).unwrap())
        .fold(f64::INFINITY, f64::min);
    let kinds: std::collections::BTreeSet<u32> =
        r1[0].assignment.iter().map(|&(_, k)| k).collect();
    report_refined("radius 1", b1, worst_centered_min, kinds.len(), 0.7431, 0.7383);
}

/// Prints the computed refinement next to the two published candidates and
/// asserts it matches one of them. The published text and figure caption
/// disagree; the computation arbitrates.
fn report_refined(
    label: &str,
    bound: f64,
    worst_centered: f64,
    kinds: usize,
    text_value: f64,
    caption_value: f64,
) {
    let to_text = (bound - text_value).abs();
    let to_caption = (bound - caption_value).abs();
    let verdict = if to_caption < 5e-4 && to_caption <= to_text {
        "matches the figure-caption value"
    } else if to_text < 5e-4 {
        "matches the running-text value"
    } else {
        "matches neither published value"
    };
    println!(
        "refined worst-case bound, {label}: {bound:.6} (worst-centered {worst_centered:.6}, \
         {kinds} distinct classes in the minimizer); published text {text_value}, \
         caption {caption_value} -> {verdict}"
    );
    assert!(
        to_text < 5e-4 || to_caption < 5e-4,
        "{label}: computed {bound} matches neither {text_value} nor {caption_value}"
    );
}

#[test]
fn refined_environments_radius_two() {
    // One layer deeper: identify every edge with an endpoint at distance
    // at most one. Strictly tightens radius 1 and lands on one of the two
    // published candidates (0.7461 in the text, 0.7423 in the caption).
    let r1 = refined_worst_case_environments(&ATLAS2, 1).unwrap();
    let b1 = environment_lower_bound(&r1[0], &ATLAS2).unwrap();
    let r2 = refined_worst_case_environments(&ATLAS2, 2).unwrap();
    let b2 = environment_lower_bound(&r2[0], &ATLAS2).unwrap();
    assert!(b2 >= b1 - 1e-12, "radius 2 loosened the bound: {b1} -> {b2}");
    for rec in &r2 {
        assert!(rec.assignment.len() <= 14);
        assert!(rec.assignment.len() >= 5);
    }
    let worst_class = refined_worst_case_environments(&ATLAS2, 0).unwrap()[0].center_class;
    let worst_centered_min = r2
        .iter()
        .filter(|r| r.center_class == worst_class)
        .map(|r| environment_lower_bound(r, &ATLAS2).unwrap())
        .fold(f64::INFINITY, f64::min);
    let kinds: std::collections::BTreeSet<u32> =
        r2[0].assignment.iter().map(|&(_, k)| k).collect();
    report_refined("radius 2", b2, worst_centered_min, kinds.len(), 0.7461, 0.7423);

    // Radius 3 would need hosts completed two layers out: out of reach.
    assert!(refined_worst_case_environments(&ATLAS2, 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The depth-1 worst-case theorem in property form: every 3-regular
    /// graph's census bound is at least the tree value.
    #[test]
    fn prop_every_cubic_graph_beats_the_tree_bound(
        n in 4usize..13, seed in 0u64..10_000
    ) {
        let Ok(g) = named::random_cubic(2 * n, seed) else { return Ok(()) };
        let report = lower_bound_fixed_angles(&g, "sample", 1, &ATLAS1, &fixed(1)).unwrap();
        prop_assert!(report.lower_bound >= 0.6924 - 1e-3,
            "bound {} under tree value", report.lower_bound);
        prop_assert!(report.lower_bound <= 1.0 + 1e-12);
    }

    /// Classification is invariant under relabeling the host.
    #[test]
    fn prop_classification_is_relabel_invariant(
        n in 4usize..10, seed in 0u64..10_000, perm_seed in 0u64..10_000
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let Ok(g) = named::random_cubic(2 * n, seed) else { return Ok(()) };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed);
        let mut perm: Vec<u32> = (0..g.vertex_count() as u32).collect();
        perm.shuffle(&mut rng);
        let edges: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .map(|&(a, b)| (perm[a as usize], perm[b as usize]))
            .collect();
        let h = Graph::new(g.vertex_count(), edges).unwrap();
        let &(a, b) = g.edges().first().unwrap();
        let before = classify_edge(&g, (a, b), 1, &ATLAS1).unwrap();
        let (x, y) = (perm[a as usize], perm[b as usize]);
        let after = classify_edge(&h, (x.min(y), x.max(y)), 1, &ATLAS1).unwrap();
        prop_assert_eq!(before, after);
    }
}
