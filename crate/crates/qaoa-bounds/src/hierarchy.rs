//! Graph environments and the edge-replacement hierarchy.
//!
//! An environment is a host neighborhood of depth `2p` around a center edge
//! together with the class assignments that replacing the center edge
//! touches. Splicing a girth-raising fragment in place of the edge destroys
//! every short cycle through it; the bookkeeping inequalities checked here
//! show the spliced graph's lower bound never exceeds the original's, so
//! repeated splicing descends to cycle-free hosts, pinning the all-tree
//! value as the worst case.
//!
//! Environments are enumerated per center class by growing the class
//! outward ("germs"): stage one completes every boundary vertex of the
//! class, which pins all short center cycles and their visibility; stage
//! two completes the vertices that the classification of touched edges can
//! see. Everything a record claims is then re-derived mechanically on the
//! grown host: touched edges are reclassified before and after the splice,
//! and every untouched edge is checked to keep its view.

use crate::atlas::{classify_edge, complete_rec, tree_neighborhood, Atlas, Partial};
use crate::canon::{canonical_form, canonical_key, CanonicalKey};
use crate::engine::{edge_expectation, Angles};
use crate::error::{Error, Result};
use crate::graph::{
    cycles_through_edge, neighborhood_subgraph, parse_graph, serialize_graph, short_cycles_span,
    Graph, RootedSubgraph,
};
use crate::{named, sym};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

/// Additive slack for floating-point comparisons between expectation sums.
const CLAUSE_TOL: f64 = 1e-9;

/// A girth-raising replacement fragment: splicing it in place of an edge
/// removes every short cycle through that edge.
#[derive(Clone, Debug)]
pub struct ReplacementGadget {
    /// Depth whose short cycles (length `<= 2p+1`) the splice removes.
    pub p: u32,
    /// The inserted fragment on its own vertex ids `0..n`.
    pub fragment: Graph,
    /// Fragment vertices that bond to the two freed host endpoints.
    pub attach: (u32, u32),
}

impl ReplacementGadget {
    /// Vertices the splice adds to the host.
    pub fn vertex_count(&self) -> usize {
        self.fragment.vertex_count()
    }

    /// Edges the splice adds: the fragment's own plus the two bonds.
    pub fn edge_count(&self) -> usize {
        self.fragment.edge_count() + 2
    }
}

/// Builds the replacement fragment for depth `p`: a cubic graph of girth
/// `2p+2` with one edge removed, bonding through the freed endpoints. Those
/// endpoints sit `2p+1` apart inside the fragment, so after a splice every
/// path through the replaced region is too long to close a cycle of length
/// `<= 2p+1`.
pub fn make_gadget(p: u32) -> Result<ReplacementGadget> {
    let (donor, cut): (Graph, (u32, u32)) = match p {
        0 => return Err(Error::invalid("depth must be at least 1")),
        1 => (named::k33(), (0, 3)),
        2 => (named::moebius_kantor(), (0, 1)),
        _ => {
            return Err(Error::capacity(format!(
                "no replacement fragment catalogued for depth {p}"
            )))
        }
    };
    let cut = (cut.0.min(cut.1), cut.0.max(cut.1));
    let edges: Vec<(u32, u32)> = donor
        .edges()
        .iter()
        .copied()
        .filter(|&e| e != cut)
        .collect();
    let fragment = Graph::new(donor.vertex_count(), edges)?;
    let d = fragment.bfs_distances(&[cut.0]);
    if d[cut.1 as usize] != 2 * p + 1 {
        return Err(Error::integrity(
            "freed fragment endpoints are not 2p+1 apart",
        ));
    }
    Ok(ReplacementGadget {
        p,
        fragment,
        attach: cut,
    })
}

/// Splices `gadget` in place of edge `e` of `g`: removes `e`, appends the
/// fragment (vertex ids offset by `g.vertex_count()`), and bonds the
/// fragment's attachment points to the freed endpoints. All other vertex
/// ids and edges of `g` are preserved.
pub fn replace_edge(g: &Graph, e: (u32, u32), gadget: &ReplacementGadget) -> Result<Graph> {
    let (u, v) = (e.0.min(e.1), e.0.max(e.1));
    if !g.has_edge(u, v) {
        return Err(Error::invalid(format!("edge ({u},{v}) not in graph")));
    }
    let off = g.vertex_count() as u32;
    let mut edges: Vec<(u32, u32)> = g
        .edges()
        .iter()
        .copied()
        .filter(|&ab| ab != (u, v))
        .collect();
    edges.extend(
        gadget
            .fragment
            .edges()
            .iter()
            .map(|&(a, b)| (a + off, b + off)),
    );
    edges.push((u, gadget.attach.0 + off));
    edges.push((v, gadget.attach.1 + off));
    Graph::new(g.vertex_count() + gadget.fragment.vertex_count(), edges)
}

/// One graph environment: an exemplar host of depth `2p` rooted at the
/// center edge, plus the class assignments the record constrains.
#[derive(Clone, Debug)]
pub struct EnvironmentRecord {
    /// Depth of the classes being assigned.
    pub p: u32,
    /// Atlas position of the center edge's own class.
    pub center_class: u32,
    /// Exemplar host realizing the record, rooted at the center edge.
    pub host: RootedSubgraph,
    /// Assigned edges (host labels, `(0,1)` always present) with their
    /// atlas positions.
    pub assignment: Vec<((u32, u32), u32)>,
    /// Whether the record belongs to the relevant census: it constrains
    /// exactly the edges the replacement touches.
    pub relevant: bool,
    /// Census identity: canonical form of the assigned substructure.
    pub key: CanonicalKey,
}

/// Outcome of the descent inequalities for one environment.
#[derive(Clone, Debug)]
pub struct ClauseReport {
    /// Expectation sum over the replaced-plus-modified edges, before.
    pub f: f64,
    /// Exact local max-cut sum over the same edges, before.
    pub c_before: Ratio<i64>,
    /// Expectation sum after the splice: surviving modified edges plus all
    /// spliced edges.
    pub f_after: f64,
    /// Exact local max-cut sum after.
    pub c_after: Ratio<i64>,
    /// Edge-choice clause: the local ratio `f/c` is at least the all-tree
    /// ratio, so removing these edges from the count cannot raise the bound.
    pub a: bool,
    /// Replacement clause in cross-multiplied form: `f * c' >= f' * c`.
    pub b: bool,
    /// Descent clause at the boundary instantiation of the untouched
    /// remainder; coincides with the replacement clause.
    pub c: bool,
    /// The splice left the local max-cut sum unchanged (`c' == c`), where
    /// the fraction form of the replacement clause degenerates and only the
    /// cross-multiplied form applies.
    pub degenerate: bool,
    /// Edges the record assigns whose class the splice did not actually
    /// change (tolerated; zero for relevant-census records).
    pub unchanged_assigned: usize,
}

/// Per-class tallies from an environment census.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassCensus {
    /// Atlas position of the center class.
    pub class: u32,
    /// Distinct environment records.
    pub records: u64,
    /// Completed candidate hosts examined (before record dedup).
    pub germs: u64,
    /// Records whose replacement clause failed on some host.
    pub b_false: u64,
    /// Records violating the edge-choice clause while passing replacement.
    pub a_false_b_true: u64,
    /// Records where the splice left the local max-cut sum unchanged.
    pub degenerate: u64,
}

/// Aggregate outcome of a hierarchy verification run.
#[derive(Clone, Debug)]
pub struct HierarchyReport {
    /// Depth verified.
    pub p: u32,
    /// Distinct relevant environment records across processed classes.
    pub relevant_count: u64,
    /// The all-tree center-edge expectation at the angles used; the
    /// worst-case value the descent terminates at.
    pub bound: f64,
    /// Per-class tallies in atlas order (processed classes only when
    /// sharded).
    pub census: Vec<ClassCensus>,
    /// Total records whose replacement clause failed somewhere.
    pub b_false_total: u64,
    /// Total records violating the edge-choice/replacement implication.
    pub a_false_b_true_total: u64,
    /// Whether this run covered only a shard of the classes.
    pub sharded: bool,
}

/// Controls for [`verify_hierarchy`].
#[derive(Clone, Debug, Default)]
pub struct HierarchyOptions {
    /// Angles to evaluate expectations at; the reference fixed angles for
    /// the depth when absent.
    pub angles: Option<Angles>,
    /// Directory for per-class checkpoint files.
    pub checkpoint_dir: Option<PathBuf>,
    /// Reuse matching checkpoints instead of recomputing their classes.
    pub resume: bool,
    /// Process only classes with `index % shard.1 == shard.0`.
    pub shard: Option<(u32, u32)>,
    /// Print per-class progress to stderr.
    pub progress: bool,
}

/// Shared per-run data for clause evaluation.
struct ClauseCtx<'a> {
    p: u32,
    atlas: &'a Atlas,
    gadget: &'a ReplacementGadget,
    f_by_class: Vec<f64>,
    c_by_class: Vec<Ratio<i64>>,
    tree_ratio: f64,
}

fn ratio_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn angles_match(a: &Angles, b: &Angles) -> bool {
    let (x, y) = (a.canonicalized().to_stacked(), b.canonicalized().to_stacked());
    x.len() == y.len() && x.iter().zip(&y).all(|(p, q)| (p - q).abs() <= 1e-12)
}

fn clause_ctx<'a>(
    p: u32,
    atlas: &'a Atlas,
    gadget: &'a ReplacementGadget,
    angles: &Angles,
) -> Result<ClauseCtx<'a>> {
    if atlas.p != p {
        return Err(Error::invalid(format!(
            "atlas depth {} does not match requested depth {p}",
            atlas.p
        )));
    }
    if angles.p() != p as usize {
        return Err(Error::invalid(format!(
            "angles have {} layers, expected {p}",
            angles.p()
        )));
    }
    let reuse = optimize::canonical_cubic_angles(p as usize)
        .map(|fx| angles_match(&fx, angles))
        .unwrap_or(false);
    let mut f_by_class = Vec::with_capacity(atlas.entries.len());
    let mut c_by_class = Vec::with_capacity(atlas.entries.len());
    for entry in &atlas.entries {
        let f = if reuse {
            entry.f_fixed
        } else {
            edge_expectation(&entry.subgraph, angles)?
        };
        f_by_class.push(f);
        c_by_class.push(entry.c_max.ratio());
    }
    let tree_key = canonical_key(&tree_neighborhood(p)?);
    let tree_idx = atlas
        .position_of(&tree_key)
        .ok_or_else(|| Error::integrity("atlas lacks the tree class"))? as usize;
    if c_by_class[tree_idx] != Ratio::new(1, 1) {
        return Err(Error::integrity("tree class max-cut ratio is not 1"));
    }
    Ok(ClauseCtx {
        p,
        atlas,
        gadget,
        tree_ratio: f_by_class[tree_idx],
        f_by_class,
        c_by_class,
    })
}

/// Candidate touched edges of the host: the center edge plus every
/// class-body edge that sees a full short center cycle. An edge sees a
/// cycle when every cycle edge has an endpoint within distance `p-1` of it;
/// exactly then the whole cycle lies inside the edge's depth-`p` view, and
/// destroying the cycle changes the view. Edges outside the class body
/// (both endpoints at distance `>= p`) never see the center edge itself and
/// are excluded outright.
fn candidate_modified(g: &Graph, dist: &[u32], p: u32) -> Vec<(u32, u32)> {
    let center = (0u32, 1u32);
    let mut out = vec![center];
    let cycles = cycles_through_edge(g, center, (2 * p + 1) as usize);
    if cycles.is_empty() {
        return out;
    }
    let cycle_edges: Vec<Vec<(u32, u32)>> = cycles
        .iter()
        .map(|c| {
            (0..c.len())
                .map(|i| {
                    let (a, b) = (c[i], c[(i + 1) % c.len()]);
                    (a.min(b), a.max(b))
                })
                .collect()
        })
        .collect();
    for &(a, b) in g.edges() {
        if (a, b) == center || dist[a as usize].min(dist[b as usize]) >= p {
            continue;
        }
        let de = g.bfs_distances(&[a, b]);
        let sees = cycle_edges.iter().any(|ce| {
            ce.iter()
                .all(|&(x, y)| de[x as usize] < p || de[y as usize] < p)
        });
        if sees {
            out.push((a, b));
        }
    }
    out
}

/// Census identity of a record: canonical form of the assigned
/// substructure alone, with distances to the host center as vertex colors
/// and `class * 2 + is_center` as edge labels. Hosts agreeing on everything
/// a record pins share a key regardless of surrounding completions.
fn record_key(dist: &[u32], assignment: &[((u32, u32), u32)]) -> CanonicalKey {
    let mut ids: Vec<u32> = assignment
        .iter()
        .flat_map(|&((a, b), _)| [a, b])
        .collect();
    ids.sort_unstable();
    ids.dedup();
    let relabel: HashMap<u32, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let edges: Vec<(u32, u32)> = assignment
        .iter()
        .map(|&((a, b), _)| {
            let (x, y) = (relabel[&a], relabel[&b]);
            (x.min(y), x.max(y))
        })
        .collect();
    let vcolors: Vec<u32> = ids.iter().map(|&v| dist[v as usize]).collect();
    let elabels: Vec<u32> = assignment
        .iter()
        .map(|&(e, k)| k * 2 + u32::from(e == (0, 1)))
        .collect();
    CanonicalKey::from_bytes(canonical_form(ids.len(), &edges, &vcolors, Some(&elabels)))
}

/// Everything re-derived from one completed host.
struct GermAnalysis {
    key: CanonicalKey,
    assignment: Vec<((u32, u32), u32)>,
    report: ClauseReport,
}

/// Re-derives a host's record from scratch: classifies candidate touched
/// edges before and after the splice, keeps exactly those that truly
/// change, sums the clause quantities, and mechanically verifies that every
/// other class-body edge keeps its view. Edges with both endpoints at
/// distance `>= p` need no check: a path from such an edge into the spliced
/// region costs more than `p` steps, so its view cannot reach the change.
fn analyze_germ(g: &Graph, ctx: &ClauseCtx) -> Result<GermAnalysis> {
    let p = ctx.p;
    let dist = g.bfs_distances(&[0, 1]);
    let spliced = replace_edge(g, (0, 1), ctx.gadget)?;
    let off = g.vertex_count() as u32;

    let mut assignment = Vec::new();
    let mut unchanged_assigned = 0usize;
    let mut changed_after: Vec<u32> = Vec::new();
    for &e in &candidate_modified(g, &dist, p) {
        let before = classify_edge(g, e, p, ctx.atlas)?;
        if e == (0, 1) {
            assignment.push((e, before));
            continue;
        }
        let after = classify_edge(&spliced, e, p, ctx.atlas)?;
        if after == before {
            unchanged_assigned += 1;
        } else {
            assignment.push((e, before));
            changed_after.push(after);
        }
    }
    let key = record_key(&dist, &assignment);

    let mut f = 0.0;
    let mut c = Ratio::new(0, 1);
    for &(_, k) in &assignment {
        f += ctx.f_by_class[k as usize];
        c += ctx.c_by_class[k as usize];
    }
    let mut f_after = 0.0;
    let mut c_after = Ratio::new(0, 1);
    for &k in &changed_after {
        f_after += ctx.f_by_class[k as usize];
        c_after += ctx.c_by_class[k as usize];
    }
    for &(a, b) in spliced.edges() {
        if a >= off || b >= off {
            let k = classify_edge(&spliced, (a, b), p, ctx.atlas)?;
            f_after += ctx.f_by_class[k as usize];
            c_after += ctx.c_by_class[k as usize];
        }
    }

    let assigned: HashSet<(u32, u32)> = assignment.iter().map(|&(e, _)| e).collect();
    for &(a, b) in g.edges() {
        if assigned.contains(&(a, b)) || dist[a as usize].min(dist[b as usize]) >= p {
            continue;
        }
        let before = canonical_key(&neighborhood_subgraph(g, (a, b), p)?);
        let after = canonical_key(&neighborhood_subgraph(&spliced, (a, b), p)?);
        if before != after {
            return Err(Error::integrity(format!(
                "edge ({a},{b}) outside the touched set changed its view under replacement"
            )));
        }
    }

    let ratio_before = f / ratio_f64(c);
    let a_clause = ratio_before >= ctx.tree_ratio - CLAUSE_TOL;
    let b_clause = f * ratio_f64(c_after) >= f_after * ratio_f64(c) - CLAUSE_TOL;
    Ok(GermAnalysis {
        key,
        assignment,
        report: ClauseReport {
            f,
            c_before: c,
            f_after,
            c_after,
            a: a_clause,
            b: b_clause,
            c: b_clause,
            degenerate: c_after == c,
            unchanged_assigned,
        },
    })
}

/// Checks the descent inequalities for one environment record against its
/// own host: recomputes the touched set and classes from scratch, verifies
/// the record's assignment agrees (extra assigned-but-untouched edges are
/// tolerated and counted), and evaluates the clauses at `angles`.
pub fn check_clauses(
    env: &EnvironmentRecord,
    gadget: &ReplacementGadget,
    atlas: &Atlas,
    angles: &Angles,
) -> Result<ClauseReport> {
    if gadget.p != env.p {
        return Err(Error::invalid("gadget depth does not match record depth"));
    }
    let ctx = clause_ctx(env.p, atlas, gadget, angles)?;
    let analysis = analyze_germ(&env.host.graph, &ctx)?;
    let stored: HashMap<(u32, u32), u32> = env.assignment.iter().copied().collect();
    for &(e, k) in &analysis.assignment {
        match stored.get(&e) {
            Some(&sk) if sk == k => {}
            Some(_) => {
                return Err(Error::integrity(format!(
                    "record assigns a different class to edge ({},{})",
                    e.0, e.1
                )))
            }
            None => {
                return Err(Error::integrity(format!(
                    "replacement touches edge ({},{}) that the record leaves free",
                    e.0, e.1
                )))
            }
        }
    }
    let mut report = analysis.report;
    report.unchanged_assigned = env.assignment.len() - analysis.assignment.len();
    Ok(report)
}

fn graph_of(state: &Partial) -> Result<Graph> {
    Graph::new(state.n, state.edges.clone())
}

fn germ_closed(state: &Partial) -> bool {
    (0..state.n as u32).all(|v| state.degree(v) == 3)
}

/// Builds all two-element-or-smaller subsets of `others` for shared
/// boundary children.
fn attachment_subsets(others: &[u32]) -> Vec<Vec<u32>> {
    let mut subsets: Vec<Vec<u32>> = vec![vec![]];
    for &w in others {
        let mut more = Vec::new();
        for s in &subsets {
            if s.len() < 2 {
                let mut t = s.clone();
                t.push(w);
                more.push(t);
            }
        }
        subsets.extend(more);
    }
    subsets
}

/// Stage one: complete every deficient distance-`p` vertex, one slot at a
/// time, via an edge inside the layer or a fresh child at distance `p+1`
/// shared by up to two other deficient layer vertices. At depth 1 a move
/// that seals every vertex to degree 3 is skipped: such a host is a
/// complete cubic graph of its own rather than an open environment (the
/// lone closure this drops is the complete graph on four vertices).
fn stage1(
    state: Partial,
    p: u32,
    seen: &mut HashSet<Vec<u8>>,
    sink: &mut dyn FnMut(Graph) -> Result<()>,
) -> Result<()> {
    let target = (0..state.n as u32)
        .find(|&v| state.dist[v as usize] == p && state.degree(v) < 3);
    let Some(v) = target else {
        let targets = stage2_targets(&state, p)?;
        return stage2(state, p, &targets, seen, sink);
    };
    let partners: Vec<u32> = (0..state.n as u32)
        .filter(|&w| {
            w != v
                && state.dist[w as usize] == p
                && state.degree(w) < 3
                && !state.adjacent(v, w)
        })
        .collect();
    for &w in &partners {
        let mut next = state.clone();
        next.add_edge(v, w);
        if p == 1 && germ_closed(&next) {
            continue;
        }
        if seen.insert(next.key()) {
            stage1(next, p, seen, sink)?;
        }
    }
    for set in attachment_subsets(&partners) {
        let mut next = state.clone();
        let x = next.add_vertex(p + 1);
        next.add_edge(v, x);
        for &w in &set {
            next.add_edge(w, x);
        }
        if p == 1 && germ_closed(&next) {
            continue;
        }
        if seen.insert(next.key()) {
            stage1(next, p, seen, sink)?;
        }
    }
    Ok(())
}

/// Vertices whose completion the classification of touched edges can see:
/// deficient vertices within distance `p-1` of a touched edge's endpoint.
/// Stage one already completed all layers through `p`, so these sit at
/// distance `p+1`; later moves only reach farther out, so the set is stable
/// through stage two.
fn stage2_targets(state: &Partial, p: u32) -> Result<Vec<u32>> {
    let g = graph_of(state)?;
    let dist = g.bfs_distances(&[0, 1]);
    let modified = candidate_modified(&g, &dist, p);
    let mut endpoints: Vec<u32> = modified.iter().flat_map(|&(a, b)| [a, b]).collect();
    endpoints.sort_unstable();
    endpoints.dedup();
    let near = g.bfs_distances(&endpoints);
    Ok((0..state.n as u32)
        .filter(|&v| near[v as usize] < p && state.degree(v) < 3)
        .collect())
}

/// Stage two: complete the stage-two targets via an edge to any deficient
/// vertex of the open layer or a fresh child at distance `p+2` shared by up
/// to two other targets. Hosts whose cycle space needs a basis cycle longer
/// than `2p+1` are discarded at the end: no host realizes such a
/// neighborhood.
fn stage2(
    state: Partial,
    p: u32,
    targets: &[u32],
    seen: &mut HashSet<Vec<u8>>,
    sink: &mut dyn FnMut(Graph) -> Result<()>,
) -> Result<()> {
    let target = targets.iter().copied().find(|&v| state.degree(v) < 3);
    let Some(v) = target else {
        let g = graph_of(&state)?;
        if !short_cycles_span(&g, (2 * p + 1) as usize) {
            return Ok(());
        }
        return sink(g);
    };
    let partners: Vec<u32> = (0..state.n as u32)
        .filter(|&w| {
            w != v
                && state.dist[w as usize] == p + 1
                && state.degree(w) < 3
                && !state.adjacent(v, w)
        })
        .collect();
    for &w in &partners {
        let mut next = state.clone();
        next.add_edge(v, w);
        if seen.insert(next.key()) {
            stage2(next, p, targets, seen, sink)?;
        }
    }
    let other_targets: Vec<u32> = targets
        .iter()
        .copied()
        .filter(|&w| w != v && state.degree(w) < 3)
        .collect();
    for set in attachment_subsets(&other_targets) {
        let mut next = state.clone();
        let x = next.add_vertex(p + 2);
        next.add_edge(v, x);
        for &w in &set {
            next.add_edge(w, x);
        }
        if seen.insert(next.key()) {
            stage2(next, p, targets, seen, sink)?;
        }
    }
    Ok(())
}

/// Runs `sink` on every completed candidate host of `class`.
fn for_each_germ(
    class: &RootedSubgraph,
    p: u32,
    sink: &mut dyn FnMut(Graph) -> Result<()>,
) -> Result<()> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    stage1(Partial::from_subgraph(class), p, &mut seen, sink)
}

/// Accumulated state of one record across the hosts that realize it.
struct RecordAccum {
    exemplar: Graph,
    assignment: Vec<((u32, u32), u32)>,
    f: f64,
    c: Ratio<i64>,
    f_after: f64,
    c_after: Ratio<i64>,
    f_after_min: f64,
    f_after_max: f64,
    c_after_consistent: bool,
    a: bool,
    b_all: bool,
    degenerate_any: bool,
    germs: u64,
}

/// Serialized form of a record inside a checkpoint file.
#[derive(Clone, Serialize, Deserialize)]
struct StoredRecord {
    key: String,
    host: String,
    assignment: Vec<(u32, u32, u32)>,
    f: f64,
    c: (i64, i64),
    f_after: f64,
    c_after: (i64, i64),
    f_after_min: f64,
    f_after_max: f64,
    c_after_consistent: bool,
    a: bool,
    b: bool,
    degenerate: bool,
    germs: u64,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format_version: u32,
    p: u32,
    class: u32,
    class_key: String,
    germs: u64,
    records: Vec<StoredRecord>,
}

const CHECKPOINT_VERSION: u32 = 1;

struct ClassOutcome {
    census: ClassCensus,
    records: Vec<StoredRecord>,
}

fn accumulate(
    records: &mut HashMap<CanonicalKey, RecordAccum>,
    order: &mut Vec<CanonicalKey>,
    g: Graph,
    analysis: GermAnalysis,
) -> Result<()> {
    let GermAnalysis {
        key,
        assignment,
        report,
    } = analysis;
    match records.entry(key.clone()) {
        std::collections::hash_map::Entry::Vacant(slot) => {
            order.push(key);
            slot.insert(RecordAccum {
                exemplar: g,
                assignment,
                f: report.f,
                c: report.c_before,
                f_after: report.f_after,
                c_after: report.c_after,
                f_after_min: report.f_after,
                f_after_max: report.f_after,
                c_after_consistent: true,
                a: report.a,
                b_all: report.b,
                degenerate_any: report.degenerate,
                germs: 1,
            });
        }
        std::collections::hash_map::Entry::Occupied(mut slot) => {
            let acc = slot.get_mut();
            if (acc.f - report.f).abs() > CLAUSE_TOL || acc.c != report.c_before {
                return Err(Error::integrity(
                    "hosts sharing a record disagree on its pre-splice sums",
                ));
            }
            acc.f_after_min = acc.f_after_min.min(report.f_after);
            acc.f_after_max = acc.f_after_max.max(report.f_after);
            if acc.c_after != report.c_after {
                acc.c_after_consistent = false;
            }
            acc.b_all &= report.b;
            acc.degenerate_any |= report.degenerate;
            acc.germs += 1;
        }
    }
    Ok(())
}

fn class_outcome(
    class_index: u32,
    records: HashMap<CanonicalKey, RecordAccum>,
    order: Vec<CanonicalKey>,
    germs: u64,
) -> ClassOutcome {
    let mut stored = Vec::with_capacity(order.len());
    let mut census = ClassCensus {
        class: class_index,
        records: order.len() as u64,
        germs,
        b_false: 0,
        a_false_b_true: 0,
        degenerate: 0,
    };
    let mut records = records;
    for key in order {
        let acc = records.remove(&key).expect("record for ordered key");
        if !acc.b_all {
            census.b_false += 1;
        }
        if !acc.a && acc.b_all {
            census.a_false_b_true += 1;
        }
        if acc.degenerate_any {
            census.degenerate += 1;
        }
        stored.push(StoredRecord {
            key: key.to_hex(),
            host: serialize_graph(&acc.exemplar),
            assignment: acc
                .assignment
                .iter()
                .map(|&((a, b), k)| (a, b, k))
                .collect(),
            f: acc.f,
            c: (*acc.c.numer(), *acc.c.denom()),
            f_after: acc.f_after,
            c_after: (*acc.c_after.numer(), *acc.c_after.denom()),
            f_after_min: acc.f_after_min,
            f_after_max: acc.f_after_max,
            c_after_consistent: acc.c_after_consistent,
            a: acc.a,
            b: acc.b_all,
            degenerate: acc.degenerate_any,
            germs: acc.germs,
        });
    }
    ClassOutcome {
        census,
        records: stored,
    }
}

/// Census of one center class: every environment record it can sit in,
/// with clause outcomes checked on every host (not just one exemplar per
/// record). Classes with no short center cycle take a shortcut: replacing
/// their center touches nothing else, so every completion collapses to the
/// single bare record, checked directly on the class graph.
fn census_for_class(
    class_index: u32,
    class: &RootedSubgraph,
    ctx: &ClauseCtx,
) -> Result<ClassOutcome> {
    let p = ctx.p;
    let mut records: HashMap<CanonicalKey, RecordAccum> = HashMap::new();
    let mut order: Vec<CanonicalKey> = Vec::new();
    let mut germs = 0u64;
    let center_cycles =
        cycles_through_edge(&class.graph, (0, 1), (2 * p + 1) as usize);
    if center_cycles.is_empty() {
        let g = class.graph.clone();
        let analysis = analyze_germ(&g, ctx)?;
        germs = 1;
        accumulate(&mut records, &mut order, g, analysis)?;
    } else {
        for_each_germ(class, p, &mut |g| {
            let analysis = analyze_germ(&g, ctx)?;
            germs += 1;
            accumulate(&mut records, &mut order, g, analysis)
        })?;
    }
    Ok(class_outcome(class_index, records, order, germs))
}

fn checkpoint_path(dir: &PathBuf, p: u32, class_index: u32) -> PathBuf {
    dir.join(format!("census-p{p}-class{class_index:04}.json"))
}

fn load_checkpoint(
    path: &PathBuf,
    p: u32,
    class_index: u32,
    class_key: &str,
) -> Option<ClassOutcome> {
    let text = fs::read_to_string(path).ok()?;
    let cp: Checkpoint = serde_json::from_str(&text).ok()?;
    if cp.format_version != CHECKPOINT_VERSION
        || cp.p != p
        || cp.class != class_index
        || cp.class_key != class_key
    {
        return None;
    }
    let mut census = ClassCensus {
        class: class_index,
        records: cp.records.len() as u64,
        germs: cp.germs,
        b_false: 0,
        a_false_b_true: 0,
        degenerate: 0,
    };
    for r in &cp.records {
        if !r.b {
            census.b_false += 1;
        }
        if !r.a && r.b {
            census.a_false_b_true += 1;
        }
        if r.degenerate {
            census.degenerate += 1;
        }
    }
    Some(ClassOutcome {
        census,
        records: cp.records,
    })
}

fn write_checkpoint(
    path: &PathBuf,
    p: u32,
    class_index: u32,
    class_key: &str,
    outcome: &ClassOutcome,
) -> Result<()> {
    let cp = Checkpoint {
        format_version: CHECKPOINT_VERSION,
        p,
        class: class_index,
        class_key: class_key.to_string(),
        germs: outcome.census.germs,
        records: outcome.records.clone(),
    };
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, serde_json::to_string_pretty(&cp)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn depth_supported(p: u32) -> Result<()> {
    match p {
        1 | 2 => Ok(()),
        0 => Err(Error::invalid("depth must be at least 1")),
        3 => Err(Error::capacity(
            "the depth-3 census is out of reach here: 913088 neighborhood classes \
             and a far larger number of environments",
        )),
        _ => Err(Error::capacity(format!(
            "no environment census available for depth {p}"
        ))),
    }
}

/// Enumerates every graph environment record for depth `p`.
///
/// With `relevant_only` the census is restricted to what the replacement
/// procedure touches, collapsing environments that agree there; this is the
/// census the hierarchy argument checks. Without it every class-body edge
/// is assigned, which is only tractable at depth 1; the depth-2 full census
/// is combinatorially out of reach (beyond 10^10 environments).
pub fn enumerate_environments(
    p: u32,
    relevant_only: bool,
    atlas: &Atlas,
) -> Result<Vec<EnvironmentRecord>> {
    depth_supported(p)?;
    if !relevant_only && p != 1 {
        return Err(Error::capacity(
            "the full environment census is only tractable at depth 1; \
             deeper censuses exceed 10^10 environments",
        ));
    }
    let gadget = make_gadget(p)?;
    let angles = optimize::canonical_cubic_angles(p as usize)?;
    let ctx = clause_ctx(p, atlas, &gadget, &angles)?;
    let mut out = Vec::new();
    for (idx, entry) in atlas.entries.iter().enumerate() {
        let mut seen: HashSet<CanonicalKey> = HashSet::new();
        let mut handle = |g: Graph| -> Result<()> {
            let analysis = analyze_germ(&g, &ctx)?;
            let (key, assignment, relevant) = if relevant_only {
                let relevant = true;
                (analysis.key, analysis.assignment, relevant)
            } else {
                let dist = g.bfs_distances(&[0, 1]);
                let mut full = Vec::new();
                for &(a, b) in g.edges() {
                    if (a, b) == (0, 1) || dist[a as usize].min(dist[b as usize]) < p {
                        full.push(((a, b), classify_edge(&g, (a, b), p, ctx.atlas)?));
                    }
                }
                let key = record_key(&dist, &full);
                let relevant = analysis.assignment.len() > 1;
                (key, full, relevant)
            };
            if seen.insert(key.clone()) {
                out.push(EnvironmentRecord {
                    p,
                    center_class: idx as u32,
                    host: RootedSubgraph::new(g, 2 * p)?,
                    assignment,
                    relevant,
                    key,
                });
            }
            Ok(())
        };
        let center_cycles =
            cycles_through_edge(&entry.subgraph.graph, (0, 1), (2 * p + 1) as usize);
        if center_cycles.is_empty() && relevant_only {
            handle(entry.subgraph.graph.clone())?;
        } else {
            for_each_germ(&entry.subgraph, p, &mut handle)?;
        }
    }
    Ok(out)
}

/// Reconstructs the worst-case graph environments at a given identification
/// radius, returning their records sorted by refined bound, smallest first.
///
/// The atlas's worst entry (smallest single-class ratio `f/c`) is a valid
/// whole-graph lower bound on its own, but usually a loose one: no host
/// consists of that class alone, and every edge forced to another class
/// raises the ratio. Each radius step tightens the bound by pinning more of
/// a low-ratio edge's surroundings. Radius 0 assigns only the center edge.
/// Radius 1 also identifies the four edges sharing a vertex with it;
/// radius 2 identifies every edge with an endpoint at distance at most one.
/// The minimum of [`crate::bounds::environment_lower_bound`] over the
/// returned records — the first record's bound — is the refined worst-case
/// bound at that radius.
///
/// Candidate centers are scanned in ascending order of their single ratio,
/// each grown into its environments, until the next center's own bare
/// ratio already reaches the running minimum. An environment's ratio is a
/// weighted mean of its constituent class ratios, so for the globally
/// lowest class it never dips below that center's own ratio; higher
/// centers are grown too while they could still matter, since a low-ratio
/// neighbor can pull their environments down. At depth 1 the tree class is
/// itself the worst entry and admits all-tree environments, so the bound
/// stays at the tree ratio under every radius — that bound is already
/// tight. At depth 2 the low classes all sit on short cycles no host can
/// surround them with, so each radius step gives a strictly better bound.
///
/// Identifying edges out to radius `r` requires hosts completed through
/// distance `p + r - 1`, one layer deeper per step, so the enumeration
/// grows steeply with the radius; radii past 2 are out of reach.
pub fn refined_worst_case_environments(
    atlas: &Atlas,
    radius: u32,
) -> Result<Vec<EnvironmentRecord>> {
    let p = atlas.p;
    depth_supported(p)?;
    if radius > 2 {
        return Err(Error::capacity(format!(
            "environment refinement is enumerable for radii 0 through 2, not {radius}: \
             each radius step completes hosts one layer deeper"
        )));
    }
    if atlas.entries.is_empty() {
        return Err(Error::invalid("cannot refine over an empty atlas"));
    }
    let mut order: Vec<(f64, usize)> = atlas
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.f_fixed / ratio_f64(e.c_max.ratio()), i))
        .collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite class ratios"));

    let mut records: Vec<EnvironmentRecord> = Vec::new();
    let mut keys: HashSet<CanonicalKey> = HashSet::new();
    let mut running_min = f64::INFINITY;
    for &(single_ratio, idx) in &order {
        if single_ratio >= running_min {
            break;
        }
        let class = &atlas.entries[idx].subgraph;
        let mut finish = |g: Graph| -> Result<()> {
            let dist = g.bfs_distances(&[0, 1]);
            let mut assignment = Vec::new();
            for &(a, b) in g.edges() {
                if (a, b) == (0, 1) || dist[a as usize].min(dist[b as usize]) < radius {
                    assignment.push(((a, b), classify_edge(&g, (a, b), p, atlas)?));
                }
            }
            let key = record_key(&dist, &assignment);
            if keys.insert(key.clone()) {
                let depth = dist.iter().copied().max().unwrap_or(p);
                let record = EnvironmentRecord {
                    p,
                    center_class: idx as u32,
                    host: RootedSubgraph::new(g, depth)?,
                    assignment,
                    relevant: true,
                    key,
                };
                running_min =
                    running_min.min(crate::bounds::environment_lower_bound(&record, atlas)?);
                records.push(record);
            }
            Ok(())
        };
        if radius == 0 {
            finish(class.graph.clone())?;
        } else {
            // Complete layers p through p + radius - 1: after the last pass
            // every vertex the identified edges' classification can see has
            // full degree, so each identified class is pinned.
            let mut states = vec![Partial::from_subgraph(class)];
            let mut seen: HashSet<Vec<u8>> = HashSet::new();
            for d in (p + 1)..=(p + radius) {
                let mut next = Vec::new();
                for s in states {
                    complete_rec(s, d, &mut seen, &mut |done| {
                        next.push(done);
                        Ok(())
                    })?;
                }
                states = next;
            }
            for s in states {
                finish(graph_of(&s)?)?;
            }
        }
    }

    let mut keyed = records
        .into_iter()
        .map(|r| Ok((crate::bounds::environment_lower_bound(&r, atlas)?, r)))
        .collect::<Result<Vec<(f64, EnvironmentRecord)>>>()?;
    keyed.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite bounds")
            .then_with(|| a.1.key.cmp(&b.1.key))
    });
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

/// Verifies the edge-replacement hierarchy at depth `p`: enumerates every
/// relevant environment record, checks the descent inequalities on every
/// host realizing each record, and reports the census. Fails naming the
/// offending record if the depth's descent condition is violated: at depth
/// 1 the replacement clause must hold everywhere; at depth 2 no record may
/// fail the edge-choice clause while passing the replacement clause.
pub fn verify_hierarchy(p: u32, atlas: &Atlas, opts: &HierarchyOptions) -> Result<HierarchyReport> {
    depth_supported(p)?;
    let gadget = make_gadget(p)?;
    let angles = match &opts.angles {
        Some(a) => a.clone(),
        None => Angles::fixed_cubic(p as usize)
            .ok_or_else(|| Error::invalid("no reference angles for this depth"))?,
    };
    let ctx = clause_ctx(p, atlas, &gadget, &angles)?;
    let bound = sym::tree_edge_expectation(p as usize, &angles)?;
    if (bound - ctx.tree_ratio).abs() > 1e-9 {
        return Err(Error::integrity(
            "tree expectation disagrees between the dense and symmetric routes",
        ));
    }
    if let Some((i, n)) = opts.shard {
        if n == 0 || i >= n {
            return Err(Error::invalid("shard must satisfy i < n, n >= 1"));
        }
    }
    if let Some(dir) = &opts.checkpoint_dir {
        fs::create_dir_all(dir)?;
    }

    let mut census = Vec::new();
    let mut violations: Vec<String> = Vec::new();
    let mut relevant_count = 0u64;
    let mut b_false_total = 0u64;
    let mut a_false_b_true_total = 0u64;
    for (idx, entry) in atlas.entries.iter().enumerate() {
        if let Some((i, n)) = opts.shard {
            if idx as u32 % n != i {
                continue;
            }
        }
        let class_key = entry.key.to_hex();
        let start = Instant::now();
        let mut reused = false;
        let outcome = if opts.resume {
            opts.checkpoint_dir
                .as_ref()
                .and_then(|dir| {
                    load_checkpoint(&checkpoint_path(dir, p, idx as u32), p, idx as u32, &class_key)
                })
                .inspect(|_| reused = true)
        } else {
            None
        };
        let outcome = match outcome {
            Some(o) => o,
            None => {
                let o = census_for_class(idx as u32, &entry.subgraph, &ctx)?;
                if let Some(dir) = &opts.checkpoint_dir {
                    write_checkpoint(&checkpoint_path(dir, p, idx as u32), p, idx as u32, &class_key, &o)?;
                }
                o
            }
        };
        if opts.progress {
            eprintln!(
                "class {idx:>3}: {} records from {} hosts{} ({:.1}s)",
                outcome.census.records,
                outcome.census.germs,
                if reused { " [checkpoint]" } else { "" },
                start.elapsed().as_secs_f64()
            );
        }
        for r in &outcome.records {
            if p == 1 && !r.b {
                violations.push(format!(
                    "replacement clause failed for environment {} of class {idx}",
                    r.key
                ));
            }
            if !r.a && r.b {
                violations.push(format!(
                    "edge-choice clause false yet replacement clause true for environment {} of class {idx}",
                    r.key
                ));
            }
        }
        relevant_count += outcome.census.records;
        b_false_total += outcome.census.b_false;
        a_false_b_true_total += outcome.census.a_false_b_true;
        census.push(outcome.census);
    }
    if let Some(v) = violations.first() {
        return Err(Error::integrity(v.clone()));
    }
    Ok(HierarchyReport {
        p,
        relevant_count,
        bound,
        census,
        b_false_total,
        a_false_b_true_total,
        sharded: opts.shard.is_some(),
    })
}

/// Parses a checkpointed record back into an [`EnvironmentRecord`].
/// Available so sharded runs can be inspected without recomputation.
pub fn load_checkpoint_records(path: &PathBuf, atlas: &Atlas) -> Result<Vec<EnvironmentRecord>> {
    let text = fs::read_to_string(path)?;
    let cp: Checkpoint = serde_json::from_str(&text)?;
    if cp.format_version != CHECKPOINT_VERSION {
        return Err(Error::format("unsupported checkpoint version"));
    }
    if atlas.p != cp.p {
        return Err(Error::invalid("checkpoint depth does not match atlas"));
    }
    let mut out = Vec::with_capacity(cp.records.len());
    for r in &cp.records {
        let host = parse_graph(&r.host)?;
        let key = CanonicalKey::from_hex(&r.key)
            .ok_or_else(|| Error::format("bad record key in checkpoint"))?;
        out.push(EnvironmentRecord {
            p: cp.p,
            center_class: cp.class,
            host: RootedSubgraph::new(host, 2 * cp.p)?,
            assignment: r.assignment.iter().map(|&(a, b, k)| ((a, b), k)).collect(),
            relevant: true,
            key,
        });
    }
    Ok(out)
}
