//! Enumeration of depth-`p` edge-neighborhood classes on cubic graphs,
//! classification of host-graph edges against the atlas, and atlas
//! persistence.
//!
//! A depth-`p` neighborhood is characterized structurally: all vertices lie
//! within distance `p` of the center edge, every vertex at distance `< p`
//! has full degree 3, and there are no edges between two distance-`p`
//! vertices. Every such connected structure occurs in some cubic host, and
//! extraction from any host produces such a structure, so enumerating the
//! structures enumerates exactly the realizable classes.

use crate::canon::{canonical_key, CanonicalKey};
use crate::engine::{edge_expectation, Angles};
use crate::error::{Error, Result};
use crate::graph::{max_cut_brute, neighborhood_subgraph, CutResult, Graph, RootedSubgraph};
use crate::optimize;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

/// One neighborhood class: the subgraph, its exact max cut, and its
/// center-edge expectations.
#[derive(Clone, Debug)]
pub struct AtlasEntry {
    /// `(p, position)`; position is the rank under the deterministic atlas
    /// order (vertex count, then edge count, then canonical key).
    pub index: (u32, u32),
    /// Canonical certificate of the rooted subgraph.
    pub key: CanonicalKey,
    /// Representative subgraph, center edge `(0, 1)`.
    pub subgraph: RootedSubgraph,
    /// Exact max cut of the subgraph with witness.
    pub c_max: CutResult,
    /// Center-edge expectation at the canonical fixed angles for depth `p`
    /// ([`crate::optimize::canonical_cubic_angles`], the stationary point
    /// that the printed reference degrees round to).
    pub f_fixed: f64,
    /// Best center-edge expectation found by multistart optimization
    /// (populated by full builds only).
    pub f_opt: Option<f64>,
    /// Angles achieving `f_opt`.
    pub opt_angles: Option<Angles>,
    /// Number of relevant environment records centered on this class
    /// (populated by the hierarchy machinery).
    pub env_count: Option<u64>,
}

/// A complete depth-`p` atlas with a key index for classification.
#[derive(Clone, Debug)]
pub struct Atlas {
    /// Depth.
    pub p: u32,
    /// Entries in deterministic order; `entries[k].index.1 == k`.
    pub entries: Vec<AtlasEntry>,
    by_key: HashMap<CanonicalKey, u32>,
}

impl Atlas {
    fn from_entries(p: u32, entries: Vec<AtlasEntry>) -> Atlas {
        let by_key = entries
            .iter()
            .map(|e| (e.key.clone(), e.index.1))
            .collect();
        Atlas { p, entries, by_key }
    }

    /// Number of classes.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Whether the atlas is empty.
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Class position for a canonical key, if present.
    pub fn position_of(&self, key: &CanonicalKey) -> Option<u32> {
        self.by_key.get(key).copied()
    }
}

/// Per-class edge counts of one host graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubgraphCounts {
    /// Depth used for classification.
    pub p: u32,
    /// `counts[k]` = number of host edges in class `k`.
    pub counts: Vec<u64>,
    /// Total host edges (= sum of counts).
    pub total_edges: u64,
}

/// The depth-`p` neighborhood of an edge in the infinite cubic tree:
/// the unique cycle-free class, and the first atlas entry at every depth.
pub fn tree_neighborhood(p: u32) -> Result<RootedSubgraph> {
    let mut edges: Vec<(u32, u32)> = vec![(0, 1)];
    let mut next = 2u32;
    let mut layer: Vec<u32> = vec![0, 1];
    // Every vertex sprouts two children: center endpoints then have the
    // center edge plus two children, interior vertices a parent plus two.
    for _ in 0..p {
        let mut newlayer = Vec::new();
        for &v in &layer {
            for _ in 0..2 {
                edges.push((v, next));
                newlayer.push(next);
                next += 1;
            }
        }
        layer = newlayer;
    }
    let g = Graph::new(next as usize, edges)?;
    RootedSubgraph::new(g, p)
}

/// Enumerates all depth-`p` neighborhood classes, sorted largest first by
/// (vertex count descending, edge count, canonical key); the cycle-free
/// class is always entry 0.
///
/// Depth 3 is supported for counting but produces roughly 9e5 classes;
/// depth 4 and beyond are out of reach and rejected.
pub fn enumerate_subgraphs(p: u32) -> Result<Vec<RootedSubgraph>> {
    if p > 3 {
        return Err(Error::capacity(format!(
            "subgraph enumeration supports depth <= 3, got {p}"
        )));
    }
    let mut classes = vec![depth_zero()?];
    for depth in 1..=p {
        let mut out: Vec<RootedSubgraph> = Vec::new();
        for seed in &classes {
            for (_, sub) in complete_layer(seed, depth)? {
                out.push(sub);
            }
        }
        classes = out;
    }
    sort_classes(&mut classes);
    Ok(classes)
}

/// Counts depth-`p` classes without retaining them, processing one
/// depth-`(p-1)` seed at a time. Distinct seeds extend to disjoint class
/// sets (the depth-`(p-1)` restriction of a class is its seed), so per-seed
/// deduplication is global deduplication.
pub fn count_subgraph_classes(p: u32) -> Result<u64> {
    if p == 0 {
        return Ok(1);
    }
    if p > 3 {
        return Err(Error::capacity(format!(
            "subgraph enumeration supports depth <= 3, got {p}"
        )));
    }
    let seeds = enumerate_subgraphs(p - 1)?;
    let mut total = 0u64;
    for seed in &seeds {
        total += complete_layer_count(seed, p)?;
    }
    Ok(total)
}

fn depth_zero() -> Result<RootedSubgraph> {
    RootedSubgraph::new(Graph::new(2, [(0, 1)])?, 0)
}

// Largest classes first: the cycle-free class is then always entry 0 at
// every depth, mirroring the reference tabulation.
fn sort_classes(classes: &mut [RootedSubgraph]) {
    classes.sort_by_key(|s| {
        (
            std::cmp::Reverse(s.graph.vertex_count()),
            s.graph.edge_count(),
            canonical_key(s),
        )
    });
}

/// Mutable completion state: the seed graph plus additions for one more
/// layer. Also reused by the environment census, which grows neighborhood
/// classes outward by the same move set.
#[derive(Clone)]
pub(crate) struct Partial {
    pub(crate) n: usize,
    pub(crate) edges: Vec<(u32, u32)>,
    pub(crate) dist: Vec<u32>,
    pub(crate) adj: Vec<Vec<u32>>,
}

impl Partial {
    pub(crate) fn from_subgraph(s: &RootedSubgraph) -> Partial {
        Partial {
            n: s.graph.vertex_count(),
            edges: s.graph.edges().to_vec(),
            dist: s.dist.clone(),
            adj: (0..s.graph.vertex_count() as u32)
                .map(|v| s.graph.neighbors(v).to_vec())
                .collect(),
        }
    }

    pub(crate) fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub(crate) fn adjacent(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].contains(&b)
    }

    pub(crate) fn add_edge(&mut self, a: u32, b: u32) {
        self.edges.push((a.min(b), a.max(b)));
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
    }

    pub(crate) fn add_vertex(&mut self, dist: u32) -> u32 {
        let v = self.n as u32;
        self.n += 1;
        self.dist.push(dist);
        self.adj.push(Vec::new());
        v
    }

    pub(crate) fn key(&self) -> Vec<u8> {
        crate::canon::canonical_form(self.n, &self.edges, &self.dist, None)
    }

    pub(crate) fn into_subgraph(self, depth: u32) -> Result<RootedSubgraph> {
        RootedSubgraph::new(Graph::new(self.n, self.edges)?, depth)
    }
}

/// All inequivalent ways to complete a depth-`(d-1)` class into depth-`d`
/// classes: every distance-`(d-1)` vertex must reach degree 3 via new
/// edges inside its layer or new boundary vertices at distance `d`.
/// Returns canonical key plus subgraph per class.
fn complete_layer(seed: &RootedSubgraph, d: u32) -> Result<Vec<(CanonicalKey, RootedSubgraph)>> {
    let mut finals: HashMap<CanonicalKey, RootedSubgraph> = HashMap::new();
    let mut seen: std::collections::HashSet<Vec<u8>> = std::collections::HashSet::new();
    let start = Partial::from_subgraph(seed);
    complete_rec(start, d, &mut seen, &mut |p: Partial| {
        let sub = p.into_subgraph(d)?;
        let key = canonical_key(&sub);
        finals.entry(key).or_insert(sub);
        Ok(())
    })?;
    let mut out: Vec<(CanonicalKey, RootedSubgraph)> = finals.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Count-only variant of [`complete_layer`], retaining canonical keys but
/// not subgraphs.
fn complete_layer_count(seed: &RootedSubgraph, d: u32) -> Result<u64> {
    let mut finals: std::collections::HashSet<Vec<u8>> = std::collections::HashSet::new();
    let mut seen: std::collections::HashSet<Vec<u8>> = std::collections::HashSet::new();
    let start = Partial::from_subgraph(seed);
    complete_rec(start, d, &mut seen, &mut |p: Partial| {
        finals.insert(p.key());
        Ok(())
    })?;
    Ok(finals.len() as u64)
}

pub(crate) fn complete_rec(
    state: Partial,
    d: u32,
    seen: &mut std::collections::HashSet<Vec<u8>>,
    emit: &mut dyn FnMut(Partial) -> Result<()>,
) -> Result<()> {
    // First deficient vertex of the old boundary layer.
    let v = (0..state.n as u32)
        .find(|&v| state.dist[v as usize] == d - 1 && state.degree(v) < 3);
    let Some(v) = v else {
        return emit(state);
    };
    // Fill one slot of v every possible way; recursion handles the rest.
    // (a) A new edge to another deficient vertex of the same layer.
    let partners: Vec<u32> = (0..state.n as u32)
        .filter(|&w| {
            w != v
                && state.dist[w as usize] == d - 1
                && state.degree(w) < 3
                && !state.adjacent(v, w)
        })
        .collect();
    for w in partners {
        let mut next = state.clone();
        next.add_edge(v, w);
        if seen.insert(next.key()) {
            complete_rec(next, d, seen, emit)?;
        }
    }
    // (b) A new boundary vertex at distance d, attached to v and up to two
    // other deficient old-boundary vertices. Attachments are decided at
    // creation time: boundary vertices never gain edges later, so subsets
    // here cover all eventual adjacency patterns.
    let others: Vec<u32> = (0..state.n as u32)
        .filter(|&w| w != v && state.dist[w as usize] == d - 1 && state.degree(w) < 3)
        .collect();
    let mut subsets: Vec<Vec<u32>> = vec![vec![]];
    for &w in &others {
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
    for set in subsets {
        let mut next = state.clone();
        let x = next.add_vertex(d);
        next.add_edge(v, x);
        for &w in &set {
            next.add_edge(w, x);
        }
        if seen.insert(next.key()) {
            complete_rec(next, d, seen, emit)?;
        }
    }
    Ok(())
}

/// Classifies edge `e` of host `g` against a depth-`p` atlas, returning the
/// class position.
pub fn classify_edge(g: &Graph, e: (u32, u32), p: u32, atlas: &Atlas) -> Result<u32> {
    if atlas.p != p {
        return Err(Error::invalid(format!(
            "atlas depth {} does not match requested depth {p}",
            atlas.p
        )));
    }
    let sub = neighborhood_subgraph(g, e, p)?;
    if !sub.interior_complete() {
        return Err(Error::integrity(format!(
            "neighborhood of ({}, {}) has an incomplete interior vertex; host is not \
             locally cubic to depth {p}",
            e.0, e.1
        )));
    }
    let key = canonical_key(&sub);
    atlas.position_of(&key).ok_or_else(|| {
        Error::integrity(format!(
            "neighborhood class {} missing from depth-{p} atlas",
            key
        ))
    })
}

/// Classifies every edge of `g`, producing per-class counts.
pub fn count_subgraphs(g: &Graph, p: u32, atlas: &Atlas) -> Result<SubgraphCounts> {
    let mut counts = vec![0u64; atlas.len()];
    for &e in g.edges() {
        counts[classify_edge(g, e, p, atlas)? as usize] += 1;
    }
    Ok(SubgraphCounts { p, counts, total_edges: g.edge_count() as u64 })
}

/// Knobs for [`build_atlas`].
#[derive(Clone, Debug)]
pub struct BuildOptions {
    /// Run multistart optimization per class to fill `f_opt`/`opt_angles`.
    pub optimize: bool,
    /// Random starts per class when optimizing.
    pub starts: usize,
    /// Seed for the multistart generator.
    pub seed: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { optimize: false, starts: 25, seed: 2021 }
    }
}

/// Builds the depth-`p` atlas: enumeration, exact max cuts, fixed-angle
/// expectations, and optionally per-class optimized expectations.
/// Depth is limited to 2 (the depth-3 atlas is enumerable but its
/// 9e5 classes cannot be simulated or stored at reasonable cost).
pub fn build_atlas(p: u32, opts: &BuildOptions) -> Result<Atlas> {
    if p > 2 {
        return Err(Error::capacity(format!(
            "atlas construction supports depth 0..=2, got {p}"
        )));
    }
    let classes = enumerate_subgraphs(p)?;
    if p == 0 {
        // Depth 0 applies no layers, so there are no angles to fix or
        // optimize: the uniform state cuts the lone bare-edge class with
        // probability exactly 1/2.
        let sub = classes.into_iter().next().expect("depth-0 class");
        let entry = AtlasEntry {
            index: (0, 0),
            key: canonical_key(&sub),
            c_max: max_cut_brute(&sub.graph)?,
            f_fixed: 0.5,
            f_opt: Some(0.5),
            opt_angles: None,
            env_count: None,
            subgraph: sub,
        };
        return Ok(Atlas::from_entries(0, vec![entry]));
    }
    let fixed = optimize::canonical_cubic_angles(p as usize)?;
    let mut entries = Vec::with_capacity(classes.len());
    for (k, sub) in classes.into_iter().enumerate() {
        let key = canonical_key(&sub);
        let c_max = max_cut_brute(&sub.graph)?;
        let f_fixed = edge_expectation(&sub, &fixed)?;
        let (f_opt, opt_angles) = if opts.optimize {
            let r = optimize::multistart(&sub, opts.starts, opts.seed.wrapping_add(k as u64))?;
            (Some(r.best_value), Some(r.best_angles))
        } else {
            (None, None)
        };
        entries.push(AtlasEntry {
            index: (p, k as u32),
            key,
            subgraph: sub,
            c_max,
            f_fixed,
            f_opt,
            opt_angles,
            env_count: None,
        });
    }
    Ok(Atlas::from_entries(p, entries))
}

/// Serialized atlas layout.
#[derive(Serialize, Deserialize)]
struct AtlasFile {
    format_version: u32,
    p: u32,
    class_count: u32,
    entries: Vec<EntryFile>,
    /// SHA-256 over the serialized `entries` array.
    checksum: String,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    index: (u32, u32),
    key: String,
    vertices: u32,
    edges: Vec<(u32, u32)>,
    c_max: String,
    witness: Vec<u8>,
    f_fixed: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    f_opt: Option<f64>,
    /// Interleaved degrees `[g1, b1, ...]`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    opt_angles_deg: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    env_count: Option<u64>,
}

fn entries_digest(entries: &[EntryFile]) -> Result<String> {
    let payload = serde_json::to_vec(entries)?;
    let mut h = Sha256::new();
    h.update(&payload);
    Ok(format!("{:x}", h.finalize()))
}

/// Writes an atlas as JSON with an integrity checksum.
pub fn save_atlas(atlas: &Atlas, path: &Path) -> Result<()> {
    let entries: Vec<EntryFile> = atlas
        .entries
        .iter()
        .map(|e| EntryFile {
            index: e.index,
            key: e.key.to_hex(),
            vertices: e.subgraph.graph.vertex_count() as u32,
            edges: e.subgraph.graph.edges().to_vec(),
            c_max: format!("{}/{}", e.c_max.best_cut, e.c_max.total_edges),
            witness: e.c_max.witness.clone(),
            f_fixed: e.f_fixed,
            f_opt: e.f_opt,
            opt_angles_deg: e.opt_angles.as_ref().map(|a| a.to_interleaved_degrees()),
            env_count: e.env_count,
        })
        .collect();
    let file = AtlasFile {
        format_version: 1,
        p: atlas.p,
        class_count: atlas.entries.len() as u32,
        checksum: entries_digest(&entries)?,
        entries,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Reads an atlas back, verifying version, checksum, counts, and canonical
/// keys.
pub fn load_atlas(path: &Path) -> Result<Atlas> {
    let text = std::fs::read_to_string(path)?;
    let file: AtlasFile = serde_json::from_str(&text)?;
    if file.format_version != 1 {
        return Err(Error::format(format!(
            "unsupported atlas format version {}",
            file.format_version
        )));
    }
    if file.entries.len() != file.class_count as usize {
        return Err(Error::format("atlas class count does not match entry list"));
    }
    if entries_digest(&file.entries)? != file.checksum {
        return Err(Error::format("atlas checksum mismatch"));
    }
    let mut entries = Vec::with_capacity(file.entries.len());
    for (k, ef) in file.entries.into_iter().enumerate() {
        if ef.index != (file.p, k as u32) {
            return Err(Error::format(format!("entry {k} has inconsistent index")));
        }
        let graph = Graph::new(ef.vertices as usize, ef.edges)?;
        let sub = RootedSubgraph::new(graph, file.p)?;
        let key = canonical_key(&sub);
        if key.to_hex() != ef.key {
            return Err(Error::format(format!(
                "entry {k}: canonical key mismatch (file corrupt or format drift)"
            )));
        }
        let (num, den) = ef
            .c_max
            .split_once('/')
            .ok_or_else(|| Error::format("c_max must be 'cut/total'"))?;
        let best_cut: u32 = num.parse().map_err(|_| Error::format("bad c_max numerator"))?;
        let total: u32 = den.parse().map_err(|_| Error::format("bad c_max denominator"))?;
        if total as usize != sub.graph.edge_count() {
            return Err(Error::format(format!("entry {k}: c_max denominator mismatch")));
        }
        let cut_check = sub
            .graph
            .edges()
            .iter()
            .filter(|&&(a, b)| ef.witness[a as usize] != ef.witness[b as usize])
            .count() as u32;
        if cut_check != best_cut {
            return Err(Error::format(format!("entry {k}: witness does not achieve c_max")));
        }
        let opt_angles = match ef.opt_angles_deg {
            Some(degs) => Some(Angles::from_interleaved_degrees(&degs)?),
            None => None,
        };
        entries.push(AtlasEntry {
            index: ef.index,
            key,
            subgraph: sub,
            c_max: CutResult { best_cut, total_edges: total, witness: ef.witness },
            f_fixed: ef.f_fixed,
            f_opt: ef.f_opt,
            opt_angles,
            env_count: ef.env_count,
        });
    }
    Ok(Atlas::from_entries(file.p, entries))
}

/// Builds an atlas skeleton (enumeration, max cuts, fixed-angle values)
/// from an entry list, used by tests that do not need `f_opt`.
pub fn atlas_from_classes(p: u32, classes: Vec<RootedSubgraph>) -> Result<Atlas> {
    let fixed = optimize::canonical_cubic_angles(p as usize)?;
    let mut entries = Vec::with_capacity(classes.len());
    for (k, sub) in classes.into_iter().enumerate() {
        let key = canonical_key(&sub);
        let c_max = max_cut_brute(&sub.graph)?;
        let f_fixed = edge_expectation(&sub, &fixed)?;
        entries.push(AtlasEntry {
            index: (p, k as u32),
            key,
            subgraph: sub,
            c_max,
            f_fixed,
            f_opt: None,
            opt_angles: None,
            env_count: None,
        });
    }
    Ok(Atlas::from_entries(p, entries))
}
