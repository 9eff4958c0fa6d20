//! Core graph type for cubic-graph work: construction, traversal,
//! neighborhood extraction, brute-force max cut, and cycle-space queries.

use crate::error::{Error, Result};
use std::collections::HashSet;
use std::fmt;

/// Simple undirected graph with maximum degree 3.
///
/// Vertices are `0..vertex_count()`. Edges are stored deduplicated as
/// `(min, max)` pairs in lexicographic order; adjacency lists are sorted.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    adj: Vec<Vec<u32>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={}, edges={:?})", self.n, self.edges.len(), self.edges)
    }
}

impl Graph {
    /// Builds a graph from an edge list. Rejects self-loops, duplicate
    /// edges, out-of-range endpoints, and vertices of degree above 3.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Graph> {
        let mut norm: Vec<(u32, u32)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::invalid(format!("self-loop at vertex {a}")));
            }
            if a as usize >= n || b as usize >= n {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) out of range for {n} vertices"
                )));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        if norm.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("duplicate edge in input"));
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &norm {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for (v, nb) in adj.iter_mut().enumerate() {
            nb.sort_unstable();
            if nb.len() > 3 {
                return Err(Error::invalid(format!(
                    "vertex {v} has degree {} (max 3)",
                    nb.len()
                )));
            }
        }
        Ok(Graph { n, edges: norm, adj })
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Number of edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted `(min, max)` edge list.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Sorted neighbor list of `v`.
    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    /// Degree of `v`.
    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    /// Whether the (unordered) edge `(a, b)` is present.
    pub fn has_edge(&self, a: u32, b: u32) -> bool {
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    /// Position of edge `(a, b)` in `edges()`, if present.
    pub fn edge_index(&self, a: u32, b: u32) -> Option<usize> {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).ok()
    }

    /// Whether every vertex has degree exactly 3.
    pub fn is_three_regular(&self) -> bool {
        self.adj.iter().all(|nb| nb.len() == 3)
    }

    /// First vertex whose degree is not 3, with its degree.
    pub fn first_irregular_vertex(&self) -> Option<(u32, usize)> {
        self.adj
            .iter()
            .enumerate()
            .find(|(_, nb)| nb.len() != 3)
            .map(|(v, nb)| (v as u32, nb.len()))
    }

    /// Breadth-first distances from a set of source vertices.
    /// Unreachable vertices get `u32::MAX`.
    pub fn bfs_distances(&self, sources: &[u32]) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        let mut queue = std::collections::VecDeque::new();
        for &s in sources {
            if dist[s as usize] == u32::MAX {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            for &w in self.neighbors(v) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            count += 1;
            let mut stack = vec![start as u32];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in self.neighbors(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Whether the graph is connected (the empty graph counts as connected).
    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.component_count() == 1
    }

    /// Length of a shortest cycle, or `None` for a forest.
    pub fn girth(&self) -> Option<u32> {
        let mut best: Option<u32> = None;
        // BFS from every vertex; a cross or back edge at depth d closes a
        // cycle of length dist[a] + dist[b] + 1 through the root.
        for root in 0..self.n as u32 {
            let mut dist = vec![u32::MAX; self.n];
            let mut parent = vec![u32::MAX; self.n];
            dist[root as usize] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if dist[w as usize] == u32::MAX {
                        dist[w as usize] = dist[v as usize] + 1;
                        parent[w as usize] = v;
                        queue.push_back(w);
                    } else if parent[v as usize] != w {
                        let len = dist[v as usize] + dist[w as usize] + 1;
                        if best.map_or(true, |b| len < b) {
                            best = Some(len);
                        }
                    }
                }
            }
        }
        best
    }

    /// Two-coloring if the graph is bipartite, else `None`.
    pub fn bipartition(&self) -> Option<Vec<u8>> {
        let mut side = vec![u8::MAX; self.n];
        for start in 0..self.n {
            if side[start] != u8::MAX {
                continue;
            }
            side[start] = 0;
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(start as u32);
            while let Some(v) = queue.pop_front() {
                for &w in self.neighbors(v) {
                    if side[w as usize] == u8::MAX {
                        side[w as usize] = 1 - side[v as usize];
                        queue.push_back(w);
                    } else if side[w as usize] == side[v as usize] {
                        return None;
                    }
                }
            }
        }
        Some(side)
    }
}

/// Result of a max-cut computation: the optimum value and one witness
/// bipartition achieving it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CutResult {
    /// Number of edges crossing the witness bipartition (the optimum).
    pub best_cut: u32,
    /// Total number of edges in the graph.
    pub total_edges: u32,
    /// Side assignment per vertex (0 or 1) achieving `best_cut`.
    pub witness: Vec<u8>,
}

impl CutResult {
    /// Optimum cut as a fraction of the edge count.
    pub fn ratio(&self) -> num_rational::Ratio<i64> {
        num_rational::Ratio::new(self.best_cut as i64, self.total_edges.max(1) as i64)
    }
}

/// Exact max cut by Gray-code enumeration of bipartitions.
///
/// Vertex 0 is pinned to side 0 (the cut is symmetric under global flip),
/// so the loop visits `2^(n-1)` assignments with an O(degree) incremental
/// update per step. Practical up to the low twenties of vertices; hard
/// capacity stop at 32.
pub fn max_cut_brute(g: &Graph) -> Result<CutResult> {
    let n = g.vertex_count();
    if n > 32 {
        return Err(Error::capacity(format!(
            "max_cut_brute supports at most 32 vertices, got {n}"
        )));
    }
    let m = g.edge_count() as u32;
    if n == 0 {
        return Ok(CutResult { best_cut: 0, total_edges: 0, witness: Vec::new() });
    }
    let mut side = vec![0u8; n];
    let mut cut: i64 = 0;
    let mut best: i64 = 0;
    let mut best_mask: u64 = 0;
    let mut mask: u64 = 0;
    let steps: u64 = 1u64 << (n - 1);
    for i in 1..steps {
        let v = (i.trailing_zeros() + 1) as u32;
        // Flipping v turns same-side incident edges into cut edges and
        // vice versa; tally the delta before flipping.
        let mut delta: i64 = 0;
        for &w in g.neighbors(v) {
            if side[w as usize] == side[v as usize] {
                delta += 1;
            } else {
                delta -= 1;
            }
        }
        side[v as usize] ^= 1;
        mask ^= 1u64 << v;
        cut += delta;
        if cut > best {
            best = cut;
            best_mask = mask;
        }
    }
    let witness: Vec<u8> = (0..n).map(|v| ((best_mask >> v) & 1) as u8).collect();
    debug_assert_eq!(
        g.edges().iter().filter(|&&(a, b)| witness[a as usize] != witness[b as usize]).count()
            as i64,
        best
    );
    Ok(CutResult { best_cut: best as u32, total_edges: m, witness })
}

/// An edge neighborhood extracted from a host graph, relabeled so the
/// center edge is `(0, 1)`.
///
/// `dist[v]` is the graph distance from `v` to the nearer center endpoint.
/// For a depth-`p` neighborhood all vertices satisfy `dist <= p`, and an
/// edge of the host is retained exactly when one endpoint lies at distance
/// `<= p - 1` (plus the center edge itself): edges between two
/// boundary-layer vertices are outside the light cone of the center edge
/// and are dropped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedSubgraph {
    /// The extracted graph, relabeled.
    pub graph: Graph,
    /// Center edge after relabeling; always `(0, 1)`.
    pub center: (u32, u32),
    /// Extraction depth `p`.
    pub depth: u32,
    /// Distance of each vertex to the nearer center endpoint.
    pub dist: Vec<u32>,
}

impl RootedSubgraph {
    /// Wraps an already-relabeled graph. Validates the center edge and the
    /// distance labels.
    pub fn new(graph: Graph, depth: u32) -> Result<RootedSubgraph> {
        if graph.vertex_count() < 2 || !graph.has_edge(0, 1) {
            return Err(Error::invalid("rooted subgraph must contain center edge (0,1)"));
        }
        let dist = graph.bfs_distances(&[0, 1]);
        if dist.iter().any(|&d| d > depth) {
            return Err(Error::invalid("vertex beyond stated depth in rooted subgraph"));
        }
        Ok(RootedSubgraph { graph, center: (0, 1), depth, dist })
    }

    /// Whether every vertex strictly inside the boundary layer has full
    /// degree 3. Classification of the center edge is only meaningful when
    /// this holds.
    pub fn interior_complete(&self) -> bool {
        (0..self.graph.vertex_count())
            .all(|v| self.dist[v] >= self.depth || self.graph.degree(v as u32) == 3)
    }

    /// Whether the subgraph is a complete cubic graph (no open boundary).
    pub fn is_closed(&self) -> bool {
        self.graph.is_three_regular()
    }
}

/// Extracts the depth-`p` neighborhood of edge `e` from `g`.
///
/// Includes all vertices within distance `p` of either endpoint, the center
/// edge itself, and every other edge with at least one endpoint at distance
/// `<= p - 1`. Vertices are relabeled with the center endpoints first
/// (in the given order), then breadth-first layer by layer.
pub fn neighborhood_subgraph(g: &Graph, e: (u32, u32), p: u32) -> Result<RootedSubgraph> {
    let (u, v) = e;
    if !g.has_edge(u, v) {
        return Err(Error::invalid(format!("edge ({u},{v}) not in graph")));
    }
    let dist = g.bfs_distances(&[u, v]);
    let mut order: Vec<u32> = vec![u, v];
    let mut included = vec![false; g.vertex_count()];
    included[u as usize] = true;
    included[v as usize] = true;
    let mut frontier = vec![u, v];
    for layer in 1..=p {
        let mut next = Vec::new();
        for &x in &frontier {
            for &w in g.neighbors(x) {
                if !included[w as usize] && dist[w as usize] == layer {
                    included[w as usize] = true;
                    next.push(w);
                }
            }
        }
        next.sort_unstable();
        order.extend_from_slice(&next);
        frontier = next;
    }
    let mut new_id = vec![u32::MAX; g.vertex_count()];
    for (i, &x) in order.iter().enumerate() {
        new_id[x as usize] = i as u32;
    }
    let mut sub_edges = Vec::new();
    for &(a, b) in g.edges() {
        if !included[a as usize] || !included[b as usize] {
            continue;
        }
        let keep = (a, b) == (u.min(v), u.max(v))
            || dist[a as usize].min(dist[b as usize]) + 1 <= p;
        if keep {
            sub_edges.push((new_id[a as usize], new_id[b as usize]));
        }
    }
    let graph = Graph::new(order.len(), sub_edges)?;
    RootedSubgraph::new(graph, p)
}

/// Parses the plain text edge-list format: one `u v` pair per line,
/// blank lines and `#` comments ignored. The vertex count is one more than
/// the largest index mentioned.
pub fn parse_graph(text: &str) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_v: i64 = -1;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u32> {
            tok.ok_or_else(|| Error::invalid(format!("line {}: expected two vertex ids", lineno + 1)))?
                .parse::<u32>()
                .map_err(|_| Error::invalid(format!("line {}: bad vertex id", lineno + 1)))
        };
        let a = parse(it.next())?;
        let b = parse(it.next())?;
        if it.next().is_some() {
            return Err(Error::invalid(format!("line {}: trailing tokens", lineno + 1)));
        }
        max_v = max_v.max(a as i64).max(b as i64);
        edges.push((a, b));
    }
    Graph::new((max_v + 1) as usize, edges)
}

/// Serializes a graph to the plain text edge-list format with edges in
/// sorted order. `parse_graph(&serialize_graph(g))` reproduces `g` exactly
/// when every vertex of `g` has positive degree.
pub fn serialize_graph(g: &Graph) -> String {
    let mut out = String::new();
    for &(a, b) in g.edges() {
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}

/// Fixed-width bitset over edge indices, used for cycle-space arithmetic.
type EdgeMask = Vec<u64>;

fn mask_new(m: usize) -> EdgeMask {
    vec![0u64; m.div_ceil(64)]
}

fn mask_set(mask: &mut EdgeMask, i: usize) {
    mask[i / 64] |= 1u64 << (i % 64);
}

fn mask_xor(a: &mut EdgeMask, b: &EdgeMask) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

fn mask_is_zero(a: &EdgeMask) -> bool {
    a.iter().all(|&x| x == 0)
}

fn mask_leading(a: &EdgeMask) -> Option<usize> {
    for (w, &word) in a.iter().enumerate() {
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

/// Incremental GF(2) row basis over edge masks.
struct CycleSpaceBasis {
    rows: Vec<(usize, EdgeMask)>,
}

impl CycleSpaceBasis {
    fn new() -> Self {
        CycleSpaceBasis { rows: Vec::new() }
    }

    /// Tries to insert `mask`; returns true if it was independent.
    fn insert(&mut self, mut mask: EdgeMask) -> bool {
        for (lead, row) in &self.rows {
            if (mask[lead / 64] >> (lead % 64)) & 1 == 1 {
                mask_xor(&mut mask, row);
            }
        }
        if mask_is_zero(&mask) {
            return false;
        }
        let lead = mask_leading(&mask).expect("nonzero mask has a leading bit");
        self.rows.push((lead, mask));
        true
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }
}

fn cycle_vertices_to_mask(g: &Graph, cycle: &[u32]) -> EdgeMask {
    let mut mask = mask_new(g.edge_count());
    for i in 0..cycle.len() {
        let a = cycle[i];
        let b = cycle[(i + 1) % cycle.len()];
        let idx = g.edge_index(a, b).expect("cycle edge must exist");
        mask_set(&mut mask, idx);
    }
    mask
}

/// Rotates/reflects a cycle vertex sequence into a deterministic canonical
/// rotation: smallest vertex first, then the smaller of the two neighbors
/// second.
fn normalize_cycle(cycle: &mut Vec<u32>) {
    let k = cycle.len();
    let (pos, _) = cycle.iter().enumerate().min_by_key(|&(_, &v)| v).expect("nonempty");
    cycle.rotate_left(pos);
    if k > 2 && cycle[k - 1] < cycle[1] {
        cycle[1..].reverse();
    }
}

/// Enumerates all simple cycles of length at most `max_len` as vertex
/// sequences. Intended for small `max_len` (at most 7 in this crate).
pub(crate) fn simple_cycles_up_to(g: &Graph, max_len: usize) -> Vec<Vec<u32>> {
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    for &(a, b) in g.edges() {
        for mut cyc in paths_between(g, b, a, (a, b), max_len.saturating_sub(1)) {
            normalize_cycle(&mut cyc);
            let mask = cycle_vertices_to_mask(g, &cyc);
            if seen.insert(mask) {
                out.push(cyc);
            }
        }
    }
    out.sort_by_key(|c| (c.len(), c.clone()));
    out
}

/// Simple cycles through the specific edge `e`, length at most `max_len`,
/// as vertex sequences starting with the endpoints of `e`.
pub(crate) fn cycles_through_edge(g: &Graph, e: (u32, u32), max_len: usize) -> Vec<Vec<u32>> {
    let (u, v) = e;
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut out = Vec::new();
    for cyc in paths_between(g, v, u, (u, v), max_len.saturating_sub(1)) {
        // paths_between returns u ... v ordered sequences; the cycle closes
        // through e.
        let mask = cycle_vertices_to_mask(g, &cyc);
        if seen.insert(mask) {
            out.push(cyc);
        }
    }
    out.sort_by_key(|c| (c.len(), c.clone()));
    out
}

/// All simple paths from `from` to `to` of length at most `max_edges`,
/// avoiding the edge `skip`. Returned as vertex sequences
/// `[to, ..., from]` reversed into `[to..from]`... concretely: sequences
/// start at `to` and end at `from`.
fn paths_between(
    g: &Graph,
    from: u32,
    to: u32,
    skip: (u32, u32),
    max_edges: usize,
) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut path = vec![to];
    let mut on_path = vec![false; g.vertex_count()];
    on_path[to as usize] = true;
    // Depth-first enumeration from `to` toward `from`, so emitted sequences
    // read `to, ..., from`.
    fn rec(
        g: &Graph,
        cur: u32,
        target: u32,
        skip: (u32, u32),
        budget: usize,
        path: &mut Vec<u32>,
        on_path: &mut Vec<bool>,
        out: &mut Vec<Vec<u32>>,
    ) {
        for &w in g.neighbors(cur) {
            let step = (cur.min(w), cur.max(w));
            if step == (skip.0.min(skip.1), skip.0.max(skip.1)) {
                continue;
            }
            if w == target {
                if budget >= 1 {
                    let mut cyc = path.clone();
                    cyc.push(w);
                    out.push(cyc);
                }
                continue;
            }
            if budget >= 2 && !on_path[w as usize] {
                on_path[w as usize] = true;
                path.push(w);
                rec(g, w, target, skip, budget - 1, path, on_path, out);
                path.pop();
                on_path[w as usize] = false;
            }
        }
    }
    if max_edges >= 1 {
        rec(g, to, from, skip, max_edges, &mut path, &mut on_path, &mut out);
    }
    out
}

/// Computes a minimum cycle basis: independent cycles of minimum total
/// length spanning the cycle space. Horton-style: candidate cycles are
/// built from shortest-path trees plus one edge, sorted by length, and
/// greedily accepted while independent over GF(2).
///
/// Returns each basis cycle as a vertex sequence.
pub fn minimum_cycle_basis(g: &Graph) -> Result<Vec<Vec<u32>>> {
    let n = g.vertex_count();
    let m = g.edge_count();
    let target = m + g.component_count() - n;
    if target == 0 {
        return Ok(Vec::new());
    }
    let mut candidates: Vec<Vec<u32>> = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for root in 0..n as u32 {
        let mut dist = vec![u32::MAX; n];
        let mut parent = vec![u32::MAX; n];
        dist[root as usize] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(root);
        while let Some(x) = queue.pop_front() {
            for &w in g.neighbors(x) {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[x as usize] + 1;
                    parent[w as usize] = x;
                    queue.push_back(w);
                }
            }
        }
        let path_to = |mut x: u32| -> Vec<u32> {
            let mut p = vec![x];
            while parent[x as usize] != u32::MAX {
                x = parent[x as usize];
                p.push(x);
            }
            p.reverse();
            p // root ... x
        };
        for &(a, b) in g.edges() {
            if dist[a as usize] == u32::MAX || dist[b as usize] == u32::MAX {
                continue;
            }
            if parent[a as usize] == b || parent[b as usize] == a {
                continue; // tree edge closes no cycle
            }
            let pa = path_to(a);
            let pb = path_to(b);
            // Valid Horton candidate: the two root paths share only the root.
            let sa: HashSet<u32> = pa.iter().copied().collect();
            if pb[1..].iter().any(|x| sa.contains(x)) {
                continue;
            }
            let mut cyc = pa;
            cyc.extend(pb[1..].iter().rev());
            if cyc.len() < 3 {
                continue;
            }
            normalize_cycle(&mut cyc);
            let mask = cycle_vertices_to_mask(g, &cyc);
            if seen.insert(mask) {
                candidates.push(cyc);
            }
        }
    }
    candidates.sort_by_key(|c| (c.len(), c.clone()));
    let mut basis = CycleSpaceBasis::new();
    let mut out = Vec::new();
    for cyc in candidates {
        let mask = cycle_vertices_to_mask(g, &cyc);
        if basis.insert(mask) {
            out.push(cyc);
            if basis.rank() == target {
                return Ok(out);
            }
        }
    }
    Err(Error::integrity(format!(
        "cycle basis incomplete: rank {} of {target}",
        basis.rank()
    )))
}

/// Whether simple cycles of length at most `max_len` span the whole cycle
/// space of `g`. Equivalent to: the minimum cycle basis contains no cycle
/// longer than `max_len`.
pub fn short_cycles_span(g: &Graph, max_len: usize) -> bool {
    let target = g.edge_count() + g.component_count() - g.vertex_count();
    if target == 0 {
        return true;
    }
    let mut basis = CycleSpaceBasis::new();
    for cyc in simple_cycles_up_to(g, max_len) {
        if basis.insert(cycle_vertices_to_mask(g, &cyc)) && basis.rank() == target {
            return true;
        }
    }
    false
}

/// Length of the longest cycle in a minimum cycle basis, or `None` for a
/// forest.
pub fn max_basis_cycle_length(g: &Graph) -> Result<Option<usize>> {
    let basis = minimum_cycle_basis(g)?;
    Ok(basis.iter().map(|c| c.len()).max())
}
