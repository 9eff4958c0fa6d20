//! Canonical forms for vertex-colored, optionally edge-labeled graphs via
//! partition refinement with individualization and automorphism-orbit
//! pruning.
//!
//! Two rooted subgraphs get equal keys exactly when an isomorphism between
//! them preserves the distance coloring (and edge labels where present);
//! since the two center endpoints are the only distance-0 vertices, every
//! such isomorphism maps center edge to center edge, with the endpoint swap
//! allowed.

use crate::graph::RootedSubgraph;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Canonical certificate of a colored graph. Equal keys mean isomorphic
/// (color- and label-preserving); byte order is arbitrary but fixed, so
/// keys also serve as deterministic sort keys.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey {
    bytes: Vec<u8>,
}

impl CanonicalKey {
    /// Raw certificate bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Hex rendering of the certificate.
    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.bytes.len() * 2);
        for b in &self.bytes {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Wraps a certificate produced by [`canonical_form`].
    pub(crate) fn from_bytes(bytes: Vec<u8>) -> CanonicalKey {
        CanonicalKey { bytes }
    }

    /// Parses the hex rendering back into a key.
    pub fn from_hex(hex: &str) -> Option<CanonicalKey> {
        if hex.len() % 2 != 0 {
            return None;
        }
        let mut bytes = Vec::with_capacity(hex.len() / 2);
        for i in (0..hex.len()).step_by(2) {
            bytes.push(u8::from_str_radix(&hex[i..i + 2], 16).ok()?);
        }
        Some(CanonicalKey { bytes })
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({})", self.to_hex())
    }
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        CanonicalKey::from_hex(&s).ok_or_else(|| serde::de::Error::custom("bad hex key"))
    }
}

/// Canonical key of a rooted subgraph, using the distance-to-center
/// coloring and no edge labels.
pub fn canonical_key(s: &RootedSubgraph) -> CanonicalKey {
    let colors: Vec<u32> = s.dist.clone();
    CanonicalKey {
        bytes: canonical_form(s.graph.vertex_count(), s.graph.edges(), &colors, None),
    }
}

/// Canonical key of a rooted subgraph whose edges carry labels
/// (`labels[i]` belongs to `s.graph.edges()[i]`).
pub fn canonical_key_labeled(s: &RootedSubgraph, labels: &[u32]) -> CanonicalKey {
    let colors: Vec<u32> = s.dist.clone();
    CanonicalKey {
        bytes: canonical_form(s.graph.vertex_count(), s.graph.edges(), &colors, Some(labels)),
    }
}

/// Computes the canonical certificate of a vertex-colored graph with
/// optional edge labels. The certificate encodes vertex count, colors in
/// canonical order, and the relabeled edge list with labels, minimized
/// over all color-respecting labelings.
pub(crate) fn canonical_form(
    n: usize,
    edges: &[(u32, u32)],
    vcolors: &[u32],
    elabels: Option<&[u32]>,
) -> Vec<u8> {
    assert_eq!(vcolors.len(), n, "one color per vertex");
    if let Some(l) = elabels {
        assert_eq!(l.len(), edges.len(), "one label per edge");
    }
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
    for (i, &(a, b)) in edges.iter().enumerate() {
        let label = elabels.map_or(0, |l| l[i]);
        adj[a as usize].push((b, label));
        adj[b as usize].push((a, label));
    }
    let mut searcher = Searcher {
        n,
        adj,
        edges,
        elabels,
        vcolors,
        best: None,
        generators: Vec::new(),
        prefix: Vec::new(),
    };
    // Initial partition: group vertices by color, ascending.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&v| vcolors[v as usize]);
    let mut cells: Vec<Vec<u32>> = Vec::new();
    for v in order {
        match cells.last_mut() {
            Some(cell) if vcolors[cell[0] as usize] == vcolors[v as usize] => cell.push(v),
            _ => cells.push(vec![v]),
        }
    }
    searcher.search(cells);
    searcher.best.expect("search reaches at least one leaf").0
}

struct Searcher<'a> {
    n: usize,
    adj: Vec<Vec<(u32, u32)>>,
    edges: &'a [(u32, u32)],
    elabels: Option<&'a [u32]>,
    vcolors: &'a [u32],
    best: Option<(Vec<u8>, Vec<u32>)>,
    /// Automorphism generators discovered so far (full images).
    generators: Vec<Vec<u32>>,
    /// Vertices individualized along the current search path.
    prefix: Vec<u32>,
}

impl Searcher<'_> {
    /// Equitable refinement: repeatedly split cells by the multiset of
    /// (neighbor cell, edge label) pairs until stable. Cell order is
    /// deterministic: sub-cells replace their parent ordered by signature.
    fn refine(&self, cells: &mut Vec<Vec<u32>>) {
        loop {
            let mut cell_of = vec![0u32; self.n];
            for (ci, cell) in cells.iter().enumerate() {
                for &v in cell {
                    cell_of[v as usize] = ci as u32;
                }
            }
            let mut changed = false;
            let mut next: Vec<Vec<u32>> = Vec::with_capacity(cells.len());
            for cell in cells.iter() {
                if cell.len() == 1 {
                    next.push(cell.clone());
                    continue;
                }
                let mut keyed: Vec<(Vec<(u32, u32)>, u32)> = cell
                    .iter()
                    .map(|&v| {
                        let mut sig: Vec<(u32, u32)> = self.adj[v as usize]
                            .iter()
                            .map(|&(w, l)| (cell_of[w as usize], l))
                            .collect();
                        sig.sort_unstable();
                        (sig, v)
                    })
                    .collect();
                keyed.sort();
                let mut start = 0;
                for i in 1..=keyed.len() {
                    if i == keyed.len() || keyed[i].0 != keyed[start].0 {
                        next.push(keyed[start..i].iter().map(|&(_, v)| v).collect());
                        if i - start != cell.len() {
                            changed = true;
                        }
                        start = i;
                    }
                }
            }
            *cells = next;
            if !changed {
                return;
            }
        }
    }

    fn search(&mut self, mut cells: Vec<Vec<u32>>) {
        self.refine(&mut cells);
        let target = cells.iter().position(|c| c.len() > 1);
        let Some(ti) = target else {
            self.leaf(&cells);
            return;
        };
        let candidates = cells[ti].clone();
        // Orbit pruning: automorphism generators that fix the currently
        // individualized prefix pointwise map remaining candidates to
        // equivalent subtrees, so only one vertex per orbit is explored.
        let mut uf: Vec<u32> = (0..self.n as u32).collect();
        fn find(uf: &mut Vec<u32>, x: u32) -> u32 {
            let mut r = x;
            while uf[r as usize] != r {
                r = uf[r as usize];
            }
            let mut c = x;
            while uf[c as usize] != r {
                let nxt = uf[c as usize];
                uf[c as usize] = r;
                c = nxt;
            }
            r
        }
        for g in &self.generators {
            if self.prefix.iter().any(|&v| g[v as usize] != v) {
                continue;
            }
            for v in 0..self.n as u32 {
                let (a, b) = (find(&mut uf, v), find(&mut uf, g[v as usize]));
                if a != b {
                    uf[a as usize] = b;
                }
            }
        }
        let mut tried: Vec<u32> = Vec::new();
        for &v in &candidates {
            let vr = find(&mut uf, v);
            if tried.iter().any(|&u| find(&mut uf, u) == vr) {
                continue;
            }
            tried.push(v);
            let mut child: Vec<Vec<u32>> = Vec::with_capacity(cells.len() + 1);
            for (ci, cell) in cells.iter().enumerate() {
                if ci == ti {
                    child.push(vec![v]);
                    child.push(cell.iter().copied().filter(|&w| w != v).collect());
                } else {
                    child.push(cell.clone());
                }
            }
            self.prefix.push(v);
            self.search(child);
            self.prefix.pop();
            // Re-fold newly found generators into the orbit structure so
            // later siblings can be skipped.
            for g in &self.generators {
                if self.prefix.iter().any(|&x| g[x as usize] != x) {
                    continue;
                }
                for x in 0..self.n as u32 {
                    let (a, b) = (find(&mut uf, x), find(&mut uf, g[x as usize]));
                    if a != b {
                        uf[a as usize] = b;
                    }
                }
            }
        }
    }

    /// A discrete partition: compare this labeling's certificate against
    /// the best so far, recording an automorphism on ties.
    fn leaf(&mut self, cells: &[Vec<u32>]) {
        let mut perm = vec![0u32; self.n]; // vertex -> canonical position
        for (pos, cell) in cells.iter().enumerate() {
            perm[cell[0] as usize] = pos as u32;
        }
        let cert = self.certificate(&perm);
        match &self.best {
            None => self.best = Some((cert, perm)),
            Some((best_cert, best_perm)) => {
                if cert < *best_cert {
                    self.best = Some((cert, perm));
                } else if cert == *best_cert {
                    // Equal certificates witness the automorphism
                    // v -> best_perm^{-1}(perm(v)).
                    let mut inv_best = vec![0u32; self.n];
                    for (v, &pos) in best_perm.iter().enumerate() {
                        inv_best[pos as usize] = v as u32;
                    }
                    let auto: Vec<u32> =
                        (0..self.n).map(|v| inv_best[perm[v] as usize]).collect();
                    if auto.iter().enumerate().any(|(v, &w)| v as u32 != w)
                        && !self.generators.contains(&auto)
                    {
                        self.generators.push(auto);
                    }
                }
            }
        }
    }

    fn certificate(&self, perm: &[u32]) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 + self.n * 4 + self.edges.len() * 8);
        bytes.extend_from_slice(&(self.n as u16).to_le_bytes());
        bytes.extend_from_slice(&(self.edges.len() as u16).to_le_bytes());
        let mut inv = vec![0u32; self.n];
        for (v, &pos) in perm.iter().enumerate() {
            inv[pos as usize] = v as u32;
        }
        for pos in 0..self.n {
            bytes.extend_from_slice(&self.vcolors[inv[pos] as usize].to_le_bytes());
        }
        let mut relab: Vec<(u16, u16, u32)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| {
                let (pa, pb) = (perm[a as usize], perm[b as usize]);
                let label = self.elabels.map_or(0, |l| l[i]);
                ((pa.min(pb)) as u16, (pa.max(pb)) as u16, label)
            })
            .collect();
        relab.sort_unstable();
        for (a, b, l) in relab {
            bytes.extend_from_slice(&a.to_le_bytes());
            bytes.extend_from_slice(&b.to_le_bytes());
            bytes.extend_from_slice(&l.to_le_bytes());
        }
        bytes
    }
}
