//! Standard cubic graphs used throughout the test suite and the bound
//! constructions, plus a random cubic graph generator.

use crate::error::{Error, Result};
use crate::graph::Graph;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Builds a cubic Hamiltonian graph from its LCF notation: an `n`-cycle
/// `0..n-1` plus chords `i -> i + shift[i mod k] (mod n)`, with the shift
/// pattern repeated `repeats` times.
pub fn lcf_graph(shifts: &[i64], repeats: usize) -> Result<Graph> {
    let n = shifts.len() * repeats;
    if n < 3 {
        return Err(Error::invalid("LCF graph needs at least 3 vertices"));
    }
    let mut edges: Vec<(u32, u32)> = (0..n)
        .map(|i| (i as u32, ((i + 1) % n) as u32))
        .collect();
    let mut chords = std::collections::BTreeSet::new();
    for i in 0..n {
        let s = shifts[i % shifts.len()];
        let j = (i as i64 + s).rem_euclid(n as i64) as u32;
        let i = i as u32;
        chords.insert((i.min(j), i.max(j)));
    }
    edges.extend(chords);
    Graph::new(n, edges)
}

/// Complete graph on four vertices.
pub fn k4() -> Graph {
    Graph::new(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).expect("valid")
}

/// Complete bipartite graph K3,3 (parts {0,1,2} and {3,4,5}).
pub fn k33() -> Graph {
    let mut edges = Vec::new();
    for a in 0..3u32 {
        for b in 3..6u32 {
            edges.push((a, b));
        }
    }
    Graph::new(6, edges).expect("valid")
}

/// Triangular prism: two triangles joined by a perfect matching.
pub fn prism() -> Graph {
    Graph::new(
        6,
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (0, 3), (1, 4), (2, 5)],
    )
    .expect("valid")
}

/// The 3-cube (8 vertices, girth 4, bipartite).
pub fn cube() -> Graph {
    lcf_graph(&[3, -3], 4).expect("valid")
}

/// Petersen graph: outer 5-cycle, inner pentagram, spokes. Girth 5,
/// non-Hamiltonian.
pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5u32 {
        edges.push((i, (i + 1) % 5)); // outer cycle
        edges.push((5 + i, 5 + (i + 2) % 5)); // inner pentagram
        edges.push((i, 5 + i)); // spokes
    }
    Graph::new(10, edges).expect("valid")
}

/// Heawood graph (14 vertices, girth 6, bipartite).
pub fn heawood() -> Graph {
    lcf_graph(&[5, -5], 7).expect("valid")
}

/// Moebius-Kantor graph (16 vertices, girth 6).
pub fn moebius_kantor() -> Graph {
    lcf_graph(&[5, -5], 8).expect("valid")
}

/// McGee graph (24 vertices, girth 7).
pub fn mcgee() -> Graph {
    lcf_graph(&[12, 7, -7], 8).expect("valid")
}

/// A 10-vertex cubic demonstration graph built from one K4-minus-structure
/// fused with two triangles: it has exactly one pair of edge-sharing
/// triangles plus two isolated triangles, which makes all three depth-1
/// neighborhood classes appear simultaneously.
pub fn two_triangle_demo() -> Graph {
    Graph::new(
        10,
        [
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 2),
            (1, 3),
            (4, 5),
            (5, 6),
            (4, 6),
            (7, 8),
            (8, 9),
            (7, 9),
            (2, 4),
            (3, 7),
            (5, 8),
            (6, 9),
        ],
    )
    .expect("valid")
}

/// Random connected simple cubic graph on `n` vertices (n even, n >= 4)
/// via the configuration model with rejection, seeded deterministically.
pub fn random_cubic(n: usize, seed: u64) -> Result<Graph> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::invalid("random cubic graph needs even n >= 4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..10_000 {
        let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(&mut rng);
        let mut edges = Vec::with_capacity(3 * n / 2);
        let mut seen = std::collections::HashSet::new();
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b || !seen.insert((a.min(b), a.max(b))) {
                continue 'attempt;
            }
            edges.push((a, b));
        }
        let g = Graph::new(n, edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::integrity(format!(
        "failed to sample a connected simple cubic graph on {n} vertices"
    )))
}
