//! Dense statevector simulation of the alternating cut-phase / mixer
//! circuit, with exact adjoint-mode gradients of single-edge expectations.

use crate::error::{Error, Result};
use crate::graph::{Graph, RootedSubgraph};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Hard ceiling for dense simulation (a 24-qubit state is 256 MiB).
pub const MAX_DENSE_QUBITS: usize = 24;

/// One set of variational angles: `gammas[l]` scales the cut-phase layer
/// and `betas[l]` the transverse mixer layer, both in radians.
///
/// The edge expectation is periodic with period `2*pi` in each gamma and
/// `pi/2` in each beta, so the canonical domain is
/// `gamma in [-pi, pi)`, `beta in [-pi/4, pi/4)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Angles {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl Angles {
    /// Builds from per-layer gamma and beta lists (radians).
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Angles> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::invalid(
                "angles need equal, nonzero numbers of gamma and beta entries",
            ));
        }
        Ok(Angles { gammas, betas })
    }

    /// Builds from interleaved degree values `[g1, b1, g2, b2, ...]`.
    pub fn from_interleaved_degrees(vals: &[f64]) -> Result<Angles> {
        if vals.is_empty() || vals.len() % 2 != 0 {
            return Err(Error::invalid("interleaved angle list must have even length"));
        }
        let gammas = vals.iter().step_by(2).map(|d| d.to_radians()).collect();
        let betas = vals.iter().skip(1).step_by(2).map(|d| d.to_radians()).collect();
        Angles::new(gammas, betas)
    }

    /// Interleaved degree rendering `[g1, b1, g2, b2, ...]`.
    pub fn to_interleaved_degrees(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.p());
        for l in 0..self.p() {
            out.push(self.gammas[l].to_degrees());
            out.push(self.betas[l].to_degrees());
        }
        out
    }

    /// Number of layers.
    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    /// Gamma values in radians.
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// Beta values in radians.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Stacked parameter vector `[g1..gp, b1..bp]` (radians), the order
    /// used by gradients and the optimizer.
    pub fn to_stacked(&self) -> Vec<f64> {
        let mut x = self.gammas.clone();
        x.extend_from_slice(&self.betas);
        x
    }

    /// Inverse of [`Angles::to_stacked`].
    pub fn from_stacked(x: &[f64]) -> Result<Angles> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::invalid("stacked angle vector must have even length"));
        }
        let p = x.len() / 2;
        Angles::new(x[..p].to_vec(), x[p..].to_vec())
    }

    /// Folds every angle into the canonical fundamental domain:
    /// `gamma in [-pi, pi)`, `beta in [-pi/4, pi/4)`.
    pub fn canonicalized(&self) -> Angles {
        let fold = |x: f64, period: f64| -> f64 {
            let y = (x + period / 2.0).rem_euclid(period) - period / 2.0;
            if y >= period / 2.0 {
                y - period
            } else {
                y
            }
        };
        Angles {
            gammas: self.gammas.iter().map(|&g| fold(g, 2.0 * PI)).collect(),
            betas: self.betas.iter().map(|&b| fold(b, PI / 2.0)).collect(),
        }
    }

    /// Reference fixed angles for cubic graphs at depth 1..=3: the angles
    /// at which the cycle-free neighborhood attains its optimum, which
    /// empirically give strong values on every cubic-graph neighborhood
    /// class. Depth 1 is the analytic optimum; depths 2 and 3 are
    /// numerically optimized values, in degrees, rounded to 0.1.
    pub fn fixed_cubic(p: usize) -> Option<Angles> {
        match p {
            1 => Some(Angles {
                // gamma* = atan(1/sqrt(2)), beta* = pi/8 exactly.
                gammas: vec![(1.0 / 2.0f64.sqrt()).atan()],
                betas: vec![PI / 8.0],
            }),
            2 => Some(
                Angles::from_interleaved_degrees(&[28.0, 31.8, 51.4, 16.8]).expect("valid"),
            ),
            3 => Some(
                Angles::from_interleaved_degrees(&[156.0, -35.0, -46.0, -27.0, -54.0, -14.0])
                    .expect("valid"),
            ),
            _ => None,
        }
    }
}

impl std::fmt::Display for Angles {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let degs = self.to_interleaved_degrees();
        let parts: Vec<String> = degs
            .chunks(2)
            .map(|c| format!("({:.1}, {:.1})", c[0], c[1]))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Dense complex statevector over `n` qubits, indexed by bitstrings with
/// qubit `k` at bit position `k`.
#[derive(Clone)]
pub struct Statevector {
    n: usize,
    amps: Vec<Complex64>,
}

impl std::fmt::Debug for Statevector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // 2^n amplitudes are not worth printing
        f.debug_struct("Statevector")
            .field("qubits", &self.n)
            .field("norm_sq", &self.norm_sq())
            .finish_non_exhaustive()
    }
}

impl Statevector {
    /// The uniform superposition over all bitstrings.
    pub fn prepare_plus(n: usize) -> Result<Statevector> {
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(Error::capacity(format!(
                "dense statevector supports 1..={MAX_DENSE_QUBITS} qubits, got {n}"
            )));
        }
        let dim = 1usize << n;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Statevector { n, amps: vec![a; dim] })
    }

    /// Number of qubits.
    pub fn qubit_count(&self) -> usize {
        self.n
    }

    /// Amplitude slice (length `2^n`).
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Squared norm; 1 up to rounding for any circuit built here.
    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `exp(-i * gamma * C)` where `C` counts cut edges per
    /// bitstring, using a precomputed cut table.
    pub fn apply_cost_phase_table(&mut self, table: &CutTable, gamma: f64) {
        assert_eq!(table.n, self.n, "cut table qubit count mismatch");
        let phases: Vec<Complex64> = (0..=table.max_value as usize)
            .map(|k| Complex64::from_polar(1.0, -gamma * k as f64))
            .collect();
        for (a, &c) in self.amps.iter_mut().zip(&table.cuts) {
            *a *= phases[c as usize];
        }
    }

    /// Applies the mixer `exp(-i * beta * X)` on every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let mis = Complex64::new(0.0, -s);
        for k in 0..self.n {
            let stride = 1usize << k;
            let block = stride << 1;
            for base in (0..self.amps.len()).step_by(block) {
                for lo in base..base + stride {
                    let hi = lo + stride;
                    let a = self.amps[lo];
                    let b = self.amps[hi];
                    self.amps[lo] = c * a + mis * b;
                    self.amps[hi] = mis * a + c * b;
                }
            }
        }
    }

    /// Probability that qubits `u` and `v` disagree: the expectation of
    /// `(1 - Z_u Z_v) / 2`, i.e. the cut indicator of edge `(u, v)`.
    pub fn differing_probability(&self, u: u32, v: u32) -> f64 {
        let (mu, mv) = (1usize << u, 1usize << v);
        self.amps
            .iter()
            .enumerate()
            .filter(|(z, _)| (z & mu == 0) != (z & mv == 0))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Per-bitstring cut counts of a fixed graph, shared across phase layers.
pub struct CutTable {
    n: usize,
    cuts: Vec<u8>,
    max_value: u8,
}

impl CutTable {
    /// Tabulates cut counts for all `2^n` bitstrings.
    pub fn new(g: &Graph) -> Result<CutTable> {
        let n = g.vertex_count();
        if n == 0 || n > MAX_DENSE_QUBITS {
            return Err(Error::capacity(format!(
                "cut table supports 1..={MAX_DENSE_QUBITS} vertices, got {n}"
            )));
        }
        if g.edge_count() > u8::MAX as usize {
            return Err(Error::capacity("cut table supports at most 255 edges"));
        }
        let dim = 1usize << n;
        let mut cuts = vec![0u8; dim];
        for &(a, b) in g.edges() {
            let (ma, mb) = (1usize << a, 1usize << b);
            for (z, c) in cuts.iter_mut().enumerate() {
                if (z & ma == 0) != (z & mb == 0) {
                    *c += 1;
                }
            }
        }
        let max_value = cuts.iter().copied().max().unwrap_or(0);
        Ok(CutTable { n, cuts, max_value })
    }

    /// Cut count of one bitstring.
    pub fn cut(&self, z: usize) -> u32 {
        self.cuts[z] as u32
    }
}

/// Applies one cut-phase layer, building the table on the fly. For
/// repeated layers build a [`CutTable`] once and use the method form.
pub fn apply_cost_phase(state: &mut Statevector, g: &Graph, gamma: f64) -> Result<()> {
    if g.vertex_count() != state.qubit_count() {
        return Err(Error::invalid(format!(
            "graph has {} vertices but the state has {} qubits",
            g.vertex_count(),
            state.qubit_count()
        )));
    }
    let table = CutTable::new(g)?;
    state.apply_cost_phase_table(&table, gamma);
    Ok(())
}

/// Runs the full depth-`p` circuit on graph `g` from the uniform state.
pub fn qaoa_state(g: &Graph, angles: &Angles) -> Result<Statevector> {
    let table = CutTable::new(g)?;
    let mut sv = Statevector::prepare_plus(g.vertex_count())?;
    for l in 0..angles.p() {
        sv.apply_cost_phase_table(&table, angles.gammas()[l]);
        sv.apply_mixer(angles.betas()[l]);
    }
    Ok(sv)
}

/// Expectation of the center-edge cut indicator on a rooted neighborhood,
/// simulated densely on the neighborhood alone.
///
/// Exactness requires the neighborhood depth to be at least the circuit
/// depth (the center light cone must be contained), and every interior
/// vertex to have full degree.
pub fn edge_expectation(s: &RootedSubgraph, angles: &Angles) -> Result<f64> {
    if (s.depth as usize) < angles.p() {
        return Err(Error::invalid(format!(
            "neighborhood depth {} is shallower than circuit depth {}",
            s.depth,
            angles.p()
        )));
    }
    if !s.interior_complete() {
        return Err(Error::integrity(
            "neighborhood has an interior vertex of degree < 3; expectation would not match \
             any host graph",
        ));
    }
    let sv = qaoa_state(&s.graph, angles)?;
    Ok(sv.differing_probability(0, 1))
}

/// Expectation of the cut indicator of edge `e`, simulated on the whole
/// host graph. Oracle counterpart of [`edge_expectation`].
pub fn embedded_edge_expectation_full(g: &Graph, e: (u32, u32), angles: &Angles) -> Result<f64> {
    if !g.has_edge(e.0, e.1) {
        return Err(Error::invalid(format!("edge ({},{}) not in graph", e.0, e.1)));
    }
    let sv = qaoa_state(g, angles)?;
    Ok(sv.differing_probability(e.0, e.1))
}

/// Sum of all edge cut indicators (the expected cut value) on the whole
/// graph.
pub fn total_cut_expectation(g: &Graph, angles: &Angles) -> Result<f64> {
    let sv = qaoa_state(g, angles)?;
    Ok(g.edges().iter().map(|&(a, b)| sv.differing_probability(a, b)).sum())
}

/// Center-edge expectation and its gradient with respect to the stacked
/// parameter vector `[g1..gp, b1..bp]`, by one forward pass and one
/// adjoint (reverse) pass.
pub fn edge_expectation_gradient(s: &RootedSubgraph, angles: &Angles) -> Result<(f64, Vec<f64>)> {
    if (s.depth as usize) < angles.p() {
        return Err(Error::invalid(format!(
            "neighborhood depth {} is shallower than circuit depth {}",
            s.depth,
            angles.p()
        )));
    }
    if !s.interior_complete() {
        return Err(Error::integrity(
            "neighborhood has an interior vertex of degree < 3",
        ));
    }
    let g = &s.graph;
    let n = g.vertex_count();
    let p = angles.p();
    let table = CutTable::new(g)?;
    let mut psi = Statevector::prepare_plus(n)?;
    for l in 0..p {
        psi.apply_cost_phase_table(&table, angles.gammas()[l]);
        psi.apply_mixer(angles.betas()[l]);
    }
    // chi = P psi with P the diagonal projector onto bitstrings where the
    // center endpoints disagree.
    let (m0, m1) = (1usize, 2usize);
    let mut chi = psi.clone();
    let mut value = 0.0;
    for (z, a) in chi.amps.iter_mut().enumerate() {
        if (z & m0 == 0) != (z & m1 == 0) {
            value += a.norm_sqr();
        } else {
            *a = Complex64::new(0.0, 0.0);
        }
    }
    // Reverse sweep: with both states positioned after layer l, the
    // derivative for a gate exp(-i t G) at layer l is 2 Im <chi|G|psi>.
    let mut grad_g = vec![0.0; p];
    let mut grad_b = vec![0.0; p];
    for l in (0..p).rev() {
        // Mixer generator: B = sum_k X_k.
        let mut dot = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let mk = 1usize << k;
            for z in 0..psi.amps.len() {
                dot += chi.amps[z].conj() * psi.amps[z ^ mk];
            }
        }
        grad_b[l] = 2.0 * dot.im;
        psi.apply_mixer(-angles.betas()[l]);
        chi.apply_mixer(-angles.betas()[l]);
        // Cut generator: C = diag(cut value).
        let mut dot = Complex64::new(0.0, 0.0);
        for z in 0..psi.amps.len() {
            dot += table.cut(z) as f64 * chi.amps[z].conj() * psi.amps[z];
        }
        grad_g[l] = 2.0 * dot.im;
        psi.apply_cost_phase_table(&table, -angles.gammas()[l]);
        chi.apply_cost_phase_table(&table, -angles.gammas()[l]);
    }
    let mut grad = grad_g;
    grad.extend_from_slice(&grad_b);
    Ok((value, grad))
}
