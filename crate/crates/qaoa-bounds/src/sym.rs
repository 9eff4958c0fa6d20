//! Exact center-edge expectations on the depth-p tree neighborhood in the
//! subtree-exchange symmetric basis.
//!
//! The depth-p neighborhood of an edge in a triangle-free cubic graph is a
//! tree: the center edge with a height-p binary-branching half-tree hanging
//! off each endpoint. Spin configurations that differ by exchanging the two
//! child subtrees below any vertex have equal amplitudes throughout QAOA
//! evolution, so the state lives in a much smaller symmetrized space. A
//! height-h half-tree state is a root spin plus an unordered pair of
//! height-(h-1) states, giving level dimensions 2, 6, 42, 1806 and a top
//! (whole tree) dimension of 3, 21, 903, or 1,631,721 for p = 0..=3, versus
//! 2^30 dense amplitudes at p = 3.

use crate::engine::Angles;
use crate::error::{Error, Result};
use crate::optimize::Objective;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// Deepest supported tree; one level further the basis no longer fits in
/// memory (the top dimension squares at each depth).
pub const MAX_TREE_DEPTH: usize = 3;

/// Unordered pairs over `d` states.
#[inline]
fn pair_count(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Row-major rank of the pair `(i, j)` with `i <= j < d`.
#[inline]
fn pair_index(d: usize, i: usize, j: usize) -> usize {
    i * d - (i * i - i) / 2 + (j - i)
}

/// Symmetrized states of a height-h half-tree.
struct Level {
    dim: usize,
    /// Root spin of each state.
    spin: Vec<u8>,
    /// Edges cut strictly inside the half-tree (root-child edges included).
    cut: Vec<u32>,
    /// Coefficient of the state in the uniform superposition.
    amp0: Vec<f64>,
}

fn level_zero() -> Level {
    Level {
        dim: 2,
        spin: vec![0, 1],
        cut: vec![0, 0],
        amp0: vec![FRAC_1_SQRT_2; 2],
    }
}

/// Builds level h from level h-1: a root spin above an unordered pair of
/// child states. Pairs with distinct members absorb a sqrt(2) multiplicity.
fn level_up(prev: &Level) -> Level {
    let d = prev.dim;
    let pc = pair_count(d);
    let dim = 2 * pc;
    let mut spin = vec![0u8; dim];
    let mut cut = vec![0u32; dim];
    let mut amp0 = vec![0f64; dim];
    for s in 0..2u8 {
        for i in 0..d {
            for j in i..d {
                let k = s as usize * pc + pair_index(d, i, j);
                spin[k] = s;
                cut[k] = prev.cut[i]
                    + prev.cut[j]
                    + u32::from(s != prev.spin[i])
                    + u32::from(s != prev.spin[j]);
                let mult = if i < j { SQRT_2 } else { 1.0 };
                amp0[k] = FRAC_1_SQRT_2 * prev.amp0[i] * prev.amp0[j] * mult;
            }
        }
    }
    Level { dim, spin, cut, amp0 }
}

/// Symmetrized basis for the whole depth-p tree: an unordered pair of
/// height-p half-tree states joined by the center edge.
pub struct TreeBasis {
    p: usize,
    levels: Vec<Level>,
    dim: usize,
    /// Total tree edges cut per state.
    cut: Vec<u32>,
    /// Whether the center edge is cut.
    center: Vec<u8>,
    /// Coefficients of the uniform superposition.
    amp0: Vec<f64>,
    max_cut: u32,
}

/// Dimension of the symmetrized whole-tree space at depth `p`; errors when
/// the count no longer fits in `u64`.
pub fn sym_dimension(p: usize) -> Result<u64> {
    let mut d: u64 = 2;
    for _ in 0..p {
        let t = d
            .checked_mul(d + 1)
            .map(|x| x / 2)
            .ok_or_else(|| Error::capacity(format!("symmetric basis dimension overflows at depth {p}")))?;
        d = t
            .checked_mul(2)
            .ok_or_else(|| Error::capacity(format!("symmetric basis dimension overflows at depth {p}")))?;
    }
    Ok(d * (d + 1) / 2)
}

impl TreeBasis {
    /// Builds the basis for depth `p <= 3`.
    pub fn new(p: usize) -> Result<TreeBasis> {
        if p > MAX_TREE_DEPTH {
            return Err(Error::capacity(format!(
                "tree depth {p} exceeds the supported maximum of {MAX_TREE_DEPTH}"
            )));
        }
        let mut levels = vec![level_zero()];
        for _ in 0..p {
            let next = level_up(levels.last().expect("nonempty"));
            levels.push(next);
        }
        let half = levels.last().expect("nonempty");
        let d = half.dim;
        let dim = pair_count(d);
        let mut cut = vec![0u32; dim];
        let mut center = vec![0u8; dim];
        let mut amp0 = vec![0f64; dim];
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                let differs = u8::from(half.spin[i] != half.spin[j]);
                cut[k] = half.cut[i] + half.cut[j] + u32::from(differs != 0);
                center[k] = differs;
                let mult = if i < j { SQRT_2 } else { 1.0 };
                amp0[k] = half.amp0[i] * half.amp0[j] * mult;
                k += 1;
            }
        }
        let max_cut = cut.iter().copied().max().unwrap_or(0);
        Ok(TreeBasis { p, levels, dim, cut, center, amp0, max_cut })
    }

    /// Number of layers this tree supports.
    pub fn depth(&self) -> usize {
        self.p
    }

    /// Dimension of the whole-tree symmetrized space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The uniform superposition in symmetrized coordinates.
    pub fn initial_state(&self) -> Vec<Complex64> {
        self.amp0.iter().map(|&a| Complex64::new(a, 0.0)).collect()
    }

    fn apply_cost(&self, psi: &mut [Complex64], gamma: f64) {
        let table: Vec<Complex64> = (0..=self.max_cut)
            .map(|k| Complex64::from_polar(1.0, -gamma * k as f64))
            .collect();
        for (a, &c) in psi.iter_mut().zip(&self.cut) {
            *a *= table[c as usize];
        }
    }

    /// Single-spin mixer gate as a 2x2 row-major matrix.
    fn mixer_seed(beta: f64) -> [Complex64; 4] {
        let c = Complex64::new(beta.cos(), 0.0);
        let s = Complex64::new(0.0, -beta.sin());
        [c, s, s, c]
    }

    /// Half-tree mixer at level `p` for angle `beta`, built bottom-up: the
    /// root gate tensored with the symmetric square of the child mixer.
    fn mixer_matrix(&self, beta: f64) -> Vec<Complex64> {
        let seed = Self::mixer_seed(beta);
        let mut m: Vec<Complex64> = seed.to_vec();
        let mut dim = 2;
        for _ in 0..self.p {
            let s = sym2_matrix(&m, dim);
            let pc = pair_count(dim);
            dim = 2 * pc;
            let mut next = vec![Complex64::new(0.0, 0.0); dim * dim];
            for bi in 0..2 {
                for bj in 0..2 {
                    let f = seed[bi * 2 + bj];
                    for r in 0..pc {
                        let row = (bi * pc + r) * dim + bj * pc;
                        let src = r * pc;
                        for c in 0..pc {
                            next[row + c] = f * s[src + c];
                        }
                    }
                }
            }
            m = next;
        }
        m
    }

    /// Applies the full-tree mixer: lift the pair vector to a symmetric
    /// matrix X over half-tree states, conjugate by the (complex symmetric)
    /// half-tree mixer, and read the pair coordinates back.
    fn apply_mixer(&self, psi: &mut [Complex64], beta: f64) {
        let d = self.levels[self.p].dim;
        let m = self.mixer_matrix(beta);
        let x = lift(psi, d);
        let t = matmul(&m, &x, d);
        let x2 = matmul(&t, &m, d);
        unlift(&x2, d, psi);
    }

    /// Probability that the center edge is cut.
    fn measure(&self, psi: &[Complex64]) -> f64 {
        // Kahan summation: the top space has 1.6M terms at p = 3.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (a, &c) in psi.iter().zip(&self.center) {
            if c != 0 {
                let term = a.norm_sqr() - comp;
                let t = sum + term;
                comp = (t - sum) - term;
                sum = t;
            }
        }
        sum
    }

    /// Center-edge expectation after depth-many QAOA layers.
    pub fn expectation(&self, angles: &Angles) -> Result<f64> {
        if angles.p() != self.p {
            return Err(Error::invalid(format!(
                "angle depth {} does not match tree depth {}",
                angles.p(),
                self.p
            )));
        }
        let mut psi = self.initial_state();
        for l in 0..self.p {
            self.apply_cost(&mut psi, angles.gammas()[l]);
            self.apply_mixer(&mut psi, angles.betas()[l]);
        }
        Ok(self.measure(&psi))
    }

    /// Expectation and its gradient in stacked order, by the adjoint
    /// reverse sweep. Supported for `p <= 2`; the depth-3 generator dot
    /// products are affordable too, but nothing needs them.
    pub fn expectation_gradient(&self, angles: &Angles) -> Result<(f64, Vec<f64>)> {
        if angles.p() != self.p {
            return Err(Error::invalid(format!(
                "angle depth {} does not match tree depth {}",
                angles.p(),
                self.p
            )));
        }
        if self.p > 2 {
            return Err(Error::capacity(
                "tree gradients are supported up to depth 2".to_string(),
            ));
        }
        let p = self.p;
        let mut psi = self.initial_state();
        for l in 0..p {
            self.apply_cost(&mut psi, angles.gammas()[l]);
            self.apply_mixer(&mut psi, angles.betas()[l]);
        }
        let f = self.measure(&psi);
        let mut chi: Vec<Complex64> = psi
            .iter()
            .zip(&self.center)
            .map(|(a, &c)| if c != 0 { *a } else { Complex64::new(0.0, 0.0) })
            .collect();
        let d = self.levels[p].dim;
        let gen = self.generator_matrix();
        let mut grad_g = vec![0.0; p];
        let mut grad_b = vec![0.0; p];
        for l in (0..p).rev() {
            // Mixer Hamiltonian dot via the matrix lift: B X + X B.
            let x_psi = lift(&psi, d);
            let x_chi = lift(&chi, d);
            let y = generator_apply(&gen, &x_psi, d);
            let mut dot = Complex64::new(0.0, 0.0);
            for k in 0..d * d {
                dot += x_chi[k].conj() * y[k];
            }
            grad_b[l] = 2.0 * dot.im;
            self.apply_mixer(&mut psi, -angles.betas()[l]);
            self.apply_mixer(&mut chi, -angles.betas()[l]);
            let mut dot = Complex64::new(0.0, 0.0);
            for k in 0..self.dim {
                dot += self.cut[k] as f64 * chi[k].conj() * psi[k];
            }
            grad_g[l] = 2.0 * dot.im;
            self.apply_cost(&mut psi, -angles.gammas()[l]);
            self.apply_cost(&mut chi, -angles.gammas()[l]);
        }
        grad_g.append(&mut grad_b);
        Ok((f, grad_g))
    }

    /// Half-tree mixer Hamiltonian at level `p` (real symmetric): the sum
    /// of every vertex's spin-flip generator, built by the same recursion
    /// as the mixer itself.
    fn generator_matrix(&self) -> Vec<f64> {
        let mut b = vec![0.0, 1.0, 1.0, 0.0];
        let mut dim = 2;
        for _ in 0..self.p {
            let s = sym2_generator(&b, dim);
            let pc = pair_count(dim);
            let next_dim = 2 * pc;
            let mut next = vec![0.0; next_dim * next_dim];
            // Root generator: spin flip, identity on the child pair.
            for s_bit in 0..2 {
                for q in 0..pc {
                    next[(s_bit * pc + q) * next_dim + ((1 - s_bit) * pc + q)] = 1.0;
                }
            }
            // Child generators act block-diagonally.
            for s_bit in 0..2 {
                for r in 0..pc {
                    let row = (s_bit * pc + r) * next_dim + s_bit * pc;
                    let src = r * pc;
                    for c in 0..pc {
                        next[row + c] += s[src + c];
                    }
                }
            }
            b = next;
            dim = next_dim;
        }
        b
    }
}

/// Symmetric square of a matrix on the orthonormal pair basis
/// (distinct pairs carry the 1/sqrt(2) normalization).
fn sym2_matrix(m: &[Complex64], d: usize) -> Vec<Complex64> {
    let pc = pair_count(d);
    let mut s = vec![Complex64::new(0.0, 0.0); pc * pc];
    let at = |a: usize, c: usize| m[a * d + c];
    let mut row = 0;
    for a in 0..d {
        for b in a..d {
            let mut col = 0;
            for c in 0..d {
                for e in c..d {
                    let v = if a < b && c < e {
                        at(a, c) * at(b, e) + at(a, e) * at(b, c)
                    } else if a == b && c < e {
                        at(a, c) * at(a, e) * SQRT_2
                    } else if a < b {
                        at(a, c) * at(b, c) * SQRT_2
                    } else {
                        at(a, c) * at(a, c)
                    };
                    s[row * pc + col] = v;
                    col += 1;
                }
            }
            row += 1;
        }
    }
    s
}

/// Symmetric-square lift of a Hamiltonian: acts on either pair member.
fn sym2_generator(b: &[f64], d: usize) -> Vec<f64> {
    let pc = pair_count(d);
    let mut s = vec![0.0; pc * pc];
    let at = |a: usize, c: usize| b[a * d + c];
    let delta = |a: usize, c: usize| if a == c { 1.0 } else { 0.0 };
    let mut row = 0;
    for a in 0..d {
        for bb in a..d {
            let mut col = 0;
            for c in 0..d {
                for e in c..d {
                    let v = if a < bb && c < e {
                        at(a, c) * delta(bb, e)
                            + delta(a, c) * at(bb, e)
                            + at(a, e) * delta(bb, c)
                            + delta(a, e) * at(bb, c)
                    } else if a == bb && c < e {
                        SQRT_2 * (at(a, c) * delta(a, e) + delta(a, c) * at(a, e))
                    } else if a < bb {
                        SQRT_2 * (at(a, c) * delta(bb, c) + delta(a, c) * at(bb, c))
                    } else {
                        2.0 * delta(a, c) * at(a, c)
                    };
                    s[row * pc + col] = v;
                    col += 1;
                }
            }
            row += 1;
        }
    }
    s
}

/// Expands pair coordinates into the symmetric matrix over half-tree
/// states (the isometric lift: off-diagonal mass splits across X_ij, X_ji).
fn lift(psi: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut x = vec![Complex64::new(0.0, 0.0); d * d];
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let v = psi[k];
            k += 1;
            if i == j {
                x[i * d + i] = v;
            } else {
                let w = v * FRAC_1_SQRT_2;
                x[i * d + j] = w;
                x[j * d + i] = w;
            }
        }
    }
    x
}

/// Inverse of [`lift`].
fn unlift(x: &[Complex64], d: usize, psi: &mut [Complex64]) {
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            psi[k] = if i == j { x[i * d + i] } else { x[i * d + j] * SQRT_2 };
            k += 1;
        }
    }
}

/// Y = B X + X B for real symmetric B and complex X, both d x d row-major.
fn generator_apply(b: &[f64], x: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            let bik = b[i * d + k];
            if bik == 0.0 {
                continue;
            }
            for j in 0..d {
                y[i * d + j] += bik * x[k * d + j];
            }
        }
    }
    for i in 0..d {
        for k in 0..d {
            let xik = x[i * d + k];
            if xik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                y[i * d + j] += xik * b[k * d + j];
            }
        }
    }
    y
}

/// C = A * B for square row-major complex matrices; large products go
/// through the blocked gemm kernel.
fn matmul(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    if n <= 128 {
        for i in 0..n {
            for k in 0..n {
                let aik = a[i * n + k];
                if aik == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += aik * b[k * n + j];
                }
            }
        }
    } else {
        // Complex64 is repr(C) { re, im }, layout-identical to [f64; 2].
        unsafe {
            matrixmultiply::zgemm(
                matrixmultiply::CGemmOption::Standard,
                matrixmultiply::CGemmOption::Standard,
                n,
                n,
                n,
                [1.0, 0.0],
                a.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                b.as_ptr() as *const [f64; 2],
                n as isize,
                1,
                [0.0, 0.0],
                out.as_mut_ptr() as *mut [f64; 2],
                n as isize,
                1,
            );
        }
    }
    out
}

/// Center-edge expectation on the depth-p tree.
pub fn tree_edge_expectation(p: usize, angles: &Angles) -> Result<f64> {
    TreeBasis::new(p)?.expectation(angles)
}

/// Expectation and stacked gradient on the depth-p tree (`p <= 2`).
pub fn tree_edge_expectation_gradient(p: usize, angles: &Angles) -> Result<(f64, Vec<f64>)> {
    TreeBasis::new(p)?.expectation_gradient(angles)
}

/// The tree expectation as an optimizer objective.
pub struct TreeObjective {
    basis: TreeBasis,
}

impl TreeObjective {
    /// Objective for the depth-p tree (`p <= 2`, gradients required).
    pub fn new(p: usize) -> Result<TreeObjective> {
        if p > 2 {
            return Err(Error::capacity(
                "tree objective needs gradients, supported up to depth 2".to_string(),
            ));
        }
        Ok(TreeObjective { basis: TreeBasis::new(p)? })
    }
}

impl Objective for TreeObjective {
    fn layers(&self) -> usize {
        self.basis.depth()
    }

    fn eval_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.basis.expectation_gradient(&Angles::from_stacked(x)?)
    }
}
