//! Named model structures.
//!
//! Perturbations are realized as conjugation `Phi = S J0 S^{-1}` by a field of
//! symplectic shears in the Lagrangian splitting `q = (x^1, x^3)`,
//! `p = (x^2, x^4)`:
//!
//! ```text
//!     S = [[1, eps B], [0, 1]] * [[1, 0], [eps C, 1]]      (in (q, p) blocks)
//! ```
//!
//! with `B`, `C` symmetric and band-limited. `Phi` is then a polynomial in the
//! entries of `B` and `C`, so it stays exactly band-limited and every discrete
//! identity can be checked near roundoff. To first order in `eps` this is
//! `J0 + eps T` with the tangent noise `T = [B^ + C^, J0]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{KError, Result};
use crate::grid::{Grid, ScalarField, TrigField};
use crate::linalg;
use crate::structure::{standard_j, standard_omega, KContactStructure};

/// Index of the axis carrying `q_i` / `p_i`.
fn q_axis(i: usize) -> usize {
    2 * i
}
fn p_axis(i: usize) -> usize {
    2 * i + 1
}

/// Upper-triangular entries `(i, j)`, `i <= j`, of an `n x n` symmetric matrix.
fn sym_entries(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for i in 0..n {
        for j in i..n {
            v.push((i, j));
        }
    }
    v
}

/// A resolution-independent shear perturbation of the standard structure.
#[derive(Debug, Clone, Serialize)]
pub struct ShearPerturbation {
    pub n: usize,
    pub eps: f64,
    /// Upper-triangular entries of `B` and `C` (`sym_entries` order).
    pub b: Vec<TrigField>,
    pub c: Vec<TrigField>,
}

impl ShearPerturbation {
    /// Random symmetric `B`, `C` whose entries have sup-norm bound 1.
    pub fn random(n: usize, eps: f64, seed: u64, cutoff: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * n;
        let m = n * (n + 1) / 2;
        let b = (0..m).map(|_| TrigField::random(dim, cutoff, 1.0, false, &mut rng)).collect();
        let c = (0..m).map(|_| TrigField::random(dim, cutoff, 1.0, false, &mut rng)).collect();
        Self { n, eps, b, c }
    }

    /// Block-diagonal perturbation whose `k`-th block depends only on
    /// `(x^{2k-1}, x^{2k})`: a product of surface structures, hence integrable.
    pub fn random_product(n: usize, eps: f64, seed: u64, cutoff: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * n;
        let mut b = vec![TrigField::zero(dim, cutoff); n * (n + 1) / 2];
        let mut c = b.clone();
        for (k, &(i, j)) in sym_entries(n).iter().enumerate() {
            if i == j {
                let axes = [q_axis(i), p_axis(i)];
                b[k] = TrigField::random(dim, cutoff, 1.0, false, &mut rng).restricted_to(&axes);
                c[k] = TrigField::random(dim, cutoff, 1.0, false, &mut rng).restricted_to(&axes);
            }
        }
        Self { n, eps, b, c }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, ..self.clone() }
    }

    pub fn cutoff(&self) -> usize {
        self.b.iter().chain(&self.c).map(|f| f.cutoff()).max().unwrap_or(0)
    }

    fn sample_sym(&self, grid: &Grid, fields: &[TrigField]) -> Result<Vec<Vec<ScalarField>>> {
        let n = self.n;
        let mut m = vec![vec![ScalarField::zeros(grid); n]; n];
        for (f, &(i, j)) in fields.iter().zip(&sym_entries(n)) {
            let s = f.sample(grid)?.scale(self.eps);
            m[i][j] = s.clone();
            m[j][i] = s;
        }
        Ok(m)
    }

    /// Shear matrix field `S` and its inverse, point-major.
    fn shears(&self, grid: &Grid) -> Result<(Vec<f64>, Vec<f64>)> {
        if grid.n() != self.n {
            return Err(KError::GridMismatch);
        }
        let d = grid.dim();
        let n = self.n;
        let b = self.sample_sym(grid, &self.b)?;
        let c = self.sample_sym(grid, &self.c)?;
        let mut s = Vec::with_capacity(grid.points() * d * d);
        let mut s_inv = Vec::with_capacity(grid.points() * d * d);
        for p in 0..grid.points() {
            let mut upper = linalg::identity(d);
            let mut lower = linalg::identity(d);
            let mut upper_inv = linalg::identity(d);
            let mut lower_inv = linalg::identity(d);
            for i in 0..n {
                for j in 0..n {
                    let bij = b[i][j].values()[p];
                    let cij = c[i][j].values()[p];
                    upper[q_axis(i) * d + p_axis(j)] = bij;
                    upper_inv[q_axis(i) * d + p_axis(j)] = -bij;
                    lower[p_axis(i) * d + q_axis(j)] = cij;
                    lower_inv[p_axis(i) * d + q_axis(j)] = -cij;
                }
            }
            s.extend(linalg::matmul(&upper, &lower, d));
            s_inv.extend(linalg::matmul(&lower_inv, &upper_inv, d));
        }
        Ok((s, s_inv))
    }

    /// Fails when the linearized perturbation `J0 + eps T` already breaks
    /// positivity of `omega (J0 + eps T)` somewhere.
    pub fn check_positivity(&self, grid: &Grid) -> Result<()> {
        let d = grid.dim();
        let j0 = standard_j(d);
        let omega = standard_omega(d);
        let b = self.sample_sym(grid, &self.b)?;
        let c = self.sample_sym(grid, &self.c)?;
        for p in 0..grid.points() {
            let mut gen = vec![0.0; d * d];
            for i in 0..self.n {
                for j in 0..self.n {
                    gen[q_axis(i) * d + p_axis(j)] = b[i][j].values()[p];
                    gen[p_axis(i) * d + q_axis(j)] = c[i][j].values()[p];
                }
            }
            let t: Vec<f64> = linalg::matmul(&gen, &j0, d)
                .iter()
                .zip(linalg::matmul(&j0, &gen, d))
                .map(|(a, b)| a - b)
                .collect();
            let lin: Vec<f64> = j0.iter().zip(&t).map(|(a, b)| a + b).collect();
            let e = linalg::min_sym_eigenvalue(&linalg::matmul(&omega, &lin, d), d);
            if !(e > 0.0) {
                return Err(KError::PerturbationPositivity { point: p, min_eig: e });
            }
        }
        Ok(())
    }

    /// Raw `Phi = S J0 S^{-1}` without validation.
    pub fn phi(&self, grid: &Grid) -> Result<Vec<f64>> {
        let d = grid.dim();
        let j0 = standard_j(d);
        let (s, s_inv) = self.shears(grid)?;
        let mut phi = Vec::with_capacity(s.len());
        for (a, ai) in s.chunks_exact(d * d).zip(s_inv.chunks_exact(d * d)) {
            phi.extend(linalg::matmul(a, &linalg::matmul(&j0, ai, d), d));
        }
        Ok(phi)
    }

    /// The perturbed structure on `grid`.
    pub fn structure(&self, grid: &Grid) -> Result<KContactStructure> {
        self.check_positivity(grid)?;
        KContactStructure::new(grid, self.phi(grid)?)
    }
}

/// Flat Heisenberg model of dimension 3 (`n = 1`) or 5 (`n = 2`).
pub fn heisenberg(grid: &Grid) -> KContactStructure {
    KContactStructure::standard(grid)
}

/// Generic band-limited perturbation of the flat 5-dimensional model.
pub fn perturbed5(grid: &Grid, eps: f64, seed: u64, cutoff: usize) -> Result<KContactStructure> {
    if grid.n() != 2 {
        return Err(KError::Precondition("perturbed5 needs n = 2".into()));
    }
    ShearPerturbation::random(2, eps, seed, cutoff).structure(grid)
}

/// Amplitude and cutoff of the `random-j` preset.
pub const RANDOM_J_EPS: f64 = 0.3;
pub const RANDOM_J_CUTOFF: usize = 2;

/// Random compatible structure in real dimension 2 (automatically integrable).
pub fn random_j(grid: &Grid, seed: u64) -> Result<KContactStructure> {
    if grid.n() != 1 {
        return Err(KError::Precondition("random-j needs n = 1".into()));
    }
    ShearPerturbation::random(1, RANDOM_J_EPS, seed, RANDOM_J_CUTOFF).structure(grid)
}

/// Integrable product perturbation of the flat 5-dimensional model.
pub fn product5(grid: &Grid, eps: f64, seed: u64, cutoff: usize) -> Result<KContactStructure> {
    if grid.n() != 2 {
        return Err(KError::Precondition("product5 needs n = 2".into()));
    }
    ShearPerturbation::random_product(2, eps, seed, cutoff).structure(grid)
}
