//! Transverse K-contact data: the field `Phi`, the constant symplectic
//! matrix and the derived metric `g = omega Phi`.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{KError, Result};
use crate::grid::{Grid, ScalarField};
use crate::linalg;

/// Default pointwise tolerance for the structure invariants.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// The standard symplectic matrix, `omega(e_{2i-1}, e_{2i}) = 1`.
pub fn standard_omega(dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim * dim];
    for i in 0..dim / 2 {
        w[2 * i * dim + 2 * i + 1] = 1.0;
        w[(2 * i + 1) * dim + 2 * i] = -1.0;
    }
    w
}

/// The standard complex structure, `J0 e_{2i-1} = e_{2i}`.
pub fn standard_j(dim: usize) -> Vec<f64> {
    let mut j = vec![0.0; dim * dim];
    for i in 0..dim / 2 {
        j[(2 * i + 1) * dim + 2 * i] = 1.0;
        j[2 * i * dim + 2 * i + 1] = -1.0;
    }
    j
}

/// Pointwise residuals of the structure invariants (max over the grid).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StructureResiduals {
    pub phi_squared: f64,
    pub metric_symmetry: f64,
    pub omega_invariance: f64,
    pub min_metric_eigenvalue: f64,
    pub min_eigenvalue_point: usize,
}

#[derive(Clone)]
pub struct KContactStructure {
    grid: Grid,
    /// Row-major `Phi^r_c` per point.
    phi: Vec<f64>,
    omega: Vec<f64>,
    omega_inv: Vec<f64>,
    metric: Vec<f64>,
    metric_inv: Vec<f64>,
    density: ScalarField,
    dphi: OnceLock<Vec<Vec<f64>>>,
    /// Per degree: compound matrices of `Phi` and of `g^{-1}`, point-major.
    phi_compounds: Vec<OnceLock<Vec<f64>>>,
    gram_compounds: Vec<OnceLock<Vec<f64>>>,
}

impl fmt::Debug for KContactStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KContactStructure").field("grid", &self.grid).finish()
    }
}

impl KContactStructure {
    /// Validates `phi` against all invariants at the default tolerance.
    pub fn new(grid: &Grid, phi: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(grid, phi, STRUCTURE_TOL)
    }

    pub fn with_tolerance(grid: &Grid, phi: Vec<f64>, tol: f64) -> Result<Self> {
        let s = Self::unchecked(grid, phi);
        s.validate(tol)?;
        Ok(s)
    }

    /// Builds the derived fields without validation.
    pub fn unchecked(grid: &Grid, phi: Vec<f64>) -> Self {
        let d = grid.dim();
        assert_eq!(phi.len(), grid.points() * d * d, "Phi field has wrong length");
        let omega = standard_omega(d);
        let omega_inv = linalg::transpose(&omega, d);
        let mut metric = Vec::with_capacity(phi.len());
        let mut metric_inv = Vec::with_capacity(phi.len());
        let mut density = Vec::with_capacity(grid.points());
        for m in phi.chunks_exact(d * d) {
            let g = linalg::matmul(&omega, m, d);
            // g^{-1} = -Phi omega^{-1} whenever Phi is compatible; the general
            // inverse keeps invalid inputs diagnosable.
            let gi = linalg::inverse(&g, d).unwrap_or_else(|| vec![f64::NAN; d * d]);
            density.push(linalg::det(&g, d).abs().sqrt());
            metric.extend_from_slice(&g);
            metric_inv.extend_from_slice(&gi);
        }
        Self {
            grid: grid.clone(),
            phi,
            omega,
            omega_inv,
            metric,
            metric_inv,
            density: ScalarField::from_vec(grid, density),
            dphi: OnceLock::new(),
            phi_compounds: (0..=d).map(|_| OnceLock::new()).collect(),
            gram_compounds: (0..=d).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Constant `Phi = J0`.
    pub fn standard(grid: &Grid) -> Self {
        let j = standard_j(grid.dim());
        let mut phi = Vec::with_capacity(grid.points() * j.len());
        for _ in 0..grid.points() {
            phi.extend_from_slice(&j);
        }
        Self::unchecked(grid, phi)
    }

    pub fn residuals(&self) -> StructureResiduals {
        let d = self.dim();
        let id = linalg::identity(d);
        let mut r = StructureResiduals {
            phi_squared: 0.0,
            metric_symmetry: 0.0,
            omega_invariance: 0.0,
            min_metric_eigenvalue: f64::INFINITY,
            min_eigenvalue_point: 0,
        };
        for p in 0..self.grid.points() {
            let m = self.phi_at(p);
            let sq = linalg::matmul(m, m, d);
            r.phi_squared = r.phi_squared.max(sq.iter().zip(&id).fold(0.0, |a, (x, y)| a.max((x + y).abs())));
            let g = self.metric_at(p);
            for i in 0..d {
                for j in 0..d {
                    r.metric_symmetry = r.metric_symmetry.max((g[i * d + j] - g[j * d + i]).abs());
                }
            }
            let pull = linalg::matmul(&linalg::transpose(m, d), &linalg::matmul(&self.omega, m, d), d);
            r.omega_invariance =
                r.omega_invariance.max(pull.iter().zip(&self.omega).fold(0.0, |a, (x, y)| a.max((x - y).abs())));
            let e = linalg::min_sym_eigenvalue(g, d);
            if e < r.min_metric_eigenvalue {
                r.min_metric_eigenvalue = e;
                r.min_eigenvalue_point = p;
            }
        }
        r
    }

    /// Checks `Phi^2 = -1`, symmetry and positivity of `g`, and
    /// `omega(Phi., Phi.) = omega`, relative to the size of `Phi`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.phi.iter().all(|v| v.is_finite()) {
            return Err(KError::Invariant { what: "finite Phi", residual: f64::NAN, point: 0 });
        }
        let scale = linalg::max_abs(&self.phi).max(1.0).powi(2);
        let r = self.residuals();
        let checks = [
            ("Phi^2 = -Id", r.phi_squared),
            ("metric symmetry", r.metric_symmetry),
            ("omega(Phi., Phi.) = omega", r.omega_invariance),
        ];
        for (what, residual) in checks {
            if !(residual <= tol * scale) {
                return Err(KError::Invariant { what, residual, point: 0 });
            }
        }
        if !(r.min_metric_eigenvalue > 0.0) {
            return Err(KError::NotPositive { point: r.min_eigenvalue_point, min_eig: r.min_metric_eigenvalue });
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn n(&self) -> usize {
        self.grid.n()
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
    pub fn phi_at(&self, p: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.phi[p * dd..(p + 1) * dd]
    }
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }
    pub fn omega_inv(&self) -> &[f64] {
        &self.omega_inv
    }
    pub fn metric(&self) -> &[f64] {
        &self.metric
    }
    pub fn metric_at(&self, p: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.metric[p * dd..(p + 1) * dd]
    }
    pub fn metric_inv_at(&self, p: usize) -> &[f64] {
        let dd = self.dim() * self.dim();
        &self.metric_inv[p * dd..(p + 1) * dd]
    }
    /// `sqrt(det g)` relative to the coordinate volume (identically 1 for
    /// compatible structures, since `det g = det omega det Phi`).
    pub fn volume_density(&self) -> &ScalarField {
        &self.density
    }

    /// Component `Phi^r_c` as a scalar field.
    pub fn phi_component(&self, r: usize, c: usize) -> ScalarField {
        let d = self.dim();
        ScalarField::from_vec(&self.grid, self.phi.iter().skip(r * d + c).step_by(d * d).copied().collect())
    }

    /// `d_axis Phi`, point-major like `phi`.
    pub fn dphi(&self, axis: usize) -> &[f64] {
        &self.dphi.get_or_init(|| derivative_of_matrix_field(&self.grid, &self.phi))[axis]
    }

    /// `p`-th compound matrices of `Phi`, `k x k` per point.
    pub fn phi_compound(&self, p: usize) -> &[f64] {
        self.phi_compounds[p].get_or_init(|| compound_field(&self.phi, self.dim(), p))
    }

    /// `p`-th compound matrices of `g^{-1}`: the Gram matrices of the induced
    /// inner product on `p`-forms.
    pub fn gram_compound(&self, p: usize) -> &[f64] {
        self.gram_compounds[p].get_or_init(|| compound_field(&self.metric_inv, self.dim(), p))
    }

    /// True when `Phi` is the same matrix at every point.
    pub fn is_constant(&self) -> bool {
        let first = self.phi_at(0);
        self.phi.chunks_exact(first.len()).all(|m| m.iter().zip(first).all(|(a, b)| (a - b).abs() < 1e-14))
    }

    /// Smallest eigenvalue of `g` over the grid.
    pub fn min_metric_eigenvalue(&self) -> f64 {
        let d = self.dim();
        self.metric.chunks_exact(d * d).map(|g| linalg::min_sym_eigenvalue(g, d)).fold(f64::INFINITY, f64::min)
    }

    /// Fourier resampling of every entry followed by the polar retraction.
    pub fn resample(&self, target: &Grid) -> Result<Self> {
        if target.same_as(&self.grid) {
            return Ok(self.clone());
        }
        if target.n() != self.n() {
            return Err(KError::GridMismatch);
        }
        let d = self.dim();
        let mut phi = vec![0.0; target.points() * d * d];
        for c in 0..d * d {
            let f = ScalarField::from_vec(&self.grid, self.phi.iter().skip(c).step_by(d * d).copied().collect());
            for (p, v) in f.resample(target).values().iter().enumerate() {
                phi[p * d * d + c] = *v;
            }
        }
        Self::new(target, polar_retraction(target.dim(), &phi)?)
    }

    /// The structure pulled back by the grid translation `x -> x + shift h`.
    pub fn translated(&self, shift: &[usize]) -> Self {
        let dd = self.dim() * self.dim();
        let mut phi = vec![0.0; self.phi.len()];
        for p in 0..self.grid.points() {
            let q = self.grid.shifted_index(p, shift);
            phi[p * dd..(p + 1) * dd].copy_from_slice(self.phi_at(q));
        }
        Self::unchecked(&self.grid, phi)
    }
}

fn compound_field(field: &[f64], d: usize, p: usize) -> Vec<f64> {
    let k = crate::forms::binomial(d, p);
    let mut out = vec![0.0; field.len() / (d * d) * k * k];
    for (m, o) in field.chunks_exact(d * d).zip(out.chunks_exact_mut(k * k)) {
        crate::forms::compound(m, d, p, o);
    }
    out
}

/// Spatial derivatives of a point-major matrix field, one vector per axis.
pub fn derivative_of_matrix_field(grid: &Grid, field: &[f64]) -> Vec<Vec<f64>> {
    let dd = field.len() / grid.points();
    (0..grid.dim())
        .map(|axis| {
            let mut out = vec![0.0; field.len()];
            for c in 0..dd {
                if field.iter().skip(c).step_by(dd).all(|&v| v == field[c]) {
                    continue;
                }
                for (p, v) in grid.derivative_strided(field, dd, c, axis).into_iter().enumerate() {
                    out[p * dd + c] = v;
                }
            }
            out
        })
        .collect()
}

/// Projects a field of matrices close to the compatible cone onto it.
///
/// With `g~ = sym(omega Phi~)` and `P = g~^{1/2}`, the matrix
/// `W = P omega^{-1} P` is antisymmetric and
/// `J = P^{-1} W (W^T W)^{-1/2} P` is the `omega`-compatible factor of
/// `omega^{-1} g~`; compatible inputs are returned unchanged.
pub fn polar_retraction(dim: usize, phi: &[f64]) -> Result<Vec<f64>> {
    let d = dim;
    let omega = standard_omega(d);
    let omega_inv = linalg::transpose(&omega, d);
    let mut out = Vec::with_capacity(phi.len());
    for (p, m) in phi.chunks_exact(d * d).enumerate() {
        let g = linalg::matmul(&omega, m, d);
        let min = linalg::min_sym_eigenvalue(&g, d);
        if !(min > 0.0) {
            return Err(KError::NotPositive { point: p, min_eig: min });
        }
        let sym: Vec<f64> = (0..d * d).map(|k| 0.5 * (g[k] + g[(k % d) * d + k / d])).collect();
        let half = linalg::spd_power(&sym, d, 0.5).expect("positive");
        let half_inv = linalg::spd_power(&sym, d, -0.5).expect("positive");
        let w = linalg::matmul(&half, &linalg::matmul(&omega_inv, &half, d), d);
        let wtw = linalg::matmul(&linalg::transpose(&w, d), &w, d);
        let root = linalg::spd_power(&wtw, d, -0.5).ok_or(KError::NotPositive { point: p, min_eig: 0.0 })?;
        let j = linalg::matmul(&half_inv, &linalg::matmul(&w, &linalg::matmul(&root, &half, d), d), d);
        out.extend_from_slice(&j);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DerivativeMode, TransverseGrid};

    #[test]
    fn standard_structure_is_flat_and_valid() {
        let grid = TransverseGrid::new(2, 8, DerivativeMode::Spectral).unwrap();
        let s = KContactStructure::standard(&grid);
        s.validate(1e-14).unwrap();
        assert!(s.metric_at(3).iter().zip(&linalg::identity(4)).all(|(a, b)| a == b));
        assert!(s.volume_density().values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(s.is_constant());
    }

    #[test]
    fn rejects_incompatible_phi() {
        let grid = TransverseGrid::new(1, 8, DerivativeMode::Spectral).unwrap();
        // Phi = -J0 squares to -1 but pairs negatively with omega.
        let phi: Vec<f64> = (0..64).flat_map(|_| [0.0, 1.0, -1.0, 0.0]).collect();
        assert!(matches!(KContactStructure::new(&grid, phi), Err(KError::NotPositive { .. })));
        let phi: Vec<f64> = (0..64).flat_map(|_| [0.0, -1.0, 1.5, 0.0]).collect();
        assert!(matches!(KContactStructure::new(&grid, phi), Err(KError::Invariant { .. })));
    }

    #[test]
    fn polar_retraction_fixes_compatible_and_repairs_noise() {
        let d = 4;
        let j = standard_j(d);
        let back = polar_retraction(d, &j).unwrap();
        assert!(back.iter().zip(&j).all(|(a, b)| (a - b).abs() < 1e-14));
        let noisy: Vec<f64> = j.iter().enumerate().map(|(k, v)| v + 0.05 * ((k * 7 % 5) as f64 - 2.0)).collect();
        let r = polar_retraction(d, &noisy).unwrap();
        let sq = linalg::matmul(&r, &r, d);
        assert!(sq.iter().zip(&linalg::identity(d)).all(|(a, b)| (a + b).abs() < 1e-12));
        let g = linalg::matmul(&standard_omega(d), &r, d);
        assert!((0..16).all(|k| (g[k] - g[(k % 4) * 4 + k / 4]).abs() < 1e-12));
    }
}
