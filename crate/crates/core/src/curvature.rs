//! Transverse Levi-Civita and Hermitian connections, their curvature, the
//! Hermitian Ricci form and scalar curvature, and the first variation of the
//! scalar curvature along a tangent deformation.
//!
//! Rank-3 fields are point-major with `A^k_{ij}` (coefficient of `e_k` in
//! `nabla_{e_i} e_j`) at offset `(k d + i) d + j`; the curvature
//! `R^l_{k ij}` (component `l` of `R(e_i, e_j) e_k`) sits at
//! `((l d + k) d + i) d + j`.

use serde::Serialize;

use crate::calculus::lefschetz_lambda;
use crate::error::{KError, Result};
use crate::forms::{BasicForm, IndexTables};
use crate::grid::{Grid, ScalarField};
use crate::linalg;
use crate::moment::TangentDeformation;
use crate::structure::{derivative_of_matrix_field, KContactStructure};

/// `rho(e_i, e_j) = RICCI_TRACE_FACTOR * trace(Phi R(e_i, e_j))`. Fixed by
/// requiring `s = 2 Lambda rho` to equal the Riemannian scalar curvature of
/// Kähler surfaces (checked in the tests).
pub const RICCI_TRACE_FACTOR: f64 = 0.5;

/// Torsion of the Hermitian connection in units of the transverse
/// Nijenhuis tensor, `T = TORSION_NIJENHUIS_FACTOR * N`.
pub const TORSION_NIJENHUIS_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConnectionKind {
    LeviCivita,
    Hermitian,
}

#[derive(Debug, Clone)]
pub struct ConnectionField {
    grid: Grid,
    kind: ConnectionKind,
    coeffs: Vec<f64>,
}

impl ConnectionField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kind(&self) -> ConnectionKind {
        self.kind
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `A^k_{ij}` at a point.
    pub fn at(&self, pt: usize, k: usize, i: usize, j: usize) -> f64 {
        let d = self.grid.dim();
        self.coeffs[pt * d * d * d + (k * d + i) * d + j]
    }

    /// Largest `|A^k_{ij} - A^k_{ji}|`.
    pub fn torsion_max(&self) -> f64 {
        let d = self.grid.dim();
        let mut m: f64 = 0.0;
        for c in self.coeffs.chunks_exact(d * d * d) {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..i {
                        m = m.max((c[(k * d + i) * d + j] - c[(k * d + j) * d + i]).abs());
                    }
                }
            }
        }
        m
    }

    /// Torsion `T^k_{ij} = A^k_{ij} - A^k_{ji}` at a point.
    pub fn torsion(&self, pt: usize, k: usize, i: usize, j: usize) -> f64 {
        self.at(pt, k, i, j) - self.at(pt, k, j, i)
    }

    /// Largest component of `nabla g` for a point-major metric field.
    pub fn metric_residual(&self, metric: &[f64]) -> f64 {
        let d = self.grid.dim();
        let dg = derivative_of_matrix_field(&self.grid, metric);
        let mut m: f64 = 0.0;
        for pt in 0..self.grid.points() {
            let g = &metric[pt * d * d..(pt + 1) * d * d];
            let a = &self.coeffs[pt * d * d * d..(pt + 1) * d * d * d];
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let mut v = dg[i][pt * d * d + j * d + k];
                        for l in 0..d {
                            v -= a[(l * d + i) * d + j] * g[l * d + k] + a[(l * d + i) * d + k] * g[j * d + l];
                        }
                        m = m.max(v.abs());
                    }
                }
            }
        }
        m
    }

    /// `(nabla_i T)^k_j` for a point-major `(1,1)` tensor field, laid out as
    /// one matrix field per direction `i`.
    pub fn covariant_derivative(&self, field: &[f64]) -> Vec<Vec<f64>> {
        let d = self.grid.dim();
        let dt = derivative_of_matrix_field(&self.grid, field);
        (0..d)
            .map(|i| {
                let mut out = dt[i].clone();
                for pt in 0..self.grid.points() {
                    let t = &field[pt * d * d..(pt + 1) * d * d];
                    let a = &self.coeffs[pt * d * d * d..(pt + 1) * d * d * d];
                    let o = &mut out[pt * d * d..(pt + 1) * d * d];
                    for k in 0..d {
                        for j in 0..d {
                            let mut v = 0.0;
                            for l in 0..d {
                                v += a[(k * d + i) * d + l] * t[l * d + j] - t[k * d + l] * a[(l * d + i) * d + j];
                            }
                            o[k * d + j] += v;
                        }
                    }
                }
                out
            })
            .collect()
    }

    /// `R^l_{k ij} = d_i A^l_{jk} - d_j A^l_{ik} + A^l_{im} A^m_{jk} - A^l_{jm} A^m_{ik}`.
    pub fn curvature(&self) -> Vec<f64> {
        let d = self.grid.dim();
        let d3 = d * d * d;
        let da = derivative_of_matrix_field(&self.grid, &self.coeffs);
        let mut r = vec![0.0; self.grid.points() * d3 * d];
        for pt in 0..self.grid.points() {
            let a = &self.coeffs[pt * d3..(pt + 1) * d3];
            let out = &mut r[pt * d3 * d..(pt + 1) * d3 * d];
            let idx = |k: usize, i: usize, j: usize| (k * d + i) * d + j;
            for l in 0..d {
                for k in 0..d {
                    for i in 0..d {
                        for j in 0..d {
                            let mut v = da[i][pt * d3 + idx(l, j, k)] - da[j][pt * d3 + idx(l, i, k)];
                            for m in 0..d {
                                v += a[idx(l, i, m)] * a[idx(m, j, k)] - a[idx(l, j, m)] * a[idx(m, i, k)];
                            }
                            out[((l * d + k) * d + i) * d + j] = v;
                        }
                    }
                }
            }
        }
        r
    }
}

/// Levi-Civita connection of an arbitrary point-major metric field.
pub fn christoffel_of_metric(grid: &Grid, metric: &[f64]) -> Result<ConnectionField> {
    let d = grid.dim();
    let dg = derivative_of_matrix_field(grid, metric);
    let mut coeffs = vec![0.0; grid.points() * d * d * d];
    for pt in 0..grid.points() {
        let g = &metric[pt * d * d..(pt + 1) * d * d];
        let min = linalg::min_sym_eigenvalue(g, d);
        if !(min > 0.0) {
            return Err(KError::NotPositive { point: pt, min_eig: min });
        }
        let gi = linalg::inverse(g, d).ok_or(KError::NotPositive { point: pt, min_eig: 0.0 })?;
        let dgp = |a: usize, r: usize, c: usize| dg[a][pt * d * d + r * d + c];
        // first kind: [ij, l] = (d_i g_jl + d_j g_il - d_l g_ij) / 2
        let mut first = vec![0.0; d * d * d];
        // filled for j <= i and mirrored, so the symmetry in (i, j) is exact
        for i in 0..d {
            for j in 0..=i {
                for l in 0..d {
                    let v = 0.5 * (dgp(i, j, l) + dgp(j, i, l) - dgp(l, i, j));
                    first[(i * d + j) * d + l] = v;
                    first[(j * d + i) * d + l] = v;
                }
            }
        }
        let out = &mut coeffs[pt * d * d * d..(pt + 1) * d * d * d];
        for k in 0..d {
            for i in 0..d {
                for j in 0..d {
                    out[(k * d + i) * d + j] = (0..d).map(|l| gi[k * d + l] * first[(i * d + j) * d + l]).sum();
                }
            }
        }
    }
    Ok(ConnectionField { grid: grid.clone(), kind: ConnectionKind::LeviCivita, coeffs })
}

/// Transverse Levi-Civita connection of `g = omega Phi`.
pub fn christoffel(s: &KContactStructure) -> Result<ConnectionField> {
    christoffel_of_metric(s.grid(), s.metric())
}

/// `nabla-bar_X Y = D_X Y - 1/2 Phi (D_X Phi) Y`.
pub fn hermitian_connection(s: &KContactStructure, lc: &ConnectionField) -> Result<ConnectionField> {
    if lc.kind != ConnectionKind::LeviCivita {
        return Err(KError::Precondition("Hermitian connection needs the Levi-Civita connection".into()));
    }
    if !lc.grid.same_as(s.grid()) {
        return Err(KError::GridMismatch);
    }
    let d = s.dim();
    let dphi = lc.covariant_derivative(s.phi());
    let mut coeffs = lc.coeffs.clone();
    for pt in 0..s.grid().points() {
        let phi = s.phi_at(pt);
        let out = &mut coeffs[pt * d * d * d..(pt + 1) * d * d * d];
        for i in 0..d {
            let di = &dphi[i][pt * d * d..(pt + 1) * d * d];
            let corr = linalg::matmul(phi, di, d);
            for k in 0..d {
                for j in 0..d {
                    out[(k * d + i) * d + j] -= 0.5 * corr[k * d + j];
                }
            }
        }
    }
    Ok(ConnectionField { grid: lc.grid.clone(), kind: ConnectionKind::Hermitian, coeffs })
}

/// Largest component of `nabla Phi` for the given connection.
pub fn phi_parallel_residual(s: &KContactStructure, conn: &ConnectionField) -> f64 {
    conn.covariant_derivative(s.phi()).iter().map(|v| linalg::max_abs(v)).fold(0.0, f64::max)
}

/// Cyclic sum `R^l_{k ij} + R^l_{i jk} + R^l_{j ki}` relative to `max |R|`.
pub fn first_bianchi_residual(grid: &Grid, r: &[f64]) -> f64 {
    let d = grid.dim();
    let d4 = d * d * d * d;
    let idx = |l: usize, k: usize, i: usize, j: usize| ((l * d + k) * d + i) * d + j;
    let mut m: f64 = 0.0;
    for c in r.chunks_exact(d4) {
        for l in 0..d {
            for k in 0..d {
                for i in 0..d {
                    for j in 0..d {
                        m = m.max((c[idx(l, k, i, j)] + c[idx(l, i, j, k)] + c[idx(l, j, k, i)]).abs());
                    }
                }
            }
        }
    }
    m / linalg::max_abs(r).max(f64::MIN_POSITIVE)
}

/// Scalar curvature `g^{kj} R^i_{k ij}` of a point-major metric field.
pub fn riemannian_scalar_of_metric(grid: &Grid, metric: &[f64]) -> Result<ScalarField> {
    let d = grid.dim();
    let lc = christoffel_of_metric(grid, metric)?;
    let r = lc.curvature();
    let d4 = d * d * d * d;
    let mut out = Vec::with_capacity(grid.points());
    for pt in 0..grid.points() {
        let g = &metric[pt * d * d..(pt + 1) * d * d];
        let gi = linalg::inverse(g, d).ok_or(KError::NotPositive { point: pt, min_eig: 0.0 })?;
        let c = &r[pt * d4..(pt + 1) * d4];
        let mut s = 0.0;
        for k in 0..d {
            for j in 0..d {
                let ric: f64 = (0..d).map(|i| c[((i * d + k) * d + i) * d + j]).sum();
                s += gi[k * d + j] * ric;
            }
        }
        out.push(s);
    }
    Ok(ScalarField::from_vec(grid, out))
}

/// Riemannian scalar curvature of the transverse metric (oracle path).
pub fn riemannian_transverse_scalar(s: &KContactStructure) -> Result<ScalarField> {
    riemannian_scalar_of_metric(s.grid(), s.metric())
}

#[derive(Debug, Clone)]
pub struct CurvatureReport {
    /// Hermitian Ricci form.
    pub rho: BasicForm,
    /// Hermitian scalar curvature `2 Lambda rho`.
    pub scalar: ScalarField,
    pub riemannian: Option<ScalarField>,
}

/// Hermitian Ricci form from the curvature of the Hermitian connection.
pub fn hermitian_ricci_form(s: &KContactStructure, herm: &ConnectionField) -> BasicForm {
    let d = s.dim();
    let d4 = d * d * d * d;
    let r = herm.curvature();
    let t = IndexTables::get(d);
    let pairs: Vec<(usize, usize)> = t.index_lists(2).iter().map(|v| (v[0], v[1])).collect();
    let mut data = Vec::with_capacity(s.grid().points() * pairs.len());
    for pt in 0..s.grid().points() {
        let phi = s.phi_at(pt);
        let c = &r[pt * d4..(pt + 1) * d4];
        for &(i, j) in &pairs {
            let mut tr = 0.0;
            for k in 0..d {
                for l in 0..d {
                    tr += phi[k * d + l] * c[((l * d + k) * d + i) * d + j];
                }
            }
            data.push(RICCI_TRACE_FACTOR * tr);
        }
    }
    BasicForm::from_data(s.grid(), 2, data)
}

/// Hermitian Ricci form and scalar curvature.
pub fn hermitian_scalar(s: &KContactStructure) -> Result<CurvatureReport> {
    let lc = christoffel(s)?;
    let herm = hermitian_connection(s, &lc)?;
    let rho = hermitian_ricci_form(s, &herm);
    let scalar = lefschetz_lambda(s, &rho)?.to_scalar().scale(2.0);
    Ok(CurvatureReport { rho, scalar, riemannian: None })
}

/// The report with the Riemannian oracle filled in.
pub fn hermitian_scalar_with_oracle(s: &KContactStructure) -> Result<CurvatureReport> {
    let mut r = hermitian_scalar(s)?;
    r.riemannian = Some(riemannian_transverse_scalar(s)?);
    Ok(r)
}

/// Just `s-bar`.
pub fn scalar_curvature(s: &KContactStructure) -> Result<ScalarField> {
    Ok(hermitian_scalar(s)?.scalar)
}

/// First variation of the Hermitian scalar curvature,
/// `Q(A) = -(g^{ks} Phi^l_k (A^j_s)_{;j})_{;l}` with Levi-Civita derivatives.
pub fn scalar_variation_q(s: &KContactStructure, a: &TangentDeformation) -> Result<ScalarField> {
    a.check(s)?;
    let lc = christoffel(s)?;
    Ok(scalar_variation_q_with(s, &lc, a))
}

/// `Q(A)` with a precomputed Levi-Civita connection; no tangency check.
pub fn scalar_variation_q_with(s: &KContactStructure, lc: &ConnectionField, a: &TangentDeformation) -> ScalarField {
    let grid = s.grid();
    let d = s.dim();
    let am = a.matrices();
    let da = derivative_of_matrix_field(grid, am);
    // divergence V_s = d_j A^j_s + G^j_{jm} A^m_s - G^m_{js} A^j_m
    let mut w: Vec<Vec<f64>> = vec![vec![0.0; grid.points()]; d];
    for pt in 0..grid.points() {
        let m = &am[pt * d * d..(pt + 1) * d * d];
        let g = |k: usize, i: usize, j: usize| lc.at(pt, k, i, j);
        let mut v = vec![0.0; d];
        for (sidx, vs) in v.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..d {
                acc += da[j][pt * d * d + j * d + sidx];
                for q in 0..d {
                    acc += g(j, j, q) * m[q * d + sidx] - g(q, j, sidx) * m[j * d + q];
                }
            }
            *vs = acc;
        }
        let gi = s.metric_inv_at(pt);
        let phi = s.phi_at(pt);
        for l in 0..d {
            let mut acc = 0.0;
            for k in 0..d {
                let pk = phi[l * d + k];
                if pk == 0.0 {
                    continue;
                }
                acc += pk * (0..d).map(|si| gi[k * d + si] * v[si]).sum::<f64>();
            }
            w[l][pt] = acc;
        }
    }
    // Q = -(d_l W^l + G^l_{lm} W^m)
    let mut q = vec![0.0; grid.points()];
    for (l, wl) in w.iter().enumerate() {
        let dw = grid.derivative_strided(wl, 1, 0, l);
        q.iter_mut().zip(dw).for_each(|(x, y)| *x -= y);
    }
    for (pt, qv) in q.iter_mut().enumerate() {
        for m in 0..d {
            let tr: f64 = (0..d).map(|l| lc.at(pt, l, l, m)).sum();
            *qv -= tr * w[m][pt];
        }
    }
    ScalarField::from_vec(grid, q)
}
