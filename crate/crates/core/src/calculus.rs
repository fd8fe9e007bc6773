//! Operator calculus on basic forms: `Phi`-action, `d`, `d^c`, the transverse
//! Hodge star, Lefschetz operators, codifferentials, Laplacians and the
//! Nijenhuis tensor.

use crate::error::{KError, Result};
use crate::forms::{mask_indices, wedge_sign, BasicForm, IndexTables};
pub use crate::forms::compound;
use crate::grid::{Grid, ScalarField};
use crate::linalg;
use crate::structure::KContactStructure;

fn parity(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_grid(s: &KContactStructure, a: &BasicForm) -> Result<()> {
    if s.grid().same_as(a.grid()) {
        Ok(())
    } else {
        Err(KError::GridMismatch)
    }
}

/// `(Phi a)(X_1, ..., X_p) = (-1)^p a(Phi X_1, ..., Phi X_p)`.
pub fn phi_act(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    check_grid(s, a)?;
    let p = a.degree();
    let k = a.ncomp();
    let sign = parity(p);
    let table = s.phi_compound(p);
    Ok(a.map_pointwise(p, |pt, inp, out| {
        let c = &table[pt * k * k..(pt + 1) * k * k];
        for i in 0..k {
            out[i] = sign * (0..k).map(|j| c[j * k + i] * inp[j]).sum::<f64>();
        }
    }))
}

/// Exterior derivative; the top degree maps to the zero top form.
pub fn exterior_d(a: &BasicForm) -> BasicForm {
    let grid = a.grid();
    let d = grid.dim();
    let p = a.degree();
    if p >= d {
        return BasicForm::zeros(grid, d);
    }
    let t = IndexTables::get(d);
    let k = a.ncomp();
    let mut out = BasicForm::zeros(grid, p + 1);
    let ko = out.ncomp();
    for (j, &mask) in t.masks(p).iter().enumerate() {
        let comp = a.data().iter().skip(j).step_by(k);
        let first = a.data()[j];
        if comp.clone().all(|&v| v == first) {
            continue;
        }
        for axis in 0..d {
            if mask & (1 << axis) != 0 {
                continue;
            }
            // dx^axis ^ dx^J = sign dx^{J + axis}
            let target = mask | (1 << axis);
            let sign = wedge_sign(1 << axis, mask);
            let o = t.position(target);
            let deriv = grid.derivative_strided(a.data(), k, j, axis);
            let data = out.data_mut();
            for (pt, v) in deriv.iter().enumerate() {
                data[pt * ko + o] += sign * v;
            }
        }
    }
    out
}

/// `d^c = (-1)^p Phi d Phi` on `p`-forms.
pub fn d_c(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    let inner = exterior_d(&phi_act(s, a)?);
    Ok(phi_act(s, &inner)?.scale(parity(a.degree())))
}

/// Pointwise Gram matrix of the `g`-inner product on `Lambda^p`.
pub fn form_gram(s: &KContactStructure, pt: usize, p: usize) -> &[f64] {
    let k = crate::forms::binomial(s.dim(), p);
    &s.gram_compound(p)[pt * k * k..(pt + 1) * k * k]
}

/// Transverse Hodge star of `g`, oriented by `omega^n`:
/// `a ^ *b = <a, b> vol`.
pub fn hodge_star(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    check_grid(s, a)?;
    let d = s.dim();
    let p = a.degree();
    let t = IndexTables::get(d);
    let k = a.ncomp();
    let full = t.full_mask();
    let target: Vec<(usize, f64)> =
        t.masks(p).iter().map(|&m| (t.position(full & !m), wedge_sign(m, full & !m))).collect();
    let density = s.volume_density().values();
    Ok(a.map_pointwise(d - p, |pt, inp, out| {
        let gram = form_gram(s, pt, p);
        for i in 0..k {
            let v: f64 = (0..k).map(|j| gram[i * k + j] * inp[j]).sum();
            let (o, sign) = target[i];
            out[o] = sign * density[pt] * v;
        }
    }))
}

/// `L a = a ^ omega`; zero past the top degree.
pub fn lefschetz_l(a: &BasicForm) -> BasicForm {
    let d = a.grid().dim();
    if a.degree() + 2 > d {
        return BasicForm::zeros(a.grid(), d);
    }
    a.wedge(&BasicForm::omega(a.grid()))
}

/// The `g`-adjoint of `L`, `(-1)^q * L *` on `q`-forms; zero below degree 2.
pub fn lefschetz_lambda(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    check_grid(s, a)?;
    let q = a.degree();
    if q < 2 {
        return Ok(BasicForm::zeros(a.grid(), 0));
    }
    let inner = lefschetz_l(&hodge_star(s, a)?);
    Ok(hodge_star(s, &inner)?.scale(parity(q)))
}

/// `delta = - * d *`, or `delta^c = - * d^c *` when `twisted`; zero on functions.
pub fn codifferential(s: &KContactStructure, a: &BasicForm, twisted: bool) -> Result<BasicForm> {
    check_grid(s, a)?;
    if a.degree() == 0 {
        return Ok(BasicForm::zeros(a.grid(), 0));
    }
    let st = hodge_star(s, a)?;
    let inner = if twisted { d_c(s, &st)? } else { exterior_d(&st) };
    Ok(hodge_star(s, &inner)?.scale(-1.0))
}

/// Derivative `d` or `d^c`.
pub fn differential(s: &KContactStructure, a: &BasicForm, twisted: bool) -> Result<BasicForm> {
    if twisted {
        d_c(s, a)
    } else {
        check_grid(s, a)?;
        Ok(exterior_d(a))
    }
}

/// `Delta = d delta + delta d` (or the twisted version).
pub fn laplacian(s: &KContactStructure, a: &BasicForm, twisted: bool) -> Result<BasicForm> {
    let p = a.degree();
    let d = s.dim();
    let mut out = BasicForm::zeros(a.grid(), p);
    if p > 0 {
        out.axpy(1.0, &differential(s, &codifferential(s, a, twisted)?, twisted)?);
    }
    if p < d {
        out.axpy(1.0, &codifferential(s, &differential(s, a, twisted)?, twisted)?);
    }
    Ok(out)
}

/// `delta^c a = - sum_{ab} (omega^{-1})^{ab} i_a (d_b a)` via the flat
/// coordinate connection, which is torsion-free and preserves `omega`.
pub fn twisted_codifferential_via_connection(a: &BasicForm) -> BasicForm {
    let grid = a.grid();
    let d = grid.dim();
    if a.degree() == 0 {
        return BasicForm::zeros(grid, 0);
    }
    let omega_inv = linalg::transpose(&crate::structure::standard_omega(d), d);
    let mut out = BasicForm::zeros(grid, a.degree() - 1);
    for b in 0..d {
        let mut db = BasicForm::zeros(grid, a.degree());
        let k = a.ncomp();
        for c in 0..k {
            let v = grid.derivative_strided(a.data(), k, c, b);
            for (pt, x) in v.into_iter().enumerate() {
                db.data_mut()[pt * k + c] = x;
            }
        }
        let vector: Vec<ScalarField> = (0..d).map(|ax| ScalarField::constant(grid, omega_inv[ax * d + b])).collect();
        out.axpy(-1.0, &db.contract(&vector));
    }
    out
}

/// Pointwise `g`-inner product `<a, b>` as a scalar field.
pub fn pointwise_inner(s: &KContactStructure, a: &BasicForm, b: &BasicForm) -> Result<ScalarField> {
    a.check_compatible(b)?;
    check_grid(s, a)?;
    let p = a.degree();
    let k = a.ncomp();
    let vals = (0..s.grid().points())
        .map(|pt| {
            let gram = form_gram(s, pt, p);
            let (x, y) = (a.at(pt), b.at(pt));
            let mut acc = 0.0;
            for i in 0..k {
                for j in 0..k {
                    acc += gram[i * k + j] * x[i] * y[j];
                }
            }
            acc
        })
        .collect();
    Ok(ScalarField::from_vec(s.grid(), vals))
}

/// `L^2` inner product `integral <a, b> dv`.
pub fn inner(s: &KContactStructure, a: &BasicForm, b: &BasicForm) -> Result<f64> {
    pointwise_inner(s, a, b)?.integrate(s.volume_density())
}

pub fn norm(s: &KContactStructure, a: &BasicForm) -> Result<f64> {
    Ok(inner(s, a, a)?.max(0.0).sqrt())
}

/// Transverse Nijenhuis tensor in the horizontal coordinate frame.
#[derive(Debug, Clone)]
pub struct NijenhuisField {
    grid: Grid,
    dim: usize,
    /// `N^k_{ab}` stored at `[pt][(a * d + b) * d + k]`.
    transverse: Vec<f64>,
    /// Coefficient of the Reeb field in `N(e_a, e_b)`, stored `[pt][a * d + b]`.
    reeb: Vec<f64>,
}

impl NijenhuisField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn transverse(&self, pt: usize, k: usize, a: usize, b: usize) -> f64 {
        let d = self.dim;
        self.transverse[pt * d * d * d + (a * d + b) * d + k]
    }
    pub fn reeb(&self, pt: usize, a: usize, b: usize) -> f64 {
        self.reeb[pt * self.dim * self.dim + a * self.dim + b]
    }
    /// Max-norm of the transverse components.
    pub fn transverse_max(&self) -> f64 {
        linalg::max_abs(&self.transverse)
    }
    /// The constant `c` with Reeb component `c * omega(e_a, e_b)`, together
    /// with the largest deviation from that form.
    pub fn reeb_constant(&self) -> (f64, f64) {
        let c = self.reeb(0, 0, 1);
        let omega = crate::structure::standard_omega(self.dim);
        let dd = self.dim * self.dim;
        let dev = self
            .reeb
            .chunks_exact(dd)
            .flat_map(|r| r.iter().zip(&omega).map(|(x, w)| (x - c * w).abs()))
            .fold(0.0, f64::max);
        (c, dev)
    }
}

/// `N(X, Y) = [Phi X, Phi Y] + Phi^2 [X, Y] - Phi [Phi X, Y] - Phi [X, Phi Y]`
/// on the horizontal lifts `e_a` of `d/dx^a`, for which
/// `[e_a, e_b] = -omega_{ab} xi`.
pub fn nijenhuis_transverse(s: &KContactStructure) -> NijenhuisField {
    let grid = s.grid();
    let d = s.dim();
    let dd = d * d;
    let mut transverse = vec![0.0; grid.points() * dd * d];
    let mut reeb = vec![0.0; grid.points() * dd];
    let omega = s.omega();
    let dphi: Vec<&[f64]> = (0..d).map(|ax| s.dphi(ax)).collect();
    for pt in 0..grid.points() {
        let phi = s.phi_at(pt);
        let dp = |ax: usize, r: usize, c: usize| dphi[ax][pt * dd + r * d + c];
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    let mut v = 0.0;
                    for c in 0..d {
                        v += phi[c * d + a] * dp(c, k, b) - phi[c * d + b] * dp(c, k, a);
                        v -= phi[k * d + c] * (dp(a, c, b) - dp(b, c, a));
                    }
                    transverse[pt * dd * d + (a * d + b) * d + k] = v;
                }
                // eta([Phi e_a, Phi e_b]) = -omega(Phi e_a, Phi e_b) = -omega_ab;
                // the other terms are horizontal or killed by Phi^2 + Id = xi (x) eta.
                let mut w = 0.0;
                for c in 0..d {
                    for e in 0..d {
                        w += phi[c * d + a] * phi[e * d + b] * omega[c * d + e];
                    }
                }
                reeb[pt * dd + a * d + b] = -w;
            }
        }
    }
    NijenhuisField { grid: grid.clone(), dim: d, transverse, reeb }
}

/// Evaluates the 1-form `a` on the transverse vectors `N(e_i, e_j)`, giving
/// the 2-form `(i, j) -> a(N(e_i, e_j))`.
pub fn one_form_on_nijenhuis(n: &NijenhuisField, a: &BasicForm) -> BasicForm {
    assert_eq!(a.degree(), 1);
    let grid = a.grid();
    let d = grid.dim();
    let t = IndexTables::get(d);
    a.map_pointwise(2, |pt, inp, out| {
        for (o, &m) in t.masks(2).iter().enumerate() {
            let ij = mask_indices(m);
            out[o] = (0..d).map(|k| inp[k] * n.transverse(pt, k, ij[0], ij[1])).sum();
        }
    })
}

/// Sup norm of a form together with its first and second derivatives.
pub fn c2_norm(a: &BasicForm) -> f64 {
    let grid = a.grid();
    let k = a.ncomp();
    let mut m = a.max_abs();
    for c in 0..k {
        for i in 0..grid.dim() {
            let di = grid.derivative_strided(a.data(), k, c, i);
            m = m.max(linalg::max_abs(&di));
            for j in i..grid.dim() {
                m = m.max(linalg::max_abs(&grid.derivative_strided(&di, 1, 0, j)));
            }
        }
    }
    m
}

fn or_zero(grid: &Grid, a: BasicForm, degree: usize) -> BasicForm {
    if a.degree() == degree {
        a
    } else {
        BasicForm::zeros(grid, degree)
    }
}

/// Sup-norm residuals of the four Kähler identities
/// `[L, delta^c] = -d`, `[L, delta] = d^c`, `[Lambda, d^c] = delta`,
/// `[Lambda, d] = -delta^c` applied to `a`. Identities whose target degree
/// is out of range report zero.
pub fn kahler_identity_residuals(s: &KContactStructure, a: &BasicForm) -> Result<[f64; 4]> {
    let grid = s.grid();
    let d = s.dim();
    let p = a.degree();
    let mut out = [0.0; 4];
    if p < d {
        let up = p + 1;
        let la = lefschetz_l(a);
        for (slot, twisted) in [(0, true), (1, false)] {
            let first = if p == 0 {
                BasicForm::zeros(grid, up)
            } else {
                or_zero(grid, lefschetz_l(&codifferential(s, a, twisted)?), up)
            };
            let second = if p + 2 <= d { codifferential(s, &la, twisted)? } else { BasicForm::zeros(grid, up) };
            let comm = first.sub(&second);
            // [L, delta^c] + d and [L, delta] - d^c
            let rhs = if twisted { exterior_d(a).scale(-1.0) } else { d_c(s, a)? };
            out[slot] = comm.sub(&rhs).max_abs();
        }
    }
    if p > 0 {
        let down = p - 1;
        for (slot, twisted) in [(2, true), (3, false)] {
            let first = if p < d {
                lefschetz_lambda(s, &differential(s, a, twisted)?)?
            } else {
                BasicForm::zeros(grid, down)
            };
            let second = if p >= 2 {
                differential(s, &lefschetz_lambda(s, a)?, twisted)?
            } else {
                BasicForm::zeros(grid, down)
            };
            let comm = or_zero(grid, first, down).sub(&or_zero(grid, second, down));
            // [Lambda, d^c] - delta and [Lambda, d] + delta^c
            let rhs = if twisted {
                codifferential(s, a, false)?
            } else {
                codifferential(s, a, true)?.scale(-1.0)
            };
            out[slot] = comm.sub(&rhs).max_abs();
        }
    }
    Ok(out)
}
