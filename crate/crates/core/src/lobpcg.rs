//! Block locally optimal preconditioned conjugate gradient eigensolver for
//! the few smallest eigenpairs of `A x = lambda B x` with `A` symmetric
//! semi-definite and `B` symmetric positive definite, both given as
//! matrix-free closures on flat vectors.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{KError, Result};

pub struct LobpcgOptions {
    pub max_iter: usize,
    /// Convergence when every preconditioned residual norm `sqrt(r^T T r)`
    /// drops below this.
    pub tol: f64,
    /// Number of leading pairs that must converge; the rest of the block acts
    /// as guard vectors. Zero means the whole block.
    pub wanted: usize,
    /// Ritz values above `coarse_above` only need residual `coarse_rel`
    /// times the value: enough to locate a gap above a kernel without
    /// resolving the cluster that follows it.
    pub coarse_above: f64,
    pub coarse_rel: f64,
}

impl LobpcgOptions {
    fn tol_for(&self, lambda: f64) -> f64 {
        if lambda > self.coarse_above {
            (self.coarse_rel * lambda).max(self.tol)
        } else {
            self.tol
        }
    }
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-7, wanted: 0, coarse_above: f64::INFINITY, coarse_rel: 0.0 }
    }
}

pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram(u: &[Vec<f64>], v: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| dot(&u[i], &v[j]))
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>, col: usize) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (i, b) in basis.iter().enumerate() {
        let c = coeffs[(i, col)];
        if c != 0.0 {
            out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
        }
    }
    out
}

/// Rayleigh-Ritz on the span of `s`: returns Ritz values (ascending) and the
/// coefficient matrix, after discarding numerically dependent directions.
fn rayleigh_ritz(a_s: &DMatrix<f64>, b_s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let m = b_s.nrows();
    // scale to unit diagonal for conditioning
    let dscale: Vec<f64> = (0..m).map(|i| 1.0 / b_s[(i, i)].max(1e-300).sqrt()).collect();
    let bs = DMatrix::from_fn(m, m, |i, j| b_s[(i, j)] * dscale[i] * dscale[j]);
    let as_ = DMatrix::from_fn(m, m, |i, j| a_s[(i, j)] * dscale[i] * dscale[j]);
    let eb = SymmetricEigen::new(0.5 * (&bs + bs.transpose()));
    let max = eb.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..m).filter(|&i| eb.eigenvalues[i] > 1e-12 * max).collect();
    // W = V_keep diag(1/sqrt(lambda)) whitens B
    let w = DMatrix::from_fn(m, keep.len(), |i, j| eb.eigenvectors[(i, keep[j])] / eb.eigenvalues[keep[j]].sqrt());
    let reduced = w.transpose() * &as_ * &w;
    let er = SymmetricEigen::new(0.5 * (&reduced + reduced.transpose()));
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|&i, &j| er.eigenvalues[i].partial_cmp(&er.eigenvalues[j]).unwrap());
    let vals = order.iter().map(|&i| er.eigenvalues[i]).collect();
    let sorted = DMatrix::from_fn(keep.len(), keep.len(), |i, j| er.eigenvectors[(i, order[j])]);
    let mut c = w * sorted;
    for i in 0..m {
        for j in 0..c.ncols() {
            c[(i, j)] *= dscale[i];
        }
    }
    (vals, c)
}

/// Computes the `initial.len()` smallest eigenpairs.
pub fn lobpcg(
    apply_a: &dyn Fn(&[f64]) -> Vec<f64>,
    apply_b: &dyn Fn(&[f64]) -> Vec<f64>,
    precondition: &dyn Fn(&[f64]) -> Vec<f64>,
    initial: Vec<Vec<f64>>,
    opts: &LobpcgOptions,
) -> Result<Eigenpairs> {
    let k = initial.len();
    let wanted = if opts.wanted == 0 { k } else { opts.wanted.min(k) };
    let mut x = initial;
    let mut ax: Vec<Vec<f64>> = x.iter().map(|v| apply_a(v)).collect();
    let mut bx: Vec<Vec<f64>> = x.iter().map(|v| apply_b(v)).collect();
    let (vals, c) = rayleigh_ritz(&gram(&x, &ax), &gram(&x, &bx));
    if c.ncols() < k {
        return Err(KError::Precondition("initial block is rank deficient".into()));
    }
    let rot = |v: &[Vec<f64>], c: &DMatrix<f64>| (0..k).map(|j| combine(v, c, j)).collect::<Vec<_>>();
    x = rot(&x, &c);
    ax = rot(&ax, &c);
    bx = rot(&bx, &c);
    let mut lambda = vals[..k].to_vec();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut ap: Vec<Vec<f64>> = Vec::new();
    let mut bp: Vec<Vec<f64>> = Vec::new();
    let mut resid = vec![f64::INFINITY; k];
    for it in 0..opts.max_iter {
        let r: Vec<Vec<f64>> = (0..k)
            .map(|j| ax[j].iter().zip(&bx[j]).map(|(a, b)| a - lambda[j] * b).collect())
            .collect();
        let w: Vec<Vec<f64>> = r.iter().map(|v| precondition(v)).collect();
        for j in 0..k {
            resid[j] = dot(&r[j], &w[j]).max(0.0).sqrt();
        }
        let done: Vec<bool> = (0..k).map(|j| resid[j] <= opts.tol_for(lambda[j])).collect();
        if done[..wanted].iter().all(|&d| d) {
            x.truncate(wanted);
            lambda.truncate(wanted);
            resid.truncate(wanted);
            return Ok(Eigenpairs { values: lambda, vectors: x, residuals: resid, iterations: it });
        }
        // only search along unconverged residuals
        let active: Vec<usize> = (0..k).filter(|&j| !done[j]).collect();
        let w: Vec<Vec<f64>> = active.iter().map(|&j| w[j].clone()).collect();
        let aw: Vec<Vec<f64>> = w.iter().map(|v| apply_a(v)).collect();
        let bw: Vec<Vec<f64>> = w.iter().map(|v| apply_b(v)).collect();
        let mut s = x.clone();
        s.extend(w);
        s.extend(p.iter().cloned());
        let mut as_ = ax.clone();
        as_.extend(aw);
        as_.extend(ap.iter().cloned());
        let mut bs = bx.clone();
        bs.extend(bw);
        bs.extend(bp.iter().cloned());
        let (vals, c) = rayleigh_ritz(&gram(&s, &as_), &gram(&s, &bs));
        if c.ncols() < k {
            return Err(KError::NoConvergence { iterations: it, residual: resid.iter().cloned().fold(0.0, f64::max) });
        }
        // P = S C with the X rows zeroed
        let mut cp = c.clone();
        for i in 0..k {
            for j in 0..cp.ncols() {
                cp[(i, j)] = 0.0;
            }
        }
        p = rot(&s, &cp);
        ap = rot(&as_, &cp);
        bp = rot(&bs, &cp);
        x = rot(&s, &c);
        ax = rot(&as_, &c);
        bx = rot(&bs, &c);
        lambda = vals[..k].to_vec();
    }
    Err(KError::NoConvergence { iterations: opts.max_iter, residual: resid[..wanted].iter().cloned().fold(0.0, f64::max) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_problem() {
        let n = 200;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 + 1.0).powi(2) * 0.01).collect();
        let a = |v: &[f64]| v.iter().zip(&diag).map(|(x, d)| x * d).collect::<Vec<_>>();
        let b = |v: &[f64]| v.to_vec();
        let t = |v: &[f64]| v.iter().zip(&diag).map(|(x, d)| x / d).collect::<Vec<_>>();
        let init: Vec<Vec<f64>> = (0..4).map(|j| (0..n).map(|i| ((i * (j + 3)) % 7) as f64 - 3.0).collect()).collect();
        let r = lobpcg(&a, &b, &t, init, &LobpcgOptions { max_iter: 300, tol: 1e-9, ..Default::default() }).unwrap();
        for (j, v) in r.values.iter().enumerate() {
            assert!((v - diag[j]).abs() < 1e-10, "{j}: {v}");
        }
    }
}
