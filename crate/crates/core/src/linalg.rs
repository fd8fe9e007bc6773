//! Small dense helpers for the per-point `2n x 2n` matrices.
//!
//! Matrices are flat row-major slices of length `d * d`.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn matmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut c = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                c[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    c
}

pub fn transpose(a: &[f64], d: usize) -> Vec<f64> {
    let mut t = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            t[j * d + i] = a[i * d + j];
        }
    }
    t
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Determinant of the submatrix with the given rows and columns
/// (at most 4x4, cofactor expansion).
pub fn minor(a: &[f64], d: usize, rows: &[usize], cols: &[usize]) -> f64 {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    match k {
        0 => 1.0,
        1 => a[rows[0] * d + cols[0]],
        2 => a[rows[0] * d + cols[0]] * a[rows[1] * d + cols[1]] - a[rows[0] * d + cols[1]] * a[rows[1] * d + cols[0]],
        _ => {
            let mut s = 0.0;
            let mut sub = Vec::with_capacity(k - 1);
            for (j, &c) in cols.iter().enumerate() {
                let v = a[rows[0] * d + c];
                if v == 0.0 {
                    continue;
                }
                sub.clear();
                sub.extend(cols.iter().enumerate().filter(|&(jj, _)| jj != j).map(|(_, &cc)| cc));
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                s += sign * v * minor(a, d, &rows[1..], &sub);
            }
            s
        }
    }
}

pub fn det(a: &[f64], d: usize) -> f64 {
    let idx: Vec<usize> = (0..d).collect();
    minor(a, d, &idx, &idx)
}

pub fn inverse(a: &[f64], d: usize) -> Option<Vec<f64>> {
    DMatrix::from_row_slice(d, d, a).try_inverse().map(|m| row_major(&m))
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Matrix exponential.
pub fn expm(a: &[f64], d: usize) -> Vec<f64> {
    row_major(&DMatrix::from_row_slice(d, d, a).exp())
}

/// Smallest eigenvalue of the symmetric part of `a`.
pub fn min_sym_eigenvalue(a: &[f64], d: usize) -> f64 {
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (a[i * d + j] + a[j * d + i]));
    SymmetricEigen::new(m).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Power `s^t` of a symmetric positive definite matrix.
pub fn spd_power(a: &[f64], d: usize, t: f64) -> Option<Vec<f64>> {
    let m = DMatrix::from_fn(d, d, |i, j| 0.5 * (a[i * d + j] + a[j * d + i]));
    let e = SymmetricEigen::new(m);
    if e.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let diag = DMatrix::from_diagonal(&e.eigenvalues.map(|l| l.powf(t)));
    Some(row_major(&(&e.eigenvectors * diag * e.eigenvectors.transpose())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_against_lu() {
        let a = [2.0, 1.0, 0.5, -1.0, 0.3, 3.0, 1.0, 0.0, 1.0, -2.0, 4.0, 1.0, 0.0, 1.0, 1.0, 5.0];
        let lu = DMatrix::from_row_slice(4, 4, &a).determinant();
        assert!((det(&a, 4) - lu).abs() < 1e-12);
    }

    #[test]
    fn exp_of_rotation() {
        let t = 0.7;
        let r = expm(&[0.0, -t, t, 0.0], 2);
        assert!((r[0] - t.cos()).abs() < 1e-14 && (r[2] - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn spd_square_root() {
        let a = [4.0, 1.0, 1.0, 3.0];
        let s = spd_power(&a, 2, 0.5).unwrap();
        let back = matmul(&s, &s, 2);
        assert!(back.iter().zip(&a).all(|(x, y)| (x - y).abs() < 1e-13));
    }
}
