//! Basic differential forms on the transverse torus.
//!
//! A `p`-form is stored point-major: for every grid point the `C(2n, p)`
//! coefficients of `dx^I` over strictly increasing multi-indices `I`, in
//! lexicographic order. Antisymmetry is implicit.

use std::fmt;
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KError, Result};
use crate::grid::{Grid, ScalarField, TrigField};

/// Multi-index tables for one transverse dimension.
#[derive(Debug)]
pub struct IndexTables {
    dim: usize,
    /// `basis[p]` lists the bitmasks of degree `p`, lexicographic.
    basis: Vec<Vec<u32>>,
    /// Position of a bitmask inside its degree's list.
    position: Vec<usize>,
    /// Sorted axis lists of `basis[p]`.
    indices: Vec<Vec<Vec<usize>>>,
}

fn lexicographic_masks(dim: usize, p: usize) -> Vec<u32> {
    fn rec(start: usize, dim: usize, left: usize, acc: u32, out: &mut Vec<u32>) {
        if left == 0 {
            out.push(acc);
            return;
        }
        for i in start..dim {
            rec(i + 1, dim, left - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, dim, p, 0, &mut out);
    out
}

impl IndexTables {
    fn build(dim: usize) -> Self {
        let basis: Vec<Vec<u32>> = (0..=dim).map(|p| lexicographic_masks(dim, p)).collect();
        let mut position = vec![0; 1 << dim];
        for list in &basis {
            for (i, &m) in list.iter().enumerate() {
                position[m as usize] = i;
            }
        }
        let indices = basis.iter().map(|l| l.iter().map(|&m| mask_indices(m)).collect()).collect();
        Self { dim, basis, position, indices }
    }

    /// Shared tables for dimension 2 or 4.
    pub fn get(dim: usize) -> &'static IndexTables {
        static T2: OnceLock<IndexTables> = OnceLock::new();
        static T4: OnceLock<IndexTables> = OnceLock::new();
        match dim {
            2 => T2.get_or_init(|| IndexTables::build(2)),
            4 => T4.get_or_init(|| IndexTables::build(4)),
            _ => panic!("unsupported transverse dimension {dim}"),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn count(&self, p: usize) -> usize {
        self.basis[p].len()
    }
    pub fn masks(&self, p: usize) -> &[u32] {
        &self.basis[p]
    }
    pub fn index_lists(&self, p: usize) -> &[Vec<usize>] {
        &self.indices[p]
    }
    pub fn position(&self, mask: u32) -> usize {
        self.position[mask as usize]
    }
    pub fn full_mask(&self) -> u32 {
        (1u32 << self.dim) - 1
    }
}

/// Sorted axis list of a bitmask.
pub fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Sign of `dx^A ^ dx^B = sign * dx^{A u B}` for disjoint `A`, `B`.
pub fn wedge_sign(a: u32, b: u32) -> f64 {
    debug_assert_eq!(a & b, 0);
    // count pairs (i in a, j in b) with i > j
    let mut inversions = 0;
    for j in mask_indices(b) {
        inversions += (a >> (j + 1)).count_ones();
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `p`-th compound matrix: `out[i * k + j] = det(m[I_i rows, I_j cols])`.
pub fn compound(m: &[f64], d: usize, p: usize, out: &mut [f64]) {
    let t = IndexTables::get(d);
    let idx = t.index_lists(p);
    let k = idx.len();
    for i in 0..k {
        for j in 0..k {
            out[i * k + j] = crate::linalg::minor(m, d, &idx[i], &idx[j]);
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A basic `p`-form sampled on the grid.
#[derive(Clone)]
pub struct BasicForm {
    grid: Grid,
    degree: usize,
    ncomp: usize,
    data: Vec<f64>,
}

impl fmt::Debug for BasicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BasicForm")
            .field("degree", &self.degree)
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl BasicForm {
    pub fn zeros(grid: &Grid, degree: usize) -> Self {
        assert!(degree <= grid.dim(), "degree {degree} exceeds dimension");
        let ncomp = binomial(grid.dim(), degree);
        Self { grid: grid.clone(), degree, ncomp, data: vec![0.0; ncomp * grid.points()] }
    }

    pub fn from_data(grid: &Grid, degree: usize, data: Vec<f64>) -> Self {
        let ncomp = binomial(grid.dim(), degree);
        assert_eq!(data.len(), ncomp * grid.points());
        Self { grid: grid.clone(), degree, ncomp, data }
    }

    /// Builds a form from one scalar field per multi-index (lexicographic).
    pub fn from_components(grid: &Grid, degree: usize, comps: &[ScalarField]) -> Result<Self> {
        let ncomp = binomial(grid.dim(), degree);
        if comps.len() != ncomp {
            return Err(KError::Precondition(format!(
                "expected {ncomp} components for degree {degree}, got {}",
                comps.len()
            )));
        }
        let mut form = Self::zeros(grid, degree);
        for (c, f) in comps.iter().enumerate() {
            if !f.grid().same_as(grid) {
                return Err(KError::GridMismatch);
            }
            for (p, v) in f.values().iter().enumerate() {
                form.data[p * ncomp + c] = *v;
            }
        }
        Ok(form)
    }

    pub fn from_scalar(f: &ScalarField) -> Self {
        Self { grid: f.grid().clone(), degree: 0, ncomp: 1, data: f.values().to_vec() }
    }

    /// Constant-coefficient form `sum_I c_I dx^I`.
    pub fn constant(grid: &Grid, degree: usize, coeffs: &[f64]) -> Self {
        let ncomp = binomial(grid.dim(), degree);
        assert_eq!(coeffs.len(), ncomp);
        let mut data = Vec::with_capacity(ncomp * grid.points());
        for _ in 0..grid.points() {
            data.extend_from_slice(coeffs);
        }
        Self { grid: grid.clone(), degree, ncomp, data }
    }

    /// The basis form `dx^I` for a bitmask `I`.
    pub fn basis(grid: &Grid, mask: u32) -> Self {
        let degree = mask.count_ones() as usize;
        let t = IndexTables::get(grid.dim());
        let mut c = vec![0.0; t.count(degree)];
        c[t.position(mask)] = 1.0;
        Self::constant(grid, degree, &c)
    }

    /// The transverse symplectic form `omega = sum_i dx^{2i-1} ^ dx^{2i}`.
    pub fn omega(grid: &Grid) -> Self {
        let t = IndexTables::get(grid.dim());
        let mut c = vec![0.0; t.count(2)];
        for i in 0..grid.n() {
            c[t.position((1 << (2 * i)) | (1 << (2 * i + 1)))] = 1.0;
        }
        Self::constant(grid, 2, &c)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn ncomp(&self) -> usize {
        self.ncomp
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn at(&self, point: usize) -> &[f64] {
        &self.data[point * self.ncomp..(point + 1) * self.ncomp]
    }

    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField::from_vec(&self.grid, self.data.iter().skip(c).step_by(self.ncomp).copied().collect())
    }

    pub fn to_scalar(&self) -> ScalarField {
        assert_eq!(self.degree, 0);
        ScalarField::from_vec(&self.grid, self.data.clone())
    }

    pub fn check_compatible(&self, other: &BasicForm) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(KError::GridMismatch);
        }
        if self.degree != other.degree {
            return Err(KError::Precondition(format!(
                "degree mismatch: {} vs {}",
                self.degree, other.degree
            )));
        }
        Ok(())
    }

    pub fn axpy(&mut self, a: f64, x: &BasicForm) {
        assert_eq!(self.degree, x.degree, "degree mismatch");
        assert!(self.grid.same_as(&x.grid), "grid mismatch");
        self.data.iter_mut().zip(&x.data).for_each(|(y, xv)| *y += a * xv);
    }

    pub fn add(&self, other: &BasicForm) -> BasicForm {
        let mut r = self.clone();
        r.axpy(1.0, other);
        r
    }
    pub fn sub(&self, other: &BasicForm) -> BasicForm {
        let mut r = self.clone();
        r.axpy(-1.0, other);
        r
    }
    pub fn scale(&self, s: f64) -> BasicForm {
        let mut r = self.clone();
        r.data.iter_mut().for_each(|v| *v *= s);
        r
    }

    /// Multiplies every coefficient by a scalar field.
    pub fn mul_scalar(&self, f: &ScalarField) -> BasicForm {
        let mut r = self.clone();
        for (p, v) in f.values().iter().enumerate() {
            r.data[p * self.ncomp..(p + 1) * self.ncomp].iter_mut().for_each(|x| *x *= v);
        }
        r
    }

    /// Coefficient sup-norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Coefficient `L^2` norm in the flat coordinate inner product.
    pub fn flat_l2(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.grid.points() as f64 * self.grid.volume()).sqrt()
    }

    /// Pointwise linear map into degree `out_degree`.
    pub fn map_pointwise(&self, out_degree: usize, mut f: impl FnMut(usize, &[f64], &mut [f64])) -> BasicForm {
        let mut out = BasicForm::zeros(&self.grid, out_degree);
        let (ni, no) = (self.ncomp, out.ncomp);
        for (p, (inp, o)) in self.data.chunks_exact(ni).zip(out.data.chunks_exact_mut(no)).enumerate() {
            f(p, inp, o);
        }
        out
    }

    /// Wedge product.
    pub fn wedge(&self, other: &BasicForm) -> BasicForm {
        assert!(self.grid.same_as(&other.grid), "grid mismatch");
        let dim = self.grid.dim();
        let q = self.degree + other.degree;
        if q > dim {
            return BasicForm::zeros(&self.grid, dim);
        }
        let t = IndexTables::get(dim);
        let mut table = Vec::new();
        for (i, &a) in t.masks(self.degree).iter().enumerate() {
            for (j, &b) in t.masks(other.degree).iter().enumerate() {
                if a & b == 0 {
                    table.push((i, j, t.position(a | b), wedge_sign(a, b)));
                }
            }
        }
        let mut out = BasicForm::zeros(&self.grid, q);
        let (na, nb, no) = (self.ncomp, other.ncomp, out.ncomp);
        for p in 0..self.grid.points() {
            let a = &self.data[p * na..(p + 1) * na];
            let b = &other.data[p * nb..(p + 1) * nb];
            let o = &mut out.data[p * no..(p + 1) * no];
            for &(i, j, k, s) in &table {
                o[k] += s * a[i] * b[j];
            }
        }
        out
    }

    /// Interior product with a vector field given by its components.
    pub fn contract(&self, vector: &[ScalarField]) -> BasicForm {
        let dim = self.grid.dim();
        assert_eq!(vector.len(), dim);
        if self.degree == 0 {
            return BasicForm::zeros(&self.grid, 0);
        }
        let t = IndexTables::get(dim);
        // i_{e_a} dx^I = sign * dx^{I \ a} where sign = (-1)^{#(I below a)}
        let mut table = Vec::new();
        for (i, &m) in t.masks(self.degree).iter().enumerate() {
            for a in mask_indices(m) {
                let below = (m & ((1u32 << a) - 1)).count_ones();
                let s = if below % 2 == 0 { 1.0 } else { -1.0 };
                table.push((i, a, t.position(m & !(1 << a)), s));
            }
        }
        let mut out = BasicForm::zeros(&self.grid, self.degree - 1);
        let (ni, no) = (self.ncomp, out.ncomp);
        for p in 0..self.grid.points() {
            for &(i, a, k, s) in &table {
                out.data[p * no + k] += s * vector[a].values()[p] * self.data[p * ni + i];
            }
        }
        out
    }

    /// Resamples every component to another resolution.
    pub fn resample(&self, target: &Grid) -> BasicForm {
        let comps: Vec<ScalarField> = (0..self.ncomp).map(|c| self.component(c).resample(target)).collect();
        BasicForm::from_components(target, self.degree, &comps).expect("same dimension")
    }
}

/// Deterministic band-limited random `p`-form. Degree-0 forms are
/// re-centered to mean zero.
pub fn random_basic_form(grid: &Grid, degree: usize, seed: u64, cutoff: usize) -> Result<BasicForm> {
    if degree > grid.dim() {
        return Err(KError::DegreeOutOfRange { degree, dim: grid.dim() });
    }
    if 2 * cutoff >= grid.size() {
        return Err(KError::Aliasing { cutoff, n: grid.size() });
    }
    let fields = random_trig_form(grid.dim(), degree, seed, cutoff);
    let comps = fields.iter().map(|f| f.sample(grid)).collect::<Result<Vec<_>>>()?;
    BasicForm::from_components(grid, degree, &comps)
}

/// The resolution-independent coefficients behind [`random_basic_form`].
pub fn random_trig_form(dim: usize, degree: usize, seed: u64, cutoff: usize) -> Vec<TrigField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..binomial(dim, degree))
        .map(|_| TrigField::random(dim, cutoff, 1.0, degree == 0, &mut rng))
        .collect()
}

/// Samples a list of trig fields as a form.
pub fn sample_trig_form(grid: &Grid, degree: usize, fields: &[TrigField]) -> Result<BasicForm> {
    let comps = fields.iter().map(|f| f.sample(grid)).collect::<Result<Vec<_>>>()?;
    BasicForm::from_components(grid, degree, &comps)
}
