//! Green operators, harmonic projections and harmonic-space dimensions.
//!
//! Linear algebra is done on flat coefficient vectors. The quadrature inner
//! product is `<a, b> = h^{2n} a . (M b)` with `M` the pointwise Gram matrix of
//! `g` on forms times `sqrt(det g)`; `M Delta` is then symmetric in the
//! Euclidean dot product and solved by preconditioned conjugate gradients.
//! The preconditioner is the exact inverse of the flat Laplacian on the modes
//! below Nyquist; Nyquist modes are excluded from the discrete form space (the
//! spectral derivative annihilates them, so they would be spurious harmonics).

use std::cell::RefCell;
use std::rc::Rc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{self, codifferential, exterior_d, form_gram, hodge_star, laplacian, phi_act};
use crate::error::{KError, Result};
use crate::forms::{random_basic_form, BasicForm, IndexTables};
use crate::grid::Grid;
use crate::lobpcg::{lobpcg, LobpcgOptions};
use crate::structure::KContactStructure;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative preconditioned residual at which CG stops.
    pub rel_tol: f64,
    /// Iteration cap; `None` means `10 N^{2n}`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-13, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse of the flat Laplacian on each component: `1/|k|^2`, the zero mode
/// mapped with the first nonzero eigenvalue, Nyquist modes dropped.
pub fn flat_inverse_laplacian(grid: &Grid, data: &[f64], ncomp: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    let first = grid.first_flat_eigenvalue();
    let weights: Vec<f64> = (0..grid.points())
        .map(|pt| {
            if (0..grid.dim()).any(|a| 2 * grid.index_along(pt, a) == grid.size()) {
                0.0
            } else {
                let k2 = grid.wavenumber_sq(pt);
                1.0 / if k2 == 0.0 { first } else { k2 }
            }
        })
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.points()];
    for c in 0..ncomp {
        // two real components per complex transform
        if c % 2 == 1 {
            continue;
        }
        let pair = c + 1 < ncomp;
        for (pt, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(data[pt * ncomp + c], if pair { data[pt * ncomp + c + 1] } else { 0.0 });
        }
        grid.fft_all(&mut buf, false);
        buf.iter_mut().zip(&weights).for_each(|(b, w)| *b *= w);
        grid.fft_all(&mut buf, true);
        for (pt, b) in buf.iter().enumerate() {
            out[pt * ncomp + c] = b.re;
            if pair {
                out[pt * ncomp + c + 1] = b.im;
            }
        }
    }
    out
}

/// Removes every Fourier mode at the Nyquist index of some axis.
pub fn nyquist_filter(a: &BasicForm) -> BasicForm {
    let grid = a.grid();
    let k = a.ncomp();
    let mut out = a.clone();
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.points()];
    for c in 0..k {
        for (pt, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(a.data()[pt * k + c], 0.0);
        }
        grid.fft_all(&mut buf, false);
        for (pt, b) in buf.iter_mut().enumerate() {
            if (0..grid.dim()).any(|ax| 2 * grid.index_along(pt, ax) == grid.size()) {
                *b = Complex64::new(0.0, 0.0);
            }
        }
        grid.fft_all(&mut buf, true);
        for (pt, b) in buf.iter().enumerate() {
            out.data_mut()[pt * k + c] = b.re;
        }
    }
    out
}

/// Hodge-theoretic solver context for one structure. Harmonic bases are
/// built lazily per degree and cached.
pub struct Hodge<'a> {
    s: &'a KContactStructure,
    opts: SolverOptions,
    harmonic: RefCell<Vec<Option<Rc<Vec<BasicForm>>>>>,
    /// `M h` for each harmonic basis form.
    harmonic_dual: RefCell<Vec<Option<Rc<Vec<Vec<f64>>>>>>,
    last: RefCell<SolveStats>,
}

impl<'a> Hodge<'a> {
    pub fn new(s: &'a KContactStructure) -> Self {
        Self::with_options(s, SolverOptions::default())
    }

    pub fn with_options(s: &'a KContactStructure, opts: SolverOptions) -> Self {
        Self {
            s,
            opts,
            harmonic: RefCell::new(vec![None; s.dim() + 1]),
            harmonic_dual: RefCell::new(vec![None; s.dim() + 1]),
            last: RefCell::new(SolveStats::default()),
        }
    }

    pub fn structure(&self) -> &KContactStructure {
        self.s
    }

    /// Statistics of the most recent CG solve.
    pub fn last_stats(&self) -> SolveStats {
        *self.last.borrow()
    }

    /// `M a` as a flat vector.
    pub fn apply_gram(&self, a: &BasicForm) -> Vec<f64> {
        let s = self.s;
        let p = a.degree();
        let k = a.ncomp();
        let dens = s.volume_density().values();
        let mut out = vec![0.0; a.data().len()];
        for pt in 0..s.grid().points() {
            let gram = form_gram(s, pt, p);
            let x = a.at(pt);
            for i in 0..k {
                out[pt * k + i] = dens[pt] * (0..k).map(|j| gram[i * k + j] * x[j]).sum::<f64>();
            }
        }
        out
    }

    fn weight(&self) -> f64 {
        self.s.grid().volume() / self.s.grid().points() as f64
    }

    /// Quadrature inner product.
    pub fn inner(&self, a: &BasicForm, b: &BasicForm) -> f64 {
        self.weight() * dot(a.data(), &self.apply_gram(b))
    }

    /// Orthonormal basis of the `Delta`-harmonic `p`-forms, obtained from the
    /// constant forms `c` as `c - d G (delta c)`.
    pub fn harmonic_basis(&self, p: usize) -> Result<Rc<Vec<BasicForm>>> {
        if p > self.s.dim() {
            return Err(KError::DegreeOutOfRange { degree: p, dim: self.s.dim() });
        }
        if let Some(b) = &self.harmonic.borrow()[p] {
            return Ok(b.clone());
        }
        let grid = self.s.grid();
        let t = IndexTables::get(grid.dim());
        let mut basis: Vec<BasicForm> = Vec::new();
        for &mask in t.masks(p) {
            let c = BasicForm::basis(grid, mask);
            let mut h = if p == 0 {
                c
            } else {
                let dc = codifferential(self.s, &c, false)?;
                if dc.max_abs() == 0.0 {
                    c
                } else {
                    c.sub(&exterior_d(&self.green(&dc, false)?))
                }
            };
            for _ in 0..2 {
                for b in &basis {
                    let proj = self.inner(b, &h);
                    h.axpy(-proj, b);
                }
            }
            let nrm = self.inner(&h, &h).sqrt();
            if nrm < 1e-8 {
                return Err(KError::SingularGram);
            }
            basis.push(h.scale(1.0 / nrm));
        }
        let rc = Rc::new(basis);
        self.harmonic.borrow_mut()[p] = Some(rc.clone());
        Ok(rc)
    }

    /// `(a)_H`.
    pub fn harmonic_part(&self, a: &BasicForm) -> Result<BasicForm> {
        let basis = self.harmonic_basis(a.degree())?;
        let mut out = BasicForm::zeros(a.grid(), a.degree());
        let ma = self.apply_gram(a);
        for h in basis.iter() {
            out.axpy(self.weight() * dot(h.data(), &ma), h);
        }
        Ok(out)
    }

    fn harmonic_dual(&self, p: usize) -> Result<Rc<Vec<Vec<f64>>>> {
        if let Some(d) = &self.harmonic_dual.borrow()[p] {
            return Ok(d.clone());
        }
        let dual: Vec<Vec<f64>> = self.harmonic_basis(p)?.iter().map(|h| self.apply_gram(h)).collect();
        let rc = Rc::new(dual);
        self.harmonic_dual.borrow_mut()[p] = Some(rc.clone());
        Ok(rc)
    }

    fn remove_harmonic(&self, p: usize, v: &mut [f64]) -> Result<()> {
        let basis = self.harmonic_basis(p)?;
        let dual = self.harmonic_dual(p)?;
        let w = self.weight();
        for (h, mh) in basis.iter().zip(dual.iter()) {
            let c = w * dot(mh, v);
            v.iter_mut().zip(h.data()).for_each(|(x, y)| *x -= c * y);
        }
        Ok(())
    }

    /// `(a_H, a - a_H)`, for `Delta` or (when `twisted`) `Delta^c`.
    pub fn harmonic_projection(&self, a: &BasicForm, twisted: bool) -> Result<(BasicForm, BasicForm)> {
        check(self.s, a)?;
        let h = if twisted {
            // Delta^c = Phi^{-1} Delta Phi, so H^c = Phi^{-1} H.
            let pa = phi_act(self.s, a)?;
            phi_inverse(self.s, &self.harmonic_part(&pa)?)?
        } else {
            self.harmonic_part(a)?
        };
        let rest = a.sub(&h);
        Ok((h, rest))
    }

    /// Green operator: the solution of `Delta x = a - a_H` orthogonal to the
    /// harmonic forms (twisted: `G^c = Phi^{-1} G Phi`).
    pub fn green(&self, a: &BasicForm, twisted: bool) -> Result<BasicForm> {
        check(self.s, a)?;
        if twisted {
            let pa = phi_act(self.s, a)?;
            return phi_inverse(self.s, &self.green(&pa, false)?);
        }
        let p = a.degree();
        let grid = self.s.grid();
        let k = a.ncomp();
        let r0 = a.sub(&self.harmonic_part(a)?);
        let mut res = self.apply_gram(&r0);
        let precondition = |r: &[f64]| -> Result<Vec<f64>> {
            let mut z = flat_inverse_laplacian(grid, r, k);
            self.remove_harmonic(p, &mut z)?;
            Ok(z)
        };
        let mut z = precondition(&res)?;
        let mut rz = dot(&res, &z);
        let rz0 = rz;
        let mut x = vec![0.0; res.len()];
        if !(rz0 > 0.0) {
            *self.last.borrow_mut() = SolveStats { iterations: 0, relative_residual: 0.0 };
            return Ok(BasicForm::zeros(grid, p));
        }
        let mut dir = z.clone();
        let max_iter = self.opts.max_iter.unwrap_or(10 * grid.points());
        let mut iterations = 0;
        let mut rel = 1.0;
        while iterations < max_iter {
            iterations += 1;
            let pform = BasicForm::from_data(grid, p, dir.clone());
            let ap = self.apply_gram(&laplacian(self.s, &pform, false)?);
            let pap = dot(&dir, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            x.iter_mut().zip(&dir).for_each(|(xi, di)| *xi += alpha * di);
            res.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= alpha * ai);
            z = precondition(&res)?;
            let rz_new = dot(&res, &z);
            rel = (rz_new.max(0.0) / rz0).sqrt();
            if rel <= self.opts.rel_tol {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            dir.iter_mut().zip(&z).for_each(|(di, zi)| *di = zi + beta * *di);
        }
        *self.last.borrow_mut() = SolveStats { iterations, relative_residual: rel };
        if rel > self.opts.rel_tol.max(1e-10) {
            return Err(KError::NoConvergence { iterations, residual: rel });
        }
        self.remove_harmonic(p, &mut x)?;
        Ok(BasicForm::from_data(grid, p, x))
    }
}

fn check(s: &KContactStructure, a: &BasicForm) -> Result<()> {
    if s.grid().same_as(a.grid()) {
        Ok(())
    } else {
        Err(KError::GridMismatch)
    }
}

/// `Phi^{-1} = (-1)^p Phi` on `p`-forms.
pub fn phi_inverse(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    let r = phi_act(s, a)?;
    Ok(if a.degree() % 2 == 0 { r } else { r.scale(-1.0) })
}

/// One-shot harmonic projection.
pub fn harmonic_projection(s: &KContactStructure, a: &BasicForm) -> Result<(BasicForm, BasicForm)> {
    Hodge::new(s).harmonic_projection(a, false)
}

/// One-shot Green operator.
pub fn green(s: &KContactStructure, a: &BasicForm, twisted: bool) -> Result<BasicForm> {
    Hodge::new(s).green(a, twisted)
}

/// Tolerance on the `d`-exactness and `d^c`-closedness of `ddbar_potential` input.
pub const DDC_PRECONDITION_TOL: f64 = 1e-8;

/// Potential `psi = -Lambda (a)_{H^c} - delta delta^c G^c a` with
/// `a = d G d^c psi`, for `d`-exact, `d^c`-closed `a`.
pub fn ddbar_potential(hodge: &Hodge, a: &BasicForm) -> Result<BasicForm> {
    let s = hodge.structure();
    check(s, a)?;
    if a.degree() < 2 {
        return Err(KError::DegreeOutOfRange { degree: a.degree(), dim: s.dim() });
    }
    let scale = calculus::norm(s, a)?;
    if scale == 0.0 {
        return Ok(BasicForm::zeros(a.grid(), a.degree() - 2));
    }
    let closed = calculus::norm(s, &exterior_d(a))? / scale;
    let harmonic = calculus::norm(s, &hodge.harmonic_part(a)?)? / scale;
    let dc_closed = calculus::norm(s, &calculus::d_c(s, a)?)? / scale;
    for (what, r) in [("d-closed", closed), ("no harmonic part", harmonic), ("d^c-closed", dc_closed)] {
        if r > DDC_PRECONDITION_TOL {
            return Err(KError::Precondition(format!("input is not {what}: relative residual {r:.3e}")));
        }
    }
    let (hc, _) = hodge.harmonic_projection(a, true)?;
    let first = calculus::lefschetz_lambda(s, &hc)?;
    let gca = hodge.green(a, true)?;
    let second = codifferential(s, &codifferential(s, &gca, true)?, false)?;
    Ok(first.add(&second).scale(-1.0))
}

/// `d G d^c psi`.
pub fn ddbar_image(hodge: &Hodge, psi: &BasicForm) -> Result<BasicForm> {
    let s = hodge.structure();
    Ok(exterior_d(&hodge.green(&calculus::d_c(s, psi)?, false)?))
}

/// Spectral summary of `Delta` on `p`-forms at one or two resolutions.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub degree: usize,
    pub resolution: usize,
    pub eigenvalues: Vec<f64>,
    pub eigen_residuals: Vec<f64>,
    pub iterations: usize,
    pub harmonic_dim: usize,
    /// Dimension of the harmonic basis built from the constant forms.
    pub constructed_dim: usize,
    pub threshold: f64,
    /// Smallest eigenvalue above the threshold.
    pub gap: f64,
    pub b_plus: Option<usize>,
    pub b_minus: Option<usize>,
    pub h_minus: Option<usize>,
    /// Smallest eigenvalues of `P a = (d delta a)^{J,-}` on `J`-anti-invariant forms.
    pub p_eigenvalues: Option<Vec<f64>>,
    pub p_kernel_dim: Option<usize>,
    pub resolutions: Vec<usize>,
    pub validation: Option<Box<SpectrumReport>>,
}

/// Relative harmonic threshold: eigenvalues below `HARMONIC_THRESHOLD * (2 pi / L)^2` count as zero.
pub const HARMONIC_THRESHOLD: f64 = 1e-6;

/// Number of eigenvalues requested for `p`-forms.
/// Extra block vectors that keep clusters straddling the wanted count from
/// stalling convergence.
const GUARD_VECTORS: usize = 4;

/// The first non-kernel eigenvalue must exceed the threshold by this factor.
const GAP_FACTOR: f64 = 10.0;

fn block_size(dim: usize, p: usize) -> usize {
    if p == 2 {
        12
    } else {
        2 * crate::forms::binomial(dim, p) + 2
    }
}

fn random_block(grid: &Grid, p: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cutoff = 2.min(grid.size() / 2 - 1);
    (0..count)
        .map(|_| {
            let sd = rand::Rng::gen::<u64>(&mut rng);
            let mut v = random_basic_form(grid, p, sd, cutoff)?.into_data();
            if p == 0 {
                // random functions are mean-free; the kernel needs the constants
                let c: f64 = rand::Rng::gen_range(&mut rng, -1.0..1.0);
                v.iter_mut().for_each(|x| *x += c);
            }
            Ok(v)
        })
        .collect()
}

/// `J`-anti-invariant part `(a - Phi a) / 2` of a 2-form.
pub fn j_anti_invariant(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    Ok(a.sub(&phi_act(s, a)?).scale(0.5))
}

/// `J`-invariant part `(a + Phi a) / 2` of a 2-form.
pub fn j_invariant(s: &KContactStructure, a: &BasicForm) -> Result<BasicForm> {
    Ok(a.add(&phi_act(s, a)?).scale(0.5))
}

fn count_signs(m: &nalgebra::DMatrix<f64>, tol: f64) -> (usize, usize, usize) {
    let e = nalgebra::SymmetricEigen::new(0.5 * (m + m.transpose()));
    let mut c = (0, 0, 0);
    for &v in e.eigenvalues.iter() {
        if v > tol {
            c.0 += 1;
        } else if v < -tol {
            c.1 += 1;
        } else {
            c.2 += 1;
        }
    }
    c
}

/// Spectrum of `Delta` on `p`-forms at the structure's own resolution.
pub fn spectrum(s: &KContactStructure, p: usize) -> Result<SpectrumReport> {
    let hodge = Hodge::new(s);
    let grid = s.grid().clone();
    let first = grid.first_flat_eigenvalue();
    let threshold = HARMONIC_THRESHOLD * first;
    let k = block_size(s.dim(), p);
    let apply_a = |v: &[f64]| {
        let f = BasicForm::from_data(&grid, p, v.to_vec());
        hodge.apply_gram(&laplacian(s, &f, false).expect("same grid"))
    };
    let apply_b = |v: &[f64]| hodge.apply_gram(&BasicForm::from_data(&grid, p, v.to_vec()));
    let ncomp = crate::forms::binomial(s.dim(), p);
    let prec = |v: &[f64]| flat_inverse_laplacian(&grid, v, ncomp);
    let init = random_block(&grid, p, k + GUARD_VECTORS, 0x5eed + p as u64)?;
    let opts = LobpcgOptions { max_iter: 300, tol: 1e-7, wanted: k, coarse_above: GAP_FACTOR * threshold, coarse_rel: 1e-3 };
    let eig = lobpcg(&apply_a, &apply_b, &prec, init, &opts)?;
    let harmonic_dim = eig.values.iter().filter(|&&v| v < threshold).count();
    if harmonic_dim == k {
        return Err(KError::UnresolvedKernel { gap: 0.0, threshold });
    }
    let gap = eig.values[harmonic_dim];
    if gap < GAP_FACTOR * threshold {
        return Err(KError::UnresolvedKernel { gap, threshold });
    }
    let basis = hodge.harmonic_basis(p)?;
    let mut report = SpectrumReport {
        degree: p,
        resolution: grid.size(),
        eigenvalues: eig.values.clone(),
        eigen_residuals: eig.residuals.clone(),
        iterations: eig.iterations,
        harmonic_dim,
        constructed_dim: basis.len(),
        threshold,
        gap,
        b_plus: None,
        b_minus: None,
        h_minus: None,
        p_eigenvalues: None,
        p_kernel_dim: None,
        resolutions: vec![grid.size()],
        validation: None,
    };
    if p == 2 && s.n() == 2 {
        let m = basis.len();
        let stars: Vec<BasicForm> = basis.iter().map(|h| hodge_star(s, h)).collect::<Result<_>>()?;
        let sd = nalgebra::DMatrix::from_fn(m, m, |i, j| hodge.inner(&basis[i], &stars[j]));
        let (plus, minus, zero) = count_signs(&sd, 0.5);
        if zero > 0 {
            return Err(KError::UnresolvedKernel { gap: 0.0, threshold: 0.5 });
        }
        // harmonic forms with vanishing J-invariant part
        let inv: Vec<BasicForm> = basis.iter().map(|h| j_invariant(s, h)).collect::<Result<_>>()?;
        let t = nalgebra::DMatrix::from_fn(m, m, |i, j| hodge.inner(&inv[i], &inv[j]));
        let te = nalgebra::SymmetricEigen::new(0.5 * (&t + t.transpose()));
        let h_minus = te.eigenvalues.iter().filter(|&&v| v < 1e-6).count();
        report.b_plus = Some(plus);
        report.b_minus = Some(minus);
        report.h_minus = Some(h_minus);
        let (pe, pk) = p_operator_spectrum(s, &hodge, threshold)?;
        report.p_eigenvalues = Some(pe);
        report.p_kernel_dim = pk;
    }
    Ok(report)
}

/// Smallest eigenvalues and kernel dimension of `P a = (d delta a)^{J,-}` on
/// `J`-anti-invariant 2-forms. The kernel is `None` when the spectrum has no
/// clear gap above the threshold or the eigensolver stalls; it is only a
/// cross-check, so neither is an error.
fn p_operator_spectrum(s: &KContactStructure, hodge: &Hodge, threshold: f64) -> Result<(Vec<f64>, Option<usize>)> {
    let grid = s.grid().clone();
    let anti = |v: &[f64]| -> BasicForm {
        j_anti_invariant(s, &BasicForm::from_data(&grid, 2, v.to_vec())).expect("same grid")
    };
    let apply_a = |v: &[f64]| {
        let a = anti(v);
        let dd = exterior_d(&codifferential(s, &a, false).expect("same grid"));
        hodge.apply_gram(&j_anti_invariant(s, &dd).expect("same grid"))
    };
    let apply_b = |v: &[f64]| hodge.apply_gram(&anti(v));
    let prec = |v: &[f64]| anti(&flat_inverse_laplacian(&grid, v, 6)).into_data();
    let init: Vec<Vec<f64>> = random_block(&grid, 2, 5 + GUARD_VECTORS, 0xa11)?.iter().map(|v| anti(v).into_data()).collect();
    let eig = lobpcg(
        &apply_a,
        &apply_b,
        &prec,
        init,
        &LobpcgOptions {
            max_iter: 100,
            tol: 1e-7,
            wanted: 5,
            coarse_above: GAP_FACTOR * threshold,
            coarse_rel: 1e-3,
        },
    );
    let eig = match eig {
        Ok(e) => e,
        Err(KError::NoConvergence { .. }) => return Ok((Vec::new(), None)),
        Err(e) => return Err(e),
    };
    let kernel = eig.values.iter().filter(|&&v| v < threshold).count();
    let resolved = kernel < eig.values.len() && eig.values[kernel] >= GAP_FACTOR * threshold;
    Ok((eig.values, resolved.then_some(kernel)))
}

/// The resolution used to validate counts computed on `grid`.
pub fn validation_resolution(grid: &Grid) -> usize {
    if grid.n() == 1 || grid.size() < 16 {
        grid.size() * 2
    } else {
        grid.size() / 2
    }
}

/// Harmonic dimensions on `p`-forms (with `b^+`, `b^-`, `h^-` for 2-forms in
/// dimension 5), validated at a second resolution.
pub fn harmonic_dims(s: &KContactStructure, p: usize) -> Result<SpectrumReport> {
    let mut main = spectrum(s, p)?;
    let other = s.grid().resized(validation_resolution(s.grid()))?;
    let coarse = spectrum(&s.resample(&other)?, p)?;
    let key = |r: &SpectrumReport| (r.harmonic_dim, r.constructed_dim, r.b_plus, r.b_minus, r.h_minus);
    if key(&main) != key(&coarse) {
        return Err(KError::ResolutionDisagreement(format!(
            "N={}: {:?} vs N={}: {:?}",
            main.resolution,
            key(&main),
            coarse.resolution,
            key(&coarse)
        )));
    }
    if main.harmonic_dim != main.constructed_dim || (main.p_kernel_dim.is_some() && main.h_minus != main.p_kernel_dim) {
        return Err(KError::ResolutionDisagreement(format!(
            "eigenvalue count {} vs constructed basis {}; h^- {:?} vs ker P {:?}",
            main.harmonic_dim, main.constructed_dim, main.h_minus, main.p_kernel_dim
        )));
    }
    main.resolutions.push(coarse.resolution);
    main.validation = Some(Box::new(coarse));
    Ok(main)
}
