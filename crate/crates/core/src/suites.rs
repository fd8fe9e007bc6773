//! Verification suites shared by the command line and the acceptance tests.
//! Each returns plain residual tables; thresholds live with the callers.

use serde::Serialize;

use crate::calculus::{
    c2_norm, codifferential, exterior_d, hodge_star, inner, kahler_identity_residuals, lefschetz_l, lefschetz_lambda,
    laplacian, norm, phi_act,
};
use crate::curvature::{hermitian_scalar_with_oracle, scalar_variation_q_with, christoffel};
use crate::elliptic::{ddbar_image, ddbar_potential, Hodge};
use crate::error::Result;
use crate::forms::{random_basic_form, BasicForm};
use crate::grid::{ScalarField, TrigField};
use crate::moment::{moment_identity_residual, ContactHamiltonian, MomentResidual, TangentDeformation};
use crate::structure::KContactStructure;

fn parity(p: usize) -> f64 {
    if p % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn rel(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// Worst residuals over all degrees and samples.
#[derive(Debug, Clone, Default, Serialize)]
pub struct IdentityTable {
    /// `[L, delta^c] = -d`, `[L, delta] = d^c`, `[Lambda, d^c] = delta`,
    /// `[Lambda, d] = -delta^c`, relative to the `C^2` norm of the input.
    pub kahler: [f64; 4],
    /// `** = (-1)^p`, relative to `|a|`.
    pub star_squared: f64,
    /// `Phi Phi = (-1)^p`, relative to `|a|`.
    pub phi_squared: f64,
    /// `<L a, b> = <a, Lambda b>`, relative to `|La| |b|`.
    pub adjoint_l_lambda: f64,
    /// `<d a, b> = <a, delta b>`, relative to `|da| |b|`.
    pub adjoint_d_delta: f64,
    /// `<Delta a, b> = <a, Delta b>`, relative to `|Delta a| |b|`.
    pub laplacian_symmetry: f64,
    pub forms: usize,
}

impl IdentityTable {
    pub fn kahler_max(&self) -> f64 {
        self.kahler.iter().cloned().fold(0.0, f64::max)
    }
}

/// Random band-limited forms of every degree, `samples` per degree.
pub fn identity_suite(s: &KContactStructure, samples: usize, seed: u64, cutoff: usize) -> Result<IdentityTable> {
    let grid = s.grid();
    let d = s.dim();
    let mut t = IdentityTable::default();
    for p in 0..=d {
        for k in 0..samples {
            let sd = seed.wrapping_mul(1_000_003).wrapping_add((p * 1000 + k) as u64);
            let a = random_basic_form(grid, p, sd, cutoff)?;
            let b = random_basic_form(grid, p, sd ^ 0x5bd1e995, cutoff)?;
            t.forms += 1;
            let scale = c2_norm(&a);
            for (slot, r) in kahler_identity_residuals(s, &a)?.iter().enumerate() {
                t.kahler[slot] = t.kahler[slot].max(rel(*r, scale));
            }
            let amax = a.max_abs();
            let ss = hodge_star(s, &hodge_star(s, &a)?)?;
            t.star_squared = t.star_squared.max(rel(ss.sub(&a.scale(parity(p))).max_abs(), amax));
            let pp = phi_act(s, &phi_act(s, &a)?)?;
            t.phi_squared = t.phi_squared.max(rel(pp.sub(&a.scale(parity(p))).max_abs(), amax));
            if p + 2 <= d {
                let c = random_basic_form(grid, p + 2, sd ^ 0x27d4eb2f, cutoff)?;
                let la = lefschetz_l(&a);
                let lhs = inner(s, &la, &c)?;
                let rhs = inner(s, &a, &lefschetz_lambda(s, &c)?)?;
                t.adjoint_l_lambda = t.adjoint_l_lambda.max(rel((lhs - rhs).abs(), norm(s, &la)? * norm(s, &c)?));
            }
            if p < d {
                let c = random_basic_form(grid, p + 1, sd ^ 0x165667b1, cutoff)?;
                let da = exterior_d(&a);
                let lhs = inner(s, &da, &c)?;
                let rhs = inner(s, &a, &codifferential(s, &c, false)?)?;
                t.adjoint_d_delta = t.adjoint_d_delta.max(rel((lhs - rhs).abs(), norm(s, &da)? * norm(s, &c)?));
            }
            let la = laplacian(s, &a, false)?;
            let lb = laplacian(s, &b, false)?;
            let sym = (inner(s, &la, &b)? - inner(s, &a, &lb)?).abs();
            t.laplacian_symmetry = t.laplacian_symmetry.max(rel(sym, norm(s, &la)? * norm(s, &b)?));
        }
    }
    Ok(t)
}

/// Green operator and `dd^c`-lemma residuals on one structure.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GreenTable {
    /// `|Delta G a - (a - a_H)| / |a - a_H|` over forms of degree 1 and 2.
    pub green_roundtrip: f64,
    /// `|d G d^c psi(a) - a| / |a|` for `a = d G d^c f`.
    pub ddc_reconstruction: f64,
    /// `|psi - f_0| / |f_0|` for the pair `(omega, omega + d G d^c f)`.
    pub potential_recovery: f64,
    pub max_cg_iterations: usize,
    pub samples: usize,
}

/// Green round trips on random forms and `dd^c` reconstructions on
/// constructed cohomologous pairs.
pub fn green_suite(s: &KContactStructure, samples: usize, seed: u64, cutoff: usize) -> Result<GreenTable> {
    let grid = s.grid();
    let hodge = Hodge::new(s);
    let mut t = GreenTable { samples, ..Default::default() };
    for k in 0..samples {
        let sd = seed.wrapping_mul(7919).wrapping_add(k as u64);
        for p in [1, 2] {
            let a = random_basic_form(grid, p, sd + 100 * p as u64, cutoff)?;
            let ga = hodge.green(&a, false)?;
            t.max_cg_iterations = t.max_cg_iterations.max(hodge.last_stats().iterations);
            let target = a.sub(&hodge.harmonic_part(&a)?);
            let back = laplacian(s, &ga, false)?;
            t.green_roundtrip = t.green_roundtrip.max(rel(norm(s, &back.sub(&target))?, norm(s, &target)?));
        }
        let f = random_basic_form(grid, 0, sd + 7, cutoff)?;
        let alpha = ddbar_image(&hodge, &f)?;
        let psi = ddbar_potential(&hodge, &alpha)?;
        let back = ddbar_image(&hodge, &psi)?;
        t.ddc_reconstruction = t.ddc_reconstruction.max(rel(norm(s, &back.sub(&alpha))?, norm(s, &alpha)?));
        // cohomologous pair (omega, omega_f): recover the potential
        let omega = BasicForm::omega(grid);
        let omega_f = omega.add(&alpha);
        let rec = ddbar_potential(&hodge, &omega_f.sub(&omega))?;
        let f0 = f.to_scalar().centered();
        let r0 = rec.to_scalar().centered();
        t.potential_recovery = t.potential_recovery.max(rel(r0.sub(&f0).l2_norm(), f0.l2_norm()));
    }
    Ok(t)
}

/// `|s-bar - s_riem|` relative to `|s_riem|` in the max norm.
pub fn calibration_residual(s: &KContactStructure) -> Result<(f64, f64)> {
    let r = hermitian_scalar_with_oracle(s)?;
    let riem = r.riemannian.expect("oracle requested");
    Ok((r.scalar.sub(&riem).max_abs(), riem.max_abs()))
}

/// A random Hamiltonian with mean zero plus a random constant.
pub fn random_hamiltonian(s: &KContactStructure, seed: u64, cutoff: usize) -> Result<ContactHamiltonian> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let f = TrigField::random(s.dim(), cutoff, 1.0, true, &mut rng).sample(s.grid())?;
    let c: f64 = rng.gen_range(-1.0..1.0);
    Ok(ContactHamiltonian::new(f.add(&ScalarField::constant(s.grid(), c))))
}

/// The moment identity on `pairs` random `(f, A)`; `A` is drawn at the same
/// seed on every resolution, so refinement ratios compare like with like.
pub fn moment_suite(s: &KContactStructure, pairs: usize, seed: u64, cutoff: usize, t_step: f64) -> Result<Vec<MomentResidual>> {
    (0..pairs)
        .map(|k| {
            let sd = seed.wrapping_mul(104_729).wrapping_add(k as u64);
            let f = random_hamiltonian(s, sd, cutoff)?;
            let a = TangentDeformation::random(s, sd ^ 0x9e37_79b9, cutoff, 1.0)?;
            moment_identity_residual(s, &f, &a, t_step)
        })
        .collect()
}

/// `int Q(A) dv` relative to `|Q(A)|`.
pub fn q_integral(s: &KContactStructure, a: &TangentDeformation) -> Result<f64> {
    let lc = christoffel(s)?;
    let q = scalar_variation_q_with(s, &lc, a);
    Ok(rel(q.integral().abs(), q.l2_norm()))
}
