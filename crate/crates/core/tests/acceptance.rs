//! Acceptance suite: one test and one PASS/FAIL line per criterion.
//!
//! Lines go straight to the stdout handle so they appear in the log even
//! when the harness captures test output.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::Instant;

use common::{flat, grid, perturbed, product};
use kcontact::calculus::{d_c, exterior_d, norm};
use kcontact::curvature::scalar_curvature;
use kcontact::elliptic::{harmonic_dims, Hodge};
use kcontact::flow::*;
use kcontact::moment::{calabi, deform_path, futaki, futaki_lower_bound, ContactHamiltonian, TangentDeformation, TorusAlgebra};
use kcontact::presets::{self, ShearPerturbation};
use kcontact::suites::{calibration_residual, green_suite, identity_suite, moment_suite, IdentityTable};
use kcontact::{random_basic_form, KContactStructure};

fn line(id: u32, title: &str, pass: bool, detail: &str, start: Instant) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} {verdict} {title}: {detail} [{:.1} s]", start.elapsed().as_secs_f64());
}

const SAMPLES: usize = 20;

fn identity_tables() -> &'static (IdentityTable, IdentityTable, f64) {
    static T: OnceLock<(IdentityTable, IdentityTable, f64)> = OnceLock::new();
    T.get_or_init(|| {
        let start = Instant::now();
        let h3 = identity_suite(&flat(1, 32), SAMPLES, 1, 2).unwrap();
        let p5 = identity_suite(&perturbed(16), SAMPLES, 1, 2).unwrap();
        (h3, p5, start.elapsed().as_secs_f64())
    })
}

/// The flow from the perturbed 5-model, shared by the Futaki and flow
/// criteria.
fn flow_run() -> &'static (KContactStructure, FlowTrace) {
    static F: OnceLock<(KContactStructure, FlowTrace)> = OnceLock::new();
    F.get_or_init(|| {
        let s = perturbed(16);
        let g = TorusAlgebra::reeb(s.grid());
        extremal_flow(&s, &g, &FlowOptions::default()).unwrap()
    })
}

#[test]
fn criterion_1_kahler_identities() {
    let start = Instant::now();
    let (h3, p5, _) = identity_tables();
    let worst = h3.kahler_max().max(p5.kahler_max());
    let pass = worst <= 1e-8 && h3.forms == 3 * SAMPLES && p5.forms == 5 * SAMPLES;
    line(1, "Kähler identities", pass, &format!("max relative commutator residual {worst:.2e} (tol 1e-8), flat n=1 N=32 and perturbed n=2 N=16, {SAMPLES} forms per degree"), start);
    assert!(pass);
}

#[test]
fn criterion_2_hodge_and_phi_algebra() {
    let start = Instant::now();
    let (h3, p5, _) = identity_tables();
    let sq = [h3.star_squared, h3.phi_squared, p5.star_squared, p5.phi_squared].into_iter().fold(0.0, f64::max);
    let adj = [h3.adjoint_l_lambda, h3.adjoint_d_delta, p5.adjoint_l_lambda, p5.adjoint_d_delta].into_iter().fold(0.0, f64::max);
    let pass = sq <= 1e-10 && adj <= 1e-9;
    line(2, "Hodge / Phi algebra", pass, &format!("star^2, Phi^2 residual {sq:.2e} (tol 1e-10); adjointness {adj:.2e} (tol 1e-9)"), start);
    assert!(pass);
}

#[test]
fn criterion_3_green_and_ddbar() {
    let start = Instant::now();
    let mut worst = [0.0f64; 3];
    for s in [product(16), presets::heisenberg(&grid(2, 16)), presets::random_j(&grid(1, 32), 5).unwrap()] {
        let t = green_suite(&s, 3, 4, 2).unwrap();
        worst[0] = worst[0].max(t.green_roundtrip);
        worst[1] = worst[1].max(t.ddc_reconstruction);
        worst[2] = worst[2].max(t.potential_recovery);
    }
    let pass = worst[0] <= 1e-9 && worst[1] <= 1e-7 && worst[2] <= 1e-7;
    line(
        3,
        "Green / ddbar suite",
        pass,
        &format!(
            "round trip {:.2e} (tol 1e-9), reconstruction {:.2e} (tol 1e-7), potential recovery {:.2e} (tol 1e-7)",
            worst[0], worst[1], worst[2]
        ),
        start,
    );
    assert!(pass);
}

/// `s-bar` on the `size` grid against a reference on the 64 grid, compared
/// at the shared grid points.
fn discretization_error(seed: u64, size: usize, reference: &kcontact::ScalarField) -> f64 {
    let g = grid(1, size);
    let sb = scalar_curvature(&presets::random_j(&g, seed).unwrap()).unwrap();
    let rg = reference.grid();
    let mut err: f64 = 0.0;
    for pt in 0..g.points() {
        let x = g.coords(pt);
        let idx: Vec<usize> = x.iter().map(|c| (c * rg.size() as f64).round() as usize % rg.size()).collect();
        let rp = (0..rg.points()).find(|&q| (0..2).all(|a| rg.index_along(q, a) == idx[a])).unwrap();
        err = err.max((sb.values()[pt] - reference.values()[rp]).abs());
    }
    err / reference.max_abs()
}

#[test]
fn criterion_4_curvature_calibration() {
    let start = Instant::now();
    let mut worst_cal: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    for seed in 0..10 {
        for size in [16, 32] {
            let (diff, scale) = calibration_residual(&presets::random_j(&grid(1, size), seed).unwrap()).unwrap();
            worst_cal = worst_cal.max(diff / scale);
        }
        let reference = scalar_curvature(&presets::random_j(&grid(1, 64), seed).unwrap()).unwrap();
        let (e16, e32) = (discretization_error(seed, 16, &reference), discretization_error(seed, 32, &reference));
        worst_ratio = worst_ratio.min(e16 / e32.max(f64::MIN_POSITIVE));
    }
    let pass = worst_cal <= 5e-6 && worst_ratio >= 16.0;
    line(
        4,
        "curvature calibration",
        pass,
        &format!(
            "max |s-bar - s_riem| / |s_riem| = {worst_cal:.2e} (tol 5e-6) over 10 structures at N=16 and 32; \
             discretization error decay N=16 -> 32 at least {worst_ratio:.1e}x (need 16x)"
        ),
        start,
    );
    assert!(pass);
}

/// The stated identity carries the opposite sign of what the independent
/// oracles measure, so its residual is `3 |int f Q|` and the literal bound
/// cannot be met. The line reports FAIL; the test pins that analysis and
/// checks the identity that does hold.
#[test]
fn criterion_5_moment_map() {
    let start = Instant::now();
    let fine = moment_suite(&perturbed(16), 10, 1, 1, 1e-4).unwrap();
    let coarse = moment_suite(&perturbed(8), 10, 1, 1, 1e-4).unwrap();
    let worst = |v: &[kcontact::moment::MomentResidual], f: &dyn Fn(&kcontact::moment::MomentResidual) -> f64| {
        v.iter().map(|m| f(m) / m.scale).fold(0.0, f64::max)
    };
    let stated = worst(&fine, &|m| m.residual);
    let stated_fd = worst(&fine, &|m| m.residual_fd);
    let stated_ratio = worst(&coarse, &|m| m.residual) / stated;
    let measured = worst(&fine, &|m| m.residual_measured);
    let measured_fd = worst(&fine, &|m| m.residual_measured_fd);
    let measured_coarse = worst(&coarse, &|m| m.residual_measured);
    let measured_ratio = measured_coarse / measured.max(f64::MIN_POSITIVE);
    let literal = stated <= 1e-5 && stated_fd <= 1e-5 && stated_ratio >= 4.0;
    line(
        5,
        "moment map identity as stated",
        literal,
        &format!(
            "|Omega(-L_X Phi, A) + int f Q(A)| / scale = {stated:.2e}, finite-difference Q {stated_fd:.2e} (tol 1e-5), \
             N=8 -> 16 ratio {stated_ratio:.2} (need 4); measured Omega(-L_X Phi, A) = 2 int f Q(A): \
             residual {measured:.2e}, finite-difference {measured_fd:.2e}, N=8 {measured_coarse:.2e} -> 16 ratio {measured_ratio:.1e}"
        ),
        start,
    );
    for m in &fine {
        assert!(m.q_side.abs() > 1e-3 * m.scale);
        assert!((m.residual - 3.0 * m.q_side.abs()).abs() <= 1e-5 * m.scale);
        assert!((m.q_side - m.fd_side).abs() <= 1e-5 * m.scale);
    }
    // both resolutions may already sit at roundoff, where a ratio means nothing
    assert!(measured <= 1e-5 && measured_fd <= 1e-5);
    assert!(measured_ratio >= 4.0 || measured_coarse <= 1e-12);
}

#[test]
fn criterion_6_harmonic_dimensions() {
    let start = Instant::now();
    let r = harmonic_dims(&flat(2, 16), 2).unwrap();
    let v = r.validation.as_ref().expect("second resolution");
    let triple = |r: &kcontact::elliptic::SpectrumReport| (r.b_plus, r.b_minus, r.h_minus);
    let flat_ok = triple(&r) == (Some(3), Some(3), Some(2)) && triple(v) == triple(&r) && r.resolutions.len() == 2;
    let ss = semi_sasakian(&flat(2, 8)).unwrap();
    let pert = harmonic_dims(&perturbed(16), 2).unwrap();
    let pass = flat_ok && ss.semi_sasakian && pert.h_minus.unwrap() <= 2 && pert.b_plus == Some(3);
    line(
        6,
        "harmonic dimensions",
        pass,
        &format!(
            "flat (b+, b-, h-) = {:?} at N={:?}; flat semi-Sasakian {}; perturbed h- = {:?}, b+ = {:?}",
            triple(&r),
            r.resolutions,
            ss.semi_sasakian,
            pert.h_minus,
            pert.b_plus
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_7_j_anti_invariant_part() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut nontrivial: f64 = 0.0;
    for (name, s) in [("flat", flat(2, 8)), ("product5", product(16)), ("perturbed5", perturbed(16))] {
        let hodge = Hodge::new(&s);
        for seed in 0..10 {
            let f = random_basic_form(s.grid(), 0, 700 + seed, 2).unwrap().to_scalar();
            let (diff, lhs) = j_invariance_defect(&s, &f).unwrap();
            let full = exterior_d(&hodge.green(&d_c(&s, &kcontact::BasicForm::from_scalar(&f)).unwrap(), false).unwrap());
            worst = worst.max(diff / norm(&s, &full).unwrap());
            if name == "perturbed5" {
                nontrivial = nontrivial.max(lhs / norm(&s, &full).unwrap());
            }
        }
    }
    let pass = worst <= 1e-7;
    line(
        7,
        "J-anti-invariant part of d G d^c f",
        pass,
        &format!("max |LHS - RHS| / |d G d^c f| = {worst:.2e} (tol 1e-7) on flat, product5, perturbed5 with 10 potentials each; largest relative LHS {nontrivial:.2e}"),
        start,
    );
    assert!(pass);
    assert!(nontrivial > 1e-8);
}

#[test]
fn criterion_8_futaki_layer() {
    let start = Instant::now();
    // constant scalar curvature
    let mut fut: f64 = 0.0;
    for s in [flat(1, 16), flat(2, 8)] {
        let g = TorusAlgebra::reeb(s.grid());
        fut = fut.max(futaki(&s, &g, &ContactHamiltonian::constant(s.grid(), 1.0)).unwrap().abs());
    }
    // invariance of the projected scalar curvature along deformations
    let s = perturbed(16);
    let g = TorusAlgebra::reeb(s.grid());
    let sbar = scalar_curvature(&s).unwrap();
    let base = g.project(&sbar);
    let mut inv: f64 = 0.0;
    for seed in 0..3 {
        let a = TangentDeformation::random(&s, 40 + seed, 1, 1.0).unwrap();
        for t in [1e-2, 0.1] {
            let pt = g.project(&scalar_curvature(&deform_path(&s, &a, t).unwrap()).unwrap());
            inv = inv.max(pt.sub(&base).l2_norm() / sbar.l2_norm());
        }
    }
    // the lower bound on 20 structures
    let mut structures: Vec<KContactStructure> = (0..10).map(|seed| presets::random_j(&grid(1, 16), seed).unwrap()).collect();
    structures.extend((0..10).map(|seed| presets::perturbed5(&grid(2, 8), 0.05, 100 + seed, 1).unwrap()));
    let mut gap_min = f64::INFINITY;
    for s in &structures {
        let g = TorusAlgebra::reeb(s.grid());
        gap_min = gap_min.min(calabi(s).unwrap() - futaki_lower_bound(s, &g).unwrap());
    }
    // equality at the flow endpoint, and only there
    let (_, trace) = flow_run();
    let start_gap = trace.records[0].lower_bound_gap;
    let end_gap = trace.last().lower_bound_gap;
    let pass = fut <= 1e-10 && inv <= 1e-6 && gap_min >= -1e-8 && end_gap.abs() <= 1e-6 && start_gap > 1e-6;
    line(
        8,
        "Futaki layer",
        pass,
        &format!(
            "futaki on constant s-bar {fut:.2e} (tol 1e-10); Pi s-bar path invariance {inv:.2e} (tol 1e-6); \
             min lower-bound gap over 20 structures {gap_min:.2e} (need >= -1e-8); gap at flow start {start_gap:.2e}, at endpoint {end_gap:.2e} (tol 1e-6)"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn criterion_9_flow_and_continuation() {
    let start = Instant::now();
    let (end, trace) = flow_run();
    let monotone = trace.records.windows(2).all(|w| w[1].calabi <= w[0].calabi);
    let last = trace.last();
    let flow_ok = trace.converged() && monotone && last.lie_residual <= 1e-6 && last.projection_residual <= 1e-6;
    end.validate(1e-10).unwrap();

    let gr = grid(2, 16);
    let family_def = ShearPerturbation::random_product(2, 1.0, 11, 1);
    let family = |t: f64| family_def.with_eps(t).structure(&gr);
    let g = TorusAlgebra::reeb(&gr);
    let opts = ContinuationOptions { t_max: 0.1, steps: 5, flow: FlowOptions::default(), check_semi_sasakian: true };
    let rep = continuation(&family, &g, &opts);
    let cont_ok = rep.halted.is_none()
        && rep.steps.len() == 6
        && rep.steps.iter().all(|st| st.trace.converged() && st.semi_sasakian == Some(true));
    let pass = flow_ok && cont_ok;
    line(
        9,
        "extremal flow and continuation",
        pass,
        &format!(
            "flow: {} iterations, calabi {:.4e} -> {:.4e}, monotone {monotone}, L_X Phi {:.2e}, s - Pi s {:.2e} (tol 1e-6); \
             continuation: t = 0..0.1 in 5 steps, reconverged {}/{}, semi-Sasakian {}/{}, halted {:?}",
            trace.iterations(),
            trace.records[0].calabi,
            last.calabi,
            last.lie_residual,
            last.projection_residual,
            rep.steps.iter().filter(|st| st.trace.converged()).count(),
            rep.steps.len(),
            rep.steps.iter().filter(|st| st.semi_sasakian == Some(true)).count(),
            rep.steps.len(),
            rep.halted
        ),
        start,
    );
    assert!(pass);
}
