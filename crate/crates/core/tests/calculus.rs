mod common;

use std::f64::consts::PI;

use common::{flat, grid, perturbed, product, rel};
use kcontact::calculus::*;
use kcontact::elliptic::{j_anti_invariant, j_invariant};
use kcontact::forms::binomial;
use kcontact::{presets, random_basic_form, BasicForm, KContactStructure, ScalarField};
use proptest::prelude::*;

fn sine(s: &KContactStructure) -> BasicForm {
    BasicForm::from_scalar(&ScalarField::from_fn(s.grid(), |x| (2.0 * PI * x[0]).sin()))
}

#[test]
fn flat_phi_and_star_on_one_forms() {
    let s = flat(1, 16);
    let g = s.grid();
    let dx1 = BasicForm::basis(g, 0b01);
    let dx2 = BasicForm::basis(g, 0b10);
    assert!(phi_act(&s, &dx1).unwrap().sub(&dx2).max_abs() < 1e-15);
    assert!(hodge_star(&s, &dx1).unwrap().sub(&dx2).max_abs() < 1e-15);
    assert!(hodge_star(&s, &dx2).unwrap().add(&dx1).max_abs() < 1e-15);
    let omega = BasicForm::omega(g);
    assert!(phi_act(&s, &omega).unwrap().sub(&omega).max_abs() < 1e-15);
}

#[test]
fn star_of_one_is_the_volume_form() {
    for n in [1, 2] {
        let s = perturbed_or_random(n);
        let one = BasicForm::from_scalar(&ScalarField::constant(s.grid(), 1.0));
        let vol = hodge_star(&s, &one).unwrap();
        let mut wn = BasicForm::omega(s.grid());
        for _ in 1..n {
            wn = wn.wedge(&BasicForm::omega(s.grid()));
        }
        let fact = if n == 2 { 2.0 } else { 1.0 };
        assert!(vol.sub(&wn.scale(1.0 / fact)).max_abs() < 1e-12);
    }
}

fn perturbed_or_random(n: usize) -> KContactStructure {
    if n == 1 {
        presets::random_j(&grid(1, 16), 5).unwrap()
    } else {
        perturbed(8)
    }
}

#[test]
fn derivatives_of_sine() {
    let s = flat(1, 32);
    let f = sine(&s);
    let cos = ScalarField::from_fn(s.grid(), |x| 2.0 * PI * (2.0 * PI * x[0]).cos());
    let df = exterior_d(&f);
    assert!(df.component(0).sub(&cos).max_abs() < 1e-10 * 2.0 * PI);
    assert!(df.component(1).max_abs() < 1e-12);
    let dcf = d_c(&s, &f).unwrap();
    assert!(dcf.component(0).max_abs() < 1e-12);
    assert!(dcf.component(1).sub(&cos).max_abs() < 1e-10 * 2.0 * PI);
    // delta (sin dx1) = -2 pi cos
    let a = BasicForm::from_components(s.grid(), 1, &[f.to_scalar(), ScalarField::zeros(s.grid())]).unwrap();
    let delta = codifferential(&s, &a, false).unwrap().to_scalar();
    assert!(delta.add(&cos).max_abs() < 1e-10 * 2.0 * PI);
    // eigenfunction
    let lap = laplacian(&s, &f, false).unwrap().to_scalar();
    assert!(lap.sub(&f.to_scalar().scale(4.0 * PI * PI)).max_abs() < 1e-9);
}

#[test]
fn trivial_zeros() {
    let s = perturbed(8);
    let g = s.grid();
    let c = BasicForm::from_scalar(&ScalarField::constant(g, 2.5));
    assert!(d_c(&s, &c).unwrap().max_abs() < 1e-14);
    assert!(laplacian(&s, &c, false).unwrap().max_abs() < 1e-12);
    let top = BasicForm::constant(g, 4, &[1.0]);
    assert!(exterior_d(&top).max_abs() == 0.0);
    let flat5 = flat(2, 8);
    let one_form = BasicForm::constant(g, 1, &[1.0, -2.0, 0.5, 3.0]);
    assert!(codifferential(&flat5, &one_form, false).unwrap().max_abs() < 1e-14);
    // degree overflow returns the zero form
    assert_eq!(lefschetz_l(&top).degree(), 4);
    assert!(lefschetz_l(&top).max_abs() == 0.0);
    assert!(codifferential(&s, &c, false).unwrap().max_abs() == 0.0);
}

#[test]
fn lefschetz_basics() {
    let s = perturbed(8);
    let g = s.grid();
    let one = BasicForm::from_scalar(&ScalarField::constant(g, 1.0));
    assert!(lefschetz_l(&one).sub(&BasicForm::omega(g)).max_abs() < 1e-15);
    let lw = lefschetz_lambda(&s, &BasicForm::omega(g)).unwrap().to_scalar();
    assert!(lw.sub(&ScalarField::constant(g, 2.0)).max_abs() < 1e-12);
}

#[test]
fn phi_commutes_with_star_and_is_an_isometry_pairing() {
    let s = perturbed(8);
    for p in 0..=4 {
        let a = random_basic_form(s.grid(), p, 11 + p as u64, 2).unwrap();
        let b = random_basic_form(s.grid(), p, 99 + p as u64, 2).unwrap();
        let lhs = phi_act(&s, &hodge_star(&s, &a).unwrap()).unwrap();
        let rhs = hodge_star(&s, &phi_act(&s, &a).unwrap()).unwrap();
        assert!(lhs.sub(&rhs).max_abs() <= 1e-10 * a.max_abs(), "p = {p}");
        let sa = hodge_star(&s, &a).unwrap();
        let sb = hodge_star(&s, &b).unwrap();
        let pi = pointwise_inner(&s, &sa, &sb).unwrap();
        let orig = pointwise_inner(&s, &a, &b).unwrap();
        assert!(pi.sub(&orig).max_abs() <= 1e-10 * orig.max_abs().max(1.0));
    }
}

#[test]
fn sasakian_laplacians_agree() {
    for s in [flat(2, 8), product(16)] {
        for p in 0..=4 {
            let a = random_basic_form(s.grid(), p, 5 + p as u64, 2).unwrap();
            let l = laplacian(&s, &a, false).unwrap();
            let lc = laplacian(&s, &a, true).unwrap();
            let r = rel(norm(&s, &l.sub(&lc)).unwrap(), norm(&s, &l).unwrap());
            assert!(r <= 1e-8, "p = {p}: {r:e}");
        }
    }
    // and they genuinely differ off the integrable locus
    let s = perturbed(16);
    let a = random_basic_form(s.grid(), 1, 5, 2).unwrap();
    let l = laplacian(&s, &a, false).unwrap();
    let lc = laplacian(&s, &a, true).unwrap();
    assert!(norm(&s, &l.sub(&lc)).unwrap() > 1e-6 * norm(&s, &l).unwrap());
}

#[test]
fn nijenhuis_reeb_constant_and_dimension_two() {
    let n = nijenhuis_transverse(&flat(1, 8));
    let (c, spread) = n.reeb_constant();
    assert!((c + 1.0).abs() < 1e-14 && spread < 1e-14);
    assert!(n.transverse_max() == 0.0);
    for seed in [1, 2, 3] {
        let s = presets::random_j(&grid(1, 32), seed).unwrap();
        let n = nijenhuis_transverse(&s);
        assert!(n.transverse_max() <= 1e-8);
        let (c, spread) = n.reeb_constant();
        assert!((c + 1.0).abs() < 1e-10 && spread < 1e-10);
    }
    let n = nijenhuis_transverse(&perturbed(16));
    assert!(n.transverse_max() > 1e-3);
    for (pt, a, b) in [(0, 0, 1), (77, 1, 3), (4000, 2, 0)] {
        for k in 0..4 {
            assert_eq!(n.transverse(pt, k, a, b), -n.transverse(pt, k, b, a));
        }
    }
}

/// `(d^c d + d d^c) f = d^c f (N(., .))`, and the left side is `J`-invariant
/// exactly when the transverse Nijenhuis tensor vanishes.
#[test]
fn ddc_defect_is_the_nijenhuis_term() {
    for s in [perturbed(16), presets::random_j(&grid(1, 32), 4).unwrap()] {
        let nij = nijenhuis_transverse(&s);
        for seed in 0..3 {
            let f = random_basic_form(s.grid(), 0, 40 + seed, 2).unwrap();
            let dcf = d_c(&s, &f).unwrap();
            let lhs = d_c(&s, &exterior_d(&f)).unwrap().add(&exterior_d(&dcf));
            let rhs = one_form_on_nijenhuis(&nij, &dcf);
            let scale = exterior_d(&dcf).max_abs();
            assert!(lhs.sub(&rhs).max_abs() <= 1e-8 * scale, "{:e}", lhs.sub(&rhs).max_abs() / scale);
            let anti = j_anti_invariant(&s, &lhs).unwrap().max_abs();
            if s.n() == 1 {
                assert!(anti <= 1e-8 * scale);
            } else {
                assert!(anti > 1e-4 * scale);
                assert!(j_invariant(&s, &rhs).unwrap().max_abs() <= 1e-10 * scale);
            }
        }
    }
}

#[test]
fn twisted_codifferential_matches_connection_formula() {
    let s = flat(2, 8);
    for p in 1..=4 {
        let a = random_basic_form(s.grid(), p, 3 * p as u64, 2).unwrap();
        let def = codifferential(&s, &a, true).unwrap();
        let conn = twisted_codifferential_via_connection(&a);
        assert!(def.sub(&conn).max_abs() <= 1e-10 * def.max_abs().max(1.0), "p = {p}");
    }
}

fn structure_for(n: usize) -> KContactStructure {
    if n == 1 {
        presets::random_j(&grid(1, 16), 8).unwrap()
    } else {
        perturbed(8)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn involutions_and_adjoints(seed in any::<u64>(), n in 1usize..=2, p in 0usize..=4) {
        let s = structure_for(n);
        let d = 2 * n;
        let p = p % (d + 1);
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let a = random_basic_form(s.grid(), p, seed, 2).unwrap();
        prop_assert_eq!(a.ncomp(), binomial(d, p));
        let pp = phi_act(&s, &phi_act(&s, &a).unwrap()).unwrap();
        prop_assert!(pp.sub(&a.scale(sign)).max_abs() <= 1e-12 * a.max_abs());
        let ss = hodge_star(&s, &hodge_star(&s, &a).unwrap()).unwrap();
        prop_assert!(ss.sub(&a.scale(sign)).max_abs() <= 1e-10 * a.max_abs());
        let dda = exterior_d(&exterior_d(&a));
        prop_assert!(dda.max_abs() <= 1e-10 * c2_norm(&a));
        let b = random_basic_form(s.grid(), p, seed ^ 0xabc, 2).unwrap();
        let la = laplacian(&s, &a, false).unwrap();
        let lb = laplacian(&s, &b, false).unwrap();
        let sym = (inner(&s, &la, &b).unwrap() - inner(&s, &a, &lb).unwrap()).abs();
        prop_assert!(sym <= 1e-10 * norm(&s, &la).unwrap() * norm(&s, &b).unwrap());
        prop_assert!(inner(&s, &la, &a).unwrap() >= -1e-10 * norm(&s, &la).unwrap() * norm(&s, &a).unwrap());
        if p + 2 <= d {
            let c = random_basic_form(s.grid(), p + 2, seed ^ 0xdef, 2).unwrap();
            let l = inner(&s, &lefschetz_l(&a), &c).unwrap();
            let r = inner(&s, &a, &lefschetz_lambda(&s, &c).unwrap()).unwrap();
            prop_assert!((l - r).abs() <= 1e-9 * norm(&s, &lefschetz_l(&a)).unwrap() * norm(&s, &c).unwrap());
        }
        if p < d {
            let c = random_basic_form(s.grid(), p + 1, seed ^ 0x123, 2).unwrap();
            for twisted in [false, true] {
                let l = inner(&s, &differential(&s, &a, twisted).unwrap(), &c).unwrap();
                let r = inner(&s, &a, &codifferential(&s, &c, twisted).unwrap()).unwrap();
                let scale = norm(&s, &differential(&s, &a, twisted).unwrap()).unwrap() * norm(&s, &c).unwrap();
                prop_assert!((l - r).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn kahler_identities_hold(seed in any::<u64>(), n in 1usize..=2, p in 0usize..=4) {
        let s = structure_for(n);
        let a = random_basic_form(s.grid(), p % (2 * n + 1), seed, 2).unwrap();
        let r = kahler_identity_residuals(&s, &a).unwrap();
        let scale = c2_norm(&a);
        for v in r {
            prop_assert!(v <= 1e-8 * scale);
        }
    }
}
