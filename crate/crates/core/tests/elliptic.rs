mod common;

use std::f64::consts::PI;

use common::{flat, perturbed, product, rel};
use kcontact::calculus::{codifferential, d_c, exterior_d, laplacian, norm};
use kcontact::elliptic::*;
use kcontact::{random_basic_form, BasicForm, KError, ScalarField};

#[test]
fn harmonic_projection_examples() {
    let s = flat(2, 8);
    let g = s.grid();
    let hodge = Hodge::new(&s);
    let c = BasicForm::constant(g, 1, &[1.0, -0.5, 2.0, 0.25]);
    let (h, rest) = hodge.harmonic_projection(&c, false).unwrap();
    assert!(h.sub(&c).max_abs() < 1e-12 && rest.max_abs() < 1e-12);

    let f = random_basic_form(g, 0, 3, 2).unwrap();
    let (h, _) = hodge.harmonic_projection(&exterior_d(&f), false).unwrap();
    assert!(h.max_abs() <= 1e-9);

    let beta = random_basic_form(g, 1, 4, 2).unwrap();
    let a = BasicForm::omega(g).scale(1.5).add(&exterior_d(&beta));
    let (h, rest) = hodge.harmonic_projection(&a, false).unwrap();
    assert!(h.sub(&BasicForm::omega(g).scale(1.5)).max_abs() <= 1e-9);
    // orthogonality in the metric inner product
    assert!(hodge.inner(&h, &rest).abs() <= 1e-10 * norm(&s, &a).unwrap().powi(2));
}

#[test]
fn harmonic_projection_is_orthogonal_on_curved_structures() {
    let s = perturbed(16);
    let hodge = Hodge::new(&s);
    for p in 1..=3 {
        let a = random_basic_form(s.grid(), p, 17 + p as u64, 2).unwrap();
        let (h, rest) = harmonic_projection(&s, &a).unwrap();
        assert!(hodge.inner(&h, &rest).abs() <= 1e-10 * norm(&s, &a).unwrap().powi(2));
        assert!(laplacian(&s, &h, false).unwrap().max_abs() <= 1e-8 * h.max_abs().max(1e-3));
    }
}

#[test]
fn green_examples() {
    let s = flat(1, 32);
    let f = BasicForm::from_scalar(&ScalarField::from_fn(s.grid(), |x| (2.0 * PI * x[0]).sin()));
    let back = green(&s, &laplacian(&s, &f, false).unwrap(), false).unwrap();
    assert!(back.sub(&f).max_abs() <= 1e-9);
    let gf = green(&s, &f, false).unwrap();
    assert!(gf.sub(&f.scale(1.0 / (4.0 * PI * PI))).max_abs() <= 1e-12);
    let harmonic = BasicForm::constant(s.grid(), 1, &[1.0, 2.0]);
    assert!(green(&s, &harmonic, false).unwrap().max_abs() <= 1e-12);
}

#[test]
fn green_inverts_laplacian_and_commutes() {
    let s = perturbed(16);
    let hodge = Hodge::new(&s);
    for p in [0, 1, 2] {
        let a = random_basic_form(s.grid(), p, 60 + p as u64, 2).unwrap();
        let ga = hodge.green(&a, false).unwrap();
        let target = a.sub(&hodge.harmonic_part(&a).unwrap());
        let back = laplacian(&s, &ga, false).unwrap();
        assert!(rel(norm(&s, &back.sub(&target)).unwrap(), norm(&s, &target).unwrap()) <= 1e-9);
        // orthogonal to the harmonic space
        assert!(hodge.harmonic_part(&ga).unwrap().max_abs() <= 1e-9 * ga.max_abs());
        // G d = d G and G delta = delta G
        let gd = hodge.green(&exterior_d(&a), false).unwrap();
        let dg = exterior_d(&ga);
        assert!(rel(norm(&s, &gd.sub(&dg)).unwrap(), norm(&s, &gd).unwrap()) <= 1e-8);
        if p > 0 {
            let gdel = hodge.green(&codifferential(&s, &a, false).unwrap(), false).unwrap();
            let delg = codifferential(&s, &ga, false).unwrap();
            assert!(rel(norm(&s, &gdel.sub(&delg)).unwrap(), norm(&s, &gdel).unwrap()) <= 1e-8);
        }
    }
}

#[test]
fn ddbar_round_trips() {
    for s in [flat(2, 8), product(16)] {
        let hodge = Hodge::new(&s);
        let f = random_basic_form(s.grid(), 0, 8, 2).unwrap();
        let alpha = ddbar_image(&hodge, &f).unwrap();
        let psi = ddbar_potential(&hodge, &alpha).unwrap();
        let back = ddbar_image(&hodge, &psi).unwrap();
        assert!(rel(norm(&s, &back.sub(&alpha)).unwrap(), norm(&s, &alpha).unwrap()) <= 1e-7);

        let zero = BasicForm::zeros(s.grid(), 2);
        let psi0 = ddbar_potential(&hodge, &zero).unwrap();
        assert!(ddbar_image(&hodge, &psi0).unwrap().max_abs() == 0.0);
    }
}

#[test]
fn cohomologous_kahler_forms_recover_their_potential() {
    let s = flat(2, 8);
    let hodge = Hodge::new(&s);
    let f = random_basic_form(s.grid(), 0, 12, 2).unwrap();
    let w1 = BasicForm::omega(s.grid());
    let w2 = w1.add(&ddbar_image(&hodge, &f).unwrap());
    let psi = ddbar_potential(&hodge, &w2.sub(&w1)).unwrap();
    let rebuilt = w1.add(&ddbar_image(&hodge, &psi).unwrap());
    assert!(rel(norm(&s, &rebuilt.sub(&w2)).unwrap(), norm(&s, &w2.sub(&w1)).unwrap()) <= 1e-7);
    let err = psi.to_scalar().centered().sub(&f.to_scalar().centered());
    assert!(err.l2_norm() <= 1e-7 * f.to_scalar().l2_norm());
}

#[test]
fn ddbar_preconditions_are_enforced() {
    let s = perturbed(16);
    let hodge = Hodge::new(&s);
    // exact but not d^c-closed on a non-integrable structure
    let beta = random_basic_form(s.grid(), 1, 2, 2).unwrap();
    let bad = exterior_d(&beta);
    assert!(matches!(ddbar_potential(&hodge, &bad), Err(KError::Precondition(_))));
    // harmonic part present
    let w = BasicForm::omega(s.grid());
    assert!(matches!(ddbar_potential(&hodge, &w), Err(KError::Precondition(_))));
    let f = random_basic_form(s.grid(), 0, 2, 2).unwrap();
    let one = d_c(&s, &f).unwrap();
    assert!(matches!(ddbar_potential(&hodge, &one), Err(KError::DegreeOutOfRange { .. })));
}

#[test]
fn flat_five_model_dimensions() {
    let s = flat(2, 8);
    let r = harmonic_dims(&s, 2).unwrap();
    assert_eq!(r.harmonic_dim, 6);
    assert_eq!((r.b_plus, r.b_minus, r.h_minus), (Some(3), Some(3), Some(2)));
    assert_eq!(r.resolutions.len(), 2);
    assert!(r.eigenvalues.iter().all(|v| *v >= -1e-10));
    assert!(r.gap >= 10.0 * r.threshold);
    let r1 = harmonic_dims(&s, 1).unwrap();
    assert_eq!(r1.harmonic_dim, 4);
    let r0 = harmonic_dims(&flat(1, 16), 0).unwrap();
    assert_eq!(r0.harmonic_dim, 1);
}

#[test]
fn perturbation_does_not_raise_h() {
    let s = perturbed(16);
    let r = harmonic_dims(&s, 2).unwrap();
    assert!(r.h_minus.unwrap() <= 2);
    assert_eq!(r.b_plus, Some(3));
    assert_eq!(r.b_plus.unwrap() + r.b_minus.unwrap(), r.harmonic_dim);
}
