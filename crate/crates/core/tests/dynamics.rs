use std::f64::consts::PI;
use std::sync::Arc;

use engel_lab::dynamics::holonomy::CLASSIFY_TOL;
use engel_lab::dynamics::{
    characteristic_orbit, classify_projective, developing_map, estimate_global_type, first_return,
    holonomy_closed_form, EstimatorConfig, GlobalType, ProjectiveType,
};
use engel_lab::engel::EngelStructure;
use engel_lab::lorentz::{magnetic_extension, product_extension, ConstantCurvatureUT, ExtensionBase};
use engel_lab::prolong::propellor::{equivariant_line, hyperbolic_seed, LinePath};
use engel_lab::prolong::{
    cartan_prolongation, flat_torus_product, lorentz_prolongation, propellor_structure, ContactModel,
    PropellorVariant,
};
use nalgebra::Matrix2;

fn magnetic(k: f64) -> EngelStructure {
    lorentz_prolongation(&magnetic_extension(ExtensionBase::Lie(ConstantCurvatureUT::new(k)))).unwrap()
}

fn product(k: f64) -> EngelStructure {
    lorentz_prolongation(&product_extension(ExtensionBase::Lie(ConstantCurvatureUT::new(k)))).unwrap()
}

fn propellor(m: [[i64; 2]; 2], variant: PropellorVariant) -> EngelStructure {
    let line: LinePath = match m {
        [[1, 0], [0, 1]] => Arc::new(|t: f64| [(2.0 * PI * t).cos(), (2.0 * PI * t).sin()]),
        [[1, 1], [0, 1]] => equivariant_line(m, [0.0, 1.0]).unwrap(),
        _ => equivariant_line(m, hyperbolic_seed(m).unwrap()).unwrap(),
    };
    propellor_structure(m, line, variant).unwrap().1
}

fn global(s: &EngelStructure) -> GlobalType {
    estimate_global_type(s, 3, &EstimatorConfig::default()).unwrap().kind
}

fn line_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

#[test]
fn magnetic_type_table() {
    let cases = [
        (-2.0, GlobalType::Elliptic),
        (-1.0, GlobalType::Parabolic { genuine: true }),
        (-0.5, GlobalType::Hyperbolic { genuine: true }),
        (0.0, GlobalType::Parabolic { genuine: true }),
        (0.5, GlobalType::Elliptic),
        (1.0, GlobalType::Elliptic),
    ];
    for (k, want) in cases {
        assert_eq!(global(&magnetic(k)), want, "kappa = {k}");
    }
}

#[test]
fn magnetic_hyperbolic_lines_and_parabolic_line() {
    let e = estimate_global_type(&magnetic(-0.5), 2, &EstimatorConfig::default()).unwrap();
    let expanding = 1.0f64.atan2(0.5);
    let contracting = 1.0f64.atan2(-0.5);
    for o in &e.orbits {
        assert!(line_gap(o.unstable_line, expanding) < 1e-3, "{}", o.unstable_line);
        assert!(line_gap(o.stable_line, contracting) < 1e-3, "{}", o.stable_line);
    }
    // the line spanned by Ỹ, the second quotient frame vector
    let e = estimate_global_type(&magnetic(-1.0), 2, &EstimatorConfig::default()).unwrap();
    for o in &e.orbits {
        assert!(line_gap(o.stable_line, PI / 2.0) < 0.05 && line_gap(o.unstable_line, PI / 2.0) < 0.05);
    }
}

#[test]
fn product_type_table() {
    assert_eq!(global(&product(1.0)), GlobalType::Elliptic);
    assert_eq!(global(&product(0.0)), GlobalType::Parabolic { genuine: true });
    assert_eq!(global(&product(-1.0)), GlobalType::Hyperbolic { genuine: true });
}

#[test]
fn propellor_types() {
    let rot = PropellorVariant::RotatingPlane;
    assert_eq!(global(&propellor([[2, 1], [1, 1]], rot)), GlobalType::Hyperbolic { genuine: true });
    assert_eq!(global(&propellor([[1, 1], [0, 1]], rot)), GlobalType::Parabolic { genuine: true });
    assert_eq!(global(&propellor([[1, 0], [0, 1]], rot)), GlobalType::Elliptic);
    for m in [[[2, 1], [1, 1]], [[1, 1], [0, 1]], [[1, 0], [0, 1]]] {
        let s = propellor(m, PropellorVariant::InvariantField);
        assert!(matches!(global(&s), GlobalType::Parabolic { .. }), "{m:?}");
    }
}

#[test]
fn transport_matches_closed_form() {
    for k in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0] {
        let s = magnetic(k);
        let o = characteristic_orbit(&s, &[0.1, 0.2, 0.3, 0.4], 1.0, 1e-3).unwrap();
        let a = Matrix2::new(0.0, -k * (k + 1.0), 1.0, 0.0);
        let closed = holonomy_closed_form(a)(1.0);
        let err = (o.matrix(o.len() - 1) - closed).amax();
        assert!(err < 1e-6, "kappa = {k}: {err:e}");
    }
    let o = characteristic_orbit(&magnetic(-1.0), &[0.0; 4], 3.0, 1e-3).unwrap();
    assert!((o.matrix(o.len() - 1) - Matrix2::new(1.0, 0.0, 3.0, 1.0)).amax() < 1e-6);
}

#[test]
fn developing_angles_are_monotone() {
    for s in [magnetic(1.0), magnetic(-0.5), product(0.0), propellor([[2, 1], [1, 1]], PropellorVariant::RotatingPlane)] {
        for p in s.sample_points(3) {
            let o = characteristic_orbit(&s, &p, 2.0, 0.01).unwrap();
            developing_map(&o).unwrap();
        }
    }
}

#[test]
fn cartan_fiber_is_elliptic_of_length_pi() {
    let s = cartan_prolongation(&ContactModel::standard_r3()).unwrap();
    let c = first_return(&s, &[0.3, -0.2, 0.5, 0.1], 5.0, 0.01).unwrap();
    assert!((c.period - PI).abs() < 1e-6);
    match classify_projective(&c.holonomy, CLASSIFY_TOL).unwrap() {
        ProjectiveType::Elliptic { length } => assert!((length - PI).abs() < 1e-6, "{length}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn flat_torus_closed_characteristics_are_parabolic() {
    let s = flat_torus_product().unwrap();
    let c = first_return(&s, &[0.5, 1.0, 0.0, 0.2], 10.0, 0.01).unwrap();
    assert!((c.period - 2.0 * PI).abs() < 1e-6, "{}", c.period);
    assert_eq!(classify_projective(&c.holonomy, CLASSIFY_TOL).unwrap(), ProjectiveType::Parabolic);
}

#[test]
fn lie_models_report_no_closed_orbit() {
    assert!(first_return(&magnetic(1.0), &[0.0; 4], 10.0, 0.01).is_err());
}
