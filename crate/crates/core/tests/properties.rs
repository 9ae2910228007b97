//! Property suites over random points, curvatures and conjugations, run
//! under a fixed seed so failures reproduce.

use std::f64::consts::PI;

use engel_lab::dynamics::holonomy::CLASSIFY_TOL;
use engel_lab::dynamics::{
    characteristic_orbit, classify_projective, developing_map, integrate_characteristic, HolonomyLift,
    ProjectiveType,
};
use engel_lab::engel::EngelStructure;
use engel_lab::frame::{distribution_rank, FrameModel};
use engel_lab::numeric::NumericConfig;
use engel_lab::presets::build_preset;
use nalgebra::{DVector, Matrix2};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

fn config(cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(0x5eed), failure_persistence: None, ..Config::default() }
}

fn chart_preset() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["darboux", "long-darboux", "cartan-r3", "prequantum-local", "propellor-cat", "suspension-geodesic"])
}

/// A point of the structure's sampling box picked by four unit coordinates.
fn point_in(s: &EngelStructure, unit: [f64; 4]) -> Vec<f64> {
    let pts = s.sample_points(64);
    let mut p = pts[((unit[0] * 64.0) as usize).min(63)].clone();
    for (x, u) in p.iter_mut().zip(&unit[1..]) {
        *x += 1e-3 * (u - 0.5);
    }
    p
}

fn unit4() -> impl Strategy<Value = [f64; 4]> {
    [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64]
}

/// Winding number and numeric invariant of a class.
fn invariant(t: &ProjectiveType) -> (u32, f64) {
    match *t {
        ProjectiveType::Elliptic { length } => (0, length),
        ProjectiveType::Parabolic => (0, 0.0),
        ProjectiveType::Hyperbolic { trace } => (0, trace),
        ProjectiveType::TransParabolic { n, sign } => (n, f64::from(sign)),
        ProjectiveType::TransHyperbolic { n, trace } => (n, trace),
    }
}

fn rot(a: f64) -> Matrix2<f64> {
    Matrix2::new(a.cos(), -a.sin(), a.sin(), a.cos())
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn bracket_is_antisymmetric(name in chart_preset(), unit in unit4()) {
        let s = build_preset(name, None).unwrap();
        let p = point_in(&s, unit);
        let cfg = NumericConfig::default();
        for (a, b) in [(&s.d_span[0], &s.d_span[1]), (&s.w, &s.e_span[2])] {
            let ab = s.model.bracket(a, b, &p, &cfg).unwrap();
            let ba = s.model.bracket(b, a, &p, &cfg).unwrap();
            prop_assert!((ab + ba).amax() < 1e-9);
        }
    }

    #[test]
    fn lie_models_satisfy_jacobi(kappa in -3.0..3.0f64, magnetic in any::<bool>()) {
        let s = build_preset(if magnetic { "lorentz-magnetic" } else { "lorentz-product" }, Some(kappa)).unwrap();
        let FrameModel::Lie(m) = &s.model else { panic!("Lie preset expected") };
        prop_assert!(m.jacobi_defect() < 1e-12);
    }

    #[test]
    fn rank_is_invariant_under_frame_change(name in chart_preset(), unit in unit4(), g in prop::array::uniform9(-1.0..1.0f64)) {
        let s = build_preset(name, None).unwrap();
        let p = point_in(&s, unit);
        let e: Vec<DVector<f64>> = s.e_span.iter().map(|x| x.eval(&p).unwrap()).collect();
        // diagonally dominant, hence invertible
        let mixed: Vec<DVector<f64>> = (0..3)
            .map(|i| (0..3).map(|j| &e[j] * (g[3 * i + j] + if i == j { 3.0 } else { 0.0 })).sum())
            .collect();
        prop_assert_eq!(distribution_rank(&e, 1e-8).unwrap(), distribution_rank(&mixed, 1e-8).unwrap());
        prop_assert_eq!(distribution_rank(&mixed, 1e-8).unwrap(), 3);
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn characteristic_flow_is_reversible(name in chart_preset(), unit in unit4(), t in 0.1..0.8f64) {
        let s = build_preset(name, None).unwrap();
        let p = point_in(&s, unit);
        let f = integrate_characteristic(&s, &p, t, 1e-3).unwrap();
        let b = integrate_characteristic(&s, f.points.last().unwrap(), -t, 1e-3).unwrap();
        let err = p.iter().zip(b.points.last().unwrap()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-6, "error {err:e}");
    }

    #[test]
    fn developing_map_is_monotone(kappa in -3.0..3.0f64, magnetic in any::<bool>(), unit in unit4()) {
        let s = build_preset(if magnetic { "lorentz-magnetic" } else { "lorentz-product" }, Some(kappa)).unwrap();
        let o = characteristic_orbit(&s, &point_in(&s, unit), 8.0, 1e-2).unwrap();
        prop_assert!(developing_map(&o).is_ok());
    }

    #[test]
    fn class_is_conjugation_invariant(
        angle in 0.3..2.8f64,
        stretch in 0.2..1.5f64,
        turns in 0u32..3,
        conj in (0.0..PI, -1.5..1.5f64, 0.0..PI),
    ) {
        let diag = move |s: f64| Matrix2::new((stretch * s).exp(), 0.0, 0.0, (-stretch * s).exp());
        let paths: Vec<HolonomyLift> = vec![
            HolonomyLift::from_path(move |s| rot(angle * s), 0.2, 400).unwrap(),
            HolonomyLift::from_path(move |s| rot(2.0 * PI * f64::from(turns) * s) * diag(s), PI / 4.0, 400).unwrap(),
        ];
        let g = rot(conj.0) * Matrix2::new(conj.1.exp(), 0.0, 0.0, (-conj.1).exp()) * rot(conj.2);
        for h in &paths {
            let before = classify_projective(h, CLASSIFY_TOL).unwrap();
            let after = classify_projective(&h.conjugate(&g).unwrap(), CLASSIFY_TOL).unwrap();
            prop_assert_eq!(before.label(), after.label());
            let (x, y) = (invariant(&before), invariant(&after));
            prop_assert!(x.0 == y.0 && (x.1 - y.1).abs() < 1e-6, "{before} vs {after}");
        }
    }
}
