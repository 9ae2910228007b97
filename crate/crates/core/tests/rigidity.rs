use engel_lab::rigidity::inaba::random_control;
use engel_lab::rigidity::{
    accessible_membership, rigidity_probe, sample_d_curve, sample_d_curve_in, AccessRegion, Controls, DarbouxChart,
    ProbeConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn backward_curves_reach_the_negative_piece() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let g = random_control(&mut rng, 1.0, true);
        let u = g.u.clone();
        let c = sample_d_curve(&Controls::new(move |t| u(t), |_| -1.0), 1.0, 1e-3, [0.0; 4]).unwrap();
        assert_eq!(accessible_membership(&c.endpoint()), AccessRegion::AMinus);
    }
}

#[test]
fn sampled_curves_stay_tangent() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for chart in [DarbouxChart::Standard, DarbouxChart::Long] {
        for _ in 0..20 {
            let c = sample_d_curve_in(chart, &random_control(&mut rng, 2.0, false), 2.0, 1e-3, [0.1, 0.0, -0.2, 0.3]).unwrap();
            assert!(c.tangency_residual() < 1e-8, "{chart:?}: {}", c.tangency_residual());
        }
    }
}

#[test]
fn probe_depends_only_on_seed() {
    let cfg = ProbeConfig { n_trials: 200, ..ProbeConfig::default() };
    let a = rigidity_probe(&cfg).unwrap();
    let b = rigidity_probe(&cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.trials.windows(2).all(|w| w[0].index < w[1].index));
    let c = rigidity_probe(&ProbeConfig { seed: cfg.seed + 1, ..cfg }).unwrap();
    assert_ne!(a.trials[1].endpoint, c.trials[1].endpoint);
}
