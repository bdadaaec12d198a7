mod common;

use common::*;
use mompca::aggregation::MedianSettings;
use mompca::calibration::{self, BlockScales};
use mompca::geometry::{self, Frame, TangentVector};
use mompca::node_pca::NodeEstimate;
use mompca::rng;
use nalgebra::DMatrix;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

proptest! {
    #[test]
    fn alpha_outputs_stay_in_interval(tau_mu in 0.0f64..10.0, tau_sub in 0.0f64..10.0, eps in 0.01f64..0.5) {
        let s = BlockScales { s_mu: 0.0, s_sub: 0.0, tau_mu, tau_sub, p: 4, r: 1 };
        let a = calibration::alpha_rpca(&s, eps).unwrap().scale.alpha();
        prop_assert!(a >= eps && a <= 2.0 - eps);
    }

    #[test]
    fn alpha_rpca_ignores_common_radius_scaling(s_mu in 0.01f64..5.0, s_sub in 0.01f64..5.0, c in 0.1f64..10.0) {
        let a = BlockScales::from_radii(s_mu, s_sub, 6, 2).unwrap();
        let b = BlockScales::from_radii(c * s_mu, c * s_sub, 6, 2).unwrap();
        let (x, y) = (calibration::alpha_rpca(&a, 0.05).unwrap(), calibration::alpha_rpca(&b, 0.05).unwrap());
        prop_assert!((x.scale.alpha() - y.scale.alpha()).abs() < 1e-12);
    }

    #[test]
    fn alpha_rpca_increases_with_subspace_proxy(tau_mu in 0.1f64..5.0, t1 in 0.0f64..5.0, dt in 0.01f64..5.0) {
        let s = BlockScales { s_mu: 0.0, s_sub: 0.0, tau_mu, tau_sub: t1, p: 4, r: 1 };
        let lo = calibration::alpha_rpca(&s, 1e-9).unwrap().scale.alpha();
        let hi = calibration::alpha_rpca(&BlockScales { tau_sub: t1 + dt, ..s }, 1e-9).unwrap().scale.alpha();
        prop_assert!(hi > lo);
    }

    #[test]
    fn block_rule_matches_white_rule(mu in 0.01f64..5.0, sub in 0.01f64..5.0) {
        let (p, r) = (5, 2);
        let d = geometry::tangent_dim(p, r);
        let gamma = DMatrix::from_fn(d, d, |i, j| if i != j { 0.0 } else if i < p { mu } else { sub });
        let block = calibration::alpha_block(&gamma, p, r, 0.05).unwrap();
        let white = calibration::alpha_white(mu, sub, 0.05).unwrap();
        prop_assert!((block.scale.alpha() - white.scale.alpha()).abs() < 1e-12);
    }
}

#[test]
fn radial_mean_scale_matches_chi_median() {
    let (p, r, b, k) = (6, 2, 400, 4001);
    let sigma = 1.5;
    let mut g = rng::stream(41, &[]);
    let truth = random_point(p, r, &mut g);
    let frame = Frame::new(truth.clone());
    let nodes: Vec<NodeEstimate> = (0..k)
        .map(|i| {
            let w = TangentVector { w_mu: gaussian_vector(p, &mut g) * (sigma / (b as f64).sqrt()), w_sub: DMatrix::zeros(p - r, r) };
            NodeEstimate::from_point(i as i64, b, geometry::product_exp(&frame, &w).unwrap())
        })
        .collect();
    let scales = calibration::robust_block_scales(&nodes, &truth).unwrap();
    let chi_median = ChiSquared::new(p as f64).unwrap().inverse_cdf(0.5).sqrt();
    assert!((scales.s_mu / (sigma * chi_median) - 1.0).abs() < 0.03, "{} vs {}", scales.s_mu, sigma * chi_median);
    assert!(scales.s_sub < 1e-12);
    assert!((scales.tau_mu - scales.s_mu.powi(2) / p as f64).abs() < 1e-15);
}

#[test]
fn nodes_at_prelim_have_zero_scales_and_default_alpha() {
    let mut g = rng::stream(42, &[]);
    let truth = random_point(4, 1, &mut g);
    let nodes: Vec<NodeEstimate> = (0..5).map(|i| NodeEstimate::from_point(i, 10, truth.clone())).collect();
    let cal = calibration::calibrate_rpca(&nodes, 0.05, &MedianSettings::default()).unwrap();
    assert!(cal.scales.s_mu < 1e-12 && cal.scales.s_sub < 1e-12);
    assert!(cal.alpha.degenerate);
    assert_eq!(cal.alpha.scale.alpha(), 1.0);
}
