use proptest::prelude::*;
use stationary_excursions::analytics::{class_k_residual, JointLt};
use stationary_excursions::bridges::{occupation_at, positive_occupation, sample_bessel3_bridge, vervaat};
use stationary_excursions::excursions::identity_samples;
use stationary_excursions::models::{lt_joint_from_green, DiffusionModel};
use stationary_excursions::rng::substream;
use stationary_excursions::stats::{empirical_joint_lt, ks_two_sample};
use stationary_excursions::{DiffusionModel32, PathConfig32, PathConfig64};

#[test]
fn small_rbm_batch_matches_transform_and_swaps_legs() {
    let model = DiffusionModel::rbm(1.0).unwrap();
    let cfg = PathConfig64::for_model(&model, 5e-3).unwrap();
    let s = identity_samples(&model, &cfg, 4000, 21).unwrap();
    assert_eq!(s.censored, 0);
    let (est, se) = empirical_joint_lt(&s.occupation_pairs(), 1.0, 0.5).unwrap();
    let exact = lt_joint_from_green(&model, 1.0, 0.5).unwrap();
    assert!((est - exact).abs() < 4.0 * se + 0.01, "{est} vs {exact}");
    assert!(ks_two_sample(&s.i_plus, &s.d0).unwrap().d < 0.05);
}

#[test]
fn single_precision_pipeline_runs() {
    let model = DiffusionModel32::sqou(1.0, -0.5).unwrap();
    let cfg = PathConfig32::for_model(&model, 1e-3).unwrap();
    let s = identity_samples(&model, &cfg, 200, 3).unwrap();
    assert_eq!(s.len() + s.censored, 200);
    for (p, m) in s.i_plus.iter().zip(&s.i_minus) {
        assert!(*p >= 0.0 && *m >= 0.0);
    }
    let lt32 = JointLt::from_model(model);
    assert!(class_k_residual(&lt32, 0.5f32, 2.0).unwrap() < 1e-3);
}

#[test]
fn seeds_fix_samples_exactly() {
    let model = DiffusionModel::reflbm01();
    let cfg = PathConfig64::for_model(&model, 1e-2).unwrap();
    let a = identity_samples(&model, &cfg, 50, 5).unwrap();
    let b = identity_samples(&model, &cfg, 50, 5).unwrap();
    let c = identity_samples(&model, &cfg, 50, 6).unwrap();
    assert_eq!(a.d0, b.d0);
    assert_ne!(a.d0, c.d0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn vervaat_image_carries_split_occupation(seed in 0u64..1_000, u in 0.001f64..0.999) {
        let b = sample_bessel3_bridge(1.0f64, 1e-2, &mut substream(seed, 0)).unwrap();
        let o = occupation_at(&b, u);
        let image = vervaat(&b, u).unwrap();
        prop_assert_eq!(positive_occupation(&image, b.h), o.i_plus);
        prop_assert!((o.i_plus + o.i_minus + o.tie - 1.0).abs() < 1e-9);
    }

    #[test]
    fn green_transforms_are_class_k(mu in 0.2f64..3.0, a in 0.05f64..5.0, b in 0.05f64..5.0) {
        prop_assume!((a - b).abs() > 1e-3);
        let lt = JointLt::from_model(DiffusionModel::rbm(mu).unwrap());
        prop_assert!(class_k_residual(&lt, a, b).unwrap() < 1e-8);
    }
}
