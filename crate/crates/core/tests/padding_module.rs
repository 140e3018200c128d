use learnpad::baseline::{pad_mean_interp, pad_reflect, pad_replicate, pad_zero, PadKind, PadMethod};
use learnpad::data::synthetic::synthetic_images;
use learnpad::nn::gradcheck::{draw_module_local, finite_diff_check};
use learnpad::padding::{FilterBank, LocalOptimizer, Mode, PaddingModule};
use learnpad::{Shape, Tensor};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tensor_strategy(min: usize, max: usize, max_channels: usize) -> impl Strategy<Value = Tensor<f64>> {
    (min..=max, min..=max, 1..=max_channels).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(0.0f64..1.0, h * w * c)
            .prop_map(move |v| Tensor::from_vec(Shape::d3(h, w, c).unwrap(), v).unwrap())
    })
}

fn theta_strategy(channels: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    proptest::collection::vec(proptest::array::uniform3(-1.0f64..1.0), channels)
}

fn module(weights: Vec<[f64; 3]>, s: usize) -> PaddingModule<f64> {
    PaddingModule::new(FilterBank::from_weights(weights).unwrap(), s).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_shape_and_interior(
        (m, theta) in tensor_strategy(4, 16, 3).prop_flat_map(|m| { let c = m.channels(); (Just(m), theta_strategy(c)) }),
        s in 1usize..=3,
    ) {
        let mut module = module(theta, s);
        let out = module.forward(&m).unwrap();
        prop_assert_eq!(out.shape().dims(), &[m.height() + 2 * s, m.width() + 2 * s, m.channels()][..]);
        prop_assert_eq!(out.interior(s).unwrap(), m);
    }

    #[test]
    fn channel_permutation_commutes(
        (m, theta) in tensor_strategy(4, 10, 3).prop_flat_map(|m| { let c = m.channels(); (Just(m), theta_strategy(c)) }),
        s in 1usize..=3,
        rot in 0usize..3,
    ) {
        let c = m.channels();
        let perm: Vec<usize> = (0..c).map(|k| (k + rot) % c).collect();
        let planes: Vec<_> = perm.iter().map(|&k| m.channel(k).unwrap()).collect();
        let permuted = Tensor::from_channels(&planes).unwrap();
        let permuted_theta = perm.iter().map(|&k| theta[k]).collect();
        let a = module(theta, s).pad(&m).unwrap();
        let b = module(permuted_theta, s).pad(&permuted).unwrap();
        for (j, &k) in perm.iter().enumerate() {
            prop_assert_eq!(b.channel(j).unwrap(), a.channel(k).unwrap());
        }
    }

    #[test]
    fn identity_filter_keeps_constants(h in 2usize..12, w in 2usize..12, v in 0.0f64..1.0, s in 1usize..=3) {
        let m = Tensor::new_filled(Shape::d2(h, w).unwrap(), v);
        let out = module(vec![[0.0, 1.0, 0.0]], s).pad(&m).unwrap();
        prop_assert!(out.data().iter().all(|&x| x == v));
    }

    #[test]
    fn backward_strips_exactly(
        m in tensor_strategy(4, 9, 2),
        s in 1usize..=3,
        seed in any::<u64>(),
        train in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut module = PaddingModule::new(FilterBank::uniform(m.channels(), 0.5, &mut rng).unwrap(), s).unwrap();
        module.set_mode(if train { Mode::Train } else { Mode::Eval });
        let before = module.filters().weights().to_vec();
        let out = module.forward(&m).unwrap();
        let g = Tensor::from_vec(out.shape().clone(), (0..out.data().len()).map(|k| (k as f64).sin()).collect()).unwrap();
        let dx = module.backward(&g).unwrap();
        prop_assert_eq!(dx, g.interior(s).unwrap());
        prop_assert_eq!(module.filters().weights() != &before[..], train);
    }

    #[test]
    fn baselines_obey_shape_and_round_trip(m in tensor_strategy(4, 12, 3), s in 1usize..=3) {
        for kind in [PadKind::Zero, PadKind::Reflect, PadKind::Replicate, PadKind::MeanInterp] {
            let out = PadMethod::new(kind, s).unwrap().apply(&m).unwrap();
            prop_assert_eq!(out.shape().dims(), &[m.height() + 2 * s, m.width() + 2 * s, m.channels()][..]);
            prop_assert_eq!(out.interior(s).unwrap(), m.clone());
        }
    }

    #[test]
    fn reflect_and_replicate_agree_on_constants(h in 4usize..10, w in 4usize..10, v in 0.0f64..1.0, s in 1usize..=3) {
        let m = Tensor::new_filled(Shape::d3(h, w, 2).unwrap(), v);
        prop_assert_eq!(pad_reflect(&m, s).unwrap(), pad_replicate(&m, s).unwrap());
    }

    #[test]
    fn replicate_composes(m in tensor_strategy(2, 8, 2)) {
        let twice = pad_replicate(&pad_replicate(&m, 1).unwrap(), 1).unwrap();
        prop_assert_eq!(pad_replicate(&m, 2).unwrap(), twice);
    }

    #[test]
    fn mean_interp_is_the_frozen_mean_module(m in tensor_strategy(2, 10, 3), s in 1usize..=3) {
        let mut frozen = PaddingModule::new(FilterBank::mean(m.channels()).unwrap(), s).unwrap();
        frozen.freeze();
        prop_assert_eq!(pad_mean_interp(&m, s).unwrap(), frozen.forward(&m).unwrap());
    }
}

#[test]
fn gradient_suite_over_a_hundred_instances() {
    let report = finite_diff_check("module local loss", 100, 1e-6, 2024, draw_module_local);
    assert!(report.passed(), "{report}");
    assert_eq!(report.components, 300);
}

#[test]
fn zero_padding_of_ones() {
    let m = Tensor::new_filled(Shape::d2(2, 2).unwrap(), 1.0f64);
    let out = pad_zero(&m, 1).unwrap();
    let expect: Vec<f64> = (0..16).map(|k| if [5, 6, 9, 10].contains(&k) { 1.0 } else { 0.0 }).collect();
    assert_eq!(out.data(), &expect[..]);
}

#[test]
fn small_lr_batch_updates_reduce_loss_monotonically() {
    let images: Vec<Tensor<f64>> = synthetic_images(64, 11).unwrap().iter().map(|i| i.pixels.cast()).collect();
    let bank = FilterBank::mean(3).unwrap().with_optimizer(LocalOptimizer::Sgd { lr: 0.01 });
    let mut module = PaddingModule::new(bank, 1).unwrap();
    let mut previous = module.evaluate_mse(&images).unwrap();
    for _ in 0..20 {
        module.forward_batch(&images).unwrap();
        module.local_update().unwrap();
        let now = module.evaluate_mse(&images).unwrap();
        assert!(now < previous, "{previous} -> {now}");
        previous = now;
    }
}
