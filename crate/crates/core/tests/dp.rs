use dpqnn::dp::*;
use dpqnn::gradients::GradientVector;
use dpqnn::mlp::MlpModel;
use dpqnn::quantum::CircuitModel;
use dpqnn::rng;
use rand::Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

// Reference values computed with 50-digit arithmetic.
const GOLDEN_EPS_SIGMA1: f64 = 4.8448052626053894213;

#[test]
fn per_step_epsilon_golden() {
    let e = per_step_epsilon(1.0, 1e-5).unwrap();
    assert!((e - 4.8449).abs() < 1e-3);
    assert!(rel(e, GOLDEN_EPS_SIGMA1) < 1e-14);
    assert!((per_step_epsilon_verbatim(1.0, 1e-5).unwrap() - 211.2551).abs() < 1e-3);
}

#[test]
fn composition_goldens() {
    let cases = [
        (4.8449, 1e-5, 0.032, 1000, 1e-5, 49.525520446448728618, 0.00033),
        (GOLDEN_EPS_SIGMA1, 1e-5, 0.032, 1000, 1e-5, 49.524003203742724475, 0.00033),
        (GOLDEN_EPS_SIGMA1 / 5.0, 1e-5, 0.032, 31000, 1e-5, 56.467461005775687295, 0.00993),
        (0.5, 1e-6, 0.1, 7, 1e-3, 0.5096474714453348065, 0.0010007),
    ];
    for (eps, delta, q, t, dp, want_eps, want_delta) in cases {
        let s = compose(eps, delta, q, t, dp).unwrap();
        assert!(rel(s.composed_epsilon, want_eps) < 1e-12, "{} vs {want_eps}", s.composed_epsilon);
        assert!(rel(s.composed_delta, want_delta) < 1e-12, "{} vs {want_delta}", s.composed_delta);
    }
}

#[test]
fn composition_is_monotone_on_a_grid() {
    let sigmas = [0.5, 1.0, 2.0, 5.0, 10.0];
    let qs = [0.001, 0.01, 0.032, 0.1, 0.5];
    let steps = [1u64, 10, 100, 1000, 31000];
    let eps = |s: f64, q: f64, t: u64| {
        compose(per_step_epsilon(s, 1e-5).unwrap(), 1e-5, q, t, 1e-5).unwrap().composed_epsilon
    };
    for &s in &sigmas {
        for &q in &qs {
            for w in steps.windows(2) {
                assert!(eps(s, q, w[0]) < eps(s, q, w[1]));
            }
        }
    }
    for &s in &sigmas {
        for &t in &steps {
            for w in qs.windows(2) {
                assert!(eps(s, w[0], t) < eps(s, w[1], t));
            }
        }
    }
    for &q in &qs {
        for &t in &steps {
            for w in sigmas.windows(2) {
                assert!(eps(w[0], q, t) > eps(w[1], q, t));
            }
        }
    }
}

#[test]
fn accountant_report_for_the_default_configuration() {
    let cfg = DPConfig { noise_multiplier: 1.0, ..DPConfig::default() };
    let r = AccountantReport::from_config(&cfg).unwrap();
    assert_eq!(r.per_epoch.steps, 1000);
    assert_eq!(r.per_step.steps, 31000);
    assert!(rel(r.per_epoch.composed_epsilon, 49.524003203742724475) < 1e-12);
    let json: serde_json::Value = serde_json::to_value(&r.per_epoch).unwrap();
    for key in [
        "per_step_epsilon",
        "per_step_delta",
        "sampling_rate",
        "steps",
        "delta_prime",
        "subsampled_epsilon",
        "subsampled_delta",
        "composed_epsilon",
        "composed_delta",
    ] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn single_sample_noise_has_the_configured_spread() {
    // B = 1, zero gradient: the update is exactly σC·z.
    let g = [GradientVector::per_sample(vec![0.0])];
    let draws: Vec<f64> = (0..100_000u64)
        .map(|seed| noisy_batch_gradient(&g, 3.0, 2.0, &mut rng::stream(seed, rng::purpose::NOISE)).unwrap().values[0])
        .collect();
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let std = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 4.0 * 6.0 / n.sqrt());
    assert!((std - 6.0).abs() < 0.05, "std {std}");
}

#[test]
fn batch_noise_scales_with_inverse_batch_size() {
    let b = 16;
    let g: Vec<GradientVector> = (0..b).map(|_| GradientVector::per_sample(vec![0.5; 3])).collect();
    let mut r = rng::stream(9, rng::purpose::NOISE);
    let vals: Vec<f64> = (0..50_000)
        .flat_map(|_| noisy_batch_gradient(&g, 1.0, 4.0, &mut r).unwrap().values)
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let std = (vals.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - 0.5).abs() < 4.0 * 0.25 / n.sqrt());
    assert!((std - 0.25).abs() < 0.003);
}

#[test]
fn clipping_contract_over_many_gradients() {
    let mut r = rng::stream(10, 0);
    for _ in 0..20_000 {
        let dim = r.random_range(1..20);
        let scale = 10f64.powf(r.random_range(-3.0..3.0));
        let g = GradientVector::per_sample((0..dim).map(|_| r.random_range(-1.0..1.0) * scale).collect());
        let c = 10f64.powf(r.random_range(-2.0..2.0));
        let once = clip_gradient(&g, c).unwrap();
        assert!(once.norm() <= c);
        assert_eq!(clip_gradient(&once, c).unwrap(), once);
        if g.norm() <= c {
            assert_eq!(once, g);
        }
    }
}

#[test]
fn adam_first_step_moves_by_the_learning_rate() {
    let mut p = vec![1.0, -2.0, 0.5];
    let g = [0.3, -4.0, 0.0];
    let mut st = AdamState::new(3);
    adam_step(&mut p, &g, &mut st, 0.05).unwrap();
    // m̂ = g and v̂ = g², so the step is lr·g/(|g| + ε).
    assert!((p[0] - (1.0 - 0.05 * 0.3 / (0.3 + 1e-8))).abs() < 1e-15);
    assert!((p[1] - (-2.0 + 0.05 * 4.0 / (4.0 + 1e-8))).abs() < 1e-15);
    assert_eq!(p[2], 0.5);
}

#[test]
fn adam_second_step_matches_hand_computation() {
    let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8, 0.1);
    let (g1, g2) = (2.0, -1.0);
    let m1 = (1.0 - b1) * g1;
    let v1 = (1.0 - b2) * g1 * g1;
    let m2 = b1 * m1 + (1.0 - b1) * g2;
    let v2 = b2 * v1 + (1.0 - b2) * g2 * g2;
    let mut want = 0.0;
    want -= lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
    want -= lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
    let mut p = vec![0.0];
    let mut st = AdamState::new(1);
    adam_step(&mut p, &[g1], &mut st, lr).unwrap();
    adam_step(&mut p, &[g2], &mut st, lr).unwrap();
    assert!((p[0] - want).abs() < 1e-14);
}

fn toy_set(n: usize, seed: u64) -> TrainingSet {
    let mut r = rng::stream(seed, 0);
    let features: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| r.random_range(0.0..3.0)).collect()).collect();
    let targets = features.iter().map(|x| (x[0].cos() * 0.6 + 0.2 * x[1].sin()).clamp(-1.0, 1.0)).collect();
    TrainingSet::new(features, targets).unwrap()
}

#[test]
fn zero_noise_huge_clip_is_bit_identical_to_non_private() {
    let data = toy_set(16, 1);
    let model = CircuitModel::random(2, 1, 1, &mut rng::stream(2, rng::purpose::INIT)).unwrap();
    let cfg = DPConfig { clip_norm: 1e9, batch_size: 4, dataset_size: 16, epochs: 10, seed: 3, ..DPConfig::default() };
    let a = train(&data, model.clone(), &cfg).unwrap();
    let b = train_non_private(&data, model, &cfg).unwrap();
    assert_eq!(a.model.theta, b.model.theta);
    assert_eq!(a.step_losses, b.step_losses);
}

#[test]
fn noise_stream_is_isolated_from_batching() {
    // Changing σ must not change which batches are drawn: the first step's
    // loss is computed before any noise enters.
    let data = toy_set(16, 4);
    let model = CircuitModel::random(2, 1, 1, &mut rng::stream(5, rng::purpose::INIT)).unwrap();
    let base = DPConfig { batch_size: 4, dataset_size: 16, epochs: 1, seed: 6, ..DPConfig::default() };
    let quiet = train(&data, model.clone(), &base).unwrap();
    let loud = train(&data, model, &DPConfig { noise_multiplier: 5.0, ..base }).unwrap();
    assert_eq!(quiet.step_losses[0], loud.step_losses[0]);
    assert_ne!(quiet.model.theta, loud.model.theta);
    assert_eq!(quiet.noise_draws, loud.noise_draws);
}

#[test]
fn one_normal_draw_per_parameter_per_step() {
    let data = toy_set(16, 7);
    let model = CircuitModel::random(2, 1, 1, &mut rng::stream(8, rng::purpose::INIT)).unwrap();
    let cfg = DPConfig { batch_size: 4, dataset_size: 16, epochs: 3, noise_multiplier: 1.0, ..DPConfig::default() };
    let r = train(&data, model.clone(), &cfg).unwrap();
    assert_eq!(r.noise_draws, (3 * 4 * model.param_count()) as u64);
    assert_eq!(r.step_losses.len(), 12);
}

#[test]
fn training_is_reproducible() {
    let data = toy_set(16, 9);
    let model = MlpModel::random(&[2, 8, 1], &mut rng::stream(10, rng::purpose::INIT)).unwrap();
    let cfg = DPConfig { batch_size: 4, dataset_size: 16, epochs: 5, noise_multiplier: 2.0, ..DPConfig::default() };
    let a = train(&data, model.clone(), &cfg).unwrap();
    let b = train(&data, model, &cfg).unwrap();
    assert_eq!(a.model.params(), b.model.params());
    assert_eq!(serde_json::to_string(&a.manifest()).unwrap(), serde_json::to_string(&b.manifest()).unwrap());
}

#[test]
fn noiseless_training_reduces_the_loss() {
    let data = toy_set(32, 11);
    let model = CircuitModel::random(2, 2, 1, &mut rng::stream(12, rng::purpose::INIT)).unwrap();
    let cfg = DPConfig { batch_size: 8, dataset_size: 32, epochs: 40, ..DPConfig::default() };
    let r = train(&data, model, &cfg).unwrap();
    assert!(r.finished());
    assert!(r.epoch_losses.last().unwrap() < &(0.5 * r.epoch_losses[0]));
}

#[test]
fn divergence_ends_in_a_structured_abort() {
    let data = toy_set(16, 13);
    let model = MlpModel::random(&[2, 8, 1], &mut rng::stream(14, rng::purpose::INIT)).unwrap();
    let cfg = DPConfig {
        batch_size: 4,
        dataset_size: 16,
        epochs: 50,
        noise_multiplier: 1e8,
        optimizer: Optimizer::Sgd,
        learning_rate: 1e3,
        ..DPConfig::default()
    };
    let r = train(&data, model, &cfg).unwrap();
    match r.outcome {
        TrainOutcome::Aborted(d) => assert!(!d.reason.is_empty()),
        TrainOutcome::Finished => panic!("expected an abort"),
    }
}

#[test]
fn mismatched_dataset_size_is_a_config_error() {
    let data = toy_set(16, 15);
    let model = CircuitModel::new(2, 0, 1).unwrap();
    let cfg = DPConfig { batch_size: 4, dataset_size: 17, epochs: 1, ..DPConfig::default() };
    assert!(matches!(train(&data, model, &cfg), Err(dpqnn::Error::Config(_))));
}
