use eeg_inception::data::{load_trialset, save_trialset, synth_generate, train_test_split, SynthConfig};
use eeg_inception::model::{load_model, save_model};
use eeg_inception::train::{evaluate, fit, TrainConfig};
use eeg_inception::{Model32, ModelConfig};

fn small_config() -> ModelConfig {
    ModelConfig {
        time_len: 64,
        kernel_sizes: vec![3, 7, 11],
        pool_kernel: 5,
        n_inception: 3,
        ..ModelConfig::binary().with_depth(3)
    }
}

#[test]
fn stored_data_and_model_reproduce_the_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let set = synth_generate(&SynthConfig {
        n_per_class: 8,
        time_len: 64,
        rhythm_hz: 20.0,
        rhythm_amplitude: 2.0,
        noise_std: 0.5,
        seed: 3,
        ..Default::default()
    })
    .unwrap();
    let manifest = dir.path().join("set.json");
    save_trialset(&set, &manifest).unwrap();
    let loaded = load_trialset(&manifest).unwrap();
    assert_eq!(loaded, set);

    let (train_set, test_set) = train_test_split(&loaded, 0.75, 1).unwrap();
    assert_eq!((train_set.len(), test_set.len()), (12, 4));
    let mut model = Model32::new(small_config()).unwrap();
    let cfg = TrainConfig { epochs: 5, batch_size: 4, ..Default::default() };
    let history = fit(&mut model, &train_set, &cfg).unwrap();
    assert_eq!(history.len(), 5);

    let path = dir.path().join("model.bin");
    save_model(&model, &path).unwrap();
    let restored: Model32 = load_model(&path).unwrap();
    let a = evaluate(&model, &test_set, 1).unwrap();
    let b = evaluate(&restored, &test_set, 1).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.probabilities, b.probabilities);
    assert_eq!(a.report.confusion.iter().flatten().sum::<u64>(), 4);
}

#[test]
fn augmented_fit_is_deterministic() {
    let set = synth_generate(&SynthConfig {
        n_per_class: 5,
        time_len: 64,
        high_noise_std: 1.0,
        seed: 5,
        ..Default::default()
    })
    .unwrap();
    let mut cfg = TrainConfig { epochs: 2, batch_size: 8, seed: 7, ..Default::default() };
    cfg.augment.factor = 3;
    let run = || {
        let mut m = Model32::new(small_config().with_seed(2)).unwrap();
        let h = fit(&mut m, &set, &cfg).unwrap();
        (m, h)
    };
    let (m1, h1) = run();
    let (m2, h2) = run();
    assert_eq!(h1, h2);
    assert_eq!(m1, m2);
}
