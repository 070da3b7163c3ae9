use pnr_core::metrics::{evaluate_checkpoint, EvalOptions};
use pnr_core::model::{Checkpoint, Mode, TrainConfig, Trainer};
use pnr_core::synth::{gen_toy_dataset, read_dataset, write_dataset};
use pnr_core::tensor::io::{load_matrix, save_matrix};
use pnr_core::{Error, Matrix};

#[test]
fn dataset_train_checkpoint_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ds = gen_toy_dataset(10, 6, 3).unwrap();
    write_dataset(dir.path(), &ds).unwrap();
    let back = read_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);

    let mut cfg = TrainConfig::for_mode(Mode::Multishot(2));
    cfg.steps = 5;
    let mut trainer = Trainer::new(cfg.clone()).unwrap();
    for _ in 0..cfg.steps {
        trainer.train_step(&back.train).unwrap();
    }
    let ck = Checkpoint {
        params: trainer.params.clone(),
        pnr: cfg.pnr,
        adam_generator: trainer.adam_generator.clone(),
        adam_discriminator: trainer.adam_discriminator.clone(),
    };
    let path = dir.path().join("model.pnrc");
    ck.save(&path).unwrap();
    let loaded = Checkpoint::load(&path).unwrap();
    assert_eq!(loaded, ck);

    let opts = EvalOptions {
        shots: vec![1, 2],
        ..EvalOptions::default()
    };
    let a = evaluate_checkpoint(&ck, &back.test, &opts).unwrap();
    let b = evaluate_checkpoint(&loaded, &back.test, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.get(2).unwrap().pairs, back.test.iter().map(|i| i.views.len()).sum::<usize>());
}

#[test]
fn config_text_round_trips() {
    for mode in [Mode::Supervised, Mode::Unsupervised, Mode::Multishot(3)] {
        let mut cfg = TrainConfig::for_mode(mode);
        cfg.seed = 99;
        cfg.adam.lr = 0.1 + 0.2;
        let text = cfg.to_text();
        assert_eq!(TrainConfig::parse(&text).unwrap(), cfg, "{text}");
    }
}

#[test]
fn pnrm_files_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.pnrm");
    let m = Matrix::from_rows(&[[f64::MIN_POSITIVE, -0.0, 1.0 / 3.0], [1e300, -2.5e-310, 7.0]]);
    save_matrix(&path, &m).unwrap();
    let back = load_matrix(&path).unwrap();
    assert!(back.data().iter().zip(m.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    std::fs::write(&path, b"PNRM").unwrap();
    assert!(matches!(load_matrix(&path), Err(Error::Io(_) | Error::Format(_))));
}

#[test]
fn checkpoint_refuses_data_of_another_shape() {
    let ds = gen_toy_dataset(5, 6, 1).unwrap();
    let mut cfg = TrainConfig::for_mode(Mode::Supervised);
    cfg.arch.image_size = 8;
    let t = Trainer::new(cfg.clone()).unwrap();
    let ck = Checkpoint {
        params: t.params.clone(),
        pnr: cfg.pnr,
        adam_generator: t.adam_generator.clone(),
        adam_discriminator: t.adam_discriminator.clone(),
    };
    let err = evaluate_checkpoint(&ck, &ds.test, &EvalOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}
