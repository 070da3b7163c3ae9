use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use pnr_bench::random_problem;
use pnr_core::layer::pnr_forward;
use pnr_core::model::{Mode, TrainConfig, Trainer};
use pnr_core::synth::gen_toy_dataset;
use pnr_core::{PnrConfig, Tape};

/// Forward plus backward through the layer on a toy-sized problem.
fn layer_round_trip(c: &mut Criterion) {
    let prob = random_problem(3, 16, 3, 16);
    let p_t = random_problem(4, 16, 3, 1).p().clone();
    for (name, cfg) in [("lse", PnrConfig::lse()), ("lad", PnrConfig::lad())] {
        c.bench_function(&format!("pnr_layer_{name}_16x3x16"), |b| {
            b.iter(|| {
                let mut tape = Tape::new();
                let h = tape.leaf(prob.h().clone());
                let p = tape.leaf(prob.p().clone());
                let pt = tape.leaf(p_t.clone());
                let out = pnr_forward(&mut tape, h, p, pt, &cfg).unwrap();
                let loss = tape.sum(out.h_t);
                black_box(tape.backward(loss).unwrap());
            })
        });
    }
}

fn train_step(c: &mut Criterion) {
    let data = gen_toy_dataset(20, 6, 7).unwrap();
    for (name, mode) in [("supervised", Mode::Supervised), ("unsupervised", Mode::Unsupervised)] {
        let mut trainer = Trainer::new(TrainConfig::for_mode(mode)).unwrap();
        c.bench_function(&format!("train_step_{name}"), |b| {
            b.iter(|| trainer.train_step(black_box(&data.train)).unwrap())
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = layer_round_trip, train_step
}
criterion_main!(benches);
