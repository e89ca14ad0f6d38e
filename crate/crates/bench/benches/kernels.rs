use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use rsv_core::backend::{bw_stats, train_ubm};
use rsv_core::corpus::random_room;
use rsv_core::enhancement::{Activation, Network};
use rsv_core::signal::{stft, AudioSignal, FrameGeometry};

fn noise(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn bench_stft(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sig = AudioSignal::new(noise(8000 * 3, &mut rng), 8000);
    c.bench_function("stft 3 s @ 8 kHz", |b| b.iter(|| stft(black_box(&sig), FrameGeometry::default()).unwrap()));
}

fn bench_rir(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let room = random_room("bench", 8, &mut rng);
    c.bench_function("image-source rir pair, order 8", |b| b.iter(|| black_box(&room).rir_pair(8000).unwrap()));
}

fn bench_mlp(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = Network::init(&[31 * 129, 256, 256, 256, 129], Activation::Tanh, &mut rng);
    // one frame per column
    let x = DMatrix::from_fn(31 * 129, 128, |_, _| rng.random_range(-1.0..1.0));
    c.bench_function("mlp forward, batch 128, 3x256", |b| b.iter(|| net.forward(black_box(&x))));
}

fn bench_gmm(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let frames = DMatrix::from_fn(2000, 60, |_, _| rng.random_range(-2.0..2.0));
    let (ubm, _) = train_ubm(&frames, 64, 2, 4).unwrap();
    let utt = frames.rows(0, 300).into_owned();
    c.bench_function("gmm e-step (bw stats), 300 frames, 64x60", |b| {
        b.iter(|| bw_stats(black_box(&utt), &ubm).unwrap())
    });
}

criterion_group!(benches, bench_stft, bench_rir, bench_mlp, bench_gmm);
criterion_main!(benches);
