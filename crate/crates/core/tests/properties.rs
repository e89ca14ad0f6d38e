use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsv_core::backend::{length_normalize, train_lda, train_plda, Backend, GmmModel, IVectorExtractor, VectorNormalizer};
use rsv_core::corpus::{synth_corpus, synth_noise_pool, synth_real_pool, synth_utterance, CorpusSpec, PoolSpec, VoiceProfile};
use rsv_core::corruption::{
    corrupt, generate_rir, measure_snr, parse_recipes, write_recipes, CorruptionPlan, PoolSet, ReverbSource, RirPool,
    RoomSpec,
};
use rsv_core::enhancement::{Activation, MlpModel, Network, Normalization};
use rsv_core::evaluation::{build_condition, compute_eer, rebuild_condition, ConditionSpec};
use rsv_core::features::FeaturePipeline;
use rsv_core::signal::{istft, stft, AudioSignal, FrameGeometry};
use rsv_core::vad::{energy_vad, VadConfig};

fn noise_signal(len: usize, seed: u64, amp: f64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    AudioSignal::new((0..len).map(|_| rng.random_range(-amp..amp)).collect(), 8000)
}

fn speech(seed: u64, dur: f64) -> AudioSignal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let voice = VoiceProfile::random(&mut rng);
    synth_utterance(&voice, dur, 8000, &mut rng)
}

// ---------- signal ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stft_round_trip_interior_above_40_db(len in 1200usize..6000, seed in any::<u64>(), amp in 0.01f64..1.0) {
        let x = noise_signal(len, seed, amp);
        let g = FrameGeometry::default();
        let y = istft(&stft(&x, g).unwrap()).unwrap();
        // interior: samples covered by at least two full frames on either side
        let covered = g.signal_len(g.frame_count(len));
        let (lo, hi) = (g.frame_len, covered.saturating_sub(g.frame_len));
        prop_assume!(hi > lo + 100);
        let (mut sig, mut err) = (0.0, 0.0);
        for i in lo..hi {
            sig += x.samples[i] * x.samples[i];
            err += (x.samples[i] - y.samples[i]).powi(2);
        }
        let snr = 10.0 * (sig / err.max(1e-300)).log10();
        prop_assert!(snr > 40.0, "interior snr {snr}");
    }

    #[test]
    fn doubling_waveform_adds_log2(len in 200usize..2000, seed in any::<u64>()) {
        let x = noise_signal(len, seed, 0.5);
        let g = FrameGeometry::default();
        let a = stft(&x, g).unwrap();
        let b = stft(&x.scaled(2.0), g).unwrap();
        let floor = rsv_core::signal::MAG_FLOOR.ln();
        for (u, v) in a.log_mag.iter().zip(&b.log_mag) {
            if *u > floor + 1.0 {
                prop_assert!((v - u - 2f64.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frame_count_formula(frame_len in 8usize..300, hop in 1usize..300, extra in 0usize..3000) {
        prop_assume!(hop <= frame_len);
        let fft_size = frame_len.next_power_of_two();
        let g = FrameGeometry { frame_len, hop, fft_size };
        let len = frame_len + extra;
        let s = stft(&noise_signal(len, 7, 0.3), g).unwrap();
        prop_assert_eq!(s.frames, 1 + (len - frame_len) / hop);
        prop_assert_eq!(g.frame_count(len), s.frames);
    }
}

// ---------- vad ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vad_mask_gain_invariant(seed in any::<u64>(), gain in 0.05f64..20.0) {
        let x = speech(seed, 1.5);
        let cfg = VadConfig::default();
        prop_assert_eq!(energy_vad(&x, &cfg).unwrap(), energy_vad(&x.scaled(gain), &cfg).unwrap());
    }

    #[test]
    fn vad_length_matches_stft(len in 1usize..5000) {
        let x = noise_signal(len, len as u64, 0.2);
        let mask = energy_vad(&x, &VadConfig::default()).unwrap();
        prop_assert_eq!(mask.len(), stft(&x, FrameGeometry::default()).unwrap().frames);
    }
}

// ---------- corruption ----------

fn small_pools() -> PoolSet {
    let spec = PoolSpec {
        noises: [3, 1, 2],
        rooms: [3, 0, 3],
        noise_duration_s: 3.0,
        babble_talkers: 2,
        babble_pool: 3,
        max_order: 4,
    };
    PoolSet {
        noise: synth_noise_pool(&spec, 5, 8000).unwrap(),
        real: synth_real_pool(&spec, 5, 8000).unwrap(),
        artificial: RirPool::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn snr_closure(seed in any::<u64>(), snr_idx in 0usize..4, reverb in any::<bool>()) {
        let snr = [0.0, 7.0, 14.0, 21.0][snr_idx];
        let s = speech(seed, 1.2);
        let n = noise_signal(5000, seed ^ 1, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let room = rsv_core::corpus::random_room("p", 3, &mut rng);
        let pair = room.rir_pair(8000).unwrap().energy_normalized();
        let plan = CorruptionPlan { rir: reverb.then_some(&pair), noise: Some(&n), snr_db: Some(snr), seed };
        let out = corrupt(&s, &plan, &VadConfig::default()).unwrap();
        let measured = measure_snr(&out.speech_component, out.noise_component.as_ref().unwrap(), &out.mask).unwrap();
        prop_assert!((measured - snr).abs() < 0.1, "{measured} vs {snr}");
    }

    #[test]
    fn zero_reflections_give_single_tap(
        lx in 3.0f64..8.0, ly in 3.0f64..7.0, lz in 2.4f64..3.6, order in 0usize..6,
        fx in 0.1f64..0.9, fy in 0.1f64..0.9, gx in 0.1f64..0.9, gy in 0.1f64..0.9,
    ) {
        let room = RoomSpec {
            id: "anechoic".into(),
            dims: [lx, ly, lz],
            reflection: [0.0; 6],
            source_pos: [fx * lx, fy * ly, 1.5],
            noise_pos: [gx * lx, gy * ly, 1.2],
            mic_pos: [gx * lx, fy * ly, 1.0],
            max_order: order,
        };
        let d = ((room.source_pos[0] - room.mic_pos[0]).powi(2)
            + (room.source_pos[1] - room.mic_pos[1]).powi(2)
            + (room.source_pos[2] - room.mic_pos[2]).powi(2)).sqrt();
        let h = generate_rir(&room, room.source_pos, room.mic_pos, 8000).unwrap();
        let k = (d / 343.0 * 8000.0).round() as usize;
        let nonzero: Vec<usize> = (0..h.len()).filter(|&i| h.samples[i] != 0.0).collect();
        prop_assert_eq!(nonzero, vec![k]);
        prop_assert!((h.samples[k] - 1.0 / (4.0 * std::f64::consts::PI * d)).abs() < 1e-9);
    }

    #[test]
    fn corrupt_deterministic_given_seed(seed in any::<u64>()) {
        let s = speech(seed, 1.0);
        let n = noise_signal(3000, seed, 0.3);
        let plan = CorruptionPlan { rir: None, noise: Some(&n), snr_db: Some(5.0), seed };
        let a = corrupt(&s, &plan, &VadConfig::default()).unwrap();
        let b = corrupt(&s, &plan, &VadConfig::default()).unwrap();
        prop_assert_eq!(a.signal, b.signal);
        prop_assert_eq!(a.noise_offset, b.noise_offset);
    }
}

#[test]
fn rebuild_from_recipe_file_is_byte_identical() {
    let pools = small_pools();
    let clean = synth_corpus(
        &CorpusSpec { prefix: "rb".into(), speakers: 3, utterances_per_speaker: 2, min_duration_s: 1.0, max_duration_s: 1.5 },
        3,
        8000,
    );
    let vad = VadConfig::default();
    let spec = ConditionSpec { name: "rev-noi-0-7".into(), reverb: ReverbSource::RealPool, snr_range_db: Some((0.0, 7.0)), seed: 21 };
    let (built, recipes) = build_condition(&clean, &spec, &pools, &vad).unwrap();
    let reparsed = parse_recipes(&write_recipes(&recipes)).unwrap();
    let rebuilt = rebuild_condition(&clean, &reparsed, &pools, &vad).unwrap();
    assert_eq!(built.len(), rebuilt.len());
    for (a, b) in built.utterances.iter().zip(&rebuilt.utterances) {
        assert_eq!(a.id, b.id);
        let bits = |s: &AudioSignal| s.samples.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.signal), bits(&b.signal));
    }
}

// ---------- enhancement ----------

fn gradient_max_rel_error(dims: &[usize], act: Activation, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::init(dims, act, &mut rng);
    for l in &mut net.layers {
        l.bias.apply(|b| *b = rng.random_range(-0.5..0.5));
    }
    let batch = 4;
    let x = DMatrix::from_fn(dims[0], batch, |_, _| rng.random_range(-1.0..1.0));
    let t = DMatrix::from_fn(*dims.last().unwrap(), batch, |_, _| rng.random_range(-1.0..1.0));
    let analytic = net.loss_and_gradients(&x, &t).1.flatten();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *net.parameter_mut(k);
        *net.parameter_mut(k) = orig + h;
        let up = net.loss(&x, &t);
        *net.parameter_mut(k) = orig - h;
        let down = net.loss(&x, &t);
        *net.parameter_mut(k) = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn backprop_matches_finite_differences(seed in any::<u64>(), act_idx in 0usize..3, shape in 0usize..2) {
        let act = [Activation::Tanh, Activation::Sigmoid, Activation::Linear][act_idx];
        let dims: &[usize] = if shape == 0 { &[5, 3, 2] } else { &[10, 8, 8, 5] };
        let err = gradient_max_rel_error(dims, act, seed);
        prop_assert!(err < 1e-4, "{act:?} {dims:?}: {err}");
    }

    #[test]
    fn predict_is_batch_size_independent(seed in any::<u64>(), n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (din, dout) = (3 * 7, 7);
        let model = MlpModel {
            network: Network::init(&[din, 12, 12, dout], Activation::Tanh, &mut rng),
            input_norm: Normalization {
                mean: (0..din).map(|_| rng.random_range(-1.0..1.0)).collect(),
                std: (0..din).map(|_| rng.random_range(0.5..2.0)).collect(),
            },
            output_norm: Normalization {
                mean: (0..dout).map(|_| rng.random_range(-1.0..1.0)).collect(),
                std: (0..dout).map(|_| rng.random_range(0.5..2.0)).collect(),
            },
            context: 1,
        };
        let x = DMatrix::from_fn(din, n, |_, _| rng.random_range(-3.0..3.0));
        let all = model.predict(&x);
        for c in 0..n {
            let one = model.predict(&x.columns(c, 1).into_owned());
            prop_assert!((one - all.columns(c, 1)).amax() < 1e-9);
        }
    }
}

// ---------- features ----------

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn post_stmvn_features_gain_invariant(seed in any::<u64>()) {
        let x = noise_signal(8000, seed, 0.05);
        let p = FeaturePipeline::default_8k();
        let a = p.dense(&x).unwrap();
        let b = p.dense(&x.scaled(10.0)).unwrap();
        prop_assert_eq!(a.ncols(), 60);
        prop_assert!((a - b).amax() < 1e-6);
    }
}

// ---------- evaluation ----------

/// Exhaustive sweep: every distinct score and both infinities as thresholds, errors counted
/// directly, crossing interpolated linearly between neighbouring thresholds.
fn brute_force_eer(targets: &[f64], nontargets: &[f64]) -> f64 {
    let mut thresholds: Vec<f64> = targets.iter().chain(nontargets).copied().collect();
    thresholds.push(f64::NEG_INFINITY);
    thresholds.push(f64::INFINITY);
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let rates = |th: f64| {
        let far = nontargets.iter().filter(|&&s| s >= th).count() as f64 / nontargets.len() as f64;
        let frr = targets.iter().filter(|&&s| s < th).count() as f64 / targets.len() as f64;
        (far, frr)
    };
    let mut prev = rates(thresholds[0]);
    for &th in &thresholds {
        let cur = rates(th);
        if cur.1 - cur.0 >= 0.0 {
            let d0 = prev.1 - prev.0;
            let d1 = cur.1 - cur.0;
            let t = if d1 == d0 { 0.0 } else { -d0 / (d1 - d0) };
            return 100.0 * (prev.0 + t * (cur.0 - prev.0));
        }
        prev = cur;
    }
    unreachable!("FRR reaches 1 at +inf")
}

fn eer_of(targets: &[f64], nontargets: &[f64]) -> f64 {
    let scores: Vec<f64> = targets.iter().chain(nontargets).copied().collect();
    let labels: Vec<bool> = targets.iter().map(|_| true).chain(nontargets.iter().map(|_| false)).collect();
    compute_eer(&scores, &labels).unwrap().eer
}

fn score_sets() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    // coarse grid so that ties between and within classes occur often
    let score = prop_oneof![(-20i32..20).prop_map(|v| v as f64 / 4.0), -5.0f64..5.0];
    (prop::collection::vec(score.clone(), 1..40), prop::collection::vec(score, 1..60))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eer_matches_exhaustive_sweep((t, n) in score_sets()) {
        let got = eer_of(&t, &n);
        let want = brute_force_eer(&t, &n);
        prop_assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn eer_invariant_under_monotone_maps((t, n) in score_sets(), a in 0.01f64..100.0, b in -50.0f64..50.0) {
        let base = eer_of(&t, &n);
        let affine = |v: &Vec<f64>| v.iter().map(|s| a * s + b).collect::<Vec<_>>();
        let cubic = |v: &Vec<f64>| v.iter().map(|s| s.powi(3) + s).collect::<Vec<_>>();
        prop_assert!((eer_of(&affine(&t), &affine(&n)) - base).abs() < 1e-12);
        prop_assert!((eer_of(&cubic(&t), &cubic(&n)) - base).abs() < 1e-12);
    }
}

// ---------- backend ----------

fn synthetic_speakers(spk: usize, sess: usize, dim: usize, seed: u64) -> (Vec<DVector<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vs = Vec::new();
    let mut labels = Vec::new();
    for s in 0..spk {
        let centre = DVector::from_fn(dim, |_, _| rng.random_range(-2.0..2.0));
        for _ in 0..sess {
            vs.push(&centre + DVector::from_fn(dim, |_, _| rng.random_range(-0.5..0.5)));
            labels.push(s);
        }
    }
    (vs, labels)
}

fn toy_backend() -> Backend {
    let (raw, labels) = synthetic_speakers(8, 5, 6, 11);
    let unit: Vec<_> = raw.iter().map(|v| length_normalize(v).unwrap()).collect();
    let lda = train_lda(&unit, &labels, 4).unwrap();
    let projected: Vec<_> = unit.iter().map(|v| lda.apply(v)).collect();
    let normalizer = VectorNormalizer::fit(&projected).unwrap();
    let normed: Vec<_> = projected.iter().map(|v| normalizer.apply(v).unwrap()).collect();
    let (plda, _) = train_plda(&normed, &labels, 10).unwrap();
    let ubm = GmmModel {
        weights: DVector::from_element(1, 1.0),
        means: DMatrix::zeros(1, 6),
        vars: DMatrix::from_element(1, 6, 1.0),
    };
    Backend {
        extractor: IVectorExtractor { t_matrix: DMatrix::zeros(6, 6), ubm },
        lda,
        normalizer,
        plda,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn plda_score_symmetric(seed in any::<u64>()) {
        let backend = toy_backend();
        let scorer = backend.plda.scorer().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        let b = DVector::from_fn(4, |_, _| rng.random_range(-2.0..2.0));
        prop_assert!((scorer.score(&a, &b) - scorer.score(&b, &a)).abs() < 1e-9);
    }

    #[test]
    fn score_invariant_to_raw_ivector_scale(seed in any::<u64>(), k in 0.1f64..10.0) {
        let backend = toy_backend();
        let scorer = backend.plda.scorer().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
        let w = DVector::from_fn(6, |_, _| rng.random_range(-2.0..2.0));
        let base = scorer.score(&backend.postprocess(&v).unwrap(), &backend.postprocess(&w).unwrap());
        let three = scorer.score(&backend.postprocess(&(&v * 3.0)).unwrap(), &backend.postprocess(&w).unwrap());
        let scaled = scorer.score(&backend.postprocess(&(&v * k)).unwrap(), &backend.postprocess(&(&w * k)).unwrap());
        prop_assert!((three - base).abs() < 1e-9);
        prop_assert!((scaled - base).abs() < 1e-9);
    }
}
