use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use rsv_core::backend::{bw_stats, train_lda, train_tmatrix, BwStats, GmmModel, IVectorExtractor, PldaModel};

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Well-separated unit-variance components so frame posteriors are nearly hard.
fn separated_ubm(c: usize, d: usize) -> GmmModel {
    GmmModel {
        weights: DVector::from_element(c, 1.0 / c as f64),
        means: DMatrix::from_fn(c, d, |i, j| if j == i % d { 12.0 * (1 + i / d) as f64 } else { 0.0 }),
        vars: DMatrix::from_element(c, d, 1.0),
    }
}

/// Largest principal angle (degrees) between the column spaces of `a` and `b`.
fn max_principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let qa = a.clone().qr().q();
    let qb = b.clone().qr().q();
    let s = (qa.transpose() * qb).singular_values();
    let min_cos = s.iter().copied().fold(f64::INFINITY, f64::min).min(1.0);
    min_cos.acos().to_degrees()
}

#[test]
fn planted_total_variability_subspace_is_recovered() {
    let (c, d, r) = (4, 3, 2);
    let ubm = separated_ubm(c, d);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let planted = DMatrix::from_fn(c * d, r, |_, _| gauss(&mut rng));
    let mut stats = Vec::new();
    for _ in 0..300 {
        let w = DVector::from_fn(r, |_, _| gauss(&mut rng));
        let shift = &planted * &w;
        let frames = DMatrix::from_fn(200, d, |_, _| 0.0);
        let mut frames = frames;
        for t in 0..200 {
            let k = rng.random_range(0..c);
            for j in 0..d {
                frames[(t, j)] = ubm.means[(k, j)] + shift[k * d + j] + gauss(&mut rng);
            }
        }
        stats.push(bw_stats(&frames, &ubm).unwrap());
    }
    let learned = train_tmatrix(&stats, &ubm, r, 10, 7).unwrap();
    let angle = max_principal_angle(&planted, &learned.t_matrix);
    assert!(angle < 15.0, "largest principal angle {angle:.2} deg");
}

#[test]
fn ivector_recovers_known_latent_with_large_counts() {
    let (c, d, r) = (4, 3, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ubm = GmmModel {
        weights: DVector::from_element(c, 0.25),
        means: DMatrix::from_fn(c, d, |_, _| gauss(&mut rng)),
        vars: DMatrix::from_fn(c, d, |_, _| rng.random_range(0.5..2.0)),
    };
    let t = DMatrix::from_fn(c * d, r, |_, _| gauss(&mut rng));
    let w = DVector::from_vec(vec![0.8, -1.3, 0.4]);
    let offset = &t * &w;
    let n = DVector::from_fn(c, |_, _| rng.random_range(2e4..5e4));
    // centred first-order stats of frames whose mean is m_c + T_c w
    let f = DMatrix::from_fn(c, d, |i, j| n[i] * offset[i * d + j]);
    let ex = IVectorExtractor { t_matrix: t, ubm };
    let got = ex.extract(&BwStats { n, f }).unwrap();
    let rel = (&got - &w).norm() / w.norm();
    assert!(rel < 0.02, "relative error {rel}");
}

#[test]
fn lda_top_direction_matches_generalized_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let dim = 4;
    let mut vs = Vec::new();
    let mut labels = Vec::new();
    let mix = DMatrix::from_fn(dim, dim, |_, _| gauss(&mut rng));
    for k in 0..3 {
        let centre = DVector::from_fn(dim, |_, _| 3.0 * gauss(&mut rng));
        for _ in 0..25 {
            vs.push(&centre + &mix * DVector::from_fn(dim, |_, _| gauss(&mut rng)));
            labels.push(k);
        }
    }
    // oracle: scatter matrices from scratch, then power iteration on Sw^-1 Sb
    let mean = vs.iter().fold(DVector::zeros(dim), |a, v| a + v) / vs.len() as f64;
    let mut sw = DMatrix::zeros(dim, dim);
    let mut sb = DMatrix::zeros(dim, dim);
    for k in 0..3 {
        let members: Vec<&DVector<f64>> = vs.iter().zip(&labels).filter(|(_, l)| **l == k).map(|(v, _)| v).collect();
        let mk = members.iter().fold(DVector::zeros(dim), |a, v| a + *v) / members.len() as f64;
        for v in &members {
            let e = *v - &mk;
            sw += &e * e.transpose();
        }
        let e = &mk - &mean;
        sb += (&e * e.transpose()) * members.len() as f64;
    }
    let m = sw.try_inverse().unwrap() * sb;
    let mut x = DVector::from_element(dim, 1.0);
    for _ in 0..500 {
        x = &m * &x;
        x /= x.norm();
    }
    let lda = train_lda(&vs, &labels, 2).unwrap();
    let top = lda.projection.column(0).into_owned();
    let cos = (top.dot(&x) / top.norm()).abs();
    assert!(cos > 0.9999, "|cos| = {cos}");
}

fn log_gauss(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let d = x.len() as f64;
    let e = x - mean;
    let inv = cov.clone().try_inverse().unwrap();
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + cov.determinant().ln() + (e.transpose() * inv * &e)[0])
}

#[test]
fn plda_score_equals_joint_density_ratio_in_2d() {
    let mean = DVector::from_vec(vec![0.3, -0.2]);
    let between = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let within = DMatrix::from_row_slice(2, 2, &[0.5, -0.1, -0.1, 0.3]);
    let model = PldaModel { mean: mean.clone(), between: between.clone(), within: within.clone() };
    let total = &between + &within;
    let mut same = DMatrix::zeros(4, 4);
    same.view_mut((0, 0), (2, 2)).copy_from(&total);
    same.view_mut((2, 2), (2, 2)).copy_from(&total);
    same.view_mut((0, 2), (2, 2)).copy_from(&between);
    same.view_mut((2, 0), (2, 2)).copy_from(&between);
    let mut diff = same.clone();
    diff.view_mut((0, 2), (2, 2)).fill(0.0);
    diff.view_mut((2, 0), (2, 2)).fill(0.0);
    let joint_mean = DVector::from_vec(vec![mean[0], mean[1], mean[0], mean[1]]);
    let scorer = model.scorer().unwrap();
    for (e, t) in [([1.0, 0.5], [0.8, 0.2]), ([-1.0, 2.0], [1.5, -0.7]), ([0.3, -0.2], [0.3, -0.2])] {
        let joint = DVector::from_vec(vec![e[0], e[1], t[0], t[1]]);
        let want = log_gauss(&joint, &joint_mean, &same) - log_gauss(&joint, &joint_mean, &diff);
        let got = scorer.score(&DVector::from_row_slice(&e), &DVector::from_row_slice(&t));
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}
