//! Two-covariance PLDA: `x = y + e`, `y ~ N(mu, B)`, `e ~ N(0, W)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::lda::group_by_label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    pub mean: DVector<f64>,
    pub between: DMatrix<f64>,
    pub within: DMatrix<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct PldaTrace {
    /// Marginal log-likelihood of the training data, at initialization and after each iteration.
    pub loglik: Vec<f64>,
}

fn chol(m: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

fn log_det(c: &Cholesky<f64, Dyn>) -> f64 {
    2.0 * c.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Relative eigenvalue floor for the within-class covariance.
const WITHIN_EIG_FLOOR: f64 = 1e-9;

/// Clamps eigenvalues of a symmetric matrix from below; returns whether any were raised.
fn floor_eigenvalues(m: &DMatrix<f64>, min: f64) -> (DMatrix<f64>, bool) {
    let eig = SymmetricEigen::new(symmetrize(m));
    if eig.eigenvalues.iter().all(|&v| v >= min) {
        return (symmetrize(m), false);
    }
    let vals = eig.eigenvalues.map(|v| v.max(min));
    let out = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    (symmetrize(&out), true)
}

fn condition(within: &DMatrix<f64>, between: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = within.nrows() as f64;
    let min = WITHIN_EIG_FLOOR * (within.trace() / dim).max(f64::MIN_POSITIVE);
    let (w, raised) = floor_eigenvalues(within, min);
    if raised {
        log::warn!("PLDA within-class covariance not positive definite; eigenvalues floored at {min:e}");
    }
    let (b, _) = floor_eigenvalues(between, 0.0);
    (w, b)
}

struct Speaker {
    members: Vec<usize>,
    mean: DVector<f64>,
}

fn speakers(vectors: &[DVector<f64>], groups: Vec<Vec<usize>>) -> Vec<Speaker> {
    let dim = vectors[0].len();
    groups
        .into_iter()
        .map(|members| {
            let mean = members.iter().fold(DVector::zeros(dim), |a, &i| a + &vectors[i]) / members.len() as f64;
            Speaker { members, mean }
        })
        .collect()
}

impl PldaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Marginal log-likelihood of grouped vectors, with speaker factors integrated out.
    pub fn log_likelihood<L: Ord + Clone>(&self, vectors: &[DVector<f64>], labels: &[L]) -> Result<f64> {
        self.log_likelihood_grouped(vectors, &speakers(vectors, group_by_label(labels)))
    }

    fn log_likelihood_grouped(&self, vectors: &[DVector<f64>], spk: &[Speaker]) -> Result<f64> {
        let d = self.dim() as f64;
        let cw = chol(&self.within, "PLDA within-class covariance")?;
        let ld_w = log_det(&cw);
        let mut by_n: BTreeMap<usize, (Cholesky<f64, Dyn>, f64)> = BTreeMap::new();
        let mut total = 0.0;
        for s in spk {
            let n = s.members.len();
            if !by_n.contains_key(&n) {
                let c = chol(&(&self.within + &self.between * n as f64), "W + nB")?;
                let ld = log_det(&c);
                by_n.insert(n, (c, ld));
            }
            let (cn, ld_n) = &by_n[&n];
            let mut quad = 0.0;
            for &i in &s.members {
                let r = &vectors[i] - &s.mean;
                quad += r.dot(&cw.solve(&r));
            }
            let dm = &s.mean - &self.mean;
            quad += n as f64 * dm.dot(&cn.solve(&dm));
            let nf = n as f64;
            total += -0.5 * (nf * d * (2.0 * PI).ln() + (nf - 1.0) * ld_w + ld_n + quad);
        }
        Ok(total)
    }

    pub fn scorer(&self) -> Result<PldaScorer> {
        let d = self.dim();
        let total = &self.between + &self.within;
        let ct = chol(&total, "PLDA total covariance")?;
        let mut joint = DMatrix::zeros(2 * d, 2 * d);
        joint.view_mut((0, 0), (d, d)).copy_from(&total);
        joint.view_mut((d, d), (d, d)).copy_from(&total);
        joint.view_mut((0, d), (d, d)).copy_from(&self.between);
        joint.view_mut((d, 0), (d, d)).copy_from(&self.between);
        let cj = chol(&joint, "PLDA joint covariance")?;
        let inv = cj.inverse();
        let a = inv.view((0, 0), (d, d)).into_owned();
        let c = inv.view((0, d), (d, d)).into_owned();
        Ok(PldaScorer {
            mean: self.mean.clone(),
            q: symmetrize(&(ct.inverse() - a)),
            p: symmetrize(&(-c)),
            k: -0.5 * log_det(&cj) + log_det(&ct),
        })
    }
}

/// Closed-form same-speaker versus different-speaker log-likelihood ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaScorer {
    pub mean: DVector<f64>,
    pub q: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub k: f64,
}

impl PldaScorer {
    pub fn score(&self, enroll: &DVector<f64>, test: &DVector<f64>) -> f64 {
        let e = enroll - &self.mean;
        let t = test - &self.mean;
        0.5 * e.dot(&(&self.q * &e)) + 0.5 * t.dot(&(&self.q * &t)) + e.dot(&(&self.p * &t)) + self.k
    }
}

pub fn plda_score(model: &PldaModel, enroll: &DVector<f64>, test: &DVector<f64>) -> Result<f64> {
    Ok(model.scorer()?.score(enroll, test))
}

/// EM estimation of the two-covariance model.
pub fn train_plda<L: Ord + Clone>(vectors: &[DVector<f64>], labels: &[L], iters: usize) -> Result<(PldaModel, PldaTrace)> {
    if vectors.is_empty() || vectors.len() != labels.len() {
        return Err(Error::EmptyData("PLDA needs labelled vectors".into()));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(Error::Dimension("PLDA vectors differ in dimension".into()));
    }
    let spk = speakers(vectors, group_by_label(labels));
    if spk.len() < 2 {
        return Err(Error::SingleClass);
    }
    let n_total = vectors.len() as f64;
    let s_total = spk.len() as f64;
    let mean = vectors.iter().fold(DVector::zeros(dim), |a, v| a + v) / n_total;

    let mut within = DMatrix::zeros(dim, dim);
    let mut between = DMatrix::zeros(dim, dim);
    for s in &spk {
        for &i in &s.members {
            let r = &vectors[i] - &s.mean;
            within.ger(1.0, &r, &r, 1.0);
        }
        let r = &s.mean - &mean;
        between.ger(1.0, &r, &r, 1.0);
    }
    within /= n_total;
    between /= s_total;
    let (within, between) = condition(&within, &between);
    let mut model = PldaModel { mean, between, within };
    let mut trace = PldaTrace::default();
    trace.loglik.push(model.log_likelihood_grouped(vectors, &spk)?);

    for _ in 0..iters {
        let mut by_n: BTreeMap<usize, (DMatrix<f64>, DMatrix<f64>)> = BTreeMap::new();
        let mut ey = Vec::with_capacity(spk.len());
        let mut covs = Vec::with_capacity(spk.len());
        for s in &spk {
            let n = s.members.len();
            if !by_n.contains_key(&n) {
                let m = &model.between + &model.within / n as f64;
                let gain = chol(&m, "B + W/n")?.solve(&model.between).transpose();
                let cov = symmetrize(&(&model.between - &gain * &model.between));
                by_n.insert(n, (gain, cov));
            }
            let (gain, cov) = &by_n[&n];
            ey.push(&model.mean + gain * (&s.mean - &model.mean));
            covs.push(cov.clone());
        }
        let new_mean = ey.iter().fold(DVector::zeros(dim), |a, v| a + v) / s_total;
        let mut new_b = DMatrix::zeros(dim, dim);
        let mut new_w = DMatrix::zeros(dim, dim);
        for (k, s) in spk.iter().enumerate() {
            let dmu = &ey[k] - &new_mean;
            new_b += &covs[k];
            new_b.ger(1.0, &dmu, &dmu, 1.0);
            for &i in &s.members {
                let r = &vectors[i] - &ey[k];
                new_w.ger(1.0, &r, &r, 1.0);
            }
            new_w += &covs[k] * s.members.len() as f64;
        }
        let (within, between) = condition(&(new_w / n_total), &(new_b / s_total));
        model = PldaModel {
            mean: new_mean,
            between,
            within,
        };
        trace.loglik.push(model.log_likelihood_grouped(vectors, &spk)?);
    }
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn synthetic(seed: u64, speakers: usize, per: usize, dim: usize) -> (Vec<DVector<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut v = Vec::new();
        let mut l = Vec::new();
        for s in 0..speakers {
            let y: Vec<f64> = (0..dim).map(|_| 2.0 * g()).collect();
            for _ in 0..per {
                v.push(DVector::from_fn(dim, |i, _| y[i] + 0.5 * g() + 1.0));
                l.push(s);
            }
        }
        (v, l)
    }

    #[test]
    fn em_monotone_and_recovers() {
        let (v, l) = synthetic(1, 60, 6, 3);
        let (m, trace) = train_plda(&v, &l, 20).unwrap();
        for w in trace.loglik.windows(2) {
            assert!(w[1] >= w[0] - 1e-6 * w[0].abs(), "{:?}", trace.loglik);
        }
        assert!((m.within.trace() / 3.0 - 0.25).abs() < 0.05);
        assert!((m.between.trace() / 3.0 - 4.0).abs() < 1.5);
    }

    #[test]
    fn zero_between_scores_zero() {
        let m = PldaModel {
            mean: DVector::zeros(2),
            between: DMatrix::zeros(2, 2),
            within: DMatrix::identity(2, 2) * 1.3,
        };
        let s = m.scorer().unwrap();
        let e = DVector::from_vec(vec![0.3, -2.0]);
        let t = DVector::from_vec(vec![1.1, 0.4]);
        assert!(s.score(&e, &t).abs() < 1e-12);
    }

    #[test]
    fn targets_outscore_nontargets() {
        let (v, l) = synthetic(4, 30, 4, 4);
        let (m, _) = train_plda(&v, &l, 5).unwrap();
        let s = m.scorer().unwrap();
        assert!(s.score(&v[0], &v[1]) > s.score(&v[0], &v[4]));
    }

    #[test]
    fn single_speaker_rejected() {
        let v = vec![DVector::from_vec(vec![1.0]), DVector::from_vec(vec![2.0])];
        assert!(matches!(train_plda(&v, &[0, 0], 3), Err(Error::SingleClass)));
    }
}
