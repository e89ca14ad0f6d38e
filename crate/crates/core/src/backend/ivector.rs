//! Total-variability subspace and i-vector extraction.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::gmm::GmmModel;
use super::stats::BwStats;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IVectorExtractor {
    /// `(C*D) x R`; rows `c*D..(c+1)*D` belong to component `c`.
    pub t_matrix: DMatrix<f64>,
    pub ubm: GmmModel,
}

struct Precomputed {
    /// `T_c^T Sigma_c^-1 T_c`, one `R x R` per component.
    tst: Vec<DMatrix<f64>>,
    /// `Sigma^-1 T`, `(C*D) x R`.
    sinv_t: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct Posterior {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl IVectorExtractor {
    pub fn rank(&self) -> usize {
        self.t_matrix.ncols()
    }

    fn precompute(&self) -> Precomputed {
        let (c, d) = (self.ubm.components(), self.ubm.dim());
        let mut sinv_t = self.t_matrix.clone();
        for k in 0..c {
            for j in 0..d {
                let p = 1.0 / self.ubm.vars[(k, j)];
                sinv_t.row_mut(k * d + j).scale_mut(p);
            }
        }
        let tst = (0..c)
            .map(|k| {
                let tk = self.t_matrix.rows(k * d, d);
                let sk = sinv_t.rows(k * d, d);
                tk.tr_mul(&sk)
            })
            .collect();
        Precomputed { tst, sinv_t }
    }

    fn posterior_with(&self, pre: &Precomputed, stats: &BwStats) -> Result<Posterior> {
        let r = self.rank();
        let (c, d) = (self.ubm.components(), self.ubm.dim());
        if stats.n.len() != c || stats.f.shape() != (c, d) {
            return Err(Error::Dimension("statistics do not match the UBM".into()));
        }
        let mut precision = DMatrix::identity(r, r);
        for k in 0..c {
            if stats.n[k] != 0.0 {
                precision += &pre.tst[k] * stats.n[k];
            }
        }
        let f = supervector(stats);
        let b = pre.sinv_t.tr_mul(&f);
        let chol = precision
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("i-vector posterior precision".into()))?;
        Ok(Posterior {
            mean: chol.solve(&b),
            cov: chol.inverse(),
        })
    }

    /// Posterior mean and covariance of the latent factor given utterance statistics.
    pub fn posterior(&self, stats: &BwStats) -> Result<Posterior> {
        self.posterior_with(&self.precompute(), stats)
    }

    pub fn extract(&self, stats: &BwStats) -> Result<DVector<f64>> {
        Ok(self.posterior(stats)?.mean)
    }

    pub fn extract_all(&self, stats: &[BwStats]) -> Result<Vec<DVector<f64>>> {
        let pre = self.precompute();
        stats.iter().map(|s| Ok(self.posterior_with(&pre, s)?.mean)).collect()
    }
}

/// First-order statistics stacked component-major.
fn supervector(stats: &BwStats) -> DVector<f64> {
    let (c, d) = stats.f.shape();
    DVector::from_fn(c * d, |i, _| stats.f[(i / d, i % d)])
}

/// EM training of the total-variability matrix of rank `rank`.
pub fn train_tmatrix(stats: &[BwStats], ubm: &GmmModel, rank: usize, iters: usize, seed: u64) -> Result<IVectorExtractor> {
    let (c, d) = (ubm.components(), ubm.dim());
    if rank == 0 || rank > c * d {
        return Err(Error::Config(format!("i-vector rank must be in 1..={}", c * d)));
    }
    if stats.is_empty() {
        return Err(Error::EmptyData("no utterance statistics".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_matrix = DMatrix::from_fn(c * d, rank, |row, _| {
        let sd = ubm.vars[(row / d, row % d)].sqrt();
        let z: f64 = StandardNormal.sample(&mut rng);
        z * sd
    });
    let mut ex = IVectorExtractor {
        t_matrix,
        ubm: ubm.clone(),
    };
    for it in 0..iters {
        let pre = ex.precompute();
        let mut a_acc = vec![DMatrix::<f64>::zeros(rank, rank); c];
        let mut c_acc = DMatrix::<f64>::zeros(c * d, rank);
        for s in stats {
            let post = ex.posterior_with(&pre, s)?;
            let second = &post.cov + &post.mean * post.mean.transpose();
            for k in 0..c {
                if s.n[k] != 0.0 {
                    a_acc[k] += &second * s.n[k];
                }
            }
            c_acc.ger(1.0, &supervector(s), &post.mean, 1.0);
        }
        for k in 0..c {
            // T_c = C_c A_c^-1, solved as A_c T_c^T = C_c^T
            let Some(chol) = a_acc[k].clone().cholesky() else {
                log::warn!("t-matrix iteration {it}: component {k} has no mass; block kept");
                continue;
            };
            let rhs = c_acc.rows(k * d, d).transpose();
            let tk = chol.solve(&rhs).transpose();
            ex.t_matrix.rows_mut(k * d, d).copy_from(&tk);
        }
    }
    Ok(ex)
}
