//! Diagonal-covariance GMM trained by EM from a binary-split initialization.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::util::log_sum_exp;

/// Component variances are floored at this fraction of the global per-dimension variance.
pub const VARIANCE_FLOOR_FRACTION: f64 = 1e-4;
const CHUNK: usize = 8192;
const SPLIT_EM_ITERS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub weights: DVector<f64>,
    /// `C x D`
    pub means: DMatrix<f64>,
    /// `C x D`
    pub vars: DMatrix<f64>,
}

/// Zero-, first- and second-order statistics accumulated over a frame set.
#[derive(Debug, Clone)]
pub(crate) struct Accumulator {
    pub n: DVector<f64>,
    pub f: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub loglik: f64,
}

#[derive(Debug, Clone, Default)]
pub struct UbmTrace {
    /// Total data log-likelihood at the start of each EM iteration.
    pub loglik: Vec<f64>,
    /// Components re-seeded after collapsing (fewer than one frame of mass).
    pub reseeded: usize,
}

impl GmmModel {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// Per-frame, per-component joint log densities `log w_c + log N(x; mu_c, var_c)`
    /// for rows `frames`, computed with two matrix products.
    pub fn component_log_densities(&self, frames: &DMatrix<f64>) -> DMatrix<f64> {
        let c = self.components();
        let d = self.dim();
        let prec = self.vars.map(|v| 1.0 / v);
        let lin = self.means.component_mul(&prec);
        let quad = prec * -0.5;
        let mut constant = DVector::zeros(c);
        for k in 0..c {
            let mut acc = self.weights[k].ln() - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
            for j in 0..d {
                acc -= 0.5 * self.vars[(k, j)].ln();
                acc -= 0.5 * self.means[(k, j)] * lin[(k, j)];
            }
            constant[k] = acc;
        }
        let sq = frames.map(|x| x * x);
        let mut out = frames * lin.transpose();
        out.gemm(1.0, &sq, &quad.transpose(), 1.0);
        for mut row in out.row_iter_mut() {
            row += constant.transpose();
        }
        out
    }

    /// Posterior responsibilities (rows sum to one) and per-frame log-likelihoods.
    pub fn posteriors(&self, frames: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
        let mut logp = self.component_log_densities(frames);
        let mut ll = Vec::with_capacity(frames.nrows());
        let mut buf = vec![0.0; self.components()];
        for r in 0..logp.nrows() {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = logp[(r, k)];
            }
            let l = log_sum_exp(&buf);
            ll.push(l);
            for k in 0..buf.len() {
                logp[(r, k)] = (logp[(r, k)] - l).exp();
            }
        }
        (logp, ll)
    }

    pub fn log_likelihood(&self, frames: &DMatrix<f64>) -> f64 {
        chunks(frames).map(|c| self.posteriors(&c).1.iter().sum::<f64>()).sum()
    }

    pub(crate) fn accumulate(&self, frames: &DMatrix<f64>) -> Accumulator {
        let (c, d) = (self.components(), self.dim());
        let mut acc = Accumulator {
            n: DVector::zeros(c),
            f: DMatrix::zeros(c, d),
            s: DMatrix::zeros(c, d),
            loglik: 0.0,
        };
        for chunk in chunks(frames) {
            let (post, ll) = self.posteriors(&chunk);
            acc.loglik += ll.iter().sum::<f64>();
            acc.n += post.row_sum().transpose();
            acc.f.gemm_tr(1.0, &post, &chunk, 1.0);
            acc.s.gemm_tr(1.0, &post, &chunk.map(|x| x * x), 1.0);
        }
        acc
    }
}

fn chunks(frames: &DMatrix<f64>) -> impl Iterator<Item = DMatrix<f64>> + '_ {
    let n = frames.nrows();
    (0..n.div_ceil(CHUNK)).map(move |i| {
        let start = i * CHUNK;
        frames.rows(start, CHUNK.min(n - start)).into_owned()
    })
}

/// Global mean and (population) variance per dimension.
pub fn global_moments(frames: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = frames.nrows() as f64;
    let mean = frames.row_sum().transpose() / n;
    let mut var = DVector::zeros(frames.ncols());
    for j in 0..frames.ncols() {
        var[j] = frames.column(j).iter().map(|x| (x - mean[j]).powi(2)).sum::<f64>() / n;
    }
    (mean, var)
}

struct EmState<'a> {
    frames: &'a DMatrix<f64>,
    floor: DVector<f64>,
    rng: ChaCha8Rng,
    reseeded: usize,
}

impl EmState<'_> {
    fn m_step(&mut self, acc: &Accumulator, model: &mut GmmModel) {
        let (c, d) = (model.components(), model.dim());
        let total: f64 = acc.n.sum();
        for k in 0..c {
            let nk = acc.n[k];
            if nk < 1.0 {
                continue;
            }
            model.weights[k] = nk / total;
            for j in 0..d {
                let m = acc.f[(k, j)] / nk;
                model.means[(k, j)] = m;
                model.vars[(k, j)] = (acc.s[(k, j)] / nk - m * m).max(self.floor[j]);
            }
        }
        // collapsed components take half of the heaviest one
        for k in 0..c {
            if acc.n[k] >= 1.0 {
                continue;
            }
            let heavy = model.weights.imax();
            log::warn!("gmm component {k} collapsed ({:.3} frames); re-seeding from {heavy}", acc.n[k]);
            self.reseeded += 1;
            self.split_into(model, heavy, k);
        }
        let s = model.weights.sum();
        model.weights /= s;
    }

    fn split_into(&mut self, model: &mut GmmModel, from: usize, to: usize) {
        let d = model.dim();
        let w = model.weights[from] / 2.0;
        model.weights[from] = w;
        model.weights[to] = w;
        for j in 0..d {
            let step = 0.2 * model.vars[(from, j)].sqrt();
            let sign = if self.rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let m = model.means[(from, j)];
            model.means[(from, j)] = m + sign * step;
            model.means[(to, j)] = m - sign * step;
            model.vars[(to, j)] = model.vars[(from, j)];
        }
    }

    fn iterate(&mut self, model: &mut GmmModel) -> f64 {
        let acc = model.accumulate(self.frames);
        self.m_step(&acc, model);
        acc.loglik
    }
}

/// Trains a `components`-mixture UBM on pooled frames (`N x D`).
pub fn train_ubm(frames: &DMatrix<f64>, components: usize, iters: usize, seed: u64) -> Result<(GmmModel, UbmTrace)> {
    if frames.nrows() == 0 || frames.ncols() == 0 {
        return Err(Error::EmptyData("no frames for UBM training".into()));
    }
    if components == 0 {
        return Err(Error::Config("UBM needs at least one component".into()));
    }
    if frames.nrows() < components {
        return Err(Error::Precondition(format!(
            "{} frames for {components} components",
            frames.nrows()
        )));
    }
    let d = frames.ncols();
    let (mean, var) = global_moments(frames);
    let floor = var.map(|v| (v * VARIANCE_FLOOR_FRACTION).max(f64::MIN_POSITIVE));
    let mut state = EmState {
        frames,
        floor: floor.clone(),
        rng: ChaCha8Rng::seed_from_u64(seed),
        reseeded: 0,
    };
    let mut model = GmmModel {
        weights: DVector::from_element(1, 1.0),
        means: DMatrix::from_fn(1, d, |_, j| mean[j]),
        vars: DMatrix::from_fn(1, d, |_, j| var[j].max(floor[j])),
    };
    while model.components() < components {
        let current = model.components();
        let target = (2 * current).min(components);
        let mut grown = GmmModel {
            weights: DVector::zeros(target),
            means: DMatrix::zeros(target, d),
            vars: DMatrix::zeros(target, d),
        };
        for k in 0..current {
            grown.weights[k] = model.weights[k];
            grown.means.row_mut(k).copy_from(&model.means.row(k));
            grown.vars.row_mut(k).copy_from(&model.vars.row(k));
        }
        let mut order: Vec<usize> = (0..current).collect();
        order.sort_by(|&a, &b| model.weights[b].total_cmp(&model.weights[a]));
        for (i, &k) in order.iter().take(target - current).enumerate() {
            state.split_into(&mut grown, k, current + i);
        }
        model = grown;
        for _ in 0..SPLIT_EM_ITERS {
            state.iterate(&mut model);
        }
    }
    state.reseeded = 0;
    let mut trace = UbmTrace::default();
    for _ in 0..iters {
        trace.loglik.push(state.iterate(&mut model));
    }
    trace.reseeded = state.reseeded;
    Ok((model, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn single_gaussian_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(500, 3, |_, j| rng.random_range(-1.0..1.0) * (j + 1) as f64);
        let (m, _) = train_ubm(&x, 1, 1, 0).unwrap();
        let (mean, var) = global_moments(&x);
        for j in 0..3 {
            assert!((m.means[(0, j)] - mean[j]).abs() < 1e-12);
            assert!((m.vars[(0, j)] - var[j]).abs() < 1e-10);
        }
        assert!((m.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn recovers_two_component_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = Normal::new(0.0, 1.0).unwrap();
        let x = DMatrix::from_fn(2000, 1, |i, _| if i % 2 == 0 { 5.0 } else { -5.0 } + n.sample(&mut rng));
        let (m, trace) = train_ubm(&x, 2, 60, 3).unwrap();
        let mut means: Vec<f64> = m.means.column(0).iter().copied().collect();
        means.sort_by(f64::total_cmp);
        assert!((means[0] + 5.0).abs() < 0.2 && (means[1] - 5.0).abs() < 0.2, "{means:?}");
        for w in trace.loglik.windows(2) {
            assert!(w[1] >= w[0] - 1e-6 * w[0].abs());
        }
        assert!((m.weights.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn densities_match_direct_evaluation() {
        let m = GmmModel {
            weights: DVector::from_vec(vec![0.3, 0.7]),
            means: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 2.0]),
            vars: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 2.0, 0.25]),
        };
        let x = DMatrix::from_row_slice(1, 2, &[0.3, -0.4]);
        let l = m.component_log_densities(&x);
        for k in 0..2 {
            let mut direct = m.weights[k].ln();
            for j in 0..2 {
                let v = m.vars[(k, j)];
                direct += -0.5 * (2.0 * std::f64::consts::PI * v).ln()
                    - (x[(0, j)] - m.means[(k, j)]).powi(2) / (2.0 * v);
            }
            assert!((l[(0, k)] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_data_rejected() {
        assert!(matches!(train_ubm(&DMatrix::zeros(0, 3), 2, 1, 0), Err(Error::EmptyData(_))));
    }
}
