use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LdaTransform {
    /// `input_dim x out_dim`; columns sorted by decreasing discriminant eigenvalue.
    pub projection: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

impl LdaTransform {
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.projection.tr_mul(v)
    }

    pub fn out_dim(&self) -> usize {
        self.projection.ncols()
    }
}

/// Groups vector indices by label, in label order.
pub(crate) fn group_by_label<L: Ord + Clone>(labels: &[L]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.clone()).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Within- and between-class scatter matrices.
pub fn scatter_matrices<L: Ord + Clone>(vectors: &[DVector<f64>], labels: &[L]) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = vectors[0].len();
    let n = vectors.len() as f64;
    let mean = vectors.iter().fold(DVector::zeros(dim), |a, v| a + v) / n;
    let mut sw = DMatrix::zeros(dim, dim);
    let mut sb = DMatrix::zeros(dim, dim);
    for group in group_by_label(labels) {
        let ng = group.len() as f64;
        let mg = group.iter().fold(DVector::zeros(dim), |a, &i| a + &vectors[i]) / ng;
        for &i in &group {
            let c = &vectors[i] - &mg;
            sw.ger(1.0, &c, &c, 1.0);
        }
        let c = &mg - &mean;
        sb.ger(ng, &c, &c, 1.0);
    }
    (sw, sb)
}

/// Top `out_dim` generalized eigenvectors of `(Sb, Sw)`, with `Sw` ridge-regularized by
/// `1e-6 * trace / dim`.
pub fn train_lda<L: Ord + Clone>(vectors: &[DVector<f64>], labels: &[L], out_dim: usize) -> Result<LdaTransform> {
    if vectors.is_empty() || vectors.len() != labels.len() {
        return Err(Error::EmptyData("LDA needs labelled vectors".into()));
    }
    let dim = vectors[0].len();
    let speakers = group_by_label(labels).len();
    if out_dim == 0 || out_dim >= speakers || out_dim > dim {
        return Err(Error::Precondition(format!(
            "LDA output dim {out_dim} needs more than {out_dim} speakers (have {speakers}) and at most {dim} inputs"
        )));
    }
    let (mut sw, sb) = scatter_matrices(vectors, labels);
    let ridge = 1e-6 * sw.trace() / dim as f64;
    for i in 0..dim {
        sw[(i, i)] += ridge.max(f64::MIN_POSITIVE);
    }
    let chol = sw
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("within-class scatter".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("within-class Cholesky factor".into()))?;
    let m = &l_inv * sb * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut projection = DMatrix::zeros(dim, out_dim);
    let mut values = DVector::zeros(out_dim);
    let l_inv_t = l_inv.transpose();
    for (col, &k) in order.iter().take(out_dim).enumerate() {
        let v = &l_inv_t * eig.eigenvectors.column(k);
        projection.set_column(col, &v);
        values[col] = eig.eigenvalues[k];
    }
    Ok(LdaTransform {
        projection,
        eigenvalues: values,
    })
}
