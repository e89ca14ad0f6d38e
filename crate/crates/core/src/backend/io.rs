//! Back-end model persistence on top of [`MatrixArchive`].

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{bw_stats, length_normalize, GmmModel, IVectorExtractor, LdaTransform, PldaModel, VectorNormalizer};
use crate::error::{Error, Result};
use crate::features::{read_archive, write_archive, MatrixArchive};

fn column(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(v.len(), 1, v.as_slice())
}

fn take(ar: &MatrixArchive, id: &str) -> Result<DMatrix<f64>> {
    ar.get(id)
        .cloned()
        .ok_or_else(|| Error::Format(format!("model archive lacks `{id}`")))
}

fn take_vec(ar: &MatrixArchive, id: &str) -> Result<DVector<f64>> {
    let m = take(ar, id)?;
    if m.ncols() != 1 {
        return Err(Error::Format(format!("`{id}` is not a column")));
    }
    Ok(m.column(0).into_owned())
}

fn ubm_records(prefix: &str, ubm: &GmmModel, out: &mut Vec<(String, DMatrix<f64>)>) {
    out.push((format!("{prefix}weights"), column(&ubm.weights)));
    out.push((format!("{prefix}means"), ubm.means.clone()));
    out.push((format!("{prefix}vars"), ubm.vars.clone()));
}

fn ubm_from(prefix: &str, ar: &MatrixArchive) -> Result<GmmModel> {
    let m = GmmModel {
        weights: take_vec(ar, &format!("{prefix}weights"))?,
        means: take(ar, &format!("{prefix}means"))?,
        vars: take(ar, &format!("{prefix}vars"))?,
    };
    if m.means.shape() != m.vars.shape() || m.means.nrows() != m.weights.len() {
        return Err(Error::Format("inconsistent UBM shapes".into()));
    }
    Ok(m)
}

/// The complete trained back end.
#[derive(Debug, Clone, PartialEq)]
pub struct Backend {
    pub extractor: IVectorExtractor,
    pub lda: LdaTransform,
    pub normalizer: VectorNormalizer,
    pub plda: PldaModel,
}

impl Backend {
    pub fn to_archive(&self) -> MatrixArchive {
        let mut r = Vec::new();
        ubm_records("ubm.", &self.extractor.ubm, &mut r);
        r.push(("tv.matrix".into(), self.extractor.t_matrix.clone()));
        r.push(("lda.projection".into(), self.lda.projection.clone()));
        r.push(("lda.eigenvalues".into(), column(&self.lda.eigenvalues)));
        r.push(("norm.mean".into(), column(&self.normalizer.mean)));
        r.push(("plda.mean".into(), column(&self.plda.mean)));
        r.push(("plda.between".into(), self.plda.between.clone()));
        r.push(("plda.within".into(), self.plda.within.clone()));
        MatrixArchive { records: r }
    }

    pub fn from_archive(ar: &MatrixArchive) -> Result<Self> {
        let ubm = ubm_from("ubm.", ar)?;
        let t_matrix = take(ar, "tv.matrix")?;
        if t_matrix.nrows() != ubm.components() * ubm.dim() {
            return Err(Error::Format("t-matrix does not match the UBM".into()));
        }
        Ok(Self {
            extractor: IVectorExtractor { t_matrix, ubm },
            lda: LdaTransform {
                projection: take(ar, "lda.projection")?,
                eigenvalues: take_vec(ar, "lda.eigenvalues")?,
            },
            normalizer: VectorNormalizer {
                mean: take_vec(ar, "norm.mean")?,
            },
            plda: PldaModel {
                mean: take_vec(ar, "plda.mean")?,
                between: take(ar, "plda.between")?,
                within: take(ar, "plda.within")?,
            },
        })
    }
}

impl Backend {
    /// Raw i-vector to PLDA input: length normalization, LDA, centering and length normalization.
    pub fn postprocess(&self, raw: &DVector<f64>) -> Result<DVector<f64>> {
        self.normalizer.apply(&self.lda.apply(&length_normalize(raw)?))
    }

    /// PLDA-ready embedding of one utterance's feature frames.
    pub fn embed(&self, features: &DMatrix<f64>) -> Result<DVector<f64>> {
        let stats = bw_stats(features, &self.extractor.ubm)?;
        self.postprocess(&self.extractor.extract(&stats)?)
    }
}

pub fn save_extractor(path: &Path, ex: &IVectorExtractor) -> Result<()> {
    let mut r = Vec::new();
    ubm_records("ubm.", &ex.ubm, &mut r);
    r.push(("tv.matrix".into(), ex.t_matrix.clone()));
    write_archive(path, &MatrixArchive { records: r })
}

pub fn load_extractor(path: &Path) -> Result<IVectorExtractor> {
    let ar = read_archive(path)?;
    let ubm = ubm_from("ubm.", &ar)?;
    let t_matrix = take(&ar, "tv.matrix")?;
    if t_matrix.nrows() != ubm.components() * ubm.dim() {
        return Err(Error::Format("t-matrix does not match the UBM".into()));
    }
    Ok(IVectorExtractor { t_matrix, ubm })
}

pub fn save_backend(path: &Path, backend: &Backend) -> Result<()> {
    write_archive(path, &backend.to_archive())
}

pub fn load_backend(path: &Path) -> Result<Backend> {
    Backend::from_archive(&read_archive(path)?)
}

pub fn save_ubm(path: &Path, ubm: &GmmModel) -> Result<()> {
    let mut r = Vec::new();
    ubm_records("", ubm, &mut r);
    write_archive(path, &MatrixArchive { records: r })
}

pub fn load_ubm(path: &Path) -> Result<GmmModel> {
    ubm_from("", &read_archive(path)?)
}

/// One `1 x R` record per utterance.
pub fn vectors_to_archive(items: &[(String, DVector<f64>)]) -> MatrixArchive {
    MatrixArchive {
        records: items
            .iter()
            .map(|(id, v)| (id.clone(), DMatrix::from_row_slice(1, v.len(), v.as_slice())))
            .collect(),
    }
}

pub fn vectors_from_archive(ar: &MatrixArchive) -> Result<Vec<(String, DVector<f64>)>> {
    ar.records
        .iter()
        .map(|(id, m)| {
            if m.nrows() != 1 {
                return Err(Error::Format(format!("`{id}` is not a row vector")));
            }
            Ok((id.clone(), m.row(0).transpose()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vectors_round_trip() {
        let items = vec![
            ("a".to_string(), DVector::from_vec(vec![1.0, -2.5])),
            ("b".to_string(), DVector::from_vec(vec![0.0, 3.25])),
        ];
        let back = vectors_from_archive(&MatrixArchive::decode(&vectors_to_archive(&items).encode()).unwrap()).unwrap();
        assert_eq!(back, items);
    }

    #[test]
    fn ubm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ubm = GmmModel {
            weights: DVector::from_vec(vec![0.25, 0.75]),
            means: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 3.0]),
            vars: DMatrix::from_element(2, 2, 0.5),
        };
        let p = dir.path().join("ubm.ark");
        save_ubm(&p, &ubm).unwrap();
        assert_eq!(load_ubm(&p).unwrap(), ubm);
    }
}
