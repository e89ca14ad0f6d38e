use nalgebra::DVector;

use crate::error::{Error, Result};

/// Scales `v` to unit Euclidean norm.
pub fn length_normalize(v: &DVector<f64>) -> Result<DVector<f64>> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(v / n)
}

/// Centering followed by length normalization, with the mean estimated on training vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorNormalizer {
    pub mean: DVector<f64>,
}

impl VectorNormalizer {
    pub fn fit(vectors: &[DVector<f64>]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::EmptyData("no vectors to centre".into()))?;
        let sum = vectors.iter().fold(DVector::zeros(first.len()), |a, v| a + v);
        Ok(Self {
            mean: sum / vectors.len() as f64,
        })
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        if v.len() != self.mean.len() {
            return Err(Error::Dimension(format!("vector of dim {} for mean of dim {}", v.len(), self.mean.len())));
        }
        length_normalize(&(v - &self.mean))
    }
}
