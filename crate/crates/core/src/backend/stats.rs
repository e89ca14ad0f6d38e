use nalgebra::{DMatrix, DVector};

use super::gmm::GmmModel;
use crate::error::{Error, Result};

/// Zero-order and UBM-mean-centered first-order Baum-Welch statistics of one utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct BwStats {
    pub n: DVector<f64>,
    /// `C x D`
    pub f: DMatrix<f64>,
}

impl BwStats {
    pub fn zeros(components: usize, dim: usize) -> Self {
        Self {
            n: DVector::zeros(components),
            f: DMatrix::zeros(components, dim),
        }
    }
}

pub fn bw_stats(features: &DMatrix<f64>, ubm: &GmmModel) -> Result<BwStats> {
    let (c, d) = (ubm.components(), ubm.dim());
    if features.nrows() == 0 {
        return Ok(BwStats::zeros(c, d));
    }
    if features.ncols() != d {
        return Err(Error::Dimension(format!(
            "features have {} dims, UBM has {d}",
            features.ncols()
        )));
    }
    let acc = ubm.accumulate(features);
    let mut f = acc.f;
    for k in 0..c {
        for j in 0..d {
            f[(k, j)] -= acc.n[k] * ubm.means[(k, j)];
        }
    }
    Ok(BwStats { n: acc.n, f })
}
