use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    /// Percent.
    pub eer: f64,
    pub threshold: f64,
}

/// Operating point at threshold `theta`: accept when `score >= theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// Operating points at `-inf`, every distinct score (ascending) and `+inf`.
pub fn roc_points(scores: &[f64], labels: &[bool]) -> Result<Vec<OperatingPoint>> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Precondition("non-finite score".into()));
    }
    let n_tar = labels.iter().filter(|&&l| l).count();
    let n_non = labels.len() - n_tar;
    if n_tar == 0 || n_non == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let (nt, nn) = (n_tar as f64, n_non as f64);
    let mut points = vec![OperatingPoint {
        threshold: f64::NEG_INFINITY,
        far: 1.0,
        frr: 0.0,
    }];
    // targets and nontargets strictly below the current threshold
    let (mut tar_below, mut non_below) = (0usize, 0usize);
    let mut i = 0;
    while i < idx.len() {
        let theta = scores[idx[i]];
        points.push(OperatingPoint {
            threshold: theta,
            far: (n_non - non_below) as f64 / nn,
            frr: tar_below as f64 / nt,
        });
        while i < idx.len() && scores[idx[i]] == theta {
            if labels[idx[i]] {
                tar_below += 1;
            } else {
                non_below += 1;
            }
            i += 1;
        }
    }
    points.push(OperatingPoint {
        threshold: f64::INFINITY,
        far: 0.0,
        frr: 1.0,
    });
    Ok(points)
}

/// Equal error rate by linear interpolation between the two operating points where
/// `FRR - FAR` changes sign.
pub fn compute_eer(scores: &[f64], labels: &[bool]) -> Result<EerResult> {
    eer_from_points(&roc_points(scores, labels)?)
}

pub fn eer_from_points(points: &[OperatingPoint]) -> Result<EerResult> {
    let k = points
        .iter()
        .position(|p| p.frr - p.far >= 0.0)
        .ok_or_else(|| Error::Precondition("operating points never cross".into()))?;
    let hi = points[k];
    if hi.frr == hi.far || k == 0 {
        return Ok(EerResult {
            eer: 100.0 * hi.far,
            threshold: hi.threshold,
        });
    }
    let lo = points[k - 1];
    let (d_lo, d_hi) = (lo.frr - lo.far, hi.frr - hi.far);
    let a = -d_lo / (d_hi - d_lo);
    let eer = lo.far + a * (hi.far - lo.far);
    let threshold = match (lo.threshold.is_finite(), hi.threshold.is_finite()) {
        (true, true) => lo.threshold + a * (hi.threshold - lo.threshold),
        (true, false) => lo.threshold,
        (false, true) => hi.threshold,
        (false, false) => 0.0,
    };
    Ok(EerResult {
        eer: 100.0 * eer,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_separation() {
        let r = compute_eer(&[2.0, 3.0, 0.0, 1.0], &[true, true, false, false]).unwrap();
        assert_eq!(r.eer, 0.0);
    }

    #[test]
    fn identical_multisets_are_chance() {
        let s = [0.1, 0.5, 0.9, 0.1, 0.5, 0.9];
        let l = [true, true, true, false, false, false];
        assert!((compute_eer(&s, &l).unwrap().eer - 50.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(compute_eer(&[1.0, 2.0], &[true, true]), Err(Error::SingleClass)));
        assert!(matches!(compute_eer(&[], &[]), Err(Error::SingleClass)));
    }

    #[test]
    fn all_tied_scores() {
        let r = compute_eer(&[1.0, 1.0, 1.0], &[true, false, false]).unwrap();
        assert!((r.eer - 50.0).abs() < 1e-12);
    }
}
