//! Sample moments checked against exact Gaussian moments.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceCheck {
    pub samples: usize,
    pub sample: Vec<Vec<f64>>,
    pub exact: Vec<Vec<f64>>,
    /// Standard error of each sample entry.
    pub stderr: Vec<Vec<f64>>,
    /// Largest `|sample - exact| / stderr` over the entries.
    pub max_z: f64,
}

/// Covariance of `samples` about the known `mean`, with per-entry standard
/// errors from the spread of the centred products.
pub fn covariance_check(
    samples: &[DVector<f64>],
    mean: &DVector<f64>,
    exact: &DMatrix<f64>,
) -> Result<CovarianceCheck> {
    if samples.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let d = mean.len();
    let n = samples.len() as f64;
    let mut sample = vec![vec![0.0; d]; d];
    let mut stderr = vec![vec![0.0; d]; d];
    let mut max_z: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            let prods: Vec<f64> = samples
                .iter()
                .map(|x| (x[a] - mean[a]) * (x[b] - mean[b]))
                .collect();
            let m = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|p| (p - m).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            sample[a][b] = m;
            stderr[a][b] = se;
            max_z = max_z.max((m - exact[(a, b)]).abs() / se);
        }
    }
    Ok(CovarianceCheck {
        samples: samples.len(),
        sample,
        exact: (0..d).map(|a| (0..d).map(|b| exact[(a, b)]).collect()).collect(),
        stderr,
        max_z,
    })
}
