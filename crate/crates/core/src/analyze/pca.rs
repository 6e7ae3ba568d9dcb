use serde::{Deserialize, Serialize};

use super::AnalyzeError;
use crate::numkit::{dot, sq_dist, top_eigvecs, Matrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// `[n][k]` coordinates of the mean-centred rows.
    pub coords: Vec<Vec<f64>>,
    /// Unit principal axes, largest variance first. Each axis is signed so
    /// its largest-magnitude entry is positive.
    pub axes: Vec<Vec<f64>>,
    pub variance: Vec<f64>,
}

/// Projection onto the top-`k` eigenvectors of the sample covariance.
pub fn pca_project(x: &Matrix, k: usize) -> Result<PcaProjection, AnalyzeError> {
    let (n, d) = (x.rows, x.cols);
    if n <= k {
        return Err(AnalyzeError::Config(format!("PCA needs n > k, got n={n}, k={k}")));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred: Vec<Vec<f64>> = (0..n)
        .map(|i| x.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut cov = Matrix::zeros(d, d);
    for c in &centred {
        for a in 0..d {
            let row = cov.row_mut(a);
            for b in 0..d {
                row[b] += c[a] * c[b];
            }
        }
    }
    cov.data.iter_mut().for_each(|v| *v /= (n - 1) as f64);
    let mut axes = top_eigvecs(&cov, k)?;
    for a in &mut axes {
        let lead = a.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if lead < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let coords: Vec<Vec<f64>> = centred
        .iter()
        .map(|c| axes.iter().map(|a| dot(a, c)).collect())
        .collect();
    let variance = (0..k)
        .map(|j| coords.iter().map(|c| c[j] * c[j]).sum::<f64>() / (n - 1) as f64)
        .collect();
    Ok(PcaProjection {
        coords,
        axes,
        variance,
    })
}

/// Mean over points of the fraction of their `k` nearest neighbors (self
/// excluded; equal distances keep the lower index) that share their label.
pub fn cluster_purity(coords: &[Vec<f64>], labels: &[usize], k: usize) -> Result<f64, AnalyzeError> {
    let n = coords.len();
    if labels.len() != n {
        return Err(AnalyzeError::DimMismatch(n, labels.len()));
    }
    if k == 0 || n <= k {
        return Err(AnalyzeError::Config(format!("purity needs 1 <= k < n, got k={k}, n={n}")));
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut d: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(&coords[i], &coords[j]), j))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        d.select_nth_unstable_by(k - 1, cmp);
        let same = d[..k].iter().filter(|(_, j)| labels[*j] == labels[i]).count();
        total += same as f64 / k as f64;
    }
    Ok(total / n as f64)
}
