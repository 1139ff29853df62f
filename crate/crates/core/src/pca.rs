//! Correlation-matrix principal component analysis.
//!
//! Indicators are standardized first, so the components are eigenvectors of
//! the correlation matrix and the eigenvalues sum to the number of columns.
//! Loadings are stored one component per row, so a score is the dot product
//! of a loading row with a standardized observation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};

/// Default cumulative explained-variance threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.90;

/// Largest absolute off-diagonal entry accepted as converged.
pub const JACOBI_TOLERANCE: f64 = 1e-12;

/// Denominator used for standard deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// `n - 1`
    #[default]
    Sample,
    /// `n`
    Population,
}

impl Denominator {
    fn divisor(self, n: usize) -> f64 {
        match self {
            Denominator::Sample => (n - 1) as f64,
            Denominator::Population => n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardScaler {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub denominator: Denominator,
}

impl StandardScaler {
    pub fn fit(x: &Matrix, denominator: Denominator) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, got: n });
        }
        let k = x.ncols();
        let mut means = vec![0.0; k];
        for (i, r) in x.rows().enumerate() {
            for (m, v) in means.iter_mut().zip(r) {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i });
                }
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut ss = vec![0.0; k];
        for r in x.rows() {
            for j in 0..k {
                let d = r[j] - means[j];
                ss[j] += d * d;
            }
        }
        let div = denominator.divisor(n);
        let mut sds = Vec::with_capacity(k);
        for (j, s) in ss.iter().enumerate() {
            let sd = (s / div).sqrt();
            // Relative cut-off: sums of identical daily values can differ in
            // the last bits without carrying information.
            if !(sd > 1e-12 * means[j].abs().max(1e-300)) {
                return Err(Error::ZeroVariance(j));
            }
            sds.push(sd);
        }
        Ok(StandardScaler {
            means,
            sds,
            denominator,
        })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        let mut z = x.clone();
        for i in 0..z.nrows() {
            for (j, v) in z.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.sds[j];
            }
        }
        Ok(z)
    }
}

/// Standardizes columns with the sample (`n - 1`) standard deviation.
pub fn standardize(x: &Matrix) -> Result<(StandardScaler, Matrix)> {
    standardize_with(x, Denominator::Sample)
}

pub fn standardize_with(x: &Matrix, denominator: Denominator) -> Result<(StandardScaler, Matrix)> {
    let scaler = StandardScaler::fit(x, denominator)?;
    let z = scaler.transform(x)?;
    Ok((scaler, z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// k × k, one unit eigenvector per row, rows ordered by eigenvalue.
    pub loadings: Matrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub cumulative_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Eigen-decomposition of the correlation matrix of `z`.
pub fn fit_pca(z: &Matrix) -> Result<PcaModel> {
    let n = z.nrows();
    let k = z.ncols();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    if k == 0 {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    let corr = correlation_of(z)?;
    let (values, vectors) = symmetric_eigen(&corr, JACOBI_TOLERANCE, 10 * k * k)?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));

    let mut loadings = Matrix::zeros(k, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (row, &c) in order.iter().enumerate() {
        eigenvalues.push(values[c]);
        let dst = loadings.row_mut(row);
        for (i, v) in dst.iter_mut().enumerate() {
            *v = vectors[(i, c)];
        }
        fix_sign(dst);
    }
    // rank-deficient inputs leave eigenvalues of order -1e-16
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let explained_ratio: Vec<f64> = eigenvalues.iter().map(|l| l.max(0.0) / total).collect();
    let mut acc = 0.0;
    let cumulative_ratio = explained_ratio
        .iter()
        .map(|r| {
            acc += r;
            acc
        })
        .collect();
    Ok(PcaModel {
        loadings,
        eigenvalues,
        explained_ratio,
        cumulative_ratio,
    })
}

/// Makes the largest-magnitude entry positive; near-ties go to the lowest
/// index.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if let Some(lead) = v.iter().position(|x| x.abs() >= max - 1e-12) {
        if v[lead] < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

fn correlation_of(z: &Matrix) -> Result<Matrix> {
    let n = z.nrows();
    let k = z.ncols();
    let mut means = vec![0.0; k];
    for (i, r) in z.rows().enumerate() {
        for (m, v) in means.iter_mut().zip(r) {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i });
            }
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut c = Matrix::zeros(k, k);
    let mut centred = vec![0.0; k];
    for r in z.rows() {
        for j in 0..k {
            centred[j] = r[j] - means[j];
        }
        for i in 0..k {
            let ci = centred[i];
            for j in i..k {
                c[(i, j)] += ci * centred[j];
            }
        }
    }
    let sd: Vec<f64> = (0..k).map(|i| c[(i, i)].sqrt()).collect();
    if let Some(j) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::ZeroVariance(j));
    }
    for i in 0..k {
        c[(i, i)] = 1.0;
        for j in i + 1..k {
            let v = c[(i, j)] / (sd[i] * sd[j]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    Ok(c)
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns the eigenvalues
/// (unsorted) and a matrix whose columns are the matching unit eigenvectors.
pub fn symmetric_eigen(a: &Matrix, tol: f64, max_sweeps: usize) -> Result<(Vec<f64>, Matrix)> {
    let k = a.nrows();
    assert_eq!(k, a.ncols(), "symmetric_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = Matrix::identity(k);

    let off_max = |m: &Matrix| {
        let mut worst = 0.0_f64;
        for p in 0..k {
            for q in p + 1..k {
                worst = worst.max(m[(p, q)].abs());
            }
        }
        worst
    };

    let mut sweeps = 0;
    while off_max(&m) > tol {
        if sweeps == max_sweeps {
            return Err(Error::EigenNoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..k {
            for q in p + 1..k {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let app = m[(p, p)];
                let aqq = m[(q, q)];
                m[(p, p)] = app - t * apq;
                m[(q, q)] = aqq + t * apq;
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for r in 0..k {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[(r, p)];
                    let arq = m[(r, q)];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    m[(r, p)] = np;
                    m[(p, r)] = np;
                    m[(r, q)] = nq;
                    m[(q, r)] = nq;
                }
                for r in 0..k {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }
    let values = (0..k).map(|i| m[(i, i)]).collect();
    Ok((values, v))
}

/// Number of leading components kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentSelection {
    pub r: usize,
    /// False when a cap forced fewer components than the threshold needs.
    pub threshold_met: bool,
}

/// Smallest component count whose cumulative explained variance reaches
/// `threshold`, optionally capped.
pub fn select_components(model: &PcaModel, threshold: f64, cap: Option<usize>) -> ComponentSelection {
    let k = model.dim();
    let r = model
        .cumulative_ratio
        .iter()
        .position(|&c| c >= threshold - 1e-12)
        .map_or(k, |i| i + 1);
    match cap {
        Some(cap) if r > cap => ComponentSelection {
            r: cap.max(1),
            threshold_met: false,
        },
        _ => ComponentSelection { r, threshold_met: true },
    }
}

/// Scores of raw observations on the first `r` components, using the stored
/// standardization.
pub fn project(scaler: &StandardScaler, model: &PcaModel, x: &Matrix, r: usize) -> Result<Matrix> {
    let k = model.dim();
    if scaler.dim() != k {
        return Err(Error::Dimension {
            expected: k,
            got: scaler.dim(),
        });
    }
    if r == 0 || r > k {
        return Err(Error::Dimension { expected: k, got: r });
    }
    let z = scaler.transform(x)?;
    let mut scores = Matrix::zeros(z.nrows(), r);
    for (i, zr) in z.rows().enumerate() {
        for (c, s) in scores.row_mut(i).iter_mut().enumerate() {
            *s = dot(model.loadings.row(c), zr);
        }
    }
    Ok(scores)
}

/// Standardization and loadings frozen together, as stored with a selected
/// model and reused unchanged when refitting on resampled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenTransform {
    pub scaler: StandardScaler,
    pub pca: PcaModel,
    pub r: usize,
}

impl FrozenTransform {
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        project(&self.scaler, &self.pca, x, self.r)
    }
}
