//! Independent reference implementations used as test oracles. They favour
//! the plainest textbook formulation over speed or robustness.
#![allow(dead_code, clippy::needless_range_loop)]

pub mod props;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonerisk_core::{Matrix, RiskLevel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-3.0..3.0)).collect();
    Matrix::from_row_major(rows, cols, data)
}

pub fn column(x: &Matrix, j: usize) -> Vec<f64> {
    (0..x.nrows()).map(|i| x[(i, j)]).collect()
}

/// Two-pass mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let ss = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Pearson correlation by the textbook formula.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn correlation_oracle(x: &Matrix) -> Vec<Vec<f64>> {
    let k = x.ncols();
    let cols: Vec<Vec<f64>> = (0..k).map(|j| column(x, j)).collect();
    (0..k)
        .map(|i| (0..k).map(|j| pearson(&cols[i], &cols[j])).collect())
        .collect()
}

/// Classical Jacobi: always rotate away the largest off-diagonal entry.
/// Returns eigenvalues descending and matching unit eigenvectors.
pub fn jacobi_oracle(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..100_000 {
        let (mut p, mut q, mut big) = (0, 1, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if m[i][j].abs() > big {
                    big = m[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big < 1e-15 {
            break;
        }
        let theta = 0.5 * (2.0 * m[p][q]).atan2(m[q][q] - m[p][p]);
        let (s, c) = theta.sin_cos();
        for k in 0..n {
            let mkp = m[k][p];
            let mkq = m[k][q];
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
        }
        for k in 0..n {
            let mpk = m[p][k];
            let mqk = m[q][k];
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
        }
        for row in v.iter_mut() {
            let vp = row[p];
            let vq = row[q];
            row[p] = c * vp - s * vq;
            row[q] = s * vp + c * vq;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let values = order.iter().map(|&i| m[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Negative log-likelihood with probabilities formed directly from the
/// cumulative logits.
pub fn naive_nll(eta1: f64, eta2: f64, beta: &[f64], s: &Matrix, y: &[RiskLevel]) -> f64 {
    let mut total = 0.0;
    for (i, &yi) in y.iter().enumerate() {
        let lp: f64 = beta.iter().enumerate().map(|(j, b)| b * s[(i, j)]).sum();
        let g1 = logistic(eta1 + lp);
        let g2 = logistic(eta2 + lp);
        let p = match yi {
            RiskLevel::L => g1,
            RiskLevel::M => g2 - g1,
            RiskLevel::H => 1.0 - g2,
        };
        total -= p.max(1e-300).ln();
    }
    total
}

/// Exhaustive grid minimum of the single-predictor objective over
/// `eta1 in [-10, 10]`, `delta in [-5, 5]`, `beta in [-10, 10]` at step
/// 0.01, where `eta2 = eta1 + exp(delta)`.
///
/// For fixed `(delta, beta)` the objective is convex in `eta1`, so the grid
/// minimum along `eta1` is found exactly by walking downhill from the
/// previous optimum. Along `beta` each `delta` slice is scanned at 0.1
/// and then at 0.01 within 0.3 of the coarse winner.
pub fn grid_oracle_min(s: &[f64], y: &[RiskLevel]) -> f64 {
    let n = s.len();
    let f = |eta1: f64, gap: f64, beta: f64| -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            let lp = beta * s[i];
            let p = match y[i] {
                RiskLevel::L => logistic(eta1 + lp),
                RiskLevel::M => logistic(eta1 + gap + lp) - logistic(eta1 + lp),
                RiskLevel::H => 1.0 - logistic(eta1 + gap + lp),
            };
            total -= p.max(1e-300).ln();
        }
        total
    };
    let eta_at = |i: i64| -10.0 + 0.01 * i as f64;
    // exact grid minimum of a convex sequence: walk downhill from a hint
    let best_eta = |gap: f64, beta: f64, hint: &mut i64| -> f64 {
        let mut i = *hint;
        let mut fi = f(eta_at(i), gap, beta);
        for dir in [1i64, -1] {
            let mut moved = false;
            while (0..=2000).contains(&(i + dir)) {
                let next = f(eta_at(i + dir), gap, beta);
                if next < fi {
                    i += dir;
                    fi = next;
                    moved = true;
                } else {
                    break;
                }
            }
            if moved {
                break;
            }
        }
        *hint = i;
        fi
    };
    let mut best = f64::INFINITY;
    let mut hint = 1000i64;
    for di in 0..=1000 {
        let gap = (-5.0 + 0.01 * di as f64).exp();
        let mut coarse = (f64::INFINITY, 0i64, hint);
        for bi in (0..=2000).step_by(10) {
            let v = best_eta(gap, -10.0 + 0.01 * bi as f64, &mut hint);
            if v < coarse.0 {
                coarse = (v, bi, hint);
            }
        }
        let mut h = coarse.2;
        for bi in (coarse.1 - 30).max(0)..=(coarse.1 + 30).min(2000) {
            best = best.min(best_eta(gap, -10.0 + 0.01 * bi as f64, &mut h));
        }
        hint = coarse.2;
    }
    best
}

/// Maximum-likelihood fit in `(eta1, eta2, beta)` by damped Newton with a
/// finite-difference Hessian of the analytic gradient.
pub fn naive_fit(s: &Matrix, y: &[RiskLevel]) -> Vec<f64> {
    let r = s.ncols();
    let n = y.len() as f64;
    let c1 = y.iter().filter(|&&l| l == RiskLevel::L).count() as f64 / n;
    let c2 = y.iter().filter(|&&l| l != RiskLevel::H).count() as f64 / n;
    let lg = |p: f64| {
        let p = p.clamp(0.5 / n, 1.0 - 0.5 / n);
        (p / (1.0 - p)).ln()
    };
    let mut theta = vec![0.0; r + 2];
    theta[0] = lg(c1);
    theta[1] = lg(c2).max(theta[0] + 0.1);

    let value = |t: &[f64]| {
        if t[1] <= t[0] {
            return f64::INFINITY;
        }
        naive_nll(t[0], t[1], &t[2..], s, y)
    };
    let grad = |t: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; r + 2];
        for (i, &yi) in y.iter().enumerate() {
            let lp: f64 = (0..r).map(|j| t[2 + j] * s[(i, j)]).sum();
            let g1 = logistic(t[0] + lp);
            let g2 = logistic(t[1] + lp);
            let (d1, d2) = match yi {
                RiskLevel::L => (1.0 - g1, 0.0),
                RiskLevel::M => {
                    let p = g2 - g1;
                    (-g1 * (1.0 - g1) / p, g2 * (1.0 - g2) / p)
                }
                RiskLevel::H => (0.0, -g2),
            };
            g[0] -= d1;
            g[1] -= d2;
            for j in 0..r {
                g[2 + j] -= (d1 + d2) * s[(i, j)];
            }
        }
        g
    };
    for _ in 0..500 {
        let g = grad(&theta);
        if g.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-10 {
            break;
        }
        let m = r + 2;
        let h = 1e-6;
        let mut hess = vec![vec![0.0; m]; m];
        for j in 0..m {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[j] += h;
            dn[j] -= h;
            let (gu, gd) = (grad(&up), grad(&dn));
            for i in 0..m {
                hess[i][j] = (gu[i] - gd[i]) / (2.0 * h);
            }
        }
        let step = solve(hess, g.iter().map(|v| -v).collect());
        let f0 = value(&theta);
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, b)| a + t * b).collect();
            if value(&cand) <= f0 || t < 1e-12 {
                theta = cand;
                break;
            }
            t *= 0.5;
        }
    }
    theta
}

/// Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                a[i][j] -= f * a[c][j];
            }
            b[i] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Outcome of the plain pipeline on one subset.
#[derive(Debug, Clone)]
pub struct NaiveRecord {
    pub mask: u16,
    pub n_vars: usize,
    pub r: usize,
    pub cum_var: f64,
    pub params: Vec<f64>,
    pub misclassified: usize,
}

/// Select, standardise, diagonalise, project, fit, count errors.
pub fn naive_pipeline(x: &Matrix, y: &[RiskLevel], mask: u16, threshold: f64) -> NaiveRecord {
    let cols: Vec<usize> = (0..16).filter(|b| mask & (1 << b) != 0).collect();
    let n = x.nrows();
    let k = cols.len();
    let z: Vec<Vec<f64>> = cols
        .iter()
        .map(|&c| {
            let v = column(x, c);
            let (m, sd) = mean_sd(&v);
            v.iter().map(|a| (a - m) / sd).collect()
        })
        .collect();
    let corr: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| pearson(&z[i], &z[j])).collect())
        .collect();
    let (values, mut vectors) = jacobi_oracle(&corr);
    for v in vectors.iter_mut() {
        let mut arg = 0;
        for i in 1..k {
            if v[i].abs() > v[arg].abs() + 1e-12 {
                arg = i;
            }
        }
        if v[arg] < 0.0 {
            v.iter_mut().for_each(|e| *e = -*e);
        }
    }
    let total: f64 = values.iter().sum();
    let mut cum = 0.0;
    let mut r = k;
    let mut cum_var = 1.0;
    for (i, v) in values.iter().enumerate() {
        cum += v / total;
        if cum >= threshold - 1e-12 {
            r = i + 1;
            cum_var = cum;
            break;
        }
    }
    let scores = Matrix::from_row_major(
        n,
        r,
        (0..n)
            .flat_map(|i| {
                let z = &z;
                vectors[..r]
                    .iter()
                    .map(move |e| (0..k).map(|j| e[j] * z[j][i]).sum::<f64>())
            })
            .collect(),
    );
    let params = naive_fit(&scores, y);
    let mut misclassified = 0;
    for (i, &yi) in y.iter().enumerate() {
        let lp: f64 = (0..r).map(|j| params[2 + j] * scores[(i, j)]).sum();
        let g1 = logistic(params[0] + lp);
        let g2 = logistic(params[1] + lp);
        let p = [g1, g2 - g1, 1.0 - g2];
        let mut arg = 0;
        for c in 1..3 {
            if p[c] > p[arg] {
                arg = c;
            }
        }
        if arg != yi.index() {
            misclassified += 1;
        }
    }
    NaiveRecord {
        mask,
        n_vars: k,
        r,
        cum_var,
        params,
        misclassified,
    }
}

/// Weekly data for one synthetic region restricted to its first four
/// indicators, so the full search has 15 subsets.
pub fn four_variable_region(seed: u64) -> (Matrix, Vec<RiskLevel>) {
    use zonerisk_core::panel::{aggregate_weekly, Statistic};
    use zonerisk_core::synthetic::{generate, SyntheticSpec};
    let spec = SyntheticSpec {
        seed,
        label_noise: 0.8,
        ..SyntheticSpec::default()
    };
    let (daily, labels) = generate(&spec).unwrap();
    let (panels, _) = aggregate_weekly(&daily, &labels, Statistic::Mean).unwrap();
    let x = panels[0].matrix().select_cols(&[0, 1, 2, 3]);
    let mut full = Matrix::zeros(x.nrows(), 16);
    for i in 0..x.nrows() {
        for j in 0..4 {
            full[(i, j)] = x[(i, j)];
        }
    }
    (full, panels[0].labels())
}
