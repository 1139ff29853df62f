//! Proportional-odds (cumulative logit) model for the three risk levels.
//!
//! `logit P(Y <= l) = eta_l + beta . s` for `l = 1, 2`, so a larger linear
//! predictor moves probability toward the lower levels. The thresholds are
//! optimised as `(eta_1, delta)` with `eta_2 = eta_1 + exp(delta)`, which keeps
//! them ordered without constraints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, inf_norm, Matrix};
use crate::panel::RiskLevel;

/// Parameter magnitude beyond which a fit is treated as separated.
pub const SEPARATION_BOUND: f64 = 1e5;

/// Probabilities are floored here before taking logs.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

const MAX_HALVINGS: usize = 30;
const MAX_PROBE_DOUBLINGS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinalModel {
    /// `eta_1 < eta_2`.
    pub eta: [f64; 2],
    pub beta: Vec<f64>,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl OrdinalModel {
    /// Intercept-only model.
    pub fn intercepts(eta1: f64, eta2: f64) -> Self {
        OrdinalModel {
            eta: [eta1, eta2],
            beta: Vec::new(),
        }
    }

    /// Builds a model from optimiser coordinates `(eta_1, delta, beta..)`.
    pub fn from_params(theta: &[f64]) -> Self {
        let gap = theta[1].exp();
        OrdinalModel {
            eta: [theta[0], theta[0] + gap],
            beta: theta[2..].to_vec(),
        }
    }

    /// Optimiser coordinates `(eta_1, delta, beta..)`.
    pub fn params(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.beta.len() + 2);
        t.push(self.eta[0]);
        t.push((self.eta[1] - self.eta[0]).ln());
        t.extend_from_slice(&self.beta);
        t
    }

    pub fn n_predictors(&self) -> usize {
        self.beta.len()
    }

    pub fn linear_predictor(&self, s: &[f64]) -> f64 {
        debug_assert_eq!(s.len(), self.beta.len());
        self.beta.iter().zip(s).map(|(b, x)| b * x).sum()
    }

    /// `P(L), P(M), P(H)` for one score vector.
    pub fn class_probabilities(&self, s: &[f64]) -> [f64; 3] {
        let lp = self.linear_predictor(s);
        let g1 = sigmoid(self.eta[0] + lp);
        let g2 = sigmoid(self.eta[1] + lp);
        [g1, (g2 - g1).max(0.0), 1.0 - g2]
    }

    /// Most probable level; ties go to the lower level.
    pub fn predict(&self, s: &[f64]) -> RiskLevel {
        argmax_lowest(&self.class_probabilities(s))
    }

    pub fn is_finite(&self) -> bool {
        self.eta.iter().chain(&self.beta).all(|v| v.is_finite())
    }

    fn max_abs_param(&self) -> f64 {
        self.eta.iter().chain(&self.beta).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Index of the largest probability, first index on ties.
pub fn argmax_lowest(p: &[f64; 3]) -> RiskLevel {
    let mut best = 0;
    for i in 1..3 {
        if p[i] > p[best] {
            best = i;
        }
    }
    RiskLevel::from_index(best).expect("three levels")
}

#[derive(Debug, Clone, PartialEq)]
pub struct NllDerivatives {
    pub nll: f64,
    /// With respect to `(eta_1, delta, beta..)`.
    pub gradient: Vec<f64>,
    pub hessian: Matrix,
}

fn check_shapes(theta_len: usize, scores: &Matrix, y: &[RiskLevel]) -> Result<()> {
    if scores.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: scores.nrows(),
            got: y.len(),
        });
    }
    if scores.ncols() + 2 != theta_len {
        return Err(Error::Dimension {
            expected: theta_len - 2,
            got: scores.ncols(),
        });
    }
    if y.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    Ok(())
}

/// Log-likelihood contribution of one observation and its derivatives with
/// respect to the two cumulative linear predictors.
struct Contribution {
    log_p: f64,
    /// d log p / d a_1, d a_2
    d1: f64,
    d2: f64,
    /// second derivatives: a1a1, a2a2, a1a2
    h11: f64,
    h22: f64,
    h12: f64,
}

#[inline]
fn contribution(a1: f64, gap: f64, y: RiskLevel) -> Contribution {
    let a2 = a1 + gap;
    match y {
        RiskLevel::L => {
            let g = sigmoid(a1);
            Contribution {
                log_p: log_sigmoid(a1).max(PROBABILITY_FLOOR.ln()),
                d1: sigmoid(-a1),
                d2: 0.0,
                h11: -g * (1.0 - g),
                h22: 0.0,
                h12: 0.0,
            }
        }
        RiskLevel::H => {
            let g = sigmoid(a2);
            Contribution {
                log_p: log_sigmoid(-a2).max(PROBABILITY_FLOOR.ln()),
                d1: 0.0,
                d2: -g,
                h11: 0.0,
                h22: -g * (1.0 - g),
                h12: 0.0,
            }
        }
        RiskLevel::M => {
            // p = sigmoid(a2) * sigmoid(-a1) * (1 - exp(-gap))
            let g1 = sigmoid(a1);
            let g2 = sigmoid(a2);
            let log_p = log_sigmoid(a2) + log_sigmoid(-a1) + (-(-gap).exp_m1()).ln();
            // q = 1 / (exp(gap) - 1)
            let q = 1.0 / gap.exp_m1();
            let qq = q * (q + 1.0);
            Contribution {
                log_p: log_p.max(PROBABILITY_FLOOR.ln()),
                d1: -g1 - q,
                d2: (1.0 - g2) + q,
                h11: -g1 * (1.0 - g1) - qq,
                h22: -g2 * (1.0 - g2) - qq,
                h12: qq,
            }
        }
    }
}

fn nll_only(theta: &[f64], scores: &Matrix, y: &[RiskLevel]) -> f64 {
    nll_at(theta[0], theta[1].exp(), &theta[2..], scores, y)
}

fn nll_at(eta1: f64, gap: f64, beta: &[f64], scores: &Matrix, y: &[RiskLevel]) -> f64 {
    let mut nll = 0.0;
    for (s, &yi) in scores.rows().zip(y) {
        let lp: f64 = beta.iter().zip(s).map(|(b, x)| b * x).sum();
        nll -= contribution(eta1 + lp, gap, yi).log_p;
    }
    nll
}

/// `(eta_1, eta_2, beta..)`, the coordinates in which the objective is convex.
fn natural(theta: &[f64]) -> Vec<f64> {
    let mut v = theta.to_vec();
    v[1] = theta[0] + theta[1].exp();
    v
}

/// Follows the ray `from + t * dir` (natural coordinates) for doubling `t`.
/// Returns the first point where `η_2` (or, failing that, some parameter by
/// a wide margin) exceeds [`SEPARATION_BOUND`], provided the objective never
/// increased on the way.
fn probe_recession(from: &[f64], dir: &[f64], start_nll: f64, scores: &Matrix, y: &[RiskLevel]) -> Option<Vec<f64>> {
    let mut prev = start_nll;
    let mut t = 1.0;
    for _ in 0..MAX_PROBE_DOUBLINGS {
        let cand: Vec<f64> = from.iter().zip(dir).map(|(p, s)| p + t * s).collect();
        let gap = cand[1] - cand[0];
        if !(gap > 0.0) {
            return None;
        }
        let f = nll_at(cand[0], gap, &cand[2..], scores, y);
        if !(f <= prev) {
            return None;
        }
        let largest = cand.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if cand[1].abs() > SEPARATION_BOUND || largest > 1e3 * SEPARATION_BOUND {
            return Some(cand);
        }
        prev = f;
        t *= 2.0;
    }
    None
}

fn derivatives(theta: &[f64], scores: &Matrix, y: &[RiskLevel]) -> Result<NllDerivatives> {
    let m = theta.len();
    let gap = theta[1].exp();
    let beta = &theta[2..];
    let mut nll = 0.0;
    let mut grad = vec![0.0; m];
    let mut hess = Matrix::zeros(m, m);
    // base Jacobian (1, 0, s); the a2 Jacobian adds `gap` in the delta slot
    let mut b = vec![0.0; m];
    b[0] = 1.0;
    for (i, (s, &yi)) in scores.rows().zip(y).enumerate() {
        let lp: f64 = beta.iter().zip(s).map(|(bb, x)| bb * x).sum();
        let c = contribution(theta[0] + lp, gap, yi);
        if !(c.log_p.is_finite() && c.d1.is_finite() && c.d2.is_finite() && c.h12.is_finite()) {
            return Err(Error::NonFinite { row: i });
        }
        nll -= c.log_p;
        b[2..].copy_from_slice(s);

        let du = c.d1 + c.d2;
        for (g, bj) in grad.iter_mut().zip(&b) {
            *g -= du * bj;
        }
        grad[1] -= c.d2 * gap;

        // Hessian of log p: w_bb b b' + w_be gap (b e' + e b') + w_ee gap^2 e e' + d2 gap e e'
        let w_bb = c.h11 + c.h22 + 2.0 * c.h12;
        let w_be = (c.h22 + c.h12) * gap;
        let w_ee = c.h22 * gap * gap + c.d2 * gap;
        for j in 0..m {
            let bj = b[j];
            if bj == 0.0 {
                continue;
            }
            let row = hess.row_mut(j);
            for (k, h) in row.iter_mut().enumerate().skip(j) {
                *h -= w_bb * bj * b[k];
            }
        }
        // e is the delta unit vector; b[1] == 0 so b e' + e b' only touches row/column 1 off the diagonal
        hess[(0, 1)] -= w_be * b[0];
        for j in 2..m {
            hess[(1, j)] -= w_be * b[j];
        }
        hess[(1, 1)] -= w_ee;
    }
    for j in 0..m {
        for k in 0..j {
            hess[(j, k)] = hess[(k, j)];
        }
    }
    if !nll.is_finite() {
        return Err(Error::NonFinite { row: y.len() });
    }
    Ok(NllDerivatives {
        nll,
        gradient: grad,
        hessian: hess,
    })
}

/// Negative log-likelihood with gradient and Hessian in the
/// `(eta_1, delta, beta..)` coordinates.
pub fn nll_grad_hess(model: &OrdinalModel, scores: &Matrix, y: &[RiskLevel]) -> Result<NllDerivatives> {
    let theta = model.params();
    check_shapes(theta.len(), scores, y)?;
    derivatives(&theta, scores, y)
}

/// Negative log-likelihood alone.
pub fn nll(model: &OrdinalModel, scores: &Matrix, y: &[RiskLevel]) -> Result<f64> {
    let theta = model.params();
    check_shapes(theta.len(), scores, y)?;
    Ok(nll_only(&theta, scores, y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: OrdinalModel,
    pub nll: f64,
    pub iterations: usize,
    pub converged: bool,
    pub separation_flag: bool,
    pub gradient_norm: f64,
}

/// Empirical cumulative logits, nudged away from 0 and 1.
fn starting_point(y: &[RiskLevel], r: usize) -> Vec<f64> {
    let n = y.len() as f64;
    let mut counts = [0usize; 3];
    for l in y {
        counts[l.index()] += 1;
    }
    let clamp = |c: f64| c.clamp(0.5 / n, 1.0 - 0.5 / n);
    let c1 = clamp(counts[0] as f64 / n);
    let c2 = clamp((counts[0] + counts[1]) as f64 / n);
    let eta1 = logit(c1);
    let gap = (logit(c2) - eta1).max(0.1);
    let mut theta = vec![0.0; r + 2];
    theta[0] = eta1;
    theta[1] = gap.ln();
    theta
}

/// Newton direction, adding a ridge when the Hessian is not positive definite.
fn newton_direction(d: &NllDerivatives) -> Option<Vec<f64>> {
    let neg_g: Vec<f64> = d.gradient.iter().map(|g| -g).collect();
    if let Some(l) = cholesky(&d.hessian) {
        return Some(cholesky_solve(&l, &neg_g));
    }
    let m = neg_g.len();
    let scale = (0..m).fold(0.0_f64, |s, i| s.max(d.hessian[(i, i)].abs())).max(1e-300);
    let mut ridge = 1e-10 * scale;
    for _ in 0..40 {
        let mut h = d.hessian.clone();
        for i in 0..m {
            h[(i, i)] += ridge;
        }
        if let Some(l) = cholesky(&h) {
            return Some(cholesky_solve(&l, &neg_g));
        }
        ridge *= 10.0;
    }
    None
}

/// Relative size of the rounding noise in a summed negative log-likelihood.
const NLL_NOISE: f64 = 1e-12;

/// Near the optimum a Newton step can lower the objective by less than its
/// rounding noise, so no halving shows a strict decrease. The full step is
/// then taken when the predicted decrease is itself below the noise, the
/// objective does not rise beyond it, and the gradient shrinks.
fn polish_step(
    theta: &[f64],
    dir: &[f64],
    d: &NllDerivatives,
    scores: &Matrix,
    y: &[RiskLevel],
) -> Result<Option<(Vec<f64>, NllDerivatives)>> {
    let noise = NLL_NOISE * d.nll.abs().max(1.0);
    let predicted = -0.5 * dot(&d.gradient, dir);
    if !(predicted.abs() <= noise) {
        return Ok(None);
    }
    let cand: Vec<f64> = theta.iter().zip(dir).map(|(p, s)| p + s).collect();
    let next = derivatives(&cand, scores, y)?;
    if next.nll.is_finite() && next.nll <= d.nll + noise && inf_norm(&next.gradient) < inf_norm(&d.gradient) {
        Ok(Some((cand, next)))
    } else {
        Ok(None)
    }
}

/// Newton fit with step halving. `trace` receives the objective after every
/// accepted step (starting value first).
pub fn fit_traced(
    scores: &Matrix,
    y: &[RiskLevel],
    opts: &FitOptions,
    mut trace: impl FnMut(f64),
) -> Result<FitResult> {
    let n = y.len();
    let r = scores.ncols();
    if scores.nrows() != n {
        return Err(Error::Dimension {
            expected: scores.nrows(),
            got: n,
        });
    }
    if n < 3 {
        return Err(Error::TooFewRows { needed: 3, got: n });
    }
    let first = y[0];
    if y.iter().all(|&l| l == first) {
        return Err(Error::SingleClass);
    }
    if r >= n {
        return Err(Error::Unidentifiable {
            predictors: r,
            observations: n,
        });
    }

    let mut theta = starting_point(y, r);
    let mut d = derivatives(&theta, scores, y)?;
    trace(d.nll);
    let mut iterations = 0;
    // natural-coordinate displacement of the last accepted step
    let mut last_step: Option<Vec<f64>> = None;
    let mut separated = false;

    while iterations < opts.max_iter && inf_norm(&d.gradient) > opts.tol {
        let Some(dir) = newton_direction(&d) else { break };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(p, s)| p + t * s).collect();
            let f = nll_only(&cand, scores, y);
            if f.is_finite() && f < d.nll {
                accepted = Some(cand);
                break;
            }
            t *= 0.5;
        }
        let (cand, next) = match accepted {
            Some(cand) => {
                let next = derivatives(&cand, scores, y)?;
                (cand, next)
            }
            None => match polish_step(&theta, &dir, &d, scores, y)? {
                Some(v) => v,
                None => break,
            },
        };
        let before = natural(&theta);
        last_step = Some(natural(&cand).iter().zip(&before).map(|(a, b)| a - b).collect());
        theta = cand;
        d = next;
        trace(d.nll);
        iterations += 1;
        if OrdinalModel::from_params(&theta).max_abs_param() > SEPARATION_BOUND {
            separated = true;
            break;
        }
    }

    // A likelihood that keeps improving along the last step, however far we
    // extrapolate, has no finite maximiser.
    if !separated {
        if let Some(step) = last_step {
            if let Some(far) = probe_recession(&natural(&theta), &step, d.nll, scores, y) {
                separated = true;
                theta = far.clone();
                theta[1] = (far[1] - far[0]).ln();
                d = derivatives(&theta, scores, y)?;
            }
        }
    }

    let gradient_norm = inf_norm(&d.gradient);
    Ok(FitResult {
        model: OrdinalModel::from_params(&theta),
        nll: d.nll,
        iterations,
        converged: !separated && gradient_norm <= opts.tol,
        separation_flag: separated,
        gradient_norm,
    })
}

/// Maximum-likelihood fit of the proportional-odds model.
pub fn fit(scores: &Matrix, y: &[RiskLevel], opts: &FitOptions) -> Result<FitResult> {
    fit_traced(scores, y, opts, |_| {})
}

/// Fraction of rows whose predicted level differs from the observed one.
pub fn misclassification_error(model: &OrdinalModel, scores: &Matrix, y: &[RiskLevel]) -> f64 {
    misclassified(model, scores, y) as f64 / y.len() as f64
}

pub fn misclassified(model: &OrdinalModel, scores: &Matrix, y: &[RiskLevel]) -> usize {
    scores.rows().zip(y).filter(|(s, &yi)| model.predict(s) != yi).count()
}
