//! Comparison methods: Borda counting, Bradley-Terry maximum likelihood and
//! singular value thresholding of the skew-symmetric outcome matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{skew_statistic, ComparisonCounts, ProbabilityMatrix, Ranking};
use crate::error::{Error, Result};

/// Per-player Borda score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BordaScore {
    /// Sum over opponents met of the fraction of games won against them.
    #[default]
    WinFraction,
    /// Total number of games won.
    TotalWins,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BordaFit {
    pub scores: Vec<f64>,
    pub ranking: Ranking,
}

pub fn borda_rank(counts: &ComparisonCounts) -> BordaFit {
    borda_rank_with(counts, BordaScore::WinFraction)
}

pub fn borda_rank_with(counts: &ComparisonCounts, kind: BordaScore) -> BordaFit {
    let n = counts.n();
    let scores: Vec<f64> = (0..n)
        .map(|i| match kind {
            BordaScore::WinFraction => (0..n)
                .filter(|&j| counts.pairs(i, j) > 0)
                .map(|j| f64::from(counts.wins(i, j)) / f64::from(counts.pairs(i, j)))
                .sum(),
            BordaScore::TotalWins => counts.total_wins(i) as f64,
        })
        .collect();
    let ranking = Ranking::from_scores(&scores);
    BordaFit { scores, ranking }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtOptions {
    /// Stop once the Euclidean norm of the log-likelihood gradient is at most this.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for BtOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BtFit {
    /// Log-strengths, summing to zero.
    pub beta: Vec<f64>,
    pub ranking: Ranking,
    pub iters: usize,
    pub grad_norm: f64,
}

#[inline]
fn log_logistic(x: f64) -> f64 {
    if x > 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Observed pairs `(i, j, y_ij, y_ji)` with `i < j`.
fn observed(counts: &ComparisonCounts) -> Vec<(usize, usize, f64, f64)> {
    let n = counts.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if counts.pairs(i, j) > 0 {
                out.push((i, j, f64::from(counts.wins(i, j)), f64::from(counts.wins(j, i))));
            }
        }
    }
    out
}

/// `Σ_{i≠j} y_ij log σ(β_i - β_j)`.
pub fn bt_log_likelihood(counts: &ComparisonCounts, beta: &[f64]) -> f64 {
    observed(counts)
        .iter()
        .map(|&(i, j, yij, yji)| ll_pair(beta[i] - beta[j], yij, yji))
        .sum()
}

#[inline]
fn ll_pair(d: f64, yij: f64, yji: f64) -> f64 {
    let mut v = 0.0;
    if yij > 0.0 {
        v += yij * log_logistic(d);
    }
    if yji > 0.0 {
        v += yji * log_logistic(-d);
    }
    v
}

fn bt_gradient(edges: &[(usize, usize, f64, f64)], beta: &[f64], grad: &mut [f64]) {
    grad.fill(0.0);
    for &(i, j, yij, yji) in edges {
        let s = logistic(beta[i] - beta[j]);
        let g = yij - (yij + yji) * s;
        grad[i] += g;
        grad[j] -= g;
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Bradley-Terry maximum likelihood with `Σ β = 0`.
///
/// Damped Newton iterations on the concave log-likelihood. The Hessian is a
/// weighted graph Laplacian; adding `11ᵀ / n` makes it invertible without
/// moving the step off the sum-zero subspace.
pub fn bt_fit(counts: &ComparisonCounts, opts: &BtOptions) -> Result<BtFit> {
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iters == 0 {
        return Err(Error::InvalidConfig("BT tolerance must be > 0 and max_iters >= 1".into()));
    }
    let n = counts.n();
    if n == 0 {
        return Err(Error::Degenerate("no players".into()));
    }
    let components = counts.strong_components().len();
    if components != 1 {
        return Err(Error::NotStronglyConnected { components });
    }
    let edges = observed(counts);
    let ll = |b: &[f64]| -> f64 {
        edges
            .iter()
            .map(|&(i, j, yij, yji)| ll_pair(b[i] - b[j], yij, yji))
            .sum()
    };

    let mut beta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut cand_grad = vec![0.0; n];
    bt_gradient(&edges, &beta, &mut grad);
    let mut grad_norm = norm(&grad);
    let mut value = ll(&beta);

    for iter in 0..opts.max_iters {
        if grad_norm <= opts.tol {
            return Ok(finish(beta, iter, grad_norm));
        }
        let mut hess = DMatrix::from_element(n, n, 1.0 / n as f64);
        for &(i, j, yij, yji) in &edges {
            let s = logistic(beta[i] - beta[j]);
            let w = (yij + yji) * s * (1.0 - s);
            hess[(i, i)] += w;
            hess[(j, j)] += w;
            hess[(i, j)] -= w;
            hess[(j, i)] -= w;
        }
        let chol = hess
            .cholesky()
            .ok_or_else(|| Error::NumericFailure("BT Hessian is not positive definite".into()))?;
        let dir = chol.solve(&DVector::from_column_slice(&grad));
        let slope: f64 = dir.iter().zip(&grad).map(|(d, g)| d * g).sum();

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, b), d) in cand.iter_mut().zip(&beta).zip(dir.iter()) {
                *c = b + step * d;
            }
            let v = ll(&cand);
            bt_gradient(&edges, &cand, &mut cand_grad);
            let gn = norm(&cand_grad);
            let armijo = v >= value + 1e-4 * step * slope;
            // Near the optimum the likelihood change drowns in rounding; fall back on the gradient.
            let flat = gn < grad_norm && v >= value - 1e-12 * (1.0 + value.abs());
            if v.is_finite() && (armijo || flat) {
                std::mem::swap(&mut beta, &mut cand);
                std::mem::swap(&mut grad, &mut cand_grad);
                value = v;
                grad_norm = gn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        let mean = beta.iter().sum::<f64>() / n as f64;
        beta.iter_mut().for_each(|b| *b -= mean);
    }
    if grad_norm <= opts.tol {
        return Ok(finish(beta, opts.max_iters, grad_norm));
    }
    Err(Error::NonConvergence {
        iters: opts.max_iters,
        grad_norm,
        last: beta,
    })
}

fn finish(mut beta: Vec<f64>, iters: usize, grad_norm: f64) -> BtFit {
    let mean = beta.iter().sum::<f64>() / beta.len() as f64;
    beta.iter_mut().for_each(|b| *b -= mean);
    let ranking = Ranking::from_scores(&beta);
    BtFit {
        beta,
        ranking,
        iters,
        grad_norm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsvtOptions {
    /// Slack in the `(2 + eta) sqrt(n p̂)` singular value threshold.
    pub eta: f64,
}

impl Default for UsvtOptions {
    fn default() -> Self {
        Self { eta: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsvtFit {
    pub estimate: ProbabilityMatrix,
    pub row_sums: Vec<f64>,
    pub ranking: Ranking,
    /// Number of singular values kept.
    pub rank: usize,
}

/// Singular value thresholding of `x_ij = 2 y_ij / n_ij - 1`, ranked by the
/// row sums of the implied probability estimate.
pub fn usvt_rank(counts: &ComparisonCounts, opts: &UsvtOptions) -> Result<UsvtFit> {
    if opts.eta.is_nan() || opts.eta <= 0.0 {
        return Err(Error::InvalidConfig(format!("eta = {} must be > 0", opts.eta)));
    }
    let n = counts.n();
    if n < 2 {
        return Err(Error::Degenerate("USVT needs at least two players".into()));
    }
    let p_hat = counts.density();
    if p_hat == 0.0 {
        return Err(Error::Degenerate("no pair has been observed".into()));
    }
    usvt_from_matrix(skew_statistic(counts), p_hat, opts)
}

/// USVT on an arbitrary `[-1, 1]`-valued skew-symmetric matrix observed with rate `p_hat`.
pub fn usvt_from_matrix(x: DMatrix<f64>, p_hat: f64, opts: &UsvtOptions) -> Result<UsvtFit> {
    let n = x.nrows();
    let threshold = (2.0 + opts.eta) * (n as f64 * p_hat).sqrt();
    let svd = x.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::NumericFailure("SVD did not return singular vectors".into())),
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut kept = 0;
    for (idx, &sv) in svd.singular_values.iter().enumerate() {
        if sv > threshold {
            kept += 1;
            m += (u.column(idx) * v_t.row(idx)) * sv;
        }
    }
    let mut est = vec![vec![0.5; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let a = ((m[(i, j)] / p_hat).clamp(-1.0, 1.0) + 1.0) / 2.0;
            let b = ((m[(j, i)] / p_hat).clamp(-1.0, 1.0) + 1.0) / 2.0;
            let p = (a + 1.0 - b) / 2.0;
            est[i][j] = p;
            est[j][i] = 1.0 - p;
        }
    }
    let estimate = ProbabilityMatrix::new(est)?;
    let row_sums = estimate.row_sums();
    let ranking = Ranking::from_scores(&row_sums);
    Ok(UsvtFit {
        estimate,
        row_sums,
        ranking,
        rank: kept,
    })
}
