//! Ranking distances and correlations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ProbabilityMatrix, Ranking};
use crate::error::{Error, Result};

fn check_len(a: &Ranking, b: &Ranking) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// `n (n - 1) / 2`.
pub fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Number of player pairs ordered differently by the two rankings.
pub fn kendall_tau(pi: &Ranking, omega: &Ranking) -> Result<u64> {
    check_len(pi, omega)?;
    // Walk players in π order; discordant pairs are inversions of ω along that walk.
    let mut seq: Vec<usize> = pi.ascending().into_iter().map(|p| omega.rank(p)).collect();
    let mut buf = vec![0; seq.len()];
    Ok(count_inversions(&mut seq, &mut buf))
}

/// Stable merge sort of `v`, returning the number of inversions.
fn count_inversions(v: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (left, right) = v.split_at_mut(mid);
        let (bl, br) = buf.split_at_mut(mid);
        count_inversions(left, bl) + count_inversions(right, br)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[i] <= v[j] {
            buf[k] = v[i];
            i += 1;
        } else {
            buf[k] = v[j];
            inv += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    inv
}

/// Normalization of a Kendall distance into an error rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorConvention {
    /// `τ / (n (n - 1) / 2)`, the proportion of discordant pairs.
    #[default]
    Pairs,
    /// `τ / (2 n (n - 1))`.
    Paper,
}

impl FromStr for ErrorConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs" => Ok(Self::Pairs),
            "paper" => Ok(Self::Paper),
            other => Err(Error::InvalidConfig(format!("unknown error convention `{other}`"))),
        }
    }
}

impl fmt::Display for ErrorConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pairs => "pairs",
            Self::Paper => "paper",
        })
    }
}

pub fn error_rate(tau: u64, n: usize, convention: ErrorConvention) -> Result<f64> {
    let pairs = pair_count(n);
    if n < 2 || tau > pairs {
        return Err(Error::OutOfRange(format!("tau = {tau} with n = {n}")));
    }
    let denom = match convention {
        ErrorConvention::Pairs => pairs as f64,
        ErrorConvention::Paper => 4.0 * pairs as f64,
    };
    Ok(tau as f64 / denom)
}

/// `1 - 2 τ / (n (n - 1) / 2)`, in `[-1, 1]`.
pub fn kendall_correlation(pi: &Ranking, omega: &Ranking) -> Result<f64> {
    let tau = kendall_tau(pi, omega)?;
    if pi.len() < 2 {
        return Err(Error::OutOfRange("rank correlation needs n >= 2".into()));
    }
    Ok(1.0 - 2.0 * tau as f64 / pair_count(pi.len()) as f64)
}

/// Spearman's rank correlation for strict rankings.
pub fn spearman_rho(pi: &Ranking, omega: &Ranking) -> Result<f64> {
    check_len(pi, omega)?;
    let n = pi.len();
    if n < 2 {
        return Err(Error::OutOfRange("rank correlation needs n >= 2".into()));
    }
    let d2: u64 = pi
        .ranks()
        .iter()
        .zip(omega.ranks())
        .map(|(&a, &b)| (a.abs_diff(b) as u64).pow(2))
        .sum();
    let n = n as f64;
    Ok(1.0 - 6.0 * d2 as f64 / (n * (n * n - 1.0)))
}

/// Sorted difficulties `|2 p*_ij - 1|` over all pairs `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct QSequence {
    sorted: Vec<f64>,
    // prefix[s] = sum of the s smallest values
    prefix: Vec<f64>,
}

impl QSequence {
    pub fn from_sorted(sorted: Vec<f64>) -> Result<Self> {
        if sorted.iter().any(|&q| !(q > 0.0 && q <= 1.0)) {
            return Err(Error::OutOfRange("q values must lie in (0, 1]".into()));
        }
        if sorted.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::OutOfRange("q values must be non-decreasing".into()));
        }
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &q in &sorted {
            acc += q;
            prefix.push(acc);
        }
        Ok(Self { sorted, prefix })
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

pub fn q_sequence(p_star: &ProbabilityMatrix) -> Result<QSequence> {
    let n = p_star.n();
    let mut q = Vec::with_capacity(pair_count(n) as usize);
    for i in 0..n {
        for j in (i + 1)..n {
            let p = p_star.get(i, j);
            if p == 0.5 {
                return Err(Error::NonUniqueRanking { i, j });
            }
            q.push((2.0 * p - 1.0).abs());
        }
    }
    q.sort_by(f64::total_cmp);
    QSequence::from_sorted(q)
}

/// Mean of the `s` smallest difficulties; `Q(0) = 0`.
pub fn q_bar(s: usize, q: &QSequence) -> Result<f64> {
    if s > q.len() {
        return Err(Error::OutOfRange(format!("s = {s} exceeds {} pairs", q.len())));
    }
    if s == 0 {
        return Ok(0.0);
    }
    Ok(q.prefix[s] / s as f64)
}

/// `τ · Q(τ)²`.
pub fn modified_tau(pi: &Ranking, pi_star: &Ranking, q: &QSequence) -> Result<f64> {
    let tau = kendall_tau(pi, pi_star)?;
    if q.len() as u64 != pair_count(pi.len()) {
        return Err(Error::DimensionMismatch {
            expected: pair_count(pi.len()) as usize,
            found: q.len(),
        });
    }
    let qb = q_bar(tau as usize, q)?;
    Ok(tau as f64 * qb * qb)
}
