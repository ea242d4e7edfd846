//! Maximum-score ranking.
//!
//! The objective counts, for every observed pair, the signed margin of the
//! lower-indexed player whenever the ranking puts that player on top:
//!
//! ```text
//! L(π) = Σ_{i<j} (2 y_ij - n_ij) · 1[π_i > π_j]
//! ```
//!
//! Maximizing it over all permutations is combinatorial. [`master_rank`]
//! starts from the ranking of a logistic relaxation ([`surrogate_init`]) and
//! then repeatedly tries every reordering of `k` consecutive rank positions
//! ([`ktuple_search`]), restarting from the bottom after each improvement.

use serde::{Deserialize, Serialize};

use crate::data::{ComparisonCounts, Ranking};
use crate::error::{Error, Result};

/// Largest supported segment length; the search enumerates `k!` orderings.
pub const MAX_K: usize = 8;

/// How equal surrogate scores are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieBreak {
    /// The lower player index receives the lower rank.
    #[default]
    LowerIndexFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterOptions {
    /// Segment length for the local search.
    pub k: usize,
    /// Gradient step; `None` uses `0.5 / sqrt(mean number of opponents per player)`.
    pub surrogate_step: Option<f64>,
    pub surrogate_iters: usize,
    /// Weight of the `‖β‖²` penalty keeping the surrogate maximizer finite.
    pub surrogate_ridge: f64,
    pub tie_break: TieBreak,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            k: 3,
            surrogate_step: None,
            surrogate_iters: 500,
            surrogate_ridge: 1e-4,
            tie_break: TieBreak::LowerIndexFirst,
        }
    }
}

impl MasterOptions {
    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_K).contains(&self.k) {
            return Err(Error::InvalidConfig(format!("k = {} must lie in 2..={MAX_K}", self.k)));
        }
        if let Some(step) = self.surrogate_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::InvalidConfig(format!("surrogate step {step} must be > 0")));
            }
        }
        if self.surrogate_iters == 0 {
            return Err(Error::InvalidConfig("surrogate_iters must be > 0".into()));
        }
        if !(self.surrogate_ridge >= 0.0 && self.surrogate_ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "surrogate ridge {} must be >= 0",
                self.surrogate_ridge
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MasterResult {
    pub ranking: Ranking,
    pub objective: i64,
    #[serde(skip)]
    pub init_ranking: Ranking,
    pub init_objective: i64,
    /// Number of improving segment permutations applied.
    pub sweeps: usize,
    /// Objective after the initialization and after each applied permutation.
    #[serde(skip)]
    pub trace: Vec<i64>,
}

fn check_dims(pi: &Ranking, counts: &ComparisonCounts) -> Result<()> {
    if pi.len() != counts.n() {
        return Err(Error::DimensionMismatch {
            expected: counts.n(),
            found: pi.len(),
        });
    }
    Ok(())
}

/// Exact value of the maximum-score objective.
pub fn score(pi: &Ranking, counts: &ComparisonCounts) -> Result<i64> {
    check_dims(pi, counts)?;
    let n = counts.n();
    let mut total = 0i64;
    for i in 0..n {
        let ri = pi.rank(i);
        for j in (i + 1)..n {
            if ri > pi.rank(j) {
                total += counts.margin(i, j);
            }
        }
    }
    Ok(total)
}

/// Pairs with a nonzero margin, `(i, j, 2 y_ij - n_ij)` with `i < j`.
fn signed_edges(counts: &ComparisonCounts) -> Vec<(usize, usize, f64)> {
    let n = counts.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = counts.margin(i, j);
            if m != 0 {
                edges.push((i, j, m as f64));
            }
        }
    }
    edges
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

fn surrogate_objective(edges: &[(usize, usize, f64)], beta: &[f64], ridge: f64) -> f64 {
    let smooth: f64 = edges
        .iter()
        .map(|&(i, j, d)| d * logistic(beta[i] - beta[j]))
        .sum();
    smooth - ridge * beta.iter().map(|b| b * b).sum::<f64>()
}

fn surrogate_gradient(edges: &[(usize, usize, f64)], beta: &[f64], ridge: f64, grad: &mut [f64]) {
    for (g, b) in grad.iter_mut().zip(beta) {
        *g = -2.0 * ridge * b;
    }
    for &(i, j, d) in edges {
        let s = logistic(beta[i] - beta[j]);
        let g = d * s * (1.0 - s);
        grad[i] += g;
        grad[j] -= g;
    }
}

fn center(beta: &mut [f64]) {
    if beta.is_empty() {
        return;
    }
    let mean = beta.iter().sum::<f64>() / beta.len() as f64;
    for b in beta {
        *b -= mean;
    }
}

pub(crate) fn default_step(counts: &ComparisonCounts) -> f64 {
    let n = counts.n();
    if n == 0 {
        return 0.5;
    }
    let degree = 2.0 * counts.observed_pairs() as f64 / n as f64;
    0.5 / degree.max(1.0).sqrt()
}

/// Surrogate scores and their ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateFit {
    pub scores: Vec<f64>,
    pub ranking: Ranking,
    /// Penalized surrogate objective after each iteration.
    pub objective_trace: Vec<f64>,
}

/// Gradient ascent on the logistic relaxation of the objective, from `β = 0`.
///
/// A step that would lower the penalized objective is halved until it does
/// not; accepted steps let the step size recover toward its initial value.
pub fn surrogate_init(counts: &ComparisonCounts, opts: &MasterOptions) -> Result<SurrogateFit> {
    opts.validate()?;
    let n = counts.n();
    let edges = signed_edges(counts);
    let base_step = opts.surrogate_step.unwrap_or_else(|| default_step(counts));
    let ridge = opts.surrogate_ridge;

    let mut beta = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let mut cand = vec![0.0; n];
    let mut value = surrogate_objective(&edges, &beta, ridge);
    let mut trace = Vec::with_capacity(opts.surrogate_iters);
    let mut step = base_step;

    for _ in 0..opts.surrogate_iters {
        surrogate_gradient(&edges, &beta, ridge, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NumericFailure("non-finite surrogate gradient".into()));
        }
        if grad.iter().all(|&g| g == 0.0) {
            trace.push(value);
            continue;
        }
        let mut accepted = false;
        for _ in 0..60 {
            for ((c, b), g) in cand.iter_mut().zip(&beta).zip(&grad) {
                *c = b + step * g;
            }
            center(&mut cand);
            let v = surrogate_objective(&edges, &cand, ridge);
            if !v.is_finite() {
                return Err(Error::NumericFailure("non-finite surrogate objective".into()));
            }
            if v >= value {
                std::mem::swap(&mut beta, &mut cand);
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        trace.push(value);
        if !accepted {
            break;
        }
        step = (step * 1.25).min(base_step);
    }

    let ranking = match opts.tie_break {
        TieBreak::LowerIndexFirst => Ranking::from_scores(&beta),
    };
    Ok(SurrogateFit {
        scores: beta,
        ranking,
        objective_trace: trace,
    })
}

/// All permutations of `0..k` in lexicographic order.
fn lex_permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..k).collect();
    loop {
        out.push(p.clone());
        // next_permutation
        let Some(i) = (1..k).rev().find(|&i| p[i - 1] < p[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| p[j] > p[i - 1]).expect("pivot exists");
        p.swap(i - 1, j);
        p[i..].reverse();
    }
    out
}

/// Local search over consecutive rank segments of length `k`.
///
/// With `t` running from `k` to `n`, the players holding ranks
/// `t-k+1..=t` are tried in every order. The best strictly improving order
/// (first in lexicographic order on ties) is applied and the scan restarts at
/// `t = k`; otherwise `t` advances. Only pairs inside the segment change
/// relative order, so each candidate is scored in `O(k²)`.
pub fn ktuple_search(counts: &ComparisonCounts, init: &Ranking, k: usize) -> Result<MasterResult> {
    check_dims(init, counts)?;
    let n = counts.n();
    if !(2..=MAX_K).contains(&k) || k > n {
        return Err(Error::OutOfRange(format!(
            "k = {k} must satisfy 2 <= k <= min(n = {n}, {MAX_K})"
        )));
    }
    let init_objective = score(init, counts)?;
    let perms = lex_permutations(k);
    // order[p] holds the player with rank p + 1.
    let mut order = init.ascending();
    let mut objective = init_objective;
    let mut sweeps = 0;
    let mut trace = vec![objective];
    // above[x][y]: objective contribution when segment member x sits above y.
    let mut above = [[0i64; MAX_K]; MAX_K];
    let mut members = [0usize; MAX_K];

    let mut t = k;
    while t <= n {
        let lo = t - k;
        members[..k].copy_from_slice(&order[lo..t]);
        for x in 0..k {
            for y in 0..k {
                let (a, b) = (members[x], members[y]);
                above[x][y] = if x != y && a < b { counts.margin(a, b) } else { 0 };
            }
        }
        let value = |perm: &[usize]| -> i64 {
            let mut v = 0;
            for s in 1..k {
                for r in 0..s {
                    v += above[perm[s]][perm[r]];
                }
            }
            v
        };
        let current = value(&perms[0]);
        let mut best: Option<(i64, usize)> = None;
        for (idx, perm) in perms.iter().enumerate().skip(1) {
            let v = value(perm);
            if v > current && best.is_none_or(|(bv, _)| v > bv) {
                best = Some((v, idx));
            }
        }
        match best {
            Some((v, idx)) => {
                for (s, &from) in perms[idx].iter().enumerate() {
                    order[lo + s] = members[from];
                }
                objective += v - current;
                sweeps += 1;
                trace.push(objective);
                t = k;
            }
            None => t += 1,
        }
    }

    let ranking = Ranking::from_ascending(&order);
    debug_assert_eq!(score(&ranking, counts).ok(), Some(objective));
    Ok(MasterResult {
        ranking,
        objective,
        init_ranking: init.clone(),
        init_objective,
        sweeps,
        trace,
    })
}

/// Surrogate initialization followed by the segment search.
///
/// The segment length is capped at the number of players, so very small
/// inputs are searched exhaustively.
pub fn master_rank(counts: &ComparisonCounts, opts: &MasterOptions) -> Result<MasterResult> {
    opts.validate()?;
    let fit = surrogate_init(counts, opts)?;
    let k = opts.k.min(counts.n());
    if k < 2 {
        let objective = score(&fit.ranking, counts)?;
        return Ok(MasterResult {
            ranking: fit.ranking.clone(),
            objective,
            init_ranking: fit.ranking,
            init_objective: objective,
            sweeps: 0,
            trace: vec![objective],
        });
    }
    ktuple_search(counts, &fit.ranking, k)
}

/// Whether `candidate` scores at least as well as `truth`, and by how much.
pub fn certify(candidate: &Ranking, truth: &Ranking, counts: &ComparisonCounts) -> Result<(bool, i64)> {
    let margin = score(candidate, counts)? - score(truth, counts)?;
    Ok((margin >= 0, margin))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_player(y12: u32, y21: u32) -> ComparisonCounts {
        ComparisonCounts::from_wins(vec![vec![0, y12], vec![y21, 0]], None).unwrap()
    }

    #[test]
    fn score_single_pair() {
        let c = two_player(3, 2);
        assert_eq!(score(&Ranking::new(vec![2, 1]).unwrap(), &c).unwrap(), 1);
        assert_eq!(score(&Ranking::new(vec![1, 2]).unwrap(), &c).unwrap(), 0);
    }

    #[test]
    fn score_empty_data_is_zero() {
        let c = ComparisonCounts::empty(4);
        for r in [vec![1, 2, 3, 4], vec![4, 3, 2, 1], vec![2, 4, 1, 3]] {
            assert_eq!(score(&Ranking::new(r).unwrap(), &c).unwrap(), 0);
        }
    }

    #[test]
    fn score_dimension_mismatch() {
        let c = ComparisonCounts::empty(3);
        assert!(matches!(
            score(&Ranking::identity(2), &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lex_permutation_order() {
        let p = lex_permutations(3);
        assert_eq!(
            p,
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(lex_permutations(5).len(), 120);
    }

    #[test]
    fn surrogate_follows_dominance() {
        let fit = surrogate_init(&two_player(0, 5), &MasterOptions::default()).unwrap();
        assert!(fit.scores[1] > fit.scores[0]);
        assert_eq!(fit.ranking.ranks(), &[1, 2]);
    }

    #[test]
    fn surrogate_balanced_data_stays_at_zero() {
        let c = ComparisonCounts::from_wins(
            vec![vec![0, 2, 1], vec![2, 0, 3], vec![1, 3, 0]],
            None,
        )
        .unwrap();
        let fit = surrogate_init(&c, &MasterOptions::default()).unwrap();
        assert!(fit.scores.iter().all(|&b| b == 0.0));
        assert_eq!(fit.ranking, Ranking::identity(3));
    }

    #[test]
    fn surrogate_objective_never_decreases() {
        let c = ComparisonCounts::from_wins(
            vec![
                vec![0, 3, 0, 1],
                vec![1, 0, 4, 0],
                vec![2, 0, 0, 2],
                vec![3, 1, 1, 0],
            ],
            None,
        )
        .unwrap();
        let opts = MasterOptions {
            surrogate_step: Some(5.0),
            ..MasterOptions::default()
        };
        let fit = surrogate_init(&c, &opts).unwrap();
        assert!(fit.objective_trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn ktuple_zero_counts_keeps_init() {
        let c = ComparisonCounts::empty(5);
        let init = Ranking::new(vec![3, 1, 5, 2, 4]).unwrap();
        let res = ktuple_search(&c, &init, 3).unwrap();
        assert_eq!(res.ranking, init);
        assert_eq!(res.sweeps, 0);
        assert_eq!(res.objective, 0);
    }

    #[test]
    fn ktuple_rejects_bad_k() {
        let c = ComparisonCounts::empty(4);
        let init = Ranking::identity(4);
        assert!(ktuple_search(&c, &init, 1).is_err());
        assert!(ktuple_search(&c, &init, 5).is_err());
        let big = ComparisonCounts::empty(10);
        assert!(ktuple_search(&big, &Ranking::identity(10), 9).is_err());
    }

    #[test]
    fn master_two_players() {
        let res = master_rank(&two_player(0, 5), &MasterOptions::default()).unwrap();
        assert_eq!(res.ranking.ranks(), &[1, 2]);
        assert_eq!(res.objective, 0);
        // Player 2 beats player 1 five times: the objective counts it when 1 is on top.
        let res = master_rank(&two_player(5, 0), &MasterOptions::default()).unwrap();
        assert_eq!(res.ranking.ranks(), &[2, 1]);
        assert_eq!(res.objective, 5);
    }

    #[test]
    fn master_options_validation() {
        let c = two_player(1, 0);
        for bad in [
            MasterOptions::default().with_k(1),
            MasterOptions::default().with_k(9),
            MasterOptions {
                surrogate_step: Some(0.0),
                ..MasterOptions::default()
            },
            MasterOptions {
                surrogate_iters: 0,
                ..MasterOptions::default()
            },
            MasterOptions {
                surrogate_ridge: -1.0,
                ..MasterOptions::default()
            },
        ] {
            assert!(matches!(master_rank(&c, &bad), Err(Error::InvalidConfig(_))));
        }
    }

    #[test]
    fn certify_identity_and_empty() {
        let c = two_player(2, 1);
        let r = Ranking::new(vec![2, 1]).unwrap();
        assert_eq!(certify(&r, &r, &c).unwrap(), (true, 0));
        let e = ComparisonCounts::empty(3);
        let a = Ranking::new(vec![3, 1, 2]).unwrap();
        assert_eq!(certify(&a, &Ranking::identity(3), &e).unwrap(), (true, 0));
    }

    #[test]
    fn result_json_fields() {
        let res = master_rank(&two_player(5, 0), &MasterOptions::default()).unwrap();
        let v: serde_json::Value = serde_json::to_value(&res).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["init_objective", "objective", "ranking", "sweeps"]);
    }
}
