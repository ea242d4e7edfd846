//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use wstrank::{ComparisonCounts, Ranking};

/// Objective straight from its definition, over unordered pairs.
pub fn oracle_score(ranks: &[usize], c: &ComparisonCounts) -> i64 {
    let n = ranks.len();
    let mut total = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            if ranks[i] > ranks[j] {
                let y = i64::from(c.wins(i, j));
                let m = i64::from(c.pairs(i, j));
                total += 2 * y - m;
            }
        }
    }
    total
}

/// Every permutation of `1..=n`.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v + 1);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Exhaustive maximum of the objective and the first permutation attaining it.
pub fn brute_max(c: &ComparisonCounts) -> (i64, Vec<usize>) {
    let mut best: Option<(i64, Vec<usize>)> = None;
    for p in all_permutations(c.n()) {
        let v = oracle_score(&p, c);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    best.expect("n >= 1")
}

/// Discordant pairs by direct comparison of every pair.
pub fn brute_tau(a: &Ranking, b: &Ranking) -> u64 {
    let n = a.len();
    let mut count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if (a.rank(i) > a.rank(j)) != (b.rank(i) > b.rank(j)) {
                count += 1;
            }
        }
    }
    count
}

/// Pearson correlation of the rank vectors.
pub fn pearson(a: &Ranking, b: &Ranking) -> f64 {
    let n = a.len() as f64;
    let xs: Vec<f64> = a.ranks().iter().map(|&r| r as f64).collect();
    let ys: Vec<f64> = b.ranks().iter().map(|&r| r as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Bradley-Terry log-likelihood written out from the model probabilities.
pub fn oracle_loglik(c: &ComparisonCounts, b: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..c.n() {
        for j in 0..c.n() {
            if i != j {
                let p = b[i].exp() / (b[i].exp() + b[j].exp());
                total += f64::from(c.wins(i, j)) * p.ln();
            }
        }
    }
    total
}

/// Golden-section maximization of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while hi - lo > 1e-13 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    (lo + hi) / 2.0
}

/// Bradley-Terry maximum by cyclic coordinate ascent with `β_0 = 0`, centered at the end.
pub fn oracle_bt(c: &ComparisonCounts) -> Vec<f64> {
    let n = c.n();
    let mut b = vec![0.0; n];
    for _ in 0..400 {
        for coord in 1..n {
            b[coord] = golden_max(
                |v| {
                    let mut t = b.clone();
                    t[coord] = v;
                    oracle_loglik(c, &t)
                },
                -20.0,
                20.0,
            );
        }
    }
    let mean = b.iter().sum::<f64>() / n as f64;
    b.iter().map(|v| v - mean).collect()
}
