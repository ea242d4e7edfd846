//! Pairwise comparison data: counts, rankings, probability matrices,
//! match-record ingestion and player filtering.

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Observed games between `n` players.
///
/// Only the win matrix is stored; `pairs(i, j)` is derived as
/// `wins(i, j) + wins(j, i)` so the symmetry invariants hold by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparisonCounts {
    n: usize,
    wins: Vec<u32>,
    labels: Option<Vec<String>>,
}

impl ComparisonCounts {
    /// Builds counts from a win matrix, `wins[i][j]` = games `i` won against `j`.
    pub fn from_wins(wins: Vec<Vec<u32>>, labels: Option<Vec<String>>) -> Result<Self> {
        let n = wins.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in wins.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if row[i] != 0 {
                return Err(Error::InvalidCounts(format!("win_counts[{i}][{i}] must be 0")));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n, flat, labels)
    }

    /// Builds counts from both matrices, checking that they agree.
    pub fn from_matrices(
        pair_counts: Vec<Vec<u32>>,
        win_counts: Vec<Vec<u32>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = win_counts.len();
        if pair_counts.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: pair_counts.len(),
            });
        }
        for (i, row) in pair_counts.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            if row[i] != 0 {
                return Err(Error::InvalidCounts(format!("pair_counts[{i}][{i}] must be 0")));
            }
        }
        let counts = Self::from_wins(win_counts, labels)?;
        for (i, row) in pair_counts.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if i != j && m != counts.pairs(i, j) {
                    return Err(Error::InvalidCounts(format!(
                        "pair_counts[{i}][{j}] = {m} but win counts sum to {}",
                        counts.pairs(i, j)
                    )));
                }
            }
        }
        Ok(counts)
    }

    pub(crate) fn from_flat(n: usize, wins: Vec<u32>, labels: Option<Vec<String>>) -> Result<Self> {
        debug_assert_eq!(wins.len(), n * n);
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.len(),
                });
            }
        }
        for i in 0..n {
            if wins[i * n + i] != 0 {
                return Err(Error::InvalidCounts(format!("win_counts[{i}][{i}] must be 0")));
            }
            for j in (i + 1)..n {
                if wins[i * n + j].checked_add(wins[j * n + i]).is_none() {
                    return Err(Error::InvalidCounts(format!("pair count overflow at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, wins, labels })
    }

    /// Counts with no games at all.
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            wins: vec![0; n * n],
            labels: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `y_ij`: number of games `i` won against `j`.
    #[inline]
    pub fn wins(&self, i: usize, j: usize) -> u32 {
        self.wins[i * self.n + j]
    }

    /// `n_ij`: number of games between `i` and `j`.
    #[inline]
    pub fn pairs(&self, i: usize, j: usize) -> u32 {
        self.wins(i, j) + self.wins(j, i)
    }

    /// `2 y_ij - n_ij`, the signed margin of `i` over `j`.
    #[inline]
    pub fn margin(&self, i: usize, j: usize) -> i64 {
        i64::from(self.wins(i, j)) - i64::from(self.wins(j, i))
    }

    pub fn total_wins(&self, i: usize) -> u64 {
        (0..self.n).map(|j| u64::from(self.wins(i, j))).sum()
    }

    pub fn total_games(&self) -> u64 {
        self.wins.iter().map(|&w| u64::from(w)).sum()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Label of player `i`, falling back to its 1-based index.
    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => (i + 1).to_string(),
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn pair_matrix(&self) -> Vec<Vec<u32>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.pairs(i, j)).collect())
            .collect()
    }

    pub fn win_matrix(&self) -> Vec<Vec<u32>> {
        self.wins.chunks(self.n.max(1)).take(self.n).map(<[u32]>::to_vec).collect()
    }

    /// Fraction of unordered pairs that met at least once.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let observed = self.observed_pairs();
        observed as f64 / (self.n * (self.n - 1) / 2) as f64
    }

    pub fn observed_pairs(&self) -> usize {
        let mut observed = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.pairs(i, j) > 0 {
                    observed += 1;
                }
            }
        }
        observed
    }

    /// Counts restricted to `keep` (in that order), labels carried over.
    pub fn subset(&self, keep: &[usize]) -> Self {
        let m = keep.len();
        let mut wins = vec![0; m * m];
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate() {
                wins[a * m + b] = self.wins(i, j);
            }
        }
        let labels = Some(keep.iter().map(|&i| self.label(i)).collect());
        Self { n: m, wins, labels }
    }

    /// Counts with players relabeled: new player `a` is old player `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut out = self.subset(perm);
        if self.labels.is_none() {
            out.labels = None;
        }
        out
    }

    /// One record per game, row-major over `(winner, loser)`.
    pub fn to_records(&self) -> Vec<MatchRecord> {
        let mut out = Vec::with_capacity(self.total_games() as usize);
        for i in 0..self.n {
            for j in 0..self.n {
                for _ in 0..self.wins(i, j) {
                    out.push(MatchRecord::new(self.label(i), self.label(j)));
                }
            }
        }
        out
    }

    /// Edge `i -> j` iff `y_ij > 0`.
    pub(crate) fn win_graph(&self) -> DiGraph<usize, ()> {
        let mut g = DiGraph::with_capacity(self.n, 0);
        let nodes: Vec<_> = (0..self.n).map(|i| g.add_node(i)).collect();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.wins(i, j) > 0 {
                    g.add_edge(nodes[i], nodes[j], ());
                }
            }
        }
        g
    }

    /// Strongly connected components of the win graph.
    pub fn strong_components(&self) -> Vec<Vec<usize>> {
        let g = self.win_graph();
        tarjan_scc(&g)
            .into_iter()
            .map(|comp| {
                let mut c: Vec<usize> = comp.into_iter().map(|v| g[v]).collect();
                c.sort_unstable();
                c
            })
            .collect()
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.n > 0 && self.strong_components().len() == 1
    }

    pub fn to_json_writer<W: Write>(&self, w: W) -> Result<()> {
        let file = CountsFile {
            labels: Some((0..self.n).map(|i| self.label(i)).collect()),
            pair_counts: self.pair_matrix(),
            win_counts: self.win_matrix(),
        };
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        let file: CountsFile = serde_json::from_reader(r)?;
        Self::from_matrices(file.pair_counts, file.win_counts, file.labels)
    }
}

/// On-disk counts representation.
#[derive(Debug, Serialize, Deserialize)]
struct CountsFile {
    #[serde(default)]
    labels: Option<Vec<String>>,
    pair_counts: Vec<Vec<u32>>,
    win_counts: Vec<Vec<u32>>,
}

/// A permutation of `1..=n`; higher rank means better player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Ranking(Vec<usize>);

impl Ranking {
    pub fn new(ranks: Vec<usize>) -> Result<Self> {
        let n = ranks.len();
        let mut seen = vec![false; n];
        for &r in &ranks {
            if r == 0 || r > n || seen[r - 1] {
                return Err(Error::InvalidRanking(format!(
                    "{ranks:?} is not a permutation of 1..={n}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self(ranks))
    }

    /// `π_i = i`, i.e. higher index is better.
    pub fn identity(n: usize) -> Self {
        Self((1..=n).collect())
    }

    /// Rank of scores in increasing order; equal scores go to the lower index first.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
        Self::from_ascending(&order)
    }

    /// `order[p]` is the player holding rank `p + 1` (worst first).
    pub fn from_ascending(order: &[usize]) -> Self {
        let mut ranks = vec![0; order.len()];
        for (p, &player) in order.iter().enumerate() {
            ranks[player] = p + 1;
        }
        Self(ranks)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.0
    }

    #[inline]
    pub fn rank(&self, player: usize) -> usize {
        self.0[player]
    }

    /// Players ordered from rank 1 up to rank n.
    pub fn ascending(&self) -> Vec<usize> {
        let mut order = vec![0; self.0.len()];
        for (player, &r) in self.0.iter().enumerate() {
            order[r - 1] = player;
        }
        order
    }

    /// Players ordered best first.
    pub fn best_first(&self) -> Vec<usize> {
        let mut order = self.ascending();
        order.reverse();
        order
    }

    /// `π_i ↦ n + 1 - π_i`.
    pub fn reversed(&self) -> Self {
        let n = self.0.len();
        Self(self.0.iter().map(|&r| n + 1 - r).collect())
    }

    /// Ranking of relabeled players: new player `a` is old player `perm[a]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self(perm.iter().map(|&p| self.0[p]).collect())
    }
}

impl TryFrom<Vec<usize>> for Ranking {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Ranking> for Vec<usize> {
    fn from(r: Ranking) -> Self {
        r.0
    }
}

/// Pairwise winning probabilities, `p_ij + p_ji = 1`, diagonal 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    n: usize,
    probs: Vec<f64>,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl ProbabilityMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut probs = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            probs.extend_from_slice(row);
        }
        for i in 0..n {
            probs[i * n + i] = 0.5;
            for j in 0..n {
                let p = probs[i * n + j];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidProbabilities(format!("p[{i}][{j}] = {p} outside [0, 1]")));
                }
                if i < j && (p + probs[j * n + i] - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvalidProbabilities(format!(
                        "p[{i}][{j}] + p[{j}][{i}] != 1"
                    )));
                }
            }
        }
        Ok(Self { n, probs })
    }

    /// Builds the matrix from `upper(i, j)` = `p_ij` for `i < j`.
    pub fn from_upper(n: usize, mut upper: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut probs = vec![0.5; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let p = upper(i, j);
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidProbabilities(format!("p[{i}][{j}] = {p} outside [0, 1]")));
                }
                probs[i * n + j] = p;
                probs[j * n + i] = 1.0 - p;
            }
        }
        Ok(Self { n, probs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    /// Sets `p_ij = p` and `p_ji = 1 - p`.
    pub fn set(&mut self, i: usize, j: usize, p: f64) -> Result<()> {
        if i == j || !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbabilities(format!("cannot set p[{i}][{j}] = {p}")));
        }
        self.probs[i * self.n + j] = p;
        self.probs[j * self.n + i] = 1.0 - p;
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.n.max(1)).take(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).sum())
            .collect()
    }
}

/// One game: `winner` beat `loser`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MatchRecord {
    pub winner: String,
    pub loser: String,
}

impl MatchRecord {
    pub fn new(winner: impl Into<String>, loser: impl Into<String>) -> Self {
        Self {
            winner: winner.into(),
            loser: loser.into(),
        }
    }
}

/// Aggregates match records into counts. Players are indexed in order of
/// first appearance; rows in errors are 1-based.
pub fn load_matches(records: &[MatchRecord]) -> Result<ComparisonCounts> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no match records".into()));
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut games: Vec<(usize, usize)> = Vec::with_capacity(records.len());
    for (row, rec) in records.iter().enumerate() {
        let row = row + 1;
        if rec.winner.is_empty() || rec.loser.is_empty() {
            return Err(Error::MalformedRecord {
                row,
                reason: "empty player identifier".into(),
            });
        }
        if rec.winner == rec.loser {
            return Err(Error::MalformedRecord {
                row,
                reason: format!("player {:?} cannot play itself", rec.winner),
            });
        }
        let next = index.len();
        let w = *index.entry(rec.winner.as_str()).or_insert(next);
        let next = index.len();
        let l = *index.entry(rec.loser.as_str()).or_insert(next);
        games.push((w, l));
    }
    let mut labels = vec![String::new(); index.len()];
    for (name, &i) in &index {
        labels[i] = (*name).to_string();
    }
    let n = labels.len();
    let mut wins = vec![0u32; n * n];
    for (w, l) in games {
        wins[w * n + l] = wins[w * n + l]
            .checked_add(1)
            .ok_or_else(|| Error::InvalidCounts("win count overflow".into()))?;
    }
    ComparisonCounts::from_flat(n, wins, Some(labels))
}

/// Reads a `winner,loser` CSV with a header row.
pub fn read_match_csv<R: Read>(r: R) -> Result<Vec<MatchRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let headers = reader.headers()?.clone();
    let header: Vec<&str> = headers.iter().map(str::trim).collect();
    if header != ["winner", "loser"] {
        return Err(Error::MalformedRecord {
            row: 0,
            reason: format!("expected header `winner,loser`, found `{}`", header.join(",")),
        });
    }
    let mut out = Vec::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::MalformedRecord {
            row: row + 1,
            reason: e.to_string(),
        })?;
        if rec.len() != 2 {
            return Err(Error::MalformedRecord {
                row: row + 1,
                reason: format!("expected 2 fields, found {}", rec.len()),
            });
        }
        out.push(MatchRecord::new(rec[0].trim(), rec[1].trim()));
    }
    Ok(out)
}

pub fn write_match_csv<W: Write>(w: W, records: &[MatchRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(w);
    writer.write_record(["winner", "loser"])?;
    for rec in records {
        writer.write_record([&rec.winner, &rec.loser])?;
    }
    writer.flush()?;
    Ok(())
}

/// Which players to keep before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FilterPolicy {
    #[default]
    None,
    /// Drop players without a single win (one pass).
    NoWins,
    /// `NoWins`, then keep the largest strongly connected component of the win graph.
    BtConnected,
}

impl FromStr for FilterPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "no-wins" => Ok(Self::NoWins),
            "bt-connected" => Ok(Self::BtConnected),
            other => Err(Error::InvalidConfig(format!(
                "unknown filter policy `{other}` (expected none, no-wins or bt-connected)"
            ))),
        }
    }
}

impl fmt::Display for FilterPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::NoWins => "no-wins",
            Self::BtConnected => "bt-connected",
        })
    }
}

/// Applies `policy`, returning the reduced counts and a map from new to original indices.
pub fn filter_players(
    counts: &ComparisonCounts,
    policy: FilterPolicy,
) -> Result<(ComparisonCounts, Vec<usize>)> {
    let keep: Vec<usize> = match policy {
        FilterPolicy::None => (0..counts.n()).collect(),
        FilterPolicy::NoWins => no_wins_keep(counts),
        FilterPolicy::BtConnected => {
            let first = no_wins_keep(counts);
            let reduced = counts.subset(&first);
            let largest = reduced
                .strong_components()
                .into_iter()
                .filter(|c| c.len() >= 2)
                // Largest size wins; ties go to the component holding the smallest index.
                .max_by(|a, b| a.len().cmp(&b.len()).then(b[0].cmp(&a[0])));
            match largest {
                Some(comp) => comp.into_iter().map(|i| first[i]).collect(),
                None => Vec::new(),
            }
        }
    };
    if keep.is_empty() {
        return Err(Error::EmptyResult);
    }
    Ok((counts.subset(&keep), keep))
}

fn no_wins_keep(counts: &ComparisonCounts) -> Vec<usize> {
    (0..counts.n()).filter(|&i| counts.total_wins(i) > 0).collect()
}

/// Outcome of a weak stochastic transitivity check.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WstReport {
    /// Ordered triples `(i, j, k)` with `p_ij ≥ 0.5`, `p_jk ≥ 0.5` and `p_ik < 0.5 - tol`.
    pub violations: Vec<(usize, usize, usize)>,
    /// Pairs `i < j` with `|p_ij - 0.5| ≤ tol`.
    pub ties: Vec<(usize, usize)>,
}

impl WstReport {
    /// True iff WST holds and implies a unique ranking.
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty() && self.ties.is_empty()
    }
}

/// Brute-force scan over all ordered triples.
pub fn check_wst(p: &ProbabilityMatrix, tol: f64) -> Result<WstReport> {
    if tol.is_nan() || tol < 0.0 {
        return Err(Error::OutOfRange(format!("tolerance {tol} must be >= 0")));
    }
    let n = p.n();
    let per_i = par::map_range(n, |i| {
        let mut v = Vec::new();
        for j in 0..n {
            if j == i || p.get(i, j) < 0.5 {
                continue;
            }
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                if p.get(j, k) >= 0.5 && p.get(i, k) < 0.5 - tol {
                    v.push((i, j, k));
                }
            }
        }
        v
    });
    let violations = per_i.into_iter().flatten().collect();
    let mut ties = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if (p.get(i, j) - 0.5).abs() <= tol {
                ties.push((i, j));
            }
        }
    }
    Ok(WstReport { violations, ties })
}

/// `x_ij = 2 y_ij / n_ij - 1`, or 0 for unobserved pairs.
pub fn skew_statistic(counts: &ComparisonCounts) -> DMatrix<f64> {
    let n = counts.n();
    let mut x = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let games = counts.pairs(i, j);
            if games > 0 {
                let v = 2.0 * f64::from(counts.wins(i, j)) / f64::from(games) - 1.0;
                x[(i, j)] = v;
                x[(j, i)] = -v;
            }
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(w: &str, l: &str) -> MatchRecord {
        MatchRecord::new(w, l)
    }

    #[test]
    fn load_counts_simple() {
        let c = load_matches(&[rec("A", "B"), rec("B", "A"), rec("A", "B")]).unwrap();
        assert_eq!(c.n(), 2);
        assert_eq!(c.pairs(0, 1), 3);
        assert_eq!(c.pairs(1, 0), 3);
        assert_eq!(c.wins(0, 1), 2);
        assert_eq!(c.wins(1, 0), 1);
        assert_eq!(c.labels().unwrap(), ["A", "B"]);
    }

    #[test]
    fn load_rejects_empty_and_self_play() {
        assert!(matches!(load_matches(&[]), Err(Error::EmptyInput(_))));
        let err = load_matches(&[rec("A", "B"), rec("C", "C")]).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { row: 2, .. }), "{err}");
        assert!(matches!(
            load_matches(&[rec("", "B")]),
            Err(Error::MalformedRecord { row: 1, .. })
        ));
    }

    #[test]
    fn first_appearance_order() {
        let c = load_matches(&[rec("z", "y"), rec("a", "z"), rec("y", "a")]).unwrap();
        assert_eq!(c.labels().unwrap(), ["z", "y", "a"]);
    }

    #[test]
    fn csv_quoted_identifiers() {
        let text = "winner,loser\n\"Federer, R.\",\"Nadal, R.\"\n\"Nadal, R.\",\"Federer, R.\"\n";
        let recs = read_match_csv(text.as_bytes()).unwrap();
        assert_eq!(recs[0], rec("Federer, R.", "Nadal, R."));
        let mut buf = Vec::new();
        write_match_csv(&mut buf, &recs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn csv_bad_header() {
        assert!(read_match_csv("a,b\nx,y\n".as_bytes()).is_err());
    }

    #[test]
    fn counts_json_round_trip() {
        let c = load_matches(&[rec("A", "B"), rec("B", "C"), rec("C", "A")]).unwrap();
        let mut buf = Vec::new();
        c.to_json_writer(&mut buf).unwrap();
        let back = ComparisonCounts::from_json_reader(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn counts_json_rejects_inconsistent_pairs() {
        let text = r#"{"labels":["a","b"],"pair_counts":[[0,2],[2,0]],"win_counts":[[0,1],[0,0]]}"#;
        assert!(ComparisonCounts::from_json_reader(text.as_bytes()).is_err());
        let text = r#"{"pair_counts":[[0,1],[1,0]],"win_counts":[[0,1],[0,0]]}"#;
        let c = ComparisonCounts::from_json_reader(text.as_bytes()).unwrap();
        assert_eq!(c.label(1), "2");
    }

    #[test]
    fn filter_removes_winless() {
        // 0 and 1 split games, 2 loses everything.
        let c = ComparisonCounts::from_wins(vec![vec![0, 1, 2], vec![1, 0, 1], vec![0, 0, 0]], None).unwrap();
        let (out, map) = filter_players(&c, FilterPolicy::NoWins).unwrap();
        assert_eq!(out.n(), 2);
        assert_eq!(map, vec![0, 1]);
        assert_eq!(out.wins(0, 1), 1);
    }

    #[test]
    fn filter_fixed_point_on_cycle() {
        let c = ComparisonCounts::from_wins(vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 0]], None).unwrap();
        for policy in [FilterPolicy::NoWins, FilterPolicy::BtConnected] {
            let (out, map) = filter_players(&c, policy).unwrap();
            assert_eq!(map, vec![0, 1, 2]);
            assert_eq!(out.win_matrix(), c.win_matrix());
        }
    }

    #[test]
    fn filter_everything_removed() {
        let c = ComparisonCounts::empty(3);
        assert!(matches!(filter_players(&c, FilterPolicy::NoWins), Err(Error::EmptyResult)));
        // A strict chain has no cycle, hence no component with two players.
        let chain = ComparisonCounts::from_wins(vec![vec![0, 1, 0], vec![0, 0, 1], vec![0, 0, 0]], None).unwrap();
        assert!(matches!(
            filter_players(&chain, FilterPolicy::BtConnected),
            Err(Error::EmptyResult)
        ));
    }

    #[test]
    fn no_wins_is_a_single_pass() {
        // b's only win is over c; one pass removes only c.
        let recs = [rec("a", "b"), rec("b", "c"), rec("a", "c"), rec("b", "a")];
        let c = load_matches(&recs).unwrap();
        let chain = load_matches(&[rec("a", "b"), rec("b", "c")]).unwrap();
        let (once, _) = filter_players(&chain, FilterPolicy::NoWins).unwrap();
        assert_eq!(once.labels().unwrap(), ["a", "b"]);
        let (twice, _) = filter_players(&once, FilterPolicy::NoWins).unwrap();
        assert_eq!(twice.labels().unwrap(), ["a"]);
        let (kept, _) = filter_players(&c, FilterPolicy::NoWins).unwrap();
        assert_eq!(kept.n(), 2);
    }

    #[test]
    fn wst_paper_example_holds() {
        // Player 3 beats 2 w.p. 0.9, 2 beats 1 w.p. 0.9, 3 beats 1 only w.p. 0.6.
        let p = ProbabilityMatrix::from_upper(3, |i, j| match (i, j) {
            (0, 1) => 0.1,
            (1, 2) => 0.1,
            (0, 2) => 0.4,
            _ => unreachable!(),
        })
        .unwrap();
        assert!(check_wst(&p, 0.0).unwrap().is_empty());
    }

    #[test]
    fn wst_violation_reported() {
        let p = ProbabilityMatrix::from_upper(3, |i, j| match (i, j) {
            (0, 1) => 0.1,
            (1, 2) => 0.1,
            (0, 2) => 0.6,
            _ => unreachable!(),
        })
        .unwrap();
        let report = check_wst(&p, 0.0).unwrap();
        assert!(report.violations.contains(&(2, 1, 0)));
        assert!(report.ties.is_empty());
    }

    #[test]
    fn wst_ties_and_tolerance() {
        let p = ProbabilityMatrix::from_upper(2, |_, _| 0.5).unwrap();
        assert_eq!(check_wst(&p, 0.0).unwrap().ties, vec![(0, 1)]);
        let p = ProbabilityMatrix::from_upper(2, |_, _| 0.5 + 1e-12).unwrap();
        assert!(check_wst(&p, 0.0).unwrap().is_empty());
        assert_eq!(check_wst(&p, 1e-9).unwrap().ties.len(), 1);
        assert!(check_wst(&p, -1.0).is_err());
    }

    #[test]
    fn probability_matrix_validation() {
        assert!(ProbabilityMatrix::new(vec![vec![0.5, 0.7], vec![0.4, 0.5]]).is_err());
        assert!(ProbabilityMatrix::new(vec![vec![0.5, 1.2], vec![-0.2, 0.5]]).is_err());
        let p = ProbabilityMatrix::new(vec![vec![0.0, 0.7], vec![0.3, 0.0]]).unwrap();
        assert_eq!(p.get(0, 0), 0.5);
    }

    #[test]
    fn skew_examples() {
        let c = ComparisonCounts::from_wins(vec![vec![0, 3, 0], vec![2, 0, 0], vec![0, 0, 0]], None).unwrap();
        let x = skew_statistic(&c);
        assert!((x[(0, 1)] - 0.2).abs() < 1e-15);
        assert_eq!(x[(1, 0)], -x[(0, 1)]);
        assert_eq!(x[(0, 2)], 0.0);
        assert_eq!(x[(2, 2)], 0.0);
    }

    #[test]
    fn ranking_validation_and_scores() {
        assert!(Ranking::new(vec![1, 1]).is_err());
        assert!(Ranking::new(vec![0, 1]).is_err());
        let r = Ranking::from_scores(&[0.3, -1.0, 0.3, 2.0]);
        assert_eq!(r.ranks(), &[2, 1, 3, 4]);
        assert_eq!(r.best_first(), vec![3, 2, 0, 1]);
        assert_eq!(r.reversed().ranks(), &[3, 4, 2, 1]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, "[2,1,3,4]");
        assert!(serde_json::from_str::<Ranking>("[1,3]").is_err());
    }
}
