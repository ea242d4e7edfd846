//! Seeded simulation study.
//!
//! Player `i` (0-based) has true rank `i + 1`, so higher indices are
//! stronger. Every replicate draws from its own ChaCha stream seeded with
//! [`replicate_seed`]`(seed, r)`; results therefore do not depend on the
//! order or thread in which replicates run.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::baselines::{borda_rank_with, bt_fit, usvt_rank, BordaScore, BtOptions, UsvtOptions};
use crate::data::{ComparisonCounts, MatchRecord, ProbabilityMatrix, Ranking};
use crate::error::{Error, Result};
use crate::master::{certify, master_rank, MasterOptions};
use crate::metrics::{error_rate, kendall_tau, modified_tau, pair_count, q_sequence, ErrorConvention};
use crate::par::{self, Execution};

/// How the true winning probabilities are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `p*_ji ~ U(0.5, 1)` for `i < j`.
    Uniform,
    /// Two halves; `p*_ji ~ U(0.75, 0.85)` within a half and `U(0.65, 0.75)` across.
    TwoGroup,
    /// Bradley-Terry with sorted normal latent scores.
    BtLatent,
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "1" => Ok(Self::Uniform),
            "two_group" | "2" => Ok(Self::TwoGroup),
            "bt_latent" | "3" => Ok(Self::BtLatent),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario `{other}` (expected uniform, two_group or bt_latent)"
            ))),
        }
    }
}

impl FromStr for LatentSpread {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(Self::Variance),
            "std-dev" | "sd" => Ok(Self::StdDev),
            other => Err(Error::InvalidConfig(format!(
                "unknown latent spread `{other}` (expected variance or std-dev)"
            ))),
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::TwoGroup => "two_group",
            Self::BtLatent => "bt_latent",
        })
    }
}

/// Reading of the second parameter of the latent normal in [`Scenario::BtLatent`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatentSpread {
    /// `N(0, 2)` has variance 2.
    #[default]
    Variance,
    /// `N(0, 2)` has standard deviation 2.
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub n: usize,
    /// Maximum number of games per pair.
    pub t_max: u64,
    /// Bounds of the per-pair meeting probability.
    pub xi_low: f64,
    pub xi_high: f64,
    pub replicates: usize,
    pub seed: u64,
    pub latent_spread: LatentSpread,
}

impl SimConfig {
    pub fn new(scenario: Scenario, n: usize) -> Self {
        Self {
            scenario,
            n,
            t_max: 5,
            xi_low: 0.3,
            xi_high: 0.5,
            replicates: 100,
            seed: 0,
            latent_spread: LatentSpread::Variance,
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n = {} must be >= 2", self.n)));
        }
        if self.scenario == Scenario::TwoGroup && self.n % 2 == 1 {
            return Err(Error::InvalidConfig(format!(
                "two_group scenario needs an even number of players, got n = {}",
                self.n
            )));
        }
        if !(0.0 <= self.xi_low && self.xi_low <= self.xi_high && self.xi_high <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= xi_low <= xi_high <= 1, got [{}, {}]",
                self.xi_low, self.xi_high
            )));
        }
        if self.t_max > u64::from(u32::MAX) {
            return Err(Error::InvalidConfig("t_max too large".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of replicate `r`: `splitmix64(seed ^ (r · 0x9E3779B97F4A7C15))`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    splitmix64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn replicate_rng(seed: u64, r: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(replicate_seed(seed, r))
}

fn uniform(lo: f64, hi: f64) -> Uniform<f64> {
    Uniform::new_inclusive(lo, hi).expect("valid bounds")
}

/// True probabilities and ranking (`π*_i = i`).
pub fn gen_probabilities<R: Rng + ?Sized>(
    config: &SimConfig,
    rng: &mut R,
) -> Result<(ProbabilityMatrix, Ranking)> {
    config.validate()?;
    let n = config.n;
    let p = match config.scenario {
        Scenario::Uniform => {
            let u = uniform(0.5, 1.0);
            ProbabilityMatrix::from_upper(n, |_, _| 1.0 - u.sample(rng))?
        }
        Scenario::TwoGroup => {
            let half = n / 2;
            let same = uniform(0.75, 0.85);
            let cross = uniform(0.65, 0.75);
            ProbabilityMatrix::from_upper(n, |i, j| {
                let better = if (i < half) == (j < half) {
                    same.sample(rng)
                } else {
                    cross.sample(rng)
                };
                1.0 - better
            })?
        }
        Scenario::BtLatent => {
            let sd = match config.latent_spread {
                LatentSpread::Variance => 2f64.sqrt(),
                LatentSpread::StdDev => 2.0,
            };
            let normal = Normal::new(0.0, sd).expect("finite sd");
            let mut x: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
            x.sort_by(f64::total_cmp);
            ProbabilityMatrix::from_upper(n, |i, j| 1.0 / (1.0 + (x[j] - x[i]).exp()))?
        }
    };
    Ok((p, Ranking::identity(n)))
}

/// Samples `n_ij ~ Bin(T, ξ_ij)` with `ξ_ij ~ U(xi_low, xi_high)`, then `y_ij ~ Bin(n_ij, p_ij)`.
pub fn gen_counts<R: Rng + ?Sized>(
    p_star: &ProbabilityMatrix,
    config: &SimConfig,
    rng: &mut R,
) -> Result<ComparisonCounts> {
    config.validate()?;
    let n = p_star.n();
    let xi = uniform(config.xi_low, config.xi_high);
    let mut wins = vec![0u32; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let meet = xi.sample(rng);
            let games = Binomial::new(config.t_max, meet)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
                .sample(rng);
            let won = Binomial::new(games, p_star.get(i, j))
                .map_err(|e| Error::InvalidProbabilities(e.to_string()))?
                .sample(rng);
            wins[i * n + j] = won as u32;
            wins[j * n + i] = (games - won) as u32;
        }
    }
    ComparisonCounts::from_flat(n, wins, None)
}

/// Sparse match records in the style of a season of professional results.
///
/// Each pair meets with probability `density`; a meeting produces
/// `1 + Bin(t_max - 1, 0.25)` games decided by the scenario's probabilities.
/// Labels are `P0001`.. assigned in random order, and records are shuffled.
pub fn gen_match_records(config: &SimConfig, density: f64) -> Result<Vec<MatchRecord>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidConfig(format!("density {density} outside [0, 1]")));
    }
    let mut rng = replicate_rng(config.seed, 0);
    let (p, _) = gen_probabilities(config, &mut rng)?;
    let n = config.n;
    let width = n.to_string().len().max(4);
    let mut labels: Vec<String> = (1..=n).map(|i| format!("P{i:0width$}")).collect();
    labels.shuffle(&mut rng);
    let extra = Binomial::new(config.t_max.saturating_sub(1), 0.25)
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut records = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if !rng.random_bool(density) {
                continue;
            }
            let games = 1 + extra.sample(&mut rng);
            for _ in 0..games {
                if rng.random_bool(p.get(i, j)) {
                    records.push(MatchRecord::new(labels[i].clone(), labels[j].clone()));
                } else {
                    records.push(MatchRecord::new(labels[j].clone(), labels[i].clone()));
                }
            }
        }
    }
    records.shuffle(&mut rng);
    Ok(records)
}

/// Estimators compared in the study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Counting,
    Bt,
    Usvt,
    Master,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Counting, Method::Bt, Method::Usvt, Method::Master];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "counting" | "borda" => Ok(Self::Counting),
            "bt" => Ok(Self::Bt),
            "usvt" => Ok(Self::Usvt),
            "master" => Ok(Self::Master),
            other => Err(Error::InvalidConfig(format!(
                "unknown method `{other}` (expected counting, bt, usvt or master)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Counting => "counting",
            Self::Bt => "bt",
            Self::Usvt => "usvt",
            Self::Master => "master",
        })
    }
}

/// Estimator settings shared by every replicate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyOptions {
    pub master: MasterOptions,
    pub bt: BtOptions,
    pub usvt: UsvtOptions,
    pub borda: BordaScore,
    pub execution: Execution,
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodOutcome {
    pub method: Method,
    /// `None` when the estimator failed on this replicate.
    pub tau: Option<u64>,
    pub modified_tau: Option<f64>,
    /// `L(π̂) ≥ L(π*)`, recorded for the maximum-score estimator.
    pub certified: Option<bool>,
    pub secs: f64,
}

/// Runs `methods` on a single dataset with known truth.
pub fn evaluate_replicate(
    p_star: &ProbabilityMatrix,
    truth: &Ranking,
    counts: &ComparisonCounts,
    methods: &[Method],
    opts: &StudyOptions,
) -> Result<Vec<MethodOutcome>> {
    let q = q_sequence(p_star).ok();
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let start = Instant::now();
        let mut certified = None;
        let ranking = match method {
            Method::Counting => Some(borda_rank_with(counts, opts.borda).ranking),
            Method::Bt => bt_fit(counts, &opts.bt).ok().map(|fit| fit.ranking),
            Method::Usvt => usvt_rank(counts, &opts.usvt).ok().map(|fit| fit.ranking),
            Method::Master => {
                let res = master_rank(counts, &opts.master)?;
                certified = Some(certify(&res.ranking, truth, counts)?.0);
                Some(res.ranking)
            }
        };
        let secs = start.elapsed().as_secs_f64();
        let (tau, modified) = match &ranking {
            Some(r) => (
                Some(kendall_tau(r, truth)?),
                q.as_ref().map(|q| modified_tau(r, truth, q)).transpose()?,
            ),
            None => (None, None),
        };
        out.push(MethodOutcome {
            method,
            tau,
            modified_tau: modified,
            certified,
            secs,
        });
    }
    Ok(out)
}

/// Aggregated statistics of one method over the replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub replicates_used: usize,
    pub failures: usize,
    pub mean_error_pairs: f64,
    pub se_pairs: f64,
    pub mean_error_paper: f64,
    pub se_paper: f64,
    /// Fraction of replicates with `L(π̂) ≥ L(π*)`; maximum-score estimator only.
    pub cert_rate: Option<f64>,
    /// Mean of `τ_m / (n (n - 1) / 2)`.
    pub mean_modified_tau_frac: Option<f64>,
    /// Total wall time spent in this method.
    pub secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub scenario: Scenario,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
}

impl StudyResult {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }

    /// Copy with every timing zeroed, for reproducible output.
    pub fn without_timings(&self) -> Self {
        let mut out = self.clone();
        out.methods.iter_mut().for_each(|m| m.secs = 0.0);
        out
    }

    pub const CSV_HEADER: [&'static str; 9] = [
        "scenario",
        "n",
        "method",
        "mean_error_pairs",
        "se_pairs",
        "mean_error_paper",
        "se_paper",
        "cert_rate",
        "secs",
    ];

    /// Rows of the study table; pass `header = false` to append to an existing table.
    pub fn write_csv<W: Write>(&self, w: W, header: bool) -> Result<()> {
        let mut writer = csv::Writer::from_writer(w);
        if header {
            writer.write_record(Self::CSV_HEADER)?;
        }
        for m in &self.methods {
            writer.write_record([
                self.scenario.to_string(),
                self.n.to_string(),
                m.method.to_string(),
                m.mean_error_pairs.to_string(),
                m.se_pairs.to_string(),
                m.mean_error_paper.to_string(),
                m.se_paper.to_string(),
                m.cert_rate.map(|c| c.to_string()).unwrap_or_default(),
                format!("{:.3}", m.secs),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Mean and standard error of the mean (sample sd / sqrt(m)).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}

fn dedup_methods(methods: &[Method]) -> Vec<Method> {
    let mut out: Vec<Method> = Vec::new();
    for &m in methods {
        if !out.contains(&m) {
            out.push(m);
        }
    }
    out
}

/// Replicated study with default estimator settings apart from `master_opts`.
pub fn run_study(config: &SimConfig, methods: &[Method], master_opts: &MasterOptions) -> Result<StudyResult> {
    let opts = StudyOptions {
        master: master_opts.clone(),
        ..StudyOptions::default()
    };
    run_study_with(config, methods, &opts)
}

pub fn run_study_with(config: &SimConfig, methods: &[Method], opts: &StudyOptions) -> Result<StudyResult> {
    config.validate()?;
    if config.replicates < 2 {
        return Err(Error::InvalidConfig("a study needs at least two replicates".into()));
    }
    let methods = dedup_methods(methods);
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no methods selected".into()));
    }
    opts.master.validate()?;

    let outcomes = par::map_range_with(opts.execution, config.replicates, |r| {
        let mut rng = replicate_rng(config.seed, r);
        let (p, truth) = gen_probabilities(config, &mut rng)?;
        let counts = gen_counts(&p, config, &mut rng)?;
        evaluate_replicate(&p, &truth, &counts, &methods, opts)
    });
    let outcomes: Vec<Vec<MethodOutcome>> = outcomes.into_iter().collect::<Result<_>>()?;

    let n = config.n;
    let pairs = pair_count(n) as f64;
    let mut summaries = Vec::with_capacity(methods.len());
    for (idx, &method) in methods.iter().enumerate() {
        let per_rep: Vec<&MethodOutcome> = outcomes.iter().map(|o| &o[idx]).collect();
        let taus: Vec<u64> = per_rep.iter().filter_map(|o| o.tau).collect();
        let pairs_err: Vec<f64> = taus
            .iter()
            .map(|&t| error_rate(t, n, ErrorConvention::Pairs))
            .collect::<Result<_>>()?;
        let paper_err: Vec<f64> = taus
            .iter()
            .map(|&t| error_rate(t, n, ErrorConvention::Paper))
            .collect::<Result<_>>()?;
        let (mean_error_pairs, se_pairs) = mean_se(&pairs_err);
        let (mean_error_paper, se_paper) = mean_se(&paper_err);
        let certs: Vec<bool> = per_rep.iter().filter_map(|o| o.certified).collect();
        let cert_rate = (!certs.is_empty())
            .then(|| certs.iter().filter(|&&c| c).count() as f64 / certs.len() as f64);
        let tm: Vec<f64> = per_rep.iter().filter_map(|o| o.modified_tau).map(|t| t / pairs).collect();
        let mean_modified_tau_frac = (!tm.is_empty()).then(|| tm.iter().sum::<f64>() / tm.len() as f64);
        summaries.push(MethodSummary {
            method,
            replicates_used: taus.len(),
            failures: config.replicates - taus.len(),
            mean_error_pairs,
            se_pairs,
            mean_error_paper,
            se_paper,
            cert_rate,
            mean_modified_tau_frac,
            secs: per_rep.iter().map(|o| o.secs).sum(),
        });
    }
    Ok(StudyResult {
        scenario: config.scenario,
        n,
        replicates: config.replicates,
        seed: config.seed,
        methods: summaries,
    })
}
