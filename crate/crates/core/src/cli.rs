//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage, 3 data or model precondition, 4 numeric failure.

use std::collections::{BTreeSet, HashMap};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{borda_rank, bt_fit, usvt_rank, BtOptions, UsvtOptions};
use crate::data::{
    filter_players, load_matches, read_match_csv, write_match_csv, ComparisonCounts, FilterPolicy, Ranking,
};
use crate::error::Error;
use crate::master::{master_rank, MasterOptions, MasterResult};
use crate::metrics::{kendall_correlation, kendall_tau, spearman_rho};
use crate::sim::{gen_match_records, run_study_with, LatentSpread, Method, Scenario, SimConfig, StudyOptions, StudyResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "wstrank", version, about = "Rank aggregation from pairwise comparisons")]
pub struct Cli {
    /// Base random seed.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub format: OutputFormat,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the replicated simulation study.
    Simulate(SimulateArgs),
    /// Rank players from a match file.
    Rank(RankArgs),
    /// Correlate two rankings and show head-to-head records.
    Compare(CompareArgs),
    /// Write a synthetic match CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// One or more of uniform, two_group, bt_latent.
    #[arg(long, value_delimiter = ',', required = true)]
    pub scenario: Vec<Scenario>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Maximum games per pair.
    #[arg(long, default_value_t = 5)]
    pub t: u64,
    #[arg(long, default_value_t = 0.3)]
    pub xi_low: f64,
    #[arg(long, default_value_t = 0.5)]
    pub xi_high: f64,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "counting,bt,usvt,master")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Whether the bt_latent scenario's N(0, 2) has variance 2 or standard deviation 2.
    #[arg(long, default_value = "variance")]
    pub latent_spread: LatentSpread,
    /// Fill the `secs` column with measured wall time (makes output non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Match CSV (`winner,loser`) or counts JSON.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "master")]
    pub method: Method,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "none")]
    pub filter: FilterPolicy,
    /// Only print the best `top` players.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, conflicts_with = "rankings")]
    pub input: Option<PathBuf>,
    /// Two ranking files written by `rank` (csv or json).
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub rankings: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "bt,master")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value = "none")]
    pub filter: FilterPolicy,
    /// Head-to-head record for a pair `A,B`; repeatable.
    #[arg(long)]
    pub h2h: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value = "uniform")]
    pub scenario: Scenario,
    #[arg(long)]
    pub n: usize,
    /// Probability that a pair meets at least once.
    #[arg(long)]
    pub density: f64,
    #[arg(long, default_value_t = 5)]
    pub t: u64,
}

/// Error with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidConfig(_) | Error::OutOfRange(_) => EXIT_USAGE,
            Error::NumericFailure(_) | Error::NonConvergence { .. } => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        Error::from(e).into()
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::usage("--threads must be >= 1"));
        }
        #[cfg(feature = "parallel")]
        {
            // Fails only if a global pool already exists, in which case it is kept.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
    let text = match &cli.command {
        Command::Simulate(args) => cmd_simulate(cli, args)?,
        Command::Rank(args) => cmd_rank(cli, args)?,
        Command::Compare(args) => cmd_compare(cli, args)?,
        Command::Synth(args) => cmd_synth(cli, args)?,
    };
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> crate::Result<()>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| CliError::data(e.to_string()))
}

fn json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

pub fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<String, CliError> {
    let opts = StudyOptions {
        master: MasterOptions::default().with_k(args.k),
        ..StudyOptions::default()
    };
    let mut results = Vec::new();
    for &scenario in &args.scenario {
        for &n in &args.n {
            let config = SimConfig {
                t_max: args.t,
                xi_low: args.xi_low,
                xi_high: args.xi_high,
                replicates: args.reps,
                seed: cli.seed,
                latent_spread: args.latent_spread,
                ..SimConfig::new(scenario, n)
            };
            let res = run_study_with(&config, &args.methods, &opts)?;
            results.push(if args.timings { res } else { res.without_timings() });
        }
    }
    match cli.format {
        OutputFormat::Json => json_string(&results),
        OutputFormat::Csv => csv_string(|buf| {
            for (i, r) in results.iter().enumerate() {
                r.write_csv(&mut *buf, i == 0)?;
            }
            Ok(())
        }),
        OutputFormat::Table => Ok(study_table(&results)),
    }
}

fn study_table(results: &[StudyResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:>5}  {:<9} {:>16} {:>16} {:>6} {:>5}",
        "scenario", "n", "method", "err_pairs x100", "err_paper x100", "cert", "fail"
    );
    for r in results {
        for m in &r.methods {
            let cert = m.cert_rate.map(|c| format!("{c:.2}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<10} {:>5}  {:<9} {:>16} {:>16} {:>6} {:>5}",
                r.scenario.to_string(),
                r.n,
                m.method.to_string(),
                format!("{:.2} ({:.2})", 100.0 * m.mean_error_pairs, 100.0 * m.se_pairs),
                format!("{:.2} ({:.2})", 100.0 * m.mean_error_paper, 100.0 * m.se_paper),
                cert,
                m.failures
            );
        }
    }
    s
}

/// Reads a match CSV, or counts JSON when the extension is `.json`.
pub fn read_counts(path: &Path) -> Result<ComparisonCounts, CliError> {
    let file = File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let counts = if is_json {
        ComparisonCounts::from_json_reader(reader)?
    } else {
        load_matches(&read_match_csv(reader)?)?
    };
    Ok(counts)
}

/// A fitted ranking with a per-player score.
#[derive(Debug, Clone)]
pub struct MethodRanking {
    pub method: Method,
    pub ranking: Ranking,
    pub scores: Vec<f64>,
    pub master: Option<MasterResult>,
}

pub fn rank_with(counts: &ComparisonCounts, method: Method, k: usize) -> Result<MethodRanking, Error> {
    Ok(match method {
        Method::Counting => {
            let fit = borda_rank(counts);
            MethodRanking {
                method,
                ranking: fit.ranking,
                scores: fit.scores,
                master: None,
            }
        }
        Method::Bt => {
            let fit = bt_fit(counts, &BtOptions::default())?;
            MethodRanking {
                method,
                ranking: fit.ranking,
                scores: fit.beta,
                master: None,
            }
        }
        Method::Usvt => {
            let fit = usvt_rank(counts, &UsvtOptions::default())?;
            MethodRanking {
                method,
                ranking: fit.ranking,
                scores: fit.row_sums,
                master: None,
            }
        }
        Method::Master => {
            let res = master_rank(counts, &MasterOptions::default().with_k(k))?;
            MethodRanking {
                method,
                scores: res.ranking.ranks().iter().map(|&r| r as f64).collect(),
                ranking: res.ranking.clone(),
                master: Some(res),
            }
        }
    })
}

/// One line of a ranking artifact; `rank` 1 is the best player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPlayer {
    pub rank: usize,
    pub player: String,
    #[serde(default)]
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankingArtifact {
    pub method: Method,
    pub filter: FilterPolicy,
    pub players: Vec<RankedPlayer>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub objective: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub init_objective: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sweeps: Option<usize>,
}

fn bt_hint(e: Error) -> CliError {
    let hint = matches!(e, Error::NotStronglyConnected { .. });
    let mut err = CliError::from(e);
    if hint {
        err.message.push_str(" (hint: pass --filter bt-connected)");
    }
    err
}

pub fn cmd_rank(cli: &Cli, args: &RankArgs) -> Result<String, CliError> {
    let counts = read_counts(&args.input)?;
    let (counts, _) = filter_players(&counts, args.filter)?;
    let fit = rank_with(&counts, args.method, args.k).map_err(bt_hint)?;
    let order = fit.ranking.best_first();
    let take = args.top.unwrap_or(order.len()).min(order.len());
    let players: Vec<RankedPlayer> = order[..take]
        .iter()
        .enumerate()
        .map(|(pos, &i)| RankedPlayer {
            rank: pos + 1,
            player: counts.label(i),
            score: fit.scores[i],
        })
        .collect();
    let artifact = RankingArtifact {
        method: args.method,
        filter: args.filter,
        players,
        objective: fit.master.as_ref().map(|m| m.objective),
        init_objective: fit.master.as_ref().map(|m| m.init_objective),
        sweeps: fit.master.as_ref().map(|m| m.sweeps),
    };
    match cli.format {
        OutputFormat::Json => json_string(&artifact),
        OutputFormat::Csv => {
            if let Some(m) = &fit.master {
                eprintln!(
                    "objective {} (initial {}), {} improving permutations",
                    m.objective, m.init_objective, m.sweeps
                );
            }
            csv_string(|buf| {
                let mut w = csv::Writer::from_writer(buf);
                for p in &artifact.players {
                    w.serialize(p)?;
                }
                w.flush()?;
                Ok(())
            })
        }
        OutputFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "method {} on {} players (filter {})",
                args.method,
                counts.n(),
                args.filter
            );
            if let Some(m) = &fit.master {
                let _ = writeln!(
                    s,
                    "objective {}  initial {}  improving permutations {}",
                    m.objective, m.init_objective, m.sweeps
                );
            }
            let width = artifact.players.iter().map(|p| p.player.len()).max().unwrap_or(6).max(6);
            let _ = writeln!(s, "{:>5}  {:<width$}  {:>12}", "rank", "player", "score");
            for p in &artifact.players {
                let _ = writeln!(s, "{:>5}  {:<width$}  {:>12.6}", p.rank, p.player, p.score);
            }
            Ok(s)
        }
    }
}

/// Best-first player labels from a ranking artifact file.
pub fn read_ranking_artifact(path: &Path) -> Result<Vec<String>, CliError> {
    let file = File::open(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut players: Vec<RankedPlayer> = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let art: RankingArtifact = serde_json::from_reader(reader).map_err(Error::from)?;
        art.players
    } else {
        let mut rdr = csv::Reader::from_reader(reader);
        rdr.deserialize()
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::from(Error::from(e)))?
    };
    players.sort_by_key(|p| p.rank);
    Ok(players.into_iter().map(|p| p.player).collect())
}

/// Rankings over a common player set from two best-first label lists.
pub fn align(a: &[String], b: &[String]) -> Result<(Ranking, Ranking), CliError> {
    let sa: BTreeSet<&String> = a.iter().collect();
    let sb: BTreeSet<&String> = b.iter().collect();
    if sa.len() != a.len() || sb.len() != b.len() {
        return Err(CliError::data("ranking lists a player twice"));
    }
    if sa != sb {
        let diff: Vec<&str> = sa.symmetric_difference(&sb).map(|s| s.as_str()).collect();
        return Err(CliError::data(format!(
            "rankings cover different players; symmetric difference: {}",
            diff.join(", ")
        )));
    }
    let n = a.len();
    let index: HashMap<&String, usize> = a.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let ra: Vec<usize> = (0..n).map(|pos| n - pos).collect();
    let mut rb = vec![0; n];
    for (pos, p) in b.iter().enumerate() {
        rb[index[p]] = n - pos;
    }
    Ok((Ranking::new(ra)?, Ranking::new(rb)?))
}

#[derive(Debug, Serialize)]
struct HeadToHead {
    a: String,
    b: String,
    a_wins: u32,
    b_wins: u32,
}

#[derive(Debug, Serialize)]
struct Comparison {
    left: String,
    right: String,
    n: usize,
    kendall_distance: u64,
    kendall_tau: f64,
    spearman_rho: f64,
    h2h: Vec<HeadToHead>,
}

pub fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<String, CliError> {
    let mut counts_for_h2h = None;
    let (left, right, a, b) = if let Some(input) = &args.input {
        if args.methods.len() != 2 {
            return Err(CliError::usage("--methods needs exactly two methods"));
        }
        let counts = read_counts(input)?;
        let (counts, _) = filter_players(&counts, args.filter)?;
        let fa = rank_with(&counts, args.methods[0], args.k).map_err(bt_hint)?;
        let fb = rank_with(&counts, args.methods[1], args.k).map_err(bt_hint)?;
        let labels = |r: &Ranking| -> Vec<String> { r.best_first().into_iter().map(|i| counts.label(i)).collect() };
        let out = (
            args.methods[0].to_string(),
            args.methods[1].to_string(),
            labels(&fa.ranking),
            labels(&fb.ranking),
        );
        counts_for_h2h = Some(counts);
        out
    } else {
        if args.rankings.len() != 2 {
            return Err(CliError::usage("pass --input with --methods, or --rankings a,b"));
        }
        (
            args.rankings[0].display().to_string(),
            args.rankings[1].display().to_string(),
            read_ranking_artifact(&args.rankings[0])?,
            read_ranking_artifact(&args.rankings[1])?,
        )
    };
    let (ra, rb) = align(&a, &b)?;
    let mut h2h = Vec::new();
    if !args.h2h.is_empty() {
        let counts = counts_for_h2h
            .as_ref()
            .ok_or_else(|| CliError::usage("--h2h needs --input"))?;
        let index: HashMap<String, usize> = (0..counts.n()).map(|i| (counts.label(i), i)).collect();
        for pair in &args.h2h {
            let (pa, pb) = pair
                .split_once(',')
                .ok_or_else(|| CliError::usage(format!("--h2h expects A,B, got `{pair}`")))?;
            let find = |p: &str| {
                index
                    .get(p)
                    .copied()
                    .ok_or_else(|| CliError::data(format!("unknown player `{p}`")))
            };
            let (i, j) = (find(pa)?, find(pb)?);
            h2h.push(HeadToHead {
                a: pa.to_string(),
                b: pb.to_string(),
                a_wins: counts.wins(i, j),
                b_wins: counts.wins(j, i),
            });
        }
    }
    let cmp = Comparison {
        left,
        right,
        n: ra.len(),
        kendall_distance: kendall_tau(&ra, &rb)?,
        kendall_tau: kendall_correlation(&ra, &rb)?,
        spearman_rho: spearman_rho(&ra, &rb)?,
        h2h,
    };
    match cli.format {
        OutputFormat::Json => json_string(&cmp),
        OutputFormat::Csv => csv_string(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["left", "right", "n", "kendall_distance", "kendall_tau", "spearman_rho"])?;
            w.write_record([
                cmp.left.clone(),
                cmp.right.clone(),
                cmp.n.to_string(),
                cmp.kendall_distance.to_string(),
                cmp.kendall_tau.to_string(),
                cmp.spearman_rho.to_string(),
            ])?;
            for h in &cmp.h2h {
                w.write_record(["h2h", &h.a, &h.b, &h.a_wins.to_string(), &h.b_wins.to_string(), ""])?;
            }
            w.flush()?;
            Ok(())
        }),
        OutputFormat::Table => {
            let mut s = String::new();
            let _ = writeln!(s, "{} vs {} over {} players", cmp.left, cmp.right, cmp.n);
            let _ = writeln!(s, "kendall tau   {:.4}  (distance {})", cmp.kendall_tau, cmp.kendall_distance);
            let _ = writeln!(s, "spearman rho  {:.4}", cmp.spearman_rho);
            for h in &cmp.h2h {
                let _ = writeln!(s, "{} vs {}: {}:{}", h.a, h.b, h.a_wins, h.b_wins);
            }
            Ok(s)
        }
    }
}

pub fn cmd_synth(cli: &Cli, args: &SynthArgs) -> Result<String, CliError> {
    let config = SimConfig {
        t_max: args.t,
        seed: cli.seed,
        ..SimConfig::new(args.scenario, args.n)
    };
    let records = gen_match_records(&config, args.density)?;
    csv_string(|buf| write_match_csv(buf, &records))
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}
