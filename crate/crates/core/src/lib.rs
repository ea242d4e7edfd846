//! Rank aggregation from sparse pairwise comparisons under weak stochastic
//! transitivity.
//!
//! The central estimator ([`master::master_rank`]) maximizes the number of
//! observed games agreeing with a ranking, weighted by each pair's signed
//! margin. It is initialized from a logistic surrogate and refined by an
//! exhaustive search over consecutive rank segments. Borda counting,
//! Bradley-Terry and USVT baselines live in [`baselines`]; [`sim`] holds the
//! seeded simulation study and [`metrics`] the ranking distances.

pub mod baselines;
pub mod cli;
pub mod data;
pub mod error;
pub mod master;
pub mod metrics;
pub mod par;
pub mod sim;

pub use data::{
    check_wst, filter_players, load_matches, read_match_csv, skew_statistic, write_match_csv,
    ComparisonCounts, FilterPolicy, MatchRecord, ProbabilityMatrix, Ranking, WstReport,
};
pub use error::{Error, Result};
pub use master::{certify, ktuple_search, master_rank, score, surrogate_init, MasterOptions, MasterResult};
pub use par::Execution;
