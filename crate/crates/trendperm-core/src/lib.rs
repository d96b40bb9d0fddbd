//! Rank-based tests for monotone trend in time series.
//!
//! The building blocks:
//!
//! - [`series`]: validated tie-free series and their rank vectors; the global
//!   and local Mann-Kendall sign statistics (both are functions of ranks only).
//! - [`variance`]: truncated-autocovariance estimators of the long-run variance
//!   of the scaled statistics, used for studentization.
//! - [`perm`]: sampled and exactly enumerated permutation null distributions,
//!   and p-values against them.
//! - [`testing`]: the five decision procedures (studentized / unstudentized
//!   permutation tests of the global and local statistics, and the classical
//!   Mann-Kendall test that assumes independence).
//! - [`generators`]: seeded, exactly stationary process generators for
//!   simulation studies.
//! - [`power`]: closed-form limiting power under local drift alternatives and
//!   exact small-sample permutation moments.
//!
//! Everything here is deterministic given its seed arguments. The crate is
//! `no_std`-compatible (with `alloc`); disable default features to drop `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod float;

pub mod error;
pub mod generators;
pub mod normal;
pub mod perm;
pub mod power;
pub mod seeding;
pub mod series;
pub mod statistic;
pub mod testing;
pub mod variance;

pub use error::{Error, Result};
pub use perm::{NullMode, PValue, PermutationDistribution, Side};
pub use power::PowerPrediction;
pub use series::{LocalIncrements, TiePolicy, TimeSeries};
pub use statistic::Statistic;
pub use testing::{Method, TestReport};
pub use variance::VarianceEstimate;
