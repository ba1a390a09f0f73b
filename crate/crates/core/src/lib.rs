//! Cooperative sharing of electricity storage under a two-period
//! time-of-use tariff.
//!
//! Consumers face a peak price and a cheaper off-peak price. Storage lets
//! them buy off-peak energy and consume it during the peak window, at the
//! cost of amortized capital. Pooling storage is cheaper than operating it
//! separately, and this crate computes how much cheaper and how to split
//! the savings so that no subgroup would rather leave:
//!
//! * sizing of storage capacity by the quantile rule (the arbitrage
//!   constant is the critical fractile of the peak-demand distribution),
//! * realized and expected daily cost functions for arbitrary coalitions,
//! * two closed-form cost allocations that lie in the core of the
//!   corresponding cooperative games, plus realized proportional splits,
//! * an exhaustive verification harness that checks subadditivity, core
//!   membership, and budget balance on concrete instances,
//! * a data pipeline for interval-meter CSV ingestion and correlated
//!   synthetic generation, and report emission for the CLI.
//!
//! Prices and energies are fixed-point (4 decimal digits); money is exact
//! rational arithmetic. Every budget-balance identity in the library holds
//! exactly, not within a float tolerance.

pub mod allocation;
pub mod coalition;
pub mod cost;
pub mod dist;
pub mod error;
pub mod game;
pub mod pipeline;
pub mod planner;
pub mod report;
pub mod run;
pub mod tariff;
pub mod units;

pub use coalition::Coalition;
pub use error::{Error, Result};
pub use tariff::Tariff;
pub use units::{Energy, Frac, Money, Price};
