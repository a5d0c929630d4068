//! Backtesting and RL-environment engine for quantitative trading research.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod envs;
pub mod factors;
pub mod ingest;
pub mod metrics;
pub mod rewards;
pub mod runner;
pub mod strategies;
pub mod types;
