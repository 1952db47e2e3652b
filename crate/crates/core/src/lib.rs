//! Rolling-horizon jamming and recovery games on multiagent consensus
//! networks.
//!
//! An attacker jams edges of a consensus network, strongly (unrecoverable)
//! or normally (recoverable by a defender), under linear energy budgets.
//! Every `T` steps both players solve an `h`-step zero-sum game by backward
//! induction and apply its first `T` steps.

pub mod analysis;
pub mod config;
pub mod dynamics;
pub mod energy;
pub mod engine;
pub mod game;
pub mod graph;
pub mod sweep;
