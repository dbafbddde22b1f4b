//! Sequencer toolkit for L2 rollups: the optimal posting policy under a
//! mean-reverting L1 gas price, the budget-balance and congestion fees, and
//! an adaptive controller that learns them online.

pub mod config;
pub mod controller;
pub mod cost;
pub mod error;
pub mod fees;
pub mod io;
pub mod mdp;
pub mod process;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
