//! Two-agent strategic intersection game.
//!
//! Two vehicles report passing times to an intersection manager that
//! schedules them first-come-first-serve. The crate computes the pure Nash
//! equilibria of that reporting game (by brute force and by closed form),
//! socially optimal allocations and the socially optimal equilibrium, and
//! runs the direct mechanism that reports on the agents' behalf, checking it
//! for profitable misreports.
//!
//! All times are exact integers in half time-units ([`GridTime`]); all costs
//! and probabilities are exact rationals unless a non-integer cost exponent
//! is requested.

pub mod cli;
pub mod equilibrium;
mod error;
pub mod fcfs;
pub mod mechanism;
pub mod payoff;
mod rational;
pub mod report;
pub mod social;
pub mod time;

pub use error::{Error, Result};
pub use fcfs::{
    fcfs_allocate, is_feasible, lottery_is_feasible, Agent, AgentProfile, Allocation,
    AllocationLottery, Lottery, ReportPair, Scenario,
};
pub use payoff::{CostModel, CostValue};
pub use rational::{format_rational, Rational};
pub use time::{GridTime, TimeGrid};
