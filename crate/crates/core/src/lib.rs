//! Equilibrium computation and rule design for multilateral bargaining with
//! a contested proposer seat.
//!
//! A fixed surplus is divided by sequential bargaining under a k-majority
//! rule; the proposer each period is selected by a biased lottery contest
//! over costly efforts. This crate solves the stationary equilibria of such
//! games, verifies them against the full condition system, cross-checks them
//! with independent oracles (deviation grids, damped fixed-point iteration,
//! Monte Carlo simulation of the protocol), and searches over the designer's
//! instruments: the voting threshold `k`, multiplicative biases `alpha`, and
//! additive headstarts `beta`.

pub mod builtin;
pub mod design;
pub mod model;
pub mod oracle;
pub mod report;
pub mod roots;
pub mod scenario;
pub mod solver;

pub use model::{
    AgentSpec, Equilibrium, Fun, FunctionSpec, GameSpec, ModelError, ObjectiveSpec, PricePosition,
};
pub use solver::{
    solve_game, solve_game_all, verify_equilibrium, ResidualReport, RootSelection, SolveError,
    Solver, SolverConfig,
};
