//! Quantal response and Nash equilibria of the iterated Prisoner's Dilemma in
//! memory-one Markov strategies.
//!
//! * [`game`]: stage game, strategies, stationary cooperation and payoffs.
//! * [`nash`]: the symmetric totally mixed Nash locus, printed and re-derived.
//! * [`qre`]: logit equilibria, multi-start solver and rationality sweeps.
//! * [`sim`]: seeded Monte Carlo play and the frequency estimator.
//! * [`data`]: the bundled experiment table and boundary classification.

pub mod data;
pub mod error;
pub mod fmt;
pub mod game;
pub mod nash;
pub mod qre;
pub mod roots;
pub mod sim;

pub use error::{DataError, GameError, QreError, SimError};
pub use game::{
    dynamics_step, expected_payoff, stationary_state, MarkovStrategy, PayoffMatrix,
    StationaryState,
};
