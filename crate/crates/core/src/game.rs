//! The stage game, memory-one Markov strategies and their stationary play.
//!
//! A Markov strategy `(alpha, gamma)` fixes a player's cooperation probability
//! as a function of the opponent's previous move: `gamma` after the opponent
//! cooperated, `alpha` after the opponent defected. Two such strategies drive
//! a linear map on the pair of cooperation probabilities whose fixed point is
//! the [`StationaryState`].

use serde::{Deserialize, Serialize};

use crate::error::GameError;

/// `|1 - d1 * d2|` below this value is treated as a degenerate chain.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Payoffs of the 2x2 stage game, seen from the row player.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    /// Both cooperate.
    pub reward_cc: f64,
    /// Row cooperates, column defects.
    pub sucker_cd: f64,
    /// Row defects, column cooperates.
    pub temptation_dc: f64,
    /// Both defect.
    pub punishment_dd: f64,
}

impl Default for PayoffMatrix {
    /// The laboratory payoffs: `(5,5) / (0,10) / (10,0) / (1,1)`.
    fn default() -> Self {
        Self {
            reward_cc: 5.0,
            sucker_cd: 0.0,
            temptation_dc: 10.0,
            punishment_dd: 1.0,
        }
    }
}

impl PayoffMatrix {
    pub fn new(
        reward_cc: f64,
        sucker_cd: f64,
        temptation_dc: f64,
        punishment_dd: f64,
    ) -> Result<Self, GameError> {
        let m = Self {
            reward_cc,
            sucker_cd,
            temptation_dc,
            punishment_dd,
        };
        if [reward_cc, sucker_cd, temptation_dc, punishment_dd]
            .iter()
            .all(|v| v.is_finite())
        {
            Ok(m)
        } else {
            Err(GameError::NonFinitePayoff)
        }
    }

    /// `T > R > P > S`.
    pub fn is_prisoners_dilemma(&self) -> bool {
        self.temptation_dc > self.reward_cc
            && self.reward_cc > self.punishment_dd
            && self.punishment_dd > self.sucker_cd
    }

    /// Payoff of the row player for a single realized round.
    pub fn payoff(&self, row_cooperates: bool, col_cooperates: bool) -> f64 {
        match (row_cooperates, col_cooperates) {
            (true, true) => self.reward_cc,
            (true, false) => self.sucker_cd,
            (false, true) => self.temptation_dc,
            (false, false) => self.punishment_dd,
        }
    }
}

/// A memory-one strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovStrategy {
    alpha: f64,
    gamma: f64,
}

impl MarkovStrategy {
    /// `alpha`: cooperate after the opponent defected (forgiveness).
    /// `gamma`: cooperate after the opponent cooperated (mutual cooperation).
    pub fn new(alpha: f64, gamma: f64) -> Result<Self, GameError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(GameError::ProbabilityOutOfRange {
                name: "alpha",
                value: alpha,
            });
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(GameError::ProbabilityOutOfRange {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self { alpha, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `alpha - gamma`; the slope of the response map is `gamma - alpha`.
    pub(crate) fn drift(&self) -> f64 {
        self.alpha - self.gamma
    }

    /// Cooperation probability given the opponent's previous cooperation probability.
    pub fn respond(&self, opponent_prev: f64) -> f64 {
        self.gamma * opponent_prev + self.alpha * (1.0 - opponent_prev)
    }
}

/// Stationary cooperation probabilities of the two players.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryState {
    pub p1: f64,
    pub p2: f64,
}

/// One step of the coupled cooperation dynamics.
pub fn dynamics_step(
    s1: &MarkovStrategy,
    s2: &MarkovStrategy,
    p1_prev: f64,
    p2_prev: f64,
) -> (f64, f64) {
    (s1.respond(p2_prev), s2.respond(p1_prev))
}

/// Closed-form fixed point of [`dynamics_step`].
pub fn stationary_state(
    s1: &MarkovStrategy,
    s2: &MarkovStrategy,
) -> Result<StationaryState, GameError> {
    let (a1, a2) = (s1.alpha, s2.alpha);
    let (d1, d2) = (s1.drift(), s2.drift());
    let denom = 1.0 - d1 * d2;
    if denom.abs() < DEGENERACY_THRESHOLD {
        return Err(GameError::DegenerateChain {
            denominator: denom,
        });
    }
    Ok(StationaryState {
        p1: (a1 - a2 * d1) / denom,
        p2: (a2 - a1 * d2) / denom,
    })
}

/// Expected per-round payoff of player 1 when the players cooperate
/// independently with probabilities `p1` and `p2`.
pub fn expected_payoff(matrix: &PayoffMatrix, p1: f64, p2: f64) -> f64 {
    matrix.reward_cc * p1 * p2
        + matrix.sucker_cd * p1 * (1.0 - p2)
        + matrix.temptation_dc * (1.0 - p1) * p2
        + matrix.punishment_dd * (1.0 - p1) * (1.0 - p2)
}

/// Partial derivatives of [`expected_payoff`] in `p1` and `p2`.
pub(crate) fn expected_payoff_gradient(matrix: &PayoffMatrix, p1: f64, p2: f64) -> (f64, f64) {
    let m = matrix;
    let d_p1 = m.reward_cc * p2 + m.sucker_cd * (1.0 - p2)
        - m.temptation_dc * p2
        - m.punishment_dd * (1.0 - p2);
    let d_p2 = m.reward_cc * p1 - m.sucker_cd * p1 + m.temptation_dc * (1.0 - p1)
        - m.punishment_dd * (1.0 - p1);
    (d_p1, d_p2)
}
