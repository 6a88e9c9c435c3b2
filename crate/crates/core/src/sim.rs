//! Seeded Monte Carlo play between Markov strategies.
//!
//! Randomness comes from ChaCha8 keyed by the 64-bit seed. Each player draws
//! from its own stream of that key (stream `i` for player `i`), and random
//! re-pairing in group play uses [`PAIRING_STREAM`], so adding a player never
//! changes the draws of the others.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::fmt::sig12;
use crate::game::{MarkovStrategy, PayoffMatrix};

pub const GENERATOR: &str = "ChaCha8Rng";
/// Stream used for pairing permutations in group play.
pub const PAIRING_STREAM: u64 = u64::MAX;
/// Rounds dropped before comparing long-run rates with the stationary state.
pub const DEFAULT_BURN_IN: usize = 1000;
/// Session size in the laboratory protocol.
pub const DEFAULT_GROUP_SIZE: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    rounds: usize,
    seed: u64,
    initial_coop_prob: [f64; 2],
}

impl SimulationConfig {
    /// First-round cooperation probabilities default to `(0.5, 0.5)`.
    pub fn new(rounds: usize, seed: u64) -> Result<Self, SimError> {
        Self::with_initial(rounds, seed, [0.5, 0.5])
    }

    pub fn with_initial(rounds: usize, seed: u64, initial: [f64; 2]) -> Result<Self, SimError> {
        if rounds == 0 {
            return Err(SimError::ZeroRounds);
        }
        for (name, p) in [("initial_coop_prob_1", initial[0]), ("initial_coop_prob_2", initial[1])] {
            if !(0.0..=1.0).contains(&p) {
                return Err(crate::error::GameError::ProbabilityOutOfRange { name, value: p }.into());
            }
        }
        Ok(Self {
            rounds,
            seed,
            initial_coop_prob: initial,
        })
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn initial_coop_prob(&self) -> [f64; 2] {
        self.initial_coop_prob
    }
}

fn player_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, p: f64) -> bool {
    rng.gen::<f64>() < p
}

fn next_move(s: &MarkovStrategy, opponent_cooperated: bool, rng: &mut ChaCha8Rng) -> bool {
    draw(rng, if opponent_cooperated { s.gamma() } else { s.alpha() })
}

/// Realized play of a two-player match; `true` is cooperation.
#[derive(Clone, Debug, PartialEq)]
pub struct GameLog {
    pub strategies: [MarkovStrategy; 2],
    pub config: SimulationConfig,
    pub choices: Vec<[bool; 2]>,
}

/// Play `config.rounds()` rounds of the repeated game.
pub fn simulate(s1: &MarkovStrategy, s2: &MarkovStrategy, config: &SimulationConfig) -> GameLog {
    let mut rngs = [player_rng(config.seed, 0), player_rng(config.seed, 1)];
    let mut choices = Vec::with_capacity(config.rounds);
    let init = config.initial_coop_prob;
    let mut prev = [draw(&mut rngs[0], init[0]), draw(&mut rngs[1], init[1])];
    choices.push(prev);
    for _ in 1..config.rounds {
        prev = [
            next_move(s1, prev[1], &mut rngs[0]),
            next_move(s2, prev[0], &mut rngs[1]),
        ];
        choices.push(prev);
    }
    GameLog {
        strategies: [*s1, *s2],
        config: *config,
        choices,
    }
}

impl GameLog {
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Own and opponent moves of one player.
    pub fn history(&self, player: usize) -> (Vec<bool>, Vec<bool>) {
        let own = self.choices.iter().map(|c| c[player]).collect();
        let opp = self.choices.iter().map(|c| c[1 - player]).collect();
        (own, opp)
    }

    /// Fraction of cooperative moves after dropping `burn_in` rounds.
    pub fn cooperation_rate(&self, player: usize, burn_in: usize) -> Option<f64> {
        let tail = self.choices.get(burn_in..).filter(|t| !t.is_empty())?;
        let n = tail.iter().filter(|c| c[player]).count();
        Some(n as f64 / tail.len() as f64)
    }

    /// Mean realized payoff per round after dropping `burn_in` rounds.
    pub fn mean_payoff(&self, matrix: &PayoffMatrix, player: usize, burn_in: usize) -> Option<f64> {
        let tail = self.choices.get(burn_in..).filter(|t| !t.is_empty())?;
        let total: f64 = tail
            .iter()
            .map(|c| matrix.payoff(c[player], c[1 - player]))
            .sum();
        Some(total / tail.len() as f64)
    }

    /// CSV with `#` metadata lines, then `round,choice1,choice2,payoff1,payoff2`.
    pub fn write_csv<W: Write>(&self, matrix: &PayoffMatrix, mut out: W) -> std::io::Result<()> {
        let [s1, s2] = self.strategies;
        let init = self.config.initial_coop_prob;
        writeln!(out, "# generator: {GENERATOR}")?;
        writeln!(out, "# seed: {}", self.config.seed)?;
        writeln!(out, "# rounds: {}", self.config.rounds)?;
        writeln!(out, "# strategy1: alpha={} gamma={}", sig12(s1.alpha()), sig12(s1.gamma()))?;
        writeln!(out, "# strategy2: alpha={} gamma={}", sig12(s2.alpha()), sig12(s2.gamma()))?;
        writeln!(out, "# initial_coop_prob: {} {}", sig12(init[0]), sig12(init[1]))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "choice1", "choice2", "payoff1", "payoff2"])?;
        let mv = |c: bool| if c { "C" } else { "D" };
        for (t, c) in self.choices.iter().enumerate() {
            w.write_record([
                (t + 1).to_string(),
                mv(c[0]).to_string(),
                mv(c[1]).to_string(),
                sig12(matrix.payoff(c[0], c[1])),
                sig12(matrix.payoff(c[1], c[0])),
            ])?;
        }
        w.flush()
    }
}

/// Empirical conditional frequency with its counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub successes: u64,
    pub trials: u64,
}

impl RateEstimate {
    /// `None` when the conditioning event never occurred.
    pub fn value(&self) -> Option<f64> {
        (self.trials > 0).then(|| self.successes as f64 / self.trials as f64)
    }

    fn add(self, other: Self) -> Self {
        Self {
            successes: self.successes + other.successes,
            trials: self.trials + other.trials,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkovEstimate {
    /// Cooperation after the opponent defected.
    pub alpha: RateEstimate,
    /// Cooperation after the opponent cooperated.
    pub gamma: RateEstimate,
}

impl MarkovEstimate {
    /// The estimate as a strategy, if both rates are defined.
    pub fn strategy(&self) -> Option<MarkovStrategy> {
        MarkovStrategy::new(self.alpha.value()?, self.gamma.value()?).ok()
    }
}

/// Count responses to the opponent's previous move; round 1 has none.
pub fn estimate_from_history(own: &[bool], opponent: &[bool]) -> MarkovEstimate {
    let mut e = MarkovEstimate::default();
    for t in 1..own.len().min(opponent.len()) {
        let r = if opponent[t - 1] { &mut e.gamma } else { &mut e.alpha };
        r.trials += 1;
        r.successes += own[t] as u64;
    }
    e
}

/// Per-player frequency estimates of `(alpha, gamma)`.
pub fn estimate_markov(log: &GameLog) -> Result<[MarkovEstimate; 2], SimError> {
    if log.len() < 2 {
        return Err(SimError::TooShort(log.len()));
    }
    let est = |p: usize| {
        let (own, opp) = log.history(p);
        estimate_from_history(&own, &opp)
    };
    Ok([est(0), est(1)])
}

/// How per-player estimates are combined into one `(alpha, gamma)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Add the counts of all players, then divide.
    #[default]
    Pooled,
    /// Average the per-player rates, skipping undefined ones.
    MeanOfPlayers,
}

/// Combined `(alpha, gamma)`; a component is `None` if no player defines it.
pub fn aggregate_estimates(estimates: &[MarkovEstimate], mode: Aggregation) -> [Option<f64>; 2] {
    match mode {
        Aggregation::Pooled => {
            let total = estimates
                .iter()
                .fold(MarkovEstimate::default(), |acc, e| MarkovEstimate {
                    alpha: acc.alpha.add(e.alpha),
                    gamma: acc.gamma.add(e.gamma),
                });
            [total.alpha.value(), total.gamma.value()]
        }
        Aggregation::MeanOfPlayers => {
            let mean = |pick: fn(&MarkovEstimate) -> RateEstimate| {
                let vals: Vec<f64> = estimates.iter().filter_map(|e| pick(e).value()).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            };
            [mean(|e| e.alpha), mean(|e| e.gamma)]
        }
    }
}

/// One participant's view of a re-paired session.
#[derive(Clone, Debug, PartialEq)]
pub struct PlayerLog {
    pub own: Vec<bool>,
    /// Move of whoever was the partner in that round.
    pub opponent: Vec<bool>,
    pub partner: Vec<usize>,
}

impl PlayerLog {
    pub fn estimate(&self) -> MarkovEstimate {
        estimate_from_history(&self.own, &self.opponent)
    }
}

/// Group play: every round the players are shuffled into random pairs, and each
/// player responds to the move of the partner it faced in the previous round.
///
/// Round-1 moves use the first entry of `initial_coop_prob` for everyone.
pub fn simulate_group(
    strategies: &[MarkovStrategy],
    config: &SimulationConfig,
) -> Result<Vec<PlayerLog>, SimError> {
    let n = strategies.len();
    if n < 2 || n % 2 == 1 {
        return Err(SimError::GroupSize(n));
    }
    let mut rngs: Vec<ChaCha8Rng> = (0..n).map(|i| player_rng(config.seed, i as u64)).collect();
    let mut pairing = player_rng(config.seed, PAIRING_STREAM);
    let mut logs: Vec<PlayerLog> = (0..n)
        .map(|_| PlayerLog {
            own: Vec::with_capacity(config.rounds),
            opponent: Vec::with_capacity(config.rounds),
            partner: Vec::with_capacity(config.rounds),
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut moves = vec![false; n];
    for t in 0..config.rounds {
        for i in 0..n {
            moves[i] = if t == 0 {
                draw(&mut rngs[i], config.initial_coop_prob[0])
            } else {
                let last = *logs[i].opponent.last().expect("previous round");
                next_move(&strategies[i], last, &mut rngs[i])
            };
        }
        // Fisher-Yates from the pairing stream; consecutive entries meet.
        for k in (1..n).rev() {
            let j = pairing.gen_range(0..=k);
            order.swap(k, j);
        }
        for pair in order.chunks(2) {
            let (a, b) = (pair[0], pair[1]);
            for (me, other) in [(a, b), (b, a)] {
                logs[me].own.push(moves[me]);
                logs[me].opponent.push(moves[other]);
                logs[me].partner.push(other);
            }
        }
    }
    Ok(logs)
}
