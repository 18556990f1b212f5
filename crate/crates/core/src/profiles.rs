//! Threshold-sender / Markov-receiver profiles and seeded Monte Carlo playouts.
//!
//! Per-period vectors are indexed from period 1. On the infinite horizon the last entry of a
//! vector stays in force for every later period, so every representable profile is eventually
//! stationary. On a finite horizon `T` the final period is always a forced quit: receiver
//! vectors may stop at `T - 1`, and a period-`T` entry must be `(p, q) = (0, 0)`.
//!
//! Each replication draws from its own ChaCha stream, selected by the replication index under
//! the master seed, so results do not depend on how replications are spread over threads.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{GameSpec, Horizon, RegularProfile, Thresholds};
use crate::error::{Error, Result};

/// Mass left beyond the truncation horizon for discounted infinite games.
pub const TRUNCATION_TOL: f64 = 1e-12;
/// Truncation horizon for undiscounted infinite games when none is supplied.
pub const DEFAULT_MAX_PERIODS: u64 = 10_000;

const CHUNK: usize = 1 << 14;

/// Receiver's continuation probabilities: `p` after `m_c`, `q` after `m_q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub p: f64,
    pub q: f64,
}

impl Response {
    pub const OBEDIENT: Response = Response { p: 1.0, q: 0.0 };
    pub const QUIT: Response = Response { p: 0.0, q: 0.0 };

    fn continue_prob(&self, message: Message) -> f64 {
        match message {
            Message::Continue => self.p,
            Message::Quit => self.q,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SenderRule {
    PerPeriod(Vec<f64>),
    Stationary { stationary: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReceiverRule {
    PerPeriod(Vec<Response>),
    Stationary { stationary: Response },
}

/// Message sent when the state equals the threshold exactly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieRule {
    #[default]
    Quit,
    Continue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Message {
    #[serde(rename = "m_c")]
    Continue,
    #[serde(rename = "m_q")]
    Quit,
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Message::Continue => "m_c",
            Message::Quit => "m_q",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "a_c")]
    Continue,
    #[serde(rename = "a_q")]
    Quit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile {
    pub sender_thresholds: SenderRule,
    pub receiver: ReceiverRule,
    #[serde(default)]
    pub tie_rule: TieRule,
}

impl StrategyProfile {
    /// Sincere sender with the regular thresholds against an obedient receiver.
    pub fn from_regular(profile: &RegularProfile) -> Self {
        let sender_thresholds = match &profile.thresholds {
            Thresholds::Finite(v) => SenderRule::PerPeriod(v.clone()),
            Thresholds::Stationary { stationary } => SenderRule::Stationary { stationary: *stationary },
        };
        Self {
            sender_thresholds,
            receiver: ReceiverRule::Stationary { stationary: Response::OBEDIENT },
            tie_rule: TieRule::Quit,
        }
    }

    pub fn stationary(threshold: f64, response: Response) -> Self {
        Self {
            sender_thresholds: SenderRule::Stationary { stationary: threshold },
            receiver: ReceiverRule::Stationary { stationary: response },
            tie_rule: TieRule::Quit,
        }
    }

    /// Sender threshold at period `t` (1-based).
    pub fn threshold(&self, horizon: Horizon, t: u32) -> f64 {
        match &self.sender_thresholds {
            SenderRule::Stationary { stationary } => *stationary,
            SenderRule::PerPeriod(v) => match v.get(t as usize - 1) {
                Some(a) => *a,
                None if matches!(horizon, Horizon::Finite(n) if n == t) => 0.0,
                None => *v.last().unwrap_or(&0.0),
            },
        }
    }

    /// Receiver response at period `t`; the final period of a finite game is a forced quit.
    pub fn response(&self, horizon: Horizon, t: u32) -> Response {
        if let Horizon::Finite(n) = horizon {
            if t >= n {
                return Response::QUIT;
            }
        }
        match &self.receiver {
            ReceiverRule::Stationary { stationary } => *stationary,
            ReceiverRule::PerPeriod(v) => *v.get(t as usize - 1).unwrap_or_else(|| v.last().unwrap()),
        }
    }

    /// Periods on which the receiver has a real choice: `1..T` on a finite horizon, or the
    /// prefix up to and including the first period of the stationary tail.
    pub fn decision_periods(&self, horizon: Horizon) -> Vec<u32> {
        match horizon {
            Horizon::Finite(n) => (1..n).collect(),
            Horizon::Infinite => (1..=self.tail_start()).collect(),
        }
    }

    /// First period from which the profile is stationary (infinite-horizon reading).
    pub fn tail_start(&self) -> u32 {
        let s = match &self.sender_thresholds {
            SenderRule::PerPeriod(v) => v.len().max(1),
            SenderRule::Stationary { .. } => 1,
        };
        let r = match &self.receiver {
            ReceiverRule::PerPeriod(v) => v.len().max(1),
            ReceiverRule::Stationary { .. } => 1,
        };
        s.max(r) as u32
    }

    pub fn message(&self, horizon: Horizon, t: u32, state: f64) -> Message {
        let a = self.threshold(horizon, t);
        if state < a {
            Message::Continue
        } else if state > a {
            Message::Quit
        } else {
            match self.tie_rule {
                TieRule::Quit => Message::Quit,
                TieRule::Continue => Message::Continue,
            }
        }
    }

    pub fn is_obedient(&self, horizon: Horizon) -> bool {
        self.decision_periods(horizon)
            .into_iter()
            .all(|t| self.response(horizon, t) == Response::OBEDIENT)
    }

    /// `p^t > q^t` at every period before the last.
    pub fn is_responsive(&self, horizon: Horizon) -> bool {
        self.decision_periods(horizon).into_iter().all(|t| {
            let r = self.response(horizon, t);
            r.p > r.q
        })
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(msg));
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        let thresholds: Vec<f64> = match &self.sender_thresholds {
            SenderRule::PerPeriod(v) => v.clone(),
            SenderRule::Stationary { stationary } => vec![*stationary],
        };
        let responses: Vec<Response> = match &self.receiver {
            ReceiverRule::PerPeriod(v) => v.clone(),
            ReceiverRule::Stationary { stationary } => vec![*stationary],
        };
        if thresholds.is_empty() {
            return bad("sender threshold list is empty".into());
        }
        if let Some(a) = thresholds.iter().find(|a| !unit(**a)) {
            return bad(format!("sender threshold {a} is outside [0, 1]"));
        }
        if let Some(r) = responses.iter().find(|r| !unit(r.p) || !unit(r.q)) {
            return bad(format!("receiver probabilities ({}, {}) are outside [0, 1]", r.p, r.q));
        }
        if let Horizon::Finite(n) = game.horizon() {
            let n = n as usize;
            if let SenderRule::PerPeriod(v) = &self.sender_thresholds {
                if v.len() != n && v.len() + 1 != n {
                    return bad(format!(
                        "horizon {n} needs {n} sender thresholds (or {} with the final period implicit), got {}",
                        n - 1,
                        v.len()
                    ));
                }
            }
            match &self.receiver {
                ReceiverRule::PerPeriod(v) => {
                    if v.is_empty() && n > 1 {
                        return bad("receiver response list is empty".into());
                    }
                    if v.len() != n && v.len() + 1 != n {
                        return bad(format!(
                            "horizon {n} needs {} receiver responses (periods before the forced quit), got {}",
                            n - 1,
                            v.len()
                        ));
                    }
                    if v.len() == n && v[n - 1] != Response::QUIT {
                        return bad(format!(
                            "the receiver must quit at the final period {n}; got p = {}, q = {}",
                            v[n - 1].p, v[n - 1].q
                        ));
                    }
                }
                ReceiverRule::Stationary { .. } => {}
            }
        } else if responses.is_empty() {
            return bad("receiver response list is empty".into());
        }
        Ok(())
    }
}

/// A single realised play.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Playout {
    pub states: Vec<f64>,
    pub messages: Vec<Message>,
    pub actions: Vec<Action>,
    /// First period with action `a_q`; `None` if play was cut at the truncation horizon.
    pub stop_time: Option<u64>,
    pub sender_payoff: f64,
    pub receiver_payoff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Outcome {
    stop_time: Option<u64>,
    sender: f64,
    receiver: f64,
}

#[derive(Default)]
struct Trace {
    states: Vec<f64>,
    messages: Vec<Message>,
    actions: Vec<Action>,
}

/// Periods simulated before play is cut: `T` on a finite horizon; on the infinite horizon
/// the supplied limit, else `⌈ln(tol)/ln δ⌉` for `δ < 1`, else [`DEFAULT_MAX_PERIODS`].
pub fn truncation_horizon(game: &GameSpec, max_periods: Option<u64>) -> u64 {
    match game.horizon() {
        Horizon::Finite(n) => n as u64,
        Horizon::Infinite => match max_periods {
            Some(m) => m.max(1),
            None if game.delta() < 1.0 => {
                (TRUNCATION_TOL.ln() / game.delta().ln()).ceil().max(1.0) as u64
            }
            None => DEFAULT_MAX_PERIODS,
        },
    }
}

/// Independent stream for replication `index` under `seed`.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn play<R: Rng + ?Sized>(
    game: &GameSpec,
    profile: &StrategyProfile,
    rng: &mut R,
    max_periods: u64,
    mut trace: Option<&mut Trace>,
) -> Outcome {
    let horizon = game.horizon();
    let dist = game.distribution();
    let mut weight = 1.0;
    for t in 1..=max_periods {
        // Two uniforms per period, always, so common random numbers line up across games.
        let u: f64 = rng.gen();
        let v: f64 = rng.gen();
        let period = t.min(u32::MAX as u64) as u32;
        let state = dist.quantile_unchecked(u);
        let message = profile.message(horizon, period, state);
        let keep_going = v < profile.response(horizon, period).continue_prob(message);
        if let Some(tr) = trace.as_deref_mut() {
            tr.states.push(state);
            tr.messages.push(message);
            tr.actions.push(if keep_going { Action::Continue } else { Action::Quit });
        }
        if !keep_going {
            return Outcome {
                stop_time: Some(t),
                sender: weight * game.f().value(state),
                receiver: weight * game.g().value(state),
            };
        }
        weight *= game.delta();
    }
    Outcome { stop_time: None, sender: 0.0, receiver: 0.0 }
}

/// Simulates one play under `profile`, cut at `max_periods` on the infinite horizon.
pub fn play_once<R: Rng + ?Sized>(
    game: &GameSpec,
    profile: &StrategyProfile,
    rng: &mut R,
    max_periods: Option<u64>,
) -> Result<Playout> {
    profile.validate(game)?;
    let mut trace = Trace::default();
    let limit = truncation_horizon(game, max_periods);
    let out = play(game, profile, rng, limit, Some(&mut trace));
    Ok(Playout {
        states: trace.states,
        messages: trace.messages,
        actions: trace.actions,
        stop_time: out.stop_time,
        sender_payoff: out.sender,
        receiver_payoff: out.receiver,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub replications: u64,
    pub seed: u64,
    /// Truncation horizon override for the infinite horizon.
    pub max_periods: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl SimulationConfig {
    pub fn new(replications: u64, seed: u64) -> Self {
        Self { replications, seed, max_periods: None, workers: None }
    }

    pub fn max_periods(mut self, m: u64) -> Self {
        self.max_periods = Some(m);
        self
    }

    pub fn workers(mut self, w: usize) -> Self {
        self.workers = Some(w);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopCount {
    pub stop_time: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub replications: u64,
    pub seed: u64,
    pub max_periods: u64,
    pub mean_sender: f64,
    pub mean_receiver: f64,
    pub stderr_sender: f64,
    pub stderr_receiver: f64,
    pub mean_stop_time: f64,
    pub stop_time_histogram: Vec<StopCount>,
    pub truncated: u64,
    pub truncated_fraction: f64,
}

impl SimulationResult {
    /// Stop-time histogram as CSV (`stop_time,count,share`); truncated plays are reported in a
    /// final `truncated` row.
    pub fn histogram_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let n = self.replications as f64;
        let io = |e: csv::Error| Error::Unsupported(format!("csv: {e}"));
        w.write_record(["stop_time", "count", "share"]).map_err(io)?;
        for row in &self.stop_time_histogram {
            w.write_record([
                row.stop_time.to_string(),
                row.count.to_string(),
                format!("{:?}", row.count as f64 / n),
            ])
            .map_err(io)?;
        }
        w.write_record(["truncated".to_string(), self.truncated.to_string(), format!("{:?}", self.truncated_fraction)])
            .map_err(io)?;
        let bytes = w.into_inner().map_err(|e| Error::Unsupported(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
        }
    }
}

/// Runs `config.replications` independent plays and summarises the payoffs.
///
/// Outcomes are produced in parallel but folded in replication order, so the result is
/// bit-identical for any worker count.
pub fn simulate(
    game: &GameSpec,
    profile: &StrategyProfile,
    config: &SimulationConfig,
) -> Result<SimulationResult> {
    if config.replications == 0 {
        return Err(Error::Unsupported("at least one replication is required".into()));
    }
    profile.validate(game)?;
    let limit = truncation_horizon(game, config.max_periods);
    let run = || {
        let mut sender = Moments::default();
        let mut receiver = Moments::default();
        let mut stops = Moments::default();
        let mut hist: BTreeMap<u64, u64> = BTreeMap::new();
        let mut truncated = 0u64;
        let mut start = 0u64;
        while start < config.replications {
            let end = (start + CHUNK as u64).min(config.replications);
            let outcomes: Vec<Outcome> = (start..end)
                .into_par_iter()
                .map(|i| play(game, profile, &mut replication_rng(config.seed, i), limit, None))
                .collect();
            for o in outcomes {
                sender.push(o.sender);
                receiver.push(o.receiver);
                match o.stop_time {
                    Some(s) => {
                        *hist.entry(s).or_default() += 1;
                        stops.push(s as f64);
                    }
                    None => truncated += 1,
                }
            }
            start = end;
        }
        SimulationResult {
            replications: config.replications,
            seed: config.seed,
            max_periods: limit,
            mean_sender: sender.mean,
            mean_receiver: receiver.mean,
            stderr_sender: sender.stderr(),
            stderr_receiver: receiver.stderr(),
            mean_stop_time: stops.mean,
            stop_time_histogram: hist
                .into_iter()
                .map(|(stop_time, count)| StopCount { stop_time, count })
                .collect(),
            truncated,
            truncated_fraction: truncated as f64 / config.replications as f64,
        }
    };
    match config.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?;
            Ok(pool.install(run))
        }
        None => Ok(run()),
    }
}

/// Simulated payoff of the sender strategy "recommend continuing iff `θ < 1 - ε`".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    pub eps: f64,
    pub value: f64,
    pub stderr: f64,
    /// `f(1 - ε)`, the payoff the deviation guarantees once play stops.
    pub guaranteed: f64,
    pub truncated_fraction: f64,
}

/// Value of the `ε`-deviation against a receiver that always continues on `m_c`, for the
/// undiscounted infinite-horizon game.
pub fn sender_deviation_value(
    game: &GameSpec,
    eps: f64,
    receiver: &ReceiverRule,
    config: &SimulationConfig,
) -> Result<DeviationEstimate> {
    if game.horizon() != Horizon::Infinite || game.delta() < 1.0 {
        return Err(Error::Unsupported(
            "the epsilon deviation is defined for undiscounted payoffs on the infinite horizon".into(),
        ));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Unsupported(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    let profile = StrategyProfile {
        sender_thresholds: SenderRule::Stationary { stationary: 1.0 - eps },
        receiver: receiver.clone(),
        tie_rule: TieRule::Quit,
    };
    let all_continue = (1..=profile.tail_start()).all(|t| profile.response(Horizon::Infinite, t).p == 1.0);
    if !all_continue {
        return Err(Error::Unsupported("the receiver must continue on m_c at every period".into()));
    }
    let res = simulate(game, &profile, config)?;
    Ok(DeviationEstimate {
        eps,
        value: res.mean_sender,
        stderr: res.stderr_sender,
        guaranteed: game.f().value(1.0 - eps),
        truncated_fraction: res.truncated_fraction,
    })
}
