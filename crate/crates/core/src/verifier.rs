//! One-shot deviation checks for threshold-sender / Markov-receiver profiles.
//!
//! A profile is accepted when neither player gains more than `tol` from a single deviation
//! followed by conformity. This relies on the one-shot deviation principle, which holds on a
//! finite horizon and on the discounted infinite horizon; the undiscounted infinite horizon is
//! rejected.
//!
//! Beliefs after a message are exact: a threshold sender at `α` makes the state uniform on
//! `[0, α]` after `m_c` and on `[α, 1]` after `m_q`. A message sent with probability zero gets
//! the uniform belief on `[0, 1]`, and the affected sites are flagged.
//!
//! Games with a non-uniform state law are checked on their uniform reduction, where the
//! supports above live in quantile space.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, GameSpec, Horizon};
use crate::error::{Error, Result};
use crate::fnspace::MonotoneMap;
use crate::profiles::{Message, Response, StrategyProfile, TieRule};
use crate::transform::{self, Direction};

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_BINS: usize = 1000;

/// Expected payoffs from each period onward, discounted to period 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationValues {
    /// Entry `t-1` is `U_s^t`.
    pub sender: Vec<f64>,
    pub receiver: Vec<f64>,
    /// On the infinite horizon, the last listed period starts the stationary tail.
    pub horizon: Horizon,
    pub delta: f64,
}

impl ContinuationValues {
    /// `(U_s^t, U_r^t)`; zero past a finite horizon, geometric past the stationary tail.
    pub fn at(&self, t: u32) -> (f64, f64) {
        let n = self.sender.len();
        let i = t as usize - 1;
        if i < n {
            return (self.sender[i], self.receiver[i]);
        }
        match self.horizon {
            Horizon::Finite(_) => (0.0, 0.0),
            Horizon::Infinite => {
                let k = self.delta.powi((i + 1 - n) as i32);
                (k * self.sender[n - 1], k * self.receiver[n - 1])
            }
        }
    }
}

fn reduce(game: &GameSpec, profile: &StrategyProfile) -> Result<(GameSpec, StrategyProfile)> {
    profile.validate(game)?;
    if game.distribution().is_uniform() {
        return Ok((game.clone(), profile.clone()));
    }
    let tg = transform::to_uniform(game)?;
    let mapped = tg.map_profile(profile, Direction::ToUniform)?;
    Ok((tg.uniform_game, mapped))
}

/// Stopping-weight and quit-payoff terms of one period: `U^t = z·U^{t+1} + δ^{t-1}·c`.
fn period_terms(m: &MonotoneMap, alpha: f64, r: Response) -> (f64, f64) {
    let z = r.p * alpha + r.q * (1.0 - alpha);
    let c = (1.0 - r.p) * m.area(0.0, alpha) + (1.0 - r.q) * m.area(alpha, 1.0);
    (z, c)
}

fn values_for(game: &GameSpec, profile: &StrategyProfile, m: &MonotoneMap) -> Result<Vec<f64>> {
    let horizon = game.horizon();
    let delta = game.delta();
    let last = match horizon {
        Horizon::Finite(n) => n,
        Horizon::Infinite => profile.tail_start(),
    };
    let mut u = vec![0.0; last as usize];
    for t in (1..=last).rev() {
        let (z, c) = period_terms(m, profile.threshold(horizon, t), profile.response(horizon, t));
        let w = game.discount(t);
        u[t as usize - 1] = if t == last {
            match horizon {
                Horizon::Finite(_) => w * c,
                Horizon::Infinite => {
                    let denom = 1.0 - delta * z;
                    if denom <= 0.0 {
                        return Err(Error::Unsupported(format!(
                            "continuation values diverge: play never stops from period {t} \
                             on (delta = {delta}, continuation probability {z})"
                        )));
                    }
                    w * c / denom
                }
            }
        } else {
            z * u[t as usize] + w * c
        };
    }
    Ok(u)
}

/// Exact continuation values of `profile`, from the backward recursion
/// `U^t = z^t·U^{t+1} + δ^{t-1}·c^t` and, on the infinite horizon, the stationary tail
/// `U^K = δ^{K-1}·c/(1 - δ·z)`.
pub fn continuation_values(game: &GameSpec, profile: &StrategyProfile) -> Result<ContinuationValues> {
    let (game, profile) = reduce(game, profile)?;
    continuation_values_uniform(&game, &profile)
}

fn continuation_values_uniform(game: &GameSpec, profile: &StrategyProfile) -> Result<ContinuationValues> {
    Ok(ContinuationValues {
        sender: values_for(game, profile, game.f())?,
        receiver: values_for(game, profile, game.g())?,
        horizon: game.horizon(),
        delta: game.delta(),
    })
}

/// Sender's one-shot check at one period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenderCheck {
    pub period: u32,
    pub threshold: f64,
    pub continuation: f64,
    /// State at which stopping now pays exactly the continuation value, if inside `[0, 1]`.
    pub indifference_state: Option<f64>,
    /// Gain of the best message over the prescribed one at each bin midpoint.
    pub gaps: Vec<f64>,
    pub grid_max_gap: f64,
    pub grid_argmax: f64,
    /// Supremum of the gain over all states, from the endpoint values on each side of the
    /// threshold (the gain is monotone on each side).
    pub sup_gap: f64,
    pub sup_state: f64,
}

impl SenderCheck {
    pub fn gap(&self) -> f64 {
        self.grid_max_gap.max(self.sup_gap)
    }
}

/// Periods at which a check is meaningful: the whole finite horizon, or up to the start of
/// the stationary tail.
fn sender_periods(game: &GameSpec, profile: &StrategyProfile) -> Vec<u32> {
    match game.horizon() {
        Horizon::Finite(n) => (1..=n).collect(),
        Horizon::Infinite => (1..=profile.tail_start()).collect(),
    }
}

pub fn check_sender(game: &GameSpec, profile: &StrategyProfile, bins: usize) -> Result<Vec<SenderCheck>> {
    if bins < 2 {
        return Err(Error::Unsupported(format!("at least 2 bins are required, got {bins}")));
    }
    let (game, profile) = reduce(game, profile)?;
    let values = continuation_values_uniform(&game, &profile)?;
    Ok(sender_checks(&game, &profile, &values, bins))
}

fn sender_checks(
    game: &GameSpec,
    profile: &StrategyProfile,
    values: &ContinuationValues,
    bins: usize,
) -> Vec<SenderCheck> {
    let horizon = game.horizon();
    let f = game.f();
    sender_periods(game, profile)
        .into_iter()
        .map(|t| {
            let alpha = profile.threshold(horizon, t);
            let r = profile.response(horizon, t);
            let next = values.at(t + 1).0;
            let w = game.discount(t);
            // payoff(m_c) - payoff(m_q)
            let edge = |theta: f64| (r.p - r.q) * (next - w * f.value(theta));
            let gain = |theta: f64, sent: Message| {
                let d = edge(theta);
                match sent {
                    Message::Continue => (-d).max(0.0),
                    Message::Quit => d.max(0.0),
                }
            };
            let gaps: Vec<f64> = (0..bins)
                .map(|i| {
                    let theta = (i as f64 + 0.5) / bins as f64;
                    gain(theta, profile.message(horizon, t, theta))
                })
                .collect();
            let (mut grid_argmax, mut grid_max_gap) = (0.5 / bins as f64, gaps[0]);
            for (i, &g) in gaps.iter().enumerate().skip(1) {
                if g > grid_max_gap {
                    grid_max_gap = g;
                    grid_argmax = (i as f64 + 0.5) / bins as f64;
                }
            }
            let mut candidates = Vec::with_capacity(5);
            if alpha > 0.0 {
                candidates.push((0.0, gain(0.0, Message::Continue)));
                candidates.push((alpha, gain(alpha, Message::Continue)));
            }
            if alpha < 1.0 {
                candidates.push((alpha, gain(alpha, Message::Quit)));
                candidates.push((1.0, gain(1.0, Message::Quit)));
            }
            let tie = match profile.tie_rule {
                TieRule::Quit => Message::Quit,
                TieRule::Continue => Message::Continue,
            };
            candidates.push((alpha, gain(alpha, tie)));
            let (mut sup_state, mut sup_gap) = candidates[0];
            for &(s, g) in &candidates[1..] {
                if g > sup_gap {
                    sup_gap = g;
                    sup_state = s;
                }
            }
            let indifference_state = if w > 0.0 && next / w <= f.upper() {
                Some(f.preimage(next / w))
            } else {
                None
            };
            SenderCheck {
                period: t,
                threshold: alpha,
                continuation: next,
                indifference_state,
                gaps,
                grid_max_gap,
                grid_argmax,
                sup_gap,
                sup_state,
            }
        })
        .collect()
}

/// Receiver's one-shot check at one period after one message.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReceiverCheck {
    pub period: u32,
    pub message: Message,
    /// Probability that the message is sent.
    pub probability: f64,
    /// The message has probability zero and the belief is the uniform default.
    pub off_path: bool,
    pub quit_value: f64,
    pub continue_value: f64,
    pub prescribed_value: f64,
    pub gap: f64,
}

pub fn check_receiver(game: &GameSpec, profile: &StrategyProfile) -> Result<Vec<ReceiverCheck>> {
    let (game, profile) = reduce(game, profile)?;
    let values = continuation_values_uniform(&game, &profile)?;
    Ok(receiver_checks(&game, &profile, &values))
}

fn receiver_checks(game: &GameSpec, profile: &StrategyProfile, values: &ContinuationValues) -> Vec<ReceiverCheck> {
    let horizon = game.horizon();
    let g = game.g();
    let mut out = Vec::new();
    for t in profile.decision_periods(horizon) {
        let alpha = profile.threshold(horizon, t);
        let r = profile.response(horizon, t);
        let w = game.discount(t);
        let cont = values.at(t + 1).1;
        for (message, lo, hi, p) in [
            (Message::Continue, 0.0, alpha, r.p),
            (Message::Quit, alpha, 1.0, r.q),
        ] {
            let probability = hi - lo;
            let off_path = probability <= 0.0;
            let quit = if off_path { w * g.area(0.0, 1.0) } else { w * g.area(lo, hi) / probability };
            let prescribed = p * cont + (1.0 - p) * quit;
            out.push(ReceiverCheck {
                period: t,
                message,
                probability,
                off_path,
                quit_value: quit,
                continue_value: cont,
                prescribed_value: prescribed,
                gap: cont.max(quit) - prescribed,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "IsPBE")]
    IsPbe,
    #[serde(rename = "NotPBE")]
    NotPbe,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::IsPbe => "IsPBE",
            Verdict::NotPbe => "NotPBE",
        })
    }
}

/// Location of the largest deviation gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "player", rename_all = "lowercase")]
pub enum Site {
    Sender { period: u32, state: f64, gap: f64 },
    Receiver { period: u32, message: Message, gap: f64, off_path: bool },
}

impl Site {
    pub fn gap(&self) -> f64 {
        match self {
            Site::Sender { gap, .. } | Site::Receiver { gap, .. } => *gap,
        }
    }

    pub fn period(&self) -> u32 {
        match self {
            Site::Sender { period, .. } | Site::Receiver { period, .. } => *period,
        }
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Sender { period, state, gap } => {
                write!(f, "sender at t={period}, state {state:.6}: gain {gap:.3e}")
            }
            Site::Receiver { period, message, gap, off_path } => {
                write!(f, "receiver at t={period} after {message}: gain {gap:.3e}")?;
                if *off_path {
                    f.write_str(" (off path)")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub bins: usize,
    pub tol: f64,
    pub sender: Vec<SenderCheck>,
    pub receiver: Vec<ReceiverCheck>,
    pub values: ContinuationValues,
    pub max_gap: f64,
    pub worst: Site,
    pub verdict: Verdict,
    /// The verdict is `NotPBE` only because of sites reached with probability zero, so a
    /// different off-path belief could overturn it.
    pub depends_on_off_path: bool,
}

impl DeviationReport {
    pub fn is_pbe(&self) -> bool {
        self.verdict == Verdict::IsPbe
    }

    /// Per-period summary for terminals.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "verdict: {}   max gap: {:.3e}   tol: {:.1e}   bins: {}", self.verdict, self.max_gap, self.tol, self.bins);
        let _ = writeln!(s, "worst site: {}", self.worst);
        if self.depends_on_off_path {
            let _ = writeln!(s, "note: the verdict rests on off-path beliefs");
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>6}  {:>10}  {:>12}  {:>12}  {:>12}", "period", "threshold", "U_s next", "indiff", "sender gap");
        for c in &self.sender {
            let ind = c.indifference_state.map_or("-".to_string(), |x| format!("{x:.6}"));
            let _ = writeln!(
                s,
                "{:>6}  {:>10.6}  {:>12.6}  {:>12}  {:>12.3e}",
                c.period,
                c.threshold,
                c.continuation,
                ind,
                c.gap()
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>6}  {:>4}  {:>8}  {:>12}  {:>12}  {:>12}", "period", "msg", "prob", "quit", "continue", "gap");
        for c in &self.receiver {
            let _ = writeln!(
                s,
                "{:>6}  {:>4}  {:>8.5}  {:>12.6}  {:>12.6}  {:>12.3e}{}",
                c.period,
                c.message.to_string(),
                c.probability,
                c.quit_value,
                c.continue_value,
                c.gap,
                if c.off_path { "  off-path" } else { "" }
            );
        }
        s
    }
}

/// Checks every one-shot deviation of `profile`; `IsPBE` iff the largest gain is at most `tol`.
pub fn verify_pbe(game: &GameSpec, profile: &StrategyProfile, bins: usize, tol: f64) -> Result<DeviationReport> {
    if game.horizon() == Horizon::Infinite && game.delta() >= 1.0 {
        return Err(Error::Unsupported(
            "one-shot deviation checks need a finite horizon or delta < 1; with undiscounted \
             payoffs on the infinite horizon no responsive essentially Markov equilibrium exists"
                .into(),
        ));
    }
    if bins < 2 {
        return Err(Error::Unsupported(format!("at least 2 bins are required, got {bins}")));
    }
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Unsupported(format!("tolerance must be a nonnegative number, got {tol}")));
    }
    let (ugame, uprofile) = reduce(game, profile)?;
    let values = continuation_values_uniform(&ugame, &uprofile)?;
    let sender = sender_checks(&ugame, &uprofile, &values, bins);
    let receiver = receiver_checks(&ugame, &uprofile, &values);

    // Period ascending; within a period the sender first, then m_c, then m_q. Only a strictly
    // larger gain displaces the current worst site.
    let mut sites: Vec<Site> = Vec::with_capacity(sender.len() + receiver.len());
    let mut ri = receiver.iter().peekable();
    for c in &sender {
        let state = if c.sup_gap >= c.grid_max_gap { c.sup_state } else { c.grid_argmax };
        sites.push(Site::Sender { period: c.period, state, gap: c.gap() });
        while let Some(r) = ri.next_if(|r| r.period == c.period) {
            sites.push(Site::Receiver { period: r.period, message: r.message, gap: r.gap, off_path: r.off_path });
        }
    }
    let mut worst = sites[0].clone();
    let mut on_path_max = f64::NEG_INFINITY;
    for s in &sites {
        if s.gap() > worst.gap() {
            worst = s.clone();
        }
        if !matches!(s, Site::Receiver { off_path: true, .. }) {
            on_path_max = on_path_max.max(s.gap());
        }
    }
    let max_gap = worst.gap();
    let verdict = if max_gap <= tol { Verdict::IsPbe } else { Verdict::NotPbe };
    Ok(DeviationReport {
        bins,
        tol,
        sender,
        receiver,
        values,
        max_gap,
        worst,
        verdict,
        depends_on_off_path: verdict == Verdict::NotPbe && on_path_max <= tol,
    })
}

/// Outcome of the last-period test for non-existence of responsive equilibria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Certificate {
    /// Every responsive profile must use `threshold` at period `T-1`, and after `m_c` the
    /// receiver then strictly prefers quitting (`quit_value > continue_value`).
    Certified { horizon: u32, delta: f64, period: u32, threshold: f64, quit_value: f64, continue_value: f64 },
    Refused { reason: String },
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Certificate::Certified { horizon, delta, period, threshold, quit_value, continue_value } => format!(
                "no responsive PBE for T = {horizon}, delta = {delta}: at period {period} any \
                 responsive profile uses threshold {threshold:.6}, and after m_c the receiver's \
                 quit value V = {quit_value:.6} exceeds the continuation value delta*V(1) = \
                 {continue_value:.6}"
            ),
            Certificate::Refused { reason } => format!("no certificate: {reason}"),
        }
    }
}

/// Tests whether the period-`T-1` threshold forced on responsive profiles makes the receiver
/// strictly prefer to quit after `m_c`.
pub fn nonexistence_certificate(game: &GameSpec, delta: f64) -> Result<Certificate> {
    let horizon = match game.horizon() {
        Horizon::Finite(n) if n >= 2 => n,
        other => {
            return Err(Error::Unsupported(format!(
                "the last-period certificate needs a finite horizon T >= 2, got {other}"
            )))
        }
    };
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Unsupported(format!("delta must lie in (0, 1), got {delta}")));
    }
    let game = if game.distribution().is_uniform() {
        game.with_delta(delta)?
    } else {
        transform::to_uniform(&game.with_delta(delta)?)?.uniform_game
    };
    let threshold = equilibrium::threshold_step(&game, 0.0)?;
    let quit_value = equilibrium::receiver_quit_value(&game, threshold)?;
    let continue_value = delta * equilibrium::receiver_quit_value(&game, 1.0)?;
    Ok(if continue_value < quit_value {
        Certificate::Certified { horizon, delta, period: horizon - 1, threshold, quit_value, continue_value }
    } else {
        Certificate::Refused {
            reason: format!(
                "delta*V(1) = {continue_value:.6} is not below V({threshold:.6}) = {quit_value:.6}"
            ),
        }
    })
}
