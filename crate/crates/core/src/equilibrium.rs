//! The regular strategy profile and the existence regimes built on it.
//!
//! The regular profile pairs an obedient receiver with a sender who recommends continuing
//! exactly when the current stopping payoff is below the continuation value. Its thresholds
//! come from the backward map
//!
//! ```text
//! G(x) = x·f(x) + ∫_x^1 f(θ) dθ,        H(x) = f⁻¹(δ·G(x)),
//! ```
//!
//! iterated from `0` on a finite horizon, or solved as the fixed point of `H` on the infinite
//! horizon. Whether that profile is the unique responsive equilibrium depends on how `δ`
//! compares with the critical bounds `D^T` and `D`, which are functions of the receiver's
//! mean payoff `V(x) = (1/x)·∫_0^x g`.
//!
//! All routines here assume uniformly distributed states; games with another state law are
//! reduced first by [`crate::transform`].

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fnspace::{MonotoneMap, StateDistribution};
use crate::numeric::{bisect, bisect_bracket};
use crate::profiles::StrategyProfile;
use crate::verifier::{self, Certificate};

/// Final bracket width when solving `H(x) = x`.
pub const FIXED_POINT_WIDTH: f64 = 1e-12;
/// Spacing of the δ grid over which the bound functional is scanned.
pub const BOUND_GRID_STEP: f64 = 1e-3;
/// Final bracket width of the bisection that refines a bound.
pub const BOUND_REFINE_WIDTH: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    Finite(u32),
    Infinite,
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => write!(f, "infinite"),
        }
    }
}

impl std::str::FromStr for Horizon {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "∞" => Ok(Horizon::Infinite),
            other => match other.parse::<u32>() {
                Ok(t) if t >= 1 => Ok(Horizon::Finite(t)),
                _ => Err(Error::InvalidGame(format!(
                    "horizon must be a positive integer or \"infinite\", got {other:?}"
                ))),
            },
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Horizon::Finite(t) => s.serialize_u32(*t),
            Horizon::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(u64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(t) if t >= 1 && t <= u32::MAX as u64 => Ok(Horizon::Finite(t as u32)),
            Repr::Number(t) => Err(serde::de::Error::custom(format!("horizon must be >= 1, got {t}"))),
            Repr::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// A sender-receiver stopping game with period payoffs `δ^{t-1}·f` and `δ^{t-1}·g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GameRepr")]
pub struct GameSpec {
    horizon: Horizon,
    delta: f64,
    f: MonotoneMap,
    g: MonotoneMap,
    distribution: StateDistribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GameRepr {
    horizon: Horizon,
    delta: f64,
    f: MonotoneMap,
    g: MonotoneMap,
    #[serde(default)]
    distribution: StateDistribution,
}

impl TryFrom<GameRepr> for GameSpec {
    type Error = Error;

    fn try_from(r: GameRepr) -> Result<Self> {
        GameSpec::new(r.horizon, r.delta, r.f, r.g).map(|g| g.with_distribution(r.distribution))
    }
}

impl GameSpec {
    pub fn new(horizon: Horizon, delta: f64, f: MonotoneMap, g: MonotoneMap) -> Result<Self> {
        check_delta(delta)?;
        if let Horizon::Finite(0) = horizon {
            return Err(Error::InvalidGame("finite horizon must be at least 1".into()));
        }
        Ok(Self { horizon, delta, f, g, distribution: StateDistribution::Uniform })
    }

    pub fn with_distribution(mut self, distribution: StateDistribution) -> Self {
        self.distribution = distribution;
        self
    }

    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { delta, ..self.clone() })
    }

    pub fn with_horizon(&self, horizon: Horizon) -> Result<Self> {
        Self::new(horizon, self.delta, self.f.clone(), self.g.clone())
            .map(|g| g.with_distribution(self.distribution.clone()))
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Sender characteristic function.
    pub fn f(&self) -> &MonotoneMap {
        &self.f
    }

    /// Receiver characteristic function.
    pub fn g(&self) -> &MonotoneMap {
        &self.g
    }

    pub fn distribution(&self) -> &StateDistribution {
        &self.distribution
    }

    /// `δ^{t-1}`, the weight of a period-`t` payoff.
    pub fn discount(&self, t: u32) -> f64 {
        self.delta.powi(t as i32 - 1)
    }

    fn require_uniform(&self) -> Result<()> {
        if self.distribution.is_uniform() {
            Ok(())
        } else {
            Err(Error::Unsupported(
                "state distribution is not uniform; reduce the game with transform::to_uniform first"
                    .into(),
            ))
        }
    }

    fn finite_horizon(&self) -> Result<u32> {
        match self.horizon {
            Horizon::Finite(t) => Ok(t),
            Horizon::Infinite => Err(Error::Unsupported("operation needs a finite horizon".into())),
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidGame(format!("discount factor must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_state(x: f64) -> Result<f64> {
    if !x.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::Domain { value: x });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// `G(x) = x·f(x) + ∫_x^1 f`.
pub(crate) fn kernel(f: &MonotoneMap, x: f64) -> f64 {
    x * f.value(x) + f.area(x, 1.0)
}

/// `H(x) = f⁻¹(δ·G(x))`.
pub(crate) fn step(f: &MonotoneMap, delta: f64, x: f64) -> f64 {
    f.preimage(delta * kernel(f, x))
}

/// `V(x) = (1/x)·∫_0^x g`, with `V(0) = 0`.
pub(crate) fn mean_below(g: &MonotoneMap, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        g.area(0.0, x) / x
    }
}

/// Sender's payoff from period `t` onward when the period-`t` threshold is `x` and the
/// continuation value equals `f^t(x)`, in units of `δ^{t-1}`.
pub fn sender_kernel(game: &GameSpec, x: f64) -> Result<f64> {
    Ok(kernel(&game.f, check_state(x)?))
}

/// The backward threshold map `H`.
pub fn threshold_step(game: &GameSpec, x: f64) -> Result<f64> {
    Ok(step(&game.f, game.delta, check_state(x)?))
}

/// Receiver's expected quitting payoff given the state is uniform on `[0, x]`.
pub fn receiver_quit_value(game: &GameSpec, x: f64) -> Result<f64> {
    Ok(mean_below(&game.g, check_state(x)?))
}

/// Sender thresholds: one per period on a finite horizon, or a single stationary value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    Finite(Vec<f64>),
    Stationary { stationary: f64 },
}

impl Thresholds {
    /// Threshold in force at period `t` (1-based).
    pub fn at(&self, t: u32) -> f64 {
        match self {
            Thresholds::Finite(v) => v[(t as usize - 1).min(v.len() - 1)],
            Thresholds::Stationary { stationary } => *stationary,
        }
    }

    pub fn first(&self) -> f64 {
        self.at(1)
    }
}

/// The sincere/obedient profile together with period-1 values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularProfile {
    pub horizon: Horizon,
    pub delta: f64,
    pub thresholds: Thresholds,
    /// `None` when the value is undefined (undiscounted infinite horizon).
    pub sender_value: Option<f64>,
    pub receiver_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl RegularProfile {
    pub fn to_strategy(&self) -> StrategyProfile {
        StrategyProfile::from_regular(self)
    }
}

/// Continuation values `(U_s^t, U_r^t)` from period `t` onward, in period-1 units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodValues {
    pub sender: f64,
    pub receiver: f64,
}

/// Backward value recursion of the regular profile on a finite horizon.
///
/// `thresholds` are the per-period cutoffs `β^1..β^T`; entry `t-1` of the result is
/// `(U_s^t, U_r^t)`.
pub fn regular_values(game: &GameSpec, thresholds: &[f64]) -> Vec<PeriodValues> {
    let (f, g) = (&game.f, &game.g);
    let n = thresholds.len();
    let mut out = vec![PeriodValues { sender: 0.0, receiver: 0.0 }; n];
    for t in (1..=n as u32).rev() {
        let w = game.discount(t);
        out[t as usize - 1] = if t as usize == n {
            PeriodValues { sender: w * f.area(0.0, 1.0), receiver: w * g.area(0.0, 1.0) }
        } else {
            let b = thresholds[t as usize - 1];
            let next = out[t as usize];
            PeriodValues {
                sender: b * next.sender + w * f.area(b, 1.0),
                receiver: b * next.receiver + w * g.area(b, 1.0),
            }
        }
    }
    out
}

fn finite_chain(f: &MonotoneMap, delta: f64, horizon: u32) -> Vec<f64> {
    let mut b = vec![0.0; horizon as usize];
    for t in (0..horizon as usize - 1).rev() {
        b[t] = step(f, delta, b[t + 1]);
    }
    b
}

/// Regular profile on a finite horizon: `β^T = 0`, `β^t = H(β^{t+1})`.
pub fn thresholds_finite(game: &GameSpec) -> Result<RegularProfile> {
    game.require_uniform()?;
    let horizon = game.finite_horizon()?;
    let b = finite_chain(&game.f, game.delta, horizon);
    let values = regular_values(game, &b);
    Ok(RegularProfile {
        horizon: game.horizon,
        delta: game.delta,
        sender_value: Some(values[0].sender),
        receiver_value: Some(values[0].receiver),
        thresholds: Thresholds::Finite(b),
        warnings: Vec::new(),
    })
}

/// Unique fixed point of `H` on `[0, 1]`; exactly 1 when `δ = 1`.
pub(crate) fn fixed_point(f: &MonotoneMap, delta: f64) -> f64 {
    if delta >= 1.0 {
        return 1.0;
    }
    // H(x) > x below the fixed point and H(x) < x above it.
    bisect(0.0, 1.0, FIXED_POINT_WIDTH, |x| step(f, delta, x) > x)
}

pub const UNDISCOUNTED_INFINITE_WARNING: &str = "regular profile is not a PBE: with undiscounted \
payoffs on an infinite horizon the sender's threshold is 1, play never stops, and no responsive \
essentially Markov equilibrium exists";

/// Stationary regular profile on the infinite horizon.
pub fn beta_infinite(game: &GameSpec) -> Result<RegularProfile> {
    game.require_uniform()?;
    if game.horizon != Horizon::Infinite {
        return Err(Error::Unsupported("operation needs the infinite horizon".into()));
    }
    let beta = fixed_point(&game.f, game.delta);
    if game.delta >= 1.0 {
        return Ok(RegularProfile {
            horizon: game.horizon,
            delta: game.delta,
            thresholds: Thresholds::Stationary { stationary: beta },
            sender_value: None,
            receiver_value: None,
            warnings: vec![UNDISCOUNTED_INFINITE_WARNING.to_string()],
        });
    }
    let receiver = game.g.area(beta, 1.0) / (1.0 - game.delta * beta);
    Ok(RegularProfile {
        horizon: game.horizon,
        delta: game.delta,
        thresholds: Thresholds::Stationary { stationary: beta },
        sender_value: Some(kernel(&game.f, beta)),
        receiver_value: Some(receiver),
        warnings: Vec::new(),
    })
}

/// Regular profile for either horizon.
pub fn solve(game: &GameSpec) -> Result<RegularProfile> {
    match game.horizon {
        Horizon::Finite(_) => thresholds_finite(game),
        Horizon::Infinite => beta_infinite(game),
    }
}

/// Closed-form receiver value `δ^{t-1}/(1 - δβ)·∫_β^1 g` of the stationary regular profile.
pub fn receiver_value_infinite(game: &GameSpec, t: u32) -> Result<f64> {
    game.require_uniform()?;
    if game.horizon != Horizon::Infinite {
        return Err(Error::Unsupported("operation needs the infinite horizon".into()));
    }
    if game.delta >= 1.0 {
        return Err(Error::Unsupported(
            "receiver value is undefined for undiscounted payoffs on the infinite horizon".into(),
        ));
    }
    if t == 0 {
        return Err(Error::InvalidGame("periods are numbered from 1".into()));
    }
    let beta = fixed_point(&game.f, game.delta);
    Ok(game.discount(t) / (1.0 - game.delta * beta) * game.g.area(beta, 1.0))
}

/// A critical discount factor with the scan metadata used to compute it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscountBound {
    /// `"D^T"` with `T` substituted, or `"D"`.
    pub label: String,
    pub value: f64,
    pub grid_step: f64,
    pub refine_width: f64,
    /// Number of negative-to-nonnegative sign changes of the bound functional on the grid.
    pub crossings: usize,
    pub multiple_crossings: bool,
    /// `false` when the functional is negative at `δ = 1`, in which case `value` is 1.
    pub valid_tail: bool,
}

fn scan_bound(label: String, phi: impl Fn(f64) -> f64 + Sync) -> DiscountBound {
    let n = (1.0 / BOUND_GRID_STEP).round() as usize;
    let grid: Vec<f64> = (1..=n).map(|k| k as f64 / n as f64).collect();
    let values: Vec<f64> = grid.par_iter().map(|&d| phi(d)).collect();

    let crossings = values.windows(2).filter(|w| w[0] < 0.0 && w[1] >= 0.0).count();
    let mut bound = DiscountBound {
        label,
        value: 0.0,
        grid_step: BOUND_GRID_STEP,
        refine_width: BOUND_REFINE_WIDTH,
        crossings,
        multiple_crossings: crossings > 1,
        valid_tail: true,
    };
    match values.iter().rposition(|&v| v < 0.0) {
        None => {}
        Some(k) if k == n - 1 => {
            bound.value = 1.0;
            bound.valid_tail = false;
        }
        Some(k) => {
            let (_, hi) = bisect_bracket(grid[k], grid[k + 1], BOUND_REFINE_WIDTH, |d| phi(d) < 0.0);
            bound.value = hi;
        }
    }
    bound
}

/// `D^T`: smallest `d` such that `δ·V(1) ≥ V(β^1(T; δ))` for all `δ ∈ [d, 1]`.
pub fn bound_finite(game: &GameSpec) -> Result<DiscountBound> {
    game.require_uniform()?;
    let horizon = game.finite_horizon()?;
    Ok(bound_for_horizon(&game.f, &game.g, horizon))
}

pub(crate) fn bound_for_horizon(f: &MonotoneMap, g: &MonotoneMap, horizon: u32) -> DiscountBound {
    let top = mean_below(g, 1.0);
    scan_bound(format!("D^{horizon}"), |d| {
        let b1 = finite_chain(f, d, horizon)[0];
        d * top - mean_below(g, b1)
    })
}

/// `D`: smallest `d` such that `δ·V(1) ≥ V(β(δ))` for all `δ ∈ [d, 1]`.
pub fn bound_infinite(game: &GameSpec) -> Result<DiscountBound> {
    game.require_uniform()?;
    let (f, g) = (&game.f, &game.g);
    let top = mean_below(g, 1.0);
    Ok(scan_bound("D".into(), |d| d * top - mean_below(g, fixed_point(f, d))))
}

/// Bound matching the game's horizon.
pub fn bound(game: &GameSpec) -> Result<DiscountBound> {
    match game.horizon {
        Horizon::Finite(_) => bound_finite(game),
        Horizon::Infinite => bound_infinite(game),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// The regular profile is the unique responsive PBE.
    #[serde(rename = "UniqueResponsivePBE")]
    UniqueResponsive,
    /// No responsive PBE exists.
    #[serde(rename = "NoResponsivePBE")]
    NoResponsive,
    /// Neither existence nor non-existence is established.
    #[serde(rename = "RegularNotPBE_Indeterminate")]
    Indeterminate,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::UniqueResponsive => "UniqueResponsivePBE",
            Regime::NoResponsive => "NoResponsivePBE",
            Regime::Indeterminate => "RegularNotPBE_Indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    pub delta: f64,
    pub bound_used: DiscountBound,
    pub witness: Option<String>,
}

/// Places the game in one of the existence regimes.
pub fn classify(game: &GameSpec) -> Result<RegimeVerdict> {
    game.require_uniform()?;
    let delta = game.delta;
    let within = |b: &DiscountBound| delta >= b.value - b.refine_width;
    match game.horizon {
        Horizon::Finite(horizon) => {
            let bound = bound_finite(game)?;
            if within(&bound) {
                return Ok(RegimeVerdict {
                    regime: Regime::UniqueResponsive,
                    delta,
                    bound_used: bound,
                    witness: None,
                });
            }
            let two = if horizon == 2 { bound.clone() } else { bound_for_horizon(&game.f, &game.g, 2) };
            if delta < two.value - two.refine_width && delta < 1.0 {
                let cert = verifier::nonexistence_certificate(game, delta)?;
                match &cert {
                    Certificate::Certified { .. } => {
                        return Ok(RegimeVerdict {
                            regime: Regime::NoResponsive,
                            delta,
                            bound_used: two,
                            witness: Some(cert.describe()),
                        });
                    }
                    Certificate::Refused { reason } => {
                        return Ok(RegimeVerdict {
                            regime: Regime::Indeterminate,
                            delta,
                            bound_used: bound,
                            witness: Some(format!(
                                "delta is below D^2 but no last-period certificate: {reason}"
                            )),
                        });
                    }
                }
            }
            let witness = regular_receiver_witness(game)?;
            Ok(RegimeVerdict {
                regime: Regime::Indeterminate,
                delta,
                bound_used: bound,
                witness: Some(witness),
            })
        }
        Horizon::Infinite => {
            let bound = bound_infinite(game)?;
            if delta >= 1.0 {
                return Ok(RegimeVerdict {
                    regime: Regime::NoResponsive,
                    delta,
                    bound_used: bound,
                    witness: Some(
                        "undiscounted infinite horizon: against any responsive essentially Markov \
                         receiver the sender gains by waiting for states arbitrarily close to 1"
                            .into(),
                    ),
                });
            }
            if within(&bound) {
                return Ok(RegimeVerdict {
                    regime: Regime::UniqueResponsive,
                    delta,
                    bound_used: bound,
                    witness: None,
                });
            }
            let witness = regular_receiver_witness(game)?;
            Ok(RegimeVerdict {
                regime: Regime::Indeterminate,
                delta,
                bound_used: bound,
                witness: Some(witness),
            })
        }
    }
}

/// Describes whether the regular profile survives the receiver's one-shot checks.
fn regular_receiver_witness(game: &GameSpec) -> Result<String> {
    let profile = solve(game)?.to_strategy();
    let sites = verifier::check_receiver(game, &profile)?;
    let worst = sites
        .iter()
        .filter(|s| !s.off_path)
        .max_by(|a, b| a.gap.total_cmp(&b.gap));
    Ok(match worst {
        Some(s) if s.gap > verifier::DEFAULT_TOL => format!(
            "regular profile is not a PBE: at period {} on {} the receiver gains {:.3e} by \
             deviating (quit value {:.6}, continuation {:.6})",
            s.period, s.message, s.gap, s.quit_value, s.continue_value
        ),
        _ => "regular profile passes the receiver's one-shot checks, but uniqueness is not \
              established below the bound"
            .to_string(),
    })
}

/// `β^t(T)` for `T = t..=t_max` together with the infinite-horizon limit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub period: u32,
    /// `(T, β^t(T))` rows.
    pub rows: Vec<(u32, f64)>,
    pub limit: f64,
}

pub fn threshold_convergence(game: &GameSpec, t: u32, t_max: u32) -> Result<ConvergenceTable> {
    game.require_uniform()?;
    if t == 0 || t_max < t {
        return Err(Error::InvalidGame(format!(
            "need 1 <= t <= t_max, got t = {t}, t_max = {t_max}"
        )));
    }
    let f = &game.f;
    // chain[n - 1] = β^1(n)
    let mut chain = vec![0.0];
    for _ in 1..=(t_max - t) {
        let last = *chain.last().unwrap();
        chain.push(step(f, game.delta, last));
    }
    let mut rows = Vec::with_capacity(chain.len());
    for horizon in t..=t_max {
        let value = finite_chain(f, game.delta, horizon)[t as usize - 1];
        let shifted = chain[(horizon - t) as usize];
        if (value - shifted).abs() > 1e-12 {
            return Err(Error::Unsupported(format!(
                "threshold shift identity failed at T = {horizon}: {value} vs {shifted}"
            )));
        }
        rows.push((horizon, value));
    }
    Ok(ConvergenceTable { period: t, rows, limit: fixed_point(f, game.delta) })
}
