//! Sender-receiver stopping games.
//!
//! Each period a state is drawn iid on `[0, 1]`. An informed sender observes it and
//! recommends either continuing (`m_c`) or quitting (`m_q`); the receiver sees only the
//! message and either continues or quits. Both players are paid by strictly increasing
//! characteristic functions of the state at the quitting period, discounted by `δ`.
//!
//! The crate is organised bottom-up:
//!
//! * [`fnspace`]: strictly increasing maps on the unit interval (payoff functions, CDFs).
//! * [`equilibrium`]: the regular (sincere sender, obedient receiver) profile, the critical
//!   discount bounds, and regime classification.
//! * [`profiles`]: general threshold/Markov profiles and seeded Monte Carlo playouts.
//! * [`verifier`]: an independent one-shot-deviation check of a profile.
//! * [`transform`]: reduction of a game with an arbitrary continuous state law to a
//!   uniform-state game.
//! * [`cli`]: the `stopgame` command-line front end.

pub mod cli;
pub mod equilibrium;
mod error;
pub mod fnspace;
mod numeric;
pub mod profiles;
pub mod transform;
pub mod verifier;

pub use equilibrium::{GameSpec, Horizon, RegimeVerdict, RegularProfile};
pub use error::{Error, Result};
pub use fnspace::{MonotoneMap, StateDistribution};
pub use profiles::{StrategyProfile, SimulationResult};
pub use verifier::DeviationReport;
