//! Reduction of a game with state law `F` to an equivalent game with uniform states.
//!
//! Writing `θ = F⁻¹(u)`, the reduced game uses `f̂ = f∘F⁻¹` and `ĝ = g∘F⁻¹` on uniform `u`.
//! A sender who recommends continuing iff `θ < α` in the original game recommends continuing
//! iff `u < F(α)` in the reduced one, and a reduced threshold `β̂` corresponds to `F⁻¹(β̂)`.
//! Receiver responses are unchanged.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, DiscountBound, GameSpec, RegimeVerdict, RegularProfile, Thresholds};
use crate::error::{Error, Result};
use crate::fnspace::{MonotoneMap, StateDistribution};
use crate::profiles::{SenderRule, StrategyProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    ToOriginal,
    ToUniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformedGame {
    pub original: GameSpec,
    pub uniform_game: GameSpec,
}

/// One row of the threshold correspondence table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub uniform: f64,
    pub original: f64,
}

/// Builds the uniform-state game `(f∘F⁻¹, g∘F⁻¹)` with the same horizon and discount factor.
pub fn to_uniform(game: &GameSpec) -> Result<TransformedGame> {
    let uniform_game = match game.distribution() {
        StateDistribution::Uniform => game.clone(),
        StateDistribution::Cdf(cdf) => GameSpec::new(
            game.horizon(),
            game.delta(),
            MonotoneMap::composed(game.f().clone(), cdf.clone())?,
            MonotoneMap::composed(game.g().clone(), cdf.clone())?,
        )?,
    };
    Ok(TransformedGame { original: game.clone(), uniform_game })
}

impl TransformedGame {
    /// `F(α)` toward the uniform game, `F⁻¹(β̂)` back to the original one.
    pub fn map_threshold(&self, threshold: f64, direction: Direction) -> Result<f64> {
        let dist = self.original.distribution();
        match direction {
            Direction::ToUniform => dist.cdf(threshold),
            Direction::ToOriginal => dist.quantile(threshold),
        }
    }

    /// Maps the sender's thresholds; the receiver and the tie rule carry over unchanged.
    pub fn map_profile(&self, profile: &StrategyProfile, direction: Direction) -> Result<StrategyProfile> {
        let sender_thresholds = match &profile.sender_thresholds {
            SenderRule::PerPeriod(v) => SenderRule::PerPeriod(
                v.iter().map(|&a| self.map_threshold(a, direction)).collect::<Result<_>>()?,
            ),
            SenderRule::Stationary { stationary } => {
                SenderRule::Stationary { stationary: self.map_threshold(*stationary, direction)? }
            }
        };
        Ok(StrategyProfile { sender_thresholds, ..profile.clone() })
    }

    /// Correspondence between uniform-game and original-game thresholds.
    pub fn threshold_table(&self, uniform: &[f64]) -> Result<Vec<ThresholdRow>> {
        uniform
            .iter()
            .map(|&u| Ok(ThresholdRow { uniform: u, original: self.map_threshold(u, Direction::ToOriginal)? }))
            .collect()
    }

    /// `f̂` and `ĝ` sampled at `knots` equally spaced points, as `(x, f̂(x), ĝ(x))`.
    pub fn materialize(&self, knots: usize) -> Result<Vec<[f64; 3]>> {
        if knots < 2 {
            return Err(Error::Unsupported("at least two knots are required".into()));
        }
        let n = knots - 1;
        (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                Ok([x, self.uniform_game.f().eval(x)?, self.uniform_game.g().eval(x)?])
            })
            .collect()
    }
}

/// Free-function form of [`TransformedGame::map_threshold`].
pub fn map_threshold(tg: &TransformedGame, threshold: f64, direction: Direction) -> Result<f64> {
    tg.map_threshold(threshold, direction)
}

/// Regular profile of a game with any state law, with thresholds in original state units.
pub fn solve_general(game: &GameSpec) -> Result<RegularProfile> {
    if game.distribution().is_uniform() {
        return equilibrium::solve(game);
    }
    let tg = to_uniform(game)?;
    let mut profile = equilibrium::solve(&tg.uniform_game)?;
    profile.thresholds = match profile.thresholds {
        Thresholds::Finite(v) => Thresholds::Finite(
            v.into_iter().map(|b| tg.map_threshold(b, Direction::ToOriginal)).collect::<Result<_>>()?,
        ),
        Thresholds::Stationary { stationary } => {
            Thresholds::Stationary { stationary: tg.map_threshold(stationary, Direction::ToOriginal)? }
        }
    };
    Ok(profile)
}

/// Critical discount bound computed on the uniform reduction.
pub fn bound_general(game: &GameSpec) -> Result<DiscountBound> {
    equilibrium::bound(&to_uniform(game)?.uniform_game)
}

/// Regime classification computed on the uniform reduction.
pub fn classify_general(game: &GameSpec) -> Result<RegimeVerdict> {
    equilibrium::classify(&to_uniform(game)?.uniform_game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::Horizon;
    use crate::profiles::Response;

    fn game(horizon: Horizon, delta: f64, k: f64) -> GameSpec {
        GameSpec::new(horizon, delta, MonotoneMap::identity(), MonotoneMap::identity())
            .unwrap()
            .with_distribution(StateDistribution::power(k).unwrap())
    }

    #[test]
    fn uniform_is_identity() {
        let g = GameSpec::new(Horizon::Finite(3), 0.8, MonotoneMap::power(1.0, 2.0).unwrap(), MonotoneMap::identity()).unwrap();
        let tg = to_uniform(&g).unwrap();
        assert_eq!(tg.uniform_game, g);
        assert_eq!(tg.map_threshold(0.3, Direction::ToOriginal).unwrap(), 0.3);
        assert_eq!(tg.map_threshold(0.3, Direction::ToUniform).unwrap(), 0.3);
        assert_eq!(solve_general(&g).unwrap(), equilibrium::solve(&g).unwrap());
    }

    #[test]
    fn square_cdf_gives_root_map() {
        let tg = to_uniform(&game(Horizon::Infinite, 0.8, 2.0)).unwrap();
        for &x in &[0.0, 0.04, 0.25, 0.5, 1.0] {
            assert!((tg.uniform_game.f().eval(x).unwrap() - f64::sqrt(x)).abs() < 1e-15);
        }
        assert!((tg.map_threshold(0.25, Direction::ToOriginal).unwrap() - 0.5).abs() < 1e-15);
        let back = tg.map_threshold(tg.map_threshold(0.37, Direction::ToOriginal).unwrap(), Direction::ToUniform).unwrap();
        assert!((back - 0.37).abs() < 1e-12);
    }

    #[test]
    fn solve_general_maps_fixed_point_back() {
        let g = game(Horizon::Infinite, 0.8, 2.0);
        let sol = solve_general(&g).unwrap();
        // √b = 0.8·(b^{3/2} + (2/3)(1 − b^{3/2}))
        let h = |b: f64| 0.8 * (b.powf(1.5) + 2.0 / 3.0 * (1.0 - b.powf(1.5))) - b.sqrt();
        let (mut lo, mut hi) = (1e-9, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if h(mid) > 0.0 { lo = mid } else { hi = mid }
        }
        let bhat = 0.5 * (lo + hi);
        // back in state units the threshold is F⁻¹(b̂) = √b̂
        assert!((sol.thresholds.first() - bhat.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn profile_mapping_keeps_receiver() {
        let tg = to_uniform(&game(Horizon::Infinite, 0.8, 3.0)).unwrap();
        let p = StrategyProfile::stationary(0.5, Response { p: 0.9, q: 0.1 });
        let q = tg.map_profile(&p, Direction::ToUniform).unwrap();
        assert_eq!(q.receiver, p.receiver);
        assert_eq!(q.sender_thresholds, SenderRule::Stationary { stationary: 0.125 });
    }

    #[test]
    fn classification_agrees_on_both_paths() {
        let g = game(Horizon::Finite(3), 0.6, 2.0);
        let tg = to_uniform(&g).unwrap();
        assert_eq!(classify_general(&g).unwrap(), equilibrium::classify(&tg.uniform_game).unwrap());
        assert!(equilibrium::classify(&g).is_err());
    }
}
