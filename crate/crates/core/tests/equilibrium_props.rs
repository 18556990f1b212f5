mod common;

use common::{game_strategy, map_strategy, rel_close};
use proptest::prelude::*;
use stopgame::equilibrium::{self, Thresholds};
use stopgame::{GameSpec, Horizon};

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(128)
}

/// Regular thresholds `β^1..β^T` of `game` with its horizon replaced by `t`.
fn chain(game: &GameSpec, t: u32) -> Vec<f64> {
    match equilibrium::solve(&game.with_horizon(Horizon::Finite(t)).unwrap()).unwrap().thresholds {
        Thresholds::Finite(v) => v,
        other => panic!("expected per-period thresholds, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn kernel_and_step_increase(o in game_strategy(0.05..1.0), x in 0.0f64..0.99, dx in 0.005f64..0.5) {
        let y = (x + dx).min(1.0);
        let game = o.spec(Horizon::Infinite);
        let (gx, gy) = (equilibrium::sender_kernel(&game, x).unwrap(), equilibrium::sender_kernel(&game, y).unwrap());
        prop_assert!(gx < gy, "G({x}) = {gx} >= G({y}) = {gy}");
        let (hx, hy) = (equilibrium::threshold_step(&game, x).unwrap(), equilibrium::threshold_step(&game, y).unwrap());
        prop_assert!(hx < hy, "H({x}) = {hx} >= H({y}) = {hy}");
        prop_assert!(rel_close(gx, o.kernel(x), 1e-10));
        prop_assert!((hx - o.step(x)).abs() < 1e-9);
    }

    #[test]
    fn step_minus_identity_changes_sign_once(o in game_strategy(0.05..0.999)) {
        let game = o.spec(Horizon::Infinite);
        let beta = equilibrium::solve(&game).unwrap().thresholds.first();
        let n = 400;
        let mut changes = 0;
        let mut prev = equilibrium::threshold_step(&game, 0.0).unwrap();
        prop_assert!(prev > 0.0);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            let d = equilibrium::threshold_step(&game, x).unwrap() - x;
            if (prev > 0.0) != (d > 0.0) {
                changes += 1;
            }
            if (x - beta).abs() > 1e-9 {
                prop_assert_eq!(d > 0.0, x < beta, "sign of H(x) - x at x = {} with beta = {}", x, beta);
            }
            prev = d;
        }
        prop_assert_eq!(changes, 1);
        prop_assert!((beta - o.fixed_point()).abs() < 1e-9);
    }

    #[test]
    fn threshold_chain_strictly_decreases(o in game_strategy(0.05..0.999), t in 2u32..15) {
        let game = o.spec(Horizon::Finite(t));
        let b = chain(&game, t);
        let beta = equilibrium::solve(&game.with_horizon(Horizon::Infinite).unwrap()).unwrap().thresholds.first();
        prop_assert_eq!(b[t as usize - 1], 0.0);
        // The chain contracts geometrically towards beta; once it lands on a fixed point of the
        // computed step map, equal neighbours are the exact floating-point answer.
        let ulps = |x: f64| 8.0 * f64::EPSILON * x;
        let step = |x: f64| equilibrium::threshold_step(&game, x).unwrap();
        let stalled = |x: f64| (step(x) - x).abs() <= ulps(x);
        let resolved = |hi: f64, lo: f64| hi > lo || (hi - lo <= ulps(hi) && stalled(lo));
        prop_assert!(beta < 1.0);
        // beta is only bisected to a finite width; b[0] must not lie past the crossing of H.
        prop_assert!(b[0] < beta + equilibrium::FIXED_POINT_WIDTH);
        prop_assert!(step(b[0]) >= b[0] - ulps(b[0]));
        for w in b.windows(2) {
            prop_assert!(resolved(w[0], w[1]), "chain not strictly decreasing: {:?}", b);
        }
        for (x, y) in b.iter().zip(o.thresholds(t)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn threshold_depends_only_on_periods_left(o in game_strategy(0.05..0.999), big in 2u32..16, k in 0u32..15) {
        let game = o.spec(Horizon::Finite(big));
        let t = 1 + k % big;
        let long = chain(&game, big);
        let short = chain(&game, big - t + 1);
        prop_assert_eq!(long[t as usize - 1], short[0]);
        let table = equilibrium::threshold_convergence(&game, t, big).unwrap();
        prop_assert_eq!(table.rows.last().unwrap().1, long[t as usize - 1]);
    }

    #[test]
    fn averaging_inequality(m in map_strategy(), p in prop::array::uniform4(0.0f64..1.0)) {
        let mut q = p;
        q.sort_by(f64::total_cmp);
        let [a, b, c, d] = q;
        prop_assume!(c - b > 1e-6 && c - a > 1e-6 && d - b > 1e-6);
        let g = m.to_map();
        let left = g.integrate(a, c).unwrap() / (c - a);
        let right = g.integrate(b, d).unwrap() / (d - b);
        prop_assert!(left <= right, "mean on [{a}, {c}] = {left} exceeds mean on [{b}, {d}] = {right}");
        if a < b || c < d {
            prop_assert!(left < right);
        }
    }

    #[test]
    fn fixed_point_rises_to_one(o in game_strategy(0.05..0.9), bumps in prop::collection::vec(0.0f64..1.0, 6)) {
        let game = o.spec(Horizon::Infinite);
        let mut deltas: Vec<f64> = bumps.iter().map(|u| o.delta + (1.0 - o.delta) * u).collect();
        deltas.push(o.delta);
        deltas.sort_by(f64::total_cmp);
        deltas.dedup();
        let betas: Vec<f64> = deltas
            .iter()
            .map(|&d| equilibrium::solve(&game.with_delta(d).unwrap()).unwrap().thresholds.first())
            .collect();
        for w in betas.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-12, "beta not increasing in delta: {:?} at {:?}", betas, deltas);
        }
        let near = equilibrium::solve(&game.with_delta(1.0 - 1e-6).unwrap()).unwrap().thresholds.first();
        prop_assert!(near > 0.99, "beta = {near} at delta = 1 - 1e-6");
        let at_one = equilibrium::solve(&game.with_delta(1.0).unwrap()).unwrap();
        prop_assert_eq!(at_one.thresholds.first(), 1.0);
        prop_assert!(!at_one.warnings.is_empty());
    }

    #[test]
    fn regular_values_match_reference(o in game_strategy(0.05..1.0), t in 1u32..12) {
        let game = o.spec(Horizon::Finite(t));
        let sol = equilibrium::solve(&game).unwrap();
        let (s, r) = o.values(t);
        prop_assert!(rel_close(sol.sender_value.unwrap(), s, 1e-9));
        prop_assert!(rel_close(sol.receiver_value.unwrap(), r, 1e-9));
    }

    #[test]
    fn stationary_values_match_reference(o in game_strategy(0.05..0.999)) {
        let game = o.spec(Horizon::Infinite);
        let sol = equilibrium::solve(&game).unwrap();
        let (s, r) = o.stationary_values();
        prop_assert!(rel_close(sol.sender_value.unwrap(), s, 1e-8));
        prop_assert!(rel_close(sol.receiver_value.unwrap(), r, 1e-8));
        // The stationary sender value is also f(β)/δ.
        let beta = sol.thresholds.first();
        prop_assert!(rel_close(sol.sender_value.unwrap(), o.f.eval(beta) / o.delta, 1e-8));
    }

    #[test]
    fn bound_separates_sign_of_functional(o in game_strategy(0.5..0.6), t in 1u32..6) {
        let game = o.spec(Horizon::Finite(t));
        let bound = equilibrium::bound(&game).unwrap();
        prop_assert!((0.0..=1.0).contains(&bound.value));
        let phi = |d: f64| {
            let b1 = o.with_delta(d).thresholds(t)[0];
            d * o.mean_below(1.0) - o.mean_below(b1)
        };
        // Above the bound the functional is nonnegative on the grid.
        for k in 1..=50 {
            let d = bound.value + (1.0 - bound.value) * k as f64 / 50.0;
            if d > bound.value + 1e-6 {
                prop_assert!(phi(d) >= -1e-10, "phi({d}) = {} above bound {}", phi(d), bound.value);
            }
        }
        if bound.value > 1e-3 {
            prop_assert!(phi(bound.value - 1e-6) < 1e-9);
        }
    }
}

trait WithDelta {
    fn with_delta(&self, d: f64) -> Self;
}

impl WithDelta for common::OracleGame {
    fn with_delta(&self, d: f64) -> Self {
        Self { delta: d, ..self.clone() }
    }
}

#[test]
fn example_two_bounds_vanish() {
    let o = common::example_two();
    for t in 1..=10 {
        let b = equilibrium::bound(&o.spec(Horizon::Finite(t))).unwrap();
        assert_eq!(b.value, 0.0, "T = {t}");
        assert_eq!(b.crossings, 0);
    }
    assert_eq!(equilibrium::bound(&o.spec(Horizon::Infinite)).unwrap().value, 0.0);
}

#[test]
fn example_one_bounds() {
    let o = common::example_one();
    let d2 = equilibrium::bound(&o.spec(Horizon::Finite(2))).unwrap();
    assert!((d2.value - 1.0 / 3.0).abs() < 1e-6);
    assert!(!d2.multiple_crossings && d2.valid_tail);
    let d = equilibrium::bound(&o.spec(Horizon::Infinite)).unwrap();
    // δ = β at the bound, and β solves 2β³ - 3β + 1 = 0.
    let root = common::bisect(|x| -(2.0 * x * x * x - 3.0 * x + 1.0), 0.0, 0.9);
    assert!((d.value - root).abs() < 1e-6);
    assert!((root - (3f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
}
