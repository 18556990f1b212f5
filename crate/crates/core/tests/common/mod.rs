//! Reference computations used to check the library. Nothing here calls the library's own
//! integration, inversion or recursion code: maps are sums of power terms evaluated directly,
//! integrals use adaptive Simpson, inverses use plain bisection.

#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use stopgame::{GameSpec, Horizon, MonotoneMap};

/// `Σ c_i·x^{e_i}` with `c_i > 0`, `e_i > 0`.
#[derive(Clone, Debug)]
pub struct OracleMap {
    pub terms: Vec<(f64, f64)>,
    pub poly: bool,
}

impl OracleMap {
    pub fn power(c: f64, e: f64) -> Self {
        Self { terms: vec![(c, e)], poly: false }
    }

    /// Polynomial with coefficients `coeffs[i]` of `x^{i+1}`.
    pub fn poly(coeffs: &[f64]) -> Self {
        Self {
            terms: coeffs.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(i, &c)| (c, i as f64 + 1.0)).collect(),
            poly: true,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, e)| c * x.powf(e)).sum()
    }

    pub fn integral(&self, a: f64, b: f64) -> f64 {
        simpson(|x| self.eval(x), a, b)
    }

    pub fn inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y >= self.eval(1.0) {
            return 1.0;
        }
        bisect(|x| self.eval(x) - y, 0.0, 1.0)
    }

    pub fn to_map(&self) -> MonotoneMap {
        if self.poly {
            let degree = self.terms.iter().map(|t| t.1 as usize).max().unwrap();
            let mut coeffs = vec![0.0; degree + 1];
            for &(c, e) in &self.terms {
                coeffs[e as usize] = c;
            }
            MonotoneMap::poly(coeffs).unwrap()
        } else {
            let (c, e) = self.terms[0];
            MonotoneMap::power(c, e).unwrap()
        }
    }
}

fn simpson_rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature to about `1e-14` absolute accuracy.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // Start from 16 panels so that narrow features are not missed.
    let n = 16;
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            simpson_rec(&f, x0, x1, f0, fm, f1, whole, 1e-15, 48)
        })
        .sum()
}

/// Root of an increasing function with `h(lo) < 0 < h(hi)`.
pub fn bisect(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reference game in which every quantity is recomputed from first principles.
#[derive(Clone, Debug)]
pub struct OracleGame {
    pub f: OracleMap,
    pub g: OracleMap,
    pub delta: f64,
}

impl OracleGame {
    pub fn kernel(&self, x: f64) -> f64 {
        x * self.f.eval(x) + self.f.integral(x, 1.0)
    }

    pub fn step(&self, x: f64) -> f64 {
        self.f.inverse(self.delta * self.kernel(x))
    }

    pub fn mean_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            self.g.integral(0.0, x) / x
        }
    }

    /// `β^1..β^T`.
    pub fn thresholds(&self, horizon: u32) -> Vec<f64> {
        let mut b = vec![0.0; horizon as usize];
        for t in (0..horizon as usize - 1).rev() {
            b[t] = self.step(b[t + 1]);
        }
        b
    }

    pub fn fixed_point(&self) -> f64 {
        if self.delta >= 1.0 {
            return 1.0;
        }
        bisect(|x| x - self.step(x), 0.0, 1.0)
    }

    /// Period-1 `(U_s, U_r)` of the regular profile on a finite horizon.
    pub fn values(&self, horizon: u32) -> (f64, f64) {
        let b = self.thresholds(horizon);
        let n = horizon as usize;
        let w = |t: usize| self.delta.powi(t as i32 - 1);
        let (mut s, mut r) = (w(n) * self.f.integral(0.0, 1.0), w(n) * self.g.integral(0.0, 1.0));
        for t in (1..n).rev() {
            let a = b[t - 1];
            s = a * s + w(t) * self.f.integral(a, 1.0);
            r = a * r + w(t) * self.g.integral(a, 1.0);
        }
        (s, r)
    }

    /// Period-1 `(U_s, U_r)` of the stationary regular profile.
    pub fn stationary_values(&self) -> (f64, f64) {
        let b = self.fixed_point();
        let k = 1.0 / (1.0 - self.delta * b);
        (k * self.f.integral(b, 1.0), k * self.g.integral(b, 1.0))
    }

    pub fn spec(&self, horizon: Horizon) -> GameSpec {
        GameSpec::new(horizon, self.delta, self.f.to_map(), self.g.to_map()).unwrap()
    }
}

pub fn example_one() -> OracleGame {
    OracleGame { f: OracleMap::power(1.0, 2.0), g: OracleMap::power(1.0, 1.0), delta: 0.8 }
}

pub fn example_two() -> OracleGame {
    OracleGame { f: OracleMap::power(1.0, 2.0), g: OracleMap::power(1.0, 3.0), delta: 0.8 }
}

pub fn random_map<R: Rng>(rng: &mut R) -> OracleMap {
    if rng.gen_bool(0.5) {
        OracleMap::power(rng.gen_range(0.5..2.0), rng.gen_range(0.5..3.0))
    } else {
        let degree = rng.gen_range(1..=3);
        let mut coeffs: Vec<f64> = (0..degree).map(|_| rng.gen_range(0.0..2.0)).collect();
        coeffs[0] = rng.gen_range(0.1..2.0);
        OracleMap::poly(&coeffs)
    }
}

pub fn random_game<R: Rng>(rng: &mut R, delta: std::ops::Range<f64>) -> OracleGame {
    OracleGame { f: random_map(rng), g: random_map(rng), delta: rng.gen_range(delta) }
}

pub fn map_strategy() -> impl Strategy<Value = OracleMap> {
    prop_oneof![
        (0.5f64..2.0, 0.5f64..3.0).prop_map(|(c, e)| OracleMap::power(c, e)),
        (0.1f64..2.0, 0.0f64..2.0, 0.0f64..2.0).prop_map(|(a, b, c)| OracleMap::poly(&[a, b, c])),
    ]
}

pub fn game_strategy(delta: std::ops::Range<f64>) -> impl Strategy<Value = OracleGame> {
    (map_strategy(), map_strategy(), delta).prop_map(|(f, g, delta)| OracleGame { f, g, delta })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}
