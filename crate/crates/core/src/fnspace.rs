//! Strictly increasing continuous maps on the unit interval.
//!
//! A [`MonotoneMap`] is any function `m: [0, 1] -> [0, ∞)` with `m(0) = 0` that is strictly
//! increasing. It backs the characteristic functions of both players and the CDF of the
//! state distribution. Four representations are supported:
//!
//! * `power`: `c·x^p` with `c, p > 0`;
//! * `poly`: a polynomial with zero constant term, increasing on `[0, 1]`;
//! * `table`: knots through `(0, 0)` and `x = 1`, interpolated by a monotone piecewise cubic;
//! * `composed`: `outer(F⁻¹(x))` for a CDF `F`, kept exact rather than resampled.
//!
//! Values are immutable after construction and all operations are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;

/// Slack allowed when an argument is checked against `[0, 1]` or a map's range.
pub const DOMAIN_SLACK: f64 = 1e-12;
/// Final bracket width of inverse bisection.
pub const INVERSE_WIDTH: f64 = 1e-12;
/// Absolute tolerance of adaptive quadrature for maps without a closed-form integral.
pub const QUADRATURE_TOL: f64 = 1e-10;
/// Resolution of the monotonicity check performed at construction.
pub const VALIDATION_GRID: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct MonotoneMap {
    kind: Kind,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Power { coeff: f64, exponent: f64 },
    Poly { coeffs: Vec<f64> },
    Table(MonotoneCubic),
    Composed { outer: Box<MonotoneMap>, cdf: Box<MonotoneMap> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MapRepr {
    Power { coeff: f64, exponent: f64 },
    Poly { coeffs: Vec<f64> },
    Table { points: Vec<[f64; 2]> },
    Composed { outer: Box<MonotoneMap>, cdf: Box<MonotoneMap> },
}

impl TryFrom<MapRepr> for MonotoneMap {
    type Error = Error;

    fn try_from(repr: MapRepr) -> Result<Self> {
        match repr {
            MapRepr::Power { coeff, exponent } => MonotoneMap::power(coeff, exponent),
            MapRepr::Poly { coeffs } => MonotoneMap::poly(coeffs),
            MapRepr::Table { points } => MonotoneMap::table(points),
            MapRepr::Composed { outer, cdf } => MonotoneMap::composed(*outer, *cdf),
        }
    }
}

impl From<MonotoneMap> for MapRepr {
    fn from(map: MonotoneMap) -> Self {
        match map.kind {
            Kind::Power { coeff, exponent } => MapRepr::Power { coeff, exponent },
            Kind::Poly { coeffs } => MapRepr::Poly { coeffs },
            Kind::Table(t) => MapRepr::Table { points: t.points() },
            Kind::Composed { outer, cdf } => MapRepr::Composed { outer, cdf },
        }
    }
}

fn check_unit(x: f64) -> Result<f64> {
    if !x.is_finite() || x < -DOMAIN_SLACK || x > 1.0 + DOMAIN_SLACK {
        return Err(Error::Domain { value: x });
    }
    Ok(x.clamp(0.0, 1.0))
}

impl MonotoneMap {
    /// `coeff · x^exponent`.
    pub fn power(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::InvalidMap(format!("power coefficient must be positive, got {coeff}")));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidMap(format!("power exponent must be positive, got {exponent}")));
        }
        Ok(Self { kind: Kind::Power { coeff, exponent } })
    }

    /// The identity map, which is also the uniform CDF.
    pub fn identity() -> Self {
        Self { kind: Kind::Power { coeff: 1.0, exponent: 1.0 } }
    }

    /// Polynomial `Σ coeffs[i]·x^i`; `coeffs[0]` must be zero.
    pub fn poly(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidMap("polynomial needs at least a linear term".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMap("polynomial coefficients must be finite".into()));
        }
        if coeffs[0] != 0.0 {
            return Err(Error::InvalidMap(format!(
                "polynomial constant term must be 0, got {}",
                coeffs[0]
            )));
        }
        let map = Self { kind: Kind::Poly { coeffs } };
        map.validate_slopes()?;
        Ok(map)
    }

    /// Monotone piecewise-cubic interpolant through `points`.
    ///
    /// The knots must start at `(0, 0)`, end at `x = 1`, and be strictly increasing in both
    /// coordinates.
    pub fn table(points: Vec<[f64; 2]>) -> Result<Self> {
        let cubic = MonotoneCubic::new(points)?;
        let map = Self { kind: Kind::Table(cubic) };
        map.validate_slopes()?;
        Ok(map)
    }

    /// `outer(cdf⁻¹(x))`.
    ///
    /// Evaluation always runs through the two factors, so a composed map agrees bit for bit
    /// with evaluating `outer` at the quantile. When both factors are power maps, integrals use
    /// the closed form `c·a^(-p/r)·x^(p/r)`.
    pub fn composed(outer: MonotoneMap, cdf: MonotoneMap) -> Result<Self> {
        check_cdf(&cdf)?;
        if cdf.is_identity() {
            return Ok(outer);
        }
        Ok(Self { kind: Kind::Composed { outer: Box::new(outer), cdf: Box::new(cdf) } })
    }

    /// Power-map form of a composition of two power maps.
    fn collapsed(&self) -> Option<(f64, f64)> {
        let Kind::Composed { outer, cdf } = &self.kind else { return None };
        let (c, p) = outer.as_power()?;
        let (a, r) = cdf.as_power()?;
        let exponent = p / r;
        Some((c * a.powf(-exponent), exponent))
    }

    /// Samples the map on `knots` equally spaced points and returns the monotone table through
    /// them.
    pub fn sampled(&self, knots: usize) -> Result<Self> {
        if knots < 2 {
            return Err(Error::InvalidMap("a table needs at least two knots".into()));
        }
        let n = knots - 1;
        let points = (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                [x, self.value(x)]
            })
            .collect();
        MonotoneMap::table(points)
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Power { .. } => "power",
            Kind::Poly { .. } => "poly",
            Kind::Table(_) => "table",
            Kind::Composed { .. } => "composed",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, Kind::Power { coeff, exponent } if coeff == 1.0 && exponent == 1.0)
    }

    /// `(coeff, exponent)` when the map is a power map.
    pub fn as_power(&self) -> Option<(f64, f64)> {
        match self.kind {
            Kind::Power { coeff, exponent } => Some((coeff, exponent)),
            _ => None,
        }
    }

    /// Value at 1, i.e. the top of the range.
    pub fn upper(&self) -> f64 {
        self.value(1.0)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.value(check_unit(x)?))
    }

    /// `∫_a^b m(θ) dθ`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let (a, b) = (check_unit(a)?, check_unit(b)?);
        if a > b {
            return Err(Error::ReversedInterval { a, b });
        }
        Ok(self.area(a, b))
    }

    /// The unique `x` with `m(x) = y`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        let hi = self.upper();
        if !y.is_finite() || y < -DOMAIN_SLACK || y > hi + DOMAIN_SLACK {
            return Err(Error::Range { value: y, lo: 0.0, hi });
        }
        Ok(self.preimage(y.clamp(0.0, hi)))
    }

    /// Unchecked evaluation; `x` is clamped into `[0, 1]`.
    pub(crate) fn value(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match &self.kind {
            Kind::Power { coeff, exponent } => coeff * x.powf(*exponent),
            Kind::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c),
            Kind::Table(t) => t.eval(x),
            Kind::Composed { outer, cdf } => outer.value(cdf.preimage(x)),
        }
    }

    /// Unchecked `∫_a^b`, assuming `0 ≤ a ≤ b ≤ 1`.
    pub(crate) fn area(&self, a: f64, b: f64) -> f64 {
        if a >= b {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { coeff, exponent } => {
                let e = exponent + 1.0;
                coeff * (b.powf(e) - a.powf(e)) / e
            }
            Kind::Poly { coeffs } => {
                let anti = |x: f64| {
                    coeffs
                        .iter()
                        .enumerate()
                        .rev()
                        .fold(0.0, |acc, (i, c)| acc * x + c / (i as f64 + 1.0))
                        * x
                };
                anti(b) - anti(a)
            }
            Kind::Table(t) => t.integrate(a, b),
            Kind::Composed { .. } => {
                if let Some((coeff, exponent)) = self.collapsed() {
                    let e = exponent + 1.0;
                    return coeff * (b.powf(e) - a.powf(e)) / e;
                }
                quadrature::double_exponential::integrate(|x| self.value(x), a, b, QUADRATURE_TOL)
                    .integral
            }
        }
    }

    /// Unchecked inverse; `y` is clamped into the range.
    pub(crate) fn preimage(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Power { coeff, exponent } => (y / coeff).powf(1.0 / exponent).min(1.0),
            Kind::Table(t) => t.inverse(y),
            Kind::Composed { outer, cdf } => cdf.value(outer.preimage(y)),
            Kind::Poly { .. } => {
                if y >= self.upper() {
                    return 1.0;
                }
                bisect(0.0, 1.0, INVERSE_WIDTH, |x| self.value(x) < y)
            }
        }
    }

    fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Poly { coeffs } => Some(
                coeffs
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (i, c)| acc * x + c * i as f64),
            ),
            Kind::Table(t) => Some(t.derivative(x)),
            _ => None,
        }
    }

    /// Derivative must be positive on the interior of a fine grid (it may vanish at the end
    /// points, e.g. `x²` at 0), and values must strictly increase along the grid.
    fn validate_slopes(&self) -> Result<()> {
        let n = VALIDATION_GRID;
        let mut prev = self.value(0.0);
        for i in 1..=n {
            let x = i as f64 / n as f64;
            if i < n {
                if let Some(d) = self.derivative(x) {
                    if !(d > 0.0) {
                        return Err(Error::InvalidMap(format!(
                            "{} map has non-positive slope {d} at x = {x}",
                            self.kind_name()
                        )));
                    }
                }
            }
            let v = self.value(x);
            if !(v > prev) {
                return Err(Error::InvalidMap(format!(
                    "{} map is not strictly increasing near x = {x}",
                    self.kind_name()
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

fn check_cdf(cdf: &MonotoneMap) -> Result<()> {
    let top = cdf.upper();
    if (top - 1.0).abs() > DOMAIN_SLACK {
        return Err(Error::InvalidDistribution(format!("CDF must equal 1 at 1, got {top}")));
    }
    Ok(())
}

/// Monotone cubic Hermite interpolant with harmonic-mean (Fritsch-Butland) slopes.
///
/// With strictly increasing data every interior slope is positive and each piece is
/// nondecreasing, so the interpolant stays within `[y_i, y_{i+1}]` on every knot interval.
#[derive(Clone, Debug, PartialEq)]
struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidMap("table needs at least two knots".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMap("table knots must be finite".into()));
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|p| (p[0], p[1])).unzip();
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::InvalidMap(format!(
                "table must start at (0, 0), got ({}, {})",
                xs[0], ys[0]
            )));
        }
        if *xs.last().unwrap() != 1.0 {
            return Err(Error::InvalidMap(format!(
                "table must end at x = 1, got {}",
                xs.last().unwrap()
            )));
        }
        for w in points.windows(2) {
            if !(w[1][0] > w[0][0]) || !(w[1][1] > w[0][1]) {
                return Err(Error::InvalidMap(format!(
                    "table knots must be strictly increasing in both coordinates: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        let slopes = pchip_slopes(&xs, &ys);
        Ok(Self { xs, ys, slopes })
    }

    fn points(&self) -> Vec<[f64; 2]> {
        self.xs.iter().zip(&self.ys).map(|(&x, &y)| [x, y]).collect()
    }

    fn segment(&self, x: f64) -> usize {
        let last = self.xs.len() - 2;
        match self.xs.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }

    fn eval_in(&self, k: usize, x: f64) -> f64 {
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.segment(x);
        if x == self.xs[k] {
            return self.ys[k];
        }
        if x == self.xs[k + 1] {
            return self.ys[k + 1];
        }
        self.eval_in(k, x)
    }

    fn derivative(&self, x: f64) -> f64 {
        let k = self.segment(x);
        let h = self.xs[k + 1] - self.xs[k];
        let t = (x - self.xs[k]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[k] + d01 * self.ys[k + 1]) / h + d10 * self.slopes[k] + d11 * self.slopes[k + 1]
    }

    /// Each piece is cubic, so Simpson's rule on every covered sub-interval is exact.
    fn integrate(&self, a: f64, b: f64) -> f64 {
        let (ka, kb) = (self.segment(a), self.segment(b));
        let simpson = |k: usize, lo: f64, hi: f64| {
            if hi <= lo {
                return 0.0;
            }
            let mid = 0.5 * (lo + hi);
            (hi - lo) / 6.0 * (self.eval_in(k, lo) + 4.0 * self.eval_in(k, mid) + self.eval_in(k, hi))
        };
        if ka == kb {
            return simpson(ka, a, b);
        }
        let mut total = simpson(ka, a, self.xs[ka + 1]);
        for k in ka + 1..kb {
            total += simpson(k, self.xs[k], self.xs[k + 1]);
        }
        total + simpson(kb, self.xs[kb], b)
    }

    fn inverse(&self, y: f64) -> f64 {
        let last = self.ys.len() - 1;
        if y >= self.ys[last] {
            return 1.0;
        }
        let k = match self.ys.binary_search_by(|v| v.total_cmp(&y)) {
            Ok(i) => return self.xs[i],
            Err(i) => i - 1,
        };
        bisect(self.xs[k], self.xs[k + 1], INVERSE_WIDTH, |x| self.eval_in(k, x) < y)
    }
}

fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let secant: Vec<f64> = (0..n - 1).map(|k| (ys[k + 1] - ys[k]) / h[k]).collect();
    if n == 2 {
        return vec![secant[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (s0, s1) = (secant[k - 1], secant[k]);
        if s0 > 0.0 && s1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / s0 + w2 / s1);
        }
    }
    let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
        let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d.signum() != s0.signum() {
            0.0
        } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
            3.0 * s0
        } else {
            d
        }
    };
    m[0] = end(h[0], h[1], secant[0], secant[1]);
    m[n - 1] = end(h[n - 2], h[n - 3], secant[n - 2], secant[n - 3]);
    m
}

/// Law of the per-period state on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "DistRepr", into = "DistRepr")]
pub enum StateDistribution {
    #[default]
    Uniform,
    /// A continuous, strictly increasing CDF with `F(0) = 0` and `F(1) = 1`.
    Cdf(MonotoneMap),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistRepr {
    Uniform,
    Cdf { map: MonotoneMap },
}

impl TryFrom<DistRepr> for StateDistribution {
    type Error = Error;

    fn try_from(repr: DistRepr) -> Result<Self> {
        match repr {
            DistRepr::Uniform => Ok(StateDistribution::Uniform),
            DistRepr::Cdf { map } => StateDistribution::from_cdf(map),
        }
    }
}

impl From<StateDistribution> for DistRepr {
    fn from(d: StateDistribution) -> Self {
        match d {
            StateDistribution::Uniform => DistRepr::Uniform,
            StateDistribution::Cdf(map) => DistRepr::Cdf { map },
        }
    }
}

impl StateDistribution {
    pub fn from_cdf(map: MonotoneMap) -> Result<Self> {
        check_cdf(&map)?;
        Ok(StateDistribution::Cdf(map))
    }

    /// `F(x) = x^k`.
    pub fn power(k: f64) -> Result<Self> {
        Self::from_cdf(MonotoneMap::power(1.0, k)?)
    }

    pub fn is_uniform(&self) -> bool {
        match self {
            StateDistribution::Uniform => true,
            StateDistribution::Cdf(m) => m.is_identity(),
        }
    }

    /// The CDF as a map (identity for the uniform law).
    pub fn cdf_map(&self) -> MonotoneMap {
        match self {
            StateDistribution::Uniform => MonotoneMap::identity(),
            StateDistribution::Cdf(m) => m.clone(),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            StateDistribution::Uniform => check_unit(x),
            StateDistribution::Cdf(m) => m.eval(x),
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        let u = check_unit(u)?;
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            StateDistribution::Uniform => u.clamp(0.0, 1.0),
            StateDistribution::Cdf(m) => m.preimage(u),
        }
    }
}
