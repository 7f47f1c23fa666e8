//! Non-atomic Radon measures on the line, represented through their signed
//! distribution function `F(x) = μ([0, x))` (negative for `x < 0`).
//!
//! Every integral against `μ` is computed in measure coordinates `t = F(x)`,
//! where `μ` becomes Lebesgue measure and equal-mass partitions become
//! uniform grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::RealFunction;
use crate::quad::{self, QuadOptions, QuadResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSpec {
    pub left_exp: f64,
    pub right_exp: f64,
}

/// Measure block of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Lebesgue,
    Power { a: f64 },
    Custom { density_table: Vec<[f64; 2]>, tail: TailSpec },
}

impl MeasureSpec {
    /// Parses the CLI shorthand `lebesgue`, `power:<a>`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["lebesgue"] => Ok(MeasureSpec::Lebesgue),
            ["power", a] => {
                let a = a.parse().map_err(|_| Error::Config(format!("bad power exponent in '{s}'")))?;
                Ok(MeasureSpec::Power { a })
            }
            _ => Err(Error::Config(format!("unknown measure shorthand '{s}' (use lebesgue or power:<a>)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    Lebesgue,
    Power { a: f64 },
    Custom,
}

#[derive(Debug, Clone)]
struct CustomDensity {
    xs: Vec<f64>,
    ws: Vec<f64>,
    // ∫_{xs[0]}^{xs[i]} w
    cum: Vec<f64>,
    left_exp: f64,
    right_exp: f64,
    // ∫_{xs[0]}^{0} w, so that F(x) = G(x) - origin
    origin: f64,
}

#[derive(Debug, Clone)]
enum Repr {
    Lebesgue,
    Power { a: f64 },
    Custom(Box<CustomDensity>),
}

/// A non-atomic measure `dμ = w dx` with infinite mass on both half-lines.
///
/// Immutable after construction; cheap to clone and safe to share.
#[derive(Debug, Clone)]
pub struct RadonMeasure {
    repr: Repr,
    spec: MeasureSpec,
}

/// Half-open interval `[a, b)` with its cached measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalRC {
    pub a: f64,
    pub b: f64,
    pub mass: f64,
}

impl IntervalRC {
    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x < self.b
    }
}

/// Equal-mass partition `a_i = F^{-1}(F(x0) + i r)` restricted to a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub x0: f64,
    pub r: f64,
    /// Index of `breakpoints[0]`, i.e. `breakpoints[k] = a_{first_index + k}`.
    pub first_index: i64,
    pub breakpoints: Vec<f64>,
}

impl Partition {
    pub fn blocks(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Checked constructor for the measure kinds of the scenario format.
pub fn make_measure(spec: &MeasureSpec) -> Result<RadonMeasure> {
    RadonMeasure::from_spec(spec)
}

impl RadonMeasure {
    pub fn lebesgue() -> Self {
        Self { repr: Repr::Lebesgue, spec: MeasureSpec::Lebesgue }
    }

    /// `dμ = |x|^{-a} dx`, `0 < a < 1`.
    pub fn power(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidMeasure(format!("power exponent a = {a} must lie in (0, 1)")));
        }
        Ok(Self { repr: Repr::Power { a }, spec: MeasureSpec::Power { a } })
    }

    /// Piecewise-linear density on the table, continued past both ends by
    /// `w_end (1 + distance)^{exp}`. Both tails must carry infinite mass.
    pub fn custom(table: &[[f64; 2]], tail: TailSpec) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidMeasure("density table needs at least two points".into()));
        }
        let xs: Vec<f64> = table.iter().map(|p| p[0]).collect();
        let ws: Vec<f64> = table.iter().map(|p| p[1]).collect();
        if xs.iter().chain(&ws).any(|v| !v.is_finite()) {
            return Err(Error::InvalidMeasure("density table contains non-finite values".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidMeasure("density table abscissae must be strictly increasing".into()));
        }
        if ws.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidMeasure("density must be nonnegative".into()));
        }
        if ws.windows(2).any(|w| w[0] == 0.0 && w[1] == 0.0) {
            return Err(Error::InvalidMeasure("density vanishes on a whole segment (zero-mass window)".into()));
        }
        let (w_first, w_last) = (ws[0], *ws.last().unwrap());
        if w_first == 0.0 || tail.left_exp < -1.0 {
            return Err(Error::InvalidMeasure(format!(
                "left tail has finite mass (w={w_first}, exp={})",
                tail.left_exp
            )));
        }
        if w_last == 0.0 || tail.right_exp < -1.0 {
            return Err(Error::InvalidMeasure(format!(
                "right tail has finite mass (w={w_last}, exp={})",
                tail.right_exp
            )));
        }
        let mut cum = vec![0.0];
        for i in 0..xs.len() - 1 {
            let seg = 0.5 * (ws[i] + ws[i + 1]) * (xs[i + 1] - xs[i]);
            cum.push(cum[i] + seg);
        }
        let mut density = CustomDensity {
            xs,
            ws,
            cum,
            left_exp: tail.left_exp,
            right_exp: tail.right_exp,
            origin: 0.0,
        };
        density.origin = density.raw_cdf(0.0);
        Ok(Self {
            repr: Repr::Custom(Box::new(density)),
            spec: MeasureSpec::Custom { density_table: table.to_vec(), tail },
        })
    }

    pub fn from_spec(spec: &MeasureSpec) -> Result<Self> {
        match spec {
            MeasureSpec::Lebesgue => Ok(Self::lebesgue()),
            MeasureSpec::Power { a } => Self::power(*a),
            MeasureSpec::Custom { density_table, tail } => Self::custom(density_table, *tail),
        }
    }

    pub fn spec(&self) -> &MeasureSpec {
        &self.spec
    }

    pub fn kind(&self) -> MeasureKind {
        match &self.repr {
            Repr::Lebesgue => MeasureKind::Lebesgue,
            Repr::Power { a } => MeasureKind::Power { a: *a },
            Repr::Custom(_) => MeasureKind::Custom,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Lebesgue => 1.0,
            Repr::Power { a } => x.abs().powf(-a),
            Repr::Custom(d) => d.density(x),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Lebesgue => x,
            Repr::Power { a } => x.signum() * x.abs().powf(1.0 - a) / (1.0 - a),
            Repr::Custom(d) => d.raw_cdf(x) - d.origin,
        }
    }

    /// Right inverse of [`cdf`](Self::cdf). Total on finite inputs.
    pub fn inv_cdf(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Lebesgue => t,
            Repr::Power { a } => t.signum() * ((1.0 - a) * t.abs()).powf(1.0 / (1.0 - a)),
            Repr::Custom(d) => d.invert(t + d.origin),
        }
    }

    pub fn try_inv_cdf(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return Err(Error::Inversion(format!("cannot invert the cdf at t = {t}")));
        }
        let x = self.inv_cdf(t);
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::Inversion(format!("inverse cdf overflowed at t = {t}")))
        }
    }

    /// `μ([a, b))`, zero when `b <= a`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match &self.repr {
            Repr::Lebesgue => b - a,
            _ => (self.cdf(b) - self.cdf(a)).max(0.0),
        }
    }

    /// `μ([t, t + len))`; exact for Lebesgue measure.
    pub fn mass_from(&self, t: f64, len: f64) -> f64 {
        match &self.repr {
            Repr::Lebesgue => len.max(0.0),
            _ => self.mass(t, t + len),
        }
    }

    pub fn interval(&self, a: f64, b: f64) -> Result<IntervalRC> {
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("interval [{a}, {b}) is empty")));
        }
        Ok(IntervalRC { a, b, mass: self.mass(a, b) })
    }

    /// Interval from measure coordinates.
    pub fn interval_t(&self, ta: f64, tb: f64) -> Result<IntervalRC> {
        let a = self.try_inv_cdf(ta)?;
        let b = self.try_inv_cdf(tb)?;
        if !(a < b) {
            return Err(Error::InvalidArgument(format!("interval [{a}, {b}) is empty")));
        }
        Ok(IntervalRC { a, b, mass: tb - ta })
    }

    /// Points where the density is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Lebesgue => Vec::new(),
            Repr::Power { .. } => vec![0.0],
            Repr::Custom(d) => d.xs.clone(),
        }
    }

    /// `∫_a^b g dμ` as `∫_{F(a)}^{F(b)} g(F^{-1}(t)) dt`, split at the given
    /// x-breakpoints and at the density's own breakpoints.
    pub fn integrate_with<G: Fn(f64) -> f64>(
        &self,
        g: G,
        a: f64,
        b: f64,
        breaks: &[f64],
        opts: &QuadOptions,
    ) -> Result<QuadResult> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidArgument(format!("cannot integrate over unbounded [{a}, {b})")));
        }
        if b <= a {
            return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
        }
        let (ta, tb) = (self.cdf(a), self.cdf(b));
        let mut tbreaks: Vec<f64> = breaks
            .iter()
            .chain(self.breakpoints().iter())
            .filter(|&&x| x > a && x < b)
            .map(|&x| self.cdf(x))
            .collect();
        tbreaks.sort_by(f64::total_cmp);
        match &self.repr {
            Repr::Lebesgue => quad::integrate_with_breaks(g, ta, tb, &tbreaks, opts),
            _ => quad::integrate_with_breaks(|t| g(self.inv_cdf(t)), ta, tb, &tbreaks, opts),
        }
    }
}

/// `∫_I g dμ` to relative tolerance `tol`.
pub fn integrate(m: &RadonMeasure, g: &RealFunction, interval: &IntervalRC, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let r = m.integrate_with(|x| g.eval(x), interval.a, interval.b, g.breakpoints(), &QuadOptions::with_tol(tol))?;
    Ok(r.value)
}

/// Partition of the window into blocks of mass `r` anchored at `x0`.
pub fn partition(m: &RadonMeasure, x0: f64, r: f64, window: &IntervalRC) -> Result<Partition> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!("block mass r = {r} must be positive and finite")));
    }
    let t0 = m.cdf(x0);
    let (twa, twb) = (m.cdf(window.a), m.cdf(window.b));
    if !(twa.is_finite() && twb.is_finite()) {
        return Err(Error::InvalidArgument("partition window must have finite mass".into()));
    }
    let i_min = ((twa - t0) / r).floor() as i64;
    let i_max = ((twb - t0) / r).ceil() as i64 - 1;
    let count = (i_max - i_min + 2).max(0);
    if count > 50_000_000 {
        return Err(Error::InvalidArgument(format!("partition would have {count} breakpoints")));
    }
    let breakpoints = (i_min..=i_max + 1)
        .map(|i| m.try_inv_cdf(t0 + i as f64 * r))
        .collect::<Result<Vec<_>>>()?;
    Ok(Partition { x0, r, first_index: i_min, breakpoints })
}

/// Default scale list for [`growth_constant`]: 31 geometric scales in `[1e-3, 1e3]`.
pub fn default_growth_scales() -> Vec<f64> {
    (0..31).map(|k| 10f64.powf(-3.0 + 0.2 * k as f64)).collect()
}

/// Default translation grid for [`growth_constant`].
pub fn default_growth_translations() -> Vec<f64> {
    let mut ts: Vec<f64> = (0..=400).map(|k| -20.0 + 0.1 * k as f64).collect();
    for k in 0..31 {
        let v = 10f64.powf(-3.0 + 0.2 * k as f64);
        ts.push(v);
        ts.push(-v);
    }
    ts
}

/// `max_{r, t} μ([t, t+r]) / μ([0, r])` together with the mirrored ratio
/// `μ([t-r, t]) / μ([-r, 0])`: a lower bound for the large-scale growth
/// constant of the measure.
pub fn growth_constant(m: &RadonMeasure, r_list: &[f64], t_grid: &[f64]) -> Result<f64> {
    if r_list.is_empty() {
        return Err(Error::InvalidArgument("growth_constant needs at least one scale".into()));
    }
    let mut best: f64 = 0.0;
    for &r in r_list {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("scale r = {r} must be positive")));
        }
        let right_ref = m.mass_from(0.0, r);
        let left_ref = m.mass_from(-r, r);
        for &t in t_grid {
            best = best.max(m.mass_from(t, r) / right_ref);
            best = best.max(m.mass_from(t - r, r) / left_ref);
        }
    }
    Ok(best)
}

impl CustomDensity {
    fn density(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ws[0] * (1.0 + self.xs[0] - x).powf(self.left_exp);
        }
        if x >= self.xs[n - 1] {
            return self.ws[n - 1] * (1.0 + x - self.xs[n - 1]).powf(self.right_exp);
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        self.ws[i] + s * (self.ws[i + 1] - self.ws[i])
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.binary_search_by(|v| v.total_cmp(&x)) {
            Ok(i) => i.min(n - 2),
            Err(i) => (i - 1).min(n - 2),
        }
    }

    fn tail_integral(w: f64, exp: f64, u: f64) -> f64 {
        // ∫_0^u w (1 + s)^exp ds
        if (exp + 1.0).abs() < 1e-14 {
            w * u.ln_1p()
        } else {
            w * ((1.0 + u).powf(exp + 1.0) - 1.0) / (exp + 1.0)
        }
    }

    /// `∫_{xs[0]}^x w`, signed.
    fn raw_cdf(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return -Self::tail_integral(self.ws[0], self.left_exp, self.xs[0] - x);
        }
        if x >= self.xs[n - 1] {
            return self.cum[n - 1] + Self::tail_integral(self.ws[n - 1], self.right_exp, x - self.xs[n - 1]);
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let d = x - self.xs[i];
        self.cum[i] + self.ws[i] * d + (self.ws[i + 1] - self.ws[i]) * d * d / (2.0 * h)
    }

    /// Solves `raw_cdf(x) = target` by bracketed bisection refined with Newton steps.
    fn invert(&self, target: f64) -> f64 {
        let n = self.xs.len();
        // Bracket from the table when possible, else expand geometrically.
        let (mut lo, mut hi) = if target < 0.0 {
            let mut step = 1.0;
            let mut lo = self.xs[0] - step;
            while self.raw_cdf(lo) > target {
                step *= 2.0;
                lo = self.xs[0] - step;
                if !lo.is_finite() {
                    return f64::NEG_INFINITY;
                }
            }
            (lo, self.xs[0])
        } else if target > self.cum[n - 1] {
            let mut step = 1.0;
            let mut hi = self.xs[n - 1] + step;
            while self.raw_cdf(hi) < target {
                step *= 2.0;
                hi = self.xs[n - 1] + step;
                if !hi.is_finite() {
                    return f64::INFINITY;
                }
            }
            (self.xs[n - 1], hi)
        } else {
            let i = match self.cum.binary_search_by(|v| v.total_cmp(&target)) {
                Ok(i) => return self.xs[i],
                Err(i) => i - 1,
            };
            (self.xs[i], self.xs[i + 1])
        };
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let resid = self.raw_cdf(x) - target;
            if resid == 0.0 {
                return x;
            }
            if resid > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 1e-12 * (1.0 + x.abs()) && resid.abs() <= 1e-13 * (1.0 + target.abs()) {
                return x;
            }
            let w = self.density(x);
            let newton = if w > 0.0 { x - resid / w } else { f64::NAN };
            x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        x
    }
}
