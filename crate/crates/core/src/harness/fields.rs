//! Operator outputs sampled on a uniform grid in measure coordinates over a
//! window, plus geometric tail samples on both sides, with level-set masses
//! by piecewise-constant indicator integration.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::RealFunction;
use crate::measure::RadonMeasure;
use crate::quad::QuadOptions;

/// Cell layout in measure coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub t_lo: f64,
    pub t_hi: f64,
    pub cells: usize,
    /// Increasing distances past each window end, starting above zero.
    pub offsets: Vec<f64>,
}

impl Geometry {
    pub fn new(t_lo: f64, t_hi: f64, cells: usize, per_octave: usize, octaves: usize) -> Result<Self> {
        if !(t_hi > t_lo && (t_hi - t_lo).is_finite()) || cells == 0 {
            return Err(Error::InvalidArgument(format!("sample window [{t_lo}, {t_hi}) is empty")));
        }
        let len = t_hi - t_lo;
        let per = per_octave.max(1);
        let offsets = (1..=per * octaves).map(|j| len * (2f64.powf(j as f64 / per as f64) - 1.0)).collect();
        Ok(Self { t_lo, t_hi, cells, offsets })
    }

    pub fn dt(&self) -> f64 {
        (self.t_hi - self.t_lo) / self.cells as f64
    }

    pub fn half(&self) -> f64 {
        0.5 * (self.t_hi - self.t_lo)
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.t_lo + (i as f64 + 0.5) * self.dt()
    }

    pub fn left_t(&self, offset: f64) -> f64 {
        self.t_lo - offset
    }

    pub fn right_t(&self, offset: f64) -> f64 {
        self.t_hi + offset
    }
}

/// Values of one nonnegative function on a [`Geometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub inner: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Field {
    /// Samples `g` (a function of the measure coordinate).
    pub fn sample<G>(geo: &Geometry, g: G) -> Result<Self>
    where
        G: Fn(f64) -> Result<f64> + Sync,
    {
        let inner = (0..geo.cells).into_par_iter().map(|i| g(geo.midpoint(i))).collect::<Result<Vec<_>>>()?;
        let left = geo.offsets.par_iter().map(|&o| g(geo.left_t(o))).collect::<Result<Vec<_>>>()?;
        let right = geo.offsets.par_iter().map(|&o| g(geo.right_t(o))).collect::<Result<Vec<_>>>()?;
        let field = Self { inner, left, right };
        if let Some(v) = field.values().find(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Evaluation(format!("sampled operator value {v} is not finite and nonnegative")));
        }
        Ok(field)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.inner.iter().chain(&self.left).chain(&self.right).copied()
    }

    pub fn max(&self) -> f64 {
        self.values().fold(0.0, f64::max)
    }

    /// Tail samples of one side, starting with the window-edge cell at offset 0.
    fn side(&self, right: bool) -> Vec<f64> {
        let (edge, tail) = if right { (self.inner[self.inner.len() - 1], &self.right) } else { (self.inner[0], &self.left) };
        std::iter::once(edge).chain(tail.iter().copied()).collect()
    }
}

/// Offsets where the sampled tail exceeds `lambda`, as `[lo, hi)` pieces;
/// `hi` may be infinite when the tail does not decay. Interpolation is in
/// the distance `half + offset` from the window centre.
fn tail_pieces(half: f64, offsets: &[f64], values: &[f64], lambda: f64) -> Vec<(f64, f64)> {
    let pos = |j: usize| half + if j == 0 { 0.0 } else { offsets[j - 1] };
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if hi <= lo {
            return;
        }
        match pieces.last_mut() {
            Some(last) if last.1 == lo => last.1 = hi,
            _ => pieces.push((lo, hi)),
        }
    };
    for j in 1..values.len() {
        let (oa, ob) = (pos(j - 1), pos(j));
        let (u, v) = (values[j - 1], values[j]);
        match (u > lambda, v > lambda) {
            (true, true) => push(oa, ob),
            (false, false) => {}
            (true, false) => push(oa, crossing(oa, ob, u, v, lambda)),
            (false, true) => push(crossing(oa, ob, u, v, lambda), ob),
        }
    }
    let n = values.len();
    if n >= 3 && values[n - 1] > lambda {
        let (oa, ob) = (pos(n - 2), pos(n - 1));
        let (u, v) = (values[n - 2], values[n - 1]);
        let e = if u > 0.0 && v > 0.0 { (u / v).ln() / (ob / oa).ln() } else { 0.0 };
        let end = if e > 1e-12 { ob * (v / lambda).powf(1.0 / e) } else { f64::INFINITY };
        push(ob, end);
    }
    pieces.into_iter().map(|(lo, hi)| (lo - half, hi - half)).collect()
}

/// Offset where the segment from `(oa, u)` to `(ob, v)` crosses `lambda`,
/// interpolating log-log when both ends allow it.
fn crossing(oa: f64, ob: f64, u: f64, v: f64, lambda: f64) -> f64 {
    if oa > 0.0 && u > 0.0 && v > 0.0 && lambda > 0.0 {
        let s = (u.ln() - lambda.ln()) / (u.ln() - v.ln());
        (oa.ln() + s * (ob.ln() - oa.ln())).exp()
    } else {
        let s = (u - lambda) / (u - v);
        oa + s * (ob - oa)
    }
}

/// The measure against which level sets are weighed: `μ`, or `w dμ`.
#[derive(Clone)]
pub struct Weighing<'a> {
    m: &'a RadonMeasure,
    w: Option<&'a RealFunction>,
    cell_weights: Vec<f64>,
}

impl<'a> Weighing<'a> {
    pub fn mu(m: &'a RadonMeasure, geo: &Geometry) -> Self {
        Self { m, w: None, cell_weights: vec![geo.dt(); geo.cells] }
    }

    pub fn weighted(m: &'a RadonMeasure, w: &'a RealFunction, geo: &Geometry) -> Result<Self> {
        let mut s = Self { m, w: Some(w), cell_weights: Vec::new() };
        let dt = geo.dt();
        s.cell_weights = (0..geo.cells)
            .into_par_iter()
            .map(|i| s.weight_t(geo.t_lo + i as f64 * dt, geo.t_lo + (i + 1) as f64 * dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(s)
    }

    /// Weight of `[ta, tb)` in measure coordinates.
    fn weight_t(&self, ta: f64, tb: f64) -> Result<f64> {
        if tb <= ta {
            return Ok(0.0);
        }
        let Some(w) = self.w else { return Ok(tb - ta) };
        if !tb.is_finite() || !ta.is_finite() {
            return Ok(f64::INFINITY);
        }
        let (xa, xb) = (self.m.try_inv_cdf(ta)?, self.m.try_inv_cdf(tb)?);
        let r = self.m.integrate_with(|x| w.eval(x), xa, xb, w.breakpoints(), &QuadOptions::default())?;
        Ok(r.value.max(0.0))
    }

    /// Weighed mass of `{g > lambda}`.
    pub fn mass_above(&self, geo: &Geometry, field: &Field, lambda: f64) -> Result<f64> {
        let mut total: f64 = field.inner.iter().zip(&self.cell_weights).filter(|(v, _)| **v > lambda).map(|(_, w)| w).sum();
        for right in [false, true] {
            for (lo, hi) in tail_pieces(geo.half(), &geo.offsets, &field.side(right), lambda) {
                total += if right {
                    self.weight_t(geo.right_t(lo), geo.right_t(hi))?
                } else {
                    self.weight_t(geo.left_t(hi), geo.left_t(lo))?
                };
            }
        }
        Ok(total)
    }

    /// Weighed mass of `{g > lambda and h <= mu}` over the inner cells.
    pub fn joint_mass_inner(&self, g: &Field, lambda: f64, h: &Field, mu: f64) -> f64 {
        g.inner
            .iter()
            .zip(&h.inner)
            .zip(&self.cell_weights)
            .filter(|((gv, hv), _)| **gv > lambda && **hv <= mu)
            .map(|(_, w)| w)
            .sum()
    }
}

/// `∫ g^s dμ`: midpoint rule inside, power-law interpolation on the tails
/// and a power-law extrapolation past the last tail sample.
pub fn power_integral(geo: &Geometry, field: &Field, s: f64) -> f64 {
    let mut total: f64 = field.inner.iter().map(|v| v.powf(s)).sum::<f64>() * geo.dt();
    for right in [false, true] {
        let values = field.side(right);
        let pos = |j: usize| geo.half() + if j == 0 { 0.0 } else { geo.offsets[j - 1] };
        for j in 1..values.len() {
            let (oa, ob) = (pos(j - 1), pos(j));
            let (u, v) = (values[j - 1], values[j]);
            total += if oa > 0.0 && u > 0.0 && v > 0.0 && u != v {
                let e = (u / v).ln() / (ob / oa).ln();
                let k = 1.0 - s * e;
                let ratio = ob / oa;
                if k.abs() < 1e-12 {
                    u.powf(s) * oa * ratio.ln()
                } else {
                    u.powf(s) * oa * (ratio.powf(k) - 1.0) / k
                }
            } else {
                0.5 * (u.powf(s) + v.powf(s)) * (ob - oa)
            };
        }
        let n = values.len();
        let (u, v) = (values[n - 2], values[n - 1]);
        if v > 0.0 {
            let (oa, ob) = (pos(n - 2), pos(n - 1));
            let e = if u > 0.0 { (u / v).ln() / (ob / oa).ln() } else { 0.0 };
            total += if s * e > 1.0 { v.powf(s) * ob / (s * e - 1.0) } else { f64::INFINITY };
        }
    }
    total
}

/// `sup_λ λ^κ mass(λ)^e` over `lambdas`, with the maximising λ.
pub fn sup_over_lambda<F>(lambdas: &[f64], kappa: f64, e: f64, mut mass: F) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut best = (0.0, f64::NAN);
    for &l in lambdas {
        let v = l.powf(kappa) * mass(l)?.powf(e);
        if v > best.0 || (best.1.is_nan() && v == best.0) {
            best = (v, l);
        }
    }
    Ok(best)
}
