//! Lebesgue, weak Lebesgue, block and amalgam norms.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::{Monotone, Piece, RealFunction};
use crate::measure::{partition, IntervalRC, RadonMeasure};
use crate::quad::QuadOptions;

/// Sample count per block for `q = ∞`.
pub const SUP_SAMPLES: usize = 257;
pub const DEFAULT_LAMBDA_LEVELS: usize = 512;
const LEVEL_SAMPLES: usize = 8192;

/// `max |f|` over `n` cell midpoints of `[a, b)` in measure coordinates.
pub fn sampled_sup(m: &RadonMeasure, f: &RealFunction, a: f64, b: f64, n: usize) -> f64 {
    let (ta, tb) = (m.cdf(a), m.cdf(b));
    let dt = (tb - ta) / n as f64;
    (0..n)
        .map(|k| f.eval(m.inv_cdf(ta + (k as f64 + 0.5) * dt)).abs())
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
}

/// `(∫_I |f|^q dμ)^{1/q}`; for `q = ∞` the maximum over a dense sample of `I`.
pub fn lq_norm(m: &RadonMeasure, f: &RealFunction, interval: &IntervalRC, q: Exponent) -> Result<f64> {
    lq_norm_with(m, f, interval.a, interval.b, q, &QuadOptions::default())
}

pub fn lq_norm_with(m: &RadonMeasure, f: &RealFunction, a: f64, b: f64, q: Exponent, opts: &QuadOptions) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(sampled_sup(m, f, a, b, 4 * SUP_SAMPLES));
    }
    let qv = q.value();
    let r = if qv == 1.0 {
        m.integrate_with(|x| f.eval(x).abs(), a, b, f.breakpoints(), opts)?
    } else {
        m.integrate_with(|x| f.eval(x).abs().powf(qv), a, b, f.breakpoints(), opts)?
    };
    Ok(r.value.max(0.0).powf(q.recip()))
}

/// `sup|f|^q` over the support, the scale of the absolute quadrature floor
/// used on small pieces; zero for `q = ∞` or an unbounded support.
pub fn floor_scale(m: &RadonMeasure, f: &RealFunction, q: Exponent) -> f64 {
    let s = f.support();
    if q.is_infinite() || !s.is_bounded() {
        return 0.0;
    }
    sampled_sup(m, f, s.a, s.b, SUP_SAMPLES).powf(q.value())
}

/// `opts` with the absolute tolerance raised to `tol · scale · mass`, the
/// relative tolerance against the crude bound `sup|f|^q μ(piece)`.
pub fn with_floor(opts: &QuadOptions, scale: f64, mass: f64) -> QuadOptions {
    let floor = opts.tol * scale * mass;
    if floor.is_finite() {
        QuadOptions { abs_tol: opts.abs_tol.max(floor), ..*opts }
    } else {
        *opts
    }
}

/// `‖f‖_q` over the whole line; `f` must vanish off its effective support.
pub fn lq_norm_total(m: &RadonMeasure, f: &RealFunction, q: Exponent) -> Result<f64> {
    let s = bounded_support(f)?;
    lq_norm_with(m, f, s.0, s.1, q, &QuadOptions::default())
}

fn bounded_support(f: &RealFunction) -> Result<(f64, f64)> {
    let s = f.support();
    if !s.is_bounded() || f.tail_bound() > 0.0 {
        return Err(Error::InvalidArgument(format!(
            "function '{}' must vanish outside a bounded support for this operation",
            f.label()
        )));
    }
    Ok((s.a, s.b))
}

/// `μ({|f| > λ})` (or `≥ λ` when `strict` is false).
pub fn level_set_mass(m: &RadonMeasure, f: &RealFunction, lambda: f64, strict: bool) -> Result<f64> {
    if let Some(pieces) = f.pieces() {
        let mut total = 0.0;
        for p in pieces {
            if let Some((lo, hi)) = piece_level_interval(f, p, lambda, strict) {
                total += if lo.is_finite() && hi.is_finite() { m.mass(lo, hi) } else { f64::INFINITY };
            }
        }
        return Ok(total);
    }
    let (a, b) = sampling_window(f)?;
    let (ta, tb) = (m.cdf(a), m.cdf(b));
    let dt = (tb - ta) / LEVEL_SAMPLES as f64;
    let count = (0..LEVEL_SAMPLES)
        .filter(|&k| {
            let v = f.eval(m.inv_cdf(ta + (k as f64 + 0.5) * dt)).abs();
            if strict {
                v > lambda
            } else {
                v >= lambda
            }
        })
        .count();
    Ok(count as f64 * dt)
}

fn sampling_window(f: &RealFunction) -> Result<(f64, f64)> {
    bounded_support(f).map_err(|_| {
        Error::InvalidArgument(format!(
            "function '{}' has no declared decay and no monotone pieces; its level sets cannot be bounded",
            f.label()
        ))
    })
}

fn piece_level_interval(f: &RealFunction, p: &Piece, lambda: f64, strict: bool) -> Option<(f64, f64)> {
    let above = |x: f64| {
        let v = f.eval(x).abs();
        if strict {
            v > lambda
        } else {
            v >= lambda
        }
    };
    match p.shape {
        Monotone::Constant(c) => {
            let holds = if strict { c > lambda } else { c >= lambda };
            holds.then_some((p.lo, p.hi))
        }
        Monotone::Increasing => increasing_threshold(p.lo, p.hi, above).map(|x| (x, p.hi)),
        Monotone::Decreasing => increasing_threshold(-p.hi, -p.lo, |y| above(-y)).map(|y| (p.lo, -y)),
    }
}

/// For a predicate monotone on `(lo, hi)` (false then true), the point `x*`
/// with the predicate holding on `(x*, hi)`; `None` when it never holds.
fn increasing_threshold(lo: f64, hi: f64, pred: impl Fn(f64) -> bool) -> Option<f64> {
    let inside = if hi.is_finite() {
        let start = if lo.is_finite() { 0.5 * (lo + hi) } else { hi - 1.0 };
        let mut d = hi - start;
        let mut found = None;
        for _ in 0..1100 {
            let x = hi - d;
            if x >= hi {
                break;
            }
            if pred(x) {
                found = Some(x);
                break;
            }
            d *= 0.5;
        }
        found?
    } else {
        let base = if lo.is_finite() { lo } else { 0.0 };
        let mut step = 1.0;
        loop {
            if pred(base + step) {
                break base + step;
            }
            step *= 2.0;
            if step > 1e300 {
                return None;
            }
        }
    };
    let outside = if lo.is_finite() {
        lo
    } else {
        let mut step = 1.0;
        loop {
            let x = inside - step;
            if !pred(x) || step > 1e300 {
                break x;
            }
            step *= 2.0;
        }
    };
    Some(bisect(outside, inside, pred))
}

/// Boundary of a predicate that fails at `lo` and holds at `hi`.
fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakNorm {
    pub value: f64,
    pub argmax_lambda: f64,
}

/// `sup_λ λ μ({|f| > λ})^{1/α}` over a log-spaced λ grid.
pub fn weak_norm(m: &RadonMeasure, f: &RealFunction, alpha: Exponent, lambda_grid_size: usize) -> Result<f64> {
    Ok(weak_norm_detailed(m, f, alpha, lambda_grid_size)?.value)
}

pub fn weak_norm_detailed(m: &RadonMeasure, f: &RealFunction, alpha: Exponent, lambda_grid_size: usize) -> Result<WeakNorm> {
    if alpha.is_infinite() {
        return Err(Error::InvalidArgument("weak norm needs a finite alpha".into()));
    }
    if lambda_grid_size == 0 {
        return Err(Error::InvalidArgument("lambda grid needs at least one interval".into()));
    }
    if f.pieces().is_none() {
        sampling_window(f)?;
    }
    let (lo, hi) = value_range(m, f);
    if hi == 0.0 {
        return Ok(WeakNorm { value: 0.0, argmax_lambda: 0.0 });
    }
    let ratio = hi / lo;
    let levels: Vec<f64> =
        (0..=lambda_grid_size).map(|k| lo * ratio.powf(k as f64 / lambda_grid_size as f64)).collect();
    let values = levels
        .par_iter()
        .map(|&lambda| {
            let above = level_set_mass(m, f, lambda, true)?;
            let at_least = level_set_mass(m, f, lambda, false)?;
            Ok(lambda * above.max(at_least).powf(alpha.recip()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut best = WeakNorm { value: 0.0, argmax_lambda: levels[0] };
    for (&lambda, &v) in levels.iter().zip(&values) {
        if v > best.value {
            best = WeakNorm { value: v, argmax_lambda: lambda };
        }
    }
    Ok(best)
}

/// Smallest positive and largest sampled `|f|` on the effective support.
fn value_range(m: &RadonMeasure, f: &RealFunction) -> (f64, f64) {
    let s = f.support();
    let n = 4096;
    let (ta, tb) = if s.is_bounded() { (m.cdf(s.a), m.cdf(s.b)) } else { (-1.0, 1.0) };
    let dt = (tb - ta) / n as f64;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..n {
        let v = f.eval(m.inv_cdf(ta + (k as f64 + 0.5) * dt)).abs();
        if v.is_finite() && v > 0.0 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if let Some(pieces) = f.pieces() {
        for p in pieces {
            if let Monotone::Constant(c) = p.shape {
                if c > 0.0 && c.is_finite() {
                    lo = lo.min(c);
                    hi = hi.max(c);
                }
            }
        }
    }
    if hi == 0.0 {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockNorm {
    pub value: f64,
    /// Bound on what the blocks outside the effective support can add.
    pub truncation_error: f64,
    pub blocks: usize,
}

/// `_r‖f‖_{q,p}` over the partition of mass `r` anchored at `x0`.
pub fn block_norm(m: &RadonMeasure, f: &RealFunction, q: Exponent, p: Exponent, r: f64, x0: f64) -> Result<BlockNorm> {
    block_norm_with(m, f, q, p, r, x0, &QuadOptions::default())
}

pub fn block_norm_with(
    m: &RadonMeasure,
    f: &RealFunction,
    q: Exponent,
    p: Exponent,
    r: f64,
    x0: f64,
    opts: &QuadOptions,
) -> Result<BlockNorm> {
    let s = f.support();
    if !s.is_bounded() {
        return Err(Error::InvalidArgument(format!("function '{}' needs a bounded effective support", f.label())));
    }
    let window = IntervalRC { a: s.a, b: s.b, mass: m.mass(s.a, s.b) };
    let part = partition(m, x0, r, &window)?;
    let scale = floor_scale(m, f, q);
    let mut norms = Vec::with_capacity(part.len());
    for (a, b) in part.blocks() {
        let (a, b) = (a.max(s.a), b.min(s.b));
        if b <= a {
            continue;
        }
        norms.push(if q.is_infinite() {
            sampled_sup(m, f, a, b, SUP_SAMPLES)
        } else {
            lq_norm_with(m, f, a, b, q, &with_floor(opts, scale, m.mass(a, b)))?
        });
    }
    let value = combine(&norms, p);
    let tail = f.tail_bound();
    let truncation_error = if tail == 0.0 {
        0.0
    } else if p.is_infinite() {
        let tail_block = if q.is_infinite() { tail } else { tail * r.powf(q.recip()) };
        (tail_block - value).max(0.0)
    } else {
        f64::INFINITY
    };
    Ok(BlockNorm { value, truncation_error, blocks: part.len() })
}

fn combine(norms: &[f64], p: Exponent) -> f64 {
    if p.is_infinite() {
        norms.iter().copied().fold(0.0, f64::max)
    } else if p.value() == 1.0 {
        norms.iter().sum()
    } else {
        let pv = p.value();
        // Scale by the largest entry so that p-th powers cannot overflow.
        let top = norms.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return 0.0;
        }
        top * norms.iter().map(|v| (v / top).powf(pv)).sum::<f64>().powf(p.recip())
    }
}

/// Search over block masses `r` for [`amalgam_norm`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleSearch {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub refine: bool,
    /// Extra scales evaluated besides the geometric grid.
    pub extra: Vec<f64>,
    pub anchor: f64,
}

impl ScaleSearch {
    /// 64 geometric scales over `[mass/256, 4 mass]`, `mass = μ(support)`.
    pub fn around(mass: f64) -> Self {
        Self { lo: mass / 256.0, hi: 4.0 * mass, points: 64, refine: true, extra: Vec::new(), anchor: 0.0 }
    }

    pub fn for_function(m: &RadonMeasure, f: &RealFunction) -> Self {
        let s = f.support();
        let mass = if s.is_bounded() { m.mass(s.a, s.b) } else { 1.0 };
        Self::around(if mass > 0.0 { mass } else { 1.0 })
    }

    pub fn with_points(mut self, points: usize) -> Self {
        self.points = points;
        self
    }

    pub fn with_extra(mut self, extra: Vec<f64>) -> Self {
        self.extra = extra;
        self
    }

    pub fn with_anchor(mut self, anchor: f64) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn grid(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.lo];
        }
        let ratio = self.hi / self.lo;
        (0..self.points).map(|k| self.lo * ratio.powf(k as f64 / (self.points - 1) as f64)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmalgamNorm {
    pub value: f64,
    pub argmax_r: f64,
    pub truncation_error: f64,
}

/// Rejects exponent triples for which `X^{q,p,α}` is the zero space.
pub fn check_nontrivial(q: Exponent, p: Exponent, alpha: Exponent) -> Result<()> {
    // q <= α <= p, compared through reciprocals so that ∞ is exact.
    if q.recip() < alpha.recip() || alpha.recip() < p.recip() {
        return Err(Error::TrivialSpace { q: q.value(), p: p.value(), alpha: alpha.value() });
    }
    Ok(())
}

/// `sup_r r^{1/α - 1/q} _r‖f‖_{q,p}` over the scale search.
pub fn amalgam_norm(
    m: &RadonMeasure,
    f: &RealFunction,
    q: Exponent,
    p: Exponent,
    alpha: Exponent,
    search: &ScaleSearch,
) -> Result<AmalgamNorm> {
    check_nontrivial(q, p, alpha)?;
    if !(search.lo > 0.0 && search.hi >= search.lo && search.hi.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale grid [{}, {}] must be positive", search.lo, search.hi)));
    }
    let e = alpha.recip() - q.recip();
    let opts = QuadOptions::default();
    let eval = |r: f64| -> Result<(f64, f64)> {
        let b = block_norm_with(m, f, q, p, r, search.anchor, &opts)?;
        let w = r.powf(e);
        Ok((w * b.value, w * b.truncation_error))
    };
    let mut scales = search.grid();
    let n_grid = scales.len();
    scales.extend(search.extra.iter().copied().filter(|r| *r > 0.0 && r.is_finite()));
    let values = scales.par_iter().map(|&r| eval(r)).collect::<Result<Vec<_>>>()?;

    let mut best = AmalgamNorm { value: 0.0, argmax_r: scales[0], truncation_error: 0.0 };
    let mut grid_best = 0usize;
    for (k, (&r, &(v, t))) in scales.iter().zip(&values).enumerate() {
        best.truncation_error = best.truncation_error.max(t);
        if v > best.value {
            best.value = v;
            best.argmax_r = r;
            if k < n_grid {
                grid_best = k;
            }
        }
    }
    if search.refine && n_grid >= 3 && best.value > 0.0 {
        let lo = scales[grid_best.saturating_sub(1)].ln();
        let hi = scales[(grid_best + 1).min(n_grid - 1)].ln();
        let (r, v) = golden_max(lo, hi, 40, |s| eval(s.exp()).map(|x| x.0))?;
        if v > best.value {
            best.value = v;
            best.argmax_r = r.exp();
        }
    }
    Ok(best)
}

/// Golden-section search for a maximum on `[lo, hi]`; returns the best point seen.
pub(crate) fn golden_max(
    mut lo: f64,
    mut hi: f64,
    iterations: usize,
    mut g: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for _ in 0..iterations {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = g(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = g(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}
