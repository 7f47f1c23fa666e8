use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::RealFunction;
use crate::measure::RadonMeasure;
use crate::norms::{self, golden_max, sampled_sup};
use crate::quad::QuadOptions;

pub const DEFAULT_MASSES: usize = 64;
pub const DEFAULT_SPLITS: usize = 17;
const FRACTION_CLAMP: f64 = 1e-9;

/// Geometric grid of total interval masses `u + v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl MassGrid {
    /// Masses from `S/256` to `4(d + S)`, where `S` is the support mass and
    /// `d` the mass between the point and the support.
    pub fn around(support_mass: f64, distance: f64, points: usize) -> Self {
        let s = if support_mass > 0.0 { support_mass } else { 1.0 };
        Self { lo: s / 256.0, hi: 4.0 * (distance + s), points }
    }

    /// Nested under `points -> 2 points - 1`.
    pub fn values(&self) -> Vec<f64> {
        if self.points <= 1 {
            return vec![self.hi];
        }
        let ratio = self.hi / self.lo;
        let n = (self.points - 1) as f64;
        (0..self.points).map(|k| self.lo * ratio.powf(k as f64 / n)).collect()
    }
}

/// Left fractions `u / (u + v)`: `j / (n - 1)` clamped into `(0, 1)`.
pub fn split_fractions(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5];
    }
    (0..n)
        .map(|j| (j as f64 / (n - 1) as f64).clamp(FRACTION_CLAMP, 1.0 - FRACTION_CLAMP))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalQuery {
    pub x: f64,
    pub mass_grid: MassGrid,
    pub split_count: usize,
    /// Pattern search around the grid argmax, plus intervals starting at `x`.
    pub refine: bool,
}

impl MaximalQuery {
    pub fn for_point(m: &RadonMeasure, f: &RealFunction, x: f64) -> Self {
        Self::with_counts(m, f, x, DEFAULT_MASSES, DEFAULT_SPLITS)
    }

    pub fn with_counts(m: &RadonMeasure, f: &RealFunction, x: f64, masses: usize, splits: usize) -> Self {
        let s = f.support();
        let (support_mass, distance) = if s.is_bounded() {
            let (ta, tb, t) = (m.cdf(s.a), m.cdf(s.b), m.cdf(x));
            (tb - ta, (ta - t).max(t - tb).max(0.0))
        } else {
            (1.0, 0.0)
        };
        Self { x, mass_grid: MassGrid::around(support_mass, distance, masses), split_count: splits, refine: true }
    }

    pub fn grid_only(mut self) -> Self {
        self.refine = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalEstimate {
    pub value: f64,
    /// `[a, b)` attaining the value, when it is positive.
    pub interval: Option<(f64, f64)>,
}

pub fn check_exponents(q: Exponent, beta: Exponent) -> Result<()> {
    if q.recip() < beta.recip() {
        return Err(Error::Hypothesis(format!("maximal operator needs q <= beta (q = {q}, beta = {beta})")));
    }
    Ok(())
}

/// `𝔪_{q,β} f(x)`, a lower bound for the supremum over intervals containing `x`.
pub fn maximal(m: &RadonMeasure, f: &RealFunction, q: Exponent, beta: Exponent, query: &MaximalQuery) -> Result<f64> {
    Ok(maximal_detailed(m, f, q, beta, query)?.value)
}

pub fn maximal_detailed(
    m: &RadonMeasure,
    f: &RealFunction,
    q: Exponent,
    beta: Exponent,
    query: &MaximalQuery,
) -> Result<MaximalEstimate> {
    check_exponents(q, beta)?;
    if !query.x.is_finite() {
        return Err(Error::InvalidArgument(format!("evaluation point {} is not finite", query.x)));
    }
    let s = f.support();
    if !s.is_bounded() || f.tail_bound() > 0.0 {
        return Err(Error::InvalidArgument(format!("function '{}' needs a bounded support", f.label())));
    }
    let t = m.cdf(query.x);
    let (sa, sb) = (m.cdf(s.a), m.cdf(s.b));
    let exponent = beta.recip() - q.recip();
    let opts = QuadOptions::default();
    let scale = norms::floor_scale(m, f, q);
    let candidate = |u: f64, v: f64| -> Result<f64> {
        let lo = (t - u).max(sa);
        let hi = (t + v).min(sb);
        if hi <= lo {
            return Ok(0.0);
        }
        let (a, b) = (m.inv_cdf(lo), m.inv_cdf(hi));
        let norm = if q.is_infinite() {
            sampled_sup(m, f, a, b, norms::SUP_SAMPLES)
        } else {
            norms::lq_norm_with(m, f, a, b, q, &norms::with_floor(&opts, scale, hi - lo))?
        };
        Ok((u + v).powf(exponent) * norm)
    };

    let masses = query.mass_grid.values();
    let fractions = split_fractions(query.split_count);
    let pairs: Vec<(f64, f64)> =
        masses.iter().flat_map(|&mass| fractions.iter().map(move |&phi| (mass * phi, mass * (1.0 - phi)))).collect();
    let values = pairs.par_iter().map(|&(u, v)| candidate(u, v)).collect::<Result<Vec<_>>>()?;

    let mut best = (0.0, 0.0, 0.0);
    for (&(u, v), &val) in pairs.iter().zip(&values) {
        if val > best.2 {
            best = (u, v, val);
        }
    }
    if query.refine && best.2 > 0.0 {
        let refined = pattern_search(best, &candidate)?;
        if refined.2 > best.2 {
            best = refined;
        }
        // Intervals with x as left end.
        let (lo, hi) = (query.mass_grid.lo.ln(), query.mass_grid.hi.ln());
        let mut edge = (0.0, 0.0, 0.0);
        for &mass in &masses {
            let val = candidate(0.0, mass)?;
            if val > edge.2 {
                edge = (0.0, mass, val);
            }
        }
        if edge.2 > 0.0 {
            let step = (hi - lo) / masses.len().max(2) as f64;
            let c = edge.1.ln();
            let (lv, val) = golden_max(c - step, c + step, 40, |lv| candidate(0.0, lv.exp()))?;
            if val > edge.2 {
                edge = (0.0, lv.exp(), val);
            }
        }
        if edge.2 > best.2 {
            best = edge;
        }
    }
    let interval = (best.2 > 0.0).then(|| (m.inv_cdf(t - best.0), m.inv_cdf(t + best.1)));
    Ok(MaximalEstimate { value: best.2, interval })
}

/// Compass search with step expansion in `(ln u, ln v)`.
fn pattern_search(start: (f64, f64, f64), candidate: &impl Fn(f64, f64) -> Result<f64>) -> Result<(f64, f64, f64)> {
    const DIRS: [(f64, f64); 8] =
        [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)];
    let (mut lu, mut lv, mut best) = (start.0.ln(), start.1.ln(), start.2);
    let mut step: f64 = 0.25;
    let mut evals = 0;
    while step > 1e-7 && evals < 600 {
        let mut moved = false;
        for (du, dv) in DIRS {
            let (nu, nv) = (lu + step * du, lv + step * dv);
            let val = candidate(nu.exp(), nv.exp())?;
            evals += 1;
            if val > best {
                lu = nu;
                lv = nv;
                best = val;
                moved = true;
                break;
            }
        }
        step = if moved { (step * 2.0).min(2.0) } else { step * 0.5 };
    }
    Ok((lu.exp(), lv.exp(), best))
}

/// Grid-only maximal operator from a prefix table of `|f|^q` in measure
/// coordinates, for evaluating `𝔪f` at many points with one candidate family.
#[derive(Debug, Clone)]
pub struct MaximalSampler {
    q: Exponent,
    exponent: f64,
    t0: f64,
    dt: f64,
    cells: usize,
    /// `cum[i] = ∫_{t0}^{t0 + i dt} |f|^q` (finite `q`).
    cum: Vec<f64>,
    /// Sparse table of cell maxima (`q = ∞`).
    sparse: Vec<Vec<f64>>,
    pub masses: usize,
    pub splits: usize,
}

impl MaximalSampler {
    pub fn new(m: &RadonMeasure, f: &RealFunction, q: Exponent, beta: Exponent, cells: usize) -> Result<Self> {
        check_exponents(q, beta)?;
        let s = f.support();
        if !s.is_bounded() || f.tail_bound() > 0.0 {
            return Err(Error::InvalidArgument(format!("function '{}' needs a bounded support", f.label())));
        }
        let cells = cells.max(1);
        let (t0, t1) = (m.cdf(s.a), m.cdf(s.b));
        let dt = (t1 - t0) / cells as f64;
        let bounds: Vec<(f64, f64)> = (0..cells)
            .map(|i| {
                let a = m.inv_cdf(t0 + i as f64 * dt);
                let b = if i + 1 == cells { s.b } else { m.inv_cdf(t0 + (i + 1) as f64 * dt) };
                (if i == 0 { s.a } else { a }, b)
            })
            .collect();
        let mut sampler = Self {
            q,
            exponent: beta.recip() - q.recip(),
            t0,
            dt,
            cells,
            cum: Vec::new(),
            sparse: Vec::new(),
            masses: DEFAULT_MASSES,
            splits: DEFAULT_SPLITS,
        };
        if q.is_infinite() {
            let maxima: Vec<f64> = bounds.par_iter().map(|&(a, b)| sampled_sup(m, f, a, b, 9)).collect();
            sampler.sparse = sparse_table(maxima);
        } else {
            let opts = QuadOptions::default();
            let scale = norms::floor_scale(m, f, q);
            let qv = q.value();
            let parts = bounds
                .par_iter()
                .map(|&(a, b)| {
                    let opts = norms::with_floor(&opts, scale, m.mass(a, b));
                    m.integrate_with(|x| f.eval(x).abs().powf(qv), a, b, f.breakpoints(), &opts).map(|r| r.value.max(0.0))
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut cum = Vec::with_capacity(cells + 1);
            cum.push(0.0);
            for p in parts {
                cum.push(cum.last().unwrap() + p);
            }
            sampler.cum = cum;
        }
        Ok(sampler)
    }

    pub fn with_counts(mut self, masses: usize, splits: usize) -> Self {
        self.masses = masses;
        self.splits = splits;
        self
    }

    fn support_mass(&self) -> f64 {
        self.dt * self.cells as f64
    }

    fn cum_at(&self, t: f64) -> f64 {
        let s = (t - self.t0) / self.dt;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.cells as f64 {
            return self.cum[self.cells];
        }
        let i = s.floor() as usize;
        let frac = s - i as f64;
        self.cum[i] + frac * (self.cum[i + 1] - self.cum[i])
    }

    fn range_max(&self, t1: f64, t2: f64) -> f64 {
        let lo = ((t1 - self.t0) / self.dt).floor().max(0.0);
        let hi = ((t2 - self.t0) / self.dt).ceil().min(self.cells as f64);
        if hi <= lo {
            return 0.0;
        }
        let (i, j) = (lo as usize, hi as usize);
        let k = usize::BITS - 1 - (j - i).leading_zeros();
        let level = &self.sparse[k as usize];
        level[i].max(level[j - (1 << k)])
    }

    /// `‖f χ_I‖_q` for `I = [t1, t2)` in measure coordinates.
    pub fn local_norm(&self, t1: f64, t2: f64) -> f64 {
        if self.q.is_infinite() {
            self.range_max(t1, t2)
        } else {
            (self.cum_at(t2) - self.cum_at(t1)).max(0.0).powf(self.q.recip())
        }
    }

    /// Grid value of `𝔪f` at the point with measure coordinate `t`.
    pub fn eval_t(&self, t: f64) -> f64 {
        let s = self.support_mass();
        let (a, b) = (self.t0, self.t0 + s);
        let distance = (a - t).max(t - b).max(0.0);
        let grid = MassGrid::around(s, distance, self.masses);
        let fractions = split_fractions(self.splits);
        let mut best: f64 = 0.0;
        for mass in grid.values() {
            let w = mass.powf(self.exponent);
            for &phi in &fractions {
                let (u, v) = (mass * phi, mass * (1.0 - phi));
                let (lo, hi) = ((t - u).max(a), (t + v).min(b));
                if hi > lo {
                    best = best.max(w * self.local_norm(lo, hi));
                }
            }
        }
        best
    }

    pub fn eval(&self, m: &RadonMeasure, x: f64) -> f64 {
        self.eval_t(m.cdf(x))
    }
}

fn sparse_table(base: Vec<f64>) -> Vec<Vec<f64>> {
    let n = base.len();
    let mut table = vec![base];
    let mut width = 1;
    while 2 * width <= n {
        let prev = table.last().unwrap();
        let next: Vec<f64> = (0..=n - 2 * width).map(|i| prev[i].max(prev[i + width])).collect();
        table.push(next);
        width *= 2;
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn chi() -> RealFunction {
        RealFunction::indicator(0.0, 1.0).unwrap()
    }

    #[test]
    fn hardy_littlewood_away_from_support() {
        let leb = RadonMeasure::lebesgue();
        let q = MaximalQuery::for_point(&leb, &chi(), 2.0);
        let v = maximal(&leb, &chi(), Exponent::ONE, Exponent::INFINITY, &q).unwrap();
        assert!((v - 0.5).abs() < 1e-3, "{v}");
        assert!(v <= 0.5 + 1e-12);
    }

    #[test]
    fn hardy_littlewood_inside_support() {
        let leb = RadonMeasure::lebesgue();
        let q = MaximalQuery::for_point(&leb, &chi(), 0.5);
        let v = maximal(&leb, &chi(), Exponent::ONE, Exponent::INFINITY, &q).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-9);
    }

    #[test]
    fn zero_function() {
        let leb = RadonMeasure::lebesgue();
        let z = RealFunction::zero();
        let q = MaximalQuery::for_point(&leb, &z, 3.0);
        assert_eq!(maximal(&leb, &z, Exponent::ONE, Exponent::INFINITY, &q).unwrap(), 0.0);
    }

    #[test]
    fn q_above_beta_is_rejected() {
        let leb = RadonMeasure::lebesgue();
        let q = MaximalQuery::for_point(&leb, &chi(), 0.0);
        let e = maximal(&leb, &chi(), Exponent::new(3.0).unwrap(), Exponent::new(2.0).unwrap(), &q).unwrap_err();
        assert!(matches!(e, Error::Hypothesis(_)));
    }

    #[test]
    fn refinement_is_monotone() {
        let m = RadonMeasure::power(0.5).unwrap();
        let f = RealFunction::tent(-1.0, 2.0).unwrap();
        let (q, beta) = (Exponent::new(2.0).unwrap(), Exponent::new(4.0).unwrap());
        let mut prev = 0.0;
        for (masses, splits) in [(8, 3), (15, 5), (29, 9), (57, 17)] {
            let query = MaximalQuery::with_counts(&m, &f, 3.0, masses, splits).grid_only();
            let v = maximal(&m, &f, q, beta, &query).unwrap();
            assert!(v >= prev, "{masses}: {v} < {prev}");
            prev = v;
        }
    }

    #[test]
    fn sampler_matches_grid_search() {
        let m = RadonMeasure::power(0.5).unwrap();
        let f = RealFunction::tent(-1.0, 2.0).unwrap();
        let (q, beta) = (Exponent::new(2.0).unwrap(), Exponent::new(4.0).unwrap());
        let sampler = MaximalSampler::new(&m, &f, q, beta, 4096).unwrap();
        for x in [-3.0, -0.2, 0.7, 5.0] {
            let query = MaximalQuery::for_point(&m, &f, x).grid_only();
            let direct = maximal(&m, &f, q, beta, &query).unwrap();
            assert_relative_eq!(sampler.eval(&m, x), direct, max_relative = 1e-3);
        }
    }

    #[test]
    fn sampler_sup_norm() {
        let leb = RadonMeasure::lebesgue();
        let s = MaximalSampler::new(&leb, &chi(), Exponent::INFINITY, Exponent::INFINITY, 64).unwrap();
        assert_eq!(s.eval(&leb, 0.5), 1.0);
        assert_eq!(s.eval(&leb, 3.0), 1.0);
    }
}
