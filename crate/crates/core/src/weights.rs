//! Muckenhoupt-type constants over finite interval families, the two-weight
//! condition for the maximal operator, and sampled reverse-Hölder fits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::{interp, RealFunction};
use crate::measure::{IntervalRC, RadonMeasure};
use crate::quad::QuadOptions;

/// Growth ratio over the last family doubling above which a constant is
/// reported as diverging.
pub const DIVERGENCE_RATIO: f64 = 1.2;
const POSITIVITY_SAMPLES: usize = 64;
const ESS_SUP_SAMPLES: usize = 1024;

/// Weight block of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `|x|^b`.
    Power { b: f64 },
    One,
    /// Positive values, linear in between and constant beyond the ends.
    Table { points: Vec<[f64; 2]> },
}

impl WeightSpec {
    pub fn build(&self) -> Result<RealFunction> {
        match self {
            WeightSpec::One => Ok(RealFunction::from_fn("1", |_| 1.0)),
            WeightSpec::Power { b } => {
                let b = *b;
                if !b.is_finite() {
                    return Err(Error::InvalidArgument(format!("weight exponent {b} must be finite")));
                }
                Ok(RealFunction::from_fn(format!("|x|^{b}"), move |x: f64| x.abs().powf(b)).with_breakpoints(vec![0.0]))
            }
            WeightSpec::Table { points } => {
                if points.len() < 2 || points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::InvalidArgument("weight table needs increasing abscissae".into()));
                }
                if points.iter().any(|p| !(p[0].is_finite() && p[1] > 0.0 && p[1].is_finite())) {
                    return Err(Error::InvalidArgument("weight table values must be finite and positive".into()));
                }
                let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
                let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
                let (x0, y0) = (xs[0], ys[0]);
                let (x1, y1) = (xs[xs.len() - 1], ys[ys.len() - 1]);
                let breaks = xs.clone();
                Ok(RealFunction::from_fn("table weight", move |x: f64| {
                    if x <= x0 {
                        y0
                    } else if x >= x1 {
                        y1
                    } else {
                        interp(&xs, &ys, x, y1)
                    }
                })
                .with_breakpoints(breaks))
            }
        }
    }

    /// `w^c` for a spec-level power.
    pub fn powered(&self, c: f64) -> Self {
        match self {
            WeightSpec::One => WeightSpec::One,
            WeightSpec::Power { b } => WeightSpec::Power { b: b * c },
            WeightSpec::Table { points } => WeightSpec::Table { points: points.iter().map(|p| [p[0], p[1].powf(c)]).collect() },
        }
    }
}

/// Intervals grouped by refinement level; level `k + 1` doubles level `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFamily {
    pub levels: Vec<Vec<IntervalRC>>,
}

impl IntervalFamily {
    pub fn single(intervals: Vec<IntervalRC>) -> Self {
        Self { levels: vec![intervals] }
    }

    /// Blocks of mass `base` anchored at `x0` around `centers` central blocks,
    /// with their aligned unions of `2^k` blocks for `k < scales`.
    pub fn dyadic_level(m: &RadonMeasure, x0: f64, base: f64, centers: usize, scales: usize) -> Result<Vec<IntervalRC>> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::InvalidArgument(format!("block mass {base} must be positive")));
        }
        let t0 = m.cdf(x0);
        let half = (centers / 2) as i64;
        let mut keys: Vec<(i64, i64)> = Vec::new();
        for i in -half..(centers as i64 - half) {
            for k in 0..scales as u32 {
                let width = 1i64 << k;
                let j = i.div_euclid(width) * width;
                keys.push((j, j + width));
            }
        }
        keys.sort_unstable();
        keys.dedup();
        keys.into_iter().map(|(i0, i1)| m.interval_t(t0 + i0 as f64 * base, t0 + i1 as f64 * base)).collect()
    }

    /// Default family: 32 centres, 8 dyadic scales, with the block mass
    /// halved at each of `refinements` further levels.
    pub fn standard(m: &RadonMeasure, x0: f64, base: f64, refinements: usize) -> Result<Self> {
        Self::with_counts(m, x0, base, refinements, 32, 8)
    }

    pub fn with_counts(m: &RadonMeasure, x0: f64, base: f64, refinements: usize, centers: usize, scales: usize) -> Result<Self> {
        let levels = (0..=refinements)
            .map(|l| Self::dyadic_level(m, x0, base * 0.5f64.powi(l as i32), centers, scales))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { levels })
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &IntervalRC> {
        self.levels.iter().flatten()
    }

    /// The family with another level appended.
    pub fn extended(mut self, level: Vec<IntervalRC>) -> Self {
        self.levels.push(level);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightConditionResult {
    /// Sup over the tested intervals (`∞` when an average diverges).
    pub constant: f64,
    pub argmax_interval: IntervalRC,
    pub interval_count: usize,
    /// Constant over all levels divided by the constant without the last one.
    pub growth_ratio: f64,
    pub diverging: bool,
}

/// `μ`-average of `g` over `I`; `∞` when the integral fails to converge.
fn average(m: &RadonMeasure, g: &dyn Fn(f64) -> f64, breaks: &[f64], i: &IntervalRC) -> Result<f64> {
    match m.integrate_with(g, i.a, i.b, breaks, &QuadOptions::default()) {
        Ok(r) if r.value.is_finite() => Ok(r.value / i.mass),
        Ok(_) => Ok(f64::INFINITY),
        Err(e) if e.is_numerical() => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn check_positive(m: &RadonMeasure, w: &RealFunction, i: &IntervalRC) -> Result<()> {
    let (ta, tb) = (m.cdf(i.a), m.cdf(i.b));
    for k in 0..POSITIVITY_SAMPLES {
        let x = m.inv_cdf(ta + (k as f64 + 0.5) / POSITIVITY_SAMPLES as f64 * (tb - ta));
        let v = w.eval(x);
        if !(v > 0.0) {
            return Err(Error::Hypothesis(format!("weight '{}' is not positive at {x} (value {v})", w.label())));
        }
    }
    Ok(())
}

/// Sup of `product` over the family, with the growth ratio of the last level.
fn sup_over<F>(family: &IntervalFamily, product: F) -> Result<WeightConditionResult>
where
    F: Fn(&IntervalRC) -> Result<f64> + Sync,
{
    if family.is_empty() {
        return Err(Error::InvalidArgument("interval family is empty".into()));
    }
    let mut level_best = Vec::with_capacity(family.levels.len());
    for level in &family.levels {
        let values = level.par_iter().map(|i| product(i).map(|v| (v, *i))).collect::<Result<Vec<_>>>()?;
        let best = values.into_iter().fold(None, |acc: Option<(f64, IntervalRC)>, (v, i)| match acc {
            Some((b, _)) if b >= v => acc,
            _ => Some((v, i)),
        });
        level_best.push(best);
    }
    let mut overall: Option<(f64, IntervalRC)> = None;
    let mut before_last = f64::NEG_INFINITY;
    for (k, best) in level_best.iter().enumerate() {
        if k + 1 == level_best.len() {
            before_last = overall.map_or(f64::NEG_INFINITY, |o| o.0);
        }
        if let Some((v, i)) = *best {
            if overall.map_or(true, |o| v > o.0) {
                overall = Some((v, i));
            }
        }
    }
    let (constant, argmax_interval) = overall.ok_or_else(|| Error::InvalidArgument("interval family is empty".into()))?;
    let growth_ratio = if !constant.is_finite() {
        f64::INFINITY
    } else if family.levels.len() < 2 || !before_last.is_finite() {
        1.0
    } else {
        constant / before_last
    };
    Ok(WeightConditionResult {
        constant,
        argmax_interval,
        interval_count: family.len(),
        growth_ratio,
        diverging: !constant.is_finite() || growth_ratio > DIVERGENCE_RATIO,
    })
}

/// `A^μ_r(w)`: `(⨍_I w)(⨍_I w^{-1/(r-1)})^{r-1}`, or `(⨍_I w) ess sup_I w^{-1}`
/// for `r = 1`, maximised over the family.
pub fn a_r_constant(m: &RadonMeasure, w: &RealFunction, r: f64, family: &IntervalFamily) -> Result<WeightConditionResult> {
    if !(r >= 1.0) {
        return Err(Error::InvalidArgument(format!("A_r needs r >= 1, got {r}")));
    }
    let breaks = w.breakpoints().to_vec();
    sup_over(family, |i| {
        check_positive(m, w, i)?;
        let mean = average(m, &|x| w.eval(x), &breaks, i)?;
        let dual = if r == 1.0 {
            ess_sup_recip(m, w, i)
        } else if r.is_infinite() {
            return Err(Error::InvalidArgument("A_r needs a finite r".into()));
        } else {
            let e = -1.0 / (r - 1.0);
            average(m, &|x| w.eval(x).powf(e), &breaks, i)?.powf(r - 1.0)
        };
        Ok(mean * dual)
    })
}

fn ess_sup_recip(m: &RadonMeasure, w: &RealFunction, i: &IntervalRC) -> f64 {
    let (ta, tb) = (m.cdf(i.a), m.cdf(i.b));
    (0..ESS_SUP_SAMPLES)
        .map(|k| 1.0 / w.eval(m.inv_cdf(ta + (k as f64 + 0.5) / ESS_SUP_SAMPLES as f64 * (tb - ta))))
        .fold(0.0, f64::max)
}

/// `1/θ = 1/q1 - 1/β`, checked together with `q <= q1`.
pub fn theta(q: Exponent, q1: Exponent, beta: Exponent) -> Result<f64> {
    if q.value() > q1.value() {
        return Err(Error::Hypothesis(format!("two-weight condition needs q <= q1, got q = {q}, q1 = {q1}")));
    }
    let inv = q1.recip() - beta.recip();
    if !(inv > 0.0) {
        return Err(Error::Hypothesis(format!("1/theta = 1/q1 - 1/beta = {inv} must be positive")));
    }
    Ok(1.0 / inv)
}

/// The two-weight condition on `v`:
/// `(⨍_I v^θ)^{1/θ} (⨍_I v^{-σ})^{1/σ}` with `1/σ = 1/q - 1/q1`,
/// or `(⨍_I v^θ)^{1/θ} ess sup_I v^{-1}` when `q = q1`.
pub fn thm21_condition(
    m: &RadonMeasure,
    v: &RealFunction,
    q: Exponent,
    q1: Exponent,
    beta: Exponent,
    family: &IntervalFamily,
) -> Result<WeightConditionResult> {
    let th = theta(q, q1, beta)?;
    let inv_sigma = q.recip() - q1.recip();
    let breaks = v.breakpoints().to_vec();
    sup_over(family, |i| {
        check_positive(m, v, i)?;
        let first = average(m, &|x| v.eval(x).powf(th), &breaks, i)?.powf(1.0 / th);
        let second = if inv_sigma <= 0.0 {
            ess_sup_recip(m, v, i)
        } else {
            let sigma = 1.0 / inv_sigma;
            average(m, &|x| v.eval(x).powf(-sigma), &breaks, i)?.powf(inv_sigma)
        };
        Ok(first * second)
    })
}

/// `r = 1 + θ(1/q - 1/q1)`, the index for which `A_r(v^θ)` equals the
/// two-weight constant raised to `θ`.
pub fn matching_r(q: Exponent, q1: Exponent, beta: Exponent) -> Result<f64> {
    Ok(1.0 + theta(q, q1, beta)? * (q.recip() - q1.recip()))
}

/// Mass ratios `μ(E)/μ(I)` drawn by the subset sampler.
pub const SUBSET_STRATA: [f64; 10] = [0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0];

/// Random `(I, E ⊂ I)` pairs with `E` a union of up to four subintervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsetSampler {
    pub pairs: usize,
    pub seed: u64,
}

impl Default for SubsetSampler {
    fn default() -> Self {
        Self { pairs: 2000, seed: 0 }
    }
}

/// One sampled pair, as mass and weight ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubsetSample {
    pub interval: IntervalRC,
    pub mass_ratio: f64,
    pub weight_ratio: f64,
}

impl SubsetSampler {
    pub fn new(pairs: usize, seed: u64) -> Self {
        Self { pairs, seed }
    }

    /// `E` pieces in measure coordinates for each pair, then both ratios.
    pub fn sample(&self, m: &RadonMeasure, w: &RealFunction, family: &IntervalFamily) -> Result<Vec<SubsetSample>> {
        let intervals: Vec<&IntervalRC> = family.iter().collect();
        if intervals.is_empty() {
            return Err(Error::InvalidArgument("interval family is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut plans = Vec::with_capacity(self.pairs);
        for k in 0..self.pairs {
            let i = *intervals[rng.gen_range(0..intervals.len())];
            let ratio = SUBSET_STRATA[k % SUBSET_STRATA.len()];
            let pieces = if ratio == 1.0 { 1 } else { rng.gen_range(1..=4usize) };
            let (ta, tb) = (m.cdf(i.a), m.cdf(i.b));
            let total = tb - ta;
            let lengths = random_split(&mut rng, ratio * total, pieces);
            let gaps = random_split(&mut rng, (1.0 - ratio) * total, pieces + 1);
            let mut spans = Vec::with_capacity(pieces);
            let mut t = ta + gaps[0];
            for (len, gap) in lengths.iter().zip(&gaps[1..]) {
                spans.push((t, t + len));
                t += len + gap;
            }
            plans.push((i, ratio, spans));
        }
        let breaks = w.breakpoints().to_vec();
        plans
            .par_iter()
            .map(|(i, ratio, spans)| {
                let whole = integral(m, w, &breaks, i.a, i.b)?;
                let part = if *ratio == 1.0 {
                    whole
                } else {
                    spans
                        .iter()
                        .map(|&(s0, s1)| integral(m, w, &breaks, m.inv_cdf(s0), m.inv_cdf(s1)))
                        .sum::<Result<f64>>()?
                };
                Ok(SubsetSample { interval: *i, mass_ratio: *ratio, weight_ratio: part / whole })
            })
            .collect()
    }
}

fn integral(m: &RadonMeasure, w: &RealFunction, breaks: &[f64], a: f64, b: f64) -> Result<f64> {
    Ok(m.integrate_with(|x| w.eval(x), a, b, breaks, &QuadOptions::default())?.value)
}

/// `total` split into `n` positive parts with uniform spacings.
fn random_split(rng: &mut ChaCha8Rng, total: f64, n: usize) -> Vec<f64> {
    let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
    cuts.sort_by(f64::total_cmp);
    let mut out = Vec::with_capacity(n);
    let mut prev = 0.0;
    for c in cuts.into_iter().chain(std::iter::once(1.0)) {
        out.push((c - prev) * total);
        prev = c;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReverseHolder {
    pub c: f64,
    pub delta: f64,
    /// Fresh-sample pairs above `1.05 C (μ(E)/μ(I))^{0.95 δ}`.
    pub violations: usize,
    pub fit_pairs: usize,
    pub test_pairs: usize,
}

/// Fits `w(E)/w(I) <= C (μ(E)/μ(I))^δ` on one sample and re-tests the
/// relaxed bound on a sample drawn with the next seed.
pub fn reverse_holder_check(
    m: &RadonMeasure,
    w: &RealFunction,
    family: &IntervalFamily,
    sampler: &SubsetSampler,
) -> Result<ReverseHolder> {
    let fit = sampler.sample(m, w, family)?;
    let (c, delta) = fit_envelope(&fit);
    let fresh = SubsetSampler { seed: sampler.seed.wrapping_add(1), ..*sampler }.sample(m, w, family)?;
    let violations = fresh
        .iter()
        .filter(|s| s.weight_ratio > 1.05 * c * s.mass_ratio.powf(0.95 * delta) * (1.0 + 1e-12))
        .count();
    Ok(ReverseHolder { c, delta, violations, fit_pairs: fit.len(), test_pairs: fresh.len() })
}

/// Least-squares slope on log-log axes, clipped to `(0, 1]`, with the
/// intercept raised to the upper envelope.
pub fn fit_envelope(samples: &[SubsetSample]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.mass_ratio > 0.0 && s.weight_ratio > 0.0)
        .map(|s| (s.mass_ratio.ln(), s.weight_ratio.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.is_empty() {
        return (1.0, 1.0);
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 1.0 };
    let delta = slope.clamp(1e-6, 1.0);
    let log_c = pts.iter().map(|p| p.1 - delta * p.0).fold(f64::NEG_INFINITY, f64::max);
    (log_c.exp(), delta)
}

/// Largest sampled mass ratio `δ̂` such that every sampled pair with
/// `μ(E) <= δ̂ μ(I)` had `w(E) <= ε w(I)`; zero when none qualifies.
pub fn a_infty_epsilon_delta(
    m: &RadonMeasure,
    w: &RealFunction,
    eps: f64,
    family: &IntervalFamily,
    sampler: &SubsetSampler,
) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} must lie in (0, 1]")));
    }
    Ok(epsilon_delta(&sampler.sample(m, w, family)?, eps))
}

pub fn epsilon_delta(samples: &[SubsetSample], eps: f64) -> f64 {
    let mut sorted: Vec<&SubsetSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.mass_ratio.total_cmp(&b.mass_ratio));
    let limit = eps * (1.0 + 1e-9);
    let mut best = 0.0;
    let mut k = 0;
    while k < sorted.len() {
        let ratio = sorted[k].mass_ratio;
        let mut j = k;
        while j < sorted.len() && sorted[j].mass_ratio == ratio {
            if sorted[j].weight_ratio > limit {
                return best;
            }
            j += 1;
        }
        best = ratio;
        k = j;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn leb_family() -> IntervalFamily {
        IntervalFamily::standard(&RadonMeasure::lebesgue(), 0.0, 1.0, 2).unwrap()
    }

    #[test]
    fn unit_weight_is_exactly_one() {
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::One.build().unwrap();
        let r = a_r_constant(&leb, &w, 2.0, &leb_family()).unwrap();
        assert!((r.constant - 1.0).abs() < 1e-9);
        assert!(!r.diverging);
        let r1 = a_r_constant(&leb, &w, 1.0, &leb_family()).unwrap();
        assert!((r1.constant - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sqrt_weight_matches_closed_form() {
        // On [0, h) and [-h, h): (2/3) h^{1/2} * 2 h^{-1/2} = 4/3.
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::Power { b: 0.5 }.build().unwrap();
        let r = a_r_constant(&leb, &w, 2.0, &leb_family()).unwrap();
        assert!(!r.diverging);
        assert!(r.constant <= 4.0 / 3.0 + 1e-6, "{}", r.constant);
        assert!(r.constant >= 4.0 / 3.0 - 1e-6, "{}", r.constant);
    }

    #[test]
    fn cubic_weight_diverges() {
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::Power { b: 3.0 }.build().unwrap();
        let r = a_r_constant(&leb, &w, 2.0, &leb_family()).unwrap();
        assert!(r.diverging);
    }

    #[test]
    fn nonpositive_weight_is_rejected() {
        let leb = RadonMeasure::lebesgue();
        let w = RealFunction::from_fn("x", |x| x);
        assert!(matches!(a_r_constant(&leb, &w, 2.0, &leb_family()), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn scale_invariance() {
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::Power { b: 0.5 }.build().unwrap();
        let a = a_r_constant(&leb, &w, 2.0, &leb_family()).unwrap().constant;
        let b = a_r_constant(&leb, &w.scaled(7.0), 2.0, &leb_family()).unwrap().constant;
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn two_weight_identity() {
        let leb = RadonMeasure::lebesgue();
        let spec = WeightSpec::Power { b: 0.1 };
        let v = spec.build().unwrap();
        let (q, q1, beta) = (Exponent::ONE, Exponent::new(2.0).unwrap(), Exponent::new(4.0).unwrap());
        let th = theta(q, q1, beta).unwrap();
        assert_relative_eq!(th, 4.0);
        let c = thm21_condition(&leb, &v, q, q1, beta, &leb_family()).unwrap().constant;
        let w = spec.powered(th).build().unwrap();
        let a = a_r_constant(&leb, &w, matching_r(q, q1, beta).unwrap(), &leb_family()).unwrap().constant;
        assert_relative_eq!(c.powf(th), a, max_relative = 1e-6);
    }

    #[test]
    fn unit_weight_reverse_holder() {
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::One.build().unwrap();
        let rh = reverse_holder_check(&leb, &w, &leb_family(), &SubsetSampler::new(300, 3)).unwrap();
        assert_relative_eq!(rh.c, 1.0, max_relative = 1e-9);
        assert_relative_eq!(rh.delta, 1.0, max_relative = 1e-9);
        assert_eq!(rh.violations, 0);
    }

    #[test]
    fn epsilon_delta_for_unit_weight() {
        let leb = RadonMeasure::lebesgue();
        let w = WeightSpec::One.build().unwrap();
        let s = SubsetSampler::new(200, 1);
        assert_eq!(a_infty_epsilon_delta(&leb, &w, 0.5, &leb_family(), &s).unwrap(), 0.5);
        assert_eq!(a_infty_epsilon_delta(&leb, &w, 1.0, &leb_family(), &s).unwrap(), 1.0);
    }
}
