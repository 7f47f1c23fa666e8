//! Selection of a bounded-overlap subcover from a family of intervals,
//! indexed by their measure midpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{IntervalRC, RadonMeasure};

/// Dense probe count for overlap measurement.
pub const OVERLAP_GRID: usize = 10_000;

/// `c` with `μ([a, c)) = μ([c, b))`.
pub fn midpoint(m: &RadonMeasure, i: &IntervalRC) -> Result<f64> {
    let (ta, tb) = (m.cdf(i.a), m.cdf(i.b));
    if !(tb > ta) || !(tb - ta).is_finite() {
        return Err(Error::InvalidArgument(format!("interval [{}, {}) has no positive finite mass", i.a, i.b)));
    }
    m.try_inv_cdf(0.5 * (ta + tb))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MidpointedFamily {
    pub intervals: Vec<IntervalRC>,
    pub midpoints: Vec<f64>,
    pub window: IntervalRC,
}

impl MidpointedFamily {
    pub fn new(m: &RadonMeasure, intervals: Vec<IntervalRC>, window: IntervalRC) -> Result<Self> {
        if !(window.a < window.b && window.mass.is_finite() && window.mass > 0.0) {
            return Err(Error::InvalidArgument(format!("window [{}, {}) needs positive finite mass", window.a, window.b)));
        }
        let mut midpoints = Vec::with_capacity(intervals.len());
        for i in &intervals {
            let c = midpoint(m, i)?;
            if !(i.a < c && c < i.b) {
                return Err(Error::Internal(format!("midpoint {c} escapes [{}, {})", i.a, i.b)));
            }
            let (left, right) = (m.mass(i.a, c), m.mass(c, i.b));
            if (left - right).abs() > 1e-9 * (left + right) {
                return Err(Error::Internal(format!("midpoint {c} splits [{}, {}) into {left} and {right}", i.a, i.b)));
            }
            midpoints.push(c);
        }
        Ok(Self { intervals, midpoints, window })
    }

    /// Indices whose midpoint lies in the window.
    pub fn in_window(&self) -> Vec<usize> {
        (0..self.intervals.len()).filter(|&k| self.window.contains(self.midpoints[k])).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Repeatedly take the heaviest interval whose midpoint is still uncovered.
    #[default]
    LargestMass,
    /// Repeatedly take the leftmost uncovered midpoint and its longest-reaching interval.
    LeftmostSweep,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cover {
    pub selected: Vec<usize>,
    pub max_overlap: usize,
    /// A point attaining `max_overlap`.
    pub witness: f64,
}

pub fn select_cover(fam: &MidpointedFamily) -> Result<Cover> {
    select_cover_with(fam, SelectionRule::default())
}

pub fn select_cover_with(fam: &MidpointedFamily, rule: SelectionRule) -> Result<Cover> {
    let candidates = fam.in_window();
    let iv = &fam.intervals;
    let mid = &fam.midpoints;
    let mut selected: Vec<usize> = Vec::new();
    let covered = |sel: &[usize], c: f64| sel.iter().any(|&s| iv[s].contains(c));
    match rule {
        SelectionRule::LargestMass => {
            let mut order = candidates.clone();
            order.sort_by(|&x, &y| iv[y].mass.total_cmp(&iv[x].mass).then(mid[x].total_cmp(&mid[y])).then(x.cmp(&y)));
            for k in order {
                if !covered(&selected, mid[k]) {
                    selected.push(k);
                }
            }
        }
        SelectionRule::LeftmostSweep => {
            let mut order = candidates.clone();
            order.sort_by(|&x, &y| {
                mid[x].total_cmp(&mid[y]).then(iv[y].b.total_cmp(&iv[x].b)).then(iv[y].mass.total_cmp(&iv[x].mass)).then(x.cmp(&y))
            });
            for k in order {
                if !covered(&selected, mid[k]) {
                    selected.push(k);
                }
            }
        }
    }
    if let Some(&k) = candidates.iter().find(|&&k| !covered(&selected, mid[k])) {
        return Err(Error::Internal(format!("midpoint {} was left uncovered", mid[k])));
    }
    let chosen: Vec<IntervalRC> = selected.iter().map(|&k| iv[k]).collect();
    let (max_overlap, witness) = max_overlap(&chosen, OVERLAP_GRID);
    Ok(Cover { selected, max_overlap, witness })
}

/// Max of `Σ χ_{[a_i, b_i)}` over a dense grid on the hull plus every endpoint.
pub fn max_overlap(intervals: &[IntervalRC], grid: usize) -> (usize, f64) {
    if intervals.is_empty() {
        return (0, f64::NAN);
    }
    let mut starts: Vec<f64> = intervals.iter().map(|i| i.a).collect();
    let mut ends: Vec<f64> = intervals.iter().map(|i| i.b).collect();
    starts.sort_by(f64::total_cmp);
    ends.sort_by(f64::total_cmp);
    let (lo, hi) = (starts[0], ends[ends.len() - 1]);
    let count = |p: f64| starts.partition_point(|&a| a <= p) - ends.partition_point(|&b| b <= p);
    let dense = (0..grid).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / grid as f64);
    let probes = dense.chain(starts.iter().copied()).chain(ends.iter().copied());
    probes.fold((0, f64::NAN), |best, p| {
        let c = count(p);
        if c > best.0 {
            (c, p)
        } else {
            best
        }
    })
}

/// Random family block: midpoints uniform in measure coordinates over
/// `center_range` (widened by a quarter on each side), masses log-uniform in
/// `mass_range`, window `center_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamilySpec {
    pub count: usize,
    pub mass_range: [f64; 2],
    pub center_range: [f64; 2],
    pub seed: u64,
}

impl Default for RandomFamilySpec {
    fn default() -> Self {
        Self { count: 40, mass_range: [0.01, 10.0], center_range: [-5.0, 5.0], seed: 0 }
    }
}

impl RandomFamilySpec {
    pub fn generate(&self, m: &RadonMeasure) -> Result<MidpointedFamily> {
        let [m0, m1] = self.mass_range;
        let [c0, c1] = self.center_range;
        if !(m0 > 0.0 && m0 <= m1 && m1.is_finite()) {
            return Err(Error::InvalidArgument(format!("mass range [{m0}, {m1}] must be positive and ordered")));
        }
        if !(c0 < c1 && c0.is_finite() && c1.is_finite()) {
            return Err(Error::InvalidArgument(format!("center range [{c0}, {c1}) must be finite and nonempty")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (t0, t1) = (m.cdf(c0), m.cdf(c1));
        let pad = 0.25 * (t1 - t0);
        let mut intervals = Vec::with_capacity(self.count);
        for _ in 0..self.count {
            let tc = rng.gen_range(t0 - pad..t1 + pad);
            let mass = if m1 > m0 { (m0.ln() + rng.gen::<f64>() * (m1.ln() - m0.ln())).exp() } else { m0 };
            intervals.push(m.interval_t(tc - 0.5 * mass, tc + 0.5 * mass)?);
        }
        MidpointedFamily::new(m, intervals, m.interval(c0, c1)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverTrials {
    pub trials: usize,
    pub max_overlap: usize,
    pub worst_seed: u64,
    pub mean_selected: f64,
    /// Seeds whose cover exceeded the overlap bound.
    pub violations: Vec<u64>,
}

/// Runs `trials` random families with seeds `seed, seed + 1, ...`, each with
/// a count drawn from `5..=base.count`.
pub fn covering_trials(
    m: &RadonMeasure,
    base: &RandomFamilySpec,
    trials: usize,
    seed: u64,
    rule: SelectionRule,
    bound: usize,
) -> Result<CoverTrials> {
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k);
            let count = ChaCha8Rng::seed_from_u64(s ^ 0x9e37_79b9_7f4a_7c15).gen_range(5..=base.count.max(5));
            let fam = RandomFamilySpec { count, seed: s, ..*base }.generate(m)?;
            let cover = select_cover_with(&fam, rule)?;
            Ok((s, cover.max_overlap, cover.selected.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CoverTrials { trials, max_overlap: 0, worst_seed: seed, mean_selected: 0.0, violations: Vec::new() };
    for &(s, overlap, selected) in &results {
        if overlap > out.max_overlap {
            out.max_overlap = overlap;
            out.worst_seed = s;
        }
        if overlap > bound {
            out.violations.push(s);
        }
        out.mean_selected += selected as f64;
    }
    if trials > 0 {
        out.mean_selected /= trials as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints() {
        let leb = RadonMeasure::lebesgue();
        assert_eq!(midpoint(&leb, &leb.interval(0.0, 2.0).unwrap()).unwrap(), 1.0);
        assert_eq!(midpoint(&leb, &leb.interval(-1.0, 3.0).unwrap()).unwrap(), 1.0);
        let pw = RadonMeasure::power(0.5).unwrap();
        assert!((midpoint(&pw, &pw.interval(0.0, 1.0).unwrap()).unwrap() - 0.25).abs() < 1e-12);
        let empty = IntervalRC { a: 1.0, b: 1.0, mass: 0.0 };
        assert!(midpoint(&leb, &empty).is_err());
    }

    #[test]
    fn disjoint_intervals_are_all_selected() {
        let leb = RadonMeasure::lebesgue();
        let ivs: Vec<IntervalRC> = (0..5).map(|k| leb.interval(2.0 * k as f64, 2.0 * k as f64 + 1.0).unwrap()).collect();
        let fam = MidpointedFamily::new(&leb, ivs, leb.interval(0.0, 10.0).unwrap()).unwrap();
        let c = select_cover(&fam).unwrap();
        assert_eq!(c.selected.len(), 5);
        assert_eq!(c.max_overlap, 1);
    }

    #[test]
    fn marching_midpoints_defeat_the_sweep() {
        // Each interval contains 0 and has its midpoint just past the previous one.
        let leb = RadonMeasure::lebesgue();
        let mut ivs = Vec::new();
        let (mut c, mut r) = (1.0f64, 1.1f64);
        for _ in 0..8 {
            ivs.push(leb.interval(c - r, c + r).unwrap());
            c = c + r + 0.1;
            r = c + 0.1;
        }
        let fam = MidpointedFamily::new(&leb, ivs, leb.interval(0.0, 1e4).unwrap()).unwrap();
        assert_eq!(select_cover_with(&fam, SelectionRule::LeftmostSweep).unwrap().max_overlap, 8);
        assert_eq!(select_cover(&fam).unwrap().max_overlap, 1);
    }

    #[test]
    fn random_trials_are_deterministic() {
        let leb = RadonMeasure::lebesgue();
        let spec = RandomFamilySpec::default();
        let a = covering_trials(&leb, &spec, 50, 7, SelectionRule::LargestMass, 5).unwrap();
        let b = covering_trials(&leb, &spec, 50, 7, SelectionRule::LargestMass, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.violations.is_empty(), "{a:?}");
    }
}
