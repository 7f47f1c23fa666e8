use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::RealFunction;
use crate::measure::RadonMeasure;
use crate::operators::kernel::Kernel;
use crate::operators::maximal::{maximal, MaximalQuery};
use crate::quad::{self, QuadOptions};

/// Graded levels toward the kernel singularity.
pub const GRADING_LEVELS: usize = 40;

/// `∫` of `g` from `edge + h` down to `edge` over panels halving toward `edge`,
/// with the geometric remainder extrapolated from the last two levels.
pub fn graded_integral(g: &dyn Fn(f64) -> f64, edge: f64, other: f64, tol: f64) -> Result<f64> {
    let h = other - edge;
    // Below this width the distance to the edge is lost to rounding.
    let floor = 1e-7 * edge.abs().max(h.abs());
    let mut partial = Vec::with_capacity(GRADING_LEVELS);
    let mut sum = 0.0;
    let mut prev: Option<f64> = None;
    for j in 0..GRADING_LEVELS {
        let outer = edge + h * 0.5f64.powi(j as i32);
        let inner = edge + h * 0.5f64.powi(j as i32 + 1);
        let opts = QuadOptions { tol, abs_tol: 0.125 * tol * sum, ..QuadOptions::default() };
        let c = quad::integrate(g, inner, outer, &opts)?.value.abs();
        sum += c;
        partial.push(sum);
        let last = j + 1 == GRADING_LEVELS || (j >= 3 && (inner - edge).abs() < floor);
        if let Some(p) = prev {
            if c == 0.0 && p == 0.0 {
                return Ok(sum * h.signum());
            }
            let ratio = c / p;
            if j >= 3 && ratio < 1.0 {
                let rest = c * ratio / (1.0 - ratio);
                if rest <= tol * sum || last {
                    return Ok((sum + rest) * h.signum());
                }
            }
        }
        if last {
            break;
        }
        prev = Some(c);
    }
    Err(Error::Divergence { partial_sums: partial })
}

/// `Kf(x) = ∫ k(x - y) f(y) dμ(y)` for `f >= 0` with bounded support.
pub fn potential(m: &RadonMeasure, f: &RealFunction, k: &Kernel, x: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let s = f.support();
    if !s.is_bounded() || f.tail_bound() > 0.0 {
        return Err(Error::InvalidArgument(format!("function '{}' needs a bounded support", f.label())));
    }
    let (ta, tb) = (m.cdf(s.a), m.cdf(s.b));
    let t = m.cdf(x);
    let mut splits: Vec<f64> = f
        .breakpoints()
        .iter()
        .chain(m.breakpoints().iter())
        .copied()
        .chain(k.breaks().iter().flat_map(|&r| [x - r, x + r]))
        .chain(std::iter::once(x))
        .filter(|&y| y > s.a && y < s.b)
        .map(|y| m.cdf(y))
        .chain([ta, tb])
        .collect();
    splits.sort_by(f64::total_cmp);
    splits.dedup();

    let integrand = |tt: f64| {
        let y = m.inv_cdf(tt);
        let fy = f.eval(y);
        if fy == 0.0 {
            0.0
        } else {
            k.eval(x - y) * fy
        }
    };
    let singular = k.singularity.is_some();
    let opts = QuadOptions { tol, ..QuadOptions::default() };
    let mut total = 0.0;
    for w in splits.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        total += if singular && lo == t {
            graded_integral(&integrand, lo, hi, tol)?
        } else if singular && hi == t {
            -graded_integral(&integrand, hi, lo, tol)?
        } else {
            quad::integrate(integrand, lo, hi, &opts)?.value
        };
    }
    Ok(total)
}

/// `I_γ f(x) = ∫ |x - y|^{γ-1} f(y) dy` against Lebesgue measure.
pub fn riesz_potential(f: &RealFunction, gamma: f64, x: f64, tol: f64) -> Result<f64> {
    let k = Kernel::riesz(gamma)?;
    potential(&RadonMeasure::lebesgue(), f, &k, x, tol)
}

/// `F(y) = f(y) |y|^a`.
pub fn power_twist(f: &RealFunction, a: f64) -> RealFunction {
    let w = RealFunction::from_fn(format!("|y|^{a}"), move |y: f64| y.abs().powf(a));
    f.product(&w).with_breakpoints(vec![0.0]).with_label(format!("{}*|y|^{a}", f.label()))
}

/// The same potential as `K F(x)` under `dμ = |y|^{-a} dy` with `F = f |y|^a`.
pub fn riesz_potential_power_route(f: &RealFunction, gamma: f64, a: f64, x: f64, tol: f64) -> Result<f64> {
    let m = RadonMeasure::power(a)?;
    let k = Kernel::riesz(gamma)?;
    potential(&m, &power_twist(f, a), &k, x, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarField {
    /// `Kf(x)`.
    pub lhs: f64,
    /// `(μ-ratio)^{1/η} 𝔪f(x)`.
    pub rhs_factor: f64,
    pub mass_ratio: f64,
    pub maximal: f64,
}

/// Interval geometry `y1 < x1 < x2 < y2` of the far-field bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FarFieldGeometry {
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

impl FarFieldGeometry {
    /// Flanks of mass `μ([x1, x2])` on both sides.
    pub fn symmetric(m: &RadonMeasure, x1: f64, x2: f64) -> Result<Self> {
        let (t1, t2) = (m.cdf(x1), m.cdf(x2));
        let w = t2 - t1;
        Ok(Self { x1, x2, y1: m.try_inv_cdf(t1 - w)?, y2: m.try_inv_cdf(t2 + w)? })
    }

    pub fn check(&self, m: &RadonMeasure) -> Result<()> {
        let Self { x1, x2, y1, y2 } = *self;
        if !(y1 < x1 && x1 < x2 && x2 < y2) {
            return Err(Error::Hypothesis(format!("far-field geometry needs y1 < x1 < x2 < y2, got {y1}, {x1}, {x2}, {y2}")));
        }
        let (left, mid, right) = (m.mass(y1, x1), m.mass(x1, x2), m.mass(x2, y2));
        if (left - right).abs() > 1e-8 * left.max(right) {
            return Err(Error::Hypothesis(format!("flank masses differ: {left} vs {right}")));
        }
        if left < mid * (1.0 - 1e-8) {
            return Err(Error::Hypothesis(format!("flank mass {left} is below the central mass {mid}")));
        }
        Ok(())
    }
}

/// Both sides of the far-field bound at `x` outside `[y1, y2]`.
pub fn farfield_bound_check(
    m: &RadonMeasure,
    f: &RealFunction,
    q: Exponent,
    beta: Exponent,
    geometry: &FarFieldGeometry,
    x: f64,
    k: &Kernel,
) -> Result<FarField> {
    geometry.check(m)?;
    let FarFieldGeometry { x1, x2, y1, y2 } = *geometry;
    if (y1..=y2).contains(&x) {
        return Err(Error::Hypothesis(format!("point {x} lies inside [{y1}, {y2}]")));
    }
    let s = f.support();
    if !s.is_bounded() || s.a < x1 || s.b > x2 || f.tail_bound() > 0.0 {
        return Err(Error::Hypothesis(format!("support of '{}' is not inside [{x1}, {x2}]", f.label())));
    }
    let (ta, tb) = (m.cdf(s.a), m.cdf(s.b));
    for j in 0..1024 {
        let y = m.inv_cdf(ta + (j as f64 + 0.5) / 1024.0 * (tb - ta));
        if f.eval(y) < 0.0 {
            return Err(Error::Hypothesis(format!("'{}' is negative at {y}", f.label())));
        }
    }
    let lhs = potential(m, f, k, x, 1e-10)?;
    let inv_eta = 1.0 - beta.recip();
    let mass_ratio = if x > y2 { m.mass(x2, x) / m.mass(0.0, x - x2) } else { m.mass(x, x1) / m.mass(x - x1, 0.0) };
    let mf = maximal(m, f, q, beta, &MaximalQuery::for_point(m, f, x))?;
    Ok(FarField { lhs, rhs_factor: mass_ratio.powf(inv_eta) * mf, mass_ratio, maximal: mf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn riesz_of_symmetric_indicator() {
        let f = RealFunction::indicator(-1.0, 1.0).unwrap();
        assert_relative_eq!(riesz_potential(&f, 0.5, 0.0, 1e-10).unwrap(), 4.0, max_relative = 1e-8);
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        assert_relative_eq!(riesz_potential(&f, 0.5, 0.0, 1e-10).unwrap(), 2.0, max_relative = 1e-8);
        assert_eq!(riesz_potential(&RealFunction::zero(), 0.5, 0.3, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn riesz_interior_point() {
        // ∫_0^1 |x-y|^{-1/2} dy = 2(√x + √(1-x))
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        for x in [0.1f64, 0.37, 0.9] {
            let exact = 2.0 * (x.sqrt() + (1.0 - x).sqrt());
            assert_relative_eq!(riesz_potential(&f, 0.5, x, 1e-10).unwrap(), exact, max_relative = 1e-8);
        }
    }

    #[test]
    fn bounded_kernel_disjoint_support() {
        let leb = RadonMeasure::lebesgue();
        let f = RealFunction::indicator(0.0, 1.0).unwrap();
        let k = Kernel::indicator(1.0).unwrap();
        assert_eq!(potential(&leb, &f, &k, 3.0, 1e-8).unwrap(), 0.0);
        assert_relative_eq!(potential(&leb, &f, &k, 1.5, 1e-10).unwrap(), 0.5, max_relative = 1e-10);
    }

    #[test]
    fn routes_agree() {
        let f = RealFunction::tent(-1.0, 1.5).unwrap();
        for (a, gamma) in [(0.25, 0.4), (0.5, 0.6)] {
            for x in [-2.0, -0.3, 0.0, 0.8, 3.0] {
                let d = riesz_potential(&f, gamma, x, 1e-10).unwrap();
                let p = riesz_potential_power_route(&f, gamma, a, x, 1e-10).unwrap();
                assert_relative_eq!(d, p, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn divergence_is_reported() {
        let e = graded_integral(&|t: f64| 1.0 / t.abs(), 0.0, 1.0, 1e-8).unwrap_err();
        match e {
            Error::Divergence { partial_sums } => assert!(partial_sums.len() >= 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn farfield_homogeneity() {
        let leb = RadonMeasure::lebesgue();
        let f = RealFunction::indicator(-1.0, 1.0).unwrap();
        let k = Kernel::riesz(0.5).unwrap();
        let g = FarFieldGeometry::symmetric(&leb, -1.0, 1.0).unwrap();
        let (q, beta) = (Exponent::ONE, Exponent::new(2.0).unwrap());
        let r1 = farfield_bound_check(&leb, &f, q, beta, &g, 10.0, &k).unwrap();
        let r2 = farfield_bound_check(&leb, &f.scaled(2.0), q, beta, &g, 10.0, &k).unwrap();
        assert_relative_eq!(r2.lhs, 2.0 * r1.lhs, max_relative = 1e-12);
        assert_relative_eq!(r2.rhs_factor, 2.0 * r1.rhs_factor, max_relative = 1e-9);
        let z = farfield_bound_check(&leb, &RealFunction::zero().with_support(-1.0, 1.0), q, beta, &g, 10.0, &k).unwrap();
        assert_eq!((z.lhs, z.rhs_factor), (0.0, 0.0));
    }

    #[test]
    fn farfield_geometry_is_checked() {
        let leb = RadonMeasure::lebesgue();
        let bad = FarFieldGeometry { x1: -1.0, x2: 1.0, y1: -2.0, y2: 4.0 };
        assert!(bad.check(&leb).is_err());
    }
}
