//! Globally adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! Each panel is integrated with the 15-point Kronrod rule and its embedded
//! 7-point Gauss rule; the difference of the two is the panel error
//! estimate. The panel with the largest error is halved until the summed
//! error meets the requested relative tolerance.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub const DEFAULT_TOL: f64 = 1e-8;
pub const MAX_DEPTH: u32 = 40;

// Panels this deep that touch an end of their segment are integrated after
// the substitution x = e + (o - e) exp(-s).
const SUBSTITUTION_DEPTH: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Relative tolerance on the integral.
    pub tol: f64,
    /// Absolute tolerance floor; the stopping test is `err <= max(tol*|I|, abs_tol)`.
    pub abs_tol: f64,
    pub max_depth: u32,
    pub max_panels: usize,
    /// Whether deep end panels switch to the exponential substitution.
    pub endpoint_substitution: bool,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, abs_tol: 0.0, max_depth: MAX_DEPTH, max_panels: 4000, endpoint_substitution: true }
    }
}

impl QuadOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
    left_edge: bool,
    right_edge: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn check(y: f64, x: f64) -> Result<f64> {
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::Evaluation(format!("integrand returned {y} at {x}")))
    }
}

/// One Gauss–Kronrod 7/15 panel: `(kronrod, error_estimate)`.
pub fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> Result<(f64, f64)> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = check(f(centre), centre)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (x1, x2) = (centre - dx, centre + dx);
        let f1 = check(f(x1), x1)?;
        let f2 = check(f(x2), x2)?;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).abs();
    // Below this the difference is rounding noise.
    let floor = 50.0 * f64::EPSILON * abs_sum * half.abs();
    Ok((value, raw.max(floor)))
}

/// Adaptive integration of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Adaptive integration with the domain pre-split at `breaks` (points outside
/// `(a, b)` are ignored).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: &QuadOptions,
) -> Result<QuadResult> {
    adaptive(&f, a, b, breaks, opts)
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], opts: &QuadOptions) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite integration bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error: 0.0, evaluations: 0 });
    }
    if a > b {
        let r = adaptive(f, b, a, breaks, opts)?;
        return Ok(QuadResult { value: -r.value, ..r });
    }
    let mut nodes = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    nodes.extend(inner);
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut evaluations = 0usize;
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in nodes.windows(2) {
        let (value, error) = gk15(f, w[0], w[1])?;
        evaluations += 15;
        total += value;
        total_err += error;
        heap.push(Panel { a: w[0], b: w[1], value, error, depth: 0, left_edge: true, right_edge: true });
    }

    loop {
        if total_err <= (opts.tol * total.abs()).max(opts.abs_tol) {
            break;
        }
        if heap.len() + 1 > opts.max_panels {
            return Err(Error::Quadrature { estimate: total, error_bound: total_err });
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Quadrature { estimate: total, error_bound: total_err });
        };
        if opts.endpoint_substitution && worst.depth >= SUBSTITUTION_DEPTH && (worst.left_edge || worst.right_edge) {
            let (edge, other) = if worst.left_edge { (worst.a, worst.b) } else { (worst.b, worst.a) };
            let abs_tol = (0.1 * opts.tol * total.abs()).max(opts.abs_tol);
            let (value, error, evals) = substituted(f, edge, other, opts.tol, abs_tol)?;
            evaluations += evals;
            total += value - worst.value;
            total_err += error - worst.error;
            frozen_value += value;
            frozen_error += error;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= opts.max_depth || mid <= worst.a || mid >= worst.b {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let (v1, e1) = gk15(f, worst.a, mid)?;
        let (v2, e2) = gk15(f, mid, worst.b)?;
        evaluations += 30;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        let depth = worst.depth + 1;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1, depth, left_edge: worst.left_edge, right_edge: false });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2, depth, left_edge: false, right_edge: worst.right_edge });
    }

    // Re-sum to shed the drift of the incremental updates.
    let value = heap.iter().map(|p| p.value).sum::<f64>() + frozen_value;
    let error = heap.iter().map(|p| p.error).sum::<f64>() + frozen_error;
    Ok(QuadResult { value, error, evaluations })
}

/// `∫` between `edge` and `other` (oriented left to right) after mapping the
/// edge to `s = ∞`; integrable algebraic singularities at the edge become
/// exponential decay.
fn substituted(f: &dyn Fn(f64) -> f64, edge: f64, other: f64, tol: f64, abs_tol: f64) -> Result<(f64, f64, usize)> {
    let h = (other - edge).abs();
    let resolution = (4.0 * f64::EPSILON * edge.abs()).max(1e-300);
    let mut s_max = (h / resolution).ln().max(1.0);
    let d = other - edge;
    // Smallest s where the integrand overflowed; the range is cut below it.
    let overflow = std::cell::Cell::new(f64::INFINITY);
    let g = |s: f64| {
        let w = (-s).exp();
        let y = f(edge + d * w) * h * w;
        if y.is_infinite() {
            overflow.set(overflow.get().min(s));
            return 0.0;
        }
        y
    };
    let opts = QuadOptions { tol, abs_tol, endpoint_substitution: false, ..QuadOptions::default() };
    let mut r = None;
    for _ in 0..8 {
        let breaks: Vec<f64> = (0..10).map(|k| f64::from(1 << k)).filter(|&k| k < s_max).collect();
        overflow.set(f64::INFINITY);
        let attempt = adaptive(&g, 0.0, s_max, &breaks, &opts);
        let over = overflow.get();
        if over.is_infinite() {
            r = Some(attempt?);
            break;
        }
        if over <= 1.0 {
            return Err(Error::Quadrature { estimate: f64::INFINITY, error_bound: f64::INFINITY });
        }
        s_max = 0.9 * over;
    }
    let Some(r) = r else {
        return Err(Error::Quadrature { estimate: f64::INFINITY, error_bound: f64::INFINITY });
    };
    let tail = g(s_max).abs() * 2.0;
    if !(tail <= (tol * r.value.abs()).max(abs_tol)) {
        return Err(Error::Quadrature { estimate: r.value, error_bound: r.error + tail });
    }
    Ok((r.value, r.error + tail, r.evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomials_are_exact() {
        let r = integrate(|x| x * x, 0.0, 1.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 1.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let r = integrate(|x| x.exp(), 1.0, 0.0, &QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, -(1f64.exp() - 1.0), max_relative = 1e-12);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &QuadOptions::with_tol(1e-10)).unwrap();
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
    }

    #[test]
    fn strong_singularity_at_interior_break() {
        // ∫_{-1}^{1} |x|^{-0.9} dx = 20
        let r = integrate_with_breaks(|x: f64| x.abs().powf(-0.9), -1.0, 1.0, &[0.0], &QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 20.0, max_relative = 1e-8);
    }

    #[test]
    fn jump_is_handled_by_breaks() {
        let f = |x: f64| if x < 0.3 { 1.0 } else { 0.0 };
        let r = integrate_with_breaks(f, 0.0, 1.0, &[0.3], &QuadOptions::default()).unwrap();
        assert_relative_eq!(r.value, 0.3, max_relative = 1e-14);
    }

    #[test]
    fn nan_is_an_evaluation_error() {
        let e = integrate(|_| f64::NAN, 0.0, 1.0, &QuadOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Evaluation(_)));
    }

    #[test]
    fn non_integrable_reports_best_estimate() {
        let e = integrate(|x: f64| 1.0 / (x * x), 0.0, 1.0, &QuadOptions::default()).unwrap_err();
        match e {
            Error::Quadrature { estimate, error_bound } => {
                assert!(estimate > 1.0);
                assert!(error_bound > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
