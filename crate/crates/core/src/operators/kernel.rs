use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::{interp, Monotone, Piece, RealFunction};
use crate::measure::RadonMeasure;
use crate::norms::{self, DEFAULT_LAMBDA_LEVELS};

/// Kernel block of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `|x|^{γ-1}`.
    Riesz { gamma: f64 },
    /// Values on `x >= 0`, extended evenly and by zero past the last point.
    Table {
        points: Vec<[f64; 2]>,
        #[serde(default = "default_even")]
        even: bool,
    },
    /// `χ_{[-radius, radius]}`.
    Indicator { radius: f64 },
}

fn default_even() -> bool {
    true
}

impl KernelSpec {
    /// Parses `riesz:<gamma>` or `indicator:<radius>`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |v: &str| v.parse::<f64>().map_err(|_| Error::Config(format!("bad number in kernel shorthand '{s}'")));
        match parts.as_slice() {
            ["riesz", g] => Ok(KernelSpec::Riesz { gamma: num(g)? }),
            ["indicator", r] => Ok(KernelSpec::Indicator { radius: num(r)? }),
            _ => Err(Error::Config(format!("unknown kernel shorthand '{s}' (use riesz:<gamma> or indicator:<radius>)"))),
        }
    }
}

/// An even kernel, nonnegative and nonincreasing on `[0, ∞)`.
#[derive(Clone)]
pub struct Kernel {
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// `(location, exponent)` of an integrable power singularity.
    pub singularity: Option<(f64, f64)>,
    /// Radii where the kernel is not smooth.
    breaks: Vec<f64>,
    spec: KernelSpec,
    weak_eta_norm: Option<f64>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel").field("spec", &self.spec).field("weak_eta_norm", &self.weak_eta_norm).finish()
    }
}

impl Kernel {
    pub fn riesz(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("riesz exponent gamma = {gamma} must lie in (0, 1)")));
        }
        let e = gamma - 1.0;
        Self::checked(
            Arc::new(move |x: f64| x.abs().powf(e)),
            Some((0.0, e)),
            Vec::new(),
            KernelSpec::Riesz { gamma },
        )
    }

    pub fn indicator(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("kernel radius {radius} must be positive")));
        }
        Self::checked(
            Arc::new(move |x: f64| if x.abs() <= radius { 1.0 } else { 0.0 }),
            None,
            vec![radius],
            KernelSpec::Indicator { radius },
        )
    }

    pub fn table(points: &[[f64; 2]], even: bool) -> Result<Self> {
        if !even {
            return Err(Error::Hypothesis("kernels must be even".into()));
        }
        if points.len() < 2 || points[0][0] != 0.0 {
            return Err(Error::InvalidArgument("kernel table needs at least two points starting at x = 0".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) || points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidArgument("kernel table must be finite with increasing abscissae".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let last = *xs.last().unwrap();
        let y_last = *ys.last().unwrap();
        let xs_eval = xs.clone();
        let eval = Arc::new(move |x: f64| {
            let r = x.abs();
            if r == last {
                y_last
            } else {
                interp(&xs_eval, &ys, r, 0.0)
            }
        });
        Self::checked(eval, None, xs, KernelSpec::Table { points: points.to_vec(), even })
    }

    pub fn from_spec(spec: &KernelSpec) -> Result<Self> {
        match spec {
            KernelSpec::Riesz { gamma } => Self::riesz(*gamma),
            KernelSpec::Indicator { radius } => Self::indicator(*radius),
            KernelSpec::Table { points, even } => Self::table(points, *even),
        }
    }

    fn checked(
        eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        singularity: Option<(f64, f64)>,
        breaks: Vec<f64>,
        spec: KernelSpec,
    ) -> Result<Self> {
        let k = Self { eval, singularity, breaks, spec, weak_eta_norm: None };
        k.validate()?;
        Ok(k)
    }

    /// Evenness, positivity and monotonicity on a test grid.
    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::INFINITY;
        for j in 0..400 {
            let x = 10f64.powf(-4.0 + 8.0 * j as f64 / 399.0);
            let (kp, km) = (self.eval(x), self.eval(-x));
            if !(kp.is_finite() && kp >= 0.0) {
                return Err(Error::Hypothesis(format!("kernel is not finite and nonnegative at {x}")));
            }
            if (kp - km).abs() > 1e-12 * kp.abs().max(1.0) {
                return Err(Error::Hypothesis(format!("kernel is not even at {x}")));
            }
            if kp > prev * (1.0 + 1e-12) {
                return Err(Error::Hypothesis(format!("kernel increases on the positive axis near {x}")));
            }
            prev = kp;
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    /// Radii where the kernel is not smooth.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    /// `y ↦ k(x - y)` as a function with monotone pieces.
    pub fn centered_at(&self, x: f64) -> RealFunction {
        let inner = self.eval.clone();
        let reach = self.breaks.last().copied();
        let mut f = RealFunction::from_fn(format!("k({x}-.)"), move |y| inner(x - y));
        let pieces = match reach {
            Some(r) => vec![
                Piece { lo: x - r, hi: x, shape: Monotone::Increasing },
                Piece { lo: x, hi: x + r, shape: Monotone::Decreasing },
            ],
            None => vec![
                Piece { lo: f64::NEG_INFINITY, hi: x, shape: Monotone::Increasing },
                Piece { lo: x, hi: f64::INFINITY, shape: Monotone::Decreasing },
            ],
        };
        f = match reach {
            Some(r) => f.with_support(x - r, x + r),
            None => f.with_support(x - 1.0, x + 1.0).with_tail_bound(self.eval(1.0)),
        };
        f.with_pieces(pieces).with_breakpoints(vec![x])
    }

    /// `‖k(x - ·)‖*_{η,∞}` with respect to `m`.
    pub fn weak_norm_at(&self, m: &RadonMeasure, eta: Exponent, x: f64) -> Result<f64> {
        norms::weak_norm(m, &self.centered_at(x), eta, DEFAULT_LAMBDA_LEVELS)
    }

    /// Computes and stores `‖k‖*_{η,∞}` (centred at 0).
    pub fn cache_weak_norm(&mut self, m: &RadonMeasure, eta: Exponent) -> Result<f64> {
        let v = self.weak_norm_at(m, eta, 0.0)?;
        if !v.is_finite() {
            return Err(Error::Hypothesis("kernel is not in weak L^eta".into()));
        }
        self.weak_eta_norm = Some(v);
        Ok(v)
    }

    pub fn weak_eta_norm(&self) -> Option<f64> {
        self.weak_eta_norm
    }
}
