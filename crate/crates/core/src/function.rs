//! Real functions with a declared effective support.
//!
//! A [`RealFunction`] is a shared closure plus the metadata the numerical
//! routines need: where it lives, how large it can be outside that window,
//! where it is non-smooth, and optionally a decomposition of `|f|` into
//! monotone pieces so that level sets can be found by root-finding.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-open window `[a, b)`; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub a: f64,
    pub b: f64,
}

impl Support {
    pub const REAL_LINE: Support = Support { a: f64::NEG_INFINITY, b: f64::INFINITY };

    pub fn is_bounded(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x < self.b
    }
}

/// Shape of `|f|` on the open interval of a [`Piece`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Monotone {
    Constant(f64),
    Increasing,
    Decreasing,
}

/// `|f|` is continuous and monotone on `(lo, hi)`; ends may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub shape: Monotone,
}

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RealFunction {
    eval: Eval,
    support: Support,
    tail_bound: f64,
    breakpoints: Vec<f64>,
    pieces: Option<Vec<Piece>>,
    label: String,
}

impl fmt::Debug for RealFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RealFunction")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("tail_bound", &self.tail_bound)
            .field("breakpoints", &self.breakpoints)
            .field("pieces", &self.pieces)
            .finish()
    }
}

impl RealFunction {
    /// Arbitrary closure on the whole line with no declared decay.
    pub fn from_fn<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            support: Support::REAL_LINE,
            tail_bound: f64::INFINITY,
            breakpoints: Vec::new(),
            pieces: None,
            label: label.into(),
        }
    }

    pub fn constant(c: f64) -> Self {
        let mut f = Self::from_fn(format!("const({c})"), move |_| c);
        f.tail_bound = c.abs();
        f.pieces = Some(vec![Piece { lo: f64::NEG_INFINITY, hi: f64::INFINITY, shape: Monotone::Constant(c.abs()) }]);
        f
    }

    pub fn zero() -> Self {
        let mut f = Self::from_fn("zero", |_| 0.0);
        f.support = Support { a: 0.0, b: 1.0 };
        f.tail_bound = 0.0;
        f.pieces = Some(Vec::new());
        f
    }

    /// `χ_{[a,b)}`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        check_window(a, b)?;
        let mut f = Self::from_fn(format!("indicator[{a},{b})"), move |x| if a <= x && x < b { 1.0 } else { 0.0 });
        f.support = Support { a, b };
        f.tail_bound = 0.0;
        f.breakpoints = vec![a, b];
        f.pieces = Some(vec![Piece { lo: a, hi: b, shape: Monotone::Constant(1.0) }]);
        Ok(f)
    }

    /// Triangle of height 1 over `[a, b)` peaking at the midpoint.
    pub fn tent(a: f64, b: f64) -> Result<Self> {
        check_window(a, b)?;
        let m = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut f = Self::from_fn(format!("tent[{a},{b})"), move |x| {
            if a <= x && x < b {
                1.0 - (x - m).abs() / h
            } else {
                0.0
            }
        });
        f.support = Support { a, b };
        f.tail_bound = 0.0;
        f.breakpoints = vec![a, m, b];
        f.pieces = Some(vec![
            Piece { lo: a, hi: m, shape: Monotone::Increasing },
            Piece { lo: m, hi: b, shape: Monotone::Decreasing },
        ]);
        Ok(f)
    }

    /// `|x|^exp` on `[lo, hi)`, zero elsewhere.
    pub fn power(exp: f64, lo: f64, hi: f64) -> Result<Self> {
        check_window(lo, hi)?;
        if !exp.is_finite() {
            return Err(Error::InvalidArgument(format!("power exponent {exp} must be finite")));
        }
        let mut f =
            Self::from_fn(format!("power({exp})[{lo},{hi})"), move |x| if lo <= x && x < hi { x.abs().powf(exp) } else { 0.0 });
        f.support = Support { a: lo, b: hi };
        f.tail_bound = 0.0;
        f.breakpoints = vec![lo, hi];
        if lo < 0.0 && 0.0 < hi {
            f.breakpoints.insert(1, 0.0);
        }
        f.pieces = Some(power_pieces(exp, lo, hi));
        Ok(f)
    }

    /// `|x|^{γ-1}`. With a window the kernel is truncated to it; without one it
    /// lives on the whole line, with effective support `[-1, 1)` and tail bound 1.
    pub fn riesz_kernel(gamma: f64, window: Option<(f64, f64)>) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidArgument(format!("riesz exponent gamma = {gamma} must lie in (0, 1)")));
        }
        match window {
            Some((lo, hi)) => {
                let mut f = Self::power(gamma - 1.0, lo, hi)?;
                f.label = format!("riesz({gamma})[{lo},{hi})");
                Ok(f)
            }
            None => {
                let e = gamma - 1.0;
                let mut f = Self::from_fn(format!("riesz({gamma})"), move |x: f64| x.abs().powf(e));
                f.support = Support { a: -1.0, b: 1.0 };
                f.tail_bound = 1.0;
                f.breakpoints = vec![-1.0, 0.0, 1.0];
                f.pieces = Some(power_pieces(e, f64::NEG_INFINITY, f64::INFINITY));
                Ok(f)
            }
        }
    }

    /// Piecewise-linear interpolation of `points`, zero outside their range.
    pub fn table(points: &[[f64; 2]]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument("function table needs at least two points".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("function table contains non-finite values".into()));
        }
        if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
            return Err(Error::InvalidArgument("function table abscissae must be strictly increasing".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = points.iter().map(|p| p[1]).collect();
        let (a, b) = (xs[0], *xs.last().unwrap());
        let xs_eval = xs.clone();
        let mut f = Self::from_fn(format!("table[{a},{b})"), move |x| interp(&xs_eval, &ys, x, 0.0));
        f.support = Support { a, b };
        f.tail_bound = 0.0;
        f.breakpoints = xs;
        Ok(f)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn support(&self) -> Support {
        self.support
    }

    /// Bound on `|f|` outside the effective support.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> Option<&[Piece]> {
        self.pieces.as_deref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Declares `f` to vanish outside `[a, b)` (the closure is left untouched).
    pub fn with_support(mut self, a: f64, b: f64) -> Self {
        self.support = Support { a, b };
        self.tail_bound = 0.0;
        self
    }

    pub fn with_tail_bound(mut self, bound: f64) -> Self {
        self.tail_bound = bound;
        self
    }

    /// Declares a monotone decomposition of `|f|`; outside the pieces `f` vanishes.
    pub fn with_pieces(mut self, pieces: Vec<Piece>) -> Self {
        self.pieces = Some(pieces);
        self
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.retain(|x| x.is_finite());
        self.breakpoints.extend(breaks);
        self.breakpoints.sort_by(f64::total_cmp);
        self.breakpoints.dedup();
        self
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        let mut f = self.clone();
        f.eval = Arc::new(move |x| c * inner(x));
        f.tail_bound = self.tail_bound * c.abs();
        f.label = format!("{c}*{}", self.label);
        if c == 0.0 {
            f.pieces = Some(Vec::new());
        } else if let Some(pieces) = &self.pieces {
            f.pieces = Some(
                pieces
                    .iter()
                    .map(|p| match p.shape {
                        Monotone::Constant(v) => Piece { shape: Monotone::Constant(v * c.abs()), ..*p },
                        _ => *p,
                    })
                    .collect(),
            );
        }
        f
    }

    /// Pointwise product; support and tail bound follow `self`.
    pub fn product(&self, other: &RealFunction) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let mut out = self.clone();
        out.eval = Arc::new(move |x| {
            let fx = f(x);
            if fx == 0.0 {
                return 0.0;
            }
            let gx = g(x);
            if gx == 0.0 {
                0.0
            } else {
                fx * gx
            }
        });
        out.label = format!("{}*{}", self.label, other.label);
        out.pieces = None;
        out.with_breakpoints(other.breakpoints.clone())
    }

    /// `|f|^e`, `e > 0`.
    pub fn abs_pow(&self, e: f64) -> Self {
        let f = self.eval.clone();
        let mut out = self.clone();
        out.eval = Arc::new(move |x| f(x).abs().powf(e));
        out.tail_bound = self.tail_bound.powf(e);
        out.label = format!("|{}|^{e}", self.label);
        out.pieces = self.pieces.as_ref().map(|ps| {
            ps.iter()
                .map(|p| match p.shape {
                    Monotone::Constant(v) => Piece { shape: Monotone::Constant(v.powf(e)), ..*p },
                    _ => *p,
                })
                .collect()
        });
        out
    }
}

fn check_window(a: f64, b: f64) -> Result<()> {
    if a.is_finite() && b.is_finite() && a < b {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("window [{a}, {b}) must be finite and nonempty")))
    }
}

fn power_pieces(exp: f64, lo: f64, hi: f64) -> Vec<Piece> {
    // Increasing in |x| when exp > 0.
    let (neg, pos) = if exp > 0.0 {
        (Monotone::Decreasing, Monotone::Increasing)
    } else if exp < 0.0 {
        (Monotone::Increasing, Monotone::Decreasing)
    } else {
        (Monotone::Constant(1.0), Monotone::Constant(1.0))
    };
    let mut out = Vec::new();
    if lo < 0.0 {
        out.push(Piece { lo, hi: hi.min(0.0), shape: neg });
    }
    if hi > 0.0 {
        out.push(Piece { lo: lo.max(0.0), hi, shape: pos });
    }
    out
}

/// Linear interpolation on sorted `xs`; `outside` beyond the table.
pub(crate) fn interp(xs: &[f64], ys: &[f64], x: f64, outside: f64) -> f64 {
    let n = xs.len();
    if x < xs[0] || x >= xs[n - 1] || x.is_nan() {
        return outside;
    }
    let i = xs.partition_point(|&v| v <= x) - 1;
    let s = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + s * (ys[i + 1] - ys[i])
}

/// Function block of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(flatten)]
    pub shape: FunctionShape,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionShape {
    Zero,
    Indicator { a: f64, b: f64 },
    Tent { a: f64, b: f64 },
    Power { exp: f64, window: [f64; 2] },
    RieszKernel {
        gamma: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<[f64; 2]>,
    },
    Table { points: Vec<[f64; 2]> },
}

fn one() -> f64 {
    1.0
}

fn is_one(v: &f64) -> bool {
    *v == 1.0
}

impl From<FunctionShape> for FunctionSpec {
    fn from(shape: FunctionShape) -> Self {
        FunctionSpec { shape, scale: 1.0 }
    }
}

impl FunctionSpec {
    pub fn build(&self) -> Result<RealFunction> {
        let f = match &self.shape {
            FunctionShape::Zero => RealFunction::zero(),
            FunctionShape::Indicator { a, b } => RealFunction::indicator(*a, *b)?,
            FunctionShape::Tent { a, b } => RealFunction::tent(*a, *b)?,
            FunctionShape::Power { exp, window } => RealFunction::power(*exp, window[0], window[1])?,
            FunctionShape::RieszKernel { gamma, window } => RealFunction::riesz_kernel(*gamma, window.map(|w| (w[0], w[1])))?,
            FunctionShape::Table { points } => RealFunction::table(points)?,
        };
        if !self.scale.is_finite() {
            return Err(Error::InvalidArgument(format!("function scale {} must be finite", self.scale)));
        }
        Ok(if self.scale == 1.0 { f } else { f.scaled(self.scale) })
    }

    pub fn scaled(&self, c: f64) -> Self {
        FunctionSpec { shape: self.shape.clone(), scale: self.scale * c }
    }

    /// Parses CLI shorthands such as `indicator:0:1`, `tent:0:1`,
    /// `power:-0.5:0:1`, `riesz:0.5`, `zero`.
    pub fn parse_short(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| -> Result<f64> {
            parts
                .get(i)
                .ok_or_else(|| Error::Config(format!("function shorthand '{s}' is missing a field")))?
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number in function shorthand '{s}'")))
        };
        let shape = match parts[0] {
            "zero" => FunctionShape::Zero,
            "indicator" => FunctionShape::Indicator { a: num(1)?, b: num(2)? },
            "tent" => FunctionShape::Tent { a: num(1)?, b: num(2)? },
            "power" => FunctionShape::Power { exp: num(1)?, window: [num(2)?, num(3)?] },
            "riesz" => {
                let window = if parts.len() >= 4 { Some([num(2)?, num(3)?]) } else { None };
                FunctionShape::RieszKernel { gamma: num(1)?, window }
            }
            other => return Err(Error::Config(format!("unknown function kind '{other}'"))),
        };
        Ok(shape.into())
    }
}
