//! Scenario files: what to verify, on which measure, functions and grids.

use serde::{Deserialize, Serialize};

use crate::covering::{RandomFamilySpec, SelectionRule};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::FunctionSpec;
use crate::measure::MeasureSpec;
use crate::operators::KernelSpec;
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Thm21Part1,
    Thm21Part2,
    Cor23,
    Cor24,
    Thm31Goodlambda,
    Lem32,
    Lem33,
    Prop34,
    Cor35,
    Cor36,
    Prop41,
    Steinweiss,
    NormProperties,
    CoveringTrials,
}

impl Target {
    pub const ALL: [Target; 14] = [
        Target::Thm21Part1,
        Target::Thm21Part2,
        Target::Cor23,
        Target::Cor24,
        Target::Thm31Goodlambda,
        Target::Lem32,
        Target::Lem33,
        Target::Prop34,
        Target::Cor35,
        Target::Cor36,
        Target::Prop41,
        Target::Steinweiss,
        Target::NormProperties,
        Target::CoveringTrials,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Target::Thm21Part1 => "thm21_part1",
            Target::Thm21Part2 => "thm21_part2",
            Target::Cor23 => "cor23",
            Target::Cor24 => "cor24",
            Target::Thm31Goodlambda => "thm31_goodlambda",
            Target::Lem32 => "lem32",
            Target::Lem33 => "lem33",
            Target::Prop34 => "prop34",
            Target::Cor35 => "cor35",
            Target::Cor36 => "cor36",
            Target::Prop41 => "prop41",
            Target::Steinweiss => "steinweiss",
            Target::NormProperties => "norm_properties",
            Target::CoveringTrials => "covering_trials",
        }
    }

    /// Targets whose inequality involves the potential operator.
    pub fn uses_kernel(self) -> bool {
        matches!(
            self,
            Target::Thm31Goodlambda | Target::Lem32 | Target::Lem33 | Target::Prop34 | Target::Cor35 | Target::Cor36
        )
    }
}

impl std::fmt::Display for Target {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Exponent tuple; each target reads the entries it needs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q1: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha1: Option<Exponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<Exponent>,
    /// Power-measure exponent of the weighted potential inequalities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Vec<f64>>,
}

/// λ values: `points` log-spaced over `[low·M, high·M]` with `M` the largest
/// sampled operator value, or over `[min, max]` when `absolute` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LambdaGridSpec {
    pub points: usize,
    pub low: f64,
    pub high: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absolute: Option<[f64; 2]>,
}

impl Default for LambdaGridSpec {
    fn default() -> Self {
        Self { points: 64, low: 1e-3, high: 1.0, absolute: None }
    }
}

impl LambdaGridSpec {
    /// Grid for operator maximum `max`, with `points` replaced by `n` and
    /// absolute ends multiplied by `scale`.
    pub fn resolve(&self, max: f64, n: usize, scale: f64) -> Vec<f64> {
        let (lo, hi) = match self.absolute {
            Some([a, b]) => (a * scale, b * scale),
            None => (self.low * max, self.high * max),
        };
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Vec::new();
        }
        if n <= 1 || hi == lo {
            return vec![hi];
        }
        let ratio = hi / lo;
        (0..n).map(|k| lo * ratio.powf(k as f64 / (n - 1) as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    /// Sample cells in measure coordinates at grid scale 1.
    pub samples: usize,
    /// Window in `x`; defaults to the support hull padded on both sides by
    /// `pad` times its mass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub pad: f64,
    /// Tail samples per doubling of the distance past the window.
    pub tail_per_octave: usize,
    pub tail_octaves: usize,
    /// Partition anchor for amalgam norms.
    pub anchor: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { samples: 4096, window: None, pad: 1.0, tail_per_octave: 4, tail_octaves: 24, anchor: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed relative change of the constant when all grids double.
    pub stability: f64,
    /// Allowed relative change of the constant under `f -> 2f`.
    pub homogeneity: f64,
    /// Quadrature tolerance for potentials.
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { stability: 0.2, homogeneity: 1e-4, quad: 1e-8 }
    }
}

/// `(a, b, c)` grids of the local good-λ estimate; `a` is a fraction of the
/// largest potential value, `b` and `c` are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoodLambdaGrids {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl Default for GoodLambdaGrids {
    fn default() -> Self {
        Self { a: vec![0.02, 0.05, 0.1], b: vec![4.0, 8.0, 16.0], c: vec![1.0, 2.0, 4.0, 8.0, 16.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoveringSpec {
    pub trials: usize,
    pub family: RandomFamilySpec,
    pub rule: SelectionRule,
    pub bound: usize,
}

impl Default for CoveringSpec {
    fn default() -> Self {
        Self { trials: 1000, family: RandomFamilySpec::default(), rule: SelectionRule::default(), bound: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub target: Target,
    /// Lebesgue when absent; the weighted potential targets build the power
    /// measure from `exponents.a`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// Empty selects the default family of the target.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub exponents: Exponents,
    /// `(a, γ, α)` tuples for the weighted potential targets; `exponents`
    /// gives the single tuple used when this is empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<[f64; 3]>,
    #[serde(default)]
    pub lambda_grid: LambdaGridSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub good_lambda: GoodLambdaGrids,
    #[serde(default)]
    pub covering: CoveringSpec,
}

impl Scenario {
    /// Parses a scenario, reporting the line, column and field path of the
    /// first problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::Config(format!("line {}, column {}, field `{path}`: {inner}", inner.line(), inner.column()))
        })
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn label(&self) -> String {
        if self.name.is_empty() {
            self.target.name().to_string()
        } else {
            self.name.clone()
        }
    }
}
