//! Scenario runner: validates the hypotheses of the chosen inequality,
//! evaluates both sides over a function family and λ-grid, and turns the
//! ratios into an empirical constant with stability and homogeneity checks.

pub mod fields;
pub mod report;
pub mod runners;
pub mod scenario;

use std::collections::BTreeMap;

pub use report::{Check, GridSizes, Row, Verdict, VerificationReport};
pub use scenario::{Exponents, LambdaGridSpec, SamplingSpec, Scenario, Target, Tolerances};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::{FunctionShape, FunctionSpec};
use crate::measure::{default_growth_scales, default_growth_translations, growth_constant, MeasureKind, MeasureSpec, RadonMeasure};
use crate::norms::DEFAULT_LAMBDA_LEVELS;
use crate::operators::maximal::{DEFAULT_MASSES, DEFAULT_SPLITS};
use crate::operators::{Kernel, KernelSpec};
use crate::weights::{a_infty_epsilon_delta, theta, thm21_condition, IntervalFamily, SubsetSampler, WeightSpec};

/// Slack for comparisons between exponent reciprocals.
const EXP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub grid_scale: f64,
    pub tol: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: None, grid_scale: 1.0, tol: None }
    }
}

/// Every discretisation knob of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub scale: f64,
    pub samples: usize,
    pub lambda_points: usize,
    pub masses: usize,
    pub splits: usize,
    pub tail_per_octave: usize,
    pub tail_octaves: usize,
    pub scale_points: usize,
    pub far_points: usize,
    pub weak_levels: usize,
}

impl Grids {
    pub fn new(sampling: &SamplingSpec, lambda: &LambdaGridSpec, scale: f64) -> Self {
        let n = |base: usize| ((base as f64 * scale).round() as usize).max(1);
        Self {
            scale,
            samples: n(sampling.samples),
            lambda_points: n(lambda.points),
            masses: n(DEFAULT_MASSES),
            splits: n(DEFAULT_SPLITS - 1) + 1,
            tail_per_octave: n(sampling.tail_per_octave),
            tail_octaves: sampling.tail_octaves,
            scale_points: n(64),
            far_points: n(12),
            weak_levels: n(DEFAULT_LAMBDA_LEVELS),
        }
    }

    pub fn sizes(&self) -> GridSizes {
        GridSizes {
            grid_scale: self.scale,
            samples: self.samples,
            lambda_points: self.lambda_points,
            maximal_masses: self.masses,
            maximal_splits: self.splits,
            tail_points: self.tail_per_octave * self.tail_octaves,
            scale_points: self.scale_points,
        }
    }
}

/// `(a, γ, α)` of the weighted potential inequalities with what follows from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTuple {
    pub a: f64,
    pub gamma: f64,
    pub alpha: Exponent,
    /// `1/β = (γ - a)/(1 - a)`.
    pub inv_beta: f64,
    pub q: Exponent,
    pub p: Exponent,
}

impl PowerTuple {
    pub fn inv_s(&self) -> f64 {
        self.alpha.recip() - self.inv_beta
    }

    pub fn label(&self) -> String {
        format!("a={},gamma={},alpha={}", self.a, self.gamma, self.alpha)
    }
}

/// A scenario that passed its hypothesis gate.
#[derive(Debug, Clone)]
pub struct Plan {
    pub scenario: Scenario,
    pub measure: RadonMeasure,
    pub functions: Vec<FunctionSpec>,
    pub labels: Vec<String>,
    pub weight: WeightSpec,
    pub kernel: Option<Kernel>,
    pub tuples: Vec<PowerTuple>,
    pub derived: BTreeMap<String, f64>,
}

fn need(e: Option<Exponent>, name: &str, t: Target) -> Result<Exponent> {
    e.ok_or_else(|| Error::Config(format!("target {t} needs exponents.{name}")))
}

fn hyp(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Hypothesis(msg()))
    }
}

/// `a <= b` on the extended half-line.
fn le(a: Exponent, b: Exponent) -> bool {
    a.recip() >= b.recip() - EXP_SLACK
}

fn lt(a: Exponent, b: Exponent) -> bool {
    a.recip() > b.recip() + EXP_SLACK
}

/// Functions of the default family for `target`.
pub fn default_family(target: Target, alpha: Option<Exponent>, a: f64) -> Vec<FunctionSpec> {
    let ind = |a: f64, b: f64| FunctionSpec::from(FunctionShape::Indicator { a, b });
    let tent = |a: f64, b: f64| FunctionSpec::from(FunctionShape::Tent { a, b });
    let power = |exp: f64, lo: f64, hi: f64| FunctionSpec::from(FunctionShape::Power { exp, window: [lo, hi] });
    let riesz = |gamma: f64| FunctionSpec::from(FunctionShape::RieszKernel { gamma, window: Some([-1.0, 1.0]) });
    match target {
        Target::NormProperties => {
            let mut v: Vec<FunctionSpec> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|&h| ind(0.0, h)).collect();
            v.extend([ind(-1.0, 1.0), ind(3.0, 3.5), tent(0.0, 1.0), tent(-2.0, 3.0), tent(0.0, 0.5), tent(-4.0, -1.0)]);
            v.extend([-0.5, -0.45, -0.3, -0.1, 0.5, 1.0].iter().map(|&e| power(e, 0.0, 1.0)));
            v.extend([0.6, 0.75, 0.9].iter().map(|&g| riesz(g)));
            v
        }
        Target::Prop41 | Target::Steinweiss => vec![ind(0.0, 1.0), ind(-1.0, 1.0), tent(0.0, 1.0), tent(-2.0, 1.0), riesz(0.75)],
        Target::CoveringTrials => Vec::new(),
        _ => {
            let mut v = vec![ind(0.0, 1.0), ind(-1.0, 1.0), tent(0.0, 1.0)];
            // Singularities at half the L^alpha(|x|^-a dx) threshold.
            if let Some(alpha) = alpha.filter(|a| !a.is_infinite()) {
                let e = (1.0 - a) / (2.0 * alpha.value());
                v.push(power(-e, 0.0, 1.0));
                v.push(riesz(1.0 - 0.5 * e));
            }
            v
        }
    }
}

fn support_hull(m: &RadonMeasure, fs: &[FunctionSpec]) -> Result<(f64, f64)> {
    let mut hull = (f64::INFINITY, f64::NEG_INFINITY);
    for spec in fs {
        let s = spec.build()?.support();
        hull = (hull.0.min(s.a), hull.1.max(s.b));
    }
    if !(hull.0 < hull.1) {
        hull = (0.0, 1.0);
    }
    let mass = m.mass(hull.0, hull.1);
    Ok((hull.0, if mass > 0.0 { hull.1 } else { hull.0 + 1.0 }))
}

/// Weight-test intervals around the anchor at the scale of the family.
fn weight_family(m: &RadonMeasure, fs: &[FunctionSpec], anchor: f64) -> Result<IntervalFamily> {
    let (a, b) = support_hull(m, fs)?;
    IntervalFamily::standard(m, anchor, m.mass(a, b).max(1e-6), 2)
}

/// Checks `k ∈ L^{η,∞}(μ)` with `1/η = 1 - 1/β` and builds the kernel.
fn kernel_gate(m: &RadonMeasure, spec: &KernelSpec, beta: Exponent, derived: &mut BTreeMap<String, f64>) -> Result<Kernel> {
    let inv_eta = 1.0 - beta.recip();
    hyp(inv_eta > 0.0, || format!("1/eta = 1 - 1/beta = {inv_eta} must be positive"))?;
    if let KernelSpec::Riesz { gamma } = spec {
        let a = match m.kind() {
            MeasureKind::Lebesgue => 0.0,
            MeasureKind::Power { a } => a,
            MeasureKind::Custom => {
                return Err(Error::Hypothesis("weak-L^eta membership of the Riesz kernel is only decided for lebesgue and power measures".into()))
            }
        };
        let need_inv = (1.0 - gamma) / (1.0 - a);
        hyp((need_inv - inv_eta).abs() <= 1e-9, || {
            format!("|x|^(gamma-1) lies in weak L^eta only for 1/eta = (1-gamma)/(1-a) = {need_inv}, but 1 - 1/beta = {inv_eta}")
        })?;
    }
    let mut k = Kernel::from_spec(spec)?;
    k.validate()?;
    let eta = Exponent::from_recip(inv_eta)?;
    derived.insert("eta".into(), eta.value());
    derived.insert("kernel_weak_norm".into(), k.cache_weak_norm(m, eta)?);
    Ok(k)
}

fn growth_gate(m: &RadonMeasure, derived: &mut BTreeMap<String, f64>) -> Result<()> {
    let g = growth_constant(m, &default_growth_scales(), &default_growth_translations())?;
    hyp(g.is_finite(), || "the growth constant of the measure is not finite".into())?;
    derived.insert("growth_constant".into(), g);
    Ok(())
}

fn nonnegative_gate(m: &RadonMeasure, fs: &[FunctionSpec]) -> Result<()> {
    for spec in fs {
        let f = spec.build()?;
        let s = f.support();
        let (ta, tb) = (m.cdf(s.a), m.cdf(s.b));
        for j in 0..256 {
            let y = m.inv_cdf(ta + (j as f64 + 0.5) / 256.0 * (tb - ta));
            hyp(f.eval(y) >= 0.0, || format!("'{}' is negative at {y}; potentials need f >= 0", f.label()))?;
        }
    }
    Ok(())
}

/// The two-weight hypothesis shared by the weak-type bounds with a weight.
fn two_weight_gate(plan: &mut Plan, q: Exponent, q1: Exponent, beta: Exponent) -> Result<()> {
    let v = plan.weight.build()?;
    let family = weight_family(&plan.measure, &plan.functions, plan.scenario.sampling.anchor)?;
    let c = thm21_condition(&plan.measure, &v, q, q1, beta, &family)?;
    hyp(!c.diverging, || format!("weight condition diverges (constant {}, growth ratio {})", c.constant, c.growth_ratio))?;
    plan.derived.insert("weight_constant".into(), c.constant);
    Ok(())
}

fn resolve_tuples(scn: &Scenario) -> Result<Vec<PowerTuple>> {
    let t = scn.target;
    let raw: Vec<[f64; 3]> = if scn.params.is_empty() {
        let ex = &scn.exponents;
        let a = ex.a.ok_or_else(|| Error::Config(format!("target {t} needs exponents.a or params")))?;
        let g = ex.gamma.ok_or_else(|| Error::Config(format!("target {t} needs exponents.gamma or params")))?;
        vec![[a, g, need(ex.alpha, "alpha", t)?.value()]]
    } else {
        scn.params.clone()
    };
    let mut out = Vec::new();
    for [a, gamma, alpha] in raw {
        hyp(0.0 < a && a < gamma && gamma < 1.0, || format!("need 0 < a < gamma < 1, got a = {a}, gamma = {gamma}"))?;
        let upper = (1.0 - a) / (gamma - a);
        hyp(1.0 <= alpha && alpha < upper, || format!("need 1 <= alpha < (1-a)/(gamma-a) = {upper}, got alpha = {alpha}"))?;
        if t == Target::Steinweiss {
            hyp(alpha > 1.0, || format!("the strong weighted bound needs alpha > 1, got {alpha}"))?;
        }
        let alpha_e = Exponent::new(alpha)?;
        let inv_beta = (gamma - a) / (1.0 - a);
        let (q, p) = match (scn.exponents.q, scn.exponents.p) {
            (Some(q), Some(p)) if scn.params.is_empty() => (q, p),
            _ => (alpha_e, Exponent::from_recip(1.0 / alpha - 0.5 * inv_beta)?),
        };
        hyp(q.value() >= 1.0 && le(q, alpha_e), || format!("need 1 <= q <= alpha, got q = {q}"))?;
        let inv_theta = q.recip() - inv_beta;
        hyp(inv_theta > 0.0 && inv_theta <= p.recip() + EXP_SLACK && p.recip() <= alpha_e.recip() + EXP_SLACK, || {
            format!("need 0 < 1/q - 1/beta = {inv_theta} <= 1/p = {} <= 1/alpha", p.recip())
        })?;
        out.push(PowerTuple { a, gamma, alpha: alpha_e, inv_beta, q, p });
    }
    Ok(out)
}

/// Applies run options, validates the hypotheses of the target and
/// resolves defaults. Nothing is evaluated past this point on failure.
pub fn prepare(scn: &Scenario, opts: &RunOptions) -> Result<Plan> {
    let mut scn = scn.clone();
    if let Some(seed) = opts.seed {
        scn.seed = seed;
    }
    if let Some(tol) = opts.tol {
        scn.tolerances.quad = tol;
    }
    if !(opts.grid_scale > 0.0 && opts.grid_scale.is_finite()) {
        return Err(Error::Config(format!("grid scale {} must be positive", opts.grid_scale)));
    }
    if !(scn.tolerances.quad > 0.0) {
        return Err(Error::Config(format!("tolerances.quad = {} must be positive", scn.tolerances.quad)));
    }
    let t = scn.target;
    let ex = scn.exponents.clone();

    let mut tuples = Vec::new();
    let measure_spec = if matches!(t, Target::Prop41 | Target::Steinweiss) {
        tuples = resolve_tuples(&scn)?;
        if tuples.len() > 1 && scn.measure.is_some() {
            return Err(Error::Config("with several (a, gamma, alpha) tuples the measure is built from each a; drop `measure`".into()));
        }
        let want = MeasureSpec::Power { a: tuples[0].a };
        match &scn.measure {
            Some(spec) if *spec != want => {
                return Err(Error::Config(format!("measure must be the power measure with a = {}", tuples[0].a)))
            }
            _ => want,
        }
    } else {
        scn.measure.clone().unwrap_or(MeasureSpec::Lebesgue)
    };
    let measure = RadonMeasure::from_spec(&measure_spec)?;

    let functions =
        if scn.functions.is_empty() { {
            let a = if let MeasureKind::Power { a } = measure.kind() { a } else { 0.0 };
            default_family(t, ex.alpha.or(tuples.first().map(|p| p.alpha)), a)
        } } else { scn.functions.clone() };
    let mut labels = Vec::new();
    for spec in &functions {
        let f = spec.build()?;
        if !f.support().is_bounded() || f.tail_bound() > 0.0 {
            return Err(Error::Config(format!("function '{}' needs a bounded support", f.label())));
        }
        labels.push(f.label().to_string());
    }
    let weight = scn.weight.clone().unwrap_or(WeightSpec::One);
    let mut plan = Plan { scenario: scn, measure, functions, labels, weight, kernel: None, tuples, derived: BTreeMap::new() };

    let kernel_spec = |plan: &Plan| {
        plan.scenario.kernel.clone().ok_or_else(|| Error::Config(format!("target {t} needs a kernel")))
    };
    if t.uses_kernel() {
        nonnegative_gate(&plan.measure, &plan.functions)?;
        growth_gate(&plan.measure, &mut plan.derived)?;
    }
    match t {
        Target::Thm21Part1 | Target::Thm21Part2 | Target::Prop34 => {
            let (q, alpha, beta) = (need(ex.q, "q", t)?, need(ex.alpha, "alpha", t)?, need(ex.beta, "beta", t)?);
            let (q1, alpha1, p1) = (need(ex.q1, "q1", t)?, need(ex.alpha1, "alpha1", t)?, need(ex.p1, "p1", t)?);
            hyp(q.value() >= 1.0 && le(q, alpha) && le(alpha, beta), || format!("need 1 <= q <= alpha <= beta, got {q}, {alpha}, {beta}"))?;
            hyp(le(q, q1) && le(q1, alpha1) && le(alpha1, p1), || format!("need q <= q1 <= alpha1 <= p1, got {q}, {q1}, {alpha1}, {p1}"))?;
            let inv_theta = q1.recip() - beta.recip();
            hyp(inv_theta > 0.0 && inv_theta <= p1.recip() + EXP_SLACK, || {
                format!("need 0 < 1/q1 - 1/beta = {inv_theta} <= 1/p1 = {}", p1.recip())
            })?;
            plan.derived.insert("theta".into(), theta(q, q1, beta)?);
            if t != Target::Thm21Part1 {
                hyp(lt(alpha, beta), || format!("this bound needs alpha < beta, got {alpha}, {beta}"))?;
                plan.derived.insert("s".into(), 1.0 / (alpha.recip() - beta.recip()));
            }
            two_weight_gate(&mut plan, q, q1, beta)?;
            if t == Target::Prop34 {
                plan.kernel = Some(kernel_gate(&plan.measure, &kernel_spec(&plan)?, beta, &mut plan.derived)?);
            }
        }
        Target::Cor23 | Target::Cor35 => {
            let (q, p, alpha, beta) = (need(ex.q, "q", t)?, need(ex.p, "p", t)?, need(ex.alpha, "alpha", t)?, need(ex.beta, "beta", t)?);
            hyp(q.value() >= 1.0 && le(q, alpha) && lt(alpha, beta), || format!("need 1 <= q <= alpha < beta, got {q}, {alpha}, {beta}"))?;
            let inv_theta = q.recip() - beta.recip();
            hyp(inv_theta > 0.0 && inv_theta <= p.recip() + EXP_SLACK && p.recip() <= alpha.recip() + EXP_SLACK, || {
                format!("need 0 < 1/q - 1/beta = {inv_theta} <= 1/p = {} <= 1/alpha = {}", p.recip(), alpha.recip())
            })?;
            plan.derived.insert("s".into(), 1.0 / (alpha.recip() - beta.recip()));
            plan.derived.insert("theta".into(), 1.0 / inv_theta);
            if t == Target::Cor35 {
                plan.kernel = Some(kernel_gate(&plan.measure, &kernel_spec(&plan)?, beta, &mut plan.derived)?);
            }
        }
        Target::Cor24 => {
            let (q, alpha, beta) = (need(ex.q, "q", t)?, need(ex.alpha, "alpha", t)?, need(ex.beta, "beta", t)?);
            hyp(q.value() >= 1.0 && lt(q, alpha) && lt(alpha, beta), || format!("need 1 <= q < alpha < beta, got {q}, {alpha}, {beta}"))?;
            plan.derived.insert("s".into(), 1.0 / (alpha.recip() - beta.recip()));
        }
        Target::Cor36 => {
            let (alpha, beta) = (need(ex.alpha, "alpha", t)?, need(ex.beta, "beta", t)?);
            hyp(alpha.value() > 1.0 && lt(alpha, beta) && !beta.is_infinite(), || {
                format!("need 1 < alpha < beta < inf, got {alpha}, {beta}")
            })?;
            let inv_p = alpha.recip() - 0.5 * beta.recip();
            let inv_q = alpha.recip() + 0.25 * beta.recip();
            hyp(inv_q <= 1.0, || format!("no admissible (q, p): the midpoint choice needs 1/q = {inv_q} <= 1"))?;
            plan.derived.insert("q".into(), 1.0 / inv_q);
            plan.derived.insert("p".into(), 1.0 / inv_p);
            plan.derived.insert("s".into(), 1.0 / (alpha.recip() - beta.recip()));
            plan.kernel = Some(kernel_gate(&plan.measure, &kernel_spec(&plan)?, beta, &mut plan.derived)?);
        }
        Target::Thm31Goodlambda => {
            let (q, alpha, beta) = (need(ex.q, "q", t)?, need(ex.alpha, "alpha", t)?, need(ex.beta, "beta", t)?);
            hyp(q.value() >= 1.0 && le(q, alpha) && lt(alpha, beta), || format!("need 1 <= q <= alpha < beta, got {q}, {alpha}, {beta}"))?;
            let inv_p = q.recip() - beta.recip();
            hyp(inv_p <= alpha.recip() + EXP_SLACK, || {
                format!("alpha must lie in the admissible range 1/q - 1/beta = {inv_p} <= 1/alpha = {}", alpha.recip())
            })?;
            plan.derived.insert("p".into(), 1.0 / inv_p);
            let kappa = ex.kappa.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
            hyp(!kappa.is_empty() && kappa.iter().all(|k| *k > 0.0 && k.is_finite()), || "every kappa must be positive".into())?;
            if let Some(q1) = ex.q1 {
                let th = theta(q, q1, beta)?;
                plan.derived.insert("theta".into(), th);
                plan.weight = plan.weight.powered(th);
            }
            let w = plan.weight.build()?;
            let family = weight_family(&plan.measure, &plan.functions, plan.scenario.sampling.anchor)?;
            let sampler = SubsetSampler::new(1000, plan.scenario.seed);
            let delta = a_infty_epsilon_delta(&plan.measure, &w, 0.5, &family, &sampler)?;
            hyp(delta > 0.0, || "weight fails the sampled A-infinity test at epsilon = 1/2".into())?;
            plan.derived.insert("a_infty_delta".into(), delta);
            plan.kernel = Some(kernel_gate(&plan.measure, &kernel_spec(&plan)?, beta, &mut plan.derived)?);
        }
        Target::Lem32 | Target::Lem33 => {
            let (q, beta) = (need(ex.q, "q", t)?, need(ex.beta, "beta", t)?);
            hyp(q.value() >= 1.0 && lt(q, beta), || format!("need 1 <= q < beta, got {q}, {beta}"))?;
            plan.derived.insert("p".into(), 1.0 / (q.recip() - beta.recip()));
            plan.kernel = Some(kernel_gate(&plan.measure, &kernel_spec(&plan)?, beta, &mut plan.derived)?);
            if t == Target::Lem32 {
                let g = &plan.scenario.good_lambda;
                hyp(!g.a.is_empty() && !g.b.is_empty() && !g.c.is_empty(), || "good-lambda grids must be nonempty".into())?;
                hyp(g.a.iter().chain(&g.b).chain(&g.c).all(|v| *v > 0.0 && v.is_finite()), || {
                    "good-lambda grid values must be positive".into()
                })?;
            }
        }
        Target::Prop41 | Target::Steinweiss => {
            nonnegative_gate(&plan.measure, &plan.functions)?;
            for tu in &plan.tuples {
                let m = RadonMeasure::power(tu.a)?;
                let mut d = BTreeMap::new();
                growth_gate(&m, &mut d)?;
                let beta = Exponent::from_recip(tu.inv_beta)?;
                kernel_gate(&m, &KernelSpec::Riesz { gamma: tu.gamma }, beta, &mut d)?;
                for (k, v) in d {
                    plan.derived.insert(format!("{k}[{}]", tu.label()), v);
                }
                plan.derived.insert(format!("s[{}]", tu.label()), 1.0 / tu.inv_s());
            }
        }
        Target::NormProperties => {
            let (q, p, alpha) = (need(ex.q, "q", t)?, need(ex.p, "p", t)?, need(ex.alpha, "alpha", t)?);
            hyp(q.value() >= 1.0 && lt(q, alpha) && lt(alpha, p), || format!("the embedding needs q < alpha < p, got {q}, {alpha}, {p}"))?;
        }
        Target::CoveringTrials => {
            let c = &plan.scenario.covering;
            if c.trials == 0 {
                return Err(Error::Config("covering.trials must be positive".into()));
            }
        }
    }
    Ok(plan)
}

/// Runs a prepared plan at the requested grid scale, then with doubled
/// grids and with the family scaled by 2.
pub fn run(plan: &Plan, opts: &RunOptions) -> Result<VerificationReport> {
    let scn = &plan.scenario;
    let base = Grids::new(&scn.sampling, &scn.lambda_grid, opts.grid_scale);
    let fine = Grids::new(&scn.sampling, &scn.lambda_grid, 2.0 * opts.grid_scale);
    let e0 = runners::evaluate(plan, &base, 1.0)?;
    let e1 = runners::evaluate(plan, &fine, 1.0)?;
    let e2 = runners::evaluate(plan, &base, 2.0)?;
    let (constant, witness) = report::constant_of(&e0.rows);
    let refined = report::constant_of(&e1.rows).0;
    let scaled = report::constant_of(&e2.rows).0;
    let stability = report::relative_change(constant, refined);
    let deviation = report::relative_change(constant, scaled);
    let mut derived = plan.derived.clone();
    derived.extend(e0.tables);
    let pass = constant.is_finite()
        && stability <= scn.tolerances.stability
        && deviation <= scn.tolerances.homogeneity
        && e0.checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        tool: report::TOOL.into(),
        version: report::VERSION.into(),
        scenario: scn.label(),
        target: scn.target,
        seed: scn.seed,
        grids: base.sizes(),
        derived,
        rows: e0.rows,
        empirical_constant: constant,
        witness,
        refined_constant: refined,
        refinement_stability: stability,
        homogeneity_constant: scaled,
        homogeneity_deviation: deviation,
        checks: e0.checks,
        notes: e0.notes,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
    })
}

pub fn run_scenario(scn: &Scenario, opts: &RunOptions) -> Result<VerificationReport> {
    run(&prepare(scn, opts)?, opts)
}
