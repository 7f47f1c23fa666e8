//! Both sides of each inequality, row by row.

use std::collections::BTreeMap;

use rayon::prelude::*;

use super::fields::{power_integral, sup_over_lambda, Field, Geometry, Weighing};
use super::report::{constant_of, Check, Row};
use super::scenario::Target;
use super::{Grids, Plan, PowerTuple};
use crate::covering::covering_trials;
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::function::RealFunction;
use crate::measure::RadonMeasure;
use crate::norms::{amalgam_norm, lq_norm_total, weak_norm, ScaleSearch};
use crate::operators::{farfield_bound_check, potential, power_twist, riesz_potential_power_route, FarFieldGeometry, Kernel, MaximalSampler};
use crate::weights::WeightSpec;

/// Rows and side results of one evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    /// Per-group constants merged into the report's derived table.
    pub tables: BTreeMap<String, f64>,
}

struct Ctx<'a> {
    plan: &'a Plan,
    grids: &'a Grids,
    /// Homogeneity factor applied to every function.
    c: f64,
}

impl Ctx<'_> {
    fn ex(&self, v: Option<Exponent>, name: &str) -> Result<Exponent> {
        v.ok_or_else(|| Error::Config(format!("missing exponents.{name}")))
    }

    fn derived(&self, key: &str) -> Result<f64> {
        self.plan.derived.get(key).copied().ok_or_else(|| Error::Internal(format!("derived quantity {key} is missing")))
    }

    /// `(label, c·f)` for the family.
    fn family(&self) -> Result<Vec<(String, RealFunction)>> {
        self.plan
            .functions
            .iter()
            .zip(&self.plan.labels)
            .map(|(spec, label)| Ok((label.clone(), spec.scaled(self.c).build()?)))
            .collect()
    }

    fn geometry(&self, m: &RadonMeasure, f: &RealFunction) -> Result<Geometry> {
        let s = &self.plan.scenario.sampling;
        let (t_lo, t_hi) = match s.window {
            Some([a, b]) => (m.cdf(a), m.cdf(b)),
            None => {
                let sup = f.support();
                let (ta, tb) = (m.cdf(sup.a), m.cdf(sup.b));
                let pad = s.pad * (tb - ta);
                (ta - pad, tb + pad)
            }
        };
        Geometry::new(t_lo, t_hi, self.grids.samples, self.grids.tail_per_octave, self.grids.tail_octaves)
    }

    fn maximal_field(&self, m: &RadonMeasure, f: &RealFunction, q: Exponent, beta: Exponent, geo: &Geometry) -> Result<Field> {
        let sampler = MaximalSampler::new(m, f, q, beta, self.grids.samples)?.with_counts(self.grids.masses, self.grids.splits);
        Field::sample(geo, |t| Ok(sampler.eval_t(t)))
    }

    fn potential_field(&self, m: &RadonMeasure, f: &RealFunction, k: &Kernel, geo: &Geometry) -> Result<Field> {
        let tol = self.plan.scenario.tolerances.quad;
        Field::sample(geo, |t| potential(m, f, k, m.try_inv_cdf(t)?, tol))
    }

    fn lambdas(&self, max: f64) -> Vec<f64> {
        self.plan.scenario.lambda_grid.resolve(max, self.grids.lambda_points, self.c)
    }

    fn search(&self, m: &RadonMeasure, f: &RealFunction) -> ScaleSearch {
        ScaleSearch::for_function(m, f).with_points(self.grids.scale_points).with_anchor(self.plan.scenario.sampling.anchor)
    }

    fn amalgam(&self, m: &RadonMeasure, f: &RealFunction, q: Exponent, p: Exponent, alpha: Exponent) -> Result<f64> {
        Ok(amalgam_norm(m, f, q, p, alpha, &self.search(m, f))?.value)
    }

    fn kernel(&self) -> Result<&Kernel> {
        self.plan.kernel.as_ref().ok_or_else(|| Error::Internal("kernel was not prepared".into()))
    }

    fn weighing<'a>(&self, m: &'a RadonMeasure, w: &'a Option<RealFunction>, geo: &Geometry) -> Result<Weighing<'a>> {
        match w {
            None => Ok(Weighing::mu(m, geo)),
            Some(w) => Weighing::weighted(m, w, geo),
        }
    }
}

/// `None` for the unit weight so that plain `μ`-masses are used.
fn weight_fn(spec: &WeightSpec) -> Result<Option<RealFunction>> {
    match spec {
        WeightSpec::One => Ok(None),
        other => other.build().map(Some),
    }
}

pub fn evaluate(plan: &Plan, grids: &Grids, c: f64) -> Result<Evaluation> {
    let ctx = Ctx { plan, grids, c };
    match plan.scenario.target {
        Target::Thm21Part1 => two_weight(&ctx, false, false),
        Target::Thm21Part2 => two_weight(&ctx, true, false),
        Target::Prop34 => two_weight(&ctx, true, true),
        Target::Cor23 => maximal_norms(&ctx, false),
        Target::Cor24 => maximal_norms(&ctx, true),
        Target::Thm31Goodlambda => good_lambda(&ctx),
        Target::Lem32 => local_good_lambda(&ctx),
        Target::Lem33 => far_field(&ctx),
        Target::Cor35 => potential_chain(&ctx),
        Target::Cor36 => potential_weak(&ctx),
        Target::Prop41 | Target::Steinweiss => power_weighted(&ctx),
        Target::NormProperties => embedding(&ctx),
        Target::CoveringTrials => covering(&ctx),
    }
}

/// Weighted level sets of `𝔪f` (or of `Kf` when `potential` is set)
/// against the one- or two-factor right-hand side.
fn two_weight(ctx: &Ctx, part2: bool, potential: bool) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, alpha, beta) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.alpha, "alpha")?, ctx.ex(ex.beta, "beta")?);
    let (q1, alpha1, p1) = (ctx.ex(ex.q1, "q1")?, ctx.ex(ex.alpha1, "alpha1")?, ctx.ex(ex.p1, "p1")?);
    let th = ctx.derived("theta")?;
    let v = plan.weight.build()?;
    let vt = weight_fn(&plan.weight.powered(th))?;
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let field =
            if potential { ctx.potential_field(m, &f, ctx.kernel()?, &geo)? } else { ctx.maximal_field(m, &f, q, beta, &geo)? };
        let rho = ctx.weighing(m, &vt, &geo)?;
        let fv = f.product(&v);
        let (first, second, e2) = if part2 {
            let s = ctx.derived("s")?;
            let first = ctx.amalgam(m, &fv, q1, p1, alpha1)?;
            let second = ctx.amalgam(m, &f, q, Exponent::INFINITY, alpha)?;
            (first, second, s * (q1.recip() - alpha1.recip()))
        } else {
            (lq_norm_total(m, &fv, q1)?, 1.0, 0.0)
        };
        let lambdas = ctx.lambdas(field.max());
        if lambdas.is_empty() {
            out.rows.push(Row::new(&label, "", None, 0.0, 0.0));
        }
        for l in lambdas {
            let lhs = rho.mass_above(&geo, &field, l)?.powf(1.0 / th);
            let rhs = if part2 { (first / l) * (second / l).powf(e2) } else { first / l };
            out.rows.push(Row::new(&label, "", Some(l), lhs, rhs));
        }
    }
    Ok(out)
}

/// Weak (or strong) `s`-norm of the sampled maximal function.
fn maximal_norms(ctx: &Ctx, strong: bool) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, alpha, beta) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.alpha, "alpha")?, ctx.ex(ex.beta, "beta")?);
    let s = ctx.derived("s")?;
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let field = ctx.maximal_field(m, &f, q, beta, &geo)?;
        if strong {
            let lhs = power_integral(&geo, &field, s).powf(1.0 / s);
            out.rows.push(Row::new(&label, "", None, lhs, lq_norm_total(m, &f, alpha)?));
        } else {
            let p = ctx.ex(ex.p, "p")?;
            let mu = Weighing::mu(m, &geo);
            let (lhs, at) = sup_over_lambda(&ctx.lambdas(field.max()), 1.0, 1.0 / s, |l| mu.mass_above(&geo, &field, l))?;
            out.rows.push(Row::new(&label, "", finite(at), lhs, ctx.amalgam(m, &f, q, p, alpha)?));
        }
    }
    Ok(out)
}

fn finite(l: f64) -> Option<f64> {
    if l.is_finite() {
        Some(l)
    } else {
        None
    }
}

/// `sup_λ λ^κ ρ({Kf > λ})` against `sup_λ λ^κ ρ({𝔪f > λ})`, per κ.
fn good_lambda(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, beta) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.beta, "beta")?);
    let kappas = ex.kappa.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let w = weight_fn(&plan.weight)?;
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let mf = ctx.maximal_field(m, &f, q, beta, &geo)?;
        let kf = ctx.potential_field(m, &f, ctx.kernel()?, &geo)?;
        let rho = ctx.weighing(m, &w, &geo)?;
        let (lk, lm) = (ctx.lambdas(kf.max()), ctx.lambdas(mf.max()));
        let rk = lk.iter().map(|&l| rho.mass_above(&geo, &kf, l)).collect::<Result<Vec<_>>>()?;
        let rm = lm.iter().map(|&l| rho.mass_above(&geo, &mf, l)).collect::<Result<Vec<_>>>()?;
        for &kappa in &kappas {
            let sup = |ls: &[f64], rs: &[f64]| {
                ls.iter().zip(rs).map(|(l, r)| (l.powf(kappa) * r, *l)).fold((0.0, f64::NAN), |b, x| if x.0 > b.0 { x } else { b })
            };
            let (lhs, at) = sup(&lk, &rk);
            let (rhs, _) = sup(&lm, &rm);
            out.rows.push(Row::new(&label, format!("kappa={kappa}"), finite(at), lhs, rhs));
        }
    }
    Ok(out)
}

/// The component of `{Kf > a}` around the peak, as measure coordinates of
/// two sample points where `Kf <= a`.
fn component(geo: &Geometry, kf: &Field, a: f64) -> Option<(f64, f64)> {
    let peak = kf.inner.iter().enumerate().fold(0, |b, (i, v)| if *v > kf.inner[b] { i } else { b });
    let mut lo = None;
    for i in (0..peak).rev() {
        if kf.inner[i] <= a {
            lo = Some(geo.midpoint(i));
            break;
        }
    }
    if lo.is_none() {
        lo = geo.offsets.iter().zip(&kf.left).find(|(_, v)| **v <= a).map(|(o, _)| geo.left_t(*o));
    }
    let mut hi = None;
    for i in peak + 1..kf.inner.len() {
        if kf.inner[i] <= a {
            hi = Some(geo.midpoint(i));
            break;
        }
    }
    if hi.is_none() {
        hi = geo.offsets.iter().zip(&kf.right).find(|(_, v)| **v <= a).map(|(o, _)| geo.right_t(*o));
    }
    Some((lo?, hi?))
}

/// Local good-λ estimate on a component `I` of `{Kf > a}`.
fn local_good_lambda(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, beta) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.beta, "beta")?);
    let p = ctx.derived("p")?;
    let k = ctx.kernel()?;
    let tol = plan.scenario.tolerances.quad;
    let grid = &plan.scenario.good_lambda;
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let kf = ctx.potential_field(m, &f, k, &geo)?;
        let top = kf.max();
        if top == 0.0 {
            for (&b, &c) in grid.b.iter().flat_map(|b| grid.c.iter().map(move |c| (b, c))) {
                out.rows.push(Row::new(&label, format!("b={b},c={c}"), None, 0.0, 0.0));
            }
            continue;
        }
        for &af in &grid.a {
            let a = af * top;
            let Some((t1, t2)) = component(&geo, &kf, a) else {
                out.notes.push(format!("{label}: a={af}: no interval with Kf <= a at both ends; skipped"));
                continue;
            };
            let local = Geometry::new(t1, t2, ctx.grids.samples, 1, 0)?;
            let kl = ctx.potential_field(m, &f, k, &local)?;
            let ml = ctx.maximal_field(m, &f, q, beta, &local)?;
            let (x1, x2) = (m.try_inv_cdf(t1)?, m.try_inv_cdf(t2)?);
            let outside = RealFunction::from_fn("outside I", move |y| if x1 <= y && y < x2 { 0.0 } else { 1.0 })
                .with_breakpoints(vec![x1, x2]);
            let h = f.product(&outside);
            let probes = (64.0 * ctx.grids.scale).round().max(1.0) as usize;
            let far = (0..probes)
                .into_par_iter()
                .map(|j| potential(m, &h, k, m.inv_cdf(t1 + (j as f64 + 0.5) / probes as f64 * (t2 - t1)), tol))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            let Some(b_min) = grid.b.iter().copied().filter(|b| 2.0 * far < a * b).reduce(f64::min) else {
                out.notes.push(format!("{label}: a={af}: no b in the grid separates the far part (max {far}); skipped"));
                continue;
            };
            out.tables.insert(format!("B[{label},a={af}]"), b_min);
            let mu = Weighing::mu(m, &local);
            for &b in grid.b.iter().filter(|b| **b >= b_min) {
                for &cc in &grid.c {
                    let lhs = mu.joint_mass_inner(&kl, a * b, &ml, a * cc);
                    let rhs = (cc / b).powf(p) * (t2 - t1);
                    out.rows.push(Row::new(&label, format!("a={af},b={b},c={cc}"), None, lhs, rhs));
                }
            }
        }
    }
    let (d, _) = constant_of(&out.rows);
    out.tables.insert("D1".into(), d);
    Ok(out)
}

/// Pointwise far-field bound at points beyond symmetric flanks of the support.
fn far_field(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, beta) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.beta, "beta")?);
    let k = ctx.kernel()?;
    let n = ctx.grids.far_points;
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let s = f.support();
        let g = FarFieldGeometry::symmetric(m, s.a, s.b)?;
        let w = m.cdf(s.b) - m.cdf(s.a);
        let (ty1, ty2) = (m.cdf(g.y1), m.cdf(g.y2));
        let rows = (0..2 * n)
            .into_par_iter()
            .map(|j| {
                let off = w * 2f64.powf(8.0 * ((j % n) + 1) as f64 / n as f64);
                let (side, t) = if j < n { ("right", ty2 + off) } else { ("left", ty1 - off) };
                let x = m.try_inv_cdf(t)?;
                let r = farfield_bound_check(m, &f, q, beta, &g, x, k)?;
                Ok(Row::new(&label, format!("{side},x={x}"), None, r.lhs, r.rhs_factor))
            })
            .collect::<Result<Vec<_>>>()?;
        out.rows.extend(rows);
    }
    let (d, _) = constant_of(&out.rows);
    out.tables.insert("D2".into(), d);
    Ok(out)
}

/// `sup_λ λ μ({g > λ})^{1/s}` on a sampled field.
fn weak_of_field(ctx: &Ctx, m: &RadonMeasure, geo: &Geometry, field: &Field, s: f64) -> Result<(f64, f64)> {
    let mu = Weighing::mu(m, geo);
    sup_over_lambda(&ctx.lambdas(field.max()), 1.0, 1.0 / s, |l| mu.mass_above(geo, field, l))
}

/// Weak `s`-norm of `Kf` against the product bound and against `‖f‖_{q,p,α}`.
fn potential_chain(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, p, alpha) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.p, "p")?, ctx.ex(ex.alpha, "alpha")?);
    let (s, th) = (ctx.derived("s")?, ctx.derived("theta")?);
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let kf = ctx.potential_field(m, &f, ctx.kernel()?, &geo)?;
        let (lhs, at) = weak_of_field(ctx, m, &geo, &kf, s)?;
        let full = ctx.amalgam(m, &f, q, p, alpha)?;
        let sup = ctx.amalgam(m, &f, q, Exponent::INFINITY, alpha)?;
        let middle = (full.powf(1.0 / s) * sup.powf(1.0 / th - 1.0 / s)).powf(th);
        out.rows.push(Row::new(&label, "step=1", finite(at), lhs, middle));
        out.rows.push(Row::new(&label, "step=2", finite(at), lhs, full));
        out.checks.push(Check::at_most(format!("{label}: p = inf norm <= p norm"), sup, full, 1e-6));
        out.checks.push(Check::at_most(format!("{label}: product bound <= p norm"), middle, full, 1e-6));
    }
    Ok(out)
}

/// Weak `s`-norm of `Kf` against `‖f‖*_{α,∞}`, with the intermediate
/// amalgam norm at the automatically chosen `(q, p)`.
fn potential_weak(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let alpha = ctx.ex(ex.alpha, "alpha")?;
    let s = ctx.derived("s")?;
    let (q, p) = (Exponent::new(ctx.derived("q")?)?, Exponent::new(ctx.derived("p")?)?);
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let geo = ctx.geometry(m, &f)?;
        let kf = ctx.potential_field(m, &f, ctx.kernel()?, &geo)?;
        let (lhs, at) = weak_of_field(ctx, m, &geo, &kf, s)?;
        let weak = weak_norm(m, &f, alpha, ctx.grids.weak_levels)?;
        let mid = ctx.amalgam(m, &f, q, p, alpha)?;
        out.rows.push(Row::new(&label, "", finite(at), lhs, weak));
        out.rows.push(Row::new(&label, "via=amalgam", finite(at), lhs, mid));
        out.rows.push(Row::new(&label, "embedding", None, mid, weak));
    }
    Ok(out)
}

/// Riesz potential inequalities through the power measure, per `(a, γ, α)`.
fn power_weighted(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let strong = plan.scenario.target == Target::Steinweiss;
    let mut out = Evaluation::default();
    for tu in &plan.tuples {
        let PowerTuple { a, gamma, alpha, q, p, inv_beta } = *tu;
        let tag = tu.label();
        let m = RadonMeasure::power(a)?;
        let k = Kernel::riesz(gamma)?;
        let s = 1.0 / tu.inv_s();
        let th = 1.0 / (q.recip() - inv_beta);
        out.checks.push(Check::close(format!("[{tag}] 1/eta"), 1.0 - inv_beta, (1.0 - gamma) / (1.0 - a), 1e-12));
        if ctx.c == 1.0 {
            let one = RealFunction::indicator(0.0, 1.0)?;
            let v = riesz_potential_power_route(&one, gamma, a, 0.0, 1e-10)?;
            out.checks.push(Check::close(format!("[{tag}] potential of the unit indicator at 0"), v, 1.0 / gamma, 1e-6));
        }
        let start = out.rows.len();
        for (label, f) in ctx.family()? {
            let big_f = power_twist(&f, a);
            let geo = ctx.geometry(&m, &big_f)?;
            let kf = ctx.potential_field(&m, &big_f, &k, &geo)?;
            if strong {
                let lhs = power_integral(&geo, &kf, s).powf(1.0 / s);
                out.rows.push(Row::new(&label, tag.clone(), None, lhs, lq_norm_total(&m, &big_f, alpha)?));
                continue;
            }
            let (lhs, at) = weak_of_field(ctx, &m, &geo, &kf, s)?;
            let full = ctx.amalgam(&m, &big_f, q, p, alpha)?;
            let sup = ctx.amalgam(&m, &big_f, q, Exponent::INFINITY, alpha)?;
            let rhs = full.powf(th / s) * sup.powf(1.0 - th / s);
            out.rows.push(Row::new(&label, format!("{tag},part=1"), finite(at), lhs, rhs));
            if alpha.value() > 1.0 {
                let weak = weak_norm(&m, &big_f, alpha, ctx.grids.weak_levels)?;
                out.rows.push(Row::new(&label, format!("{tag},part=2"), finite(at), lhs, weak));
            }
        }
        out.tables.insert(format!("constant[{tag}]"), constant_of(&out.rows[start..]).0);
    }
    Ok(out)
}

/// `‖f‖_{q,p,α} / ‖f‖*_{α,∞}`, with the identity `X^{α,α,α} = L^α` checked.
fn embedding(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let ex = &plan.scenario.exponents;
    let m = &plan.measure;
    let (q, p, alpha) = (ctx.ex(ex.q, "q")?, ctx.ex(ex.p, "p")?, ctx.ex(ex.alpha, "alpha")?);
    let mut out = Evaluation::default();
    for (label, f) in ctx.family()? {
        let lhs = ctx.amalgam(m, &f, q, p, alpha)?;
        let rhs = weak_norm(m, &f, alpha, ctx.grids.weak_levels)?;
        out.rows.push(Row::new(&label, "", None, lhs, rhs));
        if ctx.c == 1.0 {
            if let (Ok(strong), Ok(same)) = (lq_norm_total(m, &f, alpha), ctx.amalgam(m, &f, alpha, alpha, alpha)) {
                if strong.is_finite() && strong < 1e6 {
                    out.checks.push(Check::close(format!("{label}: X^(alpha,alpha,alpha) = L^alpha"), same, strong, 1e-3));
                }
            }
        }
    }
    Ok(out)
}

fn covering(ctx: &Ctx) -> Result<Evaluation> {
    let plan = ctx.plan;
    let cov = &plan.scenario.covering;
    let res = covering_trials(&plan.measure, &cov.family, cov.trials, plan.scenario.seed, cov.rule, cov.bound)?;
    let mut out = Evaluation::default();
    out.rows.push(Row::new("random families", format!("trials={}", cov.trials), None, res.max_overlap as f64, cov.bound as f64));
    out.checks.push(Check::at_most("max overlap", res.max_overlap as f64, cov.bound as f64, 0.0));
    out.tables.insert("mean_selected".into(), res.mean_selected);
    out.tables.insert("worst_seed".into(), res.worst_seed as f64);
    Ok(out)
}
