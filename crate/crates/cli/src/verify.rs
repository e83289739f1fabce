use serde::Serialize;
use serde_json::{json, Value};

use critical_jacobi::model::{ClassificationResult, Regime};
use critical_jacobi::pipeline::{Branch, PipelineStage};
use critical_jacobi::recurrence::{
    backward_solve, envelope_check, forward_solve, max_relative_difference, recurrence_budget, trace_rows,
    two_seed_certificate, wronskian_drift, EnvelopeReport, TraceRow,
};
use critical_jacobi::{Model, Mpf, Pipeline, PrecisionContext, Real, SolutionTrace, Vec2};

use crate::classify::build_model;
use crate::{resolve_digits, CliResult};

/// Below this the slope-fit range `[100, 5 n_max]` spans less than a decade.
pub const MIN_FIT_N: i64 = 500;
/// `K`/`L` remainders only reach their asymptotic slope past `1e4`.
pub const KL_RANGE: [i64; 2] = [10_000, 1_000_000];
pub const DET_RATIO_N: i64 = 10_000;
pub const ROUTE_STEPS: i64 = 50;
pub const TRACE_DIGITS: usize = 20;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub alpha: String,
    pub b: String,
    pub lambda: String,
    pub n_max: i64,
    pub digits: Option<u32>,
    pub tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            alpha: "0.8".into(),
            b: "1".into(),
            lambda: "1".into(),
            n_max: 2000,
            digits: None,
            tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: Value,
}

impl Check {
    fn new<T: Serialize>(name: &str, passed: bool, detail: &T) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: serde_json::to_value(detail).expect("detail serializes"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub alpha: String,
    pub b: String,
    pub lambda: String,
    pub n_max: i64,
    pub digits: u32,
    pub tolerance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config: ConfigEcho,
    pub warnings: Vec<String>,
    pub classification: ClassificationResult,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
    pub passed: bool,
}

pub struct VerifyOutcome {
    pub report: VerifyReport,
    /// `(file stem, rows)` for each emitted solution trace.
    pub traces: Vec<(String, Vec<TraceRow>)>,
}

impl VerifyOutcome {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.report.checks.iter().find(|c| c.name == name)
    }
}

fn required_digits(cfg: &VerifyConfig) -> CliResult<u32> {
    let probe = build_model(&cfg.alpha, &cfg.b, &cfg.lambda, PrecisionContext::default().digits())?;
    let budget = recurrence_budget(&probe, 2 * cfg.n_max + 1).unwrap_or(0);
    Ok(budget.max(PrecisionContext::default().digits()))
}

pub fn run(cfg: &VerifyConfig) -> CliResult<VerifyOutcome> {
    if cfg.n_max < 8 {
        return Err(crate::CliError::usage("--n-max must be at least 8"));
    }
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(crate::CliError::usage("--tolerance must be positive"));
    }
    let required = required_digits(cfg)?;
    let (digits, raised) = resolve_digits(cfg.digits, required);
    let mut warnings: Vec<String> = raised.into_iter().collect();
    if cfg.n_max < MIN_FIT_N {
        warnings.push("warning: insufficient range for slope fits".into());
    }
    let model = build_model(&cfg.alpha, &cfg.b, &cfg.lambda, digits)?;
    let fit_hi = (5 * cfg.n_max).max(200);
    let classification = model.classify(fit_hi)?;
    let mut checks = vec![discriminant_check(&model, &classification, cfg.tolerance)];
    let mut skipped = Vec::new();
    let mut traces = Vec::new();

    if classification.regime == Regime::CriticalHyperbolic {
        let pipeline = Pipeline::new(model.clone())?;
        hyperbolic_checks(&pipeline, cfg, fit_hi, &mut checks, &mut traces)?;
    } else {
        skipped.push("pipeline and envelope checks: they require b*lambda > 0".into());
        let ctx = *model.ctx();
        let u = forward_solve(&model, &Vec2::e1(&ctx), 1, 2 * cfg.n_max + 1)?;
        let v = forward_solve(&model, &Vec2::e2(&ctx), 1, 2 * cfg.n_max + 1)?;
        let w = wronskian_drift(&model, &u, &v)?;
        checks.push(Check::new("wronskian", w.passed, &w));
        traces.push(("trace_e1".into(), trace_rows(&model, &u, None, Some(&v), TRACE_DIGITS)));
        traces.push(("trace_e2".into(), trace_rows(&model, &v, None, Some(&u), TRACE_DIGITS)));
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyOutcome {
        report: VerifyReport {
            config: ConfigEcho {
                alpha: cfg.alpha.clone(),
                b: cfg.b.clone(),
                lambda: cfg.lambda.clone(),
                n_max: cfg.n_max,
                digits,
                tolerance: cfg.tolerance,
            },
            warnings,
            classification,
            checks,
            skipped,
            passed,
        },
        traces,
    })
}

fn discriminant_check(model: &Model<Mpf>, c: &ClassificationResult, tol: f64) -> Check {
    let alpha = model.alpha().to_f64();
    let (exp, coeff) = match (c.fitted_discr_exponent, c.discr_leading_coeff) {
        (Some(e), Some(k)) => (e, k),
        _ => {
            return Check::new("discriminant-law", true, &json!({ "note": "lambda = 0: discriminant vanishes identically" }))
        }
    };
    let exp_ok = (exp + alpha).abs() <= 0.1;
    let rel = (coeff / c.expected_leading_coeff - 1.0).abs();
    Check::new(
        "discriminant-law",
        exp_ok && rel < tol,
        &json!({
            "fitted_exponent": exp,
            "expected_exponent": -alpha,
            "leading_coeff": coeff,
            "expected_coeff": c.expected_leading_coeff,
            "coeff_relative_error": rel,
            "range": c.fit_range,
        }),
    )
}

fn stage_check(stage: PipelineStage) -> Check {
    let name = format!("stage-{}", stage.stage_name);
    Check::new(&name, stage.passed, &stage)
}

fn envelope_checks(label: &str, e: &EnvelopeReport, checks: &mut Vec<Check>) {
    checks.push(Check::new(
        &format!("{label}-envelope-drift"),
        e.envelope_passed,
        &json!({ "drift": e.envelope_drift, "signed_drift": e.envelope_drift_signed, "range": e.range, "tolerance": e.tolerance }),
    ));
    checks.push(Check::new(
        &format!("{label}-odd-even-constant"),
        e.odd_even_passed,
        &json!({
            "ratio": e.odd_even_ratio,
            "target": e.odd_even_target,
            "relative_error": e.odd_even_relative_error,
            "step4_constant": e.odd_even_step4_constant,
            "step4_relative_error": e.odd_even_step4_relative_error,
            "tolerance": e.tolerance,
        }),
    ));
    checks.push(Check::new(
        &format!("{label}-alternation"),
        e.alternation_passed,
        &json!({ "range": e.range }),
    ));
}

fn hyperbolic_checks(
    p: &Pipeline<Mpf>,
    cfg: &VerifyConfig,
    fit_hi: i64,
    checks: &mut Vec<Check>,
    traces: &mut Vec<(String, Vec<TraceRow>)>,
) -> CliResult<()> {
    let m = &p.model;
    let ctx = *m.ctx();
    let tol = cfg.tolerance;

    checks.push(stage_check(p.certify_m(100, fit_hi)));
    checks.push(stage_check(p.certify_n(100, fit_hi)?));
    checks.push(stage_check(p.certify_ansatz(100, fit_hi)));
    checks.push(stage_check(p.certify_k(KL_RANGE[0], KL_RANGE[1])?));
    checks.push(stage_check(p.certify_l(KL_RANGE[0], KL_RANGE[1])?));

    let det = p.det_ratio(DET_RATIO_N).to_f64();
    checks.push(Check::new(
        "det-ratio",
        (det - 1.0).abs() <= tol,
        &json!({ "n": DET_RATIO_N, "value": det }),
    ));

    let route = p.route_check(p.default_n0(), ROUTE_STEPS)?;
    checks.push(Check::new("route-equivalence", route.passed, &route));

    let top = 2 * cfg.n_max + 1;
    let fwd = forward_solve(m, &Vec2::e2(&ctx), 1, top)?;
    let bwd = backward_solve(m, 4 * top, top)?;
    let (lo, hi) = (cfg.n_max / 2, cfg.n_max);
    let plus = envelope_check(&fwd, &p.ansatz, m, Branch::Plus, lo, hi, tol)?;
    let minus = envelope_check(&bwd, &p.ansatz, m, Branch::Minus, lo, hi, tol)?;
    envelope_checks("dominant", &plus, checks);
    envelope_checks("subordinate", &minus, checks);

    let w = wronskian_drift(m, &fwd, &bwd)?;
    checks.push(Check::new("wronskian", w.passed, &w));
    let same = wronskian_drift(m, &fwd, &fwd)?;
    checks.push(Check::new("wronskian-identical", same.identically_zero, &same));

    let seeds = two_seed_certificate(m, 4 * top, top)?;
    checks.push(Check::new("backward-two-seed", seeds.passed, &seeds));

    let step4 = p.step4_reassemble(None, cfg.n_max)?;
    let dom = &step4.dominant;
    let n0 = step4.n0;
    let seed = Vec2::new(dom.u(2 * n0 - 2).unwrap().clone(), dom.u(2 * n0 - 1).unwrap().clone());
    let direct = forward_solve(m, &seed, 2 * n0 - 1, dom.last_index())?;
    let diff = max_relative_difference(dom, &direct).unwrap_or(f64::INFINITY);
    let limit_exp = ctx.digits() as i32 - 20;
    let step4_w = wronskian_drift(m, dom, &bwd)?;
    checks.push(Check::new(
        "step4-vs-direct",
        diff.log10() < -f64::from(limit_exp),
        &json!({ "n0": n0, "max_relative_difference": diff, "tolerance_exponent": limit_exp, "skipped_singular": step4.skipped_singular }),
    ));
    checks.push(Check::new("wronskian-step4", step4_w.passed, &step4_w));

    traces.push(("trace_dominant".into(), trace_rows(m, &fwd, Some((&p.ansatz, Branch::Plus)), Some(&bwd), TRACE_DIGITS)));
    traces.push(("trace_subordinate".into(), trace_rows(m, &bwd, Some((&p.ansatz, Branch::Minus)), Some(&fwd), TRACE_DIGITS)));
    Ok(())
}

/// Reference traces shared with the acceptance suite.
pub struct ReferenceSolutions {
    pub pipeline: Pipeline<Mpf>,
    pub forward: SolutionTrace<Mpf>,
    pub backward: SolutionTrace<Mpf>,
}

pub fn reference_solutions(alpha: &str, b: &str, lambda: &str, n_max: i64) -> CliResult<ReferenceSolutions> {
    let cfg = VerifyConfig {
        alpha: alpha.into(),
        b: b.into(),
        lambda: lambda.into(),
        n_max,
        ..VerifyConfig::default()
    };
    let digits = required_digits(&cfg)?;
    let model = build_model(alpha, b, lambda, digits)?;
    let ctx = *model.ctx();
    let top = 2 * n_max + 1;
    let forward = forward_solve(&model, &Vec2::e2(&ctx), 1, top)?;
    let backward = backward_solve(&model, 4 * top, top)?;
    Ok(ReferenceSolutions {
        pipeline: Pipeline::new(model)?,
        forward,
        backward,
    })
}

pub const CHECK_COLUMNS: [&str; 3] = ["name", "passed", "detail"];
