//! Direct solution of `a_{n-1} u_{n-1} + b_n u_n + a_n u_{n+1} = lambda u_n`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{c_abs, c_real, Cx, Vec2};
use crate::model::{Model, Regime};
use crate::pipeline::{AsymptoticAnsatz, Branch};
use crate::scalar::{required_digits, Real};

/// A solution `u_n` on a contiguous index range.
#[derive(Clone, Debug)]
pub struct SolutionTrace<R: Real> {
    first: i64,
    values: Vec<Cx<R>>,
    pub label: String,
    pub wronskian_drift: Option<f64>,
    pub envelope_ratios: Vec<(i64, f64)>,
}

impl<R: Real> SolutionTrace<R> {
    pub fn new(first: i64, values: Vec<Cx<R>>, label: &str) -> Self {
        Self {
            first,
            values,
            label: label.to_string(),
            wronskian_drift: None,
            envelope_ratios: Vec::new(),
        }
    }

    pub fn first_index(&self) -> i64 {
        self.first
    }

    pub fn last_index(&self) -> i64 {
        self.first + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn u(&self, n: i64) -> Option<&Cx<R>> {
        usize::try_from(n - self.first)
            .ok()
            .and_then(|i| self.values.get(i))
    }

    /// `u_{2k}`.
    pub fn even(&self, k: i64) -> Option<&Cx<R>> {
        self.u(2 * k)
    }

    /// `u_{2k+1}`.
    pub fn odd(&self, k: i64) -> Option<&Cx<R>> {
        self.u(2 * k + 1)
    }

    pub fn values(&self) -> &[Cx<R>] {
        &self.values
    }

    /// Paired indices `k` with both `u_{2k}` and `u_{2k+1}` present.
    pub fn paired_range(&self) -> (i64, i64) {
        let lo = (self.first + 1).div_euclid(2);
        let hi = (self.last_index() - 1).div_euclid(2);
        (lo, hi)
    }
}

/// Digits needed to follow a solution up to `u_{n_max}` without losing the
/// subordinate part, or `None` outside the hyperbolic regime.
pub fn recurrence_budget<R: Real>(model: &Model<R>, n_max: i64) -> Option<u32> {
    if model.regime() != Regime::CriticalHyperbolic {
        return None;
    }
    let ansatz = AsymptoticAnsatz::new(model).ok()?;
    let k = (n_max + 1) / 2;
    let [_, delta, a, _] = ansatz.to_f64();
    Some(required_digits(2.0 * a * (k as f64).powf(delta)))
}

fn check_finite<R: Real>(v: &Cx<R>, required: u32, available: u32) -> Result<()> {
    if v.re.is_finite() && v.im.is_finite() {
        Ok(())
    } else {
        Err(Error::InsufficientPrecision {
            required,
            available,
        })
    }
}

/// Forward iteration from `seed = (u_{n_start-1}, u_{n_start})` to `u_{n_max}`.
pub fn forward_solve<R: Real>(
    model: &Model<R>,
    seed: &Vec2<R>,
    n_start: i64,
    n_max: i64,
) -> Result<SolutionTrace<R>> {
    if seed.is_zero() {
        return Err(Error::InvalidArgument("seed must be nonzero".into()));
    }
    if n_start < 1 || n_max < n_start {
        return Err(Error::InvalidArgument(format!(
            "forward solve needs 1 <= n_start <= n_max, got {n_start}, {n_max}"
        )));
    }
    let available = R::effective_digits(model.ctx());
    let required = recurrence_budget(model, n_max).unwrap_or(0);
    if available < required {
        return Err(Error::InsufficientPrecision {
            required,
            available,
        });
    }
    let lambda = c_real(model.lambda().clone());
    let mut values = Vec::with_capacity((n_max - n_start + 2) as usize);
    values.extend(seed.0.iter().cloned());
    let mut a_prev = model.weight(n_start - 1);
    for n in n_start..n_max {
        let a_n = model.weight(n);
        let i = values.len();
        let (u_prev, u_n) = (&values[i - 2], &values[i - 1]);
        let rhs = (lambda.clone() - c_real(model.diag(n))) * u_n.clone()
            - u_prev.clone() * a_prev.clone();
        let next = rhs / a_n.clone();
        check_finite(&next, required.max(available + 1), available)?;
        values.push(next);
        a_prev = a_n;
    }
    Ok(SolutionTrace::new(n_start - 1, values, "forward"))
}

/// Backward iteration from `seed = (u_{n_far}, u_{n_far+1})` down to `u_1`,
/// kept on `[1, n_stop + 1]` and divided by `u_{n_stop}`.
pub fn backward_solve_seeded<R: Real>(
    model: &Model<R>,
    n_far: i64,
    n_stop: i64,
    seed: &Vec2<R>,
) -> Result<SolutionTrace<R>> {
    if seed.is_zero() {
        return Err(Error::InvalidArgument("seed must be nonzero".into()));
    }
    if n_stop < 2 || n_far < n_stop + 2 {
        return Err(Error::InvalidArgument(format!(
            "backward solve needs 2 <= n_stop < n_far - 1, got n_stop={n_stop}, n_far={n_far}"
        )));
    }
    let available = R::effective_digits(model.ctx());
    let lambda = c_real(model.lambda().clone());
    // rev[i] = u_{n_far + 1 - i}
    let mut rev: Vec<Cx<R>> = Vec::with_capacity((n_far + 1) as usize);
    rev.push(seed.0[1].clone());
    rev.push(seed.0[0].clone());
    let mut a_n = model.weight(n_far);
    for n in (2..=n_far).rev() {
        let a_prev = model.weight(n - 1);
        let i = rev.len();
        let (u_next, u_n) = (&rev[i - 2], &rev[i - 1]);
        let rhs = (lambda.clone() - c_real(model.diag(n))) * u_n.clone()
            - u_next.clone() * a_n.clone();
        let prev = rhs / a_prev.clone();
        check_finite(&prev, available + 1, available)?;
        rev.push(prev);
        a_n = a_prev;
    }
    rev.reverse();
    // rev now holds u_1 ..= u_{n_far+1}
    rev.truncate((n_stop + 1) as usize);
    let pivot = rev[(n_stop - 1) as usize].clone();
    let pivot = if c_abs(&pivot).is_zero() {
        rev[(n_stop - 2) as usize].clone()
    } else {
        pivot
    };
    if c_abs(&pivot).is_zero() {
        return Err(Error::Singular { index: n_stop });
    }
    let values = rev.into_iter().map(|v| v / pivot.clone()).collect();
    Ok(SolutionTrace::new(1, values, "backward"))
}

/// Miller-type recovery of the subordinate solution with seed `(1, 0)`.
pub fn backward_solve<R: Real>(model: &Model<R>, n_far: i64, n_stop: i64) -> Result<SolutionTrace<R>> {
    let ctx = model.ctx();
    backward_solve_seeded(model, n_far, n_stop, &Vec2::e1(ctx))
}

/// `n_far = 4 n_stop`.
pub fn default_far_index(n_stop: i64) -> i64 {
    4 * n_stop
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoSeedCertificate {
    pub n_far: i64,
    pub n_stop: i64,
    /// `|sin|` of the angle between `(u_{n-1}, u_n)` of the two runs at `n_stop`.
    pub direction_gap: f64,
    pub passed: bool,
}

/// Backward solves from seeds `(1, 0)` and `(0, 1)`; their directions at
/// `n_stop` must agree to `1e-6`.
pub fn two_seed_certificate<R: Real>(model: &Model<R>, n_far: i64, n_stop: i64) -> Result<TwoSeedCertificate> {
    let ctx = model.ctx();
    let a = backward_solve_seeded(model, n_far, n_stop, &Vec2::e1(ctx))?;
    let b = backward_solve_seeded(model, n_far, n_stop, &Vec2::e2(ctx))?;
    let pair = |t: &SolutionTrace<R>| Vec2::new(t.u(n_stop - 1).unwrap().clone(), t.u(n_stop).unwrap().clone());
    let (va, vb) = (pair(&a), pair(&b));
    let gap = c_abs(&va.cross(&vb)) / (va.norm2() * vb.norm2());
    let gap = gap.to_f64();
    Ok(TwoSeedCertificate {
        n_far,
        n_stop,
        direction_gap: gap,
        passed: gap < 1e-6,
    })
}

/// `W_n = a_n (u_{n+1} v_n - u_n v_{n+1})`.
pub fn wronskian<R: Real>(
    model: &Model<R>,
    u: &SolutionTrace<R>,
    v: &SolutionTrace<R>,
    n: i64,
) -> Option<Cx<R>> {
    let (u0, u1) = (u.u(n)?, u.u(n + 1)?);
    let (v0, v1) = (v.u(n)?, v.u(n + 1)?);
    Some((u1.clone() * v0.clone() - u0.clone() * v1.clone()) * model.weight(n))
}

#[derive(Clone, Debug, Serialize)]
pub struct WronskianReport {
    pub first: i64,
    pub last: i64,
    /// `|W_first|`, as `log10`.
    pub log10_magnitude: f64,
    /// `max_n |W_n - W_first| / |W_first|`; zero when all `W_n` vanish.
    pub max_relative_drift: f64,
    pub identically_zero: bool,
    /// Drift must stay below `10^-(digits-15)`.
    pub tolerance_exponent: i32,
    pub passed: bool,
}

pub fn wronskian_drift<R: Real>(
    model: &Model<R>,
    u: &SolutionTrace<R>,
    v: &SolutionTrace<R>,
) -> Result<WronskianReport> {
    let first = u.first_index().max(v.first_index()).max(1);
    let last = u.last_index().min(v.last_index()) - 1;
    if last < first {
        return Err(Error::InvalidArgument(format!(
            "traces '{}' and '{}' do not overlap",
            u.label, v.label
        )));
    }
    let tol = R::effective_digits(model.ctx()) as i32 - 15;
    let w0 = wronskian(model, u, v, first).expect("overlap checked");
    let w0_abs = c_abs(&w0);
    let mut all_zero = w0_abs.is_zero();
    let mut max_dev = R::from_i64(0, model.ctx());
    for n in first + 1..=last {
        let w = wronskian(model, u, v, n).expect("overlap checked");
        let dev = c_abs(&(w.clone() - w0.clone()));
        if !c_abs(&w).is_zero() {
            all_zero = false;
        }
        if dev > max_dev {
            max_dev = dev;
        }
    }
    let (drift, passed) = if all_zero {
        (0.0, true)
    } else if w0_abs.is_zero() {
        (f64::INFINITY, false)
    } else {
        let rel = max_dev / w0_abs.clone();
        let passed = rel.is_zero() || rel.log10_abs_f64() < -f64::from(tol);
        (rel.to_f64(), passed)
    };
    Ok(WronskianReport {
        first,
        last,
        log10_magnitude: w0_abs.log10_abs_f64(),
        max_relative_drift: drift,
        identically_zero: all_zero,
        tolerance_exponent: tol,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport {
    pub branch: Branch,
    pub range: [i64; 2],
    /// `max |r_n / r_hi - 1|` over the range.
    pub envelope_drift: f64,
    /// `r_hi / r_lo - 1`.
    pub envelope_drift_signed: f64,
    pub envelope_passed: bool,
    /// `n^{alpha/2} u_{2n+1} / u_{2n}` at the top of the range.
    pub odd_even_ratio: f64,
    /// `+-sqrt(lambda/(2^alpha b)) (1 - alpha/2)`.
    pub odd_even_target: f64,
    pub odd_even_relative_error: f64,
    pub odd_even_passed: bool,
    /// `+-sqrt(lambda/(2^alpha b))`, the lower-row prefactor of the
    /// reassembled Step 4 product, reported for comparison.
    pub odd_even_step4_constant: f64,
    pub odd_even_step4_relative_error: f64,
    /// `(-1)^n u_{2n}` keeps one sign over the range.
    pub alternation_passed: bool,
    pub tolerance: f64,
    pub passed: bool,
}

/// `r_n = u_{2n} (-1)^n n^{alpha/4} e^{-+A n^delta}`.
pub fn envelope_ratio<R: Real>(
    trace: &SolutionTrace<R>,
    ansatz: &AsymptoticAnsatz<R>,
    model: &Model<R>,
    branch: Branch,
    n: i64,
) -> Option<Cx<R>> {
    let u = trace.even(n)?;
    let nn = model.int(n);
    let e = ansatz.a.clone() * nn.powf(&ansatz.delta) * model.int(-branch.sign());
    let scale = (-ansatz.gamma.clone() * nn.ln() + e).exp();
    let signed = if n % 2 == 0 { u.clone() } else { -u.clone() };
    Some(signed * scale)
}

pub fn envelope_check<R: Real>(
    trace: &SolutionTrace<R>,
    ansatz: &AsymptoticAnsatz<R>,
    model: &Model<R>,
    branch: Branch,
    lo: i64,
    hi: i64,
    tolerance: f64,
) -> Result<EnvelopeReport> {
    let (t_lo, t_hi) = trace.paired_range();
    if lo < 1 || lo >= hi || lo < t_lo || hi > t_hi {
        return Err(Error::InvalidArgument(format!(
            "envelope range [{lo}, {hi}] not covered by trace '{}' (paired indices [{t_lo}, {t_hi}])",
            trace.label
        )));
    }
    let ratio = |n| envelope_ratio(trace, ansatz, model, branch, n).expect("range checked");
    let r_hi = ratio(hi);
    let r_lo = ratio(lo);
    let one = c_real(model.int(1));
    let mut drift = model.int(0);
    let mut sign_ok = true;
    let positive = r_hi.re > model.int(0);
    for n in lo..=hi {
        let r = ratio(n);
        if (r.re > model.int(0)) != positive {
            sign_ok = false;
        }
        let d = c_abs(&(r / r_hi.clone() - one.clone()));
        if d > drift {
            drift = d;
        }
    }
    let signed = (r_hi.clone() / r_lo - one).re.to_f64();
    let drift = drift.to_f64();

    let half_alpha = model.alpha().clone() / model.int(2);
    let q = (trace.odd(hi).unwrap().clone() / trace.even(hi).unwrap().clone()).re.clone()
        * model.int(hi).powf(&half_alpha);
    let step4 = (model.lambda().clone() / (model.weight(2) * model.b().clone())).sqrt()
        * model.int(branch.sign());
    let theorem = step4.clone() * ansatz.delta.clone();
    let rel = |target: &R| ((q.clone() - target.clone()) / target.clone()).abs().to_f64();
    let odd_even_err = rel(&theorem);
    let step4_err = rel(&step4);
    let envelope_passed = drift < tolerance;
    let odd_even_passed = odd_even_err < tolerance;
    Ok(EnvelopeReport {
        branch,
        range: [lo, hi],
        envelope_drift: drift,
        envelope_drift_signed: signed,
        envelope_passed,
        odd_even_ratio: q.to_f64(),
        odd_even_target: theorem.to_f64(),
        odd_even_relative_error: odd_even_err,
        odd_even_passed,
        odd_even_step4_constant: step4.to_f64(),
        odd_even_step4_relative_error: step4_err,
        alternation_passed: sign_ok,
        tolerance,
        passed: envelope_passed && odd_even_passed && sign_ok,
    })
}

/// `|u_{2n} v_{2n}| n^{alpha/2}`.
pub fn envelope_product<R: Real>(
    model: &Model<R>,
    u: &SolutionTrace<R>,
    v: &SolutionTrace<R>,
    n: i64,
) -> Option<f64> {
    let p = c_abs(&(u.even(n)?.clone() * v.even(n)?.clone())) * model.weight(n).sqrt();
    Some(p.to_f64())
}

/// Relative distance between two traces on their common range.
pub fn max_relative_difference<R: Real>(u: &SolutionTrace<R>, v: &SolutionTrace<R>) -> Option<f64> {
    let first = u.first_index().max(v.first_index());
    let last = u.last_index().min(v.last_index());
    if last < first {
        return None;
    }
    let mut worst = f64::NEG_INFINITY;
    for n in first..=last {
        let (a, b) = (u.u(n)?, v.u(n)?);
        let scale = c_abs(a);
        if scale.is_zero() {
            continue;
        }
        let d = (c_abs(&(a.clone() - b.clone())) / scale).log10_abs_f64();
        worst = worst.max(d);
    }
    Some(10f64.powf(worst))
}

#[derive(Clone, Debug)]
pub struct TraceRow {
    pub n: i64,
    pub even: [String; 2],
    pub odd: [String; 2],
    pub envelope_ratio: Option<String>,
    pub wronskian_drift: Option<String>,
}

/// Rows for paired indices `n` where `u_{2n}` and `u_{2n+1}` are known.
/// `envelope` adds `r_n`; `partner` adds `|W_{2n} - W_ref| / |W_ref|`.
pub fn trace_rows<R: Real>(
    model: &Model<R>,
    trace: &SolutionTrace<R>,
    envelope: Option<(&AsymptoticAnsatz<R>, Branch)>,
    partner: Option<&SolutionTrace<R>>,
    sig: usize,
) -> Vec<TraceRow> {
    let (lo, hi) = trace.paired_range();
    let w_ref = partner.and_then(|p| {
        let first = trace.first_index().max(p.first_index()).max(1);
        wronskian(model, trace, p, first)
    });
    let fmt = |x: &R| x.to_sci_string(sig);
    (lo.max(1)..=hi)
        .map(|n| {
            let e = trace.even(n).unwrap();
            let o = trace.odd(n).unwrap();
            let env = envelope.and_then(|(a, b)| envelope_ratio(trace, a, model, b, n));
            let drift = match (partner, &w_ref) {
                (Some(p), Some(w0)) if !c_abs(w0).is_zero() => wronskian(model, trace, p, 2 * n)
                    .map(|w| c_abs(&(w - w0.clone())) / c_abs(w0)),
                _ => None,
            };
            TraceRow {
                n,
                even: [fmt(&e.re), fmt(&e.im)],
                odd: [fmt(&o.re), fmt(&o.im)],
                envelope_ratio: env.map(|r| fmt(&r.re)),
                wronskian_drift: drift.map(|d| d.to_sci_string(6)),
            }
        })
        .collect()
}

pub const TRACE_COLUMNS: [&str; 7] = [
    "n",
    "re(u_even)",
    "im(u_even)",
    "re(u_odd)",
    "im(u_odd)",
    "envelope_ratio",
    "wronskian_drift",
];

pub fn write_trace_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.even[0].clone(),
            r.even[1].clone(),
            r.odd[0].clone(),
            r.odd[1].clone(),
            r.envelope_ratio.clone().unwrap_or_default(),
            r.wronskian_drift.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::scalar::{Mpf, PrecisionContext};

    fn model(lambda: &str, digits: u32) -> Model<Mpf> {
        let ctx = PrecisionContext::new(digits).unwrap();
        Model::new(ModelParams::parse("0.8", "1", lambda, &ctx).unwrap(), ctx).unwrap()
    }

    #[test]
    fn forward_residual() {
        let m = model("1", 60);
        let ctx = *m.ctx();
        let t = forward_solve(&m, &Vec2::e2(&ctx), 1, 300).unwrap();
        assert_eq!((t.first_index(), t.last_index()), (0, 300));
        for n in 1..300 {
            let terms = [
                m.weight(n - 1) * t.u(n - 1).unwrap().re.clone(),
                m.diag(n) * t.u(n).unwrap().re.clone(),
                m.weight(n) * t.u(n + 1).unwrap().re.clone(),
                -(m.lambda().clone() * t.u(n).unwrap().re.clone()),
            ];
            let scale = terms.iter().map(|x| x.abs()).fold(m.int(0), |a, b| if b > a { b } else { a });
            let sum = terms.into_iter().fold(m.int(0), |a, b| a + b);
            assert!((sum / scale).abs() < Mpf::tolerance(10, &ctx), "n={n}");
        }
    }

    #[test]
    fn degenerate_lambda_still_runs() {
        let m = model("0", 40);
        let t = forward_solve(&m, &Vec2::e2(m.ctx()), 1, 100).unwrap();
        assert_eq!(t.len(), 101);
    }

    #[test]
    fn budget_is_enforced() {
        let m = model("1", 40);
        let r = forward_solve(&m, &Vec2::e2(m.ctx()), 1, 4000);
        assert!(matches!(r, Err(Error::InsufficientPrecision { required: 135, .. })));
        assert!(forward_solve(&m, &Vec2::real(m.int(0), m.int(0)), 1, 10).is_err());
    }

    #[test]
    fn wronskian_identities() {
        let m = model("1", 60);
        let ctx = *m.ctx();
        let f = forward_solve(&m, &Vec2::e2(&ctx), 1, 400).unwrap();
        let b = backward_solve(&m, 1600, 400).unwrap();
        let same = wronskian_drift(&m, &f, &f).unwrap();
        assert!(same.identically_zero && same.passed);
        assert!(wronskian(&m, &f, &f, 10).unwrap().re.to_f64() == 0.0);
        let pair = wronskian_drift(&m, &f, &b).unwrap();
        assert!(!pair.identically_zero);
        assert!(pair.passed, "{pair:?}");
    }

    #[test]
    fn miller_two_seed_agreement() {
        let m = model("1", 40);
        let c = two_seed_certificate(&m, 800, 200).unwrap();
        assert!(c.passed, "{c:?}");
    }

    #[test]
    fn csv_layout() {
        let m = model("1", 40);
        let f = forward_solve(&m, &Vec2::e2(m.ctx()), 1, 21).unwrap();
        let rows = trace_rows(&m, &f, None, None, 8);
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,re(u_even),im(u_even),re(u_odd),im(u_odd),envelope_ratio,wronskian_drift"
        );
        assert_eq!(lines.count(), 10);
    }
}
