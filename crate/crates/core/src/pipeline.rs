//! Similarity transforms that reduce the paired system `y_{k+1} = M_k y_k` to
//! a perturbed diagonal system, and numerical certification of the claimed
//! remainder estimates.
//!
//! Stages: `N_n = T_{n+1} M_n T_n^-1`, `K_n = S_{n+1}^-1 N_n S_n`,
//! `L_n = X_{n+1}^-1 K_n X_n`. `K_n` carries entries of size `e^{2An^delta}`;
//! everything downstream works with the anchored matrices
//! `S^_m = S_m diag(e^{An^delta}, e^{-An^delta})`, for which
//! `S^_{n+1}^-1 N_n S^_n = X_n^-1 K_n X_n` exactly, so only moderate
//! precision is needed. The raw route is kept behind an exponent-budget check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{geometric_grid, power_fit};
use crate::mat2::{c_abs, c_real, chrono_product, Cx, Mat2, Vec2};
use crate::model::Model;
use crate::recurrence::SolutionTrace;
use crate::scalar::{required_digits, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        }
    }
}

/// Exponents of `z_n^{+-} = n^gamma e^{+-A n^delta}`.
#[derive(Clone, Debug)]
pub struct AsymptoticAnsatz<R: Real> {
    pub gamma: R,
    pub delta: R,
    pub a: R,
    pub b: R,
}

impl<R: Real> AsymptoticAnsatz<R> {
    /// `gamma = -alpha/4`, `delta = 1 - alpha/2`, `B = sqrt(b lambda / 2^alpha)`,
    /// `A = B/delta`.
    pub fn new(model: &Model<R>) -> Result<Self> {
        let bl = model.b().clone() * model.lambda().clone();
        if bl <= model.int(0) {
            return Err(Error::AnsatzUndefined);
        }
        let alpha = model.alpha().clone();
        let gamma = -(alpha.clone() / model.int(4));
        let delta = model.int(1) - alpha / model.int(2);
        let b = (bl / model.weight(2)).sqrt();
        let a = b.clone() / delta.clone();
        Ok(Self { gamma, delta, a, b })
    }

    pub fn to_f64(&self) -> [f64; 4] {
        [
            self.gamma.to_f64(),
            self.delta.to_f64(),
            self.a.to_f64(),
            self.b.to_f64(),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct CommutatorSolution<R: Real> {
    pub x1: Cx<R>,
    pub x2: Cx<R>,
    pub x: Mat2<R>,
}

/// Solves `[X, N] = [[f1, f2], [x1, x2]]` for `N = [[0, 1], [-1, 2]]`.
///
/// In the coordinates `Y = L X R` with `L = [[1, 0], [-1, 1]]`,
/// `R = [[1, 0], [1, 1]]` the commutator with the Jordan block is triangular;
/// the kernel `c1 I + c2 [[0, 1], [0, 0]]` there is fixed to zero.
pub fn commutator_solve<R: Real>(f1: Cx<R>, f2: Cx<R>, ctx: &crate::PrecisionContext) -> CommutatorSolution<R> {
    let two = c_real(R::from_i64(2, ctx));
    let x1 = two * f1.clone() + f2.clone();
    let x2 = -f1.clone();
    let zero = c_real(R::from_i64(0, ctx));
    let y = Mat2::new(f2.clone(), zero.clone(), -(f1 + f2), zero);
    let l = Mat2::from_i64([[1, 0], [-1, 1]], ctx);
    let r = Mat2::from_i64([[1, 0], [1, 1]], ctx);
    let x = &(&r * &y) * &l;
    CommutatorSolution { x1, x2, x }
}

/// `N = [[0, 1], [-1, 2]]`.
pub fn jordan_target<R: Real>(ctx: &crate::PrecisionContext) -> Mat2<R> {
    Mat2::from_i64([[0, 1], [-1, 2]], ctx)
}

/// `T = [[1, -b], [1, 0]]`.
pub fn t_leading<R: Real>(model: &Model<R>) -> Mat2<R> {
    Mat2::real(model.int(1), -model.b().clone(), model.int(1), model.int(0))
}

/// `T^(1) = [[b + 1/(2b), 0], [1/(2b), -1/2]]`.
pub fn t_first<R: Real>(model: &Model<R>) -> Mat2<R> {
    let inv2b = model.int(1) / (model.int(2) * model.b().clone());
    Mat2::real(
        model.b().clone() + inv2b.clone(),
        model.int(0),
        inv2b,
        model.ratio(-1, 2),
    )
}

/// `T^(2) = [[0, 0], [-1, b]]`.
pub fn t_second<R: Real>(model: &Model<R>) -> Mat2<R> {
    Mat2::real(model.int(0), model.int(0), model.int(-1), model.b().clone())
}

/// `T_n = (-1)^n [T + lambda (2n)^-alpha T^(1) + (alpha/2n) T^(2)]`.
pub fn step1_t<R: Real>(model: &Model<R>, n: i64) -> Mat2<R> {
    let s1 = model.lambda().clone() / model.weight(2 * n);
    let s2 = model.alpha().clone() / model.int(2 * n);
    let t = t_leading(model) + t_first(model).scale_real(&s1) + t_second(model).scale_real(&s2);
    if n % 2 == 0 {
        t
    } else {
        -t
    }
}

/// Smallest `n >= 1` with `|det T_n| > 1e-6 ||T_n||^2`, searched up to `limit`.
pub fn t_threshold<R: Real>(model: &Model<R>, limit: i64) -> Option<i64> {
    let margin = R::from_f64(1e-6, model.ctx());
    (1..=limit).find(|&n| {
        let t = step1_t(model, n);
        let norm = t.norm();
        c_abs(&t.det()) > margin.clone() * norm.clone() * norm
    })
}

/// `N_n = T_{n+1} M_n T_n^-1`.
pub fn step1_n<R: Real>(model: &Model<R>, n: i64) -> Result<Mat2<R>> {
    let t_inv = step1_t(model, n).inverse_at(n, model.ctx())?;
    Ok(&(&step1_t(model, n + 1) * &model.paired(n)) * &t_inv)
}

/// `N + b lambda (2n)^-alpha E22 + (alpha/n) [[0, 0], [1, -1]]`.
pub fn step1_n_expansion<R: Real>(model: &Model<R>, n: i64) -> Mat2<R> {
    let e = model.b().clone() * model.lambda().clone() / model.weight(2 * n);
    let s = model.alpha().clone() / model.int(n);
    jordan_target(model.ctx())
        + Mat2::real(model.int(0), model.int(0), s.clone(), -s + e)
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineStage {
    pub stage_name: &'static str,
    pub certified_residual_exponent: f64,
    pub threshold: f64,
    /// Per-entry exponents `[(1,1), (1,2), (2,1), (2,2)]` where fitted.
    pub entry_exponents: Option<[f64; 4]>,
    pub range: [i64; 2],
    pub points: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RouteCheck {
    pub first: i64,
    pub last: i64,
    pub relative_error: f64,
    pub tolerance_digits: i32,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct Step4Result<R: Real> {
    pub n0: i64,
    /// Seeded with `e2` in the `L` coordinates.
    pub dominant: SolutionTrace<R>,
    /// Seeded with `e1` in the `L` coordinates.
    pub secondary: SolutionTrace<R>,
    /// Indices where `T_n` was found singular, forcing a later start.
    pub skipped_singular: Vec<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrefactorCheck {
    pub n: i64,
    /// `n^{alpha/2} P21/P11` (minus column), expected `-A delta/b`.
    pub minus_ratio: f64,
    /// `n^{alpha/2} P22/P12` (plus column), expected `+A delta/b`.
    pub plus_ratio: f64,
    pub expected: f64,
}

/// Steps 2-4 for a hyperbolic parameter point.
#[derive(Clone, Debug)]
pub struct Pipeline<R: Real> {
    pub model: Model<R>,
    pub ansatz: AsymptoticAnsatz<R>,
}

impl<R: Real> Pipeline<R> {
    pub fn new(model: Model<R>) -> Result<Self> {
        let ansatz = AsymptoticAnsatz::new(&model)?;
        Ok(Self { model, ansatz })
    }

    fn int(&self, n: i64) -> R {
        self.model.int(n)
    }

    /// `n^delta`.
    pub fn pow_delta(&self, n: i64) -> R {
        self.int(n).powf(&self.ansatz.delta)
    }

    /// `n^gamma`.
    pub fn pow_gamma(&self, n: i64) -> R {
        self.int(n).powf(&self.ansatz.gamma)
    }

    /// `F1 = -2 - B^2/n^alpha + alpha/n`, `F2 = 1 - alpha/n`.
    pub fn f_coeffs(&self, n: i64) -> (R, R) {
        let b2 = self.ansatz.b.clone() * self.ansatz.b.clone();
        let s = self.model.alpha().clone() / self.int(n);
        let f1 = self.int(-2) - b2 / self.model.weight(n) + s.clone();
        let f2 = self.int(1) - s;
        (f1, f2)
    }

    /// `z_n = n^gamma e^{+-A n^delta}`.
    pub fn approx_solution(&self, n: i64, branch: Branch) -> R {
        let e = self.ansatz.a.clone() * self.pow_delta(n) * self.int(branch.sign());
        self.pow_gamma(n) * e.exp()
    }

    /// `z_m e^{-+A n^delta}` for anchor `n`: the ansatz with the exponential
    /// scale of index `n` divided out.
    pub fn zeta(&self, m: i64, branch: Branch, anchor: i64) -> R {
        let d = self.pow_delta(m) - self.pow_delta(anchor);
        let e = self.ansatz.a.clone() * d * self.int(branch.sign());
        self.pow_gamma(m) * e.exp()
    }

    /// `|z_{n+1} + F1 z_n + F2 z_{n-1}| / |z_n|`.
    pub fn ansatz_residual(&self, n: i64, branch: Branch) -> R {
        let (f1, f2) = self.f_coeffs(n);
        let z = |m| self.zeta(m, branch, n);
        let zn = z(n);
        ((z(n + 1) + f1 * zn.clone() + f2 * z(n - 1)) / zn).abs()
    }

    /// Requires enough digits to resolve `e^{2A n^delta}`.
    pub fn check_budget(&self, n: i64) -> Result<()> {
        let required = self.budget_digits(n);
        let available = R::effective_digits(self.model.ctx());
        if available < required {
            return Err(Error::InsufficientPrecision {
                required,
                available,
            });
        }
        Ok(())
    }

    /// `ceil(2 A n^delta log10 e) + 30`.
    pub fn budget_digits(&self, n: i64) -> u32 {
        let a = self.ansatz.a.to_f64();
        let d = self.ansatz.delta.to_f64();
        required_digits(2.0 * a * (n as f64).powf(d))
    }

    /// `S_n = [[z-_{n-1}, z+_{n-1}], [z-_n, z+_n]]`.
    pub fn step2_s(&self, n: i64) -> Result<Mat2<R>> {
        self.check_budget(n)?;
        let z = |m, b| self.approx_solution(m, b);
        Ok(Mat2::real(
            z(n - 1, Branch::Minus),
            z(n - 1, Branch::Plus),
            z(n, Branch::Minus),
            z(n, Branch::Plus),
        ))
    }

    /// `S_m` with the ansatz anchored at `anchor`.
    pub fn s_anchored(&self, m: i64, anchor: i64) -> Mat2<R> {
        let z = |k, b| self.zeta(k, b, anchor);
        Mat2::real(
            z(m - 1, Branch::Minus),
            z(m - 1, Branch::Plus),
            z(m, Branch::Minus),
            z(m, Branch::Plus),
        )
    }

    /// `det S_n`; the anchoring factors cancel in the determinant.
    pub fn det_s(&self, n: i64) -> R {
        self.s_anchored(n, n).det().re
    }

    /// `det S_{n+1} n^alpha / (2 A delta)`.
    pub fn det_ratio(&self, n: i64) -> R {
        let two_ad = self.int(2) * self.ansatz.a.clone() * self.ansatz.delta.clone();
        self.det_s(n + 1) * self.model.weight(n) / two_ad
    }

    /// `K_n = S_{n+1}^-1 N_n S_n`, guarded by the exponent budget.
    pub fn step2_k_raw(&self, n: i64) -> Result<Mat2<R>> {
        self.check_budget(n + 1)?;
        let s_next_inv = self.step2_s(n + 1)?.inverse_at(n + 1, self.model.ctx())?;
        Ok(&(&s_next_inv * &step1_n(&self.model, n)?) * &self.step2_s(n)?)
    }

    /// `X_n^-1 K_n X_n`, computed without exponentially large entries.
    pub fn step2_k_scaled(&self, n: i64) -> Result<Mat2<R>> {
        let s_next_inv = self
            .s_anchored(n + 1, n)
            .inverse_at(n + 1, self.model.ctx())?;
        Ok(&(&s_next_inv * &step1_n(&self.model, n)?) * &self.s_anchored(n, n))
    }

    /// `e^{2A(n^delta - (n+1)^delta)}`.
    pub fn l_decay(&self, n: i64) -> R {
        let d = self.pow_delta(n) - self.pow_delta(n + 1);
        (self.int(2) * self.ansatz.a.clone() * d).exp()
    }

    /// `diag(e^{2A(n^delta - (n+1)^delta)}, 1)`.
    pub fn l_main(&self, n: i64) -> Mat2<R> {
        Mat2::diag(c_real(self.l_decay(n)), c_real(self.int(1)))
    }

    /// `L_n = X_{n+1}^-1 K_n X_n = diag(e^{2A(n^delta-(n+1)^delta)}, 1) X_n^-1 K_n X_n`.
    pub fn step3_l(&self, n: i64) -> Result<Mat2<R>> {
        Ok(&self.l_main(n) * &self.step2_k_scaled(n)?)
    }

    /// `L_n` through the raw `K_n` and `X_n = diag(e^{2A n^delta}, 1)`.
    pub fn step3_l_raw(&self, n: i64) -> Result<Mat2<R>> {
        self.check_budget(n + 1)?;
        let k = self.step2_k_raw(n)?;
        let x = |m: i64| {
            let e = (self.int(2) * self.ansatz.a.clone() * self.pow_delta(m)).exp();
            Mat2::diag(c_real(e), c_real(self.int(1)))
        };
        let x_next_inv = x(n + 1).inverse_at(n + 1, self.model.ctx())?;
        Ok(&(&x_next_inv * &k) * &x(n))
    }

    /// `p_n = 2 A delta / n^{alpha/2}`.
    pub fn p(&self, n: i64) -> R {
        let half_alpha = self.model.alpha().clone() / self.int(2);
        self.int(2) * self.ansatz.a.clone() * self.ansatz.delta.clone()
            / self.int(n).powf(&half_alpha)
    }

    #[allow(clippy::too_many_arguments)]
    fn stage(
        &self,
        name: &'static str,
        threshold: f64,
        lo: i64,
        hi: i64,
        ns: &[i64],
        ys: &[f64],
        entries: Option<[f64; 4]>,
    ) -> PipelineStage {
        let fit = power_fit(ns, ys);
        let exponent = match entries {
            Some(e) => e.iter().copied().fold(fit.exponent, f64::max),
            None => fit.exponent,
        };
        PipelineStage {
            stage_name: name,
            certified_residual_exponent: exponent,
            threshold,
            entry_exponents: entries,
            range: [lo, hi],
            points: fit.points,
            passed: exponent <= threshold,
        }
    }

    fn two_alpha_threshold(&self) -> f64 {
        -2.0 * self.model.alpha().to_f64() + 0.1
    }

    fn three_halves_threshold(&self) -> f64 {
        -1.5 * self.model.alpha().to_f64() + 0.1
    }

    /// `|| M_n - expansion ||`, slope bound `-2 alpha + 0.1`.
    pub fn certify_m(&self, lo: i64, hi: i64) -> PipelineStage {
        let fit = self.model.paired_residual_fit(lo, hi);
        PipelineStage {
            stage_name: "M",
            certified_residual_exponent: fit.exponent,
            threshold: self.two_alpha_threshold(),
            entry_exponents: None,
            range: [lo, hi],
            points: fit.points,
            passed: fit.exponent <= self.two_alpha_threshold(),
        }
    }

    /// `|| N_n - expansion ||`, slope bound `-2 alpha + 0.1`.
    pub fn certify_n(&self, lo: i64, hi: i64) -> Result<PipelineStage> {
        let ns = geometric_grid(lo, hi, 20);
        let ys = ns
            .iter()
            .map(|&n| {
                Ok((step1_n(&self.model, n)? - step1_n_expansion(&self.model, n))
                    .norm()
                    .ln_abs_f64())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.stage("N", self.two_alpha_threshold(), lo, hi, &ns, &ys, None))
    }

    /// Ansatz residual for the `+` branch, slope bound `-2 alpha + 0.1`.
    pub fn certify_ansatz(&self, lo: i64, hi: i64) -> PipelineStage {
        let ns = geometric_grid(lo, hi, 20);
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n| self.ansatz_residual(n, Branch::Plus).ln_abs_f64())
            .collect();
        self.stage("ansatz", self.two_alpha_threshold(), lo, hi, &ns, &ys, None)
    }

    fn entry_fit<F>(&self, ns: &[i64], f: F) -> Result<([f64; 4], Vec<f64>)>
    where
        F: Fn(i64) -> Result<Mat2<R>>,
    {
        let mats = ns.iter().map(|&n| f(n)).collect::<Result<Vec<_>>>()?;
        let mut exps = [0.0; 4];
        for (slot, (i, j)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            let ys: Vec<f64> = mats.iter().map(|m| c_abs(m.get(i, j)).ln_abs_f64()).collect();
            exps[slot] = power_fit(ns, &ys).exponent;
        }
        let norms = mats.iter().map(|m| m.norm().ln_abs_f64()).collect();
        Ok((exps, norms))
    }

    /// Entry families of `X_n^-1 K_n X_n - I`, slope bound `-3 alpha/2 + 0.1`.
    pub fn certify_k(&self, lo: i64, hi: i64) -> Result<PipelineStage> {
        let ns = geometric_grid(lo, hi, 20);
        let id = Mat2::identity(self.model.ctx());
        let (exps, norms) = self.entry_fit(&ns, |n| Ok(self.step2_k_scaled(n)? - id.clone()))?;
        Ok(self.stage("K", self.three_halves_threshold(), lo, hi, &ns, &norms, Some(exps)))
    }

    /// `L_n - diag(e^{2A(n^delta-(n+1)^delta)}, 1)`, slope bound `-3 alpha/2 + 0.1`.
    pub fn certify_l(&self, lo: i64, hi: i64) -> Result<PipelineStage> {
        let ns = geometric_grid(lo, hi, 20);
        let (exps, norms) = self.entry_fit(&ns, |n| Ok(self.step3_l(n)? - self.l_main(n)))?;
        Ok(self.stage("L", self.three_halves_threshold(), lo, hi, &ns, &norms, Some(exps)))
    }

    /// Start index for Step 4: `T_n` and `S_n` are usable from here on.
    pub fn default_n0(&self) -> i64 {
        t_threshold(&self.model, 1000).unwrap_or(2).max(2)
    }

    /// `S_m X_m = e^{A m^delta} S^_m` (anchored at `m`).
    fn sx(&self, m: i64) -> (R, Mat2<R>) {
        (
            self.ansatz.a.clone() * self.pow_delta(m),
            self.s_anchored(m, m),
        )
    }

    /// `prod_{k=n0}^{n0+steps-1} M_k` directly and through
    /// `T_{k+1}^-1 S_{k+1} X_{k+1} L_k X_k^-1 S_k^-1 T_k`.
    pub fn route_check(&self, n0: i64, steps: i64) -> Result<RouteCheck> {
        let ctx = self.model.ctx();
        let last = n0 + steps - 1;
        let direct = chrono_product(|k| self.model.paired(k), n0, last, ctx)?;
        let mut l_prod = Mat2::identity(ctx);
        for k in n0..=last {
            l_prod = &self.step3_l(k)? * &l_prod;
        }
        let (e_hi, s_hi) = self.sx(last + 1);
        let (e_lo, s_lo) = self.sx(n0);
        let t_hi_inv = step1_t(&self.model, last + 1).inverse_at(last + 1, ctx)?;
        let s_lo_inv = s_lo.inverse_at(n0, ctx)?;
        let scale = (e_hi - e_lo).exp();
        let factored = (&(&(&t_hi_inv * &s_hi) * &l_prod) * &(&s_lo_inv * &step1_t(&self.model, n0)))
            .scale_real(&scale);
        let err = (direct.clone() - factored).norm() / direct.norm();
        let digits = R::effective_digits(ctx) as i32 - 15;
        let rel = err.to_f64();
        Ok(RouteCheck {
            first: n0,
            last,
            relative_error: rel,
            tolerance_digits: digits,
            passed: err.log10_abs_f64() < -f64::from(digits),
        })
    }

    /// `P_n = T_n^-1 S^_n` and its lower/upper row ratios.
    pub fn prefactor_check(&self, n: i64) -> Result<PrefactorCheck> {
        let p = &step1_t(&self.model, n).inverse_at(n, self.model.ctx())? * &self.s_anchored(n, n);
        let scale = self.model.weight(n).sqrt();
        let ratio = |i: usize| (p.get(1, i).clone() / p.get(0, i).clone()).re.clone() * scale.clone();
        let expected = self.ansatz.a.clone() * self.ansatz.delta.clone() / self.model.b().clone();
        Ok(PrefactorCheck {
            n,
            minus_ratio: ratio(0).to_f64(),
            plus_ratio: ratio(1).to_f64(),
            expected: expected.to_f64(),
        })
    }

    /// Two solutions of the paired system rebuilt from the `L` system:
    /// `y_k = T_k^-1 S_k X_k w_k`, `w_{k+1} = L_k w_k`, with `w_{n0} = e2`
    /// (dominant) and `w_{n0} = e1`. Trace values are `u_{2k-2}, u_{2k-1}`
    /// for `k = n0..=n_max+1`.
    pub fn step4_reassemble(&self, n0: Option<i64>, n_max: i64) -> Result<Step4Result<R>> {
        let mut start = n0.unwrap_or_else(|| self.default_n0()).max(2);
        let mut skipped = Vec::new();
        loop {
            if start >= n_max {
                return Err(Error::NZeroTooSmall(format!(
                    "no nonsingular start below n_max = {n_max}"
                )));
            }
            match self.reassemble_from(start, n_max) {
                Ok((dominant, secondary)) => {
                    return Ok(Step4Result {
                        n0: start,
                        dominant,
                        secondary,
                        skipped_singular: skipped,
                    })
                }
                Err(Error::Singular { index }) => {
                    skipped.push(index);
                    start = index + 1;
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn reassemble_from(&self, n0: i64, n_max: i64) -> Result<(SolutionTrace<R>, SolutionTrace<R>)> {
        let ctx = self.model.ctx();
        let mut w = [Vec2::e2(ctx), Vec2::e1(ctx)];
        let mut values: [Vec<Cx<R>>; 2] = [Vec::new(), Vec::new()];
        for k in n0..=n_max + 1 {
            let t_inv = step1_t(&self.model, k).inverse_at(k, ctx)?;
            let (e, s) = self.sx(k);
            let p = (&t_inv * &s).scale_real(&e.exp());
            for (slot, wk) in w.iter().enumerate() {
                let y = p.apply(wk);
                values[slot].extend(y.0);
            }
            if k <= n_max {
                let l = self.step3_l(k)?;
                w = [l.apply(&w[0]), l.apply(&w[1])];
            }
        }
        let [dom, sec] = values;
        Ok((
            SolutionTrace::new(2 * n0 - 2, dom, "step4-dominant"),
            SolutionTrace::new(2 * n0 - 2, sec, "step4-secondary"),
        ))
    }
}
