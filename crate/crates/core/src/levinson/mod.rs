//! Asymptotic basis for `x_{n+1} = (I + p_n V_n + R_n) x_n` with `p_n -> 0`,
//! `sum p_n = inf`, `R` summable and `V` of bounded variation.
//!
//! The larger solution of the simple system `I - diag(p_n, 0) + R_n` is built
//! by variation of parameters; general `V_n` is first diagonalized pointwise
//! and reduced to that form. The smaller solution in the hyperbolic case is
//! recovered by backward iteration of the original system.

mod spec_json;

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{c_abs, c_real, c_sqrt, Cx, Mat2, Vec2};
use crate::scalar::{PrecisionContext, Real};

pub use spec_json::{parse_system_spec, SPEC_SCHEMA};

pub type Sampler<T> = Arc<dyn Fn(i64) -> T + Send + Sync>;

#[derive(Clone)]
pub struct SystemSpec<R: Real> {
    pub name: String,
    pub p: Sampler<R>,
    pub v: Sampler<Mat2<R>>,
    pub r: Sampler<Mat2<R>>,
    pub start_index: i64,
    pub ctx: PrecisionContext,
}

impl<R: Real> std::fmt::Debug for SystemSpec<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemSpec")
            .field("name", &self.name)
            .field("start_index", &self.start_index)
            .finish_non_exhaustive()
    }
}

impl<R: Real> SystemSpec<R> {
    pub fn new<P, V, Q>(name: &str, p: P, v: V, r: Q, start_index: i64, ctx: PrecisionContext) -> Self
    where
        P: Fn(i64) -> R + Send + Sync + 'static,
        V: Fn(i64) -> Mat2<R> + Send + Sync + 'static,
        Q: Fn(i64) -> Mat2<R> + Send + Sync + 'static,
    {
        Self {
            name: name.to_string(),
            p: Arc::new(p),
            v: Arc::new(v),
            r: Arc::new(r),
            start_index,
            ctx,
        }
    }

    /// `I + p_n V_n + R_n`.
    pub fn step_matrix(&self, n: i64) -> Mat2<R> {
        Mat2::identity(&self.ctx) + (self.v)(n).scale_real(&(self.p)(n)) + (self.r)(n)
    }

    /// First index `>= from` with `0 < p_n < 1`.
    pub fn contraction_start(&self, from: i64, limit: i64) -> Option<i64> {
        let zero = R::from_i64(0, &self.ctx);
        let one = R::from_i64(1, &self.ctx);
        (from.max(self.start_index)..=limit).find(|&n| {
            let p = (self.p)(n);
            p > zero && p < one
        })
    }
}

/// A vector-valued solution on a contiguous index range.
#[derive(Clone, Debug)]
pub struct VectorTrace<R: Real> {
    pub first_index: i64,
    pub values: Vec<Vec2<R>>,
}

impl<R: Real> VectorTrace<R> {
    pub fn at(&self, n: i64) -> Option<&Vec2<R>> {
        usize::try_from(n - self.first_index)
            .ok()
            .and_then(|i| self.values.get(i))
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.values.len() as i64 - 1
    }

    pub fn last(&self) -> &Vec2<R> {
        self.values.last().expect("trace is never empty")
    }
}

/// Eigenvalues of a 2x2 matrix ordered by real part, then imaginary part.
pub fn ordered_eigenvalues<R: Real>(m: &Mat2<R>) -> [Cx<R>; 2] {
    let two = R::one() + R::one();
    let root = c_sqrt(&m.discriminant());
    let tr = m.trace();
    let a = (tr.clone() - root.clone()) / two.clone();
    let b = (tr + root) / two;
    let key = |z: &Cx<R>| (z.re.clone(), z.im.clone());
    let (ka, kb) = (key(&a), key(&b));
    let swap = kb.0 < ka.0 || (kb.0 == ka.0 && kb.1 < ka.1);
    if swap {
        [b, a]
    } else {
        [a, b]
    }
}

/// Unit 2-norm eigenvector for `mu` with its first nonzero component real
/// and positive.
pub fn eigenvector<R: Real>(m: &Mat2<R>, mu: &Cx<R>, ctx: &PrecisionContext) -> Vec2<R> {
    let [[a, b], [c, d]] = &m.0;
    let v1 = Vec2::new(b.clone(), mu.clone() - a.clone());
    let v2 = Vec2::new(mu.clone() - d.clone(), c.clone());
    let v = if v1.norm2() >= v2.norm2() { v1 } else { v2 };
    normalize_direction(&v, ctx)
}

pub fn normalize_direction<R: Real>(v: &Vec2<R>, ctx: &PrecisionContext) -> Vec2<R> {
    let norm = v.norm2();
    if norm.is_zero() {
        return v.clone();
    }
    let tiny = R::tolerance(10, ctx) * norm.clone();
    let lead = if c_abs(v.x()) > tiny { v.x() } else { v.y() };
    // multiply by conj(lead)/|lead| / norm
    let phase = lead.conj() / c_real(c_abs(lead) * norm);
    v.scale(&phase)
}

#[derive(Clone, Debug)]
pub struct Diagonalization<R: Real> {
    /// First index where the eigenvalues are well separated.
    pub threshold: i64,
    pub t: Vec<Mat2<R>>,
    pub mu1: Vec<Cx<R>>,
    pub mu2: Vec<Cx<R>>,
    /// `sum ||T_{n+1} - T_n||` from the threshold.
    pub t_variation: f64,
}

impl<R: Real> Diagonalization<R> {
    fn idx(&self, n: i64) -> usize {
        usize::try_from(n - self.threshold).expect("index below diagonalization threshold")
    }

    pub fn t_at(&self, n: i64) -> &Mat2<R> {
        &self.t[self.idx(n)]
    }

    pub fn mu(&self, n: i64) -> [&Cx<R>; 2] {
        let i = self.idx(n);
        [&self.mu1[i], &self.mu2[i]]
    }

    pub fn last_index(&self) -> i64 {
        self.threshold + self.t.len() as i64 - 1
    }

    /// `sum_{n >= from} ||T_{n+1} - T_n||` within the computed range.
    pub fn variation_tail(&self, from: i64) -> R {
        let start = self.idx(from.max(self.threshold));
        self.t[start..]
            .windows(2)
            .map(|w| (w[1].clone() - w[0].clone()).norm())
            .fold(R::zero(), |a, b| a + b)
    }
}

/// Pointwise eigendecomposition `V_n = T_n diag(mu1(n), mu2(n)) T_n^-1` on
/// `[threshold, n_max]`, with labels continued from the ordering at `n_max`.
pub fn d1_diagonalize<R, F>(v: F, start: i64, n_max: i64, ctx: &PrecisionContext) -> Result<Diagonalization<R>>
where
    R: Real,
    F: Fn(i64) -> Mat2<R>,
{
    if n_max <= start {
        return Err(Error::InvalidArgument(format!(
            "diagonalization range [{start}, {n_max}] is empty"
        )));
    }
    let top = v(n_max);
    let limit_discr = c_abs(&top.discriminant());
    if limit_discr <= R::tolerance(10, ctx) * (R::one() + top.norm() * top.norm()) {
        return Err(Error::DegenerateDiscriminant { index: n_max });
    }
    let margin = limit_discr / R::from_i64(4, ctx);
    let mut rev_t = Vec::new();
    let mut rev_mu: Vec<[Cx<R>; 2]> = Vec::new();
    let mut threshold = start;
    for n in (start..=n_max).rev() {
        let m = if n == n_max { top.clone() } else { v(n) };
        if c_abs(&m.discriminant()) < margin {
            threshold = n + 1;
            break;
        }
        let [a, b] = ordered_eigenvalues(&m);
        let mu = match rev_mu.last() {
            None => [a, b],
            Some([p1, p2]) => {
                let keep = c_abs(&(a.clone() - p1.clone())) + c_abs(&(b.clone() - p2.clone()));
                let swap = c_abs(&(b.clone() - p1.clone())) + c_abs(&(a.clone() - p2.clone()));
                if swap < keep {
                    [b, a]
                } else {
                    [a, b]
                }
            }
        };
        let x1 = eigenvector(&m, &mu[0], ctx);
        let x2 = eigenvector(&m, &mu[1], ctx);
        rev_t.push(Mat2::from_columns(&x1, &x2));
        rev_mu.push(mu);
    }
    if n_max - threshold < 2 {
        return Err(Error::DegenerateDiscriminant { index: threshold - 1 });
    }
    rev_t.reverse();
    rev_mu.reverse();
    let t_variation = rev_t
        .windows(2)
        .map(|w| (w[1].clone() - w[0].clone()).norm())
        .fold(R::zero(), |a, b| a + b)
        .to_f64();
    let (mu1, mu2) = rev_mu.into_iter().map(|[a, b]| (a, b)).unzip();
    Ok(Diagonalization {
        threshold,
        t: rev_t,
        mu1,
        mu2,
        t_variation,
    })
}

/// Variation-of-parameters iteration of `I - diag(p_n, 0) + R_n` from
/// `u_{n0} = seed`:
/// `u_{n+1} = diag(prod(1-p_k), 1) u_{n0} + sum_k diag(prod_{l>k}(1-p_l), 1) R_k u_k`.
fn vop_iterate<R, P, Q>(p: P, r: Q, seed: &Vec2<R>, n0: i64, n_max: i64, ctx: &PrecisionContext) -> VectorTrace<R>
where
    R: Real,
    P: Fn(i64) -> Cx<R>,
    Q: Fn(i64) -> Mat2<R>,
{
    let one = c_real(R::from_i64(1, ctx));
    let zero = c_real(R::from_i64(0, ctx));
    let mut prod = one.clone();
    let (mut acc1, mut acc2) = (zero.clone(), zero);
    let mut values = Vec::with_capacity((n_max - n0 + 1).max(1) as usize);
    values.push(seed.clone());
    for n in n0..n_max {
        let q = one.clone() - p(n);
        let ru = r(n).apply(values.last().unwrap());
        let [r1, r2] = ru.0;
        acc1 = q.clone() * acc1 + r1;
        acc2 = acc2 + r2;
        prod = prod * q;
        values.push(Vec2::new(
            prod.clone() * seed.x().clone() + acc1.clone(),
            seed.y().clone() + acc2.clone(),
        ));
    }
    VectorTrace {
        first_index: n0,
        values,
    }
}

#[derive(Clone, Debug)]
pub struct LargerSolution<R: Real> {
    pub trace: VectorTrace<R>,
    pub n0: i64,
    pub retries: u32,
    /// `sum_{n >= n0} ||R_n||` over the computed range.
    pub contraction_tail: f64,
    /// False when the margin was not reached in the first half of the range
    /// and the start was found by doubling instead.
    pub contraction_certified: bool,
}

const MAX_RETRIES: u32 = 6;

/// The seed index is pushed forward until `q = sum_{n >= n0} ||R_n|| <= 1/10`;
/// then `|u_2 - 1| <= q / (1 - q)` along the whole range.
const CONTRACTION_MARGIN: f64 = 0.1;

fn larger_with_retry<R, P, Q>(p: P, r: Q, n0: i64, n_max: i64, ctx: &PrecisionContext) -> Result<LargerSolution<R>>
where
    R: Real,
    P: Fn(i64) -> Cx<R>,
    Q: Fn(i64) -> Mat2<R>,
{
    let rs: Vec<Mat2<R>> = (n0..n_max).map(&r).collect();
    let mut tails = vec![0.0; rs.len() + 1];
    for i in (0..rs.len()).rev() {
        tails[i] = tails[i + 1] + rs[i].row_sum_norm().to_f64();
    }
    let midpoint = ((n_max - n0) / 2) as usize;
    let certified = tails.iter().position(|&t| t <= CONTRACTION_MARGIN).filter(|&i| i <= midpoint);
    let first = certified.unwrap_or(0);
    let floor = R::from_f64(1e-3, ctx);
    let mut start = n0 + first as i64;
    for retries in 0..=MAX_RETRIES {
        if start >= n_max {
            break;
        }
        let trace = vop_iterate(&p, |n| rs[(n - n0) as usize].clone(), &Vec2::e2(ctx), start, n_max, ctx);
        if c_abs(trace.last().y()) >= floor {
            return Ok(LargerSolution {
                trace,
                n0: start,
                retries,
                contraction_tail: tails[(start - n0) as usize],
                contraction_certified: certified.is_some() && retries == 0,
            });
        }
        start *= 2;
    }
    Err(Error::NZeroTooSmall(format!(
        "second component of the limit stays below 1e-3 up to n0 = {start}"
    )))
}

/// The solution of `u_{n+1} = (I - diag(p_n, 0) + R_n) u_n` tending to a
/// multiple of `e2`, seeded with `e2` at the first index where `0 < p_n < 1`.
/// `spec.v` is not consulted: the simple form is assumed.
pub fn larger_solution<R: Real>(spec: &SystemSpec<R>, n_max: i64) -> Result<LargerSolution<R>> {
    let n0 = spec
        .contraction_start(spec.start_index, n_max)
        .ok_or_else(|| Error::Spec("p_n never lies in (0, 1)".into()))?;
    larger_with_retry(|n| c_real((spec.p)(n)), |n| (spec.r)(n), n0, n_max, &spec.ctx)
}

/// Same iteration from an arbitrary seed at `n0`.
pub fn simple_system_solution<R: Real>(spec: &SystemSpec<R>, seed: &Vec2<R>, n0: i64, n_max: i64) -> VectorTrace<R> {
    vop_iterate(|n| c_real((spec.p)(n)), |n| (spec.r)(n), seed, n0, n_max, &spec.ctx)
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundednessCertificate {
    pub start: i64,
    pub n_max: i64,
    /// `prod (1 + ||R_n||)` with the induced infinity norm.
    pub constant: f64,
    pub log_constant: f64,
}

/// `C = prod_{n=start}^{n_max} (1 + ||R_n||_inf)`: every solution of the
/// simple system satisfies `||u_n|| <= C ||u_start||` on the range.
pub fn boundedness_certificate<R: Real>(spec: &SystemSpec<R>, n_max: i64) -> Result<BoundednessCertificate> {
    let start = spec
        .contraction_start(spec.start_index, n_max)
        .ok_or_else(|| Error::Spec("p_n never lies in (0, 1)".into()))?;
    let one = R::from_i64(1, &spec.ctx);
    let mut log_c = R::from_i64(0, &spec.ctx);
    for n in start..n_max {
        log_c = log_c + (one.clone() + (spec.r)(n).row_sum_norm()).ln();
    }
    let log_constant = log_c.to_f64();
    Ok(BoundednessCertificate {
        start,
        n_max,
        constant: log_constant.exp(),
        log_constant,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    #[serde(rename = "hyperbolic")]
    Hyperbolic,
    #[serde(rename = "elliptic")]
    Elliptic,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisDiagnostics {
    pub p_sum: f64,
    pub p_last: f64,
    pub r_sum: f64,
    /// `sum ||R_n||` over `[n_max/2, n_max]`.
    pub r_tail: f64,
    pub v_variation: f64,
    pub v_variation_tail: f64,
    pub t_variation: f64,
    pub t_variation_tail: f64,
    pub limit_discriminant: [f64; 2],
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct AsymptoticBasis<R: Real> {
    pub kind: BasisKind,
    pub n0: i64,
    pub threshold: i64,
    /// Eigenvalues of `V_{n_max}`, the estimate of `lim V_n`.
    pub mu_limits: [Cx<R>; 2],
    /// Eigenvectors `x1`, `x2` of `V_{n_max}`.
    pub directions: [Vec2<R>; 2],
    /// `prod_{k=n0}^{n-1} (1 + p_k mu_i(k))` for `n = n0..=n_max`.
    pub scalar_products: [Vec<Cx<R>>; 2],
    /// Solutions of the original system, smaller first.
    pub solutions: [VectorTrace<R>; 2],
    /// `|sin|` of the angle between `u^(i)_{n_max}` and `x_i`.
    pub tail_residuals: [f64; 2],
    pub larger_retries: u32,
    pub diagnostics: HypothesisDiagnostics,
    /// `(n, mu1(n), mu2(n))` on a geometric grid.
    pub eigenvalue_trajectory: Vec<(i64, [Cx<R>; 2])>,
}

impl<R: Real> AsymptoticBasis<R> {
    pub fn scalar_product(&self, i: usize, n: i64) -> Option<&Cx<R>> {
        usize::try_from(n - self.n0)
            .ok()
            .and_then(|k| self.scalar_products[i].get(k))
    }
}

fn diagnostics<R: Real>(spec: &SystemSpec<R>, diag: &Diagonalization<R>, from: i64, n_max: i64) -> HypothesisDiagnostics {
    let ctx = &spec.ctx;
    let zero = R::from_i64(0, ctx);
    let half = (from + n_max) / 2;
    let (mut p_sum, mut r_sum, mut r_tail, mut v_var, mut v_tail) =
        (zero.clone(), zero.clone(), zero.clone(), zero.clone(), zero);
    let mut v_prev = (spec.v)(from);
    for n in from..=n_max {
        p_sum = p_sum + (spec.p)(n);
        let rn = (spec.r)(n).norm();
        if n >= half {
            r_tail = r_tail + rn.clone();
        }
        r_sum = r_sum + rn;
        if n > from {
            let v = (spec.v)(n);
            let d = (v.clone() - v_prev).norm();
            if n > half {
                v_tail = v_tail + d.clone();
            }
            v_var = v_var + d;
            v_prev = v;
        }
    }
    let p_last = (spec.p)(n_max).to_f64();
    let t_tail = diag.variation_tail(half).to_f64();
    let disc = (spec.v)(n_max).discriminant();
    let mut warnings = Vec::new();
    if p_last.is_nan() || p_last <= 0.0 {
        warnings.push(format!("p_n is not positive at n = {n_max}"));
    }
    if p_last >= 0.5 {
        warnings.push("p_n does not appear to tend to 0".into());
    }
    let r_tail_f = r_tail.to_f64();
    if r_tail_f > 1e-2 {
        warnings.push(format!("tail of sum ||R_n|| is {r_tail_f:.3e}; l1 summability not evident"));
    }
    if t_tail > 1e-2 {
        warnings.push(format!("tail of sum ||T_(n+1) - T_n|| is {t_tail:.3e}; D1 not evident"));
    }
    HypothesisDiagnostics {
        p_sum: p_sum.to_f64(),
        p_last,
        r_sum: r_sum.to_f64(),
        r_tail: r_tail_f,
        v_variation: v_var.to_f64(),
        v_variation_tail: v_tail.to_f64(),
        t_variation: diag.t_variation,
        t_variation_tail: t_tail,
        limit_discriminant: [disc.re.to_f64(), disc.im.to_f64()],
        warnings,
    }
}

fn direction_residual<R: Real>(u: &Vec2<R>, x: &Vec2<R>) -> f64 {
    let d = u.norm2() * x.norm2();
    if d.is_zero() {
        return f64::NAN;
    }
    (c_abs(&u.cross(x)) / d).to_f64()
}

/// Both asymptotic solutions `prod(1 + p_k mu_i(k)) (x_i + o(1))`.
pub fn asymptotic_basis<R: Real>(spec: &SystemSpec<R>, n_max: i64) -> Result<AsymptoticBasis<R>> {
    let ctx = spec.ctx;
    let diag = d1_diagonalize(|n| (spec.v)(n), spec.start_index, n_max + 1, &ctx)?;
    let [mu_a, mu_b] = diag.mu(n_max);
    let (mu_a, mu_b) = (mu_a.clone(), mu_b.clone());
    let kind = if mu_a.re < mu_b.re {
        BasisKind::Hyperbolic
    } else {
        BasisKind::Elliptic
    };
    let top = (spec.v)(n_max);
    let directions = [eigenvector(&top, &mu_a, &ctx), eigenvector(&top, &mu_b, &ctx)];
    let one = c_real(R::from_i64(1, &ctx));
    let p_c = |n: i64| c_real((spec.p)(n));

    let reduced_p = |n: i64| {
        let [m1, m2] = diag.mu(n);
        let p = p_c(n);
        p.clone() * (m2.clone() - m1.clone()) / (one.clone() + p * m2.clone())
    };
    let positive_from = (diag.threshold.max(spec.start_index)..n_max).find(|&n| {
        let q = reduced_p(n);
        q.re > R::zero() && q.re < R::one()
    });
    let n0 = match kind {
        BasisKind::Hyperbolic => positive_from.ok_or_else(|| Error::Spec("reduced p_n never lies in (0, 1)".into()))?,
        BasisKind::Elliptic => diag.threshold.max(spec.start_index),
    };

    let products = |i: usize, from: i64| -> Vec<Cx<R>> {
        let mut acc = one.clone();
        let mut out = Vec::with_capacity((n_max - from + 1) as usize);
        out.push(acc.clone());
        for k in from..n_max {
            acc = acc * (one.clone() + p_c(k) * diag.mu(k)[i].clone());
            out.push(acc.clone());
        }
        out
    };

    let (solutions, n0, retries) = match kind {
        BasisKind::Hyperbolic => {
            // Q_n = T_{n+1}^-1 (T_n - T_{n+1}) (I + p diag mu) + T_{n+1}^-1 R_n T_n
            let reduced_r = |n: i64| -> Mat2<R> {
                let t = diag.t_at(n);
                let t_next = diag.t_at(n + 1);
                let t_next_inv = t_next.inverse(&ctx).unwrap_or_else(|| Mat2::zero(&ctx));
                let [m1, m2] = diag.mu(n);
                let p = p_c(n);
                let d = Mat2::diag(one.clone() + p.clone() * m1.clone(), one.clone() + p.clone() * m2.clone());
                let q = &(&t_next_inv * &(t.clone() - t_next.clone())) * &d
                    + &(&t_next_inv * &(spec.r)(n)) * t;
                q.scale(&(one.clone() / (one.clone() + p * m2.clone())))
            };
            for n in n0..=n_max {
                diag.t_at(n + 1).inverse_at(n + 1, &ctx)?;
            }
            let larger = larger_with_retry(reduced_p, reduced_r, n0, n_max, &ctx)?;
            let n0 = larger.n0;
            let prod2 = products(1, n0);
            let big = VectorTrace {
                first_index: n0,
                values: larger
                    .trace
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, w)| diag.t_at(n0 + i as i64).apply(w).scale(&prod2[i]))
                    .collect(),
            };
            let small = smaller_by_backward(spec, &diag, n0, n_max)?;
            ([small, big], n0, larger.retries)
        }
        BasisKind::Elliptic => {
            let sols = [0usize, 1].map(|i| {
                let seed = diag.t_at(n0).column(i);
                forward_original(spec, &seed, n0, n_max)
            });
            (sols, n0, 0)
        }
    };
    let scalar_products = [products(0, n0), products(1, n0)];
    let tail_residuals = [
        direction_residual(solutions[0].last(), &directions[0]),
        direction_residual(solutions[1].last(), &directions[1]),
    ];
    let grid = crate::fit::geometric_grid(diag.threshold, n_max, 20);
    let eigenvalue_trajectory = grid
        .into_iter()
        .map(|n| {
            let [a, b] = diag.mu(n);
            (n, [a.clone(), b.clone()])
        })
        .collect();
    Ok(AsymptoticBasis {
        kind,
        n0,
        threshold: diag.threshold,
        mu_limits: [mu_a, mu_b],
        directions,
        scalar_products,
        solutions,
        tail_residuals,
        larger_retries: retries,
        diagnostics: diagnostics(spec, &diag, n0, n_max),
        eigenvalue_trajectory,
    })
}

fn forward_original<R: Real>(spec: &SystemSpec<R>, seed: &Vec2<R>, n0: i64, n_max: i64) -> VectorTrace<R> {
    let mut values = vec![seed.clone()];
    for n in n0..n_max {
        let next = spec.step_matrix(n).apply(values.last().unwrap());
        values.push(next);
    }
    VectorTrace {
        first_index: n0,
        values,
    }
}

/// Backward iteration of the original system from `x1(n_far)` at
/// `n_far = 4 n_max`, scaled so that the `x1(n0)` coordinate of `u_{n0}` is 1.
fn smaller_by_backward<R: Real>(spec: &SystemSpec<R>, diag: &Diagonalization<R>, n0: i64, n_max: i64) -> Result<VectorTrace<R>> {
    let ctx = spec.ctx;
    let n_far = 4 * n_max;
    let v_far = (spec.v)(n_far);
    let [m1, _] = ordered_eigenvalues(&v_far);
    let mut u = eigenvector(&v_far, &m1, &ctx);
    let mut rev = Vec::with_capacity((n_max - n0 + 1) as usize);
    for n in (n0..n_far).rev() {
        u = spec.step_matrix(n).inverse_at(n, &ctx)?.apply(&u);
        if n <= n_max {
            rev.push(u.clone());
        }
    }
    rev.reverse();
    let coord = diag.t_at(n0).inverse_at(n0, &ctx)?.apply(&rev[0]);
    let c = coord.x().clone();
    if c_abs(&c).is_zero() {
        return Err(Error::Singular { index: n0 });
    }
    let inv = c_real(R::from_i64(1, &ctx)) / c;
    Ok(VectorTrace {
        first_index: n0,
        values: rev.into_iter().map(|v| v.scale(&inv)).collect(),
    })
}
