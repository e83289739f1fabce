//! The period-two modulated Jacobi model: weights `a_n = n^alpha`, diagonal
//! `b_n = b n^alpha` on odd `n` and `0` on even `n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{geometric_grid, power_fit, PowerFit};
use crate::mat2::{c_real, Mat2};
use crate::scalar::{PrecisionContext, Real};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<R: Real> {
    pub alpha: R,
    pub b: R,
    pub lambda: R,
}

impl<R: Real> ModelParams<R> {
    /// Parses decimal literals at the context precision.
    pub fn parse(alpha: &str, b: &str, lambda: &str, ctx: &PrecisionContext) -> Result<Self> {
        Ok(Self {
            alpha: R::parse_decimal(alpha, ctx)?,
            b: R::parse_decimal(b, ctx)?,
            lambda: R::parse_decimal(lambda, ctx)?,
        })
    }

    pub fn validate(&self, ctx: &PrecisionContext) -> Result<()> {
        let three_alpha = self.alpha.clone() * R::from_i64(3, ctx);
        let two = R::from_i64(2, ctx);
        if !(three_alpha > two && self.alpha < R::from_i64(1, ctx)) {
            return Err(Error::AlphaOutOfRange(self.alpha.to_f64().to_string()));
        }
        if self.b.is_zero() {
            return Err(Error::ZeroModulation);
        }
        Ok(())
    }

    pub fn with_lambda(&self, lambda: R) -> Self {
        Self {
            lambda,
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    #[serde(rename = "critical-hyperbolic")]
    CriticalHyperbolic,
    #[serde(rename = "critical-elliptic")]
    CriticalElliptic,
    #[serde(rename = "degenerate")]
    Degenerate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::CriticalHyperbolic => "critical-hyperbolic",
            Regime::CriticalElliptic => "critical-elliptic",
            Regime::Degenerate => "degenerate",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationResult {
    pub regime: Regime,
    pub limit_matrix: [[f64; 2]; 2],
    /// Richardson-extrapolated `c` in `discr M_n ~ c n^-alpha`.
    pub discr_leading_coeff: Option<f64>,
    /// `4 b lambda / 2^alpha`.
    pub expected_leading_coeff: f64,
    pub fitted_discr_exponent: Option<f64>,
    pub fit_range: [i64; 2],
    pub fit_points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CarlemanReport {
    /// `(n, sum_{k<=n} 1/a_k)` at checkpoints.
    pub partial_sums: Vec<(i64, f64)>,
    /// `n^(1-alpha)/(1-alpha)`, the growth rate of the partial sums.
    pub growth_reference: Vec<(i64, f64)>,
    pub verdict: &'static str,
}

#[derive(Clone, Debug)]
pub struct Model<R: Real> {
    pub params: ModelParams<R>,
    pub ctx: PrecisionContext,
}

impl<R: Real> Model<R> {
    pub fn new(params: ModelParams<R>, ctx: PrecisionContext) -> Result<Self> {
        params.validate(&ctx)?;
        Ok(Self { params, ctx })
    }

    pub fn ctx(&self) -> &PrecisionContext {
        &self.ctx
    }

    pub fn alpha(&self) -> &R {
        &self.params.alpha
    }

    pub fn b(&self) -> &R {
        &self.params.b
    }

    pub fn lambda(&self) -> &R {
        &self.params.lambda
    }

    pub fn int(&self, n: i64) -> R {
        R::from_i64(n, &self.ctx)
    }

    pub fn ratio(&self, num: i64, den: i64) -> R {
        R::from_ratio(num, den, &self.ctx)
    }

    /// `x^alpha` for `x >= 0`.
    pub fn pow_alpha(&self, x: &R) -> R {
        x.powf(&self.params.alpha)
    }

    /// `a_n = n^alpha`; `a_0 = 0` closes the recurrence at the boundary.
    pub fn weight(&self, n: i64) -> R {
        if n == 0 {
            return self.int(0);
        }
        self.pow_alpha(&self.int(n))
    }

    pub fn diag(&self, n: i64) -> R {
        if n % 2 == 0 {
            self.int(0)
        } else {
            self.params.b.clone() * self.weight(n)
        }
    }

    /// `B_n = [[0, 1], [-a_{n-1}/a_n, (lambda - b_n)/a_n]]`.
    pub fn transfer(&self, n: i64) -> Mat2<R> {
        let a_n = self.weight(n);
        let a_prev = self.weight(n - 1);
        let b_n = self.diag(n);
        Mat2::real(
            self.int(0),
            self.int(1),
            -(a_prev / a_n.clone()),
            (self.params.lambda.clone() - b_n) / a_n,
        )
    }

    /// `M_n = B_{2n} B_{2n-1}`.
    pub fn paired(&self, n: i64) -> Mat2<R> {
        &self.transfer(2 * n) * &self.transfer(2 * n - 1)
    }

    /// `M = [[-1, -b], [0, -1]]`.
    pub fn limit_matrix(&self) -> Mat2<R> {
        Mat2::real(self.int(-1), -self.params.b.clone(), self.int(0), self.int(-1))
    }

    /// `M + lambda (2n)^-alpha [[0, 1], [-1, -b]] + (alpha/2n) I`.
    pub fn paired_expansion(&self, n: i64) -> Mat2<R> {
        let s = self.params.lambda.clone() / self.weight(2 * n);
        let j = Mat2::real(self.int(0), self.int(1), self.int(-1), -self.params.b.clone());
        let shift = self.params.alpha.clone() / self.int(2 * n);
        let id = Mat2::diag(c_real(shift.clone()), c_real(shift));
        self.limit_matrix() + j.scale_real(&s) + id
    }

    /// Log-log fit of `|| M_n - expansion ||` over a geometric grid.
    pub fn paired_residual_fit(&self, lo: i64, hi: i64) -> PowerFit {
        let ns = geometric_grid(lo, hi, 20);
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n| (self.paired(n) - self.paired_expansion(n)).norm().ln_abs_f64())
            .collect();
        power_fit(&ns, &ys)
    }

    pub fn regime(&self) -> Regime {
        let s = self.params.b.clone() * self.params.lambda.clone();
        if self.params.lambda.is_zero() {
            Regime::Degenerate
        } else if s > self.int(0) {
            Regime::CriticalHyperbolic
        } else {
            Regime::CriticalElliptic
        }
    }

    /// `discr M_n` (real for real parameters).
    pub fn paired_discriminant(&self, n: i64) -> R {
        self.paired(n).discriminant().re
    }

    pub fn classify(&self, n_max: i64) -> Result<ClassificationResult> {
        if n_max < 100 {
            return Err(Error::InvalidArgument(format!(
                "classification needs n_max >= 100, got {n_max}"
            )));
        }
        let regime = self.regime();
        let expected = (self.int(4) * self.params.b.clone() * self.params.lambda.clone()
            / self.weight(2))
        .to_f64();
        let limit = self.limit_matrix().to_f64().map(|row| row.map(|e| e[0]));
        let mut result = ClassificationResult {
            regime,
            limit_matrix: limit,
            discr_leading_coeff: None,
            expected_leading_coeff: expected,
            fitted_discr_exponent: None,
            fit_range: [100, n_max],
            fit_points: 0,
        };
        if regime == Regime::Degenerate {
            return Ok(result);
        }
        let ns = geometric_grid(100, n_max, 20);
        let ys: Vec<f64> = ns
            .iter()
            .map(|&n| self.paired_discriminant(n).ln_abs_f64())
            .collect();
        let fit = power_fit(&ns, &ys);
        // c_n = discr M_n n^alpha = c + O(n^-alpha); eliminate the first correction.
        let m = n_max / 2;
        let c_m = self.paired_discriminant(m) * self.weight(m);
        let c_2m = self.paired_discriminant(2 * m) * self.weight(2 * m);
        let r = self.weight(2);
        let c = (r.clone() * c_2m - c_m) / (r - self.int(1));
        result.discr_leading_coeff = Some(c.to_f64());
        result.fitted_discr_exponent = Some(fit.exponent);
        result.fit_points = fit.points;
        Ok(result)
    }

    pub fn carleman_check(&self, n_max: i64) -> CarlemanReport {
        let mut checkpoints: Vec<i64> = std::iter::successors(Some(10i64), |&k| k.checked_mul(10))
            .take_while(|&k| k < n_max)
            .collect();
        checkpoints.push(n_max.max(1));
        let mut sums = Vec::new();
        let mut acc = self.int(0);
        let mut next = 0;
        for n in 1..=n_max.max(1) {
            acc = acc + self.int(1) / self.weight(n);
            if checkpoints.get(next) == Some(&n) {
                sums.push((n, acc.to_f64()));
                next += 1;
            }
        }
        let one_minus = 1.0 - self.params.alpha.to_f64();
        let growth = checkpoints
            .iter()
            .map(|&n| (n, (n as f64).powf(one_minus) / one_minus))
            .collect();
        CarlemanReport {
            partial_sums: sums,
            growth_reference: growth,
            verdict: "divergent",
        }
    }
}
