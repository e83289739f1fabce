//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All algorithms are written against [`Real`], which is implemented for
//! `f64` (fast, 15 significant digits) and for the multiprecision [`Mpf`].
//! Values that are not exactly representable at low precision (parameters,
//! rational constants) are always constructed through a [`PrecisionContext`]
//! so that their precision matches the working precision of the run.

mod mpf;

use std::fmt;

use num_traits::{Float, Num};

use crate::error::{Error, Result};

pub use mpf::Mpf;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working precision, in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrecisionContext {
    digits: u32,
}

impl PrecisionContext {
    pub const MIN_DIGITS: u32 = 30;
    /// Digits added on top of the magnitude range by [`Self::for_magnitude`].
    pub const BUDGET_MARGIN: u32 = 30;

    pub fn new(digits: u32) -> Result<Self> {
        if digits < Self::MIN_DIGITS {
            return Err(Error::PrecisionTooLow { digits });
        }
        Ok(Self { digits })
    }

    /// Precision large enough to resolve cancellations among quantities of
    /// size `e^{log_magnitude}`, i.e. `ceil(log_magnitude * log10(e)) + 30`
    /// digits, and never below the minimum.
    pub fn for_magnitude(log_magnitude: f64) -> Self {
        Self {
            digits: required_digits(log_magnitude).max(Self::MIN_DIGITS),
        }
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Mantissa length used by [`Mpf`] values created under this context.
    pub fn bits(&self) -> u32 {
        (f64::from(self.digits) * LOG2_10).ceil() as u32 + 16
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self { digits: 40 }
    }
}

/// Digits needed to keep `BUDGET_MARGIN` significant digits after a
/// cancellation of relative size `e^{-log_magnitude}`.
pub fn required_digits(log_magnitude: f64) -> u32 {
    let scale = log_magnitude.max(0.0) * std::f64::consts::LOG10_E;
    scale.ceil() as u32 + PrecisionContext::BUDGET_MARGIN
}

/// Real scalar field used by the generic numerical code.
pub trait Real:
    Num + Clone + fmt::Debug + fmt::Display + PartialOrd + std::ops::Neg<Output = Self> + Send + Sync + 'static
{
    fn from_i64(n: i64, ctx: &PrecisionContext) -> Self;

    /// Exact binary value of `x` (so `0.8_f64` is *not* decimal 0.8).
    fn from_f64(x: f64, ctx: &PrecisionContext) -> Self;

    /// Decimal literal such as `-1.25e-3`, rounded once to the context precision.
    fn parse_decimal(s: &str, ctx: &PrecisionContext) -> Result<Self>;

    fn to_f64(&self) -> f64;

    /// `ln |self|` as an `f64`, valid far outside the `f64` exponent range.
    fn ln_abs_f64(&self) -> f64;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;

    fn powf(&self, exponent: &Self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        (exponent.clone() * self.ln()).exp()
    }

    fn is_finite(&self) -> bool;

    /// Number of significant decimal digits actually carried.
    fn effective_digits(ctx: &PrecisionContext) -> u32;

    /// Scientific notation with `sig` significant digits.
    fn to_sci_string(&self, sig: usize) -> String;

    fn from_ratio(num: i64, den: i64, ctx: &PrecisionContext) -> Self {
        Self::from_i64(num, ctx) / Self::from_i64(den, ctx)
    }

    /// `10^k` at context precision.
    fn pow10(k: i32, ctx: &PrecisionContext) -> Self {
        let ten = Self::from_i64(10, ctx);
        let mut acc = Self::from_i64(1, ctx);
        for _ in 0..k.unsigned_abs() {
            acc = acc * ten.clone();
        }
        if k < 0 {
            Self::from_i64(1, ctx) / acc
        } else {
            acc
        }
    }

    /// `10^{-(effective_digits - slack)}`: the tolerance used for identities
    /// that hold exactly up to rounding.
    fn tolerance(slack: u32, ctx: &PrecisionContext) -> Self {
        let digits = Self::effective_digits(ctx).saturating_sub(slack) as i32;
        Self::pow10(-digits, ctx)
    }

    /// `log10 |self|` as `f64`.
    fn log10_abs_f64(&self) -> f64 {
        self.ln_abs_f64() * std::f64::consts::LOG10_E
    }
}

impl Real for f64 {
    fn from_i64(n: i64, _: &PrecisionContext) -> Self {
        n as f64
    }

    fn from_f64(x: f64, _: &PrecisionContext) -> Self {
        x
    }

    fn parse_decimal(s: &str, _: &PrecisionContext) -> Result<Self> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::ParseScalar(s.to_string()))
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ln_abs_f64(&self) -> f64 {
        Float::abs(*self).ln()
    }

    fn abs(&self) -> Self {
        Float::abs(*self)
    }

    fn sqrt(&self) -> Self {
        Float::sqrt(*self)
    }

    fn exp(&self) -> Self {
        Float::exp(*self)
    }

    fn ln(&self) -> Self {
        Float::ln(*self)
    }

    fn powf(&self, exponent: &Self) -> Self {
        Float::powf(*self, *exponent)
    }

    fn is_finite(&self) -> bool {
        Float::is_finite(*self)
    }

    fn effective_digits(_: &PrecisionContext) -> u32 {
        15
    }

    fn to_sci_string(&self, sig: usize) -> String {
        format!("{:.*e}", sig.saturating_sub(1), self)
    }

    fn pow10(k: i32, _: &PrecisionContext) -> Self {
        10f64.powi(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_low_precision() {
        assert!(matches!(
            PrecisionContext::new(29),
            Err(Error::PrecisionTooLow { digits: 29 })
        ));
        assert_eq!(PrecisionContext::new(30).unwrap().digits(), 30);
    }

    #[test]
    fn magnitude_budget() {
        // 2 * 1.2630971 * 2000^0.6 = 241.5 nepers -> 105 digits + 30
        let amp = 2.0 * 1.263_097_138_758_665 * 2000f64.powf(0.6);
        assert_eq!(PrecisionContext::for_magnitude(amp).digits(), 135);
        assert_eq!(PrecisionContext::for_magnitude(0.0).digits(), 30);
    }

    #[test]
    fn f64_tolerance() {
        let ctx = PrecisionContext::default();
        let tol = f64::tolerance(5, &ctx);
        assert!((tol - 1e-10).abs() < 1e-24);
    }
}
