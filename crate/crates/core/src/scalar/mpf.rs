//! Binary multiprecision floating point over `num-bigint`.
//!
//! A finite value is `(-1)^neg * man * 2^exp` with `man` holding exactly
//! `prec` bits. Every arithmetic result is rounded half-to-even to the larger
//! operand precision, so constants such as `Mpf::one()` (64 bits) mix freely
//! with working-precision values.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{Num, One, ToPrimitive, Zero};

use super::{PrecisionContext, Real};
use crate::error::{Error, Result};

const DEFAULT_BITS: u32 = 64;

#[derive(Clone)]
pub struct Mpf {
    neg: bool,
    man: BigUint,
    exp: i64,
    prec: u32,
    nan: bool,
}

thread_local! {
    // ln 2 as a fixed-point integer scaled by 2^bits, largest computed so far.
    static LN2_CACHE: RefCell<(u64, BigUint)> = RefCell::new((0, BigUint::zero()));
}

impl Mpf {
    pub fn zero_with_prec(prec: u32) -> Self {
        Self {
            neg: false,
            man: BigUint::zero(),
            exp: 0,
            prec,
            nan: false,
        }
    }

    pub fn nan() -> Self {
        Self {
            nan: true,
            ..Self::zero_with_prec(DEFAULT_BITS)
        }
    }

    pub fn is_nan(&self) -> bool {
        self.nan
    }

    pub fn precision_bits(&self) -> u32 {
        self.prec
    }

    /// Same value rounded (or zero-extended) to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        if self.nan {
            return Self::nan();
        }
        Self::from_parts(self.neg, self.man.clone(), self.exp, prec, false)
    }

    fn from_biguint(neg: bool, man: BigUint, prec: u32) -> Self {
        Self::from_parts(neg, man, 0, prec, false)
    }

    /// Rounds `man * 2^exp` to `prec` bits; `sticky` marks discarded nonzero
    /// bits below `man`.
    fn from_parts(neg: bool, mut man: BigUint, mut exp: i64, prec: u32, sticky: bool) -> Self {
        if man.is_zero() {
            return Self::zero_with_prec(prec);
        }
        let prec64 = u64::from(prec);
        let bits = man.bits();
        if bits > prec64 {
            let shift = bits - prec64;
            let half = man.bit(shift - 1);
            let below_half = shift >= 2 && man.trailing_zeros().is_some_and(|tz| tz < shift - 1);
            man >>= shift;
            exp += shift as i64;
            if half && (sticky || below_half || man.bit(0)) {
                man += 1u32;
                if man.bits() > prec64 {
                    man >>= 1u32;
                    exp += 1;
                }
            }
        } else if bits < prec64 {
            let shift = prec64 - bits;
            man <<= shift;
            exp -= shift as i64;
        }
        Self {
            neg,
            man,
            exp,
            prec,
            nan: false,
        }
    }

    /// Position of the bit just above the leading one: value in [2^(top-1), 2^top).
    fn top(&self) -> i64 {
        self.exp + self.man.bits() as i64
    }

    fn add_signed(&self, other: &Self, flip: bool) -> Self {
        if self.nan || other.nan {
            return Self::nan();
        }
        let prec = self.prec.max(other.prec);
        let other_neg = other.neg ^ flip;
        if other.man.is_zero() {
            return self.with_prec(prec);
        }
        if self.man.is_zero() {
            let mut r = other.with_prec(prec);
            r.neg = other_neg;
            return r;
        }
        let guard = i64::from(prec) + 4;
        if self.top() > other.top() + guard {
            return self.with_prec(prec);
        }
        if other.top() > self.top() + guard {
            let mut r = other.with_prec(prec);
            r.neg = other_neg;
            return r;
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &other.man << (other.exp - e) as u64;
        if self.neg == other_neg {
            Self::from_parts(self.neg, a + b, e, prec, false)
        } else {
            match a.cmp(&b) {
                Ordering::Equal => Self::zero_with_prec(prec),
                Ordering::Greater => Self::from_parts(self.neg, a - b, e, prec, false),
                Ordering::Less => Self::from_parts(other_neg, b - a, e, prec, false),
            }
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        if self.nan || other.nan {
            return Self::nan();
        }
        let prec = self.prec.max(other.prec);
        Self::from_parts(
            self.neg ^ other.neg,
            &self.man * &other.man,
            self.exp + other.exp,
            prec,
            false,
        )
    }

    fn div_ref(&self, other: &Self) -> Self {
        if self.nan || other.nan || other.man.is_zero() {
            return Self::nan();
        }
        let prec = self.prec.max(other.prec);
        if self.man.is_zero() {
            return Self::zero_with_prec(prec);
        }
        let shift = (i64::from(prec) + 3 + other.man.bits() as i64 - self.man.bits() as i64).max(0);
        let (q, r) = (&self.man << shift as u64).div_rem(&other.man);
        Self::from_parts(
            self.neg ^ other.neg,
            q,
            self.exp - shift - other.exp,
            prec,
            !r.is_zero(),
        )
    }

    fn cmp_magnitude(&self, other: &Self) -> Ordering {
        match (self.man.is_zero(), other.man.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        match self.top().cmp(&other.top()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let e = self.exp.min(other.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &other.man << (other.exp - e) as u64;
        a.cmp(&b)
    }

    /// Value truncated toward zero.
    pub fn trunc(&self) -> Self {
        if self.nan || self.exp >= 0 {
            return self.clone();
        }
        let shift = (-self.exp) as u64;
        if shift >= self.man.bits() {
            return Self::zero_with_prec(self.prec);
        }
        Self::from_parts(self.neg, &self.man >> shift, 0, self.prec, false)
    }

    /// Signed fixed-point representation `round(self * 2^frac_bits)`.
    fn to_fixed(&self, frac_bits: u64) -> BigInt {
        let shift = self.exp + frac_bits as i64;
        let mag = if shift >= 0 {
            &self.man << shift as u64
        } else {
            let s = (-shift) as u64;
            let half = if s >= 1 { self.man.bit(s - 1) } else { false };
            let mut m = &self.man >> s;
            if half {
                m += 1u32;
            }
            m
        };
        BigInt::from_biguint(if self.neg { Sign::Minus } else { Sign::Plus }, mag)
    }

    fn from_fixed(v: BigInt, frac_bits: u64, prec: u32) -> Self {
        let (sign, mag) = v.into_parts();
        Self::from_parts(sign == Sign::Minus, mag, -(frac_bits as i64), prec, false)
    }

    fn ln2_fixed(frac_bits: u64) -> BigUint {
        LN2_CACHE.with(|cache| {
            let mut cache = cache.borrow_mut();
            if cache.0 < frac_bits {
                let bits = frac_bits.max(256) + 32;
                cache.1 = ln2_series(bits);
                cache.0 = bits;
            }
            &cache.1 >> (cache.0 - frac_bits)
        })
    }

    fn exp_impl(&self) -> Self {
        if self.nan {
            return Self::nan();
        }
        let prec = self.prec;
        if self.man.is_zero() {
            return Self::from_biguint(false, BigUint::one(), prec);
        }
        let approx = self.to_f64();
        if !approx.is_finite() || approx.abs() > 1e15 {
            return Self::nan();
        }
        let k = (approx / std::f64::consts::LN_2).round() as i64;
        let halvings = (f64::from(prec).sqrt() as u64) / 2 + 2;
        let frac = u64::from(prec) + halvings + 64;
        let k_bits = 64 - k.unsigned_abs().leading_zeros() as u64;
        let ln2 = BigInt::from(Self::ln2_fixed(frac + k_bits + 8));
        // r = x - k ln 2, |r| <= ln2/2 (approximately)
        let r = self.to_fixed(frac) - ((ln2 * BigInt::from(k)) >> (k_bits + 8) as usize);
        let one = BigInt::one() << frac as usize;
        let mut sum = one.clone();
        let mut term = one;
        let scale = (frac + halvings) as usize;
        let mut i: u32 = 1;
        loop {
            term = (term * &r) >> scale;
            term /= BigInt::from(i);
            if term.is_zero() {
                break;
            }
            sum += &term;
            i += 1;
        }
        for _ in 0..halvings {
            sum = (&sum * &sum) >> frac as usize;
        }
        let (_, mag) = sum.into_parts();
        Self::from_parts(false, mag, k - frac as i64, prec, false)
    }

    fn ln_impl(&self) -> Self {
        if self.nan || self.neg || self.man.is_zero() {
            return Self::nan();
        }
        let prec = self.prec;
        let bits = self.man.bits();
        // x = m * 2^e with m in [1, 2)
        let mut e = self.exp + bits as i64 - 1;
        let sqrt_count: u32 = 8;
        let mut frac = u64::from(prec) + 64 + u64::from(sqrt_count);
        let mantissa_fixed = |frac: u64| -> BigUint {
            let s = frac as i64 - (bits as i64 - 1);
            if s >= 0 {
                &self.man << s as u64
            } else {
                &self.man >> (-s) as u64
            }
        };
        let mut m = mantissa_fixed(frac);
        let sqrt2 = (BigUint::from(2u32) << (2 * frac) as usize).sqrt();
        let halve = m > sqrt2;
        if halve {
            m >>= 1u32;
            e += 1;
        }
        if e == 0 {
            // ln of a value near 1: extend the fixed-point width by the number
            // of leading zeros of |m - 1| so the relative accuracy is kept.
            let one = BigUint::one() << frac as usize;
            let d = if m > one { &m - &one } else { &one - &m };
            if d.is_zero() {
                return Self::zero_with_prec(prec);
            }
            let lz = frac.saturating_sub(d.bits());
            if lz > 0 {
                frac += lz;
                m = mantissa_fixed(frac);
                if halve {
                    m >>= 1u32;
                }
            }
        }
        let one = BigUint::one() << frac as usize;
        for _ in 0..sqrt_count {
            m = (m << frac as usize).sqrt();
        }
        // ln m = 2 atanh((m-1)/(m+1))
        let num = BigInt::from(m.clone()) - BigInt::from(one.clone());
        let den = BigInt::from(m + &one);
        let t = (num << frac as usize) / den;
        let t2 = (&t * &t) >> frac as usize;
        let mut sum = t.clone();
        let mut power = t;
        let mut k: u64 = 1;
        loop {
            power = (power * &t2) >> frac as usize;
            k += 2;
            let term = &power / BigInt::from(k);
            if term.is_zero() {
                break;
            }
            sum += term;
        }
        let mut total = sum << (sqrt_count + 1) as usize;
        if e != 0 {
            total += BigInt::from(Self::ln2_fixed(frac)) * BigInt::from(e);
        }
        Self::from_fixed(total, frac, prec)
    }

    fn sqrt_impl(&self) -> Self {
        if self.nan || (self.neg && !self.man.is_zero()) {
            return Self::nan();
        }
        let prec = self.prec;
        if self.man.is_zero() {
            return Self::zero_with_prec(prec);
        }
        let want = 2 * u64::from(prec) + 4;
        let mut shift = want.saturating_sub(self.man.bits()) as i64;
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let m = &self.man << shift as u64;
        let r = m.sqrt();
        let exact = &r * &r == m;
        Self::from_parts(false, r, (self.exp - shift) / 2, prec, !exact)
    }

    fn parse_with_bits(s: &str, bits: u32) -> Result<Self> {
        let err = || Error::ParseScalar(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.as_bytes().first() {
            Some(b'-') => (true, &t[1..]),
            Some(b'+') => (false, &t[1..]),
            _ => (false, t),
        };
        let (mantissa, exp10) = match body.find(['e', 'E']) {
            Some(i) => (
                &body[..i],
                body[i + 1..].parse::<i64>().map_err(|_| err())?,
            ),
            None => (body, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let d = BigUint::parse_bytes(if digits.is_empty() { b"0" } else { digits.as_bytes() }, 10)
            .ok_or_else(err)?;
        let e10 = exp10 - frac_part.len() as i64;
        if e10.unsigned_abs() > 100_000 {
            return Err(err());
        }
        let ten = BigUint::from(10u32);
        let value = if e10 >= 0 {
            Self::from_biguint(neg, d * ten.pow(e10 as u32), bits)
        } else {
            let n = Self::from_parts(neg, d, 0, bits + 64, false);
            let den = Self::from_parts(false, ten.pow((-e10) as u32), 0, bits + 64, false);
            n.div_ref(&den).with_prec(bits)
        };
        Ok(value)
    }

    fn sci_digits(&self, sig: usize) -> String {
        if self.nan {
            return "NaN".to_string();
        }
        if self.man.is_zero() {
            return format!("{:.*e}", sig.saturating_sub(1), 0.0);
        }
        let sig = sig.max(1);
        let work = self.prec.max((sig as f64 * super::LOG2_10) as u32 + 64) + 32;
        let x = self.abs_impl().with_prec(work);
        let mut e10 = (x.ln_abs_f64() * std::f64::consts::LOG10_E).floor() as i64;
        let bound = BigUint::from(10u32).pow(sig as u32);
        for _ in 0..3 {
            let k = sig as i64 - 1 - e10;
            let scaled = if k >= 0 {
                x.mul_ref(&Self::from_biguint(false, BigUint::from(10u32).pow(k as u32), work))
            } else {
                x.div_ref(&Self::from_biguint(false, BigUint::from(10u32).pow((-k) as u32), work))
            };
            let n = scaled.to_fixed(0);
            let (_, n) = n.into_parts();
            if n >= bound {
                e10 += 1;
                continue;
            }
            if n < BigUint::from(10u32).pow(sig as u32 - 1) {
                e10 -= 1;
                continue;
            }
            let digits = n.to_str_radix(10);
            let sign = if self.neg { "-" } else { "" };
            let (head, tail) = digits.split_at(1);
            return if tail.is_empty() {
                format!("{sign}{head}e{e10}")
            } else {
                format!("{sign}{head}.{tail}e{e10}")
            };
        }
        format!("{:e}", self.to_f64())
    }

    fn abs_impl(&self) -> Self {
        let mut r = self.clone();
        r.neg = false;
        r
    }
}

fn ln2_series(frac_bits: u64) -> BigUint {
    // ln 2 = 2 * sum_k 1 / ((2k+1) 3^(2k+1))
    let mut power = (BigUint::one() << frac_bits as usize) / 3u32;
    let mut sum = power.clone();
    let mut k: u64 = 1;
    loop {
        power /= 9u32;
        if power.is_zero() {
            break;
        }
        sum += &power / (2 * k + 1);
        k += 1;
    }
    sum << 1u32
}

fn ldexp(x: f64, e: i64) -> f64 {
    let mut v = x;
    let mut e = e;
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

impl fmt::Debug for Mpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mpf({}, {} bits)", self.sci_digits(20), self.prec)
    }
}

impl fmt::Display for Mpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sig = f.precision().unwrap_or(20);
        f.write_str(&self.sci_digits(sig))
    }
}

impl PartialEq for Mpf {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Mpf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.nan || other.nan {
            return None;
        }
        let a_zero = self.man.is_zero();
        let b_zero = other.man.is_zero();
        let a_neg = self.neg && !a_zero;
        let b_neg = other.neg && !b_zero;
        Some(match (a_neg, b_neg) {
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
            (false, false) => self.cmp_magnitude(other),
            (true, true) => other.cmp_magnitude(self),
        })
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $body:expr) => {
        impl $tr<Mpf> for Mpf {
            type Output = Mpf;
            fn $method(self, rhs: Mpf) -> Mpf {
                $body(&self, &rhs)
            }
        }
        impl<'a> $tr<&'a Mpf> for Mpf {
            type Output = Mpf;
            fn $method(self, rhs: &'a Mpf) -> Mpf {
                $body(&self, rhs)
            }
        }
        impl<'a> $tr<&'a Mpf> for &'a Mpf {
            type Output = Mpf;
            fn $method(self, rhs: &'a Mpf) -> Mpf {
                $body(self, rhs)
            }
        }
    };
}

forward_binop!(Add, add, |a: &Mpf, b: &Mpf| a.add_signed(b, false));
forward_binop!(Sub, sub, |a: &Mpf, b: &Mpf| a.add_signed(b, true));
forward_binop!(Mul, mul, |a: &Mpf, b: &Mpf| a.mul_ref(b));
forward_binop!(Div, div, |a: &Mpf, b: &Mpf| a.div_ref(b));
forward_binop!(Rem, rem, |a: &Mpf, b: &Mpf| {
    let q = a.div_ref(b).trunc();
    a.add_signed(&q.mul_ref(b), true)
});

impl Neg for Mpf {
    type Output = Mpf;
    fn neg(mut self) -> Mpf {
        if !self.man.is_zero() {
            self.neg = !self.neg;
        }
        self
    }
}

impl Zero for Mpf {
    fn zero() -> Self {
        Self::zero_with_prec(DEFAULT_BITS)
    }
    fn is_zero(&self) -> bool {
        !self.nan && self.man.is_zero()
    }
}

impl One for Mpf {
    fn one() -> Self {
        Self::from_biguint(false, BigUint::one(), DEFAULT_BITS)
    }
}

impl Num for Mpf {
    type FromStrRadixErr = Error;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self> {
        if radix != 10 {
            return Err(Error::ParseScalar(format!("radix {radix} unsupported: {s}")));
        }
        let bits = ((s.len() as f64) * super::LOG2_10) as u32 + DEFAULT_BITS;
        Self::parse_with_bits(s, bits)
    }
}

impl Real for Mpf {
    fn from_i64(n: i64, ctx: &PrecisionContext) -> Self {
        Self::from_biguint(n < 0, BigUint::from(n.unsigned_abs()), ctx.bits())
    }

    fn from_f64(x: f64, ctx: &PrecisionContext) -> Self {
        if !x.is_finite() {
            return Self::nan();
        }
        let (mantissa, exponent, sign) = num_traits::Float::integer_decode(x);
        Self::from_parts(
            sign < 0,
            BigUint::from(mantissa),
            i64::from(exponent),
            ctx.bits(),
            false,
        )
    }

    fn parse_decimal(s: &str, ctx: &PrecisionContext) -> Result<Self> {
        Self::parse_with_bits(s, ctx.bits())
    }

    fn to_f64(&self) -> f64 {
        if self.nan {
            return f64::NAN;
        }
        if self.man.is_zero() {
            return 0.0;
        }
        let bits = self.man.bits();
        let top = self.top() - 1;
        let v = if top > 1024 {
            f64::INFINITY
        } else if top < -1080 {
            0.0
        } else {
            let (m64, e) = if bits > 64 {
                ((&self.man >> (bits - 64)).to_u64().unwrap_or(u64::MAX), self.exp + (bits - 64) as i64)
            } else {
                (self.man.to_u64().unwrap_or(u64::MAX), self.exp)
            };
            ldexp(m64 as f64, e)
        };
        if self.neg {
            -v
        } else {
            v
        }
    }

    fn ln_abs_f64(&self) -> f64 {
        if self.nan {
            return f64::NAN;
        }
        if self.man.is_zero() {
            return f64::NEG_INFINITY;
        }
        let bits = self.man.bits();
        let head = if bits > 53 {
            (&self.man >> (bits - 53)).to_u64().unwrap_or(0)
        } else {
            self.man.to_u64().unwrap_or(0) << (53 - bits)
        };
        let frac = head as f64 / (1u64 << 52) as f64;
        frac.ln() + (self.top() - 1) as f64 * std::f64::consts::LN_2
    }

    fn abs(&self) -> Self {
        self.abs_impl()
    }

    fn sqrt(&self) -> Self {
        self.sqrt_impl()
    }

    fn exp(&self) -> Self {
        self.exp_impl()
    }

    fn ln(&self) -> Self {
        self.ln_impl()
    }

    fn is_finite(&self) -> bool {
        !self.nan
    }

    fn effective_digits(ctx: &PrecisionContext) -> u32 {
        ctx.digits()
    }

    fn to_sci_string(&self, sig: usize) -> String {
        self.sci_digits(sig)
    }

    fn pow10(k: i32, ctx: &PrecisionContext) -> Self {
        let bits = ctx.bits();
        let p = Self::from_biguint(false, BigUint::from(10u32).pow(k.unsigned_abs()), bits + 16);
        if k < 0 {
            Self::from_biguint(false, BigUint::one(), bits).div_ref(&p).with_prec(bits)
        } else {
            p.with_prec(bits)
        }
    }
}
