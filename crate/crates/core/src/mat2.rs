//! 2x2 complex matrices and 2-vectors over a [`Real`] field.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{PrecisionContext, Real};

pub type Cx<R> = Complex<R>;

pub fn c_real<R: Real>(x: R) -> Cx<R> {
    Complex::new(x, R::zero())
}

pub fn c_abs<R: Real>(z: &Cx<R>) -> R {
    if z.im.is_zero() {
        return z.re.abs();
    }
    if z.re.is_zero() {
        return z.im.abs();
    }
    (z.re.clone() * z.re.clone() + z.im.clone() * z.im.clone()).sqrt()
}

/// Principal square root.
pub fn c_sqrt<R: Real>(z: &Cx<R>) -> Cx<R> {
    if z.im.is_zero() {
        return if z.re >= R::zero() {
            c_real(z.re.sqrt())
        } else {
            Complex::new(R::zero(), (-z.re.clone()).sqrt())
        };
    }
    let two = R::one() + R::one();
    let m = c_abs(z);
    let re = ((m.clone() + z.re.clone()) / two.clone()).sqrt();
    let im = ((m - z.re.clone()) / two).sqrt();
    if z.im < R::zero() {
        Complex::new(re, -im)
    } else {
        Complex::new(re, im)
    }
}

#[derive(Clone, PartialEq)]
pub struct Vec2<R: Real>(pub [Cx<R>; 2]);

impl<R: Real> Vec2<R> {
    pub fn new(x: Cx<R>, y: Cx<R>) -> Self {
        Self([x, y])
    }

    pub fn real(x: R, y: R) -> Self {
        Self([c_real(x), c_real(y)])
    }

    pub fn e1(ctx: &PrecisionContext) -> Self {
        Self::real(R::from_i64(1, ctx), R::from_i64(0, ctx))
    }

    pub fn e2(ctx: &PrecisionContext) -> Self {
        Self::real(R::from_i64(0, ctx), R::from_i64(1, ctx))
    }

    pub fn x(&self) -> &Cx<R> {
        &self.0[0]
    }

    pub fn y(&self) -> &Cx<R> {
        &self.0[1]
    }

    pub fn scale(&self, s: &Cx<R>) -> Self {
        Self([s.clone() * self.0[0].clone(), s.clone() * self.0[1].clone()])
    }

    pub fn scale_real(&self, s: &R) -> Self {
        Self([self.0[0].clone() * s.clone(), self.0[1].clone() * s.clone()])
    }

    /// Max-modulus of the components (the vector infinity norm).
    pub fn norm(&self) -> R {
        max_r(c_abs(&self.0[0]), c_abs(&self.0[1]))
    }

    pub fn norm2(&self) -> R {
        let a = c_abs(&self.0[0]);
        let b = c_abs(&self.0[1]);
        (a.clone() * a + b.clone() * b).sqrt()
    }

    /// `x1 y2 - x2 y1`.
    pub fn cross(&self, other: &Self) -> Cx<R> {
        self.0[0].clone() * other.0[1].clone() - self.0[1].clone() * other.0[0].clone()
    }

    pub fn is_zero(&self) -> bool {
        self.0[0].is_zero() && self.0[1].is_zero()
    }

    pub fn to_f64(&self) -> [[f64; 2]; 2] {
        [
            [self.0[0].re.to_f64(), self.0[0].im.to_f64()],
            [self.0[1].re.to_f64(), self.0[1].im.to_f64()],
        ]
    }
}

impl<R: Real> Add for Vec2<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let [a, b] = self.0;
        let [c, d] = rhs.0;
        Self([a + c, b + d])
    }
}

impl<R: Real> Sub for Vec2<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let [a, b] = self.0;
        let [c, d] = rhs.0;
        Self([a - c, b - d])
    }
}

impl<R: Real> fmt::Debug for Vec2<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.0[0], self.0[1])
    }
}

#[derive(Clone, PartialEq)]
pub struct Mat2<R: Real>(pub [[Cx<R>; 2]; 2]);

impl<R: Real> Mat2<R> {
    pub fn new(a: Cx<R>, b: Cx<R>, c: Cx<R>, d: Cx<R>) -> Self {
        Self([[a, b], [c, d]])
    }

    pub fn real(a: R, b: R, c: R, d: R) -> Self {
        Self([[c_real(a), c_real(b)], [c_real(c), c_real(d)]])
    }

    pub fn from_i64(m: [[i64; 2]; 2], ctx: &PrecisionContext) -> Self {
        let r = |v: i64| R::from_i64(v, ctx);
        Self::real(r(m[0][0]), r(m[0][1]), r(m[1][0]), r(m[1][1]))
    }

    pub fn identity(ctx: &PrecisionContext) -> Self {
        Self::from_i64([[1, 0], [0, 1]], ctx)
    }

    pub fn zero(ctx: &PrecisionContext) -> Self {
        Self::from_i64([[0, 0], [0, 0]], ctx)
    }

    pub fn diag(a: Cx<R>, d: Cx<R>) -> Self {
        let z = Cx::<R>::zero();
        Self([[a, z.clone()], [z, d]])
    }

    pub fn get(&self, i: usize, j: usize) -> &Cx<R> {
        &self.0[i][j]
    }

    pub fn det(&self) -> Cx<R> {
        let [[a, b], [c, d]] = &self.0;
        a.clone() * d.clone() - b.clone() * c.clone()
    }

    pub fn trace(&self) -> Cx<R> {
        self.0[0][0].clone() + self.0[1][1].clone()
    }

    /// `trace^2 - 4 det`.
    pub fn discriminant(&self) -> Cx<R> {
        let t = self.trace();
        let four = R::one() + R::one() + R::one() + R::one();
        t.clone() * t - self.det() * four
    }

    pub fn adjugate(&self) -> Self {
        let [[a, b], [c, d]] = &self.0;
        Self([[d.clone(), -b.clone()], [-c.clone(), a.clone()]])
    }

    /// Inverse by the adjugate formula, refused when `|det|` is below
    /// `10^-(digits-10) * norm^2`.
    pub fn inverse(&self, ctx: &PrecisionContext) -> Option<Self> {
        let det = self.det();
        let n = self.norm();
        if n.is_zero() {
            return None;
        }
        if c_abs(&det) <= R::tolerance(10, ctx) * n.clone() * n {
            return None;
        }
        let inv = Cx::<R>::one() / det;
        Some(self.adjugate().scale(&inv))
    }

    pub fn inverse_at(&self, index: i64, ctx: &PrecisionContext) -> Result<Self> {
        self.inverse(ctx).ok_or(Error::Singular { index })
    }

    pub fn transpose(&self) -> Self {
        let [[a, b], [c, d]] = &self.0;
        Self([[a.clone(), c.clone()], [b.clone(), d.clone()]])
    }

    pub fn scale(&self, s: &Cx<R>) -> Self {
        Self(self.0.clone().map(|row| row.map(|e| e * s.clone())))
    }

    pub fn scale_real(&self, s: &R) -> Self {
        Self(self.0.clone().map(|row| row.map(|e| e * s.clone())))
    }

    /// Max-modulus entry.
    pub fn norm(&self) -> R {
        self.0
            .iter()
            .flatten()
            .map(c_abs)
            .fold(R::zero(), max_r)
    }

    /// Induced infinity norm (max row sum of moduli).
    pub fn row_sum_norm(&self) -> R {
        self.0
            .iter()
            .map(|row| c_abs(&row[0]) + c_abs(&row[1]))
            .fold(R::zero(), max_r)
    }

    pub fn apply(&self, v: &Vec2<R>) -> Vec2<R> {
        let [[a, b], [c, d]] = &self.0;
        let [x, y] = &v.0;
        Vec2([
            a.clone() * x.clone() + b.clone() * y.clone(),
            c.clone() * x.clone() + d.clone() * y.clone(),
        ])
    }

    pub fn column(&self, j: usize) -> Vec2<R> {
        Vec2([self.0[0][j].clone(), self.0[1][j].clone()])
    }

    pub fn from_columns(c0: &Vec2<R>, c1: &Vec2<R>) -> Self {
        Self([
            [c0.0[0].clone(), c1.0[0].clone()],
            [c0.0[1].clone(), c1.0[1].clone()],
        ])
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.clone() * other.clone() - other.clone() * self.clone()
    }

    pub fn to_f64(&self) -> [[[f64; 2]; 2]; 2] {
        self.0
            .clone()
            .map(|row| row.map(|e| [e.re.to_f64(), e.im.to_f64()]))
    }
}

fn max_r<R: Real>(a: R, b: R) -> R {
    if b > a {
        b
    } else {
        a
    }
}

impl<R: Real> Mul for Mat2<R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        &self * &rhs
    }
}

impl<'a, R: Real> Mul<&'a Mat2<R>> for &'a Mat2<R> {
    type Output = Mat2<R>;
    fn mul(self, rhs: &'a Mat2<R>) -> Mat2<R> {
        let [[a, b], [c, d]] = &self.0;
        let [[e, f], [g, h]] = &rhs.0;
        Mat2([
            [
                a.clone() * e.clone() + b.clone() * g.clone(),
                a.clone() * f.clone() + b.clone() * h.clone(),
            ],
            [
                c.clone() * e.clone() + d.clone() * g.clone(),
                c.clone() * f.clone() + d.clone() * h.clone(),
            ],
        ])
    }
}

impl<R: Real> Add for Mat2<R> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = rhs.0;
        Self([[a + e, b + f], [c + g, d + h]])
    }
}

impl<R: Real> Sub for Mat2<R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.0;
        let [[e, f], [g, h]] = rhs.0;
        Self([[a - e, b - f], [c - g, d - h]])
    }
}

impl<R: Real> Neg for Mat2<R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|row| row.map(|e| -e)))
    }
}

impl<R: Real> fmt::Debug for Mat2<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [[a, b], [c, d]] = &self.0;
        write!(f, "[[{a}, {b}], [{c}, {d}]]")
    }
}

/// `B_{n2} ... B_{n1}`, highest index leftmost.
pub fn chrono_product<R, F>(factors: F, n1: i64, n2: i64, ctx: &PrecisionContext) -> Result<Mat2<R>>
where
    R: Real,
    F: Fn(i64) -> Mat2<R>,
{
    if n1 > n2 {
        return Err(Error::InvalidArgument(format!(
            "chronological product needs n1 <= n2, got {n1} > {n2}"
        )));
    }
    let mut acc = Mat2::identity(ctx);
    for k in n1..=n2 {
        acc = &factors(k) * &acc;
    }
    Ok(acc)
}

/// Result of conjugating a matrix sequence by `T_n`.
#[derive(Clone, Debug)]
pub struct Telescope<R: Real> {
    pub first_index: i64,
    /// `C_n = T_{n+1}^{-1} A_n T_n` for `n = first_index..`.
    pub conjugated: Vec<Mat2<R>>,
    /// `|| prod A_n - T_{n2+1} (prod C_n) T_{n1}^{-1} ||`.
    pub identity_check: R,
    /// `identity_check` divided by the norm of `prod A_n`.
    pub relative_check: R,
}

impl<R: Real> Telescope<R> {
    pub fn get(&self, n: i64) -> Option<&Mat2<R>> {
        usize::try_from(n - self.first_index)
            .ok()
            .and_then(|i| self.conjugated.get(i))
    }
}

pub fn telescope<R, FA, FT>(
    a: FA,
    t: FT,
    n1: i64,
    n2: i64,
    ctx: &PrecisionContext,
) -> Result<Telescope<R>>
where
    R: Real,
    FA: Fn(i64) -> Mat2<R>,
    FT: Fn(i64) -> Mat2<R>,
{
    if n1 > n2 {
        return Err(Error::InvalidArgument(format!(
            "telescope needs n1 <= n2, got {n1} > {n2}"
        )));
    }
    let mut conjugated = Vec::with_capacity((n2 - n1 + 1) as usize);
    let mut lhs = Mat2::identity(ctx);
    let mut c_prod = Mat2::identity(ctx);
    let t_first = t(n1);
    let t_first_inv = t_first.inverse_at(n1, ctx)?;
    let mut t_cur = t_first;
    for n in n1..=n2 {
        let a_n = a(n);
        let t_next = t(n + 1);
        let t_next_inv = t_next.inverse_at(n + 1, ctx)?;
        let c = &(&t_next_inv * &a_n) * &t_cur;
        lhs = &a_n * &lhs;
        c_prod = &c * &c_prod;
        conjugated.push(c);
        t_cur = t_next;
    }
    let rhs = &(&t_cur * &c_prod) * &t_first_inv;
    let identity_check = (lhs.clone() - rhs).norm();
    let scale = lhs.norm();
    let relative_check = if scale.is_zero() {
        identity_check.clone()
    } else {
        identity_check.clone() / scale
    };
    Ok(Telescope {
        first_index: n1,
        conjugated,
        identity_check,
        relative_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Mpf;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(50).unwrap()
    }

    fn m(v: [[i64; 2]; 2]) -> Mat2<Mpf> {
        Mat2::from_i64(v, &ctx())
    }

    #[test]
    fn products() {
        let c = ctx();
        let i = Mat2::<Mpf>::identity(&c);
        assert_eq!(&i * &i, i);
        let n = m([[0, 1], [-1, 2]]);
        assert_eq!(&n * &i, n);
        let j = m([[1, 1], [0, 1]]);
        assert_eq!(&j * &j, m([[1, 2], [0, 1]]));
    }

    #[test]
    fn det_trace_inverse() {
        let c = ctx();
        let a = m([[2, 1], [7, 4]]);
        assert_eq!(a.det(), c_real(Mpf::from_i64(1, &c)));
        assert_eq!(a.trace(), c_real(Mpf::from_i64(6, &c)));
        assert_eq!(a.discriminant(), c_real(Mpf::from_i64(32, &c)));
        let inv = a.inverse(&c).unwrap();
        assert_eq!(&a * &inv, Mat2::identity(&c));
        assert!(m([[1, 2], [2, 4]]).inverse(&c).is_none());
        assert!(matches!(
            m([[1, 2], [2, 4]]).inverse_at(7, &c),
            Err(Error::Singular { index: 7 })
        ));
    }

    #[test]
    fn norms() {
        let a = m([[1, -3], [2, 2]]);
        assert_eq!(a.norm().to_f64(), 3.0);
        assert_eq!(a.row_sum_norm().to_f64(), 4.0);
    }

    #[test]
    fn complex_sqrt() {
        let c = ctx();
        let z = Complex::new(Mpf::from_i64(-4, &c), Mpf::from_i64(0, &c));
        let r = c_sqrt(&z);
        assert_eq!(r.im.to_f64(), 2.0);
        let w = Complex::new(Mpf::from_i64(3, &c), Mpf::from_i64(4, &c));
        let s = c_sqrt(&w);
        assert!((s.re.to_f64() - 2.0).abs() < 1e-30 && (s.im.to_f64() - 1.0).abs() < 1e-30);
    }

    #[test]
    fn chrono_examples() {
        let c = ctx();
        let a = m([[3, 1], [1, 1]]);
        assert_eq!(chrono_product(|_| a.clone(), 4, 4, &c).unwrap(), a);
        assert_eq!(
            chrono_product(|_| Mat2::<Mpf>::identity(&c), 1, 30, &c).unwrap(),
            Mat2::identity(&c)
        );
        // prod_{k=1}^{n} diag(1 - 1/(k+1), 1) = diag(1/(n+1), 1)
        let n = 40;
        let p = chrono_product(
            |k| {
                let one = Mpf::from_i64(1, &c);
                Mat2::real(
                    one.clone() - Mpf::from_ratio(1, k + 1, &c),
                    Mpf::from_i64(0, &c),
                    Mpf::from_i64(0, &c),
                    one,
                )
            },
            1,
            n,
            &c,
        )
        .unwrap();
        let expect = Mpf::from_ratio(1, n + 1, &c);
        let diff = (p.get(0, 0).re.clone() - expect).abs();
        assert!(diff < Mpf::tolerance(5, &c));
        // order: highest index leftmost
        let ordered = chrono_product(|k| m([[1, k], [0, 1]]) * m([[k, 0], [0, 1]]), 1, 2, &c).unwrap();
        let manual = &(m([[1, 2], [0, 1]]) * m([[2, 0], [0, 1]])) * &(m([[1, 1], [0, 1]]) * m([[1, 0], [0, 1]]));
        assert_eq!(ordered, manual);
        assert!(chrono_product(|_| a.clone(), 3, 2, &c).is_err());
    }

    #[test]
    fn telescope_trivial_cases() {
        let c = ctx();
        let a = |n: i64| m([[n, 1], [2, -n]]);
        let tel = telescope(a, |_| Mat2::identity(&c), 1, 10, &c).unwrap();
        assert!(tel.identity_check.is_zero());
        assert_eq!(tel.get(3).unwrap(), &a(3));
        let t = |n: i64| m([[1, n], [1, n + 1]]);
        let tel = telescope(|_| Mat2::identity(&c), t, 1, 10, &c).unwrap();
        let prod = chrono_product(|n| tel.get(n).unwrap().clone(), 1, 10, &c).unwrap();
        let expect = &t(11).inverse(&c).unwrap() * &t(1);
        assert!((prod - expect).norm() < Mpf::tolerance(10, &c));
        assert!(tel.identity_check < Mpf::tolerance(10, &c));
    }

    #[test]
    fn telescope_reports_singular_index() {
        let c = ctx();
        let t = |n: i64| if n == 5 { m([[1, 1], [1, 1]]) } else { Mat2::identity(&c) };
        let r = telescope(|_| Mat2::<Mpf>::identity(&c), t, 1, 10, &c);
        assert!(matches!(r, Err(Error::Singular { index: 5 })));
    }
}
