//! Truncated Taylor arithmetic.
//!
//! Every closed-form field in this crate is written once, generically over
//! [`Scalar`], and evaluated with `f64` for values, [`Jet1`] for gradients and
//! [`Jet2`] for gradients plus Hessians. Finite differences only appear in tests.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Additive/multiplicative structure needed by the form algebra.
///
/// Implemented by real scalars and by [`Cx`], so wedge products and
/// contractions work for complex forms too.
pub trait Ring:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
{
    fn zero() -> Self;
    fn scale(self, k: f64) -> Self;
}

/// A real scalar that supports the elementary functions used by the metric
/// and form formulas.
pub trait Scalar:
    Ring
    + Div<Output = Self>
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    /// The zeroth-order (point) value.
    fn value(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn tan(self) -> Self;
    fn sqrt(self) -> Self;
    fn ln(self) -> Self;
    fn exp(self) -> Self;
    fn powf(self, e: f64) -> Self;
    fn recip(self) -> Self;

    fn cot(self) -> Self {
        self.tan().recip()
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::cst(1.0),
            n if n < 0 => self.powi(-n).recip(),
            n => {
                let mut acc = self;
                for _ in 1..n {
                    acc = acc * self;
                }
                acc
            }
        }
    }
    fn one() -> Self {
        Self::cst(1.0)
    }
}

/// Scalars carrying partial derivatives with respect to `N` seeded variables.
pub trait Differentiable<const N: usize>: Scalar {
    /// Same scalar with one derivative order removed.
    type Lower: Scalar;
    /// Independent variable number `i` with the given value.
    fn variable(value: f64, i: usize) -> Self;
    /// `∂/∂x_i` of this scalar, itself carrying the remaining derivative orders.
    fn partial(&self, i: usize) -> Self::Lower;
    fn lower(&self) -> Self::Lower;
}

impl Ring for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn tan(self) -> Self {
        f64::tan(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn powf(self, e: f64) -> Self {
        f64::powf(self, e)
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn cot(self) -> Self {
        self.cos() / self.sin()
    }
}

/// First-order jet: value and gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet1<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

impl<const N: usize> Jet1<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; N] }
    }

    #[inline]
    fn chain(self, f0: f64, f1: f64) -> Self {
        let mut g = self.g;
        for gi in &mut g {
            *gi *= f1;
        }
        Self { v: f0, g }
    }
}

/// Second-order jet: value, gradient and symmetric Hessian.
///
/// Only the upper triangle is computed; the lower triangle is mirrored, so
/// `h[i][j] == h[j][i]` holds bit-for-bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Jet2<N> {
    pub fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    pub fn truncate(&self) -> Jet1<N> {
        Jet1 { v: self.v, g: self.g }
    }

    #[inline]
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..N {
            out.g[i] = f1 * self.g[i];
            for j in i..N {
                let hij = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
                out.h[i][j] = hij;
                out.h[j][i] = hij;
            }
        }
        out
    }
}

macro_rules! jet_common {
    ($jet:ident) => {
        impl<const N: usize> Add for $jet<N> {
            type Output = Self;
            #[inline]
            fn add(mut self, rhs: Self) -> Self {
                self += rhs;
                self
            }
        }
        impl<const N: usize> Sub for $jet<N> {
            type Output = Self;
            #[inline]
            fn sub(mut self, rhs: Self) -> Self {
                self -= rhs;
                self
            }
        }
        impl<const N: usize> Div for $jet<N> {
            type Output = Self;
            #[inline]
            fn div(self, rhs: Self) -> Self {
                self * rhs.recip()
            }
        }
        impl<const N: usize> MulAssign for $jet<N> {
            #[inline]
            fn mul_assign(&mut self, rhs: Self) {
                *self = *self * rhs;
            }
        }
        impl<const N: usize> Add<f64> for $jet<N> {
            type Output = Self;
            #[inline]
            fn add(mut self, rhs: f64) -> Self {
                self.v += rhs;
                self
            }
        }
        impl<const N: usize> Sub<f64> for $jet<N> {
            type Output = Self;
            #[inline]
            fn sub(mut self, rhs: f64) -> Self {
                self.v -= rhs;
                self
            }
        }
        impl<const N: usize> Div<f64> for $jet<N> {
            type Output = Self;
            #[inline]
            fn div(self, rhs: f64) -> Self {
                self * (1.0 / rhs)
            }
        }
        impl<const N: usize> Mul<$jet<N>> for f64 {
            type Output = $jet<N>;
            #[inline]
            fn mul(self, rhs: $jet<N>) -> $jet<N> {
                rhs * self
            }
        }
        impl<const N: usize> Add<$jet<N>> for f64 {
            type Output = $jet<N>;
            #[inline]
            fn add(self, rhs: $jet<N>) -> $jet<N> {
                rhs + self
            }
        }
        impl<const N: usize> Sub<$jet<N>> for f64 {
            type Output = $jet<N>;
            #[inline]
            fn sub(self, rhs: $jet<N>) -> $jet<N> {
                -rhs + self
            }
        }
        impl<const N: usize> Ring for $jet<N> {
            #[inline]
            fn zero() -> Self {
                Self::constant(0.0)
            }
            #[inline]
            fn scale(self, k: f64) -> Self {
                self * k
            }
        }
    };
}

jet_common!(Jet1);
jet_common!(Jet2);

impl<const N: usize> AddAssign for Jet1<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
        }
    }
}

impl<const N: usize> SubAssign for Jet1<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
        }
    }
}

impl<const N: usize> Neg for Jet1<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Mul for Jet1<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = self.v * rhs.g[i] + rhs.v * self.g[i];
        }
        Self {
            v: self.v * rhs.v,
            g,
        }
    }
}

impl<const N: usize> Mul<f64> for Jet1<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.v *= rhs;
        for gi in &mut self.g {
            *gi *= rhs;
        }
        self
    }
}

impl<const N: usize> Scalar for Jet1<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        self.chain(t, 1.0 + t * t)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn powf(self, e: f64) -> Self {
        self.chain(self.v.powf(e), e * self.v.powf(e - 1.0))
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }
    fn cot(self) -> Self {
        let t = self.v.cos() / self.v.sin();
        self.chain(t, -(1.0 + t * t))
    }
}

impl<const N: usize> Differentiable<N> for Jet1<N> {
    type Lower = f64;
    fn variable(value: f64, i: usize) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }
    #[inline]
    fn partial(&self, i: usize) -> f64 {
        self.g[i]
    }
    fn lower(&self) -> f64 {
        self.v
    }
}

impl<const N: usize> AddAssign for Jet2<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
            for j in 0..N {
                self.h[i][j] += rhs.h[i][j];
            }
        }
    }
}

impl<const N: usize> SubAssign for Jet2<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
            for j in 0..N {
                self.h[i][j] -= rhs.h[i][j];
            }
        }
    }
}

impl<const N: usize> Neg for Jet2<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Mul for Jet2<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::constant(self.v * rhs.v);
        for i in 0..N {
            out.g[i] = self.v * rhs.g[i] + rhs.v * self.g[i];
            for j in i..N {
                let hij = self.v * rhs.h[i][j]
                    + rhs.v * self.h[i][j]
                    + (self.g[i] * rhs.g[j] + rhs.g[i] * self.g[j]);
                out.h[i][j] = hij;
                out.h[j][i] = hij;
            }
        }
        out
    }
}

impl<const N: usize> Mul<f64> for Jet2<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.v *= rhs;
        for i in 0..N {
            self.g[i] *= rhs;
            for j in 0..N {
                self.h[i][j] *= rhs;
            }
        }
        self
    }
}

impl<const N: usize> Scalar for Jet2<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.v.tan();
        let d = 1.0 + t * t;
        self.chain(t, d, 2.0 * t * d)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn powf(self, e: f64) -> Self {
        let v = self.v;
        self.chain(
            v.powf(e),
            e * v.powf(e - 1.0),
            e * (e - 1.0) * v.powf(e - 2.0),
        )
    }
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
    fn cot(self) -> Self {
        let t = self.v.cos() / self.v.sin();
        let d = 1.0 + t * t;
        self.chain(t, -d, 2.0 * t * d)
    }
}

impl<const N: usize> Differentiable<N> for Jet2<N> {
    type Lower = Jet1<N>;
    fn variable(value: f64, i: usize) -> Self {
        let mut j = Self::constant(value);
        j.g[i] = 1.0;
        j
    }
    #[inline]
    fn partial(&self, i: usize) -> Jet1<N> {
        Jet1 {
            v: self.g[i],
            g: self.h[i],
        }
    }
    fn lower(&self) -> Jet1<N> {
        self.truncate()
    }
}

/// Seeds `values` as the independent variables `0..N`.
pub fn seed<T: Differentiable<N>, const N: usize>(values: &[f64; N]) -> [T; N] {
    std::array::from_fn(|i| T::variable(values[i], i))
}

/// Minimal complex number over any real [`Scalar`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }
    pub fn real(re: T) -> Self {
        Self { re, im: T::zero() }
    }
    pub fn imag(im: T) -> Self {
        Self { re: T::zero(), im }
    }
    pub fn i() -> Self {
        Self::imag(T::one())
    }
    /// `exp(re) (cos im + i sin im)`.
    pub fn exp(self) -> Self {
        let m = self.re.exp();
        Self {
            re: m * self.im.cos(),
            im: m * self.im.sin(),
        }
    }
    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }
    pub fn scale_by(self, k: T) -> Self {
        Self {
            re: self.re * k,
            im: self.im * k,
        }
    }
}

impl<T: Scalar> Add for Cx<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}
impl<T: Scalar> Sub for Cx<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}
impl<T: Scalar> Mul for Cx<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )
    }
}
impl<T: Scalar> Neg for Cx<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}
impl<T: Scalar> AddAssign for Cx<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<T: Scalar> SubAssign for Cx<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<T: Scalar> Ring for Cx<T> {
    fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }
    fn scale(self, k: f64) -> Self {
        Self::new(self.re * k, self.im * k)
    }
}

/// Inverse of a small dense matrix over any [`Scalar`], by Gauss-Jordan
/// elimination with partial pivoting on the point values.
///
/// Returns `None` when a pivot vanishes.
pub fn invert<T: Scalar, const N: usize>(m: &[[T; N]; N]) -> Option<[[T; N]; N]> {
    let mut a = *m;
    let mut inv: [[T; N]; N] =
        std::array::from_fn(|i| std::array::from_fn(|j| T::cst(if i == j { 1.0 } else { 0.0 })));
    for col in 0..N {
        let pivot = (col..N).max_by(|&r, &s| {
            a[r][col]
                .value()
                .abs()
                .total_cmp(&a[s][col].value().abs())
        })?;
        if a[pivot][col].value() == 0.0 || !a[pivot][col].value().is_finite() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let r = a[col][col].recip();
        for k in 0..N {
            a[col][k] = a[col][k] * r;
            inv[col][k] = inv[col][k] * r;
        }
        for row in 0..N {
            if row == col {
                continue;
            }
            let f = a[row][col];
            for k in 0..N {
                let (ak, ik) = (a[col][k], inv[col][k]);
                a[row][k] -= f * ak;
                inv[row][k] -= f * ik;
            }
        }
    }
    Some(inv)
}
