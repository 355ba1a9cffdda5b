//! Differential forms on a coordinate chart.
//!
//! A degree-`k` form on an `n`-dimensional chart stores one component per
//! strictly increasing index tuple, in lexicographic order. The component
//! convention is `ψ = Σ_{I sorted} ψ_I dx^I`, so the fully antisymmetric
//! tensor component at any index order is `±ψ_I`. The exterior derivative
//! follows `d(f dx^I) = df ∧ dx^I`.

use crate::error::{Error, Result};
use crate::jet::{Cx, Differentiable, Ring, Scalar};

/// Binomial coefficient, small arguments only.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All strictly increasing `k`-tuples from `0..n`, lexicographic.
pub fn sorted_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - k + i {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Lexicographic rank of a strictly increasing tuple.
fn rank(n: usize, tuple: &[usize]) -> usize {
    let k = tuple.len();
    let mut r = 0;
    let mut prev: isize = -1;
    for (i, &c) in tuple.iter().enumerate() {
        for j in (prev + 1) as usize..c {
            r += binomial(n - 1 - j, k - 1 - i);
        }
        prev = c as isize;
    }
    r
}

/// Sorts `idx` in place and returns the permutation sign, or `None` when an
/// index repeats.
pub fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AntisymForm<T> {
    degree: usize,
    dim: usize,
    comps: Vec<T>,
}

impl<T: Ring> AntisymForm<T> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        Self {
            degree,
            dim,
            comps: vec![T::zero(); binomial(dim, degree)],
        }
    }

    /// Degree-0 form.
    pub fn scalar(dim: usize, v: T) -> Self {
        Self {
            degree: 0,
            dim,
            comps: vec![v],
        }
    }

    /// One-form from its `dim` coordinate components.
    pub fn one_form(comps: Vec<T>) -> Self {
        Self {
            degree: 1,
            dim: comps.len(),
            comps,
        }
    }

    /// Builds a form from `(indices, coefficient)` terms, e.g.
    /// `([0, 2], c)` for `c dx⁰∧dx²`. Indices may come in any order.
    pub fn from_terms(dim: usize, degree: usize, terms: &[(&[usize], T)]) -> Self {
        let mut f = Self::zero(dim, degree);
        for (idx, v) in terms {
            f.add_term(idx, *v);
        }
        f
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Components in lexicographic order of sorted index tuples.
    pub fn components(&self) -> &[T] {
        &self.comps
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<usize>, T)> + '_ {
        sorted_tuples(self.dim, self.degree)
            .into_iter()
            .zip(self.comps.iter().copied())
    }

    /// Antisymmetric tensor component at an arbitrary index order.
    pub fn get(&self, idx: &[usize]) -> T {
        debug_assert_eq!(idx.len(), self.degree);
        let mut s: Vec<usize> = idx.to_vec();
        match sort_with_sign(&mut s) {
            None => T::zero(),
            Some(sign) => self.comps[rank(self.dim, &s)].scale(sign),
        }
    }

    /// Adds `v dx^{idx}` (any index order).
    pub fn add_term(&mut self, idx: &[usize], v: T) {
        assert_eq!(idx.len(), self.degree, "term degree mismatch");
        let mut s = idx.to_vec();
        if let Some(sign) = sort_with_sign(&mut s) {
            let r = rank(self.dim, &s);
            self.comps[r] += v.scale(sign);
        }
    }

    pub fn set_sorted(&mut self, sorted: &[usize], v: T) {
        let r = rank(self.dim, sorted);
        self.comps[r] = v;
    }

    pub fn map<U: Ring>(&self, f: impl Fn(T) -> U) -> AntisymForm<U> {
        AntisymForm {
            degree: self.degree,
            dim: self.dim,
            comps: self.comps.iter().map(|&c| f(c)).collect(),
        }
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|c| c.scale(k))
    }

    /// Multiplies every component by a scalar of the component type.
    pub fn times(&self, k: T) -> Self {
        self.map(|c| c * k)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.dim, self.degree), (other.dim, other.degree));
        Self {
            degree: self.degree,
            dim: self.dim,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    /// Standard alternating product.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let deg = self.degree + other.degree;
        if deg > self.dim {
            return Err(Error::DegreeOverflow {
                degree: deg,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim, deg);
        let left = sorted_tuples(self.dim, self.degree);
        let right = sorted_tuples(self.dim, other.degree);
        let mut buf = Vec::with_capacity(deg);
        for (i, a) in left.iter().zip(&self.comps) {
            for (j, b) in right.iter().zip(&other.comps) {
                buf.clear();
                buf.extend_from_slice(i);
                buf.extend_from_slice(j);
                if let Some(sign) = sort_with_sign(&mut buf) {
                    let r = rank(self.dim, &buf);
                    out.comps[r] += (*a * *b).scale(sign);
                }
            }
        }
        Ok(out)
    }

    /// Re-labels the form onto a chart of dimension `dim + shift` whose
    /// coordinates `shift..` are this chart's coordinates.
    pub fn embed(&self, shift: usize) -> Self {
        let mut out = Self::zero(self.dim + shift, self.degree);
        for (idx, v) in self.iter() {
            let moved: Vec<usize> = idx.iter().map(|i| i + shift).collect();
            out.set_sorted(&moved, v);
        }
        out
    }

    /// Interior product with the coordinate vector `∂_axis`.
    pub fn interior(&self, axis: usize) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::DegreeMismatch {
                expected: 1,
                found: 0,
            });
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        let mut idx = Vec::with_capacity(self.degree);
        for tuple in sorted_tuples(self.dim, self.degree - 1) {
            idx.clear();
            idx.push(axis);
            idx.extend_from_slice(&tuple);
            out.set_sorted(&tuple, self.get(&idx));
        }
        Ok(out)
    }

    /// Restricts to the coordinates `shift..` (drops every component with an
    /// index below `shift`).
    pub fn restrict(&self, shift: usize) -> Self {
        let mut out = Self::zero(self.dim - shift, self.degree);
        for (idx, v) in self.iter() {
            if idx.iter().all(|&i| i >= shift) {
                let moved: Vec<usize> = idx.iter().map(|i| i - shift).collect();
                out.set_sorted(&moved, v);
            }
        }
        out
    }
}

impl<T: Scalar> AntisymForm<T> {
    pub fn values(&self) -> AntisymForm<f64> {
        self.map(|c| c.value())
    }
}

impl AntisymForm<f64> {
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn to_complex(&self) -> AntisymForm<Cx<f64>> {
        self.map(Cx::real)
    }
}

impl<T: Scalar> AntisymForm<Cx<T>> {
    pub fn re(&self) -> AntisymForm<T> {
        self.map(|c| c.re)
    }
    pub fn im(&self) -> AntisymForm<T> {
        self.map(|c| c.im)
    }
    pub fn from_parts(re: &AntisymForm<T>, im: &AntisymForm<T>) -> Self {
        assert_eq!((re.dim, re.degree), (im.dim, im.degree));
        Self {
            degree: re.degree,
            dim: re.dim,
            comps: re
                .comps
                .iter()
                .zip(&im.comps)
                .map(|(&r, &i)| Cx::new(r, i))
                .collect(),
        }
    }
}

impl AntisymForm<Cx<f64>> {
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .fold(0.0, |m, c| m.max(c.re.hypot(c.im)))
    }
}

/// `dψ` for a form whose components carry first derivatives with respect to
/// the chart coordinates: `(dψ)_J = Σ_m (−1)^m ∂_{j_m} ψ_{J∖j_m}`.
pub fn exterior_derivative<T, const N: usize>(form: &AntisymForm<T>) -> Result<AntisymForm<T::Lower>>
where
    T: Differentiable<N>,
{
    if form.dim != N {
        return Err(Error::DimensionMismatch {
            left: form.dim,
            right: N,
        });
    }
    if form.degree + 1 > N {
        return Err(Error::DegreeOverflow {
            degree: form.degree + 1,
            dim: N,
        });
    }
    let mut out = AntisymForm::<T::Lower>::zero(N, form.degree + 1);
    let mut rest = Vec::with_capacity(form.degree);
    for (slot, tuple) in sorted_tuples(N, form.degree + 1).into_iter().enumerate() {
        let mut acc = T::Lower::zero();
        for m in 0..tuple.len() {
            rest.clear();
            rest.extend(tuple.iter().enumerate().filter(|&(i, _)| i != m).map(|(_, &v)| v));
            let c = form.comps[rank(N, &rest)].partial(tuple[m]);
            if m % 2 == 0 {
                acc += c;
            } else {
                acc -= c;
            }
        }
        out.comps[slot] = acc;
    }
    Ok(out)
}
