//! Minimal commutative ring abstraction used by the exact verification path.
//!
//! Matrix products over `Complex64`, Laurent polynomials and the cyclic group
//! ring `Z[x]/(x^K - 1)` share one implementation through [`Ring`].

use num_complex::Complex64;
use std::fmt::Debug;

pub trait Ring: Clone + PartialEq + Debug {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;

    fn neg(&self) -> Self {
        self.zero_like().sub(self)
    }
}

impl Ring for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one_like(&self) -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        self.norm() == 0.0
    }
}

impl Ring for i64 {
    fn zero_like(&self) -> Self {
        0
    }
    fn one_like(&self) -> Self {
        1
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

/// Element of `Z[x]/(x^K - 1)`; `coeffs[j]` multiplies `x^j`.
///
/// Evaluating `x = exp(2πi/K)` is a ring homomorphism, so identities checked here
/// hold for the corresponding roots of unity.
#[derive(Clone, PartialEq, Eq, Debug, Hash)]
pub struct Cyclic {
    pub coeffs: Vec<i64>,
}

impl Cyclic {
    pub fn zero(k: usize) -> Self {
        Cyclic { coeffs: vec![0; k] }
    }

    pub fn monomial(k: usize, exponent: i64, coeff: i64) -> Self {
        let mut c = Self::zero(k);
        c.coeffs[exponent.rem_euclid(k as i64) as usize] = coeff;
        c
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Involution `x -> x^{-1}` extended linearly; complex conjugation on the image.
    pub fn conj(&self) -> Self {
        let k = self.order();
        let mut out = Self::zero(k);
        for (j, &c) in self.coeffs.iter().enumerate() {
            out.coeffs[(k - j) % k] += c;
        }
        out
    }

    /// `Some(e)` if the element is the unit `±x^e`, with the sign.
    pub fn as_signed_monomial(&self) -> Option<(i64, usize)> {
        let mut found = None;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if found.is_some() || c.abs() != 1 {
                return None;
            }
            found = Some((c, j));
        }
        found
    }

    pub fn evaluate(&self) -> Complex64 {
        let k = self.order() as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(j, &c)| Complex64::from_polar(c as f64, std::f64::consts::TAU * j as f64 / k))
            .sum()
    }

    pub fn scale(&self, s: i64) -> Self {
        Cyclic { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }
}

impl Ring for Cyclic {
    fn zero_like(&self) -> Self {
        Self::zero(self.order())
    }
    fn one_like(&self) -> Self {
        Self::monomial(self.order(), 0, 1)
    }
    fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.order(), other.order());
        Cyclic { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() }
    }
    fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.order(), other.order());
        Cyclic { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }
    fn mul(&self, other: &Self) -> Self {
        let k = self.order();
        debug_assert_eq!(k, other.order());
        let mut out = vec![0i64; k];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b != 0 {
                    out[(i + j) % k] += a * b;
                }
            }
        }
        Cyclic { coeffs: out }
    }
    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

/// Dense square matrix over a [`Ring`], row-major.
#[derive(Clone, PartialEq, Debug)]
pub struct RingMatrix<R: Ring> {
    pub n: usize,
    pub data: Vec<R>,
}

impl<R: Ring> RingMatrix<R> {
    pub fn filled(n: usize, value: R) -> Self {
        RingMatrix { n, data: vec![value; n * n] }
    }

    pub fn identity(n: usize, one: &R) -> Self {
        let mut m = Self::filled(n, one.zero_like());
        for i in 0..n {
            m.data[i * n + i] = one.clone();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> R) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        RingMatrix { n, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: R) {
        self.data[i * self.n + j] = value;
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let zero = self.data[0].zero_like();
        Self::from_fn(n, |i, j| {
            let mut acc = zero.clone();
            for k in 0..n {
                let a = self.get(i, k);
                let b = other.get(k, j);
                if !a.is_zero() && !b.is_zero() {
                    acc = acc.add(&a.mul(b));
                }
            }
            acc
        })
    }

    pub fn apply(&self, v: &[R]) -> Vec<R> {
        assert_eq!(self.n, v.len());
        (0..self.n)
            .map(|i| {
                let mut acc = v[0].zero_like();
                for (k, vk) in v.iter().enumerate() {
                    acc = acc.add(&self.get(i, k).mul(vk));
                }
                acc
            })
            .collect()
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> RingMatrix<S> {
        RingMatrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).clone())
    }
}
