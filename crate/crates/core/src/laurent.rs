//! Sparse multivariate Laurent polynomials with integer coefficients.

use crate::error::{Error, Result};
use crate::ring::{Cyclic, Ring};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;

/// Sparse Laurent polynomial in `nvars` variables; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i32>, i64>,
}

/// Two-variable specialization used for substitutions.
pub type LaurentPoly2 = LaurentPoly;

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: i64) -> Self {
        Self::monomial(vec![0; nvars], c)
    }

    pub fn monomial(exponents: Vec<i32>, coeff: i64) -> Self {
        let mut p = Self::zero(exponents.len());
        if coeff != 0 {
            p.terms.insert(exponents, coeff);
        }
        p
    }

    pub fn variable(nvars: usize, index: usize) -> Self {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Self::monomial(e, 1)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &i64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, e: Vec<i32>, c: i64) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(e.clone()).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&e);
        }
    }

    /// Negates every exponent; complex conjugation on the unit torus.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, &c) in &self.terms {
            out.add_term(e.iter().map(|x| -x).collect(), c);
        }
        out
    }

    /// Monomial substitution `z_i -> prod_j z_j^{images[i][j]}`.
    pub fn substitute_monomials(&self, images: &[Vec<i32>]) -> Self {
        assert_eq!(images.len(), self.nvars);
        let target = images[0].len();
        let mut out = Self::zero(target);
        for (e, &c) in &self.terms {
            let mut ne = vec![0i32; target];
            for (i, &ei) in e.iter().enumerate() {
                for (j, slot) in ne.iter_mut().enumerate() {
                    *slot += ei * images[i][j];
                }
            }
            out.add_term(ne, c);
        }
        out
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, &c)| e.iter().zip(z).fold(Complex64::new(c as f64, 0.0), |acc, (&k, zi)| acc * zi.powi(k)))
            .sum()
    }

    /// Image under `z_i -> x^{exponents[i]}` in `Z[x]/(x^order - 1)`.
    pub fn to_cyclic(&self, exponents: &[i64], order: usize) -> Cyclic {
        let mut out = Cyclic::zero(order);
        for (e, &c) in &self.terms {
            let k: i64 = e.iter().zip(exponents).map(|(&a, &b)| a as i64 * b).sum();
            out.coeffs[k.rem_euclid(order as i64) as usize] += c;
        }
        out
    }

    /// Groups terms by the exponent of `var`; each coefficient keeps all variables.
    pub fn coefficients_in(&self, var: usize) -> BTreeMap<i32, LaurentPoly> {
        let mut out: BTreeMap<i32, LaurentPoly> = BTreeMap::new();
        for (e, &c) in &self.terms {
            let mut rest = e.clone();
            rest[var] = 0;
            out.entry(e[var]).or_insert_with(|| Self::zero(self.nvars)).add_term(rest, c);
        }
        out
    }

    /// Diagonal restriction `z_i -> z` for every variable.
    pub fn diagonal(&self) -> LaurentPoly {
        let images = vec![vec![1]; self.nvars];
        self.substitute_monomials(&images)
    }

    /// Dense coefficients of a univariate polynomial, lowest exponent first, with that exponent.
    pub fn univariate_coefficients(&self) -> (i32, Vec<i64>) {
        assert_eq!(self.nvars, 1);
        if self.terms.is_empty() {
            return (0, vec![]);
        }
        let lo = self.terms.keys().map(|e| e[0]).min().unwrap();
        let hi = self.terms.keys().map(|e| e[0]).max().unwrap();
        let mut coeffs = vec![0; (hi - lo + 1) as usize];
        for (e, &c) in &self.terms {
            coeffs[(e[0] - lo) as usize] = c;
        }
        (lo, coeffs)
    }

    /// Parses `"a d + a b d^2 - 3 c^-1"` style input; `names[i]` is variable `i`.
    pub fn parse(input: &str, names: &[&str]) -> Result<Self> {
        let nvars = names.len();
        let mut out = Self::zero(nvars);
        let cleaned = input.replace('*', " ").replace("^{", "^").replace('}', "");
        let mut chunks: Vec<(i64, String)> = Vec::new();
        let mut sign = 1i64;
        let mut current = String::new();
        let mut prev_caret = false;
        for ch in cleaned.chars() {
            if (ch == '+' || ch == '-') && !prev_caret {
                if !current.trim().is_empty() {
                    chunks.push((sign, std::mem::take(&mut current)));
                } else {
                    current.clear();
                }
                sign = if ch == '-' { -1 } else { 1 };
            } else {
                current.push(ch);
            }
            if !ch.is_whitespace() {
                prev_caret = ch == '^';
            }
        }
        if !current.trim().is_empty() {
            chunks.push((sign, current));
        }
        if chunks.is_empty() {
            return Err(Error::Parse(format!("empty polynomial {input:?}")));
        }
        for (sign, chunk) in chunks {
            let mut coeff = sign;
            let mut e = vec![0i32; nvars];
            for factor in chunk.split_whitespace() {
                if let Ok(n) = factor.parse::<i64>() {
                    coeff *= n;
                    continue;
                }
                let (name, power) = match factor.split_once('^') {
                    Some((n, p)) => {
                        (n, p.parse::<i32>().map_err(|_| Error::Parse(format!("bad exponent in {factor:?}")))?)
                    }
                    None => (factor, 1),
                };
                let idx = names
                    .iter()
                    .position(|&n| n == name)
                    .ok_or_else(|| Error::Parse(format!("unknown variable {name:?}")))?;
                e[idx] += power;
            }
            out.add_term(e, coeff);
        }
        Ok(out)
    }
}

impl Ring for LaurentPoly {
    fn zero_like(&self) -> Self {
        Self::zero(self.nvars)
    }
    fn one_like(&self) -> Self {
        Self::constant(self.nvars, 1)
    }
    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        out
    }
    fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
    fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                out.add_term(e1.iter().zip(e2).map(|(a, b)| a + b).collect(), c1 * c2);
            }
        }
        out
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, &c)) in self.terms.iter().enumerate() {
            let sign = if c < 0 {
                "-"
            } else if i > 0 {
                "+"
            } else {
                ""
            };
            if i > 0 {
                write!(f, " {sign} ")?;
            } else {
                write!(f, "{sign}")?;
            }
            let mut parts = Vec::new();
            if c.abs() != 1 || e.iter().all(|&x| x == 0) {
                parts.push(c.abs().to_string());
            }
            for (k, &x) in e.iter().enumerate() {
                match x {
                    0 => {}
                    1 => parts.push(format!("z{k}")),
                    _ => parts.push(format!("z{k}^{x}")),
                }
            }
            write!(f, "{}", parts.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ABC: [&str; 3] = ["a", "b", "c"];

    #[test]
    fn parse_and_multiply() {
        let p = LaurentPoly::parse("1 - a", &ABC).unwrap();
        let q = LaurentPoly::parse("1 + a + a^2", &ABC).unwrap();
        assert_eq!(p.mul(&q), LaurentPoly::parse("1 - a^3", &ABC).unwrap());
    }

    #[test]
    fn negative_exponents_and_conj() {
        let p = LaurentPoly::parse("a^-1 b^{-2} - 2 c", &ABC).unwrap();
        assert_eq!(p.conj(), LaurentPoly::parse("a b^2 - 2 c^-1", &ABC).unwrap());
        assert_eq!(p.mul(&LaurentPoly::parse("a b^2", &ABC).unwrap()).num_terms(), 2);
    }

    #[test]
    fn monomial_substitution() {
        // b -> a c
        let p = LaurentPoly::parse("a c - b", &ABC).unwrap();
        let images = vec![vec![1, 0, 0], vec![1, 0, 1], vec![0, 0, 1]];
        assert!(p.substitute_monomials(&images).is_zero());
    }

    #[test]
    fn cyclic_image_matches_evaluation() {
        let p = LaurentPoly::parse("a^2 b - 3 c^-1 + 5", &ABC).unwrap();
        let ex = [3i64, 5, 2];
        let k = 11usize;
        let z: Vec<Complex64> =
            ex.iter().map(|&e| Complex64::from_polar(1.0, std::f64::consts::TAU * e as f64 / k as f64)).collect();
        assert!((p.to_cyclic(&ex, k).evaluate() - p.evaluate(&z)).norm() < 1e-12);
    }
}
