//! Mahler measures of integer Laurent polynomials in one and two variables.
//!
//! Univariate measures use Jensen's formula on roots found by Aberth–Ehrlich iteration.
//! Bivariate measures integrate the inner Jensen value over the outer variable with
//! Gauss–Legendre quadrature, and a stratified Monte Carlo integral of `log|P|` is kept
//! alongside as an independent check.

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

type C = Complex64;

/// Roots closer than this to the unit circle make Jensen's value ambiguous by `|log|r||`.
const CIRCLE_BAND: f64 = 1e-6;

const ABERTH_MAX_ITER: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MahlerConfig {
    /// Gauss–Legendre nodes for the outer integral.
    pub nodes: usize,
    /// Total Monte Carlo samples; zero disables the cross-check.
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for MahlerConfig {
    fn default() -> Self {
        MahlerConfig { nodes: 512, mc_samples: 1_000_000, seed: 0x6d61_686c }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarlo {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MahlerEstimate {
    pub value: f64,
    /// `|Q_N − Q_{N/2}|` for quadrature, root ambiguity for a pure Jensen evaluation.
    pub quadrature_error: f64,
    pub monte_carlo: Option<MonteCarlo>,
    /// `max(|value − mc| + 3σ, quadrature_error)`; just `quadrature_error` without MC.
    pub error_bound: f64,
    /// Index of the variable handled by Jensen's formula, when bivariate.
    pub inner_variable: Option<usize>,
}

impl MahlerEstimate {
    /// Whether the two integrators agree within their own error bars.
    pub fn integrators_agree(&self) -> bool {
        match &self.monte_carlo {
            Some(mc) => (self.value - mc.mean).abs() <= 3.0 * mc.stderr + self.quadrature_error,
            None => true,
        }
    }
}

/// Roots of `Σ coeffs[k] z^k`; leading and trailing zeros are dropped first.
pub fn roots(coeffs: &[C]) -> Vec<C> {
    let (_, c) = trim(coeffs);
    let n = c.len().saturating_sub(1);
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![-c[0] / c[1]];
    }
    let lead = c[n];
    let monic: Vec<C> = c.iter().map(|x| x / lead).collect();
    // Fujiwara-type radius for the initial circle.
    let radius = (0..n).map(|k| monic[k].norm().powf(1.0 / (n - k) as f64)).fold(0.0f64, f64::max).max(1e-3);
    let mut z: Vec<C> = (0..n).map(|k| C::from_polar(radius, TAU * k as f64 / n as f64 + 0.4)).collect();
    for _ in 0..ABERTH_MAX_ITER {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (p, dp) = horner(&monic, z[i]);
            if p == C::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / z[i].norm().max(1.0));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn horner(c: &[C], z: C) -> (C, C) {
    let mut p = C::new(0.0, 0.0);
    let mut dp = C::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Strips zero coefficients at both ends; returns the number stripped at the low end.
fn trim(coeffs: &[C]) -> (usize, &[C]) {
    let lo = coeffs.iter().position(|c| c.norm() > 0.0).unwrap_or(coeffs.len());
    let hi = coeffs.iter().rposition(|c| c.norm() > 0.0).map_or(lo, |h| h + 1);
    (lo, &coeffs[lo..hi])
}

/// Jensen's formula with the root-ambiguity error; `None` for the zero polynomial.
pub fn jensen(coeffs: &[C]) -> Option<(f64, f64)> {
    let (_, c) = trim(coeffs);
    let lead = *c.last()?;
    let mut value = lead.norm().ln();
    let mut err = 0.0;
    for r in roots(c) {
        let lr = r.norm().ln();
        value += lr.max(0.0);
        if lr.abs() < CIRCLE_BAND {
            err += lr.abs();
        }
    }
    Some((value, err + 1e-13 * c.len() as f64))
}

/// Variables that actually occur with a nonzero exponent.
fn used_variables(p: &LaurentPoly) -> Vec<usize> {
    (0..p.nvars()).filter(|&v| p.terms().any(|(e, _)| e[v] != 0)).collect()
}

/// Univariate Mahler measure of a polynomial using at most one variable.
pub fn mahler_univariate(p: &LaurentPoly) -> Result<f64> {
    Ok(mahler_univariate_with_error(p)?.0)
}

fn mahler_univariate_with_error(p: &LaurentPoly) -> Result<(f64, f64)> {
    if p.num_terms() == 0 {
        return Err(Error::InvalidArgument("Mahler measure of the zero polynomial".into()));
    }
    let used = used_variables(p);
    if used.len() > 1 {
        return Err(Error::InvalidArgument("polynomial is not univariate".into()));
    }
    let var = used.first().copied().unwrap_or(0);
    let lo = p.terms().map(|(e, _)| e[var]).min().unwrap();
    let hi = p.terms().map(|(e, _)| e[var]).max().unwrap();
    let mut coeffs = vec![C::new(0.0, 0.0); (hi - lo + 1) as usize];
    for (e, &c) in p.terms() {
        coeffs[(e[var] - lo) as usize] += c as f64;
    }
    Ok(jensen(&coeffs).expect("nonzero polynomial"))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Term list `(outer exponent, inner exponent, coefficient)` with `inner` the Jensen variable.
fn split_terms(p: &LaurentPoly, inner: usize) -> (Vec<(i32, i32, f64)>, i32, usize) {
    let outer = 1 - inner;
    let lo = p.terms().map(|(e, _)| e[inner]).min().unwrap();
    let hi = p.terms().map(|(e, _)| e[inner]).max().unwrap();
    let terms = p.terms().map(|(e, &c)| (e[outer], e[inner], c as f64)).collect();
    (terms, lo, (hi - lo + 1) as usize)
}

/// Inner Jensen value at outer phase `theta`, as a function on `[0, 1)`.
fn inner_jensen(terms: &[(i32, i32, f64)], lo: i32, len: usize, theta: f64) -> f64 {
    let mut coeffs = vec![C::new(0.0, 0.0); len];
    for &(m, n, c) in terms {
        coeffs[(n - lo) as usize] += C::from_polar(c, TAU * m as f64 * theta);
    }
    jensen(&coeffs).map_or(f64::NEG_INFINITY, |(v, _)| v)
}

fn gauss_legendre_outer(terms: &[(i32, i32, f64)], lo: i32, len: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(&xi, &wi)| 0.5 * wi * inner_jensen(terms, lo, len, 0.5 * (xi + 1.0))).sum()
}

/// Quadrature value and `|Q_N − Q_{N/2}|` with Jensen in variable `inner`.
fn iterated_jensen(p: &LaurentPoly, inner: usize, nodes: usize) -> (f64, f64) {
    let (terms, lo, len) = split_terms(p, inner);
    let full = gauss_legendre_outer(&terms, lo, len, nodes);
    let half = gauss_legendre_outer(&terms, lo, len, (nodes / 2).max(1));
    (full, (full - half).abs())
}

/// Stratified jittered Monte Carlo of `∫_{T^2} log|P|`: an `n×n` grid, two points per cell.
pub fn monte_carlo_2d(p: &LaurentPoly, samples: usize, seed: u64) -> MonteCarlo {
    let terms: Vec<(i32, i32, f64)> = p.terms().map(|(e, &c)| (e[0], e[1], c as f64)).collect();
    let eval = |t0: f64, t1: f64| -> f64 {
        terms.iter().map(|&(m, n, c)| C::from_polar(c, TAU * (m as f64 * t0 + n as f64 * t1))).sum::<C>().norm().ln()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = (((samples / 2) as f64).sqrt().floor() as usize).max(1);
    let h = 1.0 / grid as f64;
    let mut sum = 0.0;
    let mut var = 0.0;
    let draw = |i: usize, j: usize, rng: &mut ChaCha8Rng| loop {
        let v = eval((i as f64 + rng.gen::<f64>()) * h, (j as f64 + rng.gen::<f64>()) * h);
        // Zeros of P form a null set; resample on a hit.
        if v.is_finite() {
            return v;
        }
    };
    for i in 0..grid {
        for j in 0..grid {
            let f1 = draw(i, j, &mut rng);
            let f2 = draw(i, j, &mut rng);
            sum += 0.5 * (f1 + f2);
            var += 0.25 * (f1 - f2) * (f1 - f2);
        }
    }
    let cells = (grid * grid) as f64;
    MonteCarlo { mean: sum / cells, stderr: var.sqrt() / cells, samples: 2 * grid * grid }
}

/// Mahler measure of a nonzero Laurent polynomial in one or two variables.
///
/// A polynomial in which only one variable occurs is evaluated exactly by Jensen.
/// Otherwise both choices of the Jensen variable are tried and the one with the smaller
/// quadrature error is kept.
pub fn mahler_measure(p: &LaurentPoly, config: &MahlerConfig) -> Result<MahlerEstimate> {
    if p.num_terms() == 0 {
        return Err(Error::InvalidArgument("Mahler measure of the zero polynomial".into()));
    }
    if p.nvars() > 2 {
        return Err(Error::InvalidArgument(format!("{} variables; at most two supported", p.nvars())));
    }
    if used_variables(p).len() <= 1 {
        let (value, err) = mahler_univariate_with_error(p)?;
        return Ok(MahlerEstimate {
            value,
            quadrature_error: err,
            monte_carlo: None,
            error_bound: err,
            inner_variable: None,
        });
    }
    let (inner, (value, quad_err)) = [1usize, 0]
        .into_iter()
        .map(|v| (v, iterated_jensen(p, v, config.nodes)))
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    if !value.is_finite() {
        return Err(Error::NonFinite("outer Mahler quadrature".into()));
    }
    let monte_carlo = (config.mc_samples > 0).then(|| monte_carlo_2d(p, config.mc_samples, config.seed));
    let error_bound = match &monte_carlo {
        Some(mc) => ((value - mc.mean).abs() + 3.0 * mc.stderr).max(quad_err),
        None => quad_err,
    };
    Ok(MahlerEstimate { value, quadrature_error: quad_err, monte_carlo, error_bound, inner_variable: Some(inner) })
}

/// `(1/2) log Σ|c|^2`, an upper bound for `m(P)`.
pub fn l2_bound(p: &LaurentPoly) -> f64 {
    0.5 * p.terms().map(|(_, &c)| (c * c) as f64).sum::<f64>().ln()
}
