//! Spectral cocycles of substitutions on two letters and certificates of singular spectrum.
//!
//! Entry `(α, β)` of the spectral matrix sums `exp(2πi⟨ζ, ab(p)⟩)` over the prefixes `p`
//! of `ϑ(α)` that are followed by `β`, where `ab` is the abelianization. Rows are the
//! substituted letter, columns the occurring letter.

use crate::error::{Error, Result};
use crate::laurent::LaurentPoly2;
use crate::mahler::{l2_bound, mahler_measure, MahlerConfig, MahlerEstimate};
use crate::ring::Ring;
use nalgebra::Matrix2;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Roots;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

type C = Complex64;

/// Fractional bits kept in the rational enclosure of `√disc`.
pub const PERRON_BITS: u32 = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Substitution2 {
    pub word0: Vec<u8>,
    pub word1: Vec<u8>,
    /// `((a, b), (c, d))`: row `α` counts the 0s and 1s of `ϑ(α)`.
    pub matrix: [[i64; 2]; 2],
    /// Common length `q` when `|ϑ(0)| = |ϑ(1)|`.
    pub constant_length: Option<usize>,
}

impl Substitution2 {
    /// Parses `"0->w0;1->w1"`; rules may come in either order.
    pub fn parse(text: &str) -> Result<Self> {
        let mut words: [Option<Vec<u8>>; 2] = [None, None];
        for rule in text.split(';').map(str::trim).filter(|r| !r.is_empty()) {
            let (lhs, rhs) = rule.split_once("->").ok_or_else(|| Error::Parse(format!("rule {rule:?} lacks '->'")))?;
            let letter = match lhs.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::Parse(format!("unknown letter {other:?}"))),
            };
            let word: Vec<u8> = rhs
                .trim()
                .chars()
                .map(|ch| match ch {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    _ => Err(Error::Parse(format!("foreign symbol {ch:?} in {rhs:?}"))),
                })
                .collect::<Result<_>>()?;
            if word.is_empty() {
                return Err(Error::Parse(format!("empty image for letter {letter}")));
            }
            if words[letter].replace(word).is_some() {
                return Err(Error::Parse(format!("letter {letter} given twice")));
            }
        }
        match words {
            [Some(w0), Some(w1)] => Ok(Self::from_words(w0, w1)),
            _ => Err(Error::Parse(format!("need rules for both letters in {text:?}"))),
        }
    }

    pub fn from_words(word0: Vec<u8>, word1: Vec<u8>) -> Self {
        let count = |w: &[u8], x: u8| w.iter().filter(|&&y| y == x).count() as i64;
        let matrix = [[count(&word0, 0), count(&word0, 1)], [count(&word1, 0), count(&word1, 1)]];
        let constant_length = (word0.len() == word1.len()).then_some(word0.len());
        Substitution2 { word0, word1, matrix, constant_length }
    }

    pub fn word(&self, letter: usize) -> &[u8] {
        if letter == 0 {
            &self.word0
        } else {
            &self.word1
        }
    }

    /// Some power of `S` is strictly positive; for 2×2 the square suffices.
    pub fn is_primitive(&self) -> bool {
        let s = int_matrix(self.matrix);
        let s2 = mat_mul(&s, &s);
        [&s, &s2].iter().any(|m| m.iter().flatten().all(|x| x > &BigInt::zero()))
    }

    pub fn trace(&self) -> i64 {
        self.matrix[0][0] + self.matrix[1][1]
    }

    /// `(a − d)^2 + 4bc`, the discriminant of the characteristic polynomial.
    pub fn discriminant(&self) -> i64 {
        let [[a, b], [c, d]] = self.matrix;
        (a - d) * (a - d) + 4 * b * c
    }

    pub fn perron_root(&self) -> f64 {
        0.5 * (self.trace() as f64 + (self.discriminant() as f64).sqrt())
    }

    /// `ζ ↦ Sζ mod 1`.
    pub fn push_forward(&self, zeta: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.matrix;
        [
            (a as f64 * zeta[0] + b as f64 * zeta[1]).rem_euclid(1.0),
            (c as f64 * zeta[0] + d as f64 * zeta[1]).rem_euclid(1.0),
        ]
    }

    pub fn spectral_matrix(&self, zeta: [f64; 2]) -> Matrix2<C> {
        let mut m = Matrix2::zeros();
        for alpha in 0..2 {
            let mut ab = [0i64; 2];
            for &beta in self.word(alpha) {
                let phase = TAU * (ab[0] as f64 * zeta[0] + ab[1] as f64 * zeta[1]);
                m[(alpha, beta as usize)] += C::from_polar(1.0, phase);
                ab[beta as usize] += 1;
            }
        }
        m
    }

    /// The spectral matrix with entries as Laurent polynomials in `z0, z1`.
    pub fn spectral_symbolic(&self) -> [[LaurentPoly2; 2]; 2] {
        let mut m: [[LaurentPoly2; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| LaurentPoly2::zero(2)));
        for (alpha, row) in m.iter_mut().enumerate() {
            let mut ab = [0i32; 2];
            for &beta in self.word(alpha) {
                row[beta as usize] = row[beta as usize].add(&LaurentPoly2::monomial(ab.to_vec(), 1));
                ab[beta as usize] += 1;
            }
        }
        m
    }

    /// `P = a + z0^a z1^b c − c − z0^c z1^d a` with `a, c` the `(0,0)` and `(1,0)` entries.
    ///
    /// `det ℬ(ζ) · (1 − z1) = P`, so `m(det ℬ) = m(P)`.
    pub fn build_p(&self) -> LaurentPoly2 {
        let [[a, b], [c, d]] = self.matrix;
        let m = self.spectral_symbolic();
        let (pa, pc) = (&m[0][0], &m[1][0]);
        let za = LaurentPoly2::monomial(vec![a as i32, b as i32], 1);
        let zc = LaurentPoly2::monomial(vec![c as i32, d as i32], 1);
        pa.add(&za.mul(pc)).sub(pc).sub(&zc.mul(pa))
    }

    /// `a(z, z) − c(z, z)` as a univariate polynomial.
    pub fn diagonal_difference(&self) -> LaurentPoly2 {
        let m = self.spectral_symbolic();
        m[0][0].sub(&m[1][0]).diagonal()
    }

    /// `‖ℬ(ζ)s_ζ − s_{Sζ}‖_∞` with `s_ζ = (1 − z0, 1 − z1)`.
    pub fn section_residual(&self, zeta: [f64; 2]) -> f64 {
        let s = |t: [f64; 2]| {
            nalgebra::Vector2::new(
                C::new(1.0, 0.0) - C::from_polar(1.0, TAU * t[0]),
                C::new(1.0, 0.0) - C::from_polar(1.0, TAU * t[1]),
            )
        };
        let lhs = self.spectral_matrix(zeta) * s(zeta);
        let [[a, b], [c, d]] = self.matrix;
        // Exact phases of Sζ without reducing mod 1 first.
        let rhs = nalgebra::Vector2::new(
            C::new(1.0, 0.0) - C::from_polar(1.0, TAU * (a as f64 * zeta[0] + b as f64 * zeta[1])),
            C::new(1.0, 0.0) - C::from_polar(1.0, TAU * (c as f64 * zeta[0] + d as f64 * zeta[1])),
        );
        (lhs - rhs).camax()
    }

    pub fn log_abs_det(&self, zeta: [f64; 2]) -> f64 {
        self.spectral_matrix(zeta).determinant().norm().ln()
    }
}

impl fmt::Display for Substitution2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = |v: &[u8]| v.iter().map(|x| char::from(b'0' + x)).collect::<String>();
        write!(f, "0->{};1->{}", w(&self.word0), w(&self.word1))
    }
}

fn int_matrix(m: [[i64; 2]; 2]) -> [[BigInt; 2]; 2] {
    m.map(|row| row.map(BigInt::from))
}

fn mat_mul(x: &[[BigInt; 2]; 2], y: &[[BigInt; 2]; 2]) -> [[BigInt; 2]; 2] {
    std::array::from_fn(|i| std::array::from_fn(|j| &x[i][0] * &y[0][j] + &x[i][1] * &y[1][j]))
}

fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = n.sqrt();
        r * r == n
    }
}

/// Rational enclosure `λ ∈ [lo, hi] / 2^(PERRON_BITS+1)` of the Perron root.
fn perron_enclosure(s: &Substitution2) -> (BigInt, BigInt) {
    let scale = BigInt::one() << PERRON_BITS;
    let root = (BigInt::from(s.discriminant()) * &scale * &scale).sqrt();
    let t = BigInt::from(s.trace()) * &scale;
    let lo = &t + &root;
    // An exact square root needs no widening.
    let hi = if &root * &root == BigInt::from(s.discriminant()) * &scale * &scale { lo.clone() } else { &lo + 1 };
    (lo, hi)
}

fn to_f64_scaled(num: &BigInt, shift: u64) -> f64 {
    let bits = num.bits();
    let keep = bits.min(60);
    let top = num >> (bits - keep);
    let mantissa: f64 = top.to_string().parse().unwrap_or(f64::NAN);
    mantissa * 2f64.powi((bits - keep) as i32 - shift as i32)
}

/// One exact test of `λ^n > 2·min(a_n + c_n, b_n + d_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerWitness {
    pub n: u32,
    /// Entries of `S^n`, row-major, as decimal integers.
    pub s_n: [String; 4],
    pub column_bound: String,
    /// Lower and upper bounds on `λ^n` (rounded for display; the test is exact).
    pub lambda_n_lower: f64,
    pub lambda_n_upper: f64,
    /// `λ^n / column_bound`.
    pub ratio: f64,
    pub holds: bool,
}

fn power_witness(n: u32, sn: &[[BigInt; 2]; 2], enclosure: &(BigInt, BigInt)) -> PowerWitness {
    let col0 = &sn[0][0] + &sn[1][0];
    let col1 = &sn[0][1] + &sn[1][1];
    let bound: BigInt = col0.min(col1) * 2u32;
    let shift = (PERRON_BITS as u64 + 1) * n as u64;
    let lo_n = enclosure.0.pow(n);
    let hi_n = enclosure.1.pow(n);
    let holds = lo_n > (&bound << shift);
    let lower = to_f64_scaled(&lo_n, shift);
    PowerWitness {
        n,
        s_n: [sn[0][0].to_string(), sn[0][1].to_string(), sn[1][0].to_string(), sn[1][1].to_string()],
        column_bound: bound.to_string(),
        lambda_n_lower: lower,
        lambda_n_upper: to_f64_scaled(&hi_n, shift),
        ratio: lower / bound.to_string().parse::<f64>().unwrap_or(f64::INFINITY),
        holds,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    ConstantLength,
    IrreducibleTrace,
    /// Neither branch's combinatorial hypothesis holds.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    ConstantLength { q: usize },
    Power(PowerWitness),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularityCertificate {
    pub rule: String,
    pub matrix: [[i64; 2]; 2],
    pub branch: Branch,
    pub discriminant: i64,
    pub discriminant_is_square: bool,
    pub perron_root: f64,
    pub n_max: u32,
    pub witness: Option<Witness>,
    /// Every `n` tried in the irreducible branch, in order.
    pub searched: Vec<PowerWitness>,
    pub best_ratio: Option<f64>,
    /// `m(a(z,z) − c(z,z))` for constant length, `m(P)` otherwise.
    pub chi_plus_estimate: Option<f64>,
    pub chi_plus_error: Option<f64>,
    /// `(1/2) log q` for constant length (where `λ = q`), else `(1/2) log λ`.
    pub threshold: f64,
    /// `threshold − (χ⁺ + error)`; positive when certified.
    pub margin: Option<f64>,
    pub p: String,
    pub mahler_p: Option<MahlerEstimate>,
    /// `(1/2) log Σ|coeff(P)|^2`.
    pub l2_bound: f64,
    /// `(1/2) log 2(a + c)`.
    pub l2_bound_coarse: f64,
    pub verdict: Verdict,
    pub reason: String,
}

/// Runs the constant-length branch, then the irreducible-trace search up to `n_max`.
pub fn certify(s: &Substitution2, n_max: u32, mahler: &MahlerConfig) -> Result<SingularityCertificate> {
    if !s.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let p = s.build_p();
    let [[a, _], [c, _]] = s.matrix;
    let disc = s.discriminant();
    let mut cert = SingularityCertificate {
        rule: s.to_string(),
        matrix: s.matrix,
        branch: Branch::None,
        discriminant: disc,
        discriminant_is_square: is_square(disc),
        perron_root: s.perron_root(),
        n_max,
        witness: None,
        searched: vec![],
        best_ratio: None,
        chi_plus_estimate: None,
        chi_plus_error: None,
        threshold: 0.5 * s.perron_root().ln(),
        margin: None,
        p: p.to_string(),
        mahler_p: None,
        l2_bound: l2_bound(&p),
        l2_bound_coarse: 0.5 * ((2 * (a + c)) as f64).ln(),
        verdict: Verdict::NotCertified,
        reason: String::new(),
    };

    if let Some(q) = s.constant_length {
        cert.branch = Branch::ConstantLength;
        cert.witness = Some(Witness::ConstantLength { q });
        cert.threshold = 0.5 * (q as f64).ln();
        let diag = s.diagonal_difference();
        if diag.num_terms() == 0 {
            cert.reason = "a(z,z) - c(z,z) vanishes identically".into();
            return Ok(cert);
        }
        let est = mahler_measure(&diag, &MahlerConfig { mc_samples: 0, ..*mahler })?;
        cert.chi_plus_estimate = Some(est.value);
        cert.chi_plus_error = Some(est.error_bound);
        let margin = cert.threshold - (est.value + est.error_bound);
        cert.margin = Some(margin);
        cert.mahler_p = Some(mahler_measure(&p, mahler)?);
        if margin > 0.0 {
            cert.verdict = Verdict::Certified;
            cert.reason = "constant length: m(a(z,z) - c(z,z)) < (1/2) log q".into();
        } else {
            cert.reason = "constant length: Mahler bound does not beat (1/2) log q".into();
        }
        return Ok(cert);
    }

    if cert.discriminant_is_square {
        cert.reason = "characteristic polynomial is reducible over Q".into();
        return Ok(cert);
    }
    cert.branch = Branch::IrreducibleTrace;
    let enclosure = perron_enclosure(s);
    let base = int_matrix(s.matrix);
    let mut sn = base.clone();
    for n in 1..=n_max {
        let w = power_witness(n, &sn, &enclosure);
        cert.best_ratio = Some(cert.best_ratio.map_or(w.ratio, |r: f64| r.max(w.ratio)));
        let holds = w.holds;
        cert.searched.push(w.clone());
        if holds {
            cert.witness = Some(Witness::Power(w));
            break;
        }
        sn = mat_mul(&sn, &base);
    }
    if cert.witness.is_none() {
        cert.reason = format!("no n <= {n_max} with lambda^n > 2 min(a_n + c_n, b_n + d_n)");
        return Ok(cert);
    }
    let est = mahler_measure(&p, mahler)?;
    cert.chi_plus_estimate = Some(est.value);
    cert.chi_plus_error = Some(est.error_bound);
    let margin = cert.threshold - (est.value + est.error_bound);
    cert.margin = Some(margin);
    cert.mahler_p = Some(est);
    if margin > 0.0 {
        cert.verdict = Verdict::Certified;
        cert.reason = "irreducible trace: power inequality and m(P) < (1/2) log lambda".into();
    } else {
        cert.reason = "power inequality holds but m(P) does not beat (1/2) log lambda".into();
    }
    Ok(cert)
}

/// Recomputes every integer inequality stored in `cert`; errors on any mismatch.
pub fn revalidate(cert: &SingularityCertificate) -> Result<()> {
    let s = Substitution2::parse(&cert.rule)?;
    let fail = |what: &str| Err(Error::Invariant(format!("certificate for {}: {what}", cert.rule)));
    if s.matrix != cert.matrix {
        return fail("matrix");
    }
    if s.discriminant() != cert.discriminant || is_square(s.discriminant()) != cert.discriminant_is_square {
        return fail("discriminant");
    }
    let enclosure = perron_enclosure(&s);
    let base = int_matrix(s.matrix);
    let mut sn = base.clone();
    for (i, stored) in cert.searched.iter().enumerate() {
        if stored.n as usize != i + 1 {
            return fail("search is not consecutive from n = 1");
        }
        let fresh = power_witness(stored.n, &sn, &enclosure);
        if fresh.s_n != stored.s_n || fresh.column_bound != stored.column_bound || fresh.holds != stored.holds {
            return fail(&format!("power witness n = {}", stored.n));
        }
        sn = mat_mul(&sn, &base);
    }
    match (&cert.witness, cert.branch) {
        (Some(Witness::ConstantLength { q }), Branch::ConstantLength) if s.constant_length == Some(*q) => {}
        (Some(Witness::Power(w)), Branch::IrreducibleTrace) if w.holds && !cert.discriminant_is_square => {}
        (None, _) if cert.verdict == Verdict::NotCertified => {}
        _ => return fail("branch witness"),
    }
    if cert.verdict == Verdict::Certified {
        match (cert.chi_plus_estimate, cert.chi_plus_error) {
            (Some(x), Some(e)) if x + e < cert.threshold => {}
            _ => return fail("chi_plus bound"),
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiPlus {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seeds: usize,
}

/// Stratified Monte Carlo of `∫ log|det ℬ(ζ)|` over `T^2`, or over the diagonal `ζ0 = ζ1`.
///
/// Each seed covers a jittered grid of about `samples` cells; the spread of the per-seed
/// means gives the standard error.
fn chi_plus_mc(s: &Substitution2, samples: usize, seeds: usize, seed: u64, diagonal: bool) -> ChiPlus {
    let seeds = seeds.max(2);
    let grid = if diagonal { samples.max(1) } else { ((samples as f64).sqrt() as usize).max(1) };
    let h = 1.0 / grid as f64;
    let per_seed = |index: usize| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut draw = |zeta: &dyn Fn(&mut ChaCha8Rng) -> [f64; 2]| loop {
            let v = s.log_abs_det(zeta(&mut rng));
            // Zeros of det ℬ form a null set; resample on a hit.
            if v.is_finite() {
                return v;
            }
        };
        let mut sum = 0.0;
        if diagonal {
            for i in 0..grid {
                sum += draw(&|r| {
                    let t = (i as f64 + r.gen::<f64>()) * h;
                    [t, t]
                });
            }
            sum / grid as f64
        } else {
            for i in 0..grid {
                for j in 0..grid {
                    sum += draw(&|r| [(i as f64 + r.gen::<f64>()) * h, (j as f64 + r.gen::<f64>()) * h]);
                }
            }
            sum / (grid * grid) as f64
        }
    };
    #[cfg(feature = "parallel")]
    let means: Vec<f64> = {
        use rayon::prelude::*;
        (0..seeds).into_par_iter().map(per_seed).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let means: Vec<f64> = (0..seeds).map(per_seed).collect();
    let n = means.len() as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (n - 1.0);
    let cells = if diagonal { grid } else { grid * grid };
    ChiPlus { mean, stderr: (var / n).sqrt(), samples: cells * seeds, seeds }
}

/// `χ⁺ = ∫_{T^2} log|det ℬ(ζ)| dζ` by stratified Monte Carlo.
pub fn chi_plus_direct(s: &Substitution2, samples: usize, seeds: usize, seed: u64) -> ChiPlus {
    chi_plus_mc(s, samples, seeds, seed, false)
}

/// The same integral restricted to `ζ0 = ζ1`; equals `m(a(z,z) − c(z,z))` for constant length.
pub fn chi_plus_diagonal(s: &Substitution2, samples: usize, seeds: usize, seed: u64) -> ChiPlus {
    chi_plus_mc(s, samples, seeds, seed, true)
}

/// Uniform samples `(ζ0, ζ1, log|det ℬ(ζ)|)`.
pub fn log_det_samples(s: &Substitution2, n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let zeta = [rng.gen::<f64>(), rng.gen::<f64>()];
            [zeta[0], zeta[1], s.log_abs_det(zeta)]
        })
        .collect()
}

pub fn write_log_det_csv<W: Write>(out: &mut W, samples: &[[f64; 3]]) -> std::io::Result<()> {
    writeln!(out, "zeta0,zeta1,log_abs_det")?;
    for [x, y, v] in samples {
        writeln!(out, "{x},{y},{v}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const THUE_MORSE: &str = "0->01;1->10";
    const PERIOD_DOUBLING: &str = "0->01;1->00";
    const FIBONACCI: &str = "0->01;1->0";

    fn quick() -> MahlerConfig {
        MahlerConfig { mc_samples: 100_000, ..Default::default() }
    }

    #[test]
    fn parse_counts_letters() {
        let f = Substitution2::parse(FIBONACCI).unwrap();
        assert_eq!(f.matrix, [[1, 1], [1, 0]]);
        assert_eq!(f.constant_length, None);
        let t = Substitution2::parse(THUE_MORSE).unwrap();
        assert_eq!((t.matrix, t.constant_length), ([[1, 1], [1, 1]], Some(2)));
        let p = Substitution2::parse(PERIOD_DOUBLING).unwrap();
        assert_eq!((p.matrix, p.constant_length), ([[1, 1], [2, 0]], Some(2)));
        assert_eq!(Substitution2::parse(" 1->0 ; 0->01 ").unwrap(), f);
        for bad in ["0->;1->0", "0->02;1->0", "0->01", "2->0;0->1;1->0", "0->1;0->1"] {
            assert!(Substitution2::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn thue_morse_spectral_matrix() {
        let t = Substitution2::parse(THUE_MORSE).unwrap();
        let zeta = [0.17, 0.62];
        let z0 = C::from_polar(1.0, TAU * zeta[0]);
        let z1 = C::from_polar(1.0, TAU * zeta[1]);
        let expect = Matrix2::new(C::new(1.0, 0.0), z0, z1, C::new(1.0, 0.0));
        assert!((t.spectral_matrix(zeta) - expect).camax() < 1e-15);
    }

    #[test]
    fn spectral_matrix_at_zero_is_s() {
        for rule in [THUE_MORSE, PERIOD_DOUBLING, FIBONACCI, "0->0110;1->100"] {
            let s = Substitution2::parse(rule).unwrap();
            let m = s.spectral_matrix([0.0, 0.0]);
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(m[(i, j)], C::new(s.matrix[i][j] as f64, 0.0));
                }
            }
        }
    }

    #[test]
    fn invariant_section_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for rule in [THUE_MORSE, PERIOD_DOUBLING, FIBONACCI, "0->0110;1->100", "0->00010;1->11"] {
            let s = Substitution2::parse(rule).unwrap();
            for _ in 0..1000 {
                let zeta = [rng.gen(), rng.gen()];
                assert!(s.section_residual(zeta) < 1e-13, "{rule}");
            }
        }
    }

    #[test]
    fn p_formulas() {
        let names = ["z0", "z1"];
        let t = Substitution2::parse(THUE_MORSE).unwrap();
        assert_eq!(t.build_p(), LaurentPoly2::parse("1 - z1 + z0 z1^2 - z0 z1", &names).unwrap());
        let pd = Substitution2::parse(PERIOD_DOUBLING).unwrap();
        // z0 (1 + z0) (z1 - 1)
        assert_eq!(pd.build_p(), LaurentPoly2::parse("z0 z1 + z0^2 z1 - z0 - z0^2", &names).unwrap());
        assert_eq!(pd.diagonal_difference(), LaurentPoly2::parse("-z", &["z"]).unwrap());
        for rule in [THUE_MORSE, PERIOD_DOUBLING, FIBONACCI, "0->0110;1->100"] {
            let s = Substitution2::parse(rule).unwrap();
            let p = s.build_p();
            let one = C::new(1.0, 0.0);
            assert_eq!(p.evaluate(&[one, one]), C::new(0.0, 0.0));
            let [[a, _], [c, _]] = s.matrix;
            assert!(p.terms().map(|(_, &k)| k * k).sum::<i64>() <= 2 * (a + c));
            // det ℬ · (1 − z1) = P
            let zeta = [0.31, 0.77];
            let z: Vec<C> = zeta.iter().map(|&t| C::from_polar(1.0, TAU * t)).collect();
            let lhs = s.spectral_matrix(zeta).determinant() * (one - z[1]);
            assert!((lhs - p.evaluate(&z)).norm() < 1e-13, "{rule}");
        }
    }

    #[test]
    fn constant_length_certificates() {
        for rule in [THUE_MORSE, PERIOD_DOUBLING] {
            let s = Substitution2::parse(rule).unwrap();
            let cert = certify(&s, 60, &quick()).unwrap();
            assert_eq!(cert.branch, Branch::ConstantLength);
            assert_eq!(cert.verdict, Verdict::Certified, "{cert:?}");
            assert!(cert.chi_plus_estimate.unwrap().abs() < 1e-12);
            assert!((cert.threshold - 0.5 * 2f64.ln()).abs() < 1e-15);
            revalidate(&cert).unwrap();
        }
    }

    #[test]
    fn fibonacci_is_not_certified() {
        let s = Substitution2::parse(FIBONACCI).unwrap();
        let cert = certify(&s, 60, &quick()).unwrap();
        assert_eq!(cert.branch, Branch::IrreducibleTrace);
        assert_eq!(cert.verdict, Verdict::NotCertified);
        assert_eq!(cert.searched.len(), 60);
        assert!(cert.searched.iter().all(|w| !w.holds));
        // λ^n / (2 F_{n+1}) tends to √5 / (2φ).
        let limit = 5f64.sqrt() / (1.0 + 5f64.sqrt());
        assert!((cert.searched[59].ratio - limit).abs() < 1e-9);
        revalidate(&cert).unwrap();
    }

    #[test]
    fn irreducible_branch_certifies_unbalanced_rule() {
        // S = ((2,1),(1,0)), λ = 1 + √2 > 2·min(3, 1).
        let s = Substitution2::parse("0->001;1->0").unwrap();
        let cert = certify(&s, 60, &quick()).unwrap();
        assert_eq!(cert.branch, Branch::IrreducibleTrace);
        assert_eq!(cert.verdict, Verdict::Certified, "{cert:?}");
        let Some(Witness::Power(w)) = &cert.witness else { panic!("no power witness") };
        assert_eq!((w.n, w.column_bound.as_str()), (1, "2"));
        assert!(w.lambda_n_lower <= 1.0 + 2f64.sqrt() && 1.0 + 2f64.sqrt() <= w.lambda_n_upper);
        assert!(cert.margin.unwrap() > 0.0);
        revalidate(&cert).unwrap();
    }

    #[test]
    fn tampered_certificate_is_rejected() {
        let s = Substitution2::parse(FIBONACCI).unwrap();
        let mut cert = certify(&s, 10, &quick()).unwrap();
        cert.searched[4].holds = true;
        assert!(revalidate(&cert).is_err());
    }

    #[test]
    fn chi_plus_matches_mahler_for_thue_morse() {
        let s = Substitution2::parse(THUE_MORSE).unwrap();
        let direct = chi_plus_direct(&s, 40_000, 8, 1);
        assert!(direct.mean.abs() < 3.0 * direct.stderr + 1e-3, "{direct:?}");
        let diag = chi_plus_diagonal(&s, 40_000, 8, 1);
        assert!(diag.mean.abs() < 1e-3, "{diag:?}");
    }

    #[test]
    fn csv_has_header_and_rows() {
        let s = Substitution2::parse(FIBONACCI).unwrap();
        let mut buf = Vec::new();
        write_log_det_csv(&mut buf, &log_det_samples(&s, 5, 0)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("zeta0,zeta1,log_abs_det"));
    }

    #[test]
    fn non_primitive_rejected() {
        let s = Substitution2::parse("0->00;1->11").unwrap();
        assert!(matches!(certify(&s, 5, &quick()), Err(Error::NotPrimitive)));
    }
}
