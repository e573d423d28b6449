//! Rauzy and Zorich renormalization of (twisted) interval exchanges, the integer and
//! twisted step matrices, loop products and self-similar fixed points.

use crate::combinatorics::{Permutation, StepKind};
use crate::error::{Error, Result};
use crate::laurent::LaurentPoly;
use crate::ring::{Ring, RingMatrix};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive};
use serde::Serialize;
use std::f64::consts::TAU;
use std::fmt::Debug;

/// Relative gap below which two floating lengths count as tied.
pub const TIE_EPS: f64 = 1e-15;

/// Default cap on Rauzy steps inside one Zorich step.
pub const ZORICH_CAP: usize = 1_000_000;

/// Scalar type for length vectors: `f64` or exact `BigRational`.
pub trait LengthScalar: Clone + Debug + PartialOrd + Num + Signed {
    fn to_f64(&self) -> f64;
    /// Whether `a` and `b` must be reported as a tie given the current total length.
    fn is_tie(a: &Self, b: &Self, total: &Self) -> bool;
    fn normalizes(total: &Self) -> bool;
}

impl LengthScalar for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_tie(a: &Self, b: &Self, total: &Self) -> bool {
        (a - b).abs() <= TIE_EPS * total
    }
    fn normalizes(total: &Self) -> bool {
        (total - 1.0).abs() < 1e-12
    }
}

impl LengthScalar for BigRational {
    fn to_f64(&self) -> f64 {
        crate::lattice::rational_to_f64(self)
    }
    fn is_tie(a: &Self, b: &Self, _total: &Self) -> bool {
        a == b
    }
    fn normalizes(total: &Self) -> bool {
        total == &BigRational::from_integer(1.into())
    }
}

/// Normalized IET: positive lengths summing to 1 and an irreducible permutation.
#[derive(Clone, Debug, PartialEq)]
pub struct IetPoint<L: LengthScalar> {
    pub lambda: Vec<L>,
    pub perm: Permutation,
}

impl<L: LengthScalar> IetPoint<L> {
    pub fn new(lambda: Vec<L>, perm: Permutation) -> Result<Self> {
        perm.ensure_irreducible()?;
        if lambda.len() != perm.d() {
            return Err(Error::InvalidArgument(format!("expected {} lengths, got {}", perm.d(), lambda.len())));
        }
        if lambda.iter().any(|l| !l.is_positive()) {
            return Err(Error::InvalidArgument("lengths must be positive".into()));
        }
        let total = lambda.iter().fold(L::zero(), |a, b| a + b.clone());
        if !L::normalizes(&total) {
            return Err(Error::InvalidArgument("lengths must sum to 1".into()));
        }
        Ok(IetPoint { lambda, perm })
    }

    pub fn d(&self) -> usize {
        self.perm.d()
    }

    pub fn lambda_f64(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| l.to_f64()).collect()
    }
}

/// Twist parameter on `T^d = R^d/Z^d`, stored reduced.
#[derive(Clone, Debug, PartialEq)]
pub enum Zeta {
    Real(Vec<f64>),
    /// `num[α] / den`, numerators reduced to `0..den`.
    Rational {
        num: Vec<i64>,
        den: i64,
    },
}

impl Zeta {
    pub fn real(values: Vec<f64>) -> Zeta {
        Zeta::Real(values.into_iter().map(|x| x.rem_euclid(1.0)).collect())
    }

    pub fn rational(num: Vec<i64>, den: i64) -> Zeta {
        assert!(den > 0);
        Zeta::Rational { num: num.into_iter().map(|n| n.rem_euclid(den)).collect(), den }
    }

    pub fn zero(d: usize) -> Zeta {
        Zeta::Real(vec![0.0; d])
    }

    pub fn d(&self) -> usize {
        match self {
            Zeta::Real(v) => v.len(),
            Zeta::Rational { num, .. } => num.len(),
        }
    }

    pub fn value(&self, letter: usize) -> f64 {
        match self {
            Zeta::Real(v) => v[letter],
            Zeta::Rational { num, den } => num[letter] as f64 / *den as f64,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.d()).map(|a| self.value(a)).collect()
    }

    pub fn phase(&self, letter: usize) -> Complex64 {
        match self {
            Zeta::Real(v) => Complex64::from_polar(1.0, TAU * v[letter]),
            Zeta::Rational { num, den } => Complex64::from_polar(1.0, TAU * num[letter] as f64 / *den as f64),
        }
    }

    pub fn phases(&self) -> Vec<Complex64> {
        (0..self.d()).map(|a| self.phase(a)).collect()
    }

    /// `ζ_loser += ζ_winner`, the action of `I + E_{loser,winner}`.
    pub fn apply_step(&mut self, winner: usize, loser: usize) {
        match self {
            Zeta::Real(v) => v[loser] = (v[loser] + v[winner]).rem_euclid(1.0),
            Zeta::Rational { num, den } => num[loser] = (num[loser] + num[winner]).rem_euclid(*den),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Zeta::Real(v) => v.iter().all(|&x| x == 0.0),
            Zeta::Rational { num, .. } => num.iter().all(|&n| n == 0),
        }
    }

    /// Largest distance of a coordinate to the nearest integer.
    pub fn lattice_distance(&self) -> f64 {
        (0..self.d())
            .map(|a| {
                let x = self.value(a);
                x.min(1.0 - x)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedPoint<L: LengthScalar> {
    pub base: IetPoint<L>,
    pub zeta: Zeta,
}

impl<L: LengthScalar> TwistedPoint<L> {
    pub fn new(base: IetPoint<L>, zeta: Zeta) -> Result<Self> {
        if zeta.d() != base.d() {
            return Err(Error::InvalidArgument("twist dimension mismatch".into()));
        }
        Ok(TwistedPoint { base, zeta })
    }

    pub fn perm(&self) -> &Permutation {
        &self.base.perm
    }

    pub fn d(&self) -> usize {
        self.base.d()
    }
}

/// One Rauzy step: type, letters, and the pre-step phase of `α_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub kind: StepKind,
    pub winner: usize,
    pub loser: usize,
    /// `exp(2πi ζ_{α_b})` before the step.
    pub phase: Complex64,
    /// Exact pre-step `ζ_{α_b}` as `(num, den)` in rational mode.
    pub phase_exact: Option<(i64, i64)>,
    pub lambda_after: Vec<f64>,
    /// Last step before a change of type.
    pub zorich_boundary: bool,
}

impl StepRecord {
    pub fn d(&self) -> usize {
        self.lambda_after.len()
    }

    /// `I + E_{loser,winner}`.
    pub fn integer_matrix(&self) -> DMatrix<i64> {
        let mut b = DMatrix::identity(self.d(), self.d());
        b[(self.loser, self.winner)] = 1;
        b
    }

    /// Top: `I + z E_{b,t}`. Bottom: `I + E_{t,b} + (z−1) E_{t,t}`. Here `z` is the phase of `α_b`.
    pub fn twisted_in<R: Ring>(&self, z: &R) -> RingMatrix<R> {
        twisted_step(self.kind, self.winner, self.loser, self.d(), z)
    }

    pub fn twisted_matrix(&self) -> DMatrix<Complex64> {
        to_dmatrix(&self.twisted_in(&self.phase))
    }

    /// `(ℬ^*)^{-1}`.
    pub fn dual_inverse_matrix(&self) -> DMatrix<Complex64> {
        let d = self.d();
        let z = self.phase;
        let mut m = DMatrix::identity(d, d);
        match self.kind {
            StepKind::Top => m[(self.winner, self.loser)] = -z.conj(),
            StepKind::Bottom => {
                m[(self.loser, self.loser)] = z;
                m[(self.winner, self.loser)] = -z;
            }
        }
        m
    }

    pub fn log_entry(&self, perm: &Permutation) -> StepLogEntry {
        let b = self.integer_matrix();
        StepLogEntry {
            kind: self.kind,
            winner: perm.label(self.winner).to_string(),
            loser: perm.label(self.loser).to_string(),
            b: (0..self.d()).map(|i| b.row(i).iter().copied().collect()).collect(),
            lambda_after: self.lambda_after.clone(),
        }
    }
}

/// JSON form of a step.
#[derive(Clone, Debug, Serialize)]
pub struct StepLogEntry {
    pub kind: StepKind,
    pub winner: String,
    pub loser: String,
    #[serde(rename = "B")]
    pub b: Vec<Vec<i64>>,
    pub lambda_after: Vec<f64>,
}

pub fn twisted_step<R: Ring>(kind: StepKind, winner: usize, loser: usize, d: usize, z: &R) -> RingMatrix<R> {
    let mut m = RingMatrix::identity(d, &z.one_like());
    match kind {
        StepKind::Top => m.set(loser, winner, z.clone()),
        StepKind::Bottom => {
            m.set(loser, winner, z.one_like());
            m.set(loser, loser, z.clone());
        }
    }
    m
}

pub fn to_dmatrix(m: &RingMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.n, m.n, |i, j| *m.get(i, j))
}

/// Type of the next Rauzy step, or a tie error.
pub fn step_kind<L: LengthScalar>(x: &IetPoint<L>) -> Result<StepKind> {
    let (t, b) = (x.perm.alpha_t(), x.perm.alpha_b());
    let total = x.lambda.iter().fold(L::zero(), |a, l| a + l.clone());
    let (lt, lb) = (&x.lambda[t], &x.lambda[b]);
    if L::is_tie(lt, lb, &total) {
        return Err(Error::Tie(x.perm.to_string()));
    }
    Ok(if lt > lb { StepKind::Top } else { StepKind::Bottom })
}

/// One Rauzy step with renormalized lengths.
pub fn rauzy_step<L: LengthScalar>(x: &TwistedPoint<L>) -> Result<(TwistedPoint<L>, StepRecord)> {
    let kind = step_kind(&x.base)?;
    let (winner, loser) = x.perm().winner_loser(kind);
    let alpha_b = x.perm().alpha_b();
    let phase = x.zeta.phase(alpha_b);
    let phase_exact = match &x.zeta {
        Zeta::Rational { num, den } => Some((num[alpha_b], *den)),
        Zeta::Real(_) => None,
    };
    let mut lambda = x.base.lambda.clone();
    lambda[winner] = lambda[winner].clone() - lambda[loser].clone();
    let total = lambda.iter().fold(L::zero(), |a, l| a + l.clone());
    for l in lambda.iter_mut() {
        *l = l.clone() / total.clone();
    }
    let mut zeta = x.zeta.clone();
    zeta.apply_step(winner, loser);
    let record = StepRecord {
        kind,
        winner,
        loser,
        phase,
        phase_exact,
        lambda_after: lambda.iter().map(|l| l.to_f64()).collect(),
        zorich_boundary: false,
    };
    let base = IetPoint { lambda, perm: x.perm().successor(kind) };
    Ok((TwistedPoint { base, zeta }, record))
}

/// Maximal run of same-type Rauzy steps; fails after `cap` steps.
pub fn zorich_step<L: LengthScalar>(x: &TwistedPoint<L>, cap: usize) -> Result<(TwistedPoint<L>, Vec<StepRecord>)> {
    let kind = step_kind(&x.base)?;
    let mut records = Vec::new();
    let mut cur = x.clone();
    loop {
        if records.len() >= cap {
            return Err(Error::ZorichOverflow(cap));
        }
        let (next, rec) = rauzy_step(&cur)?;
        records.push(rec);
        cur = next;
        if step_kind(&cur.base)? != kind {
            records.last_mut().unwrap().zorich_boundary = true;
            return Ok((cur, records));
        }
    }
}

/// Ordered product `ℬ_n ⋯ ℬ_1` of the twisted step matrices.
pub fn twisted_product(records: &[StepRecord]) -> DMatrix<Complex64> {
    let d = records.first().map_or(0, |r| r.d());
    records.iter().fold(DMatrix::identity(d, d), |acc, r| r.twisted_matrix() * acc)
}

pub fn integer_product(records: &[StepRecord]) -> DMatrix<i64> {
    let d = records.first().map_or(0, |r| r.d());
    records.iter().fold(DMatrix::identity(d, d), |acc, r| r.integer_matrix() * acc)
}

/// A step of a combinatorial loop.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopStep {
    pub kind: StepKind,
    pub winner: usize,
    pub loser: usize,
}

/// Closed path in a Rauzy class, given by its winners.
#[derive(Clone, Debug)]
pub struct RauzyLoop {
    pub start: Permutation,
    pub steps: Vec<LoopStep>,
}

impl RauzyLoop {
    /// Accepts winners `"C,B,C,A"` or `"C>A,B>C"` tokens; the path must close.
    pub fn parse(start: &Permutation, moves: &str) -> Result<RauzyLoop> {
        let mut p = start.clone();
        let mut steps = Vec::new();
        for tok in moves.split([',', ' ', ';']).map(str::trim).filter(|t| !t.is_empty()) {
            let (w, l) = match tok.split_once('>') {
                Some((w, l)) => (w.trim(), Some(l.trim())),
                None => (tok, None),
            };
            let letter = |s: &str| -> Result<usize> {
                let mut cs = s.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => p.letter(c).ok_or_else(|| Error::InvalidMove(tok.to_string())),
                    _ => Err(Error::InvalidMove(tok.to_string())),
                }
            };
            let winner = letter(w)?;
            let kind = if winner == p.alpha_t() {
                StepKind::Top
            } else if winner == p.alpha_b() {
                StepKind::Bottom
            } else {
                return Err(Error::InvalidMove(format!("{tok} at {p}")));
            };
            let (_, loser) = p.winner_loser(kind);
            if let Some(l) = l {
                if letter(l)? != loser {
                    return Err(Error::InvalidMove(format!("{tok} at {p}")));
                }
            }
            steps.push(LoopStep { kind, winner, loser });
            p.apply_in_place(kind);
        }
        if steps.is_empty() {
            return Err(Error::InvalidMove("empty loop".into()));
        }
        if &p != start {
            return Err(Error::OpenPath(p.to_string()));
        }
        Ok(RauzyLoop { start: start.clone(), steps })
    }

    pub fn d(&self) -> usize {
        self.start.d()
    }

    /// `B_γ = B_n ⋯ B_1`.
    pub fn integer_matrix(&self) -> DMatrix<i64> {
        let d = self.d();
        self.steps.iter().fold(DMatrix::identity(d, d), |acc, s| {
            let mut b = DMatrix::identity(d, d);
            b[(s.loser, s.winner)] = 1;
            b * acc
        })
    }

    /// `ℬ_γ(ζ)` over any ring given the phases `z_α`, together with the phases of `B_γ ζ`.
    pub fn twisted<R: Ring>(&self, z: &[R]) -> (RingMatrix<R>, Vec<R>) {
        let d = self.d();
        let mut z = z.to_vec();
        let mut perm = self.start.clone();
        let mut acc = RingMatrix::identity(d, &z[0].one_like());
        for s in &self.steps {
            let zb = z[perm.alpha_b()].clone();
            acc = twisted_step(s.kind, s.winner, s.loser, d, &zb).mul(&acc);
            z[s.loser] = z[s.loser].mul(&z[s.winner]);
            perm.apply_in_place(s.kind);
        }
        (acc, z)
    }

    /// `ℬ_γ` with `z_α` as formal variables.
    pub fn twisted_symbolic(&self) -> (RingMatrix<LaurentPoly>, Vec<LaurentPoly>) {
        let d = self.d();
        let vars: Vec<LaurentPoly> = (0..d).map(|i| LaurentPoly::variable(d, i)).collect();
        self.twisted(&vars)
    }
}

/// `(B_γ, ℬ_γ(z))` for winners `moves` from `p`.
pub fn loop_product<R: Ring>(p: &Permutation, moves: &str, z: &[R]) -> Result<(DMatrix<i64>, RingMatrix<R>)> {
    let lp = RauzyLoop::parse(p, moves)?;
    Ok((lp.integer_matrix(), lp.twisted(z).0))
}

/// Whether some power of the nonnegative matrix is strictly positive.
pub fn is_primitive(b: &DMatrix<i64>) -> bool {
    let d = b.nrows();
    let pattern = b.map(|x| x > 0);
    let mut power = pattern.clone();
    for _ in 0..(d - 1) * (d - 1) + 1 {
        if power.iter().all(|&x| x) {
            return true;
        }
        power = DMatrix::from_fn(d, d, |i, j| (0..d).any(|k| power[(i, k)] && pattern[(k, j)]));
    }
    power.iter().all(|&x| x)
}

/// Left Perron eigenvector (normalized to sum 1) and Perron value of a primitive matrix.
pub fn left_perron(b: &DMatrix<i64>) -> Result<(Vec<f64>, f64)> {
    if !is_primitive(b) {
        return Err(Error::NotPrimitive);
    }
    let d = b.nrows();
    let bf = b.map(|x| x as f64);
    let mut v = vec![1.0 / d as f64; d];
    let mut value = 0.0;
    for _ in 0..100_000 {
        let w: Vec<f64> = (0..d).map(|j| (0..d).map(|i| v[i] * bf[(i, j)]).sum()).collect();
        let s: f64 = w.iter().sum();
        let next: Vec<f64> = w.iter().map(|x| x / s).collect();
        let delta = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = next;
        value = s;
        if delta < 1e-16 {
            break;
        }
    }
    Ok((v, value))
}

/// Lengths fixed by renormalization along the loop, checked by stepping around it.
pub fn self_similar_fixed_point(p: &Permutation, moves: &str) -> Result<IetPoint<f64>> {
    let lp = RauzyLoop::parse(p, moves)?;
    let (lambda, _) = left_perron(&lp.integer_matrix())?;
    let start = IetPoint::new(lambda.clone(), p.clone())?;
    let mut x = TwistedPoint::new(start.clone(), Zeta::zero(p.d()))?;
    for s in &lp.steps {
        let (next, rec) = rauzy_step(&x)?;
        if rec.kind != s.kind {
            return Err(Error::Invariant(format!("lengths do not follow the loop at {}", x.perm())));
        }
        x = next;
    }
    let drift = x.base.lambda.iter().zip(&lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if drift > 1e-10 {
        return Err(Error::Invariant(format!("loop does not fix the Perron lengths (drift {drift:e})")));
    }
    Ok(start)
}

/// Exact rational lengths from an `f64` vector; used for tie-free exact orbits.
pub fn rational_lengths(values: &[u64]) -> Vec<BigRational> {
    let total: u64 = values.iter().sum();
    values.iter().map(|&v| BigRational::new(v.into(), total.into())).collect()
}

/// Sum of the entries, a quick exactness check for rational length vectors.
pub fn total_length<L: LengthScalar>(lambda: &[L]) -> f64 {
    lambda.iter().fold(L::zero(), |a, l| a + l.clone()).to_f64()
}

pub fn rational_to_i64(x: &BigRational) -> Option<i64> {
    if x.is_integer() {
        x.to_integer().to_i64()
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laurent::LaurentPoly;

    fn p(s: &str) -> Permutation {
        Permutation::parse(s).unwrap()
    }

    const LOOP3: &str = "C>A,B>C,C>B,A>C,B>A,A>B";
    const LOOP4: &str = "D>A,D>B,C>D,D>C,A>D,A>C,B>A,A>B";

    #[test]
    fn loop_matrices() {
        let l3 = RauzyLoop::parse(&p("ABC/CBA"), LOOP3).unwrap();
        assert_eq!(l3.integer_matrix(), DMatrix::from_row_slice(3, 3, &[1, 2, 2, 1, 4, 3, 1, 1, 2]));
        let l4 = RauzyLoop::parse(&p("ABCD/DCBA"), LOOP4).unwrap();
        assert_eq!(
            l4.integer_matrix(),
            DMatrix::from_row_slice(4, 4, &[1, 1, 0, 2, 1, 2, 0, 3, 1, 0, 2, 2, 1, 0, 1, 2])
        );
        let winners_only = RauzyLoop::parse(&p("ABC/CBA"), "C,B,C,A,B,A").unwrap();
        assert_eq!(winners_only.steps, l3.steps);
    }

    #[test]
    fn loop_errors() {
        assert!(matches!(RauzyLoop::parse(&p("ABC/CBA"), "B"), Err(Error::InvalidMove(_))));
        assert!(matches!(RauzyLoop::parse(&p("ABC/CBA"), "C"), Err(Error::OpenPath(_))));
        assert!(matches!(RauzyLoop::parse(&p("ABC/CBA"), "C>B"), Err(Error::InvalidMove(_))));
    }

    #[test]
    fn symbolic_entry_of_three_letter_loop() {
        let l3 = RauzyLoop::parse(&p("ABC/CBA"), LOOP3).unwrap();
        let (m, z) = l3.twisted_symbolic();
        let names = ["a", "b", "c"];
        let e = LaurentPoly::parse("a c + a b c + a b^2 c^2 + a b^3 c^2", &names).unwrap();
        assert_eq!(m.get(1, 1), &e);
        assert_eq!(z[0], LaurentPoly::parse("a b^2 c^2", &names).unwrap());
        assert_eq!(z[1], LaurentPoly::parse("a b^4 c^3", &names).unwrap());
        assert_eq!(z[2], LaurentPoly::parse("a b c^2", &names).unwrap());
    }

    #[test]
    fn fixed_point_of_three_letter_loop() {
        let x = self_similar_fixed_point(&p("ABC/CBA"), LOOP3).unwrap();
        let r2 = 2f64.sqrt();
        let expect = [3.0 - 2.0 * r2, r2 - 1.0, r2 - 1.0];
        for (a, b) in x.lambda.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rational_step_is_exact() {
        let lam = rational_lengths(&[3, 5, 7]);
        let base = IetPoint::new(lam, p("ABC/CBA")).unwrap();
        let x = TwistedPoint::new(base, Zeta::rational(vec![1, 2, 3], 7)).unwrap();
        let (y, rec) = rauzy_step(&x).unwrap();
        assert_eq!(rec.kind, StepKind::Top);
        assert_eq!(y.base.lambda, rational_lengths(&[3, 5, 4]));
        assert_eq!(y.zeta, Zeta::rational(vec![4, 2, 3], 7));
        assert_eq!(y.perm().to_string(), "ABC/CAB");
    }

    #[test]
    fn exact_tie_is_reported() {
        let base = IetPoint::new(rational_lengths(&[1, 1]), p("AB/BA")).unwrap();
        let x = TwistedPoint::new(base, Zeta::zero(2)).unwrap();
        assert!(matches!(rauzy_step(&x), Err(Error::Tie(_))));
    }

    #[test]
    fn zorich_boundary_marks_type_change() {
        let base = IetPoint::new(vec![0.7, 0.05, 0.25], p("ABC/CBA")).unwrap();
        let x = TwistedPoint::new(base, Zeta::zero(3)).unwrap();
        let (_, recs) = zorich_step(&x, ZORICH_CAP).unwrap();
        assert!(recs.iter().all(|r| r.kind == recs[0].kind));
        assert!(recs.last().unwrap().zorich_boundary);
        assert!(recs[..recs.len() - 1].iter().all(|r| !r.zorich_boundary));
    }

    #[test]
    fn dual_inverse_is_inverse_adjoint() {
        let base = IetPoint::new(vec![0.3, 0.45, 0.25], p("ABC/CBA")).unwrap();
        let mut x = TwistedPoint::new(base, Zeta::real(vec![0.1, 0.77, 0.31])).unwrap();
        for _ in 0..6 {
            let (y, rec) = rauzy_step(&x).unwrap();
            let prod = rec.twisted_matrix().adjoint() * rec.dual_inverse_matrix();
            assert!((prod - DMatrix::identity(3, 3)).norm() < 1e-14);
            assert!((rec.twisted_matrix().determinant().norm() - 1.0).abs() < 1e-14);
            x = y;
        }
    }
}
