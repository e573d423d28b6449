//! Lyapunov spectra of the twisted cocycle over the Zorich map by the Benettin method.
//!
//! Frames are pushed through the cocycle by row operations, one Rauzy step at a time.
//! Long runs of one type whose winner survives several full cycles of losers are applied
//! in closed form; the result equals naive stepping up to rounding.

use crate::combinatorics::{Permutation, StepKind};
use crate::error::{Error, Result};
use crate::lattice::{smith_normal_form, unimodular_inverse};
use crate::renormalization::{IetPoint, TwistedPoint, Zeta, TIE_EPS};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

type C = Complex64;

/// Minimum number of full loser cycles applied in closed form.
pub const ACCEL_MIN_CYCLES: f64 = 3.0;

/// Default cap on loop iterations inside one Zorich step.
pub const ITERATION_CAP: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// `ζ` uniform on `T^d`.
    Lebesgue,
    /// `ζ` uniform on the subtorus `H(π)/(H(π) ∩ Z^d)`.
    Hpi,
    /// `ζ` uniform on the nonzero points of `H(π) ∩ (Z^d/k)`; orbits stay exact.
    Qk,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasureSpec {
    pub kind: MeasureKind,
    pub k: Option<u32>,
}

impl MeasureSpec {
    pub fn lebesgue() -> Self {
        MeasureSpec { kind: MeasureKind::Lebesgue, k: None }
    }
    pub fn hpi() -> Self {
        MeasureSpec { kind: MeasureKind::Hpi, k: None }
    }
    pub fn qk(k: u32) -> Self {
        MeasureSpec { kind: MeasureKind::Qk, k: Some(k) }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.k) {
            (MeasureKind::Qk, Some(k)) if k >= 2 => Ok(()),
            (MeasureKind::Qk, _) => Err(Error::InvalidArgument("measure qk needs k >= 2".into())),
            _ => Ok(()),
        }
    }
}

/// Integer basis (columns) of `H(π) ∩ Z^d` where `H(π) = Im Ω_π`.
pub fn subtorus_basis(p: &Permutation) -> DMatrix<i64> {
    let s = smith_normal_form(&p.omega());
    let u_inv = unimodular_inverse(&s.u);
    u_inv.columns(0, s.rank).into_owned()
}

/// Whether `num/k` lies in `H(π) ∩ (Z^d/k)` modulo `Z^d`.
///
/// With `U Ω V = D` in Smith form, rows `r..d` of `U` are coordinates on the free quotient
/// `Z^d / (H(π) ∩ Z^d)`; membership means they all vanish mod `k`.
pub fn in_rational_subtorus(p: &Permutation, num: &[i64], k: i64) -> bool {
    let s = smith_normal_form(&p.omega());
    (s.rank..p.d()).all(|row| (0..p.d()).map(|j| s.u[(row, j)] as i128 * num[j] as i128).sum::<i128>() % k as i128 == 0)
}

/// Lengths from the uniform (Dirichlet(1,…,1)) distribution on the simplex.
pub fn sample_lengths<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let total: f64 = e.iter().sum();
        let lambda: Vec<f64> = e.iter().map(|x| x / total).collect();
        if lambda.iter().all(|&x| x > 0.0) {
            let s: f64 = lambda.iter().sum();
            return lambda.iter().map(|x| x / s).collect();
        }
    }
}

/// Samples `(λ, π, ζ)`; floating twists within `1e−6` of the lattice are rejected.
pub fn sample_initial<R: Rng>(p: &Permutation, m: &MeasureSpec, rng: &mut R) -> Result<TwistedPoint<f64>> {
    p.ensure_irreducible()?;
    m.validate()?;
    let d = p.d();
    let basis = subtorus_basis(p);
    let lambda = sample_lengths(d, rng);
    let base = IetPoint::new(lambda, p.clone())?;
    loop {
        let zeta = match m.kind {
            MeasureKind::Lebesgue => Zeta::real((0..d).map(|_| rng.gen::<f64>()).collect()),
            MeasureKind::Hpi => {
                let u: Vec<f64> = (0..basis.ncols()).map(|_| rng.gen::<f64>()).collect();
                Zeta::real((0..d).map(|a| (0..basis.ncols()).map(|i| basis[(a, i)] as f64 * u[i]).sum()).collect())
            }
            MeasureKind::Qk => {
                let k = m.k.unwrap() as i64;
                let c: Vec<i64> = (0..basis.ncols()).map(|_| rng.gen_range(0..k)).collect();
                Zeta::rational((0..d).map(|a| (0..basis.ncols()).map(|i| basis[(a, i)] * c[i]).sum()).collect(), k)
            }
        };
        let ok = match &zeta {
            Zeta::Rational { .. } => !zeta.is_zero(),
            Zeta::Real(_) => zeta.lattice_distance() >= 1e-6,
        };
        if ok {
            return TwistedPoint::new(base, zeta);
        }
    }
}

#[derive(Clone, Debug)]
enum Toral {
    Real(Vec<f64>),
    Modular { num: Vec<i64>, k: i64, roots: Vec<C> },
}

impl Toral {
    fn phase(&self, a: usize) -> C {
        match self {
            Toral::Real(v) => C::from_polar(1.0, TAU * v[a]),
            Toral::Modular { num, roots, .. } => roots[num[a] as usize],
        }
    }

    /// `z_w^c` and `Σ_{r<c} z_w^r`.
    fn power_and_sum(&self, w: usize, c: u64) -> (C, C) {
        match self {
            Toral::Real(v) => {
                let x = v[w];
                let f = (x * c as f64).rem_euclid(1.0);
                let zc = C::from_polar(1.0, TAU * f);
                let z = C::from_polar(1.0, TAU * x);
                let sum = if (C::new(1.0, 0.0) - z).norm() > 1e-3 {
                    (C::new(1.0, 0.0) - zc) / (C::new(1.0, 0.0) - z)
                } else {
                    let xs = if x > 0.5 { x - 1.0 } else { x };
                    if xs == 0.0 {
                        C::new(c as f64, 0.0)
                    } else {
                        let half = C::from_polar(1.0, std::f64::consts::PI * ((c as f64 - 1.0) * xs).rem_euclid(2.0));
                        half * ((std::f64::consts::PI * c as f64 * xs).sin() / (std::f64::consts::PI * xs).sin())
                    }
                };
                (zc, sum)
            }
            Toral::Modular { num, k, roots } => {
                let n = num[w];
                if n == 0 {
                    return (C::new(1.0, 0.0), C::new(c as f64, 0.0));
                }
                let e = ((c % *k as u64) as i64 * n).rem_euclid(*k);
                let zc = roots[e as usize];
                let z = roots[n as usize];
                (zc, (C::new(1.0, 0.0) - zc) / (C::new(1.0, 0.0) - z))
            }
        }
    }

    fn add_multiple(&mut self, target: usize, source: usize, c: u64) {
        match self {
            Toral::Real(v) => v[target] = (v[target] + v[source] * c as f64).rem_euclid(1.0),
            Toral::Modular { num, k, .. } => {
                num[target] = (num[target] + (c % *k as u64) as i64 * num[source]).rem_euclid(*k)
            }
        }
    }

    fn to_zeta(&self) -> Zeta {
        match self {
            Toral::Real(v) => Zeta::Real(v.clone()),
            Toral::Modular { num, k, .. } => Zeta::Rational { num: num.clone(), den: *k },
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            Toral::Real(v) => v.iter().all(|&x| x == 0.0),
            Toral::Modular { num, .. } => num.iter().all(|&n| n == 0),
        }
    }
}

/// Row-major `d × d` frame; columns are the tracked vectors.
#[derive(Clone, Debug)]
pub struct Frame {
    pub d: usize,
    pub data: Vec<C>,
}

impl Frame {
    pub fn identity(d: usize) -> Frame {
        let mut data = vec![C::new(0.0, 0.0); d * d];
        for i in 0..d {
            data[i * d + i] = C::new(1.0, 0.0);
        }
        Frame { d, data }
    }

    pub fn from_matrix(m: &DMatrix<C>) -> Frame {
        let d = m.nrows();
        Frame { d, data: (0..d * d).map(|i| m[(i / d, i % d)]).collect() }
    }

    pub fn to_matrix(&self) -> DMatrix<C> {
        DMatrix::from_row_slice(self.d, self.d, &self.data)
    }

    /// `row_t ← a·row_t + b·row_s`.
    fn combine(&mut self, t: usize, a: C, s: usize, b: C) {
        let d = self.d;
        for j in 0..d {
            let v = a * self.data[t * d + j] + b * self.data[s * d + j];
            self.data[t * d + j] = v;
        }
    }

    fn scale(&mut self, t: usize, a: C) {
        let d = self.d;
        for x in &mut self.data[t * d..(t + 1) * d] {
            *x *= a;
        }
    }

    fn row(&self, t: usize) -> Vec<C> {
        self.data[t * self.d..(t + 1) * self.d].to_vec()
    }

    fn add_row(&mut self, t: usize, row: &[C], b: C) {
        let d = self.d;
        for j in 0..d {
            self.data[t * d + j] += b * row[j];
        }
    }

    /// Modified Gram–Schmidt on the columns; adds `ln |R_jj|` to `logs`.
    pub fn orthonormalize(&mut self, logs: &mut [f64]) -> bool {
        let d = self.d;
        for j in 0..d {
            for _ in 0..2 {
                for i in 0..j {
                    let mut r = C::new(0.0, 0.0);
                    for k in 0..d {
                        r += self.data[k * d + i].conj() * self.data[k * d + j];
                    }
                    for k in 0..d {
                        let q = self.data[k * d + i];
                        self.data[k * d + j] -= r * q;
                    }
                }
            }
            let norm = (0..d).map(|k| self.data[k * d + j].norm_sqr()).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return false;
            }
            logs[j] += norm.ln();
            for k in 0..d {
                self.data[k * d + j] /= norm;
            }
        }
        true
    }
}

/// Mutable orbit state used by the spectrum engine.
#[derive(Clone, Debug)]
pub struct Walker {
    pub perm: Permutation,
    pub lambda: Vec<f64>,
    toral: Toral,
    /// Rauzy steps taken, counting the ones applied in closed form.
    pub rauzy_steps: u64,
    pub accelerate: bool,
}

impl Walker {
    pub fn new(x: &TwistedPoint<f64>) -> Walker {
        let toral = match &x.zeta {
            Zeta::Real(v) => Toral::Real(v.clone()),
            Zeta::Rational { num, den } => Toral::Modular {
                num: num.clone(),
                k: *den,
                roots: (0..*den).map(|j| C::from_polar(1.0, TAU * j as f64 / *den as f64)).collect(),
            },
        };
        Walker { perm: x.perm().clone(), lambda: x.base.lambda.clone(), toral, rauzy_steps: 0, accelerate: true }
    }

    pub fn zeta(&self) -> Zeta {
        self.toral.to_zeta()
    }

    pub fn twist_is_zero(&self) -> bool {
        self.toral.is_zero()
    }

    pub fn point(&self) -> TwistedPoint<f64> {
        let total: f64 = self.lambda.iter().sum();
        TwistedPoint {
            base: IetPoint { lambda: self.lambda.iter().map(|l| l / total).collect(), perm: self.perm.clone() },
            zeta: self.zeta(),
        }
    }

    fn kind(&self) -> Result<StepKind> {
        let (t, b) = (self.perm.alpha_t(), self.perm.alpha_b());
        let total: f64 = self.lambda.iter().sum();
        let (lt, lb) = (self.lambda[t], self.lambda[b]);
        if (lt - lb).abs() <= TIE_EPS * total {
            return Err(Error::Tie(self.perm.to_string()));
        }
        Ok(if lt > lb { StepKind::Top } else { StepKind::Bottom })
    }

    fn single_step(&mut self, kind: StepKind, frame: Option<&mut Frame>, dual: bool) {
        let (w, l) = self.perm.winner_loser(kind);
        let z = self.toral.phase(self.perm.alpha_b());
        if let Some(f) = frame {
            let one = C::new(1.0, 0.0);
            match (kind, dual) {
                (StepKind::Top, false) => f.combine(l, one, w, z),
                (StepKind::Bottom, false) => f.combine(l, z, w, one),
                (StepKind::Top, true) => f.combine(w, one, l, -z.conj()),
                (StepKind::Bottom, true) => {
                    f.combine(w, one, l, -z);
                    f.scale(l, z);
                }
            }
        }
        self.lambda[w] -= self.lambda[l];
        self.toral.add_multiple(l, w, 1);
        self.perm.apply_in_place(kind);
        self.rauzy_steps += 1;
    }

    /// Applies `c` full cycles of the current run in closed form, when `c` is large enough.
    fn accelerate_run(&mut self, kind: StepKind, frame: Option<&mut Frame>, dual: bool) {
        let d = self.perm.d();
        let (w, _) = self.perm.winner_loser(kind);
        let losers: Vec<usize> = match kind {
            StepKind::Top => self.perm.bottom()[self.perm.bottom_pos(w) + 1..d].to_vec(),
            StepKind::Bottom => self.perm.top()[self.perm.top_pos(w) + 1..d].to_vec(),
        };
        let cycle_len: f64 = losers.iter().map(|&x| self.lambda[x]).sum();
        let cf = (self.lambda[w] / cycle_len).floor() - 2.0;
        if !(ACCEL_MIN_CYCLES..=9.0e15).contains(&cf) {
            return;
        }
        let c = cf as u64;
        if let Some(f) = frame {
            let (zc, g) = self.toral.power_and_sum(w, c);
            let one = C::new(1.0, 0.0);
            match (kind, dual) {
                (StepKind::Top, false) => {
                    let rw = f.row(w);
                    for &x in &losers {
                        f.add_row(x, &rw, self.toral.phase(x) * g);
                    }
                }
                (StepKind::Top, true) => {
                    for &x in &losers {
                        let rx = f.row(x);
                        f.add_row(w, &rx, -(self.toral.phase(x) * g).conj());
                    }
                }
                (StepKind::Bottom, false) => {
                    for &x in &losers {
                        f.combine(x, zc, w, g);
                    }
                }
                (StepKind::Bottom, true) => {
                    let zb = self.toral.phase(w);
                    for &x in &losers {
                        f.combine(w, one, x, -zb * g);
                        f.scale(x, zc);
                    }
                }
            }
        }
        for &x in &losers {
            self.toral.add_multiple(x, w, c);
        }
        self.lambda[w] -= cf * cycle_len;
        self.rauzy_steps += c * losers.len() as u64;
    }

    /// One Zorich step; lengths are renormalized to sum 1 afterwards.
    pub fn zorich_step(&mut self, mut frame: Option<&mut Frame>, dual: bool, cap: usize) -> Result<StepKind> {
        let kind = self.kind()?;
        let mut iterations = 0;
        loop {
            if self.accelerate {
                self.accelerate_run(kind, frame.as_deref_mut(), dual);
            }
            self.single_step(kind, frame.as_deref_mut(), dual);
            iterations += 1;
            if iterations > cap {
                return Err(Error::ZorichOverflow(cap));
            }
            if self.kind()? != kind {
                break;
            }
        }
        let total: f64 = self.lambda.iter().sum();
        for l in &mut self.lambda {
            *l /= total;
        }
        if matches!(self.toral, Toral::Modular { .. }) && self.toral.is_zero() {
            return Err(Error::Invariant("rational twist reached zero".into()));
        }
        Ok(kind)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BenettinConfig {
    pub steps: usize,
    pub seeds: usize,
    pub seed: u64,
    pub qr_interval: usize,
    pub burn_in: usize,
    pub dual: bool,
    /// Checkpoints per seed recorded in the trajectory (0 disables).
    pub checkpoints: usize,
    pub cap: usize,
}

impl Default for BenettinConfig {
    fn default() -> Self {
        BenettinConfig {
            steps: 100_000,
            seeds: 8,
            seed: 1,
            qr_interval: 1,
            burn_in: 1_000,
            dual: false,
            checkpoints: 0,
            cap: ITERATION_CAP,
        }
    }
}

/// Running exponent estimates of one seed.
#[derive(Clone, Debug, Serialize)]
pub struct TrajectoryPoint {
    pub seed: usize,
    pub step: usize,
    pub exponents: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedResult {
    pub exponents: Vec<f64>,
    pub rauzy_steps: u64,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Exponents per Zorich step, sorted decreasingly, averaged over seeds.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumEstimate {
    pub permutation: String,
    pub measure: MeasureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub steps: usize,
    pub seeds: usize,
    pub qr_interval: usize,
    pub dual: bool,
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    pub symmetry_defect: f64,
    pub zero_count: usize,
    pub expected_zero_count: usize,
    pub kappa: usize,
    pub genus: usize,
    pub rauzy_steps_per_zorich: f64,
    pub per_seed: Vec<Vec<f64>>,
    #[serde(skip)]
    pub trajectory: Vec<TrajectoryPoint>,
}

impl SpectrumEstimate {
    /// `max_i |χ_i + χ_{d+1−i}|`.
    pub fn symmetry_defect(exponents: &[f64]) -> f64 {
        let d = exponents.len();
        (0..d).map(|i| (exponents[i] + exponents[d - 1 - i]).abs()).fold(0.0, f64::max)
    }

    /// Zero threshold for exponent `i`: `max(0.01, 3 σ_i)`.
    pub fn zero_tol(&self, i: usize) -> f64 {
        f64::max(0.01, 3.0 * self.stderr[i])
    }

    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("seed,step");
        for i in 0..self.exponents.len() {
            out.push_str(&format!(",chi{}", i + 1));
        }
        out.push('\n');
        for t in &self.trajectory {
            out.push_str(&format!("{},{}", t.seed, t.step));
            for x in &t.exponents {
                out.push_str(&format!(",{x:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

fn run_seed_once(
    p: &Permutation,
    m: &MeasureSpec,
    cfg: &BenettinConfig,
    index: usize,
    qr_interval: usize,
) -> Result<SeedResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let x = sample_initial(p, m, &mut rng)?;
    let d = p.d();
    let mut walker = Walker::new(&x);
    let mut frame = Frame::identity(d);
    let mut scratch = vec![0.0; d];
    for n in 0..cfg.burn_in {
        walker.zorich_step(Some(&mut frame), cfg.dual, cfg.cap)?;
        if (n + 1) % qr_interval == 0 && !frame.orthonormalize(&mut scratch) {
            return Err(Error::NonFinite("burn-in".into()));
        }
    }
    if !frame.orthonormalize(&mut scratch) {
        return Err(Error::NonFinite("burn-in".into()));
    }
    let start_steps = walker.rauzy_steps;
    let mut logs = vec![0.0; d];
    let mut trajectory = Vec::new();
    let every = cfg.steps.checked_div(cfg.checkpoints).map_or(usize::MAX, |e| e.max(1));
    for n in 1..=cfg.steps {
        walker.zorich_step(Some(&mut frame), cfg.dual, cfg.cap)?;
        if (n % qr_interval == 0 || n == cfg.steps) && !frame.orthonormalize(&mut logs) {
            return Err(Error::NonFinite(format!("QR at step {n}")));
        }
        if n % every == 0 {
            let mut probe = frame.clone();
            let mut partial = logs.clone();
            if n % qr_interval != 0 {
                probe.orthonormalize(&mut partial);
            }
            trajectory.push(TrajectoryPoint {
                seed: index,
                step: n,
                exponents: sorted_desc(partial.iter().map(|l| l / n as f64).collect()),
            });
        }
    }
    Ok(SeedResult {
        exponents: sorted_desc(logs.iter().map(|l| l / cfg.steps as f64).collect()),
        rauzy_steps: walker.rauzy_steps - start_steps,
        trajectory,
    })
}

fn run_seed(p: &Permutation, m: &MeasureSpec, cfg: &BenettinConfig, index: usize) -> Result<SeedResult> {
    match run_seed_once(p, m, cfg, index, cfg.qr_interval) {
        Err(Error::NonFinite(_)) if cfg.qr_interval > 1 => {
            run_seed_once(p, m, cfg, index, (cfg.qr_interval / 2).max(1))
        }
        other => other,
    }
}

/// Benettin estimate over `cfg.seeds` independent orbits; seeds run in parallel and are
/// reduced in index order, so the result is independent of thread count.
pub fn benettin_spectrum(p: &Permutation, m: &MeasureSpec, cfg: &BenettinConfig) -> Result<SpectrumEstimate> {
    p.ensure_irreducible()?;
    m.validate()?;
    if cfg.steps == 0 || cfg.seeds == 0 || cfg.qr_interval == 0 {
        return Err(Error::InvalidArgument("steps, seeds and qr_interval must be positive".into()));
    }
    let (genus, kappa) = p.genus_kappa()?;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<SeedResult>> = {
        use rayon::prelude::*;
        (0..cfg.seeds).into_par_iter().map(|i| run_seed(p, m, cfg, i)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<SeedResult>> = (0..cfg.seeds).map(|i| run_seed(p, m, cfg, i)).collect();
    let results: Vec<SeedResult> = results.into_iter().collect::<Result<_>>()?;

    let d = p.d();
    let n = results.len() as f64;
    let exponents: Vec<f64> = (0..d).map(|i| results.iter().map(|r| r.exponents[i]).sum::<f64>() / n).collect();
    let stderr: Vec<f64> = (0..d)
        .map(|i| {
            if results.len() < 2 {
                return 0.0;
            }
            let var = results.iter().map(|r| (r.exponents[i] - exponents[i]).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        })
        .collect();
    let rauzy: u64 = results.iter().map(|r| r.rauzy_steps).sum();
    let mut est = SpectrumEstimate {
        permutation: p.to_string(),
        measure: m.kind,
        k: m.k,
        steps: cfg.steps,
        seeds: cfg.seeds,
        qr_interval: cfg.qr_interval,
        dual: cfg.dual,
        symmetry_defect: SpectrumEstimate::symmetry_defect(&exponents),
        exponents,
        stderr,
        zero_count: 0,
        expected_zero_count: kappa + 1,
        kappa,
        genus,
        rauzy_steps_per_zorich: rauzy as f64 / (n * cfg.steps as f64),
        per_seed: results.iter().map(|r| r.exponents.clone()).collect(),
        trajectory: results.into_iter().flat_map(|r| r.trajectory).collect(),
    };
    est.zero_count = (0..d).filter(|&i| est.exponents[i].abs() < est.zero_tol(i)).count();
    Ok(est)
}

/// Symmetry and zero-count diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    pub symmetry_defect: f64,
    /// Defect divided by the stderr of the paired sum.
    pub symmetry_sigmas: f64,
    pub zero_count: usize,
    pub expected_zero_count: usize,
    pub top_exponent: f64,
    pub top_stderr: f64,
}

pub fn symmetry_report(est: &SpectrumEstimate) -> SymmetryReport {
    let d = est.exponents.len();
    let mut sigmas = 0.0f64;
    for i in 0..d {
        let j = d - 1 - i;
        let sum = est.exponents[i] + est.exponents[j];
        let pair: Vec<f64> = est.per_seed.iter().map(|e| e[i] + e[j]).collect();
        let n = pair.len() as f64;
        let mean = pair.iter().sum::<f64>() / n;
        let se = if pair.len() > 1 {
            (pair.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        let ratio = if se > 0.0 {
            sum.abs() / se
        } else if sum == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        sigmas = sigmas.max(ratio);
    }
    SymmetryReport {
        symmetry_defect: est.symmetry_defect,
        symmetry_sigmas: sigmas,
        zero_count: est.zero_count,
        expected_zero_count: est.expected_zero_count,
        top_exponent: est.exponents[0],
        top_stderr: est.stderr[0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renormalization::{rauzy_step, step_kind};

    fn p(s: &str) -> Permutation {
        Permutation::parse(s).unwrap()
    }

    /// Naive Zorich step through `rauzy_step`, frame multiplied by explicit matrices.
    fn naive(x: &TwistedPoint<f64>, frame: &DMatrix<C>, dual: bool) -> (TwistedPoint<f64>, DMatrix<C>) {
        let kind = step_kind(&x.base).unwrap();
        let mut cur = x.clone();
        let mut f = frame.clone();
        loop {
            let (next, rec) = rauzy_step(&cur).unwrap();
            f = if dual { rec.dual_inverse_matrix() * f } else { rec.twisted_matrix() * f };
            cur = next;
            if step_kind(&cur.base).unwrap() != kind {
                return (cur, f);
            }
        }
    }

    #[test]
    fn accelerated_step_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in ["AB/BA", "ABC/CBA", "ABCD/DCBA", "ABCD/DBCA", "ABCDE/EDCBA"] {
            for m in [MeasureSpec::lebesgue(), MeasureSpec::qk(7)] {
                for dual in [false, true] {
                    for _ in 0..40 {
                        let mut x = sample_initial(&p(s), &m, &mut rng).unwrap();
                        // Force long runs: one dominant length.
                        let big = if rng.gen::<bool>() { x.perm().alpha_t() } else { x.perm().alpha_b() };
                        x.base.lambda[big] += 40.0;
                        let t: f64 = x.base.lambda.iter().sum();
                        x.base.lambda.iter_mut().for_each(|l| *l /= t);
                        let d = x.d();
                        let f0 = DMatrix::from_fn(d, d, |i, j| {
                            C::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.2)
                        });
                        let (y, f1) = naive(&x, &f0, dual);
                        let mut w = Walker::new(&x);
                        let mut frame = Frame::from_matrix(&f0);
                        w.zorich_step(Some(&mut frame), dual, ITERATION_CAP).unwrap();
                        let scale = f1.norm().max(1.0);
                        assert!((frame.to_matrix() - &f1).norm() / scale < 1e-9, "{s} dual={dual}");
                        let lam_err =
                            w.lambda.iter().zip(&y.base.lambda).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                        assert!(lam_err < 1e-9);
                        assert_eq!(w.perm, *y.perm());
                        match (&w.zeta(), &y.zeta) {
                            (Zeta::Rational { num: a, .. }, Zeta::Rational { num: b, .. }) => assert_eq!(a, b),
                            (a, b) => {
                                let e = a
                                    .to_f64()
                                    .iter()
                                    .zip(b.to_f64())
                                    .map(|(u, v)| {
                                        let dd = (u - v).rem_euclid(1.0);
                                        dd.min(1.0 - dd)
                                    })
                                    .fold(0.0, f64::max);
                                assert!(e < 1e-9);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn subtorus_samples_lie_in_subspace() {
        let q = p("ABC/CBA");
        let kernel = crate::lattice::integer_kernel(&q.omega());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = sample_initial(&q, &MeasureSpec::hpi(), &mut rng).unwrap();
            let z = x.zeta.to_f64();
            for c in 0..kernel.ncols() {
                let dot: f64 = (0..3).map(|a| kernel[(a, c)] as f64 * z[a]).sum();
                assert!((dot - dot.round()).abs() < 1e-12);
            }
            assert!((x.base.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn subtorus_basis_spans_image() {
        for s in ["ABC/CBA", "ABCD/DBCA", "ABCD/DCBA", "AB/BA"] {
            let q = p(s);
            let b = subtorus_basis(&q);
            let (g, kappa) = q.genus_kappa().unwrap();
            assert_eq!(b.ncols(), 2 * g);
            assert_eq!(b.ncols(), q.d() + 1 - kappa);
        }
    }

    #[test]
    fn rational_orbit_stays_exact_and_nonzero() {
        let q = p("ABCD/DCBA");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = sample_initial(&q, &MeasureSpec::qk(7), &mut rng).unwrap();
        assert!(!in_rational_subtorus(&p("ABC/CBA"), &[1, 0, 0], 7));
        assert!(in_rational_subtorus(&p("ABC/CBA"), &[1, 1, 0], 7));
        let mut w = Walker::new(&x);
        for _ in 0..5_000 {
            w.zorich_step(None, false, ITERATION_CAP).unwrap();
            assert!(!w.twist_is_zero());
            let Zeta::Rational { num, den: 7 } = w.zeta() else { panic!("twist left Q_7") };
            assert!(in_rational_subtorus(&w.perm, &num, 7));
        }
    }

    #[test]
    fn spectrum_is_deterministic_and_symmetric() {
        let cfg = BenettinConfig { steps: 4_000, seeds: 4, burn_in: 100, ..Default::default() };
        let a = benettin_spectrum(&p("ABCD/DCBA"), &MeasureSpec::hpi(), &cfg).unwrap();
        let b = benettin_spectrum(&p("ABCD/DCBA"), &MeasureSpec::hpi(), &cfg).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert!(a.symmetry_defect < 0.05, "{a:?}");
        assert!(a.exponents.windows(2).all(|w| w[0] >= w[1]));
    }
}
