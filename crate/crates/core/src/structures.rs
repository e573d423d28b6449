//! Invariant structures of the twisted cocycle: the twisted form `Ω_{π,ζ}`, the invariant
//! section `s_ζ`, covariant sections `v^S`, the frame `W`, `H̃`, `Ñ`, the hermitian and real
//! forms, and step-by-step verification of their transformation laws.
//!
//! A point is carried as `(λ, π, η)` with `ζ = −Ω_π η`; every object below depends on
//! `η` only modulo `Z^d`.

use crate::combinatorics::{Permutation, SigmaDecomposition};
use crate::error::{Error, Result};
use crate::linalg;
use crate::renormalization::{rauzy_step, IetPoint, StepRecord, TwistedPoint, Zeta};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Relative singular-value cutoff for numerical ranks.
pub const RANK_TOL: f64 = 1e-9;

fn omega_f64(p: &Permutation) -> DMatrix<f64> {
    p.omega().map(|x| x as f64)
}

/// `Ω_{π,ζ}` together with the phases it was built from.
#[derive(Clone, Debug)]
pub struct TwistedForm {
    pub matrix: DMatrix<C>,
    pub z: Vec<C>,
    /// All phases equal 1; then `Ω_{π,ζ} = −Ω_π`.
    pub degenerate: bool,
}

/// Builds `Ω_{π,ζ}` entrywise from the relative position of each pair of letters.
pub fn omega_twisted(p: &Permutation, zeta: &[f64]) -> TwistedForm {
    let z: Vec<C> = zeta.iter().map(|&x| C::from_polar(1.0, TAU * x)).collect();
    omega_twisted_from_phases(p, &z)
}

pub fn omega_twisted_from_phases(p: &Permutation, z: &[C]) -> TwistedForm {
    let d = p.d();
    let matrix = DMatrix::from_fn(d, d, |a, b| {
        if a == b {
            return ZERO;
        }
        let right_top = p.top_pos(b) > p.top_pos(a);
        let right_bottom = p.bottom_pos(b) > p.bottom_pos(a);
        match (right_top, right_bottom) {
            (true, true) => ZERO,
            (false, true) => ONE,
            (true, false) => -z[a] / z[b],
            (false, false) => ONE - z[a] / z[b],
        }
    });
    let degenerate = z.iter().all(|x| (x - ONE).norm() < 1e-12);
    TwistedForm { matrix, z: z.to_vec(), degenerate }
}

/// `s_ζ = (1 − z_α)_α`.
pub fn invariant_section(z: &[C]) -> DVector<C> {
    DVector::from_iterator(z.len(), z.iter().map(|x| ONE - x))
}

/// Min-norm `η` with `−Ω_π η = ζ`; rejects lattice points and `ζ ∉ H(π)`.
pub fn solve_eta(p: &Permutation, zeta_lift: &[f64]) -> Result<Vec<f64>> {
    let d = p.d();
    if zeta_lift.iter().all(|x| (x - x.round()).abs() < 1e-12) {
        return Err(Error::DegenerateTwist);
    }
    let o = omega_f64(p);
    let zeta = DVector::from_column_slice(zeta_lift);
    let svd = linalg::svd_real(&o);
    let rhs = DMatrix::from_fn(zeta.len(), 1, |i, _| C::from(zeta[i]));
    let eta: DVector<f64> = -svd.solve(&rhs, 1e-10 * svd.max()).column(0).map(|x| x.re);
    let residual = (-(&o * &eta) - &zeta).camax();
    if residual > 1e-9 * (1.0 + zeta.camax()) {
        return Err(Error::NotInSubspace(residual));
    }
    debug_assert_eq!(eta.len(), d);
    Ok(eta.iter().copied().collect())
}

/// `c(j) = exp(2πi Σ_{top positions ≤ j} η)` for vertices `j = 0..=d`.
fn vertex_values(p: &Permutation, eta: &[f64]) -> Vec<C> {
    let mut cum = 0.0;
    let mut out = vec![ONE];
    for &letter in p.top() {
        cum += eta[letter];
        out.push(C::from_polar(1.0, TAU * cum));
    }
    out
}

/// `v^S(α) = c(j−1)[j−1 ∈ S] − c(j)[j ∈ S]` with `j = π_t(α)`.
pub fn covariant_section(p: &Permutation, vertex: &[C], cycle_of_vertex: &[usize], cycle: usize) -> DVector<C> {
    DVector::from_fn(p.d(), |a, _| {
        let j = p.top_pos(a) + 1;
        let left = if cycle_of_vertex[j - 1] == cycle { vertex[j - 1] } else { ZERO };
        let right = if cycle_of_vertex[j] == cycle { vertex[j] } else { ZERO };
        left - right
    })
}

/// Sections at a point `(π, η)`.
#[derive(Clone, Debug)]
pub struct SectionData {
    pub perm: Permutation,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub z: Vec<C>,
    pub form: DMatrix<C>,
    pub s: DVector<C>,
    /// `v^S` indexed like `sigma.cycles`.
    pub v: Vec<DVector<C>>,
    pub sigma: SigmaDecomposition,
}

impl SectionData {
    pub fn marked(&self) -> usize {
        self.sigma.marked()
    }

    /// `v_{π,ζ} = v^{S_0}`, the section with `Ω_{π,ζ} v = s_ζ`.
    pub fn distinguished(&self) -> &DVector<C> {
        &self.v[self.marked()]
    }

    pub fn kappa(&self) -> usize {
        self.v.len()
    }

    /// Basis of `N = ker Ω_{π,ζ}`.
    pub fn kernel_basis(&self) -> Vec<DVector<C>> {
        let m = self.marked();
        self.v.iter().enumerate().filter(|(i, _)| *i != m).map(|(_, v)| v.clone()).collect()
    }

    /// Largest violation of `Ω v^{S_0} = s`, `Ω v^S = 0`.
    pub fn section_residual(&self) -> f64 {
        let m = self.marked();
        self.v
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let target = if i == m { self.s.clone() } else { DVector::zeros(self.s.len()) };
                (&self.form * v - target).camax()
            })
            .fold(0.0, f64::max)
    }
}

/// Sections from `η`, with `ζ = −Ω_π η`. Fails if `ζ` is on the integer lattice.
pub fn sections_from_eta(p: &Permutation, eta: &[f64]) -> Result<SectionData> {
    let o = omega_f64(p);
    let zeta: Vec<f64> = (-(&o * DVector::from_column_slice(eta))).iter().copied().collect();
    let form = omega_twisted(p, &zeta);
    let s = invariant_section(&form.z);
    if s.norm() < 1e-8 {
        return Err(Error::DegenerateTwist);
    }
    let sigma = p.sigma();
    let vertex = vertex_values(p, eta);
    let v = (0..sigma.kappa()).map(|k| covariant_section(p, &vertex, &sigma.cycle_of_vertex, k)).collect();
    let data = SectionData { perm: p.clone(), eta: eta.to_vec(), zeta, z: form.z, form: form.matrix, s, v, sigma };
    let r = data.section_residual();
    if r > 1e-9 {
        return Err(Error::Invariant(format!("sections violate Ω v = s (residual {r:e})")));
    }
    Ok(data)
}

/// Sections at a lift `ζ ∈ H(π)`.
pub fn sections(p: &Permutation, zeta_lift: &[f64]) -> Result<SectionData> {
    let eta = solve_eta(p, zeta_lift)?;
    sections_from_eta(p, &eta)
}

/// Complex singular values, descending, with multiplicity.
pub fn singular_values(m: &DMatrix<C>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    linalg::svd(m).singular_values
}

/// Numerical rank from singular values.
pub fn numeric_rank(m: &DMatrix<C>) -> usize {
    let sv = singular_values(m);
    let max = sv.first().copied().unwrap_or(0.0);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&x| x > RANK_TOL * max.max(1.0)).count()
}

fn numeric_rank_real(m: &DMatrix<f64>) -> usize {
    numeric_rank(&m.map(C::from))
}

/// Modified Gram–Schmidt of `candidates` against an orthonormal `keep`; drops dependent vectors.
pub fn orthonormal_extension(keep: &[DVector<C>], candidates: &[DVector<C>]) -> Vec<DVector<C>> {
    let mut out: Vec<DVector<C>> = Vec::new();
    for c in candidates {
        let mut x = c.clone();
        let scale = x.norm();
        for _ in 0..2 {
            for q in keep.iter().chain(out.iter()) {
                let coeff = q.dotc(&x);
                x -= q * coeff;
            }
        }
        let n = x.norm();
        if n > 1e-9 * scale.max(1e-300) {
            out.push(x / C::from(n));
        }
    }
    out
}

fn columns(vs: &[DVector<C>], d: usize) -> DMatrix<C> {
    if vs.is_empty() {
        return DMatrix::zeros(d, 0);
    }
    DMatrix::from_columns(vs)
}

/// `W = s^⊥`, `H̃ = Ω W`, `Ñ`, and the forms on `H̃`.
#[derive(Clone, Debug)]
pub struct FrameBundle {
    pub sections: SectionData,
    /// Orthonormal basis of `W`, as columns.
    pub w: DMatrix<C>,
    /// Orthonormal basis of `H̃`; column 0 is `s/|s|`.
    pub h: DMatrix<C>,
    /// `f_i ∈ W` with `Ω f_i = h_i`.
    pub preimages: DMatrix<C>,
    /// `G_ij = ω(h_i, h_j) = (i/2) f_j^* h_i`.
    pub hermitian: DMatrix<C>,
    /// `−Im ω` on the real basis `(h_1, i h_1, h_2, i h_2, …)`.
    pub symplectic: DMatrix<f64>,
    pub genus: usize,
}

impl FrameBundle {
    pub fn d(&self) -> usize {
        self.w.nrows()
    }

    /// `W`-preimage under `Ω` of a vector of `H̃`, by least squares on `Ω W`.
    pub fn preimage(&self, y: &DVector<C>) -> Result<(DVector<C>, f64)> {
        let ow = &self.sections.form * &self.w;
        let svd = linalg::svd(&ow);
        let coeff = svd.solve(&DMatrix::from_column_slice(y.len(), 1, y.as_slice()), RANK_TOL * svd.max());
        let f: DVector<C> = (&self.w * coeff).column(0).into_owned();
        let residual = (&self.sections.form * &f - y).camax();
        Ok((f, residual))
    }

    /// `ω(x, y) = (i/2) g^* x` where `Ω g = y`, `g ∈ W`.
    pub fn omega(&self, x: &DVector<C>, y: &DVector<C>) -> Result<C> {
        let (g, _) = self.preimage(y)?;
        Ok(C::new(0.0, 0.5) * g.dotc(x))
    }

    pub fn dimensions(&self) -> DimensionReport {
        let sec = &self.sections;
        let d = self.d();
        let kernel = columns(&sec.kernel_basis(), d);
        let kernel_in_ker = if kernel.ncols() == 0 { 0.0 } else { (&sec.form * &kernel).camax() };
        let radical = self.hermitian.column(0).camax().max(self.hermitian.row(0).camax());
        DimensionReport {
            d,
            genus: self.genus,
            kappa: sec.kappa(),
            dim_n: numeric_rank(&kernel),
            dim_n_tilde: numeric_rank(&columns(&sec.v, d)),
            dim_w: self.w.ncols(),
            dim_h_tilde: self.h.ncols(),
            rank_hermitian: numeric_rank(&self.hermitian),
            rank_real: numeric_rank_real(&self.symplectic),
            kernel_residual: kernel_in_ker,
            s_radical_residual: radical,
        }
    }
}

/// Measured dimensions at a point; `expected_ok` compares them with the genus and `κ`.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionReport {
    pub d: usize,
    pub genus: usize,
    pub kappa: usize,
    pub dim_n: usize,
    pub dim_n_tilde: usize,
    pub dim_w: usize,
    pub dim_h_tilde: usize,
    /// Complex rank of `ω` on `H̃`; `s` spans its radical.
    pub rank_hermitian: usize,
    /// Real rank of `ω^ℝ = −Im ω` on `H̃` viewed as a real space.
    pub rank_real: usize,
    pub kernel_residual: f64,
    pub s_radical_residual: f64,
}

impl DimensionReport {
    pub fn expected_ok(&self) -> bool {
        let g = self.genus;
        self.dim_n == self.kappa - 1
            && self.dim_n_tilde == self.kappa
            && self.dim_w == self.d - 1
            && self.dim_h_tilde == 2 * g - 1
            && self.rank_hermitian == 2 * g - 2
            && self.rank_real == 4 * g - 4
            && self.kernel_residual < 1e-9
            && self.s_radical_residual < 1e-9
    }
}

pub fn frames_from_eta(p: &Permutation, eta: &[f64]) -> Result<FrameBundle> {
    let sec = sections_from_eta(p, eta)?;
    let d = p.d();
    let (genus, _) = p.genus_kappa()?;
    let s_unit = &sec.s / C::from(sec.s.norm());
    let ident: Vec<DVector<C>> = (0..d).map(|i| DVector::from_fn(d, |j, _| if i == j { ONE } else { ZERO })).collect();
    let w_cols = orthonormal_extension(std::slice::from_ref(&s_unit), &ident);
    if w_cols.len() != d - 1 {
        return Err(Error::KernelDimension { expected: d - 1, found: w_cols.len() });
    }
    let w = DMatrix::from_columns(&w_cols);
    let ow = &sec.form * &w;
    let svd = linalg::svd(&ow);
    let tol = RANK_TOL * svd.max();
    let r = svd.rank(tol);
    if r != 2 * genus - 1 {
        return Err(Error::KernelDimension { expected: 2 * genus - 1, found: r });
    }
    // Column space of Ω W, reordered below so that s comes first.
    let span = svd.range(tol);
    let span_m = DMatrix::from_columns(&span);
    let s_out = (&sec.s - &span_m * (span_m.adjoint() * &sec.s)).camax();
    if s_out > 1e-9 * (1.0 + sec.s.camax()) {
        return Err(Error::Invariant(format!("s is not in Ω W (residual {s_out:e})")));
    }
    let mut h_cols = vec![s_unit.clone()];
    h_cols.extend(orthonormal_extension(std::slice::from_ref(&s_unit), &span));
    if h_cols.len() != r {
        return Err(Error::KernelDimension { expected: r, found: h_cols.len() });
    }
    let h = DMatrix::from_columns(&h_cols);
    let coeff = svd.solve(&h, tol);
    let preimages = &w * coeff;
    let hermitian = DMatrix::from_fn(r, r, |i, j| C::new(0.0, 0.5) * preimages.column(j).dotc(&h.column(i)));
    let symplectic = DMatrix::from_fn(2 * r, 2 * r, |k, l| {
        let (i, ci) = (k / 2, if k % 2 == 0 { ONE } else { C::i() });
        let (j, cj) = (l / 2, if l % 2 == 0 { ONE } else { C::i() });
        -(ci * cj.conj() * hermitian[(i, j)]).im
    });
    Ok(FrameBundle { sections: sec, w, h, preimages, hermitian, symplectic, genus })
}

pub fn frames(p: &Permutation, zeta_lift: &[f64]) -> Result<FrameBundle> {
    let eta = solve_eta(p, zeta_lift)?;
    frames_from_eta(p, &eta)
}

/// `ι(f) = (f, f̄)`.
pub fn iota(f: &DVector<C>) -> DVector<C> {
    let d = f.len();
    DVector::from_fn(2 * d, |i, _| if i < d { f[i] } else { f[i - d].conj() })
}

/// `ℬ ⊕ ℬ(−ζ)`; the step matrices have integer coefficients in `z`, so `ℬ(−ζ) = conj ℬ(ζ)`.
pub fn real_double(m: &DMatrix<C>) -> DMatrix<C> {
    let d = m.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(m);
    out.view_mut((d, d), (d, d)).copy_from(&m.map(|x| x.conj()));
    out
}

/// A point `(λ, π, η)` of the structure dynamics.
#[derive(Clone, Debug)]
pub struct StructurePoint {
    pub base: IetPoint<f64>,
    pub eta: Vec<f64>,
}

impl StructurePoint {
    pub fn new(base: IetPoint<f64>, eta: Vec<f64>) -> Self {
        let eta = eta.into_iter().map(|x| x.rem_euclid(1.0)).collect();
        StructurePoint { base, eta }
    }

    pub fn perm(&self) -> &Permutation {
        &self.base.perm
    }

    pub fn zeta_lift(&self) -> Vec<f64> {
        let o = omega_f64(self.perm());
        (-(o * DVector::from_column_slice(&self.eta))).iter().copied().collect()
    }

    pub fn twisted_point(&self) -> TwistedPoint<f64> {
        TwistedPoint { base: self.base.clone(), zeta: Zeta::real(self.zeta_lift()) }
    }

    /// One Rauzy step; `η ↦ B^{-T} η` keeps `ζ = −Ω η` consistent with `ζ ↦ B ζ`.
    pub fn step(&self) -> Result<(StructurePoint, StepRecord)> {
        let (next, rec) = rauzy_step(&self.twisted_point())?;
        let mut eta = self.eta.clone();
        eta[rec.winner] -= eta[rec.loser];
        Ok((StructurePoint::new(next.base, eta), rec))
    }
}

/// One row of a verification report.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IdentityResidual {
    pub identity_name: String,
    pub max_residual: f64,
    pub samples: usize,
    pub tolerance: f64,
    pub pass: bool,
}

/// Per-identity maxima over many samples.
#[derive(Clone, Debug, Default, Serialize)]
pub struct IdentityReport {
    pub entries: Vec<IdentityResidual>,
}

impl IdentityReport {
    pub fn record(&mut self, name: &str, residual: f64, tolerance: f64) {
        let residual = if residual.is_finite() { residual } else { f64::INFINITY };
        if let Some(e) = self.entries.iter_mut().find(|e| e.identity_name == name) {
            e.max_residual = e.max_residual.max(residual);
            e.samples += 1;
            e.pass = e.max_residual <= e.tolerance;
        } else {
            self.entries.push(IdentityResidual {
                identity_name: name.to_string(),
                max_residual: residual,
                samples: 1,
                tolerance,
                pass: residual <= tolerance,
            });
        }
    }

    pub fn merge(&mut self, other: &IdentityReport) {
        for e in &other.entries {
            if let Some(mine) = self.entries.iter_mut().find(|m| m.identity_name == e.identity_name) {
                mine.max_residual = mine.max_residual.max(e.max_residual);
                mine.samples += e.samples;
                mine.pass = mine.max_residual <= mine.tolerance;
            } else {
                self.entries.push(e.clone());
            }
        }
    }

    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn get(&self, name: &str) -> Option<&IdentityResidual> {
        self.entries.iter().find(|e| e.identity_name == name)
    }
}

/// Best match of `y` among `candidates` up to a scalar; returns index, residual and scalar.
fn match_up_to_scalar(y: &DVector<C>, candidates: &[DVector<C>]) -> (usize, f64, C) {
    let mut best = (usize::MAX, f64::INFINITY, ZERO);
    for (k, c) in candidates.iter().enumerate() {
        let lambda = c.dotc(y) / c.dotc(c);
        let r = (y - c * lambda).camax();
        if r < best.1 {
            best = (k, r, lambda);
        }
    }
    best
}

/// Checks every transformation law across one Rauzy step from `x`; returns the stepped point.
pub fn verify_step_identities(x: &StructurePoint, tol: f64, report: &mut IdentityReport) -> Result<StructurePoint> {
    let (x1, rec) = x.step()?;
    let sec = sections_from_eta(x.perm(), &x.eta)?;
    let sec1 = sections_from_eta(x1.perm(), &x1.eta)?;
    let d = x.perm().d();
    let b = rec.twisted_matrix();
    let dual = rec.dual_inverse_matrix();

    let hermitian_sum = &sec.form + sec.form.adjoint();
    let j = DMatrix::from_element(d, d, ONE);
    let zz = DVector::from_column_slice(&sec.z);
    report.record("twisted_form_hermitian_part", (hermitian_sum - (j - &zz * zz.adjoint())).camax(), tol);
    report.record("section_equations", sec.section_residual(), tol);

    report.record("invariant_section", (&b * &sec.s - &sec1.s).camax(), tol);

    let mut cov = 0.0f64;
    for (k, v) in sec.v.iter().enumerate() {
        let y = &dual * v;
        let diffs: Vec<f64> = sec1.v.iter().map(|w| (&y - w).camax()).collect();
        let (best, r) =
            diffs.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &r)| if r < a.1 { (i, r) } else { a });
        let marked_ok = (k == sec.marked()) == (best == sec1.marked());
        cov = cov.max(if marked_ok { r } else { f64::INFINITY });
    }
    report.record("covariant_sections", cov, tol);

    let mut e = DVector::zeros(d);
    e[rec.loser] = ONE;
    let defect = &b * &sec.form * b.adjoint() - &sec1.form - (&e * sec1.s.adjoint()) * rec.phase;
    report.record("omega_rank_one_defect", defect.camax(), tol);

    let fr = frames_from_eta(x.perm(), &x.eta)?;
    let fr1 = frames_from_eta(x1.perm(), &x1.eta)?;
    let pushed = &b * &fr.h;
    let r = fr.h.ncols();
    let mut herm = 0.0f64;
    let mut h_cov = 0.0f64;
    let mut pre1 = Vec::with_capacity(r);
    for i in 0..r {
        let (g, res) = fr1.preimage(&pushed.column(i).into_owned())?;
        h_cov = h_cov.max(res);
        pre1.push(g);
    }
    for i in 0..r {
        for jj in 0..r {
            let w1 = C::new(0.0, 0.5) * pre1[jj].dotc(&pushed.column(i));
            herm = herm.max((w1 - fr.hermitian[(i, jj)]).norm());
        }
    }
    report.record("h_tilde_covariance", h_cov, tol);
    report.record("hermitian_invariance", herm, tol);

    let back = b.adjoint() * &fr1.w;
    let mut wcov = 0.0f64;
    for i in 0..back.ncols() {
        let col = back.column(i);
        wcov = wcov.max(sec.s.dotc(&col).norm() / col.norm());
    }
    report.record("w_covariance", wcov, tol);
    Ok(x1)
}

/// Change-of-basis matrix `C_{ζ¹}^{-1} (ℬ^*)^{-1} C_ζ` in the basis
/// `[v^{S_0}, v^{S_1}, …, s_ζ, orthonormal completion of s inside H̃]`.
#[derive(Clone, Debug, Serialize)]
pub struct BlockFormReport {
    pub kappa: usize,
    /// `max | |M_ii| − 1 |` over the `Ñ` block.
    pub unit_diagonal_residual: f64,
    pub off_diagonal_residual: f64,
    pub lower_left_residual: f64,
    /// `|M_κκ − ψ|` and the tail of row `κ`.
    pub psi_residual: f64,
    pub psi_expected: f64,
    pub row_tail_residual: f64,
}

impl BlockFormReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.unit_diagonal_residual,
            self.off_diagonal_residual,
            self.lower_left_residual,
            self.psi_residual,
            self.row_tail_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Block structure of the dual step; the target point uses an independently solved `η¹`.
pub fn verify_block_form(x: &StructurePoint) -> Result<BlockFormReport> {
    let (x1, rec) = x.step()?;
    let fr = frames_from_eta(x.perm(), &x.eta)?;
    let eta1 = solve_eta(x1.perm(), &x1.zeta_lift())?;
    let fr1 = frames_from_eta(x1.perm(), &eta1)?;
    let dual = rec.dual_inverse_matrix();
    let d = x.perm().d();
    let kappa = fr.sections.kappa();

    let mut order = Vec::with_capacity(kappa);
    for v in &fr.sections.v {
        let (k, r, _) = match_up_to_scalar(&(&dual * v), &fr1.sections.v);
        if r > 1e-8 {
            return Err(Error::Invariant(format!("covariant section has no image (residual {r:e})")));
        }
        order.push(k);
    }
    let basis = |f: &FrameBundle, ord: &[usize]| {
        let mut cols: Vec<DVector<C>> = ord.iter().map(|&k| f.sections.v[k].clone()).collect();
        cols.push(f.sections.s.clone());
        cols.extend((1..f.h.ncols()).map(|i| f.h.column(i).into_owned()));
        DMatrix::from_columns(&cols)
    };
    let identity: Vec<usize> = (0..kappa).collect();
    let c0 = basis(&fr, &identity);
    let c1 = basis(&fr1, &order);
    if c0.ncols() != d {
        return Err(Error::KernelDimension { expected: d, found: c0.ncols() });
    }
    let m = c1.lu().solve(&(&dual * &c0)).ok_or_else(|| Error::Invariant("singular section basis".into()))?;
    let mut unit = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..kappa {
        for j in 0..kappa {
            if i == j {
                unit = unit.max((m[(i, i)].norm() - 1.0).abs());
            } else {
                off = off.max(m[(i, j)].norm());
            }
        }
    }
    let lower = m.view((kappa, 0), (d - kappa, kappa)).camax();
    let psi = fr.sections.s.norm_squared() / fr1.sections.s.norm_squared();
    let psi_res = (m[(kappa, kappa)] - C::from(psi)).norm();
    let tail = if kappa + 1 < d { m.view((kappa, kappa + 1), (1, d - kappa - 1)).camax() } else { 0.0 };
    Ok(BlockFormReport {
        kappa,
        unit_diagonal_residual: unit,
        off_diagonal_residual: off,
        lower_left_residual: lower,
        psi_residual: psi_res / psi.max(1.0),
        psi_expected: psi,
        row_tail_residual: tail,
    })
}
