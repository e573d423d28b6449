use nalgebra::DVector;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;
use twisted_cocycle::combinatorics::{Permutation, StepKind};
use twisted_cocycle::linalg::svd_real;
use twisted_cocycle::lyapunov::{benettin_spectrum, sample_lengths, subtorus_basis, BenettinConfig, MeasureSpec};
use twisted_cocycle::renormalization::{rauzy_step, to_dmatrix, IetPoint, TwistedPoint, Zeta};
use twisted_cocycle::structures::{sections, sections_from_eta};

const CLASSES: [&str; 3] = ["ABC/CBA", "ABCD/DCBA", "ABCDE/EDCBA"];

fn members() -> Vec<Permutation> {
    CLASSES.iter().flat_map(|s| Permutation::parse(s).unwrap().rauzy_class().unwrap().members).collect()
}

/// `(|λ|, ‖w − λu‖)` for the best `λ` with `w ≈ λu`.
fn scalar_fit(u: &DVector<C>, w: &DVector<C>) -> (f64, f64) {
    let lambda = u.dotc(w) / u.dotc(u);
    (lambda.norm(), (w - u * lambda).norm())
}

#[test]
fn classes_are_closed_and_irreducible() {
    for name in CLASSES {
        let class = Permutation::parse(name).unwrap().rauzy_class().unwrap();
        let set: HashSet<_> = class.members.iter().cloned().collect();
        assert_eq!(set.len(), class.members.len());
        for p in &class.members {
            assert!(p.is_irreducible());
            for kind in [StepKind::Top, StepKind::Bottom] {
                assert!(set.contains(&p.successor(kind)), "{p} leaves the class of {name}");
            }
            let o = p.omega();
            assert_eq!(o.transpose(), -&o);
            assert!(o.iter().all(|x| x.abs() <= 1));
        }
    }
}

#[test]
fn untwisted_form_transports_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in members() {
        let lambda = sample_lengths(p.d(), &mut rng);
        let zeta = (0..p.d()).map(|_| rng.gen()).collect();
        let mut x = TwistedPoint::new(IetPoint::new(lambda, p).unwrap(), Zeta::real(zeta)).unwrap();
        for _ in 0..200 {
            let (x1, rec) = rauzy_step(&x).unwrap();
            let b = rec.integer_matrix();
            let det = b.map(|v| v as f64).determinant();
            assert!((det - 1.0).abs() < 1e-12);
            assert_eq!(&b * x.perm().omega() * b.transpose(), x1.perm().omega());
            assert_eq!(to_dmatrix(&rec.twisted_in(&C::new(1.0, 0.0))).map(|z| z.re as i64), b);
            x = x1;
        }
    }
}

/// Shifting `η` by a real kernel vector of `Ω_π` keeps `ζ` and scales each `v^S` by a unit.
#[test]
fn covariant_sections_are_defined_up_to_unit_scalars() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for p in members() {
        let o = p.omega().map(|x| x as f64);
        let svd = svd_real(&o);
        let rank = svd.rank(1e-9 * svd.max());
        for _ in 0..10 {
            let eta: Vec<f64> = (0..p.d()).map(|_| rng.gen()).collect();
            let mut shifted = eta.clone();
            for k in rank..p.d() {
                let t: f64 = rng.gen_range(-3.0..3.0);
                for (a, e) in shifted.iter_mut().enumerate() {
                    *e += t * svd.v[(a, k)].re;
                }
            }
            let (Ok(base), Ok(moved)) = (sections_from_eta(&p, &eta), sections_from_eta(&p, &shifted)) else {
                continue;
            };
            assert!((DVector::from_vec(base.zeta.clone()) - DVector::from_vec(moved.zeta.clone())).amax() < 1e-12);
            for (u, w) in base.v.iter().zip(&moved.v) {
                let (modulus, residual) = scalar_fit(u, w);
                assert!((modulus - 1.0).abs() < 1e-10 && residual < 1e-10, "{p}: {modulus} {residual}");
            }
        }
    }
}

/// Lifts `ζ + Ω_π n` with `n` integral leave every `v^S` unchanged up to a unit; other
/// lattice translates inside `H(π)` are measured and printed, not asserted.
#[test]
fn lattice_translates_of_the_lift() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_general = 0.0f64;
    for p in members() {
        let o = p.omega();
        let basis = subtorus_basis(&p);
        for _ in 0..10 {
            let eta: Vec<f64> = (0..p.d()).map(|_| rng.gen()).collect();
            let Ok(base) = sections_from_eta(&p, &eta) else { continue };
            let n = DVector::from_fn(p.d(), |_, _| rng.gen_range(-2i64..=2));
            let image = -(&o * n);
            let coeffs = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-2i64..=2));
            let general = &basis * coeffs;
            for (shift, assert_unit) in [(image, true), (general, false)] {
                let lift: Vec<f64> = base.zeta.iter().zip(shift.iter()).map(|(z, m)| z + *m as f64).collect();
                let moved = sections(&p, &lift).unwrap();
                for (u, w) in base.v.iter().zip(&moved.v) {
                    let (modulus, residual) = scalar_fit(u, w);
                    let defect = (modulus - 1.0).abs().max(residual);
                    if assert_unit {
                        assert!(defect < 1e-9, "{p}: defect {defect}");
                    } else {
                        worst_general = worst_general.max(defect);
                    }
                }
            }
        }
    }
    println!("largest unit-scalar defect over general lattice translates in H(π): {worst_general:e}");
}

#[test]
fn qr_cadence_does_not_bias_the_spectrum() {
    let p = Permutation::parse("ABCD/DCBA").unwrap();
    let run = |qr_interval| {
        let cfg = BenettinConfig { steps: 40_000, seeds: 8, seed: 3, qr_interval, ..BenettinConfig::default() };
        benettin_spectrum(&p, &MeasureSpec::hpi(), &cfg).unwrap()
    };
    let (a, b) = (run(1), run(2));
    for i in 0..4 {
        let combined = (a.stderr[i].powi(2) + b.stderr[i].powi(2)).sqrt();
        assert!((a.exponents[i] - b.exponents[i]).abs() < 3.0 * combined, "χ{}: {a:?} {b:?}", i + 1);
    }
}
