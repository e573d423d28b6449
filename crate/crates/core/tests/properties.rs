use num_complex::Complex64 as C;
use proptest::prelude::*;
use std::f64::consts::TAU;
use twisted_cocycle::laurent::LaurentPoly;
use twisted_cocycle::ring::Ring;
use twisted_cocycle::substitution::Substitution2;

fn poly() -> impl Strategy<Value = LaurentPoly> {
    prop::collection::vec((-3i32..=3, -3i32..=3, -5i64..=5), 0..6).prop_map(|terms| {
        terms.into_iter().fold(LaurentPoly::zero(2), |p, (a, b, c)| p.add(&LaurentPoly::monomial(vec![a, b], c)))
    })
}

fn word() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..7)
}

fn torus_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| [x, y])
}

fn on_circle(zeta: [f64; 2]) -> [C; 2] {
    [C::from_polar(1.0, TAU * zeta[0]), C::from_polar(1.0, TAU * zeta[1])]
}

proptest! {
    #[test]
    fn evaluation_is_a_ring_homomorphism(p in poly(), q in poly(), zeta in torus_point()) {
        let z = on_circle(zeta);
        let (pz, qz) = (p.evaluate(&z), q.evaluate(&z));
        prop_assert!((p.add(&q).evaluate(&z) - (pz + qz)).norm() < 1e-11);
        prop_assert!((p.mul(&q).evaluate(&z) - pz * qz).norm() < 1e-10);
        prop_assert!((p.conj().evaluate(&z) - pz.conj()).norm() < 1e-11);
    }

    #[test]
    fn laurent_display_parses_back(p in poly()) {
        let text = p.to_string();
        prop_assert_eq!(LaurentPoly::parse(&text, &["z0", "z1"]).unwrap(), p);
    }

    #[test]
    fn substitution_display_parses_back(w0 in word(), w1 in word()) {
        prop_assume!(w0.contains(&0) || w1.contains(&0));
        prop_assume!(w0.contains(&1) || w1.contains(&1));
        let s = Substitution2::from_words(w0, w1);
        prop_assert_eq!(Substitution2::parse(&s.to_string()).unwrap().to_string(), s.to_string());
    }

    #[test]
    fn determinant_times_one_minus_z1_is_p(w0 in word(), w1 in word(), zeta in torus_point()) {
        let s = Substitution2::from_words(w0, w1);
        let z = on_circle(zeta);
        let det = s.spectral_matrix(zeta).determinant();
        prop_assert!((det * (1.0 - z[1]) - s.build_p().evaluate(&z)).norm() < 1e-10);
        prop_assert!(s.section_residual(zeta) < 1e-11);
    }
}
