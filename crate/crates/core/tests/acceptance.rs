//! Acceptance criteria, one line per criterion. Exits nonzero if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use twisted_cocycle::combinatorics::Permutation;
use twisted_cocycle::fixtures::verify_fixture;
use twisted_cocycle::lattice::integer_rank;
use twisted_cocycle::laurent::LaurentPoly;
use twisted_cocycle::lyapunov::{
    benettin_spectrum, in_rational_subtorus, sample_initial, sample_lengths, symmetry_report, BenettinConfig,
    MeasureSpec, SpectrumEstimate, Walker, ITERATION_CAP,
};
use twisted_cocycle::mahler::{mahler_measure, mahler_univariate, MahlerConfig};
use twisted_cocycle::renormalization::{IetPoint, Zeta};
use twisted_cocycle::structures::{
    frames_from_eta, verify_block_form, verify_step_identities, IdentityReport, StructurePoint,
};
use twisted_cocycle::substitution::{
    certify, chi_plus_diagonal, chi_plus_direct, revalidate, Branch, Substitution2, Verdict,
};

const CLASSES: [&str; 3] = ["ABC/CBA", "ABCD/DCBA", "ABCDE/EDCBA"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn perm(s: &str) -> Permutation {
    Permutation::parse(s).unwrap()
}

fn members() -> Vec<Permutation> {
    CLASSES.iter().flat_map(|s| perm(s).rauzy_class().unwrap().members).collect()
}

fn fixture_criterion(name: &str, budget: Duration) -> Outcome {
    let t = Instant::now();
    let report = verify_fixture(name, 100, 11).unwrap();
    let elapsed = t.elapsed();
    let failed: Vec<&str> = report.entries.iter().filter(|e| !e.pass).map(|e| e.identity_name.as_str()).collect();
    outcome(
        report.pass() && elapsed < budget,
        format!("{} exact checks, failed {:?}, {:.3}s", report.entries.len(), failed, elapsed.as_secs_f64()),
    )
}

fn one_step_identities() -> Outcome {
    let t = Instant::now();
    let pool = members();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut report = IdentityReport::default();
    let mut block = 0.0f64;
    for _ in 0..1000 {
        let p = pool[rng.gen_range(0..pool.len())].clone();
        let lambda = sample_lengths(p.d(), &mut rng);
        let eta: Vec<f64> = (0..p.d()).map(|_| rng.gen()).collect();
        let x = StructurePoint::new(IetPoint::new(lambda, p).unwrap(), eta);
        verify_step_identities(&x, 1e-9, &mut report).unwrap();
        block = block.max(verify_block_form(&x).unwrap().max_residual());
    }
    report.record("block_form", block, 1e-9);
    let elapsed = t.elapsed();
    let worst = report.entries.iter().map(|e| e.max_residual).fold(0.0, f64::max);
    outcome(
        report.pass() && elapsed < Duration::from_secs(30),
        format!("{} identities, max residual {worst:.2e}, {:.1}s", report.entries.len(), elapsed.as_secs_f64()),
    )
}

fn dimension_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let mut points = 0;
    for p in members() {
        let (g, kappa) = p.genus_kappa().unwrap();
        if p.d() != 2 * g + kappa - 1 || p.sigma().kappa() != 1 + p.d() - integer_rank(&p.omega()) {
            failures += 1;
        }
        for _ in 0..50 {
            let eta: Vec<f64> = (0..p.d()).map(|_| rng.gen()).collect();
            points += 1;
            if !frames_from_eta(&p, &eta).unwrap().dimensions().expected_ok() {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{points} points, {failures} failures"))
}

fn spectrum(p: &str, m: MeasureSpec, steps: usize, dual: bool) -> SpectrumEstimate {
    let cfg = BenettinConfig { steps, seeds: 16, seed: 7, dual, ..Default::default() };
    benettin_spectrum(&perm(p), &m, &cfg).unwrap()
}

fn fmt_spectrum(e: &SpectrumEstimate) -> String {
    let parts: Vec<String> = e.exponents.iter().zip(&e.stderr).map(|(x, s)| format!("{x:+.5}±{s:.1e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn rotation_case() -> Outcome {
    let t = Instant::now();
    let e = spectrum("AB/BA", MeasureSpec::lebesgue(), 200_000, false);
    let ok = e.exponents.iter().all(|x| x.abs() < 0.02) && t.elapsed() < Duration::from_secs(300);
    outcome(ok, format!("{} {:.1}s", fmt_spectrum(&e), t.elapsed().as_secs_f64()))
}

fn genus_two(e: &SpectrumEstimate, elapsed: Duration) -> Outcome {
    let s = symmetry_report(e);
    let ok = s.symmetry_sigmas < 3.0
        && e.zero_count == e.expected_zero_count
        && e.exponents[0] > 3.0 * e.stderr[0]
        && elapsed < Duration::from_secs(600);
    outcome(
        ok,
        format!(
            "{} symmetry {:.2}σ, zeros {}/{}, {:.1}s",
            fmt_spectrum(e),
            s.symmetry_sigmas,
            e.zero_count,
            e.expected_zero_count,
            elapsed.as_secs_f64()
        ),
    )
}

fn kappa_two() -> Outcome {
    let t = Instant::now();
    let e = spectrum("ABC/CBA", MeasureSpec::hpi(), 200_000, false);
    let ok = e.zero_count == 3 && e.expected_zero_count == 3 && t.elapsed() < Duration::from_secs(300);
    outcome(ok, format!("{} zeros {}, {:.1}s", fmt_spectrum(&e), e.zero_count, t.elapsed().as_secs_f64()))
}

fn duality(primal: &SpectrumEstimate, dual: &SpectrumEstimate) -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..primal.exponents.len() {
        let combined = (primal.stderr[i].powi(2) + dual.stderr[i].powi(2)).sqrt();
        worst = worst.max((primal.exponents[i] - dual.exponents[i]).abs() / combined);
    }
    outcome(worst < 3.0, format!("dual {} worst gap {worst:.2}σ", fmt_spectrum(dual)))
}

fn rational_orbits() -> Outcome {
    let p = perm("ABCD/DCBA");
    let m = MeasureSpec::qk(7);
    let mut exact = true;
    for seed in 0..16u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Walker::new(&sample_initial(&p, &m, &mut rng).unwrap());
        for n in 0..100_000 {
            w.zorich_step(None, false, ITERATION_CAP).unwrap();
            let Zeta::Rational { num, den: 7 } = w.zeta() else {
                exact = false;
                break;
            };
            if w.twist_is_zero() || (n % 500 == 0 && !in_rational_subtorus(&w.perm, &num, 7)) {
                exact = false;
            }
        }
    }
    let e = spectrum("ABCD/DCBA", m, 100_000, false);
    let s = symmetry_report(&e);
    let ok = exact && s.symmetry_sigmas < 3.0 && e.zero_count >= e.expected_zero_count;
    outcome(
        ok,
        format!(
            "orbits exact {exact}, {} symmetry {:.2}σ, zeros {}/{}",
            fmt_spectrum(&e),
            s.symmetry_sigmas,
            e.zero_count,
            e.expected_zero_count
        ),
    )
}

fn substitutions() -> Outcome {
    let t = Instant::now();
    let cfg = MahlerConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for rule in ["0->01;1->10", "0->01;1->00"] {
        let s = Substitution2::parse(rule).unwrap();
        let cert = certify(&s, 60, &cfg).unwrap();
        let target = mahler_univariate(&s.diagonal_difference()).unwrap();
        let diag = chi_plus_diagonal(&s, 100_000, 8, 3);
        let biv = cert.mahler_p.as_ref().unwrap().value;
        let matches = [cert.chi_plus_estimate.unwrap(), diag.mean, biv].iter().all(|x| (x - target).abs() < 1e-3);
        ok &= cert.branch == Branch::ConstantLength && cert.verdict == Verdict::Certified && matches;
        ok &= revalidate(&cert).is_ok();
        notes.push(format!("{rule}: m(a-c)={target:.2e} diag={:.2e} m(P)={biv:.2e}", diag.mean));
    }
    let fib = Substitution2::parse("0->01;1->0").unwrap();
    let cert = certify(&fib, 60, &cfg).unwrap();
    let all_fail = cert.searched.len() == 60 && cert.searched.iter().all(|w| !w.holds);
    ok &= cert.verdict == Verdict::NotCertified && all_fail && revalidate(&cert).is_ok();
    notes.push(format!("fibonacci not certified, {} witnesses", cert.searched.len()));

    for rule in ["0->01;1->10", "0->01;1->00", "0->001;1->0"] {
        let s = Substitution2::parse(rule).unwrap();
        let cert = certify(&s, 60, &cfg).unwrap();
        if cert.verdict != Verdict::Certified {
            continue;
        }
        let mp = cert.mahler_p.as_ref().unwrap();
        let direct = chi_plus_direct(&s, 250_000, 8, 5);
        let agree = (direct.mean - mp.value).abs() <= 3.0 * direct.stderr + mp.error_bound;
        let margin = 0.5 * s.perron_root().ln() - (direct.mean + 3.0 * direct.stderr);
        ok &= agree && margin > 0.0;
        notes.push(format!("{rule}: direct={:.1e}±{:.1e} margin={margin:.3}", direct.mean, direct.stderr));
    }
    ok &= t.elapsed() < Duration::from_secs(120);
    outcome(ok, format!("{}; {:.1}s", notes.join("; "), t.elapsed().as_secs_f64()))
}

fn mahler_engine() -> Outcome {
    let uni = |s: &str| LaurentPoly::parse(s, &["z"]).unwrap();
    let e1 = (mahler_univariate(&uni("z - 2")).unwrap() - 2f64.ln()).abs();
    let e2 = mahler_univariate(&uni("1 - z")).unwrap().abs();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut agree = 0;
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 20 {
        let mut p = LaurentPoly::zero(2);
        for _ in 0..rng.gen_range(2..=5) {
            let e = vec![rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
            let c = [-3, -2, -1, 1, 2, 3][rng.gen_range(0..6)];
            p = twisted_cocycle::ring::Ring::add(&p, &LaurentPoly::monomial(e, c));
        }
        if p.num_terms() < 2 {
            continue;
        }
        let est = mahler_measure(&p, &MahlerConfig { seed: done, ..Default::default() }).unwrap();
        if let Some(mc) = &est.monte_carlo {
            worst = worst.max((est.value - mc.mean).abs() / (3.0 * mc.stderr + est.quadrature_error));
        }
        agree += est.integrators_agree() as usize;
        done += 1;
    }
    outcome(
        e1 < 1e-10 && e2 < 1e-10 && agree == 20,
        format!("|m(z-2)-log2|={e1:.1e} |m(1-z)|={e2:.1e}, {agree}/20 agree, worst ratio {worst:.2}"),
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: usize, name: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {n:>2} [PRIMARY] {name:<28} {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "fixture example 5.1", fixture_criterion("example-5.1", Duration::from_secs(1)));
    report(2, "fixture example 5.2", fixture_criterion("example-5.2", Duration::from_secs(1)));
    report(3, "one-step identity suite", one_step_identities());
    report(4, "dimension laws", dimension_laws());
    report(5, "rotation spectrum AB/BA", rotation_case());
    let t = Instant::now();
    let primal = spectrum("ABCD/DCBA", MeasureSpec::hpi(), 200_000, false);
    report(6, "genus two ABCD/DCBA", genus_two(&primal, t.elapsed()));
    report(7, "kappa two ABC/CBA", kappa_two());
    let dual = spectrum("ABCD/DCBA", MeasureSpec::hpi(), 200_000, true);
    report(8, "primal/dual duality", duality(&primal, &dual));
    report(9, "Q_7 exact orbits", rational_orbits());
    report(10, "substitution certificates", substitutions());
    report(11, "Mahler engine", mahler_engine());
    if !all {
        std::process::exit(1);
    }
}
