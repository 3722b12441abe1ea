//! Property tests for the invariants of each module.

use std::sync::Arc;

use diracflow::eigcert::{BoundBasis, CertParams, Certifier, FormalMatrix};
use diracflow::floer::{piercing_to_floer, Sign};
use diracflow::kernel::Combination;
use diracflow::oneform::{lipschitz_bound, GeodesicTet, HPoint, Isometry};
use diracflow::spectrum::{expand_primes, GeodesicRecord};
use diracflow::synthetic::{Atom, Branch};
use diracflow::testfn::sinc::sinc_pow_deriv;
use diracflow::trace::build_formal_side;
use diracflow::{Kernel, ManifoldData, Side, SideKind, SyntheticSpectrum, TestFunction, TraceData};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn test_function() -> impl Strategy<Value = TestFunction> {
    (1u32..=8, prop::option::of(0.0..4.0f64), 0.5..1.5f64, any::<bool>())
        .prop_map(|(n, nu, stretch, odd)| TestFunction::new(n, nu, stretch, odd).unwrap())
}

fn primes(m: u32) -> impl Strategy<Value = Vec<GeodesicRecord>> {
    prop::collection::vec((0.3..4.0f64, 0.0..6.28f64, -3i64..=3, 0..m), 1..30).prop_map(|v| {
        v.into_iter().map(|(l, th, n, t)| GeodesicRecord::prime(l, th, n, t)).collect()
    })
}

fn spectrum(seed: u64, count: usize, m: u32) -> ManifoldData {
    ManifoldData::random(&mut ChaCha8Rng::seed_from_u64(seed), count, m, 7.0, 4).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fourier_parity(f in test_function(), t in -10.0..10.0f64) {
        let z = f.fourier(t);
        if f.odd_multiplier() {
            prop_assert!(z.re.abs() <= 1e-14 * (1.0 + z.im.abs()));
        } else {
            prop_assert!(z.im.abs() <= 1e-14 * (1.0 + z.re.abs()));
        }
    }

    #[test]
    fn even_powers_have_nonnegative_transforms(half in 1u32..=4, t in -30.0..30.0f64, stretch in 0.5..1.5f64) {
        let f = TestFunction::new(2 * half, None, stretch, false).unwrap();
        prop_assert!(f.fourier(t).re >= 0.0);
        prop_assert!(sinc_pow_deriv(t, 2 * half, 0) >= 0.0);
    }

    #[test]
    fn expansion_is_idempotent_and_monotone(p in primes(5), r1 in 2.0..5.0f64, extra in 0.0..3.0f64) {
        let small = expand_primes(&p, r1, 5).unwrap();
        let large = expand_primes(&p, r1 + extra, 5).unwrap();
        let again: Vec<GeodesicRecord> = small.iter().filter(|g| g.is_prime()).copied().collect();
        prop_assert_eq!(expand_primes(&again, r1, 5).unwrap(), small.clone());
        for g in &small {
            prop_assert!(large.contains(g));
        }
    }

    #[test]
    fn sides_are_invariant_under_permutation(seed in 0u64..1000, tau in 0.0..1.0f64, k in 0u32..4) {
        let data = spectrum(seed, 2000, 4);
        let mut shuffled = data.geodesics.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed + 1));
        let other = ManifoldData::new("random", data.volume, 1, 4, 7.0, None, shuffled).unwrap();
        let h = TestFunction::conv(6).unwrap();
        let a = build_formal_side(&data, &h, SideKind::DiracEven).unwrap();
        let b = build_formal_side(&other, &h, SideKind::DiracEven).unwrap();
        prop_assert_eq!(a.evaluate(tau, k).value.to_bits(), b.evaluate(tau, k).value.to_bits());
    }

    #[test]
    fn sides_are_linear_in_the_test_function(
        seed in 0u64..1000, alpha in -2.0..2.0f64, beta in -2.0..2.0f64, tau in 0.0..1.0f64, k in 0u32..3,
    ) {
        let data = spectrum(seed, 2000, 3);
        let h1 = TestFunction::conv(6).unwrap();
        let h2 = TestFunction::conv_mod(6, 1.5).unwrap();
        let combo = Combination::new(vec![(alpha, Arc::new(h1.clone()) as Arc<dyn Kernel>), (beta, Arc::new(h2.clone()))]).unwrap();
        for kind in [SideKind::DiracEven, SideKind::Coexact] {
            let c = build_formal_side(&data, &combo, kind).unwrap().evaluate(tau, k);
            let e1 = build_formal_side(&data, &h1, kind).unwrap().evaluate(tau, k);
            let e2 = build_formal_side(&data, &h2, kind).unwrap().evaluate(tau, k);
            let want = alpha * e1.value + beta * e2.value;
            let scale = 1.0 + alpha.abs() * e1.value.abs() + beta.abs() * e2.value.abs();
            prop_assert!((c.value - want).abs() <= 1e-12 * scale, "{} vs {}", c.value, want);
        }
    }

    #[test]
    fn conjugate_characters_mirror_tau(seed in 0u64..1000, tau in 0.0..1.0f64, k in 0u32..7) {
        let data = spectrum(seed, 2000, 7);
        let side = build_formal_side(&data, &TestFunction::conv(6).unwrap(), SideKind::DiracEven).unwrap();
        let a = side.evaluate(tau, k).value;
        let b = side.evaluate(1.0 - tau, (7 - k) % 7).value;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn oracle_even_side_is_the_spectral_sum(seed in 0u64..1000, tau in 0.0..1.0f64) {
        let (s, _) = SyntheticSpectrum::planted(&mut ChaCha8Rng::seed_from_u64(seed), 2).unwrap();
        let h = TestFunction::conv(6).unwrap();
        let side = s.side(Arc::new(h.clone()), SideKind::DiracEven).unwrap();
        let want: f64 = 0.5 * s.eigenvalues(tau, 0).iter().map(|&v| h.fourier(v).re).sum::<f64>();
        let got = side.evaluate(tau, 0);
        prop_assert!((got.value - want).abs() <= got.budget + 1e-13 * want.abs());
    }

    #[test]
    fn enlarging_the_basis_never_raises_j(seed in 0u64..200, tau in 0.0..1.0f64, s_val in 0.0..3.0f64) {
        let (s, _) = SyntheticSpectrum::planted(&mut ChaCha8Rng::seed_from_u64(seed), 2).unwrap();
        let a = 7.0 / 12.0;
        let small = BoundBasis::new(a, (0..4).map(|i| i as f64 * a).collect()).unwrap();
        let large = BoundBasis::new(a, (0..5).map(|i| i as f64 * a).collect()).unwrap();
        let j1 = FormalMatrix::build(&s, &small, SideKind::DiracEven).unwrap().solver(tau, 0).unwrap().j(s_val);
        let j2 = FormalMatrix::build(&s, &large, SideKind::DiracEven).unwrap().solver(tau, 0).unwrap().j(s_val);
        prop_assert!(j2 <= j1 * (1.0 + 1e-9), "{} > {}", j2, j1);
    }

    #[test]
    fn lipschitz_bound_is_isometry_invariant(
        seed in 0u64..1000, axis in 1usize..=3, boost in -1.0..1.0f64, values in prop::array::uniform4(-2.0..2.0f64),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let verts = [0; 4].map(|_| {
            let d = Vector3::new(
                rand::Rng::random_range(&mut rng, -1.0..1.0),
                rand::Rng::random_range(&mut rng, -1.0..1.0),
                rand::Rng::random_range(&mut rng, -1.0..1.0),
            );
            HPoint::exp_origin(0.6, d.normalize())
        });
        let Ok(tet) = GeodesicTet::new(verts) else { return Ok(()) };
        let Ok(a) = lipschitz_bound(&tet, values) else { return Ok(()) };
        let moved = tet.map(&Isometry::boost(axis, boost));
        let b = lipschitz_bound(&moved, values).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{} vs {}", a, b);
    }

    #[test]
    fn supported_floer_outputs_have_the_stated_rank(len in prop::sample::select(vec![0usize, 2, 4]), start_minus in any::<bool>()) {
        let signs: Vec<Sign> = (0..len)
            .map(|i| if (i % 2 == 0) != start_minus { Sign::Plus } else { Sign::Minus })
            .collect();
        let out = piercing_to_floer(&signs).unwrap();
        prop_assert_eq!(out.local_rank as usize * 2, len);
        prop_assert!(out.even_grading && out.euler_consistent);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// One-sidedness of the counting certificates on random oracle spectra.
    #[test]
    fn counts_are_one_sided(
        seed in 0u64..100_000,
        smalls in prop::collection::vec((-1.2..1.2f64, 1u32..=2), 0..4),
        tau in 0.0..1.0f64,
        l in 0.02..1.5f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut atoms = SyntheticSpectrum::bulk(&mut rng, 2.6, 0.45, 70);
        atoms.extend(smalls.iter().map(|&(v, m)| Atom { branch: Branch::constant(v), multiplicity: m, character: None }));
        let s = SyntheticSpectrum::new("random", 1, 7.0, atoms).unwrap();
        let c = Certifier::new(Arc::new(s.clone()), CertParams::default()).unwrap();
        let truth = s.count_below(l, tau, 0);
        let (upper, cert) = c.count_upper(tau, 0, l, 1).unwrap();
        prop_assert!(upper >= truth, "count_upper {} < {}", upper, truth);
        cert.replay().unwrap();
        let (exists, cert) = c.count_lower(tau, 0, l).unwrap();
        prop_assert!(!exists || truth >= 1);
        cert.replay().unwrap();
    }
}
