use std::collections::BTreeMap;

use avcp_core::arrange::{exact_expected_output, mc_expected_output, Arrangement, McOptions};
use avcp_core::dynamics::{propagator, unitarity_defect};
use avcp_core::opcore::{born_distribution, c, expectation, haar_state, ComplexMatrix, HermitianOperator};
use avcp_core::suite::gen::{random_classical, random_simple_pair, random_word_poly};
use avcp_core::suite::oracle::DiffOracle;
use avcp_core::symalg::{i_hbar, poisson, rational, Algebra, ClassicalPoly, Coeff, Rational, Symbol, HBAR};
use avcp_core::StreamFactory;
use num_traits::Zero;
use proptest::prelude::*;

fn two_pair() -> Algebra {
    Algebra::builder().canonical_pair("x", "p").canonical_pair("y", "q").build().unwrap()
}

fn classical(alg: &Algebra, seed: u64, k: u64) -> ClassicalPoly {
    let mut rng = StreamFactory::new(seed).stream(k);
    alg.parse_classical(&random_classical(&mut rng, &["x", "p", "y", "q"], 4, 4)).unwrap()
}

fn hermitian(dim: usize) -> impl Strategy<Value = HermitianOperator> {
    proptest::collection::vec(-2.0f64..2.0, 2 * dim * dim).prop_map(move |v| {
        let m = ComplexMatrix::from_fn(dim, dim, |i, j| c(v[i * dim + j], v[dim * dim + i * dim + j]));
        HermitianOperator::new((&m + m.adjoint()).scale(0.5)).unwrap()
    })
}

fn oracle() -> DiffOracle {
    let v = BTreeMap::from([
        (Symbol::from(HBAR), Coeff::new(rational(5, 3), Rational::zero())),
        (Symbol::from("g"), Coeff::new(rational(-2, 7), Rational::zero())),
    ]);
    DiffOracle::new("x", "p", v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn poisson_is_antisymmetric_and_bilinear(seed in any::<u64>()) {
        let alg = two_pair();
        let pairs = alg.canonical_pairs();
        let (f, g, h) = (classical(&alg, seed, 0), classical(&alg, seed, 1), classical(&alg, seed, 2));
        prop_assert!((poisson(&f, &g, pairs).unwrap() + poisson(&g, &f, pairs).unwrap()).is_zero());
        let lin = poisson(&(&f + &g), &h, pairs).unwrap() - (poisson(&f, &h, pairs).unwrap() + poisson(&g, &h, pairs).unwrap());
        prop_assert!(lin.is_zero());
    }

    #[test]
    fn poisson_leibniz_and_jacobi(seed in any::<u64>()) {
        let alg = two_pair();
        let pb = |a: &ClassicalPoly, b: &ClassicalPoly| poisson(a, b, alg.canonical_pairs()).unwrap();
        let (f, g, h) = (classical(&alg, seed, 0), classical(&alg, seed, 1), classical(&alg, seed, 2));
        let leibniz = pb(&(&f * &g), &h) - (&f * &pb(&g, &h) + &pb(&f, &h) * &g);
        prop_assert!(leibniz.is_zero());
        let jacobi = pb(&f, &pb(&g, &h)) + pb(&g, &pb(&h, &f)) + pb(&h, &pb(&f, &g));
        prop_assert!(jacobi.is_zero());
    }

    #[test]
    fn normal_form_matches_differential_operators(seed in any::<u64>()) {
        let alg = Algebra::canonical("x", "p", ["g"]);
        let mut rng = StreamFactory::new(seed).stream(3);
        let text = random_word_poly(&mut rng, &["x", "p", "g"], 5, 4);
        let p = alg.parse_operator(&text).unwrap();
        let n = alg.normal_form(&p).unwrap();
        prop_assert!(oracle().same_action(&p, &n, 9).unwrap(), "{}", text);
        prop_assert_eq!(alg.normal_form(&n).unwrap(), n);
    }

    #[test]
    fn commutator_of_simple_pairs_quantizes_bracket(seed in any::<u64>()) {
        let alg = Algebra::canonical("x", "p", Vec::<&str>::new());
        let none = BTreeMap::new();
        let (f, h) = random_simple_pair(&mut StreamFactory::new(seed).stream(4), &alg).unwrap();
        let lhs = alg.commutator(&alg.quantize(&f, &none).unwrap(), &alg.quantize(&h, &none).unwrap()).unwrap();
        let pb = poisson(&f, &h, alg.canonical_pairs()).unwrap();
        let rhs = alg.normal_form(&alg.quantize(&pb, &none).unwrap()).unwrap().times_scalar(&i_hbar());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn spectrum_reconstructs(a in (1usize..7).prop_flat_map(hermitian)) {
        let s = a.spectrum().unwrap();
        prop_assert!(s.residual(&a) <= 1e-10 * a.norm().max(1.0));
        prop_assert!(s.orthonormality_defect() <= 1e-10);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn born_distribution_is_normalized(a in (1usize..6).prop_flat_map(hermitian), seed in any::<u64>()) {
        let v = haar_state(a.dim(), &mut StreamFactory::new(seed).stream(5));
        let d = born_distribution(&a, &v, 1e-9).unwrap();
        prop_assert!((d.total_probability() - 1.0).abs() <= 1e-12);
        prop_assert!((d.mean() - expectation(&a, &v).unwrap()).abs() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn propagators_are_unitary(h in (1usize..6).prop_flat_map(hermitian), t in -5.0f64..5.0) {
        let u = propagator(&h, t, 1.0).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-12);
        let back = propagator(&h, -t, 1.0).unwrap() * &u;
        prop_assert!((back - ComplexMatrix::identity(h.dim(), h.dim())).norm() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_tracks_exact_output(a in (2usize..5).prop_flat_map(hermitian), seed in any::<u64>(), split in any::<bool>()) {
        let mut b = Arrangement::builder().measure("a", a.clone()).measure("b", a.clone());
        if split {
            b = b.copies(vec![0, 1]);
        }
        let arr = b.combine("a*b + 2*a").build().unwrap();
        let v = haar_state(a.dim(), &mut StreamFactory::new(seed).stream(6));
        let est = mc_expected_output(&arr, &v, &McOptions::new(20_000, seed)).unwrap();
        let exact = exact_expected_output(&arr, &v).unwrap();
        prop_assert!((est.mean - exact).abs() <= 6.0 * est.stderr + 1e-12, "{} vs {}", est.mean, exact);
    }
}
