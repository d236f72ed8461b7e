use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ringlab::audit::{congruential_family, nonconcentration_audit};
use ringlab::expansion::{difference_set, product_set, sum_set};
use ringlab::fourier::{phi_values, CharacterTable};
use ringlab::glueing::{dyadic_indices, entropy_ledger, CompositeModulus, Density, GlueParams};
use ringlab::identities::polyiden_holds;
use ringlab::measure::Measure;
use ringlab::{ElementSet, Elem, FiniteQuotientRing, NumberFieldSpec};

fn small_rings() -> Vec<FiniteQuotientRing> {
    let g = NumberFieldSpec::gaussian();
    vec![
        FiniteQuotientRing::integers_mod(12).unwrap(),
        FiniteQuotientRing::integers_mod(27).unwrap(),
        FiniteQuotientRing::prime_power(&g, 3, 0, 2).unwrap(),
        FiniteQuotientRing::prime_power(&g, 2, 0, 3).unwrap(),
        FiniteQuotientRing::prime_power(&g, 5, 1, 2).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_axioms(r in 0usize..5, a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let ring = &small_rings()[r];
        let q = ring.order() as u32;
        let (a, b, c) = (a % q, b % q, c % q);
        prop_assert_eq!(ring.mul(a, b), ring.mul(b, a));
        prop_assert_eq!(ring.mul(ring.mul(a, b), c), ring.mul(a, ring.mul(b, c)));
        prop_assert_eq!(ring.mul(a, ring.add(b, c)), ring.add(ring.mul(a, b), ring.mul(a, c)));
        prop_assert_eq!(ring.mul(a, ring.one()), a);
        prop_assert_eq!(ring.add(a, ring.neg(a)), 0);
    }

    #[test]
    fn crt_round_trip(n in 2u64..400) {
        let ring = FiniteQuotientRing::integers_mod(n).unwrap();
        let crt = ring.crt_decompose().unwrap();
        for x in ring.elements() {
            prop_assert_eq!(crt.recombine(&crt.split(x)), x);
        }
    }

    #[test]
    fn convolutions_are_probability_measures(r in 0usize..5, seed in any::<u64>()) {
        let ring = &small_rings()[r];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = Measure::random_exact(ring, &mut rng, 6);
        let nu = Measure::random_exact(ring, &mut rng, 6);
        for m in [mu.add_convolve(&nu, ring).unwrap(), mu.mul_convolve(&nu, ring).unwrap()] {
            let total: BigRational = m.exact().unwrap().iter().sum();
            prop_assert_eq!(total, BigRational::from_integer(1.into()));
        }
    }

    #[test]
    fn fft_matches_naive(r in 0usize..5, seed in any::<u64>()) {
        let ring = &small_rings()[r];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = CharacterTable::new(ring);
        let w = Measure::random_float(ring, &mut rng).to_f64();
        let (fast, slow) = (table.transform(&w), table.transform_naive(&w));
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn phi_symmetric_and_peaked(r in 0usize..5, seed in any::<u64>()) {
        let ring = &small_rings()[r];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = Measure::random_exact(ring, &mut rng, 4);
        let (_, exact) = phi_values(ring, &mu).unwrap();
        let phi = exact.unwrap();
        for x in ring.elements() {
            prop_assert_eq!(&phi[x as usize], &phi[ring.neg(x) as usize]);
            prop_assert!(phi[x as usize] <= phi[0]);
        }
    }

    #[test]
    fn sumset_bounds(seed in any::<u64>(), size in 1usize..12) {
        let ring = FiniteQuotientRing::integers_mod(27).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let elems: Vec<Elem> = (0..size).map(|_| ring.random_elem(&mut rng)).collect();
        let a = ElementSet::from_elems(&ring, elems);
        let s = sum_set(&ring, &a, &a).unwrap();
        let d = difference_set(&ring, &a, &a).unwrap();
        let p = product_set(&ring, &a, &a).unwrap();
        prop_assert!(s.len() >= a.len() && d.len() >= a.len());
        prop_assert!(s.len() <= a.len() * (a.len() + 1) / 2);
        prop_assert!(p.len() <= a.len() * (a.len() + 1) / 2);
        prop_assert!(d.contains(0));
    }

    /// Convolving with a measure never worsens the better factor's audit
    /// margin.
    #[test]
    fn nonconcentration_survives_convolution(seed in any::<u64>()) {
        let ring = FiniteQuotientRing::integers_mod(27).unwrap();
        let fam = congruential_family(&ring).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = Measure::random_float(&ring, &mut rng);
        let nu = Measure::random_float(&ring, &mut rng);
        let best = [&mu, &nu]
            .iter()
            .map(|m| nonconcentration_audit(&ring, &fam, m, 0.0, 0.3).unwrap().margin)
            .fold(f64::NEG_INFINITY, f64::max);
        let conv = mu.add_convolve(&nu, &ring).unwrap();
        let margin = nonconcentration_audit(&ring, &fam, &conv, 0.0, 0.3).unwrap().margin;
        prop_assert!(margin >= best - 1e-12);
    }

    #[test]
    fn polyiden_random(xs in prop::collection::vec(-10_000i64..10_000, 1..=7)) {
        let v: Vec<BigInt> = xs.into_iter().map(BigInt::from).collect();
        prop_assert!(polyiden_holds(&v));
    }

    #[test]
    fn dyadic_shape(n in 1u32..500, rho2 in 0.001f64..3.0) {
        let a = dyadic_indices(n, rho2);
        prop_assert_eq!(a[0], 0);
        prop_assert_eq!(*a.last().unwrap(), n);
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn entropy_ledger_normalized(seed in any::<u64>()) {
        let cm = CompositeModulus::new(FiniteQuotientRing::integers_mod(60).unwrap(), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = Measure::random_exact(&cm.ring, &mut rng, 5);
        let q = BigRational::from_integer(60.into());
        let f = Density::Exact(mu.exact().unwrap().iter().map(|w| w * &q).collect());
        let l = entropy_ledger(&cm, &f, &[2, 0, 1], &GlueParams::default()).unwrap();
        prop_assert!(l.chain_holds);
        prop_assert!(l.levels.iter().all(|v| v.normalized));
    }
}
