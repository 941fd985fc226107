//! Algebraic invariants of the measure layer: metric axioms of the
//! Kantorovich distance, top/down splitting identities, the stochastic
//! shortcut, the potential-function bridge, and spatial round-trips.

mod common;

use curtain_core::orders;
use curtain_core::rng::CounterRng;
use curtain_core::Measure;
use proptest::prelude::*;

fn arb_measure() -> impl Strategy<Value = Measure> {
    (
        prop::collection::vec((-4.0..4.0f64, 0.05..1.0f64), 0..4),
        prop::collection::vec((-4.0..4.0f64, 0.1..2.0f64, 0.05..1.0f64), 0..3),
    )
        .prop_filter_map("needs mass", |(atoms, blocks)| {
            if atoms.is_empty() && blocks.is_empty() {
                return None;
            }
            let mut terms: Vec<Measure> = Vec::new();
            for (x, w) in atoms {
                terms.push(Measure::dirac(x, w));
            }
            for (a, len, w) in blocks {
                terms.push(Measure::uniform(a, a + len, w));
            }
            let refs: Vec<(f64, &Measure)> = terms.iter().map(|m| (1.0, m)).collect();
            Some(Measure::combine(&refs))
        })
}

/// Rescale to unit mass so pairs are comparable.
fn normalized(mu: &Measure) -> Measure {
    mu.scale(1.0 / mu.mass())
}

proptest! {
    #[test]
    fn full_quantile_restriction_is_identity(mu in arb_measure()) {
        let m = mu.mass();
        let back = mu.restrict_quantile(0.0, m).unwrap();
        prop_assert!(back.wasserstein(&mu).unwrap() <= 1e-12);
    }

    #[test]
    fn spatial_round_trip(mu in arb_measure()) {
        let back = mu.spatial_form().to_measure();
        prop_assert!(back.wasserstein(&mu).unwrap() <= 1e-12);
    }

    #[test]
    fn wasserstein_is_a_metric(a in arb_measure(), b in arb_measure(), c in arb_measure()) {
        let (a, b, c) = (normalized(&a), normalized(&b), normalized(&c));
        let ab = a.wasserstein(&b).unwrap();
        let ba = b.wasserstein(&a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(a.wasserstein(&a).unwrap() <= 1e-12);
        let ac = a.wasserstein(&c).unwrap();
        let cb = c.wasserstein(&b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-10);
    }

    #[test]
    fn top_down_additivity(a in arb_measure(), b in arb_measure()) {
        let (a, b) = (normalized(&a), normalized(&b));
        let (top, down) = a.top_down(&b).unwrap();
        let w = a.wasserstein(&b).unwrap();
        let via_down = a.wasserstein(&down).unwrap() + down.wasserstein(&b).unwrap();
        let via_top = a.wasserstein(&top).unwrap() + top.wasserstein(&b).unwrap();
        prop_assert!((w - via_down).abs() <= 1e-12);
        prop_assert!((w - via_top).abs() <= 1e-12);
    }

    #[test]
    fn top_translation_identity(a in arb_measure(), b in arb_measure(), c in arb_measure()) {
        let (a, b) = (normalized(&a), normalized(&b));
        let (top, _) = a.top_down(&b).unwrap();
        let lhs = top.add(&c);
        let (rhs, _) = a.add(&c).top_down(&b.add(&c)).unwrap();
        prop_assert!(lhs.wasserstein(&rhs).unwrap() <= 1e-10);
    }

    #[test]
    fn potential_is_lipschitz_in_the_measure(a in arb_measure(), b in arb_measure(), x in -6.0..6.0f64) {
        let (a, b) = (normalized(&a), normalized(&b));
        let w = a.wasserstein(&b).unwrap();
        prop_assert!((a.potential(x) - b.potential(x)).abs() <= w + 1e-10);
    }
}

#[test]
fn stochastic_pairs_reduce_to_barycenter_difference() {
    // when mu <=sto nu the distance is the barycenter gap times the mass
    let mut rng = CounterRng::new(0x5705);
    for _ in 0..200 {
        let n = 1 + (rng.next_u64() % 6) as usize;
        let mu = common::rand_atomic(&mut rng, n, 2.0);
        let atoms = mu.atoms().unwrap();
        let shifted: Vec<(f64, f64)> =
            atoms.iter().map(|&(x, w)| (x + rng.uniform(0.0, 1.5), w)).collect();
        let nu = Measure::from_atoms(&shifted);
        assert!(orders::leq_sto(&mu, &nu));
        let w = mu.wasserstein(&nu).unwrap();
        let expect = mu.mass() * (nu.barycenter() - mu.barycenter());
        assert!((w - expect).abs() <= 1e-12, "{w} vs {expect}");
    }
}

#[test]
fn dyadic_atomization_increases_in_convex_order() {
    let mut rng = CounterRng::new(0xA70);
    for _ in 0..50 {
        let mu = common::rand_mixed(&mut rng, 2.0);
        let mut prev: Option<Measure> = None;
        for k in 0..6 {
            let a = mu.atomize_dyadic(k);
            assert!(orders::leq_convex(&a, &mu), "level {k} not below the measure");
            if let Some(p) = prev {
                assert!(orders::leq_convex(&p, &a), "levels not increasing at {k}");
            }
            prev = Some(a);
        }
    }
}
