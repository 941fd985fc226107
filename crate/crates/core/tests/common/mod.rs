//! Shared generators for the randomized suites. Everything is driven by
//! the crate's counter RNG so failures replay from the printed seed.

#![allow(dead_code)]

use curtain_core::rng::CounterRng;
use curtain_core::Measure;

/// Atomic measure with `n` atoms at distinct positions in `[-span, span]`.
pub fn rand_atomic(rng: &mut CounterRng, n: usize, span: f64) -> Measure {
    let atoms: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.uniform(-span, span), rng.uniform(0.05, 1.0)))
        .collect();
    Measure::from_atoms(&atoms)
}

/// Atomic measure with `n` atoms of equal mass `w`.
pub fn rand_equal_atoms(rng: &mut CounterRng, n: usize, w: f64, span: f64) -> Measure {
    let atoms: Vec<(f64, f64)> = (0..n).map(|_| (rng.uniform(-span, span), w)).collect();
    Measure::from_atoms(&atoms)
}

/// Mixture of atoms and uniform blocks.
pub fn rand_mixed(rng: &mut CounterRng, span: f64) -> Measure {
    let n_atoms = 1 + (rng.next_u64() % 3) as usize;
    let n_blocks = 1 + (rng.next_u64() % 3) as usize;
    let mut terms: Vec<Measure> = Vec::new();
    for _ in 0..n_atoms {
        terms.push(Measure::dirac(rng.uniform(-span, span), rng.uniform(0.05, 0.6)));
    }
    for _ in 0..n_blocks {
        let a = rng.uniform(-span, span);
        let b = a + rng.uniform(0.1, span);
        terms.push(Measure::uniform(a, b, rng.uniform(0.05, 0.8)));
    }
    let refs: Vec<(f64, &Measure)> = terms.iter().map(|m| (1.0, m)).collect();
    Measure::combine(&refs)
}

/// A dilation of `mu`: every atom spreads, barycenter preserved atom by
/// atom, so the result dominates `mu` in the convex order exactly. Atomic
/// output when `atomic_targets` is set.
pub fn dilation(rng: &mut CounterRng, mu: &Measure, atomic_targets: bool) -> Measure {
    let atoms = mu.atoms().expect("dilation needs an atomic measure");
    let mut terms: Vec<Measure> = Vec::new();
    for (x, w) in atoms {
        let r = rng.uniform(0.0, 1.2);
        if r < 0.05 {
            terms.push(Measure::dirac(x, w));
        } else if atomic_targets || rng.next_f64() < 0.5 {
            // two-point dilation with balanced moments
            let left = rng.uniform(0.1, r.max(0.2));
            let right = rng.uniform(0.1, r.max(0.2));
            let p = right / (left + right);
            terms.push(Measure::dirac(x - left, w * p));
            terms.push(Measure::dirac(x + right, w * (1.0 - p)));
        } else {
            terms.push(Measure::uniform(x - r, x + r, w));
        }
    }
    let refs: Vec<(f64, &Measure)> = terms.iter().map(|m| (1.0, m)).collect();
    Measure::combine(&refs)
}

/// Target guaranteed to lie above `mu` in the extended order: a dilation
/// plus `extra` mass of junk placed anywhere.
pub fn feasible_target(rng: &mut CounterRng, mu: &Measure, extra: f64, span: f64) -> Measure {
    let base = dilation(rng, mu, false);
    if extra <= 0.0 {
        return base;
    }
    let junk = rand_mixed(rng, span);
    let scale = extra / junk.mass();
    Measure::combine(&[(1.0, &base), (scale, &junk)])
}
