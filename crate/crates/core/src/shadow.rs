//! Shadow projections.
//!
//! The shadow of `mu` in `nu` is the convex-order-minimal measure `eta`
//! with `mu <=C eta <=+ nu`. For an atom it is a restriction of `nu`
//! between two quantiles; for a sum of atoms it is built by accumulating
//! pseudo-intervals of the remaining quantile levels; for general `mu` it
//! is approximated through dyadic atomizations, which increase to `mu` in
//! the convex order.
//!
//! The quantile-level bookkeeping lives in [`QuantileSet`]: a disjoint
//! union of level intervals `]s, t]` of the target measure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Measure, MeasureError, Segment};
use crate::{BARY_TOL, MASS_TOL, MERGE_TOL};

#[derive(Debug, Error)]
pub enum ShadowError {
    #[error(
        "atom {atom_index:?} (x={x}, mass={alpha}) infeasible: \
         attainable barycenter range [{bary_min}, {bary_max}]"
    )]
    Infeasible { atom_index: Option<usize>, x: f64, alpha: f64, bary_min: f64, bary_max: f64 },
    #[error("atom {atom_index:?} mass {alpha} exceeds free residual mass {free}")]
    InsufficientMass { atom_index: Option<usize>, alpha: f64, free: f64 },
    #[error("source measure is not purely atomic")]
    NotAtomic,
    #[error("dyadic refinement stalled at level {level}: delta {delta} > tol {tol}")]
    NonConvergence { level: u32, delta: f64, tol: f64, last: Measure },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

impl ShadowError {
    pub(crate) fn with_atom_index(self, i: usize) -> ShadowError {
        match self {
            ShadowError::Infeasible { x, alpha, bary_min, bary_max, .. } => {
                ShadowError::Infeasible { atom_index: Some(i), x, alpha, bary_min, bary_max }
            }
            ShadowError::InsufficientMass { alpha, free, .. } => {
                ShadowError::InsufficientMass { atom_index: Some(i), alpha, free }
            }
            e => e,
        }
    }
}

/// A disjoint union of quantile-level intervals `]s, t]` of a target
/// measure of mass `target_mass`, sorted, with gaps larger than the merge
/// tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSet {
    target_mass: f64,
    intervals: Vec<(f64, f64)>,
}

impl QuantileSet {
    pub fn empty(target_mass: f64) -> Self {
        QuantileSet { target_mass, intervals: Vec::new() }
    }

    pub fn full(target_mass: f64) -> Self {
        QuantileSet { target_mass, intervals: vec![(0.0, target_mass)] }
    }

    pub fn from_intervals(target_mass: f64, intervals: Vec<(f64, f64)>) -> Self {
        let mut qs = QuantileSet::empty(target_mass);
        for iv in intervals {
            qs.insert(iv);
        }
        qs
    }

    pub fn target_mass(&self) -> f64 {
        self.target_mass
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Total level mass covered.
    pub fn total(&self) -> f64 {
        self.intervals.iter().map(|&(s, t)| t - s).sum()
    }

    /// Union with one interval, coalescing neighbours that touch.
    pub fn insert(&mut self, (s, t): (f64, f64)) {
        if t - s <= 0.0 {
            return;
        }
        self.intervals.push((s, t));
        self.intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.intervals.len());
        for &(s, t) in &self.intervals {
            if let Some(last) = out.last_mut() {
                if s <= last.1 + MERGE_TOL {
                    last.1 = last.1.max(t);
                    continue;
                }
            }
            out.push((s, t));
        }
        self.intervals = out;
    }

    pub fn union(&self, other: &QuantileSet) -> QuantileSet {
        let mut out = self.clone();
        for &iv in &other.intervals {
            out.insert(iv);
        }
        out
    }

    /// Complement intervals within `]0, target_mass]`.
    pub fn complement(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut pos = 0.0;
        for &(s, t) in &self.intervals {
            if s > pos + MASS_TOL {
                out.push((pos, s));
            }
            pos = pos.max(t);
        }
        if pos < self.target_mass - MASS_TOL {
            out.push((pos, self.target_mass));
        }
        out
    }

    /// Free (uncovered) level mass in `]0, q]`.
    pub fn free_below(&self, q: f64) -> f64 {
        let mut used = 0.0;
        for &(s, t) in &self.intervals {
            if s >= q {
                break;
            }
            used += t.min(q) - s;
        }
        (q - used).max(0.0)
    }

    /// Smallest `q` with `free_below(q) >= f`.
    fn free_inverse_lower(&self, f: f64) -> f64 {
        let f = f.max(0.0);
        let mut free = 0.0;
        let mut pos = 0.0;
        for &(s, t) in &self.intervals {
            let gap = s - pos;
            if free + gap >= f {
                return pos + (f - free);
            }
            free += gap;
            pos = t;
        }
        pos + (f - free)
    }

    /// Free sub-intervals of `]p, q]`.
    fn gaps_between(&self, p: f64, q: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut pos = p;
        for &(s, t) in &self.intervals {
            if t <= pos {
                continue;
            }
            if s >= q {
                break;
            }
            if s > pos + 1e-15 {
                out.push((pos, s.min(q)));
            }
            pos = pos.max(t);
            if pos >= q {
                break;
            }
        }
        if pos < q - 1e-15 {
            out.push((pos, q));
        }
        out
    }
}

/// `(G_nu)_# λ` restricted to the levels covered by `qs`.
pub fn restrict_to_set(nu: &Measure, qs: &QuantileSet) -> Measure {
    let mut segs: Vec<Segment> = Vec::new();
    for &(s, t) in qs.intervals() {
        if let Ok(piece) = nu.restrict_quantile(s, t) {
            segs.extend_from_slice(piece.segments());
        }
    }
    Measure::from_raw(segs)
}

/// The part of `nu` not yet consumed: `(G_nu)_# λ` on the complement of
/// `used`.
pub fn residual(nu: &Measure, used: &QuantileSet) -> Measure {
    let mut segs: Vec<Segment> = Vec::new();
    for (s, t) in used.complement() {
        if let Ok(piece) = nu.restrict_quantile(s, t) {
            segs.extend_from_slice(piece.segments());
        }
    }
    Measure::from_raw(segs)
}

struct Window {
    gaps: Vec<(f64, f64)>,
    barycenter: f64,
}

fn window_at(nu: &Measure, used: &QuantileSet, alpha: f64, q: f64) -> Window {
    let fq = used.free_below(q);
    // the lower inverse never lands strictly inside a covered interval, so
    // the gap scan below realizes the pseudo-interval ]p, q] minus `used`
    let p = used.free_inverse_lower((fq - alpha).max(0.0));
    let gaps = used.gaps_between(p, q);
    let mut first = 0.0;
    let mut mass = 0.0;
    for &(a, b) in &gaps {
        first += nu.first_moment_between(a, b);
        mass += b - a;
    }
    let barycenter = if mass > 0.0 { first / mass } else { 0.0 };
    Window { gaps, barycenter }
}

/// Shadow of a single atom `alpha * delta_x` in the free part of `nu`.
///
/// The window is parametrized by its right endpoint `q`: free level mass
/// below `q` is collected leftward until `alpha` is reached. The window
/// barycenter is continuous and non-decreasing in `q`, so the equation
/// `barycenter = x` is solved by bisection for the smallest feasible `q`
/// (which also resolves ties across flat stretches). The left endpoint is
/// then recovered in closed form from the free-mass balance.
pub fn shadow_atom(
    x: f64,
    alpha: f64,
    nu: &Measure,
    used: &QuantileSet,
) -> Result<(QuantileSet, Measure), ShadowError> {
    let m = nu.mass();
    let free_total = m - used.total();
    if alpha > free_total + MASS_TOL {
        return Err(ShadowError::InsufficientMass { atom_index: None, alpha, free: free_total });
    }
    let alpha = alpha.min(free_total);
    let q_min = used.free_inverse_lower(alpha);
    let lowest = window_at(nu, used, alpha, q_min);
    let highest = window_at(nu, used, alpha, m);
    if x < lowest.barycenter - BARY_TOL || x > highest.barycenter + BARY_TOL {
        return Err(ShadowError::Infeasible {
            atom_index: None,
            x,
            alpha,
            bary_min: lowest.barycenter,
            bary_max: highest.barycenter,
        });
    }
    let chosen = if lowest.barycenter >= x {
        lowest
    } else if highest.barycenter <= x {
        highest
    } else {
        // leftmost q whose window barycenter reaches x
        let mut lo = q_min;
        let mut hi = m;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if window_at(nu, used, alpha, mid).barycenter >= x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        window_at(nu, used, alpha, hi)
    };
    // pin the window to exactly alpha level mass: bisection and plateau
    // snapping leave a sub-tolerance deficit that would otherwise compound
    // over many atoms
    let mut gaps = chosen.gaps;
    let total: f64 = gaps.iter().map(|&(a, b)| b - a).sum();
    let deficit = total - alpha;
    debug_assert!(deficit.abs() < 1e-9, "window mass off by {deficit}");
    if let Some(first) = gaps.first_mut() {
        if first.1 - (first.0 + deficit) > 0.0 {
            first.0 += deficit;
        }
    }
    let increment = QuantileSet::from_intervals(m, gaps);
    let piece = restrict_to_set(nu, &increment);
    debug_assert!(
        (piece.barycenter() - x).abs() <= BARY_TOL.max(1e-9 * x.abs()),
        "shadow window barycenter {} vs {}",
        piece.barycenter(),
        x
    );
    Ok((increment, piece))
}

/// One step of a shadow construction.
#[derive(Debug, Clone)]
pub struct TraceStep {
    pub x: f64,
    pub alpha: f64,
    /// Quantile levels added by this atom.
    pub increment: QuantileSet,
    /// Levels covered after this atom (the set `J_k`).
    pub cumulative: QuantileSet,
    /// The measure carried by the increment (this atom's kernel target).
    pub piece: Measure,
    /// Shadow of the atom prefix processed so far.
    pub shadow: Measure,
}

/// Per-atom record of a shadow computation; used by the curtain coupling,
/// which reads each source's target off the trace.
#[derive(Debug, Clone, Default)]
pub struct ShadowTrace {
    pub steps: Vec<TraceStep>,
}

/// Shadow of a purely atomic measure, processing atoms in ascending
/// position order. The result does not depend on the order; the trace does.
pub fn shadow_atomic(mu: &Measure, nu: &Measure) -> Result<(Measure, ShadowTrace), ShadowError> {
    let atoms = mu.atoms().ok_or(ShadowError::NotAtomic)?;
    shadow_atomic_in_order(&atoms, nu)
}

/// Shadow of a list of atoms processed in the given order. Exposed so the
/// order-independence of the result can be exercised directly.
pub fn shadow_atomic_in_order(
    atoms: &[(f64, f64)],
    nu: &Measure,
) -> Result<(Measure, ShadowTrace), ShadowError> {
    let m = nu.mass();
    let mut used = QuantileSet::empty(m);
    let mut trace = ShadowTrace::default();
    for (i, &(x, alpha)) in atoms.iter().enumerate() {
        let (increment, piece) =
            shadow_atom(x, alpha, nu, &used).map_err(|e| e.with_atom_index(i))?;
        used = used.union(&increment);
        let shadow = restrict_to_set(nu, &used);
        trace.steps.push(TraceStep { x, alpha, increment, cumulative: used.clone(), piece, shadow });
    }
    let result = restrict_to_set(nu, &used);
    Ok((result, trace))
}

/// Trace-free variant for refinement loops over many atoms.
fn shadow_atomic_measure(atoms: &[(f64, f64)], nu: &Measure) -> Result<Measure, ShadowError> {
    let m = nu.mass();
    let mut used = QuantileSet::empty(m);
    for (i, &(x, alpha)) in atoms.iter().enumerate() {
        let (increment, _) =
            shadow_atom(x, alpha, nu, &used).map_err(|e| e.with_atom_index(i))?;
        used = used.union(&increment);
    }
    Ok(restrict_to_set(nu, &used))
}

const DYADIC_START: u32 = 4;
const DYADIC_CAP: u32 = 16;

/// Shadow of a general measure through dyadic atomization, refined until
/// two successive shadows are within `tol` in Kantorovich distance.
pub fn shadow_general(mu: &Measure, nu: &Measure, tol: f64) -> Result<Measure, ShadowError> {
    if mu.is_atomic() {
        return Ok(shadow_atomic(mu, nu)?.0);
    }
    if mu.is_zero() {
        return Ok(Measure::zero());
    }
    let mut prev: Option<Measure> = None;
    let mut delta = f64::INFINITY;
    for k in DYADIC_START..=DYADIC_CAP {
        let atoms = mu.atomize_dyadic(k).atoms().expect("dyadic atomization is atomic");
        let s = shadow_atomic_measure(&atoms, nu)?;
        if let Some(p) = &prev {
            delta = s.wasserstein(p)?;
            if delta <= tol {
                return Ok(s);
            }
        }
        prev = Some(s);
    }
    Err(ShadowError::NonConvergence { level: DYADIC_CAP, delta, tol, last: prev.unwrap() })
}

/// Test utility: add an atom far to the left of `nu`'s support so that a
/// shadow becomes feasible. Default position is ten support diameters
/// below the support minimum.
pub fn pad_left(nu: &Measure, position: Option<f64>, mass: f64) -> Measure {
    let (lo, hi) = nu.support_bounds().unwrap_or((0.0, 0.0));
    let diam = (hi - lo).max(1.0);
    let pos = position.unwrap_or(lo - 10.0 * diam);
    nu.add(&Measure::dirac(pos, mass))
}
