//! Decidable predicates for the seven partial orders on finite measures:
//! the usual order, stochastic dominance, the convex (Choquet) order, and
//! their composites, with constructive witnesses where the underlying
//! reductions are constructive (rightmost submeasures and shadows).

use serde::{Deserialize, Serialize};

use crate::measure::{Measure, SpatialForm};
use crate::{shadow, MASS_TOL, MERGE_TOL};

/// Tags for the seven order relations. `ConvexPlus` is the extended order:
/// existence of an intermediate measure eta with `mu <=C eta <=+ nu`, which
/// is exactly the feasibility condition for the shadow projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderRelation {
    Plus,
    Sto,
    Convex,
    ConvexPlus,
    PlusSto,
    ConvexSto,
    ConvexPlusSto,
}

impl OrderRelation {
    pub fn parse(s: &str) -> Option<OrderRelation> {
        Some(match s {
            "plus" | "+" => OrderRelation::Plus,
            "sto" => OrderRelation::Sto,
            "convex" | "c" => OrderRelation::Convex,
            "cp" | "convex_plus" => OrderRelation::ConvexPlus,
            "ps" | "plus_sto" => OrderRelation::PlusSto,
            "cs" | "convex_sto" => OrderRelation::ConvexSto,
            "cps" | "convex_plus_sto" => OrderRelation::ConvexPlusSto,
            _ => return None,
        })
    }
}

const ORDER_TOL: f64 = 1e-10;

fn atom_mass_at(sf: &SpatialForm, x: f64) -> f64 {
    sf.atoms
        .iter()
        .filter(|&&(p, _)| (p - x).abs() <= MERGE_TOL)
        .map(|&(_, w)| w)
        .sum()
}

fn density_at(sf: &SpatialForm, x: f64) -> f64 {
    sf.blocks
        .iter()
        .filter(|&&(a, b, _)| a <= x && x < b)
        .map(|&(_, _, d)| d)
        .sum()
}

/// `mu <=+ nu`: is `nu - mu` a positive measure? Compared atom-by-atom and
/// cell-by-cell on the refined common grid. Densities are constant per
/// refined cell, so comparing cell masses is equivalent and does not
/// amplify interpolation noise on thin slices.
pub fn leq_plus(mu: &Measure, nu: &Measure) -> bool {
    let a = mu.spatial_form().normalized();
    let b = nu.spatial_form().normalized();
    for &(x, w) in &a.atoms {
        if w > atom_mass_at(&b, x) + MASS_TOL {
            return false;
        }
    }
    let mut cuts: Vec<f64> = Vec::new();
    for sf in [&a, &b] {
        for &(p, q, _) in &sf.blocks {
            cuts.push(p);
            cuts.push(q);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= MERGE_TOL);
    for w in cuts.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let len = w[1] - w[0];
        if (density_at(&a, mid) - density_at(&b, mid)) * len > MASS_TOL {
            return false;
        }
    }
    true
}

/// `mu <=sto nu`: equal masses and quantile dominance `G_mu <= G_nu`,
/// checked at the merged breakpoints (sufficient for piecewise-linear
/// quantile functions).
pub fn leq_sto(mu: &Measure, nu: &Measure) -> bool {
    leq_sto_tol(mu, nu, MASS_TOL)
}

/// Quantile dominance with an explicit tolerance on the value axis.
/// Endpoint checks on the common refinement suffice because both quantile
/// functions are linear on each refined piece.
pub fn leq_sto_tol(mu: &Measure, nu: &Measure, tol: f64) -> bool {
    if (mu.mass() - nu.mass()).abs() > MASS_TOL {
        return false;
    }
    if mu.is_zero() {
        return true;
    }
    crate::measure::merged_pieces(mu, nu)
        .iter()
        .all(|p| p.a0 <= p.b0 + tol && p.a1 <= p.b1 + tol)
}

/// Spatial breakpoints of both measures (atom positions and block ends).
/// Outside the joint hull the compared functions are linear, so the
/// outermost grid points cover the tails.
fn joint_grid(mu: &Measure, nu: &Measure) -> Vec<f64> {
    let mut cuts = Vec::new();
    for meas in [mu, nu] {
        for s in meas.segments() {
            cuts.push(s.lo);
            cuts.push(s.hi);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    cuts
}

/// Maximum of the quadratic with second derivative `dd`, endpoint values
/// `fp`, `fq` on an interval of length `len`.
fn quad_max(fp: f64, fq: f64, dd: f64, len: f64) -> f64 {
    let mut best = fp.max(fq);
    if dd < 0.0 && len > 0.0 {
        let alpha = 0.5 * dd;
        let beta = (fq - fp) / len - alpha * len;
        let xstar = -beta / (2.0 * alpha);
        if xstar > 0.0 && xstar < len {
            best = best.max(fp + beta * xstar + alpha * xstar * xstar);
        }
    }
    best
}

fn quad_min(fp: f64, fq: f64, dd: f64, len: f64) -> f64 {
    -quad_max(-fp, -fq, -dd, len)
}

/// `mu <=C nu`: equal mass, equal barycenter and potential dominance
/// `u_mu <= u_nu`, checked exactly per piece (the difference of potentials
/// is quadratic between consecutive spatial breakpoints).
pub fn leq_convex(mu: &Measure, nu: &Measure) -> bool {
    let (mm, mn) = (mu.moments(), nu.moments());
    if (mm.mass - mn.mass).abs() > MASS_TOL {
        return false;
    }
    if mu.is_zero() {
        return true;
    }
    if (mm.barycenter - mn.barycenter).abs() > ORDER_TOL {
        return false;
    }
    let sa = mu.spatial_form().normalized();
    let sb = nu.spatial_form().normalized();
    let grid = joint_grid(mu, nu);
    for w in grid.windows(2) {
        let (p, q) = (w[0], w[1]);
        let fp = mu.potential(p) - nu.potential(p);
        if fp > ORDER_TOL {
            return false;
        }
        let fq = mu.potential(q) - nu.potential(q);
        let mid = 0.5 * (p + q);
        let dd = 2.0 * (density_at(&sa, mid) - density_at(&sb, mid));
        if quad_max(fp, fq, dd, q - p) > ORDER_TOL {
            return false;
        }
    }
    if let Some(&last) = grid.last() {
        if mu.potential(last) - nu.potential(last) > ORDER_TOL {
            return false;
        }
    }
    true
}

/// Increasing convex order for equal-mass measures: call-function
/// dominance `C_mu(k) <= C_nu(k)` for all `k`, checked exactly per piece.
pub fn leq_increasing_convex(mu: &Measure, nu: &Measure) -> bool {
    if (mu.mass() - nu.mass()).abs() > MASS_TOL {
        return false;
    }
    if mu.is_zero() {
        return true;
    }
    let sa = mu.spatial_form().normalized();
    let sb = nu.spatial_form().normalized();
    let grid = joint_grid(mu, nu);
    for w in grid.windows(2) {
        let (p, q) = (w[0], w[1]);
        let gp = nu.call_value(p) - mu.call_value(p);
        if gp < -ORDER_TOL {
            return false;
        }
        let gq = nu.call_value(q) - mu.call_value(q);
        let mid = 0.5 * (p + q);
        let dd = density_at(&sb, mid) - density_at(&sa, mid);
        if quad_min(gp, gq, dd, q - p) < -ORDER_TOL {
            return false;
        }
    }
    if let Some(&last) = grid.last() {
        if nu.call_value(last) - mu.call_value(last) < -ORDER_TOL {
            return false;
        }
    }
    true
}

/// Extended order `mu <=cp nu` (existence of `eta` with
/// `mu <=C eta <=+ nu`): the defining cone of non-negative convex test
/// functions is generated by calls, puts and non-negative constants, so
/// the relation reduces to mass, call-function and put-function dominance,
/// each checked exactly per piece. This is also exactly the feasibility
/// condition of the shadow projection.
pub fn leq_extended(mu: &Measure, nu: &Measure) -> bool {
    if mu.is_zero() {
        return true;
    }
    if mu.mass() > nu.mass() + MASS_TOL {
        return false;
    }
    let sa = mu.spatial_form().normalized();
    let sb = nu.spatial_form().normalized();
    let grid = joint_grid(mu, nu);
    let check = |value: &dyn Fn(&Measure, f64) -> f64| -> bool {
        for w in grid.windows(2) {
            let (p, q) = (w[0], w[1]);
            let gp = value(nu, p) - value(mu, p);
            if gp < -ORDER_TOL {
                return false;
            }
            let gq = value(nu, q) - value(mu, q);
            let mid = 0.5 * (p + q);
            let dd = density_at(&sb, mid) - density_at(&sa, mid);
            if quad_min(gp, gq, dd, q - p) < -ORDER_TOL {
                return false;
            }
        }
        if let Some(&last) = grid.last() {
            if value(nu, last) - value(mu, last) < -ORDER_TOL {
                return false;
            }
        }
        true
    };
    check(&|m, k| m.call_value(k)) && check(&|m, k| m.put_value(k))
}

/// Decides any of the seven relations; returns the intermediate measure of
/// the composite reductions (rightmost submeasure or shadow) as witness
/// where one exists.
pub fn leq_composite(rel: OrderRelation, mu: &Measure, nu: &Measure) -> (bool, Option<Measure>) {
    match rel {
        OrderRelation::Plus => (leq_plus(mu, nu), None),
        OrderRelation::Sto => (leq_sto(mu, nu), None),
        OrderRelation::Convex => (leq_convex(mu, nu), None),
        OrderRelation::ConvexSto => (leq_increasing_convex(mu, nu), None),
        OrderRelation::PlusSto => {
            // mu <=sto (rightmost submeasure of nu of mass mu)
            if mu.is_zero() {
                return (true, None);
            }
            if mu.mass() > nu.mass() + MASS_TOL {
                return (false, None);
            }
            match nu.rightmost_submeasure(mu.mass()) {
                Ok(top) => {
                    let ok = leq_sto(mu, &top);
                    (ok, ok.then_some(top))
                }
                Err(_) => (false, None),
            }
        }
        OrderRelation::ConvexPlusSto => {
            if mu.is_zero() {
                return (true, None);
            }
            if mu.mass() > nu.mass() + MASS_TOL {
                return (false, None);
            }
            match nu.rightmost_submeasure(mu.mass()) {
                Ok(top) => {
                    let ok = leq_increasing_convex(mu, &top);
                    (ok, ok.then_some(top))
                }
                Err(_) => (false, None),
            }
        }
        OrderRelation::ConvexPlus => {
            if mu.is_zero() {
                return (true, None);
            }
            if mu.mass() > nu.mass() + MASS_TOL {
                return (false, None);
            }
            if mu.is_atomic() {
                // success of the shadow construction is the predicate, and
                // the shadow is the witness
                match shadow::shadow_atomic(mu, nu) {
                    Ok((s, _)) => (true, Some(s)),
                    Err(_) => (false, None),
                }
            } else {
                (leq_extended(mu, nu), None)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leq_plus_examples() {
        assert!(leq_plus(&Measure::uniform(0.25, 0.75, 0.5), &Measure::lebesgue(0.0, 1.0)));
        assert!(!leq_plus(&Measure::dirac(0.5, 0.1), &Measure::lebesgue(0.0, 1.0)));
        let mu = Measure::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        assert!(leq_plus(&mu, &mu));
    }

    #[test]
    fn leq_sto_examples() {
        assert!(leq_sto(&Measure::lebesgue(0.0, 1.0), &Measure::lebesgue(0.5, 1.5)));
        let a = Measure::from_atoms(&[(0.0, 1.0), (2.0, 1.0)]);
        let b = Measure::dirac(1.0, 2.0);
        assert!(!leq_sto(&a, &b));
    }

    #[test]
    fn rightmost_submeasure_dominates_smaller_submeasures() {
        // any mu <=+ nu of mass alpha is <=sto the rightmost submeasure of
        // that mass; checked on a few quantile slices
        let nu = Measure::combine(&[
            (1.0, &Measure::lebesgue(0.0, 1.0)),
            (1.0, &Measure::dirac(0.3, 0.5)),
        ]);
        let m = nu.mass();
        let alpha = 0.4;
        let top = nu.rightmost_submeasure(alpha).unwrap();
        for s in [0.0, 0.2, 0.5, 0.9] {
            let start = s * (m - alpha);
            let sub = nu.restrict_quantile(start, start + alpha).unwrap();
            assert!(leq_plus(&sub, &nu));
            assert!(leq_sto(&sub, &top));
        }
    }

    #[test]
    fn leq_convex_examples() {
        assert!(leq_convex(
            &Measure::dirac(0.0, 1.0),
            &Measure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)])
        ));
        assert!(leq_convex(&Measure::lebesgue(0.0, 1.0), &Measure::uniform(-1.0, 2.0, 1.0)));
        assert!(!leq_convex(&Measure::dirac(0.0, 1.0), &Measure::dirac(1.0, 1.0)));
    }

    #[test]
    fn composite_convex_plus_atom_in_uniform() {
        let mu = Measure::dirac(0.5, 0.5);
        let nu = Measure::lebesgue(0.0, 1.0);
        let (ok, witness) = leq_composite(OrderRelation::ConvexPlus, &mu, &nu);
        assert!(ok);
        let w = witness.unwrap();
        assert_eq!(w, Measure::lebesgue(0.25, 0.75));
    }

    #[test]
    fn composite_convex_plus_sto_atom() {
        // (0.4 - k)_+ <= C_nu(k) for all k, so delta_{0.4} <=cps lambda[0,1];
        // grid oracle: the gap is non-negative everywhere and its minimum
        // over the active region [-1, 1/2] is 0.1, attained up to k = 0
        let mu = Measure::dirac(0.4, 1.0);
        let nu = Measure::lebesgue(0.0, 1.0);
        let mut min_active = f64::INFINITY;
        for i in 0..=3000 {
            let k = -1.0 + 3.0 * i as f64 / 3000.0;
            let call_nu = if k <= 0.0 {
                0.5 - k
            } else if k >= 1.0 {
                0.0
            } else {
                (1.0 - k) * (1.0 - k) / 2.0
            };
            let gap = call_nu - (0.4 - k).max(0.0);
            assert!(gap >= -1e-12, "gap {gap} at k = {k}");
            if k <= 0.5 {
                min_active = min_active.min(gap);
            }
        }
        assert!((min_active - 0.1).abs() < 1e-3, "oracle min {min_active}");
        let (ok, _) = leq_composite(OrderRelation::ConvexPlusSto, &mu, &nu);
        assert!(ok);
    }

    #[test]
    fn composite_plus_sto_with_far_atom() {
        // rightmost submeasure of mass 1 contains the far atom and dominates
        let mu = Measure::dirac(2.0, 1.0);
        let nu = Measure::combine(&[
            (1.0, &Measure::lebesgue(0.0, 1.0)),
            (1.0, &Measure::dirac(3.0, 1.0)),
        ]);
        let (ok, witness) = leq_composite(OrderRelation::PlusSto, &mu, &nu);
        assert!(ok);
        let w = witness.unwrap();
        // witness is lambda on the top of [0,1] plus the atom at 3
        assert!((w.mass() - 1.0).abs() < 1e-12);
        assert!(leq_sto(&mu, &w));
        assert!(leq_plus(&w, &nu));
    }

    #[test]
    fn relation_tags_parse() {
        for (s, r) in [
            ("plus", OrderRelation::Plus),
            ("sto", OrderRelation::Sto),
            ("convex", OrderRelation::Convex),
            ("cp", OrderRelation::ConvexPlus),
            ("ps", OrderRelation::PlusSto),
            ("cs", OrderRelation::ConvexSto),
            ("cps", OrderRelation::ConvexPlusSto),
        ] {
            assert_eq!(OrderRelation::parse(s), Some(r));
        }
        assert_eq!(OrderRelation::parse("nope"), None);
    }
}
