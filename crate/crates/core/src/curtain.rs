//! Left-curtain martingale couplings, left-monotonicity on the reduced
//! support, cost optimality against a vertex-enumeration oracle, the
//! prefix semimetric between couplings, and the planar support-distance
//! lower bound.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{Measure, MeasureError};
use crate::shadow::{self, ShadowError};
use crate::{orders, MASS_TOL};

#[derive(Debug, Error)]
pub enum CurtainError {
    #[error("marginal masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("marginals are not in convex order")]
    NotConvexOrdered,
    #[error("coupling targets are not atomic; no finite representation")]
    NotAtomicTargets,
    #[error("state count {0} exceeds the combinatorial guard {1}")]
    GuardExceeded(usize, usize),
    #[error(transparent)]
    Shadow(#[from] ShadowError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// One source atom of a coupling and the submeasure it is transported to.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingSource {
    pub x: f64,
    pub weight: f64,
    pub target: Measure,
}

/// A source-atom-to-submeasure transport kernel. The first marginal is the
/// sum of the source atoms, the second the sum of the targets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Coupling {
    pub sources: Vec<CouplingSource>,
}

impl Coupling {
    pub fn total_mass(&self) -> f64 {
        self.sources.iter().map(|s| s.weight).sum()
    }

    pub fn first_marginal(&self) -> Measure {
        let atoms: Vec<(f64, f64)> = self.sources.iter().map(|s| (s.x, s.weight)).collect();
        Measure::from_atoms(&atoms)
    }

    pub fn second_marginal(&self) -> Measure {
        let terms: Vec<(f64, &Measure)> = self.sources.iter().map(|s| (1.0, &s.target)).collect();
        Measure::combine(&terms)
    }

    /// Identity coupling of an atomic measure.
    pub fn identity(mu: &Measure) -> Result<Coupling, CurtainError> {
        let atoms = mu.atoms().ok_or(ShadowError::NotAtomic)?;
        Ok(Coupling {
            sources: atoms
                .into_iter()
                .map(|(x, w)| CouplingSource { x, weight: w, target: Measure::dirac(x, w) })
                .collect(),
        })
    }

    /// Dense matrix form over the source and target atom grids. Fails if
    /// any target carries a uniform block.
    pub fn to_finite(&self) -> Result<FiniteCoupling, CurtainError> {
        const POS_TOL: f64 = 1e-9;
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.sources {
            let atoms = s.target.atoms().ok_or(CurtainError::NotAtomicTargets)?;
            for (y, _) in atoms {
                if !ys.iter().any(|&p| (p - y).abs() <= POS_TOL) {
                    ys.push(y);
                }
            }
        }
        ys.sort_by(f64::total_cmp);
        let xs: Vec<f64> = self.sources.iter().map(|s| s.x).collect();
        let mut m = vec![vec![0.0; ys.len()]; xs.len()];
        for (i, s) in self.sources.iter().enumerate() {
            for (y, w) in s.target.atoms().unwrap() {
                let j = ys
                    .iter()
                    .position(|&p| (p - y).abs() <= POS_TOL)
                    .expect("target position registered above");
                m[i][j] += w;
            }
        }
        Ok(FiniteCoupling { xs, ys, m, atom_rows: vec![true; self.sources.len()] })
    }
}

/// A coupling between finite grids, as a dense matrix of masses.
/// `atom_rows[i]` records whether source `i` is a genuine atom of the first
/// marginal or a discretization cell of a continuous measure; the reduced
/// support keeps full columns only over genuine atoms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteCoupling {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub atom_rows: Vec<bool>,
}

impl FiniteCoupling {
    pub fn row_sums(&self) -> Vec<f64> {
        self.m.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.ys.len()];
        for r in &self.m {
            for (j, v) in r.iter().enumerate() {
                out[j] += v;
            }
        }
        out
    }

    /// Largest violation of `E[Y | X = x_i] = x_i` over the rows.
    pub fn martingale_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, r) in self.m.iter().enumerate() {
            let w: f64 = r.iter().sum();
            if w <= MASS_TOL {
                continue;
            }
            let mean: f64 = r.iter().zip(&self.ys).map(|(v, y)| v * y).sum::<f64>() / w;
            worst = worst.max((mean - self.xs[i]).abs());
        }
        worst
    }

    /// Mass sent from strictly left of `x` to strictly right of `x`.
    fn crossing_mass(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, r) in self.m.iter().enumerate() {
            if self.xs[i] >= x {
                continue;
            }
            for (j, v) in r.iter().enumerate() {
                if self.ys[j] > x {
                    acc += v;
                }
            }
        }
        acc
    }
}

/// The coupling support minus vertical lines over right-isolated
/// no-crossing points, except over genuine source atoms.
#[derive(Debug, Clone)]
pub struct ReducedSupport {
    /// Kept support entries as `(row, col)` indices.
    pub pairs: Vec<(usize, usize)>,
}

impl ReducedSupport {
    pub fn positions(&self, fc: &FiniteCoupling) -> Vec<(f64, f64)> {
        self.pairs.iter().map(|&(i, j)| (fc.xs[i], fc.ys[j])).collect()
    }
}

/// Computes the reduced support: `A` is the set of grid points with no
/// crossing mass, `A-` its right-isolated points (no-crossing fails just to
/// their right), and columns over `A-` are dropped unless the source is a
/// genuine atom.
pub fn reduced_support(fc: &FiniteCoupling) -> ReducedSupport {
    let n = fc.xs.len();
    let mut drop_row = vec![false; n];
    for i in 0..n {
        if fc.atom_rows[i] {
            continue;
        }
        let x = fc.xs[i];
        if fc.crossing_mass(x) > MASS_TOL {
            continue; // not in A
        }
        let next_critical = fc
            .xs
            .iter()
            .chain(fc.ys.iter())
            .copied()
            .filter(|&p| p > x)
            .fold(f64::INFINITY, f64::min);
        if !next_critical.is_finite() {
            continue; // A extends to the right of x
        }
        let mid = 0.5 * (x + next_critical);
        if fc.crossing_mass(mid) > MASS_TOL {
            drop_row[i] = true; // x is right-isolated in A
        }
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        if drop_row[i] {
            continue;
        }
        for (j, &v) in fc.m[i].iter().enumerate() {
            if v > MASS_TOL {
                pairs.push((i, j));
            }
        }
    }
    ReducedSupport { pairs }
}

/// A triple of support points witnessing a left-monotonicity violation:
/// `(x, y_minus)`, `(x, y_plus)` and `(x', y')` with `x < x'` and
/// `y_minus < y' < y_plus`.
pub type ViolationWitness = ((f64, f64), (f64, f64), (f64, f64));

/// Scans triples over the reduced support for the left-monotonicity
/// criterion; returns the first violating triple if any.
pub fn check_left_monotone(fc: &FiniteCoupling) -> (bool, Option<ViolationWitness>) {
    let sup = reduced_support(fc);
    let n = fc.xs.len();
    // per retained row: extreme target values
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for &(i, j) in &sup.pairs {
        lo[i] = lo[i].min(fc.ys[j]);
        hi[i] = hi[i].max(fc.ys[j]);
    }
    for &(i2, j2) in &sup.pairs {
        let (xp, yp) = (fc.xs[i2], fc.ys[j2]);
        for i in 0..n {
            if fc.xs[i] < xp && lo[i] < yp && yp < hi[i] {
                return (false, Some(((fc.xs[i], lo[i]), (fc.xs[i], hi[i]), (xp, yp))));
            }
        }
    }
    (true, None)
}

/// Builds the left-curtain coupling of an atomic `mu` into `nu`: atoms are
/// processed in ascending position and each one is transported to its
/// shadow increment in the remaining part of `nu`.
pub fn curtain_atomic(mu: &Measure, nu: &Measure) -> Result<Coupling, CurtainError> {
    let (mm, mn) = (mu.mass(), nu.mass());
    if (mm - mn).abs() > MASS_TOL {
        return Err(CurtainError::MassMismatch(mm, mn));
    }
    if !orders::leq_convex(mu, nu) {
        return Err(CurtainError::NotConvexOrdered);
    }
    let (_, trace) = shadow::shadow_atomic(mu, nu)?;
    Ok(Coupling {
        sources: trace
            .steps
            .into_iter()
            .map(|s| CouplingSource { x: s.x, weight: s.alpha, target: s.piece })
            .collect(),
    })
}

/// Curtain coupling of a general `mu` through its dyadic atomization at
/// level `k` (the approximation level is the caller's to document).
pub fn curtain_general(mu: &Measure, nu: &Measure, k: u32) -> Result<Coupling, CurtainError> {
    curtain_atomic(&mu.atomize_dyadic(k), nu)
}

/// Closed-form two-branch kernel of the curtain coupling between
/// `lambda_[0,1]` and `lambda_[-a, 1+a]`: jump down with probability
/// `a/(1+2a)` along `x -> -a x`, continue up along `x -> (1+a) x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformKernel {
    pub p_down: f64,
    pub up_slope: f64,
    pub down_slope: f64,
}

pub fn curtain_uniform_kernel(a: f64) -> Result<UniformKernel, CurtainError> {
    if a < 0.0 {
        return Err(CurtainError::MassMismatch(a, 0.0));
    }
    Ok(UniformKernel { p_down: a / (1.0 + 2.0 * a), up_slope: 1.0 + a, down_slope: -a })
}

fn sqrt1py2_antiderivative(y: f64) -> f64 {
    0.5 * (y * (y * y + 1.0).sqrt() + y.asinh())
}

/// Integral of `sqrt(y^2 + 1)` against the measure, exact per linear piece.
fn cost_integral(target: &Measure) -> f64 {
    let mut acc = 0.0;
    for s in target.segments() {
        if s.lo == s.hi {
            acc += s.width * (s.lo * s.lo + 1.0).sqrt();
        } else {
            let d = s.width / (s.hi - s.lo);
            acc += d * (sqrt1py2_antiderivative(s.hi) - sqrt1py2_antiderivative(s.lo));
        }
    }
    acc
}

/// Martingale residual and transport cost under
/// `c(x, y) = (1 + tanh(-x)) sqrt(y^2 + 1)`.
pub fn martingale_cost(pi: &Coupling) -> (f64, f64) {
    let mut residual: f64 = 0.0;
    let mut cost = 0.0;
    for s in &pi.sources {
        if s.weight > MASS_TOL {
            residual = residual.max((s.target.barycenter() - s.x).abs());
        }
        cost += (1.0 + (-s.x).tanh()) * cost_integral(&s.target);
    }
    (residual, cost)
}

/// Cost of a finite coupling under the same functional.
pub fn finite_cost(fc: &FiniteCoupling) -> f64 {
    let mut acc = 0.0;
    for (i, r) in fc.m.iter().enumerate() {
        let fx = 1.0 + (-fc.xs[i]).tanh();
        for (j, v) in r.iter().enumerate() {
            acc += v * fx * (fc.ys[j] * fc.ys[j] + 1.0).sqrt();
        }
    }
    acc
}

const VERTEX_GUARD: usize = 5;

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(pool: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k == 0 {
        visit(&[]);
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + pool - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates every vertex of the martingale transportation polytope
/// between two atomic measures by forcing the codimension-many entries to
/// zero and solving the marginal-plus-martingale linear system for each
/// support pattern.
///
/// This is the brute-force optimality oracle; `n` is capped at five.
pub fn enumerate_vertices(mu: &Measure, nu: &Measure) -> Result<Vec<FiniteCoupling>, CurtainError> {
    let src = mu.atoms().ok_or(ShadowError::NotAtomic)?;
    let tgt = nu.atoms().ok_or(ShadowError::NotAtomic)?;
    let (n1, n2) = (src.len(), tgt.len());
    if n1 > VERTEX_GUARD || n2 > VERTEX_GUARD {
        return Err(CurtainError::GuardExceeded(n1.max(n2), VERTEX_GUARD));
    }
    if (mu.mass() - nu.mass()).abs() > MASS_TOL {
        return Err(CurtainError::MassMismatch(mu.mass(), nu.mass()));
    }
    let cells = n1 * n2;
    let n_constraints = 2 * n1 + n2 - 2;
    if cells < n_constraints {
        return Ok(Vec::new());
    }
    let zeros = cells - n_constraints;
    let xs: Vec<f64> = src.iter().map(|&(x, _)| x).collect();
    let a: Vec<f64> = src.iter().map(|&(_, w)| w).collect();
    let ys: Vec<f64> = tgt.iter().map(|&(y, _)| y).collect();
    let b: Vec<f64> = tgt.iter().map(|&(_, w)| w).collect();

    let mut found: Vec<Vec<f64>> = Vec::new();
    combinations(cells, zeros, |pattern| {
        // every row and column must keep at least one free entry
        let mut row_free = vec![0usize; n1];
        let mut col_free = vec![0usize; n2];
        for i in 0..n1 {
            row_free[i] = n2;
        }
        for j in 0..n2 {
            col_free[j] = n1;
        }
        for &z in pattern {
            row_free[z / n2] -= 1;
            col_free[z % n2] -= 1;
        }
        if row_free.iter().any(|&c| c == 0) || col_free.iter().any(|&c| c == 0) {
            return;
        }
        let mut mat = vec![vec![0.0; cells]; cells];
        let mut rhs = vec![0.0; cells];
        let mut row = 0;
        for i in 0..n1 {
            for j in 0..n2 {
                mat[row][i * n2 + j] = 1.0;
            }
            rhs[row] = a[i];
            row += 1;
        }
        for j in 0..n2 - 1 {
            for i in 0..n1 {
                mat[row][i * n2 + j] = 1.0;
            }
            rhs[row] = b[j];
            row += 1;
        }
        for i in 0..n1 - 1 {
            for j in 0..n2 {
                mat[row][i * n2 + j] = ys[j];
            }
            rhs[row] = a[i] * xs[i];
            row += 1;
        }
        for &z in pattern {
            mat[row][z] = 1.0;
            row += 1;
        }
        let Some(sol) = solve_dense(mat, rhs) else { return };
        if sol.iter().any(|&v| v < -1e-10) {
            return;
        }
        let sol: Vec<f64> = sol.iter().map(|&v| v.max(0.0)).collect();
        // verify the dropped dependent constraints as well
        let mut ok = true;
        for j in 0..n2 {
            let s: f64 = (0..n1).map(|i| sol[i * n2 + j]).sum();
            if (s - b[j]).abs() > 1e-8 {
                ok = false;
            }
        }
        for i in 0..n1 {
            let s: f64 = (0..n2).map(|j| sol[i * n2 + j] * ys[j]).sum();
            if (s - a[i] * xs[i]).abs() > 1e-8 {
                ok = false;
            }
        }
        if !ok {
            return;
        }
        if !found.iter().any(|f| {
            f.iter().zip(&sol).all(|(u, v)| (u - v).abs() <= 1e-9)
        }) {
            found.push(sol);
        }
    });

    Ok(found
        .into_iter()
        .map(|flat| FiniteCoupling {
            xs: xs.clone(),
            ys: ys.clone(),
            m: (0..n1).map(|i| flat[i * n2..(i + 1) * n2].to_vec()).collect(),
            atom_rows: vec![true; n1],
        })
        .collect())
}

/// Second marginal of the quantile prefix of mass `s`: full targets of the
/// lowest sources, the next one split proportionally.
fn prefix_marginal(pi: &Coupling, s: f64) -> Measure {
    let mut order: Vec<usize> = (0..pi.sources.len()).collect();
    order.sort_by(|&i, &j| pi.sources[i].x.total_cmp(&pi.sources[j].x));
    let mut terms: Vec<(f64, &Measure)> = Vec::new();
    let mut cum = 0.0;
    for i in order {
        let src = &pi.sources[i];
        if cum + src.weight <= s + MASS_TOL {
            terms.push((1.0, &src.target));
        } else if s > cum + MASS_TOL {
            terms.push(((s - cum) / src.weight, &src.target));
            break;
        } else {
            break;
        }
        cum += src.weight;
    }
    Measure::combine(&terms)
}

/// Prefix semimetric between couplings: the maximum over merged prefix
/// levels of the Kantorovich distance between prefix second marginals,
/// together with the distance between first marginals. Atoms of the first
/// marginals are split proportionally by quantile level; the supremum over
/// levels is attained at a breakpoint of the merged grid, so the value is
/// exact for this family (and an admissible upper bound of the infimum
/// semimetric when first marginals carry atoms).
pub fn z_distance(pi: &Coupling, pi2: &Coupling) -> Result<f64, CurtainError> {
    let (ma, mb) = (pi.total_mass(), pi2.total_mass());
    if (ma - mb).abs() > MASS_TOL {
        return Err(CurtainError::MassMismatch(ma, mb));
    }
    let mut best = pi.first_marginal().wasserstein(&pi2.first_marginal())?;
    let mut levels: Vec<f64> = Vec::new();
    for c in [pi, pi2] {
        let mut order: Vec<usize> = (0..c.sources.len()).collect();
        order.sort_by(|&i, &j| c.sources[i].x.total_cmp(&c.sources[j].x));
        let mut cum = 0.0;
        for i in order {
            cum += c.sources[i].weight;
            levels.push(cum);
        }
    }
    levels.push(ma);
    levels.sort_by(f64::total_cmp);
    levels.dedup_by(|a, b| (*a - *b).abs() <= MASS_TOL);
    for &s in &levels {
        if s <= MASS_TOL {
            continue;
        }
        let na = prefix_marginal(pi, s);
        let nb = prefix_marginal(pi2, s);
        best = best.max(na.wasserstein(&nb)?);
    }
    Ok(best)
}

struct SupportPiece {
    x: f64,
    ylo: f64,
    yhi: f64,
}

fn support_pieces(pi: &Coupling) -> Vec<SupportPiece> {
    let mut out = Vec::new();
    for s in &pi.sources {
        for seg in s.target.segments() {
            out.push(SupportPiece { x: s.x, ylo: seg.lo, yhi: seg.hi });
        }
    }
    out
}

fn dist_to_support(pieces: &[SupportPiece], x: f64, y: f64) -> f64 {
    pieces
        .iter()
        .map(|p| (x - p.x).abs() + (p.ylo - y).max(0.0).max(y - p.yhi))
        .fold(f64::INFINITY, f64::min)
}

/// Lower bound on the planar Kantorovich distance between couplings:
/// integrates the l1 distance from `pi2`'s mass to the support of `pi`.
/// Within each refined cell the distance is a minimum of linear branches,
/// hence concave, so the trapezoid value underestimates and the bound stays
/// valid.
pub fn support_distance_lb(pi: &Coupling, pi2: &Coupling) -> f64 {
    let pieces = support_pieces(pi);
    if pieces.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    for s in &pi2.sources {
        for seg in s.target.segments() {
            if seg.lo == seg.hi {
                acc += seg.width * dist_to_support(&pieces, s.x, seg.lo);
            } else {
                let mut cuts = vec![seg.lo, seg.hi];
                for p in &pieces {
                    for v in [p.ylo, p.yhi] {
                        if v > seg.lo && v < seg.hi {
                            cuts.push(v);
                        }
                    }
                }
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let density = seg.width / (seg.hi - seg.lo);
                for w in cuts.windows(2) {
                    let d0 = dist_to_support(&pieces, s.x, w[0]);
                    let d1 = dist_to_support(&pieces, s.x, w[1]);
                    acc += density * (w[1] - w[0]) * 0.5 * (d0 + d1);
                }
            }
        }
    }
    acc
}
