//! Peacocks (measure families non-decreasing in the convex order), their
//! curtain-transition discretizations, transition-matrix composition,
//! generator estimation, the limit semigroup ODE, and seeded path sampling.

mod sample;

pub use sample::{empirical_marginal, jump_statistics, sample_paths, JumpStatistics, PathSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curtain::{self, Coupling, CurtainError};
use crate::measure::{Measure, MeasureError};
use crate::orders;

#[derive(Debug, Error)]
pub enum PeacockError {
    #[error("time {t} outside scenario domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("grid scenario has no marginal at time {t} (interpolation refused)")]
    GridTimeMissing { t: f64 },
    #[error("operation requires a finite-state scenario")]
    NotFiniteScenario,
    #[error("marginals at {s} and {t} are not in convex order")]
    NotOrdered { s: f64, t: f64 },
    #[error("invalid partition: {0}")]
    BadPartition(String),
    #[error("state spaces do not line up: {0}")]
    StateMismatch(String),
    #[error("curve weights must stay positive (a_{index}({t}) = {value})")]
    BadWeight { index: usize, t: f64, value: f64 },
    #[error("sampling is not supported for this scenario: {0}")]
    UnsupportedSampling(String),
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error(transparent)]
    Curtain(#[from] CurtainError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// Polynomial trajectory and weight of one finite-support state,
/// coefficients in ascending degree.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

impl Curve {
    pub fn x_at(&self, t: f64) -> f64 {
        horner(&self.x, t)
    }

    pub fn a_at(&self, t: f64) -> f64 {
        horner(&self.a, t)
    }
}

/// Piecewise-uniform approximation of the stocked density
/// `(-2x)^{-3/2} dx` on `[-e^2/2, -1/2]`, built once on a fixed grid of
/// equal-mass cells so that the settled parts at different times are exact
/// restrictions of one another.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StockingModel {
    pub level: usize,
    /// Cells `(ylo, yhi, mass)`, ascending in position.
    cells: Vec<(f64, f64, f64)>,
}

impl StockingModel {
    pub fn new(level: usize) -> StockingModel {
        let level = level.max(2);
        let total = 1.0 - (-1.0f64).exp();
        let w = total / level as f64;
        // mass of the density on [y, -1/2] is 1 - (-2y)^{-1/2}; invert at
        // the equal-mass levels
        let edge = |mass_from_top: f64| -> f64 { -0.5 / ((1.0 - mass_from_top) * (1.0 - mass_from_top)) };
        let mut cells = Vec::with_capacity(level);
        for j in 0..level {
            let top = edge(j as f64 * w);
            let bot = edge((j + 1) as f64 * w);
            cells.push((bot, top, w));
        }
        cells.reverse();
        StockingModel { level, cells }
    }

    /// Barrier below which mass settles and freezes.
    pub fn barrier(&self) -> f64 {
        -0.5
    }

    fn frontier(t: f64) -> f64 {
        -0.5 * (2.0 * t).exp()
    }

    /// Settled blocks at time `t`: the fixed cells restricted to
    /// `(frontier(t), -1/2]`.
    fn settled_blocks(&self, t: f64) -> Vec<(f64, f64, f64)> {
        let a = Self::frontier(t);
        let mut out = Vec::new();
        for &(lo, hi, mass) in &self.cells {
            if hi <= a {
                continue;
            }
            if lo >= a {
                out.push((lo, hi, mass));
            } else {
                let frac = (hi - a) / (hi - lo);
                if frac > 1e-15 {
                    out.push((a, hi, mass * frac));
                }
            }
        }
        out
    }

    pub fn settled_mass(&self, t: f64) -> f64 {
        self.settled_blocks(t).iter().map(|&(_, _, m)| m).sum()
    }

    /// Upper (still moving) uniform block: true width `e^t`, centered so
    /// the total barycenter stays at zero.
    pub fn upper_block(&self, t: f64) -> (f64, f64, f64) {
        let blocks = self.settled_blocks(t);
        let m1: f64 = blocks.iter().map(|&(_, _, m)| m).sum();
        let fm: f64 = blocks.iter().map(|&(lo, hi, m)| m * 0.5 * (lo + hi)).sum();
        let mass = 1.0 - m1;
        let center = -fm / mass;
        let half = 0.5 * t.exp();
        (center - half, center + half, mass)
    }

    pub fn marginal(&self, t: f64) -> Measure {
        let mut parts: Vec<Measure> = self
            .settled_blocks(t)
            .into_iter()
            .map(|(lo, hi, m)| Measure::uniform(lo, hi, m))
            .collect();
        let (lo, hi, m) = self.upper_block(t);
        parts.push(Measure::uniform(lo, hi, m));
        let terms: Vec<(f64, &Measure)> = parts.iter().map(|p| (1.0, p)).collect();
        Measure::combine(&terms)
    }

    /// The just-settled mass between times `s < t`, as a measure (used to
    /// place down-jumps when sampling).
    pub fn increment(&self, s: f64, t: f64) -> Measure {
        let a_t = Self::frontier(t);
        let a_s = Self::frontier(s);
        let mut parts: Vec<Measure> = Vec::new();
        for &(lo, hi, mass) in &self.cells {
            let lo2 = lo.max(a_t);
            let hi2 = hi.min(a_s);
            if hi2 > lo2 + 1e-15 {
                parts.push(Measure::uniform(lo2, hi2, mass * (hi2 - lo2) / (hi - lo)));
            }
        }
        let terms: Vec<(f64, &Measure)> = parts.iter().map(|p| (1.0, p)).collect();
        Measure::combine(&terms)
    }
}

/// A time-indexed marginal family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Peacock {
    /// `mu_t` uniform on `[-e^{2t}/2, e^{2t}/2]`, `t` in `[0, 1]`.
    UniformExp,
    /// Finitely many weighted polynomial trajectories.
    FiniteCurves { curves: Vec<Curve>, domain: (f64, f64) },
    /// The three-trajectory crossing family on `[1/2, 3/2]`: two states
    /// meet at time one, where the limit transition dichotomy lives.
    ThreePoint,
    /// Stocking family: mass accumulates below the barrier and freezes.
    Stocking(StockingModel),
    /// Explicit list of `(t, measure)`; interpolation is refused.
    Grid { times: Vec<f64>, measures: Vec<Measure> },
}

impl Peacock {
    pub fn stocking(level: usize) -> Peacock {
        Peacock::Stocking(StockingModel::new(level))
    }

    pub fn three_point_curves() -> Vec<Curve> {
        vec![
            Curve { x: vec![9.0, -1.0], a: vec![0.5] },
            Curve { x: vec![8.0, 2.0], a: vec![0.25] },
            Curve { x: vec![10.0], a: vec![0.25] },
        ]
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            Peacock::UniformExp | Peacock::Stocking(_) => (0.0, 1.0),
            Peacock::FiniteCurves { domain, .. } => *domain,
            Peacock::ThreePoint => (0.5, 1.5),
            Peacock::Grid { times, .. } => (
                times.first().copied().unwrap_or(0.0),
                times.last().copied().unwrap_or(0.0),
            ),
        }
    }

    fn check_domain(&self, t: f64) -> Result<(), PeacockError> {
        let (lo, hi) = self.domain();
        if t < lo - 1e-12 || t > hi + 1e-12 {
            return Err(PeacockError::OutOfDomain { t, lo, hi });
        }
        Ok(())
    }

    fn curves(&self) -> Option<Vec<Curve>> {
        match self {
            Peacock::FiniteCurves { curves, .. } => Some(curves.clone()),
            Peacock::ThreePoint => Some(Peacock::three_point_curves()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Peacock::FiniteCurves { .. } | Peacock::ThreePoint)
    }

    /// Marginal law at time `t`. Exact for every scenario except the
    /// stocked density, which is honest to its approximation level. Grid
    /// scenarios only answer at their listed times.
    pub fn marginal(&self, t: f64) -> Result<Measure, PeacockError> {
        self.check_domain(t)?;
        match self {
            Peacock::UniformExp => {
                let half = 0.5 * (2.0 * t).exp();
                Ok(Measure::uniform(-half, half, 1.0))
            }
            Peacock::FiniteCurves { curves, .. } => finite_marginal(curves, t),
            Peacock::ThreePoint => finite_marginal(&Peacock::three_point_curves(), t),
            Peacock::Stocking(model) => Ok(model.marginal(t)),
            Peacock::Grid { times, measures } => times
                .iter()
                .position(|&u| (u - t).abs() <= 1e-9)
                .map(|i| measures[i].clone())
                .ok_or(PeacockError::GridTimeMissing { t }),
        }
    }

    /// Checks the defining property (non-decreasing in the convex order)
    /// along a validation grid; reports the first failing pair.
    pub fn validate(&self, grid: &[f64]) -> Result<(), PeacockError> {
        if let Some(curves) = self.curves() {
            for &t in grid {
                for (i, c) in curves.iter().enumerate() {
                    let a = c.a_at(t);
                    if a <= 0.0 {
                        return Err(PeacockError::BadWeight { index: i, t, value: a });
                    }
                }
            }
        }
        for w in grid.windows(2) {
            let (s, t) = (w[0], w[1]);
            let mu = self.marginal(s)?;
            let nu = self.marginal(t)?;
            if !orders::leq_convex(&mu, &nu) {
                return Err(PeacockError::NotOrdered { s, t });
            }
        }
        Ok(())
    }
}

fn finite_marginal(curves: &[Curve], t: f64) -> Result<Measure, PeacockError> {
    let atoms: Vec<(f64, f64)> = curves.iter().map(|c| (c.x_at(t), c.a_at(t))).collect();
    for (i, &(_, a)) in atoms.iter().enumerate() {
        if a <= 0.0 {
            return Err(PeacockError::BadWeight { index: i, t, value: a });
        }
    }
    Ok(Measure::from_atoms(&atoms))
}

/// Interval partition of the scenario time domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    times: Vec<f64>,
}

impl Partition {
    pub fn from_times(times: Vec<f64>) -> Result<Partition, PeacockError> {
        if times.len() < 2 {
            return Err(PeacockError::BadPartition("need at least two times".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PeacockError::BadPartition("times must strictly increase".into()));
        }
        Ok(Partition { times })
    }

    /// Evenly spaced partition of `[lo, hi]` with step at most `mesh`.
    pub fn uniform(domain: (f64, f64), mesh: f64) -> Result<Partition, PeacockError> {
        let (lo, hi) = domain;
        if !(mesh > 0.0) || hi <= lo {
            return Err(PeacockError::BadPartition(format!("mesh {mesh} on [{lo}, {hi}]")));
        }
        let q = ((hi - lo) / mesh).ceil().max(1.0) as usize;
        let times = (0..=q).map(|k| lo + (hi - lo) * k as f64 / q as f64).collect();
        Ok(Partition { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn mesh(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Row-stochastic transition matrix between the atom grids of two
/// marginals. Rectangular across state mergers (coinciding trajectories).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub from_states: Vec<f64>,
    pub to_states: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub span: (f64, f64),
}

impl TransitionMatrix {
    pub fn identity(states: Vec<f64>, t: f64) -> TransitionMatrix {
        let n = states.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        TransitionMatrix { from_states: states.clone(), to_states: states, rows, span: (t, t) }
    }

    fn clamp_rows(&mut self) {
        for r in &mut self.rows {
            for v in r.iter_mut() {
                if *v < 0.0 {
                    debug_assert!(*v > -1e-9, "stochastic entry {v}");
                    *v = 0.0;
                }
            }
            let s: f64 = r.iter().sum();
            if s > 0.0 && (s - 1.0).abs() > 1e-14 {
                for v in r.iter_mut() {
                    *v /= s;
                }
            }
        }
    }

    pub fn compose(&self, other: &TransitionMatrix) -> Result<TransitionMatrix, PeacockError> {
        if self.to_states.len() != other.from_states.len()
            || self
                .to_states
                .iter()
                .zip(&other.from_states)
                .any(|(a, b)| (a - b).abs() > 1e-6)
        {
            return Err(PeacockError::StateMismatch(format!(
                "{:?} vs {:?}",
                self.to_states, other.from_states
            )));
        }
        let n = self.rows.len();
        let k = other.to_states.len();
        let mut rows = vec![vec![0.0; k]; n];
        for i in 0..n {
            for (l, &v) in self.rows[i].iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                for j in 0..k {
                    rows[i][j] += v * other.rows[l][j];
                }
            }
        }
        let mut out = TransitionMatrix {
            from_states: self.from_states.clone(),
            to_states: other.to_states.clone(),
            rows,
            span: (self.span.0, other.span.1),
        };
        out.clamp_rows();
        Ok(out)
    }

    /// Row distribution pushed forward: `p^T M`.
    pub fn push_distribution(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.to_states.len()];
        for (i, &w) in p.iter().enumerate() {
            for (j, &v) in self.rows[i].iter().enumerate() {
                out[j] += w * v;
            }
        }
        out
    }

    /// Max-row-sum distance to another matrix of the same shape.
    pub fn inf_norm_diff(&self, other: &TransitionMatrix) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Entrywise finite-difference rate matrix `(M~ - I) / h`.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub states: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub t: f64,
    pub h: f64,
}

const POS_MATCH_TOL: f64 = 1e-9;

/// Row-stochastic matrix of a curtain coupling between atomic marginals,
/// states being the atom positions in ascending order.
fn step_matrix(pi: &Coupling, nu: &Measure, s: f64, t: f64) -> Result<TransitionMatrix, PeacockError> {
    let to: Vec<(f64, f64)> = nu.atoms().ok_or(PeacockError::NotFiniteScenario)?;
    let to_states: Vec<f64> = to.iter().map(|&(y, _)| y).collect();
    let mut rows = Vec::with_capacity(pi.sources.len());
    for src in &pi.sources {
        let mut row = vec![0.0; to_states.len()];
        let atoms = src.target.atoms().ok_or_else(|| {
            PeacockError::StateMismatch("curtain target of an atomic marginal must be atomic".into())
        })?;
        for (y, w) in atoms {
            let scale = 1.0 + y.abs();
            let j = to_states
                .iter()
                .position(|&p| (p - y).abs() <= POS_MATCH_TOL * scale)
                .ok_or_else(|| {
                    PeacockError::StateMismatch(format!("target value {y} is not a state"))
                })?;
            row[j] += w / src.weight;
        }
        rows.push(row);
    }
    let mut out = TransitionMatrix {
        from_states: pi.sources.iter().map(|s| s.x).collect(),
        to_states,
        rows,
        span: (s, t),
    };
    out.clamp_rows();
    Ok(out)
}

/// Curtain coupling between atomic marginals plus its stochastic matrix.
pub(crate) fn atomic_step(
    mu: &Measure,
    nu: &Measure,
    s: f64,
    t: f64,
) -> Result<(Coupling, TransitionMatrix), PeacockError> {
    let pi = curtain::curtain_atomic(mu, nu)?;
    let m = step_matrix(&pi, nu, s, t)?;
    Ok((pi, m))
}

/// Per-step transition: the curtain coupling between the marginals at `s`
/// and `t`, plus the row-stochastic trajectory-state matrix for
/// finite-support scenarios.
pub fn transition(
    p: &Peacock,
    s: f64,
    t: f64,
) -> Result<(Coupling, Option<TransitionMatrix>), PeacockError> {
    p.check_domain(s)?;
    p.check_domain(t)?;
    if t < s {
        return Err(PeacockError::BadPartition(format!("reversed step {s} > {t}")));
    }
    let mu = p.marginal(s)?;
    let nu = p.marginal(t)?;
    if t - s <= 1e-15 {
        return Ok(if let Some(atoms) = mu.atoms() {
            let states: Vec<f64> = atoms.iter().map(|&(x, _)| x).collect();
            (Coupling::identity(&mu)?, Some(TransitionMatrix::identity(states, s)))
        } else {
            (Coupling::identity(&mu.atomize_dyadic(10))?, None)
        });
    }
    if p.is_finite() {
        let (pi, m) = atomic_step(&mu, &nu, s, t)?;
        Ok((pi, Some(m)))
    } else if mu.is_atomic() && nu.is_atomic() {
        Ok((curtain::curtain_atomic(&mu, &nu)?, None))
    } else {
        Ok((curtain::curtain_general(&mu, &nu, 10)?, None))
    }
}

/// Affine one-step kernel of the uniform-exponential scenario, in original
/// coordinates: jump down with probability `(1 - e^{-2(t-s)})/2`, otherwise
/// follow the expanding affine up-branch.
#[derive(Debug, Clone, Copy)]
pub struct UniformStepKernel {
    pub p_down: f64,
    pub up_slope: f64,
    pub up_intercept: f64,
    pub down_slope: f64,
    pub down_intercept: f64,
}

impl UniformStepKernel {
    pub fn up(&self, x: f64) -> f64 {
        self.up_slope * x + self.up_intercept
    }

    pub fn down(&self, x: f64) -> f64 {
        self.down_slope * x + self.down_intercept
    }
}

pub fn uniform_exp_kernel(s: f64, t: f64) -> UniformStepKernel {
    let h = t - s;
    let a = 0.5 * ((2.0 * h).exp() - 1.0);
    let half_s = 0.5 * (2.0 * s).exp();
    UniformStepKernel {
        p_down: a / (1.0 + 2.0 * a),
        up_slope: 1.0 + a,
        up_intercept: a * half_s,
        down_slope: -a,
        down_intercept: -a * half_s - half_s,
    }
}

/// Ordered product of the per-step stochastic matrices along a partition
/// (finite-support scenarios only).
pub fn chain_compose(p: &Peacock, part: &Partition) -> Result<TransitionMatrix, PeacockError> {
    if !p.is_finite() {
        return Err(PeacockError::NotFiniteScenario);
    }
    let times = part.times();
    let mut acc: Option<TransitionMatrix> = None;
    for w in times.windows(2) {
        let (_, m) = transition(p, w[0], w[1])?;
        let m = m.expect("finite scenario produces a matrix");
        acc = Some(match acc {
            None => m,
            Some(prev) => prev.compose(&m)?,
        });
    }
    Ok(acc.expect("partition has at least one step"))
}

/// Finite-difference estimate of the generator at time `t`:
/// `(M~(t, t+h) - id) / h`. Requires the states not to merge on `[t, t+h]`.
pub fn estimate_generator(p: &Peacock, t: f64, h: f64) -> Result<RateMatrix, PeacockError> {
    if !(h > 0.0) {
        return Err(PeacockError::BadStep(h));
    }
    p.check_domain(t + h)?;
    let (_, m) = transition(p, t, t + h)?;
    let m = m.ok_or(PeacockError::NotFiniteScenario)?;
    let n = m.from_states.len();
    if m.to_states.len() != n {
        return Err(PeacockError::StateMismatch(
            "states merge inside the difference step".into(),
        ));
    }
    let rows = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (m.rows[i][j] - if i == j { 1.0 } else { 0.0 }) / h)
                .collect()
        })
        .collect();
    Ok(RateMatrix { states: m.from_states, rows, t, h })
}

/// Explicit first-order integration of `dA/du = A N(u)` with row clamping
/// and renormalization after every step. `gen` supplies the rate matrix at
/// a given time.
pub fn integrate_matrix_ode(
    n: usize,
    s: f64,
    t: f64,
    step: f64,
    mut gen: impl FnMut(f64) -> Result<Vec<Vec<f64>>, PeacockError>,
) -> Result<Vec<Vec<f64>>, PeacockError> {
    if !(step > 0.0) {
        return Err(PeacockError::BadStep(step));
    }
    let mut a: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let mut u = s;
    while u < t - 1e-12 {
        let du = step.min(t - u);
        let g = gen(u)?;
        let mut next = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in 0..n {
                let v = a[i][l];
                if v == 0.0 {
                    continue;
                }
                next[i][l] += v;
                for j in 0..n {
                    next[i][j] += v * du * g[l][j];
                }
            }
        }
        for r in &mut next {
            for v in r.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
            let sum: f64 = r.iter().sum();
            if sum > 0.0 {
                for v in r.iter_mut() {
                    *v /= sum;
                }
            }
        }
        a = next;
        u += du;
    }
    Ok(a)
}

/// Integrates the limit semigroup ODE between `s` and `t`, evaluating the
/// generator by finite differences at `h = step/4`.
pub fn integrate_semigroup(
    p: &Peacock,
    s: f64,
    t: f64,
    step: f64,
) -> Result<TransitionMatrix, PeacockError> {
    if !p.is_finite() {
        return Err(PeacockError::NotFiniteScenario);
    }
    let mu = p.marginal(s)?;
    let from: Vec<f64> =
        mu.atoms().ok_or(PeacockError::NotFiniteScenario)?.iter().map(|&(x, _)| x).collect();
    let n = from.len();
    let (_, hi) = p.domain();
    let rows = integrate_matrix_ode(n, s, t, step, |u| {
        let h = (step / 4.0).min(hi - u);
        if h <= 1e-12 {
            // the window has no room left; a zero generator skips the step
            return Ok(vec![vec![0.0; n]; n]);
        }
        Ok(estimate_generator(p, u, h)?.rows)
    })?;
    let nu = p.marginal(t)?;
    let to: Vec<f64> =
        nu.atoms().ok_or(PeacockError::NotFiniteScenario)?.iter().map(|&(x, _)| x).collect();
    if to.len() != n {
        return Err(PeacockError::StateMismatch("states merge at the end time".into()));
    }
    Ok(TransitionMatrix { from_states: from, to_states: to, rows, span: (s, t) })
}

/// Markov-composition defect across `t_split`: the gap between the
/// one-step transition over `[t-h, t+h]` and the two-step composition
/// through `t`, in max-row-sum norm.
pub fn markov_defect(p: &Peacock, t_split: f64, h: f64) -> Result<f64, PeacockError> {
    let (_, one) = transition(p, t_split - h, t_split + h)?;
    let one = one.ok_or(PeacockError::NotFiniteScenario)?;
    let (_, first) = transition(p, t_split - h, t_split)?;
    let (_, second) = transition(p, t_split, t_split + h)?;
    let through = first
        .ok_or(PeacockError::NotFiniteScenario)?
        .compose(&second.ok_or(PeacockError::NotFiniteScenario)?)?;
    Ok(one.inf_norm_diff(&through))
}
