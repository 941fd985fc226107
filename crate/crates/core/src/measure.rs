//! Finite positive measures on the line, stored as piecewise-linear quantile
//! functions.
//!
//! A [`Measure`] is an ordered list of segments `(width, lo, hi)`: the
//! segment occupies quantile width `width` and maps it linearly from value
//! `lo` to `hi`. `lo == hi` encodes an atom, `lo < hi` a uniform block.
//! The quantile function is the left-continuous generalized inverse of the
//! cdf, and every operation below (moments, potential, Kantorovich distance,
//! quantile surgery) is evaluated in closed form on this representation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{MASS_TOL, MERGE_TOL};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("quantile level {t} outside ]0, {mass}]")]
    QuantileOutOfRange { t: f64, mass: f64 },
    #[error("quantile range ]{s}, {t}] invalid for mass {mass}")]
    BadQuantileRange { s: f64, t: f64, mass: f64 },
    #[error("mass mismatch: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("invalid segment: width {width}, values [{lo}, {hi}]")]
    InvalidSegment { width: f64, lo: f64, hi: f64 },
    #[error("segments not monotone: value {0} followed by {1}")]
    NotMonotone(f64, f64),
}

/// One linear piece of a quantile function: mass `width` spread linearly
/// over values `[lo, hi]` (an atom when `lo == hi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub width: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Segment {
    fn slope(&self) -> f64 {
        (self.hi - self.lo) / self.width
    }

    fn is_atom(&self) -> bool {
        self.lo == self.hi
    }
}

/// A finite positive measure in canonical piecewise-linear quantile form.
/// The empty segment list is the zero-measure sentinel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measure {
    segments: Vec<Segment>,
}

/// Mass, barycenter and raw (unnormalized) second moment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub barycenter: f64,
    pub second_moment: f64,
}

/// Spatial view of a measure: atoms `(position, mass)` and uniform blocks
/// `(a, b, density)`, sorted and non-overlapping. This is the form in which
/// measures add pointwise, which quantile functions do not.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialForm {
    pub atoms: Vec<(f64, f64)>,
    pub blocks: Vec<(f64, f64, f64)>,
}

fn canonicalize(mut segs: Vec<Segment>) -> Vec<Segment> {
    // widths at the 1e-14 scale are rounding dust from quantile surgery
    // (two orders below every mass tolerance), not content
    segs.retain(|s| s.width > 1e-14);
    // a sloped piece whose value range is below the merge tolerance is an
    // atom; leaving it sloped would give it an unbounded (or, after
    // rounding, negative) spatial density
    for s in &mut segs {
        let scale = s.lo.abs().max(s.hi.abs()).max(1.0);
        if s.lo != s.hi && (s.hi - s.lo).abs() <= MERGE_TOL * scale {
            let x = 0.5 * (s.lo + s.hi);
            s.lo = x;
            s.hi = x;
        }
    }
    let mut out: Vec<Segment> = Vec::with_capacity(segs.len());
    for s in segs {
        if let Some(last) = out.last_mut() {
            let contiguous = (s.lo - last.hi).abs() <= MERGE_TOL;
            if contiguous && last.is_atom() && s.is_atom() {
                let w = last.width + s.width;
                let x = (last.width * last.lo + s.width * s.lo) / w;
                *last = Segment { width: w, lo: x, hi: x };
                continue;
            }
            if contiguous && !last.is_atom() && !s.is_atom() {
                let s1 = last.slope();
                let s2 = s.slope();
                if (s1 - s2).abs() <= MERGE_TOL * s1.abs().max(s2.abs()).max(1.0) {
                    last.width += s.width;
                    last.hi = s.hi;
                    continue;
                }
            }
        }
        out.push(s);
    }
    out
}

impl Measure {
    /// The zero measure (distinct sentinel; most operations reject it).
    pub fn zero() -> Self {
        Measure { segments: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn from_segments(segments: Vec<Segment>) -> Result<Self, MeasureError> {
        for s in &segments {
            if !(s.width > 0.0) || !s.width.is_finite() || !s.lo.is_finite() || !s.hi.is_finite() {
                return Err(MeasureError::InvalidSegment { width: s.width, lo: s.lo, hi: s.hi });
            }
            if s.lo > s.hi {
                return Err(MeasureError::InvalidSegment { width: s.width, lo: s.lo, hi: s.hi });
            }
        }
        for pair in segments.windows(2) {
            // allow tiny floating slack, reject genuine violations
            if pair[1].lo < pair[0].hi - 1e-9 {
                return Err(MeasureError::NotMonotone(pair[0].hi, pair[1].lo));
            }
        }
        let mut segments = segments;
        for i in 1..segments.len() {
            if segments[i].lo < segments[i - 1].hi {
                segments[i].lo = segments[i - 1].hi;
            }
        }
        Ok(Measure { segments: canonicalize(segments) })
    }

    /// Internal constructor for segment lists that are monotone by
    /// construction (quantile surgery results).
    pub(crate) fn from_raw(segments: Vec<Segment>) -> Self {
        Measure { segments: canonicalize(segments) }
    }

    pub fn dirac(x: f64, mass: f64) -> Self {
        assert!(mass > 0.0, "atom mass must be positive");
        Measure { segments: vec![Segment { width: mass, lo: x, hi: x }] }
    }

    /// Uniform block of total mass `mass` on `[a, b]`.
    pub fn uniform(a: f64, b: f64, mass: f64) -> Self {
        assert!(a < b && mass > 0.0, "uniform block needs a < b and positive mass");
        Measure { segments: vec![Segment { width: mass, lo: a, hi: b }] }
    }

    /// Lebesgue measure restricted to `[a, b]` (mass `b - a`).
    pub fn lebesgue(a: f64, b: f64) -> Self {
        Measure::uniform(a, b, b - a)
    }

    pub fn from_atoms(atoms: &[(f64, f64)]) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.iter().copied().filter(|&(_, w)| w > 0.0).collect();
        if atoms.is_empty() {
            return Measure::zero();
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Measure::from_raw(
            atoms
                .into_iter()
                .map(|(x, w)| Segment { width: w, lo: x, hi: x })
                .collect(),
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn mass(&self) -> f64 {
        self.segments.iter().map(|s| s.width).sum()
    }

    pub fn is_atomic(&self) -> bool {
        !self.is_zero() && self.segments.iter().all(|s| s.is_atom())
    }

    /// Atoms `(position, mass)` of a purely atomic measure.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        if self.is_atomic() {
            Some(self.segments.iter().map(|s| (s.lo, s.width)).collect())
        } else {
            None
        }
    }

    /// Smallest and largest support points.
    pub fn support_bounds(&self) -> Option<(f64, f64)> {
        let first = self.segments.first()?;
        let last = self.segments.last()?;
        Some((first.lo, last.hi))
    }

    /// Left-continuous quantile function `G(t)` for `t` in `]0, mass]`.
    pub fn quantile(&self, t: f64) -> Result<f64, MeasureError> {
        let m = self.mass();
        if !(t > 0.0) || t > m + MASS_TOL {
            return Err(MeasureError::QuantileOutOfRange { t, mass: m });
        }
        let t = t.min(m);
        let mut cum = 0.0;
        for s in &self.segments {
            if t <= cum + s.width {
                return Ok(s.lo + (s.hi - s.lo) * (t - cum) / s.width);
            }
            cum += s.width;
        }
        Ok(self.segments.last().map(|s| s.hi).unwrap_or(0.0))
    }

    /// Right-continuous cdf `F(x) = mu(]-inf, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.segments {
            if s.hi <= x {
                acc += s.width;
            } else if s.lo <= x && !s.is_atom() {
                acc += s.width * (x - s.lo) / (s.hi - s.lo);
            }
        }
        acc
    }

    /// Mass, barycenter, and raw second moment, exact per segment.
    pub fn moments(&self) -> Moments {
        let mut mass = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for s in &self.segments {
            mass += s.width;
            first += s.width * 0.5 * (s.lo + s.hi);
            second += s.width * (s.lo * s.lo + s.lo * s.hi + s.hi * s.hi) / 3.0;
        }
        let barycenter = if mass > 0.0 { first / mass } else { 0.0 };
        Moments { mass, barycenter, second_moment: second }
    }

    pub fn barycenter(&self) -> f64 {
        self.moments().barycenter
    }

    /// First moment of the restriction to quantile levels `]s, t]`.
    pub(crate) fn first_moment_between(&self, s: f64, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut cum = 0.0;
        for seg in &self.segments {
            let a = s.max(cum);
            let b = t.min(cum + seg.width);
            if b > a {
                let va = seg.lo + (seg.hi - seg.lo) * (a - cum) / seg.width;
                let vb = seg.lo + (seg.hi - seg.lo) * (b - cum) / seg.width;
                acc += (b - a) * 0.5 * (va + vb);
            }
            cum += seg.width;
            if cum >= t {
                break;
            }
        }
        acc
    }

    /// Potential function `u(x) = ∫ |s - x| dmu(s)`, exact piecewise form.
    pub fn potential(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.segments {
            if s.is_atom() {
                acc += s.width * (s.lo - x).abs();
            } else {
                let a = s.lo - x;
                let b = s.hi - x;
                acc += if a >= 0.0 || b <= 0.0 {
                    s.width * 0.5 * (a.abs() + b.abs())
                } else {
                    s.width * (a * a + b * b) / (2.0 * (b - a))
                };
            }
        }
        acc
    }

    /// Call function `C(k) = ∫ (x - k)_+ dmu(x)`, exact.
    pub fn call_value(&self, k: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.segments {
            if s.hi <= k {
                continue;
            }
            if s.lo >= k {
                acc += s.width * (0.5 * (s.lo + s.hi) - k);
            } else {
                // part of the sloped piece above k
                let frac = (s.hi - k) / (s.hi - s.lo);
                acc += s.width * frac * 0.5 * (s.hi - k);
            }
        }
        acc
    }

    /// Put function `P(k) = ∫ (k - x)_+ dmu(x)`, exact.
    pub fn put_value(&self, k: f64) -> f64 {
        let mut acc = 0.0;
        for s in &self.segments {
            if s.lo >= k {
                break;
            }
            if s.hi <= k {
                acc += s.width * (k - 0.5 * (s.lo + s.hi));
            } else {
                let frac = (k - s.lo) / (s.hi - s.lo);
                acc += s.width * frac * 0.5 * (k - s.lo);
            }
        }
        acc
    }

    /// Kantorovich distance `W = ∫ |G_mu - G_nu| dλ` for equal-mass measures.
    pub fn wasserstein(&self, other: &Measure) -> Result<f64, MeasureError> {
        let (ma, mb) = (self.mass(), other.mass());
        if (ma - mb).abs() > MASS_TOL {
            return Err(MeasureError::MassMismatch(ma, mb));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        let mut acc = 0.0;
        for p in merged_pieces(self, other) {
            let d0 = p.a0 - p.b0;
            let d1 = p.a1 - p.b1;
            acc += if d0 * d1 >= 0.0 {
                p.len * 0.5 * (d0.abs() + d1.abs())
            } else {
                p.len * (d0 * d0 + d1 * d1) / (2.0 * (d0.abs() + d1.abs()))
            };
        }
        Ok(acc)
    }

    /// The push-forward `(G)_# λ` restricted to quantile levels `]s, t]`.
    pub fn restrict_quantile(&self, s: f64, t: f64) -> Result<Measure, MeasureError> {
        let m = self.mass();
        if !(s >= -MASS_TOL) || s >= t || t > m + MASS_TOL {
            return Err(MeasureError::BadQuantileRange { s, t, mass: m });
        }
        let s = s.max(0.0);
        let t = t.min(m);
        let mut out = Vec::new();
        let mut cum = 0.0;
        for seg in &self.segments {
            let a = s.max(cum);
            let b = t.min(cum + seg.width);
            if b > a {
                let va = seg.lo + (seg.hi - seg.lo) * (a - cum) / seg.width;
                let vb = seg.lo + (seg.hi - seg.lo) * (b - cum) / seg.width;
                out.push(Segment { width: b - a, lo: va, hi: vb });
            }
            cum += seg.width;
            if cum >= t {
                break;
            }
        }
        Ok(Measure::from_raw(out))
    }

    /// The rightmost submeasure of mass `alpha` (top quantile slice).
    pub fn rightmost_submeasure(&self, alpha: f64) -> Result<Measure, MeasureError> {
        let m = self.mass();
        if !(alpha > 0.0) || alpha > m + MASS_TOL {
            return Err(MeasureError::BadQuantileRange { s: m - alpha, t: m, mass: m });
        }
        let alpha = alpha.min(m);
        self.restrict_quantile(m - alpha, m)
    }

    /// The leftmost submeasure of mass `alpha` (bottom quantile slice).
    pub fn leftmost_submeasure(&self, alpha: f64) -> Result<Measure, MeasureError> {
        let m = self.mass();
        if !(alpha > 0.0) || alpha > m + MASS_TOL {
            return Err(MeasureError::BadQuantileRange { s: 0.0, t: alpha, mass: m });
        }
        self.restrict_quantile(0.0, alpha.min(m))
    }

    /// Quantile-pointwise maximum and minimum (`Top`, `Down`) of two
    /// equal-mass measures.
    pub fn top_down(&self, other: &Measure) -> Result<(Measure, Measure), MeasureError> {
        let (ma, mb) = (self.mass(), other.mass());
        if (ma - mb).abs() > MASS_TOL {
            return Err(MeasureError::MassMismatch(ma, mb));
        }
        let mut top = Vec::new();
        let mut down = Vec::new();
        let mut emit = |len: f64, a0: f64, a1: f64, b0: f64, b1: f64| {
            if len <= 0.0 {
                return;
            }
            top.push(Segment { width: len, lo: a0.max(b0), hi: a1.max(b1) });
            down.push(Segment { width: len, lo: a0.min(b0), hi: a1.min(b1) });
        };
        for p in merged_pieces(self, other) {
            let d0 = p.a0 - p.b0;
            let d1 = p.a1 - p.b1;
            if d0 * d1 < 0.0 {
                // split at the crossing so max/min stay linear per piece
                let f = d0.abs() / (d0.abs() + d1.abs());
                let am = p.a0 + (p.a1 - p.a0) * f;
                let bm = p.b0 + (p.b1 - p.b0) * f;
                let vm = 0.5 * (am + bm);
                emit(p.len * f, p.a0, vm, p.b0, vm);
                emit(p.len * (1.0 - f), vm, p.a1, vm, p.b1);
            } else {
                emit(p.len, p.a0, p.a1, p.b0, p.b1);
            }
        }
        // maxima/minima of nondecreasing functions are nondecreasing; clean
        // up floating noise at the refined breakpoints
        for segs in [&mut top, &mut down] {
            for i in 0..segs.len() {
                if i > 0 && segs[i].lo < segs[i - 1].hi {
                    segs[i].lo = segs[i - 1].hi;
                }
                if segs[i].hi < segs[i].lo {
                    segs[i].hi = segs[i].lo;
                }
            }
        }
        Ok((Measure::from_raw(top), Measure::from_raw(down)))
    }

    /// Positive linear combination; routes through the spatial form because
    /// quantile functions do not add pointwise. All-zero input yields the
    /// zero sentinel.
    pub fn combine(terms: &[(f64, &Measure)]) -> Measure {
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
        for &(c, mu) in terms {
            assert!(c >= 0.0, "combine coefficients must be non-negative");
            if c == 0.0 {
                continue;
            }
            let sf = mu.spatial_form();
            atoms.extend(sf.atoms.iter().map(|&(x, w)| (x, c * w)));
            blocks.extend(sf.blocks.iter().map(|&(a, b, d)| (a, b, c * d)));
        }
        SpatialForm { atoms, blocks }.normalized().to_measure()
    }

    pub fn add(&self, other: &Measure) -> Measure {
        Measure::combine(&[(1.0, self), (1.0, other)])
    }

    pub fn scale(&self, c: f64) -> Measure {
        Measure::combine(&[(c, self)])
    }

    /// `2^k` equal-mass atoms at the dyadic-block conditional means. The
    /// result is below `self` in the convex order and increases with `k`.
    pub fn atomize_dyadic(&self, k: u32) -> Measure {
        if self.is_zero() {
            return Measure::zero();
        }
        let n = 1usize << k;
        let m = self.mass();
        let w = m / n as f64;
        let mut segs = Vec::with_capacity(n);
        for i in 0..n {
            let s = i as f64 * w;
            let t = (i + 1) as f64 * w;
            let x = self.first_moment_between(s, t) / w;
            segs.push(Segment { width: w, lo: x, hi: x });
        }
        Measure::from_raw(segs)
    }

    /// Lossless conversion to the spatial (atoms + blocks) view.
    pub fn spatial_form(&self) -> SpatialForm {
        let mut atoms = Vec::new();
        let mut blocks = Vec::new();
        for s in &self.segments {
            if s.is_atom() {
                atoms.push((s.lo, s.width));
            } else {
                blocks.push((s.lo, s.hi, s.width / (s.hi - s.lo)));
            }
        }
        SpatialForm { atoms, blocks }
    }
}

/// One interval of the common quantile refinement of two measures: both
/// quantile functions are linear on it, with the given endpoint values.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MergedPiece {
    pub len: f64,
    pub a0: f64,
    pub a1: f64,
    pub b0: f64,
    pub b1: f64,
}

/// Merge-join of two segment lists along the mass axis. Walking the
/// segments structurally (rather than re-evaluating quantiles at merged
/// levels) keeps one-ulp disagreements between the cumulative sums from
/// landing lookups on the wrong side of a breakpoint.
pub(crate) fn merged_pieces(a: &Measure, b: &Measure) -> Vec<MergedPiece> {
    let sa = a.segments();
    let sb = b.segments();
    let value = |s: &Segment, consumed: f64| s.lo + (s.hi - s.lo) * consumed / s.width;
    let mut out = Vec::with_capacity(sa.len() + sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let (mut ca, mut cb) = (0.0f64, 0.0f64);
    while i < sa.len() && j < sb.len() {
        let ra = sa[i].width - ca;
        let rb = sb[j].width - cb;
        let step = ra.min(rb);
        if step > 0.0 {
            out.push(MergedPiece {
                len: step,
                a0: value(&sa[i], ca),
                a1: value(&sa[i], ca + step),
                b0: value(&sb[j], cb),
                b1: value(&sb[j], cb + step),
            });
        }
        ca += step;
        cb += step;
        // absorb only rounding-level leftovers so the two mass axes stay
        // aligned; larger remainders become genuine pieces next round
        if sa[i].width - ca <= 1e-15 * sa[i].width.max(1.0) {
            i += 1;
            ca = 0.0;
        }
        if j < sb.len() && sb[j].width - cb <= 1e-15 * sb[j].width.max(1.0) {
            j += 1;
            cb = 0.0;
        }
    }
    out
}

impl SpatialForm {
    pub fn total_mass(&self) -> f64 {
        let a: f64 = self.atoms.iter().map(|&(_, w)| w).sum();
        let b: f64 = self.blocks.iter().map(|&(a, b, d)| d * (b - a)).sum();
        a + b
    }

    /// Sorts and refines so atoms at equal positions are merged and blocks
    /// are non-overlapping on a common grid.
    pub fn normalized(&self) -> SpatialForm {
        let mut atoms: Vec<(f64, f64)> =
            self.atoms.iter().copied().filter(|&(_, w)| w > 0.0).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (x, w) in atoms {
            if let Some(last) = merged.last_mut() {
                if (x - last.0).abs() <= MERGE_TOL {
                    let tw = last.1 + w;
                    last.0 = (last.0 * last.1 + x * w) / tw;
                    last.1 = tw;
                    continue;
                }
            }
            merged.push((x, w));
        }
        let blocks: Vec<(f64, f64, f64)> =
            self.blocks.iter().copied().filter(|&(a, b, d)| d > 0.0 && b > a).collect();
        let mut cuts: Vec<f64> = Vec::new();
        for &(a, b, _) in &blocks {
            cuts.push(a);
            cuts.push(b);
        }
        for &(x, _) in &merged {
            cuts.push(x);
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
        let mut cells: Vec<(f64, f64, f64)> = Vec::new();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let d: f64 = blocks
                .iter()
                .filter(|&&(ba, bb, _)| ba <= mid && mid < bb)
                .map(|&(_, _, d)| d)
                .sum();
            if d > 0.0 {
                cells.push((a, b, d));
            }
        }
        SpatialForm { atoms: merged, blocks: cells }
    }

    /// Back to quantile form; inverse of [`Measure::spatial_form`] up to
    /// canonicalization. Expects a normalized form (whose cells never
    /// strictly contain an atom).
    pub fn to_measure(&self) -> Measure {
        let mut segs: Vec<Segment> = Vec::new();
        let mut ai = 0;
        let mut bi = 0;
        while ai < self.atoms.len() || bi < self.blocks.len() {
            let take_atom = match (self.atoms.get(ai), self.blocks.get(bi)) {
                (Some(&(x, _)), Some(&(a, _, _))) => x <= a + MERGE_TOL,
                (Some(_), None) => true,
                (None, _) => false,
            };
            if take_atom {
                let (x, w) = self.atoms[ai];
                segs.push(Segment { width: w, lo: x, hi: x });
                ai += 1;
            } else {
                let (a, b, d) = self.blocks[bi];
                segs.push(Segment { width: d * (b - a), lo: a, hi: b });
                bi += 1;
            }
        }
        Measure::from_raw(segs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn quantile_identity_on_lebesgue() {
        let mu = Measure::lebesgue(0.0, 1.0);
        close(mu.quantile(0.25).unwrap(), 0.25, 0.0);
    }

    #[test]
    fn quantile_of_atom_is_flat() {
        let mu = Measure::dirac(3.0, 1.0);
        close(mu.quantile(0.7).unwrap(), 3.0, 0.0);
    }

    #[test]
    fn quantile_is_left_continuous_at_jump() {
        let mu = Measure::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        close(mu.quantile(0.5).unwrap(), 0.0, 0.0);
        close(mu.quantile(0.5 + 1e-12).unwrap(), 1.0, 0.0);
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        let mu = Measure::lebesgue(0.0, 1.0);
        assert!(mu.quantile(0.0).is_err());
        assert!(mu.quantile(1.5).is_err());
    }

    #[test]
    fn cdf_counts_atom_at_point() {
        assert_eq!(Measure::dirac(0.0, 1.0).cdf(0.0), 1.0);
        close(Measure::lebesgue(0.0, 2.0).cdf(1.0), 1.0, 1e-15);
        let mixed = Measure::lebesgue(0.0, 1.0).add(&Measure::dirac(1.0, 1.0));
        close(mixed.cdf(1.0), 2.0, 1e-15);
    }

    #[test]
    fn moments_examples() {
        let m = Measure::dirac(2.0, 0.5).moments();
        assert_eq!((m.mass, m.barycenter, m.second_moment), (0.5, 2.0, 2.0));

        let m = Measure::lebesgue(0.0, 1.0).moments();
        close(m.mass, 1.0, 0.0);
        close(m.barycenter, 0.5, 1e-15);
        close(m.second_moment, 1.0 / 3.0, 1e-15);

        // uniform mass 0.5 on [0.25, 0.75]: ∫ x^2 · 2 dx over the window,
        // scaled to mass 0.5, is 0.135416666...
        let m = Measure::lebesgue(0.25, 0.75).moments();
        close(m.mass, 0.5, 0.0);
        close(m.barycenter, 0.5, 1e-15);
        close(m.second_moment, 0.13541666666666666, 1e-15);
    }

    #[test]
    fn potential_examples() {
        let mu = Measure::dirac(0.0, 1.0);
        for x in [-2.0, -0.3, 0.0, 1.7] {
            close(mu.potential(x), x.abs(), 1e-15);
        }
        close(Measure::lebesgue(0.0, 1.0).potential(0.5), 0.25, 1e-15);
        let pm = Measure::from_atoms(&[(-1.0, 0.5), (1.0, 0.5)]);
        close(pm.potential(0.0), 1.0, 1e-15);
    }

    #[test]
    fn wasserstein_examples() {
        let w = Measure::dirac(0.0, 1.0).wasserstein(&Measure::dirac(1.0, 1.0)).unwrap();
        close(w, 1.0, 1e-15);

        // shifted Lebesgue blocks: W equals the shift
        let eps = 1e-3;
        let n = 8.0;
        let w = Measure::lebesgue(0.0, 1.0)
            .wasserstein(&Measure::lebesgue(eps / n, 1.0 + eps / n))
            .unwrap();
        close(w, eps / n, 1e-15);
    }

    #[test]
    fn wasserstein_against_riemann_oracle() {
        // independent oracle: Riemann sum of |G_nu - G_mu| at 1e6 nodes
        let mu = Measure::from_atoms(&[(0.0, 0.5), (2.0, 0.5)]);
        let nu = Measure::uniform(0.0, 2.0, 1.0);
        let n = 1_000_000;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            let g_mu = if t <= 0.5 { 0.0 } else { 2.0 };
            let g_nu = 2.0 * t;
            acc += (g_nu - g_mu).abs() / n as f64;
        }
        close(acc, 0.5, 1e-6);
        close(mu.wasserstein(&nu).unwrap(), 0.5, 1e-12);
    }

    #[test]
    fn wasserstein_rejects_mass_mismatch() {
        let a = Measure::dirac(0.0, 1.0);
        let b = Measure::dirac(0.0, 2.0);
        assert!(matches!(a.wasserstein(&b), Err(MeasureError::MassMismatch(_, _))));
    }

    #[test]
    fn restrict_quantile_examples() {
        let mu = Measure::lebesgue(0.0, 1.0);
        assert_eq!(mu.restrict_quantile(0.25, 0.75).unwrap(), Measure::lebesgue(0.25, 0.75));
        assert_eq!(mu.restrict_quantile(0.0, 1.0).unwrap(), mu);

        let two = Measure::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        let mid = two.restrict_quantile(0.25, 0.75).unwrap();
        assert_eq!(mid, Measure::from_atoms(&[(0.0, 0.25), (1.0, 0.25)]));

        assert!(mu.restrict_quantile(0.75, 0.25).is_err());
    }

    #[test]
    fn rightmost_submeasure_examples() {
        let mu = Measure::lebesgue(0.0, 1.0);
        assert_eq!(mu.rightmost_submeasure(0.5).unwrap(), Measure::lebesgue(0.5, 1.0));
        assert_eq!(mu.rightmost_submeasure(1.0).unwrap(), mu);

        let two = Measure::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]);
        let top = two.rightmost_submeasure(0.75).unwrap();
        assert_eq!(top, Measure::from_atoms(&[(0.0, 0.25), (1.0, 0.5)]));
    }

    #[test]
    fn top_down_atom_example() {
        // Top of (δ0+δ3, δ1+δ2) is δ1+δ3, Down is δ0+δ2
        let mu = Measure::from_atoms(&[(0.0, 1.0), (3.0, 1.0)]);
        let nu = Measure::from_atoms(&[(1.0, 1.0), (2.0, 1.0)]);
        let (top, down) = mu.top_down(&nu).unwrap();
        assert_eq!(top, Measure::from_atoms(&[(1.0, 1.0), (3.0, 1.0)]));
        assert_eq!(down, Measure::from_atoms(&[(0.0, 1.0), (2.0, 1.0)]));
    }

    #[test]
    fn top_down_trivial_cases() {
        let mu = Measure::lebesgue(0.0, 1.0);
        let (top, down) = mu.top_down(&mu).unwrap();
        assert_eq!(top, mu);
        assert_eq!(down, mu);

        let nu = Measure::lebesgue(0.5, 1.5);
        let (top, down) = mu.top_down(&nu).unwrap();
        assert_eq!(top, nu);
        assert_eq!(down, mu);
    }

    #[test]
    fn combine_examples() {
        let a = Measure::combine(&[(1.0, &Measure::dirac(0.0, 1.0)), (1.0, &Measure::dirac(0.0, 1.0))]);
        assert_eq!(a, Measure::dirac(0.0, 2.0));

        let b = Measure::combine(&[(0.5, &Measure::lebesgue(0.0, 1.0))]);
        assert_eq!(b, Measure::uniform(0.0, 1.0, 0.5));

        let c = Measure::combine(&[
            (1.0, &Measure::lebesgue(0.0, 1.0)),
            (1.0, &Measure::dirac(0.5, 1.0)),
        ]);
        close(c.mass(), 2.0, 1e-15);
        // flat quantile piece of width 1 at value 0.5
        let flat: Vec<_> = c.segments().iter().filter(|s| s.lo == s.hi).collect();
        assert_eq!(flat.len(), 1);
        close(flat[0].width, 1.0, 1e-15);
        close(flat[0].lo, 0.5, 1e-15);

        assert!(Measure::combine(&[(0.0, &Measure::dirac(0.0, 1.0))]).is_zero());
    }

    #[test]
    fn atomize_dyadic_examples() {
        let mu = Measure::lebesgue(0.0, 1.0);
        assert_eq!(mu.atomize_dyadic(1), Measure::from_atoms(&[(0.25, 0.5), (0.75, 0.5)]));
        assert_eq!(
            mu.atomize_dyadic(2),
            Measure::from_atoms(&[(0.125, 0.25), (0.375, 0.25), (0.625, 0.25), (0.875, 0.25)])
        );
        assert_eq!(Measure::dirac(5.0, 1.0).atomize_dyadic(3), Measure::dirac(5.0, 1.0));
    }

    #[test]
    fn spatial_form_examples() {
        let mixed = Measure::combine(&[
            (1.0, &Measure::dirac(0.0, 1.0)),
            (1.0, &Measure::lebesgue(0.0, 1.0)),
        ]);
        let sf = mixed.spatial_form();
        assert_eq!(sf.atoms, vec![(0.0, 1.0)]);
        assert_eq!(sf.blocks, vec![(0.0, 1.0, 1.0)]);

        let sf = Measure::lebesgue(0.0, 2.0).spatial_form();
        assert_eq!(sf.blocks, vec![(0.0, 2.0, 1.0)]);
    }

    #[test]
    fn canonical_merge_of_contiguous_pieces() {
        let halves = Measure::from_raw(vec![
            Segment { width: 0.5, lo: 0.0, hi: 0.5 },
            Segment { width: 0.5, lo: 0.5, hi: 1.0 },
        ]);
        assert_eq!(halves, Measure::lebesgue(0.0, 1.0));
        assert_eq!(halves.segments().len(), 1);
    }
}
