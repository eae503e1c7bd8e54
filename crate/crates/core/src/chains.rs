//! The epsilon-chain calculus: chains, basic moves, replayable homotopy
//! certificates, the gap functionals `E` and `D`, and strong chains along
//! discretized paths.
//!
//! A chain at scale `eps` is a point sequence whose consecutive distances are
//! strictly below `eps`. A basic move inserts or removes one point; the
//! endpoints of a chain are fixed as *values*, so a move may touch the first
//! or last slot only when the endpoint values are unchanged (removing a
//! duplicated endpoint, inserting a duplicate next to one).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::FiniteMetricSpace;

/// A scale-tagged point sequence with consecutive distances `< scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub scale: f64,
    pub points: Vec<usize>,
}

impl Chain {
    /// Validate and build a chain.
    pub fn new(space: &FiniteMetricSpace, scale: f64, points: Vec<usize>) -> Result<Chain> {
        if points.is_empty() {
            return Err(Error::EmptyChain);
        }
        for &p in &points {
            space.check_point(p)?;
        }
        for i in 1..points.len() {
            let d = space.d(points[i - 1], points[i]);
            if !(d < scale) {
                return Err(Error::ChainGap { i, dist: d, scale });
            }
        }
        Ok(Chain { scale, points })
    }

    pub fn start(&self) -> usize {
        self.points[0]
    }

    pub fn end(&self) -> usize {
        *self.points.last().unwrap()
    }

    pub fn is_loop(&self) -> bool {
        self.start() == self.end()
    }

    pub fn is_constant(&self) -> bool {
        self.points.len() == 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Re-check validity against a space (used by replay).
    pub fn check(&self, space: &FiniteMetricSpace) -> Result<()> {
        Chain::new(space, self.scale, self.points.clone()).map(|_| ())
    }
}

/// `true` iff the sequence is an epsilon-chain (strict bound).
pub fn is_epsilon_chain(space: &FiniteMetricSpace, points: &[usize], eps: f64) -> Result<bool> {
    if points.is_empty() {
        return Err(Error::EmptyChain);
    }
    for &p in points {
        space.check_point(p)?;
    }
    Ok(points.windows(2).all(|w| space.d(w[0], w[1]) < eps))
}

/// One insertion or removal, with the endpoint values immovable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasicMove {
    Insert { index: usize, point: usize },
    Remove { index: usize },
}

/// Apply a basic move, checking index bounds, endpoint preservation, and
/// the chain bound on the result.
pub fn apply_move(space: &FiniteMetricSpace, chain: &Chain, mv: BasicMove) -> Result<Chain> {
    let mut points = chain.points.clone();
    match mv {
        BasicMove::Insert { index, point } => {
            space.check_point(point)?;
            if index > points.len() {
                return Err(Error::MoveOutOfRange {
                    index,
                    len: points.len(),
                });
            }
            points.insert(index, point);
        }
        BasicMove::Remove { index } => {
            if index >= points.len() {
                return Err(Error::MoveOutOfRange {
                    index,
                    len: points.len(),
                });
            }
            if points.len() == 1 {
                return Err(Error::MoveBreaksEndpoint);
            }
            points.remove(index);
        }
    }
    if points.first() != chain.points.first() || points.last() != chain.points.last() {
        return Err(Error::MoveBreaksEndpoint);
    }
    Chain::new(space, chain.scale, points)
}

/// An auditable epsilon-homotopy: an ordered move list from `source` to
/// `target`. Intermediates are reconstructed (never trusted) by `replay`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomotopyCertificate {
    pub source: Chain,
    pub moves: Vec<BasicMove>,
    pub target: Chain,
}

impl HomotopyCertificate {
    pub fn identity(chain: Chain) -> Self {
        HomotopyCertificate {
            source: chain.clone(),
            moves: Vec::new(),
            target: chain,
        }
    }

    /// Replay every move, checking each intermediate chain; returns the
    /// intermediate chains including source and target.
    pub fn replay(&self, space: &FiniteMetricSpace) -> Result<Vec<Chain>> {
        self.source.check(space).map_err(|e| Error::ReplayFailed {
            step: 0,
            reason: format!("invalid source: {e}"),
        })?;
        let mut out = vec![self.source.clone()];
        let mut current = self.source.clone();
        for (step, &mv) in self.moves.iter().enumerate() {
            current = apply_move(space, &current, mv).map_err(|e| Error::ReplayFailed {
                step,
                reason: e.to_string(),
            })?;
            out.push(current.clone());
        }
        if current != self.target {
            return Err(Error::ReplayFailed {
                step: self.moves.len(),
                reason: "final chain does not match target".into(),
            });
        }
        Ok(out)
    }

    /// Chain two certificates whose endpoints meet.
    pub fn then(mut self, next: HomotopyCertificate) -> Result<HomotopyCertificate> {
        if self.target != next.source {
            return Err(Error::ReplayFailed {
                step: self.moves.len(),
                reason: "certificate composition mismatch".into(),
            });
        }
        self.moves.extend(next.moves);
        self.target = next.target;
        Ok(self)
    }
}

/// `E(chain)`: the minimum slack `scale - d` over the gaps; the scale itself
/// for a one-point chain (empty-min convention).
pub fn e_gap(space: &FiniteMetricSpace, chain: &Chain) -> f64 {
    chain
        .points
        .windows(2)
        .map(|w| chain.scale - space.d(w[0], w[1]))
        .fold(chain.scale, f64::min)
}

/// `D(a, b)`: max positional distance between equally long chains.
pub fn chain_distance(space: &FiniteMetricSpace, a: &Chain, b: &Chain) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok(a.points
        .iter()
        .zip(&b.points)
        .map(|(&x, &y)| space.d(x, y))
        .fold(0.0, f64::max))
}

/// The constructive homotopy between positionally close chains: requires the
/// same endpoints, equal length, and `D(a,b) < E(a)/2`; then for each interior
/// position inserts `b`'s point after `a`'s and removes `a`'s.
pub fn close_chain_certificate(
    space: &FiniteMetricSpace,
    a: &Chain,
    b: &Chain,
) -> Result<HomotopyCertificate> {
    if a.len() != b.len() {
        return Err(Error::ClosePrecondition(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.start() != b.start() || a.end() != b.end() {
        return Err(Error::ClosePrecondition("endpoint mismatch".into()));
    }
    if a.scale != b.scale {
        return Err(Error::ClosePrecondition("scale mismatch".into()));
    }
    let dd = chain_distance(space, a, b)?;
    let e = e_gap(space, a);
    if !(dd < e / 2.0) {
        return Err(Error::ClosePrecondition(format!(
            "D(a,b) = {dd} is not < E(a)/2 = {}",
            e / 2.0
        )));
    }
    let n = a.len();
    let mut moves = Vec::new();
    let mut current = a.clone();
    for i in 1..(n - 1) {
        if current.points[i] == b.points[i] {
            continue;
        }
        let ins = BasicMove::Insert {
            index: i + 1,
            point: b.points[i],
        };
        current = apply_move(space, &current, ins)?;
        moves.push(ins);
        let rem = BasicMove::Remove { index: i };
        current = apply_move(space, &current, rem)?;
        moves.push(rem);
    }
    debug_assert_eq!(current.points, b.points);
    Ok(HomotopyCertificate {
        source: a.clone(),
        moves,
        target: b.clone(),
    })
}

/// Concatenate chains sharing an endpoint and scale (shared point kept once).
pub fn concat(a: &Chain, b: &Chain) -> Result<Chain> {
    if a.scale != b.scale {
        return Err(Error::ScaleMismatch {
            a: a.scale,
            b: b.scale,
        });
    }
    if a.end() != b.start() {
        return Err(Error::ConcatMismatch {
            end: a.end(),
            start: b.start(),
        });
    }
    let mut points = a.points.clone();
    points.extend_from_slice(&b.points[1..]);
    Ok(Chain {
        scale: a.scale,
        points,
    })
}

pub fn reverse(a: &Chain) -> Chain {
    let mut points = a.points.clone();
    points.reverse();
    Chain {
        scale: a.scale,
        points,
    }
}

/// Remove immediate backtracks `x,y,x` and duplicated points until none
/// remain, together with the basic moves that realize the reduction.
pub fn free_reduce_with_certificate(
    space: &FiniteMetricSpace,
    chain: &Chain,
) -> (Chain, Vec<BasicMove>) {
    let mut current = chain.clone();
    let mut moves = Vec::new();
    loop {
        let pts = &current.points;
        let mut mv = None;
        for i in 0..pts.len().saturating_sub(1) {
            if pts[i] == pts[i + 1] {
                mv = Some(BasicMove::Remove { index: i + 1 });
                break;
            }
        }
        if mv.is_none() {
            for i in 0..pts.len().saturating_sub(2) {
                if pts[i] == pts[i + 2] {
                    mv = Some(BasicMove::Remove { index: i + 1 });
                    break;
                }
            }
        }
        match mv {
            Some(m) => {
                current = apply_move(space, &current, m)
                    .expect("free reduction removals only shorten valid gaps");
                moves.push(m);
            }
            None => return (current, moves),
        }
    }
}

/// Free-reduced form of a chain.
pub fn free_reduce(space: &FiniteMetricSpace, chain: &Chain) -> Chain {
    free_reduce_with_certificate(space, chain).0
}

/// A fine point walk standing in for a continuous path; `mesh` is its max
/// consecutive distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<usize>,
    pub mesh: f64,
}

impl Polyline {
    pub fn new(space: &FiniteMetricSpace, points: Vec<usize>) -> Result<Polyline> {
        if points.is_empty() {
            return Err(Error::EmptyChain);
        }
        for &p in &points {
            space.check_point(p)?;
        }
        let mesh = points
            .windows(2)
            .map(|w| space.d(w[0], w[1]))
            .fold(0.0, f64::max);
        Ok(Polyline { points, mesh })
    }
}

/// Greedy extraction of a strong epsilon-chain along a polyline: every
/// skipped polyline point stays strictly within `eps` of both retained
/// neighbours. Requires `mesh <= eps/4`; extends each segment as far as the
/// strong condition holds, leftmost first.
pub fn strong_chain(space: &FiniteMetricSpace, p: &Polyline, eps: f64) -> Result<Chain> {
    if !(p.mesh <= eps / 4.0) {
        return Err(Error::MeshTooCoarse {
            mesh: p.mesh,
            scale: eps,
        });
    }
    let pts = &p.points;
    let mut kept = vec![pts[0]];
    let mut i = 0usize;
    while i + 1 < pts.len() {
        let mut j = i + 1;
        'extend: for cand in (i + 2)..pts.len() {
            if !(space.d(pts[i], pts[cand]) < eps) {
                break 'extend;
            }
            for k in (i + 1)..cand {
                if !(space.d(pts[k], pts[i]) < eps) || !(space.d(pts[k], pts[cand]) < eps) {
                    break 'extend;
                }
            }
            j = cand;
        }
        kept.push(pts[j]);
        i = j;
    }
    Chain::new(space, eps, kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::sample_circle;

    fn c4() -> FiniteMetricSpace {
        sample_circle(4.0, 4).unwrap()
    }

    fn triangle() -> FiniteMetricSpace {
        sample_circle(1.0, 3).unwrap() // all pairwise 1/3
    }

    #[test]
    fn epsilon_chain_checks() {
        let m = c4();
        assert!(is_epsilon_chain(&m, &[0], 0.1).unwrap());
        assert!(is_epsilon_chain(&m, &[0, 1, 2], 1.1).unwrap());
        assert!(!is_epsilon_chain(&m, &[0, 2], 1.5).unwrap());
        assert!(is_epsilon_chain(&m, &[0, 9], 1.0).is_err());
    }

    #[test]
    fn moves_respect_endpoints_and_bound() {
        let m = c4();
        let aba = Chain::new(&m, 1.1, vec![0, 1, 0]).unwrap();
        let aa = apply_move(&m, &aba, BasicMove::Remove { index: 1 }).unwrap();
        assert_eq!(aa.points, vec![0, 0]);
        let a = apply_move(&m, &aa, BasicMove::Remove { index: 1 }).unwrap();
        assert_eq!(a.points, vec![0]);

        let t = triangle();
        let ab = Chain::new(&t, 0.4, vec![0, 1]).unwrap();
        let acb = apply_move(&t, &ab, BasicMove::Insert { index: 1, point: 2 }).unwrap();
        assert_eq!(acb.points, vec![0, 2, 1]);

        let chain = Chain::new(&m, 1.1, vec![0, 1, 2]).unwrap();
        assert!(matches!(
            apply_move(&m, &chain, BasicMove::Remove { index: 1 }),
            Err(Error::ChainGap { .. })
        ));
        assert!(apply_move(&m, &chain, BasicMove::Remove { index: 0 }).is_err());
    }

    #[test]
    fn e_gap_values() {
        let m = c4();
        let single = Chain::new(&m, 0.5, vec![0]).unwrap();
        assert_eq!(e_gap(&m, &single), 0.5);
        let chain = Chain::new(&m, 1.1, vec![0, 1, 2]).unwrap();
        assert!((e_gap(&m, &chain) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn chain_distance_values() {
        let m = c4();
        let a = Chain::new(&m, 1.1, vec![0, 1, 0]).unwrap();
        assert_eq!(chain_distance(&m, &a, &a).unwrap(), 0.0);
        let c = Chain::new(&m, 2.5, vec![0, 1, 0]).unwrap();
        let d = Chain::new(&m, 2.5, vec![0, 2, 0]).unwrap();
        assert_eq!(chain_distance(&m, &c, &d).unwrap(), 1.0);
        let short = Chain::new(&m, 2.5, vec![0, 1]).unwrap();
        assert!(chain_distance(&m, &c, &short).is_err());
    }

    #[test]
    fn close_chain_identity_is_empty() {
        let m = sample_circle(8.0, 32).unwrap();
        let pts: Vec<usize> = (0..32).chain([0]).collect();
        let a = Chain::new(&m, 0.6, pts).unwrap();
        let cert = close_chain_certificate(&m, &a, &a).unwrap();
        assert!(cert.moves.is_empty());
        cert.replay(&m).unwrap();
    }

    #[test]
    fn close_chain_shift_example() {
        // On the 32-sample circle the one-step shift violates the bound.
        let m32 = sample_circle(8.0, 32).unwrap();
        let a: Vec<usize> = (0..32).chain([0]).collect();
        let mut b = a.clone();
        for p in b.iter_mut().take(32).skip(1) {
            *p = (*p + 1) % 32;
        }
        let ca = Chain::new(&m32, 0.6, a).unwrap();
        let cb = Chain::new(&m32, 0.6, b).unwrap();
        assert!(matches!(
            close_chain_certificate(&m32, &ca, &cb),
            Err(Error::ClosePrecondition(_))
        ));

        // On the 64-sample circle it satisfies D < E/2 and the schedule works.
        let m64 = sample_circle(8.0, 64).unwrap();
        let a: Vec<usize> = (0..64).chain([0]).collect();
        let mut b = a.clone();
        for p in b.iter_mut().take(64).skip(1) {
            *p = (*p + 1) % 64;
        }
        let ca = Chain::new(&m64, 0.6, a).unwrap();
        let cb = Chain::new(&m64, 0.6, b).unwrap();
        let cert = close_chain_certificate(&m64, &ca, &cb).unwrap();
        let states = cert.replay(&m64).unwrap();
        assert_eq!(states.last().unwrap().points, cb.points);
    }

    #[test]
    fn concat_reverse_laws() {
        let m = c4();
        let a = Chain::new(&m, 1.1, vec![0, 1]).unwrap();
        let b = Chain::new(&m, 1.1, vec![1, 2]).unwrap();
        assert_eq!(concat(&a, &b).unwrap().points, vec![0, 1, 2]);
        assert_eq!(reverse(&reverse(&a)).points, a.points);
        assert!(concat(&b, &a).is_err());
    }

    #[test]
    fn free_reduction() {
        let t = triangle();
        let m = 0.4;
        let c = Chain::new(&t, m, vec![0, 1, 0, 2]).unwrap();
        let (r, moves) = free_reduce_with_certificate(&t, &c);
        assert_eq!(r.points, vec![0, 2]);
        let cert = HomotopyCertificate {
            source: c,
            moves,
            target: r.clone(),
        };
        cert.replay(&t).unwrap();

        let fixed = Chain::new(&t, m, vec![0, 1, 2]).unwrap();
        assert_eq!(free_reduce(&t, &fixed).points, vec![0, 1, 2]);

        let looped = Chain::new(&t, m, vec![0, 1, 0]).unwrap();
        assert_eq!(free_reduce(&t, &looped).points, vec![0]);
    }

    #[test]
    fn strong_chain_greedy() {
        let m = sample_circle(3.0, 48).unwrap();
        let pts: Vec<usize> = (0..48).chain([0]).collect();
        let p = Polyline::new(&m, pts).unwrap();
        let eps = 0.8;
        let s = strong_chain(&m, &p, eps).unwrap();
        assert!(s.is_loop());
        assert!(s.len() < 10);
        for w in s.points.windows(2) {
            assert!(m.d(w[0], w[1]) < eps);
        }
        // mesh too coarse
        assert!(matches!(
            strong_chain(&m, &p, 0.125),
            Err(Error::MeshTooCoarse { .. })
        ));
        // a two-point polyline comes back unchanged; with more points the
        // mesh bound always allows skipping the middle of a short segment
        let sparse = Polyline::new(&m, vec![0, 4]).unwrap();
        assert_eq!(strong_chain(&m, &sparse, 1.0).unwrap().points, vec![0, 4]);
        let three = Polyline::new(&m, vec![0, 2, 4]).unwrap();
        assert_eq!(strong_chain(&m, &three, 0.5).unwrap().points, vec![0, 4]);
    }
}
