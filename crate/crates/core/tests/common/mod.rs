//! Shared corpus builders for the integration suites.
#![allow(dead_code)]

use covspec::chains::Chain;
use covspec::fixtures::SplitRng;
use covspec::rips::{scale_set, ScalePoint, ScaleSet};
use covspec::spaces::{sample_circle, validate_metric, wedge, FiniteMetricSpace};

/// Random points in the unit square, Euclidean metric.
pub fn random_space(n: usize, seed: u64) -> FiniteMetricSpace {
    covspec::fixtures::random_euclidean_space(n, seed)
}

/// Small structured + random spaces up to `max_n` points.
pub fn small_corpus(max_n: usize, seeds: std::ops::Range<u64>) -> Vec<FiniteMetricSpace> {
    let mut out = Vec::new();
    out.push(sample_circle(4.0, 4).unwrap());
    out.push(sample_circle(1.0, 3).unwrap());
    if max_n >= 6 {
        out.push(sample_circle(3.0, 6).unwrap());
    }
    if max_n >= 7 {
        let a = sample_circle(1.0, 4).unwrap();
        let b = sample_circle(2.0, 4).unwrap();
        out.push(wedge(&a, &b, 0, 0).unwrap());
    }
    for seed in seeds {
        let n = 3 + (seed as usize % (max_n - 2));
        out.push(random_space(n, seed * 7919 + 13));
    }
    out
}

/// A two-point space for degenerate cases.
pub fn segment() -> FiniteMetricSpace {
    validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
}

/// A random loop valid at the scale point: a bounded random walk over the
/// Rips graph closed by a breadth-first path home. None when the base point
/// is isolated at this scale.
pub fn random_loop(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    rng: &mut SplitRng,
    max_steps: usize,
) -> Option<Chain> {
    let n = space.n();
    let base = rng.below(n);
    let neighbors = |p: usize| -> Vec<usize> {
        (0..n)
            .filter(|&q| scales.is_edge(space, sp, p, q))
            .collect()
    };
    if neighbors(base).is_empty() {
        return None;
    }
    let mut points = vec![base];
    let mut cur = base;
    for _ in 0..(2 + rng.below(max_steps.max(1))) {
        let nb = neighbors(cur);
        if nb.is_empty() {
            break;
        }
        cur = nb[rng.below(nb.len())];
        points.push(cur);
    }
    // close the loop along a shortest hop path
    if cur != base {
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[cur] = true;
        let mut queue = std::collections::VecDeque::from([cur]);
        while let Some(x) = queue.pop_front() {
            if x == base {
                break;
            }
            for y in neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if !seen[base] {
            return None;
        }
        let mut back = vec![base];
        let mut walk = base;
        while prev[walk] != usize::MAX {
            walk = prev[walk];
            back.push(walk);
        }
        // `back` runs base -> ... -> cur; append reversed tail (skip cur)
        back.reverse();
        points.extend_from_slice(&back[1..]);
    }
    let eps = scales.chain_scale(sp).ok()?;
    Chain::new(space, eps, points).ok()
}

/// Every scale point of a space in filtration order.
pub fn all_scale_points(space: &FiniteMetricSpace) -> (ScaleSet, Vec<ScalePoint>) {
    let scales = scale_set(space);
    let points = scales.points();
    (scales, points)
}
