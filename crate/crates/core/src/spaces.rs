//! Finite metric spaces: validation, ingestion of weighted graphs, and
//! generators for the standard sample geometries (circles, products, wedges,
//! Hawaiian truncations).
//!
//! Distances are rounded to 12 decimal digits on ingestion so that the scale
//! set of a space is reproducible under exact `f64` comparison. All
//! constructors produce spaces that pass [`validate_metric`].

use std::collections::BinaryHeap;

use crate::error::{Error, MetricViolation, Result};

/// Default cap on the number of points any constructor will produce.
pub const DEFAULT_SIZE_CAP: usize = 4096;

/// Round to 12 decimal digits. Scale-set membership and all distance
/// equality tests rely on this canonicalization.
pub fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Rounding each distance to 12 digits can perturb a triple by up to three
/// half-quanta; triangle-inequality checks tolerate exactly that.
const TRIANGLE_SLACK: f64 = 2e-12;

/// A validated finite metric space with a distinguished base point.
///
/// Immutable after construction; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    n: usize,
    dist: Vec<f64>,
    labels: Option<Vec<String>>,
    basepoint: usize,
}

impl FiniteMetricSpace {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn basepoint(&self) -> usize {
        self.basepoint
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(ls) if i < ls.len() => ls[i].clone(),
            _ => i.to_string(),
        }
    }

    pub fn diameter(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                m = m.max(self.d(i, j));
            }
        }
        m
    }

    pub fn with_basepoint(mut self, basepoint: usize) -> Result<Self> {
        if basepoint >= self.n {
            return Err(Error::PointOutOfRange {
                index: basepoint,
                n: self.n,
            });
        }
        self.basepoint = basepoint;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn check_point(&self, i: usize) -> Result<()> {
        if i < self.n {
            Ok(())
        } else {
            Err(Error::PointOutOfRange {
                index: i,
                n: self.n,
            })
        }
    }

    /// Row-major copy of the distance matrix.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.d(i, j)).collect())
            .collect()
    }
}

/// Validate a square matrix as a metric and build the space, or report every
/// violated pair/triple.
pub fn validate_metric(
    matrix: &[Vec<f64>],
) -> std::result::Result<FiniteMetricSpace, Vec<MetricViolation>> {
    let n = matrix.len();
    let mut violations = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != n {
            violations.push(MetricViolation::NonSquare {
                rows: n,
                cols: row.len(),
            });
            return Err(violations);
        }
        let _ = i;
    }
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..n {
            let v = matrix[i][j];
            if !v.is_finite() {
                violations.push(MetricViolation::NotFinite { i, j });
            } else {
                dist[i * n + j] = round12(v);
            }
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }
    for i in 0..n {
        if dist[i * n + i] != 0.0 {
            violations.push(MetricViolation::NonzeroDiagonal {
                i,
                value: dist[i * n + i],
            });
        }
        for j in (i + 1)..n {
            let dij = dist[i * n + j];
            let dji = dist[j * n + i];
            if dij < 0.0 {
                violations.push(MetricViolation::Negative { i, j, value: dij });
            }
            if dij != dji {
                violations.push(MetricViolation::Asymmetric { i, j });
            }
            if dij == 0.0 && dji == 0.0 {
                violations.push(MetricViolation::ZeroOffDiagonal { i, j });
            }
        }
    }
    if !violations.is_empty() {
        return Err(violations);
    }
    check_triangles(n, &dist, &mut violations);
    if violations.is_empty() {
        Ok(FiniteMetricSpace {
            n,
            dist,
            labels: None,
            basepoint: 0,
        })
    } else {
        Err(violations)
    }
}

#[cfg(feature = "parallel")]
fn check_triangles(n: usize, dist: &[f64], violations: &mut Vec<MetricViolation>) {
    use rayon::prelude::*;
    let mut found: Vec<MetricViolation> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut local = Vec::new();
            for i in 0..n {
                for k in 0..n {
                    let excess = dist[i * n + k] - dist[i * n + j] - dist[j * n + k];
                    if excess > TRIANGLE_SLACK {
                        local.push(MetricViolation::Triangle { i, j, k, excess });
                    }
                }
            }
            local
        })
        .collect();
    found.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    violations.extend(found);
}

#[cfg(not(feature = "parallel"))]
fn check_triangles(n: usize, dist: &[f64], violations: &mut Vec<MetricViolation>) {
    let mut found = Vec::new();
    for j in 0..n {
        for i in 0..n {
            for k in 0..n {
                let excess = dist[i * n + k] - dist[i * n + j] - dist[j * n + k];
                if excess > TRIANGLE_SLACK {
                    found.push(MetricViolation::Triangle { i, j, k, excess });
                }
            }
        }
    }
    found.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    violations.extend(found);
}

fn from_rounded(n: usize, dist: Vec<f64>, basepoint: usize) -> FiniteMetricSpace {
    debug_assert!({
        let rows: Vec<Vec<f64>> = (0..n).map(|i| dist[i * n..(i + 1) * n].to_vec()).collect();
        validate_metric(&rows).is_ok()
    });
    FiniteMetricSpace {
        n,
        dist,
        labels: None,
        basepoint,
    }
}

/// `n` evenly spaced points on a geodesic circle of circumference `r`.
pub fn sample_circle(r: f64, n: usize) -> Result<FiniteMetricSpace> {
    sample_circle_capped(r, n, DEFAULT_SIZE_CAP)
}

pub fn sample_circle_capped(r: f64, n: usize, cap: usize) -> Result<FiniteMetricSpace> {
    if n < 3 {
        return Err(Error::SizeCap { n, cap: 3 });
    }
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Document(format!(
            "circumference must be positive, got {r}"
        )));
    }
    let step = r / n as f64;
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let gap = i.abs_diff(j);
            let arc = gap.min(n - gap);
            dist[i * n + j] = round12(step * arc as f64);
        }
    }
    Ok(from_rounded(n, dist, 0))
}

/// Metric product with the l2 combination of factor distances; the base
/// point is the pair of factor base points.
pub fn product_space(a: &FiniteMetricSpace, b: &FiniteMetricSpace) -> Result<FiniteMetricSpace> {
    product_space_capped(a, b, DEFAULT_SIZE_CAP)
}

pub fn product_space_capped(
    a: &FiniteMetricSpace,
    b: &FiniteMetricSpace,
    cap: usize,
) -> Result<FiniteMetricSpace> {
    let n =
        a.n.checked_mul(b.n)
            .ok_or(Error::SizeCap { n: usize::MAX, cap })?;
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    let nb = b.n;
    let mut dist = vec![0.0; n * n];
    for a1 in 0..a.n {
        for b1 in 0..b.n {
            for a2 in 0..a.n {
                for b2 in 0..b.n {
                    let da = a.d(a1, a2);
                    let db = b.d(b1, b2);
                    dist[(a1 * nb + b1) * n + (a2 * nb + b2)] = round12((da * da + db * db).sqrt());
                }
            }
        }
    }
    Ok(from_rounded(n, dist, a.basepoint * nb + b.basepoint))
}

/// Glue `a0 in A` to `b0 in B`; cross-factor distances run through the wedge
/// point. The wedge point keeps index `a0` and becomes the base point.
pub fn wedge(
    a: &FiniteMetricSpace,
    b: &FiniteMetricSpace,
    a0: usize,
    b0: usize,
) -> Result<FiniteMetricSpace> {
    wedge_capped(a, b, a0, b0, DEFAULT_SIZE_CAP)
}

pub fn wedge_capped(
    a: &FiniteMetricSpace,
    b: &FiniteMetricSpace,
    a0: usize,
    b0: usize,
    cap: usize,
) -> Result<FiniteMetricSpace> {
    a.check_point(a0)?;
    b.check_point(b0)?;
    let n = a.n + b.n - 1;
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    // B points other than b0 are appended after all of A.
    let b_index = |bi: usize| -> usize {
        if bi < b0 {
            a.n + bi
        } else {
            a.n + bi - 1
        }
    };
    let mut dist = vec![0.0; n * n];
    for i in 0..a.n {
        for j in 0..a.n {
            dist[i * n + j] = a.d(i, j);
        }
    }
    for bi in 0..b.n {
        if bi == b0 {
            continue;
        }
        let i = b_index(bi);
        for bj in 0..b.n {
            if bj == b0 {
                continue;
            }
            let j = b_index(bj);
            dist[i * n + j] = b.d(bi, bj);
        }
        // through the wedge point
        dist[i * n + a0] = b.d(bi, b0);
        dist[a0 * n + i] = b.d(bi, b0);
        for aj in 0..a.n {
            if aj == a0 {
                continue;
            }
            let v = round12(a.d(aj, a0) + b.d(b0, bi));
            dist[i * n + aj] = v;
            dist[aj * n + i] = v;
        }
    }
    Ok(from_rounded(n, dist, a0))
}

/// Wedge of circles of circumferences 3/2, 3/4, ..., 3/2^k at a common point.
pub fn hawaiian_truncation(k: usize, n_per_circle: usize) -> Result<FiniteMetricSpace> {
    hawaiian_truncation_capped(k, n_per_circle, DEFAULT_SIZE_CAP)
}

pub fn hawaiian_truncation_capped(
    k: usize,
    n_per_circle: usize,
    cap: usize,
) -> Result<FiniteMetricSpace> {
    if k < 1 {
        return Err(Error::Document("hawaiian truncation needs k >= 1".into()));
    }
    let mut acc = sample_circle_capped(3.0 / 2.0, n_per_circle, cap)?;
    for m in 2..=k {
        let factor = sample_circle_capped(3.0 / f64::powi(2.0, m as i32), n_per_circle, cap)?;
        acc = wedge_capped(&acc, &factor, 0, 0, cap)?;
    }
    Ok(acc)
}

/// A weighted undirected graph used to ingest geodesic-space skeletons.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl MetricGraph {
    pub fn validate(&self) -> Result<()> {
        for &(u, v, len) in &self.edges {
            if u >= self.vertices || v >= self.vertices {
                return Err(Error::BadGraphEdge {
                    u,
                    v,
                    reason: "vertex out of range".into(),
                });
            }
            if u == v {
                return Err(Error::BadGraphEdge {
                    u,
                    v,
                    reason: "self loop".into(),
                });
            }
            if !(len > 0.0) || !len.is_finite() {
                return Err(Error::BadGraphEdge {
                    u,
                    v,
                    reason: format!("non-positive length {len}"),
                });
            }
        }
        // connectivity
        if self.vertices == 0 {
            return Err(Error::GraphDisconnected);
        }
        let mut adj = vec![Vec::new(); self.vertices];
        for &(u, v, _) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            Ok(())
        } else {
            Err(Error::GraphDisconnected)
        }
    }
}

/// Subdivide every edge into segments of length at most `h` and take
/// all-pairs shortest-path distances.
pub fn graph_to_space(g: &MetricGraph, h: f64) -> Result<FiniteMetricSpace> {
    graph_to_space_capped(g, h, DEFAULT_SIZE_CAP)
}

pub fn graph_to_space_capped(g: &MetricGraph, h: f64, cap: usize) -> Result<FiniteMetricSpace> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Document(format!("mesh must be positive, got {h}")));
    }
    g.validate()?;
    let mut n = g.vertices;
    let mut segs: Vec<(usize, usize, f64)> = Vec::new();
    for &(u, v, len) in &g.edges {
        let segments = (len / h).ceil().max(1.0) as usize;
        let seg_len = len / segments as f64;
        let mut prev = u;
        for _ in 1..segments {
            let mid = n;
            n += 1;
            if n > cap {
                return Err(Error::SizeCap { n, cap });
            }
            segs.push((prev, mid, seg_len));
            prev = mid;
        }
        segs.push((prev, v, seg_len));
    }
    if n > cap {
        return Err(Error::SizeCap { n, cap });
    }
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(u, v, len) in &segs {
        adj[u].push((v, len));
        adj[v].push((u, len));
    }
    // Dijkstra from every source.
    let mut dist = vec![f64::INFINITY; n * n];
    for src in 0..n {
        let row = &mut dist[src * n..(src + 1) * n];
        row[src] = 0.0;
        let mut heap: BinaryHeap<(std::cmp::Reverse<u64>, usize)> = BinaryHeap::new();
        heap.push((std::cmp::Reverse(0), src));
        let mut done = vec![false; n];
        while let Some((std::cmp::Reverse(bits), u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let du = f64::from_bits(bits);
            for &(v, len) in &adj[u] {
                let cand = du + len;
                if cand < row[v] {
                    row[v] = cand;
                    heap.push((std::cmp::Reverse(cand.to_bits()), v));
                }
            }
        }
        if row.iter().any(|d| !d.is_finite()) {
            return Err(Error::GraphDisconnected);
        }
    }
    for v in dist.iter_mut() {
        *v = round12(*v);
    }
    // Symmetrize: per-source Dijkstra can disagree in the last ulp before rounding.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = dist[i * n + j].min(dist[j * n + i]);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    Ok(from_rounded(n, dist, 0))
}
