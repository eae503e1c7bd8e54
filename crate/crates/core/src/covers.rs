//! Materialized covers at a scale point: vertices are (point, chain-class)
//! pairs discovered by breadth-first lifting from the base point.
//!
//! Class identification is exact when coset enumeration of the scale group
//! closes (classes are group elements); otherwise classes are canonical
//! words (free reduction plus a fixed relator-shortening pass), which can
//! only over-split, and the ball is marked incomplete.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::chains::Chain;
use crate::coset::{enumerate_trivial, ClosedTable};
use crate::error::{Error, Result};
use crate::homotopy::{Budget, Decision};
use crate::persistence::{cycle_to_loop, h1_transitions};
use crate::rips::{presentation, scale_set, Presentation, ScalePoint, ScaleSet, Word};
use crate::spaces::FiniteMetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CoverVertex {
    pub base: usize,
    pub class: u32,
}

#[derive(Debug, Clone)]
pub struct CoverBall {
    pub sp: ScalePoint,
    pub vertices: Vec<CoverVertex>,
    /// Edges between vertex indices, with base edge lengths.
    pub edges: Vec<(usize, usize, f64)>,
    /// Index of (basepoint, identity).
    pub center: usize,
    /// Hop radius used for the breadth-first expansion.
    pub radius: usize,
    pub complete: bool,
    pres: Presentation,
    table: Option<ClosedTable>,
    /// Canonical word per class id (approximate mode); identity for class 0.
    class_words: Vec<Word>,
    lookup: HashMap<(usize, u32), usize>,
}

/// A deck transformation of a complete cover: a loop class with its vertex
/// permutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeckElement {
    pub word: Word,
    pub class: u32,
    pub permutation: Vec<usize>,
}

/// One relator-guided shortening pass to a fixed point: any factor longer
/// than half a relator is replaced by the inverse of the complement. Not
/// confluent in general; used only for the over-approximating class ids.
fn canonical_word(word: &Word, relators: &[Word]) -> Word {
    let mut w = word.free_reduce();
    'outer: loop {
        for rel in relators {
            let r = rel.0.len();
            if r == 0 {
                continue;
            }
            // cyclic rotations of the relator and its inverse
            let mut variants = Vec::with_capacity(2 * r);
            for rot in 0..r {
                let mut v: Vec<i32> = rel.0[rot..].to_vec();
                v.extend_from_slice(&rel.0[..rot]);
                variants.push(v.clone());
                let inv: Vec<i32> = v.iter().rev().map(|&x| -x).collect();
                variants.push(inv);
            }
            let half = r / 2 + 1;
            for v in &variants {
                if v.len() < half {
                    continue;
                }
                let factor = &v[..half];
                if let Some(pos) = find_factor(&w.0, factor) {
                    // replace factor by inverse of the complement
                    let complement = &v[half..];
                    let mut next = w.0[..pos].to_vec();
                    next.extend(complement.iter().rev().map(|&x| -x));
                    next.extend_from_slice(&w.0[pos + half..]);
                    let next = Word(next).free_reduce();
                    if next.0.len() < w.0.len() {
                        w = next;
                        continue 'outer;
                    }
                }
            }
        }
        return w;
    }
}

fn find_factor(haystack: &[i32], needle: &[i32]) -> Option<usize> {
    if needle.len() > haystack.len() {
        return None;
    }
    (0..=(haystack.len() - needle.len())).find(|&i| &haystack[i..i + needle.len()] == needle)
}

/// Build a cover ball at a scale point by lifting edges breadth-first from
/// the base point, out to `radius` hops, bounded by `budget.max_states`
/// vertices. Exact class identification is attempted first with
/// `budget.max_coset_rows`.
pub fn build_cover(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    radius: usize,
    budget: &Budget,
) -> Result<CoverBall> {
    let pres = presentation(space, scales, sp, space.basepoint())?;
    let table = enumerate_trivial(pres.n_generators(), &pres.relators, budget.max_coset_rows);
    let n = space.n();
    let letter_of = |p: usize, q: usize| -> i32 {
        let key = (p.min(q), p.max(q));
        match pres.generators.binary_search(&key) {
            Ok(i) => {
                if p < q {
                    (i + 1) as i32
                } else {
                    -((i + 1) as i32)
                }
            }
            Err(_) => 0,
        }
    };

    let mut class_words: Vec<Word> = vec![Word::identity()];
    let mut class_ids: HashMap<Word, u32> = HashMap::new();
    class_ids.insert(Word::identity(), 0);

    let step_class = |class: u32,
                      letter: i32,
                      class_words: &mut Vec<Word>,
                      class_ids: &mut HashMap<Word, u32>|
     -> u32 {
        match &table {
            Some(t) => {
                if letter == 0 {
                    class
                } else {
                    t.trace(class, &Word(vec![letter]))
                }
            }
            None => {
                let mut w = class_words[class as usize].clone();
                if letter != 0 {
                    w.0.push(letter);
                }
                let canon = canonical_word(&w, &pres.relators);
                match class_ids.get(&canon) {
                    Some(&id) => id,
                    None => {
                        let id = class_words.len() as u32;
                        class_words.push(canon.clone());
                        class_ids.insert(canon, id);
                        id
                    }
                }
            }
        }
    };

    let start = CoverVertex {
        base: space.basepoint(),
        class: 0,
    };
    let mut vertices = vec![start];
    let mut lookup: HashMap<(usize, u32), usize> = HashMap::new();
    lookup.insert((start.base, 0), 0);
    let mut depth = vec![0usize];
    let mut edge_set: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let mut queue = VecDeque::from([0usize]);
    let mut truncated = false;
    while let Some(vi) = queue.pop_front() {
        if depth[vi] >= radius {
            // unexpanded frontier: the ball may continue beyond
            for q in 0..n {
                if scales.is_edge(space, sp, vertices[vi].base, q) {
                    truncated = true;
                    break;
                }
            }
            continue;
        }
        let CoverVertex { base: p, class } = vertices[vi];
        for q in 0..n {
            if !scales.is_edge(space, sp, p, q) {
                continue;
            }
            let next_class = step_class(class, letter_of(p, q), &mut class_words, &mut class_ids);
            let key = (q, next_class);
            let wi = match lookup.get(&key) {
                Some(&wi) => wi,
                None => {
                    if vertices.len() >= budget.max_states {
                        return Err(Error::CoverBudget);
                    }
                    let wi = vertices.len();
                    vertices.push(CoverVertex {
                        base: q,
                        class: next_class,
                    });
                    depth.push(depth[vi] + 1);
                    lookup.insert(key, wi);
                    queue.push_back(wi);
                    wi
                }
            };
            if vi != wi {
                edge_set.insert((vi.min(wi), vi.max(wi)));
            }
        }
    }
    let mut edges: Vec<(usize, usize, f64)> = edge_set
        .into_iter()
        .map(|(a, b)| {
            let len = space.d(vertices[a].base, vertices[b].base);
            (a, b, len)
        })
        .collect();
    edges.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let complete = table.is_some() && !truncated;
    Ok(CoverBall {
        sp,
        vertices,
        edges,
        center: 0,
        radius,
        complete,
        pres,
        table,
        class_words,
        lookup,
    })
}

impl CoverBall {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Projection to the base space.
    pub fn project(&self, vertex: usize) -> Result<usize> {
        self.vertices
            .get(vertex)
            .map(|v| v.base)
            .ok_or(Error::CoverVertexOutOfRange(vertex))
    }

    pub fn find_vertex(&self, base: usize, class: u32) -> Option<usize> {
        self.lookup.get(&(base, class)).copied()
    }

    /// Group order when the enumeration closed.
    pub fn group_order(&self) -> Option<usize> {
        self.table.as_ref().map(|t| t.order())
    }

    /// All deck transformations of a complete cover (one per group element).
    pub fn deck_elements(&self) -> Result<Vec<DeckElement>> {
        let table = self.table.as_ref().ok_or(Error::IncompleteCover)?;
        if !self.complete {
            return Err(Error::IncompleteCover);
        }
        let mut out = Vec::with_capacity(table.order());
        for g in 0..table.order() as u32 {
            out.push(self.deck_element(&table.reps[g as usize].clone())?);
        }
        Ok(out)
    }

    /// The deck transformation of a loop word: left concatenation on class
    /// ids.
    pub fn deck_element(&self, word: &Word) -> Result<DeckElement> {
        let table = self.table.as_ref().ok_or(Error::IncompleteCover)?;
        if !self.complete {
            return Err(Error::IncompleteCover);
        }
        word.check(self.pres.n_generators())?;
        let g = table.element_of(word);
        let mut permutation = Vec::with_capacity(self.vertices.len());
        for v in &self.vertices {
            let target = table.left_mul(g, v.class);
            let wi = self
                .find_vertex(v.base, target)
                .ok_or(Error::LiftLeftBall)?;
            permutation.push(wi);
        }
        Ok(DeckElement {
            word: word.clone(),
            class: g,
            permutation,
        })
    }

    /// Shortest-path distances from one cover vertex (Dijkstra over the
    /// materialized ball).
    fn distances_from(&self, from: usize) -> Vec<f64> {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.vertices.len()];
        for &(a, b, len) in &self.edges {
            adj[a].push((b, len));
            adj[b].push((a, len));
        }
        let mut dist = vec![f64::INFINITY; self.vertices.len()];
        dist[from] = 0.0;
        let mut heap: std::collections::BinaryHeap<(std::cmp::Reverse<u64>, usize)> =
            std::collections::BinaryHeap::new();
        heap.push((std::cmp::Reverse(0u64), from));
        let mut done = vec![false; self.vertices.len()];
        while let Some((std::cmp::Reverse(bits), u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let du = f64::from_bits(bits);
            for &(v, len) in &adj[u] {
                let cand = du + len;
                if cand < dist[v] {
                    dist[v] = cand;
                    heap.push((std::cmp::Reverse(cand.to_bits()), v));
                }
            }
        }
        dist
    }
}

/// Lift a chain edge-by-edge from a cover vertex; closed iff the endpoint
/// returns to the start.
pub fn lift_chain(
    cover: &CoverBall,
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    chain: &Chain,
    start: usize,
) -> Result<(usize, bool)> {
    let sp = cover.sp;
    if start >= cover.vertices.len() {
        return Err(Error::CoverVertexOutOfRange(start));
    }
    if cover.vertices[start].base != chain.start() {
        return Err(Error::NotBasedLoop {
            expected: cover.vertices[start].base,
        });
    }
    let mut cur = start;
    for w in chain.points.windows(2) {
        let (p, q) = (w[0], w[1]);
        if p == q {
            continue;
        }
        if !scales.is_edge(space, sp, p, q) {
            return Err(Error::NotAnEdge {
                u: p.min(q),
                v: p.max(q),
            });
        }
        debug_assert_eq!(cover.vertices[cur].base, p);
        let letter = {
            let key = (p.min(q), p.max(q));
            match cover.pres.generators.binary_search(&key) {
                Ok(i) => {
                    if p < q {
                        (i + 1) as i32
                    } else {
                        -((i + 1) as i32)
                    }
                }
                Err(_) => 0,
            }
        };
        let class = cover.vertices[cur].class;
        let next_class = match &cover.table {
            Some(t) => {
                if letter == 0 {
                    class
                } else {
                    t.trace(class, &Word(vec![letter]))
                }
            }
            None => {
                let mut wv = cover.class_words[class as usize].clone();
                if letter != 0 {
                    wv.0.push(letter);
                }
                let canon = canonical_word(&wv, &cover.pres.relators);
                match cover.class_words.iter().position(|c| *c == canon) {
                    Some(id) => id as u32,
                    None => return Err(Error::LiftLeftBall),
                }
            }
        };
        cur = cover
            .find_vertex(q, next_class)
            .ok_or(Error::LiftLeftBall)?;
    }
    Ok((cur, cur == start))
}

/// Apply a deck transformation to a cover vertex.
pub fn deck_apply(cover: &CoverBall, deck: &DeckElement, vertex: usize) -> Result<usize> {
    if !cover.complete {
        return Err(Error::IncompleteCover);
    }
    deck.permutation
        .get(vertex)
        .copied()
        .ok_or(Error::CoverVertexOutOfRange(vertex))
}

/// Minimum displacement of a deck transformation over the cover ball.
pub fn displacement(cover: &CoverBall, deck: &DeckElement) -> Result<f64> {
    if !cover.complete {
        return Err(Error::IncompleteCover);
    }
    let mut best = f64::INFINITY;
    for v in 0..cover.vertices.len() {
        let gv = deck.permutation[v];
        if gv == v {
            return Ok(0.0);
        }
        let dist = cover.distances_from(v);
        best = best.min(dist[gv]);
    }
    if best.is_infinite() {
        Ok(0.0)
    } else {
        Ok(best)
    }
}

/// One scale transition with its kernel generators and their decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelStep {
    pub scale_index: usize,
    pub value: f64,
    pub kernel_dim: usize,
    pub generators: Vec<KernelGenerator>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelGenerator {
    /// Scale at which the dying class was born.
    pub birth_value: f64,
    pub witness: Chain,
    pub at_decision: Decision,
    pub above_decision: Decision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    pub steps: Vec<KernelStep>,
    /// True when every transition strictly below the smallest nontrivial one
    /// is trivial and there is at least one such trivial step (or no
    /// nontrivial steps at all): the finite-scale analog of the kernels
    /// being eventually constant.
    pub stabilized: bool,
}

/// Kernel generators of every scale transition, with two-sided decisions.
pub fn kernel_report(space: &FiniteMetricSpace, budget: &Budget) -> KernelReport {
    let scales = scale_set(space);
    let transitions = h1_transitions(space);
    let mut steps = Vec::new();
    for step in &transitions.steps {
        let mut generators = Vec::new();
        for death in &step.deaths {
            let (witness, at_decision, above_decision) = crate::spectrum::witness_evidence(
                space,
                &scales,
                step.scale_index,
                step.value,
                death,
                budget,
            );
            generators.push(KernelGenerator {
                birth_value: death.birth_value,
                witness,
                at_decision,
                above_decision,
            });
        }
        steps.push(KernelStep {
            scale_index: step.scale_index,
            value: step.value,
            kernel_dim: step.kernel_dim,
            generators,
        });
    }
    let first_nontrivial = steps
        .iter()
        .find(|s| s.kernel_dim > 0)
        .map(|s| s.scale_index);
    let stabilized = match first_nontrivial {
        None => true,
        Some(k) => k > 1,
    };
    KernelReport { steps, stabilized }
}

/// Witness loop of a death record in a kernel step (exposed for tests).
pub fn witness_loop(
    space: &FiniteMetricSpace,
    value: f64,
    cycle: &[((usize, usize), i64)],
) -> Option<Chain> {
    cycle_to_loop(space, value, cycle, space.basepoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::sample_circle;

    #[test]
    fn triangle_cover_is_base() {
        let t = sample_circle(1.0, 3).unwrap();
        let scales = scale_set(&t);
        let sp = ScalePoint::above(1);
        let cover = build_cover(&t, &scales, sp, 8, &Budget::default()).unwrap();
        assert!(cover.complete);
        assert_eq!(cover.group_order(), Some(1));
        assert_eq!(cover.vertex_count(), 3);
    }

    #[test]
    fn c4_cover_is_a_line_segment_of_squares() {
        let m = sample_circle(4.0, 4).unwrap();
        let scales = scale_set(&m);
        let sp = ScalePoint::above(1);
        let cover = build_cover(&m, &scales, sp, 8, &Budget::default()).unwrap();
        assert!(!cover.complete);
        // universal cover of a 4-cycle is a path: the radius-8 ball holds
        // 2*8 + 1 vertices
        assert_eq!(cover.vertex_count(), 17);

        // essential loop lifts open
        let lp = Chain::new(&m, scales.chain_scale(sp).unwrap(), vec![0, 1, 2, 3, 0]).unwrap();
        let (_, closed) = lift_chain(&cover, &m, &scales, &lp, cover.center).unwrap();
        assert!(!closed);

        // at the coarse scale the cover is the base and the loop closes
        let sp2 = ScalePoint::above(2);
        let cover2 = build_cover(&m, &scales, sp2, 8, &Budget::default()).unwrap();
        assert!(cover2.complete);
        assert_eq!(cover2.vertex_count(), 4);
        let lp2 = Chain::new(&m, scales.chain_scale(sp2).unwrap(), vec![0, 1, 2, 3, 0]).unwrap();
        let (_, closed) = lift_chain(&cover2, &m, &scales, &lp2, cover2.center).unwrap();
        assert!(closed);
    }

    #[test]
    fn constant_chain_lifts_closed() {
        let t = sample_circle(1.0, 3).unwrap();
        let scales = scale_set(&t);
        let sp = ScalePoint::above(1);
        let cover = build_cover(&t, &scales, sp, 4, &Budget::default()).unwrap();
        let c = Chain::new(&t, scales.chain_scale(sp).unwrap(), vec![0]).unwrap();
        let (end, closed) = lift_chain(&cover, &t, &scales, &c, cover.center).unwrap();
        assert_eq!(end, cover.center);
        assert!(closed);
    }

    #[test]
    fn deck_identity_and_inverses() {
        let t = sample_circle(1.0, 3).unwrap();
        let scales = scale_set(&t);
        let cover = build_cover(&t, &scales, ScalePoint::above(1), 4, &Budget::default()).unwrap();
        let decks = cover.deck_elements().unwrap();
        assert_eq!(decks.len(), 1);
        let id = &decks[0];
        for v in 0..cover.vertex_count() {
            assert_eq!(deck_apply(&cover, id, v).unwrap(), v);
        }
        assert_eq!(displacement(&cover, id).unwrap(), 0.0);
    }

    #[test]
    fn kernel_report_on_circle() {
        let m = sample_circle(3.0, 12).unwrap();
        let report = kernel_report(&m, &Budget::default());
        let nontrivial: Vec<&KernelStep> =
            report.steps.iter().filter(|s| s.kernel_dim > 0).collect();
        assert_eq!(nontrivial.len(), 1);
        assert_eq!(nontrivial[0].value, 1.0);
        assert!(report.stabilized);
    }

    #[test]
    fn kernel_report_on_hawaiian_truncation() {
        let h = crate::spaces::hawaiian_truncation(3, 12).unwrap();
        let report = kernel_report(&h, &Budget::default());
        let nontrivial: Vec<&KernelStep> =
            report.steps.iter().filter(|s| s.kernel_dim > 0).collect();
        assert_eq!(nontrivial.len(), 3);
        let values: Vec<f64> = nontrivial.iter().map(|s| s.value).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
        for step in &nontrivial {
            for g in &step.generators {
                assert!(g.birth_value < step.value);
                assert!(g.witness.is_loop());
            }
        }
    }

    #[test]
    fn kernel_report_on_tree() {
        let g = crate::spaces::MetricGraph {
            vertices: 2,
            edges: vec![(0, 1, 1.0)],
        };
        let m = crate::spaces::graph_to_space(&g, 0.25).unwrap();
        let report = kernel_report(&m, &Budget::default());
        assert!(report.steps.iter().all(|s| s.kernel_dim == 0));
        assert!(report.stabilized);
    }
}
