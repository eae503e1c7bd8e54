//! Exact homology transitions across the scale filtration.
//!
//! One pass over the filtration (edges and triangles ordered by diameter,
//! then lexicographically) maintains a basis of live rational cocycles, one
//! per homology class of the current Rips 2-skeleton. A triangle that
//! evaluates nonzero on some live cocycle kills the youngest such class;
//! when the dying class was born at a strictly smaller scale, the step's
//! transition kernel is nontrivial and the scale value is critical.
//!
//! The dying cocycle doubles as a non-nullity certificate on the AT side of
//! the death scale. A witness cycle dual to the whole live basis is
//! extracted at the end of the step, so its class is exactly the dying one:
//! nonzero before the step, zero after.
//!
//! Arithmetic is exact: a checked i128 rational fast path, retried with big
//! rationals on overflow.

use std::collections::{HashMap, VecDeque};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exact::{Coef, QSmall};
use crate::spaces::FiniteMetricSpace;

#[derive(Debug, Clone, Copy)]
pub struct EdgeInfo {
    pub u: usize,
    pub v: usize,
    pub diam: f64,
}

/// A homology class that dies at this step after being born strictly
/// earlier: one kernel generator of the transition at the step's value.
#[derive(Debug, Clone)]
pub struct DeathRecord {
    pub birth_value: f64,
    /// Integer 1-cycle supported on edges strictly below the death value.
    pub witness_cycle: Vec<((usize, usize), i64)>,
    /// The birth cycle (one closed walk, unit coefficients): a fallback
    /// witness whose class contains the dying one plus possibly surviving
    /// classes.
    pub fallback_cycle: Vec<((usize, usize), i64)>,
    /// Integer cochain vanishing on every triangle strictly below the death
    /// value, pairing nonzero with the witness; None if integer scaling
    /// overflowed.
    pub certificate: Option<Vec<((usize, usize), i64)>>,
    /// True when the witness is dual to the full live basis (its class dies
    /// exactly here).
    pub clean: bool,
}

/// Transition report for one scale value.
#[derive(Debug, Clone)]
pub struct StepReport {
    /// 1-based index into the scale set.
    pub scale_index: usize,
    pub value: f64,
    /// Dimension of the kernel of the step map on H1.
    pub kernel_dim: usize,
    pub deaths: Vec<DeathRecord>,
}

#[derive(Debug, Clone)]
pub struct H1Transitions {
    pub steps: Vec<StepReport>,
}

impl H1Transitions {
    /// Scale values with nontrivial transition kernel, ascending.
    pub fn critical_values(&self) -> Vec<f64> {
        self.steps
            .iter()
            .filter(|s| s.kernel_dim > 0)
            .map(|s| s.value)
            .collect()
    }
}

struct Cocycle<C> {
    birth_rank: u32,
    support: HashMap<u32, C>,
}

struct RawDeath {
    birth_rank: u32,
    support: Vec<(u32, BigRational)>,
}

struct RawStep {
    value: f64,
    start_rank: u32,
    deaths: Vec<RawDeath>,
    /// Live cocycles at the end of the step (only captured when a real
    /// death happened): (birth_rank, support).
    live_end: Vec<(u32, Vec<(u32, BigRational)>)>,
}

struct Raw {
    edges: Vec<EdgeInfo>,
    steps: Vec<RawStep>,
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            self.parent[x as usize] = self.parent[self.parent[x as usize] as usize];
            x = self.parent[x as usize];
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb) as usize] = ra.min(rb);
        true
    }
}

fn sorted_edges(space: &FiniteMetricSpace) -> Vec<EdgeInfo> {
    let n = space.n();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            edges.push(EdgeInfo {
                u,
                v,
                diam: space.d(u, v),
            });
        }
    }
    edges.sort_by(|a, b| {
        a.diam
            .total_cmp(&b.diam)
            .then(a.u.cmp(&b.u))
            .then(a.v.cmp(&b.v))
    });
    edges
}

/// New triangles of the step, each generated once from its highest-ranked
/// edge, sorted lexicographically.
fn step_triangles(
    space: &FiniteMetricSpace,
    rank_of: &[u32],
    edges: &[EdgeInfo],
    step_range: std::ops::Range<usize>,
    value: f64,
) -> Vec<(usize, usize, usize)> {
    let n = space.n();
    let gen = |r: usize| -> Vec<u64> {
        let e = &edges[r];
        let mut out = Vec::new();
        for w in 0..n {
            if w == e.u || w == e.v {
                continue;
            }
            let duw = space.d(e.u, w);
            let dvw = space.d(e.v, w);
            if duw > value || dvw > value {
                continue;
            }
            let r1 = rank_of[pair_id(n, e.u, w)];
            let r2 = rank_of[pair_id(n, e.v, w)];
            if (r1 as usize) < r && (r2 as usize) < r {
                let mut t = [e.u, e.v, w];
                t.sort_unstable();
                out.push(((t[0] as u64) << 26) | ((t[1] as u64) << 13) | t[2] as u64);
            }
        }
        out
    };
    #[cfg(feature = "parallel")]
    let mut packed: Vec<u64> = {
        use rayon::prelude::*;
        step_range.into_par_iter().flat_map_iter(gen).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut packed: Vec<u64> = step_range.flat_map(gen).collect();
    packed.sort_unstable();
    packed
        .into_iter()
        .map(|p| {
            (
                (p >> 26) as usize,
                ((p >> 13) & 0x1fff) as usize,
                (p & 0x1fff) as usize,
            )
        })
        .collect()
}

#[inline]
fn pair_id(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a < b { (a, b) } else { (b, a) };
    a * n + b
}

fn run_engine<C: Coef>(space: &FiniteMetricSpace) -> Option<Raw> {
    let n = space.n();
    let edges = sorted_edges(space);
    let mut rank_of = vec![u32::MAX; n * n];
    for (r, e) in edges.iter().enumerate() {
        rank_of[pair_id(n, e.u, e.v)] = r as u32;
    }
    let mut uf = UnionFind::new(n);
    let mut slab: Vec<Option<Cocycle<C>>> = Vec::new();
    let mut index: Vec<Vec<u32>> = vec![Vec::new(); edges.len()];
    let mut steps: Vec<RawStep> = Vec::new();

    let snapshot = |support: &HashMap<u32, C>| -> Vec<(u32, BigRational)> {
        let mut v: Vec<(u32, BigRational)> =
            support.iter().map(|(r, c)| (*r, c.to_big())).collect();
        v.sort_by_key(|e| e.0);
        v
    };

    let mut start = 0usize;
    while start < edges.len() {
        let value = edges[start].diam;
        let mut end = start;
        while end < edges.len() && edges[end].diam == value {
            end += 1;
        }

        // edges of the step: positivity and fresh cocycles
        for r in start..end {
            let e = &edges[r];
            if !uf.union(e.u as u32, e.v as u32) {
                let id = slab.len() as u32;
                let mut support = HashMap::new();
                support.insert(r as u32, C::one());
                slab.push(Some(Cocycle {
                    birth_rank: r as u32,
                    support,
                }));
                index[r].push(id);
            }
        }

        let mut deaths: Vec<RawDeath> = Vec::new();

        // triangles of the step
        let triangles = step_triangles(space, &rank_of, &edges, start..end, value);
        let mut candidates: Vec<u32> = Vec::new();
        for (a, b, c) in triangles {
            let r_ab = rank_of[pair_id(n, a, b)];
            let r_bc = rank_of[pair_id(n, b, c)];
            let r_ac = rank_of[pair_id(n, a, c)];
            candidates.clear();
            for r in [r_ab, r_bc, r_ac] {
                for &id in &index[r as usize] {
                    if !candidates.contains(&id) {
                        candidates.push(id);
                    }
                }
            }
            if candidates.is_empty() {
                continue;
            }
            // evaluate the triangle boundary against each candidate
            let mut nonzero: Vec<(u32, C)> = Vec::new();
            for &id in &candidates {
                let co = slab[id as usize].as_ref().unwrap();
                let mut acc: Option<C> = None;
                for (r, positive) in [(r_ab, true), (r_bc, true), (r_ac, false)] {
                    if let Some(v) = co.support.get(&r) {
                        acc = Some(match acc {
                            None => {
                                if positive {
                                    v.clone()
                                } else {
                                    v.neg()
                                }
                            }
                            Some(a) => {
                                if positive {
                                    a.checked_add(v)?
                                } else {
                                    a.checked_sub(v)?
                                }
                            }
                        });
                    }
                }
                if let Some(v) = acc {
                    if !v.vanishes() {
                        nonzero.push((id, v));
                    }
                }
            }
            if nonzero.is_empty() {
                continue;
            }
            // the youngest nonzero class dies
            let mut die_pos = 0usize;
            let mut die_birth = 0u32;
            for (pos, (id, _)) in nonzero.iter().enumerate() {
                let b = slab[*id as usize].as_ref().unwrap().birth_rank;
                if pos == 0 || b > die_birth {
                    die_pos = pos;
                    die_birth = b;
                }
            }
            let (die_id, die_val) = nonzero.swap_remove(die_pos);
            let dying = slab[die_id as usize].take().unwrap();
            for r in dying.support.keys() {
                let list = &mut index[*r as usize];
                if let Some(pos) = list.iter().position(|&x| x == die_id) {
                    list.swap_remove(pos);
                }
            }
            // update the remaining nonzero candidates
            let mut failed = false;
            for (id, c_val) in &nonzero {
                let Some(q) = c_val.checked_div(&die_val) else {
                    failed = true;
                    break;
                };
                let co = slab[*id as usize].as_mut().unwrap();
                for (r, v) in dying.support.iter() {
                    let delta = match q.checked_mul(v) {
                        Some(d) => d,
                        None => {
                            failed = true;
                            break;
                        }
                    };
                    match co.support.get_mut(r) {
                        Some(cur) => {
                            let next = match cur.checked_sub(&delta) {
                                Some(x) => x,
                                None => {
                                    failed = true;
                                    break;
                                }
                            };
                            if next.vanishes() {
                                co.support.remove(r);
                                let list = &mut index[*r as usize];
                                if let Some(pos) = list.iter().position(|&x| x == *id) {
                                    list.swap_remove(pos);
                                }
                            } else {
                                *cur = next;
                            }
                        }
                        None => {
                            let neg = delta.neg();
                            if !neg.vanishes() {
                                co.support.insert(*r, neg);
                                index[*r as usize].push(*id);
                            }
                        }
                    }
                }
                if failed {
                    break;
                }
            }
            if failed {
                return None;
            }
            if edges[dying.birth_rank as usize].diam < value {
                deaths.push(RawDeath {
                    birth_rank: dying.birth_rank,
                    support: snapshot(&dying.support),
                });
            }
        }

        let live_end = if deaths.is_empty() {
            Vec::new()
        } else {
            slab.iter()
                .flatten()
                .map(|co| (co.birth_rank, snapshot(&co.support)))
                .collect()
        };
        steps.push(RawStep {
            value,
            start_rank: start as u32,
            deaths,
            live_end,
        });
        start = end;
    }
    debug_assert!(
        slab.iter().flatten().count() == 0,
        "no class survives the complete complex"
    );
    Some(Raw { edges, steps })
}

type Vector = HashMap<u32, BigRational>;

fn eval(alpha: &[(u32, BigRational)], v: &Vector) -> BigRational {
    let mut acc: BigRational = Zero::zero();
    for (r, a) in alpha {
        if let Some(x) = v.get(r) {
            acc += a * x;
        }
    }
    acc
}

/// Birth cycle of a positive edge: the edge plus a path between its
/// endpoints through strictly older edges.
fn birth_cycle(
    space: &FiniteMetricSpace,
    rank_of: &[u32],
    edges: &[EdgeInfo],
    rank: u32,
) -> Vector {
    let n = space.n();
    let e = &edges[rank as usize];
    // BFS from e.v to e.u over edges of rank < rank
    let mut prev: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    seen[e.v] = true;
    let mut queue = VecDeque::from([e.v]);
    'bfs: while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if seen[y] || y == x {
                continue;
            }
            if rank_of[pair_id(n, x, y)] < rank {
                seen[y] = true;
                prev[y] = Some(x);
                if y == e.u {
                    break 'bfs;
                }
                queue.push_back(y);
            }
        }
    }
    debug_assert!(seen[e.u], "positive edge endpoints are connected below it");
    let mut cycle: Vector = HashMap::new();
    let one: BigRational = One::one();
    // traverse u -> v along the new edge
    cycle.insert(rank, one.clone());
    // then v -> ... -> u: reconstruct u -> ... -> v and negate
    let mut walk = vec![e.u];
    let mut cur = e.u;
    while let Some(p) = prev[cur] {
        walk.push(p);
        cur = p;
        if cur == e.v {
            break;
        }
    }
    // walk is u -> v; traversing v -> u means reversing it
    for w in walk.windows(2) {
        let (x, y) = (w[1], w[0]); // direction of travel: v-side toward u
        let r = rank_of[pair_id(n, x, y)];
        let sign: BigRational = if x < y { one.clone() } else { -one.clone() };
        *cycle.entry(r).or_insert_with(Zero::zero) += sign;
    }
    cycle.retain(|_, v| !v.is_zero());
    cycle
}

fn scaled_i64(entries: &[(u32, BigRational)]) -> Option<Vec<(u32, i64)>> {
    use num_bigint::BigInt;
    use num_integer::Integer;
    if entries.is_empty() {
        return Some(Vec::new());
    }
    let mut lcm: BigInt = One::one();
    for (_, v) in entries {
        lcm = lcm.lcm(v.denom());
    }
    let mut out = Vec::with_capacity(entries.len());
    let mut g: BigInt = Zero::zero();
    let scaled: Vec<(u32, BigInt)> = entries
        .iter()
        .map(|(r, v)| (*r, v.numer() * (&lcm / v.denom())))
        .collect();
    for (_, v) in &scaled {
        g = g.gcd(&v.abs());
    }
    for (r, v) in scaled {
        let v = if g.is_zero() || g.is_one() { v } else { v / &g };
        out.push((r, i64::try_from(v).ok()?));
    }
    Some(out)
}

/// Compute the H1 transition report of a space: one pass with the checked
/// rational engine, retried in big rationals if it overflows.
pub fn h1_transitions(space: &FiniteMetricSpace) -> H1Transitions {
    let raw = match run_engine::<QSmall>(space) {
        Some(r) => r,
        None => run_engine::<BigRational>(space).expect("big rational engine is total"),
    };
    finish(space, raw)
}

/// The arbitrary-precision path, runnable directly so tests can pin it
/// against the checked fast path.
#[cfg(test)]
pub(crate) fn h1_transitions_bigrational(space: &FiniteMetricSpace) -> H1Transitions {
    finish(
        space,
        run_engine::<BigRational>(space).expect("big rational engine is total"),
    )
}

fn finish(space: &FiniteMetricSpace, raw: Raw) -> H1Transitions {
    let n = space.n();
    let edges = &raw.edges;
    let mut rank_of = vec![u32::MAX; n * n];
    for (r, e) in edges.iter().enumerate() {
        rank_of[pair_id(n, e.u, e.v)] = r as u32;
    }
    let edge_pair = |r: u32| -> (usize, usize) {
        let e = &edges[r as usize];
        (e.u, e.v)
    };

    let mut steps = Vec::with_capacity(raw.steps.len());
    for (k, rs) in raw.steps.iter().enumerate() {
        let mut deaths = Vec::new();
        if !rs.deaths.is_empty() {
            // members of the dual solve: live-at-end plus each dying class
            for dying in &rs.deaths {
                let mut members: Vec<(u32, &Vec<(u32, BigRational)>)> =
                    rs.live_end.iter().map(|(b, s)| (*b, s)).collect();
                members.push((dying.birth_rank, &dying.support));
                members.sort_by_key(|(b, _)| *b);
                members.dedup_by_key(|(b, _)| *b);
                // build dual cycles ascending by birth
                let mut duals: HashMap<u32, Vector> = HashMap::new();
                for i in 0..members.len() {
                    let (b_i, _) = members[i];
                    if b_i > dying.birth_rank {
                        break; // younger members never correct older duals
                    }
                    let mut y = birth_cycle(space, &rank_of, edges, b_i);
                    for (b_l, alpha_l) in members.iter().take(i) {
                        let c = eval(alpha_l, &y);
                        if !c.is_zero() {
                            let y_l = duals.get(b_l).expect("built in ascending order");
                            for (r, v) in y_l {
                                let delta = &c * v;
                                let cur = y.entry(*r).or_insert_with(Zero::zero);
                                *cur -= delta;
                            }
                            y.retain(|_, v| !v.is_zero());
                        }
                    }
                    duals.insert(b_i, y);
                }
                let witness_vec = duals
                    .get(&dying.birth_rank)
                    .cloned()
                    .unwrap_or_else(|| birth_cycle(space, &rank_of, edges, dying.birth_rank));
                // verify duality against the live basis
                let mut clean = !eval(&dying.support, &witness_vec).is_zero();
                for (_, alpha_l) in &rs.live_end {
                    if !eval(alpha_l, &witness_vec).is_zero() {
                        clean = false;
                    }
                }
                let bc = birth_cycle(space, &rank_of, edges, dying.birth_rank);
                let (witness_vec, clean) = if clean {
                    (witness_vec, true)
                } else {
                    (bc.clone(), false)
                };
                let fallback_cycle: Vec<((usize, usize), i64)> = {
                    let mut entries: Vec<(u32, BigRational)> = bc.into_iter().collect();
                    entries.sort_by_key(|e| e.0);
                    scaled_i64(&entries)
                        .expect("unit cycle fits i64")
                        .into_iter()
                        .map(|(r, c)| (edge_pair(r), c))
                        .collect()
                };
                let mut w_entries: Vec<(u32, BigRational)> = witness_vec.into_iter().collect();
                w_entries.sort_by_key(|e| e.0);
                let witness_cycle = match scaled_i64(&w_entries) {
                    Some(v) => v.into_iter().map(|(r, c)| (edge_pair(r), c)).collect(),
                    None => {
                        // primitive fallback: the birth cycle has unit entries
                        let bc = birth_cycle(space, &rank_of, edges, dying.birth_rank);
                        let mut entries: Vec<(u32, BigRational)> = bc.into_iter().collect();
                        entries.sort_by_key(|e| e.0);
                        scaled_i64(&entries)
                            .expect("unit cycle fits i64")
                            .into_iter()
                            .map(|(r, c)| (edge_pair(r), c))
                            .collect()
                    }
                };
                // certificate: the dying cocycle restricted below the step
                let cert_entries: Vec<(u32, BigRational)> = dying
                    .support
                    .iter()
                    .filter(|(r, _)| *r < rs.start_rank)
                    .cloned()
                    .collect();
                let certificate = scaled_i64(&cert_entries)
                    .map(|v| v.into_iter().map(|(r, c)| (edge_pair(r), c)).collect());
                deaths.push(DeathRecord {
                    birth_value: edges[dying.birth_rank as usize].diam,
                    witness_cycle,
                    fallback_cycle,
                    certificate,
                    clean,
                });
            }
        }
        steps.push(StepReport {
            scale_index: k + 1,
            value: rs.value,
            kernel_dim: rs.deaths.len(),
            deaths,
        });
    }
    H1Transitions { steps }
}

/// Stitch an integer edge cycle into a based loop: an Euler walk of each
/// support component, connected through paths in the AT-side graph. Returns
/// None if the support cannot be connected to a single base.
pub fn cycle_to_loop(
    space: &FiniteMetricSpace,
    at_value: f64,
    cycle: &[((usize, usize), i64)],
    basepoint: usize,
) -> Option<crate::chains::Chain> {
    let n = space.n();
    if cycle.is_empty() {
        return None;
    }
    // directed arcs
    let mut arcs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &((u, v), c) in cycle {
        if c > 0 {
            for _ in 0..c {
                arcs[u].push(v);
            }
        } else {
            for _ in 0..(-c) {
                arcs[v].push(u);
            }
        }
    }
    for a in arcs.iter_mut() {
        a.sort_unstable();
        a.reverse(); // pop() takes the smallest
    }
    // support components (undirected)
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0usize;
    let support: Vec<usize> = (0..n).filter(|&x| !arcs[x].is_empty()).collect();
    let adj_in_cycle = |x: usize, cycle: &[((usize, usize), i64)]| -> Vec<usize> {
        let mut out = Vec::new();
        for &((u, v), _) in cycle {
            if u == x {
                out.push(v);
            }
            if v == x {
                out.push(u);
            }
        }
        out
    };
    for &s in &support {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut stack = vec![s];
        comp[s] = n_comp;
        while let Some(x) = stack.pop() {
            for y in adj_in_cycle(x, cycle) {
                if comp[y] == usize::MAX {
                    comp[y] = n_comp;
                    stack.push(y);
                }
            }
        }
        n_comp += 1;
    }
    // entry vertex per component: minimum
    let mut entries = vec![usize::MAX; n_comp];
    for &s in &support {
        entries[comp[s]] = entries[comp[s]].min(s);
    }
    // AT-graph path finder
    let at_path = |from: usize, to: usize| -> Option<Vec<usize>> {
        if from == to {
            return Some(vec![from]);
        }
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(x) = queue.pop_front() {
            for y in 0..n {
                if !seen[y] && y != x && space.d(x, y) < at_value {
                    seen[y] = true;
                    prev[y] = x;
                    if y == to {
                        let mut path = vec![to];
                        let mut cur = to;
                        while cur != from {
                            cur = prev[cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(y);
                }
            }
        }
        None
    };
    // pick the base: the space basepoint when it reaches every entry
    let base = if entries.iter().all(|&e| at_path(basepoint, e).is_some()) {
        basepoint
    } else {
        let cand = entries[0];
        if entries.iter().all(|&e| at_path(cand, e).is_some()) {
            cand
        } else {
            return None;
        }
    };
    // Euler walk per component
    let euler = |start: usize, arcs: &mut Vec<Vec<usize>>| -> Vec<usize> {
        let mut stack = vec![start];
        let mut walk = Vec::new();
        while let Some(&x) = stack.last() {
            if let Some(y) = arcs[x].pop() {
                stack.push(y);
            } else {
                walk.push(stack.pop().unwrap());
            }
        }
        walk.reverse();
        walk
    };
    let mut points = vec![base];
    for &entry in &entries {
        let out_path = at_path(base, entry)?;
        let walk = euler(entry, &mut arcs);
        debug_assert_eq!(walk.first(), Some(&entry));
        debug_assert_eq!(walk.last(), Some(&entry));
        points.extend_from_slice(&out_path[1..]);
        points.extend_from_slice(&walk[1..]);
        let mut back = out_path;
        back.reverse();
        points.extend_from_slice(&back[1..]);
    }
    if arcs.iter().any(|a| !a.is_empty()) {
        return None;
    }
    Some(crate::chains::Chain {
        scale: at_value,
        points,
    })
}
