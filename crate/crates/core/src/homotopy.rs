//! Deciding epsilon-nullity of loops with auditable certificates in both
//! directions.
//!
//! A `Null` verdict carries a replayable move certificate; a `NonNull`
//! verdict carries an integer cochain that vanishes on every triangle of the
//! scale point and pairs nonzero with the loop. Both are machine-checked.
//! When neither certificate is found within budget the verdict is
//! `Inconclusive` with a report of what was tried; loops that are essential
//! in the scale group but invisible to rational homology land here by
//! design.
//!
//! The strategy cascade is fixed: free reduction, the homology witness, the
//! word route (free-presentation shortcut, then coset enumeration), then
//! greedy shrinking plus breadth-first search over free-reduced chains.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::chains::{
    apply_move, free_reduce_with_certificate, BasicMove, Chain, HomotopyCertificate,
};
use crate::coset::enumerate_trivial;
use crate::error::{Error, Result};
use crate::exact::{EchelonBasis, SparseVec};
use crate::rips::{chain_to_word, chain_valid_at, ScalePoint, ScaleSet, Word};
use crate::spaces::FiniteMetricSpace;
use num_rational::BigRational;

/// Search and table budgets. `max_states` doubles as a generic work-unit cap
/// for the homology witness stage. A wall-clock cap, when set, can only turn
/// conclusive verdicts into `Inconclusive`; deterministic runs leave it off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_states: usize,
    pub max_chain_len: usize,
    pub max_coset_rows: usize,
    pub wall_ms: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_states: 200_000,
            max_chain_len: 64,
            max_coset_rows: 20_000,
            wall_ms: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub states_explored: usize,
    pub max_chain_len_reached: usize,
    pub strategies: Vec<String>,
    pub notes: Vec<String>,
}

/// Integer cochain witnessing non-nullity: zero sum around every triangle of
/// the scale point, nonzero sum along the loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H1Certificate {
    pub edges: Vec<(usize, usize)>,
    pub values: Vec<i64>,
    pub loop_pairing: i64,
}

/// Three-valued nullity verdict with evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Decision {
    Null(HomotopyCertificate),
    NonNull(H1Certificate),
    Inconclusive(BudgetReport),
}

impl Decision {
    pub fn is_null(&self) -> bool {
        matches!(self, Decision::Null(_))
    }

    pub fn is_non_null(&self) -> bool {
        matches!(self, Decision::NonNull(_))
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Decision::Inconclusive(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Decision::Null(_) => "null",
            Decision::NonNull(_) => "nonnull",
            Decision::Inconclusive(_) => "inconclusive",
        }
    }
}

/// Signed edge-incidence vector of a loop, indexed by `u * n + v` (u < v).
fn loop_edge_vector(space: &FiniteMetricSpace, chain: &Chain) -> SparseVec {
    let n = space.n();
    let mut acc: HashMap<u32, i64> = HashMap::new();
    for w in chain.points.windows(2) {
        let (x, y) = (w[0], w[1]);
        if x == y {
            continue;
        }
        let (u, v, sign) = if x < y { (x, y, 1) } else { (y, x, -1) };
        *acc.entry((u * n + v) as u32).or_insert(0) += sign;
    }
    SparseVec::from_entries(
        acc.into_iter()
            .filter(|(_, v)| *v != 0)
            .map(|(i, v)| (i, BigRational::from_integer(v.into())))
            .collect(),
    )
}

fn triangle_boundary(n: usize, a: usize, b: usize, c: usize) -> SparseVec {
    SparseVec::from_entries(vec![
        ((a * n + b) as u32, BigRational::from_integer(1.into())),
        ((b * n + c) as u32, BigRational::from_integer(1.into())),
        ((a * n + c) as u32, BigRational::from_integer((-1).into())),
    ])
}

enum H1Outcome {
    Witness(H1Certificate),
    NoWitness,
    Capped,
}

fn h1_witness_capped(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    max_triangles: Option<usize>,
    deadline: Option<Instant>,
) -> Result<H1Outcome> {
    scales.check(sp)?;
    let n = space.n();
    let loop_vec = loop_edge_vector(space, chain);
    if loop_vec.is_zero() {
        return Ok(H1Outcome::NoWitness);
    }
    let mut basis = EchelonBasis::new();
    let mut seen = 0usize;
    for a in 0..n {
        for b in (a + 1)..n {
            if !scales.is_edge(space, sp, a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if scales.is_edge(space, sp, a, c) && scales.is_edge(space, sp, b, c) {
                    seen += 1;
                    if let Some(cap) = max_triangles {
                        if seen > cap {
                            return Ok(H1Outcome::Capped);
                        }
                    }
                    basis.insert(triangle_boundary(n, a, b, c));
                }
            }
            if let Some(dl) = deadline {
                if Instant::now() >= dl {
                    return Ok(H1Outcome::Capped);
                }
            }
        }
    }
    match basis.annihilator_hitting(&loop_vec) {
        None => Ok(H1Outcome::NoWitness),
        Some(alpha) => {
            let ints = alpha.to_integer();
            let mut edges = Vec::with_capacity(ints.len());
            let mut values = Vec::with_capacity(ints.len());
            for (idx, v) in &ints {
                let (u, w) = ((*idx as usize) / n, (*idx as usize) % n);
                edges.push((u, w));
                match i64::try_from(v.clone()) {
                    Ok(x) => values.push(x),
                    Err(_) => return Ok(H1Outcome::Capped),
                }
            }
            let cert = H1Certificate {
                edges,
                values,
                loop_pairing: 0,
            };
            let pairing = pairing_of(space, chain, &cert)?;
            debug_assert!(pairing != 0);
            Ok(H1Outcome::Witness(H1Certificate {
                loop_pairing: pairing,
                ..cert
            }))
        }
    }
}

/// Search for an integer cochain separating the loop from the triangle
/// boundaries at this scale point.
pub fn h1_witness(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
) -> Result<Option<H1Certificate>> {
    match h1_witness_capped(space, scales, sp, chain, None, None)? {
        H1Outcome::Witness(c) => Ok(Some(c)),
        _ => Ok(None),
    }
}

fn pairing_of(space: &FiniteMetricSpace, chain: &Chain, cert: &H1Certificate) -> Result<i64> {
    let _ = space;
    let mut by_edge: HashMap<(usize, usize), i128> = HashMap::new();
    for (e, v) in cert.edges.iter().zip(&cert.values) {
        by_edge.insert(*e, *v as i128);
    }
    let mut acc: i128 = 0;
    for w in chain.points.windows(2) {
        let (x, y) = (w[0], w[1]);
        if x == y {
            continue;
        }
        let (u, v, sign) = if x < y { (x, y, 1) } else { (y, x, -1) };
        if let Some(val) = by_edge.get(&(u, v)) {
            acc += sign * val;
        }
    }
    i64::try_from(acc).map_err(|_| Error::Overflow)
}

/// Check an H1 certificate from scratch: support edges exist at the scale
/// point, every triangle sums to zero, and the loop pairing is nonzero and
/// matches the recorded value.
pub fn verify_h1(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    cert: &H1Certificate,
) -> Result<()> {
    scales.check(sp)?;
    if cert.edges.len() != cert.values.len() {
        return Err(Error::Document(
            "certificate edge/value length mismatch".into(),
        ));
    }
    let mut by_edge: HashMap<(usize, usize), i128> = HashMap::new();
    for (&(u, v), &val) in cert.edges.iter().zip(&cert.values) {
        if u >= v || !scales.is_edge(space, sp, u, v) {
            return Err(Error::NotAnEdge { u, v });
        }
        by_edge.insert((u, v), val as i128);
    }
    let n = space.n();
    let get = |a: usize, b: usize| -> i128 { by_edge.get(&(a, b)).copied().unwrap_or(0) };
    for a in 0..n {
        for b in (a + 1)..n {
            if !scales.is_edge(space, sp, a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if scales.is_edge(space, sp, a, c) && scales.is_edge(space, sp, b, c) {
                    let sum = get(a, b) + get(b, c) - get(a, c);
                    if sum != 0 {
                        return Err(Error::Document(format!(
                            "cochain does not vanish on triangle ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
    }
    let pairing = pairing_of(space, chain, cert)?;
    if pairing == 0 || pairing != cert.loop_pairing {
        return Err(Error::Document(format!(
            "loop pairing {pairing} does not certify (recorded {})",
            cert.loop_pairing
        )));
    }
    Ok(())
}

/// Remove interior points greedily (leftmost first) while the chain bound
/// allows; collapses trailing duplicate endpoints too.
fn greedy_shrink(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
) -> (Chain, Vec<BasicMove>) {
    let mut current = chain.clone();
    let mut moves = Vec::new();
    loop {
        let pts = &current.points;
        let mut chosen = None;
        for i in 1..pts.len().saturating_sub(1) {
            if scales.is_step(space, sp, pts[i - 1], pts[i + 1]) {
                chosen = Some(BasicMove::Remove { index: i });
                break;
            }
        }
        if chosen.is_none() && pts.len() == 2 && pts[0] == pts[1] {
            chosen = Some(BasicMove::Remove { index: 1 });
        }
        match chosen {
            Some(mv) => match apply_move(space, &current, mv) {
                Ok(next) => {
                    current = next;
                    moves.push(mv);
                }
                Err(_) => break,
            },
            None => break,
        }
    }
    (current, moves)
}

struct SearchOutcome {
    certificate: Option<HomotopyCertificate>,
    states: usize,
    max_len: usize,
    capped: bool,
}

/// Breadth-first search over free-reduced chains reachable by basic moves,
/// preceded by a greedy remove-only descent. States are deduplicated on the
/// reduced point sequence.
fn null_search(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    budget: &Budget,
    deadline: Option<Instant>,
) -> SearchOutcome {
    let eps = chain.scale;
    let base = chain.start();
    let mut prefix = Vec::new();
    let (reduced, mv) = free_reduce_with_certificate(space, chain);
    prefix.extend(mv);
    let (shrunk, mv) = greedy_shrink(space, scales, sp, &reduced);
    prefix.extend(mv);
    let (shrunk, mv) = free_reduce_with_certificate(space, &shrunk);
    prefix.extend(mv);
    if shrunk.is_constant() {
        return SearchOutcome {
            certificate: Some(HomotopyCertificate {
                source: chain.clone(),
                moves: prefix,
                target: shrunk,
            }),
            states: 0,
            max_len: chain.len(),
            capped: false,
        };
    }

    let n = space.n();
    let goal = vec![base];
    // parent map: state -> (parent state, moves from parent to state)
    let mut seen: HashMap<Vec<usize>, (Vec<usize>, Vec<BasicMove>)> = HashMap::new();
    seen.insert(shrunk.points.clone(), (Vec::new(), Vec::new()));
    let mut queue = VecDeque::from([shrunk.points.clone()]);
    let mut states = 1usize;
    let mut max_len = shrunk.len();
    let mut capped = false;
    let mut found = false;

    'bfs: while let Some(state) = queue.pop_front() {
        if let Some(dl) = deadline {
            if Instant::now() >= dl {
                capped = true;
                break 'bfs;
            }
        }
        let cur = Chain {
            scale: eps,
            points: state.clone(),
        };
        let len = state.len();
        // removals first: they shorten
        let mut child_moves: Vec<BasicMove> = Vec::new();
        for i in 1..len.saturating_sub(1) {
            if scales.is_step(space, sp, state[i - 1], state[i + 1]) {
                child_moves.push(BasicMove::Remove { index: i });
            }
        }
        if len == 2 && state[0] == state[1] {
            child_moves.push(BasicMove::Remove { index: 1 });
        }
        if len < budget.max_chain_len {
            for i in 1..len {
                for w in 0..n {
                    if scales.is_step(space, sp, state[i - 1], w)
                        && scales.is_step(space, sp, w, state[i])
                    {
                        child_moves.push(BasicMove::Insert { index: i, point: w });
                    }
                }
            }
        }
        for mv in child_moves {
            states += 1;
            if states > budget.max_states {
                capped = true;
                break 'bfs;
            }
            let Ok(applied) = apply_move(space, &cur, mv) else {
                continue;
            };
            let (child, extra) = free_reduce_with_certificate(space, &applied);
            max_len = max_len.max(applied.len());
            if seen.contains_key(&child.points) {
                continue;
            }
            let mut moves = vec![mv];
            moves.extend(extra);
            seen.insert(child.points.clone(), (state.clone(), moves));
            if child.points == goal {
                found = true;
                break 'bfs;
            }
            queue.push_back(child.points);
        }
    }

    if !found {
        return SearchOutcome {
            certificate: None,
            states,
            max_len,
            capped,
        };
    }
    // reconstruct the move path
    let mut rev_segments = Vec::new();
    let mut cur_key = goal;
    while let Some((parent, moves)) = seen.get(&cur_key) {
        if moves.is_empty() {
            break;
        }
        rev_segments.push(moves.clone());
        cur_key = parent.clone();
    }
    let mut all_moves = prefix;
    for seg in rev_segments.into_iter().rev() {
        all_moves.extend(seg);
    }
    let target = Chain {
        scale: eps,
        points: vec![base],
    };
    let cert = HomotopyCertificate {
        source: chain.clone(),
        moves: all_moves,
        target,
    };
    debug_assert!(cert.replay(space).is_ok());
    SearchOutcome {
        certificate: Some(cert),
        states,
        max_len,
        capped,
    }
}

/// BFS-only entry point: a move certificate to the constant chain, or None
/// within budget.
pub fn bfs_null_search(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    budget: &Budget,
) -> Result<Option<HomotopyCertificate>> {
    let chain = check_loop(space, scales, sp, chain)?;
    let deadline = budget
        .wall_ms
        .map(|ms| Instant::now() + std::time::Duration::from_millis(ms));
    Ok(null_search(space, scales, sp, &chain, budget, deadline).certificate)
}

/// Word-level nullity via the free shortcut or coset enumeration:
/// `Some(true)` / `Some(false)` when decidable within the row budget.
pub fn coset_null_test(
    pres: &crate::rips::Presentation,
    word: &Word,
    budget: &Budget,
) -> Option<bool> {
    let reduced = word.free_reduce();
    if pres.relators.iter().all(|r| r.0.is_empty()) {
        return Some(reduced.is_identity());
    }
    if reduced.is_identity() {
        return Some(true);
    }
    enumerate_trivial(pres.n_generators(), &pres.relators, budget.max_coset_rows)
        .map(|table| table.is_identity_word(&reduced))
}

/// Validate a loop at the scale point and rebase it to the point's
/// representative scale, so that move validity and symbolic edge membership
/// agree exactly.
fn check_loop(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
) -> Result<Chain> {
    scales.check(sp)?;
    for &p in &chain.points {
        space.check_point(p)?;
    }
    if !chain.is_loop() {
        return Err(Error::NotBasedLoop {
            expected: chain.start(),
        });
    }
    if !chain_valid_at(space, scales, sp, chain) {
        for w in chain.points.windows(2) {
            if !scales.is_step(space, sp, w[0], w[1]) {
                return Err(Error::NotAnEdge {
                    u: w[0].min(w[1]),
                    v: w[0].max(w[1]),
                });
            }
        }
    }
    Ok(Chain {
        scale: scales.chain_scale(sp)?,
        points: chain.points.clone(),
    })
}

/// Connected-component presentation rooted at the loop's own base point;
/// None when the word route is too large for the budget.
fn word_route(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    budget: &Budget,
) -> Option<(crate::rips::Presentation, Word)> {
    let n = space.n();
    // component of the base point
    let base = chain.start();
    let mut comp = vec![false; n];
    comp[base] = true;
    let mut stack = vec![base];
    let mut comp_size = 1usize;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !comp[v] && scales.is_edge(space, sp, u, v) {
                comp[v] = true;
                comp_size += 1;
                stack.push(v);
            }
        }
    }
    let mut edge_count = 0usize;
    for u in 0..n {
        if !comp[u] {
            continue;
        }
        for v in (u + 1)..n {
            if comp[v] && scales.is_edge(space, sp, u, v) {
                edge_count += 1;
            }
        }
    }
    let gens = edge_count + 1 - comp_size;
    if gens > budget.max_coset_rows {
        return None;
    }
    // build on the restriction to the component: reuse `presentation` by
    // tolerating stray points outside the component
    let pres = component_presentation(space, scales, sp, base);
    let word = chain_to_word(space, scales, sp, &pres, chain).ok()?;
    Some((pres, word))
}

/// Same construction as [`crate::rips::presentation`] but restricted to the
/// basepoint's component; points outside it simply carry no tree data.
pub(crate) fn component_presentation(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    basepoint: usize,
) -> crate::rips::Presentation {
    let n = space.n();
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    depth[basepoint] = 0;
    queue.push_back(basepoint);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if depth[v] == usize::MAX && scales.is_edge(space, sp, u, v) {
                depth[v] = depth[u] + 1;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    let reached: Vec<bool> = depth.iter().map(|&d| d != usize::MAX).collect();
    let mut generators = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if reached[u]
                && reached[v]
                && scales.is_edge(space, sp, u, v)
                && parent[u] != Some(v)
                && parent[v] != Some(u)
            {
                generators.push((u, v));
            }
        }
    }
    let mut pres = crate::rips::Presentation {
        basepoint,
        generators,
        relators: Vec::new(),
        tree_parent: parent,
        tree_depth: depth,
    };
    let mut relators = Vec::new();
    for a in 0..n {
        if !reached[a] {
            continue;
        }
        for b in (a + 1)..n {
            if !reached[b] || !scales.is_edge(space, sp, a, b) {
                continue;
            }
            for c in (b + 1)..n {
                if reached[c] && scales.is_edge(space, sp, a, c) && scales.is_edge(space, sp, b, c)
                {
                    let w = relator_word(&pres, a, b, c);
                    relators.push(w);
                }
            }
        }
    }
    pres.relators = relators;
    pres
}

fn relator_word(pres: &crate::rips::Presentation, a: usize, b: usize, c: usize) -> Word {
    let mut w = Vec::new();
    for (x, y) in [(a, b), (b, c), (c, a)] {
        let key = (x.min(y), x.max(y));
        if let Ok(i) = pres.generators.binary_search(&key) {
            w.push(if x < y {
                (i + 1) as i32
            } else {
                -((i + 1) as i32)
            });
        }
    }
    Word(w).free_reduce()
}

/// Decide epsilon-nullity of a loop at a scale point. The loop may be based
/// anywhere; nullity is decided in its own component.
pub fn decide_null(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    budget: &Budget,
) -> Result<Decision> {
    let chain = &check_loop(space, scales, sp, chain)?;
    let deadline = budget
        .wall_ms
        .map(|ms| Instant::now() + std::time::Duration::from_millis(ms));
    let mut report = BudgetReport::default();

    // 1. free reduction
    report.strategies.push("free_reduce".into());
    let (reduced, pre_moves) = free_reduce_with_certificate(space, chain);
    if reduced.is_constant() {
        return Ok(Decision::Null(HomotopyCertificate {
            source: chain.clone(),
            moves: pre_moves,
            target: reduced,
        }));
    }

    // 2. homology witness
    report.strategies.push("h1_witness".into());
    match h1_witness_capped(space, scales, sp, chain, Some(budget.max_states), deadline)? {
        H1Outcome::Witness(cert) => return Ok(Decision::NonNull(cert)),
        H1Outcome::NoWitness => {}
        H1Outcome::Capped => report.notes.push("h1 witness skipped: work cap".into()),
    }

    // 3. word route: free shortcut / coset enumeration
    report.strategies.push("word_route".into());
    let mut group_null = None;
    match word_route(space, scales, sp, chain, budget) {
        Some((pres, word)) => {
            group_null = coset_null_test(&pres, &word, budget);
            match group_null {
                Some(false) => {
                    report.notes.push(
                        "word route proves the loop nontrivial in the scale group, but no \
                         homology certificate exists; reporting inconclusive"
                            .into(),
                    );
                    return Ok(Decision::Inconclusive(report));
                }
                Some(true) => report
                    .notes
                    .push("word route: loop is trivial in the scale group".into()),
                None => report
                    .notes
                    .push("coset enumeration did not close within budget".into()),
            }
        }
        None => report
            .notes
            .push("word route skipped: presentation too large for budget".into()),
    }

    // 4. greedy shrink + BFS
    report.strategies.push("bfs_null_search".into());
    let outcome = null_search(space, scales, sp, chain, budget, deadline);
    report.states_explored = outcome.states;
    report.max_chain_len_reached = outcome.max_len;
    match outcome.certificate {
        Some(cert) => Ok(Decision::Null(cert)),
        None => {
            if group_null == Some(true) {
                report.notes.push(
                    "loop is null at the group level; no move certificate within budget".into(),
                );
            }
            if outcome.capped {
                report.notes.push("search budget exhausted".into());
            }
            Ok(Decision::Inconclusive(report))
        }
    }
}

/// Race the certificate search against the homology witness on two threads.
/// Both sides are sound, so the verdict kind is scheduling-independent.
#[cfg(feature = "parallel")]
pub fn decide_null_racing(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    budget: &Budget,
) -> Result<Decision> {
    let chain = &check_loop(space, scales, sp, chain)?;
    let deadline = budget
        .wall_ms
        .map(|ms| Instant::now() + std::time::Duration::from_millis(ms));
    let (h1, search) = rayon::join(
        || h1_witness_capped(space, scales, sp, chain, Some(budget.max_states), deadline),
        || null_search(space, scales, sp, chain, budget, deadline),
    );
    if let H1Outcome::Witness(cert) = h1? {
        debug_assert!(
            search.certificate.is_none(),
            "soundness exclusivity violated"
        );
        return Ok(Decision::NonNull(cert));
    }
    if let Some(cert) = search.certificate {
        return Ok(Decision::Null(cert));
    }
    // fall back to the full sequential cascade for the word route notes
    decide_null(space, scales, sp, chain, budget)
}

/// Constructive certificate that a loop lying strictly inside a ball is
/// null: insert the center after the base point, drain the loop through it,
/// then collapse.
pub fn ball_loop_certificate(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    chain: &Chain,
    center: usize,
) -> Result<HomotopyCertificate> {
    let chain = check_loop(space, scales, sp, chain)?;
    space.check_point(center)?;
    let threshold = scales.threshold(sp)?;
    for &p in &chain.points {
        if !scales.is_step(space, sp, p, center) {
            return Err(Error::OutsideBall {
                point: p,
                center,
                dist: space.d(p, center),
                scale: threshold,
            });
        }
    }
    let mut moves = Vec::new();
    let mut current = chain.clone();
    if current.len() > 2 {
        let ins = BasicMove::Insert {
            index: 1,
            point: center,
        };
        current = apply_move(space, &current, ins)?;
        moves.push(ins);
        // drain interior points through the center
        while current.len() > 3 {
            let rem = BasicMove::Remove { index: 2 };
            current = apply_move(space, &current, rem)?;
            moves.push(rem);
        }
        let rem = BasicMove::Remove { index: 1 };
        current = apply_move(space, &current, rem)?;
        moves.push(rem);
    }
    while current.len() > 1 {
        let rem = BasicMove::Remove { index: 1 };
        current = apply_move(space, &current, rem)?;
        moves.push(rem);
    }
    Ok(HomotopyCertificate {
        source: chain,
        moves,
        target: current,
    })
}

/// Certificate that `tail . head . tail^-1` is null when the head lies in a
/// ball at the scale: the head collapses through the center, then the tails
/// cancel.
pub fn lollipop_certificate(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    tail: &Chain,
    head: &Chain,
    center: usize,
) -> Result<HomotopyCertificate> {
    if !head.is_loop() {
        return Err(Error::NotBasedLoop {
            expected: head.start(),
        });
    }
    if tail.end() != head.start() {
        return Err(Error::ConcatMismatch {
            end: tail.end(),
            start: head.start(),
        });
    }
    let eps = scales.chain_scale(sp)?;
    let tail = &Chain::new(space, eps, tail.points.clone())?;
    let head = &Chain::new(space, eps, head.points.clone())?;
    let threshold = scales.threshold(sp)?;
    for &p in &head.points {
        if !scales.is_step(space, sp, p, center) {
            return Err(Error::OutsideBall {
                point: p,
                center,
                dist: space.d(p, center),
                scale: threshold,
            });
        }
    }
    let full = crate::chains::concat(
        &crate::chains::concat(tail, head)?,
        &crate::chains::reverse(tail),
    )?;
    let mut moves = Vec::new();
    let mut current = full.clone();
    let offset = tail.len() - 1; // index of the head's base inside `full`
    if head.len() > 2 {
        let ins = BasicMove::Insert {
            index: offset + 1,
            point: center,
        };
        current = apply_move(space, &current, ins)?;
        moves.push(ins);
        for _ in 0..(head.len() - 2) {
            let rem = BasicMove::Remove { index: offset + 2 };
            current = apply_move(space, &current, rem)?;
            moves.push(rem);
        }
        let rem = BasicMove::Remove { index: offset + 1 };
        current = apply_move(space, &current, rem)?;
        moves.push(rem);
    } else if head.len() == 2 {
        let rem = BasicMove::Remove { index: offset + 1 };
        current = apply_move(space, &current, rem)?;
        moves.push(rem);
    }
    // tails now cancel by free reduction
    let (constant, extra) = free_reduce_with_certificate(space, &current);
    moves.extend(extra);
    debug_assert!(constant.is_constant());
    Ok(HomotopyCertificate {
        source: full,
        moves,
        target: constant,
    })
}
