//! The covering topology made computable: coset membership of loop classes,
//! the left-invariant ultrametric on words, and the ball-lollipop inclusion
//! check.
//!
//! The distance between two classes is the first scale value at which their
//! difference becomes null. Kernel nesting makes this an ultrametric on the
//! finite scale grid whenever the decisions involved are conclusive;
//! inconclusive decisions propagate as skips, never guesses.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::homotopy::{coset_null_test, decide_null, lollipop_certificate, Budget, Decision};
use crate::rips::{
    chain_to_word, chain_valid_at, presentation, realize_word, Presentation, ScalePoint, ScaleSet,
    Word,
};
use crate::spaces::FiniteMetricSpace;

/// Where a word family lives: the reference scale point and its
/// presentation.
#[derive(Debug, Clone)]
pub struct WordContext {
    pub ref_sp: ScalePoint,
    pub pres: Presentation,
}

pub fn word_context(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ref_sp: ScalePoint,
) -> Result<WordContext> {
    let pres = presentation(space, scales, ref_sp, space.basepoint())?;
    Ok(WordContext { ref_sp, pres })
}

/// rho value: a scale-set distance, infinity, or unknown (some decision on
/// the way was inconclusive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Rho {
    Value(f64),
    Infinite,
    Unknown,
}

impl Rho {
    pub fn as_value(&self) -> Option<f64> {
        match self {
            Rho::Value(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Rho {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rho::Value(v) => write!(f, "{v}"),
            Rho::Infinite => write!(f, "inf"),
            Rho::Unknown => write!(f, "skip"),
        }
    }
}

/// Decide whether `h` lies in the coset `g K` at a scale point: the nullity
/// of g^-1 h there.
pub fn coset_member(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ctx: &WordContext,
    sp: ScalePoint,
    g: &Word,
    h: &Word,
    budget: &Budget,
) -> Result<Decision> {
    let w = g.inverse().concat(h).free_reduce();
    let lp = realize_word(scales, ctx.ref_sp, &ctx.pres, &w)?;
    decide_null(space, scales, sp, &lp, budget)
}

/// Per-scale component presentations, built once and shared by the scans.
struct ScanCache {
    presentations: Vec<Presentation>,
}

impl ScanCache {
    fn new(space: &FiniteMetricSpace, scales: &ScaleSet) -> Self {
        let presentations = (1..=scales.len())
            .map(|k| {
                crate::homotopy::component_presentation(
                    space,
                    scales,
                    ScalePoint::above(k),
                    space.basepoint(),
                )
            })
            .collect();
        ScanCache { presentations }
    }

    fn pres_at(&self, k: usize) -> &Presentation {
        &self.presentations[k - 1]
    }
}

fn rho_scan(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ctx: &WordContext,
    cache: &ScanCache,
    g: &Word,
    h: &Word,
    budget: &Budget,
) -> Result<Rho> {
    let w = g.inverse().concat(h).free_reduce();
    if w.is_identity() {
        return Ok(Rho::Value(0.0));
    }
    let lp = realize_word(scales, ctx.ref_sp, &ctx.pres, &w)?;
    // null at the reference scale itself means distance zero
    let ref_word = chain_to_word(space, scales, ctx.ref_sp, &ctx.pres, &lp)?;
    let mut tainted = false;
    match coset_null_test(&ctx.pres, &ref_word, budget) {
        Some(true) => return Ok(Rho::Value(0.0)),
        Some(false) => {}
        None => match decide_null(space, scales, ctx.ref_sp, &lp, budget)? {
            Decision::Null(_) => return Ok(Rho::Value(0.0)),
            Decision::NonNull(_) => {}
            Decision::Inconclusive(_) => tainted = true,
        },
    }
    for k in 1..=scales.len() {
        let sp = ScalePoint::above(k);
        if !chain_valid_at(space, scales, sp, &lp) {
            continue;
        }
        let pres_k = cache.pres_at(k);
        let word_k = chain_to_word(space, scales, sp, pres_k, &lp);
        let word_verdict = match word_k {
            Ok(wk) => coset_null_test(pres_k, &wk, budget),
            Err(_) => None,
        };
        match word_verdict {
            Some(true) => {
                return Ok(if tainted {
                    Rho::Unknown
                } else {
                    Rho::Value(scales.value(k)?)
                })
            }
            Some(false) => continue,
            None => match decide_null(space, scales, sp, &lp, budget)? {
                Decision::Null(_) => {
                    return Ok(if tainted {
                        Rho::Unknown
                    } else {
                        Rho::Value(scales.value(k)?)
                    })
                }
                Decision::NonNull(_) => continue,
                Decision::Inconclusive(_) => {
                    tainted = true;
                    continue;
                }
            },
        }
    }
    // every loop dies by the top of the scale set; reaching this point means
    // decisions ran out
    Ok(if tainted { Rho::Unknown } else { Rho::Infinite })
}

/// The first-null scale of g^-1 h over the scale grid.
pub fn ultrametric_value(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ctx: &WordContext,
    g: &Word,
    h: &Word,
    budget: &Budget,
) -> Result<Rho> {
    let cache = ScanCache::new(space, scales);
    rho_scan(space, scales, ctx, &cache, g, h, budget)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UltrametricTable {
    pub reference: ScalePoint,
    pub words: Vec<Word>,
    pub rho: Vec<Vec<Rho>>,
}

/// Pairwise rho matrix over a word family.
pub fn ultrametric_table(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ctx: &WordContext,
    words: &[Word],
    budget: &Budget,
) -> Result<UltrametricTable> {
    let pairs: Vec<(usize, usize)> = (0..words.len())
        .flat_map(|i| (i..words.len()).map(move |j| (i, j)))
        .collect();
    let cache = ScanCache::new(space, scales);
    let compute = |&(i, j): &(usize, usize)| -> Result<((usize, usize), Rho)> {
        let r = rho_scan(space, scales, ctx, &cache, &words[i], &words[j], budget)?;
        Ok(((i, j), r))
    };
    #[cfg(feature = "parallel")]
    let computed: Result<Vec<((usize, usize), Rho)>> = {
        use rayon::prelude::*;
        pairs.par_iter().map(compute).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let computed: Result<Vec<((usize, usize), Rho)>> = pairs.iter().map(compute).collect();
    let mut rho = vec![vec![Rho::Value(0.0); words.len()]; words.len()];
    for ((i, j), r) in computed? {
        rho[i][j] = r;
        rho[j][i] = r;
    }
    Ok(UltrametricTable {
        reference: ctx.ref_sp,
        words: words.to_vec(),
        rho,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UltrametricReport {
    pub table: UltrametricTable,
    pub violations: Vec<String>,
    pub skipped_pairs: usize,
    pub skipped_triples: usize,
}

/// Check the ultrametric axioms on all conclusive entries of the table:
/// identity, symmetry (recomputed both ways), the strong triangle
/// inequality, and structural left invariance.
pub fn verify_ultrametric(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    ctx: &WordContext,
    words: &[Word],
    budget: &Budget,
) -> Result<UltrametricReport> {
    let table = ultrametric_table(space, scales, ctx, words, budget)?;
    let mut violations = Vec::new();
    let mut skipped_pairs = 0usize;
    let n = words.len();
    for i in 0..n {
        match table.rho[i][i] {
            Rho::Value(0.0) => {}
            other => violations.push(format!("rho({i},{i}) = {other} != 0")),
        }
    }
    // symmetry: recompute the transposed direction independently
    let cache = ScanCache::new(space, scales);
    for i in 0..n {
        for j in (i + 1)..n {
            let back = rho_scan(space, scales, ctx, &cache, &words[j], &words[i], budget)?;
            if matches!(table.rho[i][j], Rho::Unknown) || matches!(back, Rho::Unknown) {
                skipped_pairs += 1;
                continue;
            }
            if back != table.rho[i][j] {
                violations.push(format!(
                    "rho({i},{j}) = {} but rho({j},{i}) = {back}",
                    table.rho[i][j]
                ));
            }
        }
    }
    // rho values live on the scale grid
    for i in 0..n {
        for j in 0..n {
            if let Rho::Value(v) = table.rho[i][j] {
                if v != 0.0 && !scales.values().contains(&v) {
                    violations.push(format!("rho({i},{j}) = {v} is not a scale value"));
                }
            }
        }
    }
    // strong triangle inequality on conclusive triples
    let mut skipped_triples = 0usize;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                match (table.rho[i][k], table.rho[i][j], table.rho[j][k]) {
                    (Rho::Value(ik), Rho::Value(ij), Rho::Value(jk)) => {
                        if ik > ij.max(jk) + 1e-12 {
                            violations.push(format!(
                                "strong triangle fails: rho({i},{k}) = {ik} > max({ij}, {jk})"
                            ));
                        }
                    }
                    _ => skipped_triples += 1,
                }
            }
        }
    }
    // left invariance is structural: (wg)^-1 (wh) reduces to g^-1 h
    for w in words.iter().take(3) {
        for i in 0..n {
            for j in 0..n {
                let direct = words[i].inverse().concat(&words[j]).free_reduce();
                let translated = w
                    .concat(&words[i])
                    .inverse()
                    .concat(&w.concat(&words[j]))
                    .free_reduce();
                if direct != translated {
                    violations.push(format!("left invariance failed structurally at ({i},{j})"));
                }
            }
        }
    }
    Ok(UltrametricReport {
        table,
        violations,
        skipped_pairs,
        skipped_triples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanierReport {
    pub scale_index: usize,
    pub checked: usize,
    pub confirmed: usize,
    pub failures: Vec<String>,
    pub truncated: bool,
}

/// Confirm that every lollipop whose head lies in a ball of radius d_k is
/// null just above d_k, via explicit certificates. Heads are triangle loops
/// inside closed balls; tails run along the spanning tree.
pub fn spanier_check(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    k: usize,
    budget: &Budget,
) -> Result<SpanierReport> {
    let value = scales.value(k)?;
    let sp = ScalePoint::above(k);
    let pres = crate::homotopy::component_presentation(space, scales, sp, space.basepoint());
    let n = space.n();
    let eps = scales.chain_scale(sp)?;
    let mut checked = 0usize;
    let mut confirmed = 0usize;
    let mut failures = Vec::new();
    let mut truncated = false;
    'outer: for center in 0..n {
        let ball: Vec<usize> = (0..n).filter(|&p| space.d(p, center) <= value).collect();
        for (ai, &a) in ball.iter().enumerate() {
            if pres.tree_depth[a] == usize::MAX {
                continue;
            }
            for (bi, &b) in ball.iter().enumerate().skip(ai + 1) {
                if !scales.is_edge(space, sp, a, b) {
                    continue;
                }
                for &c in ball.iter().skip(bi + 1) {
                    if !scales.is_edge(space, sp, a, c) || !scales.is_edge(space, sp, b, c) {
                        continue;
                    }
                    if checked >= budget.max_states {
                        truncated = true;
                        break 'outer;
                    }
                    checked += 1;
                    let tail = crate::chains::Chain {
                        scale: eps,
                        points: pres.path_from_base(a),
                    };
                    let head = crate::chains::Chain {
                        scale: eps,
                        points: vec![a, b, c, a],
                    };
                    match lollipop_certificate(space, scales, sp, &tail, &head, center) {
                        Ok(cert) => match cert.replay(space) {
                            Ok(states) if states.last().map(|s| s.is_constant()) == Some(true) => {
                                confirmed += 1;
                            }
                            _ => failures.push(format!(
                                "certificate replay failed for head ({a},{b},{c}) at center {center}"
                            )),
                        },
                        Err(e) => failures.push(format!(
                            "no certificate for head ({a},{b},{c}) at center {center}: {e}"
                        )),
                    }
                }
            }
        }
    }
    Ok(SpanierReport {
        scale_index: k,
        checked,
        confirmed,
        failures,
        truncated,
    })
}
