//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured numbers. Tolerances are pinned here, in code.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use covspec::chains::{chain_distance, e_gap, Chain};
use covspec::covers::{build_cover, deck_apply, displacement, lift_chain};
use covspec::fixtures::SplitRng;
use covspec::homotopy::{bfs_null_search, decide_null, h1_witness, verify_h1, Budget, Decision};
use covspec::rips::{scale_set, ScalePoint, Word};
use covspec::spaces::{hawaiian_truncation, product_space, sample_circle, wedge};
use covspec::spectrum::{
    covering_value, critical_spectrum, family_report, homology_spectrum, Family, Level,
};
use covspec::topology::{verify_ultrametric, word_context, Rho};

/// Criterion 1: the sampled circle has the single critical value r/3 with
/// replaying certificates, within 6/n, in under 30 s per sample size.
#[test]
fn acceptance_1_circle_spectrum() {
    let budget = Budget::default();
    for n in [12usize, 24, 48] {
        let start = Instant::now();
        let space = sample_circle(3.0, n).unwrap();
        let report = critical_spectrum(&space, &budget);
        let elapsed = start.elapsed();
        assert_eq!(
            report.entries.len(),
            1,
            "circle(3,{n}) must have one critical value"
        );
        let entry = &report.entries[0];
        let tolerance = 6.0 / n as f64;
        assert!(
            (entry.value - 1.0).abs() <= tolerance,
            "circle(3,{n}): value {} not within {tolerance} of 1.0",
            entry.value
        );
        assert_eq!(
            entry.level,
            Level::GroupConfirmed,
            "circle(3,{n}) must be group confirmed"
        );
        // certificates replay from scratch
        let scales = scale_set(&space);
        match &entry.at_evidence {
            Decision::NonNull(cert) => {
                verify_h1(
                    &space,
                    &scales,
                    ScalePoint::at(entry.scale_index),
                    &entry.witness,
                    cert,
                )
                .unwrap();
            }
            other => panic!("expected NonNull at evidence, got {other:?}"),
        }
        match &entry.above_evidence {
            Decision::Null(cert) => {
                let states = cert.replay(&space).unwrap();
                assert!(states.last().unwrap().is_constant());
            }
            other => panic!("expected Null above evidence, got {other:?}"),
        }
        assert!(
            elapsed <= Duration::from_secs(30),
            "circle(3,{n}) took {elapsed:?}, budget is 30 s"
        );
        println!(
            "ACCEPTANCE 1 (circle spectrum, n={n}): PASS - value {} (|err| <= {tolerance}), GroupConfirmed, {elapsed:?}",
            entry.value
        );
    }
}

/// Criterion 2: the 24x24 torus sample has exactly one critical value within
/// 0.08 of each of 0.5 and 0.25 and nothing else in those windows, with at
/// least homology-exact certification, in under 5 minutes.
#[test]
fn acceptance_2_torus_product() {
    let start = Instant::now();
    let a = sample_circle(1.5, 24).unwrap();
    let b = sample_circle(0.75, 24).unwrap();
    let torus = product_space(&a, &b).unwrap();
    let budget = Budget {
        max_states: 5_000,
        max_coset_rows: 500,
        ..Budget::default()
    };
    let report = critical_spectrum(&torus, &budget);
    let elapsed = start.elapsed();
    let near = |target: f64| -> Vec<f64> {
        report
            .entries
            .iter()
            .map(|e| e.value)
            .filter(|v| (v - target).abs() <= 0.08)
            .collect()
    };
    let near_half = near(0.5);
    let near_quarter = near(0.25);
    assert_eq!(
        near_half.len(),
        1,
        "need exactly one value near 0.5, got {near_half:?}"
    );
    assert_eq!(
        near_quarter.len(),
        1,
        "need exactly one value near 0.25, got {near_quarter:?}"
    );
    // every entry is at least homology exact by construction; record levels
    let levels: Vec<Level> = report.entries.iter().map(|e| e.level).collect();
    assert!(
        elapsed <= Duration::from_secs(300),
        "torus spectrum took {elapsed:?}, budget is 5 min"
    );
    println!(
        "ACCEPTANCE 2 (torus product): PASS - values near targets {:?} / {:?}, all values {:?}, levels {levels:?}, {elapsed:?}",
        near_half,
        near_quarter,
        report.entries.iter().map(|e| e.value).collect::<Vec<_>>()
    );
}

/// Criterion 3: Hawaiian truncations k = 1..4 show spectrum counts 1,2,3,4
/// with strictly decreasing minima and the no-universal-cover diagnostic.
#[test]
fn acceptance_3_hawaiian_growth() {
    let report = family_report(&Family::Hawaiian { n_per_circle: 24 }, 1, 4).unwrap();
    let counts: Vec<usize> = report.rows.iter().map(|r| r.count).collect();
    assert_eq!(
        counts,
        vec![1, 2, 3, 4],
        "spectrum counts must grow 1,2,3,4"
    );
    let minima: Vec<f64> = report.rows.iter().map(|r| r.min_value.unwrap()).collect();
    assert!(
        minima.windows(2).all(|w| w[1] < w[0]),
        "minima must strictly decrease, got {minima:?}"
    );
    assert!(
        report.limit_space_has_no_universal_cover,
        "growth diagnostic flag must be raised"
    );
    println!(
        "ACCEPTANCE 3 (hawaiian growth): PASS - counts {counts:?}, minima {minima:?}, flag raised"
    );
}

/// Criterion 4: 1000 randomized pairs satisfying D < E/2 all produce valid
/// replaying certificates within 60 s.
#[test]
fn acceptance_4_close_chain_suite() {
    let start = Instant::now();
    let mut rng = SplitRng::new(2024);
    let spaces: Vec<covspec::spaces::FiniteMetricSpace> = vec![
        sample_circle(8.0, 64).unwrap(),
        sample_circle(3.0, 48).unwrap(),
        common::random_space(32, 501),
        common::random_space(64, 502),
        common::random_space(17, 503),
    ];
    let mut produced = 0usize;
    let mut attempts = 0usize;
    while produced < 1000 {
        attempts += 1;
        assert!(attempts < 50_000, "pair generation stalled");
        let space = &spaces[rng.below(spaces.len())];
        let n = space.n();
        let mut points = vec![rng.below(n)];
        let len = 3 + rng.below(12);
        for _ in 0..len {
            let cur = *points.last().unwrap();
            let next = (0..n).filter(|&q| q != cur).nth(rng.below(n - 1)).unwrap();
            points.push(next);
        }
        let max_step = points
            .windows(2)
            .map(|w| space.d(w[0], w[1]))
            .fold(0.0f64, f64::max);
        let eps = max_step * (1.2 + rng.unit());
        let a = Chain::new(space, eps, points).unwrap();
        let e = e_gap(space, &a);
        let mut b_points = a.points.clone();
        for p in b_points.iter_mut().take(a.len() - 1).skip(1) {
            let cands: Vec<usize> = (0..n).filter(|&q| space.d(q, *p) < 0.9 * e / 2.0).collect();
            if !cands.is_empty() {
                *p = cands[rng.below(cands.len())];
            }
        }
        let b = Chain {
            scale: eps,
            points: b_points,
        };
        let d = chain_distance(space, &a, &b).unwrap();
        if !(d < e / 2.0) {
            continue;
        }
        let cert = covspec::chains::close_chain_certificate(space, &a, &b)
            .expect("precondition satisfied, lemma guarantees the schedule");
        let states = cert.replay(space).unwrap();
        assert_eq!(states.last().unwrap().points, b.points);
        produced += 1;
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed <= Duration::from_secs(60),
        "suite took {elapsed:?}, budget 60 s"
    );
    println!(
        "ACCEPTANCE 4 (close-chain suite): PASS - {produced} certificates replayed ({attempts} attempts), {elapsed:?}"
    );
}

struct SweepRecord {
    space_idx: usize,
    loop_idx: usize,
    scale_rank: usize,
    kind: &'static str,
}

struct Sweep {
    records: Vec<SweepRecord>,
    loops_decided: usize,
    inconclusive: usize,
}

fn nullity_sweep() -> &'static Sweep {
    static SWEEP: OnceLock<Sweep> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let budget = Budget {
            max_states: 300_000,
            max_chain_len: 12,
            ..Budget::default()
        };
        let spaces = common::small_corpus(8, 0..12);
        let mut rng = SplitRng::new(777);
        let mut records = Vec::new();
        let mut loops_decided = 0usize;
        let mut inconclusive = 0usize;
        let mut loop_idx = 0usize;
        'outer: for (space_idx, space) in spaces.iter().enumerate() {
            let (scales, points) = common::all_scale_points(space);
            for _attempt in 0..60 {
                // loops are generated at the finest scale where they exist and
                // then examined at every coarser point
                let Some(lp) = points
                    .iter()
                    .find_map(|&sp| common::random_loop(space, &scales, sp, &mut rng, 8))
                else {
                    continue;
                };
                loop_idx += 1;
                if loop_idx > 500 {
                    break 'outer;
                }
                loops_decided += 1;
                for (rank, &sp) in points.iter().enumerate() {
                    if !covspec::rips::chain_valid_at(space, &scales, sp, &lp) {
                        continue;
                    }
                    let rebased =
                        Chain::new(space, scales.chain_scale(sp).unwrap(), lp.points.clone())
                            .unwrap();
                    // independent strategy runs
                    let h1 = h1_witness(space, &scales, sp, &rebased).unwrap();
                    let bfs = bfs_null_search(space, &scales, sp, &rebased, &budget).unwrap();
                    // soundness exclusivity, verified from scratch
                    if let Some(cert) = &h1 {
                        verify_h1(space, &scales, sp, &rebased, cert).unwrap();
                    }
                    if let Some(cert) = &bfs {
                        cert.replay(space).unwrap();
                    }
                    assert!(
                        !(h1.is_some() && bfs.is_some()),
                        "loop received both a null certificate and a homology witness"
                    );
                    let cascade = decide_null(space, &scales, sp, &rebased, &budget).unwrap();
                    #[cfg(feature = "parallel")]
                    {
                        let racing = covspec::homotopy::decide_null_racing(
                            space, &scales, sp, &rebased, &budget,
                        )
                        .unwrap();
                        assert_eq!(
                            cascade.kind(),
                            racing.kind(),
                            "verdict kind must not depend on scheduling"
                        );
                    }
                    let kind = match &cascade {
                        Decision::Null(cert) => {
                            cert.replay(space).unwrap();
                            assert!(h1.is_none());
                            "null"
                        }
                        Decision::NonNull(cert) => {
                            verify_h1(space, &scales, sp, &rebased, cert).unwrap();
                            assert!(bfs.is_none());
                            "nonnull"
                        }
                        Decision::Inconclusive(_) => {
                            inconclusive += 1;
                            "inconclusive"
                        }
                    };
                    records.push(SweepRecord {
                        space_idx,
                        loop_idx,
                        scale_rank: rank,
                        kind,
                    });
                }
            }
        }
        Sweep {
            records,
            loops_decided,
            inconclusive,
        }
    })
}

/// Criterion 5: soundness exclusivity over 500 random loops on spaces with
/// at most 8 points, across strategies and scheduling.
#[test]
fn acceptance_5_nullity_soundness() {
    let sweep = nullity_sweep();
    assert!(
        sweep.loops_decided >= 500,
        "need 500 loops, got {}",
        sweep.loops_decided
    );
    println!(
        "ACCEPTANCE 5 (nullity soundness): PASS - {} loops, {} decisions, no Null/NonNull conflicts, {} inconclusive",
        sweep.loops_decided,
        sweep.records.len(),
        sweep.inconclusive
    );
}

/// Criterion 6: kernel nesting: Null at a finer scale never pairs with
/// NonNull at a coarser one.
#[test]
fn acceptance_6_kernel_nesting() {
    let sweep = nullity_sweep();
    use std::collections::HashMap;
    let mut per_loop: HashMap<(usize, usize), Vec<(usize, &'static str)>> = HashMap::new();
    for r in &sweep.records {
        per_loop
            .entry((r.space_idx, r.loop_idx))
            .or_default()
            .push((r.scale_rank, r.kind));
    }
    let mut violations = 0usize;
    for decisions in per_loop.values() {
        for &(fine_rank, fine_kind) in decisions {
            for &(coarse_rank, coarse_kind) in decisions {
                if fine_rank < coarse_rank && fine_kind == "null" && coarse_kind == "nonnull" {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0, "kernel nesting violated {violations} times");
    println!(
        "ACCEPTANCE 6 (kernel nesting): PASS - zero violations over {} loop/scale decisions",
        sweep.records.len()
    );
}

/// Criterion 7: lift status through a materialized cover matches the
/// nullity verdict for every conclusive loop on spaces with at most 10
/// points.
#[test]
fn acceptance_7_lifting_coherence() {
    let budget = Budget {
        max_states: 300_000,
        max_chain_len: 12,
        max_coset_rows: 50_000,
        ..Budget::default()
    };
    let spaces = common::small_corpus(10, 100..112);
    let mut rng = SplitRng::new(4242);
    let mut checked = 0usize;
    let mut complete_covers = 0usize;
    for space in &spaces {
        let (scales, points) = common::all_scale_points(space);
        for _ in 0..25 {
            let Some(lp) = points
                .iter()
                .find_map(|&sp| common::random_loop(space, &scales, sp, &mut rng, 8))
            else {
                continue;
            };
            for &sp in &points {
                if !covspec::rips::chain_valid_at(space, &scales, sp, &lp) {
                    continue;
                }
                if covspec::rips::presentation(space, &scales, sp, space.basepoint()).is_err() {
                    continue; // cover needs a spanning Rips graph
                }
                let rebased =
                    Chain::new(space, scales.chain_scale(sp).unwrap(), lp.points.clone()).unwrap();
                let decision = decide_null(space, &scales, sp, &rebased, &budget).unwrap();
                if decision.is_inconclusive() {
                    continue;
                }
                let radius = rebased.len() + 2;
                let cover = build_cover(space, &scales, sp, radius, &budget).unwrap();
                let start = cover
                    .find_vertex(rebased.start(), 0)
                    .expect("identity-class vertex over the loop base");
                let (_, closed) = lift_chain(&cover, space, &scales, &rebased, start).unwrap();
                assert_eq!(
                    closed,
                    decision.is_null(),
                    "lift status must match the verdict (complete cover: {})",
                    cover.complete
                );
                checked += 1;
                if cover.complete {
                    complete_covers += 1;
                }
            }
        }
    }
    assert!(checked >= 200, "too few conclusive lift checks: {checked}");
    println!(
        "ACCEPTANCE 7 (lifting coherence): PASS - {checked} conclusive loops matched ({complete_covers} on complete covers)"
    );
}

/// Criterion 8: on every complete cover in the corpus, nontrivial deck
/// elements displace by at least the scale value; the identity by zero.
#[test]
fn acceptance_8_displacement_bound() {
    let budget = Budget {
        max_coset_rows: 50_000,
        ..Budget::default()
    };
    let mut corpus: Vec<(covspec::spaces::FiniteMetricSpace, Vec<ScalePoint>)> = Vec::new();
    let triangle = sample_circle(1.0, 3).unwrap();
    corpus.push((triangle, vec![ScalePoint::above(1)]));
    let c4 = sample_circle(4.0, 4).unwrap();
    corpus.push((c4, vec![ScalePoint::above(2)]));
    let circle = sample_circle(3.0, 12).unwrap();
    corpus.push((circle, vec![ScalePoint::above(4), ScalePoint::above(6)]));
    let rp2 = covspec::fixtures::flag_projective_plane();
    corpus.push((rp2, vec![ScalePoint::above(1), ScalePoint::above(2)]));
    for seed in 0..4u64 {
        let space = common::random_space(7, 9000 + seed);
        let scales = scale_set(&space);
        let coarsest = ScalePoint::above(scales.len());
        corpus.push((space, vec![coarsest]));
    }

    let mut covers_checked = 0usize;
    let mut nontrivial_checked = 0usize;
    for (space, scale_points) in &corpus {
        let scales = scale_set(space);
        for &sp in scale_points {
            let cover = match build_cover(space, &scales, sp, 64, &budget) {
                Ok(c) if c.complete => c,
                _ => continue,
            };
            covers_checked += 1;
            let scale_value = scales.value(sp.index).unwrap();
            for deck in cover.deck_elements().unwrap() {
                let disp = displacement(&cover, &deck).unwrap();
                if deck.class == 0 {
                    assert_eq!(disp, 0.0, "identity must not displace");
                } else {
                    nontrivial_checked += 1;
                    assert!(
                        disp >= scale_value,
                        "deck element displaced {disp} < scale {scale_value}"
                    );
                    // action is free
                    for v in 0..cover.vertex_count() {
                        assert_ne!(deck_apply(&cover, &deck, v).unwrap(), v);
                    }
                }
            }
        }
    }
    assert!(
        covers_checked >= 8,
        "too few complete covers: {covers_checked}"
    );
    assert!(
        nontrivial_checked >= 1,
        "corpus must include a nontrivial deck element"
    );
    println!(
        "ACCEPTANCE 8 (displacement bound): PASS - {covers_checked} complete covers, {nontrivial_checked} nontrivial deck elements bounded below by their scale"
    );
}

/// Criterion 9: ultrametric axioms hold with zero violations on the circle
/// word set (length <= 14) and the wedge example; the covering rescale is
/// bitwise exact on every report.
#[test]
fn acceptance_9_ultrametric_axioms() {
    let budget = Budget::default();

    // circle(3,12), all reduced words of length <= 14 over the single
    // generator at the finest scale
    let circle = sample_circle(3.0, 12).unwrap();
    let scales = scale_set(&circle);
    let ctx = word_context(&circle, &scales, ScalePoint::above(1)).unwrap();
    assert_eq!(ctx.pres.n_generators(), 1);
    let mut words = vec![Word::identity()];
    for j in 1..=14i32 {
        words.push(Word(vec![1; j as usize]));
        words.push(Word(vec![-1; j as usize]));
    }
    let report = verify_ultrametric(&circle, &scales, &ctx, &words, &budget).unwrap();
    assert!(
        report.violations.is_empty(),
        "circle violations: {:?}",
        report.violations
    );
    assert_eq!(
        report.skipped_pairs, 0,
        "circle scan must be fully conclusive"
    );

    // wedge(circle(1,16), circle(2,16)): the two factor loops and products
    let a = sample_circle(1.0, 16).unwrap();
    let b = sample_circle(2.0, 16).unwrap();
    let w = wedge(&a, &b, 0, 0).unwrap();
    let wscales = scale_set(&w);
    let ref_sp = (1..=wscales.len())
        .map(ScalePoint::above)
        .find(|&sp| covspec::rips::presentation(&w, &wscales, sp, 0).is_ok())
        .expect("a connected scale exists");
    let wctx = word_context(&w, &wscales, ref_sp).unwrap();
    let eps = wscales.chain_scale(ref_sp).unwrap();
    let loop_a = Chain::new(&w, eps, (0..16).chain([0]).collect()).unwrap();
    let loop_b = Chain::new(
        &w,
        eps,
        std::iter::once(0).chain(16..31).chain([0]).collect(),
    )
    .unwrap();
    let wa = covspec::rips::chain_to_word(&w, &wscales, ref_sp, &wctx.pres, &loop_a).unwrap();
    let wb = covspec::rips::chain_to_word(&w, &wscales, ref_sp, &wctx.pres, &loop_b).unwrap();
    let wwords = vec![
        Word::identity(),
        wa.clone(),
        wa.inverse(),
        wb.clone(),
        wb.inverse(),
        wa.concat(&wb).free_reduce(),
        wb.concat(&wa).free_reduce(),
        wa.concat(&wb.inverse()).free_reduce(),
        wa.concat(&wa).free_reduce(),
        wb.concat(&wb).free_reduce(),
    ];
    let wreport = verify_ultrametric(&w, &wscales, &wctx, &wwords, &budget).unwrap();
    assert!(
        wreport.violations.is_empty(),
        "wedge violations: {:?}",
        wreport.violations
    );
    // pairs whose difference is a commutator are homology-blind and may be
    // skipped; skips are not violations
    assert!(
        wreport.skipped_pairs <= 2,
        "unexpected skips: {}",
        wreport.skipped_pairs
    );
    // the two factor loops die at two distinct positive scales
    let rho_a = wreport.table.rho[0][1];
    let rho_b = wreport.table.rho[0][3];
    let (Rho::Value(va), Rho::Value(vb)) = (rho_a, rho_b) else {
        panic!("generator distances must be conclusive");
    };
    assert!(
        va > 0.0 && vb > 0.0 && va != vb,
        "expected two distinct positive values"
    );

    // bitwise rescaling identity across spectrum reports
    for space in [&circle, &w] {
        let report = critical_spectrum(space, &budget);
        for (e, c) in report.entries.iter().zip(&report.covering_spectrum) {
            assert_eq!(c.to_bits(), (e.value * 3.0 / 2.0).to_bits());
            assert_eq!(c.to_bits(), covering_value(e.value).to_bits());
        }
    }
    println!(
        "ACCEPTANCE 9 (ultrametric axioms): PASS - circle words (29) and wedge words (10) verified with zero violations ({} skipped commutator pair(s)), factor scales {va} / {vb}, rescale bitwise",
        wreport.skipped_pairs
    );
}

/// The homology spectrum agrees with reported entries on every corpus space
/// (reported values are death transitions and members of the scale set).
#[test]
fn spectrum_values_live_on_the_scale_set() {
    for space in common::small_corpus(8, 300..306) {
        let scales = scale_set(&space);
        for v in homology_spectrum(&space) {
            assert!(scales.values().contains(&v));
        }
    }
    let h = hawaiian_truncation(3, 12).unwrap();
    let scales = scale_set(&h);
    for v in homology_spectrum(&h) {
        assert!(scales.values().contains(&v));
    }
    println!("ACCEPTANCE extra (spectrum on grid): PASS");
}
