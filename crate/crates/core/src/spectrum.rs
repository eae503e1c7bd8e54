//! The critical spectrum of a finite metric space: scale values where some
//! loop class dies, each with a witness loop and two-sided evidence, plus
//! the 3/2-rescaled covering spectrum and family growth diagnostics.

use serde::{Deserialize, Serialize};

use crate::chains::Chain;
use crate::error::{Error, Result};
use crate::homotopy::{decide_null, verify_h1, Budget, BudgetReport, Decision, H1Certificate};
use crate::persistence::{cycle_to_loop, h1_transitions, DeathRecord};
use crate::rips::{scale_set, ScalePoint, ScaleSet};
use crate::spaces::FiniteMetricSpace;

/// How strongly a critical value is certified. Homology arithmetic is exact
/// either way; group confirmation additionally carries replayable
/// certificates on both sides of the transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Level {
    HomologyExact,
    GroupConfirmed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: f64,
    /// 1-based index of `value` in the scale set.
    pub scale_index: usize,
    /// Kernel dimension of the transition at this value.
    pub multiplicity: usize,
    pub level: Level,
    pub witness: Chain,
    /// Expected NonNull at the AT side.
    pub at_evidence: Decision,
    /// Expected Null at the ABOVE side.
    pub above_evidence: Decision,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Entries sorted by value, descending.
    pub entries: Vec<SpectrumEntry>,
    /// Exactly value * 3 / 2, aligned with `entries`.
    pub covering_spectrum: Vec<f64>,
    /// Scale indices whose ABOVE-side decision was inconclusive.
    pub inconclusive_scales: Vec<usize>,
}

/// The covering-spectrum rescaling, applied bitwise-identically everywhere.
pub fn covering_value(v: f64) -> f64 {
    v * 3.0 / 2.0
}

/// Critical values by exact homology, ascending.
pub fn homology_spectrum(space: &FiniteMetricSpace) -> Vec<f64> {
    h1_transitions(space).critical_values()
}

/// Witness loop and two-sided evidence for one death record.
pub(crate) fn witness_evidence(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    scale_index: usize,
    value: f64,
    death: &DeathRecord,
    budget: &Budget,
) -> (Chain, Decision, Decision) {
    // the dual witness when it stitches; otherwise the birth cycle, which is
    // one closed walk and always does
    let (witness, isolated) =
        match cycle_to_loop(space, value, &death.witness_cycle, space.basepoint()) {
            Some(w) => (w, death.clean),
            None => (
                cycle_to_loop(space, value, &death.fallback_cycle, space.basepoint())
                    .expect("a birth cycle is a single closed walk"),
                false,
            ),
        };
    let at_sp = ScalePoint::at(scale_index);
    let at_evidence = match &death.certificate {
        Some(entries) => {
            let cert = H1Certificate {
                edges: entries.iter().map(|(e, _)| *e).collect(),
                values: entries.iter().map(|(_, v)| *v).collect(),
                loop_pairing: 0,
            };
            match finalize_certificate(space, scales, at_sp, &witness, cert) {
                Some(c) => Decision::NonNull(c),
                None => fallback_h1(space, scales, at_sp, &witness),
            }
        }
        None => fallback_h1(space, scales, at_sp, &witness),
    };
    let above_sp = ScalePoint::above(scale_index);
    let above_evidence = if isolated {
        decide_null(space, scales, above_sp, &witness, budget).unwrap_or_else(|e| {
            Decision::Inconclusive(BudgetReport {
                notes: vec![format!("above-side decision failed: {e}")],
                ..Default::default()
            })
        })
    } else {
        Decision::Inconclusive(BudgetReport {
            notes: vec![
                "witness not isolated from surviving classes; above-side nullity not attempted"
                    .into(),
            ],
            ..Default::default()
        })
    };
    (witness, at_evidence, above_evidence)
}

fn finalize_certificate(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    witness: &Chain,
    cert: H1Certificate,
) -> Option<H1Certificate> {
    // recompute the pairing against the stitched loop, then verify in full
    let mut by_edge = std::collections::HashMap::new();
    for (e, v) in cert.edges.iter().zip(&cert.values) {
        by_edge.insert(*e, *v as i128);
    }
    let mut acc: i128 = 0;
    for w in witness.points.windows(2) {
        let (x, y) = (w[0], w[1]);
        if x == y {
            continue;
        }
        let (u, v, sign) = if x < y { (x, y, 1) } else { (y, x, -1) };
        acc += sign * by_edge.get(&(u, v)).copied().unwrap_or(0);
    }
    let pairing = i64::try_from(acc).ok()?;
    if pairing == 0 {
        return None;
    }
    let cert = H1Certificate {
        loop_pairing: pairing,
        ..cert
    };
    verify_h1(space, scales, sp, witness, &cert).ok()?;
    Some(cert)
}

fn fallback_h1(
    space: &FiniteMetricSpace,
    scales: &ScaleSet,
    sp: ScalePoint,
    witness: &Chain,
) -> Decision {
    match crate::homotopy::h1_witness(space, scales, sp, witness) {
        Ok(Some(cert)) => Decision::NonNull(cert),
        _ => Decision::Inconclusive(BudgetReport {
            notes: vec!["no homology certificate for the stitched witness".into()],
            ..Default::default()
        }),
    }
}

/// Compute the critical spectrum with witnesses and evidence. Per-value
/// confirmations run in parallel when the `parallel` feature is on; the
/// merge is deterministic.
pub fn critical_spectrum(space: &FiniteMetricSpace, budget: &Budget) -> SpectrumReport {
    let scales = scale_set(space);
    let transitions = h1_transitions(space);
    let critical: Vec<(usize, f64, &DeathRecord, usize)> = transitions
        .steps
        .iter()
        .filter(|s| s.kernel_dim > 0)
        .map(|s| (s.scale_index, s.value, &s.deaths[0], s.kernel_dim))
        .collect();

    let build =
        |&(k, value, death, multiplicity): &(usize, f64, &DeathRecord, usize)| -> SpectrumEntry {
            let (witness, at_evidence, above_evidence) =
                witness_evidence(space, &scales, k, value, death, budget);
            let level = if at_evidence.is_non_null() && above_evidence.is_null() {
                Level::GroupConfirmed
            } else {
                Level::HomologyExact
            };
            SpectrumEntry {
                value,
                scale_index: k,
                multiplicity,
                level,
                witness,
                at_evidence,
                above_evidence,
            }
        };

    #[cfg(feature = "parallel")]
    let mut entries: Vec<SpectrumEntry> = {
        use rayon::prelude::*;
        critical.par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let mut entries: Vec<SpectrumEntry> = critical.iter().map(build).collect();

    entries.sort_by(|a, b| b.value.total_cmp(&a.value));
    let covering_spectrum = entries.iter().map(|e| covering_value(e.value)).collect();
    let inconclusive_scales = entries
        .iter()
        .filter(|e| e.above_evidence.is_inconclusive())
        .map(|e| e.scale_index)
        .collect();
    SpectrumReport {
        entries,
        covering_spectrum,
        inconclusive_scales,
    }
}

/// The rescaled spectrum of a computed report.
pub fn covering_spectrum(report: &SpectrumReport) -> Vec<f64> {
    report
        .entries
        .iter()
        .map(|e| covering_value(e.value))
        .collect()
}

/// A one-parameter family of spaces for growth diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Family {
    /// Wedges of k circles with halving circumferences.
    Hawaiian { n_per_circle: usize },
    /// A fixed circle sampled at base_n * 2^(k-1) points.
    Circle { circumference: f64, base_n: usize },
    /// Subdivided segments: trees, no loops at any scale.
    Path { points_per_k: usize },
}

impl Family {
    pub fn build(&self, k: usize) -> Result<FiniteMetricSpace> {
        match *self {
            Family::Hawaiian { n_per_circle } => {
                crate::spaces::hawaiian_truncation(k, n_per_circle)
            }
            Family::Circle {
                circumference,
                base_n,
            } => crate::spaces::sample_circle(circumference, base_n << (k - 1)),
            Family::Path { points_per_k } => {
                let g = crate::spaces::MetricGraph {
                    vertices: 2,
                    edges: vec![(0, 1, 1.0)],
                };
                crate::spaces::graph_to_space(&g, 1.0 / (points_per_k * k) as f64)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyRow {
    pub k: usize,
    pub count: usize,
    pub min_value: Option<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyReport {
    pub rows: Vec<FamilyRow>,
    /// Raised when spectra grow and minima shrink monotonically across k:
    /// the limit space cannot have a universal cover.
    pub limit_space_has_no_universal_cover: bool,
}

/// Spectrum size and minimum across a family of spaces indexed by k.
pub fn family_report(family: &Family, k_lo: usize, k_hi: usize) -> Result<FamilyReport> {
    if k_lo == 0 || k_hi < k_lo {
        return Err(Error::Document(format!("bad family range {k_lo}..{k_hi}")));
    }
    let ks: Vec<usize> = (k_lo..=k_hi).collect();
    let build = |&k: &usize| -> Result<FamilyRow> {
        let space = family.build(k)?;
        let values = homology_spectrum(&space);
        Ok(FamilyRow {
            k,
            count: values.len(),
            min_value: values.first().copied(),
            values,
        })
    };
    #[cfg(feature = "parallel")]
    let rows: Result<Vec<FamilyRow>> = {
        use rayon::prelude::*;
        ks.par_iter().map(build).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Result<Vec<FamilyRow>> = ks.iter().map(build).collect();
    let mut rows = rows?;
    rows.sort_by_key(|r| r.k);
    let growing = rows.len() >= 2
        && rows.windows(2).all(|w| w[1].count > w[0].count)
        && rows
            .windows(2)
            .all(|w| match (w[0].min_value, w[1].min_value) {
                (Some(a), Some(b)) => b < a,
                _ => false,
            });
    Ok(FamilyReport {
        rows,
        limit_space_has_no_universal_cover: growing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{sample_circle, wedge};

    #[test]
    fn circle_spectrum_group_confirmed() {
        let m = sample_circle(3.0, 12).unwrap();
        let report = critical_spectrum(&m, &Budget::default());
        assert_eq!(report.entries.len(), 1);
        let e = &report.entries[0];
        assert_eq!(e.value, 1.0);
        assert_eq!(e.level, Level::GroupConfirmed);
        assert_eq!(report.covering_spectrum, vec![1.5]);
        assert!(report.inconclusive_scales.is_empty());
        // evidence re-verifies
        match &e.at_evidence {
            Decision::NonNull(cert) => {
                let scales = scale_set(&m);
                verify_h1(&m, &scales, ScalePoint::at(e.scale_index), &e.witness, cert).unwrap();
            }
            other => panic!("expected NonNull at evidence, got {other:?}"),
        }
        match &e.above_evidence {
            Decision::Null(cert) => {
                cert.replay(&m).unwrap();
            }
            other => panic!("expected Null above evidence, got {other:?}"),
        }
    }

    #[test]
    fn values_are_budget_independent() {
        let m = sample_circle(3.0, 12).unwrap();
        let starved = Budget {
            max_states: 1,
            max_chain_len: 2,
            max_coset_rows: 1,
            wall_ms: None,
        };
        let report = critical_spectrum(&m, &starved);
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].value, 1.0);
        // evidence may degrade, the exact value may not
        assert!(matches!(
            report.entries[0].level,
            Level::HomologyExact | Level::GroupConfirmed
        ));
    }

    #[test]
    fn covering_rescale_is_bitwise() {
        let m = sample_circle(3.0, 12).unwrap();
        let report = critical_spectrum(&m, &Budget::default());
        for (e, c) in report.entries.iter().zip(&report.covering_spectrum) {
            assert_eq!(c.to_bits(), (e.value * 3.0 / 2.0).to_bits());
        }
    }

    #[test]
    fn triangle_has_empty_spectrum() {
        let m = sample_circle(1.0, 3).unwrap();
        let report = critical_spectrum(&m, &Budget::default());
        assert!(report.entries.is_empty());
        assert!(report.covering_spectrum.is_empty());
    }

    #[test]
    fn wedge_spectrum_has_both_values() {
        let a = sample_circle(1.0, 24).unwrap();
        let b = sample_circle(2.0, 24).unwrap();
        let w = wedge(&a, &b, 0, 0).unwrap();
        let values = homology_spectrum(&w);
        assert_eq!(values.len(), 2);
        assert!((values[0] - 1.0 / 3.0).abs() < 0.05);
        assert!((values[1] - 2.0 / 3.0).abs() < 0.05);
    }

    #[test]
    fn hawaiian_family_growth() {
        let report = family_report(&Family::Hawaiian { n_per_circle: 12 }, 1, 3).unwrap();
        assert_eq!(
            report.rows.iter().map(|r| r.count).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
        assert!(report.limit_space_has_no_universal_cover);
        let minima: Vec<f64> = report.rows.iter().map(|r| r.min_value.unwrap()).collect();
        assert!(minima.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn circle_family_is_stable() {
        let report = family_report(
            &Family::Circle {
                circumference: 3.0,
                base_n: 8,
            },
            1,
            3,
        )
        .unwrap();
        assert!(report.rows.iter().all(|r| r.count == 1));
        assert!(!report.limit_space_has_no_universal_cover);
    }

    #[test]
    fn path_family_is_empty() {
        let report = family_report(&Family::Path { points_per_k: 4 }, 1, 3).unwrap();
        assert!(report.rows.iter().all(|r| r.count == 0));
        assert!(!report.limit_space_has_no_universal_cover);
    }
}
