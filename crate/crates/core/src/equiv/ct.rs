//! Combined-transition (randomized scheduler) variants.
//!
//! Three of these collapse onto decidable relations and are answered by
//! reduction: both extremal variants and the trace-by-trace distribution
//! variant coincide with the deterministic extremal relation. The per-trace
//! and per-failure-pair variants compare quantities that are multilinear in
//! the per-state weights over a connected domain, so the randomized
//! achievable values form the interval spanned by the deterministic
//! extremes and those two are refuted exactly. The remaining map-valued
//! clauses admit no such characterization; they are refuted only through
//! the exact relations they provably imply, and otherwise report
//! consistency with the configured bound.

use std::collections::BTreeSet;

use crate::equiv::gen::TestSuite;
use crate::equiv::trace::named;
use crate::equiv::{BoundDescriptor, CheckError, Relation, TbtOptions, Verdict, Witness};
use crate::model::{Nplts, StateId};
use crate::rational::{format_rat, Rat};
use crate::resolve::{enumerate_schedulers, FailurePair, ResolutionView};

fn det_views<'m>(
    model: &'m Nplts,
    start: StateId,
    cap: u64,
) -> Result<Vec<ResolutionView<'m>>, CheckError> {
    Ok(enumerate_schedulers(model, start, false, cap)?
        .iter()
        .map(|s| ResolutionView::deterministic(model, start, s))
        .collect())
}

fn bound_of(suite: Option<&TestSuite>, grid: u32) -> BoundDescriptor {
    BoundDescriptor {
        suite: suite.map(|s| s.descriptor.render()),
        grid_denominator: Some(grid),
    }
}

/// Per-trace refutation: a trace whose maximal probability differs between
/// the sides cannot be matched by any randomized resolution, because the
/// randomized values fill exactly the interval between the deterministic
/// extremes (and the minimum is zero on both sides, by halting).
fn trace_interval_witness(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    cap: u64,
) -> Result<Option<Witness>, CheckError> {
    let (unfolded, roots) = model.unfold_from(&[s1, s2]);
    let model = &unfolded;
    let (s1, s2) = (roots[0], roots[1]);
    let views1 = det_views(model, s1, cap)?;
    let views2 = det_views(model, s2, cap)?;
    let mut traces = crate::resolve::all_traces(model, s1);
    traces.extend(crate::resolve::all_traces(model, s2));
    for trace in traces {
        let max = |views: &[ResolutionView<'_>]| {
            views
                .iter()
                .map(|v| v.trace_prob(&trace))
                .max()
                .expect("at least the halting resolution exists")
        };
        let m1 = max(&views1);
        let m2 = max(&views2);
        if m1 != m2 {
            let (side, p, views) = if m1 > m2 {
                (1u8, m1, &views1)
            } else {
                (2u8, m2, &views2)
            };
            let view = views.iter().find(|v| v.trace_prob(&trace) == p).unwrap();
            return Ok(Some(
                Witness {
                    trace: Some(named(model, &trace)),
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "maximal trace probability {} on side {side} exceeds every randomized resolution of the other side",
                        format_rat(&p)
                    )),
                    ..Witness::default()
                }
                .with_probability(&p),
            ));
        }
    }
    Ok(None)
}

/// Per-failure-pair refutation via the same interval argument.
fn failure_interval_witness(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    cap: u64,
) -> Result<Option<Witness>, CheckError> {
    let (unfolded, roots) = model.unfold_from(&[s1, s2]);
    let model = &unfolded;
    let (s1, s2) = (roots[0], roots[1]);
    let views1 = det_views(model, s1, cap)?;
    let views2 = det_views(model, s2, cap)?;
    for pair in candidate_failure_pairs(model, s1, s2) {
        let extremes = |views: &[ResolutionView<'_>]| {
            let vals: BTreeSet<Rat> = views.iter().map(|v| v.failure_prob(&pair)).collect();
            (
                vals.iter().next().cloned().unwrap(),
                vals.iter().last().cloned().unwrap(),
            )
        };
        let e1 = extremes(&views1);
        let e2 = extremes(&views2);
        if e1 != e2 {
            // blame the side holding an endpoint outside the other side's
            // interval
            let (side, p, views) = if e1.1 > e2.1 || e1.0 < e2.0 {
                let p = if e1.1 > e2.1 { e1.1 } else { e1.0 };
                (1u8, p, &views1)
            } else {
                let p = if e2.1 > e1.1 { e2.1 } else { e2.0 };
                (2u8, p, &views2)
            };
            let view = views
                .iter()
                .find(|v| v.failure_prob(&pair) == p)
                .expect("endpoint attained");
            return Ok(Some(
                Witness {
                    trace: Some(named(model, &pair.trace)),
                    failure_set: Some(
                        pair.refused
                            .iter()
                            .map(|a| model.action_name(*a).to_string())
                            .collect(),
                    ),
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "extremal failure probability {} on side {side} is outside the other side's randomized range",
                        format_rat(&p)
                    )),
                    ..Witness::default()
                }
                .with_probability(&p),
            ));
        }
    }
    Ok(None)
}

fn candidate_failure_pairs(model: &Nplts, s1: StateId, s2: StateId) -> Vec<FailurePair> {
    let mut traces = crate::resolve::all_traces(model, s1);
    traces.extend(crate::resolve::all_traces(model, s2));
    let mut pairs = Vec::new();
    for trace in traces {
        let mut endpoint_actions: BTreeSet<crate::model::Action> = BTreeSet::new();
        for side in [s1, s2] {
            let mut current: BTreeSet<StateId> = [side].into();
            for &a in &trace {
                let mut next = BTreeSet::new();
                for &s in &current {
                    for t in model.outgoing(s) {
                        if t.label == a {
                            next.extend(t.target.support());
                        }
                    }
                }
                current = next;
            }
            for s in current {
                endpoint_actions.extend(model.enabled(s).iter().copied());
            }
        }
        let items: Vec<crate::model::Action> = endpoint_actions.into_iter().collect();
        for mask in 0u64..(1 << items.len()) {
            pairs.push(FailurePair {
                trace: trace.clone(),
                refused: items
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &a)| a)
                    .collect(),
            });
        }
    }
    pairs
}

pub fn check_ct(
    relation: Relation,
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    grid: u32,
    suite: Option<&TestSuite>,
    cap: u64,
) -> Result<Verdict, CheckError> {
    if !relation.has_ct_variant() {
        return Err(CheckError::NoCtVariant(relation));
    }
    match relation {
        // the extremal variants and the trace-by-trace distribution variant
        // all coincide with the deterministic extremal relation
        Relation::TestSupInf | Relation::TestForallExists | Relation::TestTraceByTraceDist => {
            let suite = suite.ok_or(CheckError::MissingSuite(relation))?;
            let mut v = super::check_testing(
                Relation::TestSupInf,
                model,
                s1,
                s2,
                suite,
                cap,
                TbtOptions::default(),
            )?;
            v.relation = relation;
            Ok(v.with_ct())
        }
        Relation::ProbTrace => Ok(match trace_interval_witness(model, s1, s2, cap)? {
            Some(w) => Verdict::distinguished(relation, w).with_ct(),
            None => Verdict::consistent(relation, bound_of(suite, grid)).with_ct(),
        }),
        Relation::ProbFailure => Ok(match failure_interval_witness(model, s1, s2, cap)? {
            Some(w) => Verdict::distinguished(relation, w).with_ct(),
            None => Verdict::consistent(relation, bound_of(suite, grid)).with_ct(),
        }),
        // map-valued clauses: refutable only through the exact relations
        // they imply
        Relation::ProbTraceDist | Relation::TestTraceByTrace => {
            Ok(match trace_interval_witness(model, s1, s2, cap)? {
                Some(w) => Verdict::distinguished(relation, w).with_ct(),
                None => Verdict::consistent(relation, bound_of(suite, grid)).with_ct(),
            })
        }
        Relation::ProbFailureDist => {
            if let Some(w) = failure_interval_witness(model, s1, s2, cap)? {
                return Ok(Verdict::distinguished(relation, w).with_ct());
            }
            Ok(match trace_interval_witness(model, s1, s2, cap)? {
                Some(w) => Verdict::distinguished(relation, w).with_ct(),
                None => Verdict::consistent(relation, bound_of(suite, grid)).with_ct(),
            })
        }
        other => Err(CheckError::NoCtVariant(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::gen::TestSuite;
    use crate::equiv::VerdictKind;
    use crate::fixtures;

    fn pair(m: &Nplts) -> (StateId, StateId) {
        (m.state_id("s1").unwrap(), m.state_id("s2").unwrap())
    }

    #[test]
    fn trace_dist_ct_stays_consistent_on_fig4() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_ct(Relation::ProbTraceDist, &m, s1, s2, 2, None, 1_000_000).unwrap();
        assert!(v.ct);
        assert!(
            matches!(v.kind, VerdictKind::ConsistentUpTo { .. }),
            "randomized mixing identifies the pair: {v:?}"
        );
    }

    #[test]
    fn trace_ct_cannot_refute_fig3() {
        let m = fixtures::load_model("fig3").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_ct(Relation::ProbTrace, &m, s1, s2, 2, None, 1_000_000).unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }));
    }

    #[test]
    fn trace_ct_refutes_when_maxima_differ() {
        // one side can certainly reach a b, the other only with chance 1/2
        let doc = crate::textfmt::parse(
            "nplts m\nalphabet a b\ntrans s1 a { t:1 }\ntrans t b { l:1 }\ntrans s2 a { u:1/2 v:1/2 }\ntrans u b { k:1 }\n",
        )
        .unwrap();
        let m = doc.model;
        let (s1, s2) = pair(&m);
        let v = check_ct(Relation::ProbTrace, &m, s1, s2, 4, None, 1_000_000).unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.side, 1);
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn forall_exists_ct_reduces_to_extremal_checking() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let suite = TestSuite::from_named_tests(
            "figure",
            vec![(
                "fig5_test".to_string(),
                fixtures::load_test("fig5_test").unwrap(),
            )],
        );
        let v = check_ct(
            Relation::TestForallExists,
            &m,
            s1,
            s2,
            2,
            Some(&suite),
            1_000_000,
        )
        .unwrap();
        assert!(v.ct);
        assert_eq!(v.relation, Relation::TestForallExists);
        assert!(
            matches!(v.kind, VerdictKind::ConsistentUpTo { .. }),
            "reduction must agree with the extremal verdict: {v:?}"
        );
    }
}
