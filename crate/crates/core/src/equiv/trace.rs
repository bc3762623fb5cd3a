//! Trace-family deciders: per-trace matching (decided twice, via the
//! weighted-trace fixpoint and via exhaustive scheduler enumeration, which
//! must agree) and whole-distribution matching.

use std::collections::{BTreeMap, BTreeSet};

use crate::equiv::{CheckError, Relation, Verdict, Witness};
use crate::model::{Nplts, StateId};
use crate::rational::{format_rat, Rat};
use crate::resolve::{enumerate_schedulers, ResolutionView, Trace};
use crate::traceset::weighted_traces;

pub(crate) fn named(model: &Nplts, trace: &[crate::model::Action]) -> Vec<String> {
    trace.iter().map(|a| model.action_name(*a).to_string()).collect()
}

pub(crate) fn all_views<'m>(
    model: &'m Nplts,
    start: StateId,
    cap: u64,
) -> Result<Vec<ResolutionView<'m>>, CheckError> {
    Ok(enumerate_schedulers(model, start, false, cap)?
        .iter()
        .map(|s| ResolutionView::deterministic(model, start, s))
        .collect())
}

/// Achievable positive probabilities per trace, over a set of resolutions.
pub(crate) fn trace_value_map(views: &[ResolutionView<'_>]) -> BTreeMap<Trace, BTreeSet<Rat>> {
    let mut map: BTreeMap<Trace, BTreeSet<Rat>> = BTreeMap::new();
    for view in views {
        for (trace, p) in view.trace_distribution() {
            map.entry(trace).or_default().insert(p);
        }
    }
    map
}

fn find_value_witness<'m>(
    model: &Nplts,
    views1: &[ResolutionView<'m>],
    views2: &[ResolutionView<'m>],
) -> Option<Witness> {
    let map1 = trace_value_map(views1);
    let map2 = trace_value_map(views2);
    for (side, mine, theirs, views) in [
        (1u8, &map1, &map2, views1),
        (2u8, &map2, &map1, views2),
    ] {
        for (trace, values) in mine {
            let other = theirs.get(trace).cloned().unwrap_or_default();
            if let Some(p) = values.difference(&other).next() {
                let view = views
                    .iter()
                    .find(|v| v.trace_prob(trace) == *p)
                    .expect("value was achieved by some resolution");
                return Some(Witness {
                    trace: Some(named(model, trace)),
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "trace probability {} on side {side} is unmatched",
                        format_rat(p)
                    )),
                    ..Witness::default()
                }
                .with_probability(p));
            }
        }
    }
    None
}

fn dist_key(dist: &BTreeMap<Trace, Rat>) -> Vec<(Trace, Rat)> {
    dist.iter().map(|(t, p)| (t.clone(), p.clone())).collect()
}

pub fn check_trace(
    relation: Relation,
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    cap: u64,
) -> Result<Verdict, CheckError> {
    // resolutions are defined over tree unfoldings; identity on tree inputs
    let (unfolded, roots) = model.unfold_from(&[s1, s2]);
    let model = &unfolded;
    let (s1, s2) = (roots[0], roots[1]);
    match relation {
        Relation::ProbTrace => {
            let by_traceset = weighted_traces(model, s1) == weighted_traces(model, s2);
            let views1 = all_views(model, s1, cap)?;
            let views2 = all_views(model, s2, cap)?;
            let witness = find_value_witness(model, &views1, &views2);
            let by_enumeration = witness.is_none();
            if by_traceset != by_enumeration {
                return Err(CheckError::InternalCrossCheckMismatch {
                    relation,
                    details: format!(
                        "weighted-trace route says {by_traceset}, scheduler route says {by_enumeration}"
                    ),
                });
            }
            Ok(match witness {
                None => Verdict::equivalent(relation),
                Some(w) => Verdict::distinguished(relation, w),
            })
        }
        Relation::ProbTraceDist => {
            let views1 = all_views(model, s1, cap)?;
            let views2 = all_views(model, s2, cap)?;
            let dists1: Vec<BTreeMap<Trace, Rat>> =
                views1.iter().map(|v| v.trace_distribution()).collect();
            let dists2: Vec<BTreeMap<Trace, Rat>> =
                views2.iter().map(|v| v.trace_distribution()).collect();
            let keys1: BTreeSet<Vec<(Trace, Rat)>> = dists1.iter().map(dist_key).collect();
            let keys2: BTreeSet<Vec<(Trace, Rat)>> = dists2.iter().map(dist_key).collect();
            for (side, mine, theirs, views, dists) in [
                (1u8, &keys1, &keys2, &views1, &dists1),
                (2u8, &keys2, &keys1, &views2, &dists2),
            ] {
                if let Some(unmatched) = mine.difference(theirs).next() {
                    let idx = dists
                        .iter()
                        .position(|d| &dist_key(d) == unmatched)
                        .expect("distribution came from this side");
                    let view = &views[idx];
                    let rendered: Vec<String> = unmatched
                        .iter()
                        .map(|(t, p)| {
                            let name = if t.is_empty() {
                                "eps".to_string()
                            } else {
                                named(model, t).join(" ")
                            };
                            format!("{name}:{}", format_rat(p))
                        })
                        .collect();
                    let witness = Witness {
                        side,
                        scheduler: view.scheduler_lines().to_vec(),
                        detail: Some(format!(
                            "trace distribution {{{}}} on side {side} has no counterpart",
                            rendered.join(", ")
                        )),
                        ..Witness::default()
                    };
                    return Ok(Verdict::distinguished(relation, witness));
                }
            }
            Ok(Verdict::equivalent(relation))
        }
        other => panic!("check_trace cannot decide {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn pair(m: &Nplts) -> (StateId, StateId) {
        (m.state_id("s1").unwrap(), m.state_id("s2").unwrap())
    }

    #[test]
    fn fig3_is_trace_equivalent_but_not_distribution_equivalent() {
        let m = fixtures::load_model("fig3").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_trace(Relation::ProbTrace, &m, s1, s2, 1_000_000).unwrap();
        assert!(v.kind.is_equivalent(), "{v:?}");
        let v = check_trace(Relation::ProbTraceDist, &m, s1, s2, 1_000_000).unwrap();
        match &v.kind {
            crate::equiv::VerdictKind::Distinguished { witness } => {
                let detail = witness.detail.as_deref().unwrap();
                assert!(
                    detail.contains("a b1:1/2") && detail.contains("a b2:1/2"),
                    "unexpected witness: {detail}"
                );
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn fig4_is_trace_distinguished_on_the_central_branch() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_trace(Relation::ProbTrace, &m, s1, s2, 1_000_000).unwrap();
        match &v.kind {
            crate::equiv::VerdictKind::Distinguished { witness } => {
                assert_eq!(
                    witness.trace.as_deref(),
                    Some(["a".to_string(), "b".to_string()].as_slice())
                );
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("2"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn reflexivity_holds() {
        let m = fixtures::load_model("fig4").unwrap();
        let s1 = m.state_id("s1").unwrap();
        for rel in [Relation::ProbTrace, Relation::ProbTraceDist] {
            let v = check_trace(rel, &m, s1, s1, 1_000_000).unwrap();
            assert!(v.kind.is_equivalent());
        }
    }

    #[test]
    fn fig13_trace_distribution_verdicts() {
        let m = fixtures::load_model("fig13").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_trace(Relation::ProbTrace, &m, s1, s2, 1_000_000).unwrap();
        assert!(v.kind.is_equivalent());
        let v = check_trace(Relation::ProbTraceDist, &m, s1, s2, 1_000_000).unwrap();
        assert!(v.kind.is_distinguished());
    }
}
