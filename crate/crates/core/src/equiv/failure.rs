//! Failure-family deciders. Failure sets range over subsets of the actions
//! enabled at the relevant endpoints; other actions cannot change
//! compatibility, so the restriction keeps the decision complete.

use std::collections::BTreeSet;

use crate::equiv::trace::{all_views, named};
use crate::equiv::{CheckError, Relation, Verdict, Witness};
use crate::model::{Action, Nplts, StateId};
use crate::rational::{format_rat, Rat};
use crate::resolve::{AnnotatedTrace, EnumerationError, FailurePair, ResolutionView, Trace};

/// States reachable from `start` along computations labeled with `trace`.
fn states_after(model: &Nplts, start: StateId, trace: &[Action]) -> BTreeSet<StateId> {
    let mut current: BTreeSet<StateId> = [start].into();
    for &a in trace {
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
    current
}

fn subsets(actions: &BTreeSet<Action>) -> Vec<BTreeSet<Action>> {
    let items: Vec<Action> = actions.iter().copied().collect();
    let mut out = Vec::with_capacity(1 << items.len());
    for mask in 0u64..(1u64 << items.len()) {
        out.push(
            items
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &a)| a)
                .collect(),
        );
    }
    out
}

/// All traces some computation of either compared state performs.
fn candidate_traces(model: &Nplts, s1: StateId, s2: StateId) -> BTreeSet<Trace> {
    let mut traces = crate::resolve::all_traces(model, s1);
    traces.extend(crate::resolve::all_traces(model, s2));
    traces
}

/// Failure pairs that can possibly discriminate: for each trace, failure
/// sets over the union of actions enabled at either side's endpoints.
fn candidate_failure_pairs(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    cap: u64,
) -> Result<Vec<FailurePair>, CheckError> {
    let mut out = Vec::new();
    for trace in candidate_traces(model, s1, s2) {
        let mut endpoint_actions: BTreeSet<Action> = BTreeSet::new();
        for side in [s1, s2] {
            for s in states_after(model, side, &trace) {
                endpoint_actions.extend(model.enabled(s).iter().copied());
            }
        }
        for refused in subsets(&endpoint_actions) {
            out.push(FailurePair { trace: trace.clone(), refused });
            if out.len() as u64 > cap {
                return Err(CheckError::Enumeration(EnumerationError::CapExceeded {
                    cap,
                    count: out.len() as u128,
                }));
            }
        }
    }
    Ok(out)
}

/// Per-step failure traces: step sets range over the actions enabled at some
/// state occurring at that position on either side.
fn candidate_failure_traces(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    cap: u64,
) -> Result<Vec<AnnotatedTrace>, CheckError> {
    let mut out = Vec::new();
    for trace in candidate_traces(model, s1, s2) {
        let mut per_step: Vec<Vec<BTreeSet<Action>>> = Vec::new();
        for i in 0..trace.len() {
            let mut actions: BTreeSet<Action> = BTreeSet::new();
            for side in [s1, s2] {
                for s in states_after(model, side, &trace[..=i]) {
                    actions.extend(model.enabled(s).iter().copied());
                }
            }
            per_step.push(subsets(&actions));
        }
        let mut stack: Vec<AnnotatedTrace> = vec![Vec::new()];
        for (i, options) in per_step.iter().enumerate() {
            let mut next = Vec::new();
            for prefix in &stack {
                for set in options {
                    let mut ext = prefix.clone();
                    ext.push((trace[i], set.clone()));
                    next.push(ext);
                }
            }
            stack = next;
            if stack.len() as u64 > cap {
                return Err(CheckError::Enumeration(EnumerationError::CapExceeded {
                    cap,
                    count: stack.len() as u128,
                }));
            }
        }
        out.extend(stack);
        if out.len() as u64 > cap {
            return Err(CheckError::Enumeration(EnumerationError::CapExceeded {
                cap,
                count: out.len() as u128,
            }));
        }
    }
    Ok(out)
}

fn failure_witness(
    model: &Nplts,
    pair: &FailurePair,
    p: &Rat,
    side: u8,
    view: &ResolutionView<'_>,
) -> Witness {
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
            "failure probability {} on side {side} is unmatched",
            format_rat(p)
        )),
        ..Witness::default()
    }
    .with_probability(p)
}

pub fn check_failure(
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
    let views1 = all_views(model, s1, cap)?;
    let views2 = all_views(model, s2, cap)?;
    match relation {
        Relation::ProbFailure => {
            let pairs = candidate_failure_pairs(model, s1, s2, cap)?;
            for pair in &pairs {
                let vals1: BTreeSet<Rat> =
                    views1.iter().map(|v| v.failure_prob(pair)).collect();
                let vals2: BTreeSet<Rat> =
                    views2.iter().map(|v| v.failure_prob(pair)).collect();
                if vals1 == vals2 {
                    continue;
                }
                for (side, mine, theirs, views) in [
                    (1u8, &vals1, &vals2, &views1),
                    (2u8, &vals2, &vals1, &views2),
                ] {
                    if let Some(p) = mine.difference(theirs).next() {
                        let view = views
                            .iter()
                            .find(|v| v.failure_prob(pair) == *p)
                            .expect("achieved");
                        return Ok(Verdict::distinguished(
                            relation,
                            failure_witness(model, pair, p, side, view),
                        ));
                    }
                }
            }
            Ok(Verdict::equivalent(relation))
        }
        Relation::ProbFailureDist => {
            let pairs = candidate_failure_pairs(model, s1, s2, cap)?;
            let sig = |view: &ResolutionView<'_>| -> Vec<Rat> {
                pairs.iter().map(|pair| view.failure_prob(pair)).collect()
            };
            match_signatures(relation, model, &views1, &views2, sig, |idx, side, views| {
                let view = &views[idx];
                Witness {
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "failure-pair distribution of side {side} has no counterpart"
                    )),
                    ..Witness::default()
                }
            })
        }
        Relation::ProbFailureTraceDist => {
            let traces = candidate_failure_traces(model, s1, s2, cap)?;
            let sig = |view: &ResolutionView<'_>| -> Vec<Rat> {
                traces.iter().map(|ft| view.failure_trace_prob(ft)).collect()
            };
            match_signatures(relation, model, &views1, &views2, sig, |idx, side, views| {
                let view = &views[idx];
                Witness {
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "failure-trace distribution of side {side} has no counterpart"
                    )),
                    ..Witness::default()
                }
            })
        }
        Relation::ProbReadyTraceDist => {
            let sig = |view: &ResolutionView<'_>| -> Vec<(AnnotatedTrace, Rat)> {
                view.ready_trace_distribution().into_iter().collect()
            };
            match_signatures(relation, model, &views1, &views2, sig, |idx, side, views| {
                let view = &views[idx];
                Witness {
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "ready-trace distribution of side {side} has no counterpart"
                    )),
                    ..Witness::default()
                }
            })
        }
        other => panic!("check_failure cannot decide {other:?}"),
    }
}

/// Matches per-resolution signatures in both directions; equal signatures
/// mean the resolutions agree on every compared quantity at once.
fn match_signatures<S: Ord>(
    relation: Relation,
    _model: &Nplts,
    views1: &[ResolutionView<'_>],
    views2: &[ResolutionView<'_>],
    sig: impl Fn(&ResolutionView<'_>) -> S,
    witness: impl Fn(usize, u8, &[ResolutionView<'_>]) -> Witness,
) -> Result<Verdict, CheckError> {
    let sigs1: Vec<S> = views1.iter().map(&sig).collect();
    let sigs2: Vec<S> = views2.iter().map(&sig).collect();
    let set1: BTreeSet<&S> = sigs1.iter().collect();
    let set2: BTreeSet<&S> = sigs2.iter().collect();
    for (side, mine, theirs, sigs, views) in [
        (1u8, &set1, &set2, &sigs1, views1),
        (2u8, &set2, &set1, &sigs2, views2),
    ] {
        if let Some(unmatched) = mine.difference(theirs).next() {
            let idx = sigs.iter().position(|s| &s == unmatched).unwrap();
            return Ok(Verdict::distinguished(relation, witness(idx, side, views)));
        }
    }
    Ok(Verdict::equivalent(relation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::VerdictKind;
    use crate::fixtures;

    fn pair(m: &Nplts) -> (StateId, StateId) {
        (m.state_id("s1").unwrap(), m.state_id("s2").unwrap())
    }

    #[test]
    fn fig3_failure_pair_separates_the_sides() {
        let m = fixtures::load_model("fig3").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_failure(Relation::ProbFailure, &m, s1, s2, 1_000_000).unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.trace.as_deref(), Some(["a".to_string()].as_slice()));
                let f = witness.failure_set.as_deref().unwrap();
                assert_eq!(f, ["b1".to_string(), "b2".to_string()].as_slice());
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("1"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn fig13_failure_verdicts() {
        let m = fixtures::load_model("fig13").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_failure(Relation::ProbFailure, &m, s1, s2, 1_000_000).unwrap();
        assert!(v.kind.is_equivalent(), "{v:?}");
        let v = check_failure(Relation::ProbFailureDist, &m, s1, s2, 1_000_000).unwrap();
        assert!(v.kind.is_distinguished());
    }

    #[test]
    fn fig6_failure_pair_a_refusing_c() {
        let m = fixtures::load_model("fig6").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_failure(Relation::ProbFailure, &m, s1, s2, 1_000_000).unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.trace.as_deref(), Some(["a".to_string()].as_slice()));
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn ready_and_failure_trace_distributions_agree_on_fig13() {
        let m = fixtures::load_model("fig13").unwrap();
        let (s1, s2) = pair(&m);
        let ready =
            check_failure(Relation::ProbReadyTraceDist, &m, s1, s2, 1_000_000).unwrap();
        let ftr =
            check_failure(Relation::ProbFailureTraceDist, &m, s1, s2, 1_000_000).unwrap();
        assert!(ready.kind.is_distinguished());
        assert!(ftr.kind.is_distinguished());
    }
}
