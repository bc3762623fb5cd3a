//! Testing-family checkers: extremal, forall-exists, and trace-by-trace
//! matching of success probabilities over maximal resolutions of the
//! interaction systems, per test in the suite.

use std::collections::{BTreeMap, BTreeSet};

use crate::compose::{interaction_pair, InteractionSystem};
use crate::equiv::gen::TestSuite;
use crate::equiv::trace::named;
use crate::equiv::{BoundDescriptor, CheckError, Relation, Verdict, Witness};
use crate::model::{Nplts, StateId};
use crate::rational::{format_rat, Rat};
use crate::resolve::{
    enumerate_schedulers, success_prob, trace_success_prob, ResolutionView, Trace,
};

/// Behavior switches for the trace-by-trace family.
#[derive(Debug, Clone, Copy)]
pub struct TbtOptions {
    /// When false, per-trace matching ranges over all maximal resolutions
    /// instead of only those with a maximal computation for the trace.
    /// Diagnostic switch; the relation proper requires true.
    pub restrict_to_max_trace: bool,
}

impl Default for TbtOptions {
    fn default() -> Self {
        TbtOptions {
            restrict_to_max_trace: true,
        }
    }
}

pub(crate) struct SideAnalysis<'m> {
    pub sys: &'m InteractionSystem,
    pub views: Vec<ResolutionView<'m>>,
}

impl<'m> SideAnalysis<'m> {
    pub fn new(sys: &'m InteractionSystem, cap: u64) -> Result<Self, CheckError> {
        let views = enumerate_schedulers(&sys.product, sys.root, true, cap)?
            .iter()
            .map(|s| ResolutionView::deterministic(&sys.product, sys.root, s))
            .collect();
        Ok(SideAnalysis { sys, views })
    }

    pub fn success_values(&self) -> BTreeSet<Rat> {
        self.views
            .iter()
            .map(|v| success_prob(self.sys, v))
            .collect()
    }

    /// Per-trace success probabilities over resolutions having a maximal
    /// computation labeled with the trace (or over all maximal resolutions
    /// when the restriction is disabled).
    pub fn tbt_values(&self, trace: &[crate::model::Action], restrict: bool) -> BTreeSet<Rat> {
        self.views
            .iter()
            .filter(|v| !restrict || v.has_maximal_trace(trace))
            .map(|v| trace_success_prob(self.sys, v, trace))
            .collect()
    }

    /// Per-resolution signature for distribution-style matching: every trace
    /// with a maximal compatible computation, mapped to its successful
    /// probability.
    pub fn tbt_signature(&self, view: &ResolutionView<'m>) -> BTreeMap<Trace, Rat> {
        view.maximal_traces()
            .into_iter()
            .map(|t| {
                let p = trace_success_prob(self.sys, view, &t);
                (t, p)
            })
            .collect()
    }

    pub fn candidate_traces(&self) -> BTreeSet<Trace> {
        self.views.iter().flat_map(|v| v.maximal_traces()).collect()
    }
}

fn unmatched_value_witness(
    model: &Nplts,
    test_name: &str,
    trace: Option<&[crate::model::Action]>,
    side: u8,
    p: &Rat,
    views: &[ResolutionView<'_>],
    pick: impl Fn(&ResolutionView<'_>) -> Rat,
) -> Witness {
    let view = views.iter().find(|v| pick(v) == *p).expect("achieved");
    Witness {
        test: Some(test_name.to_string()),
        trace: trace.map(|t| named(model, t)),
        side,
        scheduler: view.scheduler_lines().to_vec(),
        detail: Some(format!(
            "success probability {} on side {side} is unmatched",
            format_rat(p)
        )),
        ..Witness::default()
    }
    .with_probability(p)
}

pub fn check_testing(
    relation: Relation,
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    suite: &TestSuite,
    cap: u64,
    tbt: TbtOptions,
) -> Result<Verdict, CheckError> {
    if suite.tests.is_empty() {
        return Err(CheckError::MissingSuite(relation));
    }
    for test in &suite.tests {
        let (systems, _) = interaction_pair(model, &[s1, s2], &test.npt)?;
        let sys1 = systems[0].unfolded();
        let sys2 = systems[1].unfolded();
        let side1 = SideAnalysis::new(&sys1, cap)?;
        let side2 = SideAnalysis::new(&sys2, cap)?;
        let verdict = match relation {
            Relation::TestSupInf => {
                check_supinf(model, &test.name, &side1, &side2)
            }
            Relation::TestForallExists => {
                check_forall_exists(model, &test.name, &side1, &side2)
            }
            Relation::TestTraceByTrace => {
                check_tbt(model, &test.name, &side1, &side2, tbt.restrict_to_max_trace)
            }
            Relation::TestTraceByTraceDist => {
                check_tbt_dist(model, &test.name, &side1, &side2)
            }
            other => panic!("check_testing cannot decide {other:?}"),
        };
        if let Some(witness) = verdict {
            return Ok(Verdict::distinguished(relation, witness));
        }
    }
    Ok(Verdict::consistent(
        relation,
        BoundDescriptor {
            suite: Some(suite.descriptor.render()),
            grid_denominator: None,
        },
    ))
}

fn check_supinf(
    model: &Nplts,
    test_name: &str,
    side1: &SideAnalysis<'_>,
    side2: &SideAnalysis<'_>,
) -> Option<Witness> {
    let vals1 = side1.success_values();
    let vals2 = side2.success_values();
    let sup1 = vals1.iter().max();
    let sup2 = vals2.iter().max();
    let inf1 = vals1.iter().min();
    let inf2 = vals2.iter().min();
    let _ = model;
    if sup1 != sup2 {
        let (side, p, analysis) = if sup1 > sup2 {
            (1u8, sup1.unwrap(), side1)
        } else {
            (2u8, sup2.unwrap(), side2)
        };
        return Some(unmatched_value_witness(
            model,
            test_name,
            None,
            side,
            p,
            &analysis.views,
            |v| success_prob(analysis.sys, v),
        ));
    }
    if inf1 != inf2 {
        let (side, p, analysis) = if inf1 < inf2 {
            (1u8, inf1.unwrap(), side1)
        } else {
            (2u8, inf2.unwrap(), side2)
        };
        return Some(unmatched_value_witness(
            model,
            test_name,
            None,
            side,
            p,
            &analysis.views,
            |v| success_prob(analysis.sys, v),
        ));
    }
    None
}

fn check_forall_exists(
    model: &Nplts,
    test_name: &str,
    side1: &SideAnalysis<'_>,
    side2: &SideAnalysis<'_>,
) -> Option<Witness> {
    let vals1 = side1.success_values();
    let vals2 = side2.success_values();
    for (side, mine, theirs, analysis) in [
        (1u8, &vals1, &vals2, side1),
        (2u8, &vals2, &vals1, side2),
    ] {
        if let Some(p) = mine.difference(theirs).next() {
            return Some(unmatched_value_witness(
                model,
                test_name,
                None,
                side,
                p,
                &analysis.views,
                |v| success_prob(analysis.sys, v),
            ));
        }
    }
    None
}

fn check_tbt(
    model: &Nplts,
    test_name: &str,
    side1: &SideAnalysis<'_>,
    side2: &SideAnalysis<'_>,
    restrict: bool,
) -> Option<Witness> {
    let mut traces = side1.candidate_traces();
    traces.extend(side2.candidate_traces());
    for trace in traces {
        let vals1 = side1.tbt_values(&trace, restrict);
        let vals2 = side2.tbt_values(&trace, restrict);
        for (side, mine, theirs, analysis) in [
            (1u8, &vals1, &vals2, side1),
            (2u8, &vals2, &vals1, side2),
        ] {
            if let Some(p) = mine.difference(theirs).next() {
                let view = analysis
                    .views
                    .iter()
                    .find(|v| {
                        (!restrict || v.has_maximal_trace(&trace))
                            && trace_success_prob(analysis.sys, v, &trace) == *p
                    })
                    .expect("achieved");
                return Some(
                    Witness {
                        test: Some(test_name.to_string()),
                        trace: Some(named(model, &trace)),
                        side,
                        scheduler: view.scheduler_lines().to_vec(),
                        detail: Some(format!(
                            "per-trace success probability {} on side {side} is unmatched",
                            format_rat(p)
                        )),
                        ..Witness::default()
                    }
                    .with_probability(p),
                );
            }
        }
    }
    None
}

fn check_tbt_dist(
    model: &Nplts,
    test_name: &str,
    side1: &SideAnalysis<'_>,
    side2: &SideAnalysis<'_>,
) -> Option<Witness> {
    let sigs1: Vec<BTreeMap<Trace, Rat>> = side1
        .views
        .iter()
        .map(|v| side1.tbt_signature(v))
        .collect();
    let sigs2: Vec<BTreeMap<Trace, Rat>> = side2
        .views
        .iter()
        .map(|v| side2.tbt_signature(v))
        .collect();
    // sig2 covers sig1 when every maximal trace of side 1 is maximal on side
    // 2 with the same successful probability
    let covers = |mine: &BTreeMap<Trace, Rat>, theirs: &BTreeMap<Trace, Rat>| {
        mine.iter().all(|(t, p)| theirs.get(t) == Some(p))
    };
    for (side, mine, theirs, analysis) in [
        (1u8, &sigs1, &sigs2, side1),
        (2u8, &sigs2, &sigs1, side2),
    ] {
        for (idx, sig) in mine.iter().enumerate() {
            if !theirs.iter().any(|other| covers(sig, other)) {
                let view = &analysis.views[idx];
                let rendered: Vec<String> = sig
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
                return Some(Witness {
                    test: Some(test_name.to_string()),
                    side,
                    scheduler: view.scheduler_lines().to_vec(),
                    detail: Some(format!(
                        "successful-trace map {{{}}} on side {side} has no counterpart",
                        rendered.join(", ")
                    )),
                    ..Witness::default()
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::gen::TestSuite;
    use crate::equiv::VerdictKind;
    use crate::fixtures;
    use crate::rational::rat;

    fn suite_of(names: &[&str]) -> TestSuite {
        TestSuite::from_named_tests(
            "figure",
            names
                .iter()
                .map(|n| (n.to_string(), fixtures::load_test(n).unwrap()))
                .collect(),
        )
    }

    fn pair(m: &Nplts) -> (StateId, StateId) {
        (m.state_id("s1").unwrap(), m.state_id("s2").unwrap())
    }

    #[test]
    fn fig4_with_fig5_test_success_probability_sets() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let test = fixtures::load_test("fig5_test").unwrap();
        let (systems, _) = interaction_pair(&m, &[s1, s2], &test).unwrap();
        let a1 = SideAnalysis::new(&systems[0], 1_000_000).unwrap();
        let a2 = SideAnalysis::new(&systems[1], 1_000_000).unwrap();
        assert_eq!(
            a1.success_values(),
            [rat(1, 2), rat(1, 4), rat(0, 1)].into()
        );
        assert_eq!(a2.success_values(), [rat(1, 2), rat(0, 1)].into());
    }

    #[test]
    fn fig4_verdicts_on_the_fig5_test() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_of(&["fig5_test"]);
        let v = check_testing(
            Relation::TestSupInf,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }));
        let v = check_testing(
            Relation::TestForallExists,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("4"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn fig7_supinf_distinguished_tbt_consistent() {
        let m = fixtures::load_model("fig7").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_of(&["fig7_test"]);
        let v = check_testing(
            Relation::TestSupInf,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.side, 1);
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("1"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
        let v = check_testing(
            Relation::TestTraceByTrace,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }), "{v:?}");
    }

    #[test]
    fn fig11_tbt_distinguished_only_with_the_restriction() {
        let m = fixtures::load_model("fig11").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_of(&["fig11_test"]);
        let v = check_testing(
            Relation::TestTraceByTrace,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.trace.as_deref(), Some(["a".to_string()].as_slice()));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
        let v = check_testing(
            Relation::TestTraceByTrace,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions {
                restrict_to_max_trace: false,
            },
        )
        .unwrap();
        assert!(
            matches!(v.kind, VerdictKind::ConsistentUpTo { .. }),
            "unrestricted matching must not distinguish on this test: {v:?}"
        );
    }

    #[test]
    fn fig14_tbt_distinguished_on_trace_ab_with_probability_p1() {
        let m = fixtures::load_model("fig14").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_of(&["fig14_test"]);
        let v = check_testing(
            Relation::TestTraceByTrace,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(
                    witness.trace.as_deref(),
                    Some(["a".to_string(), "b".to_string()].as_slice())
                );
                assert_eq!(witness.side, 2);
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("3"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn fig6_forall_exists_unmatched_probability_one() {
        let m = fixtures::load_model("fig6").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_of(&["fig6_test"]);
        let v = check_testing(
            Relation::TestForallExists,
            &m,
            s1,
            s2,
            &suite,
            1_000_000,
            TbtOptions::default(),
        )
        .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                assert_eq!(witness.side, 1);
                assert_eq!(witness.probability_num.as_deref(), Some("1"));
                assert_eq!(witness.probability_den.as_deref(), Some("1"));
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }
}
