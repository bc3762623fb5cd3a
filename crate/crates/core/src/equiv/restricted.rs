//! Classical equivalences for the restricted process classes, implemented
//! directly from their definitions. Trace relations are complete; testing
//! relations are suite bounded and require every test to belong to the same
//! class as the model.

use std::collections::BTreeSet;

use crate::compose::{interaction_pair, InteractionSystem};
use crate::equiv::gen::TestSuite;
use crate::equiv::trace::named;
use crate::equiv::{BoundDescriptor, CheckError, Relation, Verdict, Witness};
use crate::model::{Nplts, ProcessClass, StateId};
use crate::rational::{format_rat, Rat};
use crate::resolve::{
    all_traces, enumerate_schedulers, follow_trace_prob, follow_trace_success_prob,
    terminal_traces, ResolutionView,
};

fn require_class(
    relation: Relation,
    class: ProcessClass,
    what: &str,
) -> Result<(), CheckError> {
    let ok = match relation {
        Relation::TraceFullyNondet | Relation::TestFullyNondet => class.fully_nondeterministic,
        Relation::TraceFullyProb | Relation::TestFullyProb => class.fully_probabilistic,
        Relation::TraceReactive | Relation::TestReactive => class.reactive_probabilistic,
        _ => true,
    };
    if ok {
        return Ok(());
    }
    let required = match relation {
        Relation::TraceFullyNondet | Relation::TestFullyNondet => "fully nondeterministic",
        Relation::TraceFullyProb | Relation::TestFullyProb => "fully probabilistic",
        _ => "reactive probabilistic",
    };
    Err(CheckError::ClassMismatch {
        relation,
        required,
        found: format!("{what}: {class}"),
    })
}

/// Reachable success configuration exists.
fn exists_successful(sys: &InteractionSystem) -> bool {
    sys.product
        .reachable_from(sys.root)
        .into_iter()
        .any(|c| sys.is_success(c))
}

/// Every maximal computation ends successfully, i.e. every reachable
/// terminal configuration is a success configuration.
fn must_succeed(sys: &InteractionSystem) -> bool {
    sys.product
        .reachable_from(sys.root)
        .into_iter()
        .filter(|&c| sys.product.is_terminal(c))
        .all(|c| sys.is_success(c))
}

pub fn check_restricted(
    relation: Relation,
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    suite: Option<&TestSuite>,
    cap: u64,
) -> Result<Verdict, CheckError> {
    require_class(relation, model.classify(), "model")?;
    match relation {
        Relation::TraceFullyNondet => {
            let t1 = all_traces(model, s1);
            let t2 = all_traces(model, s2);
            if let Some(trace) = t1.symmetric_difference(&t2).next() {
                let side = if t1.contains(trace) { 1 } else { 2 };
                return Ok(Verdict::distinguished(
                    relation,
                    Witness {
                        trace: Some(named(model, trace)),
                        side,
                        detail: Some(format!("trace exists only on side {side}")),
                        ..Witness::default()
                    },
                ));
            }
            Ok(Verdict::equivalent(relation))
        }
        Relation::TraceFullyProb => {
            // a fully probabilistic process has exactly one maximal
            // resolution, the process itself
            let mk_view = |s: StateId| -> Result<ResolutionView<'_>, CheckError> {
                let scheds = enumerate_schedulers(model, s, true, cap)?;
                debug_assert_eq!(scheds.len(), 1);
                Ok(ResolutionView::deterministic(model, s, &scheds[0]))
            };
            let d1 = mk_view(s1)?.trace_distribution();
            let d2 = mk_view(s2)?.trace_distribution();
            if d1 != d2 {
                let trace = d1
                    .iter()
                    .find(|(t, p)| d2.get(*t) != Some(p))
                    .map(|(t, _)| t.clone())
                    .or_else(|| d2.keys().find(|t| !d1.contains_key(*t)).cloned())
                    .unwrap();
                let p1 = d1.get(&trace).cloned();
                let side = if p1.is_some() { 1 } else { 2 };
                let p = p1.or_else(|| d2.get(&trace).cloned()).unwrap();
                return Ok(Verdict::distinguished(
                    relation,
                    Witness {
                        trace: Some(named(model, &trace)),
                        side,
                        detail: Some(format!(
                            "trace probability {} differs between the sides",
                            format_rat(&p)
                        )),
                        ..Witness::default()
                    }
                    .with_probability(&p),
                ));
            }
            Ok(Verdict::equivalent(relation))
        }
        Relation::TraceReactive => {
            let mut traces = all_traces(model, s1);
            traces.extend(all_traces(model, s2));
            for trace in traces {
                let p1 = follow_trace_prob(model, s1, &trace);
                let p2 = follow_trace_prob(model, s2, &trace);
                if p1 != p2 {
                    let side = if p1 > p2 { 1 } else { 2 };
                    let p = if p1 > p2 { p1 } else { p2 };
                    return Ok(Verdict::distinguished(
                        relation,
                        Witness {
                            trace: Some(named(model, &trace)),
                            side,
                            detail: Some(format!(
                                "conditional trace probability {} on side {side} differs",
                                format_rat(&p)
                            )),
                            ..Witness::default()
                        }
                        .with_probability(&p),
                    ));
                }
            }
            Ok(Verdict::equivalent(relation))
        }
        Relation::TestFullyNondet | Relation::TestFullyProb | Relation::TestReactive => {
            let suite = suite.ok_or(CheckError::MissingSuite(relation))?;
            for test in &suite.tests {
                require_class(relation, test.npt.model.classify(), &test.name)?;
                let (systems, _) = interaction_pair(model, &[s1, s2], &test.npt)?;
                if let Some(witness) =
                    check_restricted_test(relation, &test.name, &systems, cap)?
                {
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
        other => panic!("check_restricted cannot decide {other:?}"),
    }
}

fn check_restricted_test(
    relation: Relation,
    test_name: &str,
    systems: &[InteractionSystem],
    cap: u64,
) -> Result<Option<Witness>, CheckError> {
    match relation {
        Relation::TestFullyNondet => {
            let may1 = exists_successful(&systems[0]);
            let may2 = exists_successful(&systems[1]);
            if may1 != may2 {
                return Ok(Some(Witness {
                    test: Some(test_name.to_string()),
                    side: if may1 { 1 } else { 2 },
                    detail: Some("only one side can reach success".to_string()),
                    ..Witness::default()
                }));
            }
            let must1 = must_succeed(&systems[0]);
            let must2 = must_succeed(&systems[1]);
            if must1 != must2 {
                return Ok(Some(Witness {
                    test: Some(test_name.to_string()),
                    side: if must2 { 1 } else { 2 },
                    detail: Some(
                        "only one side has an unsuccessful maximal computation".to_string(),
                    ),
                    ..Witness::default()
                }));
            }
            Ok(None)
        }
        Relation::TestFullyProb => {
            // one maximal resolution each: the interaction system itself
            let mut values: Vec<Rat> = Vec::new();
            for sys in systems {
                let scheds = enumerate_schedulers(&sys.product, sys.root, true, cap)?;
                debug_assert_eq!(scheds.len(), 1);
                let view = ResolutionView::deterministic(&sys.product, sys.root, &scheds[0]);
                values.push(crate::resolve::success_prob(sys, &view));
            }
            if values[0] != values[1] {
                let side = if values[0] > values[1] { 1u8 } else { 2u8 };
                let p = values[(side - 1) as usize].clone();
                return Ok(Some(
                    Witness {
                        test: Some(test_name.to_string()),
                        side,
                        detail: Some(format!(
                            "success probability {} on side {side} differs",
                            format_rat(&p)
                        )),
                        ..Witness::default()
                    }
                    .with_probability(&p),
                ));
            }
            Ok(None)
        }
        Relation::TestReactive => {
            // extremal conditional success probabilities over maximal traces
            let extremes = |sys: &InteractionSystem| -> Option<(Rat, Rat)> {
                let values: BTreeSet<Rat> = terminal_traces(&sys.product, sys.root)
                    .into_iter()
                    .map(|t| follow_trace_success_prob(sys, &t))
                    .collect();
                values
                    .iter()
                    .next()
                    .cloned()
                    .zip(values.iter().last().cloned())
            };
            let e1 = extremes(&systems[0]);
            let e2 = extremes(&systems[1]);
            if e1 != e2 {
                let detail = format!(
                    "extremal conditional success probabilities differ: {} vs {}",
                    render_extremes(&e1),
                    render_extremes(&e2)
                );
                return Ok(Some(Witness {
                    test: Some(test_name.to_string()),
                    side: 1,
                    detail: Some(detail),
                    ..Witness::default()
                }));
            }
            Ok(None)
        }
        _ => unreachable!(),
    }
}

fn render_extremes(e: &Option<(Rat, Rat)>) -> String {
    match e {
        None => "none".to_string(),
        Some((lo, hi)) => format!("[{}, {}]", format_rat(lo), format_rat(hi)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equiv::VerdictKind;
    use crate::fixtures;
    use crate::npt::Npt;
    use crate::textfmt;

    fn pair(m: &Nplts) -> (StateId, StateId) {
        (m.state_id("s1").unwrap(), m.state_id("s2").unwrap())
    }

    fn suite_from_sources(name: &str, sources: &[&str]) -> TestSuite {
        TestSuite::from_named_tests(
            name,
            sources
                .iter()
                .map(|src| {
                    let doc = textfmt::parse(src).expect("suite source parses");
                    let npt = Npt::from_document(&doc).expect("suite source is a test");
                    (npt.model.name.clone(), npt)
                })
                .collect(),
        )
    }

    #[test]
    fn class_mismatch_is_reported() {
        let m = fixtures::load_model("fig4").unwrap();
        let (s1, s2) = pair(&m);
        let err = check_restricted(Relation::TraceFullyProb, &m, s1, s2, None, 1000)
            .unwrap_err();
        assert!(matches!(err, CheckError::ClassMismatch { .. }));
    }

    #[test]
    fn fig7_is_classically_testing_equivalent_on_nondeterministic_tests() {
        let m = fixtures::load_model("fig7").unwrap();
        let (s1, s2) = pair(&m);
        let suite = suite_from_sources(
            "nondet",
            &["test fnd\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o a { o2:1 }\ntrans o1 b { o3:1 }\ntrans o2 b { o4:1 }\ntrans o3 c { w:1 }\ntrans o4 d { w:1 }\n"],
        );
        let v =
            check_restricted(Relation::TestFullyNondet, &m, s1, s2, Some(&suite), 1000)
                .unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }), "{v:?}");
    }

    #[test]
    fn fig11_is_distinguished_by_classical_testing() {
        let m = fixtures::load_model("fig11").unwrap();
        let (s1, s2) = pair(&m);
        let suite = TestSuite::from_named_tests(
            "figure",
            vec![(
                "fig11_test".to_string(),
                fixtures::load_test("fig11_test").unwrap(),
            )],
        );
        let v =
            check_restricted(Relation::TestFullyNondet, &m, s1, s2, Some(&suite), 1000)
                .unwrap();
        match &v.kind {
            VerdictKind::Distinguished { witness } => {
                // the second process must pass the test, the first may fail it
                assert_eq!(witness.side, 1);
            }
            other => panic!("expected distinguished, got {other:?}"),
        }
    }

    #[test]
    fn fig9_reactive_pair_verdicts() {
        let m = fixtures::load_model("fig9").unwrap();
        let (s1, s2) = pair(&m);
        let v = check_restricted(Relation::TraceReactive, &m, s1, s2, None, 1000).unwrap();
        assert!(v.kind.is_equivalent());
        let fpr_suite = suite_from_sources(
            "fully-probabilistic",
            &[
                "test fp1\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1/2 o3:1/2 }\ntrans o2 c { w:1 }\ntrans o3 d { w:1 }\n",
                "test fp2\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\n",
            ],
        );
        let v = check_restricted(Relation::TestFullyProb, &m, s1, s2, Some(&fpr_suite), 1000)
            .unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }), "{v:?}");
        let rpr_suite = suite_from_sources(
            "reactive",
            &[
                "test rp1\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\ntrans o2 d { w:1 }\n",
                "test rp2\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\n",
            ],
        );
        let v = check_restricted(Relation::TestReactive, &m, s1, s2, Some(&rpr_suite), 1000)
            .unwrap();
        assert!(matches!(v.kind, VerdictKind::ConsistentUpTo { .. }), "{v:?}");
    }

    #[test]
    fn fully_probabilistic_trace_equivalence_decides_exactly() {
        let doc = textfmt::parse(
            "nplts fp\nalphabet a b\ntrans s1 a { t1:1/2 t2:1/2 }\ntrans t1 b { l1:1 }\ntrans s2 a { u1:1/2 u2:1/2 }\ntrans u1 b { m1:1 }\n",
        )
        .unwrap();
        let m = doc.model;
        let (s1, s2) = pair(&m);
        let v = check_restricted(Relation::TraceFullyProb, &m, s1, s2, None, 1000).unwrap();
        assert!(v.kind.is_equivalent());
    }
}
