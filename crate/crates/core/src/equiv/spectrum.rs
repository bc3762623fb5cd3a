//! Whole-spectrum reports, the implication audit, and the packaged
//! expectations for the bundled counterexample corpus.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::equiv::gen::{close_suite, single_trace_suite, TestSuite};
use crate::equiv::{
    check_ct, check_failure, check_restricted, check_testing, check_trace, CheckError, Relation,
    TbtOptions, Verdict, VerdictKind,
};
use crate::model::{Nplts, StateId};
use crate::npt::Npt;
use crate::textfmt;

/// Implication edges of the spectrum, finer relation first: whenever the
/// finer relation holds, the coarser one must hold too. A complete finer
/// verdict of `Equivalent` and a coarser `Distinguished` is a soundness
/// failure.
const EDGES: &[(Relation, Relation)] = &[
    (Relation::ProbFailureDist, Relation::ProbFailure),
    (Relation::ProbFailureDist, Relation::ProbTraceDist),
    (Relation::ProbTraceDist, Relation::ProbTrace),
    (Relation::TestForallExists, Relation::TestSupInf),
    (Relation::TestForallExists, Relation::ProbTrace),
    (Relation::TestTraceByTraceDist, Relation::ProbReadyTraceDist),
    (Relation::ProbReadyTraceDist, Relation::ProbFailureTraceDist),
    (Relation::ProbFailureTraceDist, Relation::ProbFailureDist),
    (Relation::TestTraceByTraceDist, Relation::ProbFailureDist),
    (Relation::ProbFailure, Relation::TestTraceByTrace),
    (Relation::TestTraceByTrace, Relation::ProbTrace),
];

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub model: String,
    pub s1: String,
    pub s2: String,
    pub verdicts: Vec<Verdict>,
    /// Soundness failures found by the implication audit; always empty on a
    /// correct build.
    pub violations: Vec<String>,
    pub suite: String,
}

impl SpectrumReport {
    pub fn verdict(&self, relation: Relation, ct: bool) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.relation == relation && v.ct == ct)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "spectrum of {} :: {} vs {}\n",
            self.model, self.s1, self.s2
        ));
        for v in &self.verdicts {
            let ct = if v.ct { " (ct)" } else { "" };
            let mut line = format!("  {:<22}{:<14}", format!("{}{ct}", v.relation.tag()), v.kind.label());
            if let VerdictKind::Distinguished { witness } = &v.kind {
                if let Some(d) = &witness.detail {
                    line.push_str(&format!(" {d}"));
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        if self.violations.is_empty() {
            out.push_str("audit: no implication violations\n");
        } else {
            for v in &self.violations {
                out.push_str(&format!("audit VIOLATION: {v}\n"));
            }
        }
        out
    }
}

/// Suite used by a spectrum run: the given tests plus every single-trace
/// test of both compared states, closed under the proof transformations.
pub fn spectrum_suite(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    base: Option<&TestSuite>,
) -> TestSuite {
    let mut traces: BTreeSet<Vec<String>> = BTreeSet::new();
    for s in [s1, s2] {
        for t in crate::resolve::all_traces(model, s) {
            traces.insert(t.iter().map(|a| model.action_name(*a).to_string()).collect());
        }
    }
    let alphabet: Vec<String> = model
        .alphabet()
        .map(|a| model.action_name(a).to_string())
        .collect();
    let mut suite = single_trace_suite(&traces, &alphabet);
    if let Some(base) = base {
        suite = suite.merge(base.clone());
    }
    close_suite(&suite)
}

/// Runs every relation on the pair, audits the implication edges, and
/// returns the full table.
pub fn spectrum_report(
    model: &Nplts,
    s1: StateId,
    s2: StateId,
    base_suite: Option<&TestSuite>,
    grid: u32,
    cap: u64,
) -> Result<SpectrumReport, CheckError> {
    let suite = spectrum_suite(model, s1, s2, base_suite);
    let mut verdicts = Vec::new();
    for relation in [Relation::ProbTrace, Relation::ProbTraceDist] {
        verdicts.push(check_trace(relation, model, s1, s2, cap)?);
    }
    for relation in [
        Relation::ProbFailure,
        Relation::ProbFailureDist,
        Relation::ProbFailureTraceDist,
        Relation::ProbReadyTraceDist,
    ] {
        verdicts.push(check_failure(relation, model, s1, s2, cap)?);
    }
    for relation in [
        Relation::TestSupInf,
        Relation::TestForallExists,
        Relation::TestTraceByTrace,
        Relation::TestTraceByTraceDist,
    ] {
        verdicts.push(check_testing(
            relation,
            model,
            s1,
            s2,
            &suite,
            cap,
            TbtOptions::default(),
        )?);
    }
    for relation in [
        Relation::ProbTrace,
        Relation::ProbTraceDist,
        Relation::ProbFailure,
        Relation::ProbFailureDist,
        Relation::TestSupInf,
        Relation::TestForallExists,
        Relation::TestTraceByTrace,
        Relation::TestTraceByTraceDist,
    ] {
        verdicts.push(check_ct(relation, model, s1, s2, grid, Some(&suite), cap)?);
    }
    let class = model.classify();
    let restricted: &[(Relation, bool)] = &[
        (Relation::TraceFullyNondet, class.fully_nondeterministic),
        (Relation::TraceFullyProb, class.fully_probabilistic),
        (Relation::TraceReactive, class.reactive_probabilistic),
    ];
    for &(relation, applies) in restricted {
        if applies {
            verdicts.push(check_restricted(relation, model, s1, s2, None, cap)?);
        }
    }
    let violations = audit(&verdicts);
    Ok(SpectrumReport {
        model: model.name.clone(),
        s1: model.state_name(s1).to_string(),
        s2: model.state_name(s2).to_string(),
        verdicts,
        violations,
        suite: suite.descriptor.render(),
    })
}

/// Checks every implication edge plus the coincidence and witnessing rules
/// that the closed suite construction guarantees.
pub fn audit(verdicts: &[Verdict]) -> Vec<String> {
    let mut violations = Vec::new();
    let of = |relation: Relation, ct: bool| -> Option<&VerdictKind> {
        verdicts
            .iter()
            .find(|v| v.relation == relation && v.ct == ct)
            .map(|v| &v.kind)
    };
    for &(finer, coarser) in EDGES {
        if let (Some(f), Some(c)) = (of(finer, false), of(coarser, false)) {
            if f.is_equivalent() && c.is_distinguished() {
                violations.push(format!(
                    "{} is Equivalent but the coarser {} is Distinguished",
                    finer.tag(),
                    coarser.tag()
                ));
            }
        }
    }
    // the forall-exists and trace-by-trace distribution checks coincide on
    // closed suites
    if let (Some(fe), Some(td)) = (
        of(Relation::TestForallExists, false),
        of(Relation::TestTraceByTraceDist, false),
    ) {
        if fe.label() != td.label() {
            violations.push(format!(
                "pte-forall-exists is {} but pte-tbt-dis is {}",
                fe.label(),
                td.label()
            ));
        }
    }
    // single-trace tests are always present, so a trace distinction must be
    // caught by the per-trace testing relations
    if let Some(ptr) = of(Relation::ProbTrace, false) {
        if ptr.is_distinguished() {
            for testing in [Relation::TestTraceByTrace, Relation::TestForallExists] {
                if let Some(t) = of(testing, false) {
                    if !t.is_distinguished() {
                        violations.push(format!(
                            "ptr is Distinguished but {} is {}",
                            testing.tag(),
                            t.label()
                        ));
                    }
                }
            }
        }
    }
    violations
}

/// One expectation of the bundled corpus: pair fixture, relation, and the
/// verdict the tool must report.
#[derive(Debug, Clone, Serialize)]
pub struct Expectation {
    pub fixture: &'static str,
    pub relation: Relation,
    pub ct: bool,
    pub expected: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ExpectationOutcome {
    #[serde(flatten)]
    pub expectation: Expectation,
    pub actual: String,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct ExpectationReport {
    pub outcomes: Vec<ExpectationOutcome>,
}

impl ExpectationReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(|o| o.pass)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for o in &self.outcomes {
            let ct = if o.expectation.ct { " (ct)" } else { "" };
            out.push_str(&format!(
                "{} {} {}{}: expected {}, got {}\n",
                if o.pass { "PASS" } else { "FAIL" },
                o.expectation.fixture,
                o.expectation.relation.tag(),
                ct,
                o.expectation.expected,
                o.actual
            ));
        }
        out
    }
}

const EXPECTATIONS: &[(&str, Relation, &str)] = &[
    ("fig3", Relation::ProbTrace, "Equivalent"),
    ("fig3", Relation::ProbTraceDist, "Distinguished"),
    ("fig3", Relation::ProbFailure, "Distinguished"),
    ("fig3", Relation::ProbFailureDist, "Distinguished"),
    ("fig3", Relation::TestTraceByTrace, "ConsistentUpTo"),
    ("fig4", Relation::ProbTrace, "Distinguished"),
    ("fig4", Relation::ProbTraceDist, "Distinguished"),
    ("fig4", Relation::ProbFailure, "Distinguished"),
    ("fig4", Relation::ProbFailureDist, "Distinguished"),
    ("fig4", Relation::TestSupInf, "ConsistentUpTo"),
    ("fig4", Relation::TestForallExists, "Distinguished"),
    ("fig4", Relation::TestTraceByTrace, "Distinguished"),
    ("fig6", Relation::ProbTrace, "Equivalent"),
    ("fig6", Relation::ProbTraceDist, "Equivalent"),
    ("fig6", Relation::ProbFailure, "Distinguished"),
    ("fig6", Relation::ProbFailureDist, "Distinguished"),
    ("fig6", Relation::TestForallExists, "Distinguished"),
    ("fig6", Relation::TestTraceByTrace, "Distinguished"),
    ("fig7", Relation::ProbTrace, "Equivalent"),
    ("fig7", Relation::ProbTraceDist, "Equivalent"),
    ("fig7", Relation::ProbFailure, "Equivalent"),
    ("fig7", Relation::ProbFailureDist, "Equivalent"),
    ("fig7", Relation::TestSupInf, "Distinguished"),
    ("fig7", Relation::TestForallExists, "Distinguished"),
    ("fig7", Relation::TestTraceByTrace, "ConsistentUpTo"),
    ("fig7", Relation::TestFullyNondet, "ConsistentUpTo"),
    ("fig9", Relation::TestSupInf, "Distinguished"),
    ("fig9", Relation::TestForallExists, "Distinguished"),
    ("fig9", Relation::TestTraceByTrace, "ConsistentUpTo"),
    ("fig9", Relation::TestFullyProb, "ConsistentUpTo"),
    ("fig9", Relation::TestReactive, "ConsistentUpTo"),
    ("fig11", Relation::ProbTrace, "Equivalent"),
    ("fig11", Relation::TestTraceByTrace, "Distinguished"),
    ("fig11", Relation::TestFullyNondet, "Distinguished"),
    ("fig13", Relation::ProbTrace, "Equivalent"),
    ("fig13", Relation::ProbTraceDist, "Distinguished"),
    ("fig13", Relation::ProbFailure, "Equivalent"),
    ("fig13", Relation::ProbFailureDist, "Distinguished"),
    ("fig13", Relation::TestTraceByTrace, "ConsistentUpTo"),
    ("fig14", Relation::TestTraceByTrace, "Distinguished"),
];

fn parse_test(src: &str) -> Npt {
    let doc = textfmt::parse(src).expect("embedded test parses");
    Npt::from_document(&doc).expect("embedded test is an NPT")
}

/// Suite used for a fixture's testing-relation expectations: the figure's
/// companion test where there is one, together with the pair's single-trace
/// tests, closed.
fn expectation_suite(fixture: &str, model: &Nplts, relation: Relation) -> TestSuite {
    let s1 = model.state_id("s1").expect("pair fixture");
    let s2 = model.state_id("s2").expect("pair fixture");
    match relation {
        Relation::TestFullyNondet => {
            // probabilistic companion tests are replaced by their
            // nondeterministic restriction
            let tests = match fixture {
                "fig7" => vec![(
                    "fig7_test_nondet".to_string(),
                    parse_test(
                        "test fig7_test_nondet\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o a { o2:1 }\ntrans o1 b { o3:1 }\ntrans o2 b { o4:1 }\ntrans o3 c { w:1 }\ntrans o4 d { w:1 }\n",
                    ),
                )],
                "fig11" => vec![(
                    "fig11_test".to_string(),
                    crate::fixtures::load_test("fig11_test").unwrap(),
                )],
                _ => Vec::new(),
            };
            TestSuite::from_named_tests("nondet-restriction", tests)
        }
        Relation::TestFullyProb => TestSuite::from_named_tests(
            "fully-probabilistic",
            vec![
                (
                    "fp_split".to_string(),
                    parse_test(
                        "test fp_split\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1/2 o3:1/2 }\ntrans o2 c { w:1 }\ntrans o3 d { w:1 }\n",
                    ),
                ),
                (
                    "fp_chain".to_string(),
                    parse_test(
                        "test fp_chain\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\n",
                    ),
                ),
            ],
        ),
        Relation::TestReactive => TestSuite::from_named_tests(
            "reactive-restriction",
            vec![
                (
                    "fig9_test_reactive".to_string(),
                    parse_test(
                        "test fig9_test_reactive\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\ntrans o2 d { w:1 }\n",
                    ),
                ),
                (
                    "fp_chain".to_string(),
                    parse_test(
                        "test fp_chain\nalphabet a b c d\nsuccess w\ntrans o a { o1:1 }\ntrans o1 b { o2:1 }\ntrans o2 c { w:1 }\n",
                    ),
                ),
            ],
        ),
        _ => {
            let base = crate::fixtures::companion_test(fixture).map(|name| {
                TestSuite::from_named_tests(
                    "figure",
                    vec![(name.to_string(), crate::fixtures::load_test(name).unwrap())],
                )
            });
            spectrum_suite(model, s1, s2, base.as_ref())
        }
    }
}

/// Executes every packaged expectation and reports pass/fail per claim.
pub fn run_expectations(cap: u64) -> Result<ExpectationReport, CheckError> {
    let mut outcomes = Vec::new();
    for &(fixture, relation, expected) in EXPECTATIONS {
        let model = crate::fixtures::load_model(fixture).expect("fixture loads");
        let s1 = model.state_id("s1").expect("pair fixture");
        let s2 = model.state_id("s2").expect("pair fixture");
        let verdict = match relation {
            Relation::ProbTrace | Relation::ProbTraceDist => {
                check_trace(relation, &model, s1, s2, cap)?
            }
            Relation::ProbFailure
            | Relation::ProbFailureDist
            | Relation::ProbFailureTraceDist
            | Relation::ProbReadyTraceDist => check_failure(relation, &model, s1, s2, cap)?,
            Relation::TestSupInf
            | Relation::TestForallExists
            | Relation::TestTraceByTrace
            | Relation::TestTraceByTraceDist => {
                let suite = expectation_suite(fixture, &model, relation);
                check_testing(relation, &model, s1, s2, &suite, cap, TbtOptions::default())?
            }
            Relation::TraceFullyNondet | Relation::TraceFullyProb | Relation::TraceReactive => {
                check_restricted(relation, &model, s1, s2, None, cap)?
            }
            Relation::TestFullyNondet | Relation::TestFullyProb | Relation::TestReactive => {
                let suite = expectation_suite(fixture, &model, relation);
                check_restricted(relation, &model, s1, s2, Some(&suite), cap)?
            }
        };
        let actual = verdict.kind.label().to_string();
        outcomes.push(ExpectationOutcome {
            expectation: Expectation {
                fixture,
                relation,
                ct: false,
                expected,
            },
            pass: actual == expected,
            actual,
        });
    }
    Ok(ExpectationReport { outcomes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn packaged_expectations_all_pass() {
        let report = run_expectations(1_000_000).unwrap();
        assert!(
            report.all_pass(),
            "failing expectations:\n{}",
            report.render_text()
        );
    }

    #[test]
    fn spectrum_report_on_fig3_matches_the_documented_row() {
        let m = fixtures::load_model("fig3").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let s2 = m.state_id("s2").unwrap();
        let report = spectrum_report(&m, s1, s2, None, 2, 1_000_000).unwrap();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        assert!(report
            .verdict(Relation::ProbTrace, false)
            .unwrap()
            .kind
            .is_equivalent());
        assert!(report
            .verdict(Relation::ProbTraceDist, false)
            .unwrap()
            .kind
            .is_distinguished());
        assert!(report
            .verdict(Relation::ProbFailure, false)
            .unwrap()
            .kind
            .is_distinguished());
    }

    #[test]
    fn reflexive_spectrum_has_no_distinctions() {
        let m = fixtures::load_model("fig4").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let report = spectrum_report(&m, s1, s1, None, 2, 1_000_000).unwrap();
        assert!(report.violations.is_empty());
        for v in &report.verdicts {
            assert!(!v.kind.is_distinguished(), "{v:?}");
        }
    }
}
