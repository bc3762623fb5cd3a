//! Verdict engine for the equivalence spectrum.

mod ct;
mod failure;
mod gen;
mod restricted;
mod spectrum;
mod testing;
mod trace;

pub use ct::check_ct;
pub use failure::check_failure;
pub use gen::{close_suite, generate_tests, single_trace_suite, SuiteDescriptor, TestSuite};
pub use restricted::check_restricted;
pub use spectrum::{run_expectations, spectrum_report, ExpectationReport, SpectrumReport};
pub use testing::{check_testing, TbtOptions};
pub use trace::check_trace;

use serde::Serialize;
use thiserror::Error;

use crate::resolve::EnumerationError;

/// Every relation in the spectrum. The `Ct` wrapper in `CheckRequest` selects
/// the randomized-scheduler variant where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Relation {
    /// Per-trace matching of resolution probabilities.
    ProbTrace,
    /// Whole trace-distribution matching between resolutions.
    ProbTraceDist,
    /// Per-failure-pair matching.
    ProbFailure,
    /// Whole failure-pair-map matching.
    ProbFailureDist,
    /// Whole failure-trace-map matching.
    ProbFailureTraceDist,
    /// Whole ready-trace-map matching.
    ProbReadyTraceDist,
    /// Extremal success probabilities per test.
    TestSupInf,
    /// Every maximal resolution's success probability matched per test.
    TestForallExists,
    /// Per-trace success probabilities over resolutions with a maximal
    /// computation for that trace.
    TestTraceByTrace,
    /// Whole successful-trace-map matching with the maximal-trace implication.
    TestTraceByTraceDist,
    /// Classical trace equivalence on fully nondeterministic models.
    TraceFullyNondet,
    /// Classical trace equivalence on fully probabilistic models.
    TraceFullyProb,
    /// Conditional trace equivalence on reactive probabilistic models.
    TraceReactive,
    /// Classical may/must testing on fully nondeterministic models and tests.
    TestFullyNondet,
    /// Success-probability testing on fully probabilistic models and tests.
    TestFullyProb,
    /// Extremal conditional success testing on reactive models and tests.
    TestReactive,
}

impl Relation {
    pub const ALL: &'static [Relation] = &[
        Relation::ProbTrace,
        Relation::ProbTraceDist,
        Relation::ProbFailure,
        Relation::ProbFailureDist,
        Relation::ProbFailureTraceDist,
        Relation::ProbReadyTraceDist,
        Relation::TestSupInf,
        Relation::TestForallExists,
        Relation::TestTraceByTrace,
        Relation::TestTraceByTraceDist,
        Relation::TraceFullyNondet,
        Relation::TraceFullyProb,
        Relation::TraceReactive,
        Relation::TestFullyNondet,
        Relation::TestFullyProb,
        Relation::TestReactive,
    ];

    /// CLI spelling.
    pub fn tag(self) -> &'static str {
        match self {
            Relation::ProbTrace => "ptr",
            Relation::ProbTraceDist => "ptr-dis",
            Relation::ProbFailure => "pf",
            Relation::ProbFailureDist => "pf-dis",
            Relation::ProbFailureTraceDist => "pftr-dis",
            Relation::ProbReadyTraceDist => "prtr-dis",
            Relation::TestSupInf => "pte-supinf",
            Relation::TestForallExists => "pte-forall-exists",
            Relation::TestTraceByTrace => "pte-tbt",
            Relation::TestTraceByTraceDist => "pte-tbt-dis",
            Relation::TraceFullyNondet => "tr-fnd",
            Relation::TraceFullyProb => "tr-fpr",
            Relation::TraceReactive => "tr-rpr",
            Relation::TestFullyNondet => "te-fnd",
            Relation::TestFullyProb => "te-fpr",
            Relation::TestReactive => "te-rpr",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Relation> {
        Relation::ALL.iter().copied().find(|r| r.tag() == tag)
    }

    /// Relations that consume a test suite.
    pub fn needs_suite(self) -> bool {
        matches!(
            self,
            Relation::TestSupInf
                | Relation::TestForallExists
                | Relation::TestTraceByTrace
                | Relation::TestTraceByTraceDist
                | Relation::TestFullyNondet
                | Relation::TestFullyProb
                | Relation::TestReactive
        )
    }

    /// Relations with a combined-transition (randomized scheduler) variant.
    pub fn has_ct_variant(self) -> bool {
        matches!(
            self,
            Relation::ProbTrace
                | Relation::ProbTraceDist
                | Relation::ProbFailure
                | Relation::ProbFailureDist
                | Relation::TestSupInf
                | Relation::TestForallExists
                | Relation::TestTraceByTrace
                | Relation::TestTraceByTraceDist
        )
    }

    /// Relations whose deciders are complete, so `Equivalent` is a sound
    /// verdict. Testing relations and all ct variants are bounded.
    pub fn is_complete(self) -> bool {
        matches!(
            self,
            Relation::ProbTrace
                | Relation::ProbTraceDist
                | Relation::ProbFailure
                | Relation::ProbFailureDist
                | Relation::ProbFailureTraceDist
                | Relation::ProbReadyTraceDist
                | Relation::TraceFullyNondet
                | Relation::TraceFullyProb
                | Relation::TraceReactive
        )
    }
}

/// What a `Distinguished` verdict proves: the side whose resolution is
/// unmatched, the offending trace or failure pair, the probability, and the
/// scheduler that achieves it.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<String>>,
    #[serde(rename = "failureSet", skip_serializing_if = "Option::is_none")]
    pub failure_set: Option<Vec<String>>,
    #[serde(rename = "probabilityNum", skip_serializing_if = "Option::is_none")]
    pub probability_num: Option<String>,
    #[serde(rename = "probabilityDen", skip_serializing_if = "Option::is_none")]
    pub probability_den: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub scheduler: Vec<String>,
    /// 1 or 2: which compared state owns the unmatched resolution.
    pub side: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Witness {
    pub fn with_probability(mut self, p: &crate::rational::Rat) -> Self {
        self.probability_num = Some(p.numer().to_string());
        self.probability_den = Some(p.denom().to_string());
        self
    }
}

/// Bound descriptor attached to bounded verdicts so results are comparable
/// across runs.
#[derive(Debug, Clone, Serialize, Default, PartialEq, Eq)]
pub struct BoundDescriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<String>,
    #[serde(rename = "gridDenominator", skip_serializing_if = "Option::is_none")]
    pub grid_denominator: Option<u32>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "result")]
pub enum VerdictKind {
    /// Only complete deciders emit this.
    Equivalent,
    Distinguished { witness: Box<Witness> },
    ConsistentUpTo { bound: BoundDescriptor },
}

impl VerdictKind {
    pub fn is_distinguished(&self) -> bool {
        matches!(self, VerdictKind::Distinguished { .. })
    }

    pub fn is_equivalent(&self) -> bool {
        matches!(self, VerdictKind::Equivalent)
    }

    pub fn label(&self) -> &'static str {
        match self {
            VerdictKind::Equivalent => "Equivalent",
            VerdictKind::Distinguished { .. } => "Distinguished",
            VerdictKind::ConsistentUpTo { .. } => "ConsistentUpTo",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub relation: Relation,
    pub ct: bool,
    #[serde(flatten)]
    pub kind: VerdictKind,
}

impl Verdict {
    pub fn equivalent(relation: Relation) -> Verdict {
        Verdict {
            relation,
            ct: false,
            kind: VerdictKind::Equivalent,
        }
    }

    pub fn distinguished(relation: Relation, witness: Witness) -> Verdict {
        Verdict {
            relation,
            ct: false,
            kind: VerdictKind::Distinguished {
                witness: Box::new(witness),
            },
        }
    }

    pub fn consistent(relation: Relation, bound: BoundDescriptor) -> Verdict {
        Verdict {
            relation,
            ct: false,
            kind: VerdictKind::ConsistentUpTo { bound },
        }
    }

    pub fn with_ct(mut self) -> Verdict {
        self.ct = true;
        self
    }
}

#[derive(Debug, Error)]
pub enum CheckError {
    #[error(transparent)]
    Enumeration(#[from] EnumerationError),
    #[error("the two deciders disagree on {relation:?}: {details}")]
    InternalCrossCheckMismatch { relation: Relation, details: String },
    #[error("{relation:?} requires a {required} model, found {found}")]
    ClassMismatch {
        relation: Relation,
        required: &'static str,
        found: String,
    },
    #[error("relation {0:?} needs a non-empty test suite")]
    MissingSuite(Relation),
    #[error("relation {0:?} has no combined-transition variant")]
    NoCtVariant(Relation),
    #[error(transparent)]
    Compose(#[from] crate::compose::ComposeError),
}
