//! Bounded test-suite generation and the closure operations that turn the
//! inter-relation theorems into executable properties.

use std::collections::BTreeSet;

use crate::npt::{Npt, TestTree};
use crate::rational::{rat_one, Rat};
use crate::resolve::EnumerationError;

/// A named test; generated names are stable across runs.
#[derive(Debug, Clone)]
pub struct NamedTest {
    pub name: String,
    pub npt: Npt,
}

/// How a suite was built, carried into bounded verdicts.
#[derive(Debug, Clone, Default)]
pub struct SuiteDescriptor {
    pub source: String,
    pub depth: Option<u32>,
    pub branching: Option<u32>,
    pub prob_denominators: Vec<u32>,
    pub closed: bool,
}

impl SuiteDescriptor {
    pub fn render(&self) -> String {
        let mut s = self.source.clone();
        if let (Some(d), Some(k)) = (self.depth, self.branching) {
            s.push_str(&format!(" d={d} k={k}"));
            if !self.prob_denominators.is_empty() {
                let ps: Vec<String> =
                    self.prob_denominators.iter().map(|p| p.to_string()).collect();
                s.push_str(&format!(" P={{{}}}", ps.join(",")));
            }
        }
        if self.closed {
            s.push_str(" closed");
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct TestSuite {
    pub tests: Vec<NamedTest>,
    pub descriptor: SuiteDescriptor,
}

impl TestSuite {
    pub fn from_named_tests(source: &str, tests: Vec<(String, Npt)>) -> TestSuite {
        TestSuite {
            tests: tests
                .into_iter()
                .map(|(name, npt)| NamedTest { name, npt })
                .collect(),
            descriptor: SuiteDescriptor {
                source: source.to_string(),
                ..SuiteDescriptor::default()
            },
        }
    }

    pub fn merge(mut self, other: TestSuite) -> TestSuite {
        let mut seen: BTreeSet<String> = self
            .tests
            .iter()
            .map(|t| t.npt.to_tree().key())
            .collect();
        for t in other.tests {
            if seen.insert(t.npt.to_tree().key()) {
                self.tests.push(t);
            }
        }
        self.descriptor.source = format!(
            "{}+{}",
            self.descriptor.source, other.descriptor.source
        );
        self
    }

    pub fn len(&self) -> usize {
        self.tests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tests.is_empty()
    }
}

/// The probability splits available for two-point distributions: for each
/// allowed denominator `d`, the values `k/d` with `0 < k < d`.
fn split_values(denominators: &[u32]) -> Vec<Rat> {
    let mut out: BTreeSet<Rat> = BTreeSet::new();
    for &d in denominators {
        for k in 1..d {
            out.insert(Rat::new(k.into(), d.into()));
        }
    }
    out.into_iter().collect()
}

struct TreeGen {
    alphabet: Vec<String>,
    branching: usize,
    splits: Vec<Rat>,
    /// memo[(depth_budget, node_budget)] = canonical trees with exactly that
    /// many nodes
    memo: std::collections::HashMap<(u32, usize), Vec<TestTree>>,
}

impl TreeGen {
    fn trees_exact(&mut self, depth: u32, nodes: usize) -> Vec<TestTree> {
        if let Some(v) = self.memo.get(&(depth, nodes)) {
            return v.clone();
        }
        let mut out: BTreeSet<TestTree> = BTreeSet::new();
        if nodes == 1 {
            out.insert(TestTree::leaf(true));
            out.insert(TestTree::leaf(false));
        } else if depth >= 1 {
            // distribute nodes - 1 among 1..=branching transitions
            for t in 1..=self.branching.min(nodes - 1) {
                let mut shares = Vec::new();
                partitions(nodes - 1, t, 1, &mut shares, &mut |parts| {
                    for set in self.transition_sets(depth, parts) {
                        out.insert(TestTree::Node { transitions: set }.canonical());
                    }
                });
            }
        }
        let v: Vec<TestTree> = out.into_iter().collect();
        self.memo.insert((depth, nodes), v.clone());
        v
    }

    /// All sorted sets of distinct transitions whose child node counts match
    /// `parts` (a non-increasing sequence).
    fn transition_sets(
        &mut self,
        depth: u32,
        parts: &[usize],
    ) -> Vec<Vec<(String, Vec<(Rat, TestTree)>)>> {
        let per_part: Vec<Vec<(String, Vec<(Rat, TestTree)>)>> = parts
            .iter()
            .map(|&m| self.transitions_with(depth, m))
            .collect();
        let mut out = Vec::new();
        let mut current: Vec<(String, Vec<(Rat, TestTree)>)> = Vec::new();
        fn go(
            per_part: &[Vec<(String, Vec<(Rat, TestTree)>)>],
            idx: usize,
            current: &mut Vec<(String, Vec<(Rat, TestTree)>)>,
            out: &mut Vec<Vec<(String, Vec<(Rat, TestTree)>)>>,
        ) {
            if idx == per_part.len() {
                out.push(current.clone());
                return;
            }
            for option in &per_part[idx] {
                if current.contains(option) {
                    continue;
                }
                current.push(option.clone());
                go(per_part, idx + 1, current, out);
                current.pop();
            }
        }
        go(&per_part, 0, &mut current, &mut out);
        out
    }

    /// Transitions whose distribution consumes exactly `m` nodes.
    fn transitions_with(
        &mut self,
        depth: u32,
        m: usize,
    ) -> Vec<(String, Vec<(Rat, TestTree)>)> {
        let mut dists: Vec<Vec<(Rat, TestTree)>> = Vec::new();
        for child in self.trees_exact(depth - 1, m) {
            dists.push(vec![(rat_one(), child)]);
        }
        if !self.splits.is_empty() {
            for m1 in 1..m {
                let m2 = m - m1;
                if m1 > m2 {
                    break;
                }
                let left = self.trees_exact(depth - 1, m1);
                let right = self.trees_exact(depth - 1, m2);
                for c1 in &left {
                    for c2 in &right {
                        if m1 == m2 && c2 <= c1 {
                            continue;
                        }
                        for q in self.splits.clone() {
                            dists.push(vec![
                                (q.clone(), c1.clone()),
                                (rat_one() - &q, c2.clone()),
                            ]);
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        for action in &self.alphabet {
            for dist in &dists {
                out.push((action.clone(), dist.clone()));
            }
        }
        out
    }
}

/// Calls `emit` for every non-increasing sequence of `count` positive parts
/// summing to `total`.
fn partitions(
    total: usize,
    count: usize,
    _min: usize,
    current: &mut Vec<usize>,
    emit: &mut impl FnMut(&[usize]),
) {
    if count == 1 {
        if total >= 1 && current.last().map_or(true, |&last| total <= last) {
            current.push(total);
            emit(current);
            current.pop();
        }
        return;
    }
    let upper = current.last().copied().unwrap_or(total);
    for first in (1..=total.saturating_sub(count - 1).min(upper)).rev() {
        current.push(first);
        partitions(total - first, count - 1, 1, current, emit);
        current.pop();
    }
}

/// Canonical enumeration of test trees up to the structural bounds, in
/// ascending node-count order. Leaf-only tests are omitted: they succeed or
/// fail identically against every process. When the structural space is
/// larger than the cap, the suite holds the first `cap` tests in canonical
/// order and its descriptor says so; single-trace chains are always
/// included.
pub fn generate_tests(
    alphabet: &[String],
    depth: u32,
    branching: u32,
    denominators: &[u32],
    cap: u64,
) -> Result<TestSuite, EnumerationError> {
    assert!(depth >= 1 && branching >= 1);
    let mut gen = TreeGen {
        alphabet: alphabet.to_vec(),
        branching: branching as usize,
        splits: split_values(denominators),
        memo: std::collections::HashMap::new(),
    };
    // largest tree: every state carries `branching` transitions, each over a
    // two-point distribution
    let mut max_nodes = 1usize;
    for _ in 0..depth {
        max_nodes = 1 + 2 * branching as usize * max_nodes;
    }
    let mut all: Vec<TestTree> = Vec::new();
    let mut truncated = false;
    'outer: for n in 2..=max_nodes {
        for tree in gen.trees_exact(depth, n) {
            if all.len() as u64 >= cap {
                truncated = true;
                break 'outer;
            }
            all.push(tree);
        }
    }
    if truncated {
        // the chains are cheap and the theorems need them present
        let mut chains: Vec<TestTree> = Vec::new();
        let mut frontier: Vec<Vec<String>> = vec![Vec::new()];
        for _ in 0..depth {
            let mut next = Vec::new();
            for prefix in &frontier {
                for a in alphabet {
                    let mut t = prefix.clone();
                    t.push(a.clone());
                    chains.push(TestTree::single_trace(&t));
                    next.push(t);
                }
            }
            frontier = next;
        }
        for chain in chains {
            if !all.contains(&chain) {
                all.push(chain);
            }
        }
    }
    let tests = all
        .iter()
        .enumerate()
        .map(|(i, tree)| NamedTest {
            name: format!("gen_{i:04}"),
            npt: tree.to_npt(&format!("gen_{i:04}"), alphabet),
        })
        .collect();
    Ok(TestSuite {
        tests,
        descriptor: SuiteDescriptor {
            source: if truncated {
                format!("gen(first {cap} by size)")
            } else {
                "gen".to_string()
            },
            depth: Some(depth),
            branching: Some(branching),
            prob_denominators: denominators.to_vec(),
            closed: false,
        },
    })
}

/// Single-trace tests: one maximal computation labeled with the trace,
/// reaching success.
pub fn single_trace_suite(traces: &BTreeSet<Vec<String>>, alphabet: &[String]) -> TestSuite {
    let tests = traces
        .iter()
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, trace)| {
            let name = format!("chain_{i:04}");
            NamedTest {
                npt: TestTree::single_trace(trace).to_npt(&name, alphabet),
                name,
            }
        })
        .collect();
    TestSuite {
        tests,
        descriptor: SuiteDescriptor {
            source: "single-trace".to_string(),
            ..SuiteDescriptor::default()
        },
    }
}

/// Closes a suite under the three transformations consumed by the
/// inter-relation proofs: for every trace labeling a successful computation
/// of a member, keep success only along it, keep success only outside it,
/// and swap successful and unsuccessful final states. Idempotent; never adds
/// states.
pub fn close_suite(suite: &TestSuite) -> TestSuite {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut ordered: Vec<(String, TestTree)> = Vec::new();
    for t in &suite.tests {
        let tree = t.npt.to_tree();
        if seen.insert(tree.key()) {
            ordered.push((t.name.clone(), tree));
        }
    }
    let mut idx = 0;
    while idx < ordered.len() {
        let (base_name, tree) = ordered[idx].clone();
        let mut derived: Vec<TestTree> = vec![tree.dual()];
        for trace in tree.success_traces() {
            derived.push(tree.filter_success(&|t| t != trace.as_slice()));
            derived.push(tree.filter_success(&|t| t == trace.as_slice()));
        }
        for (k, d) in derived.into_iter().enumerate() {
            if seen.insert(d.key()) {
                ordered.push((format!("{base_name}_c{k}"), d));
            }
        }
        idx += 1;
    }
    let alphabet = suite
        .tests
        .first()
        .map(|t| {
            t.npt
                .model
                .alphabet()
                .map(|a| t.npt.model.action_name(a).to_string())
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    let tests = ordered
        .into_iter()
        .map(|(name, tree)| NamedTest {
            npt: tree.to_npt(&name, &alphabet),
            name,
        })
        .collect();
    TestSuite {
        tests,
        descriptor: SuiteDescriptor {
            closed: true,
            ..suite.descriptor.clone()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_generation_is_exhaustive() {
        let suite =
            generate_tests(&["a".to_string()], 1, 1, &[1], 1_000_000).unwrap();
        assert_eq!(suite.len(), 2);
        let keys: BTreeSet<String> = suite
            .tests
            .iter()
            .map(|t| t.npt.to_tree().key())
            .collect();
        assert!(keys.contains("[a(1*W)]"));
        assert!(keys.contains("[a(1*X)]"));
    }

    #[test]
    fn suite_contains_single_trace_chains_by_construction() {
        let suite = generate_tests(
            &["a".to_string(), "b".to_string()],
            2,
            2,
            &[1, 2],
            1_000_000,
        )
        .unwrap();
        let t_ab = TestTree::single_trace(&["a".to_string(), "b".to_string()]);
        assert!(suite
            .tests
            .iter()
            .any(|t| t.npt.to_tree() == t_ab));
    }

    #[test]
    fn generated_suite_contains_an_isomorph_of_the_split_test() {
        let suite = generate_tests(
            &["a".to_string(), "b".to_string(), "c".to_string()],
            3,
            2,
            &[2],
            20_000,
        )
        .unwrap();
        let fig5 = crate::fixtures::load_test("fig5_test").unwrap().to_tree();
        assert!(
            suite.tests.iter().any(|t| t.npt.to_tree() == fig5),
            "suite of {} tests lacks the split test",
            suite.len()
        );
    }

    #[test]
    fn closure_adds_dual_and_per_trace_restrictions() {
        let fig5 = crate::fixtures::load_test("fig5_test").unwrap();
        let suite = TestSuite::from_named_tests(
            "figure",
            vec![("fig5_test".to_string(), fig5)],
        );
        let closed = close_suite(&suite);
        assert!(closed.len() > 1);
        let trees: BTreeSet<TestTree> =
            closed.tests.iter().map(|t| t.npt.to_tree()).collect();
        let original = suite.tests[0].npt.to_tree();
        assert!(trees.contains(&original.dual()));
        // closure is idempotent
        let closed_again = close_suite(&closed);
        assert_eq!(closed_again.len(), closed.len());
    }

    #[test]
    fn single_trace_suite_skips_the_empty_trace() {
        let traces: BTreeSet<Vec<String>> =
            [vec![], vec!["a".to_string()]].into();
        let suite = single_trace_suite(&traces, &["a".to_string()]);
        assert_eq!(suite.len(), 1);
    }
}
