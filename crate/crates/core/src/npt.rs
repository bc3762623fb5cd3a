//! Tests: finite acyclic models with a distinguished terminal success state,
//! plus a canonical tree form used for test generation and suite closure.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::model::{Distribution, Nplts, StateId};
use crate::rational::{format_rat, Rat};
use crate::textfmt::{DocumentKind, ModelDocument};

#[derive(Debug, Error)]
pub enum NptError {
    #[error("document `{0}` is not a test (missing or invalid success state)")]
    NotATest(String),
}

/// A validated test: model, initial state, and the success state.
#[derive(Debug, Clone)]
pub struct Npt {
    pub model: Nplts,
    pub root: StateId,
    pub success: StateId,
}

impl Npt {
    /// The root is the state that has outgoing transitions but no incoming
    /// edge; a test whose every state is terminal starts at the success
    /// state itself.
    pub fn from_document(doc: &ModelDocument) -> Result<Npt, NptError> {
        if doc.kind != DocumentKind::Test {
            return Err(NptError::NotATest(doc.model.name.clone()));
        }
        let success = doc
            .success
            .ok_or_else(|| NptError::NotATest(doc.model.name.clone()))?;
        let m = &doc.model;
        let mut has_incoming = vec![false; m.state_count()];
        for t in m.transitions() {
            for s in t.target.support() {
                has_incoming[s.index()] = true;
            }
        }
        let root = m
            .states()
            .find(|&s| m.outgoing_count(s) > 0 && !has_incoming[s.index()])
            .unwrap_or(success);
        Ok(Npt {
            model: m.clone(),
            root,
            success,
        })
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            kind: DocumentKind::Test,
            model: self.model.clone(),
            success: Some(self.success),
        }
    }

    /// Unfolds the (acyclic) test into its canonical tree form.
    pub fn to_tree(&self) -> TestTree {
        fn go(npt: &Npt, s: StateId) -> TestTree {
            if npt.model.is_terminal(s) {
                return TestTree::leaf(s == npt.success);
            }
            let transitions = npt
                .model
                .outgoing(s)
                .map(|t| {
                    let action = npt.model.action_name(t.label).to_string();
                    let children = t
                        .target
                        .iter()
                        .map(|(c, p)| (p.clone(), go(npt, c)))
                        .collect();
                    (action, children)
                })
                .collect();
            TestTree::Node { transitions: transitions }
        }
        go(self, self.root).canonical()
    }
}

/// Canonical tree form of a test. Distributions merge structurally equal
/// subtrees and sort entries, so isomorphic tests have equal trees.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TestTree {
    Leaf { success: bool },
    Node { transitions: Vec<(String, Vec<(Rat, TestTree)>)> },
}

impl TestTree {
    pub fn leaf(success: bool) -> TestTree {
        TestTree::Leaf { success }
    }

    pub fn single_child(action: &str, child: TestTree) -> TestTree {
        TestTree::Node {
            transitions: vec![(action.to_string(), vec![(crate::rational::rat_one(), child)])],
        }
    }

    /// Chain test with a single maximal computation labeled `trace` that
    /// reaches success.
    pub fn single_trace(trace: &[String]) -> TestTree {
        let mut tree = TestTree::leaf(true);
        for action in trace.iter().rev() {
            tree = TestTree::single_child(action, tree);
        }
        tree
    }

    pub fn node_count(&self) -> usize {
        match self {
            TestTree::Leaf { .. } => 1,
            TestTree::Node { transitions } => {
                1 + transitions
                    .iter()
                    .flat_map(|(_, d)| d.iter())
                    .map(|(_, c)| c.node_count())
                    .sum::<usize>()
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TestTree::Leaf { .. } => 0,
            TestTree::Node { transitions } => {
                1 + transitions
                    .iter()
                    .flat_map(|(_, d)| d.iter())
                    .map(|(_, c)| c.depth())
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    /// Sorts transitions and distribution entries and merges equal subtrees
    /// within each distribution.
    pub fn canonical(&self) -> TestTree {
        match self {
            TestTree::Leaf { success } => TestTree::leaf(*success),
            TestTree::Node { transitions } => {
                let mut canon: Vec<(String, Vec<(Rat, TestTree)>)> = transitions
                    .iter()
                    .map(|(a, dist)| {
                        let mut merged: BTreeMap<TestTree, Rat> = BTreeMap::new();
                        for (p, child) in dist {
                            *merged
                                .entry(child.canonical())
                                .or_insert_with(crate::rational::rat_zero) += p;
                        }
                        let entries: Vec<(Rat, TestTree)> = merged
                            .into_iter()
                            .map(|(child, p)| (p, child))
                            .collect();
                        (a.clone(), entries)
                    })
                    .collect();
                canon.sort();
                canon.dedup();
                TestTree::Node { transitions: canon }
            }
        }
    }

    /// Stable textual key for dedup and canonical ordering.
    pub fn key(&self) -> String {
        match self {
            TestTree::Leaf { success } => {
                if *success {
                    "W".to_string()
                } else {
                    "X".to_string()
                }
            }
            TestTree::Node { transitions } => {
                let parts: Vec<String> = transitions
                    .iter()
                    .map(|(a, dist)| {
                        let entries: Vec<String> = dist
                            .iter()
                            .map(|(p, c)| format!("{}*{}", format_rat(p), c.key()))
                            .collect();
                        format!("{a}({})", entries.join("+"))
                    })
                    .collect();
                format!("[{}]", parts.join(","))
            }
        }
    }

    /// Traces labeling maximal computations that reach a success leaf.
    pub fn success_traces(&self) -> Vec<Vec<String>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        fn go(tree: &TestTree, prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
            match tree {
                TestTree::Leaf { success } => {
                    if *success && !out.contains(prefix) {
                        out.push(prefix.clone());
                    }
                }
                TestTree::Node { transitions } => {
                    for (a, dist) in transitions {
                        prefix.push(a.clone());
                        for (_, child) in dist {
                            go(child, prefix, out);
                        }
                        prefix.pop();
                    }
                }
            }
        }
        go(self, &mut prefix, &mut out);
        out.sort();
        out
    }

    /// Keeps a success leaf exactly when `keep` accepts the trace of the
    /// maximal computation reaching it.
    pub fn filter_success(&self, keep: &impl Fn(&[String]) -> bool) -> TestTree {
        fn go(
            tree: &TestTree,
            prefix: &mut Vec<String>,
            keep: &impl Fn(&[String]) -> bool,
        ) -> TestTree {
            match tree {
                TestTree::Leaf { success } => TestTree::leaf(*success && keep(prefix)),
                TestTree::Node { transitions } => TestTree::Node {
                    transitions: transitions
                        .iter()
                        .map(|(a, dist)| {
                            prefix.push(a.clone());
                            let dist = dist
                                .iter()
                                .map(|(p, c)| (p.clone(), go(c, prefix, keep)))
                                .collect();
                            prefix.pop();
                            (a.clone(), dist)
                        })
                        .collect(),
                },
            }
        }
        go(self, &mut Vec::new(), keep).canonical()
    }

    /// Swaps successful and unsuccessful terminal states.
    pub fn dual(&self) -> TestTree {
        match self {
            TestTree::Leaf { success } => TestTree::leaf(!success),
            TestTree::Node { transitions } => TestTree::Node {
                transitions: transitions
                    .iter()
                    .map(|(a, dist)| {
                        (
                            a.clone(),
                            dist.iter().map(|(p, c)| (p.clone(), c.dual())).collect(),
                        )
                    })
                    .collect(),
            },
        }
        .canonical()
    }

    pub fn has_success(&self) -> bool {
        match self {
            TestTree::Leaf { success } => *success,
            TestTree::Node { transitions } => transitions
                .iter()
                .flat_map(|(_, d)| d.iter())
                .any(|(_, c)| c.has_success()),
        }
    }

    /// Converts the tree to an NPT over fresh state names. All success
    /// leaves share one `w` state and all plain leaves share one `stop`
    /// state, so the success state stays unique.
    pub fn to_npt(&self, name: &str, alphabet: &[String]) -> Npt {
        let mut model = Nplts::new(name);
        for a in alphabet {
            model.intern_action(a);
        }
        let success = model.intern_state("w");
        let stop = model.intern_state("stop");
        let mut counter = 0usize;
        fn go(
            tree: &TestTree,
            model: &mut Nplts,
            success: StateId,
            stop: StateId,
            counter: &mut usize,
        ) -> StateId {
            match tree {
                TestTree::Leaf { success: true } => success,
                TestTree::Leaf { success: false } => stop,
                TestTree::Node { transitions } => {
                    let id = *counter;
                    *counter += 1;
                    let state = model.intern_state(&format!("t{id}"));
                    for (a, dist) in transitions {
                        let label = model
                            .action_id(a)
                            .unwrap_or_else(|| model.intern_action(a));
                        let entries: Vec<(StateId, Rat)> = dist
                            .iter()
                            .map(|(p, c)| (go(c, model, success, stop, counter), p.clone()))
                            .collect();
                        model.add_transition(state, label, Distribution::from_entries(entries));
                    }
                    state
                }
            }
        }
        let root = go(self, &mut model, success, stop, &mut counter);
        debug_assert!(model.validate().is_ok());
        Npt {
            model,
            root,
            success,
        }
    }
}
