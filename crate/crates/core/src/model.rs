//! Domain types for nondeterministic and probabilistic labeled transition
//! systems: states, actions, distributions, transitions, validation, and
//! structural classification into the well-known process subclasses.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::One;
use serde::Serialize;
use thiserror::Error;

use crate::rational::{format_rat, Rat};

/// Interned state identifier; the ordinal is the declaration order and fixes
/// the canonical enumeration order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct StateId(pub u32);

/// Interned action symbol with a stable ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Action(pub u32);

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Action {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Finite probability distribution over states. Only positive entries are
/// stored, so the key set is exactly the support, and the values must sum to
/// exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distribution {
    entries: BTreeMap<StateId, Rat>,
}

impl Distribution {
    /// Builds a distribution, dropping zero entries and summing duplicates.
    /// Does not check that the total is one; `Nplts::validate` does.
    pub fn from_entries(entries: impl IntoIterator<Item = (StateId, Rat)>) -> Self {
        let mut map: BTreeMap<StateId, Rat> = BTreeMap::new();
        for (s, p) in entries {
            if p == crate::rational::rat_zero() {
                continue;
            }
            *map.entry(s).or_insert_with(crate::rational::rat_zero) += p;
        }
        map.retain(|_, p| *p != crate::rational::rat_zero());
        Distribution { entries: map }
    }

    pub fn point(target: StateId) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(target, crate::rational::rat_one());
        Distribution { entries }
    }

    pub fn support(&self) -> impl Iterator<Item = StateId> + '_ {
        self.entries.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &Rat)> + '_ {
        self.entries.iter().map(|(s, p)| (*s, p))
    }

    pub fn get(&self, s: StateId) -> Option<&Rat> {
        self.entries.get(&s)
    }

    pub fn total(&self) -> Rat {
        self.entries
            .values()
            .fold(crate::rational::rat_zero(), |acc, p| acc + p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One labeled transition `source --label--> target` where `target` is a
/// distribution over states. `index` is the position within the source
/// state's outgoing list and is stable under serialization round-trips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub source: StateId,
    pub label: Action,
    pub target: Distribution,
    pub index: usize,
}

/// Structural classification flags. A model can carry several flags at once;
/// `General` is set exactly when none of the specific ones holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ProcessClass {
    pub fully_nondeterministic: bool,
    pub fully_probabilistic: bool,
    pub reactive_probabilistic: bool,
    pub general: bool,
}

impl fmt::Display for ProcessClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.fully_nondeterministic {
            parts.push("fully-nondeterministic");
        }
        if self.fully_probabilistic {
            parts.push("fully-probabilistic");
        }
        if self.reactive_probabilistic {
            parts.push("reactive-probabilistic");
        }
        if self.general {
            parts.push("general");
        }
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("in state `{state}`, {label}-transition distribution sums to {sum}, expected 1")]
    DistributionSum {
        state: String,
        label: String,
        sum: String,
    },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("model has a cycle through states: {}", .0.join(" -> "))]
    CyclicModel(Vec<String>),
    #[error("model `{model}` reports {count} validation errors:\n{report}")]
    Invalid {
        model: String,
        count: usize,
        report: String,
    },
}

/// A finite, acyclic NPLTS. Immutable once validated; all analyses borrow it
/// read-only.
#[derive(Debug, Clone)]
pub struct Nplts {
    pub name: String,
    states: Vec<String>,
    actions: Vec<String>,
    transitions: Vec<Transition>,
    /// Indices into `transitions`, one bucket per state, in declaration order.
    outgoing: Vec<Vec<usize>>,
    enabled: Vec<BTreeSet<Action>>,
    state_lookup: HashMap<String, StateId>,
    action_lookup: HashMap<String, Action>,
}

impl Nplts {
    pub fn new(name: impl Into<String>) -> Self {
        Nplts {
            name: name.into(),
            states: Vec::new(),
            actions: Vec::new(),
            transitions: Vec::new(),
            outgoing: Vec::new(),
            enabled: Vec::new(),
            state_lookup: HashMap::new(),
            action_lookup: HashMap::new(),
        }
    }

    pub fn intern_state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.state_lookup.get(name) {
            return id;
        }
        let id = StateId(self.states.len() as u32);
        self.states.push(name.to_string());
        self.outgoing.push(Vec::new());
        self.enabled.push(BTreeSet::new());
        self.state_lookup.insert(name.to_string(), id);
        id
    }

    pub fn intern_action(&mut self, name: &str) -> Action {
        if let Some(&id) = self.action_lookup.get(name) {
            return id;
        }
        let id = Action(self.actions.len() as u32);
        self.actions.push(name.to_string());
        self.action_lookup.insert(name.to_string(), id);
        id
    }

    pub fn add_transition(&mut self, source: StateId, label: Action, target: Distribution) {
        for s in target.support() {
            assert!(s.index() < self.states.len(), "unknown support state");
        }
        let index = self.outgoing[source.index()].len();
        self.outgoing[source.index()].push(self.transitions.len());
        self.enabled[source.index()].insert(label);
        self.transitions.push(Transition {
            source,
            label,
            target,
            index,
        });
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_lookup.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<Action> {
        self.action_lookup.get(name).copied()
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.index()]
    }

    pub fn action_name(&self, a: Action) -> &str {
        &self.actions[a.index()]
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.states.len() as u32).map(StateId)
    }

    pub fn alphabet(&self) -> impl Iterator<Item = Action> + '_ {
        (0..self.actions.len() as u32).map(Action)
    }

    pub fn alphabet_len(&self) -> usize {
        self.actions.len()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Outgoing transitions of `s` in declaration order.
    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[s.index()].iter().map(|&i| &self.transitions[i])
    }

    pub fn outgoing_count(&self, s: StateId) -> usize {
        self.outgoing[s.index()].len()
    }

    pub fn outgoing_nth(&self, s: StateId, index: usize) -> Option<&Transition> {
        self.outgoing[s.index()].get(index).map(|&i| &self.transitions[i])
    }

    pub fn is_terminal(&self, s: StateId) -> bool {
        self.outgoing[s.index()].is_empty()
    }

    /// Set of labels on the outgoing transitions of `s`.
    pub fn enabled_actions(&self, s: StateId) -> Result<&BTreeSet<Action>, ModelError> {
        self.enabled
            .get(s.index())
            .ok_or_else(|| ModelError::UnknownState(format!("#{}", s.0)))
    }

    pub fn enabled(&self, s: StateId) -> &BTreeSet<Action> {
        &self.enabled[s.index()]
    }

    /// All states reachable from `s` through distribution supports,
    /// including `s` itself, in ascending ordinal order.
    pub fn reachable_from(&self, s: StateId) -> BTreeSet<StateId> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![s];
        while let Some(q) = stack.pop() {
            if !seen.insert(q) {
                continue;
            }
            for t in self.outgoing(q) {
                for child in t.target.support() {
                    if !seen.contains(&child) {
                        stack.push(child);
                    }
                }
            }
        }
        seen
    }

    /// Length of the longest path from `s`; zero for terminal states.
    /// Requires an acyclic model.
    pub fn depth_from(&self, s: StateId) -> usize {
        fn go(m: &Nplts, s: StateId, memo: &mut HashMap<StateId, usize>) -> usize {
            if let Some(&d) = memo.get(&s) {
                return d;
            }
            let d = m
                .outgoing(s)
                .flat_map(|t| t.target.support())
                .map(|c| go(m, c, memo) + 1)
                .max()
                .unwrap_or(0);
            memo.insert(s, d);
            d
        }
        go(self, s, &mut HashMap::new())
    }

    /// Tree unfolding from the given roots into one fresh model: every
    /// occurrence of a state along a distinct path becomes its own copy, so
    /// per-state choices on the result coincide with per-computation choices
    /// on the original. Identity (up to naming) on tree-shaped inputs.
    /// Repeat occurrences get a `~n` suffix, which no parsed name contains.
    pub fn unfold_from(&self, roots: &[StateId]) -> (Nplts, Vec<StateId>) {
        let mut out = Nplts::new(self.name.clone());
        for a in self.alphabet() {
            out.intern_action(self.action_name(a));
        }
        let mut occurrences: HashMap<StateId, usize> = HashMap::new();
        fn copy(
            src: &Nplts,
            out: &mut Nplts,
            occurrences: &mut HashMap<StateId, usize>,
            s: StateId,
        ) -> StateId {
            let n = occurrences.entry(s).or_insert(0);
            *n += 1;
            let name = if *n == 1 {
                src.state_name(s).to_string()
            } else {
                format!("{}~{}", src.state_name(s), n)
            };
            let fresh = out.intern_state(&name);
            for t in src.outgoing(s) {
                let entries: Vec<(StateId, Rat)> = t
                    .target
                    .iter()
                    .map(|(c, p)| (copy(src, out, occurrences, c), p.clone()))
                    .collect();
                let label = out
                    .action_id(src.action_name(t.label))
                    .expect("alphabet copied");
                out.add_transition(fresh, label, Distribution::from_entries(entries));
            }
            fresh
        }
        let fresh_roots = roots
            .iter()
            .map(|&r| copy(self, &mut out, &mut occurrences, r))
            .collect();
        (out, fresh_roots)
    }

    /// Checks every well-formedness requirement: distributions sum to one and
    /// the support graph is acyclic. Unknown states/actions cannot be built
    /// through the typed API, but the parser funnels its own lookups through
    /// `ModelError` too.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut errors: Vec<ModelError> = Vec::new();
        for t in &self.transitions {
            let sum = t.target.total();
            if !sum.is_one() || t.target.is_empty() {
                errors.push(ModelError::DistributionSum {
                    state: self.state_name(t.source).to_string(),
                    label: self.action_name(t.label).to_string(),
                    sum: format_rat(&sum),
                });
            }
        }
        if let Some(cycle) = self.find_cycle() {
            errors.push(ModelError::CyclicModel(
                cycle.iter().map(|s| self.state_name(*s).to_string()).collect(),
            ));
        }
        match errors.len() {
            0 => Ok(()),
            1 => Err(errors.pop().unwrap()),
            n => Err(ModelError::Invalid {
                model: self.name.clone(),
                count: n,
                report: errors
                    .iter()
                    .map(|e| format!("  - {e}"))
                    .collect::<Vec<_>>()
                    .join("\n"),
            }),
        }
    }

    /// Returns a witness cycle in the support graph, if any.
    fn find_cycle(&self) -> Option<Vec<StateId>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            White,
            Gray,
            Black,
        }
        fn dfs(
            m: &Nplts,
            s: StateId,
            marks: &mut [Mark],
            stack: &mut Vec<StateId>,
        ) -> Option<Vec<StateId>> {
            marks[s.index()] = Mark::Gray;
            stack.push(s);
            for t in m.outgoing(s) {
                for child in t.target.support() {
                    match marks[child.index()] {
                        Mark::Gray => {
                            let pos = stack.iter().position(|&q| q == child).unwrap();
                            let mut cycle: Vec<StateId> = stack[pos..].to_vec();
                            cycle.push(child);
                            return Some(cycle);
                        }
                        Mark::White => {
                            if let Some(c) = dfs(m, child, marks, stack) {
                                return Some(c);
                            }
                        }
                        Mark::Black => {}
                    }
                }
            }
            stack.pop();
            marks[s.index()] = Mark::Black;
            None
        }
        let mut marks = vec![Mark::White; self.states.len()];
        let mut stack = Vec::new();
        for s in self.states() {
            if marks[s.index()] == Mark::White {
                if let Some(c) = dfs(self, s, &mut marks, &mut stack) {
                    return Some(c);
                }
            }
        }
        None
    }

    /// Most specific structural class flags. Fully probabilistic implies
    /// reactive probabilistic by construction.
    pub fn classify(&self) -> ProcessClass {
        let mut fully_nondeterministic = true;
        let mut fully_probabilistic = true;
        let mut reactive = true;
        for s in self.states() {
            if self.outgoing_count(s) > 1 {
                fully_probabilistic = false;
            }
            let mut seen = BTreeSet::new();
            for t in self.outgoing(s) {
                if t.target.len() > 1 {
                    fully_nondeterministic = false;
                }
                if !seen.insert(t.label) {
                    reactive = false;
                }
            }
        }
        if fully_probabilistic {
            // at most one outgoing transition means no same-action pair
            debug_assert!(reactive);
        }
        let general = !fully_nondeterministic && !fully_probabilistic && !reactive;
        ProcessClass {
            fully_nondeterministic,
            fully_probabilistic,
            reactive_probabilistic: reactive,
            general,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn two_level(name: &str) -> Nplts {
        let mut m = Nplts::new(name);
        let s = m.intern_state("s");
        let t = m.intern_state("t");
        let u = m.intern_state("u");
        let a = m.intern_action("a");
        m.add_transition(
            s,
            a,
            Distribution::from_entries([(t, rat(1, 2)), (u, rat(1, 2))]),
        );
        m
    }

    #[test]
    fn distribution_drops_zero_entries() {
        let d = Distribution::from_entries([
            (StateId(0), rat(1, 2)),
            (StateId(1), rat(0, 1)),
            (StateId(2), rat(1, 2)),
        ]);
        assert_eq!(d.len(), 2);
        assert!(d.get(StateId(1)).is_none());
    }

    #[test]
    fn validates_distribution_sums() {
        let mut m = Nplts::new("bad");
        let s = m.intern_state("s");
        let t = m.intern_state("t");
        let a = m.intern_action("a");
        m.add_transition(s, a, Distribution::from_entries([(t, rat(1, 2))]));
        match m.validate() {
            Err(ModelError::DistributionSum { sum, .. }) => assert_eq!(sum, "1/2"),
            other => panic!("expected sum error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_self_support_cycle() {
        let mut m = Nplts::new("cyclic");
        let s = m.intern_state("s");
        let a = m.intern_action("a");
        m.add_transition(s, a, Distribution::point(s));
        match m.validate() {
            Err(ModelError::CyclicModel(names)) => assert_eq!(names, vec!["s", "s"]),
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn classify_flags_are_monotone() {
        let m = two_level("m");
        let c = m.classify();
        assert!(c.fully_probabilistic);
        assert!(c.reactive_probabilistic);
        assert!(!c.fully_nondeterministic);
        assert!(!c.general);
    }

    #[test]
    fn enabled_actions_are_exact() {
        let m = two_level("m");
        let s = m.state_id("s").unwrap();
        let t = m.state_id("t").unwrap();
        let a = m.action_id("a").unwrap();
        assert_eq!(
            m.enabled(s).iter().copied().collect::<Vec<_>>(),
            vec![a]
        );
        assert!(m.enabled(t).is_empty());
    }
}
