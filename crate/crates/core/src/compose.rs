//! CSP-style parallel composition and interaction systems with tests.
//!
//! Actions in the synchronization set require both components to move and
//! multiply their target distributions; all other actions move one component
//! while the other stays put with probability one. Only configurations
//! reachable from the requested roots are materialized.

use std::collections::{BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::model::{Action, Distribution, ModelError, Nplts, StateId};
use crate::npt::Npt;
use crate::rational::Rat;

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("synchronization action `{0}` is in neither alphabet")]
    AlphabetMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Product of a process and a test under full synchronization, with the
/// success predicate marking configurations whose test component is the
/// test's success state.
#[derive(Debug, Clone)]
pub struct InteractionSystem {
    pub product: Nplts,
    pub root: StateId,
    success: Vec<bool>,
    /// Product state -> (process state, test state).
    pairing: Vec<(StateId, StateId)>,
}

impl InteractionSystem {
    pub fn is_success(&self, config: StateId) -> bool {
        self.success[config.index()]
    }

    pub fn components(&self, config: StateId) -> (StateId, StateId) {
        self.pairing[config.index()]
    }

    /// Tree unfolding of the product from the root, carrying the success
    /// predicate. Interleaving products reconverge, and resolution spaces
    /// are defined over unfoldings, so checkers analyze this form.
    pub fn unfolded(&self) -> InteractionSystem {
        let (product, roots) = self.product.unfold_from(&[self.root]);
        let mut success = vec![false; product.state_count()];
        let mut pairing = vec![(StateId(0), StateId(0)); product.state_count()];
        for s in product.states() {
            let name = product.state_name(s);
            let base = name.split('~').next().unwrap();
            let original = self
                .product
                .state_id(base)
                .expect("unfolded state maps back");
            success[s.index()] = self.success[original.index()];
            pairing[s.index()] = self.pairing[original.index()];
        }
        InteractionSystem {
            product,
            root: roots[0],
            success,
            pairing,
        }
    }
}

struct ProductBuilder<'a> {
    left: &'a Nplts,
    right: &'a Nplts,
    sync: BTreeSet<String>,
    product: Nplts,
    pairing: Vec<(StateId, StateId)>,
    lookup: HashMap<(StateId, StateId), StateId>,
    /// Left/right action id -> product action id.
    left_actions: Vec<Action>,
    right_actions: Vec<Action>,
}

impl<'a> ProductBuilder<'a> {
    fn new(left: &'a Nplts, right: &'a Nplts, sync: &BTreeSet<String>, name: String) -> Self {
        let mut product = Nplts::new(name);
        let left_actions = left
            .alphabet()
            .map(|a| product.intern_action(left.action_name(a)))
            .collect();
        let right_actions = right
            .alphabet()
            .map(|a| product.intern_action(right.action_name(a)))
            .collect();
        ProductBuilder {
            left,
            right,
            sync: sync.clone(),
            product,
            pairing: Vec::new(),
            lookup: HashMap::new(),
            left_actions,
            right_actions,
        }
    }

    fn config(&mut self, pair: (StateId, StateId)) -> StateId {
        if let Some(&id) = self.lookup.get(&pair) {
            return id;
        }
        let name = format!(
            "({},{})",
            self.left.state_name(pair.0),
            self.right.state_name(pair.1)
        );
        let id = self.product.intern_state(&name);
        debug_assert_eq!(id.index(), self.pairing.len());
        self.pairing.push(pair);
        self.lookup.insert(pair, id);
        id
    }

    fn is_sync(&self, name: &str) -> bool {
        self.sync.contains(name)
    }

    fn build_from(&mut self, roots: &[(StateId, StateId)]) -> Vec<StateId> {
        let root_ids: Vec<StateId> = roots.iter().map(|&r| self.config(r)).collect();
        let mut queue: VecDeque<StateId> = root_ids.iter().copied().collect();
        let mut expanded = vec![false; 0];
        while let Some(config) = queue.pop_front() {
            if config.index() < expanded.len() && expanded[config.index()] {
                continue;
            }
            if expanded.len() <= config.index() {
                expanded.resize(config.index() + 1, false);
            }
            expanded[config.index()] = true;
            let (s1, s2) = self.pairing[config.index()];
            let mut new_transitions: Vec<(Action, Vec<(StateId, Rat)>)> = Vec::new();
            for t1 in self.left.outgoing(s1) {
                let label = self.left.action_name(t1.label);
                if self.is_sync(label) {
                    for t2 in self.right.outgoing(s2) {
                        if self.right.action_name(t2.label) != label {
                            continue;
                        }
                        let mut entries = Vec::new();
                        for (c1, p1) in t1.target.iter() {
                            for (c2, p2) in t2.target.iter() {
                                entries.push((self.config((c1, c2)), p1 * p2));
                            }
                        }
                        new_transitions.push((self.left_actions[t1.label.index()], entries));
                    }
                } else {
                    let entries = t1
                        .target
                        .iter()
                        .map(|(c1, p1)| (self.config((c1, s2)), p1.clone()))
                        .collect();
                    new_transitions.push((self.left_actions[t1.label.index()], entries));
                }
            }
            for t2 in self.right.outgoing(s2) {
                let label = self.right.action_name(t2.label);
                if !self.is_sync(label) {
                    let entries = t2
                        .target
                        .iter()
                        .map(|(c2, p2)| (self.config((s1, c2)), p2.clone()))
                        .collect();
                    new_transitions.push((self.right_actions[t2.label.index()], entries));
                }
            }
            for (label, entries) in new_transitions {
                for (child, _) in &entries {
                    if child.index() >= expanded.len() || !expanded[child.index()] {
                        queue.push_back(*child);
                    }
                }
                self.product
                    .add_transition(config, label, Distribution::from_entries(entries));
            }
        }
        root_ids
    }
}

/// Parallel composition materialized from a single root configuration.
/// Acyclicity is inherited from acyclic inputs, and the result is validated.
pub fn parallel_compose(
    m1: &Nplts,
    m2: &Nplts,
    sync: &BTreeSet<String>,
    root: (StateId, StateId),
) -> Result<Nplts, ComposeError> {
    let (model, _roots) = parallel_compose_multi(m1, m2, sync, &[root])?;
    Ok(model)
}

/// Same product construction but reachable from several root configurations
/// at once; used to compare two composite states inside one model.
pub fn parallel_compose_multi(
    m1: &Nplts,
    m2: &Nplts,
    sync: &BTreeSet<String>,
    roots: &[(StateId, StateId)],
) -> Result<(Nplts, Vec<StateId>), ComposeError> {
    for action in sync {
        if m1.action_id(action).is_none() && m2.action_id(action).is_none() {
            return Err(ComposeError::AlphabetMismatch(action.clone()));
        }
    }
    for (s1, s2) in roots {
        if s1.index() >= m1.state_count() {
            return Err(ComposeError::UnknownState(format!("#{}", s1.0)));
        }
        if s2.index() >= m2.state_count() {
            return Err(ComposeError::UnknownState(format!("#{}", s2.0)));
        }
    }
    let name = format!("{}_par_{}", m1.name, m2.name);
    let mut builder = ProductBuilder::new(m1, m2, sync, name);
    let root_ids = builder.build_from(roots);
    let product = builder.product;
    product.validate()?;
    Ok((product, root_ids))
}

/// Fully synchronous composition of a process state with a test: the
/// synchronization set is the union of both alphabets.
pub fn interaction_system(
    process: &Nplts,
    start: StateId,
    test: &Npt,
) -> Result<InteractionSystem, ComposeError> {
    interaction_pair(process, &[start], test).map(|(mut list, _)| list.pop().unwrap())
}

/// Builds interaction systems for several process states against one test,
/// sharing nothing; returns one system per state plus the sync set used.
pub fn interaction_pair(
    process: &Nplts,
    starts: &[StateId],
    test: &Npt,
) -> Result<(Vec<InteractionSystem>, BTreeSet<String>), ComposeError> {
    let mut sync: BTreeSet<String> = process
        .alphabet()
        .map(|a| process.action_name(a).to_string())
        .collect();
    sync.extend(test.model.alphabet().map(|a| test.model.action_name(a).to_string()));
    let mut systems = Vec::new();
    for &s in starts {
        let mut builder = ProductBuilder::new(
            process,
            &test.model,
            &sync,
            format!("{}_x_{}", process.name, test.model.name),
        );
        let roots = builder.build_from(&[(s, test.root)]);
        let product = builder.product;
        product.validate()?;
        let success = builder
            .pairing
            .iter()
            .map(|&(_, o)| o == test.success)
            .collect();
        systems.push(InteractionSystem {
            product,
            root: roots[0],
            success,
            pairing: builder.pairing,
        });
    }
    Ok((systems, sync))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;

    #[test]
    fn fully_synchronous_product_of_the_two_example_models() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let fig1b = fixtures::load_model("fig1b").unwrap();
        let sync: BTreeSet<String> = fig1a
            .alphabet()
            .map(|a| fig1a.action_name(a).to_string())
            .collect();
        let s1 = fig1a.state_id("s1").unwrap();
        let s2 = fig1b.state_id("s2").unwrap();
        let product = parallel_compose(&fig1a, &fig1b, &sync, (s1, s2)).unwrap();
        let root = product.state_id("(s1,s2)").unwrap();
        assert_eq!(product.outgoing_count(root), 2);
        for t in product.outgoing(root) {
            assert_eq!(t.target.len(), 4);
            for (_, p) in t.target.iter() {
                assert_eq!(p, &rat(1, 4));
            }
            // only the branches whose enabled actions agree keep successors
            let with_moves = t
                .target
                .support()
                .filter(|c| product.outgoing_count(*c) > 0)
                .count();
            assert_eq!(with_moves, 2);
        }
    }

    #[test]
    fn interleaving_with_terminal_partner_is_isomorphic() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let mut unit = Nplts::new("unit");
        let u = unit.intern_state("idle");
        unit.intern_action("a");
        unit.validate().unwrap();
        let s1 = fig1a.state_id("s1").unwrap();
        let product =
            parallel_compose(&fig1a, &unit, &BTreeSet::new(), (s1, u)).unwrap();
        assert_eq!(
            product.state_count(),
            fig1a.reachable_from(s1).len()
        );
        assert_eq!(product.transitions().len(), 6);
    }

    #[test]
    fn full_sync_with_terminal_partner_blocks_everything() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let mut unit = Nplts::new("unit");
        let u = unit.intern_state("idle");
        unit.intern_action("a");
        unit.validate().unwrap();
        let sync: BTreeSet<String> = fig1a
            .alphabet()
            .map(|a| fig1a.action_name(a).to_string())
            .collect();
        let s1 = fig1a.state_id("s1").unwrap();
        let product = parallel_compose(&fig1a, &unit, &sync, (s1, u)).unwrap();
        assert_eq!(product.state_count(), 1);
        assert!(product.transitions().is_empty());
    }

    #[test]
    fn interaction_with_lone_success_state_is_terminal_and_successful() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let doc = crate::textfmt::parse("test T\nalphabet a\nsuccess w\n").unwrap();
        let test = Npt::from_document(&doc).unwrap();
        let s1 = fig1a.state_id("s1").unwrap();
        let sys = interaction_system(&fig1a, s1, &test).unwrap();
        assert!(sys.is_success(sys.root));
        assert!(sys.product.is_terminal(sys.root));
    }

    #[test]
    fn sync_on_unknown_action_is_rejected() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let fig1b = fixtures::load_model("fig1b").unwrap();
        let sync: BTreeSet<String> = ["zz".to_string()].into();
        let s1 = fig1a.state_id("s1").unwrap();
        let s2 = fig1b.state_id("s2").unwrap();
        let err = parallel_compose(&fig1a, &fig1b, &sync, (s1, s2)).unwrap_err();
        assert!(matches!(err, ComposeError::AlphabetMismatch(_)));
    }
}
