//! Schedulers, resolution enumeration, and probability computations over
//! resolutions.
//!
//! Schedulers are per-state maps (history independent), so a resolution is
//! represented by the model, a start state, and the choice map; the state
//! correspondence is the identity embedding. All probability computations
//! are dynamic programs memoized on (state, trace position), which is sound
//! because choices are per-state and models are acyclic.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;
use thiserror::Error;

use crate::compose::InteractionSystem;
use crate::model::{Action, Distribution, Nplts, StateId};
use crate::rational::{format_rat, rat_one, rat_zero, Rat};

pub type Trace = Vec<Action>;

/// Trace plus a set of actions that must all be disabled (in the original
/// model) at the endpoint.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FailurePair {
    pub trace: Trace,
    pub refused: BTreeSet<Action>,
}

/// Per-step constraints: the action performed and the set that must be
/// disjoint from (失败 trace) or exactly equal to (ready trace) the enabled
/// set of the state reached by that step.
pub type AnnotatedTrace = Vec<(Action, BTreeSet<Action>)>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnumerationError {
    #[error("enumeration would produce {count} items, exceeding the cap of {cap}")]
    CapExceeded { cap: u64, count: u128 },
}

/// Deterministic per-state scheduler: states absent from the map halt.
/// Unreachable states are never recorded, so equal maps mean equal
/// resolutions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Scheduler {
    choices: BTreeMap<StateId, usize>,
}

impl Scheduler {
    pub fn empty() -> Self {
        Scheduler {
            choices: BTreeMap::new(),
        }
    }

    pub fn from_choices(choices: impl IntoIterator<Item = (StateId, usize)>) -> Self {
        Scheduler {
            choices: choices.into_iter().collect(),
        }
    }

    pub fn chosen(&self, s: StateId) -> Option<usize> {
        self.choices.get(&s).copied()
    }

    pub fn is_maximal(&self, model: &Nplts, start: StateId) -> bool {
        let mut stack = vec![start];
        let mut seen = BTreeSet::new();
        while let Some(s) = stack.pop() {
            if !seen.insert(s) {
                continue;
            }
            match self.chosen(s) {
                None => {
                    if model.outgoing_count(s) > 0 {
                        return false;
                    }
                }
                Some(i) => {
                    for c in model.outgoing_nth(s, i).expect("valid index").target.support() {
                        stack.push(c);
                    }
                }
            }
        }
        true
    }

    /// Parses lines produced by `to_lines`, for witness replay.
    pub fn from_lines(model: &Nplts, lines: &[String]) -> Option<Scheduler> {
        let mut choices = BTreeMap::new();
        for line in lines {
            let (state, rest) = line.split_once(" -> ")?;
            let state = model.state_id(state.trim())?;
            let rest = rest.trim();
            if rest == "halt" {
                continue;
            }
            let index: usize = rest.strip_prefix('#')?.split('(').next()?.parse().ok()?;
            choices.insert(state, index);
        }
        Some(Scheduler { choices })
    }

    /// Witness serialization: one line per decided state.
    pub fn to_lines(&self, model: &Nplts) -> Vec<String> {
        let mut reachable: Vec<StateId> = self.choices.keys().copied().collect();
        reachable.sort();
        reachable
            .iter()
            .map(|&s| {
                let i = self.choices[&s];
                let t = model.outgoing_nth(s, i).expect("valid index");
                format!(
                    "{} -> #{}({})",
                    model.state_name(s),
                    i,
                    model.action_name(t.label)
                )
            })
            .collect()
    }
}

/// Randomized per-state scheduler: each decided state mixes equally labeled
/// transitions with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RandomizedScheduler {
    choices: BTreeMap<StateId, Mix>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mix {
    pub action: Action,
    /// (transition index within the state's same-action transitions, weight)
    pub weights: Vec<(usize, Rat)>,
}

impl RandomizedScheduler {
    pub fn from_choices(choices: impl IntoIterator<Item = (StateId, Mix)>) -> Self {
        RandomizedScheduler {
            choices: choices.into_iter().collect(),
        }
    }

    pub fn chosen(&self, s: StateId) -> Option<&Mix> {
        self.choices.get(&s)
    }

    pub fn to_lines(&self, model: &Nplts) -> Vec<String> {
        self.choices
            .iter()
            .map(|(&s, mix)| {
                let parts: Vec<String> = mix
                    .weights
                    .iter()
                    .map(|(i, w)| format!("#{}:{}", i, format_rat(w)))
                    .collect();
                format!(
                    "{} -> {} {{ {} }}",
                    model.state_name(s),
                    model.action_name(mix.action),
                    parts.join(" ")
                )
            })
            .collect()
    }
}

/// A resolution: the fully probabilistic process induced by a scheduler.
/// `steps` holds the effective (label, combined target distribution) per
/// decided state.
#[derive(Debug, Clone)]
pub struct ResolutionView<'m> {
    pub model: &'m Nplts,
    pub start: StateId,
    steps: HashMap<StateId, (Action, Distribution)>,
    lines: Vec<String>,
}

impl<'m> ResolutionView<'m> {
    pub fn deterministic(model: &'m Nplts, start: StateId, sched: &Scheduler) -> Self {
        let mut steps = HashMap::new();
        for (&s, &i) in &sched.choices {
            let t = model.outgoing_nth(s, i).expect("valid transition index");
            steps.insert(s, (t.label, t.target.clone()));
        }
        ResolutionView {
            model,
            start,
            steps,
            lines: sched.to_lines(model),
        }
    }

    pub fn randomized(model: &'m Nplts, start: StateId, sched: &RandomizedScheduler) -> Self {
        let mut steps = HashMap::new();
        for (&s, mix) in &sched.choices {
            let mut entries: Vec<(StateId, Rat)> = Vec::new();
            for (i, w) in &mix.weights {
                let t = model.outgoing_nth(s, *i).expect("valid transition index");
                debug_assert_eq!(t.label, mix.action);
                for (c, p) in t.target.iter() {
                    entries.push((c, p * w));
                }
            }
            steps.insert(s, (mix.action, Distribution::from_entries(entries)));
        }
        ResolutionView {
            model,
            start,
            steps,
            lines: sched.to_lines(model),
        }
    }

    pub fn step(&self, s: StateId) -> Option<&(Action, Distribution)> {
        self.steps.get(&s)
    }

    pub fn scheduler_lines(&self) -> &[String] {
        &self.lines
    }

    /// Probability of the set of trace-compatible computations from the
    /// start state. Compatible computations all have length |trace|, so none
    /// prefixes another and their probabilities sum.
    pub fn trace_prob(&self, trace: &[Action]) -> Rat {
        let mut memo: HashMap<(StateId, usize), Rat> = HashMap::new();
        self.trace_prob_at(self.start, trace, 0, &mut memo)
    }

    fn trace_prob_at(
        &self,
        s: StateId,
        trace: &[Action],
        pos: usize,
        memo: &mut HashMap<(StateId, usize), Rat>,
    ) -> Rat {
        if pos == trace.len() {
            return rat_one();
        }
        if let Some(v) = memo.get(&(s, pos)) {
            return v.clone();
        }
        let v = match self.step(s) {
            Some((label, dist)) if *label == trace[pos] => dist
                .iter()
                .map(|(c, p)| p * self.trace_prob_at(c, trace, pos + 1, memo))
                .fold(rat_zero(), |acc, x| acc + x),
            _ => rat_zero(),
        };
        memo.insert((s, pos), v.clone());
        v
    }

    /// Finite map of every trace with positive probability, including the
    /// empty trace at probability one.
    pub fn trace_distribution(&self) -> BTreeMap<Trace, Rat> {
        let mut memo: HashMap<StateId, BTreeMap<Trace, Rat>> = HashMap::new();
        self.trace_dist_at(self.start, &mut memo)
    }

    fn trace_dist_at(
        &self,
        s: StateId,
        memo: &mut HashMap<StateId, BTreeMap<Trace, Rat>>,
    ) -> BTreeMap<Trace, Rat> {
        if let Some(d) = memo.get(&s) {
            return d.clone();
        }
        let mut dist: BTreeMap<Trace, Rat> = BTreeMap::new();
        dist.insert(Vec::new(), rat_one());
        if let Some((label, target)) = self.step(s) {
            let mut summed: BTreeMap<Trace, Rat> = BTreeMap::new();
            for (c, p) in target.iter() {
                for (trace, q) in self.trace_dist_at(c, memo) {
                    *summed.entry(trace).or_insert_with(rat_zero) += p * q;
                }
            }
            for (trace, q) in summed {
                let mut prefixed = Vec::with_capacity(trace.len() + 1);
                prefixed.push(*label);
                prefixed.extend(trace);
                dist.insert(prefixed, q);
            }
        }
        memo.insert(s, dist.clone());
        dist
    }

    /// Probability of trace-compatible computations whose endpoint refuses
    /// every action in the failure set, judged in the original model.
    pub fn failure_prob(&self, pair: &FailurePair) -> Rat {
        let steps: AnnotatedTrace = pair
            .trace
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                if i + 1 == pair.trace.len() {
                    (a, pair.refused.clone())
                } else {
                    (a, BTreeSet::new())
                }
            })
            .collect();
        if pair.trace.is_empty() {
            return if self.model.enabled(self.start).is_disjoint(&pair.refused) {
                rat_one()
            } else {
                rat_zero()
            };
        }
        self.failure_trace_prob(&steps)
    }

    /// Per-step refusal constraints: each intermediate state's enabled set in
    /// the original model must be disjoint from the step's set.
    pub fn failure_trace_prob(&self, steps: &AnnotatedTrace) -> Rat {
        self.annotated_prob(steps, &|enabled, set| enabled.is_disjoint(set))
    }

    /// Per-step readiness constraints: enabled sets must equal the step's set.
    pub fn ready_trace_prob(&self, steps: &AnnotatedTrace) -> Rat {
        self.annotated_prob(steps, &|enabled, set| enabled == set)
    }

    fn annotated_prob(
        &self,
        steps: &AnnotatedTrace,
        ok: &impl Fn(&BTreeSet<Action>, &BTreeSet<Action>) -> bool,
    ) -> Rat {
        fn go<'m>(
            view: &ResolutionView<'m>,
            s: StateId,
            steps: &AnnotatedTrace,
            pos: usize,
            ok: &impl Fn(&BTreeSet<Action>, &BTreeSet<Action>) -> bool,
            memo: &mut HashMap<(StateId, usize), Rat>,
        ) -> Rat {
            if pos == steps.len() {
                return rat_one();
            }
            if let Some(v) = memo.get(&(s, pos)) {
                return v.clone();
            }
            let (action, ref set) = steps[pos];
            let v = match view.step(s) {
                Some((label, dist)) if *label == action => dist
                    .iter()
                    .map(|(c, p)| {
                        if ok(view.model.enabled(c), set) {
                            p * go(view, c, steps, pos + 1, ok, memo)
                        } else {
                            rat_zero()
                        }
                    })
                    .fold(rat_zero(), |acc, x| acc + x),
                _ => rat_zero(),
            };
            memo.insert((s, pos), v.clone());
            v
        }
        go(self, self.start, steps, 0, ok, &mut HashMap::new())
    }

    /// Map of every positive-probability ready trace (action plus exact
    /// enabled set of the reached state, per step), including the empty one.
    pub fn ready_trace_distribution(&self) -> BTreeMap<AnnotatedTrace, Rat> {
        fn go<'m>(
            view: &ResolutionView<'m>,
            s: StateId,
            memo: &mut HashMap<StateId, BTreeMap<AnnotatedTrace, Rat>>,
        ) -> BTreeMap<AnnotatedTrace, Rat> {
            if let Some(d) = memo.get(&s) {
                return d.clone();
            }
            let mut dist: BTreeMap<AnnotatedTrace, Rat> = BTreeMap::new();
            dist.insert(Vec::new(), rat_one());
            if let Some((label, target)) = view.step(s) {
                let mut summed: BTreeMap<AnnotatedTrace, Rat> = BTreeMap::new();
                for (c, p) in target.iter() {
                    let ready = view.model.enabled(c).clone();
                    for (tail, q) in go(view, c, memo) {
                        let mut full = Vec::with_capacity(tail.len() + 1);
                        full.push((*label, ready.clone()));
                        full.extend(tail);
                        *summed.entry(full).or_insert_with(rat_zero) += p * q;
                    }
                }
                dist.extend(summed);
            }
            memo.insert(s, dist.clone());
            dist
        }
        go(self, self.start, &mut HashMap::new())
    }

    /// True iff some trace-compatible computation from the start is maximal
    /// in this resolution (its endpoint has no chosen step).
    pub fn has_maximal_trace(&self, trace: &[Action]) -> bool {
        fn go<'m>(
            view: &ResolutionView<'m>,
            s: StateId,
            trace: &[Action],
            pos: usize,
            memo: &mut HashMap<(StateId, usize), bool>,
        ) -> bool {
            if pos == trace.len() {
                return view.step(s).is_none();
            }
            if let Some(&v) = memo.get(&(s, pos)) {
                return v;
            }
            let v = match view.step(s) {
                Some((label, dist)) if *label == trace[pos] => dist
                    .support()
                    .any(|c| go(view, c, trace, pos + 1, memo)),
                _ => false,
            };
            memo.insert((s, pos), v);
            v
        }
        go(self, self.start, trace, 0, &mut HashMap::new())
    }

    /// All maximal computations as (trace, probability) pairs, one entry per
    /// computation path.
    pub fn maximal_computations(&self) -> Vec<(Trace, Rat)> {
        let mut out = Vec::new();
        fn go<'m>(
            view: &ResolutionView<'m>,
            s: StateId,
            trace: &mut Trace,
            prob: Rat,
            out: &mut Vec<(Trace, Rat)>,
        ) {
            match view.step(s) {
                None => out.push((trace.clone(), prob)),
                Some((label, dist)) => {
                    trace.push(*label);
                    for (c, p) in dist.iter() {
                        go(view, c, trace, &prob * p, out);
                    }
                    trace.pop();
                }
            }
        }
        go(self, self.start, &mut Vec::new(), rat_one(), &mut out);
        out
    }

    /// Traces with at least one maximal compatible computation, for driving
    /// per-trace matching.
    pub fn maximal_traces(&self) -> BTreeSet<Trace> {
        self.maximal_computations()
            .into_iter()
            .map(|(t, _)| t)
            .collect()
    }

    /// All traces with positive probability (support of trace_distribution).
    pub fn positive_traces(&self) -> BTreeSet<Trace> {
        self.trace_distribution().into_keys().collect()
    }
}

/// Probability of reaching a success configuration. Success configurations
/// are absorbing, so the mass of successful computations is this reach
/// probability.
pub fn success_prob(sys: &InteractionSystem, view: &ResolutionView<'_>) -> Rat {
    fn go(
        sys: &InteractionSystem,
        view: &ResolutionView<'_>,
        s: StateId,
        memo: &mut HashMap<StateId, Rat>,
    ) -> Rat {
        if sys.is_success(s) {
            return rat_one();
        }
        if let Some(v) = memo.get(&s) {
            return v.clone();
        }
        let v = match view.step(s) {
            Some((_, dist)) => dist
                .iter()
                .map(|(c, p)| p * go(sys, view, c, memo))
                .fold(rat_zero(), |acc, x| acc + x),
            None => rat_zero(),
        };
        memo.insert(s, v.clone());
        v
    }
    go(sys, view, view.start, &mut HashMap::new())
}

/// Probability of trace-compatible computations ending exactly at a success
/// configuration.
pub fn trace_success_prob(
    sys: &InteractionSystem,
    view: &ResolutionView<'_>,
    trace: &[Action],
) -> Rat {
    fn go(
        sys: &InteractionSystem,
        view: &ResolutionView<'_>,
        s: StateId,
        trace: &[Action],
        pos: usize,
        memo: &mut HashMap<(StateId, usize), Rat>,
    ) -> Rat {
        if pos == trace.len() {
            return if sys.is_success(s) { rat_one() } else { rat_zero() };
        }
        if let Some(v) = memo.get(&(s, pos)) {
            return v.clone();
        }
        let v = match view.step(s) {
            Some((label, dist)) if *label == trace[pos] => dist
                .iter()
                .map(|(c, p)| p * go(sys, view, c, trace, pos + 1, memo))
                .fold(rat_zero(), |acc, x| acc + x),
            _ => rat_zero(),
        };
        memo.insert((s, pos), v.clone());
        v
    }
    go(sys, view, view.start, trace, 0, &mut HashMap::new())
}

/// Enumerates deterministic schedulers in canonical order (state ordinal,
/// then transition index; halting sorts before taking). Only states reached
/// under the choices made so far are decided, so no two emitted schedulers
/// induce the same resolution.
pub fn enumerate_schedulers(
    model: &Nplts,
    start: StateId,
    maximal_only: bool,
    cap: u64,
) -> Result<Vec<Scheduler>, EnumerationError> {
    let count = count_schedulers(model, start, maximal_only);
    if count > cap as u128 {
        return Err(EnumerationError::CapExceeded { cap, count });
    }
    let mut out = Vec::new();
    let mut frontier: BTreeSet<StateId> = [start].into();
    let mut choices: BTreeMap<StateId, usize> = BTreeMap::new();
    enumerate_det(model, maximal_only, &mut frontier, &mut choices, &mut out);
    Ok(out)
}

fn enumerate_det(
    model: &Nplts,
    maximal_only: bool,
    frontier: &mut BTreeSet<StateId>,
    choices: &mut BTreeMap<StateId, usize>,
    out: &mut Vec<Scheduler>,
) {
    // next undecided state with outgoing transitions, in ordinal order
    let next = frontier
        .iter()
        .copied()
        .find(|s| !choices.contains_key(s) && model.outgoing_count(*s) > 0);
    let s = match next {
        Some(s) => s,
        None => {
            out.push(Scheduler {
                choices: choices.clone(),
            });
            return;
        }
    };
    frontier.remove(&s);
    if !maximal_only {
        // halt at s
        enumerate_det(model, maximal_only, frontier, choices, out);
    }
    for i in 0..model.outgoing_count(s) {
        choices.insert(s, i);
        let support: Vec<StateId> = model
            .outgoing_nth(s, i)
            .unwrap()
            .target
            .support()
            .collect();
        let added: Vec<StateId> = support
            .iter()
            .copied()
            .filter(|c| frontier.insert(*c) && !choices.contains_key(c))
            .collect();
        // states already decided stay decided; reconverging supports reuse
        // the earlier choice
        enumerate_det(model, maximal_only, frontier, choices, out);
        for c in added {
            frontier.remove(&c);
        }
        choices.remove(&s);
    }
    frontier.insert(s);
}

fn count_schedulers(model: &Nplts, start: StateId, maximal_only: bool) -> u128 {
    fn go(
        model: &Nplts,
        maximal_only: bool,
        frontier: &mut BTreeSet<StateId>,
        decided: &mut BTreeSet<StateId>,
    ) -> u128 {
        let next = frontier
            .iter()
            .copied()
            .find(|s| !decided.contains(s) && model.outgoing_count(*s) > 0);
        let s = match next {
            Some(s) => s,
            None => return 1,
        };
        frontier.remove(&s);
        let mut total: u128 = 0;
        if !maximal_only {
            total += go(model, maximal_only, frontier, decided);
        }
        decided.insert(s);
        for i in 0..model.outgoing_count(s) {
            let support: Vec<StateId> = model
                .outgoing_nth(s, i)
                .unwrap()
                .target
                .support()
                .collect();
            let added: Vec<StateId> = support
                .iter()
                .copied()
                .filter(|c| frontier.insert(*c))
                .collect();
            total = total.saturating_add(go(model, maximal_only, frontier, decided));
            for c in added {
                frontier.remove(&c);
            }
        }
        decided.remove(&s);
        frontier.insert(s);
        total
    }
    let mut frontier: BTreeSet<StateId> = [start].into();
    go(model, maximal_only, &mut frontier, &mut BTreeSet::new())
}

/// All positive weight vectors over `n` slots whose entries have reduced
/// denominator at most `bound` and sum to one. Zero entries select subsets.
fn grid_weight_vectors(n: usize, bound: u32) -> Vec<Vec<Rat>> {
    let mut seen: BTreeSet<Vec<Rat>> = BTreeSet::new();
    for d in 1..=bound {
        // compositions of d into n non-negative parts
        let mut parts = vec![0u32; n];
        compose_into(d, 0, &mut parts, &mut seen);
    }
    seen.into_iter().collect()
}

fn compose_into(remaining: u32, slot: usize, parts: &mut Vec<u32>, seen: &mut BTreeSet<Vec<Rat>>) {
    if slot + 1 == parts.len() {
        parts[slot] = remaining;
        let d: u32 = parts.iter().sum();
        let vec: Vec<Rat> = parts.iter().map(|&k| Rat::new(k.into(), d.into())).collect();
        seen.insert(vec);
        parts[slot] = 0;
        return;
    }
    for k in 0..=remaining {
        parts[slot] = k;
        compose_into(remaining - k, slot + 1, parts, seen);
        parts[slot] = 0;
    }
}

/// Enumerates randomized schedulers on the denominator grid. Deterministic
/// schedulers appear as degenerate single-transition mixes. Stops with a cap
/// error instead of truncating silently.
pub fn enumerate_grid_randomized(
    model: &Nplts,
    start: StateId,
    bound: u32,
    maximal_only: bool,
    cap: u64,
) -> Result<Vec<RandomizedScheduler>, EnumerationError> {
    assert!(bound >= 1);
    let mut options: HashMap<StateId, Vec<Mix>> = HashMap::new();
    let mut mixes_of = |model: &Nplts, s: StateId| -> Vec<Mix> {
        options
            .entry(s)
            .or_insert_with(|| {
                let mut mixes = Vec::new();
                let mut by_action: BTreeMap<Action, Vec<usize>> = BTreeMap::new();
                for t in model.outgoing(s) {
                    by_action.entry(t.label).or_default().push(t.index);
                }
                for (action, indices) in by_action {
                    for weights in grid_weight_vectors(indices.len(), bound) {
                        let positive: Vec<(usize, Rat)> = indices
                            .iter()
                            .zip(weights)
                            .filter(|(_, w)| !w.is_zero())
                            .map(|(&i, w)| (i, w))
                            .collect();
                        if !positive.is_empty() {
                            mixes.push(Mix {
                                action,
                                weights: positive,
                            });
                        }
                    }
                }
                mixes.sort();
                mixes.dedup();
                mixes
            })
            .clone()
    };
    let mut out = Vec::new();
    let mut frontier: BTreeSet<StateId> = [start].into();
    let mut choices: BTreeMap<StateId, Mix> = BTreeMap::new();
    let mut overflowed = false;
    enumerate_rand(
        model,
        maximal_only,
        cap,
        &mut frontier,
        &mut choices,
        &mut out,
        &mut overflowed,
        &mut mixes_of,
    );
    if overflowed {
        return Err(EnumerationError::CapExceeded {
            cap,
            count: out.len() as u128 + 1,
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn enumerate_rand(
    model: &Nplts,
    maximal_only: bool,
    cap: u64,
    frontier: &mut BTreeSet<StateId>,
    choices: &mut BTreeMap<StateId, Mix>,
    out: &mut Vec<RandomizedScheduler>,
    overflowed: &mut bool,
    mixes_of: &mut impl FnMut(&Nplts, StateId) -> Vec<Mix>,
) {
    if *overflowed {
        return;
    }
    let next = frontier
        .iter()
        .copied()
        .find(|s| !choices.contains_key(s) && model.outgoing_count(*s) > 0);
    let s = match next {
        Some(s) => s,
        None => {
            if out.len() as u64 >= cap {
                *overflowed = true;
                return;
            }
            out.push(RandomizedScheduler {
                choices: choices.clone(),
            });
            return;
        }
    };
    frontier.remove(&s);
    if !maximal_only {
        enumerate_rand(
            model,
            maximal_only,
            cap,
            frontier,
            choices,
            out,
            overflowed,
            mixes_of,
        );
    }
    for mix in mixes_of(model, s) {
        let mut support: BTreeSet<StateId> = BTreeSet::new();
        for (i, _) in &mix.weights {
            support.extend(model.outgoing_nth(s, *i).unwrap().target.support());
        }
        choices.insert(s, mix);
        let added: Vec<StateId> = support
            .iter()
            .copied()
            .filter(|c| frontier.insert(*c) && !choices.contains_key(c))
            .collect();
        enumerate_rand(
            model,
            maximal_only,
            cap,
            frontier,
            choices,
            out,
            overflowed,
            mixes_of,
        );
        for c in added {
            frontier.remove(&c);
        }
        choices.remove(&s);
    }
    frontier.insert(s);
}

/// Probability of trace-compatible computations when every step is forced,
/// as in reactive models where each state has at most one transition per
/// action. Returns the conditional probability used by the restricted trace
/// and testing relations.
pub fn follow_trace_prob(model: &Nplts, start: StateId, trace: &[Action]) -> Rat {
    fn go(
        model: &Nplts,
        s: StateId,
        trace: &[Action],
        pos: usize,
        memo: &mut HashMap<(StateId, usize), Rat>,
    ) -> Rat {
        if pos == trace.len() {
            return rat_one();
        }
        if let Some(v) = memo.get(&(s, pos)) {
            return v.clone();
        }
        let v = model
            .outgoing(s)
            .filter(|t| t.label == trace[pos])
            .map(|t| {
                t.target
                    .iter()
                    .map(|(c, p)| p * go(model, c, trace, pos + 1, memo))
                    .fold(rat_zero(), |acc, x| acc + x)
            })
            .fold(rat_zero(), |acc, x| acc + x);
        memo.insert((s, pos), v.clone());
        v
    }
    go(model, start, trace, 0, &mut HashMap::new())
}

/// Conditional success probability along a trace in a reactive interaction
/// system: the unique maximal resolution containing all trace-compatible
/// computations is followed implicitly.
pub fn follow_trace_success_prob(
    sys: &InteractionSystem,
    trace: &[Action],
) -> Rat {
    fn go(
        sys: &InteractionSystem,
        s: StateId,
        trace: &[Action],
        pos: usize,
        memo: &mut HashMap<(StateId, usize), Rat>,
    ) -> Rat {
        if pos == trace.len() {
            return if sys.is_success(s) { rat_one() } else { rat_zero() };
        }
        if let Some(v) = memo.get(&(s, pos)) {
            return v.clone();
        }
        let v = sys
            .product
            .outgoing(s)
            .filter(|t| t.label == trace[pos])
            .map(|t| {
                t.target
                    .iter()
                    .map(|(c, p)| p * go(sys, c, trace, pos + 1, memo))
                    .fold(rat_zero(), |acc, x| acc + x)
            })
            .fold(rat_zero(), |acc, x| acc + x);
        memo.insert((s, pos), v.clone());
        v
    }
    go(sys, sys.root, trace, 0, &mut HashMap::new())
}

/// Traces labeling maximal computations of the whole model (paths ending in
/// a terminal state).
pub fn terminal_traces(model: &Nplts, start: StateId) -> BTreeSet<Trace> {
    let mut out = BTreeSet::new();
    fn go(model: &Nplts, s: StateId, trace: &mut Trace, out: &mut BTreeSet<Trace>) {
        if model.is_terminal(s) {
            out.insert(trace.clone());
            return;
        }
        for t in model.outgoing(s) {
            trace.push(t.label);
            for c in t.target.support() {
                go(model, c, trace, out);
            }
            trace.pop();
        }
    }
    go(model, start, &mut Vec::new(), &mut out);
    out
}

/// All traces labeling any computation of the model from `start` (prefix
/// closed).
pub fn all_traces(model: &Nplts, start: StateId) -> BTreeSet<Trace> {
    let mut out = BTreeSet::new();
    fn go(model: &Nplts, s: StateId, trace: &mut Trace, out: &mut BTreeSet<Trace>) {
        out.insert(trace.clone());
        for t in model.outgoing(s) {
            trace.push(t.label);
            for c in t.target.support() {
                go(model, c, trace, out);
            }
            trace.pop();
        }
    }
    go(model, start, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;

    fn action_trace(m: &Nplts, names: &[&str]) -> Trace {
        names.iter().map(|n| m.action_id(n).unwrap()).collect()
    }

    #[test]
    fn fig1a_has_exactly_two_maximal_resolutions() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let schedulers = enumerate_schedulers(&m, s1, true, 1_000_000).unwrap();
        assert_eq!(schedulers.len(), 2);
    }

    #[test]
    fn terminal_state_has_one_empty_scheduler() {
        let m = fixtures::load_model("fig1a").unwrap();
        let leaf = m
            .states()
            .find(|&s| m.is_terminal(s))
            .expect("has a terminal state");
        let schedulers = enumerate_schedulers(&m, leaf, true, 10).unwrap();
        assert_eq!(schedulers.len(), 1);
        assert_eq!(schedulers[0], Scheduler::empty());
    }

    #[test]
    fn fig4_s1_has_three_maximal_schedulers() {
        let m = fixtures::load_model("fig4").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let schedulers = enumerate_schedulers(&m, s1, true, 1_000_000).unwrap();
        assert_eq!(schedulers.len(), 3);
    }

    #[test]
    fn cap_exceeded_is_reported() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let err = enumerate_schedulers(&m, s1, false, 2).unwrap_err();
        assert!(matches!(err, EnumerationError::CapExceeded { cap: 2, .. }));
    }

    #[test]
    fn trace_probabilities_of_fig2_resolutions() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let schedulers = enumerate_schedulers(&m, s1, true, 100).unwrap();
        let left = ResolutionView::deterministic(&m, s1, &schedulers[0]);
        assert_eq!(left.trace_prob(&action_trace(&m, &["a", "b1"])), rat(1, 2));
        assert_eq!(left.trace_prob(&[]), rat(1, 1));
        let dist = left.trace_distribution();
        assert_eq!(dist.len(), 4);
        assert_eq!(dist[&action_trace(&m, &["a"])], rat(1, 1));
        assert_eq!(dist[&action_trace(&m, &["a", "b1"])], rat(1, 2));
        assert_eq!(dist[&action_trace(&m, &["a", "b2"])], rat(1, 2));
    }

    #[test]
    fn halt_everywhere_distribution_is_trivial() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let view = ResolutionView::deterministic(&m, s1, &Scheduler::empty());
        let dist = view.trace_distribution();
        assert_eq!(dist.len(), 1);
        assert_eq!(dist[&Vec::new()], rat(1, 1));
    }

    #[test]
    fn fig13_first_transition_trace_distribution() {
        let m = fixtures::load_model("fig13").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let schedulers = enumerate_schedulers(&m, s1, true, 100).unwrap();
        let first = ResolutionView::deterministic(&m, s1, &schedulers[0]);
        let dist = first.trace_distribution();
        assert_eq!(dist[&action_trace(&m, &["a", "b"])], rat(2, 5));
        assert_eq!(dist[&action_trace(&m, &["a", "d"])], rat(3, 5));
    }

    #[test]
    fn failure_probabilities_on_fig3() {
        let m = fixtures::load_model("fig3").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let s2 = m.state_id("s2").unwrap();
        let refused: BTreeSet<Action> =
            ["b1", "b2"].iter().map(|n| m.action_id(n).unwrap()).collect();
        let pair = FailurePair {
            trace: action_trace(&m, &["a"]),
            refused,
        };
        let s1_max = enumerate_schedulers(&m, s1, true, 100).unwrap();
        let rightmost = ResolutionView::deterministic(&m, s1, s1_max.last().unwrap());
        assert_eq!(rightmost.failure_prob(&pair), rat(1, 1));
        for sched in enumerate_schedulers(&m, s2, true, 100).unwrap() {
            let view = ResolutionView::deterministic(&m, s2, &sched);
            assert_eq!(view.failure_prob(&pair), rat(1, 2));
        }
        // empty failure pair has probability one everywhere
        let empty = FailurePair {
            trace: Vec::new(),
            refused: BTreeSet::new(),
        };
        assert_eq!(rightmost.failure_prob(&empty), rat(1, 1));
    }

    #[test]
    fn ready_trace_probabilities_on_fig13() {
        let m = fixtures::load_model("fig13").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let a = m.action_id("a").unwrap();
        let b = m.action_id("b").unwrap();
        let d = m.action_id("d").unwrap();
        let schedulers = enumerate_schedulers(&m, s1, true, 100).unwrap();
        let first = ResolutionView::deterministic(&m, s1, &schedulers[0]);
        let ready_b: AnnotatedTrace = vec![(a, [b].into())];
        let ready_d: AnnotatedTrace = vec![(a, [d].into())];
        let ready_none: AnnotatedTrace = vec![(a, BTreeSet::new())];
        assert_eq!(first.ready_trace_prob(&ready_b), rat(2, 5));
        assert_eq!(first.ready_trace_prob(&ready_d), rat(3, 5));
        assert_eq!(first.ready_trace_prob(&ready_none), rat(0, 1));
        let two_step: AnnotatedTrace = vec![(a, [b].into()), (b, BTreeSet::new())];
        assert_eq!(first.ready_trace_prob(&two_step), rat(2, 5));
        // vacuous filters reduce to plain trace probability
        let vac: AnnotatedTrace = vec![(a, BTreeSet::new())];
        assert_eq!(
            first.failure_trace_prob(&vac),
            first.trace_prob(&action_trace(&m, &["a"]))
        );
    }

    #[test]
    fn grid_enumeration_matches_hand_count_on_fig1a() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        // bound 1: exactly the two deterministic maximal schedulers
        let g1 = enumerate_grid_randomized(&m, s1, 1, true, 1_000_000).unwrap();
        assert_eq!(g1.len(), 2);
        // bound 2: left, right, and the 1/2-1/2 mix at the root
        let g2 = enumerate_grid_randomized(&m, s1, 2, true, 1_000_000).unwrap();
        let root_mixes: BTreeSet<Vec<(usize, Rat)>> = g2
            .iter()
            .map(|s| s.chosen(s1_state(&m)).unwrap().weights.clone())
            .collect();
        assert_eq!(root_mixes.len(), 3);
        assert!(root_mixes.contains(&vec![(0usize, rat(1, 1))]));
        assert!(root_mixes.contains(&vec![(0usize, rat(1, 2)), (1usize, rat(1, 2))]));
    }

    fn s1_state(m: &Nplts) -> StateId {
        m.state_id("s1").unwrap()
    }

    #[test]
    fn fully_probabilistic_model_has_one_maximal_grid_scheduler() {
        let doc = crate::textfmt::parse(
            "nplts fp\nalphabet a b\ntrans s a { t:1/2 u:1/2 }\ntrans t b { v:1 }\n",
        )
        .unwrap();
        let m = doc.model;
        let s = m.state_id("s").unwrap();
        let g = enumerate_grid_randomized(&m, s, 3, true, 1_000_000).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn randomized_resolution_mixes_distributions() {
        let m = fixtures::load_model("fig1a").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let g2 = enumerate_grid_randomized(&m, s1, 2, true, 1_000_000).unwrap();
        let mixed = g2
            .iter()
            .find(|s| s.chosen(s1).map(|mix| mix.weights.len()) == Some(2))
            .unwrap();
        let view = ResolutionView::randomized(&m, s1, mixed);
        assert_eq!(view.trace_prob(&action_trace(&m, &["a", "b1"])), rat(1, 4));
    }
}
