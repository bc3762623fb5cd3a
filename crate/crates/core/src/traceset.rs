//! Weighted-trace-set algebra: the fixpoint characterization of
//! probabilistic trace equivalence and the synchronized product used for the
//! congruence property.
//!
//! A weighted trace set is a relation between traces and probabilities in
//! (0, 1]; a trace may carry several weights, one per way of resolving
//! nondeterminism. Traces are stored as action-name sequences so sets from
//! different models can be multiplied together.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;

use crate::model::{Nplts, StateId};
use crate::rational::{format_rat, rat_one, rat_zero, Rat};

pub type NamedTrace = Vec<String>;

/// Sorted relation of (trace, weight) pairs with positive weights; always
/// contains the empty trace at weight one once built from a state.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightedTraceSet {
    entries: BTreeSet<(NamedTrace, Rat)>,
}

impl WeightedTraceSet {
    pub fn new() -> Self {
        WeightedTraceSet::default()
    }

    pub fn unit() -> Self {
        let mut s = WeightedTraceSet::new();
        s.insert(Vec::new(), rat_one());
        s
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (NamedTrace, Rat)>) -> Self {
        let mut s = WeightedTraceSet::new();
        for (t, p) in entries {
            s.insert(t, p);
        }
        s
    }

    pub fn insert(&mut self, trace: NamedTrace, weight: Rat) {
        debug_assert!(weight > rat_zero() && weight <= rat_one());
        self.entries.insert((trace, weight));
    }

    pub fn iter(&self) -> impl Iterator<Item = &(NamedTrace, Rat)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, trace: &[String], weight: &Rat) -> bool {
        self.entries.contains(&(trace.to_vec(), weight.clone()))
    }

    /// Weights recorded for one trace.
    pub fn weights_of(&self, trace: &[String]) -> BTreeSet<Rat> {
        self.entries
            .iter()
            .filter(|(t, _)| t == trace)
            .map(|(_, p)| p.clone())
            .collect()
    }

    pub fn traces(&self) -> BTreeSet<NamedTrace> {
        self.entries.iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn is_subset(&self, other: &WeightedTraceSet) -> bool {
        self.entries.is_subset(&other.entries)
    }

    /// Dump format: one line per entry, lexicographically sorted. The empty
    /// trace prints as `eps`.
    pub fn dump(&self) -> String {
        self.entries
            .iter()
            .map(|(t, p)| {
                let trace = if t.is_empty() {
                    "eps".to_string()
                } else {
                    t.join(" ")
                };
                format!("{trace} : {}", format_rat(p))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Entailment: the pair is in the set, or the weight is zero and zero is
/// admissible for the trace. A resolution can skip a nonempty trace by
/// halting, so zero is always admissible there; the empty trace is performed
/// by every resolution, so its weight is pinned to the recorded entries
/// whenever the set has any.
pub fn wts_entails(set: &WeightedTraceSet, trace: &[String], weight: &Rat) -> bool {
    if set.contains(trace, weight) {
        return true;
    }
    weight.is_zero() && (!trace.is_empty() || set.weights_of(trace).is_empty())
}

/// Pointwise sum: for each trace, every combination of one entailed weight
/// from each side, keeping positive totals. Zero contributions follow the
/// entailment rule: any nonempty trace may be skipped, the empty trace may
/// not.
pub fn wts_sum(x: &WeightedTraceSet, y: &WeightedTraceSet) -> WeightedTraceSet {
    let mut traces: BTreeSet<&NamedTrace> = BTreeSet::new();
    let mut by_trace_x: BTreeMap<&NamedTrace, Vec<&Rat>> = BTreeMap::new();
    let mut by_trace_y: BTreeMap<&NamedTrace, Vec<&Rat>> = BTreeMap::new();
    for (t, p) in x.iter() {
        traces.insert(t);
        by_trace_x.entry(t).or_default().push(p);
    }
    for (t, p) in y.iter() {
        traces.insert(t);
        by_trace_y.entry(t).or_default().push(p);
    }
    let zero = rat_zero();
    let mut out = WeightedTraceSet::new();
    for t in traces {
        let empty = Vec::new();
        let xs = by_trace_x.get(t).unwrap_or(&empty);
        let ys = by_trace_y.get(t).unwrap_or(&empty);
        let zero_ok_x = !t.is_empty() || xs.is_empty();
        let zero_ok_y = !t.is_empty() || ys.is_empty();
        let mut x_opts: Vec<&Rat> = xs.clone();
        if zero_ok_x {
            x_opts.push(&zero);
        }
        let mut y_opts: Vec<&Rat> = ys.clone();
        if zero_ok_y {
            y_opts.push(&zero);
        }
        for qx in &x_opts {
            for qy in &y_opts {
                let total = *qx + *qy;
                if total > rat_zero() {
                    out.insert(t.clone(), total);
                }
            }
        }
    }
    out
}

/// Prefixes every trace with one action.
pub fn wts_prefix(action: &str, x: &WeightedTraceSet) -> WeightedTraceSet {
    WeightedTraceSet::from_entries(x.iter().map(|(t, p)| {
        let mut trace = Vec::with_capacity(t.len() + 1);
        trace.push(action.to_string());
        trace.extend(t.iter().cloned());
        (trace, p.clone())
    }))
}

/// Scales every weight by a probability in (0, 1].
pub fn wts_scale(p: &Rat, x: &WeightedTraceSet) -> WeightedTraceSet {
    debug_assert!(*p > rat_zero() && *p <= rat_one());
    WeightedTraceSet::from_entries(x.iter().map(|(t, q)| (t.clone(), p * q)))
}

/// Iterates the per-state trace-set functional until every state's set is
/// stable; on acyclic models this happens within the longest-path depth.
/// Returns the iterate history so monotone convergence can be asserted.
pub fn weighted_traces_iterates(model: &Nplts) -> Vec<Vec<WeightedTraceSet>> {
    let n = model.state_count();
    let mut history: Vec<Vec<WeightedTraceSet>> = Vec::new();
    let mut current: Vec<WeightedTraceSet> = (0..n).map(|_| WeightedTraceSet::unit()).collect();
    history.push(current.clone());
    loop {
        let mut next: Vec<WeightedTraceSet> = Vec::with_capacity(n);
        for s in model.states() {
            let mut set = WeightedTraceSet::unit();
            for t in model.outgoing(s) {
                let mut sum: Option<WeightedTraceSet> = None;
                for (child, p) in t.target.iter() {
                    let scaled = wts_scale(p, &current[child.index()]);
                    sum = Some(match sum {
                        None => scaled,
                        Some(acc) => wts_sum(&acc, &scaled),
                    });
                }
                let summed = sum.expect("validated distributions are nonempty");
                let prefixed = wts_prefix(model.action_name(t.label), &summed);
                for (trace, p) in prefixed.iter() {
                    set.insert(trace.clone(), p.clone());
                }
            }
            next.push(set);
        }
        let stable = next == current;
        current = next;
        history.push(current.clone());
        if stable {
            return history;
        }
    }
}

/// The weighted trace set of a state: the fixpoint of the iteration.
pub fn weighted_traces(model: &Nplts, s: StateId) -> WeightedTraceSet {
    let history = weighted_traces_iterates(model);
    history.last().unwrap()[s.index()].clone()
}

/// All synchronized interleavings of two traces: actions in the sync set
/// must be performed by both sides at once, all others interleave freely.
fn interleavings(
    left: &[String],
    right: &[String],
    sync: &BTreeSet<String>,
) -> Vec<NamedTrace> {
    fn go(
        left: &[String],
        right: &[String],
        sync: &BTreeSet<String>,
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), Vec<NamedTrace>>,
    ) -> Vec<NamedTrace> {
        if let Some(v) = memo.get(&(i, j)) {
            return v.clone();
        }
        let mut out: BTreeSet<NamedTrace> = BTreeSet::new();
        if i == left.len() && j == right.len() {
            out.insert(Vec::new());
        }
        if i < left.len() && j < right.len() && left[i] == right[j] && sync.contains(&left[i]) {
            for tail in go(left, right, sync, i + 1, j + 1, memo) {
                let mut t = Vec::with_capacity(tail.len() + 1);
                t.push(left[i].clone());
                t.extend(tail);
                out.insert(t);
            }
        }
        if i < left.len() && !sync.contains(&left[i]) {
            for tail in go(left, right, sync, i + 1, j, memo) {
                let mut t = Vec::with_capacity(tail.len() + 1);
                t.push(left[i].clone());
                t.extend(tail);
                out.insert(t);
            }
        }
        if j < right.len() && !sync.contains(&right[j]) {
            for tail in go(left, right, sync, i, j + 1, memo) {
                let mut t = Vec::with_capacity(tail.len() + 1);
                t.push(right[j].clone());
                t.extend(tail);
                out.insert(t);
            }
        }
        let v: Vec<NamedTrace> = out.into_iter().collect();
        memo.insert((i, j), v.clone());
        v
    }
    go(left, right, sync, 0, 0, &mut HashMap::new())
}

/// Synchronized product of two weighted trace sets: all interleavings of
/// trace pairs, each weighted by the product of the component weights.
pub fn wts_product(
    x: &WeightedTraceSet,
    y: &WeightedTraceSet,
    sync: &BTreeSet<String>,
) -> WeightedTraceSet {
    let mut out = WeightedTraceSet::new();
    for (t1, p1) in x.iter() {
        for (t2, p2) in y.iter() {
            for trace in interleavings(t1, t2, sync) {
                out.insert(trace, p1 * p2);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::rational::rat;

    fn nt(names: &[&str]) -> NamedTrace {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn entailment_zero_rules() {
        let set = WeightedTraceSet::unit();
        assert!(wts_entails(&set, &nt(&["a"]), &rat_zero()));
        assert!(wts_entails(&set, &[], &rat_one()));
        assert!(!wts_entails(&set, &[], &rat_zero()));
        assert!(!wts_entails(&set, &nt(&["a"]), &rat(1, 2)));
    }

    #[test]
    fn sum_combines_weights_and_keeps_partial_contributions() {
        let x = WeightedTraceSet::from_entries([(nt(&["b"]), rat(1, 2))]);
        let y = WeightedTraceSet::from_entries([(nt(&["b"]), rat(1, 2))]);
        let sum = wts_sum(&x, &y);
        assert_eq!(
            sum.weights_of(&nt(&["b"])),
            [rat(1, 2), rat(1, 1)].into()
        );
    }

    #[test]
    fn scale_multiplies_weights() {
        let x = WeightedTraceSet::from_entries([(nt(&["b"]), rat_one())]);
        let scaled = wts_scale(&rat(1, 2), &x);
        assert!(scaled.contains(&nt(&["b"]), &rat(1, 2)));
        assert_eq!(scaled.len(), 1);
    }

    #[test]
    fn terminal_state_has_unit_trace_set() {
        let m = fixtures::load_model("fig1a").unwrap();
        let leaf = m.states().find(|&s| m.is_terminal(s)).unwrap();
        assert_eq!(weighted_traces(&m, leaf), WeightedTraceSet::unit());
    }

    #[test]
    fn fig3_states_have_equal_trace_sets() {
        let m = fixtures::load_model("fig3").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let s2 = m.state_id("s2").unwrap();
        let ts1 = weighted_traces(&m, s1);
        let ts2 = weighted_traces(&m, s2);
        assert!(ts1.contains(&nt(&["a"]), &rat_one()));
        for b in ["b1", "b2", "b3", "b4"] {
            assert!(ts1.contains(&nt(&["a", b]), &rat(1, 2)), "missing a {b}");
        }
        assert_eq!(ts1, ts2);
    }

    #[test]
    fn fig4_central_branch_weight_separates_the_pair() {
        let m = fixtures::load_model("fig4").unwrap();
        let s1 = m.state_id("s1").unwrap();
        let s2 = m.state_id("s2").unwrap();
        let ts1 = weighted_traces(&m, s1);
        let ts2 = weighted_traces(&m, s2);
        assert!(ts1.contains(&nt(&["a", "b"]), &rat_one()));
        assert!(ts1.contains(&nt(&["a", "b"]), &rat(1, 2)));
        assert!(!ts2.contains(&nt(&["a", "b"]), &rat(1, 2)));
    }

    #[test]
    fn monotone_convergence_of_iterates() {
        let m = fixtures::load_model("fig3").unwrap();
        let history = weighted_traces_iterates(&m);
        for pair in history.windows(2) {
            for (prev, next) in pair[0].iter().zip(&pair[1]) {
                assert!(prev.is_subset(next));
            }
        }
    }

    #[test]
    fn product_unit_and_sync_rules() {
        let unit = WeightedTraceSet::unit();
        let sync: BTreeSet<String> = ["a".to_string()].into();
        assert_eq!(wts_product(&unit, &unit, &sync), unit);
        let x = WeightedTraceSet::from_entries([(nt(&["a"]), rat_one())]);
        let y = WeightedTraceSet::from_entries([(nt(&["a"]), rat(1, 2))]);
        let prod = wts_product(&x, &y, &sync);
        assert!(prod.contains(&nt(&["a"]), &rat(1, 2)));
        assert_eq!(prod.len(), 1);
    }

    #[test]
    fn product_law_on_the_example_composition() {
        let fig1a = fixtures::load_model("fig1a").unwrap();
        let fig1b = fixtures::load_model("fig1b").unwrap();
        let sync: BTreeSet<String> = fig1a
            .alphabet()
            .map(|a| fig1a.action_name(a).to_string())
            .collect();
        let s1 = fig1a.state_id("s1").unwrap();
        let s2 = fig1b.state_id("s2").unwrap();
        let product =
            crate::compose::parallel_compose(&fig1a, &fig1b, &sync, (s1, s2)).unwrap();
        let root = product.state_id("(s1,s2)").unwrap();
        let lhs = weighted_traces(&product, root);
        let rhs = wts_product(
            &weighted_traces(&fig1a, s1),
            &weighted_traces(&fig1b, s2),
            &sync,
        );
        assert_eq!(lhs, rhs);
    }
}
