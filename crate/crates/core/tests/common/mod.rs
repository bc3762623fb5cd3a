//! Shared helpers for the integration and acceptance suites: a deterministic
//! generator of small tree-shaped models and an independent brute-force
//! oracle for trace probabilities.

use std::collections::BTreeSet;

use nplts_core::model::{Distribution, Nplts, StateId};
use nplts_core::rational::{rat, Rat};

/// Small deterministic PRNG so corpora are identical across runs.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Lcg {
        Lcg(seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493))
    }

    pub fn next_u64(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, num: u32, den: u32) -> bool {
        (self.next_u64() % den as u64) < num as u64
    }
}

pub struct TreeModelConfig {
    pub alphabet: Vec<&'static str>,
    pub max_non_root_states: usize,
    pub max_branching: usize,
}

impl Default for TreeModelConfig {
    fn default() -> Self {
        TreeModelConfig {
            alphabet: vec!["a", "b", "c"],
            max_non_root_states: 6,
            max_branching: 3,
        }
    }
}

/// Distribution shapes drawn from {1}, {1/2, 1/2}, {1/3, 2/3}.
fn random_split(rng: &mut Lcg) -> Vec<Rat> {
    match rng.below(3) {
        0 => vec![rat(1, 1)],
        1 => vec![rat(1, 2), rat(1, 2)],
        _ => vec![rat(1, 3), rat(2, 3)],
    }
}

/// Grows a random tree under `root`, spending at most `budget` fresh states.
fn grow(
    model: &mut Nplts,
    rng: &mut Lcg,
    config: &TreeModelConfig,
    root: StateId,
    budget: &mut usize,
    counter: &mut usize,
) {
    let mut frontier = vec![root];
    while let Some(state) = frontier.pop() {
        if *budget == 0 {
            break;
        }
        let transitions = if state == root {
            1 + rng.below(config.max_branching)
        } else if rng.chance(1, 3) {
            0
        } else {
            1 + rng.below(config.max_branching)
        };
        for _ in 0..transitions {
            if *budget == 0 {
                break;
            }
            let split = random_split(rng);
            let mut entries = Vec::new();
            for p in split {
                if *budget == 0 {
                    break;
                }
                *budget -= 1;
                *counter += 1;
                let child = model.intern_state(&format!("n{counter}"));
                entries.push((child, p));
                frontier.push(child);
            }
            if entries.is_empty() {
                break;
            }
            // a truncated two-point split must renormalize to keep sums exact
            let total: Rat = entries
                .iter()
                .map(|(_, p)| p.clone())
                .fold(rat(0, 1), |acc, p| acc + p);
            let entries: Vec<(StateId, Rat)> = entries
                .into_iter()
                .map(|(s, p)| (s, p / &total))
                .collect();
            let action = config.alphabet[rng.below(config.alphabet.len())];
            let label = model.intern_action(action);
            model.add_transition(state, label, Distribution::from_entries(entries));
        }
    }
}

/// One random tree model rooted at `s0`.
pub fn random_model(rng: &mut Lcg, config: &TreeModelConfig) -> (Nplts, StateId) {
    let mut model = Nplts::new("random");
    for a in &config.alphabet {
        model.intern_action(a);
    }
    let root = model.intern_state("s0");
    let mut budget = config.max_non_root_states;
    let mut counter = 0;
    grow(&mut model, rng, config, root, &mut budget, &mut counter);
    model.validate().expect("generated model is valid");
    (model, root)
}

/// A pair of random trees side by side in one model (roots `s1`, `s2`).
pub fn random_pair(rng: &mut Lcg, config: &TreeModelConfig) -> (Nplts, StateId, StateId) {
    let mut model = Nplts::new("random_pair");
    for a in &config.alphabet {
        model.intern_action(a);
    }
    let s1 = model.intern_state("s1");
    let s2 = model.intern_state("s2");
    let mut counter = 0;
    let mut budget = config.max_non_root_states;
    grow(&mut model, rng, config, s1, &mut budget, &mut counter);
    let mut budget = config.max_non_root_states;
    grow(&mut model, rng, config, s2, &mut budget, &mut counter);
    model.validate().expect("generated model is valid");
    (model, s1, s2)
}

/// Independent oracle for the probability of trace-compatible computations
/// under a deterministic scheduler: explicit path enumeration, no shared
/// code with the dynamic programs under test.
pub fn path_sum_trace_prob(
    model: &Nplts,
    scheduler: &nplts_core::Scheduler,
    state: StateId,
    trace: &[nplts_core::Action],
) -> Rat {
    if trace.is_empty() {
        return rat(1, 1);
    }
    let mut total = rat(0, 1);
    if let Some(index) = scheduler.chosen(state) {
        let t = model.outgoing_nth(state, index).expect("valid index");
        if t.label == trace[0] {
            for (child, p) in t.target.iter() {
                total += p * path_sum_trace_prob(model, scheduler, child, &trace[1..]);
            }
        }
    }
    total
}

/// Every action-name trace over the alphabet up to the given length.
pub fn traces_up_to(alphabet: &[&str], len: usize) -> BTreeSet<Vec<String>> {
    let mut out: BTreeSet<Vec<String>> = [vec![]].into();
    let mut layer: Vec<Vec<String>> = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for prefix in &layer {
            for a in alphabet {
                let mut t = prefix.clone();
                t.push(a.to_string());
                out.insert(t.clone());
                next.push(t);
            }
        }
        layer = next;
    }
    out
}
