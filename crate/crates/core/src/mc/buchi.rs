//! LTL to Büchi translation: a GPVW-style tableau producing a generalized
//! automaton with state labels, then counter-based degeneralization.

use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::formula::Formula;

/// Literal requirements of a state, as bitsets over [`Buchi::literals`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub pos: Vec<u64>,
    pub neg: Vec<u64>,
}

impl Label {
    /// Whether a valuation (bitset of true literals) satisfies the label.
    #[inline]
    pub fn admits(&self, truth: &[u64]) -> bool {
        self.pos
            .iter()
            .zip(&self.neg)
            .zip(truth)
            .all(|((&p, &n), &t)| p & !t == 0 && n & t == 0)
    }
}

#[derive(Clone, Debug)]
pub struct BState {
    pub label: Label,
    pub succ: Vec<usize>,
    pub accepting: bool,
}

/// State-labelled Büchi automaton. A run reads a valuation at each state it
/// enters: the word `w0 w1 ...` is accepted by `q0 q1 ...` when `q0` is
/// initial, `w_i` satisfies the label of `q_i`, and accepting states recur.
#[derive(Clone, Debug)]
pub struct Buchi {
    /// Positive literals: `Atom` or `Past(Atom)` formulas.
    pub literals: Vec<Formula>,
    pub states: Vec<BState>,
    pub initial: Vec<usize>,
    /// Number of generalized acceptance sets before degeneralization.
    pub acceptance_sets: usize,
}

impl Buchi {
    pub fn words(&self) -> usize {
        self.literals.len().div_ceil(64).max(1)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Cover {
    label: Label,
    next: BTreeSet<Formula>,
    postponed: BTreeSet<usize>,
}

struct Tableau {
    literals: Vec<Formula>,
    lit_index: HashMap<Formula, usize>,
    eventualities: Vec<Formula>,
    words: usize,
}

/// Builds an automaton accepting exactly the words satisfying `f`.
/// The formula is brought into negation normal form first.
pub fn ltl_to_buchi(f: &Formula) -> Buchi {
    let f = f.nnf();
    let mut literals = Vec::new();
    let mut eventualities = Vec::new();
    collect(&f, &mut literals, &mut eventualities);
    let lit_index = literals.iter().cloned().enumerate().map(|(i, l)| (l, i)).collect();
    let words = literals.len().div_ceil(64).max(1);
    let tab = Tableau { literals, lit_index, eventualities, words };

    // Generalized automaton over covers, explored breadth first.
    let mut covers: Vec<Cover> = Vec::new();
    let mut cover_id: HashMap<Cover, usize> = HashMap::new();
    let mut expansions: HashMap<BTreeSet<Formula>, Vec<usize>> = HashMap::new();
    let mut gen_succ: Vec<Vec<usize>> = Vec::new();
    let mut queue = VecDeque::new();

    let mut intern = |c: Cover, covers: &mut Vec<Cover>, queue: &mut VecDeque<usize>| -> usize {
        *cover_id.entry(c.clone()).or_insert_with(|| {
            covers.push(c);
            queue.push_back(covers.len() - 1);
            covers.len() - 1
        })
    };

    let init_covers = tab.expand_set(&[f.clone()]);
    let gen_init: Vec<usize> = init_covers.into_iter().map(|c| intern(c, &mut covers, &mut queue)).collect();
    while let Some(i) = queue.pop_front() {
        let next = covers[i].next.clone();
        let ids = match expansions.get(&next) {
            Some(ids) => ids.clone(),
            None => {
                let todo: Vec<Formula> = next.iter().cloned().collect();
                let ids: Vec<usize> = tab
                    .expand_set(&todo)
                    .into_iter()
                    .map(|c| intern(c, &mut covers, &mut queue))
                    .collect();
                expansions.insert(next, ids.clone());
                ids
            }
        };
        if gen_succ.len() <= i {
            gen_succ.resize(i + 1, Vec::new());
        }
        let mut ids = ids;
        ids.sort_unstable();
        ids.dedup();
        gen_succ[i] = ids;
    }
    gen_succ.resize(covers.len(), Vec::new());

    let k = tab.eventualities.len();
    let in_set = |g: usize, i: usize| !covers[g].postponed.contains(&i);

    // Degeneralize: states (g, counter); the counter advances past set i
    // when leaving a state of F_i. Accepting: counter 0 and member of F_0.
    let mut states: Vec<BState> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut queue = VecDeque::new();
    let mut add = |key: (usize, usize), order: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| -> usize {
        *index.entry(key).or_insert_with(|| {
            order.push(key);
            queue.push_back(order.len() - 1);
            order.len() - 1
        })
    };
    let initial: Vec<usize> = gen_init.iter().map(|&g| add((g, 0), &mut order, &mut queue)).collect();
    let mut succs: Vec<Vec<usize>> = Vec::new();
    while let Some(d) = queue.pop_front() {
        let (g, c) = order[d];
        let c2 = if k == 0 { 0 } else if in_set(g, c) { (c + 1) % k } else { c };
        let mut out: Vec<usize> = gen_succ[g].iter().map(|&h| add((h, c2), &mut order, &mut queue)).collect();
        out.sort_unstable();
        out.dedup();
        if succs.len() <= d {
            succs.resize(d + 1, Vec::new());
        }
        succs[d] = out;
    }
    succs.resize(order.len(), Vec::new());
    for (d, &(g, c)) in order.iter().enumerate() {
        states.push(BState {
            label: covers[g].label.clone(),
            succ: std::mem::take(&mut succs[d]),
            accepting: k == 0 || (c == 0 && in_set(g, 0)),
        });
    }
    let mut initial = initial;
    initial.sort_unstable();
    initial.dedup();
    Buchi { literals: tab.literals, states, initial, acceptance_sets: k }
}

fn collect(f: &Formula, lits: &mut Vec<Formula>, evs: &mut Vec<Formula>) {
    match f {
        Formula::Atom(_) | Formula::Past(_) => {
            if !lits.contains(f) {
                lits.push(f.clone());
            }
            return;
        }
        Formula::Eventually(_) | Formula::Until(..) => {
            if !evs.contains(f) {
                evs.push(f.clone());
            }
        }
        _ => {}
    }
    for c in f.children() {
        collect(c, lits, evs);
    }
}

impl Tableau {
    fn expand_set(&self, todo: &[Formula]) -> Vec<Cover> {
        let start = Cover {
            label: Label { pos: vec![0; self.words], neg: vec![0; self.words] },
            next: BTreeSet::new(),
            postponed: BTreeSet::new(),
        };
        let mut out = BTreeSet::new();
        self.expand(todo.to_vec(), start, BTreeSet::new(), &mut out);
        out.into_iter().collect()
    }

    fn set_lit(&self, label: &mut Label, lit: &Formula, positive: bool) -> bool {
        let i = self.lit_index[lit];
        let (w, b) = (i / 64, 1u64 << (i % 64));
        if positive {
            label.pos[w] |= b;
        } else {
            label.neg[w] |= b;
        }
        label.pos[w] & label.neg[w] == 0
    }

    fn expand(&self, mut todo: Vec<Formula>, mut cover: Cover, mut done: BTreeSet<Formula>, out: &mut BTreeSet<Cover>) {
        use Formula::*;
        while let Some(f) = todo.pop() {
            if !done.insert(f.clone()) {
                continue;
            }
            match &f {
                True => {}
                False => return,
                Atom(_) | Past(_) => {
                    if !self.set_lit(&mut cover.label, &f, true) {
                        return;
                    }
                }
                Not(a) => {
                    if !self.set_lit(&mut cover.label, a, false) {
                        return;
                    }
                }
                And(a, b) => {
                    todo.push((**b).clone());
                    todo.push((**a).clone());
                }
                Or(a, b) => {
                    let mut left = todo.clone();
                    left.push((**a).clone());
                    self.expand(left, cover.clone(), done.clone(), out);
                    todo.push((**b).clone());
                }
                Next(a) => {
                    cover.next.insert((**a).clone());
                }
                Always(a) => {
                    todo.push((**a).clone());
                    cover.next.insert(f.clone());
                }
                Eventually(a) => {
                    let ev = self.eventuality(&f);
                    let mut now = todo.clone();
                    now.push((**a).clone());
                    self.expand(now, cover.clone(), done.clone(), out);
                    cover.postponed.insert(ev);
                    cover.next.insert(f.clone());
                }
                Until(a, b) => {
                    let ev = self.eventuality(&f);
                    let mut now = todo.clone();
                    now.push((**b).clone());
                    self.expand(now, cover.clone(), done.clone(), out);
                    cover.postponed.insert(ev);
                    cover.next.insert(f.clone());
                    todo.push((**a).clone());
                }
                Implies(..) | Stable(_) => unreachable!("formula is in negation normal form"),
            }
        }
        out.insert(cover);
    }

    fn eventuality(&self, f: &Formula) -> usize {
        self.eventualities.iter().position(|e| e == f).expect("eventuality collected")
    }
}
