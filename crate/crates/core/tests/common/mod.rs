#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use vacfv::formula::Formula;
use vacfv::model::{Lasso, Model, VarDecl};

pub const LETTERS: usize = 4;

/// Random formula of depth at most `depth` over `atoms`, using the LTL core
/// operators G, F, X, U and the boolean connectives.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: usize, atoms: &[&str]) -> Formula {
    if depth <= 1 || rng.gen_range(0..5) == 0 {
        return Formula::atom(atoms[rng.gen_range(0..atoms.len())]);
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Formula::always(random_formula(rng, d, atoms)),
        1 => Formula::eventually(random_formula(rng, d, atoms)),
        2 => Formula::next(random_formula(rng, d, atoms)),
        3 => Formula::not(random_formula(rng, d, atoms)),
        4 => Formula::until(random_formula(rng, d, atoms), random_formula(rng, d, atoms)),
        5 => Formula::and(random_formula(rng, d, atoms), random_formula(rng, d, atoms)),
        6 => Formula::or(random_formula(rng, d, atoms), random_formula(rng, d, atoms)),
        _ => Formula::implies(random_formula(rng, d, atoms), random_formula(rng, d, atoms)),
    }
}

/// Formula that may also use `$past`/`$stable` over atoms and constants.
pub fn random_formula_full(rng: &mut ChaCha8Rng, depth: usize, atoms: &[&str]) -> Formula {
    if depth <= 1 || rng.gen_range(0..5) == 0 {
        return match rng.gen_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.gen_range(0..atoms.len())]),
        };
    }
    if depth == 2 && rng.gen_range(0..4) == 0 {
        let a = Formula::atom(atoms[rng.gen_range(0..atoms.len())]);
        return if rng.gen() { Formula::past(a) } else { Formula::stable(a) };
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => Formula::always(random_formula_full(rng, d, atoms)),
        1 => Formula::eventually(random_formula_full(rng, d, atoms)),
        2 => Formula::next(random_formula_full(rng, d, atoms)),
        3 => Formula::not(random_formula_full(rng, d, atoms)),
        4 => Formula::until(random_formula_full(rng, d, atoms), random_formula_full(rng, d, atoms)),
        5 => Formula::and(random_formula_full(rng, d, atoms), random_formula_full(rng, d, atoms)),
        6 => Formula::or(random_formula_full(rng, d, atoms), random_formula_full(rng, d, atoms)),
        _ => Formula::implies(random_formula_full(rng, d, atoms), random_formula_full(rng, d, atoms)),
    }
}

/// Valuation of letter `l` over variables `a` (bit 0) and `b` (bit 1).
pub fn letter_values(l: usize) -> Vec<u64> {
    vec![(l & 1) as u64, (l >> 1) as u64]
}

pub fn ab_vars() -> Vec<VarDecl> {
    vec![VarDecl::boolean("a"), VarDecl::boolean("b")]
}

/// Complete graph on the four letters; every word is a path of it.
pub fn universal_model() -> Model {
    let edges: Vec<(usize, usize)> = (0..LETTERS).flat_map(|i| (0..LETTERS).map(move |j| (i, j))).collect();
    Model::explicit("universal", ab_vars(), (0..LETTERS).map(letter_values).collect(), (0..LETTERS).collect(), &edges)
        .unwrap()
}

/// A model whose states are distinct letters, given by its initial letter
/// and a 16-bit edge mask (`bit 4*i + j` is the edge i -> j). Returns the
/// model and the letter of each state, or `None` unless every letter with an
/// incoming edge or the initial mark also has an outgoing edge.
pub fn letter_model(init: usize, mask: u16) -> Option<(Model, Vec<usize>)> {
    let has_out = |i: usize| (0..LETTERS).any(|j| mask >> (4 * i + j) & 1 == 1);
    let sources: Vec<usize> = (0..LETTERS).filter(|&i| has_out(i)).collect();
    if !has_out(init) {
        return None;
    }
    for i in 0..LETTERS {
        for j in 0..LETTERS {
            if mask >> (4 * i + j) & 1 == 1 && !has_out(j) {
                return None;
            }
        }
    }
    let id = |l: usize| sources.iter().position(|&x| x == l).unwrap();
    let mut edges = Vec::new();
    for &i in &sources {
        for j in 0..LETTERS {
            if mask >> (4 * i + j) & 1 == 1 {
                edges.push((id(i), id(j)));
            }
        }
    }
    let states = sources.iter().map(|&l| letter_values(l)).collect();
    let m = Model::explicit("letters", ab_vars(), states, vec![id(init)], &edges).unwrap();
    Some((m, sources))
}

/// Every canonical lasso over the letters with `stem + cycle <= max_len`:
/// the loop is not a power of a shorter block and the stem does not end
/// with the loop's last letter.
pub fn canonical_lassos(max_len: usize) -> Vec<Lasso> {
    let mut out = Vec::new();
    for n in 1..=max_len {
        for c in 1..=n {
            let s = n - c;
            for word in 0..LETTERS.pow(n as u32) {
                let letters: Vec<usize> = (0..n).map(|i| (word / LETTERS.pow(i as u32)) % LETTERS).collect();
                let (stem, cycle) = letters.split_at(s);
                let primitive = (1..c).all(|k| c % k != 0 || (k..c).any(|i| cycle[i] != cycle[i - k]));
                if !primitive || (s > 0 && stem[s - 1] == cycle[c - 1]) {
                    continue;
                }
                out.push(Lasso { stem: stem.to_vec(), cycle: cycle.to_vec() });
            }
        }
    }
    out
}

/// Initial letter and edge mask used by a lasso over the letters.
pub fn lasso_requirement(l: &Lasso) -> (usize, u16) {
    let mut mask = 0u16;
    for i in 0..l.len() {
        let (a, b) = (l.state_at(i), l.state_at(i + 1));
        mask |= 1 << (4 * a + b);
    }
    (l.state_at(0), mask)
}

/// Random explicit model over boolean variables `v0..v{vars-1}` with
/// `states` states, initial state 0, one or two successors per state and,
/// when `dep_prob > 0`, random dependency edges.
pub fn random_model(rng: &mut ChaCha8Rng, vars: usize, states: usize, dep_prob: f64) -> Model {
    let decls: Vec<VarDecl> = (0..vars).map(|i| VarDecl::boolean(format!("v{i}"))).collect();
    let labels = (0..states).map(|_| (0..vars).map(|_| rng.gen_range(0..2u64)).collect()).collect();
    let mut edges = Vec::new();
    for s in 0..states {
        for _ in 0..rng.gen_range(1..=2) {
            edges.push((s, rng.gen_range(0..states)));
        }
    }
    let m = Model::explicit("random", decls, labels, vec![0], &edges).unwrap();
    let names: Vec<String> = (0..vars).map(|i| format!("v{i}")).collect();
    let mut deps = Vec::new();
    for a in &names {
        for b in &names {
            if rng.gen_bool(dep_prob) {
                deps.push((a.as_str(), b.as_str()));
            }
        }
    }
    m.with_deps(deps).unwrap()
}

/// Names of the variables of a model, as string slices.
pub fn var_names(m: &Model) -> Vec<&str> {
    m.vars.iter().map(|v| v.name.as_str()).collect()
}

pub fn fixture(rel: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

/// Formulas of depth at most 4 over `atoms`. With `past`, leaves may be
/// `$past`/`$stable` of an atom.
pub fn arb_formula(atoms: &'static [&'static str], past: bool) -> proptest::strategy::BoxedStrategy<Formula> {
    use proptest::prelude::*;
    let atom = proptest::sample::select(atoms).prop_map(Formula::atom);
    let leaf = if past {
        prop_oneof![
            8 => atom.clone(),
            1 => Just(Formula::True),
            1 => Just(Formula::False),
            1 => atom.clone().prop_map(Formula::past),
            1 => atom.prop_map(Formula::stable),
        ]
        .boxed()
    } else {
        atom.boxed()
    };
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::eventually),
            inner.clone().prop_map(Formula::always),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::until(a, b)),
        ]
    })
    .boxed()
}

/// Every lasso of `m` from an initial state with at most `max_len`
/// positions.
pub fn model_lassos(m: &Model, max_len: usize) -> Vec<Lasso> {
    fn walk(m: &Model, path: &mut Vec<usize>, max_len: usize, out: &mut Vec<Lasso>) {
        let last = *path.last().unwrap();
        for &t in m.successors(last) {
            if let Some(i) = path.iter().position(|&s| s == t) {
                out.push(Lasso { stem: path[..i].to_vec(), cycle: path[i..].to_vec() });
            }
            if path.len() < max_len {
                path.push(t);
                walk(m, path, max_len, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    for &s in m.init() {
        walk(m, &mut vec![s], max_len, &mut out);
    }
    out
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}
