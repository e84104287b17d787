//! Finite-state models: explicit Kripke structures with integer-valued
//! variables, a variable dependency graph, and the reachability and
//! cone-of-influence queries built on top of them.

mod load;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;

pub use load::{load_model, load_model_str, FsmRule, FsmSpec, InitSpec, LoadOptions};

pub type StateId = usize;
pub type VarId = usize;

/// Upper bound on variable width. Keeps every value inside an `i64`.
pub const MAX_WIDTH: u32 = 32;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("non-total transition relation: state {0} has no successor")]
    NonTotal(String),
    #[error("undeclared variable '{0}'")]
    UndeclaredVariable(String),
    #[error("model too large: {0} states exceeds the limit of {1}")]
    TooLarge(u128, usize),
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl ModelError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        ModelError::Schema { path: path.into(), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub width: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        VarDecl { name: name.into(), width, tags: Vec::new() }
    }

    pub fn boolean(name: impl Into<String>) -> Self {
        Self::new(name, 1)
    }

    pub fn domain_size(&self) -> u64 {
        1u64 << self.width
    }

    pub fn mask(&self) -> u64 {
        self.domain_size() - 1
    }
}

/// A finite transition system. Every state assigns every variable, the
/// transition relation is total, and successor lists are sorted.
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub vars: Vec<VarDecl>,
    var_index: HashMap<String, VarId>,
    states: Vec<Vec<u64>>,
    state_names: Vec<String>,
    init: Vec<StateId>,
    succ: Vec<Vec<StateId>>,
    /// `(src, dst)`: the next value of `dst` may depend on `src`.
    pub deps: BTreeSet<(VarId, VarId)>,
    pub(crate) fsm: Option<FsmSpec>,
}

/// Ultimately periodic path: `stem` followed by `cycle` repeated forever.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lasso {
    pub stem: Vec<StateId>,
    pub cycle: Vec<StateId>,
}

impl Lasso {
    pub fn len(&self) -> usize {
        self.stem.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shortest equivalent form: the loop is rolled back into the stem
    /// while the last stem state equals the last loop state, and a loop
    /// that repeats a shorter block is cut down to it.
    pub fn normalized(mut self) -> Lasso {
        let n = self.cycle.len();
        if let Some(k) = (1..=n).find(|&k| n % k == 0 && (k..n).all(|i| self.cycle[i] == self.cycle[i - k])) {
            self.cycle.truncate(k);
        }
        while !self.cycle.is_empty() && self.stem.last() == self.cycle.last() {
            let s = self.stem.pop().expect("non-empty stem");
            self.cycle.pop();
            self.cycle.insert(0, s);
        }
        self
    }

    /// State at position `i` of the infinite path.
    pub fn state_at(&self, i: usize) -> StateId {
        if i < self.stem.len() {
            self.stem[i]
        } else {
            self.cycle[(i - self.stem.len()) % self.cycle.len()]
        }
    }

    /// Checks that the lasso is a path of `m` from an initial state.
    pub fn validate(&self, m: &Model) -> Result<(), String> {
        if self.cycle.is_empty() {
            return Err("empty loop".into());
        }
        let n = self.len();
        let first = self.state_at(0);
        if !m.init.contains(&first) {
            return Err(format!("first state {} is not initial", m.state_label(first)));
        }
        for i in 0..n {
            let (a, b) = (self.state_at(i), self.state_at(i + 1));
            if a >= m.num_states() || m.succ[a].binary_search(&b).is_err() {
                return Err(format!("no transition {} -> {}", m.state_label(a), m.state_label(b)));
            }
        }
        Ok(())
    }

    /// Timing table of the stem and one pass of the loop: one row per
    /// variable in `vars` (all variables when empty), one column per step.
    pub fn render_table(&self, m: &Model, vars: &[String]) -> String {
        let ids: Vec<VarId> = if vars.is_empty() {
            (0..m.vars.len()).collect()
        } else {
            vars.iter().filter_map(|v| m.var_id(v)).collect()
        };
        let steps: Vec<StateId> = self.stem.iter().chain(&self.cycle).copied().collect();
        let cells: Vec<Vec<String>> = ids
            .iter()
            .map(|&v| steps.iter().map(|&s| m.values(s)[v].to_string()).collect())
            .collect();
        let width: Vec<usize> = (0..steps.len())
            .map(|i| cells.iter().map(|r| r[i].len()).chain([i.to_string().len()]).max().unwrap_or(1))
            .collect();
        let label_w = ids.iter().map(|&v| m.vars[v].name.len()).chain([5]).max().unwrap_or(5);
        let row = |label: &str, vals: Vec<String>| {
            let body: Vec<String> = vals.iter().zip(&width).map(|(x, w)| format!("{x:>w$}")).collect();
            format!("{label:<label_w$} | {}", body.join(" ")).trim_end().to_string()
        };
        let mut out = vec![row("step", (0..steps.len()).map(|i| i.to_string()).collect())];
        let rule_len = width.iter().sum::<usize>() + width.len().saturating_sub(1);
        out.push(format!("{}-+-{}", "-".repeat(label_w), "-".repeat(rule_len)));
        for (&v, r) in ids.iter().zip(cells) {
            out.push(row(&m.vars[v].name, r));
        }
        out.push(format!("loop: steps {}..{} repeat", self.stem.len(), steps.len().saturating_sub(1)));
        out.join("\n") + "\n"
    }
}

impl Model {
    /// Builds an explicit model. `states[i][v]` is the value of variable `v`
    /// in state `i`; values are masked to the declared width.
    pub fn explicit(
        name: impl Into<String>,
        vars: Vec<VarDecl>,
        states: Vec<Vec<u64>>,
        init: Vec<StateId>,
        edges: &[(StateId, StateId)],
    ) -> Result<Model, ModelError> {
        let n = states.len();
        let mut succ = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::schema("transitions", format!("edge ({a}, {b}) references an unknown state")));
            }
            succ[a].push(b);
        }
        let names = (0..n).map(|i| format!("s{i}")).collect();
        Model::from_parts(name.into(), vars, states, names, init, succ, BTreeSet::new(), None)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: String,
        vars: Vec<VarDecl>,
        mut states: Vec<Vec<u64>>,
        state_names: Vec<String>,
        mut init: Vec<StateId>,
        mut succ: Vec<Vec<StateId>>,
        deps: BTreeSet<(VarId, VarId)>,
        fsm: Option<FsmSpec>,
    ) -> Result<Model, ModelError> {
        let mut var_index = HashMap::new();
        for (i, v) in vars.iter().enumerate() {
            if v.width == 0 || v.width > MAX_WIDTH {
                return Err(ModelError::schema(
                    format!("variables[{i}].width"),
                    format!("width must be in 1..={MAX_WIDTH}"),
                ));
            }
            if var_index.insert(v.name.clone(), i).is_some() {
                return Err(ModelError::schema(format!("variables[{i}]"), format!("duplicate variable '{}'", v.name)));
            }
        }
        if states.is_empty() {
            return Err(ModelError::schema("states", "model has no states"));
        }
        for (i, s) in states.iter_mut().enumerate() {
            if s.len() != vars.len() {
                return Err(ModelError::schema(
                    format!("states[{i}]"),
                    format!("expected {} values, found {}", vars.len(), s.len()),
                ));
            }
            for (x, v) in s.iter_mut().zip(&vars) {
                *x &= v.mask();
            }
        }
        init.sort_unstable();
        init.dedup();
        if init.is_empty() {
            return Err(ModelError::schema("init", "no initial state"));
        }
        if let Some(&bad) = init.iter().find(|&&s| s >= states.len()) {
            return Err(ModelError::schema("init", format!("unknown state {bad}")));
        }
        for (i, s) in succ.iter_mut().enumerate() {
            s.sort_unstable();
            s.dedup();
            if s.is_empty() {
                return Err(ModelError::NonTotal(state_names[i].clone()));
            }
        }
        for &(a, b) in &deps {
            if a >= vars.len() || b >= vars.len() {
                return Err(ModelError::schema("deps", "dependency edge references an undeclared variable"));
            }
        }
        Ok(Model { name, vars, var_index, states, state_names, init, succ, deps, fsm })
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn init(&self) -> &[StateId] {
        &self.init
    }

    pub fn successors(&self, s: StateId) -> &[StateId] {
        &self.succ[s]
    }

    pub fn values(&self, s: StateId) -> &[u64] {
        &self.states[s]
    }

    pub fn state_label(&self, s: StateId) -> &str {
        self.state_names.get(s).map(String::as_str).unwrap_or("?")
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn is_fsm(&self) -> bool {
        self.fsm.is_some()
    }

    /// Adds dependency edges, given by variable name.
    pub fn with_deps<'a>(mut self, edges: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Model, ModelError> {
        for (a, b) in edges {
            let a = self.var_id(a).ok_or_else(|| ModelError::UndeclaredVariable(a.into()))?;
            let b = self.var_id(b).ok_or_else(|| ModelError::UndeclaredVariable(b.into()))?;
            self.deps.insert((a, b));
        }
        Ok(self)
    }

    /// Resolves `x` or a bit select `x[i]` to the variable and optional bit.
    pub fn resolve(&self, name: &str) -> Option<(VarId, Option<u32>)> {
        if let Some(v) = self.var_id(name) {
            return Some((v, None));
        }
        let (base, rest) = name.split_once('[')?;
        let bit: u32 = rest.strip_suffix(']')?.parse().ok()?;
        let v = self.var_id(base)?;
        (bit < self.vars[v].width).then_some((v, Some(bit)))
    }

    /// Value of `name` in state `s`. With `past`, reads the shadow variable
    /// introduced by [`Model::augment_past`].
    pub fn read(&self, s: StateId, name: &str, past: bool) -> Option<i64> {
        let (v, bit) = if past {
            let (base, bit) = split_bit(name);
            let (v, _) = self.resolve(&past_name(base))?;
            (v, bit)
        } else {
            self.resolve(name)?
        };
        let x = self.states[s][v];
        Some(match bit {
            Some(b) => ((x >> b) & 1) as i64,
            None => x as i64,
        })
    }

    /// Declared base variable for a formula-level name (`x[3]` gives `x`).
    pub fn base_var(&self, name: &str) -> Option<VarId> {
        self.resolve(name).map(|(v, _)| v)
    }

    /// Forward closure from the initial states, sorted by state id.
    pub fn reachable_states(&self) -> Vec<StateId> {
        let mut seen = vec![false; self.num_states()];
        let mut queue: VecDeque<StateId> = VecDeque::new();
        for &s in &self.init {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            for &t in &self.succ[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        (0..self.num_states()).filter(|&s| seen[s]).collect()
    }

    /// Declared variables read by `f`, bit selects folded onto their base.
    pub fn formula_vars(&self, f: &Formula) -> Result<BTreeSet<VarId>, ModelError> {
        f.variables()
            .into_iter()
            .map(|n| self.base_var(&n).ok_or(ModelError::UndeclaredVariable(n)))
            .collect()
    }

    /// Backward closure over the dependency graph from the variables of `f`.
    pub fn cone_of_influence(&self, f: &Formula) -> Result<BTreeSet<String>, ModelError> {
        let seeds = self.formula_vars(f)?;
        Ok(self.coi_ids(&seeds).into_iter().map(|v| self.vars[v].name.clone()).collect())
    }

    pub fn coi_ids(&self, seeds: &BTreeSet<VarId>) -> BTreeSet<VarId> {
        let mut preds: BTreeMap<VarId, Vec<VarId>> = BTreeMap::new();
        for &(a, b) in &self.deps {
            preds.entry(b).or_default().push(a);
        }
        let mut out = seeds.clone();
        let mut stack: Vec<VarId> = seeds.iter().copied().collect();
        while let Some(v) = stack.pop() {
            for &p in preds.get(&v).into_iter().flatten() {
                if out.insert(p) {
                    stack.push(p);
                }
            }
        }
        out
    }

    /// Adds a shadow `$past(x)` variable for each `x` in `vars`, holding the
    /// previous value of `x`. At time 0 the shadow equals the current value.
    /// Only reachable augmented states are built. Returns the new model and
    /// the projection from augmented to original state ids.
    pub fn augment_past(&self, vars: &BTreeSet<String>) -> Result<(Model, Vec<StateId>), ModelError> {
        let mut ids: Vec<VarId> = Vec::new();
        for n in vars {
            let v = self.base_var(n).ok_or_else(|| ModelError::UndeclaredVariable(n.clone()))?;
            if !ids.contains(&v) {
                ids.push(v);
            }
        }
        ids.sort_unstable();
        if ids.is_empty() {
            return Ok((self.clone(), (0..self.num_states()).collect()));
        }
        let key_of = |s: StateId| -> Vec<u64> { ids.iter().map(|&v| self.states[s][v]).collect() };
        let mut index: HashMap<(StateId, Vec<u64>), StateId> = HashMap::new();
        let mut nodes: Vec<(StateId, Vec<u64>)> = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |node: (StateId, Vec<u64>), nodes: &mut Vec<(StateId, Vec<u64>)>, queue: &mut VecDeque<StateId>| {
            *index.entry(node.clone()).or_insert_with(|| {
                nodes.push(node);
                queue.push_back(nodes.len() - 1);
                nodes.len() - 1
            })
        };
        let init: Vec<StateId> = self
            .init
            .iter()
            .map(|&s| intern((s, key_of(s)), &mut nodes, &mut queue))
            .collect();
        let mut succ: Vec<Vec<StateId>> = Vec::new();
        while let Some(i) = queue.pop_front() {
            let s = nodes[i].0;
            let prev = key_of(s);
            let out: Vec<StateId> = self.succ[s]
                .iter()
                .map(|&t| intern((t, prev.clone()), &mut nodes, &mut queue))
                .collect();
            if succ.len() <= i {
                succ.resize(i + 1, Vec::new());
            }
            succ[i] = out;
        }
        succ.resize(nodes.len(), Vec::new());

        let mut new_vars = self.vars.clone();
        let mut deps = self.deps.clone();
        for &v in &ids {
            deps.insert((v, new_vars.len()));
            let mut d = VarDecl::new(past_name(&self.vars[v].name), self.vars[v].width);
            d.tags.push("shadow".into());
            new_vars.push(d);
        }
        let states = nodes
            .iter()
            .map(|(s, prev)| {
                let mut vals = self.states[*s].clone();
                vals.extend(prev);
                vals
            })
            .collect();
        let names = nodes
            .iter()
            .map(|(s, prev)| {
                let p: Vec<String> = prev.iter().map(u64::to_string).collect();
                format!("{}|{}", self.state_names[*s], p.join(","))
            })
            .collect();
        let projection = nodes.iter().map(|(s, _)| *s).collect();
        let m = Model::from_parts(self.name.clone(), new_vars, states, names, init, succ, deps, None)?;
        Ok((m, projection))
    }

    /// Replaces the update of `var` with an unconstrained choice. FSM models
    /// are recompiled with the rule set to `*`. Explicit models get an
    /// overlay whose states pair an original state with a free value of
    /// `var`. Returns the havocked model and the projection back.
    pub fn havoc(&self, var: &str) -> Result<(Model, Vec<StateId>), ModelError> {
        let v = self.var_id(var).ok_or_else(|| ModelError::UndeclaredVariable(var.into()))?;
        if let Some(fsm) = &self.fsm {
            let mut fsm = fsm.clone();
            fsm.rules.insert(var.to_string(), FsmRule::Any);
            let m = load::compile_fsm(&self.name, &self.vars, &fsm, &self.deps, usize::MAX)?;
            let proj = (0..m.num_states()).collect();
            return Ok((m, proj));
        }
        let dom = self.vars[v].domain_size() as usize;
        let id = |s: StateId, x: usize| s * dom + x;
        let mut states = Vec::with_capacity(self.num_states() * dom);
        let mut names = Vec::with_capacity(self.num_states() * dom);
        let mut succ = Vec::with_capacity(self.num_states() * dom);
        for s in 0..self.num_states() {
            for x in 0..dom {
                let mut vals = self.states[s].clone();
                vals[v] = x as u64;
                states.push(vals);
                names.push(format!("{}#{}={}", self.state_names[s], var, x));
                succ.push(
                    self.succ[s]
                        .iter()
                        .flat_map(|&t| (0..dom).map(move |y| id(t, y)))
                        .collect(),
                );
            }
        }
        let init = self.init.iter().map(|&s| id(s, self.states[s][v] as usize)).collect();
        let proj = (0..states.len()).map(|i| i / dom).collect();
        let m = Model::from_parts(self.name.clone(), self.vars.clone(), states, names, init, succ, self.deps.clone(), None)?;
        Ok((m, proj))
    }

    /// Copy of the model with one more variable whose value in state `s` is
    /// `values[s]`.
    pub fn with_var(&self, decl: VarDecl, values: &[u64]) -> Result<Model, ModelError> {
        if values.len() != self.num_states() {
            return Err(ModelError::schema("values", "one value per state required"));
        }
        let mut vars = self.vars.clone();
        vars.push(decl);
        let states = self
            .states
            .iter()
            .zip(values)
            .map(|(s, &x)| {
                let mut s = s.clone();
                s.push(x);
                s
            })
            .collect();
        Model::from_parts(
            self.name.clone(),
            vars,
            states,
            self.state_names.clone(),
            self.init.clone(),
            self.succ.clone(),
            self.deps.clone(),
            None,
        )
    }

    /// `name=value` pairs for a state, for rendering.
    pub fn describe(&self, s: StateId) -> String {
        let parts: Vec<String> = self
            .vars
            .iter()
            .zip(&self.states[s])
            .map(|(v, x)| format!("{}={}", v.name, x))
            .collect();
        parts.join(" ")
    }
}

pub fn past_name(var: &str) -> String {
    format!("$past({var})")
}

fn split_bit(name: &str) -> (&str, Option<u32>) {
    if let Some((base, rest)) = name.split_once('[') {
        if let Some(b) = rest.strip_suffix(']').and_then(|b| b.parse().ok()) {
            return (base, Some(b));
        }
    }
    (name, None)
}
