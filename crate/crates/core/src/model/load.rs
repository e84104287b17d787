//! JSON model documents.
//!
//! Two shapes share the `name`, `variables` and `deps` sections.
//!
//! Explicit form:
//!
//! ```json
//! { "name": "toggle",
//!   "variables": [{"name": "p"}, {"name": "k", "width": 2}],
//!   "states": [{"id": "s0", "values": {"p": 0, "k": 1}},
//!              {"id": "s1", "labels": ["p"]}],
//!   "init": ["s0"],
//!   "transitions": [["s0", "s1"], ["s1", "s0"]],
//!   "deps": [["p", "k"]] }
//! ```
//!
//! `labels` sets the listed variables to 1 and every other variable to 0.
//!
//! FSM form: the state space is every assignment of the variables.
//!
//! ```json
//! { "name": "counter",
//!   "variables": [{"name": "c", "width": 2}, {"name": "en"}],
//!   "init": {"c": 0},
//!   "transitions": {"fsm": {
//!       "c": [{"when": "en", "next": "c + 1"}] }} }
//! ```
//!
//! An `init` entry is a value, a list of values, or `"*"`; unlisted
//! variables start at any value. A rule is an expression, `"*"`, or a list
//! of guarded updates tried in order. When no guard matches the variable
//! keeps its value. Variables without a rule are free inputs. Dependency
//! edges are derived from the rules and merged with `deps`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde_json::Value;

use super::{Model, ModelError, StateId, VarDecl, VarId};
use crate::formula::{parse_expr, Atom, CmpOp, Formula, Term};

#[derive(Clone, Debug)]
pub struct LoadOptions {
    /// Add a self-loop to every dead-end state instead of rejecting it.
    pub complete_selfloop: bool,
    pub max_states: usize,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { complete_selfloop: false, max_states: 1 << 16 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Bool(Formula),
    Int(Term),
}

impl Expr {
    fn parse(text: &str, path: &str) -> Result<Expr, ModelError> {
        let e = parse_expr(text).map_err(|e| ModelError::schema(path, e.to_string()))?;
        let e = match e {
            Ok(f) => Expr::Bool(f),
            Err(t) => Expr::Int(t),
        };
        let past = match &e {
            Expr::Bool(f) => !f.is_state_formula() || f.has_past(),
            Expr::Int(t) => t.has_past(),
        };
        if past {
            return Err(ModelError::schema(path, "update expressions must be past-free state expressions"));
        }
        Ok(e)
    }

    fn variables(&self) -> BTreeSet<String> {
        match self {
            Expr::Bool(f) => f.variables(),
            Expr::Int(t) => t.variables(),
        }
    }

    fn eval<F: Fn(&str, bool) -> Option<i64>>(&self, lookup: &F) -> Option<i64> {
        match self {
            Expr::Bool(f) => f.eval_state(lookup).map(i64::from),
            Expr::Int(t) => t.eval(lookup),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FsmRule {
    /// Unconstrained next value.
    Any,
    Assign(Expr),
    /// First matching guard wins; `None` as update means any value.
    Guarded(Vec<(Formula, Option<Expr>)>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitSpec {
    Any,
    Values(Vec<u64>),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FsmSpec {
    pub init: BTreeMap<String, InitSpec>,
    pub rules: BTreeMap<String, FsmRule>,
}

pub fn load_model(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Model, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.display().to_string(), source })?;
    load_model_str(&text, opts)
}

pub fn load_model_str(text: &str, opts: &LoadOptions) -> Result<Model, ModelError> {
    let doc: Value = serde_json::from_str(text)?;
    let obj = doc.as_object().ok_or_else(|| ModelError::schema("$", "expected an object"))?;
    let name = match obj.get("name") {
        None => "model".to_string(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(ModelError::schema("name", "expected a string")),
    };
    let vars = parse_vars(obj.get("variables"))?;
    let index: HashMap<&str, VarId> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();

    let mut deps = BTreeSet::new();
    if let Some(d) = obj.get("deps") {
        let arr = d.as_array().ok_or_else(|| ModelError::schema("deps", "expected an array of pairs"))?;
        for (i, e) in arr.iter().enumerate() {
            let pair = e.as_array().filter(|p| p.len() == 2);
            let pair = pair.ok_or_else(|| ModelError::schema(format!("deps[{i}]"), "expected [src, dst]"))?;
            let mut ids = [0; 2];
            for (k, x) in pair.iter().enumerate() {
                let n = x.as_str().ok_or_else(|| ModelError::schema(format!("deps[{i}][{k}]"), "expected a name"))?;
                ids[k] = *index.get(n).ok_or_else(|| ModelError::UndeclaredVariable(n.into()))?;
            }
            deps.insert((ids[0], ids[1]));
        }
    }

    match obj.get("transitions") {
        Some(Value::Object(t)) => {
            let fsm = t.get("fsm").ok_or_else(|| ModelError::schema("transitions", "expected an edge list or {\"fsm\": ...}"))?;
            let spec = parse_fsm(obj.get("init"), fsm, &index)?;
            compile_fsm(&name, &vars, &spec, &deps, opts.max_states)
        }
        Some(Value::Array(edges)) => {
            let index: HashMap<String, VarId> = index.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            parse_explicit(name, vars, &index, obj, edges, deps, opts)
        }
        None => Err(ModelError::schema("transitions", "missing")),
        Some(_) => Err(ModelError::schema("transitions", "expected an edge list or {\"fsm\": ...}")),
    }
}

fn parse_vars(v: Option<&Value>) -> Result<Vec<VarDecl>, ModelError> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::schema("variables", "expected an array"))?;
    arr.iter()
        .enumerate()
        .map(|(i, v)| match v {
            Value::String(s) => Ok(VarDecl::boolean(s.clone())),
            Value::Object(_) => serde_json::from_value::<RawVar>(v.clone())
                .map(|r| VarDecl { name: r.name, width: r.width, tags: r.tags })
                .map_err(|e| ModelError::schema(format!("variables[{i}]"), e.to_string())),
            _ => Err(ModelError::schema(format!("variables[{i}]"), "expected a name or an object")),
        })
        .collect()
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVar {
    name: String,
    #[serde(default = "one")]
    width: u32,
    #[serde(default)]
    tags: Vec<String>,
}

fn one() -> u32 {
    1
}

fn id_string(v: &Value, path: &str) -> Result<String, ModelError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(ModelError::schema(path, "expected a state id")),
    }
}

fn as_u64(v: &Value, path: &str) -> Result<u64, ModelError> {
    match v {
        Value::Number(n) => n.as_u64().ok_or_else(|| ModelError::schema(path, "expected a non-negative integer")),
        Value::Bool(b) => Ok(u64::from(*b)),
        _ => Err(ModelError::schema(path, "expected an integer")),
    }
}

fn parse_explicit(
    name: String,
    vars: Vec<VarDecl>,
    index: &HashMap<String, VarId>,
    obj: &serde_json::Map<String, Value>,
    edges: &[Value],
    deps: BTreeSet<(VarId, VarId)>,
    opts: &LoadOptions,
) -> Result<Model, ModelError> {
    let raw_states = obj
        .get("states")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::schema("states", "expected an array"))?;
    let mut ids: HashMap<String, StateId> = HashMap::new();
    let mut names = Vec::new();
    let mut states = Vec::new();
    for (i, s) in raw_states.iter().enumerate() {
        let path = format!("states[{i}]");
        let so = s.as_object().ok_or_else(|| ModelError::schema(&path, "expected an object"))?;
        let id = match so.get("id") {
            Some(v) => id_string(v, &format!("{path}.id"))?,
            None => format!("s{i}"),
        };
        if ids.insert(id.clone(), i).is_some() {
            return Err(ModelError::schema(&path, format!("duplicate state id '{id}'")));
        }
        let mut vals: Vec<Option<u64>> = vec![None; vars.len()];
        if let Some(labels) = so.get("labels") {
            let labels = labels
                .as_array()
                .ok_or_else(|| ModelError::schema(format!("{path}.labels"), "expected an array"))?;
            vals.iter_mut().for_each(|x| *x = Some(0));
            for l in labels {
                let l = l.as_str().ok_or_else(|| ModelError::schema(format!("{path}.labels"), "expected names"))?;
                let v = *index.get(l).ok_or_else(|| ModelError::UndeclaredVariable(l.into()))?;
                vals[v] = Some(1);
            }
        }
        if let Some(values) = so.get("values") {
            let values = values
                .as_object()
                .ok_or_else(|| ModelError::schema(format!("{path}.values"), "expected an object"))?;
            for (k, x) in values {
                let v = *index.get(k.as_str()).ok_or_else(|| ModelError::UndeclaredVariable(k.clone()))?;
                let x = as_u64(x, &format!("{path}.values.{k}"))?;
                if x > vars[v].mask() {
                    return Err(ModelError::schema(format!("{path}.values.{k}"), "value exceeds the variable width"));
                }
                vals[v] = Some(x);
            }
        }
        let vals = vals
            .into_iter()
            .enumerate()
            .map(|(v, x)| {
                x.ok_or_else(|| ModelError::schema(&path, format!("state '{id}' does not assign variable '{}'", vars[v].name)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        names.push(id);
        states.push(vals);
    }
    let lookup = |v: &Value, path: &str| -> Result<StateId, ModelError> {
        let id = id_string(v, path)?;
        ids.get(&id).copied().ok_or_else(|| ModelError::schema(path, format!("unknown state '{id}'")))
    };
    let init = obj
        .get("init")
        .and_then(Value::as_array)
        .ok_or_else(|| ModelError::schema("init", "expected an array of state ids"))?
        .iter()
        .enumerate()
        .map(|(i, v)| lookup(v, &format!("init[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut succ = vec![Vec::new(); states.len()];
    for (i, e) in edges.iter().enumerate() {
        let path = format!("transitions[{i}]");
        let pair = e.as_array().filter(|p| p.len() == 2).ok_or_else(|| ModelError::schema(&path, "expected [from, to]"))?;
        let a = lookup(&pair[0], &path)?;
        let b = lookup(&pair[1], &path)?;
        succ[a].push(b);
    }
    if opts.complete_selfloop {
        for (i, s) in succ.iter_mut().enumerate() {
            if s.is_empty() {
                s.push(i);
            }
        }
    }
    Model::from_parts(name, vars, states, names, init, succ, deps, None)
}

fn parse_fsm(init: Option<&Value>, rules: &Value, index: &HashMap<&str, VarId>) -> Result<FsmSpec, ModelError> {
    let check_vars = |e: &BTreeSet<String>| -> Result<(), ModelError> {
        for n in e {
            let base = n.split('[').next().unwrap_or(n);
            if !index.contains_key(base) {
                return Err(ModelError::UndeclaredVariable(n.clone()));
            }
        }
        Ok(())
    };
    let parse_expr_at = |v: &Value, path: &str| -> Result<Option<Expr>, ModelError> {
        match v {
            Value::String(s) if s.trim() == "*" => Ok(None),
            Value::String(s) => {
                let e = Expr::parse(s, path)?;
                check_vars(&e.variables())?;
                Ok(Some(e))
            }
            Value::Number(_) | Value::Bool(_) => Ok(Some(Expr::Int(Term::Const(as_u64(v, path)? as i64)))),
            _ => Err(ModelError::schema(path, "expected an expression")),
        }
    };

    let mut spec = FsmSpec::default();
    match init {
        None => {}
        Some(Value::Object(m)) => {
            for (k, v) in m {
                if !index.contains_key(k.as_str()) {
                    return Err(ModelError::UndeclaredVariable(k.clone()));
                }
                let path = format!("init.{k}");
                let s = match v {
                    Value::String(s) if s == "*" => InitSpec::Any,
                    Value::Array(a) => InitSpec::Values(a.iter().map(|x| as_u64(x, &path)).collect::<Result<_, _>>()?),
                    _ => InitSpec::Values(vec![as_u64(v, &path)?]),
                };
                spec.init.insert(k.clone(), s);
            }
        }
        Some(_) => return Err(ModelError::schema("init", "expected an object mapping variables to values")),
    }
    let rules = rules
        .as_object()
        .ok_or_else(|| ModelError::schema("transitions.fsm", "expected an object"))?;
    for (k, v) in rules {
        if !index.contains_key(k.as_str()) {
            return Err(ModelError::UndeclaredVariable(k.clone()));
        }
        let path = format!("transitions.fsm.{k}");
        let rule = match v {
            Value::Array(cases) => {
                let mut out = Vec::new();
                for (i, c) in cases.iter().enumerate() {
                    let cpath = format!("{path}[{i}]");
                    let co = c.as_object().ok_or_else(|| ModelError::schema(&cpath, "expected {when, next}"))?;
                    let guard = match co.get("when") {
                        None => Formula::True,
                        Some(w) => match parse_expr_at(w, &format!("{cpath}.when"))? {
                            Some(Expr::Bool(f)) => f,
                            Some(Expr::Int(Term::Var(n))) => Formula::atom(n),
                            Some(Expr::Int(t)) => Formula::Atom(Atom::Cmp(t, CmpOp::Ne, Term::Const(0))),
                            None => Formula::True,
                        },
                    };
                    let next = co.get("next").ok_or_else(|| ModelError::schema(&cpath, "missing 'next'"))?;
                    out.push((guard, parse_expr_at(next, &format!("{cpath}.next"))?));
                }
                FsmRule::Guarded(out)
            }
            _ => match parse_expr_at(v, &path)? {
                Some(e) => FsmRule::Assign(e),
                None => FsmRule::Any,
            },
        };
        spec.rules.insert(k.clone(), rule);
    }
    Ok(spec)
}

/// Enumerates every assignment and computes the successor relation.
pub(crate) fn compile_fsm(
    name: &str,
    vars: &[VarDecl],
    spec: &FsmSpec,
    extra_deps: &BTreeSet<(VarId, VarId)>,
    max_states: usize,
) -> Result<Model, ModelError> {
    let index: HashMap<&str, VarId> = vars.iter().enumerate().map(|(i, v)| (v.name.as_str(), i)).collect();
    let total: u128 = vars.iter().map(|v| 1u128 << v.width).product();
    if total > max_states as u128 {
        return Err(ModelError::TooLarge(total, max_states));
    }
    let n = total as usize;
    // Mixed radix with the first variable most significant.
    let mut radix = vec![1usize; vars.len()];
    for i in (0..vars.len().saturating_sub(1)).rev() {
        radix[i] = radix[i + 1] * vars[i + 1].domain_size() as usize;
    }
    let decode = |id: usize| -> Vec<u64> {
        vars.iter()
            .enumerate()
            .map(|(i, v)| ((id / radix[i]) as u64) & v.mask())
            .collect()
    };

    let mut deps = extra_deps.clone();
    for (k, rule) in &spec.rules {
        let dst = index[k.as_str()];
        let mut srcs = BTreeSet::new();
        match rule {
            FsmRule::Any => {}
            FsmRule::Assign(e) => srcs.extend(e.variables()),
            FsmRule::Guarded(cases) => {
                for (g, e) in cases {
                    srcs.extend(g.variables());
                    if let Some(e) = e {
                        srcs.extend(e.variables());
                    }
                }
            }
        }
        for s in srcs {
            let base = s.split('[').next().unwrap_or(&s);
            deps.insert((index[base], dst));
        }
    }

    let rules: Vec<Option<&FsmRule>> = vars.iter().map(|v| spec.rules.get(&v.name)).collect();
    let mut states = Vec::with_capacity(n);
    let mut succ = Vec::with_capacity(n);
    let mut init = Vec::new();
    for id in 0..n {
        let vals = decode(id);
        let lookup = |name: &str, past: bool| -> Option<i64> {
            if past {
                return None;
            }
            let (base, bit) = match name.split_once('[') {
                Some((b, r)) => (b, r.strip_suffix(']').and_then(|x| x.parse::<u32>().ok())),
                None => (name, None),
            };
            let x = vals[*index.get(base)?];
            Some(match bit {
                Some(b) => ((x >> b) & 1) as i64,
                None => x as i64,
            })
        };
        let mut choices: Vec<Vec<u64>> = Vec::with_capacity(vars.len());
        for (v, decl) in vars.iter().enumerate() {
            let all = || (0..decl.domain_size()).collect::<Vec<u64>>();
            let eval = |e: &Expr| -> Vec<u64> { vec![e.eval(&lookup).map(|x| (x as u64) & decl.mask()).unwrap_or(0)] };
            let c = match rules[v] {
                None | Some(FsmRule::Any) => all(),
                Some(FsmRule::Assign(e)) => eval(e),
                Some(FsmRule::Guarded(cases)) => {
                    match cases.iter().find(|(g, _)| g.eval_state(&lookup).unwrap_or(false)) {
                        Some((_, Some(e))) => eval(e),
                        Some((_, None)) => all(),
                        None => vec![vals[v]],
                    }
                }
            };
            choices.push(c);
        }
        let mut out = vec![0usize];
        for (v, c) in choices.iter().enumerate() {
            let r = radix[v];
            out = out
                .iter()
                .flat_map(|&base| c.iter().map(move |&x| base + x as usize * r))
                .collect();
        }
        succ.push(out);

        let is_init = vars.iter().enumerate().all(|(v, decl)| match spec.init.get(&decl.name) {
            None | Some(InitSpec::Any) => true,
            Some(InitSpec::Values(xs)) => xs.contains(&vals[v]),
        });
        if is_init {
            init.push(id);
        }
        states.push(vals);
    }
    let names = states
        .iter()
        .map(|vals: &Vec<u64>| {
            let parts: Vec<String> = vals.iter().map(u64::to_string).collect();
            format!("<{}>", parts.join(","))
        })
        .collect();
    Model::from_parts(name.to_string(), vars.to_vec(), states, names, init, succ, deps, Some(spec.clone()))
}
