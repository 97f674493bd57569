//! Static substitution of variable references within one test.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ValueSource;
use crate::parser::{ArgumentToken, TokenPart, VariableDef, VariableRef};

/// Cap on the number of combinations a composite token may expand to.
const MAX_VALUES: usize = 64;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Value {
    /// Produced by a keyword's return value somewhere upstream.
    pub computed: bool,
    /// Whether `values` is the complete set of possibilities.
    pub known: bool,
    pub values: BTreeSet<String>,
    pub sources: BTreeSet<ValueSource>,
}

impl Value {
    pub fn unknown() -> Self {
        Value::default()
    }

    pub fn computed() -> Self {
        Value {
            computed: true,
            ..Value::default()
        }
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Value {
            computed: false,
            known: true,
            values: BTreeSet::from([s.into()]),
            sources: BTreeSet::new(),
        }
    }

    pub fn with_source(mut self, source: ValueSource) -> Self {
        self.sources.insert(source);
        self
    }

    /// Alternative values: any of `self` or `other`.
    pub fn union(mut self, other: Value) -> Value {
        self.computed |= other.computed;
        self.known = self.known && other.known;
        self.values.extend(other.values);
        self.sources.extend(other.sources);
        if self.computed || !self.known {
            self.values.clear();
        }
        self
    }
}

/// Suite-level variables visible to one test, evaluated once.
#[derive(Debug, Default)]
pub(crate) struct Globals {
    values: HashMap<String, Value>,
}

impl Globals {
    /// `defs` in priority order; the first definition of a name wins.
    pub fn build<'a>(defs: impl IntoIterator<Item = (&'a str, &'a VariableDef)>) -> Self {
        let mut table: HashMap<String, (&str, &VariableDef)> = HashMap::new();
        let mut order = Vec::new();
        for (path, def) in defs {
            let key = def.normalized();
            if !table.contains_key(&key) {
                table.insert(key.clone(), (path, def));
                order.push(key);
            }
        }
        let mut g = Globals::default();
        let mut active = HashSet::new();
        for key in order {
            g.evaluate(&key, &table, &mut active);
        }
        g
    }

    fn evaluate(
        &mut self,
        key: &str,
        table: &HashMap<String, (&str, &VariableDef)>,
        active: &mut HashSet<String>,
    ) -> Value {
        if let Some(v) = self.values.get(key) {
            return v.clone();
        }
        let Some(&(path, def)) = table.get(key) else {
            return builtin(key).unwrap_or_else(Value::unknown);
        };
        if !active.insert(key.to_string()) {
            return Value::unknown();
        }
        let source = ValueSource::Global {
            path: path.to_string(),
            name: def.name.clone(),
        };
        let mut acc: Option<Value> = None;
        for tok in &def.values {
            let v = eval_with(tok, &mut |var: &VariableRef| {
                let k = var.normalized();
                let mut v = self.evaluate(&k, table, active);
                if !var.items.is_empty() {
                    v.known = false;
                    v.values.clear();
                }
                v
            });
            acc = Some(match acc {
                None => v,
                Some(a) => a.union(v),
            });
        }
        let value = match acc {
            Some(v) => v.with_source(source),
            // `${X}` with no value is the empty string
            None => Value::literal("").with_source(source),
        };
        active.remove(key);
        self.values.insert(key.to_string(), value.clone());
        value
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }
}

/// Local scope of one definition body.
#[derive(Debug, Clone, Default)]
pub(crate) struct Env {
    locals: HashMap<String, Value>,
}

impl Env {
    pub fn set(&mut self, name: &str, value: Value) {
        self.locals.insert(crate::parser::normalize_name(name), value);
    }

    pub fn lookup(&self, var: &VariableRef, globals: &Globals) -> Value {
        if var.sigil == '%' {
            return Value::unknown();
        }
        let key = var.normalized();
        let found = self
            .locals
            .get(&key)
            .or_else(|| globals.get(&key))
            .cloned()
            .or_else(|| builtin(&key));
        let mut v = match found {
            Some(v) => v,
            None => {
                // extended syntax such as `${obj.attr}` or `${x + 1}` inherits provenance only
                let base = var.base_normalized();
                let base = base
                    .split(|c: char| !c.is_alphanumeric())
                    .next()
                    .unwrap_or_default()
                    .to_string();
                match self.locals.get(&base).or_else(|| globals.get(&base)) {
                    Some(b) if base != key => Value {
                        computed: b.computed,
                        known: false,
                        values: BTreeSet::new(),
                        sources: b.sources.clone(),
                    },
                    _ => Value::unknown(),
                }
            }
        };
        if !var.items.is_empty() {
            v.known = false;
            v.values.clear();
        }
        v
    }

    pub fn eval(&self, tok: &ArgumentToken, globals: &Globals) -> Value {
        eval_with(tok, &mut |var| self.lookup(var, globals))
    }
}

fn eval_with(tok: &ArgumentToken, lookup: &mut dyn FnMut(&VariableRef) -> Value) -> Value {
    let mut out = Value {
        computed: false,
        known: true,
        values: BTreeSet::new(),
        sources: BTreeSet::new(),
    };
    let mut acc: Vec<String> = vec![String::new()];
    for part in &tok.parts {
        match part {
            TokenPart::Literal(s) => {
                for a in &mut acc {
                    a.push_str(s);
                }
            }
            TokenPart::Variable(var) => {
                let v = lookup(var);
                out.computed |= v.computed;
                out.sources.extend(v.sources);
                if !v.known || v.values.is_empty() {
                    out.known = false;
                    continue;
                }
                if acc.len() * v.values.len() > MAX_VALUES {
                    out.known = false;
                    continue;
                }
                acc = acc
                    .iter()
                    .flat_map(|a| v.values.iter().map(move |x| format!("{a}{x}")))
                    .collect();
            }
        }
    }
    if out.known && !out.computed {
        out.values = acc.into_iter().collect();
    }
    out
}

fn builtin(key: &str) -> Option<Value> {
    let text = match key {
        "empty" => "",
        "space" => " ",
        "true" => "True",
        "false" => "False",
        "none" | "null" => "None",
        "\\n" => "\n",
        _ => {
            if !key.is_empty() && key.parse::<f64>().is_ok() {
                return Some(Value::literal(key));
            }
            return None;
        }
    };
    Some(Value::literal(text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_str, Span};

    fn tok(s: &str) -> ArgumentToken {
        ArgumentToken::new(s, Span::default())
    }

    #[test]
    fn globals_substitute_recursively() {
        let ast = parse_str(
            "v.robot",
            "*** Variables ***\n${LOGIN URL}    http://${SERVER}\n${SERVER}    localhost:7272\n${A}    ${B}\n${B}    ${A}\n",
        );
        let g = Globals::build(ast.variables.iter().map(|v| ("v.robot", v)));
        let url = g.get("loginurl").unwrap();
        assert_eq!(url.values, BTreeSet::from(["http://localhost:7272".to_string()]));
        assert_eq!(url.sources.len(), 2);
        assert!(!g.get("a").unwrap().known);
    }

    #[test]
    fn locals_shadow_and_compute() {
        let g = Globals::default();
        let mut env = Env::default();
        env.set("x", Value::computed());
        env.set("y", Value::literal("b"));
        assert!(env.eval(&tok("${x}"), &g).computed);
        let v = env.eval(&tok("a${y}${EMPTY}c"), &g);
        assert_eq!(v.values, BTreeSet::from(["abc".to_string()]));
        let unknown = env.eval(&tok("${nope}"), &g);
        assert!(!unknown.known && !unknown.computed);
        assert_eq!(env.eval(&tok("${42}"), &g).values, BTreeSet::from(["42".to_string()]));
        assert!(env.eval(&tok("${x.attr}"), &g).computed);
    }
}
