//! Token-level clone classes over user keyword bodies.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::calltree::{KeywordRef, Snapshot};
use crate::parser::{normalize_name, ArgumentToken, Statement, TokenPart, UserKeywordAst};

/// Bodies with fewer top-level statements are never clones.
pub const MIN_STATEMENTS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CloneType {
    Type1,
    #[default]
    Type2,
}

impl fmt::Display for CloneType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloneType::Type1 => "type1",
            CloneType::Type2 => "type2",
        })
    }
}

impl FromStr for CloneType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "type1" | "1" => Ok(CloneType::Type1),
            "type2" | "2" => Ok(CloneType::Type2),
            other => Err(format!("unknown clone type `{other}` (expected type1 or type2)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lit(String),
    Var(String),
}

/// Normalized token stream of a keyword body, one entry per statement line.
fn body_tokens(kw: &UserKeywordAst) -> Vec<Vec<Tok>> {
    let mut out = Vec::new();
    statements(&kw.body, &mut out);
    if let Some(td) = &kw.teardown {
        let mut line = vec![Tok::Lit("[teardown]".into()), Tok::Lit(normalize_name(&td.callee))];
        for a in &td.arguments {
            token(a, &mut line);
        }
        out.push(line);
    }
    out
}

fn statements(stmts: &[Statement], out: &mut Vec<Vec<Tok>>) {
    for s in stmts {
        match s {
            Statement::Call(c) => {
                let mut line: Vec<Tok> = c.assigned.iter().map(|a| Tok::Var(a.clone())).collect();
                line.push(Tok::Lit(normalize_name(&c.callee)));
                for a in &c.arguments {
                    token(a, &mut line);
                }
                out.push(line);
            }
            Statement::Control(block) => {
                for br in &block.branches {
                    let mut line = vec![Tok::Lit(br.label.clone())];
                    for a in &br.condition {
                        token(a, &mut line);
                    }
                    out.push(line);
                    statements(&br.body, out);
                }
                out.push(vec![Tok::Lit("END".into())]);
            }
        }
    }
}

fn token(a: &ArgumentToken, line: &mut Vec<Tok>) {
    line.push(Tok::Lit("\u{1f}".into()));
    for p in &a.parts {
        match p {
            TokenPart::Literal(s) => {
                let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
                line.push(Tok::Lit(collapsed));
            }
            TokenPart::Variable(v) => {
                let mut name = v.normalized();
                for item in &v.items {
                    name.push_str(&format!("[{}]", item.to_lowercase()));
                }
                line.push(Tok::Var(name));
            }
        }
    }
}

fn key(lines: &[Vec<Tok>], rename: bool) -> String {
    let mut names: HashMap<&str, usize> = HashMap::new();
    let mut out = String::new();
    for line in lines {
        for t in line {
            match t {
                Tok::Lit(s) => {
                    out.push('L');
                    out.push_str(s);
                }
                Tok::Var(v) if rename => {
                    let n = names.len();
                    let idx = *names.entry(v.as_str()).or_insert(n);
                    out.push_str(&format!("V{idx}"));
                }
                Tok::Var(v) => {
                    out.push('V');
                    out.push_str(v);
                }
            }
            out.push('\u{1e}');
        }
        out.push('\n');
    }
    out
}

/// Type-1 fingerprint of a keyword body.
pub(crate) fn type1_key(kw: &UserKeywordAst) -> String {
    key(&body_tokens(kw), false)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CloneIndex {
    pub granularity: CloneType,
    /// Classes of size two or more, each sorted, ordered by first member.
    pub type1: Vec<Vec<KeywordRef>>,
    pub type2: Vec<Vec<KeywordRef>>,
    members: BTreeSet<KeywordRef>,
}

impl CloneIndex {
    pub fn classes(&self, t: CloneType) -> &[Vec<KeywordRef>] {
        match t {
            CloneType::Type1 => &self.type1,
            CloneType::Type2 => &self.type2,
        }
    }

    /// Member of some class under the configured granularity.
    pub fn is_clone(&self, k: KeywordRef) -> bool {
        self.members.contains(&k)
    }

    pub fn members(&self) -> &BTreeSet<KeywordRef> {
        &self.members
    }
}

pub fn find_clones(snapshot: &Snapshot, granularity: CloneType) -> CloneIndex {
    let mut by1: BTreeMap<String, Vec<KeywordRef>> = BTreeMap::new();
    let mut by2: BTreeMap<String, Vec<KeywordRef>> = BTreeMap::new();
    for i in 0..snapshot.keywords.len() {
        let k = KeywordRef(i as u32);
        let kw = snapshot.keyword_ast(k);
        let top = kw.body.len() + usize::from(kw.teardown.is_some());
        if top < MIN_STATEMENTS {
            continue;
        }
        let lines = body_tokens(kw);
        by1.entry(key(&lines, false)).or_default().push(k);
        by2.entry(key(&lines, true)).or_default().push(k);
    }
    let classes = |m: BTreeMap<String, Vec<KeywordRef>>| {
        let mut v: Vec<Vec<KeywordRef>> = m.into_values().filter(|c| c.len() >= 2).collect();
        v.sort();
        v
    };
    let type1 = classes(by1);
    let type2 = classes(by2);
    let members = match granularity {
        CloneType::Type1 => &type1,
        CloneType::Type2 => &type2,
    }
    .iter()
    .flatten()
    .copied()
    .collect();
    CloneIndex {
        granularity,
        type1,
        type2,
        members,
    }
}
