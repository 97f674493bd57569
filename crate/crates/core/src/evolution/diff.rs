use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::lcs::{align, Op};
use crate::calltree::{Callee, DefId, KeywordId, KeywordRef, Origin, Slot, Snapshot, TestId, INLINE};
use crate::clones::type1_key;
use crate::parser::{normalize_name, CallStatement, Statement, SuiteAst, UserKeywordAst};

/// Share of a removed keyword's call sites that must target the added one for the pair to
/// count as a rename.
pub const DEFAULT_RENAME_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChangeKind {
    NodeAdded,
    NodeRemoved,
    NodeModified,
    NameChanged,
    ArgumentChanged,
    ValueChanged,
}

impl ChangeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeKind::NodeAdded => "node-added",
            ChangeKind::NodeRemoved => "node-removed",
            ChangeKind::NodeModified => "node-modified",
            ChangeKind::NameChanged => "name-changed",
            ChangeKind::ArgumentChanged => "argument-changed",
            ChangeKind::ValueChanged => "value-changed",
        }
    }
}

/// What a change touches, in the coordinates of its own version.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Site {
    Definition(DefId),
    Statement(Origin),
    Argument { origin: Origin, slot: Slot },
    Variable { path: String, name: String },
    Default { keyword: KeywordId, index: u32 },
}

impl Site {
    pub fn def(&self) -> Option<DefId> {
        match self {
            Site::Definition(d) => Some(d.clone()),
            Site::Statement(o) | Site::Argument { origin: o, .. } => Some(o.def.clone()),
            Site::Default { keyword, .. } => Some(DefId::Keyword(keyword.clone())),
            Site::Variable { .. } => None,
        }
    }

    pub fn origin(&self) -> Option<&Origin> {
        match self {
            Site::Statement(o) | Site::Argument { origin: o, .. } => Some(o),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeRef {
    pub site: Site,
    /// Source text of the touched element.
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Owner {
    Test(TestId),
    Keyword(KeywordId),
    /// Settings and variables of a file.
    Suite(String),
}

impl Owner {
    fn of(def: &DefId) -> Owner {
        match def {
            DefId::Test(t) | DefId::TestSetup(t) | DefId::TestTeardown(t) => Owner::Test(t.clone()),
            DefId::Keyword(k) | DefId::KeywordTeardown(k) => Owner::Keyword(k.clone()),
            DefId::SuiteSetup(p)
            | DefId::SuiteTeardown(p)
            | DefId::DefaultTestSetup(p)
            | DefId::DefaultTestTeardown(p) => Owner::Suite(p.clone()),
        }
    }
}

impl std::fmt::Display for Owner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Owner::Test(t) => write!(f, "{t}"),
            Owner::Keyword(k) => write!(f, "{k}"),
            Owner::Suite(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FineGrainedChange {
    pub kind: ChangeKind,
    pub before: Option<NodeRef>,
    pub after: Option<NodeRef>,
    pub owner: Owner,
}

/// Changes between two versions plus the correspondence of their statements.
#[derive(Debug, Clone, Default)]
pub struct SnapshotDiff {
    pub changes: Vec<FineGrainedChange>,
    defs: HashMap<DefId, DefId>,
    statements: HashMap<Origin, Origin>,
    added_defs: BTreeSet<DefId>,
}

impl SnapshotDiff {
    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    /// The later-version definition matched to `def`, following keyword renames.
    pub fn map_def(&self, def: &DefId) -> Option<&DefId> {
        self.defs.get(def)
    }

    /// Where a statement of the earlier version sits in the later one.
    pub fn map_origin(&self, origin: &Origin) -> Option<Origin> {
        if origin.path.is_empty() {
            return self.defs.get(&origin.def).map(|d| Origin::new(d.clone(), Vec::new()));
        }
        self.statements.get(origin).cloned()
    }

    /// Definitions of the later version with no counterpart in the earlier one.
    pub fn added_defs(&self) -> &BTreeSet<DefId> {
        &self.added_defs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOptions {
    pub rename_threshold: f64,
}

impl Default for DiffOptions {
    fn default() -> Self {
        DiffOptions {
            rename_threshold: DEFAULT_RENAME_THRESHOLD,
        }
    }
}

pub fn diff_snapshots(v1: &Snapshot, v2: &Snapshot) -> SnapshotDiff {
    diff_snapshots_with(v1, v2, &DiffOptions::default())
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Shape {
    Call {
        callee: String,
        args: Vec<String>,
        assigned: Vec<String>,
    },
    Block,
    Header {
        condition: Vec<String>,
    },
}

#[derive(Debug, Clone)]
struct Line {
    origin: Origin,
    /// Alignment key: callee and arity for calls, so argument edits align.
    key: String,
    shape: Shape,
    text: String,
}

fn call_line(origin: Origin, c: &CallStatement) -> Line {
    let callee = normalize_name(&c.callee);
    let args: Vec<String> = c.arguments.iter().map(|a| a.text.clone()).collect();
    let mut text = String::new();
    for a in &c.assigned {
        text.push_str(&format!("${{{a}}}=    "));
    }
    text.push_str(&c.callee);
    for a in &args {
        text.push_str("    ");
        text.push_str(a);
    }
    Line {
        key: format!("call\u{1f}{callee}\u{1f}{}", args.len()),
        origin,
        shape: Shape::Call {
            callee,
            args,
            assigned: c.assigned.iter().map(|a| normalize_name(a)).collect(),
        },
        text,
    }
}

fn flatten(stmts: &[Statement], base: &Origin, out: &mut Vec<Line>) {
    for (i, s) in stmts.iter().enumerate() {
        let origin = base.child(i as u32);
        match s {
            Statement::Call(c) => out.push(call_line(origin, c)),
            Statement::Control(block) => {
                out.push(Line {
                    key: format!("block\u{1f}{}", block.kind.keyword()),
                    shape: Shape::Block,
                    text: block.kind.keyword().to_string(),
                    origin: origin.clone(),
                });
                for (b, br) in block.branches.iter().enumerate() {
                    let condition: Vec<String> = br.condition.iter().map(|t| t.text.clone()).collect();
                    let mut text = br.label.clone();
                    for c in &condition {
                        text.push_str("    ");
                        text.push_str(c);
                    }
                    let bo = origin.child(b as u32);
                    out.push(Line {
                        key: format!("branch\u{1f}{}", br.label),
                        shape: Shape::Header { condition },
                        text,
                        origin: bo.clone(),
                    });
                    flatten(&br.body, &bo, out);
                }
            }
        }
    }
}

/// A statement list owned by one definition.
#[derive(Debug)]
struct Def {
    id: DefId,
    /// Tests and keywords are added or removed as a whole; fixture lists are diffed line
    /// by line even when one side is empty.
    container: bool,
    name: String,
    lines: Vec<Line>,
}

/// Keyword names compared the way the resolver does.
fn def_key(d: &DefId) -> DefId {
    let nk = |k: &KeywordId| KeywordId {
        path: k.path.clone(),
        name: normalize_name(&k.name),
    };
    match d {
        DefId::Keyword(k) => DefId::Keyword(nk(k)),
        DefId::KeywordTeardown(k) => DefId::KeywordTeardown(nk(k)),
        other => other.clone(),
    }
}

/// The container a fixture list belongs to.
fn container_of(d: &DefId) -> Option<DefId> {
    match d {
        DefId::TestSetup(t) | DefId::TestTeardown(t) => Some(DefId::Test(t.clone())),
        DefId::KeywordTeardown(k) => Some(DefId::Keyword(k.clone())),
        _ => None,
    }
}

fn fixture_def(id: DefId, call: Option<&CallStatement>) -> Def {
    let origin = Origin::new(id.clone(), Vec::new());
    Def {
        lines: call.map(|c| vec![call_line(origin.child(0), c)]).unwrap_or_default(),
        id,
        container: false,
        name: String::new(),
    }
}

fn collect_defs(file: &SuiteAst, out: &mut BTreeMap<DefId, Def>) {
    let path = file.path.clone();
    let fixture = |names: &[&str]| {
        names
            .iter()
            .find_map(|n| file.setting(n))
            .and_then(|s| s.fixture.as_ref())
    };
    let mut push = |d: Def| {
        out.insert(def_key(&d.id), d);
    };
    push(fixture_def(DefId::SuiteSetup(path.clone()), fixture(&["Suite Setup"])));
    push(fixture_def(DefId::SuiteTeardown(path.clone()), fixture(&["Suite Teardown"])));
    push(fixture_def(DefId::DefaultTestSetup(path.clone()), fixture(&["Test Setup", "Task Setup"])));
    push(fixture_def(
        DefId::DefaultTestTeardown(path.clone()),
        fixture(&["Test Teardown", "Task Teardown"]),
    ));
    for t in &file.test_cases {
        let id = TestId {
            path: path.clone(),
            name: t.name.clone(),
        };
        let def = DefId::Test(id.clone());
        let mut lines = Vec::new();
        flatten(&t.body, &Origin::new(def.clone(), Vec::new()), &mut lines);
        push(Def {
            id: def,
            container: true,
            name: t.name.clone(),
            lines,
        });
        let setup = t.setup.as_ref().filter(|_| t.setup_declared);
        push(fixture_def(DefId::TestSetup(id.clone()), setup));
        let teardown = t.teardown.as_ref().filter(|_| t.teardown_declared);
        push(fixture_def(DefId::TestTeardown(id), teardown));
    }
    for k in &file.keywords {
        let id = KeywordId {
            path: path.clone(),
            name: k.name.clone(),
        };
        let def = DefId::Keyword(id.clone());
        let mut lines = Vec::new();
        flatten(&k.body, &Origin::new(def.clone(), Vec::new()), &mut lines);
        push(Def {
            id: def,
            container: true,
            name: k.name.clone(),
            lines,
        });
        push(fixture_def(DefId::KeywordTeardown(id), k.teardown.as_ref()));
    }
}

/// Per statement: the user keyword it calls and its embedded-argument texts.
fn user_calls(snap: &Snapshot) -> HashMap<Origin, (KeywordRef, Vec<String>)> {
    let mut out = HashMap::new();
    for t in &snap.tests {
        for n in &t.nodes {
            let Callee::User(k) = n.callee else {
                continue;
            };
            if n.origin.path.iter().any(|s| *s >= INLINE) {
                continue;
            }
            out.entry(n.origin.clone()).or_insert_with(|| {
                let mut emb: Vec<(crate::calltree::Slot, String)> = n
                    .arguments
                    .iter()
                    .map(|a| t.arg(*a))
                    .filter(|a| matches!(a.slot, Slot::Embedded(_)))
                    .map(|a| (a.slot, a.text.clone()))
                    .collect();
                emb.sort();
                (k, emb.into_iter().map(|(_, s)| s).collect())
            });
        }
    }
    out
}

struct Differ<'a> {
    v1: &'a Snapshot,
    v2: &'a Snapshot,
    calls1: HashMap<Origin, (KeywordRef, Vec<String>)>,
    calls2: HashMap<Origin, (KeywordRef, Vec<String>)>,
    out: SnapshotDiff,
}

pub fn diff_snapshots_with(v1: &Snapshot, v2: &Snapshot, options: &DiffOptions) -> SnapshotDiff {
    let mut defs1 = BTreeMap::new();
    for f in &v1.files {
        collect_defs(f, &mut defs1);
    }
    let mut defs2 = BTreeMap::new();
    for f in &v2.files {
        collect_defs(f, &mut defs2);
    }
    let mut d = Differ {
        v1,
        v2,
        calls1: user_calls(v1),
        calls2: user_calls(v2),
        out: SnapshotDiff::default(),
    };

    let file_in = |snap: &Snapshot, def: &DefId| snap.file(def.path()).is_some();
    let mut removed = Vec::new();
    let mut added: Vec<DefId> = Vec::new();
    let empty = Vec::new();
    for (key, a) in &defs1 {
        match defs2.get(key) {
            Some(b) => d.align_defs(a, &a.lines, b, &b.lines),
            None if a.container => removed.push(key.clone()),
            None => {
                // fixture lists follow their container; suite fixtures follow their file
                let owner_kept = match container_of(key) {
                    Some(c) => defs2.contains_key(&c),
                    None => file_in(v2, key),
                };
                if owner_kept {
                    let other = fixture_def(a.id.clone(), None);
                    d.align_defs(a, &a.lines, &other, &empty);
                }
            }
        }
    }
    for (key, b) in &defs2 {
        if defs1.contains_key(key) {
            continue;
        }
        if b.container {
            added.push(key.clone());
            continue;
        }
        let owner_kept = match container_of(key) {
            Some(c) => defs1.contains_key(&c),
            None => file_in(v1, key),
        };
        if owner_kept {
            let other = fixture_def(b.id.clone(), None);
            d.align_defs(&other, &empty, b, &b.lines);
        }
    }

    let renames = d.renames(&defs1, &defs2, &removed, &added, options.rename_threshold);
    for (r, a) in &renames {
        let (da, db) = (&defs1[r], &defs2[a]);
        d.out.changes.push(FineGrainedChange {
            kind: ChangeKind::NameChanged,
            before: Some(NodeRef {
                site: Site::Definition(da.id.clone()),
                content: da.name.clone(),
            }),
            after: Some(NodeRef {
                site: Site::Definition(db.id.clone()),
                content: db.name.clone(),
            }),
            owner: Owner::of(&da.id),
        });
        d.align_defs(da, &da.lines, db, &db.lines);
        let (DefId::Keyword(k1), DefId::Keyword(k2)) = (&da.id, &db.id) else {
            continue;
        };
        let t1 = &defs1[&def_key(&DefId::KeywordTeardown(k1.clone()))];
        let t2 = &defs2[&def_key(&DefId::KeywordTeardown(k2.clone()))];
        d.align_defs(t1, &t1.lines, t2, &t2.lines);
    }
    let renamed_from: BTreeSet<&DefId> = renames.iter().map(|(r, _)| r).collect();
    let renamed_to: BTreeSet<&DefId> = renames.iter().map(|(_, a)| a).collect();
    for key in removed.iter().filter(|k| !renamed_from.contains(k)) {
        let a = &defs1[key];
        d.out.changes.push(FineGrainedChange {
            kind: ChangeKind::NodeRemoved,
            before: Some(NodeRef {
                site: Site::Definition(a.id.clone()),
                content: a.name.clone(),
            }),
            after: None,
            owner: Owner::of(&a.id),
        });
    }
    for key in added.iter().filter(|k| !renamed_to.contains(k)) {
        let b = &defs2[key];
        d.out.added_defs.insert(b.id.clone());
        match &b.id {
            DefId::Keyword(k) => {
                d.out.added_defs.insert(DefId::KeywordTeardown(k.clone()));
            }
            DefId::Test(t) => {
                d.out.added_defs.insert(DefId::TestSetup(t.clone()));
                d.out.added_defs.insert(DefId::TestTeardown(t.clone()));
            }
            _ => {}
        }
        d.out.changes.push(FineGrainedChange {
            kind: ChangeKind::NodeAdded,
            before: None,
            after: Some(NodeRef {
                site: Site::Definition(b.id.clone()),
                content: b.name.clone(),
            }),
            owner: Owner::of(&b.id),
        });
    }

    d.keyword_params(&defs1);
    d.variables();
    d.out
}

impl<'a> Differ<'a> {
    fn push(&mut self, kind: ChangeKind, before: Option<NodeRef>, after: Option<NodeRef>, def: &DefId) {
        self.out.changes.push(FineGrainedChange {
            kind,
            before,
            after,
            owner: Owner::of(def),
        });
    }

    fn align_defs(&mut self, da: &Def, a: &[Line], db: &Def, b: &[Line]) {
        self.out.defs.insert(da.id.clone(), db.id.clone());
        let ka: Vec<&str> = a.iter().map(|l| l.key.as_str()).collect();
        let kb: Vec<&str> = b.iter().map(|l| l.key.as_str()).collect();
        let mut dels = Vec::new();
        let mut ins = Vec::new();
        for op in align(&ka, &kb) {
            match op {
                Op::Equal(i, j) => {
                    self.gap(&da.id, a, &dels, b, &ins);
                    dels.clear();
                    ins.clear();
                    self.aligned(&da.id, &a[i], &b[j]);
                }
                Op::Delete(i) => dels.push(i),
                Op::Insert(j) => ins.push(j),
            }
        }
        self.gap(&da.id, a, &dels, b, &ins);
    }

    fn aligned(&mut self, def: &DefId, x: &Line, y: &Line) {
        self.out.statements.insert(x.origin.clone(), y.origin.clone());
        match (&x.shape, &y.shape) {
            (
                Shape::Call {
                    args: a1, assigned: s1, ..
                },
                Shape::Call {
                    args: a2, assigned: s2, ..
                },
            ) => {
                for (i, (p, q)) in a1.iter().zip(a2).enumerate() {
                    if p != q {
                        self.argument(def, x, y, Slot::Cell(i as u32), p, q);
                    }
                }
                if s1 != s2 {
                    self.modified(def, x, y);
                }
            }
            (Shape::Header { condition: c1 }, Shape::Header { condition: c2 }) if c1 != c2 => {
                self.modified(def, x, y);
            }
            _ => {}
        }
    }

    fn argument(&mut self, def: &DefId, x: &Line, y: &Line, slot: Slot, before: &str, after: &str) {
        self.push(
            ChangeKind::ArgumentChanged,
            Some(NodeRef {
                site: Site::Argument {
                    origin: x.origin.clone(),
                    slot,
                },
                content: before.to_string(),
            }),
            Some(NodeRef {
                site: Site::Argument {
                    origin: y.origin.clone(),
                    slot,
                },
                content: after.to_string(),
            }),
            def,
        );
    }

    fn statement_change(&mut self, kind: ChangeKind, def: &DefId, x: &Line, y: &Line) {
        self.push(
            kind,
            Some(NodeRef {
                site: Site::Statement(x.origin.clone()),
                content: x.text.clone(),
            }),
            Some(NodeRef {
                site: Site::Statement(y.origin.clone()),
                content: y.text.clone(),
            }),
            def,
        );
    }

    fn modified(&mut self, def: &DefId, x: &Line, y: &Line) {
        self.statement_change(ChangeKind::NodeModified, def, x, y);
    }

    /// Pairs unaligned lines that still look like edits of each other, in order.
    fn gap(&mut self, def: &DefId, a: &[Line], dels: &[usize], b: &[Line], ins: &[usize]) {
        let mut paired = vec![false; ins.len()];
        let mut from = 0;
        for &i in dels {
            let x = &a[i];
            let hit = (from..ins.len()).find(|&k| self.similar(x, &b[ins[k]]));
            match hit {
                Some(k) => {
                    paired[k] = true;
                    from = k + 1;
                    let y = &b[ins[k]];
                    self.out.statements.insert(x.origin.clone(), y.origin.clone());
                    self.edit(def, x, y);
                }
                None => self.push(
                    ChangeKind::NodeRemoved,
                    Some(NodeRef {
                        site: Site::Statement(x.origin.clone()),
                        content: x.text.clone(),
                    }),
                    None,
                    def,
                ),
            }
        }
        for (k, &j) in ins.iter().enumerate() {
            if !paired[k] {
                self.push(
                    ChangeKind::NodeAdded,
                    None,
                    Some(NodeRef {
                        site: Site::Statement(b[j].origin.clone()),
                        content: b[j].text.clone(),
                    }),
                    def,
                );
            }
        }
    }

    fn same_embedded_keyword(&self, x: &Line, y: &Line) -> Option<(Vec<String>, Vec<String>)> {
        let (k1, e1) = self.calls1.get(&x.origin)?;
        let (k2, e2) = self.calls2.get(&y.origin)?;
        let same = self.v1.keyword(*k1).id.key() == self.v2.keyword(*k2).id.key();
        (same && !e1.is_empty() && e1.len() == e2.len()).then(|| (e1.clone(), e2.clone()))
    }

    fn similar(&self, x: &Line, y: &Line) -> bool {
        let (
            Shape::Call {
                callee: c1, args: a1, ..
            },
            Shape::Call {
                callee: c2, args: a2, ..
            },
        ) = (&x.shape, &y.shape)
        else {
            return false;
        };
        c1 == c2 || a1 == a2 || self.same_embedded_keyword(x, y).is_some() || hoisted(c1, a1, c2, a2)
    }

    fn edit(&mut self, def: &DefId, x: &Line, y: &Line) {
        let (
            Shape::Call {
                callee: c1, args: a1, ..
            },
            Shape::Call {
                callee: c2, args: a2, ..
            },
        ) = (&x.shape, &y.shape)
        else {
            return;
        };
        if c1 == c2 {
            self.modified(def, x, y);
        } else if let Some((e1, e2)) = self.same_embedded_keyword(x, y) {
            let mut any = false;
            for (i, (p, q)) in e1.iter().zip(&e2).enumerate() {
                if p != q {
                    any = true;
                    self.argument(def, x, y, Slot::Embedded(i as u32), p, q);
                }
            }
            if a1.len() == a2.len() {
                for (i, (p, q)) in a1.iter().zip(a2).enumerate() {
                    if p != q {
                        any = true;
                        self.argument(def, x, y, Slot::Cell(i as u32), p, q);
                    }
                }
            } else {
                any = true;
                self.modified(def, x, y);
            }
            if !any {
                self.statement_change(ChangeKind::NameChanged, def, x, y);
            }
        } else if a1 == a2 {
            self.statement_change(ChangeKind::NameChanged, def, x, y);
        } else {
            self.modified(def, x, y);
        }
    }

    /// Removed keyword containers paired with added ones of identical body whose call sites
    /// moved over.
    fn renames(
        &self,
        defs1: &BTreeMap<DefId, Def>,
        defs2: &BTreeMap<DefId, Def>,
        removed: &[DefId],
        added: &[DefId],
        threshold: f64,
    ) -> Vec<(DefId, DefId)> {
        let mut callers: HashMap<KeywordRef, BTreeSet<Origin>> = HashMap::new();
        for t in &self.v1.tests {
            for n in &t.nodes {
                if let Callee::User(k) = n.callee {
                    callers.entry(k).or_default().insert(n.origin.statement());
                }
            }
        }
        let mut targets: HashMap<Origin, BTreeSet<KeywordRef>> = HashMap::new();
        for t in &self.v2.tests {
            for n in &t.nodes {
                if let Callee::User(k) = n.callee {
                    targets.entry(n.origin.statement()).or_default().insert(k);
                }
            }
        }
        let kw = |snap: &'a Snapshot, d: &Def| -> Option<(KeywordRef, &'a UserKeywordAst)> {
            let DefId::Keyword(id) = &d.id else {
                return None;
            };
            let r = snap.find_keyword(id)?;
            Some((r, snap.keyword_ast(r)))
        };
        let mut used = BTreeSet::new();
        let mut out = Vec::new();
        for r in removed {
            let Some((k1, ast1)) = kw(self.v1, &defs1[r]) else {
                continue;
            };
            let Some(sites) = callers.get(&k1) else {
                continue;
            };
            let body = type1_key(ast1);
            for a in added {
                if used.contains(a) || a.path() != r.path() {
                    continue;
                }
                let Some((k2, ast2)) = kw(self.v2, &defs2[a]) else {
                    continue;
                };
                if type1_key(ast2) != body {
                    continue;
                }
                let moved = sites
                    .iter()
                    .filter(|o| {
                        self.out
                            .map_origin(o)
                            .and_then(|o2| targets.get(&o2))
                            .is_some_and(|ks| ks.contains(&k2))
                    })
                    .count();
                if moved as f64 >= threshold * sites.len() as f64 {
                    used.insert(a.clone());
                    out.push((r.clone(), a.clone()));
                    break;
                }
            }
        }
        out
    }

    /// `[Arguments]` changes of keywords present in both versions.
    fn keyword_params(&mut self, defs1: &BTreeMap<DefId, Def>) {
        for d in defs1.values() {
            let DefId::Keyword(k1) = &d.id else {
                continue;
            };
            let Some(DefId::Keyword(k2)) = self.out.defs.get(&d.id).cloned() else {
                continue;
            };
            let (Some(r1), Some(r2)) = (self.v1.find_keyword(k1), self.v2.find_keyword(&k2)) else {
                continue;
            };
            let (p1, p2) = (&self.v1.keyword_ast(r1).arguments, &self.v2.keyword_ast(r2).arguments);
            let sig = |ps: &[crate::parser::KeywordParam]| -> Vec<(char, String)> {
                ps.iter().map(|p| (p.sigil, p.normalized())).collect()
            };
            let render = |ps: &[crate::parser::KeywordParam]| -> String {
                let cells: Vec<String> = ps
                    .iter()
                    .map(|p| match &p.default {
                        Some(dv) => format!("{}{{{}}}={}", p.sigil, p.name, dv.text),
                        None => format!("{}{{{}}}", p.sigil, p.name),
                    })
                    .collect();
                format!("[Arguments]    {}", cells.join("    "))
            };
            if sig(p1) != sig(p2) {
                self.push(
                    ChangeKind::NodeModified,
                    Some(NodeRef {
                        site: Site::Definition(d.id.clone()),
                        content: render(p1),
                    }),
                    Some(NodeRef {
                        site: Site::Definition(DefId::Keyword(k2.clone())),
                        content: render(p2),
                    }),
                    &d.id,
                );
                continue;
            }
            for (i, (a, b)) in p1.iter().zip(p2).enumerate() {
                let (da, db) = (a.default.as_ref().map(|t| &t.text), b.default.as_ref().map(|t| &t.text));
                if da != db {
                    self.push(
                        ChangeKind::ValueChanged,
                        Some(NodeRef {
                            site: Site::Default {
                                keyword: k1.clone(),
                                index: i as u32,
                            },
                            content: da.cloned().unwrap_or_default(),
                        }),
                        Some(NodeRef {
                            site: Site::Default {
                                keyword: k2.clone(),
                                index: i as u32,
                            },
                            content: db.cloned().unwrap_or_default(),
                        }),
                        &d.id,
                    );
                }
            }
        }
    }

    fn variables(&mut self) {
        for f1 in &self.v1.files {
            let Some(f2) = self.v2.file(&f1.path) else {
                continue;
            };
            let index = |f: &'a SuiteAst| -> BTreeMap<String, &'a crate::parser::VariableDef> {
                let mut m = BTreeMap::new();
                for v in &f.variables {
                    m.entry(v.normalized()).or_insert(v);
                }
                m
            };
            let (m1, m2) = (index(f1), index(f2));
            let render = |v: &crate::parser::VariableDef| {
                let vals: Vec<&str> = v.values.iter().map(|t| t.text.as_str()).collect();
                vals.join("    ")
            };
            let site = |path: &str, v: &crate::parser::VariableDef| NodeRef {
                site: Site::Variable {
                    path: path.to_string(),
                    name: v.name.clone(),
                },
                content: render(v),
            };
            let owner = Owner::Suite(f1.path.clone());
            for (k, a) in &m1 {
                let change = match m2.get(k) {
                    Some(b) if render(a) != render(b) => {
                        Some((ChangeKind::ValueChanged, Some(site(&f1.path, a)), Some(site(&f2.path, b))))
                    }
                    Some(_) => None,
                    None => Some((ChangeKind::NodeRemoved, Some(site(&f1.path, a)), None)),
                };
                if let Some((kind, before, after)) = change {
                    self.out.changes.push(FineGrainedChange {
                        kind,
                        before,
                        after,
                        owner: owner.clone(),
                    });
                }
            }
            for (k, b) in &m2 {
                if !m1.contains_key(k) {
                    self.out.changes.push(FineGrainedChange {
                        kind: ChangeKind::NodeAdded,
                        before: None,
                        after: Some(site(&f2.path, b)),
                        owner: owner.clone(),
                    });
                }
            }
        }
    }
}

/// `Run Keyword If  cond  X  args` rewritten as the bare `X  args`.
fn hoisted(runner: &str, runner_args: &[String], callee: &str, args: &[String]) -> bool {
    if !runner.starts_with("runkeyword") {
        return false;
    }
    (0..runner_args.len()).any(|k| {
        normalize_name(&runner_args[k]) == callee
            && runner_args.len() >= k + 1 + args.len()
            && runner_args[k + 1..k + 1 + args.len()] == *args
    })
}
