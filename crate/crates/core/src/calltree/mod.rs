//! Per-test call trees resolved across a snapshot's files.

mod build;
mod resolve;
mod values;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{Category, Flag, KeywordCatalog};
use crate::parser::{normalize_name, Diagnostic, Span, SuiteAst, TestCaseAst, UserKeywordAst};

pub use build::build_snapshot;
pub use resolve::Target;

/// Segments at or above this value in an [`Origin`] path address calls synthesized from
/// `Run Keyword`-style arguments rather than source statements.
pub const INLINE: u32 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TestId {
    pub path: String,
    pub name: String,
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.path, self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KeywordId {
    pub path: String,
    pub name: String,
}

impl KeywordId {
    /// Identity used to match a keyword across versions.
    pub fn key(&self) -> (String, String) {
        (self.path.clone(), normalize_name(&self.name))
    }
}

impl fmt::Display for KeywordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}::{}", self.path, self.name)
    }
}

/// A definition owning a list of statements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum DefId {
    Test(TestId),
    Keyword(KeywordId),
    TestSetup(TestId),
    TestTeardown(TestId),
    KeywordTeardown(KeywordId),
    SuiteSetup(String),
    SuiteTeardown(String),
    DefaultTestSetup(String),
    DefaultTestTeardown(String),
}

impl DefId {
    pub fn path(&self) -> &str {
        match self {
            DefId::Test(t) | DefId::TestSetup(t) | DefId::TestTeardown(t) => &t.path,
            DefId::Keyword(k) | DefId::KeywordTeardown(k) => &k.path,
            DefId::SuiteSetup(p)
            | DefId::SuiteTeardown(p)
            | DefId::DefaultTestSetup(p)
            | DefId::DefaultTestTeardown(p) => p,
        }
    }
}

/// Source statement that produced a node: the owning definition plus the index path
/// `[stmt, branch, stmt, ...]` through nested blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Origin {
    pub def: DefId,
    pub path: Vec<u32>,
}

impl Origin {
    pub fn new(def: DefId, path: Vec<u32>) -> Self {
        Origin { def, path }
    }

    pub fn child(&self, seg: u32) -> Origin {
        let mut path = self.path.clone();
        path.push(seg);
        Origin {
            def: self.def.clone(),
            path,
        }
    }

    /// Longest prefix that addresses a real source statement.
    pub fn statement(&self) -> Origin {
        let n = self.path.iter().position(|s| *s >= INLINE).unwrap_or(self.path.len());
        Origin {
            def: self.def.clone(),
            path: self.path[..n].to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ArgId(pub u32);

/// Index into [`Snapshot::keywords`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct KeywordRef(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Marker {
    Root,
    Setup,
    Teardown,
    If,
    Loop,
    Try,
    Branch { label: String, conditional: bool },
    /// `Run Keyword` and friends: children are the keywords named in the arguments.
    Runner,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Callee {
    User(KeywordRef),
    Library(String),
    Control(Marker),
    Unresolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    Body,
    Setup,
    Teardown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallNode {
    pub callee: Callee,
    /// Name as written at the call site.
    pub name: String,
    pub category: Option<Category>,
    pub flags: BTreeSet<Flag>,
    pub children: Vec<NodeId>,
    pub arguments: Vec<ArgId>,
    pub parent: Option<NodeId>,
    pub depth: u32,
    pub region: Region,
    pub origin: Origin,
    pub span: Span,
    pub file: String,
}

impl CallNode {
    pub fn is_library(&self) -> bool {
        matches!(self.callee, Callee::Library(_))
    }

    pub fn is_user(&self) -> bool {
        matches!(self.callee, Callee::User(_))
    }

    pub fn is_marker(&self) -> bool {
        matches!(self.callee, Callee::Control(_))
    }

    pub fn is_call(&self) -> bool {
        !self.is_marker()
    }

    pub fn is_resolved_call(&self) -> bool {
        self.is_library() || self.is_user()
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn is_category(&self, c: Category) -> bool {
        self.is_library() && self.category == Some(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ArgKind {
    Hardcoded,
    Variable,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Role {
    Locator,
    Expected,
    Configuration,
}

/// Position of an argument at its call site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Slot {
    Cell(u32),
    Embedded(u32),
}

/// Where a statically resolved value was written.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ValueSource {
    Token { origin: Origin, slot: Slot },
    Global { path: String, name: String },
    Default { keyword: KeywordId, index: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArgumentNode {
    pub owner: NodeId,
    pub slot: Slot,
    pub text: String,
    pub span: Span,
    pub kind: ArgKind,
    pub values: BTreeSet<String>,
    pub role: Option<Role>,
    /// Every token the resolved values were drawn from, including this one.
    pub sources: BTreeSet<ValueSource>,
}

impl ArgumentNode {
    /// The token this argument was written as.
    pub fn token(&self, tree: &CallTree) -> ValueSource {
        ValueSource::Token {
            origin: tree.node(self.owner).origin.statement(),
            slot: self.slot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallTree {
    pub id: TestId,
    pub nodes: Vec<CallNode>,
    pub args: Vec<ArgumentNode>,
    pub root: NodeId,
    pub setup: Option<NodeId>,
    pub teardown: Option<NodeId>,
    /// Calls directly under the root, looking through control markers.
    pub steps: Vec<NodeId>,
}

impl CallTree {
    pub fn node(&self, id: NodeId) -> &CallNode {
        &self.nodes[id.0 as usize]
    }

    pub fn arg(&self, id: ArgId) -> &ArgumentNode {
        &self.args[id.0 as usize]
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn arg_ids(&self) -> impl Iterator<Item = ArgId> + '_ {
        (0..self.args.len() as u32).map(ArgId)
    }

    /// Pre-order walk of the subtree under `id`, `id` included.
    pub fn descendants(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            out.push(n);
            stack.extend(self.node(n).children.iter().rev());
        }
        out
    }

    pub fn region_root(&self, region: Region) -> Option<NodeId> {
        match region {
            Region::Body => Some(self.root),
            Region::Setup => self.setup,
            Region::Teardown => self.teardown,
        }
    }

    /// Call nodes of one region in pre-order (markers excluded).
    pub fn calls_in(&self, region: Region) -> Vec<NodeId> {
        match self.region_root(region) {
            Some(r) => self
                .descendants(r)
                .into_iter()
                .filter(|n| self.node(*n).is_call())
                .collect(),
            None => Vec::new(),
        }
    }

    pub fn library_calls_in(&self, region: Region) -> Vec<NodeId> {
        self.calls_in(region)
            .into_iter()
            .filter(|n| self.node(*n).is_library())
            .collect()
    }

    /// Argument nodes owned by calls of one region.
    pub fn args_in(&self, region: Region) -> Vec<ArgId> {
        self.arg_ids()
            .filter(|a| self.node(self.arg(*a).owner).region == region)
            .collect()
    }

    /// Unique user keywords reached from a region.
    pub fn keywords_in(&self, region: Region) -> BTreeSet<KeywordRef> {
        self.calls_in(region)
            .into_iter()
            .filter_map(|n| match self.node(n).callee {
                Callee::User(k) => Some(k),
                _ => None,
            })
            .collect()
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.node(id).parent
    }

    /// Origins from the outermost call down to `id`.
    pub fn origin_chain(&self, id: NodeId) -> Vec<Origin> {
        let mut chain = Vec::new();
        let mut cur = Some(id);
        while let Some(n) = cur {
            let node = self.node(n);
            if !matches!(
                node.callee,
                Callee::Control(Marker::Root | Marker::Setup | Marker::Teardown)
            ) {
                chain.push(node.origin.clone());
            }
            cur = node.parent;
        }
        chain.reverse();
        chain
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordDef {
    pub id: KeywordId,
    pub file: usize,
    pub index: usize,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("duplicate test `{name}` in {path}")]
    DuplicateTestId { path: String, name: String },
}

/// The resolved state of a project's test code at one version.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub version: String,
    pub files: Vec<SuiteAst>,
    pub keywords: Vec<KeywordDef>,
    pub tests: Vec<CallTree>,
    pub diagnostics: Vec<Diagnostic>,
    catalog: Arc<KeywordCatalog>,
    resolver: resolve::Resolver,
}

impl Snapshot {
    pub fn catalog(&self) -> &KeywordCatalog {
        &self.catalog
    }

    pub fn keyword(&self, r: KeywordRef) -> &KeywordDef {
        &self.keywords[r.0 as usize]
    }

    pub fn keyword_ast(&self, r: KeywordRef) -> &UserKeywordAst {
        let def = self.keyword(r);
        &self.files[def.file].keywords[def.index]
    }

    pub fn find_keyword(&self, id: &KeywordId) -> Option<KeywordRef> {
        let key = id.key();
        self.keywords
            .iter()
            .position(|k| k.id.key() == key)
            .map(|i| KeywordRef(i as u32))
    }

    pub fn test(&self, id: &TestId) -> Option<&CallTree> {
        self.tests
            .binary_search_by(|t| t.id.cmp(id))
            .ok()
            .map(|i| &self.tests[i])
    }

    pub fn file(&self, path: &str) -> Option<&SuiteAst> {
        self.files
            .binary_search_by(|f| f.path.as_str().cmp(path))
            .ok()
            .map(|i| &self.files[i])
    }

    pub fn test_ast(&self, id: &TestId) -> Option<&TestCaseAst> {
        self.file(&id.path)?.test_cases.iter().find(|t| t.name == id.name)
    }

    /// Resolves a call written in `path` the same way tree construction does.
    pub fn resolve(&self, path: &str, name: &str) -> Target {
        match self.files.binary_search_by(|f| f.path.as_str().cmp(path)) {
            Ok(file) => self.resolver.resolve(&self.catalog, file, None, name).0,
            Err(_) => Target::Unresolved,
        }
    }
}

/// Every literal the argument's source token can take across the test.
///
/// Arguments written once but expanded several times (a keyword called from two places)
/// contribute the union of their bindings. Computed arguments have no static values.
pub fn resolve_argument_values(tree: &CallTree, arg: ArgId) -> BTreeSet<String> {
    let token = tree.arg(arg).token(tree);
    let mut out = BTreeSet::new();
    for a in &tree.args {
        if a.token(tree) != token {
            continue;
        }
        if a.kind == ArgKind::Computed {
            return BTreeSet::new();
        }
        out.extend(a.values.iter().cloned());
    }
    out
}
