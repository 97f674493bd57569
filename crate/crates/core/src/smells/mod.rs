//! Count and density metrics for the formalized smells.

mod lexicon;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::calltree::{ArgId, ArgKind, CallTree, Callee, KeywordRef, Marker, NodeId, Region, Role, Snapshot, TestId};
use crate::catalog::{Category, Flag};
use crate::clones::{find_clones, CloneIndex, CloneType};
use crate::locator::element_count;

pub use lexicon::{default_lexicons, leading_pronoun, Lexicons};

pub const DEFAULT_LONG_STEP_THRESHOLD: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum SmellId {
    AoC,
    CA,
    HE,
    HTD,
    LoE,
    LTS,
    MM,
    MA,
    N,
    NL,
    OT,
    OtF,
    OC,
    SL,
    SC,
    SS,
}

impl SmellId {
    pub const ALL: [SmellId; 16] = [
        SmellId::AoC,
        SmellId::CA,
        SmellId::HE,
        SmellId::HTD,
        SmellId::LoE,
        SmellId::LTS,
        SmellId::MM,
        SmellId::MA,
        SmellId::N,
        SmellId::NL,
        SmellId::OT,
        SmellId::OtF,
        SmellId::OC,
        SmellId::SL,
        SmellId::SC,
        SmellId::SS,
    ];

    /// Position in [`SmellId::ALL`] and in every finding list.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn code(self) -> &'static str {
        match self {
            SmellId::AoC => "AoC",
            SmellId::CA => "CA",
            SmellId::HE => "HE",
            SmellId::HTD => "HTD",
            SmellId::LoE => "LoE",
            SmellId::LTS => "LTS",
            SmellId::MM => "MM",
            SmellId::MA => "MA",
            SmellId::N => "N",
            SmellId::NL => "NL",
            SmellId::OT => "OT",
            SmellId::OtF => "OtF",
            SmellId::OC => "OC",
            SmellId::SL => "SL",
            SmellId::SC => "SC",
            SmellId::SS => "SS",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            SmellId::AoC => "Army of Clones",
            SmellId::CA => "Conditional Assertion",
            SmellId::HE => "Hardcoded Environment",
            SmellId::HTD => "Hidden Test Data",
            SmellId::LoE => "Lack of Encapsulation",
            SmellId::LTS => "Long Test Steps",
            SmellId::MM => "Middle Man",
            SmellId::MA => "Missing Assertion",
            SmellId::N => "Narcissistic",
            SmellId::NL => "Noisy Logging",
            SmellId::OT => "Obscure Test",
            SmellId::OtF => "On the Fly",
            SmellId::OC => "Over-Checking",
            SmellId::SL => "Sensitive Locators",
            SmellId::SC => "Sneaky Checking",
            SmellId::SS => "Stinky Synchronization",
        }
    }
}

impl fmt::Display for SmellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for SmellId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        SmellId::ALL
            .into_iter()
            .find(|id| id.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown smell `{s}`"))
    }
}

/// Where a symptom sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Location {
    Call(NodeId),
    Argument(ArgId),
    Keyword(KeywordRef),
    /// The test as a whole (Missing Assertion).
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmellFinding {
    pub smell: SmellId,
    pub count: usize,
    pub denominator: usize,
    pub nodes: BTreeSet<Location>,
}

impl SmellFinding {
    fn from_nodes(smell: SmellId, nodes: BTreeSet<Location>, denominator: usize) -> Self {
        SmellFinding {
            smell,
            count: nodes.len(),
            denominator,
            nodes,
        }
    }

    /// `None` when the denominator is zero.
    pub fn density(&self) -> Option<f64> {
        (self.denominator > 0).then(|| self.count as f64 / self.denominator as f64)
    }

    pub fn is_symptomatic(&self) -> bool {
        self.count > 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorConfig {
    pub long_step_threshold: usize,
    pub lexicons: Lexicons,
    pub clone_type: CloneType,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            long_step_threshold: DEFAULT_LONG_STEP_THRESHOLD,
            lexicons: default_lexicons(),
            clone_type: CloneType::default(),
        }
    }
}

impl DetectorConfig {
    /// Keeps only the lexicons of the given language codes.
    pub fn with_languages(mut self, langs: &[String]) -> Result<Self, String> {
        let all = default_lexicons();
        let mut chosen = BTreeMap::new();
        for l in langs {
            let code = l.trim().to_ascii_lowercase();
            let lex = all.get(&code).ok_or_else(|| format!("no pronoun lexicon for language `{code}`"))?;
            chosen.insert(code, lex.clone());
        }
        if chosen.is_empty() {
            return Err("at least one language is required".into());
        }
        self.lexicons = chosen;
        Ok(self)
    }
}

/// Precomputed node sets shared by all detectors of one test.
struct View<'t> {
    tree: &'t CallTree,
    body_calls: Vec<NodeId>,
    body_library: Vec<NodeId>,
    setup_library: Vec<NodeId>,
    steps: Vec<NodeId>,
    keywords: BTreeSet<KeywordRef>,
    first_call: HashMap<KeywordRef, NodeId>,
}

impl<'t> View<'t> {
    fn new(tree: &'t CallTree) -> Self {
        let body_calls = tree.calls_in(Region::Body);
        let body_library: Vec<NodeId> = body_calls.iter().copied().filter(|n| tree.node(*n).is_library()).collect();
        let setup_library = tree.library_calls_in(Region::Setup);
        let steps = tree
            .steps
            .iter()
            .copied()
            .filter(|s| tree.node(*s).is_resolved_call())
            .collect();
        let mut keywords = BTreeSet::new();
        let mut first_call = HashMap::new();
        for n in &body_calls {
            if let Callee::User(k) = tree.node(*n).callee {
                keywords.insert(k);
                first_call.entry(k).or_insert(*n);
            }
        }
        View {
            tree,
            body_calls,
            body_library,
            setup_library,
            steps,
            keywords,
            first_call,
        }
    }

    fn node(&self, n: NodeId) -> &crate::calltree::CallNode {
        self.tree.node(n)
    }

    fn body_args(&self) -> impl Iterator<Item = ArgId> + '_ {
        self.body_calls
            .iter()
            .flat_map(|n| self.tree.node(*n).arguments.iter().copied())
    }

    /// Children of the keyword's expansion, ignoring logging calls.
    fn delegate_target(&self, k: KeywordRef) -> Option<NodeId> {
        let call = self.first_call.get(&k)?;
        let mut rest = self
            .node(*call)
            .children
            .iter()
            .copied()
            .filter(|c| !self.node(*c).is_category(Category::Logging));
        let only = rest.next()?;
        rest.next().is_none().then_some(only)
    }
}

pub fn detect_all(tree: &CallTree, snapshot: &Snapshot, clones: &CloneIndex, config: &DetectorConfig) -> Vec<SmellFinding> {
    debug_assert!(snapshot.test(&tree.id).is_some(), "tree from another snapshot");
    let view = View::new(tree);
    SmellId::ALL
        .into_iter()
        .map(|s| run(s, &view, clones, config))
        .collect()
}

/// Findings of every test in a snapshot, keyed by test.
pub type TestFindings = BTreeMap<TestId, Vec<SmellFinding>>;

pub fn detect_snapshot(snapshot: &Snapshot, config: &DetectorConfig) -> TestFindings {
    let clones = find_clones(snapshot, config.clone_type);
    snapshot
        .tests
        .par_iter()
        .map(|t| (t.id.clone(), detect_all(t, snapshot, &clones, config)))
        .collect()
}

/// `file:line name` for a symptom, for reports.
pub fn describe_location(snapshot: &Snapshot, tree: &CallTree, location: &Location) -> String {
    let at = |path: &str, offset: usize, what: &str| {
        let line = snapshot.file(path).map(|f| f.line(offset)).unwrap_or(0);
        format!("{path}:{line} {what}")
    };
    match location {
        Location::Call(n) => {
            let node = tree.node(*n);
            at(&node.file, node.span.start, &node.name)
        }
        Location::Argument(a) => {
            let arg = tree.arg(*a);
            let owner = tree.node(arg.owner);
            at(&owner.file, arg.span.start, &arg.text)
        }
        Location::Keyword(k) => {
            let def = snapshot.keyword(*k);
            let ast = snapshot.keyword_ast(*k);
            at(&def.id.path, ast.name_span.start, &ast.name)
        }
        Location::Test => match snapshot.test_ast(&tree.id) {
            Some(t) => at(&tree.id.path, t.name_span.start, &t.name),
            None => tree.id.to_string(),
        },
    }
}

pub fn detect(
    smell: SmellId,
    tree: &CallTree,
    snapshot: &Snapshot,
    clones: &CloneIndex,
    config: &DetectorConfig,
) -> SmellFinding {
    debug_assert!(snapshot.test(&tree.id).is_some(), "tree from another snapshot");
    run(smell, &View::new(tree), clones, config)
}

fn run(smell: SmellId, v: &View, clones: &CloneIndex, config: &DetectorConfig) -> SmellFinding {
    match smell {
        SmellId::AoC => army_of_clones(v, clones),
        SmellId::CA => conditional_assertion(v),
        SmellId::HE => hardcoded_environment(v),
        SmellId::HTD => fixture_category(SmellId::HTD, v, Category::Getter),
        SmellId::LoE => lack_of_encapsulation(v),
        SmellId::LTS => long_test_steps(v, config.long_step_threshold),
        SmellId::MM => single_call_keywords(SmellId::MM, v, |n| n.is_user()),
        SmellId::MA => missing_assertion(v),
        SmellId::N => narcissistic(v, &config.lexicons),
        SmellId::NL => fixture_category(SmellId::NL, v, Category::Logging),
        SmellId::OT => obscure_test(v),
        SmellId::OtF => on_the_fly(v),
        SmellId::OC => over_checking(v),
        SmellId::SL => sensitive_locators(v),
        SmellId::SC => single_call_keywords(SmellId::SC, v, |n| n.is_category(Category::Assertion)),
        SmellId::SS => stinky_synchronization(v),
    }
}

fn army_of_clones(v: &View, clones: &CloneIndex) -> SmellFinding {
    let nodes = v
        .keywords
        .iter()
        .filter(|k| clones.is_clone(**k))
        .map(|k| Location::Keyword(*k))
        .collect();
    SmellFinding::from_nodes(SmellId::AoC, nodes, v.keywords.len())
}

fn conditional_assertion(v: &View) -> SmellFinding {
    let assertions: Vec<NodeId> = v
        .body_library
        .iter()
        .copied()
        .filter(|n| v.node(*n).is_category(Category::Assertion))
        .collect();
    let nodes = assertions
        .iter()
        .filter(|a| {
            let Some(p) = v.node(**a).parent else {
                return false;
            };
            let parent = v.node(p);
            let conditional = matches!(parent.callee, Callee::Control(Marker::Branch { conditional: true, .. }));
            conditional
                && parent
                    .children
                    .iter()
                    .all(|c| c == *a || v.node(*c).is_category(Category::Logging))
        })
        .map(|a| Location::Call(*a))
        .collect();
    SmellFinding::from_nodes(SmellId::CA, nodes, assertions.len())
}

fn hardcoded_environment(v: &View) -> SmellFinding {
    let config: Vec<ArgId> = v
        .tree
        .arg_ids()
        .filter(|a| v.tree.arg(*a).role == Some(Role::Configuration))
        .collect();
    let nodes = config
        .iter()
        .filter(|a| v.tree.arg(**a).kind == ArgKind::Hardcoded)
        .map(|a| Location::Argument(*a))
        .collect();
    SmellFinding::from_nodes(SmellId::HE, nodes, config.len())
}

fn fixture_category(smell: SmellId, v: &View, category: Category) -> SmellFinding {
    let nodes = v
        .setup_library
        .iter()
        .filter(|n| v.node(**n).is_category(category))
        .map(|n| Location::Call(*n))
        .collect();
    SmellFinding::from_nodes(smell, nodes, v.setup_library.len())
}

fn lack_of_encapsulation(v: &View) -> SmellFinding {
    let nodes = v
        .steps
        .iter()
        .filter(|s| v.node(**s).is_library())
        .map(|s| Location::Call(*s))
        .collect();
    SmellFinding::from_nodes(SmellId::LoE, nodes, v.steps.len())
}

/// Action-flagged library calls under `step`, the step itself included.
pub fn action_count(tree: &CallTree, step: NodeId) -> usize {
    tree.descendants(step)
        .into_iter()
        .filter(|n| {
            let node = tree.node(*n);
            node.is_library() && node.has(Flag::Action)
        })
        .count()
}

/// `action_count` of every resolved step of a test, in step order.
pub fn step_action_counts(tree: &CallTree) -> Vec<usize> {
    tree.steps
        .iter()
        .filter(|s| tree.node(**s).is_resolved_call())
        .map(|s| action_count(tree, *s))
        .collect()
}

fn long_test_steps(v: &View, threshold: usize) -> SmellFinding {
    let nodes = v
        .steps
        .iter()
        .filter(|s| action_count(v.tree, **s) >= threshold)
        .map(|s| Location::Call(*s))
        .collect();
    SmellFinding::from_nodes(SmellId::LTS, nodes, v.steps.len())
}

fn single_call_keywords(smell: SmellId, v: &View, target: impl Fn(&crate::calltree::CallNode) -> bool) -> SmellFinding {
    let nodes = v
        .keywords
        .iter()
        .filter(|k| v.delegate_target(**k).is_some_and(|c| target(v.node(c))))
        .map(|k| Location::Keyword(*k))
        .collect();
    SmellFinding::from_nodes(smell, nodes, v.keywords.len())
}

fn missing_assertion(v: &View) -> SmellFinding {
    let has_assertion = v.body_library.iter().any(|n| v.node(*n).is_category(Category::Assertion));
    let nodes = if has_assertion {
        BTreeSet::new()
    } else {
        BTreeSet::from([Location::Test])
    };
    SmellFinding::from_nodes(SmellId::MA, nodes, 1)
}

fn narcissistic(v: &View, lexicons: &Lexicons) -> SmellFinding {
    let nodes = v
        .steps
        .iter()
        .filter(|s| leading_pronoun(&v.node(**s).name, lexicons).is_some())
        .map(|s| Location::Call(*s))
        .collect();
    SmellFinding::from_nodes(SmellId::N, nodes, v.steps.len())
}

fn obscure_test(v: &View) -> SmellFinding {
    let args: Vec<ArgId> = v.body_args().collect();
    let nodes = args
        .iter()
        .filter(|a| v.tree.arg(**a).kind == ArgKind::Hardcoded)
        .map(|a| Location::Argument(*a))
        .collect();
    SmellFinding::from_nodes(SmellId::OT, nodes, args.len())
}

fn on_the_fly(v: &View) -> SmellFinding {
    let expected: Vec<ArgId> = v
        .body_args()
        .filter(|a| v.tree.arg(*a).role == Some(Role::Expected))
        .collect();
    let nodes = expected
        .iter()
        .filter(|a| v.tree.arg(**a).kind == ArgKind::Computed)
        .map(|a| Location::Argument(*a))
        .collect();
    SmellFinding::from_nodes(SmellId::OtF, nodes, expected.len())
}

fn over_checking(v: &View) -> SmellFinding {
    let nodes = v
        .body_library
        .iter()
        .filter(|n| v.node(**n).is_category(Category::Assertion))
        .map(|n| Location::Call(*n))
        .collect();
    SmellFinding::from_nodes(SmellId::OC, nodes, v.body_library.len())
}

fn sensitive_locators(v: &View) -> SmellFinding {
    let mut denominator = 0;
    let mut nodes = BTreeSet::new();
    for a in v.body_args() {
        if v.tree.arg(a).role != Some(Role::Locator) {
            continue;
        }
        let values = crate::calltree::resolve_argument_values(v.tree, a);
        if values.is_empty() {
            continue;
        }
        denominator += 1;
        if values.iter().all(|val| element_count(val) > 1) {
            nodes.insert(Location::Argument(a));
        }
    }
    SmellFinding::from_nodes(SmellId::SL, nodes, denominator)
}

fn stinky_synchronization(v: &View) -> SmellFinding {
    let sync: Vec<NodeId> = v
        .body_library
        .iter()
        .copied()
        .filter(|n| v.node(*n).is_category(Category::Sync))
        .collect();
    let nodes = sync
        .iter()
        .filter(|n| v.node(**n).has(Flag::Sleep))
        .map(|n| Location::Call(*n))
        .collect();
    SmellFinding::from_nodes(SmellId::SS, nodes, sync.len())
}

#[cfg(test)]
mod tests;
