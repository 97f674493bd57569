use std::collections::{BTreeSet, HashMap, HashSet};

use serde::Serialize;

use super::diff::{ChangeKind, FineGrainedChange, Site, SnapshotDiff};
use crate::calltree::{
    resolve_argument_values, ArgId, CallTree, Callee, DefId, KeywordRef, Marker, NodeId, Origin, Slot, Snapshot,
    TestId, ValueSource,
};
use crate::catalog::{Category, Flag};
use crate::locator::element_count;
use crate::smells::{describe_location, Location, SmellFinding, SmellId, TestFindings};

/// One removed symptom and the edits that removed it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefactoringAction {
    pub smell: SmellId,
    pub test: TestId,
    /// The symptomatic node in the earlier version.
    pub node: Location,
    /// `file:line text` of that node.
    pub location: String,
    pub changes: Vec<FineGrainedChange>,
    pub from_version: String,
    pub to_version: String,
}

/// Edits indexed by the earlier-version element they touch.
struct ChangeIndex<'d> {
    changes: &'d [FineGrainedChange],
    removed: HashMap<Origin, usize>,
    /// Modified or renamed statements.
    edited: HashMap<Origin, Vec<usize>>,
    renamed: HashMap<Origin, usize>,
    arguments: HashMap<(Origin, Slot), usize>,
    values: HashMap<ValueSource, usize>,
    removed_defs: HashMap<DefId, usize>,
    /// Later-version statements that are new or edited.
    fresh: HashSet<Origin>,
    /// Definitions touched in either version.
    touched: HashMap<DefId, Vec<usize>>,
}

impl<'d> ChangeIndex<'d> {
    fn new(diff: &'d SnapshotDiff) -> Self {
        let mut ix = ChangeIndex {
            changes: &diff.changes,
            removed: HashMap::new(),
            edited: HashMap::new(),
            renamed: HashMap::new(),
            arguments: HashMap::new(),
            values: HashMap::new(),
            removed_defs: HashMap::new(),
            fresh: HashSet::new(),
            touched: HashMap::new(),
        };
        for (i, c) in diff.changes.iter().enumerate() {
            let before = c.before.as_ref().map(|r| &r.site);
            let after = c.after.as_ref().map(|r| &r.site);
            for site in before.into_iter().chain(after) {
                if let Some(d) = site.def() {
                    ix.touched.entry(d).or_default().push(i);
                }
            }
            match (c.kind, before) {
                (ChangeKind::NodeRemoved, Some(Site::Statement(o))) => {
                    ix.removed.insert(o.clone(), i);
                }
                (ChangeKind::NodeRemoved, Some(Site::Definition(d))) => {
                    ix.removed_defs.insert(d.clone(), i);
                }
                (ChangeKind::NodeModified | ChangeKind::NameChanged, Some(Site::Statement(o))) => {
                    ix.edited.entry(o.clone()).or_default().push(i);
                    if c.kind == ChangeKind::NameChanged {
                        ix.renamed.insert(o.clone(), i);
                    }
                }
                (ChangeKind::ArgumentChanged, Some(Site::Argument { origin, slot })) => {
                    ix.arguments.insert((origin.clone(), *slot), i);
                }
                (ChangeKind::ValueChanged | ChangeKind::NodeRemoved, Some(Site::Variable { path, name })) => {
                    ix.values.insert(
                        ValueSource::Global {
                            path: path.clone(),
                            name: name.clone(),
                        },
                        i,
                    );
                }
                (ChangeKind::ValueChanged, Some(Site::Default { keyword, index })) => {
                    ix.values.insert(
                        ValueSource::Default {
                            keyword: keyword.clone(),
                            index: *index,
                        },
                        i,
                    );
                }
                _ => {}
            }
            if c.kind != ChangeKind::NodeRemoved {
                if let Some(o) = after.and_then(|s| s.origin()) {
                    ix.fresh.insert(o.clone());
                }
            }
        }
        ix
    }

    fn take(&self, ids: impl IntoIterator<Item = usize>) -> Vec<FineGrainedChange> {
        let set: BTreeSet<usize> = ids.into_iter().collect();
        set.into_iter().map(|i| self.changes[i].clone()).collect()
    }

    /// Changes to any token the argument's value was drawn from.
    fn argument_sources(&self, tree: &CallTree, a: ArgId) -> Vec<usize> {
        tree.arg(a)
            .sources
            .iter()
            .filter_map(|s| match s {
                ValueSource::Token { origin, slot } => self.arguments.get(&(origin.clone(), *slot)).copied(),
                other => self.values.get(other).copied(),
            })
            .collect()
    }
}

/// Statement origins of the call nodes from the test root down to `n`.
fn call_chain(tree: &CallTree, n: NodeId) -> Vec<Origin> {
    let mut chain = Vec::new();
    let mut cur = Some(n);
    while let Some(id) = cur {
        let node = tree.node(id);
        if node.is_call() {
            chain.push(node.origin.statement());
        }
        cur = node.parent;
    }
    chain.reverse();
    chain
}

struct Pair<'a> {
    v1: &'a Snapshot,
    t1: &'a CallTree,
    t2: &'a CallTree,
    f1: &'a [SmellFinding],
    f2: &'a [SmellFinding],
    diff: &'a SnapshotDiff,
    ix: &'a ChangeIndex<'a>,
    chains2: HashMap<Vec<Origin>, Vec<NodeId>>,
}

impl<'a> Pair<'a> {
    /// Nodes of the later tree at the position `n` maps to.
    fn corresponding(&self, n: NodeId) -> Vec<NodeId> {
        let mapped: Option<Vec<Origin>> = call_chain(self.t1, n)
            .iter()
            .map(|o| self.diff.map_origin(o))
            .collect();
        mapped
            .and_then(|c| self.chains2.get(&c))
            .cloned()
            .unwrap_or_default()
    }

    fn corresponding_args(&self, a: ArgId) -> Vec<ArgId> {
        let arg = self.t1.arg(a);
        self.corresponding(arg.owner)
            .into_iter()
            .flat_map(|m| self.t2.node(m).arguments.iter().copied())
            .filter(|b| self.t2.arg(*b).slot == arg.slot)
            .collect()
    }

    fn symptomatic_after(&self, s: SmellId, loc: Location) -> bool {
        self.f2[s.index()].nodes.contains(&loc)
    }

    fn stmt(&self, n: NodeId) -> Origin {
        self.t1.node(n).origin.statement()
    }

    /// Later-version counterparts exist and none shows the symptom.
    fn cleared(&self, s: SmellId, n: NodeId) -> Option<Vec<NodeId>> {
        let after = self.corresponding(n);
        (!after.is_empty() && after.iter().all(|m| !self.symptomatic_after(s, Location::Call(*m)))).then_some(after)
    }

    fn cleared_args(&self, s: SmellId, a: ArgId) -> Option<Vec<ArgId>> {
        let after = self.corresponding_args(a);
        (!after.is_empty() && after.iter().all(|b| !self.symptomatic_after(s, Location::Argument(*b))))
            .then_some(after)
    }

    /// The symptom's own statement was deleted and nothing took its place.
    fn removal(&self, n: NodeId) -> Option<Vec<usize>> {
        let i = *self.ix.removed.get(&self.stmt(n))?;
        self.corresponding(n).is_empty().then(|| vec![i])
    }

    fn replaced(&self, s: SmellId, n: NodeId, ok: impl Fn(&crate::calltree::CallNode) -> bool) -> Option<Vec<usize>> {
        let edits = self.ix.edited.get(&self.stmt(n))?;
        let after = self.cleared(s, n)?;
        after.iter().all(|m| ok(self.t2.node(*m))).then(|| edits.clone())
    }

    fn call_pattern(&self, s: SmellId, n: NodeId) -> Option<Vec<usize>> {
        match s {
            SmellId::SS => self.removal(n).or_else(|| {
                self.replaced(s, n, |m| m.is_category(Category::Sync) && !m.has(Flag::Sleep))
            }),
            SmellId::OC | SmellId::HTD | SmellId::NL => self.removal(n),
            SmellId::LoE => self.removal(n).or_else(|| self.replaced(s, n, |m| m.is_user())),
            SmellId::N => {
                let i = *self.ix.renamed.get(&self.stmt(n))?;
                self.cleared(s, n).map(|_| vec![i])
            }
            SmellId::LTS => {
                let stmt = self.stmt(n);
                let untouched = !self.ix.edited.contains_key(&stmt)
                    && !self.ix.removed.contains_key(&stmt)
                    && !self.ix.arguments.keys().any(|(o, _)| *o == stmt);
                if !untouched {
                    return None;
                }
                let after = self.cleared(s, n)?;
                let mut defs: BTreeSet<DefId> = self
                    .t1
                    .descendants(n)
                    .into_iter()
                    .map(|d| self.t1.node(d).origin.def.clone())
                    .collect();
                for m in &after {
                    defs.extend(self.t2.descendants(*m).into_iter().map(|d| self.t2.node(d).origin.def.clone()));
                }
                let hits: Vec<usize> = defs
                    .iter()
                    .filter_map(|d| self.ix.touched.get(d))
                    .flatten()
                    .copied()
                    .collect();
                (!hits.is_empty()).then_some(hits)
            }
            SmellId::CA => {
                // the conditional around the assertion was dissolved, the assertion kept
                let mut cur = self.t1.node(n).parent;
                let mut conditional = None;
                while let Some(p) = cur {
                    let node = self.t1.node(p);
                    if matches!(node.callee, Callee::Control(Marker::If)) {
                        conditional = Some(p);
                        break;
                    }
                    if node.is_call() {
                        break;
                    }
                    cur = node.parent;
                }
                let stmt = self.stmt(conditional?);
                let mut hits: Vec<usize> = self.ix.edited.get(&stmt).cloned().unwrap_or_default();
                hits.extend(self.ix.removed.get(&stmt));
                if hits.is_empty() {
                    return None;
                }
                self.cleared(s, n).map(|_| hits)
            }
            _ => None,
        }
    }

    fn argument_pattern(&self, s: SmellId, a: ArgId) -> Option<Vec<usize>> {
        let arg = self.t1.arg(a);
        let own = (self.t1.node(arg.owner).origin.statement(), arg.slot);
        let hits = match s {
            SmellId::OT | SmellId::HE => self.ix.arguments.get(&own).map(|i| vec![*i])?,
            SmellId::OtF | SmellId::SL => {
                let hits = self.ix.argument_sources(self.t1, a);
                if hits.is_empty() {
                    return None;
                }
                hits
            }
            _ => return None,
        };
        let after = self.cleared_args(s, a)?;
        if s == SmellId::SL {
            // the locator must still resolve, now to single-element paths
            let short = after.iter().all(|b| {
                let values = resolve_argument_values(self.t2, *b);
                !values.is_empty() && values.iter().all(|v| element_count(v) <= 1)
            });
            if !short {
                return None;
            }
        }
        Some(hits)
    }

    fn keyword_pattern(&self, s: SmellId, k: KeywordRef) -> Option<Vec<usize>> {
        let id = DefId::Keyword(self.v1.keyword(k).id.clone());
        match s {
            SmellId::AoC | SmellId::SC => self.ix.removed_defs.get(&id).map(|i| vec![*i]),
            SmellId::MM => {
                let sites: Vec<NodeId> = self
                    .t1
                    .node_ids()
                    .filter(|n| self.t1.node(*n).callee == Callee::User(k))
                    .collect();
                let mut hits = Vec::new();
                for n in &sites {
                    let after = self.corresponding(*n);
                    let still_delegating = after.iter().any(|m| match self.t2.node(*m).callee {
                        Callee::User(k2) => self.symptomatic_after(s, Location::Keyword(k2)),
                        _ => false,
                    });
                    if still_delegating {
                        return None;
                    }
                    if let Some(e) = self.ix.edited.get(&self.stmt(*n)) {
                        if after.iter().any(|m| self.t2.node(*m).is_user()) {
                            hits.extend(e.iter().copied());
                        }
                    }
                }
                (!hits.is_empty()).then_some(hits)
            }
            _ => None,
        }
    }

    fn test_pattern(&self, s: SmellId) -> Option<Vec<usize>> {
        if s != SmellId::MA || self.f2[s.index()].count != 0 {
            return None;
        }
        let added = self.diff.added_defs();
        let mut hits = Vec::new();
        for n in self.t2.library_calls_in(crate::calltree::Region::Body) {
            if !self.t2.node(n).is_category(Category::Assertion) {
                continue;
            }
            for o in call_chain(self.t2, n) {
                if self.ix.fresh.contains(&o) || added.contains(&o.def) {
                    hits.extend(self.ix.changes.iter().enumerate().filter_map(|(i, c)| {
                        let after = c.after.as_ref()?;
                        let hit = after.site.origin() == Some(&o)
                            || matches!(&after.site, Site::Definition(d) if *d == o.def);
                        hit.then_some(i)
                    }));
                }
            }
        }
        (!hits.is_empty()).then_some(hits)
    }
}

/// Symptoms of `v1` removed in `v2` by an edit matching the smell's refactoring pattern.
pub fn match_refactorings(
    v1: &Snapshot,
    v2: &Snapshot,
    findings_v1: &TestFindings,
    findings_v2: &TestFindings,
    diff: &SnapshotDiff,
) -> Vec<RefactoringAction> {
    let ix = ChangeIndex::new(diff);
    let mut out = Vec::new();
    for (test, f1) in findings_v1 {
        let (Some(t1), Some(t2), Some(f2)) = (v1.test(test), v2.test(test), findings_v2.get(test)) else {
            continue;
        };
        let mut chains2: HashMap<Vec<Origin>, Vec<NodeId>> = HashMap::new();
        for n in t2.node_ids() {
            if t2.node(n).is_call() {
                chains2.entry(call_chain(t2, n)).or_default().push(n);
            }
        }
        let pair = Pair {
            v1,
            t1,
            t2,
            f1,
            f2,
            diff,
            ix: &ix,
            chains2,
        };
        for finding in pair.f1 {
            let s = finding.smell;
            for loc in &finding.nodes {
                let hits = match *loc {
                    Location::Call(n) => pair.call_pattern(s, n),
                    Location::Argument(a) => pair.argument_pattern(s, a),
                    Location::Keyword(k) => pair.keyword_pattern(s, k),
                    Location::Test => pair.test_pattern(s),
                };
                let Some(hits) = hits else {
                    continue;
                };
                out.push(RefactoringAction {
                    smell: s,
                    test: test.clone(),
                    node: *loc,
                    location: describe_location(v1, t1, loc),
                    changes: ix.take(hits),
                    from_version: v1.version.clone(),
                    to_version: v2.version.clone(),
                });
            }
        }
    }
    out
}
