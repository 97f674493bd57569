use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use super::resolve::{embedded_name, Capture, Resolver, Target};
use super::values::{Env, Globals, Value};
use super::*;
use crate::catalog::{CatalogEntry, Category, KeywordCatalog};
use crate::parser::{
    normalize_name, ArgumentToken, CallStatement, ControlKind, Diagnostic, Span, Statement, SuiteAst,
    TestCaseAst, UserKeywordAst,
};

/// Trees larger than this stop expanding user keywords.
const MAX_TREE_NODES: usize = 200_000;

/// Resolves every test case of one version into its call tree.
pub fn build_snapshot(
    version: impl Into<String>,
    asts: Vec<SuiteAst>,
    catalog: Arc<KeywordCatalog>,
) -> Result<Snapshot, SnapshotError> {
    let mut files = asts;
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let mut diagnostics = Vec::new();
    files.dedup_by(|later, first| {
        let dup = later.path == first.path;
        if dup {
            diagnostics.push(Diagnostic {
                path: later.path.clone(),
                span: Span::default(),
                line: 1,
                message: "file listed twice; keeping the first copy".into(),
            });
        }
        dup
    });

    for f in &files {
        let mut seen = HashSet::new();
        for t in &f.test_cases {
            if !seen.insert(t.name.as_str()) {
                return Err(SnapshotError::DuplicateTestId {
                    path: f.path.clone(),
                    name: t.name.clone(),
                });
            }
        }
    }

    let mut keywords = Vec::new();
    for (fi, f) in files.iter().enumerate() {
        for (ki, k) in f.keywords.iter().enumerate() {
            keywords.push(KeywordDef {
                id: KeywordId {
                    path: f.path.clone(),
                    name: k.name.clone(),
                },
                file: fi,
                index: ki,
            });
        }
    }

    let resolver = Resolver::new(&files, &keywords, &mut diagnostics);
    let mut tests = Vec::new();
    let mut cycles = HashSet::new();
    for (fi, f) in files.iter().enumerate() {
        if f.test_cases.is_empty() {
            continue;
        }
        let files_ref = &files;
        let scope = std::iter::once(fi).chain(resolver.imports(fi).iter().copied());
        let globals = Globals::build(scope.flat_map(|i| {
            let f = &files_ref[i];
            f.variables.iter().map(move |v| (f.path.as_str(), v))
        }));
        for t in &f.test_cases {
            let mut b = Builder {
                files: &files,
                keywords: &keywords,
                resolver: &resolver,
                catalog: &catalog,
                globals: &globals,
                suite: fi,
                nodes: Vec::new(),
                args: Vec::new(),
                stack: Vec::new(),
                diagnostics: &mut diagnostics,
                cycles: &mut cycles,
                truncated: false,
            };
            tests.push(b.test(t));
        }
    }
    tests.sort_by(|a, b| a.id.cmp(&b.id));
    for f in &files {
        diagnostics.extend(f.diagnostics.iter().cloned());
    }

    Ok(Snapshot {
        version: version.into(),
        files,
        keywords,
        tests,
        diagnostics,
        catalog,
        resolver,
    })
}

struct Builder<'a> {
    files: &'a [SuiteAst],
    keywords: &'a [KeywordDef],
    resolver: &'a Resolver,
    catalog: &'a KeywordCatalog,
    globals: &'a Globals,
    suite: usize,
    nodes: Vec<CallNode>,
    args: Vec<ArgumentNode>,
    stack: Vec<KeywordRef>,
    diagnostics: &'a mut Vec<Diagnostic>,
    cycles: &'a mut HashSet<Origin>,
    truncated: bool,
}

/// A call as written, possibly synthesized from a `Run Keyword` argument list.
struct Site<'s> {
    callee: &'s str,
    callee_span: Span,
    args: Vec<(u32, &'s ArgumentToken)>,
    assigned: &'s [String],
    span: Span,
}

impl<'s> Site<'s> {
    fn of(c: &'s CallStatement) -> Self {
        Site {
            callee: &c.callee,
            callee_span: c.callee_span,
            args: c.arguments.iter().enumerate().map(|(i, a)| (i as u32, a)).collect(),
            assigned: &c.assigned,
            span: c.span,
        }
    }
}

struct Ctx<'e> {
    file: usize,
    region: Region,
    env: &'e mut Env,
}

impl<'a> Builder<'a> {
    fn test(&mut self, t: &TestCaseAst) -> CallTree {
        let file = &self.files[self.suite];
        let id = TestId {
            path: file.path.clone(),
            name: t.name.clone(),
        };
        let root = self.add(
            None,
            Callee::Control(Marker::Root),
            &t.name,
            Origin::new(DefId::Test(id.clone()), Vec::new()),
            t.span,
            Region::Body,
        );
        let mut env = Env::default();
        let mut ctx = Ctx {
            file: self.suite,
            region: Region::Body,
            env: &mut env,
        };
        self.statements(&t.body, root, &Origin::new(DefId::Test(id.clone()), Vec::new()), &mut ctx);

        let path = file.path.clone();
        let suite_setup = file.setting("Suite Setup").and_then(|s| s.fixture.as_ref());
        let test_setup = if t.setup_declared {
            t.setup.as_ref().map(|c| (c, DefId::TestSetup(id.clone())))
        } else {
            file.setting("Test Setup")
                .or_else(|| file.setting("Task Setup"))
                .and_then(|s| s.fixture.as_ref())
                .map(|c| (c, DefId::DefaultTestSetup(path.clone())))
        };
        let mut setup_calls = Vec::new();
        if let Some(c) = suite_setup {
            setup_calls.push((c, DefId::SuiteSetup(path.clone())));
        }
        setup_calls.extend(test_setup);
        let setup = self.fixture(Marker::Setup, Region::Setup, &t.name, t.span, setup_calls);

        let suite_teardown = file.setting("Suite Teardown").and_then(|s| s.fixture.as_ref());
        let test_teardown = if t.teardown_declared {
            t.teardown.as_ref().map(|c| (c, DefId::TestTeardown(id.clone())))
        } else {
            file.setting("Test Teardown")
                .or_else(|| file.setting("Task Teardown"))
                .and_then(|s| s.fixture.as_ref())
                .map(|c| (c, DefId::DefaultTestTeardown(path.clone())))
        };
        let mut teardown_calls: Vec<_> = test_teardown.into_iter().collect();
        if let Some(c) = suite_teardown {
            teardown_calls.push((c, DefId::SuiteTeardown(path.clone())));
        }
        let teardown = self.fixture(Marker::Teardown, Region::Teardown, &t.name, t.span, teardown_calls);

        let mut steps = Vec::new();
        let mut stack: Vec<NodeId> = self.nodes[root.0 as usize].children.iter().rev().copied().collect();
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n.0 as usize];
            if node.is_marker() {
                stack.extend(node.children.iter().rev());
            } else {
                steps.push(n);
            }
        }

        CallTree {
            id,
            nodes: std::mem::take(&mut self.nodes),
            args: std::mem::take(&mut self.args),
            root,
            setup,
            teardown,
            steps,
        }
    }

    fn fixture(
        &mut self,
        marker: Marker,
        region: Region,
        name: &str,
        span: Span,
        calls: Vec<(&CallStatement, DefId)>,
    ) -> Option<NodeId> {
        if calls.is_empty() {
            return None;
        }
        let def = calls[0].1.clone();
        let node = self.add(None, Callee::Control(marker), name, Origin::new(def, Vec::new()), span, region);
        for (c, def) in calls {
            let mut env = Env::default();
            let mut ctx = Ctx {
                file: self.suite,
                region,
                env: &mut env,
            };
            self.call(&Site::of(c), node, Origin::new(def, vec![0]), &mut ctx);
        }
        Some(node)
    }

    fn add(
        &mut self,
        parent: Option<NodeId>,
        callee: Callee,
        name: &str,
        origin: Origin,
        span: Span,
        region: Region,
    ) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let depth = parent.map(|p| self.nodes[p.0 as usize].depth + 1).unwrap_or(0);
        let category = match callee {
            Callee::Control(_) => Some(Category::Controlflow),
            _ => None,
        };
        let file = origin.def.path().to_string();
        self.nodes.push(CallNode {
            callee,
            name: name.to_string(),
            category,
            flags: BTreeSet::new(),
            children: Vec::new(),
            arguments: Vec::new(),
            parent,
            depth,
            region,
            origin,
            span,
            file,
        });
        if let Some(p) = parent {
            self.nodes[p.0 as usize].children.push(id);
        }
        id
    }

    fn statements(&mut self, stmts: &[Statement], parent: NodeId, base: &Origin, ctx: &mut Ctx) {
        for (i, s) in stmts.iter().enumerate() {
            let origin = base.child(i as u32);
            match s {
                Statement::Call(c) => {
                    self.call(&Site::of(c), parent, origin, ctx);
                }
                Statement::Control(block) => {
                    let marker = match block.kind {
                        ControlKind::If => Marker::If,
                        ControlKind::For | ControlKind::While => Marker::Loop,
                        ControlKind::Try => Marker::Try,
                    };
                    let m = self.add(
                        Some(parent),
                        Callee::Control(marker),
                        block.kind.keyword(),
                        origin.clone(),
                        block.span,
                        ctx.region,
                    );
                    if block.kind == ControlKind::For {
                        self.bind_loop(&block.branches[0].condition, ctx);
                    }
                    for (b, br) in block.branches.iter().enumerate() {
                        let bo = origin.child(b as u32);
                        let bn = self.add(
                            Some(m),
                            Callee::Control(Marker::Branch {
                                label: br.label.clone(),
                                conditional: block.kind == ControlKind::If,
                            }),
                            &br.label,
                            bo.clone(),
                            br.span,
                            ctx.region,
                        );
                        self.statements(&br.body, bn, &bo, ctx);
                    }
                }
            }
        }
    }

    fn bind_loop(&mut self, header: &[ArgumentToken], ctx: &mut Ctx) {
        let sep = header
            .iter()
            .position(|t| t.text.trim().to_ascii_uppercase().starts_with("IN"));
        let Some(sep) = sep else {
            return;
        };
        let kind = header[sep].text.trim().to_ascii_uppercase();
        let mut value = if kind == "IN" {
            let mut acc: Option<Value> = None;
            for tok in &header[sep + 1..] {
                let v = ctx.env.eval(tok, self.globals);
                acc = Some(match acc {
                    None => v,
                    Some(a) => a.union(v),
                });
            }
            acc.unwrap_or_else(Value::unknown)
        } else {
            Value::unknown()
        };
        if header[..sep].len() != 1 {
            value.known = false;
            value.values.clear();
        }
        for var in &header[..sep] {
            if let Some(v) = var.variables().next() {
                ctx.env.set(&v.name, value.clone());
            }
        }
    }

    fn call(&mut self, site: &Site, parent: NodeId, origin: Origin, ctx: &mut Ctx) -> NodeId {
        let (target, captures) = self.resolver.resolve(self.catalog, ctx.file, Some(self.suite), site.callee);
        let node = match target {
            Target::Library(name) => {
                let entry = self.catalog.get(&name).expect("resolved from catalog").clone();
                match runner_kind(&name) {
                    Some(kind) => self.runner(kind, site, parent, origin, ctx),
                    None => self.library(&entry, site, parent, origin, ctx),
                }
            }
            Target::User(k) => {
                if self.stack.contains(&k) {
                    if self.cycles.insert(origin.clone()) {
                        let f = &self.files[ctx.file];
                        self.diagnostics.push(Diagnostic {
                            path: f.path.clone(),
                            span: site.span,
                            line: f.line(site.span.start),
                            message: format!("recursive call to `{}` cut", site.callee),
                        });
                    }
                    self.add(Some(parent), Callee::Unresolved, site.callee, origin, site.span, ctx.region)
                } else if self.nodes.len() >= MAX_TREE_NODES {
                    if !self.truncated {
                        self.truncated = true;
                        let f = &self.files[ctx.file];
                        self.diagnostics.push(Diagnostic {
                            path: f.path.clone(),
                            span: site.span,
                            line: f.line(site.span.start),
                            message: "call tree too large; further keywords left unexpanded".into(),
                        });
                    }
                    self.add(Some(parent), Callee::Unresolved, site.callee, origin, site.span, ctx.region)
                } else {
                    self.user(k, captures, site, parent, origin, ctx)
                }
            }
            Target::Unresolved => {
                self.add(Some(parent), Callee::Unresolved, site.callee, origin, site.span, ctx.region)
            }
        };
        for name in site.assigned {
            ctx.env.set(name, Value::computed());
        }
        node
    }

    fn library(&mut self, entry: &CatalogEntry, site: &Site, parent: NodeId, origin: Origin, ctx: &mut Ctx) -> NodeId {
        let n = self.add(
            Some(parent),
            Callee::Library(entry.name.clone()),
            site.callee,
            origin,
            site.span,
            ctx.region,
        );
        {
            let node = &mut self.nodes[n.0 as usize];
            node.category = Some(entry.category);
            node.flags = entry.flags.clone();
        }
        for (pos, &(slot, tok)) in site.args.iter().enumerate() {
            let ordinal = pos + 1;
            let role = if entry.expected == Some(ordinal) {
                Some(Role::Expected)
            } else if entry.locators.contains(&ordinal) {
                Some(Role::Locator)
            } else if entry.config.contains(&ordinal) {
                Some(Role::Configuration)
            } else {
                None
            };
            let value = ctx.env.eval(tok, self.globals);
            let literal = tok.literal_value().is_some();
            self.push_arg(n, Slot::Cell(slot), &tok.text, tok.span, literal, value, role);
        }
        n
    }

    #[allow(clippy::too_many_arguments)]
    fn push_arg(&mut self, owner: NodeId, slot: Slot, text: &str, span: Span, literal: bool, value: Value, role: Option<Role>) -> Value {
        let origin = self.nodes[owner.0 as usize].origin.statement();
        let token = ValueSource::Token { origin, slot };
        let kind = if literal {
            ArgKind::Hardcoded
        } else if value.computed {
            ArgKind::Computed
        } else {
            ArgKind::Variable
        };
        let value = value.with_source(token);
        let id = ArgId(self.args.len() as u32);
        self.args.push(ArgumentNode {
            owner,
            slot,
            text: text.to_string(),
            span,
            kind,
            values: if value.known && !value.computed {
                value.values.clone()
            } else {
                BTreeSet::new()
            },
            role,
            sources: value.sources.clone(),
        });
        self.nodes[owner.0 as usize].arguments.push(id);
        value
    }

    fn user(&mut self, k: KeywordRef, captures: Vec<Capture>, site: &Site, parent: NodeId, origin: Origin, ctx: &mut Ctx) -> NodeId {
        let def = &self.keywords[k.0 as usize];
        let kw: &UserKeywordAst = &self.files[def.file].keywords[def.index];
        let kid = def.id.clone();
        let kw_file = def.file;
        let n = self.add(Some(parent), Callee::User(k), site.callee, origin, site.span, ctx.region);

        let mut callee_env = Env::default();
        // embedded placeholders bind first, in name order
        let names: Vec<String> = kw.embedded_arguments().iter().map(embedded_name).collect();
        for (i, cap) in captures.iter().enumerate() {
            let tok = ArgumentToken::new(
                cap.text.clone(),
                Span::new(site.callee_span.start + cap.start, site.callee_span.start + cap.end),
            );
            let literal = tok.literal_value().is_some();
            let value = ctx.env.eval(&tok, self.globals);
            let bound = self.push_arg(n, Slot::Embedded(i as u32), &tok.text, tok.span, literal, value, None);
            if let Some(name) = names.get(i) {
                callee_env.set(name, bound);
            }
        }

        let params = &kw.arguments;
        let mut positional: Vec<Value> = Vec::new();
        let mut named: Vec<(String, Value)> = Vec::new();
        for &(slot, tok) in &site.args {
            let named_param = tok.text.split_once('=').and_then(|(head, rest)| {
                let key = normalize_name(head);
                let is_param = !head.ends_with('\\')
                    && params.iter().any(|p| p.sigil == '$' && p.normalized() == key);
                is_param.then(|| (key, rest))
            });
            match named_param {
                Some((key, rest)) => {
                    let start = tok.span.end.saturating_sub(rest.len());
                    let value_tok = ArgumentToken::new(rest, Span::new(start, tok.span.end));
                    let literal = value_tok.literal_value().is_some();
                    let value = ctx.env.eval(&value_tok, self.globals);
                    let bound = self.push_arg(n, Slot::Cell(slot), &tok.text, tok.span, literal, value, None);
                    named.push((key, bound));
                }
                None => {
                    let literal = tok.literal_value().is_some();
                    let value = ctx.env.eval(tok, self.globals);
                    let bound = self.push_arg(n, Slot::Cell(slot), &tok.text, tok.span, literal, value, None);
                    positional.push(bound);
                }
            }
        }

        let mut rest = positional.into_iter();
        for (i, p) in params.iter().enumerate() {
            let key = p.normalized();
            let value = match p.sigil {
                '$' => {
                    if let Some((_, v)) = named.iter().find(|(n, _)| *n == key) {
                        v.clone()
                    } else if let Some(v) = rest.next() {
                        v
                    } else if let Some(d) = &p.default {
                        callee_env.eval(d, self.globals).with_source(ValueSource::Default {
                            keyword: kid.clone(),
                            index: i as u32,
                        })
                    } else {
                        Value::unknown()
                    }
                }
                '@' => {
                    let mut acc: Option<Value> = None;
                    for v in rest.by_ref() {
                        acc = Some(match acc {
                            None => v,
                            Some(a) => a.union(v),
                        });
                    }
                    let mut v = acc.unwrap_or_else(Value::unknown);
                    v.known = false;
                    v.values.clear();
                    v
                }
                _ => Value::unknown(),
            };
            callee_env.set(&p.name, value);
        }

        self.stack.push(k);
        let mut inner = Ctx {
            file: kw_file,
            region: ctx.region,
            env: &mut callee_env,
        };
        self.statements(&kw.body, n, &Origin::new(DefId::Keyword(kid.clone()), Vec::new()), &mut inner);
        if let Some(td) = &kw.teardown {
            self.call(&Site::of(td), n, Origin::new(DefId::KeywordTeardown(kid), vec![0]), &mut inner);
        }
        self.stack.pop();
        n
    }

    fn runner(&mut self, kind: Runner, site: &Site, parent: NodeId, origin: Origin, ctx: &mut Ctx) -> NodeId {
        let conditional = matches!(kind, Runner::If | Runner::Unless);
        let marker = if conditional { Marker::If } else { Marker::Runner };
        let m = self.add(Some(parent), Callee::Control(marker), site.callee, origin.clone(), site.span, ctx.region);
        let groups = runner_groups(kind, &site.args);
        for (g, group) in groups.into_iter().enumerate() {
            let seg = INLINE | g as u32;
            let (call_parent, call_origin) = if conditional {
                let b = self.add(
                    Some(m),
                    Callee::Control(Marker::Branch {
                        label: group.label.to_string(),
                        conditional: true,
                    }),
                    group.label,
                    origin.child(seg),
                    site.span,
                    ctx.region,
                );
                (b, origin.child(seg).child(INLINE))
            } else {
                (m, origin.child(seg))
            };
            let Some(&(_, name_tok)) = group.tokens.first() else {
                continue;
            };
            let inner = Site {
                callee: &name_tok.text,
                callee_span: name_tok.span,
                args: group.tokens[1..].to_vec(),
                assigned: &[],
                span: name_tok.span.cover(group.tokens.last().map(|t| t.1.span).unwrap_or(name_tok.span)),
            };
            if name_tok.literal_value().is_some() {
                self.call(&inner, call_parent, call_origin, ctx);
            } else {
                self.add(Some(call_parent), Callee::Unresolved, &name_tok.text, call_origin, inner.span, ctx.region);
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Runner {
    If,
    Unless,
    /// Keyword name after this many leading arguments.
    Skip(usize),
    Keywords,
}

fn runner_kind(name: &str) -> Option<Runner> {
    Some(match normalize_name(name).as_str() {
        "runkeywordif" => Runner::If,
        "runkeywordunless" => Runner::Unless,
        "runkeywords" => Runner::Keywords,
        "runkeyword"
        | "runkeywordandignoreerror"
        | "runkeywordandreturnstatus"
        | "runkeywordandcontinueonfailure"
        | "runkeywordandreturn"
        | "runkeywordandwarnonfailure"
        | "runkeywordiftestfailed"
        | "runkeywordiftestpassed"
        | "runkeywordifalltestspassed"
        | "runkeywordifanytestsfailed"
        | "runkeywordiftimeoutoccurred" => Runner::Skip(0),
        "runkeywordandexpecterror" | "repeatkeyword" | "runkeywordandreturnif" => Runner::Skip(1),
        _ => return None,
    })
}

struct Group<'s> {
    label: &'static str,
    tokens: Vec<(u32, &'s ArgumentToken)>,
}

fn runner_groups<'s>(kind: Runner, args: &[(u32, &'s ArgumentToken)]) -> Vec<Group<'s>> {
    match kind {
        Runner::Skip(n) => vec![Group {
            label: "RUN",
            tokens: args.iter().skip(n).copied().collect(),
        }],
        Runner::Unless => vec![Group {
            label: "UNLESS",
            tokens: args.iter().skip(1).copied().collect(),
        }],
        Runner::If => {
            let mut groups = Vec::new();
            let mut label = "IF";
            let mut i = 0;
            // each branch: [condition] keyword args...
            loop {
                if label != "ELSE" {
                    i += 1;
                }
                let start = i.min(args.len());
                while i < args.len() && !matches!(args[i].1.text.as_str(), "ELSE IF" | "ELSE") {
                    i += 1;
                }
                groups.push(Group {
                    label,
                    tokens: args[start..i].to_vec(),
                });
                if i >= args.len() {
                    break;
                }
                label = if args[i].1.text == "ELSE" { "ELSE" } else { "ELSE IF" };
                i += 1;
            }
            groups
        }
        Runner::Keywords => {
            if args.iter().any(|(_, t)| t.text == "AND") {
                args.split(|(_, t)| t.text == "AND")
                    .map(|g| Group {
                        label: "RUN",
                        tokens: g.to_vec(),
                    })
                    .collect()
            } else {
                args.iter()
                    .map(|a| Group {
                        label: "RUN",
                        tokens: vec![*a],
                    })
                    .collect()
            }
        }
    }
}
