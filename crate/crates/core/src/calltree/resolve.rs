use std::collections::HashMap;

use regex::Regex;

use super::{KeywordDef, KeywordRef};
use crate::catalog::KeywordCatalog;
use crate::parser::{normalize_name, strip_bdd_prefix, Diagnostic, SuiteAst, TokenPart};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    User(KeywordRef),
    /// Canonical catalog name.
    Library(String),
    Unresolved,
}

/// Text captured for an embedded-argument placeholder, with its byte range in the call name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Capture {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
struct Embedded {
    keyword: KeywordRef,
    pattern: Regex,
}

#[derive(Debug, Clone, Default)]
struct FileScope {
    exact: HashMap<String, KeywordRef>,
    embedded: Vec<Embedded>,
    /// Resource files reachable through `Resource` imports, in import order.
    imports: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Resolver {
    scopes: Vec<FileScope>,
    global_exact: HashMap<String, Vec<KeywordRef>>,
    global_embedded: Vec<Embedded>,
}

impl Resolver {
    pub fn new(files: &[SuiteAst], keywords: &[KeywordDef], diagnostics: &mut Vec<Diagnostic>) -> Self {
        let mut scopes: Vec<FileScope> = vec![FileScope::default(); files.len()];
        let mut global_exact: HashMap<String, Vec<KeywordRef>> = HashMap::new();
        let mut global_embedded = Vec::new();

        for (i, def) in keywords.iter().enumerate() {
            let r = KeywordRef(i as u32);
            let ast = &files[def.file].keywords[def.index];
            match embedded_pattern(&ast.name) {
                Some(pattern) => {
                    let e = Embedded { keyword: r, pattern };
                    scopes[def.file].embedded.push(e.clone());
                    global_embedded.push(e);
                }
                None => {
                    let key = normalize_name(&ast.name);
                    if scopes[def.file].exact.contains_key(&key) {
                        diagnostics.push(Diagnostic {
                            path: def.id.path.clone(),
                            span: ast.name_span,
                            line: files[def.file].line(ast.name_span.start),
                            message: format!("keyword `{}` defined more than once; first definition wins", ast.name),
                        });
                        continue;
                    }
                    scopes[def.file].exact.insert(key.clone(), r);
                    global_exact.entry(key).or_default().push(r);
                }
            }
        }

        let direct: Vec<Vec<usize>> = files.iter().map(|f| direct_imports(f, files)).collect();
        for (i, scope) in scopes.iter_mut().enumerate() {
            let mut seen = vec![false; files.len()];
            seen[i] = true;
            let mut order = Vec::new();
            let mut stack: Vec<usize> = direct[i].iter().rev().copied().collect();
            while let Some(f) = stack.pop() {
                if seen[f] {
                    continue;
                }
                seen[f] = true;
                order.push(f);
                stack.extend(direct[f].iter().rev());
            }
            scope.imports = order;
        }

        Resolver {
            scopes,
            global_exact,
            global_embedded,
        }
    }

    pub fn imports(&self, file: usize) -> &[usize] {
        &self.scopes[file].imports
    }

    /// Resolution order: the calling file, its resources, the suite file and its resources,
    /// the catalog, then a keyword defined exactly once anywhere in the snapshot.
    /// The full name is tried at every level before the BDD-stripped one.
    pub fn resolve(
        &self,
        catalog: &KeywordCatalog,
        file: usize,
        suite: Option<usize>,
        name: &str,
    ) -> (Target, Vec<Capture>) {
        let mut levels = vec![file];
        levels.extend(self.scopes[file].imports.iter().copied());
        if let Some(s) = suite {
            if s != file {
                levels.push(s);
                levels.extend(self.scopes[s].imports.iter().copied());
            }
        }

        let stripped = strip_bdd_prefix(name);
        let mut candidates = vec![(name, 0usize)];
        if stripped.len() != name.len() {
            candidates.push((stripped, name.len() - stripped.len()));
        }

        for &(candidate, offset) in &candidates {
            let key = normalize_name(candidate);
            for &level in &levels {
                let scope = &self.scopes[level];
                if let Some(r) = scope.exact.get(&key) {
                    return (Target::User(*r), Vec::new());
                }
                if let Some(found) = match_embedded(&scope.embedded, candidate, offset) {
                    return found;
                }
            }
            if let Some(entry) = catalog.lookup(candidate) {
                return (Target::Library(entry.name.clone()), Vec::new());
            }
            if let Some([only]) = self.global_exact.get(&key).map(Vec::as_slice) {
                return (Target::User(*only), Vec::new());
            }
            let hits: Vec<_> = self
                .global_embedded
                .iter()
                .filter(|e| e.pattern.is_match(candidate))
                .collect();
            if hits.len() == 1 {
                if let Some(found) = match_embedded(&self.global_embedded[..], candidate, offset) {
                    return found;
                }
            }
        }
        (Target::Unresolved, Vec::new())
    }
}

fn match_embedded(list: &[Embedded], candidate: &str, offset: usize) -> Option<(Target, Vec<Capture>)> {
    for e in list {
        if let Some(caps) = e.pattern.captures(candidate) {
            let captures = caps
                .iter()
                .skip(1)
                .flatten()
                .map(|m| Capture {
                    text: m.as_str().to_string(),
                    start: offset + m.start(),
                    end: offset + m.end(),
                })
                .collect();
            return Some((Target::User(e.keyword), captures));
        }
    }
    None
}

/// Regex for a keyword name with `${arg}` placeholders, `None` for plain names.
pub(crate) fn embedded_pattern(name: &str) -> Option<Regex> {
    let parts = crate::parser::tokenize_value(name);
    if !parts.iter().any(|p| matches!(p, TokenPart::Variable(_))) {
        return None;
    }
    let mut re = String::from("(?i)^");
    for p in &parts {
        match p {
            TokenPart::Literal(s) => re.push_str(&regex::escape(s)),
            TokenPart::Variable(v) => match v.name.split_once(':') {
                Some((_, custom)) => {
                    re.push_str("(");
                    re.push_str(custom);
                    re.push(')');
                }
                None => re.push_str("(.*?)"),
            },
        }
    }
    re.push('$');
    // a custom pattern with its own groups would shift capture indices
    match Regex::new(&re) {
        Ok(r) if r.captures_len() == parts.iter().filter(|p| matches!(p, TokenPart::Variable(_))).count() + 1 => Some(r),
        _ => {
            let plain: String = parts
                .iter()
                .map(|p| match p {
                    TokenPart::Literal(s) => regex::escape(s),
                    TokenPart::Variable(_) => "(.*?)".to_string(),
                })
                .collect();
            Regex::new(&format!("(?i)^{plain}$")).ok()
        }
    }
}

/// Parameter name of an embedded placeholder, without any custom pattern.
pub(crate) fn embedded_name(var: &crate::parser::VariableRef) -> String {
    let base = var.name.split_once(':').map(|(n, _)| n).unwrap_or(&var.name);
    normalize_name(base)
}

fn direct_imports(file: &SuiteAst, files: &[SuiteAst]) -> Vec<usize> {
    let mut out = Vec::new();
    for setting in &file.settings {
        if normalize_name(&setting.name) != "resource" {
            continue;
        }
        let Some(raw) = setting.values.first() else {
            continue;
        };
        match resolve_import(&file.path, &raw.text, files) {
            Some(i) => out.push(i),
            None => log::debug!("{}: resource `{}` not found in snapshot", file.path, raw.text),
        }
    }
    out
}

fn resolve_import(from: &str, raw: &str, files: &[SuiteAst]) -> Option<usize> {
    let raw = raw.replace('\\', "/");
    let raw = raw
        .strip_prefix("${CURDIR}/")
        .or_else(|| raw.strip_prefix("${CURDIR}"))
        .unwrap_or(&raw)
        .to_string();
    let dir = match from.rfind('/') {
        Some(i) => &from[..i],
        None => "",
    };
    let joined = if dir.is_empty() {
        raw.clone()
    } else {
        format!("{dir}/{raw}")
    };
    let find = |p: &str| files.binary_search_by(|f| f.path.as_str().cmp(p)).ok();
    if let Some(i) = normalize_path(&joined).and_then(|p| find(&p)) {
        return Some(i);
    }
    if let Some(i) = normalize_path(&raw).and_then(|p| find(&p)) {
        return Some(i);
    }
    // unique suffix match covers imports written relative to a search path
    let tail = normalize_path(&raw)?;
    let tail = tail.trim_start_matches("../");
    let hits: Vec<usize> = files
        .iter()
        .enumerate()
        .filter(|(_, f)| f.path == tail || f.path.ends_with(&format!("/{tail}")))
        .map(|(i, _)| i)
        .collect();
    match hits.as_slice() {
        [one] => Some(*one),
        _ => None,
    }
}

fn normalize_path(p: &str) -> Option<String> {
    let mut out: Vec<&str> = Vec::new();
    for seg in p.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                if out.pop().is_none() {
                    out.push("..");
                }
            }
            s => out.push(s),
        }
    }
    if out.is_empty() {
        None
    } else {
        Some(out.join("/"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_patterns() {
        let re = embedded_pattern("User \"${username}\" logs in with password \"${password}\"").unwrap();
        let caps = re.captures("user \"demo\" logs in with password \"mode\"").unwrap();
        assert_eq!(&caps[1], "demo");
        assert_eq!(&caps[2], "mode");
        assert!(embedded_pattern("Plain Name").is_none());
        let custom = embedded_pattern("Wait ${n:\\d+} seconds").unwrap();
        assert!(custom.is_match("wait 12 seconds"));
        assert!(!custom.is_match("wait x seconds"));
    }

    #[test]
    fn paths() {
        assert_eq!(normalize_path("a/./b/../c").as_deref(), Some("a/c"));
        assert_eq!(normalize_path("../x").as_deref(), Some("../x"));
    }
}
