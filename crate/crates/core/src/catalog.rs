//! Library keyword catalog: category, flags and argument roles per keyword.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::parser::normalize_name;

const DEFAULT_CATALOG: &str = include_str!("../catalog/default.catalog");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Category {
    Interaction,
    Assertion,
    Controlflow,
    Getter,
    Logging,
    Sync,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Interaction,
        Category::Assertion,
        Category::Controlflow,
        Category::Getter,
        Category::Logging,
        Category::Sync,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Interaction => "INTERACTION",
            Category::Assertion => "ASSERTION",
            Category::Controlflow => "CONTROLFLOW",
            Category::Getter => "GETTER",
            Category::Logging => "LOGGING",
            Category::Sync => "SYNC",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown category `{}`", s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Flag {
    Configuration,
    Action,
    Sleep,
    Log,
}

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "configuration" => Ok(Flag::Configuration),
            "action" => Ok(Flag::Action),
            "sleep" => Ok(Flag::Sleep),
            "log" => Ok(Flag::Log),
            other => Err(format!("unknown flag `{other}`")),
        }
    }
}

/// Argument positions are 1-based ordinals, as written in the catalog file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CatalogEntry {
    pub name: String,
    pub category: Category,
    pub flags: BTreeSet<Flag>,
    pub expected: Option<usize>,
    pub locators: BTreeSet<usize>,
    pub config: BTreeSet<usize>,
}

impl CatalogEntry {
    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{source_name}:{line}: {message}")]
    Syntax {
        source_name: String,
        line: usize,
        message: String,
    },
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordCatalog {
    entries: BTreeMap<String, CatalogEntry>,
}

impl Default for KeywordCatalog {
    fn default() -> Self {
        KeywordCatalog::builtin()
    }
}

impl KeywordCatalog {
    pub fn empty() -> Self {
        KeywordCatalog {
            entries: BTreeMap::new(),
        }
    }

    /// The shipped default table.
    pub fn builtin() -> Self {
        let entries = parse_catalog("<builtin>", DEFAULT_CATALOG).expect("builtin catalog is valid");
        let mut catalog = KeywordCatalog::empty();
        catalog.extend(entries);
        catalog
    }

    /// Builtin table merged with the entries of `path`; override entries replace defaults whole.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut catalog = KeywordCatalog::builtin();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            catalog.merge_str(&path.display().to_string(), &text)?;
        }
        Ok(catalog)
    }

    pub fn merge_str(&mut self, source_name: &str, text: &str) -> Result<(), ConfigError> {
        let entries = parse_catalog(source_name, text)?;
        self.extend(entries);
        Ok(())
    }

    fn extend(&mut self, entries: Vec<CatalogEntry>) {
        for e in entries {
            self.entries.insert(normalize_name(&e.name), e);
        }
    }

    pub fn insert(&mut self, entry: CatalogEntry) {
        self.entries.insert(normalize_name(&entry.name), entry);
    }

    pub fn get(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries.get(&normalize_name(name))
    }

    /// Lookup that also accepts a `Library.Keyword` qualified name.
    pub fn lookup(&self, name: &str) -> Option<&CatalogEntry> {
        if let Some(e) = self.get(name) {
            return Some(e);
        }
        let (_, bare) = name.rsplit_once('.')?;
        if bare.trim().is_empty() {
            return None;
        }
        self.get(bare)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.values()
    }
}

pub fn parse_catalog(source_name: &str, text: &str) -> Result<Vec<CatalogEntry>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ConfigError::Syntax {
            source_name: source_name.to_string(),
            line: i + 1,
            message,
        };
        out.push(parse_entry(line).map_err(err)?);
    }
    Ok(out)
}

fn parse_entry(line: &str) -> Result<CatalogEntry, String> {
    let mut fields = line.split('|').map(str::trim);
    let name = fields.next().unwrap_or_default().to_string();
    if name.is_empty() {
        return Err("missing keyword name".into());
    }
    let category: Category = fields
        .next()
        .ok_or_else(|| format!("missing category for `{name}`"))?
        .parse()?;

    let mut flags = None::<BTreeSet<Flag>>;
    let mut expected = None;
    let mut locators = BTreeSet::new();
    let mut config = BTreeSet::new();
    for field in fields {
        if field.is_empty() {
            continue;
        }
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, found `{field}`"))?;
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "flags" => {
                let mut set = BTreeSet::new();
                for f in value.split(',').map(str::trim).filter(|f| !f.is_empty()) {
                    set.insert(f.parse::<Flag>()?);
                }
                flags = Some(set);
            }
            "expected" => {
                let v = ordinals(value)?;
                if v.len() != 1 {
                    return Err(format!("`expected` takes one ordinal, found `{value}`"));
                }
                expected = v.into_iter().next();
            }
            "locators" | "locator" => locators = ordinals(value)?,
            "config" | "configuration" => config = ordinals(value)?,
            other => return Err(format!("unknown field `{other}`")),
        }
    }

    let flags = flags.unwrap_or_else(|| {
        if category == Category::Interaction {
            BTreeSet::from([Flag::Action])
        } else {
            BTreeSet::new()
        }
    });
    if flags.contains(&Flag::Sleep) && category != Category::Sync {
        return Err(format!("`sleep` flag requires SYNC, `{name}` is {category}"));
    }
    if flags.contains(&Flag::Log) && category != Category::Logging {
        return Err(format!("`log` flag requires LOGGING, `{name}` is {category}"));
    }
    Ok(CatalogEntry {
        name,
        category,
        flags,
        expected,
        locators,
        config,
    })
}

fn ordinals(value: &str) -> Result<BTreeSet<usize>, String> {
    let mut out = BTreeSet::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let n: usize = part
            .parse()
            .map_err(|_| format!("bad ordinal `{part}`"))?;
        if n == 0 {
            return Err("ordinals start at 1".into());
        }
        out.insert(n);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_roles() {
        let c = KeywordCatalog::builtin();
        let eq = c.get("should be equal").unwrap();
        assert_eq!(eq.category, Category::Assertion);
        assert_eq!(eq.expected, Some(2));
        assert_eq!(c.get("Title Should Be").unwrap().expected, Some(1));
        let open = c.get("Open Browser").unwrap();
        assert!(open.has(Flag::Configuration) && open.has(Flag::Action));
        assert_eq!(open.config, BTreeSet::from([1, 2]));
        assert_eq!(c.get("Input Text").unwrap().locators, BTreeSet::from([1]));
        assert!(c.get("Click Button").unwrap().has(Flag::Action));
        assert!(c.get("Sleep").unwrap().has(Flag::Sleep));
        assert!(c.get("Log").unwrap().has(Flag::Log));
        assert!(!c.get("Wait Until Element Is Visible").unwrap().has(Flag::Sleep));
    }

    #[test]
    fn empty_override_is_identity() {
        let mut c = KeywordCatalog::builtin();
        c.merge_str("o", "").unwrap();
        c.merge_str("o", "# only comments\n\n").unwrap();
        assert_eq!(c, KeywordCatalog::builtin());
    }

    #[test]
    fn override_replaces_entry() {
        let mut c = KeywordCatalog::builtin();
        let before = c.len();
        c.merge_str("o", "sleep | LOGGING | flags=log\n").unwrap();
        let e = c.get("Sleep").unwrap();
        assert_eq!(e.category, Category::Logging);
        assert_eq!(e.flags, BTreeSet::from([Flag::Log]));
        assert_eq!(c.len(), before);
    }

    #[test]
    fn qualified_lookup() {
        let c = KeywordCatalog::builtin();
        assert_eq!(c.lookup("SeleniumLibrary.Click Button").unwrap().name, "Click Button");
        assert!(c.lookup("Nope.").is_none());
    }

    #[test]
    fn rejects_bad_lines() {
        for bad in [
            "X | WIDGET",
            "X | SYNC | expected=0",
            "X | SYNC | expected=a",
            "X | GETTER | flags=sleep",
            "X | SYNC | flags=log",
            "X | SYNC | bogus=1",
            "X | SYNC | flags=fast",
            " | SYNC",
            "X",
        ] {
            let err = parse_catalog("f", &format!("# c\n{bad}\n")).unwrap_err();
            match err {
                ConfigError::Syntax { line, .. } => assert_eq!(line, 2, "{bad}"),
                other => panic!("{other}"),
            }
        }
    }

    #[test]
    fn builtin_names_are_unique() {
        let raw = parse_catalog("<builtin>", DEFAULT_CATALOG).unwrap();
        assert_eq!(raw.len(), KeywordCatalog::builtin().len());
    }
}
