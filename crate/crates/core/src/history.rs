//! Version sequences from git repositories or folders of snapshots.
//!
//! A root containing `.git` is read through the `git` command line: first-parent history,
//! file contents straight from the object store, the working tree is never touched. Any
//! other directory is a folder of snapshots, one version per subdirectory in name order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Arc, Mutex};

use serde::Serialize;
use thiserror::Error;

use crate::calltree::{build_snapshot, Snapshot, SnapshotError};
use crate::catalog::KeywordCatalog;
use crate::parser::{has_accepted_extension, parse_bytes, Diagnostic, Span, SuiteAst};

const CACHE_SIZE: usize = 4;

#[derive(Debug, Error)]
pub enum HistoryError {
    #[error("cannot read {}: {reason}", path.display())]
    RepoUnreadable { path: PathBuf, reason: String },
    #[error("no version of {} touches a test file", path.display())]
    NoSuitVersions { path: PathBuf },
    #[error("cannot check out {version}: {reason}")]
    CheckoutFailure { version: String, reason: String },
    #[error("{0} is not part of this history")]
    UnknownRecord(String),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VersionRecord {
    pub id: String,
    /// Seconds since the epoch; 0 for snapshot folders.
    pub timestamp: i64,
    pub author: String,
    pub changed_paths: BTreeSet<String>,
    /// The previous record of the history, if any.
    pub parent: Option<String>,
}

#[derive(Debug, Clone)]
enum Backend {
    Git(PathBuf),
    Folders(PathBuf),
}

#[derive(Debug, Clone)]
struct Root {
    /// Path prefix given to this root's files when several roots form one project.
    prefix: String,
    backend: Backend,
}

/// The test-modifying versions of one project, oldest first.
pub struct ProjectHistory {
    pub project: String,
    pub records: Vec<VersionRecord>,
    roots: Vec<Root>,
    /// Native version of every root in effect at each record.
    states: Vec<Vec<Option<String>>>,
    index: HashMap<String, usize>,
    extensions: Vec<String>,
    catalog: Arc<KeywordCatalog>,
    cache: Mutex<VecDeque<(String, Arc<Snapshot>)>>,
}

impl std::fmt::Debug for ProjectHistory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProjectHistory")
            .field("project", &self.project)
            .field("records", &self.records.len())
            .finish()
    }
}

/// Walks one root; the project is named after its directory.
pub fn walk_repository(path: &Path, extensions: &[String]) -> Result<ProjectHistory, HistoryError> {
    walk_roots(&dir_name(path), &[path.to_path_buf()], extensions)
}

/// Walks several roots as one project, their files told apart by a directory prefix.
///
/// Versions of different roots are interleaved by timestamp.
pub fn walk_roots(project: &str, paths: &[PathBuf], extensions: &[String]) -> Result<ProjectHistory, HistoryError> {
    let prefixes = root_prefixes(paths);
    let mut roots = Vec::new();
    let mut walks = Vec::new();
    for (path, prefix) in paths.iter().zip(prefixes) {
        let backend = backend_of(path)?;
        let records = match &backend {
            Backend::Git(repo) => git_log(repo, extensions)?,
            Backend::Folders(dir) => folder_log(dir, extensions)?,
        };
        if records.is_empty() {
            return Err(HistoryError::NoSuitVersions { path: path.clone() });
        }
        roots.push(Root { prefix, backend });
        walks.push(records);
    }
    if roots.is_empty() {
        return Err(HistoryError::NoSuitVersions { path: PathBuf::from(project) });
    }

    let multi = roots.len() > 1;
    let mut heads = vec![0usize; walks.len()];
    let mut current: Vec<Option<String>> = vec![None; walks.len()];
    let mut records: Vec<VersionRecord> = Vec::new();
    let mut states = Vec::new();
    loop {
        let next = (0..walks.len())
            .filter(|&r| heads[r] < walks[r].len())
            .min_by_key(|&r| (walks[r][heads[r]].timestamp, r));
        let Some(r) = next else { break };
        let mut rec = walks[r][heads[r]].clone();
        heads[r] += 1;
        current[r] = Some(rec.id.clone());
        if multi {
            rec.id = format!("{}@{}", roots[r].prefix, rec.id);
            rec.changed_paths = rec
                .changed_paths
                .iter()
                .map(|p| format!("{}/{p}", roots[r].prefix))
                .collect();
        }
        rec.parent = records.last().map(|p| p.id.clone());
        records.push(rec);
        states.push(current.clone());
    }
    let index = records.iter().enumerate().map(|(i, r)| (r.id.clone(), i)).collect();
    Ok(ProjectHistory {
        project: project.to_string(),
        records,
        roots,
        states,
        index,
        extensions: extensions.to_vec(),
        catalog: Arc::new(KeywordCatalog::builtin()),
        cache: Mutex::new(VecDeque::new()),
    })
}

impl ProjectHistory {
    /// Catalog used by `materialize`; clears cached snapshots.
    pub fn with_catalog(mut self, catalog: Arc<KeywordCatalog>) -> Self {
        self.catalog = catalog;
        self.cache.get_mut().unwrap().clear();
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Resolved snapshot of a record, read without touching any working tree.
    pub fn materialize(&self, record: &VersionRecord) -> Result<Arc<Snapshot>, HistoryError> {
        let &i = self
            .index
            .get(&record.id)
            .ok_or_else(|| HistoryError::UnknownRecord(record.id.clone()))?;
        if let Some((_, s)) = self.cache.lock().unwrap().iter().find(|(id, _)| *id == record.id) {
            return Ok(Arc::clone(s));
        }
        let mut files = Vec::new();
        for (root, version) in self.roots.iter().zip(&self.states[i]) {
            let Some(version) = version else { continue };
            let read = match &root.backend {
                Backend::Git(repo) => git_files(repo, version, &self.extensions),
                Backend::Folders(dir) => read_tree(&dir.join(version), &self.extensions).map_err(|reason| {
                    HistoryError::CheckoutFailure {
                        version: version.clone(),
                        reason,
                    }
                }),
            }?;
            files.extend(read.into_iter().map(|(p, b)| (join_prefix(&root.prefix, &p), b)));
        }
        let snapshot = Arc::new(assemble(&record.id, files, Arc::clone(&self.catalog))?);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() == CACHE_SIZE {
            cache.pop_front();
        }
        cache.push_back((record.id.clone(), Arc::clone(&snapshot)));
        Ok(snapshot)
    }
}

/// The current on-disk state of one or more roots.
pub fn load_current(
    paths: &[PathBuf],
    extensions: &[String],
    catalog: Arc<KeywordCatalog>,
) -> Result<Snapshot, HistoryError> {
    let mut files = Vec::new();
    for (path, prefix) in paths.iter().zip(root_prefixes(paths)) {
        if !path.is_dir() {
            return Err(HistoryError::RepoUnreadable {
                path: path.clone(),
                reason: "not a directory".into(),
            });
        }
        let read = read_tree(path, extensions).map_err(|reason| HistoryError::RepoUnreadable {
            path: path.clone(),
            reason,
        })?;
        files.extend(read.into_iter().map(|(p, b)| (join_prefix(&prefix, &p), b)));
    }
    assemble("working-tree", files, catalog)
}

/// Parses raw files into a snapshot; undecodable files become diagnostics.
pub fn assemble(
    version: &str,
    files: Vec<(String, Vec<u8>)>,
    catalog: Arc<KeywordCatalog>,
) -> Result<Snapshot, HistoryError> {
    let mut asts: Vec<SuiteAst> = Vec::new();
    let mut diagnostics = Vec::new();
    for (path, bytes) in files {
        match parse_bytes(&path, bytes) {
            Ok(ast) => asts.push(ast),
            Err(e) => {
                log::warn!("{version}: {e}");
                diagnostics.push(Diagnostic {
                    path,
                    span: Span::default(),
                    line: 0,
                    message: e.to_string(),
                });
            }
        }
    }
    let mut snapshot = build_snapshot(version, asts, catalog)?;
    snapshot.diagnostics.extend(diagnostics);
    Ok(snapshot)
}

fn dir_name(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .as_deref()
        .unwrap_or(path)
        .file_name()
        .map_or_else(|| "project".to_string(), |n| n.to_string_lossy().into_owned())
}

/// Empty for a single root, otherwise unique directory names.
fn root_prefixes(paths: &[PathBuf]) -> Vec<String> {
    if paths.len() <= 1 {
        return vec![String::new(); paths.len()];
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    paths
        .iter()
        .map(|p| {
            let name = dir_name(p);
            let n = seen.entry(name.clone()).or_default();
            *n += 1;
            if *n == 1 {
                name
            } else {
                format!("{name}-{n}")
            }
        })
        .collect()
}

fn join_prefix(prefix: &str, path: &str) -> String {
    if prefix.is_empty() {
        path.to_string()
    } else {
        format!("{prefix}/{path}")
    }
}

fn backend_of(path: &Path) -> Result<Backend, HistoryError> {
    if !path.is_dir() {
        return Err(HistoryError::RepoUnreadable {
            path: path.to_path_buf(),
            reason: "not a directory".into(),
        });
    }
    if path.join(".git").exists() {
        Ok(Backend::Git(path.to_path_buf()))
    } else {
        Ok(Backend::Folders(path.to_path_buf()))
    }
}

/// Files under `dir` with an accepted extension, as `/`-separated relative paths.
fn read_tree(dir: &Path, extensions: &[String]) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = Vec::new();
    let walker = walkdir::WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walker {
        let entry = entry.map_err(|e| e.to_string())?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry
            .path()
            .strip_prefix(dir)
            .expect("walkdir yields children")
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if has_accepted_extension(&rel, extensions) {
            let bytes = std::fs::read(entry.path()).map_err(|e| format!("{rel}: {e}"))?;
            out.push((rel, bytes));
        }
    }
    Ok(out)
}

fn folder_log(dir: &Path, extensions: &[String]) -> Result<Vec<VersionRecord>, HistoryError> {
    let unreadable = |reason: String| HistoryError::RepoUnreadable {
        path: dir.to_path_buf(),
        reason,
    };
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| unreadable(e.to_string()))?
        .filter_map(Result::ok)
        .filter(|e| e.file_type().map(|t| t.is_dir()).unwrap_or(false))
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| !n.starts_with('.'))
        .collect();
    names.sort();
    let mut records = Vec::new();
    let mut previous: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for name in names {
        let files: BTreeMap<String, Vec<u8>> = read_tree(&dir.join(&name), extensions)
            .map_err(unreadable)?
            .into_iter()
            .collect();
        let changed: BTreeSet<String> = files
            .iter()
            .filter(|(p, b)| previous.get(*p) != Some(b))
            .map(|(p, _)| p.clone())
            .chain(previous.keys().filter(|p| !files.contains_key(*p)).cloned())
            .collect();
        if !changed.is_empty() {
            records.push(VersionRecord {
                id: name,
                timestamp: 0,
                author: String::new(),
                changed_paths: changed,
                parent: None,
            });
        }
        previous = files;
    }
    Ok(records)
}

fn git(repo: &Path) -> Command {
    let mut cmd = Command::new("git");
    cmd.arg("-C")
        .arg(repo)
        .args(["-c", "core.quotepath=off"])
        .env("GIT_OPTIONAL_LOCKS", "0")
        .stdin(Stdio::null());
    cmd
}

fn run_git(repo: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = git(repo).args(args).output().map_err(|e| format!("cannot run git: {e}"))?;
    if out.status.success() {
        Ok(out.stdout)
    } else {
        Err(String::from_utf8_lossy(&out.stderr).trim().to_string())
    }
}

fn git_log(repo: &Path, extensions: &[String]) -> Result<Vec<VersionRecord>, HistoryError> {
    let unreadable = |reason: String| HistoryError::RepoUnreadable {
        path: repo.to_path_buf(),
        reason,
    };
    run_git(repo, &["rev-parse", "--git-dir"]).map_err(unreadable)?;
    if run_git(repo, &["rev-parse", "--verify", "--quiet", "HEAD"]).is_err() {
        // repository without commits
        return Ok(Vec::new());
    }
    let raw = run_git(
        repo,
        &[
            "log",
            "--first-parent",
            "--diff-merges=first-parent",
            "--reverse",
            "--no-renames",
            "--name-only",
            "--format=%x1e%H%x1f%ct%x1f%an",
            "HEAD",
        ],
    )
    .map_err(unreadable)?;
    let text = String::from_utf8_lossy(&raw);
    let mut records = Vec::new();
    for chunk in text.split('\u{1e}').filter(|c| !c.trim().is_empty()) {
        let mut lines = chunk.lines();
        let header = lines.next().unwrap_or_default();
        let mut fields = header.split('\u{1f}');
        let (Some(id), Some(ts), Some(author)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(unreadable(format!("unexpected log line `{header}`")));
        };
        let changed: BTreeSet<String> = lines
            .map(str::trim_end)
            .filter(|l| !l.is_empty() && has_accepted_extension(l, extensions))
            .map(str::to_string)
            .collect();
        if changed.is_empty() {
            continue;
        }
        records.push(VersionRecord {
            id: id.to_string(),
            timestamp: ts.parse().unwrap_or(0),
            author: author.to_string(),
            changed_paths: changed,
            parent: None,
        });
    }
    Ok(records)
}

/// Matching blobs of one commit, read through a single `cat-file --batch` process.
fn git_files(repo: &Path, commit: &str, extensions: &[String]) -> Result<Vec<(String, Vec<u8>)>, HistoryError> {
    let failure = |reason: String| HistoryError::CheckoutFailure {
        version: commit.to_string(),
        reason,
    };
    let listing = run_git(repo, &["ls-tree", "-r", "-z", "--full-tree", commit]).map_err(failure)?;
    let mut entries = Vec::new();
    for entry in listing.split(|b| *b == 0).filter(|e| !e.is_empty()) {
        let entry = String::from_utf8_lossy(entry);
        let Some((meta, path)) = entry.split_once('\t') else { continue };
        let meta: Vec<&str> = meta.split(' ').collect();
        if meta.get(1) == Some(&"blob") && has_accepted_extension(path, extensions) {
            entries.push((path.to_string(), meta[2].to_string()));
        }
    }
    if entries.is_empty() {
        return Ok(Vec::new());
    }

    let mut child = git(repo)
        .args(["cat-file", "--batch"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| failure(e.to_string()))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let request: String = entries.iter().map(|(_, oid)| format!("{oid}\n")).collect();
    let writer = std::thread::spawn(move || stdin.write_all(request.as_bytes()));
    let mut stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut files = Vec::with_capacity(entries.len());
    for (path, oid) in entries {
        let mut header = String::new();
        stdout.read_line(&mut header).map_err(|e| failure(e.to_string()))?;
        let size: usize = header
            .split(' ')
            .nth(2)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| failure(format!("object {oid}: `{}`", header.trim())))?;
        let mut bytes = vec![0; size + 1];
        stdout.read_exact(&mut bytes).map_err(|e| failure(e.to_string()))?;
        bytes.pop();
        files.push((path, bytes));
    }
    drop(stdout);
    writer
        .join()
        .expect("writer thread")
        .map_err(|e| failure(e.to_string()))?;
    child.wait().map_err(|e| failure(e.to_string()))?;
    Ok(files)
}
