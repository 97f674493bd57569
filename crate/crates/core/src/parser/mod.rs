//! Parser for the space-separated plain-text suite format.
//!
//! The parser is total over decodable text: lines it cannot place are skipped and
//! reported as diagnostics, never as errors.

mod ast;
mod lexer;

use std::path::Path;

use thiserror::Error;

pub use ast::*;
use lexer::{Cell, Line, Row};

pub const DEFAULT_EXTENSIONS: &[&str] = &[".robot", ".txt", ".resource"];

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8 (invalid byte at offset {offset})")]
    Encoding { path: String, offset: usize },
}

/// Case-, space- and underscore-insensitive form used for keyword and variable lookup.
pub fn normalize_name(name: &str) -> String {
    name.chars()
        .filter(|c| *c != ' ' && *c != '_' && *c != '\t')
        .flat_map(char::to_lowercase)
        .collect()
}

const BDD_PREFIXES: &[&str] = &["given", "when", "then", "and", "but"];

/// Removes one leading Given/When/Then/And/But word.
pub fn strip_bdd_prefix(step: &str) -> &str {
    let trimmed = step.trim_start();
    let Some((first, rest)) = trimmed.split_once(' ') else {
        return step;
    };
    let rest = rest.trim_start();
    if rest.is_empty() {
        return step;
    }
    if BDD_PREFIXES.iter().any(|p| first.eq_ignore_ascii_case(p)) {
        rest
    } else {
        step
    }
}

pub fn has_bdd_prefix(step: &str) -> bool {
    strip_bdd_prefix(step).len() != step.len()
}

/// Splits a cell into literal text and `${...}`-style variable references.
pub fn tokenize_value(text: &str) -> Vec<TokenPart> {
    let chars: Vec<char> = text.chars().collect();
    let mut parts = Vec::new();
    let mut literal = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' && i + 1 < chars.len() {
            let next = chars[i + 1];
            if matches!(next, '$' | '@' | '&' | '%' | '{' | '}' | '\\' | '#' | '=' | ' ') {
                literal.push(next);
            } else {
                literal.push(c);
                literal.push(next);
            }
            i += 2;
            continue;
        }
        if matches!(c, '$' | '@' | '&' | '%') && chars.get(i + 1) == Some(&'{') {
            if let Some(close) = matching_brace(&chars, i + 1) {
                let name: String = chars[i + 2..close].iter().collect();
                let mut j = close + 1;
                let mut items = Vec::new();
                while chars.get(j) == Some(&'[') {
                    match chars[j..].iter().position(|&ch| ch == ']') {
                        Some(rel) => {
                            items.push(chars[j + 1..j + rel].iter().collect());
                            j += rel + 1;
                        }
                        None => break,
                    }
                }
                if !name.is_empty() {
                    if !literal.is_empty() {
                        parts.push(TokenPart::Literal(std::mem::take(&mut literal)));
                    }
                    parts.push(TokenPart::Variable(VariableRef {
                        sigil: c,
                        name,
                        items,
                    }));
                    i = j;
                    continue;
                }
            }
        }
        literal.push(c);
        i += 1;
    }
    if !literal.is_empty() || parts.is_empty() {
        parts.push(TokenPart::Literal(literal));
    }
    parts
}

fn matching_brace(chars: &[char], open: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = open;
    while i < chars.len() {
        match chars[i] {
            '\\' => i += 1,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// A cell holding exactly one variable, optionally followed by `=`: the assignment form.
fn assignment_target(cell: &str) -> Option<VariableRef> {
    let trimmed = cell.trim_end();
    let body = trimmed.strip_suffix('=').unwrap_or(trimmed).trim_end();
    if !body.starts_with(['$', '@', '&']) {
        return None;
    }
    match tokenize_value(body).as_slice() {
        [TokenPart::Variable(v)] => Some(v.clone()),
        _ => None,
    }
}

pub fn has_accepted_extension(path: &str, extensions: &[String]) -> bool {
    let lower = path.to_ascii_lowercase();
    extensions
        .iter()
        .any(|ext| lower.ends_with(&ext.to_ascii_lowercase()))
}

/// Reads and parses `root/relative`.
pub fn parse_file(root: &Path, relative: &str) -> Result<SuiteAst, ParseError> {
    let bytes = std::fs::read(root.join(relative)).map_err(|source| ParseError::Io {
        path: relative.to_string(),
        source,
    })?;
    parse_bytes(relative, bytes)
}

pub fn parse_bytes(path: &str, bytes: Vec<u8>) -> Result<SuiteAst, ParseError> {
    let content = String::from_utf8(bytes).map_err(|e| ParseError::Encoding {
        path: path.to_string(),
        offset: e.utf8_error().valid_up_to(),
    })?;
    Ok(parse_source(&SourceFile::new(path, content)))
}

pub fn parse_str(path: &str, content: &str) -> SuiteAst {
    parse_source(&SourceFile::new(path, content))
}

pub fn parse_source(file: &SourceFile) -> SuiteAst {
    Parser::new(file).run()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Region {
    Preamble,
    Known(SectionKind),
    Unknown,
}

fn section_kind(title: &str) -> Option<SectionKind> {
    match normalize_name(title).as_str() {
        "settings" | "setting" | "settingtable" | "metadata" => Some(SectionKind::Settings),
        "variables" | "variable" => Some(SectionKind::Variables),
        "testcases" | "testcase" | "tasks" | "task" => Some(SectionKind::TestCases),
        "keywords" | "keyword" | "userkeywords" | "userkeyword" => Some(SectionKind::Keywords),
        "comments" | "comment" => Some(SectionKind::Comments),
        _ => None,
    }
}

struct Parser<'a> {
    file: &'a SourceFile,
    ast: SuiteAst,
}

struct Definition {
    name: Cell,
    rows: Vec<Row>,
    span: ast::Span,
}

impl<'a> Parser<'a> {
    fn new(file: &'a SourceFile) -> Self {
        Parser {
            file,
            ast: SuiteAst {
                path: file.path.clone(),
                sections: Vec::new(),
                settings: Vec::new(),
                variables: Vec::new(),
                test_cases: Vec::new(),
                keywords: Vec::new(),
                diagnostics: Vec::new(),
                warnings: Vec::new(),
                content_len: file.content.len(),
                line_index: file.line_index().clone(),
            },
        }
    }

    fn skip(&mut self, span: Span, message: impl Into<String>) {
        let line = self.file.position(span.start).line;
        self.ast.diagnostics.push(Diagnostic {
            path: self.file.path.clone(),
            span,
            line,
            message: message.into(),
        });
    }

    fn warn(&mut self, span: Span, message: impl Into<String>) {
        let line = self.file.position(span.start).line;
        self.ast.warnings.push(Diagnostic {
            path: self.file.path.clone(),
            span,
            line,
            message: message.into(),
        });
    }

    fn run(mut self) -> SuiteAst {
        let lower = self.file.path.to_ascii_lowercase();
        let head = self.file.content.trim_start();
        if lower.ends_with(".html") || lower.ends_with(".htm") || head.starts_with('<') {
            let span = Span::new(0, self.file.content.len());
            self.skip(span, "HTML suite format is not supported");
            return self.ast;
        }

        let mut region = Region::Preamble;
        let mut blocks: Vec<(SectionKind, Vec<Row>)> = Vec::new();
        let mut pipe_reported = false;

        for (line_no, (offset, text)) in lexer::physical_lines(&self.file.content).enumerate() {
            match lexer::classify(text, offset, line_no + 1) {
                Line::Blank => {}
                Line::Header { title, span, .. } => match section_kind(&title) {
                    Some(kind) => {
                        region = Region::Known(kind);
                        self.ast.sections.push(kind);
                        blocks.push((kind, Vec::new()));
                    }
                    None => {
                        region = Region::Unknown;
                        self.skip(span, format!("unrecognized section `{title}`"));
                    }
                },
                Line::Pipe { span, .. } => {
                    if matches!(region, Region::Unknown | Region::Known(SectionKind::Comments)) {
                        continue;
                    }
                    let msg = if pipe_reported {
                        "pipe-separated row skipped"
                    } else {
                        pipe_reported = true;
                        "pipe-separated format is not supported"
                    };
                    self.skip(span, msg);
                }
                Line::Row(row) => match region {
                    Region::Unknown | Region::Known(SectionKind::Comments) => {}
                    Region::Preamble => self.skip(row.span, "data before the first section header"),
                    Region::Known(_) => {
                        let rows = &mut blocks.last_mut().expect("section opened").1;
                        if row.cells[0].text == "..." {
                            match rows.last_mut() {
                                Some(prev) => {
                                    prev.cells.extend(row.cells.into_iter().skip(1));
                                    prev.span = prev.span.cover(row.span);
                                }
                                None => self.skip(row.span, "continuation without a preceding row"),
                            }
                        } else {
                            rows.push(row);
                        }
                    }
                },
            }
        }

        let mut test_template = None::<String>;
        for (kind, rows) in &blocks {
            if *kind == SectionKind::Settings {
                for row in rows {
                    if normalize_name(&row.cells[0].text) == "testtemplate"
                        || normalize_name(&row.cells[0].text) == "tasktemplate"
                    {
                        test_template = row.cells.get(1).map(|c| c.text.clone());
                    }
                }
            }
        }

        for (kind, rows) in blocks {
            match kind {
                SectionKind::Settings => self.settings(rows),
                SectionKind::Variables => self.variables(rows),
                SectionKind::TestCases => {
                    for def in self.definitions(rows) {
                        let test = self.test_case(def, test_template.as_deref());
                        self.ast.test_cases.push(test);
                    }
                }
                SectionKind::Keywords => {
                    for def in self.definitions(rows) {
                        let kw = self.keyword(def);
                        self.ast.keywords.push(kw);
                    }
                }
                SectionKind::Comments => {}
            }
        }
        self.ast
    }

    fn settings(&mut self, rows: Vec<Row>) {
        for row in rows {
            if row.indented {
                self.skip(row.span, "indented row in settings section");
                continue;
            }
            let name = row.cells[0].text.clone();
            let values: Vec<ArgumentToken> = row.cells[1..].iter().map(token).collect();
            let fixture = match normalize_name(&name).as_str() {
                "suitesetup" | "suiteteardown" | "testsetup" | "testteardown" | "tasksetup"
                | "taskteardown" => call_from_cells(&row.cells[1..], row.span),
                _ => None,
            };
            self.ast.settings.push(Setting {
                name,
                values,
                span: row.span,
                fixture,
            });
        }
    }

    fn variables(&mut self, rows: Vec<Row>) {
        for row in rows {
            let target = if row.indented {
                None
            } else {
                assignment_target(&row.cells[0].text)
            };
            match target {
                Some(var) => self.ast.variables.push(VariableDef {
                    sigil: var.sigil,
                    name: var.name,
                    values: row.cells[1..].iter().map(token).collect(),
                    span: row.span,
                }),
                None => self.skip(row.span, "expected a variable definition"),
            }
        }
    }

    fn definitions(&mut self, rows: Vec<Row>) -> Vec<Definition> {
        let mut defs: Vec<Definition> = Vec::new();
        for mut row in rows {
            if !row.indented {
                let name = row.cells.remove(0);
                let mut def = Definition {
                    span: row.span,
                    name,
                    rows: Vec::new(),
                };
                if !row.cells.is_empty() {
                    row.span = ast::Span::new(row.cells[0].span.start, row.span.end);
                    def.rows.push(row);
                }
                defs.push(def);
            } else {
                match defs.last_mut() {
                    Some(def) => {
                        def.span = def.span.cover(row.span);
                        def.rows.push(row);
                    }
                    None => self.skip(row.span, "statement outside of any definition"),
                }
            }
        }
        defs
    }

    fn test_case(&mut self, def: Definition, file_template: Option<&str>) -> TestCaseAst {
        let mut test = TestCaseAst {
            name: def.name.text.clone(),
            name_span: def.name.span,
            span: def.span,
            documentation: None,
            tags: Vec::new(),
            setup: None,
            teardown: None,
            setup_declared: false,
            teardown_declared: false,
            template: file_template.map(str::to_string),
            body: Vec::new(),
        };
        let mut body_rows = Vec::new();
        for row in def.rows {
            let first = row.cells[0].text.as_str();
            if let Some(setting) = bracket_setting(first) {
                let rest = &row.cells[1..];
                match setting.as_str() {
                    "documentation" => test.documentation = Some(join(rest)),
                    "tags" => test.tags = rest.iter().map(|c| c.text.clone()).collect(),
                    "setup" => {
                        test.setup = call_from_cells(rest, row.span);
                        test.setup_declared = true;
                    }
                    "teardown" => {
                        test.teardown = call_from_cells(rest, row.span);
                        test.teardown_declared = true;
                    }
                    "template" => {
                        test.template = rest
                            .first()
                            .map(|c| c.text.clone())
                            .filter(|t| !t.eq_ignore_ascii_case("NONE"))
                    }
                    "timeout" => {}
                    other => self.warn(row.span, format!("unknown test setting [{other}]")),
                }
            } else {
                body_rows.push(row);
            }
        }
        test.body = match test.template.clone() {
            Some(template) => self.template_rows(&template, body_rows),
            None => self.body(body_rows),
        };
        test
    }

    fn template_rows(&mut self, template: &str, rows: Vec<Row>) -> Vec<Statement> {
        rows.into_iter()
            .map(|row| {
                Statement::Call(CallStatement {
                    callee: template.to_string(),
                    callee_span: ast::Span::new(row.span.start, row.span.start),
                    arguments: row.cells.iter().map(token).collect(),
                    assigned: Vec::new(),
                    span: row.span,
                })
            })
            .collect()
    }

    fn keyword(&mut self, def: Definition) -> UserKeywordAst {
        let mut kw = UserKeywordAst {
            name: def.name.text.clone(),
            name_span: def.name.span,
            span: def.span,
            arguments: Vec::new(),
            documentation: None,
            teardown: None,
            body: Vec::new(),
        };
        let mut body_rows = Vec::new();
        for row in def.rows {
            let first = row.cells[0].text.as_str();
            if let Some(setting) = bracket_setting(first) {
                let rest = &row.cells[1..];
                match setting.as_str() {
                    "documentation" => kw.documentation = Some(join(rest)),
                    "arguments" => {
                        for cell in rest {
                            let (head, default) = match cell.text.split_once('=') {
                                Some((h, d)) => (h, Some(d)),
                                None => (cell.text.as_str(), None),
                            };
                            match tokenize_value(head.trim_end()).as_slice() {
                                [TokenPart::Variable(v)] => kw.arguments.push(KeywordParam {
                                    sigil: v.sigil,
                                    name: v.name.clone(),
                                    default: default.map(|d| {
                                        let start = cell.span.end - d.len();
                                        ArgumentToken::new(d, ast::Span::new(start, cell.span.end))
                                    }),
                                }),
                                _ => self.warn(cell.span, format!("invalid argument `{}`", cell.text)),
                            }
                        }
                    }
                    "teardown" => kw.teardown = call_from_cells(rest, row.span),
                    "tags" | "timeout" | "return" => {}
                    other => self.warn(row.span, format!("unknown keyword setting [{other}]")),
                }
            } else {
                body_rows.push(row);
            }
        }
        kw.body = self.body(body_rows);
        kw
    }

    fn body(&mut self, rows: Vec<Row>) -> Vec<Statement> {
        let mut top: Vec<Statement> = Vec::new();
        let mut stack: Vec<OpenBlock> = Vec::new();

        for mut row in rows {
            let first = row.cells[0].text.clone();

            // old-style `:FOR` bodies are rows prefixed by a lone backslash
            if stack.last().is_some_and(|b| b.old_style) && first != "\\" {
                let block = stack.pop().expect("checked");
                push(&mut stack, &mut top, block.close(row.span.start));
            }
            if first == "\\" {
                if stack.last().is_some_and(|b| b.old_style) {
                    row.cells.remove(0);
                    if row.cells.is_empty() {
                        continue;
                    }
                    row.span = ast::Span::new(row.cells[0].span.start, row.span.end);
                } else {
                    self.skip(row.span, "loop continuation outside of a `:FOR` loop");
                    continue;
                }
            }
            let upper = row.cells[0].text.trim().to_ascii_uppercase();

            match upper.as_str() {
                "IF" => stack.push(OpenBlock::new(ControlKind::If, "IF", &row, false)),
                "FOR" => stack.push(OpenBlock::new(ControlKind::For, "FOR", &row, false)),
                ":FOR" | ": FOR" => stack.push(OpenBlock::new(ControlKind::For, "FOR", &row, true)),
                "WHILE" => stack.push(OpenBlock::new(ControlKind::While, "WHILE", &row, false)),
                "TRY" => stack.push(OpenBlock::new(ControlKind::Try, "TRY", &row, false)),
                "ELSE IF" | "ELSE" | "EXCEPT" | "FINALLY" => {
                    let allowed = match stack.last() {
                        Some(b) if b.kind == ControlKind::If => upper.starts_with("ELSE"),
                        Some(b) if b.kind == ControlKind::Try => upper != "ELSE IF",
                        _ => false,
                    };
                    if allowed {
                        stack.last_mut().expect("checked").branch(&upper, &row);
                    } else {
                        self.skip(row.span, format!("`{upper}` outside of a matching block"));
                    }
                }
                "END" => match stack.pop() {
                    Some(block) => push(&mut stack, &mut top, block.close(row.span.end)),
                    None => self.skip(row.span, "`END` without an open block"),
                },
                "BREAK" | "CONTINUE" | "RETURN" => {}
                _ => {
                    let mut assigned = Vec::new();
                    let mut idx = 0;
                    while idx < row.cells.len() {
                        match assignment_target(&row.cells[idx].text) {
                            Some(v) => {
                                assigned.push(v.normalized());
                                idx += 1;
                            }
                            None => break,
                        }
                    }
                    if idx >= row.cells.len() {
                        self.skip(row.span, "assignment without a keyword call");
                        continue;
                    }
                    let callee = &row.cells[idx];
                    let stmt = Statement::Call(CallStatement {
                        callee: callee.text.clone(),
                        callee_span: callee.span,
                        arguments: row.cells[idx + 1..].iter().map(token).collect(),
                        assigned,
                        span: row.span,
                    });
                    push(&mut stack, &mut top, stmt);
                }
            }
        }
        while let Some(block) = stack.pop() {
            if !block.old_style {
                self.warn(block.start, format!("`{}` block closed at end of definition", block.kind.keyword()));
            }
            let end = block.last_end;
            push(&mut stack, &mut top, block.close(end));
        }
        top
    }
}

struct OpenBlock {
    kind: ControlKind,
    branches: Vec<Branch>,
    start: ast::Span,
    last_end: usize,
    old_style: bool,
}

impl OpenBlock {
    fn new(kind: ControlKind, label: &str, row: &Row, old_style: bool) -> Self {
        OpenBlock {
            kind,
            branches: vec![Branch {
                label: label.to_string(),
                condition: row.cells[1..].iter().map(token).collect(),
                body: Vec::new(),
                span: row.span,
            }],
            start: row.span,
            last_end: row.span.end,
            old_style,
        }
    }

    fn branch(&mut self, label: &str, row: &Row) {
        self.last_end = row.span.end;
        self.branches.push(Branch {
            label: label.to_string(),
            condition: row.cells[1..].iter().map(token).collect(),
            body: Vec::new(),
            span: row.span,
        });
    }

    fn close(mut self, end: usize) -> Statement {
        let end = end.max(self.last_end);
        let n = self.branches.len();
        for i in 0..n {
            let branch_end = if i + 1 < n {
                self.branches[i + 1].span.start
            } else {
                end
            };
            let b = &mut self.branches[i];
            let body_end = b.body.last().map(|s| s.span().end).unwrap_or(b.span.end);
            b.span = ast::Span::new(b.span.start, body_end.max(b.span.end).min(branch_end.max(b.span.end)));
        }
        Statement::Control(ControlBlock {
            kind: self.kind,
            span: ast::Span::new(self.start.start, end),
            branches: self.branches,
        })
    }
}

fn push(stack: &mut [OpenBlock], top: &mut Vec<Statement>, stmt: Statement) {
    match stack.last_mut() {
        Some(block) => {
            block.last_end = block.last_end.max(stmt.span().end);
            block
                .branches
                .last_mut()
                .expect("blocks always hold a branch")
                .body
                .push(stmt);
        }
        None => top.push(stmt),
    }
}

fn token(cell: &Cell) -> ArgumentToken {
    ArgumentToken::new(cell.text.clone(), cell.span)
}

fn join(cells: &[Cell]) -> String {
    cells.iter().map(|c| c.text.as_str()).collect::<Vec<_>>().join(" ")
}

fn bracket_setting(cell: &str) -> Option<String> {
    let inner = cell.strip_prefix('[')?.strip_suffix(']')?;
    Some(normalize_name(inner))
}

fn call_from_cells(cells: &[Cell], span: ast::Span) -> Option<CallStatement> {
    let (callee, args) = cells.split_first()?;
    if callee.text.eq_ignore_ascii_case("NONE") || callee.text.is_empty() {
        return None;
    }
    Some(CallStatement {
        callee: callee.text.clone(),
        callee_span: callee.span,
        arguments: args.iter().map(token).collect(),
        assigned: Vec::new(),
        span: ast::Span::new(callee.span.start, span.end),
    })
}
