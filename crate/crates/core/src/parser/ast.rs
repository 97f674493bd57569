use serde::Serialize;

/// Half-open byte range into the owning file's content.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn cover(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

/// One-based line and column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIndex {
    line_starts: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &str) -> Self {
        let mut line_starts = vec![0];
        for (i, b) in text.bytes().enumerate() {
            if b == b'\n' {
                line_starts.push(i + 1);
            }
        }
        LineIndex {
            line_starts,
            len: text.len(),
        }
    }

    pub fn position(&self, offset: usize) -> Position {
        let offset = offset.min(self.len);
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Position {
            line: line + 1,
            column: offset - self.line_starts[line] + 1,
        }
    }

    pub fn line_count(&self) -> usize {
        self.line_starts.len()
    }
}

/// A test source file. `path` is relative to the snapshot root and uses `/`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
    line_index: LineIndex,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        let content = content.into();
        let content = match content.strip_prefix('\u{feff}') {
            Some(rest) => rest.to_string(),
            None => content,
        };
        let line_index = LineIndex::new(&content);
        SourceFile {
            path: path.into().replace('\\', "/"),
            content,
            line_index,
        }
    }

    pub fn line_index(&self) -> &LineIndex {
        &self.line_index
    }

    pub fn position(&self, offset: usize) -> Position {
        self.line_index.position(offset)
    }

    pub fn text(&self, span: Span) -> &str {
        &self.content[span.start..span.end]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VariableRef {
    /// One of `$`, `@`, `&`, `%`.
    pub sigil: char,
    /// Text between the braces, verbatim.
    pub name: String,
    /// Trailing item accessors such as `[0]`, verbatim without brackets.
    pub items: Vec<String>,
}

impl VariableRef {
    pub fn normalized(&self) -> String {
        crate::parser::normalize_name(&self.name)
    }

    /// Name before any extended-syntax attribute access (`${obj.attr}` -> `obj`).
    pub fn base_normalized(&self) -> String {
        let base = self.name.split('.').next().unwrap_or(&self.name);
        crate::parser::normalize_name(base)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum TokenPart {
    Literal(String),
    Variable(VariableRef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TokenShape {
    Literal,
    Variable,
    Composite,
}

/// One argument cell, decomposed into literal and variable parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArgumentToken {
    pub text: String,
    pub span: Span,
    pub parts: Vec<TokenPart>,
}

impl ArgumentToken {
    pub fn new(text: impl Into<String>, span: Span) -> Self {
        let text = text.into();
        let parts = crate::parser::tokenize_value(&text);
        ArgumentToken { text, span, parts }
    }

    pub fn shape(&self) -> TokenShape {
        let vars = self
            .parts
            .iter()
            .filter(|p| matches!(p, TokenPart::Variable(_)))
            .count();
        if vars == 0 {
            TokenShape::Literal
        } else if vars == 1 && self.parts.len() == 1 {
            TokenShape::Variable
        } else {
            TokenShape::Composite
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &VariableRef> {
        self.parts.iter().filter_map(|p| match p {
            TokenPart::Variable(v) => Some(v),
            TokenPart::Literal(_) => None,
        })
    }

    /// Literal content with escapes removed; `None` when the token holds variables.
    pub fn literal_value(&self) -> Option<String> {
        let mut out = String::new();
        for p in &self.parts {
            match p {
                TokenPart::Literal(s) => out.push_str(s),
                TokenPart::Variable(_) => return None,
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallStatement {
    pub callee: String,
    pub callee_span: Span,
    pub arguments: Vec<ArgumentToken>,
    /// Variables assigned from the return value, normalized names without sigil.
    pub assigned: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ControlKind {
    If,
    For,
    While,
    Try,
}

impl ControlKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ControlKind::If => "IF",
            ControlKind::For => "FOR",
            ControlKind::While => "WHILE",
            ControlKind::Try => "TRY",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    /// `IF`, `ELSE IF`, `ELSE`, `FOR`, `WHILE`, `TRY`, `EXCEPT`, `FINALLY`.
    pub label: String,
    pub condition: Vec<ArgumentToken>,
    pub body: Vec<Statement>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ControlBlock {
    pub kind: ControlKind,
    pub branches: Vec<Branch>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Statement {
    Call(CallStatement),
    Control(ControlBlock),
}

impl Statement {
    pub fn span(&self) -> Span {
        match self {
            Statement::Call(c) => c.span,
            Statement::Control(c) => c.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Setting {
    pub name: String,
    pub values: Vec<ArgumentToken>,
    pub span: Span,
    /// Populated for setup/teardown settings.
    pub fixture: Option<CallStatement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableDef {
    pub sigil: char,
    pub name: String,
    pub values: Vec<ArgumentToken>,
    pub span: Span,
}

impl VariableDef {
    pub fn normalized(&self) -> String {
        crate::parser::normalize_name(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KeywordParam {
    pub sigil: char,
    pub name: String,
    pub default: Option<ArgumentToken>,
}

impl KeywordParam {
    pub fn normalized(&self) -> String {
        crate::parser::normalize_name(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestCaseAst {
    pub name: String,
    pub name_span: Span,
    pub span: Span,
    pub documentation: Option<String>,
    pub tags: Vec<String>,
    pub setup: Option<CallStatement>,
    pub teardown: Option<CallStatement>,
    /// `[Setup]`/`[Teardown]` present, even as NONE; suppresses the file default.
    pub setup_declared: bool,
    pub teardown_declared: bool,
    pub template: Option<String>,
    pub body: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UserKeywordAst {
    pub name: String,
    pub name_span: Span,
    pub span: Span,
    pub arguments: Vec<KeywordParam>,
    pub documentation: Option<String>,
    pub teardown: Option<CallStatement>,
    pub body: Vec<Statement>,
}

impl UserKeywordAst {
    /// Embedded-argument placeholders in the keyword name.
    pub fn embedded_arguments(&self) -> Vec<VariableRef> {
        crate::parser::tokenize_value(&self.name)
            .into_iter()
            .filter_map(|p| match p {
                TokenPart::Variable(v) => Some(v),
                TokenPart::Literal(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SectionKind {
    Settings,
    Variables,
    TestCases,
    Keywords,
    Comments,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub path: String,
    pub span: Span,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteAst {
    pub path: String,
    /// Section headers in source order.
    pub sections: Vec<SectionKind>,
    pub settings: Vec<Setting>,
    pub variables: Vec<VariableDef>,
    pub test_cases: Vec<TestCaseAst>,
    pub keywords: Vec<UserKeywordAst>,
    /// One entry per skipped line or region.
    pub diagnostics: Vec<Diagnostic>,
    /// Non-fatal recoveries that did not skip input (e.g. a block closed at end of definition).
    pub warnings: Vec<Diagnostic>,
    pub content_len: usize,
    #[serde(skip)]
    pub line_index: LineIndex,
}

impl SuiteAst {
    pub fn setting(&self, name: &str) -> Option<&Setting> {
        let key = crate::parser::normalize_name(name);
        self.settings
            .iter()
            .rev()
            .find(|s| crate::parser::normalize_name(&s.name) == key)
    }

    pub fn is_resource(&self) -> bool {
        self.test_cases.is_empty()
    }

    pub fn line(&self, offset: usize) -> usize {
        self.line_index.position(offset).line
    }
}
