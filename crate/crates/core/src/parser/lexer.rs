//! Splits space-separated plain-text suites into logical rows of cells.

use super::ast::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Cell {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Row {
    pub cells: Vec<Cell>,
    pub indented: bool,
    pub span: Span,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Line {
    Blank,
    Header { title: String, span: Span, line: usize },
    Pipe { span: Span, line: usize },
    Row(Row),
}

/// Physical lines with their byte offset, `\r` stripped.
pub(crate) fn physical_lines(content: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut offset = 0;
    content.split_inclusive('\n').map(move |raw| {
        let start = offset;
        offset += raw.len();
        let line = raw.strip_suffix('\n').unwrap_or(raw);
        let line = line.strip_suffix('\r').unwrap_or(line);
        (start, line)
    })
}

pub(crate) fn classify(text: &str, start: usize, line: usize) -> Line {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Line::Blank;
    }
    let span = Span::new(start, start + text.len());
    if !text.starts_with([' ', '\t']) && trimmed.starts_with('*') {
        let title = trimmed.trim_matches('*').trim().to_string();
        return Line::Header { title, span, line };
    }
    if trimmed.starts_with("| ") || trimmed == "|" {
        return Line::Pipe { span, line };
    }
    let indented = text.starts_with([' ', '\t']);
    let cells = split_cells(text, start);
    if cells.is_empty() {
        return Line::Blank;
    }
    let span = Span::new(cells[0].span.start, cells.last().map(|c| c.span.end).unwrap_or(start));
    Line::Row(Row {
        cells,
        indented,
        span,
        line,
    })
}

/// Cells are separated by a tab or two or more spaces. A cell starting with `#` comments out
/// the rest of the line.
pub(crate) fn split_cells(text: &str, base: usize) -> Vec<Cell> {
    let bytes = text.as_bytes();
    let mut cells = Vec::new();
    let mut i = 0;
    // leading indentation
    while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
        i += 1;
    }
    while i < bytes.len() {
        let start = i;
        let end;
        loop {
            if i >= bytes.len() {
                end = i;
                break;
            }
            let b = bytes[i];
            if b == b'\t' {
                end = i;
                break;
            }
            if b == b' ' && i + 1 < bytes.len() && (bytes[i + 1] == b' ' || bytes[i + 1] == b'\t') {
                end = i;
                break;
            }
            if b == b' ' && i + 1 == bytes.len() {
                end = i;
                break;
            }
            if b == b'\\' && i + 1 < bytes.len() && bytes[i + 1] != b' ' && bytes[i + 1] != b'\t' {
                // an escaped character never starts a separator
                i += 1 + utf8_len(bytes[i + 1]);
                continue;
            }
            i += utf8_len(b);
        }
        let cell = &text[start..end];
        if cell.starts_with('#') {
            break;
        }
        cells.push(Cell {
            text: cell.to_string(),
            span: Span::new(base + start, base + end),
        });
        while i < bytes.len() && (bytes[i] == b' ' || bytes[i] == b'\t') {
            i += 1;
        }
    }
    cells
}

fn utf8_len(first: u8) -> usize {
    match first {
        b if b < 0x80 => 1,
        b if b >> 5 == 0b110 => 2,
        b if b >> 4 == 0b1110 => 3,
        _ => 4,
    }
}
