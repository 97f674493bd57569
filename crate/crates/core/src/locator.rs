//! Element-chain length of GUI locators.
//!
//! XPath counts location steps, CSS counts compound selectors, and strategy locators such as
//! `id=login` address a single element.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocatorKind {
    XPath,
    Css,
    Simple,
}

pub fn classify(locator: &str) -> (LocatorKind, &str) {
    let s = locator.trim();
    if let Some((strategy, rest)) = split_strategy(s) {
        return match strategy.as_str() {
            "xpath" => (LocatorKind::XPath, rest),
            "css" | "jquery" | "sizzle" => (LocatorKind::Css, rest),
            _ => (LocatorKind::Simple, rest),
        };
    }
    if s.starts_with('/') || s.starts_with("(/") || s.starts_with("./") {
        (LocatorKind::XPath, s)
    } else {
        (LocatorKind::Simple, s)
    }
}

fn split_strategy(s: &str) -> Option<(String, &str)> {
    const STRATEGIES: &[&str] = &[
        "id", "name", "identifier", "xpath", "css", "class", "tag", "link", "partial link", "dom",
        "jquery", "sizzle", "text", "data", "default", "element", "scLocator",
    ];
    let idx = s.find(['=', ':'])?;
    let head = s[..idx].trim();
    STRATEGIES
        .iter()
        .find(|st| st.eq_ignore_ascii_case(head))
        .map(|st| (st.to_ascii_lowercase(), s[idx + 1..].trim()))
}

/// Number of GUI elements traversed to reach the target.
pub fn element_count(locator: &str) -> usize {
    match classify(locator) {
        (LocatorKind::XPath, body) => xpath_steps(body).max(1),
        (LocatorKind::Css, body) => css_compounds(body).max(1),
        (LocatorKind::Simple, _) => 1,
    }
}

/// Splits `s` on `sep` at nesting depth zero, outside quotes.
fn split_top(s: &str, sep: impl Fn(char) -> bool) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            _ if depth == 0 && sep(c) => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

fn xpath_steps(expr: &str) -> usize {
    let alternatives = split_top(expr, |c| c == '|');
    if alternatives.len() > 1 {
        return alternatives.into_iter().map(xpath_steps).max().unwrap_or(1);
    }
    let mut e = expr.trim();
    // `(//a/b)[2]` selects among the grouped path's results
    if e.starts_with('(') {
        if let Some(close) = matching_paren(e) {
            let inner = &e[1..close];
            let rest = e[close + 1..].trim();
            let tail = if rest.starts_with('[') {
                let after = skip_predicates(rest);
                after.trim()
            } else {
                rest
            };
            return xpath_steps(inner) + xpath_steps(tail.trim_start_matches('/'));
        }
    }
    e = e.trim_start_matches("./");
    split_top(e, |c| c == '/')
        .into_iter()
        .map(str::trim)
        .filter(|step| !step.is_empty() && *step != ".")
        .count()
}

fn matching_paren(s: &str) -> Option<usize> {
    let mut depth = 0;
    let mut quote = None;
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '\'' | '"' => quote = Some(c),
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

fn skip_predicates(mut s: &str) -> &str {
    while s.starts_with('[') {
        let mut depth = 0;
        let mut end = s.len();
        for (i, c) in s.char_indices() {
            match c {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        end = i + 1;
                        break;
                    }
                }
                _ => {}
            }
        }
        s = &s[end..];
    }
    s
}

fn css_compounds(selector: &str) -> usize {
    let groups = split_top(selector, |c| c == ',');
    if groups.len() > 1 {
        return groups.into_iter().map(css_compounds).max().unwrap_or(1);
    }
    split_top(selector, |c| c.is_whitespace() || matches!(c, '>' | '+' | '~'))
        .into_iter()
        .filter(|part| !part.trim().is_empty())
        .count()
}
