use std::collections::{BTreeMap, BTreeSet};

use crate::parser::strip_bdd_prefix;

/// Language code to first-person subject pronouns, lowercase. Entries ending in an
/// apostrophe are elided forms that match as a prefix (`j'ai`).
pub type Lexicons = BTreeMap<String, BTreeSet<String>>;

pub fn default_lexicons() -> Lexicons {
    let set = |words: &[&str]| words.iter().map(|w| w.to_string()).collect::<BTreeSet<_>>();
    BTreeMap::from([
        ("en".to_string(), set(&["i", "i'm", "i've", "i'll", "i'd"])),
        ("fr".to_string(), set(&["je", "j'"])),
    ])
}

/// The pronoun a step name opens with, after any BDD prefix.
pub fn leading_pronoun(name: &str, lexicons: &Lexicons) -> Option<String> {
    let stripped = strip_bdd_prefix(name.trim());
    let first = stripped.split_whitespace().next()?;
    let word: String = first
        .chars()
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect::<String>()
        .to_lowercase();
    let word = word.trim_end_matches([',', '.', ';', ':', '!', '?']);
    lexicons.values().flatten().find_map(|p| {
        let hit = if p.ends_with('\'') { word.starts_with(p.as_str()) } else { word == p };
        hit.then(|| p.clone())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_leading_subject_only() {
        let lex = default_lexicons();
        assert_eq!(leading_pronoun("When I log in", &lex).as_deref(), Some("i"));
        assert_eq!(leading_pronoun("Given I'm logged in", &lex).as_deref(), Some("i'm"));
        assert_eq!(leading_pronoun("Je valide le formulaire", &lex).as_deref(), Some("je"));
        assert_eq!(leading_pronoun("J’ouvre la page", &lex).as_deref(), Some("j'"));
        assert_eq!(leading_pronoun("Welcome Page Should Be Open", &lex), None);
        assert_eq!(leading_pronoun("user \"demo\" logs in with password \"mode\"", &lex), None);
        assert_eq!(leading_pronoun("Then the page that I opened", &lex), None);
        assert_eq!(leading_pronoun("Input Text", &lex), None);
    }
}
