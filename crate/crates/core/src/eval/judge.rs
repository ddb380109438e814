use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Lowercases, turns punctuation into spaces and collapses whitespace.
pub fn normalize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_alphanumeric() || c.is_whitespace() {
                c.to_lowercase().next().unwrap_or(c)
            } else if c == '\'' || c == '\u{2019}' {
                '\0'
            } else {
                ' '
            }
        })
        .filter(|&c| c != '\0')
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Token-level synonyms mapped onto the vocabulary used in answer keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AliasTable(BTreeMap<String, String>);

impl Default for AliasTable {
    fn default() -> Self {
        let pairs = [
            ("automobile", "car"),
            ("auto", "car"),
            ("sedan", "car"),
            ("lorry", "truck"),
            ("pickup", "truck"),
            ("bicycle", "bike"),
            ("motorbike", "motorcycle"),
            ("pedestrian", "person"),
            ("human", "person"),
            ("man", "person"),
            ("woman", "person"),
            ("puppy", "dog"),
            ("kitten", "cat"),
            ("grey", "gray"),
        ];
        AliasTable(
            pairs
                .into_iter()
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect(),
        )
    }
}

impl AliasTable {
    pub fn empty() -> Self {
        AliasTable(BTreeMap::new())
    }

    pub fn insert(&mut self, alias: &str, canonical: &str) {
        self.0.insert(normalize(alias), normalize(canonical));
    }

    /// Normalized text with every aliased token replaced by its canonical form.
    pub fn canonical(&self, text: &str) -> String {
        normalize(text)
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(|t| self.0.get(t).map_or(t, String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Whether `model_answer` agrees with `answer_key`. Yes/no keys compare only the
/// leading token; all other keys need an exact match after alias mapping.
/// Empty answers are never valid.
pub fn judge(model_answer: &str, answer_key: &str, aliases: &AliasTable) -> bool {
    let answer = aliases.canonical(model_answer);
    if answer.is_empty() {
        return false;
    }
    let key = aliases.canonical(answer_key);
    if key == "yes" || key == "no" {
        return answer.split(' ').next() == Some(key.as_str());
    }
    answer == key
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let a = AliasTable::default();
        assert!(judge("Yes.", "yes", &a));
        assert!(judge("yes, there is one", "yes", &a));
        assert!(!judge("No", "yes", &a));
        assert!(!judge("blue truck", "red car", &a));
        assert!(judge("red automobile", "red car", &a));
        assert!(judge("  Red   CAR! ", "red car", &a));
        assert!(!judge("", "yes", &a));
        assert!(!judge("?!", "red car", &a));
        assert!(judge("Yes, red to blue.", "yes, red to blue", &a));
        assert!(!judge("red automobile", "red car", &AliasTable::empty()));
    }

    #[test]
    fn custom_alias() {
        let mut a = AliasTable::empty();
        a.insert("Crimson", "red");
        assert!(judge("crimson car", "red car", &a));
    }

    proptest! {
        #[test]
        fn judge_is_normalization_invariant(answer in "[ -~]{0,24}", key in "(yes|no|red car|blue truck|left)") {
            let a = AliasTable::default();
            prop_assert_eq!(judge(&answer, &key, &a), judge(&normalize(&answer), &key, &a));
            prop_assert_eq!(normalize(&normalize(&answer)), normalize(&answer));
            prop_assert_eq!(judge(&answer.to_uppercase(), &key, &a), judge(&answer, &key, &a));
        }
    }
}
