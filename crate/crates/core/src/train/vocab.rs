//! Token vocabulary for embedding lookups. Ids 0 and 1 are reserved for the
//! unknown token and the generic variable token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dag::VAR_TOKEN;

use super::Dataset;

/// Sentinel for unseen tokens; not producible by the symbol grammar.
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub const UNK_ID: usize = 0;
    pub const VAR_ID: usize = 1;

    /// Just the reserved entries.
    pub fn reserved() -> Self {
        let tokens = vec![UNK_TOKEN.to_string(), VAR_TOKEN.to_string()];
        let index = build_index(&tokens);
        Vocabulary { tokens, index }
    }

    /// Builds from the training split only: tokens are assigned ids in
    /// first-occurrence order (examples in dataset order, premise before
    /// conjecture, nodes in index order).
    pub fn build(dataset: &Dataset) -> Self {
        Self::build_from_dags(
            dataset
                .examples
                .iter()
                .flat_map(|e| [&e.premise, &e.conjecture]),
        )
    }

    pub fn build_from_dags<'a>(dags: impl IntoIterator<Item = &'a crate::dag::FormulaDag>) -> Self {
        let mut vocab = Vocabulary::reserved();
        for dag in dags {
            for node in &dag.nodes {
                if !vocab.index.contains_key(&node.token) {
                    vocab.index.insert(node.token.clone(), vocab.tokens.len());
                    vocab.tokens.push(node.token.clone());
                }
            }
        }
        vocab
    }

    /// Reconstructs from an id-ordered token list (checkpoint loading).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, String> {
        if tokens.len() < 2 || tokens[0] != UNK_TOKEN || tokens[1] != VAR_TOKEN {
            return Err(format!(
                "vocabulary must start with reserved tokens `{UNK_TOKEN}`, `{VAR_TOKEN}`"
            ));
        }
        let index = build_index(&tokens);
        if index.len() != tokens.len() {
            return Err("vocabulary contains duplicate tokens".to_string());
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn lookup(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNK_ID)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(tokens: Vec<String>) -> Result<Self, String> {
        Vocabulary::from_tokens(tokens)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

fn build_index(tokens: &[String]) -> HashMap<String, usize> {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::parse_dataset;

    #[test]
    fn first_occurrence_order() {
        let data = parse_dataset("1\t(and (p x) (q x))\t(r (c))\n0\t(p z)\t(s w)\n").unwrap();
        let vocab = Vocabulary::build(&data);
        assert_eq!(vocab.lookup(UNK_TOKEN), 0);
        assert_eq!(vocab.lookup("VAR"), 1);
        // dag interning is post-order: leaves first
        assert!(vocab.lookup("p") < vocab.lookup("q"));
        assert!(vocab.lookup("q") < vocab.lookup("and"));
        assert!(vocab.lookup("c") < vocab.lookup("s"));
        assert_eq!(vocab.lookup("zzz"), Vocabulary::UNK_ID);
    }

    #[test]
    fn round_trip_tokens() {
        let data = parse_dataset("1\t(p (a))\t(q (b))\n").unwrap();
        let vocab = Vocabulary::build(&data);
        let back = Vocabulary::from_tokens(vocab.tokens().to_vec()).unwrap();
        assert_eq!(back.lookup("a"), vocab.lookup("a"));
        assert!(Vocabulary::from_tokens(vec!["x".into()]).is_err());
    }
}
