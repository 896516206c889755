use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = usize;

pub const EOS_TOKEN: &str = "<eos>";
pub const SPACE_TOKEN: &str = " ";

/// Ordered token list. Single-character tokens are characters; longer ones are words.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl TryFrom<Vec<String>> for Vocab {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Vocab::new(tokens)
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(Error::InvalidInput("empty token in vocabulary".into()));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate token {t:?}")));
            }
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id]
    }

    pub fn eos(&self) -> Option<TokenId> {
        self.id(EOS_TOKEN)
    }

    fn is_char_token(&self, id: TokenId) -> bool {
        self.tokens[id].chars().count() == 1
    }

    /// Whitespace-separated words become word tokens when the vocabulary has
    /// them and character tokens otherwise. A space token separates two
    /// neighbouring words when either is spelled out in characters.
    pub fn tokenize(&self, text: &str) -> Result<Vec<TokenId>> {
        let mut out = Vec::new();
        let mut prev_chars = false;
        for (w, word) in text.split_whitespace().enumerate() {
            let (ids, chars) = match self.id(word) {
                Some(id) if word.chars().count() > 1 => (vec![id], false),
                _ => {
                    let mut ids = Vec::with_capacity(word.len());
                    for ch in word.chars() {
                        let s = ch.to_string();
                        ids.push(self.id(&s).ok_or(Error::OutOfVocabulary { token: s })?);
                    }
                    (ids, true)
                }
            };
            if w > 0 && (prev_chars || chars) {
                out.push(self.id(SPACE_TOKEN).ok_or_else(|| Error::OutOfVocabulary {
                    token: SPACE_TOKEN.to_string(),
                })?);
            }
            out.extend(ids);
            prev_chars = chars;
        }
        Ok(out)
    }

    pub fn detokenize(&self, ids: &[TokenId]) -> String {
        let mut out = String::new();
        let mut prev_word = false;
        for &id in ids {
            let t = &self.tokens[id];
            if t == EOS_TOKEN {
                break;
            }
            if self.is_char_token(id) {
                if prev_word && t != SPACE_TOKEN {
                    out.push(' ');
                }
                out.push_str(t);
                prev_word = false;
            } else {
                if !out.is_empty() && !out.ends_with(' ') {
                    out.push(' ');
                }
                out.push_str(t);
                prev_word = true;
            }
        }
        out
    }
}
