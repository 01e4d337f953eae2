use std::collections::HashMap;

use crate::error::{Error, Result};

/// Marker line that must open a vocabulary file.
pub const BLANK_TOKEN: &str = "<blank>";

/// True-label set `V`; the extended set prepends the blank at id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            let l = l.as_ref();
            if l.is_empty() || l.chars().any(char::is_whitespace) {
                return Err(Error::data(format!("invalid vocabulary token {l:?}")));
            }
            if l == BLANK_TOKEN {
                return Err(Error::data("the blank token may only appear on line 1"));
            }
            if index.insert(l.to_string(), i + 1).is_some() {
                return Err(Error::data(format!("duplicate vocabulary token {l:?}")));
            }
        }
        Ok(Self {
            labels: labels.iter().map(|l| l.as_ref().to_string()).collect(),
            index,
        })
    }

    /// Parses the vocabulary file layout: one token per line, line 1 is
    /// `<blank>`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim_end);
        match lines.next() {
            Some(BLANK_TOKEN) => {}
            _ => return Err(Error::data("vocabulary line 1 must be <blank>")),
        }
        let labels: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
        Self::new(&labels)
    }

    pub fn to_file_string(&self) -> String {
        let mut s = format!("{BLANK_TOKEN}\n");
        for l in &self.labels {
            s.push_str(l);
            s.push('\n');
        }
        s
    }

    /// `|V|`.
    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    /// `|V'| = |V| + 1`.
    pub fn extended_size(&self) -> usize {
        self.labels.len() + 1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Token text for an extended id (id 0 is the blank marker).
    pub fn token(&self, id: usize) -> Option<&str> {
        match id {
            0 => Some(BLANK_TOKEN),
            i => self.labels.get(i - 1).map(String::as_str),
        }
    }

    /// Whitespace-separated tokens to label ids.
    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.split_whitespace()
            .map(|t| {
                self.id(t)
                    .ok_or_else(|| Error::data(format!("token {t:?} is not in the vocabulary")))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .map(|&i| self.token(i).unwrap_or("<unk>"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
