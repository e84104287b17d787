//! Lexical retrieval over design documentation.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

/// Words per chunk.
pub const DEFAULT_WINDOW: usize = 64;
/// Words shared by consecutive chunks of a document.
pub const DEFAULT_OVERLAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub id: usize,
    pub doc: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub chunk: usize,
    pub score: f64,
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    pub chunks: Vec<Chunk>,
    tf: Vec<HashMap<String, usize>>,
}

/// Lowercased alphanumeric runs. Underscores separate tokens, so
/// `rx_valid` yields `rx` and `valid`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

impl Corpus {
    /// Splits each document into windows of `window` words overlapping by
    /// `overlap` words.
    pub fn from_documents(docs: &[(String, String)], window: usize, overlap: usize) -> Corpus {
        let window = window.max(1);
        let stride = window.saturating_sub(overlap).max(1);
        let mut chunks = Vec::new();
        for (name, text) in docs {
            let words: Vec<&str> = text.split_whitespace().collect();
            let mut start = 0;
            while start < words.len() {
                let end = (start + window).min(words.len());
                chunks.push(Chunk { id: chunks.len(), doc: name.clone(), text: words[start..end].join(" ") });
                if end == words.len() {
                    break;
                }
                start += stride;
            }
        }
        let tf = chunks
            .iter()
            .map(|c| {
                let mut m = HashMap::new();
                for t in tokenize(&c.text) {
                    *m.entry(t).or_insert(0) += 1;
                }
                m
            })
            .collect();
        Corpus { chunks, tf }
    }

    /// Reads every `.txt` and `.md` file of `dir` in name order.
    pub fn from_dir(dir: impl AsRef<Path>, window: usize, overlap: usize) -> std::io::Result<Corpus> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("txt" | "md")))
            .collect();
        paths.sort();
        let mut docs = Vec::new();
        for p in paths {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            docs.push((name, std::fs::read_to_string(&p)?));
        }
        Ok(Corpus::from_documents(&docs, window, overlap))
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    /// Score of a chunk: sum over distinct query terms of `1 + ln tf`.
    pub fn score(&self, chunk: usize, query: &str) -> f64 {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        terms
            .iter()
            .filter_map(|t| self.tf[chunk].get(t))
            .map(|&n| 1.0 + (n as f64).ln())
            .sum()
    }

    /// The `k` best chunks, by score descending then id ascending.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<Scored> {
        let mut all: Vec<Scored> = (0..self.chunks.len()).map(|i| Scored { chunk: i, score: self.score(i, query) }).collect();
        all.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.chunk.cmp(&b.chunk)));
        all.truncate(k);
        all
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunks_overlap() {
        let text = (0..10).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let c = Corpus::from_documents(&[("d".into(), text)], 4, 1);
        let texts: Vec<&str> = c.chunks.iter().map(|c| c.text.as_str()).collect();
        assert_eq!(texts, ["w0 w1 w2 w3", "w3 w4 w5 w6", "w6 w7 w8 w9"]);
    }

    #[test]
    fn ranking() {
        let docs = vec![
            ("a".into(), "the parity bit is checked".to_string()),
            ("b".into(), "rx_parity_err rises when parity fails parity".to_string()),
            ("c".into(), "unrelated text".to_string()),
        ];
        let c = Corpus::from_documents(&docs, 50, 0);
        let r = c.retrieve("parity err", 3);
        assert_eq!(r.iter().map(|s| s.chunk).collect::<Vec<_>>(), [1, 0, 2]);
        assert!((r[0].score - (2.0 + 3f64.ln())).abs() < 1e-12);
        assert_eq!(c.retrieve("x", 10).len(), 3);
    }
}
