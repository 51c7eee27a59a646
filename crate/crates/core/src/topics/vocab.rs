use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textnorm::TokenDoc;

/// Term ↔ id bijection with frequency statistics. Ids are dense and ordered
/// by decreasing corpus frequency, ties broken by term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u64>,
    corpus_freq: Vec<u64>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<u64>, corpus_freq: Vec<u64>) -> Result<Self> {
        if terms.len() != doc_freq.len() || terms.len() != corpus_freq.len() {
            return Err(Error::Format("vocabulary columns differ in length".into()));
        }
        let index: HashMap<String, u32> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        if index.len() != terms.len() {
            return Err(Error::Format("vocabulary has duplicate terms".into()));
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            corpus_freq,
            index,
        })
    }

    /// Rebuild the lookup index after deserialization.
    pub fn reindex(&mut self) {
        self.index = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn corpus_freq(&self, id: u32) -> u64 {
        self.corpus_freq[id as usize]
    }

    pub fn doc_freq(&self, id: u32) -> u64 {
        self.doc_freq[id as usize]
    }

    /// In-vocabulary ids of `tokens`, order preserved, OOV dropped.
    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().filter_map(|t| self.id(t)).collect()
    }

    pub fn bow(&self, doc: &TokenDoc) -> BowDoc {
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for id in self.encode(&doc.tokens) {
            *counts.entry(id).or_default() += 1;
        }
        let mut terms: Vec<(u32, u32)> = counts.into_iter().collect();
        terms.sort_unstable();
        BowDoc {
            doc_id: doc.doc_id.clone(),
            terms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: String,
    /// `(term_id, count)` pairs sorted by term id; counts are ≥ 1.
    pub terms: Vec<(u32, u32)>,
}

impl BowDoc {
    pub fn len(&self) -> usize {
        self.terms.iter().map(|&(_, c)| c as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Count terms over documents with at least `min_doc_len` tokens and keep
/// those with corpus frequency ≥ `min_count`. Shared by the topic model and
/// the paragraph-vector model.
pub fn build_vocab(docs: &[TokenDoc], min_count: u64, min_doc_len: usize) -> Result<Vocabulary> {
    let mut corpus: HashMap<&str, (u64, u64)> = HashMap::new();
    for doc in docs.iter().filter(|d| d.tokens.len() >= min_doc_len) {
        let mut seen_in_doc: Vec<&str> = Vec::with_capacity(doc.tokens.len());
        for t in &doc.tokens {
            corpus.entry(t.as_str()).or_default().0 += 1;
            seen_in_doc.push(t);
        }
        seen_in_doc.sort_unstable();
        seen_in_doc.dedup();
        for t in seen_in_doc {
            corpus.get_mut(t).unwrap().1 += 1;
        }
    }
    let mut kept: Vec<(&str, u64, u64)> = corpus
        .into_iter()
        .filter(|&(_, (cf, _))| cf >= min_count)
        .map(|(t, (cf, df))| (t, cf, df))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Vocabulary::from_parts(
        kept.iter().map(|k| k.0.to_string()).collect(),
        kept.iter().map(|k| k.2).collect(),
        kept.iter().map(|k| k.1).collect(),
    )
}
