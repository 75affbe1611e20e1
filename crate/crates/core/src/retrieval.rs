//! Open-book evidence retrieval: an inverted index over corpus paragraphs and
//! Okapi BM25 top-k ranking.
//!
//! Term weighting:
//!
//! ```text
//! idf(t)      = ln(1 + (N - df + 0.5) / (df + 0.5))
//! score(d, q) = sum over distinct t in q of
//!               idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;

pub const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("duplicate doc-id {0:?}")]
    DuplicateDocId(String),
    #[error("corpus line {line}: {source}")]
    Corpus {
        line: usize,
        source: serde_json::Error,
    },
    #[error("unsupported index format version {found} (expected {INDEX_FORMAT_VERSION})")]
    FormatVersion { found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(alias = "id")]
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    pub text: String,
    #[serde(default)]
    pub token_count: usize,
}

impl Document {
    pub fn new(doc_id: &str, title: &str, text: &str) -> Self {
        Document {
            doc_id: doc_id.to_string(),
            title: title.to_string(),
            text: text.to_string(),
            token_count: 0,
        }
    }

    fn indexed_text(&self) -> String {
        if self.title.is_empty() {
            self.text.clone()
        } else {
            format!("{}\n{}", self.title, self.text)
        }
    }
}

/// Case-fold, split on non-alphanumeric characters, drop empties.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params<F> {
    pub k1: F,
    pub b: F,
}

impl<F: Real> Default for Bm25Params<F> {
    fn default() -> Self {
        Bm25Params {
            k1: F::from(0.9).unwrap(),
            b: F::from(0.4).unwrap(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    /// Position of the document in the index's document table.
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Index<F> {
    format_version: u32,
    documents: Vec<Document>,
    postings: BTreeMap<String, Vec<Posting>>,
    avg_doc_length: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hit<'a, F> {
    pub document: &'a Document,
    pub score: F,
}

impl<F: Real> Index<F> {
    pub fn build<I>(corpus: I) -> Result<Self, IndexError>
    where
        I: IntoIterator<Item = Document>,
    {
        let mut seen = HashSet::new();
        let mut documents = Vec::new();
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut total_tokens = 0u64;
        for mut doc in corpus {
            if !seen.insert(doc.doc_id.clone()) {
                return Err(IndexError::DuplicateDocId(doc.doc_id));
            }
            let tokens = tokenize(&doc.indexed_text());
            doc.token_count = tokens.len();
            total_tokens += tokens.len() as u64;
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_default() += 1;
            }
            let id = documents.len() as u32;
            for (term, count) in tf {
                postings
                    .entry(term)
                    .or_default()
                    .push(Posting { doc: id, tf: count });
            }
            documents.push(doc);
        }
        if documents.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let avg_doc_length = F::from(total_tokens).unwrap() / F::from(documents.len()).unwrap();
        Ok(Index {
            format_version: INDEX_FORMAT_VERSION,
            documents,
            postings,
            avg_doc_length,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.documents.len()
    }

    pub fn avg_doc_length(&self) -> F {
        self.avg_doc_length
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    /// BM25 score of every document, by position in [`Index::documents`].
    /// Documents sharing no term with the query score exactly zero.
    pub fn scores(&self, query: &str, params: &Bm25Params<F>) -> Vec<F> {
        let mut out = vec![F::zero(); self.documents.len()];
        for (doc, s) in self.sparse_scores(query, params) {
            out[doc as usize] = s;
        }
        out
    }

    fn sparse_scores(&self, query: &str, params: &Bm25Params<F>) -> BTreeMap<u32, F> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        let n = F::from(self.documents.len()).unwrap();
        let half = F::from(0.5).unwrap();
        let mut scores: BTreeMap<u32, F> = BTreeMap::new();
        for term in &terms {
            let postings = self.postings(term);
            if postings.is_empty() {
                continue;
            }
            let df = F::from(postings.len()).unwrap();
            let idf = (F::one() + (n - df + half) / (df + half)).ln();
            for p in postings {
                let tf = F::from(p.tf).unwrap();
                let len = F::from(self.documents[p.doc as usize].token_count).unwrap();
                let norm = F::one() - params.b + params.b * len / self.avg_doc_length;
                let w = idf * tf * (params.k1 + F::one()) / (tf + params.k1 * norm);
                let s = scores.entry(p.doc).or_insert_with(F::zero);
                *s = *s + w;
            }
        }
        scores
    }

    /// Top-`k` documents by BM25, descending; ties by doc-id. Documents with
    /// no query term are never returned.
    pub fn retrieve(&self, query: &str, k: usize, params: &Bm25Params<F>) -> Vec<Hit<'_, F>> {
        let mut hits: Vec<Hit<'_, F>> = self
            .sparse_scores(query, params)
            .into_iter()
            .map(|(doc, score)| Hit {
                document: &self.documents[doc as usize],
                score,
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.document.doc_id.cmp(&b.document.doc_id))
        });
        hits.truncate(k);
        hits
    }
}

impl<F: Real + Serialize + serde::de::DeserializeOwned> Index<F> {
    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let index: Index<F> = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if index.format_version != INDEX_FORMAT_VERSION {
            return Err(IndexError::FormatVersion {
                found: index.format_version,
            });
        }
        Ok(index)
    }
}

/// Stream documents from line-delimited JSON (`{"doc_id", "title", "text"}`).
pub fn read_corpus<R: BufRead>(reader: R) -> impl Iterator<Item = Result<Document, IndexError>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(IndexError::Io(e))),
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => {
                Some(
                    serde_json::from_str::<Document>(&l).map_err(|source| IndexError::Corpus {
                        line: i + 1,
                        source,
                    }),
                )
            }
        })
}

/// Retrieved paragraphs in rank order, separated by blank lines.
pub fn concat_evidence<F>(hits: &[Hit<'_, F>]) -> String {
    hits.iter()
        .map(|h| h.document.text.trim())
        .collect::<Vec<_>>()
        .join("\n\n")
}
