//! Classical bag-of-words vectorizers: raw counts, TF-IDF and feature hashing.
//!
//! Tokens are lowercase runs of alphanumeric characters. Count and TF-IDF keep
//! the `n_features` most frequent corpus tokens (ties broken
//! lexicographically) and drop everything else at transform time. TF-IDF uses
//! the smoothed `idf(t) = ln((1 + N) / (1 + df(t))) + 1`. TF-IDF and hashing
//! rows are L2-normalized.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{EmbeddingMatrix, Error, Result};

pub const DEFAULT_FEATURES: usize = 768;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorizerMethod {
    Tfidf,
    Count,
    Hashing,
}

impl VectorizerMethod {
    pub const NAMES: &'static [&'static str] = &["tfidf", "count", "hashing"];
}

impl std::str::FromStr for VectorizerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(Self::Tfidf),
            "count" => Ok(Self::Count),
            "hashing" => Ok(Self::Hashing),
            _ => Err(Error::invalid(format!("unknown vectorizer `{s}`"))),
        }
    }
}

/// A fitted vectorizer. Hashing models carry no vocabulary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorizerModel {
    pub method: VectorizerMethod,
    pub n_features: usize,
    pub vocab: BTreeMap<String, usize>,
    pub doc_freq: BTreeMap<String, usize>,
    pub n_docs: usize,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn hashed_column(token: &str, n_features: usize) -> (usize, f64) {
    let h = fnv1a64(token.as_bytes());
    // The sign comes from the top bit; the low bits already pick the column.
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    ((h % n_features as u64) as usize, sign)
}

fn l2_normalize(row: &mut [f64]) {
    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        row.iter_mut().for_each(|v| *v /= norm);
    }
}

impl VectorizerModel {
    pub fn fit(corpus: &[String], method: VectorizerMethod, n_features: usize) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::invalid("cannot fit a vectorizer on an empty corpus"));
        }
        if n_features == 0 {
            return Err(Error::invalid("n_features must be at least 1"));
        }
        if method == VectorizerMethod::Hashing {
            return Ok(Self {
                method,
                n_features,
                vocab: BTreeMap::new(),
                doc_freq: BTreeMap::new(),
                n_docs: corpus.len(),
            });
        }

        let mut total: HashMap<String, usize> = HashMap::new();
        let mut df: HashMap<String, usize> = HashMap::new();
        for doc in corpus {
            let tokens = tokenize(doc);
            let distinct: BTreeSet<&String> = tokens.iter().collect();
            for t in distinct {
                *df.entry(t.clone()).or_default() += 1;
            }
            for t in tokens {
                *total.entry(t).or_default() += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = total.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(n_features);

        let mut vocab = BTreeMap::new();
        let mut doc_freq = BTreeMap::new();
        for (col, (token, _)) in ranked.into_iter().enumerate() {
            doc_freq.insert(token.clone(), df[&token]);
            vocab.insert(token, col);
        }
        Ok(Self { method, n_features, vocab, doc_freq, n_docs: corpus.len() })
    }

    pub fn idf(&self, token: &str) -> Option<f64> {
        let df = *self.doc_freq.get(token)? as f64;
        Some(((1.0 + self.n_docs as f64) / (1.0 + df)).ln() + 1.0)
    }

    pub fn transform_doc(&self, doc: &str) -> Vec<f64> {
        let mut row = vec![0.0; self.n_features];
        let tokens = tokenize(doc);
        match self.method {
            VectorizerMethod::Hashing => {
                for t in &tokens {
                    let (col, sign) = hashed_column(t, self.n_features);
                    row[col] += sign;
                }
                l2_normalize(&mut row);
            }
            VectorizerMethod::Count | VectorizerMethod::Tfidf => {
                for t in &tokens {
                    if let Some(&col) = self.vocab.get(t) {
                        row[col] += 1.0;
                    }
                }
                if self.method == VectorizerMethod::Tfidf {
                    for (token, &col) in &self.vocab {
                        if row[col] != 0.0 {
                            row[col] *= self.idf(token).unwrap_or(1.0);
                        }
                    }
                    l2_normalize(&mut row);
                }
            }
        }
        row
    }

    pub fn transform(&self, docs: &[String]) -> Result<EmbeddingMatrix> {
        let mut data = Vec::with_capacity(docs.len() * self.n_features);
        for d in docs {
            data.extend(self.transform_doc(d));
        }
        EmbeddingMatrix::new(docs.len(), self.n_features, data)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vectorizer serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s)?;
        if m.n_features == 0 || m.vocab.len() > m.n_features {
            return Err(Error::invalid("vocabulary larger than n_features"));
        }
        if m.vocab.values().any(|&c| c >= m.n_features) {
            return Err(Error::invalid("vocabulary column out of range"));
        }
        Ok(m)
    }
}

pub fn fit_transform_vectorizer(
    corpus: &[String],
    method: VectorizerMethod,
    n_features: usize,
) -> Result<(VectorizerModel, EmbeddingMatrix)> {
    let model = VectorizerModel::fit(corpus, method, n_features)?;
    let m = model.transform(corpus)?;
    Ok((model, m))
}
