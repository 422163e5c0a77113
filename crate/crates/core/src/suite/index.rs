use std::collections::HashMap;

use super::{normalize, ratio};
use crate::case::TestCaseDesign;

/// Interned token sets with an inverted index, so a lookup only scores
/// canonical cases that share at least one token with the query.
#[derive(Debug, Clone, Default)]
pub(crate) struct SimilarityIndex {
    vocab: HashMap<String, u32>,
    sets: Vec<Vec<u32>>,
    postings: HashMap<u32, Vec<u32>>,
    empty: Vec<u32>,
}

fn sorted_tokens(case: &TestCaseDesign) -> Vec<String> {
    let mut tokens: Vec<String> = case
        .semantic_fields()
        .iter()
        .flat_map(|f| normalize(f))
        .collect();
    tokens.sort_unstable();
    tokens.dedup();
    tokens
}

impl SimilarityIndex {
    pub(crate) fn len(&self) -> usize {
        self.sets.len()
    }

    fn token_ids(&self, case: &TestCaseDesign) -> Vec<Option<u32>> {
        sorted_tokens(case)
            .iter()
            .map(|t| self.vocab.get(t).copied())
            .collect()
    }

    pub(crate) fn insert(&mut self, case: &TestCaseDesign) {
        let pos = self.sets.len() as u32;
        let mut ids: Vec<u32> = sorted_tokens(case)
            .into_iter()
            .map(|t| {
                let next = self.vocab.len() as u32;
                *self.vocab.entry(t).or_insert(next)
            })
            .collect();
        ids.sort_unstable();
        for &id in &ids {
            self.postings.entry(id).or_default().push(pos);
        }
        if ids.is_empty() {
            self.empty.push(pos);
        }
        self.sets.push(ids);
    }

    /// Lowest canonical position with similarity >= `threshold`.
    pub(crate) fn first_match(&self, case: &TestCaseDesign, threshold: f64) -> Option<usize> {
        let query = self.token_ids(case);
        if query.is_empty() {
            return self.empty.first().map(|&p| p as usize);
        }
        let q = query.len();
        let mut counts = vec![0usize; self.sets.len()];
        let mut touched: Vec<u32> = Vec::new();
        for id in query.iter().flatten() {
            for &pos in &self.postings[id] {
                if counts[pos as usize] == 0 {
                    touched.push(pos);
                }
                counts[pos as usize] += 1;
            }
        }
        touched.sort_unstable();
        touched
            .into_iter()
            .map(|pos| (pos, counts[pos as usize]))
            .find_map(|(pos, inter)| {
                let c = self.sets[pos as usize].len();
                // size bound: jaccard <= min/max
                if ratio(q.min(c), q.max(c)) < threshold {
                    return None;
                }
                (ratio(inter, q + c - inter) >= threshold).then_some(pos as usize)
            })
    }
}
