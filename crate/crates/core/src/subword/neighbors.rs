use std::cmp::Ordering;

use crate::{Error, Result};

fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

/// Cosine similarity accumulated in f64. Zero if either vector is zero.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// Exact cosine ranking over a fixed candidate set.
#[derive(Clone, Debug)]
pub struct NeighborIndex<L> {
    labels: Vec<L>,
    vectors: Vec<Vec<f32>>,
    norms: Vec<f64>,
    dim: usize,
}

impl<L: Clone> NeighborIndex<L> {
    /// Candidate vectors must share one dimension and be nonzero.
    pub fn new(candidates: Vec<(L, Vec<f32>)>) -> Result<Self> {
        let dim = candidates.first().map_or(0, |c| c.1.len());
        let mut labels = Vec::with_capacity(candidates.len());
        let mut vectors = Vec::with_capacity(candidates.len());
        let mut norms = Vec::with_capacity(candidates.len());
        for (i, (label, v)) in candidates.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "candidate {} has dimension {}, expected {}",
                    i,
                    v.len(),
                    dim
                )));
            }
            let n = norm(&v);
            if n == 0.0 || !n.is_finite() {
                return Err(Error::Validation(format!(
                    "candidate {} has zero or non-finite norm",
                    i
                )));
            }
            labels.push(label);
            vectors.push(v);
            norms.push(n);
        }
        Ok(NeighborIndex {
            labels,
            vectors,
            norms,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    /// The `k` most similar candidates by descending cosine; equal scores
    /// keep candidate order.
    pub fn top_k(&self, query: &[f32], k: usize) -> Result<Vec<(L, f64)>> {
        if k == 0 {
            return Err(Error::Validation("k must be at least 1".to_owned()));
        }
        if self.is_empty() {
            return Err(Error::NoCandidates);
        }
        if query.len() != self.dim {
            return Err(Error::Dimension(format!(
                "query has dimension {}, index has {}",
                query.len(),
                self.dim
            )));
        }
        let qn = norm(query);
        if qn == 0.0 {
            return Err(Error::ZeroQuery);
        }

        let mut scored: Vec<(usize, f64)> = self
            .vectors
            .iter()
            .zip(&self.norms)
            // adding 0.0 turns -0.0 into 0.0, which total_cmp would rank lower
            .map(|(v, &n)| dot(query, v) / (qn * n) + 0.0)
            .enumerate()
            .collect();
        let rank = |a: &(usize, f64), b: &(usize, f64)| -> Ordering {
            b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, rank);
            scored.truncate(k);
        }
        scored.sort_unstable_by(rank);
        Ok(scored
            .into_iter()
            .map(|(i, s)| (self.labels[i].clone(), s))
            .collect())
    }
}

/// One-shot ranking of `candidates` against `query`.
pub fn nearest_neighbors<L: Clone>(
    query: &[f32],
    candidates: &[(L, Vec<f32>)],
    k: usize,
) -> Result<Vec<(L, f64)>> {
    NeighborIndex::new(candidates.to_vec())?.top_k(query, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_similarity_ranks_first() {
        let cands = vec![("a", vec![1.0, 0.0]), ("b", vec![0.3, 0.7]), ("c", vec![-1.0, 0.2])];
        let top = nearest_neighbors(&[0.3, 0.7], &cands, 2).unwrap();
        assert_eq!(top[0].0, "b");
        assert!((top[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn negative_zero_scores_tie_with_zero() {
        // every product is -0.0, so the dot product is -0.0
        let cands = vec![("a", vec![-1.0, -0.0]), ("b", vec![0.0, 1.0]), ("c", vec![1.0, 0.0])];
        let top = nearest_neighbors(&[0.0, 1.0], &cands, 3).unwrap();
        let labels: Vec<_> = top.iter().map(|t| t.0).collect();
        assert_eq!(labels, ["b", "a", "c"]);
        assert!(top[1].1.is_sign_positive());
    }

    #[test]
    fn orthogonal_query_keeps_candidate_order() {
        let cands = vec![("x", vec![1.0, 0.0, 0.0]), ("y", vec![0.0, 2.0, 0.0]), ("z", vec![0.0, 1.0, 0.0])];
        let top = nearest_neighbors(&[0.0, 0.0, 1.0], &cands, 3).unwrap();
        let labels: Vec<_> = top.iter().map(|t| t.0).collect();
        assert_eq!(labels, ["x", "y", "z"]);
        assert!(top.iter().all(|t| t.1 == 0.0));
    }

    #[test]
    fn distinguishes_zero_query_from_empty_index() {
        let cands = vec![("x", vec![1.0, 0.0])];
        assert!(matches!(nearest_neighbors(&[0.0, 0.0], &cands, 1), Err(Error::ZeroQuery)));
        let empty: Vec<(&str, Vec<f32>)> = Vec::new();
        assert!(matches!(nearest_neighbors(&[1.0, 0.0], &empty, 1), Err(Error::NoCandidates)));
        assert!(nearest_neighbors(&[1.0, 0.0], &cands, 0).is_err());
        assert!(NeighborIndex::new(vec![("z", vec![0.0, 0.0])]).is_err());
    }

    #[test]
    fn k_larger_than_pool_returns_everything() {
        let cands = vec![(1, vec![1.0]), (2, vec![-1.0])];
        let top = nearest_neighbors(&[1.0], &cands, 5).unwrap();
        assert_eq!(top, vec![(1, 1.0), (2, -1.0)]);
    }
}
