//! K-step feature propagation `S^K X` and the node distance defined on it.
//!
//! The propagated representation is what the selection strategies cluster:
//! it mixes each node's features with its K-hop neighborhood exactly the way
//! a linearized graph convolution would, but involves no trained parameters.

use crate::graph::{FeatureMatrix, GraphError, NodeSet, NormalizedAdjacency};
use ndarray::{Array2, ArrayView1};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PropagationError {
    #[error("node index {index} out of range for {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("node set must not be empty")]
    EmptySet,
    #[error("matrix contains a non-finite value")]
    NonFinite,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Dense `n x d` matrix equal to `S^K X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatedFeatures {
    matrix: Array2<f64>,
    k_steps: usize,
}

impl PropagatedFeatures {
    /// Wraps an arbitrary representation matrix so it can be fed to the
    /// clustering routines (used for model embeddings, where `k_steps` is 0).
    pub fn from_matrix(matrix: Array2<f64>, k_steps: usize) -> Result<Self, PropagationError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(PropagationError::NonFinite);
        }
        Ok(PropagatedFeatures { matrix, k_steps })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn k_steps(&self) -> usize {
        self.k_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.matrix.row(i)
    }

    fn check_index(&self, index: usize) -> Result<(), PropagationError> {
        if index >= self.n_nodes() {
            return Err(PropagationError::IndexOutOfRange {
                index,
                n_nodes: self.n_nodes(),
            });
        }
        Ok(())
    }
}

/// Applies `S` to `X` exactly `k` times. `k = 0` returns `X` unchanged.
pub fn propagate(
    s: &NormalizedAdjacency,
    x: &FeatureMatrix,
    k: usize,
) -> Result<PropagatedFeatures, PropagationError> {
    if x.n_rows() != s.n_nodes() {
        return Err(PropagationError::Graph(GraphError::RowCountMismatch {
            expected: s.n_nodes(),
            found: x.n_rows(),
        }));
    }
    let mut m = x.matrix().clone();
    for _ in 0..k {
        m = s.matmul(&m.view())?;
    }
    Ok(PropagatedFeatures { matrix: m, k_steps: k })
}

pub(crate) fn row_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Euclidean distance between the propagated rows of nodes `i` and `j`.
pub fn pair_distance(
    p: &PropagatedFeatures,
    i: usize,
    j: usize,
) -> Result<f64, PropagationError> {
    p.check_index(i)?;
    p.check_index(j)?;
    Ok(row_distance(p.row(i), p.row(j)))
}

/// For every node, the distance to its nearest node in `s`. Entries at
/// members of `s` are zero.
pub fn min_distances_to_set(
    p: &PropagatedFeatures,
    s: &NodeSet,
) -> Result<Vec<f64>, PropagationError> {
    if s.is_empty() {
        return Err(PropagationError::EmptySet);
    }
    for &j in s {
        p.check_index(j)?;
    }
    let mut out = vec![f64::INFINITY; p.n_nodes()];
    for &j in s {
        let center = p.row(j);
        for (i, slot) in out.iter_mut().enumerate() {
            let d = row_distance(p.row(i), center);
            if d < *slot {
                *slot = d;
            }
        }
    }
    for &j in s {
        out[j] = 0.0;
    }
    Ok(out)
}
