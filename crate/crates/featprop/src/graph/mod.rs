//! Graph data model: CSR adjacency, node features, labels, and the symmetric
//! normalized adjacency matrix used by graph convolutions.
//!
//! All types are immutable after construction and safe to share across
//! threads. Construction validates the structural invariants (symmetry,
//! sorted neighbor lists, consistent dimensions) once, so downstream code
//! can rely on them without re-checking.

mod load;
mod sbm;

pub use load::{load_dataset, save_dataset_json, DatasetFormat, LoadError, LoadOptions};
pub use sbm::{generate_sbm, SbmConfig, SbmError};

use ndarray::{Array2, ArrayView1, ArrayView2};
use std::collections::BTreeSet;
use thiserror::Error;

/// Node identifier: contiguous indices `0..n_nodes`.
pub type NodeId = usize;

/// Ordered set of node indices. `BTreeSet` keeps iteration deterministic.
pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge ({i}, {j}) references a node outside 0..{n_nodes}")]
    EdgeOutOfRange { i: usize, j: usize, n_nodes: usize },
    #[error("matrix has {found} rows, expected {expected}")]
    RowCountMismatch { expected: usize, found: usize },
    #[error("non-finite feature value at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("label {label} at node {node} is out of range for {n_classes} classes")]
    LabelOutOfRange {
        node: usize,
        label: usize,
        n_classes: usize,
    },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("label vector has {found} entries, expected {expected}")]
    LabelCountMismatch { expected: usize, found: usize },
}

/// Immutable undirected graph in compressed row form.
///
/// Self-loops are never stored (they are added only inside the normalized
/// adjacency) and duplicate edges are collapsed. Column indices within each
/// row are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_nodes: usize,
    /// Canonical undirected edge list: pairs `(i, j)` with `i < j`, sorted.
    edges: Vec<(NodeId, NodeId)>,
    row_offsets: Vec<usize>,
    col_indices: Vec<NodeId>,
}

impl Graph {
    /// Builds a graph from an edge iterator. Edges are symmetrized, duplicate
    /// pairs collapsed, and self-loops dropped.
    pub fn from_edges<I>(n_nodes: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut canonical: Vec<(NodeId, NodeId)> = Vec::new();
        for (i, j) in edges {
            if i >= n_nodes || j >= n_nodes {
                return Err(GraphError::EdgeOutOfRange { i, j, n_nodes });
            }
            if i == j {
                continue;
            }
            canonical.push((i.min(j), i.max(j)));
        }
        canonical.sort_unstable();
        canonical.dedup();

        let mut degrees = vec![0usize; n_nodes];
        for &(i, j) in &canonical {
            degrees[i] += 1;
            degrees[j] += 1;
        }
        let mut row_offsets = Vec::with_capacity(n_nodes + 1);
        row_offsets.push(0);
        for v in 0..n_nodes {
            row_offsets.push(row_offsets[v] + degrees[v]);
        }
        let mut cursor = row_offsets.clone();
        let mut col_indices = vec![0usize; 2 * canonical.len()];
        for &(i, j) in &canonical {
            col_indices[cursor[i]] = j;
            cursor[i] += 1;
            col_indices[cursor[j]] = i;
            cursor[j] += 1;
        }
        // Neighbors of i come out sorted because the canonical list is sorted
        // lexicographically, but the (j, i) insertions interleave; sort rows.
        for v in 0..n_nodes {
            col_indices[row_offsets[v]..row_offsets[v + 1]].sort_unstable();
        }

        Ok(Graph {
            n_nodes,
            edges: canonical,
            row_offsets,
            col_indices,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `(i, j)` with `i < j`, sorted ascending.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Neighbors of `v` in strictly increasing order.
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.col_indices[self.row_offsets[v]..self.row_offsets[v + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.row_offsets[v + 1] - self.row_offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n_nodes).map(|v| self.degree(v)).collect()
    }
}

/// Dense node feature matrix; row `i` holds the feature vector of node `i`.
/// Every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self, GraphError> {
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(GraphError::NonFiniteFeature { row, col });
            }
        }
        Ok(FeatureMatrix { values })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Scales each row to unit L1 norm. Zero rows are left untouched, as are
    /// rows whose L1 norm is already within 1e-12 of 1 (this makes the
    /// operation exactly idempotent, so a normalized dump reloads bit-equal).
    pub fn l1_normalize_rows(&mut self) {
        for mut row in self.values.rows_mut() {
            let norm: f64 = row.iter().map(|v| v.abs()).sum();
            if norm == 0.0 || (norm - 1.0).abs() <= 1e-12 {
                continue;
            }
            row.mapv_inplace(|v| v / norm);
        }
    }
}

/// Per-node class labels in `0..n_classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self, GraphError> {
        if n_classes < 2 {
            return Err(GraphError::TooFewClasses(n_classes));
        }
        for (node, &label) in labels.iter().enumerate() {
            if label >= n_classes {
                return Err(GraphError::LabelOutOfRange {
                    node,
                    label,
                    n_classes,
                });
            }
        }
        Ok(LabelVector { labels, n_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn label(&self, node: NodeId) -> usize {
        self.labels[node]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }
}

/// A graph together with its features and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: Graph,
    pub features: FeatureMatrix,
    pub labels: LabelVector,
    pub name: String,
}

impl Dataset {
    /// Assembles a dataset, checking that the three parts agree on the node
    /// count.
    pub fn new(
        graph: Graph,
        features: FeatureMatrix,
        labels: LabelVector,
        name: impl Into<String>,
    ) -> Result<Self, GraphError> {
        if features.n_rows() != graph.n_nodes() {
            return Err(GraphError::RowCountMismatch {
                expected: graph.n_nodes(),
                found: features.n_rows(),
            });
        }
        if labels.len() != graph.n_nodes() {
            return Err(GraphError::LabelCountMismatch {
                expected: graph.n_nodes(),
                found: labels.len(),
            });
        }
        Ok(Dataset {
            graph,
            features,
            labels,
            name: name.into(),
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }
}

/// Sparse symmetric matrix `S = (I+D)^{-1/2} (A+I) (I+D)^{-1/2}` where `A` is
/// the adjacency matrix and `D` its degree matrix. The sparsity pattern is
/// exactly that of `A + I`; entry `(i, j)` equals `1/sqrt((d_i+1)(d_j+1))`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<NodeId>,
    values: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn from_graph(g: &Graph) -> Self {
        let n = g.n_nodes();
        let inv_sqrt: Vec<f64> = (0..n).map(|v| 1.0 / ((g.degree(v) + 1) as f64).sqrt()).collect();

        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::with_capacity(g.col_indices.len() + n);
        let mut values = Vec::with_capacity(g.col_indices.len() + n);
        row_offsets.push(0);
        for i in 0..n {
            let mut diag_placed = false;
            for &j in g.neighbors(i) {
                if !diag_placed && j > i {
                    col_indices.push(i);
                    values.push(inv_sqrt[i] * inv_sqrt[i]);
                    diag_placed = true;
                }
                col_indices.push(j);
                values.push(inv_sqrt[i] * inv_sqrt[j]);
            }
            if !diag_placed {
                col_indices.push(i);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            row_offsets.push(col_indices.len());
        }

        NormalizedAdjacency {
            n,
            row_offsets,
            col_indices,
            values,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero-pattern) entries, i.e. `nnz(A + I)`.
    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Column indices and values of row `i`, columns strictly increasing.
    pub fn row(&self, i: usize) -> (&[NodeId], &[f64]) {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[span.clone()], &self.values[span])
    }

    /// Entry `(i, j)`; zero when outside the sparsity pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// Sparse-dense product `S * m`. Summation runs in ascending column order
    /// per row, so the result is deterministic.
    pub fn matmul(&self, m: &ArrayView2<f64>) -> Result<Array2<f64>, GraphError> {
        if m.nrows() != self.n {
            return Err(GraphError::RowCountMismatch {
                expected: self.n,
                found: m.nrows(),
            });
        }
        let mut out = Array2::<f64>::zeros((self.n, m.ncols()));
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut out_row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out_row.scaled_add(v, &m.row(j));
            }
        }
        Ok(out)
    }
}

/// See [`NormalizedAdjacency::from_graph`].
pub fn normalized_adjacency(g: &Graph) -> NormalizedAdjacency {
    NormalizedAdjacency::from_graph(g)
}

/// See [`NormalizedAdjacency::matmul`].
pub fn spmm(s: &NormalizedAdjacency, m: &ArrayView2<f64>) -> Result<Array2<f64>, GraphError> {
    s.matmul(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn from_edges_symmetrizes_and_dedups() {
        let g = Graph::from_edges(4, vec![(1, 0), (0, 1), (2, 3), (2, 3), (3, 3)]).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.edges(), &[(0, 1), (2, 3)]);
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.degree(3), 1); // self-loop dropped
    }

    #[test]
    fn from_edges_rejects_out_of_range() {
        let err = Graph::from_edges(2, vec![(0, 2)]).unwrap_err();
        assert!(matches!(err, GraphError::EdgeOutOfRange { .. }));
    }

    #[test]
    fn neighbor_lists_strictly_increasing() {
        let g = Graph::from_edges(5, vec![(4, 2), (2, 0), (2, 1), (2, 3)]).unwrap();
        assert_eq!(g.neighbors(2), &[0, 1, 3, 4]);
    }

    #[test]
    fn normalized_adjacency_isolated_node() {
        let g = Graph::from_edges(1, vec![]).unwrap();
        let s = normalized_adjacency(&g);
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.get(0, 0), 1.0);
    }

    #[test]
    fn normalized_adjacency_single_edge() {
        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let s = normalized_adjacency(&g);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(s.get(i, j), 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn normalized_adjacency_path_graph() {
        // Path 0-1-2: degrees 1, 2, 1.
        let g = Graph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let s = normalized_adjacency(&g);
        assert_abs_diff_eq!(s.get(0, 0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(0, 1), 1.0 / 6f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(1, 1), 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.get(2, 2), 0.5, epsilon = 1e-12);
        assert_eq!(s.get(0, 2), 0.0);
    }

    #[test]
    fn normalized_adjacency_matches_closed_form() {
        let g = Graph::from_edges(6, vec![(0, 1), (0, 2), (1, 2), (2, 3), (4, 5)]).unwrap();
        let s = normalized_adjacency(&g);
        for i in 0..6 {
            let (cols, vals) = s.row(i);
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
            for (&j, &v) in cols.iter().zip(vals) {
                let expect = 1.0 / (((g.degree(i) + 1) * (g.degree(j) + 1)) as f64).sqrt();
                assert_abs_diff_eq!(v, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(s.get(j, i), v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn spmm_identity_pattern() {
        let g = Graph::from_edges(3, vec![]).unwrap();
        let s = normalized_adjacency(&g);
        let m = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let out = spmm(&s, &m.view()).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn spmm_single_edge_mixes_rows() {
        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let s = normalized_adjacency(&g);
        let m = array![[1.0, 0.0], [0.0, 1.0]];
        let out = spmm(&s, &m.view()).unwrap();
        assert_abs_diff_eq!(out, array![[0.5, 0.5], [0.5, 0.5]], epsilon = 1e-15);
    }

    #[test]
    fn spmm_zeros_stay_zero() {
        let g = Graph::from_edges(3, vec![(0, 1), (1, 2)]).unwrap();
        let s = normalized_adjacency(&g);
        let m = Array2::<f64>::zeros((3, 4));
        let out = spmm(&s, &m.view()).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn spmm_rejects_dimension_mismatch() {
        let g = Graph::from_edges(3, vec![(0, 1)]).unwrap();
        let s = normalized_adjacency(&g);
        let m = Array2::<f64>::zeros((2, 2));
        assert!(spmm(&s, &m.view()).is_err());
    }

    #[test]
    fn regular_graph_rows_sum_to_one() {
        // 4-cycle: every node has degree 2.
        let g = Graph::from_edges(4, vec![(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let s = normalized_adjacency(&g);
        for i in 0..4 {
            let (_, vals) = s.row(i);
            let sum: f64 = vals.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn feature_matrix_rejects_non_finite() {
        let m = array![[1.0, f64::NAN]];
        assert!(FeatureMatrix::new(m).is_err());
    }

    #[test]
    fn l1_normalization_is_idempotent() {
        let mut f = FeatureMatrix::new(array![[2.0, 2.0], [0.0, 0.0], [0.3, 0.7]]).unwrap();
        f.l1_normalize_rows();
        let once = f.clone();
        f.l1_normalize_rows();
        assert_eq!(f, once);
        assert_abs_diff_eq!(f.row(0)[0], 0.5, epsilon = 1e-15);
        assert_eq!(f.row(1)[1], 0.0);
    }

    #[test]
    fn label_vector_validates() {
        assert!(LabelVector::new(vec![0, 1], 2).is_ok());
        assert!(matches!(
            LabelVector::new(vec![0], 1),
            Err(GraphError::TooFewClasses(1))
        ));
        assert!(matches!(
            LabelVector::new(vec![2], 2),
            Err(GraphError::LabelOutOfRange { .. })
        ));
    }

    #[test]
    fn dataset_checks_dimensions() {
        let g = Graph::from_edges(2, vec![(0, 1)]).unwrap();
        let f = FeatureMatrix::new(array![[1.0], [2.0]]).unwrap();
        let bad_labels = LabelVector::new(vec![0], 2).unwrap();
        assert!(Dataset::new(g.clone(), f.clone(), bad_labels, "t").is_err());
        let labels = LabelVector::new(vec![0, 1], 2).unwrap();
        assert!(Dataset::new(g, f, labels, "t").is_ok());
    }
}
