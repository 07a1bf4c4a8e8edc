//! Dataset ingestion: the tab-separated citation format (`.content` +
//! `.cites` file pair) and a self-contained JSON format.

use super::{Dataset, FeatureMatrix, Graph, GraphError, LabelVector};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetFormat {
    /// `<stem>.content` (node id, features, label) + `<stem>.cites` (edges).
    ContentCites,
    /// Single JSON object with `edges`, `features`, `labels`.
    Json,
}

impl FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "content-cites" => Ok(DatasetFormat::ContentCites),
            "json" => Ok(DatasetFormat::Json),
            other => Err(format!("unknown dataset format '{other}' (expected content-cites or json)")),
        }
    }
}

impl fmt::Display for DatasetFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetFormat::ContentCites => write!(f, "content-cites"),
            DatasetFormat::Json => write!(f, "json"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("integrity error in {path}{}: {msg}", line.map(|l| format!(":{l}")).unwrap_or_default())]
    Integrity {
        path: PathBuf,
        line: Option<usize>,
        msg: String,
    },
    #[error("invalid json in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Scale each feature row to unit L1 norm after loading.
    pub row_normalize: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { row_normalize: true }
    }
}

/// Loads a dataset from disk.
///
/// For `ContentCites`, `path` is the stem shared by the two files
/// (`<stem>.content`, `<stem>.cites`); a path ending in `.content` or
/// `.cites` is accepted too and stripped to the stem. Node order is the
/// order of first appearance in the content file; label strings are mapped
/// to dense class ids by first appearance. Edges are symmetrized and
/// deduplicated.
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    opts: &LoadOptions,
) -> Result<Dataset, LoadError> {
    match format {
        DatasetFormat::ContentCites => load_content_cites(path, opts),
        DatasetFormat::Json => load_json(path, opts),
    }
}

fn read_to_string(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn content_cites_stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("content") | Some("cites") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut os = stem.as_os_str().to_os_string();
    os.push(suffix);
    PathBuf::from(os)
}

fn load_content_cites(path: &Path, opts: &LoadOptions) -> Result<Dataset, LoadError> {
    let stem = content_cites_stem(path);
    let content_path = with_suffix(&stem, ".content");
    let cites_path = with_suffix(&stem, ".cites");
    let name = stem
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());

    let content = read_to_string(&content_path)?;
    let mut node_ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut label_ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut n_features: Option<usize> = None;

    for (lineno, line) in content.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(LoadError::Parse {
                path: content_path.clone(),
                line: lineno,
                msg: format!("expected `<id> <features...> <label>`, got {} fields", tokens.len()),
            });
        }
        let id = tokens[0];
        let label = tokens[tokens.len() - 1];
        let feats = &tokens[1..tokens.len() - 1];
        match n_features {
            None => n_features = Some(feats.len()),
            Some(d) if d != feats.len() => {
                return Err(LoadError::Parse {
                    path: content_path.clone(),
                    line: lineno,
                    msg: format!("row has {} feature values, expected {d}", feats.len()),
                });
            }
            _ => {}
        }
        if node_ids.contains_key(id) {
            return Err(LoadError::Integrity {
                path: content_path.clone(),
                line: Some(lineno),
                msg: format!("duplicate node id '{id}'"),
            });
        }
        let mut row = Vec::with_capacity(feats.len());
        for tok in feats {
            let v: f64 = tok.parse().map_err(|_| LoadError::Parse {
                path: content_path.clone(),
                line: lineno,
                msg: format!("feature value '{tok}' is not a number"),
            })?;
            row.push(v);
        }
        node_ids.insert(id.to_string(), rows.len());
        rows.push(row);
        let next_label = label_ids.len();
        let class = *label_ids.entry(label.to_string()).or_insert(next_label);
        labels.push(class);
    }

    let n = rows.len();
    let d = n_features.unwrap_or(0);
    let mut features = Array2::<f64>::zeros((n, d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }

    let cites = read_to_string(&cites_path)?;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (lineno, line) in cites.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(LoadError::Parse {
                path: cites_path.clone(),
                line: lineno,
                msg: format!("expected `<cited> <citing>`, got {} fields", tokens.len()),
            });
        }
        let mut pair = [0usize; 2];
        for (slot, tok) in pair.iter_mut().zip(&tokens) {
            *slot = *node_ids.get(*tok).ok_or_else(|| LoadError::Integrity {
                path: cites_path.clone(),
                line: Some(lineno),
                msg: format!("edge references unknown node '{tok}'"),
            })?;
        }
        edges.push((pair[0], pair[1]));
    }

    assemble(name, n, edges, features, labels, opts)
}

#[derive(Serialize, Deserialize)]
struct JsonDataset {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    edges: Vec<(usize, usize)>,
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
}

fn load_json(path: &Path, opts: &LoadOptions) -> Result<Dataset, LoadError> {
    let text = read_to_string(path)?;
    let parsed: JsonDataset = serde_json::from_str(&text).map_err(|source| LoadError::Json {
        path: path.to_path_buf(),
        source,
    })?;

    let n = parsed.features.len();
    if parsed.labels.len() != n {
        return Err(LoadError::Integrity {
            path: path.to_path_buf(),
            line: None,
            msg: format!("{} labels for {} feature rows", parsed.labels.len(), n),
        });
    }
    let d = parsed.features.first().map_or(0, |r| r.len());
    let mut features = Array2::<f64>::zeros((n, d));
    for (i, row) in parsed.features.iter().enumerate() {
        if row.len() != d {
            return Err(LoadError::Integrity {
                path: path.to_path_buf(),
                line: None,
                msg: format!("feature row {i} has {} values, expected {d}", row.len()),
            });
        }
        for (j, &v) in row.iter().enumerate() {
            features[(i, j)] = v;
        }
    }
    for &(i, j) in &parsed.edges {
        if i >= n || j >= n {
            return Err(LoadError::Integrity {
                path: path.to_path_buf(),
                line: None,
                msg: format!("edge ({i}, {j}) references a node outside 0..{n}"),
            });
        }
    }
    let name = parsed.name.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".to_string())
    });
    assemble(name, n, parsed.edges, features, parsed.labels, opts)
}

fn assemble(
    name: String,
    n: usize,
    edges: Vec<(usize, usize)>,
    features: Array2<f64>,
    labels: Vec<usize>,
    opts: &LoadOptions,
) -> Result<Dataset, LoadError> {
    let graph = Graph::from_edges(n, edges)?;
    let mut features = FeatureMatrix::new(features)?;
    if opts.row_normalize {
        features.l1_normalize_rows();
    }
    // Degenerate single-class inputs still get a 2-class label space.
    let n_classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
    let labels = LabelVector::new(labels, n_classes)?;
    Ok(Dataset::new(graph, features, labels, name)?)
}

/// Writes a dataset as a single JSON object (`name`, `edges`, `features`,
/// `labels`). Floats are emitted in shortest round-trip form, so reloading
/// reproduces the dataset exactly.
pub fn save_dataset_json(ds: &Dataset, path: &Path) -> Result<(), LoadError> {
    let doc = JsonDataset {
        name: Some(ds.name.clone()),
        edges: ds.graph.edges().to_vec(),
        features: ds
            .features
            .matrix()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
        labels: ds.labels.as_slice().to_vec(),
    };
    let text = serde_json::to_string(&doc).expect("dataset serialization cannot fail");
    fs::write(path, text).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn write(path: &Path, text: &str) {
        fs::write(path, text).unwrap();
    }

    #[test]
    fn content_cites_round() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("toy");
        write(
            &with_suffix(&stem, ".content"),
            "a\t1\t0\t1\tml\nb\t0\t2\t0\tdb\nc\t1\t1\t0\tml\n",
        );
        write(&with_suffix(&stem, ".cites"), "a\tb\nb\ta\nb\tc\n");
        let ds = load_dataset(&stem, DatasetFormat::ContentCites, &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_nodes(), 3);
        assert_eq!(ds.graph.n_edges(), 2); // a-b deduplicated
        assert_eq!(ds.labels.as_slice(), &[0, 1, 0]); // first-appearance classes
        assert_eq!(ds.name, "toy");
        // row-normalized: node a had [1,0,1]
        assert_abs_diff_eq!(ds.features.row(0)[0], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn content_path_with_extension_is_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("toy");
        write(&with_suffix(&stem, ".content"), "x\t1\tl\n");
        write(&with_suffix(&stem, ".cites"), "");
        let ds = load_dataset(
            &with_suffix(&stem, ".content"),
            DatasetFormat::ContentCites,
            &LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.n_nodes(), 1);
    }

    #[test]
    fn unknown_node_in_cites_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("bad");
        write(&with_suffix(&stem, ".content"), "a\t1\tml\n");
        write(&with_suffix(&stem, ".cites"), "a\tb\n");
        let err = load_dataset(&stem, DatasetFormat::ContentCites, &LoadOptions::default())
            .unwrap_err();
        match err {
            LoadError::Integrity { line, msg, .. } => {
                assert_eq!(line, Some(1));
                assert!(msg.contains("unknown node 'b'"), "{msg}");
            }
            other => panic!("expected integrity error, got {other}"),
        }
    }

    #[test]
    fn duplicate_node_id_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("dup");
        write(&with_suffix(&stem, ".content"), "a\t1\tml\na\t0\tdb\n");
        write(&with_suffix(&stem, ".cites"), "");
        let err = load_dataset(&stem, DatasetFormat::ContentCites, &LoadOptions::default())
            .unwrap_err();
        assert!(matches!(err, LoadError::Integrity { line: Some(2), .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("mal");
        write(&with_suffix(&stem, ".content"), "a\t1\tml\nb\tnotanumber\t2\tdb\n");
        write(&with_suffix(&stem, ".cites"), "");
        let err = load_dataset(&stem, DatasetFormat::ContentCites, &LoadOptions::default())
            .unwrap_err();
        assert!(matches!(err, LoadError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn json_single_node_no_edges() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.json");
        write(&path, r#"{"edges": [], "features": [[1.0, 2.0]], "labels": [0]}"#);
        let ds = load_dataset(&path, DatasetFormat::Json, &LoadOptions::default()).unwrap();
        assert_eq!(ds.n_nodes(), 1);
        assert_eq!(ds.graph.n_edges(), 0);
        assert_eq!(ds.labels.n_classes(), 2);
        assert_eq!(ds.name, "one");
    }

    #[test]
    fn json_out_of_range_edge_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        write(&path, r#"{"edges": [[0, 3]], "features": [[1.0], [2.0]], "labels": [0, 1]}"#);
        let err = load_dataset(&path, DatasetFormat::Json, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, LoadError::Integrity { .. }));
    }

    #[test]
    fn json_save_load_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("round.json");
        write(
            &path,
            r#"{"edges": [[0,1],[1,2]], "features": [[1.0,3.0],[0.25,0.5],[0.0,0.0]], "labels": [0,1,1]}"#,
        );
        let opts = LoadOptions::default();
        let first = load_dataset(&path, DatasetFormat::Json, &opts).unwrap();
        let dump = dir.path().join("dump.json");
        save_dataset_json(&first, &dump).unwrap();
        let second = load_dataset(&dump, DatasetFormat::Json, &opts).unwrap();
        let third = {
            save_dataset_json(&second, &dump).unwrap();
            load_dataset(&dump, DatasetFormat::Json, &opts).unwrap()
        };
        assert_eq!(second.graph, first.graph);
        assert_eq!(second.labels, first.labels);
        assert_eq!(second.features, first.features);
        assert_eq!(second.name, first.name);
        assert_eq!(third, second);
    }
}
