//! Graph collections and the on-disk matrix formats.
//!
//! Three formats are supported:
//!
//! * `dense-csv`: one matrix per file, comma separated, no header. Values are
//!   written with 17 significant digits so that a load after a save is
//!   bit-exact.
//! * `edge-list`: whitespace separated `u v [w]` lines. Lines starting with
//!   `#` or `%` are comments. Edges are undirected; a missing weight is 1.
//! * `json-tensor`: nested JSON arrays. Weight tensors use axis order
//!   `[k][l][q]`; plain matrices are written as `[row][col]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest |A_ij - A_ji| absorbed on load; larger gaps are an error.
pub const ASYMMETRY_TOL: f64 = 1e-12;

/// Supported matrix file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixFormat {
    DenseCsv,
    EdgeList,
    JsonTensor,
}

impl MatrixFormat {
    fn accepts(self, path: &Path) -> bool {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match (self, ext.as_deref()) {
            (MatrixFormat::DenseCsv, Some("csv")) => true,
            (MatrixFormat::EdgeList, Some("txt" | "edges" | "edgelist" | "el" | "tsv")) => true,
            (MatrixFormat::JsonTensor, Some("json")) => true,
            _ => false,
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense-csv" | "csv" => Ok(MatrixFormat::DenseCsv),
            "edge-list" | "edgelist" => Ok(MatrixFormat::EdgeList),
            "json-tensor" | "json" => Ok(MatrixFormat::JsonTensor),
            other => Err(Error::InvalidArgument(format!("unknown matrix format '{other}'"))),
        }
    }
}

/// A matrix file on disk together with its format and shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub path: PathBuf,
    pub format: MatrixFormat,
    pub rows: usize,
    pub cols: usize,
}

/// `m` symmetric hollow `n x n` adjacency matrices on a shared vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphCollection {
    graphs: Vec<DMatrix<f64>>,
    vertex_ids: Vec<String>,
}

impl GraphCollection {
    /// Validates and wraps a list of adjacency matrices.
    ///
    /// Asymmetry up to [`ASYMMETRY_TOL`] is averaged away and nonzero
    /// diagonals are zeroed; anything else that breaks the invariants is an
    /// error.
    pub fn new(graphs: Vec<DMatrix<f64>>, vertex_ids: Vec<String>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::InvalidArgument("a collection needs at least one graph".into()));
        }
        let n = vertex_ids.len();
        let mut cleaned = Vec::with_capacity(graphs.len());
        for (k, g) in graphs.into_iter().enumerate() {
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::Dimension(format!(
                    "graph {} is {}x{}, expected {n}x{n}",
                    k + 1,
                    g.nrows(),
                    g.ncols()
                )));
            }
            cleaned.push(clean_adjacency(g)?);
        }
        Ok(Self {
            graphs: cleaned,
            vertex_ids,
        })
    }

    /// Collection with vertex labels `1..=n`.
    pub fn from_matrices(graphs: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = graphs.first().map(|g| g.nrows()).unwrap_or(0);
        Self::new(graphs, (1..=n).map(|i| i.to_string()).collect())
    }

    pub fn m(&self) -> usize {
        self.graphs.len()
    }

    pub fn n(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn graphs(&self) -> &[DMatrix<f64>] {
        &self.graphs
    }

    pub fn graph(&self, k: usize) -> &DMatrix<f64> {
        &self.graphs[k]
    }

    pub fn vertex_ids(&self) -> &[String] {
        &self.vertex_ids
    }

    pub fn into_graphs(self) -> Vec<DMatrix<f64>> {
        self.graphs
    }
}

fn clean_adjacency(mut g: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    for j in 0..n {
        for i in 0..n {
            if !g[(i, j)].is_finite() {
                return Err(Error::NonFinite { i: i + 1, j: j + 1 });
            }
        }
    }
    for i in 0..n {
        if g[(i, i)] != 0.0 {
            log::warn!("zeroing diagonal entry ({}, {})", i + 1, i + 1);
            g[(i, i)] = 0.0;
        }
        for j in (i + 1)..n {
            let (a, b) = (g[(i, j)], g[(j, i)]);
            if a != b {
                if (a - b).abs() > ASYMMETRY_TOL {
                    return Err(Error::Asymmetric {
                        i: i + 1,
                        j: j + 1,
                        upper: a,
                        lower: b,
                    });
                }
                let avg = 0.5 * (a + b);
                g[(i, j)] = avg;
                g[(j, i)] = avg;
            }
        }
    }
    Ok(g)
}

/// Loads every file of the given format in `dir` (sorted by file name) as one
/// graph. Subdirectories and files of other formats are ignored.
pub fn load_collection(dir: impl AsRef<Path>, format: MatrixFormat) -> Result<GraphCollection> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && format.accepts(p))
        .filter(|p| {
            !p.file_name()
                .and_then(|s| s.to_str())
                .is_some_and(|s| s.starts_with('.'))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Empty(format!(
            "no {format:?} files in {}",
            dir.display()
        )));
    }
    match format {
        MatrixFormat::DenseCsv => {
            let graphs = files
                .iter()
                .map(read_dense_csv)
                .collect::<Result<Vec<_>>>()?;
            let n = graphs[0].nrows();
            for (g, path) in graphs.iter().zip(&files) {
                if g.nrows() != n || g.ncols() != n {
                    return Err(Error::Dimension(format!(
                        "{} is {}x{}, expected {n}x{n}",
                        path.display(),
                        g.nrows(),
                        g.ncols()
                    )));
                }
            }
            GraphCollection::from_matrices(graphs)
        }
        MatrixFormat::EdgeList => {
            let lists = files
                .iter()
                .map(read_edge_list)
                .collect::<Result<Vec<_>>>()?;
            let mut ids = BTreeSet::new();
            for list in &lists {
                for (u, v, _) in list {
                    ids.insert(u.clone());
                    ids.insert(v.clone());
                }
            }
            let vertex_ids = sort_ids(ids.into_iter().collect());
            let index: BTreeMap<&str, usize> = vertex_ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_str(), i))
                .collect();
            let n = vertex_ids.len();
            let graphs = lists
                .iter()
                .map(|list| {
                    let mut a = DMatrix::zeros(n, n);
                    for (u, v, w) in list {
                        let (i, j) = (index[u.as_str()], index[v.as_str()]);
                        if i == j {
                            continue;
                        }
                        let w = w.max(a[(i, j)]);
                        a[(i, j)] = w;
                        a[(j, i)] = w;
                    }
                    a
                })
                .collect();
            GraphCollection::new(graphs, vertex_ids)
        }
        MatrixFormat::JsonTensor => {
            let graphs = files
                .iter()
                .map(|p| load_matrix(p, MatrixFormat::JsonTensor))
                .collect::<Result<Vec<_>>>()?;
            GraphCollection::from_matrices(graphs)
        }
    }
}

/// Numeric ids sort numerically, anything else lexicographically.
fn sort_ids(mut ids: Vec<String>) -> Vec<String> {
    if ids.iter().all(|s| s.parse::<i64>().is_ok()) {
        ids.sort_by_key(|s| s.parse::<i64>().unwrap());
    } else {
        ids.sort();
    }
    ids
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn read_dense_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let tok = tok.trim();
                tok.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("not a number: '{tok}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected {} columns, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let m = DMatrix::from_row_iterator(nrows, ncols, rows.into_iter().flatten());
    for j in 0..ncols {
        for i in 0..nrows {
            if m[(i, j)].is_nan() {
                return Err(Error::NonFinite { i: i + 1, j: j + 1 });
            }
        }
    }
    Ok(m)
}

type Edge = (String, String, f64);

fn read_edge_list(path: impl AsRef<Path>) -> Result<Vec<Edge>> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let parse_err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            msg,
        };
        let w = match toks.len() {
            2 => 1.0,
            3 => toks[2]
                .parse::<f64>()
                .map_err(|_| parse_err(format!("bad weight '{}'", toks[2])))?,
            k => return Err(parse_err(format!("expected 2 or 3 columns, found {k}"))),
        };
        if !w.is_finite() {
            return Err(parse_err("non-finite weight".into()));
        }
        edges.push((toks[0].to_string(), toks[1].to_string(), w));
    }
    Ok(edges)
}

/// Loads a single matrix. Edge lists are indexed by their sorted vertex ids.
pub fn load_matrix(path: impl AsRef<Path>, format: MatrixFormat) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    match format {
        MatrixFormat::DenseCsv => read_dense_csv(path),
        MatrixFormat::EdgeList => {
            let edges = read_edge_list(path)?;
            let ids: BTreeSet<String> = edges
                .iter()
                .flat_map(|(u, v, _)| [u.clone(), v.clone()])
                .collect();
            let ids = sort_ids(ids.into_iter().collect());
            let index: BTreeMap<&str, usize> =
                ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
            let n = ids.len();
            let mut a = DMatrix::zeros(n, n);
            for (u, v, w) in &edges {
                let (i, j) = (index[u.as_str()], index[v.as_str()]);
                if i != j {
                    let w = w.max(a[(i, j)]);
                    a[(i, j)] = w;
                    a[(j, i)] = w;
                }
            }
            Ok(a)
        }
        MatrixFormat::JsonTensor => {
            let rows: Vec<Vec<f64>> = serde_json::from_str(&read_to_string(path)?)?;
            let nrows = rows.len();
            let ncols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != ncols) {
                return Err(Error::Dimension(format!("ragged rows in {}", path.display())));
            }
            Ok(DMatrix::from_row_iterator(nrows, ncols, rows.into_iter().flatten()))
        }
    }
}

/// Formats a value with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a matrix. Edge lists store the upper triangle's nonzero entries
/// with 1-based vertex indices.
pub fn save_matrix(x: &DMatrix<f64>, path: impl AsRef<Path>, format: MatrixFormat) -> Result<MatrixFile> {
    let path = path.as_ref();
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if !x[(i, j)].is_finite() {
                return Err(Error::NonFinite { i: i + 1, j: j + 1 });
            }
        }
    }
    let mut out = String::new();
    match format {
        MatrixFormat::DenseCsv => {
            for i in 0..x.nrows() {
                let row: Vec<String> = (0..x.ncols()).map(|j| format_f64(x[(i, j)])).collect();
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        MatrixFormat::EdgeList => {
            if x.nrows() != x.ncols() {
                return Err(Error::Dimension("edge lists need a square matrix".into()));
            }
            for i in 0..x.nrows() {
                for j in (i + 1)..x.ncols() {
                    let w = x[(i, j)];
                    if w != 0.0 {
                        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_f64(w));
                    }
                }
            }
        }
        MatrixFormat::JsonTensor => {
            let rows: Vec<Vec<f64>> = (0..x.nrows())
                .map(|i| (0..x.ncols()).map(|j| x[(i, j)]).collect())
                .collect();
            out = serde_json::to_string(&rows)?;
        }
    }
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    Ok(MatrixFile {
        path: path.to_path_buf(),
        format,
        rows: x.nrows(),
        cols: x.ncols(),
    })
}

/// Writes every graph of a collection as `graph_001.csv`, `graph_002.csv`, ...
pub fn save_collection(c: &GraphCollection, dir: impl AsRef<Path>) -> Result<Vec<MatrixFile>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let width = c.m().to_string().len().max(3);
    c.graphs()
        .iter()
        .enumerate()
        .map(|(k, g)| {
            save_matrix(
                g,
                dir.join(format!("graph_{:0width$}.csv", k + 1, width = width)),
                MatrixFormat::DenseCsv,
            )
        })
        .collect()
}

/// Reads a rank-3 tensor stored as nested arrays.
pub fn load_tensor(path: impl AsRef<Path>) -> Result<Vec<Vec<Vec<f64>>>> {
    let path = path.as_ref();
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

pub fn save_tensor(t: &[Vec<Vec<f64>>], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(t)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Options for [`preprocess`], applied in the field order listed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    pub binarize: bool,
    pub symmetrize: bool,
    pub drop_isolated: bool,
    pub intersect_vertices: bool,
}

/// Binarizes, symmetrizes (entrywise max) and prunes vertices.
///
/// Vertex pruning is repeated until nothing changes: removing a vertex can
/// isolate its neighbours, and the fixed point makes the operation
/// idempotent.
pub fn preprocess(c: &GraphCollection, opts: &PreprocessOptions) -> Result<GraphCollection> {
    let mut graphs: Vec<DMatrix<f64>> = c.graphs().to_vec();
    if opts.binarize {
        for g in &mut graphs {
            g.apply(|x| *x = if *x != 0.0 { 1.0 } else { 0.0 });
        }
    }
    if opts.symmetrize {
        for g in &mut graphs {
            let t = g.transpose();
            g.zip_apply(&t, |a, b| *a = a.max(b));
        }
    }
    let mut keep: Vec<usize> = (0..c.n()).collect();
    if opts.drop_isolated || opts.intersect_vertices {
        loop {
            let active: Vec<Vec<bool>> = graphs
                .iter()
                .map(|g| {
                    keep.iter()
                        .map(|&i| keep.iter().any(|&j| g[(i, j)] != 0.0))
                        .collect()
                })
                .collect();
            let next: Vec<usize> = keep
                .iter()
                .enumerate()
                .filter(|&(pos, _)| {
                    let in_any = active.iter().any(|a| a[pos]);
                    let in_all = active.iter().all(|a| a[pos]);
                    (!opts.drop_isolated || in_any) && (!opts.intersect_vertices || in_all)
                })
                .map(|(_, &i)| i)
                .collect();
            if next.len() == keep.len() {
                break;
            }
            keep = next;
            if keep.is_empty() {
                break;
            }
        }
    }
    if keep.is_empty() {
        return Err(Error::Empty("preprocessing removed every vertex".into()));
    }
    let graphs = graphs
        .iter()
        .map(|g| g.select_rows(&keep).select_columns(&keep))
        .collect();
    let ids = keep.iter().map(|&i| c.vertex_ids()[i].clone()).collect();
    GraphCollection::new(graphs, ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn three_empty_graphs() {
        let tmp = tempfile::tempdir().unwrap();
        for k in 0..3 {
            save_matrix(&DMatrix::zeros(4, 4), tmp.path().join(format!("g{k}.csv")), MatrixFormat::DenseCsv)
                .unwrap();
        }
        let c = load_collection(tmp.path(), MatrixFormat::DenseCsv).unwrap();
        assert_eq!((c.m(), c.n()), (3, 4));
    }

    #[test]
    fn asymmetric_file_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.csv", "0,1,0\n0,0,0\n0,0,0\n");
        let err = load_collection(tmp.path(), MatrixFormat::DenseCsv).unwrap_err();
        assert!(err.to_string().contains("asymmetric"), "{err}");
    }

    #[test]
    fn tiny_asymmetry_is_absorbed() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.csv", "0,0.5\n0.5000000000000004,0\n");
        let c = load_collection(tmp.path(), MatrixFormat::DenseCsv).unwrap();
        assert_eq!(c.graph(0)[(0, 1)], c.graph(0)[(1, 0)]);
    }

    #[test]
    fn nan_and_dimension_errors() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.csv", "0,NaN\nNaN,0\n");
        assert!(matches!(
            load_collection(tmp.path(), MatrixFormat::DenseCsv),
            Err(Error::NonFinite { .. })
        ));
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.csv", "0,1\n1,0\n");
        write(tmp.path(), "b.csv", "0,1,0\n1,0,0\n0,0,0\n");
        assert!(matches!(
            load_collection(tmp.path(), MatrixFormat::DenseCsv),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn edge_list_is_symmetrized() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "g.txt", "1 2\n2 3\n");
        let c = load_collection(tmp.path(), MatrixFormat::EdgeList).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0., 1., 0., 1., 0., 1., 0., 1., 0.]);
        assert_eq!(c.graph(0), &expected);
        assert_eq!(c.vertex_ids(), &["1", "2", "3"]);
    }

    #[test]
    fn edge_lists_share_the_union_of_vertices() {
        let tmp = tempfile::tempdir().unwrap();
        write(tmp.path(), "a.txt", "# comment\n1 2 0.5\n");
        write(tmp.path(), "b.txt", "2 10\n");
        let c = load_collection(tmp.path(), MatrixFormat::EdgeList).unwrap();
        assert_eq!(c.vertex_ids(), &["1", "2", "10"]);
        assert_eq!(c.graph(0)[(0, 1)], 0.5);
        assert_eq!(c.graph(1)[(1, 2)], 1.0);
    }

    #[test]
    fn dense_csv_round_trip_is_bit_exact() {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("x.csv");
        let id = DMatrix::<f64>::identity(3, 3);
        save_matrix(&id, &path, MatrixFormat::DenseCsv).unwrap();
        assert_eq!(load_matrix(&path, MatrixFormat::DenseCsv).unwrap(), id);

        // 4-digit weight matrix reported for four graphs with R = I.
        let alpha = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.4259, 0., 1., 0.5741, 1., 2.4259, 0., 0.5741, 0., 1., 2.4259, 0.5741, 0.4259,
                0.4259, 0.4259, 2.7222,
            ],
        );
        save_matrix(&alpha, &path, MatrixFormat::DenseCsv).unwrap();
        assert_eq!(load_matrix(&path, MatrixFormat::DenseCsv).unwrap(), alpha);

        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut r = DMatrix::from_fn(10, 10, |_, _| next() * 1e3);
        r = &r + r.transpose();
        save_matrix(&r, &path, MatrixFormat::DenseCsv).unwrap();
        let back = load_matrix(&path, MatrixFormat::DenseCsv).unwrap();
        assert!(r.iter().zip(back.iter()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn edge_list_and_json_round_trip() {
        let tmp = tempfile::tempdir().unwrap();
        let a = DMatrix::from_row_slice(3, 3, &[0., 0.25, 1., 0.25, 0., 2., 1., 2., 0.]);
        let p = tmp.path().join("a.txt");
        save_matrix(&a, &p, MatrixFormat::EdgeList).unwrap();
        assert_eq!(load_matrix(&p, MatrixFormat::EdgeList).unwrap(), a);
        let p = tmp.path().join("a.json");
        save_matrix(&a, &p, MatrixFormat::JsonTensor).unwrap();
        assert_eq!(load_matrix(&p, MatrixFormat::JsonTensor).unwrap(), a);
    }

    #[test]
    fn binarize_and_drop_isolated() {
        let mut g = DMatrix::zeros(4, 4);
        g[(0, 1)] = 0.7;
        g[(1, 0)] = 0.7;
        g[(1, 2)] = 2.0;
        g[(2, 1)] = 2.0;
        let c = GraphCollection::from_matrices(vec![g.clone(), g.clone(), g]).unwrap();
        let out = preprocess(
            &c,
            &PreprocessOptions {
                binarize: true,
                drop_isolated: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.n(), 3);
        assert_eq!(out.m(), 3);
        assert_eq!(out.graph(0)[(0, 1)], 1.0);
        assert_eq!(out.vertex_ids(), &["1", "2", "3"]);
    }

    #[test]
    fn preprocess_to_nothing_is_an_error() {
        let c = GraphCollection::from_matrices(vec![DMatrix::zeros(3, 3)]).unwrap();
        let opts = PreprocessOptions {
            drop_isolated: true,
            ..Default::default()
        };
        assert!(matches!(preprocess(&c, &opts), Err(Error::Empty(_))));
    }

    /// Three layers on 500 vertices: 422 vertices carry a cycle in every
    /// layer, the rest only appear in some layers or hang off a vertex that
    /// does.
    #[test]
    fn common_vertex_surrogate_keeps_422() {
        let n = 500;
        let core = 422;
        let mut layers = vec![DMatrix::zeros(n, n); 3];
        let link = |g: &mut DMatrix<f64>, i: usize, j: usize| {
            g[(i, j)] = 1.0;
            g[(j, i)] = 1.0;
        };
        for g in layers.iter_mut() {
            for i in 0..core {
                link(g, i, (i + 1) % core);
            }
        }
        for v in core..n {
            // layer membership of the extra vertices: never all three
            let k = v % 3;
            link(&mut layers[k], v, v % core);
            if v % 2 == 0 {
                link(&mut layers[(k + 1) % 3], v, (v + 7) % core);
            }
        }
        let c = GraphCollection::from_matrices(layers).unwrap();
        let opts = PreprocessOptions {
            binarize: true,
            symmetrize: true,
            drop_isolated: true,
            intersect_vertices: true,
        };
        let out = preprocess(&c, &opts).unwrap();
        assert_eq!((out.m(), out.n()), (3, core));
        assert_eq!(preprocess(&out, &opts).unwrap(), out);
    }
}
