//! On-disk dataset bundles.
//!
//! A bundle directory holds `meta.json`, `features.bin` (row-major
//! little-endian `f32`), one `view_<i>.edges` per view with each undirected
//! edge once as `src<TAB>dst` and `src < dst`, and optionally `labels.txt`
//! and `splits.json`.

use std::fs;
use std::path::Path;

use infomgf::eval::SplitSpec;
use infomgf::{Dense, Graph};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleMeta {
    pub nodes: usize,
    pub views: usize,
    pub feature_dim: usize,
    pub class_count: usize,
    pub view_names: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub graph: Graph,
    pub view_names: Vec<String>,
    pub splits: Option<SplitSpec>,
}

impl DatasetBundle {
    pub fn new(graph: Graph) -> Self {
        let view_names = (0..graph.view_count()).map(|i| format!("view_{i}")).collect();
        Self {
            graph,
            view_names,
            splits: None,
        }
    }

    pub fn meta(&self) -> BundleMeta {
        BundleMeta {
            nodes: self.graph.node_count(),
            views: self.graph.view_count(),
            feature_dim: self.graph.feature_dim(),
            class_count: self.graph.class_count,
            view_names: self.view_names.clone(),
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn edges_file(view: usize) -> String {
    format!("view_{view}.edges")
}

/// Row-major little-endian `f32`, the format of `features.bin`.
pub fn encode_f32(m: &Dense) -> Vec<u8> {
    m.data().iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

pub fn decode_f32(path: &Path, bytes: &[u8], rows: usize, cols: usize) -> CliResult<Dense> {
    if bytes.len() != rows * cols * 4 {
        return Err(CliError::input(format!(
            "{}: {} bytes, expected {rows}x{cols} f32 = {} bytes",
            path.display(),
            bytes.len(),
            rows * cols * 4
        )));
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(Dense::from_vec(rows, cols, data)?)
}

pub fn write_f32_matrix(path: &Path, m: &Dense) -> CliResult<()> {
    write(path, &encode_f32(m))
}

pub fn read_f32_matrix(path: &Path, rows: usize, cols: usize) -> CliResult<Dense> {
    decode_f32(path, &read(path)?, rows, cols)
}

fn parse_edges(path: &Path, text: &str, n: usize) -> CliResult<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let at = |msg: String| CliError::input(format!("{}:{}: {msg}", path.display(), i + 1));
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(at(format!("expected \"src<TAB>dst\", got {line:?}")));
        };
        let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| at(format!("bad node index {s:?}")));
        let (a, b) = (parse(a)?, parse(b)?);
        if a >= n || b >= n {
            return Err(at(format!("endpoint {} out of range for {n} nodes", a.max(b))));
        }
        if a >= b {
            return Err(at(format!("expected src < dst, got {a} {b}")));
        }
        if !seen.insert((a, b)) {
            return Err(at(format!("duplicate edge {a} {b}")));
        }
        edges.push((a, b));
    }
    Ok(edges)
}

fn parse_labels(path: &Path, text: &str, n: usize, classes: usize) -> CliResult<Vec<usize>> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() != n {
        return Err(CliError::input(format!(
            "{}: {} lines, meta.json declares {n} nodes",
            path.display(),
            lines.len()
        )));
    }
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let at = |msg: String| CliError::input(format!("{}:{}: {msg}", path.display(), i + 1));
            let y: usize = l.trim().parse().map_err(|_| at(format!("bad class id {l:?}")))?;
            if y >= classes {
                return Err(at(format!("class {y} >= class_count {classes}")));
            }
            Ok(y)
        })
        .collect()
}

pub fn load_bundle(dir: &Path) -> CliResult<DatasetBundle> {
    let meta_path = dir.join("meta.json");
    let meta: BundleMeta = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", meta_path.display())))?;
    if meta.view_names.len() != meta.views {
        return Err(CliError::input(format!(
            "{}: {} view names for {} views",
            meta_path.display(),
            meta.view_names.len(),
            meta.views
        )));
    }
    let n = meta.nodes;
    let features_path = dir.join("features.bin");
    let features = read_f32_matrix(&features_path, n, meta.feature_dim)?;
    if let Some(i) = features.data().iter().position(|v| !v.is_finite()) {
        return Err(CliError::input(format!(
            "{}: non-finite value at row {}, column {}",
            features_path.display(),
            i / meta.feature_dim,
            i % meta.feature_dim
        )));
    }
    let mut views = Vec::with_capacity(meta.views);
    for v in 0..meta.views {
        let path = dir.join(edges_file(v));
        let edges = parse_edges(&path, &read_text(&path)?, n)?;
        views.push(Graph::adjacency_from_edges(n, &edges)?);
    }
    let labels_path = dir.join("labels.txt");
    let labels = if labels_path.exists() {
        Some(parse_labels(&labels_path, &read_text(&labels_path)?, n, meta.class_count)?)
    } else {
        None
    };
    let splits_path = dir.join("splits.json");
    let splits = if splits_path.exists() {
        let s: SplitSpec = serde_json::from_str(&read_text(&splits_path)?)
            .map_err(|e| CliError::input(format!("{}: {e}", splits_path.display())))?;
        s.validate(n)
            .map_err(|e| CliError::input(format!("{}: {e}", splits_path.display())))?;
        Some(s)
    } else {
        None
    };
    Ok(DatasetBundle {
        graph: Graph::new(views, features, labels, meta.class_count)?,
        view_names: meta.view_names,
        splits,
    })
}

pub fn save_bundle(b: &DatasetBundle, dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let meta = serde_json::to_vec_pretty(&b.meta()).expect("meta serializes");
    write(&dir.join("meta.json"), &meta)?;
    write_f32_matrix(&dir.join("features.bin"), &b.graph.features)?;
    for (v, a) in b.graph.views.iter().enumerate() {
        let mut text = String::new();
        for (s, d) in Graph::edge_list(a) {
            text.push_str(&format!("{s}\t{d}\n"));
        }
        write(&dir.join(edges_file(v)), text.as_bytes())?;
    }
    if let Some(labels) = &b.graph.labels {
        let text: String = labels.iter().map(|y| format!("{y}\n")).collect();
        write(&dir.join("labels.txt"), text.as_bytes())?;
    }
    if let Some(s) = &b.splits {
        write(&dir.join("splits.json"), &serde_json::to_vec(s).expect("split serializes"))?;
    }
    Ok(())
}

/// SHA-256 over every bundle file in a fixed order, each preceded by
/// `"<name> <length>\0"`.
pub fn bundle_hash(dir: &Path) -> CliResult<String> {
    let meta_path = dir.join("meta.json");
    let meta: BundleMeta = serde_json::from_str(&read_text(&meta_path)?)
        .map_err(|e| CliError::input(format!("{}: {e}", meta_path.display())))?;
    let mut names = vec!["meta.json".to_string(), "features.bin".to_string()];
    names.extend((0..meta.views).map(edges_file));
    names.extend(
        ["labels.txt", "splits.json"]
            .into_iter()
            .filter(|f| dir.join(f).exists())
            .map(String::from),
    );
    let mut h = Sha256::new();
    for name in names {
        let bytes = read(&dir.join(&name))?;
        h.update(format!("{name} {}\0", bytes.len()).as_bytes());
        h.update(&bytes);
    }
    Ok(format!("{:x}", h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use infomgf::eval::{gen_sbm, SbmSpec};

    fn small() -> DatasetBundle {
        let g = gen_sbm(&SbmSpec {
            n: 40,
            ..SbmSpec::reference(3)
        })
        .unwrap();
        let g = Graph::new(g.views, g.features.map(|v| v as f32 as f64), g.labels, g.class_count).unwrap();
        let mut b = DatasetBundle::new(g);
        b.splits = Some(SplitSpec::random(40, 0.5, 0.25, 0));
        b
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let b = small();
        save_bundle(&b, dir.path()).unwrap();
        assert_eq!(load_bundle(dir.path()).unwrap(), b);
    }

    #[test]
    fn edge_diagnostics_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&small(), dir.path()).unwrap();
        let p = dir.path().join("view_1.edges");
        let mut text = fs::read_to_string(&p).unwrap();
        text.push_str("7\t3\n");
        let line = text.lines().count();
        fs::write(&p, text).unwrap();
        let err = load_bundle(dir.path()).unwrap_err().to_string();
        assert!(err.contains(&format!("view_1.edges:{line}:")), "{err}");
        assert!(err.contains("src < dst"), "{err}");
    }

    #[test]
    fn rejects_inconsistent_files() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("view_0.edges"), "0\t99\n").unwrap();
        assert!(load_bundle(dir.path()).unwrap_err().to_string().contains("out of range"));

        save_bundle(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("labels.txt"), "0\n1\n").unwrap();
        assert!(load_bundle(dir.path()).unwrap_err().to_string().contains("2 lines"));

        save_bundle(&small(), dir.path()).unwrap();
        fs::write(dir.path().join("features.bin"), [0u8; 12]).unwrap();
        assert!(load_bundle(dir.path()).unwrap_err().to_string().contains("12 bytes"));
    }

    #[test]
    fn hash_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&small(), dir.path()).unwrap();
        let h = bundle_hash(dir.path()).unwrap();
        assert_eq!(h, bundle_hash(dir.path()).unwrap());
        assert_eq!(h.len(), 64);
        fs::write(dir.path().join("view_0.edges"), "0\t1\n").unwrap();
        assert_ne!(h, bundle_hash(dir.path()).unwrap());
    }
}
