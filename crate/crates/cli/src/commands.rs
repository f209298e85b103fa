//! The `train`, `eval`, `synth`, `perturb` and `stats` verbs.

use std::fs;
use std::path::{Path, PathBuf};

use infomgf::checkpoint::save_checkpoint;
use infomgf::eval::{
    classify_on_graph, clustering_metrics, gen_sbm, graph_stats, kmeans, perturb_edges, perturb_features,
    MetricReport, PerturbMode, SbmSpec, SplitSpec, EVAL_SEEDS, KMEANS_RESTARTS,
};
use infomgf::trainer::{train, write_loss_csv, Preset, TrainConfig, Variant};
use infomgf::{substream, Sparse};
use serde::{Deserialize, Serialize};

use crate::bundle::{bundle_hash, load_bundle, read_f32_matrix, save_bundle, write_f32_matrix, DatasetBundle};
use crate::config::{load_run_config, overlay, read_object};
use crate::error::{io_err, CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Train/val/test fractions of the split written with synthetic bundles.
pub const SYNTH_SPLIT: (f64, f64) = (0.2, 0.2);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutputs {
    pub checkpoint: String,
    pub fused_graph: String,
    pub representations: String,
    pub loss_csv: String,
}

impl Default for RunOutputs {
    fn default() -> Self {
        Self {
            checkpoint: "model.ckpt".into(),
            fused_graph: "fused_graph.edges".into(),
            representations: "representations.bin".into(),
            loss_csv: "loss.csv".into(),
        }
    }
}

/// Everything needed to rerun a training job; output paths are relative to
/// the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: TrainConfig,
    pub preset: Preset,
    pub dataset: PathBuf,
    pub data_hash: String,
    pub seeds: Vec<u64>,
    pub outputs: RunOutputs,
    pub representation_shape: [usize; 2],
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(v).expect("serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_manifest(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Upper triangle (diagonal included) as `src<TAB>dst<TAB>w`.
pub fn write_weighted_edges(path: &Path, a: &Sparse) -> CliResult<()> {
    let mut text = String::new();
    for (r, c, w) in a.triplets() {
        if r <= c {
            text.push_str(&format!("{r}\t{c}\t{w}\n"));
        }
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_weighted_edges(path: &Path, n: usize) -> CliResult<Sparse> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut trip = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let at = |msg: &str| CliError::input(format!("{}:{}: {msg}", path.display(), i + 1));
        let f: Vec<&str> = line.split('\t').collect();
        let [r, c, w] = f[..] else {
            return Err(at("expected \"src<TAB>dst<TAB>w\""));
        };
        let r: usize = r.parse().map_err(|_| at("bad src"))?;
        let c: usize = c.parse().map_err(|_| at("bad dst"))?;
        let w: f64 = w.parse().map_err(|_| at("bad weight"))?;
        if r >= n || c >= n {
            return Err(at("endpoint out of range"));
        }
        trip.push((r, c, w));
        if r != c {
            trip.push((c, r, w));
        }
    }
    Ok(Sparse::from_triplets(n, n, trip)?)
}

/// Trains from a config file or reruns a manifest; writes all artifacts and
/// the new manifest into `out`.
pub fn cmd_train(
    config: Option<&Path>,
    manifest: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<RunManifest> {
    let (dataset, preset, mut cfg, expected_hash, default_out) = match (config, manifest) {
        (Some(c), None) => {
            let rc = load_run_config(c)?;
            (rc.dataset, rc.preset, rc.train, None, None)
        }
        (None, Some(m)) => {
            let rm = read_manifest(m)?;
            let dir = m.parent().map(Path::to_path_buf);
            (rm.dataset, rm.preset, rm.config, Some(rm.data_hash), dir)
        }
        _ => return Err(CliError::input("train needs exactly one of --config or --manifest")),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out
        .map(Path::to_path_buf)
        .or(default_out)
        .ok_or_else(|| CliError::input("train needs --out"))?;
    if !dataset.is_dir() {
        return Err(CliError::input(format!("dataset {} is not a directory", dataset.display())));
    }
    let data_hash = bundle_hash(&dataset)?;
    if let Some(h) = expected_hash {
        if h != data_hash {
            return Err(CliError::input(format!(
                "dataset {} hash {data_hash} differs from manifest {h}",
                dataset.display()
            )));
        }
    }
    let bundle = load_bundle(&dataset)?;
    let result = train(&bundle.graph, &cfg)?;

    create_dir(&out)?;
    let outputs = RunOutputs::default();
    save_checkpoint(&result.model, &out.join(&outputs.checkpoint))?;
    write_weighted_edges(&out.join(&outputs.fused_graph), &result.fused_graph)?;
    write_f32_matrix(&out.join(&outputs.representations), &result.fused_reps)?;
    let csv_path = out.join(&outputs.loss_csv);
    let csv = fs::File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    write_loss_csv(&result.loss_history, std::io::BufWriter::new(csv))?;

    let manifest = RunManifest {
        seeds: vec![cfg.seed],
        config: cfg,
        preset,
        dataset: fs::canonicalize(&dataset).map_err(|e| io_err(&dataset, e))?,
        data_hash,
        outputs,
        representation_shape: [result.fused_reps.n_rows(), result.fused_reps.n_cols()],
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalTask {
    Cluster,
    Classify,
}

impl std::str::FromStr for EvalTask {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "cluster" => Ok(Self::Cluster),
            "classify" => Ok(Self::Classify),
            other => Err(CliError::input(format!("task must be cluster or classify, got {other:?}"))),
        }
    }
}

fn dataset_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Five-seed clustering of `Z` or classification on the fused graph.
pub fn cmd_eval(manifest_path: &Path, task: EvalTask, out: Option<&Path>) -> CliResult<MetricReport> {
    let m = read_manifest(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let bundle = load_bundle(&m.dataset)?;
    let g = &bundle.graph;
    let labels = g
        .labels
        .as_ref()
        .ok_or_else(|| CliError::input(format!("dataset {} has no labels.txt", m.dataset.display())))?;
    let variant = match m.config.variant {
        Variant::Ra => "ra",
        Variant::La => "la",
    };
    let mut report = MetricReport::new(
        match task {
            EvalTask::Cluster => "cluster",
            EvalTask::Classify => "classify",
        },
        &dataset_name(&m.dataset),
        variant,
        &EVAL_SEEDS,
    );
    match task {
        EvalTask::Cluster => {
            let [rows, cols] = m.representation_shape;
            let z = read_f32_matrix(&dir.join(&m.outputs.representations), rows, cols)?;
            if !z.is_finite() {
                return Err(CliError::Numeric("representations contain NaN or infinity".into()));
            }
            let mut cols: [Vec<f64>; 4] = Default::default();
            for &seed in &EVAL_SEEDS {
                let pred = kmeans(&z, g.class_count, KMEANS_RESTARTS, seed)?;
                let r = clustering_metrics(&pred, labels, g.class_count)?;
                for (col, v) in cols.iter_mut().zip([r.acc, r.nmi, r.ari, r.f1]) {
                    col.push(v);
                }
            }
            for (name, col) in ["acc", "nmi", "ari", "f1"].into_iter().zip(&cols) {
                report.add(name, col);
            }
        }
        EvalTask::Classify => {
            let split: &SplitSpec = bundle
                .splits
                .as_ref()
                .ok_or_else(|| CliError::input(format!("dataset {} has no splits.json", m.dataset.display())))?;
            let a = read_weighted_edges(&dir.join(&m.outputs.fused_graph), g.node_count())?;
            let (mut macro_f1, mut micro_f1) = (Vec::new(), Vec::new());
            for &seed in &EVAL_SEEDS {
                let s = classify_on_graph(&a, &g.features, labels, split, m.config.d_h, seed)?;
                macro_f1.push(s.macro_f1);
                micro_f1.push(s.micro_f1);
            }
            report.add("macro_f1", &macro_f1);
            report.add("micro_f1", &micro_f1);
        }
    }
    if let Some(p) = out {
        write_json(p, &report)?;
    }
    Ok(report)
}

/// Writes a synthetic multiplex SBM bundle. Fields missing from the spec file
/// take the reference values.
pub fn cmd_synth(spec_path: Option<&Path>, seed: Option<u64>, out: &Path) -> CliResult<DatasetBundle> {
    let mut fields = match spec_path {
        Some(p) => read_object(p)?,
        None => Default::default(),
    };
    if let Some(s) = seed {
        fields.insert("seed".into(), s.into());
    }
    let spec: SbmSpec = overlay(&SbmSpec::reference(0), &fields)?;
    spec.validate().map_err(|e| CliError::input(e.to_string()))?;
    let mut bundle = DatasetBundle::new(gen_sbm(&spec)?);
    bundle.splits = Some(SplitSpec::random(spec.n, SYNTH_SPLIT.0, SYNTH_SPLIT.1, spec.seed));
    save_bundle(&bundle, out)?;
    write_json(&out.join("sbm.json"), &spec)?;
    Ok(bundle)
}

/// Record written next to a perturbed bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbRecord {
    pub source: PathBuf,
    pub source_hash: String,
    pub rate: f64,
    pub mode: String,
    pub seed: u64,
}

/// `mode` is `add` or `delete` for edges, `noise` for Gaussian feature noise
/// of standard deviation `rate`.
pub fn cmd_perturb(bundle_dir: &Path, rate: f64, mode: &str, seed: u64, out: &Path) -> CliResult<DatasetBundle> {
    let mut b = load_bundle(bundle_dir)?;
    let mut rng = substream(seed, 0, 0, "perturb");
    b.graph = if mode == "noise" {
        let x = perturb_features(&b.graph.features, rate, &mut rng)?;
        infomgf::Graph::new(b.graph.views.clone(), x, b.graph.labels.clone(), b.graph.class_count)?
    } else {
        let m: PerturbMode = mode
            .parse()
            .map_err(|_| CliError::input(format!("mode must be add, delete or noise, got {mode:?}")))?;
        perturb_edges(&b.graph, rate, m, &mut rng)?
    };
    save_bundle(&b, out)?;
    let record = PerturbRecord {
        source: fs::canonicalize(bundle_dir).map_err(|e| io_err(bundle_dir, e))?,
        source_hash: bundle_hash(bundle_dir)?,
        rate,
        mode: mode.into(),
        seed,
    };
    write_json(&out.join("perturb.json"), &record)?;
    Ok(b)
}

pub fn cmd_stats(bundle_dir: &Path, out: Option<&Path>) -> CliResult<serde_json::Value> {
    let b = load_bundle(bundle_dir)?;
    let mut v = serde_json::to_value(graph_stats(&b.graph)).expect("stats serialize");
    v["view_names"] = serde_json::to_value(&b.view_names).expect("names serialize");
    if let Some(p) = out {
        write_json(p, &v)?;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_edges_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let a = Sparse::from_triplets(
            3,
            3,
            [(0, 0, 0.1 + 0.2), (0, 2, 1.0 / 3.0), (2, 0, 1.0 / 3.0), (1, 1, 1.0), (2, 2, 7e-300)],
        )
        .unwrap();
        let p = dir.path().join("g.edges");
        write_weighted_edges(&p, &a).unwrap();
        assert_eq!(read_weighted_edges(&p, 3).unwrap(), a);
        assert!(read_weighted_edges(&p, 2).is_err());
    }

    #[test]
    fn task_names() {
        assert_eq!("cluster".parse::<EvalTask>().unwrap(), EvalTask::Cluster);
        assert_eq!("bogus".parse::<EvalTask>().unwrap_err().exit_code(), 2);
    }
}
