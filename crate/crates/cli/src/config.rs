//! JSON configs: a `preset` row expanded to full [`TrainConfig`] values and
//! overridden field by field.

use std::path::{Path, PathBuf};

use infomgf::trainer::{Preset, TrainConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Overlays `fields` on `base`, reporting the first field that does not fit.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, fields: &Map<String, Value>) -> CliResult<T> {
    let Value::Object(mut merged) = serde_json::to_value(base).expect("config serializes") else {
        unreachable!("configs serialize to objects")
    };
    for (k, v) in fields {
        let mut single = merged.clone();
        single.insert(k.clone(), v.clone());
        serde_json::from_value::<T>(Value::Object(single)).map_err(|e| {
            if merged.contains_key(k) {
                CliError::input(format!("config field `{k}`: {e}"))
            } else {
                CliError::input(format!("config field `{k}`: unknown field"))
            }
        })?;
        merged.insert(k.clone(), v.clone());
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::input(format!("config: {e}")))
}

pub fn read_object(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::io_err(path, e))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::input(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::input(format!("{}: {e}", path.display()))),
    }
}

/// Parsed `train` config: the dataset location plus the training settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub preset: Preset,
    pub train: TrainConfig,
}

/// `dataset` is resolved against the config file's directory.
pub fn parse_run_config(mut fields: Map<String, Value>, base_dir: &Path) -> CliResult<RunConfig> {
    let dataset = match fields.remove("dataset") {
        Some(Value::String(s)) => base_dir.join(s),
        Some(other) => return Err(CliError::input(format!("config field `dataset`: expected a path, got {other}"))),
        None => return Err(CliError::input("config field `dataset`: missing")),
    };
    let preset = match fields.remove("preset") {
        Some(Value::String(s)) => s
            .parse()
            .map_err(|e| CliError::input(format!("config field `preset`: {e}")))?,
        Some(other) => return Err(CliError::input(format!("config field `preset`: expected a name, got {other}"))),
        None => Preset::Custom,
    };
    let train: TrainConfig = overlay(&TrainConfig::preset(preset), &fields)?;
    train.validate().map_err(|e| CliError::input(e.to_string()))?;
    Ok(RunConfig { dataset, preset, train })
}

pub fn load_run_config(path: &Path) -> CliResult<RunConfig> {
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_run_config(read_object(path)?, dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn parse(v: Value) -> CliResult<RunConfig> {
        let Value::Object(m) = v else { panic!() };
        parse_run_config(m, Path::new("/data"))
    }

    #[test]
    fn acm_preset_fills_table_values() {
        let c = parse(json!({"dataset": "acm", "preset": "acm"})).unwrap();
        let t = &c.train;
        assert_eq!((t.epochs, t.lr, t.d_h, t.d, t.k, t.r, t.layers), (100, 0.01, 128, 64, 15, 2, 2));
        assert_eq!((t.rho, t.tau_c), (0.5, 0.2));
        assert_eq!(c.dataset, Path::new("/data/acm"));
    }

    #[test]
    fn dblp_preset_and_override() {
        let c = parse(json!({"dataset": "d", "preset": "dblp", "k": 7})).unwrap();
        assert_eq!((c.train.lambda, c.train.d_h, c.train.d, c.train.k), (1.0, 64, 32, 7));
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse(json!({"dataset": "d", "lr": "fast"})).unwrap_err().to_string();
        assert!(e.contains("`lr`"), "{e}");
        let e = parse(json!({"dataset": "d", "lrr": 0.1})).unwrap_err().to_string();
        assert!(e.contains("`lrr`"), "{e}");
        let e = parse(json!({"dataset": "d", "rho": 2.0})).unwrap_err().to_string();
        assert!(e.contains("rho"), "{e}");
        let e = parse(json!({"preset": "acm"})).unwrap_err().to_string();
        assert!(e.contains("`dataset`"), "{e}");
        let e = parse(json!({"dataset": "d", "preset": "imdb"})).unwrap_err().to_string();
        assert!(e.contains("`preset`"), "{e}");
    }
}
