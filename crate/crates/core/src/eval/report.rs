use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

/// Multi-seed metric report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: String,
    pub dataset: String,
    pub variant: String,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<String, Summary>,
}

impl MetricReport {
    pub fn new(task: &str, dataset: &str, variant: &str, seeds: &[u64]) -> Self {
        Self {
            task: task.into(),
            dataset: dataset.into(),
            variant: variant.into(),
            seeds: seeds.to_vec(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, name: &str, values: &[f64]) {
        self.metrics.insert(name.into(), Summary::of(values));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }
}
