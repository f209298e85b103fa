use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::KnnMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Random feature masking and edge dropping.
    Ra,
    /// Learnable Gumbel-sigmoid edge weights trained against an upper bound.
    La,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Acm,
    Dblp,
    Yelp,
    Mag,
    Custom,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acm" => Ok(Self::Acm),
            "dblp" => Ok(Self::Dblp),
            "yelp" => Ok(Self::Yelp),
            "mag" => Ok(Self::Mag),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Config(format!("unknown preset {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    pub epochs: usize,
    pub lr: f64,
    pub lr_gen: f64,
    pub d_h: usize,
    pub d: usize,
    pub k: usize,
    /// SGC aggregation order.
    pub r: usize,
    /// GCN depth.
    pub layers: usize,
    /// Feature-mask probability.
    pub rho: f64,
    /// Edge-drop probability (RA).
    pub rho_s: f64,
    pub tau_c: f64,
    /// Gumbel-sigmoid temperature (LA).
    pub tau: f64,
    pub lambda: f64,
    pub seed: u64,
    /// Negative-pool size; `None` uses every node up to 4096 nodes and 2560
    /// sampled nodes above that.
    pub batch_contrastive: Option<usize>,
    pub knn_mode: KnnMode,
    /// `false` encodes the original views instead of learned graphs.
    pub refinement: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::preset(Preset::Custom)
    }
}

impl TrainConfig {
    pub fn preset(p: Preset) -> Self {
        let base = Self {
            variant: Variant::Ra,
            epochs: 100,
            lr: 0.01,
            lr_gen: 0.001,
            d_h: 128,
            d: 64,
            k: 15,
            r: 2,
            layers: 2,
            rho: 0.5,
            rho_s: 0.5,
            tau_c: 0.2,
            tau: 1.0,
            lambda: 0.01,
            seed: 0,
            batch_contrastive: None,
            knn_mode: KnnMode::Exact,
            refinement: true,
        };
        match p {
            Preset::Acm | Preset::Custom => base,
            Preset::Dblp => Self {
                d_h: 64,
                d: 32,
                k: 10,
                lambda: 1.0,
                ..base
            },
            Preset::Yelp => Self {
                lr: 0.001,
                lambda: 1.0,
                ..base
            },
            Preset::Mag => Self {
                epochs: 200,
                lr: 0.005,
                d_h: 256,
                r: 3,
                layers: 3,
                rho: 0.0,
                lambda: 1.0,
                batch_contrastive: Some(2560),
                knn_mode: KnnMode::Approx { batch: 1000 },
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        for (name, p) in [("rho", self.rho), ("rho_s", self.rho_s)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(name, "probability must lie in [0, 1]");
            }
        }
        for (name, v) in [("lr", self.lr), ("lr_gen", self.lr_gen), ("tau_c", self.tau_c), ("tau", self.tau)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(name, "must be positive");
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad("lambda", "must be non-negative");
        }
        for (name, v) in [("epochs", self.epochs), ("d_h", self.d_h), ("d", self.d), ("k", self.k), ("layers", self.layers)] {
            if v == 0 {
                return bad(name, "must be at least 1");
            }
        }
        if matches!(self.batch_contrastive, Some(b) if b < 2) {
            return bad("batch_contrastive", "must be at least 2");
        }
        if let KnnMode::Approx { batch } = self.knn_mode {
            if batch < self.k {
                return bad("knn_mode.batch", "must be at least k");
            }
        }
        Ok(())
    }

    /// Negative-pool size actually used on a graph of `n` nodes.
    pub fn effective_batch(&self, n: usize) -> Option<usize> {
        self.batch_contrastive
            .or(if n > 4096 { Some(2560) } else { None })
            .filter(|&b| b < n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_follow_table() {
        let acm = TrainConfig::preset(Preset::Acm);
        assert_eq!((acm.epochs, acm.d_h, acm.d, acm.k, acm.r, acm.layers), (100, 128, 64, 15, 2, 2));
        assert_eq!((acm.lr, acm.rho, acm.tau_c, acm.lambda), (0.01, 0.5, 0.2, 0.01));
        let dblp = TrainConfig::preset(Preset::Dblp);
        assert_eq!((dblp.lambda, dblp.d_h, dblp.d, dblp.k), (1.0, 64, 32, 10));
        let mag = TrainConfig::preset(Preset::Mag);
        assert_eq!((mag.epochs, mag.lr, mag.d_h, mag.rho), (200, 0.005, 256, 0.0));
        assert_eq!(mag.batch_contrastive, Some(2560));
        assert!("YELP".parse::<Preset>().is_ok());
        assert!("cora".parse::<Preset>().is_err());
    }

    #[test]
    fn validation_names_field() {
        let mut c = TrainConfig::default();
        c.rho = 1.5;
        assert!(c.validate().unwrap_err().to_string().contains("rho"));
        let mut c = TrainConfig::default();
        c.epochs = 0;
        assert!(c.validate().unwrap_err().to_string().contains("epochs"));
        assert!(TrainConfig::default().validate().is_ok());
    }

    #[test]
    fn batch_defaults_by_scale() {
        let c = TrainConfig::default();
        assert_eq!(c.effective_batch(400), None);
        assert_eq!(c.effective_batch(10_000), Some(2560));
    }

    #[test]
    fn json_round_trip() {
        let c = TrainConfig::preset(Preset::Mag);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<TrainConfig>(&s).unwrap(), c);
    }
}
