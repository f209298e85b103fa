//! Epoch loops for the random-augmentation (RA) and learnable-augmentation
//! (LA) variants.
//!
//! [`Trainer`] exposes single steps so callers can inspect parameters between
//! them; [`train_ra`], [`train_la`] and [`train`] run a whole schedule.

mod augment;
mod config;

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;

pub use augment::{drop_edges, mask_features};
pub use config::{Preset, TrainConfig, Variant};

use crate::adam::AdamState;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::features::{fusion_input, sgc_features, ViewFeatures};
use crate::graph::MultiplexGraph;
use crate::model::{
    gcn_on_tape, generator_on_tape, gumbel_logistic_noise, learner_on_tape, mlp_on_tape,
    refine_on_tape, Activation, BoundAdj, BoundModel, KnnMode, ModelDims, ModelState, ParamGroup,
};
use crate::objectives::{
    embed_on_tape, loss_gen_on_tape, loss_total_on_tape, mi_lower_on_tape, sample_batch, GenLossVars,
    LossBreakdown, TotalLossVars,
};
use crate::postprocess::normalize_sym;
use crate::rng::substream;
use crate::sparse::SparseMatrix;
use crate::tape::{Tape, Var};

type Dense = DenseMatrix<f64>;
type Sparse = SparseMatrix<f64>;

/// Result of a full training run.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub fused_graph: Sparse,
    pub fused_reps: Dense,
    pub refined_graphs: Vec<Sparse>,
    pub loss_history: Vec<LossBreakdown>,
    pub model: ModelState<f64>,
}

/// Augmented view consumed by the encoder: normalized adjacency and masked
/// features.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedView {
    pub adjacency: Sparse,
    pub features: Dense,
}

/// Objective differentiated by [`Trainer::gradient_probe`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// `𝓛 = 𝓛_s + 𝓛_u + 𝓛_f`.
    Main,
    /// `𝓛_gen` with the upper-bound critic fixed.
    Generative,
    /// Negated lower bound used to fit the upper-bound critic.
    Critic,
}

#[derive(Clone, Debug)]
pub struct GradientProbe {
    pub loss: f64,
    /// `(name, ∂loss/∂param)` in [`ModelState::named`] order.
    pub grads: Vec<(String, Dense)>,
}

struct GenInputs {
    refined: Vec<Dense>,
    noise: Vec<Vec<f64>>,
    masked: Vec<Dense>,
    batch: Option<Arc<Vec<usize>>>,
}

struct Encoded {
    reps: Vec<Var>,
    fused: Var,
    refined: Vec<BoundAdj>,
    fused_adj: BoundAdj,
}

pub struct Trainer<'g> {
    graph: &'g MultiplexGraph<f64>,
    cfg: TrainConfig,
    views: ViewFeatures<f64>,
    concat: Dense,
    state: ModelState<f64>,
    opt_main: AdamState<f64>,
    opt_gen: AdamState<f64>,
    opt_critic: AdamState<f64>,
    history: Vec<LossBreakdown>,
    augmented: Vec<AugmentedView>,
    original: Option<(Vec<Sparse>, Sparse)>,
}

impl<'g> Trainer<'g> {
    pub fn new(graph: &'g MultiplexGraph<f64>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let views = sgc_features(graph, cfg.r)?;
        let concat = fusion_input(&graph.features, &views)?;
        let dims = ModelDims {
            n_views: graph.view_count(),
            feature_dim: graph.feature_dim(),
            hidden_dim: cfg.d_h,
            rep_dim: cfg.d,
            gcn_layers: cfg.layers,
            generative: cfg.variant == Variant::La,
        };
        let original = if cfg.refinement {
            None
        } else {
            let per_view = graph.views.iter().map(normalize_sym).collect::<Result<Vec<_>>>()?;
            let n = graph.node_count();
            let scale = 1.0 / graph.view_count() as f64;
            let mean = SparseMatrix::from_triplets(
                n,
                n,
                graph.views.iter().flat_map(|a| a.triplets().map(move |(r, c, v)| (r, c, v * scale))),
            )?;
            Some((per_view, normalize_sym(&mean)?))
        };
        let mut t = Self {
            graph,
            state: ModelState::init(dims, cfg.seed),
            opt_main: AdamState::new(cfg.lr),
            opt_gen: AdamState::new(cfg.lr_gen),
            opt_critic: AdamState::new(cfg.lr_gen),
            cfg,
            views,
            concat,
            history: Vec::new(),
            augmented: Vec::new(),
            original,
        };
        if t.cfg.variant == Variant::La {
            t.augmented = t.generate_augmented(0)?;
        }
        Ok(t)
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ModelState<f64> {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ModelState<f64> {
        &mut self.state
    }

    pub fn history(&self) -> &[LossBreakdown] {
        &self.history
    }

    /// Augmented views that the next LA Step 1 will encode.
    pub fn augmented(&self) -> &[AugmentedView] {
        &self.augmented
    }

    /// Steps taken by the main, generative and critic optimizers.
    pub fn optimizer_steps(&self) -> (u64, u64, u64) {
        (self.opt_main.step, self.opt_gen.step, self.opt_critic.step)
    }

    fn next_epoch(&self) -> u64 {
        self.history.len() as u64 + 1
    }

    fn knn(&self, view: u64, epoch: u64) -> (KnnMode, u64) {
        let seed = substream(self.cfg.seed, view, epoch, "knn").random::<u64>();
        (self.cfg.knn_mode, seed)
    }

    fn encode(&self, tape: &mut Tape<f64>, b: &BoundModel, epoch: u64) -> Result<Encoded> {
        let x = tape.constant(self.graph.features.clone());
        let v_count = self.graph.view_count();
        let mut refined = Vec::with_capacity(v_count);
        let mut reps = Vec::with_capacity(v_count);
        for v in 0..v_count {
            let adj = match &self.original {
                Some((views, _)) => BoundAdj::constant(tape, &views[v]),
                None => {
                    let xv = tape.constant(self.views.per_view[v].clone());
                    let h = learner_on_tape(tape, xv, &b.view_learners[v])?;
                    let (mode, seed) = self.knn(v as u64, epoch);
                    refine_on_tape(tape, h, self.cfg.k, mode, seed)?
                }
            };
            reps.push(gcn_on_tape(tape, &adj, x, &b.gcn)?);
            refined.push(adj);
        }
        let fused_adj = match &self.original {
            Some((_, fused)) => BoundAdj::constant(tape, fused),
            None => {
                let c = tape.constant(self.concat.clone());
                let h = learner_on_tape(tape, c, &b.fused_learner)?;
                let (mode, seed) = self.knn(v_count as u64, epoch);
                refine_on_tape(tape, h, self.cfg.k, mode, seed)?
            }
        };
        let fused = gcn_on_tape(tape, &fused_adj, x, &b.gcn)?;
        Ok(Encoded {
            reps,
            fused,
            refined,
            fused_adj,
        })
    }

    fn random_augmented(&self, epoch: u64) -> Result<Vec<AugmentedView>> {
        (0..self.graph.view_count())
            .map(|v| {
                let mut rng = substream(self.cfg.seed, v as u64, epoch, "drop_edges");
                let dropped = drop_edges(&self.graph.views[v], self.cfg.rho_s, &mut rng);
                let mut rng = substream(self.cfg.seed, v as u64, epoch, "mask_features");
                Ok(AugmentedView {
                    adjacency: normalize_sym(&dropped)?,
                    features: mask_features(&self.graph.features, self.cfg.rho, &mut rng),
                })
            })
            .collect()
    }

    fn gumbel_inputs(&self, epoch: u64) -> (Vec<Vec<f64>>, Vec<Dense>) {
        (0..self.graph.view_count())
            .map(|v| {
                let mut rng = substream(self.cfg.seed, v as u64, epoch, "gumbel");
                let noise = gumbel_logistic_noise(self.graph.views[v].nnz(), &mut rng);
                let mut rng = substream(self.cfg.seed, v as u64, epoch, "mask_features");
                (noise, mask_features(&self.graph.features, self.cfg.rho, &mut rng))
            })
            .unzip()
    }

    fn generate_augmented(&self, epoch: u64) -> Result<Vec<AugmentedView>> {
        let (noise, masked) = self.gumbel_inputs(epoch);
        let mut tape = Tape::new();
        let b = self.state.bind(&mut tape, |_| false);
        let x = tape.constant(self.graph.features.clone());
        (0..self.graph.view_count())
            .map(|v| {
                let pattern = self.graph.views[v].pattern().clone();
                let tau = self.cfg.tau;
                let gen = generator_on_tape(&mut tape, x, &pattern, &b.generators[v], tau, &noise[v])?;
                Ok(AugmentedView {
                    adjacency: gen.normalized.to_sparse(&tape),
                    features: masked[v].clone(),
                })
            })
            .collect()
    }

    fn contrastive_batch(&self, epoch: u64, purpose: &str) -> Result<Option<Arc<Vec<usize>>>> {
        let n = self.graph.node_count();
        let mut rng = substream(self.cfg.seed, 0, epoch, purpose);
        sample_batch(n, self.cfg.effective_batch(n), &mut rng)
    }

    /// `𝓛` on `tape` for the given augmented views.
    fn main_objective(
        &self,
        tape: &mut Tape<f64>,
        b: &BoundModel,
        epoch: u64,
        aug: &[AugmentedView],
    ) -> Result<TotalLossVars> {
        let enc = self.encode(tape, b, epoch)?;
        let mut aug_reps = Vec::with_capacity(aug.len());
        for a in aug {
            let adj = BoundAdj::constant(tape, &a.adjacency);
            let xa = tape.constant(a.features.clone());
            aug_reps.push(gcn_on_tape(tape, &adj, xa, &b.gcn)?);
        }
        let batch = self.contrastive_batch(epoch, "contrastive_batch")?;
        loss_total_on_tape(
            tape,
            &enc.reps,
            &aug_reps,
            enc.fused,
            Some(&b.projector),
            self.cfg.tau_c,
            batch.as_ref(),
        )
    }

    /// Minimizes the contrastive loss over learners, GCN and projector with
    /// the given augmented views held fixed.
    fn main_step(&mut self, epoch: u64, aug: &[AugmentedView]) -> Result<LossBreakdown> {
        let mut tape = Tape::new();
        let b = self.state.bind(&mut tape, |g| g == ParamGroup::Main);
        let l = self.main_objective(&mut tape, &b, epoch, aug)?;
        let out = LossBreakdown {
            l_s: tape.scalar(l.l_s),
            l_u: tape.scalar(l.l_u),
            l_f: tape.scalar(l.l_f),
            total: tape.scalar(l.total),
            ..Default::default()
        };
        if !out.is_finite() {
            return Err(Error::NonFinite {
                what: format!("contrastive loss at epoch {epoch}: {out:?}"),
            });
        }
        let grads = tape.backward(l.total)?;
        let g = b.group_grads(&tape, &grads, ParamGroup::Main);
        self.opt_main
            .update(&mut self.state.group_mut(ParamGroup::Main), &g)
            .map_err(|e| at_epoch(e, epoch))?;
        Ok(out)
    }

    /// One RA epoch: fresh random augmentations, then one main update.
    pub fn epoch_ra(&mut self) -> Result<LossBreakdown> {
        let epoch = self.next_epoch();
        let aug = self.random_augmented(epoch)?;
        let out = self.main_step(epoch, &aug)?;
        log::debug!("epoch {epoch}: {out:?}");
        self.history.push(out);
        Ok(out)
    }

    /// LA Step 1: main update against the stored augmented views.
    pub fn la_step1(&mut self) -> Result<LossBreakdown> {
        let epoch = self.next_epoch();
        let aug = std::mem::take(&mut self.augmented);
        let out = self.main_step(epoch, &aug);
        self.augmented = aug;
        out
    }

    /// Everything Step 2 of `epoch` holds fixed: refined-view
    /// representations, Gumbel noise, masked features and the negative pool.
    fn gen_inputs(&self, epoch: u64) -> Result<GenInputs> {
        let refined = {
            let mut tape = Tape::new();
            let b = self.state.bind(&mut tape, |_| false);
            let enc = self.encode(&mut tape, &b, epoch)?;
            enc.reps.iter().map(|&z| tape.value(z).clone()).collect()
        };
        let (noise, masked) = self.gumbel_inputs(epoch);
        Ok(GenInputs {
            refined,
            noise,
            masked,
            batch: self.contrastive_batch(epoch, "generator_batch")?,
        })
    }

    fn augmented_reps(
        &self,
        tape: &mut Tape<f64>,
        b: &BoundModel,
        inp: &GenInputs,
    ) -> Result<(Vec<Var>, Vec<BoundAdj>)> {
        let x = tape.constant(self.graph.features.clone());
        let v_count = self.graph.view_count();
        let mut reps = Vec::with_capacity(v_count);
        let mut adjs = Vec::with_capacity(v_count);
        for v in 0..v_count {
            let pattern = self.graph.views[v].pattern().clone();
            let gen = generator_on_tape(tape, x, &pattern, &b.generators[v], self.cfg.tau, &inp.noise[v])?;
            let xm = tape.constant(inp.masked[v].clone());
            reps.push(gcn_on_tape(tape, &gen.normalized, xm, &b.gcn)?);
            adjs.push(gen.normalized);
        }
        Ok((reps, adjs))
    }

    /// `−(1/V) Σ I_lb(Z^i; Z^{i'})` under the upper-bound projector.
    fn critic_objective(&self, tape: &mut Tape<f64>, b: &BoundModel, inp: &GenInputs) -> Result<Var> {
        let (aug, _) = self.augmented_reps(tape, b, inp)?;
        let proj = b.ub_projector.as_ref();
        let mut acc = tape.constant(DenseMatrix::zeros(1, 1));
        for (z, &za) in inp.refined.iter().zip(&aug) {
            let zr = tape.constant(z.clone());
            let ea = embed_on_tape(tape, zr, proj, inp.batch.as_ref())?;
            let eb = embed_on_tape(tape, za, proj, inp.batch.as_ref())?;
            let per = mi_lower_on_tape(tape, ea, eb, self.cfg.tau_c)?;
            let m = tape.mean(per);
            acc = tape.add(acc, m)?;
        }
        Ok(tape.scale(acc, -1.0 / aug.len() as f64))
    }

    /// `𝓛_gen` on `tape`, plus the normalized augmented adjacencies.
    fn gen_objective(
        &self,
        tape: &mut Tape<f64>,
        b: &BoundModel,
        inp: &GenInputs,
    ) -> Result<(GenLossVars, Vec<BoundAdj>)> {
        let (aug, adjs) = self.augmented_reps(tape, b, inp)?;
        let v_count = aug.len();
        let mut targets = Vec::with_capacity(v_count);
        let mut xhat = Vec::with_capacity(v_count);
        let mut reps = Vec::with_capacity(v_count);
        for v in 0..v_count {
            targets.push(tape.constant(self.views.per_view[v].clone()));
            xhat.push(mlp_on_tape(tape, aug[v], &b.decoders[v], Activation::Relu)?);
            reps.push(tape.constant(inp.refined[v].clone()));
        }
        let l = loss_gen_on_tape(
            tape,
            &targets,
            &xhat,
            &reps,
            &aug,
            b.ub_projector.as_ref(),
            self.cfg.tau_c,
            self.cfg.lambda,
            inp.batch.as_ref(),
        )?;
        Ok((l, adjs))
    }

    /// LA Step 2: with learners and GCN frozen, one critic ascent step on the
    /// upper-bound projector, then one generator/decoder step on `𝓛_gen`.
    /// The augmented views produced here feed the next Step 1.
    pub fn la_step2(&mut self, step1: LossBreakdown) -> Result<LossBreakdown> {
        let epoch = self.next_epoch();
        let inp = self.gen_inputs(epoch)?;
        {
            let mut tape = Tape::new();
            let b = self.state.bind(&mut tape, |g| g == ParamGroup::Critic);
            let loss = self.critic_objective(&mut tape, &b, &inp)?;
            if !tape.scalar(loss).is_finite() {
                return Err(Error::NonFinite {
                    what: format!("critic loss at epoch {epoch}"),
                });
            }
            let grads = tape.backward(loss)?;
            let g = b.group_grads(&tape, &grads, ParamGroup::Critic);
            self.opt_critic
                .update(&mut self.state.group_mut(ParamGroup::Critic), &g)
                .map_err(|e| at_epoch(e, epoch))?;
        }

        let mut tape = Tape::new();
        let b = self.state.bind(&mut tape, |g| g == ParamGroup::Generative);
        let (l, adjs) = self.gen_objective(&mut tape, &b, &inp)?;
        let out = LossBreakdown {
            l_gen_recon: Some(tape.scalar(l.recon)),
            l_gen_mi: Some(tape.scalar(l.mi)),
            l_gen_total: Some(tape.scalar(l.total)),
            ..step1
        };
        if !out.is_finite() {
            return Err(Error::NonFinite {
                what: format!("generator loss at epoch {epoch}: {out:?}"),
            });
        }
        let grads = tape.backward(l.total)?;
        let g = b.group_grads(&tape, &grads, ParamGroup::Generative);
        self.augmented = adjs
            .iter()
            .zip(inp.masked)
            .map(|(a, features)| AugmentedView {
                adjacency: a.to_sparse(&tape),
                features,
            })
            .collect();
        self.opt_gen
            .update(&mut self.state.group_mut(ParamGroup::Generative), &g)
            .map_err(|e| at_epoch(e, epoch))?;
        log::debug!("epoch {epoch}: {out:?}");
        self.history.push(out);
        Ok(out)
    }

    /// Value and gradient of one objective at the current parameters, with
    /// the random draws the next epoch would use. Every parameter is
    /// differentiated; those the objective does not reach get zeros.
    pub fn gradient_probe(&self, objective: Objective) -> Result<GradientProbe> {
        let epoch = self.next_epoch();
        let mut tape = Tape::new();
        let b = self.state.bind(&mut tape, |_| true);
        let loss = match objective {
            Objective::Main => {
                let aug = match self.cfg.variant {
                    Variant::Ra => self.random_augmented(epoch)?,
                    Variant::La => self.augmented.clone(),
                };
                self.main_objective(&mut tape, &b, epoch, &aug)?.total
            }
            Objective::Generative => {
                let inp = self.gen_inputs(epoch)?;
                self.gen_objective(&mut tape, &b, &inp)?.0.total
            }
            Objective::Critic => {
                let inp = self.gen_inputs(epoch)?;
                self.critic_objective(&mut tape, &b, &inp)?
            }
        };
        let grads = tape.backward(loss)?;
        Ok(GradientProbe {
            loss: tape.scalar(loss),
            grads: b
                .entries()
                .iter()
                .map(|(name, _, v)| (name.clone(), grads.wrt(&tape, *v)))
                .collect(),
        })
    }

    /// One epoch of the configured variant.
    pub fn step(&mut self) -> Result<LossBreakdown> {
        match self.cfg.variant {
            Variant::Ra => self.epoch_ra(),
            Variant::La => {
                let s1 = self.la_step1()?;
                self.la_step2(s1)
            }
        }
    }

    /// Final refined graphs, fused graph and fused representations under the
    /// current parameters.
    pub fn finish(self) -> Result<TrainOutput> {
        let epoch = self.next_epoch();
        let mut tape = Tape::new();
        let b = self.state.bind(&mut tape, |_| false);
        let enc = self.encode(&mut tape, &b, epoch)?;
        let fused_reps = tape.value(enc.fused).clone();
        if !fused_reps.is_finite() {
            return Err(Error::NonFinite {
                what: "final representations".into(),
            });
        }
        Ok(TrainOutput {
            fused_graph: enc.fused_adj.to_sparse(&tape).prune_zeros(),
            fused_reps,
            refined_graphs: enc.refined.iter().map(|a| a.to_sparse(&tape).prune_zeros()).collect(),
            loss_history: self.history,
            model: self.state,
        })
    }
}

fn at_epoch(e: Error, epoch: u64) -> Error {
    match e {
        Error::NonFinite { what } => Error::NonFinite {
            what: format!("{what} (epoch {epoch})"),
        },
        other => other,
    }
}

/// Runs the configured variant for `cfg.epochs` epochs.
pub fn train(g: &MultiplexGraph<f64>, cfg: &TrainConfig) -> Result<TrainOutput> {
    let mut t = Trainer::new(g, cfg.clone())?;
    for _ in 0..cfg.epochs {
        t.step()?;
    }
    t.finish()
}

pub fn train_ra(g: &MultiplexGraph<f64>, cfg: &TrainConfig) -> Result<TrainOutput> {
    if cfg.variant != Variant::Ra {
        return Err(Error::Config("train_ra needs variant \"ra\"".into()));
    }
    train(g, cfg)
}

pub fn train_la(g: &MultiplexGraph<f64>, cfg: &TrainConfig) -> Result<TrainOutput> {
    if cfg.variant != Variant::La {
        return Err(Error::Config("train_la needs variant \"la\"".into()));
    }
    train(g, cfg)
}

/// Loss history as CSV with one row per epoch; generative columns stay
/// empty for RA runs.
pub fn write_loss_csv<W: Write>(history: &[LossBreakdown], mut w: W) -> Result<()> {
    writeln!(w, "epoch,l_s,l_u,l_f,total,l_gen_recon,l_gen_mi")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (e, l) in history.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            e + 1,
            l.l_s,
            l.l_u,
            l.l_f,
            l.total,
            opt(l.l_gen_recon),
            opt(l.l_gen_mi)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> MultiplexGraph<f64> {
        let a = MultiplexGraph::adjacency_from_edges(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5)]).unwrap();
        let b = MultiplexGraph::adjacency_from_edges(6, &[(0, 1), (3, 4), (3, 5), (2, 5)]).unwrap();
        let x = DenseMatrix::from_fn(6, 4, |r, c| if (r < 3) == (c < 2) { 1.0 } else { 0.1 * c as f64 });
        MultiplexGraph::new(vec![a, b], x, Some(vec![0, 0, 0, 1, 1, 1]), 2).unwrap()
    }

    fn small(variant: Variant) -> TrainConfig {
        TrainConfig {
            variant,
            epochs: 1,
            d_h: 8,
            d: 4,
            k: 2,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn single_epoch_contract() {
        let g = toy();
        let out = train_ra(&g, &small(Variant::Ra)).unwrap();
        assert_eq!(out.loss_history.len(), 1);
        assert!(out.fused_graph.is_symmetric_within(1e-12));
        assert!(out.fused_graph.values().iter().all(|&v| v >= 0.0));
        assert_eq!(out.fused_reps.shape(), (6, 4));
        assert_eq!(out.refined_graphs.len(), 2);
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let g = toy();
        assert!(train_la(&g, &small(Variant::Ra)).is_err());
        assert!(train_ra(&g, &small(Variant::La)).is_err());
    }

    #[test]
    fn la_advances_every_optimizer_once() {
        let g = toy();
        let mut t = Trainer::new(&g, small(Variant::La)).unwrap();
        t.step().unwrap();
        assert_eq!(t.optimizer_steps(), (1, 1, 1));
        let l = t.history()[0];
        assert!(l.l_gen_total.is_some());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = toy();
        let out = train_la(&g, &small(Variant::La)).unwrap();
        let mut buf = Vec::new();
        write_loss_csv(&out.loss_history, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), 7);
    }

    #[test]
    fn ablation_uses_original_views() {
        let g = toy();
        let cfg = TrainConfig {
            refinement: false,
            ..small(Variant::Ra)
        };
        let out = train_ra(&g, &cfg).unwrap();
        assert_eq!(out.refined_graphs[0], normalize_sym(&g.views[0]).unwrap());
        assert_eq!(out.model.view_learners, ModelState::<f64>::init(out.model.dims, 0).view_learners);
    }
}
