//! Trainable components and their forward passes.
//!
//! Parameters live in plain structs ([`ModelState`]); before each optimizer
//! step they are bound onto a fresh [`Tape`] as leaves, producing a
//! [`BoundModel`] of tape handles that the forward functions consume.

use std::sync::Arc;

use rand::distr::{Distribution, Open01, Uniform};

use crate::dense::{dot, DenseMatrix};
use crate::error::{dim_err, Result};
use crate::graph::MultiplexGraph;
use crate::postprocess::{approx_topk, cosine_similarity, postprocess, topk_rows};
use crate::rng::{substream, Rng};
use crate::scalar::Scalar;
use crate::sparse::{SparseMatrix, SparsityPattern};
use crate::tape::{SparseMap, Tape, Var};

/// Attentive learner: two per-feature gate vectors shared by every node.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnerParams<T> {
    pub w1: DenseMatrix<T>,
    pub w2: DenseMatrix<T>,
}

impl<T: Scalar> LearnerParams<T> {
    pub fn ones(cols: usize) -> Self {
        Self {
            w1: DenseMatrix::filled(1, cols, T::one()),
            w2: DenseMatrix::filled(1, cols, T::one()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcnParams<T> {
    pub layers: Vec<DenseMatrix<T>>,
}

/// Bias-free two-layer perceptron.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams<T> {
    pub w1: DenseMatrix<T>,
    pub w2: DenseMatrix<T>,
}

/// Projection head of the contrastive critic (ELU between layers).
pub type ProjectorParams<T> = MlpParams<T>;
/// Feature decoder of the generative augmentation (ReLU between layers).
pub type DecoderParams<T> = MlpParams<T>;

/// Edge-logit generator: `θ_ij = MLP([W x_i ; W x_j])`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorParams<T> {
    pub w: DenseMatrix<T>,
    pub mlp: MlpParams<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamGroup {
    /// Graph learners, shared GCN and the lower-bound projector.
    Main,
    /// Augmentation generators and feature decoders.
    Generative,
    /// Projector of the upper-bound critic.
    Critic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub n_views: usize,
    pub feature_dim: usize,
    pub hidden_dim: usize,
    pub rep_dim: usize,
    pub gcn_layers: usize,
    pub generative: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelState<T> {
    pub dims: ModelDims,
    pub view_learners: Vec<LearnerParams<T>>,
    pub fused_learner: LearnerParams<T>,
    pub gcn: GcnParams<T>,
    pub projector: ProjectorParams<T>,
    pub ub_projector: Option<ProjectorParams<T>>,
    pub generators: Vec<GeneratorParams<T>>,
    pub decoders: Vec<DecoderParams<T>>,
}

pub(crate) fn xavier<T: Scalar>(rows: usize, cols: usize, seed: u64, name: &str) -> DenseMatrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
    let mut rng = substream(seed, 0, 0, &format!("init.{name}"));
    DenseMatrix::from_fn(rows, cols, |_, _| T::of(dist.sample(&mut rng)))
}

fn mlp_init<T: Scalar>(i: usize, h: usize, o: usize, seed: u64, name: &str) -> MlpParams<T> {
    MlpParams {
        w1: xavier(i, h, seed, &format!("{name}.w1")),
        w2: xavier(h, o, seed, &format!("{name}.w2")),
    }
}

impl<T: Scalar> ModelState<T> {
    /// Attention vectors start at one; weight matrices are Xavier-uniform.
    pub fn init(dims: ModelDims, seed: u64) -> Self {
        let ModelDims {
            n_views,
            feature_dim: df,
            hidden_dim: dh,
            rep_dim: d,
            gcn_layers,
            generative,
        } = dims;
        assert!(gcn_layers >= 1, "GCN needs at least one layer");
        let mut widths = vec![df];
        widths.extend(std::iter::repeat_n(dh, gcn_layers - 1));
        widths.push(d);
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(l, w)| xavier(w[0], w[1], seed, &format!("gcn.{l}")))
            .collect();
        let (ub_projector, generators, decoders) = if generative {
            (
                Some(mlp_init(d, dh, d, seed, "ub_projector")),
                (0..n_views)
                    .map(|v| GeneratorParams {
                        w: xavier(df, dh, seed, &format!("generator.{v}.w")),
                        mlp: mlp_init(2 * dh, dh, 1, seed, &format!("generator.{v}.mlp")),
                    })
                    .collect(),
                (0..n_views)
                    .map(|v| mlp_init(d, dh, df, seed, &format!("decoder.{v}")))
                    .collect(),
            )
        } else {
            (None, Vec::new(), Vec::new())
        };
        Self {
            dims,
            view_learners: (0..n_views).map(|_| LearnerParams::ones(df)).collect(),
            fused_learner: LearnerParams::ones(df * (n_views + 1)),
            gcn: GcnParams { layers },
            projector: mlp_init(d, dh, d, seed, "projector"),
            ub_projector,
            generators,
            decoders,
        }
    }

    /// Every parameter with its name and group, in a fixed order.
    pub fn named(&self) -> Vec<(String, ParamGroup, &DenseMatrix<T>)> {
        use ParamGroup::*;
        let mut out = Vec::new();
        for (v, l) in self.view_learners.iter().enumerate() {
            out.push((format!("view_learner.{v}.w1"), Main, &l.w1));
            out.push((format!("view_learner.{v}.w2"), Main, &l.w2));
        }
        out.push(("fused_learner.w1".into(), Main, &self.fused_learner.w1));
        out.push(("fused_learner.w2".into(), Main, &self.fused_learner.w2));
        for (l, w) in self.gcn.layers.iter().enumerate() {
            out.push((format!("gcn.{l}"), Main, w));
        }
        out.push(("projector.w1".into(), Main, &self.projector.w1));
        out.push(("projector.w2".into(), Main, &self.projector.w2));
        if let Some(p) = &self.ub_projector {
            out.push(("ub_projector.w1".into(), Critic, &p.w1));
            out.push(("ub_projector.w2".into(), Critic, &p.w2));
        }
        for (v, g) in self.generators.iter().enumerate() {
            out.push((format!("generator.{v}.w"), Generative, &g.w));
            out.push((format!("generator.{v}.mlp.w1"), Generative, &g.mlp.w1));
            out.push((format!("generator.{v}.mlp.w2"), Generative, &g.mlp.w2));
        }
        for (v, d) in self.decoders.iter().enumerate() {
            out.push((format!("decoder.{v}.w1"), Generative, &d.w1));
            out.push((format!("decoder.{v}.w2"), Generative, &d.w2));
        }
        out
    }

    /// Mutable parameters of one group, in the order of [`Self::named`].
    pub fn group_mut(&mut self, group: ParamGroup) -> Vec<(String, &mut DenseMatrix<T>)> {
        let mut out = Vec::new();
        match group {
            ParamGroup::Main => {
                for (v, l) in self.view_learners.iter_mut().enumerate() {
                    out.push((format!("view_learner.{v}.w1"), &mut l.w1));
                    out.push((format!("view_learner.{v}.w2"), &mut l.w2));
                }
                out.push(("fused_learner.w1".into(), &mut self.fused_learner.w1));
                out.push(("fused_learner.w2".into(), &mut self.fused_learner.w2));
                for (l, w) in self.gcn.layers.iter_mut().enumerate() {
                    out.push((format!("gcn.{l}"), w));
                }
                out.push(("projector.w1".into(), &mut self.projector.w1));
                out.push(("projector.w2".into(), &mut self.projector.w2));
            }
            ParamGroup::Critic => {
                if let Some(p) = &mut self.ub_projector {
                    out.push(("ub_projector.w1".into(), &mut p.w1));
                    out.push(("ub_projector.w2".into(), &mut p.w2));
                }
            }
            ParamGroup::Generative => {
                for (v, g) in self.generators.iter_mut().enumerate() {
                    out.push((format!("generator.{v}.w"), &mut g.w));
                    out.push((format!("generator.{v}.mlp.w1"), &mut g.mlp.w1));
                    out.push((format!("generator.{v}.mlp.w2"), &mut g.mlp.w2));
                }
                for (v, d) in self.decoders.iter_mut().enumerate() {
                    out.push((format!("decoder.{v}.w1"), &mut d.w1));
                    out.push((format!("decoder.{v}.w2"), &mut d.w2));
                }
            }
        }
        out
    }

    /// Mutable access to any parameter by name.
    pub fn param_mut(&mut self, name: &str) -> Option<&mut DenseMatrix<T>> {
        let group = self.named().into_iter().find(|(n, _, _)| n == name)?.1;
        self.group_mut(group)
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
    }

    /// Order-sensitive digest of every parameter in `group`.
    pub fn group_digest(&self, group: ParamGroup) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, g, m) in self.named() {
            if g != group {
                continue;
            }
            for v in m.data() {
                for b in v.as_f64().to_bits().to_le_bytes() {
                    h ^= u64::from(b);
                    h = h.wrapping_mul(0x0000_0100_0000_01B3);
                }
            }
        }
        h
    }

    /// Places every parameter on `tape`; groups for which `trainable` is
    /// false become constants.
    pub fn bind(&self, tape: &mut Tape<T>, trainable: impl Fn(ParamGroup) -> bool) -> BoundModel {
        let mut entries = Vec::new();
        let mut vars = Vec::new();
        for (name, group, m) in self.named() {
            let v = tape.leaf(m.clone(), trainable(group));
            entries.push((name, group, v));
            vars.push(v);
        }
        let mut it = vars.into_iter();
        let mut next = || it.next().expect("layout mirrors named()");
        let view_learners = (0..self.view_learners.len())
            .map(|_| BoundLearner { w1: next(), w2: next() })
            .collect();
        let fused_learner = BoundLearner { w1: next(), w2: next() };
        let gcn = (0..self.gcn.layers.len()).map(|_| next()).collect();
        let projector = BoundMlp { w1: next(), w2: next() };
        let ub_projector = self.ub_projector.as_ref().map(|_| BoundMlp { w1: next(), w2: next() });
        let generators = (0..self.generators.len())
            .map(|_| BoundGenerator {
                w: next(),
                mlp: BoundMlp { w1: next(), w2: next() },
            })
            .collect();
        let decoders = (0..self.decoders.len())
            .map(|_| BoundMlp { w1: next(), w2: next() })
            .collect();
        BoundModel {
            entries,
            view_learners,
            fused_learner,
            gcn,
            projector,
            ub_projector,
            generators,
            decoders,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BoundLearner {
    pub w1: Var,
    pub w2: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundMlp {
    pub w1: Var,
    pub w2: Var,
}

#[derive(Clone, Copy, Debug)]
pub struct BoundGenerator {
    pub w: Var,
    pub mlp: BoundMlp,
}

/// Tape handles for every parameter of a [`ModelState`].
#[derive(Clone, Debug)]
pub struct BoundModel {
    entries: Vec<(String, ParamGroup, Var)>,
    pub view_learners: Vec<BoundLearner>,
    pub fused_learner: BoundLearner,
    pub gcn: Vec<Var>,
    pub projector: BoundMlp,
    pub ub_projector: Option<BoundMlp>,
    pub generators: Vec<BoundGenerator>,
    pub decoders: Vec<BoundMlp>,
}

impl BoundModel {
    /// Gradients of one group in [`ModelState::group_mut`] order.
    pub fn group_grads<T: Scalar>(
        &self,
        tape: &Tape<T>,
        grads: &crate::tape::Gradients<T>,
        group: ParamGroup,
    ) -> Vec<DenseMatrix<T>> {
        self.entries
            .iter()
            .filter(|(_, g, _)| *g == group)
            .map(|(_, _, v)| grads.wrt(tape, *v))
            .collect()
    }

    pub fn entries(&self) -> &[(String, ParamGroup, Var)] {
        &self.entries
    }
}

/// Normalized adjacency on the tape: edge values plus their structure.
#[derive(Clone, Debug)]
pub struct BoundAdj {
    pub values: Var,
    pub pattern: Arc<SparsityPattern>,
}

impl BoundAdj {
    pub fn constant<T: Scalar>(tape: &mut Tape<T>, a: &SparseMatrix<T>) -> Self {
        let values = tape.constant(
            DenseMatrix::from_vec(a.nnz(), 1, a.values().to_vec()).expect("column"),
        );
        Self {
            values,
            pattern: a.pattern().clone(),
        }
    }

    pub fn to_sparse<T: Scalar>(&self, tape: &Tape<T>) -> SparseMatrix<T> {
        SparseMatrix::new(self.pattern.clone(), tape.value(self.values).data().to_vec())
            .expect("tape adjacency is finite")
    }
}

/// How neighbour candidates are found when sparsifying a learned similarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum KnnMode {
    Exact,
    Approx { batch: usize },
}

/// `σ(X ⊙ w1) ⊙ w2` with `σ = tanh`.
pub fn learner_on_tape<T: Scalar>(tape: &mut Tape<T>, x: Var, p: &BoundLearner) -> Result<Var> {
    let gated = tape.mul_row(x, p.w1)?;
    let act = tape.tanh(gated);
    tape.mul_row(act, p.w2)
}

/// Learned graph from learner output `h`: cosine kNN with straight-through
/// top-k, then ReLU, symmetrization, self loops and symmetric normalization.
pub fn refine_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    h: Var,
    k: usize,
    knn: KnnMode,
    seed: u64,
) -> Result<BoundAdj> {
    let sparse_sim = match knn {
        KnnMode::Exact => topk_rows(&cosine_similarity(tape.value(h)), k),
        KnnMode::Approx { batch } => approx_topk(tape.value(h), k, batch, seed)?,
    };
    let knn_pattern = sparse_sim.pattern().clone();
    let hn = tape.row_normalize(h);
    let sims = tape.pair_dot(hn, knn_pattern.clone())?;
    let act = tape.relu(sims);
    let (map, union) = SparseMap::symmetrize_plus_identity(&knn_pattern);
    let union = Arc::new(union);
    let sym = tape.sparse_linear(act, Arc::new(map))?;
    let values = tape.sym_normalize(sym, union.clone())?;
    Ok(BoundAdj {
        values,
        pattern: union,
    })
}

/// `A·relu(…relu(A·X·W₁)…)·W_L`.
pub fn gcn_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    adj: &BoundAdj,
    x: Var,
    layers: &[Var],
) -> Result<Var> {
    let mut h = x;
    for (l, &w) in layers.iter().enumerate() {
        let xw = tape.matmul(h, w)?;
        h = tape.spmm(adj.values, adj.pattern.clone(), xw)?;
        if l + 1 < layers.len() {
            h = tape.relu(h);
        }
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Elu,
}

pub fn mlp_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    p: &BoundMlp,
    act: Activation,
) -> Result<Var> {
    let h = tape.matmul(x, p.w1)?;
    let h = match act {
        Activation::Relu => tape.relu(h),
        Activation::Elu => tape.elu(h),
    };
    tape.matmul(h, p.w2)
}

/// `logit(δ)` for every edge, `δ ~ Uniform(0, 1)` on the open interval.
pub fn gumbel_logistic_noise<T: Scalar>(count: usize, rng: &mut Rng) -> Vec<T> {
    (0..count)
        .map(|_| {
            let d: f64 = Open01.sample(rng);
            T::of(d.ln() - (-d).ln_1p())
        })
        .collect()
}

/// Generator output on the tape.
pub struct GeneratedAdj {
    /// `θ` per directed edge of the view, `nnz × 1`.
    pub logits: Var,
    /// `ω` per directed edge before symmetrization.
    pub directed: Var,
    /// `ω` symmetrized over both directions, on the view's edge pattern.
    pub weights: BoundAdj,
    /// `D̃^{-1/2}(A' + I)D̃^{-1/2}` fed to the encoder.
    pub normalized: BoundAdj,
}

/// Edge weights `ω = sigmoid((logit δ + θ)/τ)` on the existing edges of
/// `view`, `θ = MLP([W x_i ; W x_j])`.
pub fn generator_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    x: Var,
    view: &Arc<SparsityPattern>,
    p: &BoundGenerator,
    tau: T,
    noise: &[T],
) -> Result<GeneratedAdj> {
    assert_eq!(noise.len(), view.nnz(), "one noise draw per directed edge");
    let wx = tape.matmul(x, p.w)?;
    let src = tape.gather_rows(wx, Arc::new(view.entry_rows()))?;
    let dst = tape.gather_rows(wx, Arc::new(view.col_indices().to_vec()))?;
    let pair = tape.concat_cols(&[src, dst])?;
    let theta = mlp_on_tape(tape, pair, &p.mlp, Activation::Relu)?;
    let noise = tape.constant(DenseMatrix::from_vec(noise.len(), 1, noise.to_vec())?);
    let shifted = tape.add(theta, noise)?;
    let scaled = tape.scale(shifted, T::one() / tau);
    let omega = tape.sigmoid(scaled);

    let (sym_map, sym_pattern) = SparseMap::symmetrize(view, false);
    let sym = tape.sparse_linear(omega, Arc::new(sym_map))?;
    let (loop_map, loop_pattern) = SparseMap::symmetrize_plus_identity(view);
    let looped = tape.sparse_linear(omega, Arc::new(loop_map))?;
    let loop_pattern = Arc::new(loop_pattern);
    let norm = tape.sym_normalize(looped, loop_pattern.clone())?;
    Ok(GeneratedAdj {
        logits: theta,
        directed: omega,
        weights: BoundAdj {
            values: sym,
            pattern: Arc::new(sym_pattern),
        },
        normalized: BoundAdj {
            values: norm,
            pattern: loop_pattern,
        },
    })
}

// ---- value-level forms -------------------------------------------------

fn constant_learner<T: Scalar>(tape: &mut Tape<T>, p: &LearnerParams<T>) -> BoundLearner {
    BoundLearner {
        w1: tape.constant(p.w1.clone()),
        w2: tape.constant(p.w2.clone()),
    }
}

fn constant_mlp<T: Scalar>(tape: &mut Tape<T>, p: &MlpParams<T>) -> BoundMlp {
    BoundMlp {
        w1: tape.constant(p.w1.clone()),
        w2: tape.constant(p.w2.clone()),
    }
}

/// Learner output `H^v` for view features `X^v`.
pub fn view_learner_forward<T: Scalar>(
    xv: &DenseMatrix<T>,
    p: &LearnerParams<T>,
) -> Result<DenseMatrix<T>> {
    let mut tape = Tape::new();
    let x = tape.constant(xv.clone());
    let b = constant_learner(&mut tape, p);
    let h = learner_on_tape(&mut tape, x, &b)?;
    Ok(tape.value(h).clone())
}

/// Refined adjacency `A_v^s` of one view.
pub fn refine_view<T: Scalar>(
    xv: &DenseMatrix<T>,
    p: &LearnerParams<T>,
    k: usize,
) -> Result<SparseMatrix<T>> {
    postprocess(&cosine_similarity(&view_learner_forward(xv, p)?), k)
}

/// Fused adjacency `A^s` from the concatenated learner input.
pub fn fused_learner_forward<T: Scalar>(
    concat: &DenseMatrix<T>,
    p: &LearnerParams<T>,
    k: usize,
) -> Result<SparseMatrix<T>> {
    refine_view(concat, p, k)
}

pub fn gcn_forward<T: Scalar>(
    a: &SparseMatrix<T>,
    x: &DenseMatrix<T>,
    p: &GcnParams<T>,
) -> Result<DenseMatrix<T>> {
    let mut tape = Tape::new();
    let adj = BoundAdj::constant(&mut tape, a);
    let xv = tape.constant(x.clone());
    let layers: Vec<Var> = p.layers.iter().map(|w| tape.constant(w.clone())).collect();
    let z = gcn_on_tape(&mut tape, &adj, xv, &layers)?;
    Ok(tape.value(z).clone())
}

/// One generator draw on view `view` with caller-supplied `logit(δ)` noise.
#[derive(Clone, Debug)]
pub struct GeneratorSample<T> {
    /// `θ` per directed edge, in the view's CSR order.
    pub logits: Vec<T>,
    /// `ω` per directed edge, in the view's CSR order.
    pub directed: Vec<T>,
    /// `ω` averaged over both directions.
    pub weights: SparseMatrix<T>,
}

pub fn generator_sample<T: Scalar>(
    g: &MultiplexGraph<T>,
    view: usize,
    p: &GeneratorParams<T>,
    tau: T,
    noise: &[T],
) -> Result<GeneratorSample<T>> {
    let pattern = g.views[view].pattern().clone();
    if noise.len() != pattern.nnz() {
        return Err(dim_err(
            "generator_sample",
            format!("{} noise draws for {} directed edges", noise.len(), pattern.nnz()),
        ));
    }
    let mut tape = Tape::new();
    let x = tape.constant(g.features.clone());
    let b = BoundGenerator {
        w: tape.constant(p.w.clone()),
        mlp: constant_mlp(&mut tape, &p.mlp),
    };
    let out = generator_on_tape(&mut tape, x, &pattern, &b, tau, noise)?;
    Ok(GeneratorSample {
        logits: tape.value(out.logits).data().to_vec(),
        directed: tape.value(out.directed).data().to_vec(),
        weights: out.weights.to_sparse(&tape),
    })
}

/// Symmetrized Gumbel-sigmoid weights `A'_v` on the edges of view `view`.
pub fn generator_edge_weights<T: Scalar>(
    g: &MultiplexGraph<T>,
    view: usize,
    p: &GeneratorParams<T>,
    tau: T,
    rng: &mut Rng,
) -> Result<SparseMatrix<T>> {
    let noise = gumbel_logistic_noise(g.views[view].nnz(), rng);
    Ok(generator_sample(g, view, p, tau, &noise)?.weights)
}

/// Reconstructed view features `X̂` from augmented-view representations.
pub fn decode_features<T: Scalar>(
    z: &DenseMatrix<T>,
    p: &DecoderParams<T>,
) -> Result<DenseMatrix<T>> {
    let mut tape = Tape::new();
    let zv = tape.constant(z.clone());
    let b = constant_mlp(&mut tape, p);
    let out = mlp_on_tape(&mut tape, zv, &b, Activation::Relu)?;
    Ok(tape.value(out).clone())
}

/// Projection applied before the critic's cosine similarity.
#[derive(Clone, Debug)]
pub enum Projection<T> {
    Identity,
    Mlp(ProjectorParams<T>),
}

impl<T: Scalar> Projection<T> {
    pub fn project(&self, z: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        match self {
            Projection::Identity => Ok(z.clone()),
            Projection::Mlp(p) => {
                let mut tape = Tape::new();
                let zv = tape.constant(z.clone());
                let b = constant_mlp(&mut tape, p);
                let out = mlp_on_tape(&mut tape, zv, &b, Activation::Elu)?;
                Ok(tape.value(out).clone())
            }
        }
    }
}

/// `cos(proj(z_i), proj(z_j))`; zero when either projection vanishes.
pub fn critic_score<T: Scalar>(zi: &[T], zj: &[T], p: &Projection<T>) -> Result<T> {
    let rows = DenseMatrix::from_rows(&[zi.to_vec(), zj.to_vec()])?;
    let proj = p.project(&rows)?;
    let (a, b) = (proj.row(0), proj.row(1));
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na == T::zero() || nb == T::zero() {
        return Ok(T::zero());
    }
    Ok(dot(a, b) / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn dims(generative: bool) -> ModelDims {
        ModelDims {
            n_views: 2,
            feature_dim: 4,
            hidden_dim: 6,
            rep_dim: 3,
            gcn_layers: 2,
            generative,
        }
    }

    #[test]
    fn ones_learner_passes_through_gated_input() {
        let x = DenseMatrix::<f64>::from_fn(4, 3, |r, c| 0.1 * (r + c) as f64);
        let h = view_learner_forward(&x, &LearnerParams::ones(3)).unwrap();
        assert!(h.max_abs_diff(&x.map(f64::tanh)) < 1e-15);
    }

    #[test]
    fn zero_gate_zeroes_column() {
        let x = DenseMatrix::<f64>::from_fn(4, 3, |r, c| 1.0 + (r * c) as f64);
        let mut p = LearnerParams::ones(3);
        p.w1.set(0, 1, 0.0);
        let h = view_learner_forward(&x, &p).unwrap();
        assert!((0..4).all(|r| h.get(r, 1) == 0.0));
    }

    #[test]
    fn learner_matches_scalar_loop() {
        let x = DenseMatrix::<f64>::from_fn(4, 3, |r, c| ((r * 3 + c) as f64).cos());
        let p = LearnerParams {
            w1: DenseMatrix::from_f64_rows(&[&[0.5, -1.2, 2.0]]),
            w2: DenseMatrix::from_f64_rows(&[&[1.5, 0.3, -0.7]]),
        };
        let h = view_learner_forward(&x, &p).unwrap();
        for r in 0..4 {
            for c in 0..3 {
                let want = (x.get(r, c) * p.w1.get(0, c)).tanh() * p.w2.get(0, c);
                assert!((h.get(r, c) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn orthogonal_rows_refine_to_identity() {
        let x = DenseMatrix::<f64>::identity(5);
        let a = refine_view(&x, &LearnerParams::ones(5), 3).unwrap();
        assert_eq!(a.to_dense(), DenseMatrix::identity(5));
    }

    #[test]
    fn identical_rows_refine_to_uniform_clique() {
        let x = DenseMatrix::<f64>::filled(4, 3, 0.7);
        let a = refine_view(&x, &LearnerParams::ones(3), 4).unwrap().to_dense();
        assert!(a.max_abs_diff(&DenseMatrix::filled(4, 4, 0.25)) < 1e-15);
    }

    #[test]
    fn tape_refinement_equals_value_pipeline() {
        let x = DenseMatrix::<f64>::from_fn(6, 4, |r, c| ((r * 5 + c * 2) as f64 * 0.37).sin());
        let p = LearnerParams {
            w1: DenseMatrix::from_f64_rows(&[&[1.0, 0.4, -0.8, 1.3]]),
            w2: DenseMatrix::from_f64_rows(&[&[0.9, 1.1, 0.5, -1.0]]),
        };
        let value = refine_view(&x, &p, 2).unwrap().to_dense();
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone());
        let b = constant_learner(&mut tape, &p);
        let h = learner_on_tape(&mut tape, xv, &b).unwrap();
        let adj = refine_on_tape(&mut tape, h, 2, KnnMode::Exact, 0).unwrap();
        let on_tape = adj.to_sparse(&tape).to_dense();
        assert!(value.max_abs_diff(&on_tape) < 1e-15);
    }

    #[test]
    fn gcn_identity_graph_single_layer() {
        let x = DenseMatrix::<f64>::from_fn(3, 2, |r, c| (r + 2 * c) as f64);
        let w = DenseMatrix::from_f64_rows(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        let z = gcn_forward(&SparseMatrix::identity(3), &x, &GcnParams { layers: vec![w] }).unwrap();
        assert_eq!(z.columns(0, 2).unwrap(), x);
        assert!((0..3).all(|r| z.get(r, 2) == 0.0));
    }

    #[test]
    fn gcn_shape_mismatch_is_error() {
        let x = DenseMatrix::<f64>::zeros(3, 2);
        let w = DenseMatrix::zeros(5, 1);
        assert!(gcn_forward(&SparseMatrix::identity(3), &x, &GcnParams { layers: vec![w] }).is_err());
    }

    #[test]
    fn decoder_has_no_bias() {
        let s = ModelState::<f64>::init(dims(true), 1);
        let out = decode_features(&DenseMatrix::zeros(5, 3), &s.decoders[0]).unwrap();
        assert_eq!(out, DenseMatrix::zeros(5, 4));
    }

    #[test]
    fn critic_of_identical_rows_is_one() {
        let s = ModelState::<f64>::init(dims(false), 4);
        let p = Projection::Mlp(s.projector.clone());
        let z = [0.3, -1.0, 0.8];
        assert!((critic_score(&z, &z, &p).unwrap() - 1.0).abs() < 1e-12);
        let id = Projection::Identity;
        assert_eq!(critic_score(&[1.0, 0.0], &[0.0, 2.0], &id).unwrap(), 0.0);
        assert_eq!(critic_score(&[0.0, 0.0], &[0.0, 2.0], &id).unwrap(), 0.0);
    }

    #[test]
    fn generator_weights_stay_on_edges() {
        let a = MultiplexGraph::<f64>::adjacency_from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let x = DenseMatrix::from_fn(5, 4, |r, c| (r as f64 - c as f64) * 0.3);
        let g = MultiplexGraph::new(vec![a.clone(), a.clone()], x, None, 1).unwrap();
        let s = ModelState::<f64>::init(dims(true), 2);
        let w = generator_edge_weights(&g, 0, &s.generators[0], 1.0, &mut seeded_rng(5)).unwrap();
        assert_eq!(w.pattern(), a.pattern());
        assert!(w.values().iter().all(|&v| v > 0.0 && v < 1.0));
        assert!(w.is_symmetric_within(1e-15));
    }

    #[test]
    fn bound_layout_matches_named() {
        let s = ModelState::<f64>::init(dims(true), 3);
        let mut tape = Tape::new();
        let b = s.bind(&mut tape, |_| true);
        for ((name, _, m), (bname, _, v)) in s.named().into_iter().zip(b.entries()) {
            assert_eq!(&name, bname);
            assert_eq!(tape.value(*v), m);
        }
        assert_eq!(tape.value(b.gcn[1]), &s.gcn.layers[1]);
        assert_eq!(tape.value(b.decoders[1].w2), &s.decoders[1].w2);
    }
}
