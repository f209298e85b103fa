//! Contrastive mutual-information bounds and the two training losses.
//!
//! Every bound is computed per node on projected, L2-normalized
//! representations with critic `f(a, b) = cos(proj(a), proj(b))` and averaged
//! over both directions `(i → j)` and `(j → i)`.

use std::sync::Arc;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{contract_err, dim_err, Result};
use crate::features::ViewFeatures;
use crate::model::{mlp_on_tape, Activation, BoundMlp, Projection};
use crate::rng::Rng;
use crate::scalar::Scalar;
use crate::tape::{Tape, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiEstimate<T> {
    pub value: T,
    pub per_node: Vec<T>,
    pub bound_kind: BoundKind,
    pub tau_c: T,
}

/// Loss values of one epoch; the generative terms only exist for LA runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_s: f64,
    pub l_u: f64,
    pub l_f: f64,
    pub total: f64,
    pub l_gen_recon: Option<f64>,
    pub l_gen_mi: Option<f64>,
    pub l_gen_total: Option<f64>,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.l_s, self.l_u, self.l_f, self.total]
            .into_iter()
            .chain(self.l_gen_recon)
            .chain(self.l_gen_mi)
            .chain(self.l_gen_total)
            .all(f64::is_finite)
    }
}

/// Node subset used as the negative pool, or `None` for all nodes.
pub fn sample_batch(n: usize, batch: Option<usize>, rng: &mut Rng) -> Result<Option<Arc<Vec<usize>>>> {
    match batch {
        None => Ok(None),
        Some(b) if b < 2 => Err(contract_err("mi_lower", format!("batch {b} < 2"))),
        Some(b) if b >= n => Ok(None),
        Some(b) => {
            let mut idx = sample(rng, n, b).into_vec();
            idx.sort_unstable();
            Ok(Some(Arc::new(idx)))
        }
    }
}

/// `proj(z)` with unit rows; `proj = None` is the identity.
pub fn embed_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    z: Var,
    proj: Option<&BoundMlp>,
    batch: Option<&Arc<Vec<usize>>>,
) -> Result<Var> {
    let z = match batch {
        Some(idx) => tape.gather_rows(z, idx.clone())?,
        None => z,
    };
    let p = match proj {
        Some(m) => mlp_on_tape(tape, z, m, Activation::Elu)?,
        None => z,
    };
    Ok(tape.row_normalize(p))
}

fn scores<T: Scalar>(tape: &mut Tape<T>, ei: Var, ej: Var, tau_c: T) -> Result<Var> {
    let (a, b) = (tape.value(ei).shape(), tape.value(ej).shape());
    if a != b {
        return Err(dim_err("mi_bound", format!("{a:?} vs {b:?}")));
    }
    let s = tape.matmul_t(ei, ej)?;
    Ok(tape.scale(s, T::one() / tau_c))
}

/// Per-node InfoNCE terms as an `n × 1` column.
pub fn mi_lower_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    ei: Var,
    ej: Var,
    tau_c: T,
) -> Result<Var> {
    let s = scores(tape, ei, ej, tau_c)?;
    let fwd = tape.log_softmax_rows(s);
    let fwd = tape.diag(fwd)?;
    let st = tape.transpose(s);
    let bwd = tape.log_softmax_rows(st);
    let bwd = tape.diag(bwd)?;
    let both = tape.add(fwd, bwd)?;
    Ok(tape.scale(both, T::half()))
}

/// Per-node difference-form upper-bound terms as an `n × 1` column.
pub fn mi_upper_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    ei: Var,
    ej: Var,
    tau_c: T,
) -> Result<Var> {
    let s = scores(tape, ei, ej, tau_c)?;
    let n = tape.value(s).n_rows();
    // Subtracting the positive before averaging keeps identical rows at an
    // exact zero.
    let d = tape.diag(s)?;
    let ones = tape.constant(DenseMatrix::filled(1, n, T::one()));
    let pos = tape.matmul(d, ones)?;
    let fwd = tape.sub(s, pos)?;
    let fwd = tape.row_sum(fwd);
    let st = tape.transpose(s);
    let bwd = tape.sub(st, pos)?;
    let bwd = tape.row_sum(bwd);
    let both = tape.add(fwd, bwd)?;
    Ok(tape.scale(both, -T::half() / T::of(n as f64)))
}

fn estimate<T: Scalar>(
    zi: &DenseMatrix<T>,
    zj: &DenseMatrix<T>,
    proj: &Projection<T>,
    tau_c: T,
    batch: Option<Arc<Vec<usize>>>,
    kind: BoundKind,
) -> Result<MiEstimate<T>> {
    if zi.shape() != zj.shape() {
        return Err(dim_err("mi_bound", format!("{:?} vs {:?}", zi.shape(), zj.shape())));
    }
    if tau_c <= T::zero() {
        return Err(contract_err("mi_bound", "tau_c must be positive"));
    }
    let mut tape = Tape::new();
    let bound = match proj {
        Projection::Identity => None,
        Projection::Mlp(p) => Some(BoundMlp {
            w1: tape.constant(p.w1.clone()),
            w2: tape.constant(p.w2.clone()),
        }),
    };
    let a = tape.constant(zi.clone());
    let b = tape.constant(zj.clone());
    let ea = embed_on_tape(&mut tape, a, bound.as_ref(), batch.as_ref())?;
    let eb = embed_on_tape(&mut tape, b, bound.as_ref(), batch.as_ref())?;
    let per = match kind {
        BoundKind::Lower => mi_lower_on_tape(&mut tape, ea, eb, tau_c)?,
        BoundKind::Upper => mi_upper_on_tape(&mut tape, ea, eb, tau_c)?,
    };
    let per_node = tape.value(per).data().to_vec();
    let value = per_node.iter().copied().sum::<T>() / T::of(per_node.len().max(1) as f64);
    Ok(MiEstimate {
        value,
        per_node,
        bound_kind: kind,
        tau_c,
    })
}

/// InfoNCE lower bound on `I(zi; zj)`; with `batch`, negatives come from a
/// uniformly drawn node subset of that size.
pub fn mi_lower<T: Scalar>(
    zi: &DenseMatrix<T>,
    zj: &DenseMatrix<T>,
    proj: &Projection<T>,
    tau_c: T,
    batch: Option<usize>,
    rng: &mut Rng,
) -> Result<MiEstimate<T>> {
    let idx = sample_batch(zi.n_rows(), batch, rng)?;
    estimate(zi, zj, proj, tau_c, idx, BoundKind::Lower)
}

/// Upper bound on `I(zi; zj)` with the critic held fixed.
pub fn mi_upper<T: Scalar>(
    zi: &DenseMatrix<T>,
    zj: &DenseMatrix<T>,
    proj: &Projection<T>,
    tau_c: T,
) -> Result<MiEstimate<T>> {
    estimate(zi, zj, proj, tau_c, None, BoundKind::Upper)
}

/// Tape handles of the three contrastive terms and their sum.
#[derive(Clone, Copy, Debug)]
pub struct TotalLossVars {
    pub l_s: Var,
    pub l_u: Var,
    pub l_f: Var,
    pub total: Var,
}

/// `𝓛 = 𝓛_s + 𝓛_u + 𝓛_f` over view reps `reps`, augmented reps `aug` and
/// fused reps `fused`.
pub fn loss_total_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    reps: &[Var],
    aug: &[Var],
    fused: Var,
    proj: Option<&BoundMlp>,
    tau_c: T,
    batch: Option<&Arc<Vec<usize>>>,
) -> Result<TotalLossVars> {
    let v = reps.len();
    if v == 0 || aug.len() != v {
        return Err(dim_err("loss_total", format!("{v} views, {} augmented", aug.len())));
    }
    let emb: Vec<Var> = reps
        .iter()
        .map(|&z| embed_on_tape(tape, z, proj, batch))
        .collect::<Result<_>>()?;
    let emb_aug: Vec<Var> = aug
        .iter()
        .map(|&z| embed_on_tape(tape, z, proj, batch))
        .collect::<Result<_>>()?;
    let emb_f = embed_on_tape(tape, fused, proj, batch)?;

    let mi = |tape: &mut Tape<T>, a: Var, b: Var| -> Result<Var> {
        let per = mi_lower_on_tape(tape, a, b, tau_c)?;
        Ok(tape.mean(per))
    };
    let sum_scaled = |tape: &mut Tape<T>, terms: Vec<Var>, coef: T| -> Result<Var> {
        let mut acc = terms[0];
        for &t in &terms[1..] {
            acc = tape.add(acc, t)?;
        }
        Ok(tape.scale(acc, coef))
    };

    let mut shared = Vec::new();
    for i in 0..v {
        for j in i + 1..v {
            shared.push(mi(tape, emb[i], emb[j])?);
        }
    }
    let l_s = if shared.is_empty() {
        tape.constant(DenseMatrix::zeros(1, 1))
    } else {
        let coef = -T::of(2.0 / (v * (v - 1)) as f64);
        sum_scaled(tape, shared, coef)?
    };
    let unique = (0..v).map(|i| mi(tape, emb[i], emb_aug[i])).collect::<Result<Vec<_>>>()?;
    let l_u = sum_scaled(tape, unique, -T::one() / T::of(v as f64))?;
    let fusion = (0..v).map(|i| mi(tape, emb_f, emb[i])).collect::<Result<Vec<_>>>()?;
    let l_f = sum_scaled(tape, fusion, -T::one() / T::of(v as f64))?;
    let su = tape.add(l_s, l_u)?;
    let total = tape.add(su, l_f)?;
    Ok(TotalLossVars { l_s, l_u, l_f, total })
}

#[derive(Clone, Copy, Debug)]
pub struct GenLossVars {
    pub recon: Var,
    pub mi: Var,
    pub total: Var,
}

/// `(1/N) Σ_j (1 − cos(x_j, x̂_j))`; zero rows on either side score 1.
pub fn recon_on_tape<T: Scalar>(tape: &mut Tape<T>, x: Var, xhat: Var) -> Result<Var> {
    let a = tape.row_normalize(x);
    let b = tape.row_normalize(xhat);
    let prod = tape.mul(a, b)?;
    let cos = tape.row_sum(prod);
    let m = tape.mean(cos);
    let neg = tape.scale(m, -T::one());
    let one = tape.constant(DenseMatrix::filled(1, 1, T::one()));
    tape.add(one, neg)
}

/// `𝓛_gen = recon + λ · mean_i I_ub(Z^i; Z^{i'})`. The critic projector is
/// whatever `proj_ub` points at; bind it as constants to keep it fixed.
#[allow(clippy::too_many_arguments)]
pub fn loss_gen_on_tape<T: Scalar>(
    tape: &mut Tape<T>,
    targets: &[Var],
    xhat: &[Var],
    reps: &[Var],
    aug: &[Var],
    proj_ub: Option<&BoundMlp>,
    tau_c: T,
    lambda: T,
    batch: Option<&Arc<Vec<usize>>>,
) -> Result<GenLossVars> {
    let v = targets.len();
    if v == 0 || xhat.len() != v || reps.len() != v || aug.len() != v {
        return Err(dim_err("loss_gen", "per-view inputs differ in length"));
    }
    let inv_v = T::one() / T::of(v as f64);
    let mut recon = tape.constant(DenseMatrix::zeros(1, 1));
    let mut mi = tape.constant(DenseMatrix::zeros(1, 1));
    for i in 0..v {
        let r = recon_on_tape(tape, targets[i], xhat[i])?;
        recon = tape.add(recon, r)?;
        let a = embed_on_tape(tape, reps[i], proj_ub, batch)?;
        let b = embed_on_tape(tape, aug[i], proj_ub, batch)?;
        let per = mi_upper_on_tape(tape, a, b, tau_c)?;
        let m = tape.mean(per);
        mi = tape.add(mi, m)?;
    }
    let recon = tape.scale(recon, inv_v);
    let mi = tape.scale(mi, inv_v);
    let weighted = tape.scale(mi, lambda);
    let total = tape.add(recon, weighted)?;
    Ok(GenLossVars { recon, mi, total })
}

fn bind_projection<T: Scalar>(tape: &mut Tape<T>, proj: &Projection<T>) -> Option<BoundMlp> {
    match proj {
        Projection::Identity => None,
        Projection::Mlp(p) => Some(BoundMlp {
            w1: tape.constant(p.w1.clone()),
            w2: tape.constant(p.w2.clone()),
        }),
    }
}

/// Value-level [`loss_total_on_tape`] with all nodes as negatives.
pub fn loss_total<T: Scalar>(
    reps: &[DenseMatrix<T>],
    aug: &[DenseMatrix<T>],
    fused: &DenseMatrix<T>,
    proj: &Projection<T>,
    tau_c: T,
) -> Result<LossBreakdown> {
    let mut tape = Tape::new();
    let bound = bind_projection(&mut tape, proj);
    let r: Vec<Var> = reps.iter().map(|z| tape.constant(z.clone())).collect();
    let a: Vec<Var> = aug.iter().map(|z| tape.constant(z.clone())).collect();
    let f = tape.constant(fused.clone());
    let l = loss_total_on_tape(&mut tape, &r, &a, f, bound.as_ref(), tau_c, None)?;
    Ok(LossBreakdown {
        l_s: tape.scalar(l.l_s).as_f64(),
        l_u: tape.scalar(l.l_u).as_f64(),
        l_f: tape.scalar(l.l_f).as_f64(),
        total: tape.scalar(l.total).as_f64(),
        ..Default::default()
    })
}

/// Value-level [`loss_gen_on_tape`]; fills only the generative fields.
pub fn loss_gen<T: Scalar>(
    xv: &ViewFeatures<T>,
    xhat: &[DenseMatrix<T>],
    reps: &[DenseMatrix<T>],
    aug: &[DenseMatrix<T>],
    proj_ub: &Projection<T>,
    tau_c: T,
    lambda: T,
) -> Result<LossBreakdown> {
    if lambda < T::zero() {
        return Err(contract_err("loss_gen", "lambda must be non-negative"));
    }
    let mut tape = Tape::new();
    let bound = bind_projection(&mut tape, proj_ub);
    let mut consts = |ms: &[DenseMatrix<T>]| -> Vec<Var> {
        ms.iter().map(|m| tape.constant(m.clone())).collect()
    };
    let t = consts(&xv.per_view);
    let h = consts(xhat);
    let r = consts(reps);
    let a = consts(aug);
    let l = loss_gen_on_tape(&mut tape, &t, &h, &r, &a, bound.as_ref(), tau_c, lambda, None)?;
    Ok(LossBreakdown {
        l_gen_recon: Some(tape.scalar(l.recon).as_f64()),
        l_gen_mi: Some(tape.scalar(l.mi).as_f64()),
        l_gen_total: Some(tape.scalar(l.total).as_f64()),
        ..Default::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn rand_dense(n: usize, d: usize, seed: u64) -> DenseMatrix<f64> {
        use rand::Rng as _;
        let mut rng = seeded_rng(seed);
        DenseMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn single_node_lower_is_zero() {
        let z = DenseMatrix::from_f64_rows(&[&[0.3, 0.4]]);
        let e = mi_lower(&z, &z, &Projection::Identity, 0.5, None, &mut seeded_rng(0)).unwrap();
        assert_eq!(e.per_node, vec![0.0]);
    }

    #[test]
    fn identical_rows_lower_is_minus_ln_n() {
        let z = DenseMatrix::filled(7, 3, 0.6);
        let e = mi_lower(&z, &z, &Projection::Identity, 0.2, None, &mut seeded_rng(0)).unwrap();
        for t in e.per_node {
            assert!((t + 7f64.ln()).abs() < 1e-12);
        }
        let u = mi_upper(&z, &z, &Projection::Identity, 0.2).unwrap();
        assert!(u.per_node.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn two_node_one_hot_cases() {
        let z = DenseMatrix::<f64>::identity(2);
        let id = Projection::Identity;
        let lo = mi_lower(&z, &z, &id, 0.2, None, &mut seeded_rng(0)).unwrap();
        let want = -(1.0 + (-5f64).exp()).ln();
        assert!(lo.per_node.iter().all(|&t| (t - want).abs() < 1e-12));
        let up = mi_upper(&z, &z, &id, 0.2).unwrap();
        assert!(up.per_node.iter().all(|&t| (t - 2.5).abs() < 1e-12));
    }

    #[test]
    fn lower_terms_bounded_by_softmax() {
        let (a, b) = (rand_dense(30, 4, 1), rand_dense(30, 4, 2));
        let e = mi_lower(&a, &b, &Projection::Identity, 0.3, None, &mut seeded_rng(0)).unwrap();
        assert!(e.per_node.iter().all(|&t| t <= 0.0));
        assert!(e.value >= -(30f64.ln()) - 1e-12 - 2.0 / 0.3);
    }

    #[test]
    fn batched_lower_uses_batch_nodes() {
        let (a, b) = (rand_dense(50, 4, 3), rand_dense(50, 4, 4));
        let e = mi_lower(&a, &b, &Projection::Identity, 0.5, Some(10), &mut seeded_rng(1)).unwrap();
        assert_eq!(e.per_node.len(), 10);
        assert!(mi_lower(&a, &b, &Projection::Identity, 0.5, Some(1), &mut seeded_rng(1)).is_err());
        let full = mi_lower(&a, &b, &Projection::Identity, 0.5, Some(80), &mut seeded_rng(1)).unwrap();
        assert_eq!(full.per_node.len(), 50);
    }

    #[test]
    fn total_with_identical_reps_is_ln_n_each() {
        let z = DenseMatrix::filled(5, 3, 1.0);
        let reps = vec![z.clone(), z.clone()];
        let l = loss_total(&reps, &reps, &z, &Projection::Identity, 0.2).unwrap();
        for t in [l.l_s, l.l_u, l.l_f] {
            assert!((t - 5f64.ln()).abs() < 1e-12);
        }
        assert_eq!(l.total, l.l_s + l.l_u + l.l_f);
    }

    #[test]
    fn total_matches_sum_of_bounds_and_is_view_symmetric() {
        let reps = vec![rand_dense(4, 3, 10), rand_dense(4, 3, 11)];
        let aug = vec![rand_dense(4, 3, 12), rand_dense(4, 3, 13)];
        let f = rand_dense(4, 3, 14);
        let id = Projection::Identity;
        let l = loss_total(&reps, &aug, &f, &id, 0.4).unwrap();
        let lb = |a: &DenseMatrix<f64>, b: &DenseMatrix<f64>| {
            mi_lower(a, b, &id, 0.4, None, &mut seeded_rng(0)).unwrap().value
        };
        assert!((l.l_s + lb(&reps[0], &reps[1])).abs() < 1e-12);
        assert!((l.l_u + 0.5 * (lb(&reps[0], &aug[0]) + lb(&reps[1], &aug[1]))).abs() < 1e-12);
        assert!((l.l_f + 0.5 * (lb(&f, &reps[0]) + lb(&f, &reps[1]))).abs() < 1e-12);
        let swapped = loss_total(&[reps[1].clone(), reps[0].clone()], &aug, &f, &id, 0.4).unwrap();
        assert!((swapped.l_s - l.l_s).abs() < 1e-12);
    }

    #[test]
    fn single_view_has_no_shared_term() {
        let z = rand_dense(6, 3, 20);
        let l = loss_total(&[z.clone()], &[z.clone()], &z, &Projection::Identity, 0.5).unwrap();
        assert_eq!(l.l_s, 0.0);
    }

    #[test]
    fn gen_reconstruction_cases() {
        let x = rand_dense(6, 4, 30);
        let vf = ViewFeatures {
            per_view: vec![x.clone()],
            order_r: 0,
        };
        let z = vec![rand_dense(6, 3, 31)];
        let id = Projection::Identity;
        let exact = loss_gen(&vf, &[x.clone()], &z, &z, &id, 0.5, 1.0).unwrap();
        assert!(exact.l_gen_recon.unwrap().abs() < 1e-12);
        let neg = loss_gen(&vf, &[x.scale(-1.0)], &z, &z, &id, 0.5, 0.0).unwrap();
        assert!((neg.l_gen_recon.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(neg.l_gen_total, neg.l_gen_recon);
        let zero = loss_gen(&vf, &[DenseMatrix::zeros(6, 4)], &z, &z, &id, 0.5, 0.0).unwrap();
        assert!((zero.l_gen_recon.unwrap() - 1.0).abs() < 1e-12);
        assert!(loss_gen(&vf, &[x], &z, &z, &id, 0.5, -1.0).is_err());
    }

    #[test]
    fn upper_near_zero_for_independent_vectors() {
        let (a, b) = (rand_dense(1000, 8, 40), rand_dense(1000, 8, 41));
        let u = mi_upper(&a, &b, &Projection::Identity, 0.2).unwrap();
        assert!(u.value.abs() < 0.2, "{}", u.value);
    }
}
