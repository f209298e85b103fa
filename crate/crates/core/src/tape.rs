//! Minimal reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records every primitive in creation order, which is a valid
//! topological order, and [`Tape::backward`] walks it once in reverse.
//! Sparse adjacencies enter as an `nnz × 1` column of edge weights together
//! with a shared [`SparsityPattern`]; the structure itself is never
//! differentiated.

use std::sync::Arc;

use crate::dense::{dot, DenseMatrix};
use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;
use crate::sparse::{spmm_raw, SparsityPattern};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Fixed affine map between two edge-value vectors:
/// `out[u] = offset[u] + Σ coef · in[idx]`.
#[derive(Clone, Debug)]
pub struct SparseMap<T> {
    n_in: usize,
    out_offsets: Vec<usize>,
    in_indices: Vec<usize>,
    coefs: Vec<T>,
    offset: Vec<T>,
}

impl<T: Scalar> SparseMap<T> {
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.offset.len()
    }

    /// Map from the values on `p` to `offdiag((A + Aᵀ)/2) + I` stored on the
    /// union pattern `p ∪ pᵀ ∪ diag`, which is returned alongside.
    pub fn symmetrize_plus_identity(p: &SparsityPattern) -> (Self, SparsityPattern) {
        Self::symmetrize(p, true)
    }

    /// `(A + Aᵀ)/2`, optionally plus the identity, on `p ∪ pᵀ` (and the diagonal
    /// when `identity` is set).
    pub fn symmetrize(p: &SparsityPattern, identity: bool) -> (Self, SparsityPattern) {
        assert!(p.is_square(), "symmetrization needs a square pattern");
        let n = p.n_rows();
        let mut rows: Vec<Vec<usize>> = (0..n).map(|r| p.row_cols(r).to_vec()).collect();
        for r in 0..n {
            for &c in p.row_cols(r) {
                rows[c].push(r);
            }
            if identity {
                rows[r].push(r);
            }
        }
        let union = SparsityPattern::from_row_lists(n, rows).expect("valid union pattern");
        let half = T::half();
        let mut out_offsets = Vec::with_capacity(union.nnz() + 1);
        let mut in_indices = Vec::new();
        let mut coefs = Vec::new();
        let mut offset = Vec::with_capacity(union.nnz());
        out_offsets.push(0);
        for r in 0..n {
            for &c in union.row_cols(r) {
                if identity && r == c {
                    offset.push(T::one());
                    out_offsets.push(in_indices.len());
                    continue;
                }
                if let Some(e) = p.find(r, c) {
                    in_indices.push(e);
                    coefs.push(half);
                }
                if let Some(e) = p.find(c, r) {
                    in_indices.push(e);
                    coefs.push(half);
                }
                offset.push(T::zero());
                out_offsets.push(in_indices.len());
            }
        }
        let map = Self {
            n_in: p.nnz(),
            out_offsets,
            in_indices,
            coefs,
            offset,
        };
        (map, union)
    }

    fn apply(&self, input: &[T]) -> Vec<T> {
        (0..self.n_out())
            .map(|u| {
                let mut acc = self.offset[u];
                for t in self.out_offsets[u]..self.out_offsets[u + 1] {
                    acc += self.coefs[t] * input[self.in_indices[t]];
                }
                acc
            })
            .collect()
    }
}

enum Op<T> {
    Leaf,
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulRow(Var, Var),
    Scale(Var, T),
    Relu(Var),
    Elu(Var),
    Tanh(Var),
    Sigmoid(Var),
    Exp(Var),
    Log(Var),
    RowNormalize(Var),
    LogSoftmaxRows(Var),
    Diag(Var),
    Transpose(Var),
    Sum(Var),
    Mean(Var),
    RowSum(Var),
    ConcatCols(Vec<Var>),
    GatherRows(Var, Arc<Vec<usize>>),
    PairDot(Var, Arc<SparsityPattern>),
    SparseLinear(Var, Arc<SparseMap<T>>),
    SymNormalize(Var, Arc<SparsityPattern>),
    Spmm(Var, Arc<SparsityPattern>, Var),
}

struct Node<T> {
    value: DenseMatrix<T>,
    op: Op<T>,
    tracked: bool,
}

/// Append-only record of one forward pass.
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn same_shape<T: Scalar>(
    op: &'static str,
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(dim_err(op, format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

fn column<T: Scalar>(v: Vec<T>) -> DenseMatrix<T> {
    let n = v.len();
    DenseMatrix::from_vec(n, 1, v).expect("column vector")
}

impl<T: Scalar> Tape<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: DenseMatrix<T>, op: Op<T>, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    /// A leaf that receives a gradient.
    pub fn param(&mut self, value: DenseMatrix<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// A leaf excluded from differentiation.
    pub fn constant(&mut self, value: DenseMatrix<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn leaf(&mut self, value: DenseMatrix<T>, trainable: bool) -> Var {
        self.push(value, Op::Leaf, trainable)
    }

    pub fn value(&self, v: Var) -> &DenseMatrix<T> {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> T {
        self.value(v).get(0, 0)
    }

    fn unary(&mut self, a: Var, f: impl Fn(T) -> T, op: Op<T>) -> Var {
        let value = self.value(a).map(f);
        let t = self.tracked(a);
        self.push(value, op, t)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::MatMul(a, b), t))
    }

    /// `a · bᵀ`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul_t(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::MatMulT(a, b), t))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("add", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y)?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Add(a, b), t))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("sub", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y)?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Sub(a, b), t))
    }

    /// Hadamard product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape("mul", self.value(a), self.value(b))?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y)?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(value, Op::Mul(a, b), t))
    }

    /// `a ⊙ 1·w` where `w` is a `1 × cols` row broadcast to every row.
    pub fn mul_row(&mut self, a: Var, w: Var) -> Result<Var> {
        let (av, wv) = (self.value(a), self.value(w));
        if wv.n_rows() != 1 || wv.n_cols() != av.n_cols() {
            return Err(dim_err(
                "mul_row",
                format!("{:?} ⊙ row {:?}", av.shape(), wv.shape()),
            ));
        }
        let mut value = av.clone();
        let wr = wv.row(0).to_vec();
        for r in 0..value.n_rows() {
            for (x, &s) in value.row_mut(r).iter_mut().zip(&wr) {
                *x *= s;
            }
        }
        let t = self.tracked(a) || self.tracked(w);
        Ok(self.push(value, Op::MulRow(a, w), t))
    }

    pub fn scale(&mut self, a: Var, s: T) -> Var {
        self.unary(a, |x| x * s, Op::Scale(a, s))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, |x| if x > T::zero() { x } else { T::zero() }, Op::Relu(a))
    }

    pub fn elu(&mut self, a: Var) -> Var {
        self.unary(
            a,
            |x| if x > T::zero() { x } else { x.exp_m1() },
            Op::Elu(a),
        )
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.tanh(), Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, sigmoid, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.exp(), Op::Exp(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.unary(a, |x| x.ln(), Op::Log(a))
    }

    /// Unit-L2 rows; zero rows map to zero rows with zero gradient.
    pub fn row_normalize(&mut self, a: Var) -> Var {
        let value = crate::postprocess::l2_normalize_rows(self.value(a));
        let t = self.tracked(a);
        self.push(value, Op::RowNormalize(a), t)
    }

    pub fn log_softmax_rows(&mut self, a: Var) -> Var {
        let mut value = self.value(a).clone();
        for r in 0..value.n_rows() {
            let row = value.row_mut(r);
            let lse = log_sum_exp(row);
            for x in row.iter_mut() {
                *x -= lse;
            }
        }
        let t = self.tracked(a);
        self.push(value, Op::LogSoftmaxRows(a), t)
    }

    /// Diagonal of a square matrix as an `n × 1` column.
    pub fn diag(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        if av.n_rows() != av.n_cols() {
            return Err(dim_err("diag", format!("{:?}", av.shape())));
        }
        let value = column((0..av.n_rows()).map(|i| av.get(i, i)).collect());
        let t = self.tracked(a);
        Ok(self.push(value, Op::Diag(a), t))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let value = self.value(a).transpose();
        let t = self.tracked(a);
        self.push(value, Op::Transpose(a), t)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let value = DenseMatrix::filled(1, 1, self.value(a).sum());
        let t = self.tracked(a);
        self.push(value, Op::Sum(a), t)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let n = T::of(av.len().max(1) as f64);
        let value = DenseMatrix::filled(1, 1, av.sum() / n);
        let t = self.tracked(a);
        self.push(value, Op::Mean(a), t)
    }

    /// Per-row sums as an `n × 1` column.
    pub fn row_sum(&mut self, a: Var) -> Var {
        let value = column(self.value(a).rows().map(|r| r.iter().copied().sum()).collect());
        let t = self.tracked(a);
        self.push(value, Op::RowSum(a), t)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let mats: Vec<&DenseMatrix<T>> = parts.iter().map(|&p| self.value(p)).collect();
        let value = DenseMatrix::hcat(&mats)?;
        let t = parts.iter().any(|&p| self.tracked(p));
        Ok(self.push(value, Op::ConcatCols(parts.to_vec()), t))
    }

    pub fn gather_rows(&mut self, a: Var, idx: Arc<Vec<usize>>) -> Result<Var> {
        let av = self.value(a);
        if let Some(&bad) = idx.iter().find(|&&i| i >= av.n_rows()) {
            return Err(dim_err("gather_rows", format!("row {bad} of {}", av.n_rows())));
        }
        let value = av.select_rows(&idx);
        let t = self.tracked(a);
        Ok(self.push(value, Op::GatherRows(a, idx), t))
    }

    /// `h_r · h_c` for every stored entry `(r, c)` of `pattern`, as `nnz × 1`.
    pub fn pair_dot(&mut self, h: Var, pattern: Arc<SparsityPattern>) -> Result<Var> {
        let hv = self.value(h);
        if pattern.n_rows() != hv.n_rows() || pattern.n_cols() != hv.n_rows() {
            return Err(dim_err(
                "pair_dot",
                format!("pattern {}x{} on {:?}", pattern.n_rows(), pattern.n_cols(), hv.shape()),
            ));
        }
        let mut vals = Vec::with_capacity(pattern.nnz());
        for r in 0..pattern.n_rows() {
            let hr = hv.row(r);
            for &c in pattern.row_cols(r) {
                vals.push(dot(hr, hv.row(c)));
            }
        }
        let t = self.tracked(h);
        Ok(self.push(column(vals), Op::PairDot(h, pattern), t))
    }

    pub fn sparse_linear(&mut self, v: Var, map: Arc<SparseMap<T>>) -> Result<Var> {
        let vv = self.value(v);
        if vv.n_cols() != 1 || vv.n_rows() != map.n_in {
            return Err(dim_err(
                "sparse_linear",
                format!("input {:?}, map expects {}", vv.shape(), map.n_in),
            ));
        }
        let value = column(map.apply(vv.data()));
        let t = self.tracked(v);
        Ok(self.push(value, Op::SparseLinear(v, map), t))
    }

    /// `D^{-1/2} A D^{-1/2}` on edge values, `D` the row sums of `A`.
    pub fn sym_normalize(&mut self, v: Var, pattern: Arc<SparsityPattern>) -> Result<Var> {
        let vv = self.value(v);
        if vv.n_cols() != 1 || vv.n_rows() != pattern.nnz() || !pattern.is_square() {
            return Err(dim_err("sym_normalize", "value/pattern mismatch"));
        }
        let s = inv_sqrt_degrees(&pattern, vv.data())?;
        let mut vals = Vec::with_capacity(pattern.nnz());
        for r in 0..pattern.n_rows() {
            for e in pattern.row_range(r) {
                vals.push(vv.data()[e] * (s[r] * s[pattern.col_indices()[e]]));
            }
        }
        let t = self.tracked(v);
        Ok(self.push(column(vals), Op::SymNormalize(v, pattern), t))
    }

    /// Sparse (values on `pattern`) × dense.
    pub fn spmm(&mut self, values: Var, pattern: Arc<SparsityPattern>, x: Var) -> Result<Var> {
        let vv = self.value(values);
        if vv.n_cols() != 1 || vv.n_rows() != pattern.nnz() {
            return Err(dim_err("spmm", "value/pattern mismatch"));
        }
        let out = spmm_raw(&pattern, vv.data(), self.value(x))?;
        let t = self.tracked(values) || self.tracked(x);
        Ok(self.push(out, Op::Spmm(values, pattern, x), t))
    }

    /// Gradients of the `1 × 1` root with respect to every tracked node.
    pub fn backward(&self, loss: Var) -> Result<Gradients<T>> {
        let root = self.value(loss);
        if root.shape() != (1, 1) {
            return Err(contract_err(
                "backward",
                format!("root must be 1x1, got {:?}", root.shape()),
            ));
        }
        let mut grads: Vec<Option<DenseMatrix<T>>> = (0..self.nodes.len()).map(|_| None).collect();
        if !self.tracked(loss) {
            return Ok(Gradients { grads });
        }
        grads[loss.0] = Some(DenseMatrix::filled(1, 1, T::one()));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.tracked {
                continue;
            }
            self.propagate(node, &g, &mut grads)?;
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn acc(&self, grads: &mut [Option<DenseMatrix<T>>], v: Var, g: DenseMatrix<T>) {
        if !self.tracked(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&g),
            slot @ None => *slot = Some(g),
        }
    }

    fn propagate(
        &self,
        node: &Node<T>,
        g: &DenseMatrix<T>,
        grads: &mut [Option<DenseMatrix<T>>],
    ) -> Result<()> {
        let out = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.tracked(*a) {
                    self.acc(grads, *a, g.matmul_t(self.value(*b))?);
                }
                if self.tracked(*b) {
                    self.acc(grads, *b, self.value(*a).t_matmul(g)?);
                }
            }
            Op::MatMulT(a, b) => {
                if self.tracked(*a) {
                    self.acc(grads, *a, g.matmul(self.value(*b))?);
                }
                if self.tracked(*b) {
                    self.acc(grads, *b, g.t_matmul(self.value(*a))?);
                }
            }
            Op::Add(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.acc(grads, *a, g.clone());
                self.acc(grads, *b, g.scale(-T::one()));
            }
            Op::Mul(a, b) => {
                if self.tracked(*a) {
                    self.acc(grads, *a, g.zip_map(self.value(*b), |x, y| x * y)?);
                }
                if self.tracked(*b) {
                    self.acc(grads, *b, g.zip_map(self.value(*a), |x, y| x * y)?);
                }
            }
            Op::MulRow(a, w) => {
                let (av, wv) = (self.value(*a), self.value(*w));
                if self.tracked(*a) {
                    let mut ga = g.clone();
                    for r in 0..ga.n_rows() {
                        for (x, &s) in ga.row_mut(r).iter_mut().zip(wv.row(0)) {
                            *x *= s;
                        }
                    }
                    self.acc(grads, *a, ga);
                }
                if self.tracked(*w) {
                    let mut gw = DenseMatrix::zeros(1, wv.n_cols());
                    for r in 0..g.n_rows() {
                        for ((acc, &gi), &ai) in gw.row_mut(0).iter_mut().zip(g.row(r)).zip(av.row(r)) {
                            *acc += gi * ai;
                        }
                    }
                    self.acc(grads, *w, gw);
                }
            }
            Op::Scale(a, s) => self.acc(grads, *a, g.scale(*s)),
            Op::Relu(a) => {
                let ga = g.zip_map(self.value(*a), |gi, x| if x > T::zero() { gi } else { T::zero() })?;
                self.acc(grads, *a, ga);
            }
            Op::Elu(a) => {
                let ga = g.zip_map(out, |gi, y| if y > T::zero() { gi } else { gi * (y + T::one()) })?;
                self.acc(grads, *a, ga);
            }
            Op::Tanh(a) => {
                self.acc(grads, *a, g.zip_map(out, |gi, y| gi * (T::one() - y * y))?);
            }
            Op::Sigmoid(a) => {
                self.acc(grads, *a, g.zip_map(out, |gi, y| gi * y * (T::one() - y))?);
            }
            Op::Exp(a) => self.acc(grads, *a, g.zip_map(out, |gi, y| gi * y)?),
            Op::Log(a) => self.acc(grads, *a, g.zip_map(self.value(*a), |gi, x| gi / x)?),
            Op::RowNormalize(a) => {
                let av = self.value(*a);
                let mut ga = DenseMatrix::zeros(av.n_rows(), av.n_cols());
                for r in 0..av.n_rows() {
                    let norm = dot(av.row(r), av.row(r)).sqrt();
                    if norm == T::zero() {
                        continue;
                    }
                    let y = out.row(r);
                    let gr = g.row(r);
                    let proj = dot(y, gr);
                    for ((o, &yi), &gi) in ga.row_mut(r).iter_mut().zip(y).zip(gr) {
                        *o = (gi - yi * proj) / norm;
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::LogSoftmaxRows(a) => {
                let mut ga = g.clone();
                for r in 0..ga.n_rows() {
                    let gsum: T = g.row(r).iter().copied().sum();
                    for (o, &y) in ga.row_mut(r).iter_mut().zip(out.row(r)) {
                        *o -= y.exp() * gsum;
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::Diag(a) => {
                let n = g.n_rows();
                let mut ga = DenseMatrix::zeros(n, n);
                for i in 0..n {
                    ga.set(i, i, g.get(i, 0));
                }
                self.acc(grads, *a, ga);
            }
            Op::Transpose(a) => self.acc(grads, *a, g.transpose()),
            Op::Sum(a) => {
                let (r, c) = self.value(*a).shape();
                self.acc(grads, *a, DenseMatrix::filled(r, c, g.get(0, 0)));
            }
            Op::Mean(a) => {
                let (r, c) = self.value(*a).shape();
                let n = T::of((r * c).max(1) as f64);
                self.acc(grads, *a, DenseMatrix::filled(r, c, g.get(0, 0) / n));
            }
            Op::RowSum(a) => {
                let (r, c) = self.value(*a).shape();
                self.acc(grads, *a, DenseMatrix::from_fn(r, c, |i, _| g.get(i, 0)));
            }
            Op::ConcatCols(parts) => {
                let mut start = 0;
                for &p in parts {
                    let w = self.value(p).n_cols();
                    if self.tracked(p) {
                        self.acc(grads, p, g.columns(start, w)?);
                    }
                    start += w;
                }
            }
            Op::GatherRows(a, idx) => {
                let (r, c) = self.value(*a).shape();
                let mut ga = DenseMatrix::zeros(r, c);
                for (k, &i) in idx.iter().enumerate() {
                    for (o, &gi) in ga.row_mut(i).iter_mut().zip(g.row(k)) {
                        *o += gi;
                    }
                }
                self.acc(grads, *a, ga);
            }
            Op::PairDot(h, pattern) => {
                let hv = self.value(*h);
                let mut gh = DenseMatrix::zeros(hv.n_rows(), hv.n_cols());
                for r in 0..pattern.n_rows() {
                    for e in pattern.row_range(r) {
                        let c = pattern.col_indices()[e];
                        let ge = g.data()[e];
                        if ge == T::zero() {
                            continue;
                        }
                        for (o, &x) in gh.row_mut(r).iter_mut().zip(hv.row(c)) {
                            *o += ge * x;
                        }
                        for (o, &x) in gh.row_mut(c).iter_mut().zip(hv.row(r)) {
                            *o += ge * x;
                        }
                    }
                }
                self.acc(grads, *h, gh);
            }
            Op::SparseLinear(v, map) => {
                let mut gv = vec![T::zero(); map.n_in];
                for u in 0..map.n_out() {
                    let gu = g.data()[u];
                    for t in map.out_offsets[u]..map.out_offsets[u + 1] {
                        gv[map.in_indices[t]] += map.coefs[t] * gu;
                    }
                }
                self.acc(grads, *v, column(gv));
            }
            Op::SymNormalize(v, pattern) => {
                let a = self.value(*v).data();
                let s = inv_sqrt_degrees(pattern, a)?;
                let n = pattern.n_rows();
                let cols = pattern.col_indices();
                let mut gs = vec![T::zero(); n];
                let mut ga = vec![T::zero(); a.len()];
                for r in 0..n {
                    for e in pattern.row_range(r) {
                        let c = cols[e];
                        let ge = g.data()[e];
                        ga[e] = ge * s[r] * s[c];
                        gs[r] += ge * a[e] * s[c];
                        gs[c] += ge * a[e] * s[r];
                    }
                }
                // s = d^{-1/2}  ⇒  ds/dd = -s³/2
                let gd: Vec<T> = gs
                    .iter()
                    .zip(&s)
                    .map(|(&gsi, &si)| -T::half() * gsi * si * si * si)
                    .collect();
                for r in 0..n {
                    for e in pattern.row_range(r) {
                        ga[e] += gd[r];
                    }
                }
                self.acc(grads, *v, column(ga));
            }
            Op::Spmm(values, pattern, x) => {
                let vals = self.value(*values).data();
                let xv = self.value(*x);
                let cols = pattern.col_indices();
                if self.tracked(*x) {
                    let mut gx = DenseMatrix::zeros(xv.n_rows(), xv.n_cols());
                    for r in 0..pattern.n_rows() {
                        for e in pattern.row_range(r) {
                            let w = vals[e];
                            for (o, &gi) in gx.row_mut(cols[e]).iter_mut().zip(g.row(r)) {
                                *o += w * gi;
                            }
                        }
                    }
                    self.acc(grads, *x, gx);
                }
                if self.tracked(*values) {
                    let mut gv = Vec::with_capacity(vals.len());
                    for r in 0..pattern.n_rows() {
                        for e in pattern.row_range(r) {
                            gv.push(dot(g.row(r), xv.row(cols[e])));
                        }
                    }
                    self.acc(grads, *values, column(gv));
                }
            }
        }
        Ok(())
    }
}

fn inv_sqrt_degrees<T: Scalar>(pattern: &SparsityPattern, values: &[T]) -> Result<Vec<T>> {
    (0..pattern.n_rows())
        .map(|r| {
            let d: T = pattern.row_range(r).map(|e| values[e]).sum();
            if d > T::zero() {
                Ok(T::one() / d.sqrt())
            } else {
                Err(contract_err("sym_normalize", format!("row {r} has degree {d}")))
            }
        })
        .collect()
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub fn log_sum_exp<T: Scalar>(row: &[T]) -> T {
    let m = row.iter().copied().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    m + row.iter().map(|&x| (x - m).exp()).sum::<T>().ln()
}

/// Result of [`Tape::backward`].
pub struct Gradients<T> {
    grads: Vec<Option<DenseMatrix<T>>>,
}

impl<T: Scalar> Gradients<T> {
    pub fn get(&self, v: Var) -> Option<&DenseMatrix<T>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Gradient of `v`, zero-filled when `v` was unreachable from the root.
    pub fn wrt(&self, tape: &Tape<T>, v: Var) -> DenseMatrix<T> {
        self.get(v).cloned().unwrap_or_else(|| {
            let (r, c) = tape.value(v).shape();
            DenseMatrix::zeros(r, c)
        })
    }
}
