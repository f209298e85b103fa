//! Parameter-free view aggregation, computed once before training.

use std::cell::Cell;

use crate::dense::DenseMatrix;
use crate::error::{dim_err, Result};
use crate::graph::MultiplexGraph;
use crate::postprocess::normalize_sym;
use crate::scalar::Scalar;

thread_local! {
    static SGC_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Number of [`sgc_features`] calls made on the current thread.
pub fn sgc_call_count() -> usize {
    SGC_CALLS.with(Cell::get)
}

/// View-specific aggregated features `X^v`, one per view.
#[derive(Clone, Debug, PartialEq)]
pub struct ViewFeatures<T> {
    pub per_view: Vec<DenseMatrix<T>>,
    pub order_r: usize,
}

/// `X^v = (D̃^{-1/2} Ã_v D̃^{-1/2})^r X` for every view, with `Ã_v = A_v + I`.
pub fn sgc_features<T: Scalar>(g: &MultiplexGraph<T>, r: usize) -> Result<ViewFeatures<T>> {
    SGC_CALLS.with(|c| c.set(c.get() + 1));
    let per_view = g
        .views
        .iter()
        .map(|a| {
            let op = normalize_sym(a)?;
            let mut x = g.features.clone();
            for _ in 0..r {
                x = op.spmm(&x)?;
            }
            Ok(x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ViewFeatures {
        per_view,
        order_r: r,
    })
}

/// `[X | X^1 | … | X^V]`, the fused learner's input.
pub fn fusion_input<T: Scalar>(x: &DenseMatrix<T>, vf: &ViewFeatures<T>) -> Result<DenseMatrix<T>> {
    if let Some(bad) = vf.per_view.iter().find(|v| v.n_rows() != x.n_rows()) {
        return Err(dim_err(
            "fusion_input",
            format!("features have {} rows, view features {}", x.n_rows(), bad.n_rows()),
        ));
    }
    let mut parts = vec![x];
    parts.extend(vf.per_view.iter());
    DenseMatrix::hcat(&parts)
}
