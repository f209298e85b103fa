use crate::dense::DenseMatrix;
use crate::error::{dim_err, Error, Result};
use crate::scalar::Scalar;

/// Adam moments for one parameter group.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub step: u64,
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    m: Vec<DenseMatrix<T>>,
    v: Vec<DenseMatrix<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(lr: f64) -> Self {
        Self {
            step: 0,
            lr: T::of(lr),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One bias-corrected update. Nothing is modified when any gradient is
    /// non-finite; the error names the offending parameter.
    pub fn update(
        &mut self,
        params: &mut [(String, &mut DenseMatrix<T>)],
        grads: &[DenseMatrix<T>],
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(dim_err(
                "adam_step",
                format!("{} params, {} grads", params.len(), grads.len()),
            ));
        }
        for ((name, p), g) in params.iter().zip(grads) {
            if p.shape() != g.shape() {
                return Err(dim_err(
                    "adam_step",
                    format!("{name}: param {:?}, grad {:?}", p.shape(), g.shape()),
                ));
            }
            if !g.is_finite() {
                return Err(Error::NonFinite {
                    what: format!("gradient of {name} at step {}", self.step + 1),
                });
            }
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| DenseMatrix::zeros(g.n_rows(), g.n_cols())).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != grads.len() || self.m.iter().zip(grads).any(|(m, g)| m.shape() != g.shape()) {
            return Err(dim_err("adam_step", "parameter layout changed between steps"));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::one() - self.beta1.powi(t);
        let bc2 = T::one() - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((_, p), g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((w, &gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *mi = b1 * *mi + (T::one() - b1) * gi;
                *vi = b2 * *vi + (T::one() - b2) * gi * gi;
                let mhat = *mi / bc1;
                let vhat = *vi / bc2;
                *w -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Free-function form of [`AdamState::update`].
pub fn adam_step<T: Scalar>(
    params: &mut [(String, &mut DenseMatrix<T>)],
    grads: &[DenseMatrix<T>],
    state: &mut AdamState<T>,
) -> Result<()> {
    state.update(params, grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_keeps_params() {
        let mut w = DenseMatrix::<f64>::filled(2, 2, 1.5);
        let before = w.clone();
        let mut st = AdamState::new(0.1);
        st.update(&mut [("w".into(), &mut w)], &[DenseMatrix::zeros(2, 2)])
            .unwrap();
        assert_eq!(w, before);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut w = DenseMatrix::<f64>::from_f64_rows(&[&[0.0, 0.0, 0.0]]);
        let g = DenseMatrix::from_f64_rows(&[&[3.0, -0.2, 1e-3]]);
        let mut st = AdamState::new(0.01);
        st.update(&mut [("w".into(), &mut w)], &[g]).unwrap();
        for (&wi, s) in w.data().iter().zip([-1.0, 1.0, -1.0]) {
            assert!((wi - 0.01 * s).abs() < 1e-7, "{wi}");
        }
    }

    #[test]
    fn minimizes_scalar_quadratic() {
        let mut w = DenseMatrix::<f64>::zeros(1, 1);
        let mut st = AdamState::new(0.1);
        for _ in 0..100 {
            let g = DenseMatrix::filled(1, 1, 2.0 * (w.get(0, 0) - 3.0));
            st.update(&mut [("w".into(), &mut w)], &[g]).unwrap();
        }
        assert!((w.get(0, 0) - 3.0).abs() < 0.1, "w = {}", w.get(0, 0));
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let mut w = DenseMatrix::<f64>::zeros(1, 1);
        let mut st = AdamState::new(0.1);
        let err = st
            .update(&mut [("gcn.0".into(), &mut w)], &[DenseMatrix::filled(1, 1, f64::NAN)])
            .unwrap_err();
        assert!(err.to_string().contains("gcn.0"));
        assert_eq!(st.step, 0);
    }
}
