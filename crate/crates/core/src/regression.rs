//! Kernel ridge regression with an RBF kernel.
//!
//! This is the configuration abstraction used by the regression-guided
//! equivalence search: a map from scorer configurations to WFA
//! configurations. With ridge `λ` the prediction coincides with the posterior
//! mean of a zero-mean Gaussian process with noise variance `λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{lstsq_cutoff, numeric_rank, squared_distance, svd, Matrix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    pub length_scale: f64,
}

impl Default for RbfKernel {
    fn default() -> Self {
        RbfKernel { length_scale: 1.0 }
    }
}

impl RbfKernel {
    pub fn new(length_scale: f64) -> Result<Self> {
        if !(length_scale > 0.0 && length_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("length scale {length_scale}")));
        }
        Ok(RbfKernel { length_scale })
    }

    /// `exp(−‖x − y‖² / 2ℓ²)`
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("kernel on {} and {} dims", x.len(), y.len())));
        }
        Ok(self.eval_unchecked(x, y))
    }

    #[inline]
    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (-squared_distance(x, y) / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    pub fn gram(&self, xs: &[Vec<f64>]) -> Matrix {
        let n = xs.len();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            k[(i, i)] = 1.0;
            for j in 0..i {
                let v = self.eval_unchecked(&xs[i], &xs[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }
}

/// Hyperparameters shared by every fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressorSettings {
    pub length_scale: f64,
    pub ridge: f64,
}

impl Default for RegressorSettings {
    fn default() -> Self {
        RegressorSettings { length_scale: 1.0, ridge: 1e-10 }
    }
}

#[derive(Clone, Debug)]
enum Model {
    Unfitted,
    Constant(Vec<f64>),
    Kernel { inputs: Vec<Vec<f64>>, dual: Matrix },
}

#[derive(Clone, Debug)]
pub struct Regressor {
    kernel: RbfKernel,
    ridge: f64,
    model: Model,
}

impl Regressor {
    pub fn unfitted(kernel: RbfKernel, ridge: f64) -> Self {
        Regressor { kernel, ridge, model: Model::Unfitted }
    }

    /// A regressor predicting `value` everywhere.
    pub fn constant(value: Vec<f64>) -> Self {
        Regressor { kernel: RbfKernel::default(), ridge: 0.0, model: Model::Constant(value) }
    }

    /// Solves `(K + λI)·W = Y` for the dual weights through the SVD.
    ///
    /// With `λ = 0` a numerically singular Gram matrix (duplicate inputs) is
    /// an error rather than a silent pseudoinverse.
    pub fn fit(xs: &[Vec<f64>], ys: &[Vec<f64>], kernel: RbfKernel, ridge: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Dimension(format!(
                "{} inputs and {} targets",
                xs.len(),
                ys.len()
            )));
        }
        if ridge.is_nan() || ridge < 0.0 {
            return Err(Error::InvalidParameter(format!("ridge {ridge}")));
        }
        let d = xs[0].len();
        let k = ys[0].len();
        if xs.iter().any(|x| x.len() != d) || ys.iter().any(|y| y.len() != k) {
            return Err(Error::Dimension("inconsistent input or target dimensions".into()));
        }
        let n = xs.len();
        let mut gram = kernel.gram(xs);
        for i in 0..n {
            gram[(i, i)] += ridge;
        }
        let tol = f64::EPSILON * n as f64;
        if ridge == 0.0 {
            let rank = numeric_rank(&svd(&gram)?.singular_values, tol);
            if rank < n {
                return Err(Error::SingularSystem(format!("Gram matrix rank {rank} < {n}")));
            }
        }
        let targets = Matrix::from_rows(ys)?;
        let dual = lstsq_cutoff(&gram, &targets, tol)?.x;
        Ok(Regressor { kernel, ridge, model: Model::Kernel { inputs: xs.to_vec(), dual } })
    }

    pub fn kernel(&self) -> RbfKernel {
        self.kernel
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn is_fitted(&self) -> bool {
        !matches!(self.model, Model::Unfitted)
    }

    /// Output dimension, once fitted.
    pub fn output_dim(&self) -> Option<usize> {
        match &self.model {
            Model::Unfitted => None,
            Model::Constant(v) => Some(v.len()),
            Model::Kernel { dual, .. } => Some(dual.cols()),
        }
    }

    /// `Σⱼ k(x, xⱼ)·Wⱼ`
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        match &self.model {
            Model::Unfitted => Err(Error::Unfitted),
            Model::Constant(v) => Ok(v.clone()),
            Model::Kernel { inputs, dual } => {
                if x.len() != inputs[0].len() {
                    return Err(Error::Dimension(format!(
                        "predict on {} dims, fitted on {}",
                        x.len(),
                        inputs[0].len()
                    )));
                }
                let weights: Vec<f64> =
                    inputs.iter().map(|xj| self.kernel.eval_unchecked(x, xj)).collect();
                Ok(dual.left_mul(&weights))
            }
        }
    }
}
