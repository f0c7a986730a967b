use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solvers::DesignState;

/// `(gram + λI)⁻¹ xty` through a Cholesky factorization.
pub fn ridge_solve(state: &DesignState, lambda_ridge: f64) -> Result<Vec<f64>> {
    if !(lambda_ridge > 0.0) || !lambda_ridge.is_finite() {
        return Err(Error::Config(format!(
            "ridge penalty must be finite and > 0, got {lambda_ridge}"
        )));
    }
    let d = state.dim();
    if state.t() == 0 {
        return Ok(vec![0.0; d]);
    }
    if state.gram().iter().chain(state.xty()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entries in design statistics".into()));
    }
    let mut v = DMatrix::from_row_slice(d, d, state.gram());
    for i in 0..d {
        v[(i, i)] += lambda_ridge;
    }
    let chol = v
        .cholesky()
        .ok_or_else(|| Error::Numeric("ridge system is not positive definite".into()))?;
    let sol = chol.solve(&DVector::from_column_slice(state.xty()));
    Ok(sol.iter().copied().collect())
}
