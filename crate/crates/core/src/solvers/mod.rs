//! Incremental least-squares statistics and the estimators built on them.

mod design;
mod lasso;
mod ridge;

pub use design::DesignState;
pub use lasso::{kkt_residual, lasso_objective, lasso_solve, lasso_solve_traced, LassoConfig, LassoSolution};
pub use ridge::ridge_solve;
