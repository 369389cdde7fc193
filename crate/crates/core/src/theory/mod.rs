//! Deterministic predictions: special functions, the distance functional
//! `D_p`, and the saddle equation fixing `t*` and `α*`.

mod ball;
mod dfunc;
pub(crate) mod quadrature;
mod roots;
mod saddle;
pub mod special;

pub use ball::{dist_dual_ball, dual_exponent, project_dual_ball};
pub use dfunc::{d2_quadrature, estimate_dp, theta, ChiQuadrature, DEval, DFunctional, DpEstimate, MonteCarloD};
pub use saddle::{
    alpha_star_limit, kappa, saddle_grid, solve_saddle, solve_t_star_finite, t_star_limit, Regime, SaddleGrid,
    SaddleOptions, SaddleSolution, TheoryPrediction,
};
pub use special::{erfc, erfc_inv, ln_gamma};
