//! Covariate laws, label mechanisms and total-variation distances between them.

mod environment;
mod labeler;
pub mod normal;
pub mod quadrature;
mod tv;

pub use environment::{Environment, ENV_SIMPLEX_TOL};
pub use labeler::{Labeler, LABEL_SIMPLEX_TOL};
pub use quadrature::{QuadratureConfig, QuadratureMethod};
pub use tv::{
    conditional_tv, expected_conditional_tv, gaussian_tv_equal_std, joint_tv_exact, sup_conditional_tv,
    sup_conditional_tv_points, tv_discrete, tv_env, SIMPLEX_TOL,
};

pub(crate) use labeler::check_simplex;
pub(crate) use tv::{clamp_unit, half_l1};
