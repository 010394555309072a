//! Structured credal sets over one-dimensional covariates.
//!
//! A credal set here is the convex hull of every product of an environment
//! (a covariate law) with a labeler (a conditional label law). The crate
//! computes total-variation diameters of such sets, estimates the labeling
//! part of the diameter from multi-annotator data with finite-sample
//! certificates, and solves the finite min-max learning problem over the
//! set's vertices.

pub mod credal;
pub mod dro;
pub mod error;
pub mod estimation;
pub mod measures;
pub mod synthgen;

pub use credal::{
    component_diameters, diameter_bounds, exact_diameter, pairwise_bounds, robust_penalty, ComponentDiameters,
    CredalSpec, DiameterReport, PairwiseBounds, SupDomain, Vertex,
};
pub use error::{CredalError, Result};
pub use measures::{Environment, Labeler, QuadratureConfig, QuadratureMethod};
