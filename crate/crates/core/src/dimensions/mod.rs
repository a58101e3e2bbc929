//! Admissible functions, per-cell thresholds, the dimension estimators and
//! the inequality checks relating them.

mod admissible;
mod assouad;
mod cells;
mod checks;
mod estimate;
mod holder;
mod product;

pub use admissible::{AdmissibleFunction, PsiKind};
pub use assouad::{mean_assouad_estimate, AssouadFit, AssouadSample};
pub use cells::{
    check_delta, dim_eps_h, fixed_diameter_cell, grid_threshold, hausdorff_chain_cell, instance_threshold,
    metric_mean_cell, psi_cell, psi_cell_on, psi_window, CountStatistic, Crossing, Threshold, ThresholdConfig,
    MAX_EXPONENT,
};
pub use checks::*;
pub use estimate::*;
pub use holder::*;
pub use product::*;
