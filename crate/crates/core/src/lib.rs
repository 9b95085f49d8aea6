//! Bounding-box regression losses and the machinery to study them.
//!
//! * [`geometry`]: center-size boxes, IoU, enclosing boxes, interpolation.
//! * [`losses`]: L1 and the IoU family (GIoU, DIoU, CIoU, EIoU, WIoU, SIoU,
//!   PIoU) plus InterpIoU and its dynamic variant.
//! * [`grad`]: forward-mode, closed-form and finite-difference gradients.
//! * [`optim`]: Adam regression of one box and loss landscapes.
//! * [`sim`]: seeded synthetic scenarios and batched metric curves.

pub mod dual;
pub mod error;
pub mod geometry;
pub mod grad;
pub mod losses;
pub mod optim;
pub mod sampling;
pub mod sim;

pub use dual::{Dual4, Scalar};
pub use error::{Error, Result};
pub use geometry::{area, geom_pair, interpolate, iou, BBox, Corners, GeomPair, BOX_EPS};
pub use grad::{grad_analytic_iou, grad_autodiff, grad_fd, parity, value_and_grad, Grad4, Parity, DEFAULT_FD_STEP};
pub use losses::{
    breakdown, dynamic_alpha, eval, min_alpha, parse_loss_list, probe_alpha_bound, BoundProbe, LossKind, LossSpec,
    PenaltyBreakdown,
};
pub use optim::{landscape_sweep, regress, AdamConfig, Parameterization, RegressionCase, Trajectory};
pub use sim::{
    enlargement_case, enlargement_study, generate_cases, r_diff, run_batch, small_target_sweep, EnlargementRun,
    Pairing, ScaleMode, ScenarioConfig, StepSeries, SweepEntry, METRIC_NAMES,
};
