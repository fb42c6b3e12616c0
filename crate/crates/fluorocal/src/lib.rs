//! Calibration toolkit for fluorescence imaging of cold-atom ensembles.
//!
//! A camera image of the two spatially separated spin states is binned into
//! superpixels, and each superpixel gets a regression weight converting its
//! counts into atoms. The weights are trained so that the image-derived
//! population difference reproduces a low-noise cavity measurement of the same
//! quantity, with a nearest-neighbor smoothness penalty bounding the spatial
//! frequency of the learned collection-efficiency map.
//!
//! The crate contains the full workflow:
//!
//! - [`grid`]: superpixel geometry, image binning, state assignment, adjacency
//! - [`model`]: the linear calibration model and derived observables
//! - [`cost`]: the regularized weighted-least-squares objective and its gradient
//! - [`optimizer`]: a dense BFGS minimizer with a strong-Wolfe line search
//! - [`normal_eq`]: closed-form solution of the (exactly quadratic) objective,
//!   used both as a fast solver and as an independent check on the optimizer
//! - [`synth`]: a physics-based synthetic data generator with known ground truth
//! - [`pipeline`]: splits, training, evaluation metrics, hyperparameter sweeps,
//!   learning curves, and the two reference baselines
//! - [`io`]: the on-disk formats for datasets, weight maps, fields, and reports

pub mod cost;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod normal_eq;
pub mod optimizer;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use cost::{cost_and_gradient, nn_penalty, sample_weight, CostEval, Hyperparams};
pub use error::Error;
pub use grid::{EdgeSet, PixelImage, SuperpixelGrid};
pub use model::{BetaMap, ShotRecord};
pub use optimizer::{minimize, OptimizationReport, OptimizerSettings, Termination};
pub use pipeline::{Dataset, Metrics, SplitOrder, SplitSpec, SweepAxis, SweepReport};
pub use synth::{EfficiencyField, GenConfig};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
