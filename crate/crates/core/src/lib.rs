//! Parkinson's disease screening from online handwriting.
//!
//! The crate turns digitizer-tablet recordings into fixed-order kinematic
//! feature vectors, ranks and selects features, trains kernel SVMs and
//! evaluates them with leave-one-out / k-fold cross-validation and weighted
//! task ensembles.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below pin the pipeline-facing types to `f64`.

pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod kinematics;
pub mod preprocess;
pub mod rng;
pub mod scalar;
pub mod selection;
pub mod signal_io;
pub mod stats_agg;
pub mod synth_cohort;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type KernelSpec64 = classifier::KernelSpec<f64>;
pub type SvmModel64 = classifier::SvmModel<f64>;
pub type SummarySet64 = stats_agg::SummarySet<f64>;
pub type ZScoreParams64 = preprocess::ZScoreParams<f64>;
pub type KinematicSeries64 = kinematics::KinematicSeries<f64>;
pub type ImportanceRanking64 = selection::ImportanceRanking<f64>;

pub type KernelSpec32 = classifier::KernelSpec<f32>;
pub type SvmModel32 = classifier::SvmModel<f32>;
pub type SummarySet32 = stats_agg::SummarySet<f32>;
