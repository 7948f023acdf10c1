//! Couplings of the Kolmogorov diffusion: Brownian motion together with its
//! iterated time integrals.
//!
//! The crate has three layers. [`kernel`] holds the exact Gaussian transition
//! law and total variation distances. [`markovian`] simulates the classical
//! reflection/synchronous coupling for the index-1 process and the exact area
//! law of its first half-cycle. [`lookahead`] implements the block coupling
//! that looks ahead over the Karhunen-Loeve expansion of the driving noise.
//! [`survival`] and [`experiment`] turn replicate runs into survival curves
//! and fitted decay rates.

pub mod error;
pub mod experiment;
pub mod kernel;
pub mod lookahead;
pub mod markovian;
pub mod moments;
pub mod noise;
pub mod parallel;
pub mod path;
pub mod quad;
pub mod special;
pub mod survival;

pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentKind, Report};
pub use kernel::{DiffusionIndex, Hyperplane, MaximalTail, StateVector, TransitionKernel, MAX_INDEX};
pub use noise::{derive_stream, GaussianSource, NoiseStream};
pub use survival::{estimate_survival, fit_rate, EventTime, FitWindow, RateFit, SurvivalCurve};
