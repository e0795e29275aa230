//! Continuous-time independent cascade simulation with user interventions.
//!
//! The crate covers the full pipeline: loading and preprocessing directed
//! networks ([`graph`]), intervention plans and target selection
//! ([`interventions`]), the event-driven cascade engine and Monte Carlo
//! aggregation ([`diffusion`]), spectral criticality ([`qmf`]), fitting
//! diffusion parameters and intervention strengths to data ([`calibration`]),
//! and the parameter sweeps built on top of them ([`experiments`]).
//!
//! Monte Carlo batches, calibration grids and critical curves run on rayon
//! when the `parallel` feature is enabled (the default); see [`parallel`].

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod diffusion;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod interventions;
pub mod output;
pub mod parallel;
pub mod qmf;
pub mod rng;
pub mod synth;

pub use diffusion::{
    monte_carlo, resolve_ctx_time, select_seed, simulate, CascadeModel, CtxResolution, DiffusionParams,
    MonteCarloConfig, MonteCarloSummary, SimulationResult, SuccessTiming,
};
pub use error::{Error, Result};
pub use graph::{DirectedGraph, NodeId};
pub use interventions::{ContextTiming, InterventionPlan, TargetStrategy};
pub use parallel::Execution;
