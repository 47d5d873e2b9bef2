//! Conformal merging toolkit.
//!
//! Simulates mixed highway traffic (human drivers via an intelligent-driver
//! model with per-driver altruism), predicts when each human-driven vehicle
//! will arrive at a set of merging candidates, wraps those predictions in
//! split-conformal intervals with finite-sample coverage, and plans a
//! minimum-time ramp merge that keeps a required time headway to every
//! predicted arrival, inflated by the calibrated bound.
//!
//! Module map:
//! - [`zone`], [`state`], [`cubic`], [`arrival`]: shared domain types,
//!   control-zone geometry, cubic trajectory algebra, arrival-time extraction.
//! - [`hdv`]: generative traffic simulator.
//! - [`predictor`]: physics baseline and a recurrent network trained from
//!   scratch, behind one black-box interface.
//! - [`conformal`]: per-(step, candidate) calibration, bounds, coverage.
//! - [`planner`]: forbidden-interval construction and minimum-time search.
//! - [`runner`]: closed-loop episodes and batch Monte-Carlo evaluation.

pub mod arrival;
pub mod error;
pub mod state;
pub mod zone;

pub mod cubic;

pub mod hdv;

pub mod predictor;

pub mod conformal;
pub mod planner;
pub mod runner;

pub mod stats;

pub use error::{Error, Result};
