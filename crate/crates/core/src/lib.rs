//! Sequential perimeter defense against curvature-constrained intruders.
//!
//! A single defender guards a circular target against intruders that arrive
//! one at a time on the boundary of a sensing annulus. Both agents move at
//! constant speed with a bounded turn rate, so every timing question reduces
//! to a Dubins shortest path. The crate is organized bottom-up:
//!
//! - [`dubins`]: closed-form fixed- and free-heading Dubins paths.
//! - [`reachability`]: grid time fields, reach sets, dominance regions and
//!   their contours, plus the Apollonius disk for the holonomic limit.
//! - [`engagement`]: the critical engagement radius, guarding arcs, the
//!   intruder's capture point and the single-game capture probabilities.
//! - [`game`]: the sequential game loop and its assumption checks.
//! - [`analytics`]: the two-state Markov chain and Monte Carlo aggregation.

#![forbid(unsafe_code)]

pub mod analytics;
pub mod dubins;
pub mod engagement;
mod error;
pub mod game;
pub mod geometry;
pub mod reachability;

pub use error::{Error, Result};
