//! Brachiation learning and planning.
//!
//! The crate is organised the way the pipeline runs:
//!
//! * [`terrain`] generates handhold sequences, gap terrains and candidate plans.
//! * [`simple_env`] is the point-mass swing/flight environment trained with a sparse reward.
//! * [`physics2d`] is a small planar maximal-coordinate rigid-body solver.
//! * [`full_env`] builds the 14-link gibbon on top of it and scores imitation of
//!   recorded point-mass references.
//! * [`nets`] and [`ppo`] hold the actor/critic networks and the trainer.
//! * [`planner`] samples handhold plans and drives the articulated policy MPC-style.
//! * [`export`] writes trajectory CSV and SVG files.

pub mod error;
pub mod export;
pub mod full_env;
pub mod math;
pub mod nets;
pub mod physics2d;
pub mod planner;
pub mod ppo;
pub mod rng;
pub mod rollout;
pub mod simple_env;
pub mod terrain;

pub use error::{Error, Result};
pub use math::Vec2;
pub use rng::Rng;
pub use terrain::{Handhold, HandholdSequence, Plan, Terrain};
