//! Benchmark library for foundation-model guided drone path planning.
//!
//! The pipeline is: a planner (grid baseline or language model) produces raw
//! waypoints, [`refine`] densifies them and enforces the obstacle margin, and
//! [`sim`] flies the result with a point-mass setpoint follower. [`metrics`]
//! aggregates trial outcomes into success rate, completion time, path length
//! and the efficiency-success score.

pub mod bench;
pub mod dataset;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod llm;
pub mod metrics;
pub mod perception;
pub mod planners;
pub mod refine;
pub mod sim;

pub use error::{Error, Result};
pub use geometry::{CuboidObstacle, PathPlan, PlanStage, Point3, Scenario, Workspace};
