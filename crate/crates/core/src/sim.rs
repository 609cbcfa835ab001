//! Discrete-time point-mass setpoint follower.
//!
//! The vehicle flies straight toward the current setpoint at `max_speed`.
//! The setpoint index advances once the vehicle is within
//! `setpoint_accept_radius`, at most once per publish tick.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{segment_intersects_cuboid, PathPlan, PlanStage, Point3, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub publish_rate_hz: f64,
    pub max_speed: f64,
    pub goal_tolerance: f64,
    pub setpoint_accept_radius: f64,
    pub max_sim_time: f64,
    pub substep: f64,
    /// Largest setpoint spacing accepted as "dense".
    pub max_setpoint_spacing: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            publish_rate_hz: 20.0,
            max_speed: 0.179,
            goal_tolerance: 0.2,
            setpoint_accept_radius: 0.15,
            max_sim_time: 300.0,
            substep: 0.005,
            max_setpoint_spacing: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("publish_rate_hz", self.publish_rate_hz),
            ("max_speed", self.max_speed),
            ("goal_tolerance", self.goal_tolerance),
            ("setpoint_accept_radius", self.setpoint_accept_radius),
            ("max_sim_time", self.max_sim_time),
            ("substep", self.substep),
            ("max_setpoint_spacing", self.max_setpoint_spacing),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Contract(format!("sim {name} must be > 0, got {v}")));
            }
        }
        if self.substep > 1.0 / self.publish_rate_hz + 1e-12 {
            return Err(Error::Contract(format!(
                "substep {} s exceeds the publish period {} s",
                self.substep,
                1.0 / self.publish_rate_hz
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub pos: Point3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub completion_time: f64,
    pub traveled_length: f64,
    pub collision: bool,
    /// One sample per publish tick plus the final state.
    pub trajectory: Vec<TrajectorySample>,
}

impl TrialOutcome {
    /// A trial that never flew (planning or refinement failed).
    pub fn failed() -> Self {
        Self {
            success: false,
            completion_time: 0.0,
            traveled_length: 0.0,
            collision: false,
            trajectory: Vec::new(),
        }
    }
}

pub fn run_trial(scenario: &Scenario, plan: &PathPlan, cfg: &SimConfig) -> Result<TrialOutcome> {
    cfg.validate()?;
    if plan.stage != PlanStage::Refined {
        return Err(Error::Contract(format!(
            "simulation needs a refined plan, got {:?}",
            plan.stage
        )));
    }
    let spacing = plan.max_spacing();
    if spacing > cfg.max_setpoint_spacing + 1e-9 {
        return Err(Error::Contract(format!(
            "plan is not dense: spacing {spacing:.3} m exceeds {:.3} m",
            cfg.max_setpoint_spacing
        )));
    }

    let setpoints = plan.waypoints();
    let last = setpoints.len() - 1;
    let period = 1.0 / cfg.publish_rate_hz;
    let per_tick = (period / cfg.substep).round().max(1.0) as usize;
    let dt = period / per_tick as f64;
    let max_ticks = (cfg.max_sim_time / period).floor() as usize;

    let mut pos = setpoints[0];
    let mut idx = 1usize.min(last);
    let mut traveled = 0.0;
    let mut trajectory = vec![TrajectorySample { t: 0.0, pos }];
    // The run ends once the final setpoint is reached; it counts as a success
    // if that point is within goal_tolerance of the scenario goal.
    let arrived = |pos: &Point3, idx: usize| idx == last && pos.distance(&setpoints[last]) <= 1e-9;
    let on_goal = pos.distance(&scenario.goal) <= cfg.goal_tolerance;

    if arrived(&pos, idx) {
        return Ok(TrialOutcome {
            success: on_goal,
            completion_time: 0.0,
            traveled_length: 0.0,
            collision: false,
            trajectory,
        });
    }

    for tick in 0..max_ticks {
        let mut advanced = false;
        for sub in 0..per_tick {
            if !advanced && idx < last && pos.distance(&setpoints[idx]) <= cfg.setpoint_accept_radius {
                idx += 1;
                advanced = true;
            }
            let target = setpoints[idx];
            let gap = pos.distance(&target);
            let reach = cfg.max_speed * dt;
            let next = if gap <= reach { target } else { pos.lerp(&target, reach / gap) };
            let t = (tick * per_tick + sub + 1) as f64 * dt;
            if scenario
                .obstacles
                .iter()
                .any(|o| segment_intersects_cuboid(pos, next, o, 0.0))
            {
                trajectory.push(TrajectorySample { t, pos: next });
                return Ok(TrialOutcome {
                    success: false,
                    completion_time: t,
                    traveled_length: traveled + pos.distance(&next),
                    collision: true,
                    trajectory,
                });
            }
            traveled += pos.distance(&next);
            pos = next;
            if arrived(&pos, idx) {
                trajectory.push(TrajectorySample { t, pos });
                return Ok(TrialOutcome {
                    success: pos.distance(&scenario.goal) <= cfg.goal_tolerance,
                    completion_time: t,
                    traveled_length: traveled,
                    collision: false,
                    trajectory,
                });
            }
        }
        trajectory.push(TrajectorySample {
            t: (tick + 1) as f64 * period,
            pos,
        });
    }
    Ok(TrialOutcome {
        success: false,
        completion_time: max_ticks as f64 * period,
        traveled_length: traveled,
        collision: false,
        trajectory,
    })
}

/// Which empirical rate-to-speed calibration to read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedTable {
    TwoObstacles,
    ThreeObstacles,
}

impl SpeedTable {
    /// Two-obstacle calibration for scenes with at most two obstacles,
    /// three-obstacle calibration otherwise.
    pub fn for_obstacle_count(n: usize) -> Self {
        if n <= 2 {
            SpeedTable::TwoObstacles
        } else {
            SpeedTable::ThreeObstacles
        }
    }
}

/// Measured flight speed (m/s) per setpoint publishing rate (Hz).
pub fn rate_speed_table(table: SpeedTable) -> BTreeMap<u32, f64> {
    let rows: &[(u32, f64)] = match table {
        SpeedTable::TwoObstacles => &[(20, 0.179), (30, 0.191), (40, 0.204), (50, 0.238)],
        SpeedTable::ThreeObstacles => &[(20, 0.179), (30, 0.201), (40, 0.248), (50, 0.268)],
    };
    rows.iter().copied().collect()
}

pub fn speed_for_rate(table: SpeedTable, hz: u32) -> Result<f64> {
    rate_speed_table(table)
        .get(&hz)
        .copied()
        .ok_or(Error::UnlistedRate { hz })
}

pub fn write_trajectory_csv(outcome: &TrialOutcome, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    let mut body = String::from("t,x,y,z\n");
    for s in &outcome.trajectory {
        body.push_str(&format!("{:.4},{:.4},{:.4},{:.4}\n", s.t, s.pos.x, s.pos.y, s.pos.z));
    }
    f.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}
