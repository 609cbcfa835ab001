use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{fmt2, Point3, Scenario};
use crate::perception::DetectionSummary;

pub const DEFAULT_SYSTEM_TEXT: &str =
    "You are a drone path planner. Output only a list of (x, y, z) waypoints in meters.";

/// Task sentence used by the instruction and vision modes.
pub const INSTRUCTION_TEXT: &str =
    "Generate a safe path from the start to the goal that avoids every obstacle.";

pub const NO_OBSTACLES: &str = "No obstacles detected.";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    FewShot,
    Instruction,
    ZeroShotVision,
}

/// A worked example shown before the query in few-shot mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotExample {
    pub start: Point3,
    pub goal: Point3,
    pub obstacles: Vec<Point3>,
    pub waypoints: Vec<Point3>,
}

/// The canned example used when a suite does not supply its own: one
/// obstacle in the middle of the corridor, passed on the +x side.
pub fn default_shot() -> ShotExample {
    let p = |x, y| Point3::new(x, y, 0.5);
    ShotExample {
        start: p(0.0, 6.0),
        goal: p(0.0, -6.0),
        obstacles: vec![p(0.0, 0.0)],
        waypoints: vec![p(0.0, 6.0), p(2.2, 2.5), p(2.2, -2.5), p(0.0, -6.0)],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptSpec {
    pub mode: PromptMode,
    pub system_text: String,
    pub shots: Vec<ShotExample>,
    pub scenario: Scenario,
    pub vision_context: Option<Vec<DetectionSummary>>,
}

impl PromptSpec {
    pub fn few_shot(scenario: Scenario, shots: Vec<ShotExample>) -> Result<Self> {
        let s = Self {
            mode: PromptMode::FewShot,
            system_text: DEFAULT_SYSTEM_TEXT.into(),
            shots,
            scenario,
            vision_context: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn instruction(scenario: Scenario) -> Self {
        Self {
            mode: PromptMode::Instruction,
            system_text: DEFAULT_SYSTEM_TEXT.into(),
            shots: Vec::new(),
            scenario,
            vision_context: None,
        }
    }

    pub fn zero_shot_vision(scenario: Scenario, detections: Vec<DetectionSummary>) -> Self {
        Self {
            mode: PromptMode::ZeroShotVision,
            system_text: DEFAULT_SYSTEM_TEXT.into(),
            shots: Vec::new(),
            scenario,
            vision_context: Some(detections),
        }
    }

    /// Vision prompt whose context lists the scenario's own obstacles.
    pub fn zero_shot_from_scenario(scenario: Scenario) -> Self {
        let dets = scenario
            .obstacle_centers()
            .into_iter()
            .map(|position| DetectionSummary {
                class_label: "cube".into(),
                position,
            })
            .collect();
        Self::zero_shot_vision(scenario, dets)
    }

    pub fn for_mode(mode: PromptMode, scenario: Scenario, shots: Vec<ShotExample>) -> Result<Self> {
        match mode {
            PromptMode::FewShot => Self::few_shot(scenario, shots),
            PromptMode::Instruction => Ok(Self::instruction(scenario)),
            PromptMode::ZeroShotVision => Ok(Self::zero_shot_from_scenario(scenario)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            PromptMode::FewShot if self.shots.is_empty() => {
                Err(Error::Contract("few-shot prompt needs at least one example".into()))
            }
            PromptMode::ZeroShotVision if self.vision_context.is_none() => {
                Err(Error::Contract("zero-shot vision prompt needs detections".into()))
            }
            PromptMode::ZeroShotVision if !self.shots.is_empty() => {
                Err(Error::Contract("zero-shot vision prompt cannot carry examples".into()))
            }
            _ => Ok(()),
        }
    }
}

/// One `(x, y, z)` per line, two decimals.
pub fn render_waypoints(points: &[Point3]) -> String {
    points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("\n")
}

fn join_points(points: &[Point3]) -> String {
    points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; ")
}

pub fn build_prompt(spec: &PromptSpec) -> Result<String> {
    spec.validate()?;
    let s = &spec.scenario;
    let ws = &s.workspace;
    let mut lines = vec![
        spec.system_text.clone(),
        format!(
            "Workspace: x in [{}, {}], y in [{}, {}], altitude fixed at {}.",
            fmt2(ws.min.x),
            fmt2(ws.max.x),
            fmt2(ws.min.y),
            fmt2(ws.max.y),
            fmt2(s.start.z)
        ),
    ];
    match &spec.vision_context {
        Some(dets) if dets.is_empty() => lines.push(NO_OBSTACLES.into()),
        Some(dets) => {
            lines.push(format!("Detected objects ({}):", dets.len()));
            for d in dets {
                lines.push(format!("- {}: obstacle at {}", d.class_label, d.position));
            }
        }
        None if s.obstacles.is_empty() => lines.push(NO_OBSTACLES.into()),
        None => lines.push(format!(
            "Obstacles are cubes with edge {} m centered at: {}.",
            fmt2(s.obstacle_edge),
            join_points(&s.obstacle_centers())
        )),
    }
    lines.push(format!(
        "Maintain at least {} m clearance from every obstacle.",
        fmt2(s.safety_margin)
    ));
    if spec.mode != PromptMode::FewShot {
        lines.push(INSTRUCTION_TEXT.into());
    }
    for shot in &spec.shots {
        let obstacles = if shot.obstacles.is_empty() {
            "none".to_string()
        } else {
            join_points(&shot.obstacles)
        };
        lines.push(String::new());
        lines.push("Example:".into());
        lines.push(format!("Start: {} Goal: {} Obstacles: {}", shot.start, shot.goal, obstacles));
        lines.push("Waypoints:".into());
        lines.push(render_waypoints(&shot.waypoints));
    }
    if !spec.shots.is_empty() {
        lines.push(String::new());
    }
    lines.push(format!("Start: {}. Goal: {}. Waypoints:", s.start, s.goal));
    Ok(lines.join("\n"))
}
