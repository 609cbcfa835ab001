//! Language-model planning backend: prompt construction, chat-completions
//! transport (live or canned), and waypoint extraction from the reply.

mod backend;
mod parse;
mod prompt;

pub use backend::{
    ChatBackend, ChatRequest, HttpBackend, LlmResponse, MockBackend, ModelEndpoint, ENV_API_TOKEN,
    ENV_ENDPOINT_URL, ENV_MODEL_ID,
};
pub use parse::parse_waypoints;
pub use prompt::{
    build_prompt, default_shot, render_waypoints, PromptMode, PromptSpec, ShotExample, DEFAULT_SYSTEM_TEXT,
    INSTRUCTION_TEXT, NO_OBSTACLES,
};

use crate::error::{Error, Result};
use crate::geometry::{PathPlan, PlanStage, Scenario};

/// Parsed endpoints within this distance are replaced by the exact start/goal.
pub const SNAP_TOLERANCE: f64 = 0.3;
/// A first waypoint farther than this from the start rejects the plan.
pub const IMPLAUSIBLE_START_DISTANCE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LlmPlan {
    pub plan: PathPlan,
    pub response: LlmResponse,
}

/// Prompt, query and parse; the returned raw plan always begins at the
/// scenario start and ends at its goal.
pub fn plan(scenario: &Scenario, backend: &dyn ChatBackend, spec: &PromptSpec, trial: usize) -> Result<LlmPlan> {
    let prompt = build_prompt(spec)?;
    let response = backend.complete(&ChatRequest {
        scenario: scenario.name.clone(),
        trial,
        prompt,
    })?;
    let plan = plan_from_text(scenario, &response.text, backend.id())?;
    Ok(LlmPlan { plan, response })
}

pub fn plan_from_text(scenario: &Scenario, text: &str, source: &str) -> Result<PathPlan> {
    let mut pts = parse_waypoints(text)?;
    let first = pts[0].distance(&scenario.start);
    if first <= SNAP_TOLERANCE {
        pts[0] = scenario.start;
    } else if first > IMPLAUSIBLE_START_DISTANCE {
        return Err(Error::ImplausiblePlan { distance: first });
    } else {
        pts.insert(0, scenario.start);
    }
    let n = pts.len();
    if pts[n - 1].distance(&scenario.goal) <= SNAP_TOLERANCE {
        pts[n - 1] = scenario.goal;
    } else {
        pts.push(scenario.goal);
    }
    PathPlan::new(pts, source, PlanStage::Raw)
}
