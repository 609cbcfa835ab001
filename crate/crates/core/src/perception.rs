//! Detector output ingestion: 2D boxes with depth become world-frame
//! obstacle centers through a pinhole camera model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Scenario};

pub const DEFAULT_CONFIDENCE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(rename = "class")]
    pub class_label: String,
    /// `[u_min, v_min, u_max, v_max]` in pixels.
    pub bbox: [f64; 4],
    #[serde(rename = "depth_m")]
    pub depth: f64,
    #[serde(rename = "conf")]
    pub confidence: f64,
}

impl DetectionRecord {
    pub fn validate(&self) -> Result<()> {
        let [u0, v0, u1, v1] = self.bbox;
        if !self.bbox.iter().all(|v| v.is_finite()) {
            return Err(Error::Contract("bbox must be finite".into()));
        }
        if !(u0 < u1) {
            return Err(Error::Contract(format!("bbox u_min {u0} is not below u_max {u1}")));
        }
        if !(v0 < v1) {
            return Err(Error::Contract(format!("bbox v_min {v0} is not below v_max {v1}")));
        }
        if !(self.depth > 0.0 && self.depth.is_finite()) {
            return Err(Error::Contract(format!("depth must be > 0, got {}", self.depth)));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::Contract(format!(
                "confidence must be in [0, 1], got {}",
                self.confidence
            )));
        }
        Ok(())
    }

    pub fn center(&self) -> (f64, f64) {
        let [u0, v0, u1, v1] = self.bbox;
        ((u0 + u1) / 2.0, (v0 + v1) / 2.0)
    }
}

/// Pinhole intrinsics plus a level pose (position and yaw about world z).
/// With zero yaw and the origin as position, camera and world axes coincide.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    #[serde(default)]
    pub pos: Point3,
    #[serde(default)]
    pub yaw_rad: f64,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            pos: Point3::default(),
            yaw_rad: 0.0,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn with_pose(mut self, pos: Point3, yaw_rad: f64) -> Self {
        self.pos = pos;
        self.yaw_rad = yaw_rad;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::Contract(format!(
                "focal lengths must be > 0, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite() && self.pos.is_finite() && self.yaw_rad.is_finite()) {
            return Err(Error::Contract("camera parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cam: CameraModel = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cam.validate()?;
        Ok(cam)
    }

    /// Pixel `(u, v)` at `depth` to the camera frame.
    pub fn unproject(&self, u: f64, v: f64, depth: f64) -> Point3 {
        Point3::new((u - self.cx) * depth / self.fx, (v - self.cy) * depth / self.fy, depth)
    }

    pub fn camera_to_world(&self, p: Point3) -> Point3 {
        let (s, c) = self.yaw_rad.sin_cos();
        self.pos + Point3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
    }

    pub fn world_to_camera(&self, w: Point3) -> Point3 {
        let d = w - self.pos;
        let (s, c) = self.yaw_rad.sin_cos();
        Point3::new(c * d.x + s * d.y, -s * d.x + c * d.y, d.z)
    }

    /// World point to `(u, v, depth)`; `None` behind or on the image plane.
    pub fn project(&self, w: Point3) -> Option<(f64, f64, f64)> {
        let p = self.world_to_camera(w);
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy, p.z))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub class_label: String,
    pub position: Point3,
}

pub fn camera_frame(d: &DetectionRecord, cam: &CameraModel) -> Result<Point3> {
    if !(d.depth > 0.0) {
        return Err(Error::Contract(format!("depth must be > 0, got {}", d.depth)));
    }
    cam.validate()?;
    let (u, v) = d.center();
    Ok(cam.unproject(u, v, d.depth))
}

/// Box center and depth to a world-frame position. `fixed_altitude`
/// replaces the resulting z, for planners working in a horizontal plane.
pub fn back_project(d: &DetectionRecord, cam: &CameraModel, fixed_altitude: Option<f64>) -> Result<DetectionSummary> {
    let mut position = cam.camera_to_world(camera_frame(d, cam)?);
    if let Some(z) = fixed_altitude {
        position.z = z;
    }
    Ok(DetectionSummary {
        class_label: d.class_label.clone(),
        position,
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadedDetections {
    pub records: Vec<DetectionRecord>,
    /// Records dropped for falling below the confidence threshold.
    pub skipped: usize,
}

/// Reads JSON-lines detections. Blank lines are ignored.
pub fn load_detections(path: &Path, min_confidence: f64) -> Result<LoadedDetections> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text, min_confidence).map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })
}

pub fn parse_detections(text: &str, min_confidence: f64) -> std::result::Result<LoadedDetections, (usize, String)> {
    let mut out = LoadedDetections::default();
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DetectionRecord = serde_json::from_str(line).map_err(|e| (k + 1, e.to_string()))?;
        rec.validate().map_err(|e| (k + 1, e.to_string()))?;
        if rec.confidence < min_confidence {
            out.skipped += 1;
        } else {
            out.records.push(rec);
        }
    }
    if out.skipped > 0 {
        log::warn!("skipped {} detection(s) below confidence {min_confidence}", out.skipped);
    }
    Ok(out)
}

/// The template scenario with its obstacles replaced by detection positions.
pub fn scenario_from_detections(template: &Scenario, detections: &[DetectionSummary]) -> Result<Scenario> {
    let centers: Vec<Point3> = detections.iter().map(|d| d.position).collect();
    template.with_obstacles(&centers)
}
