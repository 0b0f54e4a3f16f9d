//! Metrics: GUI step correctness and type accuracy, embodied episodes with
//! success rate and path-efficiency-weighted success (SPL), and
//! point-in-mask affordance success.

use std::path::Path;

use serde_json::json;
use thiserror::Error;

use crate::actions::{parse_response, Action, ActionType};
use crate::geometry::{
    set_pitch, to_world_frame, unproject, CameraModel, PixelPoint, Pose, Vec3,
};
use crate::pathfind::{grid_length_m, shortest_path, PathError};
use crate::scene::{ray_depth, Scene, SceneError, AGENT_HEIGHT_M};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty result set")]
    Empty,
    #[error("prediction/ground-truth length mismatch: {preds} vs {gts}")]
    LengthMismatch { preds: usize, gts: usize },
    #[error("bad mask: {0}")]
    BadMask(String),
    #[error("episode setup: {0}")]
    BadEpisode(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of one embodied episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub success: bool,
    /// Distance actually traveled, meters.
    pub path_length_m: f64,
    /// Planner's shortest distance from spawn to goal, meters.
    pub shortest_length_m: f64,
    pub steps_taken: usize,
}

// --- GUI step metrics -------------------------------------------------------

/// How "within 14% of the image size" is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdRule {
    /// Euclidean distance against 0.14 * max(W, H).
    #[default]
    MaxDim,
    /// |dx| <= 0.14 * W and |dy| <= 0.14 * H independently.
    PerAxis,
    /// Euclidean distance against 0.14 * sqrt(W^2 + H^2).
    Diagonal,
}

pub const GUI_DISTANCE_FRACTION: f64 = 0.14;

/// Ground truth for one GUI step: the expected action type and, for
/// point-carrying types, the expected pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct GuiGroundTruth {
    pub action_type: ActionType,
    pub point: Option<PixelPoint>,
}

impl GuiGroundTruth {
    pub fn of(action: &Action) -> Self {
        GuiGroundTruth { action_type: action.action_type(), point: action.point() }
    }
}

pub fn gui_step_correct(pred: &Action, gt: &GuiGroundTruth, w: u32, h: u32) -> bool {
    gui_step_correct_with(pred, gt, w, h, ThresholdRule::default())
}

/// Type must match; when the ground truth carries a point, the predicted
/// point must additionally fall within 14% of the image size under the
/// chosen rule. Point-free ground truths need only the type.
pub fn gui_step_correct_with(
    pred: &Action,
    gt: &GuiGroundTruth,
    w: u32,
    h: u32,
    rule: ThresholdRule,
) -> bool {
    if pred.action_type() != gt.action_type {
        return false;
    }
    let Some(gt_point) = &gt.point else { return true };
    let Some(pred_point) = pred.point() else { return false };
    let (w, h) = (f64::from(w), f64::from(h));
    match rule {
        ThresholdRule::MaxDim => {
            pred_point.dist(gt_point) <= GUI_DISTANCE_FRACTION * w.max(h)
        }
        ThresholdRule::PerAxis => {
            (pred_point.x - gt_point.x).abs() <= GUI_DISTANCE_FRACTION * w
                && (pred_point.y - gt_point.y).abs() <= GUI_DISTANCE_FRACTION * h
        }
        ThresholdRule::Diagonal => {
            pred_point.dist(gt_point) <= GUI_DISTANCE_FRACTION * w.hypot(h)
        }
    }
}

/// Fraction of steps whose predicted action type matches the ground truth.
pub fn type_accuracy(preds: &[ActionType], gts: &[ActionType]) -> Result<f64, EvalError> {
    if preds.len() != gts.len() {
        return Err(EvalError::LengthMismatch { preds: preds.len(), gts: gts.len() });
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let hits = preds.iter().zip(gts).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / preds.len() as f64)
}

// --- Affordance masks -------------------------------------------------------

/// Binary ground-truth region over an image; true = inside.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self, EvalError> {
        if width == 0 || height == 0 {
            return Err(EvalError::BadMask("dimensions must be positive".into()));
        }
        if bits.len() != (width as usize) * (height as usize) {
            return Err(EvalError::BadMask(format!(
                "expected {} bits, got {}",
                (width as usize) * (height as usize),
                bits.len()
            )));
        }
        Ok(Mask { width, height, bits })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, col: u32, row: u32) -> bool {
        self.bits[row as usize * self.width as usize + col as usize]
    }

    /// Serializes as a binary portable graymap (P5), 255 = inside.
    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.bits.iter().map(|&b| if b { 255u8 } else { 0u8 }));
        std::fs::write(path, out)
    }

    /// Reads a P5 graymap; any nonzero sample is inside. Accepts comments
    /// and arbitrary whitespace in the header, and maxval up to 255.
    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let data = std::fs::read(path)?;
        if data.len() < 2 || &data[..2] != b"P5" {
            return Err(EvalError::BadMask("not a P5 graymap".into()));
        }
        let mut pos = 2usize;
        let mut next_token = |data: &[u8]| -> Result<u64, EvalError> {
            loop {
                while pos < data.len() && data[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < data.len() && data[pos] == b'#' {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < data.len() && data[pos].is_ascii_digit() {
                pos += 1;
            }
            if start == pos {
                return Err(EvalError::BadMask("truncated header".into()));
            }
            std::str::from_utf8(&data[start..pos])
                .expect("digits are utf8")
                .parse()
                .map_err(|e| EvalError::BadMask(format!("bad header number: {e}")))
        };
        let width = next_token(&data)?;
        let height = next_token(&data)?;
        let maxval = next_token(&data)?;
        if maxval == 0 || maxval > 255 {
            return Err(EvalError::BadMask(format!("unsupported maxval {maxval}")));
        }
        if pos >= data.len() || !data[pos].is_ascii_whitespace() {
            return Err(EvalError::BadMask("missing sample separator".into()));
        }
        pos += 1;
        let expected = (width as usize)
            .checked_mul(height as usize)
            .ok_or_else(|| EvalError::BadMask("dimensions overflow".into()))?;
        let samples = &data[pos..];
        if samples.len() != expected {
            return Err(EvalError::BadMask(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        Mask::new(width as u32, height as u32, samples.iter().map(|&b| b != 0).collect())
    }
}

/// True iff the pixel falls on an inside cell of the mask; anything outside
/// the image is a miss.
pub fn affordance_success(pred: PixelPoint, mask: &Mask) -> bool {
    if pred.x < 0.0 || pred.y < 0.0 {
        return false;
    }
    let (col, row) = (pred.x.floor(), pred.y.floor());
    if col >= f64::from(mask.width) || row >= f64::from(mask.height) {
        return false;
    }
    mask.get(col as u32, row as u32)
}

// --- Embodied episodes ------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct EpisodeConfig {
    pub max_steps: usize,
    /// Ground-plane distance to the goal, meters, within which a stop counts
    /// as success.
    pub success_threshold_m: f64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { max_steps: 256, success_threshold_m: 0.3 }
    }
}

/// What the policy sees each step.
pub struct Observation<'a> {
    pub scene: &'a Scene,
    pub camera: &'a CameraModel,
    pub pose: Pose,
    pub step_index: usize,
}

/// Traveled distance as exact hop counts: straight and diagonal cell hops
/// stay integers so replaying a planned path reproduces the planner's length
/// bit for bit; anything else accumulates as a real cell count.
#[derive(Debug, Default, Clone, Copy)]
struct PathAccum {
    straight: u64,
    diagonal: u64,
    extra_cells: f64,
}

impl PathAccum {
    fn add_hop(&mut self, from: (usize, usize), to: (usize, usize)) {
        let dr = from.0.abs_diff(to.0) as u64;
        let dc = from.1.abs_diff(to.1) as u64;
        if dr == 0 {
            self.straight += dc;
        } else if dc == 0 {
            self.straight += dr;
        } else if dr == dc {
            self.diagonal += dr;
        } else {
            self.extra_cells += ((dr * dr + dc * dc) as f64).sqrt();
        }
    }

    fn meters(&self, cell_size: f64) -> f64 {
        grid_length_m(self.straight, self.diagonal, self.extra_cells, cell_size)
    }
}

/// Runs one episode: each step the policy receives the observation and
/// returns raw response text. The first action of a parseable response is
/// applied — view actions rotate in place; a move-to relocates onto the
/// cell under the pixel (at its rendered depth) and re-levels the camera;
/// stop ends the episode, succeeding iff the agent is within the threshold
/// of the goal. Unparseable output, GUI actions, and move-tos onto sky
/// pixels or blocked cells consume the step without moving. Running out of
/// steps is a failure.
pub fn navigate_episode(
    scene: &Scene,
    cam: &CameraModel,
    policy: &mut dyn FnMut(&Observation) -> String,
    cfg: &EpisodeConfig,
) -> Result<EpisodeResult, EvalError> {
    let goal = scene
        .goals
        .first()
        .ok_or_else(|| EvalError::BadEpisode("scene has no goals".into()))?;
    let shortest = shortest_path(scene, scene.spawn_ground(), goal.position)?;
    let shortest_length_m = shortest.total_cost_m;
    if shortest_length_m <= 0.0 {
        return Err(EvalError::BadEpisode("goal coincides with spawn".into()));
    }

    let grid = &scene.grid;
    let mut pose = scene.spawn;
    let mut accum = PathAccum::default();
    let mut steps_taken = 0usize;
    let mut success = false;

    while steps_taken < cfg.max_steps {
        let raw = policy(&Observation { scene, camera: cam, pose, step_index: steps_taken });
        steps_taken += 1;
        let action = match parse_response(&raw) {
            Ok(response) => response.primary_action().clone(),
            Err(_) => continue,
        };
        match action {
            Action::MoveTo(pixel) => {
                let depth = ray_depth(scene, &pose, cam, pixel);
                if !depth.is_finite() {
                    continue;
                }
                let Ok(p_cam) = unproject(pixel, depth, cam) else { continue };
                let world = to_world_frame(p_cam, &pose);
                let Some(here) = grid.cell_of(pose.position.x, pose.position.z) else {
                    continue;
                };
                let Some(target) = grid.cell_of(world.x, world.z) else { continue };
                if grid.is_blocked(target.0, target.1) {
                    continue;
                }
                accum.add_hop(here, target);
                let center = grid.cell_center(target.0, target.1);
                let moved = Pose {
                    position: Vec3::new(center.x, -AGENT_HEIGHT_M, center.z),
                    ..pose
                };
                pose = set_pitch(&moved, 0.0);
            }
            Action::TurnLeft | Action::TurnRight | Action::TurnAround | Action::LookDown => {
                pose = crate::geometry::apply_view_action(&pose, &action)
                    .expect("view action applies");
            }
            Action::Stop => {
                let ground = Vec3::new(pose.position.x, 0.0, pose.position.z);
                success = ground.dist(&goal.position) <= cfg.success_threshold_m;
                break;
            }
            // GUI actions have no meaning in a scene; they consume the step.
            _ => continue,
        }
    }

    Ok(EpisodeResult {
        success,
        path_length_m: accum.meters(grid.cell_size()),
        shortest_length_m,
        steps_taken,
    })
}

/// A policy that replays a collected trajectory verbatim, emitting each
/// recorded (thought, action) pair in the response grammar, then stops.
pub fn replay_policy(
    trajectory: &crate::collect::Trajectory,
) -> impl FnMut(&Observation) -> String + '_ {
    let mut next = 0usize;
    move |_obs| {
        let raw = match trajectory.steps.get(next) {
            Some(step) => {
                crate::actions::wrap_response(&step.thought, std::slice::from_ref(&step.action))
            }
            None => crate::actions::wrap_response("Out of recorded steps.", &[Action::Stop]),
        };
        next += 1;
        raw
    }
}

// --- Aggregates -------------------------------------------------------------

pub fn success_rate(results: &[EpisodeResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(results.iter().filter(|r| r.success).count() as f64 / results.len() as f64)
}

/// Mean over episodes of S * l / max(p, l): success weighted by how close
/// the traveled path came to the shortest one.
pub fn spl(results: &[EpisodeResult]) -> Result<f64, EvalError> {
    if results.is_empty() {
        return Err(EvalError::Empty);
    }
    let total: f64 = results
        .iter()
        .map(|r| {
            if r.success {
                r.shortest_length_m / r.path_length_m.max(r.shortest_length_m)
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / results.len() as f64)
}

/// One JSONL line per episode followed by an aggregate line.
pub fn report_to_jsonl(results: &[EpisodeResult]) -> Result<String, EvalError> {
    let sr = success_rate(results)?;
    let spl_value = spl(results)?;
    let mut out = String::new();
    for r in results {
        let line = json!({
            "success": r.success,
            "p": r.path_length_m,
            "l": r.shortest_length_m,
            "steps": r.steps_taken,
        });
        out.push_str(&serde_json::to_string(&line).expect("report line serializes"));
        out.push('\n');
    }
    let aggregate = json!({ "sr": sr, "spl": spl_value, "n": results.len() });
    out.push_str(&serde_json::to_string(&aggregate).expect("aggregate serializes"));
    out.push('\n');
    Ok(out)
}
