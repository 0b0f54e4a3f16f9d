//! Trajectory collection: walks the planner's waypoints, turning each one
//! into view-adjustment actions until its projection lands in frame, then a
//! move-to action carrying the pixel target, and finally a stop. Also
//! ingests GUI trajectory files, generates per-step thoughts (deterministic
//! templates or a remote HTTP provider), and slices trajectories into
//! history-conditioned training samples.

use std::path::Path;

use serde_json::{json, Value};
use thiserror::Error;

use crate::actions::{action_from_value, serialize_action, Action, FormatError};
use crate::geometry::{
    project, set_pitch, to_camera_frame, CameraModel, PixelPoint, Pose, ProjectionResult, Vec3,
};
use crate::pathfind::{shortest_path, PathError};
use crate::scene::{ray_depth, render_depth, DepthMap, Scene, SceneError, AGENT_HEIGHT_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Gui,
    Embodied,
}

impl Domain {
    fn as_str(&self) -> &'static str {
        match self {
            Domain::Gui => "gui",
            Domain::Embodied => "embodied",
        }
    }
}

/// One recorded step: what was seen, what was thought, what was done.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub observation_id: String,
    pub depth_ref: Option<String>,
    pub thought: String,
    pub action: Action,
    /// Ground-truth pixel for point-carrying actions; None otherwise.
    pub gt_point: Option<PixelPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub instruction: String,
    pub domain: Domain,
    pub steps: Vec<TrajectoryStep>,
    pub camera: Option<CameraModel>,
    pub scene_seed: Option<u64>,
    /// Whether collinear waypoint runs were collapsed during collection
    /// (embodied only); recorded so replays can reproduce the exact hops.
    pub thinned: Option<bool>,
}

/// One training query: everything the policy sees when predicting step i.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub instruction: String,
    /// The first i (thought, action) pairs, oldest first.
    pub history: Vec<(String, Action)>,
    pub observation_id: String,
    pub depth_ref: Option<String>,
    pub gt_action: Action,
}

/// Where thoughts come from. The template provider is fully deterministic;
/// the remote provider POSTs a filled prompt to an HTTP endpoint.
#[derive(Debug, Clone)]
pub enum ThoughtProvider {
    Template,
    Remote(RemoteThoughts),
}

#[derive(Debug, Clone)]
pub struct RemoteThoughts {
    pub endpoint: String,
    pub timeout_s: u64,
    pub template: PromptTemplate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptTemplate {
    Embodied,
    Gui,
}

/// Per-step context handed to thought generation.
#[derive(Debug, Clone, Copy)]
pub struct ThoughtContext<'a> {
    pub action: &'a Action,
    pub domain: Domain,
    pub observation_id: &'a str,
    /// GUI trajectories may reference the observation after the action.
    pub next_observation_id: Option<&'a str>,
    pub apps: &'a [String],
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error("could not bring waypoint {waypoint} into view within {cap} view actions")]
    ViewLoopExceeded { waypoint: usize, cap: usize },
    #[error("scene has no goals")]
    NoGoal,
    #[error("thought provider failed: {0}")]
    ProviderFailure(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy)]
pub struct CollectOptions {
    /// Maximum view adjustments per waypoint before giving up.
    pub view_loop_cap: usize,
    /// Collapse collinear waypoint runs to their endpoints.
    pub thin_waypoints: bool,
    /// Render and return a full depth raster per step (the refs are always
    /// recorded; the rasters are optional because they dominate the cost).
    pub render_depths: bool,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions { view_loop_cap: 8, thin_waypoints: true, render_depths: false }
    }
}

pub struct CollectOutput {
    pub trajectory: Trajectory,
    /// One raster per step when `render_depths` was set, else empty.
    pub depth_maps: Vec<DepthMap>,
}

/// Fixed per-action-type thought sentences (see docs/thought-templates.md;
/// version 1). Bit-identical across runs.
pub fn template_thought(action: &Action) -> String {
    let pt = |p: &PixelPoint| {
        format!("({}, {})", crate::actions::fmt_coord(p.x), crate::actions::fmt_coord(p.y))
    };
    match action {
        Action::MoveTo(p) => format!(
            "Moving toward the visible waypoint at {} to continue along the planned path.",
            pt(p)
        ),
        Action::TurnLeft => {
            "The route bends to my left, so I turn left to line up with it.".into()
        }
        Action::TurnRight => {
            "The route bends to my right, so I turn right to line up with it.".into()
        }
        Action::TurnAround => {
            "Nothing ahead leads toward the target, so I turn around to search behind me."
                .into()
        }
        Action::LookDown => {
            "The next waypoint sits below my field of view, so I look down to bring it into frame."
                .into()
        }
        Action::Stop => "The target is within reach of my current position, so I stop here.".into(),
        Action::Click(p) => format!("Tapping the control at {} to advance the task.", pt(p)),
        Action::LongPress(p) => {
            format!("Holding the element at {} to open its extended options.", pt(p))
        }
        Action::InputText { text, point } => format!(
            "Entering {text:?} into the field at {} to supply the required input.",
            pt(point)
        ),
        Action::Scroll { start, end } => format!(
            "Dragging from {} to {} to reveal more of the page.",
            pt(start),
            pt(end)
        ),
        Action::NavigateHome => {
            "Returning to the home screen to begin the next part of the task.".into()
        }
        Action::NavigateBack => {
            "Going back to the previous screen to continue from there.".into()
        }
    }
}

/// Renders an action the way the embodied thought-generation prompt writes
/// actions (an `action_type` object).
fn embodied_prompt_action(action: &Action) -> String {
    match action {
        Action::MoveTo(p) => format!(
            "{{\"action_type\": \"move\", \"x\": {}, \"y\": {}}}",
            crate::actions::fmt_coord(p.x),
            crate::actions::fmt_coord(p.y)
        ),
        other => format!("{{\"action_type\": \"{}\"}}", other.action_type().name()),
    }
}

fn embodied_prompt(instruction: &str, action: &Action) -> String {
    format!(
        "You are a robot in an unfamiliar environment. Now I want you to give the reason for your action.\n\
         \n\
         Your action can be in the following list:\n\
         - Based on the image, predict the optimal location to move next to finish the task. Use the coordinates (x, y) (x is the pixel from left to right and y is the pixel from top to bottom) to indicate where you want to move to: {{\"action_type\": \"move\", \"x\": <position in horizontal (width)>, \"y\": <position in vertical (height)>}}.\n\
         - Turn left: {{\"action_type\": \"turn_left\"}}.\n\
         - Turn right: {{\"action_type\": \"turn_right\"}}.\n\
         - Turn around: {{\"action_type\": \"turn_around\"}}.\n\
         - Move the camera angle downward: {{\"action_type\": \"look_down\"}}.\n\
         - Based on the image, if you find the target and the target is close enough, please stop to indicate that you want to stop: {{\"action_type\": \"stop\"}}.\n\
         \n\
         You will be given the view before you performed the action (which has a text label \"before\" on the bottom right), the action you chose, and the task.\n\
         \n\
         This is the action you performed: {action}\n\
         This is the task: {task} (the picture and action is one of the steps to finish the task)\n\
         \n\
         By inspecting the picture and the action performed, give a brief reason of this step. You should carefully inspect the environment and give your analysis for why to do such action rather than other actions.\n\
         If moving to a position, explain why moving to that position based on the current environment. Avoid generic reasons like \"get closer to the target.\"\n\
         \n\
         NOTICES:\n\
         1. Coordinates are absolute coordinates (a center point defined by top-left and bottom-right coordinates).\n\
         2. If the action type is \"move\", the point will be labeled as \"Next point\" in the before image.\n\
         3. Remember that you should give the answer from a first-person perspective and keep it around 60 words and in a single line.\n\
         4. Don't limit yourself to begin with \"I...\". try any other possible sentence structure (like the position of exchanging description and target) if not influence the meaning.",
        action = embodied_prompt_action(action),
        task = instruction
    )
}

fn gui_prompt(instruction: &str, action: &Action, apps: &[String]) -> String {
    let apps_text = if apps.is_empty() { "(none listed)".to_owned() } else { apps.join(", ") };
    format!(
        "You are an agent who can operate an Android phone on behalf of a user. Now I want you to give the reason for your action.\n\
         \n\
         You will be given the screenshot before you performed the action (which has a text label \"before\" on the bottom right), the action you chose (together with the reason), and the screenshot after the action was performed (which has a text label \"after\" on the bottom right).\n\
         \n\
         This is the action you picked: {action}\n\
         This is the task: {task} (The screenshots and action are one of the steps to finish the task)\n\
         This is the instruction: {task} (The instruction to solve the task)\n\
         This is the related apps: {apps} (Apps in the reason you output cannot go beyond the range of the app list)\n\
         \n\
         By comparing the two screenshots and the action performed, give a brief reason of this step. The reason should include the detailed description for the action and the target to do so, but avoid any description related to the after screenshot.\n\
         \n\
         Requirements:\n\
         - Use first-person perspective.\n\
         - Keep the response around 60 words and in a single line.\n\
         - Do not begin every sentence with \"I\"; feel free to vary the structure as long as the meaning remains clear.",
        action = serialize_action(action),
        task = instruction,
        apps = apps_text
    )
}

const REMOTE_ATTEMPTS: usize = 3;

fn remote_thought(remote: &RemoteThoughts, prompt: &str) -> Result<String, CollectError> {
    let config = ureq::Agent::config_builder()
        .timeout_global(Some(std::time::Duration::from_secs(remote.timeout_s)))
        .build();
    let agent = ureq::Agent::new_with_config(config);
    let mut last_error = String::new();
    for _ in 0..REMOTE_ATTEMPTS {
        match agent.post(&remote.endpoint).send_json(json!({ "prompt": prompt })) {
            Ok(mut response) => match response.body_mut().read_json::<Value>() {
                Ok(body) => match body.get("text").and_then(Value::as_str) {
                    Some(text) => return Ok(one_line(text)),
                    None => last_error = "reply has no \"text\" field".to_owned(),
                },
                Err(e) => last_error = format!("unreadable reply body: {e}"),
            },
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(CollectError::ProviderFailure(format!(
        "{} after {REMOTE_ATTEMPTS} attempts: {last_error}",
        remote.endpoint
    )))
}

/// Collapses a reply onto one line: newline runs become single spaces.
fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Produces the thought for one step. Template: the fixed sentence for the
/// action type, coordinates substituted. Remote: POST the filled prompt
/// ({"prompt": ...} -> {"text": ...}), up to three attempts.
pub fn generate_thought(
    instruction: &str,
    ctx: &ThoughtContext,
    provider: &ThoughtProvider,
) -> Result<String, CollectError> {
    match provider {
        ThoughtProvider::Template => Ok(template_thought(ctx.action)),
        ThoughtProvider::Remote(remote) => {
            let prompt = match remote.template {
                PromptTemplate::Embodied => embodied_prompt(instruction, ctx.action),
                PromptTemplate::Gui => gui_prompt(instruction, ctx.action, ctx.apps),
            };
            remote_thought(remote, &prompt)
        }
    }
}

/// Walks the shortest path, emitting view actions until each waypoint's
/// projection is inside the image, then a move-to that relocates the agent
/// onto that waypoint (re-leveling the camera), and a final stop at the
/// goal.
///
/// View-action selection per iteration, in order: behind the camera — turn
/// around; pixel left of the image — turn left; right — turn right; below —
/// look down. A projection above the image has no counter-action; the pitch
/// is re-leveled once and the collection aborts if that does not help (it
/// cannot occur over a flat floor with the camera families used here).
pub fn collect_embodied(
    scene: &Scene,
    cam: &CameraModel,
    instruction: &str,
    provider: &ThoughtProvider,
    opts: &CollectOptions,
) -> Result<CollectOutput, CollectError> {
    let goal = scene.goals.first().ok_or(CollectError::NoGoal)?;
    let waypoints = shortest_path(scene, scene.spawn_ground(), goal.position)?;
    let path =
        if opts.thin_waypoints { waypoints.thinned() } else { waypoints.points.clone() };

    let seed = scene.seed;
    let mut pose = scene.spawn;
    let mut steps: Vec<TrajectoryStep> = Vec::new();
    let mut depth_maps: Vec<DepthMap> = Vec::new();

    let record = |pose: &Pose,
                      action: Action,
                      gt_point: Option<PixelPoint>,
                      steps: &mut Vec<TrajectoryStep>,
                      depth_maps: &mut Vec<DepthMap>|
     -> Result<(), CollectError> {
        let index = steps.len();
        let observation_id = format!("pose:{seed}:{index}");
        let depth_ref = format!("depth_{seed:016x}_{index:04}.nvdm");
        if opts.render_depths {
            depth_maps.push(render_depth(scene, pose, cam)?);
        }
        let ctx = ThoughtContext {
            action: &action,
            domain: Domain::Embodied,
            observation_id: &observation_id,
            next_observation_id: None,
            apps: &[],
        };
        let thought = generate_thought(instruction, &ctx, provider)?;
        steps.push(TrajectoryStep {
            observation_id,
            depth_ref: Some(depth_ref),
            thought,
            action,
            gt_point,
        });
        Ok(())
    };

    let (w, h) = (f64::from(cam.width), f64::from(cam.height));
    for (waypoint_index, target) in path.iter().enumerate().skip(1) {
        let mut view_iters = 0usize;
        let mut releveled = false;
        loop {
            if view_iters >= opts.view_loop_cap {
                return Err(CollectError::ViewLoopExceeded {
                    waypoint: waypoint_index,
                    cap: opts.view_loop_cap,
                });
            }
            let proj = project(to_camera_frame(*target, &pose), cam);
            let view_action = match proj {
                ProjectionResult::Behind => Action::TurnAround,
                ProjectionResult::OutOfView(p, _) => {
                    if p.x < 0.0 {
                        Action::TurnLeft
                    } else if p.x > w {
                        Action::TurnRight
                    } else if p.y > h {
                        Action::LookDown
                    } else {
                        // Above the image. No action raises the view, so
                        // re-level once and retry, then give up.
                        if !releveled && pose.pitch_deg < 0.0 {
                            pose = set_pitch(&pose, 0.0);
                            releveled = true;
                            view_iters += 1;
                            continue;
                        }
                        return Err(CollectError::ViewLoopExceeded {
                            waypoint: waypoint_index,
                            cap: opts.view_loop_cap,
                        });
                    }
                }
                ProjectionResult::InView(pixel, _depth) => {
                    debug_assert!(
                        ray_depth(scene, &pose, cam, pixel).is_finite(),
                        "a floor waypoint always has finite rendered depth"
                    );
                    record(&pose, Action::MoveTo(pixel), Some(pixel), &mut steps, &mut depth_maps)?;
                    let moved = Pose {
                        position: Vec3::new(target.x, -AGENT_HEIGHT_M, target.z),
                        ..pose
                    };
                    pose = set_pitch(&moved, 0.0);
                    break;
                }
            };
            record(&pose, view_action.clone(), None, &mut steps, &mut depth_maps)?;
            pose = crate::geometry::apply_view_action(&pose, &view_action)
                .expect("only view actions are recorded here");
            view_iters += 1;
        }
    }
    record(&pose, Action::Stop, None, &mut steps, &mut depth_maps)?;

    debug_assert_eq!(
        (pose.position.x, pose.position.z),
        (path.last().unwrap().x, path.last().unwrap().z),
        "collection must end on the goal waypoint"
    );

    Ok(CollectOutput {
        trajectory: Trajectory {
            instruction: instruction.to_owned(),
            domain: Domain::Embodied,
            steps,
            camera: Some(*cam),
            scene_seed: Some(seed),
            thinned: Some(opts.thin_waypoints),
        },
        depth_maps,
    })
}

/// Slices a trajectory into one sample per step; sample i carries the first
/// i (thought, action) pairs as its history.
pub fn build_samples(trajectory: &Trajectory) -> Vec<TrainingSample> {
    let mut samples = Vec::with_capacity(trajectory.steps.len());
    for (i, step) in trajectory.steps.iter().enumerate() {
        samples.push(TrainingSample {
            instruction: trajectory.instruction.clone(),
            history: trajectory.steps[..i]
                .iter()
                .map(|s| (s.thought.clone(), s.action.clone()))
                .collect(),
            observation_id: step.observation_id.clone(),
            depth_ref: step.depth_ref.clone(),
            gt_action: step.action.clone(),
        });
    }
    samples
}

// --- JSONL wire format ----------------------------------------------------

fn point_value(p: &PixelPoint) -> Value {
    // Mirrors the canonical serializer so integral coordinates stay integers.
    serde_json::from_str(&format!(
        "[{}, {}]",
        crate::actions::fmt_coord(p.x),
        crate::actions::fmt_coord(p.y)
    ))
    .expect("coordinate pair is valid JSON")
}

fn action_value(action: &Action) -> Value {
    serde_json::from_str(&serialize_action(action)).expect("canonical action is valid JSON")
}

/// One trajectory as a single JSONL line.
pub fn trajectory_to_line(t: &Trajectory) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert("instruction".into(), json!(t.instruction));
    obj.insert("domain".into(), json!(t.domain.as_str()));
    if let Some(cam) = &t.camera {
        obj.insert("camera".into(), json!({"w": cam.width, "h": cam.height, "f": cam.focal}));
    }
    if let Some(seed) = t.scene_seed {
        obj.insert("scene_seed".into(), json!(seed));
    }
    if let Some(thinned) = t.thinned {
        obj.insert("thinned".into(), json!(thinned));
    }
    let steps: Vec<Value> = t
        .steps
        .iter()
        .map(|s| {
            let mut step = serde_json::Map::new();
            step.insert("obs".into(), json!(s.observation_id));
            if let Some(d) = &s.depth_ref {
                step.insert("depth".into(), json!(d));
            }
            step.insert("thought".into(), json!(s.thought));
            step.insert("action".into(), action_value(&s.action));
            if let Some(p) = &s.gt_point {
                step.insert("gt_point".into(), point_value(p));
            }
            Value::Object(step)
        })
        .collect();
    obj.insert("steps".into(), Value::Array(steps));
    serde_json::to_string(&Value::Object(obj)).expect("trajectory serializes")
}

fn parse_point(v: &Value, what: &str) -> Result<PixelPoint, String> {
    let arr = v.as_array().ok_or_else(|| format!("{what} must be a [x, y] array"))?;
    if arr.len() != 2 {
        return Err(format!("{what} must have exactly two coordinates"));
    }
    let x = arr[0].as_f64().ok_or_else(|| format!("{what} x must be a number"))?;
    let y = arr[1].as_f64().ok_or_else(|| format!("{what} y must be a number"))?;
    Ok(PixelPoint::new(x, y))
}

/// Parses one JSONL line into a validated trajectory.
pub fn trajectory_from_line(line: &str) -> Result<Trajectory, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("not JSON: {e}"))?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;
    let instruction = obj
        .get("instruction")
        .and_then(Value::as_str)
        .ok_or("missing \"instruction\"")?
        .to_owned();
    let domain = match obj.get("domain").and_then(Value::as_str) {
        Some("gui") => Domain::Gui,
        Some("embodied") => Domain::Embodied,
        Some(other) => return Err(format!("unknown domain {other:?}")),
        None => return Err("missing \"domain\"".into()),
    };
    let camera = match obj.get("camera") {
        None | Some(Value::Null) => None,
        Some(c) => {
            let w = c.get("w").and_then(Value::as_u64).ok_or("camera.w must be an integer")?;
            let h = c.get("h").and_then(Value::as_u64).ok_or("camera.h must be an integer")?;
            let f = c.get("f").and_then(Value::as_f64).ok_or("camera.f must be a number")?;
            Some(
                CameraModel::new(w as u32, h as u32, f)
                    .map_err(|e| format!("bad camera: {e}"))?,
            )
        }
    };
    let scene_seed = obj.get("scene_seed").and_then(Value::as_u64);
    let thinned = obj.get("thinned").and_then(Value::as_bool);
    let steps_value =
        obj.get("steps").and_then(Value::as_array).ok_or("missing \"steps\" array")?;
    if steps_value.is_empty() {
        return Err("trajectory has no steps".into());
    }

    let mut steps = Vec::with_capacity(steps_value.len());
    for (i, sv) in steps_value.iter().enumerate() {
        let step = sv.as_object().ok_or_else(|| format!("step {i} is not an object"))?;
        let observation_id = step
            .get("obs")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("step {i} missing \"obs\""))?
            .to_owned();
        let depth_ref = step.get("depth").and_then(Value::as_str).map(str::to_owned);
        let thought = step
            .get("thought")
            .and_then(Value::as_str)
            .ok_or_else(|| format!("step {i} missing \"thought\""))?
            .to_owned();
        let action_value =
            step.get("action").ok_or_else(|| format!("step {i} missing \"action\""))?;
        let action = action_from_value(action_value).map_err(|e: FormatError| {
            format!("step {i} action: {e}")
        })?;
        let gt_point = match step.get("gt_point") {
            None | Some(Value::Null) => action.point(),
            Some(v) => Some(parse_point(v, &format!("step {i} gt_point"))?),
        };
        match (&gt_point, action.carries_point()) {
            (Some(_), false) => {
                return Err(format!("step {i} has gt_point but a point-free action"))
            }
            (None, true) => return Err(format!("step {i} lacks gt_point for {action:?}")),
            _ => {}
        }
        if let (Some(p), Some(cam), Domain::Embodied) = (&gt_point, &camera, domain) {
            let (w, h) = (f64::from(cam.width), f64::from(cam.height));
            if !(0.0..=w).contains(&p.x) || !(0.0..=h).contains(&p.y) {
                return Err(format!("step {i} gt_point ({}, {}) outside image", p.x, p.y));
            }
        }
        steps.push(TrajectoryStep { observation_id, depth_ref, thought, action, gt_point });
    }
    if domain == Domain::Embodied && steps.last().map(|s| &s.action) != Some(&Action::Stop) {
        return Err("embodied trajectory must end with stop".into());
    }
    Ok(Trajectory { instruction, domain, steps, camera, scene_seed, thinned })
}

pub fn write_trajectories(path: &Path, trajectories: &[Trajectory]) -> std::io::Result<()> {
    let mut out = String::new();
    for t in trajectories {
        out.push_str(&trajectory_to_line(t));
        out.push('\n');
    }
    std::fs::write(path, out)
}

/// A line that failed validation, with its 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct LineIssue {
    pub line: usize,
    pub error: String,
}

pub struct GuiIngest {
    pub trajectories: Vec<Trajectory>,
    pub issues: Vec<LineIssue>,
}

/// Reads a GUI trajectory JSONL file. Schema violations are per-line: bad
/// lines are reported with their line numbers and the rest are kept. Only
/// an unreadable file is a hard error.
pub fn ingest_gui(path: &Path) -> Result<GuiIngest, CollectError> {
    let text = std::fs::read_to_string(path)?;
    let mut trajectories = Vec::new();
    let mut issues = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match trajectory_from_line(line) {
            Ok(t) if t.domain == Domain::Gui => trajectories.push(t),
            Ok(_) => issues.push(LineIssue {
                line: index + 1,
                error: "expected a gui trajectory".into(),
            }),
            Err(error) => issues.push(LineIssue { line: index + 1, error }),
        }
    }
    Ok(GuiIngest { trajectories, issues })
}

/// Reads any trajectory JSONL (both domains), failing on the first bad line.
pub fn read_trajectories(path: &Path) -> Result<Vec<Trajectory>, CollectError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(trajectory_from_line(line).map_err(|e| {
            CollectError::ProviderFailure(format!("line {}: {e}", index + 1))
        })?);
    }
    Ok(out)
}
