//! The unified GUI + embodied action vocabulary and the strict parser /
//! serializer for the model response grammar:
//!
//! ```text
//! <think> free-form reasoning </think><answer>[{"action": ...}]</answer>
//! ```
//!
//! The answer body must be a JSON array of action objects. Action names are
//! matched case-insensitively on input; canonical output is lowercase with
//! keys in the order the prompts show them.

use serde_json::Value;
use thiserror::Error;

use crate::geometry::PixelPoint;

/// One action from the unified space. GUI and embodied variants share the
/// same grammar so a single policy head can emit either.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    // GUI
    Click(PixelPoint),
    LongPress(PixelPoint),
    InputText { text: String, point: PixelPoint },
    Scroll { start: PixelPoint, end: PixelPoint },
    NavigateHome,
    NavigateBack,
    // Embodied
    MoveTo(PixelPoint),
    TurnLeft,
    TurnRight,
    TurnAround,
    LookDown,
    Stop,
}

/// Variant names only, used for type-match rewards and metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionType {
    Click,
    LongPress,
    InputText,
    Scroll,
    NavigateHome,
    NavigateBack,
    MoveTo,
    TurnLeft,
    TurnRight,
    TurnAround,
    LookDown,
    Stop,
}

impl ActionType {
    pub const ALL: [ActionType; 12] = [
        ActionType::Click,
        ActionType::LongPress,
        ActionType::InputText,
        ActionType::Scroll,
        ActionType::NavigateHome,
        ActionType::NavigateBack,
        ActionType::MoveTo,
        ActionType::TurnLeft,
        ActionType::TurnRight,
        ActionType::TurnAround,
        ActionType::LookDown,
        ActionType::Stop,
    ];

    /// The lowercase wire name, e.g. `"turn_left"`.
    pub fn name(&self) -> &'static str {
        match self {
            ActionType::Click => "click",
            ActionType::LongPress => "long_press",
            ActionType::InputText => "input_text",
            ActionType::Scroll => "scroll",
            ActionType::NavigateHome => "navigate_home",
            ActionType::NavigateBack => "navigate_back",
            ActionType::MoveTo => "moveto",
            ActionType::TurnLeft => "turn_left",
            ActionType::TurnRight => "turn_right",
            ActionType::TurnAround => "turn_around",
            ActionType::LookDown => "look_down",
            ActionType::Stop => "stop",
        }
    }
}

impl std::fmt::Display for ActionType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl Action {
    pub fn action_type(&self) -> ActionType {
        match self {
            Action::Click(_) => ActionType::Click,
            Action::LongPress(_) => ActionType::LongPress,
            Action::InputText { .. } => ActionType::InputText,
            Action::Scroll { .. } => ActionType::Scroll,
            Action::NavigateHome => ActionType::NavigateHome,
            Action::NavigateBack => ActionType::NavigateBack,
            Action::MoveTo(_) => ActionType::MoveTo,
            Action::TurnLeft => ActionType::TurnLeft,
            Action::TurnRight => ActionType::TurnRight,
            Action::TurnAround => ActionType::TurnAround,
            Action::LookDown => ActionType::LookDown,
            Action::Stop => ActionType::Stop,
        }
    }

    /// The pixel target the action carries, if any. Scroll anchors on its
    /// start point (the gesture origin).
    pub fn point(&self) -> Option<PixelPoint> {
        match self {
            Action::Click(p)
            | Action::LongPress(p)
            | Action::MoveTo(p)
            | Action::InputText { point: p, .. }
            | Action::Scroll { start: p, .. } => Some(*p),
            _ => None,
        }
    }

    pub fn carries_point(&self) -> bool {
        self.point().is_some()
    }
}

/// A successfully parsed response: the think block plus at least one action.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelResponse {
    pub think: String,
    pub actions: Vec<Action>,
    /// Lenient-parse diagnostics (ignored unknown keys); never affects the
    /// parse verdict.
    pub warnings: Vec<String>,
}

impl ModelResponse {
    /// The action that gets scored: the first in the answer array.
    pub fn primary_action(&self) -> &Action {
        &self.actions[0]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormatError {
    #[error("missing or malformed tags: {0}")]
    MissingTags(&'static str),
    #[error("answer is not a JSON array of action objects: {0}")]
    BadJson(String),
    #[error("unknown action name {0:?}")]
    UnknownAction(String),
    #[error("bad action arguments: {0}")]
    BadArguments(String),
}

fn read_point(obj: &serde_json::Map<String, Value>, key: &str) -> Result<PixelPoint, FormatError> {
    let value = obj
        .get(key)
        .ok_or_else(|| FormatError::BadArguments(format!("missing {key:?}")))?;
    let arr = value
        .as_array()
        .ok_or_else(|| FormatError::BadArguments(format!("{key:?} must be a [x, y] array")))?;
    if arr.len() != 2 {
        return Err(FormatError::BadArguments(format!(
            "{key:?} must have exactly 2 coordinates, got {}",
            arr.len()
        )));
    }
    let coord = |v: &Value, axis: &str| -> Result<f64, FormatError> {
        let n = v.as_f64().ok_or_else(|| {
            FormatError::BadArguments(format!("{key:?} {axis} coordinate must be a number"))
        })?;
        if !n.is_finite() || n < 0.0 {
            return Err(FormatError::BadArguments(format!(
                "{key:?} {axis} coordinate must be finite and nonnegative, got {n}"
            )));
        }
        Ok(n)
    };
    Ok(PixelPoint::new(coord(&arr[0], "x")?, coord(&arr[1], "y")?))
}

/// Parses a single action object outside the `<answer>` grammar (used when
/// actions are embedded in other files). Unknown-key warnings are dropped.
pub fn action_from_value(value: &Value) -> Result<Action, FormatError> {
    parse_action_object(value, 0, &mut Vec::new())
}

fn parse_action_object(
    item: &Value,
    index: usize,
    warnings: &mut Vec<String>,
) -> Result<Action, FormatError> {
    let obj = item.as_object().ok_or_else(|| {
        FormatError::BadJson(format!("answer[{index}] is not a JSON object"))
    })?;
    let name_raw = obj
        .get("action")
        .ok_or_else(|| FormatError::BadArguments(format!("answer[{index}] has no \"action\" key")))?
        .as_str()
        .ok_or_else(|| {
            FormatError::BadArguments(format!("answer[{index}] \"action\" must be a string"))
        })?;
    let name = name_raw.to_ascii_lowercase();

    let mut required: &[&str] = &[];
    let action = match name.as_str() {
        "click" => {
            required = &["point"];
            Action::Click(read_point(obj, "point")?)
        }
        "long_press" => {
            required = &["point"];
            Action::LongPress(read_point(obj, "point")?)
        }
        "input_text" => {
            required = &["text", "point"];
            let text = obj
                .get("text")
                .ok_or_else(|| FormatError::BadArguments("missing \"text\"".into()))?
                .as_str()
                .ok_or_else(|| FormatError::BadArguments("\"text\" must be a string".into()))?;
            if text.is_empty() {
                return Err(FormatError::BadArguments("\"text\" must be non-empty".into()));
            }
            Action::InputText { text: text.to_owned(), point: read_point(obj, "point")? }
        }
        "scroll" => {
            required = &["start_point", "end_point"];
            Action::Scroll {
                start: read_point(obj, "start_point")?,
                end: read_point(obj, "end_point")?,
            }
        }
        "navigate_home" => Action::NavigateHome,
        "navigate_back" => Action::NavigateBack,
        "moveto" => {
            required = &["point"];
            Action::MoveTo(read_point(obj, "point")?)
        }
        "turn_left" => Action::TurnLeft,
        "turn_right" => Action::TurnRight,
        "turn_around" => Action::TurnAround,
        "look_down" => Action::LookDown,
        "stop" => Action::Stop,
        _ => return Err(FormatError::UnknownAction(name_raw.to_owned())),
    };

    for key in obj.keys() {
        if key != "action" && !required.contains(&key.as_str()) {
            warnings.push(format!("answer[{index}]: ignoring unknown key {key:?}"));
        }
    }
    Ok(action)
}

/// Parses a raw model response against the strict grammar: exactly one
/// think block followed by one answer block, whitespace allowed around and
/// between them, newlines allowed inside both. The answer body must be a
/// non-empty JSON array of recognized action objects.
pub fn parse_response(raw: &str) -> Result<ModelResponse, FormatError> {
    let s = raw.trim();
    let rest = s
        .strip_prefix("<think>")
        .ok_or(FormatError::MissingTags("response must start with <think>"))?;
    let think_end = rest
        .find("</think>")
        .ok_or(FormatError::MissingTags("unclosed <think> block"))?;
    let think = &rest[..think_end];
    let after_think = rest[think_end + "</think>".len()..].trim_start();
    let answer_rest = after_think
        .strip_prefix("<answer>")
        .ok_or(FormatError::MissingTags("expected <answer> after </think>"))?;
    let body = answer_rest
        .strip_suffix("</answer>")
        .ok_or(FormatError::MissingTags("response must end with </answer>"))?;
    if body.contains("<answer>") || body.contains("</answer>") {
        return Err(FormatError::MissingTags("more than one answer block"));
    }

    let parsed: Value =
        serde_json::from_str(body).map_err(|e| FormatError::BadJson(e.to_string()))?;
    let items = parsed
        .as_array()
        .ok_or_else(|| FormatError::BadJson("answer must be a JSON array".into()))?;
    if items.is_empty() {
        return Err(FormatError::BadJson("answer array is empty".into()));
    }

    let mut warnings = Vec::new();
    let actions = items
        .iter()
        .enumerate()
        .map(|(i, item)| parse_action_object(item, i, &mut warnings))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(ModelResponse { think: think.to_owned(), actions, warnings })
}

/// Formats a coordinate the way the prompts write them: integral values as
/// integers, everything else in shortest round-trip decimal form.
pub(crate) fn fmt_coord(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 9e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn fmt_point(p: &PixelPoint) -> String {
    format!("[{}, {}]", fmt_coord(p.x), fmt_coord(p.y))
}

/// Serializes an action to its canonical single-line JSON form, e.g.
/// `{"action": "scroll", "start_point": [100, 200], "end_point": [100, 800]}`.
/// Wrapping the output in the response grammar and re-parsing yields the
/// same action back.
pub fn serialize_action(action: &Action) -> String {
    let name = action.action_type().name();
    match action {
        Action::Click(p) | Action::LongPress(p) | Action::MoveTo(p) => {
            format!("{{\"action\": \"{name}\", \"point\": {}}}", fmt_point(p))
        }
        Action::InputText { text, point } => format!(
            "{{\"action\": \"{name}\", \"text\": {}, \"point\": {}}}",
            serde_json::to_string(text).expect("strings always serialize"),
            fmt_point(point)
        ),
        Action::Scroll { start, end } => format!(
            "{{\"action\": \"{name}\", \"start_point\": {}, \"end_point\": {}}}",
            fmt_point(start),
            fmt_point(end)
        ),
        Action::NavigateHome
        | Action::NavigateBack
        | Action::TurnLeft
        | Action::TurnRight
        | Action::TurnAround
        | Action::LookDown
        | Action::Stop => format!("{{\"action\": \"{name}\"}}"),
    }
}

/// Wraps a serialized action list in the full response grammar; handy for
/// fixtures and the replay policy.
pub fn wrap_response(think: &str, actions: &[Action]) -> String {
    let body: Vec<String> = actions.iter().map(serialize_action).collect();
    format!("<think>{think}</think><answer>[{}]</answer>", body.join(", "))
}
