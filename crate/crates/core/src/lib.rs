//! navkit-core: the non-neural machinery for training and evaluating a
//! unified GUI + embodied navigation agent.
//!
//! The crate covers the full data path around the model: synthetic indoor
//! scenes with depth rendering ([`scene`]), shortest paths over their
//! occupancy grids ([`pathfind`]), camera geometry ([`geometry`]), the
//! unified action vocabulary with its strict response grammar ([`actions`]),
//! visual-target trajectory collection ([`collect`]), distance-aware rewards
//! for sampled rollouts ([`reward`]), group-relative advantage computation
//! with a toy trainer ([`grpo`]), and evaluation metrics ([`eval`]).
//!
//! Conventions shared by every module: world and camera frames are
//! right-handed with +x right, +y down, +z forward; the floor is the y = 0
//! plane and the camera rides 1.5 m above it; angles are degrees; distances
//! are meters; pixels have their origin at the top-left of the image.

pub mod actions;
pub mod collect;
pub mod eval;
pub mod geometry;
pub mod grpo;
pub mod pathfind;
pub mod reward;
pub mod scene;

pub use actions::{
    parse_response, serialize_action, wrap_response, Action, ActionType, FormatError,
    ModelResponse,
};
pub use collect::{
    build_samples, collect_embodied, ingest_gui, CollectError, CollectOptions, CollectOutput,
    Domain, ThoughtProvider, Trajectory, TrajectoryStep, TrainingSample,
};
pub use eval::{
    affordance_success, gui_step_correct, navigate_episode, spl, success_rate, EpisodeConfig,
    EpisodeResult, EvalError, GuiGroundTruth, Mask, ThresholdRule,
};
pub use geometry::{
    apply_view_action, project, set_pitch, to_camera_frame, to_world_frame, unproject,
    CameraModel, GeometryError, PixelPoint, Pose, ProjectionResult, UnitRotation, Vec3,
};
pub use grpo::{
    advantages, signal_density, toy_train, AdvantageVector, GrpoError, RolloutGroup,
    ToyTrainConfig, TrainingCurve,
};
pub use pathfind::{grid_length_m, shortest_path, PathError, Waypoints};
pub use reward::{total_reward, RewardBreakdown, RewardConfig, RewardMode, StepGroundTruth};
pub use scene::{
    generate_scene, render_depth, DepthMap, GenParams, Goal, OccupancyGrid, Scene, SceneError,
    AGENT_HEIGHT_M,
};
