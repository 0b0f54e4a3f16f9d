//! `navkit` — batch front end for scene generation, trajectory collection,
//! rollout scoring, advantage computation, toy training, and evaluation.
//!
//! Every subcommand is deterministic for fixed seeds and inputs, never
//! mutates its inputs, and echoes its effective configuration into a
//! `<out>.meta.json` sidecar so artifacts carry their own provenance.
//! Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 provider
//! or I/O failure — each failure prints a one-line diagnostic to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use navkit_core::actions::Action;
use navkit_core::collect::{
    collect_embodied, read_trajectories, write_trajectories, CollectError, CollectOptions,
    PromptTemplate, RemoteThoughts, ThoughtProvider, Trajectory,
};
use navkit_core::eval::{navigate_episode, replay_policy, report_to_jsonl, EpisodeConfig, EpisodeResult};
use navkit_core::geometry::CameraModel;
use navkit_core::grpo::{advantages, toy_train, GrpoError, ToyTask, ToyTrainConfig, ADVANTAGE_EPSILON};
use navkit_core::reward::{total_reward, RewardConfig, RewardMode, StepGroundTruth};
use navkit_core::scene::{generate_scene, load_scene, save_scene, DepthMap, GenParams, Scene, SceneError};
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

/// Environment variable consulted for the remote thought-provider endpoint
/// when neither a flag nor a config-file entry supplies one.
const ENDPOINT_ENV: &str = "NAVKIT_THOUGHT_ENDPOINT";

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "navkit", version, about = "Trajectory dataset, scoring, and evaluation toolkit")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene and save it as JSON.
    Scene(SceneArgs),
    /// Collect one visual-target trajectory over a saved scene.
    Collect(CollectArgs),
    /// Score rollout responses against ground-truth trajectory steps.
    Score(ScoreArgs),
    /// Standardize reward groups into advantages.
    Advantages(AdvantagesArgs),
    /// Train the toy grounding policy and emit its learning curve as CSV.
    TrainToy(TrainToyArgs),
    /// Replay trajectories through the navigation evaluator.
    Eval(EvalArgs),
    /// Summarize (and optionally merge) episode reports.
    Report(ReportArgs),
}

/// Values accepted by a JSON config file. Flags take precedence over these,
/// and these take precedence over the environment and built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda_format: Option<f64>,
    lambda_type: Option<f64>,
    lambda_grounding: Option<f64>,
    theta_d: Option<f64>,
    theta_h: Option<f64>,
    theta_hat_d: Option<f64>,
    mode: Option<String>,
    updates: Option<usize>,
    group_size: Option<usize>,
    learning_rate: Option<f64>,
    kl_coef: Option<f64>,
    success_threshold_m: Option<f64>,
    max_steps: Option<usize>,
    endpoint: Option<String>,
    timeout_s: Option<u64>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Dense,
    Sparse,
}

/// Reward knobs shared by `score` and `train-toy`. Defaults are the
/// published constants: λ = 0.1/1/1, θ_d = 200, θ_h = 0.5, θ̂_d = 20.
#[derive(Args, Debug, Clone)]
struct RewardFlags {
    /// Weight of the format component.
    #[arg(long)]
    lambda_format: Option<f64>,
    /// Weight of the action-type component.
    #[arg(long)]
    lambda_type: Option<f64>,
    /// Weight of the grounding component.
    #[arg(long)]
    lambda_grounding: Option<f64>,
    /// Dense grounding decay radius, pixels.
    #[arg(long)]
    theta_d: Option<f64>,
    /// Depth-disparity gate, meters.
    #[arg(long)]
    theta_h: Option<f64>,
    /// Grounding mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Sparse hit radius, pixels (only used in sparse mode).
    #[arg(long)]
    theta_hat_d: Option<f64>,
}

impl RewardFlags {
    fn resolve(&self, file: &FileConfig) -> Result<RewardConfig, CliError> {
        let mut cfg = RewardConfig::default();
        cfg.lambda_format = self.lambda_format.or(file.lambda_format).unwrap_or(cfg.lambda_format);
        cfg.lambda_type = self.lambda_type.or(file.lambda_type).unwrap_or(cfg.lambda_type);
        cfg.lambda_grounding =
            self.lambda_grounding.or(file.lambda_grounding).unwrap_or(cfg.lambda_grounding);
        cfg.theta_d = self.theta_d.or(file.theta_d).unwrap_or(cfg.theta_d);
        cfg.theta_h = self.theta_h.or(file.theta_h).unwrap_or(cfg.theta_h);

        let file_mode = match file.mode.as_deref() {
            None => None,
            Some("dense") => Some(ModeArg::Dense),
            Some("sparse") => Some(ModeArg::Sparse),
            Some(other) => {
                return Err(CliError::Data(format!(
                    "config: mode must be \"dense\" or \"sparse\", got \"{other}\""
                )))
            }
        };
        let theta_hat_d = self.theta_hat_d.or(file.theta_hat_d).unwrap_or(20.0);
        cfg.mode = match self.mode.or(file_mode).unwrap_or(ModeArg::Dense) {
            ModeArg::Dense => RewardMode::Dense,
            ModeArg::Sparse => RewardMode::Sparse { theta_hat_d },
        };
        Ok(cfg)
    }
}

/// Scene-generation knobs shared by `scene` and seed-based `eval`.
#[derive(Args, Debug, Clone)]
struct GenFlags {
    /// Grid width in cells.
    #[arg(long)]
    cols: Option<usize>,
    /// Grid depth in cells.
    #[arg(long)]
    rows: Option<usize>,
    /// Cell edge length, meters.
    #[arg(long)]
    cell_size: Option<f64>,
    /// Number of rooms.
    #[arg(long)]
    rooms: Option<usize>,
    /// Fraction of interior cells turned into obstacles.
    #[arg(long)]
    obstacle_density: Option<f64>,
}

impl GenFlags {
    fn resolve(&self) -> GenParams {
        let d = GenParams::default();
        GenParams {
            cols: self.cols.unwrap_or(d.cols),
            rows: self.rows.unwrap_or(d.rows),
            cell_size: self.cell_size.unwrap_or(d.cell_size),
            rooms: self.rooms.unwrap_or(d.rooms),
            obstacle_density: self.obstacle_density.unwrap_or(d.obstacle_density),
        }
    }
}

#[derive(Args, Debug)]
struct SceneArgs {
    /// Generation seed.
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    gen: GenFlags,
    /// Output scene JSON path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProviderArg {
    /// Deterministic per-action-type template sentences.
    Template,
    /// HTTP endpoint returning {"text": ...} for {"prompt": ...}.
    Remote,
}

#[derive(Args, Debug)]
struct CollectArgs {
    /// Scene JSON produced by `navkit scene`.
    #[arg(long)]
    scene: PathBuf,
    /// Output trajectory JSONL path.
    #[arg(long)]
    out: PathBuf,
    /// Instruction text; defaults to "Navigate to the <goal label>.".
    #[arg(long)]
    instruction: Option<String>,
    /// Camera spec as WIDTHxHEIGHT:FOCAL, e.g. 640x480:320.
    #[arg(long, default_value = "640x480:320")]
    camera: String,
    /// Keep every path cell as a waypoint instead of thinning collinear runs.
    #[arg(long)]
    no_thin: bool,
    /// Maximum view adjustments allowed per waypoint.
    #[arg(long)]
    view_loop_cap: Option<usize>,
    /// Thought provider.
    #[arg(long, value_enum, default_value_t = ProviderArg::Template)]
    provider: ProviderArg,
    /// Remote provider endpoint (overrides config file and NAVKIT_THOUGHT_ENDPOINT).
    #[arg(long)]
    endpoint: Option<String>,
    /// Remote provider timeout, seconds.
    #[arg(long)]
    timeout_s: Option<u64>,
    /// Render a depth map per step and save them here as .nvdm files.
    #[arg(long)]
    depth_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// JSONL of rollouts, one {"raw": "<think>...</think><answer>...</answer>"} per line.
    #[arg(long)]
    rollouts: PathBuf,
    /// Ground-truth trajectory JSONL; steps are flattened in file order.
    #[arg(long)]
    truth: PathBuf,
    /// Output JSONL of per-rollout reward breakdowns.
    #[arg(long)]
    out: PathBuf,
    /// Directory holding the .nvdm depth maps referenced by the truth steps.
    #[arg(long)]
    depth_dir: Option<PathBuf>,
    #[command(flatten)]
    reward: RewardFlags,
}

#[derive(Args, Debug)]
struct AdvantagesArgs {
    /// JSONL of reward groups, one JSON array per line.
    #[arg(long)]
    rewards: PathBuf,
    /// Output JSONL of {"values": [...], "degenerate": bool} per group.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainToyArgs {
    /// Training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of policy updates.
    #[arg(long)]
    updates: Option<usize>,
    /// Rollout group size G.
    #[arg(long)]
    group_size: Option<usize>,
    /// Gradient step size.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Weight of the KL penalty against the initial policy.
    #[arg(long)]
    kl_coef: Option<f64>,
    /// Output CSV path for the learning curve.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    reward: RewardFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Trajectory JSONL to replay.
    #[arg(long)]
    trajectories: PathBuf,
    /// Output episode-report JSONL path.
    #[arg(long)]
    out: PathBuf,
    /// Replay every trajectory on this scene instead of regenerating each
    /// trajectory's scene from its recorded seed.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[command(flatten)]
    gen: GenFlags,
    /// Success threshold, meters of ground distance at stop.
    #[arg(long)]
    threshold: Option<f64>,
    /// Step budget per episode.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Fallback camera spec for trajectories that carry none.
    #[arg(long)]
    camera: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Episode-report JSONL files to merge (repeatable).
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    /// Optional path for the merged report.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = err.print();
                std::process::exit(0);
            }
            let text = err.to_string();
            eprintln!("error: {}", text.lines().next().unwrap_or("bad arguments"));
            std::process::exit(1);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Scene(args) => cmd_scene(args),
        Command::Collect(args) => cmd_collect(args, &file_cfg),
        Command::Score(args) => cmd_score(args, &file_cfg),
        Command::Advantages(args) => cmd_advantages(args),
        Command::TrainToy(args) => cmd_train_toy(args, &file_cfg),
        Command::Eval(args) => cmd_eval(args, &file_cfg),
        Command::Report(args) => cmd_report(args),
    }
}

// --- Shared helpers ----------------------------------------------------------

fn parse_camera(spec: &str) -> Result<CameraModel, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "camera spec must look like 640x480:320, got \"{spec}\""
        ))
    };
    let (dims, focal) = spec.split_once(':').ok_or_else(bad)?;
    let (w, h) = dims.split_once('x').ok_or_else(bad)?;
    let camera = CameraModel::new(
        w.parse().map_err(|_| bad())?,
        h.parse().map_err(|_| bad())?,
        focal.parse().map_err(|_| bad())?,
    )
    .map_err(|_| bad())?;
    Ok(camera)
}

/// Writes the effective configuration next to an artifact as
/// `<artifact>.meta.json`. Content is deterministic: no timestamps, stable
/// key order, so re-running a command yields byte-identical sidecars.
fn write_meta(out: &Path, command: &str, config: Value, inputs: &[&Path]) -> Result<(), CliError> {
    let meta = json!({
        "command": command,
        "inputs": inputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "config": config,
    });
    let path = PathBuf::from(format!("{}.meta.json", out.display()));
    fs::write(&path, format!("{meta}\n"))
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn load_scene_file(path: &Path) -> Result<Scene, CliError> {
    load_scene(path).map_err(|e| match e {
        SceneError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

fn read_trajectory_file(path: &Path) -> Result<Vec<Trajectory>, CliError> {
    read_trajectories(path).map_err(|e| match e {
        CollectError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })
}

// --- scene -------------------------------------------------------------------

fn cmd_scene(args: SceneArgs) -> Result<(), CliError> {
    let params = args.gen.resolve();
    let scene = generate_scene(args.seed, &params)
        .map_err(|e| CliError::Data(format!("generation failed: {e}")))?;
    save_scene(&scene, &args.out)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_meta(
        &args.out,
        "scene",
        json!({ "seed": args.seed, "params": params }),
        &[],
    )?;
    let goal = scene.goals.first().map(|g| g.label.as_str()).unwrap_or("none");
    println!(
        "scene seed {} ({}x{} cells, goal: {goal}) -> {}",
        args.seed,
        scene.grid.cols(),
        scene.grid.rows(),
        args.out.display()
    );
    Ok(())
}

// --- collect -----------------------------------------------------------------

fn cmd_collect(args: CollectArgs, file_cfg: &FileConfig) -> Result<(), CliError> {
    let camera = parse_camera(&args.camera)?;
    let scene = load_scene_file(&args.scene)?;
    let instruction = args.instruction.clone().unwrap_or_else(|| {
        let label = scene.goals.first().map(|g| g.label.as_str()).unwrap_or("goal");
        format!("Navigate to the {label}.")
    });

    let (provider, provider_meta) = match args.provider {
        ProviderArg::Template => (ThoughtProvider::Template, json!("template")),
        ProviderArg::Remote => {
            let endpoint = args
                .endpoint
                .clone()
                .or_else(|| file_cfg.endpoint.clone())
                .or_else(|| std::env::var(ENDPOINT_ENV).ok())
                .ok_or_else(|| {
                    CliError::Usage(format!(
                        "remote provider needs --endpoint, a config-file endpoint, or {ENDPOINT_ENV}"
                    ))
                })?;
            let timeout_s = args.timeout_s.or(file_cfg.timeout_s).unwrap_or(10);
            let remote = RemoteThoughts {
                endpoint: endpoint.clone(),
                timeout_s,
                template: PromptTemplate::Embodied,
            };
            (
                ThoughtProvider::Remote(remote),
                json!({ "remote": { "endpoint": endpoint, "timeout_s": timeout_s } }),
            )
        }
    };

    let opts = CollectOptions {
        view_loop_cap: args.view_loop_cap.unwrap_or(CollectOptions::default().view_loop_cap),
        thin_waypoints: !args.no_thin,
        render_depths: args.depth_dir.is_some(),
    };
    let output = collect_embodied(&scene, &camera, &instruction, &provider, &opts).map_err(
        |e| match e {
            CollectError::ProviderFailure(msg) => CliError::Io(format!("thought provider: {msg}")),
            CollectError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Data(other.to_string()),
        },
    )?;

    if let Some(dir) = &args.depth_dir {
        fs::create_dir_all(dir)?;
        for (step, map) in output.trajectory.steps.iter().zip(&output.depth_maps) {
            let name = step.depth_ref.as_deref().expect("collected steps carry depth refs");
            map.save(&dir.join(name))
                .map_err(|e| CliError::Io(format!("{}: {e}", dir.join(name).display())))?;
        }
    }

    write_trajectories(&args.out, std::slice::from_ref(&output.trajectory))
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_meta(
        &args.out,
        "collect",
        json!({
            "instruction": instruction,
            "camera": camera,
            "thin_waypoints": opts.thin_waypoints,
            "view_loop_cap": opts.view_loop_cap,
            "provider": provider_meta,
            "render_depths": opts.render_depths,
        }),
        &[&args.scene],
    )?;

    let moves = output
        .trajectory
        .steps
        .iter()
        .filter(|s| matches!(s.action, Action::MoveTo(_)))
        .count();
    println!(
        "collected {} steps ({moves} move-to) -> {}",
        output.trajectory.steps.len(),
        args.out.display()
    );
    Ok(())
}

// --- score -------------------------------------------------------------------

fn cmd_score(args: ScoreArgs, file_cfg: &FileConfig) -> Result<(), CliError> {
    let cfg = args.reward.resolve(file_cfg)?;
    let trajectories = read_trajectory_file(&args.truth)?;
    let steps: Vec<_> = trajectories.iter().flat_map(|t| t.steps.iter()).collect();

    let text = fs::read_to_string(&args.rollouts)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.rollouts.display())))?;
    let mut raws = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("{}:{}: {e}", args.rollouts.display(), lineno + 1))
        })?;
        let raw = value.get("raw").and_then(Value::as_str).ok_or_else(|| {
            CliError::Data(format!(
                "{}:{}: every rollout line needs a string \"raw\" field",
                args.rollouts.display(),
                lineno + 1
            ))
        })?;
        raws.push(raw.to_owned());
    }
    if raws.len() != steps.len() {
        return Err(CliError::Data(format!(
            "rollout/truth mismatch: {} rollouts vs {} ground-truth steps",
            raws.len(),
            steps.len()
        )));
    }

    let mut out = String::new();
    let mut mean_total = 0.0;
    for (index, (raw, step)) in raws.iter().zip(&steps).enumerate() {
        let depth = match (&args.depth_dir, &step.depth_ref) {
            (Some(dir), Some(name)) => Some(DepthMap::load(&dir.join(name)).map_err(|e| {
                CliError::Io(format!("{}: {e}", dir.join(name).display()))
            })?),
            _ => None,
        };
        let gt = StepGroundTruth {
            action: &step.action,
            gt_point: step.gt_point.or_else(|| step.action.point()),
            depth: depth.as_ref(),
        };
        let b = total_reward(raw, &gt, &cfg);
        mean_total += b.total;
        let line = json!({
            "index": index,
            "r_format": b.r_format,
            "r_type": b.r_type,
            "r_grounding": b.r_grounding,
            "total": b.total,
        });
        out.push_str(&serde_json::to_string(&line).expect("breakdown serializes"));
        out.push('\n');
    }
    fs::write(&args.out, out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_meta(
        &args.out,
        "score",
        json!({ "reward": cfg }),
        &[&args.rollouts, &args.truth],
    )?;

    mean_total /= raws.len().max(1) as f64;
    println!("scored {} rollouts, mean total {mean_total} -> {}", raws.len(), args.out.display());
    Ok(())
}

// --- advantages ----------------------------------------------------------------

fn cmd_advantages(args: AdvantagesArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.rewards)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.rewards.display())))?;
    let mut out = String::new();
    let mut groups = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rewards: Vec<f64> = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("{}:{}: {e}", args.rewards.display(), lineno + 1))
        })?;
        let adv = advantages(&rewards).map_err(|e| match e {
            GrpoError::GroupTooSmall(n) => CliError::Data(format!(
                "{}:{}: groups need at least 2 rewards, got {n}",
                args.rewards.display(),
                lineno + 1
            )),
            other => CliError::Data(other.to_string()),
        })?;
        let line = json!({ "values": adv.values, "degenerate": adv.degenerate });
        out.push_str(&serde_json::to_string(&line).expect("advantages serialize"));
        out.push('\n');
        groups += 1;
    }
    fs::write(&args.out, out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_meta(
        &args.out,
        "advantages",
        json!({ "epsilon": ADVANTAGE_EPSILON }),
        &[&args.rewards],
    )?;
    println!("standardized {groups} groups -> {}", args.out.display());
    Ok(())
}

// --- train-toy -------------------------------------------------------------------

fn cmd_train_toy(args: TrainToyArgs, file_cfg: &FileConfig) -> Result<(), CliError> {
    let reward_cfg = args.reward.resolve(file_cfg)?;
    let defaults = ToyTrainConfig::default();
    let train_cfg = ToyTrainConfig {
        updates: args.updates.or(file_cfg.updates).unwrap_or(defaults.updates),
        group_size: args.group_size.or(file_cfg.group_size).unwrap_or(defaults.group_size),
        learning_rate: args
            .learning_rate
            .or(file_cfg.learning_rate)
            .unwrap_or(defaults.learning_rate),
        kl_coef: args.kl_coef.or(file_cfg.kl_coef).unwrap_or(defaults.kl_coef),
        seed: args.seed.unwrap_or(defaults.seed),
    };
    if train_cfg.group_size < 2 {
        return Err(CliError::Usage("--group-size must be at least 2".into()));
    }
    if train_cfg.updates == 0 {
        return Err(CliError::Usage("--updates must be positive".into()));
    }

    let task = ToyTask::default();
    let curve = toy_train(&task, &reward_cfg, &train_cfg);
    fs::write(&args.out, curve.to_csv())
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_meta(
        &args.out,
        "train-toy",
        json!({ "reward": reward_cfg, "train": train_cfg, "task": task }),
        &[],
    )?;
    println!(
        "trained {} updates, final mean reward {} (max achievable {}) -> {}",
        train_cfg.updates,
        curve.final_mean_reward(),
        task.max_achievable(&reward_cfg),
        args.out.display()
    );
    Ok(())
}

// --- eval --------------------------------------------------------------------------

fn cmd_eval(args: EvalArgs, file_cfg: &FileConfig) -> Result<(), CliError> {
    let trajectories = read_trajectory_file(&args.trajectories)?;
    if trajectories.is_empty() {
        return Err(CliError::Data(format!("{}: no trajectories", args.trajectories.display())));
    }
    let fallback_camera = args.camera.as_deref().map(parse_camera).transpose()?;
    let shared_scene = args.scene.as_deref().map(load_scene_file).transpose()?;
    let params = args.gen.resolve();
    let defaults = EpisodeConfig::default();
    let cfg = EpisodeConfig {
        max_steps: args.max_steps.or(file_cfg.max_steps).unwrap_or(defaults.max_steps),
        success_threshold_m: args
            .threshold
            .or(file_cfg.success_threshold_m)
            .unwrap_or(defaults.success_threshold_m),
    };

    let mut results = Vec::new();
    for (i, trajectory) in trajectories.iter().enumerate() {
        let scene = match &shared_scene {
            Some(s) => s.clone(),
            None => {
                let seed = trajectory.scene_seed.ok_or_else(|| {
                    CliError::Data(format!(
                        "trajectory {} carries no scene seed; pass --scene",
                        i + 1
                    ))
                })?;
                generate_scene(seed, &params)
                    .map_err(|e| CliError::Data(format!("regenerating seed {seed}: {e}")))?
            }
        };
        let camera = trajectory.camera.or(fallback_camera).ok_or_else(|| {
            CliError::Data(format!("trajectory {} carries no camera; pass --camera", i + 1))
        })?;
        let mut policy = replay_policy(trajectory);
        let result = navigate_episode(&scene, &camera, &mut policy, &cfg)
            .map_err(|e| CliError::Data(format!("trajectory {}: {e}", i + 1)))?;
        results.push(result);
    }

    let report = report_to_jsonl(&results)
        .map_err(|e| CliError::Data(e.to_string()))?;
    fs::write(&args.out, report)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    let scene_meta = match &args.scene {
        Some(path) => json!(path.display().to_string()),
        None => json!({ "from_seeds": params }),
    };
    write_meta(
        &args.out,
        "eval",
        json!({
            "success_threshold_m": cfg.success_threshold_m,
            "max_steps": cfg.max_steps,
            "scene": scene_meta,
        }),
        &[&args.trajectories],
    )?;

    let sr = results.iter().filter(|r| r.success).count() as f64 / results.len() as f64;
    println!("evaluated {} episodes, sr {sr} -> {}", results.len(), args.out.display());
    Ok(())
}

// --- report ------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct ReportLine {
    success: bool,
    p: f64,
    l: f64,
    steps: usize,
}

fn cmd_report(args: ReportArgs) -> Result<(), CliError> {
    let mut results: Vec<EpisodeResult> = Vec::new();
    for path in &args.inputs {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(episode) = serde_json::from_str::<ReportLine>(line) {
                results.push(EpisodeResult {
                    success: episode.success,
                    path_length_m: episode.p,
                    shortest_length_m: episode.l,
                    steps_taken: episode.steps,
                });
                continue;
            }
            let value: Value = serde_json::from_str(line).map_err(|e| {
                CliError::Data(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
            if value.get("sr").is_none() {
                return Err(CliError::Data(format!(
                    "{}:{}: neither an episode line nor an aggregate",
                    path.display(),
                    lineno + 1
                )));
            }
            // Aggregate lines are recomputed from the episodes, not trusted.
        }
    }
    if results.is_empty() {
        return Err(CliError::Data("no episode lines found".into()));
    }

    let report = report_to_jsonl(&results).map_err(|e| CliError::Data(e.to_string()))?;
    let aggregate = report.lines().last().expect("report always ends with an aggregate");
    if let Some(out) = &args.out {
        fs::write(out, &report).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        write_meta(
            out,
            "report",
            json!({ "merged": args.inputs.len() }),
            &args.inputs.iter().map(|p| p.as_path()).collect::<Vec<_>>(),
        )?;
    }
    println!("{aggregate}");
    Ok(())
}
