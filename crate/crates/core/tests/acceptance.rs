//! Acceptance suite: one test per release criterion, each printing a single
//! `acceptance <name>: PASS/FAIL` line (visible with `--nocapture`). Every
//! numeric check is made against an oracle computed independently inside
//! this file, never against the library's own intermediate output.

use std::time::{Duration, Instant};

use navkit_core::actions::{parse_response, wrap_response, Action, ActionType};
use navkit_core::collect::{collect_embodied, CollectOptions, ThoughtProvider};
use navkit_core::eval::{
    navigate_episode, replay_policy, spl, success_rate, type_accuracy, EpisodeConfig,
    EpisodeResult,
};
use navkit_core::geometry::{
    project, unproject, CameraModel, PixelPoint, Pose, ProjectionResult, UnitRotation, Vec3,
};
use navkit_core::grpo::{advantages, signal_density, toy_train, DiskSampler, ToyTask, ToyTrainConfig};
use navkit_core::pathfind::shortest_path;
use navkit_core::reward::{total_reward, RewardConfig, RewardMode, StepGroundTruth};
use navkit_core::scene::{generate_scene, GenParams, Goal, OccupancyGrid, Scene, AGENT_HEIGHT_M};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Runs one criterion body, prints its pass/fail line, and re-raises any
/// failure so the cargo test harness still reports it.
fn criterion<F>(name: &str, budget: Option<Duration>, body: F)
where
    F: FnOnce() + std::panic::UnwindSafe,
{
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(body);
    let elapsed = start.elapsed();
    match outcome {
        Ok(()) => {
            if let Some(limit) = budget {
                if elapsed >= limit {
                    println!(
                        "acceptance {name}: FAIL (took {elapsed:?}, budget {limit:?})"
                    );
                    panic!("{name} exceeded its runtime budget: {elapsed:?} >= {limit:?}");
                }
            }
            println!("acceptance {name}: PASS ({elapsed:.2?})");
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| (*s).to_owned())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_owned());
            println!("acceptance {name}: FAIL ({msg})");
            std::panic::resume_unwind(payload);
        }
    }
}

// --- 1. Geometry ------------------------------------------------------------

/// Independent rotation oracle: Rodrigues' formula in plain 3x3 matrices.
struct Mat3([[f64; 3]; 3]);

impl Mat3 {
    fn from_axis_angle(axis: Vec3, angle_rad: f64) -> Mat3 {
        let n = 1.0 / (axis.x * axis.x + axis.y * axis.y + axis.z * axis.z).sqrt();
        let (x, y, z) = (axis.x * n, axis.y * n, axis.z * n);
        let (s, c) = angle_rad.sin_cos();
        let t = 1.0 - c;
        Mat3([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }

    fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }
}

#[test]
fn criterion_geometry() {
    criterion("geometry", Some(Duration::from_secs(5)), || {
        let cam = CameraModel { width: 640, height: 480, focal: 320.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);

        for i in 0..10_000 {
            let p = Vec3::new(
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
                rng.random_range(0.05..60.0),
            );
            let (pixel, depth) = match project(p, &cam) {
                ProjectionResult::InView(px, d) | ProjectionResult::OutOfView(px, d) => (px, d),
                ProjectionResult::Behind => panic!("case {i}: in-front point projected Behind"),
            };
            let back = unproject(pixel, depth, &cam).expect("depth is positive");
            let rel = (back - p).norm() / p.norm();
            assert!(rel < 1e-9, "case {i}: relative round-trip error {rel}");
        }

        for i in 0..1_000 {
            let axis = Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if axis.norm() < 1e-3 {
                continue;
            }
            let angle = rng.random_range(-std::f64::consts::TAU..std::f64::consts::TAU);
            let v = Vec3::new(
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            );
            let q = UnitRotation::from_axis_angle(axis, angle).rotate(v);
            let m = Mat3::from_axis_angle(axis, angle).apply(v);
            assert!((q - m).norm() < 1e-9, "case {i}: quaternion/matrix mismatch");
        }
    });
}

// --- 2. Pathfinding ----------------------------------------------------------

/// Independent Dijkstra oracle over the same movement model: integer
/// (straight, diagonal) hop counts, 8-connected, no corner cutting.
fn dijkstra_cost_m(grid: &OccupancyGrid, start: (usize, usize), goal: (usize, usize)) -> Option<f64> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Entry {
        key: f64,
        steps: (u64, u64),
        cell: (usize, usize),
    }
    impl Eq for Entry {}
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            other.key.total_cmp(&self.key) // min-heap
        }
    }
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let key_of = |s: u64, d: u64| s as f64 + std::f64::consts::SQRT_2 * d as f64;
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut best: Vec<Option<f64>> = vec![None; rows * cols];
    let mut heap = BinaryHeap::new();
    heap.push(Entry { key: 0.0, steps: (0, 0), cell: start });
    best[start.0 * cols + start.1] = Some(0.0);

    while let Some(Entry { key, steps, cell }) = heap.pop() {
        if cell == goal {
            return Some((steps.0 as f64 + std::f64::consts::SQRT_2 * steps.1 as f64 + 0.0)
                * grid.cell_size());
        }
        if best[cell.0 * cols + cell.1].is_some_and(|b| key > b) {
            continue;
        }
        for dr in -1i64..=1 {
            for dc in -1i64..=1 {
                if dr == 0 && dc == 0 {
                    continue;
                }
                let (nr, nc) = (cell.0 as i64 + dr, cell.1 as i64 + dc);
                if nr < 0 || nc < 0 || nr as usize >= rows || nc as usize >= cols {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if grid.is_blocked(nr, nc) {
                    continue;
                }
                let diagonal = dr != 0 && dc != 0;
                if diagonal
                    && (grid.is_blocked(cell.0, nc) || grid.is_blocked(nr, cell.1))
                {
                    continue;
                }
                let next = (steps.0 + u64::from(!diagonal), steps.1 + u64::from(diagonal));
                let nkey = key_of(next.0, next.1);
                let slot = &mut best[nr * cols + nc];
                if slot.is_none_or(|b| nkey < b) {
                    *slot = Some(nkey);
                    heap.push(Entry { key: nkey, steps: next, cell: (nr, nc) });
                }
            }
        }
    }
    None
}

#[test]
fn criterion_pathfinding() {
    criterion("pathfinding", Some(Duration::from_secs(10)), || {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let mut solved = 0usize;
        let mut attempts = 0usize;
        while solved < 200 {
            attempts += 1;
            assert!(attempts < 3000, "could not find 200 connected grids");
            let cols = rng.random_range(8..=40);
            let rows = rng.random_range(8..=40);
            let cell_size = rng.random_range(0.2..1.2);
            let density = rng.random_range(0.0..0.35);
            let blocked: Vec<bool> =
                (0..cols * rows).map(|_| rng.random::<f64>() < density).collect();
            let grid = OccupancyGrid::new(cols, rows, cell_size, 2.5, blocked).unwrap();

            let free: Vec<(usize, usize)> = (1..rows - 1)
                .flat_map(|r| (1..cols - 1).map(move |c| (r, c)))
                .filter(|&(r, c)| !grid.is_blocked(r, c))
                .collect();
            if free.len() < 2 {
                continue;
            }
            let start = free[rng.random_range(0..free.len())];
            let goal = free[rng.random_range(0..free.len())];
            if start == goal {
                continue;
            }
            let Some(oracle_m) = dijkstra_cost_m(&grid, start, goal) else { continue };

            let start_pos = grid.cell_center(start.0, start.1);
            let goal_pos = grid.cell_center(goal.0, goal.1);
            let scene = Scene {
                spawn: Pose::level(
                    Vec3::new(start_pos.x, -AGENT_HEIGHT_M, start_pos.z),
                    0.0,
                ),
                goals: vec![Goal { label: "table".into(), position: goal_pos }],
                grid,
                seed: attempts as u64,
            };
            let wp = shortest_path(&scene, start_pos, goal_pos).expect("oracle says reachable");
            assert_eq!(
                wp.total_cost_m.to_bits(),
                oracle_m.to_bits(),
                "grid {attempts}: a-star {} != dijkstra {}",
                wp.total_cost_m,
                oracle_m
            );
            solved += 1;
        }
    });
}

// --- 3. Trajectory collection -------------------------------------------------

/// An L-shaped single-width corridor whose collection sequence was traced by
/// hand from the published conventions (yaw +90 = left about the up axis
/// (0,-1,0); pixel = (W/2 + f*x/z, H/2 + f*y/z); look-down = -30 deg pitch;
/// move-to teleports onto the waypoint and re-levels the pitch).
fn l_fixture() -> Scene {
    let mut blocked = vec![true; 12 * 12];
    for c in 2..=8 {
        blocked[6 * 12 + c] = false; // horizontal leg, row 6
    }
    for r in 2..=6 {
        blocked[r * 12 + 8] = false; // vertical leg, col 8
    }
    let grid = OccupancyGrid::new(12, 12, 0.5, 2.5, blocked).unwrap();
    Scene {
        spawn: Pose::level(Vec3::new(1.25, -AGENT_HEIGHT_M, 3.25), -150.0),
        goals: vec![Goal { label: "lamp".into(), position: Vec3::new(4.25, 0.0, 1.25) }],
        grid,
        seed: 424242,
    }
}

#[test]
fn criterion_collection() {
    criterion("collection", None, || {
        let cam = CameraModel { width: 640, height: 480, focal: 320.0 };
        let (w, h) = (f64::from(cam.width), f64::from(cam.height));
        for seed in 0..100u64 {
            let scene = generate_scene(seed, &GenParams::default()).expect("scene generates");
            let out = collect_embodied(
                &scene,
                &cam,
                "Walk to the goal.",
                &ThoughtProvider::Template,
                &CollectOptions::default(),
            )
            .unwrap_or_else(|e| panic!("seed {seed}: collection failed: {e}"));
            let steps = &out.trajectory.steps;
            assert_eq!(steps.last().map(|s| &s.action), Some(&Action::Stop), "seed {seed}");
            for step in steps {
                if let Action::MoveTo(p) = &step.action {
                    assert!(
                        (0.0..=w).contains(&p.x) && (0.0..=h).contains(&p.y),
                        "seed {seed}: move-to pixel {p:?} outside [0,{w}]x[0,{h}]"
                    );
                }
            }
            // Ends in stop at the goal waypoint: replaying the trajectory
            // must reach the goal along the shortest path exactly.
            let mut policy = replay_policy(&out.trajectory);
            let result =
                navigate_episode(&scene, &cam, &mut policy, &EpisodeConfig::default()).unwrap();
            assert!(result.success, "seed {seed}: replay did not end at the goal");
            assert_eq!(result.path_length_m.to_bits(), result.shortest_length_m.to_bits());
        }

        // Fixed L-path fixture against the hand-traced sequence.
        let scene = l_fixture();
        let cam = CameraModel { width: 160, height: 120, focal: 80.0 };
        let out = collect_embodied(
            &scene,
            &cam,
            "Find the lamp.",
            &ThoughtProvider::Template,
            &CollectOptions::default(),
        )
        .expect("fixture collects");
        let got: Vec<ActionType> =
            out.trajectory.steps.iter().map(|s| s.action.action_type()).collect();
        let expected = [
            ActionType::TurnLeft,
            ActionType::MoveTo,
            ActionType::TurnAround,
            ActionType::TurnLeft,
            ActionType::LookDown,
            ActionType::MoveTo,
            ActionType::Stop,
        ];
        assert_eq!(got, expected, "hand-traced action sequence diverged");

        let s3 = 3.0f64.sqrt();
        let hand_pixels = [
            PixelPoint::new(80.0 + 80.0 / s3, 60.0 + 80.0 / s3),
            PixelPoint::new(80.0 + 320.0 / 9.0, 60.0 + 80.0 * s3 / 9.0),
        ];
        let got_pixels: Vec<PixelPoint> = out
            .trajectory
            .steps
            .iter()
            .filter_map(|s| match s.action {
                Action::MoveTo(p) => Some(p),
                _ => None,
            })
            .collect();
        for (i, (g, e)) in got_pixels.iter().zip(&hand_pixels).enumerate() {
            assert!(
                (g.x - e.x).abs() < 1e-9 && (g.y - e.y).abs() < 1e-9,
                "move-to {i}: got {g:?}, hand trace says {e:?}"
            );
        }
    });
}

// --- 4. Reward constants -------------------------------------------------------

#[test]
fn criterion_reward_table() {
    criterion("reward-table", None, || {
        let dense = RewardConfig::default();
        assert_eq!(
            (dense.lambda_format, dense.lambda_type, dense.lambda_grounding, dense.theta_d),
            (0.1, 1.0, 1.0, 200.0)
        );
        let sparse = RewardConfig::sparse();

        let gt_click = Action::Click(PixelPoint::new(500.0, 500.0));
        let gt = StepGroundTruth::from_action(&gt_click);
        let gt_stop_action = Action::Stop;
        let gt_stop = StepGroundTruth::from_action(&gt_stop_action);
        let wrap1 = |a: &Action| wrap_response("t", std::slice::from_ref(a));

        // (raw, ground truth, config, expected total) — totals derived by hand
        // from total = 0.1*format + 1*type + 1*grounding.
        let click_at = |x: f64, y: f64| Action::Click(PixelPoint::new(x, y));
        let golden: Vec<(String, &StepGroundTruth, &RewardConfig, f64)> = vec![
            // Perfect grounded step: 0.1 + 1 + (1 - 0/200) = 2.1.
            (wrap1(&click_at(500.0, 500.0)), &gt, &dense, 2.1),
            // Unparseable output zeroes every component.
            ("no tags at all".into(), &gt, &dense, 0.0),
            ("<think>t</think><answer>[]</answer>".into(), &gt, &dense, 0.0),
            // d = 100 exactly (60-80 right triangle): 0.1 + 1 + 0.5 = 1.6.
            (wrap1(&click_at(560.0, 580.0)), &gt, &dense, 1.6),
            // d = 150: 0.1 + 1 + 0.25 = 1.35.
            (wrap1(&click_at(590.0, 620.0)), &gt, &dense, 1.35),
            // d = theta_d is outside the open gate: 0.1 + 1 + 0 = 1.1.
            (wrap1(&click_at(620.0, 660.0)), &gt, &dense, 1.1),
            // Wrong type, same pixel: 0.1 + 0 + 1 = 1.1.
            (wrap1(&Action::LongPress(PixelPoint::new(500.0, 500.0))), &gt, &dense, 1.1),
            // Right family but no point produced: 0.1 + 0 + 0 = 0.1.
            (wrap1(&Action::Stop), &gt, &dense, 0.1),
            // Point-free ground truth scores grounding = type: stop/stop = 2.1.
            (wrap1(&Action::Stop), &gt_stop, &dense, 2.1),
            (wrap1(&Action::TurnLeft), &gt_stop, &dense, 0.1),
            // Sparse: d = 13 < 20 hits, d = 20 misses (strict inequality).
            (wrap1(&click_at(505.0, 512.0)), &gt, &sparse, 2.1),
            (wrap1(&click_at(512.0, 516.0)), &gt, &sparse, 1.1),
        ];
        for (i, (raw, gt, cfg, want)) in golden.iter().enumerate() {
            let got = total_reward(raw, gt, cfg).total;
            assert!(
                (got - want).abs() < 1e-12,
                "golden row {i}: got {got}, want {want} (raw: {raw})"
            );
        }
    });
}

// --- 5. Advantages ---------------------------------------------------------------

#[test]
fn criterion_advantages() {
    criterion("advantages", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for case in 0..1_000 {
            let n = rng.random_range(2..=16);
            let quantize = rng.random::<f64>() < 0.3;
            let rewards: Vec<f64> = (0..n)
                .map(|_| {
                    let r: f64 = rng.random_range(-5.0..5.0);
                    if quantize { (r * 2.0).round() / 2.0 } else { r }
                })
                .collect();

            // Independent mean / population-std oracle.
            let mean = rewards.iter().sum::<f64>() / n as f64;
            let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
            let got = advantages(&rewards).unwrap();
            if var == 0.0 {
                assert!(got.degenerate && got.values.iter().all(|&v| v == 0.0), "case {case}");
                continue;
            }
            let std = var.sqrt();
            for (i, (&g, &r)) in got.values.iter().zip(&rewards).enumerate() {
                let oracle = (r - mean) / (std + 1e-6);
                assert!(
                    (g - oracle).abs() < 1e-9,
                    "case {case} value {i}: got {g}, oracle {oracle}"
                );
            }
        }

        let degenerate = advantages(&[0.7; 5]).unwrap();
        assert!(degenerate.degenerate);
        assert_eq!(degenerate.values, vec![0.0; 5]);

        let fixture = advantages(&[1.0, 0.0, 0.5, 0.5, 0.5]).unwrap();
        let want = [1.5811, -1.5811, 0.0, 0.0, 0.0];
        for (got, want) in fixture.values.iter().zip(&want) {
            assert!((got - want).abs() < 1e-3, "fixture: got {got}, want {want}");
        }
    });
}

// --- 6. Signal density -------------------------------------------------------------

#[test]
fn criterion_signal_density() {
    criterion("signal-density", Some(Duration::from_secs(30)), || {
        let sampler = DiskSampler { radius: 200.0 };
        let trials = 100_000;

        // Sparse: P(hit) = (20/200)^2 = 0.01, so the analytic informative
        // fraction is 1 - 0.99^5 - 0.01^5 ~ 4.90%.
        let sparse = RewardConfig {
            mode: RewardMode::Sparse { theta_hat_d: 20.0 },
            ..RewardConfig::default()
        };
        let got_sparse = signal_density(&sparse, &sampler, 5, trials, 66).unwrap();
        let analytic = 1.0 - 0.99f64.powi(5) - 0.01f64.powi(5);
        assert!(
            (got_sparse - analytic).abs() <= 0.01,
            "sparse informative fraction {got_sparse}, analytic {analytic}"
        );

        let dense = RewardConfig::default();
        let got_dense = signal_density(&dense, &sampler, 5, trials, 66).unwrap();
        assert!(got_dense >= 0.999, "dense informative fraction {got_dense}");
    });
}

// --- 7. Toy training -----------------------------------------------------------------

#[test]
fn criterion_toy_training() {
    criterion("toy-training", Some(Duration::from_secs(120)), || {
        let task = ToyTask::default();
        let dense_cfg = RewardConfig::default();
        let sparse_cfg = RewardConfig::sparse();

        let mut dense_wins = 0usize;
        for seed in 0..20u64 {
            let train = ToyTrainConfig { seed, ..ToyTrainConfig::default() };
            let dense = toy_train(&task, &dense_cfg, &train).final_mean_reward();
            let sparse = toy_train(&task, &sparse_cfg, &train).final_mean_reward();
            if dense > sparse {
                dense_wins += 1;
            }
        }
        assert!(dense_wins >= 18, "dense beat sparse in only {dense_wins}/20 paired runs");

        let max = task.max_achievable(&dense_cfg);
        let final_reward =
            toy_train(&task, &dense_cfg, &ToyTrainConfig::default()).final_mean_reward();
        assert!(
            final_reward >= 0.8 * max,
            "dense default run reached {final_reward}, needs 0.8 * {max}"
        );
    });
}

// --- 8. Metrics -----------------------------------------------------------------------

#[test]
fn criterion_metrics() {
    criterion("metrics", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for _ in 0..200 {
            let n = rng.random_range(1..=40);
            let results: Vec<EpisodeResult> = (0..n)
                .map(|_| {
                    let shortest = rng.random_range(0.5..30.0);
                    EpisodeResult {
                        success: rng.random::<f64>() < 0.5,
                        path_length_m: shortest * rng.random_range(1.0..3.0),
                        shortest_length_m: shortest,
                        steps_taken: rng.random_range(1..100),
                    }
                })
                .collect();
            let sr = success_rate(&results).unwrap();
            let spl = spl(&results).unwrap();
            assert!(spl <= sr + 1e-12, "spl {spl} > sr {sr}");
        }

        // Replay oracle on 50 freshly collected trajectories.
        let cam = CameraModel { width: 640, height: 480, focal: 320.0 };
        let cfg = EpisodeConfig::default();
        assert_eq!(cfg.success_threshold_m, 0.3);
        let mut results = Vec::new();
        for seed in 200..250u64 {
            let scene = generate_scene(seed, &GenParams::default()).unwrap();
            let out = collect_embodied(
                &scene,
                &cam,
                "Walk to the goal.",
                &ThoughtProvider::Template,
                &CollectOptions::default(),
            )
            .unwrap();
            let mut policy = replay_policy(&out.trajectory);
            results.push(navigate_episode(&scene, &cam, &mut policy, &cfg).unwrap());
        }
        assert_eq!(results.len(), 50);
        assert_eq!(success_rate(&results).unwrap(), 1.0);
        assert_eq!(spl(&results).unwrap(), 1.0);

        // A constant-Click predictor is right exactly on the clicks.
        let gts = [
            ActionType::Click,
            ActionType::Scroll,
            ActionType::Click,
            ActionType::InputText,
            ActionType::NavigateBack,
            ActionType::Click,
            ActionType::LongPress,
            ActionType::Scroll,
            ActionType::Click,
            ActionType::NavigateHome,
        ];
        let preds = vec![ActionType::Click; gts.len()];
        let click_fraction =
            gts.iter().filter(|t| **t == ActionType::Click).count() as f64 / gts.len() as f64;
        assert_eq!(type_accuracy(&preds, &gts).unwrap(), click_fraction);
        assert_eq!(click_fraction, 0.4);
    });
}

// --- 9. Parser ---------------------------------------------------------------------------

fn random_action(rng: &mut ChaCha8Rng) -> Action {
    let point = |rng: &mut ChaCha8Rng| {
        PixelPoint::new(
            (rng.random_range(0.0..2000.0f64) * 8.0).round() / 8.0,
            (rng.random_range(0.0..2000.0f64) * 8.0).round() / 8.0,
        )
    };
    match rng.random_range(0..12) {
        0 => Action::Click(point(rng)),
        1 => Action::LongPress(point(rng)),
        2 => Action::MoveTo(point(rng)),
        3 => Action::InputText {
            text: format!("note {} with \"quotes\"", rng.random_range(0..100)),
            point: point(rng),
        },
        4 => Action::Scroll { start: point(rng), end: point(rng) },
        5 => Action::NavigateHome,
        6 => Action::NavigateBack,
        7 => Action::TurnLeft,
        8 => Action::TurnRight,
        9 => Action::TurnAround,
        10 => Action::LookDown,
        _ => Action::Stop,
    }
}

#[test]
fn criterion_parser() {
    criterion("parser", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for case in 0..1_000 {
            let actions: Vec<Action> =
                (0..rng.random_range(1..=3)).map(|_| random_action(&mut rng)).collect();
            let raw = wrap_response("planning the next move", &actions);
            let parsed = parse_response(&raw)
                .unwrap_or_else(|e| panic!("case {case}: canonical form rejected: {e}"));
            assert_eq!(parsed.actions, actions, "case {case}");
        }

        // Published literal examples.
        let click = parse_response(
            "<think>The submit button is at the bottom.</think>\
             <answer>[{\"action\": \"click\", \"point\": [378, 871]}]</answer>",
        )
        .unwrap();
        assert_eq!(click.actions, vec![Action::Click(PixelPoint::new(378.0, 871.0))]);
        let moveto = parse_response(
            "<think>The hallway continues ahead.</think>\
             <answer>[{\"action\": \"moveto\", \"point\": [123, 300]}]</answer>",
        )
        .unwrap();
        assert_eq!(moveto.actions, vec![Action::MoveTo(PixelPoint::new(123.0, 300.0))]);

        // 500 mutations, each guaranteed to break the grammar or the schema.
        let mut false_accepts = Vec::new();
        for case in 0..500 {
            let action = random_action(&mut rng);
            let raw = wrap_response("r", std::slice::from_ref(&action));
            let (mutated, label): (String, &str) = match case % 10 {
                0 => (raw.replacen("<think>", "", 1), "missing open think tag"),
                1 => (raw.replacen("</think>", "", 1), "missing close think tag"),
                2 => (raw.replacen("<answer>", "", 1), "missing open answer tag"),
                3 => (raw.replacen("</answer>", "", 1), "missing close answer tag"),
                4 => {
                    let at = raw.find("<answer>").unwrap();
                    (format!("{}{}", &raw[at..], &raw[..at]), "answer block first")
                }
                5 => (format!("{raw}{}", &raw[raw.find("<answer>").unwrap()..]),
                      "duplicate answer block"),
                6 => (raw.replacen("\"action\"", "\"verb\"", 1), "wrong key name"),
                7 => (raw.replacen("[{", "[{]", 1), "corrupt json"),
                8 => (format!("{raw} extra"), "trailing garbage"),
                _ => (format!("lead-in {raw}"), "leading garbage"),
            };
            if parse_response(&mutated).is_ok() {
                false_accepts.push(format!("case {case} ({label}): {mutated}"));
            }
        }
        assert!(
            false_accepts.is_empty(),
            "parser accepted {} mutated responses:\n{}",
            false_accepts.len(),
            false_accepts.join("\n")
        );
    });
}
