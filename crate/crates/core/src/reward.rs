//! The distance-aware step reward: a format gate, an action-type match,
//! and a pixel-grounding component that decays linearly with distance and
//! is gated by depth disparity, combined as
//! `total = l1*r_format + l2*r_type + l3*r_grounding`.
//!
//! Defaults follow the training setup: weights (0.1, 1, 1), dense distance
//! threshold 200 px, depth gate 0.5 m; the sparse ablation variant pays a
//! flat 1 inside a 20 px radius and nothing outside.

use serde::{Deserialize, Serialize};

use crate::actions::{parse_response, Action, ActionType};
use crate::geometry::PixelPoint;
use crate::scene::DepthMap;

/// Dense rewards decay linearly out to `theta_d`; sparse rewards are the
/// 0/1 indicator of being within `theta_hat_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RewardMode {
    Dense,
    Sparse { theta_hat_d: f64 },
}

impl RewardMode {
    /// The sparse setting used by the reward-ablation experiments.
    pub fn sparse_default() -> Self {
        RewardMode::Sparse { theta_hat_d: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub lambda_format: f64,
    pub lambda_type: f64,
    pub lambda_grounding: f64,
    /// Dense decay radius, pixels.
    pub theta_d: f64,
    /// Depth-disparity gate, meters.
    pub theta_h: f64,
    pub mode: RewardMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            lambda_format: 0.1,
            lambda_type: 1.0,
            lambda_grounding: 1.0,
            theta_d: 200.0,
            theta_h: 0.5,
            mode: RewardMode::Dense,
        }
    }
}

impl RewardConfig {
    pub fn sparse() -> Self {
        RewardConfig { mode: RewardMode::sparse_default(), ..RewardConfig::default() }
    }
}

/// Ground truth for one scored step: the reference action, its pixel target
/// when it has one, and the rendered depth for occlusion gating (embodied
/// steps only; GUI steps carry no depth and skip the gate).
#[derive(Debug, Clone, Copy)]
pub struct StepGroundTruth<'a> {
    pub action: &'a Action,
    pub gt_point: Option<PixelPoint>,
    pub depth: Option<&'a DepthMap>,
}

impl<'a> StepGroundTruth<'a> {
    /// Ground truth derived from the action itself (the usual case: the
    /// dataset action carries its own target point).
    pub fn from_action(action: &'a Action) -> Self {
        StepGroundTruth { action, gt_point: action.point(), depth: None }
    }

    pub fn with_depth(mut self, depth: &'a DepthMap) -> Self {
        self.depth = Some(depth);
        self
    }
}

/// Per-component reward values; `total` is their weighted combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_format: f64,
    pub r_type: f64,
    pub r_grounding: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub const ZERO: RewardBreakdown =
        RewardBreakdown { r_format: 0.0, r_type: 0.0, r_grounding: 0.0, total: 0.0 };
}

/// 1 if the raw text parses under the strict response grammar, else 0.
pub fn format_reward(raw: &str) -> f64 {
    if parse_response(raw).is_ok() {
        1.0
    } else {
        0.0
    }
}

/// Indicator that the predicted action type matches the ground truth.
pub fn type_reward(pred: ActionType, gt: ActionType) -> f64 {
    if pred == gt {
        1.0
    } else {
        0.0
    }
}

/// Core grounding formula on a precomputed pixel distance `d` and depth
/// disparity `p_gap`. Dense: `1 - d/theta_d` when `d < theta_d` and
/// `p_gap < theta_h`, else 0. Sparse: 1 under the same gates with the
/// sparse radius, else 0.
pub fn grounding_from_distance(d: f64, p_gap: f64, cfg: &RewardConfig) -> f64 {
    if p_gap >= cfg.theta_h {
        return 0.0;
    }
    match cfg.mode {
        RewardMode::Dense => {
            if d < cfg.theta_d {
                1.0 - d / cfg.theta_d
            } else {
                0.0
            }
        }
        RewardMode::Sparse { theta_hat_d } => {
            if d < theta_hat_d {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Grounding reward for a predicted pixel against a pointed ground truth.
/// Depth disparity is sampled from the step's depth map when present; a
/// prediction landing outside the rendered image (or on a sky pixel) reads
/// as infinite disparity and earns 0.
pub fn grounding_reward(pred: PixelPoint, gt: &StepGroundTruth, cfg: &RewardConfig) -> f64 {
    let Some(gt_point) = gt.gt_point else {
        return 0.0;
    };
    let d = pred.dist(&gt_point);
    let p_gap = match gt.depth {
        None => 0.0,
        Some(map) => match (map.sample(pred), map.sample(gt_point)) {
            (Some(a), Some(b)) if a.is_finite() && b.is_finite() => (a - b).abs(),
            _ => f64::INFINITY,
        },
    };
    grounding_from_distance(d, p_gap, cfg)
}

/// Scores one raw response against one step of ground truth.
///
/// Parse failure zeroes every component. Otherwise the first action in the
/// answer array is scored: type by equality, grounding by pixel distance
/// when the ground truth carries a point. Point-free ground truths (turns,
/// stop, home/back) reuse the type reward as the grounding reward so every
/// step spans the same total range.
pub fn total_reward(raw: &str, gt: &StepGroundTruth, cfg: &RewardConfig) -> RewardBreakdown {
    let Ok(response) = parse_response(raw) else {
        return RewardBreakdown::ZERO;
    };
    let pred = response.primary_action();
    let r_format = 1.0;
    let r_type = type_reward(pred.action_type(), gt.action.action_type());
    let r_grounding = if gt.gt_point.is_some() {
        match pred.point() {
            Some(p) => grounding_reward(p, gt, cfg),
            None => 0.0,
        }
    } else {
        r_type
    };
    let total = cfg.lambda_format * r_format
        + cfg.lambda_type * r_type
        + cfg.lambda_grounding * r_grounding;
    RewardBreakdown { r_format, r_type, r_grounding, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::wrap_response;

    fn wrap(action: &Action) -> String {
        wrap_response("t", std::slice::from_ref(action))
    }

    #[test]
    fn format_reward_is_the_parse_verdict() {
        assert_eq!(format_reward(&wrap(&Action::Stop)), 1.0);
        assert_eq!(format_reward("<think>only</think>"), 0.0);
        assert_eq!(format_reward("<think>t</think><answer>not json</answer>"), 0.0);
    }

    #[test]
    fn type_reward_is_an_indicator() {
        assert_eq!(type_reward(ActionType::Click, ActionType::Click), 1.0);
        assert_eq!(type_reward(ActionType::Click, ActionType::Scroll), 0.0);
        assert_eq!(type_reward(ActionType::MoveTo, ActionType::Stop), 0.0);
    }

    #[test]
    fn grounding_hand_values() {
        let cfg = RewardConfig::default();
        assert_eq!(grounding_from_distance(0.0, 0.0, &cfg), 1.0);
        assert_eq!(grounding_from_distance(100.0, 0.0, &cfg), 0.5);
        assert_eq!(grounding_from_distance(200.0, 0.0, &cfg), 0.0);
        assert_eq!(grounding_from_distance(10.0, 0.8, &cfg), 0.0, "depth gate");
    }

    #[test]
    fn sparse_grounding_is_flat_inside_its_radius() {
        let cfg = RewardConfig::sparse();
        assert_eq!(grounding_from_distance(0.0, 0.0, &cfg), 1.0);
        assert_eq!(grounding_from_distance(19.999, 0.0, &cfg), 1.0);
        assert_eq!(grounding_from_distance(20.0, 0.0, &cfg), 0.0);
        assert_eq!(grounding_from_distance(5.0, 0.8, &cfg), 0.0, "depth gate");
    }

    #[test]
    fn perfect_grounded_step_totals_2_1() {
        let gt_action = Action::MoveTo(PixelPoint::new(123.0, 300.0));
        let gt = StepGroundTruth::from_action(&gt_action);
        let cfg = RewardConfig::default();
        let b = total_reward(&wrap(&gt_action), &gt, &cfg);
        assert_eq!(b, RewardBreakdown { r_format: 1.0, r_type: 1.0, r_grounding: 1.0, total: 2.1 });
    }

    #[test]
    fn correct_stop_totals_2_1_via_the_point_free_rule() {
        let gt = StepGroundTruth::from_action(&Action::Stop);
        let b = total_reward(&wrap(&Action::Stop), &gt, &RewardConfig::default());
        assert_eq!(b.r_grounding, 1.0);
        assert_eq!(b.total, 2.1);
    }

    #[test]
    fn unparseable_text_zeroes_everything() {
        let gt = StepGroundTruth::from_action(&Action::Stop);
        let b = total_reward("garbage", &gt, &RewardConfig::default());
        assert_eq!(b, RewardBreakdown::ZERO);
    }

    #[test]
    fn wrong_type_with_exact_point_still_earns_grounding() {
        let gt_action = Action::MoveTo(PixelPoint::new(50.0, 60.0));
        let gt = StepGroundTruth::from_action(&gt_action);
        let pred = Action::Click(PixelPoint::new(50.0, 60.0));
        let b = total_reward(&wrap(&pred), &gt, &RewardConfig::default());
        assert_eq!(b.r_type, 0.0);
        assert_eq!(b.r_grounding, 1.0);
        assert!((b.total - 1.1).abs() < 1e-12);
    }

    #[test]
    fn pointless_prediction_against_pointed_truth_gets_no_grounding() {
        let gt_action = Action::MoveTo(PixelPoint::new(50.0, 60.0));
        let gt = StepGroundTruth::from_action(&gt_action);
        let b = total_reward(&wrap(&Action::Stop), &gt, &RewardConfig::default());
        assert_eq!(b.r_grounding, 0.0);
        assert_eq!(b.total, 0.1);
    }

    #[test]
    fn scroll_grounds_on_its_start_point() {
        let gt_action = Action::Scroll {
            start: PixelPoint::new(100.0, 200.0),
            end: PixelPoint::new(100.0, 800.0),
        };
        let gt = StepGroundTruth::from_action(&gt_action);
        assert_eq!(gt.gt_point, Some(PixelPoint::new(100.0, 200.0)));
        let pred = Action::Scroll {
            start: PixelPoint::new(100.0, 200.0),
            end: PixelPoint::new(500.0, 500.0), // end point does not matter
        };
        let b = total_reward(&wrap(&pred), &gt, &RewardConfig::default());
        assert_eq!(b.r_grounding, 1.0);
    }

    #[test]
    fn grounding_is_translation_invariant_without_depth() {
        let cfg = RewardConfig::default();
        let base_action = Action::Click(PixelPoint::new(40.0, 50.0));
        let base = StepGroundTruth::from_action(&base_action);
        let a = grounding_reward(PixelPoint::new(70.0, 90.0), &base, &cfg);
        let shifted_action = Action::Click(PixelPoint::new(140.0, 250.0));
        let shifted = StepGroundTruth::from_action(&shifted_action);
        let b = grounding_reward(PixelPoint::new(170.0, 290.0), &shifted, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn depth_gate_uses_sampled_disparity() {
        // 2x1 map: gt pixel sits over depth 1.0, pred over depth 2.0.
        let map_far = depth_map_2x1(1.0, 2.0);
        let gt_action = Action::MoveTo(PixelPoint::new(0.5, 0.5));
        let gt = StepGroundTruth::from_action(&gt_action).with_depth(&map_far);
        let cfg = RewardConfig::default();
        // Disparity 1.0 >= theta_h 0.5: gated to zero despite tiny distance.
        assert_eq!(grounding_reward(PixelPoint::new(1.5, 0.5), &gt, &cfg), 0.0);
        // Same pixel on a map with matching depths passes the gate.
        let map_near = depth_map_2x1(1.0, 1.2);
        let gt = StepGroundTruth::from_action(&gt_action).with_depth(&map_near);
        let r = grounding_reward(PixelPoint::new(1.5, 0.5), &gt, &cfg);
        assert!((r - (1.0 - 1.0 / 200.0)).abs() < 1e-12);
    }

    #[test]
    fn out_of_image_prediction_reads_as_infinite_disparity() {
        let map = depth_map_2x1(1.0, 1.0);
        let gt_action = Action::MoveTo(PixelPoint::new(0.5, 0.5));
        let gt = StepGroundTruth::from_action(&gt_action).with_depth(&map);
        let cfg = RewardConfig::default();
        assert_eq!(grounding_reward(PixelPoint::new(150.0, 0.5), &gt, &cfg), 0.0);
    }

    #[test]
    fn sky_pixel_ground_truth_reads_as_infinite_disparity() {
        let map = depth_map_2x1(f32::INFINITY.into(), 1.0);
        let gt_action = Action::MoveTo(PixelPoint::new(0.5, 0.5));
        let gt = StepGroundTruth::from_action(&gt_action).with_depth(&map);
        assert_eq!(
            grounding_reward(PixelPoint::new(1.5, 0.5), &gt, &RewardConfig::default()),
            0.0
        );
    }

    #[test]
    fn total_is_linear_in_the_weights() {
        let gt_action = Action::MoveTo(PixelPoint::new(100.0, 100.0));
        let gt = StepGroundTruth::from_action(&gt_action);
        let cfg = RewardConfig {
            lambda_format: 0.3,
            lambda_type: 2.0,
            lambda_grounding: 5.0,
            ..RewardConfig::default()
        };
        let pred = Action::MoveTo(PixelPoint::new(100.0, 200.0)); // d = 100 -> 0.5
        let b = total_reward(&wrap(&pred), &gt, &cfg);
        assert!((b.total - (0.3 + 2.0 + 5.0 * 0.5)).abs() < 1e-12);
    }

    fn depth_map_2x1(d0: f64, d1: f64) -> DepthMap {
        DepthMap::from_raster(2, 1, vec![d0 as f32, d1 as f32])
    }
}
