use criterion::{criterion_group, criterion_main, Criterion};
use navkit_core::actions::{parse_response, wrap_response, Action};
use navkit_core::geometry::PixelPoint;
use navkit_core::reward::{total_reward, RewardConfig, StepGroundTruth};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

fn canned_responses(n: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    (0..n)
        .map(|i| {
            let point = PixelPoint::new(
                rng.random_range(0.0..2000.0f64).round(),
                rng.random_range(0.0..2000.0f64).round(),
            );
            let action = match i % 4 {
                0 => Action::Click(point),
                1 => Action::MoveTo(point),
                2 => Action::Scroll { start: point, end: PixelPoint::new(point.x, point.y + 300.0) },
                _ => Action::Stop,
            };
            wrap_response("I see the target and act on it.", &[action])
        })
        .collect()
}

fn bench_reward(c: &mut Criterion) {
    let responses = canned_responses(256);

    c.bench_function("parse_response_256", |b| {
        b.iter(|| {
            for raw in &responses {
                black_box(parse_response(black_box(raw)).unwrap());
            }
        })
    });

    let gt_action = Action::Click(PixelPoint::new(1000.0, 1000.0));
    let gt = StepGroundTruth::from_action(&gt_action);
    let cfg = RewardConfig::default();
    c.bench_function("total_reward_256", |b| {
        b.iter(|| {
            for raw in &responses {
                black_box(total_reward(black_box(raw), &gt, &cfg));
            }
        })
    });
}

criterion_group!(benches, bench_reward);
criterion_main!(benches);
