use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use graspbench::baseline::{pca_baseline, PcaConfig};
use graspbench::gradcheck::random_proposal_batch;
use graspbench::synthetic::{bar_scenes, BarSceneConfig};
use graspbench::{composite, jaccard, loss_gpn, GraspPose, LossConfig, SplitMix64};

fn bench_jaccard(c: &mut Criterion) {
    let a = GraspPose::new(100.0, 100.0, 12.0, 20.0, 50.0).unwrap();
    let b = GraspPose::new(108.0, 96.0, -25.0, 24.0, 44.0).unwrap();
    c.bench_function("jaccard_rotated", |bench| bench.iter(|| jaccard(black_box(&a), black_box(&b))));
}

fn bench_composite(c: &mut Criterion) {
    let scene = bar_scenes(1, 3, &BarSceneConfig::default()).remove(0);
    let (rgb, mask) = (scene.rgb.unwrap(), scene.mask.unwrap());
    c.bench_function("composite_320x240", |bench| {
        bench.iter(|| composite(black_box(&rgb), black_box(&mask)).unwrap())
    });
    let cfg = PcaConfig::default();
    c.bench_function("pca_baseline_320x240", |bench| {
        bench.iter(|| pca_baseline(black_box(&mask), &cfg).unwrap())
    });
}

fn bench_loss(c: &mut Criterion) {
    let batch = random_proposal_batch(&mut SplitMix64::new(5), 256);
    let cfg = LossConfig::default();
    c.bench_function("loss_gpn_256", |bench| bench.iter(|| loss_gpn(black_box(&batch), &cfg).unwrap()));
}

criterion_group!(kernels, bench_jaccard, bench_composite, bench_loss);
criterion_main!(kernels);
