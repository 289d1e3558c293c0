//! Detection throughput on one worker versus the full pool.
//!
//! Build with `--no-default-features` to time the sequential fallback; both
//! groups then run the same single-threaded code.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use framedup::forgery::{apply_duplication, synth_clip, ManipulationSpec, SynthParams};
use framedup::{detect, par, DetectConfig, VideoClip};

fn forged(frames: usize) -> VideoClip {
    let params = SynthParams {
        frames,
        ..SynthParams::default()
    };
    let source = synth_clip(&params, 1).expect("synthetic clip");
    let spec = ManipulationSpec {
        source_start: frames / 8,
        length: frames / 5,
        insert_at: frames * 3 / 4,
        noise_sigma: 0.0,
        seed: 0,
    };
    apply_duplication(&source, &spec).expect("valid duplication").0
}

fn bench_detect(c: &mut Criterion) {
    let mut group = c.benchmark_group("detect");
    group.sample_size(10);
    let cfg = DetectConfig::default();
    for frames in [300, 900] {
        let clip = forged(frames);
        for (label, jobs) in [("sequential", Some(1)), ("parallel", None)] {
            group.bench_with_input(BenchmarkId::new(label, frames), &clip, |b, clip| {
                b.iter(|| par::with_jobs(jobs, || detect(clip, &cfg).expect("detect")))
            });
        }
    }
    group.finish();
}

fn bench_exhaustive(c: &mut Criterion) {
    let mut group = c.benchmark_group("exhaustive");
    group.sample_size(10);
    let cfg = DetectConfig {
        exhaustive: true,
        ..DetectConfig::default()
    };
    let clip = forged(600);
    for (label, jobs) in [("sequential", Some(1)), ("parallel", None)] {
        group.bench_function(label, |b| {
            b.iter(|| par::with_jobs(jobs, || detect(&clip, &cfg).expect("detect")))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_detect, bench_exhaustive);
criterion_main!(benches);
