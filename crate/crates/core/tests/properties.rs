mod common;

use framedup::coarse::{candidate_pairs, sequence_distance_matrix};
use framedup::embed::{
    embed_frame, embed_sequence, EmbedderSpec, EmbeddingSeries, Granularity, RollingSequenceEmbedder,
};
use framedup::eval::{mcc, roc_auc, trapezoid_area, ConfusionCounts};
use framedup::fine::{extract_run, frame_distance, FrameDistanceMatrix};
use framedup::forgery::{apply_duplication, FrameLabel, ManipulationSpec};
use framedup::media::{decode_embeddings, encode_embeddings};
use framedup::{FrameBuffer, VideoClip};
use proptest::prelude::*;

use common::{brute_force_run, pair_count_auc};

fn square(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    let cell = prop_oneof![
        Just(0.0),
        Just(0.005),
        Just(0.01),
        Just(0.02),
        0.0..1.0f64,
    ];
    prop::collection::vec(prop::collection::vec(cell, n), n)
}

fn clip_strategy(frames: std::ops::Range<usize>) -> impl Strategy<Value = VideoClip> {
    (frames, 1u32..6, 1u32..5, prop_oneof![Just(1u8), Just(3u8)], any::<u64>()).prop_map(
        |(n, w, h, c, seed)| {
            let mut state = seed | 1;
            let frames = (0..n)
                .map(|_| {
                    let data = (0..(w * h * c as u32) as usize)
                        .map(|_| {
                            state ^= state << 13;
                            state ^= state >> 7;
                            state ^= state << 17;
                            (state >> 56) as u8
                        })
                        .collect();
                    FrameBuffer::new(w, h, c, data).unwrap()
                })
                .collect();
            VideoClip::new(frames, 25.0, "p").unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extract_run_matches_exhaustive_search(
        m in (2usize..14).prop_flat_map(square),
        near_band in 0usize..4,
    ) {
        let n = m.len();
        let flat: Vec<f64> = m.iter().flatten().copied().collect();
        let fdm = FrameDistanceMatrix::from_values(0..n, 0..n, flat).unwrap();
        let got = extract_run(&fdm, 0.01, near_band, 1e-6)
            .unwrap()
            .map(|r| (r.i_min, r.j_min, r.d_min, r.k1, r.k2, r.l, r.f_video));
        prop_assert_eq!(got, brute_force_run(&m, 0.01, near_band, 1e-6));
    }

    #[test]
    fn auc_equals_pair_counting(
        items in prop::collection::vec(((0i32..8).prop_map(|v| v as f64 * 0.5), any::<bool>()), 2..50),
    ) {
        prop_assume!(items.iter().any(|x| x.1) && items.iter().any(|x| !x.1));
        let curve = roc_auc(&items).unwrap();
        prop_assert_eq!(curve.auc, pair_count_auc(&items));
        prop_assert!((trapezoid_area(&curve.points) - curve.auc).abs() < 1e-12);
        for w in curve.points.windows(2) {
            prop_assert!(w[1].0 >= w[0].0 && w[1].1 >= w[0].1);
        }
    }

    #[test]
    fn auc_ignores_monotone_transforms(
        items in prop::collection::vec((-5.0..5.0f64, any::<bool>()), 2..40),
    ) {
        prop_assume!(items.iter().any(|x| x.1) && items.iter().any(|x| !x.1));
        let moved: Vec<(f64, bool)> = items.iter().map(|&(s, p)| (3.0 * s.exp() + 1.0, p)).collect();
        prop_assert_eq!(roc_auc(&items).unwrap().auc, roc_auc(&moved).unwrap().auc);
    }

    #[test]
    fn mcc_is_bounded_and_symmetric(tp in 0u64..1000, fp in 0u64..1000, tn in 0u64..1000, fn_ in 0u64..1000) {
        let c = ConfusionCounts { tp, fp, tn, fn_, optout: 0 };
        let swapped = ConfusionCounts { tp: tn, fp: fn_, tn: tp, fn_: fp, optout: 0 };
        let v = mcc(&c);
        prop_assert!((-1.0..=1.0).contains(&v));
        prop_assert!((v - mcc(&swapped)).abs() < 1e-12);
    }

    #[test]
    fn frame_distance_contract(
        a in prop::collection::vec(-10.0..10.0f64, 1..32),
        scale in 0.01..100.0f64,
        seed in any::<u64>(),
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(k, x)| x * ((seed >> (k % 60)) & 3) as f64 - 1.0).collect();
        let d = frame_distance(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert_eq!(d, frame_distance(&b, &a).unwrap());
        prop_assert_eq!(frame_distance(&a, &a).unwrap(), 0.0);
        let scaled: Vec<f64> = a.iter().map(|x| x * scale).collect();
        prop_assert!((frame_distance(&scaled, &b).unwrap() - d).abs() < 1e-12);
    }

    #[test]
    fn histogram_ignores_pixel_order(
        pixels in prop::collection::vec(any::<[u8; 3]>(), 1..64),
        rotate in 0usize..64,
        bins in 1u32..64,
    ) {
        let n = pixels.len() as u32;
        let frame = |px: &[[u8; 3]]| FrameBuffer::new(n, 1, 3, px.iter().flatten().copied().collect()).unwrap();
        let mut shuffled = pixels.clone();
        shuffled.rotate_left(rotate % pixels.len());
        shuffled.reverse();
        let spec = EmbedderSpec::ColorHistogram { bins };
        let h = embed_frame(&frame(&pixels), &spec).unwrap();
        prop_assert_eq!(&h, &embed_frame(&frame(&shuffled), &spec).unwrap());
        for channel in h.chunks(bins as usize) {
            prop_assert!((channel.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rolling_window_matches_direct(
        clip in clip_strategy(20..40),
        length in 2usize..12,
        kind in 0usize..3,
    ) {
        let spec = [
            EmbedderSpec::DownsampleIntensity { grid: 4 },
            EmbedderSpec::ColorHistogram { bins: 8 },
            EmbedderSpec::TemporalDiffStats { grid: 3 },
        ][kind].clone();
        let rolling: Vec<(usize, Vec<f64>)> = RollingSequenceEmbedder::new(&clip, &spec, length).unwrap().collect();
        prop_assert_eq!(rolling.len(), clip.len() - length + 1);
        for (start, v) in rolling {
            let direct = embed_sequence(&clip, start, length, &spec).unwrap();
            for (x, y) in v.iter().zip(&direct) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn candidate_pairs_respect_threshold_and_order(
        rows in prop::collection::vec(prop::collection::vec(0.0..4.0f64, 3), 2..12),
        t1 in 0.1..5.0f64,
        gap in 1usize..3,
    ) {
        let series = EmbeddingSeries::from_rows(rows, 3, Granularity::PerWindow, None).unwrap();
        let m = sequence_distance_matrix(&series).unwrap();
        let pairs = candidate_pairs(&m, t1, gap).unwrap();
        for p in &pairs {
            prop_assert!(p.distance < t1 && p.window_b - p.window_a >= gap);
        }
        for w in pairs.windows(2) {
            prop_assert!((w[0].distance, w[0].window_a, w[0].window_b) <= (w[1].distance, w[1].window_a, w[1].window_b));
        }
        let expected = (0..m.size)
            .flat_map(|a| (a + gap..m.size).map(move |b| (a, b)))
            .filter(|&(a, b)| m.get(a, b) < t1)
            .count();
        prop_assert_eq!(pairs.len(), expected);
    }

    #[test]
    fn duplication_arithmetic(
        clip in clip_strategy(10..60),
        start_frac in 0.0..1.0f64,
        len_frac in 0.0..1.0f64,
        at_frac in 0.0..1.0f64,
    ) {
        let n = clip.len();
        let length = 1 + (len_frac * (n / 2) as f64) as usize;
        let source_start = (start_frac * (n - length) as f64) as usize;
        let insert_at = (at_frac * n as f64) as usize;
        let spec = ManipulationSpec { source_start, length, insert_at, noise_sigma: 0.0, seed: 0 };
        match apply_duplication(&clip, &spec) {
            Ok((out, truth)) => {
                prop_assert_eq!(out.len(), n + length);
                let (d, s) = (truth.duplicated_range.unwrap(), truth.selected_range.unwrap());
                for k in 0..length {
                    prop_assert_eq!(out.frame(d.0 + k), out.frame(s.0 + k));
                }
                let dup = truth.labels.iter().filter(|&&l| l == FrameLabel::Duplicated).count();
                let sel = truth.labels.iter().filter(|&&l| l == FrameLabel::SelectedOriginal).count();
                prop_assert_eq!((dup, sel), (length, length));
            }
            Err(_) => prop_assert!(insert_at > source_start && insert_at < source_start + length),
        }
    }
}

#[test]
fn fdeb_round_trip_over_shapes() {
    for dim in [1usize, 8, 1024] {
        for count in [0usize, 1, 257] {
            let values: Vec<f64> = (0..dim * count)
                .map(|k| ((k * 7919) % 1000) as f32 as f64 / 7.0)
                .map(|v| v as f32 as f64)
                .collect();
            let series = EmbeddingSeries::from_flat(values.clone(), dim, Granularity::PerFrame, None).unwrap();
            let bytes = encode_embeddings(&series);
            assert_eq!(bytes.len(), 16 + 4 * dim * count);
            let back = decode_embeddings(&bytes).unwrap();
            assert_eq!((back.len(), back.dim()), (count, dim));
            assert_eq!(back.values(), &values[..]);
        }
    }
}
