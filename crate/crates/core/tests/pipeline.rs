use framedup::eval::{evaluate_corpus, LocalizationClass};
use framedup::forgery::{
    apply_duplication, generate_corpus, load_corpus, synth_clip, synthesize_shot_break, CorpusParams,
    ManipulationSpec, SynthParams,
};
use framedup::localize::{score_boundaries, ScorerSpec};
use framedup::media::{encode_y4m, parse_y4m, ColorMode};
use framedup::{detect, DetectConfig, RunConfig, VideoClip};

fn source(frames: usize, seed: u64) -> VideoClip {
    synth_clip(
        &SynthParams {
            frames,
            ..SynthParams::default()
        },
        seed,
    )
    .unwrap()
}

fn dup(clip: &VideoClip, source_start: usize, length: usize, insert_at: usize) -> VideoClip {
    let spec = ManipulationSpec {
        source_start,
        length,
        insert_at,
        noise_sigma: 0.0,
        seed: 0,
    };
    apply_duplication(clip, &spec).unwrap().0
}

#[test]
fn single_duplication_is_recovered_exactly() {
    let clip = dup(&source(300, 11), 40, 60, 200);
    let report = detect(&clip, &DetectConfig::default()).unwrap();
    let best = report.matches.first().expect("a match");
    assert_eq!(best.first_range(), (40, 99));
    assert_eq!(best.second_range(), (200, 259));
    assert_eq!(best.d_min, 0.0);
    assert!(report.video_score.is_finite());
}

#[test]
fn two_disjoint_duplications_give_two_matches() {
    let once = dup(&source(400, 12), 10, 40, 150);
    // indices below refer to `once`, which is 440 frames long
    let twice = dup(&once, 250, 50, 420);
    let report = detect(&twice, &DetectConfig::default()).unwrap();
    let mut ranges: Vec<_> = report
        .matches
        .iter()
        .filter(|m| m.d_min == 0.0)
        .map(|m| (m.first_range(), m.second_range()))
        .collect();
    ranges.sort();
    assert_eq!(ranges, vec![((10, 49), (150, 189)), ((250, 299), (420, 469))]);
}

#[test]
fn pristine_clip_has_no_matches() {
    let report = detect(&source(300, 13), &DetectConfig::default()).unwrap();
    assert!(report.matches.is_empty(), "{:?}", report.matches);
    assert_eq!(report.video_score, f64::NEG_INFINITY);
}

#[test]
fn shot_break_scorer_peaks_at_the_cut() {
    let (joined, cut) = synthesize_shot_break(&source(80, 1), &source(80, 2)).unwrap();
    let scores = score_boundaries(&joined, &ScorerSpec::default()).unwrap();
    let peak = scores
        .triples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.brk.total_cmp(&b.1.brk))
        .unwrap()
        .0;
    assert_eq!(peak, cut);
}

#[test]
fn y4m_round_trip_is_lossless_for_gray() {
    let clip = synth_clip(
        &SynthParams {
            channels: 1,
            frames: 12,
            ..SynthParams::default()
        },
        5,
    )
    .unwrap();
    let back = parse_y4m(&encode_y4m(&clip), ColorMode::Gray, clip.source_id()).unwrap();
    assert_eq!(back.frames(), clip.frames());
    assert_eq!(back.fps(), clip.fps());
}

#[test]
fn generate_load_evaluate_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let sources: Vec<VideoClip> = (0..4).map(|s| source(300, 100 + s)).collect();
    let params = CorpusParams {
        durations_s: vec![1.0, 2.0],
        min_gap: 32,
        ..CorpusParams::default()
    };
    let manifest = generate_corpus(&sources, 20, 20, &params, 9, dir.path()).unwrap();
    assert_eq!(manifest.items.len(), 40);

    let entries = load_corpus(&dir.path().join("manifest.json"), ColorMode::Rgb).unwrap();
    assert_eq!(entries.len(), 40);
    let summary = evaluate_corpus(&entries, &RunConfig::default().eval_config()).unwrap();
    assert_eq!(summary.items.len(), 40);
    assert_eq!(summary.video_auc, Some(1.0));
    assert!(summary.mean_mcc.unwrap() > 0.9);
    let exact = summary
        .items
        .iter()
        .filter(|i| i.ranges_exact == Some(true))
        .count();
    assert_eq!(exact, 20);
    assert!(summary.localization.correct >= 18);
    assert!(summary
        .items
        .iter()
        .filter(|i| !i.manipulated)
        .all(|i| i.localization.is_none() && i.mcc.is_none()));
    assert!(summary
        .items
        .iter()
        .filter_map(|i| i.localization)
        .all(|c| c != LocalizationClass::Ambiguous));
}
