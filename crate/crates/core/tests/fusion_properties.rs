use dogfuse::activity::MaskMap;
use dogfuse::{
    build_saliency_map, fuse, fuse_stack_pairwise_equivalence_check, make_activity_maps,
    make_masks, synth, FusionConfig, GuidedFilterParams, Image, Preset, PyramidParams, SaliencyMap,
    SaliencyMetric,
};

fn mae(a: &Image, b: &Image) -> f64 {
    let total: f64 = a
        .planes()
        .iter()
        .zip(b.planes())
        .flat_map(|(p, q)| p.iter().zip(q).map(|(x, y)| (x - y).abs()))
        .sum();
    total / (a.len() * a.channels()) as f64
}

#[test]
fn identical_copies_are_a_fixed_point_for_every_preset() {
    for channels in [1, 3] {
        let img = synth::textured_scene(72, 64, channels, 5);
        for preset in Preset::ALL {
            let cfg = FusionConfig::from_preset(preset);
            for n in [2, 3] {
                let out = fuse(&vec![img.clone(); n], &cfg).unwrap();
                assert_eq!(out.fused, img, "{preset} n={n} channels={channels}");
            }
        }
    }
}

#[test]
fn fused_pixels_stay_in_source_hull() {
    for seed in 0..20 {
        let a = synth::textured_scene(40, 36, 3, 100 + seed);
        let b = synth::noise(40, 36, 3, 200 + seed);
        let out = fuse(&[a.clone(), b.clone()], &FusionConfig::default())
            .unwrap()
            .fused;
        for c in 0..3 {
            for i in 0..a.len() {
                let (x, y, f) = (a.plane(c)[i], b.plane(c)[i], out.plane(c)[i]);
                assert!(f >= x.min(y) - 1e-6 && f <= x.max(y) + 1e-6, "seed {seed}");
            }
        }
    }
}

#[test]
fn focus_pair_recovers_sharp_base() {
    let base = synth::textured_scene(128, 96, 3, 7);
    let (a, b) = synth::focus_pair(&base, 3.0).unwrap();
    let fused = fuse(
        &[a.clone(), b.clone()],
        &FusionConfig::from_preset(Preset::Natural),
    )
    .unwrap()
    .fused;
    let better = mae(&a, &base).min(mae(&b, &base));
    let got = mae(&fused, &base);
    assert!(got < 0.5 * better, "fused {got} vs best source {better}");
}

#[test]
fn activity_weights_sum_near_one() {
    // Each source is filtered under its own guide, so the sum is only
    // approximately 1; a handful of pixels on sharp synthetic edges leave
    // [0.5, 1.5].
    let base = synth::textured_scene(96, 80, 1, 8);
    for n in [2, 3, 5] {
        let stack = synth::focus_stack(&base, n, 2.0).unwrap();
        for preset in Preset::ALL {
            let out = fuse(&stack, &FusionConfig::from_preset(preset)).unwrap();
            let sums: Vec<f64> = (0..base.len())
                .map(|i| {
                    out.activity_maps
                        .iter()
                        .map(|m| m.weights.plane(0)[i])
                        .sum()
                })
                .collect();
            let outside = sums.iter().filter(|s| !(0.5..=1.5).contains(*s)).count();
            assert!(
                sums.iter().all(|s| (0.4..=1.7).contains(s)),
                "{preset} n={n}"
            );
            assert!(
                outside * 100 < sums.len(),
                "{preset} n={n}: {outside} outside"
            );
        }
    }
}

#[test]
fn activity_maps_follow_whole_masks() {
    let guide = synth::textured_scene(30, 20, 1, 9);
    let ones = MaskMap {
        mask: Image::filled(30, 20, 1, 1.0).unwrap(),
        source_index: 0,
    };
    let zeros = MaskMap {
        mask: Image::filled(30, 20, 1, 0.0).unwrap(),
        source_index: 1,
    };
    let maps = make_activity_maps(
        &[guide.clone(), guide],
        &[ones, zeros],
        &GuidedFilterParams::default(),
    )
    .unwrap();
    assert!(maps[0]
        .weights
        .plane(0)
        .iter()
        .all(|&v| (v - 1.0).abs() < 1e-9));
    assert!(maps[1].weights.plane(0).iter().all(|&v| v.abs() < 1e-9));
}

#[test]
fn masks_partition_for_real_saliency() {
    let base = synth::textured_scene(64, 64, 1, 10);
    let stack = synth::focus_stack(&base, 5, 2.5).unwrap();
    let maps: Vec<SaliencyMap> = stack
        .iter()
        .enumerate()
        .map(|(i, img)| {
            build_saliency_map(img, PyramidParams::new(2, 2).unwrap(), SaliencyMetric::Dog)
                .unwrap()
                .with_source_index(i)
        })
        .collect();
    let masks = make_masks(&maps).unwrap();
    for i in 0..base.len() {
        let s: f64 = masks.iter().map(|m| m.mask.plane(0)[i]).sum();
        assert_eq!(s, 1.0);
    }
}

#[test]
fn swapping_sources_with_distinct_winners_is_harmless() {
    let base = synth::textured_scene(64, 48, 3, 11);
    let (a, b) = synth::focus_pair(&base, 3.0).unwrap();
    let cfg = FusionConfig::default();
    let ab = fuse(&[a.clone(), b.clone()], &cfg).unwrap().fused;
    let ba = fuse(&[b, a], &cfg).unwrap().fused;
    assert!(mae(&ab, &ba) < 1e-12);
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let base = synth::textured_scene(80, 64, 3, 12);
    let stack = synth::focus_stack(&base, 3, 2.0).unwrap();
    let cfg = FusionConfig::from_preset(Preset::Cell);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fuse(&stack, &cfg).unwrap().fused)
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, fuse(&stack, &cfg).unwrap().fused);
}

#[test]
fn every_saliency_metric_fuses_a_focus_pair() {
    let base = synth::textured_scene(96, 96, 1, 13);
    let (a, b) = synth::focus_pair(&base, 3.0).unwrap();
    for metric in [
        SaliencyMetric::Dog,
        SaliencyMetric::Gradient,
        SaliencyMetric::Log,
    ] {
        let cfg = FusionConfig {
            metric,
            ..FusionConfig::from_preset(Preset::Multimodal)
        };
        let fused = fuse(&[a.clone(), b.clone()], &cfg).unwrap().fused;
        let better = mae(&a, &base).min(mae(&b, &base));
        assert!(mae(&fused, &base) < better, "{metric}");
    }
}

#[test]
fn pairwise_report_on_focus_stack() {
    let base = synth::textured_scene(64, 64, 1, 14);
    let stack = synth::focus_stack(&base, 3, 2.0).unwrap();
    let report = fuse_stack_pairwise_equivalence_check(&stack, &FusionConfig::default()).unwrap();
    assert_eq!(report.sources, 3);
    assert!(report.mean_abs_diff.is_finite() && report.mean_abs_diff <= report.max_abs_diff);
    assert!(report.max_abs_diff <= 1.0);
}
