use std::f64::consts::PI;

use asj_core::eval::noise::gen_noise_image;
use asj_core::eval::scene::{gen_wireframe_scene, SceneSpec, Shape};
use asj_core::image::compute_gradient;
use asj_core::junction::standardized_sweep;
use asj_core::math::angular_distance;
use asj_core::scale::{detect_asj, DetectParams};
use proptest::prelude::*;

#[test]
fn noise_strengths_are_standardized() {
    let radius = DetectParams::default().local_radius;
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0.0);
    for seed in 0..8 {
        let img = gen_noise_image(seed, 128, 128).unwrap();
        let g = compute_gradient(&img.image, None).unwrap();
        for y in (8..120).step_by(4) {
            for x in (8..120).step_by(4) {
                for v in standardized_sweep(&g, (x, y), radius, 1.0) {
                    s1 += v;
                    s2 += v * v;
                    n += 1.0;
                }
            }
        }
    }
    let mean = s1 / n;
    let var = s2 / n - mean * mean;
    assert!(mean.abs() < 0.05, "mean {mean}");
    assert!((var - 1.0).abs() < 0.1, "variance {var}");
}

#[test]
fn clean_l_recovers_arm_lengths() {
    let mut spec = SceneSpec::new(160, 160);
    spec.noise_sigma = 0.02;
    spec.shapes.push(Shape::L { corner: (40.0, 40.0), first: (70.0, 0.0), second: (50.0, PI / 2.0) });
    let scene = gen_wireframe_scene(&spec, 7).unwrap();
    let det = detect_asj(&scene.image, &DetectParams::default()).unwrap();
    let near: Vec<_> = det.iter().filter(|d| (d.center.0 - 40.0).hypot(d.center.1 - 40.0) < 3.0).collect();
    assert!(!near.is_empty(), "{det:?}");
    for (len, dir) in [(70.0, 0.0), (50.0, PI / 2.0)] {
        let hit = near.iter().flat_map(|d| &d.branches).any(|b| {
            angular_distance(b.orientation, dir) < PI / 36.0 && (b.scale - len).abs() < 3.0
        });
        assert!(hit, "arm {len} at {dir}: {near:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn detections_are_well_formed(
        angle in 0.0f64..PI,
        opening in 0.35f64..0.65,
        l1 in 20.0f64..45.0,
        l2 in 20.0f64..45.0,
        seed in 0u64..1000,
    ) {
        let mut spec = SceneSpec::new(120, 120);
        spec.noise_sigma = 0.03;
        spec.shapes.push(Shape::L { corner: (60.0, 60.0), first: (l1, angle), second: (l2, angle + opening * PI) });
        let scene = gen_wireframe_scene(&spec, seed).unwrap();
        let params = DetectParams::default();
        let det = detect_asj(&scene.image, &params).unwrap();
        prop_assert_eq!(&det, &detect_asj(&scene.image, &params).unwrap());
        for j in &det {
            prop_assert!(j.branches.len() >= 2);
            prop_assert!(j.center.0 >= 0.0 && j.center.0 < 120.0 && j.center.1 >= 0.0 && j.center.1 < 120.0);
            prop_assert!(j.branches.windows(2).all(|w| w[0].orientation <= w[1].orientation));
            for b in &j.branches {
                prop_assert!(b.scale >= params.seed_radius_min as f64);
                prop_assert!(b.nfa <= params.epsilon);
                prop_assert!((0.0..2.0 * PI).contains(&b.orientation));
            }
        }
        for w in det.windows(2) {
            prop_assert!((w[0].center.1, w[0].center.0) <= (w[1].center.1, w[1].center.0));
        }
    }
}
