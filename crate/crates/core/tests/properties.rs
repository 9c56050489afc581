mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use modelock::analyze::{analyze_map, extrude_vertical, AnalyzeConfig, AxisHypothesis, AxisSource};
use modelock::conv::{bank_response, correlate, correlate_direct, correlate_fft};
use modelock::detect::{detect, thin, DetectorConfig};
use modelock::filter::{make_filter, make_filter_bank, Envelope, FilterSpec};
use modelock::grid::{Grid, Image, ResponseMap};
use modelock::io::{mlar, pgm};
use modelock::metrics::f_measure;
use modelock::scene::{gen_scene, split_ids, AxisMode, Fill, SceneConfig, Split};
use modelock::wave::{ModeLockedBank, Wave};

fn mask_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Grid<bool>> {
    prop::collection::vec(any::<bool>(), rows * cols).prop_map(move |v| Grid::from_vec(rows, cols, v).unwrap())
}

fn image_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Image> {
    prop::collection::vec(0.0..1.0f64, rows * cols)
        .prop_map(move |v| Image::new(Grid::from_vec(rows, cols, v).unwrap()).unwrap())
}

fn envelope_strategy() -> impl Strategy<Value = Envelope> {
    prop_oneof![Just(Envelope::Boxcar), (0.5..8.0f64).prop_map(|sigma| Envelope::Gaussian { sigma })]
}

proptest! {
    #[test]
    fn superposition_identities(span in 1.0..2000.0f64, n in 1usize..=64, amp in 0.01..10.0f64, f in 0.0..1.0f64) {
        let bank = ModeLockedBank::new(span, n, amp).unwrap();
        let tol = 1e-9 * amp.max(1.0);
        prop_assert!((bank.superpose(span / 2.0) - amp).abs() <= tol);
        prop_assert!(bank.superpose(0.0).abs() <= tol);
        prop_assert!(bank.superpose(span).abs() <= tol);
        let x = f * span;
        prop_assert!(bank.superpose(x).abs() <= amp * (1.0 + 1e-12));
        let d = f * span / 2.0;
        prop_assert!((bank.superpose(span / 2.0 + d) - bank.superpose(span / 2.0 - d)).abs() <= tol);
    }

    #[test]
    fn superposition_matches_component_sum(span in 1.0..500.0f64, n in 1usize..=32, x in -100.0..600.0f64) {
        let bank = ModeLockedBank::new(span, n, 1.5).unwrap();
        let mut sum = 0.0;
        for i in 1..=n {
            let w = Wave::new(1.5, 2.0 * span / (2 * i + 1) as f64, (i % 2) as f64 * PI).unwrap();
            sum += w.eval(x);
        }
        prop_assert!((bank.superpose(x) - sum / n as f64).abs() <= 1e-12 * n as f64);
    }

    #[test]
    fn filters_are_zero_mean_unit_norm(
        span in 3.0..60.0f64,
        n in 1usize..=8,
        theta in 0.0..PI,
        length in 1.0..25.0f64,
        env in envelope_strategy(),
    ) {
        let f = make_filter(&FilterSpec::new(span, n, theta, length, env).unwrap()).unwrap();
        let taps = f.taps().as_slice();
        prop_assert!(taps.iter().sum::<f64>().abs() <= 1e-9);
        prop_assert!((taps.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() <= 1e-9);
        prop_assert_eq!(f.taps().rotate_180(), f.taps().clone());
        let flipped = make_filter(&FilterSpec::new(span, n, theta + PI, length, env).unwrap()).unwrap();
        prop_assert_eq!(flipped.taps().shape(), f.taps().shape());
        for (x, y) in flipped.taps().as_slice().iter().zip(taps) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn filter_centre_excites_and_flanks_inhibit(span in 6.0..60.0f64, n in 1usize..=8, length in 1.0..15.0f64) {
        let f = make_filter(&FilterSpec::new(span, n, PI / 2.0, length, Envelope::Boxcar).unwrap()).unwrap();
        let (cy, cx) = f.anchor();
        let taps = f.taps();
        let centre = taps.get(cy, cx);
        prop_assert!(taps.as_slice().iter().all(|&v| v <= centre + 1e-12));
        let row = taps.row(cy);
        prop_assert!(row[..cx].iter().any(|&v| v < 0.0));
        prop_assert!(row[cx + 1..].iter().any(|&v| v < 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn correlation_is_linear(
        a in image_strategy(20, 24),
        b in image_strategy(20, 24),
        wa in -3.0..3.0f64,
        wb in -3.0..3.0f64,
    ) {
        let f = make_filter(&FilterSpec::new(9.0, 3, 0.7, 7.0, Envelope::Boxcar).unwrap()).unwrap();
        let ra = correlate_direct(&a, &f).unwrap().values;
        let rb = correlate_direct(&b, &f).unwrap().values;
        // combine through an unclamped map: Image clamps, so correlate raw grids
        let combo = Grid::from_fn(20, 24, |r, c| wa * a.get(r, c) + wb * b.get(r, c));
        let want = Grid::from_fn(20, 24, |r, c| wa * ra.get(r, c) + wb * rb.get(r, c));
        let got = common::naive_correlate(&combo, f.taps());
        for (x, y) in got.as_slice().iter().zip(want.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn correlation_commutes_with_interior_shifts(img in image_strategy(24, 24), dy in 0usize..4, dx in 0usize..4) {
        let f = make_filter(&FilterSpec::new(5.0, 2, 0.0, 5.0, Envelope::Boxcar).unwrap()).unwrap();
        let shifted = Image::from_fn(24, 24, |r, c| {
            if r >= dy && c >= dx { img.get(r - dy, c - dx) } else { 0.0 }
        }).unwrap();
        let base = correlate_direct(&img, &f).unwrap().values;
        let moved = correlate_direct(&shifted, &f).unwrap().values;
        let (hy, hx) = (f.taps().rows() / 2, f.taps().cols() / 2);
        for r in (dy + hy)..(24 - hy) {
            for c in (dx + hx)..(24 - hx) {
                if r - dy + hy < 24 && c - dx + hx < 24 {
                    prop_assert_eq!(moved.get(r, c), base.get(r - dy, c - dx));
                }
            }
        }
    }

    #[test]
    fn fft_matches_direct(
        img in image_strategy(19, 23),
        span in 3.0..30.0f64,
        theta in 0.0..PI,
        n in 1usize..=5,
    ) {
        let f = make_filter(&FilterSpec::new(span, n, theta, 9.0, Envelope::Boxcar).unwrap()).unwrap();
        let d = correlate_direct(&img, &f).unwrap().values;
        let q = correlate_fft(&img, &f).unwrap().values;
        let scale = d.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
        for (x, y) in d.as_slice().iter().zip(q.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-4 * scale);
        }
    }

    #[test]
    fn bank_response_equals_sequential_max(img in image_strategy(24, 24)) {
        let bank = make_filter_bank(&[7.0, 11.0], &[0.0, PI / 4.0, PI / 2.0], 2, 5.0, Envelope::Boxcar).unwrap();
        let (resp, idx) = bank_response(&img, &bank).unwrap();
        let singles: Vec<_> = bank.iter().map(|f| correlate(&img, f).unwrap().values).collect();
        for r in 0..24 {
            for c in 0..24 {
                let (mut best, mut arg) = (singles[0].get(r, c), 0);
                for (k, s) in singles.iter().enumerate().skip(1) {
                    if s.get(r, c) > best {
                        best = s.get(r, c);
                        arg = k;
                    }
                }
                prop_assert_eq!(resp.values.get(r, c).to_bits(), best.to_bits());
                prop_assert_eq!(idx.get(r, c), arg);
            }
        }
    }

    #[test]
    fn scenes_are_symmetric_and_labelled_inside(
        seed in any::<u64>(),
        id in 0u64..1_000_000,
        h in 16usize..96,
        w in 16usize..96,
        label_width in 1usize..2,
        mode in prop_oneof![Just(AxisMode::Vertical), Just(AxisMode::Horizontal), Just(AxisMode::Both)],
        fill in prop_oneof![Just(Fill::Solid), Just(Fill::Outline)],
    ) {
        let cfg = SceneConfig { canvas: (h, w), label_width, axis_mode: mode, fill, widths: None };
        let s = gen_scene(seed, id, &cfg).unwrap();
        prop_assert_eq!(&s, &gen_scene(seed, id, &cfg).unwrap());
        let img = s.image.to_mask();
        let label = s.label.to_mask();
        for axis in &s.axes {
            for r in 0..h {
                for c in 0..w {
                    let (mr, mc) = if axis[0] == axis[2] {
                        (r as isize, (2.0 * axis[0]) as isize - 1 - c as isize)
                    } else {
                        ((2.0 * axis[1]) as isize - 1 - r as isize, c as isize)
                    };
                    prop_assert_eq!(img.get(r, c), img.get_signed(mr, mc).unwrap_or(false));
                }
            }
        }
        for r in 0..h {
            for c in 0..w {
                prop_assert!(!label.get(r, c) || s.rect.contains(r, c));
            }
        }
    }

    #[test]
    fn split_partitions_ids(seed in any::<u64>(), count in 2usize..300, frac in 0.01..0.99f64) {
        let train = ((count as f64 * frac) as usize).clamp(1, count - 1);
        let split = split_ids(seed, count, train);
        prop_assert_eq!(split.len(), count);
        prop_assert_eq!(split.iter().filter(|s| **s == Split::Train).count(), train);
    }

    #[test]
    fn thinning_is_idempotent_and_keeps_components(m in mask_strategy(18, 18)) {
        let t = thin(&m);
        prop_assert_eq!(thin(&t), t.clone());
        prop_assert_eq!(common::components(&t), common::components(&m));
        for (a, b) in t.as_slice().iter().zip(m.as_slice()) {
            prop_assert!(!a || *b);
        }
    }

    #[test]
    fn detection_is_deterministic(seed in any::<u64>()) {
        let cfg = SceneConfig { widths: Some(vec![8, 12]), ..SceneConfig::new((48, 48)) };
        let s = gen_scene(seed, 0, &cfg).unwrap();
        let det = DetectorConfig { orientations: vec![PI / 2.0], ..DetectorConfig::for_widths(&[8.0, 12.0], 3) };
        prop_assert_eq!(detect(&s.image, &det).unwrap(), detect(&s.image, &det).unwrap());
    }
}

proptest! {
    #[test]
    fn swapping_maps_swaps_precision_and_recall(
        a in mask_strategy(10, 10),
        b in mask_strategy(10, 10),
        tol in 0.0..3.0f64,
    ) {
        let ab = f_measure(&a, &b, tol).unwrap();
        let ba = f_measure(&b, &a, tol).unwrap();
        prop_assert_eq!(ab.tp, ba.tp);
        prop_assert_eq!((ab.fp, ab.fn_), (ba.fn_, ba.fp));
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
        for v in [ab.precision, ab.recall, ab.f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn matched_pixel_never_lowers_f(
        a in mask_strategy(10, 10),
        b in mask_strategy(10, 10),
        pos in (0usize..10, 0usize..10),
        tol in 0.0..3.0f64,
    ) {
        let (mut a, mut b) = (a, b);
        a.set(pos.0, pos.1, false);
        b.set(pos.0, pos.1, false);
        let before = f_measure(&a, &b, tol).unwrap();
        a.set(pos.0, pos.1, true);
        b.set(pos.0, pos.1, true);
        let after = f_measure(&a, &b, tol).unwrap();
        prop_assert!(after.f >= before.f - 1e-15);
    }

    #[test]
    fn mlar_and_pgm_round_trip(rows in 1usize..12, cols in 1usize..12, seed in any::<u64>()) {
        let vals = Grid::from_fn(rows, cols, |r, c| {
            let h = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((r * 131 + c) as u64);
            (((h >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 1e3) as f32 as f64
        });
        prop_assert_eq!(mlar::decode(&mlar::encode(&vals)).unwrap(), vals);
        let bytes = Grid::from_fn(rows, cols, |r, c| (seed as usize + r * 7 + c * 13) as u8);
        prop_assert_eq!(pgm::decode_u8(&pgm::encode(&bytes)).unwrap(), bytes);
    }
}

fn noisy_template_map(l: f64, n: usize, noise_seed: u64) -> (ResponseMap, AxisHypothesis) {
    let bank = ModeLockedBank::new(l, n, 1.0).unwrap();
    let profile = |s: f64| if s.abs() <= l / 2.0 { bank.superpose(s + l / 2.0) } else { 0.0 };
    let mut map = extrude_vertical(72, 80, 39.0, profile);
    let mut state = noise_seed | 1;
    for v in map.values.as_mut_slice() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        *v += 0.1 * ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5);
    }
    let axis = AxisHypothesis::new([39.0, 4.0, 39.0, 67.0], AxisSource::UserSupplied).unwrap();
    (map, axis)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analysis_is_affine_invariant(
        l in 12.0..30.0f64,
        n in 1usize..=6,
        alpha in 0.1..10.0f64,
        beta in -5.0..5.0f64,
        seed in any::<u64>(),
    ) {
        let (map, axis) = noisy_template_map(l, n, seed);
        let cfg = AnalyzeConfig { l_range: (8.0, 36.0), n_range: (1, 6), num_cuts: 16, half_extent: None };
        let base = analyze_map(&map, &axis, &cfg).unwrap();
        let scaled = ResponseMap::new(map.values.map(|v| alpha * v + beta));
        let other = analyze_map(&scaled, &axis, &cfg).unwrap();
        prop_assert!((base.ncc_score - other.ncc_score).abs() <= 1e-9);
        prop_assert_eq!((base.fitted_l, base.fitted_n), (other.fitted_l, other.fitted_n));
        prop_assert_eq!(base.center_excitation, other.center_excitation);
        prop_assert_eq!(base.lateral_inhibition, other.lateral_inhibition);
    }

    #[test]
    fn analysis_survives_quarter_turns(l in 12.0..30.0f64, n in 1usize..=6, seed in any::<u64>()) {
        let (map, axis) = noisy_template_map(l, n, seed);
        let cfg = AnalyzeConfig { l_range: (8.0, 36.0), n_range: (1, 6), num_cuts: 16, half_extent: None };
        let base = analyze_map(&map, &axis, &cfg).unwrap();
        let cols = map.values.cols() as f64;
        let turned = ResponseMap::new(map.values.rotate_90());
        let [x0, y0, x1, y1] = axis.segment;
        let turned_axis = AxisHypothesis::new([y0, cols - 1.0 - x0, y1, cols - 1.0 - x1], AxisSource::UserSupplied).unwrap();
        let other = analyze_map(&turned, &turned_axis, &cfg).unwrap();
        prop_assert!((base.ncc_score - other.ncc_score).abs() <= 1e-3);
    }
}
