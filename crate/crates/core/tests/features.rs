use inkcheck_core::features::{
    catalog_ids, feature_catalog, session_features, stroke_features, tremor_index, FeatureAccumulator, FeatureLevel,
};
use inkcheck_core::geom::Point;
use inkcheck_core::ink::{RawSample, Stroke};
use inkcheck_core::synth::{gen_stroke, gen_test_session, BasePath, SessionParams, StrokeSpec, Style};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TESTS: [&str; 7] = ["CDT", "TMT", "AKT", "MMSE", "DemTect", "ROCF", "CERAD"];

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs() + 1e-12
}

fn line_stroke(style: Style, seed: u64) -> Stroke {
    let spec = StrokeSpec {
        path: BasePath::polyline(vec![Point::new(20.0, 100.0), Point::new(140.0, 100.0)]),
        style,
        start_t: 0,
        seed,
    };
    Stroke { index: 0, samples: gen_stroke(&spec).unwrap().0 }
}

/// Independent tremor computation for a stroke whose base path runs along +x.
fn tremor_oracle(stroke: &Stroke) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = stroke.samples.iter().map(|s| (s.x, s.y)).collect();
    let mut out = vec![pts[0]];
    let mut carry = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let mut s = 0.25 - carry;
        while s <= len {
            let u = s / len;
            out.push((a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1)));
            s += 0.25;
        }
        carry = len - (s - 0.25);
    }
    let n = out.len();
    let residual: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(4);
            let hi = (i + 4).min(n - 1);
            let mean_y = out[lo..=hi].iter().map(|p| p.1).sum::<f64>() / (hi - lo + 1) as f64;
            out[i].1 - mean_y
        })
        .collect();
    let rms = (residual.iter().map(|r| r * r).sum::<f64>() / n as f64).sqrt();
    let mut crossings = 0;
    let mut prev = 0.0f64;
    for &r in &residual {
        if r.abs() > 1e-9 {
            if prev != 0.0 && prev.signum() != r.signum() {
                crossings += 1;
            }
            prev = r;
        }
    }
    let duration = (stroke.end_t() - stroke.start_t()) as f64 / 1e6;
    (rms, crossings as f64 / (2.0 * duration))
}

#[test]
fn tremor_matches_oracle() {
    for seed in 0..5 {
        let stroke = line_stroke(Style::default().with_tremor(0.3, 8.0), seed);
        let got = tremor_index(&stroke);
        let (rms, freq) = tremor_oracle(&stroke);
        assert!(close(got.rms_mm, rms, 0.10), "rms {} vs {rms}", got.rms_mm);
        assert!((got.dominant_freq_hz - 8.0).abs() <= 1.0, "freq {}", got.dominant_freq_hz);
        assert!((freq - 8.0).abs() <= 1.0, "oracle freq {freq}");
        let fv = stroke_features(&stroke);
        assert_eq!(fv.value("tremor_index_mm"), got.rms_mm);
    }
}

#[test]
fn tremor_increases_with_amplitude() {
    for seed in 0..5 {
        let rms: Vec<f64> = [0.0, 0.1, 0.2, 0.4]
            .iter()
            .map(|&a| tremor_index(&line_stroke(Style::default().with_tremor(a, 8.0).with_jitter(0.02), seed)).rms_mm)
            .collect();
        assert!(rms.windows(2).all(|w| w[0] < w[1]), "seed {seed}: {rms:?}");
    }
    assert_eq!(tremor_index(&line_stroke(Style::default(), 0)).rms_mm, 0.0);
}

#[test]
fn catalog_is_stable() {
    let a: Vec<_> = feature_catalog().iter().map(|d| d.id.clone()).collect();
    let b: Vec<_> = feature_catalog().iter().map(|d| d.id.clone()).collect();
    assert_eq!(a, b);
    assert!(a.len() >= 40);
    let tremor = feature_catalog().iter().find(|d| d.id == "tremor_index_mm").unwrap();
    assert_eq!((tremor.level, tremor.unit.as_str()), (FeatureLevel::Stroke, "mm"));
    assert!(catalog_ids(FeatureLevel::Document).any(|id| id == "total_in_air_s"));
}

#[test]
fn document_aggregates_match_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..100u64 {
        let test = TESTS[(i % TESTS.len() as u64) as usize];
        let style = Style::default()
            .with_jitter(rng.random_range(0.0..0.3))
            .with_tremor(rng.random_range(0.0..0.3), rng.random_range(4.0..10.0));
        let params = SessionParams { style, ..Default::default() };
        let g = gen_test_session(test, &params, i).unwrap();
        let threshold = rng.random_range(50_000..400_000u64);
        let f = session_features(&g.session, threshold);
        let doc = &f.document;

        let strokes = &g.session.strokes;
        let n = strokes.len() as f64;
        let on_paper: u64 = strokes.iter().map(|s| s.samples.last().unwrap().t - s.samples[0].t).sum();
        let in_air: u64 = g.session.gaps.iter().map(|g| g.end_t - g.start_t).sum();
        let all = g.session.samples();
        let span = all.last().unwrap().t - all[0].t;
        assert_eq!(on_paper + in_air, span);
        assert_eq!(doc.value("stroke_count"), n);
        assert_eq!(doc.value("gap_count"), g.session.gaps.len() as f64);
        let pauses = g.session.gaps.iter().filter(|g| g.end_t - g.start_t > threshold).count();
        assert_eq!(doc.value("pause_count"), pauses as f64);
        assert!(close(doc.value("total_on_paper_s"), on_paper as f64 / 1e6, 1e-9));
        assert!(close(doc.value("total_in_air_s"), in_air as f64 / 1e6, 1e-9));
        assert!(close(doc.value("session_span_s"), span as f64 / 1e6, 1e-9));
        let path: f64 = strokes
            .iter()
            .map(|s| {
                s.samples
                    .windows(2)
                    .map(|w| ((w[1].x - w[0].x).powi(2) + (w[1].y - w[0].y).powi(2)).sqrt())
                    .sum::<f64>()
            })
            .sum();
        assert!(close(doc.value("total_path_mm"), path, 1e-9));

        for id in catalog_ids(FeatureLevel::Stroke) {
            let xs: Vec<f64> = f.strokes.iter().map(|fv| fv.value(id)).collect();
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let got_mean = doc.value(&format!("mean_{id}"));
            let got_std = doc.value(&format!("std_{id}"));
            assert!(close(got_mean, mean, 1e-9), "{test} mean_{id}: {got_mean} vs {mean}");
            let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!((got_std - var.sqrt()).abs() <= 1e-9 * var.sqrt().max(1e-6 * scale) + 1e-12, "{test} std_{id}");
        }
    }
}

#[test]
fn incremental_equals_batch() {
    for (i, test) in TESTS.iter().enumerate() {
        let g = gen_test_session(test, &SessionParams::default(), i as u64).unwrap();
        let batch = session_features(&g.session, 200_000);
        let mut acc = FeatureAccumulator::new(200_000);
        // session order: each stroke after the gap that precedes it
        let mut gaps = g.session.gaps.iter().peekable();
        for s in &g.session.strokes {
            while let Some(gap) = gaps.next_if(|gap| gap.following_stroke == Some(s.index)) {
                acc.add_gap(gap);
            }
            acc.add_stroke(s, &stroke_features(s));
        }
        for gap in gaps {
            acc.add_gap(gap);
        }
        assert_eq!(acc.document().with_session(g.session.session_id()), batch.document, "{test}");
    }
}

fn rigid(samples: &[RawSample], angle: f64, dx: f64, dy: f64) -> Vec<RawSample> {
    let (s, c) = angle.sin_cos();
    samples.iter().map(|p| RawSample { x: c * p.x - s * p.y + dx, y: s * p.x + c * p.y + dy, ..*p }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stroke_features_are_rigid_invariant(
        seed in any::<u64>(),
        angle in 0.0..std::f64::consts::TAU,
        dx in -100.0..100.0f64,
        dy in -100.0..100.0f64,
        pts in prop::collection::vec((0.0..60.0f64, 0.0..60.0f64), 2..6),
    ) {
        let path = BasePath::polyline(pts.into_iter().map(|(x, y)| Point::new(x, y)).collect());
        let style = Style::default().with_jitter(0.1).with_tremor(0.1, 7.0);
        let (samples, _) = gen_stroke(&StrokeSpec { path, style, start_t: 0, seed }).unwrap();
        let a = stroke_features(&Stroke { index: 0, samples: samples.clone() });
        let b = stroke_features(&Stroke { index: 0, samples: rigid(&samples, angle, dx, dy) });
        for (id, va) in &a.values {
            if id.starts_with("bbox_") {
                continue;
            }
            let vb = b.value(id);
            prop_assert!((va - vb).abs() <= 1e-6 * va.abs().max(vb.abs()) + 1e-9, "{id}: {va} vs {vb}");
        }
        let s = a.value("straightness");
        prop_assert!((0.0..=1.0).contains(&s));
    }
}
