use std::f64::consts::PI;

use phasecon::criteria::{Criterion, CriterionKind, NormKind};
use phasecon::imageio::ImageGrid;
use phasecon::moments::CostWeights;
use phasecon::optimizer::{evaluate_candidate, ParamVector};
use phasecon::pc::{Boundary, EngineOptions, PcEngine, PcParams};
use phasecon::{synthetic, Map};
use proptest::prelude::*;

fn periodic(image: &ImageGrid) -> PcEngine {
    PcEngine::with_options(
        image,
        EngineOptions {
            boundary: Boundary::Periodic,
            ..EngineOptions::default()
        },
    )
}

#[test]
fn white_noise_finest_amplitude_is_rayleigh() {
    let image = synthetic::white_noise(128, 128, 1.0, 3).unwrap();
    let engine = periodic(&image);
    let params = PcParams::default();
    for o in 0..params.bank.n_orient {
        let f = engine.orientation_fields(&params, o).unwrap();
        let a = f.amplitudes[0].data();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / a.len() as f64;
        let predicted_std = f.noise.finest_scale * ((4.0 - PI) / 2.0).sqrt();
        assert!(
            (mean / f.noise.finest_mean - 1.0).abs() < 0.25,
            "o={o}: mean {mean} vs {}",
            f.noise.finest_mean
        );
        assert!((var.sqrt() / predicted_std - 1.0).abs() < 0.25, "o={o}");
        // Pure noise sits mostly below the threshold.
        let above = f
            .energy
            .data()
            .iter()
            .filter(|&&e| e > f.noise.threshold)
            .count();
        assert!(
            above < a.len() / 10,
            "o={o}: {above} pixels above threshold"
        );
    }
}

#[test]
fn even_symmetric_grating_has_small_odd_response_at_peak() {
    // Cosine peak at the image centre, period 8 divides the side.
    let image = synthetic::grating(64, 64, 0.125, 0.0, 0.0).unwrap();
    let f = periodic(&image)
        .orientation_fields(&PcParams::default(), 0)
        .unwrap();
    let (even, odd) = (f.even_sum.get(32, 32), f.odd_sum.get(32, 32));
    assert!(odd.abs() < 1e-3 * even.abs(), "even {even}, odd {odd}");
    // A quarter period away the roles swap.
    let (even, odd) = (f.even_sum.get(34, 32), f.odd_sum.get(34, 32));
    assert!(even.abs() < 1e-3 * odd.abs(), "even {even}, odd {odd}");
}

#[test]
fn constant_image_has_zero_phase_congruency() {
    let image = synthetic::constant(32, 32, 0.7).unwrap();
    for boundary in [Boundary::Periodic, Boundary::PeriodicSmooth] {
        let engine = PcEngine::with_options(
            &image,
            EngineOptions {
                boundary,
                ..EngineOptions::default()
            },
        );
        let fields = engine.compute(&PcParams::default()).unwrap();
        assert!(fields.joint.data().iter().all(|&v| v == 0.0));
        for f in &fields.orientations {
            assert!(f.pc.data().iter().all(|&v| v == 0.0));
            assert!(f.energy.max() < 1e-12);
        }
    }
}

#[test]
fn odd_sides_are_padded_and_cropped_back() {
    let image = synthetic::natural_texture(33, 31, 2).unwrap();
    let engine = PcEngine::new(&image);
    assert_eq!(engine.padded_dims(), (34, 32));
    let fields = engine.compute(&PcParams::default()).unwrap();
    assert_eq!(fields.joint.dims(), (33, 31));
    assert!(fields.orientations.iter().all(|f| f.pc.dims() == (33, 31)));
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// PC maps composed by hand from the quadrature responses.
fn manual_pc(engine: &PcEngine, p: &PcParams) -> (Vec<Map>, Map) {
    let (w, h) = engine.dims();
    let mut pcs = Vec::new();
    let mut num_total = vec![0.0; w * h];
    let mut amp_total = vec![0.0; w * h];
    for o in 0..p.bank.n_orient {
        let r = engine
            .responses(&engine.orientation_bank(&p.bank, o).unwrap())
            .unwrap();
        let n = p.bank.n_scales;
        let finest: Vec<f64> = (0..w * h)
            .map(|i| r.even[0].data()[i].hypot(r.odd[0].data()[i]))
            .collect();
        let scale = median(&finest) / (2.0 * 2f64.ln()).sqrt();
        let total: f64 = (0..n).map(|s| scale / p.bank.eta.powi(s as i32)).sum();
        let threshold = total * (PI / 2.0).sqrt() + p.k_noise * total * ((4.0 - PI) / 2.0).sqrt();
        let mut pc = vec![0.0; w * h];
        for i in 0..w * h {
            let (mut f, mut hh, mut sum, mut max) = (0.0, 0.0, 0.0, 0.0f64);
            for s in 0..n {
                let (e, od) = (r.even[s].data()[i], r.odd[s].data()[i]);
                f += e;
                hh += od;
                let a = (e * e + od * od).sqrt();
                sum += a;
                max = max.max(a);
            }
            let spread = sum / (n as f64 * (max + p.epsilon));
            let weight = 1.0 / (1.0 + (p.gain * (p.cutoff - spread)).exp());
            let num = weight * ((f * f + hh * hh).sqrt() - threshold).max(0.0);
            pc[i] = num / (sum + p.epsilon);
            num_total[i] += num;
            amp_total[i] += sum;
        }
        pcs.push(Map::new(w, h, pc).unwrap());
    }
    let joint = (0..w * h)
        .map(|i| num_total[i] / (amp_total[i] + p.epsilon))
        .collect();
    (pcs, Map::new(w, h, joint).unwrap())
}

#[test]
fn pipeline_matches_manual_composition() {
    let image = synthetic::natural_texture(32, 32, 5).unwrap();
    let v = ParamVector {
        cutoff: 0.4,
        gain: 7.0,
        ..ParamVector::default()
    };
    let p = v.to_pc_params(0.65);
    let engine = PcEngine::new(&image);
    let fields = engine.compute(&p).unwrap();
    let (pcs, joint) = manual_pc(&engine, &p);
    assert!(fields.joint.max_abs_diff(&joint).unwrap() < 1e-12);
    for (f, m) in fields.orientations.iter().zip(&pcs) {
        assert!(f.pc.max_abs_diff(m).unwrap() < 1e-12);
    }

    // Moments from the 2x2 covariance in closed form, then the norm.
    let (mu1, mu2) = (0.7, 0.3);
    let mut sum_sq = 0.0;
    for i in 0..32 * 32 {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (o, pc) in pcs.iter().enumerate() {
            let t = o as f64 * PI / p.bank.n_orient as f64;
            let v = pc.data()[i];
            a += (v * t.cos()).powi(2);
            b += 2.0 * v * v * t.cos() * t.sin();
            c += (v * t.sin()).powi(2);
        }
        let root = (b * b + (a - c) * (a - c)).sqrt();
        let cost = mu1 * 0.5 * (a + c + root) + mu2 * 0.5 * (a + c - root);
        sum_sq += cost * cost;
    }
    let criterion = Criterion::new(
        CriterionKind::NormJoint,
        NormKind::Frobenius,
        CostWeights::new(mu1, mu2).unwrap(),
    )
    .unwrap();
    let score = evaluate_candidate(&image, &v, criterion).unwrap();
    assert!(
        (score - sum_sq.sqrt()).abs() < 1e-10 * score,
        "{score} vs {}",
        sum_sq.sqrt()
    );
}

#[test]
fn repeated_evaluation_is_bitwise_identical() {
    let image = synthetic::lesion_phantom(48, 48, 4, 1).unwrap();
    let criterion = Criterion::new(
        CriterionKind::DOptimalJoint,
        NormKind::Frobenius,
        CostWeights::default(),
    )
    .unwrap();
    let v = ParamVector::default();
    let a = evaluate_candidate(&image, &v, criterion).unwrap();
    let b = evaluate_candidate(&image, &v, criterion).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn field_ranges_hold(
        seed in 0u64..1000,
        cutoff in 0.05f64..0.95,
        gain in 1.0f64..40.0,
        n_scales in 1usize..5,
        n_orient in 1usize..7,
        k_noise in 0.0f64..4.0,
    ) {
        let image = synthetic::natural_texture(16, 16, seed).unwrap();
        let mut p = PcParams { cutoff, gain, k_noise, ..PcParams::default() };
        p.bank.n_scales = n_scales;
        p.bank.n_orient = n_orient;
        let fields = PcEngine::new(&image).compute(&p).unwrap();
        prop_assert!(fields.joint.data().iter().all(|v| (0.0..=1.0).contains(v)));
        for f in &fields.orientations {
            prop_assert!(f.pc.data().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(f.spread.data().iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(f.weight.data().iter().all(|v| (0.0..=1.0).contains(v)));
            // Local energy never exceeds the summed amplitude.
            for (e, a) in f.energy.data().iter().zip(f.amplitude_sum.data()) {
                prop_assert!(*e <= a * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn contrast_scaling_leaves_pc_nearly_unchanged(seed in 0u64..1000, factor in 1.5f64..4.0) {
        let image = synthetic::natural_texture(24, 24, seed).unwrap();
        let scaled = image.scaled(factor).unwrap();
        let p = PcParams::default();
        let a = PcEngine::new(&image).compute(&p).unwrap().joint;
        let b = PcEngine::new(&scaled).compute(&p).unwrap().joint;
        prop_assert!(a.max_abs_diff(&b).unwrap() < 1e-2);
    }
}
