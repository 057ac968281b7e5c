//! Deterministic property checks over a correct build, runnable from the CLI.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::{
    matrix_norm, moment_norm_bound, random_matrix, submultiplicative_ratios, Criterion,
    CriterionInput, CriterionKind, NormKind,
};
use crate::error::Result;
use crate::imageio::ImageGrid;
use crate::map::Map;
use crate::moments::{closed_form_discrepancy, combined_cost, compute_moments, CostWeights};
use crate::pc::{Boundary, EngineOptions, PcEngine, PcParams};
use crate::synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// Measured and reported, never fails the run.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn render(&self) -> String {
        let mut out = format!("selfcheck seed={}\n", self.seed);
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Info => "INFO",
            };
            writeln!(out, "{tag} {}: {}", c.name, c.detail).unwrap();
        }
        writeln!(
            out,
            "result: {}",
            if self.passed() { "pass" } else { "fail" }
        )
        .unwrap();
        out
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Hooks {
    /// Swap the Frobenius norm for the max-entry norm in the
    /// sub-multiplicativity check. Negative control only.
    pub corrupt_norm: bool,
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check {
        name,
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

const NORMS: [NormKind; 5] = [
    NormKind::One,
    NormKind::Two,
    NormKind::Inf,
    NormKind::Frobenius,
    NormKind::Schatten(3.0),
];

fn norm_axioms(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut positive = true;
    for _ in 0..200 {
        let a = random_matrix(&mut rng, 8, 8);
        let b = random_matrix(&mut rng, 8, 8);
        let t: f64 = rng.gen_range(-3.0..3.0);
        for kind in NORMS {
            let na = matrix_norm(&a, kind)?;
            positive &= na > 0.0 && matrix_norm(&DMatrix::zeros(8, 8), kind)? == 0.0;
            let scaled = matrix_norm(&(&a * t), kind)?;
            worst = worst.max((scaled - t.abs() * na).abs() / (t.abs() * na));
            let sum = matrix_norm(&(&a + &b), kind)?;
            let nb = matrix_norm(&b, kind)?;
            worst = worst.max((sum - (na + nb)) / (na + nb));
        }
    }
    Ok(check(
        "norm_axioms",
        positive && worst <= 1e-10,
        format!("5 norms x 200 pairs, worst relative violation {worst:.3e}"),
    ))
}

fn max_entry(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn submultiplicativity(seed: u64, hooks: Hooks) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for kind in [NormKind::Frobenius, NormKind::Two, NormKind::Schatten(3.0)] {
        let report = if hooks.corrupt_norm && kind == NormKind::Frobenius {
            submultiplicative_ratios(max_entry, 200, seed)
        } else {
            submultiplicative_ratios(|m| matrix_norm(m, kind).expect("finite"), 200, seed)
        };
        worst = worst
            .max(report.worst_product_ratio)
            .max(report.worst_power_ratio);
    }
    Ok(check(
        "submultiplicativity",
        worst <= 1.0 + 1e-10,
        format!("fro, two, schatten:3 on 200 pairs, worst ratio {worst:.6}"),
    ))
}

fn moment_identities(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut worst_sum: f64 = 0.0;
    let mut worst_neg: f64 = 0.0;
    let mut worst_o1: f64 = 0.0;
    let mut ordered = true;
    for draw in 0..2000 {
        let o = [1, 2, 3, 6][draw % 4];
        let thetas: Vec<f64> = (0..o).map(|i| i as f64 * PI / o as f64).collect();
        let maps: Vec<Map> = (0..o).map(|_| Map::filled(1, 1, rng.gen())).collect();
        let mm = compute_moments(&maps, &thetas)?;
        let (hi, lo) = (mm.m_max.data()[0], mm.m_min.data()[0]);
        let sum_sq: f64 = maps.iter().map(|m| m.data()[0].powi(2)).sum();
        worst_sum = worst_sum.max((hi + lo - sum_sq).abs());
        worst_neg = worst_neg.max(-lo);
        ordered &= hi >= lo;
        if o == 1 {
            worst_o1 = worst_o1.max(lo.abs());
        }
    }
    Ok(check(
        "moment_identities",
        ordered && worst_sum <= 1e-10 && worst_neg <= 1e-12 && worst_o1 <= 1e-12,
        format!(
            "2000 draws, |M+m-sum PC^2| {worst_sum:.3e}, min m {:.3e}, O=1 |m| {worst_o1:.3e}",
            -worst_neg
        ),
    ))
}

fn single_orientation(image: &ImageGrid) -> Result<Check> {
    let mut params = PcParams::default();
    params.bank.n_orient = 1;
    let engine = PcEngine::new(image);
    let fields = engine.compute(&params)?;
    let pc = &fields.orientations[0].pc;
    let mm = compute_moments(&fields.pc_maps(), &fields.thetas())?;
    let min_abs = mm.m_min.data().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cost = combined_cost(&mm.m_max, &mm.m_min, CostWeights::default())?;
    let joint = Criterion::new(
        CriterionKind::NormJoint,
        NormKind::Frobenius,
        CostWeights::default(),
    )?
    .score(CriterionInput::Cost(&cost))?;
    let per = Criterion::new(
        CriterionKind::NormPerOrientation,
        NormKind::Frobenius,
        CostWeights::default(),
    )?
    .score(CriterionInput::Orientation(pc))?;
    let rel = (joint - per).abs() / joint.abs().max(f64::MIN_POSITIVE);
    Ok(check(
        "single_orientation",
        min_abs <= 1e-12 && rel <= 1e-12,
        format!("O=1: max |m| {min_abs:.3e}, joint vs per-orientation score rel diff {rel:.3e}"),
    ))
}

fn norm_bound_check(seed: u64) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let o = rng.gen_range(1..=6);
        let thetas: Vec<f64> = (0..o).map(|i| i as f64 * PI / o as f64).collect();
        let maps: Vec<Map> = (0..o)
            .map(|_| Map::from_fn(8, 8, |_, _| rng.gen()))
            .collect();
        let b = moment_norm_bound(&maps, &thetas, NormKind::Frobenius)?;
        if !b.holds(0.0) {
            violations += 1;
        }
        tightest = tightest.max(b.max_moment_norm.max(b.min_moment_norm) / b.orientation_sum);
    }
    Ok(check(
        "moment_norm_bound",
        violations == 0,
        format!("100 constructions, {violations} violations, largest ratio {tightest:.6}"),
    ))
}

/// Inverse DFT of a transfer grid: the complex spatial kernel.
fn spatial_kernel(grid: &[f64], w: usize, h: usize) -> Vec<Complex64> {
    let mut kernel = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = Complex64::new(0.0, 0.0);
            for v in 0..h {
                for u in 0..w {
                    let phase = 2.0
                        * PI
                        * (u as f64 * x as f64 / w as f64 + v as f64 * y as f64 / h as f64);
                    acc += Complex64::from_polar(grid[v * w + u], phase);
                }
            }
            kernel[y * w + x] = acc / (w * h) as f64;
        }
    }
    kernel
}

fn oracle_convolution(seed: u64) -> Result<Check> {
    let (w, h) = (16, 16);
    let image = synthetic::white_noise(w, h, 0.2, seed)?;
    let options = EngineOptions {
        boundary: Boundary::Periodic,
        ..EngineOptions::default()
    };
    let engine = PcEngine::with_options(&image, options);
    let params = PcParams::default();
    let mut worst: f64 = 0.0;
    for o in 0..params.bank.n_orient {
        let bank = engine.orientation_bank(&params.bank, o)?;
        let responses = engine.responses(&bank)?;
        for (n, grid) in bank.grids.iter().enumerate() {
            let kernel = spatial_kernel(grid, w, h);
            for y in 0..h {
                for x in 0..w {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for sy in 0..h {
                        for sx in 0..w {
                            let k = kernel[((y + h - sy) % h) * w + (x + w - sx) % w];
                            acc += k * image.pixels()[sy * w + sx];
                        }
                    }
                    worst = worst
                        .max((acc.re - responses.even[n].get(x, y)).abs())
                        .max((acc.im - responses.odd[n].get(x, y)).abs());
                }
            }
        }
    }
    Ok(check(
        "oracle_convolution",
        worst <= 1e-6,
        format!("16x16, 6x4 filters, max abs diff {worst:.3e}"),
    ))
}

fn closed_form_moment(image: &ImageGrid) -> Result<Vec<Check>> {
    let engine = PcEngine::new(image);
    let mut one = PcParams::default();
    one.bank.n_orient = 1;
    let f1 = engine.compute(&one)?;
    let d1 = closed_form_discrepancy(&f1.pc_maps(), &f1.thetas())?;
    let f6 = engine.compute(&PcParams::default())?;
    let d6 = closed_form_discrepancy(&f6.pc_maps(), &f6.thetas())?;
    Ok(vec![
        check(
            "closed_form_moment_o1",
            d1 <= 1e-12,
            format!("O=1 max discrepancy {d1:.3e}"),
        ),
        Check {
            name: "closed_form_moment_o6",
            status: Status::Info,
            detail: format!("O=6 max discrepancy {d6:.6e}"),
        },
    ])
}

pub fn run(seed: u64, hooks: Hooks) -> Result<Report> {
    let texture = synthetic::natural_texture(48, 48, seed)?;
    let mut checks = vec![
        norm_axioms(seed)?,
        submultiplicativity(seed, hooks)?,
        moment_identities(seed)?,
        single_orientation(&texture)?,
        norm_bound_check(seed)?,
        oracle_convolution(seed)?,
    ];
    checks.extend(closed_form_moment(&texture)?);
    Ok(Report { seed, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_run_passes_and_is_deterministic() {
        let a = run(0, Hooks::default()).unwrap();
        assert!(a.passed(), "{}", a.render());
        assert_eq!(a.render(), run(0, Hooks::default()).unwrap().render());
    }

    #[test]
    fn corrupted_norm_fails() {
        let r = run(0, Hooks { corrupt_norm: true }).unwrap();
        assert!(!r.passed());
        let failed: Vec<_> = r
            .checks
            .iter()
            .filter(|c| c.status == Status::Fail)
            .map(|c| c.name)
            .collect();
        assert_eq!(failed, vec!["submultiplicativity"]);
    }
}
