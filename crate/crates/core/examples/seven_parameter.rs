//! Joint search over cutoff, gain, minimum wavelength, bandwidth, scale
//! multiplier, number of scales and number of orientations. The integer slots
//! are enumerated, so this runs 24 continuous searches.
//!
//!     cargo run --release --example seven_parameter -- [image.pgm] [budget]

use phasecon::criteria::{Criterion, CriterionKind, NormKind};
use phasecon::imageio::load_grayscale;
use phasecon::moments::CostWeights;
use phasecon::optimizer::{optimize_joint, CandidateEvaluator, ParamBounds, SearchOptions, Slot};
use phasecon::synthetic;

fn main() -> phasecon::Result<()> {
    let mut args = std::env::args().skip(1);
    let image = match args.next() {
        Some(path) if path != "-" => load_grayscale(path)?,
        _ => synthetic::natural_texture(64, 64, 3)?,
    };
    let budget = args.next().and_then(|b| b.parse().ok()).unwrap_or(150);

    let criterion = Criterion::new(
        CriterionKind::NormJoint,
        NormKind::Frobenius,
        CostWeights::default(),
    )?;
    let evaluator = CandidateEvaluator::new(&image, criterion)?;
    let options = SearchOptions {
        budget,
        ..SearchOptions::default()
    };
    let r = optimize_joint(&evaluator, &ParamBounds::seven_parameter(), &options, 0)?;
    for note in &r.bound_notes {
        println!("note: {note}");
    }
    println!("evaluations {}", r.trace.evaluations.len());
    for slot in r.bounds.active_slots() {
        println!(
            "{:>10} = {:<10.4} [{}, {}]",
            slot.name(),
            r.trace.best.get(slot),
            r.bounds.lower.get(slot),
            r.bounds.upper.get(slot)
        );
    }
    println!("||M||_F*   = {:.4}", r.trace.best_score);

    // Best score reached for each orientation count.
    println!("\nbest score by number of orientations:");
    for o in 1..=6 {
        let best = r
            .trace
            .evaluations
            .iter()
            .filter(|e| e.params.get(Slot::NOrient) == o as f64)
            .map(|e| e.score)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("  O={o}: {best:.4}");
    }
    Ok(())
}
