//! Search the weighting-function cutoff and gain that maximize the Frobenius
//! norm of the combined cost map. The optimum lands on the box corner: lowest
//! cutoff, highest gain.
//!
//!     cargo run --release --example optimize_weighting -- [image.pgm] [norm]

use phasecon::criteria::{Criterion, CriterionKind, NormKind};
use phasecon::imageio::load_grayscale;
use phasecon::moments::CostWeights;
use phasecon::optimizer::{optimize_joint, CandidateEvaluator, ParamBounds, SearchOptions};
use phasecon::synthetic;

fn main() -> phasecon::Result<()> {
    let mut args = std::env::args().skip(1);
    let image = match args.next() {
        Some(path) if path != "-" => load_grayscale(path)?,
        _ => synthetic::natural_texture(128, 128, 7)?,
    };
    let norm: NormKind = args.next().as_deref().unwrap_or("fro").parse()?;

    let criterion = Criterion::new(CriterionKind::NormJoint, norm, CostWeights::default())?;
    let evaluator = CandidateEvaluator::new(&image, criterion)?;
    let bounds = ParamBounds::weighting_only();
    let r = optimize_joint(&evaluator, &bounds, &SearchOptions::default(), 1)?;

    let t = &r.trace;
    println!("norm        {norm}");
    println!("evaluations {} ({})", t.evaluations.len(), t.termination);
    println!(
        "c*          {:.4}  bounds [{}, {}]",
        t.best.cutoff, bounds.lower.cutoff, bounds.upper.cutoff
    );
    println!(
        "g*          {:.4}  bounds [{}, {}]",
        t.best.gain, bounds.lower.gain, bounds.upper.gain
    );
    println!("score*      {:.4}", t.best_score);
    for (slot, side) in r.bounds.boundary_flags(&t.best) {
        println!("  {slot} at {side} bound");
    }

    let best = t.running_best();
    println!("\nrunning best:");
    for i in [0, 4, 9, 24, 49, 99, best.len() - 1] {
        if i < best.len() {
            println!("  eval {:>4}: {:.4}", i + 1, best[i]);
        }
    }
    Ok(())
}
