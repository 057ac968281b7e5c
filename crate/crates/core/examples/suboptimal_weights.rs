//! With fractional weights on the maximum and minimum moments, maximize the
//! upper bound `(mu1 + mu2) ||PC_o^2||` per orientation instead of the cost
//! map itself. Run here on a phantom with bright blob lesions.
//!
//!     cargo run --release --example suboptimal_weights -- [mu1] [mu2]

use phasecon::criteria::{Criterion, CriterionKind, NormKind};
use phasecon::moments::CostWeights;
use phasecon::optimizer::{
    optimize_per_orientation, CandidateEvaluator, ParamBounds, SearchOptions,
};
use phasecon::synthetic;

fn main() -> phasecon::Result<()> {
    let mut args = std::env::args().skip(1);
    let mu1: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(0.3);
    let mu2: f64 = args.next().and_then(|v| v.parse().ok()).unwrap_or(0.7);

    let image = synthetic::lesion_phantom(96, 96, 6, 5)?;
    let criterion = Criterion::new(
        CriterionKind::SuboptConsistent,
        NormKind::Frobenius,
        CostWeights::new(mu1, mu2)?,
    )?;
    let evaluator = CandidateEvaluator::new(&image, criterion)?;
    let r = optimize_per_orientation(
        &evaluator,
        &ParamBounds::weighting_only(),
        &SearchOptions::default(),
        8,
    )?;
    for o in &r.orientations {
        println!(
            "o={} c*={:.4} g*={:.4} bound={:.4}",
            o.orientation + 1,
            o.trace.best.cutoff,
            o.trace.best.gain,
            o.trace.best_score
        );
    }
    let bound: f64 = r.orientations.iter().map(|o| o.trace.best_score).sum();
    println!("sum of per-orientation bounds {bound:.4}");
    println!("||mu1 M + mu2 m||_F at the optima {:.4}", r.aggregate_score);
    Ok(())
}
