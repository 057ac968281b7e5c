//! Phase congruency of a step edge: the ridge sits on the edge column, does
//! not depend on contrast, and thins out as the cutoff rises.
//!
//!     cargo run --release --example phase_congruency -- [image.pgm]

use phasecon::imageio::load_grayscale;
use phasecon::pc::{PcEngine, PcParams};
use phasecon::synthetic;

fn count_above(map: &phasecon::Map, t: f64) -> usize {
    map.data().iter().filter(|&&v| v > t).count()
}

fn main() -> phasecon::Result<()> {
    let image = match std::env::args().nth(1) {
        Some(path) => load_grayscale(path)?,
        None => synthetic::step_edge(64, 64, 32, 0.0, 1.0)?,
    };
    let params = PcParams::default();
    let engine = PcEngine::new(&image);
    let fields = engine.compute(&params)?;

    let (w, h) = fields.joint.dims();
    let mut hist = vec![0usize; w];
    for y in 0..h {
        let row = fields.joint.row(y);
        let argmax = (0..w).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
        hist[argmax] += 1;
    }
    println!("row argmax histogram (column: rows):");
    for (x, count) in hist.iter().enumerate().filter(|(_, c)| **c > 0) {
        println!("  {x:>3}: {count}");
    }
    println!("joint PC max {:.4}", fields.joint.max());

    for (o, f) in fields.orientations.iter().enumerate() {
        println!(
            "o={} theta={:.3} pc_max={:.4} threshold={:.3e}",
            o + 1,
            f.theta,
            f.pc.max(),
            f.noise.threshold
        );
    }

    let doubled = PcEngine::new(&image.scaled(2.0)?).compute(&params)?;
    println!(
        "\nPC(2I) vs PC(I) max abs diff: {:.3e}",
        doubled.joint.max_abs_diff(&fields.joint)?
    );

    println!("\npixels with PC > 0.1 by cutoff:");
    for c in [0.1, 0.3, 0.55, 0.8] {
        let p = PcParams {
            cutoff: c,
            ..params
        };
        println!(
            "  c = {c:<4} {}",
            count_above(&engine.compute(&p)?.joint, 0.1)
        );
    }
    Ok(())
}
