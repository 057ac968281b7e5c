//! Maximum and minimum moments of a textured image, the combined cost map for
//! a few weightings, and how far the closed-form maximum moment drifts from
//! the exact one as orientations are added.
//!
//!     cargo run --release --example moment_maps -- [out_dir]

use std::path::PathBuf;

use phasecon::imageio::{write_map, WriteMode};
use phasecon::moments::{closed_form_discrepancy, combined_cost, compute_moments, CostWeights};
use phasecon::pc::{PcEngine, PcParams};
use phasecon::synthetic;

fn main() -> phasecon::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("phasecon-moments"));
    std::fs::create_dir_all(&out).map_err(|e| phasecon::Error::Format(e.to_string()))?;

    let image = synthetic::natural_texture(96, 96, 4)?;
    let engine = PcEngine::new(&image);
    let fields = engine.compute(&PcParams::default())?;
    let mm = compute_moments(&fields.pc_maps(), &fields.thetas())?;
    println!("M in [{:.4}, {:.4}]", mm.m_max.min(), mm.m_max.max());
    println!("m in [{:.4}, {:.4}]", mm.m_min.min(), mm.m_min.max());

    write_map(&mm.m_max, out.join("moment_max.pgm"), WriteMode::Rescale)?;
    write_map(&mm.m_min, out.join("moment_min.pgm"), WriteMode::Rescale)?;
    for (mu1, mu2) in [(1.0, 1.0), (1.0, 0.0), (0.0, 1.0), (0.3, 0.7)] {
        let cost = combined_cost(&mm.m_max, &mm.m_min, CostWeights::new(mu1, mu2)?)?;
        let name = format!("cost_{mu1}_{mu2}.pgm");
        write_map(&cost, out.join(&name), WriteMode::Rescale)?;
        println!("mu1={mu1} mu2={mu2}: cost max {:.4} -> {name}", cost.max());
    }

    println!("\nclosed-form maximum moment vs exact:");
    for o in 1..=6 {
        let mut p = PcParams::default();
        p.bank.n_orient = o;
        let f = engine.compute(&p)?;
        println!(
            "  O={o}: {:.3e}",
            closed_form_discrepancy(&f.pc_maps(), &f.thetas())?
        );
    }
    println!("\nwrote maps to {}", out.display());
    Ok(())
}
