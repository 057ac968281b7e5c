//! Norm and determinant criteria on a phase congruency cost map. The plain
//! determinant of a 128x128 map in [0, 1] underflows; the log-determinant from
//! singular values does not.
//!
//!     cargo run --release --example matrix_criteria

use phasecon::criteria::{
    check_submultiplicative, log_abs_det, map_norm, to_matrix, Criterion, CriterionInput,
    CriterionKind, NormKind,
};
use phasecon::moments::{combined_cost, compute_moments, CostWeights};
use phasecon::pc::{PcEngine, PcParams};
use phasecon::synthetic;

fn main() -> phasecon::Result<()> {
    let image = synthetic::natural_texture(128, 128, 9)?;
    let fields = PcEngine::new(&image).compute(&PcParams::default())?;
    let mm = compute_moments(&fields.pc_maps(), &fields.thetas())?;
    let cost = combined_cost(&mm.m_max, &mm.m_min, CostWeights::default())?;

    for norm in [
        NormKind::One,
        NormKind::Two,
        NormKind::Inf,
        NormKind::Frobenius,
        NormKind::schatten(1.0)?,
        NormKind::schatten(4.0)?,
    ] {
        println!("{:>12} {:.6}", norm.to_string(), map_norm(&cost, norm)?);
    }

    let m = to_matrix(&cost);
    let ld = log_abs_det(&m)?;
    println!("\nnaive det      {:e}", m.determinant());
    println!(
        "log|det|       {:.6} (sign {}, rank deficient: {})",
        ld.log_abs, ld.sign, ld.rank_deficient
    );
    println!("as power of 10 {:.3}", ld.log_abs / std::f64::consts::LN_10);

    let d = Criterion::new(
        CriterionKind::DOptimalJoint,
        NormKind::Frobenius,
        CostWeights::default(),
    )?;
    println!(
        "\nd-opt score    {:.6}",
        d.score(CriterionInput::Cost(&cost))?
    );

    println!("\nsub-multiplicativity over 200 random 8x8 pairs:");
    for norm in [NormKind::Frobenius, NormKind::Two, NormKind::schatten(3.0)?] {
        let r = check_submultiplicative(norm, 200, 1)?;
        println!(
            "  {:>10}: worst ||AB||/(||A|| ||B||) = {:.4}, worst ||A^k||/||A||^k = {:.4}",
            norm.to_string(),
            r.worst_product_ratio,
            r.worst_power_ratio
        );
    }
    Ok(())
}
