//! Log-Gabor filter bank: centre frequencies, radial profiles and the
//! transfer grids written as centred PGM images.
//!
//!     cargo run --example filter_bank -- [out_dir]

use std::path::PathBuf;

use phasecon::filterbank::{
    build_bank, center_frequencies, centered_grid, radial_gain, BankParams,
};
use phasecon::imageio::{write_map, WriteMode};

fn main() -> phasecon::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("phasecon-filter-bank"));
    std::fs::create_dir_all(&out).map_err(|e| phasecon::Error::Format(e.to_string()))?;

    let params = BankParams {
        lambda_min: 3.0,
        eta: 3.0,
        n_scales: 4,
        ..BankParams::default()
    };
    let freqs = center_frequencies(params.lambda_min, params.eta, params.n_scales);
    println!("centre frequencies (cycles/pixel): {freqs:?}");

    println!("\nradial gain, sigma = {}", params.sigma);
    println!(
        "{:>8} {}",
        "f",
        (1..=params.n_scales)
            .map(|n| format!("{:>9}", format!("n={n}")))
            .collect::<String>()
    );
    for i in 0..=10 {
        let f = 0.5 * i as f64 / 10.0;
        let row: String = freqs
            .iter()
            .map(|&fh| format!("{:>9.4}", radial_gain(f, fh, params.sigma).unwrap()))
            .collect();
        println!("{f:>8.3} {row}");
    }

    let bank = build_bank(&params, 128, 128)?;
    for o in 0..params.n_orient {
        for n in 0..params.n_scales {
            let path = out.join(format!("filter_o{}_n{}.pgm", o + 1, n + 1));
            write_map(&centered_grid(&bank, o, n), &path, WriteMode::Clamp01)?;
        }
    }
    println!(
        "\nwrote {} grids to {}",
        params.n_orient * params.n_scales,
        out.display()
    );
    Ok(())
}
