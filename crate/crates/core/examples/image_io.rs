//! Read and write 8/16-bit PGM and grayscale PNG. Writes a small gradient in
//! every format, reads it back and reports the round-trip error.
//!
//!     cargo run --example image_io -- [image]

use phasecon::imageio::{
    decode_grayscale, encode_pgm, load_grayscale, quantize, write_map, WriteMode,
};
use phasecon::Map;

fn main() -> phasecon::Result<()> {
    if let Some(path) = std::env::args().nth(1) {
        let img = load_grayscale(&path)?;
        println!(
            "{path}: {}x{}, depth {:?}, range [{:.4}, {:.4}]",
            img.width(),
            img.height(),
            img.source_depth(),
            img.to_map().min(),
            img.to_map().max()
        );
        return Ok(());
    }

    let dir = std::env::temp_dir();
    let ramp = Map::from_fn(16, 8, |x, y| ((x + 2 * y) % 16) as f64 / 15.0);
    for name in ["ramp.pgm", "ramp.png"] {
        let path = dir.join(name);
        write_map(&ramp, &path, WriteMode::Clamp01)?;
        let back = load_grayscale(&path)?;
        let err = back.to_map().max_abs_diff(&ramp)?;
        println!(
            "{name}: depth {:?}, max round-trip error {err:.2e}",
            back.source_depth()
        );
    }

    let deep: Vec<u16> = (0..64).map(|i| (i * 1000) as u16).collect();
    let img = decode_grayscale(&encode_pgm(8, 8, &deep, 16))?;
    println!("16-bit pixel 32000 -> {:.6}", img.pixels()[32]);

    let bytes = quantize(&Map::new(2, 1, vec![0.25, 0.75])?, WriteMode::Rescale)?;
    println!("rescale {{0.25, 0.75}} -> {bytes:?}");
    Ok(())
}
