//! Deterministic synthetic test images.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::fft::{bin_frequency, Fft2};
use crate::imageio::ImageGrid;
use crate::map::Map;

fn standard_normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn constant(width: usize, height: usize, value: f64) -> Result<ImageGrid> {
    ImageGrid::new(width, height, vec![value; width * height])
}

/// Vertical step: `low` left of column `edge`, `high` from `edge` on.
pub fn step_edge(
    width: usize,
    height: usize,
    edge: usize,
    low: f64,
    high: f64,
) -> Result<ImageGrid> {
    ImageGrid::from_map(&Map::from_fn(width, height, |x, _| {
        if x < edge {
            low
        } else {
            high
        }
    }))
}

/// `0.5 + 0.5 cos(2 pi f (x cos theta + y sin theta) + phase)`, sampled about
/// the image centre.
pub fn grating(
    width: usize,
    height: usize,
    frequency: f64,
    theta: f64,
    phase: f64,
) -> Result<ImageGrid> {
    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let (s, c) = theta.sin_cos();
    ImageGrid::from_map(&Map::from_fn(width, height, |x, y| {
        let u = (x as f64 - cx) * c + (y as f64 - cy) * s;
        0.5 + 0.5 * (2.0 * PI * frequency * u + phase).cos()
    }))
}

/// Gaussian white noise with zero mean and standard deviation `std`.
pub fn white_noise(width: usize, height: usize, std: f64, seed: u64) -> Result<ImageGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pixels = (0..width * height)
        .map(|_| std * standard_normal(&mut rng))
        .collect();
    ImageGrid::new(width, height, pixels)
}

fn normalize(map: &Map) -> Map {
    let (lo, hi) = (map.min(), map.max());
    let range = (hi - lo).max(f64::MIN_POSITIVE);
    map.map(|v| (v - lo) / range)
}

/// Natural-looking texture: a `1/f` noise field with a few occluding shapes
/// (disc, bar, triangle), normalized to `[0, 1]`.
pub fn natural_texture(width: usize, height: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fft = Fft2::new(width, height);
    let mut spectrum: Vec<Complex64> = (0..width * height)
        .map(|_| Complex64::new(standard_normal(&mut rng), 0.0))
        .collect();
    fft.forward(&mut spectrum);
    for y in 0..height {
        let fy = bin_frequency(y, height);
        for x in 0..width {
            let fx = bin_frequency(x, width);
            let f = fx.hypot(fy);
            let i = y * width + x;
            spectrum[i] = if f == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                spectrum[i] / f
            };
        }
    }
    fft.inverse(&mut spectrum);
    let field = normalize(&Map::new(
        width,
        height,
        spectrum.iter().map(|c| c.re).collect(),
    )?);

    let (w, h) = (width as f64, height as f64);
    let disc = (rng.gen_range(0.25..0.75) * w, rng.gen_range(0.25..0.75) * h);
    let radius = rng.gen_range(0.12..0.2) * w.min(h);
    let bar_y = rng.gen_range(0.15..0.85) * h;
    let bar_half = rng.gen_range(0.03..0.06) * h;
    let (disc_level, bar_level, tri_level) = (
        rng.gen_range(0.6..0.9),
        rng.gen_range(0.05..0.3),
        rng.gen_range(0.4..0.7),
    );
    let scene = Map::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let base = field.get(x, y);
        let in_disc = (px - disc.0).hypot(py - disc.1) < radius;
        let in_bar = (py - bar_y).abs() < bar_half && px > 0.1 * w && px < 0.9 * w;
        let in_tri = px > 0.55 * w && py > 0.55 * h && (px - 0.55 * w) > (py - 0.55 * h) * 0.8;
        if in_disc {
            0.7 * disc_level + 0.3 * base
        } else if in_bar {
            0.8 * bar_level + 0.2 * base
        } else if in_tri {
            0.75 * tri_level + 0.25 * base
        } else {
            base
        }
    });
    ImageGrid::from_map(&normalize(&scene))
}

/// Bright blob-like lesions on a smoothly varying, mildly noisy background.
pub fn lesion_phantom(width: usize, height: usize, lesions: usize, seed: u64) -> Result<ImageGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64)> = (0..lesions)
        .map(|_| {
            (
                rng.gen_range(0.15..0.85) * width as f64,
                rng.gen_range(0.15..0.85) * height as f64,
                rng.gen_range(1.5..4.0),
            )
        })
        .collect();
    let noise: Vec<f64> = (0..width * height)
        .map(|_| 0.02 * standard_normal(&mut rng))
        .collect();
    let map = Map::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64 / width as f64, y as f64 / height as f64);
        let mut v = 0.3 + 0.1 * (PI * px).sin() * (PI * py).sin();
        for &(bx, by, r) in &blobs {
            let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
            v += 0.5 * (-d2 / (2.0 * r * r)).exp();
        }
        v + noise[y * width + x]
    });
    ImageGrid::from_map(&map.map(|v| v.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic_and_in_range() {
        let a = natural_texture(64, 48, 3).unwrap();
        let b = natural_texture(64, 48, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
        let c = lesion_phantom(64, 64, 5, 1).unwrap();
        assert!(c.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn white_noise_moments() {
        let n = white_noise(128, 128, 1.0, 9).unwrap();
        let len = n.pixels().len() as f64;
        let mean = n.pixels().iter().sum::<f64>() / len;
        let var = n.pixels().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / len;
        assert!(mean.abs() < 0.03);
        assert!((var - 1.0).abs() < 0.05);
    }

    #[test]
    fn step_edge_layout() {
        let s = step_edge(16, 8, 8, 0.0, 1.0).unwrap();
        assert_eq!(s.pixels()[7], 0.0);
        assert_eq!(s.pixels()[8], 1.0);
    }
}
