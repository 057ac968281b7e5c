//! Planned 2D FFTs over row-major buffers.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::map::Map;

/// Forward and inverse 2D transforms for a fixed `width x height`.
#[derive(Clone)]
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn transform(&self, buf: &mut [Complex64], rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) {
        let (w, h) = (self.width, self.height);
        debug_assert_eq!(buf.len(), w * h);
        rows.process(buf);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for x in 0..w {
            for y in 0..h {
                column[y] = buf[y * w + x];
            }
            cols.process(&mut column);
            for y in 0..h {
                buf[y * w + x] = column[y];
            }
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
    }

    /// Normalized inverse: `inverse(forward(x)) == x`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / (self.width * self.height) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_real(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

/// Signed DFT frequency of bin `k` of an `n`-point transform, in cycles/sample.
#[inline]
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

/// Periodic component of the periodic-plus-smooth decomposition.
///
/// The smooth component absorbs the jumps between opposite image borders, so
/// circular filtering of the periodic part does not respond to the wrap-around
/// edge. The mean of the image is preserved.
pub fn periodic_component(map: &Map, fft: &Fft2) -> Map {
    let (w, h) = map.dims();
    assert_eq!(fft.dims(), (w, h));
    let mut boundary = vec![Complex64::new(0.0, 0.0); w * h];
    for x in 0..w {
        let d = map.get(x, h - 1) - map.get(x, 0);
        boundary[x].re += d;
        boundary[(h - 1) * w + x].re -= d;
    }
    for y in 0..h {
        let d = map.get(w - 1, y) - map.get(0, y);
        boundary[y * w].re += d;
        boundary[y * w + w - 1].re -= d;
    }
    fft.forward(&mut boundary);
    for y in 0..h {
        let cy = (2.0 * PI * y as f64 / h as f64).cos();
        for x in 0..w {
            let cx = (2.0 * PI * x as f64 / w as f64).cos();
            let denom = 2.0 * cx + 2.0 * cy - 4.0;
            let i = y * w + x;
            boundary[i] = if x == 0 && y == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                boundary[i] / denom
            };
        }
    }
    fft.inverse(&mut boundary);
    let data = map
        .data()
        .iter()
        .zip(&boundary)
        .map(|(&v, s)| v - s.re)
        .collect();
    Map::new(w, h, data).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_undoes_forward() {
        let fft = Fft2::new(6, 4);
        let data: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut buf = fft.forward_real(&data);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a.re - b).abs() < 1e-12 && a.im.abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_naive_dft() {
        let (w, h) = (5, 4);
        let fft = Fft2::new(w, h);
        let data: Vec<f64> = (0..w * h).map(|i| ((i * i) % 7) as f64).collect();
        let out = fft.forward_real(&data);
        for v in 0..h {
            for u in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..h {
                    for x in 0..w {
                        let phase = -2.0
                            * PI
                            * (u as f64 * x as f64 / w as f64 + v as f64 * y as f64 / h as f64);
                        acc += Complex64::from_polar(data[y * w + x], phase);
                    }
                }
                assert!((acc - out[v * w + u]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn bin_frequency_layout() {
        let f: Vec<f64> = (0..4).map(|k| bin_frequency(k, 4)).collect();
        assert_eq!(f, vec![0.0, 0.25, -0.5, -0.25]);
        let f: Vec<f64> = (0..5).map(|k| bin_frequency(k, 5)).collect();
        assert_eq!(f, vec![0.0, 0.2, 0.4, -0.4, -0.2]);
    }

    #[test]
    fn periodic_component_leaves_periodic_images_alone() {
        let (w, h) = (16, 12);
        let map = Map::from_fn(w, h, |x, y| {
            (2.0 * PI * x as f64 / w as f64).cos() + (2.0 * PI * 2.0 * y as f64 / h as f64).sin()
        });
        let fft = Fft2::new(w, h);
        let p = periodic_component(&map, &fft);
        // A truly periodic image still has nonzero border differences, but
        // this one is smooth across the wrap so the correction is small.
        assert!(p.max_abs_diff(&map).unwrap() < 0.5);
        let mean = |m: &Map| m.data().iter().sum::<f64>() / m.data().len() as f64;
        assert!((mean(&p) - mean(&map)).abs() < 1e-12);
    }

    #[test]
    fn periodic_component_of_constant_is_constant() {
        let map = Map::filled(10, 8, 0.3);
        let p = periodic_component(&map, &Fft2::new(10, 8));
        assert!(p.max_abs_diff(&map).unwrap() < 1e-14);
    }

    #[test]
    fn periodic_component_removes_wrap_jump() {
        let (w, h) = (16, 16);
        let ramp = Map::from_fn(w, h, |x, _| x as f64);
        let p = periodic_component(&ramp, &Fft2::new(w, h));
        let jump_before = (ramp.get(w - 1, 8) - ramp.get(0, 8)).abs();
        let jump_after = (p.get(w - 1, 8) - p.get(0, 8)).abs();
        assert!(jump_after < jump_before / 5.0);
    }
}
