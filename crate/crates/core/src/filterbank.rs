//! Log-Gabor quadrature filter bank, built directly in the frequency domain.
//!
//! Each transfer grid is the product of a radial log-Gabor gain and a
//! Gaussian angular gain centred on the filter orientation. The angular term
//! is one-sided (it decays to its minimum on the opposite half-plane), so the
//! inverse transform of `spectrum * grid` is a complex response whose real
//! part is the even-symmetric filter output and whose imaginary part is the
//! odd-symmetric one.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft::bin_frequency;
use crate::imageio::MIN_SIDE;
use crate::map::Map;

/// Default ratio of angular Gaussian std to orientation spacing.
pub const DEFAULT_ANGULAR_RATIO: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankParams {
    /// Smallest wavelength in pixels (largest centre frequency).
    pub lambda_min: f64,
    /// Scale multiplier between successive filters.
    pub eta: f64,
    /// Bandwidth parameter of the radial gain, in (0, 1).
    pub sigma: f64,
    pub n_scales: usize,
    pub n_orient: usize,
    /// Angular std as a fraction of the orientation spacing `pi / n_orient`.
    pub angular_ratio: f64,
}

impl Default for BankParams {
    fn default() -> Self {
        BankParams {
            lambda_min: 3.0,
            eta: 2.1,
            sigma: 0.55,
            n_scales: 4,
            n_orient: 6,
            angular_ratio: DEFAULT_ANGULAR_RATIO,
        }
    }
}

impl BankParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_min >= 2.0) {
            return Err(Error::Domain(format!(
                "lambda_min = {} is below the Nyquist wavelength of 2 pixels",
                self.lambda_min
            )));
        }
        check_sigma(self.sigma)?;
        if !(self.eta > 1.0) || !self.eta.is_finite() {
            return Err(Error::Domain(format!("eta = {} must exceed 1", self.eta)));
        }
        if self.n_scales == 0 {
            return Err(Error::Domain("n_scales must be at least 1".into()));
        }
        if self.n_orient == 0 {
            return Err(Error::Domain("n_orient must be at least 1".into()));
        }
        if !(self.angular_ratio > 0.0) || !self.angular_ratio.is_finite() {
            return Err(Error::Domain(format!(
                "angular_ratio = {} must be positive",
                self.angular_ratio
            )));
        }
        Ok(())
    }

    /// Orientation angle of filter `o` (zero-based), in `[0, pi)`.
    pub fn theta(&self, o: usize) -> f64 {
        o as f64 * PI / self.n_orient as f64
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n_orient).map(|o| self.theta(o)).collect()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("sigma = {sigma} must lie in (0, 1)")))
    }
}

/// Radial log-Gabor gain at frequency `f` for a filter centred at `f_hat`.
///
/// Zero at DC, where the log-Gabor has no finite value.
pub fn radial_gain(f: f64, f_hat: f64, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if !(f_hat > 0.0) {
        return Err(Error::Domain(format!(
            "centre frequency {f_hat} must be positive"
        )));
    }
    if f < 0.0 || f.is_nan() {
        return Err(Error::Domain(format!("frequency {f} must be non-negative")));
    }
    Ok(radial_gain_unchecked(f, f_hat, sigma.ln()))
}

#[inline]
fn radial_gain_unchecked(f: f64, f_hat: f64, log_sigma: f64) -> f64 {
    if f == 0.0 {
        return 0.0;
    }
    let r = (f / f_hat).ln();
    (-(r * r) / (2.0 * log_sigma * log_sigma)).exp()
}

/// Centre frequencies `1 / (lambda_min * eta^(n-1))`, `n = 1..=n_scales`.
pub fn center_frequencies(lambda_min: f64, eta: f64, n_scales: usize) -> Vec<f64> {
    (0..n_scales)
        .map(|n| 1.0 / (lambda_min * eta.powi(n as i32)))
        .collect()
}

/// Wrap an angle difference into `(-pi, pi]`.
#[inline]
pub fn wrap_angle(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d <= -PI {
        d += 2.0 * PI;
    }
    d
}

/// Angular gain for a frequency bin at angle `phi`, filter angle `theta`.
#[inline]
pub fn angular_gain(phi: f64, theta: f64, std: f64) -> f64 {
    let d = wrap_angle(phi - theta);
    (-(d * d) / (2.0 * std * std)).exp()
}

/// Frequency-plane polar coordinates of every DFT bin.
///
/// `phi` is measured from the +x axis towards +y (rows grow downwards).
#[derive(Debug, Clone)]
pub struct FrequencyPlane {
    width: usize,
    height: usize,
    radius: Vec<f64>,
    phi: Vec<f64>,
}

impl FrequencyPlane {
    pub fn new(width: usize, height: usize) -> Self {
        let mut radius = Vec::with_capacity(width * height);
        let mut phi = Vec::with_capacity(width * height);
        for y in 0..height {
            let fy = bin_frequency(y, height);
            for x in 0..width {
                let fx = bin_frequency(x, width);
                radius.push(fx.hypot(fy));
                phi.push(fy.atan2(fx));
            }
        }
        FrequencyPlane {
            width,
            height,
            radius,
            phi,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn radius(&self) -> &[f64] {
        &self.radius
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }
}

/// All scales of one orientation.
#[derive(Debug, Clone)]
pub struct OrientationBank {
    pub theta: f64,
    pub center_freqs: Vec<f64>,
    /// One transfer grid per scale, finest first; row-major, DFT layout.
    pub grids: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    params: BankParams,
    width: usize,
    height: usize,
    orientations: Vec<OrientationBank>,
}

impl FilterBank {
    pub fn params(&self) -> &BankParams {
        &self.params
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn orientations(&self) -> &[OrientationBank] {
        &self.orientations
    }

    pub fn orientation(&self, o: usize) -> &OrientationBank {
        &self.orientations[o]
    }

    pub fn center_freqs(&self) -> Vec<f64> {
        center_frequencies(
            self.params.lambda_min,
            self.params.eta,
            self.params.n_scales,
        )
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.orientations.iter().map(|b| b.theta).collect()
    }

    /// Transfer grid of orientation `o`, scale `n` as a map (DFT layout).
    pub fn grid_map(&self, o: usize, n: usize) -> Map {
        Map::new(
            self.width,
            self.height,
            self.orientations[o].grids[n].clone(),
        )
        .expect("grid dimensions")
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < MIN_SIDE || height < MIN_SIDE {
        return Err(Error::Domain(format!(
            "bank size {width}x{height} is below {MIN_SIDE}x{MIN_SIDE}"
        )));
    }
    Ok(())
}

/// Build the filters of orientation `o` (zero-based) on a precomputed plane.
pub fn build_orientation(
    params: &BankParams,
    o: usize,
    plane: &FrequencyPlane,
) -> Result<OrientationBank> {
    params.validate()?;
    if o >= params.n_orient {
        return Err(Error::Domain(format!(
            "orientation index {o} out of range for {} orientations",
            params.n_orient
        )));
    }
    let (width, height) = plane.dims();
    check_dims(width, height)?;
    let theta = params.theta(o);
    let std = params.angular_ratio * PI / params.n_orient as f64;
    let angular: Vec<f64> = plane
        .phi()
        .iter()
        .map(|&phi| angular_gain(phi, theta, std))
        .collect();
    let center_freqs = center_frequencies(params.lambda_min, params.eta, params.n_scales);
    let log_sigma = params.sigma.ln();
    let grids = center_freqs
        .iter()
        .map(|&f_hat| {
            plane
                .radius()
                .iter()
                .zip(&angular)
                .map(|(&r, &a)| radial_gain_unchecked(r, f_hat, log_sigma) * a)
                .collect()
        })
        .collect();
    Ok(OrientationBank {
        theta,
        center_freqs,
        grids,
    })
}

/// Build every orientation and scale for a `width x height` spectrum.
pub fn build_bank(params: &BankParams, width: usize, height: usize) -> Result<FilterBank> {
    params.validate()?;
    check_dims(width, height)?;
    let plane = FrequencyPlane::new(width, height);
    let orientations = (0..params.n_orient)
        .map(|o| build_orientation(params, o, &plane))
        .collect::<Result<Vec<_>>>()?;
    Ok(FilterBank {
        params: *params,
        width,
        height,
        orientations,
    })
}

/// Viewable copy of a transfer grid with DC moved to the centre.
pub fn centered_grid(bank: &FilterBank, o: usize, n: usize) -> Map {
    let (w, h) = bank.dims();
    let grid = &bank.orientation(o).grids[n];
    Map::from_fn(w, h, |x, y| {
        let sx = (x + w.div_ceil(2)) % w;
        let sy = (y + h.div_ceil(2)) % h;
        grid[sy * w + sx]
    })
}
