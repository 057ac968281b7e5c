//! Multi-scale phase congruency.
//!
//! Per orientation `o` the engine computes the quadrature responses of every
//! scale, the local energy `E_o`, the amplitude sum, the frequency spread
//! `s_o`, the sigmoid weight `W_o`, a Rayleigh noise threshold `T_o` and the
//! orientation map `pc_o = W_o * max(E_o - T_o, 0) / (sum_n A_no + eps)`.
//! The joint map divides the orientation numerators summed over `o` by the
//! total amplitude plus `eps`.
//!
//! Orientations are processed in parallel; every reduction runs in a fixed
//! order so results do not depend on the schedule.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::{periodic_component, Fft2};
use crate::filterbank::{build_orientation, BankParams, FrequencyPlane, OrientationBank};
use crate::imageio::ImageGrid;
use crate::map::Map;

/// Largest magnitude allowed in the sigmoid exponent.
const SIGMOID_EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcParams {
    /// Sigmoid midpoint `c`, in (0, 1).
    pub cutoff: f64,
    /// Sigmoid rate `g`.
    pub gain: f64,
    /// Noise scaling factor `k`.
    pub k_noise: f64,
    /// Shared guard against division by vanishing amplitude.
    pub epsilon: f64,
    pub bank: BankParams,
}

impl Default for PcParams {
    fn default() -> Self {
        PcParams {
            cutoff: 0.55,
            gain: 10.0,
            k_noise: 2.0,
            epsilon: 1e-4,
            bank: BankParams::default(),
        }
    }
}

impl PcParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff > 0.0 && self.cutoff < 1.0) {
            return Err(Error::Domain(format!(
                "cutoff = {} must lie in (0, 1)",
                self.cutoff
            )));
        }
        if !(self.gain > 0.0) || !self.gain.is_finite() {
            return Err(Error::Domain(format!(
                "gain = {} must be positive",
                self.gain
            )));
        }
        if !(self.k_noise >= 0.0) || !self.k_noise.is_finite() {
            return Err(Error::Domain(format!(
                "k_noise = {} must be >= 0",
                self.k_noise
            )));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Domain(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        self.bank.validate()
    }
}

/// Where the maximum scale amplitude in the frequency spread is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmaxScope {
    /// Maximum over the scales of the same orientation.
    #[default]
    PerOrientation,
    /// Maximum over every scale and orientation.
    Global,
}

/// How the image is prepared for circular filtering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Filter the periodic component, suppressing wrap-around edges.
    #[default]
    PeriodicSmooth,
    /// Filter the raw image as if it tiled the plane.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineOptions {
    pub boundary: Boundary,
    pub amax: AmaxScope,
}

/// Quadrature responses of one orientation, one entry per scale.
#[derive(Debug, Clone)]
pub struct Responses {
    pub even: Vec<Map>,
    pub odd: Vec<Map>,
}

impl Responses {
    /// `F_o`: sum of the even responses over scales.
    pub fn even_sum(&self) -> Map {
        sum_maps(&self.even)
    }

    /// `H_o`: sum of the odd responses over scales.
    pub fn odd_sum(&self) -> Map {
        sum_maps(&self.odd)
    }

    /// `A_no = sqrt(even^2 + odd^2)` for every scale.
    pub fn amplitudes(&self) -> Vec<Map> {
        self.even
            .iter()
            .zip(&self.odd)
            .map(|(e, o)| e.zip_with(o, f64::hypot).expect("same dims"))
            .collect()
    }
}

fn sum_maps(maps: &[Map]) -> Map {
    let mut acc = Map::zeros(maps[0].width(), maps[0].height());
    for m in maps {
        for (a, v) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += v;
        }
    }
    acc
}

/// `E = sqrt(F^2 + H^2)` pointwise.
pub fn local_energy(even_sum: &Map, odd_sum: &Map) -> Result<Map> {
    even_sum.zip_with(odd_sum, |f, h| (f * f + h * h).sqrt())
}

/// Pointwise maximum over a set of amplitude maps.
pub fn max_amplitude(amplitudes: &[Map]) -> Map {
    let mut acc = amplitudes[0].clone();
    for m in &amplitudes[1..] {
        for (a, &v) in acc.data_mut().iter_mut().zip(m.data()) {
            *a = a.max(v);
        }
    }
    acc
}

/// `s = (1/N) * sum_n A_n / (A_max + eps)`.
pub fn frequency_spread(amplitudes: &[Map], a_max: &Map, epsilon: f64) -> Result<Map> {
    if amplitudes.is_empty() {
        return Err(Error::Domain("at least one scale is required".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let n = amplitudes.len() as f64;
    let sum = sum_maps(amplitudes);
    sum.zip_with(a_max, |s, m| s / (n * (m + epsilon)))
}

#[inline]
pub fn sigmoid_weight(spread: f64, cutoff: f64, gain: f64) -> f64 {
    let z = (gain * (cutoff - spread)).clamp(-SIGMOID_EXP_LIMIT, SIGMOID_EXP_LIMIT);
    1.0 / (1.0 + z.exp())
}

/// `W = 1 / (1 + exp(g (c - s)))` pointwise.
pub fn weighting(spread: &Map, cutoff: f64, gain: f64) -> Map {
    spread.map(|s| sigmoid_weight(s, cutoff, gain))
}

/// Rayleigh noise model fitted to the finest-scale amplitude response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    /// Rayleigh scale of the finest-scale amplitude, from its median.
    pub finest_scale: f64,
    /// Mean of the finest-scale Rayleigh fit.
    pub finest_mean: f64,
    /// Rayleigh scale of the noise energy accumulated over all scales.
    pub total_scale: f64,
    /// `mu_R` of the accumulated noise energy.
    pub mean: f64,
    /// `sigma_R` of the accumulated noise energy.
    pub std: f64,
    /// `T = mu_R + k * sigma_R`.
    pub threshold: f64,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    let n = v.len();
    let mid = n / 2;
    let (_, &mut upper, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Noise threshold from the finest-scale amplitude map.
///
/// The Rayleigh scale is `median / sqrt(2 ln 2)`; the scale of the noise
/// summed over `n_scales` filters spaced by `eta` follows the geometric
/// series with ratio `1 / eta`.
pub fn noise_threshold(
    finest_amplitude: &Map,
    k_noise: f64,
    eta: f64,
    n_scales: usize,
) -> Result<NoiseEstimate> {
    if !(k_noise >= 0.0) {
        return Err(Error::Domain(format!("k_noise = {k_noise} must be >= 0")));
    }
    if !(eta > 1.0) || n_scales == 0 {
        return Err(Error::Domain(
            "noise model needs eta > 1 and n_scales >= 1".into(),
        ));
    }
    let finest_scale = median(finest_amplitude.data()) / (2.0 * 2f64.ln()).sqrt();
    let ratio = 1.0 / eta;
    let total_scale = finest_scale * (1.0 - ratio.powi(n_scales as i32)) / (1.0 - ratio);
    let mean = total_scale * (PI / 2.0).sqrt();
    let std = total_scale * ((4.0 - PI) / 2.0).sqrt();
    Ok(NoiseEstimate {
        finest_scale,
        finest_mean: finest_scale * (PI / 2.0).sqrt(),
        total_scale,
        mean,
        std,
        threshold: mean + k_noise * std,
    })
}

/// `W * max(E - T, 0)` pointwise.
pub fn thresholded_energy(weight: &Map, energy: &Map, threshold: f64) -> Result<Map> {
    weight.zip_with(energy, |w, e| w * (e - threshold).max(0.0))
}

/// `numerator / (amplitude_sum + eps)` pointwise.
pub fn pc_orientation(numerator: &Map, amplitude_sum: &Map, epsilon: f64) -> Result<Map> {
    numerator.zip_with(amplitude_sum, |num, a| num / (a + epsilon))
}

/// Every intermediate map of one orientation.
#[derive(Debug, Clone)]
pub struct OrientationFields {
    pub theta: f64,
    /// `F_o`
    pub even_sum: Map,
    /// `H_o`
    pub odd_sum: Map,
    /// `A_no`, finest scale first.
    pub amplitudes: Vec<Map>,
    pub amplitude_sum: Map,
    pub a_max: Map,
    pub energy: Map,
    pub spread: Map,
    pub weight: Map,
    pub noise: NoiseEstimate,
    /// `W_o * max(E_o - T_o, 0)`
    pub numerator: Map,
    pub pc: Map,
}

#[derive(Debug, Clone)]
pub struct PcFieldSet {
    pub orientations: Vec<OrientationFields>,
    /// Joint map over all orientations.
    pub joint: Map,
}

impl PcFieldSet {
    pub fn pc_maps(&self) -> Vec<&Map> {
        self.orientations.iter().map(|f| &f.pc).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.orientations.iter().map(|f| f.theta).collect()
    }
}

/// Joint phase congruency: summed numerators over total amplitude plus `eps`.
pub fn joint_pc(orientations: &[OrientationFields], epsilon: f64) -> Map {
    let first = &orientations[0];
    let mut num = Map::zeros(first.pc.width(), first.pc.height());
    let mut den = Map::zeros(first.pc.width(), first.pc.height());
    for f in orientations {
        for (a, v) in num.data_mut().iter_mut().zip(f.numerator.data()) {
            *a += v;
        }
        for (a, v) in den.data_mut().iter_mut().zip(f.amplitude_sum.data()) {
            *a += v;
        }
    }
    num.zip_with(&den, |n, d| n / (d + epsilon))
        .expect("same dims")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BankKey {
    lambda_min: u64,
    eta: u64,
    sigma: u64,
    angular_ratio: u64,
    n_scales: usize,
    n_orient: usize,
    o: usize,
}

impl BankKey {
    fn new(p: &BankParams, o: usize) -> Self {
        BankKey {
            lambda_min: p.lambda_min.to_bits(),
            eta: p.eta.to_bits(),
            sigma: p.sigma.to_bits(),
            angular_ratio: p.angular_ratio.to_bits(),
            n_scales: p.n_scales,
            n_orient: p.n_orient,
            o,
        }
    }
}

const BANK_CACHE_LIMIT: usize = 256;

/// Image-bound phase congruency evaluator.
///
/// Holds the image spectrum and a cache of orientation filter banks keyed on
/// the bank parameters, so repeated evaluations that only change the weighting
/// or noise parameters do not rebuild filters.
pub struct PcEngine {
    width: usize,
    height: usize,
    fft: Fft2,
    plane: FrequencyPlane,
    spectrum: Vec<Complex64>,
    options: EngineOptions,
    cache: Mutex<HashMap<BankKey, Arc<OrientationBank>>>,
}

impl std::fmt::Debug for PcEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PcEngine")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("options", &self.options)
            .finish()
    }
}

impl PcEngine {
    pub fn new(image: &ImageGrid) -> Self {
        Self::with_options(image, EngineOptions::default())
    }

    pub fn with_options(image: &ImageGrid, options: EngineOptions) -> Self {
        let (width, height) = (image.width(), image.height());
        // Pad odd sides to even by repeating the last row/column.
        let (pw, ph) = (width + width % 2, height + height % 2);
        let padded = Map::from_fn(pw, ph, |x, y| {
            image.pixels()[y.min(height - 1) * width + x.min(width - 1)]
        });
        let fft = Fft2::new(pw, ph);
        let signal = match options.boundary {
            Boundary::PeriodicSmooth => periodic_component(&padded, &fft),
            Boundary::Periodic => padded,
        };
        let spectrum = fft.forward_real(signal.data());
        PcEngine {
            width,
            height,
            plane: FrequencyPlane::new(pw, ph),
            fft,
            spectrum,
            options,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Size of the transform grid, after padding to even sides.
    pub fn padded_dims(&self) -> (usize, usize) {
        self.fft.dims()
    }

    pub fn options(&self) -> EngineOptions {
        self.options
    }

    pub fn orientation_bank(&self, bank: &BankParams, o: usize) -> Result<Arc<OrientationBank>> {
        let key = BankKey::new(bank, o);
        if let Some(b) = self.cache.lock().expect("bank cache").get(&key) {
            return Ok(Arc::clone(b));
        }
        let built = Arc::new(build_orientation(bank, o, &self.plane)?);
        let mut cache = self.cache.lock().expect("bank cache");
        if cache.len() >= BANK_CACHE_LIMIT {
            cache.clear();
        }
        cache.insert(key, Arc::clone(&built));
        Ok(built)
    }

    /// Even/odd responses of every scale of one orientation bank.
    pub fn responses(&self, bank: &OrientationBank) -> Result<Responses> {
        let (pw, ph) = self.fft.dims();
        if bank.grids.iter().any(|g| g.len() != pw * ph) {
            return Err(Error::Dimension {
                expected: (pw, ph),
                actual: (bank.grids.first().map_or(0, Vec::len), 1),
            });
        }
        let mut even = Vec::with_capacity(bank.grids.len());
        let mut odd = Vec::with_capacity(bank.grids.len());
        let mut buf = vec![Complex64::new(0.0, 0.0); pw * ph];
        for grid in &bank.grids {
            for ((b, s), g) in buf.iter_mut().zip(&self.spectrum).zip(grid) {
                *b = s * g;
            }
            self.fft.inverse(&mut buf);
            even.push(Map::from_fn(self.width, self.height, |x, y| {
                buf[y * pw + x].re
            }));
            odd.push(Map::from_fn(self.width, self.height, |x, y| {
                buf[y * pw + x].im
            }));
        }
        Ok(Responses { even, odd })
    }

    fn orientation_stage1(&self, params: &PcParams, o: usize) -> Result<(f64, Responses)> {
        params.validate()?;
        let bank = self.orientation_bank(&params.bank, o)?;
        Ok((bank.theta, self.responses(&bank)?))
    }

    fn orientation_stage2(
        params: &PcParams,
        theta: f64,
        responses: &Responses,
        global_max: Option<&Map>,
    ) -> Result<OrientationFields> {
        let amplitudes = responses.amplitudes();
        let even_sum = responses.even_sum();
        let odd_sum = responses.odd_sum();
        let amplitude_sum = sum_maps(&amplitudes);
        let a_max = match global_max {
            Some(m) => m.clone(),
            None => max_amplitude(&amplitudes),
        };
        let energy = local_energy(&even_sum, &odd_sum)?;
        let spread = frequency_spread(&amplitudes, &a_max, params.epsilon)?;
        let weight = weighting(&spread, params.cutoff, params.gain);
        let noise = noise_threshold(
            &amplitudes[0],
            params.k_noise,
            params.bank.eta,
            params.bank.n_scales,
        )?;
        let numerator = thresholded_energy(&weight, &energy, noise.threshold)?;
        let pc = pc_orientation(&numerator, &amplitude_sum, params.epsilon)?;
        Ok(OrientationFields {
            theta,
            even_sum,
            odd_sum,
            amplitudes,
            amplitude_sum,
            a_max,
            energy,
            spread,
            weight,
            noise,
            numerator,
            pc,
        })
    }

    /// Fields of a single orientation `o` of an `n_orient`-orientation bank.
    ///
    /// With [`AmaxScope::Global`] the maximum still spans only this
    /// orientation; use [`PcEngine::compute`] for the global variant.
    pub fn orientation_fields(&self, params: &PcParams, o: usize) -> Result<OrientationFields> {
        let (theta, responses) = self.orientation_stage1(params, o)?;
        Self::orientation_stage2(params, theta, &responses, None)
    }

    /// Full field set with the same parameters for every orientation.
    pub fn compute(&self, params: &PcParams) -> Result<PcFieldSet> {
        let per = vec![*params; params.bank.n_orient];
        self.compute_per_orientation(&per)
    }

    /// Full field set with one parameter set per orientation.
    ///
    /// Every entry must agree on `n_orient`, which must equal the slice length.
    /// The joint map uses the `epsilon` of the first entry.
    pub fn compute_per_orientation(&self, params: &[PcParams]) -> Result<PcFieldSet> {
        let n_orient = params.len();
        if n_orient == 0 {
            return Err(Error::Domain("at least one orientation is required".into()));
        }
        if let Some(p) = params.iter().find(|p| p.bank.n_orient != n_orient) {
            return Err(Error::Domain(format!(
                "orientation parameter sets disagree: n_orient = {} but {} sets given",
                p.bank.n_orient, n_orient
            )));
        }
        let stage1: Vec<(f64, Responses)> = params
            .par_iter()
            .enumerate()
            .map(|(o, p)| self.orientation_stage1(p, o))
            .collect::<Result<_>>()?;
        let global_max = match self.options.amax {
            AmaxScope::PerOrientation => None,
            AmaxScope::Global => {
                let all: Vec<Map> = stage1
                    .iter()
                    .map(|(_, r)| max_amplitude(&r.amplitudes()))
                    .collect();
                Some(max_amplitude(&all))
            }
        };
        let orientations: Vec<OrientationFields> = params
            .par_iter()
            .zip(stage1.par_iter())
            .map(|(p, (theta, r))| Self::orientation_stage2(p, *theta, r, global_max.as_ref()))
            .collect::<Result<_>>()?;
        let joint = joint_pc(&orientations, params[0].epsilon);
        Ok(PcFieldSet {
            orientations,
            joint,
        })
    }
}

/// Quadrature responses of orientation `o` of a bank built for `image`.
///
/// The bank must have been built for the engine's padded size (odd sides
/// rounded up to even).
pub fn orientation_responses(
    image: &ImageGrid,
    bank: &crate::filterbank::FilterBank,
    o: usize,
    options: EngineOptions,
) -> Result<Responses> {
    let engine = PcEngine::with_options(image, options);
    if bank.dims() != engine.padded_dims() {
        return Err(Error::Dimension {
            expected: engine.padded_dims(),
            actual: bank.dims(),
        });
    }
    if o >= bank.orientations().len() {
        return Err(Error::Domain(format!("orientation index {o} out of range")));
    }
    engine.responses(bank.orientation(o))
}
