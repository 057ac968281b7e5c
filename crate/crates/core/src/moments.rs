//! Maximum and minimum moments of the per-orientation PC maps.
//!
//! With `a_o = PC_o cos(theta_o)` and `b_o = PC_o sin(theta_o)`:
//! `alpha = sum a_o^2`, `gamma = sum b_o^2`, `beta = 2 sum a_o b_o`, and the
//! moments are the principal values
//! `M, m = (alpha + gamma +/- sqrt(beta^2 + (alpha - gamma)^2)) / 2`.

use crate::error::{Error, Result};
use crate::map::Map;

#[derive(Debug, Clone)]
pub struct CovarianceTerms {
    pub alpha: Map,
    pub gamma: Map,
    pub beta: Map,
}

#[derive(Debug, Clone)]
pub struct MomentMaps {
    pub alpha: Map,
    pub gamma: Map,
    pub beta: Map,
    /// Maximum moment `M`.
    pub m_max: Map,
    /// Minimum moment `m`.
    pub m_min: Map,
    pub thetas: Vec<f64>,
}

/// Weights of the combined cost map `mu1 * M + mu2 * m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub mu1: f64,
    pub mu2: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights { mu1: 1.0, mu2: 1.0 }
    }
}

impl CostWeights {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        let w = CostWeights { mu1, mu2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_unit(&self) -> bool {
        self.mu1 == 1.0 && self.mu2 == 1.0
    }
}

pub fn covariance_terms<M: AsRef<Map>>(pc_maps: &[M], thetas: &[f64]) -> Result<CovarianceTerms> {
    if pc_maps.is_empty() {
        return Err(Error::Domain(
            "at least one orientation map is required".into(),
        ));
    }
    if pc_maps.len() != thetas.len() {
        return Err(Error::Domain(format!(
            "{} maps but {} orientation angles",
            pc_maps.len(),
            thetas.len()
        )));
    }
    let first = pc_maps[0].as_ref();
    let (w, h) = first.dims();
    let mut alpha = Map::zeros(w, h);
    let mut gamma = Map::zeros(w, h);
    let mut beta = Map::zeros(w, h);
    // Accumulate in ascending angle so relabeling orientations cannot change
    // the floating-point sums.
    let mut order: Vec<usize> = (0..thetas.len()).collect();
    order.sort_by(|&a, &b| thetas[a].total_cmp(&thetas[b]));
    for &o in &order {
        let (pc, theta) = (pc_maps[o].as_ref(), thetas[o]);
        first.ensure_same_dims(pc)?;
        let (s, c) = theta.sin_cos();
        for (i, &p) in pc.data().iter().enumerate() {
            let a = p * c;
            let b = p * s;
            alpha.data_mut()[i] += a * a;
            gamma.data_mut()[i] += b * b;
            beta.data_mut()[i] += 2.0 * a * b;
        }
    }
    Ok(CovarianceTerms { alpha, gamma, beta })
}

#[inline]
fn principal_values(alpha: f64, gamma: f64, beta: f64) -> (f64, f64) {
    let d = alpha - gamma;
    let root = (beta * beta + d * d).max(0.0).sqrt();
    let trace = alpha + gamma;
    (0.5 * (trace + root), 0.5 * (trace - root))
}

/// `(M, m)` pointwise from the covariance terms.
pub fn moment_maps(alpha: &Map, gamma: &Map, beta: &Map) -> Result<(Map, Map)> {
    alpha.ensure_same_dims(gamma)?;
    alpha.ensure_same_dims(beta)?;
    let (w, h) = alpha.dims();
    let mut m_max = Map::zeros(w, h);
    let mut m_min = Map::zeros(w, h);
    for i in 0..alpha.data().len() {
        let (hi, lo) = principal_values(alpha.data()[i], gamma.data()[i], beta.data()[i]);
        m_max.data_mut()[i] = hi;
        m_min.data_mut()[i] = lo;
    }
    Ok((m_max, m_min))
}

pub fn compute_moments<M: AsRef<Map>>(pc_maps: &[M], thetas: &[f64]) -> Result<MomentMaps> {
    let CovarianceTerms { alpha, gamma, beta } = covariance_terms(pc_maps, thetas)?;
    let (m_max, m_min) = moment_maps(&alpha, &gamma, &beta)?;
    Ok(MomentMaps {
        alpha,
        gamma,
        beta,
        m_max,
        m_min,
        thetas: thetas.to_vec(),
    })
}

/// `mu1 * M + mu2 * m` pointwise.
pub fn combined_cost(m_max: &Map, m_min: &Map, weights: CostWeights) -> Result<Map> {
    weights.validate()?;
    m_max.zip_with(m_min, |hi, lo| weights.mu1 * hi + weights.mu2 * lo)
}

/// Alternative closed form `(sum PC^2 + sqrt(sum PC^4)) / 2` for the maximum
/// moment. It agrees with [`moment_maps`] for a single orientation only;
/// kept as a diagnostic.
pub fn max_moment_closed_form<M: AsRef<Map>>(pc_maps: &[M]) -> Result<Map> {
    let first = pc_maps
        .first()
        .ok_or_else(|| Error::Domain("at least one orientation map is required".into()))?
        .as_ref();
    let (w, h) = first.dims();
    let mut sum2 = Map::zeros(w, h);
    let mut sum4 = Map::zeros(w, h);
    for pc in pc_maps {
        let pc = pc.as_ref();
        first.ensure_same_dims(pc)?;
        for (i, &p) in pc.data().iter().enumerate() {
            let p2 = p * p;
            sum2.data_mut()[i] += p2;
            sum4.data_mut()[i] += p2 * p2;
        }
    }
    sum2.zip_with(&sum4, |s2, s4| 0.5 * (s2 + s4.sqrt()))
}

/// Largest pointwise gap between the closed form and the exact maximum moment.
pub fn closed_form_discrepancy<M: AsRef<Map>>(pc_maps: &[M], thetas: &[f64]) -> Result<f64> {
    let exact = compute_moments(pc_maps, thetas)?;
    max_moment_closed_form(pc_maps)?.max_abs_diff(&exact.m_max)
}

impl AsRef<Map> for Map {
    fn as_ref(&self) -> &Map {
        self
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn scalar(v: f64) -> Map {
        Map::filled(1, 1, v)
    }

    #[test]
    fn single_axis_aligned_orientation() {
        let t = covariance_terms(&[scalar(0.7)], &[0.0]).unwrap();
        assert_eq!(t.alpha.data()[0], 0.7 * 0.7);
        assert_eq!(t.gamma.data()[0], 0.0);
        assert_eq!(t.beta.data()[0], 0.0);
        let (hi, lo) = moment_maps(&t.alpha, &t.gamma, &t.beta).unwrap();
        assert_eq!(hi.data()[0], 0.7 * 0.7);
        assert_eq!(lo.data()[0], 0.0);
    }

    #[test]
    fn two_perpendicular_orientations() {
        let t = covariance_terms(&[scalar(0.3), scalar(0.8)], &[0.0, PI / 2.0]).unwrap();
        assert!((t.alpha.data()[0] - 0.09).abs() < 1e-15);
        assert!((t.gamma.data()[0] - 0.64).abs() < 1e-15);
        assert!(t.beta.data()[0].abs() < 1e-15);
    }

    #[test]
    fn zero_maps_give_zero_terms() {
        let z = Map::zeros(4, 4);
        let t = covariance_terms(&[z.clone(), z.clone(), z], &[0.0, 1.0, 2.0]).unwrap();
        for m in [&t.alpha, &t.gamma, &t.beta] {
            assert!(m.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn hand_evaluated_moments() {
        let (hi, lo) = moment_maps(&scalar(0.36), &scalar(0.64), &scalar(0.0)).unwrap();
        assert!((hi.data()[0] - 0.64).abs() < 1e-15);
        assert!((lo.data()[0] - 0.36).abs() < 1e-15);
        let (hi, lo) = moment_maps(&scalar(0.5), &scalar(0.5), &scalar(1.0)).unwrap();
        assert_eq!(hi.data()[0], 1.0);
        assert_eq!(lo.data()[0], 0.0);
    }

    #[test]
    fn cost_weight_cases() {
        let hi = Map::new(2, 1, vec![0.9, 0.4]).unwrap();
        let lo = Map::new(2, 1, vec![0.1, 0.2]).unwrap();
        let c = combined_cost(&hi, &lo, CostWeights::new(1.0, 0.0).unwrap()).unwrap();
        assert_eq!(c, hi);
        let c = combined_cost(&hi, &lo, CostWeights::new(0.0, 0.0).unwrap()).unwrap();
        assert!(c.data().iter().all(|&v| v == 0.0));
        assert!(CostWeights::new(1.2, 0.0).is_err());
        assert!(CostWeights::new(0.5, -0.1).is_err());
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        let r = covariance_terms(&[Map::zeros(4, 4), Map::zeros(4, 5)], &[0.0, 1.0]);
        assert!(matches!(r, Err(Error::Dimension { .. })));
        assert!(covariance_terms(&[Map::zeros(4, 4)], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn closed_form_matches_for_one_orientation_only() {
        let pc = Map::from_fn(8, 8, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0);
        assert!(closed_form_discrepancy(std::slice::from_ref(&pc), &[0.4]).unwrap() < 1e-12);
        let other = pc.map(|v| 1.0 - v);
        let thetas = [0.0, PI / 2.0];
        assert!(closed_form_discrepancy(&[pc, other], &thetas).unwrap() > 1e-3);
    }

    proptest! {
        #[test]
        fn moment_identities(
            pcs in prop::collection::vec(0.0f64..1.0, 1..7),
        ) {
            let o = pcs.len();
            let thetas: Vec<f64> = (0..o).map(|i| i as f64 * PI / o as f64).collect();
            let maps: Vec<Map> = pcs.iter().map(|&p| scalar(p)).collect();
            let mm = compute_moments(&maps, &thetas).unwrap();
            let (hi, lo) = (mm.m_max.data()[0], mm.m_min.data()[0]);
            prop_assert!(lo >= -1e-12);
            prop_assert!(hi >= lo);
            let sum_sq: f64 = pcs.iter().map(|p| p * p).sum();
            prop_assert!((hi + lo - sum_sq).abs() <= 1e-10);
        }

        #[test]
        fn relabeling_orientations_is_bitwise_invariant(
            (pcs, perm) in prop::collection::vec(0.0f64..1.0, 2..7).prop_flat_map(|pcs| {
                let idx: Vec<usize> = (0..pcs.len()).collect();
                (Just(pcs), Just(idx).prop_shuffle())
            }),
        ) {
            let o = pcs.len();
            let thetas: Vec<f64> = (0..o).map(|i| i as f64 * PI / o as f64).collect();
            let maps: Vec<Map> = pcs.iter().map(|&p| scalar(p)).collect();
            let a = compute_moments(&maps, &thetas).unwrap();
            let pm: Vec<Map> = perm.iter().map(|&i| maps[i].clone()).collect();
            let pt: Vec<f64> = perm.iter().map(|&i| thetas[i]).collect();
            let b = compute_moments(&pm, &pt).unwrap();
            prop_assert_eq!(a.m_max.data()[0].to_bits(), b.m_max.data()[0].to_bits());
            prop_assert_eq!(a.m_min.data()[0].to_bits(), b.m_min.data()[0].to_bits());
        }
    }
}
