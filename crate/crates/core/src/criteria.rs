//! Matrix criteria over PC and moment maps.
//!
//! A map of `height x width` pixels is read as a `height x width` matrix.
//! Every score is oriented so that larger is better.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::map::Map;
use crate::moments::{compute_moments, CostWeights};

/// Ratio `sigma_min / sigma_max` below which a matrix counts as singular.
pub const RANK_DEFICIENT_RATIO: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    /// Maximum absolute column sum.
    One,
    /// Largest singular value.
    Two,
    /// Maximum absolute row sum.
    Inf,
    Frobenius,
    /// p-norm of the singular values, `p >= 1`.
    Schatten(f64),
}

impl NormKind {
    pub fn schatten(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(NormKind::Schatten(p))
        } else {
            Err(Error::Domain(format!(
                "Schatten p = {p} is not supported; p must be finite and >= 1"
            )))
        }
    }

    /// Unitarily invariant norms built from singular values (Schatten family,
    /// with the two-norm as its `p = inf` member).
    pub fn is_schatten_family(&self) -> bool {
        matches!(
            self,
            NormKind::Two | NormKind::Frobenius | NormKind::Schatten(_)
        )
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::One => write!(f, "one"),
            NormKind::Two => write!(f, "two"),
            NormKind::Inf => write!(f, "inf"),
            NormKind::Frobenius => write!(f, "fro"),
            NormKind::Schatten(p) => write!(f, "schatten:{p}"),
        }
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "one" | "1" => Ok(NormKind::One),
            "two" | "2" => Ok(NormKind::Two),
            "inf" => Ok(NormKind::Inf),
            "fro" | "frobenius" | "F" => Ok(NormKind::Frobenius),
            other => match other.strip_prefix("schatten:") {
                Some(p) => {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::Config(format!("bad Schatten order in '{other}'")))?;
                    NormKind::schatten(p).map_err(|e| Error::Config(e.to_string()))
                }
                None => Err(Error::Config(format!(
                    "unknown norm '{other}' (expected one|two|inf|fro|schatten:P)"
                ))),
            },
        }
    }
}

pub fn to_matrix(map: &Map) -> DMatrix<f64> {
    DMatrix::from_row_slice(map.height(), map.width(), map.data())
}

fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

fn schatten_from_singular_values(sv: &[f64], p: f64) -> f64 {
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    // Scale by the largest value so large p cannot overflow.
    let sum: f64 = sv.iter().map(|&s| (s / top).powf(p)).sum();
    top * sum.powf(1.0 / p)
}

pub fn matrix_norm(a: &DMatrix<f64>, kind: NormKind) -> Result<f64> {
    if a.iter().any(|v| v.is_nan()) {
        return Err(Error::Numerical(
            "matrix norm of a matrix with NaN entries".into(),
        ));
    }
    Ok(match kind {
        NormKind::One => a
            .column_iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Inf => a
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max),
        NormKind::Frobenius => a.iter().map(|v| v * v).sum::<f64>().sqrt(),
        NormKind::Two => singular_values(a).into_iter().fold(0.0, f64::max),
        NormKind::Schatten(p) => schatten_from_singular_values(&singular_values(a), p),
    })
}

pub fn map_norm(map: &Map, kind: NormKind) -> Result<f64> {
    matrix_norm(&to_matrix(map), kind)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    /// `log |det A|`; `-inf` when rank deficient.
    pub log_abs: f64,
    /// Sign of the determinant: -1, 0 or 1.
    pub sign: f64,
    pub rank_deficient: bool,
}

/// `log |det A|` as the sum of log singular values, which stays finite where
/// the determinant itself underflows.
pub fn log_abs_det(a: &DMatrix<f64>) -> Result<LogDet> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(Error::NonSquare { rows, cols });
    }
    if rows == 0 {
        return Ok(LogDet {
            log_abs: 0.0,
            sign: 1.0,
            rank_deficient: false,
        });
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "determinant of a non-finite matrix".into(),
        ));
    }
    let zero_line = a.row_iter().any(|r| r.iter().all(|&v| v == 0.0))
        || a.column_iter().any(|c| c.iter().all(|&v| v == 0.0));
    let sv = singular_values(a);
    let top = sv.iter().copied().fold(0.0, f64::max);
    let bottom = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let lu = a.clone().lu();
    let u_diag = lu.u().diagonal();
    let zero_pivot = u_diag.iter().any(|&v| v == 0.0);
    let rank_deficient =
        zero_line || zero_pivot || top == 0.0 || bottom / top < RANK_DEFICIENT_RATIO;
    if rank_deficient {
        return Ok(LogDet {
            log_abs: f64::NEG_INFINITY,
            sign: 0.0,
            rank_deficient: true,
        });
    }
    let negatives = u_diag.iter().filter(|&&v| v < 0.0).count();
    let mut sign: f64 = lu.p().determinant();
    if negatives % 2 == 1 {
        sign = -sign;
    }
    Ok(LogDet {
        log_abs: sv.iter().map(|s| s.ln()).sum(),
        sign,
        rank_deficient: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriterionKind {
    /// `log |det M|` of the combined cost map.
    DOptimalJoint,
    /// Norm of the combined cost map.
    NormJoint,
    /// `log |det PC_o^2|` of one orientation.
    DOptimalPerOrientation,
    /// Norm of `PC_o^2` of one orientation.
    NormPerOrientation,
    /// `(|mu1| + |mu2|) * ||PC_o^2||` with a Schatten-family norm.
    SuboptConsistent,
}

impl CriterionKind {
    pub fn is_joint(&self) -> bool {
        matches!(
            self,
            CriterionKind::DOptimalJoint | CriterionKind::NormJoint
        )
    }

    pub fn is_determinant(&self) -> bool {
        matches!(
            self,
            CriterionKind::DOptimalJoint | CriterionKind::DOptimalPerOrientation
        )
    }

    /// The per-orientation counterpart of a joint kind and vice versa.
    pub fn counterpart(&self) -> Option<CriterionKind> {
        match self {
            CriterionKind::DOptimalJoint => Some(CriterionKind::DOptimalPerOrientation),
            CriterionKind::NormJoint => Some(CriterionKind::NormPerOrientation),
            CriterionKind::DOptimalPerOrientation => Some(CriterionKind::DOptimalJoint),
            CriterionKind::NormPerOrientation => Some(CriterionKind::NormJoint),
            CriterionKind::SuboptConsistent => None,
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriterionKind::DOptimalJoint => "d-opt",
            CriterionKind::NormJoint => "norm-opt",
            CriterionKind::DOptimalPerOrientation => "d-opt-per-o",
            CriterionKind::NormPerOrientation => "norm-opt-per-o",
            CriterionKind::SuboptConsistent => "subopt",
        })
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "d-opt" => Ok(CriterionKind::DOptimalJoint),
            "norm-opt" => Ok(CriterionKind::NormJoint),
            "d-opt-per-o" => Ok(CriterionKind::DOptimalPerOrientation),
            "norm-opt-per-o" => Ok(CriterionKind::NormPerOrientation),
            "subopt" => Ok(CriterionKind::SuboptConsistent),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected d-opt|norm-opt|d-opt-per-o|norm-opt-per-o|subopt)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Criterion {
    pub kind: CriterionKind,
    /// Ignored by the determinant kinds.
    pub norm: NormKind,
    pub weights: CostWeights,
}

/// What a criterion is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum CriterionInput<'a> {
    /// Combined cost map `mu1 M + mu2 m`.
    Cost(&'a Map),
    /// A single orientation PC map.
    Orientation(&'a Map),
}

impl Criterion {
    pub fn new(kind: CriterionKind, norm: NormKind, weights: CostWeights) -> Result<Self> {
        let c = Criterion {
            kind,
            norm,
            weights,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if let NormKind::Schatten(p) = self.norm {
            NormKind::schatten(p)?;
        }
        match self.kind {
            CriterionKind::DOptimalPerOrientation | CriterionKind::NormPerOrientation
                if !self.weights.is_unit() =>
            {
                Err(Error::Config(format!(
                    "{} requires mu1 = mu2 = 1, got mu1 = {}, mu2 = {}",
                    self.kind, self.weights.mu1, self.weights.mu2
                )))
            }
            CriterionKind::SuboptConsistent => {
                if !self.norm.is_schatten_family() {
                    return Err(Error::Config(format!(
                        "subopt requires a consistent Schatten-family norm (fro, two or schatten:P), got {}",
                        self.norm
                    )));
                }
                let w = self.weights;
                if [w.mu1, w.mu2].iter().any(|&m| m == 0.0 || m == 1.0) {
                    return Err(Error::Config(format!(
                        "subopt is only valid for weights strictly between 0 and 1, got mu1 = {}, mu2 = {}",
                        w.mu1, w.mu2
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Score to maximize. Rank-deficient maps score `-inf` under the
    /// determinant kinds.
    pub fn score(&self, input: CriterionInput<'_>) -> Result<f64> {
        self.validate()?;
        match (self.kind.is_joint(), input) {
            (true, CriterionInput::Cost(cost)) => {
                if self.kind.is_determinant() {
                    Ok(log_abs_det(&to_matrix(cost))?.log_abs)
                } else {
                    map_norm(cost, self.norm)
                }
            }
            (false, CriterionInput::Orientation(pc)) => {
                let squared = pc.map(|v| v * v);
                match self.kind {
                    CriterionKind::DOptimalPerOrientation => {
                        Ok(log_abs_det(&to_matrix(&squared))?.log_abs)
                    }
                    CriterionKind::NormPerOrientation => map_norm(&squared, self.norm),
                    CriterionKind::SuboptConsistent => Ok((self.weights.mu1.abs()
                        + self.weights.mu2.abs())
                        * map_norm(&squared, self.norm)?),
                    _ => unreachable!("joint kinds handled above"),
                }
            }
            (true, CriterionInput::Orientation(_)) => Err(Error::Config(format!(
                "{} is evaluated on the combined cost map, not an orientation map",
                self.kind
            ))),
            (false, CriterionInput::Cost(_)) => Err(Error::Config(format!(
                "{} is evaluated on a single orientation map, not the combined cost map",
                self.kind
            ))),
        }
    }

    /// Rejects non-square images up front for the determinant kinds.
    pub fn check_dims(&self, width: usize, height: usize) -> Result<()> {
        if self.kind.is_determinant() && width != height {
            return Err(Error::NonSquare {
                rows: height,
                cols: width,
            });
        }
        Ok(())
    }
}

/// Worst ratios seen while sampling random matrix pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmultiplicativeReport {
    /// `max ||AB|| / (||A|| ||B||)`
    pub worst_product_ratio: f64,
    /// `max ||A^k|| / ||A||^k` over `k = 2, 3`.
    pub worst_power_ratio: f64,
    pub trials: usize,
}

impl SubmultiplicativeReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_product_ratio <= 1.0 + tol && self.worst_power_ratio <= 1.0 + tol
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Sample `trials` random 8x8 pairs and report the worst ratios for `norm`.
pub fn submultiplicative_ratios(
    norm: impl Fn(&DMatrix<f64>) -> f64,
    trials: usize,
    seed: u64,
) -> SubmultiplicativeReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_product_ratio: f64 = 0.0;
    let mut worst_power_ratio: f64 = 0.0;
    for _ in 0..trials {
        let a = random_matrix(&mut rng, 8, 8);
        let b = random_matrix(&mut rng, 8, 8);
        let (na, nb) = (norm(&a), norm(&b));
        worst_product_ratio = worst_product_ratio.max(norm(&(&a * &b)) / (na * nb));
        let a2 = &a * &a;
        let a3 = &a2 * &a;
        worst_power_ratio = worst_power_ratio
            .max(norm(&a2) / na.powi(2))
            .max(norm(&a3) / na.powi(3));
    }
    SubmultiplicativeReport {
        worst_product_ratio,
        worst_power_ratio,
        trials,
    }
}

/// Sub-multiplicativity and power bound of a Schatten-family norm by sampling.
pub fn check_submultiplicative(
    kind: NormKind,
    trials: usize,
    seed: u64,
) -> Result<SubmultiplicativeReport> {
    if !kind.is_schatten_family() {
        return Err(Error::Domain(format!(
            "sub-multiplicativity check expects a Schatten-family norm, got {kind}"
        )));
    }
    Ok(submultiplicative_ratios(
        |m| matrix_norm(m, kind).expect("finite random matrix"),
        trials,
        seed,
    ))
}

/// `||A B|| / (||A|| ||B||)` for one pair.
pub fn product_ratio(a: &DMatrix<f64>, b: &DMatrix<f64>, kind: NormKind) -> Result<f64> {
    Ok(matrix_norm(&(a * b), kind)? / (matrix_norm(a, kind)? * matrix_norm(b, kind)?))
}

/// Both sides of the bound `||M||, ||m|| <= sum_o ||PC_o^2||` for one set of
/// orientation maps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentNormBound {
    pub max_moment_norm: f64,
    pub min_moment_norm: f64,
    pub orientation_sum: f64,
}

impl MomentNormBound {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let limit = self.orientation_sum * (1.0 + rel_tol);
        self.max_moment_norm <= limit && self.min_moment_norm <= limit
    }
}

pub fn moment_norm_bound<M: AsRef<Map>>(
    pc_maps: &[M],
    thetas: &[f64],
    kind: NormKind,
) -> Result<MomentNormBound> {
    let mm = compute_moments(pc_maps, thetas)?;
    let orientation_sum = pc_maps
        .iter()
        .map(|pc| map_norm(&pc.as_ref().map(|v| v * v), kind))
        .sum::<Result<f64>>()?;
    Ok(MomentNormBound {
        max_moment_norm: map_norm(&mm.m_max, kind)?,
        min_moment_norm: map_norm(&mm.m_min, kind)?,
        orientation_sum,
    })
}

#[cfg(test)]
mod tests {
    use nalgebra::dmatrix;
    use proptest::prelude::*;

    use super::*;

    const ALL_KINDS: [NormKind; 5] = [
        NormKind::One,
        NormKind::Two,
        NormKind::Inf,
        NormKind::Frobenius,
        NormKind::Schatten(3.0),
    ];

    #[test]
    fn rank_one_example() {
        let a = dmatrix![3.0, 4.0; 0.0, 0.0];
        assert_eq!(matrix_norm(&a, NormKind::One).unwrap(), 4.0);
        assert_eq!(matrix_norm(&a, NormKind::Inf).unwrap(), 7.0);
        assert!((matrix_norm(&a, NormKind::Two).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(matrix_norm(&a, NormKind::Frobenius).unwrap(), 5.0);
    }

    #[test]
    fn identity_and_zero() {
        let i = DMatrix::<f64>::identity(5, 5);
        assert!((matrix_norm(&i, NormKind::Frobenius).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        assert!((matrix_norm(&i, NormKind::Two).unwrap() - 1.0).abs() < 1e-12);
        let z = DMatrix::<f64>::zeros(4, 3);
        for kind in ALL_KINDS {
            assert_eq!(matrix_norm(&z, kind).unwrap(), 0.0);
        }
    }

    #[test]
    fn nan_is_rejected() {
        let a = dmatrix![1.0, f64::NAN; 0.0, 1.0];
        assert!(matrix_norm(&a, NormKind::One).is_err());
    }

    #[test]
    fn schatten_order_below_one_is_rejected() {
        assert!(NormKind::schatten(0.5).is_err());
        assert!("schatten:0.5".parse::<NormKind>().is_err());
        assert_eq!(
            "schatten:3".parse::<NormKind>().unwrap(),
            NormKind::Schatten(3.0)
        );
        assert_eq!("fro".parse::<NormKind>().unwrap(), NormKind::Frobenius);
        assert!("max".parse::<NormKind>().is_err());
    }

    #[test]
    fn log_det_examples() {
        let i = DMatrix::<f64>::identity(4, 4);
        let d = log_abs_det(&i).unwrap();
        assert!(d.log_abs.abs() < 1e-15);
        assert_eq!(d.sign, 1.0);
        let d = log_abs_det(&dmatrix![2.0, 0.0; 0.0, 3.0]).unwrap();
        assert!((d.log_abs - 6f64.ln()).abs() < 1e-14);
        assert!((d.log_abs - 1.79176).abs() < 1e-5);
        let d = log_abs_det(&dmatrix![1.0, 2.0, 3.0; 0.0, 0.0, 0.0; 4.0, 5.0, 7.0]).unwrap();
        assert!(d.rank_deficient);
        assert_eq!(d.log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn log_det_sign() {
        let d = log_abs_det(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert_eq!(d.sign, -1.0);
        let d = log_abs_det(&dmatrix![-2.0, 0.0; 0.0, 3.0]).unwrap();
        assert_eq!(d.sign, -1.0);
        let d = log_abs_det(&dmatrix![-2.0, 1.0; 0.5, -3.0]).unwrap();
        assert_eq!(d.sign, 1.0);
        assert!((d.log_abs - 5.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn log_det_rejects_non_square() {
        let a = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(
            log_abs_det(&a),
            Err(Error::NonSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn identity_pair_ratio_is_one_for_two_norm() {
        let i = DMatrix::<f64>::identity(6, 6);
        assert!((product_ratio(&i, &i, NormKind::Two).unwrap() - 1.0).abs() < 1e-12);
        let one = DMatrix::<f64>::identity(1, 1);
        assert_eq!(product_ratio(&one, &one, NormKind::Frobenius).unwrap(), 1.0);
    }

    #[test]
    fn diagonal_power_equality_case() {
        let a = dmatrix![2.0, 0.0; 0.0, 0.0];
        let a2 = &a * &a;
        assert_eq!(matrix_norm(&a2, NormKind::Frobenius).unwrap(), 4.0);
        assert_eq!(product_ratio(&a, &a, NormKind::Frobenius).unwrap(), 1.0);
    }

    #[test]
    fn sampled_submultiplicativity() {
        let r = check_submultiplicative(NormKind::Frobenius, 100, 7).unwrap();
        assert!(r.worst_product_ratio <= 1.0);
        assert!(r.holds(1e-12));
        let r = check_submultiplicative(NormKind::Schatten(1.5), 50, 8).unwrap();
        assert!(r.holds(1e-12));
        assert!(check_submultiplicative(NormKind::One, 10, 1).is_err());
    }

    #[test]
    fn max_entry_norm_is_not_submultiplicative() {
        let r = submultiplicative_ratios(|m| m.amax(), 20, 3);
        assert!(!r.holds(1e-12));
    }

    fn unit_weights() -> CostWeights {
        CostWeights::default()
    }

    #[test]
    fn joint_and_per_orientation_coincide_for_one_orientation() {
        let pc = Map::from_fn(6, 6, |x, y| ((x + 2 * y) % 5) as f64 / 5.0);
        let mm = compute_moments(std::slice::from_ref(&pc), &[0.3]).unwrap();
        let cost = crate::moments::combined_cost(&mm.m_max, &mm.m_min, unit_weights()).unwrap();
        let joint = Criterion::new(
            CriterionKind::NormJoint,
            NormKind::Frobenius,
            unit_weights(),
        )
        .unwrap()
        .score(CriterionInput::Cost(&cost))
        .unwrap();
        let per = Criterion::new(
            CriterionKind::NormPerOrientation,
            NormKind::Frobenius,
            unit_weights(),
        )
        .unwrap()
        .score(CriterionInput::Orientation(&pc))
        .unwrap();
        let direct = map_norm(&pc.map(|v| v * v), NormKind::Frobenius).unwrap();
        assert!((joint - direct).abs() < 1e-12);
        assert!((per - direct).abs() < 1e-12);
    }

    #[test]
    fn subopt_weight_arithmetic() {
        let pc = Map::from_fn(4, 4, |x, y| (x * y) as f64 / 9.0);
        let c = Criterion::new(
            CriterionKind::SuboptConsistent,
            NormKind::Frobenius,
            CostWeights::new(0.5, 0.5).unwrap(),
        )
        .unwrap();
        let s = c.score(CriterionInput::Orientation(&pc)).unwrap();
        let direct = map_norm(&pc.map(|v| v * v), NormKind::Frobenius).unwrap();
        assert_eq!(s, direct);
    }

    #[test]
    fn identity_cost_frobenius_score() {
        let id = Map::from_fn(4, 4, |x, y| if x == y { 1.0 } else { 0.0 });
        let c = Criterion::new(
            CriterionKind::NormJoint,
            NormKind::Frobenius,
            unit_weights(),
        )
        .unwrap();
        assert_eq!(c.score(CriterionInput::Cost(&id)).unwrap(), 2.0);
    }

    #[test]
    fn criterion_validation() {
        let half = CostWeights::new(0.5, 0.5).unwrap();
        assert!(
            Criterion::new(CriterionKind::NormPerOrientation, NormKind::Frobenius, half).is_err()
        );
        assert!(Criterion::new(CriterionKind::SuboptConsistent, NormKind::One, half).is_err());
        assert!(Criterion::new(
            CriterionKind::SuboptConsistent,
            NormKind::Frobenius,
            unit_weights()
        )
        .is_err());
        let c = Criterion::new(CriterionKind::NormJoint, NormKind::Frobenius, half).unwrap();
        let m = Map::zeros(3, 3);
        assert!(c.score(CriterionInput::Orientation(&m)).is_err());
    }

    #[test]
    fn determinant_kind_rejects_non_square() {
        let c = Criterion::new(
            CriterionKind::DOptimalJoint,
            NormKind::Frobenius,
            unit_weights(),
        )
        .unwrap();
        let m = Map::filled(5, 4, 0.2);
        assert!(matches!(
            c.score(CriterionInput::Cost(&m)),
            Err(Error::NonSquare { .. })
        ));
        assert!(c.check_dims(5, 4).is_err());
        assert!(c.check_dims(4, 4).is_ok());
    }

    #[test]
    fn singular_cost_scores_negative_infinity() {
        let c = Criterion::new(
            CriterionKind::DOptimalJoint,
            NormKind::Frobenius,
            unit_weights(),
        )
        .unwrap();
        let m = Map::filled(4, 4, 0.2);
        assert_eq!(
            c.score(CriterionInput::Cost(&m)).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn method_strings_round_trip() {
        for s in [
            "d-opt",
            "norm-opt",
            "d-opt-per-o",
            "norm-opt-per-o",
            "subopt",
        ] {
            assert_eq!(s.parse::<CriterionKind>().unwrap().to_string(), s);
        }
        assert!("a-opt".parse::<CriterionKind>().is_err());
    }

    fn matrix_strategy() -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-10.0f64..10.0, 20).prop_map(|v| DMatrix::from_vec(4, 5, v))
    }

    proptest! {
        #[test]
        fn norm_axioms(a in matrix_strategy(), b in matrix_strategy(), c in -5.0f64..5.0) {
            for kind in ALL_KINDS {
                let na = matrix_norm(&a, kind).unwrap();
                let nb = matrix_norm(&b, kind).unwrap();
                prop_assert!(na >= 0.0);
                let scaled = matrix_norm(&(&a * c), kind).unwrap();
                prop_assert!((scaled - c.abs() * na).abs() <= 1e-10 * (1.0 + c.abs() * na));
                let sum = matrix_norm(&(&a + &b), kind).unwrap();
                prop_assert!(sum <= (na + nb) * (1.0 + 1e-10) + 1e-12);
            }
        }

        #[test]
        fn frobenius_equals_schatten_two(a in matrix_strategy()) {
            let f = matrix_norm(&a, NormKind::Frobenius).unwrap();
            let s = matrix_norm(&a, NormKind::Schatten(2.0)).unwrap();
            prop_assert!((f - s).abs() <= 1e-10 * f.max(1e-300));
        }

        #[test]
        fn two_norm_below_frobenius(a in matrix_strategy()) {
            let t = matrix_norm(&a, NormKind::Two).unwrap();
            let f = matrix_norm(&a, NormKind::Frobenius).unwrap();
            prop_assert!(t <= f * (1.0 + 1e-12));
        }
    }
}
