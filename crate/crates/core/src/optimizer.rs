//! Box-constrained derivative-free maximization over the parameter vector.
//!
//! Continuous slots are searched with a multi-start Nelder-Mead simplex in
//! unit-box coordinates, with every trial point projected back onto the box.
//! Integer slots (number of scales and orientations) are enumerated
//! exhaustively and a full continuous search runs for every combination.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::{Criterion, CriterionInput, CriterionKind};
use crate::error::{Error, Result};
use crate::filterbank::{BankParams, DEFAULT_ANGULAR_RATIO};
use crate::imageio::ImageGrid;
use crate::map::Map;
use crate::moments::{combined_cost, compute_moments};
use crate::pc::{EngineOptions, PcEngine, PcFieldSet, PcParams};

/// Largest admissible `sigma` when a bound sits on the open end at 1.
pub const SIGMA_CEILING: f64 = 1.0 - 1e-6;
/// Smallest admissible `eta` when a bound sits on the open end at 1.
pub const ETA_FLOOR: f64 = 1.0 + 1e-6;

/// The nine tunable slots, in vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Cutoff,
    Gain,
    LambdaMin,
    Sigma,
    Eta,
    KNoise,
    Epsilon,
    NScales,
    NOrient,
}

impl Slot {
    pub const ALL: [Slot; 9] = [
        Slot::Cutoff,
        Slot::Gain,
        Slot::LambdaMin,
        Slot::Sigma,
        Slot::Eta,
        Slot::KNoise,
        Slot::Epsilon,
        Slot::NScales,
        Slot::NOrient,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Slot::Cutoff => "c",
            Slot::Gain => "g",
            Slot::LambdaMin => "lambda_min",
            Slot::Sigma => "sigma",
            Slot::Eta => "eta",
            Slot::KNoise => "k",
            Slot::Epsilon => "epsilon",
            Slot::NScales => "n_scales",
            Slot::NOrient => "n_orient",
        }
    }

    pub fn from_name(name: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == name)
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Slot::NScales | Slot::NOrient)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub cutoff: f64,
    pub gain: f64,
    pub lambda_min: f64,
    pub sigma: f64,
    pub eta: f64,
    pub k_noise: f64,
    pub epsilon: f64,
    pub n_scales: usize,
    pub n_orient: usize,
}

impl Default for ParamVector {
    /// The commonly used manual settings: `c = 0.55, g = 10, lambda_min = 3,
    /// sigma = 0.55, eta = 2.1, k = 2, epsilon = 1e-4, N = 4, O = 6`.
    fn default() -> Self {
        ParamVector::from_pc_params(&PcParams::default())
    }
}

impl ParamVector {
    pub fn get(&self, slot: Slot) -> f64 {
        match slot {
            Slot::Cutoff => self.cutoff,
            Slot::Gain => self.gain,
            Slot::LambdaMin => self.lambda_min,
            Slot::Sigma => self.sigma,
            Slot::Eta => self.eta,
            Slot::KNoise => self.k_noise,
            Slot::Epsilon => self.epsilon,
            Slot::NScales => self.n_scales as f64,
            Slot::NOrient => self.n_orient as f64,
        }
    }

    /// Set a slot; integer slots require an exact non-negative integer.
    pub fn set(&mut self, slot: Slot, value: f64) -> Result<()> {
        if slot.is_integer() && (value.fract() != 0.0 || value < 0.0 || !value.is_finite()) {
            return Err(Error::Config(format!(
                "{slot} must be a non-negative integer, got {value}"
            )));
        }
        match slot {
            Slot::Cutoff => self.cutoff = value,
            Slot::Gain => self.gain = value,
            Slot::LambdaMin => self.lambda_min = value,
            Slot::Sigma => self.sigma = value,
            Slot::Eta => self.eta = value,
            Slot::KNoise => self.k_noise = value,
            Slot::Epsilon => self.epsilon = value,
            Slot::NScales => self.n_scales = value as usize,
            Slot::NOrient => self.n_orient = value as usize,
        }
        Ok(())
    }

    pub fn to_pc_params(&self, angular_ratio: f64) -> PcParams {
        PcParams {
            cutoff: self.cutoff,
            gain: self.gain,
            k_noise: self.k_noise,
            epsilon: self.epsilon,
            bank: BankParams {
                lambda_min: self.lambda_min,
                eta: self.eta,
                sigma: self.sigma,
                n_scales: self.n_scales,
                n_orient: self.n_orient,
                angular_ratio,
            },
        }
    }

    pub fn from_pc_params(p: &PcParams) -> Self {
        ParamVector {
            cutoff: p.cutoff,
            gain: p.gain,
            lambda_min: p.bank.lambda_min,
            sigma: p.bank.sigma,
            eta: p.bank.eta,
            k_noise: p.k_noise,
            epsilon: p.epsilon,
            n_scales: p.bank.n_scales,
            n_orient: p.bank.n_orient,
        }
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, slot) in Slot::ALL.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}={}", slot, self.get(*slot))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub lower: ParamVector,
    pub upper: ParamVector,
}

impl ParamBounds {
    /// Every slot frozen at `v`.
    pub fn fixed(v: ParamVector) -> Self {
        ParamBounds { lower: v, upper: v }
    }

    pub fn with_range(mut self, slot: Slot, lower: f64, upper: f64) -> Result<Self> {
        self.lower.set(slot, lower)?;
        self.upper.set(slot, upper)?;
        Ok(self)
    }

    /// Weighting-function search: `c in [0.01, 0.9]`, `g in [1, 50]`, the rest
    /// frozen at the defaults.
    pub fn weighting_only() -> Self {
        ParamBounds::fixed(ParamVector::default())
            .with_range(Slot::Cutoff, 0.01, 0.9)
            .and_then(|b| b.with_range(Slot::Gain, 1.0, 50.0))
            .expect("static bounds")
    }

    /// Seven-slot search over the weighting function, filter bank, scales
    /// and orientations with `k = 2`, `epsilon = 1e-4` frozen.
    pub fn seven_parameter() -> Self {
        let ranges = [
            (Slot::Cutoff, 0.1, 0.9),
            (Slot::Gain, 1.0, 50.0),
            (Slot::LambdaMin, 2.0, 5.0),
            (Slot::Sigma, 0.4, 1.0),
            (Slot::Eta, 1.0, 4.0),
            (Slot::NScales, 1.0, 4.0),
            (Slot::NOrient, 1.0, 6.0),
        ];
        ranges
            .into_iter()
            .try_fold(
                ParamBounds::fixed(ParamVector::default()),
                |b, (s, lo, hi)| b.with_range(s, lo, hi),
            )
            .expect("static bounds")
    }

    pub fn validate(&self) -> Result<()> {
        for slot in Slot::ALL {
            let (lo, hi) = (self.lower.get(slot), self.upper.get(slot));
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("bounds of {slot} must be finite")));
            }
            if lo > hi {
                return Err(Error::Config(format!(
                    "infeasible bounds for {slot}: lower {lo} > upper {hi}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_active(&self, slot: Slot) -> bool {
        self.lower.get(slot) < self.upper.get(slot)
    }

    pub fn active_slots(&self) -> Vec<Slot> {
        Slot::ALL
            .into_iter()
            .filter(|s| self.is_active(*s))
            .collect()
    }

    pub fn contains(&self, v: &ParamVector) -> bool {
        Slot::ALL.iter().all(|&s| {
            let x = v.get(s);
            self.lower.get(s) <= x && x <= self.upper.get(s)
        })
    }

    /// Pull bounds that touch the open ends of the `sigma` and `eta` domains
    /// inward. Returns the adjusted bounds and one note per adjustment.
    pub fn clamp_to_domain(&self) -> (ParamBounds, Vec<String>) {
        let mut b = *self;
        let mut notes = Vec::new();
        if b.upper.sigma >= 1.0 {
            notes.push(format!(
                "sigma upper bound {} lowered to {}",
                b.upper.sigma, SIGMA_CEILING
            ));
            b.upper.sigma = SIGMA_CEILING;
            b.lower.sigma = b.lower.sigma.min(SIGMA_CEILING);
        }
        if b.lower.eta <= 1.0 {
            notes.push(format!(
                "eta lower bound {} raised to {}",
                b.lower.eta, ETA_FLOOR
            ));
            b.lower.eta = ETA_FLOOR;
            b.upper.eta = b.upper.eta.max(ETA_FLOOR);
        }
        (b, notes)
    }

    /// Slots whose value in `v` sits on a bound of an active slot.
    pub fn boundary_flags(&self, v: &ParamVector) -> Vec<(Slot, BoundSide)> {
        self.active_slots()
            .into_iter()
            .filter_map(|s| {
                let x = v.get(s);
                if x == self.lower.get(s) {
                    Some((s, BoundSide::Lower))
                } else if x == self.upper.get(s) {
                    Some((s, BoundSide::Upper))
                } else {
                    None
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

impl fmt::Display for BoundSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundSide::Lower => "lower",
            BoundSide::Upper => "upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Evaluations allowed per integer-slot combination.
    pub budget: usize,
    /// Number of simplex starts per combination.
    pub starts: usize,
    /// Simplex diameter, in unit-box coordinates, that ends a start.
    pub xtol: f64,
    /// Initial simplex edge, in unit-box coordinates.
    pub initial_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 400,
            starts: 5,
            xtol: 1e-4,
            initial_step: 0.25,
        }
    }
}

pub const MIN_BUDGET: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Simplex diameter fell below the tolerance.
    Converged,
    BudgetExhausted,
    /// The feasible set is a single point.
    SinglePoint,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::BudgetExhausted => "budget",
            Termination::SinglePoint => "single-point",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub iter: usize,
    pub params: ParamVector,
    pub score: f64,
    /// Wall time of the evaluation in milliseconds.
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub evaluations: Vec<Evaluation>,
    pub best: ParamVector,
    pub best_score: f64,
    pub termination: Termination,
    pub seed: u64,
}

impl OptimizationTrace {
    /// Running maximum of the scores along the trace.
    pub fn running_best(&self) -> Vec<f64> {
        self.evaluations
            .iter()
            .scan(f64::NEG_INFINITY, |best, e| {
                *best = best.max(e.score);
                Some(*best)
            })
            .collect()
    }

    /// CSV with header `iter,<slots...>,score,ms`. Without timing the `ms`
    /// column is written as 0 so files are reproducible byte for byte.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = String::from("iter");
        for s in Slot::ALL {
            out.push(',');
            out.push_str(s.name());
        }
        out.push_str(",score,ms\n");
        for e in &self.evaluations {
            write!(out, "{}", e.iter).unwrap();
            for s in Slot::ALL {
                write!(out, ",{}", e.params.get(s)).unwrap();
            }
            let ms = if timing { e.ms } else { 0.0 };
            writeln!(out, ",{},{}", e.score, ms).unwrap();
        }
        out
    }
}

struct Recorder<'f, F> {
    objective: &'f mut F,
    evaluations: Vec<Evaluation>,
}

impl<F: FnMut(&ParamVector) -> Result<f64>> Recorder<'_, F> {
    fn evaluate(&mut self, v: &ParamVector) -> Result<f64> {
        let start = Instant::now();
        let score = (self.objective)(v).map_err(|e| Error::Candidate {
            candidate: v.to_string(),
            source: Box::new(e),
        })?;
        if score.is_nan() {
            return Err(Error::Candidate {
                candidate: v.to_string(),
                source: Box::new(Error::Numerical("criterion evaluated to NaN".into())),
            });
        }
        self.evaluations.push(Evaluation {
            iter: self.evaluations.len(),
            params: *v,
            score,
            ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(score)
    }
}

/// Continuous search space of one integer combination, in unit coordinates.
struct UnitBox {
    base: ParamVector,
    slots: Vec<Slot>,
    lower: Vec<f64>,
    span: Vec<f64>,
}

impl UnitBox {
    fn point(&self, u: &[f64]) -> ParamVector {
        let mut v = self.base;
        for (i, &slot) in self.slots.iter().enumerate() {
            let x = if u[i] >= 1.0 {
                self.lower[i] + self.span[i]
            } else {
                self.lower[i] + u[i] * self.span[i]
            };
            v.set(slot, x).expect("continuous slot");
        }
        v
    }
}

fn clamp_unit(u: &mut [f64]) {
    for x in u.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
}

/// One bounded Nelder-Mead run maximizing `f` from `start`.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> Result<f64>,
    start: &[f64],
    step: f64,
    budget: usize,
    xtol: f64,
) -> Result<Termination> {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let d = start.len();
    let mut used = 0usize;
    // Work with costs (negated scores) so the usual minimization rules apply.
    let mut eval = |x: &[f64], used: &mut usize| -> Result<f64> {
        *used += 1;
        Ok(-f(x)?)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let x0 = start.to_vec();
    let c0 = eval(&x0, &mut used)?;
    simplex.push((x0.clone(), c0));
    for i in 0..d {
        if used >= budget {
            return Ok(Termination::BudgetExhausted);
        }
        let mut x = x0.clone();
        x[i] = if x0[i] + step <= 1.0 {
            x0[i] + step
        } else {
            x0[i] - step
        };
        clamp_unit(&mut x);
        let c = eval(&x, &mut used)?;
        simplex.push((x, c));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < xtol {
            return Ok(Termination::Converged);
        }
        if used >= budget {
            return Ok(Termination::BudgetExhausted);
        }

        let worst = simplex[d].clone();
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let toward = |t: f64, target: &[f64]| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(target)
                .map(|(c, p)| c + t * (p - c))
                .collect();
            clamp_unit(&mut x);
            x
        };

        let xr = toward(-REFLECT, &worst.0);
        let cr = eval(&xr, &mut used)?;
        if cr < simplex[0].1 {
            if used >= budget {
                simplex[d] = (xr, cr);
                continue;
            }
            let xe = toward(-REFLECT * EXPAND, &worst.0);
            let ce = eval(&xe, &mut used)?;
            simplex[d] = if ce < cr { (xe, ce) } else { (xr, cr) };
            continue;
        }
        if cr < simplex[d - 1].1 {
            simplex[d] = (xr, cr);
            continue;
        }
        if used >= budget {
            return Ok(Termination::BudgetExhausted);
        }
        let (xc, cc) = if cr < worst.1 {
            let xc = toward(-REFLECT * CONTRACT, &worst.0);
            let cc = eval(&xc, &mut used)?;
            (xc, cc)
        } else {
            let xc = toward(CONTRACT, &worst.0);
            let cc = eval(&xc, &mut used)?;
            (xc, cc)
        };
        if cc < cr.min(worst.1) {
            simplex[d] = (xc, cc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if used >= budget {
                return Ok(Termination::BudgetExhausted);
            }
            let x: Vec<f64> = best
                .iter()
                .zip(&vertex.0)
                .map(|(b, v)| b + SHRINK * (v - b))
                .collect();
            let c = eval(&x, &mut used)?;
            *vertex = (x, c);
        }
    }
}

fn integer_values(bounds: &ParamBounds, slot: Slot) -> Vec<usize> {
    let lo = bounds.lower.get(slot) as usize;
    let hi = bounds.upper.get(slot) as usize;
    (lo..=hi).collect()
}

/// Maximize `objective` over the box. Integer slots are enumerated; the
/// remaining active slots are searched with a multi-start bounded simplex.
pub fn maximize<F>(
    mut objective: F,
    bounds: &ParamBounds,
    options: &SearchOptions,
    seed: u64,
) -> Result<OptimizationTrace>
where
    F: FnMut(&ParamVector) -> Result<f64>,
{
    bounds.validate()?;
    if options.budget < MIN_BUDGET {
        return Err(Error::Config(format!(
            "budget {} is below the minimum of {MIN_BUDGET} evaluations",
            options.budget
        )));
    }
    if options.starts == 0 {
        return Err(Error::Config("at least one start is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut recorder = Recorder {
        objective: &mut objective,
        evaluations: Vec::new(),
    };
    let continuous: Vec<Slot> = bounds
        .active_slots()
        .into_iter()
        .filter(|s| !s.is_integer())
        .collect();
    // (index of first evaluation of the run, termination of the run)
    let mut runs: Vec<(usize, Termination)> = Vec::new();

    for n_scales in integer_values(bounds, Slot::NScales) {
        for n_orient in integer_values(bounds, Slot::NOrient) {
            let mut base = bounds.lower;
            base.n_scales = n_scales;
            base.n_orient = n_orient;
            if continuous.is_empty() {
                runs.push((recorder.evaluations.len(), Termination::SinglePoint));
                recorder.evaluate(&base)?;
                continue;
            }
            let unit = UnitBox {
                base,
                slots: continuous.clone(),
                lower: continuous.iter().map(|&s| bounds.lower.get(s)).collect(),
                span: continuous
                    .iter()
                    .map(|&s| bounds.upper.get(s) - bounds.lower.get(s))
                    .collect(),
            };
            let first_eval = recorder.evaluations.len();
            for start_index in 0..options.starts {
                let used = recorder.evaluations.len() - first_eval;
                let remaining = options.budget.saturating_sub(used);
                let share = remaining / (options.starts - start_index);
                if share == 0 {
                    break;
                }
                let start: Vec<f64> = if start_index == 0 {
                    vec![0.5; continuous.len()]
                } else {
                    (0..continuous.len()).map(|_| rng.gen::<f64>()).collect()
                };
                let run_start = recorder.evaluations.len();
                let mut f = |u: &[f64]| recorder.evaluate(&unit.point(u));
                let termination =
                    nelder_mead(&mut f, &start, options.initial_step, share, options.xtol)?;
                runs.push((run_start, termination));
            }
        }
    }

    let (best_index, best) = recorder
        .evaluations
        .iter()
        .enumerate()
        .fold(None::<(usize, &Evaluation)>, |acc, (i, e)| match acc {
            Some((_, b)) if e.score <= b.score => acc,
            _ => Some((i, e)),
        })
        .ok_or_else(|| Error::Numerical("no candidate was evaluated".into()))?;
    let termination = runs
        .iter()
        .rev()
        .find(|(first, _)| *first <= best_index)
        .map(|(_, t)| *t)
        .unwrap_or(Termination::BudgetExhausted);
    Ok(OptimizationTrace {
        best: best.params,
        best_score: best.score,
        evaluations: recorder.evaluations.clone(),
        termination,
        seed,
    })
}

/// Scores parameter vectors on one image; shares the image spectrum and the
/// filter-bank cache across evaluations.
#[derive(Debug)]
pub struct CandidateEvaluator {
    engine: PcEngine,
    criterion: Criterion,
    angular_ratio: f64,
}

impl CandidateEvaluator {
    pub fn new(image: &ImageGrid, criterion: Criterion) -> Result<Self> {
        Self::with_options(
            image,
            criterion,
            EngineOptions::default(),
            DEFAULT_ANGULAR_RATIO,
        )
    }

    pub fn with_options(
        image: &ImageGrid,
        criterion: Criterion,
        options: EngineOptions,
        angular_ratio: f64,
    ) -> Result<Self> {
        criterion.validate()?;
        criterion.check_dims(image.width(), image.height())?;
        Ok(CandidateEvaluator {
            engine: PcEngine::with_options(image, options),
            criterion,
            angular_ratio,
        })
    }

    pub fn criterion(&self) -> &Criterion {
        &self.criterion
    }

    pub fn engine(&self) -> &PcEngine {
        &self.engine
    }

    pub fn angular_ratio(&self) -> f64 {
        self.angular_ratio
    }

    pub fn fields(&self, v: &ParamVector) -> Result<PcFieldSet> {
        self.engine.compute(&v.to_pc_params(self.angular_ratio))
    }

    /// Combined cost map `mu1 M + mu2 m` for a field set.
    pub fn cost_map(&self, fields: &PcFieldSet) -> Result<Map> {
        let mm = compute_moments(&fields.pc_maps(), &fields.thetas())?;
        combined_cost(&mm.m_max, &mm.m_min, self.criterion.weights)
    }

    /// Joint score of `v`; requires a joint criterion.
    pub fn score_joint(&self, v: &ParamVector) -> Result<f64> {
        if !self.criterion.kind.is_joint() {
            return Err(Error::Config(format!(
                "{} scores single orientations; use score_orientation",
                self.criterion.kind
            )));
        }
        let fields = self.fields(v)?;
        let cost = self.cost_map(&fields)?;
        self.criterion.score(CriterionInput::Cost(&cost))
    }

    /// Per-orientation score of orientation `o` under `v`.
    pub fn score_orientation(&self, v: &ParamVector, o: usize) -> Result<f64> {
        let fields = self
            .engine
            .orientation_fields(&v.to_pc_params(self.angular_ratio), o)?;
        self.criterion
            .score(CriterionInput::Orientation(&fields.pc))
    }
}

/// Score of a single candidate under a joint criterion.
pub fn evaluate_candidate(image: &ImageGrid, v: &ParamVector, criterion: Criterion) -> Result<f64> {
    CandidateEvaluator::new(image, criterion)?.score_joint(v)
}

#[derive(Debug, Clone)]
pub struct JointResult {
    pub trace: OptimizationTrace,
    /// Bound adjustments applied to keep `sigma` and `eta` in their domains.
    pub bound_notes: Vec<String>,
    pub bounds: ParamBounds,
}

/// One parameter vector shared by every orientation.
pub fn optimize_joint(
    evaluator: &CandidateEvaluator,
    bounds: &ParamBounds,
    options: &SearchOptions,
    seed: u64,
) -> Result<JointResult> {
    if !evaluator.criterion.kind.is_joint() {
        return Err(Error::Config(format!(
            "{} is a per-orientation method; use optimize_per_orientation",
            evaluator.criterion.kind
        )));
    }
    bounds.validate()?;
    let (bounds, bound_notes) = bounds.clamp_to_domain();
    let trace = maximize(|v| evaluator.score_joint(v), &bounds, options, seed)?;
    Ok(JointResult {
        trace,
        bound_notes,
        bounds,
    })
}

#[derive(Debug, Clone)]
pub struct OrientationResult {
    pub orientation: usize,
    pub theta: f64,
    pub trace: OptimizationTrace,
}

#[derive(Debug, Clone)]
pub struct PerOrientationResult {
    pub orientations: Vec<OrientationResult>,
    /// Field set recomputed with each orientation at its own optimum.
    pub fields: PcFieldSet,
    /// Combined cost map at the per-orientation optima.
    pub cost: Map,
    /// Joint-counterpart score of `cost`, for comparison with joint runs.
    pub aggregate_score: f64,
    pub bound_notes: Vec<String>,
    pub bounds: ParamBounds,
}

/// Independent search per orientation. The number of orientations must be
/// frozen in `bounds`.
pub fn optimize_per_orientation(
    evaluator: &CandidateEvaluator,
    bounds: &ParamBounds,
    options: &SearchOptions,
    seed: u64,
) -> Result<PerOrientationResult> {
    let criterion = evaluator.criterion;
    if criterion.kind.is_joint() {
        return Err(Error::Config(format!(
            "{} is a joint method; use optimize_joint",
            criterion.kind
        )));
    }
    bounds.validate()?;
    if bounds.is_active(Slot::NOrient) {
        return Err(Error::Config(
            "the number of orientations cannot be optimized per orientation; freeze n_orient"
                .into(),
        ));
    }
    let (bounds, bound_notes) = bounds.clamp_to_domain();
    let n_orient = bounds.lower.n_orient;
    let mut orientations = Vec::with_capacity(n_orient);
    for o in 0..n_orient {
        let trace = maximize(
            |v| evaluator.score_orientation(v, o),
            &bounds,
            options,
            seed.wrapping_add(o as u64),
        )?;
        orientations.push(OrientationResult {
            orientation: o,
            theta: bounds
                .lower
                .to_pc_params(evaluator.angular_ratio)
                .bank
                .theta(o),
            trace,
        });
    }

    let params: Vec<PcParams> = orientations
        .iter()
        .map(|r| r.trace.best.to_pc_params(evaluator.angular_ratio))
        .collect();
    let fields = evaluator.engine.compute_per_orientation(&params)?;
    let cost = evaluator.cost_map(&fields)?;
    let aggregate_kind = match criterion.kind {
        CriterionKind::DOptimalPerOrientation => CriterionKind::DOptimalJoint,
        _ => CriterionKind::NormJoint,
    };
    let aggregate = Criterion::new(aggregate_kind, criterion.norm, criterion.weights)?;
    let aggregate_score = aggregate.score(CriterionInput::Cost(&cost))?;
    Ok(PerOrientationResult {
        orientations,
        fields,
        cost,
        aggregate_score,
        bound_notes,
        bounds,
    })
}
