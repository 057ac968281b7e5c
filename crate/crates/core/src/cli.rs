//! `phasecon run|optimize|selfcheck`.
//!
//! Configuration is a flat `key = value` file; command-line flags override it.
//! Keys:
//!
//! ```text
//! image, out, method, norm, mu1, mu2, seed, budget, starts, xtol,
//! angular_ratio, boundary (periodic-smooth|periodic), amax (orientation|global),
//! debug_fields, timing,
//! c, g, lambda_min, sigma, eta, k, epsilon, n_scales, n_orient,
//! <slot>.<o>       per-orientation value, o = 1..O (run only)
//! <slot>.min/.max  search bounds (optimize only)
//! ```
//!
//! Without any `.min`/`.max` key, optimize searches `c in [0.01, 0.9]` and
//! `g in [1, 50]` with every other slot frozen.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::criteria::{Criterion, CriterionKind, NormKind};
use crate::error::{Error, Result};
use crate::filterbank::{build_bank, centered_grid, DEFAULT_ANGULAR_RATIO};
use crate::imageio::{write_map, ImageGrid, WriteMode};
use crate::map::Map;
use crate::moments::{combined_cost, compute_moments, CostWeights};
use crate::optimizer::{
    optimize_joint, optimize_per_orientation, CandidateEvaluator, OptimizationTrace, ParamBounds,
    ParamVector, SearchOptions, Slot,
};
use crate::pc::{AmaxScope, Boundary, EngineOptions, PcEngine, PcFieldSet, PcParams};
use crate::selfcheck;

#[derive(Debug, Parser)]
#[command(
    name = "phasecon",
    version,
    about = "Phase congruency maps and parameter tuning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute maps with fixed parameters.
    Run(CommonArgs),
    /// Search the parameters that maximize a criterion.
    Optimize(CommonArgs),
    /// Run the built-in property checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// d-opt | norm-opt | d-opt-per-o | norm-opt-per-o | subopt
    #[arg(long)]
    pub method: Option<String>,
    /// one | two | inf | fro | schatten:P
    #[arg(long)]
    pub norm: Option<String>,
    #[arg(long)]
    pub mu1: Option<f64>,
    #[arg(long)]
    pub mu2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluations per integer-slot combination.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Also write intermediate fields and filter grids.
    #[arg(long)]
    pub debug_fields: bool,
}

#[derive(Debug, Args, Default)]
pub struct SelfcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `selfcheck.txt`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub corrupt_norm: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image: Option<PathBuf>,
    pub out: PathBuf,
    pub params: ParamVector,
    /// `(orientation index from 0, slot) -> value`.
    pub overrides: BTreeMap<(usize, Slot), f64>,
    pub lower: BTreeMap<Slot, f64>,
    pub upper: BTreeMap<Slot, f64>,
    pub method: CriterionKind,
    pub norm: NormKind,
    pub weights: CostWeights,
    pub seed: u64,
    pub search: SearchOptions,
    pub angular_ratio: f64,
    pub engine: EngineOptions,
    pub debug_fields: bool,
    /// Record wall time in traces. Off by default so traces are reproducible.
    pub timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            image: None,
            out: PathBuf::from("phasecon-out"),
            params: ParamVector::default(),
            overrides: BTreeMap::new(),
            lower: BTreeMap::new(),
            upper: BTreeMap::new(),
            method: CriterionKind::NormJoint,
            norm: NormKind::Frobenius,
            weights: CostWeights::default(),
            seed: 0,
            search: SearchOptions::default(),
            angular_ratio: DEFAULT_ANGULAR_RATIO,
            engine: EngineOptions::default(),
            debug_fields: false,
            timing: false,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got '{value}'"
        ))),
    }
}

fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::PeriodicSmooth => "periodic-smooth",
        Boundary::Periodic => "periodic",
    }
}

fn amax_name(a: AmaxScope) -> &'static str {
    match a {
        AmaxScope::PerOrientation => "orientation",
        AmaxScope::Global => "global",
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if let Some(slot) = Slot::from_name(key) {
            return self.params.set(slot, parse_num(key, value)?);
        }
        if let Some((name, suffix)) = key.split_once('.') {
            let slot = Slot::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown parameter '{name}'")))?;
            let v: f64 = parse_num(key, value)?;
            match suffix {
                "min" => {
                    self.lower.insert(slot, v);
                }
                "max" => {
                    self.upper.insert(slot, v);
                }
                index => {
                    let o: usize = parse_num(key, index)?;
                    if o == 0 {
                        return Err(Error::Config(format!(
                            "{key}: orientations are numbered from 1"
                        )));
                    }
                    if slot == Slot::NOrient {
                        return Err(Error::Config("n_orient cannot vary per orientation".into()));
                    }
                    ParamVector::default().set(slot, v)?;
                    self.overrides.insert((o - 1, slot), v);
                }
            }
            return Ok(());
        }
        match key {
            "image" => self.image = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "method" => self.method = value.parse()?,
            "norm" => self.norm = value.parse()?,
            "mu1" => self.weights.mu1 = parse_num(key, value)?,
            "mu2" => self.weights.mu2 = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "budget" => self.search.budget = parse_num(key, value)?,
            "starts" => self.search.starts = parse_num(key, value)?,
            "xtol" => self.search.xtol = parse_num(key, value)?,
            "angular_ratio" => self.angular_ratio = parse_num(key, value)?,
            "boundary" => {
                self.engine.boundary = match value {
                    "periodic-smooth" => Boundary::PeriodicSmooth,
                    "periodic" => Boundary::Periodic,
                    _ => return Err(Error::Config(format!("boundary: unknown mode '{value}'"))),
                }
            }
            "amax" => {
                self.engine.amax = match value {
                    "orientation" => AmaxScope::PerOrientation,
                    "global" => AmaxScope::Global,
                    _ => return Err(Error::Config(format!("amax: unknown scope '{value}'"))),
                }
            }
            "debug_fields" => self.debug_fields = parse_bool(key, value)?,
            "timing" => self.timing = parse_bool(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Config file text that reproduces this configuration.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        if let Some(image) = &self.image {
            writeln!(s, "image = {}", image.display()).unwrap();
        }
        writeln!(s, "out = {}", self.out.display()).unwrap();
        writeln!(s, "method = {}", self.method).unwrap();
        writeln!(s, "norm = {}", self.norm).unwrap();
        writeln!(s, "mu1 = {}", self.weights.mu1).unwrap();
        writeln!(s, "mu2 = {}", self.weights.mu2).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "budget = {}", self.search.budget).unwrap();
        writeln!(s, "starts = {}", self.search.starts).unwrap();
        writeln!(s, "xtol = {}", self.search.xtol).unwrap();
        writeln!(s, "angular_ratio = {}", self.angular_ratio).unwrap();
        writeln!(s, "boundary = {}", boundary_name(self.engine.boundary)).unwrap();
        writeln!(s, "amax = {}", amax_name(self.engine.amax)).unwrap();
        writeln!(s, "debug_fields = {}", self.debug_fields).unwrap();
        writeln!(s, "timing = {}", self.timing).unwrap();
        for slot in Slot::ALL {
            writeln!(s, "{} = {}", slot, self.params.get(slot)).unwrap();
        }
        for ((o, slot), v) in &self.overrides {
            writeln!(s, "{}.{} = {}", slot, o + 1, v).unwrap();
        }
        for (slot, v) in &self.lower {
            writeln!(s, "{slot}.min = {v}").unwrap();
        }
        for (slot, v) in &self.upper {
            writeln!(s, "{slot}.max = {v}").unwrap();
        }
        s
    }

    pub fn criterion(&self) -> Result<Criterion> {
        Criterion::new(self.method, self.norm, self.weights)
    }

    /// One parameter set per orientation, with overrides applied.
    pub fn orientation_params(&self) -> Result<Vec<PcParams>> {
        let n_orient = self.params.n_orient;
        if let Some(((o, slot), _)) = self.overrides.iter().find(|((o, _), _)| *o >= n_orient) {
            return Err(Error::Config(format!(
                "{slot}.{} refers to a missing orientation (n_orient = {n_orient})",
                o + 1
            )));
        }
        (0..n_orient)
            .map(|o| {
                let mut v = self.params;
                for ((_, slot), value) in
                    self.overrides.range((o, Slot::Cutoff)..=(o, Slot::NOrient))
                {
                    v.set(*slot, *value)?;
                }
                let p = v.to_pc_params(self.angular_ratio);
                p.validate()?;
                Ok(p)
            })
            .collect()
    }

    pub fn bounds(&self) -> Result<ParamBounds> {
        if !self.overrides.is_empty() {
            return Err(Error::Config(
                "per-orientation values are only supported by run; optimize shares parameters across orientations".into(),
            ));
        }
        let mut bounds = ParamBounds::fixed(self.params);
        if self.lower.is_empty() && self.upper.is_empty() {
            let w = ParamBounds::weighting_only();
            for slot in [Slot::Cutoff, Slot::Gain] {
                bounds = bounds.with_range(slot, w.lower.get(slot), w.upper.get(slot))?;
            }
            return Ok(bounds);
        }
        for slot in Slot::ALL {
            match (self.lower.get(&slot), self.upper.get(&slot)) {
                (Some(&lo), Some(&hi)) => bounds = bounds.with_range(slot, lo, hi)?,
                (None, None) => {}
                _ => {
                    return Err(Error::Config(format!(
                        "{slot}: give both {slot}.min and {slot}.max"
                    )))
                }
            }
        }
        bounds.validate()?;
        Ok(bounds)
    }

    fn apply_args(&mut self, args: &CommonArgs) -> Result<()> {
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            self.apply_text(&text)?;
        }
        if let Some(image) = &args.image {
            self.image = Some(image.clone());
        }
        if let Some(out) = &args.out {
            self.out = out.clone();
        }
        if let Some(m) = &args.method {
            self.method = m.parse()?;
        }
        if let Some(n) = &args.norm {
            self.norm = n.parse()?;
        }
        if let Some(v) = args.mu1 {
            self.weights.mu1 = v;
        }
        if let Some(v) = args.mu2 {
            self.weights.mu2 = v;
        }
        if let Some(v) = args.seed {
            self.seed = v;
        }
        if let Some(v) = args.budget {
            self.search.budget = v;
        }
        self.debug_fields |= args.debug_fields;
        Ok(())
    }

    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_args(args)?;
        Ok(cfg)
    }

    fn load_image(&self) -> Result<(ImageGrid, String)> {
        let path = self
            .image
            .as_ref()
            .ok_or_else(|| Error::Config("no input image; pass --image or set image =".into()))?;
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let image = crate::imageio::decode_grayscale(&bytes)?;
        Ok((image, hex(&Sha256::digest(&bytes))))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory written under a temporary name and renamed into place
/// only on success.
struct Staging {
    tmp: PathBuf,
    out: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Staging {
    fn new(out: &Path) -> Result<Self> {
        let name = out
            .file_name()
            .ok_or_else(|| Error::Config(format!("invalid output directory '{}'", out.display())))?
            .to_string_lossy()
            .into_owned();
        let parent = match out.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| Error::io(&parent, e))?;
        let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
        }
        fs::create_dir(&tmp).map_err(|e| Error::io(&tmp, e))?;
        Ok(Staging {
            tmp,
            out: out.to_path_buf(),
            files: Vec::new(),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.tmp.join(name)
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(contents.as_bytes())
            .map_err(|e| Error::io(&path, e))
    }

    fn map(&mut self, name: &str, map: &Map, mode: WriteMode) -> Result<()> {
        let path = self.path(name);
        write_map(map, path, mode)
    }

    fn commit(mut self) -> Result<PathBuf> {
        if !self.out.exists() {
            fs::rename(&self.tmp, &self.out).map_err(|e| Error::io(&self.out, e))?;
        } else {
            for name in &self.files {
                let dest = self.out.join(name);
                fs::rename(self.tmp.join(name), &dest).map_err(|e| Error::io(&dest, e))?;
            }
            fs::remove_dir_all(&self.tmp).map_err(|e| Error::io(&self.tmp, e))?;
        }
        self.committed = true;
        Ok(self.out.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.tmp);
        }
    }
}

fn manifest(
    command: &str,
    cfg: &RunConfig,
    image: &ImageGrid,
    hash: &str,
    files: &[String],
) -> String {
    let mut s = String::new();
    writeln!(s, "tool = phasecon").unwrap();
    writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "command = {command}").unwrap();
    if let Some(path) = &cfg.image {
        writeln!(s, "image = {}", path.display()).unwrap();
    }
    writeln!(s, "image_sha256 = {hash}").unwrap();
    writeln!(s, "width = {}", image.width()).unwrap();
    writeln!(s, "height = {}", image.height()).unwrap();
    if let Some(d) = image.source_depth() {
        writeln!(s, "source_depth = {d}").unwrap();
    }
    writeln!(s, "seed = {}", cfg.seed).unwrap();
    writeln!(s, "config = config.txt").unwrap();
    writeln!(s, "files = {}", files.join(",")).unwrap();
    s
}

fn write_fields(
    stage: &mut Staging,
    prefix: &str,
    fields: &PcFieldSet,
    weights: CostWeights,
) -> Result<Map> {
    stage.map(
        &format!("{prefix}pc_joint.pgm"),
        &fields.joint,
        WriteMode::Clamp01,
    )?;
    for (o, f) in fields.orientations.iter().enumerate() {
        stage.map(
            &format!("{prefix}pc_o{}.pgm", o + 1),
            &f.pc,
            WriteMode::Clamp01,
        )?;
    }
    let mm = compute_moments(&fields.pc_maps(), &fields.thetas())?;
    stage.map(
        &format!("{prefix}moment_max.pgm"),
        &mm.m_max,
        WriteMode::Rescale,
    )?;
    stage.map(
        &format!("{prefix}moment_min.pgm"),
        &mm.m_min,
        WriteMode::Rescale,
    )?;
    let cost = combined_cost(&mm.m_max, &mm.m_min, weights)?;
    stage.map(&format!("{prefix}cost.pgm"), &cost, WriteMode::Rescale)?;
    Ok(cost)
}

fn write_debug_fields(
    stage: &mut Staging,
    fields: &PcFieldSet,
    params: &[PcParams],
    padded: (usize, usize),
) -> Result<()> {
    let mut noise = String::from("orientation,theta,finest_scale,mean,std,threshold\n");
    for (o, f) in fields.orientations.iter().enumerate() {
        let i = o + 1;
        stage.map(
            &format!("debug_energy_o{i}.pgm"),
            &f.energy,
            WriteMode::Rescale,
        )?;
        stage.map(
            &format!("debug_amplitude_sum_o{i}.pgm"),
            &f.amplitude_sum,
            WriteMode::Rescale,
        )?;
        stage.map(
            &format!("debug_spread_o{i}.pgm"),
            &f.spread,
            WriteMode::Clamp01,
        )?;
        stage.map(
            &format!("debug_weight_o{i}.pgm"),
            &f.weight,
            WriteMode::Clamp01,
        )?;
        stage.map(
            &format!("debug_even_o{i}.pgm"),
            &f.even_sum,
            WriteMode::Rescale,
        )?;
        stage.map(
            &format!("debug_odd_o{i}.pgm"),
            &f.odd_sum,
            WriteMode::Rescale,
        )?;
        let n = &f.noise;
        writeln!(
            noise,
            "{i},{},{},{},{},{}",
            f.theta, n.finest_scale, n.mean, n.std, n.threshold
        )
        .unwrap();
        let bank = build_bank(&params[o].bank, padded.0, padded.1)?;
        for s in 0..params[o].bank.n_scales {
            stage.map(
                &format!("debug_filter_o{i}_n{}.pgm", s + 1),
                &centered_grid(&bank, o, s),
                WriteMode::Clamp01,
            )?;
        }
    }
    stage.text("debug_noise.csv", &noise)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out: PathBuf,
    pub fields: PcFieldSet,
    pub cost: Map,
}

pub fn cmd_run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.weights.validate()?;
    let params = cfg.orientation_params()?;
    let (image, hash) = cfg.load_image()?;
    let engine = PcEngine::with_options(&image, cfg.engine);
    let fields = engine.compute_per_orientation(&params)?;

    let mut stage = Staging::new(&cfg.out)?;
    let cost = write_fields(&mut stage, "", &fields, cfg.weights)?;
    if cfg.debug_fields {
        write_debug_fields(&mut stage, &fields, &params, engine.padded_dims())?;
    }
    stage.text("config.txt", &cfg.to_config_text())?;
    let files = stage.files.clone();
    stage.text("manifest.txt", &manifest("run", cfg, &image, &hash, &files))?;
    let out = stage.commit()?;
    Ok(RunOutcome { out, fields, cost })
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub out: PathBuf,
    pub summary: String,
    pub best: Vec<ParamVector>,
    pub best_score: f64,
}

fn summarize_vector(s: &mut String, prefix: &str, bounds: &ParamBounds, trace: &OptimizationTrace) {
    writeln!(s, "{prefix}score = {}", trace.best_score).unwrap();
    writeln!(s, "{prefix}evaluations = {}", trace.evaluations.len()).unwrap();
    writeln!(s, "{prefix}termination = {}", trace.termination).unwrap();
    for slot in Slot::ALL {
        writeln!(s, "{prefix}{slot} = {}", trace.best.get(slot)).unwrap();
    }
    let flags = bounds.boundary_flags(&trace.best);
    for slot in bounds.active_slots() {
        let side = flags
            .iter()
            .find(|(f, _)| *f == slot)
            .map(|(_, side)| side.to_string())
            .unwrap_or_else(|| "interior".into());
        writeln!(s, "{prefix}bound.{slot} = {side}").unwrap();
    }
}

struct ModeResult {
    label: &'static str,
    /// Score of the combined cost map under the joint criterion.
    aggregate: f64,
    cost: Map,
    fields: PcFieldSet,
    best: Vec<ParamVector>,
    primary_score: f64,
}

fn run_mode(
    image: &ImageGrid,
    cfg: &RunConfig,
    criterion: Criterion,
    bounds: &ParamBounds,
    stage: &mut Staging,
    summary: &mut String,
) -> Result<ModeResult> {
    let evaluator =
        CandidateEvaluator::with_options(image, criterion, cfg.engine, cfg.angular_ratio)?;
    if criterion.kind.is_joint() {
        let r = optimize_joint(&evaluator, bounds, &cfg.search, cfg.seed)?;
        stage.text("joint_trace.csv", &r.trace.to_csv(cfg.timing))?;
        for (i, note) in r.bound_notes.iter().enumerate() {
            writeln!(summary, "joint.note.{} = {note}", i + 1).unwrap();
        }
        summarize_vector(summary, "joint.", &r.bounds, &r.trace);
        let fields = evaluator.fields(&r.trace.best)?;
        let cost = evaluator.cost_map(&fields)?;
        Ok(ModeResult {
            label: "joint",
            aggregate: r.trace.best_score,
            cost,
            fields,
            best: vec![r.trace.best],
            primary_score: r.trace.best_score,
        })
    } else {
        let r = optimize_per_orientation(&evaluator, bounds, &cfg.search, cfg.seed)?;
        for (i, note) in r.bound_notes.iter().enumerate() {
            writeln!(summary, "per_orientation.note.{} = {note}", i + 1).unwrap();
        }
        for o in &r.orientations {
            let i = o.orientation + 1;
            stage.text(
                &format!("per_orientation_trace_o{i}.csv"),
                &o.trace.to_csv(cfg.timing),
            )?;
            writeln!(summary, "per_orientation.o{i}.theta = {}", o.theta).unwrap();
            summarize_vector(
                summary,
                &format!("per_orientation.o{i}."),
                &r.bounds,
                &o.trace,
            );
        }
        writeln!(
            summary,
            "per_orientation.aggregate_score = {}",
            r.aggregate_score
        )
        .unwrap();
        Ok(ModeResult {
            label: "per_orientation",
            aggregate: r.aggregate_score,
            cost: r.cost,
            fields: r.fields,
            best: r.orientations.iter().map(|o| o.trace.best).collect(),
            primary_score: r.aggregate_score,
        })
    }
}

pub fn cmd_optimize(cfg: &RunConfig) -> Result<OptimizeOutcome> {
    let criterion = cfg.criterion()?;
    let bounds = cfg.bounds()?;
    let (image, hash) = cfg.load_image()?;
    criterion.check_dims(image.width(), image.height())?;

    let mut stage = Staging::new(&cfg.out)?;
    let mut summary = String::new();
    writeln!(summary, "method = {}", criterion.kind).unwrap();
    writeln!(summary, "norm = {}", criterion.norm).unwrap();
    writeln!(summary, "mu1 = {}", criterion.weights.mu1).unwrap();
    writeln!(summary, "mu2 = {}", criterion.weights.mu2).unwrap();
    writeln!(summary, "seed = {}", cfg.seed).unwrap();
    writeln!(summary, "budget = {}", cfg.search.budget).unwrap();
    writeln!(summary, "starts = {}", cfg.search.starts).unwrap();

    let primary = run_mode(&image, cfg, criterion, &bounds, &mut stage, &mut summary)?;
    write_fields(&mut stage, "", &primary.fields, criterion.weights)?;
    stage.map("cost_opt.pgm", &primary.cost, WriteMode::Rescale)?;

    if criterion.weights.is_unit() {
        if let Some(kind) = criterion.kind.counterpart() {
            let mut other_bounds = bounds;
            if kind == CriterionKind::NormPerOrientation
                || kind == CriterionKind::DOptimalPerOrientation
            {
                // The per-orientation search needs a fixed orientation count.
                let o = primary.best[0].n_orient as f64;
                other_bounds = other_bounds.with_range(Slot::NOrient, o, o)?;
            }
            let other = Criterion::new(kind, criterion.norm, criterion.weights)?;
            let secondary = run_mode(&image, cfg, other, &other_bounds, &mut stage, &mut summary)?;
            let (joint, per) = if primary.label == "joint" {
                (&primary, &secondary)
            } else {
                (&secondary, &primary)
            };
            writeln!(summary, "comparison.joint_score = {}", joint.aggregate).unwrap();
            writeln!(
                summary,
                "comparison.per_orientation_aggregate_score = {}",
                per.aggregate
            )
            .unwrap();
            let diff = joint.cost.zip_with(&per.cost, |a, b| a - b)?;
            let max_abs = diff.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            writeln!(summary, "comparison.max_abs_cost_difference = {max_abs}").unwrap();
            stage.map(
                &format!("{}_cost.pgm", secondary.label),
                &secondary.cost,
                WriteMode::Rescale,
            )?;
            stage.map("cost_difference.pgm", &diff, WriteMode::Rescale)?;
        }
    }

    stage.text("summary.txt", &summary)?;
    stage.text("config.txt", &cfg.to_config_text())?;
    let files = stage.files.clone();
    stage.text(
        "manifest.txt",
        &manifest("optimize", cfg, &image, &hash, &files),
    )?;
    let out = stage.commit()?;
    Ok(OptimizeOutcome {
        out,
        summary,
        best: primary.best,
        best_score: primary.primary_score,
    })
}

pub fn cmd_selfcheck(args: &SelfcheckArgs) -> Result<selfcheck::Report> {
    let report = selfcheck::run(
        args.seed,
        selfcheck::Hooks {
            corrupt_norm: args.corrupt_norm,
        },
    )?;
    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let path = out.join("selfcheck.txt");
        fs::write(&path, report.render()).map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig::from_args(&args)?;
            let r = cmd_run(&cfg)?;
            println!("wrote {}", r.out.display());
            println!("joint pc max = {}", r.fields.joint.max());
            Ok(0)
        }
        Command::Optimize(args) => {
            let cfg = RunConfig::from_args(&args)?;
            let r = cmd_optimize(&cfg)?;
            print!("{}", r.summary);
            println!("wrote {}", r.out.display());
            Ok(0)
        }
        Command::Selfcheck(args) => {
            let report = cmd_selfcheck(&args)?;
            print!("{}", report.render());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}
