//! Command-line front end. Every command validates its inputs, writes its
//! outputs, and records a manifest of inputs, output hashes, seed and timings
//! next to them. Progress goes to stderr; data goes only to the named files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::assess::{assess, label_overlay, WeightMode};
use crate::demand::{
    constrain, crosstab, horizon_steps, project, to_conditional, to_demand, Demand, Redistribution,
};
use crate::engine::{simulate, sweep_radius, SimConfig, SimulationOutcome};
use crate::error::{Error, Result};
use crate::features::{
    assemble, distance_grid, kde_grid, normalize, scott_bandwidth, FeatureMatrix, GridSpec,
    SampleMode, VariableGrid,
};
use crate::geom::BBox;
use crate::io::{
    self, GridKind, GridSource, MarkovConfig, ModelChoice, ModelConfig, RunConfig, SimulationFile,
};
use crate::models::{build_training_set, train_lr, train_mlp, train_rf, ProbabilityModel};
use crate::parcel::{CategorySet, Landscape};
use crate::subdivision::{subdivide, SubdivisionConfig};
use crate::vecli::{landscape_report, li_similarity, FilterRule, LandscapeReport};

pub const WORKERS_ENV: &str = "PARCEL_CA_WORKERS";

#[derive(Parser, Debug)]
#[command(
    name = "parcel-ca",
    version,
    about = "Parcel-based cellular automaton land-use simulation"
)]
pub struct Cli {
    /// Worker threads; defaults to $PARCEL_CA_WORKERS or the available parallelism.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Only report warnings and errors.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bisect parcels into minimum cells.
    Subdivide(SubdivideArgs),
    /// Sample spatial variables into a per-cell feature table.
    Features(FeaturesArgs),
    /// Train a transition probability model.
    Train(TrainArgs),
    /// Run the simulation.
    Simulate(SimulateArgs),
    /// Score a simulated map against the actual one.
    Assess(AssessArgs),
    /// Compute landscape indices and their similarity.
    Vecli(VecliArgs),
    /// Project land-use demand with a Markov chain.
    Demand(DemandArgs),
    /// Score one simulation per neighborhood radius.
    Sweep(SweepArgs),
    /// Run the whole workflow from a config file.
    Run(RunArgs),
}

#[derive(Args, Debug)]
pub struct CategoryArg {
    /// Comma-separated category table; overrides the one in the map files.
    #[arg(long, value_delimiter = ',')]
    pub categories: Option<Vec<String>>,
}

impl CategoryArg {
    fn set(&self) -> Result<Option<CategorySet>> {
        self.categories
            .as_ref()
            .map(|c| CategorySet::new(c.iter().cloned()))
            .transpose()
    }
}

#[derive(Args, Debug)]
pub struct SubdivideArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Stop splitting at this area in m²; defaults to the mean parcel area.
    #[arg(long)]
    pub target_area: Option<f64>,
    #[arg(long, default_value_t = 32)]
    pub max_depth: u32,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub cells: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// A variable as NAME=KIND:PATH with KIND one of file, distance, kde. Repeatable; column order follows.
    #[arg(long = "var", required = true)]
    pub vars: Vec<String>,
    /// KDE bandwidth in meters; Scott's rule when absent.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Cell size of grids built from point files.
    #[arg(long, default_value_t = crate::features::DEFAULT_CELL_SIZE)]
    pub cell_size: f64,
    #[arg(long, default_value = "centroid")]
    pub sample: SampleMode,
    /// Use raw grid values instead of rescaling each grid to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub cells: PathBuf,
    /// Map at the end date providing the labels.
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// lr, mlp or rf; overrides the config file.
    #[arg(long)]
    pub model: Option<ModelChoice>,
    /// TOML or JSON model settings (kind, train_fraction, balanced, lr, mlp, rf).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub balanced: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct SimInputs {
    #[arg(long)]
    pub cells: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Target areas as CSV (category,target_area) or JSON.
    #[arg(long)]
    pub demand: PathBuf,
    /// TOML or JSON with [simulation] and [scenario] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Constraint preset: unrestricted, farmland or eco.
    #[arg(long)]
    pub scenario: Option<crate::engine::Scenario>,
    /// Zone polygon file; repeatable. Extends the config's zones.
    #[arg(long = "zones")]
    pub zones: Vec<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inputs: SimInputs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
}

#[derive(Args, Debug)]
pub struct AssessArgs {
    #[arg(long)]
    pub initial: PathBuf,
    #[arg(long)]
    pub simulated: PathBuf,
    #[arg(long)]
    pub actual: PathBuf,
    #[arg(long, default_value = "area")]
    pub mode: WeightMode,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a one-row CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct VecliArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Reference map; adds its indices and the similarity to the output.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = crate::geom::DEFAULT_ADJACENCY_TOL)]
    pub adjacency_tol: f64,
    /// none, ksigma:K or min:AREA.
    #[arg(long, default_value = "none")]
    pub filter: String,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct DemandArgs {
    /// Map one period before `--later`.
    #[arg(long)]
    pub earlier: PathBuf,
    #[arg(long)]
    pub later: PathBuf,
    /// Cells over which maps are cross-tabulated; defaults to `--later`.
    #[arg(long)]
    pub cells: Option<PathBuf>,
    #[arg(long)]
    pub period_years: f64,
    #[arg(long)]
    pub base_year: f64,
    #[arg(long)]
    pub target_year: f64,
    /// Forbidden transition FROM:TO; repeatable.
    #[arg(long = "forbid")]
    pub forbid: Vec<String>,
    #[arg(long, default_value = "persist")]
    pub redistribution: String,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the cross-tabulated areas.
    #[arg(long)]
    pub crosstab: Option<PathBuf>,
    /// Also write the constrained transition matrix.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[command(flatten)]
    pub cats: CategoryArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: SimInputs,
    #[arg(long)]
    pub actual: PathBuf,
    /// START:END:STEP or a comma-separated list.
    #[arg(long, default_value = "100:1000:100")]
    pub radii: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}

/// Parses `100:1000:100` (inclusive) or `100,200,500`.
pub fn parse_radii(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad radii {s:?}"));
    let nums = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let radii = if parts.len() == 3 {
        let (a, b, step) = (nums(parts[0])?, nums(parts[1])?, nums(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    } else {
        s.split(',').map(nums).collect::<Result<Vec<_>>>()?
    };
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) {
        return Err(bad());
    }
    Ok(radii)
}

pub fn parse_filter(s: &str) -> Result<FilterRule> {
    let bad = || {
        Error::InvalidConfig(format!(
            "bad filter {s:?}; expected none, ksigma:K or min:AREA"
        ))
    };
    match s.split_once(':') {
        None if s == "none" => Ok(FilterRule::None),
        Some(("ksigma", k)) => Ok(FilterRule::BelowKSigma {
            k: k.parse().map_err(|_| bad())?,
        }),
        Some(("min", a)) => Ok(FilterRule::Absolute {
            min_area: a.parse().map_err(|_| bad())?,
        }),
        _ => Err(bad()),
    }
}

/// `NAME=KIND:PATH`.
pub fn parse_var(s: &str, bandwidth: Option<f64>) -> Result<GridSource> {
    let bad = || Error::InvalidConfig(format!("bad variable {s:?}; expected NAME=KIND:PATH"));
    let (name, rest) = s.split_once('=').ok_or_else(bad)?;
    let (kind, path) = rest.split_once(':').ok_or_else(bad)?;
    let kind = match kind {
        "file" => GridKind::File,
        "distance" => GridKind::Distance,
        "kde" => GridKind::Kde,
        _ => return Err(bad()),
    };
    if name.is_empty() || path.is_empty() {
        return Err(bad());
    }
    Ok(GridSource {
        name: name.to_string(),
        kind,
        path: PathBuf::from(path),
        bandwidth,
    })
}

fn parse_pair(s: &str) -> Result<(String, String)> {
    s.split_once(':')
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .ok_or_else(|| Error::InvalidConfig(format!("bad transition {s:?}; expected FROM:TO")))
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    format_version: u32,
    command: &'a str,
    args: &'a [String],
    seed: Option<u64>,
    workers: usize,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
    timings_ms: Vec<(String, f64)>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output bookkeeping for one command.
pub struct Session {
    command: String,
    args: Vec<String>,
    workers: usize,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<(PathBuf, String)>,
    timings: Vec<(String, f64)>,
    started: Instant,
}

impl Session {
    fn new(command: &str, args: Vec<String>, workers: usize) -> Self {
        Session {
            command: command.to_string(),
            args,
            workers,
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
        }
    }

    fn input(&mut self, p: &Path) -> PathBuf {
        if !self.inputs.iter().any(|q| q == p) {
            self.inputs.push(p.to_path_buf());
        }
        p.to_path_buf()
    }

    fn emit(&mut self, path: &Path, text: &str) -> Result<()> {
        self.outputs
            .push((path.to_path_buf(), sha256_hex(text.as_bytes())));
        io::write_text(path, text)?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, path: &Path, v: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        self.emit(path, &s)
    }

    fn lap(&mut self, stage: &str) {
        let ms = self.started.elapsed().as_secs_f64() * 1e3;
        self.timings.push((stage.to_string(), ms));
    }

    fn write_manifest(&mut self, path: &Path) -> Result<()> {
        let inputs = self
            .inputs
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
                Ok(FileEntry {
                    path: p.display().to_string(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect::<Result<_>>()?;
        let outputs = self
            .outputs
            .iter()
            .map(|(p, h)| FileEntry {
                path: p.display().to_string(),
                sha256: h.clone(),
            })
            .collect();
        self.lap("total");
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            format_version: io::FORMAT_VERSION,
            command: &self.command,
            args: &self.args,
            seed: self.seed,
            workers: self.workers,
            inputs,
            outputs,
            timings_ms: self.timings.clone(),
        };
        let mut s = serde_json::to_string_pretty(&m)?;
        s.push('\n');
        io::write_text(path, &s)?;
        self.outputs.push((path.to_path_buf(), String::new()));
        Ok(())
    }

    fn cleanup(&self) {
        for (p, _) in &self.outputs {
            if std::fs::remove_file(p).is_ok() {
                log::warn!("removed partial output {}", p.display());
            }
        }
    }
}

fn manifest_beside(primary: &Path) -> PathBuf {
    let mut name = primary
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

fn bbox_of(ls: &Landscape) -> Result<BBox> {
    let mut it = ls.parcels().iter().map(|p| p.geometry().bbox());
    let first = it
        .next()
        .ok_or_else(|| Error::InvalidLandscape("landscape has no parcels".into()))?;
    Ok(it.fold(first, |a, b| {
        BBox::of_points(&[a.min, a.max, b.min, b.max]).expect("non-empty")
    }))
}

/// Loads or builds every variable grid, optionally normalized.
pub fn build_grids(
    sess: &mut Session,
    cells: &Landscape,
    sources: &[GridSource],
    cell_size: f64,
    normalize_grids: bool,
) -> Result<Vec<(String, VariableGrid)>> {
    let spec = GridSpec::covering(bbox_of(cells)?, cell_size)?;
    let mut out = Vec::with_capacity(sources.len());
    for s in sources {
        let path = sess.input(&s.path);
        let g = match s.kind {
            GridKind::File => io::read_grid(&path)?,
            GridKind::Distance => distance_grid(&io::read_points(&path)?, spec)?,
            GridKind::Kde => {
                let pts = io::read_points(&path)?;
                let bw = match s.bandwidth {
                    Some(b) => b,
                    None => scott_bandwidth(&pts).ok_or_else(|| {
                        Error::InvalidConfig(format!(
                            "cannot pick a bandwidth for {}: too few points",
                            s.name
                        ))
                    })?,
                };
                kde_grid(&pts, spec, bw)?
            }
        };
        out.push((
            s.name.clone(),
            if normalize_grids { normalize(&g)? } else { g },
        ));
    }
    Ok(out)
}

pub fn train_model(
    features: &FeatureMatrix,
    cells: &Landscape,
    actual: &Landscape,
    cfg: &ModelConfig,
    seed: u64,
) -> Result<ProbabilityModel> {
    let mut ts = build_training_set(features, cells, actual, cfg.train_fraction, seed)?;
    if cfg.balanced {
        ts = ts.balanced();
    }
    match cfg.kind {
        ModelChoice::Lr => train_lr(&ts, &cfg.lr),
        ModelChoice::Mlp => train_mlp(&ts, &cfg.mlp),
        ModelChoice::Rf => train_rf(&ts, &cfg.rf),
    }
}

/// Markov demand projected from `earlier` to `later` and applied to the cells' total area.
#[allow(clippy::too_many_arguments)]
pub fn markov_demand(
    earlier: &Landscape,
    later: &Landscape,
    cells: &Landscape,
    m: &MarkovConfig,
) -> Result<(
    Demand,
    crate::demand::CrossTab,
    crate::demand::TransitionMatrix,
)> {
    let ct = crosstab(earlier, later, cells, m.period_years)?;
    let tm = constrain(
        &to_conditional(&ct),
        &m.forbidden_ids(cells.categories())?,
        m.redistribution,
    )?;
    let total = ct.total();
    let shares: Vec<f64> = ct.end_areas().iter().map(|a| a / total).collect();
    let steps = horizon_steps(m.base_year, m.target_year, m.period_years)?;
    let projected = project(&shares, &tm, steps)?;
    Ok((
        to_demand(cells.categories().names(), &projected, cells.total_area()),
        ct,
        tm,
    ))
}

fn emit_simulation(
    sess: &mut Session,
    out: &SimulationOutcome,
    map: &Path,
    trace: &Path,
) -> Result<()> {
    for w in &out.warnings {
        log::warn!("{w}");
    }
    sess.emit(map, &io::parcels_to_string(&out.landscape))?;
    sess.emit(trace, &io::trace_to_string(&out.trace))
}

fn vecli_outputs(
    sess: &mut Session,
    map: &Landscape,
    reference: Option<&Landscape>,
    tol: f64,
    filter: FilterRule,
    json: &Path,
    csv: Option<&Path>,
) -> Result<()> {
    let r = landscape_report(map, tol, filter)?;
    match reference {
        None => {
            sess.emit_json(json, &r)?;
            if let Some(c) = csv {
                sess.emit(c, &io::report_to_csv(&r, map.categories()))?;
            }
        }
        Some(actual) => {
            let a: LandscapeReport = landscape_report(actual, tol, filter)?;
            let similarity = li_similarity(&r, &a);
            if let Some(c) = csv {
                let table = io::li_table(&[
                    ("simulated".into(), &r, Some(similarity.alpha)),
                    ("actual".into(), &a, None),
                ]);
                sess.emit(c, &table)?;
            }
            sess.emit_json(
                json,
                &io::SimilarityReport {
                    format_version: io::FORMAT_VERSION,
                    simulated: r,
                    actual: a,
                    similarity,
                },
            )?;
        }
    }
    Ok(())
}

fn read_map(sess: &mut Session, path: &Path, cats: Option<&CategorySet>) -> Result<Landscape> {
    io::read_parcels(&sess.input(path), cats)
}

fn load_sim_inputs(
    sess: &mut Session,
    a: &SimInputs,
) -> Result<(
    Landscape,
    FeatureMatrix,
    ProbabilityModel,
    Demand,
    SimConfig,
    crate::engine::ScenarioConstraints,
)> {
    let cats = a.cats.set()?;
    let cells = read_map(sess, &a.cells, cats.as_ref())?;
    let features = io::read_features(&sess.input(&a.features))?;
    let model = io::read_model(&sess.input(&a.model))?;
    let demand = io::read_demand(&sess.input(&a.demand))?;
    let mut file = match &a.config {
        Some(p) => SimulationFile::read(&sess.input(p))?,
        None => SimulationFile::default(),
    };
    if let Some(s) = a.scenario {
        file.scenario.preset = s;
    }
    file.scenario.zones.extend(a.zones.iter().cloned());
    for z in file.scenario.zones.clone() {
        sess.input(&z);
    }
    if let Some(seed) = a.seed {
        file.simulation.seed = seed;
    }
    sess.seed = Some(file.simulation.seed);
    let sc = file.scenario.build(cells.categories())?;
    demand.check(&cells)?;
    Ok((cells, features, model, demand, file.simulation, sc))
}

fn execute(cmd: &Command, sess: &mut Session) -> Result<PathBuf> {
    match cmd {
        Command::Subdivide(a) => {
            let ls = read_map(sess, &a.input, a.cats.set()?.as_ref())?;
            let cfg = SubdivisionConfig {
                target_area: a.target_area,
                max_depth: a.max_depth,
            };
            let sub = subdivide(&ls, &cfg)?;
            for w in &sub.warnings {
                log::warn!("parcel {}: {}", w.parcel_id, w.message);
            }
            log::info!(
                "{} parcels -> {} cells (target {:.1} m²)",
                ls.len(),
                sub.landscape.len(),
                sub.target_area
            );
            sess.emit(&a.out, &io::parcels_to_string(&sub.landscape))?;
            Ok(a.out.clone())
        }
        Command::Features(a) => {
            let cells = read_map(sess, &a.cells, a.cats.set()?.as_ref())?;
            let sources = a
                .vars
                .iter()
                .map(|v| parse_var(v, a.bandwidth))
                .collect::<Result<Vec<_>>>()?;
            let grids = build_grids(sess, &cells, &sources, a.cell_size, !a.no_normalize)?;
            let m = assemble(&cells, &grids, a.sample)?;
            sess.emit(&a.out, &io::features_to_string(&m))?;
            Ok(a.out.clone())
        }
        Command::Train(a) => {
            let cats = a.cats.set()?;
            let features = io::read_features(&sess.input(&a.features))?;
            let cells = read_map(sess, &a.cells, cats.as_ref())?;
            let actual = read_map(sess, &a.actual, Some(cells.categories()))?;
            let mut cfg: ModelConfig = match &a.config {
                Some(p) => read_model_config(&sess.input(p))?,
                None => ModelConfig::default(),
            };
            if let Some(k) = a.model {
                cfg.kind = k;
            }
            if let Some(f) = a.train_fraction {
                cfg.train_fraction = f;
            }
            cfg.balanced |= a.balanced;
            sess.seed = Some(a.seed);
            let m = train_model(&features, &cells, &actual, &cfg, a.seed)?;
            if let Some(acc) = m.holdout_accuracy {
                log::info!("{} holdout accuracy {acc:.4}", m.kind_name());
            }
            sess.emit_json(&a.out, &m)?;
            Ok(a.out.clone())
        }
        Command::Simulate(a) => {
            let (cells, features, model, demand, cfg, sc) = load_sim_inputs(sess, &a.inputs)?;
            let out = simulate(&cells, &model, &features, &cfg, &demand, &sc)?;
            emit_simulation(sess, &out, &a.out, &a.trace)?;
            Ok(a.out.clone())
        }
        Command::Assess(a) => {
            let cats = a.cats.set()?;
            let initial = read_map(sess, &a.initial, cats.as_ref())?;
            let simulated = read_map(sess, &a.simulated, Some(initial.categories()))?;
            let actual = read_map(sess, &a.actual, Some(initial.categories()))?;
            let r = assess_maps(&initial, &simulated, &actual, a.mode)?;
            log::info!("FoM {:.4}, PA {:.4}, UA {:.4}", r.fom, r.pa, r.ua);
            sess.emit_json(&a.out, &r)?;
            if let Some(c) = &a.csv {
                sess.emit(c, &io::accuracy_to_csv(&r))?;
            }
            Ok(a.out.clone())
        }
        Command::Vecli(a) => {
            let cats = a.cats.set()?;
            let map = read_map(sess, &a.map, cats.as_ref())?;
            let reference = a
                .compare
                .as_ref()
                .map(|p| read_map(sess, p, Some(map.categories())))
                .transpose()?;
            let filter = parse_filter(&a.filter)?;
            vecli_outputs(
                sess,
                &map,
                reference.as_ref(),
                a.adjacency_tol,
                filter,
                &a.out,
                a.csv.as_deref(),
            )?;
            Ok(a.out.clone())
        }
        Command::Demand(a) => {
            let cats = a.cats.set()?;
            let later = read_map(sess, &a.later, cats.as_ref())?;
            let earlier = read_map(sess, &a.earlier, Some(later.categories()))?;
            let cells = match &a.cells {
                Some(p) => read_map(sess, p, Some(later.categories()))?,
                None => later.clone(),
            };
            let redistribution = match a.redistribution.as_str() {
                "persist" => Redistribution::Persist,
                "proportional" => Redistribution::Proportional,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "unknown redistribution {other:?}"
                    )))
                }
            };
            let m = MarkovConfig {
                earlier: a.earlier.clone(),
                period_years: a.period_years,
                base_year: a.base_year,
                target_year: a.target_year,
                forbidden: a
                    .forbid
                    .iter()
                    .map(|s| parse_pair(s))
                    .collect::<Result<_>>()?,
                redistribution,
            };
            let (d, ct, tm) = markov_demand(&earlier, &later, &cells, &m)?;
            if let Some(p) = &a.crosstab {
                sess.emit(p, &io::crosstab_to_string(&ct))?;
            }
            if let Some(p) = &a.matrix {
                sess.emit(p, &io::transition_to_string(&ct.categories, &tm))?;
            }
            emit_demand(sess, &d, &a.out)?;
            Ok(a.out.clone())
        }
        Command::Sweep(a) => {
            let radii = parse_radii(&a.radii)?;
            let (cells, features, model, demand, cfg, sc) = load_sim_inputs(sess, &a.inputs)?;
            let actual = read_map(sess, &a.actual, Some(cells.categories()))?;
            let labels = label_overlay(&cells, &actual)?;
            let actual_cells = cells.with_assignment(&labels)?;
            let t = sweep_radius(
                &cells,
                &model,
                &features,
                &cfg,
                &demand,
                &sc,
                &actual_cells,
                &radii,
            )?;
            if let Some(b) = t.best_radius {
                log::info!("best radius {b}");
            }
            sess.emit(&a.out, &io::sweep_to_csv(&t))?;
            Ok(a.out.clone())
        }
        Command::Run(a) => run_config(sess, &a.config),
    }
}

fn emit_demand(sess: &mut Session, d: &Demand, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        sess.emit_json(path, d)
    } else {
        sess.emit(path, &io::demand_to_string(d))
    }
}

fn read_model_config(path: &Path) -> Result<ModelConfig> {
    let text = io::read_text(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    } else {
        toml::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// Scores `simulated` against `actual`. The actual map is transferred onto
/// the initial cells by majority overlap, so it may have its own geometry.
pub fn assess_maps(
    initial: &Landscape,
    simulated: &Landscape,
    actual: &Landscape,
    mode: WeightMode,
) -> Result<crate::assess::AccuracyReport> {
    let sim = initial.with_assignment(&label_overlay(initial, simulated)?)?;
    let act = initial.with_assignment(&label_overlay(initial, actual)?)?;
    assess(initial, &sim, &act, mode)
}

/// Names of the files `run` writes into the output directory.
pub mod run_files {
    pub const CELLS: &str = "cells.geojson";
    pub const FEATURES: &str = "features.csv";
    pub const MODEL: &str = "model.json";
    pub const DEMAND: &str = "demand.csv";
    pub const SIMULATED: &str = "simulated.geojson";
    pub const TRACE: &str = "trace.jsonl";
    pub const ACCURACY: &str = "accuracy.json";
    pub const VECLI: &str = "vecli.json";
    pub const LI_TABLE: &str = "li_table.csv";
    pub const SWEEP: &str = "sweep.csv";
    pub const MANIFEST: &str = "manifest.json";
}

fn run_config(sess: &mut Session, path: &Path) -> Result<PathBuf> {
    use run_files::*;
    let cfg = RunConfig::read(&sess.input(path))?;
    let cats = cfg.category_set()?;
    let dir = cfg.output.dir.clone();
    let mut sim_cfg = cfg.simulation.clone();
    if let Some(s) = cfg.seed {
        sim_cfg.seed = s;
    }
    sess.seed = Some(sim_cfg.seed);

    // Validate every input before writing anything.
    let parcels = read_map(sess, &cfg.inputs.parcels, Some(&cats))?;
    let actual = cfg
        .inputs
        .actual
        .as_ref()
        .map(|p| read_map(sess, p, Some(&cats)))
        .transpose()?;
    let model_in = cfg
        .inputs
        .model
        .as_ref()
        .map(|p| io::read_model(&sess.input(p)))
        .transpose()?;
    if model_in.is_none() && actual.is_none() {
        return Err(Error::InvalidConfig(
            "training needs inputs.actual or an existing inputs.model".into(),
        ));
    }
    let sc = cfg.scenario.build(&cats)?;
    for z in &cfg.scenario.zones {
        sess.input(z);
    }
    let explicit = cfg.demand.explicit(&cats)?;
    let earlier = cfg
        .demand
        .markov
        .as_ref()
        .map(|m| read_map(sess, &m.earlier, Some(&cats)))
        .transpose()?;
    if let Some(sw) = &cfg.sweep {
        if actual.is_none() {
            return Err(Error::InvalidConfig("a sweep needs inputs.actual".into()));
        }
        if sw.radii.is_empty() || sw.radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidConfig("sweep radii must be positive".into()));
        }
    }
    sess.lap("read inputs");

    let sub = subdivide(&parcels, &cfg.subdivision)?;
    for w in &sub.warnings {
        log::warn!("parcel {}: {}", w.parcel_id, w.message);
    }
    let cells = sub.landscape;
    sess.emit(&dir.join(CELLS), &io::parcels_to_string(&cells))?;
    sess.lap("subdivide");

    let grids = build_grids(
        sess,
        &cells,
        &cfg.features.grids,
        cfg.features.cell_size,
        cfg.features.normalize,
    )?;
    let features = assemble(&cells, &grids, cfg.features.sample)?;
    sess.emit(&dir.join(FEATURES), &io::features_to_string(&features))?;
    sess.lap("features");

    let model = match model_in {
        Some(m) => m,
        None => train_model(
            &features,
            &cells,
            actual.as_ref().unwrap(),
            &cfg.model,
            sim_cfg.seed,
        )?,
    };
    sess.emit_json(&dir.join(MODEL), &model)?;
    sess.lap("train");

    let demand = match (explicit, &cfg.demand.markov, &earlier) {
        (Some(d), _, _) => d,
        (None, Some(m), Some(e)) => markov_demand(e, &parcels, &cells, m)?.0,
        _ => unreachable!("validated by RunConfig::read"),
    };
    demand.check(&cells)?;
    emit_demand(sess, &demand, &dir.join(DEMAND))?;
    sess.lap("demand");

    let out = simulate(&cells, &model, &features, &sim_cfg, &demand, &sc)?;
    emit_simulation(sess, &out, &dir.join(SIMULATED), &dir.join(TRACE))?;
    sess.lap("simulate");

    if let Some(actual) = &actual {
        let r = assess_maps(&cells, &out.landscape, actual, WeightMode::Area)?;
        log::info!("FoM {:.4}, PA {:.4}, UA {:.4}", r.fom, r.pa, r.ua);
        sess.emit_json(&dir.join(ACCURACY), &r)?;
        vecli_outputs(
            sess,
            &out.landscape,
            Some(actual),
            cfg.vecli.adjacency_tol,
            cfg.vecli.filter,
            &dir.join(VECLI),
            Some(&dir.join(LI_TABLE)),
        )?;
        sess.lap("assess");
        if let Some(sw) = &cfg.sweep {
            let actual_cells = cells.with_assignment(&label_overlay(&cells, actual)?)?;
            let t = sweep_radius(
                &cells,
                &model,
                &features,
                &sim_cfg,
                &demand,
                &sc,
                &actual_cells,
                &sw.radii,
            )?;
            sess.emit(&dir.join(SWEEP), &io::sweep_to_csv(&t))?;
            sess.lap("sweep");
        }
    }
    Ok(dir.join(MANIFEST))
}

fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn init_logging(quiet: bool) {
    let level = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Runs one invocation and returns its exit code: 0 on success, 1 for bad
/// input, 2 for failures while running.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.quiet);
    let workers = cli
        .workers
        .filter(|&n| n > 0)
        .unwrap_or_else(default_workers);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {workers} workers: {e}");
            return 2;
        }
    };
    let name = command_name(&cli.command);
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let mut sess = Session::new(name, args, workers);
    let result = pool.install(|| {
        let primary = execute(&cli.command, &mut sess)?;
        let manifest = if matches!(cli.command, Command::Run(_)) {
            primary
        } else {
            manifest_beside(&primary)
        };
        sess.write_manifest(&manifest)
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            sess.cleanup();
            eprintln!("error: {e}");
            if e.is_input_error() {
                1
            } else {
                2
            }
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Subdivide(_) => "subdivide",
        Command::Features(_) => "features",
        Command::Train(_) => "train",
        Command::Simulate(_) => "simulate",
        Command::Assess(_) => "assess",
        Command::Vecli(_) => "vecli",
        Command::Demand(_) => "demand",
        Command::Sweep(_) => "sweep",
        Command::Run(_) => "run",
    }
}
