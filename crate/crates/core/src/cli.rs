//! Config-driven command line.
//!
//! Every stage reads its inputs from the config and from the artifacts of
//! earlier stages in the output directory, so any stage can be rerun alone.
//!
//! Output layout:
//!
//! ```text
//! out/basins.csv  out/distances.csv  out/trace_flows.csv
//! out/<truth>/trace_flows.csv  truth_flows.csv  gravity.json  hybrid.json
//! out/<truth>/eval_<scheme>.json  <curve>.csv
//! ```

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use crate::eval::{
    cpc_grid, kfold_cv, learning_curve, ratio_vs_distance, spatial_cv, thresholded_r2, trip_distance_ccdf, Curve,
    EvalReport,
};
use crate::flows::{
    build_air_truth, build_commute_truth, build_trace_flows, calibrate_threshold, filter_by_distance, DistanceTable,
    FlowMatrix, ThresholdMode,
};
use crate::geo::{
    assign_region, merge_airports, read_airports, read_basins, read_regions, write_basins, Basin, BasinSet,
    RegionPolygons, TessellationMode, DEFAULT_MERGE_THRESHOLD_KM,
};
use crate::ingest::{parse_commutes, parse_itineraries, parse_population, parse_traces, Diagnostic, PopulationTable};
use crate::models::{fit_stack, DeterrenceKind, ModelInputs, ModelKind};

pub const DEFAULT_SEED: u64 = 42;
pub const SCHEMES: [&str; 6] = ["kfold", "spatial", "learning-curve", "thresholded-r2", "ratio-curve", "cpc-grid"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Config(_) => 2,
            CliError::Input { .. } | CliError::Compute(_) => 1,
        }
    }
}

fn compute(context: impl std::fmt::Display) -> impl FnOnce(String) -> CliError {
    move |msg| CliError::Compute(format!("{context}: {msg}"))
}

#[derive(Debug, Parser)]
#[command(name = "mobflow", version, about = "Mobility flow reconstruction and model evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the spatial nodes and their distance table.
    Tessellate(CommonArgs),
    /// Build trace and ground-truth flow matrices.
    BuildFlows(CommonArgs),
    /// Fit the gravity and hybrid models on the full ground truth.
    Fit(CommonArgs),
    /// Run the configured evaluation schemes.
    Evaluate(CommonArgs),
    /// Run every stage in order.
    Pipeline(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub tessellation: TessellationConfig,
    #[serde(default)]
    pub traces: Option<PathBuf>,
    #[serde(default)]
    pub population: Option<PathBuf>,
    #[serde(default)]
    pub truths: Vec<TruthConfig>,
    #[serde(default)]
    pub evaluation: EvalConfig,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_threshold() -> f64 {
    DEFAULT_MERGE_THRESHOLD_KM
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TessellationConfig {
    NearestPoint {
        airports: PathBuf,
        #[serde(default = "default_threshold")]
        merge_threshold_km: f64,
    },
    Polygon {
        regions: PathBuf,
    },
}

impl TessellationConfig {
    fn mode(&self) -> TessellationMode {
        match self {
            TessellationConfig::NearestPoint { .. } => TessellationMode::NearestPoint,
            TessellationConfig::Polygon { .. } => TessellationMode::Polygon,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthConfig {
    /// Name of the output subdirectory.
    pub name: String,
    #[serde(default)]
    pub itineraries: Option<PathBuf>,
    #[serde(default)]
    pub commutes: Option<PathBuf>,
    pub deterrence: DeterrenceKind,
    /// Distance bounds applied to the trace flows.
    #[serde(default)]
    pub min_km: Option<f64>,
    #[serde(default)]
    pub max_km: Option<f64>,
    /// Picks the trace distance bound from candidates instead.
    #[serde(default)]
    pub calibrate: Option<CalibrateConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub mode: ThresholdMode,
    pub candidates: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub schemes: Vec<String>,
    pub k: usize,
    pub meridian: f64,
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub thresholds: Vec<f64>,
    pub ratio_min_flow: f64,
    pub distance_edges: Vec<f64>,
    pub population_edges: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            schemes: vec!["kfold".into()],
            k: 10,
            meridian: -102.0,
            fractions: vec![0.01, 0.03, 0.1, 0.5],
            repeats: 10,
            thresholds: vec![0.0, 10.0, 100.0, 1000.0],
            ratio_min_flow: 100.0,
            distance_edges: vec![0.0, 250.0, 500.0, 1000.0, 2000.0, 5000.0],
            population_edges: vec![0.0, 1e4, 1e5, 1e6, 1e7, 1e9],
        }
    }
}

impl RunConfig {
    /// Reads a config, resolving relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.out_dir);
        match &mut cfg.tessellation {
            TessellationConfig::NearestPoint { airports, .. } => resolve(airports),
            TessellationConfig::Polygon { regions } => resolve(regions),
        }
        cfg.traces.iter_mut().for_each(resolve);
        cfg.population.iter_mut().for_each(resolve);
        for t in &mut cfg.truths {
            t.itineraries.iter_mut().for_each(resolve);
            t.commutes.iter_mut().for_each(resolve);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        for s in &self.evaluation.schemes {
            if !SCHEMES.contains(&s.as_str()) {
                return Err(CliError::Config(format!("unknown scheme `{s}`; valid schemes: {}", SCHEMES.join(" | "))));
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for t in &self.truths {
            let ok_name = !t.name.is_empty() && t.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok_name || !names.insert(&t.name) {
                return Err(CliError::Config(format!("truth name `{}` must be unique and alphanumeric", t.name)));
            }
            if t.itineraries.is_some() == t.commutes.is_some() {
                return Err(CliError::Config(format!(
                    "truth `{}` needs exactly one of `itineraries` or `commutes`",
                    t.name
                )));
            }
            if t.calibrate.is_some() && (t.min_km.is_some() || t.max_km.is_some()) {
                return Err(CliError::Config(format!("truth `{}` sets both calibration and fixed bounds", t.name)));
            }
        }
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CliError::Io { path: path.into(), source })
}

fn input<T, E: std::fmt::Display>(path: &Path, result: Result<T, E>) -> Result<T, CliError> {
    result.map_err(|e| CliError::Input { path: path.into(), message: e.to_string() })
}

fn create(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.into(), source };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    write(&mut w).map_err(|m| CliError::Io { path: path.into(), source: std::io::Error::other(m) })?;
    w.flush().map_err(io)
}

fn warn(path: &Path, diagnostics: &[Diagnostic]) {
    for d in diagnostics {
        eprintln!("warning: {}: skipped {}", path.display(), d);
    }
}

struct Run {
    cfg: RunConfig,
    out: PathBuf,
}

impl Run {
    fn basins_path(&self) -> PathBuf {
        self.out.join("basins.csv")
    }

    fn distances_path(&self) -> PathBuf {
        self.out.join("distances.csv")
    }

    fn truth_dir(&self, t: &TruthConfig) -> PathBuf {
        self.out.join(&t.name)
    }

    fn load_basins(&self) -> Result<BasinSet, CliError> {
        let path = self.basins_path();
        input(&path, read_basins(open(&path)?, self.cfg.tessellation.mode()))
    }

    fn load_distances(&self) -> Result<DistanceTable, CliError> {
        let path = self.distances_path();
        input(&path, DistanceTable::read_csv(open(&path)?))
    }

    fn load_flows(&self, path: &Path) -> Result<FlowMatrix, CliError> {
        input(path, FlowMatrix::read_csv(open(path)?))
    }

    fn load_regions(&self) -> Result<Option<RegionPolygons>, CliError> {
        match &self.cfg.tessellation {
            TessellationConfig::Polygon { regions } => Ok(Some(input(regions, read_regions(open(regions)?))?)),
            TessellationConfig::NearestPoint { .. } => Ok(None),
        }
    }

    /// Population per node; rows naming an airport are credited to its basin.
    fn load_population(&self, basins: &BasinSet) -> Result<PopulationTable, CliError> {
        let path = self
            .cfg
            .population
            .as_ref()
            .ok_or_else(|| CliError::Config("`population` is required to fit models".into()))?;
        let parsed = input(path, parse_population(open(path)?))?;
        warn(path, &parsed.diagnostics);
        let mut pop = PopulationTable::new();
        for (id, value) in parsed.records.iter() {
            match basins.basin_of_member(id) {
                Some(node) => input(path, pop.add(node.clone(), value))?,
                None => eprintln!("warning: {}: unknown node {id} ignored", path.display()),
            }
        }
        Ok(pop)
    }

    fn tessellate(&self) -> Result<(), CliError> {
        let basins = match &self.cfg.tessellation {
            TessellationConfig::NearestPoint { airports, merge_threshold_km } => {
                let list = input(airports, read_airports(open(airports)?))?;
                if list.is_empty() {
                    return Err(CliError::Input { path: airports.clone(), message: "no airports".into() });
                }
                input(airports, merge_airports(&list, *merge_threshold_km))?
            }
            TessellationConfig::Polygon { regions } => {
                let polys = input(regions, read_regions(open(regions)?))?;
                if polys.is_empty() {
                    return Err(CliError::Input { path: regions.clone(), message: "no regions".into() });
                }
                let nodes = polys
                    .regions()
                    .iter()
                    .map(|r| Basin { id: r.id.clone(), representative: r.centroid(), members: vec![r.id.clone()] })
                    .collect();
                input(regions, BasinSet::new(nodes, TessellationMode::Polygon))?
            }
        };
        let reps = basins.representatives();
        let distances = DistanceTable::from_points(reps.iter());
        create(&self.basins_path(), |w| write_basins(&basins, w).map_err(|e| e.to_string()))?;
        create(&self.distances_path(), |w| distances.write_csv(w).map_err(|e| e.to_string()))?;
        println!("{} basins", basins.len());
        Ok(())
    }

    fn build_flows(&self) -> Result<(), CliError> {
        let basins = self.load_basins()?;
        let distances = self.load_distances()?;
        let regions = self.load_regions()?;

        let traces = match &self.cfg.traces {
            Some(path) => {
                let parsed = input(path, parse_traces(open(path)?))?;
                warn(path, &parsed.diagnostics);
                parsed.records
            }
            None => Vec::new(),
        };
        let built = match &regions {
            Some(polys) => build_trace_flows(&traces, |p| assign_region(p, polys)),
            None => build_trace_flows(&traces, |p| basins.assign(p).ok().cloned()),
        };
        let all_traces = built.matrix;
        create(&self.out.join("trace_flows.csv"), |w| all_traces.write_csv(w).map_err(|e| e.to_string()))?;
        println!("trace flows: {} entries, {} points dropped", all_traces.len(), built.dropped_points);

        for t in &self.cfg.truths {
            let (path, raw) = if let Some(path) = &t.itineraries {
                let parsed = input(path, parse_itineraries(open(path)?))?;
                warn(path, &parsed.diagnostics);
                (path, build_air_truth(&parsed.records))
            } else {
                let path = t.commutes.as_ref().expect("validated");
                let parsed = input(path, parse_commutes(open(path)?))?;
                warn(path, &parsed.diagnostics);
                (path, build_commute_truth(&parsed.records))
            };
            if let Some(unknown) = raw.nodes().iter().find(|n| basins.basin_of_member(n).is_none()) {
                return Err(CliError::Input {
                    path: path.clone(),
                    message: format!("node {unknown} is not part of the tessellation"),
                });
            }
            let truth = raw.relabel(|n| basins.basin_of_member(n).cloned());

            let dir = self.truth_dir(t);
            let ctx = compute(&t.name);
            let trace = match &t.calibrate {
                Some(c) => {
                    let cal = calibrate_threshold(&all_traces, &truth, &distances, &c.candidates, c.mode)
                        .map_err(|e| ctx(e.to_string()))?;
                    let mut curve = Curve::new(&["threshold_km", "pearson"]);
                    for &(th, rho) in &cal.curve {
                        curve.push(vec![Some(th), rho]);
                    }
                    create(&dir.join("calibration.csv"), |w| curve.write_csv(w).map_err(|e| e.to_string()))?;
                    println!("{}: calibrated threshold {} km (pearson {})", t.name, cal.best_threshold, cal.best_pearson);
                    let (lo, hi) = match c.mode {
                        ThresholdMode::MinThreshold => (Some(cal.best_threshold), None),
                        ThresholdMode::MaxThreshold => (None, Some(cal.best_threshold)),
                    };
                    filter_by_distance(&all_traces, &distances, lo, hi)
                }
                None => filter_by_distance(&all_traces, &distances, t.min_km, t.max_km),
            }
            .map_err(|e| compute(&t.name)(e.to_string()))?;

            create(&dir.join("trace_flows.csv"), |w| trace.write_csv(w).map_err(|e| e.to_string()))?;
            create(&dir.join("truth_flows.csv"), |w| truth.write_csv(w).map_err(|e| e.to_string()))?;
            for (name, m) in [("truth_distance_ccdf.csv", &truth), ("trace_distance_ccdf.csv", &trace)] {
                let curve = trip_distance_ccdf(m, &distances);
                create(&dir.join(name), |w| curve.write_csv(w).map_err(|e| e.to_string()))?;
            }
            println!(
                "{}: {} truth entries, {} trace entries after distance filter",
                t.name,
                truth.len(),
                trace.len()
            );
        }
        Ok(())
    }

    fn fit(&self) -> Result<(), CliError> {
        let basins = self.load_basins()?;
        let distances = self.load_distances()?;
        let population = self.load_population(&basins)?;
        for t in &self.cfg.truths {
            let dir = self.truth_dir(t);
            let truth = self.load_flows(&dir.join("truth_flows.csv"))?;
            let trace = self.load_flows(&dir.join("trace_flows.csv"))?;
            let inputs = ModelInputs { population: &population, distances: &distances, trace_flows: &trace, kind: t.deterrence };
            let fit = fit_stack(&truth, &inputs).map_err(|e| compute(&t.name)(e.to_string()))?;
            create(&dir.join("gravity.json"), |w| write_json(w, &fit.gravity))?;
            create(&dir.join("hybrid.json"), |w| write_json(w, &fit.hybrid))?;
            let g = &fit.gravity;
            println!(
                "{}: K={} alpha={} gamma={} beta={} ({}) A={} B={}",
                t.name,
                g.k,
                g.alpha,
                g.gamma,
                g.beta,
                serde_json::to_value(g.kind).expect("serialises").as_str().unwrap_or_default(),
                fit.hybrid.a,
                fit.hybrid.b
            );
        }
        Ok(())
    }

    fn evaluate(&self, seed: u64) -> Result<(), CliError> {
        let basins = self.load_basins()?;
        let distances = self.load_distances()?;
        let population = self.load_population(&basins)?;
        let locations = basins.representatives();
        let ev = &self.cfg.evaluation;
        for t in &self.cfg.truths {
            let dir = self.truth_dir(t);
            let truth = self.load_flows(&dir.join("truth_flows.csv"))?;
            let trace = self.load_flows(&dir.join("trace_flows.csv"))?;
            let inputs = ModelInputs { population: &population, distances: &distances, trace_flows: &trace, kind: t.deterrence };
            let mut held_out: Option<EvalReport> = None;
            for scheme in &ev.schemes {
                let fail = |e: String| CliError::Compute(format!("{}: scheme {scheme}: {e}", t.name));
                let mut kfold = || -> Result<EvalReport, CliError> {
                    if let Some(r) = &held_out {
                        return Ok(r.clone());
                    }
                    let r = kfold_cv(&truth, &inputs, ev.k, seed).map_err(|e| fail(e.to_string()))?;
                    held_out = Some(r.clone());
                    Ok(r)
                };
                let report = match scheme.as_str() {
                    "kfold" => kfold()?,
                    "spatial" => {
                        let mut r = spatial_cv(&truth, &locations, &inputs, ev.meridian).map_err(|e| fail(e.to_string()))?;
                        r.seed = seed;
                        r
                    }
                    "learning-curve" => learning_curve(&truth, &inputs, &ev.fractions, ev.repeats, seed)
                        .map_err(|e| fail(e.to_string()))?,
                    "thresholded-r2" => {
                        let base = kfold()?;
                        let mut r = derived_report(scheme, &base);
                        let th = thresholded_r2(&truth, &base.predictions, &ev.thresholds).map_err(|e| fail(e.to_string()))?;
                        for kind in ModelKind::ALL {
                            r.curves.insert(format!("thresholded_r2_{kind}"), th.curve(kind));
                        }
                        if !th.omitted.is_empty() {
                            r.notes.push(format!("thresholds with fewer than 3 usable flows: {:?}", th.omitted));
                        }
                        r
                    }
                    "ratio-curve" => {
                        let base = kfold()?;
                        let mut r = derived_report(scheme, &base);
                        for (kind, pred) in &base.predictions {
                            let rc = ratio_vs_distance(&truth, pred, &distances, ev.ratio_min_flow, &ev.distance_edges)
                                .map_err(|e| fail(e.to_string()))?;
                            if rc.unplaced > 0 {
                                r.notes.push(format!("{kind}: {} flows outside the distance bins", rc.unplaced));
                            }
                            r.curves.insert(format!("ratio_{kind}"), rc.curve());
                        }
                        r
                    }
                    "cpc-grid" => {
                        let base = kfold()?;
                        let mut r = derived_report(scheme, &base);
                        let grid = cpc_grid(
                            &truth,
                            &base.predictions,
                            &distances,
                            &population,
                            &ev.distance_edges,
                            &ev.population_edges,
                        )
                        .map_err(|e| fail(e.to_string()))?;
                        if grid.unplaced > 0 {
                            r.notes.push(format!("{} flows outside the grid", grid.unplaced));
                        }
                        r.curves.insert("cpc_grid".into(), grid.curve());
                        r
                    }
                    other => unreachable!("scheme `{other}` passed validation"),
                };
                create(&dir.join(format!("eval_{scheme}.json")), |w| report.write_json(w).map_err(|e| e.to_string()))?;
                for (name, curve) in &report.curves {
                    create(&dir.join(format!("{name}.csv")), |w| curve.write_csv(w).map_err(|e| e.to_string()))?;
                }
                for (set, scores) in &report.metrics {
                    for (kind, m) in scores {
                        println!(
                            "{}: {scheme} {set} {kind}: n={} pearson={} r2={} cpc={}",
                            t.name,
                            m.n,
                            show(m.pearson),
                            show(m.r_squared),
                            show(m.cpc)
                        );
                    }
                }
            }
        }
        Ok(())
    }
}

/// A curve-only report sharing the held-out predictions of k-fold CV.
fn derived_report(scheme: &str, base: &EvalReport) -> EvalReport {
    let mut r = EvalReport::new(scheme, base.seed);
    r.n_entries = base.n_entries;
    r.n_excluded = base.n_excluded;
    r.notes.push("computed on k-fold held-out predictions".into());
    r
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.6}"))
}

fn write_json<T: serde::Serialize>(w: &mut impl Write, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).expect("parameters serialise") + "\n";
    w.write_all(text.as_bytes()).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Tessellate(args)
    | Command::BuildFlows(args)
    | Command::Fit(args)
    | Command::Evaluate(args)
    | Command::Pipeline(args)) = &cli.command;
    let cfg = RunConfig::load(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.seed);
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let run = Run { cfg, out };
    match cli.command {
        Command::Tessellate(_) => run.tessellate(),
        Command::BuildFlows(_) => run.build_flows(),
        Command::Fit(_) => run.fit(),
        Command::Evaluate(_) => run.evaluate(seed),
        Command::Pipeline(_) => {
            run.tessellate()?;
            run.build_flows()?;
            run.fit()?;
            run.evaluate(seed)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"tessellation": {"mode": "nearest-point", "airports": "a.csv"}}"#).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.out_dir, dir.path().join("out"));
        match cfg.tessellation {
            TessellationConfig::NearestPoint { airports, merge_threshold_km } => {
                assert_eq!(airports, dir.path().join("a.csv"));
                assert_eq!(merge_threshold_km, 30.0);
            }
            TessellationConfig::Polygon { .. } => panic!("wrong mode"),
        }
        assert_eq!(cfg.evaluation.k, 10);
    }

    #[test]
    fn unknown_scheme_lists_valid_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"tessellation": {"mode": "polygon", "regions": "r.jsonl"}, "evaluation": {"schemes": ["bogus"]}}"#,
        )
        .unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("kfold | spatial | learning-curve"));
    }

    #[test]
    fn missing_config_is_io() {
        let code = main_with_args(["mobflow", "fit", "--config", "/nonexistent/run.json"]);
        assert_eq!(code, 2);
    }
}
