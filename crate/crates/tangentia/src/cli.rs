//! Command-line front-end.
//!
//! Every numeric option can also come from a JSON object passed with
//! `--config`; keys are the long flag names with `_` for `-`. Flags win.
//!
//! Exit codes: 0 success, 1 a lemma check failed, 2 bad input or a failed run.
//! Outputs are written only after the computation finishes, and files already
//! written are removed if a later write fails.

#![allow(non_snake_case)]

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use tangentia_core::alpha::{alpha_G_star, alpha_profile};
use tangentia_core::generators::{self, AngleSequence, SnowflakeSpec};
use tangentia_core::multiscale::{Coefficient, DiniReport};
use tangentia_core::transport::Backend;
use tangentia_core::verify::Harness;
use tangentia_core::{default_bump, ClassifyConfig, DiscreteMeasure, GroupWindow, ScaleLadder, SearchConfig};

use crate::io::{self, InputError};
use crate::{par, plot, report};

#[derive(Parser, Debug)]
#[command(name = "tangentia", version, about = "Multiscale self-similarity and flatness coefficients of discrete measures")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Write a synthetic measure as JSON.
    Gen(GenArgs),
    /// Coefficients at single points and one radius.
    Alpha(AlphaArgs),
    /// Coefficients over a scale ladder, with Dini sums.
    Sweep(SweepArgs),
    /// Stratum labels for probe points.
    Classify(SweepArgs),
    /// Seeded checks of the W1 / W_phi comparison inequalities.
    VerifyLemmas(VerifyArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenKind {
    Flat,
    Cantor,
    Sierpinski,
    Spiral,
    Snowflake,
    Corpus,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AngleMode {
    Constant,
    InverseLog,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    NetworkSimplex,
    Ssp,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// JSON file with default values for any option below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub scale_grid_size: Option<usize>,
    #[arg(long)]
    pub rotation_grid_size: Option<usize>,
    #[arg(long)]
    pub refine_iters: Option<usize>,
    #[arg(long)]
    pub plane_grid_size: Option<usize>,
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub max_support: Option<usize>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Option<GenKind>,
    /// IFS or snowflake depth.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Flat dimension `d`.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Ambient dimension `n`.
    #[arg(long)]
    pub ambient: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
    #[arg(long)]
    pub extent: Option<f64>,
    /// Spiral rotation angle or constant snowflake angle, in radians.
    #[arg(long)]
    pub angle: Option<f64>,
    #[arg(long, value_enum)]
    pub angles: Option<AngleMode>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct AlphaArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    /// Comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Option<String>,
    #[arg(long)]
    pub probes: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Also estimate the averaged coefficient by Monte Carlo.
    #[arg(long)]
    pub star: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub probes: PathBuf,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long)]
    pub ratio: Option<f64>,
    #[arg(long)]
    pub tau_flat: Option<f64>,
    #[arg(long)]
    pub agreement: Option<f64>,
    #[arg(long)]
    pub slope_tolerance: Option<f64>,
    /// Also write an SVG of alpha against scale.
    #[arg(long)]
    pub plot: bool,
    /// Output directory.
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    /// Multiplier on every bound's constant; values below 1 test the harness itself.
    #[arg(long)]
    pub bound_scale: Option<f64>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// Values accepted by `--config`.
#[derive(Deserialize, Serialize, Debug, Default, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub scale_grid_size: Option<usize>,
    pub rotation_grid_size: Option<usize>,
    pub refine_iters: Option<usize>,
    pub plane_grid_size: Option<usize>,
    pub mc_samples: Option<usize>,
    pub max_support: Option<usize>,
    pub backend: Option<BackendArg>,
    pub depth: Option<usize>,
    pub r_max: Option<f64>,
    pub ratio: Option<f64>,
    pub tau_flat: Option<f64>,
    pub agreement: Option<f64>,
    pub slope_tolerance: Option<f64>,
    pub plot: Option<bool>,
    pub trials: Option<usize>,
    pub bound_scale: Option<f64>,
    pub quad_points: Option<usize>,
    pub kind: Option<GenKind>,
    pub dim: Option<usize>,
    pub ambient: Option<usize>,
    pub spacing: Option<f64>,
    pub extent: Option<f64>,
    pub angle: Option<f64>,
    pub angles: Option<AngleMode>,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub depth: usize,
    pub dim: usize,
    pub ambient: usize,
    pub spacing: f64,
    pub extent: f64,
    pub angle: f64,
    pub angles: AngleMode,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Gen(GenSpec),
    Alpha { point: Option<Vec<f64>>, radius: f64, star: bool },
    Sweep,
    Classify,
    VerifyLemmas { trials: usize, bound_scale: f64, quad_points: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub probes: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub window: GroupWindow,
    pub ladder: ScaleLadder,
    pub search: SearchConfig,
    pub classify: ClassifyConfig,
    pub seed: u64,
    pub plot: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("{0}")]
    Compute(#[from] tangentia_core::Error),
    #[error("{path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Plot(#[from] plot::PlotError),
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Input(InputError::Usage(msg.into()))
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, InputError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| InputError::Parse {
        path: path.to_owned(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn parse_point(s: &str) -> Result<Vec<f64>, InputError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| InputError::Usage(format!("bad coordinate {t:?} in --point")))
        })
        .collect()
}

struct Resolved {
    window: GroupWindow,
    search: SearchConfig,
    seed: u64,
}

fn resolve_common(c: &Common, f: &FileConfig) -> Result<Resolved, Failure> {
    let dw = GroupWindow::default();
    let window = GroupWindow::new(
        c.lambda1.or(f.lambda1).unwrap_or(dw.lambda1),
        c.lambda2.or(f.lambda2).unwrap_or(dw.lambda2),
    )?;
    let d = SearchConfig::default();
    let mut search = SearchConfig {
        scale_grid_size: c.scale_grid_size.or(f.scale_grid_size).unwrap_or(d.scale_grid_size),
        rotation_grid_size: c.rotation_grid_size.or(f.rotation_grid_size).unwrap_or(d.rotation_grid_size),
        refine_iters: c.refine_iters.or(f.refine_iters).unwrap_or(d.refine_iters),
        plane_grid_size: c.plane_grid_size.or(f.plane_grid_size).unwrap_or(d.plane_grid_size),
        mc_samples: c.mc_samples.or(f.mc_samples).unwrap_or(d.mc_samples),
        max_support: c.max_support.or(f.max_support).unwrap_or(d.max_support),
        ..d
    };
    search.transport.backend = match c.backend.or(f.backend) {
        Some(BackendArg::Ssp) => Backend::SuccessiveShortestPaths,
        _ => Backend::NetworkSimplex,
    };
    search.validate()?;
    Ok(Resolved {
        window,
        search,
        seed: c.seed.or(f.seed).unwrap_or(0),
    })
}

fn default_ladder() -> ScaleLadder {
    ScaleLadder::dyadic(0.5, 6).expect("valid default")
}

/// Merges flags over the optional config file.
pub fn build_config(cli: Cli) -> Result<RunConfig, Failure> {
    let common = match &cli.command {
        CliCommand::Gen(a) => &a.common,
        CliCommand::Alpha(a) => &a.common,
        CliCommand::Sweep(a) | CliCommand::Classify(a) => &a.common,
        CliCommand::VerifyLemmas(a) => &a.common,
    };
    let f = load_file_config(common.config.as_deref())?;
    let r = resolve_common(common, &f)?;
    let mut cfg = RunConfig {
        command: Command::Sweep,
        input: None,
        probes: None,
        output: None,
        window: r.window,
        ladder: default_ladder(),
        search: r.search.clone(),
        classify: ClassifyConfig {
            search: r.search,
            ..ClassifyConfig::default()
        },
        seed: r.seed,
        plot: f.plot.unwrap_or(false),
    };
    match cli.command {
        CliCommand::Gen(a) => {
            let kind = a
                .kind
                .or(f.kind)
                .ok_or_else(|| usage("gen needs --kind"))?;
            let default_depth = match kind {
                GenKind::Snowflake => 6,
                _ => 8,
            };
            cfg.command = Command::Gen(GenSpec {
                kind,
                depth: a.depth.or(f.depth).unwrap_or(default_depth),
                dim: a.dim.or(f.dim).unwrap_or(1),
                ambient: a.ambient.or(f.ambient).unwrap_or(2),
                spacing: a.spacing.or(f.spacing).unwrap_or(0.01),
                extent: a.extent.or(f.extent).unwrap_or(1.0),
                angle: a.angle.or(f.angle).unwrap_or(std::f64::consts::FRAC_PI_4 * 0.8),
                angles: a.angles.or(f.angles).unwrap_or(AngleMode::Constant),
            });
            cfg.output = a.output;
        }
        CliCommand::Alpha(a) => {
            let point = a.point.as_deref().map(parse_point).transpose()?;
            if point.is_none() && a.probes.is_none() {
                return Err(usage("alpha needs --point or --probes"));
            }
            let radius = a
                .radius
                .or(f.radius)
                .ok_or_else(|| usage("alpha needs --radius"))?;
            cfg.command = Command::Alpha {
                point,
                radius,
                star: a.star,
            };
            cfg.input = Some(a.input);
            cfg.probes = a.probes;
            cfg.output = a.output;
        }
        CliCommand::Sweep(a) => fill_sweep(&mut cfg, &f, a, Command::Sweep)?,
        CliCommand::Classify(a) => fill_sweep(&mut cfg, &f, a, Command::Classify)?,
        CliCommand::VerifyLemmas(a) => {
            let trials = a.trials.or(f.trials).unwrap_or(100);
            if trials == 0 {
                return Err(usage("--trials must be positive"));
            }
            let bound_scale = a.bound_scale.or(f.bound_scale).unwrap_or(1.0);
            if !(bound_scale > 0.0 && bound_scale.is_finite()) {
                return Err(usage("--bound-scale must be positive"));
            }
            cfg.command = Command::VerifyLemmas {
                trials,
                bound_scale,
                quad_points: a.quad_points.or(f.quad_points).unwrap_or(16),
            };
            cfg.output = a.output;
        }
    }
    Ok(cfg)
}

fn fill_sweep(cfg: &mut RunConfig, f: &FileConfig, a: SweepArgs, command: Command) -> Result<(), Failure> {
    let d = default_ladder();
    cfg.ladder = ScaleLadder::geometric(
        a.r_max.or(f.r_max).unwrap_or(d.r_max),
        a.depth.or(f.depth).unwrap_or(d.depth),
        a.ratio.or(f.ratio).unwrap_or(d.ratio),
    )?;
    let dc = ClassifyConfig::default();
    cfg.classify.tau_flat = a.tau_flat.or(f.tau_flat).unwrap_or(dc.tau_flat);
    cfg.classify.agreement = a.agreement.or(f.agreement).unwrap_or(dc.agreement);
    cfg.classify.slope_tolerance = a.slope_tolerance.or(f.slope_tolerance).unwrap_or(dc.slope_tolerance);
    cfg.plot = a.plot || cfg.plot;
    cfg.command = command;
    cfg.input = Some(a.input);
    cfg.probes = Some(a.probes);
    cfg.output = Some(a.output);
    Ok(())
}

/// Output files of one run, written together.
struct Outputs {
    files: Vec<(PathBuf, String)>,
    stdout: String,
}

impl Outputs {
    fn new() -> Self {
        Self {
            files: Vec::new(),
            stdout: String::new(),
        }
    }

    fn emit(&mut self, path: Option<&Path>, body: String) {
        match path {
            Some(p) => self.files.push((p.to_owned(), body)),
            None => self.stdout.push_str(&body),
        }
    }

    fn commit(self) -> Result<(), Failure> {
        let mut written: Vec<PathBuf> = Vec::new();
        let mut created_dirs: Vec<PathBuf> = Vec::new();
        let result = (|| {
            for (path, body) in &self.files {
                if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                    if !parent.exists() {
                        let mut top = parent.to_path_buf();
                        while let Some(up) = top.parent().filter(|p| !p.as_os_str().is_empty() && !p.exists()) {
                            top = up.to_path_buf();
                        }
                        fs::create_dir_all(parent).map_err(|source| Failure::Write {
                            path: parent.to_owned(),
                            source,
                        })?;
                        created_dirs.push(top);
                    }
                }
                fs::write(path, body).map_err(|source| Failure::Write {
                    path: path.clone(),
                    source,
                })?;
                written.push(path.clone());
            }
            Ok(())
        })();
        if result.is_err() {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            for d in created_dirs.iter().rev() {
                let _ = fs::remove_dir_all(d);
            }
            return result;
        }
        print!("{}", self.stdout);
        Ok(())
    }
}

fn gen_measure(g: &GenSpec) -> Result<DiscreteMeasure, Failure> {
    let m = match g.kind {
        GenKind::Flat => {
            if g.dim > g.ambient {
                return Err(usage("--dim exceeds --ambient"));
            }
            let basis = generators::axis_basis(g.dim, g.ambient);
            let m = generators::flat_measure(&basis, &vec![0.0; g.ambient], 1.0, g.extent, g.spacing)?;
            let total = m.total_mass();
            m.scaled(1.0 / total)
        }
        GenKind::Cantor => generators::ifs_measure(&generators::cantor(g.depth)?)?,
        GenKind::Sierpinski => generators::ifs_measure(&generators::sierpinski(g.depth)?)?,
        GenKind::Spiral => generators::ifs_measure(&generators::spiral(g.angle, g.depth)?)?,
        GenKind::Snowflake => generators::snowflake_measure(&SnowflakeSpec {
            angles: match g.angles {
                AngleMode::Constant => AngleSequence::Constant(g.angle),
                AngleMode::InverseLog => AngleSequence::InverseLog,
            },
            depth: g.depth,
        })?,
        GenKind::Corpus => {
            let m = generators::stratified_corpus(g.spacing)?;
            let total = m.total_mass();
            m.scaled(1.0 / total)
        }
    };
    Ok(m)
}

fn load_inputs(cfg: &RunConfig) -> Result<(DiscreteMeasure, Vec<Vec<f64>>), Failure> {
    let input = cfg.input.as_deref().ok_or_else(|| usage("missing --input"))?;
    let mu = io::read_measure(input)?;
    let probes = match cfg.probes.as_deref() {
        Some(p) => io::read_probes(p, mu.dim())?,
        None => Vec::new(),
    };
    Ok((mu, probes))
}

#[derive(Serialize)]
struct AlphaOutput {
    #[serde(flatten)]
    profile: tangentia_core::AlphaProfile,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_G_star: Option<tangentia_core::alpha::MonteCarloEstimate>,
}

#[derive(Serialize)]
struct DiniOutput {
    ladder: ScaleLadder,
    reports: Vec<DiniReport>,
}

fn execute(cfg: &RunConfig) -> Result<(Outputs, bool), Failure> {
    let mut out = Outputs::new();
    let mut ok = true;
    match &cfg.command {
        Command::Gen(g) => {
            let m = gen_measure(g)?;
            out.emit(cfg.output.as_deref(), io::measure_json(&m));
        }
        Command::Alpha { point, radius, star } => {
            let (mu, mut probes) = load_inputs(cfg)?;
            if let Some(p) = point {
                if p.len() != mu.dim() {
                    return Err(usage(format!("--point has {} coordinates, measure has dimension {}", p.len(), mu.dim())));
                }
                probes.insert(0, p.clone());
            }
            let mut rows = Vec::with_capacity(probes.len());
            for x in &probes {
                let profile = alpha_profile(&mu, x, *radius, &cfg.window, &cfg.search)?;
                let alpha_G_star = if *star {
                    Some(alpha_G_star(&mu, x, *radius, &cfg.window, &cfg.search, cfg.seed)?)
                } else {
                    None
                };
                rows.push(AlphaOutput { profile, alpha_G_star });
            }
            out.emit(cfg.output.as_deref(), io::to_json(&rows));
        }
        Command::Sweep => {
            let (mu, probes) = load_inputs(cfg)?;
            if probes.is_empty() {
                return Err(Failure::Compute(tangentia_core::Error::EmptyProbes));
            }
            let rows = par::sweep(&mu, &probes, &cfg.ladder, &cfg.window, &cfg.search)?;
            let dir = cfg.output.as_deref().expect("sweep has an output dir");
            out.files.push((dir.join("sweep.csv"), report::sweep_csv(mu.dim(), &rows, cfg.ladder.depth)));
            let mut reports = Vec::new();
            for x in &probes {
                for c in [Coefficient::Dilation, Coefficient::Similarity, Coefficient::Flatness] {
                    reports.push(DiniReport::from_rows(x, &rows, c, &cfg.ladder));
                }
            }
            out.files.push((
                dir.join("dini.json"),
                io::to_json(&DiniOutput {
                    ladder: cfg.ladder.clone(),
                    reports,
                }),
            ));
            if cfg.plot {
                out.files.push((dir.join("sweep.svg"), plot::plot_profile(&rows, Coefficient::Flatness)?));
            }
        }
        Command::Classify => {
            let (mu, probes) = load_inputs(cfg)?;
            let rep = par::decompose(&mu, &probes, &cfg.ladder, &cfg.window, &cfg.classify)?;
            let dir = cfg.output.as_deref().expect("classify has an output dir");
            out.files.push((dir.join("classification.json"), io::to_json(&rep)));
            out.files.push((dir.join("classification.csv"), report::classify_csv(mu.dim(), &rep)));
        }
        Command::VerifyLemmas {
            trials,
            bound_scale,
            quad_points,
        } => {
            let mut h = Harness::new(*trials, cfg.seed, default_bump()).with_bound_scale(*bound_scale);
            h.transport = cfg.search.transport.clone();
            let reports = par::with_pool(|| -> tangentia_core::Result<_> {
                use rayon::prelude::*;
                let jobs: Vec<u8> = (0..6).collect();
                jobs.par_iter()
                    .map(|&j| match j {
                        0 => h.w1_axioms(),
                        1 => h.lemma_5_1(),
                        2 => h.lemma_5_2(0.25),
                        3 => h.lemma_5_2(0.5),
                        4 => h.lemma_5_3(*quad_points),
                        _ => h.wphi_bounds(),
                    })
                    .collect::<tangentia_core::Result<Vec<_>>>()
            })?;
            for r in &reports {
                eprintln!(
                    "{:<14} {} violations={} min_rhs/lhs={:.4} slack_max={:.3e}",
                    r.name,
                    if r.pass { "pass" } else { "FAIL" },
                    r.violations,
                    r.min_rhs_over_lhs,
                    r.slack_max
                );
            }
            ok = reports.iter().all(|r| r.pass);
            out.emit(cfg.output.as_deref(), io::to_json(&reports));
        }
    }
    Ok((out, ok))
}

/// Runs a resolved configuration and returns the exit code.
pub fn run(cfg: RunConfig) -> i32 {
    let result = execute(&cfg).and_then(|(out, ok)| out.commit().map(|_| ok));
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match build_config(cli) {
        Ok(cfg) => run(cfg),
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
