//! Batch front end. Every command writes `<command>.csv` and
//! `<command>.json` into the output directory and logs to stderr.
//!
//! Exit status: 0 success, 2 configuration error, 3 quadrature
//! non-convergence, 4 failed assertion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::covering::{locate, DyadicRectangle};
use crate::error::{Error, Result};
use crate::geometry::{EuclideanBox, HalfPlanePoint};
use crate::heatkernel::{diagonal_ratio, heat_kernel_estimate, kernel_mass, semigroup_residual, KernelQuery};
use crate::observability::{
    hoelder_lambda, necessary_condition_experiment, observability_report, optimize_lambda, ExtractionConfig,
    ObservabilityInputs,
};
use crate::quadrature::QuadratureSpec;
use crate::regions::{assumption2_scan, thickness_scan, Region};
use crate::spectral::{
    affine_fit, harmonic_lift_check, spectral_estimate_ratio, worst_radial_ratio, BandlimitedFunction,
    ConcentrationConfig, HarmonicLift, LiftGrid, RadialOccupancy, RadialRule, SpectralCoefficients, SpectralGrid,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NONCONVERGENCE: u8 = 3;
pub const EXIT_ASSERTION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "hyperspec", version, about = "Heat kernels, spectral projectors and thick sets on the hyperbolic half-plane")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Directory receiving `<command>.csv` and `<command>.json`.
    #[arg(long, global = true, default_value = "hyperspec-out")]
    pub out: PathBuf,
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub tail_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_subdivisions: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, env = "HYPERSPEC_WORKERS")]
    pub workers: Option<usize>,
}

fn point(s: &str) -> std::result::Result<(f64, f64), String> {
    let v = floats(s)?;
    match v[..] {
        [x, y] if y > 0.0 => Ok((x, y)),
        _ => Err(format!("expected x,y with y > 0, got {s:?}")),
    }
}

fn floats(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn pair<T: std::str::FromStr>(s: &str) -> std::result::Result<(T, T), String>
where
    T::Err: std::fmt::Display,
{
    let mut it = s.split(',').map(|p| p.trim().parse::<T>().map_err(|e| format!("{p:?}: {e}")));
    match (it.next(), it.next(), it.next()) {
        (Some(a), Some(b), None) => Ok((a?, b?)),
        _ => Err(format!("expected a,b, got {s:?}")),
    }
}

fn window(s: &str) -> std::result::Result<EuclideanBox, String> {
    match floats(s)?[..] {
        [x0, x1, y0, y1] => EuclideanBox::new(x0, x1, y0, y1).map_err(|e| e.to_string()),
        _ => Err(format!("expected x0,x1,y0,y1, got {s:?}")),
    }
}

/// A radial function about a point, from a coefficient file or as a heat kernel.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Coefficient file.
    #[arg(long, conflicts_with = "heat")]
    pub coeffs: Option<PathBuf>,
    /// Use `H(t, ·, base)` with this `t`.
    #[arg(long)]
    pub heat: Option<f64>,
    #[arg(long, value_parser = point, allow_hyphen_values = true, default_value = "0,1")]
    pub base: (f64, f64),
    /// Largest spectral parameter `s` of the generated grid.
    #[arg(long, default_value_t = 8.0)]
    pub s_max: f64,
    #[arg(long, default_value_t = 256)]
    pub nodes: usize,
}

impl SourceArgs {
    fn load(&self) -> Result<SpectralCoefficients> {
        match (&self.coeffs, self.heat) {
            (Some(p), _) => SpectralCoefficients::load(p).map_err(|e| with_path(e, p)),
            (None, Some(t)) => {
                let base = HalfPlanePoint::new(self.base.0, self.base.1)?;
                SpectralCoefficients::heat(SpectralGrid::uniform(self.s_max, self.nodes)?, base, t)
            }
            (None, None) => Err(Error::invalid("give --coeffs FILE or --heat T")),
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Tabulate `H(t, d)`.
    KernelEval {
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        d: Vec<f64>,
    },
    /// Check mass, semigroup and diagonal behaviour of the kernel.
    KernelCheck {
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        t: Vec<f64>,
        #[arg(long)]
        mass: bool,
        #[arg(long)]
        semigroup: bool,
        #[arg(long)]
        diagonal: bool,
        /// Allowed `|mass − 1|`.
        #[arg(long, default_value_t = 1e-6)]
        mass_tol: f64,
        /// Allowed relative semigroup residual.
        #[arg(long, default_value_t = 1e-4)]
        semigroup_tol: f64,
    },
    /// Scan `vol(ω ∩ B_R(z))` over a grid of centers.
    Thickness {
        #[arg(long)]
        region: PathBuf,
        #[arg(long = "R")]
        radius: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_parser = window, allow_hyphen_values = true)]
        window: EuclideanBox,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        /// Also scan dyadic rectangles of this scale.
        #[arg(long)]
        rect_scale: Option<f64>,
        #[arg(long, value_parser = pair::<i32>, allow_hyphen_values = true, default_value = "-3,3")]
        j: (i32, i32),
        #[arg(long, value_parser = pair::<i64>, allow_hyphen_values = true, default_value = "-3,3")]
        k: (i64, i64),
    },
    /// Locate points in the dyadic covering.
    Cover {
        #[arg(long = "point", value_parser = point, allow_hyphen_values = true)]
        points: Vec<(f64, f64)>,
        /// Random points, uniform in `(x, log y)` over the window.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, value_parser = window, allow_hyphen_values = true, default_value = "-10,10,0.01,100")]
        window: EuclideanBox,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Apply the spectral projector to a coefficient set.
    Project {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        lambda: f64,
        /// Write the projected coefficients here.
        #[arg(long)]
        write: Option<PathBuf>,
    },
    /// `‖Π_Λu‖²_{L²(ω)} / ‖Π_Λu‖²_{L²}` over a band list.
    EstimateRatio {
        #[arg(long)]
        region: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 10.0)]
        radius: f64,
        /// Use the radial function about `--center` least concentrated on the region.
        #[arg(long)]
        worst: bool,
        #[arg(long, value_parser = point, allow_hyphen_values = true, default_value = "0,1")]
        center: (f64, f64),
        #[arg(long, default_value_t = 24)]
        basis: usize,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Finite-difference check of the harmonic extension `v_Λ`.
    HarmonicLift {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_parser = pair::<f64>, allow_hyphen_values = true, default_value = "0.05,1")]
        t_range: (f64, f64),
        #[arg(long, value_parser = pair::<f64>, allow_hyphen_values = true, default_value = "-1,1")]
        x_range: (f64, f64),
        #[arg(long, value_parser = pair::<f64>, allow_hyphen_values = true, default_value = "0.5,2")]
        y_range: (f64, f64),
        #[arg(long, default_value_t = 1e-2)]
        h: f64,
        #[arg(long, default_value_t = 4.0)]
        r_max: f64,
        /// Allowed residual relative to `‖v_Λ‖_∞`.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// The observability constant with its audit trail.
    ObsConstant {
        #[command(flatten)]
        inputs: ObsArgs,
        #[arg(long, default_value_t = 0.5)]
        eta: f64,
        #[arg(long, default_value_t = 8)]
        m_max: u32,
        /// Also minimize over `λ` on a grid of this size.
        #[arg(long)]
        optimize: Option<usize>,
    },
    /// Extract a thickness radius and mass from an observability constant.
    NecessaryCondition {
        #[arg(long)]
        region: PathBuf,
        /// `log C_obs`; computed from the constant inputs when absent.
        #[arg(long)]
        log_c_obs: Option<f64>,
        #[command(flatten)]
        inputs: ObsArgs,
        #[arg(long = "z0", value_parser = point, allow_hyphen_values = true, default_values = ["0,1", "5,0.1", "-3,40"])]
        z0: Vec<(f64, f64)>,
        /// Allowed relative spread of `(L, δ)` across `z0`.
        #[arg(long, default_value_t = 0.01)]
        invariance_tol: f64,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ObsArgs {
    #[arg(long = "K", default_value_t = 1.0)]
    pub k: f64,
    #[arg(long = "Ctilde", default_value_t = 1.0)]
    pub c_tilde: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0.8)]
    pub lambda: f64,
}

impl ObsArgs {
    fn inputs(&self) -> Result<ObservabilityInputs> {
        ObservabilityInputs::new(self.k, self.c_tilde, self.t, self.lambda)
    }
}

/// A parsed invocation.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub out: PathBuf,
    pub quad: QuadratureSpec,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self> {
        let c = cli.common;
        let d = QuadratureSpec::default();
        let quad = QuadratureSpec {
            rel_tol: c.rel_tol.unwrap_or(d.rel_tol),
            abs_tol: c.abs_tol.unwrap_or(d.abs_tol),
            max_subdivisions: c.max_subdivisions.unwrap_or(d.max_subdivisions),
            tail_tol: c.tail_tol.unwrap_or(d.tail_tol),
            mc_samples: d.mc_samples,
        };
        quad.validate()?;
        Ok(RunConfig {
            command: cli.command,
            out: c.out,
            quad,
            seed: c.seed,
            workers: c.workers,
        })
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub command: &'static str,
    pub table: PathBuf,
    pub summary: PathBuf,
    /// Failed assertions; empty on success.
    pub failures: Vec<String>,
}

struct Artifacts<'a> {
    dir: &'a Path,
    name: &'static str,
}

impl Artifacts<'_> {
    fn table<T: Serialize>(&self, rows: &[T]) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }

    fn summary(&self, value: &Value) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}.json", self.name));
        fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(path)
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::KernelEval { .. } => "kernel-eval",
        Command::KernelCheck { .. } => "kernel-check",
        Command::Thickness { .. } => "thickness",
        Command::Cover { .. } => "cover",
        Command::Project { .. } => "project",
        Command::EstimateRatio { .. } => "estimate-ratio",
        Command::HarmonicLift { .. } => "harmonic-lift",
        Command::ObsConstant { .. } => "obs-constant",
        Command::NecessaryCondition { .. } => "necessary-condition",
    }
}

/// Runs one command inside a worker pool of the configured size.
pub fn run(config: &RunConfig) -> Result<Outcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    fs::create_dir_all(&config.out)?;
    let art = Artifacts {
        dir: &config.out,
        name: command_name(&config.command),
    };
    let (table, value, failures) = pool.install(|| dispatch(config, &art))?;
    let value = json!({
        "command": art.name,
        "seed": config.seed,
        "quadrature": config.quad,
        "result": value,
        "failures": failures,
    });
    let summary = art.summary(&value)?;
    Ok(Outcome {
        command: art.name,
        table,
        summary,
        failures,
    })
}

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::Infeasible(_) => EXIT_ASSERTION,
        _ => EXIT_CONFIG,
    }
}

/// Parses arguments, runs, logs and maps the outcome to an exit status.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = RunConfig::from_cli(cli).and_then(|c| run(&c));
    match outcome {
        Ok(o) => {
            eprintln!("wrote {} and {}", o.table.display(), o.summary.display());
            if o.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for f in &o.failures {
                    eprintln!("assertion failed: {f}");
                }
                ExitCode::from(EXIT_ASSERTION)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn with_path(e: Error, p: &Path) -> Error {
    match e {
        Error::Io(io) => Error::invalid(format!("{}: {io}", p.display())),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", p.display())),
        other => other,
    }
}

fn load_region(p: &Path) -> Result<Region> {
    Region::load(p).map_err(|e| with_path(e, p))
}

type Dispatched = (PathBuf, Value, Vec<String>);

fn dispatch(cfg: &RunConfig, art: &Artifacts<'_>) -> Result<Dispatched> {
    let q = &cfg.quad;
    match &cfg.command {
        Command::KernelEval { t, d } => kernel_eval(art, t, d, q),
        Command::KernelCheck {
            t,
            mass,
            semigroup,
            diagonal,
            mass_tol,
            semigroup_tol,
        } => {
            let mass = *mass || !(*semigroup || *diagonal);
            kernel_check(art, t, (mass, *semigroup, *diagonal), (*mass_tol, *semigroup_tol), q)
        }
        Command::Thickness {
            region,
            radius,
            delta,
            window,
            step,
            rect_scale,
            j,
            k,
        } => {
            let region = load_region(region)?;
            thickness(art, &region, (*radius, *delta, *window, *step), rect_scale.map(|s| (s, *j, *k)), q)
        }
        Command::Cover {
            points,
            samples,
            window,
            scale,
        } => cover(art, points, *samples, *window, *scale, cfg.seed),
        Command::Project { source, lambda, write } => project(art, &source.load()?, *lambda, write.as_deref()),
        Command::EstimateRatio {
            region,
            lambda,
            radius,
            worst,
            center,
            basis,
            source,
        } => {
            let region = load_region(region)?;
            let u = if *worst { None } else { Some(source.load()?) };
            let center = HalfPlanePoint::new(center.0, center.1)?;
            estimate_ratio(art, &region, lambda, *radius, u, center, *basis, q)
        }
        Command::HarmonicLift {
            source,
            lambda,
            n,
            t_range,
            x_range,
            y_range,
            h,
            r_max,
            tol,
        } => {
            let grid = LiftGrid {
                t: *t_range,
                x: *x_range,
                y: *y_range,
                n: *n,
                h: *h,
            };
            harmonic_lift(art, &source.load()?, *lambda, grid, *r_max, *tol, q)
        }
        Command::ObsConstant {
            inputs,
            eta,
            m_max,
            optimize,
        } => obs_constant(art, &inputs.inputs()?, *eta, *m_max, *optimize),
        Command::NecessaryCondition {
            region,
            log_c_obs,
            inputs,
            z0,
            invariance_tol,
        } => {
            let region = load_region(region)?;
            let log_c = match log_c_obs {
                Some(v) => *v,
                None => crate::observability::log_observability_constant(&inputs.inputs()?)?,
            };
            let z0 = z0
                .iter()
                .map(|&(x, y)| HalfPlanePoint::new(x, y))
                .collect::<Result<Vec<_>>>()?;
            necessary_condition(art, &region, log_c, &z0, *invariance_tol, q)
        }
    }
}

#[derive(Serialize)]
struct KernelRow {
    t: f64,
    d: f64,
    value: f64,
    error_bound: f64,
}

fn kernel_eval(art: &Artifacts<'_>, t: &[f64], d: &[f64], q: &QuadratureSpec) -> Result<Dispatched> {
    let pairs: Vec<(f64, f64)> = t.iter().flat_map(|&t| d.iter().map(move |&d| (t, d))).collect();
    let rows = pairs
        .par_iter()
        .map(|&(t, d)| {
            let e = heat_kernel_estimate(KernelQuery::new(t, d)?, q)?;
            Ok(KernelRow {
                t,
                d,
                value: e.value,
                error_bound: e.error,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let path = art.table(&rows)?;
    Ok((path, json!({ "evaluations": rows.len() }), vec![]))
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    t: f64,
    s: Option<f64>,
    value: f64,
    expected: Option<f64>,
    residual: Option<f64>,
    error_bound: f64,
}

const SEMIGROUP_PAIRS: [((f64, f64), (f64, f64)); 3] = [((0.0, 1.0), (0.0, 1.0)), ((0.0, 1.0), (0.7, 1.3)), ((-1.0, 0.5), (1.0, 2.0))];

fn kernel_check(
    art: &Artifacts<'_>,
    ts: &[f64],
    (mass, semigroup, diagonal): (bool, bool, bool),
    (mass_tol, semigroup_tol): (f64, f64),
    q: &QuadratureSpec,
) -> Result<Dispatched> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &t in ts {
        if mass {
            let e = kernel_mass(t, q)?;
            let r = (e.value - 1.0).abs();
            eprintln!("mass t = {t}: {:.12} (residual {r:.2e})", e.value);
            if r > mass_tol {
                failures.push(format!("kernel mass at t = {t} is {} (tolerance {mass_tol})", e.value));
            }
            rows.push(CheckRow {
                check: "mass",
                t,
                s: None,
                value: e.value,
                expected: Some(1.0),
                residual: Some(r),
                error_bound: e.error,
            });
        }
        if semigroup {
            let s = 0.5 * t;
            for (a, b) in SEMIGROUP_PAIRS {
                let z1 = HalfPlanePoint::new(a.0, a.1)?;
                let z2 = HalfPlanePoint::new(b.0, b.1)?;
                let r = semigroup_residual(t, s, z1, z2, q)?;
                if r.relative > semigroup_tol {
                    failures.push(format!("semigroup residual {} at t = {t}", r.relative));
                }
                rows.push(CheckRow {
                    check: "semigroup",
                    t,
                    s: Some(s),
                    value: r.convolved,
                    expected: Some(r.direct),
                    residual: Some(r.relative),
                    error_bound: r.quadrature_error,
                });
            }
        }
        if diagonal {
            let v = diagonal_ratio(t, q)?;
            rows.push(CheckRow {
                check: "diagonal",
                t,
                s: None,
                value: v,
                expected: None,
                residual: None,
                error_bound: q.rel_tol * v,
            });
        }
    }
    let path = art.table(&rows)?;
    Ok((path, json!({ "checks": rows.len() }), failures))
}

#[derive(Serialize)]
struct ThicknessRow {
    scan: &'static str,
    min_mass: f64,
    argmin_x: f64,
    argmin_y: f64,
    delta: f64,
    certified: bool,
    evaluated: usize,
    failed: usize,
    rel_tol: f64,
}

fn thickness(
    art: &Artifacts<'_>,
    region: &Region,
    (radius, delta, window, step): (f64, f64, EuclideanBox, f64),
    rect: Option<(f64, (i32, i32), (i64, i64))>,
    q: &QuadratureSpec,
) -> Result<Dispatched> {
    let cert = thickness_scan(region, radius, window, step, delta, q)?;
    eprintln!("thickness R = {radius}: {:?}, min mass {:.6e}", cert.mode, cert.min_mass);
    let mut rows = vec![ThicknessRow {
        scan: "balls",
        min_mass: cert.min_mass,
        argmin_x: cert.argmin.x(),
        argmin_y: cert.argmin.y(),
        delta,
        certified: cert.witness.is_none(),
        evaluated: cert.grid.nodes - cert.failed_nodes.len(),
        failed: cert.failed_nodes.len(),
        rel_tol: q.rel_tol,
    }];
    let mut value = json!({ "certificate": cert });
    if let Some((scale, j, k)) = rect {
        let scan = assumption2_scan(region, scale, j, k, q)?;
        let c = scan.argmin.as_box();
        rows.push(ThicknessRow {
            scan: "rectangles",
            min_mass: scan.min_mass,
            argmin_x: 0.5 * (c.x0 + c.x1),
            argmin_y: (c.y0 * c.y1).sqrt(),
            delta,
            certified: scan.min_mass >= delta,
            evaluated: scan.rectangles,
            failed: 0,
            rel_tol: q.rel_tol,
        });
        value["rectangles"] = json!(scan);
    }
    Ok((art.table(&rows)?, value, vec![]))
}

#[derive(Serialize)]
struct CoverRow {
    x: f64,
    y: f64,
    j: i32,
    k: i64,
    multiplicity: usize,
}

fn cover(
    art: &Artifacts<'_>,
    points: &[(f64, f64)],
    samples: usize,
    window: EuclideanBox,
    scale: f64,
    seed: u64,
) -> Result<Dispatched> {
    let mut pts = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l0, l1) = (window.y0.ln(), window.y1.ln());
    for _ in 0..samples {
        let x = rng.gen_range(window.x0..window.x1);
        let y = rng.gen_range(l0..l1).exp();
        pts.push((x, y));
    }
    if pts.is_empty() {
        return Err(Error::invalid("give --point or --samples"));
    }
    let located = pts
        .par_iter()
        .map(|&(x, y)| Ok(((x, y), locate(HalfPlanePoint::new(x, y)?, scale)?)))
        .collect::<Result<Vec<((f64, f64), Vec<DyadicRectangle>)>>>()?;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut max_mult = 0;
    for ((x, y), rects) in &located {
        if rects.is_empty() {
            failures.push(format!("({x}, {y}) lies in no rectangle"));
        }
        max_mult = max_mult.max(rects.len());
        rows.extend(rects.iter().map(|r| CoverRow {
            x: *x,
            y: *y,
            j: r.j,
            k: r.k,
            multiplicity: rects.len(),
        }));
    }
    eprintln!("{} points, maximal multiplicity {max_mult}", located.len());
    let value = json!({ "points": located.len(), "max_multiplicity": max_mult, "scale": scale });
    Ok((art.table(&rows)?, value, failures))
}

#[derive(Serialize)]
struct ProjectRow {
    s: f64,
    lambda: f64,
    input: f64,
    projected: f64,
}

fn project(art: &Artifacts<'_>, c: &SpectralCoefficients, lambda: f64, write: Option<&Path>) -> Result<Dispatched> {
    let p = c.project(lambda);
    let pp = p.project(lambda);
    let idempotence = p
        .values()
        .iter()
        .zip(pp.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let (n_in, n_out) = (c.norm_sq(), p.norm_sq());
    let mut failures = Vec::new();
    if idempotence != 0.0 {
        failures.push(format!("projection is not idempotent ({idempotence:e})"));
    }
    if n_out > n_in * (1.0 + 1e-12) {
        failures.push(format!("projection increased the norm ({n_in} → {n_out})"));
    }
    if let Some(path) = write {
        p.save(path)?;
    }
    let rows: Vec<ProjectRow> = c
        .s_grid()
        .iter()
        .zip(c.values())
        .zip(p.values())
        .map(|((&s, &a), &b)| ProjectRow {
            s,
            lambda: crate::spectral::lambda_of(s),
            input: a,
            projected: b,
        })
        .collect();
    let value = json!({
        "lambda": lambda,
        "norm_sq_input": n_in,
        "norm_sq_projected": n_out,
        "lambda_eff": p.lambda_eff(),
        "idempotence_defect": idempotence,
        "truncation_tail": c.truncation_tail(),
    });
    Ok((art.table(&rows)?, value, failures))
}

#[derive(Serialize)]
struct RatioRow {
    lambda: f64,
    ratio: f64,
    neg_log_ratio: f64,
    numerator: f64,
    denominator: f64,
    plane_norm_sq: f64,
    tail_fraction: f64,
    plane_ratio_lower: f64,
    plane_ratio_upper: f64,
}

#[allow(clippy::too_many_arguments)]
fn estimate_ratio(
    art: &Artifacts<'_>,
    region: &Region,
    lambdas: &[f64],
    radius: f64,
    u: Option<SpectralCoefficients>,
    center: HalfPlanePoint,
    basis: usize,
    q: &QuadratureSpec,
) -> Result<Dispatched> {
    let estimates = match u {
        Some(c) => {
            let u = BandlimitedFunction::radial(c);
            lambdas
                .iter()
                .map(|&l| spectral_estimate_ratio(&u, l, region, radius, q))
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let occ = RadialOccupancy::new(region, center, radius, &RadialRule::default())?;
            let cfg = ConcentrationConfig {
                basis_size: basis,
                ..ConcentrationConfig::default()
            };
            lambdas
                .iter()
                .map(|&l| Ok(worst_radial_ratio(&occ, l, &cfg, q)?.estimate))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let rows: Vec<RatioRow> = estimates
        .iter()
        .map(|e| {
            let (lo, hi) = e.plane_ratio_bounds();
            RatioRow {
                lambda: e.lambda,
                ratio: e.ratio,
                neg_log_ratio: -e.ratio.ln(),
                numerator: e.numerator,
                denominator: e.denominator,
                plane_norm_sq: e.plane_norm_sq,
                tail_fraction: e.tail_fraction,
                plane_ratio_lower: lo,
                plane_ratio_upper: hi,
            }
        })
        .collect();
    for r in &rows {
        eprintln!("Λ = {}: ratio {:.6e}", r.lambda, r.ratio);
    }
    let fit = if rows.len() >= 3 {
        let x: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.neg_log_ratio).collect();
        Some(affine_fit(&x, &y)?)
    } else {
        None
    };
    let value = json!({ "estimates": estimates, "affine_fit": fit });
    Ok((art.table(&rows)?, value, vec![]))
}

#[derive(Serialize)]
struct LiftRow {
    t: f64,
    x: f64,
    y: f64,
    v: f64,
}

fn harmonic_lift(
    art: &Artifacts<'_>,
    c: &SpectralCoefficients,
    lambda: f64,
    grid: LiftGrid,
    r_max: f64,
    tol: f64,
    q: &QuadratureSpec,
) -> Result<Dispatched> {
    let lift = HarmonicLift::new(&BandlimitedFunction::radial(c.clone()), lambda, r_max, q)?;
    let check = harmonic_lift_check(&lift, &grid)?;
    let lin = |(a, b): (f64, f64), i: usize| {
        if grid.n == 1 {
            0.5 * (a + b)
        } else {
            a + (b - a) * i as f64 / (grid.n - 1) as f64
        }
    };
    let mut rows = Vec::with_capacity(grid.n.pow(3));
    for i in 0..grid.n {
        let t = lin(grid.t, i);
        let v = lift.at(t)?;
        for a in 0..grid.n {
            for b in 0..grid.n {
                let (x, y) = (lin(grid.x, a), lin(grid.y, b));
                rows.push(LiftRow { t, x, y, v: v.eval_xy(x, y) });
            }
        }
    }
    let mut failures = Vec::new();
    if !(check.relative_residual < tol) {
        failures.push(format!("lift residual {} exceeds {tol}", check.relative_residual));
    }
    eprintln!(
        "relative residual {:.3e}, initial velocity error {:.3e}",
        check.relative_residual, check.initial_velocity_error
    );
    Ok((art.table(&rows)?, json!({ "grid": grid, "check": check }), failures))
}

fn obs_constant(
    art: &Artifacts<'_>,
    inp: &ObservabilityInputs,
    eta: f64,
    m_max: u32,
    optimize: Option<usize>,
) -> Result<Dispatched> {
    let report = observability_report(inp, eta, m_max)?;
    let big = hoelder_lambda(inp.k, inp.t, eta)?;
    let root_residual = (inp.k * big - inp.t * big * big - eta.ln()).abs();
    let mut failures = Vec::new();
    if root_residual > 1e-12 * (1.0 + eta.ln().abs()) {
        failures.push(format!("Λ(η) root residual {root_residual:e}"));
    }
    for s in &report.steps {
        let scale = 1e-12 * inp.t;
        if s.first_identity_residual.abs() > scale
            || s.second_identity_residual.abs() > scale
            || s.exponent_identity_residual > 1e-12
        {
            failures.push(format!("telescoping identity fails at m = {}", s.m));
        }
    }
    eprintln!("C_obs = e^{{{:.6}}} = {:.6e}", report.log_c_obs, report.c_obs);
    let mut value = json!({ "report": report, "root_residual": root_residual });
    if let Some(n) = optimize {
        let (lambda, log_c) = optimize_lambda(inp, n)?;
        eprintln!("best λ = {lambda:.6}: C_obs = e^{{{log_c:.6}}}");
        value["optimized"] = json!({ "lambda": lambda, "log_c_obs": log_c });
    }
    Ok((art.table(&report.steps)?, value, failures))
}

#[derive(Serialize)]
struct PointRow {
    x: f64,
    y: f64,
    lower_integral: f64,
    upper_integral: f64,
    l: f64,
    delta: f64,
    observed_radius: f64,
    observed_mass: f64,
    observability_lhs: f64,
    observability_rhs: f64,
}

fn necessary_condition(
    art: &Artifacts<'_>,
    region: &Region,
    log_c_obs: f64,
    z0: &[HalfPlanePoint],
    tol: f64,
    q: &QuadratureSpec,
) -> Result<Dispatched> {
    let report = necessary_condition_experiment(region, log_c_obs.exp(), z0, &ExtractionConfig::default(), q)?;
    let ext = report.extraction;
    let mut failures = Vec::new();
    let rows: Vec<PointRow> = report
        .points
        .iter()
        .map(|p| PointRow {
            x: p.z0.x(),
            y: p.z0.y(),
            lower_integral: p.lower_integral,
            upper_integral: p.upper_integral,
            l: p.extraction.l,
            delta: p.extraction.delta,
            observed_radius: p.observed_radius,
            observed_mass: p.observed_mass,
            observability_lhs: p.observability_lhs,
            observability_rhs: p.observability_rhs,
        })
        .collect();
    for p in &rows {
        if (p.l - ext.l).abs() > tol * ext.l || (p.delta - ext.delta).abs() > tol * ext.delta {
            failures.push(format!("(L, δ) at ({}, {}) differs from ({}, {})", p.x, p.y, ext.l, ext.delta));
        }
        if p.observability_lhs > p.observability_rhs {
            failures.push(format!("observability fails for the kernel launched at ({}, {})", p.x, p.y));
        }
        if p.observed_mass < p.delta {
            failures.push(format!("vol(ω ∩ B_L) below δ at ({}, {})", p.x, p.y));
        }
    }
    eprintln!("α = {}, L = {}, δ = {:.6e}", ext.alpha, ext.l, ext.delta);
    Ok((art.table(&rows)?, json!(report), failures))
}
