//! Subcommand implementations and their file formats.
//!
//! CSV: comma separators, one header row, LF line endings, floats printed
//! with 17 significant digits. JSON: UTF-8, struct-declared key order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use gamow::density::{
    build_density, check_exponential, evolve_density, exponential_subspace, projection_residual,
    DEFAULT_SUBSPACE_TOL,
};
use gamow::fitting::{select_order, FitReport, OrderSelection};
use gamow::lineshape::{format_float, higher_order_lineshape, sample_series, Series};
use gamow::semigroup::evolve_ket;
use gamow::{ComplexPole, GamowError, TimeGrid};

use crate::config::{require, Config};
use crate::{
    CliError, DensityArgs, EvolveArgs, FitArgs, LineshapeArgs, UniquenessArgs,
};

fn create_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("cannot write {}: {e}", path.display()))
}

/// Sample times for a `--t-max/--steps` pair; a single step degenerates to
/// the time origin.
fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>, CliError> {
    if t_max < 0.0 {
        return Err(CliError::Usage(format!(
            "time grid requires t >= 0, got --t-max {t_max}"
        )));
    }
    if steps == 0 {
        return Err(CliError::Usage("--steps must be >= 1".into()));
    }
    if steps == 1 || t_max == 0.0 {
        return Ok(vec![0.0]);
    }
    Ok(TimeGrid::span(0.0, t_max, steps)
        .map_err(CliError::from)?
        .times()
        .collect())
}

pub fn evolve(args: EvolveArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let er = require(args.er, cfg.f64("er")?, "er")?;
    let gamma = require(args.gamma, cfg.f64("gamma")?, "gamma")?;
    let order = require(args.order, cfg.usize("order")?, "order")?;
    let k = require(args.k, cfg.usize("k")?, "k")?;
    let t_max = require(args.t_max, cfg.f64("t-max")?, "t-max")?;
    let steps = require(args.steps, cfg.usize("steps")?, "steps")?;
    let out = require(args.out, cfg.path("out")?, "out")?;

    let pole = ComplexPole::new(er, gamma, order)?;
    let times = time_grid(t_max, steps)?;

    let mut w = create_out(&out)?;
    let err = io_err(&out);
    let mut header = vec!["t".to_string()];
    for c in 0..order {
        header.push(format!("re_c{c}"));
        header.push(format!("im_c{c}"));
    }
    writeln!(w, "{}", header.join(",")).map_err(&err)?;
    for &t in &times {
        let state = evolve_ket(&pole, k, t)?;
        let mut fields = vec![format_float(t)];
        for c in 0..order {
            fields.push(format_float(state.coeff(c).re));
            fields.push(format_float(state.coeff(c).im));
        }
        writeln!(w, "{}", fields.join(",")).map_err(&err)?;
    }
    w.flush().map_err(&err)?;
    Ok(())
}

pub fn density(args: DensityArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let er = require(args.er, cfg.f64("er")?, "er")?;
    let gamma = require(args.gamma, cfg.f64("gamma")?, "gamma")?;
    let order = require(args.order, cfg.usize("order")?, "order")?;
    let n = require(args.n, cfg.usize("n")?, "n")?;
    let t_max = require(args.t_max, cfg.f64("t-max")?, "t-max")?;
    let steps = require(args.steps, cfg.usize("steps")?, "steps")?;
    let out = require(args.out, cfg.path("out")?, "out")?;
    let tol = args.tol.or(cfg.f64("tol")?).unwrap_or(1e-10);

    let pole = ComplexPole::new(er, gamma, order)?;
    let w0 = build_density(&pole, n)?;
    let times = time_grid(t_max, steps)?;
    let norm0 = w0.frobenius_norm();

    let mut w = create_out(&out)?;
    let err = io_err(&out);
    writeln!(w, "t,frobenius_norm,norm_ratio,max_deviation").map_err(&err)?;
    for &t in &times {
        let wt = evolve_density(&w0, t)?;
        let growth = (gamma * t).exp();
        let deviation = wt
            .matrix()
            .iter()
            .zip(w0.matrix().iter())
            .fold(0.0f64, |m, (a, b)| m.max((a * growth - b).norm()));
        let norm = wt.frobenius_norm();
        writeln!(
            w,
            "{},{},{},{}",
            format_float(t),
            format_float(norm),
            format_float(norm / norm0),
            format_float(deviation)
        )
        .map_err(&err)?;
    }
    w.flush().map_err(&err)?;

    let grid = TimeGrid {
        t0: 0.0,
        dt: if times.len() > 1 { times[1] - times[0] } else { 1.0 },
        steps: times.len(),
    };
    let report = check_exponential(&w0, &grid, tol)?;
    println!(
        "is_exponential: {} (max deviation {:e}, tolerance {:e})",
        report.is_exponential, report.max_deviation, tol
    );
    Ok(())
}

#[derive(Serialize)]
struct Cplx {
    re: f64,
    im: f64,
}

impl From<Complex64> for Cplx {
    fn from(c: Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

#[derive(Serialize)]
struct UniquenessReport {
    order: usize,
    tolerance: f64,
    dimension: usize,
    basis_matrices: Vec<Vec<Vec<Cplx>>>,
    projection_residuals: Vec<f64>,
}

pub fn uniqueness(args: UniquenessArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let order = require(args.order, cfg.usize("order")?, "order")?;
    let tol = args.tol.or(cfg.f64("tol")?).unwrap_or(DEFAULT_SUBSPACE_TOL);
    let er = args.er.or(cfg.f64("er")?).unwrap_or(1.0);
    let gamma = args.gamma.or(cfg.f64("gamma")?).unwrap_or(1.0);
    let out = args.out.or(cfg.path("out")?);

    let pole = ComplexPole::new(er, gamma, order)?;
    let basis = exponential_subspace(&pole, tol)?;
    let residuals: Vec<f64> = (0..order)
        .map(|n| {
            build_density(&pole, n)
                .map(|w| projection_residual(&basis, &w))
                .map_err(CliError::from)
        })
        .collect::<Result<_, _>>()?;

    let report = UniquenessReport {
        order,
        tolerance: tol,
        dimension: basis.len(),
        basis_matrices: basis
            .iter()
            .map(|op| {
                (0..order)
                    .map(|j| (0..order).map(|m| Cplx::from(op.entry(j, m))).collect())
                    .collect()
            })
            .collect(),
        projection_residuals: residuals,
    };

    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Io(format!("cannot encode report: {e}")))?;
    match out {
        Some(path) => {
            let mut w = create_out(&path)?;
            writeln!(w, "{json}").map_err(io_err(&path))?;
            w.flush().map_err(io_err(&path))?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

pub fn lineshape(args: LineshapeArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let er = require(args.er, cfg.f64("er")?, "er")?;
    let gamma = require(args.gamma, cfg.f64("gamma")?, "gamma")?;
    let weights_text = require(args.weights, cfg.weights("weights")?, "weights")?;
    let e_min = require(args.e_min, cfg.f64("e-min")?, "e-min")?;
    let e_max = require(args.e_max, cfg.f64("e-max")?, "e-max")?;
    let points = require(args.points, cfg.usize("points")?, "points")?;
    let out = require(args.out, cfg.path("out")?, "out")?;

    let weights: Vec<f64> = weights_text
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("malformed weight {tok:?}")))
        })
        .collect::<Result<_, _>>()?;
    if weights.is_empty() {
        return Err(CliError::Usage("--weights needs at least one value".into()));
    }

    // the smallest chain order that houses these weights
    let pole = ComplexPole::new(er, gamma, weights.len())?;
    let series = sample_series(
        |e| higher_order_lineshape(e, &pole, &weights).unwrap_or(f64::NAN),
        e_min,
        e_max,
        points,
        "value",
    )?;
    if series.y().iter().any(|v| !v.is_finite()) {
        return Err(CliError::Numeric("line shape evaluated non-finite".into()));
    }

    let mut w = create_out(&out)?;
    series.write_csv(&mut w).map_err(io_err(&out))?;
    w.flush().map_err(io_err(&out))?;
    Ok(())
}

#[derive(Deserialize)]
struct CplxIn {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
struct InitSpec {
    z: CplxIn,
}

#[derive(Serialize)]
struct FitPoleDto {
    position: Cplx,
    order: usize,
    residues: Vec<Cplx>,
}

#[derive(Serialize)]
struct FitReportDto {
    residual_rms: f64,
    iterations: usize,
    gradient_norm: f64,
    poles: Vec<FitPoleDto>,
}

impl From<&FitReport> for FitReportDto {
    fn from(r: &FitReport) -> Self {
        Self {
            residual_rms: r.residual_rms,
            iterations: r.iterations,
            gradient_norm: r.gradient_norm,
            poles: r
                .model
                .poles()
                .iter()
                .map(|p| FitPoleDto {
                    position: p.position().into(),
                    order: p.order(),
                    residues: p.residues().iter().map(|&a| a.into()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct OrderFitDto {
    order: usize,
    converged: bool,
    residue_significant: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<FitReportDto>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FitOutput {
    selected_order: usize,
    fits: Vec<OrderFitDto>,
}

fn selection_to_output(sel: &OrderSelection) -> FitOutput {
    FitOutput {
        selected_order: sel.selected_order,
        fits: sel
            .fits
            .iter()
            .map(|f| OrderFitDto {
                order: f.order,
                converged: f.converged,
                residue_significant: f.residue_significant,
                fit: f.report.as_ref().map(FitReportDto::from),
                error: f.error.clone(),
            })
            .collect(),
    }
}

pub fn fit(args: FitArgs) -> Result<(), CliError> {
    let cfg = Config::load(args.config.as_deref())?;
    let data_path = require(args.data, cfg.path("data")?, "data")?;
    let init_path = require(args.init, cfg.path("init")?, "init")?;
    let max_order = require(args.max_order, cfg.usize("max-order")?, "max-order")?;
    let threshold = args.threshold.or(cfg.f64("threshold")?).unwrap_or(0.05);
    let out = require(args.out, cfg.path("out")?, "out")?;

    let file = File::open(&data_path).map_err(|e| {
        CliError::Usage(format!("cannot read data {}: {e}", data_path.display()))
    })?;
    let data = Series::<f64>::read_csv(BufReader::new(file), "intensity")?;

    let init_text = std::fs::read_to_string(&init_path).map_err(|e| {
        CliError::Usage(format!("cannot read init {}: {e}", init_path.display()))
    })?;
    let init: InitSpec = serde_json::from_str(&init_text).map_err(|e| {
        CliError::Usage(format!("malformed init {}: {e}", init_path.display()))
    })?;
    let z_init = Complex64::new(init.z.re, init.z.im);

    match select_order(&data, z_init, max_order, threshold) {
        Ok(selection) => {
            let output = selection_to_output(&selection);
            write_json(&out, &output)?;
            println!("selected_order: {}", selection.selected_order);
            Ok(())
        }
        Err(e @ GamowError::AllFitsFailed) => {
            // still write a diagnostics stub so the failure is inspectable
            #[derive(Serialize)]
            struct FailureOutput {
                error: String,
            }
            write_json(
                &out,
                &FailureOutput {
                    error: e.to_string(),
                },
            )?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("cannot encode report: {e}")))?;
    let mut w = create_out(path)?;
    writeln!(w, "{json}").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    Ok(())
}
