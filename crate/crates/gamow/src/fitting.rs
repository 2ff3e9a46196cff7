//! Least-squares fitting of multi-pole rational amplitude models to sampled
//! intensity data, and residual-plateau order selection.
//!
//! The model is `I(E) = |sum_poles sum_j A_j / (E - z)^j|^2`. Parameters are
//! packed as real vectors (Re z, u, Re A_1, Im A_1, ...) with the pole kept
//! on the physical sheet through the substitution `Im z = -exp(u)`.
//! Jacobians are analytic; the damped normal equations use plain
//! Levenberg-style identity damping, which also regularizes the global
//! phase direction of the residues (the intensity is blind to it).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GamowError, Result};
use crate::lineshape::Series;
use crate::par;

/// One pole of the amplitude model: a position in the lower half plane and
/// the Laurent residues A_1..A_order. The order is the residue count; the
/// top residue must be nonzero for the order to be genuine.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPole {
    position: Complex64,
    residues: Vec<Complex64>,
}

impl ModelPole {
    /// Build a pole, checking `Im z < 0`, a nonempty residue vector, and a
    /// nonzero top residue.
    pub fn new(position: Complex64, residues: Vec<Complex64>) -> Result<Self> {
        if !position.re.is_finite() || !position.im.is_finite() || position.im >= 0.0 {
            return Err(GamowError::InvalidPole(format!(
                "pole position must have Im z < 0, got {position}"
            )));
        }
        if residues.is_empty() {
            return Err(GamowError::InvalidPole("residue vector is empty".into()));
        }
        let top = residues[residues.len() - 1];
        if top.re == 0.0 && top.im == 0.0 {
            return Err(GamowError::InvalidPole(
                "top residue A_order must be nonzero".into(),
            ));
        }
        Ok(Self { position, residues })
    }

    /// Pole position z.
    pub fn position(&self) -> Complex64 {
        self.position
    }

    /// Pole order (number of residues).
    pub fn order(&self) -> usize {
        self.residues.len()
    }

    /// Laurent residues A_1..A_order.
    pub fn residues(&self) -> &[Complex64] {
        &self.residues
    }
}

/// A multi-pole rational amplitude model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PoleModel {
    poles: Vec<ModelPole>,
}

impl PoleModel {
    /// A model from its poles; the empty model is the zero amplitude.
    pub fn new(poles: Vec<ModelPole>) -> Self {
        Self { poles }
    }

    /// The poles.
    pub fn poles(&self) -> &[ModelPole] {
        &self.poles
    }

    /// Number of free real parameters (2 per pole position + 2 per residue).
    pub fn param_count(&self) -> usize {
        self.poles.iter().map(|p| 2 + 2 * p.order()).sum()
    }
}

/// Complex amplitude `a(E) = sum_poles sum_j A_j / (E - z)^j`.
pub fn model_amplitude(model: &PoleModel, e: f64) -> Result<Complex64> {
    let mut a = Complex64::new(0.0, 0.0);
    for pole in &model.poles {
        let d = Complex64::new(e, 0.0) - pole.position;
        if d.norm() < 1e-300 {
            return Err(GamowError::DivergentPoint { e });
        }
        let inv = Complex64::new(1.0, 0.0) / d;
        let mut power = Complex64::new(1.0, 0.0);
        for &res in &pole.residues {
            power *= inv;
            a += res * power;
        }
    }
    Ok(a)
}

/// Model intensity `|a(E)|^2`.
pub fn model_intensity(model: &PoleModel, e: f64) -> Result<f64> {
    Ok(model_amplitude(model, e)?.norm_sqr())
}

/// Damped least-squares options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Cap on trial steps.
    pub max_iterations: usize,
    /// Initial damping parameter.
    pub damping_init: f64,
    /// Convergence threshold on the max-norm of the objective gradient.
    pub tol_grad: f64,
    /// Convergence threshold on the relative step size.
    pub tol_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 300,
            damping_init: 1e-3,
            tol_grad: 1e-10,
            tol_step: 1e-12,
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || self.damping_init <= 0.0
            || self.tol_grad <= 0.0
            || self.tol_step <= 0.0
        {
            return Err(GamowError::InvalidArgument(
                "fit options must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Result of a converged (or best-so-far) fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Fitted model.
    pub model: PoleModel,
    /// Root-mean-square residual of the intensity fit.
    pub residual_rms: f64,
    /// Trial steps performed.
    pub iterations: usize,
    /// Max-norm of the objective gradient at exit.
    pub gradient_norm: f64,
    /// Objective value after every accepted step, starting from the
    /// initial model; non-increasing by construction.
    pub objective_history: Vec<f64>,
}

/// Parameter layout for one pole: (re z, u) then interleaved residues.
struct Packing {
    orders: Vec<usize>,
}

impl Packing {
    fn param_count(&self) -> usize {
        self.orders.iter().map(|o| 2 + 2 * o).sum()
    }

    fn pack(&self, model: &PoleModel) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        for pole in model.poles() {
            v.push(pole.position().re);
            v.push((-pole.position().im).ln());
            for res in pole.residues() {
                v.push(res.re);
                v.push(res.im);
            }
        }
        DVector::from_vec(v)
    }

    fn unpack(&self, params: &DVector<f64>) -> Result<PoleModel> {
        let mut poles = Vec::with_capacity(self.orders.len());
        let mut idx = 0;
        for &order in &self.orders {
            let z = Complex64::new(params[idx], -params[idx + 1].exp());
            idx += 2;
            let mut residues = Vec::with_capacity(order);
            for _ in 0..order {
                residues.push(Complex64::new(params[idx], params[idx + 1]));
                idx += 2;
            }
            poles.push(
                ModelPole::new(z, residues)
                    .map_err(|e| GamowError::IllConditioned(format!("degenerate fit: {e}")))?,
            );
        }
        Ok(PoleModel::new(poles))
    }
}

struct Evaluation {
    objective: f64,
    residuals: DVector<f64>,
    jacobian: DMatrix<f64>,
}

/// Residuals and analytic Jacobian of the intensity model at `params`.
/// Returns None when the model diverges or overflows at a data point.
fn evaluate(packing: &Packing, params: &DVector<f64>, xs: &[f64], ys: &[f64]) -> Option<Evaluation> {
    let m = xs.len();
    let n = packing.param_count();
    let mut residuals = DVector::zeros(m);
    let mut jacobian = DMatrix::zeros(m, n);

    // per-pole decoded parameters
    let mut zs = Vec::with_capacity(packing.orders.len());
    let mut exp_us = Vec::with_capacity(packing.orders.len());
    let mut residues = Vec::with_capacity(packing.orders.len());
    {
        let mut idx = 0;
        for &order in &packing.orders {
            let exp_u = params[idx + 1].exp();
            if !exp_u.is_finite() {
                return None;
            }
            zs.push(Complex64::new(params[idx], -exp_u));
            exp_us.push(exp_u);
            idx += 2;
            let mut rs = Vec::with_capacity(order);
            for _ in 0..order {
                rs.push(Complex64::new(params[idx], params[idx + 1]));
                idx += 2;
            }
            residues.push(rs);
        }
    }

    let mut objective = 0.0;
    let mut powers: Vec<Complex64> = Vec::new();
    for (i, (&e, &y)) in xs.iter().zip(ys.iter()).enumerate() {
        let mut a = Complex64::new(0.0, 0.0);
        let mut da_dz = vec![Complex64::new(0.0, 0.0); packing.orders.len()];
        powers.clear();
        let mut pole_powers: Vec<usize> = Vec::with_capacity(packing.orders.len());

        for (p, &z) in zs.iter().enumerate() {
            let d = Complex64::new(e, 0.0) - z;
            if d.norm() < 1e-300 {
                return None;
            }
            let inv = Complex64::new(1.0, 0.0) / d;
            let base = powers.len();
            pole_powers.push(base);
            let mut power = Complex64::new(1.0, 0.0);
            for (j, &res) in residues[p].iter().enumerate() {
                power *= inv;
                powers.push(power);
                a += res * power;
                da_dz[p] += res * power * inv * (j as f64 + 1.0);
            }
        }

        let intensity = a.norm_sqr();
        if !intensity.is_finite() {
            return None;
        }
        residuals[i] = intensity - y;
        objective += residuals[i] * residuals[i];

        let ac = a.conj();
        let mut idx = 0;
        for (p, &order) in packing.orders.iter().enumerate() {
            jacobian[(i, idx)] = 2.0 * (ac * da_dz[p]).re;
            jacobian[(i, idx + 1)] = -exp_us[p] * 2.0 * (ac * (Complex64::i() * da_dz[p])).re;
            idx += 2;
            for j in 0..order {
                let phi = powers[pole_powers[p] + j];
                let w = ac * phi;
                jacobian[(i, idx)] = 2.0 * w.re;
                jacobian[(i, idx + 1)] = -2.0 * w.im;
                idx += 2;
            }
        }
    }

    if !objective.is_finite() {
        return None;
    }
    Some(Evaluation {
        objective,
        residuals,
        jacobian,
    })
}

const LAMBDA_MAX: f64 = 1e14;
const LAMBDA_MIN: f64 = 1e-14;

/// Fit a pole model to intensity data by damped least squares.
///
/// Accepted steps strictly decrease the objective; damping adapts after
/// every trial. Convergence is declared on a small gradient or a small
/// accepted step, and the run is fully deterministic.
pub fn fit_poles(data: &Series, init: &PoleModel, opts: &FitOptions) -> Result<FitReport> {
    opts.validate()?;
    let xs = data.x();
    let ys = data.y();
    if ys.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(GamowError::InvalidArgument(
            "intensity data must be finite and nonnegative".into(),
        ));
    }
    if ys.iter().all(|v| v.abs() < 1e-12) {
        return Err(GamowError::NoSignal);
    }
    if init.poles().is_empty() {
        return Err(GamowError::InvalidArgument(
            "initial model needs at least one pole".into(),
        ));
    }
    let packing = Packing {
        orders: init.poles().iter().map(|p| p.order()).collect(),
    };
    let n_params = packing.param_count();
    if xs.len() < n_params {
        return Err(GamowError::InsufficientData {
            samples: xs.len(),
            params: n_params,
        });
    }

    let mut params = packing.pack(init);
    let mut eval = evaluate(&packing, &params, xs, ys)
        .ok_or_else(|| GamowError::IllConditioned("model diverges at the initial point".into()))?;
    let mut lambda = opts.damping_init;
    let mut history = vec![eval.objective];
    let mut iterations = 0;

    let rms = |objective: f64| (objective / xs.len() as f64).sqrt();
    let grad_norm = |ev: &Evaluation| {
        let g = ev.jacobian.transpose() * &ev.residuals * 2.0;
        g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };

    let report = |params: &DVector<f64>, ev: &Evaluation, iterations, history: &Vec<f64>| {
        packing.unpack(params).map(|model| FitReport {
            model,
            residual_rms: rms(ev.objective),
            iterations,
            gradient_norm: grad_norm(ev),
            objective_history: history.clone(),
        })
    };

    loop {
        let gnorm = grad_norm(&eval);
        if gnorm <= opts.tol_grad {
            return report(&params, &eval, iterations, &history);
        }
        if iterations >= opts.max_iterations {
            let best = report(&params, &eval, iterations, &history)?;
            return Err(GamowError::NonConvergence {
                iterations,
                gradient_norm: gnorm,
                report: Box::new(best),
            });
        }
        iterations += 1;

        let jtj = eval.jacobian.transpose() * &eval.jacobian;
        let jtr = eval.jacobian.transpose() * &eval.residuals;
        let mut step = None;
        let mut local_lambda = lambda;
        while local_lambda <= LAMBDA_MAX {
            let mut damped = jtj.clone();
            for d in 0..n_params {
                damped[(d, d)] += local_lambda;
            }
            if let Some(chol) = damped.cholesky() {
                step = Some(chol.solve(&(-&jtr)));
                break;
            }
            local_lambda *= 10.0;
        }
        lambda = local_lambda;
        let Some(delta) = step else {
            return Err(GamowError::IllConditioned(
                "normal equations stayed singular beyond damping repair".into(),
            ));
        };

        let trial = &params + &delta;
        let accepted = evaluate(&packing, &trial, xs, ys)
            .filter(|t| t.objective < eval.objective);
        match accepted {
            Some(trial_eval) => {
                params = trial;
                eval = trial_eval;
                history.push(eval.objective);
                lambda = (lambda / 3.0).max(LAMBDA_MIN);
                let step_size = delta.norm();
                if step_size <= opts.tol_step * (params.norm() + opts.tol_step) {
                    return report(&params, &eval, iterations, &history);
                }
            }
            None => {
                lambda *= 4.0;
                if lambda > LAMBDA_MAX {
                    // no acceptable step exists at any damping: stalled at a
                    // numerical minimum
                    return report(&params, &eval, iterations, &history);
                }
            }
        }
    }
}

/// One candidate in an order scan.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    /// Candidate pole order.
    pub order: usize,
    /// Whether the fit converged.
    pub converged: bool,
    /// Whether the fitted top residue is distinguishable from zero at the
    /// fit's own residual scale (`|A_order| > 10 * residual_rms`).
    pub residue_significant: bool,
    /// The fit report (best-so-far when not converged).
    pub report: Option<FitReport>,
    /// Error description when the fit failed outright.
    pub error: Option<String>,
}

/// Result of [`select_order`].
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    /// Smallest order whose residual is within the plateau threshold of the
    /// best.
    pub selected_order: usize,
    /// All candidate fits, by increasing order.
    pub fits: Vec<OrderFit>,
}

/// Initial model for a candidate order: the supplied pole position with the
/// top residue scaled so the on-resonance intensity matches the data peak.
fn order_init(z_init: Complex64, order: usize, peak: f64) -> Result<PoleModel> {
    let half_width = -z_init.im;
    let mut residues = vec![Complex64::new(0.0, 0.0); order];
    let magnitude = peak.sqrt() * half_width.powi(order as i32);
    residues[order - 1] = Complex64::new(magnitude.max(1e-30), 0.0);
    Ok(PoleModel::new(vec![ModelPole::new(z_init, residues)?]))
}

/// Fit orders 1..=max_order and select the smallest order whose residual
/// is within factor (1 + threshold) of the best residual.
///
/// Residuals at or below the numerical floor (1e-12 of the data peak) are
/// treated as ties so that noiseless fits plateau at the generating order.
/// Candidates run independently (in parallel under the `parallel` feature)
/// and the outcome equals serial execution.
pub fn select_order(
    data: &Series,
    z_init: Complex64,
    max_order: usize,
    threshold: f64,
) -> Result<OrderSelection> {
    select_order_impl(data, z_init, max_order, threshold, true)
}

/// Sequential twin of [`select_order`].
pub fn select_order_seq(
    data: &Series,
    z_init: Complex64,
    max_order: usize,
    threshold: f64,
) -> Result<OrderSelection> {
    select_order_impl(data, z_init, max_order, threshold, false)
}

fn select_order_impl(
    data: &Series,
    z_init: Complex64,
    max_order: usize,
    threshold: f64,
    parallel: bool,
) -> Result<OrderSelection> {
    if max_order < 1 {
        return Err(GamowError::InvalidArgument("max_order must be >= 1".into()));
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(GamowError::InvalidArgument(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if z_init.im >= 0.0 {
        return Err(GamowError::InvalidPole(format!(
            "initial pole must have Im z < 0, got {z_init}"
        )));
    }
    let peak = data.y().iter().cloned().fold(0.0f64, f64::max);
    if peak < 1e-12 {
        return Err(GamowError::NoSignal);
    }

    let run_candidate = |i: usize| -> OrderFit {
        let order = i + 1;
        let opts = FitOptions::default();
        let fit = order_init(z_init, order, peak)
            .and_then(|init| fit_poles(data, &init, &opts));
        match fit {
            Ok(report) => OrderFit {
                order,
                converged: true,
                residue_significant: residue_significant(&report),
                report: Some(report),
                error: None,
            },
            Err(GamowError::NonConvergence { report, .. }) => OrderFit {
                order,
                converged: false,
                residue_significant: residue_significant(&report),
                report: Some(*report),
                error: Some("did not converge".into()),
            },
            Err(e) => OrderFit {
                order,
                converged: false,
                residue_significant: false,
                report: None,
                error: Some(e.to_string()),
            },
        }
    };

    let fits: Vec<OrderFit> = if parallel {
        par::map_indexed(max_order, run_candidate)
    } else {
        par::map_indexed_seq(max_order, run_candidate)
    };

    // residual floor: noiseless fits bottom out at rounding level, which
    // must compare as a tie rather than a random ordering
    let floor = 1e-12 * peak;
    let best = fits
        .iter()
        .filter(|f| f.converged)
        .filter_map(|f| f.report.as_ref())
        .map(|r| r.residual_rms.max(floor))
        .fold(f64::INFINITY, f64::min);
    if !best.is_finite() {
        return Err(GamowError::AllFitsFailed);
    }
    let selected_order = fits
        .iter()
        .filter(|f| f.converged)
        .find(|f| {
            f.report
                .as_ref()
                .is_some_and(|r| r.residual_rms.max(floor) <= (1.0 + threshold) * best)
        })
        .map(|f| f.order)
        .expect("a converged fit attains the best residual");

    Ok(OrderSelection {
        selected_order,
        fits,
    })
}

fn residue_significant(report: &FitReport) -> bool {
    report.model.poles().iter().all(|p| {
        let top = p.residues()[p.order() - 1].norm();
        top > 10.0 * report.residual_rms
    })
}
