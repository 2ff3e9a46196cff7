//! Density operators on the pole subspace: construction of the decaying
//! mixtures, their evolution, the pure-exponential-decay check, and the
//! brute-force computation of every operator that decays exponentially.
//!
//! Evolution conjugates with U(t): W(t) = U(t) W U(t)^H, where the adjoint
//! is taken in the delta-pairing of the chain basis with its dual. Since
//! U(t) = exp(-izt) P(t) with P(t) unipotent and polynomial in t, the
//! product expands as `W(t) = exp(-Gamma t) * sum_p C_p t^p` with matrix
//! coefficients C_p linear in W. [`evolve_density`] evaluates that expansion
//! directly; the coefficient arithmetic on binomial-valued operators is
//! exact in f64, so the polynomial part cancels without rounding residue and
//! the decay law holds to machine precision. The generic conjugation with
//! [`crate::semigroup::expm_oracle`] is the independent route used in tests.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GamowError, Result};
use crate::par;
use crate::types::{binomial_f64, ComplexPole, GamowOperator, TimeGrid};

/// Default relative singular-value threshold for rank decisions.
pub const DEFAULT_SUBSPACE_TOL: f64 = 1e-10;

/// Multiply by i^q exactly (component swaps and sign flips only).
fn rotate(c: Complex64, q: i64) -> Complex64 {
    match q.rem_euclid(4) {
        0 => c,
        1 => Complex64::new(-c.im, c.re),
        2 => Complex64::new(-c.re, -c.im),
        _ => Complex64::new(c.im, -c.re),
    }
}

/// The decaying density operator of degree n: binomial weights down the
/// anti-diagonal, entry (k, n-k) = C(n, k).
///
/// Degree 0 is the ordinary one-dimensional resonance dyad.
pub fn build_density(pole: &ComplexPole, n: usize) -> Result<GamowOperator> {
    let r = pole.order();
    if n >= r {
        return Err(GamowError::IndexOutOfRange { index: n, bound: r });
    }
    let mut m = DMatrix::zeros(r, r);
    for k in 0..=n {
        m[(k, n - k)] = Complex64::new(binomial_f64(n, k), 0.0);
    }
    GamowOperator::new(*pole, m)
}

/// Matrix coefficients C_p of the polynomial expansion of
/// `exp(Gamma t) U(t) W U(t)^H`, for powers p = 0..=2(r-1).
///
/// Entry (j, m) of C_p collects `C(k, k-j) C(l, l-m) i^{(l-m)-(k-j)} W[k][l]`
/// over all k >= j, l >= m with (k-j) + (l-m) = p. For operators with
/// binomial-sized entries every term and every partial sum is an exact
/// integer in f64.
fn conjugation_coefficients(w: &GamowOperator) -> Vec<DMatrix<Complex64>> {
    let r = w.pole().order();
    let degree = 2 * (r - 1);
    let mut coeffs = vec![DMatrix::<Complex64>::zeros(r, r); degree + 1];
    for j in 0..r {
        for m in 0..r {
            for k in j..r {
                let bk = binomial_f64(k, k - j);
                for l in m..r {
                    let w_kl = w.entry(k, l);
                    if w_kl.re == 0.0 && w_kl.im == 0.0 {
                        continue;
                    }
                    let bl = binomial_f64(l, l - m);
                    let p = (k - j) + (l - m);
                    let q = (l - m) as i64 - (k - j) as i64;
                    coeffs[p][(j, m)] += rotate(w_kl, q) * (bk * bl);
                }
            }
        }
    }
    coeffs
}

/// Semigroup evolution of a density operator: W(t) = U(t) W U(t)^H.
///
/// Evaluated through the polynomial expansion of the unipotent part (see the
/// module docs), then scaled by exp(-Gamma t).
pub fn evolve_density(w: &GamowOperator, t: f64) -> Result<GamowOperator> {
    if !t.is_finite() {
        return Err(GamowError::NonFinite(format!("time t = {t}")));
    }
    if t < 0.0 {
        return Err(GamowError::ArrowOfTimeViolation { t });
    }
    let coeffs = conjugation_coefficients(w);
    let r = w.pole().order();
    let decay = (-w.pole().gamma() * t).exp();
    let mut m = DMatrix::zeros(r, r);
    for j in 0..r {
        for mm in 0..r {
            let mut val = Complex64::new(0.0, 0.0);
            for p in (0..coeffs.len()).rev() {
                val = val * t + coeffs[p][(j, mm)];
            }
            m[(j, mm)] = val * decay;
        }
    }
    GamowOperator::new(*w.pole(), m)
}

/// Outcome of [`check_exponential`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialReport {
    /// True when the largest deviation stayed within tolerance.
    pub is_exponential: bool,
    /// max over the grid of the max-entry of |exp(Gamma t) W(t) - W(0)|.
    pub max_deviation: f64,
}

fn deviation_at(w0: &GamowOperator, t: f64) -> Result<f64> {
    let wt = evolve_density(w0, t)?;
    let growth = (w0.pole().gamma() * t).exp();
    let dev = wt
        .matrix()
        .iter()
        .zip(w0.matrix().iter())
        .fold(0.0f64, |m, (a, b)| m.max((a * growth - b).norm()));
    Ok(dev)
}

/// Test whether an operator decays purely exponentially over a time grid.
///
/// Evaluates `D(t) = max-entry |exp(Gamma t) W(t) - W(0)|` on every grid
/// point; the verdict is `max D <= tol`.
pub fn check_exponential(
    w0: &GamowOperator,
    grid: &TimeGrid,
    tol: f64,
) -> Result<ExponentialReport> {
    check_exponential_impl(w0, grid, tol, true)
}

/// Sequential twin of [`check_exponential`], for benchmarking the parallel
/// grid sweep against the plain loop.
pub fn check_exponential_seq(
    w0: &GamowOperator,
    grid: &TimeGrid,
    tol: f64,
) -> Result<ExponentialReport> {
    check_exponential_impl(w0, grid, tol, false)
}

fn check_exponential_impl(
    w0: &GamowOperator,
    grid: &TimeGrid,
    tol: f64,
    parallel: bool,
) -> Result<ExponentialReport> {
    if tol <= 0.0 {
        return Err(GamowError::InvalidArgument(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    if grid.steps == 0 {
        return Err(GamowError::EmptyGrid);
    }
    let times: Vec<f64> = grid.times().collect();
    let devs: Vec<Result<f64>> = if parallel {
        par::map_indexed(times.len(), |i| deviation_at(w0, times[i]))
    } else {
        par::map_indexed_seq(times.len(), |i| deviation_at(w0, times[i]))
    };
    let mut max_deviation = 0.0f64;
    for d in devs {
        max_deviation = max_deviation.max(d?);
    }
    Ok(ExponentialReport {
        is_exponential: max_deviation <= tol,
        max_deviation,
    })
}

/// Monomial coefficients of the interpolating polynomial through
/// `(i, y[i])`, i = 0..y.len(), from the exact Lagrange expansion.
///
/// Numerators and denominators of the Lagrange basis polynomials over the
/// unit-spaced nodes are exact integers (they fit i128 and f64 for the node
/// counts used here, n <= 17), so the only rounding is one division per
/// coefficient plus the final accumulation.
fn interp_coeffs_unit_nodes(y: &[Complex64]) -> Vec<Complex64> {
    let n = y.len();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (i, &y_i) in y.iter().enumerate() {
        // numerator: product of (tau - j) over j != i, by convolution
        let mut num = vec![0i128; n];
        num[0] = 1;
        let mut len = 1;
        for j in 0..n {
            if j == i {
                continue;
            }
            let mut next = vec![0i128; n];
            for (p, &c) in num.iter().enumerate().take(len) {
                next[p + 1] += c;
                next[p] -= c * j as i128;
            }
            num = next;
            len += 1;
        }
        let mut den = 1i128;
        for j in 0..n {
            if j != i {
                den *= i as i128 - j as i128;
            }
        }
        let den = den as f64;
        for (c, &num_p) in coeffs.iter_mut().zip(num.iter()) {
            *c += y_i * (num_p as f64 / den);
        }
    }
    coeffs
}

/// Basis of the space of operators whose evolution is purely exponential.
///
/// A general operator evolves as `exp(-Gamma t)` times a matrix polynomial
/// in t whose coefficients are linear in the operator entries. Sampling
/// `exp(Gamma t) W(t)` for each elementary dyad at 2r+1 times and inverting
/// the Vandermonde system yields those coefficients; demanding every
/// coefficient of t^p, p >= 1, vanish gives a homogeneous linear system
/// whose null space is extracted by SVD with relative threshold `tol`.
///
/// The result spans exactly the binomial anti-diagonal operators of degree
/// 0..r-1, so its dimension is r.
pub fn exponential_subspace(pole: &ComplexPole, tol: f64) -> Result<Vec<GamowOperator>> {
    exponential_subspace_impl(pole, tol, true)
}

/// Sequential twin of [`exponential_subspace`]; the parallel version maps
/// over the elementary-dyad columns.
pub fn exponential_subspace_seq(pole: &ComplexPole, tol: f64) -> Result<Vec<GamowOperator>> {
    exponential_subspace_impl(pole, tol, false)
}

fn exponential_subspace_impl(
    pole: &ComplexPole,
    tol: f64,
    parallel: bool,
) -> Result<Vec<GamowOperator>> {
    if tol <= 0.0 {
        return Err(GamowError::InvalidArgument(format!(
            "rank tolerance must be > 0, got {tol}"
        )));
    }
    let r = pole.order();
    let n_samples = 2 * r + 1;
    let n_powers = n_samples - 1; // constraints on powers 1..=2r
    let n_unknowns = r * r;
    let rows = r * r * n_powers;
    let step = 1.0 / r as f64; // sample times i*step span [0, 2]

    let build_column = |c: usize| -> Result<DVector<Complex64>> {
        let (k, l) = (c / r, c % r);
        let mut dyad = DMatrix::zeros(r, r);
        dyad[(k, l)] = Complex64::new(1.0, 0.0);
        let dyad = GamowOperator::new(*pole, dyad)?;

        // samples of exp(Gamma t) W(t) at the interpolation nodes
        let mut samples = Vec::with_capacity(n_samples);
        for i in 0..n_samples {
            let t = i as f64 * step;
            let wt = evolve_density(&dyad, t)?;
            let growth = (pole.gamma() * t).exp();
            samples.push(wt.matrix().map(|e| e * growth));
        }

        let mut col = DVector::zeros(rows);
        let mut entry_samples = vec![Complex64::new(0.0, 0.0); n_samples];
        for j in 0..r {
            for m in 0..r {
                for (i, s) in samples.iter().enumerate() {
                    entry_samples[i] = s[(j, m)];
                }
                let beta = interp_coeffs_unit_nodes(&entry_samples);
                for p in 1..n_samples {
                    col[(j * r + m) * n_powers + (p - 1)] = beta[p];
                }
            }
        }
        Ok(col)
    };

    let columns: Vec<Result<DVector<Complex64>>> = if parallel {
        par::map_indexed(n_unknowns, build_column)
    } else {
        par::map_indexed_seq(n_unknowns, build_column)
    };

    let mut a = DMatrix::zeros(rows, n_unknowns);
    for (c, col) in columns.into_iter().enumerate() {
        a.column_mut(c).copy_from(&col?);
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0f64, f64::max);
    let threshold = tol * sigma_max;

    // null vectors, most singular first
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[i].partial_cmp(&sigma[j]).expect("finite"));
    let mut basis = Vec::new();
    for idx in order {
        if sigma_max > 0.0 && sigma[idx] > threshold {
            break;
        }
        let v = v_t.row(idx).adjoint();
        let mut m = DMatrix::zeros(r, r);
        for c in 0..n_unknowns {
            m[(c / r, c % r)] = v[c];
        }
        basis.push(GamowOperator::new(*pole, m)?);
    }
    Ok(basis)
}

/// Relative residual of projecting `w` onto the span of `basis`.
///
/// Uses a least-squares fit of `w` against the basis members, so the basis
/// need not be orthonormal. Returns 0 for the zero operator and 1 for an
/// empty basis.
pub fn projection_residual(basis: &[GamowOperator], w: &GamowOperator) -> f64 {
    let norm_w = w.frobenius_norm();
    if norm_w == 0.0 {
        return 0.0;
    }
    if basis.is_empty() {
        return 1.0;
    }
    let r = w.pole().order();
    let n = r * r;
    let mut b = DMatrix::zeros(n, basis.len());
    for (c, op) in basis.iter().enumerate() {
        for idx in 0..n {
            b[(idx, c)] = op.entry(idx / r, idx % r);
        }
    }
    let mut wv = DVector::zeros(n);
    for idx in 0..n {
        wv[idx] = w.entry(idx / r, idx % r);
    }
    let svd = b.svd(true, true);
    let x = svd.solve(&wv, 1e-14).expect("svd solve");
    let mut bx = DVector::zeros(n);
    for (c, op) in basis.iter().enumerate() {
        for idx in 0..n {
            bx[idx] += op.entry(idx / r, idx % r) * x[c];
        }
    }
    (bx - wv).norm() / norm_w
}
