//! The restricted Hamiltonian on the pole subspace and its semigroup time
//! evolution.
//!
//! On the chain basis the Hamiltonian acts as a Jordan block with the pole
//! position on the diagonal and the chain couplings 1, 2, ..., r-1 on the
//! superdiagonal. Its exponential is available twice: in closed form
//! ([`evolve_ket`], [`evolution_matrix`]) and through a generic matrix
//! exponential ([`expm_oracle`]) that serves as an independent check.
//!
//! Evolution is defined for t >= 0 only; every entry point rejects negative
//! times with [`GamowError::ArrowOfTimeViolation`].

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{GamowError, Result};
use crate::types::{binomial_f64, ComplexPole, GamowOperator, GamowState};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(GamowError::NonFinite(format!("time t = {t}")));
    }
    if t < 0.0 {
        return Err(GamowError::ArrowOfTimeViolation { t });
    }
    Ok(())
}

/// The Hamiltonian restricted to the pole subspace.
///
/// Column k carries the eigenvalue z on the diagonal and the chain coupling
/// k on the superdiagonal, so that H|k> = z|k> + k|k-1>. Order 1 reduces to
/// the plain complex eigenvalue.
pub fn hamiltonian_matrix(pole: &ComplexPole) -> GamowOperator {
    let r = pole.order();
    let z = pole.position();
    let mut m = DMatrix::zeros(r, r);
    for k in 0..r {
        m[(k, k)] = z;
        if k > 0 {
            m[(k - 1, k)] = Complex64::new(k as f64, 0.0);
        }
    }
    GamowOperator::new(*pole, m).expect("square by construction")
}

/// Closed-form semigroup evolution of the chain basis state of index k.
///
/// The coefficients are
/// `coeffs[k-v] = exp(-i z t) * C(k, v) * (-i t)^v` for v = 0..=k; indices
/// above k stay exactly zero, so evolution never leaves the subspace nor
/// raises the chain degree.
pub fn evolve_ket(pole: &ComplexPole, k: usize, t: f64) -> Result<GamowState> {
    let r = pole.order();
    if k >= r {
        return Err(GamowError::IndexOutOfRange { index: k, bound: r });
    }
    check_time(t)?;
    let phase = (-I * pole.position() * t).exp();
    let step = -I * t;
    let mut coeffs = nalgebra::DVector::zeros(r);
    let mut power = ONE;
    for v in 0..=k {
        coeffs[k - v] = phase * (power * binomial_f64(k, v));
        if v < k {
            power *= step;
        }
    }
    GamowState::new(*pole, coeffs)
}

/// The closed-form evolution matrix U(t); column k is [`evolve_ket`] of k.
pub fn evolution_matrix(pole: &ComplexPole, t: f64) -> Result<GamowOperator> {
    let r = pole.order();
    let mut m = DMatrix::zeros(r, r);
    for k in 0..r {
        let col = evolve_ket(pole, k, t)?;
        m.column_mut(k).copy_from(col.coeffs());
    }
    GamowOperator::new(*pole, m)
}

/// Evolve an arbitrary state by linearity: U(t) applied to its coefficients.
pub fn evolve_state(state: &GamowState, t: f64) -> Result<GamowState> {
    check_time(t)?;
    let u = evolution_matrix(state.pole(), t)?;
    GamowState::new(*state.pole(), u.matrix() * state.coeffs())
}

/// Independent matrix exponential: returns `exp(-i * matrix * t)`.
///
/// Matrices of the form zI + N with N nilpotent (any Jordan-type block) are
/// handled exactly: the series `exp(-izt) * sum_v (-it)^v N^v / v!`
/// terminates at v = r-1. Everything else goes through scaling and squaring
/// of a 16-term Taylor polynomial; with the scaled norm kept at or below
/// 1/2, the truncation error before squaring is below 0.5^17/17! < 3e-20.
pub fn expm_oracle(matrix: &DMatrix<Complex64>, t: f64) -> Result<DMatrix<Complex64>> {
    let r = matrix.nrows();
    if r != matrix.ncols() {
        return Err(GamowError::DimensionMismatch(format!(
            "expm needs a square matrix, got {}x{}",
            r,
            matrix.ncols()
        )));
    }
    if !t.is_finite() || matrix.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(GamowError::NonFinite("expm input".into()));
    }
    if r == 0 {
        return Ok(matrix.clone());
    }

    // Split off the eigenvalue; if the remainder is nilpotent the series is
    // exact and terminates. A bitwise-constant diagonal (the Jordan case) is
    // taken as-is so the phase carries no trace-averaging rounding.
    let z = if (1..r).all(|k| matrix[(k, k)] == matrix[(0, 0)]) {
        matrix[(0, 0)]
    } else {
        matrix.trace() / Complex64::new(r as f64, 0.0)
    };
    let mut nilp = matrix.clone();
    for k in 0..r {
        nilp[(k, k)] -= z;
    }
    let scale = nilp.iter().fold(0.0f64, |m, e| m.max(e.norm()));
    let nilpotent = if scale == 0.0 {
        true
    } else {
        let mut p = nilp.clone();
        for _ in 1..r {
            p = &p * &nilp;
        }
        let residue = p.iter().fold(0.0f64, |m, e| m.max(e.norm()));
        residue <= 1e-12 * scale.powi(r as i32).max(scale)
    };

    let result = if nilpotent {
        let phase = (-I * z * t).exp();
        let step = -I * t;
        let mut sum = DMatrix::identity(r, r);
        let mut term = DMatrix::<Complex64>::identity(r, r);
        let mut power = ONE;
        for v in 1..r {
            // term = N^v / v!, kept exact for integer chains
            term = (&term * &nilp) / Complex64::new(v as f64, 0.0);
            power *= step;
            sum += term.map(|e| e * power);
        }
        sum.map(|e| e * phase)
    } else {
        expm_general(&matrix.map(|e| e * (-I * t)))
    };

    if result.iter().any(|e| !e.re.is_finite() || !e.im.is_finite()) {
        return Err(GamowError::NonFinite("expm result".into()));
    }
    Ok(result)
}

/// Scaling-and-squaring Taylor evaluation of `exp(a)`.
fn expm_general(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let r = a.nrows();
    let norm1 = (0..r)
        .map(|j| a.column(j).iter().map(|e| e.norm()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a.map(|e| e / Complex64::new(2f64.powi(squarings as i32), 0.0));

    let mut sum = DMatrix::identity(r, r);
    let mut term = DMatrix::<Complex64>::identity(r, r);
    for j in 1..=16 {
        term = (&term * &b) / Complex64::new(j as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}
