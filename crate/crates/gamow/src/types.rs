//! Core domain types: poles, chain states, operators on the pole subspace,
//! and time grids.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{GamowError, Result};

/// A resonance pole below the real axis with a Jordan-chain order.
///
/// The pole sits at `E_R - i*Gamma/2`; `order = 1` is the ordinary
/// single-pole resonance, `order = r` carries a chain of `r` generalized
/// states. Units use hbar = 1, so time carries inverse-energy units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPole {
    e_r: f64,
    gamma: f64,
    order: usize,
}

impl ComplexPole {
    /// Build a pole, checking `gamma > 0` and `order >= 1`.
    pub fn new(e_r: f64, gamma: f64, order: usize) -> Result<Self> {
        if !e_r.is_finite() || !gamma.is_finite() {
            return Err(GamowError::InvalidPole(format!(
                "E_R and Gamma must be finite, got E_R = {e_r}, Gamma = {gamma}"
            )));
        }
        if gamma <= 0.0 {
            return Err(GamowError::InvalidPole(format!(
                "Gamma must be > 0, got {gamma}"
            )));
        }
        if order < 1 {
            return Err(GamowError::InvalidPole("order must be >= 1".into()));
        }
        Ok(Self { e_r, gamma, order })
    }

    /// Resonance energy E_R.
    pub fn e_r(&self) -> f64 {
        self.e_r
    }

    /// Width Gamma (inverse lifetime).
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Chain order r.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Pole position `z = E_R - i*Gamma/2` in the lower half plane.
    pub fn position(&self) -> Complex64 {
        Complex64::new(self.e_r, -0.5 * self.gamma)
    }
}

/// Position of a pole; free-function form of [`ComplexPole::position`].
pub fn pole_position(pole: &ComplexPole) -> Complex64 {
    pole.position()
}

/// Exact binomial coefficient C(n, k).
///
/// Returns 0 for `k < 0` or `k > n`, and reports overflow instead of
/// silently wrapping once the product leaves the exact `u64` range.
pub fn binomial(n: u64, k: i64) -> Result<u64> {
    if k < 0 || k as u64 > n {
        return Ok(0);
    }
    let k = (k as u64).min(n - k as u64);
    let mut c: u64 = 1;
    for i in 1..=k {
        // c * (n - k + i) stays integral at every step
        let num = c
            .checked_mul(n - k + i)
            .ok_or_else(|| GamowError::Overflow(format!("binomial({n}, {k})")))?;
        c = num / i;
    }
    Ok(c)
}

/// Binomial coefficient as f64, for evolution kernels.
///
/// Exact whenever the value fits in 53 bits; chain orders in practice are
/// single digits, far below that.
pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 1..=k {
        c = c * (n - k + i) as f64 / i as f64;
    }
    c
}

/// A state in the r-dimensional pole subspace, expressed on the chain basis.
///
/// `coeffs[k]` multiplies the degree-(k+1) chain vector.
#[derive(Debug, Clone, PartialEq)]
pub struct GamowState {
    pole: ComplexPole,
    coeffs: DVector<Complex64>,
}

impl GamowState {
    /// Build a state, checking the coefficient vector length against the
    /// pole order.
    pub fn new(pole: ComplexPole, coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != pole.order() {
            return Err(GamowError::DimensionMismatch(format!(
                "state has {} coefficients for pole order {}",
                coeffs.len(),
                pole.order()
            )));
        }
        Ok(Self { pole, coeffs })
    }

    /// The basis state with a unit coefficient on chain index `k`.
    pub fn basis(pole: ComplexPole, k: usize) -> Result<Self> {
        if k >= pole.order() {
            return Err(GamowError::IndexOutOfRange {
                index: k,
                bound: pole.order(),
            });
        }
        let mut coeffs = DVector::zeros(pole.order());
        coeffs[k] = Complex64::new(1.0, 0.0);
        Ok(Self { pole, coeffs })
    }

    /// The pole this state is attached to.
    pub fn pole(&self) -> &ComplexPole {
        &self.pole
    }

    /// Coefficient vector on the chain basis.
    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    /// Single coefficient.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs[k]
    }
}

/// An operator on the pole subspace: an r x r complex matrix on the chain
/// basis, entry (k, l) multiplying |k><l|.
#[derive(Debug, Clone, PartialEq)]
pub struct GamowOperator {
    pole: ComplexPole,
    matrix: DMatrix<Complex64>,
}

impl GamowOperator {
    /// Build an operator, checking the matrix is square with side equal to
    /// the pole order.
    pub fn new(pole: ComplexPole, matrix: DMatrix<Complex64>) -> Result<Self> {
        let r = pole.order();
        if matrix.nrows() != r || matrix.ncols() != r {
            return Err(GamowError::DimensionMismatch(format!(
                "operator is {}x{} for pole order {}",
                matrix.nrows(),
                matrix.ncols(),
                r
            )));
        }
        Ok(Self { pole, matrix })
    }

    /// The zero operator.
    pub fn zero(pole: ComplexPole) -> Self {
        let r = pole.order();
        Self {
            pole,
            matrix: DMatrix::zeros(r, r),
        }
    }

    /// The pole this operator acts on.
    pub fn pole(&self) -> &ComplexPole {
        &self.pole
    }

    /// Underlying matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Single entry (k, l).
    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.matrix[(k, l)]
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.norm()
    }

    /// Largest entry magnitude of the difference to `other`.
    pub fn max_abs_diff(&self, other: &GamowOperator) -> f64 {
        (&self.matrix - &other.matrix)
            .iter()
            .fold(0.0f64, |m, e| m.max(e.norm()))
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .fold(0.0f64, |m, e| m.max(e.norm()))
    }

    /// Numerical rank, counting singular values above `tol` relative to the
    /// largest one.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.matrix.clone().singular_values();
        let largest = sv.iter().cloned().fold(0.0f64, f64::max);
        if largest == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > tol * largest).count()
    }
}

/// A uniform grid of times `t0 + i*dt`, all required to be >= 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    /// First time.
    pub t0: f64,
    /// Spacing between samples.
    pub dt: f64,
    /// Number of samples.
    pub steps: usize,
}

impl TimeGrid {
    /// Build a grid, checking `t0 >= 0`, `dt > 0`, `steps >= 1`.
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if !t0.is_finite() || t0 < 0.0 {
            return Err(GamowError::BadGrid(format!(
                "grid start must satisfy t >= 0, got {t0}"
            )));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(GamowError::BadGrid(format!("dt must be > 0, got {dt}")));
        }
        if steps < 1 {
            return Err(GamowError::BadGrid("steps must be >= 1".into()));
        }
        Ok(Self { t0, dt, steps })
    }

    /// Grid spanning `[t0, t_end]` inclusive with `points` samples.
    pub fn span(t0: f64, t_end: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(GamowError::BadGrid("span needs at least 2 points".into()));
        }
        if !t_end.is_finite() || t_end <= t0 {
            return Err(GamowError::BadGrid(format!(
                "span needs finite t_end > t0, got [{t0}, {t_end}]"
            )));
        }
        let dt = (t_end - t0) / (points - 1) as f64;
        Self::new(t0, dt, points)
    }

    /// The sample times.
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(move |i| self.t0 + i as f64 * self.dt)
    }
}
