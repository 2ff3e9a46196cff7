//! Breit-Wigner line shape, its energy derivatives, pole-term amplitudes,
//! and sampled series with CSV interchange.
//!
//! Derivatives are taken with respect to the energy E (each is the
//! alternating-sign twin of the derivative with respect to E_R). The
//! combined shapes carry caller-supplied weights and may go negative; no
//! positivity clamp is applied.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::error::{GamowError, Result};
use crate::par;
use crate::types::ComplexPole;

/// Fixed CSV float format: 17 significant digits, enough to round-trip f64
/// and keep repeated runs byte-identical.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// A value that knows how to appear in CSV columns.
pub trait SeriesValue: Copy {
    /// Column headers for the value part, derived from the series label.
    fn headers(label: &str) -> Vec<String>;
    /// The numeric fields of one value.
    fn fields(&self) -> Vec<f64>;
    /// Rebuild a value from parsed fields.
    fn from_fields(fields: &[f64]) -> Option<Self>;
}

impl SeriesValue for f64 {
    fn headers(label: &str) -> Vec<String> {
        vec![label.to_string()]
    }
    fn fields(&self) -> Vec<f64> {
        vec![*self]
    }
    fn from_fields(fields: &[f64]) -> Option<Self> {
        (fields.len() == 1).then(|| fields[0])
    }
}

impl SeriesValue for Complex64 {
    fn headers(label: &str) -> Vec<String> {
        vec![format!("re_{label}"), format!("im_{label}")]
    }
    fn fields(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
    fn from_fields(fields: &[f64]) -> Option<Self> {
        (fields.len() == 2).then(|| Complex64::new(fields[0], fields[1]))
    }
}

/// Sampled data over a strictly increasing abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T: SeriesValue = f64> {
    x: Vec<f64>,
    y: Vec<T>,
    label: String,
}

impl<T: SeriesValue> Series<T> {
    /// Build a series, checking equal lengths and strictly increasing x.
    pub fn new(x: Vec<f64>, y: Vec<T>, label: impl Into<String>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(GamowError::BadSeries(format!(
                "{} abscissae vs {} values",
                x.len(),
                y.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GamowError::BadSeries("non-finite abscissa".into()));
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GamowError::BadSeries(
                "abscissae must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            x,
            y,
            label: label.into(),
        })
    }

    /// Abscissae.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Values.
    pub fn y(&self) -> &[T] {
        &self.y
    }

    /// Series label (used for CSV value-column headers).
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// Whether the series is empty.
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Write as CSV: header row, comma separators, LF endings, one `x`
    /// column followed by the value columns.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut header = vec!["x".to_string()];
        header.extend(T::headers(&self.label));
        writeln!(w, "{}", header.join(","))?;
        for (x, y) in self.x.iter().zip(self.y.iter()) {
            let mut fields = vec![format_float(*x)];
            fields.extend(y.fields().iter().map(|v| format_float(*v)));
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Read CSV written by [`Series::write_csv`] (or any compatible file: a
    /// header row is detected and skipped, columns are `x` then the value
    /// fields).
    pub fn read_csv<R: BufRead>(r: R, label: impl Into<String>) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line =
                line.map_err(|e| GamowError::BadSeries(format!("read failed: {e}")))?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').collect();
            let parsed: Option<Vec<f64>> =
                fields.iter().map(|f| f.trim().parse::<f64>().ok()).collect();
            match parsed {
                None if lineno == 0 => continue, // header row
                None => {
                    return Err(GamowError::BadSeries(format!(
                        "unparseable row {}: {trimmed:?}",
                        lineno + 1
                    )))
                }
                Some(nums) => {
                    if nums.is_empty() {
                        continue;
                    }
                    let value = T::from_fields(&nums[1..]).ok_or_else(|| {
                        GamowError::BadSeries(format!(
                            "row {} has {} value fields",
                            lineno + 1,
                            nums.len() - 1
                        ))
                    })?;
                    x.push(nums[0]);
                    y.push(value);
                }
            }
        }
        Self::new(x, y, label)
    }
}

/// The Laurent pole term `1 / (E - z)^m`.
pub fn pole_term(e: f64, z: Complex64, m: u32) -> Result<Complex64> {
    if m < 1 {
        return Err(GamowError::InvalidArgument("pole power must be >= 1".into()));
    }
    let d = Complex64::new(e, 0.0) - z;
    if d.norm() < 1e-300 {
        return Err(GamowError::DivergentPoint { e });
    }
    let inv = Complex64::new(1.0, 0.0) / d;
    let mut result = inv;
    for _ in 1..m {
        result *= inv;
    }
    Ok(result)
}

/// Breit-Wigner (Lorentzian) energy density, normalized to unit integral:
/// `(Gamma/2pi) / ((E - E_R)^2 + Gamma^2/4)`.
pub fn lorentzian(e: f64, e_r: f64, gamma: f64) -> f64 {
    let d = e - e_r;
    (gamma / (2.0 * PI)) / (d * d + 0.25 * gamma * gamma)
}

/// k-th derivative of [`lorentzian`] with respect to E, in closed form:
/// `-(1/pi) Im[(-1)^k k! / (E - z_R)^(k+1)]`.
pub fn lorentzian_derivative(e: f64, e_r: f64, gamma: f64, k: u32) -> f64 {
    let z = Complex64::new(e_r, -0.5 * gamma);
    let term = pole_term(e, z, k + 1).unwrap_or_else(|_| {
        // |E - z| >= Gamma/2 > 0, so the pole term cannot diverge for a
        // physical width; keep the expression total anyway
        Complex64::new(f64::INFINITY, f64::INFINITY)
    });
    let mut factorial = 1.0f64;
    for i in 2..=k as u64 {
        factorial *= i as f64;
    }
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    -(1.0 / PI) * (sign * factorial * term).im
}

/// Weighted sum of the Breit-Wigner shape and its derivatives:
/// `sum_k weights[k] * d^k/dE^k lorentzian`.
///
/// The number of weights may not exceed the pole order. The coefficients
/// tying a given density operator to its energy distribution are model
/// input, so they are deliberately caller-supplied.
pub fn higher_order_lineshape(e: f64, pole: &ComplexPole, weights: &[f64]) -> Result<f64> {
    if weights.is_empty() {
        return Err(GamowError::InvalidArgument(
            "at least one weight required".into(),
        ));
    }
    if weights.len() > pole.order() {
        return Err(GamowError::WeightLengthMismatch {
            weights: weights.len(),
            order: pole.order(),
        });
    }
    Ok(weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * lorentzian_derivative(e, pole.e_r(), pole.gamma(), k as u32))
        .sum())
}

/// Sample a scalar function on a uniform grid of `points >= 2` samples over
/// `[start, stop]`.
pub fn sample_series<F>(f: F, start: f64, stop: f64, points: usize, label: &str) -> Result<Series>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    sample_series_impl(f, start, stop, points, label, true)
}

/// Sequential twin of [`sample_series`].
pub fn sample_series_seq<F>(
    f: F,
    start: f64,
    stop: f64,
    points: usize,
    label: &str,
) -> Result<Series>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    sample_series_impl(f, start, stop, points, label, false)
}

fn sample_series_impl<F>(
    f: F,
    start: f64,
    stop: f64,
    points: usize,
    label: &str,
    parallel: bool,
) -> Result<Series>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if points < 2 {
        return Err(GamowError::BadGrid(format!(
            "need at least 2 points, got {points}"
        )));
    }
    if !start.is_finite() || !stop.is_finite() || stop <= start {
        return Err(GamowError::BadGrid(format!(
            "need finite stop > start, got [{start}, {stop}]"
        )));
    }
    let dx = (stop - start) / (points - 1) as f64;
    let x: Vec<f64> = (0..points).map(|i| start + i as f64 * dx).collect();
    let y: Vec<f64> = if parallel {
        par::map_indexed(points, |i| f(x[i]))
    } else {
        par::map_indexed_seq(points, |i| f(x[i]))
    };
    Series::new(x, y, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature, the independent integration oracle.
    fn adaptive_simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, m, left, 0.5 * tol, depth - 1)
                    + recurse(f, m, b, right, 0.5 * tol, depth - 1)
            }
        }
        let whole = simpson(&f, a, b);
        recurse(&f, a, b, whole, tol, 48)
    }

    /// Central finite-difference of 4th-order accuracy for derivatives up
    /// to k = 4, the independent differentiation oracle.
    fn finite_difference<F: Fn(f64) -> f64>(f: F, x: f64, k: u32, h: f64) -> f64 {
        let stencil: (&[f64], &[f64]) = match k {
            1 => (&[-2.0, -1.0, 1.0, 2.0], &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0]),
            2 => (
                &[-2.0, -1.0, 0.0, 1.0, 2.0],
                &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
            ),
            3 => (
                &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0],
                &[1.0 / 8.0, -1.0, 13.0 / 8.0, -13.0 / 8.0, 1.0, -1.0 / 8.0],
            ),
            4 => (
                &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
                &[-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0],
            ),
            _ => panic!("unsupported order"),
        };
        let sum: f64 = stencil
            .0
            .iter()
            .zip(stencil.1.iter())
            .map(|(&o, &c)| c * f(x + o * h))
            .sum();
        sum / h.powi(k as i32)
    }

    #[test]
    fn pole_term_examples() {
        let z = Complex64::new(1.0, -0.5);
        let v = pole_term(1.5, z, 1).unwrap();
        assert!((v - Complex64::new(1.0, -1.0)).norm() <= 1e-15);

        let v = pole_term(1.0, z, 1).unwrap();
        assert!((v - Complex64::new(0.0, -2.0)).norm() <= 1e-15);

        let v2 = pole_term(1.5, z, 2).unwrap();
        assert!((v2 - Complex64::new(0.0, -2.0)).norm() <= 1e-14);
        // square of the first-power value
        let v1 = pole_term(1.5, z, 1).unwrap();
        assert!((v2 - v1 * v1).norm() <= 1e-15);
    }

    #[test]
    fn pole_term_divergence_guard() {
        let z = Complex64::new(1.0, 0.0);
        assert!(matches!(
            pole_term(1.0, z, 1),
            Err(GamowError::DivergentPoint { .. })
        ));
        assert!(pole_term(1.0, Complex64::new(1.0, -1e-200), 1).is_ok());
    }

    #[test]
    fn lorentzian_peak_and_half_width() {
        assert_relative_eq!(lorentzian(0.0, 0.0, 1.0), 2.0 / PI);
        assert_relative_eq!(lorentzian(2.0, 2.0, 0.3), 2.0 / (PI * 0.3));
        // half maximum at E_R +/- Gamma/2
        for &(er, g) in &[(1.0, 1.0), (0.0, 0.5), (-2.0, 3.0)] {
            assert_relative_eq!(lorentzian(er + 0.5 * g, er, g), 1.0 / (PI * g));
            assert_relative_eq!(lorentzian(er - 0.5 * g, er, g), 1.0 / (PI * g));
        }
    }

    #[test]
    fn lorentzian_matches_pole_term_form() {
        // -(1/pi) Im[1/(E - z_R)] is the same function
        for &e in &[-1.0, 0.3, 1.0, 1.7, 5.0] {
            let z = Complex64::new(1.0, -0.35);
            let via_pole = -(1.0 / PI) * pole_term(e, z, 1).unwrap().im;
            assert_relative_eq!(lorentzian(e, 1.0, 0.7), via_pole, max_relative = 1e-14);
        }
    }

    #[test]
    fn lorentzian_integrates_to_one() {
        // exact integral over [E_R - w, E_R + w] is (2/pi) atan(2w/Gamma);
        // the 200-Gamma window therefore sits 1/(100 pi) below 1, just
        // outside 1e-3, while a 700-Gamma window is comfortably inside
        let (er, g) = (1.0, 1.0);
        let f = |e: f64| lorentzian(e, er, g);

        let wide = adaptive_simpson(f, er - 700.0 * g, er + 700.0 * g, 1e-10);
        assert!((wide - 1.0).abs() <= 1e-3, "700-Gamma window: {wide}");

        let window = adaptive_simpson(f, er - 200.0 * g, er + 200.0 * g, 1e-10);
        let exact = (2.0 / PI) * (400.0f64).atan();
        assert!((window - exact).abs() <= 1e-9, "quadrature vs closed form");
        assert!((window - 1.0).abs() <= 2e-3, "200-Gamma window: {window}");
    }

    #[test]
    fn derivative_zero_is_lorentzian() {
        for &e in &[0.0, 0.5, 1.0, 2.5] {
            assert_eq!(
                lorentzian_derivative(e, 1.0, 1.0, 0),
                lorentzian(e, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn derivative_vanishes_at_peak() {
        assert!(lorentzian_derivative(1.0, 1.0, 1.0, 1).abs() <= 1e-15);
        assert!(lorentzian_derivative(-3.0, -3.0, 0.4, 1).abs() <= 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (er, g) = (1.0, 1.0);
        let f = |e: f64| lorentzian(e, er, g);
        // step sizes tuned per order against the 4th-order stencils; the
        // comparison is relative to the natural magnitude k!/(pi |E-z|^{k+1})
        // because individual derivatives pass through zeros (k = 3 does at
        // E = 1.5, where E - z has argument pi/4)
        let steps = [0.0, 1e-3, 1e-3, 3e-3, 4e-3];
        for &e in &[0.2, 0.8, 1.5, 2.4] {
            let dist = Complex64::new(e - er, 0.5 * g).norm();
            for k in 1..=4u32 {
                let closed = lorentzian_derivative(e, er, g, k);
                let fd = finite_difference(f, e, k, steps[k as usize]);
                let mut scale = 1.0 / (PI * dist.powi(k as i32 + 1));
                for i in 2..=k as u64 {
                    scale *= i as f64;
                }
                assert!(
                    (closed - fd).abs() <= 1e-6 * scale,
                    "k = {k}, E = {e}: closed {closed} vs fd {fd} (scale {scale})"
                );
            }
        }

        // the first derivative away from symmetry points is also a clean
        // relative match
        let closed = lorentzian_derivative(1.5, er, g, 1);
        let fd = finite_difference(f, 1.5, 1, 1e-3);
        assert_relative_eq!(closed, fd, max_relative = 1e-6);
    }

    #[test]
    fn pole_term_is_the_z_derivative_ladder() {
        // 1/(E-z)^{k+1} = (1/k!) d^k/dz^k [1/(E-z)], checked against central
        // finite differences of the first-power term along the real z axis
        let stencils: [(&[f64], &[f64]); 4] = [
            (&[-2.0, -1.0, 1.0, 2.0], &[1.0 / 12.0, -8.0 / 12.0, 8.0 / 12.0, -1.0 / 12.0]),
            (
                &[-2.0, -1.0, 0.0, 1.0, 2.0],
                &[-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0],
            ),
            (
                &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0],
                &[1.0 / 8.0, -1.0, 13.0 / 8.0, -13.0 / 8.0, 1.0, -1.0 / 8.0],
            ),
            (
                &[-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0],
                &[-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0],
            ),
        ];
        let z = Complex64::new(1.0, -0.5);
        for &e in &[0.2, 1.5, 2.7] {
            // step proportional to the pole distance balances truncation
            // against roundoff uniformly in E
            let h = 0.01 * (Complex64::new(e, 0.0) - z).norm();
            let mut factorial = 1.0;
            for k in 1..=4u32 {
                factorial *= k as f64;
                let (offsets, coeffs) = stencils[(k - 1) as usize];
                let fd: Complex64 = offsets
                    .iter()
                    .zip(coeffs.iter())
                    .map(|(&o, &c)| pole_term(e, z + Complex64::new(o * h, 0.0), 1).unwrap() * c)
                    .sum::<Complex64>()
                    / h.powi(k as i32);
                let closed = pole_term(e, z, k + 1).unwrap() * factorial;
                assert!(
                    (closed - fd).norm() <= 1e-6 * closed.norm(),
                    "k = {k}, E = {e}: {closed} vs {fd}"
                );
            }
        }
    }

    #[test]
    fn derivative_parity_about_resonance() {
        let (er, g) = (0.7, 1.3);
        for &dx in &[0.1, 0.6, 1.9] {
            for k in 0..=4u32 {
                let plus = lorentzian_derivative(er + dx, er, g, k);
                let minus = lorentzian_derivative(er - dx, er, g, k);
                if k % 2 == 0 {
                    assert!((plus - minus).abs() <= 1e-12 * plus.abs().max(1.0));
                } else {
                    assert!((plus + minus).abs() <= 1e-12 * plus.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn combined_shape_reduces_to_lorentzian() {
        let p = ComplexPole::new(1.0, 1.0, 2).unwrap();
        for &e in &[0.0, 1.0, 1.5] {
            assert_eq!(
                higher_order_lineshape(e, &p, &[1.0]).unwrap(),
                lorentzian(e, 1.0, 1.0)
            );
        }
        let p4 = ComplexPole::new(1.0, 1.0, 4).unwrap();
        for &e in &[0.0, 1.0, 1.5] {
            assert_eq!(
                higher_order_lineshape(e, &p4, &[1.0, 0.0, 0.0]).unwrap(),
                lorentzian(e, 1.0, 1.0)
            );
        }
    }

    #[test]
    fn combined_shape_unit_weight_rule() {
        // weight vector e_k picks out exactly the k-th derivative
        let p = ComplexPole::new(1.0, 1.0, 4).unwrap();
        for k in 0..4usize {
            let mut w = vec![0.0; k + 1];
            w[k] = 1.0;
            for &e in &[0.3, 1.0, 2.2] {
                assert_eq!(
                    higher_order_lineshape(e, &p, &w).unwrap(),
                    lorentzian_derivative(e, 1.0, 1.0, k as u32)
                );
            }
        }
    }

    #[test]
    fn combined_shape_integral_stays_normalized() {
        // derivative terms integrate to zero, so weights (1, 0.2) keep the
        // wide-window integral at 1
        let p = ComplexPole::new(1.0, 1.0, 2).unwrap();
        let f = |e: f64| higher_order_lineshape(e, &p, &[1.0, 0.2]).unwrap();
        let integral = adaptive_simpson(f, 1.0 - 700.0, 1.0 + 700.0, 1e-10);
        assert!((integral - 1.0).abs() <= 1e-3, "integral {integral}");
    }

    #[test]
    fn combined_shape_rejects_excess_weights() {
        let p = ComplexPole::new(1.0, 1.0, 2).unwrap();
        assert!(matches!(
            higher_order_lineshape(1.0, &p, &[1.0, 0.5, 0.1]),
            Err(GamowError::WeightLengthMismatch { .. })
        ));
        assert!(matches!(
            higher_order_lineshape(1.0, &p, &[]),
            Err(GamowError::InvalidArgument(_))
        ));
    }

    #[test]
    fn sampling_examples() {
        let s = sample_series(|_| 1.0, 0.0, 1.0, 3, "const").unwrap();
        assert_eq!(s.y(), &[1.0, 1.0, 1.0]);

        let s = sample_series(|x| x, 0.0, 2.0, 3, "id").unwrap();
        assert_eq!(s.x(), &[0.0, 1.0, 2.0]);
        assert_eq!(s.y(), &[0.0, 1.0, 2.0]);

        assert!(matches!(
            sample_series(|x| x, 0.0, 1.0, 1, "bad"),
            Err(GamowError::BadGrid(_))
        ));
        assert!(matches!(
            sample_series(|x| x, 1.0, 1.0, 5, "bad"),
            Err(GamowError::BadGrid(_))
        ));
    }

    #[test]
    fn sampling_locates_the_peak() {
        let (er, g) = (1.3, 0.4);
        let s = sample_series(|e| lorentzian(e, er, g), -1.0, 4.0, 2001, "bw").unwrap();
        let (argmax, _) = s
            .x()
            .iter()
            .zip(s.y().iter())
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let dx = 5.0 / 2000.0;
        assert!((argmax - er).abs() <= dx);
    }

    #[test]
    fn sampling_sequential_matches_parallel() {
        let a = sample_series(|x| x * x, 0.0, 3.0, 1000, "sq").unwrap();
        let b = sample_series_seq(|x| x * x, 0.0, 3.0, 1000, "sq").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_round_trip() {
        let s = sample_series(|e| lorentzian(e, 1.0, 1.0), 0.0, 2.0, 5, "bw").unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,bw\n"));
        assert!(!text.contains('\r'));

        let back = Series::<f64>::read_csv(buf.as_slice(), "bw").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_complex_columns() {
        let s = Series::new(
            vec![0.0, 1.0],
            vec![Complex64::new(1.0, -2.0), Complex64::new(0.5, 0.25)],
            "amp",
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,re_amp,im_amp\n"));
        let back = Series::<Complex64>::read_csv(buf.as_slice(), "amp").unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn series_validation() {
        assert!(Series::new(vec![0.0, 0.0], vec![1.0, 2.0], "s").is_err());
        assert!(Series::new(vec![1.0, 0.0], vec![1.0, 2.0], "s").is_err());
        assert!(Series::new(vec![0.0], vec![1.0, 2.0], "s").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn lorentzian_positive_and_even(
            er_ticks in -3072i32..3072,
            gamma in 0.05f64..5.0,
            dx_ticks in 0i32..10240,
        ) {
            // lattice-valued inputs keep er + dx and er - dx exact, so the
            // displacement is identical on both sides and evenness holds
            // bit for bit
            let er = er_ticks as f64 / 1024.0;
            let dx = dx_ticks as f64 / 1024.0;
            let plus = lorentzian(er + dx, er, gamma);
            let minus = lorentzian(er - dx, er, gamma);
            prop_assert!(plus > 0.0);
            prop_assert_eq!(plus, minus);
        }

        #[test]
        fn pole_term_power_law(
            e in -5.0f64..5.0,
            re in -3.0f64..3.0,
            im in -3.0f64..-0.05,
            m in 1u32..5,
        ) {
            let z = Complex64::new(re, im);
            let v1 = pole_term(e, z, 1).unwrap();
            let vm = pole_term(e, z, m).unwrap();
            let mut want = Complex64::new(1.0, 0.0);
            for _ in 0..m {
                want *= v1;
            }
            prop_assert!((vm - want).norm() <= 1e-12 * want.norm().max(1e-300));
        }
    }
}
