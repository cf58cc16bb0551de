//! Small numeric building blocks: compensated summation, bounded values,
//! complex helpers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const EPS: f64 = f64::EPSILON;

/// Neumaier-compensated accumulator for real numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct RealSum {
    sum: f64,
    comp: f64,
    abs_total: f64,
    terms: u64,
}

impl RealSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs_total += x.abs();
        self.terms += 1;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    /// Bound on the accumulated rounding error of [`RealSum::value`].
    pub fn error_bound(&self) -> f64 {
        2.0 * EPS * self.value().abs() + 4.0 * self.terms as f64 * EPS * EPS * self.abs_total
    }
}

/// Neumaier-compensated accumulator for complex numbers.
#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexSum {
    re: RealSum,
    im: RealSum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn error_bound(&self) -> f64 {
        self.re.error_bound() + self.im.error_bound()
    }

    /// Σ |Re| + Σ |Im| over the added terms.
    pub fn abs_total(&self) -> f64 {
        self.re.abs_total + self.im.abs_total
    }
}

/// A numerical result together with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedValue {
    pub value: Complex64,
    pub abs_error: f64,
}

impl BoundedValue {
    pub fn new(value: Complex64, abs_error: f64) -> Self {
        BoundedValue { value, abs_error }
    }

    pub fn real(value: f64, abs_error: f64) -> Self {
        BoundedValue { value: Complex64::new(value, 0.0), abs_error }
    }

    /// Whether `other` lies within the error disc, optionally widened by
    /// `extra`.
    pub fn contains(&self, other: Complex64, extra: f64) -> bool {
        (self.value - other).norm() <= self.abs_error + extra
    }

    pub fn overlaps(&self, other: &BoundedValue) -> bool {
        (self.value - other.value).norm() <= self.abs_error + other.abs_error
    }

    /// Product with a value known exactly up to `rel` relative error.
    pub fn scale(&self, factor: Complex64, rel: f64) -> BoundedValue {
        let v = self.value * factor;
        BoundedValue::new(v, self.abs_error * factor.norm() + rel * v.norm())
    }
}

/// e^z − 1 without cancellation for small |z|.
pub fn expm1(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let em1 = z.re.exp_m1();
    let half = (0.5 * z.im).sin();
    Complex64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

/// n^{-s} = e^{-s log n}.
pub fn pow_neg(log_n: f64, s: Complex64) -> Complex64 {
    (-s * log_n).exp()
}

/// Ordinary least squares fit y = intercept + slope·x, returning
/// (slope, intercept, residuals, r²).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, Vec<f64>, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, intercept, residuals, r2)
}

/// A least-squares power-law fit in log–log coordinates. `exponent` is the
/// fitted slope with the sign convention of the producing routine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub exponent: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub r2: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub flags: Vec<String>,
}

impl FitReport {
    /// Fits log y = intercept + slope·log x and stores `sign · slope`.
    pub fn log_log(xs: &[f64], ys: &[f64], sign: f64) -> FitReport {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let (slope, intercept, residuals, r2) = linear_fit(&lx, &ly);
        FitReport {
            exponent: sign * slope,
            intercept,
            residuals,
            r2,
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            flags: Vec::new(),
        }
    }
}
