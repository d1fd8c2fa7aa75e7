//! Non-negative bounded observables `f: [0, 1) → ℝ₊` and their integrals,
//! circle autocorrelations and Fourier coefficients.
//!
//! Step and polynomial observables use closed forms throughout; tabulated
//! observables fall back to quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dynamics::MeasureSpec;
use crate::numeric::{cis_turns, frac, frac_mul, gauss_legendre, midpoint};
use crate::poly::Polynomial;
use crate::{Error, Result};

/// Panels for the composite midpoint rule used on tabulated observables.
pub const QUADRATURE_PANELS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Value `values[i]` on `[breaks[i], breaks[i+1])`, zero elsewhere.
    Step {
        breaks: Vec<f64>,
        values: Vec<f64>,
    },
    Polynomial(Polynomial),
    /// Samples on the uniform grid `i/(n-1)`, linearly interpolated.
    Tabulated {
        samples: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    shape: Shape,
    /// Declared total variation, carried as metadata only.
    pub declared_bounded_variation: Option<f64>,
}

impl Observable {
    pub fn identity() -> Self {
        Observable::from_shape(Shape::Polynomial(Polynomial::identity()))
    }

    pub fn constant(c: f64) -> Result<Self> {
        Observable::step(vec![0.0, 1.0], vec![c])
    }

    /// `χ_{[a, b)}`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Observable::step(vec![a, b], vec![1.0])
    }

    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || values.len() + 1 != breaks.len() {
            return Err(Error::argument(format!(
                "step observable needs n+1 breaks for n values, got {} and {}",
                breaks.len(),
                values.len()
            )));
        }
        if breaks.iter().any(|b| !(0.0..=1.0).contains(b)) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::argument(
                "step breakpoints must be strictly increasing in [0, 1]",
            ));
        }
        check_values(&values)?;
        Ok(Observable::from_shape(Shape::Step { breaks, values }))
    }

    /// Polynomial with ascending coefficients; must be non-negative on `[0, 1]`.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::argument("polynomial coefficients must be finite"));
        }
        let p = Polynomial::new(coeffs);
        let grid = 4096;
        for i in 0..=grid {
            let x = i as f64 / grid as f64;
            if p.eval(x) < -1e-12 {
                return Err(Error::argument(format!("polynomial is negative at x = {x}")));
            }
        }
        Ok(Observable::from_shape(Shape::Polynomial(p)))
    }

    pub fn tabulated(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::argument("tabulated observable needs >= 2 samples"));
        }
        check_values(&samples)?;
        Ok(Observable::from_shape(Shape::Tabulated { samples }))
    }

    pub fn with_declared_variation(mut self, v: f64) -> Self {
        self.declared_bounded_variation = Some(v);
        self
    }

    fn from_shape(shape: Shape) -> Self {
        Observable {
            shape,
            declared_bounded_variation: None,
        }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        match &self.shape {
            Shape::Polynomial(p) => Some(p),
            _ => None,
        }
    }

    /// `f(x)` for `x ∈ [0, 1]`; step breakpoints take the right-limit value.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Step { breaks, values } => {
                if x < breaks[0] || x >= *breaks.last().unwrap() {
                    return 0.0;
                }
                let i = breaks.partition_point(|&b| b <= x) - 1;
                values[i]
            }
            Shape::Polynomial(p) => p.eval(x),
            Shape::Tabulated { samples } => {
                let n = samples.len() - 1;
                let s = (x * n as f64).clamp(0.0, n as f64);
                let i = (s.floor() as usize).min(n - 1);
                let t = s - i as f64;
                samples[i] * (1.0 - t) + samples[i + 1] * t
            }
        }
    }

    /// `f(x)`, rejecting negative or non-finite values.
    pub fn checked_eval(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if !v.is_finite() || v < -1e-12 {
            return Err(Error::Evaluation(format!("f({x}) = {v}")));
        }
        Ok(v.max(0.0))
    }

    /// `∫_a^b f^power dx` for `0 ≤ a ≤ b ≤ 1` and `power ∈ {1, 2}`.
    pub fn segment_integral(&self, a: f64, b: f64, power: u32) -> f64 {
        if b <= a {
            return 0.0;
        }
        match &self.shape {
            Shape::Step { breaks, values } => breaks
                .windows(2)
                .zip(values)
                .map(|(w, &v)| {
                    let len = (b.min(w[1]) - a.max(w[0])).max(0.0);
                    len * v.powi(power as i32)
                })
                .sum(),
            Shape::Polynomial(p) => {
                if power == 1 {
                    p.integrate(a, b)
                } else {
                    (p * p).integrate(a, b)
                }
            }
            Shape::Tabulated { samples } => {
                let n = samples.len() - 1;
                tabulated_pieces(n, a, b)
                    .map(|(lo, hi)| gauss_legendre(lo, hi, |x| self.eval(x).powi(power as i32)))
                    .sum()
            }
        }
    }

    /// `∫ f dη`.
    pub fn integrate(&self, measure: &MeasureSpec) -> f64 {
        self.integrate_power(measure, 1)
    }

    /// `∫ f² dη`.
    pub fn integrate_square(&self, measure: &MeasureSpec) -> f64 {
        self.integrate_power(measure, 2)
    }

    fn integrate_power(&self, measure: &MeasureSpec, power: u32) -> f64 {
        match measure {
            MeasureSpec::Lebesgue => match &self.shape {
                Shape::Tabulated { .. } => midpoint(0.0, 1.0, QUADRATURE_PANELS, |x| self.eval(x).powi(power as i32)),
                _ => self.segment_integral(0.0, 1.0, power),
            },
            MeasureSpec::AtomicOrbit { q, w } => {
                let q = *q;
                (0..q)
                    .map(|k| self.eval(frac(w + k as f64 / q as f64)).powi(power as i32))
                    .sum::<f64>()
                    / q as f64
            }
            MeasureSpec::TransferStationary(h) => {
                let n = h.bins();
                h.values()
                    .iter()
                    .enumerate()
                    .map(|(i, &hv)| hv * self.segment_integral(i as f64 / n as f64, (i + 1) as f64 / n as f64, power))
                    .sum()
            }
        }
    }

    /// Averages of `f` and of `f·φ` over `[a, b]`, where `φ(x) = (2x - a - b)/(b - a)`
    /// is the first Legendre polynomial on the cell.
    pub fn cell_moments(&self, a: f64, b: f64) -> (f64, f64) {
        let width = b - a;
        let mid = 0.5 * (a + b);
        let phi = |x: f64| 2.0 * (x - mid) / width;
        match &self.shape {
            Shape::Step { breaks, values } => {
                let mut m0 = 0.0;
                let mut m1 = 0.0;
                for (w, &v) in breaks.windows(2).zip(values) {
                    let lo = a.max(w[0]);
                    let hi = b.min(w[1]);
                    if hi > lo {
                        m0 += v * (hi - lo);
                        // ∫ φ = (φ(hi)² - φ(lo)²) · width / 4
                        m1 += v * (phi(hi).powi(2) - phi(lo).powi(2)) * width / 4.0;
                    }
                }
                (m0 / width, m1 / width)
            }
            Shape::Polynomial(p) => {
                let lin = Polynomial::new(vec![-2.0 * mid / width, 2.0 / width]);
                (p.integrate(a, b) / width, (p * &lin).integrate(a, b) / width)
            }
            Shape::Tabulated { samples } => {
                let n = samples.len() - 1;
                let (mut m0, mut m1) = (0.0, 0.0);
                for (lo, hi) in tabulated_pieces(n, a, b) {
                    m0 += gauss_legendre(lo, hi, |x| self.eval(x));
                    m1 += gauss_legendre(lo, hi, |x| self.eval(x) * phi(x));
                }
                (m0 / width, m1 / width)
            }
        }
    }

    /// `∫ f({x - t}) f(x) dx`, the autocorrelation of `f` on the circle.
    pub fn circle_autocorrelation(&self, t: f64) -> f64 {
        let t = frac(t);
        match &self.shape {
            Shape::Step { breaks, values } => {
                let mut total = 0.0;
                for (wi, &vi) in breaks.windows(2).zip(values) {
                    for (wj, &vj) in breaks.windows(2).zip(values) {
                        let len = circle_overlap(wi[0], wi[1], wj[0] + t, wj[1] + t);
                        total += vi * vj * len;
                    }
                }
                total
            }
            Shape::Polynomial(p) => {
                // x ∈ [0, t): {x - t} = x - t + 1;  x ∈ [t, 1): {x - t} = x - t.
                let head = p * &p.shift(1.0 - t);
                let tail = p * &p.shift(-t);
                head.integrate(0.0, t) + tail.integrate(t, 1.0)
            }
            Shape::Tabulated { .. } => midpoint(0.0, 1.0, QUADRATURE_PANELS, |x| self.eval(frac(x - t)) * self.eval(x)),
        }
    }

    /// `f̂(m) = ∫ f(x) e^{-2πimx} dx`.
    pub fn fourier_coefficient(&self, m: i64) -> Complex64 {
        if m == 0 {
            return Complex64::new(self.integrate(&MeasureSpec::Lebesgue), 0.0);
        }
        let c = Complex64::new(0.0, -2.0 * PI * m as f64);
        match &self.shape {
            Shape::Step { breaks, values } => {
                let e = |x: f64| {
                    let (co, si) = cis_turns(-frac_mul(m, x));
                    Complex64::new(co, si)
                };
                breaks
                    .windows(2)
                    .zip(values)
                    .map(|(w, &v)| v * (e(w[1]) - e(w[0])) / c)
                    .sum()
            }
            Shape::Polynomial(p) => {
                // I_j = ∫ x^j e^{cx}: I_0 = 0 (m ≠ 0), I_j = (1 - j I_{j-1}) / c.
                let mut prev = Complex64::new(0.0, 0.0);
                let mut total = Complex64::new(0.0, 0.0);
                for (j, &a) in p.coeffs().iter().enumerate() {
                    let cur = if j == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        (Complex64::new(1.0, 0.0) - j as f64 * prev) / c
                    };
                    total += a * cur;
                    prev = cur;
                }
                total
            }
            Shape::Tabulated { .. } => {
                let h = 1.0 / QUADRATURE_PANELS as f64;
                (0..QUADRATURE_PANELS)
                    .map(|i| {
                        let x = (i as f64 + 0.5) * h;
                        let (co, si) = cis_turns(-(m as f64 * x));
                        self.eval(x) * Complex64::new(co, si)
                    })
                    .sum::<Complex64>()
                    * h
            }
        }
    }

    /// Orbit samples `f({y + k·p/q})`, `k = 0, …, q-1`: entry `k` is `f` after `k`
    /// steps of `T_{p/q}` started at `y`.
    pub fn cyclic_samples(&self, p: u64, q: u64, y: f64) -> Result<Vec<f64>> {
        if q == 0 {
            return Err(Error::argument("cyclic samples need q >= 1"));
        }
        (0..q)
            .map(|k| {
                let r = ((k as u128 * p as u128) % q as u128) as f64;
                self.checked_eval(frac(y + r / q as f64))
            })
            .collect()
    }

    /// `‖f‖_∞` (grid maximum for polynomials).
    pub fn sup_norm(&self) -> f64 {
        match &self.shape {
            Shape::Step { values, .. } => values.iter().cloned().fold(0.0, f64::max),
            Shape::Tabulated { samples } => samples.iter().cloned().fold(0.0, f64::max),
            Shape::Polynomial(p) => (0..=8192).map(|i| p.eval(i as f64 / 8192.0)).fold(0.0, f64::max),
        }
    }

    /// `max |f - g|` on the grid `i/points`, `i = 0, …, points - 1`.
    pub fn sup_distance(&self, other: &Observable, points: usize) -> f64 {
        (0..points)
            .map(|i| {
                let x = i as f64 / points as f64;
                (self.eval(x) - other.eval(x)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `sup f - inf f` over the closed interval `[a, b] ⊂ [0, 1]`.
    pub fn oscillation(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = match &self.shape {
            Shape::Step { breaks, values } => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut push = |v: f64| {
                    lo = lo.min(v);
                    hi = hi.max(v);
                };
                if a < breaks[0] || b >= *breaks.last().unwrap() {
                    push(0.0);
                }
                for (w, &v) in breaks.windows(2).zip(values) {
                    if w[0] <= b && a < w[1] {
                        push(v);
                    }
                }
                (lo, hi)
            }
            Shape::Polynomial(p) => {
                let pts = 64;
                (0..=pts)
                    .map(|i| p.eval(a + (b - a) * i as f64 / pts as f64))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)))
            }
            Shape::Tabulated { samples } => {
                let n = samples.len() - 1;
                let mut vals = vec![self.eval(a), self.eval(b)];
                vals.extend(
                    (0..=n)
                        .map(|i| i as f64 / n as f64)
                        .filter(|&x| x > a && x < b)
                        .map(|x| self.eval(x)),
                );
                vals.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)))
            }
        };
        if hi >= lo {
            hi - lo
        } else {
            0.0
        }
    }

    /// Total variation of `f` viewed as a function on the circle (the jump
    /// between `f(1⁻)` and `f(0)` included).
    pub fn circle_variation(&self) -> f64 {
        match &self.shape {
            Shape::Step { breaks, values } => {
                let mut seq = Vec::with_capacity(values.len() + 2);
                if breaks[0] > 0.0 {
                    seq.push(0.0);
                }
                seq.extend_from_slice(values);
                if *breaks.last().unwrap() < 1.0 {
                    seq.push(0.0);
                }
                let n = seq.len();
                (0..n).map(|i| (seq[(i + 1) % n] - seq[i]).abs()).sum()
            }
            Shape::Polynomial(p) => {
                let pts = 8192;
                let inner: f64 = (0..pts)
                    .map(|i| (p.eval((i + 1) as f64 / pts as f64) - p.eval(i as f64 / pts as f64)).abs())
                    .sum();
                inner + (p.eval(1.0) - p.eval(0.0)).abs()
            }
            Shape::Tabulated { samples } => {
                let inner: f64 = samples.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
                inner + (samples[samples.len() - 1] - samples[0]).abs()
            }
        }
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::argument("observable values must be finite and >= 0"));
    }
    Ok(())
}

/// Splits `[a, b]` at the interpolation nodes `i/n`.
fn tabulated_pieces(n: usize, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let first = (a * n as f64).floor() as usize;
    let last = ((b * n as f64).ceil() as usize).min(n);
    (first..last).filter_map(move |i| {
        let lo = a.max(i as f64 / n as f64);
        let hi = b.min((i + 1) as f64 / n as f64);
        (hi > lo).then_some((lo, hi))
    })
}

/// Length of `[a, b) ∩ ([c, d) mod 1)` for `[a, b) ⊂ [0, 1]` and `0 ≤ c < 2`.
fn circle_overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let seg = |lo: f64, hi: f64| (b.min(hi) - a.max(lo)).max(0.0);
    seg(c, d) + seg(c - 1.0, d - 1.0)
}
